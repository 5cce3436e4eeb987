// SPDX-License-Identifier: Apache-2.0

//! Announcement and discovery service.
//!
//! Endpoints `POST /announce` themselves with a secret key; anyone may
//! `GET /discover` the records announced within the last `ttl_s` seconds.

mod http;
mod keys;
mod state;

pub use http::{router, serve};
pub use keys::{KeyTable, KeyTableError};
pub use state::{service_id, Clock, ManualClock, Registry, RegistryError, SystemClock, DEFAULT_TTL_S};
