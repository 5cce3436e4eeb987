// SPDX-License-Identifier: Apache-2.0

//! Test support: brute-force oracles and input generators. Enabled by the
//! `testing` feature; not part of the production surface.

pub mod oracles;
pub mod strategies;
