// SPDX-License-Identifier: Apache-2.0

//! Verdict bookkeeping for the acceptance suite in `tests/acceptance.rs`.

use std::time::{Duration, Instant};

/// Outcome of one numbered criterion.
#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub id: u32,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
}

impl Verdict {
    /// `PASS [n] title (1.23s): detail`
    pub fn line(&self) -> String {
        format!(
            "{} [{}] {} ({:.2}s): {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            self.elapsed.as_secs_f64(),
            self.detail
        )
    }
}

/// Runs `check`, timing it. `Ok` carries the measured evidence, `Err` the
/// reason for failure.
pub fn judge(id: u32, title: &'static str, check: impl FnOnce() -> Result<String, String>) -> Verdict {
    let started = Instant::now();
    let (passed, detail) = match check() {
        Ok(d) => (true, d),
        Err(d) => (false, d),
    };
    Verdict { id, title, passed, detail, elapsed: started.elapsed() }
}

/// `Err(msg)` unless `cond`.
pub fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}
