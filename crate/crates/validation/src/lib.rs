// SPDX-License-Identifier: MIT
//! Bookkeeping for the acceptance run: each check yields a [`Verdict`], which
//! is printed as one `PASS`/`FAIL` line with its measured evidence and wall
//! time, and the run fails at the end if any verdict failed.

use std::fmt;
use std::time::{Duration, Instant};

/// Outcome of one acceptance check.
#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub id: u32,
    pub title: &'static str,
    pub passed: bool,
    /// Measured quantities backing the verdict, one entry per sub-check.
    pub evidence: Vec<String>,
    pub elapsed: Duration,
    /// Wall-time budget for the check; exceeding it is reported, not failed.
    pub budget: Duration,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed { "PASS" } else { "FAIL" };
        let over = if self.elapsed > self.budget { " OVER BUDGET" } else { "" };
        write!(
            f,
            "{status} criterion {} ({}) [{:.1}s / budget {}s{over}]",
            self.id,
            self.title,
            self.elapsed.as_secs_f64(),
            self.budget.as_secs()
        )?;
        for e in &self.evidence {
            write!(f, "\n    {e}")?;
        }
        Ok(())
    }
}

/// Collects evidence for one check; sub-checks are combined with logical and.
#[derive(Debug)]
pub struct Check {
    passed: bool,
    evidence: Vec<String>,
}

impl Check {
    /// Record a sub-check with its evidence line.
    pub fn expect(&mut self, ok: bool, evidence: impl Into<String>) {
        let mark = if ok { "ok  " } else { "FAIL" };
        self.evidence.push(format!("{mark} {}", evidence.into()));
        self.passed &= ok;
    }

    /// Record an informational line that does not affect the verdict.
    pub fn note(&mut self, evidence: impl Into<String>) {
        self.evidence.push(format!("note {}", evidence.into()));
    }
}

/// Run `body` as check `id`, timing it and printing the verdict immediately.
pub fn run_check(id: u32, title: &'static str, budget_secs: u64, body: impl FnOnce(&mut Check)) -> Verdict {
    let start = Instant::now();
    let mut check = Check { passed: true, evidence: Vec::new() };
    body(&mut check);
    let verdict = Verdict {
        id,
        title,
        passed: check.passed,
        evidence: check.evidence,
        elapsed: start.elapsed(),
        budget: Duration::from_secs(budget_secs),
    };
    println!("{verdict}");
    verdict
}

/// One-line summary of a run: `passed/total` and the failing ids.
pub fn summary(verdicts: &[Verdict]) -> String {
    let failed: Vec<String> = verdicts.iter().filter(|v| !v.passed).map(|v| v.id.to_string()).collect();
    let passed = verdicts.len() - failed.len();
    if failed.is_empty() {
        format!("acceptance: {passed}/{} criteria passed", verdicts.len())
    } else {
        format!("acceptance: {passed}/{} criteria passed; failing: {}", verdicts.len(), failed.join(", "))
    }
}
