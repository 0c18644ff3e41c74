use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::BoundaryChoice;
use crate::error::Result;
use crate::linalg::Mat;
use crate::mps::StateVector;
use crate::oracle::{verify_reduction, Verdict};
use crate::tabular::Table;

/// One measurement of a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Step {
    /// Original site index.
    pub site: usize,
    pub meas: String,
    pub outcome: String,
    pub prob: f64,
}

/// Relabelling applied to a column after a measurement, by original site.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Byproduct {
    pub site: usize,
    pub op: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReductionTrace {
    pub protocol: String,
    pub params: Vec<(String, f64)>,
    pub seed: Option<u64>,
    pub n: usize,
    pub boundary: BoundaryChoice,
    pub steps: Vec<Step>,
    /// Original indices of the sites that survive as target columns.
    pub surviving: Vec<usize>,
    pub consumed: usize,
    pub byproducts: Vec<Byproduct>,
    pub walk_steps: usize,
    pub retries: usize,
    pub incomplete: bool,
    /// Table the run started from, boundaries included.
    pub original: Table,
    pub final_table: Table,
    /// Tuple every surviving column should be a multiple of.
    pub target: Vec<Mat>,
    pub verdict: Option<Verdict>,
}

impl ReductionTrace {
    pub(crate) fn finish(mut self, verify: bool) -> Result<Self> {
        self.surviving = self.final_table.surviving_sites();
        self.consumed = self.n - self.surviving.len();
        if verify {
            self.verify_with(None)?;
        }
        Ok(self)
    }

    /// Checks the run with the brute-force oracle and stores the verdict.
    /// `cached` may hold the expansion of `original`.
    pub fn verify_with(&mut self, cached: Option<&StateVector>) -> Result<&Verdict> {
        let target = self.target.clone();
        let v = verify_reduction(&self.original, &self.final_table, &|_| target.clone(), cached)?;
        Ok(self.verdict.insert(v))
    }

    pub fn passed(&self) -> bool {
        self.verdict.as_ref().is_some_and(|v| v.pass)
    }

    pub fn surviving_count(&self) -> usize {
        self.surviving.len()
    }

    /// Deterministic text form, one record per line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "protocol {}", self.protocol);
        for (k, v) in &self.params {
            let _ = writeln!(out, "param {} {}", k, fmt_num(*v));
        }
        match self.seed {
            Some(s) => {
                let _ = writeln!(out, "seed {s}");
            }
            None => out.push_str("seed none\n"),
        }
        let _ = writeln!(out, "n {}", self.n);
        match &self.boundary {
            BoundaryChoice::Fixed => out.push_str("boundary fixed\n"),
            BoundaryChoice::Mixed { left, right } => {
                let _ = writeln!(out, "boundary mixed {left} {right}");
            }
        }
        for s in &self.steps {
            let _ = writeln!(out, "step {} {} {} {}", s.site, s.meas, s.outcome, fmt_num(s.prob));
        }
        let surv: Vec<String> = self.surviving.iter().map(|s| s.to_string()).collect();
        let _ = writeln!(out, "surviving {}", surv.join(" "));
        let _ = writeln!(out, "consumed {}", self.consumed);
        for b in &self.byproducts {
            let _ = writeln!(out, "byproduct {} {}", b.site, b.op);
        }
        let _ = writeln!(out, "walk_steps {}", self.walk_steps);
        let _ = writeln!(out, "retries {}", self.retries);
        let _ = writeln!(out, "incomplete {}", self.incomplete);
        out.push_str("final\n");
        for line in self.final_table.render().lines() {
            let _ = writeln!(out, "  {line}");
        }
        match &self.verdict {
            Some(v) => {
                let _ = writeln!(
                    out,
                    "verdict {} fidelity_original {} fidelity_target {} form {}",
                    if v.pass { "pass" } else { "fail" },
                    fmt_num(v.fidelity_original),
                    fmt_num(v.fidelity_target),
                    if v.form_ok { "ok" } else { "bad" }
                );
            }
            None => out.push_str("verdict unchecked\n"),
        }
        out
    }
}

/// Twelve significant digits in scientific notation, with `-0` printed as
/// `0`.
pub fn fmt_num(x: f64) -> String {
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:.11e}")
}
