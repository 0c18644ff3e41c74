//! Particle cost of the reductions: consumed sites per surviving site.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::alternating::AkltForm;
use super::trace::ReductionTrace;
use super::wire::WireSpec;
use super::{alternating_reduce, fnw_reduce, general_family_reduce, wire_filter_reduce, RunOptions, Sampled};
use crate::error::{Error, Result};
use crate::linalg::{CVector, Mat};
use crate::measurement::MeasurementOp;
use crate::mps::StateVector;
use crate::rng;

/// A protocol with its parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Protocol {
    Aklt { form: AkltForm },
    Family { theta_a: f64, theta_b: f64 },
    Fnw { theta: f64 },
    Wire { spec: WireSpec },
}

impl Protocol {
    pub fn name(&self) -> String {
        match self {
            Protocol::Aklt { .. } => "aklt-alternating".into(),
            Protocol::Family { theta_a, theta_b } => format!("family({theta_a},{theta_b})"),
            Protocol::Fnw { theta } => format!("fnw({theta})"),
            Protocol::Wire { spec } => format!("wire({},{})", spec.axis, spec.param),
        }
    }

    pub fn run(&self, n: usize, opts: &RunOptions, chooser: &mut dyn super::OutcomeChooser) -> Result<ReductionTrace> {
        match self {
            Protocol::Aklt { form } => alternating_reduce(*form, n, opts, chooser),
            Protocol::Family { theta_a, theta_b } => general_family_reduce(*theta_a, *theta_b, n, opts, chooser),
            Protocol::Fnw { theta } => fnw_reduce(*theta, n, opts, chooser),
            Protocol::Wire { spec } => wire_filter_reduce(spec, n, opts, chooser),
        }
    }

    /// Runs trial `trial` of the batch for chain length `n` under `seed`.
    pub fn run_trial(&self, n: usize, seed: u64, trial: u64, opts: &RunOptions) -> Result<ReductionTrace> {
        let mut g = rng::trial(seed, &format!("{}/{}", self.name(), n), trial);
        let mut tr = self.run(n, opts, &mut Sampled(&mut g))?;
        tr.seed = Some(seed);
        Ok(tr)
    }
}

/// Statistics for one chain length.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostSeries {
    pub n: usize,
    pub trials: usize,
    /// `Σ n / Σ s` over all trials.
    pub cost: f64,
    /// Delta-method standard error of `cost`.
    pub stderr: f64,
    /// Mean, variance and maximum of `n / s` over trials with `s > 0`.
    pub mean_per_trial: f64,
    pub var_per_trial: f64,
    pub max_per_trial: f64,
    pub mean_surviving: f64,
    pub no_output: usize,
    pub incomplete: usize,
    pub retries: usize,
    pub walk_steps: usize,
    pub failed_verification: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub protocol: String,
    pub seed: u64,
    pub series: Vec<CostSeries>,
}

impl CostReport {
    pub fn to_csv(&self) -> String {
        use super::trace::fmt_num as f;
        let mut out = String::from(
            "protocol,n,trials,cost,stderr,mean_per_trial,var_per_trial,max_per_trial,mean_surviving,no_output,incomplete,retries,walk_steps,failed_verification\n",
        );
        for s in &self.series {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                self.protocol,
                s.n,
                s.trials,
                f(s.cost),
                f(s.stderr),
                f(s.mean_per_trial),
                f(s.var_per_trial),
                f(s.max_per_trial),
                f(s.mean_surviving),
                s.no_output,
                s.incomplete,
                s.retries,
                s.walk_steps,
                s.failed_verification
            ));
        }
        out
    }
}

/// Runs `trials` seeded trials for every chain length in `ns`.
pub fn cost_stats(protocol: &Protocol, ns: &[usize], trials: usize, seed: u64, verify: bool) -> Result<CostReport> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    let opts = RunOptions { verify, ..Default::default() };
    let mut series = Vec::with_capacity(ns.len());
    for &n in ns {
        let runs: Vec<ReductionTrace> = (0..trials as u64)
            .into_par_iter()
            .map(|t| {
                let mut tr = protocol.run_trial(n, seed, t, &opts)?;
                // keep only what the statistics need
                tr.original = tr.final_table.clone();
                Ok(tr)
            })
            .collect::<Result<_>>()?;
        series.push(summarize(n, &runs));
    }
    Ok(CostReport { protocol: protocol.name(), seed, series })
}

fn summarize(n: usize, runs: &[ReductionTrace]) -> CostSeries {
    let t = runs.len() as f64;
    let s: Vec<f64> = runs.iter().map(|r| r.surviving_count() as f64).collect();
    let mean_s = s.iter().sum::<f64>() / t;
    let var_s = if runs.len() > 1 { s.iter().map(|x| (x - mean_s).powi(2)).sum::<f64>() / (t - 1.0) } else { 0.0 };
    let cost = n as f64 / mean_s;
    let stderr = n as f64 * var_s.sqrt() / (mean_s * mean_s * t.sqrt());
    let per: Vec<f64> = s.iter().filter(|&&x| x > 0.0).map(|x| n as f64 / x).collect();
    let pm = if per.is_empty() { f64::NAN } else { per.iter().sum::<f64>() / per.len() as f64 };
    let pv = if per.len() > 1 { per.iter().map(|x| (x - pm).powi(2)).sum::<f64>() / (per.len() as f64 - 1.0) } else { 0.0 };
    CostSeries {
        n,
        trials: runs.len(),
        cost,
        stderr,
        mean_per_trial: pm,
        var_per_trial: pv,
        max_per_trial: per.iter().copied().fold(f64::NAN, f64::max),
        mean_surviving: mean_s,
        no_output: runs.iter().filter(|r| r.surviving.is_empty()).count(),
        incomplete: runs.iter().filter(|r| r.incomplete).count(),
        retries: runs.iter().map(|r| r.retries).sum(),
        walk_steps: runs.iter().map(|r| r.walk_steps).sum(),
        failed_verification: runs.iter().filter(|r| r.verdict.as_ref().is_some_and(|v| !v.pass)).count(),
    }
}

/// `n / E[s]` for the alternating scheme on the `(I, X, Z)` chain under the
/// mixed boundary, by enumerating every outcome sequence on the expanded
/// state.
pub fn exact_alternating_cost(n: usize) -> Result<f64> {
    let table = super::aklt_table(AkltForm::Canonical, n)?;
    let n1 = MeasurementOp::n1();
    let n2 = MeasurementOp::n2();
    let mut total = 0.0;
    let mut expected_s = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            let psi = table.with_boundaries(CVector::basis(i, 2), CVector::basis(j, 2))?.expand()?;
            total += psi.norm_sqr();
            expected_s += tree(&psi, 0, true, 0, n1.kraus(), n2.kraus())?;
        }
    }
    Ok(n as f64 / (expected_s / total))
}

/// `Σ_paths ‖Π K ψ‖² · s` from site `k` on.
fn tree(psi: &StateVector, k: usize, use_n1: bool, s: usize, n1: &[Mat], n2: &[Mat]) -> Result<f64> {
    if k == psi.dims().len() {
        return Ok(psi.norm_sqr() * s as f64);
    }
    let meas = if use_n1 { n1 } else { n2 };
    let mut acc = 0.0;
    for (outcome, kr) in meas.iter().enumerate() {
        let next = psi.apply_site(k, kr)?;
        if next.norm_sqr() == 0.0 {
            continue;
        }
        acc += if outcome == 0 {
            tree(&next, k + 1, !use_n1, s + 1, n1, n2)?
        } else {
            tree(&next, k + 1, use_n1, s, n1, n2)?
        };
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_cost_is_three_halves() {
        for n in [4, 6, 8] {
            assert!((exact_alternating_cost(n).unwrap() - 1.5).abs() < 1e-12);
        }
    }

    #[test]
    fn unbiased_wire_costs_only_rotations() {
        let spec = WireSpec::biased(std::f64::consts::FRAC_PI_4, std::f64::consts::FRAC_PI_4);
        let r = cost_stats(&Protocol::Wire { spec }, &[6], 20, 1, true).unwrap();
        assert_eq!(r.series[0].retries, 0);
        assert_eq!(r.series[0].cost, 1.0);
        assert_eq!(r.series[0].failed_verification, 0);
    }

    #[test]
    fn csv_is_reproducible() {
        let p = Protocol::Aklt { form: AkltForm::Canonical };
        let a = cost_stats(&p, &[8, 10], 50, 3, false).unwrap().to_csv();
        let b = cost_stats(&p, &[8, 10], 50, 3, false).unwrap().to_csv();
        assert_eq!(a, b);
        assert_eq!(a.lines().count(), 3);
    }
}
