//! `qreduce`: run, verify and measure local-measurement reductions.
//!
//! Exit status: 0 pass, 1 usage or input error, 2 verification failure,
//! 3 resource cap exceeded.

use std::f64::consts::FRAC_PI_4;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use qreduce::io::{read_lattice, read_table, read_witness};
use qreduce::linalg::CVector;
use qreduce::oracle::VERIFY_TOL;
use qreduce::peps::{self, Lattice};
use qreduce::protocols::{cost_stats, fmt_num, AkltForm, Boundary, Protocol, RunOptions, Sampled, WireSpec, WALK_CAP};
use qreduce::tabular::{equivalence_fidelity, Witness};
use qreduce::{rng, syncwalk, Error};

#[derive(Parser)]
#[command(name = "qreduce", version, about = "Local-measurement reductions of MBQC resource states")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct Common {
    /// Root seed for every random choice
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file (stdout when absent)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Fidelity tolerance: pass iff fidelity >= 1 - tol
    #[arg(long, default_value_t = VERIFY_TOL)]
    tol: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProtocolName {
    AkltAlternating,
    Family,
    Fnw,
    WireFilter,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormName {
    Spin,
    Pauli,
    Canonical,
}

#[derive(Args, Clone)]
struct ProtocolArgs {
    #[arg(long, value_enum)]
    protocol: ProtocolName,
    /// AKLT input form
    #[arg(long, value_enum, default_value = "spin")]
    form: FormName,
    /// FNW deformation angle, in (0, pi/2)
    #[arg(long)]
    theta: Option<f64>,
    /// Family axis angles
    #[arg(long)]
    theta_a: Option<f64>,
    #[arg(long)]
    theta_b: Option<f64>,
    /// Biased wire angle
    #[arg(long)]
    gamma: Option<f64>,
    /// Byproduct wire angle
    #[arg(long)]
    phi: Option<f64>,
    /// Wire axis angle in the XZ plane (pi/4 is the Hadamard)
    #[arg(long, default_value_t = FRAC_PI_4)]
    axis: f64,
}

impl ProtocolArgs {
    fn protocol(&self) -> Result<Protocol, Error> {
        let need = |v: Option<f64>, name: &str| v.ok_or_else(|| Error::InvalidParameter(format!("--{name} is required")));
        Ok(match self.protocol {
            ProtocolName::AkltAlternating => Protocol::Aklt {
                form: match self.form {
                    FormName::Spin => AkltForm::Spin,
                    FormName::Pauli => AkltForm::Pauli,
                    FormName::Canonical => AkltForm::Canonical,
                },
            },
            ProtocolName::Family => Protocol::Family { theta_a: need(self.theta_a, "theta-a")?, theta_b: need(self.theta_b, "theta-b")? },
            ProtocolName::Fnw => Protocol::Fnw { theta: need(self.theta, "theta")? },
            ProtocolName::WireFilter => match (self.gamma, self.phi) {
                (Some(g), None) => Protocol::Wire { spec: WireSpec::biased(self.axis, g) },
                (None, Some(p)) => Protocol::Wire { spec: WireSpec::byproduct(self.axis, p) },
                _ => return Err(Error::InvalidParameter("give exactly one of --gamma, --phi".into())),
            },
        })
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one seeded reduction and write its trace
    Reduce {
        #[command(flatten)]
        p: ProtocolArgs,
        #[arg(long, default_value_t = 12)]
        n: usize,
        /// Fixed left boundary, comma separated (mixed boundary when absent)
        #[arg(long, value_delimiter = ',', requires = "right")]
        left: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',', requires = "left")]
        right: Option<Vec<f64>>,
        #[arg(long, default_value_t = WALK_CAP)]
        walk_cap: usize,
        #[command(flatten)]
        c: Common,
    },
    /// Compare the states of two table files, optionally through a witness
    Verify {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        target: PathBuf,
        /// Local unitaries and phase applied to the target state
        #[arg(long)]
        witness: Option<PathBuf>,
        #[command(flatten)]
        c: Common,
    },
    /// Particle cost statistics as CSV
    Cost {
        #[command(flatten)]
        p: ProtocolArgs,
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<usize>,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        /// Check every trajectory with the oracle
        #[arg(long)]
        verify: bool,
        #[command(flatten)]
        c: Common,
    },
    /// Reduce a triCluster state on a lattice to the cluster state
    Peps {
        #[arg(long)]
        lattice: PathBuf,
        /// Check every outcome assignment instead of one sampled run
        #[arg(long)]
        exhaustive: bool,
        #[command(flatten)]
        c: Common,
    },
    /// Synchronization walk statistics as CSV
    Syncwalk {
        #[arg(long)]
        diff: usize,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        #[arg(long, default_value_t = 200)]
        cap: usize,
        #[command(flatten)]
        c: Common,
    },
}

enum Failure {
    Error(Error),
    Verification(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::Error(e.into())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn check_tol(tol: f64) -> Result<(), Error> {
    if tol > 0.0 && tol < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("tolerance {tol} outside (0, 1)")))
    }
}

fn run(cmd: Cmd) -> Result<(), Failure> {
    match cmd {
        Cmd::Reduce { p, n, left, right, walk_cap, c } => {
            check_tol(c.tol)?;
            let protocol = p.protocol()?;
            let boundary = match (left, right) {
                (Some(l), Some(r)) => Boundary::Fixed { left: CVector::from_real(&l), right: CVector::from_real(&r) },
                _ => Boundary::Mixed,
            };
            let opts = RunOptions { boundary, verify: true, walk_cap };
            let mut tr = protocol.run_trial(n, c.seed, 0, &opts)?;
            if let Some(v) = tr.verdict.as_mut() {
                v.pass = v.form_ok && v.fidelity_original >= 1.0 - c.tol && v.fidelity_target >= 1.0 - c.tol;
            }
            emit(&c.out, &tr.to_text())?;
            if tr.passed() {
                Ok(())
            } else {
                Err(Failure::Verification("reduction did not verify".into()))
            }
        }
        Cmd::Verify { input, target, witness, c } => {
            check_tol(c.tol)?;
            let a = read_table(&input)?;
            let b = read_table(&target)?;
            let w = match witness {
                Some(p) => read_witness(&p)?,
                None => Witness::identity(&b.phys_dims()),
            };
            let f = equivalence_fidelity(&a, &b, &w)?;
            let pass = f >= 1.0 - c.tol;
            let text = format!(
                "input {}\ntarget {}\nwitness {}\nfidelity {}\nverdict {}\n",
                input.display(),
                target.display(),
                if w == Witness::identity(&b.phys_dims()) { "identity" } else { "given" },
                fmt_num(f),
                if pass { "pass" } else { "fail" }
            );
            emit(&c.out, &text)?;
            if pass {
                Ok(())
            } else {
                Err(Failure::Verification(format!("fidelity {f}")))
            }
        }
        Cmd::Cost { p, n, trials, verify, c } => {
            let rep = cost_stats(&p.protocol()?, &n, trials, c.seed, verify)?;
            emit(&c.out, &rep.to_csv())?;
            let failed: usize = rep.series.iter().map(|s| s.failed_verification).sum();
            if failed > 0 {
                return Err(Failure::Verification(format!("{failed} trajectories failed verification")));
            }
            Ok(())
        }
        Cmd::Peps { lattice, exhaustive, c } => {
            check_tol(c.tol)?;
            let (l, term) = read_lattice(&lattice)?;
            if term != peps::Termination::Plus {
                return Err(Error::InvalidParameter("the reduction needs |+> terminations".into()).into());
            }
            let (text, worst) = if exhaustive { peps_exhaustive(&l)? } else { peps_sampled(&l, c.seed)? };
            let pass = worst >= 1.0 - c.tol;
            emit(&c.out, &format!("{text}verdict {}\n", if pass { "pass" } else { "fail" }))?;
            if pass {
                Ok(())
            } else {
                Err(Failure::Verification(format!("fidelity {worst}")))
            }
        }
        Cmd::Syncwalk { diff, trials, cap, c } => {
            let rep = syncwalk::sync_simulate(diff, trials, cap, c.seed)?;
            emit(&c.out, &rep.to_csv())
        }
    }
}

/// Items each preceded by a space.
fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(|x| format!(" {}", x.to_string())).collect()
}

fn peps_sampled(l: &Lattice, seed: u64) -> Result<(String, f64), Error> {
    let mut g = rng::trial(seed, "peps", 0);
    let run = peps::tricluster_reduce(l, &mut Sampled(&mut g))?;
    let text = format!(
        "nodes {}\nedges {}\noutcomes{}\nz_byproducts{}\nfidelity {}\n",
        l.nodes,
        l.edges.len(),
        join(&run.outcomes),
        join(&run.z_nodes),
        fmt_num(run.fidelity)
    );
    Ok((text, run.fidelity))
}

fn peps_exhaustive(l: &Lattice) -> Result<(String, f64), Error> {
    let psi = peps::build_tricluster(l, peps::Termination::Plus)?;
    let mut worst: f64 = 1.0;
    let mut count = 0;
    for k in 0..3usize.pow(l.nodes as u32) {
        let mut rest = k;
        let mut out = vec![0; l.nodes];
        for x in out.iter_mut().rev() {
            *x = rest % 3;
            rest /= 3;
        }
        if let Some(run) = peps::tricluster_assignment(l, &psi, &out)? {
            worst = worst.min(run.fidelity);
            count += 1;
        }
    }
    let text = format!("nodes {}\nedges {}\nassignments {}\nmin_fidelity {}\n", l.nodes, l.edges.len(), count, fmt_num(worst));
    Ok((text, worst))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification(msg)) => {
            eprintln!("verification failed: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Error(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::CapExceeded { .. } => 3,
                Error::Verification(_) | Error::ProbabilityUnderflow => 2,
                _ => 1,
            })
        }
    }
}
