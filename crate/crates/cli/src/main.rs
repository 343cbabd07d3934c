use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use condlimit_core::audit::{audit, AssumptionReport, ConstantInputs, ConstantSet, GridSpec};
use condlimit_core::fourier::{conditional_slice, ExperimentSpec};
use condlimit_core::harness::{
    mc_conditional_sample, render_svg, thread_pool_from_env, write_law_csv, write_rate_csv, RateConfig, RateJob,
};
use condlimit_core::kv::KvReport;
use condlimit_core::zoo::ModelSpec;
use condlimit_core::JointPmf;

/// Exact conditional laws of lattice sums and their Berry-Esseen distances.
#[derive(Parser)]
#[command(name = "condlimit", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Target {
    /// Model, e.g. `occupancy:lambda=1.0` or `hashing:mu=0.5,lmax=8,mc=0`.
    #[arg(long)]
    model: ModelSpec,
    #[arg(long = "N")]
    n: usize,
    /// Conditioning value; defaults to round(N·E[X]) (N − 1 for branching).
    #[arg(long, allow_hyphen_values = true)]
    m: Option<i64>,
}

#[derive(Subcommand)]
enum Command {
    /// Audit the assumptions and print a `name = value` report.
    Audit {
        #[command(flatten)]
        target: Target,
        #[arg(long, default_value_t = 1.0)]
        eta0: f64,
        #[arg(long = "grid-pitch", default_value_t = 0.01)]
        grid_pitch: f64,
    },
    /// Print the exact conditional law as CSV (t, prob, cdf).
    Exact {
        #[command(flatten)]
        target: Target,
    },
    /// Run an N-grid and print one CSV row per N.
    Rate {
        #[arg(long, required_unless_present = "config")]
        model: Option<ModelSpec>,
        /// Comma-separated, strictly increasing.
        #[arg(long = "N-grid", value_delimiter = ',', required_unless_present = "config")]
        n_grid: Vec<usize>,
        /// `rate.model`, `rate.n_grid`, `rate.seed`, `rate.mc_reps` as `key = value` lines.
        #[arg(long, conflicts_with_all = ["model", "n_grid", "mc_reps", "seed"])]
        config: Option<PathBuf>,
        /// Also write a log-log chart.
        #[arg(long)]
        svg: Option<PathBuf>,
        /// Monte Carlo proposals per row for the acceptance-rate column.
        #[arg(long = "mc-reps")]
        mc_reps: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Rejection-sample the conditional law; prints the empirical law as CSV.
    Mc {
        #[command(flatten)]
        target: Target,
        #[arg(long)]
        reps: usize,
        #[arg(long)]
        seed: u64,
    },
    /// Evaluate every explicit constant from an audit report or from given bounds.
    Constants {
        #[arg(long = "from-audit", conflicts_with_all = ["c1", "c2", "c3", "c4", "c5", "c6", "c7"])]
        from_audit: Option<PathBuf>,
        #[arg(long)]
        c1: Option<f64>,
        #[arg(long = "c2-tilde")]
        c2_tilde: Option<f64>,
        #[arg(long)]
        c2: Option<f64>,
        #[arg(long)]
        c3: Option<f64>,
        #[arg(long = "c4-tilde")]
        c4_tilde: Option<f64>,
        #[arg(long)]
        c4: Option<f64>,
        #[arg(long)]
        c5: Option<f64>,
        #[arg(long)]
        c6: Option<f64>,
        #[arg(long)]
        c7: Option<f64>,
        #[arg(long, default_value_t = 1.0)]
        eta0: f64,
    },
}

fn resolve(target: &Target) -> Result<(JointPmf, i64)> {
    let built = target.model.build_joint::<f64>()?;
    if built.approximate {
        eprintln!("note: joint law has Monte Carlo rows (max per-atom std error {:.3e})", built.std_error);
    }
    let m = match target.m {
        Some(m) => m,
        None => target.model.default_m(&built.joint, target.n)?,
    };
    Ok((built.joint, m))
}

fn run(cli: Cli) -> Result<()> {
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    match cli.command {
        Command::Audit { target, eta0, grid_pitch } => {
            let (joint, m) = resolve(&target)?;
            let spec = ExperimentSpec::new(joint, target.n, m, eta0)?;
            let report = audit(&spec, &GridSpec::new(grid_pitch, 200)?)?;
            write!(out, "{}", report.to_kv())?;
        }
        Command::Exact { target } => {
            let (joint, m) = resolve(&target)?;
            let slice = conditional_slice(&joint, target.n, m)?;
            eprintln!("N = {}, m = {m}, P(S_N = m) = {:.16e}", target.n, slice.prob_m);
            write_law_csv(&slice.law, &mut out)?;
        }
        Command::Rate { model, n_grid, config, svg, mc_reps, seed } => {
            let job = match (config, model) {
                (Some(path), _) => {
                    let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
                    RateJob::from_kv(&text.parse::<KvReport>()?)?
                }
                (None, Some(model)) => {
                    RateJob { model, n_grid, config: RateConfig { mc_reps, seed: seed.unwrap_or(0) } }
                }
                (None, None) => bail!("--model or --config is required"),
            };
            let run = job.run()?;
            for (n, why) in &run.failures {
                eprintln!("N = {n} failed: {why}");
            }
            write_rate_csv(&run.rows, &mut out)?;
            if let Some(path) = svg {
                std::fs::write(&path, render_svg(&run.rows)).with_context(|| format!("writing {}", path.display()))?;
            }
        }
        Command::Mc { target, reps, seed } => {
            let (joint, m) = resolve(&target)?;
            let sample = mc_conditional_sample(&joint, target.n, m, reps, seed)?;
            eprintln!(
                "accepted {} of {} proposals, accept_rate = {:.16e}",
                sample.accepted, sample.proposals, sample.accept_rate
            );
            write_law_csv(&sample.law, &mut out)?;
        }
        Command::Constants { from_audit, c1, c2_tilde, c2, c3, c4_tilde, c4, c5, c6, c7, eta0 } => {
            let inputs = match from_audit {
                Some(path) => {
                    let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
                    let kv: KvReport = text.parse()?;
                    ConstantInputs::from_report(&AssumptionReport::from_kv(&kv)?)
                }
                None => {
                    let need = |name: &str, v: Option<f64>| v.with_context(|| format!("--{name} is required"));
                    let c3 = need("c3", c3)?;
                    let c4 = need("c4", c4)?;
                    ConstantInputs {
                        c1: need("c1", c1)?,
                        c2_tilde: c2_tilde.unwrap_or(1.0 / (4.0 * c3)),
                        c2: need("c2", c2)?,
                        c3,
                        c4_tilde: c4_tilde.unwrap_or(c4),
                        c4,
                        c5: need("c5", c5)?,
                        c6: need("c6", c6)?,
                        c7: need("c7", c7)?,
                        eta0,
                    }
                }
            };
            let set = ConstantSet::new(inputs)?;
            write!(out, "{}", set.to_kv())?;
            for chk in &set.integrals {
                if chk.relative_error() > 1e-10 {
                    bail!("integral {} disagrees with quadrature: {:e}", chk.name, chk.relative_error());
                }
            }
        }
    }
    out.flush()?;
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let pool = thread_pool_from_env()?;
    pool.install(|| run(cli))
}
