use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;
use wdisc::bounds::{self, BoundResult};
use wdisc::discrepancy::{star_discrepancy_with, uniform_discrepancy_with, BoxConvention, DiscrepancyOptions};
use wdisc::harness::{self, ExperimentConfig, Family, ReportFormat, Suite};
use wdisc::measures::pointset::{read_pointset, write_pointset};
use wdisc::measures::{halton, iid_uniform, midpoint_grid, van_der_corput, DiscreteMeasure, Measure, Norm};
use wdisc::transport::{solve_exact, w1_dual_gap_check, wasserstein_1d, TransportOptions};

#[derive(Parser)]
#[command(name = "wdisc", version, about = "Discrepancies, Wasserstein distances and the bounds between them")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a point set in the point-set CSV format.
    Gen {
        #[arg(long, default_value = "halton")]
        family: Family,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        d: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Star and uniform discrepancy of one point set (against the uniform law) or two.
    Disc {
        a: PathBuf,
        /// Second point set, or `uniform`.
        #[arg(default_value = "uniform")]
        b: String,
        #[arg(long, default_value = "closed")]
        convention: String,
        #[arg(long, default_value_t = wdisc::discrepancy::DEFAULT_GRID_CAP as u64)]
        grid_cap: u64,
        #[arg(long, default_value_t = wdisc::discrepancy::DEFAULT_PAIR_CAP as u64)]
        pair_cap: u64,
    },
    /// Exact W_p between two point sets (or a 1D set and `uniform`).
    Wass {
        a: PathBuf,
        b: String,
        #[arg(long, default_value_t = 1.0)]
        p: f64,
        #[arg(long, default_value = "l2")]
        norm: Norm,
        #[arg(long, default_value_t = wdisc::transport::DEFAULT_SUPPORT_CAP)]
        support_cap: usize,
        /// Write the optimal plan as CSV.
        #[arg(long)]
        plan: Option<PathBuf>,
    },
    /// Evaluate a named bound or constant and print it as JSON.
    Bound(BoundArgs),
    /// Run a check suite and emit a report; exits with 1 when a check fails.
    Verify {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "all")]
        suite: Suite,
        /// Extra `key=value` settings applied after the config file.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        #[arg(long, default_value = "json")]
        format: ReportFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Convert a JSON report to CSV (or re-emit it as JSON).
    Report {
        input: PathBuf,
        #[arg(long, default_value = "csv")]
        format: ReportFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Iterated-logarithm table for i.i.d. uniform samples.
    Lil {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 1 << 16)]
        n_max: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct BoundArgs {
    /// One of: b_pd, cube, cube_refined, kappa, w1_refined, w1_refined_star,
    /// tech_l, tech_l_case, rd_shape, moment, moment_homogeneous, exp, c_rd, reverse.
    name: String,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    q: Option<f64>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    r: Option<f64>,
    #[arg(long)]
    u: Option<f64>,
    #[arg(long)]
    dinf: Option<f64>,
    #[arg(long)]
    dstar: Option<f64>,
    #[arg(long)]
    mq: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    kappa: f64,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    eexp: Option<f64>,
    #[arg(long)]
    w1: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    g_norm: f64,
    #[arg(long, default_value = "linf")]
    norm: Norm,
}

fn need<T: Copy>(v: Option<T>, flag: &str) -> Result<T> {
    v.with_context(|| format!("missing --{flag}"))
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn load(path: &Path) -> Result<DiscreteMeasure> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_pointset(BufReader::new(f)).with_context(|| format!("reading {}", path.display()))
}

fn load_other(spec: &str, dim: usize) -> Result<Measure> {
    if spec == "uniform" {
        Ok(Measure::UniformCube(dim))
    } else {
        Ok(Measure::Discrete(load(Path::new(spec))?))
    }
}

fn generate(family: &Family, n: usize, d: usize, seed: u64) -> Result<DiscreteMeasure> {
    Ok(match family {
        Family::Midpoint if d == 1 => midpoint_grid(n)?,
        Family::VanDerCorput if d == 1 => van_der_corput(n, 2)?,
        Family::Halton => halton(n, d)?,
        Family::IidUniform => iid_uniform(n, d, seed)?,
        Family::Custom(_) => bail!("gen cannot produce a custom family"),
        other => bail!("family {other} is one-dimensional"),
    })
}

fn bound_json(r: &BoundResult) -> serde_json::Value {
    serde_json::to_value(r).expect("bound results serialize")
}

fn eval_bound(a: &BoundArgs) -> Result<serde_json::Value> {
    let scalar = |name: &str, v: f64| json!({ "name": name, "value": v });
    Ok(match a.name.replace('-', "_").as_str() {
        "b_pd" => scalar("b_pd", bounds::b_pd(need(a.p, "p")?, need(a.d, "d")?)?),
        "kappa" => scalar("kappa", bounds::kappa(need(a.d, "d")?)?),
        "cube" => bound_json(&bounds::bound_cube(need(a.p, "p")?, need(a.d, "d")?, need(a.dinf, "dinf")?, a.norm)?),
        "cube_refined" => {
            bound_json(&bounds::bound_cube_refined(need(a.p, "p")?, need(a.d, "d")?, need(a.dinf, "dinf")?, a.norm)?)
        }
        "w1_refined" => bound_json(&bounds::bound_w1_refined(need(a.d, "d")?, need(a.dinf, "dinf")?, a.norm)?),
        "w1_refined_star" => {
            bound_json(&bounds::bound_w1_refined_star(need(a.d, "d")?, need(a.dstar, "dstar")?, a.norm)?)
        }
        "tech_l" => scalar(
            "tech_l",
            bounds::tech_l(need(a.u, "u")?, need(a.dinf, "dinf")?, need(a.p, "p")?, need(a.d, "d")?)?,
        ),
        "tech_l_case" => scalar(
            "tech_l_case",
            bounds::tech_l_case_bound(need(a.u, "u")?, need(a.dinf, "dinf")?, need(a.p, "p")?, need(a.d, "d")?)?,
        ),
        "rd_shape" => bound_json(&bounds::bound_rd_shape(
            need(a.p, "p")?,
            need(a.q, "q")?,
            need(a.d, "d")?,
            need(a.dinf, "dinf")?,
            need(a.mq, "mq")?,
            a.kappa,
        )?),
        "moment" => {
            scalar("moment", bounds::bound_w1_1d_moment(need(a.q, "q")?, need(a.mq, "mq")?, need(a.dstar, "dstar")?)?)
        }
        "moment_homogeneous" => scalar(
            "moment_homogeneous",
            bounds::bound_w1_1d_moment_homogeneous(need(a.q, "q")?, need(a.mq, "mq")?, need(a.dstar, "dstar")?)?,
        ),
        "exp" => scalar(
            "exp",
            bounds::bound_w1_1d_exp(
                need(a.lambda, "lambda")?,
                need(a.eexp, "eexp")?,
                need(a.dstar, "dstar")?,
                need(a.dinf, "dinf")?,
            )?,
        ),
        "c_rd" => scalar("c_rd", bounds::c_rd(need(a.r, "r")?, need(a.d, "d")?)?),
        "reverse" => bound_json(&bounds::reverse_bound(need(a.r, "r")?, need(a.d, "d")?, need(a.w1, "w1")?, a.g_norm)?),
        other => bail!("unknown bound `{other}`"),
    })
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Gen { family, n, d, seed, out } => {
            let m = generate(&family, n, d, seed)?;
            let mut w = output(&out)?;
            write_pointset(&mut w, &m)?;
            w.flush()?;
        }
        Command::Disc { a, b, convention, grid_cap, pair_cap } => {
            let mu = load(&a)?;
            let nu = load_other(&b, mu.dim())?;
            let conv = match convention.as_str() {
                "closed" => BoxConvention::Closed,
                "semi-open" | "semiopen" => BoxConvention::SemiOpen,
                other => bail!("unknown convention `{other}`"),
            };
            let opts = DiscrepancyOptions { grid_cap: grid_cap as u128, pair_cap: pair_cap as u128 };
            let mu = Measure::Discrete(mu);
            let dstar = star_discrepancy_with(&mu, &nu, &opts)?;
            let dinf = uniform_discrepancy_with(&mu, &nu, conv, &opts)?;
            println!("{}", json!({ "dstar": dstar, "dinf": dinf }));
        }
        Command::Wass { a, b, p, norm, support_cap, plan } => {
            let mu = load(&a)?;
            match load_other(&b, mu.dim())? {
                Measure::UniformCube(d) => {
                    if d != 1 {
                        bail!("exact W_p against the uniform law is only available in dimension 1");
                    }
                    let w = wasserstein_1d(&mu, &Measure::UniformCube(1), p)?;
                    println!("{}", json!({ "p": p, "wp": w }));
                }
                Measure::Discrete(nu) => {
                    let sol = solve_exact(&mu, &nu, p, norm, &TransportOptions { support_cap })?;
                    let mut out = json!({ "p": p, "norm": norm.name(), "wp": sol.value, "cost": sol.plan.cost_p });
                    if p == 1.0 {
                        out["dual_certified"] = json!(w1_dual_gap_check(&sol.plan, &sol.potentials, &mu, &nu));
                    }
                    if let Some(path) = plan {
                        sol.plan.write_csv(BufWriter::new(File::create(&path)?))?;
                    }
                    println!("{out}");
                }
            }
        }
        Command::Bound(args) => println!("{}", serde_json::to_string_pretty(&eval_bound(&args)?)?),
        Command::Verify { config, suite, set, format, out } => {
            let mut cfg = match &config {
                Some(path) => ExperimentConfig::load(path).with_context(|| format!("loading {}", path.display()))?,
                None => ExperimentConfig::default(),
            };
            for kv in &set {
                let (k, v) = kv.split_once('=').with_context(|| format!("expected KEY=VALUE, got `{kv}`"))?;
                cfg.set(k, v)?;
            }
            cfg.validate()?;
            let report = harness::run_suite(&cfg, suite)?;
            let mut w = output(&out)?;
            harness::write_report(&mut w, &report, format)?;
            w.flush()?;
            let s = report.summary;
            eprintln!("total {} passed {} failed {} skipped {}", s.total, s.passed, s.failed, s.skipped);
            return Ok(s.failed == 0);
        }
        Command::Report { input, format, out } => {
            let bytes = std::fs::read(&input).with_context(|| format!("reading {}", input.display()))?;
            let report = harness::parse_report_json(&bytes)?;
            let mut w = output(&out)?;
            harness::write_report(&mut w, &report, format)?;
            w.flush()?;
            return Ok(report.summary.failed == 0);
        }
        Command::Lil { seed, n_max, out } => {
            let rows = harness::lil_demo(seed, n_max)?;
            let mut w = output(&out)?;
            harness::write_lil_csv(&mut w, &rows)?;
            w.flush()?;
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
