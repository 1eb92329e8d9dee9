mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use delone_approx::config::{Experiment, Overrides};
use delone_approx::construction::DivergenceSetup;
use delone_approx::estimators::{density_zoom, global_density, independence_report};
use delone_approx::montecarlo::{dichotomy_run, SampleMode};
use delone_approx::numerics::Scalar;
use delone_approx::psi::Regime;
use delone_approx::verify::run_verify;
use delone_approx::{Error, Result};
use serde_json::{json, Map, Value};

use output::{dec, exact, OutputDir};

#[derive(Parser)]
#[command(name = "delone-approx", version, about = "Orbit approximation experiments on Delone sets")]
struct Cli {
    /// Experiment description (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Working precision; must not be below the orbit policy.
    #[arg(long, global = true)]
    precision_bits: Option<u32>,
    /// Maximum number of Delone points a single window may hold.
    #[arg(long, global = true)]
    point_budget: Option<u64>,
    /// Only intersections with |m - n| <= W are computed.
    #[arg(long, global = true)]
    band_width: Option<u64>,
    #[arg(long, global = true, default_value = "out")]
    output_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Dump the points of Y in a window.
    GenPoints {
        #[arg(long, allow_hyphen_values = true)]
        lo: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        hi: Option<String>,
    },
    /// Run the invariant and inequality suites.
    Verify,
    /// Measures of A_n and A'_n.
    MeasureTable {
        #[arg(long = "n")]
        big_n: Option<u64>,
    },
    /// Intersection matrix, Chung-Erdős ratio and quasi-independence constant.
    Independence {
        #[arg(long = "n")]
        big_n: Option<u64>,
        /// Use every point of Y instead of Y^(n).
        #[arg(long)]
        unpruned: bool,
    },
    /// Monte Carlo hit counts of sampled orbits.
    Dichotomy {
        #[arg(long)]
        samples: Option<u64>,
        #[arg(long, value_delimiter = ',')]
        checkpoints: Option<Vec<u64>>,
        /// Sample x on the grid a + (b - a)k/D instead of at full precision.
        #[arg(long)]
        denominator: Option<u64>,
    },
    /// Local density of A_{N1} ∪ ... ∪ A_{N2} around x0.
    Zoom {
        #[arg(long, allow_hyphen_values = true)]
        x0: Option<String>,
        #[arg(long)]
        n1: Option<u64>,
        #[arg(long)]
        n2: Option<u64>,
    },
}

enum Outcome {
    Success,
    Violation,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(Outcome::Success) => ExitCode::SUCCESS,
        Ok(Outcome::Violation) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_resource_limit() { 3 } else { 2 })
        }
    }
}

fn run(cli: &Cli) -> Result<Outcome> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::Config("--config <FILE> is required".into()))?;
    let overrides = Overrides {
        seed: cli.seed,
        precision_bits: cli.precision_bits,
        point_budget: cli.point_budget,
    };
    let exp = Experiment::load(path, &overrides)?;
    let mut out = OutputDir::create(&cli.output_dir)?;
    let (name, outcome) = match &cli.command {
        Command::GenPoints { lo, hi } => ("gen-points", gen_points(&exp, &mut out, lo, hi)?),
        Command::Verify => ("verify", verify(&exp, &mut out)?),
        Command::MeasureTable { big_n } => ("measure-table", measure_table(&exp, &mut out, *big_n)?),
        Command::Independence { big_n, unpruned } => (
            "independence",
            independence(&exp, &mut out, *big_n, cli.band_width, *unpruned)?,
        ),
        Command::Dichotomy {
            samples,
            checkpoints,
            denominator,
        } => (
            "dichotomy",
            dichotomy(&exp, &mut out, *samples, checkpoints.clone(), *denominator)?,
        ),
        Command::Zoom { x0, n1, n2 } => ("zoom", zoom(&exp, &mut out, x0, *n1, *n2)?),
    };
    let dir = out.finish(name, &exp)?;
    eprintln!("wrote {}", dir.display());
    Ok(outcome)
}

fn scalar_json(x: &Scalar) -> Value {
    if x.is_exact() {
        json!({ "decimal": dec(x), "exact": x.to_exact_string() })
    } else {
        json!({ "decimal": dec(x) })
    }
}

fn gen_points(exp: &Experiment, out: &mut OutputDir, lo: &Option<String>, hi: &Option<String>) -> Result<Outcome> {
    let run = &exp.runs().gen_points;
    let lo = exp.number(lo.as_deref().unwrap_or(&run.lo))?;
    let hi = exp.number(hi.as_deref().unwrap_or(&run.hi))?;
    let points = exp.config.delone().indexed_points_in_window(&lo, &hi)?;
    out.csv(
        "points.csv",
        &["index", "point", "point_exact"],
        points.iter().map(|(k, y)| vec![k.to_string(), dec(y), exact(y)]),
    )?;
    Ok(Outcome::Success)
}

fn verify(exp: &Experiment, out: &mut OutputDir) -> Result<Outcome> {
    let report = run_verify(exp)?;
    let width = report.checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
    for c in &report.checks {
        let status = if c.passed { "pass" } else { "FAIL" };
        println!("{:<width$}  {status}  {}", c.name, c.detail);
    }
    out.csv(
        "verify.csv",
        &["check", "status", "detail"],
        report.checks.iter().map(|c| {
            let status = if c.passed { "pass" } else { "fail" };
            vec![c.name.clone(), status.to_string(), c.detail.clone()]
        }),
    )?;
    Ok(if report.all_passed() {
        Outcome::Success
    } else {
        Outcome::Violation
    })
}

fn measure_table(exp: &Experiment, out: &mut OutputDir, big_n: Option<u64>) -> Result<Outcome> {
    let cfg = &exp.config;
    let big_n = big_n.unwrap_or(exp.runs().measure_table.n);
    let setup = DivergenceSetup::new(cfg)?;
    let mut rows = Vec::new();
    for n in 1..=big_n {
        let psi = cfg.psi_at(n);
        let a_n = cfg.measure_a_n(n)?;
        let mut row = vec![n.to_string(), dec(&psi), exact(&psi), dec(&a_n), exact(&a_n)];
        if setup.psi_index(n) <= cfg.n_max() {
            let a_prime = setup.level_set_a_prime_n(cfg, n)?.measure();
            row.extend([setup.psi_index(n).to_string(), dec(&a_prime), exact(&a_prime)]);
        } else {
            row.extend([String::new(), String::new(), String::new()]);
        }
        rows.push(row);
    }
    out.csv(
        "measures.csv",
        &[
            "n",
            "psi",
            "psi_exact",
            "measure_A",
            "measure_A_exact",
            "psi_index",
            "measure_A_prime",
            "measure_A_prime_exact",
        ],
        rows,
    )?;
    Ok(Outcome::Success)
}

fn independence(
    exp: &Experiment,
    out: &mut OutputDir,
    big_n: Option<u64>,
    band: Option<u64>,
    unpruned: bool,
) -> Result<Outcome> {
    let cfg = &exp.config;
    let run = &exp.runs().independence;
    let big_n = big_n.unwrap_or(run.n);
    let band = band.or(run.band);
    let mut setup = DivergenceSetup::new(cfg)?;
    if unpruned || run.unpruned {
        setup = setup.without_pruning();
    }
    let report = independence_report(cfg, &setup, big_n, band)?;
    out.csv(
        "measures.csv",
        &["n", "psi_index", "measure", "measure_exact"],
        report.measures.iter().enumerate().map(|(i, m)| {
            let n = i as u64 + 1;
            vec![n.to_string(), setup.psi_index(n).to_string(), dec(m), exact(m)]
        }),
    )?;
    out.csv(
        "intersections.csv",
        &["m", "n", "measure", "measure_exact"],
        report
            .intersection_matrix
            .upper_entries()
            .map(|(m, n, v)| vec![m.to_string(), n.to_string(), dec(v), exact(v)]),
    )?;
    out.csv(
        "ratio.csv",
        &["N", "ratio", "ratio_exact"],
        report.chung_erdos.trajectory.iter().enumerate().map(|(i, r)| {
            let n = (i + 1).to_string();
            match r {
                Some(r) => vec![n, dec(r), exact(r)],
                None => vec![n, String::new(), String::new()],
            }
        }),
    )?;
    let summary = json!({
        "N": big_n,
        "J": setup.big_j(),
        "j": setup.j(),
        "beta": scalar_json(setup.beta()),
        "pruned": setup.is_pruned(),
        "band": band,
        "b_minus_a": scalar_json(&cfg.length()),
        "chung_erdos_ratio": scalar_json(&report.chung_erdos.ratio),
        "chung_erdos_running_max": scalar_json(&report.chung_erdos.running_max),
        "quasi_independence_constant": report.quasi_independence_constant.as_ref().map(scalar_json),
        "K_estimate": scalar_json(&report.k_estimate),
    });
    out.json("summary.json", &summary)?;
    println!(
        "N = {big_n}: Chung-Erdős ratio {}, K estimate {}",
        dec(&report.chung_erdos.ratio),
        dec(&report.k_estimate)
    );
    Ok(Outcome::Success)
}

fn dichotomy(
    exp: &Experiment,
    out: &mut OutputDir,
    samples: Option<u64>,
    checkpoints: Option<Vec<u64>>,
    denominator: Option<u64>,
) -> Result<Outcome> {
    let cfg = &exp.config;
    let run_def = &exp.runs().dichotomy;
    let samples = samples.unwrap_or(run_def.samples);
    let checkpoints = checkpoints.unwrap_or_else(|| run_def.checkpoints.clone());
    let mode = match denominator {
        Some(denominator) => SampleMode::Rational { denominator },
        None => run_def.mode(),
    };
    let run = dichotomy_run(cfg, samples, exp.seed(), &checkpoints, mode)?;
    let mut header = vec!["id".to_string(), "x".to_string(), "x_exact".to_string()];
    header.extend(run.checkpoints.iter().map(|c| format!("hits_{c}")));
    header.push("borderline".to_string());
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    out.csv(
        "hits.csv",
        &header,
        run.outcomes.iter().map(|o| {
            let mut row = vec![o.id.to_string(), dec(&o.x), exact(&o.x)];
            row.extend(o.hits.iter().map(u64::to_string));
            row.push(o.borderline.to_string());
            row
        }),
    )?;
    let per_checkpoint: Vec<Value> = run
        .stats
        .iter()
        .map(|s| {
            let quantiles: Map<String, Value> = s
                .quantiles
                .iter()
                .map(|(p, v)| (format!("p{p}"), json!(v)))
                .collect();
            let histogram: Map<String, Value> = s
                .histogram
                .iter()
                .map(|(k, v)| (k.to_string(), json!(v)))
                .collect();
            json!({
                "N": s.big_n,
                "mean_hits": scalar_json(&s.mean_hits),
                "std_dev": scalar_json(&s.std_dev),
                "expected_hits": scalar_json(&s.expected_hits),
                "within_4_standard_errors": s.within_standard_errors(4, cfg.precision()),
                "quantiles": quantiles,
                "histogram": histogram,
            })
        })
        .collect();
    let stats = json!({
        "samples": samples,
        "seed": exp.seed(),
        "mode": match mode {
            SampleMode::FullPrecision => json!("full-precision"),
            SampleMode::Rational { denominator } => json!({ "rational": denominator }),
        },
        "regime": match cfg.psi().regime() {
            Regime::Convergent => "convergent",
            Regime::Divergent => "divergent",
        },
        "borderline_decisions": run.stats.first().map_or(0, |s| s.borderline_decisions),
        "checkpoints": per_checkpoint,
    });
    out.json("stats.json", &stats)?;
    for s in &run.stats {
        println!(
            "N = {}: mean hits {} (expected {}), sd {}",
            s.big_n,
            dec(&s.mean_hits),
            dec(&s.expected_hits),
            dec(&s.std_dev)
        );
    }
    Ok(Outcome::Success)
}

fn zoom(exp: &Experiment, out: &mut OutputDir, x0: &Option<String>, n1: Option<u64>, n2: Option<u64>) -> Result<Outcome> {
    let cfg = &exp.config;
    let run = &exp.runs().zoom;
    let x0 = exp.number(x0.as_deref().unwrap_or(&run.x0))?;
    let (n1, n2) = (n1.unwrap_or(run.n1), n2.unwrap_or(run.n2));
    let eps: Vec<Scalar> = run.eps.iter().map(|e| exp.number(e)).collect::<Result<_>>()?;
    let rows = density_zoom(cfg, &x0, n1, n2, &eps)?;
    let global = global_density(cfg, n1, n2)?;
    out.csv(
        "zoom.csv",
        &["eps", "eps_exact", "ratio", "ratio_exact"],
        rows.iter()
            .map(|r| vec![dec(&r.eps), exact(&r.eps), dec(&r.ratio), exact(&r.ratio)]),
    )?;
    let worst = rows
        .iter()
        .map(|r| (&r.ratio - &global).abs())
        .max()
        .unwrap_or_else(Scalar::zero);
    out.json(
        "zoom_summary.json",
        &json!({
            "x0": scalar_json(&x0),
            "N1": n1,
            "N2": n2,
            "global_density": scalar_json(&global),
            "max_abs_deviation": scalar_json(&worst),
        }),
    )?;
    println!("global density {}", dec(&global));
    for r in &rows {
        println!("eps = {}: local density {}", dec(&r.eps), dec(&r.ratio));
    }
    Ok(Outcome::Success)
}
