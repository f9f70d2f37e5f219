use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use condreg::dataset::{self, Dataset, PlantedSpec};
use condreg::error::Error;
use condreg::terms::{sample_random_dnf, Dnf};
use condreg::{fit, RunConfig};

#[derive(Parser)]
#[command(name = "condreg", version, about = "Conditional linear regression: find a k-DNF segment and its linear fit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a condition and linear rule to a CSV dataset.
    Fit(FitArgs),
    /// Generate a synthetic benchmark dataset.
    Synth(SynthArgs),
    /// Evaluate a fitted solution on (held-out) data.
    Eval(EvalArgs),
}

#[derive(Args)]
struct FitArgs {
    /// CSV file with header x_1..x_n,y_1..y_d,z.
    data: PathBuf,
    /// JSON config; individual flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Report path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write per-iteration traces as a JSON-lines sidecar.
    #[arg(long)]
    verbose: bool,
    /// Sidecar path; defaults next to --out.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    s0: Option<f64>,
    #[arg(long = "t-est")]
    t_est: Option<f64>,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long = "r-init")]
    r_init: Option<f64>,
    #[arg(long = "r-final")]
    r_final: Option<f64>,
    #[arg(long = "tol")]
    tol: Option<f64>,
    #[arg(long = "cq")]
    cq: Option<f64>,
    #[arg(long = "crho")]
    crho: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    LineUniform,
    Sine,
    ScaleUp,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(value_enum)]
    family: Family,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
    /// Where to write the planted-solution JSON.
    #[arg(long = "spec-out")]
    spec_out: Option<PathBuf>,
    /// JSON file with the same keys as the flags below.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long = "n-points")]
    n_points: Option<usize>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long = "w-star")]
    w_star: Option<f64>,
    #[arg(long = "noise-sigma")]
    noise_sigma: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Planted DNF as JSON (line-uniform only); random when omitted.
    #[arg(long = "dnf-json")]
    dnf_json: Option<PathBuf>,
    /// Number of terms when sampling a random planted DNF.
    #[arg(long = "dnf-terms")]
    dnf_terms: Option<usize>,
}

/// Generator parameters; accepted as a JSON config file with these keys.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct SynthParams {
    n: usize,
    d: usize,
    n_points: usize,
    mu: f64,
    w_star: f64,
    noise_sigma: f64,
    seed: u64,
    dnf_terms: usize,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            n: 6,
            d: 5,
            n_points: 1000,
            mu: 0.25,
            w_star: -1.5,
            noise_sigma: 5.0,
            seed: 0,
            dnf_terms: 4,
        }
    }
}

#[derive(Args)]
struct EvalArgs {
    /// CSV dataset to evaluate on.
    data: PathBuf,
    /// Report JSON from a prior fit.
    solution: PathBuf,
}

#[derive(Serialize)]
struct SpecOut {
    family: String,
    n_points: usize,
    seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    planted: Option<PlantedSpec>,
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn run() -> Result<ExitCode, Box<dyn std::error::Error>> {
    match Cli::parse().command {
        Command::Fit(args) => cmd_fit(args),
        Command::Synth(args) => {
            cmd_synth(args)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Eval(args) => {
            cmd_eval(args)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn load_config(args: &FitArgs) -> Result<RunConfig, Box<dyn std::error::Error>> {
    let mut cfg = match &args.config {
        Some(path) => serde_json::from_str(&std::fs::read_to_string(path)?)?,
        None => RunConfig::default(),
    };
    macro_rules! overlay {
        ($($flag:ident => $field:ident),* $(,)?) => {
            $(if let Some(v) = args.$flag { cfg.$field = v; })*
        };
    }
    overlay! {
        k => k, mu => mu, gamma => gamma, delta => delta,
        s0 => s0, t_est => t_estimate, kappa => kappa,
        r_init => r_init, r_final => r_final, tol => solver_tol,
        cq => c_q, crho => c_rho, seed => seed, threads => threads,
    }
    if let Some(eps) = args.epsilon {
        cfg.epsilon = Some(eps);
    }
    Ok(cfg)
}

fn cmd_fit(args: FitArgs) -> Result<ExitCode, Box<dyn std::error::Error>> {
    let config = load_config(&args)?;
    config.validate()?;
    if config.threads > 0 {
        // Ignore failure: the global pool may already exist in-process.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(config.threads).build_global();
    }
    let t0 = std::time::Instant::now();
    let (n, d) = dataset::infer_csv_dims(&args.data)?;
    let data = dataset::load_csv(&args.data, n, d)?;
    let load_s = t0.elapsed().as_secs_f64();

    let mut outcome = fit(&data, &config)?;
    outcome.report.timing.load_s = load_s;
    outcome.report.timing.total_s += load_s;

    let json = serde_json::to_string_pretty(&outcome.report)?;
    match &args.out {
        Some(path) => std::fs::write(path, json)?,
        None => println!("{json}"),
    }
    if args.verbose || args.trace.is_some() {
        let path = args.trace.clone().unwrap_or_else(|| sidecar_path(args.out.as_deref()));
        write_trace_sidecar(&path, &outcome.report)?;
    }
    if outcome.selection_failed {
        eprintln!(
            "no candidate met the coverage floor: {}",
            outcome.report.selection_error.as_deref().unwrap_or("unknown")
        );
        return Ok(ExitCode::from(2));
    }
    Ok(ExitCode::SUCCESS)
}

fn sidecar_path(out: Option<&Path>) -> PathBuf {
    match out {
        Some(p) => p.with_extension("trace.jsonl"),
        None => PathBuf::from("condreg.trace.jsonl"),
    }
}

fn write_trace_sidecar(path: &Path, report: &condreg::Report) -> std::io::Result<()> {
    use std::io::Write;
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    for rec in &report.traces.initial_soft_regression {
        writeln!(
            f,
            "{}",
            serde_json::json!({"kind": "soft_regression", "record": rec})
        )?;
    }
    for rec in &report.traces.list_regression {
        writeln!(f, "{}", serde_json::json!({"kind": "list_regression", "record": rec}))?;
    }
    Ok(())
}

fn cmd_synth(args: SynthArgs) -> Result<(), Box<dyn std::error::Error>> {
    let mut p: SynthParams = match &args.config {
        Some(path) => serde_json::from_str(&std::fs::read_to_string(path)?)?,
        None => SynthParams::default(),
    };
    macro_rules! overlay {
        ($($flag:ident => $field:ident),* $(,)?) => {
            $(if let Some(v) = args.$flag { p.$field = v; })*
        };
    }
    overlay! {
        n => n, d => d, n_points => n_points, mu => mu,
        w_star => w_star, noise_sigma => noise_sigma, seed => seed,
        dnf_terms => dnf_terms,
    }

    let (data, spec_out) = match args.family {
        Family::LineUniform => {
            let dnf = match &args.dnf_json {
                Some(path) => Some(serde_json::from_str::<Dnf>(&std::fs::read_to_string(path)?)?),
                None => None,
            };
            let (data, planted) = line_uniform_with_retries(&p, dnf)?;
            (
                data,
                SpecOut {
                    family: "line_uniform".into(),
                    n_points: p.n_points,
                    seed: p.seed,
                    planted: Some(planted),
                },
            )
        }
        Family::Sine => {
            let data = dataset::synth_sine(p.n_points, p.noise_sigma, p.seed)?;
            (
                data,
                SpecOut { family: "sine".into(), n_points: p.n_points, seed: p.seed, planted: None },
            )
        }
        Family::ScaleUp => {
            let (data, planted) = dataset::synth_scale_up(p.n, p.d, p.n_points, p.mu, p.seed)?;
            (
                data,
                SpecOut {
                    family: "scale_up".into(),
                    n_points: p.n_points,
                    seed: p.seed,
                    planted: Some(planted),
                },
            )
        }
    };
    data.write_csv(&args.out)?;
    if let Some(path) = &args.spec_out {
        std::fs::write(path, serde_json::to_string_pretty(&spec_out)?)?;
    }
    Ok(())
}

/// Samples planted DNFs until the generator accepts one (a fixed DNF is
/// used as-is and failures propagate).
fn line_uniform_with_retries(
    p: &SynthParams,
    fixed_dnf: Option<Dnf>,
) -> Result<(Dataset, PlantedSpec), Error> {
    if let Some(dnf) = fixed_dnf {
        return dataset::synth_line_uniform(p.n, &dnf, p.mu, p.n_points, p.w_star, p.noise_sigma, p.seed);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed ^ 0xD1F_u64);
    let mut last = None;
    for _ in 0..1000 {
        let dnf = sample_random_dnf(p.n, 2.min(p.n), p.dnf_terms, &mut rng);
        match dataset::synth_line_uniform(p.n, &dnf, p.mu, p.n_points, p.w_star, p.noise_sigma, p.seed) {
            Ok(out) => return Ok(out),
            Err(e @ Error::Generation(_)) => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last.unwrap_or_else(|| Error::Generation("no feasible planted DNF found".into())))
}

fn cmd_eval(args: EvalArgs) -> Result<(), Box<dyn std::error::Error>> {
    let report: condreg::Report = serde_json::from_str(&std::fs::read_to_string(&args.solution)?)?;
    let selected = report
        .selected
        .as_ref()
        .ok_or_else(|| Error::Evaluation("report has no selected solution".into()))?;
    let dnf = selected
        .dnf
        .as_ref()
        .ok_or_else(|| Error::Evaluation("selected solution has no condition".into()))?;
    let (n, d) = dataset::infer_csv_dims(&args.data)?;
    let data = dataset::load_csv(&args.data, n, d)?;
    dnf.check_attrs(data.n_bool())?;
    let u = nalgebra::DVector::from_column_slice(&selected.u);
    let sol = condreg::cover::evaluate_candidate(&u, dnf, &data)?;
    let out = serde_json::json!({
        "n_rows": data.n_rows(),
        "coverage": sol.coverage,
        "cond_loss": sol.cond_loss,
    });
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(())
}
