//! `capsobolev`: weight checks, asymptotic sweeps, norm equivalence reports
//! and the direct-versus-multiplier cap-average cross-check.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use capsobolev::caps::CapAverageContext;
use capsobolev::coeffs::HarmonicCoeffs;
use capsobolev::remainders::{l_grid, sweep, FunctionalParams, FunctionalRegistry};
use capsobolev::sobolev::equivalence_report;
use capsobolev::sphere2::{cap_averages_direct, evaluate, unit_vector, SphericalGrid};
use capsobolev::weights::{fine_condition_ratio, validate, Weight, WeightSpec};
use capsobolev::Error;
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ORACLE_TOL: f64 = 1e-6;

#[derive(Parser)]
#[command(name = "capsobolev", version, about = "Weighted cap averages and Sobolev square functions on spheres")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a weight and report the fine-condition ratio.
    WeightsCheck(WeightsCheckArgs),
    /// Tabulate I or J over a degree range and fit the growth exponent.
    Sweep(SweepArgs),
    /// Compare the Sobolev norm of a coefficient file with its square-function norm.
    Equivalence(EquivalenceArgs),
    /// Check grid cap averages of random Y_l against multiplier(l, t)·Y_l(ξ) on S².
    OracleCompare(OracleArgs),
}

#[derive(Args)]
struct WeightArg {
    /// Weight JSON file, or inline JSON starting with '{'. Defaults to ρ ≡ 1 on [0, π].
    #[arg(long)]
    weight: Option<String>,
}

#[derive(Args)]
struct WeightsCheckArgs {
    #[command(flatten)]
    weight: WeightArg,
    /// Dimensions to report (repeatable).
    #[arg(long = "d", default_values_t = [3])]
    d: Vec<usize>,
    /// Orders to report (repeatable).
    #[arg(long = "n", default_values_t = [1])]
    n: Vec<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    weight: WeightArg,
    #[arg(long, default_value_t = 3)]
    d: usize,
    /// Registered functional: I (fractional α) or J (α = 2n). Inferred when omitted.
    #[arg(long)]
    functional: Option<String>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 16)]
    lmin: usize,
    #[arg(long, default_value_t = 256)]
    lmax: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args)]
struct EquivalenceArgs {
    #[command(flatten)]
    weight: WeightArg,
    /// Coefficient JSON `{"d", "L", "blocks"}`.
    #[arg(long)]
    coeffs: PathBuf,
    #[arg(long, default_value_t = 3)]
    d: usize,
    /// Smoothness indices (repeatable); several give a JSON array.
    #[arg(long, required = true)]
    alpha: Vec<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    weight: WeightArg,
    #[arg(long, default_value_t = 3)]
    d: usize,
    /// Band limit of the grid and of the test harmonics.
    #[arg(long, default_value_t = 16)]
    band: usize,
    /// Radii (repeatable); default is 10 geometric points in [T/20, T].
    #[arg(long)]
    t: Vec<f64>,
    /// Number of random centres ξ.
    #[arg(long, default_value_t = 5)]
    points: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

/// Error carrying the process exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidWeight(_) => 2,
            Error::Numeric { .. } => 3,
            Error::Parameter(_) => 4,
            Error::DimensionMismatch { .. } => 5,
            _ => 1,
        };
        Self::new(code, e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let run = match cli.command {
        Command::WeightsCheck(a) => weights_check(a),
        Command::Sweep(a) => run_sweep(a),
        Command::Equivalence(a) => equivalence(a),
        Command::OracleCompare(a) => oracle_compare(a),
    };
    match run {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn load_spec(arg: &WeightArg) -> Result<WeightSpec, Failure> {
    let Some(src) = &arg.weight else {
        return Ok(WeightSpec::constant(PI));
    };
    let text = if src.trim_start().starts_with('{') {
        src.clone()
    } else {
        fs::read_to_string(src).map_err(|e| Failure::new(2, format!("cannot read weight {src}: {e}")))?
    };
    WeightSpec::from_json(&text).map_err(|e| Failure::new(2, format!("weight JSON: {e}")))
}

fn load_weight(arg: &WeightArg) -> Result<Weight, Failure> {
    Ok(Weight::from_spec(&load_spec(arg)?)?)
}

fn write_out(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Failure::new(1, format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn weights_check(a: WeightsCheckArgs) -> Result<(), Failure> {
    let spec = load_spec(&a.weight)?;
    let report = validate(&spec);
    if !report.is_valid() {
        println!("weight: INVALID");
        for v in &report.violations {
            println!("  {}: {}", v.clause, v.message);
        }
        return Err(Failure::new(2, format!("invalid weight: {report}")));
    }
    let w = Weight::from_spec(&spec)?;
    println!("weight: valid ({})", w.label());
    for &d in &a.d {
        for &n in &a.n {
            match fine_condition_ratio(&w, d, n) {
                Ok(r) => {
                    let verdict = if r < 1.0 { "satisfies" } else { "violates" };
                    println!("d={d} n={n} fine_ratio={r:.12} {verdict}");
                }
                Err(e) => println!("d={d} n={n} fine_ratio=undefined ({e})"),
            }
        }
    }
    Ok(())
}

fn run_sweep(a: SweepArgs) -> Result<(), Failure> {
    let w = load_weight(&a.weight)?;
    let ctx = CapAverageContext::with_defaults(a.d, w)?;
    let name = a
        .functional
        .clone()
        .unwrap_or_else(|| if a.alpha.is_none() && a.n.is_some() { "J" } else { "I" }.to_string());
    let params = FunctionalParams { alpha: a.alpha, n: a.n };
    let functional = FunctionalRegistry::default().build(&name, &params).map_err(|e| {
        let mut f = Failure::from(e);
        if let (Some(alpha), "I") = (a.alpha, name.as_str()) {
            if alpha > 0.0 && alpha.fract() == 0.0 && (alpha as usize).is_multiple_of(2) {
                f.message += &format!("; run `sweep --functional J --n {}` instead", alpha as usize / 2);
            }
        }
        f
    })?;
    let ls = l_grid(a.lmin, a.lmax);
    let res = sweep(&ctx, functional.as_ref(), &ls)?;
    for w in &res.warnings {
        eprintln!("warning: {w}");
    }
    let text = match a.format {
        Format::Csv => res.to_csv(),
        Format::Json => serde_json::to_string_pretty(&res).map_err(|e| Failure::new(1, e.to_string()))? + "\n",
    };
    write_out(a.out.as_deref(), &text)?;
    if let Some(fail) = &res.failure {
        return Err(Failure::new(3, format!("quadrature failure at {fail}; partial table written")));
    }
    if let Some(s) = res.slope {
        eprintln!("slope {s:.4} (expected {:.4})", res.power);
    }
    Ok(())
}

fn equivalence(a: EquivalenceArgs) -> Result<(), Failure> {
    let w = load_weight(&a.weight)?;
    let text = fs::read_to_string(&a.coeffs)
        .map_err(|e| Failure::new(1, format!("cannot read {}: {e}", a.coeffs.display())))?;
    let coeffs = HarmonicCoeffs::from_json(&text)?;
    if coeffs.dim() != a.d {
        return Err(Error::DimensionMismatch { expected: a.d, found: coeffs.dim() }.into());
    }
    let ctx = CapAverageContext::with_defaults(a.d, w)?;
    let mut reports = Vec::new();
    for &alpha in &a.alpha {
        let r = equivalence_report(&coeffs, alpha, &ctx)?;
        eprintln!(
            "alpha={alpha} lhs={:.10e} (norm {:.10e}) rhs={:.10e} (norm {:.10e}) ratio={}",
            r.lhs,
            r.lhs.sqrt(),
            r.rhs,
            r.rhs.sqrt(),
            r.ratio.map_or("undefined".to_string(), |x| format!("{x:.10}"))
        );
        for w in &r.warnings {
            eprintln!("warning: {w}");
        }
        reports.push(r);
    }
    let json = if reports.len() == 1 {
        serde_json::to_string_pretty(&reports[0])
    } else {
        serde_json::to_string_pretty(&reports)
    }
    .map_err(|e| Failure::new(1, e.to_string()))?;
    write_out(a.out.as_deref(), &(json + "\n"))
}

fn oracle_compare(a: OracleArgs) -> Result<(), Failure> {
    if a.d != 3 {
        return Err(Error::DimensionMismatch { expected: 3, found: a.d }.into());
    }
    let w = load_weight(&a.weight)?;
    let span = w.span();
    let ts = if a.t.is_empty() {
        let lo = span / 20.0;
        (0..10).map(|i| lo * (span / lo).powf(i as f64 / 9.0)).collect()
    } else {
        a.t.clone()
    };
    let ctx = CapAverageContext::with_defaults(3, w.clone())?;
    let table = ctx.multiplier_table(a.band, &ts)?;
    let grid = SphericalGrid::new(a.band);
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let centres: Vec<_> = (0..a.points)
        .map(|_| {
            let z: f64 = rng.gen_range(-1.0..1.0);
            unit_vector(z.acos(), rng.gen_range(0.0..2.0 * PI))
        })
        .collect();
    let mut worst = (0.0f64, 0usize, 0.0f64, [0.0; 3]);
    let mut coarse = Vec::new();
    for l in 0..=a.band {
        let block = (0..2 * l + 1).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let y = HarmonicCoeffs::single_degree(3, a.band, l, block)?;
        let samples = grid.synthesis(&y)?;
        for xi in &centres {
            let at = evaluate(&y, *xi)?;
            for (i, avg) in cap_averages_direct(&grid, &samples, *xi, &ts, &w)?.iter().enumerate() {
                let err = (avg.value - table.get(l, i) * at).abs();
                if err > worst.0 {
                    worst = (err, l, ts[i], *xi);
                }
                if avg.under_resolved && !coarse.contains(&ts[i].to_bits()) {
                    coarse.push(ts[i].to_bits());
                }
            }
        }
    }
    for t in coarse {
        eprintln!(
            "warning: t = {} is below the grid resolution 2π/L = {:.4}",
            f64::from_bits(t),
            2.0 * PI / a.band.max(1) as f64
        );
    }
    let (err, l, t, xi) = worst;
    let verdict = if err <= ORACLE_TOL { "PASS" } else { "FAIL" };
    println!(
        "{verdict}: max |direct - multiplier| = {err:.3e} (tol {ORACLE_TOL:e}) at l={l} t={t:.6} xi=[{:.6}, {:.6}, {:.6}]",
        xi[0], xi[1], xi[2]
    );
    if err > ORACLE_TOL {
        return Err(Failure::new(6, format!("oracle exceedance {err:.3e} at l={l} t={t}")));
    }
    Ok(())
}
