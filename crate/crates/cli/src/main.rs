use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;

use hitchin_lattice::adhm::{self, ADHMData};
use hitchin_lattice::continuum::{
    lattice_to_continuum_rate, nahm_limit_sweep, HolomorphicFamily, Sampling,
};
use hitchin_lattice::io::{export_csv, export_json, DataFile, ExportField};
use hitchin_lattice::lattice::{residual_report, LatticeShape, MatrixLatticeField};
use hitchin_lattice::lax::{commutator_coefficients, integrability_certificate, parse_zetas};
use hitchin_lattice::solver::{self, InitialGuess, Normalization, SolverConfig};
use hitchin_lattice::Error;

const EXIT_USAGE: u8 = 1;
const EXIT_NONCONVERGENCE: u8 = 2;
const EXIT_VERIFY: u8 = 3;
const EXIT_IO: u8 = 4;

#[derive(Parser)]
#[command(name = "dhitchin", version, about = "Discrete Hitchin lattice toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve for positive instanton data and write a JSON data file.
    Solve(SolveArgs),
    /// Check a data file against the lattice equations.
    Verify(VerifyArgs),
    /// Commutator coefficients and integrability certificates of the Lax pair.
    Lax(LaxArgs),
    /// Continuum-limit convergence table.
    Converge(ConvergeArgs),
    /// Flat (j, k, value) table of one field.
    Export(ExportArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum NormalizeArg {
    B0,
    Sum,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    n1: usize,
    #[arg(long)]
    n2: usize,
    #[arg(long, value_enum, default_value = "b0")]
    normalize: NormalizeArg,
    /// Target sum of squares for `--normalize sum`.
    #[arg(long, default_value_t = 1.0)]
    sum_value: f64,
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    #[arg(long, default_value_t = 500)]
    max_iter: usize,
    /// Seed the iteration from smaller lattices.
    #[arg(long, conflicts_with = "seed")]
    continuation: bool,
    /// Random starting point with this seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Also assemble the ADHM matrices and check the Donaldson equations.
    #[arg(long)]
    adhm: bool,
    /// Also run the rank check on the assembled ADHM data.
    #[arg(long)]
    genericity: bool,
    /// Bound on residuals divided by `1 + m^2`, `m` the largest entry.
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    #[arg(long, default_value_t = 16)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
#[command(group(clap::ArgGroup::new("source").required(true).args(["input", "random"])))]
struct LaxArgs {
    /// Instanton data file, read in interior-coefficient mode.
    #[arg(long = "in")]
    input: Option<PathBuf>,
    /// Random periodic field: N1 N2 P SEED.
    #[arg(long, num_args = 4, value_names = ["N1", "N2", "P", "SEED"])]
    random: Option<Vec<u64>>,
    /// Comma-separated spectral parameters, e.g. `0,1,i,2+3i`.
    #[arg(long, default_value = "0,1,i", allow_hyphen_values = true)]
    zetas: String,
    #[arg(long, default_value_t = 4)]
    trials: usize,
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum ConvergeMode {
    Holomorphic,
    Nahm,
}

#[derive(Args)]
struct ConvergeArgs {
    #[arg(long, value_enum)]
    mode: ConvergeMode,
    /// Comma-separated lattice sizes, at least three.
    #[arg(long, value_delimiter = ',', required = true)]
    ns: Vec<usize>,
    /// Holomorphic function for `--mode holomorphic`: linear, quadratic or exp.
    #[arg(long, default_value = "exp")]
    family: String,
    /// Exit with a verification failure when the fitted order is lower.
    #[arg(long)]
    min_order: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct ExportArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    #[arg(long, value_parser = parse_field)]
    field: ExportField,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_field(s: &str) -> Result<ExportField, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::NonConvergence { .. } => EXIT_NONCONVERGENCE,
            Error::Io(_) | Error::Schema(_) => EXIT_IO,
            _ => EXIT_USAGE,
        };
        Failure::new(code, e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Lax(a) => cmd_lax(a),
        Command::Converge(a) => cmd_converge(a),
        Command::Export(a) => cmd_export(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn write_output(path: Option<&Path>, text: &str) -> Outcome {
    match path {
        Some(p) => std::fs::write(p, text)
            .map_err(|e| Failure::new(EXIT_IO, format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_solve(a: SolveArgs) -> Outcome {
    let normalization = match a.normalize {
        NormalizeArg::B0 => Normalization::FixB0,
        NormalizeArg::Sum => Normalization::FixSumSquares(a.sum_value),
    };
    let initial_guess = if a.continuation {
        InitialGuess::Continuation
    } else if let Some(seed) = a.seed {
        InitialGuess::Custom(solver::random_start(a.n1, a.n2, 0.5, seed)?)
    } else {
        InitialGuess::Ones
    };
    let config = SolverConfig {
        tolerance: a.tol,
        max_iterations: a.max_iter,
        normalization,
        initial_guess,
        ..SolverConfig::default()
    };
    let outcome = solver::solve(a.n1, a.n2, &config)?;
    DataFile::from_outcome(&outcome, &config).write(&a.out)?;
    println!(
        "converged: n1={} n2={} iterations={} max_abs={:.3e} scaled_max={:.3e}",
        a.n1, a.n2, outcome.iterations, outcome.report.max_abs, outcome.report.scaled_max
    );
    println!("wrote {}", a.out.display());
    Ok(())
}

fn cmd_verify(a: VerifyArgs) -> Outcome {
    let file = DataFile::read(&a.input)?;
    let mut failures = Vec::new();

    let non_positive = file.non_positive();
    for (name, j, k, v) in &non_positive {
        println!("non-positive {name}[{j},{k}] = {v:?}");
    }
    if !non_positive.is_empty() {
        failures.push(format!("{} non-positive entries", non_positive.len()));
    }

    let field = file.to_field()?;
    let bt = file.boundary_terms();
    let report = residual_report(&field, Some(&bt))?;
    let threshold = a.tol * (1.0 + report.field_scale * report.field_scale);
    println!(
        "lattice residual: max_abs={:.3e} scaled_max={:.3e} (tol {:.1e})",
        report.max_abs, report.scaled_max, a.tol
    );
    if !report.is_within(a.tol) {
        for (eq, j, k, v) in report.offending_sites(threshold) {
            println!("offending {eq} residual at ({j},{k}): {v:.3e}");
        }
        failures.push("lattice residual above tolerance".into());
    }

    if a.adhm || a.genericity {
        let (Some(a0), Some(b0)) = (file.a0, file.b0) else {
            return Err(Failure::new(
                EXIT_VERIFY,
                "ADHM checks need both a0 and b0 in the data file",
            ));
        };
        let data = adhm::assemble_field(&field, Complex64::new(a0, 0.0), Complex64::new(b0, 0.0))?;
        if a.adhm {
            verify_adhm(&data, &file, a.tol, report.field_scale, &mut failures)?;
        }
        if a.genericity {
            let g = adhm::genericity_check(&data, a.samples, a.seed)?;
            println!(
                "genericity: samples={} worst_ratio={:.3e} {}",
                g.samples,
                g.worst_ratio,
                if g.passed { "ok" } else { "FAILED" }
            );
            if let Some((z1, z2)) = g.failing_point {
                println!("rank drops at z1={z1} z2={z2}");
                failures.push("ADHM data not generic".into());
            }
        }
    }

    if failures.is_empty() {
        println!("verify: ok");
        Ok(())
    } else {
        Err(Failure::new(EXIT_VERIFY, failures.join("; ")))
    }
}

fn verify_adhm(
    data: &ADHMData,
    file: &DataFile,
    tol: f64,
    scale: f64,
    failures: &mut Vec<String>,
) -> Outcome {
    let d1 = adhm::donaldson_residual1(data)?;
    let d2 = adhm::donaldson_residual2(data)?;
    let max = |m: &hitchin_lattice::linalg::CMat| m.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let (m1, m2) = (max(&d1), max(&d2));
    let pattern = adhm::check_equivariant_pattern(data, file.n1, file.n2);
    println!(
        "donaldson residuals: N={} holomorphic={m1:.3e} moment={m2:.3e} pattern={}",
        data.dim(),
        if pattern { "ok" } else { "broken" }
    );
    if m1.max(m2) > tol * (1.0 + scale * scale) {
        failures.push("Donaldson residual above tolerance".into());
    }
    if !pattern {
        failures.push("ADHM matrices break the equivariant pattern".into());
    }
    Ok(())
}

fn cmd_lax(a: LaxArgs) -> Outcome {
    let zetas = parse_zetas(&a.zetas)?;
    let certified = match (&a.input, &a.random) {
        (Some(path), _) => lax_interior(&DataFile::read(path)?, &zetas, a.tol)?,
        (None, Some(r)) => {
            let dims: Vec<usize> = r[..3].iter().map(|&x| x as usize).collect();
            let shape = LatticeShape::periodic(dims[0], dims[1], dims[2])?;
            let field = MatrixLatticeField::random(shape, r[3]);
            lax_periodic(&field, &zetas, a.trials, r[3], a.tol)?
        }
        (None, None) => unreachable!("clap requires a source"),
    };
    if certified {
        println!("certified: yes");
        Ok(())
    } else {
        println!("certified: no");
        Err(Failure::new(EXIT_VERIFY, "commutator does not vanish"))
    }
}

fn lax_periodic(
    field: &MatrixLatticeField,
    zetas: &[Complex64],
    trials: usize,
    seed: u64,
    tol: f64,
) -> Result<bool, Failure> {
    let report = integrability_certificate(field, zetas, trials, seed)?;
    let [c0, c1, c2] = report.coefficient_norms;
    println!("coefficient norms: c0={c0:.3e} c1={c1:.3e} c2={c2:.3e}");
    for z in &report.per_zeta {
        println!(
            "zeta={}: certificate={:.3e} bound={:.3e} expansion_mismatch={:.3e}",
            z.zeta, z.ratio, z.bound, z.expansion_mismatch
        );
    }
    Ok(report.certifies(tol))
}

/// Zero-padded instanton data: away from the two corners every coefficient
/// must vanish, and the corner diagonal terms must equal the boundary data.
fn lax_interior(file: &DataFile, zetas: &[Complex64], tol: f64) -> Result<bool, Failure> {
    let field = file.to_field()?;
    let coeffs = commutator_coefficients(&field);
    let (n2, n1) = field.shape().site_extent();
    let a0 = file.a0.unwrap_or(0.0);
    let b0 = file.b0.unwrap_or(0.0);
    let corner_hi = (n2 - 1, n1 - 1);
    let expected = |site: (usize, usize)| {
        let mut e = 0.0;
        if site == corner_hi {
            e += a0 * a0;
        }
        if site == (0, 0) {
            e -= b0 * b0;
        }
        e
    };
    let norm = |g: &hitchin_lattice::Grid<hitchin_lattice::linalg::CMat>| {
        g.iter().map(|m| m.norm()).fold(0.0, f64::max)
    };
    let (c0, c2) = (norm(&coeffs.c0), norm(&coeffs.c2));
    let mut c1_interior: f64 = 0.0;
    let mut corner_mismatch: f64 = 0.0;
    for ((j, k), m) in coeffs.c1.indexed_iter() {
        if (j, k) == corner_hi || (j, k) == (0, 0) {
            let value = m[(0, 0)];
            let diff = (value - Complex64::new(expected((j, k)), 0.0)).norm();
            corner_mismatch = corner_mismatch.max(diff);
            println!(
                "c1 corner ({},{}) = {:?} expected {:?}",
                j + 1,
                k + 1,
                value.re,
                expected((j, k))
            );
        } else {
            c1_interior = c1_interior.max(m.norm());
        }
    }
    println!(
        "interior coefficient norms: c0={c0:.3e} c1={c1_interior:.3e} c2={c2:.3e} corner_mismatch={corner_mismatch:.3e}"
    );
    for zeta in zetas {
        let z = zeta.norm();
        println!(
            "zeta={zeta}: interior bound={:.3e}",
            c0 + z * c1_interior + z * z * c2
        );
    }
    let scale = field.max_norm().max(a0).max(b0);
    let limit = tol * (1.0 + scale * scale);
    Ok(c0.max(c1_interior).max(c2).max(corner_mismatch) <= limit)
}

fn cmd_converge(a: ConvergeArgs) -> Outcome {
    if a.ns.len() < 3 {
        return Err(Failure::new(
            EXIT_USAGE,
            format!("--ns needs at least 3 sizes, got {}", a.ns.len()),
        ));
    }
    let mut csv = String::new();
    let order = match a.mode {
        ConvergeMode::Holomorphic => {
            let family: HolomorphicFamily = a.family.parse()?;
            let cf = family.field([-0.5, 1.5, -0.5, 1.5]);
            let table =
                lattice_to_continuum_rate(&cf, &a.ns, Sampling::Window { x0: 0.0, y0: 0.0 })?;
            csv.push_str("n,scaled_residual,max_residual\n");
            for r in &table.rows {
                writeln!(csv, "{},{:?},{:?}", r.n, r.scaled_residual, r.max_residual).unwrap();
            }
            writeln!(csv, "# fitted_order={}", order_text(table.order.value())).unwrap();
            writeln!(csv, "# raw_order={}", order_text(table.raw_order.value())).unwrap();
            writeln!(csv, "# continuum_residual={:?}", table.continuum_residual).unwrap();
            table.order.value()
        }
        ConvergeMode::Nahm => {
            let sweep = nahm_limit_sweep(&a.ns, &SolverConfig::default())?;
            csv.push_str("n,max_error,f_error,g_error,h_error,central_f\n");
            for r in &sweep.rows {
                writeln!(
                    csv,
                    "{},{:?},{:?},{:?},{:?},{:?}",
                    r.n, r.max_error, r.f_error, r.g_error, r.h_error, r.central_f
                )
                .unwrap();
            }
            writeln!(csv, "# fitted_order={}", order_text(sweep.order.value())).unwrap();
            let c = &sweep.calibration;
            writeln!(
                csv,
                "# calibration beta={:?} tau={:?} fitted_at={}",
                c.beta, c.tau, c.fitted_at
            )
            .unwrap();
            sweep.order.value()
        }
    };
    write_output(a.out.as_deref(), &csv)?;
    if a.out.is_some() {
        println!("fitted order: {}", order_text(order));
    }
    match a.min_order {
        Some(min) if !(order >= min) => Err(Failure::new(
            EXIT_VERIFY,
            format!("fitted order {} below {min}", order_text(order)),
        )),
        _ => Ok(()),
    }
}

fn order_text(order: f64) -> String {
    if order.is_infinite() {
        "exact".into()
    } else {
        format!("{order:.6}")
    }
}

fn cmd_export(a: ExportArgs) -> Outcome {
    let file = DataFile::read(&a.input)?;
    let text = match a.format {
        Format::Csv => export_csv(&file, a.field),
        Format::Json => export_json(&file, a.field),
    };
    write_output(a.out.as_deref(), &text)
}
