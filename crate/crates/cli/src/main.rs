//! `jres`: direct and inverse resonance problems for eventually periodic
//! Jacobi matrices, driven by JSON files.
//!
//! Exit status is 0 on success, 2 when the input is well formed but
//! mathematically inadmissible, and 1 on any other failure.

mod io;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use jacobi_resonance::direct::DirectSolution;
use jacobi_resonance::inverse::build_measure_with;
use jacobi_resonance::lab::{
    add_point_mass, build_perturbation_determinant, check_damsim, christoffel_add, remove_point_mass,
    stability_experiment, AddOutcome, DamSimReport, PerturbationDeterminant, StabilityExperimentConfig,
};
use jacobi_resonance::reconstruct::{
    hankel_reconstruct_n, moments, stieltjes_reconstruct_with, CoefficientReport, STIELTJES_NODES,
    STIELTJES_MAX_NODES, TAIL_TOL,
};
use jacobi_resonance::{
    detect_tail, solve_direct, validate_configuration, BandSet, Coefficients, EventuallyPeriodicOperator,
    SingularityConfiguration, SpectralMeasure,
};
use serde::{Deserialize, Serialize};

use crate::io::{parse, read_json, read_text, write_json, write_text, Invalid};

#[derive(Parser)]
#[command(name = "jres", version, about = "Eigenvalues, resonances and spectral measures of Jacobi matrices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Singularities, denominator and density of an operator.
    Direct(DirectArgs),
    /// Spectral measure, and optionally coefficients, from singularities.
    Inverse(InverseArgs),
    /// Check that singularities interlace oddly with the bands.
    Validate(ValidateArgs),
    /// Jacobi coefficients and tail of a spectral measure.
    Reconstruct(ReconstructArgs),
    /// Remove or add a point mass, or apply a two-point Christoffel step.
    Perturb(PerturbArgs),
    /// Coefficient error against perturbation size.
    Stability(StabilityArgs),
    /// Check a perturbation determinant against the admissibility clauses.
    Damsim(DamsimArgs),
}

#[derive(Args)]
struct Io {
    /// Input JSON file, `-` for stdin.
    #[arg(default_value = "-")]
    input: PathBuf,
    /// Output JSON file, `-` for stdout.
    #[arg(short, long, default_value = "-")]
    output: PathBuf,
}

#[derive(Args)]
struct DirectArgs {
    #[command(flatten)]
    io: Io,
    /// Write the absolutely continuous density as `x,density` CSV.
    #[arg(long)]
    density: Option<PathBuf>,
    #[arg(long, default_value_t = 513)]
    density_points: usize,
}

#[derive(Args)]
struct InverseArgs {
    #[command(flatten)]
    io: Io,
    /// Band edges, overriding those of the input.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    bands: Option<Vec<f64>>,
    /// Quadrature nodes per band, a power of two in 64..=4096.
    #[arg(long, value_parser = parse_nodes)]
    nodes: Option<usize>,
    /// Also reconstruct the coefficients into this file.
    #[arg(long)]
    coefficients: Option<PathBuf>,
    /// Number of coefficients to reconstruct.
    #[arg(short, long)]
    n: Option<usize>,
    /// Tolerance for tail detection.
    #[arg(long, default_value_t = TAIL_TOL)]
    tol: f64,
}

#[derive(Args)]
struct ValidateArgs {
    #[command(flatten)]
    io: Io,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    bands: Option<Vec<f64>>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Stieltjes,
    Hankel,
}

#[derive(Args)]
struct ReconstructArgs {
    #[command(flatten)]
    io: Io,
    #[arg(short, long)]
    n: Option<usize>,
    #[arg(long, value_enum, default_value = "stieltjes")]
    method: Method,
    /// Largest discretization tried by the Stieltjes procedure.
    #[arg(long, value_parser = parse_nodes)]
    nodes: Option<usize>,
    #[arg(long, default_value_t = TAIL_TOL)]
    tol: f64,
    /// Also write `n,a_n,b_n` CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
#[command(group(ArgGroup::new("surgery").required(true).args(["remove", "add", "christoffel"])))]
struct PerturbArgs {
    #[command(flatten)]
    io: Io,
    /// Remove the point mass at this eigenvalue.
    #[arg(long, allow_hyphen_values = true)]
    remove: Option<f64>,
    /// Add a point mass at this resonance.
    #[arg(long, allow_hyphen_values = true)]
    add: Option<f64>,
    /// Mass of the added point; defaults to the canonical weight.
    #[arg(long, requires = "add")]
    weight: Option<f64>,
    /// Multiply by `(x - E)(x - E - shift)` around this point.
    #[arg(long, allow_hyphen_values = true, requires = "shift")]
    christoffel: Option<f64>,
    #[arg(long, allow_hyphen_values = true, requires = "christoffel")]
    shift: Option<f64>,
}

#[derive(Args)]
struct StabilityArgs {
    #[command(flatten)]
    io: Io,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    edge_exclusion: Option<f64>,
    /// Truncation radius, `inf` for none; repeatable.
    #[arg(long)]
    radius: Vec<f64>,
    /// Perturbation size; repeatable.
    #[arg(long)]
    epsilon: Vec<f64>,
    /// Also write every trial as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct DamsimArgs {
    #[command(flatten)]
    io: Io,
    /// Radius of the disk on which zeros are examined.
    #[arg(long, default_value_t = f64::INFINITY)]
    radius: f64,
    /// Read an operator with free tail and build its determinant.
    #[arg(long)]
    from_operator: bool,
}

fn parse_nodes(s: &str) -> Result<usize, String> {
    let n: usize = s.parse().map_err(|e| format!("{e}"))?;
    if n.is_power_of_two() && (64..=4096).contains(&n) {
        Ok(n)
    } else {
        Err(format!("{n} is not a power of two between 64 and 4096"))
    }
}

/// Singularities with optional bands; the free bands when absent.
#[derive(Deserialize)]
struct SingularityInput {
    #[serde(default)]
    bands: Option<BandSet>,
    singularities: SingularityConfiguration,
}

impl SingularityInput {
    fn read(path: &Path, edges: Option<Vec<f64>>) -> Result<(SingularityConfiguration, BandSet)> {
        let input: SingularityInput = read_json(path)?;
        let bands = match edges {
            Some(e) => BandSet::new(e).map_err(jacobi_resonance::Error::from)?,
            None => input.bands.unwrap_or_else(BandSet::free),
        };
        Ok((input.singularities, bands))
    }
}

#[derive(Serialize)]
struct DamsimOutput {
    determinant: PerturbationDeterminant,
    #[serde(flatten)]
    report: DamSimReport,
}

fn lib<T, E: Into<jacobi_resonance::Error>>(r: Result<T, E>) -> Result<T> {
    r.map_err(|e| anyhow::Error::new(e.into()))
}

/// Enough coefficients to see the tail behind a denominator of the given
/// degree.
fn default_len(measure: &SpectralMeasure) -> usize {
    let p = measure.bands.p();
    let k = (measure.a_poly.degree() + 1).saturating_sub(p);
    k.div_ceil(2) + 2 * p + 4
}

fn reconstruct(
    measure: &SpectralMeasure,
    n: Option<usize>,
    method: Method,
    nodes: Option<usize>,
    tol: f64,
) -> Result<CoefficientReport> {
    let n = n.unwrap_or_else(|| default_len(measure));
    let coeffs: Coefficients = match method {
        Method::Stieltjes => {
            let cap = nodes.unwrap_or(STIELTJES_MAX_NODES);
            lib(stieltjes_reconstruct_with(measure, n, STIELTJES_NODES.min(cap / 2), cap))?
        }
        Method::Hankel => lib(hankel_reconstruct_n(&moments(measure, 2 * n + 1), n))?,
    };
    let fit = lib(detect_tail(&coeffs.a, &coeffs.b, measure.bands.p(), tol))?;
    Ok(CoefficientReport::new(&coeffs, &fit))
}

/// An operator, or a coefficient report whose tail defines one.
fn read_operator(path: &Path) -> Result<EventuallyPeriodicOperator> {
    let text = read_text(path)?;
    let value: serde_json::Value = parse(path, &text)?;
    if value.get("head_a").is_some() {
        return parse(path, &text);
    }
    if value.get("s").is_some() && value.get("a").is_some() {
        let report: CoefficientReport = parse(path, &text)?;
        if report.s > report.a.len() || report.s > report.b.len() {
            return Err(anyhow!("head length {} exceeds the coefficients given", report.s));
        }
        return Ok(report.operator());
    }
    Err(anyhow!("{}: expected an operator or a coefficient report", path.display()))
}

fn direct(args: DirectArgs) -> Result<()> {
    let op = read_operator(&args.io.input)?;
    let mut sol: DirectSolution = lib(solve_direct(&op))?;
    sol.singularities = sol.singularities.sorted();
    if let Some(path) = &args.density {
        let mut csv = String::from("x,density\n");
        for (x, d) in sol.measure().density_samples(args.density_points) {
            csv.push_str(&format!("{x:.16e},{d:.16e}\n"));
        }
        write_text(path, &csv)?;
    }
    write_json(&args.io.output, &sol)
}

fn inverse(args: InverseArgs) -> Result<()> {
    let (cfg, bands) = SingularityInput::read(&args.io.input, args.bands)?;
    let measure = lib(build_measure_with(&cfg.sorted(), &bands, args.nodes))?;
    if let Some(path) = &args.coefficients {
        let report = reconstruct(&measure, args.n, Method::Stieltjes, None, args.tol)?;
        write_json(path, &report)?;
    }
    write_json(&args.io.output, &measure)
}

fn validate(args: ValidateArgs) -> Result<()> {
    let (cfg, bands) = SingularityInput::read(&args.io.input, args.bands)?;
    let report = validate_configuration(&cfg, &bands);
    write_json(&args.io.output, &report)?;
    if report.valid {
        Ok(())
    } else {
        Err(Invalid(report.to_string()).into())
    }
}

fn reconstruct_cmd(args: ReconstructArgs) -> Result<()> {
    let measure: SpectralMeasure = read_json(&args.io.input)?;
    let report = reconstruct(&measure, args.n, args.method, args.nodes, args.tol)?;
    if let Some(path) = &args.csv {
        write_text(path, &report.to_csv())?;
    }
    write_json(&args.io.output, &report)
}

fn perturb(args: PerturbArgs) -> Result<()> {
    let measure: SpectralMeasure = read_json(&args.io.input)?;
    let out = if let Some(e) = args.remove {
        lib(remove_point_mass(&measure, e))?
    } else if let Some(e) = args.add {
        let w = args.weight.unwrap_or_else(|| {
            let c = measure.canonical_weight(e);
            c / (1.0 + c)
        });
        match lib(add_point_mass(&measure, e, w))? {
            AddOutcome::Accepted { measure } => measure,
            AddOutcome::Rejected { rejection } => {
                write_json(&args.io.output, &rejection)?;
                return Err(Invalid(rejection.reasons.join("; ")).into());
            }
        }
    } else {
        let (e, shift) = args.christoffel.zip(args.shift).context("--christoffel needs --shift")?;
        lib(christoffel_add(&measure, e, shift))?
    };
    write_json(&args.io.output, &out)
}

fn stability(args: StabilityArgs) -> Result<()> {
    let mut config: StabilityExperimentConfig = read_json(&args.io.input)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if args.edge_exclusion.is_some() {
        config.edge_exclusion = args.edge_exclusion;
    }
    if !args.radius.is_empty() {
        config.truncation_radii = args.radius.iter().map(|&r| r.is_finite().then_some(r)).collect();
    }
    if !args.epsilon.is_empty() {
        config.epsilons = args.epsilon;
    }
    let report = lib(stability_experiment(&config))?;
    if let Some(path) = &args.csv {
        write_text(path, &report.to_csv())?;
    }
    write_json(&args.io.output, &report)
}

fn damsim(args: DamsimArgs) -> Result<()> {
    let determinant = if args.from_operator {
        let op = read_operator(&args.io.input)?;
        lib(build_perturbation_determinant(&op))?
    } else {
        read_json(&args.io.input)?
    };
    let report = lib(check_damsim(&determinant, args.radius))?;
    let failed: Vec<String> = report
        .clauses
        .iter()
        .filter(|c| !c.passed)
        .map(|c| format!("({})", c.clause))
        .collect();
    write_json(&args.io.output, &DamsimOutput { determinant, report })?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Invalid(format!("clauses {} fail", failed.join(", "))).into())
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    let invalid = err.downcast_ref::<Invalid>().is_some()
        || err
            .downcast_ref::<jacobi_resonance::Error>()
            .is_some_and(jacobi_resonance::Error::is_invalid_input);
    if invalid {
        2
    } else {
        1
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Direct(a) => direct(a),
        Command::Inverse(a) => inverse(a),
        Command::Validate(a) => validate(a),
        Command::Reconstruct(a) => reconstruct_cmd(a),
        Command::Perturb(a) => perturb(a),
        Command::Stability(a) => stability(a),
        Command::Damsim(a) => damsim(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("jres: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
