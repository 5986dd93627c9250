use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use dilatekit::boundary::{numerical_range, BoundaryCurve};
use dilatekit::dilation::fit::FitOptions;
use dilatekit::dilation::{Dilation, MomentTable};
use dilatekit::json::{self, MatrixDoc};
use dilatekit::matrix_convex::{caratheodory_bound, caratheodory_reduce, MatrixConvexCombination, DEFAULT_SPLIT_SEED};
use dilatekit::pipeline::{self, Outcome};
use dilatekit::verify::verify_dilation;
use dilatekit::{CMatrix, Error, Tolerances};

const EXIT_INFEASIBLE: u8 = 2;
const EXIT_MALFORMED: u8 = 3;
const EXIT_VERIFY: u8 = 4;

#[derive(Parser)]
#[command(name = "dilatekit", version, about = "Finite-dimensional dilations from moment data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Unitary ρ-dilation of one operator through the block Toeplitz kernel
    DilateCircle(RunArgs),
    /// Regular unitary dilation of commuting operators (torus fit)
    DilateRegular(RunArgs),
    /// Normal dilation with spectrum on a convex curve (boundary density quadrature)
    DilateBoundary(RunArgs),
    /// Normal dilation with spectrum on the boundary of an annulus (two-circle fit)
    DilateAnnulus(RunArgs),
    /// q-commuting unitary dilation of a q-commuting pair (clock-shift fit)
    DilateQcommute(RunArgs),
    /// Carathéodory reduction of a matrix convex combination
    Reduce(RunArgs),
    /// Numerical range support sweep as CSV
    Numrange(RunArgs),
    /// Verify a dilation against a moment table
    Verify(RunArgs),
}

#[derive(Args, Clone)]
struct RunArgs {
    /// Input JSON (matrix, list of matrices, combination or dilation)
    #[arg(long)]
    input: Option<PathBuf>,
    /// Output directory
    #[arg(long)]
    output: Option<PathBuf>,
    /// Moment order N
    #[arg(long, default_value_t = 1)]
    order: usize,
    #[arg(long, default_value_t = 1.0)]
    rho: f64,
    /// Quadrature nodes or sweep angles
    #[arg(long, default_value_t = 256)]
    nodes: usize,
    /// disc | disc:R | ellipse:a,b | annulus:r | @file.json
    #[arg(long, default_value = "disc")]
    curve: String,
    #[arg(long, allow_hyphen_values = true)]
    a: Option<i64>,
    #[arg(long)]
    b: Option<usize>,
    /// Atoms per axis of the fitting grid
    #[arg(long, default_value_t = 16)]
    grid: usize,
    /// Highest monomial degree matched by dilate-boundary
    #[arg(long, default_value_t = 4)]
    degree: usize,
    /// Moment table JSON for verify
    #[arg(long)]
    moments: Option<PathBuf>,
    #[arg(long)]
    tol_residual: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_SPLIT_SEED)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

#[derive(Debug)]
enum Failure {
    Lib(Error),
    Io(String),
    Usage(String),
    Verification,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Lib(e) => match e {
                Error::Infeasible { .. }
                | Error::NotPsd { .. }
                | Error::NotContained
                | Error::NotIsometric { .. }
                | Error::ResolventSingular { .. } => EXIT_INFEASIBLE,
                _ => EXIT_MALFORMED,
            },
            Failure::Io(_) | Failure::Usage(_) => EXIT_MALFORMED,
            Failure::Verification => EXIT_VERIFY,
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Lib(e) => e.to_string(),
            Failure::Io(m) | Failure::Usage(m) => m.clone(),
            Failure::Verification => "verification failed".into(),
        }
    }
}

type Run<T> = std::result::Result<T, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_MALFORMED) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

fn run(command: Command) -> Run<()> {
    let args = match &command {
        Command::DilateCircle(a)
        | Command::DilateRegular(a)
        | Command::DilateBoundary(a)
        | Command::DilateAnnulus(a)
        | Command::DilateQcommute(a)
        | Command::Reduce(a)
        | Command::Numrange(a)
        | Command::Verify(a) => a.clone(),
    };
    validate(&args)?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(args.threads.max(1))
        .build_global()
        .map_err(|e| Failure::Usage(e.to_string()))?;
    let tol = tolerances(&args)?;
    let opts = FitOptions { fit_tol: tol.fit_tol, ..FitOptions::default() };
    match command {
        Command::DilateCircle(_) => {
            let t = single_operator(&args)?;
            report_outcome(&args, pipeline::dilate_circle(&t, args.rho, args.order, &tol)?)
        }
        Command::DilateRegular(_) => {
            let ts = operators(&args)?;
            report_outcome(&args, pipeline::dilate_regular(&ts, args.order, args.grid, &tol, &opts)?)
        }
        Command::DilateBoundary(_) => {
            let t = single_operator(&args)?;
            let curve = parse_curve(&args.curve)?;
            report_outcome(&args, pipeline::dilate_boundary(&t, &curve, args.nodes, args.degree, &tol)?)
        }
        Command::DilateAnnulus(_) => {
            let t = single_operator(&args)?;
            let r = match parse_curve(&args.curve)? {
                BoundaryCurve::Annulus { r } => r,
                _ => return Err(Failure::Usage("dilate-annulus needs --curve annulus:r".into())),
            };
            report_outcome(&args, pipeline::dilate_annulus(&t, r, args.order, args.grid, &tol, &opts)?)
        }
        Command::DilateQcommute(_) => {
            let ts = operators(&args)?;
            if ts.len() != 2 {
                return Err(Failure::Usage("dilate-qcommute needs exactly two operators".into()));
            }
            let (a, b) = match (args.a, args.b) {
                (Some(a), Some(b)) => (a, b),
                _ => return Err(Failure::Usage("dilate-qcommute needs integer --a and --b".into())),
            };
            report_outcome(&args, pipeline::dilate_qcommute(&ts[0], &ts[1], a, b, args.order, args.grid, &tol, &opts)?)
        }
        Command::Reduce(_) => {
            let combo: MatrixConvexCombination = read_json(input_path(&args)?)?;
            let reduced = caratheodory_reduce(&combo)?;
            let arity = combo.terms.first().map(|t| t.point.arity()).unwrap_or(0);
            let bound = caratheodory_bound(combo.target_level, arity, combo.is_selfadjoint());
            write_output(&args, "reduced.json", &json::to_string(&reduced)?)?;
            println!("terms = {} -> {}, bound = {}", combo.len(), reduced.len(), bound);
            Ok(())
        }
        Command::Numrange(_) => {
            let t = single_operator(&args)?;
            let report = numerical_range(&t, args.nodes)?;
            match &args.output {
                Some(_) => write_output(&args, "numrange.csv", &report.to_csv())?,
                None => print!("{}", report.to_csv()),
            }
            Ok(())
        }
        Command::Verify(_) => {
            let dil: Dilation = read_json(input_path(&args)?)?;
            let path = args.moments.as_ref().ok_or_else(|| Failure::Usage("verify needs --moments".into()))?;
            let targets: MomentTable = read_json(path)?;
            let report = verify_dilation(&dil, &targets, &dil.declaration, tol.residual_tol)?;
            let text = json::to_string(&report)?;
            match &args.output {
                Some(_) => write_output(&args, "report.json", &text)?,
                None => println!("{text}"),
            }
            println!("K = {}, max residual = {:.3e}, pass = {}", report.k, report.max_moment_residual, report.pass);
            if report.pass {
                Ok(())
            } else {
                Err(Failure::Verification)
            }
        }
    }
}

fn validate(args: &RunArgs) -> Run<()> {
    if args.order == 0 {
        return Err(Failure::Usage("--order must be at least 1".into()));
    }
    if args.nodes < 8 {
        return Err(Failure::Usage("--nodes must be at least 8".into()));
    }
    if args.b == Some(0) {
        return Err(Failure::Usage("--b must be at least 1".into()));
    }
    if !(args.rho.is_finite() && args.rho > 0.0) {
        return Err(Failure::Usage("--rho must be positive".into()));
    }
    Ok(())
}

/// Defaults, then `DILATEKIT_TOL_OVERRIDE`, then flags.
fn tolerances(args: &RunArgs) -> Run<Tolerances> {
    let mut tol = match std::env::var("DILATEKIT_TOL_OVERRIDE") {
        Ok(text) if !text.trim().is_empty() => json::from_str::<Tolerances>(&text)?,
        _ => Tolerances::default(),
    };
    if let Some(r) = args.tol_residual {
        tol.residual_tol = r;
    }
    tol.validate()?;
    Ok(tol)
}

fn input_path(args: &RunArgs) -> Run<&Path> {
    args.input.as_deref().ok_or_else(|| Failure::Usage("--input is required".into()))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Run<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    Ok(json::from_str(&text)?)
}

#[derive(Deserialize)]
#[serde(untagged)]
enum OperatorInput {
    One(MatrixDoc),
    Many(Vec<MatrixDoc>),
}

fn operators(args: &RunArgs) -> Run<Vec<CMatrix>> {
    let input: OperatorInput = read_json(input_path(args)?)?;
    Ok(match input {
        OperatorInput::One(m) => vec![m.0],
        OperatorInput::Many(ms) => ms.into_iter().map(|m| m.0).collect(),
    })
}

fn single_operator(args: &RunArgs) -> Run<CMatrix> {
    let mut ts = operators(args)?;
    if ts.len() != 1 {
        return Err(Failure::Usage("expected a single operator".into()));
    }
    Ok(ts.remove(0))
}

fn parse_curve(spec: &str) -> Run<BoundaryCurve> {
    match spec.strip_prefix('@') {
        Some(path) => read_json(Path::new(path)),
        None => Ok(BoundaryCurve::parse_spec(spec)?),
    }
}

fn write_output(args: &RunArgs, name: &str, text: &str) -> Run<()> {
    let dir = args.output.clone().unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir).map_err(|e| Failure::Io(format!("{}: {e}", dir.display())))?;
    let path = dir.join(name);
    std::fs::write(&path, text).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn report_outcome(args: &RunArgs, out: Outcome) -> Run<()> {
    write_output(args, "dilation.json", &json::to_string(&out.dilation)?)?;
    write_output(args, "report.json", &json::to_string(&out.report)?)?;
    let bound = out.report.dimension.map(|d| d.paper_bound).unwrap_or(0);
    println!("K = {}, paper bound = {}, max residual = {:.3e}", out.dilation.k, bound, out.report.max_moment_residual);
    if let Some(r) = out.fit_residual {
        println!("fit residual = {r:.3e}");
    }
    if let Some(q) = out.quadrature {
        println!("quadrature defect = {:.3e}, clipped mass = {:.3e}", q.pre_defect, q.clipped_mass);
    }
    if out.report.pass {
        Ok(())
    } else {
        Err(Failure::Verification)
    }
}
