use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use shapeopt::harness::{
    format_table, initial_shape, read_curve_csv, records_csv, render_svg, run_property_suite, run_table1,
    ExperimentSpec, MethodRun, Table1Report,
};
use shapeopt::solver::{optimize, Method, Reference};
use shapeopt::{ShapeError, VolumeFunctional};

const EXIT_SUITE_FAILURE: u8 = 1;
const EXIT_SOLVER: u8 = 2;
const EXIT_BAD_INPUT: u8 = 3;

#[derive(Parser)]
#[command(name = "shapeopt", version, about = "Riemannian shape optimisation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Steepest descent against Newton from the standard starting curve.
    Table1(SpecArgs),
    /// Run a single method.
    Run {
        #[arg(long, value_enum)]
        method: MethodArg,
        /// Start from this curve instead of the standard one.
        #[arg(long)]
        input: Option<PathBuf>,
        #[command(flatten)]
        spec: SpecArgs,
    },
    /// Run the seeded property suite and print its JSON report.
    Verify {
        #[arg(long)]
        seed: Option<u64>,
        /// Also write the report here.
        #[arg(long)]
        report: Option<PathBuf>,
        #[command(flatten)]
        spec: SpecArgs,
    },
    /// Draw a curve file as SVG.
    Render {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args, Clone)]
#[command(allow_negative_numbers = true)]
struct SpecArgs {
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    nodes: Option<usize>,
    #[arg(long = "metric-a")]
    metric_a: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON experiment file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Sd,
    Newton,
    NewtonGeneral,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Sd => Method::SteepestDescent,
            MethodArg::Newton => Method::NewtonMultiplicative,
            MethodArg::NewtonGeneral => Method::NewtonGeneralForm,
        }
    }
}

struct Failure {
    code: u8,
    message: String,
}

fn exit_code(e: &ShapeError) -> u8 {
    match e {
        ShapeError::SingularHessian(_)
        | ShapeError::ShapeDegenerate(_)
        | ShapeError::LineSearchFailed(_)
        | ShapeError::NonFinite(_)
        | ShapeError::ProjectionFailed(_)
        | ShapeError::InsufficientData(_) => EXIT_SOLVER,
        _ => EXIT_BAD_INPUT,
    }
}

impl From<ShapeError> for Failure {
    fn from(e: ShapeError) -> Self {
        Failure {
            code: exit_code(&e),
            message: e.to_string(),
        }
    }
}

fn bad_input(message: String) -> Failure {
    Failure {
        code: EXIT_BAD_INPUT,
        message,
    }
}

fn build_spec(args: &SpecArgs) -> Result<ExperimentSpec, Failure> {
    let mut spec = match &args.config {
        Some(path) => {
            ExperimentSpec::from_json_file(path).map_err(|e| bad_input(format!("{}: {e}", path.display())))?
        }
        None => ExperimentSpec::default(),
    };
    if let Some(mu) = args.mu {
        spec.mu = mu;
    }
    if let Some(n) = args.nodes {
        spec.n = n;
    }
    if let Some(a) = args.metric_a {
        spec.a = a;
    }
    if let Some(out) = &args.out {
        spec.output_dir = out.clone();
    }
    spec.validate().map_err(|e| bad_input(e.to_string()))?;
    Ok(spec)
}

fn write(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| bad_input(format!("{}: {e}", path.display())))
}

fn table1(args: &SpecArgs) -> Result<(), Failure> {
    let spec = build_spec(args)?;
    let result = run_table1(&spec);
    let table = fs::read_to_string(spec.output_dir.join("table1.txt")).unwrap_or_default();
    print!("{table}");
    result?;
    println!("wrote {}", spec.output_dir.display());
    Ok(())
}

fn run(method: Method, input: Option<&Path>, args: &SpecArgs) -> Result<(), Failure> {
    let mut spec = build_spec(args)?;
    spec.methods = vec![method];
    let c0 = match input {
        Some(path) => read_curve_csv(path).map_err(|e| bad_input(format!("{}: {e}", path.display())))?,
        None => initial_shape(spec.n)?,
    };
    let f = VolumeFunctional::mso(spec.mu)?;
    let config = spec.solver_config(method)?;
    let (records, error) = match optimize(&c0, &f, &config, Some(&Reference::Ellipse { mu: spec.mu })) {
        Ok(r) => (r, None),
        Err(fail) => (fail.records, Some(fail.error)),
    };

    fs::create_dir_all(&spec.output_dir).map_err(|e| bad_input(format!("{}: {e}", spec.output_dir.display())))?;
    let name = method.short_name();
    write(&spec.output_dir.join(format!("{name}.csv")), &records_csv(&records))?;
    let curves: Vec<Vec<[f64; 2]>> = records.iter().map(|r| r.nodes.clone()).collect();
    write(&spec.output_dir.join(format!("{name}.svg")), &render_svg(&curves))?;
    let report = Table1Report {
        mu: spec.mu,
        nodes: c0.len(),
        metric_a: spec.a,
        runs: vec![MethodRun {
            method,
            records,
            error: error.as_ref().map(|e| e.to_string()),
        }],
    };
    print!("{}", format_table(&report));
    match error {
        Some(e) => Err(e.into()),
        None => Ok(()),
    }
}

fn verify(seed: Option<u64>, report_path: Option<&Path>, args: &SpecArgs) -> Result<(), Failure> {
    let mut spec = build_spec(args)?;
    if let Some(s) = seed {
        spec.seed = s;
    }
    let report = run_property_suite(&spec);
    let json = serde_json::to_string_pretty(&report).expect("report serialises");
    println!("{json}");
    if let Some(path) = report_path {
        write(path, &json)?;
    }
    if report.passed {
        Ok(())
    } else {
        let failed: Vec<&str> = report
            .checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name.as_str())
            .collect();
        Err(Failure {
            code: EXIT_SUITE_FAILURE,
            message: format!("failed checks: {}", failed.join(", ")),
        })
    }
}

fn render(input: &Path, out: &Path) -> Result<(), Failure> {
    let c = read_curve_csv(input).map_err(|e| bad_input(format!("{}: {e}", input.display())))?;
    let nodes: Vec<[f64; 2]> = c.nodes().iter().map(|p| [p.x, p.y]).collect();
    write(out, &render_svg(&[nodes]))
}

fn main() -> ExitCode {
    // clap would exit with 2, which is reserved for solver failures
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_BAD_INPUT)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match &cli.command {
        Command::Table1(args) => table1(args),
        Command::Run { method, input, spec } => run((*method).into(), input.as_deref(), spec),
        Command::Verify { seed, report, spec } => verify(*seed, report.as_deref(), spec),
        Command::Render { input, out } => render(input, out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
