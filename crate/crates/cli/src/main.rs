use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use conicsens::sensitivity::Analyzer;
use conicsens::solver::{self, SolverError};
use conicsens::{ConicProgram64, Perturbation, ProblemError, SensitivityError, Settings64};
use serde::Serialize;
use serde_json::{json, Value};

const EXIT_HYPOTHESIS: u8 = 2;
const EXIT_SCHEMA: u8 = 3;
const EXIT_NUMERICAL: u8 = 4;
/// Malformed command line (clap would use 2, which is taken).
const EXIT_USAGE: u8 = 1;

#[derive(Parser)]
#[command(name = "conicsens", version, about = "Sensitivity analysis of conic linear programs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the program and print the solution.
    Solve(Common),
    /// Certify strict feasibility of the primal and the dual.
    Certify(Common),
    /// Sensitivity report for the optimal value as a function of b.
    AnalyzeRhs(Directed),
    /// Sensitivity report for the optimal value as a function of c.
    AnalyzeObj(Directed),
    /// Difference quotients checked against the directional derivative.
    Verify {
        #[command(flatten)]
        directed: Directed,
        #[arg(long, value_enum, default_value_t = Target::Rhs)]
        target: Target,
    },
    /// Lipschitz and dual-boundedness probes around b.
    Probe {
        #[command(flatten)]
        common: Common,
        /// Sampling radius, capped by the certified interior margin.
        #[arg(long, default_value_t = 0.1)]
        radius: f64,
        /// Number of sampled point pairs.
        #[arg(long, default_value_t = 20)]
        pairs: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Target {
    Rhs,
    Obj,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Args)]
struct Common {
    /// Problem document (JSON).
    problem: PathBuf,
    /// Primal and dual residual tolerance.
    #[arg(long)]
    tol_feas: Option<f64>,
    /// Relative duality gap tolerance.
    #[arg(long)]
    tol_gap: Option<f64>,
    /// Relative slack of the optimal level sets.
    #[arg(long)]
    eps_level: Option<f64>,
    /// Seed for sampling probes.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args)]
struct Directed {
    #[command(flatten)]
    common: Common,
    /// JSON array, or a file containing one.
    #[arg(long)]
    direction: String,
    /// Comma-separated, strictly decreasing step sizes.
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.01,0.001")]
    t_grid: Vec<f64>,
}

enum Failure {
    Schema(String),
    Hypothesis { key: &'static str, detail: String },
    Numerical(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Hypothesis { .. } => EXIT_HYPOTHESIS,
            Failure::Schema(_) => EXIT_SCHEMA,
            Failure::Numerical(_) => EXIT_NUMERICAL,
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Schema(m) | Failure::Numerical(m) => m.clone(),
            Failure::Hypothesis { key, detail } => format!("hypothesis violated: {key} ({detail})"),
        }
    }
}

impl From<ProblemError> for Failure {
    fn from(e: ProblemError) -> Self {
        Failure::Schema(e.to_string())
    }
}

impl From<SolverError> for Failure {
    fn from(e: SolverError) -> Self {
        match e {
            SolverError::Problem(p) => p.into(),
            SolverError::Dimension { .. } | SolverError::BarrierUnsupported { .. } => Failure::Schema(e.to_string()),
            _ => Failure::Numerical(e.to_string()),
        }
    }
}

impl From<SensitivityError> for Failure {
    fn from(e: SensitivityError) -> Self {
        match e {
            SensitivityError::HypothesisViolation { hypothesis, detail } => Failure::Hypothesis {
                key: hypothesis.key(),
                detail,
            },
            SensitivityError::NotPolyhedral { .. } => Failure::Hypothesis {
                key: "polyhedral_cone",
                detail: e.to_string(),
            },
            SensitivityError::RangeTestFailed { .. } => Failure::Hypothesis {
                key: "direction_in_range",
                detail: e.to_string(),
            },
            SensitivityError::NumericalFailure(_) => Failure::Numerical(e.to_string()),
            SensitivityError::Problem(p) => p.into(),
            SensitivityError::Solver(s) => s.into(),
            SensitivityError::Dimension { .. } | SensitivityError::InvalidStep | SensitivityError::InvalidSchedule => {
                Failure::Schema(e.to_string())
            }
        }
    }
}

impl Common {
    fn load(&self) -> Result<ConicProgram64, Failure> {
        let text = fs::read_to_string(&self.problem)
            .map_err(|e| Failure::Schema(format!("{}: {e}", self.problem.display())))?;
        Ok(conicsens::io::parse_problem(&text)?)
    }

    fn settings(&self) -> Settings64 {
        let mut st = Settings64::default();
        if let Some(v) = self.tol_feas {
            st.tol_feas = v;
        }
        if let Some(v) = self.tol_gap {
            st.tol_gap = v;
        }
        if let Some(v) = self.eps_level {
            st.eps_level = v;
        }
        st
    }
}

fn parse_direction(arg: &str) -> Result<Vec<f64>, Failure> {
    let text = if arg.trim_start().starts_with('[') {
        arg.to_string()
    } else {
        fs::read_to_string(Path::new(arg)).map_err(|e| Failure::Schema(format!("{arg}: {e}")))?
    };
    serde_json::from_str(&text).map_err(|e| Failure::Schema(format!("direction: {e}")))
}

fn to_value<S: Serialize>(v: &S) -> Value {
    serde_json::to_value(v).expect("reports serialize")
}

fn solve(common: &Common) -> Result<Value, Failure> {
    let p = common.load()?;
    let low = p.lower()?;
    let mut sol = solver::solve(&low.program, &common.settings())?;
    if !low.is_identity() {
        sol.y_opt = sol.y_opt.map(|y| low.lift_dual(&y));
        sol.infeasibility_certificate = sol.infeasibility_certificate.map(|y| low.lift_dual(&y));
    }
    Ok(to_value(&sol))
}

fn certify(common: &Common) -> Result<Value, Failure> {
    let p = common.load()?;
    let st = common.settings();
    let primal = solver::certify_strict_primal(&p, &st)?;
    let dual = solver::certify_strict_dual(&p, &st)?;
    Ok(json!({ "primal": primal, "dual": dual }))
}

fn analyze(d: &Directed, rhs: bool) -> Result<Value, Failure> {
    let p = d.common.load()?;
    let dir = parse_direction(&d.direction)?;
    let an = Analyzer::new(&p, d.common.settings())?;
    let report = if rhs {
        an.rhs_report(&dir, &d.t_grid)?
    } else {
        an.obj_report(&dir, &d.t_grid)?
    };
    Ok(to_value(&report))
}

fn verify(d: &Directed, target: Target) -> Result<Value, Failure> {
    let p = d.common.load()?;
    let dir = parse_direction(&d.direction)?;
    let st = d.common.settings();
    let value_tol = 10.0 * st.tol_gap.max(st.tol_feas);
    let an = Analyzer::new(&p, st)?;
    let (pert, derivative, convex) = match target {
        Target::Rhs => (Perturbation::rhs(dir.clone(), 0.0), an.phi_dir_deriv(&dir)?, true),
        Target::Obj => (Perturbation::objective(dir.clone(), 0.0), an.psi_dir_deriv(&dir)?, false),
    };
    let table = an.fd_verify(&pert, &d.t_grid)?;
    let pass = table.consistent_with(derivative, convex, value_tol);
    Ok(json!({
        "derivative": derivative,
        "base_value": table.base,
        "fd_table": table.rows,
        "pass": pass,
    }))
}

fn probe(common: &Common, radius: f64, pairs: usize) -> Result<Value, Failure> {
    let p = common.load()?;
    let an = Analyzer::new(&p, common.settings())?;
    let lipschitz = an.lipschitz_probe(radius, pairs, common.seed)?;
    let bounded = an.dual_solution_boundedness_probe(p.b(), None)?;
    Ok(json!({
        "seed": common.seed,
        "lipschitz": lipschitz,
        "dual_solutions_bounded": bounded,
    }))
}

fn render_text(prefix: &str, v: &Value, out: &mut String) {
    match v {
        Value::Object(map) => {
            for (k, item) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                render_text(&key, item, out);
            }
        }
        Value::Array(items) if items.iter().any(|x| x.is_object()) => {
            for (i, item) in items.iter().enumerate() {
                render_text(&format!("{prefix}[{i}]"), item, out);
            }
        }
        Value::String(s) => writeln!(out, "{prefix}: {s}").unwrap(),
        other => writeln!(out, "{prefix}: {other}").unwrap(),
    }
}

fn run(cli: &Cli) -> Result<(Value, Format), Failure> {
    Ok(match &cli.command {
        Command::Solve(c) => (solve(c)?, c.format),
        Command::Certify(c) => (certify(c)?, c.format),
        Command::AnalyzeRhs(d) => (analyze(d, true)?, d.common.format),
        Command::AnalyzeObj(d) => (analyze(d, false)?, d.common.format),
        Command::Verify { directed, target } => (verify(directed, *target)?, directed.common.format),
        Command::Probe { common, radius, pairs } => (probe(common, *radius, *pairs)?, common.format),
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    match run(&cli) {
        Ok((value, format)) => {
            let text = match format {
                Format::Json => serde_json::to_string_pretty(&value).expect("reports serialize") + "\n",
                Format::Text => {
                    let mut s = String::new();
                    render_text("", &value, &mut s);
                    s
                }
            };
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("error: {}", f.message());
            if let Failure::Hypothesis { key, detail } = &f {
                let doc = json!({ "hypothesis_violation": key, "detail": detail });
                println!("{}", serde_json::to_string_pretty(&doc).expect("reports serialize"));
            }
            ExitCode::from(f.code())
        }
    }
}
