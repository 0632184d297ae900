//! The `sweb` command: config files in, text or JSON reports out.
//!
//! Exit codes: 0 success (including unsolvable webs), 2 usage, config or
//! parse errors, 3 degenerate web or mixed branch, 4 inconclusive verdict.

mod config;
mod report;

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use thiserror::Error;

pub use config::{parse_config, ConfigError, FileConfig, Input};
pub use report::{
    AnalyzeReport, ConditionJson, DeriveReport, FormsReport, GenerateReport, InputEcho, NamedExpr,
    VerdictJson, REPORT_VERSION,
};

use crate::calculus::{Domain, SamplePlan, Sampler};
use crate::expr::{parse, Expr, Mode};
use crate::sweb::{
    classify_branch, compute_delta, compute_h, compute_rank, derive_generic_system,
    derive_singular_system, derive_sprime_relation, from_generating_function, verify_s_condition,
    Branch, FormQuadruple, SwebError, WebSpec,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DEGENERATE: i32 = 3;
pub const EXIT_INCONCLUSIVE: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "sweb", version, about = "Rank analysis of planar Samuelson 4-webs")]
pub struct Cli {
    /// Emit a JSON report instead of text.
    #[arg(long, global = true)]
    pub json: bool,
    /// Seed for the sample-point stream.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Number of sample points.
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    /// Float zero-test tolerance.
    #[arg(long, global = true, value_parser = tol_arg)]
    pub tol: Option<f64>,
    /// Zero-test arithmetic: `exact` or `float`.
    #[arg(long, global = true, value_parser = mode_arg)]
    pub mode: Option<Mode>,
    /// Record the wall-clock runtime in the report.
    #[arg(long, global = true)]
    pub timing: bool,
    #[command(subcommand)]
    pub command: Command,
}

fn tol_arg(s: &str) -> Result<f64, String> {
    config::parse_tol(s).map_err(|e| e.to_string())
}

fn mode_arg(s: &str) -> Result<Mode, String> {
    s.parse()
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute the rank and the maximality conditions.
    Analyze { file: PathBuf },
    /// Print intermediate symbolic objects.
    Derive {
        file: PathBuf,
        #[arg(long, value_enum, ignore_case = true)]
        emit: Emit,
    },
    /// Print the coordinate web of a generating function.
    Generate {
        #[arg(long)]
        phi: String,
        #[arg(long)]
        domain: String,
    },
    /// Test the S-condition on four forms (or on a web's normalized forms).
    CheckForms { file: PathBuf },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Emit {
    #[value(name = "H")]
    H,
    #[value(name = "P")]
    P,
    #[value(name = "Q")]
    Q,
    #[value(name = "delta")]
    Delta,
    #[value(name = "KL")]
    KL,
    #[value(name = "R")]
    R,
}

impl Emit {
    fn name(self) -> &'static str {
        match self {
            Emit::H => "H",
            Emit::P => "P",
            Emit::Q => "Q",
            Emit::Delta => "delta",
            Emit::KL => "KL",
            Emit::R => "R",
        }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Web(#[from] SwebError),
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Inconclusive(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Web(
                SwebError::DegenerateWeb(_)
                | SwebError::MixedBranch(_)
                | SwebError::RepeatedDirection,
            ) => EXIT_DEGENERATE,
            CliError::Inconclusive(_) => EXIT_INCONCLUSIVE,
            _ => EXIT_USAGE,
        }
    }
}

/// Everything one run needs, after flags are merged into the file.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub input: Input,
    pub domain: Domain,
    pub plan: SamplePlan,
    pub json: bool,
    pub timing: bool,
}

impl RunConfig {
    fn merge(file: FileConfig, cli: &Cli) -> RunConfig {
        let mut plan = file.plan;
        if let Some(s) = cli.seed {
            plan.seed = s;
        }
        if let Some(n) = cli.samples {
            plan.samples = n;
        }
        if let Some(t) = cli.tol {
            plan.tol = t;
        }
        if let Some(m) = cli.mode {
            plan.mode = m;
        }
        RunConfig {
            input: file.input,
            domain: file.domain,
            plan,
            json: cli.json,
            timing: cli.timing,
        }
    }

    fn spec(&self) -> Result<WebSpec, CliError> {
        let (domain, plan) = (self.domain.clone(), self.plan.clone());
        match &self.input {
            Input::Web { f, b } => Ok(WebSpec::new(f.clone(), b.clone(), domain, plan)?),
            Input::Phi(phi) => Ok(from_generating_function(phi.clone(), domain, plan)?),
            Input::Forms(_) => Err(CliError::Usage(
                "this command needs `f` and `b` or `phi`, not forms".into(),
            )),
        }
    }
}

/// Exit code and the two output streams of one invocation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Outcome {
    fn ok(stdout: String, code: i32) -> Outcome {
        Outcome {
            code,
            stdout,
            stderr: String::new(),
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn main_with<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(&cli),
        Err(e) => {
            let text = e.render().to_string();
            if e.use_stderr() {
                Outcome {
                    code: EXIT_USAGE,
                    stdout: String::new(),
                    stderr: text,
                }
            } else {
                Outcome::ok(text, EXIT_OK)
            }
        }
    }
}

pub fn run(cli: &Cli) -> Outcome {
    let result = match &cli.command {
        Command::Analyze { file } => load(file, cli).and_then(|c| analyze(&c)),
        Command::Derive { file, emit } => load(file, cli).and_then(|c| derive(&c, *emit)),
        Command::Generate { phi, domain } => generate(phi, domain, cli),
        Command::CheckForms { file } => load(file, cli).and_then(|c| check_forms(&c)),
    };
    result.unwrap_or_else(|e| Outcome {
        code: e.exit_code(),
        stdout: String::new(),
        stderr: format!("error: {e}\n"),
    })
}

fn load(path: &Path, cli: &Cli) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(RunConfig::merge(parse_config(&text)?, cli))
}

pub fn analyze(config: &RunConfig) -> Result<Outcome, CliError> {
    let spec = config.spec()?;
    let start = Instant::now();
    let rank = compute_rank(&spec)?;
    let runtime = config.timing.then(|| start.elapsed().as_millis() as u64);
    let report = AnalyzeReport::new(&spec, &rank, runtime);
    let code = if report.inconclusive {
        EXIT_INCONCLUSIVE
    } else {
        EXIT_OK
    };
    let stdout = if config.json {
        report.to_json() + "\n"
    } else {
        report.to_text()
    };
    Ok(Outcome::ok(stdout, code))
}

pub fn derive(config: &RunConfig, emit: Emit) -> Result<Outcome, CliError> {
    let spec = config.spec()?;
    let objects = derived_objects(&spec, emit)?;
    let stdout = if config.json {
        let report = DeriveReport {
            version: REPORT_VERSION,
            input: InputEcho::of(&spec),
            emit: emit.name().into(),
            objects,
        };
        serde_json::to_string_pretty(&report).expect("report serializes") + "\n"
    } else {
        objects
            .iter()
            .map(|o| format!("{} = {}\n", o.name, o.expr))
            .collect()
    };
    Ok(Outcome::ok(stdout, EXIT_OK))
}

fn named(name: impl Into<String>, e: &Expr) -> NamedExpr {
    NamedExpr {
        name: name.into(),
        expr: e.to_string(),
    }
}

fn derived_objects(spec: &WebSpec, emit: Emit) -> Result<Vec<NamedExpr>, CliError> {
    if emit == Emit::H {
        return Ok(vec![named("H", &compute_h(spec))]);
    }
    let rel = derive_sprime_relation(spec)?;
    match emit {
        Emit::P => return Ok(vec![named("P", &rel.p)]),
        Emit::Q => return Ok(vec![named("Q", &rel.q)]),
        Emit::Delta => return Ok(vec![named("delta", &compute_delta(&rel))]),
        _ => {}
    }
    let decision = classify_branch(spec, &rel, spec.sampler());
    let (system, top) = match (&decision.branch, emit) {
        (Branch::Generic, Emit::KL) => {
            let sampler = spec.sampler_excluding(std::slice::from_ref(&decision.delta));
            (derive_generic_system(spec, &rel, &sampler)?, 3)
        }
        (Branch::Singular { p1, p2 }, Emit::R) => {
            let sampler = spec.sampler_excluding(std::slice::from_ref(p2));
            (derive_singular_system(spec, &rel, p1, p2, &sampler)?, 2)
        }
        (Branch::Mixed, _) => {
            return Err(SwebError::MixedBranch(format!(
                "Δ is not sign-constant on {}; shrink the domain",
                spec.domain
            ))
            .into())
        }
        (Branch::Undetermined, _) => {
            return Err(CliError::Inconclusive(
                "the zero test on Δ was inconclusive".into(),
            ))
        }
        (b, _) => {
            return Err(CliError::Usage(format!(
                "{} rows exist on the {} branch only; this web is {}",
                emit.name(),
                if emit == Emit::KL { "generic" } else { "singular" },
                b.name()
            )))
        }
    };
    let mut out = Vec::new();
    for (name, row) in system.row_names().iter().zip(&system.base_rows) {
        for i in (0..=top).rev() {
            out.push(named(format!("{name}{i}"), row.coeff(i)));
        }
    }
    Ok(out)
}

fn generate(phi: &str, domain: &str, cli: &Cli) -> Result<Outcome, CliError> {
    let phi = parse(phi).map_err(|e| ConfigError::Value {
        key: "phi".into(),
        message: e.to_string(),
    })?;
    let domain = config::parse_domain(domain)?;
    let file = FileConfig {
        input: Input::Phi(phi),
        domain,
        plan: SamplePlan::default(),
    };
    let config = RunConfig::merge(file, cli);
    let spec = config.spec()?;
    let report = GenerateReport {
        version: REPORT_VERSION,
        phi: spec.phi.as_ref().map(ToString::to_string).unwrap_or_default(),
        domain: spec.domain.to_string(),
        f: spec.f.to_string(),
        b: spec.b.to_string(),
    };
    let stdout = if config.json {
        serde_json::to_string_pretty(&report).expect("report serializes") + "\n"
    } else {
        format!("f = {}\nb = {}\n", report.f, report.b)
    };
    Ok(Outcome::ok(stdout, EXIT_OK))
}

pub fn check_forms(config: &RunConfig) -> Result<Outcome, CliError> {
    let forms = match &config.input {
        Input::Forms(f) => FormQuadruple::new(f.clone()),
        _ => config.spec()?.normalized_forms(),
    };
    let sampler = Sampler::new(config.domain.clone(), config.plan.clone(), &[]);
    let verdict = verify_s_condition(&forms, &sampler)?;
    let report = FormsReport {
        version: REPORT_VERSION,
        forms: forms
            .forms
            .iter()
            .map(|(a, c)| [a.to_string(), c.to_string()])
            .collect(),
        domain: config.domain.to_string(),
        s_condition: VerdictJson::of(&verdict),
        seed: config.plan.seed,
        samples: sampler.points().len(),
    };
    let code = if verdict.is_inconclusive() {
        EXIT_INCONCLUSIVE
    } else {
        EXIT_OK
    };
    let stdout = if config.json {
        serde_json::to_string_pretty(&report).expect("report serializes") + "\n"
    } else {
        let mut s = String::new();
        for (i, [a, c]) in report.forms.iter().enumerate() {
            s += &format!("omega{} = ({a}) dx + ({c}) dy\n", i + 1);
        }
        s += &format!("s-condition: {}\n", report.s_condition.verdict);
        if let Some(w) = &report.s_condition.witness {
            s += &format!("  witness: {} at ({}, {})\n", w.value, w.x, w.y);
        }
        s
    };
    Ok(Outcome::ok(stdout, code))
}
