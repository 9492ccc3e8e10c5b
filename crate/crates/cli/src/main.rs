//! `lmpkit`: check, recover, and generate LMP certificates; decide cone
//! separation.
//!
//! Exit codes: 0 pass, 1 check failure (or cones intersect), 2 input error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use lmpkit::cones::{self, PolyCone, DEGENERATE_BAND};
use lmpkit::formats::{self, CertificateDoc, ConeSpecDoc, FormatError, ProblemDoc, TrajectoryDoc};
use lmpkit::lmp::{check_certificate, Tolerances};
use lmpkit::problem::{builtin_example, ContactSplit, Example, ExampleParams, ProblemDef, Trajectory};
use lmpkit::recovery::{self, RecoveryError, RecoveryOptions};

#[derive(Parser)]
#[command(name = "lmpkit", version, about = "Local minimum principle certificates: check, recover, separate")]
struct Cli {
    /// Output format for reports.
    #[arg(long, value_enum, global = true, default_value_t = Format::Text)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Check a certificate against a problem and trajectory.
    Check {
        #[arg(long)]
        problem: PathBuf,
        #[arg(long)]
        trajectory: PathBuf,
        #[arg(long)]
        certificate: PathBuf,
        #[command(flatten)]
        tol: TolArgs,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recover multipliers and cross-check them.
    Recover {
        #[arg(long)]
        problem: PathBuf,
        #[arg(long)]
        trajectory: PathBuf,
        /// Where to write the recovered certificate.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1e-8)]
        delta: f64,
        #[arg(long, default_value_t = 1e-8)]
        eps: f64,
        #[arg(long)]
        delta_slack: Option<f64>,
        #[arg(long, default_value_t = 3)]
        seeds: usize,
        #[arg(long, default_value_t = 300)]
        max_iter: usize,
        #[arg(long, default_value_t = 0)]
        seed_base: u64,
        /// Write the cross-validation report here instead of stdout.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Write a built-in example (problem, trajectory, certificate).
    Example {
        /// ex1 or ex2.
        name: String,
        #[arg(long = "N", default_value_t = 100)]
        cells: usize,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        t0: f64,
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        t1: f64,
        #[arg(long = "T", default_value_t = 1.0)]
        big_t: f64,
        #[arg(long, default_value_t = 0.5)]
        m: f64,
        /// Split of λ + η̇ = 1 on D for ex2.
        #[arg(long, value_enum, default_value_t = Split::Half)]
        split: Split,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Decide approximate separation for a cone family, or run a random batch.
    Cones {
        /// Cone spec file; omit with --seeds.
        spec: Option<PathBuf>,
        #[arg(long, default_value_t = 1e-6)]
        eps: f64,
        /// Run this many random instances instead of a spec file.
        #[arg(long)]
        seeds: Option<u64>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Split {
    Half,
    EtaOnly,
}

#[derive(Args)]
struct TolArgs {
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    structural: Option<f64>,
    #[arg(long)]
    slackness: Option<f64>,
    #[arg(long)]
    integral_factor: Option<f64>,
    #[arg(long)]
    integral_floor: Option<f64>,
    /// Fixed threshold for the adjoint and stationarity lines.
    #[arg(long)]
    integral_threshold: Option<f64>,
    /// Start from the defaults for numerically obtained trajectories.
    #[arg(long)]
    numerical: bool,
}

impl TolArgs {
    fn tolerances(&self) -> Result<Tolerances, Failure> {
        let mut t = if self.numerical { Tolerances::numerical() } else { Tolerances::default() };
        let set = |slot: &mut f64, v: Option<f64>, name: &str| -> Result<(), Failure> {
            if let Some(v) = v {
                positive(v, name)?;
                *slot = v;
            }
            Ok(())
        };
        set(&mut t.delta, self.delta, "delta")?;
        set(&mut t.eps, self.eps, "eps")?;
        set(&mut t.structural, self.structural, "structural")?;
        set(&mut t.slackness, self.slackness, "slackness")?;
        set(&mut t.integral_factor, self.integral_factor, "integral-factor")?;
        set(&mut t.integral_floor, self.integral_floor, "integral-floor")?;
        if let Some(v) = self.integral_threshold {
            positive(v, "integral-threshold")?;
            t.integral_override = Some(v);
        }
        Ok(t)
    }
}

/// A user-facing failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Failure { code: 2, message: message.into() }
    }
}

impl From<FormatError> for Failure {
    fn from(e: FormatError) -> Self {
        Failure::input(e.to_string())
    }
}

fn positive(v: f64, name: &str) -> Result<(), Failure> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Failure::input(format!("--{name} must be positive, got {v}")))
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn with_path<T>(path: &Path, r: Result<T, FormatError>) -> Result<T, Failure> {
    r.map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn load_inputs(problem: &Path, trajectory: &Path) -> Result<(ProblemDef, Trajectory), Failure> {
    let pd: ProblemDoc = with_path(problem, formats::parse_document(&read(problem)?))?;
    let p = with_path(problem, pd.to_problem())?;
    let td: TrajectoryDoc = with_path(trajectory, formats::parse_document(&read(trajectory)?))?;
    let tr = with_path(trajectory, td.to_trajectory())?;
    p.check_compatible(&tr).map_err(|e| Failure::input(format!("{}: {e}", trajectory.display())))?;
    Ok((p, tr))
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => write(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn json_text<T: Serialize>(v: &T) -> String {
    formats::to_json(v)
}

fn verdict_code(pass: bool) -> u8 {
    if pass {
        0
    } else {
        1
    }
}

fn run(cli: Cli) -> Result<u8, Failure> {
    let format = cli.format;
    match cli.command {
        Command::Check { problem, trajectory, certificate, tol, out } => {
            let tol = tol.tolerances()?;
            let (p, tr) = load_inputs(&problem, &trajectory)?;
            let cd: CertificateDoc = with_path(&certificate, formats::parse_document(&read(&certificate)?))?;
            let ms = with_path(&certificate, cd.to_certificate(tr.grid()))?;
            let report = check_certificate(&p, &tr, &ms, &tol);
            let text = match format {
                Format::Text => report.to_table(),
                Format::Json => json_text(&report),
            };
            emit(out.as_deref(), &text)?;
            Ok(verdict_code(report.passed()))
        }
        Command::Recover { problem, trajectory, out, delta, eps, delta_slack, seeds, max_iter, seed_base, report } => {
            positive(delta, "delta")?;
            positive(eps, "eps")?;
            if let Some(s) = delta_slack {
                positive(s, "delta-slack")?;
            }
            if seeds == 0 || max_iter == 0 {
                return Err(Failure::input("--seeds and --max-iter must be at least 1"));
            }
            let (p, tr) = load_inputs(&problem, &trajectory)?;
            let opts = RecoveryOptions { delta, eps, delta_slack, seeds, max_iter, seed_base };
            let rec = recovery::recover(&p, &tr, &opts).map_err(|e: RecoveryError| Failure::input(e.to_string()))?;
            write(&out, &formats::to_json(&CertificateDoc::from_certificate(&rec.result.certificate)))?;
            let certified = rec.certified();
            let r = &rec.result;
            let text = match format {
                Format::Text => {
                    let mut s = format!(
                        "objective = {:.3e}\nkkt = {:.3e}\nseed = {}\nunknowns = {}, rows = {}, active lambda cells = {}, atom unknowns = {}, density unknowns = {}\n",
                        r.objective,
                        r.kkt,
                        r.seed.map_or("-".into(), |s| s.to_string()),
                        r.dims.unknowns,
                        r.dims.rows,
                        r.dims.lambda_cells,
                        r.dims.atom_unknowns,
                        r.dims.density_unknowns,
                    );
                    s.push_str(&format!("certificate written to {}\n\n", out.display()));
                    s.push_str(&rec.report.to_table());
                    if !certified {
                        s.push_str(&format!("LMP not certified (objective = {:.3e})\n", r.objective));
                    }
                    s
                }
                Format::Json => json_text(&json!({
                    "objective": r.objective,
                    "kkt": r.kkt,
                    "seed": r.seed,
                    "dims": r.dims,
                    "certified": certified,
                    "report": rec.report,
                })),
            };
            emit(report.as_deref(), &text)?;
            Ok(verdict_code(certified))
        }
        Command::Example { name, cells, t0, t1, big_t, m, split, out_dir } => {
            let example: Example = name.parse().map_err(|e: lmpkit::problem::ProblemError| Failure::input(e.to_string()))?;
            let split = match split {
                Split::Half => ContactSplit::Half,
                Split::EtaOnly => ContactSplit::EtaOnly,
            };
            let params = ExampleParams { t0, t1, big_t, m, cells, split };
            let fx = builtin_example(example, &params).map_err(|e| Failure::input(e.to_string()))?;
            fs::create_dir_all(&out_dir).map_err(|e| Failure::input(format!("{}: {e}", out_dir.display())))?;
            let files = [
                ("problem.json", formats::to_json(&ProblemDoc::from_problem(&fx.problem))),
                ("trajectory.json", formats::to_json(&TrajectoryDoc::from_trajectory(&fx.trajectory))),
                ("certificate.json", formats::to_json(&CertificateDoc::from_certificate(&fx.certificate))),
            ];
            for (file, text) in &files {
                let path = out_dir.join(file);
                write(&path, text)?;
                println!("wrote {}", path.display());
            }
            Ok(0)
        }
        Command::Cones { spec, eps, seeds } => {
            positive(eps, "eps")?;
            match (spec, seeds) {
                (Some(path), None) => {
                    let doc: ConeSpecDoc = with_path(&path, formats::parse_document(&read(&path)?))?;
                    let cones = with_path(&path, doc.to_cones())?;
                    cones_single(&cones, eps, format)
                }
                (None, Some(n)) => cones_batch(n, eps, format),
                _ => Err(Failure::input("give either a spec file or --seeds")),
            }
        }
    }
}

fn cone_failure(e: cones::ConeError) -> Failure {
    Failure::input(e.to_string())
}

fn cones_single(cones: &[PolyCone], eps: f64, format: Format) -> Result<u8, Failure> {
    let inter = cones::intersection_nonempty(cones).map_err(cone_failure)?;
    let sep = cones::approx_separate(cones, eps).map_err(cone_failure)?;
    let verdict = if sep.success {
        "separated"
    } else if inter.nonempty {
        "cones intersect"
    } else {
        "not separated at this eps"
    };
    let text = match format {
        Format::Json => json_text(&json!({
            "verdict": verdict,
            "intersection": inter,
            "separation": sep,
        })),
        Format::Text => {
            let mut s = String::new();
            if sep.success {
                s.push_str(&format!("separated: |sum h_i|_1 = {:.3e} < eps = {eps:.1e}\n", sep.value));
                for (i, (h, mu)) in sep.h.iter().zip(&sep.coefficients).enumerate() {
                    s.push_str(&format!("h_{i} = {}   coefficients = {}\n", vec_text(h), vec_text(mu)));
                }
            } else if inter.nonempty {
                s.push_str(&format!("cones intersect: margin t* = {:.3e}\n", inter.margin));
                if let Some(w) = &inter.witness {
                    s.push_str(&format!("witness = {}\n", vec_text(w)));
                }
            } else {
                s.push_str(&format!(
                    "not separated at this eps: |sum h_i|_1 = {:.3e}, margin t* = {:.3e}\n",
                    sep.value, inter.margin
                ));
            }
            s
        }
    };
    print!("{text}");
    Ok(verdict_code(sep.success))
}

fn vec_text(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{:.6}", x + 0.0)).collect();
    format!("[{}]", parts.join(", "))
}

fn cones_batch(n: u64, eps: f64, format: Format) -> Result<u8, Failure> {
    let (mut consistent, mut degenerate, mut inconsistent) = (0usize, Vec::new(), Vec::new());
    for seed in 0..n {
        let family = cones::random_instance(seed);
        let margin = cones::signed_margin(&family).map_err(cone_failure)?;
        if margin.abs() <= DEGENERATE_BAND {
            degenerate.push(seed);
            continue;
        }
        let inter = cones::intersection_nonempty(&family).map_err(cone_failure)?;
        let sep = cones::approx_separate(&family, eps).map_err(cone_failure)?;
        if sep.success != inter.nonempty {
            consistent += 1;
        } else {
            inconsistent.push(seed);
        }
    }
    let text = match format {
        Format::Json => json_text(&json!({
            "instances": n,
            "consistent": consistent,
            "degenerate": degenerate,
            "inconsistent": inconsistent,
        })),
        Format::Text => format!(
            "instances = {n}\nconsistent (separated XOR intersecting) = {consistent}\ndegenerate (|margin| <= {DEGENERATE_BAND:.0e}) = {} {:?}\ninconsistent = {} {:?}\n",
            degenerate.len(),
            degenerate,
            inconsistent.len(),
            inconsistent
        ),
    };
    print!("{text}");
    Ok(verdict_code(inconsistent.is_empty()))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("LMP_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
