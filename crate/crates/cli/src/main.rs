use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_bigint::BigInt;
use serde_json::{json, Value};
use twistforge::strongly_minimal::to_strongly_minimal;
use twistforge::tables::{render_table, TABLE_NAMES};
use twistforge::tate::local_data;
use twistforge::twist::twist_local_data;
use twistforge::verify::{minimize_witness, report_lines, resolve_jobs, CorpusSpec};
use twistforge::{Error, Prime, WeierstrassModel};

const EXIT_USAGE: u8 = 1;
const EXIT_DISAGREEMENT: u8 = 2;

#[derive(Parser)]
#[command(
    name = "twistforge",
    version,
    about = "Local data of elliptic curves over Q_p and of their quadratic twists"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Local data by Tate's algorithm.
    Localdata(CurveArgs),
    /// Strongly-minimal model and the isomorphism onto it.
    Strongmin(CurveArgs),
    /// Local data of E and of its quadratic twist by d.
    Twist(CurveArgs),
    /// Differential run of the table routes against Tate's algorithm.
    Verify(VerifyArgs),
    /// Prints the embedded tables in their canonical text form.
    Tables {
        /// One table name; all tables when omitted.
        name: Option<String>,
    },
}

#[derive(Args)]
struct CurveArgs {
    /// The prime p.
    #[arg(long)]
    p: Option<String>,
    /// a-invariants as a JSON array of integers or "n/d" strings.
    #[arg(long)]
    ainvs: Option<String>,
    /// Twist parameter (twist only).
    #[arg(long, allow_hyphen_values = true)]
    d: Option<String>,
    /// JSON object {"ainvs": [...], "p": P, "d": D}; explicit flags take precedence.
    #[arg(long)]
    curve: Option<String>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Corpus spec file (JSON).
    #[arg(long)]
    spec: PathBuf,
    /// Worker threads; overridden by TWISTFORGE_JOBS.
    #[arg(long)]
    jobs: Option<usize>,
    /// Also print a shrunken witness for each disagreement.
    #[arg(long)]
    minimize: bool,
}

struct Curve {
    p: Prime,
    e: WeierstrassModel,
    d: Option<BigInt>,
}

enum Failure {
    Usage(String),
    Disagreement,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn scalar_text(v: &Value) -> Option<String> {
    match v {
        Value::Number(n) => Some(n.to_string()),
        Value::String(s) => Some(s.clone()),
        _ => None,
    }
}

impl CurveArgs {
    fn resolve(&self) -> Result<Curve, Failure> {
        let object: Option<Value> = match &self.curve {
            Some(text) => {
                Some(serde_json::from_str(text).map_err(|e| usage(format!("--curve: {e}")))?)
            }
            None => None,
        };
        let field = |key: &str| object.as_ref().and_then(|o| o.get(key));
        let p = match self.p.clone().or_else(|| field("p").and_then(scalar_text)) {
            Some(p) => p.parse::<Prime>()?,
            None => return Err(usage("missing --p")),
        };
        let e = match (&self.ainvs, field("ainvs")) {
            (Some(text), _) => WeierstrassModel::parse(text)?,
            (None, Some(v)) => WeierstrassModel::from_json(v)?,
            (None, None) => return Err(usage("missing --ainvs")),
        };
        let d = match self.d.clone().or_else(|| field("d").and_then(scalar_text)) {
            Some(text) => Some(
                text.trim()
                    .parse::<BigInt>()
                    .map_err(|_| usage(format!("bad twist parameter {text:?}")))?,
            ),
            None => None,
        };
        Ok(Curve { p, e, d })
    }
}

/// Writes to stdout, ignoring a closed pipe.
fn emit(text: &str) {
    let _ = writeln!(io::stdout(), "{text}");
}

fn print_json(v: &Value) {
    emit(&serde_json::to_string_pretty(v).expect("serializable"));
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Localdata(args) => {
            let c = args.resolve()?;
            print_json(&json!(local_data(&c.e, &c.p)?));
        }
        Command::Strongmin(args) => {
            let c = args.resolve()?;
            let (s, phi) = to_strongly_minimal(&c.e, &c.p)?;
            print_json(&json!({
                "p": c.p.to_string(),
                "model": s.model.to_json(),
                "isomorphism": phi.to_json(),
                "type": s.kodaira,
                "row": s.matched_row,
            }));
        }
        Command::Twist(args) => {
            let c = args.resolve()?;
            let d = c.d.ok_or_else(|| usage("missing --d"))?;
            print_json(&twist_local_data(&c.e, &c.p, &d)?.to_json());
        }
        Command::Verify(args) => {
            let text = std::fs::read_to_string(&args.spec)
                .map_err(|e| usage(format!("cannot read {}: {e}", args.spec.display())))?;
            let spec = CorpusSpec::from_json(&text)?;
            let jobs = resolve_jobs(args.jobs)?;
            let stdout = io::stdout();
            let mut out = BufWriter::new(stdout.lock());
            let mut write_error = None;
            let report = report_lines(&spec, jobs, |line| {
                if let Err(e) = writeln!(out, "{line}") {
                    write_error.get_or_insert(e);
                }
            })?;
            if args.minimize {
                let p = Prime::new(spec.p)?;
                for rec in &report.disagreements {
                    let curve = WeierstrassModel::from_ints(rec.ainvs);
                    let line = match minimize_witness(&curve, &BigInt::from(rec.d), &p) {
                        Ok(w) => {
                            json!({ "ainvs": rec.ainvs, "p": spec.p, "d": rec.d, "status": "minimized", "witness": w.to_json() })
                        }
                        Err(e) => {
                            json!({ "ainvs": rec.ainvs, "p": spec.p, "d": rec.d, "status": "minimized", "error": e.to_string() })
                        }
                    };
                    if let Err(e) = writeln!(out, "{line}") {
                        write_error.get_or_insert(e);
                    }
                }
            }
            if let Some(e) = write_error.or_else(|| out.flush().err()) {
                return Err(usage(format!("write failed: {e}")));
            }
            eprintln!("elapsed: {:.3}s", report.elapsed.as_secs_f64());
            if !report.is_clean() {
                return Err(Failure::Disagreement);
            }
        }
        Command::Tables { name } => {
            let names: Vec<&str> = match &name {
                Some(n) => vec![n.as_str()],
                None => TABLE_NAMES.to_vec(),
            };
            for n in names {
                let text = render_table(n).ok_or_else(|| {
                    usage(format!(
                        "unknown table {n:?}; known: {}",
                        TABLE_NAMES.join(", ")
                    ))
                })?;
                emit(&format!("## {n}\n{text}"));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Disagreement) => {
            eprintln!("disagreements found");
            ExitCode::from(EXIT_DISAGREEMENT)
        }
    }
}
