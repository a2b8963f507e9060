use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{Map, Value};

use petersson::bessel::j1;
use petersson::character::make_character;
use petersson::kloosterman::{kloosterman_fast, weil_bound};
use petersson::lfunctions::{afe_central_value, afe_default_x, afe_terms_needed, eta_product_coeffs};
use petersson::moments::{compute_moment_reports, newform_moment, MomentQuery, XChoice};
use petersson::report::{self, real};
use petersson::trace::{identity_delta_series, restricted_trace_rhs, single_sign_trace_rhs, EigenvalueSpec, TruncationBudget};
use petersson::Error;

#[derive(Parser)]
#[command(name = "petersson", version, about = "Certified Petersson trace formula and twisted L-value moments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Largest modulus c summed.
    #[arg(long, global = true, default_value_t = 10_000)]
    cmax: u64,
    /// Fail with exit code 3 if the certified tail exceeds this.
    #[arg(long, global = true)]
    target_tail: Option<f64>,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    threads: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Exact Kloosterman sum S(m,n;c).
    Kloosterman {
        #[arg(long, allow_hyphen_values = true)]
        m: i64,
        #[arg(long, allow_hyphen_values = true)]
        n: i64,
        #[arg(long)]
        c: u64,
    },
    /// Bessel function J₁ at x.
    Bessel {
        #[arg(long)]
        x: f64,
    },
    /// Kloosterman side of the trace formula restricted to w_q = eps, or of
    /// the classical formula when --q is absent.
    Trace {
        #[arg(long)]
        m: i64,
        #[arg(long)]
        n: i64,
        #[arg(long)]
        level: u64,
        #[arg(long, requires = "eps")]
        q: Option<u64>,
        #[arg(long, allow_hyphen_values = true, requires = "q")]
        eps: Option<i8>,
    },
    /// The series that must vanish because S_2(Γ₀(q²)) contains no form
    /// with w_{q²} = −1 at level q.
    Identity {
        #[arg(long)]
        m: i64,
        #[arg(long)]
        n: i64,
        #[arg(long)]
        q: u64,
    },
    /// Central value L(f⊗χ,1) for a shipped eta-quotient newform; CSV
    /// output dumps the coefficients instead.
    Afe {
        #[arg(long)]
        level: u64,
        #[arg(long, default_value_t = 1, allow_hyphen_values = true)]
        disc: i64,
        #[arg(long)]
        x: Option<f64>,
    },
    /// Twisted first moment over w_{p²}-invariant newforms of level dp².
    Moment(MomentArgs),
    /// As `moment`, with the x that balances both halves of the functional
    /// equation by default.
    Certify(MomentArgs),
    /// Moments over a grid of comma-separated d, p and D values.
    Sweep {
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        d: Vec<u64>,
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        p: Vec<u64>,
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        disc: Vec<i64>,
        #[arg(long, default_value = "auto")]
        x: String,
    },
}

#[derive(Args)]
struct MomentArgs {
    #[arg(long)]
    d: u64,
    #[arg(long)]
    p: u64,
    #[arg(long, default_value_t = 1, allow_hyphen_values = true)]
    disc: i64,
    /// auto, selfdual, or a positive number.
    #[arg(long)]
    x: Option<String>,
}

enum Failure {
    Usage(String),
    Library(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Library(e)
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Library(Error::BudgetExceeded { .. } | Error::QuadratureFailure { .. }) => 3,
            _ => 2,
        }
    }

    fn to_json(&self) -> Value {
        match self {
            Failure::Library(e) => report::error(e),
            Failure::Usage(msg) => {
                let mut inner = Map::new();
                inner.insert("kind".into(), Value::String("Usage".into()));
                inner.insert("message".into(), Value::String(msg.clone()));
                let mut m = Map::new();
                m.insert("error".into(), Value::Object(inner));
                Value::Object(m)
            }
        }
    }
}

fn parse_x(text: &str) -> Result<XChoice, Failure> {
    match text {
        "auto" => Ok(XChoice::Auto),
        "selfdual" => Ok(XChoice::SelfDual),
        other => match other.parse::<f64>() {
            Ok(v) if v > 0.0 && v.is_finite() => Ok(XChoice::Fixed(v)),
            _ => Err(Failure::Usage(format!("--x must be auto, selfdual or a positive number, got {other}"))),
        },
    }
}

fn budget(common: &Common) -> TruncationBudget {
    match common.target_tail {
        Some(t) => TruncationBudget::new(common.cmax, t),
        None => TruncationBudget::unbounded(common.cmax),
    }
}

fn object(entries: Vec<(&str, Value)>) -> Value {
    Value::Object(entries.into_iter().map(|(k, v)| (k.to_string(), v)).collect())
}

fn certified_output(v: &petersson::trace::CertifiedValue, format: Format) -> String {
    match format {
        Format::Json => report::to_json_line(&report::certified(v)),
        Format::Csv => format!(
            "value,tail_bound,terms_used\n{},{},{}\n",
            report::format_real(v.value),
            report::format_real(v.tail_bound),
            v.terms_used
        ),
    }
}

fn single_value(name: &str, v: f64, format: Format) -> String {
    match format {
        Format::Json => report::to_json_line(&object(vec![(name, real(v))])),
        Format::Csv => format!("{name}\n{}\n", report::format_real(v)),
    }
}

fn moment(args: &MomentArgs, default_x: XChoice, common: &Common) -> Result<String, Failure> {
    let x = match &args.x {
        Some(text) => parse_x(text)?,
        None => default_x,
    };
    let query = MomentQuery::new(args.d, args.p, args.disc, x);
    let r = newform_moment(&query, budget(common))?;
    Ok(match common.format {
        Format::Json => report::to_json_line(&report::moment_report(&r)),
        Format::Csv => format!(
            "{}\n{}\n",
            report::MOMENT_CSV_HEADER,
            report::moment_csv_row((args.d, args.p, args.disc, &x), &Ok(r))
        ),
    })
}

fn run(cli: &Cli) -> Result<String, Failure> {
    let common = &cli.common;
    match &cli.command {
        Command::Kloosterman { m, n, c } => {
            if *c == 0 {
                return Err(Failure::Usage("--c must be positive".into()));
            }
            let value = kloosterman_fast(*m, *n, *c);
            Ok(match common.format {
                Format::Json => report::to_json_line(&object(vec![
                    ("value", real(value)),
                    ("weil_bound", real(weil_bound(*m, *n, *c))),
                ])),
                Format::Csv => format!(
                    "value,weil_bound\n{},{}\n",
                    report::format_real(value),
                    report::format_real(weil_bound(*m, *n, *c))
                ),
            })
        }
        Command::Bessel { x } => {
            if !(*x >= 0.0 && x.is_finite()) {
                return Err(Failure::Usage("--x must be a nonnegative number".into()));
            }
            Ok(single_value("value", j1(*x), common.format))
        }
        Command::Trace { m, n, level, q, eps } => {
            let v = match (q, eps) {
                (Some(q), Some(eps)) => single_sign_trace_rhs(*m, *n, *level, *q, *eps, budget(common))?,
                _ => restricted_trace_rhs(*m, *n, &EigenvalueSpec::classical(*level), budget(common))?,
            };
            Ok(certified_output(&v, common.format))
        }
        Command::Identity { m, n, q } => Ok(certified_output(&identity_delta_series(*m, *n, *q, budget(common))?, common.format)),
        Command::Afe { level, disc, x } => {
            let chi = make_character(*disc)?;
            let x = x.unwrap_or_else(|| afe_default_x(*level, &chi));
            if !(x > 0.0 && x.is_finite()) {
                return Err(Failure::Usage("--x must be a positive number".into()));
            }
            let needed = afe_terms_needed(*level, &chi, x);
            let src = eta_product_coeffs(*level, needed)?;
            if common.format == Format::Csv {
                return Ok(src.to_csv());
            }
            let value = afe_central_value(&src, &chi, x)?;
            Ok(report::to_json_line(&object(vec![
                ("level", Value::from(*level)),
                ("disc", Value::from(*disc)),
                ("x", real(x)),
                ("atkin_lehner_sign", Value::from(src.atkin_lehner_sign.value().unwrap_or(0))),
                ("terms_used", Value::from(needed)),
                ("value", real(value)),
            ])))
        }
        Command::Moment(args) => moment(args, XChoice::Auto, common),
        Command::Certify(args) => moment(args, XChoice::SelfDual, common),
        Command::Sweep { d, p, disc, x } => {
            let x = parse_x(x)?;
            let mut grid = Vec::new();
            for &dd in d {
                for &pp in p {
                    for &disc in disc {
                        grid.push(MomentQuery::new(dd, pp, disc, x));
                    }
                }
            }
            let reports = compute_moment_reports(&grid, common.cmax);
            // The target tail is checked per row so one failure never aborts the sweep.
            let outcomes: Vec<Result<_, Error>> = reports
                .into_iter()
                .map(|r| {
                    r.and_then(|r| match common.target_tail {
                        Some(t) if r.newform_moment.tail_bound > t => Err(Error::BudgetExceeded {
                            tail: r.newform_moment.tail_bound,
                            target: t,
                            c_max: common.cmax,
                        }),
                        _ => Ok(r),
                    })
                })
                .collect();
            Ok(match common.format {
                Format::Json => {
                    let rows = outcomes
                        .iter()
                        .map(|o| match o {
                            Ok(r) => report::moment_report(r),
                            Err(e) => report::error(e),
                        })
                        .collect();
                    report::to_json_line(&Value::Array(rows))
                }
                Format::Csv => {
                    let mut out = String::from(report::MOMENT_CSV_HEADER);
                    out.push('\n');
                    for (q, o) in grid.iter().zip(&outcomes) {
                        out.push_str(&report::moment_csv_row((q.d, q.p, q.disc, &q.x), o));
                        out.push('\n');
                    }
                    out
                }
            })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let failure = Failure::Usage(e.to_string().trim().to_string());
            print!("{}", report::to_json_line(&failure.to_json()));
            return ExitCode::from(failure.exit_code());
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.common.threads as usize).build() {
        Ok(pool) => pool,
        Err(e) => {
            let failure = Failure::Usage(format!("cannot start {} worker threads: {e}", cli.common.threads));
            print!("{}", report::to_json_line(&failure.to_json()));
            return ExitCode::from(failure.exit_code());
        }
    };
    match pool.install(|| run(&cli)) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(failure) => {
            print!("{}", report::to_json_line(&failure.to_json()));
            ExitCode::from(failure.exit_code())
        }
    }
}
