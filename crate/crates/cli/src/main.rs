//! `gls`: evaluate load-shifting scenarios, sweep loads, run the trace
//! oracle and the growth analysis.
//!
//! Exit codes: 0 success, 1 invalid input, 2 I/O failure, 3 oracle z-score
//! above 3.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use gls_core::growth::{capacity_projection, years_compensated};
use gls_core::oracle::{compare_with_means, Coupling, Distribution, TraceSpec};
use gls_core::report::{evaluation_csv, Precision, ReportTable};
use gls_core::scenario::{load_scenario, ScenarioConfig};
use gls_core::sweep::{run_sweep, SweepSpec, SweptParameter, Variant};

const Z_LIMIT: f64 = 3.0;

#[derive(Parser)]
#[command(
    name = "gls",
    version,
    about = "Emission reductions from geographic load shifting"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate one scenario file and print the report table.
    Evaluate {
        file: PathBuf,
        /// Emit a CSV row instead of the table.
        #[arg(long)]
        csv: bool,
        #[arg(long, value_enum, default_value_t = PrecisionArg::Rounded, requires = "csv")]
        precision: PrecisionArg,
    },
    /// Reduction as a function of load for the requested variants.
    Sweep {
        file: PathBuf,
        #[arg(long, value_parser = parse_param)]
        param: SweptParameter,
        #[arg(long, default_value_t = 0.0)]
        from: f64,
        #[arg(long, default_value_t = 1.0)]
        to: f64,
        #[arg(long, default_value_t = gls_core::sweep::DEFAULT_STEP)]
        step: f64,
        /// Comma-separated: full, zero_idle, zero_embodied, no_time_constraints.
        #[arg(long, value_delimiter = ',', value_parser = parse_variant)]
        variants: Vec<Variant>,
        /// Keep the scenario's alpha instead of moving as much as possible.
        #[arg(long)]
        keep_alpha: bool,
        /// Write the CSV here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Years of demand growth that cancel a given reduction.
    Growth {
        #[arg(long)]
        reduction: f64,
        #[arg(long)]
        growth: f64,
        /// Also project power and energy from this base (GW).
        #[arg(long, requires = "years")]
        base_gw: Option<f64>,
        #[arg(long, requires = "base_gw")]
        years: Option<u32>,
    },
    /// Compare a seeded time-stepped trace with the closed-form model.
    Oracle {
        #[arg(long)]
        steps: u64,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 0.3)]
        gamma: f64,
        /// Embodied emissions, kgCO2e/y.
        #[arg(long, default_value_t = 444.0)]
        embodied: f64,
        /// constant:V, uniform:LO:HI or two_point:LO:HI:P_HIGH
        #[arg(long, default_value = "uniform:0.6:1.0", value_parser = parse_distribution)]
        load: Distribution,
        /// Carbon intensity in g/kWh, same syntax as --load.
        #[arg(long, default_value = "uniform:300:500", value_parser = parse_distribution)]
        ci: Distribution,
        /// Full-load energy of one node over a year, kWh.
        #[arg(long, default_value_t = 10_512.0)]
        energy_kwh: f64,
        /// Couple load to CI (negative control for the independence assumption).
        #[arg(long)]
        correlated: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum PrecisionArg {
    Rounded,
    Full,
}

fn parse_param(s: &str) -> Result<SweptParameter, String> {
    s.parse()
        .map_err(|e: gls_core::sweep::SweepError| e.to_string())
}

fn parse_variant(s: &str) -> Result<Variant, String> {
    s.trim()
        .parse()
        .map_err(|e: gls_core::sweep::SweepError| e.to_string())
}

fn parse_distribution(s: &str) -> Result<Distribution, String> {
    let mut parts = s.split(':');
    let kind = parts.next().unwrap_or_default();
    let numbers = parts
        .map(|p| {
            p.parse::<f64>()
                .map_err(|_| format!("`{p}` is not a number"))
        })
        .collect::<Result<Vec<_>, _>>()?;
    match (kind, numbers.as_slice()) {
        ("constant", [v]) => Ok(Distribution::Constant(*v)),
        ("uniform", [low, high]) => Ok(Distribution::Uniform {
            low: *low,
            high: *high,
        }),
        ("two_point", [low, high, p_high]) => Ok(Distribution::TwoPoint {
            low: *low,
            high: *high,
            p_high: *p_high,
        }),
        _ => Err(format!(
            "`{s}`: expected constant:V, uniform:LO:HI or two_point:LO:HI:P_HIGH"
        )),
    }
}

enum Failure {
    Invalid(String),
    Io(String),
    ZScore(String),
}

impl Failure {
    fn invalid(e: impl ToString) -> Self {
        Failure::Invalid(e.to_string())
    }
}

fn read_scenario(path: &Path) -> Result<ScenarioConfig, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Io(format!("cannot read {}: {e}", path.display())))?;
    load_scenario(&text).map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))
}

fn run(command: Command) -> Result<String, Failure> {
    match command {
        Command::Evaluate {
            file,
            csv,
            precision,
        } => {
            let config = read_scenario(&file)?;
            let report = config.evaluate().map_err(Failure::invalid)?;
            if csv {
                let precision = match precision {
                    PrecisionArg::Rounded => Precision::Rounded,
                    PrecisionArg::Full => Precision::Full,
                };
                Ok(evaluation_csv(&config, &report, precision))
            } else {
                let mut out = ReportTable::new(&config, &report).to_string();
                for w in &report.warnings {
                    out.push_str(&format!("warning: {w:?}\n"));
                }
                Ok(out)
            }
        }
        Command::Sweep {
            file,
            param,
            from,
            to,
            step,
            variants,
            keep_alpha,
            out,
        } => {
            let base = read_scenario(&file)?;
            let spec = SweepSpec {
                from,
                to,
                step,
                variants: if variants.is_empty() {
                    Variant::ALL.to_vec()
                } else {
                    variants
                },
                keep_base_alpha: keep_alpha,
                ..SweepSpec::new(base, param)
            };
            let csv = run_sweep(&spec).map_err(Failure::invalid)?.to_csv();
            match out {
                Some(path) => {
                    fs::write(&path, csv).map_err(|e| {
                        Failure::Io(format!("cannot write {}: {e}", path.display()))
                    })?;
                    Ok(String::new())
                }
                None => Ok(csv),
            }
        }
        Command::Growth {
            reduction,
            growth,
            base_gw,
            years,
        } => {
            let t = years_compensated(reduction, growth).map_err(Failure::invalid)?;
            let mut out = format!("{t:.2}\n");
            if let (Some(base), Some(years)) = (base_gw, years) {
                let p = capacity_projection(base, growth, years).map_err(Failure::invalid)?;
                out.push_str(&format!(
                    "power_gw = {:.1}\nenergy_twh_per_year = {:.0}\n",
                    p.power_gw, p.annual_energy_twh
                ));
            }
            Ok(out)
        }
        Command::Oracle {
            steps,
            seed,
            gamma,
            embodied,
            load,
            ci,
            energy_kwh,
            correlated,
        } => {
            let spec = TraceSpec {
                steps,
                seed,
                load,
                ci,
                coupling: if correlated {
                    Coupling::Comonotone
                } else {
                    Coupling::Independent
                },
                full_load_energy_kwh: energy_kwh,
            };
            let c = compare_with_means(&spec, gamma, embodied).map_err(Failure::invalid)?;
            let out = format!(
                "trace_total = {:.6}\nclosed_form_total = {:.6}\nsample_mean_total = {:.6}\n\
                 covariance_term = {:.6}\nstandard_error = {:.6}\nz_score = {:.4}\n",
                c.trace_total,
                c.closed_form_total,
                c.sample_mean_total,
                c.covariance_term,
                c.standard_error,
                c.z_score
            );
            if c.z_score.abs() > Z_LIMIT {
                Err(Failure::ZScore(out))
            } else {
                Ok(out)
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(Failure::Invalid(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::ZScore(out)) => {
            print!("{out}");
            eprintln!("z-score exceeds {Z_LIMIT}");
            ExitCode::from(3)
        }
    }
}
