use std::fs::File;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use clap::{Args, ValueEnum};
use kelly_impact::fmt::round_sig;
use kelly_impact::levy::{self, LevyModel};
use kelly_impact::options::{self, MatchProblem, MatchSolution};
use kelly_impact::strategy::DEFAULT_MIN_LEN;
use kelly_impact::{kelly, phase, Error, FeedbackMap, ImpactLaw, MarketParams, PortfolioState};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::config;

type ConfigMap = Option<Map<String, Value>>;

/// Exit status 2 for `Usage`, 1 for `Runtime`.
#[derive(Debug)]
pub enum Failure {
    Usage(anyhow::Error),
    Runtime(anyhow::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter { .. }
            | Error::InvalidProbability { .. }
            | Error::NoEdge { .. }
            | Error::WrongMode(_) => Failure::Usage(e.into()),
            _ => Failure::Runtime(e.into()),
        }
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(anyhow!(msg.into()))
}

fn io_failure(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Runtime(e.into())
}

fn required<T>(value: Option<T>, flag: &str) -> Result<T, Failure> {
    value.ok_or_else(|| usage(format!("missing required value --{flag}")))
}

fn merge<T: Serialize + serde::de::DeserializeOwned>(
    args: T,
    file: ConfigMap,
) -> Result<T, Failure> {
    config::resolve(args, file).map_err(Failure::Usage)
}

fn print_json(value: &Value) -> Result<(), Failure> {
    let mut out = io::stdout().lock();
    serde_json::to_writer(&mut out, value).map_err(io_failure)?;
    writeln!(out).map_err(io_failure)
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(
            File::create(p)
                .with_context(|| format!("creating {}", p.display()))
                .map_err(io_failure)?,
        ),
        None => Box::new(io::stdout().lock()),
    })
}

#[derive(Debug, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
#[command(allow_negative_numbers = true)]
pub struct LeverageArgs {
    /// Market price of risk.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Volatility (or Levy scale).
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Risk-free rate.
    #[arg(long)]
    pub r: Option<f64>,
    /// brownian, poisson-jump or jump-diffusion.
    #[arg(long)]
    pub model: Option<String>,
    /// Jump intensity for the Poisson models.
    #[arg(long)]
    pub m: Option<f64>,
}

pub fn leverage(args: LeverageArgs, file: ConfigMap) -> Result<(), Failure> {
    let args = merge(args, file)?;
    let lambda = required(args.lambda, "lambda")?;
    let sigma = required(args.sigma, "sigma")?;
    let value = match &args.model {
        None => {
            let market = MarketParams::new(lambda, sigma, args.r.unwrap_or(0.0))?;
            json!({ "leverage": round_sig(kelly::optimal_leverage(&market)?) })
        }
        Some(name) => {
            let m = match name.as_str() {
                "brownian" | "gbm" => args.m.unwrap_or(0.0),
                _ => required(args.m, "m")?,
            };
            let model = LevyModel::by_name(name, m)?;
            json!({
                "model": model.name(),
                "leverage": round_sig(levy::glm_optimal_leverage(&model, lambda, sigma)?),
            })
        }
    };
    print_json(&value)
}

#[derive(Debug, Default, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Rebalance prefactor fixed at its initial value.
    #[default]
    Frozen,
    /// Portfolio and prices evolve every step.
    Full,
}

#[derive(Debug, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
#[command(allow_negative_numbers = true)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    /// Leverage ratio [default: 2].
    #[arg(long)]
    pub leverage: Option<f64>,
    /// Impact exponent [default: 0.5].
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Impact coefficient [default: 1].
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Frozen rebalance prefactor [default: 1].
    #[arg(long)]
    pub a: Option<f64>,
    /// Initial relative price change [default: 0.5].
    #[arg(long)]
    pub x0: Option<f64>,
    /// Maximum number of rows [default: 100].
    #[arg(long)]
    pub steps: Option<usize>,
    /// Market price of risk in full mode [default: leverage * sigma].
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Volatility in full mode [default: 0.2].
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Risk-free rate [default: 0].
    #[arg(long)]
    pub r: Option<f64>,
    /// Time between rebalances [default: 1/252].
    #[arg(long)]
    pub dt: Option<f64>,
    /// Initial price [default: 1].
    #[arg(long)]
    pub s0: Option<f64>,
    /// Initial portfolio value [default: a * s0 / leverage].
    #[arg(long)]
    pub v0: Option<f64>,
    /// Output CSV path; standard output when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

pub fn simulate(args: SimulateArgs, file: ConfigMap) -> Result<(), Failure> {
    let args = merge(args, file)?;
    let law = ImpactLaw::new(args.gamma.unwrap_or(0.5), args.kappa.unwrap_or(1.0))?;
    let a = args.a.unwrap_or(1.0);
    let s0 = args.s0.unwrap_or(1.0);
    let x0 = args.x0.unwrap_or(0.5);
    let steps = args.steps.unwrap_or(100);
    let mut leverage = args.leverage.unwrap_or(2.0);

    let map = match args.mode.unwrap_or_default() {
        Mode::Frozen => FeedbackMap::frozen(leverage, law, a)?,
        Mode::Full => {
            let sigma = args.sigma.unwrap_or(0.2);
            let lambda = args.lambda.unwrap_or(leverage * sigma);
            let market = MarketParams::new(lambda, sigma, args.r.unwrap_or(0.0))?;
            let map = FeedbackMap::full(market, law, args.dt.unwrap_or(1.0 / 252.0))?;
            leverage = map.leverage();
            map
        }
    };
    let v0 = match args.v0 {
        Some(v) => v,
        None if leverage != 0.0 => a * s0 / leverage,
        None => 1.0,
    };
    let state = PortfolioState::allocated(v0, s0, 1.0, leverage)?;
    let trajectory = kelly_impact::simulate(&map, x0, steps, &state)?;
    trajectory
        .write_csv(output(args.output.as_deref())?)
        .map_err(io_failure)
}

#[derive(Debug, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
#[command(allow_negative_numbers = true)]
pub struct SweepArgs {
    /// [default: 0]
    #[arg(long)]
    pub leverage_min: Option<f64>,
    /// [default: 3]
    #[arg(long)]
    pub leverage_max: Option<f64>,
    /// [default: 0.3]
    #[arg(long)]
    pub gamma_min: Option<f64>,
    /// [default: 0.9]
    #[arg(long)]
    pub gamma_max: Option<f64>,
    /// Nodes along the leverage axis [default: 41].
    #[arg(long)]
    pub n_leverage: Option<usize>,
    /// Nodes along the gamma axis [default: 41].
    #[arg(long)]
    pub n_gamma: Option<usize>,
    /// [default: 0.01]
    #[arg(long)]
    pub x0: Option<f64>,
    /// [default: 1]
    #[arg(long)]
    pub a: Option<f64>,
    /// [default: 1]
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Phase CSV path; standard output when absent.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Heatmap SVG path.
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

pub fn sweep(args: SweepArgs, file: ConfigMap) -> Result<(), Failure> {
    let args = merge(args, file)?;
    let grid = phase::sweep(
        (
            args.leverage_min.unwrap_or(0.0),
            args.leverage_max.unwrap_or(3.0),
        ),
        (args.gamma_min.unwrap_or(0.3), args.gamma_max.unwrap_or(0.9)),
        args.x0.unwrap_or(0.01),
        args.a.unwrap_or(1.0),
        args.kappa.unwrap_or(1.0),
        (args.n_leverage.unwrap_or(41), args.n_gamma.unwrap_or(41)),
    )?;
    grid.write_csv(output(args.csv.as_deref())?)
        .map_err(io_failure)?;
    if let Some(path) = &args.svg {
        grid.write_svg(output(Some(path))?).map_err(io_failure)?;
    }
    Ok(())
}

#[derive(Debug, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
#[command(allow_negative_numbers = true)]
pub struct OptionMatchArgs {
    /// Solve the at-the-money, zero-rate case for sigma sqrt(tau).
    #[arg(long)]
    pub atm: bool,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub spot: Option<f64>,
    /// [default: 0]
    #[arg(long)]
    pub r: Option<f64>,
    /// Fix the strike instead of searching outward from the money.
    #[arg(long)]
    pub strike: Option<f64>,
}

fn solution_json(s: &MatchSolution) -> Value {
    json!({
        "strike": round_sig(s.strike),
        "tau": round_sig(s.tau),
        "n_d1": round_sig(s.n_d1),
        "n_d2": round_sig(s.n_d2),
        "residual_d1": round_sig(s.residual_d1),
        "residual_d2": round_sig(s.residual_d2),
    })
}

pub fn option_match(args: OptionMatchArgs, file: ConfigMap) -> Result<(), Failure> {
    let args = merge(args, file)?;
    let lambda = required(args.lambda, "lambda")?;
    let sigma = required(args.sigma, "sigma")?;
    let value = if args.atm {
        match options::atm_match(lambda, sigma) {
            Ok(y) => json!({ "solution": {
                "sigma_root_tau": round_sig(y),
                "tau": round_sig(y * y / (sigma * sigma)),
                "n_d1": round_sig(kelly_impact::normal::cdf(0.5 * y)),
                "target": round_sig(options::atm_target(lambda, sigma)),
                "residual": round_sig(options::atm_residual(lambda, sigma, y)),
            }}),
            Err(Error::NoSolution(_)) => json!({ "solution": null }),
            Err(Error::Unbounded { cap }) => {
                json!({ "solution": null, "unbounded": true, "cap": cap })
            }
            Err(e) => return Err(e.into()),
        }
    } else {
        let problem = MatchProblem {
            spot: required(args.spot, "spot")?,
            sigma,
            r: args.r.unwrap_or(0.0),
            lambda,
            strike: args.strike,
        };
        let solution = options::general_match(&problem)?;
        json!({ "solution": solution.as_ref().map(solution_json) })
    };
    print_json(&value)
}

#[derive(Debug, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectArgs {
    /// CSV of returns; standard input when absent or `-`.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Column holding the returns when the CSV has a header [default: x].
    #[arg(long)]
    pub column: Option<String>,
    /// Minimum sequence length [default: 4].
    #[arg(long)]
    pub min_len: Option<usize>,
}

/// Reads one numeric column. A first row that does not parse as numbers is
/// taken as a header; without one, or when the header has a single column,
/// the first column is used.
pub fn read_returns<R: Read>(reader: R, column: &str) -> Result<Vec<f64>, Failure> {
    let mut rows = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader)
        .into_records();
    let Some(first) = rows.next() else {
        return Ok(Vec::new());
    };
    let first = first.map_err(|e| Failure::Usage(e.into()))?;
    let is_header = first.iter().any(|f| f.parse::<f64>().is_err());
    let (index, mut values) = if is_header {
        let index = match first.iter().position(|f| f == column) {
            Some(i) => i,
            None if first.len() == 1 => 0,
            None => return Err(usage(format!("no column named {column:?}"))),
        };
        (index, Vec::new())
    } else {
        (0, vec![parse_field(&first, 0, 1)?])
    };
    for (line, row) in rows.enumerate() {
        let row = row.map_err(|e| Failure::Usage(e.into()))?;
        values.push(parse_field(&row, index, line + 2)?);
    }
    Ok(values)
}

fn parse_field(row: &csv::StringRecord, index: usize, line: usize) -> Result<f64, Failure> {
    let field = row
        .get(index)
        .ok_or_else(|| usage(format!("line {line}: missing column {index}")))?;
    field
        .parse()
        .map_err(|_| usage(format!("line {line}: {field:?} is not a number")))
}

pub fn detect(args: DetectArgs, file: ConfigMap) -> Result<(), Failure> {
    let args = merge(args, file)?;
    let column = args.column.as_deref().unwrap_or("x");
    let returns = match args.input.as_deref() {
        Some(p) if p != Path::new("-") => read_returns(
            File::open(p)
                .with_context(|| format!("opening {}", p.display()))
                .map_err(Failure::Usage)?,
            column,
        )?,
        _ => read_returns(io::stdin().lock(), column)?,
    };
    let detection = kelly_impact::detect_phase(&returns, args.min_len.unwrap_or(DEFAULT_MIN_LEN));
    println!("{},{}", detection.label(), detection.action());
    Ok(())
}
