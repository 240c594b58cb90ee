//! `analyze` and `analytic` subcommands.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, Subcommand, ValueEnum};
use serde::Serialize;
use surfperc::analytics;
use surfperc::fitting::{self, Curve, FitResult, ModelKind, Point};
use surfperc::percolation::{self, EffectiveModelParams, ThresholdMode, DEFAULT_ALPHAS};
use surfperc::table::Table;

use crate::args::{parse_distances, parse_floats, usage};
use crate::output::Run;

/// Parameter columns that identify one curve besides `d`.
const PARAMETER_COLUMNS: &[&str] = &["p_x", "p_y", "p_z", "p_m", "p_s", "t"];

#[derive(Subcommand, Debug)]
pub enum AnalyzeCommand {
    /// Fit y(x) per parameter group with several models and pick the lowest RMSE.
    Fit(FitArgs),
    /// Crossing point of the per-distance curves.
    Crossing(CurveArgs),
    /// Finite-size-scaling collapse score, or a scan over (p_c, ν).
    Collapse(CollapseArgs),
    /// Exponent of the first-loss spread Δ(d) = a·d^(−b) from bisection samples.
    Delta(DeltaArgs),
}

#[derive(Args, Debug, Serialize)]
pub struct FitArgs {
    /// Input CSV.
    pub input: PathBuf,
    /// Comma-separated models: log, exp, power, linear.
    #[arg(long, default_value = "log,exp")]
    pub models: String,
    /// Abscissa column.
    #[arg(long, default_value = "d")]
    pub x: String,
    /// Ordinate column.
    #[arg(long, default_value = "tau")]
    pub y: String,
}

#[derive(Args, Debug, Serialize)]
pub struct CurveArgs {
    /// Input CSV with a `d` column.
    pub input: PathBuf,
    /// Abscissa column [default: the swept probability column].
    #[arg(long)]
    pub x: Option<String>,
    /// Ordinate column.
    #[arg(long, default_value = "R")]
    pub y: String,
}

#[derive(Args, Debug, Serialize)]
pub struct CollapseArgs {
    #[command(flatten)]
    pub curves: CurveArgs,
    /// Critical point.
    #[arg(long, default_value_t = 0.5)]
    pub pc: f64,
    /// Correlation-length exponent ν.
    #[arg(long, default_value_t = 4.0 / 3.0)]
    pub nu: f64,
    /// Order-parameter exponent β.
    #[arg(long, default_value_t = 0.0)]
    pub beta: f64,
    /// Scan p_c over a list or `start:stop:step` (needs --scan-nu); writes a CSV.
    #[arg(long, requires = "scan_nu")]
    pub scan_pc: Option<String>,
    /// Scan ν over a list or `start:stop:step` (needs --scan-pc).
    #[arg(long, requires = "scan_pc")]
    pub scan_nu: Option<String>,
}

#[derive(Args, Debug, Serialize)]
pub struct DeltaArgs {
    /// Bisection CSV with `d` and `p` columns.
    pub input: PathBuf,
    /// Seed of the bootstrap resampling.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

fn load(path: &Path) -> anyhow::Result<Table> {
    Ok(Table::load(path)?)
}

type Key = Vec<(String, f64)>;

/// Splits rows by the parameter columns other than `x`, in first-seen order.
fn groups(table: &Table, x: &str) -> Vec<(Key, Vec<usize>)> {
    let keys: Vec<(String, usize)> = PARAMETER_COLUMNS
        .iter()
        .filter(|c| **c != x)
        .filter_map(|c| table.column_index(c).map(|i| (c.to_string(), i)))
        .collect();
    let mut out: Vec<(Key, Vec<usize>)> = Vec::new();
    for (r, row) in table.rows.iter().enumerate() {
        let key: Key = keys.iter().map(|(n, i)| (n.clone(), row[*i])).collect();
        match out.iter_mut().find(|(k, _)| *k == key) {
            Some((_, rows)) => rows.push(r),
            None => out.push((key, vec![r])),
        }
    }
    out
}

#[derive(Serialize)]
#[serde(untagged)]
enum FitOutcome {
    Ok(FitResult),
    Failed { model: ModelKind, error: String },
}

#[derive(Serialize)]
struct FitGroup {
    parameters: BTreeMap<String, f64>,
    fits: Vec<FitOutcome>,
    winner: Option<ModelKind>,
}

#[derive(Serialize)]
struct FitReport {
    x: String,
    y: String,
    groups: Vec<FitGroup>,
}

fn fit(a: FitArgs, out: Option<&Path>) -> anyhow::Result<()> {
    let t = load(&a.input)?;
    t.require(&[&a.x, &a.y])?;
    let models: Vec<ModelKind> = a
        .models
        .split(',')
        .map(|m| m.trim().parse::<ModelKind>())
        .collect::<Result<_, _>>()?;
    let (xi, yi) = (t.column_index(&a.x).unwrap(), t.column_index(&a.y).unwrap());
    let groups = groups(&t, &a.x)
        .into_iter()
        .map(|(key, rows)| {
            let pts: Vec<Point> = rows.iter().map(|&r| Point::new(t.rows[r][xi], t.rows[r][yi])).collect();
            let fits: Vec<FitOutcome> = models
                .iter()
                .map(|&m| match fitting::fit(m, &pts) {
                    Ok(f) => FitOutcome::Ok(f),
                    Err(e) => FitOutcome::Failed {
                        model: m,
                        error: e.to_string(),
                    },
                })
                .collect();
            let winner = fits
                .iter()
                .filter_map(|f| match f {
                    FitOutcome::Ok(r) => Some(r),
                    FitOutcome::Failed { .. } => None,
                })
                .min_by(|a, b| a.rmse.total_cmp(&b.rmse))
                .map(|r| r.model);
            FitGroup {
                parameters: key.into_iter().collect(),
                fits,
                winner,
            }
        })
        .collect();
    let report = FitReport {
        x: a.x.clone(),
        y: a.y.clone(),
        groups,
    };
    Run::start("analyze fit", None, &a)?.write_json(&report, out)
}

/// The swept column: `p_m` if several Pauli columns move together, else the one that varies.
fn sweep_column(t: &Table) -> anyhow::Result<String> {
    let varies = |c: &str| {
        t.column(c)
            .map(|v| v.iter().any(|x| (x - v[0]).abs() > 1e-12))
            .unwrap_or(false)
    };
    let moving: Vec<&str> = ["p_x", "p_y", "p_z", "p_s"].into_iter().filter(|c| varies(c)).collect();
    match moving.as_slice() {
        [one] => Ok(one.to_string()),
        [_, _, ..] if varies("p_m") && !moving.contains(&"p_s") => Ok("p_m".into()),
        [] if varies("p_m") => Ok("p_m".into()),
        _ => Err(usage("cannot tell which column is swept; pass --x")),
    }
}

fn curves(a: &CurveArgs) -> anyhow::Result<(String, Vec<Curve>)> {
    let t = load(&a.input)?;
    let x = match &a.x {
        Some(x) => x.clone(),
        None => sweep_column(&t)?,
    };
    t.require(&["d", &x, &a.y])?;
    let (d, xs, ys) = (t.column("d")?, t.column(&x)?, t.column(&a.y)?);
    let mut by_d: BTreeMap<usize, Vec<(f64, f64)>> = BTreeMap::new();
    for i in 0..d.len() {
        by_d.entry(d[i] as usize).or_default().push((xs[i], ys[i]));
    }
    Ok((x, by_d.into_iter().map(|(d, p)| Curve::new(d, p)).collect()))
}

fn crossing(a: CurveArgs, out: Option<&Path>) -> anyhow::Result<()> {
    let (x, cs) = curves(&a)?;
    let c = fitting::crossing_point(&cs)?;
    let report = serde_json::json!({ "x": x, "y": a.y, "crossing": c.x_c, "spread": c.spread, "pairs": c.pairs });
    Run::start("analyze crossing", None, &a)?.write_json(&report, out)
}

fn collapse(a: CollapseArgs, out: Option<&Path>) -> anyhow::Result<()> {
    let (x, cs) = curves(&a.curves)?;
    match (&a.scan_pc, &a.scan_nu) {
        (Some(pcs), Some(nus)) => {
            let scan = fitting::collapse_scan(&cs, &parse_floats(pcs)?, &parse_floats(nus)?, a.beta)?;
            eprintln!("best p_c = {} nu = {} score = {:e}", scan.p_c, scan.nu, scan.score);
            let mut t = Table::new(["p_c", "nu", "beta", "score"]);
            for &(p, n, s) in &scan.grid {
                t.push(vec![p, n, a.beta, s]);
            }
            Run::start("analyze collapse", None, &a)?.write_table(&t, out)
        }
        _ => {
            let score = fitting::collapse_quality(&cs, a.pc, a.nu, a.beta)?;
            let report = serde_json::json!({
                "x": x, "y": a.curves.y, "p_c": a.pc, "nu": a.nu, "beta": a.beta, "score": score,
            });
            Run::start("analyze collapse", None, &a)?.write_json(&report, out)
        }
    }
}

fn delta(a: DeltaArgs, out: Option<&Path>) -> anyhow::Result<()> {
    let t = load(&a.input)?;
    t.require(&["d", "p"])?;
    let (d, p) = (t.column("d")?, t.column("p")?);
    let mut by_d: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for (d, p) in d.iter().zip(p) {
        by_d.entry(*d as usize).or_default().push(p);
    }
    let r = fitting::delta_exponent(&by_d.into_iter().collect::<Vec<_>>(), a.seed)?;
    Run::start("analyze delta", Some(a.seed), &a)?.write_json(&r, out)
}

pub fn analyze(c: AnalyzeCommand, out: Option<&Path>) -> anyhow::Result<()> {
    match c {
        AnalyzeCommand::Fit(a) => fit(a, out),
        AnalyzeCommand::Crossing(a) => crossing(a, out),
        AnalyzeCommand::Collapse(a) => collapse(a, out),
        AnalyzeCommand::Delta(a) => delta(a, out),
    }
}

#[derive(Subcommand, Debug)]
pub enum AnalyticCommand {
    /// Probability that Y measurements alone destroy the logical information.
    Yfail(YfailArgs),
    /// Critical X-measurement rate of the dynamics for given p_s.
    Threshold(ThresholdArgs),
    /// Lifetime in the p_s = 0 and p_s = 1 regimes.
    Lifetime(LifetimeArgs),
    /// Lost-edge fraction from the mean-field recursion, by round.
    Fraction(FractionArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum YfailMethod {
    /// Exact binomial sum.
    Closed,
    /// Normal approximation of the binomial sums.
    Normal,
}

#[derive(Args, Debug, Serialize)]
pub struct YfailArgs {
    /// Code distances.
    #[arg(long)]
    pub d: String,
    /// Y-measurement probabilities: list or `start:stop:step`.
    #[arg(long)]
    pub py: String,
    /// Evaluation method.
    #[arg(long, value_enum, default_value = "closed")]
    pub method: YfailMethod,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ThresholdModeArg {
    /// Reintegration probability from the weighted plaquette ansatz.
    Ansatz,
    /// Reintegration probability equal to p_s.
    Meanfield,
}

#[derive(Args, Debug, Serialize)]
pub struct ThresholdArgs {
    /// Stabilizer-measurement probabilities: list or `start:stop:step`.
    #[arg(long)]
    pub ps: String,
    /// How the effective reintegration probability is obtained.
    #[arg(long, value_enum, default_value = "ansatz")]
    pub mode: ThresholdModeArg,
    /// Ansatz weights `α1,α2,α3` [default: 0.5,-0.375,0.875].
    #[arg(long)]
    pub alphas: Option<String>,
}

#[derive(Args, Debug, Serialize)]
pub struct LifetimeArgs {
    /// Code distances.
    #[arg(long)]
    pub d: String,
    /// Stabilizer regime: 0 or 1.
    #[arg(long)]
    pub ps: u8,
    /// Total measurement probability (p_s = 0 regime).
    #[arg(long)]
    pub pm: Option<f64>,
    /// Y-measurement probability (p_s = 1 regime).
    #[arg(long)]
    pub py: Option<f64>,
    /// Exponent of the p_s = 1 failure event [default: 4d − 2].
    #[arg(long)]
    pub exponent: Option<f64>,
}

#[derive(Args, Debug, Serialize)]
pub struct FractionArgs {
    /// X-measurement probability.
    #[arg(long)]
    pub px: f64,
    /// Effective reintegration probability.
    #[arg(long)]
    pub ps: f64,
    /// Number of rounds.
    #[arg(long, default_value_t = 40)]
    pub steps: usize,
}

fn yfail(a: YfailArgs, out: Option<&Path>) -> anyhow::Result<()> {
    let mut t = Table::new(["d", "p_y", "P_fail", "R"]);
    for d in parse_distances(&a.d)? {
        for p in parse_floats(&a.py)? {
            let f = match a.method {
                YfailMethod::Closed => analytics::y_fail_probability(d, p)?,
                YfailMethod::Normal => analytics::y_fail_normal_approx(d, p)?,
            };
            t.push(vec![d as f64, p, f, 1.0 - f]);
        }
    }
    Run::start("analytic yfail", None, &a)?.write_table(&t, out)
}

fn threshold(a: ThresholdArgs, out: Option<&Path>) -> anyhow::Result<()> {
    let alphas = match &a.alphas {
        Some(s) => parse_floats(s)?,
        None => DEFAULT_ALPHAS.to_vec(),
    };
    let mode = match a.mode {
        ThresholdModeArg::Ansatz => ThresholdMode::Ansatz(alphas.clone()),
        ThresholdModeArg::Meanfield => ThresholdMode::MeanField,
    };
    let mut t = Table::new(["p_s", "p_s_eff", "p_x_c"]);
    for ps in parse_floats(&a.ps)? {
        let eff = match a.mode {
            ThresholdModeArg::Ansatz => percolation::effective_ps(&EffectiveModelParams::new(alphas.clone(), ps)?),
            ThresholdModeArg::Meanfield => ps,
        };
        t.push(vec![ps, eff, percolation::threshold_x(ps, &mode)?]);
    }
    Run::start("analytic threshold", None, &a)?.write_table(&t, out)
}

fn lifetime(a: LifetimeArgs, out: Option<&Path>) -> anyhow::Result<()> {
    let ds = parse_distances(&a.d)?;
    let mut t = Table::new(["d", "p_s", "p", "tau"]);
    for d in &ds {
        let (p, tau) = match a.ps {
            0 => {
                let pm = a.pm.ok_or_else(|| usage("--ps 0 needs --pm"))?;
                (pm, analytics::lifetime_ps0(*d, pm)?)
            }
            1 => {
                let py = a.py.ok_or_else(|| usage("--ps 1 needs --py"))?;
                let k = a.exponent.unwrap_or_else(|| analytics::default_ps1_exponent(*d));
                (py, analytics::lifetime_ps1_with_exponent(py, k)?)
            }
            other => return Err(usage(format!("--ps must be 0 or 1, got {other}"))),
        };
        t.push(vec![*d as f64, a.ps as f64, p, tau]);
    }
    Run::start("analytic lifetime", None, &a)?
        .with_distances(&ds)
        .write_table(&t, out)
}

fn fraction(a: FractionArgs, out: Option<&Path>) -> anyhow::Result<()> {
    let series = percolation::effective_fraction_series(a.steps, a.px, a.ps)?;
    let mut t = Table::new(["t", "F"]);
    for (i, f) in series.iter().enumerate() {
        t.push(vec![i as f64, *f]);
    }
    Run::start("analytic fraction", None, &a)?.write_table(&t, out)
}

pub fn analytic(c: AnalyticCommand, out: Option<&Path>) -> anyhow::Result<()> {
    match c {
        AnalyticCommand::Yfail(a) => yfail(a, out),
        AnalyticCommand::Threshold(a) => threshold(a, out),
        AnalyticCommand::Lifetime(a) => lifetime(a, out),
        AnalyticCommand::Fraction(a) => fraction(a, out),
    }
}
