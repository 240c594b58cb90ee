//! Least-squares fits, curve crossings, scaling collapse and the `Δ(d)` exponent.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    /// `a·ln x + b`
    Log,
    /// `a·e^{b x} + c`
    Exp,
    /// `a·x^{−b}`
    Power,
    /// `a·x + b`
    Linear,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [ModelKind::Log, ModelKind::Exp, ModelKind::Power, ModelKind::Linear];

    pub fn n_params(self) -> usize {
        match self {
            ModelKind::Exp => 3,
            _ => 2,
        }
    }

    pub fn eval(self, params: &[f64], x: f64) -> f64 {
        match self {
            ModelKind::Log => params[0] * x.ln() + params[1],
            ModelKind::Exp => params[0] * (params[1] * x).exp() + params[2],
            ModelKind::Power => params[0] * x.powf(-params[1]),
            ModelKind::Linear => params[0] * x + params[1],
        }
    }

    fn gradient(self, params: &[f64], x: f64) -> Vec<f64> {
        match self {
            ModelKind::Log => vec![x.ln(), 1.0],
            ModelKind::Exp => {
                let e = (params[1] * x).exp();
                vec![e, params[0] * x * e, 1.0]
            }
            ModelKind::Power => {
                let p = x.powf(-params[1]);
                vec![p, -params[0] * x.ln() * p]
            }
            ModelKind::Linear => vec![x, 1.0],
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "log" => Ok(ModelKind::Log),
            "exp" => Ok(ModelKind::Exp),
            "power" => Ok(ModelKind::Power),
            "linear" => Ok(ModelKind::Linear),
            _ => Err(Error::invalid(format!("unknown model {s:?}"))),
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ModelKind::Log => "log",
            ModelKind::Exp => "exp",
            ModelKind::Power => "power",
            ModelKind::Linear => "linear",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
    pub weight: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y, weight: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: ModelKind,
    pub params: Vec<f64>,
    /// Unweighted root-mean-square residual over the supplied points.
    pub rmse: f64,
    pub n_points: usize,
}

impl FitResult {
    pub fn predict(&self, x: f64) -> f64 {
        self.model.eval(&self.params, x)
    }
}

const MAX_ITERATIONS: usize = 100;
const TOLERANCE: f64 = 1e-10;

/// Weighted least-squares fit of `model` to `points`.
pub fn fit(model: ModelKind, points: &[Point]) -> Result<FitResult> {
    if points.len() < model.n_params() {
        return Err(Error::invalid(format!(
            "{model} fit needs at least {} points, got {}",
            model.n_params(),
            points.len()
        )));
    }
    if points.iter().any(|p| !(p.x.is_finite() && p.y.is_finite() && p.weight >= 0.0)) {
        return Err(Error::invalid("points must be finite with non-negative weights"));
    }
    let params = match model {
        ModelKind::Linear => linear_ls(points.iter().map(|p| (p.x, p.y, p.weight)))?,
        ModelKind::Log => {
            if points.iter().any(|p| p.x <= 0.0) {
                return Err(Error::invalid("log model needs x > 0"));
            }
            linear_ls(points.iter().map(|p| (p.x.ln(), p.y, p.weight)))?
        }
        ModelKind::Power => {
            if points.iter().any(|p| p.x <= 0.0 || p.y <= 0.0) {
                return Err(Error::invalid("power model needs x > 0 and y > 0"));
            }
            let [s, i] = linear_ls(points.iter().map(|p| (p.x.ln(), p.y.ln(), p.weight)))?[..] else {
                unreachable!()
            };
            gauss_newton(model, points, vec![i.exp(), -s])?
        }
        ModelKind::Exp => {
            let start = exp_profile(points)?;
            // Polishing can stall in the flat a–c valley; the profile optimum stands then.
            gauss_newton(model, points, start.clone())
                .ok()
                .filter(|p| weighted_ss(model, p, points) <= weighted_ss(model, &start, points))
                .unwrap_or(start)
        }
    };
    Ok(FitResult {
        model,
        rmse: rmse(model, &params, points),
        params,
        n_points: points.len(),
    })
}

fn rmse(model: ModelKind, params: &[f64], points: &[Point]) -> f64 {
    let ss: f64 = points.iter().map(|p| (model.eval(params, p.x) - p.y).powi(2)).sum();
    (ss / points.len() as f64).sqrt()
}

fn weighted_ss(model: ModelKind, params: &[f64], points: &[Point]) -> f64 {
    points
        .iter()
        .map(|p| p.weight * (model.eval(params, p.x) - p.y).powi(2))
        .sum()
}

/// Closed-form weighted fit of `y = a·x + b`; returns `[a, b]`.
fn linear_ls(data: impl Iterator<Item = (f64, f64, f64)>) -> Result<Vec<f64>> {
    let (mut sw, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (x, y, w) in data {
        sw += w;
        sx += w * x;
        sy += w * y;
        sxx += w * x * x;
        sxy += w * x * y;
    }
    let det = sw * sxx - sx * sx;
    if det.abs() <= 1e-12 * (sw * sxx).abs().max(f64::MIN_POSITIVE) {
        return Err(Error::invalid("singular design matrix: x values do not vary"));
    }
    let a = (sw * sxy - sx * sy) / det;
    let b = (sy - a * sx) / sw;
    Ok(vec![a, b])
}

/// Variable projection for `a·e^{bx} + c`: for fixed `b` the model is linear
/// in `a` and `c`, so the profile cost depends on `b` alone. A log-spaced scan
/// over `b·span` brackets the minimum and golden-section search refines it.
fn exp_profile(points: &[Point]) -> Result<Vec<f64>> {
    let (x0, x1) = points
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), p| (l.min(p.x), h.max(p.x)));
    let span = x1 - x0;
    if span <= 0.0 {
        return Err(Error::invalid("singular design matrix: x values do not vary"));
    }
    // Shifting by x0 keeps e^{b(x − x0)} in range for steep exponentials.
    let solve_linear = |s: f64| -> Option<(f64, Vec<f64>)> {
        let b = s / span;
        let line = linear_ls(points.iter().map(|p| ((b * (p.x - x0)).exp(), p.y, p.weight))).ok()?;
        let params = vec![line[0] * (-b * x0).exp(), b, line[1]];
        let cost = weighted_ss(ModelKind::Exp, &params, points);
        cost.is_finite().then_some((cost, params))
    };
    let magnitudes: Vec<f64> = (0..=48).map(|i| 1e-3 * 10f64.powf(i as f64 / 10.0)).collect();
    let scan: Vec<f64> = magnitudes.iter().rev().map(|m| -m).chain(magnitudes.iter().copied()).collect();
    let costs: Vec<f64> = scan
        .iter()
        .map(|&s| solve_linear(s).map_or(f64::INFINITY, |(c, _)| c))
        .collect();
    let best = (0..scan.len())
        .min_by(|&i, &j| costs[i].total_cmp(&costs[j]))
        .filter(|&i| costs[i].is_finite())
        .ok_or_else(|| Error::Convergence("exp fit: no finite profile cost".into()))?;
    // The profile is continuous through b = 0, where it tends to the straight-line cost.
    let (lo, hi) = (scan[best.saturating_sub(1)], scan[(best + 1).min(scan.len() - 1)]);
    let profile = |s: f64| solve_linear(s).map_or(f64::INFINITY, |(c, _)| c);
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (lo, hi);
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut fc, mut fd) = (profile(c), profile(d));
    for _ in 0..200 {
        if (b - a).abs() <= 1e-13 * (a.abs() + b.abs()) {
            break;
        }
        if fc <= fd {
            (b, d, fd) = (d, c, fc);
            c = b - ratio * (b - a);
            fc = profile(c);
        } else {
            (a, c, fc) = (c, d, fd);
            d = a + ratio * (b - a);
            fd = profile(d);
        }
    }
    let refined = solve_linear(0.5 * (a + b));
    let grid = solve_linear(scan[best]);
    match (refined, grid) {
        (Some(r), Some(g)) => Ok(if r.0 <= g.0 { r.1 } else { g.1 }),
        (Some(r), None) => Ok(r.1),
        (None, Some(g)) => Ok(g.1),
        (None, None) => Err(Error::Convergence("exp fit: profile search failed".into())),
    }
}

/// Levenberg–Marquardt-damped Gauss–Newton on the weighted residuals.
fn gauss_newton(model: ModelKind, points: &[Point], mut params: Vec<f64>) -> Result<Vec<f64>> {
    let k = params.len();
    let mut lambda = 1e-3;
    let mut cost = weighted_ss(model, &params, points);
    for _ in 0..MAX_ITERATIONS {
        let mut jtj = vec![vec![0.0; k]; k];
        let mut jtr = vec![0.0; k];
        for p in points {
            let g = model.gradient(&params, p.x);
            let r = p.y - model.eval(&params, p.x);
            for i in 0..k {
                jtr[i] += p.weight * g[i] * r;
                for j in 0..k {
                    jtj[i][j] += p.weight * g[i] * g[j];
                }
            }
        }
        let mut improved = false;
        for _ in 0..60 {
            let mut a = jtj.clone();
            for (i, row) in a.iter_mut().enumerate() {
                row[i] += lambda * jtj[i][i].max(1e-300);
            }
            let Some(step) = solve(a, jtr.clone()) else {
                lambda *= 10.0;
                continue;
            };
            let trial: Vec<f64> = params.iter().zip(&step).map(|(p, s)| p + s).collect();
            let c = weighted_ss(model, &trial, points);
            if c.is_finite() && c <= cost {
                let rel = step
                    .iter()
                    .zip(&trial)
                    .map(|(s, p)| s.abs() / p.abs().max(1e-300))
                    .fold(0.0, f64::max);
                params = trial;
                let flat = cost - c <= 1e-15 * cost.max(f64::MIN_POSITIVE);
                cost = c;
                lambda = (lambda * 0.3).max(1e-12);
                if rel <= TOLERANCE || (flat && rel <= 1e-6) || cost == 0.0 {
                    return Ok(params);
                }
                improved = true;
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            // No downhill step at any damping: already at a minimum.
            return Ok(params);
        }
    }
    Err(Error::Convergence(format!(
        "{model} fit: no convergence in {MAX_ITERATIONS} iterations (params {params:?}, cost {cost:e})"
    )))
}

/// Solves `a·x = b` by partial-pivot elimination; `None` if singular.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    let scale = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() <= 1e-14 * scale {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        let (top, rest) = a.split_at_mut(col + 1);
        let pivot_row = &top[col];
        for (k, row) in rest.iter_mut().enumerate() {
            let f = row[col] / pivot_row[col];
            for (v, p) in row[col..].iter_mut().zip(&pivot_row[col..]) {
                *v -= f * p;
            }
            b[col + 1 + k] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

/// Coefficient of determination of the straight-line fit.
pub fn linear_r_squared(points: &[Point]) -> Result<f64> {
    let f = fit(ModelKind::Linear, points)?;
    let mean = points.iter().map(|p| p.y).sum::<f64>() / points.len() as f64;
    let ss_tot: f64 = points.iter().map(|p| (p.y - mean).powi(2)).sum();
    let ss_res: f64 = points.iter().map(|p| (p.y - f.predict(p.x)).powi(2)).sum();
    Ok(if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot })
}

/// One curve of a finite-size family: `(x, y)` samples at distance `d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub d: usize,
    pub points: Vec<(f64, f64)>,
}

impl Curve {
    pub fn new(d: usize, mut points: Vec<(f64, f64)>) -> Self {
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        Curve { d, points }
    }

    fn range(&self) -> Option<(f64, f64)> {
        Some((self.points.first()?.0, self.points.last()?.0))
    }

    /// Linear interpolation; `None` outside the sampled range.
    pub fn interpolate(&self, x: f64) -> Option<f64> {
        interpolate(&self.points, x)
    }
}

fn interpolate(pts: &[(f64, f64)], x: f64) -> Option<f64> {
    let (first, last) = (pts.first()?, pts.last()?);
    if x < first.0 || x > last.0 {
        return None;
    }
    let i = pts.partition_point(|p| p.0 < x);
    if i < pts.len() && pts[i].0 == x {
        return Some(pts[i].1);
    }
    let (a, b) = (pts[i - 1], pts[i]);
    Some(a.1 + (b.1 - a.1) * (x - a.0) / (b.0 - a.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    pub d_a: usize,
    pub d_b: usize,
    pub x: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossingResult {
    /// Mean crossing over all pairs.
    pub x_c: f64,
    /// Standard deviation across pairs (0 with a single pair).
    pub spread: f64,
    pub pairs: Vec<Crossing>,
}

/// Crossing of one pair: the steepest sign change of `b − a`.
fn pair_crossing(a: &Curve, b: &Curve) -> Option<f64> {
    let (a0, a1) = a.range()?;
    let (b0, b1) = b.range()?;
    let (lo, hi) = (a0.max(b0), a1.min(b1));
    if lo >= hi {
        return None;
    }
    let mut xs: Vec<f64> = a
        .points
        .iter()
        .chain(&b.points)
        .map(|p| p.0)
        .filter(|&x| (lo..=hi).contains(&x))
        .collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let diffs: Vec<(f64, f64)> = xs
        .iter()
        .map(|&x| (x, b.interpolate(x).unwrap() - a.interpolate(x).unwrap()))
        .filter(|&(_, d)| d != 0.0)
        .collect();
    diffs
        .windows(2)
        .filter(|w| (w[0].1 < 0.0) != (w[1].1 < 0.0))
        .map(|w| {
            let ((x0, d0), (x1, d1)) = (w[0], w[1]);
            let root = x0 + (x1 - x0) * d0 / (d0 - d1);
            let slope = (d1 - d0).abs() / (x1 - x0);
            (root, slope)
        })
        .max_by(|p, q| p.1.total_cmp(&q.1))
        .map(|(root, _)| root)
}

/// Mean pairwise crossing of linearly interpolated curves.
pub fn crossing_point(curves: &[Curve]) -> Result<CrossingResult> {
    if curves.len() < 2 {
        return Err(Error::invalid("crossing needs at least two curves"));
    }
    let mut pairs = Vec::new();
    for i in 0..curves.len() {
        for j in i + 1..curves.len() {
            if let Some(x) = pair_crossing(&curves[i], &curves[j]) {
                pairs.push(Crossing {
                    d_a: curves[i].d,
                    d_b: curves[j].d,
                    x,
                });
            }
        }
    }
    if pairs.is_empty() {
        return Err(Error::NoCrossing("no sign change between any pair of curves".into()));
    }
    let xs: Vec<f64> = pairs.iter().map(|c| c.x).collect();
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    let spread = if xs.len() > 1 {
        (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
    } else {
        0.0
    };
    Ok(CrossingResult {
        x_c: mean,
        spread,
        pairs,
    })
}

/// Mean squared deviation of the rescaled curves from each other.
///
/// Every curve is mapped to `u = (x − p_c)·d^{1/ν}`, `v = y·d^{β/ν}`. Each point
/// is compared against the piecewise-linear curve through the merged points of
/// all other distances; points outside that curve's range are skipped.
pub fn collapse_quality(curves: &[Curve], p_c: f64, nu: f64, beta: f64) -> Result<f64> {
    let distinct: std::collections::BTreeSet<usize> = curves.iter().map(|c| c.d).collect();
    if distinct.len() < 3 {
        return Err(Error::invalid(format!(
            "collapse needs at least 3 distances, got {}",
            distinct.len()
        )));
    }
    if nu.is_nan() || nu <= 0.0 {
        return Err(Error::invalid("nu must be positive"));
    }
    let scaled: Vec<(usize, (f64, f64))> = curves
        .iter()
        .flat_map(|c| {
            let d = c.d as f64;
            let (su, sv) = (d.powf(1.0 / nu), d.powf(beta / nu));
            c.points.iter().map(move |&(x, y)| (c.d, ((x - p_c) * su, y * sv)))
        })
        .collect();
    let (mut total, mut count) = (0.0, 0usize);
    for &d in &distinct {
        let mut master: Vec<(f64, f64)> =
            scaled.iter().filter(|(e, _)| *e != d).map(|&(_, p)| p).collect();
        master.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        let mut own: Vec<(f64, f64)> = scaled.iter().filter(|(e, _)| *e == d).map(|&(_, p)| p).collect();
        own.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        for (u, v) in own {
            if let Some(m) = interpolate(&master, u) {
                total += (v - m).powi(2);
                count += 1;
            }
        }
    }
    if count == 0 {
        return Err(Error::invalid("rescaled curves do not overlap"));
    }
    Ok(total / count as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollapseScan {
    pub p_c: f64,
    pub nu: f64,
    pub beta: f64,
    pub score: f64,
    /// Every evaluated `(p_c, ν, score)`.
    pub grid: Vec<(f64, f64, f64)>,
}

/// Minimizes [`collapse_quality`] over a `(p_c, ν)` grid at fixed `β`.
pub fn collapse_scan(curves: &[Curve], p_cs: &[f64], nus: &[f64], beta: f64) -> Result<CollapseScan> {
    if p_cs.is_empty() || nus.is_empty() {
        return Err(Error::invalid("empty scan grid"));
    }
    let cells: Vec<(f64, f64)> = p_cs
        .iter()
        .flat_map(|&p| nus.iter().map(move |&n| (p, n)))
        .collect();
    let grid: Vec<(f64, f64, f64)> = cells
        .par_iter()
        .map(|&(p, n)| collapse_quality(curves, p, n, beta).map(|s| (p, n, s)))
        .collect::<Result<_>>()?;
    let best = grid
        .iter()
        .copied()
        .min_by(|a, b| a.2.total_cmp(&b.2))
        .expect("non-empty grid");
    Ok(CollapseScan {
        p_c: best.0,
        nu: best.1,
        beta,
        score: best.2,
        grid,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaResult {
    /// Fitted exponent `b` of `Δ(d) = a·d^{−b}`.
    pub exponent: f64,
    /// Bootstrap standard deviation of `b`.
    pub exponent_err: f64,
    pub amplitude: f64,
    /// `(d, Δ(d))` for every distance.
    pub deltas: Vec<(usize, f64)>,
}

pub const BOOTSTRAP_RESAMPLES: usize = 200;

fn stddev(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

fn fit_delta(deltas: &[(usize, f64)]) -> Result<FitResult> {
    let pts: Vec<Point> = deltas.iter().map(|&(d, s)| Point::new(d as f64, s)).collect();
    fit(ModelKind::Power, &pts)
}

/// Fits the spread of first-loss samples against distance.
pub fn delta_exponent(samples: &[(usize, Vec<f64>)], seed: u64) -> Result<DeltaResult> {
    if samples.len() < 4 {
        return Err(Error::invalid(format!(
            "delta exponent needs at least 4 distances, got {}",
            samples.len()
        )));
    }
    if let Some((d, s)) = samples.iter().find(|(_, s)| s.len() < 100) {
        return Err(Error::invalid(format!(
            "distance {d} has {} samples, at least 100 required",
            s.len()
        )));
    }
    let deltas: Vec<(usize, f64)> = samples.iter().map(|(d, s)| (*d, stddev(s))).collect();
    let f = fit_delta(&deltas)?;
    let boot: Vec<f64> = (0..BOOTSTRAP_RESAMPLES as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r);
            let resampled: Vec<(usize, f64)> = samples
                .iter()
                .map(|(d, s)| {
                    let pick: Vec<f64> = (0..s.len()).map(|_| s[rng.gen_range(0..s.len())]).collect();
                    (*d, stddev(&pick))
                })
                .collect();
            fit_delta(&resampled).map(|f| f.params[1])
        })
        .collect::<Result<_>>()?;
    Ok(DeltaResult {
        exponent: f.params[1],
        exponent_err: stddev(&boot),
        amplitude: f.params[0],
        deltas,
    })
}
