//! Named sweeps and the table generators they share with the CLI.

use serde::{Deserialize, Serialize};

use super::{
    bisection_samples, lifetime_with, single_round_with, track_fraction, FractionSampling,
    RoundConfig, Simulator, StabilizerFamilies, SurvivalOracle, TrialPlan, ZetaRule,
};
use crate::analytics;
use crate::error::{Error, Result};
use crate::pauli::Basis;
use crate::percolation::{self, ThresholdMode, DEFAULT_ALPHAS};
use crate::table::Table;

pub const PRESETS: &[&str] = &[
    "fig2b", "fig4c", "fig5", "fig6a", "fig6b", "fig6d", "summary_e", "appB3", "appC", "appD",
];

/// Overrides applied on top of a preset's defaults.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ExperimentOptions {
    pub seed: u64,
    pub trials: Option<usize>,
    pub distances: Option<Vec<usize>>,
    pub rounds_max: Option<usize>,
}

/// Inclusive grid `start, start + step, ..., stop`, snapped to 1e-12.
pub fn grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if step.is_nan() || step <= 0.0 || stop < start || !start.is_finite() || !stop.is_finite() {
        return Err(Error::invalid(format!("bad grid {start}:{stop}:{step}")));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    Ok((0..=n)
        .map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12)
        .collect())
}

pub const SINGLE_ROUND_COLUMNS: &[&str] = &[
    "d", "p_x", "p_y", "p_z", "p_m", "R", "stderr", "R_X", "stderr_X", "R_Z", "stderr_Z",
];

pub const LIFETIME_COLUMNS: &[&str] = &[
    "d", "p_x", "p_y", "p_z", "p_s", "tau", "stderr", "censored_frac", "tau_capped",
];

/// One row per `(d, config)` with single-round success rates.
pub fn single_round_table(
    distances: &[usize],
    configs: &[RoundConfig],
    trials: usize,
    seed: u64,
) -> Result<Table> {
    let mut t = Table::new(SINGLE_ROUND_COLUMNS.iter().copied());
    for &d in distances {
        let sim = Simulator::new(d)?;
        let plan = TrialPlan::single_round(d, trials, seed)?;
        for c in configs {
            c.validate()?;
            let e = single_round_with(&sim, &plan, c);
            t.push(vec![
                d as f64,
                c.p_x,
                c.p_y,
                c.p_z,
                c.p_m(),
                e.alive.value(),
                e.alive.stderr(),
                e.x_alive.value(),
                e.x_alive.stderr(),
                e.z_alive.value(),
                e.z_alive.stderr(),
            ]);
        }
    }
    Ok(t)
}

/// One row per `(d, config)` with the mean lifetime.
pub fn lifetime_table(
    distances: &[usize],
    configs: &[RoundConfig],
    trials: usize,
    rounds_max: usize,
    seed: u64,
) -> Result<Table> {
    let mut t = Table::new(LIFETIME_COLUMNS.iter().copied());
    for &d in distances {
        let sim = Simulator::new(d)?;
        let plan = TrialPlan::new(d, rounds_max, trials, seed)?;
        for c in configs {
            c.validate()?;
            let e = lifetime_with(&sim, &plan, c);
            t.push(vec![
                d as f64,
                c.p_x,
                c.p_y,
                c.p_z,
                c.p_s,
                e.tau,
                e.stderr,
                e.censored_fraction,
                e.tau_capped,
            ]);
        }
    }
    Ok(t)
}

/// Fraction of trials still alive after exactly `rounds` rounds.
pub fn survival_table(
    distances: &[usize],
    configs: &[RoundConfig],
    rounds: usize,
    trials: usize,
    seed: u64,
) -> Result<Table> {
    let mut t = Table::new(["d", "p_x", "p_y", "p_z", "p_s", "t", "R", "stderr"]);
    for &d in distances {
        let sim = Simulator::new(d)?;
        let plan = TrialPlan::new(d, rounds, trials, seed)?;
        for c in configs {
            c.validate()?;
            let e = lifetime_with(&sim, &plan, c);
            let alive = super::Proportion {
                successes: e.samples.iter().filter(|s| s.is_censored()).count(),
                trials,
            };
            t.push(vec![
                d as f64,
                c.p_x,
                c.p_y,
                c.p_z,
                c.p_s,
                rounds as f64,
                alive.value(),
                alive.stderr(),
            ]);
        }
    }
    Ok(t)
}

/// Stationary lost fraction against the recursion with `p̃_s = p_s`.
pub fn fraction_table(
    distances: &[usize],
    p_xs: &[f64],
    p_s: f64,
    trials: usize,
    rounds: usize,
    window: usize,
    seed: u64,
) -> Result<Table> {
    let mut t = Table::new([
        "d", "p_x", "p_s", "F_stationary", "stderr", "F_recursion", "rel_err",
    ]);
    for &d in distances {
        let plan = TrialPlan::new(d, rounds, trials, seed)?;
        for &p_x in p_xs {
            let c = RoundConfig::new(p_x, 0.0, 0.0, p_s, StabilizerFamilies::Plaquettes)?;
            let f = track_fraction(&plan, &c, window, FractionSampling::AfterPauli)?;
            let rec = percolation::stationary_fraction(p_x, p_s)?;
            let rel = if rec > 0.0 {
                (f.stationary - rec).abs() / rec
            } else {
                f.stationary.abs()
            };
            t.push(vec![d as f64, p_x, p_s, f.stationary, f.stderr, rec, rel]);
        }
    }
    Ok(t)
}

/// Raw first-loss samples, one row per sample.
pub fn bisection_table(distances: &[usize], samples: usize, seed: u64) -> Result<Table> {
    let mut t = Table::new(["d", "sample", "p"]);
    for &d in distances {
        let s = bisection_samples(
            d,
            Basis::Z,
            samples,
            seed,
            SurvivalOracle::Percolation,
            ZetaRule::Halving,
        )?;
        for (i, b) in s.iter().enumerate() {
            t.push(vec![d as f64, i as f64, b.p]);
        }
    }
    Ok(t)
}

fn odd_range(a: usize, b: usize) -> Vec<usize> {
    (a..=b).step_by(2).collect()
}

/// Runs preset `name` and returns its table.
pub fn run_experiment(name: &str, opts: &ExperimentOptions) -> Result<Table> {
    let ds = |default: Vec<usize>| opts.distances.clone().unwrap_or(default);
    let trials = |default: usize| opts.trials.unwrap_or(default);
    let rounds = |default: usize| opts.rounds_max.unwrap_or(default);
    let seed = opts.seed;
    match name {
        "fig2b" => {
            let configs = grid(0.0, 1.0, 0.02)?
                .into_iter()
                .map(|p| RoundConfig::pauli(0.0, 0.0, p))
                .collect::<Result<Vec<_>>>()?;
            single_round_table(&ds(vec![3, 5, 7]), &configs, trials(10_000), seed)
        }
        "fig4c" => {
            let configs = grid(0.0, 1.0, 0.05)?
                .into_iter()
                .map(|p| RoundConfig::pauli(0.0, p, 0.0))
                .collect::<Result<Vec<_>>>()?;
            let mut t = single_round_table(&ds(vec![2, 3, 5]), &configs, trials(10_000), seed)?;
            let (di, pi) = (0, 2);
            t.columns.push("R_analytic".into());
            for row in &mut t.rows {
                let r = analytics::y_success_probability(row[di] as usize, row[pi])?;
                row.push(r);
            }
            Ok(t)
        }
        "fig5" => {
            let configs = grid(0.0, 1.0, 0.05)?
                .into_iter()
                .map(|p| RoundConfig::mixed([0.72, 0.10, 0.18], p))
                .collect::<Result<Vec<_>>>()?;
            single_round_table(&ds(odd_range(3, 9)), &configs, trials(10_000), seed)
        }
        "fig6a" => {
            let mut t = Table::new(["p_s", "p_s_eff", "p_x_c_ansatz", "p_x_c_meanfield"]);
            let ansatz = ThresholdMode::Ansatz(DEFAULT_ALPHAS.to_vec());
            for p_s in grid(0.0, 1.0, 0.05)? {
                let eff = percolation::effective_ps(
                    &percolation::EffectiveModelParams::with_default_alphas(p_s)?,
                );
                t.push(vec![
                    p_s,
                    eff,
                    percolation::threshold_x(p_s, &ansatz)?,
                    percolation::threshold_x(p_s, &ThresholdMode::MeanField)?,
                ]);
            }
            Ok(t)
        }
        "fig6b" => {
            let configs = grid(0.10, 0.24, 0.02)?
                .into_iter()
                .map(|p| RoundConfig::new(p, 0.0, 0.0, 0.4, StabilizerFamilies::Plaquettes))
                .collect::<Result<Vec<_>>>()?;
            lifetime_table(&ds(odd_range(3, 13)), &configs, trials(5_000), rounds(100_000), seed)
        }
        "fig6d" => {
            let configs = grid(0.20, 0.60, 0.02)?
                .into_iter()
                .map(|p| RoundConfig::new(p, 0.0, 0.0, 0.75, StabilizerFamilies::Plaquettes))
                .collect::<Result<Vec<_>>>()?;
            survival_table(&ds(odd_range(3, 13)), &configs, rounds(3), trials(5_000), seed)
        }
        "summary_e" => {
            let configs = [0.0, 0.25, 0.5, 0.75, 1.0]
                .into_iter()
                .map(|ps| RoundConfig::unbiased(0.95, ps))
                .collect::<Result<Vec<_>>>()?;
            lifetime_table(&ds(odd_range(3, 13)), &configs, trials(10_000), rounds(100_000), seed)
        }
        "appB3" => {
            let configs = grid(0.5, 1.0, 0.05)?
                .into_iter()
                .map(|p| RoundConfig::new(0.0, p, 0.0, 0.1, StabilizerFamilies::Both))
                .collect::<Result<Vec<_>>>()?;
            lifetime_table(&ds(odd_range(3, 9)), &configs, trials(1_000), rounds(11), seed)
        }
        "appC" => fraction_table(
            &ds(vec![5, 7, 9]),
            &grid(0.01, 0.30, 0.01)?,
            0.9,
            trials(1_000),
            rounds(40),
            20,
            seed,
        ),
        "appD" => bisection_table(&ds((8..=24).step_by(4).collect()), trials(1_000), seed),
        other => Err(Error::UnknownPreset(other.to_string())),
    }
}
