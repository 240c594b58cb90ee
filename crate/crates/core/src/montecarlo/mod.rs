//! Trial engine for single rounds, multi-round dynamics, lost-edge tracking
//! and first-loss bisection.
//!
//! Every trial owns its [`CodeState`] and a ChaCha8 stream selected by
//! `(master_seed, point, trial)`, where `point` is a stable hash of the
//! distance and round configuration. Trials run on the ambient rayon pool and
//! results are collected in trial order, so output is identical for any
//! number of worker threads.

mod presets;

pub use presets::{
    bisection_table, fraction_table, grid, lifetime_table, run_experiment, single_round_table,
    survival_table, ExperimentOptions, LIFETIME_COLUMNS, PRESETS, SINGLE_ROUND_COLUMNS,
};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layout::{CodeLayout, GraphKind};
use crate::pauli::{Basis, PauliOperator};
use crate::percolation;
use crate::tableau::{CodeState, LogicalStatus};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StabilizerFamilies {
    Plaquettes,
    Stars,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundConfig {
    pub p_x: f64,
    pub p_y: f64,
    pub p_z: f64,
    pub p_s: f64,
    pub families: StabilizerFamilies,
}

impl RoundConfig {
    pub fn new(p_x: f64, p_y: f64, p_z: f64, p_s: f64, families: StabilizerFamilies) -> Result<Self> {
        let c = RoundConfig {
            p_x,
            p_y,
            p_z,
            p_s,
            families,
        };
        c.validate()?;
        Ok(c)
    }

    /// Pauli measurements only.
    pub fn pauli(p_x: f64, p_y: f64, p_z: f64) -> Result<Self> {
        Self::new(p_x, p_y, p_z, 0.0, StabilizerFamilies::Both)
    }

    /// `p_x = p_y = p_z = p_m / 3`.
    pub fn unbiased(p_m: f64, p_s: f64) -> Result<Self> {
        let third = p_m / 3.0;
        Self::new(third, third, third, p_s, StabilizerFamilies::Both)
    }

    /// `(p_x, p_y, p_z) = weights · p_m`.
    pub fn mixed(weights: [f64; 3], p_m: f64) -> Result<Self> {
        Self::pauli(weights[0] * p_m, weights[1] * p_m, weights[2] * p_m)
    }

    pub fn p_m(&self) -> f64 {
        self.p_x + self.p_y + self.p_z
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("p_x", self.p_x), ("p_y", self.p_y), ("p_z", self.p_z), ("p_s", self.p_s)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::invalid(format!("{name} = {v} outside [0, 1]")));
            }
        }
        if self.p_m() > 1.0 + 1e-12 {
            return Err(Error::invalid(format!(
                "p_x + p_y + p_z = {} exceeds 1",
                self.p_m()
            )));
        }
        Ok(())
    }

    /// The single basis measured, if exactly one probability is non-zero.
    pub fn single_basis(&self) -> Option<Basis> {
        match (self.p_x > 0.0, self.p_y > 0.0, self.p_z > 0.0) {
            (true, false, false) => Some(Basis::X),
            (false, true, false) => Some(Basis::Y),
            (false, false, true) => Some(Basis::Z),
            _ => None,
        }
    }

    fn stable_hash(&self) -> u64 {
        let fam = match self.families {
            StabilizerFamilies::Plaquettes => 1,
            StabilizerFamilies::Stars => 2,
            StabilizerFamilies::Both => 3,
        };
        [self.p_x, self.p_y, self.p_z, self.p_s]
            .iter()
            .fold(fam, |h, v| mix(h ^ v.to_bits()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialPlan {
    pub d: usize,
    pub rounds_max: usize,
    pub trials: usize,
    pub master_seed: u64,
}

impl TrialPlan {
    pub fn new(d: usize, rounds_max: usize, trials: usize, master_seed: u64) -> Result<Self> {
        if d < 2 {
            return Err(Error::invalid(format!("distance {d} below 2")));
        }
        if trials == 0 {
            return Err(Error::invalid("at least one trial is required"));
        }
        if rounds_max == 0 {
            return Err(Error::invalid("rounds_max must be at least 1"));
        }
        Ok(TrialPlan {
            d,
            rounds_max,
            trials,
            master_seed,
        })
    }

    /// One-round plan for single-round experiments.
    pub fn single_round(d: usize, trials: usize, master_seed: u64) -> Result<Self> {
        Self::new(d, 1, trials, master_seed)
    }
}

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent stream for one trial.
pub fn trial_rng(master_seed: u64, point: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(mix(mix(master_seed) ^ point));
    rng.set_stream(trial);
    rng
}

fn point_id(tag: u64, d: usize, config: &RoundConfig) -> u64 {
    mix(mix(tag ^ d as u64) ^ config.stable_hash())
}

/// Precomputed operators and initial state for one distance.
#[derive(Debug, Clone)]
pub struct Simulator {
    layout: CodeLayout,
    template: CodeState,
    singles: [Vec<PauliOperator>; 3],
    plaquettes: Vec<PauliOperator>,
    stars: Vec<PauliOperator>,
}

/// What happened in one round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RoundSummary {
    pub pauli_measurements: usize,
    pub stabilizer_measurements: usize,
    pub status_before: LogicalStatus,
    pub status_after: LogicalStatus,
}

impl RoundSummary {
    pub fn status_changed(&self) -> bool {
        self.status_before != self.status_after
    }
}

fn basis_index(b: Basis) -> usize {
    match b {
        Basis::X => 0,
        Basis::Y => 1,
        Basis::Z => 2,
    }
}

impl Simulator {
    pub fn new(d: usize) -> Result<Self> {
        Ok(Self::from_layout(CodeLayout::build(d)?))
    }

    pub fn from_layout(layout: CodeLayout) -> Self {
        let n = layout.n_qubits;
        let single = |b| {
            (0..n)
                .map(|q| PauliOperator::single_qubit(n, q, b).expect("qubit in range"))
                .collect::<Vec<_>>()
        };
        let singles = [single(Basis::X), single(Basis::Y), single(Basis::Z)];
        let plaquettes = (0..layout.plaquettes.len())
            .map(|l| layout.plaquette_operator(l))
            .collect();
        let stars = (0..layout.stars.len())
            .map(|l| layout.star_operator(l))
            .collect();
        let template = CodeState::new(&layout);
        Simulator {
            layout,
            template,
            singles,
            plaquettes,
            stars,
        }
    }

    pub fn layout(&self) -> &CodeLayout {
        &self.layout
    }

    pub fn fresh_state(&self) -> CodeState {
        self.template.clone()
    }

    fn measure(&self, state: &mut CodeState, op: &PauliOperator, rng: &mut ChaCha8Rng) {
        state
            .measure_unchecked(op, || rng.gen::<bool>())
            .expect("layout operators keep the tableau consistent");
    }

    /// Pauli sub-round; flags measured qubits per basis in `measured` if given.
    /// Returns the number of measurements.
    fn pauli_sub_round(
        &self,
        state: &mut CodeState,
        config: &RoundConfig,
        rng: &mut ChaCha8Rng,
        mut measured: Option<&mut [Option<Basis>]>,
        stop_on_loss: bool,
    ) -> usize {
        let p_m = config.p_m();
        if p_m == 0.0 {
            return 0;
        }
        let (cx, cy) = (config.p_x, config.p_x + config.p_y);
        let mut count = 0;
        for q in 0..self.layout.n_qubits {
            let u: f64 = rng.gen();
            let basis = if u < cx {
                Basis::X
            } else if u < cy {
                Basis::Y
            } else if u < p_m {
                Basis::Z
            } else {
                continue;
            };
            if let Some(m) = measured.as_deref_mut() {
                m[q] = Some(basis);
            }
            self.measure(state, &self.singles[basis_index(basis)][q], rng);
            count += 1;
            if stop_on_loss && !state.status().is_alive() {
                break;
            }
        }
        count
    }

    fn stabilizer_sub_round(
        &self,
        state: &mut CodeState,
        config: &RoundConfig,
        rng: &mut ChaCha8Rng,
    ) -> usize {
        if config.p_s == 0.0 {
            return 0;
        }
        let families: [&[PauliOperator]; 2] = match config.families {
            StabilizerFamilies::Plaquettes => [&self.plaquettes, &[]],
            StabilizerFamilies::Stars => [&self.stars, &[]],
            StabilizerFamilies::Both => [&self.plaquettes, &self.stars],
        };
        let mut count = 0;
        for op in families.into_iter().flatten() {
            if config.p_s >= 1.0 || rng.gen::<f64>() < config.p_s {
                self.measure(state, op, rng);
                count += 1;
            }
        }
        count
    }

    /// One round: Pauli sub-round, then stabilizer sub-round.
    pub fn run_round(
        &self,
        state: &mut CodeState,
        config: &RoundConfig,
        rng: &mut ChaCha8Rng,
    ) -> RoundSummary {
        let status_before = state.status();
        let pauli_measurements = self.pauli_sub_round(state, config, rng, None, false);
        let stabilizer_measurements = self.stabilizer_sub_round(state, config, rng);
        RoundSummary {
            pauli_measurements,
            stabilizer_measurements,
            status_before,
            status_after: state.status(),
        }
    }
}

/// Binomial proportion with standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Proportion {
    pub successes: usize,
    pub trials: usize,
}

impl Proportion {
    pub fn value(&self) -> f64 {
        self.successes as f64 / self.trials as f64
    }

    pub fn stderr(&self) -> f64 {
        let p = self.value();
        (p * (1.0 - p) / self.trials as f64).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleRoundEstimate {
    /// Both logicals survive.
    pub alive: Proportion,
    /// `X̄` survives (status neither `XLost` nor `Collapsed`).
    pub x_alive: Proportion,
    /// `Z̄` survives (status neither `ZLost` nor `Collapsed`).
    pub z_alive: Proportion,
    /// Disagreements with the percolation oracle, for single-basis `X` or `Z` configs.
    pub oracle_mismatches: Option<usize>,
}

#[derive(Debug, Clone, Copy)]
struct SingleOutcome {
    status: LogicalStatus,
    mismatch: Option<bool>,
}

/// Fraction of trials in which the logical information survives one Pauli
/// sub-round (`p_s` is ignored).
pub fn single_round_success(plan: &TrialPlan, config: &RoundConfig) -> Result<SingleRoundEstimate> {
    config.validate()?;
    let sim = Simulator::new(plan.d)?;
    Ok(single_round_with(&sim, plan, config))
}

pub(crate) fn single_round_with(
    sim: &Simulator,
    plan: &TrialPlan,
    config: &RoundConfig,
) -> SingleRoundEstimate {
    let point = point_id(1, plan.d, config);
    let oracle_graph = match config.single_basis() {
        Some(Basis::X) => Some(GraphKind::Z),
        Some(Basis::Z) => Some(GraphKind::X),
        _ => None,
    };
    let n = sim.layout.n_qubits;
    let outcomes: Vec<SingleOutcome> = (0..plan.trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(plan.master_seed, point, t);
            let mut state = sim.fresh_state();
            let mut measured = vec![None; n];
            sim.pauli_sub_round(&mut state, config, &mut rng, Some(&mut measured), false);
            let status = state.status();
            let mismatch = oracle_graph.map(|kind| {
                let removed: Vec<bool> = measured.iter().map(Option::is_some).collect();
                let connected = percolation::terminals_connected(sim.layout.graph(kind), &removed);
                let alive = match kind {
                    GraphKind::Z => status.z_alive(),
                    GraphKind::X => status.x_alive(),
                };
                connected != alive
            });
            SingleOutcome { status, mismatch }
        })
        .collect();
    let count = |f: fn(LogicalStatus) -> bool| Proportion {
        successes: outcomes.iter().filter(|o| f(o.status)).count(),
        trials: plan.trials,
    };
    SingleRoundEstimate {
        alive: count(LogicalStatus::is_alive),
        x_alive: count(LogicalStatus::x_alive),
        z_alive: count(LogicalStatus::z_alive),
        oracle_mismatches: oracle_graph
            .map(|_| outcomes.iter().filter(|o| o.mismatch == Some(true)).count()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LossCause {
    XLost,
    ZLost,
    Collapsed,
    /// No loss within the round cap.
    Censored,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LifetimeSample {
    /// Completed rounds before the round in which the status left `Alive`.
    pub rounds_survived: usize,
    pub cause: LossCause,
}

impl LifetimeSample {
    pub fn is_censored(&self) -> bool {
        self.cause == LossCause::Censored
    }

    /// Lifetime counting the fatal round, `None` if censored.
    pub fn tau(&self) -> Option<usize> {
        (!self.is_censored()).then_some(self.rounds_survived + 1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LifetimeEstimate {
    /// Mean lifetime over uncensored samples (NaN if all censored).
    pub tau: f64,
    pub stderr: f64,
    pub censored_fraction: f64,
    /// Mean with censored samples counted as `rounds_max`.
    pub tau_capped: f64,
    pub samples: Vec<LifetimeSample>,
}

/// Runs rounds until the logical information is lost or `rounds_max` is reached.
pub fn lifetime(plan: &TrialPlan, config: &RoundConfig) -> Result<LifetimeEstimate> {
    config.validate()?;
    let sim = Simulator::new(plan.d)?;
    Ok(lifetime_with(&sim, plan, config))
}

pub(crate) fn lifetime_with(sim: &Simulator, plan: &TrialPlan, config: &RoundConfig) -> LifetimeEstimate {
    let point = point_id(2, plan.d, config);
    let samples: Vec<LifetimeSample> = (0..plan.trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(plan.master_seed, point, t);
            let mut state = sim.fresh_state();
            for round in 0..plan.rounds_max {
                sim.pauli_sub_round(&mut state, config, &mut rng, None, true);
                if state.status().is_alive() {
                    sim.stabilizer_sub_round(&mut state, config, &mut rng);
                }
                let cause = match state.status() {
                    LogicalStatus::Alive => continue,
                    LogicalStatus::XLost => LossCause::XLost,
                    LogicalStatus::ZLost => LossCause::ZLost,
                    LogicalStatus::Collapsed => LossCause::Collapsed,
                };
                return LifetimeSample {
                    rounds_survived: round,
                    cause,
                };
            }
            LifetimeSample {
                rounds_survived: plan.rounds_max,
                cause: LossCause::Censored,
            }
        })
        .collect();
    summarize_lifetimes(samples, plan.rounds_max)
}

pub fn summarize_lifetimes(samples: Vec<LifetimeSample>, rounds_max: usize) -> LifetimeEstimate {
    let taus: Vec<f64> = samples.iter().filter_map(|s| s.tau()).map(|t| t as f64).collect();
    let censored = samples.len() - taus.len();
    let censored_fraction = censored as f64 / samples.len() as f64;
    if censored_fraction >= 0.01 {
        log::warn!(
            "{:.1}% of lifetime samples censored at {rounds_max} rounds",
            100.0 * censored_fraction
        );
    }
    let (tau, stderr) = mean_stderr(&taus);
    let capped_sum: f64 = taus.iter().sum::<f64>() + (censored * rounds_max) as f64;
    LifetimeEstimate {
        tau,
        stderr,
        censored_fraction,
        tau_capped: capped_sum / samples.len() as f64,
        samples,
    }
}

/// Mean and standard error of the mean (NaN when empty).
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// When the lost fraction is sampled within each round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FractionSampling {
    /// After the Pauli sub-round, which is where the recursion's `F(t)` lives.
    AfterPauli,
    /// After the stabilizer sub-round.
    AfterRound,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FractionSeries {
    /// `mean_f[t]` is the trial average after round `t + 1`.
    pub mean_f: Vec<f64>,
    /// Trial average of the mean over the trailing window.
    pub stationary: f64,
    pub stderr: f64,
}

/// Fraction of qubits `i` with `±X_i` in the stabilizer group, per round.
///
/// Only `X` measurements with plaquette-only stabilizer rounds are accepted.
pub fn track_fraction(
    plan: &TrialPlan,
    config: &RoundConfig,
    window: usize,
    sampling: FractionSampling,
) -> Result<FractionSeries> {
    config.validate()?;
    if config.p_y != 0.0 || config.p_z != 0.0 {
        return Err(Error::invalid("lost-edge tracking needs p_y = p_z = 0"));
    }
    if config.families != StabilizerFamilies::Plaquettes {
        return Err(Error::invalid("lost-edge tracking needs plaquette-only stabilizer rounds"));
    }
    if window == 0 || window > plan.rounds_max {
        return Err(Error::invalid(format!(
            "window {window} must lie in 1..={}",
            plan.rounds_max
        )));
    }
    let sim = Simulator::new(plan.d)?;
    let n = sim.layout.n_qubits;
    let point = point_id(3, plan.d, config);
    let series: Vec<Vec<f64>> = (0..plan.trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(plan.master_seed, point, t);
            let mut state = sim.fresh_state();
            let fraction = |s: &CodeState| {
                (0..n).filter(|&q| s.contains_single_x(q)).count() as f64 / n as f64
            };
            let mut out = Vec::with_capacity(plan.rounds_max);
            for _ in 0..plan.rounds_max {
                sim.pauli_sub_round(&mut state, config, &mut rng, None, false);
                if sampling == FractionSampling::AfterPauli {
                    out.push(fraction(&state));
                }
                sim.stabilizer_sub_round(&mut state, config, &mut rng);
                if sampling == FractionSampling::AfterRound {
                    out.push(fraction(&state));
                }
            }
            out
        })
        .collect();
    let trials = series.len() as f64;
    let mean_f = (0..plan.rounds_max)
        .map(|r| series.iter().map(|s| s[r]).sum::<f64>() / trials)
        .collect();
    let per_trial: Vec<f64> = series
        .iter()
        .map(|s| s[plan.rounds_max - window..].iter().sum::<f64>() / window as f64)
        .collect();
    let (stationary, stderr) = mean_stderr(&per_trial);
    Ok(FractionSeries {
        mean_f,
        stationary,
        stderr,
    })
}

/// How survival is decided inside the bisection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SurvivalOracle {
    Percolation,
    Tableau,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BisectionSample {
    pub p: f64,
    pub iterations: usize,
}

/// Step-size update of the first-loss search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ZetaRule {
    /// `ζ ← ζ/2` after every probe.
    #[default]
    Halving,
    /// `ζ ← 1.5ζ` after survival, `ζ ← ζ/2` after loss. Often fails to settle.
    Asymmetric,
}

pub const BISECTION_ZETA0: f64 = 0.25;
pub const BISECTION_MAX_ITERATIONS: usize = 200;

/// One first-loss sample: searches the measurement rate at which the logical
/// attacked by `basis` measurements is first lost.
///
/// Qubits are measured in the order of one random permutation, so the
/// measured set at rate `p` is the first `round(p·n)` qubits of it.
pub fn bisect_first_loss(
    sim: &Simulator,
    basis: Basis,
    oracle: SurvivalOracle,
    rule: ZetaRule,
    rng: &mut ChaCha8Rng,
) -> Result<BisectionSample> {
    let kind = match basis {
        Basis::X => GraphKind::Z,
        Basis::Z => GraphKind::X,
        Basis::Y => return Err(Error::invalid("bisection is defined for X or Z measurements")),
    };
    let layout = &sim.layout;
    let n = layout.n_qubits;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let survives = |m: usize| -> bool {
        match oracle {
            SurvivalOracle::Percolation => {
                let mut removed = vec![false; n];
                for &q in &order[..m] {
                    removed[q] = true;
                }
                percolation::terminals_connected(layout.graph(kind), &removed)
            }
            SurvivalOracle::Tableau => {
                let mut state = sim.fresh_state();
                let ops = &sim.singles[basis_index(basis)];
                for &q in &order[..m] {
                    state
                        .measure_unchecked(&ops[q], || false)
                        .expect("layout operators keep the tableau consistent");
                }
                match kind {
                    GraphKind::Z => state.status().z_alive(),
                    GraphKind::X => state.status().x_alive(),
                }
            }
        }
    };
    let count = |p: f64| ((p * n as f64).round() as usize).min(n);
    let (mut p, mut zeta) = (0.5, BISECTION_ZETA0);
    let mut measured = count(p);
    for iteration in 1..=BISECTION_MAX_ITERATIONS {
        let alive = survives(measured);
        p += if alive { zeta } else { -zeta };
        zeta *= match (rule, alive) {
            (ZetaRule::Asymmetric, true) => 1.5,
            _ => 0.5,
        };
        p = p.clamp(0.0, 1.0);
        let next = count(p);
        if next == measured {
            return Ok(BisectionSample {
                p,
                iterations: iteration,
            });
        }
        measured = next;
    }
    Err(Error::NonTermination {
        iterations: BISECTION_MAX_ITERATIONS,
        p,
        zeta,
    })
}

/// `samples` independent first-loss rates at distance `d`.
pub fn bisection_samples(
    d: usize,
    basis: Basis,
    samples: usize,
    master_seed: u64,
    oracle: SurvivalOracle,
    rule: ZetaRule,
) -> Result<Vec<BisectionSample>> {
    let sim = Simulator::new(d)?;
    let point = mix(mix(4 ^ d as u64) ^ basis_index(basis) as u64);
    (0..samples as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(master_seed, point, t);
            bisect_first_loss(&sim, basis, oracle, rule, &mut rng)
        })
        .collect()
}
