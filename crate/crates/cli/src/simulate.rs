//! Simulation subcommands.

use std::path::Path;

use anyhow::Context;
use clap::{Args, ValueEnum};
use serde::Serialize;
use surfperc::montecarlo::{
    self, bisection_samples, fraction_table, lifetime_table, single_round_table, survival_table,
    ExperimentOptions, RoundConfig, StabilizerFamilies, SurvivalOracle, ZetaRule, PRESETS,
};
use surfperc::table::Table;
use surfperc::{Basis, CodeLayout};

use crate::args::{parse_distances, usage, Observable, SimArgs};
use crate::output::Run;

/// Contents of `--config`.
#[derive(Debug, Default, Clone)]
pub struct ConfigFile {
    pub sim: SimArgs,
    pub observable: Option<Observable>,
    pub window: Option<usize>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn parse(text: &str) -> anyhow::Result<Self> {
        let mut map: serde_json::Map<String, serde_json::Value> =
            serde_json::from_str(text).map_err(|e| usage(format!("config is not a JSON object: {e}")))?;
        let observable = map
            .remove("observable")
            .map(serde_json::from_value)
            .transpose()
            .map_err(|e| usage(format!("config key observable: {e}")))?;
        let window = map
            .remove("window")
            .map(serde_json::from_value)
            .transpose()
            .map_err(|e| usage(format!("config key window: {e}")))?;
        let sim = serde_json::from_value(serde_json::Value::Object(map))
            .map_err(|e| usage(format!("config: {e}")))?;
        Ok(ConfigFile { sim, observable, window })
    }
}

#[derive(Args, Debug)]
pub struct SingleRoundArgs {
    #[command(flatten)]
    pub sim: SimArgs,
}

#[derive(Args, Debug)]
pub struct DynamicsArgs {
    #[command(flatten)]
    pub sim: SimArgs,
    /// What to record per point [default: lifetime].
    #[arg(long, value_enum)]
    pub observable: Option<Observable>,
    /// Trailing rounds averaged for the stationary fraction [default: half of --max-rounds].
    #[arg(long)]
    pub window: Option<usize>,
}

#[derive(Debug, Serialize)]
struct Resolved<'a> {
    #[serde(flatten)]
    sim: &'a SimArgs,
    #[serde(skip_serializing_if = "Option::is_none")]
    observable: Option<Observable>,
    #[serde(skip_serializing_if = "Option::is_none")]
    window: Option<usize>,
}

fn merged(flags: SimArgs, file: &Option<ConfigFile>) -> SimArgs {
    match file {
        Some(f) => flags.or(f.sim.clone()),
        None => flags,
    }
}

fn run_preset(name: &str, sim: &SimArgs, out: Option<&Path>) -> anyhow::Result<()> {
    let opts = ExperimentOptions {
        seed: sim.seed(),
        trials: sim.trials,
        distances: sim.d.as_deref().map(parse_distances).transpose()?,
        rounds_max: sim.max_rounds,
    };
    let table = montecarlo::run_experiment(name, &opts)?;
    let distances = distances_in(&table);
    Run::start(&format!("experiment {name}"), Some(opts.seed), &opts)?
        .with_distances(&distances)
        .write_table(&table, out)
}

fn distances_in(table: &Table) -> Vec<usize> {
    let mut ds: Vec<usize> = table
        .column("d")
        .map(|c| c.into_iter().map(|d| d as usize).collect())
        .unwrap_or_default();
    ds.sort_unstable();
    ds.dedup();
    ds
}

pub fn single_round(a: SingleRoundArgs, file: Option<ConfigFile>, out: Option<&Path>) -> anyhow::Result<()> {
    let sim = merged(a.sim, &file);
    if let Some(p) = &sim.preset {
        return run_preset(p, &sim, out);
    }
    let distances = sim.distances()?;
    let configs = sim.round_configs(false)?;
    let table = single_round_table(&distances, &configs, sim.trials(), sim.seed())?;
    Run::start("single-round", Some(sim.seed()), &sim)?
        .with_distances(&distances)
        .write_table(&table, out)
}

pub fn dynamics(a: DynamicsArgs, file: Option<ConfigFile>, out: Option<&Path>) -> anyhow::Result<()> {
    let observable = a
        .observable
        .or(file.as_ref().and_then(|f| f.observable))
        .unwrap_or(Observable::Lifetime);
    let window = a.window.or(file.as_ref().and_then(|f| f.window));
    let sim = merged(a.sim, &file);
    if let Some(p) = &sim.preset {
        return run_preset(p, &sim, out);
    }
    let distances = sim.distances()?;
    let configs = sim.round_configs(true)?;
    let (trials, seed) = (sim.trials(), sim.seed());
    let table = match observable {
        Observable::Lifetime => lifetime_table(&distances, &configs, trials, sim.max_rounds(), seed)?,
        Observable::Survival => {
            let rounds = sim
                .max_rounds
                .ok_or_else(|| usage("--observable survival needs --max-rounds"))?;
            survival_table(&distances, &configs, rounds, trials, seed)?
        }
        Observable::Fraction => fraction(&distances, &configs, &sim, window)?,
    };
    let resolved = Resolved {
        sim: &sim,
        observable: Some(observable),
        window,
    };
    Run::start("dynamics", Some(seed), &resolved)?
        .with_distances(&distances)
        .write_table(&table, out)
}

fn fraction(distances: &[usize], configs: &[RoundConfig], sim: &SimArgs, window: Option<usize>) -> anyhow::Result<Table> {
    let ps = configs[0].p_s;
    if configs.iter().any(|c| c.p_s != ps) {
        return Err(usage("--observable fraction takes a single p_s"));
    }
    if configs
        .iter()
        .any(|c| c.p_y != 0.0 || c.p_z != 0.0 || c.families != StabilizerFamilies::Plaquettes)
    {
        return Err(usage(
            "--observable fraction needs X measurements only and --families plaquettes",
        ));
    }
    let rounds = sim.max_rounds.unwrap_or(40);
    let window = window.unwrap_or(rounds / 2).max(1);
    let p_xs: Vec<f64> = configs.iter().map(|c| c.p_x).collect();
    Ok(fraction_table(distances, &p_xs, ps, sim.trials(), rounds, window, sim.seed())?)
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BasisArg {
    X,
    Z,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OracleArg {
    Percolation,
    Tableau,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ZetaArg {
    /// Halve the step after every probe.
    Halving,
    /// Grow the step by 1.5 after survival, halve after loss.
    Asymmetric,
}

#[derive(Args, Debug, Serialize)]
pub struct BisectArgs {
    /// Code distances: list or `start:stop:step`.
    #[arg(long)]
    pub d: String,
    /// Samples per distance.
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    /// Measurement basis.
    #[arg(long, value_enum, default_value = "z")]
    pub basis: BasisArg,
    /// How survival is decided for each probe.
    #[arg(long, value_enum, default_value = "percolation")]
    pub oracle: OracleArg,
    /// Step-size rule.
    #[arg(long, value_enum, default_value = "halving")]
    pub zeta: ZetaArg,
    /// Master seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

pub fn bisect(a: BisectArgs, out: Option<&Path>) -> anyhow::Result<()> {
    let distances = parse_distances(&a.d)?;
    let basis = match a.basis {
        BasisArg::X => Basis::X,
        BasisArg::Z => Basis::Z,
    };
    let oracle = match a.oracle {
        OracleArg::Percolation => SurvivalOracle::Percolation,
        OracleArg::Tableau => SurvivalOracle::Tableau,
    };
    let rule = match a.zeta {
        ZetaArg::Halving => ZetaRule::Halving,
        ZetaArg::Asymmetric => ZetaRule::Asymmetric,
    };
    let mut table = Table::new(["d", "sample", "p", "iterations"]);
    for &d in &distances {
        for (i, s) in bisection_samples(d, basis, a.samples, a.seed, oracle, rule)?
            .iter()
            .enumerate()
        {
            table.push(vec![d as f64, i as f64, s.p, s.iterations as f64]);
        }
    }
    Run::start("bisect", Some(a.seed), &a)?
        .with_distances(&distances)
        .write_table(&table, out)
}

#[derive(Args, Debug)]
pub struct ExperimentArgs {
    /// Preset name.
    pub name: Option<String>,
    /// Preset name (alternative to the positional argument).
    #[arg(long, conflicts_with = "name")]
    pub preset: Option<String>,
    /// List the presets and exit.
    #[arg(long)]
    pub list: bool,
    /// Override the preset's distances.
    #[arg(long)]
    pub d: Option<String>,
    /// Override the preset's trials (samples for bisection presets).
    #[arg(long)]
    pub trials: Option<usize>,
    /// Override the preset's round cap.
    #[arg(long)]
    pub max_rounds: Option<usize>,
    /// Master seed [default: 0].
    #[arg(long)]
    pub seed: Option<u64>,
}

pub fn experiment(a: ExperimentArgs, file: Option<ConfigFile>, out: Option<&Path>) -> anyhow::Result<()> {
    if a.list {
        for p in PRESETS {
            println!("{p}");
        }
        return Ok(());
    }
    let flags = SimArgs {
        d: a.d,
        trials: a.trials,
        max_rounds: a.max_rounds,
        seed: a.seed,
        preset: a.name.or(a.preset),
        ..Default::default()
    };
    let sim = merged(flags, &file);
    let name = sim
        .preset
        .clone()
        .ok_or_else(|| usage(format!("name a preset: {}", PRESETS.join(", "))))?;
    run_preset(&name, &sim, out)
}

#[derive(Args, Debug)]
pub struct LayoutArgs {
    /// Code distance.
    #[arg(long)]
    pub d: usize,
}

pub fn layout(a: LayoutArgs, out: Option<&Path>) -> anyhow::Result<()> {
    let layout = CodeLayout::build(a.d)?;
    let value: serde_json::Value = serde_json::from_str(&layout.to_json())?;
    Run::start("layout", None, serde_json::json!({ "d": a.d }))?
        .with_distances(&[a.d])
        .write_json(&value, out)
}
