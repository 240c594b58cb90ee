//! Flag types shared by the simulation subcommands and their parsers.

use std::fmt;

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use surfperc::montecarlo::{grid, RoundConfig, StabilizerFamilies};

/// Bad user input; maps to exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Families {
    Plaquettes,
    Stars,
    Both,
}

impl From<Families> for StabilizerFamilies {
    fn from(f: Families) -> Self {
        match f {
            Families::Plaquettes => StabilizerFamilies::Plaquettes,
            Families::Stars => StabilizerFamilies::Stars,
            Families::Both => StabilizerFamilies::Both,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Observable {
    /// Mean rounds until the logical information is lost.
    Lifetime,
    /// Fraction of trials still alive after `--max-rounds` rounds.
    Survival,
    /// Stationary lost-edge fraction against the recursion (X only, plaquettes only).
    Fraction,
}

/// Physical and sampling parameters. Every field may also come from `--config`.
#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimArgs {
    /// Code distances: a list `3,5,7`, a range `start:stop:step`, or a mix of both.
    #[arg(long)]
    pub d: Option<String>,
    /// X-measurement probability per qubit.
    #[arg(long)]
    pub px: Option<f64>,
    /// Y-measurement probability per qubit.
    #[arg(long)]
    pub py: Option<f64>,
    /// Z-measurement probability per qubit.
    #[arg(long)]
    pub pz: Option<f64>,
    /// Sweep one axis: `AXIS=start:stop:step` or `AXIS=v1,v2`, AXIS in px, py, pz, pm, ps.
    #[arg(long)]
    pub sweep: Option<String>,
    /// Basis weights `wx,wy,wz` for a `pm` sweep: (p_x, p_y, p_z) = weights · p_m.
    #[arg(long)]
    pub mix: Option<String>,
    /// Unbiased measurements, p_x = p_y = p_z = P_M / 3.
    #[arg(long, value_name = "P_M")]
    pub unbiased: Option<f64>,
    /// Stabilizer-measurement probabilities (list or range) for the dynamics.
    #[arg(long)]
    pub ps: Option<String>,
    /// Stabilizer families measured in each stabilizer sub-round [default: both].
    #[arg(long, value_enum)]
    pub families: Option<Families>,
    /// Round cap for the dynamics [default: 100000].
    #[arg(long)]
    pub max_rounds: Option<usize>,
    /// Trials per parameter point [default: 1000].
    #[arg(long)]
    pub trials: Option<usize>,
    /// Master seed [default: 0].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Run a named preset instead; `experiment --list` shows them.
    #[arg(long)]
    pub preset: Option<String>,
}

impl SimArgs {
    /// Fills unset fields from `other`.
    pub fn or(self, other: SimArgs) -> SimArgs {
        SimArgs {
            d: self.d.or(other.d),
            px: self.px.or(other.px),
            py: self.py.or(other.py),
            pz: self.pz.or(other.pz),
            sweep: self.sweep.or(other.sweep),
            mix: self.mix.or(other.mix),
            unbiased: self.unbiased.or(other.unbiased),
            ps: self.ps.or(other.ps),
            families: self.families.or(other.families),
            max_rounds: self.max_rounds.or(other.max_rounds),
            trials: self.trials.or(other.trials),
            seed: self.seed.or(other.seed),
            preset: self.preset.or(other.preset),
        }
    }

    pub fn distances(&self) -> anyhow::Result<Vec<usize>> {
        let s = self.d.as_deref().ok_or_else(|| usage("--d is required"))?;
        parse_distances(s)
    }

    pub fn trials(&self) -> usize {
        self.trials.unwrap_or(1000)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn max_rounds(&self) -> usize {
        self.max_rounds.unwrap_or(100_000)
    }

    /// Expands the flags into one config per sweep point and `p_s` value.
    pub fn round_configs(&self, dynamics: bool) -> anyhow::Result<Vec<RoundConfig>> {
        let families: StabilizerFamilies = self.families.unwrap_or(Families::Both).into();
        let sweep = self.sweep.as_deref().map(parse_sweep).transpose()?;
        if !dynamics {
            if self.ps.is_some() || matches!(sweep, Some((Axis::Ps, _))) {
                return Err(usage("p_s has no effect on a single round; use `dynamics`"));
            }
            if self.families.is_some() {
                return Err(usage("--families has no effect on a single round; use `dynamics`"));
            }
        }
        let explicit = self.px.is_some() || self.py.is_some() || self.pz.is_some();
        if self.unbiased.is_some() && (explicit || self.mix.is_some()) {
            return Err(usage("--unbiased cannot be combined with --px/--py/--pz or --mix"));
        }
        let weights = match &self.mix {
            Some(m) => {
                let w = parse_floats(m)?;
                if w.len() != 3 {
                    return Err(usage(format!("--mix needs three weights, got {m:?}")));
                }
                Some([w[0], w[1], w[2]])
            }
            None => None,
        };
        let fixed = (self.px.unwrap_or(0.0), self.py.unwrap_or(0.0), self.pz.unwrap_or(0.0));
        let base = |axis: Option<Axis>, v: f64| -> anyhow::Result<(f64, f64, f64)> {
            Ok(match axis {
                Some(Axis::Pm) => {
                    if explicit {
                        return Err(usage("a pm sweep takes --mix weights, not --px/--py/--pz"));
                    }
                    let w = weights.unwrap_or([1.0 / 3.0; 3]);
                    (w[0] * v, w[1] * v, w[2] * v)
                }
                Some(axis @ (Axis::Px | Axis::Py | Axis::Pz)) => {
                    if weights.is_some() {
                        return Err(usage("--mix only applies to a pm sweep"));
                    }
                    let (mut x, mut y, mut z) = fixed;
                    match axis {
                        Axis::Px => x = v,
                        Axis::Py => y = v,
                        _ => z = v,
                    }
                    (x, y, z)
                }
                _ => {
                    if weights.is_some() {
                        return Err(usage("--mix needs --sweep pm=..."));
                    }
                    match self.unbiased {
                        Some(pm) => (pm / 3.0, pm / 3.0, pm / 3.0),
                        None => fixed,
                    }
                }
            })
        };
        let ps_list = match (&sweep, &self.ps) {
            (Some((Axis::Ps, _)), Some(_)) => return Err(usage("--ps conflicts with --sweep ps=...")),
            (Some((Axis::Ps, v)), None) => v.clone(),
            (_, Some(s)) => parse_floats(s)?,
            (_, None) => vec![0.0],
        };
        let points: Vec<(f64, f64, f64)> = match &sweep {
            Some((Axis::Ps, _)) | None => vec![base(None, 0.0)?],
            Some((axis, values)) => values
                .iter()
                .map(|&v| base(Some(*axis), v))
                .collect::<anyhow::Result<_>>()?,
        };
        let mut configs = Vec::with_capacity(points.len() * ps_list.len());
        for &(x, y, z) in &points {
            for &ps in &ps_list {
                configs.push(RoundConfig::new(x, y, z, ps, families)?);
            }
        }
        Ok(configs)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Px,
    Py,
    Pz,
    Pm,
    Ps,
}

impl std::str::FromStr for Axis {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> anyhow::Result<Self> {
        Ok(match s.trim().to_ascii_lowercase().replace('_', "").as_str() {
            "px" => Axis::Px,
            "py" => Axis::Py,
            "pz" => Axis::Pz,
            "pm" => Axis::Pm,
            "ps" => Axis::Ps,
            other => return Err(usage(format!("unknown sweep axis {other:?} (px, py, pz, pm, ps)"))),
        })
    }
}

pub fn parse_sweep(s: &str) -> anyhow::Result<(Axis, Vec<f64>)> {
    let (axis, values) = s
        .split_once('=')
        .ok_or_else(|| usage(format!("sweep {s:?} must look like AXIS=start:stop:step")))?;
    Ok((axis.parse()?, parse_floats(values)?))
}

/// `a,b,c`, `start:stop:step`, or a comma list mixing both.
pub fn parse_floats(s: &str) -> anyhow::Result<Vec<f64>> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let nums: Vec<&str> = part.split(':').collect();
        let num = |t: &str| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| usage(format!("{t:?} is not a number")))
        };
        match nums.as_slice() {
            [v] => out.push(num(v)?),
            [a, b, c] => out.extend(grid(num(a)?, num(b)?, num(c)?).map_err(|e| usage(e.to_string()))?),
            _ => return Err(usage(format!("{part:?} is neither a value nor start:stop:step"))),
        }
    }
    if out.is_empty() {
        return Err(usage(format!("empty list {s:?}")));
    }
    Ok(out)
}

pub fn parse_distances(s: &str) -> anyhow::Result<Vec<usize>> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let num = |t: &str| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| usage(format!("{t:?} is not a distance")))
        };
        let nums: Vec<&str> = part.split(':').collect();
        match nums.as_slice() {
            [v] => out.push(num(v)?),
            [a, b] => out.extend(num(a)?..=num(b)?),
            [a, b, c] => {
                let step = num(c)?;
                if step == 0 {
                    return Err(usage("distance step must be positive"));
                }
                out.extend((num(a)?..=num(b)?).step_by(step));
            }
            _ => return Err(usage(format!("{part:?} is not a distance list"))),
        }
    }
    if out.is_empty() {
        return Err(usage(format!("no distances in {s:?}")));
    }
    if let Some(&bad) = out.iter().find(|&&d| d < 2) {
        return Err(usage(format!("distance {bad} is below the minimum of 2")));
    }
    Ok(out)
}
