//! Bond-percolation connectivity and the effective lost-edge model.
//!
//! In a single round of `X` measurements every measured qubit deletes its edge
//! from the Z graph, and `Z̄` survives iff the TOP and BOTTOM terminals stay
//! connected. The same holds for `X̄`, `Z` measurements and the X graph.
//!
//! Under repeated rounds, lost edges are restored by stabilizer measurements
//! with an effective probability `p̃_s`, giving the recursion
//! `F ← F + F·(p_x·p̃_s − p_x − p̃_s) + p_x` for the lost fraction `F`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layout::{CodeLayout, ConnectivityGraph, GraphKind};

/// Union-find with path compression and union by size.
#[derive(Debug, Clone)]
pub struct DisjointSets {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl DisjointSets {
    pub fn new(n: usize) -> Self {
        DisjointSets {
            parent: (0..n as u32).collect(),
            size: vec![1; n],
        }
    }

    pub fn find(&mut self, mut v: usize) -> usize {
        let mut root = v;
        while self.parent[root] as usize != root {
            root = self.parent[root] as usize;
        }
        while self.parent[v] as usize != root {
            let next = self.parent[v] as usize;
            self.parent[v] = root as u32;
            v = next;
        }
        root
    }

    /// Merges the sets of `a` and `b`; returns false if already joined.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra as u32;
        self.size[ra] += self.size[rb];
        true
    }

    pub fn connected(&mut self, a: usize, b: usize) -> bool {
        self.find(a) == self.find(b)
    }
}

/// Whether the terminals of `graph` stay connected when the edges flagged in
/// `removed` (indexed by qubit) are deleted.
pub fn terminals_connected(graph: &ConnectivityGraph, removed: &[bool]) -> bool {
    let mut sets = DisjointSets::new(graph.n_vertices);
    for (q, &(a, b)) in graph.edges.iter().enumerate() {
        if !removed.get(q).copied().unwrap_or(false) {
            sets.union(a, b);
        }
    }
    let (s, t) = graph.terminals;
    sets.connected(s, t)
}

/// Whether the logical tracked by the `kind` graph survives deletion of the
/// qubits in `removed`. Indices outside the layout are an error.
pub fn survives_cut(layout: &CodeLayout, kind: GraphKind, removed: &[usize]) -> Result<bool> {
    let mut mask = vec![false; layout.n_qubits];
    for &q in removed {
        *mask.get_mut(q).ok_or_else(|| {
            Error::invalid(format!("qubit {q} outside layout of {} qubits", layout.n_qubits))
        })? = true;
    }
    Ok(terminals_connected(layout.graph(kind), &mask))
}

fn check_probability(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} = {v} outside [0, 1]")))
    }
}

/// One step of the lost-edge recursion.
pub fn effective_fraction_step(f_prev: f64, p_x: f64, p_s_eff: f64) -> Result<f64> {
    check_probability("F", f_prev)?;
    check_probability("p_x", p_x)?;
    check_probability("effective p_s", p_s_eff)?;
    let f = f_prev + f_prev * (p_x * p_s_eff - p_x - p_s_eff) + p_x;
    Ok(clamp_unit(f))
}

fn clamp_unit(f: f64) -> f64 {
    if (-1e-12..0.0).contains(&f) {
        0.0
    } else if f > 1.0 && f < 1.0 + 1e-12 {
        1.0
    } else {
        f
    }
}

/// Iterates the recursion from `F = 0` for `steps` rounds.
pub fn effective_fraction_series(steps: usize, p_x: f64, p_s_eff: f64) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(steps + 1);
    let mut f = 0.0;
    out.push(f);
    for _ in 0..steps {
        f = effective_fraction_step(f, p_x, p_s_eff)?;
        out.push(f);
    }
    Ok(out)
}

/// Rate `κ = p_x + p̃_s − p_x·p̃_s` of the recursion.
pub fn kappa(p_x: f64, p_s_eff: f64) -> f64 {
    p_x + p_s_eff - p_x * p_s_eff
}

/// Stationary value `p_x / κ` of the recursion.
pub fn stationary_fraction(p_x: f64, p_s_eff: f64) -> Result<f64> {
    check_probability("p_x", p_x)?;
    check_probability("effective p_s", p_s_eff)?;
    let k = kappa(p_x, p_s_eff);
    if k <= 0.0 {
        return Err(Error::invalid("kappa must be positive"));
    }
    Ok(p_x / k)
}

/// Continuum solution `p_x(1 − 1/κ)e^{−κt} + p_x/κ`.
///
/// `F(0) = p_x`, so `t` here lines up with step `t + 1` of
/// [`effective_fraction_series`]; the two differ by `O(κ)` relative to `F(∞)`.
pub fn effective_fraction_closed(t: u32, p_x: f64, p_s_eff: f64) -> Result<f64> {
    let k = kappa(p_x, p_s_eff);
    if k <= 0.0 {
        return Err(Error::invalid(format!(
            "kappa = {k} must be positive (p_x = {p_x}, effective p_s = {p_s_eff})"
        )));
    }
    Ok(p_x * (1.0 - 1.0 / k) * (-k * f64::from(t)).exp() + p_x / k)
}

/// Fitted coefficients of the effective-restoration polynomial.
pub const DEFAULT_ALPHAS: [f64; 3] = [0.5, -0.375, 0.875];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectiveModelParams {
    /// `alphas[k-1]` weights `p_s^k`.
    pub alphas: Vec<f64>,
    pub p_s: f64,
}

impl EffectiveModelParams {
    pub fn new(alphas: Vec<f64>, p_s: f64) -> Result<Self> {
        check_probability("p_s", p_s)?;
        if alphas.is_empty() {
            return Err(Error::invalid("at least one alpha coefficient is required"));
        }
        if alphas.iter().any(|a| !a.is_finite()) {
            return Err(Error::invalid("alpha coefficients must be finite"));
        }
        Ok(EffectiveModelParams { alphas, p_s })
    }

    pub fn with_default_alphas(p_s: f64) -> Result<Self> {
        Self::new(DEFAULT_ALPHAS.to_vec(), p_s)
    }

    pub fn is_normalized(&self) -> bool {
        (self.alphas.iter().sum::<f64>() - 1.0).abs() <= 1e-9
    }
}

/// `Σ_k α_k p_s^k`.
pub fn effective_ps(params: &EffectiveModelParams) -> f64 {
    params
        .alphas
        .iter()
        .enumerate()
        .map(|(k, a)| a * params.p_s.powi(k as i32 + 1))
        .sum()
}

/// Mean-field restoration `(1 − F)·p_s`.
pub fn effective_ps_meanfield(f: f64, p_s: f64) -> f64 {
    (1.0 - f) * p_s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ThresholdMode {
    Ansatz(Vec<f64>),
    MeanField,
}

/// Critical `p_x` at which the stationary lost fraction reaches one half.
pub fn threshold_x(p_s: f64, mode: &ThresholdMode) -> Result<f64> {
    check_probability("p_s", p_s)?;
    let p_eff = match mode {
        ThresholdMode::Ansatz(alphas) => {
            effective_ps(&EffectiveModelParams::new(alphas.clone(), p_s)?)
        }
        ThresholdMode::MeanField => effective_ps_meanfield(0.5, p_s),
    };
    Ok(p_eff / (1.0 + p_eff))
}
