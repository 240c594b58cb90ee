//! Closed-form results for `Y`-only measurements and unbiased lifetimes.
//!
//! With only `Y` measurements the logical qubit is lost once every qubit of
//! one of the two diagonals (each `2d − 1` qubits, sharing the centre) has
//! been measured. Counting subsets of size `k` that cover a diagonal gives
//! `C(k, n) = 2·binom(n − (2d−1), k − (2d−1)) − binom(n − (4d−3), k − (4d−3))`
//! and the single-round failure probability `Σ_k C(k, n) p^k (1 − p)^{n−k}`.

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};

/// Number of qubits at distance `d`.
pub fn n_qubits(d: usize) -> usize {
    d * d + (d - 1) * (d - 1)
}

fn check_distance(d: usize) -> Result<()> {
    if d < 2 {
        Err(Error::invalid(format!("distance {d} below 2")))
    } else {
        Ok(())
    }
}

fn check_probability(name: &str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} = {p} outside [0, 1]")))
    }
}

/// Neumaier-compensated sum.
#[derive(Default)]
struct CompensatedSum {
    sum: f64,
    c: f64,
}

impl CompensatedSum {
    fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.c += (self.sum - t) + v;
        } else {
            self.c += (v - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.c
    }
}

/// `Σ_{j=0}^{m} binom(m, j) p^{j+shift} (1 − p)^{m−j}`, each term in log space.
fn shifted_binomial_mass(m: usize, shift: usize, p: f64) -> f64 {
    let (lp, lq) = (p.ln(), (-p).ln_1p());
    let mut log_binom = 0.0;
    let mut acc = CompensatedSum::default();
    for j in 0..=m {
        if j > 0 {
            log_binom += ((m - j + 1) as f64).ln() - (j as f64).ln();
        }
        let log_term = log_binom + (j + shift) as f64 * lp + (m - j) as f64 * lq;
        acc.add(log_term.exp());
    }
    acc.value()
}

/// Probability that one round of `Y` measurements with rate `p_y` covers a diagonal.
pub fn y_fail_probability(d: usize, p_y: f64) -> Result<f64> {
    check_distance(d)?;
    check_probability("p_y", p_y)?;
    if p_y == 0.0 {
        return Ok(0.0);
    }
    if p_y == 1.0 {
        return Ok(1.0);
    }
    let n = n_qubits(d);
    let (one, both) = (2 * d - 1, 4 * d - 3);
    let single = shifted_binomial_mass(n - one, one, p_y);
    let double = shifted_binomial_mass(n - both, both, p_y);
    Ok((2.0 * single - double).clamp(0.0, 1.0))
}

pub fn y_success_probability(d: usize, p_y: f64) -> Result<f64> {
    Ok(1.0 - y_fail_probability(d, p_y)?)
}

fn binomial(m: usize, k: usize) -> BigUint {
    if k > m {
        return BigUint::zero();
    }
    let k = k.min(m - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= BigUint::from(m - i);
        acc /= BigUint::from(i + 1);
    }
    acc
}

/// Number of `k`-subsets of the qubits that cover at least one diagonal.
pub fn covering_subsets(d: usize, k: usize) -> Result<BigUint> {
    check_distance(d)?;
    let n = n_qubits(d);
    let (one, both) = (2 * d - 1, 4 * d - 3);
    if k < one || k > n {
        return Ok(BigUint::zero());
    }
    let single = binomial(n - one, k - one) * 2u32;
    let double = if k >= both {
        binomial(n - both, k - both)
    } else {
        BigUint::zero()
    };
    Ok(single - double)
}

/// Exact failure probability for a rational `p_y`.
pub fn y_fail_probability_exact(d: usize, p_y: &BigRational) -> Result<BigRational> {
    check_distance(d)?;
    if p_y < &BigRational::zero() || p_y > &BigRational::one() {
        return Err(Error::invalid(format!("p_y = {p_y} outside [0, 1]")));
    }
    let n = n_qubits(d);
    let q = BigRational::one() - p_y;
    let mut total = BigRational::zero();
    for k in 2 * d - 1..=n {
        let c = covering_subsets(d, k)?;
        let term = BigRational::from_integer(c.into())
            * num_traits::pow(p_y.clone(), k)
            * num_traits::pow(q.clone(), n - k);
        total += term;
    }
    Ok(total)
}

fn normal_mass(m: usize, p: f64) -> f64 {
    let mean = m as f64 * p;
    let var = mean * (1.0 - p);
    let norm = (2.0 * std::f64::consts::PI * var).sqrt();
    (0..=m)
        .map(|k| {
            let dev = k as f64 - mean;
            (-dev * dev / (2.0 * var)).exp() / norm
        })
        .sum()
}

/// Large-`d` approximation replacing both shifted binomials by Gaussians.
///
/// Each binomial sum is replaced by the sum of a normal density over the same
/// integer range. At `p_y = 1` returns the limiting value 1.
pub fn y_fail_normal_approx(d: usize, p_y: f64) -> Result<f64> {
    check_distance(d)?;
    check_probability("p_y", p_y)?;
    if p_y == 1.0 {
        return Ok(1.0);
    }
    let n = n_qubits(d);
    let (one, both) = (2 * d - 1, 4 * d - 3);
    let (m1, m2) = (n - one, n - both);
    if p_y == 0.0 || m2 == 0 {
        return Err(Error::invalid(format!(
            "normal approximation has zero variance at d = {d}, p_y = {p_y}"
        )));
    }
    Ok(2.0 * p_y.powi(one as i32) * normal_mass(m1, p_y)
        - p_y.powi(both as i32) * normal_mass(m2, p_y))
}

/// Lifetime without stabilizer measurements: `−ln n / ln(1 − p_m)`.
pub fn lifetime_ps0(d: usize, p_m: f64) -> Result<f64> {
    check_distance(d)?;
    lifetime_ps0_n(n_qubits(d) as f64, p_m)
}

/// [`lifetime_ps0`] for a real-valued qubit count.
pub fn lifetime_ps0_n(n: f64, p_m: f64) -> Result<f64> {
    if !(p_m > 0.0 && p_m < 1.0) {
        return Err(Error::invalid(format!("p_m = {p_m} must lie in (0, 1)")));
    }
    Ok(-n.ln() / (-p_m).ln_1p())
}

/// Default exponent `4d − 2` of the full-restoration lifetime.
pub fn default_ps1_exponent(d: usize) -> f64 {
    (4 * d - 2) as f64
}

/// Lifetime with stabilizer measurements every round: `p_y^{−(4d−2)}`.
pub fn lifetime_ps1(d: usize, p_y: f64) -> Result<f64> {
    check_distance(d)?;
    lifetime_ps1_with_exponent(p_y, default_ps1_exponent(d))
}

/// `p_y^{−exponent}`.
pub fn lifetime_ps1_with_exponent(p_y: f64, exponent: f64) -> Result<f64> {
    if !(p_y > 0.0 && p_y <= 1.0) {
        return Err(Error::invalid(format!("p_y = {p_y} must lie in (0, 1]")));
    }
    Ok(p_y.powf(-exponent))
}
