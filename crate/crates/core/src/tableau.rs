//! Mixed-state stabilizer tableau with tracked logical operators.
//!
//! The encoded state starts with the `n - 1` code generators and the two
//! logical representatives `X̄`, `Z̄`. Every generator `S_j` is paired with a
//! destabilizer `D_j` that anticommutes with `S_j` only and commutes with both
//! logicals; together with `(X̄, Z̄)` these rows form a full symplectic basis,
//! so membership tests and deterministic outcomes cost one pass over the rows
//! instead of a Gaussian elimination.
//!
//! A measurement of `g` falls in one of four cases:
//!
//! 1. `g` commutes with all generators and both logicals: it is in the group
//!    (up to sign) and the outcome is deterministic.
//! 2. `g` anticommutes with some generators but neither logical: the first
//!    anticommuting generator (lowest row) is the pivot; it is replaced by
//!    `±g` and the other anticommuting generators are multiplied by it.
//! 3. As 2, and every anticommuting logical is multiplied by the pivot.
//! 4. `g` commutes with all generators but anticommutes with a logical: the
//!    anticommuting logicals are replaced by `±g`, `±g` joins the group and
//!    the status becomes `XLost`, `ZLost` or `Collapsed`.
//!
//! Status is sticky. After a loss the group has `n` generators and further
//! measurements keep updating it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gf2;
use crate::layout::CodeLayout;
use crate::pauli::PauliOperator;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LogicalStatus {
    Alive,
    /// `X̄` was replaced by a measured operator.
    XLost,
    /// `Z̄` was replaced by a measured operator.
    ZLost,
    /// Both logicals were replaced in the same measurement.
    Collapsed,
}

impl LogicalStatus {
    pub fn is_alive(self) -> bool {
        self == LogicalStatus::Alive
    }

    /// `X̄` still well defined.
    pub fn x_alive(self) -> bool {
        matches!(self, LogicalStatus::Alive | LogicalStatus::ZLost)
    }

    /// `Z̄` still well defined.
    pub fn z_alive(self) -> bool {
        matches!(self, LogicalStatus::Alive | LogicalStatus::XLost)
    }
}

/// Which of the four update rules a measurement triggered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MeasurementCase {
    CommutesWithAll,
    AnticommutesGenerators,
    AnticommutesGeneratorsAndLogical,
    AnticommutesLogicalOnly,
}

#[derive(Debug, Clone)]
pub struct MeasurementRecord {
    pub operator: PauliOperator,
    /// `+1` or `-1`.
    pub outcome: i8,
    pub deterministic: bool,
    pub case: MeasurementCase,
}

/// Result of a measurement without the operator copy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Outcome {
    pub outcome: i8,
    pub deterministic: bool,
    pub case: MeasurementCase,
}

#[derive(Clone)]
pub struct CodeState {
    n: usize,
    generators: Vec<PauliOperator>,
    destabilizers: Vec<PauliOperator>,
    logical_x: PauliOperator,
    logical_z: PauliOperator,
    status: LogicalStatus,
}

/// Non-zero words of an operator, used to test commutation against many rows.
struct Mask {
    words: Vec<(usize, u64, u64)>,
}

impl Mask {
    fn new(op: &PauliOperator) -> Self {
        let words = op
            .x_words()
            .iter()
            .zip(op.z_words())
            .enumerate()
            .filter(|(_, (&x, &z))| x | z != 0)
            .map(|(i, (&x, &z))| (i, x, z))
            .collect();
        Mask { words }
    }

    #[inline]
    fn anticommutes(&self, row: &PauliOperator) -> bool {
        let (rx, rz) = (row.x_words(), row.z_words());
        let mut acc = 0u64;
        for &(i, x, z) in &self.words {
            acc ^= (rx[i] & z) ^ (rz[i] & x);
        }
        acc.count_ones() % 2 == 1
    }
}

impl CodeState {
    /// Code state of `layout`: all plaquettes then all stars with `+` signs.
    pub fn new(layout: &CodeLayout) -> Self {
        let n = layout.n_qubits;
        let mut generators = Vec::with_capacity(n);
        generators.extend((0..layout.plaquettes.len()).map(|l| layout.plaquette_operator(l)));
        generators.extend((0..layout.stars.len()).map(|l| layout.star_operator(l)));
        let logical_x = layout.logical_x();
        let logical_z = layout.logical_z();
        let mut constraints = generators.clone();
        constraints.push(logical_x.clone());
        constraints.push(logical_z.clone());
        let targets: Vec<usize> = (0..generators.len()).collect();
        let destabilizers = gf2::symplectic_duals(&constraints, &targets)
            .expect("code generators and logicals are independent");
        CodeState {
            n,
            generators,
            destabilizers,
            logical_x,
            logical_z,
            status: LogicalStatus::Alive,
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn generators(&self) -> &[PauliOperator] {
        &self.generators
    }

    pub fn logical_x(&self) -> &PauliOperator {
        &self.logical_x
    }

    pub fn logical_z(&self) -> &PauliOperator {
        &self.logical_z
    }

    pub fn status(&self) -> LogicalStatus {
        self.status
    }

    /// Measures the Hermitian Pauli `op`. `coin` is consulted only for random
    /// outcomes; `false` means outcome `+1`.
    pub fn measure(
        &mut self,
        op: &PauliOperator,
        coin: impl FnOnce() -> bool,
    ) -> Result<MeasurementRecord> {
        if op.n_qubits() != self.n {
            return Err(Error::invalid(format!(
                "operator on {} qubits measured on a {}-qubit state",
                op.n_qubits(),
                self.n
            )));
        }
        if !op.is_hermitian() {
            return Err(Error::invalid(format!("operator {op} is not Hermitian")));
        }
        let o = self.measure_unchecked(op, coin)?;
        Ok(MeasurementRecord {
            operator: op.clone(),
            outcome: o.outcome,
            deterministic: o.deterministic,
            case: o.case,
        })
    }

    pub(crate) fn measure_unchecked(
        &mut self,
        op: &PauliOperator,
        coin: impl FnOnce() -> bool,
    ) -> Result<Outcome> {
        let mask = Mask::new(op);
        let pivot = self.generators.iter().position(|g| mask.anticommutes(g));
        let anti_x = mask.anticommutes(&self.logical_x);
        let anti_z = mask.anticommutes(&self.logical_z);

        if let Some(p) = pivot {
            let old = self.generators[p].clone();
            for k in p + 1..self.generators.len() {
                if mask.anticommutes(&self.generators[k]) {
                    self.generators[k].mul_assign_unchecked(&old);
                }
            }
            for (k, dk) in self.destabilizers.iter_mut().enumerate() {
                if k != p && mask.anticommutes(dk) {
                    dk.mul_assign_unchecked(&old);
                }
            }
            if anti_x {
                self.logical_x.mul_assign_unchecked(&old);
            }
            if anti_z {
                self.logical_z.mul_assign_unchecked(&old);
            }
            let outcome = if coin() { -1 } else { 1 };
            self.destabilizers[p] = old;
            self.generators[p] = signed(op, outcome);
            let case = if anti_x || anti_z {
                MeasurementCase::AnticommutesGeneratorsAndLogical
            } else {
                MeasurementCase::AnticommutesGenerators
            };
            return Ok(Outcome {
                outcome,
                deterministic: false,
                case,
            });
        }

        if self.status.is_alive() && (anti_x || anti_z) {
            let outcome = if coin() { -1 } else { 1 };
            let new_gen = signed(op, outcome);
            // The anticommuting logical becomes the destabilizer of the new row.
            let partner = if anti_z {
                self.logical_z.clone()
            } else {
                self.logical_x.clone()
            };
            for dk in self.destabilizers.iter_mut() {
                if mask.anticommutes(dk) {
                    dk.mul_assign_unchecked(&partner);
                }
            }
            self.generators.push(new_gen.clone());
            self.destabilizers.push(partner);
            self.status = match (anti_x, anti_z) {
                (true, true) => LogicalStatus::Collapsed,
                (true, false) => LogicalStatus::XLost,
                _ => LogicalStatus::ZLost,
            };
            if anti_x {
                self.logical_x = new_gen.clone();
            }
            if anti_z {
                self.logical_z = new_gen;
            }
            return Ok(Outcome {
                outcome,
                deterministic: false,
                case: MeasurementCase::AnticommutesLogicalOnly,
            });
        }

        // Commutes with the whole group: op = ± prod of S_j over the
        // destabilizers it anticommutes with.
        let mut prod = PauliOperator::identity(self.n);
        for (g, dk) in self.generators.iter().zip(&self.destabilizers) {
            if mask.anticommutes(dk) {
                prod.mul_assign_unchecked(g);
            }
        }
        if !prod.same_support(op) {
            return Err(Error::Inconsistent(format!(
                "{op} commutes with the group and logicals but is not a group element"
            )));
        }
        let outcome = if prod.phase() == op.phase() { 1 } else { -1 };
        Ok(Outcome {
            outcome,
            deterministic: true,
            case: MeasurementCase::CommutesWithAll,
        })
    }

    /// Whether `op`, sign ignored, is an element of the current group.
    pub fn group_contains(&self, op: &PauliOperator) -> bool {
        if op.n_qubits() != self.n {
            return false;
        }
        let mask = Mask::new(op);
        if self.generators.iter().any(|g| mask.anticommutes(g)) {
            return false;
        }
        if self.generators.len() == self.n {
            return true;
        }
        !mask.anticommutes(&self.logical_x) && !mask.anticommutes(&self.logical_z)
    }

    /// Single-qubit membership `±X_q ∈ S` without building the operator.
    pub(crate) fn contains_single_x(&self, q: usize) -> bool {
        let commutes = |p: &PauliOperator| !p.get(q).1;
        if !self.generators.iter().all(commutes) {
            return false;
        }
        self.generators.len() == self.n || (commutes(&self.logical_x) && commutes(&self.logical_z))
    }

    /// Reduced row echelon form of the group (see [`gf2::canonical_form`]).
    pub fn canonical_form(&self) -> Vec<PauliOperator> {
        gf2::canonical_form(&self.generators)
    }

    /// Stable text dump: one signed Pauli string per line in pivot order.
    pub fn canonical_dump(&self) -> String {
        gf2::canonical_dump(&self.generators)
    }

    pub fn rank(&self) -> usize {
        gf2::rank(&self.generators)
    }

    /// Checks every structural invariant; returns a description of the first violation.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        let g = &self.generators;
        if g.len() > self.n {
            return Err(format!("{} generators on {} qubits", g.len(), self.n));
        }
        for i in 0..g.len() {
            if !g[i].is_hermitian() {
                return Err(format!("generator {i} not Hermitian"));
            }
            for j in i + 1..g.len() {
                if !g[i].commutes_unchecked(&g[j]) {
                    return Err(format!("generators {i} and {j} anticommute"));
                }
            }
            for (k, dk) in self.destabilizers.iter().enumerate() {
                if g[i].commutes_unchecked(dk) == (i == k) {
                    return Err(format!("generator {i} / destabilizer {k} pairing broken"));
                }
            }
        }
        if self.rank() != g.len() {
            return Err("generators are dependent".into());
        }
        if self.status.is_alive() {
            if g.len() != self.n - 1 {
                return Err(format!("alive state with {} generators", g.len()));
            }
            for (i, gi) in g.iter().enumerate() {
                if !gi.commutes_unchecked(&self.logical_x) || !gi.commutes_unchecked(&self.logical_z)
                {
                    return Err(format!("logical anticommutes with generator {i}"));
                }
            }
            for (k, dk) in self.destabilizers.iter().enumerate() {
                if !dk.commutes_unchecked(&self.logical_x) || !dk.commutes_unchecked(&self.logical_z)
                {
                    return Err(format!("logical anticommutes with destabilizer {k}"));
                }
            }
            if self.logical_x.commutes_unchecked(&self.logical_z) {
                return Err("logicals commute".into());
            }
        } else if g.len() != self.n {
            return Err(format!("lost state with {} generators", g.len()));
        }
        Ok(())
    }
}

fn signed(op: &PauliOperator, outcome: i8) -> PauliOperator {
    let mut s = op.clone();
    if outcome < 0 {
        s.set_phase(op.phase() + 2);
    }
    s
}

impl std::fmt::Debug for CodeState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CodeState")
            .field("status", &self.status)
            .field("generators", &self.generators)
            .field("logical_x", &self.logical_x)
            .field("logical_z", &self.logical_z)
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::Basis;

    fn five() -> (CodeLayout, CodeState) {
        let l = CodeLayout::build(2).unwrap();
        let s = CodeState::new(&l);
        (l, s)
    }

    fn p(s: &str) -> PauliOperator {
        PauliOperator::parse_sparse(5, s).unwrap()
    }

    #[test]
    fn fresh_state_invariants() {
        for d in 2..=6 {
            let l = CodeLayout::build(d).unwrap();
            let s = CodeState::new(&l);
            assert_eq!(s.generators().len(), d * d + (d - 1) * (d - 1) - 1);
            assert_eq!(s.status(), LogicalStatus::Alive);
            s.check_invariants().unwrap();
            assert!(!s.logical_x().commutes(s.logical_z()).unwrap());
        }
    }

    #[test]
    fn measuring_a_plaquette_is_deterministic_plus_one() {
        let (l, mut s) = five();
        let before = s.canonical_form();
        let r = s.measure(&l.plaquette_operator(0), || true).unwrap();
        assert!(r.deterministic);
        assert_eq!(r.outcome, 1);
        assert_eq!(r.case, MeasurementCase::CommutesWithAll);
        assert_eq!(s.canonical_form(), before);
    }

    #[test]
    fn negative_sign_of_group_element_gives_minus_one() {
        let (l, mut s) = five();
        let r = s.measure(&l.star_operator(1).with_sign(true), || false).unwrap();
        assert!(r.deterministic);
        assert_eq!(r.outcome, -1);
    }

    #[test]
    fn repeated_measurement_repeats_outcome() {
        let (_, mut s) = five();
        let op = p("X1");
        let first = s.measure(&op, || true).unwrap();
        assert!(!first.deterministic);
        let second = s.measure(&op, || false).unwrap();
        assert!(second.deterministic);
        assert_eq!(first.outcome, second.outcome);
    }

    #[test]
    fn single_x_joins_group() {
        let (_, mut s) = five();
        let x = p("X1");
        assert!(!s.group_contains(&x));
        s.measure(&x, || false).unwrap();
        assert!(s.group_contains(&x));
        assert!(s.contains_single_x(0));
    }

    #[test]
    fn group_contains_products() {
        let (l, s) = five();
        let prod = l.plaquette_operator(0).multiply(&l.plaquette_operator(1)).unwrap();
        assert!(s.group_contains(&prod));
        assert!(!s.group_contains(&p("X3")));
        assert!(!s.group_contains(s.logical_x()));
    }

    #[test]
    fn rejects_non_hermitian_and_wrong_length() {
        let (_, mut s) = five();
        let x = p("X1");
        let z = p("Z1");
        let ixz = x.multiply(&z).unwrap();
        assert!(!ixz.is_hermitian());
        assert!(s.measure(&ixz, || false).is_err());
        assert!(s.measure(&PauliOperator::identity(4), || false).is_err());
    }

    #[test]
    fn x_on_every_qubit_kills_z_logical() {
        for d in 2..=5 {
            let l = CodeLayout::build(d).unwrap();
            let mut s = CodeState::new(&l);
            for q in 0..l.n_qubits {
                let op = PauliOperator::single_qubit(l.n_qubits, q, Basis::X).unwrap();
                s.measure(&op, || false).unwrap();
                s.check_invariants().unwrap();
            }
            assert!(matches!(
                s.status(),
                LogicalStatus::ZLost | LogicalStatus::Collapsed
            ));
            assert!(s.status().x_alive());
        }
    }

    #[test]
    fn status_is_sticky() {
        let (_, mut s) = five();
        for op in ["Y2", "Y3", "Y4"] {
            s.measure(&p(op), || false).unwrap();
        }
        assert_eq!(s.status(), LogicalStatus::Collapsed);
        for op in ["Z1 Z2 Z3", "X1 X3 X4", "Z3 Z4 Z5", "X2 X3 X5", "X1", "Z5"] {
            s.measure(&p(op), || true).unwrap();
            assert_eq!(s.status(), LogicalStatus::Collapsed);
            s.check_invariants().unwrap();
        }
    }
}
