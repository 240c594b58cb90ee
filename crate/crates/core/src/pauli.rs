//! Binary-symplectic Pauli strings.
//!
//! A [`PauliOperator`] on `n` qubits is stored as two packed bit vectors
//! (`x` and `z`) and a phase exponent. The phase is the power of `i` in front
//! of the *Hermitian* tensor product of single-qubit Paulis, i.e. a qubit with
//! both bits set denotes `Y` itself (not `XZ`). Hermitian operators therefore
//! carry phase 0 (`+`) or 2 (`-`).
//!
//! Qubits are 0-based internally. The text format (`"+X1 Y3 Z4"`) uses
//! 1-based labels.

use std::fmt;

use crate::error::{Error, Result};

const WORD: usize = 64;

#[inline]
fn words_for(n: usize) -> usize {
    n.div_ceil(WORD)
}

/// Single-qubit Pauli basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Basis {
    X,
    Y,
    Z,
}

impl Basis {
    pub const ALL: [Basis; 3] = [Basis::X, Basis::Y, Basis::Z];

    fn bits(self) -> (bool, bool) {
        match self {
            Basis::X => (true, false),
            Basis::Y => (true, true),
            Basis::Z => (false, true),
        }
    }
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = match self {
            Basis::X => 'X',
            Basis::Y => 'Y',
            Basis::Z => 'Z',
        };
        write!(f, "{c}")
    }
}

/// A Pauli string `i^phase * P_1 ⊗ ... ⊗ P_n`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PauliOperator {
    n: usize,
    x: Vec<u64>,
    z: Vec<u64>,
    phase: u8,
}

impl PauliOperator {
    pub fn identity(n: usize) -> Self {
        let w = words_for(n);
        PauliOperator {
            n,
            x: vec![0; w],
            z: vec![0; w],
            phase: 0,
        }
    }

    /// Weight-1 Hermitian operator `basis` on `site`.
    pub fn single_qubit(n: usize, site: usize, basis: Basis) -> Result<Self> {
        if site >= n {
            return Err(Error::invalid(format!(
                "qubit {site} out of range for {n} qubits"
            )));
        }
        let mut p = Self::identity(n);
        let (bx, bz) = basis.bits();
        p.set(site, bx, bz);
        Ok(p)
    }

    /// Tensor product of `basis` over `sites` with a `+` sign.
    pub fn from_sites(n: usize, sites: &[usize], basis: Basis) -> Result<Self> {
        let mut p = Self::identity(n);
        let (bx, bz) = basis.bits();
        for &s in sites {
            if s >= n {
                return Err(Error::invalid(format!(
                    "qubit {s} out of range for {n} qubits"
                )));
            }
            p.set(s, bx, bz);
        }
        Ok(p)
    }

    /// Builds an operator from explicit bit vectors; `negative` selects the `-` sign.
    pub fn from_bits(x: &[bool], z: &[bool], negative: bool) -> Result<Self> {
        if x.len() != z.len() {
            return Err(Error::invalid("x and z bit vectors differ in length"));
        }
        let mut p = Self::identity(x.len());
        for (q, (&bx, &bz)) in x.iter().zip(z).enumerate() {
            p.set(q, bx, bz);
        }
        p.phase = if negative { 2 } else { 0 };
        Ok(p)
    }

    /// Parses the sparse text form with 1-based labels, e.g. `"-Z1 Y3 Y2 X5"`.
    ///
    /// A leading `+`/`-` applies to the whole string; `"+I"` and `""` are the identity.
    pub fn parse_sparse(n: usize, text: &str) -> Result<Self> {
        let mut p = Self::identity(n);
        let mut s = text.trim();
        if let Some(rest) = s.strip_prefix('-') {
            p.phase = 2;
            s = rest;
        } else if let Some(rest) = s.strip_prefix('+') {
            s = rest;
        }
        for tok in s.split_whitespace() {
            if tok == "I" {
                continue;
            }
            let mut chars = tok.chars();
            let basis = match chars.next() {
                Some('X') => Basis::X,
                Some('Y') => Basis::Y,
                Some('Z') => Basis::Z,
                _ => return Err(Error::invalid(format!("bad Pauli token {tok:?}"))),
            };
            let label: usize = chars
                .as_str()
                .parse()
                .map_err(|_| Error::invalid(format!("bad qubit label in {tok:?}")))?;
            if label == 0 || label > n {
                return Err(Error::invalid(format!(
                    "qubit label {label} out of range 1..={n}"
                )));
            }
            let q = label - 1;
            if p.get(q) != (false, false) {
                return Err(Error::invalid(format!("qubit {label} repeated")));
            }
            let (bx, bz) = basis.bits();
            p.set(q, bx, bz);
        }
        Ok(p)
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn phase(&self) -> u8 {
        self.phase
    }

    pub fn is_hermitian(&self) -> bool {
        self.phase.is_multiple_of(2)
    }

    pub fn is_negative(&self) -> bool {
        self.phase == 2
    }

    pub fn is_identity(&self) -> bool {
        self.x.iter().all(|&w| w == 0) && self.z.iter().all(|&w| w == 0)
    }

    pub(crate) fn set_phase(&mut self, phase: u8) {
        self.phase = phase & 3;
    }

    /// Overwrites the sign of a Hermitian operator.
    pub fn with_sign(mut self, negative: bool) -> Self {
        self.phase = if negative { 2 } else { 0 };
        self
    }

    #[inline]
    pub fn get(&self, q: usize) -> (bool, bool) {
        let (w, b) = (q / WORD, q % WORD);
        ((self.x[w] >> b) & 1 == 1, (self.z[w] >> b) & 1 == 1)
    }

    #[inline]
    fn set(&mut self, q: usize, bx: bool, bz: bool) {
        let (w, b) = (q / WORD, q % WORD);
        let m = 1u64 << b;
        if bx {
            self.x[w] |= m;
        } else {
            self.x[w] &= !m;
        }
        if bz {
            self.z[w] |= m;
        } else {
            self.z[w] &= !m;
        }
    }

    /// Single-qubit factor on `q`, `None` for identity.
    pub fn basis_at(&self, q: usize) -> Option<Basis> {
        match self.get(q) {
            (false, false) => None,
            (true, false) => Some(Basis::X),
            (true, true) => Some(Basis::Y),
            (false, true) => Some(Basis::Z),
        }
    }

    pub fn support(&self) -> Vec<usize> {
        let mut out = Vec::new();
        for (w, (&xw, &zw)) in self.x.iter().zip(&self.z).enumerate() {
            let mut m = xw | zw;
            while m != 0 {
                let b = m.trailing_zeros() as usize;
                out.push(w * WORD + b);
                m &= m - 1;
            }
        }
        out
    }

    pub fn weight(&self) -> usize {
        self.x
            .iter()
            .zip(&self.z)
            .map(|(&a, &b)| (a | b).count_ones() as usize)
            .sum()
    }

    pub(crate) fn x_words(&self) -> &[u64] {
        &self.x
    }

    pub(crate) fn z_words(&self) -> &[u64] {
        &self.z
    }

    /// Bit `col` of the symplectic row `(x | z)`: columns `0..n` are x-bits, `n..2n` z-bits.
    pub(crate) fn symplectic_bit(&self, col: usize) -> bool {
        if col < self.n {
            self.get(col).0
        } else {
            self.get(col - self.n).1
        }
    }

    /// Same support, sign dropped.
    pub fn unsigned(&self) -> Self {
        let mut p = self.clone();
        p.phase = 0;
        p
    }

    /// True when both operators have the same x/z bits (phase ignored).
    pub fn same_support(&self, other: &Self) -> bool {
        self.n == other.n && self.x == other.x && self.z == other.z
    }

    fn check_len(&self, other: &Self) -> Result<()> {
        if self.n == other.n {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "operator length mismatch: {} vs {}",
                self.n, other.n
            )))
        }
    }

    /// Symplectic inner product is zero.
    pub fn commutes(&self, other: &Self) -> Result<bool> {
        self.check_len(other)?;
        Ok(self.commutes_unchecked(other))
    }

    #[inline]
    pub(crate) fn commutes_unchecked(&self, other: &Self) -> bool {
        let mut acc = 0u64;
        for i in 0..self.x.len() {
            acc ^= (self.x[i] & other.z[i]) ^ (self.z[i] & other.x[i]);
        }
        acc.count_ones().is_multiple_of(2)
    }

    /// Product `self * other`.
    pub fn multiply(&self, other: &Self) -> Result<Self> {
        self.check_len(other)?;
        let mut out = self.clone();
        out.mul_assign_unchecked(other);
        Ok(out)
    }

    /// `self <- self * other`, phase tracked mod 4.
    #[inline]
    pub(crate) fn mul_assign_unchecked(&mut self, other: &Self) {
        // Per-qubit phase contribution in the Hermitian basis:
        // XY = iZ, YZ = iX, ZX = iY contribute +1; the reversed orders -1.
        let mut plus = 0u32;
        let mut minus = 0u32;
        for i in 0..self.x.len() {
            let (x1, z1, x2, z2) = (self.x[i], self.z[i], other.x[i], other.z[i]);
            let p = (x1 & !z1 & x2 & z2) | (x1 & z1 & !x2 & z2) | (!x1 & z1 & x2 & !z2);
            let m = (x1 & z1 & x2 & !z2) | (!x1 & z1 & x2 & z2) | (x1 & !z1 & !x2 & z2);
            plus += p.count_ones();
            minus += m.count_ones();
            self.x[i] = x1 ^ x2;
            self.z[i] = z1 ^ z2;
        }
        let delta = ((plus + 4 * (minus / 4 + 1) - minus) & 3) as u8;
        self.phase = (self.phase + other.phase + delta) & 3;
    }
}

/// Free-function form of [`PauliOperator::commutes`].
pub fn commutes(a: &PauliOperator, b: &PauliOperator) -> Result<bool> {
    a.commutes(b)
}

/// Free-function form of [`PauliOperator::multiply`].
pub fn multiply(a: &PauliOperator, b: &PauliOperator) -> Result<PauliOperator> {
    a.multiply(b)
}

/// Free-function form of [`PauliOperator::single_qubit`].
pub fn single_qubit(n: usize, site: usize, basis: Basis) -> Result<PauliOperator> {
    PauliOperator::single_qubit(n, site, basis)
}

impl fmt::Display for PauliOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = match self.phase {
            0 => "+",
            1 => "+i",
            2 => "-",
            _ => "-i",
        };
        write!(f, "{sign}")?;
        let support = self.support();
        if support.is_empty() {
            return write!(f, "I");
        }
        for (k, q) in support.iter().enumerate() {
            if k > 0 {
                write!(f, " ")?;
            }
            // support() only yields non-identity sites
            let b = self.basis_at(*q).expect("support site");
            write!(f, "{b}{}", q + 1)?;
        }
        Ok(())
    }
}

impl fmt::Debug for PauliOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PauliOperator({self})")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(n: usize, s: &str) -> PauliOperator {
        PauliOperator::parse_sparse(n, s).unwrap()
    }

    #[test]
    fn single_qubit_commutation() {
        let x1 = single_qubit(5, 0, Basis::X).unwrap();
        let z1 = single_qubit(5, 0, Basis::Z).unwrap();
        assert!(!commutes(&x1, &z1).unwrap());
        assert!(commutes(&x1, &x1).unwrap());
        let y = single_qubit(5, 1, Basis::Y).unwrap();
        assert!(!commutes(&y, &single_qubit(5, 1, Basis::X).unwrap()).unwrap());
        assert!(commutes(&y, &single_qubit(5, 2, Basis::X).unwrap()).unwrap());
    }

    #[test]
    fn even_overlap_commutes() {
        assert!(commutes(&p(5, "Z1 Z2 Z3"), &p(5, "X2 X3 X5")).unwrap());
    }

    #[test]
    fn y_squares_to_identity() {
        let y = single_qubit(5, 1, Basis::Y).unwrap();
        let sq = multiply(&y, &y).unwrap();
        assert!(sq.is_identity());
        assert_eq!(sq.phase(), 0);
    }

    #[test]
    fn xz_product_is_minus_i_y() {
        let x = single_qubit(1, 0, Basis::X).unwrap();
        let z = single_qubit(1, 0, Basis::Z).unwrap();
        let xz = multiply(&x, &z).unwrap();
        assert_eq!(xz.basis_at(0), Some(Basis::Y));
        assert_eq!(xz.phase(), 3);
        let zx = multiply(&z, &x).unwrap();
        assert_eq!(zx.phase(), 1);
    }

    #[test]
    fn star_times_plaquette_matches_worked_example() {
        let prod = multiply(&p(5, "X2 X3 X5"), &p(5, "Z1 Z2 Z3")).unwrap();
        assert!(prod.same_support(&p(5, "Z1 Y2 Y3 X5")));
        assert!(prod.is_hermitian());
        // X.Z = -iY on two qubits gives (-i)^2 = -1
        assert!(prod.is_negative());
    }

    #[test]
    fn plaquette_products_give_logical_z() {
        let a = multiply(&p(5, "Z2 Z5"), &p(5, "Z1 Z2 Z3")).unwrap();
        let b = multiply(&a, &p(5, "Z3 Z4 Z5")).unwrap();
        assert_eq!(b, p(5, "Z1 Z4"));
    }

    #[test]
    fn length_mismatch_is_an_error() {
        assert!(commutes(&PauliOperator::identity(3), &PauliOperator::identity(4)).is_err());
        assert!(multiply(&PauliOperator::identity(3), &PauliOperator::identity(4)).is_err());
        assert!(single_qubit(3, 3, Basis::X).is_err());
    }

    #[test]
    fn display_round_trip() {
        let op = p(70, "-X1 Y3 Z4 X70");
        assert_eq!(op.to_string(), "-X1 Y3 Z4 X70");
        assert_eq!(p(70, &op.to_string()), op);
        assert_eq!(PauliOperator::identity(3).to_string(), "+I");
    }
}
