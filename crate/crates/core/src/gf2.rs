//! Gaussian elimination over GF(2) on symplectic Pauli rows.
//!
//! Column order for echelon forms is fixed: all x-bits (qubit 0..n), then all
//! z-bits. Row operations are Pauli multiplications, so signs of commuting
//! rows are carried through exactly.

use crate::error::{Error, Result};
use crate::pauli::PauliOperator;

/// Reduced row echelon form of the group generated by `rows`.
///
/// Zero rows (identity, any phase) are dropped. The result is unique for a
/// given generated group up to the signs of its rows, and the rows appear in
/// increasing pivot-column order.
pub fn canonical_form(rows: &[PauliOperator]) -> Vec<PauliOperator> {
    let Some(first) = rows.first() else {
        return Vec::new();
    };
    let n = first.n_qubits();
    let mut m: Vec<PauliOperator> = rows.to_vec();
    let mut rank = 0;
    for col in 0..2 * n {
        let Some(piv) = (rank..m.len()).find(|&r| m[r].symplectic_bit(col)) else {
            continue;
        };
        m.swap(rank, piv);
        let pivot = m[rank].clone();
        for (r, row) in m.iter_mut().enumerate() {
            if r != rank && row.symplectic_bit(col) {
                row.mul_assign_unchecked(&pivot);
            }
        }
        rank += 1;
        if rank == m.len() {
            break;
        }
    }
    m.truncate(rank);
    m
}

pub fn rank(rows: &[PauliOperator]) -> usize {
    canonical_form(rows).len()
}

/// Whether `op` (sign ignored) lies in the GF(2) span of `rows`.
pub fn span_contains(rows: &[PauliOperator], op: &PauliOperator) -> bool {
    let reduced = canonical_form(rows);
    reduce_against(&reduced, op).is_identity()
}

/// Reduces `op` by an echelon basis produced by [`canonical_form`].
pub(crate) fn reduce_against(echelon: &[PauliOperator], op: &PauliOperator) -> PauliOperator {
    let mut r = op.clone();
    let n = op.n_qubits();
    for row in echelon {
        let col = (0..2 * n)
            .find(|&c| row.symplectic_bit(c))
            .expect("echelon rows are non-zero");
        if r.symplectic_bit(col) {
            r.mul_assign_unchecked(row);
        }
    }
    r
}

/// Canonical text dump: one signed Pauli string per line in pivot order.
pub fn canonical_dump(rows: &[PauliOperator]) -> String {
    let mut out = String::new();
    for r in canonical_form(rows) {
        out.push_str(&r.to_string());
        out.push('\n');
    }
    out
}

/// Finds, for every constraint row `c_j`, a Pauli `d_j` with
/// `d_j` anticommuting with `c_k` iff `target[k] == j`, for all `k`.
///
/// Concretely returns one operator per entry of `targets`: the operator that
/// anticommutes with `constraints[targets[t]]` and commutes with every other
/// constraint. The constraints must be linearly independent.
pub fn symplectic_duals(
    constraints: &[PauliOperator],
    targets: &[usize],
) -> Result<Vec<PauliOperator>> {
    let m = constraints.len();
    if m == 0 {
        return Ok(Vec::new());
    }
    let n = constraints[0].n_qubits();
    let cols = 2 * n;
    let cw = cols.div_ceil(64);
    let tw = m.div_ceil(64);
    // Row k encodes d -> <c_k, d>: x-part of d pairs with z-bits of c_k and vice versa.
    let mut a: Vec<Vec<u64>> = Vec::with_capacity(m);
    let mut t: Vec<Vec<u64>> = Vec::with_capacity(m);
    for (k, c) in constraints.iter().enumerate() {
        let mut row = vec![0u64; cw];
        for q in 0..n {
            let (bx, bz) = c.get(q);
            if bz {
                set_bit(&mut row, q);
            }
            if bx {
                set_bit(&mut row, n + q);
            }
        }
        a.push(row);
        let mut tr = vec![0u64; tw];
        set_bit(&mut tr, k);
        t.push(tr);
    }
    let mut pivots = Vec::with_capacity(m);
    let mut rank = 0;
    for col in 0..cols {
        let Some(piv) = (rank..m).find(|&r| get_bit(&a[r], col)) else {
            continue;
        };
        a.swap(rank, piv);
        t.swap(rank, piv);
        for r in 0..m {
            if r != rank && get_bit(&a[r], col) {
                let (src_a, src_t) = (a[rank].clone(), t[rank].clone());
                xor_into(&mut a[r], &src_a);
                xor_into(&mut t[r], &src_t);
            }
        }
        pivots.push(col);
        rank += 1;
        if rank == m {
            break;
        }
    }
    if rank < m {
        return Err(Error::invalid("constraint rows are linearly dependent"));
    }
    let mut out = Vec::with_capacity(targets.len());
    for &j in targets {
        if j >= m {
            return Err(Error::invalid(format!("target {j} out of range")));
        }
        let mut x = vec![false; n];
        let mut z = vec![false; n];
        for (i, &col) in pivots.iter().enumerate() {
            if get_bit(&t[i], j) {
                if col < n {
                    x[col] = true;
                } else {
                    z[col - n] = true;
                }
            }
        }
        out.push(PauliOperator::from_bits(&x, &z, false)?);
    }
    Ok(out)
}

#[inline]
fn get_bit(row: &[u64], i: usize) -> bool {
    (row[i / 64] >> (i % 64)) & 1 == 1
}

#[inline]
fn set_bit(row: &mut [u64], i: usize) {
    row[i / 64] |= 1 << (i % 64);
}

#[inline]
fn xor_into(dst: &mut [u64], src: &[u64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d ^= s;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> PauliOperator {
        PauliOperator::parse_sparse(5, s).unwrap()
    }

    fn five_qubit_code() -> Vec<PauliOperator> {
        ["Z1 Z2 Z3", "X1 X3 X4", "Z3 Z4 Z5", "X2 X3 X5"]
            .iter()
            .map(|s| p(s))
            .collect()
    }

    #[test]
    fn canonical_form_is_basis_independent() {
        let g = five_qubit_code();
        let mut h = g.clone();
        h[0] = h[0].multiply(&g[2]).unwrap();
        h[3] = h[3].multiply(&g[1]).unwrap();
        h.reverse();
        assert_eq!(canonical_form(&g), canonical_form(&h));
        assert_eq!(rank(&g), 4);
    }

    #[test]
    fn dependent_rows_drop_out() {
        let mut g = five_qubit_code();
        g.push(g[0].multiply(&g[2]).unwrap());
        assert_eq!(rank(&g), 4);
    }

    #[test]
    fn span_membership() {
        let g = five_qubit_code();
        assert!(span_contains(&g, &p("Z1 Z2 Z4 Z5")));
        assert!(!span_contains(&g, &p("X1")));
        assert!(!span_contains(&g, &p("Z2 Z5")));
    }

    #[test]
    fn duals_pair_with_their_target_only() {
        let mut c = five_qubit_code();
        c.push(p("X4 X5"));
        c.push(p("Z2 Z5"));
        let targets: Vec<usize> = (0..c.len()).collect();
        let d = symplectic_duals(&c, &targets).unwrap();
        for (j, dj) in d.iter().enumerate() {
            for (k, ck) in c.iter().enumerate() {
                assert_eq!(!dj.commutes(ck).unwrap(), j == k, "d{j} vs c{k}");
            }
        }
    }
}
