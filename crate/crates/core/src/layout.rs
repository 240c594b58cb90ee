//! Geometry of the distance-`d` planar surface code.
//!
//! Qubits sit on a `(2d-1) x (2d-1)` grid at the positions `(row, col)` with
//! `row + col` even, numbered row-major from the top-left corner. Even rows
//! hold `d` qubits and odd rows `d-1` (1-based: odd rows `d`, even rows `d-1`).
//! The remaining grid positions host the checks:
//!
//! * plaquettes (`Z` type) at even row, odd column;
//! * stars (`X` type) at odd row, even column.
//!
//! Each check acts on its up/down/left/right grid neighbours, which gives
//! weight-3 checks along the boundary. For `d = 2` the numbering reproduces
//! the five-qubit code `<Z1Z2Z3, X1X3X4, Z3Z4Z5, X2X3X5>` with
//! `X̄ = X4X5` (bottom row) and `Z̄ = Z2Z5` (right column).
//!
//! Diagonals are the two main diagonals of the grid: `(k, k)` and
//! `(k, 2d-2-k)`. The centre `(d-1, d-1)` is a qubit for every `d`, so the
//! same rule covers even distances.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::{Basis, PauliOperator};

/// Terminal labels of a [`ConnectivityGraph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GraphKind {
    /// Vertices are stars plus TOP/BOTTOM; tracks `Z̄` against `X` measurements.
    Z,
    /// Vertices are plaquettes plus LEFT/RIGHT; tracks `X̄` against `Z` measurements.
    X,
}

/// Site graph with one edge per physical qubit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConnectivityGraph {
    pub kind: GraphKind,
    /// Number of vertices including the two terminals.
    pub n_vertices: usize,
    /// The two terminals (TOP/BOTTOM or LEFT/RIGHT).
    pub terminals: (usize, usize),
    /// `edges[q]` joins the two sites adjacent to qubit `q`.
    pub edges: Vec<(usize, usize)>,
}

impl ConnectivityGraph {
    pub fn degree(&self, v: usize) -> usize {
        self.edges
            .iter()
            .filter(|&&(a, b)| a == v || b == v)
            .count()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QubitCoord {
    pub index: usize,
    pub row: usize,
    pub col: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CodeLayout {
    pub distance: usize,
    pub n_qubits: usize,
    pub qubits: Vec<QubitCoord>,
    pub plaquettes: Vec<Vec<usize>>,
    pub stars: Vec<Vec<usize>>,
    pub logical_z_support: Vec<usize>,
    pub logical_x_support: Vec<usize>,
    pub diagonal_a: Vec<usize>,
    pub diagonal_b: Vec<usize>,
    pub z_graph: ConnectivityGraph,
    pub x_graph: ConnectivityGraph,
    #[serde(skip)]
    grid: Vec<Option<usize>>,
}

impl CodeLayout {
    pub fn build(d: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::invalid(format!("distance must be >= 2, got {d}")));
        }
        let g = 2 * d - 1;
        let mut grid = vec![None; g * g];
        let mut qubits = Vec::new();
        for r in 0..g {
            for c in 0..g {
                if (r + c) % 2 == 0 {
                    grid[r * g + c] = Some(qubits.len());
                    qubits.push(QubitCoord {
                        index: qubits.len(),
                        row: r,
                        col: c,
                    });
                }
            }
        }
        let n = qubits.len();
        let at = |r: isize, c: isize| -> Option<usize> {
            if r < 0 || c < 0 || r >= g as isize || c >= g as isize {
                None
            } else {
                grid[r as usize * g + c as usize]
            }
        };
        let neighbours = |r: usize, c: usize| -> Vec<usize> {
            let (r, c) = (r as isize, c as isize);
            let mut v: Vec<usize> = [(r - 1, c), (r, c - 1), (r, c + 1), (r + 1, c)]
                .iter()
                .filter_map(|&(a, b)| at(a, b))
                .collect();
            v.sort_unstable();
            v
        };

        let mut plaquettes = Vec::new();
        let mut plaquette_id = vec![usize::MAX; g * g];
        let mut stars = Vec::new();
        let mut star_id = vec![usize::MAX; g * g];
        for r in 0..g {
            for c in 0..g {
                if r % 2 == 0 && c % 2 == 1 {
                    plaquette_id[r * g + c] = plaquettes.len();
                    plaquettes.push(neighbours(r, c));
                } else if r % 2 == 1 && c % 2 == 0 {
                    star_id[r * g + c] = stars.len();
                    stars.push(neighbours(r, c));
                }
            }
        }

        let last = g - 1;
        let logical_z_support: Vec<usize> = (0..g)
            .step_by(2)
            .map(|r| grid[r * g + last].expect("qubit"))
            .collect();
        let logical_x_support: Vec<usize> = (0..g)
            .step_by(2)
            .map(|c| grid[last * g + c].expect("qubit"))
            .collect();
        let diagonal_a: Vec<usize> = (0..g).map(|k| grid[k * g + k].expect("qubit")).collect();
        let diagonal_b: Vec<usize> = (0..g)
            .map(|k| grid[k * g + (last - k)].expect("qubit"))
            .collect();

        let (top, bottom) = (stars.len(), stars.len() + 1);
        let (left, right) = (plaquettes.len(), plaquettes.len() + 1);
        let mut z_edges = Vec::with_capacity(n);
        let mut x_edges = Vec::with_capacity(n);
        for q in &qubits {
            let (r, c) = (q.row, q.col);
            if r % 2 == 0 {
                // qubit between stars above/below and plaquettes left/right
                let up = if r == 0 { top } else { star_id[(r - 1) * g + c] };
                let down = if r == last { bottom } else { star_id[(r + 1) * g + c] };
                z_edges.push((up, down));
                let l = if c == 0 { left } else { plaquette_id[r * g + c - 1] };
                let rt = if c == last { right } else { plaquette_id[r * g + c + 1] };
                x_edges.push((l, rt));
            } else {
                z_edges.push((star_id[r * g + c - 1], star_id[r * g + c + 1]));
                x_edges.push((plaquette_id[(r - 1) * g + c], plaquette_id[(r + 1) * g + c]));
            }
        }
        let z_graph = ConnectivityGraph {
            kind: GraphKind::Z,
            n_vertices: stars.len() + 2,
            terminals: (top, bottom),
            edges: z_edges,
        };
        let x_graph = ConnectivityGraph {
            kind: GraphKind::X,
            n_vertices: plaquettes.len() + 2,
            terminals: (left, right),
            edges: x_edges,
        };

        Ok(CodeLayout {
            distance: d,
            n_qubits: n,
            qubits,
            plaquettes,
            stars,
            logical_z_support,
            logical_x_support,
            diagonal_a,
            diagonal_b,
            z_graph,
            x_graph,
            grid,
        })
    }

    pub fn coords(&self, q: usize) -> (usize, usize) {
        let c = &self.qubits[q];
        (c.row, c.col)
    }

    /// Qubit at grid position `(row, col)`, if any.
    pub fn qubit_at(&self, row: usize, col: usize) -> Option<usize> {
        let g = 2 * self.distance - 1;
        if row >= g || col >= g {
            return None;
        }
        self.grid[row * g + col]
    }

    pub fn graph(&self, kind: GraphKind) -> &ConnectivityGraph {
        match kind {
            GraphKind::Z => &self.z_graph,
            GraphKind::X => &self.x_graph,
        }
    }

    pub fn plaquette_operator(&self, l: usize) -> PauliOperator {
        PauliOperator::from_sites(self.n_qubits, &self.plaquettes[l], Basis::Z).expect("valid sites")
    }

    pub fn star_operator(&self, l: usize) -> PauliOperator {
        PauliOperator::from_sites(self.n_qubits, &self.stars[l], Basis::X).expect("valid sites")
    }

    pub fn logical_x(&self) -> PauliOperator {
        PauliOperator::from_sites(self.n_qubits, &self.logical_x_support, Basis::X)
            .expect("valid sites")
    }

    pub fn logical_z(&self) -> PauliOperator {
        PauliOperator::from_sites(self.n_qubits, &self.logical_z_support, Basis::Z)
            .expect("valid sites")
    }

    /// Canonical `Ȳ` support: the main diagonal.
    pub fn logical_y_support(&self) -> &[usize] {
        &self.diagonal_a
    }

    pub fn logical_y(&self) -> PauliOperator {
        PauliOperator::from_sites(self.n_qubits, &self.diagonal_a, Basis::Y).expect("valid sites")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("layout serializes")
    }
}
