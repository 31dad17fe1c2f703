//! Betti numbers over the two-element field by sparse column reduction.
//!
//! Columns are sorted index lists and column addition is symmetric
//! difference. Two reductions are provided and agree exactly:
//!
//! - [`Reduction::Cohomology`] (the default) reduces the coboundary matrices
//!   `δ_0, δ_1, …` in ascending degree, processing simplices in decreasing
//!   filtration order and clearing columns already known to be pivots of the
//!   degree below. Rank is invariant under transposition, so
//!   `rank δ_k = rank ∂_{k+1}`.
//! - [`Reduction::Homology`] reduces the boundary matrices `∂_K, …, ∂_1` in
//!   descending degree over columns sorted by filtration value, with the
//!   usual clearing of columns that are pivots of the degree above.

use crate::cech::{CechComplex, Simplex, VertexList};
use crate::error::{domain, Result};
use crate::manifold::{ManifoldKind, ManifoldModel};
use crate::scalar::Real;

/// Sparse matrix over GF(2) mapping `k`-chains to `(k-1)`-chains.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoundaryMatrix {
    /// Degree of the source chains.
    pub degree: usize,
    pub num_rows: usize,
    /// One column per `k`-simplex listing its facets' row indices, sorted.
    pub columns: Vec<Vec<usize>>,
}

impl BoundaryMatrix {
    pub fn num_cols(&self) -> usize {
        self.columns.len()
    }

    /// GF(2) product `self · rhs`, columns sorted.
    pub fn compose(&self, rhs: &BoundaryMatrix) -> Result<Vec<Vec<usize>>> {
        if rhs.num_rows != self.num_cols() {
            return domain("matrix dimensions do not compose");
        }
        Ok(rhs
            .columns
            .iter()
            .map(|col| {
                let mut acc = Vec::new();
                for &j in col {
                    acc = symmetric_difference(&acc, &self.columns[j]);
                }
                acc
            })
            .collect())
    }

    /// Rank over GF(2).
    pub fn rank(&self) -> usize {
        reduce(self.columns.clone(), self.num_rows, &[]).0
    }
}

/// Betti numbers `β_0 … β_kmax`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BettiVector {
    pub values: Vec<usize>,
    /// Set when the complex lacks simplices of dimension `kmax + 1`, so the
    /// top entry is only an upper bound.
    pub upper_bound_only: bool,
}

impl BettiVector {
    pub fn exact(values: Vec<usize>) -> Self {
        BettiVector {
            values,
            upper_bound_only: false,
        }
    }

    pub fn get(&self, k: usize) -> Option<usize> {
        self.values.get(k).copied()
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.values
            .iter()
            .enumerate()
            .map(|(k, &b)| if k % 2 == 0 { b as i64 } else { -(b as i64) })
            .sum()
    }
}

impl std::fmt::Display for BettiVector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.values.iter().map(|b| b.to_string()).collect();
        write!(f, "{}", parts.join(" "))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Reduction {
    #[default]
    Cohomology,
    Homology,
}

pub(crate) fn symmetric_difference(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

/// Left-to-right column reduction with pivot = largest row index. Columns
/// flagged in `skip` are cleared without work. Returns the rank and the
/// pivot row of every surviving column.
fn reduce(columns: Vec<Vec<usize>>, num_rows: usize, skip: &[bool]) -> (usize, Vec<usize>) {
    const NONE: usize = usize::MAX;
    let mut owner = vec![NONE; num_rows];
    let mut reduced: Vec<Vec<usize>> = vec![Vec::new(); columns.len()];
    let mut pivots = Vec::new();
    for (j, mut col) in columns.into_iter().enumerate() {
        if skip.get(j).copied().unwrap_or(false) {
            continue;
        }
        while let Some(&low) = col.last() {
            let o = owner[low];
            if o == NONE {
                break;
            }
            col = symmetric_difference(&col, &reduced[o]);
        }
        if let Some(&low) = col.last() {
            owner[low] = j;
            pivots.push(low);
            reduced[j] = col;
        }
    }
    (pivots.len(), pivots)
}

fn facets(vertices: &[usize]) -> impl Iterator<Item = VertexList> + '_ {
    (0..vertices.len()).map(move |skip| {
        vertices
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != skip)
            .map(|(_, &v)| v)
            .collect()
    })
}

/// Boundary matrix `∂_k` with rows and columns in the complex's stored
/// (lexicographic) order. `∂_0` is the zero map with no rows.
pub fn boundary_matrix<T: Real>(c: &CechComplex<T>, k: usize) -> Result<BoundaryMatrix> {
    if k > c.max_dim() {
        return domain(format!("complex was built to dimension {}, ∂_{k} requested", c.max_dim()));
    }
    if k == 0 {
        return Ok(BoundaryMatrix {
            degree: 0,
            num_rows: 0,
            columns: vec![Vec::new(); c.simplices(0).len()],
        });
    }
    let columns = c
        .simplices(k)
        .iter()
        .map(|s| {
            let mut col: Vec<usize> = facets(&s.vertices)
                .map(|f| c.index_of(&f).expect("complex is face-closed"))
                .collect();
            col.sort_unstable();
            col
        })
        .collect();
    Ok(BoundaryMatrix {
        degree: k,
        num_rows: c.simplices(k - 1).len(),
        columns,
    })
}

/// Permutation listing the simplices of one level in increasing filtration
/// order (ties broken lexicographically, which is the stored order).
fn filtration_order<T: Real>(level: &[Simplex<T>]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..level.len()).collect();
    order.sort_by(|&a, &b| level[a].filtration.partial_cmp(&level[b].filtration).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b)));
    order
}

fn inverse(order: &[usize]) -> Vec<usize> {
    let mut pos = vec![0; order.len()];
    for (p, &i) in order.iter().enumerate() {
        pos[i] = p;
    }
    pos
}

/// Ranks of `∂_1 … ∂_top` via coboundary reduction with clearing.
fn ranks_cohomology<T: Real>(c: &CechComplex<T>, top: usize) -> Vec<usize> {
    let mut ranks = vec![0; top + 1];
    // rank δ_0 = rank ∂_1 and so on; columns in decreasing filtration order
    let mut cleared_prev: Vec<bool> = Vec::new();
    for k in 0..top {
        let src = c.simplices(k);
        let dst = c.simplices(k + 1);
        let src_order: Vec<usize> = filtration_order(src).into_iter().rev().collect();
        let dst_order: Vec<usize> = filtration_order(dst).into_iter().rev().collect();
        let src_pos = inverse(&src_order);
        let dst_pos = inverse(&dst_order);
        let mut cof: Vec<Vec<usize>> = vec![Vec::new(); src.len()];
        for (ti, t) in dst.iter().enumerate() {
            for f in facets(&t.vertices) {
                let si = c.index_of(&f).expect("complex is face-closed");
                cof[src_pos[si]].push(dst_pos[ti]);
            }
        }
        for col in &mut cof {
            col.sort_unstable();
        }
        let skip = if cleared_prev.len() == src.len() { cleared_prev.clone() } else { Vec::new() };
        let (rank, pivots) = reduce(cof, dst.len(), &skip);
        ranks[k + 1] = rank;
        let mut cleared = vec![false; dst.len()];
        for p in pivots {
            cleared[p] = true;
        }
        cleared_prev = cleared;
    }
    ranks
}

/// Ranks of `∂_1 … ∂_top` via boundary reduction from the top degree down.
fn ranks_homology<T: Real>(c: &CechComplex<T>, top: usize) -> Vec<usize> {
    let mut ranks = vec![0; top + 1];
    let mut cleared_next: Vec<bool> = Vec::new();
    for k in (1..=top).rev() {
        let cols = c.simplices(k);
        let rows = c.simplices(k - 1);
        let col_order = filtration_order(cols);
        let row_order = filtration_order(rows);
        let row_pos = inverse(&row_order);
        let columns: Vec<Vec<usize>> = col_order
            .iter()
            .map(|&i| {
                let mut col: Vec<usize> = facets(&cols[i].vertices)
                    .map(|f| row_pos[c.index_of(&f).expect("complex is face-closed")])
                    .collect();
                col.sort_unstable();
                col
            })
            .collect();
        let skip = if cleared_next.len() == cols.len() { cleared_next.clone() } else { Vec::new() };
        let (rank, pivots) = reduce(columns, rows.len(), &skip);
        ranks[k] = rank;
        let mut cleared = vec![false; rows.len()];
        for p in pivots {
            cleared[p] = true;
        }
        cleared_next = cleared;
    }
    ranks
}

/// `β_0 … β_kmax` of `c`, flagged as an upper bound when the complex was
/// not built to dimension `kmax + 1`.
pub fn betti_numbers<T: Real>(c: &CechComplex<T>, kmax: usize) -> BettiVector {
    betti_numbers_with(c, kmax, Reduction::default())
}

pub fn betti_numbers_with<T: Real>(c: &CechComplex<T>, kmax: usize, how: Reduction) -> BettiVector {
    let top = (kmax + 1).min(c.max_dim());
    let ranks = match how {
        Reduction::Cohomology => ranks_cohomology(c, top),
        Reduction::Homology => ranks_homology(c, top),
    };
    let rank = |k: usize| ranks.get(k).copied().unwrap_or(0);
    let values = (0..=kmax)
        .map(|k| c.simplices(k).len() - rank(k) - rank(k + 1))
        .collect();
    BettiVector {
        values,
        upper_bound_only: c.max_dim() < kmax + 1,
    }
}

/// `Σ_k (-1)^k · #k-simplices`.
pub fn euler_characteristic<T: Real>(c: &CechComplex<T>) -> i64 {
    (0..=c.max_dim())
        .map(|k| {
            let n = c.simplices(k).len() as i64;
            if k % 2 == 0 {
                n
            } else {
                -n
            }
        })
        .sum()
}

/// Betti numbers of the manifold itself, truncated at `kmax`.
pub fn reference_betti<T: Real>(m: &ManifoldModel<T>, kmax: usize) -> BettiVector {
    let full: Vec<usize> = match (m.kind(), m.dim()) {
        (ManifoldKind::FlatTorus, 2) => vec![1, 2, 1],
        (ManifoldKind::FlatTorus, _) => vec![1, 3, 3, 1],
        (ManifoldKind::FlatCylinder, 2) => vec![1, 1],
        (ManifoldKind::FlatCylinder, _) => vec![1, 2, 1],
        (ManifoldKind::SolidDisk, _) => vec![1],
    };
    BettiVector::exact((0..=kmax).map(|k| full.get(k).copied().unwrap_or(0)).collect())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HomologyMatch {
    pub per_degree: Vec<bool>,
    pub all: bool,
}

/// Degree-wise equality of Betti numbers up to `kmax`. Over a field this is
/// equivalent to isomorphism of the homology groups in each degree.
pub fn homology_matches(observed: &BettiVector, reference: &BettiVector, kmax: usize) -> HomologyMatch {
    let per_degree: Vec<bool> = (0..=kmax)
        .map(|k| match (observed.get(k), reference.get(k)) {
            (Some(a), Some(b)) => a == b,
            _ => false,
        })
        .collect();
    let all = per_degree.iter().all(|&b| b);
    HomologyMatch { per_degree, all }
}
