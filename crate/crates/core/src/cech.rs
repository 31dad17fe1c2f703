//! Čech complexes of point samples at a fixed radius.
//!
//! A vertex set spans a simplex iff its closed `r`-balls have a common point,
//! which in a Euclidean chart is the condition that its smallest enclosing
//! ball has radius at most `r`. Edges come from a bucket-grid range query at
//! `2r`; higher simplices are cliques of the edge graph extended by strictly
//! larger vertex indices and kept when their miniball passes.

use std::io::Write;

use rayon::prelude::*;
use smallvec::SmallVec;

use crate::error::{domain, Result};
use crate::geometry::miniball_radius;
use crate::grid::NeighborGrid;
use crate::manifold::{Coords, ManifoldModel, PointSample};
use crate::scalar::Real;

pub type VertexList = SmallVec<[usize; 4]>;

#[derive(Clone, Debug, PartialEq)]
pub struct Simplex<T> {
    /// Strictly increasing point indices.
    pub vertices: VertexList,
    /// Miniball radius of the vertex set (zero for vertices).
    pub filtration: T,
}

impl<T> Simplex<T> {
    pub fn dim(&self) -> usize {
        self.vertices.len() - 1
    }
}

#[derive(Clone, Debug)]
pub struct CechComplex<T> {
    radius: T,
    max_dim: usize,
    num_points: usize,
    /// `simplices[k]` holds the `k`-simplices in lexicographic vertex order.
    simplices: Vec<Vec<Simplex<T>>>,
}

impl<T: Real> CechComplex<T> {
    /// Assembles a complex from explicit simplex lists. Each level is sorted
    /// lexicographically; face closure is checked.
    pub fn from_simplices(num_points: usize, radius: T, max_dim: usize, mut levels: Vec<Vec<Simplex<T>>>) -> Result<Self> {
        levels.resize_with(max_dim + 1, Vec::new);
        for (k, level) in levels.iter_mut().enumerate() {
            for s in level.iter() {
                if s.vertices.len() != k + 1 || s.vertices.windows(2).any(|w| w[0] >= w[1]) {
                    return domain(format!("malformed {k}-simplex {:?}", s.vertices));
                }
                if s.vertices.iter().any(|&v| v >= num_points) {
                    return domain(format!("simplex {:?} references a missing vertex", s.vertices));
                }
            }
            level.sort_by(|a, b| a.vertices.cmp(&b.vertices));
            level.dedup_by(|a, b| a.vertices == b.vertices);
        }
        let c = CechComplex {
            radius,
            max_dim,
            num_points,
            simplices: levels,
        };
        if !c.is_face_closed() {
            return domain("simplex list is not closed under taking faces");
        }
        Ok(c)
    }

    pub fn radius(&self) -> T {
        self.radius
    }

    /// Dimension cap the complex was built with.
    pub fn max_dim(&self) -> usize {
        self.max_dim
    }

    pub fn num_points(&self) -> usize {
        self.num_points
    }

    /// The `k`-simplices, or an empty slice above the cap.
    pub fn simplices(&self, k: usize) -> &[Simplex<T>] {
        self.simplices.get(k).map_or(&[], |v| v.as_slice())
    }

    /// Position of a `k`-simplex in [`Self::simplices`].
    pub fn index_of(&self, vertices: &[usize]) -> Option<usize> {
        let k = vertices.len().checked_sub(1)?;
        self.simplices(k)
            .binary_search_by(|s| s.vertices.as_slice().cmp(vertices))
            .ok()
    }

    pub fn contains(&self, vertices: &[usize]) -> bool {
        self.index_of(vertices).is_some()
    }

    /// Number of simplices per dimension, truncated after the last non-empty
    /// dimension (vertices are always reported).
    pub fn simplex_counts(&self) -> Vec<usize> {
        let mut counts: Vec<usize> = self.simplices.iter().map(Vec::len).collect();
        while counts.len() > 1 && *counts.last().unwrap() == 0 {
            counts.pop();
        }
        if counts.is_empty() {
            counts.push(0);
        }
        counts
    }

    pub fn is_face_closed(&self) -> bool {
        (1..self.simplices.len()).all(|k| {
            self.simplices[k].iter().all(|s| {
                (0..=k).all(|skip| {
                    let facet: VertexList = s
                        .vertices
                        .iter()
                        .enumerate()
                        .filter(|&(i, _)| i != skip)
                        .map(|(_, &v)| v)
                        .collect();
                    self.contains(&facet)
                })
            })
        })
    }

    /// Writes one line per simplex: `dim v0 v1 ... vk filtration_value`.
    pub fn write_face_list<W: Write>(&self, mut out: W) -> Result<()> {
        for level in &self.simplices {
            for s in level {
                write!(out, "{}", s.dim())?;
                for v in &s.vertices {
                    write!(out, " {v}")?;
                }
                writeln!(out, " {}", s.filtration)?;
            }
        }
        Ok(())
    }
}

/// Free function form of [`CechComplex::simplex_counts`].
pub fn simplex_counts<T: Real>(c: &CechComplex<T>) -> Vec<usize> {
    c.simplex_counts()
}

/// Lifts the vertices of a simplex into the chart around its first vertex.
pub(crate) fn lift_vertices<T: Real>(m: &ManifoldModel<T>, sample: &PointSample<T>, vertices: &[usize]) -> SmallVec<[Coords<T>; 4]> {
    let base = sample.coords(vertices[0]);
    vertices
        .iter()
        .map(|&v| {
            let disp = m.displacement(base, sample.coords(v));
            base.iter().zip(&disp).map(|(&b, &x)| b + x).collect()
        })
        .collect()
}

/// Upper neighbour lists of the `cutoff` graph: `adj[i]` holds the sorted
/// indices `j > i` with `dist(i, j) <= cutoff`.
pub(crate) fn upper_neighbors<T: Real>(m: &ManifoldModel<T>, sample: &PointSample<T>, grid: &NeighborGrid<T>, cutoff: T) -> Vec<Vec<usize>> {
    (0..sample.len())
        .into_par_iter()
        .map(|i| {
            let mut out: Vec<usize> = grid
                .within(m, sample, sample.coords(i), cutoff)
                .into_iter()
                .filter(|&j| j > i)
                .collect();
            out.sort_unstable();
            out
        })
        .collect()
}

fn intersect_sorted(a: &[usize], b: &[usize]) -> Vec<usize> {
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::new();
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

struct Expander<'a, T> {
    m: &'a ManifoldModel<T>,
    sample: &'a PointSample<T>,
    adj: &'a [Vec<usize>],
    radius: T,
    max_dim: usize,
}

impl<T: Real> Expander<'_, T> {
    fn expand(&self, simplex: &mut VertexList, filtration: T, candidates: &[usize], out: &mut Vec<Vec<Simplex<T>>>) {
        let k = simplex.len() - 1;
        if out.len() <= k {
            out.resize_with(k + 1, Vec::new);
        }
        out[k].push(Simplex {
            vertices: simplex.clone(),
            filtration,
        });
        if k == self.max_dim {
            return;
        }
        for (pos, &w) in candidates.iter().enumerate() {
            simplex.push(w);
            let value = if simplex.len() == 2 {
                self.m.dist2_raw(self.sample.coords(simplex[0]), self.sample.coords(w)).sqrt() / T::lit(2.0)
            } else {
                let lifted = lift_vertices(self.m, self.sample, simplex);
                // never below a face value, so filtrations stay monotone
                miniball_radius(&lifted).unwrap_or(T::infinity()).max(filtration)
            };
            if value <= self.radius {
                let next = if k + 1 == self.max_dim {
                    Vec::new()
                } else {
                    intersect_sorted(&candidates[pos + 1..], &self.adj[w])
                };
                self.expand(simplex, value, &next, out);
            }
            simplex.pop();
        }
    }
}

/// Dimension cap requesting the whole complex.
pub const FULL_DIMENSION: usize = usize::MAX;

/// Builds the Čech complex of `sample` at radius `r` up to dimension
/// `max_dim`. With [`FULL_DIMENSION`] every simplex is generated and the
/// reported cap is one above the top non-empty dimension.
pub fn build_cech<T: Real>(m: &ManifoldModel<T>, sample: &PointSample<T>, r: T, max_dim: usize) -> Result<CechComplex<T>> {
    if !(r >= T::zero()) || !r.is_finite() {
        return domain(format!("Čech radius must be finite and non-negative, got {r}"));
    }
    m.check_chart_radius(r)?;
    let cutoff = r + r;
    let grid = NeighborGrid::new(m, sample, cutoff);
    build_with_grid(m, sample, r, max_dim, &grid)
}

pub(crate) fn build_with_grid<T: Real>(
    m: &ManifoldModel<T>,
    sample: &PointSample<T>,
    r: T,
    max_dim: usize,
    grid: &NeighborGrid<T>,
) -> Result<CechComplex<T>> {
    let adj = upper_neighbors(m, sample, grid, r + r);
    let exp = Expander {
        m,
        sample,
        adj: &adj,
        radius: r,
        max_dim,
    };
    let shards: Vec<Vec<Vec<Simplex<T>>>> = (0..sample.len())
        .into_par_iter()
        .map(|v| {
            let mut out = Vec::new();
            let mut simplex: VertexList = SmallVec::from_slice(&[v]);
            exp.expand(&mut simplex, T::zero(), &adj[v], &mut out);
            out
        })
        .collect();
    let reached = shards.iter().map(Vec::len).max().unwrap_or(0);
    let cap = if max_dim == FULL_DIMENSION { reached } else { max_dim };
    let mut levels: Vec<Vec<Simplex<T>>> = (0..=cap)
        .map(|k| Vec::with_capacity(shards.iter().map(|s| s.get(k).map_or(0, Vec::len)).sum()))
        .collect();
    for shard in shards {
        for (k, part) in shard.into_iter().enumerate() {
            levels[k].extend(part);
        }
    }
    let mut complex = CechComplex {
        radius: r,
        max_dim: cap,
        num_points: sample.len(),
        simplices: levels,
    };
    prune_open_faces(&mut complex);
    Ok(complex)
}

/// Drops simplices of dimension >= 3 whose non-prefix facets were rejected
/// by round-off, keeping the complex face-closed.
fn prune_open_faces<T: Real>(c: &mut CechComplex<T>) {
    for k in 3..c.simplices.len() {
        let (lower, upper) = c.simplices.split_at_mut(k);
        let facets = &lower[k - 1];
        upper[0].retain_mut(|s| {
            let mut f = s.filtration;
            for skip in 0..s.vertices.len() - 1 {
                let facet: VertexList = s
                    .vertices
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| i != skip)
                    .map(|(_, &v)| v)
                    .collect();
                match facets.binary_search_by(|t| t.vertices.as_slice().cmp(&facet)) {
                    Ok(i) => f = f.max(facets[i].filtration),
                    Err(_) => return false,
                }
            }
            s.filtration = f;
            true
        });
    }
}
