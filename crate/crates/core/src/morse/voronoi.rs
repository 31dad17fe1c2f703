//! Clipped Voronoi cells used to prune candidate subsets.
//!
//! A critical point of index `k` sits at a common vertex/face of the Voronoi
//! cells of its `k + 1` generators, so every pair of generators is adjacent
//! in the Voronoi diagram restricted to a ball of radius `r_hi`. Cells are
//! computed by clipping a box with bisector half-spaces in order of
//! distance, stopping once no further neighbour can reach the cell.

use smallvec::SmallVec;

use crate::grid::NeighborGrid;
use crate::manifold::{Coords, ManifoldModel, PointSample};
use crate::scalar::{dot, norm2, Real};

type PlaneSet = SmallVec<[u32; 4]>;

struct Vertex<T> {
    x: Coords<T>,
    planes: PlaneSet,
}

fn shared_planes(a: &PlaneSet, b: &PlaneSet) -> PlaneSet {
    a.iter().copied().filter(|p| b.contains(p)).collect()
}

struct Cell<T> {
    dim: usize,
    verts: Vec<Vertex<T>>,
}

impl<T: Real> Cell<T> {
    fn cube(dim: usize, half: T) -> Self {
        let mut verts = Vec::with_capacity(1 << dim);
        for mask in 0..(1usize << dim) {
            let mut x = Coords::new();
            let mut planes = PlaneSet::new();
            for a in 0..dim {
                let high = mask & (1 << a) != 0;
                x.push(if high { half } else { -half });
                planes.push((2 * a + usize::from(high)) as u32);
            }
            verts.push(Vertex { x, planes });
        }
        Cell { dim, verts }
    }

    fn max_norm2(&self) -> T {
        self.verts.iter().map(|v| norm2(&v.x)).fold(T::zero(), T::max)
    }

    /// Intersects the cell with `{x : n·x <= h}`.
    fn clip(&mut self, n: &[T], h: T, id: u32, eps: T) {
        let s: Vec<T> = self.verts.iter().map(|v| dot(n, &v.x) - h).collect();
        if s.iter().all(|&v| v < -eps) {
            return;
        }
        let mut next = Vec::with_capacity(self.verts.len() + 4);
        for (i, u) in self.verts.iter().enumerate() {
            if s[i] > eps {
                continue;
            }
            let mut planes = u.planes.clone();
            if s[i] >= -eps {
                planes.push(id);
            }
            next.push(Vertex { x: u.x.clone(), planes });
        }
        for (i, u) in self.verts.iter().enumerate() {
            if s[i] >= -eps {
                continue;
            }
            for (j, w) in self.verts.iter().enumerate() {
                if s[j] <= eps {
                    continue;
                }
                let mut shared = shared_planes(&u.planes, &w.planes);
                if shared.len() + 1 < self.dim {
                    continue;
                }
                let t = s[i] / (s[i] - s[j]);
                let x = u.x.iter().zip(&w.x).map(|(&a, &b)| a + t * (b - a)).collect();
                shared.push(id);
                next.push(Vertex { x, planes: shared });
            }
        }
        self.verts = next;
    }
}

/// For every point, the sorted indices of the points whose Voronoi cells
/// share a face with its own inside the ball of radius `r_hi` around it.
/// The relation is a superset of the restricted Delaunay adjacency and is
/// symmetrized by intersection.
pub(crate) fn voronoi_neighbors<T: Real>(
    m: &ManifoldModel<T>,
    sample: &PointSample<T>,
    grid: &NeighborGrid<T>,
    r_hi: T,
) -> Vec<Vec<usize>> {
    use rayon::prelude::*;
    let n = sample.len();
    let d = m.dim();
    let spacing = if n > 0 {
        (m.total_volume() / T::from_usize_lossy(n)).powf(T::one() / T::from_usize_lossy(d))
    } else {
        r_hi
    };
    let reach = r_hi + r_hi;
    let one_sided: Vec<Vec<usize>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let base = sample.coords(i);
            let mut cell = Cell::cube(d, r_hi);
            let mut ids: Vec<usize> = Vec::new();
            let mut done = T::zero();
            let mut shell = (spacing * T::lit(2.5)).min(reach);
            loop {
                let mut batch: Vec<(T, usize, Coords<T>)> = grid
                    .within(m, sample, base, shell)
                    .into_iter()
                    .filter(|&j| j != i)
                    .filter_map(|j| {
                        let v = m.displacement(base, sample.coords(j));
                        let l2 = norm2(&v);
                        (l2 > done * done).then_some((l2, j, v))
                    })
                    .collect();
                batch.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
                for (l2, j, v) in batch {
                    if T::lit(4.0) * cell.max_norm2() < l2 {
                        break;
                    }
                    let id = (2 * d + ids.len()) as u32;
                    ids.push(j);
                    let eps = T::geom_tol() * l2.max(T::geom_tol());
                    cell.clip(&v, l2 / T::lit(2.0), id, eps);
                }
                done = shell;
                if shell >= reach || T::lit(4.0) * cell.max_norm2() <= shell * shell {
                    break;
                }
                shell = (shell + shell).min(reach);
            }
            let mut out: Vec<usize> = cell
                .verts
                .iter()
                .flat_map(|v| v.planes.iter().copied())
                .filter(|&p| p as usize >= 2 * d)
                .map(|p| ids[p as usize - 2 * d])
                .collect();
            out.sort_unstable();
            out.dedup();
            out
        })
        .collect();
    (0..n)
        .map(|i| {
            one_sided[i]
                .iter()
                .copied()
                .filter(|&j| one_sided[j].binary_search(&i).is_ok())
                .collect()
        })
        .collect()
}
