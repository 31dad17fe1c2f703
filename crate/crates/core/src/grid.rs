//! Bucket grid over the fundamental domain for fixed-radius neighbour
//! queries. Periodic axes wrap inside the grid, so no ghost copies of points
//! are created.

use smallvec::SmallVec;

use crate::manifold::{Coords, ManifoldModel, PointSample};
use crate::scalar::Real;

#[derive(Clone, Debug)]
pub struct NeighborGrid<T> {
    origin: Coords<T>,
    /// Actual cell edge per axis; never smaller than the requested size on
    /// periodic axes.
    sizes: Coords<T>,
    counts: SmallVec<[usize; 3]>,
    periodic: SmallVec<[bool; 3]>,
    starts: Vec<usize>,
    entries: Vec<usize>,
}

impl<T: Real> NeighborGrid<T> {
    /// Buckets every point of `sample` into cells of edge at least
    /// `cell_size` (at most 256 cells per axis).
    pub fn new(m: &ManifoldModel<T>, sample: &PointSample<T>, cell_size: T) -> Self {
        let d = m.dim();
        let mut origin = Coords::new();
        let mut sizes = Coords::new();
        let mut counts = SmallVec::new();
        let mut periodic = SmallVec::new();
        for a in 0..d {
            let (lo, hi) = m.axis_extent(a);
            let extent = hi - lo;
            let wanted = if cell_size > T::zero() { cell_size } else { extent };
            let raw = (extent / wanted).to_f64_lossy();
            let mut count = if m.period(a).is_some() { raw.floor() } else { raw.ceil() };
            count = count.clamp(1.0, 256.0);
            let count = count as usize;
            origin.push(lo);
            sizes.push(extent / T::from_usize_lossy(count));
            counts.push(count);
            periodic.push(m.period(a).is_some());
        }
        let total: usize = counts.iter().product();
        let mut grid = NeighborGrid {
            origin,
            sizes,
            counts,
            periodic,
            starts: vec![0; total + 1],
            entries: vec![0; sample.len()],
        };
        let cells: Vec<usize> = sample.points.iter().map(|p| grid.cell_of(&p.coords)).collect();
        for &c in &cells {
            grid.starts[c + 1] += 1;
        }
        for i in 0..total {
            grid.starts[i + 1] += grid.starts[i];
        }
        let mut fill = grid.starts.clone();
        for (i, &c) in cells.iter().enumerate() {
            grid.entries[fill[c]] = i;
            fill[c] += 1;
        }
        grid
    }

    fn axis_index(&self, a: usize, x: T) -> i64 {
        ((x - self.origin[a]) / self.sizes[a]).floor().to_f64_lossy() as i64
    }

    fn cell_of(&self, x: &[T]) -> usize {
        let mut flat = 0;
        for a in 0..self.counts.len() {
            let n = self.counts[a] as i64;
            let mut i = self.axis_index(a, x[a]);
            i = if self.periodic[a] { i.rem_euclid(n) } else { i.clamp(0, n - 1) };
            flat = flat * self.counts[a] + i as usize;
        }
        flat
    }

    /// Calls `f` with every point index whose cell could hold a point within
    /// `cutoff` of the chart point `x`. A superset of the true neighbours;
    /// each index is reported at most once.
    pub fn for_each_candidate(&self, x: &[T], cutoff: T, mut f: impl FnMut(usize)) {
        let d = self.counts.len();
        let mut ranges: SmallVec<[SmallVec<[usize; 16]>; 3]> = SmallVec::new();
        for a in 0..d {
            let n = self.counts[a] as i64;
            let lo = self.axis_index(a, x[a] - cutoff);
            let hi = self.axis_index(a, x[a] + cutoff);
            let mut axis: SmallVec<[usize; 16]> = SmallVec::new();
            if self.periodic[a] {
                if hi - lo + 1 >= n {
                    axis.extend(0..n as usize);
                } else {
                    axis.extend((lo..=hi).map(|i| i.rem_euclid(n) as usize));
                }
            } else {
                let lo = lo.clamp(0, n - 1);
                let hi = hi.clamp(0, n - 1);
                axis.extend((lo..=hi).map(|i| i as usize));
            }
            ranges.push(axis);
        }
        let mut idx: SmallVec<[usize; 3]> = SmallVec::from_elem(0, d);
        'outer: loop {
            let mut flat = 0;
            for a in 0..d {
                flat = flat * self.counts[a] + ranges[a][idx[a]];
            }
            for &p in &self.entries[self.starts[flat]..self.starts[flat + 1]] {
                f(p);
            }
            for a in (0..d).rev() {
                idx[a] += 1;
                if idx[a] < ranges[a].len() {
                    continue 'outer;
                }
                idx[a] = 0;
            }
            break;
        }
    }

    /// Indices of the points within distance `radius` (closed) of `x`.
    pub fn within(&self, m: &ManifoldModel<T>, sample: &PointSample<T>, x: &[T], radius: T) -> Vec<usize> {
        let r2 = radius * radius;
        let mut out = Vec::new();
        self.for_each_candidate(x, radius, |j| {
            if m.dist2_raw(x, sample.coords(j)) <= r2 {
                out.push(j);
            }
        });
        out.sort_unstable();
        out
    }

    /// Distance from `x` to the nearest sample point, or `+∞` if there is
    /// none within `max_radius`.
    pub fn nearest_distance(&self, m: &ManifoldModel<T>, sample: &PointSample<T>, x: &[T], max_radius: T) -> T {
        let mut best = max_radius * max_radius;
        let mut found = false;
        self.for_each_candidate(x, max_radius, |j| {
            let d2 = m.dist2_raw(x, sample.coords(j));
            if d2 <= best {
                best = d2;
                found = true;
            }
        });
        if found {
            best.sqrt()
        } else {
            T::infinity()
        }
    }

    /// Whether some point other than those accepted by `skip` lies strictly
    /// within `radius - tol` of `x`.
    pub fn any_strictly_inside(
        &self,
        m: &ManifoldModel<T>,
        sample: &PointSample<T>,
        x: &[T],
        radius: T,
        tol: T,
        skip: impl Fn(usize) -> bool,
    ) -> bool {
        let lim = radius - tol;
        if lim <= T::zero() {
            return false;
        }
        let lim2 = lim * lim;
        let mut hit = false;
        self.for_each_candidate(x, radius, |j| {
            if !hit && !skip(j) && m.dist2_raw(x, sample.coords(j)) < lim2 {
                hit = true;
            }
        });
        hit
    }
}
