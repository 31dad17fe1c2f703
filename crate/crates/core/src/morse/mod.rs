//! Critical points of the distance function to a sample.
//!
//! A `(k + 1)`-subset `Y` is critical at value `ρ(Y)` when its circumcenter
//! `c(Y)` (taken in the affine hull) lies in the convex hull of `Y` and the
//! open ball `B_ρ(c)` holds no other sample point. In a flat chart the
//! gradients of `ρ²_y` at `c` are `2(c - y)`, so the hull condition is the
//! same as `0 ∈ conv{∇ρ²_y(c)}`.

mod voronoi;

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::cech::{build_cech, lift_vertices, upper_neighbors, VertexList, FULL_DIMENSION};
use crate::error::{domain, Error, Result};
use crate::geometry::circumsphere;
use crate::grid::NeighborGrid;
use crate::homology::euler_characteristic;
use crate::manifold::{Coords, ManifoldModel, Point, PointSample};
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq)]
pub struct CriticalPoint<T> {
    /// Morse index `k = |Y| - 1`.
    pub index: usize,
    /// Generating point indices, strictly increasing.
    pub vertices: VertexList,
    /// `c(Y)`, wrapped into the fundamental domain.
    pub center: Point<T>,
    /// `ρ(Y)`.
    pub radius: T,
    /// Distance from the center to `∂M` (infinite on the torus).
    pub boundary_dist: T,
}

impl<T: Real> CriticalPoint<T> {
    /// Lifts of the generators into the chart around the center.
    pub fn lifted_vertices(&self, m: &ManifoldModel<T>, sample: &PointSample<T>) -> SmallVec<[Coords<T>; 4]> {
        let c = &self.center.coords;
        self.vertices
            .iter()
            .map(|&v| {
                let disp = m.displacement(c, sample.coords(v));
                c.iter().zip(&disp).map(|(&a, &b)| a + b).collect()
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum RegionFilter<T> {
    All,
    /// Centers with `δ > r0`.
    Interior(T),
    /// Centers with `δ <= r0`.
    Collar(T),
}

impl<T: Real> RegionFilter<T> {
    pub fn accepts(&self, delta: T) -> bool {
        match *self {
            RegionFilter::All => true,
            RegionFilter::Interior(r0) => delta > r0,
            RegionFilter::Collar(r0) => delta <= r0,
        }
    }
}

/// Critical values in `(r_lo, r_hi]` of a fixed index. A lower bound of zero
/// is closed, so index-0 points (value zero) are reported.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CriticalQuery<T> {
    pub r_lo: T,
    pub r_hi: T,
    pub index: usize,
    pub region: RegionFilter<T>,
}

impl<T: Real> CriticalQuery<T> {
    pub fn new(r_lo: T, r_hi: T, index: usize) -> Self {
        CriticalQuery {
            r_lo,
            r_hi,
            index,
            region: RegionFilter::All,
        }
    }

    pub fn with_region(mut self, region: RegionFilter<T>) -> Self {
        self.region = region;
        self
    }

    fn in_range(&self, rho: T) -> bool {
        rho <= self.r_hi && (rho > self.r_lo || (self.r_lo == T::zero() && rho == T::zero()))
    }
}

/// Outcome of testing one subset.
#[derive(Clone, Debug, PartialEq)]
pub enum Criticality<T> {
    Critical(CriticalPoint<T>),
    NotCritical,
    /// Affinely dependent subset; no center is defined.
    Degenerate,
}

impl<T> Criticality<T> {
    pub fn is_critical(&self) -> bool {
        matches!(self, Criticality::Critical(_))
    }
}

/// How candidate subsets are generated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum CandidateStrategy {
    /// Cliques of the Voronoi adjacency restricted to `r_hi`-balls.
    #[default]
    Voronoi,
    /// Cliques of the `2 r_hi` neighbour graph.
    NeighborGraph,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EnumerationOptions<T> {
    pub strategy: CandidateStrategy,
    /// Grid cell edge; `None` picks `r_hi` capped at three mean spacings.
    pub cell_size: Option<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Enumeration<T> {
    /// Sorted by `(ρ, Y)`.
    pub points: Vec<CriticalPoint<T>>,
    pub candidates: usize,
    pub degenerate: usize,
}

fn hull_and_center<T: Real>(
    m: &ManifoldModel<T>,
    sample: &PointSample<T>,
    vertices: &[usize],
) -> Result<Option<(Coords<T>, T, bool)>> {
    let inj = m.injectivity_radius();
    let lifted = lift_vertices(m, sample, vertices);
    for p in lifted.iter().skip(1) {
        let d2 = crate::scalar::dist2(p, &lifted[0]);
        if !(d2.sqrt() < inj) {
            return Err(Error::ChartOverflow {
                distance: d2.sqrt().to_f64_lossy(),
                limit: inj.to_f64_lossy(),
            });
        }
    }
    let Some(s) = circumsphere(&lifted) else {
        return Ok(None);
    };
    let inside = s.barycentric.iter().all(|&b| b >= -T::geom_tol());
    Ok(Some((s.center, s.radius, inside)))
}

fn assemble<T: Real>(m: &ManifoldModel<T>, vertices: &[usize], center: &[T], radius: T) -> CriticalPoint<T> {
    let wrapped = m.wrap(center);
    let boundary_dist = m.boundary_distance(&wrapped);
    CriticalPoint {
        index: vertices.len() - 1,
        vertices: SmallVec::from_slice(vertices),
        center: Point { coords: wrapped },
        radius,
        boundary_dist,
    }
}

fn emptiness_tol<T: Real>(rho: T) -> T {
    T::geom_tol() * rho.max(T::one())
}

/// Tests whether `vertices` (strictly increasing indices) generate a critical
/// point. Emptiness is checked by a linear scan of the sample.
pub fn is_critical<T: Real>(vertices: &[usize], sample: &PointSample<T>, m: &ManifoldModel<T>) -> Result<Criticality<T>> {
    check_subset(vertices, sample, m)?;
    let Some((center, rho, inside)) = hull_and_center(m, sample, vertices)? else {
        return Ok(Criticality::Degenerate);
    };
    if !inside {
        return Ok(Criticality::NotCritical);
    }
    let lim = rho - emptiness_tol(rho);
    let wrapped = m.wrap(&center);
    let blocked = lim > T::zero()
        && (0..sample.len()).any(|j| !vertices.contains(&j) && m.dist2_raw(&wrapped, sample.coords(j)) < lim * lim);
    if blocked {
        return Ok(Criticality::NotCritical);
    }
    Ok(Criticality::Critical(assemble(m, vertices, &center, rho)))
}

fn check_subset<T: Real>(vertices: &[usize], sample: &PointSample<T>, m: &ManifoldModel<T>) -> Result<()> {
    if vertices.is_empty() || vertices.len() > m.dim() + 1 {
        return domain(format!("subset size {} outside 1..={}", vertices.len(), m.dim() + 1));
    }
    if vertices.windows(2).any(|w| w[0] >= w[1]) || vertices.iter().any(|&v| v >= sample.len()) {
        return domain(format!("invalid vertex subset {vertices:?}"));
    }
    Ok(())
}

fn check_grid<T: Real>(
    m: &ManifoldModel<T>,
    sample: &PointSample<T>,
    grid: &NeighborGrid<T>,
    vertices: &[usize],
) -> Result<Criticality<T>> {
    let Some((center, rho, inside)) = hull_and_center(m, sample, vertices)? else {
        return Ok(Criticality::Degenerate);
    };
    if !inside {
        return Ok(Criticality::NotCritical);
    }
    let wrapped = m.wrap(&center);
    if grid.any_strictly_inside(m, sample, &wrapped, rho, emptiness_tol(rho), |j| vertices.contains(&j)) {
        return Ok(Criticality::NotCritical);
    }
    Ok(Criticality::Critical(assemble(m, vertices, &center, rho)))
}

/// All critical points answering `query`, sorted by `(ρ, Y)`.
pub fn enumerate_critical_points<T: Real>(
    sample: &PointSample<T>,
    m: &ManifoldModel<T>,
    query: &CriticalQuery<T>,
) -> Result<Vec<CriticalPoint<T>>> {
    enumerate_critical_points_with(sample, m, query, &EnumerationOptions::default()).map(|e| e.points)
}

pub fn enumerate_critical_points_with<T: Real>(
    sample: &PointSample<T>,
    m: &ManifoldModel<T>,
    query: &CriticalQuery<T>,
    opts: &EnumerationOptions<T>,
) -> Result<Enumeration<T>> {
    let CriticalQuery { r_lo, r_hi, index: k, .. } = *query;
    if !(r_lo >= T::zero()) || !r_hi.is_finite() || r_lo > r_hi {
        return domain(format!("critical range ({r_lo}, {r_hi}] is invalid"));
    }
    if k > m.dim() {
        return domain(format!("index {k} exceeds dimension {}", m.dim()));
    }
    m.check_chart_radius(r_hi)?;
    let mut out = Enumeration {
        points: Vec::new(),
        candidates: 0,
        degenerate: 0,
    };
    if r_lo == r_hi {
        return Ok(out);
    }
    if k == 0 {
        if query.in_range(T::zero()) {
            out.candidates = sample.len();
            out.points = (0..sample.len())
                .map(|i| assemble(m, &[i], sample.coords(i), T::zero()))
                .filter(|cp| query.region.accepts(cp.boundary_dist))
                .collect();
        }
        return Ok(out);
    }
    let cell = opts.cell_size.unwrap_or_else(|| {
        let n = T::from_usize_lossy(sample.len().max(1));
        let spacing = (m.total_volume() / n).powf(T::one() / T::from_usize_lossy(m.dim()));
        r_hi.min(spacing * T::lit(3.0))
    });
    let grid = NeighborGrid::new(m, sample, cell);
    let adj: Vec<Vec<usize>> = match opts.strategy {
        CandidateStrategy::NeighborGraph => upper_neighbors(m, sample, &grid, r_hi + r_hi),
        CandidateStrategy::Voronoi => voronoi::voronoi_neighbors(m, sample, &grid, r_hi)
            .into_iter()
            .enumerate()
            .map(|(i, list)| list.into_iter().filter(|&j| j > i).collect())
            .collect(),
    };
    let cutoff2 = (r_hi + r_hi) * (r_hi + r_hi);
    let shards: Vec<Result<(Vec<CriticalPoint<T>>, usize, usize)>> = (0..sample.len())
        .into_par_iter()
        .map(|i| {
            let mut found = Vec::new();
            let mut counts = (0, 0);
            let mut subset: VertexList = SmallVec::from_slice(&[i]);
            let mut visit = |subset: &VertexList| -> Result<()> {
                counts.0 += 1;
                match check_grid(m, sample, &grid, subset)? {
                    Criticality::Critical(cp) => {
                        if query.in_range(cp.radius) && query.region.accepts(cp.boundary_dist) {
                            found.push(cp);
                        }
                    }
                    Criticality::Degenerate => counts.1 += 1,
                    Criticality::NotCritical => {}
                }
                Ok(())
            };
            cliques(m, sample, &adj, cutoff2, k + 1, &mut subset, &adj[i], &mut visit)?;
            Ok((found, counts.0, counts.1))
        })
        .collect();
    for shard in shards {
        let (found, cand, degen) = shard?;
        out.points.extend(found);
        out.candidates += cand;
        out.degenerate += degen;
    }
    out.points.sort_by(|a, b| {
        a.radius
            .partial_cmp(&b.radius)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.vertices.cmp(&b.vertices))
    });
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn cliques<T: Real>(
    m: &ManifoldModel<T>,
    sample: &PointSample<T>,
    adj: &[Vec<usize>],
    cutoff2: T,
    size: usize,
    subset: &mut VertexList,
    candidates: &[usize],
    visit: &mut impl FnMut(&VertexList) -> Result<()>,
) -> Result<()> {
    if subset.len() == size {
        return visit(subset);
    }
    for (pos, &w) in candidates.iter().enumerate() {
        let pw = sample.coords(w);
        if subset.iter().any(|&u| m.dist2_raw(sample.coords(u), pw) > cutoff2) {
            continue;
        }
        let next: Vec<usize> = candidates[pos + 1..]
            .iter()
            .copied()
            .filter(|x| adj[w].binary_search(x).is_ok())
            .collect();
        subset.push(w);
        cliques(m, sample, adj, cutoff2, size, subset, &next, visit)?;
        subset.pop();
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EulerCheck {
    pub chi_complex: i64,
    pub chi_morse: i64,
    pub equal: bool,
}

/// Compares `χ` of the full Čech complex at `r` with the alternating count
/// of critical points of value at most `r`.
pub fn morse_euler_check<T: Real>(sample: &PointSample<T>, m: &ManifoldModel<T>, r: T) -> Result<EulerCheck> {
    if !(r > T::zero()) || !r.is_finite() {
        return domain(format!("radius must be positive, got {r}"));
    }
    m.check_chart_radius(r)?;
    let tie = T::lit(1e-10) * r.max(T::one());
    let complex = build_cech(m, sample, r, FULL_DIMENSION)?;
    for k in 1..=complex.max_dim() {
        if let Some(s) = complex.simplices(k).iter().find(|s| (s.filtration - r).abs() <= tie) {
            return Err(Error::NonGenericRadius {
                radius: r.to_f64_lossy(),
                critical: s.filtration.to_f64_lossy(),
            });
        }
    }
    let mut chi_morse = 0i64;
    for k in 0..=m.dim() {
        let pts = enumerate_critical_points(sample, m, &CriticalQuery::new(T::zero(), r, k))?;
        if let Some(cp) = pts.iter().find(|cp| k > 0 && (cp.radius - r).abs() <= tie) {
            return Err(Error::NonGenericRadius {
                radius: r.to_f64_lossy(),
                critical: cp.radius.to_f64_lossy(),
            });
        }
        let count = pts.len() as i64;
        chi_morse += if k % 2 == 0 { count } else { -count };
    }
    let chi_complex = euler_characteristic(&complex);
    Ok(EulerCheck {
        chi_complex,
        chi_morse,
        equal: chi_complex == chi_morse,
    })
}

/// Writes critical points as CSV: `k,rho,delta,c0..c{d-1},vertices` with the
/// vertex indices space-separated.
pub fn write_critical_csv<T: Real, W: Write>(points: &[CriticalPoint<T>], dim: usize, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["k".to_string(), "rho".into(), "delta".into()];
    header.extend((0..dim).map(|a| format!("c{a}")));
    header.push("vertices".into());
    w.write_record(&header)?;
    for cp in points {
        let mut row = vec![cp.index.to_string(), cp.radius.to_string(), cp.boundary_dist.to_string()];
        row.extend(cp.center.coords.iter().map(|x| x.to_string()));
        row.push(cp.vertices.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" "));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
