//! Θ-cycles, their boundary analogues, and conservative coverage nets.
//!
//! An index-`k` critical point whose `k`-simplex sits inside a covered
//! annulus (or, near `∂M`, a covered partial annulus) closes a new `k`-cycle
//! of the Čech complex when it appears. Coverage is certified on a finite net
//! at a deflated radius, so a certificate is never issued for an uncovered
//! region.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::cech::build_cech;
use crate::error::{domain, Result};
use crate::grid::NeighborGrid;
use crate::homology::betti_numbers;
use crate::manifold::{radius_for_lambda, Coords, ManifoldModel, Point, PointSample};
use crate::morse::{enumerate_critical_points, CriticalPoint, CriticalQuery};
use crate::scalar::{dot, norm2, Real};

/// Cone removed from an annulus: directions within `π/2 - phi_angle/2` of
/// `normal` are excluded.
#[derive(Clone, Debug, PartialEq)]
pub struct Aperture<T> {
    pub phi_angle: T,
    /// Unit vector towards the nearest boundary point.
    pub normal: Coords<T>,
}

/// `A_ε = closed ρ-ball minus open ερ-ball` around `center`, optionally cut
/// down to a partial annulus.
#[derive(Clone, Debug, PartialEq)]
pub struct AnnulusSpec<T> {
    pub center: Point<T>,
    pub rho: T,
    pub epsilon: T,
    pub aperture: Option<Aperture<T>>,
}

impl<T: Real> AnnulusSpec<T> {
    /// Whether the chart offset `v = x - center` lies in the annulus.
    pub fn contains_offset(&self, v: &[T]) -> bool {
        let len = norm2(v).sqrt();
        if len < self.epsilon * self.rho || len > self.rho {
            return false;
        }
        match &self.aperture {
            None => true,
            Some(a) => angle_between(v, &a.normal) > T::FRAC_PI_2() - a.phi_angle / T::lit(2.0),
        }
    }

    /// Membership in the `s`-dilation of the annulus, up to a superset.
    fn near_offset(&self, v: &[T], s: T) -> bool {
        let len = norm2(v).sqrt();
        let inner = self.epsilon * self.rho;
        if len < inner - s || len > self.rho + s {
            return false;
        }
        match &self.aperture {
            None => true,
            Some(a) => {
                if len <= s {
                    return true;
                }
                let slack = (s / inner.max(len - s).max(s)).min(T::one()).asin();
                angle_between(v, &a.normal) > T::FRAC_PI_2() - a.phi_angle / T::lit(2.0) - slack
            }
        }
    }
}

fn angle_between<T: Real>(a: &[T], b: &[T]) -> T {
    let na = norm2(a).sqrt();
    let nb = norm2(b).sqrt();
    if na == T::zero() || nb == T::zero() {
        return T::zero();
    }
    (dot(a, b) / (na * nb)).max(-T::one()).min(T::one()).acos()
}

#[derive(Clone, Debug, PartialEq)]
pub enum Region<T> {
    Annulus(AnnulusSpec<T>),
    Manifold,
}

/// Net points in chart coordinates; every region point lies within
/// `spacing` of one of them.
#[derive(Clone, Debug, PartialEq)]
pub struct CoverageNet<T> {
    pub points: Vec<Coords<T>>,
    pub spacing: T,
}

impl<T: Real> CoverageNet<T> {
    pub fn build(m: &ManifoldModel<T>, region: &Region<T>, spacing: T) -> Result<Self> {
        if !(spacing > T::zero()) || !spacing.is_finite() {
            return domain(format!("net spacing must be positive, got {spacing}"));
        }
        let mut points = Vec::new();
        match region {
            Region::Annulus(spec) => for_each_annulus_net_point(m, spec, spacing, |q| points.push(q.clone())),
            Region::Manifold => for_each_manifold_net_point(m, spacing, |q| {
                points.push(q.clone());
                true
            }),
        }
        Ok(CoverageNet { points, spacing })
    }
}

fn lattice_step<T: Real>(d: usize, s: T) -> T {
    (s + s) / T::from_usize_lossy(d).sqrt()
}

fn for_each_annulus_net_point<T: Real>(m: &ManifoldModel<T>, spec: &AnnulusSpec<T>, s: T, mut f: impl FnMut(&Coords<T>)) {
    let d = m.dim();
    let h = lattice_step(d, s);
    let half = ((spec.rho + s) / h).ceil().to_f64_lossy() as i64;
    let side = (2 * half + 1) as usize;
    let total = side.pow(d as u32);
    let c = &spec.center.coords;
    let mut v: Coords<T> = SmallVec::from_elem(T::zero(), d);
    for flat in 0..total {
        let mut rest = flat;
        for a in 0..d {
            let i = (rest % side) as i64 - half;
            rest /= side;
            v[a] = T::from_f64(i as f64).unwrap() * h;
        }
        if !spec.near_offset(&v, s) {
            continue;
        }
        let q: Coords<T> = c.iter().zip(&v).map(|(&a, &b)| a + b).collect();
        if m.distance_to_manifold(&q) <= s {
            f(&q);
        }
    }
}

/// Calls `f` on cell centres of a lattice of step at most `2s/√d` over the
/// fundamental domain; stops when `f` returns false.
fn for_each_manifold_net_point<T: Real>(m: &ManifoldModel<T>, s: T, mut f: impl FnMut(&Coords<T>) -> bool) {
    let d = m.dim();
    let h = lattice_step(d, s);
    let mut counts: SmallVec<[usize; 3]> = SmallVec::new();
    let mut steps: Coords<T> = SmallVec::new();
    let mut lows: Coords<T> = SmallVec::new();
    for a in 0..d {
        let (lo, hi) = m.axis_extent(a);
        let n = ((hi - lo) / h).ceil().to_f64_lossy().max(1.0) as usize;
        counts.push(n);
        steps.push((hi - lo) / T::from_usize_lossy(n));
        lows.push(lo);
    }
    let total: usize = counts.iter().product();
    let mut q: Coords<T> = SmallVec::from_elem(T::zero(), d);
    for flat in 0..total {
        let mut rest = flat;
        for a in (0..d).rev() {
            let i = rest % counts[a];
            rest /= counts[a];
            q[a] = lows[a] + (T::from_usize_lossy(i) + T::lit(0.5)) * steps[a];
        }
        if m.distance_to_manifold(&q) <= s && !f(&q) {
            return;
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Coverage<T> {
    pub certified: bool,
    /// `min (rho_cover - s - nearest)` over the net, with nearest-sample
    /// distances truncated at `rho_cover`. `+∞` for an empty net.
    pub margin: T,
    pub net_size: usize,
}

/// Certifies `region ⊂ B_rho_cover(sample)` with a net of spacing `s`
/// (default `rho_cover / 20`).
pub fn region_covered<T: Real>(
    sample: &PointSample<T>,
    m: &ManifoldModel<T>,
    region: &Region<T>,
    rho_cover: T,
    spacing: Option<T>,
) -> Result<Coverage<T>> {
    let grid = NeighborGrid::new(m, sample, rho_cover);
    region_covered_with_grid(sample, m, &grid, region, rho_cover, spacing, false)
}

/// As [`region_covered`] with a prebuilt grid. With `stop_early` the scan
/// ends at the first uncovered net point and the margin is only an upper
/// bound.
pub fn region_covered_with_grid<T: Real>(
    sample: &PointSample<T>,
    m: &ManifoldModel<T>,
    grid: &NeighborGrid<T>,
    region: &Region<T>,
    rho_cover: T,
    spacing: Option<T>,
    stop_early: bool,
) -> Result<Coverage<T>> {
    if !(rho_cover > T::zero()) || !rho_cover.is_finite() {
        return domain(format!("cover radius must be positive, got {rho_cover}"));
    }
    let s = spacing.unwrap_or(rho_cover / T::lit(20.0));
    if !(s > T::zero()) {
        return domain(format!("net spacing must be positive, got {s}"));
    }
    if s >= rho_cover {
        return domain(format!("net spacing {s} must be below the cover radius {rho_cover}"));
    }
    let mut margin = T::infinity();
    let mut net_size = 0;
    let mut visit = |q: &Coords<T>| -> bool {
        net_size += 1;
        let nearest = grid.nearest_distance(m, sample, q, rho_cover).min(rho_cover);
        margin = margin.min(rho_cover - s - nearest);
        !(stop_early && margin < T::zero())
    };
    match region {
        Region::Annulus(spec) => {
            let mut go = true;
            for_each_annulus_net_point(m, spec, s, |q| {
                if go {
                    go = visit(q);
                }
            });
        }
        Region::Manifold => for_each_manifold_net_point(m, s, visit),
    }
    Ok(Coverage {
        certified: margin >= T::zero(),
        margin,
        net_size,
    })
}

/// `φ(Y) = (1 / 2ρ) · min_{v ∈ ∂Δ} |v|` with `Δ = conv{2(c - y_i)}` and
/// `∂Δ` its relative boundary; zero when the origin is not interior.
pub fn phi_of<T: Real>(cp: &CriticalPoint<T>, m: &ManifoldModel<T>, sample: &PointSample<T>) -> T {
    let lifted = cp.lifted_vertices(m, sample);
    phi_of_lifted(&cp.center.coords, cp.radius, &lifted)
}

/// [`phi_of`] on explicit chart coordinates. The map `y -> 2(c - y)` scales
/// by two, so `φ` is the distance from `c` to the relative boundary of
/// `conv(Y)` divided by `ρ`, i.e. `min_i` of the signed distance from `c`
/// to the facet opposite `y_i`.
pub fn phi_of_lifted<T: Real>(center: &[T], rho: T, lifted: &[Coords<T>]) -> T {
    let k = lifted.len().saturating_sub(1);
    if k == 0 || !(rho > T::zero()) {
        return T::zero();
    }
    let mut best = T::infinity();
    for i in 0..=k {
        let facet: SmallVec<[Coords<T>; 4]> = (0..=k).filter(|&j| j != i).map(|j| lifted[j].clone()).collect();
        let up: Coords<T> = lifted[i].iter().zip(facet[0].iter()).map(|(&a, &b)| a - b).collect();
        let normal = project_out(&up, &facet);
        let h = norm2(&normal).sqrt();
        if !(h > T::zero()) || h <= T::degeneracy_tol().sqrt() * norm2(&up).sqrt() {
            return T::zero();
        }
        let to: Coords<T> = center.iter().zip(facet[0].iter()).map(|(&a, &b)| a - b).collect();
        best = best.min(dot(&to, &normal) / h);
    }
    if best > T::zero() {
        best / rho
    } else {
        T::zero()
    }
}

/// Component of `v` orthogonal to the direction space of `facet`.
fn project_out<T: Real>(v: &[T], facet: &[Coords<T>]) -> Coords<T> {
    let base = &facet[0];
    let mut basis: SmallVec<[Coords<T>; 4]> = SmallVec::new();
    for q in &facet[1..] {
        let mut e: Coords<T> = q.iter().zip(base.iter()).map(|(&a, &b)| a - b).collect();
        for b in &basis {
            let t = dot(&e, b);
            for (x, &y) in e.iter_mut().zip(b.iter()) {
                *x -= t * y;
            }
        }
        let len = norm2(&e).sqrt();
        if len > T::zero() {
            e.iter_mut().for_each(|x| *x /= len);
            basis.push(e);
        }
    }
    let mut r: Coords<T> = SmallVec::from_slice(v);
    for b in &basis {
        let t = dot(&r, b);
        for (x, &y) in r.iter_mut().zip(b.iter()) {
            *x -= t * y;
        }
    }
    r
}

/// Deterministic sample of the relative boundary of `conv(lifted)`: a
/// barycentric lattice on every facet with at least `density` points each.
fn boundary_samples<T: Real>(lifted: &[Coords<T>], density: usize, mut f: impl FnMut(&Coords<T>) -> bool) -> bool {
    let k = lifted.len() - 1;
    let fdim = k - 1;
    let mut res = 1usize;
    while binomial(res + fdim, fdim) < density && fdim > 0 {
        res += 1;
    }
    for skip in 0..=k {
        let facet: SmallVec<[&Coords<T>; 4]> = (0..=k).filter(|&j| j != skip).map(|j| &lifted[j]).collect();
        if fdim == 0 {
            if !f(facet[0]) {
                return false;
            }
            continue;
        }
        let mut ok = true;
        lattice(fdim + 1, res, &mut SmallVec::new(), &mut |w: &[usize]| {
            if !ok {
                return;
            }
            let d = facet[0].len();
            let mut x: Coords<T> = SmallVec::from_elem(T::zero(), d);
            for (&wi, p) in w.iter().zip(&facet) {
                let t = T::from_usize_lossy(wi) / T::from_usize_lossy(res);
                for a in 0..d {
                    x[a] += t * p[a];
                }
            }
            ok = f(&x);
        });
        if !ok {
            return false;
        }
    }
    true
}

fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

fn lattice(parts: usize, left: usize, prefix: &mut SmallVec<[usize; 4]>, f: &mut impl FnMut(&[usize])) {
    if parts == 1 {
        prefix.push(left);
        f(prefix);
        prefix.pop();
        return;
    }
    for i in 0..=left {
        prefix.push(i);
        lattice(parts - 1, left - i, prefix, f);
        prefix.pop();
    }
}

/// `½ · sup{ε : ∂Δ ⊂ A_ε}` estimated on a boundary sample, optionally with
/// the angular constraint of a partial annulus.
fn sampled_half_sup<T: Real>(center: &[T], rho: T, lifted: &[Coords<T>], aperture: Option<&Aperture<T>>, density: usize) -> T {
    if lifted.len() < 2 || !(rho > T::zero()) {
        return T::zero();
    }
    let mut ratio = T::one();
    let limit = aperture.map(|a| T::FRAC_PI_2() - a.phi_angle / T::lit(2.0));
    let complete = boundary_samples(lifted, density, |x| {
        let v: Coords<T> = x.iter().zip(center.iter()).map(|(&a, &b)| a - b).collect();
        let len = norm2(&v).sqrt();
        if let (Some(a), Some(lim)) = (aperture, limit) {
            if len == T::zero() || angle_between(&v, &a.normal) <= lim {
                return false;
            }
        }
        ratio = ratio.min(len / rho);
        true
    });
    if complete {
        ratio / T::lit(2.0)
    } else {
        T::zero()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PsiEstimate<T> {
    pub value: T,
    /// Doubling the sampling density moved the estimate by less than `1e-3`.
    pub converged: bool,
}

/// `ψ(Y, φ)` with a convergence self-check. Centers farther than `ρ` from
/// the boundary fall back to [`phi_of`].
pub fn psi_estimate<T: Real>(
    cp: &CriticalPoint<T>,
    m: &ManifoldModel<T>,
    sample: &PointSample<T>,
    phi_angle: T,
    density: usize,
) -> PsiEstimate<T> {
    let normal = m.boundary_normal(&cp.center.coords);
    let Some(normal) = normal.filter(|_| cp.boundary_dist <= cp.radius) else {
        return PsiEstimate {
            value: phi_of(cp, m, sample),
            converged: true,
        };
    };
    let lifted = cp.lifted_vertices(m, sample);
    let aperture = Aperture { phi_angle, normal };
    let coarse = sampled_half_sup(&cp.center.coords, cp.radius, &lifted, Some(&aperture), density);
    let fine = sampled_half_sup(&cp.center.coords, cp.radius, &lifted, Some(&aperture), 2 * density);
    PsiEstimate {
        value: fine,
        converged: (fine - coarse).abs() < T::lit(1e-3),
    }
}

pub const DEFAULT_PSI_DENSITY: usize = 1000;

pub fn psi_of<T: Real>(cp: &CriticalPoint<T>, m: &ManifoldModel<T>, sample: &PointSample<T>, phi_angle: T) -> T {
    psi_estimate(cp, m, sample, phi_angle, DEFAULT_PSI_DENSITY).value
}

/// `ψ` without the angular cut: `½ · sup{ε : ∂Δ ⊂ A_ε}`.
pub fn phi_analogue<T: Real>(cp: &CriticalPoint<T>, m: &ManifoldModel<T>, sample: &PointSample<T>) -> T {
    let lifted = cp.lifted_vertices(m, sample);
    sampled_half_sup(&cp.center.coords, cp.radius, &lifted, None, 2 * DEFAULT_PSI_DENSITY)
}

/// Partial-annulus `ψ` on explicit chart coordinates.
pub fn psi_of_lifted<T: Real>(center: &[T], rho: T, lifted: &[Coords<T>], aperture: &Aperture<T>, density: usize) -> T {
    sampled_half_sup(center, rho, lifted, Some(aperture), density)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CycleKind {
    Theta,
    ThetaLike,
}

impl CycleKind {
    pub fn name(self) -> &'static str {
        match self {
            CycleKind::Theta => "theta",
            CycleKind::ThetaLike => "theta_like",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ThetaRecord<T> {
    pub critical: CriticalPoint<T>,
    pub kind: CycleKind,
    /// `φ(Y)` for Θ-cycles, `ψ(Y, φ)` for Θ-like-cycles.
    pub value: T,
    pub certified: bool,
    pub margin: T,
    pub net_spacing: T,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectorParams<T> {
    pub k: usize,
    pub r1: T,
    pub r: T,
    pub r2: T,
    pub eps_min: T,
    /// Collar depth band `[delta, 2 delta]` for Θ-like-cycles.
    pub delta: T,
    pub phi_angle: T,
    /// Net spacing is `rho / net_factor`.
    pub net_factor: T,
    pub psi_density: usize,
}

impl<T: Real> DetectorParams<T> {
    pub fn new(k: usize, r1: T, r: T, r2: T, eps_min: T) -> Self {
        DetectorParams {
            k,
            r1,
            r,
            r2,
            eps_min,
            delta: r / T::lit(10.0),
            phi_angle: T::lit(0.1),
            net_factor: T::lit(20.0),
            psi_density: DEFAULT_PSI_DENSITY,
        }
    }

    fn validate(&self, m: &ManifoldModel<T>, boundary: bool) -> Result<()> {
        if self.k == 0 || self.k + 1 > m.dim() {
            return domain(format!("cycle index must lie in 1..={}, got {}", m.dim().saturating_sub(1), self.k));
        }
        if !(self.r1 < self.r && self.r < self.r2) || !(self.r > T::zero()) {
            return domain(format!("need r1 < r < r2, got {} {} {}", self.r1, self.r, self.r2));
        }
        if !(self.eps_min > T::zero() && self.eps_min < T::one()) {
            return domain(format!("eps_min must lie in (0, 1), got {}", self.eps_min));
        }
        if !(self.net_factor > T::one()) {
            return domain(format!("net factor must exceed 1, got {}", self.net_factor));
        }
        if boundary {
            if !(self.delta > T::zero() && self.delta < self.r) {
                return domain(format!("need 0 < delta < r, got {}", self.delta));
            }
            if !(self.phi_angle > T::zero() && self.phi_angle < T::PI()) {
                return domain(format!("phi angle must lie in (0, π), got {}", self.phi_angle));
            }
        }
        m.check_chart_radius(self.r2)
    }
}

/// Detector parameters at scale `Λ`: `r = radius_for_lambda`, `δ = r / log n`,
/// `φ = c_phi / log n`, `r1 = r(1 - 1/(2 c_g² Λ²))`, `r2 = r(1 + 1/Λ)` and
/// `eps_min = 0.05`.
pub fn default_detector_params<T: Real>(n: T, d: usize, k: usize, lambda: T, c_phi: T, c_g: T) -> Result<DetectorParams<T>> {
    if !(n >= T::lit(3.0)) {
        return domain(format!("detector defaults need n >= 3, got {n}"));
    }
    if !(c_g > T::zero()) || !(c_phi > T::zero()) {
        return domain("c_phi and c_g must be positive");
    }
    let r = radius_for_lambda(n, d, lambda)?;
    let log_n = n.ln();
    let r1 = r * (T::one() - T::one() / (T::lit(2.0) * c_g * c_g * lambda * lambda));
    let r2 = r * (T::one() + T::one() / lambda);
    let mut p = DetectorParams::new(k, r1, r, r2, T::lit(0.05));
    p.delta = r / log_n;
    p.phi_angle = c_phi / log_n;
    Ok(p)
}

/// Θ-cycles with `ρ ∈ (r1, r]`: `B_{r2}(c) ∩ P = Y`, `φ >= eps_min`,
/// `δ > r2`, and a certified covering of `A_{eps_min}` at radius `ρ`.
pub fn detect_theta_cycles<T: Real>(
    sample: &PointSample<T>,
    m: &ManifoldModel<T>,
    params: &DetectorParams<T>,
) -> Result<Vec<ThetaRecord<T>>> {
    params.validate(m, false)?;
    detect(sample, m, params, CycleKind::Theta)
}

/// Θ-like-cycles with `ρ ∈ (r1, r]`: `δ <= dist(c, ∂M) <= 2δ`,
/// `B_{r2}(c) ∩ P = Y`, `ψ >= eps_min`, and a certified covering of the
/// partial annulus at radius `ρ`.
pub fn detect_theta_like_cycles<T: Real>(
    sample: &PointSample<T>,
    m: &ManifoldModel<T>,
    params: &DetectorParams<T>,
) -> Result<Vec<ThetaRecord<T>>> {
    params.validate(m, true)?;
    detect(sample, m, params, CycleKind::ThetaLike)
}

fn detect<T: Real>(sample: &PointSample<T>, m: &ManifoldModel<T>, p: &DetectorParams<T>, kind: CycleKind) -> Result<Vec<ThetaRecord<T>>> {
    if kind == CycleKind::ThetaLike && !m.has_boundary() {
        return Ok(Vec::new());
    }
    let query = CriticalQuery::new(p.r1.max(T::zero()), p.r, p.k);
    let critical = enumerate_critical_points(sample, m, &query)?;
    let grid = NeighborGrid::new(m, sample, p.r2);
    let records: Vec<Result<Option<ThetaRecord<T>>>> = critical
        .into_par_iter()
        .map(|cp| {
            let depth_ok = match kind {
                CycleKind::Theta => cp.boundary_dist > p.r2,
                CycleKind::ThetaLike => cp.boundary_dist >= p.delta && cp.boundary_dist <= p.delta + p.delta,
            };
            if !depth_ok {
                return Ok(None);
            }
            if grid.within(m, sample, &cp.center.coords, p.r2).as_slice() != cp.vertices.as_slice() {
                return Ok(None);
            }
            let (value, aperture) = match kind {
                CycleKind::Theta => (phi_of(&cp, m, sample), None),
                CycleKind::ThetaLike => {
                    let Some(normal) = m.boundary_normal(&cp.center.coords) else {
                        return Ok(None);
                    };
                    let est = psi_estimate(&cp, m, sample, p.phi_angle, p.psi_density);
                    (
                        est.value,
                        Some(Aperture {
                            phi_angle: p.phi_angle,
                            normal,
                        }),
                    )
                }
            };
            if !(value >= p.eps_min) {
                return Ok(None);
            }
            let spacing = cp.radius / p.net_factor;
            let region = Region::Annulus(AnnulusSpec {
                center: cp.center.clone(),
                rho: cp.radius,
                epsilon: p.eps_min,
                aperture,
            });
            let cov = region_covered_with_grid(sample, m, &grid, &region, cp.radius, Some(spacing), false)?;
            if !cov.certified {
                return Ok(None);
            }
            Ok(Some(ThetaRecord {
                critical: cp,
                kind,
                value,
                certified: true,
                margin: cov.margin,
                net_spacing: spacing,
            }))
        })
        .collect();
    let mut out = Vec::new();
    for r in records {
        if let Some(rec) = r? {
            out.push(rec);
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SoundnessAudit {
    pub beta_before: usize,
    pub beta_at: usize,
    pub increased: bool,
}

/// Offset below a critical value at which the "before" complex is built.
pub const AUDIT_GAP: f64 = 1e-9;

/// Recomputes `β_k` just below and at the record's critical value. The
/// upper complex is built a hair above `ρ` so that the simplex of `Y`, whose
/// computed miniball may round above `ρ`, is present.
pub fn audit_detection<T: Real>(sample: &PointSample<T>, m: &ManifoldModel<T>, rec: &ThetaRecord<T>) -> Result<SoundnessAudit> {
    let k = rec.critical.index;
    let rho = rec.critical.radius;
    let at = rho + T::lit(1e-12) * rho.max(T::one());
    let before = rho - T::lit(AUDIT_GAP);
    let b_at = betti_numbers(&build_cech(m, sample, at, k + 1)?, k).get(k).unwrap_or(0);
    let b_before = betti_numbers(&build_cech(m, sample, before, k + 1)?, k).get(k).unwrap_or(0);
    Ok(SoundnessAudit {
        beta_before: b_before,
        beta_at: b_at,
        increased: b_at > b_before,
    })
}

/// Writes records as CSV: `kind,k,rho,delta,phi_or_psi,certified,margin`.
pub fn write_theta_csv<T: Real, W: Write>(records: &[ThetaRecord<T>], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["kind", "k", "rho", "delta", "phi_or_psi", "certified", "margin"])?;
    for r in records {
        w.write_record([
            r.kind.name().to_string(),
            r.critical.index.to_string(),
            r.critical.radius.to_string(),
            r.critical.boundary_dist.to_string(),
            r.value.to_string(),
            r.certified.to_string(),
            r.margin.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::morse::{is_critical, Criticality};

    fn c(v: &[f64]) -> Coords<f64> {
        Coords::from_slice(v)
    }

    fn sample(points: &[[f64; 2]]) -> PointSample<f64> {
        PointSample::from_points(points.iter().map(|p| Point::new(p)).collect())
    }

    /// Pair `c ± ρ(cos θ, sin θ)` plus a ring of `count` points at radius
    /// `shell`, dropping ring points outside `M`.
    fn fixture(m: &ManifoldModel<f64>, center: [f64; 2], rho: f64, theta: f64, shell: f64, count: usize) -> PointSample<f64> {
        let (s, co) = theta.sin_cos();
        let mut pts = vec![
            [center[0] - rho * co, center[1] - rho * s],
            [center[0] + rho * co, center[1] + rho * s],
        ];
        for i in 0..count {
            let t = i as f64 / count as f64 * std::f64::consts::TAU + 0.0123;
            let p = [center[0] + shell * t.cos(), center[1] + shell * t.sin()];
            if m.contains_chart(&p) {
                pts.push(p);
            }
        }
        sample(&pts)
    }

    fn critical(m: &ManifoldModel<f64>, s: &PointSample<f64>, v: &[usize]) -> CriticalPoint<f64> {
        match is_critical(v, s, m).unwrap() {
            Criticality::Critical(cp) => cp,
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn phi_examples() {
        let h = 3f64.sqrt() / 2.0;
        let tri = [c(&[0.0, 0.0]), c(&[1.0, 0.0]), c(&[0.5, h])];
        let rho = 1.0 / 3f64.sqrt();
        let phi = phi_of_lifted(&[0.5, h / 3.0], rho, &tri);
        assert!((phi - 0.5).abs() < 1e-12, "{phi}");
        let pair = [c(&[0.0, 0.0]), c(&[1.0, 0.0])];
        assert!((phi_of_lifted(&[0.5, 0.0], 0.5, &pair) - 1.0).abs() < 1e-15);
        let mut last = 1.0;
        for eps in [0.3, 0.1, 0.03, 0.01] {
            let sliver = [c(&[0.0, 0.0]), c(&[eps, 0.0]), c(&[eps / 2.0, 1.0])];
            let y = (1.0 - eps * eps / 4.0) / 2.0;
            let phi = phi_of_lifted(&[eps / 2.0, y], 1.0 - y, &sliver);
            assert!(phi > 0.0);
            assert!(phi < last);
            last = phi;
        }
        assert!(last < 0.05);
    }

    #[test]
    fn one_point_torus_coverage() {
        let m = ManifoldModel::<f64>::torus(&[1.0, 1.0]).unwrap();
        let s = sample(&[[0.5, 0.5]]);
        assert!(region_covered(&s, &m, &Region::Manifold, 0.75, None).unwrap().certified);
        let cov = region_covered(&s, &m, &Region::Manifold, 0.5, None).unwrap();
        assert!(!cov.certified && cov.margin < 0.0);
        assert!(region_covered(&s, &m, &Region::Manifold, 0.5, Some(0.5)).is_err());
    }

    #[test]
    fn theta_fixture_on_torus() {
        let m = ManifoldModel::<f64>::torus(&[1.0, 1.0]).unwrap();
        let rho = 0.0499;
        let s = fixture(&m, [0.5, 0.5], rho, 0.3, 1.15 * rho, 100);
        let p = DetectorParams::new(1, 0.045, 0.05, 0.055, 0.4);
        let recs = detect_theta_cycles(&s, &m, &p).unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].critical.vertices.as_slice(), &[0, 1]);
        assert!((recs[0].value - 1.0).abs() < 1e-9);
        assert!(audit_detection(&s, &m, &recs[0]).unwrap().increased);

        let mut pts = s.points.clone();
        pts.push(Point::new(&[0.5, 0.5 + 1.05 * rho]));
        let crowded = PointSample::from_points(pts);
        assert!(detect_theta_cycles(&crowded, &m, &p).unwrap().is_empty());
        let strict = DetectorParams::new(1, 0.045, 0.05, 0.055, 0.05);
        assert!(detect_theta_cycles(&s, &m, &strict).unwrap().is_empty());
    }

    fn boundary_params(delta: f64) -> DetectorParams<f64> {
        let mut p = DetectorParams::new(1, 0.045, 0.05, 0.055, 0.4);
        p.delta = delta;
        p.phi_angle = 0.2;
        p
    }

    #[test]
    fn theta_like_fixture_on_cylinder() {
        let m = ManifoldModel::<f64>::cylinder(&[1.0], 1.0).unwrap();
        let rho = 0.0499;
        let s = fixture(&m, [0.5, 0.045], rho, 0.0, 1.15 * rho, 100);
        let recs = detect_theta_like_cycles(&s, &m, &boundary_params(0.03)).unwrap();
        assert_eq!(recs.len(), 1);
        assert!((recs[0].value - 0.5).abs() < 1e-9);
        assert!(audit_detection(&s, &m, &recs[0]).unwrap().increased);
        assert!(detect_theta_like_cycles(&s, &m, &boundary_params(0.01)).unwrap().is_empty());

        let normal = fixture(&m, [0.5, 0.045], rho, std::f64::consts::FRAC_PI_3, 1.15 * rho, 100);
        assert!(detect_theta_like_cycles(&normal, &m, &boundary_params(0.03)).unwrap().is_empty());
        let cp = critical(&m, &normal, &[0, 1]);
        assert_eq!(psi_of(&cp, &m, &normal, 0.2), 0.0);
    }

    #[test]
    fn torus_has_no_theta_like_cycles() {
        let m = ManifoldModel::<f64>::torus(&[1.0, 1.0]).unwrap();
        let s = fixture(&m, [0.5, 0.045], 0.0499, 0.0, 0.057, 100);
        assert!(detect_theta_like_cycles(&s, &m, &boundary_params(0.03)).unwrap().is_empty());
    }

    #[test]
    fn psi_tangential_and_fallback() {
        let m = ManifoldModel::<f64>::cylinder(&[1.0], 1.0).unwrap();
        let s = sample(&[[0.45, 0.03], [0.55, 0.03]]);
        let cp = critical(&m, &s, &[0, 1]);
        let est = psi_estimate(&cp, &m, &s, 0.5, 1000);
        assert!(est.converged);
        assert!((est.value - phi_analogue(&cp, &m, &s)).abs() < 1e-12);
        assert!(est.value > 0.0);
        let deep = sample(&[[0.45, 0.5], [0.55, 0.5 + 1e-3]]);
        let cp = critical(&m, &deep, &[0, 1]);
        assert_eq!(psi_of(&cp, &m, &deep, 0.5), phi_of(&cp, &m, &deep));
    }

    #[test]
    fn default_params_formulas() {
        let n = 10f64.exp();
        let p = default_detector_params(n, 2, 1, 10.0, 1.0, 1.0).unwrap();
        assert!((p.delta - p.r / 10.0).abs() < 1e-15);
        assert!((p.r2 / p.r - 1.1).abs() < 1e-12);
        assert!((p.phi_angle - 0.1).abs() < 1e-12);
        assert!(p.r1 < p.r && p.r < p.r2);
        assert!(default_detector_params(2.0, 2, 1, 10.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn csv_header() {
        let mut buf = Vec::new();
        write_theta_csv::<f64, _>(&[], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "kind,k,rho,delta,phi_or_psi,certified,margin\n");
    }
}
