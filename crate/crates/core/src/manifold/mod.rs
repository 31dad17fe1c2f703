//! Flat compact manifolds, their geodesic distance, boundary geometry and
//! homogeneous Poisson sampling.
//!
//! All models are flat, so geodesic normal coordinates are Euclidean and a
//! single fundamental-domain chart suffices. Curvature correction terms are
//! identically zero.
//!
//! Coordinate conventions:
//! - `FlatTorus`: `d` periodic axes, coordinates in `[0, L_i)`.
//! - `FlatCylinder`: the first `d - 1` axes are periodic, the last axis is the
//!   boundary interval `[0, L]`.
//! - `SolidDisk`: the closed disk of radius `R` centred at the origin.

mod sampling;
mod volume;

pub use sampling::{derive_seed, read_points_csv, sample_poisson, splitmix64, write_points_csv, PointSample};
pub use volume::{
    ball_volume_capped, g_function, integrate_adaptive, lambda_param, radius_for_lambda,
    unit_ball_volume, upper_incomplete_gamma,
};

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{domain, Error, Result};
use crate::scalar::{norm2, Real};

/// Inline coordinate storage; every supported dimension fits on the stack.
pub type Coords<T> = SmallVec<[T; 3]>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ManifoldKind {
    FlatTorus,
    FlatCylinder,
    SolidDisk,
}

impl ManifoldKind {
    pub fn name(self) -> &'static str {
        match self {
            ManifoldKind::FlatTorus => "torus",
            ManifoldKind::FlatCylinder => "cylinder",
            ManifoldKind::SolidDisk => "disk",
        }
    }
}

/// A point in the fundamental-domain chart of a manifold.
#[derive(Clone, Debug, PartialEq)]
pub struct Point<T> {
    pub coords: Coords<T>,
}

impl<T: Real> Point<T> {
    pub fn new(coords: &[T]) -> Self {
        Point {
            coords: Coords::from_slice(coords),
        }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }
}

impl<T: Real> From<&[T]> for Point<T> {
    fn from(c: &[T]) -> Self {
        Point::new(c)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ManifoldModel<T> {
    kind: ManifoldKind,
    dim: usize,
    /// torus: `d` periodic lengths; cylinder: `d - 1` periodic lengths then
    /// the interval length; disk: `[R]`.
    shape: Coords<T>,
    total_volume: T,
    injectivity_radius: T,
}

impl<T: Real> ManifoldModel<T> {
    /// Flat torus `R^d / (L_1 Z × … × L_d Z)` for `d ∈ {2, 3}`.
    pub fn torus(lengths: &[T]) -> Result<Self> {
        let d = lengths.len();
        if !(2..=3).contains(&d) {
            return domain(format!("torus dimension must be 2 or 3, got {d}"));
        }
        check_lengths(lengths)?;
        let min = lengths.iter().copied().fold(T::infinity(), T::min);
        Ok(ManifoldModel {
            kind: ManifoldKind::FlatTorus,
            dim: d,
            shape: Coords::from_slice(lengths),
            total_volume: lengths.iter().copied().fold(T::one(), |a, b| a * b),
            injectivity_radius: min / T::lit(2.0),
        })
    }

    /// Flat cylinder `T^{d-1} × [0, L]` with the given periodic lengths.
    pub fn cylinder(periodic: &[T], interval: T) -> Result<Self> {
        let d = periodic.len() + 1;
        if !(2..=3).contains(&d) {
            return domain(format!("cylinder dimension must be 2 or 3, got {d}"));
        }
        check_lengths(periodic)?;
        check_lengths(&[interval])?;
        let min = periodic.iter().copied().fold(T::infinity(), T::min);
        let mut shape = Coords::from_slice(periodic);
        shape.push(interval);
        Ok(ManifoldModel {
            kind: ManifoldKind::FlatCylinder,
            dim: d,
            total_volume: shape.iter().copied().fold(T::one(), |a, b| a * b),
            shape,
            injectivity_radius: min / T::lit(2.0),
        })
    }

    /// Closed disk of radius `R` in the plane.
    pub fn disk(radius: T) -> Result<Self> {
        check_lengths(&[radius])?;
        Ok(ManifoldModel {
            kind: ManifoldKind::SolidDisk,
            dim: 2,
            shape: Coords::from_slice(&[radius]),
            total_volume: T::PI() * radius * radius,
            injectivity_radius: T::infinity(),
        })
    }

    /// The unit-volume member of a family: cube-shaped torus, cylinder with
    /// all lengths equal, or the disk of area one.
    pub fn unit_volume(kind: ManifoldKind, dim: usize) -> Result<Self> {
        match kind {
            ManifoldKind::FlatTorus => Self::torus(&vec![T::one(); dim]),
            ManifoldKind::FlatCylinder => {
                if dim < 2 {
                    return domain("cylinder dimension must be at least 2");
                }
                Self::cylinder(&vec![T::one(); dim - 1], T::one())
            }
            ManifoldKind::SolidDisk => {
                if dim != 2 {
                    return domain("the disk model is two-dimensional");
                }
                Self::disk((T::one() / T::PI()).sqrt())
            }
        }
    }

    /// Rescales every length so that the total volume becomes one.
    pub fn normalized(&self) -> Result<Self> {
        let scale = (T::one() / self.total_volume).powf(T::one() / T::from_usize_lossy(self.dim));
        let shape: Coords<T> = self.shape.iter().map(|&l| l * scale).collect();
        match self.kind {
            ManifoldKind::FlatTorus => Self::torus(&shape),
            ManifoldKind::FlatCylinder => Self::cylinder(&shape[..self.dim - 1], shape[self.dim - 1]),
            ManifoldKind::SolidDisk => Self::disk(shape[0]),
        }
    }

    pub fn kind(&self) -> ManifoldKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn shape(&self) -> &[T] {
        &self.shape
    }

    pub fn total_volume(&self) -> T {
        self.total_volume
    }

    pub fn has_boundary(&self) -> bool {
        self.kind != ManifoldKind::FlatTorus
    }

    pub fn injectivity_radius(&self) -> T {
        self.injectivity_radius
    }

    /// Period of axis `axis`, or `None` for a non-periodic axis.
    #[inline]
    pub fn period(&self, axis: usize) -> Option<T> {
        match self.kind {
            ManifoldKind::FlatTorus => Some(self.shape[axis]),
            ManifoldKind::FlatCylinder if axis + 1 < self.dim => Some(self.shape[axis]),
            _ => None,
        }
    }

    /// Axis-aligned extent `[lo, hi)` of the fundamental domain along `axis`.
    pub fn axis_extent(&self, axis: usize) -> (T, T) {
        match self.kind {
            ManifoldKind::SolidDisk => (-self.shape[0], self.shape[0]),
            _ => (T::zero(), self.shape[axis]),
        }
    }

    /// A short description such as `torus(1,1)`.
    pub fn label(&self) -> String {
        let parts: Vec<String> = self.shape.iter().map(|l| format!("{l}")).collect();
        format!("{}({})", self.kind.name(), parts.join(","))
    }

    pub fn validate_point(&self, p: &[T]) -> Result<()> {
        if p.len() != self.dim {
            return domain(format!("point has {} coordinates, manifold has dimension {}", p.len(), self.dim));
        }
        if p.iter().any(|x| !x.is_finite()) {
            return domain("point has non-finite coordinates");
        }
        let ok = match self.kind {
            ManifoldKind::FlatTorus | ManifoldKind::FlatCylinder => (0..self.dim).all(|a| {
                let x = p[a];
                match self.period(a) {
                    Some(l) => x >= T::zero() && x < l,
                    None => x >= T::zero() && x <= self.shape[a],
                }
            }),
            ManifoldKind::SolidDisk => norm2(p) <= self.shape[0] * self.shape[0],
        };
        if ok {
            Ok(())
        } else {
            domain(format!("point {p:?} lies outside {}", self.label()))
        }
    }

    /// Reduces periodic coordinates into the fundamental domain.
    pub fn wrap(&self, x: &[T]) -> Coords<T> {
        let mut out = Coords::from_slice(x);
        for (a, v) in out.iter_mut().enumerate() {
            if let Some(l) = self.period(a) {
                let mut w = *v - l * (*v / l).floor();
                if w >= l {
                    w = w - l;
                }
                if w < T::zero() {
                    w = T::zero();
                }
                *v = w;
            }
        }
        out
    }

    /// Displacement `lift(p) - base` for the translate of `p` nearest to
    /// `base`.
    #[inline]
    pub fn displacement(&self, base: &[T], p: &[T]) -> Coords<T> {
        let mut out: Coords<T> = p.iter().zip(base).map(|(&a, &b)| a - b).collect();
        for (a, v) in out.iter_mut().enumerate() {
            if let Some(l) = self.period(a) {
                *v = *v - l * (*v / l).round();
            }
        }
        out
    }

    /// Squared geodesic distance without validation (hot path).
    #[inline]
    pub fn dist2_raw(&self, p: &[T], q: &[T]) -> T {
        let mut acc = T::zero();
        for a in 0..self.dim {
            let mut v = q[a] - p[a];
            if let Some(l) = self.period(a) {
                v = v - l * (v / l).round();
            }
            acc += v * v;
        }
        acc
    }

    /// Geodesic distance: minimum over periodic translates on the torus and
    /// cylinder, Euclidean on the disk.
    pub fn distance(&self, p: &Point<T>, q: &Point<T>) -> Result<T> {
        self.validate_point(&p.coords)?;
        self.validate_point(&q.coords)?;
        Ok(self.dist2_raw(&p.coords, &q.coords).sqrt())
    }

    /// Euclidean representative of `p` nearest to `base`.
    pub fn nearest_lift(&self, base: &Point<T>, p: &Point<T>) -> Result<Coords<T>> {
        self.validate_point(&base.coords)?;
        self.validate_point(&p.coords)?;
        self.lift_near(&base.coords, &p.coords)
    }

    /// Unchecked variant of [`Self::nearest_lift`] for raw coordinates; still
    /// enforces the chart-overflow condition.
    pub fn lift_near(&self, base: &[T], p: &[T]) -> Result<Coords<T>> {
        let disp = self.displacement(base, p);
        let dist = norm2(&disp).sqrt();
        if dist >= self.injectivity_radius {
            return Err(Error::ChartOverflow {
                distance: dist.to_f64_lossy(),
                limit: self.injectivity_radius.to_f64_lossy(),
            });
        }
        Ok(base.iter().zip(&disp).map(|(&b, &v)| b + v).collect())
    }

    /// Distance to the boundary; `+∞` on the torus.
    pub fn boundary_distance(&self, p: &[T]) -> T {
        match self.kind {
            ManifoldKind::FlatTorus => T::infinity(),
            ManifoldKind::FlatCylinder => {
                let x = p[self.dim - 1];
                let l = self.shape[self.dim - 1];
                x.min(l - x)
            }
            ManifoldKind::SolidDisk => self.shape[0] - norm2(p).sqrt(),
        }
    }

    /// Unit vector at `p` pointing towards the nearest boundary point, i.e.
    /// the negated gradient of [`Self::boundary_distance`]. `None` on the
    /// torus, at the disk centre, and on the cylinder mid-plane where the
    /// nearest boundary point is not unique.
    pub fn boundary_normal(&self, p: &[T]) -> Option<Coords<T>> {
        match self.kind {
            ManifoldKind::FlatTorus => None,
            ManifoldKind::FlatCylinder => {
                let last = self.dim - 1;
                let x = p[last];
                let l = self.shape[last];
                let mut n: Coords<T> = SmallVec::from_elem(T::zero(), self.dim);
                if x < l - x {
                    n[last] = -T::one();
                } else if x > l - x {
                    n[last] = T::one();
                } else {
                    return None;
                }
                Some(n)
            }
            ManifoldKind::SolidDisk => {
                let len = norm2(p).sqrt();
                if len == T::zero() {
                    return None;
                }
                Some(p.iter().map(|&x| x / len).collect())
            }
        }
    }

    /// Whether a chart point (periodic coordinates may be unreduced) lies in
    /// `M`.
    pub fn contains_chart(&self, x: &[T]) -> bool {
        match self.kind {
            ManifoldKind::FlatTorus => true,
            ManifoldKind::FlatCylinder => {
                let v = x[self.dim - 1];
                v >= T::zero() && v <= self.shape[self.dim - 1]
            }
            ManifoldKind::SolidDisk => norm2(x) <= self.shape[0] * self.shape[0],
        }
    }

    /// Euclidean distance from a chart point to `M` (zero inside).
    pub fn distance_to_manifold(&self, x: &[T]) -> T {
        match self.kind {
            ManifoldKind::FlatTorus => T::zero(),
            ManifoldKind::FlatCylinder => {
                let v = x[self.dim - 1];
                let l = self.shape[self.dim - 1];
                (-v).max(v - l).max(T::zero())
            }
            ManifoldKind::SolidDisk => (norm2(x).sqrt() - self.shape[0]).max(T::zero()),
        }
    }

    /// Exact volume of the `r`-collar of the boundary.
    pub fn collar_volume(&self, r: T) -> Result<T> {
        if r < T::zero() || !r.is_finite() {
            return domain("collar radius must be non-negative and finite");
        }
        match self.kind {
            ManifoldKind::FlatTorus => Ok(T::zero()),
            ManifoldKind::FlatCylinder => {
                let l = self.shape[self.dim - 1];
                if r >= l / T::lit(2.0) {
                    return domain(format!("collar radius {r} must be below L/2 = {}", l / T::lit(2.0)));
                }
                let area = self.shape[..self.dim - 1].iter().copied().fold(T::one(), |a, b| a * b);
                Ok(T::lit(2.0) * r * area)
            }
            ManifoldKind::SolidDisk => {
                let big = self.shape[0];
                if r >= big {
                    return domain(format!("collar radius {r} must be below R = {big}"));
                }
                let inner = big - r;
                Ok(T::PI() * (big * big - inner * inner))
            }
        }
    }

    /// Volume of the boundary `∂M` (length for `d = 2`).
    pub fn boundary_volume(&self) -> T {
        match self.kind {
            ManifoldKind::FlatTorus => T::zero(),
            ManifoldKind::FlatCylinder => {
                T::lit(2.0) * self.shape[..self.dim - 1].iter().copied().fold(T::one(), |a, b| a * b)
            }
            ManifoldKind::SolidDisk => T::lit(2.0) * T::PI() * self.shape[0],
        }
    }

    /// Fails unless `2 r` is strictly below the injectivity radius.
    pub fn check_chart_radius(&self, r: T) -> Result<()> {
        let diameter = r + r;
        if !(diameter < self.injectivity_radius) {
            return Err(Error::RadiusTooLarge {
                diameter: diameter.to_f64_lossy(),
                limit: self.injectivity_radius.to_f64_lossy(),
            });
        }
        Ok(())
    }
}

fn check_lengths<T: Real>(lengths: &[T]) -> Result<()> {
    if lengths.iter().all(|&l| l > T::zero() && l.is_finite()) {
        Ok(())
    } else {
        domain(format!("lengths must be positive and finite, got {lengths:?}"))
    }
}
