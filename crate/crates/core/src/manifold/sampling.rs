use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use super::{Coords, ManifoldKind, ManifoldModel, Point};
use crate::error::{domain, Error, Result};
use crate::scalar::Real;

/// A realization of a homogeneous Poisson process on a manifold.
#[derive(Clone, Debug, PartialEq)]
pub struct PointSample<T> {
    pub points: Vec<Point<T>>,
    pub intensity: T,
    pub seed: u64,
}

impl<T: Real> PointSample<T> {
    /// Wraps an explicit point list, e.g. a fixture or a file read from disk.
    pub fn from_points(points: Vec<Point<T>>) -> Self {
        PointSample {
            points,
            intensity: T::zero(),
            seed: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    #[inline]
    pub fn coords(&self, i: usize) -> &[T] {
        &self.points[i].coords
    }

    /// Checks that every point lies in `m`.
    pub fn validate(&self, m: &ManifoldModel<T>) -> Result<()> {
        self.points.iter().try_for_each(|p| m.validate_point(&p.coords))
    }
}

/// Writes one row per point with header `x0,..,x{d-1}`.
pub fn write_points_csv<T: Real, W: Write>(sample: &PointSample<T>, dim: usize, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record((0..dim).map(|a| format!("x{a}")))?;
    for p in &sample.points {
        w.write_record(p.coords.iter().map(|x| x.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads the format of [`write_points_csv`]. The header fixes the dimension.
pub fn read_points_csv<T: Real, R: Read>(input: R) -> Result<PointSample<T>> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let dim = r.headers()?.len();
    let mut points = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        if rec.len() != dim {
            return domain(format!("point row {} has {} fields, expected {dim}", i + 1, rec.len()));
        }
        let coords = rec
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .ok()
                    .and_then(T::from_f64)
                    .ok_or_else(|| Error::Domain(format!("point row {}: '{f}' is not a number", i + 1)))
            })
            .collect::<Result<Vec<T>>>()?;
        points.push(Point::new(&coords));
    }
    Ok(PointSample::from_points(points))
}

/// SplitMix64 finalizer.
#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-trial seed derived from a master seed and a trial index.
#[inline]
pub fn derive_seed(master: u64, trial: u64) -> u64 {
    splitmix64(splitmix64(master) ^ trial.wrapping_mul(0xD1B5_4A32_D192_ED03))
}

/// Draws `N ~ Poisson(n · vol(M))` and then `N` i.i.d. uniform points.
pub fn sample_poisson<T: Real>(m: &ManifoldModel<T>, intensity: T, seed: u64) -> Result<PointSample<T>> {
    if !(intensity > T::zero()) || !intensity.is_finite() {
        return domain(format!("intensity must be positive and finite, got {intensity}"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mean = (intensity * m.total_volume()).to_f64_lossy();
    let count = Poisson::new(mean)
        .map_err(|e| crate::error::Error::Domain(format!("poisson mean {mean}: {e}")))?
        .sample(&mut rng) as usize;

    let d = m.dim();
    let mut points = Vec::with_capacity(count);
    for _ in 0..count {
        let coords: Coords<T> = match m.kind() {
            ManifoldKind::FlatTorus | ManifoldKind::FlatCylinder => {
                let raw: Coords<T> = (0..d)
                    .map(|a| T::lit(rng.random::<f64>() * m.shape()[a].to_f64_lossy()))
                    .collect();
                let mut c = m.wrap(&raw);
                if m.kind() == ManifoldKind::FlatCylinder {
                    let l = m.shape()[d - 1];
                    c[d - 1] = c[d - 1].min(l);
                }
                c
            }
            ManifoldKind::SolidDisk => {
                let big = m.shape()[0].to_f64_lossy();
                let u: f64 = rng.random();
                let v: f64 = rng.random();
                let rad = big * u.sqrt();
                let theta = std::f64::consts::TAU * v;
                let (s, c) = theta.sin_cos();
                let mut x = T::lit(rad * c);
                let mut y = T::lit(rad * s);
                // rounding in the cast may push the point a hair outside
                let norm = (x * x + y * y).sqrt();
                if norm > m.shape()[0] {
                    let scale = m.shape()[0] / norm;
                    x *= scale;
                    y *= scale;
                }
                Coords::from_slice(&[x, y])
            }
        };
        points.push(Point { coords });
    }
    Ok(PointSample {
        points,
        intensity,
        seed,
    })
}
