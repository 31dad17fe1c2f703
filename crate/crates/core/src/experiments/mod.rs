//! Seeded Monte Carlo sweeps over `Λ = n ω_d r^d`.
//!
//! Every cell of a sweep (manifold, intensity, degree, scale) runs the same
//! trial indices; trial `t` always draws its sample from
//! `derive_seed(master, t)`, so cells are paired and results do not depend
//! on scheduling or thread count.

pub mod config;
pub mod report;

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cech::build_cech;
use crate::cycles::{
    audit_detection, default_detector_params, detect_theta_like_cycles, region_covered_with_grid, DetectorParams, Region,
    DEFAULT_PSI_DENSITY,
};
use crate::error::{domain, Error, Result};
use crate::grid::NeighborGrid;
use crate::homology::{betti_numbers, reference_betti, BettiVector};
use crate::manifold::{derive_seed, lambda_param, radius_for_lambda, sample_poisson, unit_ball_volume};
use crate::morse::{enumerate_critical_points, CriticalQuery};
use crate::Manifold;

pub use config::{parse_config, parse_manifold_spec};
pub use report::{render_svg, write_csv, write_json, CSV_HEADER};

/// Named threshold families for the `Λ` schedule.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Threshold {
    /// `log n + k log log n`
    ClosedUpper,
    /// `log n + (k - 2) log log n`
    ClosedLower,
    /// `(2 - 2/d) log n + 2k log log n`
    BoundaryUpper,
    /// `(2 - 2/d) log n + 2(k - 2 - (k + 1 - 1/d)) log log n`
    BoundaryLower,
    /// `log n + (d - 1) log log n`
    Coverage,
}

impl Threshold {
    pub const ALL: [Threshold; 5] = [
        Threshold::ClosedUpper,
        Threshold::ClosedLower,
        Threshold::BoundaryUpper,
        Threshold::BoundaryLower,
        Threshold::Coverage,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Threshold::ClosedUpper => "closed-upper",
            Threshold::ClosedLower => "closed-lower",
            Threshold::BoundaryUpper => "boundary-upper",
            Threshold::BoundaryLower => "boundary-lower",
            Threshold::Coverage => "coverage",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown threshold '{s}'")))
    }

    /// The threshold value of `Λ` at intensity `n`, dimension `d`, degree `k`.
    pub fn lambda(self, n: f64, d: usize, k: usize) -> f64 {
        let l = n.ln();
        let ll = l.ln();
        let (d, k) = (d as f64, k as f64);
        match self {
            Threshold::ClosedUpper => l + k * ll,
            Threshold::ClosedLower => l + (k - 2.0) * ll,
            Threshold::BoundaryUpper => (2.0 - 2.0 / d) * l + 2.0 * k * ll,
            Threshold::BoundaryLower => (2.0 - 2.0 / d) * l + 2.0 * (k - 2.0 - (k + 1.0 - 1.0 / d)) * ll,
            Threshold::Coverage => l + (d - 1.0) * ll,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Connectivity,
    Coverage,
    Critical,
    ThetaLike,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Connectivity => "connectivity",
            ExperimentKind::Coverage => "coverage",
            ExperimentKind::Critical => "critical",
            ExperimentKind::ThetaLike => "theta_like",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        [
            ExperimentKind::Connectivity,
            ExperimentKind::Coverage,
            ExperimentKind::Critical,
            ExperimentKind::ThetaLike,
        ]
        .into_iter()
        .find(|k| k.name() == s)
        .ok_or_else(|| Error::Config(format!("unknown experiment '{s}'")))
    }
}

/// How the scale of each cell is chosen.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Schedule {
    /// `Λ = threshold(n, d, k) + w` for each offset `w`.
    Offsets { threshold: Threshold, offsets: Vec<f64> },
    /// Fixed `Λ` values.
    Lambdas(Vec<f64>),
    /// Fixed radii (r-first mode).
    Radii(Vec<f64>),
}

impl Schedule {
    fn len(&self) -> usize {
        match self {
            Schedule::Offsets { offsets, .. } => offsets.len(),
            Schedule::Lambdas(v) | Schedule::Radii(v) => v.len(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifoldEntry {
    pub name: String,
    /// Textual form, e.g. `torus:1,1`.
    pub spec: String,
    #[serde(skip)]
    pub model: Option<Manifold>,
}

impl ManifoldEntry {
    pub fn new(name: impl Into<String>, spec: impl Into<String>) -> Result<Self> {
        let spec = spec.into();
        let model = parse_manifold_spec(&spec)?;
        Ok(ManifoldEntry {
            name: name.into(),
            spec,
            model: Some(model),
        })
    }

    pub fn from_model(name: impl Into<String>, model: Manifold) -> Self {
        ManifoldEntry {
            name: name.into(),
            spec: config::spec_string(&model),
            model: Some(model),
        }
    }

    pub fn model(&self) -> &Manifold {
        self.model.as_ref().expect("manifold entries are built from a parsed spec")
    }
}

/// Θ-like detector settings. Parameters left unset are derived from `n` and
/// `Λ` by [`default_detector_params`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    pub eps_min: f64,
    pub c_phi: f64,
    pub c_g: f64,
    pub net_factor: f64,
    pub psi_density: usize,
    /// `r1 = r1_factor · r`.
    pub r1_factor: Option<f64>,
    /// `r2 = r2_factor · r`.
    pub r2_factor: Option<f64>,
    /// `δ = delta_factor · r`.
    pub delta_factor: Option<f64>,
    pub phi_angle: Option<f64>,
    /// Recompute `β_k` across every detection.
    pub audit: bool,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            eps_min: 0.05,
            c_phi: 1.0,
            c_g: 1.0,
            net_factor: 20.0,
            psi_density: DEFAULT_PSI_DENSITY,
            r1_factor: None,
            r2_factor: None,
            delta_factor: None,
            phi_angle: None,
            audit: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub manifolds: Vec<ManifoldEntry>,
    pub degrees: Vec<usize>,
    /// Intensities `n`.
    pub n_values: Vec<f64>,
    pub schedule: Schedule,
    pub trials: usize,
    pub seed: u64,
    pub threads: Option<usize>,
    /// ε-net constant for `r0`; `None` uses `ω_d 2^{-(d+1)} / 2`.
    pub kappa: Option<f64>,
    /// Coverage net spacing is `r / net_factor`.
    pub net_factor: f64,
    pub detector: DetectorConfig,
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind, manifolds: Vec<ManifoldEntry>, n_values: Vec<f64>, schedule: Schedule) -> Self {
        ExperimentConfig {
            kind,
            manifolds,
            degrees: vec![1],
            n_values,
            schedule,
            trials: 100,
            seed: 0,
            threads: None,
            kappa: None,
            net_factor: 20.0,
            detector: DetectorConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.manifolds.is_empty() || self.n_values.is_empty() || self.schedule.len() == 0 {
            return bad("manifolds, n values and the scale schedule must be non-empty".into());
        }
        if self.kind != ExperimentKind::Coverage && self.degrees.is_empty() {
            return bad("at least one homology degree is required".into());
        }
        if self.n_values.iter().any(|&n| !(n > 1.0) || !n.is_finite()) {
            return bad("intensities must be finite and exceed 1".into());
        }
        if self.threads == Some(0) {
            return bad("threads must be at least 1".into());
        }
        if !(self.net_factor > 1.0) || !(self.detector.net_factor > 1.0) {
            return bad("net factors must exceed 1".into());
        }
        if let Some(k) = self.kappa {
            if !(k > 0.0) {
                return bad("kappa must be positive".into());
            }
        }
        for e in &self.manifolds {
            let d = e.model().dim();
            for &k in &self.degrees {
                let ok = match self.kind {
                    ExperimentKind::ThetaLike => k >= 1 && k < d,
                    ExperimentKind::Coverage => true,
                    _ => k <= d,
                };
                if !ok {
                    return bad(format!("degree {k} is not valid for {} in this experiment", e.spec));
                }
            }
        }
        Ok(())
    }

    fn degree_list(&self) -> Vec<Option<usize>> {
        match self.kind {
            ExperimentKind::Coverage => vec![None],
            _ => self.degrees.iter().map(|&k| Some(k)).collect(),
        }
    }
}

/// Outcome of one trial in one cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub trial: u64,
    pub seed: u64,
    pub point_count: usize,
    pub betti: Option<Vec<usize>>,
    pub matched: Option<bool>,
    pub critical_interior: Option<usize>,
    pub critical_collar: Option<usize>,
    pub theta_like: Option<usize>,
    pub audits_passed: usize,
    pub audits_failed: usize,
    pub psi_unconverged: usize,
    pub covered: Option<bool>,
    pub wall_seconds: f64,
}

impl TrialResult {
    fn new(trial: u64, seed: u64, point_count: usize) -> Self {
        TrialResult {
            trial,
            seed,
            point_count,
            betti: None,
            matched: None,
            critical_interior: None,
            critical_collar: None,
            theta_like: None,
            audits_passed: 0,
            audits_failed: 0,
            psi_unconverged: 0,
            covered: None,
            wall_seconds: 0.0,
        }
    }
}

/// One CSV row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub experiment: String,
    pub manifold: String,
    pub d: usize,
    pub k: Option<usize>,
    pub n: f64,
    pub lambda: Option<f64>,
    pub offset_w: Option<f64>,
    pub r: Option<f64>,
    pub trials: usize,
    pub successes: Option<usize>,
    pub p_hat: Option<f64>,
    pub ci_lo: Option<f64>,
    pub ci_hi: Option<f64>,
    pub mean_count: Option<f64>,
    pub var_count: Option<f64>,
    pub infeasible: bool,
}

/// Per-cell data that goes to the JSON sidecar only.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub manifold: String,
    pub k: Option<usize>,
    pub n: f64,
    pub lambda: Option<f64>,
    pub r: Option<f64>,
    pub infeasible_reason: Option<String>,
    /// Critical experiment: upper limit of the counted range and collar width.
    pub r0: Option<f64>,
    pub envelope_interior: Option<f64>,
    pub envelope_collar: Option<f64>,
    pub ratio_interior: Option<f64>,
    pub ratio_collar: Option<f64>,
    /// Θ-like experiment: `Var / E²` of the per-trial count.
    pub var_over_mean_sq: Option<f64>,
    pub audits_passed: usize,
    pub audits_failed: usize,
    pub psi_unconverged: usize,
    pub wall_seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub experiment: ExperimentKind,
    pub rows: Vec<SweepRow>,
    pub cells: Vec<CellSummary>,
    pub wall_seconds: f64,
}

impl SweepTable {
    pub fn all_infeasible(&self) -> bool {
        self.rows.iter().all(|r| r.infeasible)
    }
}

/// Wilson score interval, clipped to `[0, 1]`.
pub fn wilson_interval(successes: usize, trials: usize, z: f64) -> Result<(f64, f64)> {
    if trials == 0 || successes > trials {
        return domain(format!("wilson interval needs 0 <= successes <= trials >= 1, got {successes}/{trials}"));
    }
    if !(z > 0.0) {
        return domain("z must be positive");
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    let lo = if successes == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if successes == trials { 1.0 } else { (center + half).min(1.0) };
    Ok((lo, hi))
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 {
        xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var)
}

/// `r0 = r (ω_d / κ · (1 + |log r|))^{1/d}`.
pub fn critical_r0(r: f64, d: usize, kappa: Option<f64>) -> f64 {
    let omega: f64 = unit_ball_volume(d);
    let kappa = kappa.unwrap_or(omega * 2f64.powi(-(d as i32 + 1)) / 2.0);
    r * (omega / kappa * (1.0 + r.ln().abs())).powf(1.0 / d as f64)
}

struct Cell<'a> {
    entry: &'a ManifoldEntry,
    n: f64,
    k: Option<usize>,
    lambda: Option<f64>,
    offset: Option<f64>,
    r: Option<f64>,
    infeasible: Option<String>,
}

fn cells(cfg: &ExperimentConfig) -> Vec<Cell<'_>> {
    let mut out = Vec::new();
    for entry in &cfg.manifolds {
        let d = entry.model().dim();
        for &n in &cfg.n_values {
            for k in cfg.degree_list() {
                let kk = k.unwrap_or(0);
                let scales: Vec<(Option<f64>, Option<f64>, Option<f64>)> = match &cfg.schedule {
                    Schedule::Offsets { threshold, offsets } => offsets
                        .iter()
                        .map(|&w| (Some(threshold.lambda(n, d, kk) + w), Some(w), None))
                        .collect(),
                    Schedule::Lambdas(ls) => ls.iter().map(|&l| (Some(l), None, None)).collect(),
                    Schedule::Radii(rs) => rs
                        .iter()
                        .map(|&r| (lambda_param(n, d, r).ok(), None, Some(r)))
                        .collect(),
                };
                for (lambda, offset, r) in scales {
                    let mut cell = Cell {
                        entry,
                        n,
                        k,
                        lambda,
                        offset,
                        r,
                        infeasible: None,
                    };
                    if cell.r.is_none() {
                        match lambda.map(|l| radius_for_lambda(n, d, l)) {
                            Some(Ok(r)) => cell.r = Some(r),
                            Some(Err(_)) | None => {
                                cell.infeasible = Some(format!("Λ = {} admits no radius", lambda.unwrap_or(f64::NAN)));
                            }
                        }
                    }
                    if cell.infeasible.is_none() {
                        cell.infeasible = check_cell(cfg, &cell).err().map(|e| e.to_string());
                    }
                    out.push(cell);
                }
            }
        }
    }
    out
}

fn check_cell(cfg: &ExperimentConfig, cell: &Cell<'_>) -> Result<()> {
    let m = cell.entry.model();
    let r = cell.r.expect("feasibility is checked after the radius is known");
    if !(r > 0.0) || !r.is_finite() {
        return domain(format!("radius {r} is not positive"));
    }
    match cfg.kind {
        ExperimentKind::Connectivity | ExperimentKind::Coverage => m.check_chart_radius(r),
        ExperimentKind::Critical => m.check_chart_radius(critical_r0(r, m.dim(), cfg.kappa)),
        ExperimentKind::ThetaLike => {
            let p = detector_params(cfg, cell)?;
            m.check_chart_radius(p.r2)
        }
    }
}

fn detector_params(cfg: &ExperimentConfig, cell: &Cell<'_>) -> Result<DetectorParams<f64>> {
    let m = cell.entry.model();
    let d = m.dim();
    let k = cell.k.unwrap_or(1);
    let r = cell.r.unwrap_or(f64::NAN);
    let lambda = cell.lambda.unwrap_or_else(|| lambda_param(cell.n, d, r).unwrap_or(f64::NAN));
    let det = &cfg.detector;
    let mut p = default_detector_params(cell.n, d, k, lambda, det.c_phi, det.c_g)?;
    p.r = r;
    if let Some(f) = det.r1_factor {
        p.r1 = r * f;
    }
    if let Some(f) = det.r2_factor {
        p.r2 = r * f;
    }
    if let Some(f) = det.delta_factor {
        p.delta = r * f;
    }
    if let Some(a) = det.phi_angle {
        p.phi_angle = a;
    }
    p.eps_min = det.eps_min;
    p.net_factor = det.net_factor;
    p.psi_density = det.psi_density;
    Ok(p)
}

fn run_trial(cfg: &ExperimentConfig, cell: &Cell<'_>, trial: u64) -> Result<TrialResult> {
    let start = Instant::now();
    let m = cell.entry.model();
    let d = m.dim();
    let r = cell.r.expect("only feasible cells run trials");
    let seed = derive_seed(cfg.seed, trial);
    let sample = sample_poisson(m, cell.n, seed)?;
    let mut res = TrialResult::new(trial, seed, sample.len());
    match cfg.kind {
        ExperimentKind::Connectivity => {
            let k = cell.k.unwrap_or(0);
            let complex = build_cech(m, &sample, r, k + 1)?;
            let betti: BettiVector = betti_numbers(&complex, k);
            let reference = reference_betti(m, k);
            res.matched = Some(betti.get(k) == reference.get(k));
            res.betti = Some(betti.values);
        }
        ExperimentKind::Coverage => {
            let grid = NeighborGrid::new(m, &sample, r);
            let cov = region_covered_with_grid(&sample, m, &grid, &Region::Manifold, r, Some(r / cfg.net_factor), true)?;
            res.covered = Some(cov.certified);
        }
        ExperimentKind::Critical => {
            let k = cell.k.unwrap_or(0);
            let r0 = critical_r0(r, d, cfg.kappa);
            // index-0 values are identically zero, so their range starts there
            let lo = if k == 0 { 0.0 } else { r };
            let pts = enumerate_critical_points(&sample, m, &CriticalQuery::new(lo, r0, k))?;
            let collar = pts.iter().filter(|cp| cp.boundary_dist <= r0).count();
            res.critical_collar = Some(collar);
            res.critical_interior = Some(pts.len() - collar);
        }
        ExperimentKind::ThetaLike => {
            let p = detector_params(cfg, cell)?;
            let records = detect_theta_like_cycles(&sample, m, &p)?;
            res.theta_like = Some(records.len());
            for rec in &records {
                let est = crate::cycles::psi_estimate(&rec.critical, m, &sample, p.phi_angle, p.psi_density);
                if !est.converged {
                    res.psi_unconverged += 1;
                }
            }
            if cfg.detector.audit {
                for rec in &records {
                    if audit_detection(&sample, m, rec)?.increased {
                        res.audits_passed += 1;
                    } else {
                        res.audits_failed += 1;
                    }
                }
            }
        }
    }
    res.wall_seconds = start.elapsed().as_secs_f64();
    Ok(res)
}

fn run_cell_trials(cfg: &ExperimentConfig, cell: &Cell<'_>) -> Result<Vec<TrialResult>> {
    (0..cfg.trials as u64)
        .into_par_iter()
        .map(|t| run_trial(cfg, cell, t))
        .collect::<Vec<_>>()
        .into_iter()
        .collect()
}

fn stats_row(base: &SweepRow, experiment: &str, successes: usize, counts: &[f64]) -> Result<SweepRow> {
    let trials = counts.len();
    let (lo, hi) = wilson_interval(successes, trials, 1.96)?;
    let (mean, var) = mean_var(counts);
    Ok(SweepRow {
        experiment: experiment.to_string(),
        successes: Some(successes),
        p_hat: Some(successes as f64 / trials as f64),
        ci_lo: Some(lo),
        ci_hi: Some(hi),
        mean_count: Some(mean),
        var_count: Some(var),
        ..base.clone()
    })
}

/// Runs every cell of `cfg` and aggregates the trials in order.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepTable> {
    cfg.validate()?;
    let start = Instant::now();
    let run = || -> Result<SweepTable> {
        let mut rows = Vec::new();
        let mut summaries = Vec::new();
        for cell in cells(cfg) {
            let m = cell.entry.model();
            let d = m.dim();
            let base = SweepRow {
                experiment: cfg.kind.name().to_string(),
                manifold: cell.entry.name.clone(),
                d,
                k: cell.k,
                n: cell.n,
                lambda: cell.lambda,
                offset_w: cell.offset,
                r: cell.r,
                trials: cfg.trials,
                successes: None,
                p_hat: None,
                ci_lo: None,
                ci_hi: None,
                mean_count: None,
                var_count: None,
                infeasible: cell.infeasible.is_some(),
            };
            let mut summary = CellSummary {
                manifold: cell.entry.name.clone(),
                k: cell.k,
                n: cell.n,
                lambda: cell.lambda,
                r: cell.r,
                infeasible_reason: cell.infeasible.clone(),
                r0: None,
                envelope_interior: None,
                envelope_collar: None,
                ratio_interior: None,
                ratio_collar: None,
                var_over_mean_sq: None,
                audits_passed: 0,
                audits_failed: 0,
                psi_unconverged: 0,
                wall_seconds: 0.0,
            };
            let names: &[&str] = match cfg.kind {
                ExperimentKind::Critical => &["critical_interior", "critical_collar", "critical_total"],
                _ => &[cfg.kind.name()],
            };
            if cell.infeasible.is_some() {
                for name in names {
                    rows.push(SweepRow {
                        experiment: name.to_string(),
                        ..base.clone()
                    });
                }
                summaries.push(summary);
                continue;
            }
            let trials = run_cell_trials(cfg, &cell)?;
            summary.wall_seconds = trials.iter().map(|t| t.wall_seconds).sum();
            match cfg.kind {
                ExperimentKind::Connectivity => {
                    let k = cell.k.unwrap_or(0);
                    let succ = trials.iter().filter(|t| t.matched == Some(true)).count();
                    let counts: Vec<f64> = trials
                        .iter()
                        .map(|t| t.betti.as_ref().and_then(|b| b.get(k)).copied().unwrap_or(0) as f64)
                        .collect();
                    rows.push(stats_row(&base, names[0], succ, &counts)?);
                }
                ExperimentKind::Coverage => {
                    let succ = trials.iter().filter(|t| t.covered == Some(true)).count();
                    let counts: Vec<f64> = trials.iter().map(|t| t.point_count as f64).collect();
                    rows.push(stats_row(&base, names[0], succ, &counts)?);
                }
                ExperimentKind::Critical => {
                    let inner: Vec<f64> = trials.iter().map(|t| t.critical_interior.unwrap_or(0) as f64).collect();
                    let collar: Vec<f64> = trials.iter().map(|t| t.critical_collar.unwrap_or(0) as f64).collect();
                    let total: Vec<f64> = inner.iter().zip(&collar).map(|(a, b)| a + b).collect();
                    for (name, counts) in names.iter().zip([&inner, &collar, &total]) {
                        let succ = counts.iter().filter(|&&c| c > 0.0).count();
                        rows.push(stats_row(&base, name, succ, counts)?);
                    }
                    let r = cell.r.unwrap_or(f64::NAN);
                    let lambda = cell.lambda.unwrap_or(f64::NAN);
                    let k = cell.k.unwrap_or(0) as i32;
                    let env_in = cell.n * lambda.powi(k - 1) * (-lambda).exp();
                    let env_col = cell.n.powf(1.0 - 1.0 / d as f64) * lambda.powi(k - 1) * (-lambda / 2.0).exp();
                    summary.r0 = Some(critical_r0(r, d, cfg.kappa));
                    summary.envelope_interior = Some(env_in);
                    summary.envelope_collar = Some(env_col);
                    summary.ratio_interior = Some(mean_var(&inner).0 / env_in);
                    summary.ratio_collar = Some(mean_var(&collar).0 / env_col);
                }
                ExperimentKind::ThetaLike => {
                    let counts: Vec<f64> = trials.iter().map(|t| t.theta_like.unwrap_or(0) as f64).collect();
                    let succ = counts.iter().filter(|&&c| c > 0.0).count();
                    rows.push(stats_row(&base, names[0], succ, &counts)?);
                    let (mean, var) = mean_var(&counts);
                    summary.var_over_mean_sq = (mean > 0.0).then(|| var / (mean * mean));
                    summary.audits_passed = trials.iter().map(|t| t.audits_passed).sum();
                    summary.audits_failed = trials.iter().map(|t| t.audits_failed).sum();
                    summary.psi_unconverged = trials.iter().map(|t| t.psi_unconverged).sum();
                }
            }
            summaries.push(summary);
        }
        Ok(SweepTable {
            experiment: cfg.kind,
            rows,
            cells: summaries,
            wall_seconds: 0.0,
        })
    };
    let mut table = match cfg.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(run)?,
        None => run()?,
    };
    table.wall_seconds = start.elapsed().as_secs_f64();
    Ok(table)
}

fn run_kind(cfg: &ExperimentConfig, kind: ExperimentKind) -> Result<SweepTable> {
    if cfg.kind != kind {
        return Err(Error::Config(format!(
            "config describes a {} experiment, not {}",
            cfg.kind.name(),
            kind.name()
        )));
    }
    run_sweep(cfg)
}

pub fn run_connectivity_sweep(cfg: &ExperimentConfig) -> Result<SweepTable> {
    run_kind(cfg, ExperimentKind::Connectivity)
}

pub fn run_coverage_sweep(cfg: &ExperimentConfig) -> Result<SweepTable> {
    run_kind(cfg, ExperimentKind::Coverage)
}

pub fn run_critical_count_experiment(cfg: &ExperimentConfig) -> Result<SweepTable> {
    run_kind(cfg, ExperimentKind::Critical)
}

pub fn run_theta_like_experiment(cfg: &ExperimentConfig) -> Result<SweepTable> {
    run_kind(cfg, ExperimentKind::ThetaLike)
}

/// Runs the trials of a single cell and returns them in trial order; used by
/// audits that need per-trial detail.
pub fn run_cell(cfg: &ExperimentConfig, manifold: usize, n: f64, k: Option<usize>, scale: usize) -> Result<Vec<TrialResult>> {
    cfg.validate()?;
    let all = cells(cfg);
    let cell = all
        .iter()
        .filter(|c| std::ptr::eq(c.entry, &cfg.manifolds[manifold]) && c.n == n && c.k == k)
        .nth(scale)
        .ok_or_else(|| Error::Config("no such cell".into()))?;
    if let Some(reason) = &cell.infeasible {
        return domain(format!("cell is infeasible: {reason}"));
    }
    match cfg.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(|| run_cell_trials(cfg, cell)),
        None => run_cell_trials(cfg, cell),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn torus() -> ManifoldEntry {
        ManifoldEntry::new("torus", "torus:1,1").unwrap()
    }

    #[test]
    fn wilson_examples() {
        assert_eq!(wilson_interval(0, 10, 1.96).unwrap().0, 0.0);
        assert_eq!(wilson_interval(10, 10, 1.96).unwrap().1, 1.0);
        let (lo, hi) = wilson_interval(5, 10, 1.96).unwrap();
        assert!(lo < 0.5 && hi > 0.5);
        assert!((lo - 0.2366).abs() < 1e-4 && (hi - 0.7634).abs() < 1e-4);
        let (lo, hi) = wilson_interval(2, 10, 1.96).unwrap();
        assert!(((lo + hi) / 2.0) > 0.2);
        assert!(wilson_interval(3, 2, 1.96).is_err());
        assert!(wilson_interval(0, 0, 1.96).is_err());
    }

    #[test]
    fn threshold_formulas() {
        let n = 1000f64;
        let (l, ll) = (n.ln(), n.ln().ln());
        assert!((Threshold::ClosedUpper.lambda(n, 2, 1) - (l + ll)).abs() < 1e-12);
        assert!((Threshold::ClosedLower.lambda(n, 2, 1) - (l - ll)).abs() < 1e-12);
        assert!((Threshold::BoundaryUpper.lambda(n, 2, 1) - (l + 2.0 * ll)).abs() < 1e-12);
        assert!((Threshold::BoundaryLower.lambda(n, 2, 1) - (l - 5.0 * ll)).abs() < 1e-12);
        assert!((Threshold::Coverage.lambda(n, 3, 0) - (l + 2.0 * ll)).abs() < 1e-12);
        assert_eq!(Threshold::parse("boundary-lower").unwrap(), Threshold::BoundaryLower);
    }

    #[test]
    fn zero_trials_rejected_and_single_trial_row() {
        let mut cfg = ExperimentConfig::new(
            ExperimentKind::Connectivity,
            vec![torus()],
            vec![200.0],
            Schedule::Lambdas(vec![8.0]),
        );
        cfg.trials = 0;
        assert!(run_sweep(&cfg).is_err());
        cfg.trials = 1;
        let t = run_sweep(&cfg).unwrap();
        assert_eq!(t.rows.len(), 1);
        let row = &t.rows[0];
        assert!(row.p_hat == Some(0.0) || row.p_hat == Some(1.0));
        assert!(row.ci_lo.unwrap() <= row.p_hat.unwrap() && row.p_hat.unwrap() <= row.ci_hi.unwrap());
    }

    #[test]
    fn infeasible_cells_are_reported() {
        let mut cfg = ExperimentConfig::new(
            ExperimentKind::Connectivity,
            vec![torus()],
            vec![50.0],
            Schedule::Lambdas(vec![-1.0, 2.0, 200.0]),
        );
        cfg.trials = 2;
        let t = run_sweep(&cfg).unwrap();
        let flags: Vec<bool> = t.rows.iter().map(|r| r.infeasible).collect();
        assert_eq!(flags, vec![true, false, true]);
        assert!(t.rows[0].p_hat.is_none() && t.rows[0].r.is_none());
        assert!(!t.all_infeasible());
    }

    #[test]
    fn critical_rows_split_regions() {
        let mut cfg = ExperimentConfig::new(
            ExperimentKind::Critical,
            vec![torus(), ManifoldEntry::new("cyl", "cylinder:1,1").unwrap()],
            vec![3000.0],
            Schedule::Lambdas(vec![12.0]),
        );
        cfg.trials = 3;
        cfg.degrees = vec![0, 1];
        cfg.kappa = Some(1.0);
        let t = run_sweep(&cfg).unwrap();
        assert_eq!(t.rows.len(), 2 * 2 * 3);
        for chunk in t.rows.chunks(3) {
            let (a, b, c) = (&chunk[0], &chunk[1], &chunk[2]);
            assert!((a.mean_count.unwrap() + b.mean_count.unwrap() - c.mean_count.unwrap()).abs() < 1e-9);
            if a.manifold == "torus" {
                assert_eq!(b.mean_count, Some(0.0));
            }
        }
        let idx0 = &t.rows[2];
        assert!((idx0.mean_count.unwrap() - 3000.0).abs() < 200.0);
    }

    #[test]
    fn critical_r0_default() {
        let r = 0.03f64;
        let expect = r * (16.0 * (1.0 + r.ln().abs())).sqrt();
        assert!((critical_r0(r, 2, None) - expect).abs() < 1e-12);
    }
}
