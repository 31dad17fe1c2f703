//! Sectioned `key = value` experiment files.
//!
//! ```text
//! # comment
//! [manifold.flat]
//! spec = torus:1,1
//!
//! [manifold.slab]
//! kind = cylinder
//! dim = 2
//!
//! [experiment]
//! name = connectivity
//! degrees = 1
//! n = 2000
//! threshold = closed-upper
//! offsets = -6, 0, 6
//! trials = 200
//! seed = 7
//!
//! [detector]
//! eps_min = 0.05
//! ```
//!
//! Unknown sections and keys are rejected.

use super::{DetectorConfig, ExperimentConfig, ExperimentKind, ManifoldEntry, Schedule, Threshold};
use crate::error::{Error, Result};
use crate::manifold::ManifoldKind;
use crate::Manifold;

fn cfg_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}

fn parse_kind(s: &str) -> Result<ManifoldKind> {
    match s {
        "torus" => Ok(ManifoldKind::FlatTorus),
        "cylinder" => Ok(ManifoldKind::FlatCylinder),
        "disk" => Ok(ManifoldKind::SolidDisk),
        _ => cfg_err(format!("unknown manifold kind '{s}'")),
    }
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    v.trim()
        .parse::<f64>()
        .map_err(|_| Error::Config(format!("{key}: '{v}' is not a number")))
}

fn parse_list<T: std::str::FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<T>().map_err(|_| Error::Config(format!("{key}: cannot parse '{s}'"))))
        .collect()
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.trim() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => cfg_err(format!("{key}: '{v}' is not a boolean")),
    }
}

/// Parses `torus:L1,..,Ld`, `cylinder:P1,..,P(d-1),L` or `disk:R`.
pub fn parse_manifold_spec(spec: &str) -> Result<Manifold> {
    let (kind, args) = spec
        .split_once(':')
        .ok_or_else(|| Error::Config(format!("manifold spec '{spec}' lacks ':'")))?;
    let nums: Vec<f64> = parse_list("manifold", args)?;
    let built = match parse_kind(kind.trim())? {
        ManifoldKind::FlatTorus => Manifold::torus(&nums),
        ManifoldKind::FlatCylinder => match nums.split_last() {
            Some((&l, periodic)) => Manifold::cylinder(periodic, l),
            None => return cfg_err("cylinder needs at least one length"),
        },
        ManifoldKind::SolidDisk => match nums.as_slice() {
            [r] => Manifold::disk(*r),
            _ => return cfg_err("disk takes exactly one radius"),
        },
    };
    built.map_err(|e| Error::Config(format!("manifold spec '{spec}': {e}")))
}

/// Inverse of [`parse_manifold_spec`].
pub fn spec_string(m: &Manifold) -> String {
    let parts: Vec<String> = m.shape().iter().map(|x| x.to_string()).collect();
    format!("{}:{}", m.kind().name(), parts.join(","))
}

#[derive(Default)]
struct ManifoldSection {
    name: String,
    spec: Option<String>,
    kind: Option<String>,
    dim: Option<usize>,
}

impl ManifoldSection {
    fn finish(self) -> Result<ManifoldEntry> {
        match (self.spec, self.kind, self.dim) {
            (Some(spec), None, None) => ManifoldEntry::new(self.name, spec),
            (None, Some(kind), Some(dim)) => {
                let m = Manifold::unit_volume(parse_kind(&kind)?, dim).map_err(|e| Error::Config(e.to_string()))?;
                Ok(ManifoldEntry::from_model(self.name, m))
            }
            _ => cfg_err(format!(
                "manifold '{}' needs either 'spec' or both 'kind' and 'dim'",
                self.name
            )),
        }
    }
}

/// Parses an experiment file.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut manifolds: Vec<ManifoldSection> = Vec::new();
    let mut kind: Option<ExperimentKind> = None;
    let mut degrees: Option<Vec<usize>> = None;
    let mut n_values: Option<Vec<f64>> = None;
    let mut threshold: Option<Threshold> = None;
    let mut offsets: Option<Vec<f64>> = None;
    let mut lambdas: Option<Vec<f64>> = None;
    let mut radii: Option<Vec<f64>> = None;
    let mut trials = 100;
    let mut seed = 0u64;
    let mut threads = None;
    let mut kappa = None;
    let mut net_factor = 20.0;
    let mut det = DetectorConfig::default();

    #[derive(PartialEq)]
    enum Section {
        None,
        Manifold,
        Experiment,
        Detector,
    }
    let mut section = Section::None;
    let mut seen_experiment = false;

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let at = |msg: String| Error::Config(format!("line {}: {msg}", lineno + 1));
        if let Some(head) = line.strip_prefix('[') {
            let head = head
                .strip_suffix(']')
                .ok_or_else(|| at("unterminated section header".into()))?
                .trim();
            section = if head == "manifold" || head.starts_with("manifold.") {
                let name = head.strip_prefix("manifold.").unwrap_or("").to_string();
                manifolds.push(ManifoldSection {
                    name,
                    ..Default::default()
                });
                Section::Manifold
            } else if head == "experiment" {
                if seen_experiment {
                    return Err(at("duplicate [experiment] section".into()));
                }
                seen_experiment = true;
                Section::Experiment
            } else if head == "detector" {
                Section::Detector
            } else {
                return Err(at(format!("unknown section [{head}]")));
            };
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| at(format!("expected 'key = value', got '{line}'")))?;
        let (key, value) = (key.trim(), value.trim());
        let wrap = |r: Result<()>| r.map_err(|e| at(e.to_string().trim_start_matches("configuration error: ").to_string()));
        match section {
            Section::None => return Err(at(format!("key '{key}' outside a section"))),
            Section::Manifold => {
                let m = manifolds.last_mut().expect("a manifold section is open");
                match key {
                    "spec" => m.spec = Some(value.to_string()),
                    "kind" => m.kind = Some(value.to_string()),
                    "dim" => {
                        m.dim = Some(value.parse().map_err(|_| at(format!("dim: '{value}' is not an integer")))?)
                    }
                    _ => return Err(at(format!("unknown manifold key '{key}'"))),
                }
            }
            Section::Experiment => wrap((|| {
                match key {
                    "name" => kind = Some(ExperimentKind::parse(value)?),
                    "degrees" => degrees = Some(parse_list(key, value)?),
                    "n" => n_values = Some(parse_list(key, value)?),
                    "threshold" => threshold = Some(Threshold::parse(value)?),
                    "offsets" => offsets = Some(parse_list(key, value)?),
                    "lambdas" => lambdas = Some(parse_list(key, value)?),
                    "radii" => radii = Some(parse_list(key, value)?),
                    "trials" => trials = value.parse().map_err(|_| Error::Config(format!("trials: '{value}'")))?,
                    "seed" => seed = value.parse().map_err(|_| Error::Config(format!("seed: '{value}'")))?,
                    "threads" => {
                        threads = Some(value.parse().map_err(|_| Error::Config(format!("threads: '{value}'")))?)
                    }
                    "kappa" => kappa = Some(parse_f64(key, value)?),
                    "net_factor" => net_factor = parse_f64(key, value)?,
                    _ => return cfg_err(format!("unknown experiment key '{key}'")),
                }
                Ok(())
            })())?,
            Section::Detector => wrap((|| {
                match key {
                    "eps_min" => det.eps_min = parse_f64(key, value)?,
                    "c_phi" => det.c_phi = parse_f64(key, value)?,
                    "c_g" => det.c_g = parse_f64(key, value)?,
                    "net_factor" => det.net_factor = parse_f64(key, value)?,
                    "psi_density" => {
                        det.psi_density = value
                            .parse()
                            .map_err(|_| Error::Config(format!("psi_density: '{value}'")))?
                    }
                    "r1_factor" => det.r1_factor = Some(parse_f64(key, value)?),
                    "r2_factor" => det.r2_factor = Some(parse_f64(key, value)?),
                    "delta_factor" => det.delta_factor = Some(parse_f64(key, value)?),
                    "phi_angle" => det.phi_angle = Some(parse_f64(key, value)?),
                    "audit" => det.audit = parse_bool(key, value)?,
                    _ => return cfg_err(format!("unknown detector key '{key}'")),
                }
                Ok(())
            })())?,
        }
    }

    let kind = kind.ok_or_else(|| Error::Config("[experiment] needs 'name'".into()))?;
    let mut entries = Vec::new();
    for mut m in manifolds {
        if m.name.is_empty() {
            m.name = m
                .spec
                .as_deref()
                .and_then(|s| s.split(':').next())
                .or(m.kind.as_deref())
                .unwrap_or("manifold")
                .to_string();
        }
        entries.push(m.finish()?);
    }
    if entries.is_empty() {
        return cfg_err("at least one [manifold] section is required");
    }
    let schedule = match (offsets, lambdas, radii) {
        (Some(offsets), None, None) => Schedule::Offsets {
            threshold: threshold.ok_or_else(|| Error::Config("'offsets' needs a 'threshold'".into()))?,
            offsets,
        },
        (None, Some(l), None) => Schedule::Lambdas(l),
        (None, None, Some(r)) => Schedule::Radii(r),
        _ => return cfg_err("exactly one of 'offsets', 'lambdas' or 'radii' is required"),
    };
    let n_values = n_values.ok_or_else(|| Error::Config("[experiment] needs 'n'".into()))?;
    let mut cfg = ExperimentConfig::new(kind, entries, n_values, schedule);
    if let Some(d) = degrees {
        cfg.degrees = d;
    }
    cfg.trials = trials;
    cfg.seed = seed;
    cfg.threads = threads;
    cfg.kappa = kappa;
    cfg.net_factor = net_factor;
    cfg.detector = det;
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "
# two manifolds
[manifold.flat]
spec = torus:1,1
[manifold]
kind = cylinder
dim = 2

[experiment]
name = connectivity
degrees = 0, 1
n = 500, 1000
threshold = closed-upper
offsets = -2, 2   # around the threshold
trials = 4
seed = 11

[detector]
eps_min = 0.1
audit = yes
";

    #[test]
    fn parses_sample() {
        let cfg = parse_config(SAMPLE).unwrap();
        assert_eq!(cfg.kind, ExperimentKind::Connectivity);
        assert_eq!(cfg.manifolds.len(), 2);
        assert_eq!(cfg.manifolds[0].name, "flat");
        assert_eq!(cfg.manifolds[1].name, "cylinder");
        assert!((cfg.manifolds[1].model().total_volume() - 1.0).abs() < 1e-12);
        assert_eq!(cfg.degrees, vec![0, 1]);
        assert_eq!(cfg.n_values, vec![500.0, 1000.0]);
        assert_eq!(cfg.trials, 4);
        assert_eq!(cfg.seed, 11);
        assert_eq!(cfg.detector.eps_min, 0.1);
        assert!(cfg.detector.audit);
        assert!(matches!(cfg.schedule, Schedule::Offsets { threshold: Threshold::ClosedUpper, .. }));
    }

    #[test]
    fn rejects_unknown_keys_and_sections() {
        let bad_key = SAMPLE.replace("seed = 11", "sed = 11");
        assert!(matches!(parse_config(&bad_key), Err(Error::Config(m)) if m.contains("sed")));
        let bad_section = format!("{SAMPLE}\n[plot]\nwidth = 3\n");
        assert!(parse_config(&bad_section).is_err());
        assert!(parse_config(&SAMPLE.replace("trials = 4", "trials = 0")).is_err());
        assert!(parse_config(&SAMPLE.replace("offsets = -2, 2", "offsets = -2, 2\nlambdas = 3")).is_err());
    }

    #[test]
    fn manifold_specs_roundtrip() {
        for s in ["torus:1,1", "torus:1,2,0.5", "cylinder:1,1", "cylinder:1,1,2", "disk:0.5"] {
            let m = parse_manifold_spec(s).unwrap();
            assert_eq!(spec_string(&m), s);
        }
        assert!(parse_manifold_spec("sphere:1").is_err());
        assert!(parse_manifold_spec("torus").is_err());
        assert!(parse_manifold_spec("disk:1,2").is_err());
    }
}
