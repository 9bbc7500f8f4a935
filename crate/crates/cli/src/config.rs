//! Run configuration: TOML with dotted section keys, validated as a whole so
//! every problem is reported at once with its field path.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::Serialize;
use wave_tpbvp::spectral::{parse_profile_text, project_analytic, project_profile, AnalyticProfile};
use wave_tpbvp::{BasisConfig, Segments, SpectralVector};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Physical {
    pub m: f64,
    pub kappa: f64,
    #[serde(rename = "L")]
    pub length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Tolerances {
    pub round_trip: f64,
    pub riccati: f64,
    pub hjb: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Numerics {
    #[serde(rename = "N")]
    pub modes: usize,
    pub mu: f64,
    pub delta_min: f64,
    pub tolerances: Tolerances,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Displacement,
    Velocity,
}

/// Where a boundary profile comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum ProfileSource {
    Named(AnalyticProfile),
    /// Two-column `(position, value)` text file.
    File(PathBuf),
}

impl Serialize for ProfileSource {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Self::Named(p) => s.serialize_str(&p.key()),
            Self::File(path) => s.serialize_str(&format!("file:{}", path.display())),
        }
    }
}

impl ProfileSource {
    fn parse(raw: &str, base: &Path) -> Result<Self, String> {
        if let Some(path) = raw.strip_prefix("file:") {
            let path = Path::new(path.trim());
            let full = if path.is_absolute() { path.to_path_buf() } else { base.join(path) };
            return Ok(Self::File(full));
        }
        raw.parse::<AnalyticProfile>()
            .map(Self::Named)
            .map_err(|_| format!("unknown profile `{raw}` (expected zero, single-mode[:n], triangle, raised-cosine, gaussian or file:<path>)"))
    }

    pub fn load(&self, cfg: &BasisConfig) -> Result<SpectralVector, String> {
        match self {
            Self::Named(p) => Ok(project_analytic(p, cfg)),
            Self::File(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
                let samples = parse_profile_text(&text).map_err(|e| format!("{}: {e}", path.display()))?;
                project_profile(&samples, cfg).map_err(|e| format!("{}: {e}", path.display()))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentsSetting(pub Segments);

impl Serialize for SegmentsSetting {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self.0 {
            Segments::Auto => s.serialize_str("auto"),
            Segments::Count(n) => s.serialize_u64(n as u64),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Problem {
    pub horizon: f64,
    pub boundary: Boundary,
    pub initial: ProfileSource,
    pub terminal: ProfileSource,
    pub segments: SegmentsSetting,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Output {
    pub dir: Option<PathBuf>,
    pub snapshots: usize,
    pub grid: usize,
    /// Time span of the field export; defaults to the horizon.
    pub duration: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sweep {
    pub mu: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Validate {
    /// Replacement `(n, lambda_n)` table fed to the Riccati suite.
    pub eigen_table: Option<PathBuf>,
    pub probes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub physical: Physical,
    pub numerics: Numerics,
    pub problem: Problem,
    pub output: Output,
    pub sweep: Sweep,
    pub validate: Validate,
}

impl Default for RunConfig {
    /// The worked example: unit string, horizon `pi/3`, zero initial
    /// displacement, Gaussian target, 64 modes.
    fn default() -> Self {
        Self {
            physical: Physical {
                m: 1.0,
                kappa: 1.0,
                length: 1.0,
            },
            numerics: Numerics {
                modes: 64,
                mu: 0.0,
                delta_min: 1e-6,
                tolerances: Tolerances {
                    round_trip: 1e-8,
                    riccati: 1e-6,
                    hjb: 1e-5,
                },
            },
            problem: Problem {
                horizon: PI / 3.0,
                boundary: Boundary::Displacement,
                initial: ProfileSource::Named(AnalyticProfile::Zero),
                terminal: ProfileSource::Named(AnalyticProfile::Gaussian),
                segments: SegmentsSetting(Segments::Auto),
            },
            output: Output {
                dir: None,
                snapshots: 101,
                grid: 201,
                duration: None,
            },
            sweep: Sweep {
                mu: vec![1e-1, 3e-2, 1e-2, 3e-3, 1e-3, 3e-4, 1e-4],
            },
            validate: Validate {
                eigen_table: None,
                probes: 200,
            },
        }
    }
}

/// All problems found in a configuration, each prefixed by its field path.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigErrors(pub Vec<String>);

impl std::fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0.join("; "))
    }
}

impl std::error::Error for ConfigErrors {}

/// Values given on the command line that replace configuration keys.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub modes: Option<usize>,
    pub mu: Option<f64>,
}

impl Overrides {
    fn apply(&self, root: &mut toml::Table) -> Result<(), ConfigErrors> {
        if self.modes.is_none() && self.mu.is_none() {
            return Ok(());
        }
        let numerics = root
            .entry("numerics")
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| ConfigErrors(vec!["numerics: expected a table".into()]))?;
        if let Some(n) = self.modes {
            numerics.insert("N".into(), toml::Value::Integer(n as i64));
        }
        if let Some(mu) = self.mu {
            numerics.insert("mu".into(), toml::Value::Float(mu));
        }
        Ok(())
    }
}

struct Reader<'a> {
    root: &'a toml::Table,
    seen: BTreeSet<String>,
    errors: Vec<String>,
}

impl<'a> Reader<'a> {
    fn get(&mut self, path: &str) -> Option<&'a toml::Value> {
        self.seen.insert(path.to_string());
        let mut parts = path.split('.');
        let mut value = self.root.get(parts.next()?)?;
        for p in parts {
            value = value.as_table()?.get(p)?;
        }
        Some(value)
    }

    fn error(&mut self, path: &str, msg: impl std::fmt::Display) {
        self.errors.push(format!("{path}: {msg}"));
    }

    fn float(&mut self, path: &str, default: f64, valid: impl Fn(f64) -> Option<&'static str>) -> f64 {
        let v = match self.get(path) {
            None => return default,
            Some(toml::Value::Float(f)) => *f,
            Some(toml::Value::Integer(i)) => *i as f64,
            Some(other) => {
                self.error(path, format!("expected a number, found {}", other.type_str()));
                return default;
            }
        };
        if let Some(msg) = valid(v) {
            self.error(path, format!("{msg} (got {v})"));
        }
        v
    }

    fn count(&mut self, path: &str, default: usize, min: usize) -> usize {
        match self.get(path) {
            None => default,
            Some(toml::Value::Integer(i)) if *i >= min as i64 => *i as usize,
            Some(toml::Value::Integer(i)) => {
                self.error(path, format!("must be at least {min} (got {i})"));
                default
            }
            Some(other) => {
                self.error(path, format!("expected an integer, found {}", other.type_str()));
                default
            }
        }
    }

    fn string(&mut self, path: &str) -> Option<&'a str> {
        match self.get(path) {
            None => None,
            Some(toml::Value::String(s)) => Some(s.as_str()),
            Some(other) => {
                self.error(path, format!("expected a string, found {}", other.type_str()));
                None
            }
        }
    }

    fn unknown_keys(&mut self) {
        let mut leaves = Vec::new();
        collect_leaves(self.root, "", &mut leaves);
        for key in leaves {
            if !self.seen.contains(&key) {
                self.error(&key, "unknown key");
            }
        }
    }
}

fn collect_leaves(table: &toml::Table, prefix: &str, out: &mut Vec<String>) {
    for (k, v) in table {
        let path = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        match v {
            toml::Value::Table(t) => collect_leaves(t, &path, out),
            _ => out.push(path),
        }
    }
}

fn positive(v: f64) -> Option<&'static str> {
    (!(v.is_finite() && v > 0.0)).then_some("must be finite and positive")
}

impl RunConfig {
    /// Parses configuration text. Relative profile paths resolve against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self, ConfigErrors> {
        Self::parse_with(text, base, &Overrides::default())
    }

    /// Parses with command-line overrides applied before validation, so an
    /// override is checked exactly like the key it replaces.
    pub fn parse_with(text: &str, base: &Path, overrides: &Overrides) -> Result<Self, ConfigErrors> {
        let mut root: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| ConfigErrors(vec![format!("syntax: {}", e.message())]))?;
        overrides.apply(&mut root)?;
        let d = Self::default();
        let mut r = Reader {
            root: &root,
            seen: BTreeSet::new(),
            errors: Vec::new(),
        };

        let physical = Physical {
            m: r.float("physical.m", d.physical.m, positive),
            kappa: r.float("physical.kappa", d.physical.kappa, positive),
            length: r.float("physical.L", d.physical.length, positive),
        };
        let time_scale = physical.length * (physical.m / physical.kappa).sqrt();
        let modes = r.count("numerics.N", d.numerics.modes, 1);
        let mu = r.float("numerics.mu", d.numerics.mu, |v| {
            (!(v.is_finite() && (0.0..=1.0).contains(&v))).then_some("must lie in [0, 1]")
        });
        let delta_min = r.float("numerics.delta_min", 1e-6 * time_scale, positive);
        let tolerances = Tolerances {
            round_trip: r.float("numerics.tolerances.round_trip", d.numerics.tolerances.round_trip, positive),
            riccati: r.float("numerics.tolerances.riccati", d.numerics.tolerances.riccati, positive),
            hjb: r.float("numerics.tolerances.hjb", d.numerics.tolerances.hjb, positive),
        };

        let horizon = r.float("problem.horizon", d.problem.horizon, positive);
        if horizon.is_finite() && horizon > 0.0 && horizon < delta_min {
            r.error("problem.horizon", format!("must be at least numerics.delta_min = {delta_min}"));
        }
        let boundary = match r.string("problem.boundary") {
            None => d.problem.boundary,
            Some("displacement") => Boundary::Displacement,
            Some("velocity") => Boundary::Velocity,
            Some(other) => {
                r.error("problem.boundary", format!("expected `displacement` or `velocity`, found `{other}`"));
                d.problem.boundary
            }
        };
        let profile = |r: &mut Reader, path: &str, default: ProfileSource| match r.string(path) {
            None => default,
            Some(raw) => ProfileSource::parse(raw, base).unwrap_or_else(|e| {
                r.error(path, e);
                default
            }),
        };
        let initial = profile(&mut r, "problem.initial", d.problem.initial.clone());
        let terminal = profile(&mut r, "problem.terminal", d.problem.terminal.clone());
        let segments = match r.get("problem.segments") {
            None => Segments::Auto,
            Some(toml::Value::String(s)) if s == "auto" => Segments::Auto,
            Some(toml::Value::Integer(i)) if *i >= 1 => Segments::Count(*i as usize),
            Some(other) => {
                r.error("problem.segments", format!("expected `auto` or a positive integer, found {other}"));
                Segments::Auto
            }
        };

        let output = Output {
            dir: r.string("output.dir").map(|s| base.join(s)),
            snapshots: r.count("output.snapshots", d.output.snapshots, 1),
            grid: r.count("output.grid", d.output.grid, 2),
            duration: r.get("output.duration").is_some().then(|| r.float("output.duration", 0.0, |v| {
                (!(v.is_finite() && v >= 0.0)).then_some("must be finite and non-negative")
            })),
        };

        let sweep_mu = match r.get("sweep.mu") {
            None => d.sweep.mu.clone(),
            Some(toml::Value::Array(items)) => {
                let mut out = Vec::new();
                for (i, item) in items.iter().enumerate() {
                    match item.as_float().or_else(|| item.as_integer().map(|v| v as f64)) {
                        Some(v) if v.is_finite() && v > 0.0 => out.push(v),
                        _ => r.error(&format!("sweep.mu[{i}]"), "must be a positive number"),
                    }
                }
                if out.windows(2).any(|w| w[1] >= w[0]) {
                    r.error("sweep.mu", "values must be strictly decreasing");
                }
                out
            }
            Some(other) => {
                r.error("sweep.mu", format!("expected an array, found {}", other.type_str()));
                d.sweep.mu.clone()
            }
        };

        let validate = Validate {
            eigen_table: r.string("validate.eigen_table").map(|s| base.join(s)),
            probes: r.count("validate.probes", d.validate.probes, 1),
        };

        r.unknown_keys();
        if !r.errors.is_empty() {
            return Err(ConfigErrors(r.errors));
        }
        Ok(Self {
            physical,
            numerics: Numerics {
                modes,
                mu,
                delta_min,
                tolerances,
            },
            problem: Problem {
                horizon,
                boundary,
                initial,
                terminal,
                segments: SegmentsSetting(segments),
            },
            output,
            sweep: Sweep { mu: sweep_mu },
            validate,
        })
    }

    pub fn load(path: &Path, overrides: &Overrides) -> Result<Self, ConfigErrors> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigErrors(vec![format!("{}: {e}", path.display())]))?;
        Self::parse_with(&text, path.parent().unwrap_or(Path::new(".")), overrides)
    }

    pub fn basis(&self) -> Result<BasisConfig, ConfigErrors> {
        BasisConfig::new(self.physical.length, self.numerics.modes, self.physical.m, self.physical.kappa)
            .map_err(|e| ConfigErrors(vec![e.to_string()]))
    }

    /// Projects the initial and terminal profiles, reporting both failures.
    pub fn boundary_data(&self) -> Result<(SpectralVector, SpectralVector), ConfigErrors> {
        let cfg = self.basis()?;
        let x = self.problem.initial.load(&cfg);
        let z = self.problem.terminal.load(&cfg);
        match (x, z) {
            (Ok(x), Ok(z)) => Ok((x, z)),
            (x, z) => Err(ConfigErrors(
                [("problem.initial", x.err()), ("problem.terminal", z.err())]
                    .into_iter()
                    .filter_map(|(p, e)| e.map(|e| format!("{p}: {e}")))
                    .collect(),
            )),
        }
    }
}
