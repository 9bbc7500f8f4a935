//! Projection of spatial profiles onto the energy-space sine basis, and the
//! inverse synthesis.
//!
//! Coefficients are `a_n = <x, phi~_n>_{1/2} = sqrt(lambda_n) <x, phi_n>`.
//! Sampled profiles use the composite trapezoid rule on the supplied grid;
//! named analytic profiles use composite Gauss-Legendre with 64 nodes per
//! wavelength of the highest retained mode.

use std::f64::consts::PI;
use std::str::FromStr;

use super::basis::{basis_unchecked, BasisConfig, BasisFamily, SpectralVector};
use super::quadrature::{trapezoid, GaussLegendre};
use crate::error::{Error, Result};

const GL_NODES_PER_WAVELENGTH: usize = 64;

/// Parses the two-column `(position, value)` text format: whitespace
/// separated, `#` starts a comment, positions strictly ascending.
pub fn parse_profile_text(text: &str) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(Error::InvalidProfile(format!(
                "line {}: expected 2 columns, found {}",
                lineno + 1,
                fields.len()
            )));
        }
        let parse = |s: &str| {
            s.parse::<f64>().map_err(|_| {
                Error::InvalidProfile(format!("line {}: cannot parse `{s}`", lineno + 1))
            })
        };
        out.push((parse(fields[0])?, parse(fields[1])?));
    }
    Ok(out)
}

fn validate_samples(samples: &[(f64, f64)], cfg: &BasisConfig) -> Result<()> {
    if samples.len() < 2 {
        return Err(Error::InvalidProfile("need at least two samples".into()));
    }
    let l = cfg.length();
    for (i, w) in samples.windows(2).enumerate() {
        if w[1].0 <= w[0].0 {
            return Err(Error::InvalidProfile(format!(
                "positions must be strictly increasing (sample {} at {} follows {})",
                i + 1,
                w[1].0,
                w[0].0
            )));
        }
    }
    let pos_tol = 1e-12 * l;
    let (first, last) = (samples[0], samples[samples.len() - 1]);
    if first.0.abs() > pos_tol || (last.0 - l).abs() > pos_tol {
        return Err(Error::InvalidProfile(format!(
            "samples must cover [0, {l}], found [{}, {}]",
            first.0, last.0
        )));
    }
    let scale = samples.iter().fold(1.0_f64, |m, s| m.max(s.1.abs()));
    let val_tol = 1e-9 * scale;
    if first.1.abs() > val_tol || last.1.abs() > val_tol {
        return Err(Error::InvalidProfile(format!(
            "Dirichlet data violated: endpoint values {} and {} must vanish",
            first.1, last.1
        )));
    }
    Ok(())
}

/// Trapezoid projection of sampled data onto the first `N` modes.
pub fn project_profile(samples: &[(f64, f64)], cfg: &BasisConfig) -> Result<SpectralVector> {
    validate_samples(samples, cfg)?;
    let l = cfg.length();
    let xs: Vec<f64> = samples.iter().map(|s| s.0.clamp(0.0, l)).collect();
    Ok(SpectralVector::from_fn(cfg, |n| {
        let integrand: Vec<f64> = xs
            .iter()
            .zip(samples)
            .map(|(x, s)| s.1 * basis_unchecked(n, *x, BasisFamily::L2, cfg))
            .collect();
        let inner = trapezoid(&xs, &integrand);
        cfg.lambda(n).sqrt() * inner
    }))
}

/// `u(s) = sum_n a_n phi~_n(s)` at each requested position.
pub fn reconstruct(x: &SpectralVector, positions: &[f64]) -> Result<Vec<f64>> {
    let cfg = x.basis();
    positions
        .iter()
        .map(|&p| {
            cfg.check_position(p)?;
            Ok(x.coeffs()
                .iter()
                .enumerate()
                .map(|(i, a)| a * basis_unchecked(i + 1, p, BasisFamily::Half, cfg))
                .sum())
        })
        .collect()
}

/// `points` equally spaced positions covering `[0, L]` inclusive.
pub fn uniform_grid(cfg: &BasisConfig, points: usize) -> Vec<f64> {
    assert!(points >= 2, "grid needs at least two points");
    let h = cfg.length() / (points - 1) as f64;
    (0..points)
        .map(|i| if i == points - 1 { cfg.length() } else { i as f64 * h })
        .collect()
}

/// Named profiles with closed-form values. Shape parameters are expressed
/// as fractions of the domain length so the same key works for any `L`.
#[derive(Debug, Clone, PartialEq)]
pub enum AnalyticProfile {
    Zero,
    /// `phi~_n` itself: coefficient vector is the unit vector `e_n`.
    SingleMode { n: usize },
    /// Piecewise-linear hat peaking at `L/2` with unit height.
    Triangle,
    /// `(1 + cos(2 pi (s - L/2) / w)) / 2` on `|s - L/2| < w/2`, `w = L/4`.
    RaisedCosine,
    /// `exp(-((s - L/2) / sigma)^2)`, `sigma = L/16`. Endpoint values are
    /// below 1e-27 and the sine spectrum decays like `exp(-(n pi sigma / L)^2 / 4)`.
    Gaussian,
}

impl FromStr for AnalyticProfile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "zero" => return Ok(Self::Zero),
            "triangle" => return Ok(Self::Triangle),
            "raised-cosine" => return Ok(Self::RaisedCosine),
            "gaussian" => return Ok(Self::Gaussian),
            "single-mode" => return Ok(Self::SingleMode { n: 1 }),
            _ => {}
        }
        if let Some(rest) = s.strip_prefix("single-mode:") {
            if let Ok(n) = rest.parse::<usize>() {
                if n >= 1 {
                    return Ok(Self::SingleMode { n });
                }
            }
        }
        Err(Error::UnknownProfile(s.to_string()))
    }
}

impl AnalyticProfile {
    pub fn key(&self) -> String {
        match self {
            Self::Zero => "zero".into(),
            Self::SingleMode { n } => format!("single-mode:{n}"),
            Self::Triangle => "triangle".into(),
            Self::RaisedCosine => "raised-cosine".into(),
            Self::Gaussian => "gaussian".into(),
        }
    }

    pub fn value(&self, s: f64, cfg: &BasisConfig) -> f64 {
        let l = cfg.length();
        let c = 0.5 * l;
        match *self {
            Self::Zero => 0.0,
            Self::SingleMode { n } => basis_unchecked(n, s, BasisFamily::Half, cfg),
            Self::Triangle => 1.0 - (s - c).abs() / c,
            Self::RaisedCosine => {
                let w = 0.25 * l;
                if (s - c).abs() < 0.5 * w {
                    0.5 * (1.0 + (2.0 * PI * (s - c) / w).cos())
                } else {
                    0.0
                }
            }
            Self::Gaussian => {
                let sigma = l / 16.0;
                (-((s - c) / sigma).powi(2)).exp()
            }
        }
    }

    /// Interior points where the profile is not smooth.
    fn breakpoints(&self, cfg: &BasisConfig) -> Vec<f64> {
        let l = cfg.length();
        match self {
            Self::Triangle => vec![0.5 * l],
            Self::RaisedCosine => vec![0.5 * l - 0.125 * l, 0.5 * l + 0.125 * l],
            _ => Vec::new(),
        }
    }

    pub fn samples(&self, cfg: &BasisConfig, points: usize) -> Vec<(f64, f64)> {
        uniform_grid(cfg, points)
            .into_iter()
            .map(|s| (s, self.value(s, cfg)))
            .collect()
    }
}

/// Coefficients of a named profile. Single modes are exact; everything else
/// goes through composite Gauss-Legendre with panels no wider than one
/// wavelength `2L/N` of the highest mode, aligned with profile kinks.
pub fn project_analytic(profile: &AnalyticProfile, cfg: &BasisConfig) -> SpectralVector {
    match profile {
        AnalyticProfile::Zero => return SpectralVector::zeros(cfg),
        AnalyticProfile::SingleMode { n } => return SpectralVector::unit(cfg, *n),
        _ => {}
    }
    let l = cfg.length();
    let wavelength = 2.0 * l / cfg.modes() as f64;
    let mut edges = vec![0.0];
    edges.extend(profile.breakpoints(cfg));
    edges.push(l);

    let rule = GaussLegendre::new(GL_NODES_PER_WAVELENGTH);
    let mut nodes = Vec::new();
    for w in edges.windows(2) {
        let panels = ((w[1] - w[0]) / wavelength).ceil().max(1.0) as usize;
        let h = (w[1] - w[0]) / panels as f64;
        for k in 0..panels {
            let a = w[0] + k as f64 * h;
            nodes.extend(rule.mapped(a, a + h).map(|(x, wt)| (x, wt * profile.value(x, cfg))));
        }
    }
    SpectralVector::from_fn(cfg, |n| {
        let inner: f64 = nodes
            .iter()
            .map(|&(x, wf)| wf * basis_unchecked(n, x, BasisFamily::L2, cfg))
            .sum();
        cfg.lambda(n).sqrt() * inner
    })
}
