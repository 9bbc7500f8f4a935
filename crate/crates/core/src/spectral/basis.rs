//! Dirichlet sine bases on `[0, L]` and truncated coefficient vectors.
//!
//! Every field is stored through its coefficients `a_n = <x, phi~_n>_{1/2}`
//! in the orthonormal basis `phi~_n = sqrt(2L)/(n pi) sin(n pi s / L)` of the
//! energy space, so `||x||_{1/2}^2 = sum a_n^2`.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Domain length, truncation order and the two physical constants of the
/// string (distributed mass `m` in kg/m, elastic constant `kappa` in N).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisConfig {
    length: f64,
    modes: usize,
    mass: f64,
    stiffness: f64,
}

impl BasisConfig {
    pub fn new(length: f64, modes: usize, mass: f64, stiffness: f64) -> Result<Self> {
        positive("L", length)?;
        positive("m", mass)?;
        positive("kappa", stiffness)?;
        if modes == 0 {
            return Err(Error::InvalidParameter {
                name: "N",
                value: 0.0,
                reason: "truncation order must be at least 1",
            });
        }
        Ok(Self {
            length,
            modes,
            mass,
            stiffness,
        })
    }

    /// `m = kappa = L = 1` with `modes` retained modes.
    pub fn unit(modes: usize) -> Self {
        Self::new(1.0, modes, 1.0, 1.0).expect("unit configuration is valid")
    }

    pub fn with_modes(&self, modes: usize) -> Result<Self> {
        Self::new(self.length, modes, self.mass, self.stiffness)
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn stiffness(&self) -> f64 {
        self.stiffness
    }

    /// `lambda_n = (n pi / L)^2`, `n >= 1`.
    pub fn lambda(&self, n: usize) -> f64 {
        debug_assert!(n >= 1);
        let k = n as f64 * PI / self.length;
        k * k
    }

    /// Unperturbed modal frequency `omega_n = sqrt(kappa lambda_n / m)`.
    pub fn omega(&self, n: usize) -> f64 {
        (self.stiffness * self.lambda(n) / self.mass).sqrt()
    }

    /// Characteristic time `L sqrt(m / kappa)` of the string.
    pub fn time_scale(&self) -> f64 {
        self.length * (self.mass / self.stiffness).sqrt()
    }

    /// Default exclusion window near `t = 0` for limit-form evaluation.
    pub fn default_delta_min(&self) -> f64 {
        1e-6 * self.time_scale()
    }

    pub fn check_position(&self, position: f64) -> Result<()> {
        if !(0.0..=self.length).contains(&position) {
            return Err(Error::PositionOutOfRange {
                position,
                length: self.length,
            });
        }
        Ok(())
    }
}

fn positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be finite and positive",
        })
    }
}

/// `(n pi / L)^2`.
pub fn lambda_n(n: usize, cfg: &BasisConfig) -> f64 {
    cfg.lambda(n)
}

/// Which of the two sine families to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisFamily {
    /// `phi_n = sqrt(2/L) sin(n pi s / L)`, orthonormal in L2.
    L2,
    /// `phi~_n = phi_n / sqrt(lambda_n)`, orthonormal in the energy space.
    Half,
}

pub fn basis_fn_value(
    n: usize,
    position: f64,
    family: BasisFamily,
    cfg: &BasisConfig,
) -> Result<f64> {
    cfg.check_position(position)?;
    Ok(basis_unchecked(n, position, family, cfg))
}

pub(crate) fn basis_unchecked(n: usize, position: f64, family: BasisFamily, cfg: &BasisConfig) -> f64 {
    let l = cfg.length();
    let s = (n as f64 * PI * position / l).sin();
    match family {
        BasisFamily::L2 => (2.0 / l).sqrt() * s,
        BasisFamily::Half => (2.0 * l).sqrt() / (n as f64 * PI) * s,
    }
}

/// Truncated coefficient sequence `a_1..a_N` of a field in the `phi~_n` basis.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralVector {
    coeffs: Vec<f64>,
    basis: BasisConfig,
}

impl SpectralVector {
    pub fn zeros(basis: &BasisConfig) -> Self {
        Self {
            coeffs: vec![0.0; basis.modes()],
            basis: *basis,
        }
    }

    pub fn from_coeffs(basis: &BasisConfig, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != basis.modes() {
            return Err(Error::LengthMismatch {
                expected: basis.modes(),
                found: coeffs.len(),
            });
        }
        Ok(Self {
            coeffs,
            basis: *basis,
        })
    }

    /// Builds the vector from a function of the 1-based mode index.
    pub fn from_fn(basis: &BasisConfig, f: impl FnMut(usize) -> f64) -> Self {
        Self {
            coeffs: (1..=basis.modes()).map(f).collect(),
            basis: *basis,
        }
    }

    /// Coefficient vector of the single basis function `phi~_n`.
    pub fn unit(basis: &BasisConfig, n: usize) -> Self {
        Self::from_fn(basis, |k| if k == n { 1.0 } else { 0.0 })
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn basis(&self) -> &BasisConfig {
        &self.basis
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Coefficient of mode `n` (1-based).
    pub fn coeff(&self, n: usize) -> f64 {
        self.coeffs[n - 1]
    }

    pub fn check_basis(&self, other: &Self) -> Result<()> {
        if self.basis != other.basis {
            Err(Error::BasisMismatch)
        } else {
            Ok(())
        }
    }

    /// `||x||_{1/2}^2 = sum a_n^2`.
    pub fn norm_half_sq(&self) -> f64 {
        self.coeffs.iter().map(|a| a * a).sum()
    }

    pub fn norm_half(&self) -> f64 {
        self.norm_half_sq().sqrt()
    }

    /// `||x||_{L2}^2 = sum a_n^2 / lambda_n`.
    pub fn norm_l2_sq(&self) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, a)| a * a / self.basis.lambda(i + 1))
            .sum()
    }

    pub fn dot_half(&self, other: &Self) -> Result<f64> {
        self.check_basis(other)?;
        Ok(self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a * b)
            .sum())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        self.map(|_, a| a * factor)
    }

    /// Applies `f(n, a_n)` coefficient-wise.
    pub fn map(&self, f: impl Fn(usize, f64) -> f64) -> Self {
        Self {
            coeffs: self
                .coeffs
                .iter()
                .enumerate()
                .map(|(i, &a)| f(i + 1, a))
                .collect(),
            basis: self.basis,
        }
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.check_basis(other)?;
        Ok(Self {
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(&a, &b)| f(a, b))
                .collect(),
            basis: self.basis,
        })
    }

    /// `|a_N| / max_n |a_n|`, zero for the zero vector. Small values indicate
    /// the truncation order resolves the field.
    pub fn tail_indicator(&self) -> f64 {
        let max = self.coeffs.iter().fold(0.0_f64, |m, a| m.max(a.abs()));
        if max == 0.0 {
            return 0.0;
        }
        self.coeffs.last().map_or(0.0, |a| a.abs() / max)
    }
}
