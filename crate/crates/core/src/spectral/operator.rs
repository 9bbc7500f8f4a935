//! Operators that are diagonal in the shared sine eigenbasis.

use std::fmt;
use std::str::FromStr;

use super::basis::{BasisConfig, SpectralVector};
use crate::error::{Error, Result};

/// Relative threshold below which an eigenvalue is treated as zero.
pub const SINGULAR_TOL: f64 = 1e-12;

/// The named members of the operator family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OperatorKind {
    /// `A`, eigenvalues `lambda_n`.
    A,
    /// `A^{1/2}`.
    ASqrt,
    /// `J = A^{-1/2}`.
    J,
    /// `I_mu = (I + mu^2 A)^{-1}`.
    IMu,
    IMuSqrt,
    IMuInvSqrt,
    /// `M_mu` with eigenvalues `((1 + mu^2 lambda_n) / lambda_n)^{1/2}`.
    MMu,
    /// `K_mu = M_mu^{1/2}`.
    KMu,
    Identity,
}

impl OperatorKind {
    pub const ALL: [OperatorKind; 9] = [
        Self::A,
        Self::ASqrt,
        Self::J,
        Self::IMu,
        Self::IMuSqrt,
        Self::IMuInvSqrt,
        Self::MMu,
        Self::KMu,
        Self::Identity,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::A => "A",
            Self::ASqrt => "A_sqrt",
            Self::J => "J",
            Self::IMu => "I_mu",
            Self::IMuSqrt => "I_mu_sqrt",
            Self::IMuInvSqrt => "I_mu_inv_sqrt",
            Self::MMu => "M_mu",
            Self::KMu => "K_mu",
            Self::Identity => "identity",
        }
    }

    /// Eigenvalue for a given `lambda_n`.
    pub fn eigenvalue(self, lambda: f64, mu: f64) -> f64 {
        let s = 1.0 + mu * mu * lambda;
        match self {
            Self::A => lambda,
            Self::ASqrt => lambda.sqrt(),
            Self::J => 1.0 / lambda.sqrt(),
            Self::IMu => 1.0 / s,
            Self::IMuSqrt => 1.0 / s.sqrt(),
            Self::IMuInvSqrt => s.sqrt(),
            Self::MMu => (s / lambda).sqrt(),
            Self::KMu => (s / lambda).sqrt().sqrt(),
            Self::Identity => 1.0,
        }
    }
}

impl fmt::Display for OperatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for OperatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::UnknownOperator(s.to_string()))
    }
}

/// Eigenvalue table `f_1..f_N` over a basis, with a diagnostic label.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalOperator {
    eigvals: Vec<f64>,
    basis: BasisConfig,
    name: String,
}

impl DiagonalOperator {
    pub fn from_eigvals(basis: &BasisConfig, eigvals: Vec<f64>, name: impl Into<String>) -> Result<Self> {
        if eigvals.len() != basis.modes() {
            return Err(Error::LengthMismatch {
                expected: basis.modes(),
                found: eigvals.len(),
            });
        }
        Ok(Self {
            eigvals,
            basis: *basis,
            name: name.into(),
        })
    }

    pub fn from_fn(basis: &BasisConfig, name: impl Into<String>, f: impl Fn(usize) -> f64) -> Self {
        Self {
            eigvals: (1..=basis.modes()).map(f).collect(),
            basis: *basis,
            name: name.into(),
        }
    }

    /// Eigenvalue of mode `n` (1-based).
    pub fn eigval(&self, n: usize) -> f64 {
        self.eigvals[n - 1]
    }

    pub fn eigvals(&self) -> &[f64] {
        &self.eigvals
    }

    pub fn basis(&self) -> &BasisConfig {
        &self.basis
    }

    pub fn name(&self) -> &str {
        &self.name
    }
}

pub fn make_operator(kind: OperatorKind, mu: f64, cfg: &BasisConfig) -> Result<DiagonalOperator> {
    if !(mu.is_finite() && mu >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "mu",
            value: mu,
            reason: "perturbation must be finite and non-negative",
        });
    }
    Ok(DiagonalOperator::from_fn(cfg, kind.as_str(), |n| {
        kind.eigenvalue(cfg.lambda(n), mu)
    }))
}

pub fn op_apply(op: &DiagonalOperator, x: &SpectralVector) -> Result<SpectralVector> {
    if op.basis != *x.basis() {
        return Err(Error::BasisMismatch);
    }
    Ok(x.map(|n, a| op.eigval(n) * a))
}

pub fn op_compose(f: &DiagonalOperator, g: &DiagonalOperator) -> Result<DiagonalOperator> {
    if f.basis != g.basis {
        return Err(Error::BasisMismatch);
    }
    Ok(DiagonalOperator {
        eigvals: f.eigvals.iter().zip(&g.eigvals).map(|(a, b)| a * b).collect(),
        basis: f.basis,
        name: format!("{}*{}", f.name, g.name),
    })
}

pub fn op_invert(f: &DiagonalOperator) -> Result<DiagonalOperator> {
    let max = f.eigvals.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if let Some(i) = f.eigvals.iter().position(|v| !(v.abs() >= SINGULAR_TOL * max) || max == 0.0) {
        return Err(Error::SingularOperator {
            name: f.name.clone(),
            mode: i + 1,
        });
    }
    Ok(DiagonalOperator {
        eigvals: f.eigvals.iter().map(|v| 1.0 / v).collect(),
        basis: f.basis,
        name: format!("inv({})", f.name),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn op(kind: OperatorKind, mu: f64, cfg: &BasisConfig) -> DiagonalOperator {
        make_operator(kind, mu, cfg).unwrap()
    }

    #[test]
    fn named_eigenvalues() {
        let cfg = BasisConfig::unit(8);
        assert_relative_eq!(op(OperatorKind::A, 0.0, &cfg).eigval(1), PI * PI, max_relative = 1e-15);
        assert!(op(OperatorKind::IMu, 0.0, &cfg).eigvals().iter().all(|&v| v == 1.0));
        let m = op(OperatorKind::MMu, 0.1, &cfg).eigval(1);
        assert_relative_eq!(m, 0.333_648_293, max_relative = 1e-8);
        assert_relative_eq!(m, ((1.0 + 0.01 * PI * PI) / (PI * PI)).sqrt(), max_relative = 1e-15);
        let m0 = op(OperatorKind::MMu, 0.0, &cfg);
        assert_relative_eq!(m0.eigval(3), 1.0 / (3.0 * PI), max_relative = 1e-15);
    }

    #[test]
    fn parses_kinds() {
        for k in OperatorKind::ALL {
            assert_eq!(k.as_str().parse::<OperatorKind>().unwrap(), k);
        }
        assert_eq!(
            "B".parse::<OperatorKind>(),
            Err(Error::UnknownOperator("B".into()))
        );
    }

    #[test]
    fn apply_examples() {
        let cfg = BasisConfig::unit(4);
        let x = SpectralVector::from_coeffs(&cfg, vec![1.0, -2.0, 0.5, 3.0]).unwrap();
        assert_eq!(op_apply(&op(OperatorKind::Identity, 0.0, &cfg), &x).unwrap(), x);
        let ax = op_apply(&op(OperatorKind::A, 0.0, &cfg), &SpectralVector::unit(&cfg, 1)).unwrap();
        assert_relative_eq!(ax.coeff(1), PI * PI);
        assert_eq!(ax.coeff(2), 0.0);
        let ja = op_compose(&op(OperatorKind::J, 0.0, &cfg), &op(OperatorKind::ASqrt, 0.0, &cfg)).unwrap();
        let y = op_apply(&ja, &x).unwrap();
        for (a, b) in y.coeffs().iter().zip(x.coeffs()) {
            assert_relative_eq!(a, b, max_relative = 1e-15);
        }
        let other = SpectralVector::zeros(&BasisConfig::unit(5));
        assert_eq!(op_apply(&ja, &other), Err(Error::BasisMismatch));
    }

    #[test]
    fn compose_and_invert_examples() {
        let cfg = BasisConfig::new(2.0, 16, 1.0, 1.0).unwrap();
        let mu = 0.3;
        let a = op(OperatorKind::A, mu, &cfg);
        let s = op(OperatorKind::ASqrt, mu, &cfg);
        let i = op(OperatorKind::IMu, mu, &cfg);
        let ss = op_compose(&s, &s).unwrap();
        let inv = op_invert(&i).unwrap();
        let sis = op_compose(&op_compose(&s, &i).unwrap(), &s).unwrap();
        for n in 1..=16 {
            let l = cfg.lambda(n);
            assert_relative_eq!(ss.eigval(n), a.eigval(n), max_relative = 1e-14);
            assert_relative_eq!(inv.eigval(n), 1.0 + mu * mu * l, max_relative = 1e-14);
            assert_relative_eq!(sis.eigval(n), l / (1.0 + mu * mu * l), max_relative = 1e-14);
        }
    }

    #[test]
    fn invert_names_singular_mode() {
        let cfg = BasisConfig::unit(4);
        let f = DiagonalOperator::from_eigvals(&cfg, vec![1.0, 2.0, 1e-14, 3.0], "F").unwrap();
        assert_eq!(
            op_invert(&f),
            Err(Error::SingularOperator { name: "F".into(), mode: 3 })
        );
        let z = DiagonalOperator::from_eigvals(&cfg, vec![0.0; 4], "Z").unwrap();
        assert!(op_invert(&z).is_err());
        let nan = DiagonalOperator::from_eigvals(&cfg, vec![1.0, f64::NAN, 1.0, 1.0], "N").unwrap();
        assert!(op_invert(&nan).is_err());
    }

    #[test]
    fn bounded_surrogate_large_n() {
        let cfg = BasisConfig::unit(10_000);
        for mu in [1e-3, 0.1, 1.0] {
            let f = op_compose(&op(OperatorKind::ASqrt, mu, &cfg), &op(OperatorKind::IMuSqrt, mu, &cfg)).unwrap();
            assert!(f.eigvals().iter().all(|&v| v <= 1.0 / mu));
            let lm = op_compose(&f, &f).unwrap();
            assert!(lm.eigvals().windows(2).all(|w| w[1] > w[0]));
            assert!(lm.eigvals().iter().all(|&v| v <= 1.0 / (mu * mu)));
        }
    }

    proptest! {
        #[test]
        fn identities_hold(mu in 1e-3f64..=1.0, li in 0usize..3, n in 1usize..=64) {
            let l = [0.5, 1.0, 2.0][li];
            let cfg = BasisConfig::new(l, 64, 1.0, 1.0).unwrap();
            let lam = cfg.lambda(n);
            let e = |k| OperatorKind::eigenvalue(k, lam, mu);
            use OperatorKind::*;
            prop_assert!((e(J) * e(ASqrt) - 1.0).abs() < 1e-14);
            prop_assert!((e(IMuSqrt) * e(IMuSqrt) / e(IMu) - 1.0).abs() < 1e-14);
            prop_assert!((e(KMu) * e(KMu) / e(MMu) - 1.0).abs() < 1e-14);
            prop_assert!((e(MMu).powi(2) / (1.0 / lam + mu * mu) - 1.0).abs() < 1e-14);
            let lhs = e(A) * e(IMu);
            let rhs = (1.0 - e(IMu)) / (mu * mu);
            prop_assert!((lhs / rhs - 1.0).abs() < 1e-10);
            for f in OperatorKind::ALL {
                for g in OperatorKind::ALL {
                    prop_assert_eq!(e(f) * e(g), e(g) * e(f));
                }
            }
        }

        #[test]
        fn parseval(coeffs in proptest::collection::vec(-10.0f64..10.0, 8)) {
            let cfg = BasisConfig::unit(8);
            let x = SpectralVector::from_coeffs(&cfg, coeffs.clone()).unwrap();
            let direct: f64 = coeffs.iter().map(|a| a * a).sum();
            prop_assert_eq!(x.norm_half_sq(), direct);
        }
    }
}
