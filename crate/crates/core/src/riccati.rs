//! Closed-form eigenvalue trajectories of the Riccati operators `P`, `Q`,
//! `R`, the bi-quadratic value function they define, and checks of the
//! differential equations they satisfy.
//!
//! For a finite penalty `c` the value is `W^{mu,c}(t, x, z)`; the limit
//! `c -> inf` is the fundamental solution with a hard terminal constraint.

use crate::error::{Error, Result};
use crate::payoff::concave_horizon;
use crate::spectral::{BasisConfig, OperatorKind, SpectralVector};

/// `|sin(omega_n t)|` below this flags mode `n` as a conjugate point.
pub const CONJUGATE_TOL: f64 = 1e-9;

/// `c_bar = (m kappa)^{1/2} tan(sqrt 2)`: smallest admissible penalty.
pub fn cbar(m: f64, kappa: f64) -> f64 {
    (m * kappa).sqrt() * 2f64.sqrt().tan()
}

/// Per-mode constants at perturbation `mu`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeParams {
    pub n: usize,
    pub lambda: f64,
    /// `lambda_n / (1 + mu^2 lambda_n)`.
    pub lambda_mu: f64,
    /// `(lambda_mu / (m kappa))^{1/2}`.
    pub alpha: f64,
    /// `(kappa lambda_mu / m)^{1/2}`.
    pub omega: f64,
    /// Eigenvalue of `M_mu`.
    pub m_n: f64,
}

impl ModeParams {
    pub fn new(n: usize, mu: f64, cfg: &BasisConfig) -> Self {
        Self::from_lambda(n, cfg.lambda(n), mu, cfg)
    }

    /// Same constants from an explicitly supplied `lambda_n`.
    pub fn from_lambda(n: usize, lambda: f64, mu: f64, cfg: &BasisConfig) -> Self {
        let (m, kappa) = (cfg.mass(), cfg.stiffness());
        let lambda_mu = lambda / (1.0 + mu * mu * lambda);
        Self {
            n,
            lambda,
            lambda_mu,
            alpha: (lambda_mu / (m * kappa)).sqrt(),
            omega: (kappa * lambda_mu / m).sqrt(),
            m_n: OperatorKind::MMu.eigenvalue(lambda, mu),
        }
    }

    /// `arctan(1 / (alpha m_n c))`; equals `arctan((m kappa)^{1/2} / c)` for
    /// the standard `M_mu`.
    pub fn theta(&self, c: f64) -> f64 {
        (1.0 / (self.alpha * self.m_n * c)).atan()
    }
}

/// Eigenvalues of `P`, `Q`, `R` for one mode at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pqr {
    pub p: f64,
    pub q: f64,
    pub r: f64,
}

impl Pqr {
    const NAN: Pqr = Pqr {
        p: f64::NAN,
        q: f64::NAN,
        r: f64::NAN,
    };
}

fn check_mu(mu: f64, allow_zero: bool) -> Result<()> {
    let ok = mu.is_finite() && mu <= 1.0 && if allow_zero { mu >= 0.0 } else { mu > 0.0 };
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name: "mu",
            value: mu,
            reason: if allow_zero { "must lie in [0, 1]" } else { "must lie in (0, 1]" },
        })
    }
}

fn check_finite_window(t: f64, mu: f64, c: f64, cfg: &BasisConfig) -> Result<()> {
    check_mu(mu, false)?;
    let cb = cbar(cfg.mass(), cfg.stiffness());
    if !(c > cb) {
        return Err(Error::PenaltyTooSmall { c, cbar: cb });
    }
    let limit = concave_horizon(mu, cfg.mass(), cfg.stiffness());
    if !(0.0..limit).contains(&t) {
        return Err(Error::HorizonViolation { horizon: t, limit });
    }
    Ok(())
}

/// Finite-penalty trajectory for arbitrary `M` eigenvalue `m_n`.
fn finite_formula(mp: &ModeParams, m_n: f64, t: f64, c: f64) -> Pqr {
    let g = 1.0 / (mp.alpha * m_n * c);
    let phase = mp.omega * t + g.atan();
    let cot = 1.0 / phase.tan();
    let inv_a = 1.0 / mp.alpha;
    Pqr {
        p: -inv_a * cot,
        q: inv_a / (1.0 + g * g).sqrt() / phase.sin(),
        r: -inv_a / (1.0 + g * g) * (g + cot),
    }
}

/// `(p, q, r)` of mode `n` at penalty `c > c_bar` and `t in [0, t_bar^mu)`.
pub fn eig_pqr_finite(n: usize, t: f64, mu: f64, c: f64, cfg: &BasisConfig) -> Result<Pqr> {
    check_finite_window(t, mu, c, cfg)?;
    let mp = ModeParams::new(n, mu, cfg);
    Ok(finite_formula(&mp, mp.m_n, t, c))
}

/// Finite-penalty trajectory for a terminal weight with eigenvalue `m_n`
/// other than the standard `M_mu`. The formulas solve the same Riccati
/// equations; validity of the time window is only established for the
/// standard weight, so no window check is made here beyond `t >= 0`.
pub fn eig_pqr_finite_general(n: usize, t: f64, mu: f64, c: f64, m_n: f64, cfg: &BasisConfig) -> Result<Pqr> {
    check_mu(mu, false)?;
    if !(t >= 0.0 && c > 0.0 && m_n > 0.0) {
        return Err(Error::InvalidParameter {
            name: "t, c, m_n",
            value: t,
            reason: "require t >= 0, c > 0 and m_n > 0",
        });
    }
    Ok(finite_formula(&ModeParams::new(n, mu, cfg), m_n, t, c))
}

fn infty_formula(mp: &ModeParams, t: f64) -> Option<Pqr> {
    let (s, c) = (mp.omega * t).sin_cos();
    if s.abs() < CONJUGATE_TOL {
        return None;
    }
    let inv_a = 1.0 / mp.alpha;
    let p = -inv_a * c / s;
    Some(Pqr { p, q: inv_a / s, r: p })
}

fn check_limit_time(t: f64, delta_min: f64) -> Result<()> {
    if !t.is_finite() {
        return Err(Error::InvalidParameter {
            name: "t",
            value: t,
            reason: "must be finite",
        });
    }
    if t < delta_min || t <= 0.0 {
        return Err(Error::HorizonTooShort { horizon: t, delta_min });
    }
    Ok(())
}

/// Limit `c -> inf`: `p = r = -(1/alpha) cot(omega t)`, `q = (1/alpha) / sin(omega t)`.
/// `mu = 0` substitutes `lambda_n^0 = lambda_n`.
pub fn eig_pqr_infty(n: usize, t: f64, mu: f64, cfg: &BasisConfig) -> Result<Pqr> {
    check_mu(mu, true)?;
    check_limit_time(t, cfg.default_delta_min())?;
    infty_formula(&ModeParams::new(n, mu, cfg), t).ok_or(Error::ConjugatePoint { modes: vec![n] })
}

/// Penalty weight on the terminal mismatch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Penalty {
    Finite(f64),
    Infinite,
}

/// The triple `(P, Q, R)` at a fixed horizon, mode by mode.
#[derive(Debug, Clone, PartialEq)]
pub struct FundamentalSolution {
    basis: BasisConfig,
    mu: f64,
    penalty: Penalty,
    t: f64,
    modes: Vec<Pqr>,
    singular: Vec<usize>,
}

impl FundamentalSolution {
    pub fn finite(cfg: &BasisConfig, mu: f64, c: f64, t: f64) -> Result<Self> {
        FiniteTrajectory::new(cfg, mu, c)?.at(t)
    }

    /// Limit solution with the default exclusion window near `t = 0`.
    pub fn limit(cfg: &BasisConfig, mu: f64, t: f64) -> Result<Self> {
        Self::limit_with_delta(cfg, mu, t, cfg.default_delta_min())
    }

    /// Limit solution. Conjugate-point modes are recorded rather than
    /// rejected; their entries are NaN.
    pub fn limit_with_delta(cfg: &BasisConfig, mu: f64, t: f64, delta_min: f64) -> Result<Self> {
        check_mu(mu, true)?;
        check_limit_time(t, delta_min)?;
        let mut singular = Vec::new();
        let modes = (1..=cfg.modes())
            .map(|n| {
                infty_formula(&ModeParams::new(n, mu, cfg), t).unwrap_or_else(|| {
                    singular.push(n);
                    Pqr::NAN
                })
            })
            .collect();
        Ok(Self {
            basis: *cfg,
            mu,
            penalty: Penalty::Infinite,
            t,
            modes,
            singular,
        })
    }

    pub fn basis(&self) -> &BasisConfig {
        &self.basis
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn penalty(&self) -> Penalty {
        self.penalty
    }

    pub fn horizon(&self) -> f64 {
        self.t
    }

    /// Eigenvalues of mode `n` (1-based).
    pub fn mode(&self, n: usize) -> Pqr {
        self.modes[n - 1]
    }

    pub fn modes(&self) -> &[Pqr] {
        &self.modes
    }

    /// Conjugate-point modes, ascending.
    pub fn singular_modes(&self) -> &[usize] {
        &self.singular
    }

    pub fn params(&self, n: usize) -> ModeParams {
        ModeParams::new(n, self.mu, &self.basis)
    }

    fn ensure_regular(&self) -> Result<()> {
        if self.singular.is_empty() {
            Ok(())
        } else {
            Err(Error::ConjugatePoint {
                modes: self.singular.clone(),
            })
        }
    }

    /// `nabla_x W = P x + Q z`, coefficient-wise.
    pub fn gradient_x(&self, x: &SpectralVector, z: &SpectralVector) -> Result<SpectralVector> {
        self.ensure_regular()?;
        self.check(x, z)?;
        Ok(x.map(|n, a| {
            let e = self.mode(n);
            e.p * a + e.q * z.coeff(n)
        }))
    }

    fn check(&self, x: &SpectralVector, z: &SpectralVector) -> Result<()> {
        if *x.basis() != self.basis {
            return Err(Error::BasisMismatch);
        }
        x.check_basis(z)
    }

    /// Rows `(n, lambda, alpha, omega, p, q, r)` for diagnostic dumps.
    pub fn eigen_table(&self) -> Vec<[f64; 7]> {
        (1..=self.basis.modes())
            .map(|n| {
                let mp = self.params(n);
                let e = self.mode(n);
                [n as f64, mp.lambda, mp.alpha, mp.omega, e.p, e.q, e.r]
            })
            .collect()
    }
}

/// `W = (1/2) sum p x^2 + sum q x z + (1/2) sum r z^2`.
pub fn eval_w(fs: &FundamentalSolution, x: &SpectralVector, z: &SpectralVector) -> Result<f64> {
    fs.ensure_regular()?;
    fs.check(x, z)?;
    Ok(fs
        .modes
        .iter()
        .zip(x.coeffs().iter().zip(z.coeffs()))
        .map(|(e, (a, b))| 0.5 * e.p * a * a + e.q * a * b + 0.5 * e.r * b * b)
        .sum())
}

/// A time-parameterized family of eigenvalue triples.
pub trait EigenTrajectory {
    fn basis(&self) -> &BasisConfig;
    fn mu(&self) -> f64;
    fn eval(&self, n: usize, t: f64) -> Result<Pqr>;
}

/// The finite-penalty trajectory with the standard terminal weight.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteTrajectory {
    basis: BasisConfig,
    mu: f64,
    c: f64,
    lambdas: Vec<f64>,
}

impl FiniteTrajectory {
    pub fn new(cfg: &BasisConfig, mu: f64, c: f64) -> Result<Self> {
        check_finite_window(0.0, mu, c, cfg)?;
        Ok(Self {
            basis: *cfg,
            mu,
            c,
            lambdas: (1..=cfg.modes()).map(|n| cfg.lambda(n)).collect(),
        })
    }

    /// Trajectory built from a caller-supplied eigenvalue table instead of
    /// `lambda_n = (n pi / L)^2`. Used to inject faults into validation.
    pub fn with_lambda_table(cfg: &BasisConfig, mu: f64, c: f64, lambdas: Vec<f64>) -> Result<Self> {
        let mut tr = Self::new(cfg, mu, c)?;
        if lambdas.len() != cfg.modes() {
            return Err(Error::LengthMismatch {
                expected: cfg.modes(),
                found: lambdas.len(),
            });
        }
        tr.lambdas = lambdas;
        Ok(tr)
    }

    pub fn penalty(&self) -> f64 {
        self.c
    }

    pub fn horizon_limit(&self) -> f64 {
        concave_horizon(self.mu, self.basis.mass(), self.basis.stiffness())
    }

    pub fn at(&self, t: f64) -> Result<FundamentalSolution> {
        let modes = (1..=self.basis.modes())
            .map(|n| self.eval(n, t))
            .collect::<Result<_>>()?;
        Ok(FundamentalSolution {
            basis: self.basis,
            mu: self.mu,
            penalty: Penalty::Finite(self.c),
            t,
            modes,
            singular: Vec::new(),
        })
    }
}

impl EigenTrajectory for FiniteTrajectory {
    fn basis(&self) -> &BasisConfig {
        &self.basis
    }

    fn mu(&self) -> f64 {
        self.mu
    }

    fn eval(&self, n: usize, t: f64) -> Result<Pqr> {
        check_finite_window(t, self.mu, self.c, &self.basis)?;
        let mp = ModeParams::from_lambda(n, self.lambdas[n - 1], self.mu, &self.basis);
        Ok(finite_formula(&mp, mp.m_n, t, self.c))
    }
}

/// Centered differences of `p`, `q`, `r` at `t` minus the right-hand sides
/// `kappa + (lambda_mu/m) p^2`, `(lambda_mu/m) p q`, `(lambda_mu/m) q^2`.
/// The right-hand sides always use the true `lambda_n` of the basis.
pub fn riccati_residual(traj: &impl EigenTrajectory, n: usize, t: f64, h: f64) -> Result<Pqr> {
    let plus = traj.eval(n, t + h)?;
    let minus = traj.eval(n, t - h)?;
    let mid = traj.eval(n, t)?;
    let mp = ModeParams::new(n, traj.mu(), traj.basis());
    let k = mp.lambda_mu / traj.basis().mass();
    let d = |a: f64, b: f64| (a - b) / (2.0 * h);
    Ok(Pqr {
        p: d(plus.p, minus.p) - (traj.basis().stiffness() + k * mid.p * mid.p),
        q: d(plus.q, minus.q) - k * mid.p * mid.q,
        r: d(plus.r, minus.r) - k * mid.q * mid.q,
    })
}

/// `H(x, p) = (kappa/2) ||x||^2 + (1/2m) sum lambda_n^mu p_n^2`.
pub fn verification_hamiltonian(x: &SpectralVector, p: &SpectralVector, mu: f64) -> Result<f64> {
    x.check_basis(p)?;
    let cfg = x.basis();
    let kin: f64 = p
        .coeffs()
        .iter()
        .enumerate()
        .map(|(i, a)| ModeParams::new(i + 1, mu, cfg).lambda_mu * a * a)
        .sum();
    Ok(0.5 * cfg.stiffness() * x.norm_half_sq() + kin / (2.0 * cfg.mass()))
}

/// `dW/dt - H(x, nabla_x W)` with the time derivative from a five-point
/// centered stencil of step `h`.
pub fn hjb_residual(traj: &FiniteTrajectory, t: f64, x: &SpectralVector, z: &SpectralVector, h: f64) -> Result<f64> {
    let w = |s: f64| -> Result<f64> { eval_w(&traj.at(s)?, x, z) };
    let dwdt = (w(t - 2.0 * h)? - 8.0 * w(t - h)? + 8.0 * w(t + h)? - w(t + 2.0 * h)?) / (12.0 * h);
    let fs = traj.at(t)?;
    let grad = fs.gradient_x(x, z)?;
    Ok(dwdt - verification_hamiltonian(x, &grad, traj.mu())?)
}

/// Largest gap between finite-penalty and limit eigenvalues over modes
/// `1..=N` and `samples` uniformly spaced times in `[delta, t_bar^mu)`.
pub fn sup_limit_gap(cfg: &BasisConfig, mu: f64, c: f64, delta: f64, samples: usize) -> Result<Pqr> {
    let tr = FiniteTrajectory::new(cfg, mu, c)?;
    let tbar = tr.horizon_limit();
    let mut gap = Pqr { p: 0.0, q: 0.0, r: 0.0 };
    for i in 0..samples {
        let t = delta + (tbar - delta) * i as f64 / samples as f64;
        for n in 1..=cfg.modes() {
            let f = tr.eval(n, t)?;
            let l = eig_pqr_infty(n, t, mu, cfg)?;
            gap.p = gap.p.max((f.p - l.p).abs());
            gap.q = gap.q.max((f.q - l.q).abs());
            gap.r = gap.r.max((f.r - l.r).abs());
        }
    }
    Ok(gap)
}
