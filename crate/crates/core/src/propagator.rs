//! Forward evolution of the wave equation and its perturbed variant by
//! exact modal rotations, plus a leapfrog finite-difference solver used as
//! an independent check.
//!
//! Each mode obeys `xi' = (1/m) i^{1/2} pi`, `pi' = -kappa lambda i^{1/2} xi`
//! with `i = 1/(1 + mu^2 lambda)`, a harmonic oscillator at `omega_n^mu`.

use crate::error::{Error, Result};
use crate::riccati::ModeParams;
use crate::spectral::{BasisConfig, OperatorKind, SpectralVector};

/// Displacement `xi` and momentum `pi = m I_mu^{-1/2} w`, both stored as
/// energy-space coefficients, at time `time`.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveState {
    pub xi: SpectralVector,
    pub pi: SpectralVector,
    pub time: f64,
}

impl WaveState {
    pub fn new(xi: SpectralVector, pi: SpectralVector, time: f64) -> Result<Self> {
        xi.check_basis(&pi)?;
        Ok(Self { xi, pi, time })
    }

    /// State with velocity `w` at perturbation `mu`.
    pub fn from_velocity(xi: SpectralVector, w: &SpectralVector, mu: f64, time: f64) -> Result<Self> {
        xi.check_basis(w)?;
        let cfg = *xi.basis();
        let pi = w.map(|n, a| cfg.mass() * OperatorKind::IMuInvSqrt.eigenvalue(cfg.lambda(n), mu) * a);
        Self::new(xi, pi, time)
    }

    pub fn basis(&self) -> &BasisConfig {
        self.xi.basis()
    }

    /// Physical velocity `w = (1/m) I_mu^{1/2} pi`.
    pub fn velocity(&self, mu: f64) -> SpectralVector {
        let cfg = *self.basis();
        self.pi
            .map(|n, a| OperatorKind::IMuSqrt.eigenvalue(cfg.lambda(n), mu) * a / cfg.mass())
    }

    /// `(kappa/2) sum xi_n^2 + (1/2m) sum pi_n^2 / lambda_n`.
    pub fn energy(&self) -> f64 {
        let cfg = self.basis();
        0.5 * cfg.stiffness() * self.xi.norm_half_sq() + self.pi.norm_l2_sq() / (2.0 * cfg.mass())
    }

    /// Squared product-space norm `m ||xi||_{1/2}^2 + (1/kappa) ||pi||_{L2}^2`.
    pub fn oplus_norm_sq(&self) -> f64 {
        let cfg = self.basis();
        cfg.mass() * self.xi.norm_half_sq() + self.pi.norm_l2_sq() / cfg.stiffness()
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        Self::new(self.xi.sub(&other.xi)?, self.pi.sub(&other.pi)?, self.time)
    }
}

/// Advances every mode by an exact rotation through angle `omega_n^mu dt`.
/// Negative `dt` runs the flow backwards.
pub fn semigroup_step(state: &WaveState, dt: f64, mu: f64) -> WaveState {
    let cfg = *state.basis();
    let m = cfg.mass();
    let mut xi = state.xi.coeffs().to_vec();
    let mut pi = state.pi.coeffs().to_vec();
    for (i, (x, p)) in xi.iter_mut().zip(pi.iter_mut()).enumerate() {
        let mp = ModeParams::new(i + 1, mu, &cfg);
        let isq = OperatorKind::IMuSqrt.eigenvalue(mp.lambda, mu);
        let (s, c) = (mp.omega * dt).sin_cos();
        let (x0, p0) = (*x, *p);
        *x = x0 * c + isq * p0 / (m * mp.omega) * s;
        *p = p0 * c - m * mp.omega / isq * x0 * s;
    }
    WaveState {
        xi: SpectralVector::from_coeffs(&cfg, xi).expect("length preserved"),
        pi: SpectralVector::from_coeffs(&cfg, pi).expect("length preserved"),
        time: state.time + dt,
    }
}

/// Snapshots at `k t / (count - 1)`, `k = 0..count`, each computed directly
/// from the initial state. `count = 1` returns only the state at `t`.
pub fn propagate_profile(
    x0: &SpectralVector,
    v0: &SpectralVector,
    t: f64,
    mu: f64,
    count: usize,
) -> Result<Vec<WaveState>> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "t",
            value: t,
            reason: "propagation time must be finite and non-negative",
        });
    }
    let start = WaveState::from_velocity(x0.clone(), v0, mu, 0.0)?;
    Ok(match count {
        0 => Vec::new(),
        1 => vec![semigroup_step(&start, t, mu)],
        _ => (0..count)
            .map(|k| semigroup_step(&start, t * k as f64 / (count - 1) as f64, mu))
            .collect(),
    })
}

/// `||T_mu(t) y0 - T_0(t) y0||_oplus` for each `mu`, with `y0` read as the
/// same `(xi, pi)` pair in every flow.
pub fn trotter_kato_gap(y0: &WaveState, t: f64, mus: &[f64]) -> Vec<(f64, f64)> {
    let exact = semigroup_step(y0, t, 0.0);
    mus.iter()
        .map(|&mu| {
            let pert = semigroup_step(y0, t, mu);
            let gap = pert.sub(&exact).expect("same basis").oplus_norm_sq().sqrt();
            (mu, gap)
        })
        .collect()
}

/// Leapfrog solution of `m u_tt = kappa u_xx` with Dirichlet ends on a grid
/// of `n_space + 1` points, `n_time` steps to time `t`. Input and output
/// samples include both endpoints.
pub fn fd_oracle(
    x0: &[f64],
    v0: &[f64],
    t: f64,
    n_space: usize,
    n_time: usize,
    cfg: &BasisConfig,
) -> Result<Vec<f64>> {
    if x0.len() != n_space + 1 || v0.len() != n_space + 1 {
        return Err(Error::LengthMismatch {
            expected: n_space + 1,
            found: x0.len().min(v0.len()),
        });
    }
    if n_space < 2 || n_time == 0 {
        return Err(Error::InvalidParameter {
            name: "grid",
            value: n_space.min(n_time) as f64,
            reason: "need n_space >= 2 and n_time >= 1",
        });
    }
    let dx = cfg.length() / n_space as f64;
    let dt = t / n_time as f64;
    let limit = dx * (cfg.mass() / cfg.stiffness()).sqrt();
    if dt > limit {
        return Err(Error::CflViolation { dt, limit });
    }
    let r2 = cfg.stiffness() / cfg.mass() * (dt / dx).powi(2);
    let lap = |u: &[f64], i: usize| u[i - 1] - 2.0 * u[i] + u[i + 1];

    let mut prev = x0.to_vec();
    prev[0] = 0.0;
    prev[n_space] = 0.0;
    let mut cur = vec![0.0; n_space + 1];
    for i in 1..n_space {
        cur[i] = prev[i] + dt * v0[i] + 0.5 * r2 * lap(&prev, i);
    }
    let mut next = vec![0.0; n_space + 1];
    for _ in 1..n_time {
        for i in 1..n_space {
            next[i] = 2.0 * cur[i] - prev[i] + r2 * lap(&cur, i);
        }
        std::mem::swap(&mut prev, &mut cur);
        std::mem::swap(&mut cur, &mut next);
    }
    Ok(cur)
}

/// Smallest step count that meets `dt <= courant * dx (m/kappa)^{1/2}`.
pub fn fd_steps(t: f64, n_space: usize, courant: f64, cfg: &BasisConfig) -> usize {
    let dx = cfg.length() / n_space as f64;
    let dt = courant * dx * (cfg.mass() / cfg.stiffness()).sqrt();
    ((t / dt).ceil() as usize).max(1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{reconstruct, uniform_grid};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_state(seed: u64, cfg: &BasisConfig) -> WaveState {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let xi = SpectralVector::from_fn(cfg, |n| rng.gen_range(-1.0..1.0) / (n * n) as f64);
        let pi = SpectralVector::from_fn(cfg, |n| rng.gen_range(-1.0..1.0) / n as f64);
        WaveState::new(xi, pi, 0.0).unwrap()
    }

    fn assert_close(a: &WaveState, b: &WaveState, tol: f64) {
        let d = a.sub(b).unwrap().oplus_norm_sq().sqrt();
        assert!(d <= tol * a.oplus_norm_sq().sqrt().max(1.0), "distance {d}");
    }

    #[test]
    fn zero_step_is_identity() {
        let cfg = BasisConfig::unit(8);
        let s = random_state(1, &cfg);
        assert_eq!(semigroup_step(&s, 0.0, 0.3), s);
    }

    #[test]
    fn full_period_returns() {
        let cfg = BasisConfig::unit(1);
        let s = WaveState::from_velocity(SpectralVector::unit(&cfg, 1), &SpectralVector::unit(&cfg, 1), 0.0, 0.0).unwrap();
        assert_close(&semigroup_step(&s, 2.0, 0.0), &s, 1e-12);
    }

    #[test]
    fn semigroup_property() {
        let cfg = BasisConfig::new(1.4, 32, 0.7, 1.3).unwrap();
        for mu in [0.0, 0.05, 0.8] {
            let s = random_state(2, &cfg);
            let two = semigroup_step(&semigroup_step(&s, 0.37, mu), 1.21, mu);
            let one = semigroup_step(&s, 1.58, mu);
            assert_close(&two, &one, 1e-13);
            let e0 = s.energy();
            assert!((one.energy() - e0).abs() <= 1e-13 * e0);
        }
    }

    #[test]
    fn half_period_flips_sign() {
        let cfg = BasisConfig::unit(3);
        let x0 = SpectralVector::unit(&cfg, 1);
        let snaps = propagate_profile(&x0, &SpectralVector::zeros(&cfg), 1.0, 0.0, 1).unwrap();
        for (a, b) in snaps[0].xi.coeffs().iter().zip(x0.coeffs()) {
            assert_abs_diff_eq!(*a, -b, epsilon = 1e-15);
        }
    }

    #[test]
    fn velocity_roundtrip() {
        let cfg = BasisConfig::unit(6);
        let w = SpectralVector::from_fn(&cfg, |n| n as f64);
        let s = WaveState::from_velocity(SpectralVector::zeros(&cfg), &w, 0.4, 0.0).unwrap();
        for (a, b) in s.velocity(0.4).coeffs().iter().zip(w.coeffs()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-13);
        }
    }

    #[test]
    fn gap_single_mode_matches_phase_mismatch() {
        let cfg = BasisConfig::unit(3);
        let n = 2;
        let s = WaveState::new(SpectralVector::unit(&cfg, n), SpectralVector::zeros(&cfg), 0.0).unwrap();
        let gaps = trotter_kato_gap(&s, 1.0, &[0.0, 1e-3]);
        assert_eq!(gaps[0].1, 0.0);
        let lam = cfg.lambda(n);
        let omega = lam.sqrt();
        let omega_mu = (lam / (1.0 + 1e-6 * lam)).sqrt();
        // first order: |dtheta| * ||y0||_oplus with y0 = (e_n, 0)
        let predicted = (omega - omega_mu) * 1.0;
        assert!((gaps[1].1 - predicted).abs() < 1e-3 * predicted, "{} vs {predicted}", gaps[1].1);
    }

    #[test]
    fn fd_zero_data() {
        let cfg = BasisConfig::unit(1);
        let u = fd_oracle(&[0.0; 11], &[0.0; 11], 0.5, 10, 20, &cfg).unwrap();
        assert!(u.iter().all(|&v| v == 0.0));
        assert!(matches!(
            fd_oracle(&[0.0; 11], &[0.0; 11], 0.5, 10, 2, &cfg),
            Err(Error::CflViolation { .. })
        ));
    }

    #[test]
    fn fd_standing_wave_second_order() {
        let cfg = BasisConfig::unit(1);
        let t = 0.3;
        let x0 = SpectralVector::unit(&cfg, 1);
        let exact_state = &propagate_profile(&x0, &SpectralVector::zeros(&cfg), t, 0.0, 1).unwrap()[0];
        let mut errs = Vec::new();
        for ns in [50, 100, 200] {
            let grid = uniform_grid(&cfg, ns + 1);
            let u0 = reconstruct(&x0, &grid).unwrap();
            let nt = fd_steps(t, ns, 0.5, &cfg);
            let u = fd_oracle(&u0, &vec![0.0; ns + 1], t, ns, nt, &cfg).unwrap();
            let exact = reconstruct(&exact_state.xi, &grid).unwrap();
            let err = (u.iter().zip(&exact).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / ns as f64).sqrt();
            errs.push(err);
        }
        for w in errs.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!((1.9..2.1).contains(&order), "order {order}");
        }
    }
}
