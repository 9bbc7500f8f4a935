//! The action payoff `J^mu` for piecewise-constant velocity inputs, its
//! energy densities, and the concavity diagnostics built on it.

use crate::error::{Error, Result};
use crate::spectral::{make_operator, op_apply, BasisConfig, OperatorKind, SpectralVector};

/// Velocity input `w(s) = w_k` on `[(k-1) dt, k dt)`. The induced
/// displacement `xi(s) = x0 + int_0^s w` is piecewise linear.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseConstantInput {
    steps: Vec<SpectralVector>,
    dt: f64,
    basis: BasisConfig,
}

impl PiecewiseConstantInput {
    pub fn new(basis: &BasisConfig, dt: f64, steps: Vec<SpectralVector>) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidParameter {
                name: "dt",
                value: dt,
                reason: "step duration must be finite and positive",
            });
        }
        if steps.is_empty() {
            return Err(Error::InvalidParameter {
                name: "K",
                value: 0.0,
                reason: "input needs at least one step",
            });
        }
        if steps.iter().any(|w| w.basis() != basis) {
            return Err(Error::BasisMismatch);
        }
        Ok(Self {
            steps,
            dt,
            basis: *basis,
        })
    }

    /// `k` zero steps covering `horizon`.
    pub fn zeros(basis: &BasisConfig, horizon: f64, k: usize) -> Result<Self> {
        Self::new(basis, horizon / k as f64, vec![SpectralVector::zeros(basis); k])
    }

    pub fn steps(&self) -> &[SpectralVector] {
        &self.steps
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn basis(&self) -> &BasisConfig {
        &self.basis
    }

    pub fn duration(&self) -> f64 {
        self.dt * self.steps.len() as f64
    }

    /// `self + factor * other`, step by step.
    pub fn axpy(&self, factor: f64, other: &Self) -> Result<Self> {
        if self.steps.len() != other.steps.len() {
            return Err(Error::LengthMismatch {
                expected: self.steps.len(),
                found: other.steps.len(),
            });
        }
        if self.basis != other.basis || self.dt != other.dt {
            return Err(Error::BasisMismatch);
        }
        let steps = self
            .steps
            .iter()
            .zip(&other.steps)
            .map(|(a, b)| a.zip_with(b, |x, y| x + factor * y))
            .collect::<Result<_>>()?;
        Ok(Self { steps, ..self.clone() })
    }

    /// Same input with every step split in two.
    pub fn refined(&self) -> Self {
        Self {
            steps: self.steps.iter().flat_map(|w| [w.clone(), w.clone()]).collect(),
            dt: 0.5 * self.dt,
            basis: self.basis,
        }
    }

    /// `sum_k dt ||w_k||_{1/2}^2`, the input norm on `[0, t]`.
    pub fn norm_sq(&self) -> f64 {
        self.dt * self.steps.iter().map(SpectralVector::norm_half_sq).sum::<f64>()
    }

    /// Displacement at the end of the horizon.
    pub fn terminal_state(&self, x0: &SpectralVector) -> Result<SpectralVector> {
        let mut xi = x0.clone();
        for w in &self.steps {
            xi = xi.zip_with(w, |a, b| a + self.dt * b)?;
        }
        Ok(xi)
    }
}

/// Terminal payoff families.
#[derive(Debug, Clone, PartialEq)]
pub enum TerminalPayoff {
    Zero,
    /// `-(c/2) ||K_mu (xi - z)||_{1/2}^2`.
    Quadratic { c: f64, target: SpectralVector },
    /// `m <J J v, xi>_{1/2}`: its stationary points have terminal velocity `v`.
    Linear { velocity: SpectralVector },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PayoffSpec {
    pub basis: BasisConfig,
    pub mu: f64,
    pub horizon: f64,
    pub terminal: TerminalPayoff,
}

impl PayoffSpec {
    pub fn new(basis: &BasisConfig, mu: f64, horizon: f64, terminal: TerminalPayoff) -> Result<Self> {
        if !(mu.is_finite() && mu >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "mu",
                value: mu,
                reason: "perturbation must be finite and non-negative",
            });
        }
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::InvalidParameter {
                name: "t",
                value: horizon,
                reason: "horizon must be finite and positive",
            });
        }
        match &terminal {
            TerminalPayoff::Zero => {}
            TerminalPayoff::Quadratic { c, target } => {
                if !(c.is_finite() && *c > 0.0) {
                    return Err(Error::InvalidParameter {
                        name: "c",
                        value: *c,
                        reason: "penalty weight must be finite and positive",
                    });
                }
                if target.basis() != basis {
                    return Err(Error::BasisMismatch);
                }
            }
            TerminalPayoff::Linear { velocity } => {
                if velocity.basis() != basis {
                    return Err(Error::BasisMismatch);
                }
            }
        }
        Ok(Self {
            basis: *basis,
            mu,
            horizon,
            terminal,
        })
    }

    pub fn terminal_value(&self, xi: &SpectralVector) -> Result<f64> {
        let m = self.basis.mass();
        match &self.terminal {
            TerminalPayoff::Zero => Ok(0.0),
            TerminalPayoff::Quadratic { c, target } => {
                let k = make_operator(OperatorKind::KMu, self.mu, &self.basis)?;
                let d = op_apply(&k, &xi.sub(target)?)?;
                Ok(-0.5 * c * d.norm_half_sq())
            }
            TerminalPayoff::Linear { velocity } => Ok(m * xi
                .coeffs()
                .iter()
                .zip(velocity.coeffs())
                .enumerate()
                .map(|(i, (x, v))| x * v / self.basis.lambda(i + 1))
                .sum::<f64>()),
        }
    }
}

/// `J = int_0^t (kappa/2)||xi||^2 - (m/2) sum (1/lambda_n + mu^2) w_n^2 ds + psi(xi(t))`,
/// integrated exactly on each step.
pub fn evaluate_payoff(spec: &PayoffSpec, x0: &SpectralVector, w: &PiecewiseConstantInput) -> Result<f64> {
    let t = spec.horizon;
    if (w.duration() - t).abs() > 1e-12 * t.max(1.0) {
        return Err(Error::DurationMismatch {
            expected: t,
            found: w.duration(),
        });
    }
    x0.check_basis(&w.steps[0])?;
    if *x0.basis() != spec.basis {
        return Err(Error::BasisMismatch);
    }
    let cfg = &spec.basis;
    let (m, kappa, mu2) = (cfg.mass(), cfg.stiffness(), spec.mu * spec.mu);
    let dt = w.dt;
    let mut xi = x0.coeffs().to_vec();
    let mut total = 0.0;
    for step in &w.steps {
        let mut potential = 0.0;
        let mut kinetic = 0.0;
        for (i, (x, &v)) in xi.iter_mut().zip(step.coeffs()).enumerate() {
            potential += dt * *x * *x + dt * dt * *x * v + dt * dt * dt / 3.0 * v * v;
            kinetic += (1.0 / cfg.lambda(i + 1) + mu2) * v * v;
            *x += dt * v;
        }
        total += 0.5 * kappa * potential - 0.5 * m * dt * kinetic;
    }
    let xi = SpectralVector::from_coeffs(cfg, xi)?;
    Ok(total + spec.terminal_value(&xi)?)
}

/// `J(w* + delta w~) - 2 J(w*) + J(w* - delta w~)`.
pub fn second_difference(
    spec: &PayoffSpec,
    x0: &SpectralVector,
    w_star: &PiecewiseConstantInput,
    w_tilde: &PiecewiseConstantInput,
    delta: f64,
) -> Result<f64> {
    if delta == 0.0 {
        return Err(Error::ZeroStep);
    }
    let plus = w_star.axpy(delta, w_tilde)?;
    let minus = w_star.axpy(-delta, w_tilde)?;
    let j0 = evaluate_payoff(spec, x0, w_star)?;
    Ok(evaluate_payoff(spec, x0, &plus)? - 2.0 * j0 + evaluate_payoff(spec, x0, &minus)?)
}

/// Upper bound `-delta^2 [m mu^2 - kappa t^2 / 2] ||w~||^2` on the second
/// difference when the terminal payoff is concave.
pub fn second_difference_bound(spec: &PayoffSpec, w_tilde: &PiecewiseConstantInput, delta: f64) -> f64 {
    let cfg = &spec.basis;
    let t = spec.horizon;
    let margin = cfg.mass() * spec.mu * spec.mu - 0.5 * cfg.stiffness() * t * t;
    -delta * delta * margin * w_tilde.norm_sq()
}

/// `t_bar^mu = mu (2m/kappa)^{1/2}`.
pub fn concave_horizon(mu: f64, m: f64, kappa: f64) -> f64 {
    mu * (2.0 * m / kappa).sqrt()
}

/// Potential `(kappa/2) sum x_n^2` and perturbed kinetic
/// `(m/2) sum (1/lambda_n + mu^2) w_n^2` energies.
pub fn energy_split(x: &SpectralVector, w: &SpectralVector, mu: f64) -> Result<(f64, f64)> {
    x.check_basis(w)?;
    let cfg = x.basis();
    let v = 0.5 * cfg.stiffness() * x.norm_half_sq();
    let t = 0.5
        * cfg.mass()
        * w.coeffs()
            .iter()
            .enumerate()
            .map(|(i, a)| (1.0 / cfg.lambda(i + 1) + mu * mu) * a * a)
            .sum::<f64>();
    Ok((v, t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random_vec(rng: &mut ChaCha8Rng, cfg: &BasisConfig) -> SpectralVector {
        SpectralVector::from_fn(cfg, |_| rng.gen_range(-1.0..1.0))
    }

    fn random_input(rng: &mut ChaCha8Rng, cfg: &BasisConfig, t: f64, k: usize) -> PiecewiseConstantInput {
        let steps = (0..k).map(|_| random_vec(rng, cfg)).collect();
        PiecewiseConstantInput::new(cfg, t / k as f64, steps).unwrap()
    }

    #[test]
    fn trivial_payoffs() {
        let cfg = BasisConfig::unit(4);
        let spec = PayoffSpec::new(&cfg, 0.0, 1.0, TerminalPayoff::Zero).unwrap();
        let w = PiecewiseConstantInput::zeros(&cfg, 1.0, 4).unwrap();
        assert_eq!(evaluate_payoff(&spec, &SpectralVector::zeros(&cfg), &w).unwrap(), 0.0);
        let j = evaluate_payoff(&spec, &SpectralVector::unit(&cfg, 1), &w).unwrap();
        assert_relative_eq!(j, 0.5, max_relative = 1e-15);
    }

    #[test]
    fn rejects_duration_mismatch() {
        let cfg = BasisConfig::unit(2);
        let spec = PayoffSpec::new(&cfg, 0.0, 1.0, TerminalPayoff::Zero).unwrap();
        let w = PiecewiseConstantInput::zeros(&cfg, 0.9, 3).unwrap();
        assert!(matches!(
            evaluate_payoff(&spec, &SpectralVector::zeros(&cfg), &w),
            Err(Error::DurationMismatch { .. })
        ));
    }

    #[test]
    fn matches_fine_quadrature() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let cfg = BasisConfig::new(1.3, 6, 0.7, 1.9).unwrap();
        let (mu, t, k) = (0.2, 0.8, 8);
        let x0 = random_vec(&mut rng, &cfg);
        let w = random_input(&mut rng, &cfg, t, k);
        let target = random_vec(&mut rng, &cfg);
        let spec = PayoffSpec::new(&cfg, mu, t, TerminalPayoff::Quadratic { c: 3.0, target: target.clone() }).unwrap();
        let exact = evaluate_payoff(&spec, &x0, &w).unwrap();

        // Simpson on 64 substeps per step, independent of the closed form
        let sub = 64;
        let h = w.dt() / sub as f64;
        let mut xi = x0.coeffs().to_vec();
        let mut integral = 0.0;
        for step in w.steps() {
            let kinetic: f64 = step
                .coeffs()
                .iter()
                .enumerate()
                .map(|(i, v)| (1.0 / cfg.lambda(i + 1) + mu * mu) * v * v)
                .sum();
            for _ in 0..sub {
                let f = |s: f64| -> f64 {
                    let pot: f64 = xi.iter().zip(step.coeffs()).map(|(x, v)| (x + s * v).powi(2)).sum();
                    0.5 * cfg.stiffness() * pot - 0.5 * cfg.mass() * kinetic
                };
                integral += h / 6.0 * (f(0.0) + 4.0 * f(0.5 * h) + f(h));
                for (x, v) in xi.iter_mut().zip(step.coeffs()) {
                    *x += h * v;
                }
            }
        }
        let km: Vec<f64> = (1..=6).map(|n| OperatorKind::KMu.eigenvalue(cfg.lambda(n), mu)).collect();
        let psi: f64 = -1.5
            * xi.iter()
                .zip(target.coeffs())
                .zip(&km)
                .map(|((x, z), k)| (k * (x - z)).powi(2))
                .sum::<f64>();
        assert_relative_eq!(exact, integral + psi, max_relative = 1e-8);
    }

    #[test]
    fn refinement_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let cfg = BasisConfig::unit(5);
        let velocity = random_vec(&mut rng, &cfg);
        let spec = PayoffSpec::new(&cfg, 0.3, 0.4, TerminalPayoff::Linear { velocity }).unwrap();
        let x0 = random_vec(&mut rng, &cfg);
        let w = random_input(&mut rng, &cfg, 0.4, 5);
        let a = evaluate_payoff(&spec, &x0, &w).unwrap();
        let b = evaluate_payoff(&spec, &x0, &w.refined()).unwrap();
        assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
    }

    #[test]
    fn second_difference_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let cfg = BasisConfig::unit(6);
        let spec = PayoffSpec::new(&cfg, 0.5, 0.1, TerminalPayoff::Zero).unwrap();
        let x0 = random_vec(&mut rng, &cfg);
        let ws = random_input(&mut rng, &cfg, 0.1, 4);
        let wt = random_input(&mut rng, &cfg, 0.1, 4);
        let d = second_difference(&spec, &x0, &ws, &wt, 0.3).unwrap();
        let bound = -0.09 * (0.25 - 0.005) * wt.norm_sq();
        assert!(d < 0.0 && d <= bound + 1e-10, "{d} vs {bound}");
        assert_relative_eq!(second_difference_bound(&spec, &wt, 0.3), bound, max_relative = 1e-14);

        let zero = PiecewiseConstantInput::zeros(&cfg, 0.1, 4).unwrap();
        assert_eq!(second_difference(&spec, &x0, &ws, &zero, 0.3).unwrap(), 0.0);
        assert_eq!(second_difference(&spec, &x0, &ws, &wt, 0.0), Err(Error::ZeroStep));
    }

    #[test]
    fn payoff_is_quadratic_in_delta() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let cfg = BasisConfig::unit(4);
        let target = random_vec(&mut rng, &cfg);
        let spec = PayoffSpec::new(&cfg, 0.4, 0.3, TerminalPayoff::Quadratic { c: 8.0, target }).unwrap();
        let x0 = random_vec(&mut rng, &cfg);
        let ws = random_input(&mut rng, &cfg, 0.3, 3);
        let wt = random_input(&mut rng, &cfg, 0.3, 3);
        let j = |d: f64| evaluate_payoff(&spec, &x0, &ws.axpy(d, &wt).unwrap()).unwrap();
        // fit a parabola through delta = -1, 0, 1 and predict delta = 2
        let (jm, j0, jp) = (j(-1.0), j(0.0), j(1.0));
        let a = 0.5 * (jp - 2.0 * j0 + jm);
        let b = 0.5 * (jp - jm);
        let predicted = 4.0 * a + 2.0 * b + j0;
        assert!((predicted - j(2.0)).abs() < 1e-9 * j(2.0).abs().max(1.0));
    }

    #[test]
    fn concave_horizon_values() {
        assert_relative_eq!(concave_horizon(0.1, 1.0, 1.0), 0.141_421_356, max_relative = 1e-8);
        assert_eq!(concave_horizon(0.0, 3.0, 2.0), 0.0);
        assert_relative_eq!(concave_horizon(1.0, 2.0, 1.0), 2.0);
    }

    #[test]
    fn energy_split_values() {
        let cfg = BasisConfig::new(1.0, 3, 2.0, 2.0).unwrap();
        let e1 = SpectralVector::unit(&cfg, 1);
        let (v, t) = energy_split(&e1, &e1, 0.0).unwrap();
        assert_relative_eq!(v, 1.0);
        assert_relative_eq!(t, 1.0 / (PI * PI), max_relative = 1e-15);
        let w = SpectralVector::from_coeffs(&cfg, vec![0.3, -1.0, 2.0]).unwrap();
        let (_, t0) = energy_split(&e1, &w, 0.0).unwrap();
        let (_, t1) = energy_split(&e1, &w, 1.0).unwrap();
        assert_relative_eq!(t1 - t0, 0.5 * 2.0 * w.norm_half_sq(), max_relative = 1e-14);
    }
}
