//! Long horizons by concatenation: split `[0, t]` into `n_t` segments of
//! length `tau`, chain the short-horizon fundamental solution across
//! unknown interior states `zeta_1..zeta_{n_t-1}`, and take the stationary
//! point of the resulting quadratic form.
//!
//! All blocks are diagonal in the shared eigenbasis, so stationarity splits
//! into one scalar tridiagonal system per mode with diagonal
//! `d_n = p_n(tau) + r_n(tau)` and off-diagonals `e_n = q_n(tau)`.

use crate::error::{Error, Result};
use crate::payoff::concave_horizon;
use crate::riccati::{FundamentalSolution, ModeParams, Pqr, CONJUGATE_TOL};
use crate::spectral::{BasisConfig, SpectralVector};
use crate::tridiag::solve_tridiagonal;

/// Largest segment count the planner will try.
pub const MAX_SEGMENTS: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct ConcatenationPlan {
    basis: BasisConfig,
    mu: f64,
    t: f64,
    n_t: usize,
    segment: FundamentalSolution,
}

impl ConcatenationPlan {
    /// Plan with exactly `n_t` segments. Fails if the segment horizon is a
    /// conjugate point of some mode or, for `mu > 0`, not below `t_bar^mu`.
    pub fn new(cfg: &BasisConfig, mu: f64, t: f64, n_t: usize) -> Result<Self> {
        if n_t == 0 {
            return Err(Error::InvalidParameter {
                name: "n_t",
                value: 0.0,
                reason: "segment count must be at least 1",
            });
        }
        if !(t.is_finite() && t > 0.0) {
            return Err(Error::InvalidParameter {
                name: "t",
                value: t,
                reason: "horizon must be finite and positive",
            });
        }
        let tau = t / n_t as f64;
        if mu > 0.0 {
            let limit = concave_horizon(mu, cfg.mass(), cfg.stiffness());
            if tau >= limit {
                return Err(Error::HorizonViolation { horizon: tau, limit });
            }
        }
        let segment = FundamentalSolution::limit(cfg, mu, tau)?;
        if !segment.singular_modes().is_empty() {
            return Err(Error::ConjugatePoint {
                modes: segment.singular_modes().to_vec(),
            });
        }
        Ok(Self {
            basis: *cfg,
            mu,
            t,
            n_t,
            segment,
        })
    }

    /// Smallest admissible `n_t`, starting from `floor(t / t_bar) + 1` when
    /// `mu > 0` and from 2 otherwise.
    pub fn auto(cfg: &BasisConfig, mu: f64, t: f64) -> Result<Self> {
        let start = if mu > 0.0 {
            let limit = concave_horizon(mu, cfg.mass(), cfg.stiffness());
            ((t / limit).floor() as usize + 1).max(2)
        } else {
            2
        };
        for n_t in start..=MAX_SEGMENTS {
            match Self::new(cfg, mu, t, n_t) {
                Ok(plan) => return Ok(plan),
                Err(Error::ConjugatePoint { .. } | Error::HorizonViolation { .. }) => {}
                Err(Error::HorizonTooShort { .. }) => break,
                Err(e) => return Err(e),
            }
        }
        Err(Error::NoAdmissibleSegmentation { cap: MAX_SEGMENTS })
    }

    pub fn basis(&self) -> &BasisConfig {
        &self.basis
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn horizon(&self) -> f64 {
        self.t
    }

    pub fn segments(&self) -> usize {
        self.n_t
    }

    pub fn tau(&self) -> f64 {
        self.segment.horizon()
    }

    /// Fundamental solution over one segment.
    pub fn segment_solution(&self) -> &FundamentalSolution {
        &self.segment
    }

    /// `(d_n, e_n)` for mode `n`.
    pub fn mode_coefficients(&self, n: usize) -> (f64, f64) {
        let e = self.segment.mode(n);
        (e.p + e.r, e.q)
    }

    fn check(&self, x: &SpectralVector, z: &SpectralVector) -> Result<()> {
        if *x.basis() != self.basis {
            return Err(Error::BasisMismatch);
        }
        x.check_basis(z)
    }
}

/// Interior states, with modes whose stationarity system is singular set
/// to zero and listed. The system for mode `n` has determinant proportional
/// to `sin(omega_n t)`, so these are the full-horizon conjugate points.
pub(crate) fn intermediate_states_partial(
    plan: &ConcatenationPlan,
    x: &SpectralVector,
    z: &SpectralVector,
) -> Result<(Vec<SpectralVector>, Vec<usize>)> {
    plan.check(x, z)?;
    let k = plan.n_t - 1;
    let cfg = plan.basis;
    let mut columns = vec![vec![0.0; cfg.modes()]; k];
    let mut singular = Vec::new();
    if k == 0 {
        return Ok((Vec::new(), singular));
    }
    for n in 1..=cfg.modes() {
        let (d, e) = plan.mode_coefficients(n);
        let mp = ModeParams::new(n, plan.mu, &cfg);
        let mut rhs = vec![0.0; k];
        rhs[0] -= e * x.coeff(n);
        rhs[k - 1] -= e * z.coeff(n);
        let off = vec![e; k - 1];
        let sol = if (mp.omega * plan.t).sin().abs() < CONJUGATE_TOL {
            None
        } else {
            solve_tridiagonal(&off, &vec![d; k], &off, &rhs)
        };
        match sol {
            Some(v) => {
                for (col, val) in columns.iter_mut().zip(v) {
                    col[n - 1] = val;
                }
            }
            None => singular.push(n),
        }
    }
    let states = columns
        .into_iter()
        .map(|c| SpectralVector::from_coeffs(&cfg, c))
        .collect::<Result<_>>()?;
    Ok((states, singular))
}

/// `zeta*_1..zeta*_{n_t-1}` solving `0 = nabla_zeta Theta(x, zeta, z)`.
pub fn solve_intermediate_states(
    plan: &ConcatenationPlan,
    x: &SpectralVector,
    z: &SpectralVector,
) -> Result<Vec<SpectralVector>> {
    let (states, singular) = intermediate_states_partial(plan, x, z)?;
    if singular.is_empty() {
        Ok(states)
    } else {
        Err(Error::SingularTridiagonal { modes: singular })
    }
}

fn chain<'a>(
    x: &'a SpectralVector,
    zeta: &'a [SpectralVector],
    z: &'a SpectralVector,
) -> impl Iterator<Item = &'a SpectralVector> {
    std::iter::once(x).chain(zeta).chain(std::iter::once(z))
}

/// `Theta(x, zeta, z) = sum_k W(tau, zeta_{k-1}, zeta_k)` for given interior states.
pub fn theta_value(plan: &ConcatenationPlan, x: &SpectralVector, zeta: &[SpectralVector], z: &SpectralVector) -> Result<f64> {
    plan.check(x, z)?;
    if zeta.len() != plan.n_t - 1 {
        return Err(Error::LengthMismatch {
            expected: plan.n_t - 1,
            found: zeta.len(),
        });
    }
    let states: Vec<&SpectralVector> = chain(x, zeta, z).collect();
    let mut total = 0.0;
    for w in states.windows(2) {
        total += crate::riccati::eval_w(&plan.segment, w[0], w[1])?;
    }
    Ok(total)
}

/// Stationary value of `Theta` over the interior states.
pub fn stat_value(plan: &ConcatenationPlan, x: &SpectralVector, z: &SpectralVector) -> Result<f64> {
    let zeta = solve_intermediate_states(plan, x, z)?;
    theta_value(plan, x, &zeta, z)
}

/// Per-mode gradient `e zeta_{k-1} + d zeta_k + e zeta_{k+1}` for each interior `k`.
pub fn stationarity_gradient(
    plan: &ConcatenationPlan,
    x: &SpectralVector,
    zeta: &[SpectralVector],
    z: &SpectralVector,
) -> Result<Vec<SpectralVector>> {
    plan.check(x, z)?;
    if zeta.len() != plan.n_t - 1 {
        return Err(Error::LengthMismatch {
            expected: plan.n_t - 1,
            found: zeta.len(),
        });
    }
    let states: Vec<&SpectralVector> = chain(x, zeta, z).collect();
    states
        .windows(3)
        .map(|w| {
            w[1].check_basis(w[0])?;
            Ok(w[1].map(|n, b| {
                let (d, e) = plan.mode_coefficients(n);
                e * w[0].coeff(n) + d * b + e * w[2].coeff(n)
            }))
        })
        .collect()
}

/// Euclidean norm of the stationarity gradient over all interior states.
pub fn stationarity_residual(
    plan: &ConcatenationPlan,
    x: &SpectralVector,
    zeta: &[SpectralVector],
    z: &SpectralVector,
) -> Result<f64> {
    Ok(stationarity_gradient(plan, x, zeta, z)?
        .iter()
        .map(SpectralVector::norm_half_sq)
        .sum::<f64>()
        .sqrt())
}

/// Initial velocity of the concatenated path: the short-horizon feedback
/// toward the first interior state.
pub(crate) fn initial_velocity(plan: &ConcatenationPlan, x: &SpectralVector, first: &SpectralVector) -> SpectralVector {
    let cfg = plan.basis;
    x.map(|n, a| {
        let mp = ModeParams::new(n, plan.mu, &cfg);
        let Pqr { p, q, .. } = plan.segment.mode(n);
        mp.lambda_mu / cfg.mass() * (p * a + q * first.coeff(n))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::riccati::eval_w;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_vec(rng: &mut ChaCha8Rng, cfg: &BasisConfig) -> SpectralVector {
        SpectralVector::from_fn(cfg, |n| rng.gen_range(-1.0..1.0) / n as f64)
    }

    #[test]
    fn two_segments_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let cfg = BasisConfig::unit(8);
        let plan = ConcatenationPlan::new(&cfg, 0.0, 0.7, 2).unwrap();
        let (x, z) = (random_vec(&mut rng, &cfg), random_vec(&mut rng, &cfg));
        let zeta = solve_intermediate_states(&plan, &x, &z).unwrap();
        assert_eq!(zeta.len(), 1);
        for n in 1..=8 {
            let c = (cfg.omega(n) * plan.tau()).cos();
            assert_relative_eq!(zeta[0].coeff(n), (x.coeff(n) + z.coeff(n)) / (2.0 * c), max_relative = 1e-12);
        }
    }

    #[test]
    fn zero_data_zero_states() {
        let cfg = BasisConfig::unit(4);
        let plan = ConcatenationPlan::new(&cfg, 0.0, 2.3, 5).unwrap();
        let zero = SpectralVector::zeros(&cfg);
        let zeta = solve_intermediate_states(&plan, &zero, &zero).unwrap();
        assert!(zeta.iter().all(|s| s.coeffs().iter().all(|&c| c == 0.0)));
    }

    #[test]
    fn single_segment_is_direct() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let cfg = BasisConfig::unit(6);
        let plan = ConcatenationPlan::new(&cfg, 0.3, 0.2, 1).unwrap();
        let (x, z) = (random_vec(&mut rng, &cfg), random_vec(&mut rng, &cfg));
        let direct = eval_w(&FundamentalSolution::limit(&cfg, 0.3, 0.2).unwrap(), &x, &z).unwrap();
        assert_eq!(stat_value(&plan, &x, &z).unwrap(), direct);
    }

    #[test]
    fn short_horizon_consistency() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let cfg = BasisConfig::unit(8);
        let mu = 0.5;
        let t = 0.6 * concave_horizon(mu, 1.0, 1.0);
        let plan = ConcatenationPlan::new(&cfg, mu, t, 2).unwrap();
        let (x, z) = (random_vec(&mut rng, &cfg), random_vec(&mut rng, &cfg));
        let direct = eval_w(&FundamentalSolution::limit(&cfg, mu, t).unwrap(), &x, &z).unwrap();
        assert!((stat_value(&plan, &x, &z).unwrap() - direct).abs() < 1e-9);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let cfg = BasisConfig::unit(4);
        let plan = ConcatenationPlan::new(&cfg, 0.0, 1.3, 3).unwrap();
        let (x, z) = (random_vec(&mut rng, &cfg), random_vec(&mut rng, &cfg));
        let zeta: Vec<_> = (0..2).map(|_| random_vec(&mut rng, &cfg)).collect();
        let grad = stationarity_gradient(&plan, &x, &zeta, &z).unwrap();
        let h = 1e-6;
        for k in 0..2 {
            for n in 1..=4 {
                let bump = |s: f64| {
                    let mut zz = zeta.clone();
                    zz[k] = zz[k].add(&SpectralVector::unit(&cfg, n).scaled(s)).unwrap();
                    theta_value(&plan, &x, &zz, &z).unwrap()
                };
                let fd = (bump(h) - bump(-h)) / (2.0 * h);
                assert!((fd - grad[k].coeff(n)).abs() < 1e-6 * grad[k].coeff(n).abs().max(1.0));
            }
        }
    }

    #[test]
    fn residual_grows_linearly_off_stationarity() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let cfg = BasisConfig::unit(6);
        let plan = ConcatenationPlan::new(&cfg, 0.0, 2.3, 4).unwrap();
        let (x, z) = (random_vec(&mut rng, &cfg), random_vec(&mut rng, &cfg));
        let zeta = solve_intermediate_states(&plan, &x, &z).unwrap();
        assert!(stationarity_residual(&plan, &x, &zeta, &z).unwrap() < 1e-10);
        let eta: Vec<_> = (0..3).map(|_| random_vec(&mut rng, &cfg)).collect();
        let perturbed = |s: f64| -> Vec<SpectralVector> {
            zeta.iter().zip(&eta).map(|(a, b)| a.add(&b.scaled(s)).unwrap()).collect()
        };
        let r1 = stationarity_residual(&plan, &x, &perturbed(1e-3), &z).unwrap();
        let r2 = stationarity_residual(&plan, &x, &perturbed(2e-3), &z).unwrap();
        assert_relative_eq!(r2 / r1, 2.0, max_relative = 1e-6);
    }

    #[test]
    fn planner_skips_inadmissible_counts() {
        let cfg = BasisConfig::unit(4);
        // tau = 1, 2/3 and 1/2 each hit a conjugate point of some mode n <= 4
        for n_t in 2..=4 {
            assert!(ConcatenationPlan::new(&cfg, 0.0, 2.0, n_t).is_err());
        }
        let plan = ConcatenationPlan::auto(&cfg, 0.0, 2.0).unwrap();
        assert_eq!(plan.segments(), 5);
        let mu = 0.1;
        let plan = ConcatenationPlan::auto(&cfg, mu, 1.0).unwrap();
        assert!(plan.tau() < concave_horizon(mu, 1.0, 1.0));
        assert!(matches!(
            ConcatenationPlan::new(&cfg, mu, 1.0, 2),
            Err(Error::HorizonViolation { .. })
        ));
    }

    #[test]
    fn full_horizon_conjugate_mode_is_singular() {
        // sin(n pi t) vanishes at t = 2 for every mode, tau = 2/3 is regular for n <= 2
        let cfg = BasisConfig::unit(2);
        let plan = ConcatenationPlan::new(&cfg, 0.0, 2.0, 3).unwrap();
        let x = SpectralVector::from_fn(&cfg, |_| 1.0);
        assert_eq!(
            solve_intermediate_states(&plan, &x, &x),
            Err(Error::SingularTridiagonal { modes: vec![1, 2] })
        );
    }
}
