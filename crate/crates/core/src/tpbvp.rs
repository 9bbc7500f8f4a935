//! Two-point boundary value problems: given the initial displacement and
//! either the terminal displacement or the terminal velocity, find the
//! initial velocity.
//!
//! The initial velocity is the optimal feedback of the fundamental solution
//! evaluated at `s = 0`. Horizons beyond the concavity window of a
//! perturbed problem go through [`crate::long_horizon`].

use crate::error::{Error, Result};
use crate::long_horizon::{initial_velocity, intermediate_states_partial, ConcatenationPlan};
use crate::payoff::concave_horizon;
use crate::riccati::{FundamentalSolution, ModeParams, Pqr, CONJUGATE_TOL};
use crate::spectral::{BasisConfig, SpectralVector};

/// Terminal boundary data.
#[derive(Debug, Clone, PartialEq)]
pub enum Terminal {
    Displacement(SpectralVector),
    Velocity(SpectralVector),
}

/// How many segments to split the horizon into.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Segments {
    /// One segment when the horizon allows it, otherwise the planner's choice.
    Auto,
    Count(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TpbvpProblem {
    basis: BasisConfig,
    mu: f64,
    horizon: f64,
    x0: SpectralVector,
    terminal: Terminal,
    segments: Segments,
}

impl TpbvpProblem {
    pub fn new(mu: f64, horizon: f64, x0: SpectralVector, terminal: Terminal, segments: Segments) -> Result<Self> {
        if !(mu.is_finite() && (0.0..=1.0).contains(&mu)) {
            return Err(Error::InvalidParameter {
                name: "mu",
                value: mu,
                reason: "must lie in [0, 1]",
            });
        }
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::InvalidParameter {
                name: "t",
                value: horizon,
                reason: "horizon must be finite and positive",
            });
        }
        if segments == Segments::Count(0) {
            return Err(Error::InvalidParameter {
                name: "n_segments",
                value: 0.0,
                reason: "segment count must be at least 1",
            });
        }
        match &terminal {
            Terminal::Displacement(v) | Terminal::Velocity(v) => x0.check_basis(v)?,
        }
        Ok(Self {
            basis: *x0.basis(),
            mu,
            horizon,
            x0,
            terminal,
            segments,
        })
    }

    pub fn basis(&self) -> &BasisConfig {
        &self.basis
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn x0(&self) -> &SpectralVector {
        &self.x0
    }

    pub fn terminal(&self) -> &Terminal {
        &self.terminal
    }

    pub fn segments(&self) -> Segments {
        self.segments
    }

    /// Same problem with a displacement target.
    fn with_displacement(&self, z: SpectralVector) -> Self {
        Self {
            terminal: Terminal::Displacement(z),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TpbvpSolution {
    /// Initial velocity coefficients; zero on singular modes.
    pub w0: SpectralVector,
    /// Terminal displacement reached (the target itself in the displacement case).
    pub z_star: SpectralVector,
    /// Modes for which the boundary-matching problem is singular, ascending.
    pub singular_modes: Vec<usize>,
    /// `1 / |sin(omega_n t)|` for each mode.
    pub condition: Vec<f64>,
    /// Number of concatenated segments used.
    pub segments: usize,
}

impl TpbvpSolution {
    pub fn ensure_regular(&self) -> Result<()> {
        if self.singular_modes.is_empty() {
            Ok(())
        } else {
            Err(Error::ConjugatePoint {
                modes: self.singular_modes.clone(),
            })
        }
    }
}

fn condition_numbers(cfg: &BasisConfig, mu: f64, t: f64) -> Vec<f64> {
    (1..=cfg.modes())
        .map(|n| 1.0 / (ModeParams::new(n, mu, cfg).omega * t).sin().abs())
        .collect()
}

fn choose_plan(prob: &TpbvpProblem) -> Result<Option<ConcatenationPlan>> {
    let cfg = &prob.basis;
    let (mu, t) = (prob.mu, prob.horizon);
    let limit = concave_horizon(mu, cfg.mass(), cfg.stiffness());
    match prob.segments {
        Segments::Count(1) => {
            if mu > 0.0 && t >= limit {
                return Err(Error::HorizonViolation { horizon: t, limit });
            }
            Ok(None)
        }
        Segments::Count(n) => ConcatenationPlan::new(cfg, mu, t, n).map(Some),
        Segments::Auto if mu > 0.0 && t >= limit => ConcatenationPlan::auto(cfg, mu, t).map(Some),
        Segments::Auto => Ok(None),
    }
}

/// `w0_n = (lambda_n^mu / m) [p_n(t) x_n + q_n(t) z_n]`, which reduces to
/// `omega_n [z_n / sin(omega_n t) - x_n cot(omega_n t)]`.
pub fn solve_displacement(prob: &TpbvpProblem) -> Result<TpbvpSolution> {
    let Terminal::Displacement(z) = &prob.terminal else {
        return Err(Error::InvalidParameter {
            name: "terminal",
            value: f64::NAN,
            reason: "displacement solve needs a displacement target",
        });
    };
    let cfg = prob.basis;
    let x = &prob.x0;
    let condition = condition_numbers(&cfg, prob.mu, prob.horizon);
    match choose_plan(prob)? {
        None => {
            let fs = FundamentalSolution::limit(&cfg, prob.mu, prob.horizon)?;
            let singular = fs.singular_modes().to_vec();
            let w0 = x.map(|n, a| {
                if singular.contains(&n) {
                    return 0.0;
                }
                let mp = fs.params(n);
                let Pqr { p, q, .. } = fs.mode(n);
                mp.lambda_mu / cfg.mass() * (p * a + q * z.coeff(n))
            });
            Ok(TpbvpSolution {
                w0,
                z_star: z.clone(),
                singular_modes: singular,
                condition,
                segments: 1,
            })
        }
        Some(plan) => {
            let (zeta, singular) = intermediate_states_partial(&plan, x, z)?;
            let first = zeta.first().unwrap_or(z);
            let w0 = initial_velocity(&plan, x, first).map(|n, a| if singular.contains(&n) { 0.0 } else { a });
            Ok(TpbvpSolution {
                w0,
                z_star: z.clone(),
                singular_modes: singular,
                condition,
                segments: plan.segments(),
            })
        }
    }
}

/// Modes where the velocity-target problem is singular: `sin(omega t) = 0`
/// (no limit solution) or `cos(omega t) = 0` (`r_n = 0`).
fn velocity_singular_modes(cfg: &BasisConfig, mu: f64, t: f64) -> Vec<usize> {
    (1..=cfg.modes())
        .filter(|&n| {
            let (s, c) = (ModeParams::new(n, mu, cfg).omega * t).sin_cos();
            s.abs() < CONJUGATE_TOL || c.abs() < CONJUGATE_TOL
        })
        .collect()
}

/// Terminal displacement that makes the terminal payoff `m <J J v, z>`
/// stationary: `z*_n = -(q_n x_n + (m / lambda_n) v_n) / r_n`.
pub fn terminal_displacement_for_velocity(prob: &TpbvpProblem) -> Result<(SpectralVector, Vec<usize>)> {
    let Terminal::Velocity(v) = &prob.terminal else {
        return Err(Error::InvalidParameter {
            name: "terminal",
            value: f64::NAN,
            reason: "velocity solve needs a velocity target",
        });
    };
    let cfg = prob.basis;
    let singular = velocity_singular_modes(&cfg, prob.mu, prob.horizon);
    let fs = FundamentalSolution::limit(&cfg, prob.mu, prob.horizon)?;
    let z = prob.x0.map(|n, a| {
        if singular.contains(&n) {
            return 0.0;
        }
        let Pqr { q, r, .. } = fs.mode(n);
        -(q * a + cfg.mass() / cfg.lambda(n) * v.coeff(n)) / r
    });
    Ok((z, singular))
}

/// Velocity target: compute `z*` and then solve the displacement problem.
/// The terminal velocity reached is `I_mu v` (exactly `v` at `mu = 0`).
pub fn solve_velocity(prob: &TpbvpProblem) -> Result<TpbvpSolution> {
    let (z_star, singular) = terminal_displacement_for_velocity(prob)?;
    let mut sol = solve_displacement(&prob.with_displacement(z_star))?;
    sol.singular_modes.extend(singular);
    sol.singular_modes.sort_unstable();
    sol.singular_modes.dedup();
    let s = sol.singular_modes.clone();
    sol.w0 = sol.w0.map(|n, a| if s.contains(&n) { 0.0 } else { a });
    Ok(sol)
}

/// Closed form `w0_n = omega_n tan(omega_n t) x_n + i_n v_n / cos(omega_n t)`
/// with `i_n = 1 / (1 + mu^2 lambda_n)`, bypassing `z*`.
pub fn velocity_one_shot(prob: &TpbvpProblem) -> Result<(SpectralVector, Vec<usize>)> {
    let Terminal::Velocity(v) = &prob.terminal else {
        return Err(Error::InvalidParameter {
            name: "terminal",
            value: f64::NAN,
            reason: "velocity solve needs a velocity target",
        });
    };
    let cfg = prob.basis;
    let singular = velocity_singular_modes(&cfg, prob.mu, prob.horizon);
    let w0 = prob.x0.map(|n, a| {
        if singular.contains(&n) {
            return 0.0;
        }
        let mp = ModeParams::new(n, prob.mu, &cfg);
        let (s, c) = (mp.omega * prob.horizon).sin_cos();
        mp.omega * s / c * a + mp.lambda_mu / mp.lambda * v.coeff(n) / c
    });
    Ok((w0, singular))
}

/// Dispatches on the terminal kind.
pub fn solve(prob: &TpbvpProblem) -> Result<TpbvpSolution> {
    match prob.terminal {
        Terminal::Displacement(_) => solve_displacement(prob),
        Terminal::Velocity(_) => solve_velocity(prob),
    }
}

/// Optimal feedback `w_n(s) = (lambda_n^mu / m)[p_n(t-s) x_n + q_n(t-s) z*_n]`
/// for the horizon and perturbation of `fs`.
pub fn optimal_feedback(
    fs: &FundamentalSolution,
    s: f64,
    x_now: &SpectralVector,
    z_star: &SpectralVector,
) -> Result<SpectralVector> {
    let cfg = *fs.basis();
    let t = fs.horizon();
    let delta = cfg.default_delta_min();
    if !(s < t - delta) || s < 0.0 {
        return Err(Error::FeedbackUndefined { s, limit: t - delta });
    }
    let remaining = if s == 0.0 {
        fs.clone()
    } else {
        FundamentalSolution::limit(&cfg, fs.mu(), t - s)?
    };
    let grad = remaining.gradient_x(x_now, z_star)?;
    Ok(grad.map(|n, g| ModeParams::new(n, fs.mu(), &cfg).lambda_mu / cfg.mass() * g))
}

/// Closed-loop state after integrating `xi' = k(s, xi)` from `xi(0) = x0`
/// to `s_end` with classical RK4 on steps no longer than `max_step` and
/// `0.1 (t - s)`. Returns the state and the feedback velocity at `s_end`.
pub fn integrate_closed_loop(
    fs: &FundamentalSolution,
    x0: &SpectralVector,
    z_star: &SpectralVector,
    s_end: f64,
    max_step: f64,
) -> Result<(SpectralVector, SpectralVector)> {
    let t = fs.horizon();
    let mut s = 0.0;
    let mut xi = x0.clone();
    let f = |s: f64, x: &SpectralVector| optimal_feedback(fs, s, x, z_star);
    while s < s_end {
        let h = max_step.min(0.1 * (t - s)).min(s_end - s);
        let k1 = f(s, &xi)?;
        let k2 = f(s + 0.5 * h, &xi.zip_with(&k1, |a, k| a + 0.5 * h * k)?)?;
        let k3 = f(s + 0.5 * h, &xi.zip_with(&k2, |a, k| a + 0.5 * h * k)?)?;
        let k4 = f(s + h, &xi.zip_with(&k3, |a, k| a + h * k)?)?;
        let incr = SpectralVector::from_fn(xi.basis(), |n| {
            let i = n - 1;
            h / 6.0 * (k1.coeffs()[i] + 2.0 * k2.coeffs()[i] + 2.0 * k3.coeffs()[i] + k4.coeffs()[i])
        });
        xi = xi.add(&incr)?;
        s += h;
        if s_end - s < 1e-15 * t {
            s = s_end;
        }
    }
    let w = f(s_end, &xi)?;
    Ok((xi, w))
}
