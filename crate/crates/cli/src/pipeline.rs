//! Problem assembly from a configuration, solving, and the propagation
//! round-trip that gates success.

use wave_tpbvp::propagator::semigroup_step;
use wave_tpbvp::riccati::ModeParams;
use wave_tpbvp::tpbvp::solve;
use wave_tpbvp::{BasisConfig, SpectralVector, Terminal, TpbvpProblem, TpbvpSolution, WaveState};

use crate::config::{Boundary, ConfigErrors, RunConfig};
use crate::Failure;

#[derive(Debug, Clone)]
pub struct SolvedRun {
    pub basis: BasisConfig,
    pub mu: f64,
    pub horizon: f64,
    pub x0: SpectralVector,
    /// Terminal data as configured (displacement or velocity).
    pub target: SpectralVector,
    pub boundary: Boundary,
    pub solution: TpbvpSolution,
    /// Propagated state at the horizon.
    pub terminal_state: WaveState,
    /// Relative terminal mismatch over the regular modes.
    pub round_trip_error: f64,
}

pub fn build_problem(config: &RunConfig, mu: f64) -> Result<(TpbvpProblem, SpectralVector), Failure> {
    let (x0, target) = config.boundary_data()?;
    let terminal = match config.problem.boundary {
        Boundary::Displacement => Terminal::Displacement(target.clone()),
        Boundary::Velocity => Terminal::Velocity(target.clone()),
    };
    let prob = TpbvpProblem::new(mu, config.problem.horizon, x0, terminal, config.problem.segments.0)
        .map_err(Failure::from_core)?;
    Ok((prob, target))
}

pub fn solve_config(config: &RunConfig) -> Result<SolvedRun, Failure> {
    solve_config_at(config, config.numerics.mu)
}

/// Solves the configured problem with the perturbation `mu`.
pub fn solve_config_at(config: &RunConfig, mu: f64) -> Result<SolvedRun, Failure> {
    let (prob, target) = build_problem(config, mu)?;
    let solution = solve(&prob).map_err(Failure::from_core)?;
    let basis = *prob.basis();
    let horizon = prob.horizon();
    let start = WaveState::from_velocity(prob.x0().clone(), &solution.w0, mu, 0.0).map_err(Failure::from_core)?;
    let terminal_state = semigroup_step(&start, horizon, mu);
    let round_trip_error = round_trip_error(
        &terminal_state,
        &solution,
        &target,
        config.problem.boundary,
        mu,
        prob.x0(),
    );
    Ok(SolvedRun {
        basis,
        mu,
        horizon,
        x0: prob.x0().clone(),
        target,
        boundary: config.problem.boundary,
        solution,
        terminal_state,
        round_trip_error,
    })
}

fn masked_norm(v: &SpectralVector, singular: &[usize]) -> f64 {
    v.coeffs()
        .iter()
        .enumerate()
        .filter(|(i, _)| !singular.contains(&(i + 1)))
        .map(|(_, a)| a * a)
        .sum::<f64>()
        .sqrt()
}

fn round_trip_error(
    state: &WaveState,
    sol: &TpbvpSolution,
    target: &SpectralVector,
    boundary: Boundary,
    mu: f64,
    x0: &SpectralVector,
) -> f64 {
    let s = &sol.singular_modes;
    let scale = |v: &SpectralVector| masked_norm(v, s).max(masked_norm(x0, s)).max(f64::MIN_POSITIVE);
    let disp = state.xi.sub(&sol.z_star).expect("same basis");
    let mut err = masked_norm(&disp, s) / scale(&sol.z_star);
    if boundary == Boundary::Velocity {
        let cfg = target.basis();
        let expected = target.map(|n, a| ModeParams::new(n, mu, cfg).lambda_mu / cfg.lambda(n) * a);
        let dv = state.velocity(mu).sub(&expected).expect("same basis");
        err = err.max(masked_norm(&dv, s) / scale(&expected));
    }
    err
}

impl From<ConfigErrors> for Failure {
    fn from(e: ConfigErrors) -> Self {
        Failure::Config(e.0)
    }
}
