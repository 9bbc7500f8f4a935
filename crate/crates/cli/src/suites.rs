//! Invariant suites run by `validate`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use wave_tpbvp::payoff::{
    concave_horizon, second_difference, second_difference_bound, PayoffSpec, PiecewiseConstantInput, TerminalPayoff,
};
use wave_tpbvp::riccati::{cbar, hjb_residual, riccati_residual, EigenTrajectory, FiniteTrajectory, ModeParams};
use wave_tpbvp::spectral::{make_operator, op_compose, DiagonalOperator, OperatorKind};
use wave_tpbvp::BasisConfig;
use wave_tpbvp::SpectralVector;

use crate::config::RunConfig;
use crate::pipeline::solve_config;

/// One failed check, with what was seen against what was required.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub check: String,
    pub mode: Option<usize>,
    pub observed: f64,
    pub expected: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: &'static str,
    pub passed: bool,
    pub checks: usize,
    /// Largest normalized deviation seen.
    pub worst: f64,
    pub violations: Vec<Violation>,
}

impl SuiteReport {
    fn new(suite: &'static str) -> Self {
        Self {
            suite,
            passed: true,
            checks: 0,
            worst: 0.0,
            violations: Vec::new(),
        }
    }

    fn check(&mut self, check: impl Into<String>, mode: Option<usize>, observed: f64, limit: f64) {
        self.checks += 1;
        if observed.is_nan() || observed > self.worst {
            self.worst = observed;
        }
        if !(observed <= limit) {
            self.fail(check, mode, observed, format!("<= {limit:e}"));
        }
    }

    fn fail(&mut self, check: impl Into<String>, mode: Option<usize>, observed: f64, expected: String) {
        self.passed = false;
        self.violations.push(Violation {
            check: check.into(),
            mode,
            observed,
            expected,
        });
    }

    pub fn summary(&self) -> String {
        let head = format!("{} checks, worst {:.3e}", self.checks, self.worst);
        match self.violations.first() {
            None => head,
            Some(v) => {
                let at = v.mode.map(|n| format!(" at mode {n}")).unwrap_or_default();
                format!(
                    "{head}; {} violations, first: {}{at} observed {:.3e}, expected {}",
                    self.violations.len(),
                    v.check,
                    v.observed,
                    v.expected
                )
            }
        }
    }
}

fn smooth_random(rng: &mut ChaCha8Rng, cfg: &BasisConfig) -> SpectralVector {
    SpectralVector::from_fn(cfg, |n| rng.gen_range(-1.0..1.0) / (n * n) as f64)
}

const OPERATOR_TOL: f64 = 1e-13;

/// Diagonal operator identities, checked mode by mode in relative terms.
pub fn operator_identities(config: &RunConfig, cfg: &BasisConfig) -> SuiteReport {
    let mut rep = SuiteReport::new("operator-identities");
    let mut mus = vec![1e-3, 0.1, 1.0];
    if config.numerics.mu > 0.0 && !mus.contains(&config.numerics.mu) {
        mus.push(config.numerics.mu);
    }
    let op = |k: OperatorKind, mu: f64| make_operator(k, mu, cfg).expect("valid operator parameters");
    let compose = |f: &DiagonalOperator, g: &DiagonalOperator| op_compose(f, g).expect("same basis");
    use OperatorKind::*;
    for &mu in &mus {
        let scaled_a = DiagonalOperator::from_fn(cfg, "mu^2 A", |n| mu * mu * cfg.lambda(n));
        let lhs_rhs = [
            ("A_sqrt A_sqrt = A", compose(&op(ASqrt, mu), &op(ASqrt, mu)), op(A, mu)),
            ("J A_sqrt = identity", compose(&op(J, mu), &op(ASqrt, mu)), op(Identity, mu)),
            ("I_mu_sqrt I_mu_sqrt = I_mu", compose(&op(IMuSqrt, mu), &op(IMuSqrt, mu)), op(IMu, mu)),
            (
                "I_mu_sqrt I_mu_inv_sqrt = identity",
                compose(&op(IMuSqrt, mu), &op(IMuInvSqrt, mu)),
                op(Identity, mu),
            ),
            ("K_mu K_mu = M_mu", compose(&op(KMu, mu), &op(KMu, mu)), op(MMu, mu)),
            ("J I_mu_inv_sqrt = M_mu", compose(&op(J, mu), &op(IMuInvSqrt, mu)), op(MMu, mu)),
        ];
        for (name, lhs, rhs) in lhs_rhs {
            for n in 1..=cfg.modes() {
                let (a, b) = (lhs.eigval(n), rhs.eigval(n));
                rep.check(format!("{name} (mu={mu})"), Some(n), (a - b).abs() / b.abs(), OPERATOR_TOL);
            }
        }
        // I_mu + mu^2 A I_mu = identity, the resolvent identity without cancellation.
        let i_mu = op(IMu, mu);
        let sum = compose(&scaled_a, &i_mu);
        for n in 1..=cfg.modes() {
            let v = i_mu.eigval(n) + sum.eigval(n);
            rep.check(format!("I_mu + mu^2 A I_mu = identity (mu={mu})"), Some(n), (v - 1.0).abs(), OPERATOR_TOL);
        }
    }
    rep
}

/// Perturbation used by the Riccati suite: `mu^2 lambda_N = 1`, so every
/// retained mode feels its eigenvalue.
fn riccati_mu(cfg: &BasisConfig) -> f64 {
    (1.0 / cfg.lambda(cfg.modes()).sqrt()).min(1.0)
}

/// Finite-difference residuals of the three scalar Riccati equations for
/// every mode, relative to the size of the right-hand sides. An explicit
/// eigenvalue table replaces `lambda_n` inside the closed forms.
pub fn riccati_residuals(config: &RunConfig, cfg: &BasisConfig, table: Option<Vec<f64>>) -> SuiteReport {
    let mut rep = SuiteReport::new("riccati-residuals");
    let mu = riccati_mu(cfg);
    let c = 1.5 * cbar(cfg.mass(), cfg.stiffness());
    let traj = match table {
        Some(t) => FiniteTrajectory::with_lambda_table(cfg, mu, c, t),
        None => FiniteTrajectory::new(cfg, mu, c),
    };
    let traj = match traj {
        Ok(t) => t,
        Err(e) => {
            rep.fail(format!("trajectory construction: {e}"), None, f64::NAN, "a valid trajectory".into());
            return rep;
        }
    };
    let tbar = traj.horizon_limit();
    let h = 1e-4 * tbar;
    let tol = config.numerics.tolerances.riccati;
    for n in 1..=cfg.modes() {
        let k = ModeParams::new(n, mu, cfg).lambda_mu / cfg.mass();
        for frac in [0.25, 0.5, 0.75] {
            let t = frac * tbar;
            let (res, mid) = match (riccati_residual(&traj, n, t, h), traj.eval(n, t)) {
                (Ok(r), Ok(m)) => (r, m),
                (Err(e), _) | (_, Err(e)) => {
                    rep.fail(format!("evaluation at t={t:.4e}: {e}"), Some(n), f64::NAN, "finite".into());
                    continue;
                }
            };
            let scales = [
                cfg.stiffness() + k * mid.p * mid.p,
                k * (mid.p * mid.q).abs(),
                k * mid.q * mid.q,
            ];
            for ((name, r), s) in [("p", res.p), ("q", res.q), ("r", res.r)].into_iter().zip(scales) {
                rep.check(format!("d{name}/dt residual at t={t:.4e}"), Some(n), r.abs() / s, tol);
            }
        }
    }
    rep
}

/// Hamilton-Jacobi-Bellman residuals of the finite-penalty value function
/// at random states, horizons and perturbations.
pub fn hjb_residuals(config: &RunConfig, cfg: &BasisConfig, seed: u64) -> SuiteReport {
    let mut rep = SuiteReport::new("hjb-residuals");
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x4a4b);
    let cb = cbar(cfg.mass(), cfg.stiffness());
    let tol = config.numerics.tolerances.hjb;
    for i in 0..(config.validate.probes / 10).max(1) {
        let mu = rng.gen_range(0.1..=1.0);
        let c = cb * rng.gen_range(1.05..=2.0);
        let tbar = concave_horizon(mu, cfg.mass(), cfg.stiffness());
        let t = rng.gen_range(0.1 * tbar..0.9 * tbar);
        let (x, z) = (smooth_random(&mut rng, cfg), smooth_random(&mut rng, cfg));
        let res = FiniteTrajectory::new(cfg, mu, c).and_then(|tr| hjb_residual(&tr, t, &x, &z, 1e-3 * tbar));
        match res {
            Ok(r) => rep.check(format!("sample {i} (mu={mu:.3}, t={t:.4})"), None, r.abs(), tol),
            Err(e) => rep.fail(format!("sample {i}: {e}"), None, f64::NAN, "finite".into()),
        }
    }
    rep
}

/// Second differences of the payoff along random directions must be
/// negative and below the concavity bound.
pub fn concavity_probes(config: &RunConfig, cfg: &BasisConfig, seed: u64) -> SuiteReport {
    let mut rep = SuiteReport::new("concavity-probes");
    // Worst is the largest second difference relative to the bound magnitude.
    rep.worst = f64::NEG_INFINITY;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xc0c0);
    for i in 0..config.validate.probes {
        let mu = rng.gen_range(0.05..=1.0);
        let t = 0.9 * concave_horizon(mu, cfg.mass(), cfg.stiffness());
        let k = rng.gen_range(1..=16);
        let terminal = match i % 3 {
            0 => TerminalPayoff::Zero,
            1 => TerminalPayoff::Quadratic {
                c: rng.gen_range(0.1..50.0),
                target: smooth_random(&mut rng, cfg),
            },
            _ => TerminalPayoff::Linear {
                velocity: smooth_random(&mut rng, cfg),
            },
        };
        let x0 = smooth_random(&mut rng, cfg);
        let mut input = || {
            let steps = (0..k).map(|_| smooth_random(&mut rng, cfg)).collect();
            PiecewiseConstantInput::new(cfg, t / k as f64, steps)
        };
        let (ws, wt) = (input(), input());
        let delta = 10f64.powf(rng.gen_range(-2.0..0.0));
        let outcome = PayoffSpec::new(cfg, mu, t, terminal).and_then(|spec| {
            let (ws, wt) = (ws?, wt?);
            let d = second_difference(&spec, &x0, &ws, &wt, delta)?;
            Ok((d, second_difference_bound(&spec, &wt, delta)))
        });
        match outcome {
            Ok((d, bound)) => {
                rep.checks += 1;
                rep.worst = rep.worst.max(d / bound.abs());
                if !(d < 0.0 && d <= bound + 1e-9 * bound.abs()) {
                    rep.fail(format!("probe {i} (mu={mu:.3})"), None, d, format!("< 0 and <= {bound:e}"));
                }
            }
            Err(e) => rep.fail(format!("probe {i}: {e}"), None, f64::NAN, "finite".into()),
        }
    }
    rep
}

/// Solves the configured problem, propagates the result, and compares the
/// terminal state with the boundary data. Zero data must give zero velocity.
pub fn round_trips(config: &RunConfig) -> SuiteReport {
    let mut rep = SuiteReport::new("round-trips");
    let tol = config.numerics.tolerances.round_trip;
    match solve_config(config) {
        Ok(run) => {
            if let Some(&n) = run.solution.singular_modes.first() {
                rep.fail(
                    format!("conjugate point in modes {:?}", run.solution.singular_modes),
                    Some(n),
                    f64::NAN,
                    "no singular modes".into(),
                );
            }
            rep.check("configured problem terminal mismatch", None, run.round_trip_error, tol);
        }
        Err(e) => rep.fail(format!("configured problem: {}", e.messages().join("; ")), None, f64::NAN, "solvable".into()),
    }
    let mut zero = config.clone();
    zero.problem.initial = crate::config::ProfileSource::Named(wave_tpbvp::spectral::AnalyticProfile::Zero);
    zero.problem.terminal = zero.problem.initial.clone();
    match solve_config(&zero) {
        Ok(run) => {
            let w = run.solution.w0.coeffs().iter().fold(0.0f64, |m, a| m.max(a.abs()));
            rep.check("zero data initial velocity", None, w, 0.0);
        }
        Err(e) => rep.fail(format!("zero data: {}", e.messages().join("; ")), None, f64::NAN, "solvable".into()),
    }
    rep
}

pub fn run_all(config: &RunConfig, cfg: &BasisConfig, seed: u64, table: Option<Vec<f64>>) -> Vec<SuiteReport> {
    vec![
        operator_identities(config, cfg),
        riccati_residuals(config, cfg, table),
        hjb_residuals(config, cfg, seed),
        concavity_probes(config, cfg, seed),
        round_trips(config),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> (RunConfig, BasisConfig) {
        let mut c = RunConfig::default();
        c.numerics.modes = 8;
        c.validate.probes = 30;
        let cfg = c.basis().unwrap();
        (c, cfg)
    }

    #[test]
    fn clean_suites_pass() {
        let (c, cfg) = small();
        for rep in run_all(&c, &cfg, 7, None) {
            assert!(rep.passed, "{}: {}", rep.suite, rep.summary());
        }
    }

    #[test]
    fn corrupted_table_names_the_mode() {
        let (c, cfg) = small();
        let mut table: Vec<f64> = (1..=8).map(|n| cfg.lambda(n)).collect();
        table[5] *= 1.01;
        let rep = riccati_residuals(&c, &cfg, Some(table));
        assert!(!rep.passed);
        assert!(rep.violations.iter().all(|v| v.mode == Some(6)));
        assert!(rep.summary().contains("mode 6"));
    }

    #[test]
    fn single_mode_passes() {
        let mut c = RunConfig::default();
        c.numerics.modes = 1;
        c.validate.probes = 20;
        let cfg = c.basis().unwrap();
        for rep in run_all(&c, &cfg, 0, None) {
            assert!(rep.passed, "{}: {}", rep.suite, rep.summary());
        }
    }
}
