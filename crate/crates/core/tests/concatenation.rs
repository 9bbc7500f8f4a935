use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use wave_tpbvp::long_horizon::{solve_intermediate_states, stat_value, ConcatenationPlan};
use wave_tpbvp::propagator::propagate_profile;
use wave_tpbvp::spectral::{BasisConfig, SpectralVector};
use wave_tpbvp::tpbvp::{solve, Segments, Terminal, TpbvpProblem};

fn smooth(rng: &mut ChaCha8Rng, cfg: &BasisConfig) -> SpectralVector {
    SpectralVector::from_fn(cfg, |n| rng.gen_range(-1.0..1.0) / (n * n) as f64)
}

fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs())).unwrap();
        a.swap(k, p);
        b.swap(k, p);
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            for j in k..n {
                a[i][j] -= f * a[k][j];
            }
            b[i] -= f * b[k];
        }
    }
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|j| a[k][j] * b[j]).sum();
        b[k] = (b[k] - s) / a[k][k];
    }
    b
}

#[test]
fn tridiagonal_matches_dense() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let cfg = BasisConfig::new(2f64.sqrt(), 8, 1.0, 1.0).unwrap();
    let plan = ConcatenationPlan::new(&cfg, 0.0, 3.0, 6).unwrap();
    let (x, z) = (smooth(&mut rng, &cfg), smooth(&mut rng, &cfg));
    let zeta = solve_intermediate_states(&plan, &x, &z).unwrap();
    let k = 5;
    for n in 1..=8 {
        let (d, e) = plan.mode_coefficients(n);
        let mut a = vec![vec![0.0; k]; k];
        for i in 0..k {
            a[i][i] = d;
            if i + 1 < k {
                a[i][i + 1] = e;
                a[i + 1][i] = e;
            }
        }
        let mut b = vec![0.0; k];
        b[0] = -e * x.coeff(n);
        b[k - 1] -= e * z.coeff(n);
        let y = dense_solve(a, b);
        for i in 0..k {
            let scale = y[i].abs().max(1.0);
            assert!((zeta[i].coeff(n) - y[i]).abs() < 1e-12 * scale);
        }
    }
}

#[test]
fn segment_count_invariance() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let cfg = BasisConfig::new(2f64.sqrt(), 12, 1.0, 1.0).unwrap();
    let t = 3.0;
    let (x, z) = (smooth(&mut rng, &cfg), smooth(&mut rng, &cfg));
    let coarse = ConcatenationPlan::new(&cfg, 0.0, t, 3).unwrap();
    let fine = ConcatenationPlan::new(&cfg, 0.0, t, 6).unwrap();
    let vc = stat_value(&coarse, &x, &z).unwrap();
    let vf = stat_value(&fine, &x, &z).unwrap();
    assert!((vc - vf).abs() < 1e-8);
    let zc = solve_intermediate_states(&coarse, &x, &z).unwrap();
    let zf = solve_intermediate_states(&fine, &x, &z).unwrap();
    for (k, state) in zc.iter().enumerate() {
        let shared = &zf[2 * k + 1];
        assert!(state.sub(shared).unwrap().norm_half() < 1e-10);
    }
}

#[test]
fn concatenated_path_is_dynamically_consistent() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let cfg = BasisConfig::new(1.3, 10, 0.8, 1.7).unwrap();
    let t = 2.9;
    let (x, z) = (smooth(&mut rng, &cfg), smooth(&mut rng, &cfg));
    let plan = ConcatenationPlan::auto(&cfg, 0.0, t).unwrap();
    let zeta = solve_intermediate_states(&plan, &x, &z).unwrap();
    let prob = TpbvpProblem::new(0.0, t, x.clone(), Terminal::Displacement(z.clone()), Segments::Count(plan.segments()))
        .unwrap();
    let sol = solve(&prob).unwrap();
    let direct = solve(&TpbvpProblem::new(0.0, t, x.clone(), Terminal::Displacement(z), Segments::Count(1)).unwrap()).unwrap();
    assert!(sol.w0.sub(&direct.w0).unwrap().norm_half() < 1e-9 * direct.w0.norm_half());
    let snaps = propagate_profile(&x, &sol.w0, t, 0.0, plan.segments() + 1).unwrap();
    for (k, state) in zeta.iter().enumerate() {
        assert!(snaps[k + 1].xi.sub(state).unwrap().norm_half() < 1e-10);
    }
}
