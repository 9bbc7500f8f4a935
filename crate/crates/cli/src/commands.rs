//! The four subcommands. Each writes its data files through one
//! [`OutputDir`] and finishes with a manifest.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context;
use serde_json::json;
use wave_tpbvp::propagator::{propagate_profile, trotter_kato_gap};
use wave_tpbvp::spectral::{reconstruct, uniform_grid};
use wave_tpbvp::{FundamentalSolution, ModeParams, SpectralVector, WaveState};

use crate::config::{Boundary, ConfigErrors, Overrides, RunConfig};
use crate::output::{Manifest, OutputDir, Schema};
use crate::pipeline::{solve_config_at, SolvedRun};
use crate::suites;
use crate::{Cli, Command, Failure, OUTPUT_DIR_ENV};

struct RunContext {
    command: Command,
    config: RunConfig,
    out: PathBuf,
    seed: u64,
    manifest: Manifest,
    clock: Instant,
}

impl RunContext {
    fn lap(&mut self, name: &str) {
        let now = Instant::now();
        let ms = (now - self.clock).as_secs_f64() * 1e3;
        self.manifest.timings_ms.insert(name.to_string(), ms);
        self.clock = now;
    }
}

pub fn load_config(cli: &Cli) -> Result<RunConfig, ConfigErrors> {
    let overrides = Overrides {
        modes: cli.modes,
        mu: cli.mu,
    };
    match &cli.config {
        Some(path) => RunConfig::load(path, &overrides),
        None => RunConfig::parse_with("", Path::new("."), &overrides),
    }
}

/// `--out`, then `output.dir`, then the environment, then `./wave-tpbvp-out`.
pub fn output_dir(cli: &Cli, config: &RunConfig) -> PathBuf {
    cli.out
        .clone()
        .or_else(|| config.output.dir.clone())
        .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("wave-tpbvp-out"))
}

pub fn dispatch(cli: &Cli) -> Result<(), Failure> {
    let start = Instant::now();
    let config = load_config(cli)?;
    let mut ctx = RunContext {
        command: cli.command,
        out: output_dir(cli, &config),
        seed: cli.seed,
        manifest: Manifest::new(cli.command.name(), &config).context("serializing configuration")?,
        config,
        clock: start,
    };
    ctx.lap("load");
    match cli.command {
        Command::Solve => solve(&mut ctx),
        Command::Field => field(&mut ctx),
        Command::Sweep => sweep(&mut ctx),
        Command::Validate => validate(&mut ctx),
    }
}

/// Writes the manifest and turns the run outcome into the command result.
fn finish(ctx: &mut RunContext, out: &OutputDir, outcome: Result<(), Failure>) -> Result<(), Failure> {
    ctx.manifest.files = out.files().to_vec();
    if let Err(f) = &outcome {
        ctx.manifest.status = f.kind().to_string();
        ctx.manifest.diagnostics["error"] = f.report();
    }
    let path = out.write_manifest(&ctx.manifest)?;
    println!("{}: {} files, manifest {}", ctx.command.name(), out.files().len(), path.display());
    outcome
}

/// Solves, creating the output directory first so a solver failure still
/// leaves a manifest behind. Configuration errors write nothing.
fn solve_or_report(ctx: &mut RunContext, mu: f64) -> Result<(OutputDir, SolvedRun), Failure> {
    let result = solve_config_at(&ctx.config, mu);
    if let Err(Failure::Config(_)) = &result {
        return Err(result.unwrap_err());
    }
    let out = OutputDir::create(&ctx.out)?;
    ctx.lap("solve");
    match result {
        Ok(run) => Ok((out, run)),
        Err(f) => {
            ctx.manifest.diagnostics = json!({});
            Err(finish(ctx, &out, Err(f)).unwrap_err())
        }
    }
}

fn spectral_rows(v: &SpectralVector) -> impl Iterator<Item = [f64; 2]> + '_ {
    v.coeffs().iter().enumerate().map(|(i, a)| [(i + 1) as f64, *a])
}

fn sampled(v: &SpectralVector, grid: &[f64]) -> anyhow::Result<Vec<f64>> {
    reconstruct(v, grid).map_err(anyhow::Error::from)
}

fn solution_diagnostics(run: &SolvedRun) -> serde_json::Value {
    let sol = &run.solution;
    let modes: Vec<_> = (1..=run.basis.modes())
        .map(|n| {
            let mp = ModeParams::new(n, run.mu, &run.basis);
            json!({
                "n": n,
                "lambda": mp.lambda,
                "omega": mp.omega,
                "condition": sol.condition[n - 1],
                "w0": sol.w0.coeff(n),
                "singular": sol.singular_modes.contains(&n),
            })
        })
        .collect();
    let worst = sol
        .condition
        .iter()
        .enumerate()
        .fold((0, 0.0f64), |(bn, bc), (i, &c)| if c > bc { (i + 1, c) } else { (bn, bc) });
    json!({
        "modes": run.basis.modes(),
        "mu": run.mu,
        "horizon": run.horizon,
        "segments": sol.segments,
        "singular_modes": sol.singular_modes,
        "round_trip_error": run.round_trip_error,
        "max_condition": { "mode": worst.0, "value": worst.1 },
        "tail_indicator": {
            "initial": run.x0.tail_indicator(),
            "terminal": run.target.tail_indicator(),
            "w0": sol.w0.tail_indicator(),
        },
        "per_mode": modes,
    })
}

/// Conjugate points first (outputs are partial), then the round-trip gate.
fn gate(ctx: &RunContext, run: &SolvedRun) -> Result<(), Failure> {
    let sol = &run.solution;
    if !sol.singular_modes.is_empty() {
        return Err(Failure::ConjugatePoint {
            modes: sol.singular_modes.clone(),
            detail: format!(
                "conjugate point at horizon {}: modes {:?} were set to zero",
                run.horizon, sol.singular_modes
            ),
        });
    }
    let tol = ctx.config.numerics.tolerances.round_trip;
    if !(run.round_trip_error <= tol) {
        return Err(Failure::Suite(vec![format!(
            "round-trip: terminal mismatch {:.3e} exceeds {tol:e}",
            run.round_trip_error
        )]));
    }
    Ok(())
}

fn solve(ctx: &mut RunContext) -> Result<(), Failure> {
    let mu = ctx.config.numerics.mu;
    let (mut out, run) = solve_or_report(ctx, mu)?;
    let grid = uniform_grid(&run.basis, ctx.config.output.grid);
    let sol = &run.solution;

    let v = sampled(&sol.w0, &grid)?;
    out.write_csv("velocity.csv", Schema::Velocity, grid.iter().zip(&v).map(|(s, v)| [*s, *v]))?;
    out.write_csv("w0_spectral.csv", Schema::Spectral, spectral_rows(&sol.w0))?;
    if run.boundary == Boundary::Velocity {
        out.write_csv("z_star_spectral.csv", Schema::Spectral, spectral_rows(&sol.z_star))?;
    }
    let u = sampled(&run.terminal_state.xi, &grid)?;
    out.write_csv(
        "terminal.csv",
        Schema::Field,
        grid.iter().zip(&u).map(|(s, u)| [run.horizon, *s, *u]),
    )?;
    let tau = run.horizon / sol.segments as f64;
    if let Ok(fs) = FundamentalSolution::limit(&run.basis, mu, tau) {
        out.write_csv("eigen.csv", Schema::Eigen, fs.eigen_table())?;
    }
    ctx.lap("write");

    ctx.manifest.diagnostics = solution_diagnostics(&run);
    let outcome = gate(ctx, &run);
    finish(ctx, &out, outcome)
}

fn field(ctx: &mut RunContext) -> Result<(), Failure> {
    let mu = ctx.config.numerics.mu;
    let (mut out, run) = solve_or_report(ctx, mu)?;
    let duration = ctx.config.output.duration.unwrap_or(run.horizon);
    let grid = uniform_grid(&run.basis, ctx.config.output.grid);
    let snaps = propagate_profile(&run.x0, &run.solution.w0, duration, mu, ctx.config.output.snapshots)
        .map_err(Failure::from_core)?;
    let mut rows = Vec::with_capacity(snaps.len() * grid.len());
    let mut energy_drift = 0.0f64;
    let e0 = WaveState::from_velocity(run.x0.clone(), &run.solution.w0, mu, 0.0)
        .map_err(Failure::from_core)?
        .energy();
    for (k, st) in snaps.iter().enumerate() {
        let s = if snaps.len() == 1 {
            duration
        } else {
            duration * k as f64 / (snaps.len() - 1) as f64
        };
        energy_drift = energy_drift.max((st.energy() - e0).abs() / e0.max(f64::MIN_POSITIVE));
        for (p, u) in grid.iter().zip(sampled(&st.xi, &grid)?) {
            rows.push([s, *p, u]);
        }
    }
    ctx.lap("propagate");
    out.write_csv("field.csv", Schema::Field, rows)?;
    out.write_csv("w0_spectral.csv", Schema::Spectral, spectral_rows(&run.solution.w0))?;
    ctx.lap("write");

    let mut diag = solution_diagnostics(&run);
    diag["field"] = json!({
        "duration": duration,
        "snapshots": snaps.len(),
        "grid": grid.len(),
        "relative_energy_drift": energy_drift,
    });
    ctx.manifest.diagnostics = diag;
    let outcome = gate(ctx, &run);
    finish(ctx, &out, outcome)
}

fn sweep(ctx: &mut RunContext) -> Result<(), Failure> {
    let (mut out, run) = solve_or_report(ctx, 0.0)?;
    let y0 = WaveState::from_velocity(run.x0.clone(), &run.solution.w0, 0.0, 0.0).map_err(Failure::from_core)?;
    let gaps = trotter_kato_gap(&y0, run.horizon, &ctx.config.sweep.mu);
    ctx.lap("sweep");
    out.write_csv("gap.csv", Schema::Gap, gaps.iter().map(|(m, g)| [*m, *g]))?;
    ctx.lap("write");

    let monotone = gaps.windows(2).all(|w| w[1].1 <= w[0].1);
    let slope = match gaps.as_slice() {
        [.., a, b] if a.1 > 0.0 && b.1 > 0.0 => Some((b.1 / a.1).ln() / (b.0 / a.0).ln()),
        _ => None,
    };
    let mut diag = solution_diagnostics(&run);
    diag["sweep"] = json!({
        "mu": ctx.config.sweep.mu,
        "monotone": monotone,
        "final_log_slope": slope,
    });
    ctx.manifest.diagnostics = diag;
    let outcome = gate(ctx, &run);
    finish(ctx, &out, outcome)
}

/// Reads `(n, lambda_n)` rows that replace entries of the true eigenvalue table.
pub fn load_eigen_table(path: &Path, basis: &wave_tpbvp::BasisConfig) -> Result<Vec<f64>, ConfigErrors> {
    let err = |msg: String| ConfigErrors(vec![format!("validate.eigen_table: {msg}")]);
    let text = std::fs::read_to_string(path).map_err(|e| err(format!("cannot read {}: {e}", path.display())))?;
    let mut table: Vec<f64> = (1..=basis.modes()).map(|n| basis.lambda(n)).collect();
    for (line_no, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(|c: char| c == ',' || c.is_whitespace()).filter(|c| !c.is_empty()).collect();
        let parsed = match cols.as_slice() {
            [n, l] => n.parse::<usize>().ok().zip(l.parse::<f64>().ok()),
            _ => None,
        };
        match parsed {
            Some((n, l)) if (1..=basis.modes()).contains(&n) && l.is_finite() && l > 0.0 => table[n - 1] = l,
            _ => return Err(err(format!("line {}: expected `n lambda` with 1 <= n <= {} and lambda > 0", line_no + 1, basis.modes()))),
        }
    }
    Ok(table)
}

fn validate(ctx: &mut RunContext) -> Result<(), Failure> {
    let basis = ctx.config.basis()?;
    let table = match &ctx.config.validate.eigen_table {
        Some(path) => Some(load_eigen_table(path, &basis)?),
        None => None,
    };
    let reports = suites::run_all(&ctx.config, &basis, ctx.seed, table);
    ctx.lap("suites");
    let mut out = OutputDir::create(&ctx.out)?;
    for r in &reports {
        println!("{} {}: {}", if r.passed { "PASS" } else { "FAIL" }, r.suite, r.summary());
    }
    let passed = reports.iter().filter(|r| r.passed).count();
    out.write_json(
        "validation.json",
        "validation/1",
        &json!({ "seed": ctx.seed, "passed": passed, "total": reports.len(), "suites": reports }),
    )?;
    ctx.lap("write");
    ctx.manifest.diagnostics = json!({
        "seed": ctx.seed,
        "suites": reports.iter().map(|r| json!({"suite": r.suite, "passed": r.passed})).collect::<Vec<_>>(),
    });
    let failures: Vec<String> = reports
        .iter()
        .filter(|r| !r.passed)
        .map(|r| format!("{}: {}", r.suite, r.summary()))
        .collect();
    let outcome = if failures.is_empty() { Ok(()) } else { Err(Failure::Suite(failures)) };
    finish(ctx, &out, outcome)
}
