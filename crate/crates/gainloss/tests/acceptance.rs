//! Acceptance suite. Each test prints one `ACCEPTANCE <n> ... PASS|FAIL`
//! line (written to stderr directly so it survives output capture) and then
//! asserts the same verdict.

use std::io::Write;

use gainloss::sweep::parallel_sweep;
use gainloss_core::dynamics::{
    evolution_speed, integrate, observable_rate, propagate_exact, propagate_noise_unitary,
    purity_rate, rhs, IntegratorConfig, Stepper, Trajectory,
};
use gainloss_core::experiments::{
    find_equilibrium, order_parameter, relax, standard_model, SweepConfig,
};
use gainloss_core::numerics::{psd_sqrt, CMatrix, I};
use gainloss_core::random::{random_density, random_hermitian, random_pure};
use gainloss_core::spectral::{
    analyze, evolve_eigenbasis, expand, predict_attractor, stationary_set, Attractor, Phase,
};
use gainloss_core::state::{
    density_from_pure, expectation, purity, DensityMatrix, GainLossModel, Observable,
};
use num_complex::Complex64;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

struct Check {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn check(name: &'static str, pass: bool, detail: String) -> Check {
    Check { name, pass, detail }
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

fn report(n: u32, title: &str, checks: &[Check]) {
    let pass = checks.iter().all(|c| c.pass);
    let mut line = format!("\nACCEPTANCE {n} {title}: {}", verdict(pass));
    for c in checks {
        line.push_str(&format!(" | {} {} ({})", c.name, verdict(c.pass), c.detail));
    }
    line.push('\n');
    let _ = std::io::stderr().write_all(line.as_bytes());
    assert!(pass, "{line}");
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn model(gamma: f64, kappa: f64) -> GainLossModel {
    standard_model(gamma, kappa).unwrap()
}

fn tight() -> IntegratorConfig {
    IntegratorConfig::default().with_tolerances(1e-13, 1e-15)
}

/// Integration whose every stored sample must be a valid state.
fn checked_integrate(
    rho0: &DensityMatrix,
    t_final: f64,
    m: &GainLossModel,
    cfg: &IntegratorConfig,
) -> Trajectory {
    let traj = integrate(rho0, t_final, m, cfg).unwrap();
    for s in &traj.samples {
        assert!((s.state.matrix().trace().re - 1.0).abs() <= 1e-9, "trace at t={}", s.t);
        assert!(s.min_eigenvalue >= -1e-9, "min eigenvalue {} at t={}", s.min_eigenvalue, s.t);
    }
    traj
}

/// States at `t - h`, `t`, `t + h` for each `t`, along one tight trajectory.
fn stencils(rho0: &DensityMatrix, m: &GainLossModel, times: &[f64], h: f64) -> Vec<[DensityMatrix; 3]> {
    let mut stepper = Stepper::new(rho0, m, tight()).unwrap();
    times
        .iter()
        .map(|&t| {
            let mut at = |s: f64| {
                stepper.advance_to(s).unwrap();
                stepper.state()
            };
            [at(t - h), at(t), at(t + h)]
        })
        .collect()
}

#[test]
fn criterion_01_spectrum() {
    let gammas = [0.0, 0.25, 0.5, 0.75, 0.9, 0.99, 1.01, 1.5, 2.0, 5.0];
    let mut max_err: f64 = 0.0;
    let mut phases_ok = true;
    for &g in &gammas {
        let sys = analyze(&model(g, 0.0));
        let root = if g <= 1.0 {
            Complex64::new((1.0 - g * g).sqrt(), 0.0)
        } else {
            Complex64::new(0.0, (g * g - 1.0).sqrt())
        };
        let mut got = sys.eigenvalues.clone();
        got.sort_by(|a, b| (a.re + a.im).total_cmp(&(b.re + b.im)));
        let expect = [-root, root];
        for (a, b) in got.iter().zip(&expect) {
            max_err = max_err.max((a - b).norm());
        }
        let want = if g < 1.0 { Phase::Unbroken } else { Phase::Broken };
        phases_ok &= sys.phase == want;
    }
    let critical = analyze(&model(1.0, 0.0)).phase;
    report(
        1,
        "spectrum",
        &[
            check("eigenvalues", max_err <= 1e-12, format!("max error {max_err:.2e}")),
            check("phase labels", phases_ok, "Unbroken below 1, Broken above".into()),
            check("critical point", critical == Phase::Exceptional, format!("gamma=1 is {critical}")),
        ],
    );
}

#[test]
fn criterion_02_fixed_points() {
    let mut max_rhs: f64 = 0.0;
    for g in [0.5, 2.0] {
        let m = model(g, 0.0);
        let sys = analyze(&m);
        for j in 0..2 {
            max_rhs = max_rhs.max(rhs(&sys.projector(j).unwrap(), &m).unwrap().norm_fro());
        }
    }

    let m = model(0.5, 0.0);
    let set = stationary_set(&analyze(&m), &m).unwrap();
    let mut r = rng(2);
    let mut max_return: f64 = 0.0;
    let mut max_integrated: f64 = 0.0;
    let mut max_gamma: f64 = 0.0;
    for _ in 0..20 {
        let w = rand_chacha::rand_core::RngCore::next_u64(&mut r) as f64 / u64::MAX as f64;
        let mix = set.mixture(&[w, 1.0 - w]).unwrap();
        let (out, _) = propagate_exact(&mix, 50.0, &m).unwrap();
        max_return = max_return.max(out.distance(&mix));
        let traj = checked_integrate(&mix, 50.0, &m, &tight());
        max_integrated = max_integrated.max(traj.last().unwrap().state.distance(&mix));
        max_gamma = max_gamma.max(m.gamma().trace_product(mix.matrix()).re.abs());
    }

    let m2 = model(2.0, 0.0);
    let sys2 = analyze(&m2);
    let half = DensityMatrix::mixture(&[0.5, 0.5], &[sys2.projector(0).unwrap(), sys2.projector(1).unwrap()])
        .unwrap();
    let moving = rhs(&half, &m2).unwrap().norm_fro();
    report(
        2,
        "fixed points",
        &[
            check("eigenprojectors", max_rhs <= 1e-10, format!("max |rhs| {max_rhs:.2e}")),
            check(
                "unbroken mixtures",
                set.mixed_generators.len() == 2
                    && max_return <= 1e-8
                    && max_integrated <= 1e-8
                    && max_gamma <= 1e-10,
                format!(
                    "return {max_return:.2e}, integrated {max_integrated:.2e}, |tr(Gamma rho)| {max_gamma:.2e}"
                ),
            ),
            check("broken mixture moves", moving > 1e-3, format!("|rhs| {moving:.3}")),
        ],
    );
}

#[test]
fn criterion_03_oracle_equivalence() {
    let cfg = IntegratorConfig::default().with_output_interval(0.5);
    let mut r = rng(3);
    let mut dev_exact: f64 = 0.0;
    for g in [0.5, 2.0] {
        let m = model(g, 0.0);
        for _ in 0..10 {
            let rho = random_density(2, &mut r).unwrap();
            for s in &checked_integrate(&rho, 10.0, &m, &cfg).samples {
                let (e, _) = propagate_exact(&rho, s.t, &m).unwrap();
                dev_exact = dev_exact.max(s.state.distance(&e));
            }
        }
    }

    let mut dev_noise: f64 = 0.0;
    for kappa in [0.1, 1.0] {
        let m = GainLossModel::new(CMatrix::pauli_x(), CMatrix::zeros(2), kappa).unwrap();
        for _ in 0..5 {
            let rho = random_density(2, &mut r).unwrap();
            for s in &checked_integrate(&rho, 10.0, &m, &cfg).samples {
                let e = propagate_noise_unitary(&rho, s.t, &m).unwrap();
                dev_noise = dev_noise.max(s.state.distance(&e));
            }
        }
    }

    let mut dev_eigen: f64 = 0.0;
    for g in [0.25, 0.5, 0.9, 1.1, 1.5, 2.0] {
        let m = model(g, 0.0);
        let sys = analyze(&m);
        for _ in 0..10 {
            let rho = random_density(2, &mut r).unwrap();
            let e = expand(&rho, &sys).unwrap();
            for k in 0..=20 {
                let t = 0.5 * k as f64;
                let (p, _) = propagate_exact(&rho, t, &m).unwrap();
                dev_eigen = dev_eigen.max(evolve_eigenbasis(&e, t).unwrap().distance(&p));
            }
        }
    }
    report(
        3,
        "oracle equivalence",
        &[
            check("integrator vs propagator", dev_exact <= 1e-8, format!("max {dev_exact:.2e}")),
            check("integrator vs noisy closed form", dev_noise <= 1e-8, format!("max {dev_noise:.2e}")),
            check("eigenbasis vs propagator", dev_eigen <= 1e-8, format!("max {dev_eigen:.2e}")),
        ],
    );
}

#[test]
fn criterion_04_attractor() {
    let m = model(2.0, 0.0);
    let sys = analyze(&m);
    let z = Observable::pauli_z();
    let target = -(3f64).sqrt() / 2.0;
    let mut r = rng(4);
    let mut max_dist: f64 = 0.0;
    let mut max_z: f64 = 0.0;
    let mut unique = true;
    for _ in 0..10 {
        let rho = random_density(2, &mut r).unwrap();
        let predicted = match predict_attractor(&expand(&rho, &sys).unwrap()).unwrap() {
            Attractor::Point { projector, .. } => projector,
            Attractor::Subspace { .. } => {
                unique = false;
                continue;
            }
        };
        let last = checked_integrate(&rho, 20.0, &m, &IntegratorConfig::default())
            .last()
            .unwrap()
            .state
            .clone();
        max_dist = max_dist.max(last.distance(&predicted));
        max_z = max_z.max((expectation(&last, &z).unwrap() - target).abs());
    }
    report(
        4,
        "attractor",
        &[
            check("lands on slowest-decay projector", unique && max_dist <= 1e-6, format!("max distance {max_dist:.2e}")),
            check("sigma_z at the attractor", max_z <= 1e-6, format!("max error {max_z:.2e}")),
        ],
    );
}

/// `|a - b| / max(|b|, 1e-3)`; the floor keeps sign changes of a rate from
/// dividing by zero.
fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-3)
}

#[test]
fn criterion_05_rates() {
    let h = 1e-5;
    let times = [0.3, 0.8, 1.5, 2.5];
    let mut r = rng(5);
    let mut worst_purity: f64 = 0.0;
    let mut worst_obs: f64 = 0.0;
    for (g, kappa) in [(0.7, 0.0), (2.0, 0.0), (0.7, 0.3), (2.0, 0.3)] {
        let m = model(g, kappa);
        let rho0 = random_density(2, &mut r).unwrap();
        let observables = [Observable::pauli_x(), Observable::pauli_z(), m.gamma_observable()];
        for [minus, mid, plus] in stencils(&rho0, &m, &times, h) {
            let fd = (purity(&plus) - purity(&minus)) / (2.0 * h);
            worst_purity = worst_purity.max(rel_err(fd, purity_rate(&mid, &m).unwrap()));
            for f in &observables {
                let fd = (expectation(&plus, f).unwrap() - expectation(&minus, f).unwrap()) / (2.0 * h);
                worst_obs = worst_obs.max(rel_err(fd, observable_rate(&mid, f, &m).unwrap()));
            }
        }
    }

    let mut monotone = true;
    let mut worst_rise: f64 = 0.0;
    for seed in 0..5 {
        let mut r = rng(50 + seed);
        let m = GainLossModel::new(CMatrix::zeros(3), random_hermitian(3, &mut r), 0.0).unwrap();
        let rho = random_density(3, &mut r).unwrap();
        let traj = checked_integrate(&rho, 10.0, &m, &IntegratorConfig::default().with_output_interval(0.1));
        for w in traj.samples.windows(2) {
            let rise = w[1].gamma_expectation - w[0].gamma_expectation;
            worst_rise = worst_rise.max(rise);
            monotone &= rise <= 0.0;
        }
    }
    report(
        5,
        "rates",
        &[
            check("purity rate vs finite differences", worst_purity <= 1e-6, format!("max rel {worst_purity:.2e}")),
            check("observable rate vs finite differences", worst_obs <= 1e-6, format!("max rel {worst_obs:.2e}")),
            check("tr(Gamma rho) non-increasing without H", monotone, format!("largest step change {worst_rise:.2e}")),
        ],
    );
}

fn variance(psi: &[Complex64], a: &CMatrix) -> f64 {
    let mean = gainloss_core::numerics::inner(psi, &a.matvec(psi)).re;
    let sq = gainloss_core::numerics::inner(psi, &a.matmul(a).matvec(psi)).re;
    sq - mean * mean
}

#[test]
fn criterion_06_speed() {
    let h = 1e-5;
    let mut r = rng(6);
    let mut worst_fd: f64 = 0.0;
    for g in [0.5, 2.0] {
        let m = model(g, 0.0);
        for _ in 0..3 {
            let rho0 = random_density(2, &mut r).unwrap();
            for [minus, mid, plus] in stencils(&rho0, &m, &[0.2, 0.5, 1.0], h) {
                let d = (&psd_sqrt(plus.matrix()).unwrap() - &psd_sqrt(minus.matrix()).unwrap())
                    .scale_real(1.0 / (2.0 * h));
                let fd = d.trace_product(&d).re;
                let v = evolution_speed(&mid, &m).unwrap();
                worst_fd = worst_fd.max((fd - v).abs() / v);
            }
        }
    }

    let mut worst_const: f64 = 0.0;
    for seed in 0..3 {
        let mut r = rng(60 + seed);
        let m = GainLossModel::new(random_hermitian(3, &mut r), CMatrix::zeros(3), 0.0).unwrap();
        let rho = random_density(3, &mut r).unwrap();
        let traj = checked_integrate(&rho, 10.0, &m, &IntegratorConfig::default().with_output_interval(0.5));
        let v0 = traj.samples[0].speed.unwrap();
        for s in &traj.samples {
            worst_const = worst_const.max((s.speed.unwrap() - v0).abs());
        }
    }

    // literal pure-state expression, with the commutator ordered [Γ,H]
    let mut worst_literal: f64 = 0.0;
    let mut worst_swapped: f64 = 0.0;
    for seed in 0..10 {
        let mut r = rng(600 + seed);
        let (m, n) = if seed % 2 == 0 {
            (model(0.8, 0.0), 2)
        } else {
            let h = random_hermitian(3, &mut r);
            let g = random_hermitian(3, &mut r);
            (GainLossModel::new(h, g, 0.0).unwrap(), 3)
        };
        let psi = random_pure(n, &mut r).unwrap();
        let a = psi.amplitudes();
        let rho = density_from_pure(&psi);
        let v = evolution_speed(&rho, &m).unwrap();
        let base = 2.0 * variance(a, m.h()) + 2.0 * variance(a, m.gamma());
        let gh = m.gamma().commutator(m.h());
        let mean_gh = gainloss_core::numerics::inner(a, &gh.matvec(a));
        let literal = base + (I * mean_gh * -2.0).re;
        let swapped = base + (I * mean_gh * 2.0).re;
        worst_literal = worst_literal.max((v - literal).abs());
        worst_swapped = worst_swapped.max((v - swapped).abs());
    }
    report(
        6,
        "speed",
        &[
            check("finite differences on mixed states", worst_fd <= 1e-5, format!("max rel {worst_fd:.2e}")),
            check("constant when Gamma = 0", worst_const <= 1e-8, format!("max change {worst_const:.2e}")),
            check(
                "pure-state expression with -2i<[Gamma,H]>",
                worst_literal <= 1e-10,
                format!("max abs {worst_literal:.2e}; with -2i<[H,Gamma]> {worst_swapped:.2e}"),
            ),
        ],
    );
}

#[test]
fn criterion_07_order_parameter_curve() {
    let cfg = SweepConfig::default();
    let z = Observable::pauli_z();
    let broken: Vec<f64> = (1..=9).map(|k| 0.1 * k as f64).collect();
    let unbroken: Vec<f64> = (12..=20).map(|k| 0.1 * k as f64).collect();
    let t1 = parallel_sweep(&broken, &[0.0], &z, &cfg, 7).unwrap();
    let t2 = parallel_sweep(&unbroken, &[0.0], &z, &cfg, 7).unwrap();
    let mut worst_broken: f64 = 0.0;
    let mut all_converged = true;
    for row in &t1.rows {
        let expect = -(1.0 - row.gamma_inv * row.gamma_inv).sqrt();
        worst_broken = worst_broken.max((row.m - expect).abs());
        all_converged &= row.converged;
    }
    if t1.rows.iter().any(|r| r.m.is_nan()) {
        worst_broken = f64::INFINITY;
    }
    let worst_unbroken = t2.rows.iter().map(|r| r.m.abs()).fold(0.0, f64::max);
    all_converged &= t2.rows.iter().all(|r| r.converged);

    let m = model(2.0, 0.0);
    let mut r = rng(70);
    let a = order_parameter(&m, &z, &random_density(2, &mut r).unwrap(), 500.0, 1e-10).unwrap();
    let b = order_parameter(&m, &z, &random_density(2, &mut r).unwrap(), 500.0, 1e-10).unwrap();
    let spread = (a.m - b.m).abs();
    report(
        7,
        "order-parameter curve",
        &[
            check("broken side", worst_broken <= 1e-4, format!("max error {worst_broken:.2e}")),
            check("unbroken side", worst_unbroken <= 1e-3, format!("max |m| {worst_unbroken:.2e}")),
            check("initial-state independence", spread <= 1e-5, format!("spread {spread:.2e}")),
            check("convergence", all_converged, "every point converged".into()),
        ],
    );
}

#[test]
fn criterion_08_suppression() {
    let z = Observable::pauli_z();
    let kappas = [0.01, 0.1, 1.0, 10.0];
    let mut monotone_fail = Vec::new();
    let mut worst_residual: f64 = 0.0;
    let mut worst_relax: f64 = 0.0;
    let mut r = rng(8);
    let mut table = String::new();
    for gi in [0.3, 0.5, 0.8] {
        let mut ms = Vec::new();
        for &k in &kappas {
            let m = model(1.0 / gi, k);
            let eq = find_equilibrium(&m).unwrap();
            worst_residual = worst_residual.max(eq.residual);
            for _ in 0..3 {
                let start = random_density(2, &mut r).unwrap();
                let (relaxed, _) = relax(&m, &start, 1e-10, &tight()).unwrap();
                worst_relax = worst_relax.max(relaxed.distance(&eq.state));
            }
            ms.push(expectation(&eq.state, &z).unwrap().abs());
        }
        table.push_str(&format!(
            "{gi}: {}; ",
            ms.iter().map(|v| format!("{v:.5}")).collect::<Vec<_>>().join(" ")
        ));
        if !ms.windows(2).all(|w| w[1] < w[0]) {
            monotone_fail.push(gi);
        }
    }

    // slope jump across three-point stencils at 1/γ = 1 must shrink with the
    // stencil width for κ > 0; a kink keeps it finite
    let m_at = |gi: f64, k: f64| {
        let eq = find_equilibrium(&model(1.0 / gi, k)).unwrap();
        expectation(&eq.state, &z).unwrap()
    };
    let jump = |k: f64, d: f64| {
        let (l, c, rr) = (m_at(1.0 - d, k), m_at(1.0, k), m_at(1.0 + d, k));
        ((rr - c) / d - (c - l) / d).abs()
    };
    let mut sampled = kappas.to_vec();
    for _ in 0..4 {
        let u = rand_chacha::rand_core::RngCore::next_u64(&mut r) as f64 / u64::MAX as f64;
        sampled.push(10f64.powf(-2.0 + 3.0 * u));
    }
    let mut kink_free = true;
    let mut worst_ratio: f64 = 0.0;
    for &k in &sampled {
        let (wide, narrow) = (jump(k, 1e-2), jump(k, 1e-3));
        let ratio = narrow / wide.max(1e-12);
        worst_ratio = worst_ratio.max(ratio);
        kink_free &= narrow <= 0.5 * wide + 1e-6;
    }
    report(
        8,
        "suppression",
        &[
            check(
                "|m| strictly decreasing in kappa",
                monotone_fail.is_empty(),
                format!("fails at 1/gamma {monotone_fail:?}; |m| by kappa {table}"),
            ),
            check("Newton residual", worst_residual <= 1e-12, format!("max {worst_residual:.2e}")),
            check("relaxation agreement", worst_relax <= 1e-6, format!("max {worst_relax:.2e}")),
            check("no kink for kappa > 0", kink_free, format!("worst jump ratio {worst_ratio:.3}")),
        ],
    );
}

#[test]
fn criterion_09_state_integrity() {
    let cfg = IntegratorConfig::default().with_output_interval(0.05);
    let mut r = rng(9);
    let mut worst_trace: f64 = 0.0;
    let mut worst_eig: f64 = 0.0;
    let mut worst_drift: f64 = 0.0;
    let mut models = Vec::new();
    for g in [0.0, 0.5, 0.99, 1.0, 1.01, 2.0, 5.0] {
        for k in [0.0, 0.1, 2.0] {
            models.push(model(g, k));
        }
    }
    for _ in 0..4 {
        let h = random_hermitian(3, &mut r);
        let g = random_hermitian(3, &mut r);
        models.push(GainLossModel::new(h, g, 0.0).unwrap());
    }
    for m in &models {
        let n = m.dim();
        let starts = [
            random_density(n, &mut r).unwrap(),
            density_from_pure(&random_pure(n, &mut r).unwrap()),
            DensityMatrix::basis(n, 0).unwrap(),
        ];
        for rho in &starts {
            let traj = integrate(rho, 15.0, m, &cfg).unwrap();
            for s in &traj.samples {
                worst_trace = worst_trace.max((s.state.matrix().trace().re - 1.0).abs());
                worst_eig = worst_eig.min(s.min_eigenvalue);
                worst_drift = worst_drift.max(s.trace_drift);
            }
        }
    }

    let mut worst_purity: f64 = 0.0;
    for g in [0.5, 1.0, 2.0] {
        let m = model(g, 0.0);
        let psi = density_from_pure(&random_pure(2, &mut r).unwrap());
        for s in &checked_integrate(&psi, 20.0, &m, &cfg).samples {
            worst_purity = worst_purity.max((s.purity - 1.0).abs());
        }
    }

    let mut decreasing = true;
    for (g, k) in [(0.5, 0.1), (2.0, 0.1), (1.0, 1.0)] {
        let m = model(g, k);
        let psi = density_from_pure(&random_pure(2, &mut r).unwrap());
        decreasing &= purity_rate(&psi, &m).unwrap() < 0.0;
        let fine = IntegratorConfig::default().with_output_interval(1e-3);
        let traj = checked_integrate(&psi, 5e-3, &m, &fine);
        decreasing &= traj.samples.windows(2).all(|w| w[1].purity < w[0].purity);
    }
    report(
        9,
        "state integrity",
        &[
            check(
                "trace and positivity",
                worst_trace <= 1e-9 && worst_eig >= -1e-9,
                format!("max |tr-1| {worst_trace:.2e}, min eigenvalue {worst_eig:.2e}, max pre-repair drift {worst_drift:.2e}"),
            ),
            check("pure states stay pure", worst_purity <= 1e-8, format!("max |purity-1| {worst_purity:.2e}")),
            check("noise lowers purity at once", decreasing, "purity rate < 0 and samples decrease".into()),
        ],
    );
}

#[test]
fn criterion_10_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, threads: &str| {
        let out = dir.path().join(name);
        let status = std::process::Command::new(env!("CARGO_BIN_EXE_gainloss"))
            .args([
                "sweep", "--gamma-inv-min", "0.2", "--gamma-inv-max", "1.8", "--points", "9",
                "--kappa", "0,0.1,1", "--seed", "10", "--threads", threads, "--output",
            ])
            .arg(&out)
            .status()
            .unwrap();
        assert!(status.success());
        std::fs::read(out).unwrap()
    };
    let a = run("a.csv", "1");
    let b = run("b.csv", "1");
    let c = run("c.csv", "4");
    report(
        10,
        "determinism",
        &[
            check("repeat run", a == b, format!("{} bytes", a.len())),
            check("different thread count", a == c, "1 vs 4 threads".into()),
        ],
    );
}
