//! Order parameter, equilibria of the noisy flow, and parameter sweeps.

use alloc::vec::Vec;

use num_complex::Complex64;
use rand_core::RngCore;

use crate::dynamics::{rhs, IntegratorConfig, Stepper};
use crate::error::{Error, Result};
use crate::numerics::{solve_real, CMatrix};
use crate::random::random_density;
use crate::spectral::{analyze, expand, EigenSystem, Phase};
use crate::state::{expectation, validate_density, DensityMatrix, GainLossModel, Observable};

/// `K = σx - iγσz` with noise rate `kappa`.
pub fn standard_model(gamma: f64, kappa: f64) -> Result<GainLossModel> {
    if !gamma.is_finite() {
        return Err(Error::InvalidArgument("gamma must be finite"));
    }
    GainLossModel::new(CMatrix::pauli_x(), CMatrix::pauli_z().scale_real(gamma), kappa)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrderMethod {
    TimeAverage,
    AttractorExpectation,
    EquilibriumExpectation,
}

impl OrderMethod {
    pub fn label(self) -> &'static str {
        match self {
            OrderMethod::TimeAverage => "TimeAverage",
            OrderMethod::AttractorExpectation => "AttractorExpectation",
            OrderMethod::EquilibriumExpectation => "EquilibriumExpectation",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderParameterResult {
    pub m: f64,
    pub method: OrderMethod,
    /// Simulated time spent.
    pub t_used: f64,
    pub converged: bool,
    /// `‖rhs‖` at the end for point estimates, the last window change for
    /// time averages.
    pub residual: f64,
    /// Set when `K` is within `1e-3` of being defective; expect slow
    /// convergence.
    pub near_exceptional: bool,
}

/// `(Δλ_min / 2)² ≤ 1e-3 · max(1, max|λ|)²`, or already defective.
pub fn near_exceptional(sys: &EigenSystem) -> bool {
    if sys.phase == Phase::Exceptional {
        return true;
    }
    let l = &sys.eigenvalues;
    let mut gap = f64::INFINITY;
    for i in 0..l.len() {
        for j in i + 1..l.len() {
            gap = gap.min((l[i] - l[j]).norm());
        }
    }
    let half = 0.5 * gap;
    let scale = sys.scale();
    half * half <= 1e-3 * scale * scale
}

/// `I/n`, replaced by a random draw when some eigencomponent of `K` would
/// be missing (weight below `1e-10`).
pub fn default_initial_state<R: RngCore + ?Sized>(
    model: &GainLossModel,
    rng: &mut R,
) -> Result<DensityMatrix> {
    let n = model.dim();
    let sys = analyze(model);
    let centre = DensityMatrix::maximally_mixed(n);
    if sys.phase == Phase::Exceptional {
        return Ok(centre);
    }
    let covers = |rho: &DensityMatrix| -> Result<bool> {
        Ok(expand(rho, &sys)?.weights().iter().all(|&w| w >= 1e-10))
    };
    if covers(&centre)? {
        return Ok(centre);
    }
    for _ in 0..100 {
        let rho = random_density(n, rng)?;
        if covers(&rho)? {
            return Ok(rho);
        }
    }
    Err(Error::DegenerateExpansion)
}

/// Long-time value of `tr(Fρ_t)`.
///
/// * `κ > 0`: expectation in the equilibrium state (independent of `rho0`).
/// * `κ = 0`, unbroken phase: average over windows that are whole multiples
///   of the longest period `2π/min|E_j - E_k|`, doubled until two successive
///   averages differ by less than `tol`.
/// * otherwise: integrate until `‖rhs‖ ≤ tol` and read off `tr(Fρ_t)`.
///
/// Running out of `t_max` gives `converged = false`, not an error.
pub fn order_parameter(
    model: &GainLossModel,
    f: &Observable,
    rho0: &DensityMatrix,
    t_max: f64,
    tol: f64,
) -> Result<OrderParameterResult> {
    order_parameter_with(model, f, rho0, t_max, tol, &IntegratorConfig::default())
}

pub fn order_parameter_with(
    model: &GainLossModel,
    f: &Observable,
    rho0: &DensityMatrix,
    t_max: f64,
    tol: f64,
    cfg: &IntegratorConfig,
) -> Result<OrderParameterResult> {
    if !(t_max > 0.0) || !(tol > 0.0) {
        return Err(Error::InvalidArgument("t_max and tol must be positive"));
    }
    f.matrix().check_same_dim(model.h())?;
    let sys = analyze(model);
    let flagged = near_exceptional(&sys);

    if model.kappa() > 0.0 {
        let eq = find_equilibrium_with(model, cfg)?;
        return Ok(OrderParameterResult {
            m: expectation(&eq.state, f)?,
            method: OrderMethod::EquilibriumExpectation,
            t_used: eq.relaxation_time,
            converged: eq.newton_converged || eq.residual <= tol,
            residual: eq.residual,
            near_exceptional: flagged,
        });
    }

    if sys.phase == Phase::Unbroken {
        return time_average(model, f, rho0, &sys, t_max, tol, cfg, flagged);
    }

    let mut stepper = Stepper::new(rho0, model, *cfg)?;
    let mut residual = stepper.derivative().norm_fro();
    while residual > tol && stepper.time() < t_max {
        stepper.step(t_max)?;
        residual = stepper.derivative().norm_fro();
    }
    Ok(OrderParameterResult {
        m: expectation(&stepper.state(), f)?,
        method: OrderMethod::AttractorExpectation,
        t_used: stepper.time(),
        converged: residual <= tol,
        residual,
        near_exceptional: flagged,
    })
}

/// Samples per shortest period; the trapezoid rule over whole periods of a
/// periodic integrand converges geometrically in this number.
const SAMPLES_PER_PERIOD: f64 = 32.0;

#[allow(clippy::too_many_arguments)]
fn time_average(
    model: &GainLossModel,
    f: &Observable,
    rho0: &DensityMatrix,
    sys: &EigenSystem,
    t_max: f64,
    tol: f64,
    cfg: &IntegratorConfig,
    flagged: bool,
) -> Result<OrderParameterResult> {
    let energies = sys.energies();
    let mut min_gap = f64::INFINITY;
    let mut max_gap: f64 = 0.0;
    let tie = sys.reality_tolerance * sys.scale();
    for i in 0..energies.len() {
        for j in i + 1..energies.len() {
            let d = (energies[i] - energies[j]).abs();
            if d > tie {
                min_gap = min_gap.min(d);
                max_gap = max_gap.max(d);
            }
        }
    }
    let value0 = expectation(rho0, f)?;
    if !min_gap.is_finite() {
        // no Bohr frequencies: every state is stationary
        return Ok(OrderParameterResult {
            m: value0,
            method: OrderMethod::TimeAverage,
            t_used: 0.0,
            converged: true,
            residual: 0.0,
            near_exceptional: flagged,
        });
    }
    let period = 2.0 * core::f64::consts::PI / min_gap;
    let shortest = 2.0 * core::f64::consts::PI / max_gap;
    let dt_target = shortest / SAMPLES_PER_PERIOD;
    let per_window = libm::ceil(period / dt_target).max(1.0);
    let dt = period / per_window;

    let mut stepper = Stepper::new(rho0, model, *cfg)?;
    let mut integral = 0.0;
    let mut prev_value = value0;
    let mut k = 0u64;
    let mut advance = |stepper: &mut Stepper<'_>, until: f64, integral: &mut f64| -> Result<()> {
        loop {
            let t_next = (k + 1) as f64 * dt;
            if t_next > until * (1.0 + 1e-12) {
                return Ok(());
            }
            stepper.advance_to(t_next)?;
            let v = expectation(&stepper.state(), f)?;
            *integral += 0.5 * dt * (prev_value + v);
            prev_value = v;
            k += 1;
        }
    };

    let mut window = period;
    if window > t_max {
        return Ok(OrderParameterResult {
            m: value0,
            method: OrderMethod::TimeAverage,
            t_used: 0.0,
            converged: false,
            residual: f64::INFINITY,
            near_exceptional: flagged,
        });
    }
    advance(&mut stepper, window, &mut integral)?;
    let mut avg = integral / stepper.time();
    loop {
        if 2.0 * window > t_max {
            return Ok(OrderParameterResult {
                m: avg,
                method: OrderMethod::TimeAverage,
                t_used: stepper.time(),
                converged: false,
                residual: f64::INFINITY,
                near_exceptional: flagged,
            });
        }
        window *= 2.0;
        advance(&mut stepper, window, &mut integral)?;
        let next = integral / stepper.time();
        let change = (next - avg).abs();
        avg = next;
        if change < tol {
            return Ok(OrderParameterResult {
                m: avg,
                method: OrderMethod::TimeAverage,
                t_used: stepper.time(),
                converged: true,
                residual: change,
                near_exceptional: flagged,
            });
        }
    }
}

#[derive(Debug, Clone)]
pub struct Equilibrium {
    pub state: DensityMatrix,
    /// `‖rhs(ρ*)‖_F`
    pub residual: f64,
    /// Distance between `ρ*` and the state reached by continuing the
    /// relaxation until `‖rhs‖ ≤ 1e-10`.
    pub relaxation_distance: f64,
    pub relaxation_time: f64,
    pub newton_converged: bool,
}

/// Relaxation stops here and hands over to Newton.
const RELAX_TOL: f64 = 1e-6;
const CROSS_CHECK_TOL: f64 = 1e-10;
const NEWTON_TOL: f64 = 1e-12;
const NEWTON_MAX_ITER: usize = 30;
const FD_STEP: f64 = 1e-6;

/// Unique fixed point of the noisy flow (`κ > 0`).
pub fn find_equilibrium(model: &GainLossModel) -> Result<Equilibrium> {
    find_equilibrium_with(model, &IntegratorConfig::default())
}

pub fn find_equilibrium_with(model: &GainLossModel, cfg: &IntegratorConfig) -> Result<Equilibrium> {
    if !(model.kappa() > 0.0) {
        return Err(Error::UnsupportedModel(
            "equilibrium needs kappa > 0; use the stationary set of the spectrum instead",
        ));
    }
    let n = model.dim();
    let t_limit = relaxation_time_limit(model);
    let mut stepper = Stepper::new(&DensityMatrix::maximally_mixed(n), model, *cfg)?;
    relax_stepper(&mut stepper, RELAX_TOL, t_limit)?;
    let start = stepper.state();

    let newton = newton_refine(model, &start);
    // the default tolerances leave a residual floor near 1e-9
    let tight = cfg.with_tolerances(cfg.rel_tol.min(1e-12), cfg.abs_tol.min(1e-14));
    let mut check = Stepper::new(&start, model, tight)?;
    let checked = relax_stepper(&mut check, CROSS_CHECK_TOL, t_limit);
    let relaxed = check.state();
    let relaxed_residual = rhs(&relaxed, model)?.norm_fro();

    let (state, residual, newton_converged) = match newton {
        Some((s, r)) if r <= relaxed_residual => {
            let ok = r <= NEWTON_TOL;
            (s, r, ok)
        }
        _ => {
            checked?;
            (relaxed.clone(), relaxed_residual, false)
        }
    };
    Ok(Equilibrium {
        relaxation_distance: state.distance(&relaxed),
        state,
        residual,
        relaxation_time: stepper.time() + check.time(),
        newton_converged,
    })
}

/// Integrates from `rho0` until `‖rhs‖ ≤ tol`; returns the state reached and
/// the time taken.
pub fn relax(
    model: &GainLossModel,
    rho0: &DensityMatrix,
    tol: f64,
    cfg: &IntegratorConfig,
) -> Result<(DensityMatrix, f64)> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument("tolerance must be positive"));
    }
    let mut stepper = Stepper::new(rho0, model, *cfg)?;
    relax_stepper(&mut stepper, tol, relaxation_time_limit(model))?;
    Ok((stepper.state(), stepper.time()))
}

fn relaxation_time_limit(model: &GainLossModel) -> f64 {
    let rate = model.kappa() * model.dim() as f64;
    if rate > 0.0 {
        (200.0 / rate).max(100.0)
    } else {
        1e4
    }
}

fn relax_stepper(stepper: &mut Stepper<'_>, tol: f64, t_limit: f64) -> Result<()> {
    while stepper.derivative().norm_fro() > tol {
        if stepper.time() >= t_limit {
            return Err(Error::TooManySteps { t: stepper.time() });
        }
        stepper.step(t_limit)?;
    }
    Ok(())
}

/// Orthonormal basis of traceless Hermitian `n×n` matrices under
/// `<A,B> = tr(AB)`.
fn traceless_basis(n: usize) -> Vec<CMatrix> {
    let s = core::f64::consts::FRAC_1_SQRT_2;
    let mut basis = Vec::with_capacity(n * n - 1);
    for j in 0..n {
        for k in j + 1..n {
            let mut sym = CMatrix::zeros(n);
            sym[(j, k)] = Complex64::new(s, 0.0);
            sym[(k, j)] = Complex64::new(s, 0.0);
            basis.push(sym);
            let mut anti = CMatrix::zeros(n);
            anti[(j, k)] = Complex64::new(0.0, -s);
            anti[(k, j)] = Complex64::new(0.0, s);
            basis.push(anti);
        }
    }
    for l in 1..n {
        let norm = 1.0 / libm::sqrt((l * (l + 1)) as f64);
        let mut d = alloc::vec![0.0; n];
        for x in d.iter_mut().take(l) {
            *x = norm;
        }
        d[l] = -(l as f64) * norm;
        basis.push(CMatrix::from_real_diag(&d));
    }
    basis
}

fn newton_refine(model: &GainLossModel, start: &DensityMatrix) -> Option<(DensityMatrix, f64)> {
    let n = model.dim();
    let basis = traceless_basis(n);
    let m = basis.len();
    let centre = CMatrix::identity(n).scale_real(1.0 / n as f64);
    let compose = |x: &[f64]| -> CMatrix {
        let mut r = centre.clone();
        for (b, &xi) in basis.iter().zip(x) {
            r.axpy(Complex64::new(xi, 0.0), b);
        }
        r
    };
    let residual_map = |x: &[f64]| -> Vec<f64> {
        let d = crate::dynamics::rhs_raw(&compose(x), model);
        basis.iter().map(|b| b.trace_product(&d).re).collect()
    };
    let mut x: Vec<f64> = basis
        .iter()
        .map(|b| b.trace_product(start.matrix()).re)
        .collect();
    let norm = |v: &[f64]| libm::sqrt(v.iter().map(|a| a * a).sum::<f64>());
    let mut r = residual_map(&x);
    let mut best = (x.clone(), norm(&r));
    for _ in 0..NEWTON_MAX_ITER {
        if best.1 <= NEWTON_TOL {
            break;
        }
        let mut jac = alloc::vec![0.0; m * m];
        for c in 0..m {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[c] += FD_STEP;
            xm[c] -= FD_STEP;
            let (rp, rm) = (residual_map(&xp), residual_map(&xm));
            for row in 0..m {
                jac[row * m + c] = (rp[row] - rm[row]) / (2.0 * FD_STEP);
            }
        }
        let neg: Vec<f64> = r.iter().map(|v| -v).collect();
        let delta = solve_real(&jac, &neg).ok()?;
        for (xi, di) in x.iter_mut().zip(&delta) {
            *xi += di;
        }
        r = residual_map(&x);
        let rn = norm(&r);
        if !rn.is_finite() {
            return None;
        }
        if rn < best.1 {
            best = (x.clone(), rn);
        } else if rn > 10.0 * best.1 {
            break;
        }
    }
    let state = validate_density(compose(&best.0)).ok()?;
    // the traceless-basis norm equals the Frobenius norm of rhs
    let residual = rhs(&state, model).ok()?.norm_fro();
    Some((state, residual))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepConfig {
    pub t_max: f64,
    pub tol: f64,
    /// Half-width of the window around `γ⁻¹ = 1` that gets a longer run.
    pub critical_window: f64,
    pub critical_factor: f64,
    pub integrator: IntegratorConfig,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            t_max: 200.0,
            tol: 1e-9,
            critical_window: 0.05,
            critical_factor: 10.0,
            integrator: IntegratorConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub gamma_inv: f64,
    pub kappa: f64,
    /// `NaN` when the point failed.
    pub m: f64,
    pub phase: Phase,
    pub converged: bool,
    /// Inside the critical window or close to an exceptional point.
    pub flagged: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepTable {
    /// Grouped by `kappa` in input order, `gamma_inv` ascending within a group.
    pub rows: Vec<SweepRow>,
}

/// Checks the grids and lists the `(gamma_inv, kappa)` points in table order.
pub fn sweep_points(gamma_inv_grid: &[f64], kappas: &[f64]) -> Result<Vec<(f64, f64)>> {
    if gamma_inv_grid.is_empty() || kappas.is_empty() {
        return Err(Error::InvalidArgument("sweep grids must be nonempty"));
    }
    if gamma_inv_grid.iter().any(|&g| !(g > 0.0) || !g.is_finite()) {
        return Err(Error::InvalidArgument("gamma_inv values must be positive"));
    }
    if gamma_inv_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument("gamma_inv grid must be strictly increasing"));
    }
    if kappas.iter().any(|&k| !(k >= 0.0) || !k.is_finite()) {
        return Err(Error::InvalidArgument("kappa values must be >= 0"));
    }
    Ok(kappas
        .iter()
        .flat_map(|&k| gamma_inv_grid.iter().map(move |&g| (g, k)))
        .collect())
}

/// One sweep point started from [`default_initial_state`]; failures are
/// folded into the row.
pub fn sweep_point<R: RngCore + ?Sized>(
    gamma_inv: f64,
    kappa: f64,
    f: &Observable,
    cfg: &SweepConfig,
    rng: &mut R,
) -> SweepRow {
    let gamma = 1.0 / gamma_inv;
    let critical = (gamma_inv - 1.0).abs() < cfg.critical_window;
    let t_max = if critical {
        cfg.t_max * cfg.critical_factor
    } else {
        cfg.t_max
    };
    let failed = |phase| SweepRow {
        gamma_inv,
        kappa,
        m: f64::NAN,
        phase,
        converged: false,
        flagged: true,
    };
    let model = match standard_model(gamma, kappa) {
        Ok(m) => m,
        Err(_) => return failed(Phase::Exceptional),
    };
    let phase = analyze(&model).phase;
    let rho0 = match default_initial_state(&model, rng) {
        Ok(r) => r,
        Err(_) => return failed(phase),
    };
    match order_parameter_with(&model, f, &rho0, t_max, cfg.tol, &cfg.integrator) {
        Ok(r) => SweepRow {
            gamma_inv,
            kappa,
            m: r.m,
            phase,
            converged: r.converged,
            flagged: critical || r.near_exceptional,
        },
        Err(_) => failed(phase),
    }
}

/// Order parameter of the standard model over a `(γ⁻¹, κ)` grid.
///
/// `rng_for(i)` supplies the generator for the `i`-th point in table order,
/// so results do not depend on evaluation order.
pub fn sweep<R: RngCore>(
    gamma_inv_grid: &[f64],
    kappas: &[f64],
    f: &Observable,
    cfg: &SweepConfig,
    rng_for: impl Fn(usize) -> R,
) -> Result<SweepTable> {
    if f.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: f.dim(),
        });
    }
    let rows = sweep_points(gamma_inv_grid, kappas)?
        .into_iter()
        .enumerate()
        .map(|(i, (g, k))| sweep_point(g, k, f, cfg, &mut rng_for(i)))
        .collect();
    Ok(SweepTable { rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z() -> Observable {
        Observable::pauli_z()
    }

    fn rng(i: usize) -> rand_chacha::ChaCha8Rng {
        use rand_chacha::rand_core::SeedableRng;
        rand_chacha::ChaCha8Rng::seed_from_u64(i as u64)
    }

    #[test]
    fn basis_is_orthonormal() {
        for n in 2..5 {
            let b = traceless_basis(n);
            assert_eq!(b.len(), n * n - 1);
            for (i, a) in b.iter().enumerate() {
                assert!(a.trace().norm() < 1e-15);
                for (j, c) in b.iter().enumerate() {
                    let ip = a.trace_product(c);
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!((ip - Complex64::new(expect, 0.0)).norm() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn broken_phase_attractor_value() {
        let m = standard_model(2.0, 0.0).unwrap();
        let r = order_parameter(&m, &z(), &DensityMatrix::maximally_mixed(2), 200.0, 1e-10).unwrap();
        assert_eq!(r.method, OrderMethod::AttractorExpectation);
        assert!(r.converged);
        assert!((r.m + libm::sqrt(3.0) / 2.0).abs() < 1e-9);
    }

    #[test]
    fn unbroken_phase_average_vanishes() {
        let m = standard_model(0.5, 0.0).unwrap();
        let rho = DensityMatrix::basis(2, 0).unwrap();
        let r = order_parameter(&m, &z(), &rho, 200.0, 1e-9).unwrap();
        assert_eq!(r.method, OrderMethod::TimeAverage);
        assert!(r.converged);
        assert!(r.m.abs() < 1e-6, "{}", r.m);
    }

    #[test]
    fn equilibrium_of_hermitian_model_is_centre() {
        let m = GainLossModel::new(CMatrix::pauli_x(), CMatrix::zeros(2), 1.0).unwrap();
        let eq = find_equilibrium(&m).unwrap();
        assert!(eq.residual <= 1e-14);
        assert!(eq.state.distance(&DensityMatrix::maximally_mixed(2)) < 1e-12);
    }

    #[test]
    fn noisy_equilibrium_value() {
        let m = standard_model(2.0, 0.1).unwrap();
        let eq = find_equilibrium(&m).unwrap();
        assert!(eq.newton_converged);
        assert!(eq.residual <= 1e-12);
        assert!(eq.relaxation_distance < 1e-6);
        let v = expectation(&eq.state, &z()).unwrap();
        assert!((v + 0.84937040869737).abs() < 1e-9, "{v}");
    }

    #[test]
    fn large_noise_flattens_state() {
        let m = standard_model(1.0, 10.0).unwrap();
        let eq = find_equilibrium(&m).unwrap();
        let d = eq.state.matrix() - DensityMatrix::maximally_mixed(2).matrix();
        // operator norm; first-order estimate is ‖σz/20‖ = 0.05
        let op = crate::numerics::eig_hermitian(&d).unwrap().values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        assert!(op <= 0.05, "{op}");
    }

    #[test]
    fn noise_free_equilibrium_is_unsupported() {
        let m = standard_model(2.0, 0.0).unwrap();
        assert!(matches!(find_equilibrium(&m), Err(Error::UnsupportedModel(_))));
    }

    #[test]
    fn sweep_rows_follow_grid() {
        let cfg = SweepConfig::default();
        let t = sweep(&[0.5, 2.0], &[0.0, 1.0], &z(), &cfg, rng).unwrap();
        assert_eq!(t.rows.len(), 4);
        assert_eq!(t.rows[0].phase, Phase::Broken);
        assert_eq!(t.rows[1].phase, Phase::Unbroken);
        assert!((t.rows[0].m + libm::sqrt(0.75)).abs() < 1e-6);
        assert!(t.rows[1].m.abs() < 1e-6);
        assert!((t.rows[2].m + core::f64::consts::FRAC_1_SQRT_2).abs() < 1e-8);
        assert!(sweep(&[1.0, 0.5], &[0.0], &z(), &cfg, rng).is_err());
    }
}
