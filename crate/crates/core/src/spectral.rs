//! Eigenstructure of `K = H - iΓ`: phase, biorthogonal expansions,
//! eigenbasis evolution, stationary states and attractors.

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::dynamics::rhs;
use crate::error::{Error, Result};
use crate::numerics::{eig_general, eigen_scale, inner, CMatrix, EigenDecomposition};
use crate::state::{validate_density, DensityMatrix, GainLossModel};
use crate::tolerance::Tolerances;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    /// All eigenvalues real.
    Unbroken,
    /// Some eigenvalue has a non-vanishing imaginary part.
    Broken,
    /// `K` is defective (or numerically indistinguishable from it).
    Exceptional,
}

impl Phase {
    pub fn label(self) -> &'static str {
        match self {
            Phase::Unbroken => "Unbroken",
            Phase::Broken => "Broken",
            Phase::Exceptional => "Exceptional",
        }
    }
}

impl core::fmt::Display for Phase {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone)]
pub struct EigenSystem {
    /// `λ_j = E_j - iγ_j`, ascending by real part.
    pub eigenvalues: Vec<Complex64>,
    /// Unit-norm right eigenvectors `φ_j` as columns.
    pub right: CMatrix,
    /// Dual vectors `χ_j` with `<χ_j|φ_k> = δ_jk`.
    pub left: CMatrix,
    /// `S_kj = <φ_k|φ_j>`.
    pub overlap: CMatrix,
    pub phase: Phase,
    pub reality_tolerance: f64,
    pub condition: f64,
}

impl EigenSystem {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn energies(&self) -> Vec<f64> {
        self.eigenvalues.iter().map(|l| l.re).collect()
    }

    /// `γ_j = -Im λ_j`
    pub fn decay_rates(&self) -> Vec<f64> {
        self.eigenvalues.iter().map(|l| -l.im).collect()
    }

    /// `max(1, max_j |λ_j|)`
    pub fn scale(&self) -> f64 {
        eigen_scale(self.eigenvalues.iter().copied())
    }

    pub fn is_real(&self, j: usize) -> bool {
        self.eigenvalues[j].im.abs() <= self.reality_tolerance * self.scale()
    }

    pub fn real_count(&self) -> usize {
        (0..self.dim()).filter(|&j| self.is_real(j)).count()
    }

    pub fn eigenvector(&self, j: usize) -> Vec<Complex64> {
        self.right.column(j)
    }

    /// `|φ_j><φ_j|`
    pub fn projector(&self, j: usize) -> Result<DensityMatrix> {
        let v = self.right.column(j);
        validate_density(CMatrix::outer(&v, &v))
    }
}

/// Eigenanalysis of `K` with the default reality tolerance.
pub fn analyze(model: &GainLossModel) -> EigenSystem {
    analyze_with(model, Tolerances::DEFAULT.reality)
}

/// Eigenvalues are real when `|Im λ| ≤ reality_tol · max(1, max|λ|)`.
///
/// Defective generators are reported as [`Phase::Exceptional`] with the
/// partial decomposition, as are numerically coalesced eigenvalues of a
/// non-normal `K`.
pub fn analyze_with(model: &GainLossModel, reality_tol: f64) -> EigenSystem {
    let k = model.k();
    let (dec, defective) = match eig_general(&k) {
        Ok(d) => (d, false),
        Err(Error::Defective { partial, .. }) => (*partial, true),
        // Schur iteration failure on a finite matrix; treat as defective
        Err(_) => (fallback_decomposition(k.dim()), true),
    };
    let EigenDecomposition {
        eigenvalues,
        right,
        left,
        condition,
    } = dec;
    let overlap = right.adjoint().matmul(&right);
    let scale = eigen_scale(eigenvalues.iter().copied());

    let phase = if defective || (collides(&eigenvalues, scale) && !is_normal(&k)) {
        Phase::Exceptional
    } else if eigenvalues.iter().all(|l| l.im.abs() <= reality_tol * scale) {
        Phase::Unbroken
    } else {
        Phase::Broken
    };
    EigenSystem {
        eigenvalues,
        right,
        left,
        overlap,
        phase,
        reality_tolerance: reality_tol,
        condition,
    }
}

fn fallback_decomposition(n: usize) -> EigenDecomposition {
    EigenDecomposition {
        eigenvalues: alloc::vec![Complex64::new(f64::NAN, f64::NAN); n],
        right: CMatrix::zeros(n),
        left: CMatrix::zeros(n),
        condition: f64::INFINITY,
    }
}

fn collides(values: &[Complex64], scale: f64) -> bool {
    let tol = Tolerances::DEFAULT.collision * scale;
    values
        .iter()
        .enumerate()
        .any(|(i, a)| values[i + 1..].iter().any(|b| (a - b).norm() < tol))
}

fn is_normal(k: &CMatrix) -> bool {
    let kd = k.adjoint();
    let defect = (&k.matmul(&kd) - &kd.matmul(k)).norm_fro();
    let nk = k.norm_fro();
    defect <= 1e-12 * (nk * nk).max(1.0)
}

/// Coefficients `ρ_jk` of `ρ = Σ ρ_jk |φ_j><φ_k|`.
#[derive(Debug, Clone)]
pub struct EigenExpansion {
    pub coefficients: CMatrix,
    pub system: EigenSystem,
}

impl EigenExpansion {
    /// `Σ_jk ρ_jk <φ_k|φ_j>`
    pub fn trace(&self) -> Complex64 {
        self.coefficients.trace_product(&self.system.overlap)
    }

    /// Diagonal weights `ρ_jj` (real and non-negative for valid states).
    pub fn weights(&self) -> Vec<f64> {
        self.coefficients.diagonal().iter().map(|z| z.re).collect()
    }
}

fn require_diagonalizable(sys: &EigenSystem) -> Result<()> {
    if sys.phase == Phase::Exceptional {
        return Err(Error::UnsupportedModel(
            "eigenbasis operations are undefined at an exceptional point",
        ));
    }
    if !(sys.condition <= Tolerances::DEFAULT.defective_condition) {
        return Err(Error::IllConditioned {
            condition: sys.condition,
        });
    }
    Ok(())
}

/// `ρ_jk = <χ_j|ρ|χ_k>`
pub fn expand(rho: &DensityMatrix, sys: &EigenSystem) -> Result<EigenExpansion> {
    require_diagonalizable(sys)?;
    rho.matrix().check_same_dim(&sys.right)?;
    let chi = &sys.left;
    let coefficients = chi.adjoint().matmul(rho.matrix()).matmul(chi);
    Ok(EigenExpansion {
        coefficients,
        system: sys.clone(),
    })
}

/// `Σ ρ_jk |φ_j><φ_k|`, without validation.
pub fn reconstruct(exp: &EigenExpansion) -> CMatrix {
    let phi = &exp.system.right;
    phi.matmul(&exp.coefficients).matmul(&phi.adjoint())
}

/// `ρ_t ∝ Σ ρ_jk e^{-i(λ_j - conj λ_k)t} |φ_j><φ_k|`, normalised to unit trace.
///
/// The common factor `e^{2μt}` with `μ` the largest `Im λ` present is divided
/// out before summing, so long times do not overflow.
pub fn evolve_eigenbasis(exp: &EigenExpansion, t: f64) -> Result<DensityMatrix> {
    require_diagonalizable(&exp.system)?;
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::InvalidArgument("evolution time must be finite and >= 0"));
    }
    let lambda = &exp.system.eigenvalues;
    let c = &exp.coefficients;
    let n = lambda.len();
    let floor = 1e-300;
    let mut mu = f64::NEG_INFINITY;
    for j in 0..n {
        for k in 0..n {
            if c[(j, k)].norm() > floor {
                mu = mu.max(0.5 * (lambda[j].im + lambda[k].im));
            }
        }
    }
    if !mu.is_finite() {
        return Err(Error::DegenerateExpansion);
    }
    let mut evolved = CMatrix::zeros(n);
    for j in 0..n {
        for k in 0..n {
            let w = lambda[j] - lambda[k].conj();
            let exponent = Complex64::new(w.im * t - 2.0 * mu * t, -w.re * t);
            evolved[(j, k)] = c[(j, k)] * exponent.exp();
        }
    }
    let phi = &exp.system.right;
    let sigma = phi.matmul(&evolved).matmul(&phi.adjoint());
    let tr = sigma.trace().re;
    if !(tr >= floor) || !tr.is_finite() {
        return Err(Error::NormOutOfRange { norm_factor: tr });
    }
    validate_density(sigma.hermitian_part().scale_real(1.0 / tr))
}

#[derive(Debug, Clone)]
pub struct StationarySet {
    /// Every eigenprojector `|φ_j><φ_j|` that passed the residual check.
    pub pure_fixed_points: Vec<DensityMatrix>,
    /// Eigenprojectors with real eigenvalue; their convex hull is stationary.
    pub mixed_generators: Vec<DensityMatrix>,
    /// Eigenvalue index of each mixed generator.
    pub generator_indices: Vec<usize>,
    /// Number of real eigenvalues.
    pub real_count: usize,
    /// Largest `‖rhs‖` over the listed states.
    pub max_residual: f64,
}

impl StationarySet {
    /// Convex combination of the mixed generators.
    pub fn mixture(&self, weights: &[f64]) -> Result<DensityMatrix> {
        DensityMatrix::mixture(weights, &self.mixed_generators)
    }
}

/// Eigenprojectors of `K`, each confirmed by direct evaluation of the flow
/// (`‖rhs‖ ≤ 1e-10·max(1, ‖K‖)`); mixed generators must also satisfy
/// `|tr(Γρ)| ≤ 1e-10·max(1, ‖Γ‖)`.
pub fn stationary_set(sys: &EigenSystem, model: &GainLossModel) -> Result<StationarySet> {
    let free = model.with_kappa(0.0)?;
    let tol = 1e-10 * model.k().norm_fro().max(1.0);
    let gtol = 1e-10 * model.gamma().norm_fro().max(1.0);
    let mut set = StationarySet {
        pure_fixed_points: Vec::new(),
        mixed_generators: Vec::new(),
        generator_indices: Vec::new(),
        real_count: 0,
        max_residual: 0.0,
    };
    if sys.phase == Phase::Exceptional {
        // the surviving eigenvector directions are still fixed points
        let mut seen: Vec<Vec<Complex64>> = Vec::new();
        for j in 0..sys.dim() {
            let v = sys.eigenvector(j);
            if !v.iter().all(|z| z.is_finite()) || seen.iter().any(|u| inner(u, &v).norm() > 1.0 - 1e-6) {
                continue;
            }
            let p = sys.projector(j)?;
            let r = rhs(&p, &free)?.norm_fro();
            if r <= tol {
                set.max_residual = set.max_residual.max(r);
                set.pure_fixed_points.push(p);
                seen.push(v);
            }
        }
        return Ok(set);
    }
    for j in 0..sys.dim() {
        let p = sys.projector(j)?;
        let r = rhs(&p, &free)?.norm_fro();
        if r > tol {
            continue;
        }
        set.max_residual = set.max_residual.max(r);
        if sys.is_real(j) {
            set.real_count += 1;
            let mean_gamma = model.gamma().trace_product(p.matrix()).re;
            if mean_gamma.abs() <= gtol {
                set.mixed_generators.push(p.clone());
                set.generator_indices.push(j);
            }
        }
        set.pure_fixed_points.push(p);
    }
    Ok(set)
}

#[derive(Debug, Clone)]
pub enum Attractor {
    /// Unique slowest-decaying component.
    Point {
        index: usize,
        projector: DensityMatrix,
        /// Difference to the next decay rate present; `None` if the state
        /// has no other component.
        decay_gap: Option<f64>,
    },
    /// Several components share the slowest decay rate; the motion inside
    /// their span does not settle to a point.
    Subspace {
        indices: Vec<usize>,
        decay_rate: f64,
        decay_gap: Option<f64>,
    },
}

impl Attractor {
    pub fn projector(&self) -> Option<&DensityMatrix> {
        match self {
            Attractor::Point { projector, .. } => Some(projector),
            Attractor::Subspace { .. } => None,
        }
    }

    pub fn decay_gap(&self) -> Option<f64> {
        match self {
            Attractor::Point { decay_gap, .. } | Attractor::Subspace { decay_gap, .. } => *decay_gap,
        }
    }
}

/// Long-time limit of the noise-free flow started from the expanded state:
/// the component with the smallest `γ_j = -Im λ_j` among those present.
pub fn predict_attractor(exp: &EigenExpansion) -> Result<Attractor> {
    require_diagonalizable(&exp.system)?;
    let sys = &exp.system;
    let rates = sys.decay_rates();
    let present: Vec<usize> = exp
        .weights()
        .iter()
        .enumerate()
        .filter(|(_, &w)| w > 1e-12)
        .map(|(j, _)| j)
        .collect();
    if present.is_empty() {
        return Err(Error::DegenerateExpansion);
    }
    let min = present.iter().map(|&j| rates[j]).fold(f64::INFINITY, f64::min);
    let tie = sys.reality_tolerance * sys.scale();
    let (slowest, rest): (Vec<usize>, Vec<usize>) =
        present.iter().partition(|&&j| rates[j] - min <= tie);
    let decay_gap = rest
        .iter()
        .map(|&j| rates[j] - min)
        .fold(None, |acc: Option<f64>, g| Some(acc.map_or(g, |a| a.min(g))));
    if slowest.len() == 1 {
        let index = slowest[0];
        Ok(Attractor::Point {
            index,
            projector: sys.projector(index)?,
            decay_gap,
        })
    } else {
        Ok(Attractor::Subspace {
            indices: slowest,
            decay_rate: min,
            decay_gap,
        })
    }
}
