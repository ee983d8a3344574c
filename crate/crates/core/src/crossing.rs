//! Crossing forms on the numerical kernel: the parameter-derivative
//! evaluation `c_i^T K'(r0) c_j` and the boundary-trace evaluation
//! `-(1/r0) u_i'(1) u_j'(1) a(r0) w(1)`, plus regularity and signature.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::assembly::{assemble_operator, assemble_parameter_derivative, Grid, ModeLayout};
use crate::banded::SymmetricBandedMatrix;
use crate::error::{Error, Result};
use crate::inertia::{kernel_basis, KernelBasis};
use crate::problem::{AngularMode, Problem};

/// Default relative threshold below which a form eigenvalue counts as zero.
pub const DEFAULT_REGULARITY_TAU: f64 = 1e-6;
/// Relative Frobenius distance between the two evaluations that is still
/// considered agreement.
pub const FORM_AGREEMENT_TOL: f64 = 1e-2;
/// `|u'(1)|` below this fraction of `max |u|` marks a kernel vector suspect.
pub const KERNEL_SUSPECT_RATIO: f64 = 1e-6;

pub fn crossing_form_derivative(k_dot: &SymmetricBandedMatrix, kernel: &KernelBasis) -> Result<DMatrix<f64>> {
    if kernel.is_empty() {
        return Err(Error::NoCrossing(f64::NAN));
    }
    let m = kernel.dim();
    let images: Vec<Vec<f64>> = kernel.vectors.iter().map(|c| k_dot.matvec(c)).collect();
    let mut form = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..=i {
            let v: f64 = kernel.vectors[i].iter().zip(&images[j]).map(|(a, b)| a * b).sum();
            form[(i, j)] = v;
            form[(j, i)] = v;
        }
    }
    Ok(form)
}

/// One-sided second-order estimate of u'(1) from nodal values.
pub fn boundary_slope(nodal: &[f64], h: f64) -> f64 {
    let n = nodal.len();
    (3.0 * nodal[n - 1] - 4.0 * nodal[n - 2] + nodal[n - 3]) / (2.0 * h)
}

/// Boundary-trace form and whether any kernel vector has a vanishing
/// normal derivative.
pub fn crossing_form_boundary(
    problem: &Problem,
    mode: Option<AngularMode>,
    r0: f64,
    kernel: &KernelBasis,
    grid: &Grid,
) -> Result<(DMatrix<f64>, bool)> {
    if kernel.is_empty() {
        return Err(Error::NoCrossing(r0));
    }
    let layout = ModeLayout::for_mode(problem, mode)?;
    let mut suspect = false;
    let slopes: Vec<f64> = kernel
        .vectors
        .iter()
        .map(|c| {
            let nodal = layout.nodal_values(grid, c);
            let slope = boundary_slope(&nodal, grid.h());
            let peak = nodal.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
            if slope.abs() < KERNEL_SUSPECT_RATIO * peak {
                suspect = true;
            }
            slope
        })
        .collect();
    let scale = -problem.a().value(r0) * layout.weight(1.0) / r0;
    let m = slopes.len();
    Ok((DMatrix::from_fn(m, m, |i, j| scale * slopes[i] * slopes[j]), suspect))
}

fn sorted_eigenvalues(form: &DMatrix<f64>) -> Vec<f64> {
    let mut eig: Vec<f64> = form.clone().symmetric_eigenvalues().iter().copied().collect();
    eig.sort_by(f64::total_cmp);
    eig
}

/// `(n_pos - n_neg, regular)` counting only eigenvalues above τ·‖form‖.
pub fn crossing_signature(form: &DMatrix<f64>, tau: f64) -> (i64, bool) {
    let eig = sorted_eigenvalues(form);
    let norm = eig.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
    let cut = tau * norm;
    let pos = eig.iter().filter(|&&v| v > cut).count() as i64;
    let neg = eig.iter().filter(|&&v| v < -cut).count() as i64;
    let regular = norm > 0.0 && eig.iter().all(|v| v.abs() > cut);
    (pos - neg, regular)
}

/// Kernel found in one angular mode at a crossing.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeKernel {
    pub nu: Option<usize>,
    pub weight: usize,
    pub kernel_dim: usize,
    pub gamma_derivative: Vec<Vec<f64>>,
    pub gamma_boundary: Vec<Vec<f64>>,
    pub boundary_slopes_suspect: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossingReport {
    pub r0: f64,
    pub multiplicity: usize,
    pub modes: Vec<ModeKernel>,
    pub signature: i64,
    pub regular: bool,
    /// Smallest |eigenvalue| of the derivative form over its norm.
    pub condition: f64,
    pub negative_definite: bool,
    pub gamma_min_eig: f64,
    pub gamma_max_eig: f64,
    pub forms_rel_disagreement: f64,
    pub kernel_suspect: bool,
    /// Half-width of a punctured neighbourhood checked to be crossing-free.
    pub isolation_delta: Option<f64>,
    pub flags: Vec<String>,
}

impl CrossingReport {
    pub fn forms_agree(&self) -> bool {
        self.forms_rel_disagreement <= FORM_AGREEMENT_TOL
    }

    pub fn signature_matches(&self) -> bool {
        self.signature == -(self.multiplicity as i64)
    }

    /// Fails when a form eigenvalue is non-negative at a regular crossing.
    pub fn check(&self) -> Result<()> {
        if self.regular && !self.negative_definite {
            return Err(Error::TheoremViolation { r0: self.r0, eigenvalue: self.gamma_max_eig });
        }
        Ok(())
    }
}

/// Full crossing form over all listed modes, each mode block repeated by
/// its angular weight.
fn block_diagonal(blocks: &[(usize, DMatrix<f64>)]) -> DMatrix<f64> {
    let size: usize = blocks.iter().map(|(w, b)| w * b.nrows()).sum();
    let mut out = DMatrix::zeros(size, size);
    let mut at = 0;
    for (w, b) in blocks {
        for _ in 0..*w {
            out.view_mut((at, at), (b.nrows(), b.ncols())).copy_from(b);
            at += b.nrows();
        }
    }
    out
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

/// Kernel of one mode at r0.
pub fn mode_kernel(
    problem: &Problem,
    mode: Option<AngularMode>,
    r0: f64,
    grid: &Grid,
    tau: f64,
) -> Result<KernelBasis> {
    kernel_basis(&assemble_operator(problem, mode, r0, grid)?, tau)
}

/// Certifies the crossing at r0 across `modes`: both form evaluations,
/// signature, regularity and negative definiteness.
pub fn certify_conjugate_instant(
    problem: &Problem,
    modes: &[Option<AngularMode>],
    r0: f64,
    grid: &Grid,
    kernel_tau: f64,
    regularity_tau: f64,
) -> Result<CrossingReport> {
    let mut blocks_der = Vec::new();
    let mut blocks_bdy = Vec::new();
    let mut mode_reports = Vec::new();
    let mut suspect = false;
    for &mode in modes {
        let kernel = mode_kernel(problem, mode, r0, grid, kernel_tau)?;
        if kernel.is_empty() {
            continue;
        }
        let k_dot = assemble_parameter_derivative(problem, mode, r0, grid)?;
        let der = crossing_form_derivative(&k_dot, &kernel)?;
        let (bdy, s) = crossing_form_boundary(problem, mode, r0, &kernel, grid)?;
        suspect |= s;
        let weight = mode.map_or(1, |m| m.multiplicity_weight);
        mode_reports.push(ModeKernel {
            nu: mode.map(|m| m.nu),
            weight,
            kernel_dim: kernel.dim(),
            gamma_derivative: rows(&der),
            gamma_boundary: rows(&bdy),
            boundary_slopes_suspect: s,
        });
        blocks_der.push((weight, der));
        blocks_bdy.push((weight, bdy));
    }
    if mode_reports.is_empty() {
        return Err(Error::NoCrossing(r0));
    }
    let der = block_diagonal(&blocks_der);
    let bdy = block_diagonal(&blocks_bdy);
    let multiplicity = der.nrows();
    let (signature, regular) = crossing_signature(&der, regularity_tau);
    let eig = sorted_eigenvalues(&der);
    let norm = eig.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
    let min_abs = eig.iter().fold(f64::INFINITY, |m: f64, v| m.min(v.abs()));
    let condition = if norm > 0.0 { min_abs / norm } else { 0.0 };
    let gamma_min_eig = eig[0];
    let gamma_max_eig = eig[eig.len() - 1];
    let der_norm = der.norm();
    let forms_rel_disagreement = if der_norm > 0.0 { (&der - &bdy).norm() / der_norm } else { f64::INFINITY };

    let mut flags = Vec::new();
    if forms_rel_disagreement > FORM_AGREEMENT_TOL {
        flags.push("FORM_DISAGREEMENT".to_string());
    }
    if suspect {
        flags.push("KERNEL_SUSPECT".to_string());
    }
    if !regular {
        flags.push("DEGENERATE_CROSSING".to_string());
    }
    let negative_definite = gamma_max_eig < 0.0;
    if regular && !negative_definite {
        flags.push("THEOREM_VIOLATION".to_string());
    }
    Ok(CrossingReport {
        r0,
        multiplicity,
        modes: mode_reports,
        signature,
        regular,
        condition,
        negative_definite,
        gamma_min_eig,
        gamma_max_eig,
        forms_rel_disagreement,
        kernel_suspect: suspect,
        isolation_delta: None,
        flags,
    })
}
