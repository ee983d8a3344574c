//! Locating conjugate instants in (r_min, 1), certifying them, and checking
//! the Smale identity μ₋ = Σ m(r) together with the count bound on
//! bifurcation instants.

use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::assembly::{assemble_operator, Grid};
use crate::crossing::{certify_conjugate_instant, CrossingReport, DEFAULT_REGULARITY_TAU};
use crate::error::{Error, Result};
use crate::inertia::{kernel_basis, mode_negative_count, morse_profile, DEFAULT_KERNEL_TAU};
use crate::problem::{AngularMode, Problem};

pub const MIN_R_SAMPLES: usize = 64;
pub const DEFAULT_R_SAMPLES: usize = 200;
pub const DEFAULT_REFINE_TOL: f64 = 1e-10;
pub const DEFAULT_R_MIN: f64 = 1e-3;
const MAX_DENSITY_DOUBLINGS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanOptions {
    pub r_samples: usize,
    pub refine_tol: f64,
    pub r_min: f64,
    pub kernel_tau: f64,
    pub regularity_tau: f64,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            r_samples: DEFAULT_R_SAMPLES,
            refine_tol: DEFAULT_REFINE_TOL,
            r_min: DEFAULT_R_MIN,
            kernel_tau: DEFAULT_KERNEL_TAU,
            regularity_tau: DEFAULT_REGULARITY_TAU,
        }
    }
}

impl ScanOptions {
    pub fn check(&self) -> Result<()> {
        if self.r_samples < MIN_R_SAMPLES {
            return Err(Error::Config(format!("scan needs at least {MIN_R_SAMPLES} samples, got {}", self.r_samples)));
        }
        if !(self.refine_tol > 0.0 && self.refine_tol < 1e-2) {
            return Err(Error::Config(format!("refine_tol {} outside (0, 1e-2)", self.refine_tol)));
        }
        if !(self.r_min > 0.0 && self.r_min < 1.0) {
            return Err(Error::Config(format!("r_min {} outside (0, 1)", self.r_min)));
        }
        if !(self.kernel_tau > 0.0 && self.kernel_tau <= 1e-3) {
            return Err(Error::Config(format!("kernel tau {} outside (0, 1e-3]", self.kernel_tau)));
        }
        if !(self.regularity_tau > 0.0 && self.regularity_tau <= 1e-2) {
            return Err(Error::Config(format!("regularity tau {} outside (0, 1e-2]", self.regularity_tau)));
        }
        Ok(())
    }

    fn sample_radius(&self, i: usize, samples: usize) -> f64 {
        if i + 1 == samples {
            1.0
        } else {
            self.r_min + (1.0 - self.r_min) * i as f64 / (samples - 1) as f64
        }
    }
}

/// A located conjugate instant with the modes whose kernels meet there.
#[derive(Debug, Clone, PartialEq)]
pub struct ConjugateInstant {
    pub r0: f64,
    /// `(mode, number of eigenvalues crossing zero in that mode)`.
    pub modes: Vec<(Option<AngularMode>, usize)>,
}

impl ConjugateInstant {
    pub fn multiplicity(&self) -> usize {
        self.modes.iter().map(|(m, c)| c * m.map_or(1, |m| m.multiplicity_weight)).sum()
    }
}

/// Raw scan output before certification.
#[derive(Debug, Clone, PartialEq)]
pub struct ConjugateScan {
    pub instants: Vec<ConjugateInstant>,
    pub morse_index_at_1: usize,
    pub morse_at_1_by_mode: Vec<(Option<AngularMode>, usize)>,
    /// Weighted Morse index at each scan radius.
    pub profile: Vec<(f64, usize)>,
    pub kernel_at_1: bool,
    pub warnings: Vec<String>,
}

impl ConjugateScan {
    pub fn pairs(&self) -> Vec<(f64, usize)> {
        self.instants.iter().map(|c| (c.r0, c.multiplicity())).collect()
    }
}

fn weight(mode: Option<AngularMode>) -> usize {
    mode.map_or(1, |m| m.multiplicity_weight)
}

/// Bisects for the radius where the count of mode eigenvalues below zero
/// reaches `level`, within `[lo, hi]`.
fn bisect_level(
    problem: &Problem,
    mode: Option<AngularMode>,
    grid: &Grid,
    level: usize,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
) -> Result<f64> {
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if mode_negative_count(problem, mode, mid, grid)? >= level {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Raises sample density inside a bracket whose count jumps by more than
/// one, returning sub-brackets `(lo, hi, count_lo, count_hi)`.
fn split_bracket(
    problem: &Problem,
    mode: Option<AngularMode>,
    grid: &Grid,
    lo: f64,
    hi: f64,
    c_lo: usize,
    c_hi: usize,
) -> Result<Vec<(f64, f64, usize, usize)>> {
    let mut brackets = vec![(lo, hi, c_lo, c_hi)];
    for _ in 0..MAX_DENSITY_DOUBLINGS {
        if brackets.iter().all(|b| b.3 - b.2 <= 1) {
            break;
        }
        let mut next = Vec::new();
        for (a, b, ca, cb) in brackets {
            if cb - ca <= 1 {
                next.push((a, b, ca, cb));
                continue;
            }
            let mid = 0.5 * (a + b);
            let cm = mode_negative_count(problem, mode, mid, grid)?;
            if cm < ca || cm > cb {
                return Err(Error::BracketAmbiguous { lo: a, hi: b });
            }
            if cm > ca {
                next.push((a, mid, ca, cm));
            }
            if cb > cm {
                next.push((mid, b, cm, cb));
            }
        }
        brackets = next;
    }
    Ok(brackets)
}

// (radius, mode, eigenvalues crossing there)
type ModeRoot = (f64, Option<AngularMode>, usize);

fn scan_mode(
    problem: &Problem,
    mode: Option<AngularMode>,
    grid: &Grid,
    opts: &ScanOptions,
) -> Result<(Vec<usize>, Vec<ModeRoot>)> {
    let samples = opts.r_samples;
    let counts: Vec<usize> = (0..samples)
        .into_par_iter()
        .map(|i| mode_negative_count(problem, mode, opts.sample_radius(i, samples), grid))
        .collect::<Result<_>>()?;
    let mut brackets = Vec::new();
    for i in 0..samples - 1 {
        let (c0, c1) = (counts[i], counts[i + 1]);
        if c1 < c0 {
            // an eigenvalue rising through zero: the crossing form is not negative
            return Err(Error::TheoremViolation { r0: opts.sample_radius(i, samples), eigenvalue: f64::NAN });
        }
        if c1 > c0 {
            let (lo, hi) = (opts.sample_radius(i, samples), opts.sample_radius(i + 1, samples));
            brackets.extend(split_bracket(problem, mode, grid, lo, hi, c0, c1)?);
        }
    }
    let levels: Vec<(f64, f64, usize)> =
        brackets.iter().flat_map(|&(lo, hi, c0, c1)| (c0 + 1..=c1).map(move |level| (lo, hi, level))).collect();
    let roots: Vec<ModeRoot> = levels
        .par_iter()
        .map(|&(lo, hi, level)| Ok((bisect_level(problem, mode, grid, level, lo, hi, opts.refine_tol)?, mode, 1)))
        .collect::<Result<_>>()?;
    Ok((counts, roots))
}

/// Locates every conjugate instant in (r_min, 1) with its total
/// multiplicity, merging cross-mode coincidences within `refine_tol`.
pub fn scan_conjugate_instants(problem: &Problem, grid: &Grid, opts: &ScanOptions) -> Result<ConjugateScan> {
    opts.check()?;
    let at_one = morse_profile(problem, 1.0, grid)?;
    let mut warnings = Vec::new();

    let kernel_at_1 = at_one
        .per_mode
        .par_iter()
        .map(|(mode, _)| Ok(!kernel_basis(&assemble_operator(problem, *mode, 1.0, grid)?, opts.kernel_tau)?.is_empty()))
        .collect::<Result<Vec<bool>>>()?
        .into_iter()
        .any(|k| k);
    if kernel_at_1 {
        warnings.push(format!(
            "{}: the operator at r = 1 has a kernel; r = 1 is excluded from the sum",
            Error::M1Nonzero(0).code()
        ));
    }

    let active = at_one.active_modes();
    let per_mode: Vec<(Option<AngularMode>, Vec<usize>, Vec<ModeRoot>)> = active
        .par_iter()
        .map(|&mode| {
            let (counts, roots) = scan_mode(problem, mode, grid, opts)?;
            Ok((mode, counts, roots))
        })
        .collect::<Result<_>>()?;

    let samples = opts.r_samples;
    let mut profile: Vec<(f64, usize)> = (0..samples).map(|i| (opts.sample_radius(i, samples), 0)).collect();
    let mut roots = Vec::new();
    for (mode, counts, mode_roots) in &per_mode {
        if counts[0] > 0 {
            warnings.push(format!(
                "mode {}: {} negative eigenvalue(s) already at r_min = {}",
                mode.map_or("-".to_string(), |m| m.nu.to_string()),
                counts[0],
                opts.r_min
            ));
        }
        for (slot, c) in profile.iter_mut().zip(counts) {
            slot.1 += c * weight(*mode);
        }
        roots.extend(mode_roots.iter().copied());
    }
    roots.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.map(|m| m.nu).cmp(&b.1.map(|m| m.nu))));

    let mut instants: Vec<ConjugateInstant> = Vec::new();
    for (r, mode, c) in roots {
        if kernel_at_1 && 1.0 - r <= opts.refine_tol {
            continue;
        }
        match instants.last_mut() {
            Some(last) if r - last.r0 <= opts.refine_tol => match last.modes.iter_mut().find(|(m, _)| *m == mode) {
                Some(entry) => entry.1 += c,
                None => last.modes.push((mode, c)),
            },
            _ => instants.push(ConjugateInstant { r0: r, modes: vec![(mode, c)] }),
        }
    }

    // levels of one mode landing on the same radius must be a genuine
    // multi-dimensional kernel
    for inst in &instants {
        for &(mode, c) in &inst.modes {
            if c > 1 {
                let dim = kernel_basis(&assemble_operator(problem, mode, inst.r0, grid)?, opts.kernel_tau)?.dim();
                if dim != c {
                    return Err(Error::BracketAmbiguous {
                        lo: inst.r0 - opts.refine_tol,
                        hi: inst.r0 + opts.refine_tol,
                    });
                }
            }
        }
    }

    Ok(ConjugateScan {
        instants,
        morse_index_at_1: at_one.total,
        morse_at_1_by_mode: at_one.per_mode,
        profile,
        kernel_at_1,
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeCount {
    pub nu: Option<usize>,
    pub weight: usize,
    pub negative_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanReport {
    pub problem_digest: String,
    pub grid_nodes: usize,
    pub options: ScanOptions,
    pub crossings: Vec<CrossingReport>,
    pub morse_index_at_1: usize,
    pub morse_at_1_by_mode: Vec<ModeCount>,
    pub smale_lhs: usize,
    pub smale_rhs: usize,
    pub smale_holds: bool,
    /// Morse index is constant between crossings and jumps by m(r0).
    pub stepwise_holds: bool,
    /// `(r, weighted Morse index)` wherever the index changes, starting at r_min.
    pub morse_steps: Vec<(f64, usize)>,
    pub bifurcation_lower_bound: usize,
    pub bound_satisfied: bool,
    pub warnings: Vec<String>,
}

impl ScanReport {
    pub fn crossing_pairs(&self) -> Vec<(f64, usize)> {
        self.crossings.iter().map(|c| (c.r0, c.multiplicity)).collect()
    }

    /// First identity violation, theorem violations before Smale ones.
    pub fn check(&self) -> Result<()> {
        for c in &self.crossings {
            c.check()?;
        }
        if !self.smale_holds || !self.stepwise_holds {
            return Err(Error::SmaleViolation {
                lhs: self.smale_lhs,
                rhs: self.smale_rhs,
                profile: self.morse_steps.clone(),
            });
        }
        Ok(())
    }
}

pub fn problem_digest(problem: &Problem) -> String {
    hex::encode(Sha256::digest(problem.describe().as_bytes()))
}

/// floor(μ₋ / max m) over regular crossings; 0 without crossings.
pub fn bifurcation_lower_bound(morse_index: usize, crossings: &[CrossingReport]) -> usize {
    let max_m = crossings.iter().filter(|c| c.regular).map(|c| c.multiplicity).max().unwrap_or(0);
    if morse_index == 0 || max_m == 0 {
        0
    } else {
        morse_index / max_m
    }
}

/// Largest δ (limited by the scan spacing) for which the kernel is empty at
/// r0 ± δ·2^-j, j = 0..4, in every mode of the crossing.
fn isolation_delta(
    problem: &Problem,
    modes: &[Option<AngularMode>],
    r0: f64,
    grid: &Grid,
    opts: &ScanOptions,
) -> Result<Option<f64>> {
    let spacing = (1.0 - opts.r_min) / (opts.r_samples - 1) as f64;
    let mut delta = spacing.min(r0 - opts.r_min).min(1.0 - r0);
    'outer: for _ in 0..20 {
        for j in 0..5 {
            let d = delta / f64::powi(2.0, j);
            for r in [r0 - d, r0 + d] {
                for &mode in modes {
                    let k = kernel_basis(&assemble_operator(problem, mode, r, grid)?, opts.kernel_tau)?;
                    if !k.is_empty() {
                        delta *= 0.5;
                        continue 'outer;
                    }
                }
            }
        }
        return Ok(Some(delta));
    }
    Ok(None)
}

/// Certifies every located instant and assembles the report. Identity
/// failures are recorded in the report rather than returned.
pub fn build_scan_report(
    problem: &Problem,
    grid: &Grid,
    scan: &ConjugateScan,
    opts: &ScanOptions,
) -> Result<ScanReport> {
    let mut crossings: Vec<CrossingReport> = scan
        .instants
        .par_iter()
        .map(|inst| {
            let modes: Vec<Option<AngularMode>> = inst.modes.iter().map(|(m, _)| *m).collect();
            let mut report =
                certify_conjugate_instant(problem, &modes, inst.r0, grid, opts.kernel_tau, opts.regularity_tau)?;
            if report.multiplicity != inst.multiplicity() {
                report.flags.push(format!(
                    "KERNEL_DIMENSION_MISMATCH: inertia jump {} vs kernel {}",
                    inst.multiplicity(),
                    report.multiplicity
                ));
            }
            report.isolation_delta = isolation_delta(problem, &modes, inst.r0, grid, opts)?;
            Ok(report)
        })
        .collect::<Result<_>>()?;
    crossings.sort_by(|a, b| a.r0.total_cmp(&b.r0));

    let mut warnings = scan.warnings.clone();
    for c in &crossings {
        for f in &c.flags {
            warnings.push(format!("r0 = {}: {f}", c.r0));
        }
    }

    let smale_lhs = scan.morse_index_at_1;
    let smale_rhs: usize = crossings.iter().filter(|c| c.regular).map(|c| c.multiplicity).sum();

    // stepwise check on the scan samples
    let mut stepwise_holds = true;
    for &(r, index) in &scan.profile {
        let expected: usize = crossings
            .iter()
            .zip(&scan.instants)
            .filter(|(_, inst)| inst.r0 < r)
            .map(|(_, inst)| inst.multiplicity())
            .sum();
        if index != expected {
            stepwise_holds = false;
        }
    }
    if let Some(&(_, last)) = scan.profile.last() {
        stepwise_holds &= last == smale_lhs;
    }
    let mut morse_steps: Vec<(f64, usize)> = Vec::new();
    for &(r, index) in &scan.profile {
        if morse_steps.last().is_none_or(|&(_, i)| i != index) {
            morse_steps.push((r, index));
        }
    }

    let bound = bifurcation_lower_bound(smale_lhs, &crossings);
    let bound_satisfied = crossings.iter().filter(|c| c.regular).count() >= bound;
    if !bound_satisfied {
        warnings.push(format!("fewer regular crossings than the lower bound {bound}"));
    }

    Ok(ScanReport {
        problem_digest: problem_digest(problem),
        grid_nodes: grid.nodes(),
        options: *opts,
        crossings,
        morse_index_at_1: scan.morse_index_at_1,
        morse_at_1_by_mode: scan
            .morse_at_1_by_mode
            .iter()
            .map(|(m, c)| ModeCount { nu: m.map(|m| m.nu), weight: weight(*m), negative_count: *c })
            .collect(),
        smale_lhs,
        smale_rhs,
        smale_holds: smale_lhs == smale_rhs,
        stepwise_holds,
        morse_steps,
        bifurcation_lower_bound: bound,
        bound_satisfied,
        warnings,
    })
}

/// Scan, certify and check the identity; errors with SMALE_VIOLATION or
/// THEOREM_VIOLATION when it fails.
pub fn verify_smale_identity(problem: &Problem, grid: &Grid, opts: &ScanOptions) -> Result<ScanReport> {
    let scan = scan_conjugate_instants(problem, grid, opts)?;
    let report = build_scan_report(problem, grid, &scan, opts)?;
    report.check()?;
    Ok(report)
}
