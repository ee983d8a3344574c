//! Shooting for `-(a u')' + g(x, u) = 0`, `u(0) = 0`, `u'(0) = s`: zeros of
//! the shot solution are nontrivial Dirichlet solutions on (0, r), and
//! their limits as s → 0 are the bifurcation instants.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::problem::Interval1DProblem;
use crate::scan::ScanReport;

pub const RTOL: f64 = 1e-10;
const BLOWUP: f64 = 1e8;
const MIN_STEP: f64 = 1e-14;
const ZERO_TOL: f64 = 1e-12;
/// Smallest matching tolerance between a branch limit and a conjugate
/// instant; covers the discretization error of the scanned instants.
pub const MATCH_FLOOR: f64 = 1e-5;
pub const DEFAULT_S_SCHEDULE: [f64; 3] = [1e-2, 1e-3, 1e-4];

// Dormand–Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const E: [f64; 7] =
    [71.0 / 57600.0, 0.0, -71.0 / 16695.0, 71.0 / 1920.0, -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0];

/// (u, a u', ∫ u'²)
type State = [f64; 3];

struct Shooter<'a> {
    problem: &'a Interval1DProblem,
    atol: State,
}

impl Shooter<'_> {
    fn rhs(&self, x: f64, y: &State) -> Result<State> {
        let g = self.problem.g.as_ref().expect("checked by caller");
        let a = self.problem.a.value(x);
        let du = y[1] / a;
        let out = [du, g.g(x, y[0]), du * du];
        if out.iter().all(|v| v.is_finite()) {
            Ok(out)
        } else {
            Err(Error::ShootBlowup(x))
        }
    }

    /// One Dormand–Prince step; returns the 5th-order state and the error
    /// estimate.
    fn step(&self, x: f64, y: &State, h: f64) -> Result<(State, State)> {
        let mut k = [[0.0; 3]; 7];
        for i in 0..7 {
            let mut yi = *y;
            for (j, kj) in k.iter().enumerate().take(i) {
                for c in 0..3 {
                    yi[c] += h * A[i][j] * kj[c];
                }
            }
            k[i] = self.rhs(x + C[i] * h, &yi)?;
        }
        let mut next = *y;
        let mut err = [0.0; 3];
        for i in 0..7 {
            for c in 0..3 {
                next[c] += h * B[i] * k[i][c];
                err[c] += h * E[i] * k[i][c];
            }
        }
        Ok((next, err))
    }

    fn error_norm(&self, y: &State, next: &State, err: &State) -> f64 {
        let sum: f64 = (0..3)
            .map(|c| {
                let scale = self.atol[c] + RTOL * y[c].abs().max(next[c].abs());
                (err[c] / scale).powi(2)
            })
            .sum();
        (sum / 3.0).sqrt()
    }

    /// Integrates over [0, x_end], calling `on_step(x0, y0, x1, y1)` for
    /// every accepted step.
    fn integrate(
        &self,
        s: f64,
        x_end: f64,
        mut on_step: impl FnMut(f64, &State, f64, &State) -> Result<bool>,
    ) -> Result<State> {
        let mut x = 0.0;
        let mut y: State = [0.0, s * self.problem.a.value(0.0), 0.0];
        let mut h = 1e-3_f64.min(x_end);
        while x < x_end {
            h = h.min(x_end - x);
            if h < MIN_STEP {
                return Err(Error::ShootBlowup(x));
            }
            let (next, err) = self.step(x, &y, h)?;
            let e = self.error_norm(&y, &next, &err);
            if e <= 1.0 {
                let x_next = if x_end - (x + h) < MIN_STEP { x_end } else { x + h };
                if next[0].abs() > BLOWUP || next[1].abs() > BLOWUP {
                    return Err(Error::ShootBlowup(x_next));
                }
                let stop = on_step(x, &y, x_next, &next)?;
                x = x_next;
                y = next;
                if stop {
                    break;
                }
            }
            let factor = if e == 0.0 { 5.0 } else { (0.9 * e.powf(-0.2)).clamp(0.2, 5.0) };
            h *= factor;
        }
        Ok(y)
    }

    /// Refines a sign change of u inside an accepted step by bisection on
    /// the length of a single step from its start.
    fn refine_zero(&self, x0: f64, y0: &State, x1: f64) -> Result<(f64, State)> {
        let (mut lo, mut hi) = (0.0, x1 - x0);
        let sign0 = y0[0].signum();
        let mut at_hi = self.step(x0, y0, hi)?.0;
        while hi - lo > ZERO_TOL {
            let mid = 0.5 * (lo + hi);
            let (ym, _) = self.step(x0, y0, mid)?;
            if ym[0].signum() == sign0 && ym[0] != 0.0 {
                lo = mid;
            } else {
                hi = mid;
                at_hi = ym;
            }
        }
        Ok((x0 + hi, at_hi))
    }
}

fn shooter(problem: &Interval1DProblem, s: f64) -> Result<Shooter<'_>> {
    if problem.g.is_none() {
        return Err(Error::Config("shooting needs a nonlinearity g".into()));
    }
    let scale = s.abs();
    Ok(Shooter { problem, atol: [RTOL * scale, RTOL * scale, RTOL * scale * scale] })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShootingState {
    pub r: f64,
    pub s: f64,
    pub u: f64,
    pub du: f64,
    /// `‖u‖_{H¹₀(0, r)}`.
    pub amplitude: f64,
}

pub fn shoot(problem: &Interval1DProblem, r: f64, s: f64) -> Result<ShootingState> {
    if !(r > 0.0 && r <= 1.0) {
        return Err(Error::ParameterOutOfRange(r));
    }
    let sh = shooter(problem, s)?;
    if s == 0.0 {
        return Ok(ShootingState { r, s, u: 0.0, du: 0.0, amplitude: 0.0 });
    }
    let y = sh.integrate(s, r, |_, _, _, _| Ok(false))?;
    Ok(ShootingState { r, s, u: y[0], du: y[1] / problem.a.value(r), amplitude: y[2].max(0.0).sqrt() })
}

/// Zeros of the shot solution in (0, 1], each with the state there.
pub fn shooting_zeros(problem: &Interval1DProblem, s: f64) -> Result<Vec<ShootingState>> {
    let sh = shooter(problem, s)?;
    if s == 0.0 {
        return Ok(Vec::new());
    }
    let mut zeros = Vec::new();
    sh.integrate(s, 1.0, |x0, y0, x1, y1| {
        if x0 > 0.0 && y0[0] != 0.0 && (y1[0] == 0.0 || y1[0].signum() != y0[0].signum()) {
            let (r, y) = sh.refine_zero(x0, y0, x1)?;
            zeros.push(ShootingState { r, s, u: y[0], du: y[1] / problem.a.value(r), amplitude: y[2].max(0.0).sqrt() });
        }
        Ok(false)
    })?;
    Ok(zeros)
}

/// Smallest r in (0, 1] with u_s(r) = 0.
pub fn branch_radius(problem: &Interval1DProblem, s: f64) -> Result<Option<f64>> {
    if s == 0.0 {
        return Err(Error::Config("branch radius needs a nonzero slope".into()));
    }
    Ok(shooting_zeros(problem, s)?.first().map(|z| z.r))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BranchPoint {
    pub s: f64,
    pub k: usize,
    pub r: f64,
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BranchLimit {
    pub k: usize,
    pub limit: f64,
    pub tolerance: f64,
    pub matched_instant: Option<f64>,
    /// |r(s) − r0| nonincreasing along the schedule.
    pub monotone: bool,
    /// Amplitudes shrink by at least a factor 5 per schedule step.
    pub amplitudes_decreasing: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BifurcationReport {
    pub points: Vec<BranchPoint>,
    pub limits: Vec<BranchLimit>,
    pub distinct_limits: usize,
    pub morse_index: usize,
    /// Every conjugate instant is the limit of some branch.
    pub all_instants_matched: bool,
    pub count_matches: bool,
}

impl BifurcationReport {
    pub fn check(&self) -> Result<()> {
        if let Some(l) = self.limits.iter().find(|l| l.matched_instant.is_none()) {
            return Err(Error::ConverseViolation(l.limit));
        }
        Ok(())
    }
}

/// Follows the k-th zero of the shot solution as s runs through the
/// schedule and matches each limit against the scanned conjugate instants.
pub fn verify_bifurcation_theorem(
    problem: &Interval1DProblem,
    scan: &ScanReport,
    s_schedule: &[f64],
) -> Result<BifurcationReport> {
    if s_schedule.is_empty() || s_schedule.iter().any(|s| *s == 0.0 || !s.is_finite()) {
        return Err(Error::Config("s schedule needs nonzero finite slopes".into()));
    }
    let mut schedule = s_schedule.to_vec();
    schedule.sort_by(|a, b| b.abs().total_cmp(&a.abs()));
    let s_min = *schedule.last().unwrap();
    let mut runs = schedule.clone();
    runs.push(0.5 * s_min);

    let zeros: Vec<Vec<ShootingState>> = runs.par_iter().map(|&s| shooting_zeros(problem, s)).collect::<Result<_>>()?;
    let (sched_zeros, half) = zeros.split_at(schedule.len());
    let half = &half[0];

    let mut points = Vec::new();
    for z in sched_zeros {
        for (k, st) in z.iter().enumerate() {
            points.push(BranchPoint { s: st.s, k: k + 1, r: st.r, amplitude: st.amplitude });
        }
    }

    let instants = scan.crossing_pairs();
    let last = sched_zeros.last().unwrap();
    let mut limits = Vec::new();
    for (k, z_half) in half.iter().enumerate().take(last.len()) {
        let r_min_s = last[k].r;
        let limit = z_half.r;
        let tolerance = (10.0 * (r_min_s - limit).abs()).max(MATCH_FLOOR);
        let matched_instant = instants
            .iter()
            .map(|&(r0, _)| r0)
            .filter(|r0| (r0 - limit).abs() <= tolerance)
            .min_by(|a, b| (a - limit).abs().total_cmp(&(b - limit).abs()));
        // measured against the shooting limit, which carries no mesh error
        let track: Vec<&ShootingState> = sched_zeros.iter().filter_map(|z| z.get(k)).collect();
        let monotone = track.windows(2).all(|w| (w[1].r - limit).abs() <= (w[0].r - limit).abs() + 1e-12);
        let amplitudes_decreasing =
            track.len() == schedule.len() && track.windows(2).all(|w| w[1].amplitude * 5.0 <= w[0].amplitude);
        limits.push(BranchLimit { k: k + 1, limit, tolerance, matched_instant, monotone, amplitudes_decreasing });
    }

    let mut distinct: Vec<f64> = limits.iter().map(|l| l.limit).collect();
    distinct.dedup_by(|a, b| (*a - *b).abs() <= MATCH_FLOOR);
    let all_instants_matched = instants.iter().all(|&(r0, _)| limits.iter().any(|l| l.matched_instant == Some(r0)));
    Ok(BifurcationReport {
        points,
        distinct_limits: distinct.len(),
        morse_index: scan.morse_index_at_1,
        count_matches: distinct.len() == scan.morse_index_at_1,
        all_instants_matched,
        limits,
    })
}
