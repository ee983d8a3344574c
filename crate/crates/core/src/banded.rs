//! Symmetric banded matrices and their indefinite LDL^T factorization.
//!
//! Tridiagonal matrices (the only kind piecewise-linear elements produce)
//! are factored with Bunch's pivoting strategy: 1x1 or 2x2 diagonal pivots
//! chosen so that no fill-in occurs and element growth stays bounded. The
//! inertia of the block-diagonal factor equals the inertia of the matrix.

use std::io::{self, Write};

use crate::error::{Error, Result};

/// Symmetric matrix with `bandwidth` sub-diagonals. Only the lower band is
/// stored, so symmetry holds by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricBandedMatrix {
    order: usize,
    // bands[k][i] = A[i + k][i]
    bands: Vec<Vec<f64>>,
}

impl SymmetricBandedMatrix {
    pub fn zeros(order: usize, bandwidth: usize) -> Self {
        let bands = (0..=bandwidth).map(|k| vec![0.0; order.saturating_sub(k)]).collect();
        Self { order, bands }
    }

    pub fn identity(order: usize) -> Self {
        let mut m = Self::zeros(order, 1);
        m.bands[0].iter_mut().for_each(|d| *d = 1.0);
        m
    }

    pub fn tridiagonal(diag: Vec<f64>, off: Vec<f64>) -> Self {
        assert_eq!(off.len() + 1, diag.len().max(1));
        Self { order: diag.len(), bands: vec![diag, off] }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn bandwidth(&self) -> usize {
        self.bands.len() - 1
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.bands[0]
    }

    pub fn band(&self, k: usize) -> &[f64] {
        &self.bands[k]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
        let k = hi - lo;
        if k > self.bandwidth() {
            0.0
        } else {
            self.bands[k][lo]
        }
    }

    /// Adds `v` to entries (i, j) and (j, i) of the symmetric matrix.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
        self.bands[hi - lo][lo] += v;
    }

    /// `alpha * self + beta * other`.
    pub fn combine(&self, alpha: f64, other: &Self, beta: f64) -> Self {
        assert_eq!(self.order, other.order);
        let bw = self.bandwidth().max(other.bandwidth());
        let mut out = Self::zeros(self.order, bw);
        for k in 0..=bw {
            for i in 0..out.bands[k].len() {
                let a = self.bands.get(k).map_or(0.0, |b| b[i]);
                let b = other.bands.get(k).map_or(0.0, |b| b[i]);
                out.bands[k][i] = alpha * a + beta * b;
            }
        }
        out
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        let mut out = self.clone();
        out.bands.iter_mut().flatten().for_each(|v| *v *= alpha);
        out
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y: Vec<f64> = self.bands[0].iter().zip(x).map(|(d, xi)| d * xi).collect();
        for (k, band) in self.bands.iter().enumerate().skip(1) {
            for (i, &v) in band.iter().enumerate() {
                y[i + k] += v * x[i];
                y[i] += v * x[i + k];
            }
        }
        y
    }

    /// `x^T A y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        x.iter().zip(self.matvec(y)).map(|(a, b)| a * b).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.bands.iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diagonal(&self) -> f64 {
        self.bands[0].iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Infinity norm (maximum absolute row sum).
    pub fn norm_inf(&self) -> f64 {
        let mut rows = vec![0.0; self.order];
        for (k, band) in self.bands.iter().enumerate() {
            for (i, &v) in band.iter().enumerate() {
                rows[i] += v.abs();
                if k > 0 {
                    rows[i + k] += v.abs();
                }
            }
        }
        rows.into_iter().fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.bands.iter().flatten().all(|v| v.is_finite())
    }

    /// Gershgorin interval containing every eigenvalue.
    pub fn gershgorin(&self) -> (f64, f64) {
        let mut radius = vec![0.0; self.order];
        for (k, band) in self.bands.iter().enumerate().skip(1) {
            for (i, &v) in band.iter().enumerate() {
                radius[i] += v.abs();
                radius[i + k] += v.abs();
            }
        }
        self.bands[0]
            .iter()
            .zip(&radius)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (d, r)| (lo.min(d - r), hi.max(d + r)))
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.order;
        let mut out = vec![vec![0.0; n]; n];
        for (k, band) in self.bands.iter().enumerate() {
            for (i, &v) in band.iter().enumerate() {
                out[i + k][i] = v;
                out[i][i + k] = v;
            }
        }
        out
    }

    /// Debug dump: one `i j value` line per stored lower-band entry.
    pub fn write_triplets<W: Write>(&self, mut w: W) -> io::Result<()> {
        for (k, band) in self.bands.iter().enumerate() {
            for (i, v) in band.iter().enumerate() {
                writeln!(w, "{} {} {:e}", i + k, i, v)?;
            }
        }
        Ok(())
    }

    pub fn factor(&self) -> Result<SymmetricFactor> {
        if !self.is_finite() {
            return Err(Error::InertiaBreakdown(f64::NAN));
        }
        if self.bandwidth() <= 1 {
            Ok(SymmetricFactor::Tridiagonal(factor_tridiagonal(self)?))
        } else {
            Ok(SymmetricFactor::Band(factor_band(self)?))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Inertia {
    pub n_neg: usize,
    pub n_zero: usize,
    pub n_pos: usize,
}

impl Inertia {
    pub fn order(&self) -> usize {
        self.n_neg + self.n_zero + self.n_pos
    }

    pub(crate) fn count_scalar(&mut self, d: f64) {
        if d < 0.0 {
            self.n_neg += 1;
        } else if d > 0.0 {
            self.n_pos += 1;
        } else {
            self.n_zero += 1;
        }
    }

    /// Inertia of [[a, b], [b, c]].
    pub(crate) fn count_block(&mut self, a: f64, b: f64, c: f64) {
        let det = a * c - b * b;
        if det < 0.0 {
            self.n_neg += 1;
            self.n_pos += 1;
        } else if det > 0.0 {
            if a + c < 0.0 {
                self.n_neg += 2;
            } else {
                self.n_pos += 2;
            }
        } else {
            self.n_zero += 1;
            self.count_scalar(a + c);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Pivot {
    // D entry, multiplier L[i+1][i]
    One { d: f64, l: f64 },
    // D block [[a, b], [b, c]], multipliers L[i+2][i], L[i+2][i+1]
    Two { a: f64, b: f64, c: f64, l0: f64, l1: f64 },
}

#[derive(Debug, Clone)]
pub struct TridiagonalFactor {
    pivots: Vec<Pivot>,
    order: usize,
    scale: f64,
}

#[derive(Debug, Clone)]
pub struct BandFactor {
    // unit lower band factor, l[k][i] = L[i + k][i]
    l: Vec<Vec<f64>>,
    d: Vec<f64>,
}

#[derive(Debug, Clone)]
pub enum SymmetricFactor {
    Tridiagonal(TridiagonalFactor),
    Band(BandFactor),
}

// Bunch's constant for tridiagonal pivoting, (sqrt(5) - 1) / 2.
const BUNCH_ALPHA: f64 = 0.618_033_988_749_894_9;

fn factor_tridiagonal(m: &SymmetricBandedMatrix) -> Result<TridiagonalFactor> {
    let n = m.order;
    let diag = &m.bands[0];
    let empty = Vec::new();
    let off = m.bands.get(1).unwrap_or(&empty);
    let scale = m.max_abs();
    let mut pivots = Vec::with_capacity(n);
    let mut i = 0;
    let mut cur = diag.first().copied().unwrap_or(0.0);
    while i < n {
        if i + 1 == n {
            pivots.push(Pivot::One { d: cur, l: 0.0 });
            break;
        }
        let e = off[i];
        if cur.abs() * scale >= BUNCH_ALPHA * e * e {
            let l = if e == 0.0 { 0.0 } else { e / cur };
            pivots.push(Pivot::One { d: cur, l });
            cur = diag[i + 1] - l * e;
            i += 1;
        } else {
            let (a, b, c) = (cur, e, diag[i + 1]);
            let det = a * c - b * b;
            if i + 2 == n {
                pivots.push(Pivot::Two { a, b, c, l0: 0.0, l1: 0.0 });
                break;
            }
            let e2 = off[i + 1];
            let l0 = -e2 * b / det;
            let l1 = e2 * a / det;
            pivots.push(Pivot::Two { a, b, c, l0, l1 });
            cur = diag[i + 2] - e2 * e2 * a / det;
            i += 2;
        }
        if !cur.is_finite() {
            return Err(Error::InertiaBreakdown(f64::NAN));
        }
    }
    Ok(TridiagonalFactor { pivots, order: n, scale })
}

fn factor_band(m: &SymmetricBandedMatrix) -> Result<BandFactor> {
    let n = m.order;
    let bw = m.bandwidth();
    let mut work = m.bands.clone();
    let mut d = vec![0.0; n];
    for j in 0..n {
        let pivot = work[0][j];
        if pivot == 0.0 || !pivot.is_finite() {
            return Err(Error::InertiaBreakdown(f64::NAN));
        }
        d[j] = pivot;
        let reach = bw.min(n - 1 - j);
        for k in 1..=reach {
            let lk = work[k][j] / pivot;
            for q in k..=reach {
                // A[j+q][j+k] -= L[j+q][j] * d * L[j+k][j]
                work[q - k][j + k] -= work[q][j] * lk;
            }
        }
        for k in 1..=reach {
            work[k][j] /= pivot;
        }
    }
    Ok(BandFactor { l: work, d })
}

impl SymmetricFactor {
    pub fn inertia(&self) -> Inertia {
        let mut inertia = Inertia::default();
        match self {
            SymmetricFactor::Tridiagonal(f) => {
                for p in &f.pivots {
                    match *p {
                        Pivot::One { d, .. } => inertia.count_scalar(d),
                        Pivot::Two { a, b, c, .. } => inertia.count_block(a, b, c),
                    }
                }
            }
            SymmetricFactor::Band(f) => f.d.iter().for_each(|&d| inertia.count_scalar(d)),
        }
        inertia
    }

    /// Solves `A x = rhs`. Exactly singular pivots are nudged to a tiny
    /// nonzero value, which is what inverse iteration wants.
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        match self {
            SymmetricFactor::Tridiagonal(f) => f.solve(rhs),
            SymmetricFactor::Band(f) => f.solve(rhs),
        }
    }
}

impl TridiagonalFactor {
    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.order;
        let tiny = f64::EPSILON * self.scale.max(f64::MIN_POSITIVE);
        let nudge = |v: f64| if v == 0.0 { tiny } else { v };
        let mut z = rhs.to_vec();
        let mut i = 0;
        for p in &self.pivots {
            match *p {
                Pivot::One { l, .. } => {
                    if i + 1 < n {
                        z[i + 1] -= l * z[i];
                    }
                    i += 1;
                }
                Pivot::Two { l0, l1, .. } => {
                    if i + 2 < n {
                        z[i + 2] -= l0 * z[i] + l1 * z[i + 1];
                    }
                    i += 2;
                }
            }
        }
        i = 0;
        for p in &self.pivots {
            match *p {
                Pivot::One { d, .. } => {
                    z[i] /= nudge(d);
                    i += 1;
                }
                Pivot::Two { a, b, c, .. } => {
                    let det = nudge(a * c - b * b);
                    let (r0, r1) = (z[i], z[i + 1]);
                    z[i] = (c * r0 - b * r1) / det;
                    z[i + 1] = (a * r1 - b * r0) / det;
                    i += 2;
                }
            }
        }
        for p in self.pivots.iter().rev() {
            match *p {
                Pivot::One { l, .. } => {
                    i -= 1;
                    if i + 1 < n {
                        z[i] -= l * z[i + 1];
                    }
                }
                Pivot::Two { l0, l1, .. } => {
                    i -= 2;
                    if i + 2 < n {
                        z[i] -= l0 * z[i + 2];
                        z[i + 1] -= l1 * z[i + 2];
                    }
                }
            }
        }
        z
    }
}

impl BandFactor {
    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.d.len();
        let bw = self.l.len() - 1;
        let mut z = rhs.to_vec();
        for j in 0..n {
            for k in 1..=bw.min(n - 1 - j) {
                z[j + k] -= self.l[k][j] * z[j];
            }
        }
        for j in 0..n {
            z[j] /= self.d[j];
        }
        for j in (0..n).rev() {
            for k in 1..=bw.min(n - 1 - j) {
                z[j] -= self.l[k][j] * z[j + k];
            }
        }
        z
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_matvec(a: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
        a.iter().map(|row| row.iter().zip(x).map(|(p, q)| p * q).sum()).collect()
    }

    #[test]
    fn symmetric_by_construction() {
        let mut m = SymmetricBandedMatrix::zeros(5, 2);
        m.add(3, 1, 2.0);
        m.add(1, 3, 0.5);
        m.add(2, 2, 1.0);
        let d = m.to_dense();
        for i in 0..5 {
            for j in 0..5 {
                assert_eq!(d[i][j], d[j][i]);
            }
        }
        assert_eq!(m.get(1, 3), 2.5);
    }

    #[test]
    fn second_difference_is_positive_definite() {
        let n = 50;
        let m = SymmetricBandedMatrix::tridiagonal(vec![2.0; n], vec![-1.0; n - 1]);
        let inertia = m.factor().unwrap().inertia();
        assert_eq!(inertia, Inertia { n_neg: 0, n_zero: 0, n_pos: n });
        // eigenvalues 2 - 2 cos(k pi / (n + 1)); shift past the 7th
        let k7 = 2.0 - 2.0 * (7.0 * std::f64::consts::PI / 51.0).cos();
        let k8 = 2.0 - 2.0 * (8.0 * std::f64::consts::PI / 51.0).cos();
        let shifted = m.combine(1.0, &SymmetricBandedMatrix::identity(n), -0.5 * (k7 + k8));
        assert_eq!(shifted.factor().unwrap().inertia().n_neg, 7);
    }

    #[test]
    fn zero_diagonal_uses_two_by_two_pivots() {
        // [[0,1],[1,0]] blocks: eigenvalues +-1
        let m = SymmetricBandedMatrix::tridiagonal(vec![0.0; 4], vec![1.0, 0.0, 1.0]);
        let f = m.factor().unwrap();
        assert_eq!(f.inertia(), Inertia { n_neg: 2, n_zero: 0, n_pos: 2 });
        let x = f.solve(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m.matvec(&x), vec![1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn exact_zero_eigenvalue_is_counted() {
        let m = SymmetricBandedMatrix::tridiagonal(vec![1.0, 0.0, 2.0], vec![0.0, 0.0]);
        assert_eq!(m.factor().unwrap().inertia(), Inertia { n_neg: 0, n_zero: 1, n_pos: 2 });
    }

    #[test]
    fn general_band_solve() {
        let n = 8;
        let mut m = SymmetricBandedMatrix::zeros(n, 2);
        for i in 0..n {
            m.add(i, i, 6.0 + i as f64);
            if i + 1 < n {
                m.add(i + 1, i, -1.5);
            }
            if i + 2 < n {
                m.add(i + 2, i, 0.7);
            }
        }
        let f = m.factor().unwrap();
        assert_eq!(f.inertia().n_pos, n);
        let rhs: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let x = f.solve(&rhs);
        let back = dense_matvec(&m.to_dense(), &x);
        for (a, b) in back.iter().zip(&rhs) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn triplet_dump() {
        let m = SymmetricBandedMatrix::tridiagonal(vec![2.0, 2.0], vec![-1.0]);
        let mut buf = Vec::new();
        m.write_triplets(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "0 0 2e0\n1 1 2e0\n1 0 -1e0\n");
    }
}
