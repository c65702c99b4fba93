//! Finite differences, Richardson extrapolation, quadrature and sample clouds.

use nalgebra::DVector;

/// Default relative step for first-order central differences.
pub const FD_STEP: f64 = 1e-5;

/// Directional derivative of a vector field by the five-point central stencil
/// with step `s = 1e-5 (1+|x|) / |v|`.
pub fn directional<F>(w: F, x: &DVector<f64>, v: &DVector<f64>) -> DVector<f64>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    let nv = v.norm();
    if nv == 0.0 {
        return DVector::zeros(w(x).len());
    }
    let s = FD_STEP * (1.0 + x.norm()) / nv;
    let at = |k: f64| w(&(x + v * (k * s)));
    ((at(1.0) - at(-1.0)) * 8.0 - at(2.0) + at(-2.0)) / (12.0 * s)
}

/// Scalar version of [`directional`].
pub fn directional_scalar<F>(f: F, x: &DVector<f64>, v: &DVector<f64>) -> f64
where
    F: Fn(&DVector<f64>) -> f64,
{
    let nv = v.norm();
    if nv == 0.0 {
        return 0.0;
    }
    let s = FD_STEP * (1.0 + x.norm()) / nv;
    let at = |k: f64| f(&(x + v * (k * s)));
    (8.0 * (at(1.0) - at(-1.0)) - at(2.0) + at(-2.0)) / (12.0 * s)
}

/// Fourth-order first derivative of a curve.
pub fn curve_d1<F>(c: F, t: f64, h: f64) -> DVector<f64>
where
    F: Fn(f64) -> DVector<f64>,
{
    (c(t - 2.0 * h) - c(t + 2.0 * h) + (c(t + h) - c(t - h)) * 8.0) / (12.0 * h)
}

/// Fourth-order second derivative of a curve.
pub fn curve_d2<F>(c: F, t: f64, h: f64) -> DVector<f64>
where
    F: Fn(f64) -> DVector<f64>,
{
    let c0 = c(t);
    (-(c(t + 2.0 * h) + c(t - 2.0 * h)) + (c(t + h) + c(t - h)) * 16.0 - c0 * 30.0) / (12.0 * h * h)
}

/// Outcome of an extrapolated limit.
#[derive(Debug, Clone)]
pub struct Limit {
    pub value: DVector<f64>,
    /// Smallest gap between successive diagonal extrapolants.
    pub error: f64,
    pub converged: bool,
}

/// The t-schedule `2^-3, ..., 2^-12`.
pub fn schedule() -> Vec<f64> {
    (3..=12).map(|k| 0.5f64.powi(k)).collect()
}

/// Neville-type Richardson table on a halving schedule. `power` is the step of
/// the error expansion (1 for a generic power series in t, 2 for even series).
pub fn richardson(samples: &[DVector<f64>], power: i32) -> Limit {
    assert!(!samples.is_empty());
    let n = samples.len();
    let mut prev: Vec<DVector<f64>> = Vec::new();
    let mut best = Limit { value: samples[0].clone(), error: f64::INFINITY, converged: false };
    let mut last_diag: Option<DVector<f64>> = None;
    for k in 0..n {
        let mut row = vec![samples[k].clone()];
        for j in 1..=k {
            let f = 2f64.powi(power * j as i32);
            let v = (&row[j - 1] * f - &prev[j - 1]) / (f - 1.0);
            row.push(v);
        }
        let diag = row[k].clone();
        if let Some(ld) = &last_diag {
            let gap = (&diag - ld).amax();
            if gap < best.error {
                best = Limit { value: diag.clone(), error: gap, converged: gap < 1e-8 };
            }
        }
        last_diag = Some(diag);
        prev = row;
    }
    best
}

/// Limit as t→0⁺ of `f(t)` sampled on [`schedule`].
pub fn limit_at_zero<F>(f: F) -> Limit
where
    F: Fn(f64) -> DVector<f64>,
{
    let s: Vec<_> = schedule().into_iter().map(f).collect();
    richardson(&s, 1)
}

/// Derivative at `t0` by central differences on the schedule plus Richardson.
pub fn derivative_at<F>(f: F, t0: f64) -> Limit
where
    F: Fn(f64) -> DVector<f64>,
{
    let s: Vec<_> = schedule().into_iter().map(|h| (f(t0 + h) - f(t0 - h)) / (2.0 * h)).collect();
    richardson(&s, 2)
}

/// Gauss–Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut pp = 0.0;
        for _ in 0..100 {
            let (mut p1, mut p2) = (1.0, 0.0);
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2 * j + 1) as f64 * z * p2 - j as f64 * p3) / (j + 1) as f64;
            }
            pp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
            let dz = p1 / pp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Composite Gauss–Legendre integral of `f` over `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize, order: usize) -> f64 {
    let (x, w) = gauss_legendre(order);
    let h = (b - a) / panels as f64;
    let mut s = 0.0;
    for p in 0..panels {
        let lo = a + p as f64 * h;
        for (xi, wi) in x.iter().zip(&w) {
            s += wi * f(lo + 0.5 * h * (xi + 1.0));
        }
    }
    s * 0.5 * h
}

fn radical_inverse(mut i: usize, base: usize) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// `count` Halton points in the ball of radius `radius` in ℝ³ (deterministic).
pub fn halton_ball(count: usize, radius: f64) -> Vec<DVector<f64>> {
    let mut out = Vec::with_capacity(count);
    let mut i = 1;
    while out.len() < count {
        let p = DVector::from_vec(vec![
            2.0 * radical_inverse(i, 2) - 1.0,
            2.0 * radical_inverse(i, 3) - 1.0,
            2.0 * radical_inverse(i, 5) - 1.0,
        ]);
        i += 1;
        if p.norm() <= 1.0 {
            out.push(p * radius);
        }
    }
    out
}

/// Least-squares slope/intercept fit with coefficient of determination.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, my - slope * mx, r2)
}

/// Row-compressed sparse matrix built from `(row, col, value)` triplets.
#[derive(Debug, Clone)]
pub struct SparseMatrix {
    pub rows: usize,
    pub cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    pub fn from_triplets(rows: usize, cols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut sorted: Vec<_> = triplets.iter().filter(|t| t.2 != 0.0).copied().collect();
        sorted.sort_by_key(|t| (t.0, t.1));
        let mut indptr = vec![0; rows + 1];
        let mut indices = Vec::with_capacity(sorted.len());
        let mut values: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in sorted {
            assert!(r < rows && c < cols, "triplet out of range");
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
                continue;
            }
            indptr[r + 1] += 1;
            indices.push(c);
            values.push(v);
            last = Some((r, c));
        }
        for r in 0..rows {
            indptr[r + 1] += indptr[r];
        }
        Self { rows, cols, indptr, indices, values }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        (0..self.rows)
            .map(|r| (self.indptr[r]..self.indptr[r + 1]).map(|k| self.values[k] * x[self.indices[k]]).sum())
            .collect()
    }

    pub fn mul_t(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for (r, yr) in y.iter().enumerate() {
            for k in self.indptr[r]..self.indptr[r + 1] {
                out[self.indices[k]] += self.values[k] * yr;
            }
        }
        out
    }

    fn column_norms(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for (k, &c) in self.indices.iter().enumerate() {
            out[c] += self.values[k] * self.values[k];
        }
        out.into_iter().map(f64::sqrt).collect()
    }
}

#[derive(Debug, Clone)]
pub struct CglsOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// `|Aᵀr| / |Aᵀb|` at exit (in the column-scaled variables).
    pub normal_residual: f64,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Least squares `min |Ax - b|` by conjugate gradients on the normal equations,
/// with Jacobi column scaling.
pub fn cgls(a: &SparseMatrix, b: &[f64], tol: f64, max_iter: usize) -> CglsOutcome {
    assert_eq!(b.len(), a.rows);
    let d: Vec<f64> = a.column_norms().into_iter().map(|c| if c > 0.0 { 1.0 / c } else { 0.0 }).collect();
    let scaled_mul = |p: &[f64]| a.mul(&p.iter().zip(&d).map(|(x, s)| x * s).collect::<Vec<_>>());
    let scaled_mul_t = |r: &[f64]| a.mul_t(r).into_iter().zip(&d).map(|(x, s)| x * s).collect::<Vec<_>>();
    let mut y = vec![0.0; a.cols];
    let mut r = b.to_vec();
    let mut s = scaled_mul_t(&r);
    let mut p = s.clone();
    let mut gamma = dot(&s, &s);
    let g0 = gamma.sqrt();
    let mut it = 0;
    let mut rel = if g0 == 0.0 { 0.0 } else { 1.0 };
    while it < max_iter && rel > tol {
        let q = scaled_mul(&p);
        let qq = dot(&q, &q);
        if qq == 0.0 {
            break;
        }
        let alpha = gamma / qq;
        for (yi, pi) in y.iter_mut().zip(&p) {
            *yi += alpha * pi;
        }
        for (ri, qi) in r.iter_mut().zip(&q) {
            *ri -= alpha * qi;
        }
        s = scaled_mul_t(&r);
        let gnew = dot(&s, &s);
        let beta = gnew / gamma;
        gamma = gnew;
        for (pi, si) in p.iter_mut().zip(&s) {
            *pi = si + beta * *pi;
        }
        it += 1;
        rel = gamma.sqrt() / g0;
    }
    let x = y.iter().zip(&d).map(|(v, s)| v * s).collect();
    CglsOutcome { x, iterations: it, normal_residual: rel, converged: rel <= tol }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v1(x: f64) -> DVector<f64> {
        DVector::from_vec(vec![x])
    }

    #[test]
    fn richardson_recovers_sine_derivative() {
        let l = derivative_at(|t| v1((3.0 * t).sin()), 0.0);
        assert!((l.value[0] - 3.0).abs() < 1e-10);
        assert!(l.converged);
    }

    #[test]
    fn limit_of_linear_plus_quadratic() {
        let l = limit_at_zero(|t| v1(2.0 + 5.0 * t - t * t + (t * 3.0).exp() * t.powi(3)));
        assert!((l.value[0] - 2.0).abs() < 1e-10, "{}", l.value[0]);
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let s = integrate(|x| x.powi(7) - 3.0 * x * x, 0.0, 2.0, 1, 8);
        assert!((s - (32.0 - 8.0)).abs() < 1e-12);
        let (_, w) = gauss_legendre(17);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13);
    }

    #[test]
    fn curve_derivatives() {
        let c = |t: f64| DVector::from_vec(vec![t.cos(), t.sin()]);
        let d2 = curve_d2(c, 0.3, 1e-3);
        assert!((d2 + c(0.3)).norm() < 1e-8);
        let d1 = curve_d1(c, 0.3, 1e-3);
        assert!((d1[0] + 0.3f64.sin()).abs() < 1e-11);
    }

    #[test]
    fn halton_points_inside_ball() {
        let p = halton_ball(512, 0.9);
        assert_eq!(p.len(), 512);
        assert!(p.iter().all(|x| x.norm() <= 0.9 + 1e-15));
    }

    #[test]
    fn fit_exact_line() {
        let (s, c, r2) = linear_fit(&[0.0, 1.0, 2.0], &[1.0, 3.0, 5.0]);
        assert!((s - 2.0).abs() < 1e-14 && (c - 1.0).abs() < 1e-14 && (r2 - 1.0).abs() < 1e-14);
    }

    #[test]
    fn cgls_solves_overdetermined_system() {
        // x + y = 3, x - y = 1, 2x = 4  ->  (2, 1)
        let a = SparseMatrix::from_triplets(
            3,
            2,
            &[(0, 0, 1.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, -1.0), (2, 0, 1.0), (2, 0, 1.0)],
        );
        assert_eq!(a.nnz(), 5);
        let out = cgls(&a, &[3.0, 1.0, 4.0], 1e-14, 100);
        assert!(out.converged);
        assert!((out.x[0] - 2.0).abs() < 1e-12 && (out.x[1] - 1.0).abs() < 1e-12);
        assert_eq!(a.mul_t(&[1.0, 0.0, 0.0]), vec![1.0, 1.0]);
    }
}
