//! Dual cones, point/hyperplane duality, support functions of admissible
//! bodies (Euclidean and Minkowski flavors) and the cylinder model.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, GeomError, Result};
use crate::forms::{AmbientVector, BilinearForm};
use crate::hull::{hull, Hull};
use crate::projective::{orth_complement, ModelSpace, ProjPoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConeRep {
    /// Conic hull of the vectors.
    Generators,
    /// `{x : b(n, x) ≤ 0}` for every vector n.
    Halfspaces,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolyCone {
    pub rep: ConeRep,
    pub vectors: Vec<AmbientVector>,
}

impl PolyCone {
    pub fn generators(v: Vec<AmbientVector>) -> Self {
        Self { rep: ConeRep::Generators, vectors: v }
    }

    pub fn halfspaces(v: Vec<AmbientVector>) -> Self {
        Self { rep: ConeRep::Halfspaces, vectors: v }
    }

    /// Same rays up to positive scaling and order.
    pub fn same_rays(&self, other: &PolyCone, tol: f64) -> bool {
        let norm = |v: &Vec<AmbientVector>| v.iter().map(|x| x.normalize()).collect::<Vec<_>>();
        let (a, b) = (norm(&self.vectors), norm(&other.vectors));
        a.len() == b.len()
            && a.iter().all(|x| b.iter().any(|y| (x - y).norm() < tol))
            && b.iter().all(|y| a.iter().any(|x| (x - y).norm() < tol))
    }
}

fn push_unique(out: &mut Vec<AmbientVector>, v: AmbientVector, tol: f64) {
    if !out.iter().any(|w| (w - &v).norm() <= tol * (1.0 + v.norm())) {
        out.push(v);
    }
}

fn combinations(m: usize, k: usize, mut f: impl FnMut(&[usize])) {
    if k > m {
        return;
    }
    let mut c: Vec<usize> = (0..k).collect();
    loop {
        f(&c);
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if c[i] != i + m - k {
                break;
            }
            if i == 0 {
                return;
            }
        }
        c[i] += 1;
        for j in i + 1..k {
            c[j] = c[j - 1] + 1;
        }
    }
}

/// Extreme rays of `{x : ⟨n_i, x⟩ ≤ 0}` (Euclidean pairing), unit length.
pub fn extreme_rays(normals: &[AmbientVector]) -> Result<Vec<AmbientVector>> {
    let d = normals.first().ok_or(GeomError::Empty)?.len();
    let rows: Vec<AmbientVector> = normals.iter().map(|n| n.normalize()).collect();
    let a = DMatrix::from_fn(rows.len(), d, |i, j| rows[i][j]);
    let sv = a.clone().svd(false, false).singular_values;
    let rank = sv.iter().filter(|&&s| s > 1e-10 * sv.max()).count();
    if rank < d {
        return Err(GeomError::Precondition("cone is not full-dimensional, its dual is not pointed".into()));
    }
    let mut out = Vec::new();
    combinations(rows.len(), d - 1, |idx| {
        let sub = DMatrix::from_fn(d - 1, d, |i, j| rows[idx[i]][j]);
        // null vector as the last right singular vector of the square-padded system
        let mut sq = DMatrix::zeros(d, d);
        sq.view_mut((0, 0), (d - 1, d)).copy_from(&sub);
        let svd = sq.svd(false, true);
        let s = &svd.singular_values;
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&i, &j| s[j].partial_cmp(&s[i]).unwrap());
        if s[order[d - 2]] <= 1e-10 * s[order[0]] {
            return;
        }
        let vt = svd.v_t.unwrap();
        let r: AmbientVector = vt.row(order[d - 1]).transpose().into_owned();
        for cand in [r.clone(), -r] {
            if rows.iter().all(|n| n.dot(&cand) <= 1e-10) {
                push_unique(&mut out, cand.normalize(), 1e-9);
            }
        }
    });
    Ok(out)
}

/// The b-dual cone `{x : b(x, y) ≤ 0 ∀ y ∈ c}`, returned by generators.
pub fn dual_cone(c: &PolyCone, b: &BilinearForm) -> Result<PolyCone> {
    if c.vectors.is_empty() {
        return Err(GeomError::Empty);
    }
    for v in &c.vectors {
        check_dim(b.dim(), v.len())?;
    }
    match c.rep {
        ConeRep::Generators => {
            let normals: Vec<_> = c.vectors.iter().map(|g| b.lower(g)).collect();
            Ok(PolyCone::generators(extreme_rays(&normals)?))
        }
        ConeRep::Halfspaces => {
            let mut out = Vec::new();
            for n in &c.vectors {
                push_unique(&mut out, n.normalize(), 1e-9);
            }
            Ok(PolyCone::generators(out))
        }
    }
}

/// A hyperplane `{y : b(normal, y) = 0}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Hyperplane {
    pub normal: AmbientVector,
}

impl Hyperplane {
    /// The hyperplane spanned by `basis`, its normal found as the b-orthogonal
    /// direction.
    pub fn from_basis(b: &BilinearForm, basis: &[AmbientVector]) -> Result<Self> {
        let d = b.dim();
        if basis.len() != d - 1 {
            return Err(GeomError::DimensionMismatch { expected: d - 1, got: basis.len() });
        }
        let rows = DMatrix::from_fn(d - 1, d, |i, j| b.lower(&basis[i])[j]);
        let mut sq = DMatrix::zeros(d, d);
        sq.view_mut((0, 0), (d - 1, d)).copy_from(&rows);
        let svd = sq.svd(false, true);
        let s = &svd.singular_values;
        let imin = s.imin();
        let mut sorted: Vec<f64> = s.iter().copied().collect();
        sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
        if sorted[d - 2] <= 1e-10 * sorted[0] {
            return Err(GeomError::DependentBasis);
        }
        Ok(Self { normal: svd.v_t.unwrap().row(imin).transpose().into_owned() })
    }

    /// Euclidean-orthonormal basis of the hyperplane, as columns.
    pub fn basis(&self, b: &BilinearForm) -> DMatrix<f64> {
        orth_complement(&b.lower(&self.normal))
    }

    pub fn contains(&self, b: &BilinearForm, x: &AmbientVector) -> bool {
        b.b(&self.normal, x).abs() <= 1e-10 * b.lower(&self.normal).norm() * x.norm()
    }
}

/// `x ↦ x*`, the hyperplane b-orthogonal to x.
pub fn dual_point(space: &ModelSpace, x: &ProjPoint) -> Result<Hyperplane> {
    check_dim(space.form.dim(), x.dim())?;
    let r = x.rep();
    if space.form.q(r).abs() <= 1e-12 {
        return Err(GeomError::Isotropic);
    }
    if !space.contains(x) {
        return Err(GeomError::NotInSpace { space: space.to_string(), detail: "cannot dualize".into() });
    }
    Ok(Hyperplane { normal: r.clone() })
}

/// Inverse of [`dual_point`].
pub fn dual_hyperplane(space: &ModelSpace, h: &Hyperplane) -> Result<ProjPoint> {
    check_dim(space.form.dim(), h.normal.len())?;
    if space.form.q(&h.normal).abs() <= 1e-12 * h.normal.norm_squared() {
        return Err(GeomError::Isotropic);
    }
    ProjPoint::new(h.normal.clone())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Flavor {
    Euclidean,
    Minkowski,
}

/// Grid parameters: `m` samples per side, disc radius for the Minkowski flavor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub m: usize,
    pub radius: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { m: 64, radius: 0.8 }
    }
}

/// Sample points with midpoint triples `(a, mid, b)` where `mid = (a+b)/2`
/// exactly in the underlying chart.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Grid {
    pub n: usize,
    pub spec: GridSpec,
    /// Chart points: on the faces of the cube `[-1,1]^n` (Euclidean) or in
    /// the disc of radius `spec.radius` (Minkowski).
    pub chart: Vec<DVector<f64>>,
    pub triples: Vec<[usize; 3]>,
}

fn push_triples(index: &dyn Fn(i64, i64) -> Option<usize>, m: i64, two_d: bool, out: &mut Vec<[usize; 3]>) {
    let steps: &[(i64, i64)] = if two_d { &[(1, 0), (0, 1), (1, 1), (1, -1)] } else { &[(1, 0)] };
    let jr = if two_d { m } else { 1 };
    for i in 0..m {
        for j in 0..jr {
            for &(di, dj) in steps {
                if let (Some(a), Some(c), Some(b)) = (index(i - di, j - dj), index(i, j), index(i + di, j + dj)) {
                    out.push([a, c, b]);
                }
            }
        }
    }
}

impl Grid {
    /// Cube-face grid for directions in ℝⁿ, n ∈ {2, 3}.
    pub fn cube(n: usize, spec: GridSpec) -> Self {
        let m = spec.m;
        let c = |i: usize| -1.0 + (2 * i + 1) as f64 / m as f64;
        let mut chart = Vec::new();
        let mut triples = Vec::new();
        for axis in 0..n {
            for sgn in [1.0, -1.0] {
                let base = chart.len();
                let others: Vec<usize> = (0..n).filter(|&a| a != axis).collect();
                let rows = if n == 3 { m } else { 1 };
                for i in 0..m {
                    for j in 0..rows {
                        let mut p = DVector::zeros(n);
                        p[axis] = sgn;
                        p[others[0]] = c(i);
                        if n == 3 {
                            p[others[1]] = c(j);
                        }
                        chart.push(p);
                    }
                }
                let mi = m as i64;
                let idx = move |i: i64, j: i64| {
                    let jmax = if n == 3 { mi } else { 1 };
                    (i >= 0 && i < mi && j >= 0 && j < jmax).then(|| base + (i * jmax + j) as usize)
                };
                push_triples(&idx, mi, n == 3, &mut triples);
            }
        }
        Self { n, spec, chart, triples }
    }

    /// Square grid of the disc of radius `spec.radius` in ℝ^{n-1}.
    pub fn disc(n: usize, spec: GridSpec) -> Self {
        let m = spec.m;
        let r = spec.radius;
        let c = |i: usize| -r + 2.0 * r * i as f64 / (m - 1) as f64;
        let k = n - 1;
        let rows = if k == 2 { m } else { 1 };
        let mut slot = vec![None; m * rows];
        let mut chart = Vec::new();
        for i in 0..m {
            for j in 0..rows {
                let z = if k == 2 { DVector::from_vec(vec![c(i), c(j)]) } else { DVector::from_vec(vec![c(i)]) };
                if z.norm() <= r * (1.0 + 1e-12) {
                    slot[i * rows + j] = Some(chart.len());
                    chart.push(z);
                }
            }
        }
        let mi = m as i64;
        let ri = rows as i64;
        let idx =
            |i: i64, j: i64| if i >= 0 && i < mi && j >= 0 && j < ri { slot[(i * ri + j) as usize] } else { None };
        let mut triples = Vec::new();
        push_triples(&idx, mi, k == 2, &mut triples);
        Self { n, spec, chart, triples }
    }

    pub fn len(&self) -> usize {
        self.chart.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chart.is_empty()
    }
}

/// Unit direction of a cube-face chart point.
pub fn cube_direction(p: &DVector<f64>) -> DVector<f64> {
    p.normalize()
}

/// Point `(z, 1)/√(1-|z|²)` of the upper unit hyperboloid.
pub fn hyperboloid_point(z: &DVector<f64>) -> DVector<f64> {
    let s = (1.0 - z.norm_squared()).sqrt();
    let mut u = DVector::zeros(z.len() + 1);
    u.rows_mut(0, z.len()).copy_from(z);
    u[z.len()] = 1.0;
    u / s
}

fn with_one(z: &DVector<f64>) -> DVector<f64> {
    let mut u = DVector::zeros(z.len() + 1);
    u.rows_mut(0, z.len()).copy_from(z);
    u[z.len()] = 1.0;
    u
}

/// Sampled support function on a grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SupportFunction {
    pub flavor: Flavor,
    pub grid: Grid,
    /// Euclidean: `h(v)` at unit directions; Minkowski: `h̄(z)` on the disc.
    pub values: Vec<f64>,
}

/// The Minkowski form `b_{n-1,1}` on ℝⁿ.
pub fn minkowski_form(n: usize) -> BilinearForm {
    BilinearForm::standard(n - 1, 1)
}

impl SupportFunction {
    pub fn n(&self) -> usize {
        self.grid.n
    }

    /// Directions at which the 1-homogeneous extension H is sampled: unit
    /// vectors (Euclidean) or points of the unit hyperboloid (Minkowski).
    pub fn direction(&self, k: usize) -> DVector<f64> {
        match self.flavor {
            Flavor::Euclidean => cube_direction(&self.grid.chart[k]),
            Flavor::Minkowski => hyperboloid_point(&self.grid.chart[k]),
        }
    }

    /// `h` at the sampled direction, i.e. `H(direction(k))`.
    pub fn h(&self, k: usize) -> f64 {
        match self.flavor {
            Flavor::Euclidean => self.values[k],
            Flavor::Minkowski => self.values[k] / (1.0 - self.grid.chart[k].norm_squared()).sqrt(),
        }
    }

    /// Value of the 1-homogeneous extension at the chart point.
    fn chart_value(&self, k: usize) -> f64 {
        match self.flavor {
            Flavor::Euclidean => self.grid.chart[k].norm() * self.values[k],
            Flavor::Minkowski => self.values[k],
        }
    }

    /// Sign and midpoint-convexity checks with slack `1e-8·max|value|`.
    pub fn check(&self) -> Result<()> {
        let scale = self.values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        for (k, &v) in self.values.iter().enumerate() {
            let ok = match self.flavor {
                Flavor::Euclidean => v > 0.0,
                Flavor::Minkowski => v < 0.0,
            };
            if !ok || !v.is_finite() {
                return Err(GeomError::NotAdmissible(format!("support value {v} at sample {k} has the wrong sign")));
            }
        }
        let slack = 1e-8 * scale;
        for t in &self.grid.triples {
            let gap = self.chart_value(t[1]) - 0.5 * (self.chart_value(t[0]) + self.chart_value(t[2]));
            if gap > slack {
                return Err(GeomError::NonConvex(format!("midpoint excess {gap:e} at sample {}", t[1])));
            }
        }
        Ok(())
    }

    /// Sup-norm gap between two supports on the same grid.
    pub fn gap(&self, other: &SupportFunction) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    /// Constant support `h ≡ r` (ball of radius r) or `h ≡ -r` on H₊
    /// (hyperboloid `H_r`).
    pub fn constant(flavor: Flavor, n: usize, spec: GridSpec, r: f64) -> Self {
        match flavor {
            Flavor::Euclidean => {
                let grid = Grid::cube(n, spec);
                let values = vec![r; grid.len()];
                Self { flavor, grid, values }
            }
            Flavor::Minkowski => {
                let grid = Grid::disc(n, spec);
                let values = grid.chart.iter().map(|z| -r * (1.0 - z.norm_squared()).sqrt()).collect();
                Self { flavor, grid, values }
            }
        }
    }

    /// Samples an arbitrary `H` given as a function of the sampled direction.
    pub fn from_fn(flavor: Flavor, n: usize, spec: GridSpec, f: impl Fn(&DVector<f64>) -> f64) -> Self {
        let grid = match flavor {
            Flavor::Euclidean => Grid::cube(n, spec),
            Flavor::Minkowski => Grid::disc(n, spec),
        };
        let values = grid
            .chart
            .iter()
            .map(|c| match flavor {
                Flavor::Euclidean => f(&cube_direction(c)),
                Flavor::Minkowski => f(&with_one(c)),
            })
            .collect();
        Self { flavor, grid, values }
    }
}

fn check_admissible(points: &[AmbientVector], flavor: Flavor) -> Result<usize> {
    let n = points.first().ok_or(GeomError::Empty)?.len();
    if !(2..=3).contains(&n) {
        return Err(GeomError::Precondition(format!("bodies live in dimension 2 or 3, got {n}")));
    }
    for p in points {
        check_dim(n, p.len())?;
    }
    match flavor {
        Flavor::Euclidean => {
            let h = hull(points).map_err(|e| GeomError::NotAdmissible(format!("degenerate body: {e}")))?;
            let scale = points.iter().map(|p| p.norm()).fold(0.0, f64::max);
            if h.excess(&DVector::zeros(n)) >= -1e-12 * scale {
                return Err(GeomError::NotAdmissible("origin is not in the interior".into()));
            }
        }
        Flavor::Minkowski => {
            let b = minkowski_form(n);
            for (i, p) in points.iter().enumerate() {
                if !(p[n - 1] > 0.0 && b.q(p) <= 1e-9 * p.norm_squared()) {
                    return Err(GeomError::NotAdmissible(format!("point {i} is not in the future cone")));
                }
            }
        }
    }
    Ok(n)
}

/// Support function of an admissible body given by points:
/// `h(v) = max ⟨x, v⟩` (Euclidean, K = conv) or `h̄(z) = max b(x, (z,1))`
/// (Minkowski, K = conv + future cone).
pub fn support_from_body(points: &[AmbientVector], flavor: Flavor, spec: GridSpec) -> Result<SupportFunction> {
    let n = check_admissible(points, flavor)?;
    let b = match flavor {
        Flavor::Euclidean => BilinearForm::standard(n, 0),
        Flavor::Minkowski => minkowski_form(n),
    };
    let lowered: Vec<_> = points.iter().map(|p| b.lower(p)).collect();
    Ok(SupportFunction::from_fn(flavor, n, spec, |w| {
        lowered.iter().map(|x| x.dot(w)).fold(f64::NEG_INFINITY, f64::max)
    }))
}

/// Vertices of the dual of a polyhedral admissible body.
///
/// Euclidean: `K* = {y : ⟨x,y⟩ ≤ 1 ∀x∈K}`, vertices `n/c` over facets.
/// Minkowski: `K* = {y ∈ F̄ : b(x,y) ≤ -1 ∀x∈K}`; the vertices inside the
/// open future cone are `J n/(-c)` over past-facing facets, followed by
/// samples `ℓ/(-H_K(ℓ))` of the part of the boundary lying on the light cone.
pub fn dual_body(points: &[AmbientVector], flavor: Flavor) -> Result<Vec<AmbientVector>> {
    let n = check_admissible(points, flavor)?;
    let h = hull(points).map_err(|e| GeomError::NotAdmissible(format!("degenerate body: {e}")))?;
    Ok(dual_vertices_from_hull(&h, points, n, flavor))
}

/// Number of light-like directions sampled on the boundary of a 3-dimensional
/// Minkowski dual.
pub const LIGHT_SAMPLES: usize = 1440;

fn light_directions(n: usize) -> Vec<AmbientVector> {
    if n == 2 {
        return vec![DVector::from_vec(vec![1.0, 1.0]), DVector::from_vec(vec![-1.0, 1.0])];
    }
    (0..LIGHT_SAMPLES)
        .map(|k| {
            let t = 2.0 * std::f64::consts::PI * k as f64 / LIGHT_SAMPLES as f64;
            DVector::from_vec(vec![t.cos(), t.sin(), 1.0])
        })
        .collect()
}

/// Least-squares `y` with `b(y, p) = -1` over the points lying on the plane
/// of `y0`. Thin hull triangles have noisy normals; the sampled light-like
/// boundary puts many more points on every true support plane.
fn refit_plane(lowered: &[AmbientVector], y0: AmbientVector) -> AmbientVector {
    let mut y = y0;
    for tau in [1e-6, 1e-10] {
        let mut a = DMatrix::<f64>::zeros(3, 3);
        let mut r = DVector::<f64>::zeros(3);
        let mut count = 0;
        for p in lowered {
            if (p.dot(&y) + 1.0).abs() <= tau {
                a += p * p.transpose();
                r -= p;
                count += 1;
            }
        }
        if count < 3 {
            break;
        }
        match a.cholesky() {
            Some(c) => y = c.solve(&r),
            None => break,
        }
    }
    y
}

fn light_at(t: f64) -> AmbientVector {
    DVector::from_vec(vec![t.cos(), t.sin(), 1.0])
}

fn argmax_at(lowered: &[AmbientVector], l: &AmbientVector) -> usize {
    let mut best = 0;
    for (i, x) in lowered.iter().enumerate() {
        if x.dot(l) > lowered[best].dot(l) {
            best = i;
        }
    }
    best
}

/// Adds the directions in `(t0, t1)` where the maximizer of `b(x, ℓ)` switches
/// from `i` to `j`. Without them the hull of the light samples has slivers
/// across the corners of the boundary curve.
#[allow(clippy::too_many_arguments)]
fn push_breaks(
    lowered: &[AmbientVector],
    null: &[bool],
    t0: f64,
    t1: f64,
    i: usize,
    j: usize,
    depth: usize,
    out: &mut Vec<f64>,
) {
    let d = &lowered[i] - &lowered[j];
    let f = |t: f64| d.dot(&light_at(t));
    let (mut a, mut b) = (t0, t1);
    for _ in 0..80 {
        let m = 0.5 * (a + b);
        if f(m) >= 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    let t = 0.5 * (a + b);
    let l = light_at(t);
    let m = argmax_at(lowered, &l);
    let top = lowered[i].dot(&l).max(lowered[j].dot(&l));
    if depth > 0 && m != i && m != j && lowered[m].dot(&l) > top + 1e-14 * top.abs().max(1.0) {
        if !null[m] {
            push_breaks(lowered, null, t0, t, i, m, depth - 1, out);
            push_breaks(lowered, null, t, t1, m, j, depth - 1, out);
        }
    } else {
        out.push(t);
    }
}

/// Light-like directions on which the dual boundary is sampled: a uniform
/// circle plus the exact switch points of the maximizing vertex. Light-like
/// vertices put the dual at infinity near their direction, so switches
/// involving them are not refined.
fn light_boundary(lowered: &[AmbientVector], null: &[bool], n: usize) -> Vec<AmbientVector> {
    if n != 3 {
        return light_directions(n);
    }
    let step = 2.0 * std::f64::consts::PI / LIGHT_SAMPLES as f64;
    let mut ts = Vec::with_capacity(LIGHT_SAMPLES + 64);
    for k in 0..LIGHT_SAMPLES {
        let (t0, t1) = (k as f64 * step, (k + 1) as f64 * step);
        ts.push(t0);
        let (i, j) = (argmax_at(lowered, &light_at(t0)), argmax_at(lowered, &light_at(t1)));
        if i != j && !null[i] && !null[j] {
            push_breaks(lowered, null, t0, t1, i, j, 8, &mut ts);
        }
    }
    ts.into_iter().map(light_at).collect()
}

fn dual_vertices_from_hull(h: &Hull, points: &[AmbientVector], n: usize, flavor: Flavor) -> Vec<AmbientVector> {
    let mut out: Vec<AmbientVector> = Vec::new();
    match flavor {
        Flavor::Euclidean => {
            for f in &h.facets {
                push_unique(&mut out, &f.normal / f.offset, 1e-9);
            }
        }
        Flavor::Minkowski => {
            let b = minkowski_form(n);
            let lowered: Vec<_> = points.iter().map(|p| b.lower(p)).collect();
            for f in &h.facets {
                if f.offset >= 0.0 {
                    continue;
                }
                let y = b.lower(&f.normal) / (-f.offset);
                let y = if n == 3 { refit_plane(&lowered, y) } else { y };
                if y[n - 1] > 0.0 && b.q(&y) < -1e-9 * y.norm_squared() {
                    push_unique(&mut out, y, 1e-9);
                }
            }
            // light-like boundary: along ℓ the dual starts at ℓ/(-H_K(ℓ))
            let null: Vec<bool> = points.iter().map(|p| b.q(p).abs() <= 1e-9 * p.norm_squared()).collect();
            for l in light_boundary(&lowered, &null, n) {
                let hk = lowered.iter().map(|x| x.dot(&l)).fold(f64::NEG_INFINITY, f64::max);
                if hk < -1e-12 {
                    out.push(l / (-hk));
                }
            }
        }
    }
    out
}

/// Result of [`body_from_support`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampledBodies {
    /// Vertices of the sampled dual body: the hull of the radial boundary
    /// points `v/h(v)` (Euclidean) or `u/(-h(u))` (Minkowski).
    pub dual_vertices: Vec<AmbientVector>,
    /// Vertices of the envelope `{y : b(y, v_k) ≤ H(v_k)}` of the sampled
    /// support planes, i.e. the dual of the sampled dual body.
    pub envelope_vertices: Vec<AmbientVector>,
}

/// Radial boundary points of the dual body, `v_k/h_k` or `u_k/(-h_k)`.
pub fn dual_boundary(h: &SupportFunction) -> Vec<AmbientVector> {
    (0..h.grid.len())
        .map(|k| match h.flavor {
            Flavor::Euclidean => h.direction(k) / h.h(k),
            Flavor::Minkowski => h.direction(k) / (-h.h(k)),
        })
        .collect()
}

/// Neighbours of each hull vertex, indexed by position in `hl.vertices`.
/// Vertices sharing a facet count as neighbours.
fn vertex_graph(hl: &Hull) -> Vec<Vec<usize>> {
    let pos: std::collections::HashMap<usize, usize> = hl.vertices.iter().enumerate().map(|(k, &i)| (i, k)).collect();
    let mut adj = vec![Vec::new(); hl.vertices.len()];
    for f in &hl.facets {
        for &a in &f.verts {
            for &c in &f.verts {
                if a != c {
                    adj[pos[&a]].push(pos[&c]);
                }
            }
        }
    }
    for l in &mut adj {
        l.sort_unstable();
        l.dedup();
    }
    adj
}

/// Materializes the bodies encoded by sampled support values.
pub fn body_from_support(h: &SupportFunction) -> Result<SampledBodies> {
    h.check()?;
    let q = dual_boundary(h);
    let hl = hull(&q)?;
    let dual_vertices = hl.vertices.iter().map(|&i| q[i].clone()).collect();
    let envelope_vertices = dual_vertices_from_hull(&hl, &q, h.n(), h.flavor);
    Ok(SampledBodies { dual_vertices, envelope_vertices })
}

/// Support function of the sampled dual body, on the same grid:
/// `h*(w) = max_k ⟨v_k, w⟩/h_k` (Euclidean) or `max_k b(u_k, w)/(-h_k)`.
pub fn dual_support(h: &SupportFunction) -> Result<SupportFunction> {
    h.check()?;
    let q = dual_boundary(h);
    let hl = hull(&q)?;
    let b = match h.flavor {
        Flavor::Euclidean => BilinearForm::standard(h.n(), 0),
        Flavor::Minkowski => minkowski_form(h.n()),
    };
    let verts: Vec<_> = hl.vertices.iter().map(|&i| b.lower(&q[i])).collect();
    let adj = vertex_graph(&hl);
    // A linear function on a polytope has no local maxima on the edge graph
    // other than the global one, so climbing from the previous answer is exact.
    let mut at = 0;
    let values = h
        .grid
        .chart
        .iter()
        .map(|c| {
            let w = match h.flavor {
                Flavor::Euclidean => cube_direction(c),
                Flavor::Minkowski => with_one(c),
            };
            let mut best = verts[at].dot(&w);
            loop {
                let next =
                    adj[at]
                        .iter()
                        .map(|&j| (j, verts[j].dot(&w)))
                        .fold((at, best), |a, b| if b.1 > a.1 { b } else { a });
                if next.0 == at {
                    break best;
                }
                (at, best) = next;
            }
        })
        .collect();
    Ok(SupportFunction { flavor: h.flavor, grid: h.grid.clone(), values })
}

/// Apex of the dual of the truncation `K = F ∩ {b(x, v) ≤ -r}`: the cone
/// `v/r + F̄`.
pub fn truncation_dual(v: &AmbientVector, r: f64) -> Result<AmbientVector> {
    let n = v.len();
    if n < 2 {
        return Err(GeomError::DimensionMismatch { expected: 2, got: n });
    }
    let b = minkowski_form(n);
    if !(v[n - 1] > 0.0 && (b.q(v) + 1.0).abs() < 1e-9) {
        return Err(GeomError::NotAdmissible("v must be a future unit time-like vector".into()));
    }
    if !(r > 0.0) {
        return Err(GeomError::NotAdmissible(format!("truncation level r = {r} must be positive")));
    }
    Ok(v / r)
}

/// `(y', yₙ) ↦ (y'/yₙ, -1/yₙ)`, sending the dual body to the cylinder model.
pub fn cylinder_transform(samples: &[AmbientVector]) -> Result<Vec<AmbientVector>> {
    samples
        .iter()
        .map(|y| {
            let n = y.len();
            let t = y[n - 1];
            if t.abs() <= 1e-15 * y.norm() {
                return Err(GeomError::Precondition("sample on the hyperplane yₙ = 0".into()));
            }
            let mut out = y / t;
            out[n - 1] = -1.0 / t;
            Ok(out)
        })
        .collect()
}

/// Inverse of [`cylinder_transform`], `(X, S) ↦ (-X/S, -1/S)`.
pub fn inverse_cylinder_transform(samples: &[AmbientVector]) -> Result<Vec<AmbientVector>> {
    samples
        .iter()
        .map(|p| {
            let n = p.len();
            let s = p[n - 1];
            if s.abs() <= 1e-15 * p.norm() {
                return Err(GeomError::Precondition("sample at height 0".into()));
            }
            let yn = -1.0 / s;
            let mut out = p * yn;
            out[n - 1] = yn;
            Ok(out)
        })
        .collect()
}

/// Whether graph samples `(z, s)` lie on their lower convex hull within
/// `slack`, i.e. come from a convex function.
pub fn is_convex_graph(points: &[AmbientVector], slack: f64) -> Result<bool> {
    let n = points.first().ok_or(GeomError::Empty)?.len();
    let hl = match hull(points) {
        Ok(h) => h,
        // flat samples: affine, hence convex
        Err(GeomError::Precondition(_)) => return Ok(true),
        Err(e) => return Err(e),
    };
    let lower: Vec<_> = hl.facets.iter().filter(|f| f.normal[n - 1] < -1e-12).collect();
    Ok(points.iter().all(|p| {
        let z = p.rows(0, n - 1);
        let env = lower
            .iter()
            .map(|f| (f.offset - f.normal.rows(0, n - 1).dot(&z)) / f.normal[n - 1])
            .fold(f64::NEG_INFINITY, f64::max);
        p[n - 1] <= env + slack
    }))
}

/// Random admissible Euclidean body: points on random radii around the
/// origin, always containing a small cross-polytope.
pub fn random_euclidean_body<R: Rng>(rng: &mut R, n: usize, count: usize) -> Vec<AmbientVector> {
    let mut pts = Vec::with_capacity(count + 2 * n);
    for i in 0..n {
        for s in [-0.3, 0.3] {
            let mut e = DVector::zeros(n);
            e[i] = s;
            pts.push(e);
        }
    }
    while pts.len() < count + 2 * n {
        let d = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
        if d.norm() > 0.1 && d.norm() < 1.0 {
            pts.push(d.normalize() * rng.gen_range(0.5..2.0));
        }
    }
    pts
}

/// Random admissible Minkowski body: points `s·u` with `u` on the unit
/// hyperboloid over the disc of radius `spread` and `s ∈ [1, 2]`.
pub fn random_minkowski_body<R: Rng>(rng: &mut R, n: usize, count: usize, spread: f64) -> Vec<AmbientVector> {
    let mut pts = Vec::with_capacity(count);
    while pts.len() < count {
        let z = DVector::from_fn(n - 1, |_, _| rng.gen_range(-spread..spread));
        if z.norm() < spread {
            pts.push(hyperboloid_point(&z) * rng.gen_range(1.0..2.0));
        }
    }
    pts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::projective::{projective_distance, SpaceName};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_PI_2;

    fn v(c: &[f64]) -> AmbientVector {
        DVector::from_column_slice(c)
    }

    #[test]
    fn dual_cone_examples() {
        let b = BilinearForm::standard(2, 0);
        let c = PolyCone::generators(vec![v(&[1., 0.]), v(&[0., 1.])]);
        let d = dual_cone(&c, &b).unwrap();
        assert!(d.same_rays(&PolyCone::generators(vec![v(&[-1., 0.]), v(&[0., -1.])]), 1e-12));

        let b11 = BilinearForm::standard(1, 1);
        let f = PolyCone::generators(vec![v(&[1., 1.]), v(&[-1., 1.])]);
        assert!(dual_cone(&f, &b11).unwrap().same_rays(&f, 1e-12));

        let h = PolyCone::halfspaces(vec![v(&[1., 0.]), v(&[0., 1.])]);
        assert!(dual_cone(&h, &b).unwrap().same_rays(&PolyCone::generators(vec![v(&[1., 0.]), v(&[0., 1.])]), 1e-12));
        assert_eq!(dual_cone(&PolyCone::generators(vec![]), &b).unwrap_err(), GeomError::Empty);
        assert!(dual_cone(&PolyCone::generators(vec![v(&[1., 0.])]), &b).is_err());
    }

    #[test]
    fn dual_cone_is_involutive_on_random_cones() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for b in [BilinearForm::standard(3, 0), BilinearForm::standard(2, 1), BilinearForm::standard(3, 1)] {
            let d = b.dim();
            for _ in 0..20 {
                // generators in an open half-space make a pointed cone
                let gens: Vec<_> = (0..d + 3)
                    .map(|_| {
                        let mut x = DVector::from_fn(d, |_, _| rng.gen_range(-1.0..1.0));
                        x[0] = rng.gen_range(0.5..1.5);
                        x
                    })
                    .collect();
                let c = PolyCone::generators(gens.clone());
                let dd = dual_cone(&dual_cone(&c, &b).unwrap(), &b).unwrap();
                // every original generator lies in cone(dd) and every ray of dd is a generator
                for r in &dd.vectors {
                    assert!(gens.iter().any(|g| (g.normalize() - r).norm() < 1e-8));
                }
                let dual = dual_cone(&c, &b).unwrap();
                for g in &gens {
                    for y in &dual.vectors {
                        assert!(b.b(g, y) <= 1e-10);
                    }
                }
            }
        }
    }

    #[test]
    fn point_hyperplane_duality() {
        let ell = ModelSpace::named(SpaceName::Ell, 2);
        let x = ProjPoint::from_slice(&[0., 0., 1.]).unwrap();
        let h = dual_point(&ell, &x).unwrap();
        let basis = h.basis(&ell.form);
        for i in 0..basis.ncols() {
            assert!(basis[(2, i)].abs() < 1e-15);
        }
        for k in 0..12 {
            let t = k as f64 * 0.5;
            let y = ProjPoint::new(basis.column(0) * t.cos() + basis.column(1) * t.sin()).unwrap();
            assert!((projective_distance(&ell, &x, &y).unwrap() - FRAC_PI_2).abs() < 1e-12);
        }
        assert!(dual_hyperplane(&ell, &h).unwrap().eq_proj(&x));

        // a time-like plane of Hyp³ is dual to a point of dS³
        let hyp = ModelSpace::named(SpaceName::Hyp, 3);
        let plane =
            Hyperplane::from_basis(&hyp.form, &[v(&[0., 1., 0., 0.]), v(&[0., 0., 1., 0.]), v(&[0.3, 0., 0., 1.])])
                .unwrap();
        let p = dual_hyperplane(&hyp, &plane).unwrap();
        assert!(ModelSpace::named(SpaceName::DS, 3).contains(&p));

        let ads = ModelSpace::named(SpaceName::AdS, 3);
        let x = ProjPoint::from_slice(&[0.2, -0.1, 0.4, 1.0]).unwrap();
        let h = dual_point(&ads, &x).unwrap();
        let bas = h.basis(&ads.form);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let mut hits = 0;
        while hits < 50 {
            let y = &bas * DVector::from_fn(3, |_, _| rng.gen_range(-1.0..1.0));
            if ads.contains_vec(&y) {
                let d = projective_distance(&ads, &x, &ProjPoint::new(y).unwrap()).unwrap();
                assert!((d - FRAC_PI_2).abs() < 1e-9, "{d}");
                hits += 1;
            }
        }
        let light = ProjPoint::from_slice(&[1., 0., 0., 1.]).unwrap();
        assert_eq!(dual_point(&ModelSpace::named(SpaceName::Hyp, 3), &light).unwrap_err(), GeomError::Isotropic);
    }

    #[test]
    fn support_examples() {
        let spec = GridSpec { m: 9, radius: 0.8 };
        let mut cube = Vec::new();
        for s in 0..8 {
            cube.push(v(&[
                if s & 1 == 0 { -1.0 } else { 1.0 },
                if s & 2 == 0 { -1.0 } else { 1.0 },
                if s & 4 == 0 { -1.0 } else { 1.0 },
            ]));
        }
        let h = support_from_body(&cube, Flavor::Euclidean, spec).unwrap();
        for k in 0..h.grid.len() {
            let d = h.direction(k);
            assert!((h.values[k] - d.iter().map(|c| c.abs()).sum::<f64>()).abs() < 1e-14);
        }
        let sb = body_from_support(&h).unwrap();
        let mut cross = Vec::new();
        for i in 0..3 {
            for s in [-1.0, 1.0] {
                let mut e = DVector::zeros(3);
                e[i] = s;
                cross.push(e);
            }
        }
        assert_eq!(sb.dual_vertices.len(), 6);
        for c in &cross {
            assert!(sb.dual_vertices.iter().any(|x| (x - c).norm() < 1e-12));
        }
        // the envelope of exact support planes of the cube is the cube
        assert_eq!(sb.envelope_vertices.len(), 8);

        let ball = SupportFunction::constant(Flavor::Euclidean, 3, spec, 1.0);
        assert!(ball.values.iter().all(|&x| x == 1.0));

        let hyp = SupportFunction::constant(Flavor::Minkowski, 3, spec, 1.0);
        for k in 0..hyp.grid.len() {
            assert!((hyp.h(k) + 1.0).abs() < 1e-14);
        }
        assert!(matches!(
            support_from_body(&[v(&[1., 0., 0.5]), v(&[0., 0., 1.])], Flavor::Minkowski, spec),
            Err(GeomError::NotAdmissible(_))
        ));
        assert!(matches!(
            support_from_body(&[v(&[1., 1.]), v(&[2., 1.]), v(&[1., 2.])], Flavor::Euclidean, spec),
            Err(GeomError::NotAdmissible(_))
        ));
    }

    #[test]
    fn ball_and_hyperboloid_duals() {
        let spec = GridSpec { m: 16, radius: 0.8 };
        for n in [2, 3] {
            let r = 2.5;
            let b = SupportFunction::constant(Flavor::Euclidean, n, spec, r);
            for y in dual_boundary(&b) {
                assert!((y.norm() - 1.0 / r).abs() < 1e-12);
            }
            let ds = dual_support(&b).unwrap();
            assert!(ds.values.iter().all(|x| (x - 1.0 / r).abs() < 1e-12));

            let h = SupportFunction::constant(Flavor::Minkowski, n, spec, r);
            let mf = minkowski_form(n);
            for y in dual_boundary(&h) {
                assert!((mf.q(&y) + 1.0 / (r * r)).abs() < 1e-12);
            }
            let ds = dual_support(&h).unwrap();
            for k in 0..ds.grid.len() {
                assert!((ds.h(k) + 1.0 / r).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn double_dual_euclidean_and_minkowski() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let spec = GridSpec { m: 16, radius: 0.8 };
        for n in [2, 3] {
            for _ in 0..5 {
                let k = random_euclidean_body(&mut rng, n, 20);
                let kd = dual_body(&dual_body(&k, Flavor::Euclidean).unwrap(), Flavor::Euclidean).unwrap();
                let a = support_from_body(&k, Flavor::Euclidean, spec).unwrap();
                let b = support_from_body(&kd, Flavor::Euclidean, spec).unwrap();
                assert!(a.gap(&b) < 1e-9);

                let k = random_minkowski_body(&mut rng, n, 20, 0.97);
                let kd = dual_body(&dual_body(&k, Flavor::Minkowski).unwrap(), Flavor::Minkowski).unwrap();
                let a = support_from_body(&k, Flavor::Minkowski, spec).unwrap();
                let b = support_from_body(&kd, Flavor::Minkowski, spec).unwrap();
                assert!(a.gap(&b) < 1e-9, "{}", a.gap(&b));
                // the dual is admissible
                let mf = minkowski_form(n);
                assert!(dual_body(&k, Flavor::Minkowski)
                    .unwrap()
                    .iter()
                    .all(|y| y[n - 1] > 0.0 && mf.q(y) <= 1e-12 * y.norm_squared()));
            }
        }
    }

    #[test]
    fn envelope_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let spec = GridSpec { m: 12, radius: 0.8 };
        for flavor in [Flavor::Euclidean, Flavor::Minkowski] {
            let k = match flavor {
                Flavor::Euclidean => random_euclidean_body(&mut rng, 3, 25),
                Flavor::Minkowski => random_minkowski_body(&mut rng, 3, 25, 0.97),
            };
            let h = support_from_body(&k, flavor, spec).unwrap();
            let env = body_from_support(&h).unwrap().envelope_vertices;
            let back = support_from_body(&env, flavor, spec).unwrap();
            assert!(h.gap(&back) < 1e-9, "{flavor:?} {}", h.gap(&back));
        }
    }

    #[test]
    fn order_reversal_and_additivity() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let spec = GridSpec { m: 10, radius: 0.8 };
        for _ in 0..5 {
            let a = random_euclidean_body(&mut rng, 3, 15);
            let mut bb = a.clone();
            bb.extend(random_euclidean_body(&mut rng, 3, 10));
            let ha = support_from_body(&dual_body(&a, Flavor::Euclidean).unwrap(), Flavor::Euclidean, spec).unwrap();
            let hb = support_from_body(&dual_body(&bb, Flavor::Euclidean).unwrap(), Flavor::Euclidean, spec).unwrap();
            assert!(hb.values.iter().zip(&ha.values).all(|(x, y)| x <= &(y + 1e-12)));

            let a = random_minkowski_body(&mut rng, 3, 8, 0.9);
            let c = random_minkowski_body(&mut rng, 3, 8, 0.9);
            let sum: Vec<_> = a.iter().flat_map(|x| c.iter().map(move |y| x + y)).collect();
            let (ha, hc, hs) = (
                support_from_body(&a, Flavor::Minkowski, spec).unwrap(),
                support_from_body(&c, Flavor::Minkowski, spec).unwrap(),
                support_from_body(&sum, Flavor::Minkowski, spec).unwrap(),
            );
            for k in 0..hs.values.len() {
                assert!((hs.values[k] - ha.values[k] - hc.values[k]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn nonconvex_samples_rejected() {
        let spec = GridSpec { m: 8, radius: 0.8 };
        let mut h = SupportFunction::constant(Flavor::Euclidean, 3, spec, 1.0);
        let t = h.grid.triples[10];
        h.values[t[1]] = 1.5;
        assert!(matches!(body_from_support(&h), Err(GeomError::NonConvex(_))));
        let mut h = SupportFunction::constant(Flavor::Minkowski, 3, spec, 1.0);
        let t = h.grid.triples[10];
        h.values[t[1]] = -0.1;
        assert!(matches!(body_from_support(&h), Err(GeomError::NonConvex(_))));
    }

    #[test]
    fn truncation_examples() {
        let v0 = v(&[0., 0., 1.]);
        assert!((truncation_dual(&v0, 2.0).unwrap() - v(&[0., 0., 0.5])).norm() < 1e-15);
        let w = v(&[0.3f64.sinh(), 0.0, 0.3f64.cosh()]);
        assert!((truncation_dual(&w, 1.0).unwrap() - &w).norm() < 1e-15);
        assert!(truncation_dual(&v(&[1., 0., 0.]), 1.0).is_err());
        assert!(truncation_dual(&v0, 0.0).is_err());
    }

    #[test]
    fn cylinder_examples() {
        let hyp: Vec<_> = (-20..=20).map(|k| k as f64 * 0.1).map(|t| v(&[t.sinh(), t.cosh()])).collect();
        let img = cylinder_transform(&hyp).unwrap();
        for p in &img {
            // unit hyperbola goes to the graph of h̄(z) = -√(1-z²)
            assert!((p[1] + (1.0 - p[0] * p[0]).sqrt()).abs() < 1e-12);
        }
        assert!(is_convex_graph(&img, 1e-12).unwrap());
        let back = inverse_cylinder_transform(&img).unwrap();
        for (a, b) in hyp.iter().zip(&back) {
            assert!((a - b).norm() < 1e-12);
        }
        assert!(cylinder_transform(&[v(&[1., 0.])]).is_err());
        // a concave graph is flagged
        let bad: Vec<_> = (-5..=5).map(|k| v(&[k as f64 * 0.1, -(k as f64 * 0.1).powi(2)])).collect();
        assert!(!is_convex_graph(&bad, 1e-12).unwrap());
    }

    #[test]
    fn dual_to_cylinder_is_graph_of_hbar() {
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        let spec = GridSpec { m: 10, radius: 0.8 };
        let k = random_minkowski_body(&mut rng, 3, 12, 0.9);
        let h = support_from_body(&k, Flavor::Minkowski, spec).unwrap();
        let img = cylinder_transform(&dual_boundary(&h)).unwrap();
        for (p, (z, hb)) in img.iter().zip(h.grid.chart.iter().zip(&h.values)) {
            assert!((p.rows(0, 2) - z).norm() < 1e-12 && (p[2] - hb).abs() < 1e-12);
        }
        assert!(is_convex_graph(&img, 1e-10).unwrap());
    }

    #[test]
    fn angles_match_co_euclidean_distance() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let coe = ModelSpace::named(SpaceName::CoEuc, 2);
        for _ in 0..100 {
            let n1 = DVector::from_fn(2, |_, _| rng.gen_range(-1.0..1.0)).normalize();
            let n2 = DVector::from_fn(2, |_, _| rng.gen_range(-1.0..1.0)).normalize();
            let (c1, c2) = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let p1 = ProjPoint::from_slice(&[n1[0], n1[1], -c1]).unwrap();
            let p2 = ProjPoint::from_slice(&[n2[0], n2[1], -c2]).unwrap();
            let d = projective_distance(&coe, &p1, &p2).unwrap();
            assert!((d.cos() - n1.dot(&n2).abs()).abs() < 1e-9);
        }
    }
}
