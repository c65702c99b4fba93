//! Projective points, model spaces, lines, the absolute and cross-ratio distance.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, GeomError, Result};
use crate::forms::{AmbientVector, BilinearForm, EIG_ZERO};
use crate::numeric;

/// Angular tolerance for projective equality.
pub const PROJ_EQ: f64 = 1e-10;

/// A point of ℝP^n, stored as a unit representative whose last nonzero
/// coordinate is positive.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ProjPoint {
    rep: AmbientVector,
}

impl TryFrom<Vec<f64>> for ProjPoint {
    type Error = GeomError;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        ProjPoint::new(DVector::from_vec(v))
    }
}

impl From<ProjPoint> for Vec<f64> {
    fn from(p: ProjPoint) -> Self {
        p.rep.iter().copied().collect()
    }
}

impl ProjPoint {
    pub fn new(v: AmbientVector) -> Result<Self> {
        let n = v.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(GeomError::ZeroVector);
        }
        let mut rep = v / n;
        if let Some(last) = rep.iter().rev().find(|c| c.abs() > 1e-15) {
            if *last < 0.0 {
                rep = -rep;
            }
        }
        Ok(Self { rep })
    }

    pub fn from_slice(c: &[f64]) -> Result<Self> {
        Self::new(DVector::from_column_slice(c))
    }

    pub fn rep(&self) -> &AmbientVector {
        &self.rep
    }

    pub fn dim(&self) -> usize {
        self.rep.len()
    }

    /// Projective equality: representatives parallel within [`PROJ_EQ`].
    pub fn eq_proj(&self, other: &ProjPoint) -> bool {
        self.dim() == other.dim() && (&self.rep - &other.rep).norm().min((&self.rep + &other.rep).norm()) < PROJ_EQ
    }
}

impl PartialEq for ProjPoint {
    fn eq(&self, other: &Self) -> bool {
        self.eq_proj(other)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SpaceName {
    Ell,
    Hyp,
    DS,
    AdS,
    Euc,
    Min,
    CoEuc,
    CoMin,
}

impl SpaceName {
    pub const ALL: [SpaceName; 8] = [
        SpaceName::Ell,
        SpaceName::Hyp,
        SpaceName::DS,
        SpaceName::AdS,
        SpaceName::Euc,
        SpaceName::Min,
        SpaceName::CoEuc,
        SpaceName::CoMin,
    ];

    pub fn label(self) -> &'static str {
        match self {
            SpaceName::Ell => "Ell",
            SpaceName::Hyp => "Hyp",
            SpaceName::DS => "dS",
            SpaceName::AdS => "AdS",
            SpaceName::Euc => "Euc",
            SpaceName::Min => "Min",
            SpaceName::CoEuc => "coEuc",
            SpaceName::CoMin => "coMin",
        }
    }
}

/// A model space: a form plus the sign selecting `b⁻¹(±1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpace {
    pub form: BilinearForm,
    pub sign: f64,
    pub name: Option<SpaceName>,
}

impl ModelSpace {
    /// The named n-dimensional space.
    pub fn named(name: SpaceName, n: usize) -> Self {
        let form = match name {
            SpaceName::Ell => BilinearForm::standard(n + 1, 0),
            SpaceName::Hyp | SpaceName::DS => BilinearForm::standard(n, 1),
            SpaceName::AdS => BilinearForm::standard(n - 1, 2),
            SpaceName::CoEuc => BilinearForm::co_euclidean(n),
            SpaceName::CoMin => BilinearForm::co_minkowski(n),
            SpaceName::Euc | SpaceName::Min => {
                let mut d = vec![0.0; n];
                d.push(1.0);
                BilinearForm::diagonal(&d)
            }
        };
        let sign = match name {
            SpaceName::Hyp | SpaceName::AdS | SpaceName::CoMin => -1.0,
            _ => 1.0,
        };
        Self { form, sign, name: Some(name) }
    }

    /// An unnamed space `(form, sign)`.
    pub fn custom(form: BilinearForm, sign: f64) -> Self {
        Self { form, sign: sign.signum(), name: None }
    }

    /// Dimension n of the space (ambient n+1).
    pub fn n(&self) -> usize {
        self.form.dim() - 1
    }

    pub fn is_degenerate(&self) -> bool {
        self.form.is_degenerate()
    }

    /// Metric of the affine chart for Euc/Min, `b_{n,0}` or `b_{n-1,1}` on the
    /// first n coordinates.
    pub fn affine_metric(&self) -> Option<BilinearForm> {
        match self.name? {
            SpaceName::Euc => Some(BilinearForm::standard(self.n(), 0)),
            SpaceName::Min => Some(BilinearForm::standard(self.n() - 1, 1)),
            _ => None,
        }
    }

    pub fn contains_vec(&self, x: &AmbientVector) -> bool {
        x.len() == self.form.dim() && self.sign * self.form.q(x) > 1e-12 * x.norm_squared()
    }

    pub fn contains(&self, p: &ProjPoint) -> bool {
        self.contains_vec(p.rep())
    }

    /// Representative rescaled onto the pseudo-sphere `b(x,x) = sign`.
    pub fn lift(&self, p: &ProjPoint) -> Result<AmbientVector> {
        if !self.contains(p) {
            return Err(self.not_in(p.rep()));
        }
        Ok(p.rep() / (self.sign * self.form.q(p.rep())).sqrt())
    }

    fn not_in(&self, x: &AmbientVector) -> GeomError {
        GeomError::NotInSpace {
            space: self.to_string(),
            detail: format!("sign*b(x,x) = {:e}", self.sign * self.form.q(x)),
        }
    }
}

impl fmt::Display for ModelSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.name {
            Some(n) => write!(f, "{}{}", n.label(), self.n()),
            None => write!(f, "({:?}, {})", self.form.signature(), self.sign),
        }
    }
}

impl FromStr for ModelSpace {
    type Err = GeomError;
    /// Parses labels such as `Ell2`, `AdS3`, `coMin3`.
    fn from_str(s: &str) -> Result<Self> {
        let split = s.find(|c: char| c.is_ascii_digit()).unwrap_or(s.len());
        let (head, tail) = s.split_at(split);
        let n: usize =
            tail.parse().map_err(|_| GeomError::Precondition(format!("space label '{s}' needs a dimension suffix")))?;
        let name = SpaceName::ALL
            .into_iter()
            .find(|k| k.label().eq_ignore_ascii_case(head))
            .ok_or_else(|| GeomError::Precondition(format!("unknown space '{head}'")))?;
        if n < 1 || (name == SpaceName::AdS && n < 2) || ((name == SpaceName::CoMin || name == SpaceName::Min) && n < 2)
        {
            return Err(GeomError::Precondition(format!("dimension {n} too small for {head}")));
        }
        Ok(ModelSpace::named(name, n))
    }
}

/// A projective line, stored by a Euclidean-orthonormal basis of its 2-plane.
#[derive(Debug, Clone)]
pub struct ProjLine {
    u: AmbientVector,
    v: AmbientVector,
}

impl ProjLine {
    pub fn from_span(a: &AmbientVector, b: &AmbientVector) -> Result<Self> {
        check_dim(a.len(), b.len())?;
        let na = a.norm();
        if na == 0.0 {
            return Err(GeomError::ZeroVector);
        }
        let u = a / na;
        let w = b - &u * u.dot(b);
        let nw = w.norm();
        if nw <= PROJ_EQ * b.norm() || nw == 0.0 {
            return Err(GeomError::CoincidentPoints);
        }
        let w = w / nw;
        // one Gram–Schmidt pass again for orthogonality at roundoff level
        let w = &w - &u * u.dot(&w);
        let v = &w / w.norm();
        Ok(Self { u, v })
    }

    pub fn basis(&self) -> [&AmbientVector; 2] {
        [&self.u, &self.v]
    }

    /// Coordinates of an ambient vector of the plane in the line basis.
    pub fn coords(&self, x: &AmbientVector) -> Vector2<f64> {
        Vector2::new(self.u.dot(x), self.v.dot(x))
    }

    pub fn point(&self, c: Vector2<f64>) -> AmbientVector {
        &self.u * c[0] + &self.v * c[1]
    }

    pub fn contains(&self, x: &AmbientVector) -> bool {
        let c = self.coords(x);
        (x - self.point(c)).norm() <= 1e-10 * x.norm()
    }

    fn gram(&self, b: &BilinearForm) -> Matrix2<f64> {
        Matrix2::new(b.b(&self.u, &self.u), b.b(&self.u, &self.v), b.b(&self.u, &self.v), b.b(&self.v, &self.v))
    }
}

pub fn line_through(x: &ProjPoint, y: &ProjPoint) -> Result<ProjLine> {
    check_dim(x.dim(), y.dim())?;
    if x.eq_proj(y) {
        return Err(GeomError::CoincidentPoints);
    }
    ProjLine::from_span(x.rep(), y.rep())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LineType {
    Elliptic,
    Parabolic,
    Hyperbolic,
}

impl fmt::Display for LineType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LineType::Elliptic => "elliptic",
            LineType::Parabolic => "parabolic",
            LineType::Hyperbolic => "hyperbolic",
        })
    }
}

pub fn classify_line(space: &ModelSpace, l: &ProjLine) -> LineType {
    let r = space.form.restrict(&[l.u.clone(), l.v.clone()]).expect("orthonormal basis is independent");
    let s = r.signature();
    if s.z >= 1 {
        LineType::Parabolic
    } else if s.p == 1 && s.q == 1 {
        LineType::Hyperbolic
    } else {
        LineType::Elliptic
    }
}

/// Homogeneous point of ℂP¹.
pub type CPoint = Vector2<Complex64>;

/// The two intersection points of a line with the absolute, in line coordinates.
#[derive(Debug, Clone)]
pub struct AbsolutePair {
    pub roots: [CPoint; 2],
    pub double: bool,
    /// The whole line lies in the absolute.
    pub degenerate: bool,
}

pub fn absolute_points(space: &ModelSpace, l: &ProjLine) -> AbsolutePair {
    let g = l.gram(&space.form);
    let eig = g.symmetric_eigen();
    let (l1, l2) = (eig.eigenvalues[0], eig.eigenvalues[1]);
    let e1 = eig.eigenvectors.column(0).map(|c| Complex64::new(c, 0.0));
    let e2 = eig.eigenvectors.column(1).map(|c| Complex64::new(c, 0.0));
    let scale = l1.abs().max(l2.abs());
    let thr = EIG_ZERO * scale;
    if scale == 0.0 || (l1.abs() <= thr && l2.abs() <= thr) {
        return AbsolutePair { roots: [e1, e2], double: true, degenerate: true };
    }
    if l1.abs() <= thr {
        return AbsolutePair { roots: [e1, e1], double: true, degenerate: false };
    }
    if l2.abs() <= thr {
        return AbsolutePair { roots: [e2, e2], double: true, degenerate: false };
    }
    let a = Complex64::new(l2.abs().sqrt(), 0.0);
    let c = if l1 * l2 < 0.0 { Complex64::new(l1.abs().sqrt(), 0.0) } else { Complex64::new(0.0, l1.abs().sqrt()) };
    AbsolutePair { roots: [e1 * a + e2 * c, e1 * a - e2 * c], double: false, degenerate: false }
}

/// Extended complex value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtComplex {
    Finite(Complex64),
    Infinity,
}

impl ExtComplex {
    pub fn finite(self) -> Option<Complex64> {
        match self {
            ExtComplex::Finite(z) => Some(z),
            ExtComplex::Infinity => None,
        }
    }
}

fn cdet(a: &CPoint, b: &CPoint) -> Complex64 {
    a[0] * b[1] - a[1] * b[0]
}

fn coincide(a: &CPoint, b: &CPoint) -> bool {
    cdet(a, b).norm() <= 1e-12 * a.norm() * b.norm()
}

/// Homogeneous point of ℂP¹ for an affine value (`None` is ∞).
pub fn cpoint(z: Option<Complex64>) -> CPoint {
    match z {
        Some(z) => Vector2::new(z, Complex64::new(1.0, 0.0)),
        None => Vector2::new(Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)),
    }
}

/// `[x,y,q,p] = ((x−q)/(y−q))·((y−p)/(x−p))` on homogeneous coordinates.
pub fn cross_ratio(x: &CPoint, y: &CPoint, q: &CPoint, p: &CPoint) -> Result<ExtComplex> {
    let pairs = [coincide(x, y), coincide(x, q), coincide(y, q), coincide(p, x), coincide(p, y), coincide(p, q)];
    if pairs[..3].iter().any(|&c| c) || pairs[3..].iter().filter(|&&c| c).count() > 1 {
        return Err(GeomError::CrossRatioUndefined);
    }
    if pairs[3] {
        return Ok(ExtComplex::Infinity);
    }
    if pairs[4] {
        return Ok(ExtComplex::Finite(Complex64::new(0.0, 0.0)));
    }
    if pairs[5] {
        return Ok(ExtComplex::Finite(Complex64::new(1.0, 0.0)));
    }
    Ok(ExtComplex::Finite(cdet(x, q) * cdet(y, p) / (cdet(y, q) * cdet(x, p))))
}

/// Cross-ratio distance `|½ Log [x,y,I,J]|`.
pub fn projective_distance(space: &ModelSpace, x: &ProjPoint, y: &ProjPoint) -> Result<f64> {
    check_dim(space.form.dim(), x.dim())?;
    check_dim(space.form.dim(), y.dim())?;
    for p in [x, y] {
        if !space.contains(p) {
            return Err(space.not_in(p.rep()));
        }
    }
    if x.eq_proj(y) {
        return Ok(0.0);
    }
    let l = line_through(x, y)?;
    if classify_line(space, &l) == LineType::Parabolic {
        return Ok(0.0);
    }
    let abs = absolute_points(space, &l);
    let real = |c: Vector2<f64>| c.map(|v| Complex64::new(v, 0.0));
    let cx = real(l.coords(x.rep()));
    let cy = real(l.coords(y.rep()));
    let cr = cross_ratio(&cx, &cy, &abs.roots[0], &abs.roots[1])?.finite().ok_or(GeomError::CrossRatioUndefined)?;
    Ok((0.5 * cr.ln()).norm())
}

/// Closed-form distance: `arccos|b̂|` on elliptic lines, `arccosh|b̂|` on
/// hyperbolic ones, 0 on parabolic ones, with `b̂` the form on normalized lifts.
pub fn closed_form_distance(space: &ModelSpace, x: &ProjPoint, y: &ProjPoint) -> Result<f64> {
    let (lx, ly) = (space.lift(x)?, space.lift(y)?);
    if x.eq_proj(y) {
        return Ok(0.0);
    }
    let c = space.form.b(&lx, &ly).abs();
    Ok(match classify_line(space, &line_through(x, y)?) {
        LineType::Parabolic => 0.0,
        LineType::Elliptic => c.min(1.0).acos(),
        LineType::Hyperbolic => c.max(1.0).acosh(),
    })
}

/// Distance between two lifts on the pseudo-sphere, by inversion of
/// `sign·b(x̃,ỹ) = cos d` or `cosh d`.
pub fn pseudo_distance_lift(space: &ModelSpace, x: &AmbientVector, y: &AmbientVector) -> Result<f64> {
    check_dim(space.form.dim(), x.len())?;
    check_dim(space.form.dim(), y.len())?;
    for v in [x, y] {
        if (space.form.q(v) - space.sign).abs() > 1e-9 * v.norm_squared().max(1.0) {
            return Err(space.not_in(v));
        }
    }
    let c = space.sign * space.form.b(x, y);
    let l = match ProjLine::from_span(x, y) {
        Ok(l) => l,
        // parallel lifts: equal or antipodal
        Err(_) => return Ok(if c > 0.0 { 0.0 } else { std::f64::consts::PI }),
    };
    Ok(match classify_line(space, &l) {
        LineType::Parabolic => 0.0,
        LineType::Elliptic => c.clamp(-1.0, 1.0).acos(),
        LineType::Hyperbolic => {
            if c < 1.0 - 1e-12 {
                return Err(GeomError::DifferentBranch(c));
            }
            c.max(1.0).acosh()
        }
    })
}

/// Length `∫ √|b(γ̇,γ̇)|` of the geodesic arc between two lifts, by
/// Gauss–Legendre quadrature along the normalized chord.
pub fn geodesic_length_quadrature(space: &ModelSpace, x: &AmbientVector, y: &AmbientVector) -> f64 {
    let b = &space.form;
    let s = space.sign;
    let d = y - x;
    let speed = |t: f64| {
        let c = x + &d * t;
        let n = s * b.q(&c);
        let g = (&d - &c * (s * b.b(&c, &d) / n)) / n.sqrt();
        b.q(&g).abs().sqrt()
    };
    numeric::integrate(speed, 0.0, 1.0, 32, 16)
}

/// Euclidean-orthonormal basis of `n^⊥`, as columns.
pub(crate) fn orth_complement(n: &AmbientVector) -> DMatrix<f64> {
    let dim = n.len();
    let u = n / n.norm();
    let proj = DMatrix::identity(dim, dim) - &u * u.transpose();
    let sym = proj.symmetric_eigen();
    let cols: Vec<_> =
        (0..dim).filter(|&i| sym.eigenvalues[i] > 0.5).map(|i| sym.eigenvectors.column(i).into_owned()).collect();
    DMatrix::from_columns(&cols)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    fn p(c: &[f64]) -> ProjPoint {
        ProjPoint::from_slice(c).unwrap()
    }
    fn v(c: &[f64]) -> AmbientVector {
        DVector::from_column_slice(c)
    }
    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn normalization_and_equality() {
        let a = p(&[2.0, 0.0, -2.0]);
        assert!(a.rep()[2] > 0.0);
        assert!((a.rep().norm() - 1.0).abs() < 1e-15);
        assert_eq!(a, p(&[-1.0, 0.0, 1.0]));
        assert_ne!(a, p(&[1.0, 0.0, 1.0]));
        assert!(ProjPoint::from_slice(&[0.0, 0.0]).is_err());
    }

    #[test]
    fn line_through_examples() {
        let l = line_through(&p(&[1., 0., 0.]), &p(&[0., 1., 0.])).unwrap();
        assert!(l.contains(&v(&[3., -2., 0.])));
        assert!(!l.contains(&v(&[0., 0., 1.])));
        let l = line_through(&p(&[1., 0., 1.]), &p(&[0., 1., 1.])).unwrap();
        assert!(l.contains(&v(&[1., 0., 1.])) && l.contains(&v(&[0., 1., 1.])));
        assert!(matches!(line_through(&p(&[1., 2., 3.]), &p(&[2., 4., 6.])), Err(GeomError::CoincidentPoints)));
    }

    #[test]
    fn classify_examples() {
        let ds = ModelSpace::named(SpaceName::DS, 2);
        let l = ProjLine::from_span(&v(&[1., 0., 0.]), &v(&[0., 1., 0.])).unwrap();
        assert_eq!(classify_line(&ds, &l), LineType::Elliptic);
        let hyp = ModelSpace::named(SpaceName::Hyp, 2);
        let l = ProjLine::from_span(&v(&[1., 0., 0.]), &v(&[0., 0., 1.])).unwrap();
        assert_eq!(classify_line(&hyp, &l), LineType::Hyperbolic);
        let coe = ModelSpace::named(SpaceName::CoEuc, 2);
        let l = ProjLine::from_span(&v(&[1., 0., 0.]), &v(&[0., 0., 1.])).unwrap();
        assert_eq!(classify_line(&coe, &l), LineType::Parabolic);
    }

    fn same_cpoint(a: &CPoint, b: &CPoint) -> bool {
        coincide(a, b)
    }

    #[test]
    fn absolute_examples() {
        let ell = ModelSpace::named(SpaceName::Ell, 2);
        let l = ProjLine::from_span(&v(&[1., 0., 0.]), &v(&[0., 1., 0.])).unwrap();
        let a = absolute_points(&ell, &l);
        let i = Vector2::new(c(0., 1.), c(1., 0.));
        let j = Vector2::new(c(0., -1.), c(1., 0.));
        assert!(!a.double);
        assert!(
            (same_cpoint(&a.roots[0], &i) && same_cpoint(&a.roots[1], &j))
                || (same_cpoint(&a.roots[0], &j) && same_cpoint(&a.roots[1], &i))
        );

        let h = ModelSpace::custom(BilinearForm::standard(1, 1), -1.0);
        let l = ProjLine::from_span(&v(&[1., 0.]), &v(&[0., 1.])).unwrap();
        let a = absolute_points(&h, &l);
        let r1 = Vector2::new(c(1., 0.), c(1., 0.));
        let r2 = Vector2::new(c(1., 0.), c(-1., 0.));
        assert!(a.roots.iter().any(|r| same_cpoint(r, &r1)) && a.roots.iter().any(|r| same_cpoint(r, &r2)));

        let coe = ModelSpace::named(SpaceName::CoEuc, 2);
        let l = ProjLine::from_span(&v(&[1., 0., 0.]), &v(&[0., 0., 1.])).unwrap();
        let a = absolute_points(&coe, &l);
        assert!(a.double && !a.degenerate);
        let l = ProjLine::from_span(&v(&[0., 0., 1.]), &v(&[1., 1., 1.])).unwrap();
        let ds = ModelSpace::named(SpaceName::DS, 2);
        let _ = absolute_points(&ds, &l);
        let mn = ModelSpace::named(SpaceName::Min, 2);
        let l = ProjLine::from_span(&v(&[1., 0., 0.]), &v(&[0., 1., 0.])).unwrap();
        assert!(absolute_points(&mn, &l).degenerate);
    }

    #[test]
    fn cross_ratio_examples() {
        let inf = cpoint(None);
        let zero = cpoint(Some(c(0., 0.)));
        let one = cpoint(Some(c(1., 0.)));
        let pp = c(0.3, -1.7);
        let r = cross_ratio(&inf, &zero, &one, &cpoint(Some(pp))).unwrap().finite().unwrap();
        assert!((r - pp).norm() < 1e-15);
        let r = cross_ratio(&cpoint(Some(c(2., 0.))), &zero, &one, &cpoint(Some(c(3., 0.)))).unwrap();
        // ((2−1)/(0−1))·((0−3)/(2−3))
        let expect = ((2.0 - 1.0) / (0.0 - 1.0)) * ((0.0 - 3.0) / (2.0 - 3.0));
        assert!((r.finite().unwrap() - c(expect, 0.)).norm() < 1e-14);
        let x = cpoint(Some(c(2., 1.)));
        let y = cpoint(Some(c(-1., 0.5)));
        let q = cpoint(Some(c(0.2, 0.)));
        assert_eq!(cross_ratio(&x, &y, &q, &q).unwrap(), ExtComplex::Finite(c(1., 0.)));
        assert_eq!(cross_ratio(&x, &y, &q, &x).unwrap(), ExtComplex::Infinity);
        assert_eq!(cross_ratio(&x, &y, &q, &y).unwrap(), ExtComplex::Finite(c(0., 0.)));
        assert!(cross_ratio(&x, &x, &q, &y).is_err());
    }

    #[test]
    fn distance_examples() {
        let ell = ModelSpace::named(SpaceName::Ell, 2);
        let d = projective_distance(&ell, &p(&[1., 0., 0.]), &p(&[0., 1., 0.])).unwrap();
        assert!((d - FRAC_PI_2).abs() < 1e-12);
        let s = 0.5f64.sqrt();
        let d = projective_distance(&ell, &p(&[1., 0., 0.]), &p(&[s, s, 0.])).unwrap();
        assert!((d - FRAC_PI_4).abs() < 1e-12);
        let hyp = ModelSpace::named(SpaceName::Hyp, 2);
        let d = projective_distance(&hyp, &p(&[0., 0., 1.]), &p(&[0., 1f64.sinh(), 1f64.cosh()])).unwrap();
        assert!((d - 1.0).abs() < 1e-12);
        assert!(projective_distance(&hyp, &p(&[1., 0., 0.]), &p(&[0., 0., 1.])).is_err());
    }

    #[test]
    fn lift_examples() {
        let ell = ModelSpace::named(SpaceName::Ell, 1);
        let d = pseudo_distance_lift(&ell, &v(&[1., 0.]), &v(&[0., 1.])).unwrap();
        assert!((d - FRAC_PI_2).abs() < 1e-14);
        let h = ModelSpace::named(SpaceName::Hyp, 1);
        let d = pseudo_distance_lift(&h, &v(&[0., 1.]), &v(&[2f64.sinh(), 2f64.cosh()])).unwrap();
        assert!((d - 2.0).abs() < 1e-12);
        assert!(matches!(
            pseudo_distance_lift(&h, &v(&[0., 1.]), &v(&[-2f64.sinh(), -2f64.cosh()])),
            Err(GeomError::DifferentBranch(_))
        ));
    }

    fn random_in(space: &ModelSpace, rng: &mut ChaCha8Rng) -> ProjPoint {
        loop {
            let x = DVector::from_fn(space.form.dim(), |_, _| rng.gen_range(-2.0..2.0));
            if space.sign * space.form.q(&x) > 0.05 * x.norm_squared() {
                return ProjPoint::new(x).unwrap();
            }
        }
    }

    #[test]
    fn quadrature_agrees_with_inversion() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for name in [SpaceName::Hyp, SpaceName::Ell, SpaceName::DS, SpaceName::AdS] {
            let s = ModelSpace::named(name, 3);
            for _ in 0..50 {
                let x = s.lift(&random_in(&s, &mut rng)).unwrap();
                let mut y = s.lift(&random_in(&s, &mut rng)).unwrap();
                if s.sign * s.form.b(&x, &y) < 0.0 {
                    y = -y;
                }
                let d = pseudo_distance_lift(&s, &x, &y).unwrap();
                let q = geodesic_length_quadrature(&s, &x, &y);
                assert!((d - q).abs() < 1e-8, "{name:?}: {d} vs {q}");
            }
        }
    }

    #[test]
    fn distance_invariants() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for name in [SpaceName::Ell, SpaceName::Hyp, SpaceName::DS, SpaceName::AdS] {
            let s = ModelSpace::named(name, 2.max(if name == SpaceName::AdS { 3 } else { 2 }));
            for _ in 0..200 {
                let x = random_in(&s, &mut rng);
                let y = random_in(&s, &mut rng);
                let l = line_through(&x, &y).unwrap();
                let cx = l.coords(x.rep()).map(|v| c(v, 0.));
                let cy = l.coords(y.rep()).map(|v| c(v, 0.));
                let ab = absolute_points(&s, &l);
                let cr = cross_ratio(&cx, &cy, &ab.roots[0], &ab.roots[1]).unwrap().finite().unwrap();
                match classify_line(&s, &l) {
                    LineType::Elliptic => assert!(cr.ln().re.abs() < 1e-9),
                    LineType::Hyperbolic => assert!(cr.im.abs() < 1e-9 * cr.norm() && cr.re > 0.0),
                    LineType::Parabolic => {}
                }
                let d = projective_distance(&s, &x, &y).unwrap();
                assert!((d - projective_distance(&s, &y, &x).unwrap()).abs() < 1e-12);
                let m = s.form.random_isometry(&mut rng, 0.7);
                let gx = ProjPoint::new(&m * x.rep()).unwrap();
                let gy = ProjPoint::new(&m * y.rep()).unwrap();
                assert!((d - projective_distance(&s, &gx, &gy).unwrap()).abs() < 1e-9);
                let anti = ModelSpace::custom(s.form.negated(), -s.sign);
                assert!((d - projective_distance(&anti, &x, &y).unwrap()).abs() < 1e-12);
                assert!(d > 0.0);
            }
        }
    }

    #[test]
    fn classify_matches_roots() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for name in [SpaceName::Ell, SpaceName::Hyp, SpaceName::AdS, SpaceName::CoMin] {
            let s = ModelSpace::named(name, 3);
            for _ in 0..10_000 {
                let a = DVector::from_fn(4, |_, _| rng.gen_range(-1.0..1.0));
                let b = DVector::from_fn(4, |_, _| rng.gen_range(-1.0..1.0));
                let l = ProjLine::from_span(&a, &b).unwrap();
                let ab = absolute_points(&s, &l);
                let real = ab.roots.iter().all(|r| r.iter().all(|z| z.im.abs() < 1e-14));
                match classify_line(&s, &l) {
                    LineType::Parabolic => assert!(ab.double),
                    LineType::Hyperbolic => assert!(!ab.double && real),
                    LineType::Elliptic => assert!(!ab.double && !real),
                }
            }
        }
    }

    #[test]
    fn parse_labels() {
        let s: ModelSpace = "AdS3".parse().unwrap();
        assert_eq!(s.form, BilinearForm::standard(2, 2));
        assert_eq!(s.to_string(), "AdS3");
        assert!("Foo2".parse::<ModelSpace>().is_err());
        assert!("Ell".parse::<ModelSpace>().is_err());
    }
}
