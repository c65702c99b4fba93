//! Symmetric bilinear forms of arbitrary signature.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, GeomError, Result};

/// Homogeneous coordinates in ℝ^{n+1}.
pub type AmbientVector = DVector<f64>;

/// Relative threshold under which an eigenvalue counts as zero.
pub const EIG_ZERO: f64 = 1e-9;
/// Relative threshold for light-likeness, `τ = 1e-9 |x|²`.
pub const LIGHT_ZERO: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Signature {
    pub p: usize,
    pub q: usize,
    pub z: usize,
}

impl Signature {
    pub fn new(p: usize, q: usize, z: usize) -> Self {
        Self { p, q, z }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VectorClass {
    Spacelike,
    Timelike,
    Lightlike,
}

#[derive(Serialize, Deserialize)]
struct FormRecord {
    dim: usize,
    matrix: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FormRecord", into = "FormRecord")]
pub struct BilinearForm {
    matrix: DMatrix<f64>,
    signature: Signature,
}

impl TryFrom<FormRecord> for BilinearForm {
    type Error = GeomError;
    fn try_from(r: FormRecord) -> Result<Self> {
        check_dim(r.dim, r.matrix.len())?;
        for row in &r.matrix {
            check_dim(r.dim, row.len())?;
        }
        let m = DMatrix::from_fn(r.dim, r.dim, |i, j| r.matrix[i][j]);
        BilinearForm::new(m)
    }
}

impl From<BilinearForm> for FormRecord {
    fn from(b: BilinearForm) -> Self {
        let n = b.dim();
        FormRecord { dim: n, matrix: (0..n).map(|i| (0..n).map(|j| b.matrix[(i, j)]).collect()).collect() }
    }
}

fn signature_of(m: &DMatrix<f64>, scale: f64) -> Signature {
    let eig = m.clone().symmetric_eigen();
    let thr = EIG_ZERO * scale;
    let mut s = Signature::new(0, 0, 0);
    for &l in eig.eigenvalues.iter() {
        if l > thr {
            s.p += 1;
        } else if l < -thr {
            s.q += 1;
        } else {
            s.z += 1;
        }
    }
    s
}

fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    m.clone().symmetric_eigen().eigenvalues.amax()
}

impl BilinearForm {
    /// Builds a form from a matrix, symmetric to 1e-12 relative.
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return Err(GeomError::DimensionMismatch { expected: matrix.nrows(), got: matrix.ncols() });
        }
        let asym = (&matrix - matrix.transpose()).amax();
        if asym > 1e-12 * matrix.amax().max(1.0) {
            return Err(GeomError::NotSymmetric(asym));
        }
        let matrix = (&matrix + matrix.transpose()) * 0.5;
        let rho = spectral_radius(&matrix);
        Ok(Self { signature: signature_of(&matrix, rho), matrix })
    }

    fn with_scale(matrix: DMatrix<f64>, scale: f64) -> Self {
        let matrix = (&matrix + matrix.transpose()) * 0.5;
        Self { signature: signature_of(&matrix, scale), matrix }
    }

    pub fn diagonal(entries: &[f64]) -> Self {
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(entries))).unwrap()
    }

    /// `b_{p,q}`: p entries +1 then q entries −1.
    pub fn standard(p: usize, q: usize) -> Self {
        let d: Vec<f64> = std::iter::repeat_n(1.0, p).chain(std::iter::repeat_n(-1.0, q)).collect();
        Self::diagonal(&d)
    }

    /// `b* = x₁y₁ + … + xₙyₙ` on ℝ^{n+1}.
    pub fn co_euclidean(n: usize) -> Self {
        let mut d = vec![1.0; n];
        d.push(0.0);
        Self::diagonal(&d)
    }

    /// `b*₋ = x₁y₁ + … + x_{n-1}y_{n-1} − xₙyₙ` on ℝ^{n+1}.
    pub fn co_minkowski(n: usize) -> Self {
        let mut d = vec![1.0; n - 1];
        d.push(-1.0);
        d.push(0.0);
        Self::diagonal(&d)
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn signature(&self) -> Signature {
        self.signature
    }

    pub fn is_degenerate(&self) -> bool {
        self.signature.z > 0
    }

    pub fn negated(&self) -> Self {
        Self { matrix: -&self.matrix, signature: Signature::new(self.signature.q, self.signature.p, self.signature.z) }
    }

    pub fn eval(&self, x: &AmbientVector, y: &AmbientVector) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        check_dim(self.dim(), y.len())?;
        Ok(self.b(x, y))
    }

    /// Unchecked evaluation for internal hot paths.
    #[inline]
    pub fn b(&self, x: &AmbientVector, y: &AmbientVector) -> f64 {
        x.dot(&(&self.matrix * y))
    }

    #[inline]
    pub fn q(&self, x: &AmbientVector) -> f64 {
        self.b(x, x)
    }

    /// The covector `b(x, ·)` as a column vector.
    pub fn lower(&self, x: &AmbientVector) -> AmbientVector {
        &self.matrix * x
    }

    pub fn classify_vector(&self, x: &AmbientVector) -> Result<VectorClass> {
        check_dim(self.dim(), x.len())?;
        let n2 = x.norm_squared();
        if n2 == 0.0 {
            return Err(GeomError::ZeroVector);
        }
        let v = self.q(x);
        Ok(if v > LIGHT_ZERO * n2 {
            VectorClass::Spacelike
        } else if v < -LIGHT_ZERO * n2 {
            VectorClass::Timelike
        } else {
            VectorClass::Lightlike
        })
    }

    /// Gram matrix on the span of `basis`, with signature recomputed at the
    /// scale `ρ(b)·max|e_i|²`.
    pub fn restrict(&self, basis: &[AmbientVector]) -> Result<BilinearForm> {
        if basis.is_empty() {
            return Err(GeomError::Empty);
        }
        for e in basis {
            check_dim(self.dim(), e.len())?;
        }
        let e = DMatrix::from_columns(basis);
        let sv = e.clone().svd(false, false).singular_values;
        let smax = sv.max();
        if smax == 0.0 || sv.min() <= 1e-10 * smax || basis.len() > self.dim() {
            return Err(GeomError::DependentBasis);
        }
        let g = e.transpose() * &self.matrix * &e;
        let scale = spectral_radius(&self.matrix) * basis.iter().map(|v| v.norm_squared()).fold(0.0, f64::max);
        Ok(Self::with_scale(g, scale))
    }

    /// Whether `m` preserves the form, `mᵀ J m = J`, to `tol`.
    pub fn preserved_by(&self, m: &DMatrix<f64>, tol: f64) -> bool {
        (m.transpose() * &self.matrix * m - &self.matrix).amax() < tol
    }

    /// A random element of O(b) near the identity component, `exp(J S)` with S
    /// antisymmetric. Only valid for diagonal ±1 forms.
    pub fn random_isometry<R: Rng>(&self, rng: &mut R, scale: f64) -> DMatrix<f64> {
        let a = self.random_generator(rng, scale);
        a.exp()
    }

    /// A random b-antisymmetric generator `J S` (J diagonal ±1 or 0).
    pub fn random_generator<R: Rng>(&self, rng: &mut R, scale: f64) -> DMatrix<f64> {
        let n = self.dim();
        let mut s = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in (i + 1)..n {
                let v = rng.gen_range(-scale..scale);
                s[(i, j)] = v;
                s[(j, i)] = -v;
            }
        }
        &self.matrix * s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn v(c: &[f64]) -> AmbientVector {
        DVector::from_column_slice(c)
    }

    #[test]
    fn eval_examples() {
        let b30 = BilinearForm::standard(3, 0);
        assert_eq!(b30.eval(&v(&[1., 0., 0.]), &v(&[0., 1., 0.])).unwrap(), 0.0);
        let b21 = BilinearForm::standard(2, 1);
        assert_eq!(b21.eval(&v(&[0., 0., 1.]), &v(&[0., 0., 1.])).unwrap(), -1.0);
        let b11 = BilinearForm::standard(1, 1);
        // x₁y₁ − x₂y₂ expanded by hand
        assert_eq!(b11.eval(&v(&[1., 1.]), &v(&[1., -1.])).unwrap(), 2.0);
        assert!(matches!(b11.eval(&v(&[1.0]), &v(&[1., 0.])), Err(GeomError::DimensionMismatch { .. })));
    }

    #[test]
    fn classify_examples() {
        let b = BilinearForm::standard(2, 1);
        assert_eq!(b.classify_vector(&v(&[1., 0., 0.])).unwrap(), VectorClass::Spacelike);
        assert_eq!(b.classify_vector(&v(&[1., 0., 1.])).unwrap(), VectorClass::Lightlike);
        assert_eq!(b.classify_vector(&v(&[0.1, 0.1, 1.])).unwrap(), VectorClass::Timelike);
        assert_eq!(b.classify_vector(&v(&[0., 0., 0.])), Err(GeomError::ZeroVector));
    }

    #[test]
    fn restrict_examples() {
        let b = BilinearForm::standard(2, 1);
        let r = b.restrict(&[v(&[1., 0., 0.]), v(&[0., 1., 0.])]).unwrap();
        assert_eq!(r.signature(), Signature::new(2, 0, 0));
        assert_eq!(r.matrix(), BilinearForm::standard(2, 0).matrix());
        let r = b.restrict(&[v(&[1., 0., 0.]), v(&[0., 0., 1.])]).unwrap();
        assert_eq!(r.signature(), Signature::new(1, 1, 0));
        let r = b.restrict(&[v(&[1., 0., 1.])]).unwrap();
        assert_eq!(r.signature(), Signature::new(0, 0, 1));
        assert_eq!(b.restrict(&[v(&[1., 0., 1.]), v(&[2., 0., 2.])]), Err(GeomError::DependentBasis));
    }

    #[test]
    fn degenerate_signatures() {
        assert_eq!(BilinearForm::co_euclidean(3).signature(), Signature::new(3, 0, 1));
        assert_eq!(BilinearForm::co_minkowski(3).signature(), Signature::new(2, 1, 1));
    }

    #[test]
    fn rejects_asymmetric() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(matches!(BilinearForm::new(m), Err(GeomError::NotSymmetric(_))));
    }

    #[test]
    fn json_round_trip() {
        let b = BilinearForm::standard(2, 1);
        let s = serde_json::to_string(&b).unwrap();
        assert_eq!(s, r#"{"dim":3,"matrix":[[1.0,0.0,0.0],[0.0,1.0,0.0],[0.0,0.0,-1.0]]}"#);
        let back: BilinearForm = serde_json::from_str(&s).unwrap();
        assert_eq!(back, b);
        assert!(serde_json::from_str::<BilinearForm>(r#"{"dim":2,"matrix":[[1,2],[0,1]]}"#).is_err());
    }

    #[test]
    fn random_isometries_preserve_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for (p, q) in [(3, 0), (2, 1), (2, 2), (3, 1)] {
            let b = BilinearForm::standard(p, q);
            for _ in 0..20 {
                let m = b.random_isometry(&mut rng, 1.0);
                assert!(b.preserved_by(&m, 1e-9));
            }
        }
    }

    #[test]
    fn bilinearity_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let b = BilinearForm::standard(2, 2);
        for _ in 0..100 {
            let x = DVector::from_fn(4, |_, _| rng.gen_range(-1.0..1.0));
            let y = DVector::from_fn(4, |_, _| rng.gen_range(-1.0..1.0));
            let z = DVector::from_fn(4, |_, _| rng.gen_range(-1.0..1.0));
            let (a, c) = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let lhs = b.b(&(&x * a + &y * c), &z);
            assert!((lhs - a * b.b(&x, &z) - c * b.b(&y, &z)).abs() < 1e-10);
            assert_eq!(b.b(&x, &y), b.b(&y, &x));
        }
    }

    #[test]
    fn signature_congruence_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for b in [BilinearForm::standard(2, 1), BilinearForm::co_minkowski(3), BilinearForm::standard(1, 3)] {
            let n = b.dim();
            for _ in 0..50 {
                let p = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0)) + DMatrix::identity(n, n) * 2.0;
                let c = BilinearForm::new(p.transpose() * b.matrix() * &p).unwrap();
                assert_eq!(c.signature(), b.signature());
            }
        }
    }

    #[test]
    fn random_planes_match_normal_forms() {
        // A 2-plane is elliptic, hyperbolic or degenerate according to how many
        // real isotropic directions its Gram matrix admits.
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let b = BilinearForm::standard(2, 1);
        for _ in 0..500 {
            let e1 = DVector::from_fn(3, |_, _| rng.gen_range(-1.0..1.0));
            let e2 = DVector::from_fn(3, |_, _| rng.gen_range(-1.0..1.0));
            let r = b.restrict(&[e1.clone(), e2.clone()]).unwrap();
            let g = r.matrix();
            let det = g[(0, 0)] * g[(1, 1)] - g[(0, 1)] * g[(0, 1)];
            let sig = r.signature();
            if det < -1e-6 {
                assert_eq!(sig, Signature::new(1, 1, 0));
            } else if det > 1e-6 {
                assert!(sig == Signature::new(2, 0, 0) || sig == Signature::new(0, 2, 0));
            }
        }
    }
}
