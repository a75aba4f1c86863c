//! Chart-level geometry over the configuration space Q = R^n.
//!
//! Everything is written in the global chart: points of the iterated bundles
//! TQ, T*Q, T*TQ, T*T*Q and T*(Q x Q) are tuples of real vectors, and the
//! canonical maps between them are explicit coordinate formulas.  The two
//! that matter downstream are the canonical antisymplectomorphism between
//! T*T*Q and T*TQ,
//!
//! ```text
//! (q, p, mu_q, mu_p)  |->  (q, mu_p, -mu_q, p)
//! ```
//!
//! and the complete lifts of a vector field X on Q,
//!
//! ```text
//! to TQ:   (x, v)  |->  (X(x),  DX(x) v)
//! to T*Q:  (q, p)  |->  (X(q), -DX(q)^T p)
//! ```
//!
//! which satisfy the pairing identity checked by [`pairing_residual`].

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::numeric;

fn ensure_finite(context: &'static str, v: &DVector<f64>) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(context))
    }
}

fn ensure_len(context: &'static str, expected: usize, v: &DVector<f64>) -> Result<()> {
    if v.len() == expected {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            context,
            expected,
            actual: v.len(),
        })
    }
}

/// A point (q, p) of the phase space T*Q.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasePoint {
    pub q: DVector<f64>,
    pub p: DVector<f64>,
}

impl PhasePoint {
    pub fn new(q: DVector<f64>, p: DVector<f64>) -> Result<Self> {
        if q.is_empty() {
            return Err(Error::InvalidInput("phase point needs dimension >= 1".into()));
        }
        ensure_len("PhasePoint", q.len(), &p)?;
        ensure_finite("PhasePoint.q", &q)?;
        ensure_finite("PhasePoint.p", &p)?;
        Ok(Self { q, p })
    }

    pub fn dim(&self) -> usize {
        self.q.len()
    }

    /// Stacks (q, p) into a single 2n vector, the layout used by solvers
    /// and finite-difference probes.
    pub fn to_vector(&self) -> DVector<f64> {
        let n = self.dim();
        let mut z = DVector::zeros(2 * n);
        z.rows_mut(0, n).copy_from(&self.q);
        z.rows_mut(n, n).copy_from(&self.p);
        z
    }

    /// Splits a stacked 2n vector back into (q, p).
    pub fn from_vector(z: &DVector<f64>) -> Result<Self> {
        if z.len() % 2 != 0 || z.is_empty() {
            return Err(Error::InvalidInput(format!(
                "stacked phase vector must have even positive length, got {}",
                z.len()
            )));
        }
        let n = z.len() / 2;
        Self::new(z.rows(0, n).into_owned(), z.rows(n, n).into_owned())
    }
}

/// A point (x, v) of the tangent bundle TQ.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentPoint {
    pub x: DVector<f64>,
    pub v: DVector<f64>,
}

impl TangentPoint {
    pub fn new(x: DVector<f64>, v: DVector<f64>) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::InvalidInput("tangent point needs dimension >= 1".into()));
        }
        ensure_len("TangentPoint", x.len(), &v)?;
        ensure_finite("TangentPoint.x", &x)?;
        ensure_finite("TangentPoint.v", &v)?;
        Ok(Self { x, v })
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }
}

/// A covector on TQ: base point (x, v) with fibre components (p_x, p_v).
#[derive(Debug, Clone, PartialEq)]
pub struct CotangentOfTangent {
    pub x: DVector<f64>,
    pub v: DVector<f64>,
    pub p_x: DVector<f64>,
    pub p_v: DVector<f64>,
}

impl CotangentOfTangent {
    pub fn new(
        x: DVector<f64>,
        v: DVector<f64>,
        p_x: DVector<f64>,
        p_v: DVector<f64>,
    ) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::InvalidInput("covector needs dimension >= 1".into()));
        }
        let n = x.len();
        ensure_len("CotangentOfTangent.v", n, &v)?;
        ensure_len("CotangentOfTangent.p_x", n, &p_x)?;
        ensure_len("CotangentOfTangent.p_v", n, &p_v)?;
        for (name, vec) in [("x", &x), ("v", &v), ("p_x", &p_x), ("p_v", &p_v)] {
            ensure_finite("CotangentOfTangent", vec).map_err(|_| Error::NonFinite(name))?;
        }
        Ok(Self { x, v, p_x, p_v })
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn base(&self) -> TangentPoint {
        TangentPoint {
            x: self.x.clone(),
            v: self.v.clone(),
        }
    }
}

/// A covector on T*Q: base point (q, p) with fibre components (mu_q, mu_p).
#[derive(Debug, Clone, PartialEq)]
pub struct CotangentOfCotangent {
    pub q: DVector<f64>,
    pub p: DVector<f64>,
    pub mu_q: DVector<f64>,
    pub mu_p: DVector<f64>,
}

impl CotangentOfCotangent {
    pub fn new(
        q: DVector<f64>,
        p: DVector<f64>,
        mu_q: DVector<f64>,
        mu_p: DVector<f64>,
    ) -> Result<Self> {
        if q.is_empty() {
            return Err(Error::InvalidInput("covector needs dimension >= 1".into()));
        }
        let n = q.len();
        ensure_len("CotangentOfCotangent.p", n, &p)?;
        ensure_len("CotangentOfCotangent.mu_q", n, &mu_q)?;
        ensure_len("CotangentOfCotangent.mu_p", n, &mu_p)?;
        for (name, vec) in [("q", &q), ("p", &p), ("mu_q", &mu_q), ("mu_p", &mu_p)] {
            ensure_finite("CotangentOfCotangent", vec).map_err(|_| Error::NonFinite(name))?;
        }
        Ok(Self { q, p, mu_q, mu_p })
    }

    pub fn dim(&self) -> usize {
        self.q.len()
    }

    pub fn base(&self) -> PhasePoint {
        PhasePoint {
            q: self.q.clone(),
            p: self.p.clone(),
        }
    }
}

/// A covector on Q x Q: the pair ((q_a, mu_a), (q_b, mu_b)).
///
/// This is where discrete dynamics lives; the two legs are the start and end
/// covectors of one step.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductCovector {
    pub q_a: DVector<f64>,
    pub mu_a: DVector<f64>,
    pub q_b: DVector<f64>,
    pub mu_b: DVector<f64>,
}

impl ProductCovector {
    pub fn new(
        q_a: DVector<f64>,
        mu_a: DVector<f64>,
        q_b: DVector<f64>,
        mu_b: DVector<f64>,
    ) -> Result<Self> {
        if q_a.is_empty() {
            return Err(Error::InvalidInput("covector needs dimension >= 1".into()));
        }
        let n = q_a.len();
        ensure_len("ProductCovector.mu_a", n, &mu_a)?;
        ensure_len("ProductCovector.q_b", n, &q_b)?;
        ensure_len("ProductCovector.mu_b", n, &mu_b)?;
        for (name, vec) in [("q_a", &q_a), ("mu_a", &mu_a), ("q_b", &q_b), ("mu_b", &mu_b)] {
            ensure_finite("ProductCovector", vec).map_err(|_| Error::NonFinite(name))?;
        }
        Ok(Self {
            q_a,
            mu_a,
            q_b,
            mu_b,
        })
    }

    pub fn dim(&self) -> usize {
        self.q_a.len()
    }
}

/// The canonical antisymplectomorphism T*T*Q -> T*TQ in chart coordinates:
/// (q, p, mu_q, mu_p) -> (q, mu_p, -mu_q, p).
pub fn to_tangent_covector(w: &CotangentOfCotangent) -> CotangentOfTangent {
    CotangentOfTangent {
        x: w.q.clone(),
        v: w.mu_p.clone(),
        p_x: -&w.mu_q,
        p_v: w.p.clone(),
    }
}

/// Inverse of [`to_tangent_covector`]: (x, v, p_x, p_v) -> (x, p_v, -p_x, v).
pub fn to_cotangent_covector(z: &CotangentOfTangent) -> CotangentOfCotangent {
    CotangentOfCotangent {
        q: z.x.clone(),
        p: z.p_v.clone(),
        mu_q: -&z.p_x,
        mu_p: z.v.clone(),
    }
}

type FieldEvalFn = dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync;
type FieldJacFn = dyn Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync;

/// A vector field on Q with Jacobian access, analytic or central-difference.
pub struct VectorField {
    dim: usize,
    eval: Box<FieldEvalFn>,
    jacobian: Box<FieldJacFn>,
}

impl VectorField {
    /// Field from an evaluation closure; the Jacobian falls back to central
    /// finite differences.
    pub fn new<F>(dim: usize, eval: F) -> Self
    where
        F: Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + Clone + 'static,
    {
        let fd_eval = eval.clone();
        Self {
            dim,
            eval: Box::new(eval),
            jacobian: Box::new(move |q| {
                numeric::central_jacobian(|x| Ok(fd_eval(x)), q, q.len())
                    .expect("finite-difference jacobian of a total closure")
            }),
        }
    }

    /// Field with an analytic Jacobian.
    pub fn with_jacobian<F, J>(dim: usize, eval: F, jacobian: J) -> Self
    where
        F: Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
        J: Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static,
    {
        Self {
            dim,
            eval: Box::new(eval),
            jacobian: Box::new(jacobian),
        }
    }

    /// Random componentwise-polynomial field of degree three with analytic
    /// Jacobian; coefficients uniform in [-1, 1].
    ///
    /// X_i(q) = c0_i + sum_j (c1_ij q_j + c2_ij q_j^2 + c3_ij q_j^3)
    pub fn random_polynomial<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Self {
        let c0 = DVector::from_fn(dim, |_, _| rng.random_range(-1.0..1.0));
        let c1 = DMatrix::from_fn(dim, dim, |_, _| rng.random_range(-1.0..1.0));
        let c2 = DMatrix::from_fn(dim, dim, |_, _| rng.random_range(-1.0..1.0));
        let c3 = DMatrix::from_fn(dim, dim, |_, _| rng.random_range(-1.0..1.0));
        let (e0, e1, e2, e3) = (c0.clone(), c1.clone(), c2.clone(), c3.clone());
        Self::with_jacobian(
            dim,
            move |q| {
                let q2 = q.map(|x| x * x);
                let q3 = q.map(|x| x * x * x);
                &e0 + &e1 * q + &e2 * q2 + &e3 * q3
            },
            move |q| {
                DMatrix::from_fn(dim, dim, |i, j| {
                    c1[(i, j)] + 2.0 * c2[(i, j)] * q[j] + 3.0 * c3[(i, j)] * q[j] * q[j]
                })
            },
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval(&self, q: &DVector<f64>) -> Result<DVector<f64>> {
        ensure_len("VectorField::eval", self.dim, q)?;
        Ok((self.eval)(q))
    }

    pub fn jacobian(&self, q: &DVector<f64>) -> Result<DMatrix<f64>> {
        ensure_len("VectorField::jacobian", self.dim, q)?;
        Ok((self.jacobian)(q))
    }

    /// Complete lift to TQ at (x, v): returns (X(x), DX(x) v).
    pub fn tangent_lift(&self, pt: &TangentPoint) -> Result<(DVector<f64>, DVector<f64>)> {
        ensure_len("VectorField::tangent_lift", self.dim, &pt.x)?;
        Ok((self.eval(&pt.x)?, self.jacobian(&pt.x)? * &pt.v))
    }

    /// Complete lift to T*Q at (q, p): returns (X(q), -DX(q)^T p).
    pub fn cotangent_lift(&self, pt: &PhasePoint) -> Result<(DVector<f64>, DVector<f64>)> {
        ensure_len("VectorField::cotangent_lift", self.dim, &pt.q)?;
        Ok((
            self.eval(&pt.q)?,
            -(self.jacobian(&pt.q)?.transpose() * &pt.p),
        ))
    }
}

/// Residual of the pairing identity relating the two complete lifts through
/// the canonical antisymplectomorphism:
///
/// ```text
/// < I(w), X^C(base(I(w))) >  =  - < w, X^{C*}(base(w)) >
/// ```
///
/// Both sides are computed independently; the return value is |lhs - rhs|,
/// zero in exact arithmetic for any field and covector.
pub fn pairing_residual(field: &VectorField, w: &CotangentOfCotangent) -> Result<f64> {
    ensure_len("pairing_residual", field.dim(), &w.q)?;
    let z = to_tangent_covector(w);
    let (base_rate, fibre_rate) = field.tangent_lift(&z.base())?;
    let lhs = z.p_x.dot(&base_rate) + z.p_v.dot(&fibre_rate);

    let (q_rate, p_rate) = field.cotangent_lift(&w.base())?;
    let rhs = -(w.mu_q.dot(&q_rate) + w.mu_p.dot(&p_rate));
    Ok((lhs - rhs).abs())
}

/// Canonical symplectic matrix [[0, I], [-I, 0]] of size 2n x 2n.
pub fn canonical_symplectic_matrix(n: usize) -> DMatrix<f64> {
    let mut omega = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        omega[(i, n + i)] = 1.0;
        omega[(n + i, i)] = -1.0;
    }
    omega
}
