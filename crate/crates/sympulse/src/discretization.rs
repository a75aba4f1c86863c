//! Discretization maps: smooth maps (x, v) -> (y1, y2) from TQ into Q x Q
//! that fix the zero section, R(x, 0) = (x, x), and whose fibre derivatives
//! at v = 0 differ by the identity,
//!
//! ```text
//! D(x, 0) - B(x, 0) = I,   jacobian blocks [[A, B], [C, D]].
//! ```
//!
//! Each such map encodes a one-step numerical scheme as a correspondence of
//! endpoint pairs.  The module ships the theta family, an adjoint combinator,
//! a midpoint map on 3x3 matrix groups, and sampling sweeps that verify the
//! two axioms and equivariance under a linear group action.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::geometry::TangentPoint;
use crate::numeric;
use crate::symmetry::LinearGroupAction;

type EvalFn =
    dyn Fn(&DVector<f64>, &DVector<f64>) -> Result<(DVector<f64>, DVector<f64>)> + Send + Sync;
type JacFn = dyn Fn(&DVector<f64>, &DVector<f64>) -> Result<DMatrix<f64>> + Send + Sync;
type SampleFn = dyn Fn(&mut dyn RngCore) -> DVector<f64> + Send + Sync;

/// An evaluatable discretization map with Jacobian access.
///
/// Values are immutable after construction and cheap to clone.
#[derive(Clone)]
pub struct DiscretizationMap {
    dim: usize,
    name: String,
    eval: Arc<EvalFn>,
    jacobian: Arc<JacFn>,
    base_sampler: Arc<SampleFn>,
}

impl std::fmt::Debug for DiscretizationMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DiscretizationMap")
            .field("dim", &self.dim)
            .field("name", &self.name)
            .finish()
    }
}

fn default_sampler(dim: usize) -> Arc<SampleFn> {
    Arc::new(move |rng: &mut dyn RngCore| {
        DVector::from_fn(dim, |_, _| rand::Rng::random_range(&mut *rng, -2.0..2.0))
    })
}

impl DiscretizationMap {
    /// Map from plain evaluation and Jacobian closures.
    fn from_parts(
        dim: usize,
        name: impl Into<String>,
        eval: Arc<EvalFn>,
        jacobian: Arc<JacFn>,
    ) -> Self {
        Self {
            dim,
            name: name.into(),
            eval,
            jacobian,
            base_sampler: default_sampler(dim),
        }
    }

    /// Replaces the base-point sampler used by verification sweeps.  Maps
    /// whose valid domain is smaller than a coordinate box (the matrix-group
    /// midpoint, say) install a sampler that stays on it.
    pub fn with_base_sampler<S>(mut self, sampler: S) -> Self
    where
        S: Fn(&mut dyn RngCore) -> DVector<f64> + Send + Sync + 'static,
    {
        self.base_sampler = Arc::new(sampler);
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Evaluates the map at (x, v), returning the endpoint pair (y1, y2).
    pub fn eval(&self, pt: &TangentPoint) -> Result<(DVector<f64>, DVector<f64>)> {
        self.check_dim(pt)?;
        (self.eval)(&pt.x, &pt.v)
    }

    /// Full 2n x 2n Jacobian [[A, B], [C, D]] at (x, v).
    pub fn jacobian(&self, pt: &TangentPoint) -> Result<DMatrix<f64>> {
        self.check_dim(pt)?;
        (self.jacobian)(&pt.x, &pt.v)
    }

    /// Draws a base point from the map's working domain.
    pub fn sample_base(&self, rng: &mut dyn RngCore) -> DVector<f64> {
        (self.base_sampler)(rng)
    }

    fn check_dim(&self, pt: &TangentPoint) -> Result<()> {
        if pt.dim() == self.dim {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                context: "DiscretizationMap",
                expected: self.dim,
                actual: pt.dim(),
            })
        }
    }
}

/// The theta family R(x, v) = (x - theta v, x + (1 - theta) v).
///
/// theta = 0 is the explicit Euler pair, theta = 1/2 the midpoint rule,
/// theta = 1 implicit Euler.  The Jacobian is constant with determinant one.
pub fn theta_map(theta: f64, dim: usize) -> Result<DiscretizationMap> {
    if !(0.0..=1.0).contains(&theta) || !theta.is_finite() {
        return Err(Error::ThetaOutOfRange(theta));
    }
    let eval: Arc<EvalFn> = Arc::new(move |x, v| Ok((x - theta * v, x + (1.0 - theta) * v)));
    let mut jac = DMatrix::zeros(2 * dim, 2 * dim);
    for i in 0..dim {
        jac[(i, i)] = 1.0;
        jac[(i, dim + i)] = -theta;
        jac[(dim + i, i)] = 1.0;
        jac[(dim + i, dim + i)] = 1.0 - theta;
    }
    let jacobian: Arc<JacFn> = Arc::new(move |_, _| Ok(jac.clone()));
    Ok(DiscretizationMap::from_parts(
        dim,
        format!("theta({theta})"),
        eval,
        jacobian,
    ))
}

/// Midpoint map, theta = 1/2.
pub fn midpoint_map(dim: usize) -> DiscretizationMap {
    theta_map(0.5, dim).expect("0.5 lies in [0, 1]")
}

/// User-supplied map; a central-difference Jacobian is installed when no
/// analytic one is given.
pub fn custom_map<F>(
    dim: usize,
    name: impl Into<String>,
    eval: F,
    jacobian: Option<Box<JacFn>>,
) -> DiscretizationMap
where
    F: Fn(&DVector<f64>, &DVector<f64>) -> (DVector<f64>, DVector<f64>)
        + Send
        + Sync
        + Clone
        + 'static,
{
    let eval_arc: Arc<EvalFn> = Arc::new(move |x, v| Ok(eval(x, v)));
    let jacobian: Arc<JacFn> = match jacobian {
        Some(jac) => Arc::from(jac),
        None => {
            let fd_eval = eval_arc.clone();
            Arc::new(move |x: &DVector<f64>, v: &DVector<f64>| {
                let n = x.len();
                let mut z = DVector::zeros(2 * n);
                z.rows_mut(0, n).copy_from(x);
                z.rows_mut(n, n).copy_from(v);
                numeric::central_jacobian(
                    |zz| {
                        let (y1, y2) = fd_eval(&zz.rows(0, n).into_owned(), &zz.rows(n, n).into_owned())?;
                        let mut out = DVector::zeros(2 * n);
                        out.rows_mut(0, n).copy_from(&y1);
                        out.rows_mut(n, n).copy_from(&y2);
                        Ok(out)
                    },
                    &z,
                    2 * n,
                )
            })
        }
    };
    DiscretizationMap::from_parts(dim, name, eval_arc, jacobian)
}

/// Adjoint of a discretization map: swap the endpoints of the map evaluated
/// at the reversed velocity,
///
/// ```text
/// R*(x, v) = swap(R(x, -v)).
/// ```
///
/// The Jacobian follows by the chain rule: negate the v-columns of the inner
/// Jacobian at (x, -v) and swap the block rows.  The adjoint of a
/// discretization map is again one, and adjoint is an involution.
pub fn adjoint_map(map: &DiscretizationMap) -> DiscretizationMap {
    let dim = map.dim;
    let inner_eval = map.eval.clone();
    let inner_jac = map.jacobian.clone();
    let eval: Arc<EvalFn> = Arc::new(move |x, v| {
        let (y1, y2) = inner_eval(x, &(-v))?;
        Ok((y2, y1))
    });
    let jacobian: Arc<JacFn> = Arc::new(move |x, v| {
        let j = inner_jac(x, &(-v))?;
        let n = dim;
        let mut out = DMatrix::zeros(2 * n, 2 * n);
        // [[C, -D], [A, -B]] from inner [[A, B], [C, D]] at (x, -v)
        out.view_mut((0, 0), (n, n)).copy_from(&j.view((n, 0), (n, n)));
        out.view_mut((0, n), (n, n)).copy_from(&(-j.view((n, n), (n, n))));
        out.view_mut((n, 0), (n, n)).copy_from(&j.view((0, 0), (n, n)));
        out.view_mut((n, n), (n, n)).copy_from(&(-j.view((0, n), (n, n))));
        Ok(out)
    });
    DiscretizationMap {
        dim,
        name: format!("adjoint({})", map.name),
        eval,
        jacobian,
        base_sampler: map.base_sampler.clone(),
    }
}

/// Result of the two-axiom sampling sweep.
#[derive(Debug, Clone)]
pub struct AxiomReport {
    /// max over sampled x of the max-abs entry of eval(x, 0) - (x, x)
    pub zero_section_defect: f64,
    /// max over sampled x of the max-abs entry of (D - B)(x, 0) - I
    pub rigidity_defect: f64,
    pub samples: usize,
    pub tol: f64,
    pub passed: bool,
}

/// Samples base points and measures both discretization-map axioms.
pub fn check_axioms<R: RngCore>(
    map: &DiscretizationMap,
    sample_count: usize,
    tol: f64,
    rng: &mut R,
) -> Result<AxiomReport> {
    let n = map.dim;
    let zero = DVector::zeros(n);
    let identity = DMatrix::<f64>::identity(n, n);
    let mut zero_section_defect: f64 = 0.0;
    let mut rigidity_defect: f64 = 0.0;
    for _ in 0..sample_count {
        let x = map.sample_base(rng);
        let pt = TangentPoint::new(x.clone(), zero.clone())?;
        let (y1, y2) = map.eval(&pt)?;
        zero_section_defect = zero_section_defect
            .max((&y1 - &x).amax())
            .max((&y2 - &x).amax());
        let jac = map.jacobian(&pt)?;
        let b = jac.view((0, n), (n, n));
        let d = jac.view((n, n), (n, n));
        rigidity_defect = rigidity_defect.max((d - b - &identity).amax());
    }
    let passed = zero_section_defect <= tol && rigidity_defect <= tol;
    Ok(AxiomReport {
        zero_section_defect,
        rigidity_defect,
        samples: sample_count,
        tol,
        passed,
    })
}

/// Outcome of a max-defect sampling sweep.
#[derive(Debug, Clone)]
pub struct DefectReport {
    pub max_defect: f64,
    pub samples: usize,
    pub tol: f64,
    pub passed: bool,
}

/// Measures how far the map is from commuting with a linear group action:
/// max over sampled (M, x, v) of |R(Mx, Mv) - (M y1, M y2)| with
/// (y1, y2) = R(x, v).
pub fn check_symmetry_preservation<R: RngCore>(
    map: &DiscretizationMap,
    action: &LinearGroupAction,
    sample_count: usize,
    tol: f64,
    rng: &mut R,
) -> Result<DefectReport> {
    if action.dim() != map.dim {
        return Err(Error::DimensionMismatch {
            context: "check_symmetry_preservation",
            expected: map.dim,
            actual: action.dim(),
        });
    }
    let n = map.dim;
    let mut max_defect: f64 = 0.0;
    for _ in 0..sample_count {
        let m = action.sample(rng);
        let x = map.sample_base(rng);
        let v = DVector::from_fn(n, |_, _| rand::Rng::random_range(rng, -1.0..1.0));
        let (y1, y2) = map.eval(&TangentPoint::new(x.clone(), v.clone())?)?;
        let (z1, z2) = map.eval(&TangentPoint::new(&m * &x, &m * &v)?)?;
        max_defect = max_defect
            .max((z1 - &m * y1).amax())
            .max((z2 - &m * y2).amax());
    }
    Ok(DefectReport {
        max_defect,
        samples: sample_count,
        tol,
        passed: max_defect <= tol,
    })
}

/// Skew matrix of a 3-vector: hat(w) u = w x u.
pub fn hat_so3(w: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -w[2], w[1], w[2], 0.0, -w[0], -w[1], w[0], 0.0)
}

/// Exponential of a skew-symmetric 3x3 matrix by the Rodrigues closed form.
///
/// Rejects inputs whose skew defect exceeds 1e-12.  Near zero angle the
/// coefficient ratios switch to their series expansions.
pub fn matrix_exp_so3(omega_hat: &Matrix3<f64>) -> Result<Matrix3<f64>> {
    let defect = (omega_hat + omega_hat.transpose()).amax();
    if defect > 1e-12 {
        return Err(Error::NotSkewSymmetric { defect });
    }
    let w = Vector3::new(omega_hat[(2, 1)], omega_hat[(0, 2)], omega_hat[(1, 0)]);
    let theta = w.norm();
    let (a, b) = if theta < 1e-4 {
        let t2 = theta * theta;
        (1.0 - t2 / 6.0, 0.5 - t2 / 24.0)
    } else {
        (theta.sin() / theta, (1.0 - theta.cos()) / (theta * theta))
    };
    Ok(Matrix3::identity() + a * omega_hat + b * (omega_hat * omega_hat))
}

/// Exponential of a general 3x3 matrix: scale so the max-abs entry drops
/// below 1/2, sum twelve series terms, square back.
pub fn matrix_exp(m: &Matrix3<f64>) -> Matrix3<f64> {
    let mut squarings = 0u32;
    let mut scaled = *m;
    while scaled.amax() >= 0.5 && squarings < 64 {
        scaled /= 2.0;
        squarings += 1;
    }
    let mut result = Matrix3::identity();
    let mut term = Matrix3::identity();
    for k in 1..=12 {
        term = term * scaled / k as f64;
        result += term;
    }
    for _ in 0..squarings {
        result = result * result;
    }
    result
}

/// Midpoint discretization map on a 3x3 matrix group:
///
/// ```text
/// (g, v) -> (g exp(-g^{-1} v / 2), g exp(g^{-1} v / 2))
/// ```
pub fn lie_group_midpoint(
    g: &Matrix3<f64>,
    v: &Matrix3<f64>,
) -> Result<(Matrix3<f64>, Matrix3<f64>)> {
    let g_inv = g
        .try_inverse()
        .ok_or(Error::SingularMatrix("lie_group_midpoint base point"))?;
    let body = g_inv * v;
    Ok((g * matrix_exp(&(-body / 2.0)), g * matrix_exp(&(body / 2.0))))
}

fn unflatten3(x: &DVector<f64>) -> Matrix3<f64> {
    Matrix3::from_column_slice(x.as_slice())
}

fn flatten3(m: &Matrix3<f64>) -> DVector<f64> {
    DVector::from_column_slice(m.as_slice())
}

/// The matrix-group midpoint map as a `DiscretizationMap` on flattened 3x3
/// matrices (dimension 9, column-major).  Verification sweeps sample random
/// rotations as base points, the natural working domain.
pub fn lie_group_midpoint_map() -> DiscretizationMap {
    let eval: Arc<EvalFn> = Arc::new(|x, v| {
        let (y1, y2) = lie_group_midpoint(&unflatten3(x), &unflatten3(v))?;
        Ok((flatten3(&y1), flatten3(&y2)))
    });
    let fd_eval = eval.clone();
    let jacobian: Arc<JacFn> = Arc::new(move |x: &DVector<f64>, v: &DVector<f64>| {
        let n = 9;
        let mut z = DVector::zeros(2 * n);
        z.rows_mut(0, n).copy_from(x);
        z.rows_mut(n, n).copy_from(v);
        numeric::central_jacobian(
            |zz| {
                let (y1, y2) =
                    fd_eval(&zz.rows(0, n).into_owned(), &zz.rows(n, n).into_owned())?;
                let mut out = DVector::zeros(2 * n);
                out.rows_mut(0, n).copy_from(&y1);
                out.rows_mut(n, n).copy_from(&y2);
                Ok(out)
            },
            &z,
            2 * n,
        )
    });
    DiscretizationMap::from_parts(9, "lie-group-midpoint", eval, jacobian).with_base_sampler(
        |rng: &mut dyn RngCore| {
            let w = Vector3::new(
                StandardNormal.sample(&mut *rng),
                StandardNormal.sample(&mut *rng),
                StandardNormal.sample(&mut *rng),
            );
            let rot = matrix_exp_so3(&hat_so3(&w)).expect("hat of a vector is skew");
            flatten3(&rot)
        },
    )
}

/// Orthogonality defect |g^T g - I| of a flattened 3x3 output.
pub fn orthogonality_defect(flat: &DVector<f64>) -> f64 {
    let g = unflatten3(flat);
    (g.transpose() * g - Matrix3::identity()).amax()
}
