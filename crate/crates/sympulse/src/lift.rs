//! Cotangent lift of a discretization map and the implicit step schemes
//! it induces.
//!
//! Lifting a map R: TQ -> Q x Q pointwise gives, at a covector (x, v, p_x,
//! p_v) over TQ, the covector over Q x Q with base R(x, v) and fibre solving
//!
//! ```text
//! J(x, v)^T (eta_1; eta_2) = (p_x; p_v),
//! ```
//!
//! which preserves the canonical pairing against any tangent perturbation.
//! Feeding it the scaled differential of a Hamiltonian, passed through the
//! canonical antisymplectomorphism, produces the generator point
//!
//! ```text
//! (q, h H_p, -h H_q, p)
//! ```
//!
//! whose lifted legs encode one implicit step: the start leg must hit the
//! anchor (q_k, -p_k) and the end leg reads out (q_{k+1}, p_{k+1}).  A
//! Lagrangian produces the same structure directly from (h L_q, L_v) with
//! the velocity columns of the Jacobian taken at (q, h v).

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::discretization::DiscretizationMap;
use crate::error::{Error, Result};
use crate::geometry::{
    to_tangent_covector, CotangentOfCotangent, CotangentOfTangent, PhasePoint, ProductCovector,
    TangentPoint,
};
use crate::numeric;

type HamEvalFn = dyn Fn(&PhasePoint) -> f64 + Send + Sync;
type HamGradFn = dyn Fn(&PhasePoint) -> (DVector<f64>, DVector<f64>) + Send + Sync;

/// A Hamiltonian on T*Q with gradient access, analytic or finite-difference.
#[derive(Clone)]
pub struct HamiltonianSystem {
    dim: usize,
    eval: Arc<HamEvalFn>,
    grad: Arc<HamGradFn>,
}

impl HamiltonianSystem {
    /// Energy from a closure; gradients fall back to central differences.
    pub fn new<F>(dim: usize, eval: F) -> Self
    where
        F: Fn(&PhasePoint) -> f64 + Send + Sync + Clone + 'static,
    {
        let fd = eval.clone();
        Self {
            dim,
            eval: Arc::new(eval),
            grad: Arc::new(move |state: &PhasePoint| {
                let q = state.q.clone();
                let p = state.p.clone();
                let h_q = numeric::central_gradient(
                    |qq| fd(&PhasePoint { q: qq.clone(), p: p.clone() }),
                    &state.q,
                );
                let h_p = numeric::central_gradient(
                    |pp| fd(&PhasePoint { q: q.clone(), p: pp.clone() }),
                    &state.p,
                );
                (h_q, h_p)
            }),
        }
    }

    /// Energy with an analytic gradient (H_q, H_p).
    pub fn with_gradient<F, G>(dim: usize, eval: F, grad: G) -> Self
    where
        F: Fn(&PhasePoint) -> f64 + Send + Sync + 'static,
        G: Fn(&PhasePoint) -> (DVector<f64>, DVector<f64>) + Send + Sync + 'static,
    {
        Self {
            dim,
            eval: Arc::new(eval),
            grad: Arc::new(grad),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval(&self, state: &PhasePoint) -> Result<f64> {
        self.check_dim(state.dim())?;
        Ok((self.eval)(state))
    }

    pub fn grad(&self, state: &PhasePoint) -> Result<(DVector<f64>, DVector<f64>)> {
        self.check_dim(state.dim())?;
        Ok((self.grad)(state))
    }

    fn check_dim(&self, actual: usize) -> Result<()> {
        if actual == self.dim {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                context: "HamiltonianSystem",
                expected: self.dim,
                actual,
            })
        }
    }
}

type LagEvalFn = dyn Fn(&TangentPoint) -> f64 + Send + Sync;
type LagGradFn = dyn Fn(&TangentPoint) -> (DVector<f64>, DVector<f64>) + Send + Sync;
type LagHessFn = dyn Fn(&TangentPoint) -> DMatrix<f64> + Send + Sync;

/// A Lagrangian on TQ with gradient and velocity-Hessian access.
///
/// The velocity Hessian must be invertible on the working domain
/// (hyperregularity); it drives the velocity seed for the implicit step.
#[derive(Clone)]
pub struct LagrangianSystem {
    dim: usize,
    eval: Arc<LagEvalFn>,
    grad: Arc<LagGradFn>,
    hessian_vv: Arc<LagHessFn>,
}

impl LagrangianSystem {
    /// Lagrangian from a closure; gradient and velocity Hessian fall back to
    /// central differences.
    pub fn new<F>(dim: usize, eval: F) -> Self
    where
        F: Fn(&TangentPoint) -> f64 + Send + Sync + Clone + 'static,
    {
        let fd_grad = eval.clone();
        let grad: Arc<LagGradFn> = Arc::new(move |pt: &TangentPoint| {
            let x = pt.x.clone();
            let v = pt.v.clone();
            let l_q = numeric::central_gradient(
                |xx| fd_grad(&TangentPoint { x: xx.clone(), v: v.clone() }),
                &pt.x,
            );
            let l_v = numeric::central_gradient(
                |vv| fd_grad(&TangentPoint { x: x.clone(), v: vv.clone() }),
                &pt.v,
            );
            (l_q, l_v)
        });
        let hess_grad = grad.clone();
        let hessian_vv: Arc<LagHessFn> = Arc::new(move |pt: &TangentPoint| {
            let x = pt.x.clone();
            numeric::central_jacobian(
                |vv| {
                    Ok(hess_grad(&TangentPoint { x: x.clone(), v: vv.clone() }).1)
                },
                &pt.v,
                pt.v.len(),
            )
            .expect("finite-difference hessian of a total closure")
        });
        Self {
            dim,
            eval: Arc::new(eval),
            grad,
            hessian_vv,
        }
    }

    /// Lagrangian with analytic gradient (L_q, L_v) and velocity Hessian.
    pub fn with_derivatives<F, G, H>(dim: usize, eval: F, grad: G, hessian_vv: H) -> Self
    where
        F: Fn(&TangentPoint) -> f64 + Send + Sync + 'static,
        G: Fn(&TangentPoint) -> (DVector<f64>, DVector<f64>) + Send + Sync + 'static,
        H: Fn(&TangentPoint) -> DMatrix<f64> + Send + Sync + 'static,
    {
        Self {
            dim,
            eval: Arc::new(eval),
            grad: Arc::new(grad),
            hessian_vv: Arc::new(hessian_vv),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval(&self, pt: &TangentPoint) -> Result<f64> {
        self.check_dim(pt.dim())?;
        Ok((self.eval)(pt))
    }

    pub fn grad(&self, pt: &TangentPoint) -> Result<(DVector<f64>, DVector<f64>)> {
        self.check_dim(pt.dim())?;
        Ok((self.grad)(pt))
    }

    pub fn hessian_vv(&self, pt: &TangentPoint) -> Result<DMatrix<f64>> {
        self.check_dim(pt.dim())?;
        Ok((self.hessian_vv)(pt))
    }

    /// Inverts the fibre derivative: solves L_v(q, v) = p for v by Newton,
    /// seeded at v = p.  Fails with [`Error::NotHyperregular`] when the
    /// velocity Hessian is singular along the way.
    pub fn legendre_velocity(&self, q: &DVector<f64>, p: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_dim(q.len())?;
        let mut v = p.clone();
        for _ in 0..30 {
            let pt = TangentPoint::new(q.clone(), v.clone())?;
            let (_, l_v) = self.grad(&pt)?;
            let residual = &l_v - p;
            if residual.amax() <= 1e-12 {
                return Ok(v);
            }
            let hess = self.hessian_vv(&pt)?;
            let delta = numeric::lu_solve(&hess, &(-residual), "legendre_velocity")
                .map_err(|_| Error::NotHyperregular)?;
            v += delta;
        }
        let pt = TangentPoint::new(q.clone(), v.clone())?;
        let residual_norm = (self.grad(&pt)?.1 - p).amax();
        Err(Error::MaxIterExceeded {
            iterations: 30,
            residual_norm,
            best: Box::new(v),
        })
    }

    fn check_dim(&self, actual: usize) -> Result<()> {
        if actual == self.dim {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                context: "LagrangianSystem",
                expected: self.dim,
                actual,
            })
        }
    }
}

/// Lifts one covector over TQ through the map: base points map forward,
/// fibre components solve the transposed-Jacobian system.
///
/// Errors with a singular Jacobian when (x, v) leaves the domain on which
/// the map is a local diffeomorphism.
pub fn cotangent_lift_point(
    map: &DiscretizationMap,
    z: &CotangentOfTangent,
) -> Result<ProductCovector> {
    if z.dim() != map.dim() {
        return Err(Error::DimensionMismatch {
            context: "cotangent_lift_point",
            expected: map.dim(),
            actual: z.dim(),
        });
    }
    let n = map.dim();
    let base = z.base();
    let (y1, y2) = map.eval(&base)?;
    let jac_t = map.jacobian(&base)?.transpose();
    let mut rhs = DVector::zeros(2 * n);
    rhs.rows_mut(0, n).copy_from(&z.p_x);
    rhs.rows_mut(n, n).copy_from(&z.p_v);
    let eta = numeric::lu_solve(&jac_t, &rhs, "cotangent_lift_point")?;
    ProductCovector::new(
        y1,
        eta.rows(0, n).into_owned(),
        y2,
        eta.rows(n, n).into_owned(),
    )
}

/// Generator point of the discrete dynamics for a Hamiltonian: the image of
/// the h-scaled differential of H under the canonical antisymplectomorphism,
///
/// ```text
/// (q, p)  |->  (q, h H_p, -h H_q, p).
/// ```
pub fn hamiltonian_generator(
    system: &HamiltonianSystem,
    h: f64,
    state: &PhasePoint,
) -> Result<CotangentOfTangent> {
    let (h_q, h_p) = system.grad(state)?;
    let scaled = CotangentOfCotangent::new(state.q.clone(), state.p.clone(), h * h_q, h * h_p)?;
    Ok(to_tangent_covector(&scaled))
}

type LiftFn = dyn Fn(&DVector<f64>) -> Result<ProductCovector> + Send + Sync;

/// The residual/readout bundle for one implicit step with a frozen
/// (map, system, step size, anchor).
///
/// The internal unknown z stacks (q, p) for a Hamiltonian scheme and (q, v)
/// for a Lagrangian one.  A converged z places the lifted pair on the
/// discrete-dynamics submanifold: start leg at (q_k, -p_k), end leg at
/// (q_{k+1}, p_{k+1}).
pub struct StepScheme {
    dim: usize,
    anchor: PhasePoint,
    seed: DVector<f64>,
    lift: Box<LiftFn>,
}

impl StepScheme {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn anchor(&self) -> &PhasePoint {
        &self.anchor
    }

    /// Newton seed for the internal unknown; exact at h = 0.
    pub fn seed(&self) -> &DVector<f64> {
        &self.seed
    }

    /// The lifted pair at an internal point.
    pub fn lift_point(&self, z: &DVector<f64>) -> Result<ProductCovector> {
        self.check_dim(z)?;
        (self.lift)(z)
    }

    /// Residual whose root defines the step:
    /// (start base - q_k ; start fibre + p_k), a 2n vector.
    pub fn residual(&self, z: &DVector<f64>) -> Result<DVector<f64>> {
        let lifted = self.lift_point(z)?;
        let n = self.dim;
        let mut r = DVector::zeros(2 * n);
        r.rows_mut(0, n).copy_from(&(&lifted.q_a - &self.anchor.q));
        r.rows_mut(n, n).copy_from(&(&lifted.mu_a + &self.anchor.p));
        Ok(r)
    }

    /// Next state read off the end leg of the lifted pair.
    pub fn readout(&self, z: &DVector<f64>) -> Result<PhasePoint> {
        let lifted = self.lift_point(z)?;
        PhasePoint::new(lifted.q_b, lifted.mu_b)
    }

    fn check_dim(&self, z: &DVector<f64>) -> Result<()> {
        if z.len() == 2 * self.dim {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                context: "StepScheme",
                expected: 2 * self.dim,
                actual: z.len(),
            })
        }
    }
}

/// Builds the Hamiltonian step scheme: internal unknown (q, p), lift of the
/// generator point through the map, anchored at (q_k, p_k).
pub fn build_hamiltonian_step(
    map: &DiscretizationMap,
    system: &HamiltonianSystem,
    h: f64,
    anchor: &PhasePoint,
) -> Result<StepScheme> {
    let n = map.dim();
    if system.dim() != n || anchor.dim() != n {
        return Err(Error::DimensionMismatch {
            context: "build_hamiltonian_step",
            expected: n,
            actual: system.dim().min(anchor.dim()),
        });
    }
    let map = map.clone();
    let system = system.clone();
    let seed = anchor.to_vector();
    Ok(StepScheme {
        dim: n,
        anchor: anchor.clone(),
        seed,
        lift: Box::new(move |z: &DVector<f64>| {
            let state = PhasePoint::from_vector(z)?;
            let generator = hamiltonian_generator(&system, h, &state)?;
            cotangent_lift_point(&map, &generator)
        }),
    })
}

/// Builds the Lagrangian step scheme: internal unknown (q, v), lift of the
/// scaled differential (h L_q, h L_v) through the h-rescaled map
/// (x, u) -> R(x, h u).
///
/// The fibre solve cancels the common factor h in the velocity rows, so the
/// system stays regular down to h = 0:
///
/// ```text
/// J(q, h v)^T (eta_1; eta_2) = (h L_q; L_v).
/// ```
///
/// The Newton seed velocity inverts the fibre derivative at the anchor,
/// L_v(q_k, v) = p_k, which requires hyperregularity.
pub fn build_lagrangian_step(
    map: &DiscretizationMap,
    system: &LagrangianSystem,
    h: f64,
    anchor: &PhasePoint,
) -> Result<StepScheme> {
    let n = map.dim();
    if system.dim() != n || anchor.dim() != n {
        return Err(Error::DimensionMismatch {
            context: "build_lagrangian_step",
            expected: n,
            actual: system.dim().min(anchor.dim()),
        });
    }
    let seed_velocity = system.legendre_velocity(&anchor.q, &anchor.p)?;
    let mut seed = DVector::zeros(2 * n);
    seed.rows_mut(0, n).copy_from(&anchor.q);
    seed.rows_mut(n, n).copy_from(&seed_velocity);

    let map = map.clone();
    let system = system.clone();
    Ok(StepScheme {
        dim: n,
        anchor: anchor.clone(),
        seed,
        lift: Box::new(move |z: &DVector<f64>| {
            let q = z.rows(0, n).into_owned();
            let v = z.rows(n, n).into_owned();
            let (l_q, l_v) = system.grad(&TangentPoint::new(q.clone(), v.clone())?)?;
            let scaled_pt = TangentPoint::new(q, h * v)?;
            let (y1, y2) = map.eval(&scaled_pt)?;
            let jac_t = map.jacobian(&scaled_pt)?.transpose();
            let mut rhs = DVector::zeros(2 * n);
            rhs.rows_mut(0, n).copy_from(&(h * l_q));
            rhs.rows_mut(n, n).copy_from(&l_v);
            let eta = numeric::lu_solve(&jac_t, &rhs, "build_lagrangian_step")?;
            ProductCovector::new(
                y1,
                eta.rows(0, n).into_owned(),
                y2,
                eta.rows(n, n).into_owned(),
            )
        }),
    })
}
