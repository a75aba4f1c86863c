//! Linear group actions on R^n, their cotangent lifts, infinitesimal
//! generators, and momentum maps.
//!
//! For a matrix group acting by left multiplication, the lift to phase space
//! is (q, p) -> (M q, M^{-T} p), the generator of an algebra element m is
//! the linear field q -> m q, and the associated momentum function
//!
//! ```text
//! J_m(q, p) = < p, m q >
//! ```
//!
//! is conserved along any integrator built from a symmetry-preserving
//! discretization map whenever J_m is a first integral of the continuous
//! dynamics.  [`momentum_drift`] measures exactly that on a trajectory.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, RngCore};
use rand_distr::{Distribution, StandardNormal};

use crate::discretization::DefectReport;
use crate::error::{Error, Result};
use crate::geometry::PhasePoint;
use crate::integrator::Trajectory;
use crate::lift::HamiltonianSystem;

type MatrixSampler = dyn Fn(&mut dyn RngCore) -> DMatrix<f64> + Send + Sync;

/// A linear action of a matrix group on R^n, represented by a sampler of
/// group elements for verification sweeps.
#[derive(Clone)]
pub struct LinearGroupAction {
    dim: usize,
    description: String,
    sampler: Arc<MatrixSampler>,
}

impl std::fmt::Debug for LinearGroupAction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LinearGroupAction")
            .field("dim", &self.dim)
            .field("description", &self.description)
            .finish()
    }
}

fn condition_estimate(m: &DMatrix<f64>) -> f64 {
    match m.clone().try_inverse() {
        Some(inv) => m.amax() * inv.amax(),
        None => f64::INFINITY,
    }
}

impl LinearGroupAction {
    pub fn from_sampler<S>(dim: usize, description: impl Into<String>, sampler: S) -> Self
    where
        S: Fn(&mut dyn RngCore) -> DMatrix<f64> + Send + Sync + 'static,
    {
        Self {
            dim,
            description: description.into(),
            sampler: Arc::new(sampler),
        }
    }

    /// Random special-orthogonal elements: QR of a Gaussian matrix with the
    /// R-diagonal sign fix, then a determinant flip into SO(n).
    pub fn rotations(dim: usize) -> Self {
        Self::from_sampler(dim, format!("SO({dim}) rotations"), move |rng| {
            let gauss =
                DMatrix::from_fn(dim, dim, |_, _| StandardNormal.sample(&mut *rng));
            let qr = gauss.qr();
            let r_diag = qr.r().diagonal();
            let mut q = qr.q();
            for j in 0..dim {
                if r_diag[j] < 0.0 {
                    q.column_mut(j).neg_mut();
                }
            }
            if q.determinant() < 0.0 {
                q.column_mut(dim - 1).neg_mut();
            }
            q
        })
    }

    /// Non-compact samples near the identity: I + 0.5 Gaussian, redrawn when
    /// badly conditioned.
    pub fn gl_near_identity(dim: usize) -> Self {
        Self::from_sampler(dim, format!("GL({dim}) near identity"), move |rng| {
            loop {
                let m = DMatrix::identity(dim, dim)
                    + 0.5 * DMatrix::from_fn(dim, dim, |_, _| StandardNormal.sample(&mut *rng));
                if condition_estimate(&m) < 1e8 {
                    return m;
                }
            }
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    /// Draws a group element, redrawing a handful of times if the sampler
    /// produces something numerically singular.
    pub fn sample<R: RngCore>(&self, rng: &mut R) -> DMatrix<f64> {
        let mut candidate = (self.sampler)(rng);
        for _ in 0..64 {
            if condition_estimate(&candidate) < 1e8 {
                break;
            }
            candidate = (self.sampler)(rng);
        }
        candidate
    }
}

/// An element of the matrix Lie algebra acting on R^n.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgebraElement {
    matrix: DMatrix<f64>,
}

impl AlgebraElement {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::InvalidInput(format!(
                "algebra element must be square, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if !matrix.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite("AlgebraElement"));
        }
        Ok(Self { matrix })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

/// The planar rotation generator [[0, -1], [1, 0]].
pub fn so2_generator() -> AlgebraElement {
    AlgebraElement::new(DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]))
        .expect("constant matrix is valid")
}

/// Cotangent lift of left multiplication: (q, p) -> (M q, M^{-T} p).
pub fn cotangent_lift_action(m: &DMatrix<f64>, state: &PhasePoint) -> Result<PhasePoint> {
    if m.nrows() != state.dim() || m.ncols() != state.dim() {
        return Err(Error::DimensionMismatch {
            context: "cotangent_lift_action",
            expected: state.dim(),
            actual: m.nrows(),
        });
    }
    let inv = m
        .clone()
        .try_inverse()
        .ok_or(Error::SingularMatrix("cotangent_lift_action"))?;
    PhasePoint::new(m * &state.q, inv.transpose() * &state.p)
}

/// Infinitesimal generator of the linear action: q -> m q.
pub fn infinitesimal_generator(m: &AlgebraElement, q: &DVector<f64>) -> Result<DVector<f64>> {
    if m.dim() != q.len() {
        return Err(Error::DimensionMismatch {
            context: "infinitesimal_generator",
            expected: m.dim(),
            actual: q.len(),
        });
    }
    Ok(m.matrix() * q)
}

/// Momentum function J_m(q, p) = < p, m q >.
pub fn momentum(m: &AlgebraElement, state: &PhasePoint) -> Result<f64> {
    let generator = infinitesimal_generator(m, &state.q)?;
    Ok(state.p.dot(&generator))
}

/// Per-state momentum drift J_m(z_k) - J_m(z_0) along a trajectory, together
/// with its max magnitude.
pub fn momentum_drift(traj: &Trajectory, m: &AlgebraElement) -> Result<(f64, Vec<f64>)> {
    let first = traj
        .states
        .first()
        .ok_or_else(|| Error::InvalidInput("trajectory is empty".into()))?;
    let reference = momentum(m, first)?;
    let mut series = Vec::with_capacity(traj.states.len());
    let mut max_abs: f64 = 0.0;
    for state in &traj.states {
        let drift = momentum(m, state)? - reference;
        max_abs = max_abs.max(drift.abs());
        series.push(drift);
    }
    Ok((max_abs, series))
}

/// Max over sampled states of the directional derivative of H along the
/// phase-space lift of the generator, |< dH, (m q, -m^T p) >|.  Zero exactly
/// when J_m is a first integral of the flow of H.
///
/// States are drawn from the coordinate box [-2, 2]^{2n}; draws where the
/// gradient is enormous or non-finite (outside the working domain of H, near
/// a potential singularity) are redrawn.
pub fn hamiltonian_invariance_check<R: RngCore>(
    system: &HamiltonianSystem,
    m: &AlgebraElement,
    samples: usize,
    tol: f64,
    rng: &mut R,
) -> Result<DefectReport> {
    if m.dim() != system.dim() {
        return Err(Error::DimensionMismatch {
            context: "hamiltonian_invariance_check",
            expected: system.dim(),
            actual: m.dim(),
        });
    }
    let n = system.dim();
    let m_t = m.matrix().transpose();
    let mut max_defect: f64 = 0.0;
    for _ in 0..samples {
        let mut attempts = 0;
        let (state, h_q, h_p) = loop {
            let state = PhasePoint::new(
                DVector::from_fn(n, |_, _| rng.random_range(-2.0..2.0)),
                DVector::from_fn(n, |_, _| rng.random_range(-2.0..2.0)),
            )?;
            let (h_q, h_p) = system.grad(&state)?;
            let scale = h_q.amax().max(h_p.amax());
            if scale.is_finite() && scale < 1e6 {
                break (state, h_q, h_p);
            }
            attempts += 1;
            if attempts > 256 {
                return Err(Error::InvalidInput(
                    "could not sample a state with a finite moderate gradient".into(),
                ));
            }
        };
        let generator_q = m.matrix() * &state.q;
        let generator_p = -(&m_t * &state.p);
        max_defect = max_defect.max((h_q.dot(&generator_q) + h_p.dot(&generator_p)).abs());
    }
    Ok(DefectReport {
        max_defect,
        samples,
        tol,
        passed: max_defect <= tol,
    })
}
