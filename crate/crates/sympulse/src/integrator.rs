//! Newton solution of step-scheme residuals and trajectory generation.
//!
//! One step solves the 2n implicit system frozen in a [`StepScheme`], seeded
//! at the anchor (exact at h = 0), then reads the next state off the end leg
//! of the lifted pair.  Substep fractions may be negative, which composition
//! schemes rely on.

use nalgebra::{DMatrix, DVector};

use crate::discretization::{adjoint_map, DiscretizationMap};
use crate::error::{Error, Result};
use crate::geometry::PhasePoint;
use crate::lift::{build_hamiltonian_step, HamiltonianSystem, StepScheme};
use crate::numeric;

/// Newton iteration controls.
#[derive(Debug, Clone)]
pub struct NewtonConfig {
    /// Convergence threshold on the residual max-norm.
    pub tol: f64,
    pub max_iter: usize,
    /// Step for the central-difference residual Jacobian.
    pub fd_eps: f64,
    /// Line-search halving limit; `None` always takes the full step.
    pub damping: Option<usize>,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 50,
            fd_eps: 1e-7,
            damping: Some(8),
        }
    }
}

impl NewtonConfig {
    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }
}

/// Converged internal point with iteration statistics.
#[derive(Debug, Clone)]
pub struct NewtonSolution {
    pub point: DVector<f64>,
    pub iterations: usize,
    pub residual_norm: f64,
}

fn residual_jacobian(
    scheme: &StepScheme,
    z: &DVector<f64>,
    fd_eps: f64,
) -> Result<DMatrix<f64>> {
    let m = z.len();
    let mut jac = DMatrix::zeros(m, m);
    let mut shifted = z.clone();
    for j in 0..m {
        let eps = fd_eps * z[j].abs().max(1.0);
        shifted[j] = z[j] + eps;
        let plus = scheme.residual(&shifted)?;
        shifted[j] = z[j] - eps;
        let minus = scheme.residual(&shifted)?;
        shifted[j] = z[j];
        jac.column_mut(j).copy_from(&((plus - minus) / (2.0 * eps)));
    }
    Ok(jac)
}

/// Damped Newton iteration on the scheme residual.
///
/// Fails with [`Error::MaxIterExceeded`] carrying the best iterate seen, or
/// with [`Error::SingularJacobian`] when a linear solve breaks down.
pub fn newton_solve(
    scheme: &StepScheme,
    guess: &DVector<f64>,
    config: &NewtonConfig,
) -> Result<NewtonSolution> {
    let mut z = guess.clone();
    let mut residual = scheme.residual(&z)?;
    let mut norm = residual.amax();
    if !norm.is_finite() {
        return Err(Error::MaxIterExceeded {
            iterations: 0,
            residual_norm: norm,
            best: Box::new(z),
        });
    }
    if norm <= config.tol {
        return Ok(NewtonSolution {
            point: z,
            iterations: 0,
            residual_norm: norm,
        });
    }
    let mut best = (z.clone(), norm);
    for iteration in 1..=config.max_iter {
        let jac = residual_jacobian(scheme, &z, config.fd_eps)?;
        let delta = numeric::lu_solve(&jac, &(-&residual), "newton_solve")?;

        let mut accepted = false;
        let halvings = config.damping.unwrap_or(0);
        let mut factor = 1.0;
        for attempt in 0..=halvings {
            let candidate = &z + factor * &delta;
            match scheme.residual(&candidate) {
                Ok(candidate_residual) => {
                    let candidate_norm = candidate_residual.amax();
                    let improves = candidate_norm.is_finite() && candidate_norm < norm;
                    if improves || (config.damping.is_none() && candidate_norm.is_finite()) {
                        z = candidate;
                        residual = candidate_residual;
                        norm = candidate_norm;
                        accepted = true;
                        break;
                    }
                }
                Err(_) if attempt < halvings => {}
                Err(err) => return Err(err),
            }
            factor /= 2.0;
        }
        if !accepted {
            return Err(Error::MaxIterExceeded {
                iterations: iteration,
                residual_norm: best.1,
                best: Box::new(best.0),
            });
        }
        if norm < best.1 {
            best = (z.clone(), norm);
        }
        if norm <= config.tol {
            return Ok(NewtonSolution {
                point: z,
                iterations: iteration,
                residual_norm: norm,
            });
        }
    }
    Err(Error::MaxIterExceeded {
        iterations: config.max_iter,
        residual_norm: best.1,
        best: Box::new(best.0),
    })
}

/// One implicit step of the scheme induced by (map, system, h).
pub fn step(
    map: &DiscretizationMap,
    system: &HamiltonianSystem,
    h: f64,
    state: &PhasePoint,
    config: &NewtonConfig,
) -> Result<PhasePoint> {
    step_with_stats(map, system, h, state, config).map(|(next, _)| next)
}

/// As [`step`], also reporting the Newton iteration count.
pub fn step_with_stats(
    map: &DiscretizationMap,
    system: &HamiltonianSystem,
    h: f64,
    state: &PhasePoint,
    config: &NewtonConfig,
) -> Result<(PhasePoint, usize)> {
    let scheme = build_hamiltonian_step(map, system, h, state)?;
    let solution = newton_solve(&scheme, scheme.seed(), config)?;
    Ok((scheme.readout(&solution.point)?, solution.iterations))
}

/// One step of the adjoint method: the scheme induced by the adjoint map.
pub fn adjoint_step(
    map: &DiscretizationMap,
    system: &HamiltonianSystem,
    h: f64,
    state: &PhasePoint,
    config: &NewtonConfig,
) -> Result<PhasePoint> {
    step(&adjoint_map(map), system, h, state, config)
}

/// Substep fractions for a composed step.
#[derive(Debug, Clone)]
pub struct CompositionScheme {
    gammas: Vec<f64>,
    declared_order: usize,
}

impl CompositionScheme {
    /// Fractions must sum to one (to 1e-14); negative entries are allowed.
    pub fn new(gammas: Vec<f64>, declared_order: usize) -> Result<Self> {
        if gammas.is_empty() {
            return Err(Error::InvalidComposition(0.0));
        }
        let sum: f64 = gammas.iter().sum();
        if (sum - 1.0).abs() > 1e-14 {
            return Err(Error::InvalidComposition(sum));
        }
        Ok(Self {
            gammas,
            declared_order,
        })
    }

    /// The trivial single-stage scheme, reproducing the base method.
    pub fn single() -> Self {
        Self {
            gammas: vec![1.0],
            declared_order: 0,
        }
    }

    pub fn gammas(&self) -> &[f64] {
        &self.gammas
    }

    pub fn declared_order(&self) -> usize {
        self.declared_order
    }
}

/// Classical three-stage composition raising a method of even order p:
///
/// ```text
/// gamma_1 = gamma_3 = 1 / (2 - 2^{1/(p+1)}),   gamma_2 = 1 - 2 gamma_1,
/// ```
///
/// which satisfy sum(gamma) = 1 and sum(gamma^{p+1}) = 0.  The middle
/// fraction is negative.
pub fn triple_jump(base_order: usize) -> Result<CompositionScheme> {
    if base_order < 1 {
        return Err(Error::InvalidInput(
            "triple jump needs a base order of at least 1".into(),
        ));
    }
    let exponent = 1.0 / (base_order as f64 + 1.0);
    let outer = 1.0 / (2.0 - 2f64.powf(exponent));
    let inner = 1.0 - 2.0 * outer;
    CompositionScheme::new(vec![outer, inner, outer], base_order + 1)
}

/// Folds [`step`] over the substep fractions; failures carry the index of
/// the offending substep.
pub fn composed_step(
    map: &DiscretizationMap,
    system: &HamiltonianSystem,
    h: f64,
    scheme: &CompositionScheme,
    state: &PhasePoint,
    config: &NewtonConfig,
) -> Result<PhasePoint> {
    composed_step_with_stats(map, system, h, scheme, state, config).map(|(next, _)| next)
}

/// As [`composed_step`], also reporting the total Newton iteration count.
pub fn composed_step_with_stats(
    map: &DiscretizationMap,
    system: &HamiltonianSystem,
    h: f64,
    scheme: &CompositionScheme,
    state: &PhasePoint,
    config: &NewtonConfig,
) -> Result<(PhasePoint, usize)> {
    let mut current = state.clone();
    let mut iterations = 0;
    for (index, gamma) in scheme.gammas().iter().enumerate() {
        let (next, iters) = step_with_stats(map, system, gamma * h, &current, config).map_err(
            |source| Error::SubstepFailed {
                substep: index,
                source: Box::new(source),
            },
        )?;
        current = next;
        iterations += iters;
    }
    Ok((current, iterations))
}

/// A time series of phase points with per-step solver statistics.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<PhasePoint>,
    pub newton_iters: Vec<usize>,
}

impl Trajectory {
    pub fn with_initial(initial: PhasePoint) -> Self {
        Self {
            times: vec![0.0],
            states: vec![initial],
            newton_iters: vec![0],
        }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn last(&self) -> &PhasePoint {
        self.states.last().expect("trajectory holds the initial state")
    }
}

/// Integration failure carrying whatever was computed before the bad step.
#[derive(Debug, thiserror::Error)]
#[error("integration failed at step {failed_step}: {source}")]
pub struct IntegrationError {
    pub failed_step: usize,
    pub partial: Trajectory,
    #[source]
    pub source: Error,
}

/// Marches `steps` macro-steps of size h from the initial state, optionally
/// composing substeps.  The first failed step aborts the run and returns the
/// partial trajectory inside the error.
pub fn integrate(
    map: &DiscretizationMap,
    system: &HamiltonianSystem,
    h: f64,
    steps: usize,
    initial: &PhasePoint,
    scheme: Option<&CompositionScheme>,
    config: &NewtonConfig,
) -> std::result::Result<Trajectory, IntegrationError> {
    let mut trajectory = Trajectory::with_initial(initial.clone());
    for k in 1..=steps {
        let current = trajectory.last().clone();
        let outcome = match scheme {
            Some(comp) => composed_step_with_stats(map, system, h, comp, &current, config),
            None => step_with_stats(map, system, h, &current, config),
        };
        match outcome {
            Ok((next, iters)) => {
                trajectory.times.push(k as f64 * h);
                trajectory.states.push(next);
                trajectory.newton_iters.push(iters);
            }
            Err(source) => {
                return Err(IntegrationError {
                    failed_step: k,
                    partial: trajectory,
                    source,
                })
            }
        }
    }
    Ok(trajectory)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::{custom_map, midpoint_map, theta_map};
    use crate::lift::build_hamiltonian_step;
    use crate::symmetry::{momentum_drift, so2_generator};
    use nalgebra::dvector;

    fn oscillator() -> HamiltonianSystem {
        HamiltonianSystem::with_gradient(
            1,
            |z: &PhasePoint| 0.5 * (z.q.dot(&z.q) + z.p.dot(&z.p)),
            |z: &PhasePoint| (z.q.clone(), z.p.clone()),
        )
    }

    fn kepler() -> HamiltonianSystem {
        HamiltonianSystem::with_gradient(
            2,
            |z: &PhasePoint| 0.5 * z.p.dot(&z.p) - 1.0 / z.q.norm(),
            |z: &PhasePoint| {
                let r3 = z.q.norm().powi(3);
                (&z.q / r3, z.p.clone())
            },
        )
    }

    fn state(q: f64, p: f64) -> PhasePoint {
        PhasePoint::new(dvector![q], dvector![p]).unwrap()
    }

    /// Independent closed form for the implicit midpoint step on the linear
    /// oscillator: z' = (I - (h/2) A)^{-1} (I + (h/2) A) z, A = [[0,1],[-1,0]].
    fn cayley_step(z: &PhasePoint, h: f64) -> PhasePoint {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let id = DMatrix::identity(2, 2);
        let forward = &id + (h / 2.0) * &a;
        let backward = (&id - (h / 2.0) * &a).try_inverse().unwrap();
        let m = backward * forward;
        let out = m * z.to_vector();
        PhasePoint::from_vector(&out).unwrap()
    }

    #[test]
    fn newton_converges_in_two_iterations_on_affine_residual() {
        let scheme =
            build_hamiltonian_step(&midpoint_map(1), &oscillator(), 0.1, &state(1.0, 0.0))
                .unwrap();
        let solution = newton_solve(&scheme, scheme.seed(), &NewtonConfig::default()).unwrap();
        assert!(
            solution.iterations <= 2,
            "took {} iterations",
            solution.iterations
        );
    }

    #[test]
    fn newton_converges_at_seed_for_zero_step() {
        let scheme =
            build_hamiltonian_step(&midpoint_map(1), &oscillator(), 0.0, &state(0.4, -0.7))
                .unwrap();
        let solution = newton_solve(&scheme, scheme.seed(), &NewtonConfig::default()).unwrap();
        assert!(solution.iterations <= 1);
    }

    #[test]
    fn kepler_near_collision_reports_failure_without_panicking() {
        let anchor = PhasePoint::new(dvector![0.01, 0.0], dvector![0.0, 0.1]).unwrap();
        let scheme = build_hamiltonian_step(&midpoint_map(2), &kepler(), 10.0, &anchor).unwrap();
        let err = newton_solve(&scheme, scheme.seed(), &NewtonConfig::default()).unwrap_err();
        match err {
            Error::MaxIterExceeded { residual_norm, .. } => {
                assert!(residual_norm > 1e-6, "unexpectedly converged")
            }
            Error::SingularJacobian { .. } => {}
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn midpoint_step_matches_cayley_closed_form() {
        let z0 = state(1.0, 0.0);
        let next = step(
            &midpoint_map(1),
            &oscillator(),
            0.1,
            &z0,
            &NewtonConfig::default(),
        )
        .unwrap();
        let expected = cayley_step(&z0, 0.1);
        assert!((next.q[0] - expected.q[0]).abs() < 1e-13);
        assert!((next.p[0] - expected.p[0]).abs() < 1e-13);
        // digits quoted from the closed form
        assert!((next.q[0] - 0.995012468827930).abs() < 1e-12);
        assert!((next.p[0] - -0.099750623441397).abs() < 1e-12);
    }

    #[test]
    fn zero_step_leaves_state_unchanged() {
        let z0 = state(0.3, 0.9);
        let next = step(
            &theta_map(0.25, 1).unwrap(),
            &oscillator(),
            0.0,
            &z0,
            &NewtonConfig::default(),
        )
        .unwrap();
        assert!((next.q[0] - z0.q[0]).abs() < 1e-14);
        assert!((next.p[0] - z0.p[0]).abs() < 1e-14);
    }

    #[test]
    fn midpoint_step_satisfies_displayed_equations() {
        let system = kepler();
        let z0 = PhasePoint::new(dvector![1.0, 0.0], dvector![0.0, 1.1]).unwrap();
        let h = 0.05;
        let next = step(&midpoint_map(2), &system, h, &z0, &NewtonConfig::default()).unwrap();
        let mid = PhasePoint::new(
            0.5 * (&z0.q + &next.q),
            0.5 * (&z0.p + &next.p),
        )
        .unwrap();
        let (h_q, h_p) = system.grad(&mid).unwrap();
        assert!(((&next.q - &z0.q) / h - h_p).amax() < 1e-10);
        assert!(((&next.p - &z0.p) / h + h_q).amax() < 1e-10);
    }

    #[test]
    fn midpoint_is_self_adjoint() {
        let z0 = PhasePoint::new(dvector![0.9, -0.1], dvector![0.2, 1.0]).unwrap();
        let config = NewtonConfig::default();
        let forward = step(&midpoint_map(2), &kepler(), 0.05, &z0, &config).unwrap();
        let adjoint = adjoint_step(&midpoint_map(2), &kepler(), 0.05, &z0, &config).unwrap();
        assert!((&forward.q - &adjoint.q).amax() < 1e-12);
        assert!((&forward.p - &adjoint.p).amax() < 1e-12);
    }

    #[test]
    fn adjoint_step_inverts_the_reversed_step() {
        let config = NewtonConfig::default().with_tol(1e-13);
        let map = theta_map(0.25, 1).unwrap();
        let system = oscillator();
        for (q, p) in [(1.0, 0.0), (0.3, -0.8), (-1.2, 0.4)] {
            let z0 = state(q, p);
            let back = step(&map, &system, -0.1, &z0, &config).unwrap();
            let forth = adjoint_step(&map, &system, 0.1, &back, &config).unwrap();
            assert!((forth.q[0] - z0.q[0]).abs() < 1e-11);
            assert!((forth.p[0] - z0.p[0]).abs() < 1e-11);
        }
    }

    #[test]
    fn adjoint_of_explicit_euler_steps_like_implicit_euler() {
        let z0 = state(0.7, 0.2);
        let config = NewtonConfig::default();
        let system = oscillator();
        let adj = adjoint_step(&theta_map(0.0, 1).unwrap(), &system, 0.1, &z0, &config).unwrap();
        let implicit = step(&theta_map(1.0, 1).unwrap(), &system, 0.1, &z0, &config).unwrap();
        assert!((adj.q[0] - implicit.q[0]).abs() < 1e-12);
        assert!((adj.p[0] - implicit.p[0]).abs() < 1e-12);
    }

    #[test]
    fn triple_jump_coefficients() {
        let scheme = triple_jump(2).unwrap();
        let g = scheme.gammas();
        assert!((g[0] - 1.3512071919596578).abs() < 1e-12);
        assert!((g[2] - g[0]).abs() < 1e-15);
        assert!((g[1] - (1.0 - 2.0 * g[0])).abs() < 1e-15);
        let sum: f64 = g.iter().sum();
        let sum_cubes: f64 = g.iter().map(|x| x.powi(3)).sum();
        assert!((sum - 1.0).abs() < 1e-14);
        assert!(sum_cubes.abs() < 1e-14);
    }

    #[test]
    fn triple_jump_fractions_sum_to_one_for_small_orders() {
        for p in 1..=3 {
            let scheme = triple_jump(p).unwrap();
            let sum: f64 = scheme.gammas().iter().sum();
            assert!((sum - 1.0).abs() < 1e-14, "p = {p}");
        }
    }

    #[test]
    fn single_stage_composition_reproduces_plain_step() {
        let z0 = state(1.0, 0.5);
        let config = NewtonConfig::default();
        let plain = step(&midpoint_map(1), &oscillator(), 0.1, &z0, &config).unwrap();
        let composed = composed_step(
            &midpoint_map(1),
            &oscillator(),
            0.1,
            &CompositionScheme::single(),
            &z0,
            &config,
        )
        .unwrap();
        assert_eq!(plain.q, composed.q);
        assert_eq!(plain.p, composed.p);
    }

    #[test]
    fn half_half_composition_is_two_half_steps() {
        let z0 = state(1.0, 0.5);
        let config = NewtonConfig::default();
        let scheme = CompositionScheme::new(vec![0.5, 0.5], 2).unwrap();
        let composed =
            composed_step(&midpoint_map(1), &oscillator(), 0.1, &scheme, &z0, &config).unwrap();
        let first = step(&midpoint_map(1), &oscillator(), 0.05, &z0, &config).unwrap();
        let second = step(&midpoint_map(1), &oscillator(), 0.05, &first, &config).unwrap();
        assert_eq!(composed.q, second.q);
        assert_eq!(composed.p, second.p);
    }

    #[test]
    fn method_and_adjoint_halves_compose_to_a_symmetric_method() {
        // S_h = adjoint half step then base half step; S_{-h} must undo S_h.
        let map = theta_map(0.0, 1).unwrap();
        let system = oscillator();
        let config = NewtonConfig::default().with_tol(1e-13);
        let compose = |z: &PhasePoint, h: f64| {
            let mid = adjoint_step(&map, &system, h / 2.0, z, &config).unwrap();
            step(&map, &system, h / 2.0, &mid, &config).unwrap()
        };
        let z0 = state(0.8, -0.4);
        let forward = compose(&z0, 0.1);
        let back = compose(&forward, -0.1);
        assert!((back.q[0] - z0.q[0]).abs() < 1e-11);
        assert!((back.p[0] - z0.p[0]).abs() < 1e-11);
    }

    #[test]
    fn composition_failure_carries_substep_index() {
        let anchor = PhasePoint::new(dvector![0.01, 0.0], dvector![0.0, 0.1]).unwrap();
        let scheme = CompositionScheme::new(vec![0.5, 0.5], 2).unwrap();
        let err = composed_step(
            &midpoint_map(2),
            &kepler(),
            20.0,
            &scheme,
            &anchor,
            &NewtonConfig::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::SubstepFailed { .. }));
    }

    #[test]
    fn invalid_composition_sum_rejected() {
        assert!(matches!(
            CompositionScheme::new(vec![0.5, 0.6], 1),
            Err(Error::InvalidComposition(_))
        ));
        assert!(matches!(
            CompositionScheme::new(vec![], 1),
            Err(Error::InvalidComposition(_))
        ));
    }

    #[test]
    fn zero_steps_yield_single_state_trajectory() {
        let traj = integrate(
            &midpoint_map(1),
            &oscillator(),
            0.1,
            0,
            &state(1.0, 0.0),
            None,
            &NewtonConfig::default(),
        )
        .unwrap();
        assert_eq!(traj.len(), 1);
        assert_eq!(traj.times, vec![0.0]);
        assert_eq!(traj.newton_iters, vec![0]);
    }

    #[test]
    fn oscillator_energy_is_machine_flat_over_ten_thousand_midpoint_steps() {
        let system = oscillator();
        let traj = integrate(
            &midpoint_map(1),
            &system,
            0.1,
            10_000,
            &state(1.0, 0.0),
            None,
            &NewtonConfig::default(),
        )
        .unwrap();
        let initial = system.eval(&traj.states[0]).unwrap();
        let max_drift = traj
            .states
            .iter()
            .map(|z| (system.eval(z).unwrap() - initial).abs())
            .fold(0.0f64, f64::max);
        assert!(max_drift < 1e-10, "energy drift {max_drift:.3e}");
    }

    #[test]
    fn kepler_midpoint_conserves_angular_momentum() {
        let traj = integrate(
            &midpoint_map(2),
            &kepler(),
            0.01,
            1000,
            &PhasePoint::new(dvector![1.0, 0.0], dvector![0.0, 1.1]).unwrap(),
            None,
            &NewtonConfig::default(),
        )
        .unwrap();
        let (max_drift, _) = momentum_drift(&traj, &so2_generator()).unwrap();
        assert!(max_drift < 1e-9, "momentum drift {max_drift:.3e}");
    }

    #[test]
    fn failed_integration_returns_partial_trajectory() {
        let err = integrate(
            &midpoint_map(2),
            &kepler(),
            10.0,
            5,
            &PhasePoint::new(dvector![0.01, 0.0], dvector![0.0, 0.1]).unwrap(),
            None,
            &NewtonConfig::default(),
        )
        .unwrap_err();
        assert_eq!(err.failed_step, 1);
        assert_eq!(err.partial.len(), 1);
    }

    #[test]
    fn converged_step_lies_on_the_discrete_dynamics_submanifold() {
        // Re-evaluating the lift at the converged internal point must land
        // on (q_k, -p_k) and (q_{k+1}, p_{k+1}).
        let map = midpoint_map(2);
        let system = kepler();
        let anchor = PhasePoint::new(dvector![1.0, 0.0], dvector![0.0, 1.1]).unwrap();
        let scheme = build_hamiltonian_step(&map, &system, 0.02, &anchor).unwrap();
        let solution = newton_solve(&scheme, scheme.seed(), &NewtonConfig::default()).unwrap();
        let lifted = scheme.lift_point(&solution.point).unwrap();
        let next = scheme.readout(&solution.point).unwrap();
        assert!((&lifted.q_a - &anchor.q).amax() < 1e-11);
        assert!((&lifted.mu_a + &anchor.p).amax() < 1e-11);
        assert!((&lifted.q_b - &next.q).amax() < 1e-14);
        assert!((&lifted.mu_b - &next.p).amax() < 1e-14);
    }

    #[test]
    fn square_perturbed_map_drifts_angular_momentum() {
        let map = custom_map(
            2,
            "square-perturbed",
            |x: &DVector<f64>, v: &DVector<f64>| (x.clone(), x + v + v.map(|t| t * t)),
            None,
        );
        let traj = integrate(
            &map,
            &kepler(),
            0.01,
            1000,
            &PhasePoint::new(dvector![1.0, 0.0], dvector![0.0, 1.1]).unwrap(),
            None,
            &NewtonConfig::default(),
        )
        .unwrap();
        let (max_drift, _) = momentum_drift(&traj, &so2_generator()).unwrap();
        assert!(max_drift > 1e-5, "drift only {max_drift:.3e}");
    }
}
