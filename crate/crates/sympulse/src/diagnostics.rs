//! Numerical verification instruments: flow-Jacobian probes, symplectic
//! defect, drift series, and empirical convergence order.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::geometry::{canonical_symplectic_matrix, PhasePoint};
use crate::integrator::Trajectory;
use crate::lift::HamiltonianSystem;

/// Probe step for flow Jacobians: 1e-6 scaled to the state magnitude.
pub fn default_probe_eps(z: &PhasePoint) -> f64 {
    1e-6 * z.to_vector().amax().max(1.0)
}

/// Central-difference Jacobian of a one-step map at a phase point.
pub fn flow_jacobian_fd<F>(step_fn: F, z: &PhasePoint, eps: f64) -> Result<DMatrix<f64>>
where
    F: Fn(&PhasePoint) -> Result<PhasePoint>,
{
    let base = z.to_vector();
    let m = base.len();
    let mut jac = DMatrix::zeros(m, m);
    let mut shifted = base.clone();
    for j in 0..m {
        shifted[j] = base[j] + eps;
        let plus = step_fn(&PhasePoint::from_vector(&shifted)?)?.to_vector();
        shifted[j] = base[j] - eps;
        let minus = step_fn(&PhasePoint::from_vector(&shifted)?)?.to_vector();
        shifted[j] = base[j];
        jac.column_mut(j).copy_from(&((plus - minus) / (2.0 * eps)));
    }
    Ok(jac)
}

/// Max-abs entry of J^T Omega J - Omega; zero exactly when J is symplectic.
pub fn symplectic_defect(jac: &DMatrix<f64>) -> Result<f64> {
    if !jac.is_square() || jac.nrows() % 2 != 0 || jac.nrows() == 0 {
        return Err(Error::InvalidInput(format!(
            "symplectic defect needs a square even-dimensional matrix, got {}x{}",
            jac.nrows(),
            jac.ncols()
        )));
    }
    let omega = canonical_symplectic_matrix(jac.nrows() / 2);
    Ok((jac.transpose() * &omega * jac - omega).amax())
}

/// Energy drift series H(z_k) - H(z_0) and its max magnitude.
pub fn energy_drift(traj: &Trajectory, system: &HamiltonianSystem) -> Result<(f64, Vec<f64>)> {
    let first = traj
        .states
        .first()
        .ok_or_else(|| Error::InvalidInput("trajectory is empty".into()))?;
    let reference = system.eval(first)?;
    let mut series = Vec::with_capacity(traj.len());
    let mut max_abs: f64 = 0.0;
    for state in &traj.states {
        let drift = system.eval(state)? - reference;
        max_abs = max_abs.max(drift.abs());
        series.push(drift);
    }
    Ok((max_abs, series))
}

/// An empirical order fit: log error against log step size.
#[derive(Debug, Clone)]
pub struct OrderEstimate {
    pub step_sizes: Vec<f64>,
    pub errors: Vec<f64>,
    pub slope: f64,
    pub r_squared: f64,
}

/// Runs the supplied integrator closure once per step size, measures the
/// max-norm phase error against the reference state at the common final
/// time, and fits the slope by least squares.
///
/// Step sizes must be strictly decreasing, at least three, and each must
/// divide the final time.
pub fn convergence_order<F>(
    h_list: &[f64],
    t_final: f64,
    run: F,
    reference: &PhasePoint,
) -> Result<OrderEstimate>
where
    F: Fn(f64, usize) -> Result<PhasePoint>,
{
    if h_list.len() < 3 {
        return Err(Error::InvalidInput(format!(
            "order fit needs at least 3 step sizes, got {}",
            h_list.len()
        )));
    }
    if !h_list.windows(2).all(|w| w[0] > w[1]) || h_list.iter().any(|&h| h <= 0.0) {
        return Err(Error::InvalidInput(
            "step sizes must be positive and strictly decreasing".into(),
        ));
    }
    let mut errors = Vec::with_capacity(h_list.len());
    for &h in h_list {
        let steps_f = t_final / h;
        let steps = steps_f.round();
        if steps < 1.0 || (steps_f - steps).abs() > 1e-8 * steps {
            return Err(Error::InvalidInput(format!(
                "step size {h} does not divide the final time {t_final}"
            )));
        }
        let end = run(h, steps as usize)?;
        let err = (end.to_vector() - reference.to_vector()).amax();
        if err <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "zero error at h = {h}; cannot fit a log-log slope"
            )));
        }
        errors.push(err);
    }
    let xs: Vec<f64> = h_list.iter().map(|h| h.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let count = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / count;
    let mean_y = ys.iter().sum::<f64>() / count;
    let mut cov = 0.0;
    let mut var_x = 0.0;
    let mut var_y = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        cov += (x - mean_x) * (y - mean_y);
        var_x += (x - mean_x).powi(2);
        var_y += (y - mean_y).powi(2);
    }
    let slope = cov / var_x;
    let r_squared = if var_y > 0.0 {
        (cov * cov) / (var_x * var_y)
    } else {
        1.0
    };
    Ok(OrderEstimate {
        step_sizes: h_list.to_vec(),
        errors,
        slope,
        r_squared,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::{midpoint_map, theta_map};
    use crate::integrator::{integrate, step, NewtonConfig};
    use nalgebra::DVector;
    use nalgebra::dvector;

    fn oscillator() -> HamiltonianSystem {
        HamiltonianSystem::with_gradient(
            1,
            |z: &PhasePoint| 0.5 * (z.q.dot(&z.q) + z.p.dot(&z.p)),
            |z: &PhasePoint| (z.q.clone(), z.p.clone()),
        )
    }

    fn oscillator_exact(t: f64, z0: &PhasePoint) -> PhasePoint {
        PhasePoint::new(
            dvector![z0.q[0] * t.cos() + z0.p[0] * t.sin()],
            dvector![-z0.q[0] * t.sin() + z0.p[0] * t.cos()],
        )
        .unwrap()
    }

    #[test]
    fn identity_step_map_has_identity_jacobian() {
        let z = PhasePoint::new(dvector![0.5, -1.0], dvector![0.2, 0.8]).unwrap();
        let jac = flow_jacobian_fd(|z| Ok(z.clone()), &z, default_probe_eps(&z)).unwrap();
        assert!((jac - DMatrix::identity(4, 4)).amax() < 1e-9);
    }

    #[test]
    fn linear_step_map_recovers_its_matrix() {
        let m = DMatrix::from_row_slice(2, 2, &[0.9, 0.1, -0.1, 0.9]);
        let mc = m.clone();
        let z = PhasePoint::new(dvector![1.0], dvector![2.0]).unwrap();
        let jac = flow_jacobian_fd(
            |z| PhasePoint::from_vector(&(&mc * z.to_vector())),
            &z,
            1e-6,
        )
        .unwrap();
        assert!((jac - m).amax() < 1e-9);
    }

    #[test]
    fn midpoint_oscillator_flow_jacobian_is_the_cayley_matrix() {
        let h = 0.1;
        let map = midpoint_map(1);
        let system = oscillator();
        let config = NewtonConfig::default().with_tol(1e-13);
        let z = PhasePoint::new(dvector![0.7], dvector![-0.3]).unwrap();
        let jac = flow_jacobian_fd(
            |state| step(&map, &system, h, state, &config),
            &z,
            default_probe_eps(&z),
        )
        .unwrap();
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let id = DMatrix::identity(2, 2);
        let cayley = (&id - (h / 2.0) * &a).try_inverse().unwrap() * (&id + (h / 2.0) * &a);
        assert!((jac - cayley).amax() < 1e-8);
    }

    #[test]
    fn symplectic_defect_hand_values() {
        assert_eq!(symplectic_defect(&DMatrix::identity(2, 2)).unwrap(), 0.0);
        let shear = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.5]);
        assert!(symplectic_defect(&shear).unwrap() < 1e-15);
        let doubled = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 2.0]);
        assert!((symplectic_defect(&doubled).unwrap() - 3.0).abs() < 1e-15);
    }

    #[test]
    fn symplectic_defect_rejects_odd_dimension() {
        assert!(symplectic_defect(&DMatrix::identity(3, 3)).is_err());
    }

    #[test]
    fn theta_flows_have_small_symplectic_defect() {
        let system = oscillator();
        let z = PhasePoint::new(dvector![0.9], dvector![0.4]).unwrap();
        let config = NewtonConfig::default().with_tol(1e-13);
        for &theta in &[0.0, 0.5, 1.0] {
            let map = theta_map(theta, 1).unwrap();
            let jac = flow_jacobian_fd(
                |state| step(&map, &system, 0.05, state, &config),
                &z,
                default_probe_eps(&z),
            )
            .unwrap();
            let defect = symplectic_defect(&jac).unwrap();
            assert!(defect < 1e-5, "theta {theta}: defect {defect:.3e}");
        }
    }

    #[test]
    fn constant_hamiltonian_has_zero_drift_series() {
        let system = HamiltonianSystem::with_gradient(
            1,
            |_| 42.0,
            |z: &PhasePoint| (DVector::zeros(z.dim()), DVector::zeros(z.dim())),
        );
        let traj = integrate(
            &midpoint_map(1),
            &system,
            0.1,
            20,
            &PhasePoint::new(dvector![1.0], dvector![0.0]).unwrap(),
            None,
            &NewtonConfig::default(),
        )
        .unwrap();
        let (max_abs, series) = energy_drift(&traj, &system).unwrap();
        assert_eq!(max_abs, 0.0);
        assert!(series.iter().all(|&d| d == 0.0));
    }

    #[test]
    fn explicit_euler_pair_oscillator_drift_stays_bounded() {
        let system = oscillator();
        let traj = integrate(
            &theta_map(0.0, 1).unwrap(),
            &system,
            0.05,
            10_000,
            &PhasePoint::new(dvector![1.0], dvector![0.0]).unwrap(),
            None,
            &NewtonConfig::default(),
        )
        .unwrap();
        let (max_abs, _) = energy_drift(&traj, &system).unwrap();
        assert!(max_abs < 0.01, "drift {max_abs:.3e}");
    }

    #[test]
    fn midpoint_order_two_on_oscillator() {
        let system = oscillator();
        let map = midpoint_map(1);
        let config = NewtonConfig::default().with_tol(1e-13);
        let z0 = PhasePoint::new(dvector![1.0], dvector![0.0]).unwrap();
        let t_final = 1.0;
        let estimate = convergence_order(
            &[0.2, 0.1, 0.05, 0.025],
            t_final,
            |h, steps| {
                integrate(&map, &system, h, steps, &z0, None, &config)
                    .map(|traj| traj.last().clone())
                    .map_err(|e| e.source)
            },
            &oscillator_exact(t_final, &z0),
        )
        .unwrap();
        assert!(
            (estimate.slope - 2.0).abs() < 0.1,
            "slope {}",
            estimate.slope
        );
        assert!(estimate.r_squared > 0.999);
    }

    #[test]
    fn explicit_euler_pair_order_one_on_oscillator() {
        let system = oscillator();
        let map = theta_map(0.0, 1).unwrap();
        let config = NewtonConfig::default().with_tol(1e-13);
        let z0 = PhasePoint::new(dvector![1.0], dvector![0.0]).unwrap();
        let t_final = 1.0;
        let estimate = convergence_order(
            &[0.2, 0.1, 0.05, 0.025],
            t_final,
            |h, steps| {
                integrate(&map, &system, h, steps, &z0, None, &config)
                    .map(|traj| traj.last().clone())
                    .map_err(|e| e.source)
            },
            &oscillator_exact(t_final, &z0),
        )
        .unwrap();
        assert!(
            (estimate.slope - 1.0).abs() < 0.1,
            "slope {}",
            estimate.slope
        );
    }

    #[test]
    fn order_fit_input_validation() {
        let reference = PhasePoint::new(dvector![0.0], dvector![0.0]).unwrap();
        let dummy = |_h: f64, _steps: usize| {
            PhasePoint::new(dvector![1.0], dvector![1.0])
        };
        assert!(convergence_order(&[0.2, 0.1], 1.0, dummy, &reference).is_err());
        assert!(convergence_order(&[0.1, 0.2, 0.05], 1.0, dummy, &reference).is_err());
        assert!(convergence_order(&[0.3, 0.2, 0.1], 1.0, dummy, &reference).is_err());
    }
}
