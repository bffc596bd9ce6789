//! Classical fixed-step RK4 on the kernel equation; the reference integrator
//! every other solver is cross-validated against.

use faer::Mat;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::kernel::{density, KernelOperator};
use crate::linalg;

use super::{rhs_with_potential, step_diag, StepDiag, Trajectory};

#[derive(Debug, Clone, Copy)]
pub struct Rk4Options {
    /// Record the full state every this many steps (step 0 and the final
    /// step are always recorded). Scalar diagnostics cover every step.
    pub record_every: usize,
    /// Abort when the 𝔖² norm exceeds `blowup_factor × (‖Q₀‖_{𝔖²} + 1)`.
    pub blowup_factor: f64,
}

impl Default for Rk4Options {
    fn default() -> Self {
        Rk4Options { record_every: 10, blowup_factor: 1e3 }
    }
}

fn rhs_mat(q: &KernelOperator) -> Mat<C64> {
    let rho = density(q);
    rhs_with_potential(q, &rho).data().clone()
}

/// Integrate ∂_t Q = −i([−Δ,Q] + [ρ_Q, Π+Q]) from `q0` over [0,T] with the
/// classical 4th-order scheme. `dt` is snapped so that T/dt is an integer
/// step count.
pub fn evolve_rk4(q0: &KernelOperator, t_final: f64, dt: f64, opts: Rk4Options) -> Result<Trajectory> {
    if !(dt > 0.0) || !(t_final >= dt) {
        return Err(Error::InvalidParameter(format!(
            "need 0 < dt <= T (got dt={dt}, T={t_final})"
        )));
    }
    assert!(q0.hermitian());
    let steps = (t_final / dt).round().max(1.0) as usize;
    let h = t_final / steps as f64;
    let grid = q0.grid().clone();
    let guard = opts.blowup_factor * (linalg::frobenius(q0.data()) + 1.0);

    let mut q = q0.clone();
    let mut times = vec![0.0];
    let mut states = vec![q0.clone()];
    let mut diags: Vec<StepDiag> = vec![step_diag(&q, 0.0)];

    let half = C64::new(0.5 * h, 0.0);
    let sixth = h / 6.0;
    for step in 1..=steps {
        let k1 = rhs_mat(&q);
        let mut stage = q.data().clone();
        linalg::axpy(&mut stage, half, &k1);
        let k2 = rhs_mat(&KernelOperator::new_hermitian_unchecked(grid.clone(), stage));

        let mut stage = q.data().clone();
        linalg::axpy(&mut stage, half, &k2);
        let k3 = rhs_mat(&KernelOperator::new_hermitian_unchecked(grid.clone(), stage));

        let mut stage = q.data().clone();
        linalg::axpy(&mut stage, C64::new(h, 0.0), &k3);
        let k4 = rhs_mat(&KernelOperator::new_hermitian_unchecked(grid.clone(), stage));

        let mut next = q.data().clone();
        linalg::axpy(&mut next, C64::new(sixth, 0.0), &k1);
        linalg::axpy(&mut next, C64::new(2.0 * sixth, 0.0), &k2);
        linalg::axpy(&mut next, C64::new(2.0 * sixth, 0.0), &k3);
        linalg::axpy(&mut next, C64::new(sixth, 0.0), &k4);
        q = KernelOperator::new_hermitian_unchecked(grid.clone(), next);

        let t = step as f64 * h;
        let diag = step_diag(&q, t);
        if !diag.s2_norm.is_finite() || diag.s2_norm > guard {
            return Err(Error::BlowUp { t, norm: diag.s2_norm, limit: guard });
        }
        diags.push(diag);
        if step % opts.record_every == 0 || step == steps {
            debug_assert!(q.hermitian_residue() <= crate::kernel::HERMITICITY_TOL);
            times.push(t);
            states.push(q.clone());
        }
    }

    let densities = states.iter().map(density).collect();
    Ok(Trajectory::from_parts(grid, times, states, densities, diags))
}
