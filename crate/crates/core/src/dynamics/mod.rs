//! Time evolution of the perturbation Q in both representations, plus the
//! time-integrated Strichartz-type norms over trajectories.

pub mod rk4;
pub mod picard;
pub mod orbitals;
pub mod norms;

use std::sync::Arc;

use faer::Mat;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::grid::{self, GridSpec};
use crate::kernel::{self, density, DensityField, KernelOperator};
use crate::linalg;

pub use orbitals::{evolve_orbitals, orbitals_to_kernel, OrbitalSet, OrbitalTrajectory};
pub use picard::{picard_continuation, picard_solve, PicardMetric, PicardOutcome, WindowPolicy};
pub use rk4::{evolve_rk4, Rk4Options};

/// Free conjugation e^{itΔ} Q e^{−itΔ}:
/// Q̂(ξ,ξ′) ↦ e^{−it(|ξ|²−|ξ′|²)} Q̂(ξ,ξ′). Exact unitary phase map.
pub fn free_conjugate(q: &KernelOperator, t: f64) -> KernelOperator {
    let g = q.grid();
    let n = g.n_modes();
    let phases: Vec<C64> =
        g.xi2_all().iter().map(|&x2| C64::from_polar(1.0, -t * x2)).collect();
    let data = Mat::from_fn(n, n, |i, j| q.data()[(i, j)] * (phases[i] * phases[j].conj()));
    KernelOperator::new(g.clone(), data, q.hermitian()).expect("phase map preserves hermiticity")
}

/// Right-hand side of ∂_t Q = −i([−Δ, Q] + [V_{ρ_Q}, Π_μ^- + Q]), using
/// [−Δ, Π_μ^-] = 0 exactly. The potential matrix is mirrored to be
/// bitwise hermitian, so the output is bitwise hermitian too.
pub fn rhs(q: &KernelOperator) -> KernelOperator {
    assert!(q.hermitian(), "evolution acts on hermitian perturbations");
    let rho = density(q);
    rhs_with_potential(q, &rho)
}

pub(crate) fn rhs_with_potential(q: &KernelOperator, rho: &DensityField) -> KernelOperator {
    let g = q.grid();
    let n = g.n_modes();
    let v = potential_matrix_hermitian(g, rho);
    let pi = grid::fermi_projector(g);
    let vq = linalg::mul(v.as_ref(), q.data().as_ref());
    let xi2 = g.xi2_all();
    // half the antihermitian terms collected into D, then −i(D − D†): the
    // pairwise difference keeps the output hermitian to the last bit
    let d = Mat::from_fn(n, n, |i, j| {
        0.5 * (xi2[i] - xi2[j]) * q.data()[(i, j)]
            + 0.5 * (pi.values[j] - pi.values[i]) * v[(i, j)]
            + vq[(i, j)]
    });
    let data = Mat::from_fn(n, n, |i, j| {
        let a = d[(i, j)] - d[(j, i)].conj();
        C64::new(a.im, -a.re) // multiply by −i
    });
    KernelOperator::new_hermitian_unchecked(g.clone(), data)
}

/// Convolution matrix of ρ̂ on the mode band, mirrored across the diagonal so
/// hermiticity holds bitwise (ρ̂(−η) = conj ρ̂(η) only up to rounding).
pub(crate) fn potential_matrix_hermitian(g: &Arc<GridSpec>, rho: &DensityField) -> Mat<C64> {
    let n = g.n_modes();
    let mut v = Mat::<C64>::zeros(n, n);
    for j in 0..n {
        let kj = g.mode_k(j);
        for i in 0..=j {
            let z = rho.coefficients()[g.diff_index(&g.mode_k(i), &kj)];
            v[(i, j)] = z;
            v[(j, i)] = z.conj();
        }
    }
    v
}

/// Per-step scalar diagnostics, recorded at every integrator step.
#[derive(Debug, Clone, Copy)]
pub struct StepDiag {
    pub t: f64,
    pub trace: f64,
    pub kinetic: f64,
    pub potential: f64,
    pub energy: f64,
    pub s2_norm: f64,
}

pub fn step_diag(q: &KernelOperator, t: f64) -> StepDiag {
    let rho = density(q);
    let kinetic = kernel::relative_kinetic_energy(q);
    let potential = 0.5 * rho.integral_of_square();
    StepDiag {
        t,
        trace: q.trace().re,
        kinetic,
        potential,
        energy: kinetic + potential,
        s2_norm: linalg::frobenius(q.data()),
    }
}

/// Time-sampled kernel trajectory with cached densities. States are recorded
/// on a stride; scalar diagnostics cover every step.
#[derive(Debug, Clone)]
pub struct Trajectory {
    grid: Arc<GridSpec>,
    times: Vec<f64>,
    states: Vec<KernelOperator>,
    densities: Vec<DensityField>,
    step_diagnostics: Vec<StepDiag>,
}

impl Trajectory {
    pub fn from_states(states: Vec<KernelOperator>, times: Vec<f64>) -> Result<Self> {
        if states.is_empty() || states.len() != times.len() {
            return Err(Error::InvalidParameter("empty or mismatched trajectory".into()));
        }
        if !times.windows(2).all(|w| w[1] > w[0]) {
            return Err(Error::InvalidParameter("trajectory times must strictly increase".into()));
        }
        let grid = states[0].grid().clone();
        for s in &states {
            grid.check_same(s.grid())?;
        }
        let densities = states.iter().map(density).collect();
        let step_diagnostics =
            states.iter().zip(&times).map(|(s, &t)| step_diag(s, t)).collect();
        Ok(Trajectory { grid, times, states, densities, step_diagnostics })
    }

    pub(crate) fn from_parts(
        grid: Arc<GridSpec>,
        times: Vec<f64>,
        states: Vec<KernelOperator>,
        densities: Vec<DensityField>,
        step_diagnostics: Vec<StepDiag>,
    ) -> Self {
        Trajectory { grid, times, states, densities, step_diagnostics }
    }

    pub fn grid(&self) -> &Arc<GridSpec> {
        &self.grid
    }
    pub fn times(&self) -> &[f64] {
        &self.times
    }
    pub fn states(&self) -> &[KernelOperator] {
        &self.states
    }
    pub fn densities(&self) -> &[DensityField] {
        &self.densities
    }
    pub fn step_diagnostics(&self) -> &[StepDiag] {
        &self.step_diagnostics
    }
    pub fn len(&self) -> usize {
        self.times.len()
    }
    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
    pub fn initial(&self) -> &KernelOperator {
        &self.states[0]
    }
    pub fn terminal(&self) -> &KernelOperator {
        self.states.last().unwrap()
    }

    /// Uniform sample spacing, if the recorded times are uniform.
    pub fn uniform_dt(&self) -> Option<f64> {
        if self.times.len() < 2 {
            return None;
        }
        let h = self.times[1] - self.times[0];
        let ok = self
            .times
            .windows(2)
            .all(|w| ((w[1] - w[0]) - h).abs() <= 1e-9 * h.max(1.0));
        ok.then_some(h)
    }

    /// Largest hermiticity residue across recorded states.
    pub fn worst_hermiticity_residue(&self) -> f64 {
        self.states.iter().map(|s| s.hermitian_residue()).fold(0.0, f64::max)
    }
}

/// Strichartz-admissible exponent pair: 2/q + d/r = d/2, q,r ≥ 2,
/// (q,r,d) ≠ (2,∞,2).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmissiblePair {
    pub q: f64,
    pub r: f64,
}

impl AdmissiblePair {
    pub fn new(q: f64, r: f64, d: usize) -> Result<Self> {
        let lhs = 2.0 / q + d as f64 / r; // q or r = ∞ contribute 0
        if !(q >= 2.0) || !(r >= 2.0) {
            return Err(Error::InadmissiblePair { q, r, d });
        }
        if (lhs - d as f64 / 2.0).abs() > 1e-12 {
            return Err(Error::InadmissiblePair { q, r, d });
        }
        if d == 2 && q == 2.0 && r.is_infinite() {
            return Err(Error::InadmissiblePair { q, r, d });
        }
        Ok(AdmissiblePair { q, r })
    }

    pub fn label(&self) -> String {
        let fmt = |v: f64| {
            if v.is_infinite() {
                "inf".to_string()
            } else if (v - v.round()).abs() < 1e-9 {
                format!("{}", v.round() as i64)
            } else {
                format!("{v:.3}")
            }
        };
        format!("q{}_r{}", fmt(self.q), fmt(self.r))
    }
}
