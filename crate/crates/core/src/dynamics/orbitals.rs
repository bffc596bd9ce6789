//! Finite-N orbital representation and the Strang split-step solver for the
//! coupled self-consistent system i∂_t u_j = (−Δ + ρ)u_j, ρ = Σ|u_j|².
//!
//! The potential phase is applied pointwise on a 2× zero-padded spatial grid
//! and projected back to the mode band, so the convolution never wraps and
//! the dynamics stays consistent with the kernel-side solvers.

use std::sync::Arc;

use faer::Mat;
use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
use crate::grid::{self, GridSpec};
use crate::kernel::KernelOperator;
use crate::linalg;
use crate::transform;

pub const ORTHONORMALITY_TOL: f64 = 1e-10;

/// N orthonormal single-particle states, columns of an n×N coefficient
/// matrix in the plane-wave basis.
#[derive(Debug, Clone)]
pub struct OrbitalSet {
    grid: Arc<GridSpec>,
    coeffs: Mat<C64>,
}

impl OrbitalSet {
    pub fn new(grid: Arc<GridSpec>, coeffs: Mat<C64>) -> Result<Self> {
        if coeffs.nrows() != grid.n_modes() {
            return Err(Error::InvalidParameter(format!(
                "orbital coefficients have {} rows, grid has {} modes",
                coeffs.nrows(),
                grid.n_modes()
            )));
        }
        let set = OrbitalSet { grid, coeffs };
        let drift = set.gram_drift();
        if drift > ORTHONORMALITY_TOL {
            return Err(Error::InvalidParameter(format!(
                "orbitals are not orthonormal (Gram drift {drift:.2e})"
            )));
        }
        Ok(set)
    }

    pub fn grid(&self) -> &Arc<GridSpec> {
        &self.grid
    }
    pub fn coeffs(&self) -> &Mat<C64> {
        &self.coeffs
    }
    pub fn count(&self) -> usize {
        self.coeffs.ncols()
    }

    /// max |U†U − I|.
    pub fn gram_drift(&self) -> f64 {
        let nv = self.count();
        if nv == 0 {
            return 0.0;
        }
        let g = linalg::mul_left_adjoint(self.coeffs.as_ref(), self.coeffs.as_ref());
        let mut worst = 0.0f64;
        for i in 0..nv {
            for j in 0..nv {
                let target = if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
                worst = worst.max((g[(i, j)] - target).norm());
            }
        }
        worst
    }

    /// Plane waves filling the Fermi sea.
    pub fn fermi_sea(grid: Arc<GridSpec>) -> Self {
        let mask = grid::fermi_projector(&grid);
        let sea: Vec<usize> =
            (0..grid.n_modes()).filter(|&i| mask.values[i] != 0.0).collect();
        let mut coeffs = Mat::zeros(grid.n_modes(), sea.len());
        for (c, &i) in sea.iter().enumerate() {
            coeffs[(i, c)] = C64::new(1.0, 0.0);
        }
        OrbitalSet { grid, coeffs }
    }

    /// Fermi sea plus `extra` random orthonormal particle states above the
    /// surface (seeded). The particle pool is the lowest above-surface
    /// shells: band-edge content would leak out of the mode band through
    /// the density product and erode orthonormality.
    pub fn fermi_sea_with_particles(grid: Arc<GridSpec>, extra: usize, seed: u64) -> Result<Self> {
        let sea = Self::fermi_sea(grid.clone());
        if extra == 0 {
            return Ok(sea);
        }
        let mask = grid::fermi_projector(&grid);
        let mut above: Vec<usize> =
            (0..grid.n_modes()).filter(|&i| mask.values[i] == 0.0).collect();
        if above.len() < extra {
            return Err(Error::InvalidParameter(format!(
                "grid has only {} modes above the surface, {extra} particles requested",
                above.len()
            )));
        }
        above.sort_by(|&a, &b| {
            grid.xi2(a).partial_cmp(&grid.xi2(b)).unwrap().then(a.cmp(&b))
        });
        above.truncate((4 * extra).max(12).min(above.len()));
        let above = above;
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let n = grid.n_modes();
        let ns = sea.count();
        let mut coeffs = Mat::zeros(n, ns + extra);
        for j in 0..ns {
            for i in 0..n {
                coeffs[(i, j)] = sea.coeffs[(i, j)];
            }
        }
        let mut made = 0usize;
        let mut cols: Vec<Vec<C64>> = Vec::new();
        use rand::Rng;
        use rand_distr::StandardNormal;
        while made < extra {
            let mut v = vec![C64::new(0.0, 0.0); n];
            for &i in &above {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                v[i] = C64::new(re, im);
            }
            for prev in &cols {
                let ip: C64 = prev.iter().zip(&v).map(|(p, x)| p.conj() * x).sum();
                for (x, p) in v.iter_mut().zip(prev) {
                    *x -= ip * p;
                }
            }
            let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if norm < 1e-6 {
                continue;
            }
            for x in v.iter_mut() {
                *x /= norm;
            }
            cols.push(v);
            made += 1;
        }
        for (e, v) in cols.iter().enumerate() {
            for i in 0..n {
                coeffs[(i, ns + e)] = v[i];
            }
        }
        OrbitalSet::new(grid, coeffs)
    }
}

/// γ_N = Σ_j |u_j⟩⟨u_j|: rank-N hermitian PSD kernel with trace N.
pub fn orbitals_to_kernel(set: &OrbitalSet) -> KernelOperator {
    let gamma = linalg::mul_right_adjoint(set.coeffs.as_ref(), set.coeffs.as_ref());
    let gamma = linalg::hermitize(&gamma);
    KernelOperator::new_hermitian_unchecked(set.grid.clone(), gamma)
}

#[derive(Debug, Clone)]
pub struct OrbitalTrajectory {
    pub times: Vec<f64>,
    pub sets: Vec<OrbitalSet>,
    /// Gram drift per integrator step.
    pub gram_drifts: Vec<f64>,
}

impl OrbitalTrajectory {
    pub fn terminal(&self) -> &OrbitalSet {
        self.sets.last().unwrap()
    }
    pub fn max_gram_drift(&self) -> f64 {
        self.gram_drifts.iter().fold(0.0, |a, &b| a.max(b))
    }
}

/// Strang split-step: half kinetic phase in frequency, full potential phase
/// pointwise (ρ frozen per substep) on the padded grid, half kinetic.
pub fn evolve_orbitals(
    set: &OrbitalSet,
    t_final: f64,
    dt: f64,
    record_every: usize,
    drift_guard: f64,
) -> Result<OrbitalTrajectory> {
    if !(dt > 0.0) || !(t_final >= dt) {
        return Err(Error::InvalidParameter(format!(
            "need 0 < dt <= T (got dt={dt}, T={t_final})"
        )));
    }
    let g = set.grid().clone();
    let n = g.n_modes();
    let nv = set.count();
    let steps = (t_final / dt).round().max(1.0) as usize;
    let h = t_final / steps as f64;
    let record_every = record_every.max(1);

    if nv == 0 {
        return Ok(OrbitalTrajectory { times: vec![0.0], sets: vec![set.clone()], gram_drifts: vec![0.0] });
    }

    let pad = 2 * g.modes_per_dim();
    let npad = pad.pow(g.d() as u32);
    let synth_table = transform::mode_axis_table(&g, pad);
    let analysis_table = transform::mode_axis_analysis_table(&g, pad);
    let half_phase: Vec<C64> =
        g.xi2_all().iter().map(|&x2| C64::from_polar(1.0, -0.5 * h * x2)).collect();
    let inv_vol = 1.0 / g.volume();

    let mut coeffs = set.coeffs.clone();
    let mut times = vec![0.0];
    let mut sets = vec![set.clone()];
    let mut gram_drifts = vec![set.gram_drift()];

    let mut spatial: Vec<Vec<C64>> = vec![vec![C64::new(0.0, 0.0); npad]; nv];
    for step in 1..=steps {
        // half kinetic
        for j in 0..nv {
            for (c, p) in linalg::col_slice_mut(&mut coeffs, j).iter_mut().zip(&half_phase) {
                *c *= p;
            }
        }
        // potential phase on the padded grid with frozen ρ
        let mut rho = vec![0.0f64; npad];
        for j in 0..nv {
            let col = linalg::col_slice(&coeffs, j).to_vec();
            let mut shape = vec![g.modes_per_dim(); g.d()];
            let mut cur = col;
            for axis in 0..g.d() {
                cur = transform::axis_contract(&cur, &mut shape, axis, &synth_table, pad);
            }
            for (r, z) in rho.iter_mut().zip(&cur) {
                *r += z.norm_sqr() * inv_vol;
            }
            spatial[j] = cur;
        }
        for j in 0..nv {
            for (z, &r) in spatial[j].iter_mut().zip(&rho) {
                *z *= C64::from_polar(1.0, -h * r);
            }
            let mut shape = vec![pad; g.d()];
            let mut cur = spatial[j].clone();
            for axis in 0..g.d() {
                cur =
                    transform::axis_contract(&cur, &mut shape, axis, &analysis_table, g.modes_per_dim());
            }
            linalg::col_slice_mut(&mut coeffs, j).copy_from_slice(&cur);
        }
        // half kinetic
        for j in 0..nv {
            for (c, p) in linalg::col_slice_mut(&mut coeffs, j).iter_mut().zip(&half_phase) {
                *c *= p;
            }
        }

        let current = OrbitalSet { grid: g.clone(), coeffs: coeffs.clone() };
        let drift = current.gram_drift();
        if drift > drift_guard {
            return Err(Error::BlowUp {
                t: step as f64 * h,
                norm: drift,
                limit: drift_guard,
            });
        }
        gram_drifts.push(drift);
        if step % record_every == 0 || step == steps {
            times.push(step as f64 * h);
            sets.push(current);
        }
    }
    let _ = n;
    Ok(OrbitalTrajectory { times, sets, gram_drifts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;

    const TAU: f64 = 2.0 * std::f64::consts::PI;

    #[test]
    fn single_plane_wave_phase() {
        let g = build_grid(2, 8, TAU, 1.0, 0.0).unwrap();
        let n = g.n_modes();
        let idx = g.mode_index(&[1, 1]).unwrap();
        let mut coeffs = Mat::<C64>::zeros(n, 1);
        coeffs[(idx, 0)] = C64::new(1.0, 0.0);
        let set = OrbitalSet::new(g.clone(), coeffs).unwrap();
        let t = 0.5;
        let traj = evolve_orbitals(&set, t, 1e-3, 1000, 1e-6).unwrap();
        let rho = 1.0 / g.volume();
        let expect = C64::from_polar(1.0, -(g.xi2(idx) + rho) * t);
        let got = traj.terminal().coeffs()[(idx, 0)];
        assert!((got - expect).norm() < 1e-10, "phase error {:.2e}", (got - expect).norm());
        // modulus stays one on the single occupied mode, zero elsewhere
        for i in 0..n {
            let m = traj.terminal().coeffs()[(i, 0)].norm();
            let want = if i == idx { 1.0 } else { 0.0 };
            assert!((m - want).abs() < 1e-10);
        }
    }

    #[test]
    fn empty_set_is_noop() {
        let g = build_grid(2, 8, TAU, 1.0, 0.0).unwrap();
        let set = OrbitalSet::new(g.clone(), Mat::zeros(g.n_modes(), 0)).unwrap();
        let traj = evolve_orbitals(&set, 1.0, 0.1, 1, 1e-8).unwrap();
        assert_eq!(traj.sets.len(), 1);
        assert_eq!(traj.max_gram_drift(), 0.0);
    }

    #[test]
    fn projector_kernel_from_orbitals() {
        let g = build_grid(2, 8, TAU, 1.0, 0.0).unwrap();
        let set = OrbitalSet::fermi_sea_with_particles(g.clone(), 2, 77).unwrap();
        let gamma = orbitals_to_kernel(&set);
        assert!((gamma.trace().re - set.count() as f64).abs() < 1e-12);
        let eigs = gamma.eigenvalues();
        let ones = eigs.iter().filter(|&&w| (w - 1.0).abs() < 1e-10).count();
        let zeros = eigs.iter().filter(|&&w| w.abs() < 1e-10).count();
        assert_eq!(ones, set.count());
        assert_eq!(zeros, g.n_modes() - set.count());
    }

    #[test]
    fn orthonormality_is_preserved() {
        let g = build_grid(2, 16, TAU, 1.05, 0.0).unwrap();
        let set = OrbitalSet::fermi_sea_with_particles(g.clone(), 2, 5).unwrap();
        let traj = evolve_orbitals(&set, 1.0, 2e-3, 100, 1e-6).unwrap();
        assert!(
            traj.max_gram_drift() < 1e-8,
            "Gram drift {:.2e} over T=1",
            traj.max_gram_drift()
        );
    }
}
