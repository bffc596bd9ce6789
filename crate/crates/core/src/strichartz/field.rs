//! Space-time test fields V(t,x) and their discrete transform Ṽ(τ,ξ).
//!
//! The transform is scaled so discrete Parseval is exact:
//! Σ |Ṽ|² Δτ Δξ^d = Σ |V|² Δt Δx^d, matching the unitary continuum
//! convention in which the d=1 dual integral equals ½‖V‖² exactly.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::transform;

#[derive(Debug, Clone)]
pub struct SpaceTimeField {
    d: usize,
    /// Explicit frequency sample points (physical units).
    xi: Vec<[f64; 3]>,
    /// Frequency cell measure Δξ^d.
    xi_cell: f64,
    tau0: f64,
    dtau: f64,
    /// values[i][m] = Ṽ(τ₀ + m Δτ, ξ_i).
    values: Vec<Vec<C64>>,
    /// Time-window length the field was built on (provenance).
    window: f64,
}

impl SpaceTimeField {
    /// Discrete space-time transform of samples V(t_j, x_p) on
    /// [0, T_w) × box, t_j = j T_w/S (S even), x_p the M^d spatial grid.
    pub fn from_time_samples(
        grid: &GridSpec,
        window: f64,
        samples: &[Vec<C64>],
    ) -> Result<SpaceTimeField> {
        let s = samples.len();
        if s < 2 || s % 2 != 0 {
            return Err(Error::InvalidParameter(format!(
                "need an even number >= 2 of time samples (got {s})"
            )));
        }
        if !(window > 0.0) {
            return Err(Error::InvalidParameter("window must be positive".into()));
        }
        let n = grid.n_modes();
        for row in samples {
            if row.len() != n {
                return Err(Error::InvalidParameter("spatial sample size mismatch".into()));
            }
        }
        let d = grid.d();
        let dt = window / s as f64;
        let vol = grid.volume();
        let scale =
            (2.0 * std::f64::consts::PI).powf(-((d + 1) as f64) / 2.0) * dt * vol;
        // spatial analysis per time slice: L^d · (1/M^d) Σ_p V e^{−iξ·x_p};
        // all-zero slices (zero-padded windows) are skipped
        let zero = C64::new(0.0, 0.0);
        let spatial: Vec<(usize, Vec<C64>)> = samples
            .iter()
            .enumerate()
            .filter(|(_, row)| row.iter().any(|z| *z != zero))
            .map(|(j, row)| {
                (j, transform::analyze_spatial_to_modes(grid, row, grid.modes_per_dim()))
            })
            .collect();
        // time DFT at τ_m = 2π m / T_w, m ∈ [−S/2, S/2)
        let half = (s / 2) as i64;
        let dtau = 2.0 * std::f64::consts::PI / window;
        let tau0 = -(half as f64) * dtau;
        let mut values = vec![vec![C64::new(0.0, 0.0); s]; n];
        for (k, col) in values.iter_mut().enumerate() {
            for (mi, slot) in col.iter_mut().enumerate() {
                let m = mi as i64 - half;
                let mut acc = C64::new(0.0, 0.0);
                for (j, slice) in &spatial {
                    let phase = -2.0 * std::f64::consts::PI * (m * (*j) as i64) as f64 / s as f64;
                    acc += slice[k] * C64::from_polar(1.0, phase);
                }
                *slot = acc * scale;
            }
        }
        let xi: Vec<[f64; 3]> = (0..n).map(|k| grid.xi(k)).collect();
        Ok(SpaceTimeField {
            d,
            xi,
            xi_cell: grid.dxi().powi(d as i32),
            tau0,
            dtau,
            values,
            window,
        })
    }

    /// Field given directly by frequency samples on an explicit ξ point set
    /// and a uniform τ grid (used by the optimality test family).
    pub fn from_freq_columns(
        d: usize,
        xi: Vec<[f64; 3]>,
        xi_cell: f64,
        tau0: f64,
        dtau: f64,
        values: Vec<Vec<C64>>,
    ) -> Result<SpaceTimeField> {
        if xi.len() != values.len() {
            return Err(Error::InvalidParameter("xi/value length mismatch".into()));
        }
        if !(dtau > 0.0) || !(xi_cell > 0.0) {
            return Err(Error::InvalidParameter("dtau and xi_cell must be positive".into()));
        }
        Ok(SpaceTimeField { d, xi, xi_cell, tau0, dtau, values, window: 0.0 })
    }

    pub fn d(&self) -> usize {
        self.d
    }
    pub fn window(&self) -> f64 {
        self.window
    }
    pub fn xi_cell(&self) -> f64 {
        self.xi_cell
    }
    pub fn dtau(&self) -> f64 {
        self.dtau
    }
    pub fn n_points(&self) -> usize {
        self.xi.len()
    }
    pub fn xi(&self, i: usize) -> [f64; 3] {
        self.xi[i]
    }
    pub fn xi_norm(&self, i: usize) -> f64 {
        let x = self.xi[i];
        (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()
    }
    pub fn tau_at(&self, m: usize) -> f64 {
        self.tau0 + m as f64 * self.dtau
    }
    pub fn column(&self, i: usize) -> &[C64] {
        &self.values[i]
    }

    /// Linear interpolation of Ṽ(·, ξ_i) in τ; zero outside the sampled
    /// window (the field has compact support on the discrete lattice).
    pub fn at_tau(&self, i: usize, tau: f64) -> C64 {
        let col = &self.values[i];
        let pos = (tau - self.tau0) / self.dtau;
        if pos < 0.0 || pos > (col.len() - 1) as f64 {
            return C64::new(0.0, 0.0);
        }
        let lo = pos.floor() as usize;
        if lo + 1 >= col.len() {
            return col[col.len() - 1];
        }
        let frac = pos - lo as f64;
        col[lo] * (1.0 - frac) + col[lo + 1] * frac
    }

    /// ‖V‖_{L²_t L²_x} via exact discrete Parseval.
    pub fn norm_l2(&self) -> f64 {
        let mut acc = 0.0;
        for col in &self.values {
            for z in col {
                acc += z.norm_sqr();
            }
        }
        (acc * self.dtau * self.xi_cell).sqrt()
    }
}
