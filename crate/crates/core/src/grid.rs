//! Discrete periodic box, Fourier mode set, and multiplier symbols.
//!
//! Modes are ξ = (2π/L)k with k ∈ {−M/2, …, M/2−1}^d, enumerated in
//! lexicographic order of k (first component outermost). That order is part
//! of the on-disk contract for every exported matrix.

use std::sync::Arc;

use crate::error::{Error, Result};

/// Spatial dimension cap; arrays indexed by dimension use fixed `[_; 3]`
/// storage with trailing components unused for d < 3.
pub const MAX_D: usize = 3;

#[derive(Debug, Clone)]
pub struct GridSpec {
    d: usize,
    m: usize,
    l: f64,
    mu: f64,
    fermi_floor: f64,
    /// Integer mode multi-indices in canonical order.
    modes: Vec<[i64; MAX_D]>,
    /// |ξ|² per mode, same order.
    xi2: Vec<f64>,
    /// |η|² per point of the difference lattice (η = ξ − ξ′).
    diff_eta2: Vec<f64>,
}

/// Kind tag for multiplier masks: sharp 0/1 spectral projectors vs smooth
/// positive weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaskKind {
    Projector,
    Weight,
}

/// A real multiplier symbol sampled on the mode set.
#[derive(Debug, Clone)]
pub struct MultiplierMask {
    pub values: Vec<f64>,
    pub kind: MaskKind,
}

impl MultiplierMask {
    /// Complement of a 0/1 projector mask, so that the pair sums to ones.
    pub fn complement(&self) -> MultiplierMask {
        assert_eq!(self.kind, MaskKind::Projector, "complement of a weight mask");
        MultiplierMask {
            values: self.values.iter().map(|&v| 1.0 - v).collect(),
            kind: MaskKind::Projector,
        }
    }

    pub fn selected_count(&self) -> usize {
        self.values.iter().filter(|&&v| v != 0.0).count()
    }
}

/// Builds the grid, enumerating modes in canonical (lexicographic) order.
pub fn build_grid(d: usize, m: usize, l: f64, mu: f64, fermi_floor: f64) -> Result<Arc<GridSpec>> {
    let mut problems = Vec::new();
    if !(1..=MAX_D).contains(&d) {
        problems.push(format!("dimension must be 1, 2 or 3 (got {d})"));
    }
    if m % 2 != 0 || m < 4 {
        problems.push(format!("modes_per_dim must be even and >= 4 (got {m})"));
    }
    if !(l > 0.0) {
        problems.push(format!("box_length must be > 0 (got {l})"));
    }
    if !(mu > 0.0) {
        problems.push(format!("mu must be > 0 (got {mu})"));
    }
    if fermi_floor < 0.0 {
        problems.push(format!("fermi_floor must be >= 0 (got {fermi_floor})"));
    }
    if !problems.is_empty() {
        return Err(Error::Config(problems));
    }

    let half = (m / 2) as i64;
    let n = m.pow(d as u32);
    let mut modes = Vec::with_capacity(n);
    let mut idx = vec![0i64; d];
    // lexicographic: first component is the slowest index
    for flat in 0..n {
        let mut rem = flat;
        for axis in (0..d).rev() {
            idx[axis] = (rem % m) as i64 - half;
            rem /= m;
        }
        let mut k = [0i64; MAX_D];
        k[..d].copy_from_slice(&idx);
        modes.push(k);
    }
    let dxi = 2.0 * std::f64::consts::PI / l;
    let xi2 = modes
        .iter()
        .map(|k| k[..d].iter().map(|&ki| (ki as f64 * dxi).powi(2)).sum())
        .collect();

    let diff_side = 2 * m - 1;
    let diff_len = diff_side.pow(d as u32);
    let mut diff_eta2 = Vec::with_capacity(diff_len);
    for flat in 0..diff_len {
        let mut rem = flat;
        let mut e2 = 0.0;
        for _axis in 0..d {
            let mi = (rem % diff_side) as i64 - (m as i64 - 1);
            rem /= diff_side;
            e2 += (mi as f64 * dxi).powi(2);
        }
        diff_eta2.push(e2);
    }

    Ok(Arc::new(GridSpec { d, m, l, mu, fermi_floor, modes, xi2, diff_eta2 }))
}

impl GridSpec {
    pub fn d(&self) -> usize {
        self.d
    }
    pub fn modes_per_dim(&self) -> usize {
        self.m
    }
    pub fn box_length(&self) -> f64 {
        self.l
    }
    pub fn mu(&self) -> f64 {
        self.mu
    }
    pub fn fermi_floor(&self) -> f64 {
        self.fermi_floor
    }
    /// Mode spacing 2π/L.
    pub fn dxi(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.l
    }
    pub fn n_modes(&self) -> usize {
        self.modes.len()
    }
    pub fn volume(&self) -> f64 {
        self.l.powi(self.d as i32)
    }
    pub fn mode_k(&self, idx: usize) -> [i64; MAX_D] {
        self.modes[idx]
    }
    pub fn modes(&self) -> &[[i64; MAX_D]] {
        &self.modes
    }
    pub fn xi(&self, idx: usize) -> [f64; MAX_D] {
        let dxi = self.dxi();
        let k = self.modes[idx];
        let mut xi = [0.0; MAX_D];
        for a in 0..self.d {
            xi[a] = k[a] as f64 * dxi;
        }
        xi
    }
    pub fn xi2(&self, idx: usize) -> f64 {
        self.xi2[idx]
    }
    pub fn xi2_all(&self) -> &[f64] {
        &self.xi2
    }

    /// Flat index of an integer mode k, if on the lattice.
    pub fn mode_index(&self, k: &[i64]) -> Option<usize> {
        let half = (self.m / 2) as i64;
        let mut flat = 0usize;
        for a in 0..self.d {
            if k[a] < -half || k[a] >= half {
                return None;
            }
            flat = flat * self.m + (k[a] + half) as usize;
        }
        Some(flat)
    }

    // --- difference lattice η = ξ_row − ξ_col -------------------------------

    pub fn diff_side(&self) -> usize {
        2 * self.m - 1
    }
    pub fn diff_len(&self) -> usize {
        self.diff_eta2.len()
    }
    pub fn diff_eta2(&self, didx: usize) -> f64 {
        self.diff_eta2[didx]
    }
    pub fn diff_eta2_all(&self) -> &[f64] {
        &self.diff_eta2
    }

    /// Flat difference-lattice index of m = k_row − k_col.
    #[inline]
    pub fn diff_index(&self, k_row: &[i64; MAX_D], k_col: &[i64; MAX_D]) -> usize {
        let side = (2 * self.m - 1) as i64;
        let off = self.m as i64 - 1;
        let mut flat = 0i64;
        for a in 0..self.d {
            flat = flat * side + (k_row[a] - k_col[a] + off);
        }
        flat as usize
    }

    /// Integer offset m of a flat difference index.
    pub fn diff_m(&self, didx: usize) -> [i64; MAX_D] {
        let side = self.diff_side();
        let off = self.m as i64 - 1;
        let mut rem = didx;
        let mut out = [0i64; MAX_D];
        for a in (0..self.d).rev() {
            out[a] = (rem % side) as i64 - off;
            rem /= side;
        }
        out
    }

    /// Grids are compatible when all defining parameters agree.
    pub fn same_as(&self, other: &GridSpec) -> bool {
        self.d == other.d
            && self.m == other.m
            && self.l == other.l
            && self.mu == other.mu
            && self.fermi_floor == other.fermi_floor
    }

    pub fn check_same(&self, other: &GridSpec) -> Result<()> {
        if self.same_as(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "(d={}, M={}, L={}, mu={}) vs (d={}, M={}, L={}, mu={})",
                self.d, self.m, self.l, self.mu, other.d, other.m, other.l, other.mu
            )))
        }
    }

    /// FNV-1a hash of the canonical mode enumeration; part of the container
    /// header so imported matrices are rejected on any ordering change.
    pub fn mode_order_hash(&self) -> u64 {
        let mut h: u64 = 0xcbf29ce484222325;
        let mut eat = |v: i64| {
            for b in v.to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x100000001b3);
            }
        };
        eat(self.d as i64);
        eat(self.m as i64);
        for k in &self.modes {
            for a in 0..self.d {
                eat(k[a]);
            }
        }
        h
    }
}

// --- multiplier symbols ------------------------------------------------------

/// Fermi-sea projector Π_μ^-: 1 exactly on modes with |ξ|² ≤ μ.
pub fn fermi_projector(grid: &GridSpec) -> MultiplierMask {
    MultiplierMask {
        values: grid.xi2.iter().map(|&x2| if x2 <= grid.mu { 1.0 } else { 0.0 }).collect(),
        kind: MaskKind::Projector,
    }
}

/// Low-frequency band projector Π_r^-: 1 on |ξ| ≤ r.
pub fn band_projector(grid: &GridSpec, r: f64) -> Result<MultiplierMask> {
    if !(r > 0.0) {
        return Err(Error::InvalidParameter(format!("band radius must be > 0 (got {r})")));
    }
    let r2 = r * r;
    Ok(MultiplierMask {
        values: grid.xi2.iter().map(|&x2| if x2 <= r2 { 1.0 } else { 0.0 }).collect(),
        kind: MaskKind::Projector,
    })
}

/// Cutoff away from the Fermi surface: 1 where 1/n ≤ ||ξ|²−μ| ≤ n.
pub fn pn_cutoff_mask(grid: &GridSpec, n: f64) -> Result<MultiplierMask> {
    if !(n >= 1.0) {
        return Err(Error::InvalidParameter(format!("P_n cutoff requires n >= 1 (got {n})")));
    }
    Ok(MultiplierMask {
        values: grid
            .xi2
            .iter()
            .map(|&x2| {
                let w = (x2 - grid.mu).abs();
                if w >= 1.0 / n && w <= n {
                    1.0
                } else {
                    0.0
                }
            })
            .collect(),
        kind: MaskKind::Projector,
    })
}

/// ⟨ξ⟩^α = (1+|ξ|²)^{α/2}.
pub fn sobolev_weight(grid: &GridSpec, alpha: f64) -> MultiplierMask {
    MultiplierMask {
        values: grid.xi2.iter().map(|&x2| (1.0 + x2).powf(alpha / 2.0)).collect(),
        kind: MaskKind::Weight,
    }
}

/// max(||ξ|²−μ|, ε_f)^{1/2}: the relative kinetic weight.
pub fn kinetic_weight(grid: &GridSpec) -> MultiplierMask {
    MultiplierMask {
        values: grid
            .xi2
            .iter()
            .map(|&x2| (x2 - grid.mu).abs().max(grid.fermi_floor).sqrt())
            .collect(),
        kind: MaskKind::Weight,
    }
}

/// Modes sitting exactly on the Fermi surface (|ξ|² = μ): excluded from every
/// P_n and reported separately by convergence diagnostics.
pub fn surface_modes(grid: &GridSpec) -> Vec<usize> {
    grid.xi2.iter().enumerate().filter(|(_, &x2)| x2 == grid.mu).map(|(i, _)| i).collect()
}
