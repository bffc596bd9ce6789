//! Separable spectral synthesis between frequency lattices and uniform
//! spatial grids. Grids are small (M ≤ 64 per axis), so per-axis dense
//! contractions beat an FFT dependency.

use num_complex::Complex64 as C64;

use crate::grid::GridSpec;

/// Contract `axis` of a row-major tensor with the `p × s_axis` matrix `t`:
/// out[..., p, ...] = Σ_m t[p·s+m] · in[..., m, ...].
pub fn axis_contract(input: &[C64], shape: &mut Vec<usize>, axis: usize, t: &[C64], p: usize) -> Vec<C64> {
    let s = shape[axis];
    assert_eq!(t.len(), p * s);
    let stride: usize = shape[axis + 1..].iter().product();
    let blocks: usize = shape[..axis].iter().product();
    let mut out = vec![C64::new(0.0, 0.0); blocks * p * stride];
    for b in 0..blocks {
        let in_base = b * s * stride;
        let out_base = b * p * stride;
        for q in 0..p {
            let trow = &t[q * s..(q + 1) * s];
            let orow = &mut out[out_base + q * stride..out_base + (q + 1) * stride];
            for (m, &tm) in trow.iter().enumerate() {
                if tm == C64::new(0.0, 0.0) {
                    continue;
                }
                let irow = &input[in_base + m * stride..in_base + (m + 1) * stride];
                for (o, &iv) in orow.iter_mut().zip(irow) {
                    *o += tm * iv;
                }
            }
        }
    }
    shape[axis] = p;
    out
}

/// Phase table e^{i ξ_k x_p} for one axis of the mode lattice
/// (k ∈ [−M/2, M/2−1]), spatial points x_p = L p / P.
pub fn mode_axis_table(grid: &GridSpec, points: usize) -> Vec<C64> {
    let m = grid.modes_per_dim();
    let half = (m / 2) as i64;
    let dxi = grid.dxi();
    let l = grid.box_length();
    let mut t = vec![C64::new(0.0, 0.0); points * m];
    for p in 0..points {
        let x = l * p as f64 / points as f64;
        for km in 0..m {
            let xi = (km as i64 - half) as f64 * dxi;
            t[p * m + km] = C64::from_polar(1.0, xi * x);
        }
    }
    t
}

/// Phase table e^{i η_m x_p} for one axis of the difference lattice
/// (m ∈ [−(M−1), M−1]).
pub fn diff_axis_table(grid: &GridSpec, points: usize) -> Vec<C64> {
    let side = grid.diff_side();
    let off = grid.modes_per_dim() as i64 - 1;
    let dxi = grid.dxi();
    let l = grid.box_length();
    let mut t = vec![C64::new(0.0, 0.0); points * side];
    for p in 0..points {
        let x = l * p as f64 / points as f64;
        for mm in 0..side {
            let eta = (mm as i64 - off) as f64 * dxi;
            t[p * side + mm] = C64::from_polar(1.0, eta * x);
        }
    }
    t
}

/// Conjugate-transposed mode table scaled for exact analysis: maps P^d point
/// samples of a band-limited function back to mode coefficients. Exact for
/// P ≥ M by discrete orthogonality.
pub fn mode_axis_analysis_table(grid: &GridSpec, points: usize) -> Vec<C64> {
    let m = grid.modes_per_dim();
    let half = (m / 2) as i64;
    let dxi = grid.dxi();
    let l = grid.box_length();
    let scale = 1.0 / points as f64;
    let mut t = vec![C64::new(0.0, 0.0); m * points];
    for km in 0..m {
        let xi = (km as i64 - half) as f64 * dxi;
        for p in 0..points {
            let x = l * p as f64 / points as f64;
            t[km * points + p] = C64::from_polar(scale, -xi * x);
        }
    }
    t
}

/// Evaluate a difference-lattice trigonometric polynomial Σ c(η)e^{iη·x} on
/// the uniform P^d spatial grid (lexicographic point order).
pub fn synth_diff_to_spatial(grid: &GridSpec, coeffs: &[C64], points: usize) -> Vec<C64> {
    let d = grid.d();
    let table = diff_axis_table(grid, points);
    let mut shape = vec![grid.diff_side(); d];
    let mut cur = coeffs.to_vec();
    for axis in 0..d {
        cur = axis_contract(&cur, &mut shape, axis, &table, points);
    }
    cur
}

/// Evaluate mode-lattice coefficients Σ c(ξ) e^{iξ·x} on the P^d grid.
pub fn synth_modes_to_spatial(grid: &GridSpec, coeffs: &[C64], points: usize) -> Vec<C64> {
    let d = grid.d();
    let table = mode_axis_table(grid, points);
    let mut shape = vec![grid.modes_per_dim(); d];
    let mut cur = coeffs.to_vec();
    for axis in 0..d {
        cur = axis_contract(&cur, &mut shape, axis, &table, points);
    }
    cur
}

/// Inverse of `synth_modes_to_spatial` for band-limited samples (P ≥ M).
pub fn analyze_spatial_to_modes(grid: &GridSpec, values: &[C64], points: usize) -> Vec<C64> {
    let d = grid.d();
    let table = mode_axis_analysis_table(grid, points);
    let mut shape = vec![points; d];
    let mut cur = values.to_vec();
    for axis in 0..d {
        cur = axis_contract(&cur, &mut shape, axis, &table, grid.modes_per_dim());
    }
    cur
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;

    #[test]
    fn synthesis_analysis_roundtrip() {
        let g = build_grid(2, 6, 3.7, 1.0, 0.0).unwrap();
        let n = g.n_modes();
        let coeffs: Vec<C64> =
            (0..n).map(|i| C64::new((i as f64 * 0.7).sin(), (i as f64 * 0.3).cos())).collect();
        for p in [6usize, 12, 13] {
            let vals = synth_modes_to_spatial(&g, &coeffs, p);
            let back = analyze_spatial_to_modes(&g, &vals, p);
            for (a, b) in coeffs.iter().zip(&back) {
                assert!((a - b).norm() < 1e-12, "p={p}");
            }
        }
    }

    #[test]
    fn plane_wave_synthesis() {
        let g = build_grid(1, 8, 2.0 * std::f64::consts::PI, 1.0, 0.0).unwrap();
        let k = g.mode_index(&[3]).unwrap();
        let mut c = vec![C64::new(0.0, 0.0); 8];
        c[k] = C64::new(1.0, 0.0);
        let vals = synth_modes_to_spatial(&g, &c, 16);
        for p in 0..16 {
            let x = g.box_length() * p as f64 / 16.0;
            let expect = C64::from_polar(1.0, 3.0 * x);
            assert!((vals[p] - expect).norm() < 1e-12);
        }
    }
}
