//! The dual integral behind the homogeneous density estimate, computed two
//! independent ways:
//!   way A — direct lattice sum over (ξ, ξ₁) with Ṽ interpolated at
//!           τ* = −2ξ·ξ₁ + |ξ|²;
//!   way B — change of variables to (τ, ξ) with the orthogonal-frame
//!           substitution q₁* = −(τ−|ξ|²)/(2|ξ|) and a radial q′ quadrature.
//! Their agreement cross-checks both discretizations. The ξ = 0 stratum
//! carries the |ξ| weight and is skipped exactly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::field::SpaceTimeField;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DualIntegralOptions {
    /// Half-width of the ξ₁ integration box in way A.
    pub xi1_halfwidth: f64,
    /// ξ₁ points per unit length in way A.
    pub xi1_per_unit: usize,
    /// Upper cutoff of the radial q′ quadrature in way B.
    pub radial_max: f64,
    /// Points of the linear [0,1] segment and per decade of the log segment.
    pub radial_linear: usize,
    pub radial_per_decade: usize,
}

impl Default for DualIntegralOptions {
    fn default() -> Self {
        DualIntegralOptions {
            xi1_halfwidth: 24.0,
            xi1_per_unit: 8,
            radial_max: 1e6,
            radial_linear: 200,
            radial_per_decade: 120,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DualIntegralResult {
    pub way_a: f64,
    pub way_b: f64,
    /// |A − B| / max(A, B), 0 when both vanish.
    pub discrepancy: f64,
}

#[inline]
fn bracket(a2: f64) -> f64 {
    // ⟨v⟩² with |v|² = a2
    1.0 + a2
}

/// Radial quadrature grid shared by way B and the optimality scans.
fn radial_grid(opts: &DualIntegralOptions) -> Vec<f64> {
    let mut s = Vec::new();
    for i in 0..=opts.radial_linear {
        s.push(i as f64 / opts.radial_linear as f64);
    }
    let decades = opts.radial_max.log10();
    let steps = (decades * opts.radial_per_decade as f64).ceil() as usize;
    for i in 1..=steps {
        s.push(10f64.powf(decades * i as f64 / steps as f64));
    }
    s
}

/// ∫_{ℝ^{d−1}} dq′ / (2⟨(q₁*,q′)⟩^{2α}⟨(q₁*−|ξ|,q′)⟩^{2α}), reduced to a
/// radial integral; d=1 has no q′ integral.
pub(crate) fn qprime_integral(
    d: usize,
    alpha: f64,
    q1s: f64,
    xi_norm: f64,
    grid_s: &[f64],
    radius_cap: Option<f64>,
) -> f64 {
    let a2 = q1s * q1s;
    let b2 = (q1s - xi_norm) * (q1s - xi_norm);
    let f = |s: f64| {
        let s2 = s * s;
        let base = 0.5 / (bracket(a2 + s2).powf(alpha) * bracket(b2 + s2).powf(alpha));
        match d {
            2 => 2.0 * base,                              // both signs of q′ ∈ ℝ
            3 => 2.0 * std::f64::consts::PI * s * base,   // circle of radius s
            _ => unreachable!(),
        }
    };
    if d == 1 {
        return 0.5 / (bracket(a2).powf(alpha) * bracket(b2).powf(alpha));
    }
    let mut acc = 0.0;
    for w in grid_s.windows(2) {
        let (s0, s1) = (w[0], w[1]);
        if let Some(cap) = radius_cap {
            if s0 >= cap {
                break;
            }
            let s1 = s1.min(cap);
            acc += 0.5 * (f(s0) + f(s1)) * (s1 - s0);
            continue;
        }
        acc += 0.5 * (f(s0) + f(s1)) * (s1 - s0);
    }
    acc
}

/// Way B: Σ_{τ,ξ≠0} ⟨ξ⟩^{2α₁} J(τ,ξ) |Ṽ(τ,ξ)|² Δτ Δξ^d.
pub fn way_b(field: &SpaceTimeField, alpha: f64, alpha1: f64, opts: &DualIntegralOptions) -> f64 {
    let grid_s = radial_grid(opts);
    let mut acc = 0.0;
    for i in 0..field.n_points() {
        let xin = field.xi_norm(i);
        if xin == 0.0 {
            continue;
        }
        let weight_xi = bracket(xin * xin).powf(alpha1);
        for (m, z) in field.column(i).iter().enumerate() {
            let v2 = z.norm_sqr();
            if v2 == 0.0 {
                continue;
            }
            let tau = field.tau_at(m);
            let q1s = -(tau - xin * xin) / (2.0 * xin);
            let j = qprime_integral(field.d(), alpha, q1s, xin, &grid_s, None);
            acc += weight_xi * j * v2;
        }
    }
    acc * field.dtau() * field.xi_cell()
}

/// Way A: Σ_{ξ≠0, ξ₁} ⟨ξ⟩^{2α₁}|ξ| |Ṽ(τ*,ξ)|² / (⟨ξ₁⟩^{2α}⟨ξ−ξ₁⟩^{2α})
/// over a refined ξ₁ lattice.
pub fn way_a(field: &SpaceTimeField, alpha: f64, alpha1: f64, opts: &DualIntegralOptions) -> f64 {
    let d = field.d();
    let delta = 1.0 / opts.xi1_per_unit as f64;
    let half_n = (opts.xi1_halfwidth * opts.xi1_per_unit as f64).round() as i64;
    let cell = delta.powi(d as i32);
    // 1-d coordinate samples of the ξ₁ lattice
    let coords: Vec<f64> = (-half_n..=half_n).map(|k| k as f64 * delta).collect();
    let mut acc = 0.0;
    for i in 0..field.n_points() {
        let xi = field.xi(i);
        let xin = field.xi_norm(i);
        if xin == 0.0 {
            continue;
        }
        let weight_xi = bracket(xin * xin).powf(alpha1) * xin;
        // iterate the d-dim ξ₁ box
        let mut idx = vec![0usize; d];
        loop {
            let mut xi1 = [0.0f64; 3];
            for a in 0..d {
                xi1[a] = coords[idx[a]];
            }
            let q12: f64 = xi1[..d].iter().map(|x| x * x).sum();
            let diff2: f64 =
                (0..d).map(|a| (xi[a] - xi1[a]) * (xi[a] - xi1[a])).sum();
            let dot: f64 = (0..d).map(|a| xi[a] * xi1[a]).sum();
            let tau_star = -2.0 * dot + xin * xin;
            let v = field.at_tau(i, tau_star);
            if v != num_complex::Complex64::new(0.0, 0.0) {
                let denom = bracket(q12).powf(alpha) * bracket(diff2).powf(alpha);
                acc += weight_xi * v.norm_sqr() / denom;
            }
            // advance odometer
            let mut a = 0;
            loop {
                idx[a] += 1;
                if idx[a] < coords.len() {
                    break;
                }
                idx[a] = 0;
                a += 1;
                if a == d {
                    break;
                }
            }
            if a == d {
                break;
            }
        }
    }
    acc * cell * field.xi_cell()
}

/// Both quadratures of the dual integral with their relative discrepancy.
pub fn dual_integral_i(
    field: &SpaceTimeField,
    alpha: f64,
    alpha1: f64,
    opts: &DualIntegralOptions,
) -> Result<DualIntegralResult> {
    if field.d() > 3 {
        return Err(Error::DimensionUnsupported(field.d()));
    }
    let a = way_a(field, alpha, alpha1, opts);
    let b = way_b(field, alpha, alpha1, opts);
    let scale = a.abs().max(b.abs());
    let discrepancy = if scale == 0.0 { 0.0 } else { (a - b).abs() / scale };
    Ok(DualIntegralResult { way_a: a, way_b: b, discrepancy })
}
