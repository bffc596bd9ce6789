//! Time-integrated norms over trajectories: the finite-pair 𝓢^α proxy
//! (mixed L^q_t L^r_x L²_{x′} norms of the weighted kernel, symmetrized in
//! x ↔ x′) and the 𝔜^α solution-space norm.

use faer::Mat;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::grid::{self, GridSpec};
use crate::kernel::KernelOperator;
use crate::report::NormReport;
use crate::strichartz::eta_of;
use crate::transform;

use super::{AdmissiblePair, Trajectory};

/// Trapezoid weights for possibly non-uniform sample times.
pub fn trapezoid_weights_for(times: &[f64]) -> Vec<f64> {
    let n = times.len();
    assert!(n >= 1);
    if n == 1 {
        return vec![1.0];
    }
    let mut w = vec![0.0; n];
    w[0] = 0.5 * (times[1] - times[0]);
    w[n - 1] = 0.5 * (times[n - 1] - times[n - 2]);
    for j in 1..n - 1 {
        w[j] = 0.5 * (times[j + 1] - times[j - 1]);
    }
    w
}

/// Spatial profiles F(x) = ‖K(x,·)‖_{L²_{x′}} and G(x′) = ‖K(·,x′)‖_{L²_x}
/// of the weighted kernel K = ⟨∇⟩^α (mask·Q) ⟨∇⟩^α, sampled on the M^d grid.
pub fn mixed_norm_profiles(
    q: &KernelOperator,
    alpha: f64,
    left_mask: Option<&grid::MultiplierMask>,
) -> (Vec<f64>, Vec<f64>) {
    let g = q.grid();
    let n = g.n_modes();
    let w: Vec<f64> = g.xi2_all().iter().map(|&x2| (1.0 + x2).powf(alpha / 2.0)).collect();
    let lm: Vec<f64> = match left_mask {
        Some(m) => m.values.clone(),
        None => vec![1.0; n],
    };
    let weighted = Mat::from_fn(n, n, |i, j| q.data()[(i, j)] * (lm[i] * w[i] * w[j]));
    let f = row_synthesis_profile(g, &weighted);
    // symmetric part: same computation on the adjoint
    let sym = left_mask.is_none() && q.hermitian();
    let gprof = if sym {
        f.clone()
    } else {
        let adj = Mat::from_fn(n, n, |i, j| weighted[(j, i)].conj());
        row_synthesis_profile(g, &adj)
    };
    (f, gprof)
}

/// F(x)² = L^{−d} Σ_{ξ′} |Σ_ξ K̂(ξ,ξ′) e^{iξ·x}|² on the M^d spatial grid.
fn row_synthesis_profile(g: &GridSpec, k: &Mat<C64>) -> Vec<f64> {
    let n = g.n_modes();
    let m = g.modes_per_dim();
    let table = transform::mode_axis_table(g, m);
    // rows form the d-dim mode lattice; the column index is a trailing axis
    let mut shape: Vec<usize> = vec![m; g.d()];
    shape.push(n);
    let mut flat = vec![C64::new(0.0, 0.0); n * n];
    for j in 0..n {
        for i in 0..n {
            flat[i * n + j] = k[(i, j)];
        }
    }
    let mut cur = flat;
    for axis in 0..g.d() {
        cur = transform::axis_contract(&cur, &mut shape, axis, &table, m);
    }
    let points = m.pow(g.d() as u32);
    let inv_vol = 1.0 / g.volume();
    let mut profile = vec![0.0f64; points];
    for (p, row) in profile.iter_mut().enumerate() {
        let mut acc = 0.0;
        for j in 0..n {
            acc += cur[p * n + j].norm_sqr();
        }
        *row = (acc * inv_vol).sqrt();
    }
    profile
}

/// ‖profile‖_{L^r_x} by Riemann sum with cell volume (L/M)^d; r = ∞ is the max.
pub fn lr_norm(profile: &[f64], g: &GridSpec, r: f64) -> f64 {
    if r.is_infinite() {
        return profile.iter().fold(0.0f64, |a, &b| a.max(b));
    }
    let cell = g.volume() / profile.len() as f64;
    let sum: f64 = profile.iter().map(|&v| v.powf(r)).sum();
    (sum * cell).powf(1.0 / r)
}

/// ‖series‖_{L^q_t} by trapezoid; q = ∞ is the max over samples.
pub fn lq_time_norm(series: &[f64], times: &[f64], q: f64) -> f64 {
    if q.is_infinite() {
        return series.iter().fold(0.0f64, |a, &b| a.max(b));
    }
    let w = trapezoid_weights_for(times);
    let sum: f64 = series.iter().zip(&w).map(|(&v, &wi)| wi * v.powf(q)).sum();
    sum.powf(1.0 / q)
}

/// Finite-pair 𝓢^α proxy of a trajectory: per-pair mixed norms of the
/// weighted kernel (optionally masked on the left leg) and their max.
/// The per-pair value is max over the two x ↔ x′ parts; both parts coincide
/// for hermitian kernels.
pub fn strichartz_s_alpha_norm_masked(
    traj: &Trajectory,
    alpha: f64,
    pairs: &[AdmissiblePair],
    left_mask: Option<&grid::MultiplierMask>,
) -> Result<NormReport> {
    if pairs.is_empty() {
        return Err(Error::InvalidParameter("empty admissible pair list".into()));
    }
    let g = traj.grid();
    for p in pairs {
        AdmissiblePair::new(p.q, p.r, g.d())?;
    }
    let profiles: Vec<(Vec<f64>, Vec<f64>)> = traj
        .states()
        .iter()
        .map(|s| mixed_norm_profiles(s, alpha, left_mask))
        .collect();
    let mut rep = NormReport::new(g);
    let mut overall = 0.0f64;
    for pair in pairs {
        let f_series: Vec<f64> =
            profiles.iter().map(|(f, _)| lr_norm(f, g, pair.r)).collect();
        let g_series: Vec<f64> =
            profiles.iter().map(|(_, gg)| lr_norm(gg, g, pair.r)).collect();
        let part_f = lq_time_norm(&f_series, traj.times(), pair.q);
        let part_g = lq_time_norm(&g_series, traj.times(), pair.q);
        let value = part_f.max(part_g);
        rep.set(&pair.label(), value);
        overall = overall.max(value);
    }
    rep.set("s_alpha_max", overall);
    Ok(rep)
}

/// 𝓢^α proxy of the bare trajectory.
pub fn strichartz_s_alpha_norm(
    traj: &Trajectory,
    alpha: f64,
    pairs: &[AdmissiblePair],
) -> Result<NormReport> {
    strichartz_s_alpha_norm_masked(traj, alpha, pairs, None)
}

/// 𝔜^α norm, itemized: sup-in-time operator norm, 𝓢^α proxy of Π_2^+ Q,
/// L²_t H^{α+1/2−η} and L^∞_t L² norms of the density.
pub fn y_alpha_norm_with_pairs(traj: &Trajectory, alpha: f64, pairs: &[AdmissiblePair]) -> NormReport {
    assert!(alpha >= 1.0, "the Y^alpha norm is defined for alpha >= 1");
    let g = traj.grid();
    let eta = eta_of(g.d(), alpha).expect("alpha >= 1 always satisfies the exponent constraints");
    let high = grid::band_projector(g, crate::BAND_RADIUS).unwrap().complement();

    let ct_op = traj.states().iter().map(|s| s.op_norm()).fold(0.0, f64::max);
    let s_high = strichartz_s_alpha_norm_masked(traj, alpha, pairs, Some(&high))
        .expect("validated pairs")
        .get("s_alpha_max");

    let sob = alpha + 0.5 - eta;
    let w = trapezoid_weights_for(traj.times());
    let mut l2t = 0.0;
    let mut linf = 0.0f64;
    for (rho, &wi) in traj.densities().iter().zip(&w) {
        let h = rho.sobolev_norm(sob);
        l2t += wi * h * h;
        linf = linf.max(rho.l2_norm());
    }
    let l2t = l2t.sqrt();

    let mut rep = NormReport::new(g);
    rep.set("ct_op", ct_op);
    rep.set("s_alpha_high", s_high);
    rep.set("rho_l2t_sobolev", l2t);
    rep.set("rho_linf_l2", linf);
    rep.set("eta_used", eta);
    rep.set("y_alpha_total", ct_op + s_high + l2t + linf);
    rep
}

pub fn y_alpha_norm(traj: &Trajectory, alpha: f64) -> NormReport {
    let pairs = crate::strichartz::admissible_pairs(traj.grid().d(), 4).expect("default pairs");
    y_alpha_norm_with_pairs(traj, alpha, &pairs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::free_conjugate;
    use crate::grid::build_grid;
    use crate::kernel::{hs_sobolev_norm, make_perturbation, KernelOperator, PerturbationKind};

    const TAU: f64 = 2.0 * std::f64::consts::PI;

    fn free_trajectory(q0: &KernelOperator, t: f64, samples: usize) -> Trajectory {
        let h = t / (samples - 1) as f64;
        let times: Vec<f64> = (0..samples).map(|j| j as f64 * h).collect();
        let states = times.iter().map(|&tj| free_conjugate(q0, tj)).collect();
        Trajectory::from_states(states, times).unwrap()
    }

    #[test]
    fn pair_inf_2_matches_sup_hs_norm() {
        let g = build_grid(2, 8, TAU, 1.05, 0.0).unwrap();
        let q0 = make_perturbation(&g, PerturbationKind::SmoothRandom, 8, 0.7).unwrap();
        let traj = free_trajectory(&q0, 0.5, 9);
        let alpha = 1.0;
        let pairs = vec![AdmissiblePair::new(f64::INFINITY, 2.0, 2).unwrap()];
        let rep = strichartz_s_alpha_norm(&traj, alpha, &pairs).unwrap();
        let sup_hs = traj
            .states()
            .iter()
            .map(|s| hs_sobolev_norm(s, alpha))
            .fold(0.0, f64::max);
        let got = rep.get("qinf_r2");
        assert!(
            (got - sup_hs).abs() <= 1e-10 * sup_hs.max(1.0),
            "pair (inf,2) value {got} vs sup hs {sup_hs}"
        );
    }

    #[test]
    fn zero_trajectory_vanishes() {
        let g = build_grid(2, 8, TAU, 1.05, 0.0).unwrap();
        let traj = free_trajectory(&KernelOperator::zeros(g.clone()), 0.3, 5);
        let pairs = crate::strichartz::admissible_pairs(2, 4).unwrap();
        let rep = strichartz_s_alpha_norm(&traj, 1.0, &pairs).unwrap();
        assert_eq!(rep.get("s_alpha_max"), 0.0);
        let y = y_alpha_norm(&traj, 1.0);
        assert_eq!(y.get("y_alpha_total"), 0.0);
    }

    #[test]
    fn y_alpha_uses_eta_by_dimension() {
        let g2 = build_grid(2, 8, TAU, 1.05, 0.0).unwrap();
        let q = make_perturbation(&g2, PerturbationKind::SmoothRandom, 4, 0.4).unwrap();
        let traj = free_trajectory(&q, 0.2, 5);
        let rep = y_alpha_norm(&traj, 1.0);
        assert_eq!(rep.get("eta_used"), 0.0);

        let g3 = build_grid(3, 4, TAU, 1.05, 0.0).unwrap();
        let q3 = make_perturbation(&g3, PerturbationKind::SmoothRandom, 4, 0.4).unwrap();
        let traj3 = free_trajectory(&q3, 0.2, 5);
        let rep3 = y_alpha_norm(&traj3, 1.0);
        assert!(rep3.get("eta_used") > 0.0);
    }
}
