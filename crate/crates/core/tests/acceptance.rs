//! Acceptance suite: every gate below runs at its stated tolerance on the
//! desk-scale configuration (d=2, L=2π, μ=1.05) and prints one PASS/FAIL
//! line (run with `--nocapture` to see them).

use std::sync::Arc;

use fermibox::dynamics::{
    evolve_orbitals, evolve_rk4, free_conjugate, orbitals_to_kernel, picard_solve, rhs,
    OrbitalSet, PicardMetric, Rk4Options,
};
use fermibox::energy::{conservation_report, lieb_thirring_check};
use fermibox::grid::{build_grid, fermi_projector, GridSpec};
use fermibox::kernel::{
    density, gamma_eigenvalues, make_perturbation, relative_kinetic_energy, schatten_norm,
    KernelOperator, PerturbationKind,
};
use fermibox::strichartz::{
    alpha1_of, dual_integral_i, eta_of, homogeneous_density_estimate,
    optimality_distribution_scan, optimality_endpoint_scan, DualIntegralOptions,
};
use rayon::prelude::*;

const TAU: f64 = 2.0 * std::f64::consts::PI;
const SIZE: f64 = 1.0;

fn grid16() -> Arc<GridSpec> {
    build_grid(2, 16, TAU, 1.05, 0.0).unwrap()
}

fn mixed_kind(i: usize) -> PerturbationKind {
    match i % 3 {
        0 => PerturbationKind::UnitaryConjugation,
        1 => PerturbationKind::ParticleHole,
        _ => PerturbationKind::SmoothRandom,
    }
}

fn ensemble(grid: &Arc<GridSpec>, count: usize, seed0: u64) -> Vec<KernelOperator> {
    (0..count)
        .into_par_iter()
        .map(|i| make_perturbation(grid, mixed_kind(i), seed0 + i as u64, SIZE).unwrap())
        .collect()
}

fn verdict(id: &str, pass: bool, detail: &str) {
    println!("criterion {id}: {} ({detail})", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {id}: {detail}");
}

#[test]
fn criterion_01_steady_state_and_trace() {
    let g = grid16();
    // Π_μ^- is an exact fixed point: rhs(0) = 0 bitwise
    let r = rhs(&KernelOperator::zeros(g.clone()));
    let rhs_zero = fermibox::linalg::max_abs(r.data());
    // trace conservation along a generic trajectory, T=1, dt=1e-3
    let q0 = make_perturbation(&g, PerturbationKind::SmoothRandom, 142, SIZE).unwrap();
    let opts = Rk4Options { record_every: 250, ..Default::default() };
    let traj = evolve_rk4(&q0, 1.0, 1e-3, opts).unwrap();
    let tr = conservation_report(&traj).max_trace_drift;
    let pass = rhs_zero == 0.0 && tr <= 1e-9;
    verdict("01 steady-state-and-trace", pass, &format!("rhs(0)={rhs_zero:.1e}, trace drift={tr:.2e}"));
}

#[test]
fn criterion_02_relative_energy_conservation() {
    let g = grid16();
    let members = ensemble(&g, 20, 200);
    let opts = Rk4Options { record_every: 500, ..Default::default() };
    let drifts: Vec<(f64, f64)> = members
        .par_iter()
        .map(|q0| {
            let full = conservation_report(&evolve_rk4(q0, 1.0, 1e-3, opts).unwrap())
                .max_relative_energy_drift;
            let half = conservation_report(&evolve_rk4(q0, 1.0, 5e-4, opts).unwrap())
                .max_relative_energy_drift;
            (full, half)
        })
        .collect();
    let max_full = drifts.iter().map(|d| d.0).fold(0.0, f64::max);
    let max_half = drifts.iter().map(|d| d.1).fold(0.0, f64::max);
    let shrink = max_full / max_half;
    let pass = max_full <= 1e-6 && shrink >= 12.0;
    verdict(
        "02 relative-energy-conservation",
        pass,
        &format!("max drift {max_full:.3e} @dt=1e-3, {max_half:.3e} @dt=5e-4, shrink {shrink:.1}x over 20 members"),
    );
}

#[test]
fn criterion_03_spectrum_preservation() {
    let g = grid16();
    let opts = Rk4Options { record_every: 250, ..Default::default() };
    let worst: f64 = (0..6usize)
        .into_par_iter()
        .map(|i| {
            let q0 = make_perturbation(&g, mixed_kind(i), 300 + i as u64, SIZE).unwrap();
            let traj = evolve_rk4(&q0, 1.0, 1e-3, opts).unwrap();
            let e0 = gamma_eigenvalues(traj.initial());
            traj.states()
                .iter()
                .map(|s| {
                    gamma_eigenvalues(s)
                        .iter()
                        .zip(&e0)
                        .map(|(a, b)| (a - b).abs())
                        .fold(0.0f64, f64::max)
                })
                .fold(0.0f64, f64::max)
        })
        .reduce(|| 0.0, f64::max);
    verdict(
        "03 spectrum-preservation",
        worst <= 1e-7,
        &format!("max sorted-spectrum drift {worst:.3e} over 6 members, T=1, dt=1e-3"),
    );
}

#[test]
fn criterion_04_picard_rk4_equivalence() {
    let g = grid16();
    let members = ensemble(&g, 20, 400);
    let metric = PicardMetric::TraceH2;
    let t_window = 0.2;
    let results: Vec<(f64, f64, f64)> = members
        .par_iter()
        .map(|q0| {
            let reference = evolve_rk4(
                q0,
                t_window,
                2.5e-4,
                Rk4Options { record_every: 10_000, ..Default::default() },
            )
            .unwrap();
            let coarse = picard_solve(q0, t_window, 65, 30, 1e-9, &metric).unwrap();
            let fine = picard_solve(q0, t_window, 129, 30, 1e-9, &metric).unwrap();
            let d65 = schatten_norm(
                &coarse.trajectory.terminal().sub(reference.terminal()).unwrap(),
                2.0,
            )
            .unwrap();
            let d129 = schatten_norm(
                &fine.trajectory.terminal().sub(reference.terminal()).unwrap(),
                2.0,
            )
            .unwrap();
            (d65, d129, coarse.leading_factor())
        })
        .collect();
    let max65 = results.iter().map(|r| r.0).fold(0.0, f64::max);
    let max129 = results.iter().map(|r| r.1).fold(0.0, f64::max);
    let contracting = results.iter().filter(|r| r.2 < 1.0).count();
    let gain = max65 / max129;
    let pass = max65 <= 1e-4 && contracting * 100 >= results.len() * 95 && gain >= 3.0;
    verdict(
        "04 picard-rk4-equivalence",
        pass,
        &format!(
            "terminal S2 dist {max65:.3e} (gate 1e-4), contraction {contracting}/{} members, sample-doubling gain {gain:.2}x",
            results.len()
        ),
    );
}

#[test]
fn criterion_05_representation_equivalence() {
    let g = grid16();
    let set = OrbitalSet::fermi_sea_with_particles(g.clone(), 2, 77).unwrap();
    assert_eq!(set.count(), 7); // sea(5) + 2 particles
    let dt = 5e-4;
    let orb = evolve_orbitals(&set, 1.0, dt, 1000, 1e-6).unwrap();
    let pi = KernelOperator::from_mask(g.clone(), &fermi_projector(&g));
    let q0 = orbitals_to_kernel(&set).sub(&pi).unwrap();
    let ktraj =
        evolve_rk4(&q0, 1.0, dt, Rk4Options { record_every: 2000, ..Default::default() }).unwrap();
    let q_orb = orbitals_to_kernel(orb.terminal()).sub(&pi).unwrap();
    let dist = schatten_norm(&q_orb.sub(ktraj.terminal()).unwrap(), 2.0).unwrap();
    let gram = orb.max_gram_drift();
    let pass = dist <= 1e-4 && gram <= 1e-8;
    verdict(
        "05 representation-equivalence",
        pass,
        &format!("terminal S2 distance {dist:.3e} (gate 1e-4), Gram drift {gram:.2e} (gate 1e-8)"),
    );
}

#[test]
fn criterion_06_exponent_tables() {
    let ok_a = (alpha1_of(3, 0.75).unwrap().0 - 0.5).abs() < 1e-15;
    let ok_b = alpha1_of(2, 1.0).unwrap().0 == 1.0 && eta_of(2, 1.0).unwrap() == 0.0;
    let ok_c = eta_of(3, 1.0).unwrap() > 0.0;
    let ok_d = alpha1_of(1, 0.0).unwrap().0 == 0.0;
    let ok_e = alpha1_of(2, 0.25).is_err() && alpha1_of(1, -0.1).is_err();
    let pass = ok_a && ok_b && ok_c && ok_d && ok_e;
    verdict(
        "06 exponent-tables",
        pass,
        &format!("pins: (3,0.75)->0.5 {ok_a}, (2,1)->1/eta0 {ok_b}, (3,1) eta>0 {ok_c}, (1,0)->0 {ok_d}, rejects {ok_e}"),
    );
}

#[test]
fn criterion_07_homogeneous_density_strichartz() {
    let alpha = 1.0;
    let window = 1.0;
    let mut max_ratio = [0.0f64; 2];
    for (gi, m) in [16usize, 32].into_iter().enumerate() {
        let g = build_grid(2, m, TAU, 1.05, 0.0).unwrap();
        let members = ensemble(&g, 100, 700);
        let ratios: Vec<f64> = members
            .par_iter()
            .map(|q| homogeneous_density_estimate(q, alpha, window, 33).unwrap().ratio)
            .collect();
        max_ratio[gi] = ratios.iter().fold(0.0f64, |a, &b| a.max(b));
    }
    // the Fermi sea itself: LHS = 0 exactly
    let g = grid16();
    let pi = KernelOperator::from_mask(g.clone(), &fermi_projector(&g));
    let sea = homogeneous_density_estimate(&pi, alpha, window, 33).unwrap();
    let spread = max_ratio[1] / max_ratio[0];
    let pass = max_ratio.iter().all(|r| r.is_finite() && *r > 0.0)
        && spread < 2.0
        && spread > 0.5
        && sea.lhs == 0.0;
    verdict(
        "07 homogeneous-density-strichartz",
        pass,
        &format!(
            "max ratio M16 {:.4}, M32 {:.4}, spread {spread:.2} (gate <2), sea LHS {:.1e}",
            max_ratio[0], max_ratio[1], sea.lhs
        ),
    );
}

#[test]
fn criterion_08_dual_integral_cross_check() {
    let opts = DualIntegralOptions::default();
    // d=2: ways A and B on 20 smooth random fields
    let g = grid16();
    let (alpha1, _) = alpha1_of(2, 1.0).unwrap();
    let worst_disc: f64 = (0..20u64)
        .into_par_iter()
        .map(|seed| {
            let field = fermibox::cli::smooth_test_field(&g, 1.0, 64, 8100 + seed).unwrap();
            dual_integral_i(&field, 1.0, alpha1, &opts).unwrap().discrepancy
        })
        .reduce(|| 0.0, f64::max);
    // d=1 constant check at alpha = alpha1 = 0
    let g1 = build_grid(1, 16, TAU, 1.0, 0.0).unwrap();
    let consts: Vec<f64> = (0..20u64)
        .into_par_iter()
        .map(|seed| {
            let field = fermibox::cli::smooth_test_field(&g1, 1.0, 64, 8200 + seed).unwrap();
            let r = dual_integral_i(&field, 0.0, 0.0, &opts).unwrap();
            let vn = field.norm_l2();
            r.way_a / (vn * vn)
        })
        .collect();
    let c_max = consts.iter().fold(0.0f64, |a, &b| a.max(b));
    let pass = worst_disc <= 1e-2 && c_max <= 0.5 + 5e-3 && c_max >= 0.4;
    verdict(
        "08 dual-integral-cross-check",
        pass,
        &format!("worst A/B discrepancy {worst_disc:.4} (gate 1e-2), d=1 I/V2 max {c_max:.4} (gate <=0.505, approaches 1/2)"),
    );
}

#[test]
fn criterion_09_optimality() {
    let fit = optimality_endpoint_scan(2, &[8, 16, 32, 64, 128], 0.1, &DualIntegralOptions::default())
        .unwrap();
    let norm0 = fit.v_norms[0];
    let norms_ok = fit.v_norms.iter().all(|v| (v - norm0).abs() <= 0.1 * norm0);
    let radii = [10.0, 20.0, 40.0, 80.0, 160.0];
    let rows = optimality_distribution_scan(2, &radii).unwrap();
    let monotone = rows.windows(2).all(|w| w[1].1 > w[0].1);
    let pass = fit.fit.slope > 0.0 && fit.fit.r_squared >= 0.98 && norms_ok && monotone;
    verdict(
        "09 optimality",
        pass,
        &format!(
            "I_n ~ {:.3}·ln n + {:.3}, r2={:.4}, norms within 10%: {norms_ok}, divergence monotone over {} doublings: {monotone}",
            fit.fit.slope,
            fit.fit.intercept,
            fit.fit.r_squared,
            radii.len() - 1
        ),
    );
}

#[test]
fn criterion_10_lt_sobolev_lemma_a1() {
    let mut min_lt = [f64::INFINITY; 2];
    let mut max_c = [0.0f64; 2];
    let mut min_kinetic = f64::INFINITY;
    for (gi, m) in [16usize, 32].into_iter().enumerate() {
        let g = build_grid(2, m, TAU, 1.05, 0.0).unwrap();
        let members = ensemble(&g, 100, 1000);
        let rows: Vec<(f64, f64, f64)> = members
            .par_iter()
            .map(|q| {
                let kin = relative_kinetic_energy(q);
                let lt = lieb_thirring_check(q).unwrap();
                let l2 = density(q).l2_norm();
                let bound = kin.max(0.0) + kin.max(0.0).sqrt();
                let c = if bound > 1e-12 { l2 / bound } else { 0.0 };
                (kin, if lt.zero_over_zero { f64::INFINITY } else { lt.ratio }, c)
            })
            .collect();
        for (kin, ltr, c) in rows {
            min_kinetic = min_kinetic.min(kin);
            min_lt[gi] = min_lt[gi].min(ltr);
            max_c[gi] = max_c[gi].max(c);
        }
    }
    let lt_stable = min_lt[1] / min_lt[0];
    let c_all = max_c[0].max(max_c[1]);
    let pass = min_kinetic >= -1e-10
        && min_lt.iter().all(|r| *r > 0.0 && r.is_finite())
        && lt_stable < 2.0
        && lt_stable > 0.5
        && c_all.is_finite()
        && c_all > 0.0;
    verdict(
        "10 lt-sobolev-lemma-a1",
        pass,
        &format!(
            "kinetic min {min_kinetic:.2e} (gate -1e-10), LT min ratio M16 {:.3} M32 {:.3} (stability {lt_stable:.2}), empirical C = {c_all:.3} over 200 samples",
            min_lt[0], min_lt[1]
        ),
    );
}

#[test]
fn criterion_11_approximation_lemma() {
    let g = grid16();
    let ns = [2.0, 4.0, 8.0, 32.0, 1e4];
    let mut all_monotone = true;
    let mut all_saturate = true;
    let mut sig_ok = true;
    let mut detail = String::new();
    for i in 0..6usize {
        let q = make_perturbation(&g, mixed_kind(i), 1100 + i as u64, SIZE).unwrap();
        let t = fermibox::approx::approximation_convergence(&q, &ns).unwrap();
        let last = t.rows.last().unwrap();
        all_saturate &= last.saturated
            && last.op_dist == 0.0
            && last.kinetic_pp_dist == 0.0
            && last.kinetic_mm_dist == 0.0
            && last.rho_l2_dist == 0.0;
        sig_ok &= t.rows.iter().all(|r| r.signature_violation <= 1e-10);
        if !t.monotone {
            all_monotone = false;
            detail.push_str(&format!(
                "member {i} non-monotone (op {}, kinetic {}, rho {}); ",
                t.monotone_op, t.monotone_kinetic, t.monotone_rho
            ));
        }
    }
    // regular vs energy-space comparison and the liminf chain
    let q0 = make_perturbation(&g, PerturbationKind::SmoothRandom, 1200, SIZE).unwrap();
    let rep =
        fermibox::approx::regular_vs_energy_comparison(&q0, 0.25, &ns, 1e-3, 50).unwrap();
    let drift_ok = rep.rows.iter().all(|r| r.energy_drift <= 1e-8);
    let chain_ok = rep.chain_gap.abs() <= 1e-8;
    let pass = all_monotone && all_saturate && sig_ok && drift_ok && chain_ok;
    verdict(
        "11 approximation-lemma",
        pass,
        &format!(
            "monotone {all_monotone} {detail}saturation-zero {all_saturate}, signature {sig_ok}, per-n energy drift {drift_ok}, liminf chain gap {:.2e} {chain_ok}",
            rep.chain_gap
        ),
    );
}

#[test]
fn criterion_12_determinism() {
    use fermibox::config::RunConfig;
    let base = std::env::temp_dir().join(format!("fermibox-acc12-{}", std::process::id()));
    let small = |out: &std::path::Path| RunConfig {
        modes_per_dim: 8,
        ensemble_size: 4,
        t_final: 0.05,
        dt: 0.01,
        time_samples: 9,
        record_every: 2,
        optimality_n: vec![8, 16, 32],
        output_dir: out.to_string_lossy().to_string(),
        ..RunConfig::default()
    };
    let mut pass = true;
    let mut detail = String::new();
    for scenario in ["evolve", "lieb-thirring", "optimality", "exponent-table"] {
        let d1 = base.join(format!("{scenario}-1"));
        let d2 = base.join(format!("{scenario}-2"));
        let d3 = base.join(format!("{scenario}-3"));
        fermibox::cli::run(scenario, &small(&d1)).unwrap();
        fermibox::cli::run(scenario, &small(&d2)).unwrap();
        // re-run from the emitted manifest
        let mut cfg3 = RunConfig::from_file(&d1.join("manifest.json")).unwrap();
        cfg3.output_dir = d3.to_string_lossy().to_string();
        fermibox::cli::run(scenario, &cfg3).unwrap();
        for entry in std::fs::read_dir(&d1).unwrap() {
            let name = entry.unwrap().file_name();
            let name = name.to_string_lossy();
            if !name.ends_with(".csv") {
                continue;
            }
            let a = std::fs::read(d1.join(name.as_ref())).unwrap();
            let b = std::fs::read(d2.join(name.as_ref())).unwrap();
            let c = std::fs::read(d3.join(name.as_ref())).unwrap();
            if a != b || a != c {
                pass = false;
                detail.push_str(&format!("{scenario}/{name} differs; "));
            }
        }
    }
    std::fs::remove_dir_all(&base).ok();
    if detail.is_empty() {
        detail = "4 scenarios x (direct re-run + manifest re-run) byte-identical".to_string();
    }
    verdict("12 determinism", pass, &detail);
}

/// Cross-check behind criterion 2: the zero state stays exactly zero.
#[test]
fn zero_data_sanity() {
    let g = grid16();
    let traj = evolve_rk4(
        &KernelOperator::zeros(g.clone()),
        0.05,
        1e-2,
        Rk4Options::default(),
    )
    .unwrap();
    for d in traj.step_diagnostics() {
        assert_eq!(d.energy, 0.0);
        assert_eq!(d.trace, 0.0);
    }
    // free flow leaves the sea invariant
    let pi = KernelOperator::from_mask(g.clone(), &fermi_projector(&g));
    let moved = free_conjugate(&pi, 0.7);
    assert!(fermibox::linalg::max_abs(&fermibox::linalg::sub(moved.data(), pi.data())) < 1e-15);
}
