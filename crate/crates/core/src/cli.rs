//! Batch scenarios: deterministic ensemble generation, solver and scan
//! orchestration, CSV/JSON artifact emission. Identical configs produce
//! byte-identical CSVs: members are generated from derived seeds, computed
//! in parallel, and written in member order with pinned float formatting.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use num_complex::Complex64 as C64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::approx;
use crate::config::RunConfig;
use crate::container;
use crate::dynamics::{
    self, evolve_orbitals, evolve_rk4, orbitals_to_kernel, picard_solve, OrbitalSet,
    PicardMetric, Rk4Options, Trajectory,
};
use crate::energy::{self, LemmaId};
use crate::error::{Error, Result};
use crate::grid::{build_grid, GridSpec};
use crate::kernel::{self, density, make_perturbation, KernelOperator};
use crate::report::{write_json, CsvWriter, GridMeta, RatioReport, RatioRow};
use crate::strichartz::{self, DualIntegralOptions, SpaceTimeField};

pub const SUBCOMMANDS: &[&str] = &[
    "evolve",
    "picard",
    "orbitals",
    "energy-conservation",
    "strichartz-homogeneous",
    "strichartz-inhomogeneous",
    "strichartz-kernel",
    "dual-integral",
    "optimality",
    "lieb-thirring",
    "sobolev",
    "approx-lemma",
    "lemma-ratios",
    "exponent-table",
];

#[derive(Serialize)]
struct Manifest {
    scenario: String,
    config_hash: String,
    resolved_config: std::collections::BTreeMap<String, String>,
    artifacts: Vec<String>,
    grid: GridMeta,
    created_unix: u64,
}

struct Artifacts {
    dir: PathBuf,
    names: Vec<String>,
}

impl Artifacts {
    fn new(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Artifacts { dir: dir.to_path_buf(), names: Vec::new() })
    }
    fn path(&mut self, name: &str) -> PathBuf {
        self.names.push(name.to_string());
        self.dir.join(name)
    }
}

fn grid_of(cfg: &RunConfig) -> Result<Arc<GridSpec>> {
    build_grid(cfg.dimension, cfg.modes_per_dim, cfg.box_length, cfg.mu, cfg.fermi_floor)
}

/// Seeded ensemble; members computed in parallel, returned in member order.
pub fn generate_ensemble(cfg: &RunConfig, grid: &Arc<GridSpec>) -> Result<Vec<KernelOperator>> {
    (0..cfg.ensemble_size)
        .into_par_iter()
        .map(|m| make_perturbation(grid, cfg.member_kind(m), cfg.member_seed(m), cfg.size))
        .collect()
}

/// Run one scenario, returning the artifact list (also recorded in the
/// manifest within the output directory).
pub fn run(subcommand: &str, cfg: &RunConfig) -> Result<Vec<String>> {
    cfg.validate()?;
    let grid = grid_of(cfg)?;
    let mut art = Artifacts::new(Path::new(&cfg.output_dir))?;
    match subcommand {
        "evolve" => scenario_evolve(cfg, &grid, &mut art)?,
        "picard" => scenario_picard(cfg, &grid, &mut art)?,
        "orbitals" => scenario_orbitals(cfg, &grid, &mut art)?,
        "energy-conservation" => scenario_energy_conservation(cfg, &grid, &mut art)?,
        "strichartz-homogeneous" => scenario_strichartz_homogeneous(cfg, &grid, &mut art)?,
        "strichartz-inhomogeneous" => scenario_strichartz_inhomogeneous(cfg, &grid, &mut art)?,
        "strichartz-kernel" => scenario_strichartz_kernel(cfg, &grid, &mut art)?,
        "dual-integral" => scenario_dual_integral(cfg, &grid, &mut art)?,
        "optimality" => scenario_optimality(cfg, &mut art)?,
        "lieb-thirring" => scenario_lieb_thirring(cfg, &grid, &mut art)?,
        "sobolev" => scenario_sobolev(cfg, &grid, &mut art)?,
        "approx-lemma" => scenario_approx_lemma(cfg, &grid, &mut art)?,
        "lemma-ratios" => scenario_lemma_ratios(cfg, &grid, &mut art)?,
        "exponent-table" => scenario_exponent_table(cfg, &grid, &mut art)?,
        other => {
            return Err(Error::InvalidParameter(format!(
                "unknown subcommand '{other}'; expected one of {SUBCOMMANDS:?}"
            )))
        }
    }
    let manifest = Manifest {
        scenario: subcommand.to_string(),
        config_hash: format!("{:016x}", cfg.config_hash()),
        resolved_config: cfg.to_pairs(),
        artifacts: art.names.clone(),
        grid: GridMeta::of(&grid),
        created_unix: crate::report::now_unix(),
    };
    write_json(&art.dir.join("manifest.json"), &manifest)?;
    let mut names = art.names;
    names.push("manifest.json".to_string());
    Ok(names)
}

/// Per-step trajectory diagnostics CSV: the always-emitted scalar series.
fn write_diagnostics_csv(path: &Path, runs: &[(usize, &Trajectory)]) -> Result<()> {
    let mut w = CsvWriter::create(
        path,
        &["member", "t", "kinetic", "potential", "energy", "trace", "s2_norm"],
    )?;
    for (member, traj) in runs {
        for d in traj.step_diagnostics() {
            w.field_usize(*member);
            w.field_f64(d.t);
            w.field_f64(d.kinetic);
            w.field_f64(d.potential);
            w.field_f64(d.energy);
            w.field_f64(d.trace);
            w.field_f64(d.s2_norm);
            w.end_row()?;
        }
    }
    w.finish()
}

/// Trajectory directory export: per-step operator containers plus a JSON
/// manifest of times and scalar samples.
pub fn export_trajectory(traj: &Trajectory, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for (i, s) in traj.states().iter().enumerate() {
        container::export_operator(s, &dir.join(format!("state_{i:05}.fbox")))?;
    }
    #[derive(Serialize)]
    struct TrajManifest {
        times: Vec<f64>,
        energies: Vec<f64>,
        traces: Vec<f64>,
        s2_norms: Vec<f64>,
        states: Vec<String>,
    }
    let rep = TrajManifest {
        times: traj.times().to_vec(),
        energies: traj.step_diagnostics().iter().map(|d| d.energy).collect(),
        traces: traj.step_diagnostics().iter().map(|d| d.trace).collect(),
        s2_norms: traj.step_diagnostics().iter().map(|d| d.s2_norm).collect(),
        states: (0..traj.len()).map(|i| format!("state_{i:05}.fbox")).collect(),
    };
    write_json(&dir.join("trajectory.json"), &rep)
}

fn scenario_evolve(cfg: &RunConfig, grid: &Arc<GridSpec>, art: &mut Artifacts) -> Result<()> {
    let ensemble = generate_ensemble(cfg, grid)?;
    let opts = Rk4Options { record_every: cfg.record_every, ..Default::default() };
    let runs: Vec<Trajectory> = ensemble
        .par_iter()
        .map(|q0| evolve_rk4(q0, cfg.t_final, cfg.dt, opts))
        .collect::<Result<_>>()?;
    let indexed: Vec<(usize, &Trajectory)> = runs.iter().enumerate().collect();
    write_diagnostics_csv(&art.path("evolve_diagnostics.csv"), &indexed)?;

    let mut w = CsvWriter::create(
        &art.path("evolve_summary.csv"),
        &["member", "energy_drift_rel", "trace_drift", "terminal_s2"],
    )?;
    for (m, traj) in &indexed {
        let rep = energy::conservation_report(traj);
        w.field_usize(*m);
        w.field_f64(rep.max_relative_energy_drift);
        w.field_f64(rep.max_trace_drift);
        w.field_f64(traj.step_diagnostics().last().unwrap().s2_norm);
        w.end_row()?;
    }
    w.finish()?;
    // full state export for the first member
    if let Some(t0) = runs.first() {
        let sub = art.dir.join("trajectory_member0");
        export_trajectory(t0, &sub)?;
        art.names.push("trajectory_member0/trajectory.json".to_string());
    }
    Ok(())
}

fn scenario_picard(cfg: &RunConfig, grid: &Arc<GridSpec>, art: &mut Artifacts) -> Result<()> {
    let ensemble = generate_ensemble(cfg, grid)?;
    let metric = PicardMetric::TraceH2;
    let outs: Vec<(usize, std::result::Result<dynamics::PicardOutcome, String>)> = ensemble
        .par_iter()
        .enumerate()
        .map(|(m, q0)| {
            let r = picard_solve(q0, cfg.t_final, cfg.time_samples, cfg.max_iters, cfg.tol, &metric)
                .map_err(|e| e.to_string());
            (m, r)
        })
        .collect();
    let mut w = CsvWriter::create(
        &art.path("picard_summary.csv"),
        &["member", "iterations", "leading_factor", "final_distance", "status"],
    )?;
    let mut iters_csv =
        CsvWriter::create(&art.path("picard_iterations.csv"), &["member", "iter", "distance"])?;
    for (m, out) in &outs {
        match out {
            Ok(o) => {
                w.field_usize(*m);
                w.field_usize(o.iterations);
                w.field_f64(o.leading_factor());
                w.field_f64(*o.distances.last().unwrap());
                w.field_str("converged");
                w.end_row()?;
                for (k, d) in o.distances.iter().enumerate() {
                    iters_csv.field_usize(*m);
                    iters_csv.field_usize(k + 1);
                    iters_csv.field_f64(*d);
                    iters_csv.end_row()?;
                }
            }
            Err(e) => {
                w.field_usize(*m);
                w.field_usize(cfg.max_iters);
                w.field_f64(f64::NAN);
                w.field_f64(f64::NAN);
                w.field_str(&e.replace(',', ";"));
                w.end_row()?;
            }
        }
    }
    w.finish()?;
    iters_csv.finish()?;
    Ok(())
}

fn scenario_orbitals(cfg: &RunConfig, grid: &Arc<GridSpec>, art: &mut Artifacts) -> Result<()> {
    let set = OrbitalSet::fermi_sea_with_particles(grid.clone(), cfg.orbital_particles, cfg.seed)?;
    let orb = evolve_orbitals(&set, cfg.t_final, cfg.dt, cfg.record_every, 1e-6)?;
    let gamma0 = orbitals_to_kernel(&set);
    let pi = KernelOperator::from_mask(grid.clone(), &crate::grid::fermi_projector(grid));
    let q0 = gamma0.sub(&pi)?;
    let opts = Rk4Options { record_every: cfg.record_every, ..Default::default() };
    let kernel_traj = evolve_rk4(&q0, cfg.t_final, cfg.dt, opts)?;

    let mut w = CsvWriter::create(&art.path("orbitals_gram.csv"), &["step", "gram_drift"])?;
    for (i, d) in orb.gram_drifts.iter().enumerate() {
        w.field_usize(i);
        w.field_f64(*d);
        w.end_row()?;
    }
    w.finish()?;

    let q_orb = orbitals_to_kernel(orb.terminal()).sub(&pi)?;
    let dist = kernel::schatten_norm(&q_orb.sub(kernel_traj.terminal())?, 2.0)?;
    #[derive(Serialize)]
    struct OrbitalSummary {
        orbital_count: usize,
        max_gram_drift: f64,
        terminal_s2_distance_vs_rk4: f64,
    }
    write_json(
        &art.path("orbitals_summary.json"),
        &OrbitalSummary {
            orbital_count: set.count(),
            max_gram_drift: orb.max_gram_drift(),
            terminal_s2_distance_vs_rk4: dist,
        },
    )?;
    Ok(())
}

fn scenario_energy_conservation(
    cfg: &RunConfig,
    grid: &Arc<GridSpec>,
    art: &mut Artifacts,
) -> Result<()> {
    let ensemble = generate_ensemble(cfg, grid)?;
    let opts = Rk4Options { record_every: cfg.record_every, ..Default::default() };
    let rows: Vec<(usize, f64, f64, f64, f64, f64)> = ensemble
        .par_iter()
        .enumerate()
        .map(|(m, q0)| -> Result<_> {
            let full = evolve_rk4(q0, cfg.t_final, cfg.dt, opts)?;
            let half = evolve_rk4(q0, cfg.t_final, cfg.dt / 2.0, opts)?;
            let rep_full = energy::conservation_report(&full);
            let rep_half = energy::conservation_report(&half);
            let ratio = if rep_half.max_relative_energy_drift > 0.0 {
                rep_full.max_relative_energy_drift / rep_half.max_relative_energy_drift
            } else {
                f64::INFINITY
            };
            Ok((
                m,
                rep_full.max_relative_energy_drift,
                rep_half.max_relative_energy_drift,
                ratio,
                rep_full.max_trace_drift,
                rep_full.spectrum_drift,
            ))
        })
        .collect::<Result<_>>()?;
    let mut w = CsvWriter::create(
        &art.path("energy_conservation.csv"),
        &["member", "drift_dt", "drift_half_dt", "shrink_ratio", "trace_drift", "spectrum_drift"],
    )?;
    for (m, d1, d2, r, tr, sp) in rows {
        w.field_usize(m);
        w.field_f64(d1);
        w.field_f64(d2);
        w.field_f64(r);
        w.field_f64(tr);
        w.field_f64(sp);
        w.end_row()?;
    }
    w.finish()?;
    Ok(())
}

fn scenario_strichartz_homogeneous(
    cfg: &RunConfig,
    grid: &Arc<GridSpec>,
    art: &mut Artifacts,
) -> Result<()> {
    let ensemble = generate_ensemble(cfg, grid)?;
    let outs: Vec<strichartz::density::EstimateOutcome> = ensemble
        .par_iter()
        .map(|q| {
            strichartz::homogeneous_density_estimate(q, cfg.alpha, cfg.window, cfg.time_samples)
        })
        .collect::<Result<_>>()?;
    let mut report = RatioReport::new("strichartz_homogeneous", grid);
    for (m, o) in outs.iter().enumerate() {
        report.push(o.to_row(m));
    }
    report.write_csv(&art.path("strichartz_homogeneous.csv"))?;
    write_json(&art.path("strichartz_homogeneous_summary.json"), &report.summary())?;
    Ok(())
}

/// Forcing family for the inhomogeneous estimate: a smooth time envelope on
/// the free flow of a seeded perturbation.
fn forcing_states(
    q0: &KernelOperator,
    window: f64,
    samples: usize,
) -> (Vec<KernelOperator>, Vec<f64>) {
    let h = window / (samples - 1) as f64;
    let times: Vec<f64> = (0..samples).map(|j| j as f64 * h).collect();
    let states = times
        .iter()
        .map(|&t| {
            let envelope = (std::f64::consts::PI * t / window).sin().powi(2);
            dynamics::free_conjugate(q0, t).scaled(envelope)
        })
        .collect();
    (states, times)
}

fn scenario_strichartz_inhomogeneous(
    cfg: &RunConfig,
    grid: &Arc<GridSpec>,
    art: &mut Artifacts,
) -> Result<()> {
    let ensemble = generate_ensemble(cfg, grid)?;
    let outs: Vec<strichartz::density::EstimateOutcome> = ensemble
        .par_iter()
        .map(|q| {
            let (states, times) = forcing_states(q, cfg.window, cfg.time_samples);
            strichartz::inhomogeneous_density_estimate(&states, &times, cfg.alpha)
        })
        .collect::<Result<_>>()?;
    let mut report = RatioReport::new("strichartz_inhomogeneous", grid);
    for (m, o) in outs.iter().enumerate() {
        report.push(o.to_row(m));
    }
    report.write_csv(&art.path("strichartz_inhomogeneous.csv"))?;
    write_json(&art.path("strichartz_inhomogeneous_summary.json"), &report.summary())?;
    Ok(())
}

fn scenario_strichartz_kernel(
    cfg: &RunConfig,
    grid: &Arc<GridSpec>,
    art: &mut Artifacts,
) -> Result<()> {
    let ensemble = generate_ensemble(cfg, grid)?;
    let pairs = strichartz::admissible_pairs(grid.d(), cfg.pair_count)?;
    let mut w = CsvWriter::create(
        &art.path("strichartz_kernel.csv"),
        &["member", "pair", "lhs", "rhs", "ratio", "guard_exceeded"],
    )?;
    let rows: Vec<(usize, String, strichartz::density::EstimateOutcome)> = ensemble
        .par_iter()
        .enumerate()
        .flat_map_iter(|(m, q)| {
            let pairs = pairs.clone();
            pairs.into_iter().map(move |p| {
                let out =
                    strichartz::kernel_strichartz_check(q, p, 0.0, cfg.window, cfg.time_samples)
                        .expect("validated pair");
                (m, p.label(), out)
            })
        })
        .collect();
    for (m, label, o) in rows {
        w.field_usize(m);
        w.field_str(&label);
        w.field_f64(o.lhs);
        w.field_f64(o.rhs);
        w.field_f64(o.ratio);
        w.field_usize(o.window_exceeds_guard as usize);
        w.end_row()?;
    }
    w.finish()?;
    Ok(())
}

/// Smooth compactly-supported space-time test field: random nonzero spatial
/// trig modes under Gaussian time envelopes centered inside [0, window].
/// The transform runs on an 8× padded time window so the τ grid resolves
/// the envelopes (Δτ = 2π/window would undersample them badly).
pub fn smooth_test_field(
    grid: &Arc<GridSpec>,
    window: f64,
    time_samples: usize,
    seed: u64,
) -> Result<SpaceTimeField> {
    const PAD: usize = 16;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let n = grid.n_modes();
    let bumps = 4;
    let mut params = Vec::new();
    for _ in 0..bumps {
        let amp = rng.gen_range(0.5..1.5);
        let t0 = window * rng.gen_range(0.35..0.65);
        let sigma = window * rng.gen_range(0.06..0.12);
        let omega = rng.gen_range(-3.0..3.0);
        // low but nonzero spatial modes: the ξ = 0 stratum carries no weight
        let mode: Vec<i64> = loop {
            let m: Vec<i64> = (0..grid.d()).map(|_| rng.gen_range(-2i64..=2)).collect();
            if m.iter().any(|&k| k != 0) {
                break m;
            }
        };
        let phase = rng.gen_range(0.0..std::f64::consts::TAU);
        params.push((amp, t0, sigma, omega, mode, phase));
    }
    let m = grid.modes_per_dim();
    let total_samples = PAD * time_samples;
    let t_window = PAD as f64 * window;
    let samples: Vec<Vec<C64>> = (0..total_samples)
        .map(|j| {
            let t = t_window * j as f64 / total_samples as f64;
            let mut row = vec![C64::new(0.0, 0.0); n];
            if t > window {
                return row; // compact support in time
            }
            for p in 0..n {
                // spatial point lex coords
                let mut rem = p;
                let mut x = [0.0f64; 3];
                for a in (0..grid.d()).rev() {
                    x[a] = grid.box_length() * (rem % m) as f64 / m as f64;
                    rem /= m;
                }
                let mut v = C64::new(0.0, 0.0);
                for (amp, t0, sigma, omega, mode, phase) in &params {
                    let env = (-((t - t0) / sigma).powi(2)).exp();
                    let mut arg = *phase + omega * t;
                    for a in 0..grid.d() {
                        arg += grid.dxi() * mode[a] as f64 * x[a];
                    }
                    v += C64::from_polar(amp * env, arg);
                }
                row[p] = v;
            }
            row
        })
        .collect();
    SpaceTimeField::from_time_samples(grid, t_window, &samples)
}

fn scenario_dual_integral(cfg: &RunConfig, grid: &Arc<GridSpec>, art: &mut Artifacts) -> Result<()> {
    let (alpha, alpha1) = if grid.d() == 1 {
        (0.0, 0.0)
    } else {
        let (a1, _) = strichartz::alpha1_of(grid.d(), cfg.alpha)?;
        (cfg.alpha, a1)
    };
    let opts = DualIntegralOptions::default();
    let outs: Vec<(strichartz::DualIntegralResult, f64)> = (0..cfg.ensemble_size)
        .into_par_iter()
        .map(|m| -> Result<_> {
            let field =
                smooth_test_field(grid, cfg.window, cfg.time_samples.max(32), cfg.member_seed(m))?;
            let r = strichartz::dual_integral_i(&field, alpha, alpha1, &opts)?;
            Ok((r, field.norm_l2()))
        })
        .collect::<Result<_>>()?;
    let mut w = CsvWriter::create(
        &art.path("dual_integral.csv"),
        &["sample", "way_a", "way_b", "discrepancy", "v_norm_l2"],
    )?;
    for (m, (r, vn)) in outs.iter().enumerate() {
        w.field_usize(m);
        w.field_f64(r.way_a);
        w.field_f64(r.way_b);
        w.field_f64(r.discrepancy);
        w.field_f64(*vn);
        w.end_row()?;
    }
    w.finish()?;
    Ok(())
}

fn scenario_optimality(cfg: &RunConfig, art: &mut Artifacts) -> Result<()> {
    let d = if cfg.dimension >= 2 { cfg.dimension } else { 2 };
    let opts = DualIntegralOptions::default();
    let fit = strichartz::optimality_endpoint_scan(d, &cfg.optimality_n, 0.1, &opts)?;
    let mut w =
        CsvWriter::create(&art.path("optimality_endpoint.csv"), &["n", "i_n", "v_norm_l2"])?;
    for i in 0..fit.n_values.len() {
        w.field_usize(fit.n_values[i]);
        w.field_f64(fit.i_values[i]);
        w.field_f64(fit.v_norms[i]);
        w.end_row()?;
    }
    w.finish()?;
    write_json(&art.path("optimality_fit.json"), &fit)?;

    let radii: Vec<f64> = (0..5).map(|k| 10.0 * 2f64.powi(k)).collect();
    let rows = strichartz::optimality_distribution_scan(d, &radii)?;
    let mut w =
        CsvWriter::create(&art.path("optimality_distribution.csv"), &["radius", "inner_integral"])?;
    for (r, v) in rows {
        w.field_f64(r);
        w.field_f64(v);
        w.end_row()?;
    }
    w.finish()?;
    Ok(())
}

fn scenario_lieb_thirring(cfg: &RunConfig, grid: &Arc<GridSpec>, art: &mut Artifacts) -> Result<()> {
    let ensemble = generate_ensemble(cfg, grid)?;
    let outs: Vec<energy::LiebThirringOutcome> = ensemble
        .par_iter()
        .map(|q| energy::lieb_thirring_check(q))
        .collect::<Result<_>>()?;
    let mut report = RatioReport::new("lieb_thirring", grid);
    for (m, o) in outs.iter().enumerate() {
        let row = RatioRow::new(m, o.lhs, o.rhs)
            .with_note(format!("clipped={}", o.clipped_points));
        report.push(row);
    }
    report.write_csv(&art.path("lieb_thirring.csv"))?;
    write_json(&art.path("lieb_thirring_summary.json"), &report.summary())?;
    Ok(())
}

fn scenario_sobolev(cfg: &RunConfig, grid: &Arc<GridSpec>, art: &mut Artifacts) -> Result<()> {
    let ensemble = generate_ensemble(cfg, grid)?;
    let mut sob = RatioReport::new("sobolev", grid);
    let mut bound = RatioReport::new("density_energy_bound", grid);
    for (m, q) in ensemble.iter().enumerate() {
        let l2 = density(q).l2_norm();
        sob.push(RatioRow::new(m, l2, kernel::hs_sobolev_norm(q, 1.0)));
        let (l2b, rhs) = energy::density_energy_bound(q);
        bound.push(RatioRow::new(m, l2b, rhs));
    }
    sob.write_csv(&art.path("sobolev.csv"))?;
    bound.write_csv(&art.path("density_energy_bound.csv"))?;
    write_json(&art.path("sobolev_summary.json"), &sob.summary())?;
    Ok(())
}

fn scenario_approx_lemma(cfg: &RunConfig, grid: &Arc<GridSpec>, art: &mut Artifacts) -> Result<()> {
    let q = make_perturbation(grid, cfg.member_kind(0), cfg.member_seed(0), cfg.size)?;
    let table = approx::approximation_convergence(&q, &cfg.n_values)?;
    table.write_csv(&art.path("approx_convergence.csv"))?;
    let rep = approx::regular_vs_energy_comparison(
        &q,
        cfg.t_final,
        &cfg.n_values,
        cfg.dt,
        cfg.record_every,
    )?;
    rep.write_csv(&art.path("regular_vs_energy.csv"))?;
    write_json(&art.path("approx_summary.json"), &rep)?;
    Ok(())
}

fn scenario_lemma_ratios(cfg: &RunConfig, grid: &Arc<GridSpec>, art: &mut Artifacts) -> Result<()> {
    let ensemble = generate_ensemble(cfg, grid)?;
    let lemmas = [
        LemmaId::TraceH2Pi,
        LemmaId::TraceH2Q,
        LemmaId::YAlphaPi { alpha: cfg.alpha.max(1.0) },
        LemmaId::YAlphaQ { alpha: cfg.alpha.max(1.0) },
    ];
    let mut w = CsvWriter::create(
        &art.path("lemma_ratios.csv"),
        &["lemma", "sample", "lhs", "rhs", "ratio"],
    )?;
    let mut fits = Vec::new();
    for lemma in lemmas {
        let out =
            energy::commutator_lemma_scan(&ensemble, lemma, cfg.window, cfg.time_samples.min(17))?;
        for row in &out.report.rows {
            w.field_str(lemma.name());
            w.field_usize(row.sample);
            w.field_f64(row.lhs);
            w.field_f64(row.rhs);
            w.field_f64(row.ratio);
            w.end_row()?;
        }
        if let Some(fit) = out.window_fit {
            fits.push((lemma.name().to_string(), fit));
        }
    }
    w.finish()?;
    #[derive(Serialize)]
    struct Fits {
        window_scaling: Vec<(String, crate::report::LineFit)>,
    }
    write_json(&art.path("lemma_window_fits.json"), &Fits { window_scaling: fits })?;
    Ok(())
}

fn scenario_exponent_table(cfg: &RunConfig, grid: &Arc<GridSpec>, art: &mut Artifacts) -> Result<()> {
    let mut w = CsvWriter::create(
        &art.path("exponent_table.csv"),
        &["d", "alpha", "alpha1", "eta", "regime"],
    )?;
    for &alpha in &cfg.alpha_list {
        match strichartz::exponent_config(grid.d(), alpha) {
            Ok(e) => {
                w.field_usize(e.d);
                w.field_f64(e.alpha);
                w.field_f64(e.alpha1);
                w.field_f64(e.eta);
                w.field_str(e.regime.tag());
                w.end_row()?;
            }
            Err(_) => {
                w.field_usize(grid.d());
                w.field_f64(alpha);
                w.field_f64(f64::NAN);
                w.field_f64(f64::NAN);
                w.field_str("rejected");
                w.end_row()?;
            }
        }
    }
    w.finish()?;
    Ok(())
}
