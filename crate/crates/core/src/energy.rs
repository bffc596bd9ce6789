//! Relative energy functional, conservation monitoring, and the inequality
//! suite (Lieb–Thirring, low-low density bound, commutator lemma scans).

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dynamics::norms::{strichartz_s_alpha_norm_masked, trapezoid_weights_for};
use crate::dynamics::{free_conjugate, Trajectory};
use crate::error::{Error, Result};
use crate::grid::{self, GridSpec};
use crate::kernel::{
    self, density, hs_sobolev_norm_of, potential_operator, KernelOperator,
};
use crate::linalg;
use crate::report::{fit_line, safe_ratio, CsvWriter, LineFit, RatioReport, RatioRow};

/// Relative energy 𝓔(Q) = Tr₀(−Δ−μ)Q + ½∫ρ_Q², itemized.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub kinetic: f64,
    pub potential: f64,
    pub total: f64,
}

fn require_energy_dimension(grid: &GridSpec) -> Result<()> {
    if grid.d() == 2 || grid.d() == 3 {
        Ok(())
    } else {
        Err(Error::DimensionUnsupported(grid.d()))
    }
}

pub fn relative_energy(q: &KernelOperator) -> Result<EnergyBreakdown> {
    require_energy_dimension(q.grid())?;
    assert!(q.hermitian());
    let kinetic = kernel::relative_kinetic_energy(q);
    let potential = 0.5 * density(q).integral_of_square();
    Ok(EnergyBreakdown { kinetic, potential, total: kinetic + potential })
}

/// Per-step conservation diagnostics of a trajectory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConservationReport {
    pub times: Vec<f64>,
    pub energies: Vec<f64>,
    pub traces: Vec<f64>,
    pub max_relative_energy_drift: f64,
    pub max_trace_drift: f64,
    /// Drift of the γ-spectrum range endpoints over recorded states.
    pub spectral_range_drift: f64,
    /// Worst elementwise drift of the sorted γ-spectrum over recorded states.
    pub spectrum_drift: f64,
}

pub fn conservation_report(traj: &Trajectory) -> ConservationReport {
    let diags = traj.step_diagnostics();
    let e0 = diags[0].energy;
    let tr0 = diags[0].trace;
    let scale = e0.abs().max(1e-300);
    let mut max_e = 0.0f64;
    let mut max_tr = 0.0f64;
    for d in diags {
        max_e = max_e.max((d.energy - e0).abs() / scale);
        max_tr = max_tr.max((d.trace - tr0).abs());
    }
    let spec0 = kernel::gamma_eigenvalues(traj.initial());
    let mut range_drift = 0.0f64;
    let mut spec_drift = 0.0f64;
    for s in traj.states() {
        let sp = kernel::gamma_eigenvalues(s);
        range_drift = range_drift
            .max((sp[0] - spec0[0]).abs())
            .max((sp.last().unwrap() - spec0.last().unwrap()).abs());
        spec_drift = spec_drift.max(
            sp.iter()
                .zip(&spec0)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max),
        );
    }
    ConservationReport {
        times: diags.iter().map(|d| d.t).collect(),
        energies: diags.iter().map(|d| d.energy).collect(),
        traces: diags.iter().map(|d| d.trace).collect(),
        max_relative_energy_drift: max_e,
        max_trace_drift: max_tr,
        spectral_range_drift: range_drift,
        spectrum_drift: spec_drift,
    }
}

impl ConservationReport {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = CsvWriter::create(path, &["t", "energy", "trace"])?;
        for i in 0..self.times.len() {
            w.field_f64(self.times[i]);
            w.field_f64(self.energies[i]);
            w.field_f64(self.traces[i]);
            w.end_row()?;
        }
        w.finish()
    }
}

/// Lieb–Thirring check: Tr₀(−Δ−μ)Q against
/// ∫ (ρ_Π+ρ_Q)^{1+2/d} − ρ_Π^{1+2/d} − (2+d)/d ρ_Π^{2/d} ρ_Q.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LiebThirringOutcome {
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub zero_over_zero: bool,
    /// Grid points where ρ_Π + ρ_Q < 0 beyond rounding, clipped to zero.
    pub clipped_points: usize,
}

/// Tolerance below which a negative total density counts as rounding, not
/// as a violation.
pub const DENSITY_CLIP_TOL: f64 = 1e-12;

pub fn lieb_thirring_check(q: &KernelOperator) -> Result<LiebThirringOutcome> {
    let g = q.grid();
    require_energy_dimension(g)?;
    let d = g.d() as f64;
    let rho_pi = grid::fermi_projector(g).selected_count() as f64 / g.volume();
    let rho = density(q);
    let p = 1.0 + 2.0 / d;
    let base = rho_pi.powf(p);
    let slope = (2.0 + d) / d * rho_pi.powf(2.0 / d);
    let cell = g.volume() / rho.values().len() as f64;
    let mut rhs = 0.0;
    let mut clipped = 0usize;
    for &v in rho.values() {
        let mut total = rho_pi + v;
        if total < 0.0 {
            if total < -DENSITY_CLIP_TOL {
                clipped += 1;
            }
            total = 0.0;
        }
        rhs += (total.powf(p) - base - slope * v) * cell;
    }
    let lhs = kernel::relative_kinetic_energy(q);
    let (ratio, zz) = safe_ratio(lhs, rhs);
    Ok(LiebThirringOutcome { lhs, rhs, ratio, zero_over_zero: zz, clipped_points: clipped })
}

/// Low-low frequency density bounds:
/// ‖ρ_{Π_2^- Q Π_2^-}‖²_{L²} / Tr₀, and ‖ρ_ll‖_{H^α} / ‖ρ_ll‖_{L²}.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LowLowOutcome {
    pub l2sq_over_kinetic: f64,
    pub halpha_over_l2: f64,
    pub zero_over_zero: bool,
}

pub fn low_low_density_bound_check(q: &KernelOperator, alpha: f64) -> Result<LowLowOutcome> {
    let g = q.grid();
    let low = grid::band_projector(g, crate::BAND_RADIUS)?;
    let qll = q.sandwich(&low);
    let rho = density(&qll);
    let l2 = rho.l2_norm();
    let kinetic = kernel::relative_kinetic_energy(q);
    let (r1, z1) = safe_ratio(l2 * l2, kinetic);
    let (r2, z2) = safe_ratio(rho.sobolev_norm(alpha), l2);
    Ok(LowLowOutcome { l2sq_over_kinetic: r1, halpha_over_l2: r2, zero_over_zero: z1 || z2 })
}

/// Which commutator estimate a scan targets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LemmaId {
    /// ‖[ρ_Q, Π^-]‖_{𝔥²} ≲ ‖Q‖_{𝔥²}
    TraceH2Pi,
    /// ‖[ρ_{Q₁}, Q₂]‖_{𝔥²} ≲ ‖Q₁‖_{𝔥²} ‖Q₂‖_{𝔥²}
    TraceH2Q,
    /// ‖[ρ_Q, Π^-]‖_{L¹_t 𝓗^α} ≲ |I|^{1/2} ‖ρ_Q‖_{L²_t H^α}
    YAlphaPi { alpha: f64 },
    /// ‖[ρ_{Q₁}, Q₂]‖_{L¹_t 𝓗^α} ≲ |I|^{1/8} ‖ρ_{Q₁}‖_{L²_t H^α} ‖Π_2^+Q₂‖_{𝓢^α}
    YAlphaQ { alpha: f64 },
}

impl LemmaId {
    pub fn name(&self) -> &'static str {
        match self {
            LemmaId::TraceH2Pi => "trace_h2_pi",
            LemmaId::TraceH2Q => "trace_h2_q",
            LemmaId::YAlphaPi { .. } => "y_alpha_pi",
            LemmaId::YAlphaQ { .. } => "y_alpha_q",
        }
    }

    /// Window power |I|^p in the lemma's right-hand side.
    pub fn window_power(&self) -> Option<f64> {
        match self {
            LemmaId::TraceH2Pi | LemmaId::TraceH2Q => None,
            LemmaId::YAlphaPi { .. } => Some(0.5),
            LemmaId::YAlphaQ { .. } => Some(0.125),
        }
    }
}

#[derive(Debug, Clone)]
pub struct LemmaScanOutcome {
    pub report: RatioReport,
    /// log-log fit of LHS/(structural factor) against |I| over halved
    /// windows, for the time-integrated lemmas.
    pub window_fit: Option<LineFit>,
}

fn pi_operator(g: &std::sync::Arc<GridSpec>) -> KernelOperator {
    KernelOperator::from_mask(g.clone(), &grid::fermi_projector(g))
}

/// One static sample: ‖[ρ_{Q₁}, B]‖_{𝔥²} vs structural factor.
fn trace_h2_sample(q1: &KernelOperator, b: &KernelOperator) -> f64 {
    let v = potential_operator(&density(q1));
    let c = kernel::commutator(&v, b).unwrap();
    kernel::trace_h2_norm(&c)
}

/// Time-integrated sample over the free flow of the arguments.
fn time_integrated_sample(
    q1: &KernelOperator,
    b: Option<&KernelOperator>,
    alpha: f64,
    window: f64,
    samples: usize,
) -> (f64, f64) {
    let g = q1.grid().clone();
    let h = window / (samples - 1) as f64;
    let times: Vec<f64> = (0..samples).map(|j| j as f64 * h).collect();
    let w = trapezoid_weights_for(&times);
    let pi = pi_operator(&g);
    let mut lhs = 0.0;
    let mut rho_l2t = 0.0;
    for (&t, &wi) in times.iter().zip(&w) {
        let q1t = free_conjugate(q1, t);
        let rho = density(&q1t);
        let v = potential_operator(&rho);
        let other = match b {
            Some(q2) => free_conjugate(q2, t),
            None => pi.clone(),
        };
        let c = kernel::commutator(&v, &other).unwrap();
        lhs += wi * hs_sobolev_norm_of(c.data(), &g, alpha);
        let hn = rho.sobolev_norm(alpha);
        rho_l2t += wi * hn * hn;
    }
    (lhs, rho_l2t.sqrt())
}

fn structural_factor(
    lemma: &LemmaId,
    q1: &KernelOperator,
    q2: Option<&KernelOperator>,
    rho_l2t: f64,
    window: f64,
    samples: usize,
) -> f64 {
    match lemma {
        LemmaId::TraceH2Pi => kernel::trace_h2_norm(q1),
        LemmaId::TraceH2Q => {
            kernel::trace_h2_norm(q1) * kernel::trace_h2_norm(q2.unwrap())
        }
        LemmaId::YAlphaPi { .. } => rho_l2t,
        LemmaId::YAlphaQ { alpha } => {
            let g = q1.grid().clone();
            let q2 = q2.unwrap();
            let h = window / (samples - 1) as f64;
            let times: Vec<f64> = (0..samples).map(|j| j as f64 * h).collect();
            let states: Vec<KernelOperator> =
                times.iter().map(|&t| free_conjugate(q2, t)).collect();
            let traj = Trajectory::from_states(states, times).unwrap();
            let high = grid::band_projector(&g, crate::BAND_RADIUS).unwrap().complement();
            let pairs = crate::strichartz::admissible_pairs(g.d(), 4).unwrap();
            let s_norm = strichartz_s_alpha_norm_masked(&traj, *alpha, &pairs, Some(&high))
                .unwrap()
                .get("s_alpha_max");
            rho_l2t * s_norm
        }
    }
}

/// Empirical LHS/RHS ratios for a commutator lemma over an ensemble, plus a
/// window-scaling fit on the first member for the time-integrated variants.
pub fn commutator_lemma_scan(
    ensemble: &[KernelOperator],
    lemma: LemmaId,
    window: f64,
    samples: usize,
) -> Result<LemmaScanOutcome> {
    if ensemble.is_empty() {
        return Err(Error::InvalidParameter("empty ensemble".into()));
    }
    let g = ensemble[0].grid().clone();
    let mut report = RatioReport::new(lemma.name(), &g);
    for (i, q1) in ensemble.iter().enumerate() {
        let q2 = &ensemble[(i + 1) % ensemble.len()];
        let (lhs, structural) = match lemma {
            LemmaId::TraceH2Pi => {
                let pi = pi_operator(&g);
                (trace_h2_sample(q1, &pi), structural_factor(&lemma, q1, None, 0.0, window, samples))
            }
            LemmaId::TraceH2Q => (
                trace_h2_sample(q1, q2),
                structural_factor(&lemma, q1, Some(q2), 0.0, window, samples),
            ),
            LemmaId::YAlphaPi { alpha } => {
                let (lhs, rho_l2t) = time_integrated_sample(q1, None, alpha, window, samples);
                let s = structural_factor(&lemma, q1, None, rho_l2t, window, samples);
                (lhs, s)
            }
            LemmaId::YAlphaQ { alpha } => {
                let (lhs, rho_l2t) = time_integrated_sample(q1, Some(q2), alpha, window, samples);
                let s = structural_factor(&lemma, q1, Some(q2), rho_l2t, window, samples);
                (lhs, s)
            }
        };
        let rhs = match lemma.window_power() {
            Some(p) => window.powf(p) * structural,
            None => structural,
        };
        report.push(RatioRow::new(i, lhs, rhs));
    }

    let window_fit = match lemma.window_power() {
        None => None,
        Some(_) => {
            // fit LHS/structural ~ |I|^β over halved windows on member 0
            let q1 = &ensemble[0];
            let q2 = &ensemble[1 % ensemble.len()];
            let mut xs = Vec::new();
            let mut ys = Vec::new();
            for k in 0..4 {
                let w_k = window / 2f64.powi(k);
                let (lhs, rho_l2t) = match lemma {
                    LemmaId::YAlphaPi { alpha } => {
                        time_integrated_sample(q1, None, alpha, w_k, samples)
                    }
                    LemmaId::YAlphaQ { alpha } => {
                        time_integrated_sample(q1, Some(q2), alpha, w_k, samples)
                    }
                    _ => unreachable!(),
                };
                let s = match lemma {
                    LemmaId::YAlphaPi { .. } => {
                        structural_factor(&lemma, q1, None, rho_l2t, w_k, samples)
                    }
                    LemmaId::YAlphaQ { .. } => {
                        structural_factor(&lemma, q1, Some(q2), rho_l2t, w_k, samples)
                    }
                    _ => unreachable!(),
                };
                if lhs > 0.0 && s > 0.0 {
                    xs.push(w_k.ln());
                    ys.push((lhs / s).ln());
                }
            }
            if xs.len() >= 3 {
                Some(fit_line(&xs, &ys))
            } else {
                None
            }
        }
    };
    Ok(LemmaScanOutcome { report, window_fit })
}

/// ‖ρ_Q‖_{L²} against Tr₀ + Tr₀^{1/2} (finite relative energy bound).
pub fn density_energy_bound(q: &KernelOperator) -> (f64, f64) {
    let l2 = density(q).l2_norm();
    let tr0 = kernel::relative_kinetic_energy(q).max(0.0);
    (l2, tr0 + tr0.sqrt())
}

/// Max |eig| check helper used by tests around γ(1−γ) positivity.
pub fn min_eig_of_hermitian(data: &faer::Mat<num_complex::Complex64>) -> f64 {
    linalg::eigvalsh(&linalg::hermitize(data))[0]
}
