//! Dense frequency-space operator kernels Q̂(ξ,ξ′) and the static norms,
//! densities, commutators and perturbation generators built on them.
//!
//! The matrix is the operator in the orthonormal plane-wave basis
//! φ_ξ(x) = L^{−d/2} e^{iξ·x}, i.e. the position kernel is
//! Q(x,x′) = L^{−d} Σ Q̂(ξ,ξ′) e^{i(ξ·x − ξ′·x′)}. Operator algebra is plain
//! matrix algebra; hermiticity of the kernel equals hermiticity of the matrix.

use std::sync::Arc;

use faer::Mat;
use num_complex::Complex64 as C64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::grid::{self, GridSpec, MultiplierMask};
use crate::linalg;
use crate::report::NormReport;
use crate::transform;

/// Hermiticity metadata is validated at construction against this tolerance.
pub const HERMITICITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct KernelOperator {
    grid: Arc<GridSpec>,
    data: Mat<C64>,
    hermitian: bool,
}

impl KernelOperator {
    /// Wraps a dense matrix, checking the hermitian flag if set.
    pub fn new(grid: Arc<GridSpec>, data: Mat<C64>, hermitian: bool) -> Result<Self> {
        let n = grid.n_modes();
        if data.nrows() != n || data.ncols() != n {
            return Err(Error::InvalidParameter(format!(
                "kernel matrix is {}x{}, grid has {n} modes",
                data.nrows(),
                data.ncols()
            )));
        }
        if hermitian {
            let residue = linalg::hermitian_residue(&data);
            if residue > HERMITICITY_TOL {
                return Err(Error::NotHermitian { residue, tol: HERMITICITY_TOL });
            }
        }
        Ok(KernelOperator { grid, data, hermitian })
    }

    /// Internal constructor for matrices hermitian by construction.
    pub(crate) fn new_hermitian_unchecked(grid: Arc<GridSpec>, data: Mat<C64>) -> Self {
        debug_assert!(linalg::hermitian_residue(&data) <= HERMITICITY_TOL);
        KernelOperator { grid, data, hermitian: true }
    }

    pub fn zeros(grid: Arc<GridSpec>) -> Self {
        let n = grid.n_modes();
        KernelOperator { grid, data: Mat::zeros(n, n), hermitian: true }
    }

    /// Diagonal operator from a multiplier mask (e.g. Π_μ^-).
    pub fn from_mask(grid: Arc<GridSpec>, mask: &MultiplierMask) -> Self {
        let n = grid.n_modes();
        let mut data = Mat::zeros(n, n);
        for i in 0..n {
            data[(i, i)] = C64::new(mask.values[i], 0.0);
        }
        KernelOperator { grid, data, hermitian: true }
    }

    /// w |φ⟩⟨φ| with frequency coefficients φ̂.
    pub fn rank_one(grid: Arc<GridSpec>, phi: &[C64], weight: f64) -> Self {
        let n = grid.n_modes();
        assert_eq!(phi.len(), n);
        let data = Mat::from_fn(n, n, |i, j| phi[i] * phi[j].conj() * weight);
        KernelOperator { grid, data, hermitian: true }
    }

    pub fn grid(&self) -> &Arc<GridSpec> {
        &self.grid
    }
    pub fn data(&self) -> &Mat<C64> {
        &self.data
    }
    pub fn data_mut(&mut self) -> &mut Mat<C64> {
        &mut self.data
    }
    pub fn hermitian(&self) -> bool {
        self.hermitian
    }
    pub fn n(&self) -> usize {
        self.data.nrows()
    }

    pub fn trace(&self) -> C64 {
        linalg::trace(&self.data)
    }

    pub fn hermitian_residue(&self) -> f64 {
        linalg::hermitian_residue(&self.data)
    }

    /// Largest singular value (= largest |eigenvalue| for hermitian kernels).
    pub fn op_norm(&self) -> f64 {
        if self.hermitian {
            linalg::eigvalsh(&self.data).iter().fold(0.0f64, |a, &w| a.max(w.abs()))
        } else {
            linalg::singular_values(&self.data)[0]
        }
    }

    /// Eigenvalues (hermitian kernels), ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        assert!(self.hermitian, "eigenvalues of a non-hermitian kernel");
        linalg::eigvalsh(&self.data)
    }

    /// Two-sided mask sandwich M Q M (projectors and weights).
    pub fn sandwich(&self, mask: &MultiplierMask) -> KernelOperator {
        let n = self.n();
        let v = &mask.values;
        let data = Mat::from_fn(n, n, |i, j| self.data[(i, j)] * (v[i] * v[j]));
        KernelOperator { grid: self.grid.clone(), data, hermitian: self.hermitian }
    }

    /// One-sided mask application M Q.
    pub fn mask_left(&self, mask: &MultiplierMask) -> KernelOperator {
        let n = self.n();
        let v = &mask.values;
        let data = Mat::from_fn(n, n, |i, j| self.data[(i, j)] * v[i]);
        KernelOperator { grid: self.grid.clone(), data, hermitian: false }
    }

    pub fn scaled(&self, c: f64) -> KernelOperator {
        KernelOperator {
            grid: self.grid.clone(),
            data: linalg::scale(&self.data, C64::new(c, 0.0)),
            hermitian: self.hermitian,
        }
    }

    pub fn add(&self, other: &KernelOperator) -> Result<KernelOperator> {
        self.grid.check_same(&other.grid)?;
        Ok(KernelOperator {
            grid: self.grid.clone(),
            data: linalg::add(&self.data, &other.data),
            hermitian: self.hermitian && other.hermitian,
        })
    }

    pub fn sub(&self, other: &KernelOperator) -> Result<KernelOperator> {
        self.grid.check_same(&other.grid)?;
        Ok(KernelOperator {
            grid: self.grid.clone(),
            data: linalg::sub(&self.data, &other.data),
            hermitian: self.hermitian && other.hermitian,
        })
    }
}

/// Density function ρ_Q: Fourier coefficients on the difference lattice plus
/// real samples on the M^d spatial grid.
#[derive(Debug, Clone)]
pub struct DensityField {
    grid: Arc<GridSpec>,
    /// ρ̂(η), difference-lattice order.
    coefficients: Vec<C64>,
    /// ρ(x) on the M^d spatial grid (lexicographic points x = L j / M).
    values: Vec<f64>,
    /// Largest |Im ρ(x)| dropped when taking the real part.
    imag_residue: f64,
}

impl DensityField {
    pub fn grid(&self) -> &Arc<GridSpec> {
        &self.grid
    }
    pub fn coefficients(&self) -> &[C64] {
        &self.coefficients
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn imag_residue(&self) -> f64 {
        self.imag_residue
    }

    pub fn zero(grid: Arc<GridSpec>) -> Self {
        let coefficients = vec![C64::new(0.0, 0.0); grid.diff_len()];
        let values = vec![0.0; grid.n_modes()];
        DensityField { grid, coefficients, values, imag_residue: 0.0 }
    }

    /// ∫ρ dx = L^d ρ̂(0) (= Tr Q for ρ = ρ_Q).
    pub fn integral(&self) -> C64 {
        let zero = self.grid.diff_index(&[0; 3], &[0; 3]);
        self.coefficients[zero] * self.grid.volume()
    }

    /// Exact ∫ρ² dx of the trigonometric polynomial (Parseval over the
    /// difference lattice; equals the refined-grid Riemann sum).
    pub fn integral_of_square(&self) -> f64 {
        let s: f64 = self.coefficients.iter().map(|c| c.norm_sqr()).sum();
        s * self.grid.volume()
    }

    pub fn l2_norm(&self) -> f64 {
        self.integral_of_square().sqrt()
    }

    /// ‖ρ‖_{H^s} with weight ⟨η⟩^s.
    pub fn sobolev_norm(&self, s: f64) -> f64 {
        let mut acc = 0.0;
        for (c, &e2) in self.coefficients.iter().zip(self.grid.diff_eta2_all()) {
            acc += (1.0 + e2).powf(s) * c.norm_sqr();
        }
        (acc * self.grid.volume()).sqrt()
    }

    /// ‖|∇|^{1/2} ρ‖_{H^s} with weight |η|⟨η⟩^{2s}; the η = 0 mode drops out.
    pub fn half_derivative_sobolev_norm(&self, s: f64) -> f64 {
        let mut acc = 0.0;
        for (c, &e2) in self.coefficients.iter().zip(self.grid.diff_eta2_all()) {
            acc += e2.sqrt() * (1.0 + e2).powf(s) * c.norm_sqr();
        }
        (acc * self.grid.volume()).sqrt()
    }

    pub fn scaled(&self, c: f64) -> DensityField {
        DensityField {
            grid: self.grid.clone(),
            coefficients: self.coefficients.iter().map(|z| z * c).collect(),
            values: self.values.iter().map(|v| v * c).collect(),
            imag_residue: self.imag_residue * c.abs(),
        }
    }

    pub fn sub(&self, other: &DensityField) -> DensityField {
        DensityField {
            grid: self.grid.clone(),
            coefficients: self
                .coefficients
                .iter()
                .zip(&other.coefficients)
                .map(|(a, b)| a - b)
                .collect(),
            values: self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect(),
            imag_residue: self.imag_residue + other.imag_residue,
        }
    }
}

/// ρ̂(η) = L^{−d} Σ_ξ Q̂(ξ, ξ−η); shifts leaving the mode lattice contribute
/// nothing (no wrap-around), matching the continuum trace formula.
pub fn density(q: &KernelOperator) -> DensityField {
    let g = q.grid();
    let n = g.n_modes();
    let scale = 1.0 / g.volume();
    let mut coefficients = vec![C64::new(0.0, 0.0); g.diff_len()];
    for j in 0..n {
        let kj = g.mode_k(j);
        let col = linalg::col_slice(q.data(), j);
        for i in 0..n {
            let didx = g.diff_index(&g.mode_k(i), &kj);
            coefficients[didx] += col[i];
        }
    }
    for c in coefficients.iter_mut() {
        *c *= scale;
    }
    let m = g.modes_per_dim();
    let complex_values = transform::synth_diff_to_spatial(g, &coefficients, m);
    let mut imag_residue = 0.0f64;
    let values = complex_values
        .iter()
        .map(|z| {
            imag_residue = imag_residue.max(z.im.abs());
            z.re
        })
        .collect();
    DensityField { grid: g.clone(), coefficients, values, imag_residue }
}

/// Multiplication operator by ρ compressed to the mode band:
/// V̂(ξ,ξ′) = ρ̂(ξ−ξ′). Hermitian exactly when ρ is real.
pub fn potential_operator(rho: &DensityField) -> KernelOperator {
    let g = rho.grid();
    let n = g.n_modes();
    let data = Mat::from_fn(n, n, |i, j| {
        rho.coefficients[g.diff_index(&g.mode_k(i), &g.mode_k(j))]
    });
    // real density <=> rho_hat(-eta) = conj rho_hat(eta) <=> hermitian matrix
    let hermitian = linalg::hermitian_residue(&data) <= HERMITICITY_TOL;
    KernelOperator { grid: g.clone(), data, hermitian }
}

/// AB − BA.
pub fn commutator(a: &KernelOperator, b: &KernelOperator) -> Result<KernelOperator> {
    a.grid().check_same(b.grid())?;
    let ab = linalg::mul(a.data().as_ref(), b.data().as_ref());
    let data = if a.hermitian() && b.hermitian() {
        // (AB)† = BA for hermitian A, B: one product suffices
        let n = ab.nrows();
        Mat::from_fn(n, n, |i, j| ab[(i, j)] - ab[(j, i)].conj())
    } else {
        let ba = linalg::mul(b.data().as_ref(), a.data().as_ref());
        linalg::sub(&ab, &ba)
    };
    Ok(KernelOperator { grid: a.grid().clone(), data, hermitian: false })
}

/// [V_ρ, Q] with V_ρ the compressed multiplication operator of ρ.
pub fn potential_commutator(rho: &DensityField, q: &KernelOperator) -> Result<KernelOperator> {
    rho.grid().check_same(q.grid())?;
    let v = potential_operator(rho);
    commutator(&v, q)
}

/// Schatten norm ‖Q‖_{𝔖^p}; `p = f64::INFINITY` gives the operator norm.
pub fn schatten_norm(q: &KernelOperator, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::InvalidParameter(format!("Schatten exponent must be >= 1 (got {p})")));
    }
    if p == 2.0 {
        return Ok(linalg::frobenius(q.data()));
    }
    if p.is_infinite() {
        return Ok(q.op_norm());
    }
    let svals: Vec<f64> = if q.hermitian() {
        q.eigenvalues().iter().map(|w| w.abs()).collect()
    } else {
        linalg::singular_values(q.data())
    };
    if p == 1.0 {
        Ok(svals.iter().sum())
    } else {
        Ok(svals.iter().map(|s| s.powf(p)).sum::<f64>().powf(1.0 / p))
    }
}

/// Hilbert–Schmidt Sobolev norm ‖⟨∇⟩^α Q ⟨∇⟩^α‖_{𝔖²}, computed without
/// materializing the sandwich.
pub fn hs_sobolev_norm(q: &KernelOperator, alpha: f64) -> f64 {
    let g = q.grid();
    let n = g.n_modes();
    let w: Vec<f64> = g.xi2_all().iter().map(|&x2| (1.0 + x2).powf(alpha)).collect(); // ⟨ξ⟩^{2α}
    let mut acc = 0.0;
    for j in 0..n {
        let col = linalg::col_slice(q.data(), j);
        let wj = w[j];
        for i in 0..n {
            acc += w[i] * wj * col[i].norm_sqr();
        }
    }
    acc.sqrt()
}

/// ‖Π_2^+ Q‖_{𝓗^α}: high-band projector on the left leg only.
pub fn hs_sobolev_norm_high(q: &KernelOperator, alpha: f64, band_r: f64) -> f64 {
    let g = q.grid();
    let n = g.n_modes();
    let high = grid::band_projector(g, band_r).expect("band radius").complement();
    let w: Vec<f64> = g.xi2_all().iter().map(|&x2| (1.0 + x2).powf(alpha)).collect();
    let mut acc = 0.0;
    for j in 0..n {
        let col = linalg::col_slice(q.data(), j);
        let wj = w[j];
        for i in 0..n {
            if high.values[i] != 0.0 {
                acc += w[i] * wj * col[i].norm_sqr();
            }
        }
    }
    acc.sqrt()
}

/// Signed relative kinetic energy Tr(wQ^{++}w) − Tr(wQ^{--}w) with
/// w = kinetic weight; O(n) from the diagonal.
pub fn relative_kinetic_energy(q: &KernelOperator) -> f64 {
    let g = q.grid();
    let kw = grid::kinetic_weight(g);
    let mu = g.mu();
    let mut acc = 0.0;
    for i in 0..g.n_modes() {
        let w2 = kw.values[i] * kw.values[i];
        let qd = q.data()[(i, i)].re;
        if g.xi2(i) > mu {
            acc += w2 * qd;
        } else {
            acc -= w2 * qd;
        }
    }
    acc
}

/// Relative kinetic energy with the ±± block signature check
/// (Q^{++} ⪰ 0, Q^{--} ⪯ 0 on 𝒦).
#[derive(Debug, Clone)]
pub struct KineticBreakdown {
    pub value: f64,
    pub plus_trace: f64,
    pub minus_trace: f64,
    /// false when the signature check fails (Q ∉ 𝒦); the signed value is
    /// still meaningful.
    pub signature_ok: bool,
    pub signature_violation: f64,
}

pub fn relative_kinetic_energy_checked(q: &KernelOperator, tol: f64) -> KineticBreakdown {
    assert!(q.hermitian(), "relative kinetic energy expects a hermitian kernel");
    let g = q.grid();
    let kw = grid::kinetic_weight(g);
    let mu = g.mu();
    let plus_idx: Vec<usize> = (0..g.n_modes()).filter(|&i| g.xi2(i) > mu).collect();
    let minus_idx: Vec<usize> = (0..g.n_modes()).filter(|&i| g.xi2(i) <= mu).collect();
    let sub = |idx: &[usize]| {
        Mat::from_fn(idx.len(), idx.len(), |a, b| q.data()[(idx[a], idx[b])])
    };
    let mut violation = 0.0f64;
    if !plus_idx.is_empty() {
        let w = linalg::eigvalsh(&sub(&plus_idx));
        violation = violation.max(-w[0]); // negative eigenvalue of Q^{++}
    }
    if !minus_idx.is_empty() {
        let w = linalg::eigvalsh(&sub(&minus_idx));
        violation = violation.max(*w.last().unwrap()); // positive eigenvalue of Q^{--}
    }
    let mut plus_trace = 0.0;
    let mut minus_trace = 0.0;
    for i in 0..g.n_modes() {
        let w2 = kw.values[i] * kw.values[i];
        let qd = q.data()[(i, i)].re;
        if g.xi2(i) > mu {
            plus_trace += w2 * qd;
        } else {
            minus_trace += w2 * qd;
        }
    }
    KineticBreakdown {
        value: plus_trace - minus_trace,
        plus_trace,
        minus_trace,
        signature_ok: violation <= tol,
        signature_violation: violation,
    }
}

/// 𝔖¹ norm of w Q^{±±} w restricted to the ± block.
fn kinetic_block_s1(q: &KernelOperator, plus: bool) -> f64 {
    let g = q.grid();
    let kw = grid::kinetic_weight(g);
    let mu = g.mu();
    let idx: Vec<usize> =
        (0..g.n_modes()).filter(|&i| (g.xi2(i) > mu) == plus).collect();
    if idx.is_empty() {
        return 0.0;
    }
    let block = Mat::from_fn(idx.len(), idx.len(), |a, b| {
        q.data()[(idx[a], idx[b])] * (kw.values[idx[a]] * kw.values[idx[b]])
    });
    if q.hermitian() {
        linalg::eigvalsh(&block).iter().map(|w| w.abs()).sum()
    } else {
        linalg::singular_values(&block).iter().sum()
    }
}

/// 𝒳 norm: operator norm plus the two kinetic 𝔖¹ block norms, itemized.
pub fn x_norm(q: &KernelOperator) -> NormReport {
    assert!(q.hermitian(), "the X norm is defined on self-adjoint kernels");
    let mut rep = NormReport::new(q.grid());
    let op = q.op_norm();
    let plus = kinetic_block_s1(q, true);
    let minus = kinetic_block_s1(q, false);
    rep.set("op", op);
    rep.set("kinetic_plus_s1", plus);
    rep.set("kinetic_minus_s1", minus);
    rep.set("x_total", op + plus + minus);
    rep
}

/// 𝔛^α norm: operator norm + ‖Π_2^+ Q‖_{𝓗^α}, itemized.
pub fn x_alpha_norm(q: &KernelOperator, alpha: f64) -> NormReport {
    x_alpha_norm_with_band(q, alpha, crate::BAND_RADIUS)
}

pub fn x_alpha_norm_with_band(q: &KernelOperator, alpha: f64, band_r: f64) -> NormReport {
    let mut rep = NormReport::new(q.grid());
    let op = q.op_norm();
    let high = hs_sobolev_norm_high(q, alpha, band_r);
    rep.set("op", op);
    rep.set("hs_high", high);
    rep.set("x_alpha_total", op + high);
    rep
}

/// 𝔥² norm ‖⟨∇⟩²Q⟨∇⟩²‖_{𝔖¹}.
pub fn trace_h2_norm(q: &KernelOperator) -> f64 {
    let g = q.grid();
    let n = g.n_modes();
    let w: Vec<f64> = g.xi2_all().iter().map(|&x2| 1.0 + x2).collect(); // ⟨ξ⟩²
    let sandwiched = Mat::from_fn(n, n, |i, j| q.data()[(i, j)] * (w[i] * w[j]));
    if q.hermitian() {
        linalg::eigvalsh(&sandwiched).iter().map(|x| x.abs()).sum()
    } else {
        linalg::singular_values(&sandwiched).iter().sum()
    }
}

/// ‖⟨∇⟩^α [·] ⟨∇⟩^α‖_{𝔖²} of an arbitrary (not necessarily hermitian) kernel.
pub fn hs_sobolev_norm_of(data: &Mat<C64>, grid: &GridSpec, alpha: f64) -> f64 {
    let n = grid.n_modes();
    let w: Vec<f64> = grid.xi2_all().iter().map(|&x2| (1.0 + x2).powf(alpha)).collect();
    let mut acc = 0.0;
    for j in 0..n {
        let wj = w[j];
        for i in 0..n {
            acc += w[i] * wj * data[(i, j)].norm_sqr();
        }
    }
    acc.sqrt()
}

// --- perturbation generators --------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PerturbationKind {
    UnitaryConjugation,
    ParticleHole,
    SmoothRandom,
}

impl PerturbationKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "unitary_conjugation" | "unitary" => Ok(Self::UnitaryConjugation),
            "particle_hole" => Ok(Self::ParticleHole),
            "smooth_random" | "smooth" => Ok(Self::SmoothRandom),
            other => Err(Error::InvalidParameter(format!("unknown perturbation kind '{other}'"))),
        }
    }
}

fn smooth_decay_for(grid: &GridSpec) -> f64 {
    if grid.d() >= 3 { 3.0 } else { 2.5 }
}

fn random_hermitian_decaying(grid: &GridSpec, rng: &mut ChaCha12Rng, s: f64) -> Mat<C64> {
    let n = grid.n_modes();
    let w: Vec<f64> = grid.xi2_all().iter().map(|&x2| (1.0 + x2).powf(-s / 2.0)).collect();
    let mut m = Mat::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            let z = if i == j {
                C64::new(re * w[i] * w[j], 0.0)
            } else {
                C64::new(re, im) * (w[i] * w[j] * std::f64::consts::FRAC_1_SQRT_2)
            };
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
        }
    }
    m
}

/// Random orthonormal columns supported on the modes listed in `support`.
fn random_orthonormal_in(
    grid: &GridSpec,
    support: &[usize],
    count: usize,
    rng: &mut ChaCha12Rng,
) -> Vec<Vec<C64>> {
    let n = grid.n_modes();
    let mut vecs: Vec<Vec<C64>> = Vec::with_capacity(count);
    for _ in 0..count {
        let mut v = vec![C64::new(0.0, 0.0); n];
        for &idx in support {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            v[idx] = C64::new(re, im);
        }
        // modified Gram-Schmidt against previous columns
        for prev in &vecs {
            let ip: C64 = prev.iter().zip(&v).map(|(p, x)| p.conj() * x).sum();
            for (x, p) in v.iter_mut().zip(prev) {
                *x -= ip * p;
            }
        }
        let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        assert!(norm > 1e-8, "degenerate draw in orthonormalization");
        for x in v.iter_mut() {
            *x /= norm;
        }
        vecs.push(v);
    }
    vecs
}

/// Seeded generator of perturbations Q ∈ 𝒦 (γ = Π_μ^- + Q has spectrum in
/// [0,1]). `size` controls amplitude (and rank for particle_hole).
pub fn make_perturbation(
    grid: &Arc<GridSpec>,
    kind: PerturbationKind,
    seed: u64,
    size: f64,
) -> Result<KernelOperator> {
    if size < 0.0 {
        return Err(Error::InvalidParameter(format!("perturbation size must be >= 0 (got {size})")));
    }
    if size == 0.0 {
        return Ok(KernelOperator::zeros(grid.clone()));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let pi = grid::fermi_projector(grid);
    match kind {
        PerturbationKind::UnitaryConjugation => {
            let h = random_hermitian_decaying(grid, &mut rng, 3.0);
            let (w, v) = linalg::eigh(&h);
            // U = exp(i·size·H); γ = U Π U† = (U_sea)(U_sea)†
            let phases: Vec<C64> = w.iter().map(|&x| C64::from_polar(1.0, size * x)).collect();
            let n = grid.n_modes();
            let mut u = Mat::zeros(n, n);
            for j in 0..n {
                let src = linalg::col_slice(&v, j).to_vec();
                let dst = linalg::col_slice_mut(&mut u, j);
                for i in 0..n {
                    dst[i] = src[i] * phases[j];
                }
            }
            let u = linalg::mul_right_adjoint(u.as_ref(), v.as_ref());
            let sea: Vec<usize> =
                (0..n).filter(|&i| pi.values[i] != 0.0).collect();
            let mut used = Mat::zeros(n, sea.len());
            for (c, &i) in sea.iter().enumerate() {
                let src = linalg::col_slice(&u, i).to_vec();
                let dst = used.col_mut(c).try_as_col_major_mut().unwrap().as_slice_mut();
                dst.copy_from_slice(&src);
            }
            let gamma = linalg::mul_right_adjoint(used.as_ref(), used.as_ref());
            let gamma = linalg::hermitize(&gamma);
            let mut q = gamma;
            for i in 0..n {
                q[(i, i)] -= pi.values[i];
            }
            Ok(KernelOperator::new_hermitian_unchecked(grid.clone(), q))
        }
        PerturbationKind::ParticleHole => {
            let n = grid.n_modes();
            // particle pool: lowest shells above the surface; band-edge
            // excitations are not representable consistently across solvers
            let mut above: Vec<usize> = (0..n).filter(|&i| pi.values[i] == 0.0).collect();
            above.sort_by(|&a, &b| {
                grid.xi2(a).partial_cmp(&grid.xi2(b)).unwrap().then(a.cmp(&b))
            });
            let k = (size.ceil() as usize).max(1);
            above.truncate((4 * k).max(12).min(above.len()));
            let below: Vec<usize> = (0..n).filter(|&i| pi.values[i] != 0.0).collect();
            let kp = k.min(above.len());
            let kh = k.min(below.len());
            let wmax = size.min(1.0);
            let particles = random_orthonormal_in(grid, &above, kp, &mut rng);
            let holes = random_orthonormal_in(grid, &below, kh, &mut rng);
            let mut q = Mat::zeros(n, n);
            for p in particles {
                let w: f64 = rng.gen_range(0.0..=wmax);
                for i in 0..n {
                    for j in 0..n {
                        q[(i, j)] += p[i] * p[j].conj() * w;
                    }
                }
            }
            for h in holes {
                let w: f64 = rng.gen_range(0.0..=wmax);
                for i in 0..n {
                    for j in 0..n {
                        q[(i, j)] -= h[i] * h[j].conj() * w;
                    }
                }
            }
            let q = linalg::hermitize(&q);
            Ok(KernelOperator::new_hermitian_unchecked(grid.clone(), q))
        }
        PerturbationKind::SmoothRandom => {
            let s = smooth_decay_for(grid);
            let a = random_hermitian_decaying(grid, &mut rng, s);
            let top = linalg::eigvalsh(&a).iter().fold(0.0f64, |m, &w| m.max(w.abs()));
            let a = linalg::scale(&a, C64::new(size / top.max(1e-300), 0.0));
            let n = grid.n_modes();
            let mut gamma_raw = a;
            for i in 0..n {
                gamma_raw[(i, i)] += pi.values[i];
            }
            let (w, v) = linalg::eigh(&gamma_raw);
            let clipped: Vec<f64> = w.iter().map(|&x| x.clamp(0.0, 1.0)).collect();
            let gamma = linalg::hermitize(&linalg::from_eigh(&clipped, &v));
            let mut q = gamma;
            for i in 0..n {
                q[(i, i)] -= pi.values[i];
            }
            Ok(KernelOperator::new_hermitian_unchecked(grid.clone(), q))
        }
    }
}

/// Deterministic rank-one particle/hole excitations at explicit modes.
pub fn particle_hole_excitation(
    grid: &Arc<GridSpec>,
    particles: &[(usize, f64)],
    holes: &[(usize, f64)],
) -> Result<KernelOperator> {
    let pi = grid::fermi_projector(grid);
    let n = grid.n_modes();
    let mut q = Mat::<C64>::zeros(n, n);
    for &(idx, w) in particles {
        if pi.values[idx] != 0.0 {
            return Err(Error::InvalidParameter(format!(
                "mode {idx} is inside the Fermi sea; cannot add a particle there"
            )));
        }
        if !(0.0..=1.0).contains(&w) {
            return Err(Error::InvalidParameter(format!("occupation weight {w} outside [0,1]")));
        }
        q[(idx, idx)] += C64::new(w, 0.0);
    }
    for &(idx, w) in holes {
        if pi.values[idx] == 0.0 {
            return Err(Error::InvalidParameter(format!(
                "mode {idx} is outside the Fermi sea; cannot remove a hole there"
            )));
        }
        if !(0.0..=1.0).contains(&w) {
            return Err(Error::InvalidParameter(format!("occupation weight {w} outside [0,1]")));
        }
        q[(idx, idx)] -= C64::new(w, 0.0);
    }
    Ok(KernelOperator::new_hermitian_unchecked(grid.clone(), q))
}

/// Spectrum of γ = Π_μ^- + Q, ascending.
pub fn gamma_eigenvalues(q: &KernelOperator) -> Vec<f64> {
    let pi = grid::fermi_projector(q.grid());
    let n = q.n();
    let mut gamma = q.data().clone();
    for i in 0..n {
        gamma[(i, i)] += pi.values[i];
    }
    linalg::eigvalsh(&gamma)
}

/// Pauli-principle check: eigenvalues of Π_μ^- + Q within [−tol, 1+tol].
pub fn pauli_bounds_ok(q: &KernelOperator, tol: f64) -> bool {
    let w = gamma_eigenvalues(q);
    w.first().map_or(true, |&lo| lo >= -tol) && w.last().map_or(true, |&hi| hi <= 1.0 + tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;

    const TAU: f64 = 2.0 * std::f64::consts::PI;

    fn grid_d2() -> Arc<GridSpec> {
        build_grid(2, 8, TAU, 1.0, 0.0).unwrap()
    }

    #[test]
    fn density_of_fermi_sea_is_constant() {
        let g = grid_d2();
        let pi = KernelOperator::from_mask(g.clone(), &grid::fermi_projector(&g));
        let rho = density(&pi);
        let expect = 5.0 / (TAU * TAU);
        for v in rho.values() {
            assert!((v - expect).abs() < 1e-12);
        }
        assert!((rho.integral().re - 5.0).abs() < 1e-12);
        assert!(rho.imag_residue() < 1e-12);
    }

    #[test]
    fn density_of_plane_wave() {
        let g = grid_d2();
        let n = g.n_modes();
        let idx = g.mode_index(&[2, 1]).unwrap();
        let mut phi = vec![C64::new(0.0, 0.0); n];
        phi[idx] = C64::new(1.0, 0.0);
        let q = KernelOperator::rank_one(g.clone(), &phi, 1.0);
        let rho = density(&q);
        for v in rho.values() {
            assert!((v - 1.0 / g.volume()).abs() < 1e-13);
        }
    }

    #[test]
    fn density_zero() {
        let g = grid_d2();
        let rho = density(&KernelOperator::zeros(g));
        assert!(rho.values().iter().all(|&v| v == 0.0));
        assert_eq!(rho.l2_norm(), 0.0);
    }

    #[test]
    fn schatten_norms() {
        let g = grid_d2();
        let n = g.n_modes();
        let mut phi = vec![C64::new(0.0, 0.0); n];
        // normalized two-mode superposition
        phi[3] = C64::new(0.6, 0.0);
        phi[10] = C64::new(0.0, 0.8);
        let q = KernelOperator::rank_one(g.clone(), &phi, 1.0);
        for p in [1.0, 1.7, 2.0, 5.0, f64::INFINITY] {
            assert!((schatten_norm(&q, p).unwrap() - 1.0).abs() < 1e-10, "p={p}");
        }
        let pi = KernelOperator::from_mask(g.clone(), &grid::fermi_projector(&g));
        assert!((schatten_norm(&pi, 1.0).unwrap() - 5.0).abs() < 1e-10);
        // p=2 equals the Frobenius norm
        let q2 = make_perturbation(&g, PerturbationKind::SmoothRandom, 7, 0.5).unwrap();
        assert!(
            (schatten_norm(&q2, 2.0).unwrap() - linalg::frobenius(q2.data())).abs() < 1e-12
        );
        assert!(schatten_norm(&q2, 0.5).is_err());
    }

    #[test]
    fn hs_sobolev_examples() {
        let g = grid_d2();
        let n = g.n_modes();
        let idx = g.mode_index(&[2, 0]).unwrap();
        let mut phi = vec![C64::new(0.0, 0.0); n];
        phi[idx] = C64::new(1.0, 0.0);
        let q = KernelOperator::rank_one(g.clone(), &phi, 1.0);
        let alpha = 1.3;
        let expect = (1.0 + g.xi2(idx)).powf(alpha); // ⟨ξ0⟩^{2α}
        assert!((hs_sobolev_norm(&q, alpha) - expect).abs() < 1e-10);

        let q2 = make_perturbation(&g, PerturbationKind::SmoothRandom, 3, 0.4).unwrap();
        assert!((hs_sobolev_norm(&q2, 0.0) - schatten_norm(&q2, 2.0).unwrap()).abs() < 1e-12);
        // homogeneity
        let c = 0.37;
        assert!(
            (hs_sobolev_norm(&q2.scaled(c), 1.0) - c * hs_sobolev_norm(&q2, 1.0)).abs() < 1e-10
        );
    }

    #[test]
    fn relative_kinetic_rank_one() {
        let g = grid_d2();
        let above = g.mode_index(&[2, 1]).unwrap();
        let below = g.mode_index(&[1, 0]).unwrap();
        let q = particle_hole_excitation(&g, &[(above, 1.0)], &[]).unwrap();
        assert!((relative_kinetic_energy(&q) - (g.xi2(above) - g.mu())).abs() < 1e-12);
        let q = particle_hole_excitation(&g, &[], &[(below, 1.0)]).unwrap();
        assert!((relative_kinetic_energy(&q) - (g.mu() - g.xi2(below))).abs() < 1e-12);
        assert_eq!(relative_kinetic_energy(&KernelOperator::zeros(g)), 0.0);
    }

    #[test]
    fn x_alpha_low_band_reduces_to_op_norm() {
        let g = grid_d2();
        let low = grid::band_projector(&g, 2.0).unwrap();
        let q = make_perturbation(&g, PerturbationKind::SmoothRandom, 11, 0.6)
            .unwrap()
            .sandwich(&low);
        let rep = x_alpha_norm(&q, 1.0);
        assert_eq!(rep.get("hs_high"), 0.0);
        assert!((rep.get("x_alpha_total") - rep.get("op")).abs() < 1e-14);
    }

    #[test]
    fn x_norm_dominates_op() {
        let g = grid_d2();
        let q = make_perturbation(&g, PerturbationKind::SmoothRandom, 5, 0.7).unwrap();
        let rep = x_norm(&q);
        assert!(rep.get("x_total") >= rep.get("op"));
        assert!(rep.finite_and_nonnegative());
    }

    #[test]
    fn commutator_identities() {
        let g = grid_d2();
        let a = make_perturbation(&g, PerturbationKind::SmoothRandom, 1, 0.5).unwrap();
        let b = make_perturbation(&g, PerturbationKind::UnitaryConjugation, 2, 0.5).unwrap();
        let aa = commutator(&a, &a).unwrap();
        assert!(linalg::max_abs(aa.data()) < 1e-12);
        let ab = commutator(&a, &b).unwrap();
        let scale = linalg::frobenius(a.data()) * linalg::frobenius(b.data());
        assert!(ab.trace().norm() <= 1e-12 * scale.max(1.0));
    }

    #[test]
    fn constant_density_commutes() {
        let g = grid_d2();
        let pi = KernelOperator::from_mask(g.clone(), &grid::fermi_projector(&g));
        let rho = density(&pi); // constant
        let q = make_perturbation(&g, PerturbationKind::SmoothRandom, 9, 0.5).unwrap();
        let c = potential_commutator(&rho, &q).unwrap();
        assert!(linalg::max_abs(c.data()) < 1e-12);
    }

    #[test]
    fn generators_land_in_k() {
        let g = grid_d2();
        for (kind, seed) in [
            (PerturbationKind::UnitaryConjugation, 21u64),
            (PerturbationKind::ParticleHole, 22),
            (PerturbationKind::SmoothRandom, 23),
        ] {
            let q = make_perturbation(&g, kind, seed, 0.8).unwrap();
            assert!(q.hermitian());
            assert!(pauli_bounds_ok(&q, 1e-10), "{kind:?}");
            assert!(relative_kinetic_energy(&q) >= -1e-10, "{kind:?}");
            let rho = density(&q);
            let tr = q.trace().re;
            assert!((rho.integral().re - tr).abs() <= 1e-10 * tr.abs().max(1.0));
        }
        // size 0 gives the zero operator
        let q0 = make_perturbation(&g, PerturbationKind::SmoothRandom, 4, 0.0).unwrap();
        assert_eq!(linalg::max_abs(q0.data()), 0.0);
        // unitary conjugation preserves the trace
        let qu = make_perturbation(&g, PerturbationKind::UnitaryConjugation, 5, 0.9).unwrap();
        assert!(qu.trace().norm() < 1e-10);
        // particle at one mode with weight 1
        let above = g.mode_index(&[0, 2]).unwrap();
        let q1 = particle_hole_excitation(&g, &[(above, 1.0)], &[]).unwrap();
        assert!((q1.trace().re - 1.0).abs() < 1e-14);
    }

    #[test]
    fn q_squared_identity() {
        // Q^{++} − Q^{--} − Q² = γ(1−γ) ⪰ 0 for Q = γ − Π, 0 ≤ γ ≤ 1
        let g = grid_d2();
        let q = make_perturbation(&g, PerturbationKind::SmoothRandom, 31, 0.9).unwrap();
        let pi_mask = grid::fermi_projector(&g);
        let plus = pi_mask.complement();
        let qpp = q.sandwich(&plus);
        let qmm = q.sandwich(&pi_mask);
        let q2 = linalg::mul(q.data().as_ref(), q.data().as_ref());
        let lhs = linalg::sub(&linalg::sub(qpp.data(), qmm.data()), &q2);
        // compare against γ(1−γ)
        let n = g.n_modes();
        let mut gamma = q.data().clone();
        for i in 0..n {
            gamma[(i, i)] += pi_mask.values[i];
        }
        let mut one_minus = linalg::scale(&gamma, C64::new(-1.0, 0.0));
        for i in 0..n {
            one_minus[(i, i)] += 1.0;
        }
        let rhs = linalg::mul(gamma.as_ref(), one_minus.as_ref());
        assert!(linalg::max_abs(&linalg::sub(&lhs, &rhs)) < 1e-10);
        let wmin = linalg::eigvalsh(&linalg::hermitize(&lhs))[0];
        assert!(wmin >= -1e-10);
    }

    #[test]
    fn hermiticity_validation() {
        let g = grid_d2();
        let n = g.n_modes();
        let mut m = Mat::<C64>::zeros(n, n);
        m[(0, 1)] = C64::new(1.0, 0.0);
        assert!(matches!(
            KernelOperator::new(g.clone(), m, true),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn sobolev_inequality_ensemble() {
        // ‖ρ_Q‖_{L²} ≤ C ‖Q‖_{𝓗¹} with a grid-stable C
        let mut worst = [0.0f64; 2];
        for (gi, m) in [8usize, 16].into_iter().enumerate() {
            let g = build_grid(2, m, TAU, 1.05, 0.0).unwrap();
            for seed in 0..100u64 {
                let kind = match seed % 3 {
                    0 => PerturbationKind::UnitaryConjugation,
                    1 => PerturbationKind::ParticleHole,
                    _ => PerturbationKind::SmoothRandom,
                };
                let q = make_perturbation(&g, kind, 1000 + seed, 0.7).unwrap();
                let l2 = density(&q).l2_norm();
                let h1 = hs_sobolev_norm(&q, 1.0);
                if h1 > 0.0 {
                    worst[gi] = worst[gi].max(l2 / h1);
                }
            }
        }
        assert!(worst[0] > 0.0 && worst[1] > 0.0);
        let spread = worst[1] / worst[0];
        assert!(
            spread < 2.0 && spread > 0.5,
            "empirical Sobolev constant unstable across grids: {worst:?}"
        );
    }
}
