//! Conditional state update after photon counting.
//!
//! The probe leaves the ensemble carrying a J_z-dependent phase and damping,
//! interferes with a reference beam χ e^{iφ_p} on a balanced beam splitter,
//! and both output ports are counted. Conditioned on the record (n_c, n_d)
//! the ensemble experiences an entrywise update
//!   ρ'_{m,m'} ∝ D(m) ℒ(m, m') ρ_{m,m'} D(m')^*,
//! where ℒ is the dephasing-source resummation and D(m) the detection
//! amplitude for spin projection m. All factors are handled in log space so
//! that deep-tail records degrade into a reported underflow rather than NaNs.

use ndarray as nd;
use num_complex::Complex64 as C64;

use crate::num::{f_function, ln_factorial, HalfInt};
use crate::spin::{m_values, AtomState, DickeBasis, DickeIndex};
use crate::{QndError, Result};

const LN_UNDERFLOW: f64 = -690.7755278982137; // ln(1e-300)

/// Interferometer and noise parameters of one detection step.
#[derive(Clone, Copy, Debug)]
pub struct MeasurementParams {
    /// Probe amplitude α entering the ensemble.
    pub alpha: C64,
    /// Reference-arm amplitude χ.
    pub chi: C64,
    /// Collective dephasing strength R.
    pub decay_rate: f64,
    /// Scaled interaction time τ.
    pub tau: f64,
    /// Extra phase φ_p applied to the reference arm.
    pub phi_p: f64,
}

impl MeasurementParams {
    pub fn new(alpha: C64, chi: C64, decay_rate: f64, tau: f64) -> Result<Self> {
        Self::with_phi_p(alpha, chi, decay_rate, tau, 0.0)
    }

    pub fn with_phi_p(alpha: C64, chi: C64, decay_rate: f64, tau: f64, phi_p: f64) -> Result<Self> {
        if !(decay_rate >= 0.0) || !decay_rate.is_finite() {
            return Err(QndError::InvalidInput(format!(
                "decay rate must be finite and nonnegative, got {decay_rate}"
            )));
        }
        if !(tau >= 0.0) || !tau.is_finite() {
            return Err(QndError::InvalidInput(format!(
                "tau must be finite and nonnegative, got {tau}"
            )));
        }
        if !alpha.is_finite() || !chi.is_finite() || !phi_p.is_finite() {
            return Err(QndError::InvalidInput("amplitudes must be finite".into()));
        }
        if alpha.norm() + chi.norm() == 0.0 {
            return Err(QndError::InvalidInput(
                "need a nonzero probe or reference amplitude".into(),
            ));
        }
        Ok(MeasurementParams {
            alpha,
            chi,
            decay_rate,
            tau,
            phi_p,
        })
    }

    /// Imbalance angle: tan η = (|χ| - |α|)/(|χ| + |α|), η ∈ (-π/4, π/4].
    pub fn eta(&self) -> f64 {
        ((self.chi.norm() - self.alpha.norm()) / (self.chi.norm() + self.alpha.norm())).atan()
    }

    /// Relative phase arg χ - arg α.
    pub fn phi_chi_alpha(&self) -> f64 {
        self.chi.arg() - self.alpha.arg()
    }

    /// Total mean input photon number |α|² + |χ|².
    pub fn total_intensity(&self) -> f64 {
        self.alpha.norm_sqr() + self.chi.norm_sqr()
    }

    /// Accumulated probe phase θ(m) = τ(m - iR m²/2); complex for R > 0.
    pub fn theta_m(&self, m: f64) -> C64 {
        C64::new(self.tau * m, -0.5 * self.decay_rate * m * m * self.tau)
    }

    /// Interferometer phase φ(m) = θ(m)/2 + φ_χα/2 + π/4 + φ_p/2.
    pub fn phi_m(&self, m: f64) -> C64 {
        0.5 * self.theta_m(m)
            + C64::new(
                0.5 * self.phi_chi_alpha() + std::f64::consts::FRAC_PI_4 + 0.5 * self.phi_p,
                0.0,
            )
    }
}

/// One photocount record: n_c clicks on the bright port, n_d on the dark port.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DetectionRecord {
    pub nc: u32,
    pub nd: u32,
}

impl DetectionRecord {
    pub fn new(nc: u32, nd: u32) -> Self {
        DetectionRecord { nc, nd }
    }

    /// Total count coordinate u = (n_c + n_d)/2.
    pub fn u(&self) -> f64 {
        0.5 * (f64::from(self.nc) + f64::from(self.nd))
    }

    /// Imbalance coordinate v = (n_d - n_c)/2.
    pub fn v(&self) -> f64 {
        0.5 * (f64::from(self.nd) - f64::from(self.nc))
    }
}

/// log D(m) for a continuous spin coordinate m: real part is ln |D|, the
/// imaginary part its phase (not reduced mod 2π).
///
/// The spectral pieces prefactor × e^{i(n_c+n_d)(φ(m)-θ(m))} × A × e^{i n_c φ_c}
/// × e^{i n_d (φ_d - π/2)} are grouped into integer powers of
/// g_c = cos η cos φ(m) + i sin η sin φ(m) and
/// g_d = cos η sin φ(m) - i sin η cos φ(m),
/// whose principal logs are safe because e^{n Log g} = g^n exactly. A global
/// e^{i(n_c+n_d) arg α} (an overall phase per detected photon) is kept so the
/// operator equals the beam-splitter product form identically.
pub fn detection_entry_log(p: &MeasurementParams, rec: DetectionRecord, m: f64) -> C64 {
    let nbar = p.total_intensity();
    let eta = p.eta();
    let phi = p.phi_m(m);
    let theta = p.theta_m(m);
    let ncf = f64::from(rec.nc);
    let ndf = f64::from(rec.nd);
    let total = ncf + ndf;

    let mut log = C64::new(
        -0.5 * nbar + 0.5 * total * nbar.ln() - 0.5 * (ln_factorial(rec.nc) + ln_factorial(rec.nd)),
        total * p.alpha.arg(),
    );
    log += C64::new(0.0, 1.0) * total * (phi - theta);
    if rec.nc > 0 {
        let gc = eta.cos() * phi.cos() + C64::new(0.0, 1.0) * eta.sin() * phi.sin();
        log += ncf * gc.ln();
    }
    if rec.nd > 0 {
        let gd = eta.cos() * phi.sin() - C64::new(0.0, 1.0) * eta.sin() * phi.cos();
        log += ndf * gd.ln();
    }
    log
}

/// Diagonal of the detection operator over the given m labels, exponentiated.
/// Deep-tail records underflow to 0 here; use [`apply_povm`] for normalized
/// conditional updates.
pub fn detection_operator_diag(
    rec: DetectionRecord,
    p: &MeasurementParams,
    ms: &[HalfInt],
) -> Vec<C64> {
    ms.iter()
        .map(|m| detection_entry_log(p, rec, m.to_f64()).exp())
        .collect()
}

/// The amplitude profile A(n_c, n_d, m) =
/// (1 + cos 2η cos 2φ(m))^{n_c/2} (1 - cos 2η cos 2φ(m))^{n_d/2} / sqrt(n_c! n_d!)
/// with the principal branch of each half power; φ(m) is complex for R > 0.
pub fn detection_amplitude(p: &MeasurementParams, rec: DetectionRecord, m: f64) -> C64 {
    let c2e = (2.0 * p.eta()).cos();
    let c2phi = (2.0 * p.phi_m(m)).cos();
    let mut log = C64::new(-0.5 * (ln_factorial(rec.nc) + ln_factorial(rec.nd)), 0.0);
    if rec.nc > 0 {
        log += 0.5 * f64::from(rec.nc) * (C64::new(1.0, 0.0) + c2e * c2phi).ln();
    }
    if rec.nd > 0 {
        log += 0.5 * f64::from(rec.nd) * (C64::new(1.0, 0.0) - c2e * c2phi).ln();
    }
    log.exp()
}

/// log of the dephasing-source multiplier on entry (m, m'):
/// R τ |α|² m m' f(x), x = iτ[(m' - m) + iR(m² + m'²)/2]. Its diagonal
/// e^{|α|²(1 - e^{-Rτm²})} ≥ 1 balances the detection-probability loss so the
/// record set stays complete.
pub fn state_prep_entry_log(p: &MeasurementParams, m: f64, mp: f64) -> C64 {
    let r = p.decay_rate;
    let alpha_sq = p.alpha.norm_sqr();
    let x = C64::new(
        -0.5 * r * (m * m + mp * mp) * p.tau,
        (mp - m) * p.tau,
    );
    r * alpha_sq * m * mp * p.tau * f_function(x)
}

/// Applies the dephasing-source resummation ℒ to every populated sector.
/// At R = 0 the input is returned unchanged (the multiplier is exactly 1).
pub fn state_prep_superoperator(rho: &AtomState, p: &MeasurementParams) -> Result<AtomState> {
    let mut out = AtomState::new(rho.n_atoms())?;
    for (j, block) in rho.sectors() {
        let ms: Vec<f64> = m_values(j).iter().map(|m| m.to_f64()).collect();
        let mut b = block.clone();
        for (i, &m) in ms.iter().enumerate() {
            for (k, &mp) in ms.iter().enumerate() {
                b[[i, k]] *= state_prep_entry_log(p, m, mp).exp();
            }
        }
        out.insert_sector(j, b)?;
    }
    Ok(out)
}

/// Conditional state update: returns the normalized post-measurement state
/// and the record probability P(n_c, n_d). Fails with
/// [`QndError::UnderflowOutcome`] when ln P < ln(1e-300).
pub fn apply_povm(
    rho: &AtomState,
    rec: DetectionRecord,
    p: &MeasurementParams,
) -> Result<(AtomState, f64)> {
    let (state, prob, _) = conditional_update(rho, rec, p)?;
    Ok((state, prob))
}

/// Diagonal of the conditional state (the m_z outcome density) together with
/// the record probability.
pub fn conditional_probability_density(
    rho: &AtomState,
    rec: DetectionRecord,
    p: &MeasurementParams,
) -> Result<(Vec<(DickeIndex, f64)>, f64)> {
    let (state, prob, _) = conditional_update(rho, rec, p)?;
    Ok((state.diagonal(), prob))
}

/// Shared worker: entrywise exponents ζ(m,m') = ln ℒ + ln D(m) + ln D(m')^*,
/// normalized with the largest diagonal exponent factored out.
fn conditional_update(
    rho: &AtomState,
    rec: DetectionRecord,
    p: &MeasurementParams,
) -> Result<(AtomState, f64, f64)> {
    if (rho.trace() - 1.0).abs() > 1e-9 {
        return Err(QndError::InvalidInput(format!(
            "input state must have unit trace, got {}",
            rho.trace()
        )));
    }
    // Pass 1: diagonal exponents and populations for the normalization.
    let mut k_shift = f64::NEG_INFINITY;
    let mut diag: Vec<(HalfInt, Vec<f64>, Vec<f64>)> = Vec::new();
    for (j, block) in rho.sectors() {
        let ms: Vec<f64> = m_values(j).iter().map(|m| m.to_f64()).collect();
        let mut exps = Vec::with_capacity(ms.len());
        let mut pops = Vec::with_capacity(ms.len());
        for (i, &m) in ms.iter().enumerate() {
            let zeta = state_prep_entry_log(p, m, m).re
                + 2.0 * detection_entry_log(p, rec, m).re;
            let pop = block[[i, i]].re;
            if pop > 0.0 && zeta > k_shift {
                k_shift = zeta;
            }
            exps.push(zeta);
            pops.push(pop);
        }
        diag.push((j, exps, pops));
    }
    if !k_shift.is_finite() {
        return Err(QndError::UnderflowOutcome(
            "no populated level responds to this record".into(),
        ));
    }
    let mut p_scaled = 0.0;
    for (_, exps, pops) in &diag {
        for (e, w) in exps.iter().zip(pops) {
            p_scaled += w.max(0.0) * (e - k_shift).exp();
        }
    }
    let ln_prob = k_shift + p_scaled.ln();
    if ln_prob < LN_UNDERFLOW {
        return Err(QndError::UnderflowOutcome(format!(
            "ln P = {ln_prob:.1} is below the double-precision floor"
        )));
    }

    // Pass 2: full entrywise update, shifted by the same k.
    let mut out = AtomState::new(rho.n_atoms())?;
    for (j, block) in rho.sectors() {
        let ms: Vec<f64> = m_values(j).iter().map(|m| m.to_f64()).collect();
        let d = ms.len();
        let logd: Vec<C64> = ms
            .iter()
            .map(|&m| detection_entry_log(p, rec, m))
            .collect();
        let mut b = nd::Array2::<C64>::zeros((d, d));
        for i in 0..d {
            for k in 0..d {
                let zeta = state_prep_entry_log(p, ms[i], ms[k]) + logd[i] + logd[k].conj();
                b[[i, k]] = block[[i, k]] * (zeta - k_shift).exp() / p_scaled;
            }
        }
        out.insert_sector(j, b)?;
    }
    Ok((out, ln_prob.exp(), ln_prob))
}

/// Gaussian summary of a record: peak locations with and without noise,
/// widths, and the complex envelope.
#[derive(Clone, Copy, Debug)]
pub struct GaussianSummary {
    /// Noise-free stationary point m₀ of the detector response.
    pub m0: f64,
    /// Damped peak coordinate ξ.
    pub xi: f64,
    /// Peak of the noisy response after combining with the R-broadening.
    pub m_tilde0: f64,
    /// Detector-response variance σ²; the approximation is only meaningful
    /// when this is positive.
    pub sigma_sq: f64,
    /// Noise-broadening variance σ_R² = 2/((n_c+n_d) R τ); infinite at R = 0.
    pub sigma_r_sq: f64,
    /// Combined complex variance σ̃².
    pub sigma_tilde_sq: C64,
    /// Gaussian-product mixing ratio y = τC/(4 R n_c n_d); infinite at R = 0.
    pub y: f64,
    /// Peak amplitude factor of the noisy response.
    pub envelope: C64,
    /// False when σ² ≤ 0, i.e. the record is outside the Gaussian regime.
    pub approximation_valid: bool,
}

/// Gaussian summary for an integer record.
pub fn gaussian_summary(rec: DetectionRecord, p: &MeasurementParams) -> Result<GaussianSummary> {
    if rec.nc < 1 || rec.nd < 1 {
        return Err(QndError::InvalidInput(
            "summary needs at least one count in each port".into(),
        ));
    }
    gaussian_summary_counts(f64::from(rec.nc), f64::from(rec.nd), p)
}

/// Gaussian summary with continuous counts (used by the projective limit).
pub fn gaussian_summary_counts(
    nc: f64,
    nd: f64,
    p: &MeasurementParams,
) -> Result<GaussianSummary> {
    if !(p.tau > 0.0) {
        return Err(QndError::InvalidInput("summary needs τ > 0".into()));
    }
    if !(nc > 0.0) || !(nd > 0.0) {
        return Err(QndError::InvalidInput(
            "summary needs positive counts on both ports".into(),
        ));
    }
    let r = p.decay_rate;
    let cos2eta = (2.0 * p.eta()).cos();
    let asin_arg = (nd - nc) / ((nd + nc) * cos2eta);
    if !(asin_arg.abs() <= 1.0) {
        return Err(QndError::NoPeak(format!(
            "arcsine argument {asin_arg:.4} outside [-1, 1]"
        )));
    }
    let m0 = (asin_arg.asin() - p.phi_chi_alpha() - p.phi_p) / p.tau;
    // ξ = (1+4R²m₀²)^{1/4} sin(arctan(2Rm₀)/2)/R in the branch-free closed
    // form ξ = m₀ sqrt(2/(1 + sqrt(1+4R²m₀²))), exact at R = 0.
    let s = (1.0 + 4.0 * r * r * m0 * m0).sqrt();
    let xi = m0 * (2.0 / (1.0 + s)).sqrt();

    let total = nc + nd;
    let big_c = total * total * cos2eta * cos2eta - (nc - nd) * (nc - nd);
    let sigma_sq = 8.0 * nc * nd / (p.tau * p.tau * total * big_c);
    let approximation_valid = sigma_sq > 0.0;
    let sigma_r_sq = 2.0 / (total * r * p.tau);
    let one_m = (C64::new(1.0, 0.0) - C64::new(0.0, r * xi)).powi(2);
    // σ̃² = [(n_c+n_d)τ/2]^{-1} [R + τ(1-iRξ)² C/(4 n_c n_d)]^{-1}; this
    // product form needs no special casing at R = 0.
    let sigma_tilde_sq =
        1.0 / (0.5 * total * p.tau) / (r + p.tau * one_m * big_c / (4.0 * nc * nd));
    let y = p.tau * big_c / (4.0 * r * nc * nd);
    let m_tilde0 = if r == 0.0 {
        xi
    } else {
        let n = 1.0 + y * (1.0 - r * r * xi * xi);
        xi * (1.0 - n / (n * n + 4.0 * y * y * r * r * xi * xi))
    };
    // Envelope e^{-(1-iRξ)²ξ²/(2[σ_R²(1-iRξ)²+σ²])}, rewritten with
    // q = 1/σ_R² so that R = 0 gives exactly 1.
    let q = 0.5 * total * r * p.tau;
    let envelope = (-(xi * xi) * one_m * q / (2.0 * (one_m + sigma_sq * q))).exp();
    Ok(GaussianSummary {
        m0,
        xi,
        m_tilde0,
        sigma_sq,
        sigma_r_sq,
        sigma_tilde_sq,
        y,
        envelope,
        approximation_valid,
    })
}

/// Gaussian approximation of the amplitude profile:
/// (2/(n_c+n_d))^{(n_c+n_d)/2} e^{(n_c+n_d)/2} (4π² n_c n_d)^{-1/4}
/// × e^{-(1-iRξ)²(m-ξ)²/(2σ²)}.
pub fn detection_amplitude_gaussian(
    p: &MeasurementParams,
    rec: DetectionRecord,
    m: f64,
) -> Result<C64> {
    let s = gaussian_summary(rec, p)?;
    if !s.approximation_valid {
        return Err(QndError::ApproximationInvalid(
            "record lies outside the Gaussian regime (σ² ≤ 0)".into(),
        ));
    }
    let total = f64::from(rec.nc) + f64::from(rec.nd);
    let ln_pre = 0.5 * total * ((2.0 / total).ln() + 1.0)
        - 0.25
            * (4.0 * std::f64::consts::PI.powi(2) * f64::from(rec.nc) * f64::from(rec.nd)).ln();
    let one_m = (C64::new(1.0, 0.0) - C64::new(0.0, p.decay_rate * s.xi)).powi(2);
    let dm = m - s.xi;
    Ok((C64::new(ln_pre, 0.0) - one_m * dm * dm / (2.0 * s.sigma_sq)).exp())
}

/// Projective limit of a (possibly fractional) record written in the
/// coordinates u = (n_c+n_d)/2, v = (n_d-n_c)/2.
pub struct Projection {
    /// Nearest grid point to m̃₀ on the m lattice of the basis (ties toward 0).
    pub m0_rounded: HalfInt,
    /// Sectors J ≥ |m̃₀| that survive the projection onto |J, m̃₀⟩⟨J, m̃₀|.
    pub support: Vec<DickeIndex>,
    /// Complex prefactor of the projective operator.
    pub amplitude: C64,
    /// The Gaussian summary behind the projection.
    pub summary: GaussianSummary,
    /// First-derivative phase coefficients at m̃₀ entering the pre-projective
    /// operator: ζ_c, ζ_d, ζ_+ = 1 - ζ_d - ζ_c, ζ_- = ζ_d - ζ_c.
    pub zeta_c: C64,
    pub zeta_d: C64,
    pub zeta_plus: C64,
    pub zeta_minus: C64,
}

/// Large-count projective measurement: for u = (n_c+n_d)/2 photons with
/// imbalance v the conditional state collapses onto the m̃₀ column of every
/// sector that contains it, with a complex Gaussian weight in (u, v).
pub fn projection_measurement(
    u: f64,
    v: f64,
    p: &MeasurementParams,
    basis: &DickeBasis,
) -> Result<Projection> {
    if !(u > 0.0) || !u.is_finite() || !v.is_finite() || v.abs() > u {
        return Err(QndError::InvalidInput(format!(
            "need finite u > 0 and |v| ≤ u, got u={u}, v={v}"
        )));
    }
    let (nc, nd) = (u - v, u + v);
    let summary = gaussian_summary_counts(nc.max(1e-12), nd.max(1e-12), p)?;
    let mt0 = summary.m_tilde0;

    // Round to the m lattice (integers for even N, half-odd for odd N),
    // ties toward zero.
    let parity = (basis.n_atoms % 2) as f64 * 0.5;
    let shifted = mt0 - parity;
    let k = if (shifted - shifted.trunc()).abs() == 0.5 {
        shifted.trunc()
    } else {
        shifted.round()
    };
    let m0_rounded = HalfInt::from_twice((2.0 * k + 2.0 * parity).round() as i32);

    let support: Vec<DickeIndex> = basis
        .sectors
        .iter()
        .filter(|&&j| j >= m0_rounded.abs())
        .map(|&j| DickeIndex { j, m: m0_rounded })
        .collect();
    if support.is_empty() {
        return Err(QndError::NoPeak(format!(
            "peak m̃₀ = {mt0:.3} lies outside the spectrum of {} atoms",
            basis.n_atoms
        )));
    }

    let i = C64::new(0.0, 1.0);
    let eta = p.eta();
    let phi0 = p.phi_m(mt0);
    let tan_eta = C64::new(eta.tan(), 0.0);
    let tan_phi0 = phi0.tan();
    let one_mr = C64::new(1.0, -p.decay_rate * mt0);
    let cos_phi0_sq = phi0.cos() * phi0.cos();
    let phi_c0 = (tan_eta * tan_phi0).atan();
    // ζ coefficients from the first derivative of the port phases at m̃₀.
    let (phi_d0, zeta_c, zeta_d);
    if eta == 0.0 {
        // Balanced beams: the dark-port phase saturates at ±π/2 and its
        // m-derivative vanishes; dividing by tan η = 0 would produce NaNs.
        phi_d0 = C64::new(std::f64::consts::FRAC_PI_2.copysign(tan_phi0.re), 0.0);
        zeta_c = C64::new(0.0, 0.0);
        zeta_d = C64::new(0.0, 0.0);
    } else {
        phi_d0 = (tan_phi0 / tan_eta).atan();
        zeta_c = 0.5 * (tan_eta / cos_phi0_sq) * one_mr
            / (C64::new(1.0, 0.0) + tan_eta * tan_eta * tan_phi0 * tan_phi0);
        zeta_d = 0.5 * (tan_eta / cos_phi0_sq) * one_mr
            / (tan_phi0 * tan_phi0 + tan_eta * tan_eta);
    }
    let zeta_plus = C64::new(1.0, 0.0) - zeta_d - zeta_c;
    let zeta_minus = zeta_d - zeta_c;

    let nbar = p.total_intensity();
    let one_m = (C64::new(1.0, 0.0) - i * p.decay_rate * summary.xi).powi(2);
    let sigma_c_sq = C64::new(p.decay_rate * p.tau * u * (u * u - v * v), 0.0)
        + u * (u * u * eta.cos().powi(2) - v * v) * p.tau * p.tau * one_m;
    let du = u - 0.5 * nbar;
    let amplitude = (i * v * (phi_d0 - phi_c0 - C64::new(std::f64::consts::FRAC_PI_2, 0.0))
        - 0.25 * (4.0 * std::f64::consts::PI * sigma_c_sq).ln()
        + C64::new(-du * du / nbar, 0.0)
        + i * u
            * (phi_d0 + phi_c0 + C64::new(p.phi_chi_alpha() + p.phi_p - p.tau * mt0, 0.0)))
    .exp()
        * summary.envelope;

    Ok(Projection {
        m0_rounded,
        support,
        amplitude,
        summary,
        zeta_c,
        zeta_d,
        zeta_plus,
        zeta_minus,
    })
}

/// Largest deviation of Σ_{n_c, n_d ≤ cutoff} ℒ_diag(m) |D(m)|² from 1 over
/// the supplied m labels: the completeness defect of the truncated record set.
pub fn completeness_check(p: &MeasurementParams, ms: &[HalfInt], cutoff: u32) -> Result<f64> {
    let needed = 4.0 * p.total_intensity();
    if (f64::from(cutoff)) < needed {
        return Err(QndError::InvalidInput(format!(
            "cutoff {cutoff} below the required 4(|α|²+|χ|²) = {needed:.1}"
        )));
    }
    let mut worst = 0.0f64;
    for m in ms {
        let mf = m.to_f64();
        let ln_amp = state_prep_entry_log(p, mf, mf).re;
        let mut total = 0.0;
        for nc in 0..=cutoff {
            for nd in 0..=cutoff {
                let ln_d = detection_entry_log(p, DetectionRecord::new(nc, nd), mf);
                total += (2.0 * ln_d.re + ln_amp).exp();
            }
        }
        worst = worst.max((total - 1.0).abs());
    }
    Ok(worst)
}
