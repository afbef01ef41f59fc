//! Closed-form dynamics of the dispersively coupled atom-probe system with
//! collective dephasing of strength R, in scaled time τ.
//!
//! In each J sector the joint state keeps the ansatz form
//! ρ(τ) = Σ_{m,m'} ρ_{m,m'}(τ) |J,m⟩⟨J,m'| ⊗ |α_m(τ)⟩⟨α_{m'}(τ)|
//! with coherent labels α_m(τ) = α₀ e^{-imτ - R m²τ/2} and matrix elements
//! ρ_{m,m'}(τ) = ρ_{m,m'}(0) exp[ |α₀|²/2 (e^{-Rm²τ} + e^{-Rm'²τ} - 2)
//!                               + R|α₀|² m m' τ f(τ x') ],
//! x' = i(m'-m) - R(m²+m'²)/2, f(x) = (e^x-1)/x.

use std::collections::BTreeMap;

use ndarray as nd;
use num_complex::Complex64 as C64;

use crate::num::{f_function, HalfInt};
use crate::spin::{m_values, AtomState, BlockOperator};
use crate::{QndError, Result};

/// Coherent label α_m(τ) = α₀ e^{-imτ - R m² τ/2}.
pub fn photon_amplitude(alpha0: C64, m: HalfInt, decay_rate: f64, tau: f64) -> C64 {
    let mf = m.to_f64();
    alpha0 * C64::new(-0.5 * decay_rate * mf * mf * tau, -mf * tau).exp()
}

struct HybridSector {
    rho0: nd::Array2<C64>,
    /// log of the multiplier on ρ_{m,m'}(0); entry (i, k) pairs m_i with m_k.
    log_factor: nd::Array2<C64>,
}

/// The evolved joint state, stored as initial matrix elements plus the log of
/// their closed-form multipliers, so late-time coherences underflow gracefully
/// instead of losing precision.
pub struct HybridState {
    alpha0: C64,
    decay_rate: f64,
    tau: f64,
    n_atoms: u32,
    sectors: BTreeMap<HalfInt, HybridSector>,
}

/// exponent of the matrix-element multiplier, without the initial value:
/// |α₀|²/2 (e^{-Rm²τ} + e^{-Rm'²τ} - 2) + R|α₀|² m m' τ f(τx').
fn element_log_factor(alpha_sq: f64, r: f64, tau: f64, m: f64, mp: f64) -> C64 {
    let em = (-r * m * m * tau).exp();
    let emp = (-r * mp * mp * tau).exp();
    let x = C64::new(-0.5 * r * (m * m + mp * mp) * tau, (mp - m) * tau);
    C64::new(0.5 * alpha_sq * (em + emp - 2.0), 0.0)
        + r * alpha_sq * m * mp * tau * f_function(x)
}

/// log of the coherent-label overlap ⟨α_{m'}(τ)|α_m(τ)⟩ =
/// exp(-|α_m|²/2 - |α_{m'}|²/2 + α_{m'}^* α_m); all three pieces reduce to
/// |α₀|² times functions of (m, m', τ) only.
fn overlap_log(alpha_sq: f64, r: f64, tau: f64, m: f64, mp: f64) -> C64 {
    let em = (-r * m * m * tau).exp();
    let emp = (-r * mp * mp * tau).exp();
    let x = C64::new(-0.5 * r * (m * m + mp * mp) * tau, (mp - m) * tau);
    alpha_sq * (x.exp() - 0.5 * (em + emp))
}

/// Evolves an initial atomic state (probe starts in |α₀⟩) for scaled time τ.
pub fn evolve_closed_form(
    rho0: &AtomState,
    alpha0: C64,
    decay_rate: f64,
    tau: f64,
) -> Result<HybridState> {
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
    let alpha_sq = alpha0.norm_sqr();
    let mut sectors = BTreeMap::new();
    for (j, block) in rho0.sectors() {
        let ms: Vec<f64> = m_values(j).iter().map(|m| m.to_f64()).collect();
        let d = ms.len();
        let mut log_factor = nd::Array2::<C64>::zeros((d, d));
        for (i, &m) in ms.iter().enumerate() {
            for (k, &mp) in ms.iter().enumerate() {
                log_factor[[i, k]] = element_log_factor(alpha_sq, decay_rate, tau, m, mp);
            }
        }
        sectors.insert(
            j,
            HybridSector {
                rho0: block.clone(),
                log_factor,
            },
        );
    }
    Ok(HybridState {
        alpha0,
        decay_rate,
        tau,
        n_atoms: rho0.n_atoms(),
        sectors,
    })
}

impl HybridState {
    pub fn alpha0(&self) -> C64 {
        self.alpha0
    }

    pub fn decay_rate(&self) -> f64 {
        self.decay_rate
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn n_atoms(&self) -> u32 {
        self.n_atoms
    }

    pub fn sector_js(&self) -> impl Iterator<Item = HalfInt> + '_ {
        self.sectors.keys().copied()
    }

    /// Evolved matrix elements ρ_{m,m'}(τ) of one sector.
    pub fn coefficients(&self, j: HalfInt) -> Option<nd::Array2<C64>> {
        let sec = self.sectors.get(&j)?;
        let mut out = sec.rho0.clone();
        nd::Zip::from(&mut out)
            .and(&sec.log_factor)
            .for_each(|r, &lf| *r *= lf.exp());
        Some(out)
    }

    /// Coherent label attached to |J, m⟩ at the current τ.
    pub fn alpha_label(&self, m: HalfInt) -> C64 {
        photon_amplitude(self.alpha0, m, self.decay_rate, self.tau)
    }
}

/// Traces out the probe: entry (m, m') picks up the coherent-label overlap
/// ⟨α_{m'}|α_m⟩ on top of the evolved matrix element. Diagonals are exactly
/// the initial populations.
pub fn reduce_atoms(h: &HybridState) -> Result<AtomState> {
    let alpha_sq = h.alpha0.norm_sqr();
    let mut out = AtomState::new(h.n_atoms)?;
    for (&j, sec) in &h.sectors {
        let ms: Vec<f64> = m_values(j).iter().map(|m| m.to_f64()).collect();
        let mut block = sec.rho0.clone();
        for (i, &m) in ms.iter().enumerate() {
            for (k, &mp) in ms.iter().enumerate() {
                let log_total = sec.log_factor[[i, k]]
                    + overlap_log(alpha_sq, h.decay_rate, h.tau, m, mp);
                block[[i, k]] *= log_total.exp();
            }
        }
        out.insert_sector(j, block)?;
    }
    Ok(out)
}

/// One coherent component of the reduced probe state.
#[derive(Clone, Copy, Debug)]
pub struct LightComponent {
    pub weight: f64,
    pub amplitude: C64,
}

/// Reduced probe state: a classical mixture Σ_m w_m |α_m⟩⟨α_m| keyed by the
/// (sector-merged) spin projection m.
#[derive(Clone, Debug)]
pub struct LightState {
    pub components: Vec<LightComponent>,
    /// True when the input had non-unit trace and the weights were rescaled.
    pub renormalized: bool,
}

impl LightState {
    /// ⟨n⟩ = Σ w_m |α_m|².
    pub fn mean_photon_number(&self) -> f64 {
        self.components
            .iter()
            .map(|c| c.weight * c.amplitude.norm_sqr())
            .sum()
    }

    /// Var(n) = Σ w_m (|α_m|⁴ + |α_m|²) - ⟨n⟩².
    pub fn photon_number_variance(&self) -> f64 {
        let mean = self.mean_photon_number();
        let second: f64 = self
            .components
            .iter()
            .map(|c| {
                let n = c.amplitude.norm_sqr();
                c.weight * (n * n + n)
            })
            .sum();
        second - mean * mean
    }
}

/// Traces out the atoms. Atomic coherences never reach the probe: the result
/// is the mixture of coherent labels weighted by the conserved populations,
/// merged across sectors by m.
pub fn reduce_light(h: &HybridState) -> Result<LightState> {
    let mut weights: BTreeMap<HalfInt, f64> = BTreeMap::new();
    for (&j, sec) in &h.sectors {
        for (i, m) in m_values(j).into_iter().enumerate() {
            let w = sec.rho0[[i, i]].re;
            if w < -1e-9 {
                return Err(QndError::InvalidInput(format!(
                    "negative population {w:.3e} at (J={j}, m={m})"
                )));
            }
            *weights.entry(m).or_insert(0.0) += w.max(0.0);
        }
    }
    let total: f64 = weights.values().sum();
    if total <= 0.0 {
        return Err(QndError::InvalidInput("state has no population".into()));
    }
    let renormalized = (total - 1.0).abs() > 1e-9;
    let components = weights
        .into_iter()
        .map(|(m, w)| LightComponent {
            weight: w / total,
            amplitude: h.alpha_label(m),
        })
        .collect();
    Ok(LightState {
        components,
        renormalized,
    })
}

/// Tr(ρ O) for a block-diagonal observable; every populated sector of the
/// state must have a matching block.
pub fn observable_mean(state: &AtomState, op: &BlockOperator) -> Result<f64> {
    let mut mean = 0.0;
    for (j, block) in state.sectors() {
        let o = op.block(j).ok_or_else(|| {
            QndError::DimensionMismatch(format!("observable has no block for J={j}"))
        })?;
        if o.nrows() != block.nrows() {
            return Err(QndError::DimensionMismatch(format!(
                "observable block J={j} is {}x{}, state block is {}x{}",
                o.nrows(),
                o.ncols(),
                block.nrows(),
                block.ncols()
            )));
        }
        for i in 0..block.nrows() {
            for k in 0..block.ncols() {
                mean += (block[[i, k]] * o[[k, i]]).re;
            }
        }
    }
    Ok(mean)
}

/// Tr(ρ O²) - Tr(ρ O)².
pub fn observable_variance(state: &AtomState, op: &BlockOperator) -> Result<f64> {
    let mean = observable_mean(state, op)?;
    let mut second = 0.0;
    for (j, block) in state.sectors() {
        let o = op.block(j).ok_or_else(|| {
            QndError::DimensionMismatch(format!("observable has no block for J={j}"))
        })?;
        let o2 = o.dot(o);
        for i in 0..block.nrows() {
            for k in 0..block.ncols() {
                second += (block[[i, k]] * o2[[k, i]]).re;
            }
        }
    }
    Ok(second - mean * mean)
}

/// Binomial-average closed form for the mean photon number leaving a spin
/// coherent input at polar angle θ (large-J saddle point):
/// |α₀|² (1+JRτ sin²θ)^{-1/2} exp(-J²Rτ cos²θ/(1+JRτ sin²θ)).
pub fn analytic_photon_mean(alpha0: C64, j: HalfInt, decay_rate: f64, tau: f64, theta: f64) -> f64 {
    let a2 = alpha0.norm_sqr();
    let jf = j.to_f64();
    let s2 = theta.sin().powi(2);
    let c2 = theta.cos().powi(2);
    let g = 1.0 + jf * decay_rate * tau * s2;
    a2 / g.sqrt() * (-jf * jf * decay_rate * tau * c2 / g).exp()
}

/// Matching closed form for the photon-number variance.
pub fn analytic_photon_variance(
    alpha0: C64,
    j: HalfInt,
    decay_rate: f64,
    tau: f64,
    theta: f64,
) -> f64 {
    let a2 = alpha0.norm_sqr();
    let jf = j.to_f64();
    let s2 = theta.sin().powi(2);
    let c2 = theta.cos().powi(2);
    let g1 = 1.0 + jf * decay_rate * tau * s2;
    let g2 = 1.0 + 2.0 * jf * decay_rate * tau * s2;
    let mean = analytic_photon_mean(alpha0, j, decay_rate, tau, theta);
    a2 * a2 / g2.sqrt() * (-2.0 * jf * jf * decay_rate * tau * c2 / g2).exp()
        - a2 * a2 / g1 * (-2.0 * jf * jf * decay_rate * tau * c2 / g1).exp()
        + mean
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::gauss_legendre;
    use crate::spin::{spin_coherent_state, thermal_state};
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn h(t: i32) -> HalfInt {
        HalfInt::from_twice(t)
    }

    const PI: f64 = std::f64::consts::PI;

    #[test]
    fn photon_amplitude_values() {
        let a0 = C64::new(2.0, 0.0);
        // R=0: pure rotation.
        let a = photon_amplitude(a0, h(2), 0.0, PI / 2.0);
        assert_relative_eq!(a.re, 2.0 * (PI / 2.0).cos(), epsilon = 1e-15);
        assert_relative_eq!(a.im, -2.0, max_relative = 1e-15);
        // m=0 never moves.
        assert_eq!(photon_amplitude(a0, h(0), 0.7, 3.0), a0);
        // Damping |α_m| = |α₀| e^{-R m² τ/2}.
        let a = photon_amplitude(a0, h(4), 0.5, 1.0);
        assert_relative_eq!(a.norm(), 2.0 * (-1.0f64).exp(), max_relative = 1e-14);
    }

    #[test]
    fn evolution_at_tau_zero_is_identity() {
        let st = spin_coherent_state(h(4), 1.0, 0.5).unwrap();
        let ev = evolve_closed_form(&st, C64::new(2.0, 0.0), 0.3, 0.0).unwrap();
        let coeff = ev.coefficients(h(4)).unwrap();
        let orig = st.sector(h(4)).unwrap();
        for i in 0..coeff.nrows() {
            for k in 0..coeff.ncols() {
                assert_abs_diff_eq!((coeff[[i, k]] - orig[[i, k]]).norm(), 0.0, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn populations_are_constants_of_motion() {
        let st = spin_coherent_state(h(8), 1.2, 0.3).unwrap();
        for &(r, tau) in &[(0.0, 1.0), (0.1, 2.0), (0.5, 7.0)] {
            let ev = evolve_closed_form(&st, C64::new(3.0, 1.0), r, tau).unwrap();
            let coeff = ev.coefficients(h(8)).unwrap();
            let orig = st.sector(h(8)).unwrap();
            for i in 0..coeff.nrows() {
                assert_abs_diff_eq!(
                    (coeff[[i, i]] - orig[[i, i]]).norm(),
                    0.0,
                    epsilon = 1e-12
                );
            }
        }
    }

    #[test]
    fn closed_form_exponent_matches_quadrature() {
        // Independent check of the matrix-element multiplier: integrate
        // d/ds ln ρ_{m,m'} = -R/2 (m²|α_m(s)|² + m'²|α_{m'}(s)|²)
        //                    + R α_m(s) α_{m'}^*(s) m m'
        // with a dense Gauss-Legendre rule and compare exponents.
        let (alpha_sq, r, tau) = (5.0, 0.17, 1.9);
        let (nodes, weights) = gauss_legendre(200);
        for m in [-2.0f64, 0.0, 1.0, 2.0] {
            for mp in [-2.0f64, -1.0, 0.0, 2.0] {
                let mut quad = C64::new(0.0, 0.0);
                for (x, w) in nodes.iter().zip(&weights) {
                    let s = 0.5 * tau * (x + 1.0);
                    let em = alpha_sq * (-r * m * m * s).exp();
                    let emp = alpha_sq * (-r * mp * mp * s).exp();
                    // α_m α_{m'}^* = |α₀|² e^{-i(m-m')s - R(m²+m'²)s/2}
                    let cross = alpha_sq
                        * C64::new(-0.5 * r * (m * m + mp * mp) * s, -(m - mp) * s).exp();
                    let integrand =
                        C64::new(-0.5 * r * (m * m * em + mp * mp * emp), 0.0)
                            + r * m * mp * cross;
                    quad += integrand * (0.5 * tau * w);
                }
                let closed = element_log_factor(alpha_sq, r, tau, m, mp);
                assert!(
                    (quad - closed).norm() < 1e-10,
                    "exponent mismatch at (m={m}, mp={mp}): quad {quad}, closed {closed}"
                );
            }
        }
    }

    #[test]
    fn reduced_atoms_hermitian_and_psd() {
        let st = spin_coherent_state(h(8), PI / 2.0, 0.0).unwrap();
        let ev = evolve_closed_form(&st, C64::new(3.0, 0.0), 0.05, 0.8).unwrap();
        let red = reduce_atoms(&ev).unwrap();
        assert!(red.hermiticity_error() < 1e-12);
        assert_relative_eq!(red.trace(), 1.0, max_relative = 1e-12);
        assert!(red.min_eigenvalue().unwrap() > -1e-9);
    }

    #[test]
    fn equatorial_collapse_and_exact_revival() {
        // Integer-m sector: at R=0 the probe returns to |α₀⟩ at τ=2π and the
        // transverse spin revives exactly.
        let j = h(8);
        let st = spin_coherent_state(j, PI / 2.0, 0.0).unwrap();
        let jx = BlockOperator::jx([j]);
        let a0 = C64::new(50f64.sqrt(), 0.0);

        let early = reduce_atoms(&evolve_closed_form(&st, a0, 0.0, 0.6).unwrap()).unwrap();
        let mid = observable_mean(&early, &jx).unwrap();
        assert!(mid.abs() < 0.2, "collapse expected, got ⟨Jx⟩ = {mid}");

        let revived =
            reduce_atoms(&evolve_closed_form(&st, a0, 0.0, 2.0 * PI).unwrap()).unwrap();
        let val = observable_mean(&revived, &jx).unwrap();
        assert_relative_eq!(val, j.to_f64(), max_relative = 1e-10);
    }

    #[test]
    fn dephasing_weakens_revival() {
        let j = h(8);
        let st = spin_coherent_state(j, PI / 2.0, 0.0).unwrap();
        let jx = BlockOperator::jx([j]);
        let a0 = C64::new(50f64.sqrt(), 0.0);
        let clean =
            reduce_atoms(&evolve_closed_form(&st, a0, 0.0, 2.0 * PI).unwrap()).unwrap();
        let noisy =
            reduce_atoms(&evolve_closed_form(&st, a0, 0.01, 2.0 * PI).unwrap()).unwrap();
        let v_clean = observable_mean(&clean, &jx).unwrap();
        let v_noisy = observable_mean(&noisy, &jx).unwrap();
        assert!(v_noisy < v_clean, "noise must erode the revival");
    }

    #[test]
    fn light_reduction_weights_and_merge() {
        // Thermal input: multiple sectors share m values; weights merge by m.
        let st = thermal_state(4, 0.3).unwrap();
        let ev = evolve_closed_form(&st, C64::new(2.0, 0.0), 0.1, 0.7).unwrap();
        let light = reduce_light(&ev).unwrap();
        assert!(!light.renormalized);
        let total: f64 = light.components.iter().map(|c| c.weight).sum();
        assert_relative_eq!(total, 1.0, max_relative = 1e-12);
        // m runs over -2..=2 after merging J ∈ {0, 1, 2}.
        assert_eq!(light.components.len(), 5);
        assert!(light.components.iter().all(|c| c.weight >= 0.0));
    }

    #[test]
    fn light_reduction_flags_non_unit_trace() {
        let st = spin_coherent_state(h(4), 1.0, 0.0).unwrap().scaled(0.7);
        let ev = evolve_closed_form(&st, C64::new(1.0, 0.0), 0.0, 0.2).unwrap();
        let light = reduce_light(&ev).unwrap();
        assert!(light.renormalized);
        let total: f64 = light.components.iter().map(|c| c.weight).sum();
        assert_relative_eq!(total, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn photon_statistics_against_fock_summation() {
        // Independent check: expand each coherent component in the Fock basis
        // and sum n and n² directly.
        let j = h(6);
        let st = spin_coherent_state(j, PI / 2.0, 0.0).unwrap();
        let a0 = C64::new(2.0, 0.0);
        let (r, tau) = (0.08, 1.3);
        let ev = evolve_closed_form(&st, a0, r, tau).unwrap();
        let light = reduce_light(&ev).unwrap();

        let mut mean_direct = 0.0;
        let mut second_direct = 0.0;
        for comp in &light.components {
            let nsq = comp.amplitude.norm_sqr();
            for n in 0..=80u32 {
                let nf = f64::from(n);
                let ln_p = -nsq + nf * nsq.ln() - crate::num::ln_factorial(n);
                let p = comp.weight * ln_p.exp();
                mean_direct += p * nf;
                second_direct += p * nf * nf;
            }
        }
        let var_direct = second_direct - mean_direct * mean_direct;
        assert_relative_eq!(light.mean_photon_number(), mean_direct, max_relative = 1e-10);
        assert_relative_eq!(
            light.photon_number_variance(),
            var_direct,
            max_relative = 1e-9
        );
    }

    #[test]
    fn analytic_photon_stats_limits() {
        let a0 = C64::new(50f64.sqrt(), 0.0);
        let j = h(40);
        // R=0: coherent light stays Poissonian with mean = variance = |α₀|².
        assert_relative_eq!(analytic_photon_mean(a0, j, 0.0, 3.0, PI / 2.0), 50.0, max_relative = 1e-12);
        assert_relative_eq!(
            analytic_photon_variance(a0, j, 0.0, 3.0, PI / 2.0),
            50.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn analytic_photon_stats_frozen_values() {
        // Frozen reference numbers for θ=π/2, J=20, |α₀|²=50, R=0.001, τ=3.
        let a0 = C64::new(50f64.sqrt(), 0.0);
        let j = h(40);
        assert_relative_eq!(
            analytic_photon_mean(a0, j, 0.001, 3.0, PI / 2.0),
            48.56429311786321,
            max_relative = 1e-13
        );
        assert_relative_eq!(
            analytic_photon_variance(a0, j, 0.001, 3.0, PI / 2.0),
            52.35168338779753,
            max_relative = 1e-13
        );
    }

    #[test]
    fn analytic_matches_exact_mixture() {
        // Binomial-average closed form vs the exact mixture at the same
        // parameters; the saddle point is good to a few percent here.
        let j = h(40);
        let a0 = C64::new(50f64.sqrt(), 0.0);
        let (r, tau) = (0.001, 3.0);
        let st = spin_coherent_state(j, PI / 2.0, 0.0).unwrap();
        let light = reduce_light(&evolve_closed_form(&st, a0, r, tau).unwrap()).unwrap();
        let exact_mean = light.mean_photon_number();
        let exact_var = light.photon_number_variance();
        let approx_mean = analytic_photon_mean(a0, j, r, tau, PI / 2.0);
        let approx_var = analytic_photon_variance(a0, j, r, tau, PI / 2.0);
        assert_relative_eq!(approx_mean, exact_mean, max_relative = 0.05);
        assert_relative_eq!(approx_var, exact_var, max_relative = 0.10);
    }

    #[test]
    fn observable_errors() {
        let st = spin_coherent_state(h(4), 1.0, 0.0).unwrap();
        // Observable lacking the populated sector.
        let op = BlockOperator::jz([h(2)]);
        assert!(observable_mean(&st, &op).is_err());
    }

    #[test]
    fn variance_of_jz_on_equatorial_state() {
        // Binomial spread: Var(Jz) = J/2 at θ=π/2.
        let j = h(20);
        let st = spin_coherent_state(j, PI / 2.0, 0.0).unwrap();
        let jz = BlockOperator::jz([j]);
        assert_relative_eq!(
            observable_variance(&st, &jz).unwrap(),
            j.to_f64() / 2.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn rejects_bad_parameters() {
        let st = spin_coherent_state(h(2), 1.0, 0.0).unwrap();
        assert!(evolve_closed_form(&st, C64::new(1.0, 0.0), -0.1, 1.0).is_err());
        assert!(evolve_closed_form(&st, C64::new(1.0, 0.0), 0.1, -1.0).is_err());
        assert!(evolve_closed_form(&st, C64::new(1.0, 0.0), f64::NAN, 1.0).is_err());
    }
}
