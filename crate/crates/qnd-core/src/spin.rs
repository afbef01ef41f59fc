//! Dicke sectors, collective spin operators, input states, and
//! Clebsch-Gordan coefficients.
//!
//! Matrix blocks are indexed with m ascending from -J to +J. Ladder matrix
//! elements follow the Condon-Shortley convention
//! J_±|J,m⟩ = sqrt(J(J+1) - m(m±1)) |J,m±1⟩.

use std::collections::BTreeMap;

use ndarray as nd;
use num_complex::Complex64 as C64;

use crate::linalg;
use crate::num::{ln_binomial, ln_factorial, HalfInt};
use crate::{QndError, Result};

/// One (J, m) label.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct DickeIndex {
    pub j: HalfInt,
    pub m: HalfInt,
}

impl DickeIndex {
    pub fn new(j: HalfInt, m: HalfInt) -> Result<Self> {
        if j.twice() < 0 || m.abs() > j || (j - m).twice() % 2 != 0 {
            return Err(QndError::InvalidInput(format!(
                "invalid Dicke label (J={j}, m={m})"
            )));
        }
        Ok(DickeIndex { j, m })
    }
}

/// The J sectors available to N atoms: J = J_min, J_min+1, ..., N/2 with
/// J_min = 0 for even N and 1/2 for odd N.
#[derive(Clone, Debug)]
pub struct DickeBasis {
    pub n_atoms: u32,
    pub sectors: Vec<HalfInt>,
}

pub fn build_basis(n_atoms: u32) -> Result<DickeBasis> {
    if n_atoms == 0 {
        return Err(QndError::InvalidInput("need at least one atom".into()));
    }
    let j_max = HalfInt::from_twice(n_atoms as i32);
    let j_min = HalfInt::from_twice((n_atoms % 2) as i32);
    Ok(DickeBasis {
        n_atoms,
        sectors: j_min.range_to(j_max).collect(),
    })
}

impl DickeBasis {
    pub fn j_max(&self) -> HalfInt {
        HalfInt::from_twice(self.n_atoms as i32)
    }

    pub fn j_min(&self) -> HalfInt {
        HalfInt::from_twice((self.n_atoms % 2) as i32)
    }
}

/// The m labels of sector J, ascending.
pub fn m_values(j: HalfInt) -> Vec<HalfInt> {
    (-j).range_to(j).collect()
}

/// Dimension 2J+1 of sector J.
pub fn sector_dim(j: HalfInt) -> usize {
    (j.twice() + 1) as usize
}

/// A (mixture of) collective spin state(s), stored as one density block per
/// populated J sector. Unpopulated sectors are simply absent.
#[derive(Clone, Debug)]
pub struct AtomState {
    n_atoms: u32,
    sectors: BTreeMap<HalfInt, nd::Array2<C64>>,
}

impl AtomState {
    pub fn new(n_atoms: u32) -> Result<Self> {
        if n_atoms == 0 {
            return Err(QndError::InvalidInput("need at least one atom".into()));
        }
        Ok(AtomState {
            n_atoms,
            sectors: BTreeMap::new(),
        })
    }

    pub fn from_sector(n_atoms: u32, j: HalfInt, block: nd::Array2<C64>) -> Result<Self> {
        let mut state = AtomState::new(n_atoms)?;
        state.insert_sector(j, block)?;
        Ok(state)
    }

    pub fn insert_sector(&mut self, j: HalfInt, block: nd::Array2<C64>) -> Result<()> {
        let j_max = HalfInt::from_twice(self.n_atoms as i32);
        if j.twice() < 0 || j > j_max || (j_max - j).twice() % 2 != 0 {
            return Err(QndError::InvalidInput(format!(
                "sector J={j} not available to {} atoms",
                self.n_atoms
            )));
        }
        let d = sector_dim(j);
        if block.nrows() != d || block.ncols() != d {
            return Err(QndError::DimensionMismatch(format!(
                "sector J={j} needs a {d}x{d} block, got {}x{}",
                block.nrows(),
                block.ncols()
            )));
        }
        self.sectors.insert(j, block);
        Ok(())
    }

    pub fn n_atoms(&self) -> u32 {
        self.n_atoms
    }

    pub fn sector(&self, j: HalfInt) -> Option<&nd::Array2<C64>> {
        self.sectors.get(&j)
    }

    pub fn sectors(&self) -> impl Iterator<Item = (HalfInt, &nd::Array2<C64>)> {
        self.sectors.iter().map(|(j, b)| (*j, b))
    }

    pub fn sector_count(&self) -> usize {
        self.sectors.len()
    }

    pub fn trace(&self) -> f64 {
        self.sectors
            .values()
            .map(|b| b.diag().iter().map(|z| z.re).sum::<f64>())
            .sum()
    }

    /// Largest |ρ - ρ†| entry over all sectors.
    pub fn hermiticity_error(&self) -> f64 {
        let mut worst = 0.0f64;
        for b in self.sectors.values() {
            for i in 0..b.nrows() {
                for k in 0..b.ncols() {
                    worst = worst.max((b[[i, k]] - b[[k, i]].conj()).norm());
                }
            }
        }
        worst
    }

    /// Smallest eigenvalue over all sector blocks.
    pub fn min_eigenvalue(&self) -> Result<f64> {
        let mut lo = f64::INFINITY;
        for b in self.sectors.values() {
            lo = lo.min(linalg::min_eigenvalue(b)?);
        }
        Ok(if lo.is_finite() { lo } else { 0.0 })
    }

    pub fn scaled(&self, s: f64) -> AtomState {
        let mut out = self.clone();
        for b in out.sectors.values_mut() {
            b.mapv_inplace(|z| z * s);
        }
        out
    }

    /// Diagonal populations as ((J, m), p) in sector order, m ascending.
    pub fn diagonal(&self) -> Vec<(DickeIndex, f64)> {
        let mut out = Vec::new();
        for (&j, b) in &self.sectors {
            for (i, m) in m_values(j).into_iter().enumerate() {
                out.push((DickeIndex { j, m }, b[[i, i]].re));
            }
        }
        out
    }
}

/// Dense spin matrices for a single J sector.
pub struct SpinOperatorSet {
    pub j: HalfInt,
    pub jz: nd::Array2<C64>,
    pub jp: nd::Array2<C64>,
    pub jm: nd::Array2<C64>,
    pub jx: nd::Array2<C64>,
    pub jy: nd::Array2<C64>,
}

impl SpinOperatorSet {
    pub fn new(j: HalfInt) -> Self {
        let d = sector_dim(j);
        let jf = j.to_f64();
        let ms: Vec<f64> = m_values(j).iter().map(|m| m.to_f64()).collect();
        let mut jz = nd::Array2::<C64>::zeros((d, d));
        let mut jp = nd::Array2::<C64>::zeros((d, d));
        for (i, &m) in ms.iter().enumerate() {
            jz[[i, i]] = C64::new(m, 0.0);
            if i + 1 < d {
                jp[[i + 1, i]] = C64::new((jf * (jf + 1.0) - m * (m + 1.0)).sqrt(), 0.0);
            }
        }
        let jm = jp.t().mapv(|z| z.conj());
        let jx = (&jp + &jm).mapv(|z| z * 0.5);
        let jy = (&jp - &jm).mapv(|z| z * C64::new(0.0, -0.5));
        SpinOperatorSet { j, jz, jp, jm, jx, jy }
    }
}

/// A block-diagonal observable with one matrix per J sector.
pub struct BlockOperator {
    blocks: BTreeMap<HalfInt, nd::Array2<C64>>,
}

impl BlockOperator {
    pub fn from_fn(
        js: impl IntoIterator<Item = HalfInt>,
        f: impl Fn(HalfInt) -> nd::Array2<C64>,
    ) -> Self {
        BlockOperator {
            blocks: js.into_iter().map(|j| (j, f(j))).collect(),
        }
    }

    pub fn jx(js: impl IntoIterator<Item = HalfInt>) -> Self {
        Self::from_fn(js, |j| SpinOperatorSet::new(j).jx)
    }

    pub fn jy(js: impl IntoIterator<Item = HalfInt>) -> Self {
        Self::from_fn(js, |j| SpinOperatorSet::new(j).jy)
    }

    pub fn jz(js: impl IntoIterator<Item = HalfInt>) -> Self {
        Self::from_fn(js, |j| SpinOperatorSet::new(j).jz)
    }

    pub fn block(&self, j: HalfInt) -> Option<&nd::Array2<C64>> {
        self.blocks.get(&j)
    }
}

/// Amplitudes ⟨J,m|θ,φ⟩ of the spin coherent state, m ascending:
/// binom(2J, J+m)^{1/2} sin^{J+m}(θ/2) cos^{J-m}(θ/2) e^{-i(J+m)φ}.
pub(crate) fn coherent_amplitudes(j: HalfInt, theta: f64, phi: f64) -> Vec<C64> {
    let two_j = j.twice() as u32;
    let (s, c) = ((theta / 2.0).sin(), (theta / 2.0).cos());
    let d = sector_dim(j);
    let mut out = Vec::with_capacity(d);
    for k in 0..d as u32 {
        // k = J + m counts up from 0.
        let amp = if s == 0.0 {
            if k == 0 { 1.0 } else { 0.0 }
        } else if c == 0.0 {
            if k == two_j { 1.0 } else { 0.0 }
        } else {
            (0.5 * ln_binomial(two_j, k)
                + f64::from(k) * s.ln()
                + f64::from(two_j - k) * c.ln())
            .exp()
        };
        out.push(C64::from_polar(amp, -(f64::from(k)) * phi));
    }
    out
}

/// Pure spin coherent state pointing along (θ, φ), as a single-sector density
/// matrix with J = N/2 for N = 2J atoms.
pub fn spin_coherent_state(j: HalfInt, theta: f64, phi: f64) -> Result<AtomState> {
    if j.twice() <= 0 {
        return Err(QndError::InvalidInput(format!("need J > 0, got {j}")));
    }
    if !theta.is_finite() || !phi.is_finite() {
        return Err(QndError::InvalidInput("angles must be finite".into()));
    }
    let amps = coherent_amplitudes(j, theta, phi);
    let d = amps.len();
    let mut block = nd::Array2::<C64>::zeros((d, d));
    for (i, a) in amps.iter().enumerate() {
        for (k, b) in amps.iter().enumerate() {
            block[[i, k]] = a * b.conj();
        }
    }
    AtomState::from_sector(j.twice() as u32, j, block)
}

/// Diagonal thermal mixture over all J sectors of N atoms with Boltzmann
/// weights e^{-E0 m}: within sector J each m gets e^{-E0 m} / P_J, and the
/// sectors are averaged with weight 1/N_s, N_s = J_max + 1 (integer J_max)
/// or J_max + 1/2 (half-odd J_max). Both choices equal the number of
/// sectors, so the total trace is 1.
pub fn thermal_state(n_atoms: u32, e0: f64) -> Result<AtomState> {
    if !e0.is_finite() {
        return Err(QndError::InvalidInput("E0 must be finite".into()));
    }
    let basis = build_basis(n_atoms)?;
    let sector_weight = 1.0 / basis.sectors.len() as f64;
    let mut state = AtomState::new(n_atoms)?;
    for &j in &basis.sectors {
        let ms = m_values(j);
        let weights: Vec<f64> = ms.iter().map(|m| (-e0 * m.to_f64()).exp()).collect();
        let pj: f64 = weights.iter().sum();
        let d = sector_dim(j);
        let mut block = nd::Array2::<C64>::zeros((d, d));
        for (i, w) in weights.iter().enumerate() {
            block[[i, i]] = C64::new(sector_weight * w / pj, 0.0);
        }
        state.insert_sector(j, block)?;
    }
    Ok(state)
}

/// Clebsch-Gordan coefficient ⟨j1 m1; j2 m2 | L M⟩ by the Racah sum in
/// log-factorial space. Selection-rule violations give 0.
pub fn clebsch_gordan(j1: HalfInt, m1: HalfInt, j2: HalfInt, m2: HalfInt, l: HalfInt, m: HalfInt) -> f64 {
    if m1 + m2 != m || m1.abs() > j1 || m2.abs() > j2 || m.abs() > l {
        return 0.0;
    }
    // Triangle condition and integrality of every factorial argument.
    let args = [
        j1 + j2 - l,
        j1 - j2 + l,
        -j1 + j2 + l,
        j1 + m1,
        j1 - m1,
        j2 + m2,
        j2 - m2,
        l + m,
        l - m,
    ];
    for a in args {
        if a.twice() < 0 || !a.is_integer() {
            return 0.0;
        }
    }
    let f = |h: HalfInt| ln_factorial((h.twice() / 2) as u32);
    let ln_delta = f(j1 + j2 - l) + f(j1 - j2 + l) + f(-j1 + j2 + l)
        - f(j1 + j2 + l + HalfInt::new(1));
    let ln_pre = f(j1 + m1) + f(j1 - m1) + f(j2 + m2) + f(j2 - m2) + f(l + m) + f(l - m);

    // Summation index range where all factorial arguments stay nonnegative.
    let lo = 0
        .max(-(l - j2 + m1).twice() / 2)
        .max(-(l - j1 - m2).twice() / 2);
    let hi = ((j1 + j2 - l).twice() / 2)
        .min((j1 - m1).twice() / 2)
        .min((j2 + m2).twice() / 2);
    if lo > hi {
        return 0.0;
    }
    let ik = |h: HalfInt| (h.twice() / 2) as u32;
    // Factor the largest term out of the alternating sum to avoid overflow.
    let ln_terms: Vec<f64> = (lo..=hi)
        .map(|k| {
            -(ln_factorial(k as u32)
                + ln_factorial(ik(j1 + j2 - l) - k as u32)
                + ln_factorial(ik(j1 - m1) - k as u32)
                + ln_factorial(ik(j2 + m2) - k as u32)
                + ln_factorial((ik(l - j2 + m1) as i64 + k as i64) as u32)
                + ln_factorial((ik(l - j1 - m2) as i64 + k as i64) as u32))
        })
        .collect();
    let ln_max = ln_terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for (k, lt) in (lo..=hi).zip(&ln_terms) {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        sum += sign * (lt - ln_max).exp();
    }
    if sum == 0.0 {
        return 0.0;
    }
    let ln_mag = 0.5 * (((l.twice() + 1) as f64).ln() + ln_delta + ln_pre) + ln_max + sum.abs().ln();
    sum.signum() * ln_mag.exp()
}

/// Cached coefficients ⟨J,m; J,-m' | L, m-m'⟩ for a fixed J, used by the
/// sphere Wigner transform.
pub struct CgTable {
    j: HalfInt,
    dim: usize,
    /// Indexed [L][i][k] with i = J+m, k = J+m'.
    table: Vec<Vec<Vec<f64>>>,
}

impl CgTable {
    pub fn for_equal_j(j: HalfInt) -> Self {
        let d = sector_dim(j);
        let ms = m_values(j);
        let l_max = j.twice(); // 2J as an integer L value
        let mut table = Vec::with_capacity((l_max + 1) as usize);
        for l in 0..=l_max {
            let lh = HalfInt::new(l);
            let mut block = vec![vec![0.0; d]; d];
            for (i, &m) in ms.iter().enumerate() {
                for (k, &mp) in ms.iter().enumerate() {
                    block[i][k] = clebsch_gordan(j, m, j, -mp, lh, m - mp);
                }
            }
            table.push(block);
        }
        CgTable { j, dim: d, table }
    }

    /// ⟨J,m; J,-m' | L, m-m'⟩
    pub fn get(&self, l: i32, m: HalfInt, mp: HalfInt) -> f64 {
        let i = ((m + self.j).twice() / 2) as usize;
        let k = ((mp + self.j).twice() / 2) as usize;
        if l < 0 || l > self.j.twice() || i >= self.dim || k >= self.dim {
            return 0.0;
        }
        self.table[l as usize][i][k]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;

    fn h(t: i32) -> HalfInt {
        HalfInt::from_twice(t)
    }

    #[test]
    fn basis_sectors() {
        let b = build_basis(4).unwrap();
        let js: Vec<f64> = b.sectors.iter().map(|j| j.to_f64()).collect();
        assert_eq!(js, vec![0.0, 1.0, 2.0]);
        let b = build_basis(5).unwrap();
        let js: Vec<f64> = b.sectors.iter().map(|j| j.to_f64()).collect();
        assert_eq!(js, vec![0.5, 1.5, 2.5]);
        assert!(build_basis(0).is_err());
    }

    #[test]
    fn dicke_index_validation() {
        assert!(DickeIndex::new(h(2), h(-2)).is_ok());
        assert!(DickeIndex::new(h(2), h(4)).is_err());
        // J = 1 with m = 1/2 has the wrong parity.
        assert!(DickeIndex::new(h(2), h(1)).is_err());
    }

    #[test]
    fn ladder_matrix_elements() {
        for &tj in &[1, 2, 3, 4, 20] {
            let j = h(tj);
            let ops = SpinOperatorSet::new(j);
            let d = sector_dim(j);
            // [J+, J-] = 2 Jz and [Jz, J+] = J+.
            let comm1 = ops.jp.dot(&ops.jm) - ops.jm.dot(&ops.jp);
            let comm2 = ops.jz.dot(&ops.jp) - ops.jp.dot(&ops.jz);
            for i in 0..d {
                for k in 0..d {
                    assert_abs_diff_eq!(
                        (comm1[[i, k]] - 2.0 * ops.jz[[i, k]]).norm(),
                        0.0,
                        epsilon = 1e-12
                    );
                    assert_abs_diff_eq!(
                        (comm2[[i, k]] - ops.jp[[i, k]]).norm(),
                        0.0,
                        epsilon = 1e-12
                    );
                }
            }
            // Casimir Jx^2 + Jy^2 + Jz^2 = J(J+1).
            let jf = j.to_f64();
            let casimir = ops.jx.dot(&ops.jx) + ops.jy.dot(&ops.jy) + ops.jz.dot(&ops.jz);
            for i in 0..d {
                assert_relative_eq!(casimir[[i, i]].re, jf * (jf + 1.0), max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn coherent_state_poles_and_equator() {
        // θ=0 leaves every atom in the lower state: only m = -J populated.
        let st = spin_coherent_state(h(4), 0.0, 0.3).unwrap();
        let block = st.sector(h(4)).unwrap();
        assert_eq!(block[[0, 0]], C64::new(1.0, 0.0));
        assert!(block[[1, 1]].norm() == 0.0);
        // θ=π/2, J=1/2: amplitudes (1/√2, 1/√2) up to phase.
        let st = spin_coherent_state(h(1), std::f64::consts::FRAC_PI_2, 0.0).unwrap();
        let block = st.sector(h(1)).unwrap();
        assert_relative_eq!(block[[0, 0]].re, 0.5, max_relative = 1e-15);
        assert_relative_eq!(block[[1, 1]].re, 0.5, max_relative = 1e-15);
    }

    #[test]
    fn coherent_state_binomial_profile() {
        let j = h(40); // J = 20
        let st = spin_coherent_state(j, std::f64::consts::FRAC_PI_2, 0.0).unwrap();
        let block = st.sector(j).unwrap();
        // At the equator the populations are binom(40, k)/2^40.
        let p_center = ln_binomial(40, 20).exp() / (2.0f64).powi(40);
        assert_relative_eq!(block[[20, 20]].re, p_center, max_relative = 1e-12);
        assert_relative_eq!(st.trace(), 1.0, max_relative = 1e-12);
        assert_eq!(st.hermiticity_error(), 0.0);
    }

    proptest! {
        #[test]
        fn coherent_state_normalized(tj in 1i32..=40, theta in 0.0..std::f64::consts::PI, phi in 0.0..(2.0 * std::f64::consts::PI)) {
            let st = spin_coherent_state(h(tj), theta, phi).unwrap();
            prop_assert!((st.trace() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn thermal_state_small_cases() {
        // N=2, E0→0: sector J=0 weight 1/2; J=1 uniform 1/6.
        let st = thermal_state(2, 0.0).unwrap();
        assert_relative_eq!(st.sector(h(0)).unwrap()[[0, 0]].re, 0.5, max_relative = 1e-14);
        assert_relative_eq!(st.sector(h(2)).unwrap()[[1, 1]].re, 1.0 / 6.0, max_relative = 1e-14);
        assert_relative_eq!(st.trace(), 1.0, max_relative = 1e-14);

        // N=1, E0=ln 2: p(m=-1/2)/p(m=+1/2) = e^{E0} = 2.
        let st = thermal_state(1, (2.0f64).ln()).unwrap();
        let b = st.sector(h(1)).unwrap();
        assert_relative_eq!(b[[0, 0]].re / b[[1, 1]].re, 2.0, max_relative = 1e-13);
        assert_relative_eq!(st.trace(), 1.0, max_relative = 1e-14);
    }

    #[test]
    fn thermal_state_frozen_values() {
        // N=3, E0=0.7: sectors 1/2 and 3/2, each weighted 1/2.
        let e0 = 0.7f64;
        let st = thermal_state(3, e0).unwrap();
        let p_half: f64 = (0.35f64).exp() + (-0.35f64).exp();
        let b = st.sector(h(1)).unwrap();
        assert_relative_eq!(b[[0, 0]].re, 0.5 * (0.35f64).exp() / p_half, max_relative = 1e-13);
        let p_3half: f64 =
            (1.05f64).exp() + (0.35f64).exp() + (-0.35f64).exp() + (-1.05f64).exp();
        let b = st.sector(h(3)).unwrap();
        assert_relative_eq!(b[[3, 3]].re, 0.5 * (-1.05f64).exp() / p_3half, max_relative = 1e-13);
        assert_relative_eq!(st.trace(), 1.0, max_relative = 1e-13);
    }

    #[test]
    fn thermal_state_near_uniform_at_tiny_e0() {
        let st = thermal_state(20, 1e-12).unwrap();
        assert_relative_eq!(st.trace(), 1.0, max_relative = 1e-12);
        let b = st.sector(h(20)).unwrap();
        let first = b[[0, 0]].re;
        for i in 0..sector_dim(h(20)) {
            assert_relative_eq!(b[[i, i]].re, first, max_relative = 1e-10);
        }
    }

    #[test]
    fn clebsch_gordan_frozen_values() {
        // Reference values from an independent exact computation.
        assert_relative_eq!(
            clebsch_gordan(h(2), h(2), h(2), h(-2), h(4), h(0)),
            0.4082482904638630,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            clebsch_gordan(h(4), h(2), h(4), h(-2), h(4), h(0)),
            0.2672612419124244,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            clebsch_gordan(h(3), h(1), h(3), h(1), h(6), h(2)),
            0.7745966692414834,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            clebsch_gordan(h(20), h(6), h(20), h(10), h(16), h(16)),
            -0.3994816900978978,
            max_relative = 1e-11
        );
        assert_relative_eq!(
            clebsch_gordan(h(20), h(6), h(20), h(-10), h(16), h(-4)),
            -0.2689287830067217,
            max_relative = 1e-11
        );
        assert_relative_eq!(
            clebsch_gordan(h(1), h(1), h(1), h(-1), h(0), h(0)),
            std::f64::consts::FRAC_1_SQRT_2,
            max_relative = 1e-13
        );
    }

    #[test]
    fn clebsch_gordan_selection_rules() {
        // M ≠ m1 + m2.
        assert_eq!(clebsch_gordan(h(2), h(2), h(2), h(-2), h(4), h(2)), 0.0);
        // Triangle violation.
        assert_eq!(clebsch_gordan(h(2), h(0), h(2), h(0), h(6), h(0)), 0.0);
        // |m| > j.
        assert_eq!(clebsch_gordan(h(2), h(4), h(2), h(-4), h(4), h(0)), 0.0);
    }

    #[test]
    fn clebsch_gordan_singlet_identity() {
        // ⟨J,m; J,-m|0,0⟩ = (-1)^{J-m}/sqrt(2J+1).
        for &tj in &[1, 2, 4, 20] {
            let j = h(tj);
            for m in m_values(j) {
                let expect = (-1.0f64).powi((j - m).twice() / 2)
                    / ((tj as f64) + 1.0).sqrt();
                assert_relative_eq!(
                    clebsch_gordan(j, m, j, -m, h(0), h(0)),
                    expect,
                    max_relative = 1e-12
                );
            }
        }
    }

    #[test]
    fn clebsch_gordan_orthonormality() {
        // Fixed j1 = j2 = J: rows over (m1, m2) are orthonormal across (L, M),
        // and columns complete: Σ_{L,M} C^2 = 1 for each (m1, m2).
        for &tj in &[2, 5, 10] {
            let j = h(tj);
            let ms = m_values(j);
            for l in 0..=tj {
                for lp in 0..=tj {
                    for mm in -l..=l.min(lp) {
                        let (lh, lph, mh) = (h(2 * l), h(2 * lp), h(2 * mm));
                        let mut sum = 0.0;
                        for &m1 in &ms {
                            let m2 = mh - m1;
                            if m2.abs() > j {
                                continue;
                            }
                            sum += clebsch_gordan(j, m1, j, m2, lh, mh)
                                * clebsch_gordan(j, m1, j, m2, lph, mh);
                        }
                        let expect = if l == lp { 1.0 } else { 0.0 };
                        assert_abs_diff_eq!(sum, expect, epsilon = 1e-10);
                    }
                }
            }
            for &m1 in &ms {
                for &m2 in &ms {
                    let mut sum = 0.0;
                    for l in 0..=tj {
                        sum += clebsch_gordan(j, m1, j, m2, h(2 * l), m1 + m2).powi(2);
                    }
                    assert_abs_diff_eq!(sum, 1.0, epsilon = 1e-10);
                }
            }
        }
    }

    #[test]
    fn cg_table_matches_direct() {
        let j = h(6);
        let table = CgTable::for_equal_j(j);
        for m in m_values(j) {
            for mp in m_values(j) {
                for l in 0..=j.twice() {
                    let direct = clebsch_gordan(j, m, j, -mp, h(2 * l), m - mp);
                    assert_abs_diff_eq!(table.get(l, m, mp), direct, epsilon = 1e-15);
                }
            }
        }
    }

    #[test]
    fn min_eigenvalue_of_pure_state() {
        let st = spin_coherent_state(h(8), 1.1, 0.4).unwrap();
        let lo = st.min_eigenvalue().unwrap();
        assert!(lo > -1e-12, "pure state should be PSD, got {lo}");
    }

    #[test]
    fn block_operator_means() {
        use crate::dynamics::observable_mean;
        let j = h(40);
        let st = spin_coherent_state(j, std::f64::consts::FRAC_PI_2, 0.0).unwrap();
        let jx = BlockOperator::jx([j]);
        let jz = BlockOperator::jz([j]);
        // The equatorial coherent state at φ=0 has ⟨Jx⟩ = J, ⟨Jz⟩ = 0.
        assert_relative_eq!(observable_mean(&st, &jx).unwrap(), 20.0, max_relative = 1e-12);
        assert_abs_diff_eq!(observable_mean(&st, &jz).unwrap(), 0.0, epsilon = 1e-12);
    }
}
