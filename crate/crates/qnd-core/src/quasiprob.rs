//! Quasiprobability maps of collective spin states on the Bloch sphere.
//!
//! Two standard views: the Husimi map Q(θ, φ) = ⟨θ,φ|ρ|θ,φ⟩ against spin
//! coherent states (always nonnegative, resolution-limited) and the spherical
//! Wigner map built from the multipole expansion ρ_{L,M} (faithful, can go
//! negative and does so for cat-like states). The θ = 0 pole hosts m = -J in
//! the coherent-state convention used here.

use ndarray as nd;
use num_complex::Complex64 as C64;

use crate::num::{gauss_legendre, HalfInt};
use crate::spin::{coherent_amplitudes, sector_dim, AtomState, CgTable};
use crate::{QndError, Result};

const FOUR_PI: f64 = 4.0 * std::f64::consts::PI;

/// Quadrature grid on the sphere: Gauss-Legendre nodes in cos θ (so that
/// polynomial integrands in cos θ integrate exactly) and a uniform φ comb.
pub struct SphereGrid {
    /// Polar angles, ascending in (0, π).
    pub thetas: Vec<f64>,
    /// Quadrature weights for ∫ sin θ dθ; they sum to 2.
    pub theta_weights: Vec<f64>,
    /// Azimuthal angles, ascending in [0, 2π).
    pub phis: Vec<f64>,
    /// Common azimuthal weight 2π / n_phi.
    pub phi_weight: f64,
}

impl SphereGrid {
    pub fn new(n_theta: usize, n_phi: usize) -> Result<Self> {
        if n_theta < 2 || n_phi < 2 {
            return Err(QndError::InvalidInput(format!(
                "grid needs at least 2 x 2 points, got {n_theta} x {n_phi}"
            )));
        }
        let (xs, ws) = gauss_legendre(n_theta);
        // Nodes ascend in x = cos θ, so θ = acos(x) descends; flip both.
        let thetas: Vec<f64> = xs.iter().rev().map(|x| x.acos()).collect();
        let theta_weights: Vec<f64> = ws.iter().rev().copied().collect();
        let phi_weight = 2.0 * std::f64::consts::PI / n_phi as f64;
        let phis: Vec<f64> = (0..n_phi).map(|k| k as f64 * phi_weight).collect();
        Ok(SphereGrid {
            thetas,
            theta_weights,
            phis,
            phi_weight,
        })
    }

    /// 181 x 360 grid: fine enough for every ensemble size this crate targets.
    pub fn default_resolution() -> Self {
        Self::new(181, 360).expect("static grid dimensions are valid")
    }

    /// ∫ f dΩ for a field sampled on this grid (rows: θ, columns: φ).
    pub fn integrate(&self, values: &nd::Array2<f64>) -> Result<f64> {
        if values.dim() != (self.thetas.len(), self.phis.len()) {
            return Err(QndError::DimensionMismatch(format!(
                "field is {:?}, grid is {} x {}",
                values.dim(),
                self.thetas.len(),
                self.phis.len()
            )));
        }
        let mut total = 0.0;
        for (i, w) in self.theta_weights.iter().enumerate() {
            let mut row = 0.0;
            for k in 0..self.phis.len() {
                row += values[[i, k]];
            }
            total += w * row;
        }
        Ok(total * self.phi_weight)
    }
}

/// Husimi map. A single-sector state gives Q_J(θ, φ) = (2J+1)/(4π) ⟨θ,φ|ρ|θ,φ⟩
/// (which integrates to Tr ρ); a state spread over several J sectors gives
/// the sector average Σ_J Q_J / (N/2 + 1).
pub fn q_function(rho: &AtomState, grid: &SphereGrid) -> Result<nd::Array2<f64>> {
    let (nt, np) = (grid.thetas.len(), grid.phis.len());
    let mut q = nd::Array2::<f64>::zeros((nt, np));
    let norm = if rho.sector_count() > 1 {
        1.0 / (rho.n_atoms() as f64 / 2.0 + 1.0)
    } else {
        1.0
    };
    for (j, block) in rho.sectors() {
        let d = sector_dim(j);
        let pre = norm * (j.twice() as f64 + 1.0) / FOUR_PI;
        for (it, &theta) in grid.thetas.iter().enumerate() {
            // The φ dependence is a pure phase per component; build the θ
            // profile once per row.
            let base = coherent_amplitudes(j, theta, 0.0);
            for (ip, &phi) in grid.phis.iter().enumerate() {
                let mut val = C64::new(0.0, 0.0);
                for i in 0..d {
                    let ci = base[i].re * C64::from_polar(1.0, -(i as f64) * phi);
                    let mut row = C64::new(0.0, 0.0);
                    for k in 0..d {
                        let ck = base[k].re * C64::from_polar(1.0, -(k as f64) * phi);
                        row += block[[i, k]] * ck;
                    }
                    val += ci.conj() * row;
                }
                q[[it, ip]] += pre * val.re;
            }
        }
    }
    Ok(q)
}

/// Multipole expansion ρ_{L,M} = Σ_m (-1)^{J-m'} ⟨J,m; J,-m'|L,M⟩ ρ_{m,m'}
/// with m' = m - M, returned as ragged rows indexed [L][M + L] for
/// L = 0..=2J.
pub fn wigner_coefficients(block: &nd::Array2<C64>, j: HalfInt) -> Result<Vec<Vec<C64>>> {
    let d = sector_dim(j);
    if block.dim() != (d, d) {
        return Err(QndError::DimensionMismatch(format!(
            "block is {:?}, sector J = {j} needs {d} x {d}",
            block.dim()
        )));
    }
    let table = CgTable::for_equal_j(j);
    let l_max = j.twice();
    let ms = crate::spin::m_values(j);
    let mut coeffs = Vec::with_capacity((l_max + 1) as usize);
    for l in 0..=l_max {
        let mut row = vec![C64::new(0.0, 0.0); 2 * l as usize + 1];
        for (em, entry) in row.iter_mut().enumerate() {
            let m_big = em as i32 - l; // integer M
            for (i, &m) in ms.iter().enumerate() {
                let mp = m - HalfInt::new(m_big);
                if mp.abs() > j {
                    continue;
                }
                let k = ((mp + j).twice() / 2) as usize;
                let sign = if ((j - mp).twice() / 2) % 2 == 0 { 1.0 } else { -1.0 };
                *entry += sign * table.get(l, m, mp) * block[[i, k]];
            }
        }
        coeffs.push(row);
    }
    Ok(coeffs)
}

/// Orthonormalized associated Legendre functions P̄_L^M(cos θ), indexed
/// [L][M] for 0 ≤ M ≤ L, such that Y_L^M(θ, φ) = P̄_L^M(cos θ) e^{iMφ} are
/// unit-normalized spherical harmonics (Condon-Shortley signs).
fn ylm_theta_table(l_max: usize, theta: f64) -> Vec<Vec<f64>> {
    let (s, c) = theta.sin_cos();
    let mut p = vec![vec![0.0; l_max + 1]; l_max + 1];
    p[0][0] = 1.0 / FOUR_PI.sqrt();
    for m in 1..=l_max {
        let mf = m as f64;
        p[m][m] = -((2.0 * mf + 1.0) / (2.0 * mf)).sqrt() * s * p[m - 1][m - 1];
    }
    for m in 0..l_max {
        let mf = m as f64;
        p[m + 1][m] = (2.0 * mf + 3.0).sqrt() * c * p[m][m];
    }
    for m in 0..=l_max {
        let mf = m as f64;
        for l in (m + 2)..=l_max {
            let lf = l as f64;
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
            let b = ((2.0 * lf + 1.0) * (lf + mf - 1.0) * (lf - mf - 1.0)
                / ((2.0 * lf - 3.0) * (lf * lf - mf * mf)))
                .sqrt();
            p[l][m] = a * c * p[l - 1][m] - b * p[l - 2][m];
        }
    }
    p
}

/// Spherical Wigner map W(θ, φ) = Σ_{L,M} ρ_{L,M} Y_L^M(θ, φ) of a
/// single-sector state. States spread over several J sectors have no single
/// multipole expansion here and are rejected as unsupported.
///
/// The harmonic convention places m = +J at θ = 0, mirroring the
/// coherent-state convention of [`q_function`]; the two agree on the equator.
pub fn wigner_function(rho: &AtomState, grid: &SphereGrid) -> Result<nd::Array2<f64>> {
    if rho.sector_count() != 1 {
        return Err(QndError::UnsupportedInput(format!(
            "need a single-sector state, got {} sectors",
            rho.sector_count()
        )));
    }
    let (j, block) = rho.sectors().next().expect("one sector present");
    let coeffs = wigner_coefficients(block, j)?;
    let l_max = j.twice() as usize;
    let (nt, np) = (grid.thetas.len(), grid.phis.len());
    let mut w = nd::Array2::<f64>::zeros((nt, np));
    for (it, &theta) in grid.thetas.iter().enumerate() {
        let p = ylm_theta_table(l_max, theta);
        // F_M(θ) = Σ_L ρ_{L,M} P̄_L^|M|(cos θ) (-1)^M for M < 0.
        let mut f = vec![C64::new(0.0, 0.0); 2 * l_max + 1];
        for (l, row) in coeffs.iter().enumerate() {
            for (em, &coeff) in row.iter().enumerate() {
                let m_big = em as i32 - l as i32;
                let mabs = m_big.unsigned_abs() as usize;
                let mut y = p[l][mabs];
                if m_big < 0 && m_big % 2 != 0 {
                    y = -y;
                }
                f[(m_big + l_max as i32) as usize] += coeff * y;
            }
        }
        for (ip, &phi) in grid.phis.iter().enumerate() {
            let mut val = C64::new(0.0, 0.0);
            for (idx, fm) in f.iter().enumerate() {
                let m_big = idx as i32 - l_max as i32;
                val += fm * C64::from_polar(1.0, m_big as f64 * phi);
            }
            w[[it, ip]] = val.re;
        }
    }
    Ok(w)
}
