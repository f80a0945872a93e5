use std::f64::consts::PI;

use faer::Mat;
use num_complex::Complex64;

use super::SystemModel;
use crate::error::{Error, Result};

/// `H_eff(E) = H_B + Σ_C V_BC (E⁺ − H_C)⁻¹ V_CB` at one scattering energy.
///
/// Stored both assembled and split as `matrix = hermitian_part − iπ·antihermitian_part`,
/// where the anti-Hermitian part `W(E) = Σ_open v_C v_Cᵀ` is built from the
/// channel coupling vectors and is positive semidefinite.
#[derive(Clone, Debug)]
pub struct EffectiveHamiltonian {
    pub energy: f64,
    pub matrix: Mat<Complex64>,
    pub hermitian_part: Mat<f64>,
    pub antihermitian_part: Mat<f64>,
    pub open_channel_mask: Vec<bool>,
}

impl EffectiveHamiltonian {
    pub fn size(&self) -> usize {
        self.matrix.nrows()
    }

    /// True when the anti-Hermitian part vanishes identically (no open channel or no coupling).
    pub fn is_real(&self) -> bool {
        let n = self.size();
        (0..n).all(|i| (0..n).all(|j| self.antihermitian_part[(i, j)] == 0.0))
    }

    pub fn frobenius_norm(&self) -> f64 {
        let n = self.size();
        (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| self.matrix[(i, j)].norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn max_entry(&self) -> f64 {
        let n = self.size();
        (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| self.matrix[(i, j)].norm())
            .fold(0.0, f64::max)
    }

    pub fn open_channels(&self) -> Vec<usize> {
        self.open_channel_mask
            .iter()
            .enumerate()
            .filter_map(|(c, &open)| open.then_some(c))
            .collect()
    }
}

pub fn build_h_eff(model: &SystemModel, energy: f64) -> Result<EffectiveHamiltonian> {
    if !energy.is_finite() {
        return Err(Error::InvalidInput(format!("energy {energy} is not finite")));
    }
    let n = model.n_levels();
    let gamma = model.couplings();

    let mut shift = vec![0.0; model.n_channels()];
    let mut density = vec![0.0; model.n_channels()];
    let mut open = vec![false; model.n_channels()];
    for (c, ch) in model.channels().iter().enumerate() {
        let sigma = ch.self_energy(c, energy)?;
        shift[c] = sigma.re;
        density[c] = ch.spectral_density(energy);
        open[c] = ch.is_open(energy);
    }

    let mut herm = Mat::<f64>::zeros(n, n);
    let mut anti = Mat::<f64>::zeros(n, n);
    let mut matrix = Mat::<Complex64>::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let mut h = model.hb()[(i, j)];
            let mut w = 0.0;
            for c in 0..model.n_channels() {
                let gg = gamma[(i, c)] * gamma[(j, c)];
                h += shift[c] * gg;
                if open[c] {
                    w += density[c] * gg;
                }
            }
            let z = Complex64::new(h, -PI * w);
            herm[(i, j)] = h;
            herm[(j, i)] = h;
            anti[(i, j)] = w;
            anti[(j, i)] = w;
            matrix[(i, j)] = z;
            matrix[(j, i)] = z;
        }
    }

    Ok(EffectiveHamiltonian {
        energy,
        matrix,
        hermitian_part: herm,
        antihermitian_part: anti,
        open_channel_mask: open,
    })
}

/// Coupling of the levels to the scattering state of one channel, `⟨ξ^E_C|V|λ⟩`.
#[derive(Clone, Debug, PartialEq)]
pub struct CouplingVector {
    pub values: Vec<f64>,
    /// False when the channel is closed (evanescent) at this energy; `values` is then zero.
    pub open: bool,
}

impl CouplingVector {
    /// Bilinear product `vᵀ φ`.
    pub fn dot(&self, phi: impl IntoIterator<Item = Complex64>) -> Complex64 {
        self.values.iter().zip(phi).map(|(v, p)| p * v).sum()
    }
}

pub fn coupling_vector(model: &SystemModel, channel: usize, energy: f64) -> Result<CouplingVector> {
    let ch = model
        .channels()
        .get(channel)
        .ok_or_else(|| Error::InvalidInput(format!("channel index {channel} out of range")))?;
    if !energy.is_finite() {
        return Err(Error::InvalidInput(format!("energy {energy} is not finite")));
    }
    let open = ch.is_open(energy);
    let scale = if open { ch.spectral_density(energy).sqrt() } else { 0.0 };
    Ok(CouplingVector {
        values: model.coupling_column(channel).into_iter().map(|g| g * scale).collect(),
        open,
    })
}
