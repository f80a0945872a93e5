use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ChannelKind {
    Wideband,
    FlatBand,
    ChainLead,
}

impl fmt::Display for ChannelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ChannelKind::Wideband => "wideband",
            ChannelKind::FlatBand => "flatband",
            ChannelKind::ChainLead => "chain",
        })
    }
}

/// A decay channel with a closed-form self-energy.
///
/// Every channel couples to level `λ` through `γ_λC · f_C(E)`, so its
/// contribution to the effective Hamiltonian is `σ_C(E) · γ_C γ_Cᵀ` with a
/// scalar self-energy `σ_C(E)` that depends only on the channel.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Channel {
    /// Energy-independent density of states, open at every energy; no level shift.
    Wideband { dos: f64 },
    /// Constant density of states on `[lower, upper]`.
    FlatBand { lower: f64, upper: f64, dos: f64 },
    /// Semi-infinite tight-binding chain with band `[threshold, threshold + 4·hopping]`.
    ChainLead { threshold: f64, hopping: f64 },
}

impl Channel {
    pub fn kind(&self) -> ChannelKind {
        match self {
            Channel::Wideband { .. } => ChannelKind::Wideband,
            Channel::FlatBand { .. } => ChannelKind::FlatBand,
            Channel::ChainLead { .. } => ChannelKind::ChainLead,
        }
    }

    /// Lower band edge; `None` for a wideband channel, which has no threshold.
    pub fn threshold(&self) -> Option<f64> {
        match *self {
            Channel::Wideband { .. } => None,
            Channel::FlatBand { lower, .. } => Some(lower),
            Channel::ChainLead { threshold, .. } => Some(threshold),
        }
    }

    /// Band as a closed interval; infinite for wideband channels.
    pub fn band(&self) -> (f64, f64) {
        match *self {
            Channel::Wideband { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            Channel::FlatBand { lower, upper, .. } => (lower, upper),
            Channel::ChainLead { threshold, hopping } => (threshold, threshold + 4.0 * hopping),
        }
    }

    /// Density-of-states scale. For a chain lead this is the lead hopping.
    pub fn dos_scale(&self) -> f64 {
        match *self {
            Channel::Wideband { dos } | Channel::FlatBand { dos, .. } => dos,
            Channel::ChainLead { hopping, .. } => hopping,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |x: f64, what: &str| {
            if x.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidInput(format!("{} channel: {what} must be finite", self.kind())))
            }
        };
        match *self {
            Channel::Wideband { dos } => {
                finite(dos, "dos")?;
                if dos <= 0.0 {
                    return Err(Error::InvalidInput("wideband channel: dos must be > 0".into()));
                }
            }
            Channel::FlatBand { lower, upper, dos } => {
                finite(lower, "lower")?;
                finite(upper, "upper")?;
                finite(dos, "dos")?;
                if lower >= upper {
                    return Err(Error::InvalidInput(format!(
                        "flatband channel: lower edge {lower} must be below upper edge {upper}"
                    )));
                }
                if dos <= 0.0 {
                    return Err(Error::InvalidInput("flatband channel: dos must be > 0".into()));
                }
            }
            Channel::ChainLead { threshold, hopping } => {
                finite(threshold, "threshold")?;
                finite(hopping, "hopping")?;
                if hopping <= 0.0 {
                    return Err(Error::InvalidInput("chain channel: hopping must be > 0".into()));
                }
            }
        }
        Ok(())
    }

    /// Whether `energy` lies strictly inside the band.
    pub fn is_open(&self, energy: f64) -> bool {
        let (lo, hi) = self.band();
        lo < energy && energy < hi
    }

    /// Scalar self-energy `σ(E) = ∫ ρ(ω) f(ω)² / (E⁺ − ω) dω`.
    pub fn self_energy(&self, channel: usize, energy: f64) -> Result<Complex64> {
        match *self {
            Channel::Wideband { dos } => Ok(Complex64::new(0.0, -PI * dos)),
            Channel::FlatBand { lower, upper, dos } => {
                if energy == lower || energy == upper {
                    return Err(Error::SingularSelfEnergy { channel, energy });
                }
                let shift = dos * ((energy - lower) / (energy - upper)).abs().ln();
                let residue = if self.is_open(energy) { -PI * dos } else { 0.0 };
                Ok(Complex64::new(shift, residue))
            }
            Channel::ChainLead { threshold, hopping } => {
                let eps = energy - threshold - 2.0 * hopping;
                let t2 = hopping * hopping;
                if eps.abs() < 2.0 * hopping {
                    Ok(Complex64::new(eps, -(4.0 * t2 - eps * eps).sqrt()) / (2.0 * t2))
                } else {
                    // decaying real root, written without cancellation
                    let s = (eps * eps - 4.0 * t2).sqrt();
                    let re = if eps > 0.0 { 2.0 / (eps + s) } else { 2.0 / (eps - s) };
                    Ok(Complex64::new(re, 0.0))
                }
            }
        }
    }

    /// Spectral density `ρ(E) f(E)² = −Im σ(E) / π`; zero outside the band.
    pub fn spectral_density(&self, energy: f64) -> f64 {
        match *self {
            Channel::Wideband { dos } => dos,
            Channel::FlatBand { dos, .. } => {
                if self.is_open(energy) {
                    dos
                } else {
                    0.0
                }
            }
            Channel::ChainLead { threshold, hopping } => {
                if !self.is_open(energy) {
                    return 0.0;
                }
                let eps = energy - threshold - 2.0 * hopping;
                (4.0 * hopping * hopping - eps * eps).sqrt() / (2.0 * PI * hopping * hopping)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Composite Gauss–Legendre quadrature of a smooth integrand.
    fn gauss_legendre(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
        const X: [f64; 5] = [
            0.0,
            -0.538_469_310_105_683_1,
            0.538_469_310_105_683_1,
            -0.906_179_845_938_664,
            0.906_179_845_938_664,
        ];
        const W: [f64; 5] = [
            0.568_888_888_888_888_9,
            0.478_628_670_499_366_5,
            0.478_628_670_499_366_5,
            0.236_926_885_056_189_1,
            0.236_926_885_056_189_1,
        ];
        let h = (b - a) / panels as f64;
        (0..panels)
            .map(|p| {
                let mid = a + (p as f64 + 0.5) * h;
                X.iter().zip(W).map(|(x, w)| w * f(mid + 0.5 * h * x)).sum::<f64>() * 0.5 * h
            })
            .sum()
    }

    #[test]
    fn flatband_shift_below_threshold_matches_quadrature() {
        let ch = Channel::FlatBand { lower: 1.0, upper: 3.0, dos: 0.1 };
        let sigma = ch.self_energy(0, 0.0).unwrap();
        let oracle = gauss_legendre(|w| 0.1 / (0.0 - w), 1.0, 3.0, 200);
        assert!((sigma.re - oracle).abs() < 1e-12, "{} vs {}", sigma.re, oracle);
        assert!((sigma.re + 0.109_861_228_866_810_97).abs() < 1e-12);
        assert_eq!(sigma.im, 0.0);
    }

    #[test]
    fn flatband_band_edge_is_singular() {
        let ch = Channel::FlatBand { lower: 1.0, upper: 3.0, dos: 0.1 };
        assert!(matches!(ch.self_energy(2, 1.0), Err(Error::SingularSelfEnergy { channel: 2, .. })));
        assert!(matches!(ch.self_energy(0, 3.0), Err(Error::SingularSelfEnergy { .. })));
    }

    #[test]
    fn chain_lead_center_density() {
        let t = 0.7;
        let ch = Channel::ChainLead { threshold: -1.0, hopping: t };
        let center = -1.0 + 2.0 * t;
        assert!((ch.spectral_density(center) - 1.0 / (PI * t)).abs() < 1e-15);
        let s = ch.self_energy(0, center).unwrap();
        assert!(s.re.abs() < 1e-15);
        assert!((s.im + 1.0 / t).abs() < 1e-15);
    }

    #[test]
    fn chain_lead_matches_kramers_kronig_outside_band() {
        // Re σ(E) = ∫ ρ(ω)/(E − ω) dω, substituting ω = ω₀ + 2t(1 − cos k) removes the
        // square-root edges: ρ dω = (2/π) sin²k dk.
        let (w0, t) = (0.5, 1.3);
        let ch = Channel::ChainLead { threshold: w0, hopping: t };
        for e in [w0 - 0.2, w0 - 3.0, w0 + 4.0 * t + 0.1, w0 + 4.0 * t + 5.0] {
            let oracle = gauss_legendre(
                |k| 2.0 / PI * k.sin().powi(2) / (e - (w0 + 2.0 * t * (1.0 - k.cos()))),
                0.0,
                PI,
                400,
            );
            let s = ch.self_energy(0, e).unwrap();
            assert!((s.re - oracle).abs() < 1e-10, "E={e}: {} vs {}", s.re, oracle);
            assert_eq!(s.im, 0.0);
        }
    }

    #[test]
    fn chain_lead_integrated_density_is_one() {
        let ch = Channel::ChainLead { threshold: 0.0, hopping: 0.5 };
        let total = gauss_legendre(|k| ch.spectral_density(2.0 * 0.5 * (1.0 - k.cos())) * 0.5 * 2.0 * k.sin(), 0.0, PI, 200);
        assert!((total - 1.0).abs() < 1e-10);
    }

    #[test]
    fn validation() {
        assert!(Channel::FlatBand { lower: 2.0, upper: 1.0, dos: 1.0 }.validate().is_err());
        assert!(Channel::ChainLead { threshold: 0.0, hopping: -1.0 }.validate().is_err());
        assert!(Channel::Wideband { dos: f64::NAN }.validate().is_err());
        assert!(Channel::Wideband { dos: 0.3 }.validate().is_ok());
        assert_eq!(Channel::Wideband { dos: 0.3 }.threshold(), None);
    }
}
