//! Small reference models used by the examples, the bundled model files and the tests.

use std::f64::consts::PI;

use super::{ChannelTemplate, ModelBuilder, Scalar, SystemModel};
use crate::error::Result;

fn wideband(dos: f64) -> ChannelTemplate {
    ChannelTemplate::Wideband { dos: dos.into() }
}

fn scaled(factors: &[f64], name: &str) -> Vec<Scalar> {
    factors.iter().map(|&f| Scalar::scaled(f, name)).collect()
}

/// Two levels at `∓d` coupled with strength `$g` to one wideband channel of
/// density `1/π`. The eigenvalues coalesce at `g = √d`.
pub fn two_level_trapping(d: f64, g: f64) -> Result<SystemModel> {
    ModelBuilder::new(2)
        .level(0, Scalar::scaled(-1.0, "d"))
        .level(1, Scalar::param("d"))
        .channel(wideband(1.0 / PI), scaled(&[1.0, 1.0], "g"))
        .param("d", d)
        .param("g", g)
        .build()
}

/// One level at `$e0` coupled with `$g` to a wideband channel of density `dos`.
pub fn single_level(e0: f64, g: f64, dos: f64) -> Result<SystemModel> {
    ModelBuilder::new(1)
        .level(0, Scalar::param("e0"))
        .channel(wideband(dos), vec![Scalar::param("g")])
        .param("e0", e0)
        .param("g", g)
        .build()
}

/// One level at `$e0` inside a flat band `[lower, upper]` of density `dos`.
pub fn single_level_flatband(e0: f64, g: f64, lower: f64, upper: f64, dos: f64) -> Result<SystemModel> {
    ModelBuilder::new(1)
        .level(0, Scalar::param("e0"))
        .channel(
            ChannelTemplate::FlatBand { lower: lower.into(), upper: upper.into(), dos: dos.into() },
            vec![Scalar::param("g")],
        )
        .param("e0", e0)
        .param("g", g)
        .build()
}

/// Level `0` fixed at `e1`, level `1` at `$e2`, and two wideband channels of
/// density `1/(2π)` each. Channel 0 couples with `$g·(1, 1)`, channel 1 with
/// `$g·(1, asymmetry)`. With `asymmetry = 1` both channels see the same
/// combination and a bound state in the continuum appears at `e2 = e1`; any
/// other value leaves two independent decoupling conditions that one state
/// cannot satisfy, so the narrowest width stays finite.
pub fn two_level_bic(e1: f64, e2: f64, g: f64, asymmetry: f64) -> Result<SystemModel> {
    ModelBuilder::new(2)
        .level(0, e1)
        .level(1, Scalar::param("e2"))
        .channel(wideband(0.5 / PI), scaled(&[1.0, 1.0], "g"))
        .channel(wideband(0.5 / PI), scaled(&[1.0, asymmetry], "g"))
        .param("e2", e2)
        .param("g", g)
        .build()
}

/// Four equally spaced levels between two wideband leads with sign-alternating
/// right-lead couplings; transmission and wave-function rigidity anticorrelate
/// across the band.
pub fn four_level_crossover(g: f64) -> Result<SystemModel> {
    ModelBuilder::new(4)
        .levels(&[-1.5, -0.5, 0.5, 1.5])
        .channel(wideband(1.0 / PI), scaled(&[1.0, 0.8, 1.1, 0.9], "g"))
        .channel(wideband(1.0 / PI), scaled(&[0.9, -1.1, 1.0, -0.8], "g"))
        .param("g", g)
        .build()
}

/// Six levels at `−2.5, −1.5, …, 2.5` with unequal couplings `$g·(…)` to one
/// wideband channel of density `1/π`.
pub fn six_level_saturation(g: f64) -> Result<SystemModel> {
    ModelBuilder::new(6)
        .levels(&[-2.5, -1.5, -0.5, 0.5, 1.5, 2.5])
        .channel(wideband(1.0 / PI), scaled(&[1.0, 0.9, 1.1, 0.8, 1.2, 1.0], "g"))
        .param("g", g)
        .build()
}
