//! Physical system definition: closed-system Hamiltonian, decay channels and
//! level–channel couplings, plus assembly of the energy-dependent effective
//! Hamiltonian.
//!
//! A [`SystemModel`] is immutable. Every numeric entry is a [`Scalar`] that is
//! either a literal or a reference to a named control parameter, so a sweep
//! produces new models through [`SystemModel::with_param`] without touching
//! the original.

mod channel;
mod file;
mod heff;
pub mod presets;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use faer::{Mat, MatRef};

pub use channel::{Channel, ChannelKind};
pub use file::{parse_model, read_model};
pub use heff::{build_h_eff, coupling_vector, CouplingVector, EffectiveHamiltonian};

use crate::error::{Error, Result};

/// A numeric entry: a literal or `factor · $name`.
#[derive(Clone, Debug, PartialEq)]
pub enum Scalar {
    Value(f64),
    Param { name: String, factor: f64 },
}

impl Scalar {
    pub fn param(name: impl Into<String>) -> Self {
        Scalar::Param { name: name.into(), factor: 1.0 }
    }

    pub fn scaled(factor: f64, name: impl Into<String>) -> Self {
        Scalar::Param { name: name.into(), factor }
    }

    pub fn resolve(&self, params: &BTreeMap<String, f64>) -> Result<f64> {
        match self {
            Scalar::Value(v) => Ok(*v),
            Scalar::Param { name, factor } => params
                .get(name)
                .map(|v| factor * v)
                .ok_or_else(|| Error::UnknownParameter(name.clone())),
        }
    }

    fn times(&self, g: f64) -> Scalar {
        match self {
            Scalar::Value(v) => Scalar::Value(v * g),
            Scalar::Param { name, factor } => Scalar::Param { name: name.clone(), factor: factor * g },
        }
    }

    /// Parses `1.5`, `$g`, `-$g` or `0.9*$g`.
    pub fn parse(text: &str) -> std::result::Result<Scalar, String> {
        let s = text.trim();
        if let Ok(v) = s.parse::<f64>() {
            return Ok(Scalar::Value(v));
        }
        let (factor, rest) = match s.split_once('*') {
            Some((lhs, rhs)) => {
                let f = lhs
                    .trim()
                    .parse::<f64>()
                    .map_err(|_| format!("`{text}`: expected `<number>*$name`"))?;
                (f, rhs.trim())
            }
            None => match s.strip_prefix('-') {
                Some(rest) => (-1.0, rest.trim()),
                None => (1.0, s),
            },
        };
        let name = rest
            .strip_prefix('$')
            .ok_or_else(|| format!("`{text}` is neither a number nor a `$name` reference"))?;
        if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
            return Err(format!("`{text}`: invalid parameter name"));
        }
        Ok(Scalar::Param { name: name.to_string(), factor })
    }
}

impl From<f64> for Scalar {
    fn from(v: f64) -> Self {
        Scalar::Value(v)
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Value(v) => write!(f, "{v}"),
            Scalar::Param { name, factor } if *factor == 1.0 => write!(f, "${name}"),
            Scalar::Param { name, factor } => write!(f, "{factor}*${name}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ChannelTemplate {
    Wideband { dos: Scalar },
    FlatBand { lower: Scalar, upper: Scalar, dos: Scalar },
    ChainLead { threshold: Scalar, hopping: Scalar },
}

impl ChannelTemplate {
    fn resolve(&self, p: &BTreeMap<String, f64>) -> Result<Channel> {
        Ok(match self {
            ChannelTemplate::Wideband { dos } => Channel::Wideband { dos: dos.resolve(p)? },
            ChannelTemplate::FlatBand { lower, upper, dos } => Channel::FlatBand {
                lower: lower.resolve(p)?,
                upper: upper.resolve(p)?,
                dos: dos.resolve(p)?,
            },
            ChannelTemplate::ChainLead { threshold, hopping } => Channel::ChainLead {
                threshold: threshold.resolve(p)?,
                hopping: hopping.resolve(p)?,
            },
        })
    }
}

impl From<Channel> for ChannelTemplate {
    fn from(ch: Channel) -> Self {
        match ch {
            Channel::Wideband { dos } => ChannelTemplate::Wideband { dos: dos.into() },
            Channel::FlatBand { lower, upper, dos } => ChannelTemplate::FlatBand {
                lower: lower.into(),
                upper: upper.into(),
                dos: dos.into(),
            },
            Channel::ChainLead { threshold, hopping } => ChannelTemplate::ChainLead {
                threshold: threshold.into(),
                hopping: hopping.into(),
            },
        }
    }
}

/// Unresolved model: entries may still reference parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelTemplate {
    pub size: usize,
    /// Upper-triangle entries `(i, j, value)` with `i ≤ j`; mirrored on resolution.
    pub hamiltonian: BTreeMap<(usize, usize), Scalar>,
    pub channels: Vec<ChannelTemplate>,
    /// One column of level couplings per channel (`couplings[c][λ]`).
    pub couplings: Vec<Vec<Scalar>>,
}

/// The closed system `H_B`, its channels and couplings, at fixed parameter values.
#[derive(Clone, Debug)]
pub struct SystemModel {
    template: Arc<ModelTemplate>,
    params: BTreeMap<String, f64>,
    hb: Mat<f64>,
    channels: Vec<Channel>,
    couplings: Mat<f64>,
}

impl SystemModel {
    pub fn builder(size: usize) -> ModelBuilder {
        ModelBuilder::new(size)
    }

    /// Builds a parameter-free model from dense data. `hb` is row-major `N×N`,
    /// `couplings` row-major `N×C`.
    pub fn from_parts(hb: &[Vec<f64>], channels: Vec<Channel>, couplings: &[Vec<f64>]) -> Result<Self> {
        let n = hb.len();
        let mut b = ModelBuilder::new(n);
        for (i, row) in hb.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidInput(format!("H_B row {i} has {} entries, expected {n}", row.len())));
            }
            for (j, &v) in row.iter().enumerate() {
                if hb[j][i] != v {
                    return Err(Error::InvalidInput(format!("H_B is not symmetric at ({i}, {j})")));
                }
                if j >= i && (v != 0.0 || i == j) {
                    b = b.entry(i, j, v);
                }
            }
        }
        if couplings.len() != n {
            return Err(Error::InvalidInput(format!("coupling matrix has {} rows, expected {n}", couplings.len())));
        }
        for (c, ch) in channels.into_iter().enumerate() {
            let col = couplings
                .iter()
                .map(|row| row.get(c).copied().map(Scalar::Value))
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| Error::InvalidInput(format!("coupling matrix lacks column {c}")))?;
            b = b.channel(ch.into(), col);
        }
        b.build()
    }

    pub fn from_template(template: ModelTemplate, params: BTreeMap<String, f64>) -> Result<Self> {
        Self::resolve(Arc::new(template), params)
    }

    fn resolve(template: Arc<ModelTemplate>, params: BTreeMap<String, f64>) -> Result<Self> {
        let n = template.size;
        if n == 0 {
            return Err(Error::InvalidInput("model needs at least one level".into()));
        }
        if template.channels.is_empty() {
            return Err(Error::InvalidInput("model needs at least one channel".into()));
        }
        if template.couplings.len() != template.channels.len() {
            return Err(Error::InvalidInput(format!(
                "{} coupling columns for {} channels",
                template.couplings.len(),
                template.channels.len()
            )));
        }
        for (name, v) in &params {
            if !v.is_finite() {
                return Err(Error::InvalidInput(format!("parameter `{name}` = {v} is not finite")));
            }
        }

        let mut hb = Mat::<f64>::zeros(n, n);
        for (&(i, j), s) in &template.hamiltonian {
            if i >= n || j >= n {
                return Err(Error::InvalidInput(format!("H_B entry ({i}, {j}) outside {n}×{n}")));
            }
            let v = s.resolve(&params)?;
            if !v.is_finite() {
                return Err(Error::InvalidInput(format!("H_B entry ({i}, {j}) is not finite")));
            }
            hb[(i, j)] = v;
            hb[(j, i)] = v;
        }

        let channels = template
            .channels
            .iter()
            .map(|c| c.resolve(&params))
            .collect::<Result<Vec<_>>>()?;
        for ch in &channels {
            ch.validate()?;
        }

        let mut couplings = Mat::<f64>::zeros(n, channels.len());
        for (c, col) in template.couplings.iter().enumerate() {
            if col.len() != n {
                return Err(Error::InvalidInput(format!(
                    "channel {c} has {} couplings, expected {n}",
                    col.len()
                )));
            }
            for (l, s) in col.iter().enumerate() {
                let v = s.resolve(&params)?;
                if !v.is_finite() {
                    return Err(Error::InvalidInput(format!("coupling ({l}, {c}) is not finite")));
                }
                couplings[(l, c)] = v;
            }
        }

        Ok(SystemModel { template, params, hb, channels, couplings })
    }

    pub fn n_levels(&self) -> usize {
        self.hb.nrows()
    }

    pub fn n_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn hb(&self) -> MatRef<'_, f64> {
        self.hb.as_ref()
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    /// `N×C` matrix of coupling strengths `γ_λC`.
    pub fn couplings(&self) -> MatRef<'_, f64> {
        self.couplings.as_ref()
    }

    pub fn coupling_column(&self, channel: usize) -> Vec<f64> {
        (0..self.n_levels()).map(|l| self.couplings[(l, channel)]).collect()
    }

    pub fn params(&self) -> &BTreeMap<String, f64> {
        &self.params
    }

    pub fn param(&self, name: &str) -> Option<f64> {
        self.params.get(name).copied()
    }

    pub fn template(&self) -> &ModelTemplate {
        &self.template
    }

    /// Same model with one control parameter replaced.
    pub fn with_param(&self, name: &str, value: f64) -> Result<SystemModel> {
        if !self.params.contains_key(name) {
            return Err(Error::UnknownParameter(name.to_string()));
        }
        let mut params = self.params.clone();
        params.insert(name.to_string(), value);
        Self::resolve(Arc::clone(&self.template), params)
    }

    /// Same model with every coupling multiplied by `g`.
    pub fn with_coupling_scale(&self, g: f64) -> Result<SystemModel> {
        let mut t = (*self.template).clone();
        for col in &mut t.couplings {
            for s in col.iter_mut() {
                *s = s.times(g);
            }
        }
        Self::resolve(Arc::new(t), self.params.clone())
    }

    /// `Σ_C dos_C · |γ_C|²` over wideband channels; the total width is `2π` times this.
    pub fn wideband_width_sum(&self) -> f64 {
        self.channels
            .iter()
            .enumerate()
            .filter_map(|(c, ch)| match ch {
                Channel::Wideband { dos } => Some(dos * self.coupling_column(c).iter().map(|g| g * g).sum::<f64>()),
                _ => None,
            })
            .sum()
    }

    /// True when every coupling vanishes.
    pub fn is_decoupled(&self) -> bool {
        (0..self.n_levels()).all(|l| (0..self.n_channels()).all(|c| self.couplings[(l, c)] == 0.0))
    }
}

#[derive(Clone, Debug, Default)]
pub struct ModelBuilder {
    size: usize,
    entries: BTreeMap<(usize, usize), Scalar>,
    channels: Vec<ChannelTemplate>,
    couplings: Vec<Vec<Scalar>>,
    params: BTreeMap<String, f64>,
}

impl ModelBuilder {
    pub fn new(size: usize) -> Self {
        ModelBuilder { size, ..Default::default() }
    }

    /// Sets `H_B[i][j] = H_B[j][i]`.
    pub fn entry(mut self, i: usize, j: usize, value: impl Into<Scalar>) -> Self {
        self.entries.insert((i.min(j), i.max(j)), value.into());
        self
    }

    pub fn level(self, i: usize, energy: impl Into<Scalar>) -> Self {
        self.entry(i, i, energy)
    }

    pub fn levels(mut self, energies: &[f64]) -> Self {
        for (i, &e) in energies.iter().enumerate() {
            self = self.level(i, e);
        }
        self
    }

    pub fn channel(mut self, channel: ChannelTemplate, couplings: Vec<Scalar>) -> Self {
        self.channels.push(channel);
        self.couplings.push(couplings);
        self
    }

    pub fn param(mut self, name: impl Into<String>, value: f64) -> Self {
        self.params.insert(name.into(), value);
        self
    }

    pub fn template(&self) -> ModelTemplate {
        ModelTemplate {
            size: self.size,
            hamiltonian: self.entries.clone(),
            channels: self.channels.clone(),
            couplings: self.couplings.clone(),
        }
    }

    pub fn build(self) -> Result<SystemModel> {
        let template = self.template();
        SystemModel::from_template(template, self.params)
    }
}
