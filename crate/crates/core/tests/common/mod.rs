#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use resonance_lab::{Channel, SystemModel};

/// Random channel of any kind; bands straddle the energy window `[-3, 3]`.
pub fn random_channel(rng: &mut ChaCha8Rng, kinds: &[u8]) -> Channel {
    match kinds[rng.gen_range(0..kinds.len())] {
        0 => Channel::Wideband { dos: rng.gen_range(0.05..1.0) },
        1 => {
            let lower = rng.gen_range(-4.0..-1.0);
            Channel::FlatBand { lower, upper: rng.gen_range(1.0..4.0), dos: rng.gen_range(0.05..1.0) }
        }
        _ => Channel::ChainLead { threshold: rng.gen_range(-3.0..-1.0), hopping: rng.gen_range(0.5..1.5) },
    }
}

/// Symmetric `H_B` with entries in `[-2, 2]` and couplings whose overall scale is
/// log-uniform in `[0.05, 2]`, so isolated and strongly overlapping regimes both occur.
pub fn random_model(rng: &mut ChaCha8Rng, max_levels: usize, channels: std::ops::RangeInclusive<usize>, kinds: &[u8]) -> SystemModel {
    let n = rng.gen_range(1..=max_levels);
    let c = rng.gen_range(channels);
    let mut hb = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i..n {
            let v = if i == j { rng.gen_range(-2.0..2.0) } else { rng.gen_range(-0.5..0.5) };
            hb[i][j] = v;
            hb[j][i] = v;
        }
    }
    let scale = (rng.gen_range(0.05f64.ln()..2.0f64.ln())).exp();
    let couplings: Vec<Vec<f64>> = (0..n).map(|_| (0..c).map(|_| scale * rng.gen_range(-1.0..1.0)).collect()).collect();
    let chans = (0..c).map(|_| random_channel(rng, kinds)).collect();
    SystemModel::from_parts(&hb, chans, &couplings).expect("valid random model")
}

pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}
