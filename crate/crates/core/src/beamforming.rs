//! MISO beamforming with a finite codebook.
//!
//! The receiver picks the codeword with the largest `|<phi_i, h>|^2`, which is
//! the codeword closest to the channel line in chordal distance. Distortion is
//! the mean squared chordal distance between a random channel line and its
//! quantized codeword, estimated by Monte Carlo.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frames::{chordal_distance, inner_product, norm, Frame, ZERO_COLUMN_TOL};
use crate::solver::child_seed;

/// Samples per RNG substream. Block `b` always draws from `child_seed(seed, b)`,
/// so the estimate does not depend on how blocks are spread over workers.
pub const BLOCK: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelModel {
    /// Transmit antennas.
    pub d: usize,
    /// Noise variance `sigma`.
    pub noise_var: f64,
    /// Mean symbol energy `E_s`.
    pub symbol_energy: f64,
}

impl ChannelModel {
    pub fn new(d: usize, noise_var: f64, symbol_energy: f64) -> Result<Self> {
        if d == 0 || !(noise_var > 0.0) || !(symbol_energy > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "channel model needs d >= 1, sigma > 0, E_s > 0; got d={d}, sigma={noise_var}, E_s={symbol_energy}"
            )));
        }
        Ok(ChannelModel {
            d,
            noise_var,
            symbol_energy,
        })
    }
}

fn check_channel(codebook: &Frame, h: &[f64]) -> Result<f64> {
    if h.len() != 2 * codebook.d() {
        return Err(Error::DimensionMismatch {
            expected: 2 * codebook.d(),
            found: h.len(),
        });
    }
    let nrm = norm(h);
    if nrm < ZERO_COLUMN_TOL {
        return Err(Error::ZeroChannel { norm: nrm });
    }
    Ok(nrm)
}

/// Zero-based index of the codeword maximizing `|<phi_i, h>|^2`; the smallest
/// index wins ties.
pub fn quantize(codebook: &Frame, h: &[f64]) -> Result<usize> {
    check_channel(codebook, h)?;
    Ok(argmax_gain(codebook, h).0)
}

/// Same selection made by minimizing the chordal distance to `h / |h|`.
pub fn quantize_chordal(codebook: &Frame, h: &[f64]) -> Result<usize> {
    let nrm = check_channel(codebook, h)?;
    let unit: Vec<f64> = h.iter().map(|v| v / nrm).collect();
    let mut best = (0, f64::INFINITY);
    for i in 0..codebook.n() {
        let dist = chordal_distance(codebook.column(i), &unit)?;
        if dist < best.1 {
            best = (i, dist);
        }
    }
    Ok(best.0)
}

fn argmax_gain(codebook: &Frame, h: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::NEG_INFINITY);
    for i in 0..codebook.n() {
        let (re, im) = inner_product(codebook.column(i), h);
        let gain = re * re + im * im;
        if gain > best.1 {
            best = (i, gain);
        }
    }
    best
}

/// `|<beam, h>|^2 E_s / sigma`.
pub fn snr(beam: &[f64], h: &[f64], model: &ChannelModel) -> Result<f64> {
    if beam.len() != h.len() {
        return Err(Error::DimensionMismatch {
            expected: beam.len(),
            found: h.len(),
        });
    }
    let (re, im) = inner_product(beam, h);
    Ok((re * re + im * im) * model.symbol_energy / model.noise_var)
}

/// Draws a channel with i.i.d. unit-variance circular complex Gaussian entries.
pub fn random_channel<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<f64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    (0..2 * d).map(|_| s * rng.sample::<f64, _>(StandardNormal)).collect()
}

/// Squared chordal distance from the line of `h` to its quantized codeword,
/// `1 - max_i |<phi_i, h/|h|>|^2`, together with the unnormalized best gain.
pub fn quantization_error(codebook: &Frame, h: &[f64]) -> Result<(f64, f64)> {
    let nrm = check_channel(codebook, h)?;
    let (_, gain) = argmax_gain(codebook, h);
    Ok(((1.0 - gain / (nrm * nrm)).max(0.0), gain))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistortionEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub samples: usize,
    /// Mean of `max_i |<phi_i, h>|^2` over the same channels; multiply by
    /// `E_s / sigma` for the mean SNR after beam selection.
    pub mean_gain: f64,
}

#[derive(Default, Clone, Copy)]
struct Sums {
    d: f64,
    d2: f64,
    gain: f64,
}

/// Monte Carlo estimate of the mean squared chordal distortion.
pub fn distortion_mc(codebook: &Frame, samples: usize, seed: u64) -> Result<DistortionEstimate> {
    if samples == 0 {
        return Err(Error::InvalidConfig("samples must be at least 1".into()));
    }
    let blocks = samples.div_ceil(BLOCK);
    let d = codebook.d();
    let partial: Vec<Sums> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(child_seed(seed, b as u64));
            let count = BLOCK.min(samples - b * BLOCK);
            let mut s = Sums::default();
            let mut drawn = 0;
            while drawn < count {
                let h = random_channel(d, &mut rng);
                // A zero draw has probability zero; skip it if it happens.
                if let Ok((dist, gain)) = quantization_error(codebook, &h) {
                    s.d += dist;
                    s.d2 += dist * dist;
                    s.gain += gain;
                    drawn += 1;
                }
            }
            s
        })
        .collect();
    let total = partial.iter().fold(Sums::default(), |acc, s| Sums {
        d: acc.d + s.d,
        d2: acc.d2 + s.d2,
        gain: acc.gain + s.gain,
    });
    let n = samples as f64;
    let mean = total.d / n;
    let var = if samples > 1 {
        ((total.d2 - n * mean * mean) / (n - 1.0)).max(0.0)
    } else {
        0.0
    };
    Ok(DistortionEstimate {
        estimate: mean,
        std_error: (var / n).sqrt(),
        samples,
        mean_gain: total.gain / n,
    })
}
