//! BPSK modulation and the binary-input AWGN channel.
//!
//! Bits map to antipodal symbols `x = 1 - 2c`, so bit 0 becomes +1 and bit 1
//! becomes -1. The channel adds independent Gaussian noise of variance
//! `sigma^2` per component, where the noise scale follows from the SNR in dB
//! and the design rate: `sigma^2 = 10^(-snr/10) / (2 * rate)`. With this
//! normalization the SNR is the energy per information bit over the one-sided
//! noise density, and the exact log-likelihood ratio is `2y / sigma^2`.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ChannelError {
    #[error("design rate must be positive, got {rate}")]
    NonPositiveRate { rate: f64 },
    #[error("SNR must be finite, got {snr_db}")]
    NonFiniteSnr { snr_db: f64 },
}

/// Antipodal BPSK map `c -> 1 - 2c` applied to the low bit of each entry.
pub fn modulate(bits: &[u8]) -> Vec<f64> {
    bits.iter().map(|&b| 1.0 - 2.0 * f64::from(b & 1)).collect()
}

/// Inverse of [`modulate`] on noiseless symbols: `x -> (1 - x) / 2`.
pub fn demap(symbols: &[f64]) -> Vec<u8> {
    symbols.iter().map(|&x| ((1.0 - x) / 2.0) as u8).collect()
}

/// Noise scale for a given SNR (dB) and code rate:
/// `sigma = sqrt(10^(-snr/10) / (2 * rate))`.
pub fn snr_to_sigma(snr_db: f64, rate: f64) -> Result<f64, ChannelError> {
    if !snr_db.is_finite() {
        return Err(ChannelError::NonFiniteSnr { snr_db });
    }
    if rate <= 0.0 || !rate.is_finite() {
        return Err(ChannelError::NonPositiveRate { rate });
    }
    Ok((10f64.powf(-snr_db / 10.0) / (2.0 * rate)).sqrt())
}

/// Log-likelihood ratio conventions for turning received values into LLRs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LlrMode {
    /// `2y / sigma^2`: exact for per-component noise variance `sigma^2`,
    /// which is what [`transmit`] produces.
    SigmaSquared,
    /// `4y / sigma^2`: exact if the per-component variance were
    /// `sigma^2 / 2`; kept so the two normalizations can be compared.
    HalfSigmaSquared,
}

/// AWGN channel at a fixed operating point.
#[derive(Debug, Clone, Copy)]
pub struct ChannelConfig {
    pub snr_db: f64,
    pub rate: f64,
    pub sigma: f64,
}

impl ChannelConfig {
    pub fn new(snr_db: f64, rate: f64) -> Result<Self, ChannelError> {
        Ok(Self {
            snr_db,
            rate,
            sigma: snr_to_sigma(snr_db, rate)?,
        })
    }
}

/// One channel use: the received vector and its LLRs under
/// [`LlrMode::SigmaSquared`].
#[derive(Debug, Clone)]
pub struct ChannelOutput {
    pub received: Vec<f64>,
    pub llr: Vec<f64>,
}

impl ChannelOutput {
    /// LLRs under the requested convention.
    pub fn llr_with(&self, mode: LlrMode) -> Vec<f64> {
        match mode {
            LlrMode::SigmaSquared => self.llr.clone(),
            LlrMode::HalfSigmaSquared => self.llr.iter().map(|&l| 2.0 * l).collect(),
        }
    }
}

/// Sends modulated symbols through the channel, drawing one Gaussian sample
/// per symbol from `rng`.
pub fn transmit<R: Rng + ?Sized>(
    symbols: &[f64],
    config: &ChannelConfig,
    rng: &mut R,
) -> ChannelOutput {
    let noise = Normal::new(0.0, config.sigma).expect("finite positive noise scale");
    let received: Vec<f64> = symbols.iter().map(|&x| x + noise.sample(rng)).collect();
    let scale = 2.0 / (config.sigma * config.sigma);
    let llr = received.iter().map(|&y| scale * y).collect();
    ChannelOutput { received, llr }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn modulation_is_antipodal_and_invertible() {
        assert_eq!(modulate(&[0, 1, 1, 0]), vec![1.0, -1.0, -1.0, 1.0]);
        let bits = [0u8, 1, 1, 0, 1];
        assert_eq!(demap(&modulate(&bits)), bits);
    }

    #[test]
    fn sigma_matches_closed_form_values() {
        assert_relative_eq!(
            snr_to_sigma(4.0, 0.5).unwrap(),
            0.6309573444801932,
            max_relative = 1e-15
        );
        assert_relative_eq!(
            snr_to_sigma(2.5, 0.5).unwrap(),
            0.7498942093324559,
            max_relative = 1e-15
        );
        assert_eq!(snr_to_sigma(0.0, 0.5).unwrap(), 1.0);
    }

    #[test]
    fn rate_must_be_positive() {
        assert!(matches!(
            snr_to_sigma(4.0, 0.0),
            Err(ChannelError::NonPositiveRate { .. })
        ));
        assert!(matches!(
            snr_to_sigma(4.0, -0.5),
            Err(ChannelError::NonPositiveRate { .. })
        ));
    }

    #[test]
    fn llr_is_a_fixed_scaling_of_the_received_vector() {
        let config = ChannelConfig::new(2.0, 0.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let out = transmit(&modulate(&[0, 1, 0, 1]), &config, &mut rng);
        let scale = 2.0 / (config.sigma * config.sigma);
        for (y, l) in out.received.iter().zip(&out.llr) {
            assert_eq!(*l, scale * y);
        }
        let doubled = out.llr_with(LlrMode::HalfSigmaSquared);
        for (l, d) in out.llr.iter().zip(&doubled) {
            assert_eq!(*d, 2.0 * l);
        }
    }

    #[test]
    fn identical_seeds_replay_identical_noise() {
        let config = ChannelConfig::new(3.0, 0.5).unwrap();
        let symbols = modulate(&[0; 32]);
        let a = transmit(&symbols, &config, &mut ChaCha8Rng::seed_from_u64(17));
        let b = transmit(&symbols, &config, &mut ChaCha8Rng::seed_from_u64(17));
        assert_eq!(a.received, b.received);
    }

    #[test]
    fn noise_moments_are_plausible() {
        let config = ChannelConfig::new(0.0, 0.5).unwrap();
        let n = 200_000;
        let symbols = vec![1.0; n];
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let out = transmit(&symbols, &config, &mut rng);
        let mean: f64 = out.received.iter().sum::<f64>() / n as f64;
        let var: f64 = out
            .received
            .iter()
            .map(|y| (y - mean) * (y - mean))
            .sum::<f64>()
            / n as f64;
        assert_relative_eq!(mean, 1.0, epsilon = 0.01);
        assert_relative_eq!(var, 1.0, max_relative = 0.02);
    }
}
