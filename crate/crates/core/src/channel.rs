//! Slot-level uplink channel.
//!
//! A Gaussian channel delivers every slot at the rate matched to its SNR. A
//! fading channel transmits at a fixed rate and loses the whole slot with
//! probability `p_o`, independently across slots.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ChannelModel {
    Gaussian {
        bandwidth_hz: f64,
        slot_s: f64,
        /// Receive SNR `rho * g0`, linear scale.
        snr: f64,
        bits_per_feature: f64,
    },
    Fading {
        features_per_slot: usize,
        outage_prob: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SlotOutcome {
    Delivered,
    Outage,
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

impl ChannelModel {
    pub fn gaussian(bandwidth_hz: f64, slot_s: f64, snr: f64, bits_per_feature: f64) -> Result<Self> {
        let ch = ChannelModel::Gaussian {
            bandwidth_hz,
            slot_s,
            snr,
            bits_per_feature,
        };
        ch.validate()?;
        Ok(ch)
    }

    pub fn fading(features_per_slot: usize, outage_prob: f64) -> Result<Self> {
        let ch = ChannelModel::Fading {
            features_per_slot,
            outage_prob,
        };
        ch.validate()?;
        Ok(ch)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            ChannelModel::Gaussian {
                bandwidth_hz,
                slot_s,
                snr,
                bits_per_feature,
            } => {
                for (name, v) in [
                    ("bandwidth", bandwidth_hz),
                    ("slot duration", slot_s),
                    ("bits per feature", bits_per_feature),
                ] {
                    if !(v.is_finite() && v > 0.0) {
                        return Err(Error::InvalidChannel(format!("{name} must be positive, got {v}")));
                    }
                }
                if !(snr.is_finite() && snr >= 0.0) {
                    return Err(Error::InvalidChannel(format!("snr must be non-negative, got {snr}")));
                }
            }
            ChannelModel::Fading { outage_prob, .. } => {
                if !(0.0..1.0).contains(&outage_prob) {
                    return Err(Error::InvalidChannel(format!(
                        "outage probability must lie in [0, 1), got {outage_prob}"
                    )));
                }
            }
        }
        self.features_per_slot().map(|_| ())
    }

    /// `Y0`: `floor(B log2(1 + snr) T / Q)` for a Gaussian channel, the
    /// configured rate for a fading one. Zero is a configuration error.
    pub fn features_per_slot(&self) -> Result<usize> {
        let y0 = match *self {
            ChannelModel::Gaussian {
                bandwidth_hz,
                slot_s,
                snr,
                bits_per_feature,
            } => {
                let rate = bandwidth_hz * (1.0 + snr).log2();
                (rate * slot_s / bits_per_feature).floor() as usize
            }
            ChannelModel::Fading {
                features_per_slot, ..
            } => features_per_slot,
        };
        if y0 == 0 {
            return Err(Error::InvalidChannel(
                "channel carries zero features per slot".into(),
            ));
        }
        Ok(y0)
    }

    pub fn outage_prob(&self) -> f64 {
        match *self {
            ChannelModel::Gaussian { .. } => 0.0,
            ChannelModel::Fading { outage_prob, .. } => outage_prob,
        }
    }

    pub fn is_fading(&self) -> bool {
        matches!(self, ChannelModel::Fading { .. })
    }

    pub fn slot_outcome<R: Rng + ?Sized>(&self, rng: &mut R) -> SlotOutcome {
        match *self {
            ChannelModel::Gaussian { .. } => SlotOutcome::Delivered,
            ChannelModel::Fading { outage_prob, .. } => {
                if outage_prob > 0.0 && rng.random::<f64>() < outage_prob {
                    SlotOutcome::Outage
                } else {
                    SlotOutcome::Delivered
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn operating_point_gives_five() {
        let ch = ChannelModel::gaussian(20_000.0, 0.01, db_to_linear(4.0), 64.0).unwrap();
        assert_eq!(ch.features_per_slot().unwrap(), 5);
    }

    #[test]
    fn snr_three_gives_six() {
        let ch = ChannelModel::gaussian(20_000.0, 0.01, 3.0, 64.0).unwrap();
        assert_eq!(ch.features_per_slot().unwrap(), 6);
    }

    #[test]
    fn zero_rate_rejected() {
        assert!(ChannelModel::gaussian(20_000.0, 0.01, 0.0, 64.0).is_err());
        assert!(ChannelModel::fading(0, 0.1).is_err());
        assert!(ChannelModel::fading(5, 1.0).is_err());
        assert!(ChannelModel::gaussian(-1.0, 0.01, 3.0, 64.0).is_err());
    }

    #[test]
    fn lossless_channels_always_deliver() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = ChannelModel::gaussian(20_000.0, 0.01, 3.0, 64.0).unwrap();
        let f = ChannelModel::fading(5, 0.0).unwrap();
        for _ in 0..1000 {
            assert_eq!(g.slot_outcome(&mut rng), SlotOutcome::Delivered);
            assert_eq!(f.slot_outcome(&mut rng), SlotOutcome::Delivered);
        }
    }
}
