//! Full experiment description.

use serde::{Deserialize, Serialize};

use crate::detector::{composite_channel, CompositeChannel};
use crate::error::{Error, Result};
use crate::estimation::EstimationMethod;
use crate::geometry::{friis_channels, path_distances, ArrayAxis, ArrayGeometry, ChannelPair, DistanceSet, Point2};
use crate::signal::{snr_to_amplitude, AmbientKind, BdAlphabet};
use crate::special::Probability;

/// Minimum number of Monte-Carlo trials in a run.
pub const MIN_TRIALS: u64 = 100;

/// How the receiver learns its beamformers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CsiMode {
    Perfect,
    InvCov,
    Svd,
    PowerIter,
}

impl CsiMode {
    pub fn method(&self) -> Option<EstimationMethod> {
        match self {
            CsiMode::Perfect => None,
            CsiMode::InvCov => Some(EstimationMethod::InvCov),
            CsiMode::Svd => Some(EstimationMethod::Svd),
            CsiMode::PowerIter => Some(EstimationMethod::PowerIter),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            CsiMode::Perfect => "perfect",
            CsiMode::InvCov => "invcov",
            CsiMode::Svd => "svd",
            CsiMode::PowerIter => "poweriter",
        }
    }

    pub fn parse(s: &str) -> Option<CsiMode> {
        match s {
            "perfect" => Some(CsiMode::Perfect),
            "invcov" => Some(CsiMode::InvCov),
            "svd" => Some(CsiMode::Svd),
            "poweriter" => Some(CsiMode::PowerIter),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ReceiverKind {
    Optimum,
    /// Energy detector with its threshold set for the false-alarm target `pf`.
    Simplified { pf: Probability },
}

impl ReceiverKind {
    pub fn name(&self) -> &'static str {
        match self {
            ReceiverKind::Optimum => "optimum",
            ReceiverKind::Simplified { .. } => "simplified",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub n_r: usize,
    /// Antenna spacing in wavelengths.
    pub spacing: f64,
    /// Tx to reference-antenna distance in wavelengths.
    pub d0: f64,
    pub bd_pos: Point2,
    pub axis: ArrayAxis,
    pub alphabet: BdAlphabet,
    pub ambient: AmbientKind,
    /// Legacy-system SNR at the reference antenna; `-inf` silences the source.
    pub gamma_db: f64,
    /// Preamble length `L` (per BD symbol).
    pub preamble_len: usize,
    /// Data symbols per coherence block; estimated beamformers are refreshed
    /// every block.
    pub block_len: usize,
    pub csi: CsiMode,
    pub receiver: ReceiverKind,
    pub seed: u64,
    pub trials: u64,
    /// Rescale `(alpha, beta)` to `||alpha|| = 1` (and `|s|` accordingly).
    pub normalize_channels: bool,
}

impl Default for Scenario {
    /// Sixteen antennas at half-wavelength spacing, `d0 = 80`, the BD four
    /// wavelengths from the reference antenna, BPSK backscatter over QPSK at
    /// 28 dB, perfect CSI and the optimum receiver.
    fn default() -> Self {
        let h = 4.0 / std::f64::consts::SQRT_2;
        Scenario {
            n_r: 16,
            spacing: 0.5,
            d0: 80.0,
            bd_pos: Point2::new(40.0 - h, h),
            axis: ArrayAxis::Broadside,
            alphabet: BdAlphabet::bpsk(),
            ambient: AmbientKind::qpsk(),
            gamma_db: 28.0,
            preamble_len: 30,
            block_len: 1000,
            csi: CsiMode::Perfect,
            receiver: ReceiverKind::Optimum,
            seed: 1,
            trials: 100_000,
            normalize_channels: false,
        }
    }
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        self.geometry()?;
        self.distances()?;
        if self.gamma_db.is_nan() || self.gamma_db == f64::INFINITY {
            return Err(Error::InvalidParameter(format!("gamma_db must be finite or -inf, got {}", self.gamma_db)));
        }
        if self.trials < MIN_TRIALS {
            return Err(Error::InvalidParameter(format!(
                "need at least {MIN_TRIALS} trials, got {}",
                self.trials
            )));
        }
        if self.block_len == 0 {
            return Err(Error::InvalidParameter("block length must be >= 1".into()));
        }
        if self.csi != CsiMode::Perfect && self.preamble_len == 0 {
            return Err(Error::InvalidParameter("estimated CSI needs a preamble length >= 1".into()));
        }
        if let AmbientKind::ConstantModulus { order } = self.ambient {
            if order < 2 {
                return Err(Error::InvalidParameter(format!("PSK order must be >= 2, got {order}")));
            }
        }
        if let ReceiverKind::Simplified { pf } = self.receiver {
            if pf.value() == 0.0 {
                return Err(Error::InvalidParameter("false-alarm target must be > 0".into()));
            }
        }
        Ok(())
    }

    pub fn geometry(&self) -> Result<ArrayGeometry> {
        ArrayGeometry::new(self.n_r, self.spacing, self.d0, self.axis)
    }

    pub fn distances(&self) -> Result<DistanceSet> {
        path_distances(&self.geometry()?, self.bd_pos)
    }

    /// Raw Friis channels (never normalized).
    pub fn friis(&self) -> Result<ChannelPair> {
        Ok(friis_channels(&self.distances()?))
    }

    /// Channels used by the receiver, normalized if requested.
    pub fn channels(&self) -> Result<ChannelPair> {
        let ch = self.friis()?;
        Ok(if self.normalize_channels { ch.normalized().0 } else { ch })
    }

    /// `|s|` matching the channels returned by [`Scenario::channels`].
    pub fn s_amplitude(&self) -> f64 {
        if self.gamma_db == f64::NEG_INFINITY {
            return 0.0;
        }
        let amp = snr_to_amplitude(self.gamma_db, self.d0);
        if self.normalize_channels {
            match self.friis() {
                Ok(ch) => amp * ch.normalized().1,
                Err(_) => amp,
            }
        } else {
            amp
        }
    }

    pub fn composite(&self) -> Result<CompositeChannel> {
        composite_channel(&self.channels()?, &self.alphabet)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics::noncentrality_theta;

    #[test]
    fn default_is_valid() {
        let s = Scenario::default();
        s.validate().unwrap();
        assert!((s.distances().unwrap().d1 - 4.0).abs() < 1e-12);
    }

    #[test]
    fn validation_errors() {
        let mut s = Scenario { trials: 10, ..Scenario::default() };
        assert!(s.validate().is_err());
        s.trials = 1000;
        s.n_r = 1;
        assert!(s.validate().is_err());
        s.n_r = 4;
        s.csi = CsiMode::Svd;
        s.preamble_len = 0;
        assert!(s.validate().is_err());
    }

    #[test]
    fn normalization_keeps_theta() {
        let a = Scenario::default();
        let b = Scenario { normalize_channels: true, ..Scenario::default() };
        let ta = noncentrality_theta(&a.channels().unwrap(), &a.alphabet, a.s_amplitude().powi(2)).unwrap();
        let tb = noncentrality_theta(&b.channels().unwrap(), &b.alphabet, b.s_amplitude().powi(2)).unwrap();
        assert!(((ta - tb) / ta).abs() < 1e-12);
    }

    #[test]
    fn csi_names_round_trip() {
        for m in [CsiMode::Perfect, CsiMode::InvCov, CsiMode::Svd, CsiMode::PowerIter] {
            assert_eq!(CsiMode::parse(m.name()), Some(m));
        }
        assert_eq!(CsiMode::parse("nope"), None);
    }
}
