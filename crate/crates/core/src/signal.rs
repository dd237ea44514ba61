//! Ambient-source symbols, BD symbols, noise and received samples.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::ChannelPair;
use crate::linalg::{CVector, C64};

/// Which of the two BD reflection states was sent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BdSymbol {
    X0,
    X1,
}

impl BdSymbol {
    pub fn other(self) -> BdSymbol {
        match self {
            BdSymbol::X0 => BdSymbol::X1,
            BdSymbol::X1 => BdSymbol::X0,
        }
    }
}

/// Binary reflection alphabet `{x0, x1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BdAlphabet {
    x0: C64,
    x1: C64,
}

impl BdAlphabet {
    pub fn new(x0: C64, x1: C64) -> Result<Self> {
        if x0 == x1 {
            return Err(Error::InvalidParameter(
                "BD alphabet symbols must differ".into(),
            ));
        }
        if x0.norm() > 1.0 || x1.norm() > 1.0 {
            return Err(Error::InvalidParameter(
                "a passive BD cannot reflect with |x| > 1".into(),
            ));
        }
        Ok(BdAlphabet { x0, x1 })
    }

    /// On-off keying `{0, 1}`.
    pub fn ook() -> Self {
        BdAlphabet {
            x0: C64::new(0.0, 0.0),
            x1: C64::new(1.0, 0.0),
        }
    }

    /// Binary phase-shift keying `{-1, +1}`.
    pub fn bpsk() -> Self {
        BdAlphabet {
            x0: C64::new(-1.0, 0.0),
            x1: C64::new(1.0, 0.0),
        }
    }

    pub fn x0(&self) -> C64 {
        self.x0
    }

    pub fn x1(&self) -> C64 {
        self.x1
    }

    pub fn value(&self, symbol: BdSymbol) -> C64 {
        match symbol {
            BdSymbol::X0 => self.x0,
            BdSymbol::X1 => self.x1,
        }
    }

    pub fn name(&self) -> String {
        if *self == BdAlphabet::ook() {
            "ook".into()
        } else if *self == BdAlphabet::bpsk() {
            "bpsk".into()
        } else {
            format!(
                "custom({}{:+}j,{}{:+}j)",
                self.x0.re, self.x0.im, self.x1.re, self.x1.im
            )
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AmbientKind {
    /// M-PSK with points `e^{j(pi/M + 2 pi k/M)}`.
    ConstantModulus { order: u32 },
    /// Square 16-point grid.
    Qam16,
    /// Circularly-symmetric complex Gaussian.
    Gaussian,
}

impl AmbientKind {
    pub fn qpsk() -> Self {
        AmbientKind::ConstantModulus { order: 4 }
    }

    pub fn name(&self) -> String {
        match self {
            AmbientKind::ConstantModulus { order: 4 } => "qpsk".into(),
            AmbientKind::ConstantModulus { order } => format!("psk{order}"),
            AmbientKind::Qam16 => "qam16".into(),
            AmbientKind::Gaussian => "gaussian".into(),
        }
    }

    pub fn is_constant_modulus(&self) -> bool {
        matches!(self, AmbientKind::ConstantModulus { .. })
    }
}

/// Ambient-source law and its (average) power.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmbientSpec {
    kind: AmbientKind,
    power: f64,
}

impl AmbientSpec {
    pub fn new(kind: AmbientKind, power: f64) -> Result<Self> {
        if !(power > 0.0 && power.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "ambient power must be positive, got {power}"
            )));
        }
        if let AmbientKind::ConstantModulus { order } = kind {
            if order < 2 {
                return Err(Error::InvalidParameter(format!(
                    "PSK order must be at least 2, got {order}"
                )));
            }
        }
        Ok(AmbientSpec { kind, power })
    }

    pub fn kind(&self) -> AmbientKind {
        self.kind
    }

    pub fn power(&self) -> f64 {
        self.power
    }
}

/// One received snapshot together with the transmitted truth.
#[derive(Debug, Clone, PartialEq)]
pub struct RxSample {
    pub y: CVector,
    pub truth_x: C64,
    pub truth_s: C64,
}

/// Ambient amplitude `|s|` such that the reference antenna sees SNR `gamma_db`
/// under free-space gain `1/(4 pi d0)`.
pub fn snr_to_amplitude(gamma_db: f64, d0: f64) -> f64 {
    4.0 * PI * d0 * 10f64.powf(gamma_db / 20.0)
}

/// A draw from `CN(0, 1)`.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// `n ~ CN(0, I_n)`.
pub fn noise_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CVector {
    CVector::from_fn(n, |_, _| complex_normal(rng))
}

const QAM16_LEVELS: [f64; 4] = [-3.0, -1.0, 1.0, 3.0];

pub fn draw_ambient<R: Rng + ?Sized>(spec: &AmbientSpec, rng: &mut R) -> C64 {
    let amp = spec.power.sqrt();
    match spec.kind {
        AmbientKind::ConstantModulus { order } => {
            let k = rng.random_range(0..order) as f64;
            let m = order as f64;
            C64::from_polar(amp, PI / m + 2.0 * PI * k / m)
        }
        AmbientKind::Qam16 => {
            // E|a + jb|^2 = 2 * 5 = 10 on the {-3,-1,1,3} grid.
            let i = QAM16_LEVELS[rng.random_range(0..4)];
            let q = QAM16_LEVELS[rng.random_range(0..4)];
            C64::new(i, q) * (amp / 10f64.sqrt())
        }
        AmbientKind::Gaussian => complex_normal(rng) * amp,
    }
}

/// `y = (alpha + x beta) s + n` with the given noise realization.
pub fn received_sample_with_noise(channels: &ChannelPair, s: C64, x: C64, noise: &CVector) -> RxSample {
    RxSample {
        y: channels.composite(x) * s + noise,
        truth_x: x,
        truth_s: s,
    }
}

/// `y = (alpha + x beta) s + n`, `n ~ CN(0, I)`.
pub fn received_sample<R: Rng + ?Sized>(channels: &ChannelPair, s: C64, x: C64, rng: &mut R) -> RxSample {
    let n = noise_vector(channels.n_r(), rng);
    received_sample_with_noise(channels, s, x, &n)
}

/// `L` copies of `x0` followed by `L` copies of `x1`.
pub fn make_preambles(l: usize) -> Result<Vec<BdSymbol>> {
    if l == 0 {
        return Err(Error::InvalidParameter("preamble length must be >= 1".into()));
    }
    let mut v = vec![BdSymbol::X0; l];
    v.extend(std::iter::repeat_n(BdSymbol::X1, l));
    Ok(v)
}

/// Only the `x0` block, for receivers that never look at `x1` training.
pub fn make_single_preamble(l: usize) -> Result<Vec<BdSymbol>> {
    if l == 0 {
        return Err(Error::InvalidParameter("preamble length must be >= 1".into()));
    }
    Ok(vec![BdSymbol::X0; l])
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(7)
    }

    #[test]
    fn snr_amplitude() {
        assert!((snr_to_amplitude(0.0, 1.0 / (4.0 * PI)) - 1.0).abs() < 1e-15);
        let s = snr_to_amplitude(28.0, 80.0);
        assert!((s - 2.525e4).abs() < 5.0, "{s}");
        let g = (s / (4.0 * PI * 80.0)).powi(2);
        assert!((10.0 * g.log10() - 28.0).abs() < 1e-12);
        let r = snr_to_amplitude(31.0, 80.0) / snr_to_amplitude(11.0, 80.0);
        assert!((r - 10.0).abs() < 1e-12);
    }

    #[test]
    fn qpsk_points() {
        let spec = AmbientSpec::new(AmbientKind::qpsk(), 2.0).unwrap();
        let mut r = rng();
        for _ in 0..1000 {
            let s = draw_ambient(&spec, &mut r);
            assert!((s.norm_sqr() - 2.0).abs() < 1e-12);
            // phase is pi/4 + k pi/2
            let k = (s.arg() - PI / 4.0) / (PI / 2.0);
            assert!((k - k.round()).abs() < 1e-12);
        }
    }

    #[test]
    fn gaussian_and_qam_moments() {
        let n = 1_000_000;
        let mut r = rng();
        let g = AmbientSpec::new(AmbientKind::Gaussian, 1.0).unwrap();
        let p: f64 = (0..n).map(|_| draw_ambient(&g, &mut r).norm_sqr()).sum::<f64>() / n as f64;
        assert!((p - 1.0).abs() < 0.01, "{p}");
        let q = AmbientSpec::new(AmbientKind::Qam16, 1.0).unwrap();
        let draws: Vec<C64> = (0..n).map(|_| draw_ambient(&q, &mut r)).collect();
        let mean = draws.iter().sum::<C64>() / n as f64;
        let power = draws.iter().map(|s| s.norm_sqr()).sum::<f64>() / n as f64;
        assert!(mean.norm() < 0.005, "{mean}");
        assert!((power - 1.0).abs() < 0.01, "{power}");
    }

    #[test]
    fn deterministic_under_seed() {
        let spec = AmbientSpec::new(AmbientKind::Qam16, 3.0).unwrap();
        let a: Vec<C64> = {
            let mut r = rng();
            (0..50).map(|_| draw_ambient(&spec, &mut r)).collect()
        };
        let b: Vec<C64> = {
            let mut r = rng();
            (0..50).map(|_| draw_ambient(&spec, &mut r)).collect()
        };
        assert_eq!(a, b);
    }

    fn channels() -> ChannelPair {
        ChannelPair::new(
            CVector::from_vec(vec![C64::new(1.0, 0.5), C64::new(-0.2, 0.3), C64::new(0.0, 1.0)]),
            CVector::from_vec(vec![C64::new(0.1, 0.0), C64::new(0.0, -0.05), C64::new(0.02, 0.02)]),
        )
        .unwrap()
    }

    #[test]
    fn noiseless_samples() {
        let ch = channels();
        let zero = CVector::zeros(3);
        let s = C64::new(2.0, -1.0);
        let r = received_sample_with_noise(&ch, s, C64::new(0.0, 0.0), &zero);
        assert_eq!(r.y, ch.alpha() * s);
        let r = received_sample_with_noise(&ch, s, C64::new(1.0, 0.0), &zero);
        assert_eq!(r.y, (ch.alpha() + ch.beta()) * s);
    }

    #[test]
    fn noise_moments() {
        let ch = channels();
        let mut r = rng();
        let n = 1_000_000;
        let mut var = [0.0; 3];
        let mut cross = C64::new(0.0, 0.0);
        for _ in 0..n {
            let y = received_sample(&ch, C64::new(0.0, 0.0), C64::new(1.0, 0.0), &mut r).y;
            for k in 0..3 {
                var[k] += y[k].norm_sqr();
            }
            cross += y[0] * y[1].conj();
        }
        for v in var {
            assert!((v / n as f64 - 1.0).abs() < 0.01);
        }
        assert!((cross / n as f64).norm() < 0.01);
    }

    #[test]
    fn preambles() {
        let p = make_preambles(30).unwrap();
        assert_eq!(p.len(), 60);
        assert!(p[..30].iter().all(|&x| x == BdSymbol::X0));
        assert!(p[30..].iter().all(|&x| x == BdSymbol::X1));
        let bpsk = BdAlphabet::bpsk();
        assert_eq!(bpsk.value(p[0]), C64::new(-1.0, 0.0));
        assert_eq!(make_preambles(1).unwrap(), vec![BdSymbol::X0, BdSymbol::X1]);
        assert_eq!(make_single_preamble(2).unwrap(), vec![BdSymbol::X0, BdSymbol::X0]);
        assert!(make_preambles(0).is_err());
    }

    #[test]
    fn alphabet_validation() {
        assert!(BdAlphabet::new(C64::new(1.0, 0.0), C64::new(1.0, 0.0)).is_err());
        assert!(BdAlphabet::new(C64::new(0.0, 0.0), C64::new(1.5, 0.0)).is_err());
        assert_eq!(BdAlphabet::ook().name(), "ook");
        assert_eq!(BdAlphabet::bpsk().name(), "bpsk");
    }
}
