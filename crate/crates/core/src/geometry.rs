//! Node placement, path distances and Friis channel vectors.
//!
//! Every length is measured in carrier wavelengths, so the wavelength drops
//! out of all gains.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{inner, norm_sqr, CVector, C64};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    pub fn distance(self, other: Point2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn mirror_x(self) -> Point2 {
        Point2::new(self.x, -self.y)
    }
}

/// Direction of the uniform linear array through the reference antenna.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum ArrayAxis {
    /// Along the y-axis, perpendicular to the Tx-Rx baseline.
    #[default]
    Broadside,
    /// Along the x-axis, i.e. on the Tx-Rx baseline.
    Endfire,
}

/// Receiver array plus transmitter position.
///
/// The transmitter sits at `(-d0/2, 0)` and the reference antenna (1-based
/// index `ceil(n_r / 2)`) at `(d0/2, 0)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrayGeometry {
    n_r: usize,
    spacing: f64,
    ref_index: usize,
    axis: ArrayAxis,
    tx_pos: Point2,
    antenna_pos: Vec<Point2>,
}

impl ArrayGeometry {
    pub fn new(n_r: usize, spacing: f64, d0: f64, axis: ArrayAxis) -> Result<Self> {
        if n_r < 2 {
            return Err(Error::InvalidParameter(format!(
                "need at least 2 antennas, got {n_r}"
            )));
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "antenna spacing must be positive, got {spacing}"
            )));
        }
        if !(d0 > 0.0 && d0.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "Tx-Rx distance must be positive, got {d0}"
            )));
        }
        let ref_index = n_r.div_ceil(2);
        let reference = Point2::new(d0 / 2.0, 0.0);
        let antenna_pos = (1..=n_r)
            .map(|l| {
                let offset = (l as f64 - ref_index as f64) * spacing;
                match axis {
                    ArrayAxis::Broadside => Point2::new(reference.x, offset),
                    ArrayAxis::Endfire => Point2::new(reference.x + offset, 0.0),
                }
            })
            .collect();
        Ok(ArrayGeometry {
            n_r,
            spacing,
            ref_index,
            axis,
            tx_pos: Point2::new(-d0 / 2.0, 0.0),
            antenna_pos,
        })
    }

    pub fn n_r(&self) -> usize {
        self.n_r
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// 1-based index of the reference antenna.
    pub fn ref_index(&self) -> usize {
        self.ref_index
    }

    pub fn axis(&self) -> ArrayAxis {
        self.axis
    }

    pub fn tx_pos(&self) -> Point2 {
        self.tx_pos
    }

    pub fn antenna_pos(&self) -> &[Point2] {
        &self.antenna_pos
    }

    pub fn reference_pos(&self) -> Point2 {
        self.antenna_pos[self.ref_index - 1]
    }
}

/// Broadside array (the default orientation).
pub fn build_array(n_r: usize, spacing: f64, d0: f64) -> Result<ArrayGeometry> {
    ArrayGeometry::new(n_r, spacing, d0, ArrayAxis::Broadside)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceSet {
    /// Tx to antenna `l`.
    pub d0l: Vec<f64>,
    /// BD to antenna `l`.
    pub d1l: Vec<f64>,
    /// Tx to BD.
    pub d2: f64,
    pub d0: f64,
    pub d1: f64,
}

pub fn path_distances(geometry: &ArrayGeometry, bd_pos: Point2) -> Result<DistanceSet> {
    let tx = geometry.tx_pos();
    let d2 = tx.distance(bd_pos);
    if d2 == 0.0 {
        return Err(Error::CoincidentPositions(format!(
            "BD at ({}, {}) coincides with the transmitter",
            bd_pos.x, bd_pos.y
        )));
    }
    let mut d0l = Vec::with_capacity(geometry.n_r());
    let mut d1l = Vec::with_capacity(geometry.n_r());
    for (l, &p) in geometry.antenna_pos().iter().enumerate() {
        let d1 = p.distance(bd_pos);
        if d1 == 0.0 {
            return Err(Error::CoincidentPositions(format!(
                "BD coincides with antenna {}",
                l + 1
            )));
        }
        let d0 = p.distance(tx);
        if d0 == 0.0 {
            return Err(Error::CoincidentPositions(format!(
                "transmitter coincides with antenna {}",
                l + 1
            )));
        }
        d0l.push(d0);
        d1l.push(d1);
    }
    let r = geometry.ref_index() - 1;
    Ok(DistanceSet {
        d0: d0l[r],
        d1: d1l[r],
        d0l,
        d1l,
        d2,
    })
}

/// Direct-path vector `alpha` and backscatter-path vector `beta`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelPair {
    alpha: CVector,
    beta: CVector,
}

impl ChannelPair {
    /// Wraps externally supplied channel vectors (e.g. fading draws).
    pub fn new(alpha: CVector, beta: CVector) -> Result<Self> {
        if alpha.len() != beta.len() {
            return Err(Error::DimensionMismatch {
                expected: alpha.len(),
                found: beta.len(),
            });
        }
        if alpha.len() < 2 {
            return Err(Error::InvalidParameter(format!(
                "need at least 2 antennas, got {}",
                alpha.len()
            )));
        }
        Ok(ChannelPair { alpha, beta })
    }

    pub fn alpha(&self) -> &CVector {
        &self.alpha
    }

    pub fn beta(&self) -> &CVector {
        &self.beta
    }

    pub fn n_r(&self) -> usize {
        self.alpha.len()
    }

    /// `alpha + x beta`.
    pub fn composite(&self, x: C64) -> CVector {
        &self.alpha + &self.beta * x
    }

    /// Rescales both vectors by `1/||alpha||`. The returned factor `||alpha||`
    /// multiplies the ambient amplitude so that `alpha s` and `beta s` are
    /// unchanged.
    pub fn normalized(&self) -> (ChannelPair, f64) {
        let scale = norm_sqr(&self.alpha).sqrt();
        let inv = C64::new(1.0 / scale, 0.0);
        (
            ChannelPair {
                alpha: &self.alpha * inv,
                beta: &self.beta * inv,
            },
            scale,
        )
    }

    /// `|alpha^H beta|`, zero when the two paths are orthogonal.
    pub fn cross_magnitude(&self) -> f64 {
        inner(&self.alpha, &self.beta).norm()
    }
}

fn friis(d: f64, phase_len: f64) -> C64 {
    C64::from_polar(1.0 / (4.0 * PI * d), 2.0 * PI * phase_len.rem_euclid(1.0))
}

/// Free-space amplitude gains with propagation phase.
pub fn friis_channels(distances: &DistanceSet) -> ChannelPair {
    let alpha = CVector::from_iterator(
        distances.d0l.len(),
        distances.d0l.iter().map(|&d| friis(d, d)),
    );
    let d2 = distances.d2;
    let beta = CVector::from_iterator(
        distances.d1l.len(),
        distances.d1l.iter().map(|&d1| {
            let amp = 1.0 / ((4.0 * PI * d2) * (4.0 * PI * d1));
            C64::from_polar(amp, 2.0 * PI * (d2 + d1).rem_euclid(1.0))
        }),
    );
    ChannelPair { alpha, beta }
}

fn ratio_db(num: f64, den: f64) -> Result<f64> {
    if den == 0.0 {
        return Err(Error::DegenerateBackscatter);
    }
    Ok(10.0 * (num / den).log10())
}

/// Array-wide direct-to-backscatter power ratio `||alpha||^2 / ||beta||^2` in dB.
pub fn power_ratio_delta(channels: &ChannelPair) -> Result<f64> {
    ratio_db(norm_sqr(channels.alpha()), norm_sqr(channels.beta()))
}

/// The same ratio seen by the reference antenna alone, `|alpha_ref|^2 / |beta_ref|^2`.
pub fn reference_power_ratio_delta(distances: &DistanceSet) -> Result<f64> {
    let a = (4.0 * PI * distances.d0).powi(-2);
    let b = ((4.0 * PI * distances.d2) * (4.0 * PI * distances.d1)).powi(-2);
    ratio_db(a, b)
}
