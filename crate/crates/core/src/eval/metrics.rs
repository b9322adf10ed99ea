//! Estimation error and single-stream beamforming rate.

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::numerics::{principal_svd, ComplexMatrix, ComplexVector, SparseVector, C64};

/// `B⁻¹ Σ_n ‖z(n) − z̃(n)‖²`.
pub fn mse(true_seq: &[SparseVector], est_seq: &[SparseVector]) -> Result<f64, EvalError> {
    if true_seq.len() != est_seq.len() {
        return Err(EvalError::LengthMismatch {
            expected: true_seq.len(),
            found: est_seq.len(),
        });
    }
    if true_seq.is_empty() {
        return Err(EvalError::Empty("mse"));
    }
    let mut acc = 0.0;
    for (t, e) in true_seq.iter().zip(est_seq) {
        acc += t.distance_sqr(e)?;
    }
    Ok(acc / true_seq.len() as f64)
}

pub fn to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub fn from_db(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Transmit beamformer and receive combiner for one stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeamformingLink {
    /// Unit-norm transmit beamformer, `N_T` entries.
    pub v: ComplexVector,
    /// Unit-norm receive combiner, `N_R` entries.
    pub u: ComplexVector,
    /// Transmit power.
    pub p: f64,
    /// Noise variance.
    pub sigma2: f64,
}

impl BeamformingLink {
    pub fn new(directions: BeamDirections, p: f64, sigma2: f64) -> Result<Self, EvalError> {
        for (name, x) in [("v", &directions.v), ("u", &directions.u)] {
            if (x.norm() - 1.0).abs() > 1e-12 {
                return Err(EvalError::NotUnitNorm { which: name, norm: x.norm() });
            }
        }
        Ok(Self {
            v: directions.v,
            u: directions.u,
            p,
            sigma2,
        })
    }
}

/// Beam directions without a power budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeamDirections {
    pub v: ComplexVector,
    pub u: ComplexVector,
}

/// `|u^H H v|²`, the beamforming gain of a link on channel `h`.
pub fn beamforming_gain(h: &ComplexMatrix, u: &[C64], v: &[C64]) -> f64 {
    let hv = h.matvec(v).expect("beamformer matches TX antennas");
    crate::numerics::dotc(u, &hv).norm_sqr()
}

/// `log₂(1 + (p/σ²)·|u^H H v|²)` in bits/s/Hz.
pub fn achievable_rate(h_true: &ComplexMatrix, link: &BeamformingLink) -> f64 {
    rate_from_gain(beamforming_gain(h_true, &link.u, &link.v), link.p / link.sigma2)
}

pub fn rate_from_gain(gain: f64, snr: f64) -> f64 {
    (snr * gain).ln_1p() / std::f64::consts::LN_2
}

/// Unit-modulus phases scaled to `1/√N`; zero entries keep phase zero.
pub fn constant_modulus(x: &[C64]) -> ComplexVector {
    let s = 1.0 / (x.len().max(1) as f64).sqrt();
    x.iter().map(|z| C64::from_polar(s, z.arg())).collect()
}

/// Principal singular vectors of the channel estimate; with `constant_modulus`
/// they are projected onto equal-magnitude entries.
pub fn make_beamformers(h_hat: &ComplexMatrix, constant_modulus_entries: bool) -> BeamDirections {
    let svd = principal_svd(h_hat);
    if constant_modulus_entries {
        BeamDirections {
            v: constant_modulus(&svd.v),
            u: constant_modulus(&svd.u),
        }
    } else {
        BeamDirections { v: svd.v, u: svd.u }
    }
}
