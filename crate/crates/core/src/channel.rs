//! Geometric mmWave channel with temporally correlated path gains and drifting
//! angles.
//!
//! Block `n` is `H(n) = A_R(θ(n)) diag(a(n)) A_T(φ(n))^H` with half-wavelength ULA
//! responses at both ends. Gains follow the first-order recursion
//! `a(n) = ρ a(n−1) + √(1−ρ²) β(n)`; each angle takes an independent uniform step
//! in `(−δ, δ)`.

use std::f64::consts::{PI, TAU};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{bessel_j0, ComplexMatrix, ComplexVector, C64};
use crate::rng::complex_normal;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChannelError {
    #[error("invalid channel parameter `{field}`: {reason}")]
    InvalidParam { field: &'static str, reason: String },
    #[error("path data length mismatch: {aods} AoDs, {aoas} AoAs, {gains} gains")]
    LengthMismatch { aods: usize, aoas: usize, gains: usize },
}

/// Wraps an angle into `[0, 2π)`.
pub fn wrap_angle(a: f64) -> f64 {
    let w = a.rem_euclid(TAU);
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// Shortest distance between two angles on the circle, in `[0, π]`.
pub fn wrapped_distance(a: f64, b: f64) -> f64 {
    let d = (wrap_angle(a) - wrap_angle(b)).abs();
    d.min(TAU - d)
}

/// Wrapped distance that also treats `a` and `π − a` as the same direction.
///
/// A half-wavelength ULA only sees `sin(angle)`, so the two are indistinguishable.
pub fn response_distance(a: f64, b: f64) -> f64 {
    wrapped_distance(a, b).min(wrapped_distance(PI - a, b))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    /// TX antenna count.
    pub n_t: usize,
    /// RX antenna count.
    pub n_r: usize,
    /// Number of propagation paths `L`.
    pub paths: usize,
    /// Per-block angle drift half-width, radians.
    pub delta: f64,
    /// Block-to-block gain correlation.
    pub rho: f64,
    /// Average pathloss `ℓ(D)`; the per-path gain variance is `n_t·n_r / pathloss`.
    pub pathloss: f64,
}

impl ChannelParams {
    /// Unit pathloss, 3° drift, ρ = 0.8.
    pub fn new(n_t: usize, n_r: usize, paths: usize) -> Self {
        Self {
            n_t,
            n_r,
            paths,
            delta: 3f64.to_radians(),
            rho: 0.8,
            pathloss: 1.0,
        }
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    pub fn with_rho(mut self, rho: f64) -> Self {
        self.rho = rho;
        self
    }

    pub fn with_pathloss(mut self, pathloss: f64) -> Self {
        self.pathloss = pathloss;
        self
    }

    pub fn gain_variance(&self) -> f64 {
        (self.n_t * self.n_r) as f64 / self.pathloss
    }

    pub fn validate(&self) -> Result<(), ChannelError> {
        let bad = |field, reason: &str| {
            Err(ChannelError::InvalidParam {
                field,
                reason: reason.to_string(),
            })
        };
        if self.n_t == 0 {
            return bad("n_t", "must be at least 1");
        }
        if self.n_r == 0 {
            return bad("n_r", "must be at least 1");
        }
        if self.paths == 0 {
            return bad("paths", "must be at least 1");
        }
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return bad("delta", "must be finite and nonnegative");
        }
        if !(0.0..=1.0).contains(&self.rho) {
            return bad("rho", "must lie in [0, 1]");
        }
        if !(self.pathloss > 0.0 && self.pathloss.is_finite()) {
            return bad("pathloss", "must be finite and positive");
        }
        Ok(())
    }
}

/// Ground truth for one coherence block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelState {
    pub block_index: usize,
    /// AoDs in `[0, 2π)`.
    pub aods: Vec<f64>,
    /// AoAs in `[0, 2π)`.
    pub aoas: Vec<f64>,
    pub gains: ComplexVector,
    /// `N_R × N_T` channel matrix.
    pub h: ComplexMatrix,
}

/// Correlation from the Jakes model, with a flag for values outside `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JakesRho {
    pub rho: f64,
    /// Set when `J0` lands outside `[0, 1]`; the value is passed through unchanged.
    pub out_of_range: bool,
}

/// `ρ = J0(2π f_D T_bl)`.
pub fn jakes_rho(f_d: f64, t_bl: f64) -> Result<JakesRho, ChannelError> {
    if !(f_d >= 0.0 && f_d.is_finite()) {
        return Err(ChannelError::InvalidParam {
            field: "f_d",
            reason: "Doppler frequency must be finite and nonnegative".into(),
        });
    }
    if !(t_bl > 0.0 && t_bl.is_finite()) {
        return Err(ChannelError::InvalidParam {
            field: "t_bl",
            reason: "block length must be finite and positive".into(),
        });
    }
    let mut rho = bessel_j0(TAU * f_d * t_bl);
    if rho > 1.0 && rho - 1.0 <= 1e-12 {
        rho = 1.0;
    } else if (-1e-12..0.0).contains(&rho) {
        rho = 0.0;
    }
    Ok(JakesRho {
        rho,
        out_of_range: !(0.0..=1.0).contains(&rho),
    })
}

/// Half-wavelength ULA response: entry `k` is `exp(jπ k sin(angle)) / √n`.
pub fn ula_response(n: usize, angle: f64) -> ComplexVector {
    let scale = 1.0 / (n as f64).sqrt();
    let w = PI * angle.sin();
    (0..n)
        .map(|k| C64::from_polar(scale, w * k as f64))
        .collect()
}

/// Steering vectors for each angle, as columns.
pub fn steering_matrix(n: usize, angles: &[f64]) -> ComplexMatrix {
    let cols: Vec<ComplexVector> = angles.iter().map(|&a| ula_response(n, a)).collect();
    ComplexMatrix::from_columns(&cols).expect("steering columns share a length")
}

/// `A_R(θ) diag(gains) A_T(φ)^H`, an `N_R × N_T` matrix.
pub fn assemble_channel(
    params: &ChannelParams,
    aods: &[f64],
    aoas: &[f64],
    gains: &[C64],
) -> Result<ComplexMatrix, ChannelError> {
    if aods.len() != gains.len() || aoas.len() != gains.len() {
        return Err(ChannelError::LengthMismatch {
            aods: aods.len(),
            aoas: aoas.len(),
            gains: gains.len(),
        });
    }
    Ok(paths_to_matrix(params.n_t, params.n_r, aods, aoas, gains))
}

/// Sum of rank-one path contributions `g · a_R(θ) a_T(φ)^H`.
pub(crate) fn paths_to_matrix(n_t: usize, n_r: usize, aods: &[f64], aoas: &[f64], gains: &[C64]) -> ComplexMatrix {
    let mut h = ComplexMatrix::zeros(n_r, n_t);
    for ((&phi, &theta), &g) in aods.iter().zip(aoas).zip(gains) {
        let at = ula_response(n_t, phi);
        let ar = ula_response(n_r, theta);
        for j in 0..n_t {
            let s = g * at[j].conj();
            for (dst, &r) in h.column_mut(j).iter_mut().zip(ar.iter()) {
                *dst += s * r;
            }
        }
    }
    h
}

/// First block: uniform angles on `[0, 2π)`, i.i.d. `CN(0, N_T N_R / ℓ(D))` gains.
pub fn init_channel<R: Rng + ?Sized>(params: &ChannelParams, rng: &mut R) -> Result<ChannelState, ChannelError> {
    params.validate()?;
    let l = params.paths;
    let aods: Vec<f64> = (0..l).map(|_| wrap_angle(rng.random_range(0.0..TAU))).collect();
    let aoas: Vec<f64> = (0..l).map(|_| wrap_angle(rng.random_range(0.0..TAU))).collect();
    let var = params.gain_variance();
    let gains: ComplexVector = (0..l).map(|_| complex_normal(rng, var)).collect();
    let h = assemble_channel(params, &aods, &aoas, &gains)?;
    Ok(ChannelState {
        block_index: 1,
        aods,
        aoas,
        gains,
        h,
    })
}

/// Advances the channel by one block.
pub fn evolve_channel<R: Rng + ?Sized>(
    state: &ChannelState,
    params: &ChannelParams,
    rng: &mut R,
) -> Result<ChannelState, ChannelError> {
    params.validate()?;
    let l = params.paths;
    if state.aods.len() != l || state.aoas.len() != l || state.gains.len() != l {
        return Err(ChannelError::LengthMismatch {
            aods: state.aods.len(),
            aoas: state.aoas.len(),
            gains: state.gains.len(),
        });
    }
    let var = params.gain_variance();
    let innovation = (1.0 - params.rho * params.rho).sqrt();
    let gains: ComplexVector = state
        .gains
        .iter()
        .map(|&g| {
            let beta = complex_normal(rng, var);
            g * params.rho + beta * innovation
        })
        .collect();
    let mut drift = |a: f64| {
        if params.delta > 0.0 {
            let step = rng.random_range(-params.delta..params.delta);
            wrap_angle(a + step)
        } else {
            a
        }
    };
    let aods: Vec<f64> = state.aods.iter().map(|&a| drift(a)).collect();
    let aoas: Vec<f64> = state.aoas.iter().map(|&a| drift(a)).collect();
    let h = assemble_channel(params, &aods, &aoas, &gains)?;
    Ok(ChannelState {
        block_index: state.block_index + 1,
        aods,
        aoas,
        gains,
        h,
    })
}

/// Iterator over successive blocks of one channel realization.
pub struct ChannelSequence<'a, R: Rng> {
    params: &'a ChannelParams,
    rng: R,
    current: Option<ChannelState>,
}

impl<'a, R: Rng> ChannelSequence<'a, R> {
    pub fn new(params: &'a ChannelParams, rng: R) -> Self {
        Self {
            params,
            rng,
            current: None,
        }
    }
}

impl<R: Rng> Iterator for ChannelSequence<'_, R> {
    type Item = Result<ChannelState, ChannelError>;

    fn next(&mut self) -> Option<Self::Item> {
        let next = match &self.current {
            None => init_channel(self.params, &mut self.rng),
            Some(s) => evolve_channel(s, self.params, &mut self.rng),
        };
        if let Ok(s) = &next {
            self.current = Some(s.clone());
        }
        Some(next)
    }
}
