//! The nonlinear complementary attitude filter.
//!
//! Per step the filter forms the measurement-space innovation
//! `ι = Σ (sᵢ/2) υ̂ᵢ × υᵢ`, equal to `vex(P_a(M^B R̃))`, then advances
//!
//! ```text
//! R̂ ← R̂ · exp(dt · (Ω_m − b̂ − K·ι))        (manifold step)
//! b̂ ← b̂ + dt · (γ/2) · ι                    (forward Euler)
//! ```
//!
//! The gain `K = 1 + k_op ≥ 1` is supplied per step, either fixed or
//! scheduled by the fuzzy engine.

use crate::sim::MeasurementFrame;
use crate::so3::{exp_so3, RotationMatrix, Vec3};
use crate::{Error, Result};

/// Filter state after some number of steps.
#[derive(Clone, Copy, Debug)]
pub struct FilterState {
    /// Current attitude estimate R̂.
    pub attitude: RotationMatrix,
    /// Current gyro-bias estimate b̂ in rad/s.
    pub bias: Vec3,
    /// Previous error sample in [0, 1], kept for the scheduler's Δe.
    pub last_error: f64,
    pub t: f64,
}

impl FilterState {
    /// Starts at `t = 0` with zero bias estimate; `initial_error` seeds the
    /// scheduler's Δe so the first step sees a zero rate.
    pub fn new(initial_estimate: RotationMatrix, initial_error: f64) -> Self {
        Self {
            attitude: initial_estimate,
            bias: Vec3::zero(),
            last_error: initial_error.clamp(0.0, 1.0),
            t: 0.0,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.attitude.is_finite() && self.bias.is_finite() && self.t.is_finite()
    }
}

/// How the per-step gain is produced.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GainMode {
    /// Constant `K = 1 + k_op`.
    Fixed { k_op: f64 },
    /// `K` supplied by the fuzzy scheduler each step.
    Scheduled,
}

/// Static filter parameters.
#[derive(Clone, Copy, Debug)]
pub struct FilterConfig {
    /// Bias adaptation rate γ > 0.
    pub gamma: f64,
    pub gain_mode: GainMode,
    pub dt: f64,
}

impl FilterConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.gamma.is_finite() || self.gamma <= 0.0 {
            return Err(Error::Config(format!("gamma {} must be > 0", self.gamma)));
        }
        if !self.dt.is_finite() || self.dt <= 0.0 {
            return Err(Error::Config(format!("dt {} must be > 0", self.dt)));
        }
        if let GainMode::Fixed { k_op } = self.gain_mode {
            if !k_op.is_finite() || k_op < 0.0 {
                return Err(Error::Config(format!(
                    "fixed gain increment {k_op} must be finite and >= 0"
                )));
            }
        }
        Ok(())
    }
}

/// The measurement-space correction vector and its norm.
#[derive(Clone, Copy, Debug)]
pub struct Innovation {
    pub vector: Vec3,
    pub norm: f64,
}

/// Predicted body-frame directions `υ̂ᵢ = R̂ᵀ υᵢ^I`.
pub fn estimate_body_vectors(attitude: &RotationMatrix, inertial: &[Vec3]) -> Vec<Vec3> {
    inertial.iter().map(|v| attitude.apply_inverse(v)).collect()
}

/// `ι = Σ (sᵢ/2) υ̂ᵢ × υᵢ` over index-aligned estimated/measured pairs.
pub fn innovation(estimated: &[Vec3], measured: &[Vec3], confidences: &[f64]) -> Innovation {
    assert_eq!(
        estimated.len(),
        measured.len(),
        "vector list length mismatch"
    );
    assert_eq!(
        estimated.len(),
        confidences.len(),
        "confidence length mismatch"
    );
    let mut sum = Vec3::zero();
    for ((est, meas), s) in estimated.iter().zip(measured).zip(confidences) {
        sum = sum + est.cross(meas) * (0.5 * s);
    }
    Innovation {
        vector: sum,
        norm: sum.norm(),
    }
}

/// Advances the filter one sample with gain `K ≥ 1`.
///
/// `last_error` is carried through unchanged; the harness refreshes it when
/// it owns an error signal.
pub fn filter_step(
    state: &FilterState,
    frame: &MeasurementFrame,
    k_gain: f64,
    config: &FilterConfig,
) -> Result<FilterState> {
    if !k_gain.is_finite() {
        return Err(Error::Divergence(format!(
            "non-finite gain at t = {}",
            state.t
        )));
    }
    debug_assert!(k_gain >= 1.0, "gain K must satisfy K >= 1");
    if !frame.omega_m.is_finite()
        || frame.body_vectors.iter().any(|v| !v.is_finite())
        || frame.inertial_vectors.iter().any(|v| !v.is_finite())
    {
        return Err(Error::Divergence(format!(
            "non-finite measurement frame at t = {}",
            frame.t
        )));
    }

    let estimated = estimate_body_vectors(&state.attitude, &frame.inertial_vectors);
    let innov = innovation(&estimated, &frame.body_vectors, &frame.confidences);
    let correction = innov.vector * k_gain;
    let omega_est = frame.omega_m - state.bias - correction;
    if !omega_est.is_finite() {
        return Err(Error::Divergence(format!(
            "non-finite estimator rate at t = {}",
            state.t
        )));
    }

    Ok(FilterState {
        attitude: &state.attitude * &exp_so3(omega_est * config.dt),
        bias: state.bias + innov.vector * (0.5 * config.gamma * config.dt),
        last_error: state.last_error,
        t: state.t + config.dt,
    })
}
