//! Ground-truth trajectory generation and sensor measurement synthesis.
//!
//! A [`SimScenario`] pins the truth angular-velocity signal, the gyro and
//! vector-sensor error models, initial conditions, and the sampling grid.
//! [`simulate`] rolls the truth attitude forward with a manifold-preserving
//! integrator and draws one [`MeasurementFrame`] per sample from a seeded
//! stream, so identical seeds give bit-identical measurement sequences.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Deserialize;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
use std::path::Path;

use crate::so3::{exp_so3, project_to_so3, Matrix3, RotationMatrix, Vec3};
use crate::{Error, Result};

/// Truth angular velocity: per-axis sinusoids
/// `Ω_i(t) = amplitude_i · sin(frequency_i · t + phase_i)` in rad/s.
#[derive(Clone, Copy, Debug, Deserialize)]
pub struct OmegaSignal {
    pub amplitude: Vec3,
    pub frequency: Vec3,
    pub phase: Vec3,
}

impl OmegaSignal {
    /// `Ω = [sin(0.4t), sin(0.7t + π/4), 0.4 sin(0.3t + π/2)]`.
    pub fn reference() -> Self {
        Self {
            amplitude: Vec3::new(1.0, 1.0, 0.4),
            frequency: Vec3::new(0.4, 0.7, 0.3),
            phase: Vec3::new(0.0, FRAC_PI_4, FRAC_PI_2),
        }
    }

    pub fn zero() -> Self {
        Self {
            amplitude: Vec3::zero(),
            frequency: Vec3::zero(),
            phase: Vec3::zero(),
        }
    }

    /// The true angular velocity at time `t`.
    pub fn at(&self, t: f64) -> Vec3 {
        Vec3::new(
            self.amplitude.x * (self.frequency.x * t + self.phase.x).sin(),
            self.amplitude.y * (self.frequency.y * t + self.phase.y).sin(),
            self.amplitude.z * (self.frequency.z * t + self.phase.z).sin(),
        )
    }
}

/// Rate-gyro error model: constant bias plus per-sample isotropic Gaussian
/// noise, `Ω_m = Ω + b + n`.
#[derive(Clone, Copy, Debug, Deserialize)]
pub struct GyroModel {
    pub bias: Vec3,
    pub noise_std: f64,
}

impl GyroModel {
    pub fn ideal() -> Self {
        Self {
            bias: Vec3::zero(),
            noise_std: 0.0,
        }
    }
}

/// One reference direction observed in the body frame:
/// `v^B = Rᵀ·direction + bias + noise`, normalized afterwards.
#[derive(Clone, Copy, Debug)]
pub struct InertialObservation {
    direction: Vec3,
    pub bias: Vec3,
    pub noise_std: f64,
    pub confidence: f64,
}

impl InertialObservation {
    /// Normalizes `direction` on construction; rejects zero directions,
    /// negative noise, and non-positive confidence.
    pub fn new(direction: Vec3, bias: Vec3, noise_std: f64, confidence: f64) -> Result<Self> {
        if !direction.is_finite() || !bias.is_finite() {
            return Err(Error::Scenario("non-finite observation parameters".into()));
        }
        if noise_std.is_nan() || noise_std < 0.0 {
            return Err(Error::Scenario(format!(
                "observation noise_std {noise_std} must be >= 0"
            )));
        }
        if confidence.is_nan() || confidence <= 0.0 {
            return Err(Error::Scenario(format!(
                "observation confidence {confidence} must be > 0"
            )));
        }
        Ok(Self {
            direction: direction.normalized()?,
            bias,
            noise_std,
            confidence,
        })
    }

    /// The unit reference direction in the inertial frame.
    pub fn direction(&self) -> Vec3 {
        self.direction
    }
}

/// Complete simulation setup: truth signal, sensor suite, initial
/// conditions, and the sampling grid.
#[derive(Clone, Debug)]
pub struct SimScenario {
    pub dt: f64,
    pub duration: f64,
    pub omega: OmegaSignal,
    pub gyro: GyroModel,
    pub observations: Vec<InertialObservation>,
    /// Append `v₃^B = v₁^B × v₂^B` (raw cross product) with the cross of
    /// the first two reference directions as its inertial counterpart.
    pub derived_third_vector: bool,
    pub initial_true_attitude: RotationMatrix,
    pub initial_estimate: RotationMatrix,
    pub rng_seed: u64,
}

/// The large-error initial estimate used by the reference scenario,
/// printed to four decimals and therefore projected back onto SO(3).
pub fn reference_initial_estimate() -> RotationMatrix {
    let printed = Matrix3::new([
        [-0.0074, 0.8557, 0.5175],
        [0.8802, -0.2399, 0.4094],
        [0.4745, 0.4586, -0.7514],
    ]);
    project_to_so3(&printed).expect("reference initial estimate is projectable")
}

impl SimScenario {
    /// The bundled reference scenario: sinusoidal truth rates, biased noisy
    /// gyro (σ = 0.2), two biased noisy reference observations (σ = 0.05)
    /// plus the derived cross-product vector, identity truth start, and the
    /// large-error initial estimate.
    pub fn paper_iv_a(rng_seed: u64) -> Self {
        let sqrt3 = 3.0_f64.sqrt();
        let observations = vec![
            InertialObservation::new(
                Vec3::new(1.0 / sqrt3, -1.0 / sqrt3, 1.0 / sqrt3),
                Vec3::new(0.1, -0.1, 0.1),
                0.05,
                1.0,
            )
            .expect("first reference observation is valid"),
            InertialObservation::new(
                Vec3::new(0.0, 0.0, 1.0),
                Vec3::new(0.0, 0.0, 0.1),
                0.05,
                1.0,
            )
            .expect("second reference observation is valid"),
        ];
        Self {
            dt: 0.01,
            duration: 14.0,
            omega: OmegaSignal::reference(),
            gyro: GyroModel {
                bias: Vec3::new(-0.1, 0.1, 0.05),
                noise_std: 0.2,
            },
            observations,
            derived_third_vector: true,
            initial_true_attitude: RotationMatrix::identity(),
            initial_estimate: reference_initial_estimate(),
            rng_seed,
        }
    }

    /// Checks grid sanity and the observability requirement (at least two
    /// observations with `|v_i × v_j| > 1e−6`).
    pub fn validate(&self) -> Result<()> {
        if !self.dt.is_finite() || self.dt <= 0.0 {
            return Err(Error::Scenario(format!("dt {} must be > 0", self.dt)));
        }
        if !self.duration.is_finite() || self.duration < self.dt {
            return Err(Error::Scenario(format!(
                "duration {} must be >= dt {}",
                self.duration, self.dt
            )));
        }
        if self.observations.len() < 2 {
            return Err(Error::Scenario(
                "at least two vector observations are required".into(),
            ));
        }
        let non_collinear = self.observations.iter().enumerate().any(|(i, a)| {
            self.observations[i + 1..]
                .iter()
                .any(|b| a.direction.cross(&b.direction).norm() > 1e-6)
        });
        if !non_collinear {
            return Err(Error::Scenario(
                "observations are collinear; attitude is unobservable".into(),
            ));
        }
        if self.derived_third_vector {
            let c = self.observations[0]
                .direction
                .cross(&self.observations[1].direction);
            if c.norm() <= 1e-6 {
                return Err(Error::Scenario(
                    "derived third vector requires non-collinear first two observations".into(),
                ));
            }
        }
        Ok(())
    }

    /// Samples on the grid `t = 0, dt, …, duration` (inclusive).
    pub fn n_samples(&self) -> usize {
        (self.duration / self.dt).round() as usize + 1
    }

    /// Removes all stochastic terms, keeping biases.
    pub fn without_noise(mut self) -> Self {
        self.gyro.noise_std = 0.0;
        for obs in &mut self.observations {
            obs.noise_std = 0.0;
        }
        self
    }

    /// Removes all measurement biases, keeping noise levels.
    pub fn without_measurement_bias(mut self) -> Self {
        self.gyro.bias = Vec3::zero();
        for obs in &mut self.observations {
            obs.bias = Vec3::zero();
        }
        self
    }
}

/// All sensor data available to the filter at one sample instant.
/// Body and inertial vectors are unit-norm and index-aligned with
/// `confidences`.
#[derive(Clone, Debug)]
pub struct MeasurementFrame {
    pub t: f64,
    pub omega_m: Vec3,
    pub body_vectors: Vec<Vec3>,
    pub inertial_vectors: Vec<Vec3>,
    pub confidences: Vec<f64>,
}

/// The seeded stream that feeds one simulation run.
pub type RandomStream = ChaCha8Rng;

/// Stream used for measurement synthesis; optimizer runs use a different
/// stream id so colony draws never alias sensor noise.
pub fn measurement_stream(seed: u64) -> RandomStream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(0);
    rng
}

fn gaussian_vec(std: f64, rng: &mut impl Rng) -> Vec3 {
    let z = Vec3::new(
        rng.sample(StandardNormal),
        rng.sample(StandardNormal),
        rng.sample(StandardNormal),
    );
    z * std
}

/// One gyro reading `Ω(t) + b + n` with `n ~ N(0, noise_std)` per axis.
pub fn sample_gyro(omega: &OmegaSignal, t: f64, model: &GyroModel, rng: &mut impl Rng) -> Vec3 {
    omega.at(t) + model.bias + gaussian_vec(model.noise_std, rng)
}

/// One full measurement frame at time `t` given the true attitude.
///
/// Draws the gyro sample first, then one noise vector per observation, so
/// the stream layout is independent of the measured values. The gyro is
/// read at the step midpoint `t + dt/2`: the measurement stands for the
/// rate over `[t, t+dt]` and matches the truth propagation order, so a
/// perfect estimate tracks exactly under noise-free measurements. The
/// derived third vector is omitted for a frame whose raw cross product has
/// norm below 1e−9.
pub fn sample_frame(
    scenario: &SimScenario,
    r_true: &RotationMatrix,
    t: f64,
    rng: &mut impl Rng,
) -> Result<MeasurementFrame> {
    let omega_m = sample_gyro(&scenario.omega, t + 0.5 * scenario.dt, &scenario.gyro, rng);

    let mut raw_body = Vec::with_capacity(scenario.observations.len() + 1);
    let mut inertial = Vec::with_capacity(scenario.observations.len() + 1);
    let mut confidences = Vec::with_capacity(scenario.observations.len() + 1);
    for obs in &scenario.observations {
        let noise = gaussian_vec(obs.noise_std, rng);
        raw_body.push(r_true.apply_inverse(&obs.direction()) + obs.bias + noise);
        inertial.push(obs.direction());
        confidences.push(obs.confidence);
    }

    if scenario.derived_third_vector {
        let cross_body = raw_body[0].cross(&raw_body[1]);
        let cross_inertial = inertial[0].cross(&inertial[1]);
        if cross_body.norm() >= 1e-9 && cross_inertial.norm() >= 1e-9 {
            raw_body.push(cross_body);
            inertial.push(cross_inertial);
            confidences.push(1.0);
        }
    }

    let mut body_vectors = Vec::with_capacity(raw_body.len());
    let mut inertial_vectors = Vec::with_capacity(inertial.len());
    for (b, i) in raw_body.iter().zip(&inertial) {
        body_vectors.push(
            b.normalized().map_err(|_| {
                Error::Scenario(format!("measured body vector vanished at t = {t}"))
            })?,
        );
        inertial_vectors.push(i.normalized()?);
    }

    Ok(MeasurementFrame {
        t,
        omega_m,
        body_vectors,
        inertial_vectors,
        confidences,
    })
}

/// Advances the true attitude one step: `R · exp(dt · Ω(t + dt/2))`.
///
/// The midpoint rate gives second-order accuracy while the exponential
/// keeps the result exactly on the manifold.
pub fn step_true_attitude(
    r: &RotationMatrix,
    omega: &OmegaSignal,
    t: f64,
    dt: f64,
) -> RotationMatrix {
    r * &exp_so3(omega.at(t + 0.5 * dt) * dt)
}

/// The truth attitude sequence and the matching measurement frames for one
/// scenario, both indexed by sample number.
#[derive(Clone, Debug)]
pub struct SimulatedTrajectory {
    pub dt: f64,
    pub truth: Vec<RotationMatrix>,
    pub frames: Vec<MeasurementFrame>,
}

impl SimulatedTrajectory {
    pub fn len(&self) -> usize {
        self.truth.len()
    }

    pub fn is_empty(&self) -> bool {
        self.truth.is_empty()
    }
}

/// Generates truth and measurements for the whole grid.
pub fn simulate(scenario: &SimScenario) -> Result<SimulatedTrajectory> {
    scenario.validate()?;
    let n = scenario.n_samples();
    let mut rng = measurement_stream(scenario.rng_seed);
    let mut truth = Vec::with_capacity(n);
    let mut frames = Vec::with_capacity(n);
    let mut r = scenario.initial_true_attitude;
    for k in 0..n {
        let t = k as f64 * scenario.dt;
        frames.push(sample_frame(scenario, &r, t, &mut rng)?);
        truth.push(r);
        r = step_true_attitude(&r, &scenario.omega, t, scenario.dt);
    }
    Ok(SimulatedTrajectory {
        dt: scenario.dt,
        truth,
        frames,
    })
}

// ---------------------------------------------------------------------------
// Config files
// ---------------------------------------------------------------------------

/// A scenario plus the filter adaptation rate, as read from a TOML file.
#[derive(Clone, Debug)]
pub struct ScenarioConfig {
    pub scenario: SimScenario,
    /// Bias adaptation rate γ for filter runs on this scenario.
    pub gamma: f64,
}

impl ScenarioConfig {
    pub fn paper_iv_a(rng_seed: u64) -> Self {
        Self {
            scenario: SimScenario::paper_iv_a(rng_seed),
            gamma: 1.0,
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    #[serde(default = "default_dt")]
    dt: f64,
    #[serde(default = "default_duration")]
    duration: f64,
    #[serde(default)]
    rng_seed: u64,
    #[serde(default = "default_gamma")]
    gamma: f64,
    #[serde(default)]
    derived_third_vector: bool,
    omega: Option<OmegaSignal>,
    gyro: GyroModel,
    observations: Vec<ObservationFile>,
    initial_true_attitude: Option<[[f64; 3]; 3]>,
    initial_estimate: Option<[[f64; 3]; 3]>,
}

fn default_dt() -> f64 {
    0.01
}

fn default_duration() -> f64 {
    14.0
}

fn default_gamma() -> f64 {
    1.0
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ObservationFile {
    direction: Vec3,
    #[serde(default = "Vec3::zero")]
    bias: Vec3,
    #[serde(default)]
    noise_std: f64,
    #[serde(default = "default_confidence")]
    confidence: f64,
}

fn default_confidence() -> f64 {
    1.0
}

fn attitude_from_rows(rows: Option<[[f64; 3]; 3]>) -> Result<RotationMatrix> {
    match rows {
        None => Ok(RotationMatrix::identity()),
        // Hand-written matrices are rarely orthonormal to machine
        // precision; project instead of rejecting.
        Some(rows) => project_to_so3(&Matrix3::new(rows)),
    }
}

/// Parses a scenario from TOML text. Field names mirror the scenario types;
/// units are seconds and rad/s. Missing attitudes default to identity.
pub fn scenario_from_toml(text: &str) -> Result<ScenarioConfig> {
    let file: ScenarioFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    if file.gamma.is_nan() || file.gamma <= 0.0 {
        return Err(Error::Config(format!("gamma {} must be > 0", file.gamma)));
    }
    let mut observations = Vec::with_capacity(file.observations.len());
    for (i, o) in file.observations.iter().enumerate() {
        observations.push(
            InertialObservation::new(o.direction, o.bias, o.noise_std, o.confidence)
                .map_err(|e| Error::Config(format!("observation {}: {e}", i + 1)))?,
        );
    }
    let scenario = SimScenario {
        dt: file.dt,
        duration: file.duration,
        omega: file.omega.unwrap_or_else(OmegaSignal::reference),
        gyro: file.gyro,
        observations,
        derived_third_vector: file.derived_third_vector,
        initial_true_attitude: attitude_from_rows(file.initial_true_attitude)
            .map_err(|e| Error::Config(format!("initial_true_attitude: {e}")))?,
        initial_estimate: attitude_from_rows(file.initial_estimate)
            .map_err(|e| Error::Config(format!("initial_estimate: {e}")))?,
        rng_seed: file.rng_seed,
    };
    scenario
        .validate()
        .map_err(|e| Error::Config(e.to_string()))?;
    Ok(ScenarioConfig {
        scenario,
        gamma: file.gamma,
    })
}

/// Loads a scenario config file from disk.
pub fn load_scenario(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    scenario_from_toml(&text).map_err(|e| match e {
        Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}
