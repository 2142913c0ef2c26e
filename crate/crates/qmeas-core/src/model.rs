//! Parameter and state types shared by every other module.

use alloc::vec::Vec;
use core::fmt;

use crate::integrator::StepControl;

/// Physical constants of the coupled hybrid system.
///
/// All quantities are dimensionless by default (`ħ = m = M = 1` convention);
/// the annotated units are documentation only. `tau = f64::INFINITY` is the
/// measurement-free limit (`1/τ = 0`) and is accepted by [`validate`].
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HybridParams {
    /// Classical mass M (mass).
    #[cfg_attr(feature = "serde", serde(rename = "M"))]
    pub mass_cl: f64,
    /// Linear destabilizing stiffness A of the Duffing potential (mass/time²).
    /// Negative values turn the classical particle into a plain harmonic
    /// oscillator.
    #[cfg_attr(feature = "serde", serde(rename = "A"))]
    pub stiffness_lin: f64,
    /// Cubic stiffness B (mass/(length²·time²)).
    #[cfg_attr(feature = "serde", serde(rename = "B"))]
    pub stiffness_cub: f64,
    /// Drive amplitude Λ (force).
    #[cfg_attr(feature = "serde", serde(rename = "Lambda"))]
    pub drive_amp: f64,
    /// Drive angular frequency Ω (1/time).
    #[cfg_attr(feature = "serde", serde(rename = "Omega"))]
    pub drive_freq: f64,
    /// Classical–quantum coupling strength λ (mass/time²).
    #[cfg_attr(feature = "serde", serde(rename = "lambda_c"))]
    pub coupling: f64,
    /// Quantum particle mass m (mass).
    #[cfg_attr(feature = "serde", serde(rename = "m"))]
    pub mass_qu: f64,
    /// Quantum oscillator angular frequency ω (1/time).
    pub omega: f64,
    /// Measurement relaxation time τ (time); `INFINITY` disables measurement.
    pub tau: f64,
    /// Reduced Planck constant ħ (action).
    pub hbar: f64,
    /// Optional classical damping coefficient γ (1/time), default 0. The
    /// strange-attractor regime needs dissipation, which the bare equation of
    /// motion lacks; enabling this is an explicit configuration choice.
    #[cfg_attr(feature = "serde", serde(default))]
    pub gamma_cl: f64,
}

impl HybridParams {
    /// `1/τ`, which is 0 in the measurement-free limit.
    #[inline]
    pub fn inv_tau(&self) -> f64 {
        if self.tau == f64::INFINITY {
            0.0
        } else {
            self.tau.recip()
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        validate(self)
    }
}

/// Instantaneous state of the six-dimensional hybrid system.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HybridState {
    pub t: f64,
    /// Classical position X.
    #[cfg_attr(feature = "serde", serde(rename = "X"))]
    pub x_cl: f64,
    /// Classical velocity Ẋ.
    #[cfg_attr(feature = "serde", serde(rename = "Xdot"))]
    pub v_cl: f64,
    /// Measurement record / packet center x̄.
    pub xbar: f64,
    /// ẋ̄.
    #[cfg_attr(feature = "serde", serde(rename = "xbardot"))]
    pub xbar_dot: f64,
    /// Packet width δ, strictly positive.
    pub delta: f64,
    /// δ̇.
    #[cfg_attr(feature = "serde", serde(rename = "deltadot"))]
    pub delta_dot: f64,
}

impl HybridState {
    pub fn new(
        t: f64,
        x_cl: f64,
        v_cl: f64,
        xbar: f64,
        xbar_dot: f64,
        delta: f64,
        delta_dot: f64,
    ) -> Self {
        Self {
            t,
            x_cl,
            v_cl,
            xbar,
            xbar_dot,
            delta,
            delta_dot,
        }
    }

    /// State vector in the canonical slot order `[X, Ẋ, x̄, ẋ̄, δ, δ̇]`.
    #[inline]
    pub fn as_array(&self) -> [f64; 6] {
        [
            self.x_cl,
            self.v_cl,
            self.xbar,
            self.xbar_dot,
            self.delta,
            self.delta_dot,
        ]
    }

    #[inline]
    pub fn from_array(t: f64, y: &[f64; 6]) -> Self {
        Self {
            t,
            x_cl: y[0],
            v_cl: y[1],
            xbar: y[2],
            xbar_dot: y[3],
            delta: y[4],
            delta_dot: y[5],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.t.is_finite() && self.as_array().iter().all(|v| v.is_finite())
    }
}

/// First violated invariant, by config key name.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelError {
    NonPositive { field: &'static str },
    Negative { field: &'static str },
    NonFinite { field: &'static str },
    TimeNotIncreasing,
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelError::NonPositive { field } => write!(f, "{field} must be positive"),
            ModelError::Negative { field } => write!(f, "{field} must be non-negative"),
            ModelError::NonFinite { field } => write!(f, "{field} must be finite"),
            ModelError::TimeNotIncreasing => write!(f, "sample times must be strictly increasing"),
        }
    }
}

impl core::error::Error for ModelError {}

/// Checks every parameter invariant; never panics, reports the first
/// violation by field name. Works field by field so non-finite inputs are
/// named precisely.
pub fn validate(p: &HybridParams) -> Result<(), ModelError> {
    let finite = |v: f64, field: &'static str| {
        if v.is_finite() {
            Ok(())
        } else {
            Err(ModelError::NonFinite { field })
        }
    };
    let positive = |v: f64, field: &'static str| {
        finite(v, field)?;
        if v > 0.0 {
            Ok(())
        } else {
            Err(ModelError::NonPositive { field })
        }
    };
    let non_negative = |v: f64, field: &'static str| {
        finite(v, field)?;
        if v >= 0.0 {
            Ok(())
        } else {
            Err(ModelError::Negative { field })
        }
    };

    positive(p.mass_cl, "M")?;
    finite(p.stiffness_lin, "A")?;
    finite(p.stiffness_cub, "B")?;
    finite(p.drive_amp, "Lambda")?;
    non_negative(p.drive_freq, "Omega")?;
    finite(p.coupling, "lambda_c")?;
    positive(p.mass_qu, "m")?;
    non_negative(p.omega, "omega")?;
    // tau: strictly positive, +inf allowed (measurement off).
    if p.tau.is_nan() || p.tau == f64::NEG_INFINITY {
        return Err(ModelError::NonFinite { field: "tau" });
    }
    if !(p.tau > 0.0) {
        return Err(ModelError::NonPositive { field: "tau" });
    }
    positive(p.hbar, "hbar")?;
    non_negative(p.gamma_cl, "gamma_cl")?;
    Ok(())
}

/// Ordered sequence of state samples at strictly increasing times, plus the
/// settings that produced it.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub params: HybridParams,
    pub control: StepControl,
    pub seed: Option<u64>,
    samples: Vec<HybridState>,
}

impl Trajectory {
    pub fn new(params: HybridParams, control: StepControl, seed: Option<u64>) -> Self {
        Self {
            params,
            control,
            seed,
            samples: Vec::new(),
        }
    }

    /// Builds a trajectory from pre-existing samples, rejecting non-monotonic
    /// time stamps.
    pub fn from_samples(
        params: HybridParams,
        control: StepControl,
        seed: Option<u64>,
        samples: Vec<HybridState>,
    ) -> Result<Self, ModelError> {
        for w in samples.windows(2) {
            if !(w[1].t > w[0].t) {
                return Err(ModelError::TimeNotIncreasing);
            }
        }
        Ok(Self {
            params,
            control,
            seed,
            samples,
        })
    }

    /// Appends a sample; panics if time does not increase (internal misuse).
    pub fn push(&mut self, s: HybridState) {
        if let Some(last) = self.samples.last() {
            assert!(s.t > last.t, "trajectory sample times must increase");
        }
        self.samples.push(s);
    }

    pub fn samples(&self) -> &[HybridState] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn first(&self) -> Option<&HybridState> {
        self.samples.first()
    }

    pub fn last(&self) -> Option<&HybridState> {
        self.samples.last()
    }

    /// Time span `(t_first, t_last)`; `None` when fewer than one sample.
    pub fn span(&self) -> Option<(f64, f64)> {
        match (self.samples.first(), self.samples.last()) {
            (Some(a), Some(b)) => Some((a.t, b.t)),
            _ => None,
        }
    }

    /// Largest packet width along the trajectory.
    pub fn max_delta(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, s| m.max(s.delta))
    }
}

/// All-positive parameter set used across the crate's unit tests.
#[cfg(test)]
pub(crate) fn test_params() -> HybridParams {
    HybridParams {
        mass_cl: 1.0,
        stiffness_lin: 1.0,
        stiffness_cub: 1.0,
        drive_amp: 0.3,
        drive_freq: 1.0,
        coupling: 0.01,
        mass_qu: 1.0,
        omega: 1.0,
        tau: 10.0,
        hbar: 1.0,
        gamma_cl: 0.0,
    }
}
