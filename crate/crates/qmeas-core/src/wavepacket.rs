//! Gaussian packet kinematics and Bohmian particle trajectories.
//!
//! For the packet `|ψ| = (2πδ²)^{-1/4} exp(−(x−x̄)²/4δ²)` the polar-form
//! phase consistent with the measurement equation is
//! `S(x) = m[(δ̇/δ + 1/2τ)(x−x̄)²/2 + ẋ̄(x−x̄)]` (gauge `S(x̄) = 0`), so the
//! guidance velocity is linear in the offset from the packet center. The
//! `1/2τ` term is forced by the sourced continuity equation; dropping it
//! leaves a nonzero residual, which the tests check explicitly.

use alloc::vec::Vec;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::dynamics::TrajectoryInterpolant;
use crate::integrator::OdeError;
use crate::math;
use crate::model::{HybridParams, HybridState, ModelError, Trajectory};
use crate::stats::norm_ppf;

const TWO_PI: f64 = core::f64::consts::TAU;

/// Snapshot of the Gaussian packet parameters plus the physical constants
/// needed to evaluate Bohmian quantities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WavePacket {
    pub xbar: f64,
    pub xbar_dot: f64,
    pub delta: f64,
    pub delta_dot: f64,
    pub mass: f64,
    pub hbar: f64,
    pub inv_tau: f64,
}

impl WavePacket {
    pub fn new(params: &HybridParams, state: &HybridState) -> Result<Self, ModelError> {
        params.validate()?;
        if !(state.delta > 0.0) {
            return Err(ModelError::NonPositive { field: "delta" });
        }
        Ok(Self {
            xbar: state.xbar,
            xbar_dot: state.xbar_dot,
            delta: state.delta,
            delta_dot: state.delta_dot,
            mass: params.mass_qu,
            hbar: params.hbar,
            inv_tau: params.inv_tau(),
        })
    }

    /// Probability density `ρ(x) = (2πδ²)^{-1/2} exp(−(x−x̄)²/2δ²)`.
    pub fn density(&self, x: f64) -> f64 {
        let d2 = self.delta * self.delta;
        let xi = x - self.xbar;
        math::exp(-xi * xi / (2.0 * d2)) / math::sqrt(TWO_PI * d2)
    }

    /// Real amplitude `φ(x) = |ψ|(x) = ρ(x)^{1/2}`.
    pub fn amplitude(&self, x: f64) -> f64 {
        let d2 = self.delta * self.delta;
        let xi = x - self.xbar;
        math::exp(-xi * xi / (4.0 * d2)) / math::quartic_root(TWO_PI * d2)
    }

    /// Slope of the guidance velocity: `δ̇/δ + 1/(2τ)`.
    #[inline]
    pub fn velocity_slope(&self) -> f64 {
        self.delta_dot / self.delta + 0.5 * self.inv_tau
    }

    /// de Broglie guidance velocity `v(x) = ẋ̄ + (δ̇/δ + 1/2τ)(x−x̄)`.
    pub fn bohm_velocity(&self, x: f64) -> f64 {
        self.xbar_dot + self.velocity_slope() * (x - self.xbar)
    }

    /// Phase `S(x)` with the gauge `S(x̄) = 0`; `∂S/∂x = m·v`.
    pub fn phase(&self, x: f64) -> f64 {
        let xi = x - self.xbar;
        self.mass * (0.5 * self.velocity_slope() * xi * xi + self.xbar_dot * xi)
    }

    /// Quantum potential `V_qu(x) = −(ħ²/2mφ) φ'' = ħ²/(4mδ²)·[1 − (x−x̄)²/2δ²]`.
    pub fn quantum_potential(&self, x: f64) -> f64 {
        let d2 = self.delta * self.delta;
        let xi = x - self.xbar;
        self.hbar * self.hbar / (4.0 * self.mass * d2) * (1.0 - xi * xi / (2.0 * d2))
    }

    /// Time derivative of the density through the packet parameters,
    /// `∂ρ/∂t = ρ·[−δ̇/δ + (x−x̄)ẋ̄/δ² + (x−x̄)²δ̇/δ³]`.
    pub fn density_time_derivative(&self, x: f64) -> f64 {
        let d = self.delta;
        let xi = x - self.xbar;
        self.density(x)
            * (-self.delta_dot / d + xi * self.xbar_dot / (d * d)
                + xi * xi * self.delta_dot / (d * d * d))
    }

    /// Spatial flux divergence `∂(ρv)/∂x` for the linear velocity field.
    pub fn flux_divergence(&self, x: f64) -> f64 {
        let d2 = self.delta * self.delta;
        let xi = x - self.xbar;
        let a = self.velocity_slope();
        self.density(x) * (a - self.bohm_velocity(x) * xi / d2)
    }

    /// Sink/source density implied by the imaginary measurement term,
    /// `−(1/2τ)[(x−x̄)²/δ² − 1]ρ`.
    pub fn measurement_source(&self, x: f64) -> f64 {
        let d2 = self.delta * self.delta;
        let xi = x - self.xbar;
        -0.5 * self.inv_tau * (xi * xi / d2 - 1.0) * self.density(x)
    }
}

/// Particle ensemble guided by the packet carried along a trajectory.
#[derive(Debug, Clone)]
pub struct BohmEnsemble<'a> {
    traj: &'a Trajectory,
    positions: Vec<f64>,
    pub seed: u64,
}

/// Recorded particle positions over time; `snapshots[k][i]` is particle `i`
/// at `times[k]`.
#[derive(Debug, Clone)]
pub struct EnsemblePath {
    pub times: Vec<f64>,
    pub snapshots: Vec<Vec<f64>>,
}

impl<'a> BohmEnsemble<'a> {
    /// Draws `n` positions from the packet density at the trajectory start,
    /// by inverse CDF on a seeded deterministic stream.
    pub fn sample(traj: &'a Trajectory, n: usize, seed: u64) -> Result<Self, ModelError> {
        if n == 0 {
            return Err(ModelError::NonPositive {
                field: "n_particles",
            });
        }
        let first = traj.first().ok_or(ModelError::TimeNotIncreasing)?;
        let wp = WavePacket::new(&traj.params, first)?;
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let mut positions = Vec::with_capacity(n);
        for _ in 0..n {
            // Uniform in the open interval (0,1).
            let u = ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64);
            positions.push(wp.xbar + wp.delta * norm_ppf(u));
        }
        Ok(Self {
            traj,
            positions,
            seed,
        })
    }

    /// Wraps explicit starting positions (e.g. a single probe particle).
    pub fn from_positions(
        traj: &'a Trajectory,
        positions: Vec<f64>,
        seed: u64,
    ) -> Result<Self, ModelError> {
        if positions.is_empty() {
            return Err(ModelError::NonPositive {
                field: "n_particles",
            });
        }
        if positions.iter().any(|x| !x.is_finite()) {
            return Err(ModelError::NonFinite { field: "positions" });
        }
        Ok(Self {
            traj,
            positions,
            seed,
        })
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    /// Integrates `dx/dt = v(x, t)` for every particle with RK4 on a shared
    /// step grid; packet parameters come from the trajectory interpolant.
    /// Records the initial positions, every `record_stride`-th step, and the
    /// final time.
    pub fn advance(&self, t_end: f64, dt: f64, record_stride: usize) -> Result<EnsemblePath, OdeError> {
        if !(dt > 0.0) || record_stride == 0 {
            return Err(OdeError::BadControl {
                reason: "dt must be positive and record_stride at least 1",
            });
        }
        let interp = TrajectoryInterpolant::new(self.traj)?;
        let (t0, t_span_end) = interp.span();
        if t_end > t_span_end + 1e-9 * (t_span_end - t0).max(1.0) {
            return Err(OdeError::Guard {
                t: t_end,
                reason: "trajectory does not cover the requested time span",
            });
        }
        let inv_tau = self.traj.params.inv_tau();
        // (ẋ̄, x̄, slope) at a drive time.
        let drive = |t: f64| -> Result<(f64, f64, f64), OdeError> {
            let s = interp.eval(t)?;
            Ok((s.xbar_dot, s.xbar, s.delta_dot / s.delta + 0.5 * inv_tau))
        };

        let mut xs = self.positions.clone();
        let mut path = EnsemblePath {
            times: alloc::vec![t0],
            snapshots: alloc::vec![xs.clone()],
        };
        let mut k: u64 = 0;
        loop {
            let t = t0 + k as f64 * dt;
            let remaining = t_end - t;
            if remaining <= 0.0 {
                break;
            }
            let h = if remaining > dt { dt } else { remaining };
            let (v0, c0, a0) = drive(t)?;
            let (vh, ch, ah) = drive(t + 0.5 * h)?;
            let (v1, c1, a1) = drive(t + h)?;
            for x in xs.iter_mut() {
                let k1 = v0 + a0 * (*x - c0);
                let k2 = vh + ah * (*x + 0.5 * h * k1 - ch);
                let k3 = vh + ah * (*x + 0.5 * h * k2 - ch);
                let k4 = v1 + a1 * (*x + h * k3 - c1);
                *x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
                if !x.is_finite() {
                    return Err(OdeError::Blowup { t });
                }
            }
            k += 1;
            let t_new = if remaining > dt { t0 + k as f64 * dt } else { t_end };
            if k % record_stride as u64 == 0 || t_new == t_end {
                path.times.push(t_new);
                path.snapshots.push(xs.clone());
            }
            if t_new == t_end {
                break;
            }
        }
        Ok(path)
    }
}
