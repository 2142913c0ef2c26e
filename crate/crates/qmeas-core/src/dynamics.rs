//! Coupled right-hand side of the hybrid system and trajectory production.
//!
//! State slot order is `[X, Ẋ, x̄, ẋ̄, δ, δ̇]`:
//!
//! * `Ẍ = (−B X³ + A X − λ x̄ − M γ Ẋ + Λ cos Ω t) / M`
//! * `ẍ̄ = −ω² x̄ − (λ/m) X`
//! * `δ̈ = −δ̇/τ − (ω² + 1/4τ²) δ + ħ²/4m²δ³`

use alloc::vec::Vec;

use crate::integrator::{integrate, OdeError, RhsResult, StepControl};
use crate::math;
use crate::model::{HybridParams, HybridState, Trajectory};

/// Width-collapse guard. The inverse-cubic term repels the exact solution
/// from δ = 0, so a trip indicates integrator failure rather than physics.
pub const DELTA_MIN: f64 = 1e-12;

const WIDTH_COLLAPSE: &str = "width collapse guard tripped";

/// Validated right-hand side of the coupled system.
#[derive(Debug, Clone, Copy)]
pub struct HybridRhs {
    params: HybridParams,
    inv_tau: f64,
    omega_sq_eff: f64,
    width_coeff: f64,
}

impl HybridRhs {
    pub fn new(params: HybridParams) -> Result<Self, crate::model::ModelError> {
        params.validate()?;
        let inv_tau = params.inv_tau();
        Ok(Self {
            params,
            inv_tau,
            omega_sq_eff: params.omega * params.omega + 0.25 * inv_tau * inv_tau,
            width_coeff: params.hbar * params.hbar / (4.0 * params.mass_qu * params.mass_qu),
        })
    }

    pub fn params(&self) -> &HybridParams {
        &self.params
    }

    /// Classical acceleration Ẍ.
    #[inline]
    pub fn classical_accel(&self, t: f64, x_cl: f64, v_cl: f64, xbar: f64) -> f64 {
        let p = &self.params;
        (-p.stiffness_cub * x_cl * x_cl * x_cl + p.stiffness_lin * x_cl
            - p.coupling * xbar
            - p.mass_cl * p.gamma_cl * v_cl
            + p.drive_amp * math::cos(p.drive_freq * t))
            / p.mass_cl
    }

    /// Packet-center acceleration ẍ̄.
    #[inline]
    pub fn quantum_accel(&self, x_cl: f64, xbar: f64) -> f64 {
        let p = &self.params;
        -p.omega * p.omega * xbar - (p.coupling / p.mass_qu) * x_cl
    }

    /// Width acceleration δ̈.
    #[inline]
    pub fn width_accel(&self, delta: f64, delta_dot: f64) -> f64 {
        -delta_dot * self.inv_tau - self.omega_sq_eff * delta
            + self.width_coeff / (delta * delta * delta)
    }

    /// Full six-component derivative; errors when the width guard trips.
    pub fn eval(&self, t: f64, y: &[f64; 6]) -> RhsResult<6> {
        let delta = y[4];
        if delta <= DELTA_MIN {
            return Err(OdeError::Guard {
                t,
                reason: WIDTH_COLLAPSE,
            });
        }
        Ok([
            y[1],
            self.classical_accel(t, y[0], y[1], y[2]),
            y[3],
            self.quantum_accel(y[0], y[2]),
            y[5],
            self.width_accel(delta, y[5]),
        ])
    }

    /// Derivative of a state snapshot (same slot order as the state).
    pub fn eval_state(&self, s: &HybridState) -> RhsResult<6> {
        self.eval(s.t, &s.as_array())
    }

    /// Standalone `(δ, δ̇)` subsystem; the width equation is autonomous.
    pub fn width_rhs(&self) -> impl Fn(f64, &[f64; 2]) -> RhsResult<2> + '_ {
        move |t, y| {
            if y[0] <= DELTA_MIN {
                return Err(OdeError::Guard {
                    t,
                    reason: WIDTH_COLLAPSE,
                });
            }
            Ok([y[1], self.width_accel(y[0], y[1])])
        }
    }
}

/// Classical Hamiltonian `½MẊ² − ½AX² + ¼BX⁴`, conserved when Λ = λ = γ = 0.
pub fn classical_energy(params: &HybridParams, x_cl: f64, v_cl: f64) -> f64 {
    0.5 * params.mass_cl * v_cl * v_cl - 0.5 * params.stiffness_lin * x_cl * x_cl
        + 0.25 * params.stiffness_cub * x_cl * x_cl * x_cl * x_cl
}

/// Integrates the coupled system, sampling every `stride` accepted steps.
/// The first sample is `init`; the last sample lands exactly on `t_end`.
pub fn simulate(
    rhs: &HybridRhs,
    init: HybridState,
    t_end: f64,
    ctl: &StepControl,
    stride: usize,
) -> Result<Trajectory, OdeError> {
    if stride == 0 {
        return Err(OdeError::BadControl {
            reason: "stride must be at least 1",
        });
    }
    if !init.is_finite() {
        return Err(OdeError::Blowup { t: init.t });
    }
    if init.delta <= DELTA_MIN {
        return Err(OdeError::Guard {
            t: init.t,
            reason: WIDTH_COLLAPSE,
        });
    }

    let mut traj = Trajectory::new(*rhs.params(), *ctl, None);
    traj.push(init);
    let mut accepted = 0usize;
    let mut f = |t: f64, y: &[f64; 6]| rhs.eval(t, y);
    let y_end = integrate(&mut f, init.t, init.as_array(), t_end, ctl, |t, y| {
        accepted += 1;
        if accepted % stride == 0 && t < t_end {
            traj.push(HybridState::from_array(t, y));
        }
    })?;
    traj.push(HybridState::from_array(t_end, &y_end));
    Ok(traj)
}

/// Cubic-Hermite interpolant over all six state components, with nodal
/// derivatives reconstructed from the right-hand side. Fourth-order accurate
/// in the sample spacing and C¹ across nodes, which keeps the PDE drive and
/// Bohmian velocity smooth between samples.
#[derive(Debug, Clone)]
pub struct TrajectoryInterpolant {
    ts: Vec<f64>,
    ys: Vec<[f64; 6]>,
    ds: Vec<[f64; 6]>,
}

impl TrajectoryInterpolant {
    pub fn new(traj: &Trajectory) -> Result<Self, OdeError> {
        if traj.len() < 2 {
            return Err(OdeError::BadControl {
                reason: "interpolation needs at least two samples",
            });
        }
        let rhs = HybridRhs::new(traj.params).map_err(|_| OdeError::BadControl {
            reason: "trajectory parameter snapshot is invalid",
        })?;
        let n = traj.len();
        let mut ts = Vec::with_capacity(n);
        let mut ys = Vec::with_capacity(n);
        let mut ds = Vec::with_capacity(n);
        for s in traj.samples() {
            let y = s.as_array();
            ds.push(rhs.eval(s.t, &y)?);
            ts.push(s.t);
            ys.push(y);
        }
        Ok(Self { ts, ys, ds })
    }

    pub fn span(&self) -> (f64, f64) {
        (self.ts[0], *self.ts.last().unwrap())
    }

    /// Interpolated state at `t`, which must lie within the sampled span
    /// (up to a tiny rounding slack).
    pub fn eval(&self, t: f64) -> Result<HybridState, OdeError> {
        let (t0, t1) = self.span();
        let slack = 1e-9 * (t1 - t0).max(1.0);
        if t < t0 - slack || t > t1 + slack {
            return Err(OdeError::Guard {
                t,
                reason: "interpolation time outside trajectory span",
            });
        }
        let t = t.clamp(t0, t1);
        // Index of the segment containing t.
        let i = self
            .ts
            .partition_point(|&x| x <= t)
            .clamp(1, self.ts.len() - 1)
            - 1;
        let (ta, tb) = (self.ts[i], self.ts[i + 1]);
        let h = tb - ta;
        let s = (t - ta) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        let mut y = [0.0; 6];
        for c in 0..6 {
            y[c] = h00 * self.ys[i][c]
                + h10 * h * self.ds[i][c]
                + h01 * self.ys[i + 1][c]
                + h11 * h * self.ds[i + 1][c];
        }
        Ok(HybridState::from_array(t, &y))
    }
}
