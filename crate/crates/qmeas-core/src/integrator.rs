//! Fixed-step RK4 and adaptive Dormand–Prince 5(4) integration over
//! fixed-dimension real state vectors.
//!
//! Right-hand sides are fallible so domain guards (e.g. the width-collapse
//! guard) can abort a step cleanly; the integrator itself adds blow-up and
//! step-underflow detection.

use core::fmt;

/// Step-size policy. Fixed mode is bit-reproducible; adaptive mode controls
/// the local error per step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepControl {
    Fixed {
        dt: f64,
    },
    Adaptive {
        rtol: f64,
        atol: f64,
        dt_min: f64,
        dt_max: f64,
    },
}

impl StepControl {
    pub fn validate(&self) -> Result<(), OdeError> {
        match *self {
            StepControl::Fixed { dt } => {
                if !(dt > 0.0) || !dt.is_finite() {
                    return Err(OdeError::BadControl {
                        reason: "dt must be positive and finite",
                    });
                }
            }
            StepControl::Adaptive {
                rtol,
                atol,
                dt_min,
                dt_max,
            } => {
                if !(rtol > 0.0) {
                    return Err(OdeError::BadControl {
                        reason: "rtol must be positive",
                    });
                }
                if !(atol >= 0.0) {
                    return Err(OdeError::BadControl {
                        reason: "atol must be non-negative",
                    });
                }
                if !(dt_min > 0.0 && dt_min <= dt_max) {
                    return Err(OdeError::BadControl {
                        reason: "require 0 < dt_min <= dt_max",
                    });
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OdeError {
    /// Non-finite state or derivative.
    Blowup { t: f64 },
    /// Adaptive controller pushed the step below `dt_min`.
    StepUnderflow { t: f64 },
    /// A domain guard rejected the state.
    Guard { t: f64, reason: &'static str },
    BadControl { reason: &'static str },
}

impl fmt::Display for OdeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OdeError::Blowup { t } => write!(f, "numerical blowup at t = {t}"),
            OdeError::StepUnderflow { t } => write!(f, "step-size underflow at t = {t}"),
            OdeError::Guard { t, reason } => write!(f, "{reason} at t = {t}"),
            OdeError::BadControl { reason } => write!(f, "invalid step control: {reason}"),
        }
    }
}

impl core::error::Error for OdeError {}

pub type RhsResult<const N: usize> = Result<[f64; N], OdeError>;

#[inline]
fn all_finite<const N: usize>(y: &[f64; N]) -> bool {
    y.iter().all(|v| v.is_finite())
}

/// One classical 4th-order Runge–Kutta step.
pub fn step_rk4<const N: usize, F>(rhs: &mut F, t: f64, y: &[f64; N], dt: f64) -> RhsResult<N>
where
    F: FnMut(f64, &[f64; N]) -> RhsResult<N>,
{
    let k1 = rhs(t, y)?;
    let mut ya = [0.0; N];
    for i in 0..N {
        ya[i] = y[i] + 0.5 * dt * k1[i];
    }
    let k2 = rhs(t + 0.5 * dt, &ya)?;
    for i in 0..N {
        ya[i] = y[i] + 0.5 * dt * k2[i];
    }
    let k3 = rhs(t + 0.5 * dt, &ya)?;
    for i in 0..N {
        ya[i] = y[i] + dt * k3[i];
    }
    let k4 = rhs(t + dt, &ya)?;
    let mut out = [0.0; N];
    for i in 0..N {
        out[i] = y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    if all_finite(&out) {
        Ok(out)
    } else {
        Err(OdeError::Blowup { t })
    }
}

// Dormand–Prince 5(4) tableau.
const DP_C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const DP_A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const DP_B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const DP_B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// One Dormand–Prince step: 5th-order solution plus embedded error estimate.
fn step_dopri<const N: usize, F>(
    rhs: &mut F,
    t: f64,
    y: &[f64; N],
    dt: f64,
) -> Result<([f64; N], [f64; N]), OdeError>
where
    F: FnMut(f64, &[f64; N]) -> RhsResult<N>,
{
    let mut k = [[0.0; N]; 7];
    k[0] = rhs(t, y)?;
    for s in 1..7 {
        let mut ys = *y;
        for (j, kj) in k.iter().enumerate().take(s) {
            let a = DP_A[s][j];
            if a != 0.0 {
                for i in 0..N {
                    ys[i] += dt * a * kj[i];
                }
            }
        }
        k[s] = rhs(t + DP_C[s] * dt, &ys)?;
    }
    let mut y5 = [0.0; N];
    let mut err = [0.0; N];
    for i in 0..N {
        let mut acc5 = 0.0;
        let mut acc4 = 0.0;
        for s in 0..7 {
            acc5 += DP_B5[s] * k[s][i];
            acc4 += DP_B4[s] * k[s][i];
        }
        y5[i] = y[i] + dt * acc5;
        err[i] = dt * (acc5 - acc4);
    }
    if all_finite(&y5) {
        Ok((y5, err))
    } else {
        Err(OdeError::Blowup { t })
    }
}

/// Scaled max-norm of the embedded error: `max_i |err_i| / (atol + rtol·|y_i|)`.
fn error_norm<const N: usize>(err: &[f64; N], y: &[f64; N], rtol: f64, atol: f64) -> f64 {
    let mut m = 0.0f64;
    for i in 0..N {
        let scale = atol + rtol * crate::math::abs(y[i]);
        m = m.max(crate::math::abs(err[i]) / scale);
    }
    m
}

/// Advances the solution from `t0` to exactly `t_end` (last step truncated).
/// The observer runs once per accepted step with the new `(t, y)`.
pub fn integrate<const N: usize, F, O>(
    rhs: &mut F,
    t0: f64,
    y0: [f64; N],
    t_end: f64,
    ctl: &StepControl,
    mut observer: O,
) -> RhsResult<N>
where
    F: FnMut(f64, &[f64; N]) -> RhsResult<N>,
    O: FnMut(f64, &[f64; N]),
{
    ctl.validate()?;
    if !(t_end > t0) {
        return Err(OdeError::BadControl {
            reason: "t_end must exceed t0",
        });
    }
    if !all_finite(&y0) {
        return Err(OdeError::Blowup { t: t0 });
    }

    match *ctl {
        StepControl::Fixed { dt } => {
            let mut y = y0;
            // t reconstructed as t0 + k·dt each step, so fixed-step runs are
            // bit-reproducible and the final time is assigned exactly.
            let mut k: u64 = 0;
            loop {
                let t = t0 + k as f64 * dt;
                let remaining = t_end - t;
                if remaining <= 0.0 {
                    break;
                }
                if remaining > dt {
                    y = step_rk4(rhs, t, &y, dt)?;
                    k += 1;
                    observer(t0 + k as f64 * dt, &y);
                } else {
                    y = step_rk4(rhs, t, &y, remaining)?;
                    observer(t_end, &y);
                    break;
                }
            }
            Ok(y)
        }
        StepControl::Adaptive {
            rtol,
            atol,
            dt_min,
            dt_max,
        } => {
            let mut y = y0;
            let mut t = t0;
            let mut dt = dt_max.min(t_end - t0);
            while t < t_end {
                let mut truncated = false;
                if t + dt >= t_end {
                    dt = t_end - t;
                    truncated = true;
                }
                let (y_new, err) = step_dopri(rhs, t, &y, dt)?;
                let norm = error_norm(&err, &y, rtol, atol);
                if norm <= 1.0 {
                    t = if truncated { t_end } else { t + dt };
                    y = y_new;
                    observer(t, &y);
                } else if dt <= dt_min * (1.0 + 1e-12) {
                    return Err(OdeError::StepUnderflow { t });
                }
                // Standard controller with safety factor and growth clamps.
                let factor = if norm > 0.0 {
                    0.9 * crate::math::powf(norm, -0.2)
                } else {
                    5.0
                };
                dt = (dt * factor.clamp(0.2, 5.0)).clamp(dt_min, dt_max);
            }
            Ok(y)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math;

    fn exp_rhs(_t: f64, y: &[f64; 1]) -> RhsResult<1> {
        Ok([y[0]])
    }

    #[test]
    fn rk4_constant_solution() {
        let mut rhs = |_t: f64, _y: &[f64; 1]| -> RhsResult<1> { Ok([0.0]) };
        let y = step_rk4(&mut rhs, 0.0, &[3.0], 0.7).unwrap();
        assert_eq!(y[0], 3.0);
    }

    #[test]
    fn rk4_exponential_single_step() {
        let mut rhs = exp_rhs;
        let y = step_rk4(&mut rhs, 0.0, &[1.0], 0.1).unwrap();
        assert!((y[0] - math::exp(0.1)).abs() < 1e-7, "y = {}", y[0]);
    }

    #[test]
    fn rk4_harmonic_full_period() {
        let mut rhs = |_t: f64, y: &[f64; 2]| -> RhsResult<2> { Ok([y[1], -y[0]]) };
        let y = integrate(
            &mut rhs,
            0.0,
            [1.0, 0.0],
            2.0 * core::f64::consts::PI,
            &StepControl::Fixed { dt: 1e-3 },
            |_, _| {},
        )
        .unwrap();
        assert!((y[0] - 1.0).abs() < 1e-9);
        assert!(y[1].abs() < 1e-9);
    }

    #[test]
    fn fixed_integrate_constant_rhs_leaves_state() {
        let mut rhs = |_t: f64, _y: &[f64; 2]| -> RhsResult<2> { Ok([0.0, 0.0]) };
        let y = integrate(
            &mut rhs,
            0.0,
            [1.25, -2.5],
            5.0,
            &StepControl::Fixed { dt: 0.3 },
            |_, _| {},
        )
        .unwrap();
        assert_eq!(y, [1.25, -2.5]);
    }

    #[test]
    fn adaptive_decay_matches_closed_form() {
        let mut rhs = |_t: f64, y: &[f64; 1]| -> RhsResult<1> { Ok([-y[0]]) };
        let ctl = StepControl::Adaptive {
            rtol: 1e-8,
            atol: 1e-12,
            dt_min: 1e-12,
            dt_max: 0.5,
        };
        let y = integrate(&mut rhs, 0.0, [1.0], 1.0, &ctl, |_, _| {}).unwrap();
        assert!((y[0] - math::exp(-1.0)).abs() < 1e-7);
    }

    #[test]
    fn final_time_is_exact_and_observer_sees_every_step() {
        let mut rhs = exp_rhs;
        let mut times = alloc::vec::Vec::new();
        let ctl = StepControl::Fixed { dt: 0.03 };
        integrate(&mut rhs, 0.0, [1.0], 1.0, &ctl, |t, _| times.push(t)).unwrap();
        assert_eq!(*times.last().unwrap(), 1.0);
        // 33 full steps of 0.03 plus one truncated step.
        assert_eq!(times.len(), 34);
    }

    #[test]
    fn order_four_convergence_on_exponential() {
        let run = |dt: f64| {
            let mut rhs = exp_rhs;
            let y = integrate(
                &mut rhs,
                0.0,
                [1.0],
                1.0,
                &StepControl::Fixed { dt },
                |_, _| {},
            )
            .unwrap();
            (y[0] - math::exp(1.0)).abs()
        };
        let e1 = run(0.01);
        let e2 = run(0.005);
        let ratio = e1 / e2;
        assert!(
            (12.8..=19.2).contains(&ratio),
            "order-4 ratio out of range: {ratio}"
        );
    }

    #[test]
    fn blowup_reported_with_time() {
        let mut rhs = |_t: f64, y: &[f64; 1]| -> RhsResult<1> { Ok([y[0] * y[0]]) };
        // dy/dt = y² from y=1 blows up at t=1.
        let r = integrate(
            &mut rhs,
            0.0,
            [1.0],
            2.0,
            &StepControl::Fixed { dt: 1e-3 },
            |_, _| {},
        );
        assert!(matches!(r, Err(OdeError::Blowup { .. })));
    }

    #[test]
    fn adaptive_underflow_reported() {
        // Derivative finite but violently oscillating under any tolerance:
        // force underflow with a tiny dt_max window and absurd tolerance.
        let mut rhs = |t: f64, _y: &[f64; 1]| -> RhsResult<1> { Ok([1.0 / (1e-300 + t * t)]) };
        let ctl = StepControl::Adaptive {
            rtol: 1e-14,
            atol: 0.0,
            dt_min: 1e-3,
            dt_max: 1.0,
        };
        let r = integrate(&mut rhs, 0.0, [0.0], 1.0, &ctl, |_, _| {});
        assert!(matches!(r, Err(OdeError::StepUnderflow { .. })));
    }

    #[test]
    fn fixed_step_is_bit_reproducible() {
        let run = || {
            let mut rhs = |t: f64, y: &[f64; 2]| -> RhsResult<2> {
                Ok([y[1], -math::sin(y[0]) + 0.3 * math::cos(t)])
            };
            let mut out = alloc::vec::Vec::new();
            integrate(
                &mut rhs,
                0.0,
                [0.1, 0.0],
                10.0,
                &StepControl::Fixed { dt: 1e-2 },
                |t, y| out.push((t.to_bits(), y[0].to_bits(), y[1].to_bits())),
            )
            .unwrap();
            out
        };
        assert_eq!(run(), run());
    }
}
