//! Leading-Lyapunov-exponent machinery: two-trajectory divergence series,
//! log-linear regression on the pre-saturation window, and a
//! rescale-and-average (renormalized) long-run estimator.
//!
//! Distances are tracked per subspace: classical `(X, Ẋ)`, quantum `(x̄, ẋ̄)`
//! and width `(δ, δ̇)`. The trajectory pair is integrated as one stacked
//! 12-dimensional system so both members always share step sizes, also in
//! adaptive mode.

use alloc::vec::Vec;
use core::fmt;

use crate::dynamics::HybridRhs;
use crate::integrator::{integrate, OdeError, RhsResult, StepControl};
use crate::math;
use crate::model::{HybridParams, HybridState};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Channel {
    Classical,
    Quantum,
    Width,
}

/// Which state slot receives the initial perturbation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OffsetTarget {
    ClassicalPosition,
    PacketCenter,
    Width,
}

impl OffsetTarget {
    fn slot(self) -> usize {
        match self {
            OffsetTarget::ClassicalPosition => 0,
            OffsetTarget::PacketCenter => 2,
            OffsetTarget::Width => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OffsetSpec {
    pub target: OffsetTarget,
    pub magnitude: f64,
}

impl Default for OffsetSpec {
    fn default() -> Self {
        Self {
            target: OffsetTarget::ClassicalPosition,
            magnitude: 1e-7,
        }
    }
}

/// Per-subspace Euclidean distances of a trajectory pair over time.
#[derive(Debug, Clone)]
pub struct DivergenceSeries {
    pub params: HybridParams,
    pub initial_offset: f64,
    pub times: Vec<f64>,
    pub dist_cl: Vec<f64>,
    pub dist_qu: Vec<f64>,
    pub dist_width: Vec<f64>,
}

impl DivergenceSeries {
    pub fn channel(&self, ch: Channel) -> &[f64] {
        match ch {
            Channel::Classical => &self.dist_cl,
            Channel::Quantum => &self.dist_qu,
            Channel::Width => &self.dist_width,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorMethod {
    Regression,
    Renormalized,
}

impl EstimatorMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            EstimatorMethod::Regression => "regression",
            EstimatorMethod::Renormalized => "renormalized",
        }
    }
}

/// Fitted exponent with diagnostics.
#[derive(Debug, Clone, Copy)]
pub struct LyapunovEstimate {
    /// Exponent λ (1/time).
    pub exponent: f64,
    /// Prefactor c (distance units): `Δ(t) ≈ c·e^{λt}` for the regression
    /// method, the rescale distance Δ(0) for the renormalized method.
    pub prefactor: f64,
    /// Fit window `[t_a, t_b]`.
    pub window: (f64, f64),
    /// RMS residual of the log-distance fit (regression), or the RMS spread
    /// of per-interval rates around the mean (renormalized).
    pub residual: f64,
    pub method: EstimatorMethod,
    pub n_points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LyapunovError {
    Ode(OdeError),
    ZeroOffset,
    /// Fewer usable points than the estimator requires.
    InsufficientData {
        available: usize,
        required: usize,
    },
    SeparationUnderflow {
        t: f64,
    },
    BadSettings {
        reason: &'static str,
    },
}

impl fmt::Display for LyapunovError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LyapunovError::Ode(e) => write!(f, "{e}"),
            LyapunovError::ZeroOffset => write!(f, "offset must be nonzero"),
            LyapunovError::InsufficientData {
                available,
                required,
            } => write!(
                f,
                "insufficient pre-saturation data: {available} points, need {required}"
            ),
            LyapunovError::SeparationUnderflow { t } => {
                write!(f, "separation underflow at t = {t}")
            }
            LyapunovError::BadSettings { reason } => write!(f, "{reason}"),
        }
    }
}

impl core::error::Error for LyapunovError {}

impl From<OdeError> for LyapunovError {
    fn from(e: OdeError) -> Self {
        LyapunovError::Ode(e)
    }
}

fn channel_distance(d: &[f64; 12], ch: Channel) -> f64 {
    let i = match ch {
        Channel::Classical => 0,
        Channel::Quantum => 2,
        Channel::Width => 4,
    };
    math::hypot(d[i + 6] - d[i], d[i + 7] - d[i + 1])
}

fn stacked_rhs<'a>(
    rhs: &'a HybridRhs,
) -> impl FnMut(f64, &[f64; 12]) -> RhsResult<12> + 'a {
    move |t, y| {
        let mut a = [0.0; 6];
        let mut b = [0.0; 6];
        a.copy_from_slice(&y[..6]);
        b.copy_from_slice(&y[6..]);
        let da = rhs.eval(t, &a)?;
        let db = rhs.eval(t, &b)?;
        let mut out = [0.0; 12];
        out[..6].copy_from_slice(&da);
        out[6..].copy_from_slice(&db);
        Ok(out)
    }
}

fn stack(base: &[f64; 6], pert: &[f64; 6]) -> [f64; 12] {
    let mut y = [0.0; 12];
    y[..6].copy_from_slice(base);
    y[6..].copy_from_slice(pert);
    y
}

/// Integrates the pair `(init, init + offset)` with identical settings and
/// records the per-subspace distances every `record_stride` accepted steps.
pub fn divergence_series(
    params: &HybridParams,
    init: &HybridState,
    offset: &OffsetSpec,
    t_end: f64,
    ctl: &StepControl,
    record_stride: usize,
) -> Result<DivergenceSeries, LyapunovError> {
    if offset.magnitude == 0.0 {
        return Err(LyapunovError::ZeroOffset);
    }
    if !offset.magnitude.is_finite() {
        return Err(LyapunovError::BadSettings {
            reason: "offset magnitude must be finite",
        });
    }
    if record_stride == 0 {
        return Err(LyapunovError::BadSettings {
            reason: "record_stride must be at least 1",
        });
    }
    let rhs = HybridRhs::new(*params).map_err(|_| LyapunovError::BadSettings {
        reason: "invalid parameters",
    })?;

    let base = init.as_array();
    let mut pert = base;
    pert[offset.target.slot()] += offset.magnitude;

    let mut series = DivergenceSeries {
        params: *params,
        initial_offset: math::abs(offset.magnitude),
        times: Vec::new(),
        dist_cl: Vec::new(),
        dist_qu: Vec::new(),
        dist_width: Vec::new(),
    };
    let y0 = stack(&base, &pert);
    let mut record = |t: f64, y: &[f64; 12]| {
        series.times.push(t);
        series.dist_cl.push(channel_distance(y, Channel::Classical));
        series.dist_qu.push(channel_distance(y, Channel::Quantum));
        series.dist_width.push(channel_distance(y, Channel::Width));
    };
    record(init.t, &y0);
    let mut f = stacked_rhs(&rhs);
    let mut accepted = 0usize;
    let y_end = integrate(&mut f, init.t, y0, t_end, ctl, |t, y| {
        accepted += 1;
        if accepted % record_stride == 0 && t < t_end {
            record(t, y);
        }
    })?;
    record(t_end, &y_end);
    Ok(series)
}

/// Least-squares fit of `ln Δ(t)` vs `t` over the points below `saturation`,
/// after skipping the initial transient window.
#[derive(Debug, Clone, Copy)]
pub struct FitSettings {
    /// Distances at or above this value are considered saturated ("order
    /// one" in dimensionless units).
    pub saturation: f64,
    /// Time span after the series start excluded from the fit.
    pub transient_skip: f64,
    pub min_points: usize,
}

impl Default for FitSettings {
    fn default() -> Self {
        Self {
            saturation: 1.0,
            transient_skip: 1.0,
            min_points: 10,
        }
    }
}

pub fn fit_exponent(
    series: &DivergenceSeries,
    channel: Channel,
    settings: &FitSettings,
) -> Result<LyapunovEstimate, LyapunovError> {
    let dists = series.channel(channel);
    let t_start = *series.times.first().ok_or(LyapunovError::InsufficientData {
        available: 0,
        required: settings.min_points,
    })?;

    let mut ts = Vec::new();
    let mut logs = Vec::new();
    for (&t, &d) in series.times.iter().zip(dists.iter()) {
        if t - t_start >= settings.transient_skip && d > 0.0 && d < settings.saturation {
            ts.push(t);
            logs.push(math::ln(d));
        }
    }
    let n = ts.len();
    if n < settings.min_points {
        return Err(LyapunovError::InsufficientData {
            available: n,
            required: settings.min_points,
        });
    }

    let nf = n as f64;
    let mean_t = ts.iter().sum::<f64>() / nf;
    let mean_l = logs.iter().sum::<f64>() / nf;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for i in 0..n {
        let dt = ts[i] - mean_t;
        sxx += dt * dt;
        sxy += dt * (logs[i] - mean_l);
    }
    if sxx == 0.0 {
        return Err(LyapunovError::BadSettings {
            reason: "degenerate fit window",
        });
    }
    let slope = sxy / sxx;
    let intercept = mean_l - slope * mean_t;
    let mut ss = 0.0;
    for i in 0..n {
        let r = logs[i] - (intercept + slope * ts[i]);
        ss += r * r;
    }
    Ok(LyapunovEstimate {
        exponent: slope,
        prefactor: math::exp(intercept),
        window: (ts[0], ts[n - 1]),
        residual: math::sqrt(ss / nf),
        method: EstimatorMethod::Regression,
        n_points: n,
    })
}

/// Settings for the rescale-and-average estimator.
#[derive(Debug, Clone, Copy)]
pub struct RenormSettings {
    /// Time between rescalings.
    pub interval: f64,
    /// Number of measured intervals (at least 10).
    pub n_intervals: usize,
    /// Leading intervals excluded while the separation aligns with the
    /// most-expanding direction.
    pub warmup_intervals: usize,
    /// Fixed RK4 step used inside each interval.
    pub dt: f64,
}

impl Default for RenormSettings {
    fn default() -> Self {
        Self {
            interval: 1.0,
            n_intervals: 400,
            warmup_intervals: 5,
            dt: 1e-3,
        }
    }
}

/// Renormalized estimates per channel. A channel is `None` when its
/// distance carried no signal (e.g. an uncoupled subspace with the offset
/// applied elsewhere).
#[derive(Debug, Clone, Copy)]
pub struct ChannelEstimates {
    pub classical: Option<LyapunovEstimate>,
    pub quantum: Option<LyapunovEstimate>,
    pub width: Option<LyapunovEstimate>,
}

impl ChannelEstimates {
    pub fn get(&self, ch: Channel) -> Option<&LyapunovEstimate> {
        match ch {
            Channel::Classical => self.classical.as_ref(),
            Channel::Quantum => self.quantum.as_ref(),
            Channel::Width => self.width.as_ref(),
        }
    }
}

/// Standard rescale-and-average estimator: after each interval the
/// perturbed trajectory is pulled back to distance Δ₀ along the current
/// separation direction (full 6-component norm); per-channel growth rates
/// are averaged over the measured intervals.
pub fn renormalized_exponent(
    params: &HybridParams,
    init: &HybridState,
    offset: &OffsetSpec,
    settings: &RenormSettings,
) -> Result<ChannelEstimates, LyapunovError> {
    if offset.magnitude == 0.0 {
        return Err(LyapunovError::ZeroOffset);
    }
    if !(settings.interval > 0.0) {
        return Err(LyapunovError::BadSettings {
            reason: "renorm_interval must be positive",
        });
    }
    if settings.n_intervals < 10 {
        return Err(LyapunovError::InsufficientData {
            available: settings.n_intervals,
            required: 10,
        });
    }
    if !(settings.dt > 0.0 && settings.dt <= settings.interval) {
        return Err(LyapunovError::BadSettings {
            reason: "dt must be positive and no larger than the interval",
        });
    }
    let rhs = HybridRhs::new(*params).map_err(|_| LyapunovError::BadSettings {
        reason: "invalid parameters",
    })?;

    let d0 = math::abs(offset.magnitude);
    let base = init.as_array();
    let mut pert = base;
    pert[offset.target.slot()] += offset.magnitude;
    let mut y = stack(&base, &pert);

    let ctl = StepControl::Fixed { dt: settings.dt };
    let channels = [Channel::Classical, Channel::Quantum, Channel::Width];
    let mut rates: [Vec<f64>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    let total = settings.warmup_intervals + settings.n_intervals;
    let mut f = stacked_rhs(&rhs);

    for interval in 0..total {
        let t_a = init.t + interval as f64 * settings.interval;
        let t_b = t_a + settings.interval;
        let start: [f64; 3] = [
            channel_distance(&y, Channel::Classical),
            channel_distance(&y, Channel::Quantum),
            channel_distance(&y, Channel::Width),
        ];
        y = integrate(&mut f, t_a, y, t_b, &ctl, |_, _| {})?;

        let mut full_sq = 0.0;
        for i in 0..6 {
            let d = y[i + 6] - y[i];
            full_sq += d * d;
        }
        let full = math::sqrt(full_sq);
        if full == 0.0 || !full.is_finite() {
            return Err(LyapunovError::SeparationUnderflow { t: t_b });
        }

        if interval >= settings.warmup_intervals {
            for (k, ch) in channels.iter().enumerate() {
                let end = channel_distance(&y, *ch);
                if start[k] > f64::MIN_POSITIVE && end > f64::MIN_POSITIVE {
                    rates[k].push(math::ln(end / start[k]) / settings.interval);
                }
            }
        }

        // Pull the perturbed copy back to distance Δ₀ along the current
        // separation direction.
        let scale = d0 / full;
        for i in 0..6 {
            y[i + 6] = y[i] + (y[i + 6] - y[i]) * scale;
        }
    }

    let window = (
        init.t + settings.warmup_intervals as f64 * settings.interval,
        init.t + total as f64 * settings.interval,
    );
    let mut out = [None, None, None];
    for k in 0..3 {
        let n = rates[k].len();
        if n == 0 {
            continue;
        }
        let mean = rates[k].iter().sum::<f64>() / n as f64;
        let var = rates[k].iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / n as f64;
        out[k] = Some(LyapunovEstimate {
            exponent: mean,
            prefactor: d0,
            window,
            residual: math::sqrt(var),
            method: EstimatorMethod::Renormalized,
            n_points: n,
        });
    }
    Ok(ChannelEstimates {
        classical: out[0],
        quantum: out[1],
        width: out[2],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::test_params;

    fn harmonic_params(omega0_sq: f64) -> HybridParams {
        HybridParams {
            stiffness_lin: -omega0_sq,
            stiffness_cub: 0.0,
            drive_amp: 0.0,
            coupling: 0.0,
            gamma_cl: 0.0,
            ..test_params()
        }
    }

    fn d0_chaotic() -> f64 {
        0.7066655286901451
    }

    #[test]
    fn zero_offset_rejected() {
        let p = test_params();
        let init = HybridState::new(0.0, 0.1, 0.0, 0.1, 0.0, d0_chaotic(), 0.0);
        let offset = OffsetSpec {
            magnitude: 0.0,
            ..OffsetSpec::default()
        };
        let r = divergence_series(
            &p,
            &init,
            &offset,
            1.0,
            &StepControl::Fixed { dt: 1e-3 },
            10,
        );
        assert!(matches!(r, Err(LyapunovError::ZeroOffset)));
        assert_eq!(
            alloc::format!("{}", LyapunovError::ZeroOffset),
            "offset must be nonzero"
        );
    }

    #[test]
    fn harmonic_pair_distance_is_bounded_and_oscillatory() {
        // Ẍ = −ω₀²X with ω₀ = 1.5: the difference rotates in phase space,
        // |Δ| stays within [Δ₀, ω₀Δ₀] ≤ 2Δ₀.
        let p = harmonic_params(2.25);
        let init = HybridState::new(0.0, 0.3, 0.0, 0.0, 0.0, d0_chaotic(), 0.0);
        let offset = OffsetSpec::default();
        let s = divergence_series(
            &p,
            &init,
            &offset,
            40.0,
            &StepControl::Fixed { dt: 1e-3 },
            50,
        )
        .unwrap();
        let max = s.dist_cl.iter().cloned().fold(0.0f64, f64::max);
        let min = s
            .dist_cl
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        assert!(max <= 2.0 * offset.magnitude, "max = {max:e}");
        assert!(max > 1.4 * offset.magnitude, "should oscillate up to ω₀Δ₀");
        assert!(min >= 0.99 * offset.magnitude);
    }

    #[test]
    fn regression_round_trips_synthetic_exponentials() {
        // Synthetic series matching the shape of reported classical and
        // quantum fits.
        for &(c, lam) in &[(8e-7, 0.17), (5e-7, 0.168)] {
            let mut s = DivergenceSeries {
                params: test_params(),
                initial_offset: c,
                times: Vec::new(),
                dist_cl: Vec::new(),
                dist_qu: Vec::new(),
                dist_width: Vec::new(),
            };
            let mut t = 0.0;
            while t <= 80.0 {
                let d = c * math::exp(lam * t);
                s.times.push(t);
                s.dist_cl.push(d);
                s.dist_qu.push(d);
                s.dist_width.push(0.0);
                t += 0.1;
            }
            let est = fit_exponent(&s, Channel::Classical, &FitSettings::default()).unwrap();
            assert!(
                (est.exponent - lam).abs() < 1e-6,
                "λ = {} vs {lam}",
                est.exponent
            );
            assert!(
                (est.prefactor - c).abs() < 1e-9,
                "c = {} vs {c}",
                est.prefactor
            );
            assert!(est.residual < 1e-12);
        }
    }

    #[test]
    fn regression_on_constant_series_gives_zero() {
        let mut s = DivergenceSeries {
            params: test_params(),
            initial_offset: 1e-7,
            times: Vec::new(),
            dist_cl: Vec::new(),
            dist_qu: Vec::new(),
            dist_width: Vec::new(),
        };
        for i in 0..200 {
            s.times.push(i as f64 * 0.1);
            s.dist_cl.push(1e-7);
            s.dist_qu.push(1e-7);
            s.dist_width.push(1e-7);
        }
        let est = fit_exponent(&s, Channel::Quantum, &FitSettings::default()).unwrap();
        assert!(est.exponent.abs() < 1e-12);
    }

    #[test]
    fn regression_requires_enough_points() {
        let s = DivergenceSeries {
            params: test_params(),
            initial_offset: 1e-7,
            times: alloc::vec![0.0, 2.0, 3.0],
            dist_cl: alloc::vec![1e-7, 2e-7, 3e-7],
            dist_qu: alloc::vec![1e-7, 2e-7, 3e-7],
            dist_width: alloc::vec![0.0, 0.0, 0.0],
        };
        let r = fit_exponent(&s, Channel::Classical, &FitSettings::default());
        assert!(matches!(r, Err(LyapunovError::InsufficientData { .. })));
    }

    #[test]
    fn renormalized_rejects_few_intervals() {
        let p = test_params();
        let init = HybridState::new(0.0, 0.1, 0.0, 0.1, 0.0, d0_chaotic(), 0.0);
        let settings = RenormSettings {
            n_intervals: 9,
            ..RenormSettings::default()
        };
        let r = renormalized_exponent(&p, &init, &OffsetSpec::default(), &settings);
        assert!(matches!(r, Err(LyapunovError::InsufficientData { .. })));
    }

    #[test]
    fn renormalized_harmonic_exponent_vanishes() {
        // ω₀ = 1: phase-space rotation, channel distances are constant and
        // every interval rate is numerically zero.
        let p = harmonic_params(1.0);
        let init = HybridState::new(0.0, 0.3, 0.0, 0.0, 0.0, d0_chaotic(), 0.0);
        let settings = RenormSettings {
            interval: 1.0,
            n_intervals: 30,
            warmup_intervals: 2,
            dt: 1e-3,
        };
        let est = renormalized_exponent(&p, &init, &OffsetSpec::default(), &settings).unwrap();
        let cl = est.classical.unwrap();
        assert!(cl.exponent.abs() <= 0.01, "λ = {}", cl.exponent);
        // Offset on X with λ_c = 0 leaves the quantum subspace untouched.
        assert!(est.quantum.is_none());
    }
}
