//! Closed-form stationary resolution and width experiments.
//!
//! The width equation has the fixed point `δ₀² = ħ/(2m√(ω² + 1/4τ²))`; the
//! stationary measurement resolution is `σ₀² = τ·δ₀²`, which reduces to
//! `ħτ²/m` for ω = 0 and to `ħτ/2mω` for ωτ ≫ 1.

use alloc::vec::Vec;
use core::fmt;

use crate::dynamics::HybridRhs;
use crate::integrator::{integrate, OdeError, StepControl};
use crate::math;
use crate::model::{HybridParams, ModelError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrequencyRegime {
    /// ωτ < 0.1 (free-particle-like).
    LowFrequency,
    /// ωτ > 10.
    HighFrequency,
    General,
}

impl FrequencyRegime {
    pub fn as_str(&self) -> &'static str {
        match self {
            FrequencyRegime::LowFrequency => "low-frequency",
            FrequencyRegime::HighFrequency => "high-frequency",
            FrequencyRegime::General => "general",
        }
    }

    pub fn classify(omega_tau: f64) -> Self {
        if omega_tau < 0.1 {
            FrequencyRegime::LowFrequency
        } else if omega_tau > 10.0 {
            FrequencyRegime::HighFrequency
        } else {
            FrequencyRegime::General
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct StationaryResolution {
    /// σ₀² (length²·time).
    pub sigma0_sq: f64,
    /// Stationary packet width δ₀ (length).
    pub delta0: f64,
    pub regime: FrequencyRegime,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AnalysisError {
    Model(ModelError),
    Ode(OdeError),
    /// ω = 0 with measurement off, or τ = ∞: nothing to relax toward.
    NoStationaryRegime,
    BadSettings { reason: &'static str },
}

impl fmt::Display for AnalysisError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AnalysisError::Model(e) => write!(f, "{e}"),
            AnalysisError::Ode(e) => write!(f, "{e}"),
            AnalysisError::NoStationaryRegime => {
                write!(f, "no stationary resolution: measurement is disabled or no confinement")
            }
            AnalysisError::BadSettings { reason } => write!(f, "{reason}"),
        }
    }
}

impl core::error::Error for AnalysisError {}

impl From<ModelError> for AnalysisError {
    fn from(e: ModelError) -> Self {
        AnalysisError::Model(e)
    }
}

impl From<OdeError> for AnalysisError {
    fn from(e: OdeError) -> Self {
        AnalysisError::Ode(e)
    }
}

/// Fixed point of the width equation, `δ₀ = [ħ²/4m²(ω²+1/4τ²)]^{1/4}`.
/// `None` when ω = 0 and measurement is off (free packet, no fixed point).
pub fn stationary_width(params: &HybridParams) -> Option<f64> {
    let inv_tau = params.inv_tau();
    let s = params.omega * params.omega + 0.25 * inv_tau * inv_tau;
    if s == 0.0 {
        return None;
    }
    Some(math::sqrt(math::sqrt(
        params.hbar * params.hbar / (4.0 * params.mass_qu * params.mass_qu * s),
    )))
}

/// Stationary measurement resolution; requires finite τ.
/// `σ₀² = τ·δ₀²` holds exactly by construction.
pub fn stationary_resolution(params: &HybridParams) -> Result<StationaryResolution, AnalysisError> {
    params.validate()?;
    if params.tau == f64::INFINITY {
        return Err(AnalysisError::NoStationaryRegime);
    }
    let inv_tau = params.inv_tau();
    let s = params.omega * params.omega + 0.25 * inv_tau * inv_tau;
    let delta0_sq = params.hbar / (2.0 * params.mass_qu * math::sqrt(s));
    let delta0 = math::sqrt(delta0_sq);
    Ok(StationaryResolution {
        sigma0_sq: params.tau * delta0_sq,
        delta0,
        regime: FrequencyRegime::classify(params.omega * params.tau),
    })
}

/// One row of the ωτ sweep: the exact σ₀² plus the two asymptotic formulas
/// evaluated naively.
#[derive(Debug, Clone, Copy)]
pub struct ResolutionSweepRow {
    pub omega_tau: f64,
    pub sigma0_sq_exact: f64,
    /// Low-frequency (free-particle) formula `ħτ²/m`.
    pub sigma0_sq_low: f64,
    /// High-frequency formula `ħτ/2mω` (infinite at ω = 0).
    pub sigma0_sq_high: f64,
}

/// Sweeps ω at fixed τ, m, ħ over the given ωτ values.
pub fn resolution_sweep(
    mass: f64,
    hbar: f64,
    tau: f64,
    omega_taus: &[f64],
) -> Result<Vec<ResolutionSweepRow>, AnalysisError> {
    if !(mass > 0.0 && hbar > 0.0 && tau > 0.0 && tau.is_finite()) {
        return Err(AnalysisError::BadSettings {
            reason: "sweep requires positive m, hbar and finite tau",
        });
    }
    Ok(omega_taus
        .iter()
        .map(|&ot| {
            let omega = ot / tau;
            let exact =
                hbar * tau * tau / (mass * math::sqrt(1.0 + 4.0 * omega * omega * tau * tau));
            ResolutionSweepRow {
                omega_tau: ot,
                sigma0_sq_exact: exact,
                sigma0_sq_low: hbar * tau * tau / mass,
                sigma0_sq_high: hbar * tau / (2.0 * mass * omega),
            }
        })
        .collect())
}

/// Lyapunov function of the width flow,
/// `E = ½δ̇² + ½(ω²+1/4τ²)δ² + ħ²/8m²δ²`; `dE/dt = −δ̇²/τ ≤ 0`.
pub fn width_energy(params: &HybridParams, delta: f64, delta_dot: f64) -> f64 {
    let inv_tau = params.inv_tau();
    let s = params.omega * params.omega + 0.25 * inv_tau * inv_tau;
    0.5 * delta_dot * delta_dot
        + 0.5 * s * delta * delta
        + params.hbar * params.hbar / (8.0 * params.mass_qu * params.mass_qu * delta * delta)
}

/// Relative band around δ₀ used for the convergence-time readout.
pub const CONVERGENCE_BAND: f64 = 0.01;

#[derive(Debug, Clone)]
pub struct WidthRelaxation {
    pub delta0: f64,
    /// Last time the width sat outside the 1% band around δ₀ (0 when it
    /// never left the band).
    pub convergence_time: f64,
    /// Largest excursion past δ₀ on the far side of the approach.
    pub overshoot: f64,
    /// Envelope decay rate fitted on the peaks of |δ−δ₀|; `None` when too
    /// few oscillations are resolved. The linearized flow predicts 1/(2τ).
    pub fitted_decay_rate: Option<f64>,
    pub n_peaks: usize,
    /// Largest single-step increase of the width Lyapunov function
    /// (non-positive up to integrator rounding).
    pub max_energy_increase: f64,
    pub final_delta: f64,
    /// `(t, δ)` samples for export.
    pub series: Vec<(f64, f64)>,
}

/// Integrates the width equation alone from `(delta_init, deltadot_init)`
/// and reports convergence diagnostics toward δ₀.
pub fn width_relaxation_experiment(
    params: &HybridParams,
    delta_init: f64,
    deltadot_init: f64,
    t_end: f64,
    dt: f64,
) -> Result<WidthRelaxation, AnalysisError> {
    params.validate()?;
    if !(delta_init > 0.0) {
        return Err(AnalysisError::Model(ModelError::NonPositive {
            field: "delta_init",
        }));
    }
    let delta0 = stationary_width(params).ok_or(AnalysisError::NoStationaryRegime)?;
    let rhs = HybridRhs::new(*params)?;
    let width = rhs.width_rhs();
    let mut f = |t: f64, y: &[f64; 2]| width(t, y);

    let mut series = Vec::new();
    series.push((0.0, delta_init));
    let mut energy_prev = width_energy(params, delta_init, deltadot_init);
    let mut max_energy_increase = f64::NEG_INFINITY;
    let mut last_outside = 0.0f64;
    let mut min_delta = delta_init;
    let mut max_delta = delta_init;
    if math::abs(delta_init - delta0) > CONVERGENCE_BAND * delta0 {
        last_outside = 0.0;
    }
    let y_end = integrate(
        &mut f,
        0.0,
        [delta_init, deltadot_init],
        t_end,
        &StepControl::Fixed { dt },
        |t, y| {
            let e = width_energy(params, y[0], y[1]);
            max_energy_increase = max_energy_increase.max(e - energy_prev);
            energy_prev = e;
            if math::abs(y[0] - delta0) > CONVERGENCE_BAND * delta0 {
                last_outside = t;
            }
            min_delta = min_delta.min(y[0]);
            max_delta = max_delta.max(y[0]);
            series.push((t, y[0]));
        },
    )?;

    let overshoot = if delta_init >= delta0 {
        (delta0 - min_delta).max(0.0)
    } else {
        (max_delta - delta0).max(0.0)
    };

    // Envelope fit: straight line through ln of the local maxima of |δ−δ₀|,
    // restricted to amplitudes where the linearization is trustworthy.
    let amp0 = math::abs(delta_init - delta0);
    let hi = 0.5 * amp0;
    let lo = 1e-5 * amp0;
    let mut peaks: Vec<(f64, f64)> = Vec::new();
    for w in series.windows(3) {
        let a = math::abs(w[0].1 - delta0);
        let b = math::abs(w[1].1 - delta0);
        let c = math::abs(w[2].1 - delta0);
        if b > a && b >= c && b > lo && b < hi {
            peaks.push((w[1].0, math::ln(b)));
        }
    }
    let fitted_decay_rate = if peaks.len() >= 3 {
        let n = peaks.len() as f64;
        let mt = peaks.iter().map(|p| p.0).sum::<f64>() / n;
        let ml = peaks.iter().map(|p| p.1).sum::<f64>() / n;
        let mut sxx = 0.0;
        let mut sxy = 0.0;
        for (t, l) in &peaks {
            sxx += (t - mt) * (t - mt);
            sxy += (t - mt) * (l - ml);
        }
        Some(-sxy / sxx)
    } else {
        None
    };

    Ok(WidthRelaxation {
        delta0,
        convergence_time: last_outside,
        overshoot,
        fitted_decay_rate,
        n_peaks: peaks.len(),
        max_energy_increase: if max_energy_increase == f64::NEG_INFINITY {
            0.0
        } else {
            max_energy_increase
        },
        final_delta: y_end[0],
        series,
    })
}

#[derive(Debug, Clone)]
pub struct ContractiveReport {
    /// Smallest width reached (parabolic refinement through the sampled
    /// minimum).
    pub min_delta: f64,
    pub t_min: f64,
    /// First and last sampled times with δ(t) < δ(0); `None` when the width
    /// never contracts.
    pub contraction_interval: Option<(f64, f64)>,
    /// Smallest width of the `δ̇(0) = 0` baseline run.
    pub baseline_min_delta: f64,
    /// Whether the baseline stayed at or above its initial width.
    pub baseline_never_contracts: bool,
    pub series: Vec<(f64, f64)>,
}

/// Demonstrates transient contraction: a packet launched with `δ̇(0) < 0`
/// dips below its initial width while the `δ̇(0) = 0` baseline (same
/// parameters, same δ(0)) does not.
pub fn contractive_state_experiment(
    params: &HybridParams,
    delta_init: f64,
    deltadot_init: f64,
    t_end: f64,
    dt: f64,
) -> Result<ContractiveReport, AnalysisError> {
    params.validate()?;
    if !(delta_init > 0.0) {
        return Err(AnalysisError::Model(ModelError::NonPositive {
            field: "delta_init",
        }));
    }
    if !(deltadot_init < 0.0) {
        return Err(AnalysisError::BadSettings {
            reason: "deltadot_init must be negative",
        });
    }
    let rhs = HybridRhs::new(*params)?;

    let run = |dd0: f64| -> Result<Vec<(f64, f64)>, AnalysisError> {
        let width = rhs.width_rhs();
        let mut f = |t: f64, y: &[f64; 2]| width(t, y);
        let mut series = Vec::new();
        series.push((0.0, delta_init));
        integrate(
            &mut f,
            0.0,
            [delta_init, dd0],
            t_end,
            &StepControl::Fixed { dt },
            |t, y| series.push((t, y[0])),
        )?;
        Ok(series)
    };

    let series = run(deltadot_init)?;
    let baseline = run(0.0)?;

    let (mut i_min, mut d_min) = (0usize, delta_init);
    for (i, &(_, d)) in series.iter().enumerate() {
        if d < d_min {
            d_min = d;
            i_min = i;
        }
    }
    // Parabolic refinement around the sampled minimum.
    let (t_min, min_delta) = if i_min > 0 && i_min + 1 < series.len() {
        let (tm, dm) = series[i_min];
        let da = series[i_min - 1].1;
        let dc = series[i_min + 1].1;
        let denom = da - 2.0 * dm + dc;
        if denom > 0.0 {
            let h = series[i_min + 1].0 - tm;
            let shift = 0.5 * (da - dc) / denom;
            (tm + shift * h, dm - 0.125 * (da - dc) * (da - dc) / denom)
        } else {
            (tm, dm)
        }
    } else {
        (series[i_min].0, d_min)
    };

    let below: Vec<f64> = series
        .iter()
        .filter(|(_, d)| *d < delta_init)
        .map(|(t, _)| *t)
        .collect();
    let contraction_interval = if below.is_empty() {
        None
    } else {
        Some((below[0], *below.last().unwrap()))
    };

    let baseline_min_delta = baseline.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    Ok(ContractiveReport {
        min_delta,
        t_min,
        contraction_interval,
        baseline_min_delta,
        baseline_never_contracts: baseline_min_delta >= delta_init * (1.0 - 1e-9),
        series,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::test_params;

    #[test]
    fn free_particle_limit_is_exact() {
        let p = HybridParams {
            omega: 0.0,
            tau: 1.0,
            mass_qu: 1.0,
            hbar: 1.0,
            ..test_params()
        };
        let r = stationary_resolution(&p).unwrap();
        assert_eq!(r.sigma0_sq, 1.0, "σ₀² must equal ħτ²/m bit-exactly");
        assert_eq!(r.regime, FrequencyRegime::LowFrequency);
        // σ₀² = τ·δ₀² exactly.
        assert_eq!(r.sigma0_sq, p.tau * r.delta0 * r.delta0);
    }

    #[test]
    fn high_frequency_limit_approached() {
        let p = HybridParams {
            omega: 100.0,
            tau: 1.0,
            ..test_params()
        };
        let r = stationary_resolution(&p).unwrap();
        let limit = p.hbar * p.tau / (2.0 * p.mass_qu * p.omega);
        assert!(
            (r.sigma0_sq - limit).abs() / limit < 2e-5,
            "exact {} vs limit {limit}",
            r.sigma0_sq
        );
        assert_eq!(r.regime, FrequencyRegime::HighFrequency);
    }

    #[test]
    fn delta0_is_root_of_width_equation() {
        // Bisection on the width acceleration as an independent oracle.
        let p = test_params();
        let rhs = HybridRhs::new(p).unwrap();
        let accel = |d: f64| rhs.width_accel(d, 0.0);
        let (mut a, mut b) = (1e-3, 10.0);
        assert!(accel(a) > 0.0 && accel(b) < 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if accel(mid) > 0.0 {
                a = mid;
            } else {
                b = mid;
            }
        }
        let root = 0.5 * (a + b);
        let d0 = stationary_width(&p).unwrap();
        assert!((root - d0).abs() < 1e-12, "root {root} vs δ₀ {d0}");
        assert!(accel(d0).abs() < 1e-13);
    }

    #[test]
    fn resolution_monotone_in_omega_and_tau() {
        let base = test_params();
        let mut prev = f64::INFINITY;
        for i in 0..40 {
            let p = HybridParams {
                omega: 0.05 * (i + 1) as f64,
                ..base
            };
            let s = stationary_resolution(&p).unwrap().sigma0_sq;
            assert!(s < prev, "σ₀² must decrease with ω");
            prev = s;
        }
        let mut prev = 0.0;
        for i in 0..40 {
            let p = HybridParams {
                tau: 0.5 * (i + 1) as f64,
                ..base
            };
            let s = stationary_resolution(&p).unwrap().sigma0_sq;
            assert!(s > prev, "σ₀² must increase with τ");
            prev = s;
        }
    }

    #[test]
    fn exact_resolution_bounded_by_both_limits() {
        let rows =
            resolution_sweep(1.0, 1.0, 2.0, &[0.01, 0.1, 0.5, 1.0, 2.0, 10.0, 100.0]).unwrap();
        for r in &rows {
            assert!(r.sigma0_sq_exact <= r.sigma0_sq_low * (1.0 + 1e-12));
            assert!(r.sigma0_sq_exact <= r.sigma0_sq_high * (1.0 + 1e-12));
        }
        // And converges to the matching limit at each end.
        let lo = &rows[0];
        assert!((lo.sigma0_sq_exact / lo.sigma0_sq_low - 1.0).abs() < 1e-3);
        let hi = rows.last().unwrap();
        assert!((hi.sigma0_sq_exact / hi.sigma0_sq_high - 1.0).abs() < 1e-4);
    }

    #[test]
    fn no_stationary_regime_without_measurement() {
        let p = HybridParams {
            tau: f64::INFINITY,
            ..test_params()
        };
        assert!(matches!(
            stationary_resolution(&p),
            Err(AnalysisError::NoStationaryRegime)
        ));
        // δ₀ still exists while the oscillator confines the packet…
        assert!(stationary_width(&p).is_some());
        // …but not for the free packet.
        let free = HybridParams { omega: 0.0, ..p };
        assert!(stationary_width(&free).is_none());
    }

    #[test]
    fn relaxation_from_fixed_point_is_immediate() {
        let p = test_params();
        let d0 = stationary_width(&p).unwrap();
        let r = width_relaxation_experiment(&p, d0, 0.0, 20.0, 1e-3).unwrap();
        assert_eq!(r.convergence_time, 0.0);
        assert!(r.overshoot < 1e-12);
    }

    #[test]
    fn relaxation_rate_matches_linearization() {
        // ωτ = 10: envelope decays at 1/(2τ) within 10%.
        let p = test_params();
        let d0 = stationary_width(&p).unwrap();
        let r = width_relaxation_experiment(&p, 2.0 * d0, 0.0, 20.0 * p.tau, 1e-3).unwrap();
        let rate = r.fitted_decay_rate.expect("enough peaks");
        let expected = 0.5 / p.tau;
        assert!(
            (rate - expected).abs() / expected < 0.10,
            "rate {rate} vs 1/(2τ) = {expected}"
        );
        assert!(
            r.max_energy_increase < 1e-10,
            "width energy must not increase: {:e}",
            r.max_energy_increase
        );
        assert!((r.final_delta - d0).abs() / d0 < 1e-4);
    }

    #[test]
    fn contractive_state_dips_below_initial_width() {
        let p = HybridParams {
            omega: 0.0,
            ..test_params()
        };
        let r = contractive_state_experiment(&p, 1.0, -0.3, 10.0, 1e-4).unwrap();
        assert!(r.min_delta < 1.0);
        assert!(r.contraction_interval.is_some());
        assert!(r.baseline_never_contracts || r.baseline_min_delta >= 0.999);
    }

    #[test]
    fn free_contraction_matches_closed_form_vertex() {
        // 1/τ = 0, ω = 0: δ²(t) = δ₀² + 2δ₀δ̇₀t + (δ̇₀² + ħ²/4m²δ₀²)t².
        let p = HybridParams {
            omega: 0.0,
            tau: f64::INFINITY,
            ..test_params()
        };
        let (d_init, dd_init) = (1.0, -0.3);
        let r = contractive_state_experiment(&p, d_init, dd_init, 5.0, 1e-4).unwrap();
        let a = dd_init * dd_init
            + p.hbar * p.hbar / (4.0 * p.mass_qu * p.mass_qu * d_init * d_init);
        let b = 2.0 * d_init * dd_init;
        let t_star = -b / (2.0 * a);
        let d_star = math::sqrt(d_init * d_init + b * t_star + a * t_star * t_star);
        assert!(
            (r.min_delta - d_star).abs() < 1e-8,
            "min δ {} vs closed form {d_star}",
            r.min_delta
        );
        assert!((r.t_min - t_star).abs() < 1e-6);
        // Baseline only spreads.
        assert!(r.baseline_never_contracts);
    }

    #[test]
    fn nonnegative_deltadot_rejected() {
        let p = test_params();
        let r = contractive_state_experiment(&p, 1.0, 0.0, 1.0, 1e-3);
        assert!(matches!(r, Err(AnalysisError::BadSettings { .. })));
    }
}
