//! Chaos quantification oracles on the driven-damped parameter set: the
//! classical and quantum centers share a positive exponent, the two
//! estimators agree, and the width channel is contractive.

use qmeas_core::lyapunov::{
    divergence_series, fit_exponent, renormalized_exponent, Channel, FitSettings, OffsetSpec,
    OffsetTarget, RenormSettings,
};
use qmeas_core::{HybridParams, HybridState, StepControl};

fn chaotic_params() -> HybridParams {
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
        gamma_cl: 0.25,
    }
}

fn delta0(p: &HybridParams) -> f64 {
    qmeas_core::analysis::stationary_width(p).unwrap()
}

fn default_init(p: &HybridParams) -> HybridState {
    HybridState::new(0.0, 0.1, 0.0, 0.1, 0.0, delta0(p), 0.0)
}

#[test]
fn divergence_grows_and_saturates_on_the_attractor() {
    let p = chaotic_params();
    let init = default_init(&p);
    let s = divergence_series(
        &p,
        &init,
        &OffsetSpec::default(),
        200.0,
        &StepControl::Fixed { dt: 1e-3 },
        100,
    )
    .unwrap();
    // Δ(0) equals the applied offset up to the rounding of (X+ε)−X.
    assert!((s.dist_cl[0] - 1e-7).abs() < 1e-15);
    let max = s.dist_cl.iter().cloned().fold(0.0f64, f64::max);
    // Grows from 1e-7 to order one…
    assert!(max > 0.5, "max distance {max}");
    // …but stays bounded by the attractor diameter.
    assert!(max < 10.0, "max distance {max}");
    // Saturated: the last quarter no longer grows relative to the peak.
    let tail_start = 3 * s.times.len() / 4;
    let tail_max = s.dist_cl[tail_start..]
        .iter()
        .cloned()
        .fold(0.0f64, f64::max);
    assert!(tail_max > 0.1 * max, "tail collapsed: {tail_max} vs {max}");
}

#[test]
fn regression_and_renormalized_estimators_agree() {
    let p = chaotic_params();
    let init = default_init(&p);

    let series = divergence_series(
        &p,
        &init,
        &OffsetSpec::default(),
        160.0,
        &StepControl::Fixed { dt: 1e-3 },
        100,
    )
    .unwrap();
    let reg = fit_exponent(&series, Channel::Classical, &FitSettings::default()).unwrap();

    let ren = renormalized_exponent(
        &p,
        &init,
        &OffsetSpec::default(),
        &RenormSettings {
            interval: 1.0,
            n_intervals: 600,
            warmup_intervals: 5,
            dt: 1e-3,
        },
    )
    .unwrap();
    let ren_cl = ren.classical.unwrap();

    assert!(reg.exponent > 0.05, "regression λ = {}", reg.exponent);
    assert!(ren_cl.exponent > 0.05, "renormalized λ = {}", ren_cl.exponent);
    let rel = (reg.exponent - ren_cl.exponent).abs() / ren_cl.exponent;
    assert!(
        rel < 0.20,
        "estimators disagree: regression {} vs renormalized {} ({:.1}%)",
        reg.exponent,
        ren_cl.exponent,
        100.0 * rel
    );
}

#[test]
fn exponent_is_robust_to_offset_magnitude() {
    let p = chaotic_params();
    let init = default_init(&p);
    let run = |magnitude: f64| {
        renormalized_exponent(
            &p,
            &init,
            &OffsetSpec {
                target: OffsetTarget::ClassicalPosition,
                magnitude,
            },
            &RenormSettings {
                interval: 1.0,
                n_intervals: 400,
                warmup_intervals: 5,
                dt: 1e-3,
            },
        )
        .unwrap()
        .classical
        .unwrap()
        .exponent
    };
    let a = run(1e-7);
    let b = run(5e-8);
    assert!(
        (a - b).abs() / a < 0.10,
        "halving the offset moved λ from {a} to {b}"
    );
}

#[test]
fn width_channel_is_not_chaotic() {
    // Perturb δ directly; the width subsystem is autonomous and attracting,
    // so its exponent must not be positive (linearization gives −1/2τ).
    let p = chaotic_params();
    let init = default_init(&p);
    let est = renormalized_exponent(
        &p,
        &init,
        &OffsetSpec {
            target: OffsetTarget::Width,
            magnitude: 1e-7,
        },
        &RenormSettings {
            interval: 1.0,
            n_intervals: 80,
            warmup_intervals: 2,
            dt: 1e-3,
        },
    )
    .unwrap();
    let w = est.width.expect("width channel carries signal");
    assert!(
        w.exponent <= 0.01,
        "width-channel exponent should be non-positive, got {}",
        w.exponent
    );
    assert!(
        (w.exponent + 0.5 / p.tau).abs() < 0.01,
        "expected ≈ −1/2τ = {}, got {}",
        -0.5 / p.tau,
        w.exponent
    );
}
