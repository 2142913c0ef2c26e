//! Direct grid integration of the non-Hermitian measurement Schrödinger
//! equation
//!
//! `iħ ∂ψ/∂t = −(ħ²/2m) ∂²ψ/∂x² + (½mω²x² + λxX(t))ψ
//!            − (iħ/4τ)[(x−x̄(t))²/δ²(t) − 1]ψ`
//!
//! used as the oracle that certifies the Gaussian reduction: a packet with
//! parameters produced by `dynamics` must track the grid solution.
//!
//! Scheme: second-order Strang splitting. The potential and the (diagonal)
//! measurement term advance half a step with the drive sampled at the step
//! boundaries, the kinetic term advances a full step spectrally. The wave
//! function is renormalized after every step and the pre-renormalization
//! norm is logged — the equation itself does not preserve the norm, its
//! expectation only vanishes when the drive is self-consistent.

mod fft;

use alloc::vec::Vec;
use core::fmt;

use crate::dynamics::TrajectoryInterpolant;
use crate::integrator::OdeError;
use crate::math;
use crate::model::{HybridParams, Trajectory};
use crate::wavepacket::WavePacket;

use fft::{C64, Fft};

/// Lower bound on grid resolution.
pub const MIN_GRID_POINTS: usize = 128;

/// Required half-span of the initial grid in units of the packet width.
pub const MIN_SPAN_SIGMAS: f64 = 8.0;

/// Bound on the measurement-term amplification exponent per half step; the
/// diagonal factor `exp` must stay resolved on the grid, which couples the
/// admissible step to the grid span and packet width.
pub const MAX_MEAS_EXPONENT: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PdeError {
    Grid { reason: &'static str },
    /// Initial grid narrower than `MIN_SPAN_SIGMAS` packet widths.
    GridTooNarrow,
    /// Step/grid combination violates the diagonal-factor contract.
    StepTooLarge,
    Blowup { t: f64 },
    Ode(OdeError),
    BadSettings { reason: &'static str },
}

impl fmt::Display for PdeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PdeError::Grid { reason } => write!(f, "invalid grid: {reason}"),
            PdeError::GridTooNarrow => write!(f, "grid too narrow"),
            PdeError::StepTooLarge => write!(f, "step too large for grid"),
            PdeError::Blowup { t } => write!(f, "numerical blowup at t = {t}"),
            PdeError::Ode(e) => write!(f, "{e}"),
            PdeError::BadSettings { reason } => write!(f, "{reason}"),
        }
    }
}

impl core::error::Error for PdeError {}

impl From<OdeError> for PdeError {
    fn from(e: OdeError) -> Self {
        PdeError::Ode(e)
    }
}

/// Uniform 1-D spatial grid; power-of-two point counts hit the fast FFT
/// path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialGrid {
    x_min: f64,
    x_max: f64,
    n_points: usize,
}

impl SpatialGrid {
    pub fn new(x_min: f64, x_max: f64, n_points: usize) -> Result<Self, PdeError> {
        if !(x_max > x_min) || !x_min.is_finite() || !x_max.is_finite() {
            return Err(PdeError::Grid {
                reason: "x_max must exceed x_min",
            });
        }
        if n_points < MIN_GRID_POINTS {
            return Err(PdeError::Grid {
                reason: "need at least 128 points",
            });
        }
        Ok(Self {
            x_min,
            x_max,
            n_points,
        })
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.n_points - 1) as f64
    }

    pub fn point(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx()
    }
}

/// Complex amplitudes on a spatial grid at one instant.
#[derive(Debug, Clone)]
pub struct GridWaveFunction {
    pub grid: SpatialGrid,
    pub psi: Vec<C64>,
    pub t: f64,
}

impl GridWaveFunction {
    /// `∫|ψ|² dx` by trapezoidal quadrature.
    pub fn norm_sq(&self) -> f64 {
        let dx = self.grid.dx();
        let n = self.psi.len();
        let mut acc = 0.5 * (self.psi[0].norm_sqr() + self.psi[n - 1].norm_sqr());
        for v in &self.psi[1..n - 1] {
            acc += v.norm_sqr();
        }
        acc * dx
    }

    /// Rescales to unit norm; returns the pre-renormalization `∫|ψ|² dx`.
    pub fn renormalize(&mut self) -> f64 {
        let n2 = self.norm_sq();
        let s = 1.0 / math::sqrt(n2);
        for v in self.psi.iter_mut() {
            *v *= s;
        }
        n2
    }

    /// `⟨x⟩` under the normalized density.
    pub fn mean_position(&self) -> f64 {
        let n = self.psi.len();
        let mut num = 0.0;
        let mut den = 0.0;
        for (i, v) in self.psi.iter().enumerate() {
            let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
            let p = w * v.norm_sqr();
            num += p * self.grid.point(i);
            den += p;
        }
        num / den
    }

    /// `⟨(x−⟨x⟩)²⟩` under the normalized density.
    pub fn position_variance(&self) -> f64 {
        let mean = self.mean_position();
        let n = self.psi.len();
        let mut num = 0.0;
        let mut den = 0.0;
        for (i, v) in self.psi.iter().enumerate() {
            let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
            let p = w * v.norm_sqr();
            let d = self.grid.point(i) - mean;
            num += p * d * d;
            den += p;
        }
        num / den
    }

    /// L² distance between `|ψ|` on the grid and the packet amplitude.
    pub fn amplitude_l2_distance(&self, wp: &WavePacket) -> f64 {
        let dx = self.grid.dx();
        let n = self.psi.len();
        let mut acc = 0.0;
        for (i, v) in self.psi.iter().enumerate() {
            let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
            let d = math::sqrt(v.norm_sqr()) - wp.amplitude(self.grid.point(i));
            acc += w * d * d;
        }
        math::sqrt(acc * dx)
    }
}

/// Initializes the grid wave function from the packet amplitude and phase,
/// renormalized on the grid. The grid must span at least `x̄ ± 8δ`.
pub fn init_gaussian(
    grid: &SpatialGrid,
    wp: &WavePacket,
    t: f64,
) -> Result<GridWaveFunction, PdeError> {
    if grid.x_min() > wp.xbar - MIN_SPAN_SIGMAS * wp.delta
        || grid.x_max() < wp.xbar + MIN_SPAN_SIGMAS * wp.delta
    {
        return Err(PdeError::GridTooNarrow);
    }
    let mut psi = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        let x = grid.point(i);
        let amp = wp.amplitude(x);
        let th = wp.phase(x) / wp.hbar;
        psi.push(C64::new(amp * math::cos(th), amp * math::sin(th)));
    }
    let mut out = GridWaveFunction {
        grid: *grid,
        psi,
        t,
    };
    out.renormalize();
    Ok(out)
}

/// Drive values sampled from a trajectory: `(X(t), x̄(t), δ(t))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveSample {
    pub x_cl: f64,
    pub xbar: f64,
    pub delta: f64,
}

impl DriveSample {
    pub fn from_state(s: &crate::model::HybridState) -> Self {
        Self {
            x_cl: s.x_cl,
            xbar: s.xbar,
            delta: s.delta,
        }
    }
}

/// Per-step log: the norm the equation produced before renormalization.
#[derive(Debug, Clone, Copy)]
pub struct StepLog {
    pub pre_renorm_norm_sq: f64,
}

/// Split-step propagator for a fixed grid, parameter set and step size.
pub struct Propagator {
    grid: SpatialGrid,
    mass: f64,
    hbar: f64,
    omega: f64,
    coupling: f64,
    inv_tau: f64,
    dt: f64,
    fft: Fft,
    /// `exp(−i ħ k² dt / 2m)` in FFT ordering.
    kinetic: Vec<C64>,
}

impl Propagator {
    pub fn new(grid: &SpatialGrid, params: &HybridParams, dt: f64) -> Result<Self, PdeError> {
        params
            .validate()
            .map_err(|_| PdeError::BadSettings {
                reason: "invalid parameters",
            })?;
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(PdeError::BadSettings {
                reason: "dt must be positive and finite",
            });
        }
        let n = grid.len();
        let fft = Fft::new(n);
        // Periodic wavenumbers for period n·dx.
        let period = n as f64 * grid.dx();
        let mut kinetic = Vec::with_capacity(n);
        for j in 0..n {
            let m = if j < n.div_ceil(2) {
                j as f64
            } else {
                j as f64 - n as f64
            };
            let k = core::f64::consts::TAU * m / period;
            let theta = -dt * params.hbar * k * k / (2.0 * params.mass_qu);
            kinetic.push(C64::new(math::cos(theta), math::sin(theta)));
        }
        Ok(Self {
            grid: *grid,
            mass: params.mass_qu,
            hbar: params.hbar,
            omega: params.omega,
            coupling: params.coupling,
            inv_tau: params.inv_tau(),
            dt,
            fft,
            kinetic,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Diagonal half-step factor (potential phase × measurement gain) at `x`.
    fn half_factor(&self, x: f64, d: &DriveSample) -> C64 {
        let half = 0.5 * self.dt;
        let v = 0.5 * self.mass * self.omega * self.omega * x * x + self.coupling * x * d.x_cl;
        let xi = x - d.xbar;
        let gain = math::exp(-half * 0.25 * self.inv_tau * (xi * xi / (d.delta * d.delta) - 1.0));
        let theta = -half * v / self.hbar;
        C64::new(gain * math::cos(theta), gain * math::sin(theta))
    }

    fn check_step_contract(&self, d: &DriveSample) -> Result<(), PdeError> {
        if !(d.delta > 0.0) || !d.x_cl.is_finite() || !d.xbar.is_finite() {
            return Err(PdeError::BadSettings {
                reason: "drive values must be finite with positive width",
            });
        }
        let xi_max = math::abs(self.grid.x_min() - d.xbar).max(math::abs(self.grid.x_max() - d.xbar));
        let q_max = (xi_max * xi_max / (d.delta * d.delta) - 1.0).max(1.0);
        if 0.5 * self.dt * 0.25 * self.inv_tau * q_max > MAX_MEAS_EXPONENT {
            return Err(PdeError::StepTooLarge);
        }
        Ok(())
    }

    /// One Strang step: half diagonal at the step start drive, full spectral
    /// kinetic step, half diagonal at the step end drive. Renormalizes and
    /// returns the pre-renormalization norm.
    pub fn step(
        &self,
        psi: &mut GridWaveFunction,
        d_start: &DriveSample,
        d_end: &DriveSample,
    ) -> Result<StepLog, PdeError> {
        debug_assert_eq!(psi.psi.len(), self.grid.len());
        self.check_step_contract(d_start)?;
        self.check_step_contract(d_end)?;

        for (i, v) in psi.psi.iter_mut().enumerate() {
            *v *= self.half_factor(self.grid.point(i), d_start);
        }
        self.fft.forward(&mut psi.psi);
        for (v, k) in psi.psi.iter_mut().zip(self.kinetic.iter()) {
            *v *= *k;
        }
        self.fft.inverse(&mut psi.psi);
        for (i, v) in psi.psi.iter_mut().enumerate() {
            *v *= self.half_factor(self.grid.point(i), d_end);
        }

        let n2 = psi.norm_sq();
        if !n2.is_finite() || n2 <= 0.0 {
            return Err(PdeError::Blowup { t: psi.t });
        }
        let s = 1.0 / math::sqrt(n2);
        for v in psi.psi.iter_mut() {
            *v *= s;
        }
        psi.t += self.dt;
        Ok(StepLog {
            pre_renorm_norm_sq: n2,
        })
    }
}

/// Default certification grid: `x̄(0) ± 12·max δ` over the trajectory.
pub fn default_grid(traj: &Trajectory, n_points: usize) -> Result<SpatialGrid, PdeError> {
    let first = traj.first().ok_or(PdeError::BadSettings {
        reason: "trajectory is empty",
    })?;
    let half = 12.0 * traj.max_delta();
    SpatialGrid::new(first.xbar - half, first.xbar + half, n_points)
}

/// One deviation record of the grid solution against the packet ansatz.
#[derive(Debug, Clone, Copy)]
pub struct DeviationRow {
    pub t: f64,
    /// L² distance between the grid `|ψ|` and the packet amplitude.
    pub l2: f64,
    /// `|⟨x⟩ − x̄(t)|`.
    pub mean_dev: f64,
    /// `|var − δ²(t)|`.
    pub var_dev: f64,
    /// `|∫|ψ|²dx − 1|` before the renormalization of the latest step.
    pub norm_drift: f64,
}

#[derive(Debug, Clone)]
pub struct DeviationReport {
    pub rows: Vec<DeviationRow>,
    pub max_l2: f64,
    pub max_mean_dev: f64,
    pub max_var_dev: f64,
    pub max_norm_drift: f64,
    /// Set when an early-stop threshold tripped, with the trip time.
    pub stopped_at: Option<f64>,
    /// `(t, |ψ|² per grid point)` at the requested snapshot times, snapped
    /// to step boundaries.
    pub snapshots: Vec<(f64, Vec<f64>)>,
}

#[derive(Debug, Clone, Default)]
pub struct CertifySettings {
    /// Absolute end time, within the trajectory span.
    pub t_end: f64,
    pub dt: f64,
    /// Deviations are recorded every this many steps (and at both ends).
    pub record_stride: usize,
    /// Abort once the L² deviation exceeds this threshold.
    pub stop_when_l2_exceeds: Option<f64>,
    /// Times at which to dump |ψ|²; each snaps to the first step boundary
    /// at or past it.
    pub snapshot_times: Vec<f64>,
}

/// Propagates the grid wave function alongside a trajectory, starting from
/// the packet at the trajectory start, and reports deviations from the
/// packet ansatz over time.
pub fn certify_ansatz(
    traj: &Trajectory,
    grid: &SpatialGrid,
    settings: &CertifySettings,
) -> Result<DeviationReport, PdeError> {
    if settings.record_stride == 0 {
        return Err(PdeError::BadSettings {
            reason: "record_stride must be at least 1",
        });
    }
    let interp = TrajectoryInterpolant::new(traj)?;
    let (t0, t_span_end) = interp.span();
    if !(settings.t_end > t0) || settings.t_end > t_span_end + 1e-9 {
        return Err(PdeError::BadSettings {
            reason: "t_end must lie within the trajectory span",
        });
    }
    let params = traj.params;
    let packet_at = |t: f64| -> Result<WavePacket, PdeError> {
        let s = interp.eval(t)?;
        WavePacket::new(&params, &s).map_err(|_| PdeError::BadSettings {
            reason: "trajectory state has non-positive width",
        })
    };

    let prop = Propagator::new(grid, &params, settings.dt)?;
    let mut psi = init_gaussian(grid, &packet_at(t0)?, t0)?;

    let mut report = DeviationReport {
        rows: Vec::new(),
        max_l2: 0.0,
        max_mean_dev: 0.0,
        max_var_dev: 0.0,
        max_norm_drift: 0.0,
        stopped_at: None,
        snapshots: Vec::new(),
    };
    let mut pending_snapshots: Vec<f64> = settings.snapshot_times.clone();
    pending_snapshots.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    if pending_snapshots.first().is_some_and(|t| *t <= t0) {
        report
            .snapshots
            .push((t0, psi.psi.iter().map(|v| v.norm_sqr()).collect()));
        pending_snapshots.retain(|t| *t > t0);
    }
    let record = |psi: &GridWaveFunction, wp: &WavePacket, drift: f64, report: &mut DeviationReport| {
        let row = DeviationRow {
            t: psi.t,
            l2: psi.amplitude_l2_distance(wp),
            mean_dev: math::abs(psi.mean_position() - wp.xbar),
            var_dev: math::abs(psi.position_variance() - wp.delta * wp.delta),
            norm_drift: drift,
        };
        report.max_l2 = report.max_l2.max(row.l2);
        report.max_mean_dev = report.max_mean_dev.max(row.mean_dev);
        report.max_var_dev = report.max_var_dev.max(row.var_dev);
        report.max_norm_drift = report.max_norm_drift.max(row.norm_drift);
        report.rows.push(row);
        row.l2
    };
    record(&psi, &packet_at(t0)?, 0.0, &mut report);

    let mut d_start = DriveSample::from_state(&interp.eval(t0)?);
    let mut k: u64 = 0;
    loop {
        let t = t0 + k as f64 * settings.dt;
        let remaining = settings.t_end - t;
        if remaining <= 0.0 {
            break;
        }
        let (t_next, log) = if remaining > settings.dt {
            let t_next = t0 + (k + 1) as f64 * settings.dt;
            let d_end = DriveSample::from_state(&interp.eval(t_next)?);
            let log = prop.step(&mut psi, &d_start, &d_end)?;
            d_start = d_end;
            (t_next, log)
        } else {
            // Truncated final step needs its own kinetic table.
            let short = Propagator::new(grid, &params, remaining)?;
            let d_end = DriveSample::from_state(&interp.eval(settings.t_end)?);
            let log = short.step(&mut psi, &d_start, &d_end)?;
            d_start = d_end;
            (settings.t_end, log)
        };
        psi.t = t_next;
        k += 1;

        if pending_snapshots.first().is_some_and(|t| *t <= t_next) {
            report
                .snapshots
                .push((t_next, psi.psi.iter().map(|v| v.norm_sqr()).collect()));
            pending_snapshots.retain(|t| *t > t_next);
        }

        let drift = math::abs(log.pre_renorm_norm_sq - 1.0);
        let check_now = settings.stop_when_l2_exceeds.is_some()
            || k % settings.record_stride as u64 == 0
            || t_next >= settings.t_end;
        if check_now {
            let wp = packet_at(t_next)?;
            let keep_row =
                k % settings.record_stride as u64 == 0 || t_next >= settings.t_end;
            if keep_row {
                let l2 = record(&psi, &wp, drift, &mut report);
                if let Some(th) = settings.stop_when_l2_exceeds {
                    if l2 > th {
                        report.stopped_at = Some(t_next);
                        break;
                    }
                }
            } else if let Some(th) = settings.stop_when_l2_exceeds {
                let l2 = psi.amplitude_l2_distance(&wp);
                report.max_l2 = report.max_l2.max(l2);
                report.max_norm_drift = report.max_norm_drift.max(drift);
                if l2 > th {
                    record(&psi, &wp, drift, &mut report);
                    report.stopped_at = Some(t_next);
                    break;
                }
            }
        } else {
            report.max_norm_drift = report.max_norm_drift.max(drift);
        }
        if t_next >= settings.t_end {
            break;
        }
    }
    Ok(report)
}
