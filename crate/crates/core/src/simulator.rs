//! Exact propagation of piecewise-constant controls on `Ẋ = X (uA + (1-u)B)`.
//!
//! Each segment contributes an exact closed-form exponential. The running
//! product is rescaled to unit operator norm whenever its norm passes a
//! threshold, and the logarithms of the discarded scales are accumulated, so
//! horizons far beyond the range of `f64` are safe.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::exponent::Strategy;
use crate::periodic::{periodic_exponent, PeriodPair, OVERFLOW_GUARD};
use crate::sl2::{eigen_parameter, expm, EigenKind, Mat2, Sl2Matrix, NILPOTENT_TOL};

pub const RENORM_THRESHOLD: f64 = 1e100;
/// Longest `|alpha d|` handed to a single exponential.
const CHUNK_ARGUMENT: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub duration: f64,
    /// Weight on `A`; `1` is pure `A`, `0` pure `B`.
    pub u: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlSchedule {
    pub segments: Vec<Segment>,
    /// Repeat the segment list until the horizon is reached.
    #[serde(default)]
    pub periodic: bool,
}

impl ControlSchedule {
    pub fn new(segments: Vec<Segment>, periodic: bool) -> Result<Self> {
        let s = ControlSchedule { segments, periodic };
        s.validate()?;
        Ok(s)
    }

    pub fn constant(u: f64, horizon: f64) -> Result<Self> {
        ControlSchedule::new(
            vec![Segment {
                duration: horizon,
                u,
            }],
            false,
        )
    }

    pub fn two_phase(p: PeriodPair) -> Result<Self> {
        ControlSchedule::new(
            vec![
                Segment {
                    duration: p.t,
                    u: 1.0,
                },
                Segment {
                    duration: p.s,
                    u: 0.0,
                },
            ],
            true,
        )
    }

    /// Schedule realizing an optimal strategy up to `horizon`.
    pub fn from_strategy(strategy: &Strategy, horizon: f64) -> Result<Self> {
        match *strategy {
            Strategy::Singular { u_star } => ControlSchedule::constant(u_star, horizon),
            Strategy::Constant { u } => ControlSchedule::constant(u, horizon),
            Strategy::Periodic { time_a, time_b } => {
                ControlSchedule::two_phase(PeriodPair::new(time_a, time_b)?)
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.segments.is_empty() {
            return Err(Error::InvalidSchedule("schedule has no segments".into()));
        }
        for (i, seg) in self.segments.iter().enumerate() {
            if !(seg.duration > 0.0 && seg.duration.is_finite()) {
                return Err(Error::InvalidSchedule(format!(
                    "segment {i}: duration {} is not positive",
                    seg.duration
                )));
            }
            if !(0.0..=1.0).contains(&seg.u) {
                return Err(Error::InvalidSchedule(format!(
                    "segment {i}: control {} is outside [0, 1]",
                    seg.u
                )));
            }
        }
        Ok(())
    }

    pub fn total_duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthEstimate {
    pub horizon: f64,
    /// `ln ‖X(horizon)‖` in the operator 2-norm.
    pub log_norm: f64,
    /// `log_norm / horizon`.
    pub rate: f64,
    /// `ln ρ(X(horizon)) / horizon`: the exponent of the schedule's periodic
    /// extension, free of the `O(1/T)` transient carried by `rate`.
    pub spectral_rate: f64,
    /// Largest `|det X - e^{-2L}| / ‖X‖²` seen before a rescale, where `L` is
    /// the accumulated log scale.
    pub det_drift: f64,
}

struct Running {
    x: Mat2,
    log_scale: f64,
    det_drift: f64,
    threshold: f64,
}

impl Running {
    fn push(&mut self, step: &Mat2) {
        self.x = self.x * *step;
        let n = self.x.operator_norm();
        let drift = (self.x.det() - (-2.0 * self.log_scale).exp()).abs() / (n * n);
        self.det_drift = self.det_drift.max(drift);
        if n > self.threshold {
            self.log_scale += n.ln();
            self.x = self.x.scale(1.0 / n);
        }
    }
}

pub fn propagate(
    a: &Sl2Matrix,
    b: &Sl2Matrix,
    sched: &ControlSchedule,
    horizon: f64,
) -> Result<GrowthEstimate> {
    propagate_with(a, b, sched, horizon, RENORM_THRESHOLD)
}

pub fn propagate_with(
    a: &Sl2Matrix,
    b: &Sl2Matrix,
    sched: &ControlSchedule,
    horizon: f64,
    threshold: f64,
) -> Result<GrowthEstimate> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "horizon must be positive, got {horizon}"
        )));
    }
    if !(threshold > 1.0 && threshold.is_finite() && threshold.ln() < OVERFLOW_GUARD) {
        return Err(Error::InvalidArgument(format!(
            "renormalization threshold {threshold} out of range"
        )));
    }
    sched.validate()?;
    if !sched.periodic && sched.total_duration() < horizon * (1.0 - 1e-12) {
        return Err(Error::InvalidSchedule(format!(
            "schedule covers {} but the horizon is {horizon}",
            sched.total_duration()
        )));
    }

    let generators: Vec<(Sl2Matrix, f64)> = sched
        .segments
        .iter()
        .map(|seg| {
            let m = seg.u * *a + (1.0 - seg.u) * *b;
            let eig = eigen_parameter(&m, NILPOTENT_TOL);
            let rate = if eig.kind == EigenKind::Nilpotent {
                0.0
            } else {
                eig.alpha
            };
            (m, rate)
        })
        .collect();

    let mut run = Running {
        x: Mat2::IDENTITY,
        log_scale: 0.0,
        det_drift: 0.0,
        threshold,
    };
    let mut elapsed = 0.0;
    'outer: loop {
        for (seg, (m, rate)) in sched.segments.iter().zip(&generators) {
            let remaining = horizon - elapsed;
            if remaining <= 0.0 {
                break 'outer;
            }
            let d = seg.duration.min(remaining);
            let chunks = ((rate * d) / CHUNK_ARGUMENT).ceil().max(1.0) as usize;
            let step = expm(m, d / chunks as f64)?;
            for _ in 0..chunks {
                run.push(&step);
            }
            elapsed += d;
        }
        if !sched.periodic {
            break;
        }
    }

    let log_norm = run.log_scale + run.x.operator_norm().ln();
    let spectral = run.log_scale + run.x.ln_spectral_radius();
    Ok(GrowthEstimate {
        horizon,
        log_norm,
        rate: log_norm / horizon,
        spectral_rate: (spectral / horizon).max(0.0),
        det_drift: run.det_drift,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub t_max: f64,
    pub s_max: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridBest {
    pub best_rate: f64,
    pub best_pair: PeriodPair,
}

/// Maximum of the periodic exponent over the grid `t_i = t_max i / n`,
/// `s_j = s_max j / n`, `i, j = 1..=n`. Ties go to the smallest `(t, s)`.
/// Cells whose exponentials would overflow are skipped.
pub fn brute_force_lower_bound(
    a: &Sl2Matrix,
    b: &Sl2Matrix,
    grid: GridSpec,
    exec: Execution,
) -> Result<GridBest> {
    let GridSpec { t_max, s_max, n } = grid;
    if n < 2 || !(t_max > 0.0 && s_max > 0.0 && t_max.is_finite() && s_max.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "grid needs n >= 2 and positive finite extents, got {grid:?}"
        )));
    }
    let rows = exec.map_indexed(n, |i| {
        let t = t_max * (i + 1) as f64 / n as f64;
        let mut best: Option<(f64, PeriodPair)> = None;
        for j in 0..n {
            let s = s_max * (j + 1) as f64 / n as f64;
            let p = PeriodPair { t, s };
            match periodic_exponent(a, b, p) {
                Ok(v) if best.is_none_or(|(bv, _)| v > bv) => best = Some((v, p)),
                _ => {}
            }
        }
        best
    });
    let mut best: Option<(f64, PeriodPair)> = None;
    for (v, p) in rows.into_iter().flatten() {
        if best.is_none_or(|(bv, _)| v > bv) {
            best = Some((v, p));
        }
    }
    let (best_rate, best_pair) =
        best.ok_or_else(|| Error::InvalidArgument("every grid cell overflowed".into()))?;
    Ok(GridBest {
        best_rate,
        best_pair,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeSpec {
    pub horizon: f64,
    pub trials: usize,
    pub seed: u64,
    /// Mean segment duration; defaults to `0.5 / max(λ, μ, 1)`.
    pub mean_duration: Option<f64>,
    /// Use this control on every segment instead of alternating bangs.
    pub forced_control: Option<f64>,
}

impl ProbeSpec {
    pub fn new(horizon: f64, trials: usize, seed: u64) -> Self {
        ProbeSpec {
            horizon,
            trials,
            seed,
            mean_duration: None,
            forced_control: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeBest {
    /// Largest spectral rate over the trials.
    pub best_rate: f64,
    pub best_trial: usize,
    /// Norm-based rate of the same trial.
    pub best_norm_rate: f64,
}

pub fn default_mean_duration(a: &Sl2Matrix, b: &Sl2Matrix) -> f64 {
    let rate = |m: &Sl2Matrix| {
        let e = eigen_parameter(m, NILPOTENT_TOL);
        if e.kind == EigenKind::Nilpotent {
            0.0
        } else {
            e.alpha
        }
    };
    0.5 / rate(a).max(rate(b)).max(1.0)
}

/// Bang-bang schedule for one trial. Trial `k` draws from ChaCha8 seeded with
/// `seed` on stream `k`, so each trial is reproducible on its own.
pub fn sample_schedule(spec: &ProbeSpec, mean: f64, trial: usize) -> ControlSchedule {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(trial as u64);
    let mut bit: bool = rng.gen();
    let mut segments = Vec::new();
    let mut total = 0.0;
    while total < spec.horizon {
        let uniform: f64 = rng.gen();
        let d = (-mean * (-uniform).ln_1p()).max(f64::MIN_POSITIVE);
        let u = spec.forced_control.unwrap_or(if bit { 1.0 } else { 0.0 });
        segments.push(Segment { duration: d, u });
        total += d;
        bit = !bit;
    }
    ControlSchedule {
        segments,
        periodic: false,
    }
}

pub fn random_schedule_probe(
    a: &Sl2Matrix,
    b: &Sl2Matrix,
    spec: ProbeSpec,
    exec: Execution,
) -> Result<ProbeBest> {
    if spec.trials == 0 {
        return Err(Error::InvalidArgument(
            "probe needs at least one trial".into(),
        ));
    }
    let mean = spec
        .mean_duration
        .unwrap_or_else(|| default_mean_duration(a, b));
    if !(mean > 0.0 && mean.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "mean duration {mean} must be positive"
        )));
    }
    if let Some(u) = spec.forced_control {
        if !(0.0..=1.0).contains(&u) {
            return Err(Error::InvalidArgument(format!(
                "forced control {u} is outside [0, 1]"
            )));
        }
    }
    let results = exec.map_indexed(spec.trials, |k| {
        propagate(a, b, &sample_schedule(&spec, mean, k), spec.horizon)
    });
    let mut best: Option<ProbeBest> = None;
    for (k, r) in results.into_iter().enumerate() {
        let g = r?;
        if best.is_none_or(|bst| g.spectral_rate > bst.best_rate) {
            best = Some(ProbeBest {
                best_rate: g.spectral_rate,
                best_trial: k,
                best_norm_rate: g.rate,
            });
        }
    }
    Ok(best.expect("trials >= 1"))
}
