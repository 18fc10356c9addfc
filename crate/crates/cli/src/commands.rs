use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use swlyap::exec::Execution;
use swlyap::exponent::{
    classify, exponent_from_invariants, lyapunov_exponent_with_tol, CaseTag, ExponentReport,
    Strategy, CLASSIFY_TOL,
};
use swlyap::geometry::singular_data;
use swlyap::oracle::{commutator_trace_sq_direct, expm_taylor, relative_error};
use swlyap::periodic::{doubling_gap, doubling_gap_closed_form, phi, PeriodPair};
use swlyap::simulator::{
    brute_force_lower_bound, propagate, random_schedule_probe, ControlSchedule, GridSpec,
    GrowthEstimate, ProbeSpec,
};
use swlyap::sl2::{
    bracket, eigen_parameter, expm, EigenKind, Sl2Matrix, TraceInvariants, NILPOTENT_TOL,
};

use crate::error::{CliError, CliResult};
use crate::format::{general, short};
use crate::input::MatrixPairInput;

pub const TOL_ENV: &str = "SWLYAP_TOL";

/// Classification tolerance, overridable through `SWLYAP_TOL`.
pub fn classify_tol() -> CliResult<f64> {
    match std::env::var(TOL_ENV) {
        Ok(s) => {
            let v: f64 = s
                .trim()
                .parse()
                .map_err(|_| CliError::Argument(format!("{TOL_ENV}={s} is not a number")))?;
            if !(v >= 0.0 && v.is_finite()) {
                return Err(CliError::Argument(format!(
                    "{TOL_ENV}={s} must be non-negative"
                )));
            }
            Ok(v)
        }
        Err(_) => Ok(CLASSIFY_TOL),
    }
}

// ---------------------------------------------------------------- exponent

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentOutput {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub case: CaseTag,
    pub value: f64,
    pub swapped: bool,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub strategy: Option<Strategy>,
}

pub fn exponent(input: &MatrixPairInput, tol: f64) -> CliResult<ExponentOutput> {
    let r = lyapunov_exponent_with_tol(&input.a, &input.b, tol)?;
    Ok(ExponentOutput {
        label: input.label.clone(),
        case: r.case.tag,
        value: r.value,
        swapped: r.case.swapped,
        a: r.invariants.a,
        b: r.invariants.b,
        c: r.invariants.c,
        strategy: r.strategy,
    })
}

fn strategy_text(s: &Strategy) -> String {
    match *s {
        Strategy::Singular { u_star } => format!("u*={}", short(u_star)),
        Strategy::Constant { u } => format!("u={}", short(u)),
        Strategy::Periodic { time_a, time_b } => {
            format!("t={} s={}", short(time_a), short(time_b))
        }
    }
}

pub fn render_exponent(out: &ExponentOutput) -> String {
    let mut line = format!("case={} value={}", out.case, short(out.value));
    if let Some(s) = &out.strategy {
        if out.case != CaseTag::ConstantOptimal {
            line.push(' ');
            line.push_str(&strategy_text(s));
        }
    }
    let mut text = line + "\n";
    if let Some(l) = &out.label {
        let _ = writeln!(text, "label={l}");
    }
    let _ = writeln!(
        text,
        "a={} b={} c={} swapped={}",
        short(out.a),
        short(out.b),
        short(out.c),
        out.swapped
    );
    if let Some(s) = &out.strategy {
        let _ = writeln!(text, "strategy={}", strategy_text(s));
    }
    text
}

pub fn render_exponent_json(out: &ExponentOutput) -> String {
    serde_json::to_string_pretty(out).expect("plain data serializes") + "\n"
}

// ---------------------------------------------------------------- verify

pub const BOUND_SLACK: f64 = 5e-3;
pub const TIGHTNESS_TOL: f64 = 1e-6;
pub const COMMUTATOR_TOL: f64 = 1e-10;
pub const EXPM_TOL: f64 = 1e-8;
pub const DET_TOL: f64 = 1e-9;
pub const EQUILIBRIUM_TOL: f64 = 1e-10;
pub const DOUBLING_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy)]
pub struct VerifyOptions {
    /// Tightness horizon; defaults to 100 characteristic times.
    pub horizon: Option<f64>,
    pub trials: usize,
    pub seed: u64,
    pub exec: Execution,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            horizon: None,
            trials: 500,
            seed: 0,
            exec: Execution::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRow {
    pub name: &'static str,
    pub measured: f64,
    pub bound: f64,
    pub pass: bool,
    pub note: String,
}

impl CheckRow {
    fn at_most(name: &'static str, measured: f64, bound: f64, note: impl Into<String>) -> Self {
        CheckRow {
            name,
            measured,
            bound,
            pass: measured <= bound,
            note: note.into(),
        }
    }

    fn skipped(name: &'static str, note: impl Into<String>) -> Self {
        CheckRow {
            name,
            measured: f64::NAN,
            bound: f64::NAN,
            pass: true,
            note: note.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub exponent: ExponentReport,
    pub rows: Vec<CheckRow>,
}

impl VerifyReport {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn render(&self) -> String {
        let mut s = format!(
            "case={} value={}\n",
            self.exponent.case.tag,
            general(self.exponent.value, 9)
        );
        let _ = writeln!(
            s,
            "{:<22} {:>14} {:>14}  {:<6} note",
            "check", "measured", "bound", "status"
        );
        for r in &self.rows {
            let num = |x: f64| {
                if x.is_nan() {
                    "-".to_string()
                } else {
                    general(x, 6)
                }
            };
            let _ = writeln!(
                s,
                "{:<22} {:>14} {:>14}  {:<6} {}",
                r.name,
                num(r.measured),
                num(r.bound),
                if r.pass { "PASS" } else { "FAIL" },
                r.note
            );
        }
        s
    }
}

fn rate(m: &Sl2Matrix) -> f64 {
    let e = eigen_parameter(m, NILPOTENT_TOL);
    if e.kind == EigenKind::Nilpotent {
        0.0
    } else {
        e.alpha
    }
}

/// `1 / max(λ, μ)`, the time scale on which the generators act.
pub fn characteristic_time(a: &Sl2Matrix, b: &Sl2Matrix) -> f64 {
    let w = rate(a).max(rate(b));
    if w > 0.0 {
        1.0 / w
    } else {
        1.0
    }
}

pub fn verify(input: &MatrixPairInput, tol: f64, opts: VerifyOptions) -> CliResult<VerifyReport> {
    let (a, b) = (&input.a, &input.b);
    let report = lyapunov_exponent_with_tol(a, b, tol)?;
    let value = report.value;
    let inv = TraceInvariants::of(a, b);
    let tau = characteristic_time(a, b);
    let mut rows = Vec::new();

    let direct = commutator_trace_sq_direct(a, b);
    let terms = direct
        .abs()
        .max(2.0 * inv.c * inv.c)
        .max(2.0 * (inv.a * inv.b).abs());
    let rel = if terms > 0.0 {
        (inv.commutator_trace_sq() - direct).abs() / terms
    } else {
        0.0
    };
    rows.push(CheckRow::at_most(
        "commutator identity",
        rel,
        COMMUTATOR_TOL,
        "2c^2-2ab vs tr([A,B]^2)",
    ));

    let mut gens = vec![*a, *b];
    if let Ok(s) = singular_data(a, b) {
        gens.push(s.velocity(a, b));
    }
    let (mut worst, mut det_worst) = (0.0f64, 0.0f64);
    for m in &gens {
        let n = m.to_mat2().frobenius();
        for frac in [0.1, 0.5, 1.0] {
            let t = if n > 0.0 { frac * 10.0 / n } else { frac };
            let e = expm(m, t)?;
            worst = worst.max(relative_error(&e, &expm_taylor(&m.to_mat2(), t)));
            det_worst = det_worst.max((e.det() - 1.0).abs());
        }
    }
    rows.push(CheckRow::at_most(
        "expm vs taylor",
        worst,
        EXPM_TOL,
        "max relative error, |tM| <= 10",
    ));
    rows.push(CheckRow::at_most(
        "expm determinant",
        det_worst,
        DET_TOL,
        "max |det - 1|",
    ));

    match singular_data(a, b) {
        Ok(s) if s.admissible => {
            let m = s.velocity(a, b);
            let res = s
                .eta_star
                .iter()
                .map(|e| bracket(e, &m).norm() / (e.norm() * m.norm()).max(f64::MIN_POSITIVE))
                .fold(0.0, f64::max);
            rows.push(CheckRow::at_most(
                "singular equilibrium",
                res,
                EQUILIBRIUM_TOL,
                format!("|[eta*, M*]| relative, u*={}", short(s.u_star)),
            ));
        }
        Ok(s) => rows.push(CheckRow::skipped(
            "singular equilibrium",
            format!("u*={} not admissible", short(s.u_star)),
        )),
        Err(_) => rows.push(CheckRow::skipped(
            "singular equilibrium",
            "no singular extremal",
        )),
    }

    let mut gap_worst = 0.0f64;
    for (t, s) in [(0.5, 0.5), (1.0, 0.3), (0.7, 1.9), (2.0, 2.0)] {
        let p = PeriodPair::new(t * tau, s * tau)?;
        let g = doubling_gap(a, b, p)?;
        let c = doubling_gap_closed_form(a, b, p)?;
        let scale = 1.0f64.max(c.abs()).max(phi(a, b, p)?.abs());
        gap_worst = gap_worst.max((g - c).abs() / scale);
    }
    rows.push(CheckRow::at_most(
        "doubling gap",
        gap_worst,
        DOUBLING_TOL,
        "matrix vs sinh^2 closed form",
    ));

    let elliptic = [a, b]
        .iter()
        .all(|m| eigen_parameter(m, NILPOTENT_TOL).kind == EigenKind::Imaginary);
    let extent = if elliptic {
        2.0 * std::f64::consts::PI * tau
    } else {
        2.0 * tau
    };
    let grid = GridSpec {
        t_max: extent,
        s_max: extent,
        n: 80,
    };
    let best = brute_force_lower_bound(a, b, grid, opts.exec)?;
    rows.push(CheckRow::at_most(
        "brute-force bound",
        best.best_rate,
        value + BOUND_SLACK,
        format!(
            "80x80 grid, argmax (t,s)=({}, {})",
            general(best.best_pair.t, 4),
            general(best.best_pair.s, 4)
        ),
    ));

    let probe = random_schedule_probe(
        a,
        b,
        ProbeSpec::new(40.0 * tau, opts.trials.max(1), opts.seed),
        opts.exec,
    )?;
    rows.push(CheckRow::at_most(
        "random-probe bound",
        probe.best_rate,
        value + BOUND_SLACK,
        format!("{} trials, seed {}", opts.trials.max(1), opts.seed),
    ));

    match report.strategy {
        Some(strategy) => {
            let est = tightness(a, b, &strategy, opts.horizon.unwrap_or(100.0 * tau))?;
            rows.push(CheckRow::at_most(
                "tightness",
                (est.spectral_rate - value).abs(),
                TIGHTNESS_TOL,
                format!(
                    "|sim - closed|, sim={} at T={}",
                    general(est.spectral_rate, 9),
                    general(est.horizon, 6)
                ),
            ));
        }
        None => rows.push(CheckRow::skipped("tightness", "no strategy reported")),
    }

    Ok(VerifyReport {
        exponent: report,
        rows,
    })
}

/// Simulates the optimal strategy; periodic strategies run a whole number of
/// periods, at least 50.
pub fn tightness(
    a: &Sl2Matrix,
    b: &Sl2Matrix,
    strategy: &Strategy,
    horizon: f64,
) -> CliResult<GrowthEstimate> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(CliError::Argument(format!(
            "horizon must be positive, got {horizon}"
        )));
    }
    let sched = ControlSchedule::from_strategy(strategy, horizon)?;
    let horizon = if sched.periodic {
        let period = sched.total_duration();
        (horizon / period).ceil().max(50.0) * period
    } else {
        horizon
    };
    Ok(propagate(a, b, &sched, horizon)?)
}

// ---------------------------------------------------------------- sweep

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridRange {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl GridRange {
    pub fn value(&self, i: usize) -> f64 {
        if i + 1 == self.n {
            return self.hi;
        }
        self.lo + (self.hi - self.lo) * i as f64 / (self.n - 1) as f64
    }
}

impl FromStr for GridRange {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        let bad = || CliError::Argument(format!("range `{s}` must look like lo:hi:n"));
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(bad());
        }
        let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
        let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
        let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
        if !(lo.is_finite() && hi.is_finite()) || n < 2 {
            return Err(CliError::Argument(format!(
                "range `{s}` needs finite bounds and n >= 2"
            )));
        }
        Ok(GridRange { lo, hi, n })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSpec {
    pub a_fixed: f64,
    pub b_range: GridRange,
    pub c_range: GridRange,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub b: f64,
    pub c: f64,
    /// `None` for invariants no matrix pair realizes.
    pub case: Option<CaseTag>,
    pub ell: Option<f64>,
}

/// Case and exponent straight from `(a, b, c)`, ordering the pair so that
/// `a >= b` first.
pub fn sweep_cell(a: f64, b: f64, c: f64, tol: f64) -> (Option<CaseTag>, Option<f64>) {
    let inv = if a >= b {
        TraceInvariants::new(a, b, c)
    } else {
        TraceInvariants::new(b, a, c)
    };
    match classify(&inv, tol).and_then(|tag| Ok((tag, exponent_from_invariants(&inv, tag)?))) {
        Ok((tag, v)) => (Some(tag), Some(v)),
        Err(_) => (None, None),
    }
}

pub fn sweep_rows(spec: &SweepSpec, tol: f64, exec: Execution) -> CliResult<Vec<SweepRow>> {
    if !spec.a_fixed.is_finite() {
        return Err(CliError::Argument("a must be finite".into()));
    }
    let nc = spec.c_range.n;
    Ok(exec.map_indexed(spec.b_range.n * nc, |i| {
        let b = spec.b_range.value(i / nc);
        let c = spec.c_range.value(i % nc);
        let (case, ell) = sweep_cell(spec.a_fixed, b, c, tol);
        SweepRow { b, c, case, ell }
    }))
}

pub fn render_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from("b,c,case,ell\n");
    for r in rows {
        let case = r.case.map_or("Infeasible", CaseTag::name);
        let ell = r.ell.map(|v| general(v, 12)).unwrap_or_default();
        let _ = writeln!(
            s,
            "{},{},{},{}",
            general(r.b, 12),
            general(r.c, 12),
            case,
            ell
        );
    }
    s
}

pub fn sweep(spec: &SweepSpec, out: &Path, tol: f64, exec: Execution) -> CliResult<usize> {
    let rows = sweep_rows(spec, tol, exec)?;
    std::fs::write(out, render_csv(&rows)).map_err(|e| CliError::io(out, e))?;
    Ok(rows.len())
}

// ---------------------------------------------------------------- simulate

pub fn read_schedule(path: &Path) -> CliResult<ControlSchedule> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let sched: ControlSchedule = serde_json::from_str(&text).map_err(|e| CliError::Parse {
        source_name: path.display().to_string(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    sched.validate()?;
    Ok(sched)
}

/// Default horizon: the schedule's length, or 100 periods when it repeats.
pub fn simulate(
    input: &MatrixPairInput,
    sched: &ControlSchedule,
    horizon: Option<f64>,
) -> CliResult<GrowthEstimate> {
    let total = sched.total_duration();
    let horizon = horizon.unwrap_or(if sched.periodic { 100.0 * total } else { total });
    Ok(propagate(&input.a, &input.b, sched, horizon)?)
}

pub fn render_growth(g: &GrowthEstimate) -> String {
    format!(
        "horizon={} log_norm={} rate={} spectral_rate={}\n",
        general(g.horizon, 12),
        general(g.log_norm, 12),
        general(g.rate, 12),
        general(g.spectral_rate, 12)
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::input::parse_pair;

    fn pair(text: &str) -> MatrixPairInput {
        parse_pair(text, "t").unwrap()
    }

    #[test]
    fn exponent_lines() {
        let out = exponent(&pair("1 0 0 -1\n3 -2 4 -3\n"), CLASSIFY_TOL).unwrap();
        let text = render_exponent(&out);
        assert!(
            text.starts_with("case=SingularOptimal value=1.41421356 u*=0.5\n"),
            "{text}"
        );
        let out = exponent(&pair("1 0 0 -1\n0 1 1 0\n"), CLASSIFY_TOL).unwrap();
        assert!(render_exponent(&out).starts_with("case=ConstantOptimal value=1\n"));
        let out = exponent(&pair("1 0 0 -1\n2 0 0 -2\n"), CLASSIFY_TOL).unwrap();
        assert!(render_exponent(&out).starts_with("case=SolvableFallback value=2"));
    }

    #[test]
    fn json_round_trip_is_exact() {
        let out = exponent(&pair("0 -1 1 0\n1 -2 1 -1\n"), CLASSIFY_TOL).unwrap();
        let back: ExponentOutput = serde_json::from_str(&render_exponent_json(&out)).unwrap();
        assert_eq!(back.value.to_bits(), out.value.to_bits());
        assert_eq!(back, out);
    }

    #[test]
    fn ranges() {
        let r: GridRange = "-1:1:61".parse().unwrap();
        assert_eq!((r.value(0), r.value(30), r.value(60)), (-1.0, 0.0, 1.0));
        assert!("1:2".parse::<GridRange>().is_err());
        assert!("1:2:1".parse::<GridRange>().is_err());
        assert!("a:2:3".parse::<GridRange>().is_err());
    }

    #[test]
    fn sweep_cells() {
        let (case, ell) = sweep_cell(1.0, 1.0, 2.0, CLASSIFY_TOL);
        assert_eq!(case, Some(CaseTag::SingularOptimal));
        assert!((ell.unwrap() - 3f64.sqrt() / 2.0).abs() < 1e-15);
        let (case, ell) = sweep_cell(1.0, 1.0, 0.0, CLASSIFY_TOL);
        assert_eq!(case, Some(CaseTag::ConstantOptimal));
        assert!((ell.unwrap() - 0.5f64.sqrt()).abs() < 1e-15);
        let (case, ell) = sweep_cell(-1.0, -1.0, -1.0, CLASSIFY_TOL);
        assert_eq!((case, ell), (Some(CaseTag::PeriodicOptimal), Some(0.0)));
        assert_eq!(sweep_cell(-1.0, -1.0, 0.5, CLASSIFY_TOL), (None, None));
    }

    #[test]
    fn csv_layout() {
        let spec = SweepSpec {
            a_fixed: -1.0,
            b_range: "-1:-0.5:2".parse().unwrap(),
            c_range: "-1:0:2".parse().unwrap(),
        };
        let csv = render_csv(&sweep_rows(&spec, CLASSIFY_TOL, Execution::Sequential).unwrap());
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "b,c,case,ell");
        assert_eq!(lines[1], "-1,-1,PeriodicOptimal,0");
        assert_eq!(lines[2], "-1,0,Infeasible,");
        assert_eq!(lines.len(), 5);
        assert!(!csv.contains('\r'));
    }
}
