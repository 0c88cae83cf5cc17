//! Variational inequalities `(X, F)` and first-order solvers for them.
//!
//! A point `x* ∈ X` is a strong solution when `⟨F(x*), x − x*⟩ ≥ 0` for every
//! `x ∈ X`, and a weak (Minty) solution when `⟨F(x), x* − x⟩ ≤ 0` for every
//! `x ∈ X`. The gap function `max_{x ∈ X} ⟨F(x̂), x̂ − x⟩` certifies
//! ε-strong solutions and is evaluated in closed form through
//! [`FeasibleSet::linear_max`].
//!
//! Two solvers share one trace format:
//!
//! * [`mirror_gradient_solve`]: `x_{k+1} = M(x_k, F(x_k))`
//! * [`mirror_extragradient_solve`]: `x_{k+½} = M(x_k, F(x_k))`,
//!   `x_{k+1} = M(x_k, F(x_{k+½}))`, both prox steps centered at `x_k`
//!
//! where `M` is the exact mirror step of [`crate::kernels`].

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{FeasibleSet, Kernel};
use crate::linalg::{dist2, dot};

/// Divergences at or below this value count as converged steps and carry no
/// continuity information.
pub const DEGENERATE_STEP: f64 = 1e-16;

/// Running-min gaps at or below this value are treated as rounding noise by
/// [`rate_slope`].
pub const RATE_GAP_FLOOR: f64 = 1e-12;

/// Maximum number of step halvings a run may perform under backoff.
pub const MAX_BACKOFFS: usize = 200;

/// A single-valued optimality operator `F: Rⁿ → Rⁿ`.
pub trait Operator {
    fn eval(&self, x: &[f64]) -> Result<Vec<f64>>;
}

impl<T: Operator + ?Sized> Operator for &T {
    fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        (**self).eval(x)
    }
}

impl<T: Operator + ?Sized> Operator for Box<T> {
    fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        (**self).eval(x)
    }
}

/// Adapts a plain closure into an [`Operator`].
#[derive(Clone)]
pub struct FnOperator<F>(pub F);

impl<F: Fn(&[f64]) -> Vec<f64>> Operator for FnOperator<F> {
    fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok((self.0)(x))
    }
}

/// Operator backed by a plain function pointer.
pub type FnPtrOperator = FnOperator<fn(&[f64]) -> Vec<f64>>;

/// `F(x, y) = (−y, x)`: monotone, with unique solution at the origin, on which
/// plain gradient iterates spiral outward.
pub fn rotation_operator() -> FnPtrOperator {
    FnOperator(|x: &[f64]| vec![-x[1], x[0]])
}

/// `F(x) = 1 − x²`: strong solutions ±1, no global Minty solution.
pub fn scalar_nonminty_operator() -> FnPtrOperator {
    FnOperator(|x: &[f64]| vec![1.0 - x[0] * x[0]])
}

/// A variational inequality `(set, operator)`.
pub struct ViProblem<F> {
    pub set: FeasibleSet,
    pub operator: F,
    pub label: String,
}

impl<F: Operator> ViProblem<F> {
    pub fn new(set: FeasibleSet, operator: F, label: impl Into<String>) -> Self {
        ViProblem { set, operator, label: label.into() }
    }

    pub fn dim(&self) -> usize {
        self.set.dim()
    }

    /// Evaluates `F(x)`, rejecting wrong-sized or non-finite outputs.
    pub fn evaluate(&self, x: &[f64]) -> Result<Vec<f64>> {
        let f = self.operator.eval(x)?;
        if f.len() != self.dim() {
            return Err(Error::Evaluation(format!(
                "{}: operator returned {} entries, expected {}",
                self.label,
                f.len(),
                self.dim()
            )));
        }
        if let Some(j) = f.iter().position(|v| !v.is_finite()) {
            return Err(Error::Evaluation(format!("{}: operator value {j} is {}", self.label, f[j])));
        }
        Ok(f)
    }

    /// Gap at `x` given a precomputed `F(x)`.
    pub(crate) fn gap_with_value(&self, x: &[f64], f: &[f64]) -> Result<f64> {
        let neg: Vec<f64> = f.iter().map(|v| -v).collect();
        let (m, _) = self.set.linear_max(&neg)?;
        Ok(dot(f, x) + m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Gradient,
    Extragradient,
}

/// Inputs shared by both solvers.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub eta: f64,
    pub horizon: usize,
    pub kernel: Kernel,
    pub record_every: usize,
    /// Stop as soon as the recorded gap drops to this value.
    pub stop_gap: Option<f64>,
    /// Halve `eta` and redo the iteration whenever the pathwise modulus
    /// exceeds `1/(√2·eta)`.
    pub backoff: bool,
}

impl SolverConfig {
    pub fn new(eta: f64, horizon: usize, kernel: Kernel) -> Self {
        SolverConfig { eta, horizon, kernel, record_every: 1, stop_gap: None, backoff: false }
    }

    pub fn with_record_every(mut self, every: usize) -> Self {
        self.record_every = every;
        self
    }

    pub fn with_stop_gap(mut self, eps: f64) -> Self {
        self.stop_gap = Some(eps);
        self
    }

    pub fn with_backoff(mut self, on: bool) -> Self {
        self.backoff = on;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::InvalidInput(format!("eta must be positive, got {}", self.eta)));
        }
        if self.horizon == 0 {
            return Err(Error::InvalidInput("horizon must be at least 1".into()));
        }
        if self.record_every == 0 {
            return Err(Error::InvalidInput("record_every must be at least 1".into()));
        }
        if let Some(eps) = self.stop_gap {
            if eps.is_nan() {
                return Err(Error::InvalidInput("stop_gap is NaN".into()));
            }
        }
        Ok(())
    }
}

/// One recorded iteration.
///
/// For extragradient runs `x_half` is `x_{k+½}` and the gap and residuals are
/// evaluated there. For gradient runs `x_half` holds `x_{k+1}` and the gap and
/// residuals are evaluated at `x_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct IterRecord {
    pub k: usize,
    pub x: Vec<f64>,
    pub x_half: Vec<f64>,
    pub eta: f64,
    pub gap: f64,
    /// `D_h(x_half, x)`.
    pub breg_progress: f64,
    /// `‖F(x_half) − F(x)‖₂`.
    pub operator_change: f64,
    /// `operator_change / √(2·breg_progress)`, absent for degenerate steps.
    pub pathwise_l: Option<f64>,
    /// `max_j (−F_j)⁺` at the gap point.
    pub sign_violation: f64,
    /// `|⟨F, x⟩|` at the gap point.
    pub complementarity: f64,
    pub elapsed_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub method: Method,
    pub kernel: Kernel,
    pub records: Vec<IterRecord>,
    /// Index into `records` minimizing `breg_progress` (first on ties).
    pub best_index: usize,
    pub best_iterate: Vec<f64>,
    pub last_iterate: Vec<f64>,
    pub iterations: usize,
    pub stopped_early: bool,
    pub final_eta: f64,
    pub backoffs: usize,
    pub wall_time_s: f64,
}

impl RunTrace {
    pub fn best_record(&self) -> &IterRecord {
        &self.records[self.best_index]
    }

    /// Running minimum of the recorded gaps.
    pub fn running_min_gaps(&self) -> Vec<f64> {
        let mut m = f64::INFINITY;
        self.records
            .iter()
            .map(|r| {
                m = m.min(r.gap);
                m
            })
            .collect()
    }
}

fn residuals(x: &[f64], f: &[f64]) -> (f64, f64) {
    let sign = f.iter().fold(0.0f64, |m, v| m.max(-v));
    (sign, dot(f, x).abs())
}

fn pathwise_sample(change: f64, breg: f64) -> Option<f64> {
    (breg > DEGENERATE_STEP).then(|| change / (2.0 * breg).sqrt())
}

fn best_by_progress(records: &[IterRecord]) -> usize {
    let mut best = 0;
    for (i, r) in records.iter().enumerate() {
        if r.breg_progress < records[best].breg_progress {
            best = i;
        }
    }
    best
}

fn backoff_needed(config: &SolverConfig, eta: f64, sample: Option<f64>) -> bool {
    config.backoff && sample.is_some_and(|l| l > 1.0 / (std::f64::consts::SQRT_2 * eta))
}

fn halve(eta: &mut f64, backoffs: &mut usize) -> Result<()> {
    *eta *= 0.5;
    *backoffs += 1;
    if *backoffs > MAX_BACKOFFS {
        return Err(Error::Evaluation(format!("step backoff exhausted after {MAX_BACKOFFS} halvings")));
    }
    Ok(())
}

/// Mirror gradient method: `x_{k+1} = M(x_k, F(x_k))`.
pub fn mirror_gradient_solve<F: Operator>(
    problem: &ViProblem<F>,
    config: &SolverConfig,
    x0: &[f64],
) -> Result<RunTrace> {
    config.validate()?;
    problem.set.check_member("initial point", x0)?;
    let kernel = config.kernel;
    let start = Instant::now();
    let mut eta = config.eta;
    let mut backoffs = 0;
    let mut records = Vec::new();
    let mut x = x0.to_vec();
    let mut fx = problem.evaluate(&x)?;
    let mut stopped_early = false;
    let mut iterations = 0;

    for k in 0..config.horizon {
        let (x_next, f_next, breg, change, sample) = loop {
            let x_next = kernel.mirror_step(&problem.set, eta, &x, &fx)?;
            let f_next = problem.evaluate(&x_next)?;
            let breg = kernel.divergence_unchecked(&x_next, &x);
            let change = dist2(&f_next, &fx);
            let sample = pathwise_sample(change, breg);
            if backoff_needed(config, eta, sample) {
                halve(&mut eta, &mut backoffs)?;
                continue;
            }
            break (x_next, f_next, breg, change, sample);
        };
        let gap = problem.gap_with_value(&x, &fx)?;
        let stop = config.stop_gap.is_some_and(|eps| gap <= eps);
        iterations = k + 1;
        if k % config.record_every == 0 || stop {
            let (sign_violation, complementarity) = residuals(&x, &fx);
            records.push(IterRecord {
                k,
                x: x.clone(),
                x_half: x_next.clone(),
                eta,
                gap,
                breg_progress: breg,
                operator_change: change,
                pathwise_l: sample,
                sign_violation,
                complementarity,
                elapsed_s: start.elapsed().as_secs_f64(),
            });
        }
        x = x_next;
        fx = f_next;
        if stop {
            stopped_early = true;
            break;
        }
    }

    let best_index = best_by_progress(&records);
    Ok(RunTrace {
        method: Method::Gradient,
        kernel,
        best_iterate: records[best_index].x_half.clone(),
        records,
        best_index,
        last_iterate: x,
        iterations,
        stopped_early,
        final_eta: eta,
        backoffs,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

/// Mirror extragradient method; the best iterate is the `x_{k+½}` with the
/// smallest `D_h(x_{k+½}, x_k)` among recorded iterations.
pub fn mirror_extragradient_solve<F: Operator>(
    problem: &ViProblem<F>,
    config: &SolverConfig,
    x0: &[f64],
) -> Result<RunTrace> {
    config.validate()?;
    problem.set.check_member("initial point", x0)?;
    let kernel = config.kernel;
    let start = Instant::now();
    let mut eta = config.eta;
    let mut backoffs = 0;
    let mut records = Vec::new();
    let mut x = x0.to_vec();
    let mut fx = problem.evaluate(&x)?;
    let mut stopped_early = false;
    let mut iterations = 0;

    for k in 0..config.horizon {
        let (x_half, f_half, breg, change, sample) = loop {
            let x_half = kernel.mirror_step(&problem.set, eta, &x, &fx)?;
            let f_half = problem.evaluate(&x_half)?;
            let breg = kernel.divergence_unchecked(&x_half, &x);
            let change = dist2(&f_half, &fx);
            let sample = pathwise_sample(change, breg);
            if backoff_needed(config, eta, sample) {
                halve(&mut eta, &mut backoffs)?;
                continue;
            }
            break (x_half, f_half, breg, change, sample);
        };
        let gap = problem.gap_with_value(&x_half, &f_half)?;
        let x_next = kernel.mirror_step(&problem.set, eta, &x, &f_half)?;
        let stop = config.stop_gap.is_some_and(|eps| gap <= eps);
        iterations = k + 1;
        if k % config.record_every == 0 || stop {
            let (sign_violation, complementarity) = residuals(&x_half, &f_half);
            records.push(IterRecord {
                k,
                x: x.clone(),
                x_half,
                eta,
                gap,
                breg_progress: breg,
                operator_change: change,
                pathwise_l: sample,
                sign_violation,
                complementarity,
                elapsed_s: start.elapsed().as_secs_f64(),
            });
        }
        x = x_next;
        if stop {
            stopped_early = true;
            break;
        }
        fx = problem.evaluate(&x)?;
    }

    let best_index = best_by_progress(&records);
    Ok(RunTrace {
        method: Method::Extragradient,
        kernel,
        best_iterate: records[best_index].x_half.clone(),
        records,
        best_index,
        last_iterate: x,
        iterations,
        stopped_early,
        final_eta: eta,
        backoffs,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

/// Dispatches on `method`.
pub fn solve<F: Operator>(
    method: Method,
    problem: &ViProblem<F>,
    config: &SolverConfig,
    x0: &[f64],
) -> Result<RunTrace> {
    match method {
        Method::Gradient => mirror_gradient_solve(problem, config, x0),
        Method::Extragradient => mirror_extragradient_solve(problem, config, x0),
    }
}

/// `max_{x ∈ X} ⟨F(x̂), x̂ − x⟩`. Small negative values are rounding noise and
/// are returned as computed.
pub fn gap<F: Operator>(problem: &ViProblem<F>, x_hat: &[f64]) -> Result<f64> {
    problem.set.check_member("gap point", x_hat)?;
    let f = problem.evaluate(x_hat)?;
    problem.gap_with_value(x_hat, &f)
}

pub fn is_epsilon_strong<F: Operator>(problem: &ViProblem<F>, x_hat: &[f64], eps: f64) -> Result<bool> {
    Ok(gap(problem, x_hat)? <= eps)
}

/// Sampled evidence for (or against) `candidate` being a weak solution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MintyCertificate {
    /// `max_s ⟨F(x_s), candidate − x_s⟩` over the sampled points.
    pub max_violation: f64,
    pub witness: Option<Vec<f64>>,
    pub samples: usize,
}

/// Draws `samples` uniform points of the feasible set (flat Dirichlet on the
/// simplex) and reports the largest `⟨F(x), candidate − x⟩`.
pub fn minty_certificate<F: Operator>(
    problem: &ViProblem<F>,
    candidate: &[f64],
    samples: usize,
    seed: u64,
) -> Result<MintyCertificate> {
    problem.set.check_member("minty candidate", candidate)?;
    if samples == 0 {
        return Err(Error::InvalidInput("minty_certificate needs at least one sample".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = f64::NEG_INFINITY;
    let mut witness = None;
    for _ in 0..samples {
        let x = problem.set.sample_uniform(&mut rng);
        let f = problem.evaluate(&x)?;
        let v: f64 = f.iter().zip(candidate.iter().zip(&x)).map(|(fj, (c, xj))| fj * (c - xj)).sum();
        if v > best {
            best = v;
            witness = Some(x);
        }
    }
    Ok(MintyCertificate { max_violation: best, witness, samples })
}

/// Empirical pathwise continuity modulus
/// `max_k ‖F(x_{k+½}) − F(x_k)‖ / √(2·D_h(x_{k+½}, x_k))`, skipping degenerate
/// steps. Returns 0 when no step qualifies.
pub fn pathwise_modulus(trace: &RunTrace, kernel: &Kernel) -> f64 {
    trace
        .records
        .iter()
        .filter_map(|r| pathwise_sample(r.operator_change, kernel.divergence_unchecked(&r.x_half, &r.x)))
        .fold(0.0, f64::max)
}

/// Least-squares slope of `log(running-min gap)` against `log(k + 1)`.
///
/// The fit stops at the first running-min gap at or below
/// [`RATE_GAP_FLOOR`]; at least 16 points must remain.
pub fn rate_slope(trace: &RunTrace) -> Result<f64> {
    let ts: Vec<f64> = trace.records.iter().map(|r| (r.k + 1) as f64).collect();
    let gaps: Vec<f64> = trace.records.iter().map(|r| r.gap).collect();
    rate_slope_from_gaps(&ts, &gaps)
}

/// [`rate_slope`] over raw `(t, gap_t)` samples with `t ≥ 1`.
pub fn rate_slope_from_gaps(ts: &[f64], gaps: &[f64]) -> Result<f64> {
    let mut pts = Vec::new();
    let mut m = f64::INFINITY;
    for (&t, &g) in ts.iter().zip(gaps) {
        m = m.min(g);
        if !(m > RATE_GAP_FLOOR) || !(t > 0.0) {
            break;
        }
        pts.push((t.ln(), m.ln()));
    }
    if pts.len() < 16 {
        return Err(Error::InsufficientData(format!(
            "rate_slope needs 16 positive running-min gaps, found {}",
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData("rate_slope: all samples share one abscissa".into()));
    }
    Ok(sxy / sxx)
}
