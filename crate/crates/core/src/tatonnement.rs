//! Price-adjustment processes as variational inequalities over prices.
//!
//! Prices live on the unit box `[0, 1]^n` (any balanced economy) or on the
//! unit simplex (economies that are variationally stable there). The operator
//! is `F = −Z`, so a mirror step raises prices of goods in excess demand.
//! Extratâtonnement runs the extragradient solver and tâtonnement the plain
//! gradient solver.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::economy::ExcessDemand;
use crate::error::{check_dims, Error, Result};
use crate::kernels::{FeasibleSet, Kernel};
use crate::linalg::{dot, norm_inf};
use crate::vi::{self, Method, MintyCertificate, Operator, RunTrace, SolverConfig, ViProblem};

/// Number of point pairs drawn by the automatic step-size probe.
pub const PROBE_PAIRS: usize = 32;

/// Probe points are drawn as `c + PROBE_SHRINK·(u − c)` for a uniform draw
/// `u` and the set center `c`.
pub const PROBE_SHRINK: f64 = 0.5;

/// Sample count of the post-hoc Minty report in simplex mode.
pub const MINTY_REPORT_SAMPLES: usize = 1000;

/// `F(p) = −Z(p)`.
#[derive(Debug, Clone, Copy)]
pub struct NegatedExcess<E>(pub E);

impl<E: ExcessDemand> Operator for NegatedExcess<E> {
    fn eval(&self, p: &[f64]) -> Result<Vec<f64>> {
        Ok(self.0.excess_demand(p)?.into_iter().map(|z| -z).collect())
    }
}

/// The VI `(space, −Z)`.
pub fn price_problem<E: ExcessDemand>(economy: E, space: FeasibleSet) -> Result<ViProblem<NegatedExcess<E>>> {
    check_dims("price space", economy.n_goods(), space.dim())?;
    let label = if space.is_simplex() { "-Z on simplex" } else { "-Z on box" };
    Ok(ViProblem::new(space, NegatedExcess(economy), label))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EquilibriumCertificate {
    /// `max(max_j Z_j(p̂), 0)`.
    pub eps_feasibility: f64,
    /// `|p̂·Z(p̂)|`.
    pub walras_residual: f64,
    #[serde(rename = "gap")]
    pub gap_value: f64,
}

impl EquilibriumCertificate {
    pub fn passes(&self, eps: f64) -> bool {
        self.eps_feasibility <= eps && self.walras_residual <= eps
    }
}

pub fn equilibrium_certificate<E: ExcessDemand>(
    economy: E,
    p_hat: &[f64],
    space: &FeasibleSet,
) -> Result<EquilibriumCertificate> {
    let problem = price_problem(economy, space.clone())?;
    space.check_member("certificate point", p_hat)?;
    let f = problem.evaluate(p_hat)?;
    let gap_value = problem.gap_with_value(p_hat, &f)?;
    Ok(EquilibriumCertificate {
        eps_feasibility: f.iter().fold(0.0f64, |m, v| m.max(-v)),
        walras_residual: dot(&f, p_hat).abs(),
        gap_value,
    })
}

/// `p / ‖p‖_∞`, the representative with largest price 1.
pub fn scale_to_equilibrium(p: &[f64]) -> Result<Vec<f64>> {
    let m = norm_inf(p);
    if !m.is_finite() {
        return Err(Error::InvalidInput("scale_to_equilibrium: non-finite price".into()));
    }
    if m == 0.0 {
        return Err(Error::DegenerateSolution("the zero price vector is the trivial solution".into()));
    }
    Ok(p.iter().map(|v| v / m).collect())
}

/// `1 / (2√2·n·ε_e·B)`.
pub fn recommended_step_size(n_goods: usize, elasticity: f64, demand_bound: f64) -> Result<f64> {
    if n_goods == 0
        || !(elasticity > 0.0)
        || !(demand_bound > 0.0)
        || !elasticity.is_finite()
        || !demand_bound.is_finite()
    {
        return Err(Error::InvalidInput(format!(
            "recommended_step_size needs positive arguments, got n = {n_goods}, elasticity = {elasticity}, bound = {demand_bound}"
        )));
    }
    Ok(1.0 / (2.0 * std::f64::consts::SQRT_2 * n_goods as f64 * elasticity * demand_bound))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSize {
    Fixed(f64),
    /// Probe the continuity modulus and enable step backoff.
    Auto,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TatonnementConfig {
    pub kernel: Kernel,
    pub step: StepSize,
    pub horizon: usize,
    pub record_every: usize,
    pub stop_gap: Option<f64>,
    pub probe_seed: u64,
}

impl TatonnementConfig {
    pub fn new(kernel: Kernel, step: StepSize, horizon: usize) -> Self {
        TatonnementConfig { kernel, step, horizon, record_every: 1, stop_gap: None, probe_seed: 0 }
    }

    pub fn with_stop_gap(mut self, eps: f64) -> Self {
        self.stop_gap = Some(eps);
        self
    }

    pub fn with_record_every(mut self, every: usize) -> Self {
        self.record_every = every;
        self
    }
}

/// Estimate of the continuity modulus of `−Z` from [`PROBE_PAIRS`] pairs of
/// interior points, and the step `1/(2√2·L̂)` it implies (1 when `L̂ = 0`).
pub fn probe_step_size<E: ExcessDemand>(
    economy: E,
    space: &FeasibleSet,
    kernel: &Kernel,
    seed: u64,
) -> Result<(f64, f64)> {
    let problem = price_problem(economy, space.clone())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let center = space.center();
    let draw = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        let u = space.sample_uniform(rng);
        center.iter().zip(&u).map(|(c, x)| c + PROBE_SHRINK * (x - c)).collect()
    };
    let mut l_hat = 0.0f64;
    for _ in 0..PROBE_PAIRS {
        let x = draw(&mut rng);
        let y = draw(&mut rng);
        let d = kernel.bregman_divergence(&y, &x)?;
        if d <= vi::DEGENERATE_STEP {
            continue;
        }
        let (fx, fy) = (problem.evaluate(&x)?, problem.evaluate(&y)?);
        l_hat = l_hat.max(crate::linalg::dist2(&fx, &fy) / (2.0 * d).sqrt());
    }
    let eta = if l_hat > 0.0 { 1.0 / (2.0 * std::f64::consts::SQRT_2 * l_hat) } else { 1.0 };
    Ok((eta, l_hat))
}

/// A finished price-adjustment run.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceRun {
    pub label: String,
    pub space: FeasibleSet,
    pub trace: RunTrace,
    /// Step size the run started with (after probing, before backoff).
    pub eta: f64,
    pub probe_modulus: Option<f64>,
    pub certificate: EquilibriumCertificate,
    pub best_prices: Vec<f64>,
    /// Box runs: `best / ‖best‖_∞`; simplex runs: the best iterate itself.
    /// Absent when the best iterate is the zero vector.
    pub normalized_equilibrium: Option<Vec<f64>>,
    pub last_prices: Vec<f64>,
    /// Simplex runs only: sampled Minty check at the best iterate.
    pub minty: Option<MintyCertificate>,
}

impl PriceRun {
    pub fn converged(&self, eps: f64) -> bool {
        self.certificate.passes(eps)
    }

    /// First recorded iteration whose gap point certifies `eps`.
    pub fn iters_to_eps(&self, eps: f64) -> Option<usize> {
        self.trace.records.iter().find(|r| r.sign_violation <= eps && r.complementarity <= eps).map(|r| r.k + 1)
    }

    pub fn pathwise_l_max(&self) -> f64 {
        vi::pathwise_modulus(&self.trace, &self.trace.kernel)
    }
}

fn run<E: ExcessDemand + Copy>(
    method: Method,
    economy: E,
    space: &FeasibleSet,
    config: &TatonnementConfig,
    p0: &[f64],
) -> Result<PriceRun> {
    let problem = price_problem(economy, space.clone())?;
    let (eta, probe_modulus, backoff) = match config.step {
        StepSize::Fixed(eta) => (eta, None, false),
        StepSize::Auto => {
            let (eta, l) = probe_step_size(economy, space, &config.kernel, config.probe_seed)?;
            (eta, Some(l), true)
        }
    };
    let mut solver = SolverConfig::new(eta, config.horizon, config.kernel)
        .with_record_every(config.record_every)
        .with_backoff(backoff);
    solver.stop_gap = config.stop_gap;
    let trace = vi::solve(method, &problem, &solver, p0)?;
    let best_prices = trace.best_iterate.clone();
    let certificate = equilibrium_certificate(economy, &best_prices, space)?;
    let normalized_equilibrium =
        if space.is_simplex() { Some(best_prices.clone()) } else { scale_to_equilibrium(&best_prices).ok() };
    let minty = if space.is_simplex() {
        Some(vi::minty_certificate(&problem, &best_prices, MINTY_REPORT_SAMPLES, config.probe_seed)?)
    } else {
        None
    };
    let label = match method {
        Method::Extragradient => "mirror extratatonnement",
        Method::Gradient => "mirror tatonnement",
    };
    Ok(PriceRun {
        label: label.into(),
        space: space.clone(),
        last_prices: trace.last_iterate.clone(),
        trace,
        eta,
        probe_modulus,
        certificate,
        best_prices,
        normalized_equilibrium,
        minty,
    })
}

/// Extragradient price adjustment with `F = −Z`.
pub fn mirror_extratatonnement<E: ExcessDemand + Copy>(
    economy: E,
    space: &FeasibleSet,
    config: &TatonnementConfig,
    p0: &[f64],
) -> Result<PriceRun> {
    run(Method::Extragradient, economy, space, config, p0)
}

/// Plain mirror tâtonnement `p_{k+1} = M(p_k, −Z(p_k))`.
pub fn mirror_tatonnement<E: ExcessDemand + Copy>(
    economy: E,
    space: &FeasibleSet,
    config: &TatonnementConfig,
    p0: &[f64],
) -> Result<PriceRun> {
    run(Method::Gradient, economy, space, config, p0)
}

/// Dispatches on `method`.
pub fn price_adjustment<E: ExcessDemand + Copy>(
    method: Method,
    economy: E,
    space: &FeasibleSet,
    config: &TatonnementConfig,
    p0: &[f64],
) -> Result<PriceRun> {
    run(method, economy, space, config, p0)
}
