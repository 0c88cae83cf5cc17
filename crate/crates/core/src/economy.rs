//! Excess-demand models and diagnostics.
//!
//! [`ScarfEconomy`] is the fixed three-good example. [`ExchangeEconomy`]
//! aggregates closed-form Marshallian demands of Cobb-Douglas, Leontief and
//! CES consumers, capped per good at `κ·s_j` and evaluated at prices floored
//! at `ν_p`.
//!
//! CES demand with `σ = 1/(1 − ρ)`:
//!
//! ```text
//! x_j = b · v_j^σ p_j^(−σ) / Σ_k v_k^σ p_k^(1−σ)
//! ```
//!
//! is evaluated in log space so that `ρ` down to about `−1000` stays finite.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dims, check_finite, Error, Result};
use crate::linalg::{dot, norm2, norm_inf};

pub const DEFAULT_PRICE_FLOOR: f64 = 1e-8;
pub const DEFAULT_CAP_FACTOR: f64 = 1.0;

/// Largest resolution accepted by [`demand_oracle`].
pub const MAX_ORACLE_RESOLUTION: usize = 401;

/// Range of the per-coordinate uniform price draws used by the sampled
/// diagnostics.
pub const DIAGNOSTIC_PRICE_RANGE: (f64, f64) = (0.05, 1.0);

/// An excess-demand function `Z` over nonnegative prices.
pub trait ExcessDemand {
    fn n_goods(&self) -> usize;
    fn excess_demand(&self, p: &[f64]) -> Result<Vec<f64>>;
}

impl<T: ExcessDemand + ?Sized> ExcessDemand for &T {
    fn n_goods(&self) -> usize {
        (**self).n_goods()
    }
    fn excess_demand(&self, p: &[f64]) -> Result<Vec<f64>> {
        (**self).excess_demand(p)
    }
}

/// An economy whose excess demand splits as `Z = d − s`.
pub trait ElasticEconomy: ExcessDemand {
    fn aggregate_demand(&self, p: &[f64]) -> Result<Vec<f64>>;
    fn aggregate_supply(&self, p: &[f64]) -> Result<Vec<f64>>;
}

/// Excess demand given by a closure; handy for synthetic economies.
#[derive(Clone)]
pub struct FnEconomy<F> {
    pub n: usize,
    pub f: F,
}

impl<F: Fn(&[f64]) -> Vec<f64>> ExcessDemand for FnEconomy<F> {
    fn n_goods(&self) -> usize {
        self.n
    }
    fn excess_demand(&self, p: &[f64]) -> Result<Vec<f64>> {
        check_dims("excess_demand", self.n, p.len())?;
        Ok((self.f)(p))
    }
}

/// `Z ≡ 0` on `n` goods.
pub fn null_economy(n: usize) -> FnEconomy<impl Fn(&[f64]) -> Vec<f64> + Clone> {
    FnEconomy { n, f: move |_: &[f64]| vec![0.0; n] }
}

/// The three-good Scarf economy, with equilibrium prices proportional to `(1, 1, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScarfEconomy {
    pub price_floor: f64,
}

impl Default for ScarfEconomy {
    fn default() -> Self {
        ScarfEconomy { price_floor: DEFAULT_PRICE_FLOOR }
    }
}

impl ScarfEconomy {
    pub fn new() -> Self {
        Self::default()
    }
}

impl ExcessDemand for ScarfEconomy {
    fn n_goods(&self) -> usize {
        3
    }

    fn excess_demand(&self, p: &[f64]) -> Result<Vec<f64>> {
        check_dims("scarf_excess_demand", 3, p.len())?;
        check_finite("scarf_excess_demand", p)?;
        let q: Vec<f64> = p.iter().map(|v| v.max(self.price_floor)).collect();
        Ok(scarf_formula(q[0], q[1], q[2]))
    }
}

fn scarf_formula(p1: f64, p2: f64, p3: f64) -> Vec<f64> {
    let a = p1 / (p1 + p2);
    let b = p2 / (p2 + p3);
    let c = p3 / (p1 + p3);
    vec![a + c - 1.0, a + b - 1.0, b + c - 1.0]
}

/// Scarf excess demand with the default price floor.
pub fn scarf_excess_demand(p: &[f64]) -> Result<Vec<f64>> {
    ScarfEconomy::default().excess_demand(p)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "utility", rename_all = "snake_case")]
pub enum Utility {
    /// `Π x_j^(v_j / Σ v)`.
    CobbDouglas,
    /// `min_j x_j / v_j`.
    Leontief,
    /// `(Σ v_j x_j^ρ)^(1/ρ)` with `ρ < 1`, `ρ ≠ 0`.
    Ces { rho: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Consumer {
    pub utility: Utility,
    pub valuations: Vec<f64>,
    pub endowment: Vec<f64>,
}

impl Consumer {
    pub fn new(utility: Utility, valuations: Vec<f64>, endowment: Vec<f64>) -> Result<Self> {
        check_dims("consumer endowment", valuations.len(), endowment.len())?;
        if valuations.is_empty() {
            return Err(Error::InvalidInput("consumer needs at least one good".into()));
        }
        check_finite("consumer valuations", &valuations)?;
        check_finite("consumer endowment", &endowment)?;
        if let Some(j) = valuations.iter().position(|&v| v <= 0.0) {
            return Err(Error::InvalidInput(format!("valuation {j} must be positive, got {}", valuations[j])));
        }
        if let Some(j) = endowment.iter().position(|&e| e < 0.0) {
            return Err(Error::InvalidInput(format!("endowment {j} must be nonnegative, got {}", endowment[j])));
        }
        if let Utility::Ces { rho } = utility {
            if !(rho.is_finite() && rho < 1.0 && rho != 0.0) {
                return Err(Error::InvalidInput(format!("CES rho must be finite, below 1 and nonzero, got {rho}")));
            }
        }
        Ok(Consumer { utility, valuations, endowment })
    }

    pub fn n_goods(&self) -> usize {
        self.valuations.len()
    }

    /// Utility of bundle `x`, as a monotone transform for CES and
    /// Cobb-Douglas (log scale). Used only to rank bundles.
    pub fn utility_value(&self, x: &[f64]) -> f64 {
        let v = &self.valuations;
        match self.utility {
            Utility::CobbDouglas => {
                let total: f64 = v.iter().sum();
                v.iter().zip(x).map(|(vj, xj)| vj / total * xj.ln()).sum()
            }
            Utility::Leontief => x.iter().zip(v).map(|(xj, vj)| xj / vj).fold(f64::INFINITY, f64::min),
            Utility::Ces { rho } => {
                let terms: Vec<f64> = v.iter().zip(x).map(|(vj, xj)| vj.ln() + rho * xj.ln()).collect();
                log_sum_exp(&terms) / rho
            }
        }
    }
}

fn log_sum_exp(terms: &[f64]) -> f64 {
    let m = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + terms.iter().map(|t| (t - m).exp()).sum::<f64>().ln()
}

/// Uncapped Marshallian demand of `consumer` at prices `p` with budget `p·e`.
pub fn consumer_demand(consumer: &Consumer, p: &[f64]) -> Result<Vec<f64>> {
    check_dims("consumer_demand", consumer.n_goods(), p.len())?;
    let budget = dot(p, &consumer.endowment);
    demand_with_budget(consumer, p, budget)
}

/// Uncapped Marshallian demand for an explicit budget.
pub fn demand_with_budget(consumer: &Consumer, p: &[f64], budget: f64) -> Result<Vec<f64>> {
    check_dims("consumer_demand", consumer.n_goods(), p.len())?;
    check_finite("consumer_demand prices", p)?;
    if let Some(j) = p.iter().position(|&v| v <= 0.0) {
        return Err(Error::InvalidInput(format!("consumer_demand: price {j} must be positive, got {}", p[j])));
    }
    if !(budget.is_finite() && budget >= 0.0) {
        return Err(Error::InvalidInput(format!("consumer_demand: budget must be nonnegative, got {budget}")));
    }
    let n = p.len();
    if budget == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let v = &consumer.valuations;
    let x: Vec<f64> = match consumer.utility {
        Utility::CobbDouglas => {
            let total: f64 = v.iter().sum();
            v.iter().zip(p).map(|(vj, pj)| vj / total * budget / pj).collect()
        }
        Utility::Leontief => {
            let pv = dot(p, v);
            v.iter().map(|vj| vj * budget / pv).collect()
        }
        Utility::Ces { rho } => {
            let sigma = 1.0 / (1.0 - rho);
            let lv: Vec<f64> = v.iter().map(|x| x.ln()).collect();
            let lp: Vec<f64> = p.iter().map(|x| x.ln()).collect();
            let denom: Vec<f64> = (0..n).map(|k| sigma * lv[k] + (1.0 - sigma) * lp[k]).collect();
            let ld = log_sum_exp(&denom);
            let lb = budget.ln();
            (0..n).map(|j| (lb + sigma * lv[j] - sigma * lp[j] - ld).exp()).collect()
        }
    };
    if let Some(j) = x.iter().position(|v| !v.is_finite()) {
        return Err(Error::Evaluation(format!("demand for good {j} overflowed ({})", x[j])));
    }
    Ok(x)
}

/// Brute-force demand: best budget-exhausting bundle on a share grid.
///
/// Budget shares range over the simplex grid `{i / (resolution − 1)}` and are
/// converted to quantities `x_j = share_j · b / p_j`. The first grid point
/// attaining the best utility wins.
pub fn demand_oracle(consumer: &Consumer, p: &[f64], resolution: usize) -> Result<Vec<f64>> {
    let n = consumer.n_goods();
    check_dims("demand_oracle", n, p.len())?;
    if n > 3 {
        return Err(Error::Unsupported(format!("demand_oracle supports at most 3 goods, got {n}")));
    }
    if resolution > MAX_ORACLE_RESOLUTION {
        return Err(Error::Unsupported(format!(
            "demand_oracle resolution is capped at {MAX_ORACLE_RESOLUTION}, got {resolution}"
        )));
    }
    if resolution < 2 {
        return Err(Error::InvalidInput("demand_oracle resolution must be at least 2".into()));
    }
    let budget = dot(p, &consumer.endowment);
    if budget <= 0.0 {
        return Ok(vec![0.0; n]);
    }
    let steps = resolution - 1;
    let h = 1.0 / steps as f64;
    let mut best = f64::NEG_INFINITY;
    let mut best_x = vec![0.0; n];
    let mut consider = |shares: &[f64]| {
        let x: Vec<f64> = shares.iter().zip(p).map(|(s, pj)| s * budget / pj).collect();
        let u = consumer.utility_value(&x);
        if u > best {
            best = u;
            best_x = x;
        }
    };
    match n {
        1 => consider(&[1.0]),
        2 => {
            for i in 0..=steps {
                let s = i as f64 * h;
                consider(&[s, 1.0 - s]);
            }
        }
        _ => {
            for i in 0..=steps {
                for j in 0..=(steps - i) {
                    let (a, b) = (i as f64 * h, j as f64 * h);
                    consider(&[a, b, (1.0 - a - b).max(0.0)]);
                }
            }
        }
    }
    Ok(best_x)
}

/// An Arrow-Debreu exchange economy with capped closed-form demands.
#[derive(Debug, Clone, PartialEq)]
pub struct ExchangeEconomy {
    consumers: Vec<Consumer>,
    n_goods: usize,
    supply: Vec<f64>,
    cap_factor: f64,
    price_floor: f64,
}

impl ExchangeEconomy {
    /// Economy with the default cap `κ = 1` and price floor `1e-8`.
    pub fn new(consumers: Vec<Consumer>) -> Result<Self> {
        Self::with_options(consumers, DEFAULT_CAP_FACTOR, DEFAULT_PRICE_FLOOR)
    }

    /// `cap_factor = f64::INFINITY` disables the demand cap.
    pub fn with_options(consumers: Vec<Consumer>, cap_factor: f64, price_floor: f64) -> Result<Self> {
        let Some(first) = consumers.first() else {
            return Err(Error::InvalidInput("economy needs at least one consumer".into()));
        };
        let n = first.n_goods();
        for (i, c) in consumers.iter().enumerate() {
            check_dims(&format!("consumer {i}"), n, c.n_goods())?;
        }
        if !(cap_factor >= 1.0) {
            return Err(Error::InvalidInput(format!("demand cap factor must be at least 1, got {cap_factor}")));
        }
        if !(price_floor > 0.0 && price_floor.is_finite()) {
            return Err(Error::InvalidInput(format!("price floor must be positive, got {price_floor}")));
        }
        let mut supply = vec![0.0; n];
        for c in &consumers {
            for (s, e) in supply.iter_mut().zip(&c.endowment) {
                *s += e;
            }
        }
        if let Some(j) = supply.iter().position(|&s| s <= 0.0) {
            return Err(Error::InvalidInput(format!("aggregate supply of good {j} is zero")));
        }
        Ok(ExchangeEconomy { consumers, n_goods: n, supply, cap_factor, price_floor })
    }

    /// Same consumers with the demand cap removed.
    pub fn uncapped(&self) -> Self {
        ExchangeEconomy { cap_factor: f64::INFINITY, ..self.clone() }
    }

    pub fn consumers(&self) -> &[Consumer] {
        &self.consumers
    }

    pub fn supply(&self) -> &[f64] {
        &self.supply
    }

    pub fn cap_factor(&self) -> f64 {
        self.cap_factor
    }

    pub fn price_floor(&self) -> f64 {
        self.price_floor
    }

    fn floored(&self, p: &[f64]) -> Result<Vec<f64>> {
        check_dims("excess_demand", self.n_goods, p.len())?;
        check_finite("excess_demand", p)?;
        Ok(p.iter().map(|v| v.max(self.price_floor)).collect())
    }

    /// Capped demand of consumer `i` at floored prices.
    pub fn consumer_demand(&self, i: usize, p: &[f64]) -> Result<Vec<f64>> {
        let q = self.floored(p)?;
        self.capped_demand(&self.consumers[i], &q)
    }

    fn capped_demand(&self, c: &Consumer, q: &[f64]) -> Result<Vec<f64>> {
        let mut x = consumer_demand(c, q)?;
        for (xj, sj) in x.iter_mut().zip(&self.supply) {
            *xj = xj.min(self.cap_factor * sj);
        }
        Ok(x)
    }

    pub fn to_spec(&self) -> EconomySpec {
        EconomySpec {
            n_goods: self.n_goods,
            consumers: self
                .consumers
                .iter()
                .map(|c| ConsumerSpec {
                    utility: c.utility,
                    valuations: c.valuations.clone(),
                    endowment: c.endowment.clone(),
                })
                .collect(),
            demand_cap_factor: self.cap_factor.is_finite().then_some(self.cap_factor),
            price_floor: Some(self.price_floor),
        }
    }
}

impl ExcessDemand for ExchangeEconomy {
    fn n_goods(&self) -> usize {
        self.n_goods
    }

    fn excess_demand(&self, p: &[f64]) -> Result<Vec<f64>> {
        let mut z = self.aggregate_demand(p)?;
        for (zj, sj) in z.iter_mut().zip(&self.supply) {
            *zj -= sj;
        }
        Ok(z)
    }
}

impl ElasticEconomy for ExchangeEconomy {
    fn aggregate_demand(&self, p: &[f64]) -> Result<Vec<f64>> {
        let q = self.floored(p)?;
        let mut d = vec![0.0; self.n_goods];
        for c in &self.consumers {
            for (dj, xj) in d.iter_mut().zip(self.capped_demand(c, &q)?) {
                *dj += xj;
            }
        }
        Ok(d)
    }

    fn aggregate_supply(&self, _p: &[f64]) -> Result<Vec<f64>> {
        Ok(self.supply.clone())
    }
}

/// JSON form of a consumer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsumerSpec {
    #[serde(flatten)]
    pub utility: Utility,
    pub valuations: Vec<f64>,
    pub endowment: Vec<f64>,
}

/// JSON form of an exchange economy. A missing `demand_cap_factor` means the
/// default cap of 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EconomySpec {
    pub n_goods: usize,
    pub consumers: Vec<ConsumerSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub demand_cap_factor: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub price_floor: Option<f64>,
}

impl EconomySpec {
    pub fn build(&self) -> Result<ExchangeEconomy> {
        let consumers = self
            .consumers
            .iter()
            .enumerate()
            .map(|(i, c)| {
                Consumer::new(c.utility, c.valuations.clone(), c.endowment.clone())
                    .map_err(|e| Error::InvalidInput(format!("consumer {i}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some((i, c)) = consumers.iter().enumerate().find(|(_, c)| c.n_goods() != self.n_goods) {
            return Err(Error::InvalidInput(format!(
                "consumer {i} has {} goods, economy declares {}",
                c.n_goods(),
                self.n_goods
            )));
        }
        ExchangeEconomy::with_options(
            consumers,
            self.demand_cap_factor.unwrap_or(DEFAULT_CAP_FACTOR),
            self.price_floor.unwrap_or(DEFAULT_PRICE_FLOOR),
        )
    }
}

/// `‖Z(λp) − Z(p)‖_∞`.
pub fn check_homogeneity<E: ExcessDemand + ?Sized>(economy: &E, p: &[f64], lambda: f64) -> Result<f64> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidInput(format!("lambda must be positive, got {lambda}")));
    }
    let z = economy.excess_demand(p)?;
    let scaled: Vec<f64> = p.iter().map(|v| v * lambda).collect();
    let zl = economy.excess_demand(&scaled)?;
    Ok(z.iter().zip(&zl).fold(0.0, |m, (a, b)| m.max((a - b).abs())))
}

/// `|p·Z(p)|`.
pub fn check_walras<E: ExcessDemand + ?Sized>(economy: &E, p: &[f64]) -> Result<f64> {
    Ok(dot(p, &economy.excess_demand(p)?).abs())
}

fn diagnostic_prices(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let (lo, hi) = DIAGNOSTIC_PRICE_RANGE;
    (0..n).map(|_| rng.random_range(lo..hi)).collect()
}

/// Weak gross substitutes: raise one price by a factor in `[1.01, 2)` and
/// count goods `j ≠ k` whose excess demand falls by more than `1e-9`.
pub fn check_wgs_sample<E: ExcessDemand + ?Sized>(economy: &E, pairs: usize, seed: u64) -> Result<usize> {
    let n = economy.n_goods();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violations = 0;
    for _ in 0..pairs {
        let p = diagnostic_prices(&mut rng, n);
        let k = rng.random_range(0..n);
        let mut q = p.clone();
        q[k] *= 1.0 + rng.random_range(0.01..1.0);
        let (zp, zq) = (economy.excess_demand(&p)?, economy.excess_demand(&q)?);
        violations += (0..n).filter(|&j| j != k && zq[j] < zp[j] - 1e-9).count();
    }
    Ok(violations)
}

/// Weak axiom of revealed preference on sampled price pairs.
pub fn check_warp_sample<E: ExcessDemand + ?Sized>(economy: &E, pairs: usize, seed: u64) -> Result<usize> {
    let n = economy.n_goods();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violations = 0;
    for _ in 0..pairs {
        let p = diagnostic_prices(&mut rng, n);
        let q = diagnostic_prices(&mut rng, n);
        let (zp, zq) = (economy.excess_demand(&p)?, economy.excess_demand(&q)?);
        let differ = zp.iter().zip(&zq).any(|(a, b)| (a - b).abs() > 1e-12);
        if differ && dot(&zq, &p) <= dot(&zq, &q) && dot(&zp, &q) <= dot(&zp, &p) {
            violations += 1;
        }
    }
    Ok(violations)
}

/// Law of supply and demand: count pairs with `⟨Z(q) − Z(p), q − p⟩ > 1e-9`.
pub fn check_lsd_sample<E: ExcessDemand + ?Sized>(economy: &E, pairs: usize, seed: u64) -> Result<usize> {
    let n = economy.n_goods();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violations = 0;
    for _ in 0..pairs {
        let p = diagnostic_prices(&mut rng, n);
        let q = diagnostic_prices(&mut rng, n);
        let (zp, zq) = (economy.excess_demand(&p)?, economy.excess_demand(&q)?);
        let s: f64 = (0..n).map(|j| (zq[j] - zp[j]) * (q[j] - p[j])).sum();
        if s > 1e-9 {
            violations += 1;
        }
    }
    Ok(violations)
}

/// Perturbation sizes used by [`elasticity_bound_estimate`].
pub const ELASTICITY_DELTAS: [f64; 2] = [0.01, 0.1];

/// Largest sampled two-point elasticity `|Δf_j / f_j| / δ` of aggregate
/// demand and supply under single-price moves `p_k → p_k(1 ± δ)`.
/// Goods with zero baseline value are skipped.
pub fn elasticity_bound_estimate<E: ElasticEconomy + ?Sized>(economy: &E, pairs: usize, seed: u64) -> Result<f64> {
    let n = economy.n_goods();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = 0.0f64;
    for _ in 0..pairs {
        let p = diagnostic_prices(&mut rng, n);
        let (d0, s0) = (economy.aggregate_demand(&p)?, economy.aggregate_supply(&p)?);
        for k in 0..n {
            for delta in ELASTICITY_DELTAS {
                for sign in [1.0, -1.0] {
                    let mut q = p.clone();
                    q[k] *= 1.0 + sign * delta;
                    let (d1, s1) = (economy.aggregate_demand(&q)?, economy.aggregate_supply(&q)?);
                    for (base, moved) in [(&d0, &d1), (&s0, &s1)] {
                        for j in 0..n {
                            if base[j] != 0.0 {
                                best = best.max(((moved[j] - base[j]) / base[j]).abs() / delta);
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(best)
}

/// Per-point continuity modulus `ε·(‖d(p)‖ + ‖s(p)‖) / ‖p‖_∞` at a simplex
/// point; valid for every 1-strongly-convex kernel.
pub fn bregman_continuity_bound<E: ElasticEconomy + ?Sized>(economy: &E, p: &[f64], elasticity: f64) -> Result<f64> {
    check_dims("bregman_continuity_bound", economy.n_goods(), p.len())?;
    check_finite("bregman_continuity_bound", p)?;
    if p.iter().any(|&v| v < 0.0) || (p.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidInput("bregman_continuity_bound: p must lie on the simplex".into()));
    }
    if !(elasticity >= 0.0 && elasticity.is_finite()) {
        return Err(Error::InvalidInput(format!("elasticity must be nonnegative, got {elasticity}")));
    }
    let d = economy.aggregate_demand(p)?;
    let s = economy.aggregate_supply(p)?;
    Ok(elasticity * (norm2(&d) + norm2(&s)) / norm_inf(p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn cd(v: Vec<f64>, e: Vec<f64>) -> Consumer {
        Consumer::new(Utility::CobbDouglas, v, e).unwrap()
    }

    #[test]
    fn scarf_examples() {
        assert_eq!(scarf_excess_demand(&[1.0, 1.0, 1.0]).unwrap(), vec![0.0, 0.0, 0.0]);
        assert_eq!(scarf_excess_demand(&[2.0, 2.0, 2.0]).unwrap(), vec![0.0, 0.0, 0.0]);
        let z = scarf_excess_demand(&[1.0, 1.0, 2.0]).unwrap();
        assert_abs_diff_eq!(z[0], 1.0 / 6.0, epsilon = 1e-15);
        assert_abs_diff_eq!(z[1], -1.0 / 6.0, epsilon = 1e-15);
        assert_abs_diff_eq!(z[2], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(dot(&z, &[1.0, 1.0, 2.0]), 0.0, epsilon = 1e-15);
        assert!(scarf_excess_demand(&[f64::NAN, 1.0, 1.0]).is_err());
        assert!(scarf_excess_demand(&[0.0, 0.0, 0.0]).unwrap().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn closed_form_demand_examples() {
        let c = cd(vec![1.0, 1.0], vec![1.0, 1.0]);
        assert_eq!(consumer_demand(&c, &[1.0, 1.0]).unwrap(), vec![1.0, 1.0]);

        let l = Consumer::new(Utility::Leontief, vec![1.0, 2.0], vec![3.0, 0.0]).unwrap();
        assert_eq!(consumer_demand(&l, &[1.0, 1.0]).unwrap(), vec![1.0, 2.0]);

        let ces = Consumer::new(Utility::Ces { rho: 0.5 }, vec![1.0, 1.0], vec![1.0, 1.0]).unwrap();
        let x = consumer_demand(&ces, &[1.0, 4.0]).unwrap();
        assert_abs_diff_eq!(x[0], 4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(x[1], 0.25, epsilon = 1e-12);

        let broke = cd(vec![1.0, 1.0], vec![0.0, 0.0]);
        assert_eq!(consumer_demand(&broke, &[1.0, 1.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn extreme_ces_stays_finite() {
        for rho in [-1000.0, -1.0, 0.6, 0.9] {
            let c = Consumer::new(Utility::Ces { rho }, vec![0.3, 1e-6, 0.9], vec![1.0, 2.0, 3.0]).unwrap();
            let p = [1e-8, 0.5, 1.0];
            let x = consumer_demand(&c, &p).unwrap();
            assert!(x.iter().all(|v| v.is_finite() && *v >= 0.0), "{rho}: {x:?}");
            assert_abs_diff_eq!(dot(&x, &p), dot(&c.endowment, &p), epsilon = 1e-9);
        }
    }

    #[test]
    fn oracle_examples() {
        let c = cd(vec![1.0, 1.0], vec![1.0, 1.0]);
        let x = demand_oracle(&c, &[1.0, 1.0], 201).unwrap();
        assert!((x[0] - 1.0).abs() <= 0.01 && (x[1] - 1.0).abs() <= 0.01);

        let l = Consumer::new(Utility::Leontief, vec![1.0, 2.0], vec![3.0, 0.0]).unwrap();
        let x = demand_oracle(&l, &[1.0, 1.0], 301).unwrap();
        assert!((x[0] - 1.0).abs() <= 3.0 / 300.0 && (x[1] - 2.0).abs() <= 3.0 / 300.0, "{x:?}");

        let ces = Consumer::new(Utility::Ces { rho: 0.5 }, vec![1.0, 1.0], vec![1.0, 1.0]).unwrap();
        let x = demand_oracle(&ces, &[1.0, 4.0], 401).unwrap();
        assert!((x[0] - 4.0).abs() <= 0.05 && (x[1] - 0.25).abs() <= 0.05, "{x:?}");

        let big = cd(vec![1.0; 4], vec![1.0; 4]);
        assert!(matches!(demand_oracle(&big, &[1.0; 4], 11), Err(Error::Unsupported(_))));
        assert!(matches!(demand_oracle(&c, &[1.0; 2], 402), Err(Error::Unsupported(_))));
    }

    #[test]
    fn excess_demand_examples() {
        let single = ExchangeEconomy::new(vec![cd(vec![1.0, 1.0], vec![1.0, 1.0])]).unwrap();
        assert_eq!(single.excess_demand(&[1.0, 1.0]).unwrap(), vec![0.0, 0.0]);

        let pair =
            ExchangeEconomy::new(vec![cd(vec![1.0, 1.0], vec![2.0, 0.0]), cd(vec![1.0, 1.0], vec![0.0, 2.0])]).unwrap();
        assert_eq!(pair.excess_demand(&[1.0, 1.0]).unwrap(), vec![0.0, 0.0]);
        assert!(check_homogeneity(&pair, &[0.3, 0.8], 2.0).unwrap() <= 1e-10);
    }

    #[test]
    fn cap_breaks_walras_and_is_reported() {
        let a = cd(vec![1.0, 1.0], vec![1.0, 0.0]);
        let b = cd(vec![1.0, 1.0], vec![0.0, 1.0]);
        let capped = ExchangeEconomy::new(vec![a, b]).unwrap();
        let p = [1.0, 1e-3];
        // consumer a demands 500 units of good 2, capped at supply 1
        assert!(check_walras(&capped, &p).unwrap() > 1e-3);
        assert!(check_walras(&capped.uncapped(), &p).unwrap() <= 1e-9);
    }

    #[test]
    fn scarf_diagnostics() {
        let s = ScarfEconomy::new();
        assert!(check_homogeneity(&s, &[0.2, 0.5, 0.9], 3.0).unwrap() <= 1e-12);
        assert!(check_walras(&s, &[0.2, 0.5, 0.9]).unwrap() <= 1e-12);
    }

    #[test]
    fn cobb_douglas_is_gross_substitutes() {
        let e = ExchangeEconomy::new(vec![cd(vec![0.3, 0.5, 0.2], vec![1.0, 2.0, 0.5])]).unwrap();
        assert_eq!(check_wgs_sample(&e, 500, 3).unwrap(), 0);
    }

    #[test]
    fn complements_violate_gross_substitutes() {
        let c = |e: Vec<f64>| Consumer::new(Utility::Ces { rho: -20.0 }, vec![1.0, 0.5, 0.8], e).unwrap();
        let e =
            ExchangeEconomy::new(vec![c(vec![1.0, 0.0, 0.0]), c(vec![0.0, 1.0, 0.0]), c(vec![0.0, 0.0, 1.0])]).unwrap();
        assert!(check_wgs_sample(&e, 500, 3).unwrap() > 0);
    }

    struct Constant(Vec<f64>);

    impl ExcessDemand for Constant {
        fn n_goods(&self) -> usize {
            self.0.len()
        }
        fn excess_demand(&self, _: &[f64]) -> Result<Vec<f64>> {
            Ok(vec![0.0; self.0.len()])
        }
    }

    impl ElasticEconomy for Constant {
        fn aggregate_demand(&self, _: &[f64]) -> Result<Vec<f64>> {
            Ok(self.0.clone())
        }
        fn aggregate_supply(&self, _: &[f64]) -> Result<Vec<f64>> {
            Ok(self.0.clone())
        }
    }

    #[test]
    fn elasticity_examples() {
        assert_eq!(elasticity_bound_estimate(&Constant(vec![1.0, 2.0]), 20, 1).unwrap(), 0.0);

        // x ∝ 1/p moved by +δ has elasticity 1/(1+δ); by −δ, 1/(1−δ)
        let e = ExchangeEconomy::with_options(vec![cd(vec![1.0, 1.0], vec![1.0, 1.0])], f64::INFINITY, 1e-8).unwrap();
        let eps = elasticity_bound_estimate(&e, 50, 2).unwrap();
        assert!(eps >= 0.9 && eps.is_finite(), "{eps}");

        let c = Constant(vec![1.0, 1.0, 1.0]);
        let third = [1.0 / 3.0; 3];
        let bound = bregman_continuity_bound(&c, &third, 0.5).unwrap();
        assert_abs_diff_eq!(bound, 3.0 * 0.5 * 2.0 * 3f64.sqrt(), epsilon = 1e-12);
        assert!(bregman_continuity_bound(&c, &[0.5, 0.5, 0.5], 0.5).is_err());
    }

    #[test]
    fn economy_spec_round_trip() {
        let json = r#"{"n_goods": 2, "consumers": [
            {"utility": "ces", "rho": 0.5, "valuations": [1, 1], "endowment": [1, 0]},
            {"utility": "leontief", "valuations": [1, 2], "endowment": [0, 1]},
            {"utility": "cobb_douglas", "valuations": [1, 1], "endowment": [1, 1]}
        ], "price_floor": 1e-9}"#;
        let spec: EconomySpec = serde_json::from_str(json).unwrap();
        let e = spec.build().unwrap();
        assert_eq!(e.cap_factor(), 1.0);
        assert_eq!(e.price_floor(), 1e-9);
        assert_eq!(e.supply(), &[2.0, 2.0]);
        let back: EconomySpec = serde_json::from_str(&serde_json::to_string(&e.to_spec()).unwrap()).unwrap();
        assert_eq!(back.build().unwrap(), e);
    }

    #[test]
    fn invalid_consumers_rejected() {
        assert!(Consumer::new(Utility::Ces { rho: 0.0 }, vec![1.0], vec![1.0]).is_err());
        assert!(Consumer::new(Utility::Ces { rho: 1.0 }, vec![1.0], vec![1.0]).is_err());
        assert!(Consumer::new(Utility::CobbDouglas, vec![0.0], vec![1.0]).is_err());
        assert!(Consumer::new(Utility::CobbDouglas, vec![1.0], vec![-1.0]).is_err());
        assert!(ExchangeEconomy::new(vec![cd(vec![1.0, 1.0], vec![1.0, 0.0])]).is_err());
    }
}
