//! Seeded generation of exchange economies and initial prices.
//!
//! Every draw comes from a ChaCha8 stream addressed by counters, so the value
//! of a field never depends on the order in which fields are generated:
//!
//! * key: `ChaCha8Rng::seed_from_u64(seed)`
//! * stream: `(field << 32) | attempt`, where `attempt` counts resamples
//! * word position: `2 · index`, with `index = consumer · n_goods + good`
//!   (or `consumer` for per-consumer fields, `good` for prices)
//!
//! The draw itself is `rng.random::<f64>()` (53 high bits of one `u64`),
//! mapped affinely onto the target range.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::economy::{Consumer, ExchangeEconomy, Utility, DEFAULT_CAP_FACTOR, DEFAULT_PRICE_FLOOR};
use crate::error::{Error, Result};
use crate::kernels::FeasibleSet;

pub const DEFAULT_SUPPLY_TOTAL: f64 = 10.0;
pub const ENDOWMENT_RANGE: (f64, f64) = (1e-6, 1.0);
pub const SUBSTITUTES_RHO: (f64, f64) = (0.6, 0.9);
pub const COMPLEMENTS_RHO: (f64, f64) = (-1000.0, -1.0);
pub const INITIAL_PRICE_RANGE: (f64, f64) = (1.0, 10.0);

/// Valuations below this are redrawn.
pub const MIN_VALUATION: f64 = 1e-12;

const FIELD_ENDOWMENT: u64 = 1;
const FIELD_VALUATION: u64 = 2;
const FIELD_RHO: u64 = 3;
const FIELD_PRICE: u64 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UtilityKind {
    CobbDouglas,
    Leontief,
    CesSubstitutes,
    CesComplements,
}

impl UtilityKind {
    pub const ALL: [UtilityKind; 4] =
        [UtilityKind::CobbDouglas, UtilityKind::Leontief, UtilityKind::CesSubstitutes, UtilityKind::CesComplements];
}

/// Proportions of each utility kind, in [`UtilityKind::ALL`] order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Mix {
    #[serde(default)]
    pub cobb_douglas: f64,
    #[serde(default)]
    pub leontief: f64,
    #[serde(default)]
    pub ces_substitutes: f64,
    #[serde(default)]
    pub ces_complements: f64,
}

impl Mix {
    pub fn only(kind: UtilityKind) -> Self {
        let mut m = Mix { cobb_douglas: 0.0, leontief: 0.0, ces_substitutes: 0.0, ces_complements: 0.0 };
        *m.share_mut(kind) = 1.0;
        m
    }

    /// Equal shares of all four kinds.
    pub fn uniform() -> Self {
        Mix { cobb_douglas: 0.25, leontief: 0.25, ces_substitutes: 0.25, ces_complements: 0.25 }
    }

    pub fn share(&self, kind: UtilityKind) -> f64 {
        match kind {
            UtilityKind::CobbDouglas => self.cobb_douglas,
            UtilityKind::Leontief => self.leontief,
            UtilityKind::CesSubstitutes => self.ces_substitutes,
            UtilityKind::CesComplements => self.ces_complements,
        }
    }

    fn share_mut(&mut self, kind: UtilityKind) -> &mut f64 {
        match kind {
            UtilityKind::CobbDouglas => &mut self.cobb_douglas,
            UtilityKind::Leontief => &mut self.leontief,
            UtilityKind::CesSubstitutes => &mut self.ces_substitutes,
            UtilityKind::CesComplements => &mut self.ces_complements,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let shares = UtilityKind::ALL.map(|k| self.share(k));
        if shares.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return Err(Error::InvalidInput(format!("mix proportions must be nonnegative, got {shares:?}")));
        }
        let total: f64 = shares.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!("mix proportions sum to {total}, expected 1")));
        }
        Ok(())
    }

    /// Kind of each of `n` consumers: the first `⌊share₁·n⌋` get the first
    /// kind, and so on; rounding leftovers go to the last kind with a
    /// positive share.
    pub fn assign(&self, n: usize) -> Vec<UtilityKind> {
        let mut kinds = Vec::with_capacity(n);
        for kind in UtilityKind::ALL {
            let count = (self.share(kind) * n as f64 + 1e-9).floor() as usize;
            kinds.extend(std::iter::repeat_n(kind, count.min(n - kinds.len())));
        }
        let last =
            UtilityKind::ALL.into_iter().rev().find(|&k| self.share(k) > 0.0).unwrap_or(UtilityKind::CobbDouglas);
        kinds.resize(n, last);
        kinds
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenSpec {
    pub seed: u64,
    pub n_consumers: usize,
    pub n_goods: usize,
    pub mix: Mix,
    #[serde(default = "default_supply_total")]
    pub supply_total: f64,
}

fn default_supply_total() -> f64 {
    DEFAULT_SUPPLY_TOTAL
}

impl GenSpec {
    pub fn new(seed: u64, n_consumers: usize, n_goods: usize, mix: Mix) -> Self {
        GenSpec { seed, n_consumers, n_goods, mix, supply_total: DEFAULT_SUPPLY_TOTAL }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_consumers == 0 || self.n_goods == 0 {
            return Err(Error::InvalidInput("generator needs at least one consumer and one good".into()));
        }
        if !(self.supply_total > 0.0 && self.supply_total.is_finite()) {
            return Err(Error::InvalidInput(format!("supply_total must be positive, got {}", self.supply_total)));
        }
        self.mix.validate()
    }
}

/// Uniform draw on `[lo, hi)` at counter `(field, attempt, index)`.
pub fn counter_uniform(seed: u64, field: u64, attempt: u32, index: u64, lo: f64, hi: f64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((field << 32) | attempt as u64);
    rng.set_word_pos(2 * index as u128);
    lo + (hi - lo) * rng.random::<f64>()
}

pub fn generate_economy(spec: &GenSpec) -> Result<ExchangeEconomy> {
    spec.validate()?;
    let (m, n, seed) = (spec.n_consumers, spec.n_goods, spec.seed);
    let idx = |i: usize, j: usize| (i * n + j) as u64;

    let raw: Vec<Vec<f64>> = (0..m)
        .map(|i| {
            (0..n)
                .map(|j| counter_uniform(seed, FIELD_ENDOWMENT, 0, idx(i, j), ENDOWMENT_RANGE.0, ENDOWMENT_RANGE.1))
                .collect()
        })
        .collect();
    let column: Vec<f64> = (0..n).map(|j| raw.iter().map(|r| r[j]).sum()).collect();

    let kinds = spec.mix.assign(m);
    let consumers = (0..m)
        .map(|i| {
            let endowment: Vec<f64> = (0..n).map(|j| spec.supply_total * raw[i][j] / column[j]).collect();
            let valuations: Vec<f64> = (0..n)
                .map(|j| {
                    let mut attempt = 0;
                    loop {
                        let v = counter_uniform(seed, FIELD_VALUATION, attempt, idx(i, j), 0.0, 1.0);
                        if v >= MIN_VALUATION {
                            break v;
                        }
                        attempt += 1;
                    }
                })
                .collect();
            let utility = match kinds[i] {
                UtilityKind::CobbDouglas => Utility::CobbDouglas,
                UtilityKind::Leontief => Utility::Leontief,
                UtilityKind::CesSubstitutes => Utility::Ces {
                    rho: counter_uniform(seed, FIELD_RHO, 0, i as u64, SUBSTITUTES_RHO.0, SUBSTITUTES_RHO.1),
                },
                UtilityKind::CesComplements => Utility::Ces {
                    rho: counter_uniform(seed, FIELD_RHO, 0, i as u64, COMPLEMENTS_RHO.0, COMPLEMENTS_RHO.1),
                },
            };
            Consumer::new(utility, valuations, endowment)
        })
        .collect::<Result<Vec<_>>>()?;
    ExchangeEconomy::with_options(consumers, DEFAULT_CAP_FACTOR, DEFAULT_PRICE_FLOOR)
}

/// Raw `Unif(1, 10)` prices for `n` goods.
pub fn raw_initial_prices(seed: u64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|j| counter_uniform(seed, FIELD_PRICE, 0, j as u64, INITIAL_PRICE_RANGE.0, INITIAL_PRICE_RANGE.1))
        .collect()
}

/// Scales raw prices into `space`: by the largest price on a box, by the sum
/// on the simplex.
pub fn normalize_prices(raw: &[f64], space: &FeasibleSet) -> Result<Vec<f64>> {
    let p: Vec<f64> = if space.is_simplex() {
        let s: f64 = raw.iter().sum();
        raw.iter().map(|v| v / s).collect()
    } else {
        let m = raw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        raw.iter().map(|v| v / m).collect()
    };
    space.check_member("initial prices", &p)?;
    Ok(p)
}

pub fn initial_prices(seed: u64, space: &FeasibleSet) -> Result<Vec<f64>> {
    normalize_prices(&raw_initial_prices(seed, space.dim()), space)
}
