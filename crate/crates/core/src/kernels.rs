//! Distance-generating kernels, Bregman divergences and closed-form mirror steps.
//!
//! Two kernels are supported:
//!
//! | kernel | h(x) | D_h(x, y) |
//! |--------|------|-----------|
//! | squared Euclidean | ½‖x‖² | ½‖x − y‖² |
//! | negative entropy | Σ x_j ln x_j | Σ x_j ln(x_j / y_j) − x_j + y_j |
//!
//! over two feasible sets, an axis-aligned box and the unit simplex. The
//! mirror step solves
//!
//! ```text
//! argmin_{x ∈ set} ⟨g, x⟩ + D_h(x, x0) / (2η)
//! ```
//!
//! exactly. With the canonical ½ in the Euclidean divergence the effective
//! projected-gradient step is `2η`.
//!
//! Negative entropy is 1-strongly convex on `(0, 1]^n` and is floored at `ν`
//! (default `1e-8`) so that its smoothness constant `1/ν` stays finite.

use rand::Rng;

use crate::error::{check_dims, check_finite, Error, Result};
use crate::linalg::{dot, norm2};

/// Absolute tolerance used for every feasible-set membership test.
pub const MEMBERSHIP_TOL: f64 = 1e-12;

/// Default coordinate floor for the entropy kernel.
pub const DEFAULT_ENTROPY_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KernelKind {
    SquaredEuclidean,
    NegativeEntropy,
}

/// A 1-strongly-convex distance-generating function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kernel {
    kind: KernelKind,
    floor: f64,
}

impl Kernel {
    pub fn euclidean() -> Self {
        Kernel { kind: KernelKind::SquaredEuclidean, floor: 0.0 }
    }

    pub fn entropy() -> Self {
        Kernel { kind: KernelKind::NegativeEntropy, floor: DEFAULT_ENTROPY_FLOOR }
    }

    pub fn entropy_with_floor(floor: f64) -> Result<Self> {
        if !(floor > 0.0 && floor < 1.0) {
            return Err(Error::InvalidInput(format!("entropy floor must lie in (0, 1), got {floor}")));
        }
        Ok(Kernel { kind: KernelKind::NegativeEntropy, floor })
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    /// Coordinate floor ν (zero for the Euclidean kernel).
    pub fn floor(&self) -> f64 {
        self.floor
    }

    /// Strong convexity modulus μ after normalization.
    pub fn strong_convexity(&self) -> f64 {
        1.0
    }

    /// Lipschitz constant λ_h of ∇h on the (floored) domain.
    pub fn smoothness(&self) -> f64 {
        match self.kind {
            KernelKind::SquaredEuclidean => 1.0,
            KernelKind::NegativeEntropy => 1.0 / self.floor,
        }
    }

    fn floored(&self, x: f64) -> f64 {
        x.max(self.floor)
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        match self.kind {
            KernelKind::SquaredEuclidean => 0.5 * dot(x, x),
            KernelKind::NegativeEntropy => x
                .iter()
                .map(|&v| {
                    let v = self.floored(v);
                    v * v.ln()
                })
                .sum(),
        }
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        match self.kind {
            KernelKind::SquaredEuclidean => x.to_vec(),
            KernelKind::NegativeEntropy => x.iter().map(|&v| 1.0 + self.floored(v).ln()).collect(),
        }
    }

    /// `D_h(x, y) = h(x) − h(y) − ⟨∇h(y), x − y⟩`.
    ///
    /// Entropy coordinates below the floor are clamped before evaluation.
    /// Rounding noise below zero is reported as zero.
    pub fn bregman_divergence(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        check_dims("bregman_divergence", x.len(), y.len())?;
        Ok(self.divergence_unchecked(x, y))
    }

    pub(crate) fn divergence_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        let d = match self.kind {
            KernelKind::SquaredEuclidean => 0.5 * x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>(),
            KernelKind::NegativeEntropy => x
                .iter()
                .zip(y)
                .map(|(&a, &b)| {
                    let (a, b) = (self.floored(a), self.floored(b));
                    a * (a / b).ln() - a + b
                })
                .sum(),
        };
        d.max(0.0)
    }

    /// Exact minimizer of `⟨g, x⟩ + D_h(x, x0)/(2η)` over `set`.
    pub fn mirror_step(&self, set: &FeasibleSet, eta: f64, x0: &[f64], g: &[f64]) -> Result<Vec<f64>> {
        mirror_step(set, self, eta, x0, g)
    }
}

impl Default for Kernel {
    fn default() -> Self {
        Kernel::euclidean()
    }
}

/// Constraint region of a variational inequality.
#[derive(Debug, Clone, PartialEq)]
pub enum FeasibleSet {
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Simplex { n: usize },
}

impl FeasibleSet {
    pub fn boxed(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        check_dims("box bounds", lo.len(), hi.len())?;
        if lo.is_empty() {
            return Err(Error::InvalidInput("box must have at least one coordinate".into()));
        }
        check_finite("box lower bound", &lo)?;
        check_finite("box upper bound", &hi)?;
        if let Some(j) = (0..lo.len()).find(|&j| lo[j] >= hi[j]) {
            return Err(Error::InvalidInput(format!("box bound {j}: lo = {} is not below hi = {}", lo[j], hi[j])));
        }
        Ok(FeasibleSet::Box { lo, hi })
    }

    /// `[lo, hi]^n`.
    pub fn cube(n: usize, lo: f64, hi: f64) -> Result<Self> {
        FeasibleSet::boxed(vec![lo; n], vec![hi; n])
    }

    /// `[0, 1]^n`.
    pub fn unit_box(n: usize) -> Result<Self> {
        FeasibleSet::cube(n, 0.0, 1.0)
    }

    pub fn simplex(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("simplex dimension must be at least 1".into()));
        }
        Ok(FeasibleSet::Simplex { n })
    }

    pub fn dim(&self) -> usize {
        match self {
            FeasibleSet::Box { lo, .. } => lo.len(),
            FeasibleSet::Simplex { n } => *n,
        }
    }

    pub fn is_simplex(&self) -> bool {
        matches!(self, FeasibleSet::Simplex { .. })
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        if x.len() != self.dim() || x.iter().any(|v| !v.is_finite()) {
            return false;
        }
        match self {
            FeasibleSet::Box { lo, hi } => {
                x.iter().zip(lo.iter().zip(hi)).all(|(&v, (&l, &h))| v >= l - MEMBERSHIP_TOL && v <= h + MEMBERSHIP_TOL)
            }
            FeasibleSet::Simplex { .. } => {
                x.iter().all(|&v| v >= -MEMBERSHIP_TOL) && (x.iter().sum::<f64>() - 1.0).abs() <= MEMBERSHIP_TOL
            }
        }
    }

    pub(crate) fn check_member(&self, what: &str, x: &[f64]) -> Result<()> {
        check_dims(what, self.dim(), x.len())?;
        check_finite(what, x)?;
        if !self.contains(x) {
            return Err(Error::InvalidInput(format!("{what}: point lies outside the feasible set")));
        }
        Ok(())
    }

    /// Box midpoint or simplex barycenter.
    pub fn center(&self) -> Vec<f64> {
        match self {
            FeasibleSet::Box { lo, hi } => lo.iter().zip(hi).map(|(l, h)| 0.5 * (l + h)).collect(),
            FeasibleSet::Simplex { n } => vec![1.0 / *n as f64; *n],
        }
    }

    /// Euclidean diameter.
    pub fn diameter(&self) -> f64 {
        match self {
            FeasibleSet::Box { lo, hi } => lo.iter().zip(hi).map(|(l, h)| (h - l) * (h - l)).sum::<f64>().sqrt(),
            FeasibleSet::Simplex { n } => {
                if *n == 1 {
                    0.0
                } else {
                    std::f64::consts::SQRT_2
                }
            }
        }
    }

    /// Euclidean projection onto the set.
    pub fn project(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_dims("project", self.dim(), v.len())?;
        check_finite("project", v)?;
        Ok(match self {
            FeasibleSet::Box { lo, hi } => {
                v.iter().zip(lo.iter().zip(hi)).map(|(&x, (&l, &h))| x.clamp(l, h)).collect()
            }
            FeasibleSet::Simplex { .. } => simplex_projection(v)?,
        })
    }

    /// `max_{x ∈ set} ⟨c, x⟩` together with a maximizer.
    ///
    /// Ties on the simplex resolve to the lowest index; zero box coefficients
    /// pick the lower bound.
    pub fn linear_max(&self, c: &[f64]) -> Result<(f64, Vec<f64>)> {
        check_dims("linear_max", self.dim(), c.len())?;
        check_finite("linear_max", c)?;
        Ok(match self {
            FeasibleSet::Box { lo, hi } => {
                let arg: Vec<f64> =
                    c.iter().zip(lo.iter().zip(hi)).map(|(&cj, (&l, &h))| if cj > 0.0 { h } else { l }).collect();
                (dot(c, &arg), arg)
            }
            FeasibleSet::Simplex { n } => {
                let mut best = 0;
                for j in 1..*n {
                    if c[j] > c[best] {
                        best = j;
                    }
                }
                let mut arg = vec![0.0; *n];
                arg[best] = 1.0;
                (c[best], arg)
            }
        })
    }

    /// Uniform draw: per-coordinate uniform on a box, flat Dirichlet on the simplex.
    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match self {
            FeasibleSet::Box { lo, hi } => {
                lo.iter().zip(hi).map(|(&l, &h)| l + (h - l) * rng.random::<f64>()).collect()
            }
            FeasibleSet::Simplex { n } => {
                // Exp(1) draws normalized give Dirichlet(1, ..., 1).
                let e: Vec<f64> = (0..*n).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
                let s: f64 = e.iter().sum();
                e.iter().map(|v| v / s).collect()
            }
        }
    }
}

/// Euclidean projection onto the unit simplex by sort-and-threshold.
pub fn simplex_projection(v: &[f64]) -> Result<Vec<f64>> {
    if v.is_empty() {
        return Err(Error::InvalidInput("simplex_projection: empty vector".into()));
    }
    check_finite("simplex_projection", v)?;
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (i, &ui) in u.iter().enumerate() {
        cumsum += ui;
        let t = (cumsum - 1.0) / (i + 1) as f64;
        if ui - t > 0.0 {
            theta = t;
        }
    }
    Ok(v.iter().map(|&x| (x - theta).max(0.0)).collect())
}

/// Exact mirror step `argmin_{x ∈ set} ⟨g, x⟩ + D_h(x, x0)/(2η)`.
pub fn mirror_step(set: &FeasibleSet, kernel: &Kernel, eta: f64, x0: &[f64], g: &[f64]) -> Result<Vec<f64>> {
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::InvalidInput(format!("step size must be positive and finite, got {eta}")));
    }
    set.check_member("mirror_step x0", x0)?;
    check_dims("mirror_step gradient", set.dim(), g.len())?;
    check_finite("mirror_step gradient", g)?;
    let tau = 2.0 * eta;
    match (kernel.kind(), set) {
        (KernelKind::SquaredEuclidean, FeasibleSet::Box { lo, hi }) => Ok(x0
            .iter()
            .zip(g)
            .zip(lo.iter().zip(hi))
            .map(|((&x, &gj), (&l, &h))| (x - tau * gj).clamp(l, h))
            .collect()),
        (KernelKind::SquaredEuclidean, FeasibleSet::Simplex { .. }) => {
            let v: Vec<f64> = x0.iter().zip(g).map(|(&x, &gj)| x - tau * gj).collect();
            simplex_projection(&v)
        }
        (KernelKind::NegativeEntropy, FeasibleSet::Box { lo, hi }) => {
            if let Some(j) = lo.iter().position(|&l| l < 0.0) {
                return Err(Error::InvalidInput(format!(
                    "entropy kernel needs a nonnegative box, lower bound {j} is {}",
                    lo[j]
                )));
            }
            let nu = kernel.floor();
            Ok(x0
                .iter()
                .zip(g)
                .zip(lo.iter().zip(hi))
                .map(|((&x, &gj), (&l, &h))| {
                    let floor = l.max(nu);
                    // exp may overflow to +inf; the clamp absorbs it
                    (x.max(nu) * (-tau * gj).exp()).clamp(floor, h.max(floor))
                })
                .collect())
        }
        (KernelKind::NegativeEntropy, FeasibleSet::Simplex { .. }) => {
            let nu = kernel.floor();
            let logw: Vec<f64> = x0.iter().zip(g).map(|(&x, &gj)| x.max(nu).ln() - tau * gj).collect();
            let m = logw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let w: Vec<f64> = logw.iter().map(|l| (l - m).exp()).collect();
            let s: f64 = w.iter().sum();
            let floored: Vec<f64> = w.iter().map(|v| (v / s).max(nu)).collect();
            let s2: f64 = floored.iter().sum();
            Ok(floored.iter().map(|v| v / s2).collect())
        }
    }
}

/// ½‖x − y‖₂².
pub fn half_sq_dist(x: &[f64], y: &[f64]) -> f64 {
    let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    0.5 * norm2(&d).powi(2)
}
