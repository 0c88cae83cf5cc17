//! Mirror extragradient solvers for variational inequalities, specialized into
//! extratâtonnement price dynamics for Walrasian exchange economies.
//!
//! * [`kernels`]: Bregman kernels, feasible sets and closed-form mirror steps
//! * [`vi`]: VI problems, the mirror gradient and extragradient solvers, gap
//!   and Minty certificates
//! * [`economy`]: the Scarf economy and CES-family exchange economies
//! * [`tatonnement`]: price-adjustment runs with equilibrium certificates
//! * [`gen`]: seeded economy generation
//! * [`cli`]: the `walrasian` command-line harness

// NaN-rejecting checks are written as `!(x > 0.0)` on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod economy;
pub mod error;
pub mod gen;
pub mod kernels;
pub mod linalg;
pub mod tatonnement;
pub mod vi;

pub use economy::{Consumer, ExcessDemand, ExchangeEconomy, ScarfEconomy, Utility};
pub use error::{Error, Result};
pub use kernels::{FeasibleSet, Kernel, KernelKind};
pub use tatonnement::{EquilibriumCertificate, PriceRun, StepSize};
pub use vi::{Method, Operator, RunTrace, SolverConfig, ViProblem};
