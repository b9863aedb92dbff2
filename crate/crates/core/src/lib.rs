//! A desk-scale verification laboratory for online actor-critic learning on
//! finite MDPs.
//!
//! The crate has three layers:
//!
//! * **Exact ground truth** ([`mdp`], [`policy`], [`rates`], [`solvers`]):
//!   finite MDPs with their state-action Markov kernels, tabular softmax
//!   policies with exploration mixing, the learning/exploration rate
//!   schedules, and dense linear-algebra solvers for stationary
//!   distributions, discounted visiting measures, value functions, policy
//!   gradients, Łojasiewicz bounds, Poisson equations, and mixing profiles.
//! * **Dynamics** ([`sim`], [`ode`]): the discrete two-chain actor-critic
//!   algorithm with seeded, bitwise-reproducible runs and empirical
//!   fluctuation diagnostics, and the deterministic large-N limit system
//!   integrated with a classical fixed-step RK4 scheme, together with the
//!   scalar comparison ODEs used in the convergence analysis.
//! * **Harness** ([`experiments`], [`verify`]): seeded experiment
//!   orchestration over N-grids and seed lists with pass/fail verdicts, and
//!   a registry of numerical property checks runnable by name.
//!
//! Everything is deterministic: a run is a pure function of its
//! configuration and seed, and experiment artifacts are byte-stable across
//! reruns.

pub mod error;
pub mod experiments;
pub mod mdp;
pub mod numeric;
pub mod ode;
pub mod policy;
pub mod rates;
pub mod sim;
pub mod solvers;
pub mod table;
pub mod verify;

pub use error::{Error, Result};
pub use mdp::{ErgodicityReport, KernelKind, MdpSpec, StateActionKernel, ValidationReport};
pub use ode::{OdeOptions, OdeState, OdeTrajectory};
pub use policy::{PolicyTable, ThetaTable};
pub use rates::RateSchedule;
pub use sim::{AcConfig, AcRunState, RunTrajectory};
pub use solvers::{LojasiewiczReport, MixingProfile, OptimalPolicy, ValuePair, VisitingMeasures};
pub use table::Table;
