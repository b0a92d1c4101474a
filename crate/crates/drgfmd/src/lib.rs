//! Simulation laboratory for distributed randomized gradient-free mirror
//! descent (DRGFMD) over time-varying multi-agent networks.
//!
//! The crate is organised around the pieces of the method:
//!
//! - [`netgraph`] — communication topologies, doubly stochastic mixing
//!   matrices, and geometric-mixing certificates for their transition
//!   products.
//! - [`geometry`] — mirror maps (distance-generating functions), Bregman
//!   divergences, and the proximal mirror step, with Euclidean and
//!   negative-entropy instantiations on the probability simplex.
//! - [`objective`] — local objectives, Gaussian smoothing, the
//!   two-point gradient-free oracle, and Monte Carlo checks of its
//!   moment bounds.
//! - [`solver`] — the DRGFMD iteration, its scaled variant, the
//!   Euclidean projection baseline (DGFP), stepsize schedules, averaging
//!   sequences, and numeric evaluation of the convergence-bound
//!   constants.
//! - [`lab`] — multi-trial experiment orchestration, rate-slope
//!   estimation, bound overlays, and the canned experiment suites.
//! - [`config`], [`report`], [`verify`] — the flat config format, CSV and
//!   SVG emission, and the named runtime property suites behind the
//!   `verify` command.
//!
//! Everything is deterministic given the seeds declared in a
//! configuration: random streams are keyed by `(seed, trial, agent,
//! iteration)` and never touch wall-clock or OS entropy.

pub mod config;
pub mod geometry;
pub mod lab;
pub mod netgraph;
pub mod objective;
pub mod report;
pub mod rng;
pub mod sampling;
pub mod solver;
pub mod vecmath;
pub mod verify;

pub use geometry::{Domain, EntropyMap, EuclideanMap, GeometryError, MirrorMap, Point};
pub use netgraph::{Graph, MixingCertificate, MixingMatrix, NetworkError, TopologySchedule};
pub use objective::{GradientFreeOracle, LocalObjective, ObjectiveError, ProblemInstance};
pub use solver::{AlgorithmConfig, RunRecord, SolverError, StepSchedule, Variant};
