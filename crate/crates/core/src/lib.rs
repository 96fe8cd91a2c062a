//! Static timing analysis with an interdependent flip-flop delay model.
//!
//! Traditional STA abstracts a flip-flop into three constants: a setup time,
//! a hold time, and a clock-to-q delay. In reality the clock-to-q delay is a
//! function of both the setup slack and the hold slack at the data input; a
//! flip-flop keeps working (with a larger delay) well past its characterized
//! setup time, until it finally goes metastable. Exploiting that region lets
//! a downstream stage with spare combinational delay absorb the increased
//! clock-to-q delay of an upstream flip-flop, which shortens the minimum
//! clock period of the circuit.
//!
//! This crate provides the full pipeline:
//!
//! - [`oracle`]: point queries of the delay surface, with an analytic model
//!   standing in for transistor-level simulation and a grid-backed replay
//!   oracle for recorded sweeps.
//! - [`characterize`]: builds a piecewise-linear model of the surface out of
//!   boundary triangles and adaptively split/merged rectangles, querying the
//!   oracle only at polygon corners and verification points.
//! - [`graph`]: stage graphs and gate-level netlists, with max/min path
//!   delay extraction and a seeded random benchmark generator.
//! - [`classic`]: the constant setup/hold/clock-to-q baseline analysis.
//! - [`milp`]: a self-contained LP/MILP substrate (bounded-variable revised
//!   simplex plus best-first branch-and-bound) and an LP-format exporter.
//! - [`optimize`]: the piecewise minimum-period formulation with polygon,
//!   stage, and flip-flop trimming, solution validation, and a brute-force
//!   reference solver.
//! - [`report`]: aligned-text and machine-readable result tables.

pub mod characterize;
pub mod classic;
pub mod config;
pub mod error;
pub mod graph;
pub mod milp;
pub mod model;
pub mod optimize;
pub mod oracle;
pub mod report;

pub use characterize::{characterize, validate_model, CharConfig, ValidationReport};
pub use classic::{ClassicFFParams, ViolationCounts};
pub use config::ToolConfig;
pub use graph::{Netlist, Stage, StageGraph};
pub use milp::{bb_solve, export_lp_text, lp_solve, MilpModel, MilpSolution};
pub use model::{PiecewiseDelayModel, PlaneCoefficients, Polygon, PolygonKind};
pub use optimize::{solve_min_period, validate_solution, Solution, SolveOptions};
pub use oracle::{AnalyticOracle, AnalyticParams, DelayOracle, OracleResponse, SlackPoint};
