//! Scenario-based two-stage stochastic economic dispatch for renewables-rich
//! power systems, with simulated quantum backends for the hard combinatorial
//! pieces.
//!
//! The pipeline, stage by stage:
//!
//! 1. [`sim`] — a little-endian statevector simulator (the only quantum
//!    runtime; everything "quantum" here is exact simulation).
//! 2. [`uqae`] — renewable forecast-error distributions are discretized onto a
//!    signed binary grid, loaded into a quantum register, and their means
//!    estimated by Grover-power amplitude estimation; sampling the registers
//!    yields weighted uncertainty scenarios.
//! 3. [`model`] — a dispatch case (buses, lines, generators, storage,
//!    renewables) compiles into a two-stage stochastic program: binary
//!    commitment first stage, per-scenario linear recourse.
//! 4. [`lp`] / [`benders`] — multi-cut Benders decomposition: scenario
//!    subproblems are solved as explicit dual LPs whose optima become
//!    aggregated optimality cuts and whose rays become feasibility cuts.
//! 5. [`qubo`] / [`qaoa`] — the binary master problem and the feasibility-cut
//!    set-cover problem are encoded as penalty QUBOs and minimized by QAOA,
//!    simulated annealing, or exact enumeration.
//! 6. [`cutsel`] — minimum-cover selection keeps the master encoding small by
//!    retaining only feasibility cuts that still exclude every infeasible
//!    trial.
//! 7. [`io`] / [`cli`] — case files, run configuration, CSV emission, and the
//!    `sample` / `solve` / `compare` / `robustness` commands.
//!
//! # Examples
//!
//! Each major capability has a runnable example:
//!
//! ```text
//! cargo run --release -p qdispatch --example sample_errors     # discretized error grids + register sampling
//! cargo run --release -p qdispatch --example estimate_mean     # amplitude-estimated means vs exact
//! cargo run --release -p qdispatch --example mc_vs_uqae        # estimation error vs classical Monte Carlo
//! cargo run --release -p qdispatch --example scenario_product  # 512-scenario joint set with weights
//! cargo run --release -p qdispatch --example qaoa_basics       # QAOA vs exact ground state on random QUBOs
//! cargo run --release -p qdispatch --example anneal_qubo       # simulated-annealing QUBO baseline
//! cargo run --release -p qdispatch --example benders_micro     # Benders on the bundled micro case, all masters
//! cargo run --release -p qdispatch --example cut_selection     # feasibility-cut cover selection
//! cargo run --release -p qdispatch --example full_case         # end-to-end run on the bundled 6-bus case
//! cargo run --release -p qdispatch --example robustness_study  # seed sweep: objective spread
//! ```
//!
//! The same capabilities are scriptable through the thin CLI bin:
//! `qdispatch sample|solve|compare|robustness`.

pub mod benders;
pub mod cases;
pub mod cli;
pub mod cutsel;
pub mod io;
pub mod lp;
pub mod model;
pub mod qaoa;
pub mod qubo;
pub mod rng;
pub mod sim;
pub mod uqae;
