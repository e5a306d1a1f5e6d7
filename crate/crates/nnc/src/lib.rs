//! Nearest-neighbor-chain (NNC) algorithm workbench.
//!
//! The NNC technique walks nearest-neighbor links on a stack (the *chain*)
//! until it finds a mutually-nearest pair (or a nearest-neighbor cycle),
//! processes it, and resumes from the surviving stack. This crate implements
//! a family of NNC algorithms over different domains, each paired with an
//! independent brute-force oracle so the algorithmic claims are testable:
//!
//! * [`snn`] — the soft nearest-neighbor structure for points and paths,
//!   built on the dynamic approximate k-NN index in [`kann`], with the
//!   closest-pair application.
//! * [`params`] — computation and certification of the `(epsilon, k)`
//!   parameter pairs that make soft queries sound, including the analytic
//!   golden-ratio constant for the Euclidean plane and a simulated-annealing
//!   falsifier.
//! * [`mftsp`] — multi-fragment Euclidean TSP via the soft nearest-neighbor
//!   chain, the sorted-edge oracle, and the random-MNN strategy used to test
//!   global-local equivalence.
//! * [`steiner`] — multi-fragment tours for Steiner TSP on weighted graphs.
//! * [`motorcycle`] — motorcycle graphs via NNC over a dynamic curtain
//!   store, with a chronological simulation oracle.
//! * [`matching`] — narcissistic k-attribute stable matching via the
//!   bichromatic (soul-mates) chain, with a Gale-Shapley oracle and a
//!   stability verifier.
//! * [`cover`] — the 1D server-cover 2-approximation, an exact DP oracle,
//!   greedy baselines, and the 1.5D greedy lower-bound experiment.
//!
//! [`geom`] holds the shared vocabulary (points, L_p metrics, shells,
//! deterministic tie-breaking) and [`gen`] the seeded instance generators.

pub mod cover;
pub mod error;
pub mod gen;
pub mod geom;
pub mod kann;
pub mod matching;
pub mod mftsp;
pub mod motorcycle;
pub mod params;
pub mod snn;
pub mod steiner;

pub use error::{Error, Result};
pub use geom::{LpMetric, Point, Shell, TieBreaker};
