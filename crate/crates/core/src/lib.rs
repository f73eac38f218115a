//! Assembly and disassembly sequence planning with a genetic algorithm
//! hybridized with fuzzy logic.
//!
//! A product is described by per-direction interference matrices and the
//! grippers each component can be handled with ([`product`]). Plans are
//! three-section chromosomes (order, direction, gripper) scored from their
//! feasible-prefix length and the orientation and gripper changes inside it
//! ([`plan`], [`fitness`]). The GA ([`ga`]) runs in one of four modes:
//!
//! | mode | fitness                     | operator rates      |
//! |------|-----------------------------|---------------------|
//! | A    | weighted objective          | fixed               |
//! | B    | fuzzy plan-quality ranking  | fixed               |
//! | C    | two-phase adaptive objective| fixed               |
//! | D    | two-phase adaptive objective| fuzzy controlled    |
//!
//! [`oracle`] solves small products exactly, and [`experiment`] runs seeded
//! batches and writes convergence curves, reports and replay manifests.
//!
//! ```
//! use adplan::{evolve, GaConfig, ProductBuilder};
//!
//! let product = ProductBuilder::new("pair", 2, &["+z", "-z"], &["G1"])
//!     .block(0, "+z", 1)
//!     .build()
//!     .unwrap();
//! let cfg = GaConfig { max_generations: 20, ..GaConfig::default() };
//! let result = evolve(&product, &cfg).unwrap();
//! assert_eq!(result.best_metrics.l, 2);
//! ```

pub mod bitset;
pub mod experiment;
pub mod fitness;
pub mod fuzzy;
pub mod ga;
pub mod oracle;
pub mod plan;
pub mod product;

pub use fitness::{
    adaptive_fitness, algebraic_fitness, fuzzy_fitness, rank_population, FitnessMode, RankContext, Ranked, Weights,
};
pub use fuzzy::{build_controller_system, build_ranking_system, FuzzySystem, TriangularMf};
pub use ga::{evolve, GaConfig, GenerationStats, RunResult};
pub use oracle::{brute_force_optimal, OracleResult};
pub use plan::{metrics, PlanChromosome, PlanMetrics};
pub use product::{load_product, DirectionId, GripperId, ProductBuilder, ProductModel, RemovedSet};
