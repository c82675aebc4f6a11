//! netmix: synthesis of circuit topologies by a genetic algorithm that
//! evolves normalized SPICE-subset netlists.
//!
//! Netlists are canonicalized (terminal sort, block line sort, internal-net
//! and component renumbering) so equivalent circuits serialize identically;
//! crossover, mutation, and pruning then operate directly on the netlist
//! lines. Candidates are scored either by a built-in switch-level digital
//! evaluator or by an external SPICE simulator through a template/regex
//! adapter, and a reward-sorted elite set drives roulette-wheel parent
//! selection.

pub mod config;
pub mod engine;
pub mod eval;
pub mod experiment;
pub mod genops;
pub mod graph;
pub mod netlist;
pub mod normalize;
pub mod registry;
pub mod reward;
pub mod rng;
pub mod sampler;

pub use config::{builtin_task, load_config, RunConfig, Task};
pub use engine::{run_synthesis, run_synthesis_with, EliteSet, Origin, RunReport};
pub use netlist::{parse_netlist, serialize_netlist, ComponentLine, NetName, Netlist, PortDecl};
pub use normalize::normalize;
pub use registry::ModelRegistry;
