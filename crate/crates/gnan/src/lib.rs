//! A joint generative model of network links and node attributes.
//!
//! Nodes carry soft community memberships; each community has a
//! connectivity profile over target nodes and a profile over attributes.
//! Expected link and attribute counts are mixtures of these profiles, fitted
//! by expectation-maximization over the observed sparse data. The companion
//! modules provide planted-partition generators ([`synth`]), partition
//! metrics and model inspection ([`eval`]), and plain-text file formats
//! ([`io`]).
//!
//! ```
//! use gnan::em::{fit, FitConfig};
//! use gnan::eval::{hard_assign, nmi};
//! use gnan::synth::{attr_sample, dependency_design, planted_community, sbm_sample};
//! use rand_chacha::{rand_core::SeedableRng, ChaCha8Rng};
//!
//! let blocks = planted_community(2, 0.3, 0.02).unwrap();
//! let deps = dependency_design(2, 5, 0.9, 0.1, 0, &[]).unwrap();
//! let mut rng = ChaCha8Rng::seed_from_u64(7);
//! let sizes = [30, 40];
//! let (graph, planted) = sbm_sample(&sizes, &blocks, &mut rng).unwrap();
//! let attrs = attr_sample(&sizes, &deps, &mut rng).unwrap();
//!
//! let result = fit(&graph, &attrs, &FitConfig::new(2, 42)).unwrap();
//! let found = hard_assign(result.params.membership());
//! assert!(nmi(&planted, &found).unwrap() > 0.99);
//! ```

pub mod em;
pub mod eval;
pub mod io;
pub mod model;
pub mod synth;

pub use em::{fit, FitConfig, FitResult, Mode};
pub use model::{AttributeMatrix, Matrix, ModelParams, Partition, SparseGraph};
