//! Exact uniform samplers for permutations avoiding a pattern of length
//! three, generators for the infinite random objects those samplers converge
//! to, and a verification harness that checks the limit laws by exhaustive
//! enumeration and Monte Carlo.
//!
//! The crate is organised bottom-up:
//!
//! - [`catalan`] and [`variates`]: exact Catalan arithmetic and the scalar
//!   random variables (`X`, `Y`, the positional split law).
//! - [`perm`] and [`enumerate`]: permutations, pattern containment, and
//!   brute-force enumeration oracles.
//! - [`dyck`] and [`sampler`]: uniform samplers over each avoidance class.
//! - [`limit`]: prefixes of the limiting objects in `S(N, N*)`.
//! - [`dist`], [`verify`] and [`report`]: empirical distributions and the
//!   experiments that compare finite-n laws against their limits.

pub mod catalan;
pub mod dist;
pub mod dyck;
pub mod enumerate;
mod error;
pub mod limit;
pub mod oracle;
pub mod par;
pub mod perm;
pub mod report;
pub mod rng;
pub mod sampler;
pub mod variates;
pub mod verify;

pub use catalan::{catalan, nu_pmfs, sample_split_position, split_weights, CatalanTable, NuPmfs, SplitLaw};
pub use dist::{tv_distance, EmpiricalDist};
pub use enumerate::{count_birr_321, enumerate_avoiders, DEFAULT_EXHAUSTIVE_BOUND};
pub use error::{Error, Result};
pub use limit::{
    limit_prefix_213, limit_prefix_231, limit_prefix_312, limit_prefix_321_partial, ExtEntry, ExtPrefix, LimitKind,
    LimitOptions, SegmentTrace,
};
pub use perm::{Pattern, Permutation};
pub use rng::RngStream;
pub use sampler::{sample_avoider, sample_avoider_image, sample_birr_321};
pub use variates::{sample_hat_x, sample_x, sample_y};
