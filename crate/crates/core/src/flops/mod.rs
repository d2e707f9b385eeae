//! FLOP accounting: closed-form leading-term models and instrumented counts
//! of the actual kernels.

mod counter;
mod empirical;
mod model;

pub use counter::{FlopCounter, NoTally, Tally};
pub use empirical::{count_empirical, Kernel};
pub use model::{estimate, grid_csv, Dims, FlopEstimate, Method, STIEFEL_METHODS};
