//! Exact discrepancies, exact Wasserstein distances between discrete measures,
//! the multiscale dyadic upper bounds on `W_p^p`, closed-form evaluation of the
//! bounds linking the two families of distances, and a harness that certifies
//! those inequalities on generated point sets.

pub mod bounds;
pub mod discrepancy;
pub mod error;
pub mod harness;
pub mod measures;
pub mod multiscale;
pub mod transport;

pub use error::{Error, Result};
pub use measures::{DiscreteMeasure, Domain, Measure, Norm};
