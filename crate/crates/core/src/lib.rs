//! Exact extension calculus for finitely generated abelian groups, hyperelliptic
//! period integration, iterated integrals, and regulator pairings on `C x C`.
//!
//! The crate is organised around a handful of independent layers:
//!
//! * [`exact`] — dense rational matrices with Smith normal form over the integers;
//! * [`extalg`] — short exact sequences, Baer sums and the generalised Baer difference;
//! * [`hodge`] — finite-dimensional mixed Hodge data and Carlson representatives;
//! * [`paths`] — path lifting on the double cover and (iterated) integral quadrature;
//! * [`curve`] — hyperelliptic models, homology, periods and Abel–Jacobi maps;
//! * [`cycles`] — divisor/function bookkeeping for motivic cohomology elements;
//! * [`modular`] — exact q-series arithmetic for Delta_N, E_N and cusp divisors;
//! * [`regulator`] — assembly of the regulator and Carlson pairings and their comparison.

pub mod curve;
pub mod cycles;
pub mod exact;
pub mod extalg;
pub mod hodge;
pub mod modular;
pub mod paths;
pub mod regulator;
pub mod verify;

pub use curve::HyperellipticModel;
pub use exact::Mat;
pub use extalg::{FgModule, ModuleMap, ShortExactSequence};
