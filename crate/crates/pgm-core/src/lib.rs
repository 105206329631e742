//! Exact arithmetic for etale (phi, Gamma)-modules over truncated Laurent
//! series rings with finite mod-p coefficient algebras, and their local
//! Galois cohomology through the Herr complex.
//!
//! The base field is Q_p with p an odd prime. Modules live over A((T'))
//! for a finite local commutative F_p-algebra A, carry commuting semilinear
//! actions of phi, of a pro-p generator gamma (with chi(gamma) fixed to
//! 1+p) and of a generator delta of the torsion subgroup of order p-1, and
//! are required to be etale and topologically continuous. Cohomology,
//! duality pairings, Euler-characteristic certificates, extension classes,
//! square-zero lifting obstructions and a rank-1 character dictionary are
//! computed by exact finite truncation models whose correctness is
//! certified at run time.

pub mod coeffs;
pub mod error;
pub mod fp;
pub mod fplinalg;
pub mod herr;
pub mod json;
pub mod laurent;
pub mod oracle;
pub mod pgmod;
pub mod rankone;
pub mod suite;

pub use coeffs::CoefficientAlgebra;
pub use error::{Error, Result};
pub use herr::{cohomology, CohomologyReport};
pub use laurent::LaurentSeries;
pub use pgmod::{Config, PhiGammaModule};
