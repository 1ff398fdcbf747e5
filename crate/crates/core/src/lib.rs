//! Local data of elliptic curves over Q_p and of their quadratic twists.

pub mod error;
pub mod expr;
pub mod padic;
pub mod strongly_minimal;
pub mod tables;
pub mod tate;
pub mod twist;
pub mod verify;
pub mod weierstrass;

pub use error::{Error, Result};
pub use padic::{Prime, Rational, Valuation};
pub use tate::{KodairaType, LocalData, ReductionKind};
pub use weierstrass::{Isomorphism, TwistClass, ValuationVector, WeierstrassModel};
