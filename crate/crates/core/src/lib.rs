//! Exact classification of points and quasi-orbits for the actions
//! SL2(Z) on R^2 x T^2 and SL3(Z) on SL3(R)/U3(R), stabilizer computation,
//! the induced parameterization of the primitive spectrum of
//! SL3(Z) x| C0(SL3(R)/U3(R)) with its sequence-convergence oracle, and
//! finite-scale Hilbert-Schmidt witnesses for weak containment.
//!
//! Point coordinates live in `Q[theta]` for a formal transcendental theta
//! (instantiated as pi only for signs and float output), so every
//! classification decision is exact.

pub mod error;
pub mod exact;
pub mod heis;
pub mod intmat;
pub mod prim;
pub mod sl2;
pub mod sl3;
pub mod weak;

pub use error::{DomainError, Result};
pub use exact::{
    parse_rational, rational_direction, sign, QRatio, QTheta, ThetaEnclosure, TorusElem,
};
pub use intmat::{extend_to_unimodular, IntMatrix, QMat};
