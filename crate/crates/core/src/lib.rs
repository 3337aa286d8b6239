//! Zeta functions of one-parameter monomial deformations of Fermat
//! hypersurfaces over finite fields.
//!
//! The family under study is
//!
//! ```text
//! F_λ :  x_0^{d_0} + x_1^{d_1} + ... + x_n^{d_n} + λ · x_0^{a_0} ··· x_n^{a_n} = 0
//! ```
//!
//! in a weighted projective space P(w_0, ..., w_n) with w_i·d_i = d and
//! Σ w_i·a_i = d. For a quasi-smooth member over F_q (gcd(q, d) = 1,
//! q ≡ 1 mod d) the interesting zeta factor comes from the middle-dimensional
//! Frobenius action, which this crate computes two independent ways:
//!
//! * a p-adic deformation: per equivalence class of monomial basis elements,
//!   a matrix of generalized hypergeometric series over Z_q is evaluated at
//!   the Teichmüller lift of λ̄ and composed with the diagonal Frobenius
//!   constants of the undeformed Fermat hypersurface (Gauss/Jacobi sums);
//! * brute-force point counting over small extension fields, with the
//!   polynomial recovered through Newton's identities and the functional
//!   equation.
//!
//! Modules follow the pipeline: [`field`] and [`padic`] provide the ambient
//! arithmetic, [`family`] the combinatorics of monomial types, [`reduction`]
//! the exact reduction calculus producing series coefficients, [`hypergeom`]
//! the symbolic series data, [`jacobi`] the Fermat Frobenius constants and
//! their calibration, [`zeta`] the end-to-end assembly, and [`counting`] the
//! independent oracle.

pub mod counting;
pub mod cyclotomic;
pub mod error;
pub mod family;
pub mod field;
pub mod hypergeom;
pub mod intpoly;
pub mod jacobi;
pub mod padic;
pub mod reduction;
pub mod zeta;

pub use error::{Error, Result};
