//! Eigenvalue analysis for rank-one perturbations `B(t) = A + t·v·wᵀ` of
//! singular M-matrices `A = ρ(H)·I − H`.
//!
//! * [`matcore`]: nonnegative matrices, Perron vectors, irreducibility, NZP.
//! * [`poly`]: characteristic/minimal polynomials, roots, Routh–Hurwitz.
//! * [`perturb`]: the perturbation polynomial, eigenvalue curves, closed
//!   forms for `n = 2, 3`, large-`t` asymptotics and the stability verdict.
//! * [`search`]: reference instances and a randomized counterexample search.
//! * [`cli`]: the command-line front end.

pub mod cli;
pub mod error;
pub mod matcore;
pub mod perturb;
pub mod poly;
pub mod search;

pub use error::{Error, Result};
