//! Poisson problems, spectra and standing waves.

mod nls;
mod poisson;
mod secular;
mod spectrum;

pub use nls::{solve_newton, NewtonOptions, NewtonResult, Nonlinearity, NlsProblem};
pub use poisson::{poisson_residual, solve_poisson};
pub use secular::{find_spectrum_secular, secular_det, secular_matrix, SecularZero};
pub use spectrum::{eigs, Mode};
