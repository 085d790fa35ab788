//! Restricted-denominator (RD) rational Arnoldi approximation of the
//! exponential-integrator core functions `phi_k(hL)v` for sectorial
//! operators.
//!
//! The method builds a Krylov space for the single-pole resolvent
//! `Z = (I - delta*L)^{-1}` and evaluates `phi_k` on the small projected
//! problem, so each iteration costs one banded solve. The crate provides
//!
//! * the operator abstraction and banded factorization ([`operators`]),
//! * the Arnoldi process and its diagnostics ([`arnoldi`]),
//! * scalar/matrix phi-functions and the top-level driver ([`phifun`]),
//! * a-posteriori and a-priori error bounds ([`bounds`], [`laguerre`]),
//! * the generalized residual estimator and stopping rules ([`residual`]),
//! * field-of-values geometry and sector angles ([`sector`]),
//! * selection and reuse policies for the pole parameter tau = h/delta
//!   ([`tauselect`]),
//! * file-based experiment drivers behind the `rd-arnoldi` binary
//!   ([`experiments`]).
//!
//! See the `examples/` directory for one runnable program per capability.
//!
//! ```
//! use rd_arnoldi::operators::SectorialOperator;
//! use rd_arnoldi::phifun::{rd_arnoldi_phi, PhiRequest};
//! use rd_arnoldi::residual::{StopMode, StoppingRule};
//!
//! let op = SectorialOperator::advection_diffusion(200, 2.0);
//! let v = vec![1.0 / (200f64).sqrt(); 200];
//! let req = PhiRequest::new(1, 0.1, v, 15.8)?; // k, h, v, tau
//! let stop = StoppingRule::new(1e-12, 200, StopMode::Residual);
//! let out = rd_arnoldi_phi(&req, &op, &stop)?;
//! assert!(out.converged && out.m < 20);
//! # Ok::<(), rd_arnoldi::Error>(())
//! ```

pub mod arnoldi;
pub mod bounds;
pub mod error;
pub mod experiments;
pub mod laguerre;
pub mod operators;
pub mod phifun;
pub mod residual;
pub mod sector;
pub mod smalldense;
pub mod tauselect;

pub use error::{Error, Result};
