//! Coarse-grid calibration of the pole parameter: find the iteration count
//! m* and tau = (m*+k)/cos(theta) on a small operator, then use them
//! unchanged on a fine discretization.
//!
//! Run with: cargo run --example calibrate_tau

use rd_arnoldi::operators::SectorialOperator;
use rd_arnoldi::phifun::{phi_oracle_dense, rd_arnoldi_phi_with, DriverOptions, PhiRequest};
use rd_arnoldi::residual::{StopMode, StoppingRule};
use rd_arnoldi::sector::sector_of_operator;
use rd_arnoldi::tauselect::calibrate_on_coarse;

fn main() -> Result<(), rd_arnoldi::Error> {
    let c = 2.0;
    let (k, h) = (1usize, 0.1);
    let coarse = SectorialOperator::advection_diffusion(50, c);
    let theta = sector_of_operator(&coarse, 256)?.theta + 0.01;
    let v = vec![1.0 / 50f64.sqrt(); 50];

    let policy = calibrate_on_coarse(&coarse, &v, k, h, theta, 1e-12)?;
    println!(
        "coarse grid (M=50): target_m = {}, tau_opt = {:.3}, window = [{:.3}, {:.3}]",
        policy.target_m, policy.tau_opt, policy.window.lo, policy.window.hi
    );

    // Mesh independence: the calibrated tau converges in (almost) the same
    // number of iterations on a 8x finer grid.
    let dim = 400;
    let op = SectorialOperator::advection_diffusion(dim, c);
    let v = vec![1.0 / (dim as f64).sqrt(); dim];
    let reference = phi_oracle_dense(k, h, &op.to_dense(), &v)?;
    let req = PhiRequest::new(k, h, v, policy.tau_opt)?;
    let opts = DriverOptions {
        stop: Some(StoppingRule::new(1e-10, dim, StopMode::Oracle)),
        bound_context: None,
        reference: Some(&reference),
    };
    let out = rd_arnoldi_phi_with(&req, &op, &opts)?;
    println!(
        "fine grid (M={dim}): converged to 1e-10 in {} iterations",
        out.m
    );
    Ok(())
}
