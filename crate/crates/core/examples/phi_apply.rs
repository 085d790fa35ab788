//! Compute y = phi_1(hL)v for the built-in advection-diffusion operator and
//! print the per-iteration convergence diagnostics.
//!
//! Run with: cargo run --example phi_apply

use rd_arnoldi::operators::SectorialOperator;
use rd_arnoldi::phifun::{
    phi_oracle_dense, rd_arnoldi_phi_with, BoundContext, DriverOptions, PhiRequest,
};
use rd_arnoldi::residual::{StopMode, StoppingRule};
use rd_arnoldi::sector::sector_of_operator;

fn main() -> Result<(), rd_arnoldi::Error> {
    let dim = 200;
    let c = 2.0;
    let (k, h) = (1usize, 0.1);

    // Sector angle from a coarse mesh: it is essentially mesh independent,
    // so the cheap computation transfers to the fine operator.
    let coarse = SectorialOperator::advection_diffusion(50, c);
    let theta = sector_of_operator(&coarse, 256)?.theta + 0.01;
    let tau = 15.0 / theta.cos();
    println!("theta = {theta:.4}, tau = {tau:.3}, delta = {:.5}", h / tau);

    let op = SectorialOperator::advection_diffusion(dim, c);
    let v = vec![1.0 / (dim as f64).sqrt(); dim];
    let reference = phi_oracle_dense(k, h, &op.to_dense(), &v)?;

    let req = PhiRequest::new(k, h, v, tau)?;
    let opts = DriverOptions {
        stop: Some(StoppingRule::new(1e-12, dim, StopMode::Residual)),
        bound_context: Some(BoundContext::new(theta)),
        reference: Some(&reference),
    };
    let out = rd_arnoldi_phi_with(&req, &op, &opts)?;

    println!(
        "{:>3} {:>13} {:>13} {:>13}",
        "m", "residual", "bound_fe1", "true_error"
    );
    for r in &out.report.records {
        println!(
            "{:>3} {:>13.3e} {:>13.3e} {:>13.3e}",
            r.m,
            r.residual.unwrap(),
            r.bound_fe1.unwrap(),
            r.true_error.unwrap()
        );
    }
    println!(
        "converged = {} after {} banded solves (one per iteration)",
        out.converged, out.m
    );
    Ok(())
}
