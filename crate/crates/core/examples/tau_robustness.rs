//! Robustness against the choice of tau: halving or doubling the calibrated
//! value costs only a few extra iterations, which is what makes
//! factorization reuse across step-size changes viable.
//!
//! Run with: cargo run --example tau_robustness

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
    let vc = vec![1.0 / 50f64.sqrt(); 50];
    let policy = calibrate_on_coarse(&coarse, &vc, k, h, theta, 1e-12)?;
    let tau_star = policy.tau_opt;

    let dim = 200;
    let op = SectorialOperator::advection_diffusion(dim, c);
    let v = vec![1.0 / (dim as f64).sqrt(); dim];
    let reference = phi_oracle_dense(k, h, &op.to_dense(), &v)?;

    println!(
        "calibrated target_m = {}, tau* = {tau_star:.3}",
        policy.target_m
    );
    for (label, tau) in [
        ("tau*/2", tau_star / 2.0),
        ("tau*", tau_star),
        ("2 tau*", 2.0 * tau_star),
    ] {
        let req = PhiRequest::new(k, h, v.clone(), tau)?;
        let opts = DriverOptions {
            stop: Some(StoppingRule::new(1e-12, dim, StopMode::Oracle)),
            bound_context: None,
            reference: Some(&reference),
        };
        let out = rd_arnoldi_phi_with(&req, &op, &opts)?;
        println!(
            "{label:>7} (tau = {tau:6.2}): {} iterations to 1e-12",
            out.m
        );
    }
    Ok(())
}
