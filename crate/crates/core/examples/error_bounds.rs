//! A-posteriori error bounds in action: the sharp bound (Laguerre values at
//! tau) and the coarse bound (sector angle only) against the true error, for
//! phi_0, phi_1, phi_2.
//!
//! Run with: cargo run --example error_bounds

use rd_arnoldi::operators::SectorialOperator;
use rd_arnoldi::phifun::{
    phi_oracle_dense, rd_arnoldi_phi_with, BoundContext, DriverOptions, PhiRequest,
};
use rd_arnoldi::residual::{StopMode, StoppingRule};
use rd_arnoldi::sector::sector_of_operator;

fn main() -> Result<(), rd_arnoldi::Error> {
    let dim = 200;
    let c = 4.0;
    let h = 0.5;

    let coarse = SectorialOperator::advection_diffusion(50, c);
    let theta = sector_of_operator(&coarse, 256)?.theta + 0.01;
    let tau = 8.0 / theta.cos();
    let op = SectorialOperator::advection_diffusion(dim, c);
    let v = vec![1.0 / (dim as f64).sqrt(); dim];

    for k in 0..=2usize {
        let reference = phi_oracle_dense(k, h, &op.to_dense(), &v)?;
        let req = PhiRequest::new(k, h, v.clone(), tau)?;
        let opts = DriverOptions {
            stop: Some(StoppingRule::new(1e-12, dim, StopMode::Residual)),
            bound_context: Some(BoundContext::new(theta)),
            reference: Some(&reference),
        };
        let out = rd_arnoldi_phi_with(&req, &op, &opts)?;
        println!("k = {k} (theta = {theta:.4}, tau = {tau:.3})");
        println!(
            "{:>3} {:>13} {:>13} {:>13}",
            "m", "true_error", "fe1", "fe2"
        );
        for r in &out.report.records {
            println!(
                "{:>3} {:>13.3e} {:>13.3e} {:>13.3e}",
                r.m,
                r.true_error.unwrap(),
                r.bound_fe1.unwrap(),
                r.bound_fe2.unwrap()
            );
        }
        println!();
    }
    Ok(())
}
