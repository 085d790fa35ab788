//! Quasi-constant step-size strategy: keep one factorization of
//! I - delta*L across step-size changes as long as tau = h_new/delta stays
//! inside the admissible window around the calibrated optimum.
//!
//! Run with: cargo run --example factorization_reuse

use rd_arnoldi::operators::SectorialOperator;
use rd_arnoldi::sector::sector_of_operator;
use rd_arnoldi::tauselect::{calibrate_on_coarse, reuse_decision};

fn main() -> Result<(), rd_arnoldi::Error> {
    let c = 2.0;
    let (k, h0) = (1usize, 0.1);
    let coarse = SectorialOperator::advection_diffusion(50, c);
    let theta = sector_of_operator(&coarse, 256)?.theta + 0.01;
    let v = vec![1.0 / 50f64.sqrt(); 50];
    let policy = calibrate_on_coarse(&coarse, &v, k, h0, theta, 1e-12)?;
    println!(
        "tau_opt = {:.3}, admissible window = [{:.3}, {:.3}]",
        policy.tau_opt, policy.window.lo, policy.window.hi
    );

    // A step-size controller proposes a sequence of h values; count how many
    // refactorizations the window policy actually needs.
    let mut delta = h0 / policy.tau_opt;
    let mut factorizations = 1usize;
    let steps = [
        0.1, 0.11, 0.12, 0.1, 0.09, 0.13, 0.15, 0.2, 0.28, 0.3, 0.22, 0.1, 0.05, 0.04, 0.06,
    ];
    for (i, &h) in steps.iter().enumerate() {
        if reuse_decision(&policy, h, delta) {
            println!(
                "step {i:2}: h = {h:<5} tau = {:6.2}  -> keep factorization",
                h / delta
            );
        } else {
            delta = h / policy.tau_opt;
            factorizations += 1;
            println!(
                "step {i:2}: h = {h:<5} tau out of window -> refactor with delta = {delta:.5}"
            );
        }
    }
    println!(
        "{} factorizations for {} steps",
        factorizations,
        steps.len()
    );
    Ok(())
}
