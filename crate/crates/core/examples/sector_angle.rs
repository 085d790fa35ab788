//! Field-of-values geometry of the advection-diffusion operator: the sector
//! semiangle is independent of the mesh, so it can be computed on a coarse
//! discretization and reused at any resolution.
//!
//! Run with: cargo run --example sector_angle

use rd_arnoldi::operators::SectorialOperator;
use rd_arnoldi::sector::{sector_of_operator, verify_fz_in_gtheta};

fn main() -> Result<(), rd_arnoldi::Error> {
    for c in [0.0, 2.0, 4.0] {
        print!("c = {c}: theta =");
        for m in [50usize, 200, 1000] {
            let info = sector_of_operator(&SectorialOperator::advection_diffusion(m, c), 256)?;
            print!(" {:.4} (M={m})", info.theta);
        }
        println!();
    }

    // The resolvent transform maps the sector into the half-disk region;
    // check the containment empirically for a moderate operator.
    let op = SectorialOperator::advection_diffusion(60, 4.0);
    let theta = sector_of_operator(&op, 128)?.theta;
    let ok = verify_fz_in_gtheta(&op.to_dense(), 0.01, theta + 0.01, 32)?;
    println!("F(Z) inside G_theta for delta = 0.01: {ok}");
    Ok(())
}
