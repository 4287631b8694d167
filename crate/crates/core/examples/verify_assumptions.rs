//! Check the spectral conditions the recovery algorithms rely on.

use polypush::lowrank::{verify_assumption_lr, VerifyLimits};
use polypush::model::{identical_quadratic_base, smoothed_lowrank_instance, smoothed_quadratic_instance};
use polypush::tensor_ring::verify_assumption_tr;

fn main() -> polypush::error::Result<()> {
    for d in [3, 10, 40] {
        let rep = verify_assumption_tr(&smoothed_quadratic_instance(2, d, 0.5, 1)?)?;
        println!("quadratic d={d}: sigma_m {:.3}, predicted {:?}, ok {:?}", rep.sigma_m, rep.predicted_kappa, rep.kappa_flag);
    }
    // Identical units never satisfy the condition.
    let rep = verify_assumption_tr(&identical_quadratic_base(2, 6)?)?;
    println!("identical units: sigma_m {:.3e}", rep.sigma_m);

    let rep = verify_assumption_lr(&smoothed_lowrank_instance(2, 12, 3, 1, 0.5, 1)?, &VerifyLimits::default())?;
    println!("low-rank: sigma_m {:.3}, sigma_h {:.3}, theta {:?}", rep.sigma_m.measured, rep.sigma_h.measured, rep.theta_bound);
    for note in &rep.notes {
        println!("note: {note}");
    }
    Ok(())
}
