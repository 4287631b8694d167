//! Recover a head of units, then extend to the remaining outputs by solving
//! one small linear system per output.

use polypush::model::smoothed_quadratic_instance;
use polypush::tensor_ring::{extend_tail, TailSolver};

fn main() -> polypush::error::Result<()> {
    let d = 200;
    let net = smoothed_quadratic_instance(2, d, 0.5, 8)?;
    let units = net.quadratic_units().unwrap();
    let s = |a: usize, b: usize| units[a].component_mul(&units[b]).sum();
    let head = &units[..3];
    println!("head sigma_min {:.4}", TailSolver::new(head)?.sigma_min());
    let t0 = std::time::Instant::now();
    let tail = extend_tail(s, head, d)?;
    let err = tail.iter().zip(&units[3..]).map(|(a, b)| (a - b).amax()).fold(0.0, f64::max);
    println!("{} tail units in {:?}, max error {err:.2e}", tail.len(), t0.elapsed());
    Ok(())
}
