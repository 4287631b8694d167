//! Diagonal units reduce the problem to a symmetric cubic tensor, which
//! Jennrich's algorithm decomposes directly.

use nalgebra::DVector;
use polypush::tensor_ring::{cubic_tensor, jennrich_diagonal};

fn main() -> polypush::error::Result<()> {
    let comps = vec![DVector::from_vec(vec![1.0, -0.5, 0.3]), DVector::from_vec(vec![0.2, 0.8, -1.1])];
    let t = cubic_tensor(&comps);
    for (i, v) in jennrich_diagonal(&t, 3, 0)?.iter().enumerate() {
        println!("component {i}: {:?}", v.as_slice());
    }
    Ok(())
}
