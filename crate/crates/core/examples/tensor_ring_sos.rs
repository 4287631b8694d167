//! The relaxation backend on a one-unit scalar network. Larger instances work
//! the same way but take tens of seconds each.

use nalgebra::DMatrix;
use polypush::model::PolyNetwork;
use polypush::moments::exact_quadratic_moments;
use polypush::tensor_ring::{decompose, Backend, TRConfig};

fn main() -> polypush::error::Result<()> {
    let net = PolyNetwork::quadratic(vec![DMatrix::from_element(1, 1, 0.7)])?;
    let cfg = TRConfig { backend: Backend::Sos, ..TRConfig::default() };
    let rep = decompose(&exact_quadratic_moments(&net)?, 1, &cfg, Some(&net))?;
    println!("recovered Q = {:.6}", rep.units[0][(0, 0)]);
    println!("d_G {:.2e}, relaxation residual {:.2e}", rep.gauge_distance.unwrap(), rep.relaxation_residual.unwrap());
    for note in &rep.notes {
        println!("note: {note}");
    }
    Ok(())
}
