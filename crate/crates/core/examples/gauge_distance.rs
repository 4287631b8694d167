//! Gauge distance is zero between a network and any rotation of its input.

use polypush::model::smoothed_quadratic_instance;
use polypush::tensor_core::{gauge_distance, rotate_network, AlignConfig, GaugeRotation};

fn main() -> polypush::error::Result<()> {
    let net = smoothed_quadratic_instance(3, 6, 0.5, 4)?;
    let v = GaugeRotation::random(3, 9);
    let rotated = rotate_network(&net, &v)?;
    let (dist, found) = gauge_distance(&net, &rotated, &AlignConfig::default())?;
    println!("d_G(net, V·net) = {dist:.3e}");
    println!("recovered rotation:\n{:.4}", found.matrix());

    let other = smoothed_quadratic_instance(3, 6, 0.5, 5)?;
    println!("d_G(net, unrelated) = {:.3e}", gauge_distance(&net, &other, &AlignConfig::default())?.0);
    Ok(())
}
