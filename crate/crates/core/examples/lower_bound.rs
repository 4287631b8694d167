//! Search for two parameter vectors with matching low-order power sums and
//! measure how close their output distributions are.

use polypush::lowerbound_lab::{build_networks, char_gap, moment_gap, param_distance_lb, search_matched_pair, uniform_grid, SearchConfig};

fn main() -> polypush::error::Result<()> {
    let cfg = SearchConfig { restarts: 10, ..SearchConfig::default() };
    let grid = uniform_grid(-10.0, 10.0, 1e-2);
    for r in 3..=5 {
        let s = search_matched_pair(r, &cfg)?;
        let gap = char_gap(&s.pair, &grid)?;
        let mom = moment_gap(&build_networks(&s.pair))?;
        println!(
            "r={r}: residual {:.3e} ({:?}), moment gap {mom:.3e}, sup char gap {:.3e}, parameter distance {:.3}",
            s.pair.residual,
            s.parametrization,
            gap.sup_gap,
            param_distance_lb(&s.pair)
        );
    }
    Ok(())
}
