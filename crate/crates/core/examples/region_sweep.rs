//! Feasible (p, q) cells of the saturation candidate on a 200 × 200 grid
//! for the four (c, γ) combinations, with a coarse text rendering.
//!
//! Run with `cargo run --release --example region_sweep`.

use std::f64::consts::E;

use mjds::lyapunov::{feasible_region, grid_midpoints};

fn main() {
    let axis = grid_midpoints(200);
    for (c, gamma) in [(5.2, 1.0), (5.2, 1.2), (E, 1.0), (E, 1.2)] {
        let grid = feasible_region(gamma, c, &axis, &axis);
        println!(
            "c = {c:.4}, gamma = {gamma}: {} cells, max q = {:?}, max 1-p = {:?}",
            grid.feasible_count(),
            grid.max_feasible_q(),
            grid.max_feasible_one_minus_p()
        );
    }

    // q upwards, 1 − p to the right, zoomed to the corner where cells live.
    let axis = grid_midpoints(400);
    let grid = feasible_region(1.0, E, &axis, &axis);
    println!("\nc = e, gamma = 1 (1-p and q in [0, 0.16]):");
    for qi in (0..64).rev().step_by(2) {
        let row: String = (0..64)
            .map(|k| {
                if grid.cell(399 - k, qi).feasible {
                    '#'
                } else {
                    '.'
                }
            })
            .collect();
        println!("  {row}");
    }
}
