//! Minimal library usage: recover a weighted two-node measure from its
//! moments up to degree 4.

use waring::decompose::{v_decompose_moments, DecompOptions};
use waring::measures::PointMeasure;

fn main() -> waring::Result<()> {
    let mu = PointMeasure::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![2.0, 3.0])?;
    let moments = mu.moment_sequence(4)?;
    let result = v_decompose_moments(&moments, &DecompOptions::seeded(1))?;
    println!("components: {:?}", result.components);
    println!("weights:    {:?}", result.weights);
    Ok(())
}
