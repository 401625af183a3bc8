//! Nearest-point distance to a few parametrised singular sets.

use heatsing::singular_set::{jacobian_rank_check, ManifoldShape, SingularManifold};

fn main() -> heatsing::Result<()> {
    let circle = SingularManifold::new(
        4,
        1.0,
        ManifoldShape::Circle {
            center: vec![0.0; 4],
            radius: 1.0,
            plane: (0, 1),
        },
    )?;
    let square = SingularManifold::new(
        4,
        1.0,
        ManifoldShape::Square {
            origin: vec![0.0; 4],
            side: 1.0,
            plane: (0, 1),
        },
    )?;
    let x = [0.6, 0.8, 0.3, 0.0];
    for (name, m) in [("circle", &circle), ("square", &square)] {
        let d = m.distance(&x, 0.5)?;
        println!("{name}: d = {:.12} at s = {:?}", d.distance, d.parameter);
        let rank = jacobian_rank_check(m, 200, 3)?;
        println!(
            "  min singular value of the Jacobian: {:.4}",
            rank.min_singular_value
        );
    }
    Ok(())
}
