//! Monte Carlo integrals of the critical kernel over shrinking tubes.

use heatsing::singular_set::{verify_tube, ManifoldShape, SingularManifold, TubeKernel};

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
    let point = SingularManifold::new(
        2,
        1.0,
        ManifoldShape::Point {
            center: vec![0.0; 2],
        },
    )?;
    let cases = [
        (
            "circle in R^4",
            &circle,
            TubeKernel::Power,
            vec![0.2, 0.1, 0.05, 0.025],
        ),
        (
            "point in R^2",
            &point,
            TubeKernel::Log,
            vec![0.2, 0.1, 0.05, 0.025],
        ),
    ];
    for (name, m, kernel, radii) in cases {
        let table = verify_tube(m, 0.5, &radii, kernel, 200_000, 9)?;
        println!("{name} ({kernel:?})");
        for row in &table.rows {
            println!(
                "  r={:<6} I={:.6} +- {:.1e}  I/r^2={:.4}  exact={:?}",
                row.r, row.integral, row.stderr, row.scaled_value, row.exact
            );
        }
        println!("  spread {:.3}", table.ratio);
    }
    Ok(())
}
