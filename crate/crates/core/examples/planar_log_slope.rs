//! In the plane F grows like c log(1/rho); the slope c should be 1/(2 pi).

use heatsing::curve::{make_builtin_curve, CurveKind, CurveParams};
use heatsing::singular_solution::{asymptotic_coefficient, geometric_radii, SingularField};

fn main() -> heatsing::Result<()> {
    let curve = make_builtin_curve(
        CurveKind::Circle,
        None,
        &CurveParams::default(),
        2,
        1.0,
        None,
    )?;
    let field = SingularField::new(curve)?;
    let est = asymptotic_coefficient(&field, 0.5, &[1.0, 0.0], &geometric_radii(1e-2, 1e-6, 9))?;
    for s in &est.samples {
        println!("rho={:.1e}  F={:.10}", s.rho, s.value);
    }
    println!(
        "slope {:.8}  1/(2 pi) = {:.8}  rel err {:.2e}",
        est.estimate, est.reference, est.relative_error
    );
    Ok(())
}
