//! Away from the curve F solves the heat equation; the discrete residual
//! should shrink by about 4 when the stencil is halved.

use heatsing::curve::{make_builtin_curve, CurveKind, CurveParams};
use heatsing::singular_solution::{residual_convergence, SingularField};

fn main() -> heatsing::Result<()> {
    let curve = make_builtin_curve(
        CurveKind::Circle,
        None,
        &CurveParams::default(),
        3,
        1.0,
        None,
    )?;
    let field = SingularField::new(curve)?.with_tolerance(1e-13);
    for x in [[1.5, 0.0, 0.0], [0.3, 0.4, 0.2], [0.0, -1.0, 0.5]] {
        let rc = residual_convergence(&field, &x, 0.6, 1e-2)?;
        println!(
            "x={x:?}  r(h)={:.3e}  r(h/2)={:.3e}  ratio={:.4}",
            rc.residual_h, rc.residual_half, rc.ratio
        );
    }
    Ok(())
}
