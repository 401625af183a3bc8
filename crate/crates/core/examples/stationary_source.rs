//! F for a source parked at the origin of R^3 against the erfc closed form.

use heatsing::curve::{make_builtin_curve, CurveKind, CurveParams};
use heatsing::numerics::erfc_fn;
use heatsing::singular_solution::SingularField;
use std::f64::consts::PI;

fn main() -> heatsing::Result<()> {
    let curve = make_builtin_curve(
        CurveKind::Constant,
        None,
        &CurveParams::default(),
        3,
        2.0,
        None,
    )?;
    let field = SingularField::new(curve)?.with_tolerance(1e-12);
    println!("{:>6} {:>6} {:>22} {:>10}", "R", "t", "F", "rel err");
    for r in [0.05, 0.5, 2.0] {
        for t in [0.01, 0.5, 2.0] {
            let f = field.eval(&[r, 0.0, 0.0], t)?;
            let exact = erfc_fn(r / (2.0 * t.sqrt())) / (4.0 * PI * r);
            println!(
                "{r:>6} {t:>6} {f:>22.15e} {:>10.2e}",
                ((f - exact) / exact).abs()
            );
        }
    }
    Ok(())
}
