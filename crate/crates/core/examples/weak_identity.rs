//! Pairs F with the adjoint heat operator applied to a bump and compares the
//! result with the bump integrated along the curve.

use heatsing::curve::{make_builtin_curve, CurveKind, CurveParams};
use heatsing::singular_solution::{
    distributional_pairing_with, PairingOptions, SingularField, TestFunction,
};
use std::time::Instant;

fn main() -> heatsing::Result<()> {
    let curve = make_builtin_curve(
        CurveKind::Circle,
        None,
        &CurveParams::default(),
        2,
        1.0,
        None,
    )?;
    let field = SingularField::new(curve)?.with_tolerance(1e-8);
    let opts = PairingOptions::default();
    let bumps = [
        (
            "straddling",
            TestFunction::new(vec![1.0, 0.0], vec![0.5, 0.5], 0.5, 0.3)?,
        ),
        (
            "avoiding",
            TestFunction::new(vec![0.0, 0.0], vec![0.4, 0.4], 0.5, 0.3)?,
        ),
    ];
    for (name, bump) in bumps {
        let start = Instant::now();
        let p = distributional_pairing_with(&field, &bump, &opts)?;
        println!(
            "{name:>10}: lhs={:.12e} rhs={:.12e} err~{:.1e} ({:.1?})",
            p.lhs,
            p.rhs,
            p.lhs_error,
            start.elapsed()
        );
    }
    Ok(())
}
