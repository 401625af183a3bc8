//! The point criterion on two mock fields around a moving point: d^{-1/2}
//! meets it, d^{-1} does not.

use heatsing::curve::{make_builtin_curve, CurveKind, CurveParams};
use heatsing::removability::{
    default_r_grid, test_point_criterion, DistancePowerField, Locus, SolutionField,
};

fn main() -> heatsing::Result<()> {
    let curve = make_builtin_curve(
        CurveKind::Circle,
        None,
        &CurveParams::default(),
        3,
        1.0,
        None,
    )?;
    let locus = Locus::Curve(curve);
    let grid = default_r_grid(1e-4);
    for power in [0.5, 1.0] {
        let mock = DistancePowerField {
            locus: &locus,
            power,
            scale: 1.0,
        };
        let field = SolutionField::new(&mock, &locus)?;
        for eps in [0.2, 0.05] {
            let o = test_point_criterion(&field, 0.4, 0.6, eps, &grid)?;
            println!(
                "d^-{power}: eps={eps} witness={:?} failure radius={:?} fails to floor={}",
                o.witness, o.failure_radius, o.fails_to_floor
            );
        }
    }
    Ok(())
}
