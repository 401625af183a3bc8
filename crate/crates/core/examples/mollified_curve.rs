//! How far a mollified Weierstrass curve strays from the original, and how
//! fast it moves, against the Holder-scale bounds.

use heatsing::curve::{make_builtin_curve, mollification_bounds, CurveKind, CurveParams};

fn main() -> heatsing::Result<()> {
    let curve = make_builtin_curve(
        CurveKind::Weierstrass,
        Some(0.6),
        &CurveParams::default(),
        2,
        1.0,
        None,
    )?;
    println!("Holder ratio on a grid: {:.4}", curve.holder_ratio(2000)?);
    for eps in [1e-1, 1e-2, 1e-3] {
        let b = mollification_bounds(&curve, eps, 2000)?;
        println!(
            "eps={eps:.0e}  |xi-xi_eps|={:.4} <= {:.4}   |xi_eps'|={:.3} <= {:.3}   holds={}",
            b.sup_coordinate_distance,
            b.coordinate_bound,
            b.sup_coordinate_derivative,
            b.derivative_bound,
            b.holds(0.05)
        );
    }
    Ok(())
}
