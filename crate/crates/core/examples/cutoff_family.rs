//! Scaled derivative sups of the cut-off family around a rough planar curve,
//! plus a finite-difference check of the closed-form derivatives.

use heatsing::curve::{make_builtin_curve, CurveKind, CurveParams};
use heatsing::cutoff::{check_derivatives, verify_cutoff_bounds, CutoffFamily};

fn main() -> heatsing::Result<()> {
    // enough terms that the series still oscillates at the finest smoothing scale
    let params = CurveParams {
        terms: Some(34),
        ..Default::default()
    };
    let curve = make_builtin_curve(CurveKind::Weierstrass, Some(0.5), &params, 2, 1.0, None)?;
    let radii: Vec<f64> = (3..=8).map(|k| 0.5f64.powi(k)).collect();
    let family = CutoffFamily::new(curve, &radii)?;
    let table = verify_cutoff_bounds(&family, &radii, 5000, 1)?;
    println!(
        "{:>10} {:>10} {:>10} {:>12}",
        "r", "r|grad|", "r^2|lap|", "r^2|eta_t|"
    );
    for row in &table.rows {
        println!(
            "{:>10.6} {:>10.4} {:>10.4} {:>12.4}",
            row.r, row.sup_scaled_grad, row.sup_scaled_lap, row.sup_scaled_dt
        );
    }
    println!(
        "spread: {:.3} {:.3} {:.3}",
        table.grad_ratio, table.lap_ratio, table.dt_ratio
    );
    let fd = check_derivatives(&family.level(radii[2])?, 1000, 2)?;
    println!(
        "finite differences at r={}: grad {:.1e} lap {:.1e} dt {:.1e}",
        fd.r, fd.grad_rel_error, fd.lap_rel_error, fd.dt_rel_error
    );
    Ok(())
}
