//! Coefficient of the blow-up of F next to a rough curve, N = 3 and 4.

use heatsing::curve::{make_builtin_curve, CurveKind, CurveParams};
use heatsing::singular_solution::{asymptotic_coefficient, geometric_radii, SingularField};

fn main() -> heatsing::Result<()> {
    let radii = geometric_radii(1e-1, 1e-3, 9);
    for n in [3, 4] {
        let curve = make_builtin_curve(
            CurveKind::Weierstrass,
            Some(0.75),
            &CurveParams::default(),
            n,
            1.0,
            None,
        )?;
        let field = SingularField::new(curve)?.with_tolerance(1e-5);
        let mut dir = vec![0.0; n];
        dir[0] = 1.0;
        let est = asymptotic_coefficient(&field, 0.5, &dir, &radii)?;
        for s in &est.samples {
            println!("N={n} rho={:.3e} rho^(N-2) F={:.8}", s.rho, s.scaled);
        }
        println!(
            "N={n}: estimate {:.8} reference {:.8} rel err {:.2e}\n",
            est.estimate, est.reference, est.relative_error
        );
    }
    Ok(())
}
