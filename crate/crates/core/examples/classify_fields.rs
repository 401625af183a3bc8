//! Full classification of the singular field and of a smooth control.

use heatsing::curve::{make_builtin_curve, CurveKind, CurveParams};
use heatsing::removability::{classify, ClassifyConfig, Locus, SolutionField};
use heatsing::singular_solution::{ShiftedKernel, SingularField, SpaceTimeField};
use std::time::Instant;

fn main() -> heatsing::Result<()> {
    for n in [2, 3] {
        let curve = make_builtin_curve(
            CurveKind::Circle,
            None,
            &CurveParams::default(),
            n,
            1.0,
            None,
        )?;
        let singular = SingularField::new(curve.clone())?.with_tolerance(1e-8);
        let smooth = ShiftedKernel::new(vec![0.0; n], 1.0)?;
        let locus = Locus::Curve(curve);
        let fields: [(&str, &dyn SpaceTimeField); 2] = [("F", &singular), ("Gaussian", &smooth)];
        for (name, f) in fields {
            let start = Instant::now();
            let report = classify(&SolutionField::new(f, &locus)?, &ClassifyConfig::default())?;
            println!(
                "N={n} {name:>8}: {:?} (exponent {:.3}, critical {}) in {:.1?}",
                report.verdict,
                report.exponent_estimate,
                report.critical_exponent,
                start.elapsed()
            );
        }
    }
    Ok(())
}
