//! Classification of F when the source moves along a Hölder-3/4 curve.
//! Each evaluation of F is costly there, so sampling is cut down to one
//! time, one ε and a short radius range.

use heatsing::curve::{make_builtin_curve, CurveKind, CurveParams};
use heatsing::removability::{
    classify, sampling_radii, ClassifyConfig, Locus, SamplingOptions, SolutionField, Verdict,
};
use heatsing::singular_solution::SingularField;

fn reduced(n: usize) -> ClassifyConfig {
    ClassifyConfig {
        eps_list: vec![0.05],
        windows: Some(vec![(0.45, 0.55)]),
        r_grid: Some(sampling_radii(0.05, 1e-4)),
        exponent_radii: Some(if n == 2 {
            vec![1e-8, 1e-10, 1e-12, 1e-14]
        } else {
            sampling_radii(1e-2, 1e-4)
        }),
        sampling: SamplingOptions {
            time_samples: 1,
            ..Default::default()
        },
    }
}

#[test]
fn rough_source_is_non_removable() {
    for n in [3usize, 2] {
        let curve = make_builtin_curve(
            CurveKind::Weierstrass,
            Some(0.75),
            &CurveParams::default(),
            n,
            1.0,
            None,
        )
        .unwrap();
        let field = SingularField::new(curve.clone())
            .unwrap()
            .with_tolerance(1e-4);
        let locus = Locus::Curve(curve);
        let report = classify(&SolutionField::new(&field, &locus).unwrap(), &reduced(n)).unwrap();
        assert_eq!(report.verdict, Verdict::NonRemovable, "N={n}: {report:?}");
        assert!(
            (report.exponent_estimate + (n as f64 - 2.0)).abs() <= 0.05,
            "N={n}: {}",
            report.exponent_estimate
        );
    }
}
