use std::f64::consts::PI;

use heatsing::curve::{make_builtin_curve, mollify, CurveKind, CurveParams};
use heatsing::cutoff::CutoffFamily;
use heatsing::numerics::{erfc_fn, linear_fit};
use heatsing::removability::sampling_radii;
use heatsing::singular_set::{ManifoldShape, SingularManifold, TubeRegion};
use heatsing::singular_solution::{HeatKernel, SingularField};
use proptest::prelude::*;

fn unit_circle(n: usize) -> SingularManifold {
    SingularManifold::new(
        n,
        1.0,
        ManifoldShape::Circle {
            center: vec![0.0; n],
            radius: 1.0,
            plane: (0, 1),
        },
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn kernel_parabolic_scaling(x in prop::collection::vec(-2.0f64..2.0, 3), t in 0.05f64..2.0, lambda in 0.3f64..3.0) {
        let k = HeatKernel::new(3).unwrap();
        let scaled: Vec<f64> = x.iter().map(|c| lambda * c).collect();
        let lhs = k.eval(&scaled, lambda * lambda * t).unwrap();
        let rhs = lambda.powi(-3) * k.eval(&x, t).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs().max(1e-300));
    }

    #[test]
    fn stationary_field_matches_erfc(r in 0.02f64..3.0, t in 0.02f64..1.0) {
        let origin = make_builtin_curve(CurveKind::Constant, None, &CurveParams::default(), 3, 1.0, None).unwrap();
        let field = SingularField::new(origin).unwrap().with_tolerance(1e-12);
        let exact = erfc_fn(r / (2.0 * t.sqrt())) / (4.0 * PI * r);
        let f = field.eval(&[r / 3f64.sqrt(), -r / 3f64.sqrt(), r / 3f64.sqrt()], t).unwrap();
        prop_assert!((f - exact).abs() <= 1e-8 * exact + 1e-300);
    }

    #[test]
    fn truncation_only_removes_mass(x0 in -1.5f64..1.5, x1 in -1.5f64..1.5, t in 0.2f64..1.0, a in 0.0f64..0.5, b in 0.0f64..0.5) {
        let c = make_builtin_curve(CurveKind::Circle, None, &CurveParams::default(), 3, 1.0, None).unwrap();
        let field = SingularField::new(c).unwrap();
        let x = [x0, x1, 0.3];
        let (lo, hi) = if a < b { (a * t, b * t) } else { (b * t, a * t) };
        let full = field.eval(&x, t).unwrap();
        let f_lo = field.eval_truncated(&x, t, lo).unwrap();
        let f_hi = field.eval_truncated(&x, t, hi).unwrap();
        prop_assert!(full > 0.0);
        prop_assert!(f_hi <= f_lo + 1e-9 * full && f_lo <= full * (1.0 + 1e-9));
    }

    #[test]
    fn circle_distance_matches_geometry(x in prop::collection::vec(-2.0f64..2.0, 4)) {
        let m = unit_circle(4);
        let planar = (x[0] * x[0] + x[1] * x[1]).sqrt();
        prop_assume!(planar > 1e-3);
        let exact = ((planar - 1.0).powi(2) + x[2] * x[2] + x[3] * x[3]).sqrt();
        let d = m.distance(&x, 0.5).unwrap();
        prop_assert!((d.distance - exact).abs() <= 1e-9, "{} vs {exact}", d.distance);
        let p = m.eval(&d.parameter, 0.5);
        let gap: f64 = p.iter().zip(&x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        prop_assert!((gap - d.distance).abs() <= 1e-12);
    }

    #[test]
    fn distance_is_a_lower_bound(x in prop::collection::vec(-1.0f64..2.0, 4), s in prop::collection::vec(0.0f64..1.0, 2)) {
        let square = SingularManifold::new(4, 1.0, ManifoldShape::Square { origin: vec![0.0; 4], side: 1.0, plane: (0, 1) }).unwrap();
        let d = square.distance(&x, 0.3).unwrap().distance;
        let p = square.eval(&s, 0.3);
        let through: f64 = p.iter().zip(&x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        prop_assert!(d <= through + 1e-12);
    }

    #[test]
    fn tube_membership_is_distance_below_r(x in prop::collection::vec(-1.5f64..1.5, 4), r in 0.05f64..0.5) {
        let m = unit_circle(4);
        let d = m.distance(&x, 0.5).unwrap().distance;
        prop_assume!((d - r).abs() > 1e-9);
        let tube = TubeRegion { manifold: &m, t: 0.5, r };
        prop_assert_eq!(tube.contains(&x).unwrap(), d < r);
    }

    #[test]
    fn cutoff_is_zero_inside_and_one_outside(angle in 0.0f64..(2.0 * PI), frac in 0.0f64..1.5, t in 0.1f64..0.9, k in 3i32..8) {
        let c = make_builtin_curve(CurveKind::Circle, Some(0.5), &CurveParams::default(), 2, 1.0, None).unwrap();
        let r = 0.5f64.powi(k);
        let fam = CutoffFamily::new(c, &[r]).unwrap();
        let level = fam.level(r).unwrap();
        let centre = level.mollified().eval(t).unwrap();
        let d = frac * r;
        let x = [centre[0] + d * angle.cos(), centre[1] + d * angle.sin()];
        let eta = level.eta(&x, t).unwrap();
        prop_assert!((0.0..=1.0).contains(&eta));
        if d <= 0.69 * r { prop_assert_eq!(eta, 0.0); }
        if d >= 0.81 * r { prop_assert_eq!(eta, 1.0); }
    }

    #[test]
    fn mollified_line_is_the_line(t in 0.1f64..0.9, eps in 1e-3f64..5e-2, v0 in -2.0f64..2.0, v1 in -2.0f64..2.0) {
        let params = CurveParams { velocity: Some(vec![v0, v1]), ..Default::default() };
        let line = make_builtin_curve(CurveKind::Linear, None, &params, 2, 1.0, None).unwrap();
        let m = mollify(&line, eps).unwrap();
        let a = m.eval(t).unwrap();
        let b = line.eval(t);
        let v = m.derivative(t).unwrap();
        prop_assert!((a[0] - b[0]).abs() < 1e-9 && (a[1] - b[1]).abs() < 1e-9);
        prop_assert!((v[0] - v0).abs() < 1e-7 && (v[1] - v1).abs() < 1e-7);
    }

    #[test]
    fn sampling_radii_are_geometric(hi in 1e-3f64..1.0, decades in 0.5f64..10.0) {
        let lo = hi * 10f64.powf(-decades);
        let r = sampling_radii(hi, lo);
        prop_assert_eq!(r[0], hi);
        prop_assert!((r[r.len() - 1] - lo).abs() <= 1e-12 * lo);
        for w in r.windows(2) {
            prop_assert!(w[1] < w[0] && w[0] / w[1] <= 10f64.powf(0.25) * (1.0 + 1e-12));
        }
    }

    #[test]
    fn linear_fit_recovers_lines(slope in -5.0f64..5.0, icpt in -5.0f64..5.0, n in 3usize..20) {
        let xs: Vec<f64> = (0..n).map(|k| k as f64 * 0.37 - 1.0).collect();
        let ys: Vec<f64> = xs.iter().map(|x| slope * x + icpt).collect();
        let (s, i, rms) = linear_fit(&xs, &ys).unwrap();
        prop_assert!((s - slope).abs() < 1e-10 && (i - icpt).abs() < 1e-10 && rms < 1e-10);
    }
}
