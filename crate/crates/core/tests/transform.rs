use lfft::transform::{ProductTransform, TransformKind, TransformSpec};
use proptest::prelude::*;

fn families(eta: f64) -> Vec<TransformSpec> {
    vec![
        TransformSpec::logarithmic(eta).unwrap(),
        TransformSpec::error_function(eta).unwrap(),
        TransformSpec::sine(),
        TransformSpec::identity(),
    ]
}

/// Fourth-order central difference.
fn five_point(t: &TransformSpec, x: f64, h: f64) -> f64 {
    let f = |v: f64| t.forward(v).unwrap();
    (f(x - 2.0 * h) - 8.0 * f(x - h) + 8.0 * f(x + h) - f(x + 2.0 * h)) / (12.0 * h)
}

#[test]
fn derivative_against_finite_differences() {
    for eta in [1.0, 2.0, 4.0, 6.0] {
        for t in families(eta) {
            for i in 0..100 {
                let x = -0.495 + 0.99 * (i as f64 + 0.5) / 100.0;
                let d = t.derivative(x).unwrap();
                let fd = five_point(&t, x, 1e-4);
                assert!(
                    (fd - d).abs() / d.abs().max(1.0) <= 1e-6,
                    "{t} at {x}: {d} vs {fd}"
                );
            }
        }
    }
}

#[test]
fn logarithmic_with_unit_parameter_is_identity() {
    let t = TransformSpec::logarithmic(1.0).unwrap();
    for i in 0..=1000 {
        let x = -0.5 + i as f64 / 1000.0;
        assert!((t.forward(x).unwrap() - x).abs() <= 1e-12);
        assert!((t.derivative(x).unwrap() - 1.0).abs() <= 1e-12);
    }
}

#[test]
fn forward_saturates_near_the_boundary() {
    // ψ(x) is within an ulp of 1/2 well inside the interval, so ψ⁻¹ cannot
    // recover x there.
    let t = TransformSpec::logarithmic(6.0).unwrap();
    assert_eq!(t.forward(0.499_999).unwrap(), 0.5);
    assert_ne!(t.inverse(0.5).unwrap(), 0.499_999);
    assert!(t.forward(0.495).unwrap() < 0.5);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn inverse_roundtrips(eta in prop::sample::select(vec![1.0, 1.5, 2.0, 4.0, 6.0, 8.0]), y in -0.499_999f64..0.499_999) {
        for t in families(eta) {
            let back = t.forward(t.inverse(y).unwrap()).unwrap();
            prop_assert!((back - y).abs() <= 1e-10, "{} at {}", t, y);
            let x = t.inverse(y).unwrap();
            prop_assert!((-0.5..=0.5).contains(&x));
        }
    }

    #[test]
    fn forward_roundtrips_where_resolvable(eta in prop::sample::select(vec![1.0, 2.0, 4.0, 6.0]), x in -0.499_999f64..0.499_999) {
        for t in families(eta) {
            let y = t.forward(x).unwrap();
            // Rounding y alone moves ψ⁻¹(y) by about ulp(y) / ψ'(x).
            if f64::EPSILON / t.derivative(x).unwrap() <= 1e-11 {
                let back = t.inverse(y).unwrap();
                prop_assert!((back - x).abs() <= 1e-10, "{} at {}: {}", t, x, back);
            }
        }
    }

    #[test]
    fn odd_and_monotone(eta in 0.5f64..10.0, a in -0.5f64..0.5, b in -0.5f64..0.5) {
        for t in families(eta) {
            let (fa, fb) = (t.forward(a).unwrap(), t.forward(b).unwrap());
            prop_assert_eq!(t.forward(-a).unwrap(), -fa);
            if a < b {
                prop_assert!(fa <= fb);
            }
            prop_assert!((-0.5..=0.5).contains(&fa));
        }
    }

    #[test]
    fn density_is_reciprocal_derivative(eta in prop::sample::select(vec![1.0, 2.0, 4.0, 6.0]), y in -0.45f64..0.45) {
        for t in families(eta) {
            // y → x is the well-conditioned direction.
            let x = t.inverse(y).unwrap();
            let rho = t.density(y).unwrap();
            prop_assert!((rho * t.derivative(x).unwrap() - 1.0).abs() <= 1e-10, "{} at {}", t, y);
            let dual = match t.kind() {
                TransformKind::Logarithmic => Some(TransformSpec::logarithmic(1.0 / eta).unwrap()),
                TransformKind::ErrorFunction => Some(TransformSpec::error_function(1.0 / eta).unwrap()),
                _ => None,
            };
            if let Some(dual) = dual {
                prop_assert!((rho - dual.derivative(y).unwrap()).abs() <= 1e-10 * rho.max(1.0));
            }
        }
    }

    #[test]
    fn product_is_componentwise(x in prop::collection::vec(-0.4f64..0.4, 3)) {
        let p = ProductTransform::parse("log:2,erf:3,sine", None).unwrap();
        let y = p.forward(&x).unwrap();
        for ((yi, xi), t) in y.iter().zip(&x).zip(p.components()) {
            prop_assert_eq!(*yi, t.forward(*xi).unwrap());
        }
        let back = p.inverse(&y).unwrap();
        for (b, xi) in back.iter().zip(&x) {
            prop_assert!((b - xi).abs() <= 1e-10);
        }
    }
}
