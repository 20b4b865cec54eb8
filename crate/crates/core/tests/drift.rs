use proptest::prelude::*;
use sdde::drift::{bump, eval_drift, mollify, truncate_dimension, Drift, DriftComponent, DriftSpec, MollifiedDrift, Shape};

fn indicator(lo: f64, hi: f64, height: f64) -> DriftComponent {
    DriftComponent::new(Shape::Indicator { lo, hi, height }).unwrap()
}

#[test]
fn mollified_indicator_is_one_on_the_plateau() {
    let b = indicator(0.0, 1.0, 1.0);
    for n in [2, 4, 16] {
        let m = mollify(&b, n).unwrap();
        assert!((m.value(0.5) - 1.0).abs() < 1e-9, "n={n}: {}", m.value(0.5));
        assert_eq!(m.value(-1.0), 0.0);
        assert_eq!(m.value(2.0), 0.0);
    }
}

#[test]
fn single_component_evaluation() {
    let spec = DriftSpec::new(vec![indicator(0.0, 1.0, 1.0)]).unwrap();
    assert_eq!(eval_drift(&spec, &[0.2], &[0.3]).unwrap(), 1.0);
    assert_eq!(eval_drift(&spec, &[1.2], &[0.0]).unwrap(), 0.0);
    assert!(eval_drift(&spec, &[0.2, 0.1], &[0.3, 0.0]).is_err());
}

#[test]
fn norms_of_basic_shapes() {
    let b = indicator(-0.5, 1.5, -3.0);
    assert_eq!(b.sup_norm(), 3.0);
    assert!((b.l1_norm() - 6.0).abs() < 1e-12);
    let tent = DriftComponent::new(Shape::Tent {
        center: 0.0,
        half_width: 2.0,
        height: 1.5,
    })
    .unwrap();
    assert!((tent.l1_norm() - 3.0).abs() < 1e-12);
    let comb = DriftComponent::new(Shape::Comb {
        lo: 0.0,
        hi: 1.0,
        teeth: 4,
        height: 2.0,
    })
    .unwrap();
    assert!((comb.l1_norm() - 2.0).abs() < 1e-12);
    let step = DriftComponent::step_with_l1(0.25, -2.0).unwrap();
    assert!((step.l1_norm() - 0.25).abs() < 1e-15);
}

#[test]
fn truncation_keeps_leading_components_on_a_window() {
    let spec = DriftSpec::new(vec![indicator(-5.0, 5.0, 1.0), indicator(0.0, 1.0, 2.0), indicator(0.0, 1.0, 3.0)]).unwrap();
    let t = truncate_dimension(&spec, 2).unwrap();
    assert_eq!(t.components().len(), 2);
    assert_eq!(t.component(0).value(1.5), 1.0);
    assert_eq!(t.component(0).value(2.5), 0.0);
    assert!((t.component(0).l1_norm() - 4.0).abs() < 1e-12);
    assert!(truncate_dimension(&spec, 0).is_err());
}

#[test]
fn padding_adds_zero_components() {
    let spec = DriftSpec::new(vec![indicator(0.0, 1.0, 1.0)]).unwrap();
    let p = spec.padded(3);
    assert_eq!(p.components().len(), 3);
    assert_eq!(p.l1_norms()[2], 0.0);
    assert_eq!(p.sup_norm_sum(), 1.0);
}

#[test]
fn zero_drift_mollifies_to_zero() {
    let m = MollifiedDrift::new(&DriftSpec::zero(2), 8).unwrap();
    assert_eq!(m.component_value(1, 0.3), 0.0);
    assert_eq!(m.lipschitz_sum(), 0.0);
}

#[test]
fn specs_round_trip_through_json() {
    let spec = DriftSpec::new(vec![
        indicator(0.0, 1.0, 1.0),
        DriftComponent::new(Shape::PiecewiseConstant {
            breaks: vec![0.0, 0.5, 2.0],
            values: vec![1.0, -1.0],
        })
        .unwrap(),
    ])
    .unwrap();
    let text = serde_json::to_string(&spec).unwrap();
    assert_eq!(serde_json::from_str::<DriftSpec>(&text).unwrap(), spec);
    let bad = r#"[{"shape": {"kind": "indicator", "lo": 0.0, "hi": 1.0, "height": 1.0, "width": 2.0}}]"#;
    assert!(serde_json::from_str::<DriftSpec>(bad).is_err());
    let reversed = r#"[{"shape": {"kind": "indicator", "lo": 1.0, "hi": 0.0, "height": 1.0}}]"#;
    assert!(serde_json::from_str::<DriftSpec>(reversed).is_err());
}

#[test]
fn bump_has_unit_mass() {
    let n = 20_000;
    let h = 2.0 / n as f64;
    let mass: f64 = (0..n).map(|k| bump(-1.0 + (k as f64 + 0.5) * h) * h).sum();
    assert!((mass - 1.0).abs() < 1e-9);
    assert_eq!(bump(1.0), 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn mollification_preserves_norm_bounds(lo in -2.0f64..2.0, width in 0.05f64..3.0, height in -3.0f64..3.0, n in 1usize..40) {
        prop_assume!(height.abs() > 1e-3);
        let b = indicator(lo, lo + width, height);
        let m = mollify(&b, n).unwrap();
        prop_assert!(m.sup_norm() <= b.sup_norm() * (1.0 + 1e-12));
        prop_assert!((m.l1_norm() - b.l1_norm()).abs() <= 2e-3 * b.l1_norm() + 1e-9);
    }

    #[test]
    fn lipschitz_constant_bounds_increments(center in -1.0f64..1.0, hw in 0.1f64..2.0, n in 1usize..20, x in -4.0f64..4.0, y in -4.0f64..4.0) {
        let b = DriftComponent::new(Shape::Tent { center, half_width: hw, height: 1.0 }).unwrap();
        let m = mollify(&b, n).unwrap();
        prop_assert!((m.value(x) - m.value(y)).abs() <= m.lipschitz() * (x - y).abs() * (1.0 + 1e-9) + 1e-12);
    }
}
