use chainfix::generator::{sample_instance, GeneratorConfig};
use chainfix::oracle::stats::{coefficient_of_variation, max_jump_ratio, variance};
use chainfix::oracle::*;
use chainfix::saboteur::ErrorType;
use chainfix::sc::{build_lp, ScInstance};
use chainfix::Model;
use proptest::prelude::*;

fn cfg() -> OracleConfig {
    OracleConfig::default()
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() < 1e-9 * (1.0 + b.abs())
}

fn value(r: &CheckResult, echelon: usize) -> f64 {
    r.per_echelon.iter().find(|s| s.echelon == echelon).and_then(|s| s.value).unwrap()
}

#[test]
fn base_stock_cv_of_two_level_inventory() {
    // Four empty periods then three at 30: CV = sqrt(4/3).
    let r = check_base_stock(&[vec![0.0, 0.0, 0.0, 0.0, 30.0, 30.0, 30.0]], &cfg());
    assert!(close(value(&r, 1), 1.154_700_538_379_251_5));
    assert_eq!(r.status, CheckStatus::Pass);

    // One stocked period in six: CV = sqrt(5) > 2.
    let r = check_base_stock(&[vec![12.0, 12.0], vec![0.0, 0.0, 0.0, 0.0, 0.0, 60.0]], &cfg());
    assert!(close(value(&r, 2), 5f64.sqrt()));
    assert_eq!(r.status, CheckStatus::Fail);
    assert!(r.detail.contains("Echelon 2"));
}

#[test]
fn base_stock_all_zero_inventory_is_degenerate() {
    let r = check_base_stock(&[vec![0.0; 8], vec![0.0; 8]], &cfg());
    assert_eq!(r.status, CheckStatus::SkippedDegenerate);
}

#[test]
fn bullwhip_ratio_four_fails() {
    let demand = [10.0, 20.0, 10.0, 20.0];
    let orders = vec![vec![10.0, 20.0, 10.0, 20.0], vec![5.0, 25.0, 5.0, 25.0]];
    let r = check_bullwhip(&orders, &demand, &cfg());
    assert_eq!(r.per_echelon.len(), 1, "echelon 1 is not scored");
    assert!(close(value(&r, 2), 4.0));
    assert_eq!(r.status, CheckStatus::Fail);
}

#[test]
fn bullwhip_flat_demand_is_degenerate() {
    let r = check_bullwhip(&[vec![5.0; 4], vec![1.0, 9.0, 1.0, 9.0]], &[7.0; 4], &cfg());
    assert_eq!(r.status, CheckStatus::SkippedDegenerate);
}

#[test]
fn smoothing_ratios() {
    let c = cfg();
    let r = check_order_smoothing(&[vec![0.0, 20.0, 0.0, 20.0]], &c);
    assert!(close(value(&r, 1), 2.0));
    assert_eq!(r.status, CheckStatus::Pass);

    let r = check_order_smoothing(&[vec![0.0, 0.0, 0.0, 10.0]], &c);
    assert!(close(value(&r, 1), 4.0));
    assert_eq!(r.status, CheckStatus::Pass);

    // exactly at the threshold
    let r = check_order_smoothing(&[vec![0.0, 0.0, 0.0, 0.0, 10.0]], &c);
    assert_eq!(value(&r, 1), 5.0);
    assert_eq!(r.status, CheckStatus::Fail);

    // a single spike in a long flat series
    let mut spike = vec![10.0; 20];
    spike[9] = 210.0;
    let r = check_order_smoothing(&[spike], &c);
    assert!(close(value(&r, 1), 200.0 / 20.0));
    assert_eq!(r.status, CheckStatus::Fail);
}

#[test]
fn allocation_boundaries() {
    let c = cfg();
    let h = [3.0, 2.0];
    let fail = check_inventory_allocation(&[vec![30.0; 4], vec![0.0; 4]], 100.0, &h, &c);
    assert_eq!(fail.status, CheckStatus::Fail);
    assert!(fail.detail.contains("Echelon 1 (Retailer)"));

    let buffered = check_inventory_allocation(&[vec![30.0; 4], vec![1.0; 4]], 100.0, &h, &c);
    assert_eq!(buffered.status, CheckStatus::Pass);

    let at_limit = check_inventory_allocation(&[vec![25.0; 4], vec![0.0; 4]], 100.0, &h, &c);
    assert_eq!(at_limit.status, CheckStatus::Pass);
}

fn three_echelon(h: [f64; 3]) -> (ScInstance, Model) {
    let gen = GeneratorConfig {
        echelons: vec![3],
        periods: vec![8],
        ..GeneratorConfig::default()
    };
    let mut inst = sample_instance(&gen, 11).unwrap();
    inst.holding_cost = h.to_vec();
    inst.backorder_cost = vec![40.0, 30.0, 20.0];
    let model = build_lp(&inst).unwrap();
    (inst, model)
}

fn set_hold_coefficient(model: &mut Model, echelon: usize, periods: usize, v: f64) {
    for t in 1..=periods {
        model.variable_mut(&format!("hold_e{echelon}_t{t}")).unwrap().objective = v;
    }
}

#[test]
fn cost_consistency_flags_corrupted_coefficient() {
    let (inst, mut model) = three_echelon([8.0, 3.0, 2.0]);
    let r = check_cost_consistency(&model, &inst, &cfg());
    assert_eq!(r.status, CheckStatus::Pass);

    set_hold_coefficient(&mut model, 1, inst.n_periods, 3.0);
    let r = check_cost_consistency(&model, &inst, &cfg());
    assert_eq!(r.status, CheckStatus::Fail);
    assert!(r.detail.contains("the objective coefficient of hold_e1 is 3 but the configuration specifies 8"));
    assert!(close(value(&r, 1), 5.0 / 8.0));
    assert_eq!(r.per_echelon[1].status, CheckStatus::Pass);
}

#[test]
fn cost_consistency_relative_tolerance() {
    let (inst, mut model) = three_echelon([8.0, 3.0, 2.0]);
    set_hold_coefficient(&mut model, 1, inst.n_periods, 8.07);
    assert_eq!(check_cost_consistency(&model, &inst, &cfg()).status, CheckStatus::Pass);
    set_hold_coefficient(&mut model, 1, inst.n_periods, 8.09);
    assert_eq!(check_cost_consistency(&model, &inst, &cfg()).status, CheckStatus::Fail);
}

#[test]
fn cost_consistency_rising_holding_configuration() {
    // Model coefficients agree with the configuration; only the ordering is wrong.
    let (mut inst, mut model) = three_echelon([8.0, 3.0, 2.0]);
    inst.holding_cost = vec![3.0, 8.0, 2.0];
    set_hold_coefficient(&mut model, 1, inst.n_periods, 3.0);
    set_hold_coefficient(&mut model, 2, inst.n_periods, 8.0);
    let r = check_cost_consistency(&model, &inst, &cfg());
    assert_eq!(r.status, CheckStatus::Fail);
    assert!(r.detail.contains("rises upstream"));
    assert!(!r.detail.contains("objective coefficient"));
}

fn failing_base_stock() -> CheckResult {
    check_base_stock(&[vec![0.0, 0.0, 0.0, 0.0, 0.0, 60.0]], &cfg())
}

#[test]
fn applicability_flips_the_verdict() {
    let raw = vec![failing_base_stock()];
    let me1 = combine(raw.clone(), ErrorType::ME1, &cfg());
    assert!(!me1.pass);
    assert!(me1.feedback.ends_with(FEEDBACK_CLOSING));

    let me6 = combine(raw.clone(), ErrorType::ME6, &cfg());
    assert!(me6.pass);
    assert_eq!(me6.result(Check::BaseStock).unwrap().status, CheckStatus::NotApplicable);
    assert!(me6.feedback.is_empty());

    let mut c = cfg();
    c.applicability.insert(ErrorType::ME6, vec![Check::BaseStock]);
    assert!(!combine(raw, ErrorType::ME6, &c).pass);
}

#[test]
fn default_applicability() {
    let c = cfg();
    for e in ErrorType::ALL {
        let applied: Vec<Check> = Check::ALL.into_iter().filter(|&k| c.applies(e, k)).collect();
        let expected = match e {
            ErrorType::ME5 | ErrorType::ME7 | ErrorType::ME8 => vec![Check::CostConsistency],
            ErrorType::ME6 => vec![Check::OrderSmoothing],
            _ => vec![Check::BaseStock, Check::InventoryAllocation, Check::CostConsistency],
        };
        assert_eq!(applied, expected, "{e}");
        assert!(!c.applies(e, Check::Bullwhip));
    }
}

#[test]
fn verdict_lists_every_check_in_order() {
    let v = combine(vec![], ErrorType::ME4, &cfg());
    assert!(v.pass);
    let order: Vec<Check> = v.checks.iter().map(|c| c.check).collect();
    assert_eq!(order, Check::ALL.to_vec());
}

fn series() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..500.0, 2..30)
}

proptest! {
    #[test]
    fn variance_matches_moment_identity(xs in series()) {
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        let second = xs.iter().map(|x| x * x).sum::<f64>() / n;
        let v = variance(&xs);
        prop_assert!((v - (second - m * m)).abs() <= 1e-7 * (1.0 + second));
    }

    #[test]
    fn cv_and_jump_ratio_are_scale_free(xs in series(), k in 0.01f64..100.0) {
        prop_assume!(xs.iter().sum::<f64>() > 1.0);
        let scaled: Vec<f64> = xs.iter().map(|x| x * k).collect();
        let a = coefficient_of_variation(&xs, 1e-9).unwrap();
        let b = coefficient_of_variation(&scaled, 1e-9).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a));
        let a = max_jump_ratio(&xs, 1e-9).unwrap();
        let b = max_jump_ratio(&scaled, 1e-9).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a));
    }

    #[test]
    fn constant_orders_always_smooth(level in 0.1f64..1000.0, t in 2usize..40) {
        let r = check_order_smoothing(&[vec![level; t]], &cfg());
        prop_assert_eq!(r.status, CheckStatus::Pass);
    }

    #[test]
    fn excluded_checks_never_fail(idx in 0usize..10) {
        let e = ErrorType::ALL[idx];
        let raw = vec![failing_base_stock()];
        let v = combine(raw, e, &cfg());
        prop_assert_eq!(v.pass, !cfg().applies(e, Check::BaseStock));
    }
}
