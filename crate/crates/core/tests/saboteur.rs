use chainfix::env::apply_repair;
use chainfix::generator::{generate_accepted, GeneratorConfig};
use chainfix::lp::{check_iis, compute_iis, SolveStatus};
use chainfix::oracle::{evaluate, OracleConfig};
use chainfix::saboteur::*;
use chainfix::sc::build_lp;
use chainfix::{Model, Solver, SolverOptions};

/// First source seed whose tightened baseline passes the checks of `e`, injected.
fn injected(e: ErrorType) -> (chainfix::sc::ScInstance, Tightening, Model, SabotageRecord) {
    let solver = Solver::default();
    let oracle = OracleConfig::default();
    for seed in 0..200u64 {
        let (inst, _, _) = generate_accepted(&GeneratorConfig::default(), seed, &solver).unwrap();
        let Ok((tm, tg, base)) = tighten(&inst, &solver) else { continue };
        if !evaluate(&tm, &base, &inst, e, &oracle).unwrap().pass {
            continue;
        }
        if let Ok((m, rec)) = inject(&tm, &inst, &tg, e, seed, &solver, &oracle) {
            return (inst, tg, m, rec);
        }
    }
    panic!("no {e} injection in 200 sources");
}

#[test]
fn tightening_keeps_the_optimum() {
    let solver = Solver::default();
    for seed in 0..20 {
        let (inst, _, _) = generate_accepted(&GeneratorConfig::default(), seed, &solver).unwrap();
        let base: Model = build_lp(&inst).unwrap();
        let z0 = solver.solve(&base).unwrap().objective.unwrap();
        let Ok((tm, tg, _)) = tighten(&inst, &solver) else { continue };
        let z1 = solver.solve(&tm).unwrap().objective.unwrap();
        assert!((z0 - z1).abs() <= 1e-6 * z0.abs().max(1.0));
        assert_eq!(tg.backorder_cap.len(), inst.n_echelons);
        assert!(tg.supply_cap > 0.0);
        assert!(tm.constraint_names().count() > base.constraint_names().count());
    }
}

#[test]
fn every_type_breaks_the_model_as_intended() {
    let solver = Solver::default();
    let opts = SolverOptions::default();
    let oracle = OracleConfig::default();
    for e in ErrorType::ALL {
        let (inst, tg, model, rec) = injected(e);
        assert_eq!(rec.error_type, e);
        assert_eq!(error_type_of(&rec.perturbation), e);
        assert_eq!(rebuild(&inst, &tg, &rec.perturbation).unwrap(), model, "{e}");
        assert_eq!(rec.ground_truth_fix, ground_truth_fix(&rec.perturbation));

        let out = solver.solve(&model).unwrap();
        if e.keeps_feasibility() {
            assert_eq!(out.status, SolveStatus::Optimal, "{e}");
            assert!(!evaluate(&model, &out, &inst, e, &oracle).unwrap().pass, "{e}");
            assert!(rec.gt_iis.is_empty());
        } else {
            assert_eq!(out.status, SolveStatus::Infeasible, "{e}");
            assert_eq!(compute_iis(&model, &opts).unwrap(), rec.gt_iis, "{e}");
            assert!(check_iis(&model, &rec.gt_iis, &opts).unwrap().is_valid_iis(), "{e}");
        }

        let mut fixed = model.clone();
        for a in &rec.ground_truth_fix {
            apply_repair(&mut fixed, a).unwrap();
        }
        let out = solver.solve(&fixed).unwrap();
        assert_eq!(out.status, SolveStatus::Optimal, "{e}");
        assert!(evaluate(&fixed, &out, &inst, e, &oracle).unwrap().pass, "{e}");
    }
}

#[test]
fn balance_target_row_is_added_beside_the_original() {
    let (_, _, model, rec) = injected(ErrorType::ME3);
    let Perturbation::BalanceTarget { row, value, .. } = &rec.perturbation else {
        panic!("{:?}", rec.perturbation)
    };
    assert!(row.ends_with("_target"));
    assert!(*value < 0.0);
    let base = row.trim_end_matches("_target");
    let names: Vec<&str> = model.constraint_names().collect();
    assert!(names.contains(&row.as_str()) && names.contains(&base));
}

#[test]
fn windowed_types_touch_at_most_four_periods() {
    for e in [ErrorType::ME1, ErrorType::ME10] {
        let (_, _, _, rec) = injected(e);
        assert!(!rec.target.periods.is_empty() && rec.target.periods.len() <= WINDOW, "{e}");
        assert_eq!(rec.ground_truth_fix.len(), rec.target.periods.len(), "{e}");
        if e == ErrorType::ME10 {
            assert!(rec.target.periods[0] >= 2);
        }
    }
}

#[test]
fn verification_replays_to_full_reward() {
    for e in [ErrorType::ME2, ErrorType::ME5, ErrorType::ME9] {
        let (inst, _, model, rec) = injected(e);
        let v = verify(&model, &inst, &rec, "desc", &Default::default()).unwrap();
        assert!(v.passed, "{e}: {:?}", v.diagnostics);
        assert_eq!(v.replay_reward, 150.0);
    }
}
