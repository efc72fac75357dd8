#[allow(dead_code)]
mod common;

use chainfix::agents::{run_episode, GreedyAgent, ReplayAgent};
use chainfix::env::*;
use chainfix::lp::{IisCertificate, SolveStatus};
use chainfix::saboteur::ErrorType;
use common::bundle;
use proptest::prelude::*;

fn env_for(e: ErrorType) -> (Environment, Vec<Action>) {
    let b = bundle(e, 0);
    (
        Environment::new(b.to_problem().unwrap(), EnvConfig::default()),
        b.sabotage.ground_truth_fix.clone(),
    )
}

#[test]
fn infeasible_reset_starts_in_debug_with_iis() {
    let (mut env, _) = env_for(ErrorType::ME4);
    let obs = env.reset().unwrap();
    assert_eq!(obs.phase, Phase::Debug);
    assert_eq!(obs.status, SolveStatus::Infeasible);
    assert_eq!(obs.step, 0);
    let iis = obs.iis.as_ref().expect("iis shown on reset");
    assert!(!iis.constraints.is_empty());
    let text = obs.render_text();
    assert!(text.starts_with("## Problem"));
    assert!(text.contains("## IIS (Irreducible Infeasible Subsystem)"));
    assert!(text.trim_end().ends_with("What action should be taken next?"));
}

#[test]
fn iis_can_be_withheld() {
    let b = bundle(ErrorType::ME4, 0);
    let cfg = EnvConfig {
        auto_iis: false,
        ..EnvConfig::default()
    };
    let mut env = Environment::new(b.to_problem().unwrap(), cfg);
    assert!(env.reset().unwrap().iis.is_none());
    assert!(env.step(Action::GetIis).unwrap().iis.is_some());
}

#[test]
fn cost_error_starts_in_validate_with_feedback() {
    let (mut env, _) = env_for(ErrorType::ME5);
    let obs = env.reset().unwrap();
    assert_eq!(obs.phase, Phase::Validate);
    assert_eq!(obs.status, SolveStatus::Optimal);
    let fb = obs.rationality_feedback.as_deref().unwrap();
    assert!(fb.contains("Cost consistency violated"));
    assert!(obs.render_text().contains("## Rationality Check: FAILED"));
}

#[test]
fn ground_truth_replay_scores_full_reward() {
    for e in ErrorType::ALL {
        let b = bundle(e, 0);
        let fix = b.sabotage.ground_truth_fix.clone();
        let r = run_episode(b.to_problem().unwrap(), &mut ReplayAgent::new(fix.clone()), "gt", &EnvConfig::default());
        assert_eq!(r.reward_total, 150.0, "{e}: {:?}", r.terminal_reason);
        assert_eq!(r.terminal_reason, TerminalReason::Rational, "{e}");
        // the model can turn rational before the whole fix has been replayed
        assert!(r.steps_used >= 1 && r.steps_used <= fix.len(), "{e}");
        assert_eq!(r.composite.repair_steps, r.steps_used, "{e}");
        assert_eq!(r.composite.penalty, 0.0, "{e}");
    }
}

#[test]
fn immediate_submit_fails() {
    let (mut env, _) = env_for(ErrorType::ME3);
    env.reset().unwrap();
    let obs = env.step(Action::Submit).unwrap();
    assert!(obs.done);
    let r = env.result().unwrap();
    assert_eq!(r.terminal_reason, TerminalReason::Submitted);
    assert_eq!(r.reward_outcome, -50.0);
    assert_eq!(r.reward_rationality, 0.0);
    assert_eq!(r.reward_total, -50.0);
    assert!(matches!(env.step(Action::GetIis), Err(EnvError::Finished)));
}

#[test]
fn budget_ends_the_episode() {
    let (mut env, _) = env_for(ErrorType::ME2);
    env.reset().unwrap();
    let mut steps = 0;
    loop {
        steps += 1;
        if env.step(Action::GetIis).unwrap().done {
            break;
        }
    }
    assert_eq!(steps, STEP_BUDGET);
    let r = env.result().unwrap();
    assert_eq!(r.terminal_reason, TerminalReason::BudgetExhausted);
    assert_eq!(r.composite.repair_steps, 0);
}

#[test]
fn failed_actions_leave_the_model_alone() {
    let (mut env, _) = env_for(ErrorType::ME4);
    env.reset().unwrap();
    let before = env.model().clone();
    for bad in [
        Action::RelaxConstraint {
            target: "capacity_e9".into(),
            amount: 5.0,
        },
        Action::RelaxConstraint {
            target: "capacity_e1".into(),
            amount: -5.0,
        },
        Action::UpdateObj {
            target: "nothing_here".into(),
            value: 1.0,
        },
        Action::CheckSlack {
            name: "capacity_e1_t1".into(),
        },
    ] {
        let obs = env.step(bad.clone()).unwrap();
        let report = obs.last_action.unwrap();
        assert!(!report.ok, "{bad} should fail");
        assert_eq!(env.model(), &before);
    }
    let r = env.step(Action::Submit).unwrap();
    assert!(r.done);
    // errors in repair actions still count as repair steps
    assert_eq!(env.result().unwrap().composite.repair_steps, 3);
}

#[test]
fn unparseable_messages_consume_steps() {
    let (mut env, _) = env_for(ErrorType::ME4);
    env.reset().unwrap();
    let obs = env.step_invalid("please fix it", "no action").unwrap();
    assert_eq!(obs.step, 1);
    assert!(!obs.last_action.unwrap().ok);
}

#[test]
fn relaxing_an_equality_splits_it() {
    let (mut env, _) = env_for(ErrorType::ME3);
    env.reset().unwrap();
    let row = env.problem().gt_iis.constraint_members[0].clone();
    env.step(Action::RelaxConstraint {
        target: row.clone(),
        amount: 1.0,
    })
    .unwrap();
    let names: Vec<&str> = env.model().constraint_names().collect();
    if names.contains(&format!("{row}_ub").as_str()) {
        assert!(names.contains(&format!("{row}_lb").as_str()));
        assert!(!names.contains(&row.as_str()));
    }
}

#[test]
fn irrational_repairs_loop_back_then_exhaust() {
    let (mut env, _) = env_for(ErrorType::ME5);
    env.reset().unwrap();
    let mut loops = Vec::new();
    for k in 0..=MAX_LOOPS {
        // an objective change that leaves the corrupted coefficient in place
        let obs = env
            .step(Action::UpdateObj {
                target: "x_e1".into(),
                value: 1.0 + k as f64,
            })
            .unwrap();
        loops.push(obs.loop_count);
        if k < MAX_LOOPS {
            assert!(!obs.done);
            assert_eq!(obs.phase, Phase::Debug);
            assert_eq!(obs.transition.as_deref(), Some(format!("Phase: VALIDATE -> DEBUG (loop-back {})", k + 1).as_str()));
        } else {
            assert!(obs.done);
        }
    }
    assert_eq!(loops, vec![1, 2, 3, 3]);
    let r = env.result().unwrap();
    assert_eq!(r.terminal_reason, TerminalReason::LoopsExhausted);
    assert_eq!(r.reward_total, 75.0);
}

#[test]
fn unfaithful_repair_is_penalised_once() {
    let (mut env, fix) = env_for(ErrorType::ME4);
    let clean = run_episode(env.problem().clone(), &mut ReplayAgent::new(fix.clone()), "gt", &EnvConfig::default());
    env.reset().unwrap();
    let gt_rows = env.problem().gt_iis.constraint_members.clone();
    let outside = env
        .model()
        .constraint_names()
        .find(|n| !gt_rows.iter().any(|g| g == n) && n.starts_with("capacity"))
        .unwrap()
        .to_string();
    for _ in 0..2 {
        env.step(Action::RelaxConstraint {
            target: outside.clone(),
            amount: 1.0,
        })
        .unwrap();
    }
    for a in fix {
        if env.step(a).unwrap().done {
            break;
        }
    }
    if !env.is_done() {
        env.step(Action::Submit).unwrap();
    }
    let c = &env.result().unwrap().composite;
    assert_eq!(c.penalty, -20.0);
    assert_eq!(c.diagnosis_accuracy, clean.composite.diagnosis_accuracy);
    assert_eq!(c.repair_steps, clean.composite.repair_steps + 2);
}

#[test]
fn composite_identity_holds_on_greedy_runs() {
    for e in ErrorType::ALL {
        let b = bundle(e, 1);
        let mut agent = GreedyAgent::new(b.instance.mean_demand());
        let r = run_episode(b.to_problem().unwrap(), &mut agent, "greedy", &EnvConfig::default());
        let c = &r.composite;
        let expected = 0.5 * r.reward_outcome + 0.3 * 100.0 * c.diagnosis_accuracy - 0.2 * c.repair_steps as f64 + c.penalty;
        assert!((c.total - expected).abs() < 1e-9, "{e}");
        assert!((0.0..=1.0).contains(&c.diagnosis_accuracy));
        assert!(c.penalty == 0.0 || c.penalty == -20.0);
        assert_eq!(r.reward_total, r.reward_outcome + r.reward_rationality);
        assert!(r.steps_used <= STEP_BUDGET);
        assert!(r.loops_used <= MAX_LOOPS);
    }
}

fn entry(kind: ActionKind, targets: &[&str]) -> TranscriptEntry {
    TranscriptEntry {
        step: 1,
        phase: Phase::Debug,
        kind: Some(kind),
        action: None,
        raw: None,
        reasoning: None,
        ok: true,
        message: String::new(),
        expanded_targets: targets.iter().map(|s| s.to_string()).collect(),
        status: SolveStatus::Infeasible,
        loop_count: 0,
    }
}

fn gt(rows: &[&str]) -> IisCertificate<f64> {
    IisCertificate {
        constraint_members: rows.iter().map(|s| s.to_string()).collect(),
        bound_members: vec![],
    }
}

#[test]
fn composite_worked_examples() {
    let g = gt(&["capacity_e1_t1", "capacity_e1_t2", "inv_balance_e1_t1", "inv_balance_e1_t2"]);
    // two of four rows hit, one repair, outcome +100
    let c = reward::composite(&[entry(ActionKind::RelaxConstraint, &["capacity_e1_t1", "capacity_e1_t2"])], &g, 100.0);
    assert_eq!(c.diagnosis_accuracy, 0.5);
    assert!((c.total - (50.0 + 15.0 - 0.2)).abs() < 1e-12);

    // split equality rows count as their base row; objective updates are exempt
    let c = reward::composite(
        &[
            entry(ActionKind::RelaxConstraint, &["inv_balance_e1_t1_ub", "inv_balance_e1_t1_lb"]),
            entry(ActionKind::UpdateObj, &["hold_e1_t1"]),
            entry(ActionKind::DropConstraint, &["demand_prop_e2_t1"]),
        ],
        &g,
        -50.0,
    );
    assert_eq!(c.diagnosis_accuracy, 0.25);
    assert_eq!(c.repair_steps, 3);
    assert_eq!(c.penalty, -20.0);
    assert!((c.total - (-25.0 + 7.5 - 0.6 - 20.0)).abs() < 1e-12);

    // empty ground truth: full accuracy, no penalty
    let c = reward::composite(&[entry(ActionKind::DropConstraint, &["anything"])], &gt(&[]), 100.0);
    assert_eq!((c.diagnosis_accuracy, c.penalty), (1.0, 0.0));
}

proptest! {
    #[test]
    fn episode_reward_table(optimal in any::<bool>(), rational in any::<bool>(), infeasible in any::<bool>()) {
        let status = if optimal { SolveStatus::Optimal } else if infeasible { SolveStatus::Infeasible } else { SolveStatus::Unbounded };
        let r = reward::episode_reward(status, rational);
        let expected_out = if optimal { 100.0 } else { -50.0 };
        let expected_rat = match (optimal, rational) {
            (true, true) => 50.0,
            (true, false) => -25.0,
            (false, _) => 0.0,
        };
        prop_assert_eq!(r.outcome, expected_out);
        prop_assert_eq!(r.rationality, expected_rat);
        prop_assert_eq!(r.total, expected_out + expected_rat);
    }

    #[test]
    fn composite_bounds(hits in prop::collection::vec(any::<bool>(), 1..12), r_out in prop::sample::select(vec![100.0, -50.0])) {
        let g = gt(&["a_e1_t1", "a_e1_t2", "a_e1_t3"]);
        let entries: Vec<TranscriptEntry> = hits
            .iter()
            .enumerate()
            .map(|(i, &h)| {
                let t = if h { format!("a_e1_t{}", i % 3 + 1) } else { "z_e9_t1".to_string() };
                TranscriptEntry { expanded_targets: vec![t], ..entry(ActionKind::RelaxConstraint, &[]) }
            })
            .collect();
        let c = reward::composite(&entries, &g, r_out);
        let distinct = (0..hits.len()).filter(|&i| hits[i]).map(|i| i % 3).collect::<std::collections::BTreeSet<_>>().len();
        prop_assert_eq!(c.diagnosis_accuracy, distinct as f64 / 3.0);
        prop_assert_eq!(c.penalty, if hits.iter().all(|&h| h) { 0.0 } else { -20.0 });
        prop_assert_eq!(c.repair_steps, hits.len());
    }
}
