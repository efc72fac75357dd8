#[allow(dead_code)]
mod common;

use chainfix::lp::{check_iis, compute_iis, parse_lp, write_lp, LpModel, SolveStatus, Solver, SolverOptions};
use common::vertex::{brute_force, random_lp, Truth};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn agrees(model: &LpModel<f64>) -> Result<(), String> {
    let out = Solver::<f64>::default().solve(model).map_err(|e| e.to_string())?;
    match (brute_force(model), out.status) {
        (Truth::Infeasible, SolveStatus::Infeasible) | (Truth::Unbounded, SolveStatus::Unbounded) => Ok(()),
        (Truth::Optimal(z), SolveStatus::Optimal) => {
            let got = out.objective.unwrap();
            if (got - z).abs() <= 1e-6 * (1.0 + z.abs()) {
                Ok(())
            } else {
                Err(format!("objective {got} vs vertex optimum {z}"))
            }
        }
        (truth, status) => Err(format!("status {status} vs enumeration {truth:?}")),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn simplex_matches_vertex_enumeration(seed in any::<u64>()) {
        let model = random_lp(&mut ChaCha8Rng::seed_from_u64(seed));
        if let Err(e) = agrees(&model) {
            return Err(TestCaseError::fail(format!("{e}\n{}", write_lp(&model))));
        }
    }

    #[test]
    fn every_certificate_is_irreducible(seed in any::<u64>()) {
        let model = random_lp(&mut ChaCha8Rng::seed_from_u64(seed));
        let opts = SolverOptions::default();
        let out = Solver::new(opts).solve(&model).unwrap();
        prop_assume!(out.status == SolveStatus::Infeasible);
        let cert = compute_iis(&model, &opts).unwrap();
        prop_assert!(!cert.is_empty());
        let check = check_iis(&model, &cert, &opts).unwrap();
        prop_assert!(check.is_valid_iis(), "{:?}\n{}", check, write_lp(&model));
        prop_assert_eq!(compute_iis(&model, &opts).unwrap(), cert);
    }

    #[test]
    fn text_format_preserves_solutions(seed in any::<u64>()) {
        let model = random_lp(&mut ChaCha8Rng::seed_from_u64(seed));
        let back: LpModel<f64> = parse_lp(&write_lp(&model)).unwrap();
        let s = Solver::<f64>::default();
        prop_assert_eq!(s.solve(&model).unwrap(), s.solve(&back).unwrap());
    }
}

#[test]
fn single_precision_agrees_on_status() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..200 {
        let m64 = random_lp(&mut rng);
        let m32: LpModel<f32> = parse_lp(&write_lp(&m64)).unwrap();
        let a = Solver::<f64>::default().solve(&m64).unwrap();
        let b = Solver::<f32>::default().solve(&m32).unwrap();
        assert_eq!(a.status, b.status, "{}", write_lp(&m64));
        if let (Some(x), Some(y)) = (a.objective, b.objective) {
            assert!((x - y as f64).abs() <= 1e-3 * (1.0 + x.abs()));
        }
    }
}
