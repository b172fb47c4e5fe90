mod common;

use common::{rel_err, rng, stable_diff};
use proptest::prelude::*;
use rand::Rng;
use sfl_core::sfl::forward;
use sfl_core::task::loss;
use sfl_core::{parse, Constraint, Expr, GateMode, Jet, SflConfig, SflParams, TaskKind, TaskSpec};

fn exact(m: i32) -> Expr<f64> {
    parse(match m {
        0 => "1 - x*x/6",
        1 => "sin(x)/x",
        _ => "1/sqrt(1 + x*x/3)",
    })
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn exact_solutions_have_tiny_l1(m in prop::sample::select(vec![0, 1, 5]), seed in any::<u64>()) {
        let task = TaskSpec::<f64>::lane_emden(m);
        let f = exact(m);
        let (d1, d2) = (f.differentiate(), f.differentiate().differentiate());
        let mut r = rng(seed);
        let batch: Vec<f64> = (0..64).map(|_| r.random_range(0.05..10.0)).collect();
        let l1: f64 = batch
            .iter()
            .map(|&x| task.residual_at(x, Jet::new(f.eval(x), d1.eval(x), d2.eval(x))).powi(2))
            .sum::<f64>()
            / batch.len() as f64;
        prop_assert!(l1 < 1e-10, "m={m}: {l1}");
    }

    #[test]
    fn lambda_scales_only_the_constraint_term(seed in any::<u64>()) {
        let mut r = rng(seed);
        let cfg = SflConfig::new(2).with_division();
        let p = SflParams::init(&cfg, &mut r);
        let batch = TaskSpec::<f64>::lane_emden(2).sample_domain(32, &mut r).unwrap();
        let mut t1 = TaskSpec::<f64>::lane_emden(2);
        let mut t2 = t1.clone();
        t1.lambda = 1.0;
        t2.lambda = 2.0;
        for mode in [GateMode::Soft, GateMode::Discrete] {
            let a = loss(&t1, &p, &cfg, mode, &batch, true).unwrap();
            let b = loss(&t2, &p, &cfg, mode, &batch, true).unwrap();
            prop_assume!(a.err.is_finite() && b.err.is_finite());
            prop_assert_eq!(a.l2, b.l2);
            prop_assert!(rel_err(b.err - a.err, a.l2, 1e-300) < 1e-12 * (1.0 + a.l1 / a.l2.max(1e-300)));
        }
    }

    #[test]
    fn constraints_outside_the_domain_count(seed in any::<u64>()) {
        let mut r = rng(seed);
        let cfg = SflConfig::new(2);
        let p = SflParams::init(&cfg, &mut r);
        let task = TaskSpec::<f64>::lane_emden(0);
        prop_assert!(task.domain.0 > 0.0);
        let l = loss(&task, &p, &cfg, GateMode::Soft, &[1.0], true).unwrap();
        let j = forward(&p, &cfg, 0.0, GateMode::Soft);
        let want = (j.v - 1.0).powi(2) + j.d1.powi(2);
        prop_assert!(rel_err(l.l2, want, 1e-300) < 1e-12);
        let without = loss(&task, &p, &cfg, GateMode::Soft, &[1.0], false).unwrap();
        prop_assert_eq!(without.l2, 0.0);
    }

    #[test]
    fn loss_gradient_matches_finite_differences(seed in any::<u64>(), discrete in any::<bool>()) {
        let mut r = rng(seed);
        let cfg = SflConfig::new(2).with_division();
        let p = SflParams::init(&cfg, &mut r);
        let pi = std::f64::consts::PI;
        let tasks = [
            TaskSpec::<f64>::lane_emden(2),
            TaskSpec::new(TaskKind::Integrate, "cos(x)", (-pi, pi), vec![], 1.0).unwrap(),
            TaskSpec::new(
                TaskKind::Ode,
                "y2 + y",
                (0.0, pi),
                vec![Constraint::new(0.0, 0, 0.0), Constraint::new(0.0, 1, 1.0)],
                0.5,
            )
            .unwrap(),
        ];
        let mode = if discrete { GateMode::Discrete } else { GateMode::Soft };
        for task in &tasks {
            let batch = task.sample_domain(8, &mut r).unwrap();
            let l = loss(task, &p, &cfg, mode, &batch, true).unwrap();
            prop_assume!(!l.diverged && l.nonfinite == 0 && l.err < 1e6);
            for i in 0..p.len() {
                let fd = stable_diff(
                    |t| {
                        let mut q = p.clone();
                        q.as_mut_slice()[i] = t;
                        loss(task, &q, &cfg, mode, &batch, true).unwrap().err
                    },
                    p.as_slice()[i],
                );
                let e = rel_err(l.grads[i], fd, 1e-7 * (1.0 + l.err));
                prop_assert!(e < 1e-5, "{:?} slot {i}: {} vs {fd}", task.kind, l.grads[i]);
            }
        }
    }
}
