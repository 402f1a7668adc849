//! Acceptance suite: one PASS/FAIL line per criterion.

mod common;

use std::sync::Arc;
use std::time::Instant;

use ltlf_bt::bt::{BehaviorTree, ConditionRole};
use ltlf_bt::compiler::compile_mission_tree;
use ltlf_bt::experiments::{
    run_cell, run_keydoor, run_learning, summarize, LearningConfig, Mode, ScenarioScript,
    SweepConfig,
};
use ltlf_bt::gridworld::{GridConfig, Phase, Rewards};
use ltlf_bt::ltlf::{evaluate, parse_formula, Alphabet, Formula};
use ltlf_bt::mission::{expand_mission, MissionConfig};
use ltlf_bt::planners::{
    derive_seed, evaluate_policy, feedback_update, policy_iteration, EvalConfig, Policy, Selection,
};
use ltlf_bt::verify::{
    bind_idle, check_inclusion, check_mission, fuzz_alphabet, random_mission, remove_conditions,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn soundness() -> Outcome {
    let bound = 5;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let cfg = MissionConfig::new(bound as u32, 1, fuzz_alphabet()).unwrap();
    let (mut violations, mut bad_missions, mut successes) = (0, 0, 0);
    let mut mutated_violations = 0;
    let mut first_cex = None;
    for _ in 0..50 {
        let mission = random_mission(&mut rng, 3);
        let report = check_mission(&mission, &cfg, bound).unwrap();
        successes += report.n_bt_success_traces;
        if report.n_violations > 0 {
            violations += report.n_violations;
            bad_missions += 1;
            first_cex.get_or_insert_with(|| format!("{mission} on {}", report.counterexamples[0]));
        }
        let root = compile_mission_tree(&mission, &cfg).unwrap();
        let mutated = remove_conditions(&root, ConditionRole::GlobalConstraint);
        let mut tree = BehaviorTree::new(mutated, Arc::new(fuzz_alphabet())).unwrap();
        bind_idle(&mut tree);
        let formula = expand_mission(&mission).unwrap();
        mutated_violations += check_inclusion(&tree, &formula, bound)
            .unwrap()
            .n_violations;
    }

    let (mut episodes, mut grid_violations) = (0, 0);
    let settings = SweepConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for i in 0..100u64 {
        let grid = GridConfig {
            p_in: settings.p_in[rng.random_range(0..settings.p_in.len())],
            rewards: Rewards {
                other: settings.r_other[rng.random_range(0..settings.r_other.len())],
                good: settings.r_good[rng.random_range(0..settings.r_good.len())],
                fire: settings.r_fire[rng.random_range(0..settings.r_fire.len())],
            },
            ..GridConfig::default()
        };
        let (cheese, home, selection) = if i % 2 == 0 {
            let plan = |phase| {
                let r = policy_iteration(&grid.analytic_mdp(phase), 0.9, 1000).unwrap();
                Policy::deterministic(&r.actions, 4)
            };
            (plan(Phase::Cheese), plan(Phase::Home), Selection::Argmax)
        } else {
            (
                Policy::uniform(16, 4),
                Policy::uniform(16, 4),
                Selection::Sample,
            )
        };
        let eval = EvalConfig {
            n_trials: 100,
            theta: (i % 3) as u32,
            selection,
            seed: derive_seed(77, i),
            ..EvalConfig::default()
        };
        let out = evaluate_policy(&grid, &cheese, &home, &eval).unwrap();
        episodes += out.n_trials;
        grid_violations += out.violations;
    }

    let pass = violations == 0 && grid_violations == 0 && mutated_violations > 0;
    let mut detail = format!(
        "fuzz: {violations} violations in {bad_missions}/50 missions ({successes} successful traces); \
         grid: {grid_violations} violations in {episodes} episodes; \
         GC removed: {mutated_violations} violations"
    );
    if let Some(cex) = first_cex {
        detail.push_str(&format!("; first counterexample: {cex}"));
    }
    Outcome { pass, detail }
}

fn parser_semantics() -> Outcome {
    let atoms = ["a", "b", "c"];
    let alphabet = Arc::new(Alphabet::new(atoms).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut round_trip_failures = 0;
    for _ in 0..10_000 {
        let f = common::random_formula(&mut rng, &atoms, 6);
        if parse_formula(&f.to_string()).ok().as_ref() != Some(&f) {
            round_trip_failures += 1;
        }
    }
    let mut identity_failures = 0;
    for _ in 0..1_000 {
        let phi = common::random_formula(&mut rng, &atoms, 3);
        let psi = common::random_formula(&mut rng, &atoms, 3);
        let trace = common::random_trace(&mut rng, &alphabet, 6);
        let weak_next = |f: Formula| Formula::not(Formula::next(Formula::not(f)));
        let pairs = [
            (
                Formula::finally(phi.clone()),
                Formula::or(phi.clone(), Formula::next(Formula::finally(phi.clone()))),
            ),
            (
                Formula::globally(phi.clone()),
                Formula::and(phi.clone(), weak_next(Formula::globally(phi.clone()))),
            ),
            (
                Formula::until(phi.clone(), psi.clone()),
                Formula::or(
                    psi.clone(),
                    Formula::and(phi.clone(), Formula::next(Formula::until(phi.clone(), psi))),
                ),
            ),
            (
                Formula::globally(phi.clone()),
                Formula::not(Formula::finally(Formula::not(phi))),
            ),
        ];
        for i in 0..trace.len() {
            for (lhs, rhs) in &pairs {
                if evaluate(lhs, &trace, i).unwrap() != evaluate(rhs, &trace, i).unwrap() {
                    identity_failures += 1;
                }
            }
        }
    }
    Outcome {
        pass: round_trip_failures == 0 && identity_failures == 0,
        detail: format!(
            "{round_trip_failures}/10000 round-trip failures, {identity_failures} unrolling mismatches over 1000 pairs"
        ),
    }
}

fn policy_iteration_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let settings = 25;
    let mut disagreements = 0;
    for _ in 0..settings {
        let grid = GridConfig {
            p_in: rng.random_range(0.3..=1.0),
            rewards: Rewards {
                other: rng.random_range(-2.0..0.0),
                good: rng.random_range(0.1..10.0),
                fire: rng.random_range(-10.0..0.0),
            },
            ..GridConfig::default()
        };
        let gamma = rng.random_range(0.5..0.99);
        for phase in [Phase::Cheese, Phase::Home] {
            let mdp = grid.analytic_mdp(phase);
            let pi = policy_iteration(&mdp, gamma, 1000).unwrap().actions;
            let vi = common::value_iteration_policy(&mdp, gamma, 1e-10);
            disagreements += pi.iter().zip(&vi).filter(|(a, b)| a != b).count();
        }
    }
    Outcome {
        pass: disagreements == 0,
        detail: format!("{settings} settings x 2 phases, {disagreements} state disagreements"),
    }
}

fn reward_trend() -> Outcome {
    let cfg = SweepConfig {
        n_trials: 500,
        seed: 9,
        ..SweepConfig::default()
    };
    let cell = |other| ltlf_bt::experiments::sweep::SweepCell {
        rewards: Rewards {
            other,
            good: 1.0,
            fire: -1.0,
        },
        p_in: 0.9,
    };
    let mild = run_cell(&cfg, 0, cell(-0.04), derive_seed(9, 0)).unwrap();
    let harsh = run_cell(&cfg, 1, cell(-1.5), derive_seed(9, 1)).unwrap();
    let gap = mild.success_probability - harsh.success_probability;
    Outcome {
        pass: gap >= 0.2 && harsh.mean_trace_length < mild.mean_trace_length,
        detail: format!(
            "r_other=-0.04: success {:.3}, length {:.2}; r_other=-1.5: success {:.3}, length {:.2}",
            mild.success_probability,
            mild.mean_trace_length,
            harsh.success_probability,
            harsh.mean_trace_length
        ),
    }
}

fn learning_properties() -> Outcome {
    let cfg = LearningConfig {
        seed: 17,
        ..LearningConfig::default()
    };
    let rows = run_learning(&cfg).unwrap();
    let summary = summarize(&rows);
    let at = |p: f64| summary.iter().find(|s| s.p_in == p).unwrap();
    let inference_beats_learning = summary
        .iter()
        .all(|s| s.inference_success >= s.learning_success);
    let longer_when_slippery = at(0.6).learning_trace_length > at(0.95).learning_trace_length;
    let good_inference = at(0.95).inference_success >= 0.8;
    let violations: usize = summary.iter().map(|s| s.violations).sum();
    let detail = summary
        .iter()
        .map(|s| {
            format!(
                "p_in={}: learn {:.3}/len {:.1}, infer {:.3}/len {:.1}",
                s.p_in,
                s.learning_success,
                s.learning_trace_length,
                s.inference_success,
                s.inference_trace_length
            )
        })
        .collect::<Vec<_>>()
        .join("; ");
    Outcome {
        pass: inference_beats_learning && longer_when_slippery && good_inference && violations == 0,
        detail: format!("{detail}; violations {violations}"),
    }
}

fn key_door() -> Outcome {
    let script = ScenarioScript {
        seed: 1,
        ..ScenarioScript::default()
    };
    let base = run_keydoor(&script, Mode::Baseline).unwrap();
    let bt = run_keydoor(&script, Mode::Bt).unwrap();
    let irreversible = run_keydoor(
        &ScenarioScript {
            reversible: false,
            ..script.clone()
        },
        Mode::Bt,
    )
    .unwrap();
    let pass = base.undisturbed_successes == 10
        && bt.undisturbed_successes == 10
        && base.disturbed == 15
        && base.disturbed_successes == 0
        && bt.disturbed_successes >= 12;
    Outcome {
        pass,
        detail: format!(
            "undisturbed baseline {}/10, bt {}/10; disturbed baseline {}/15, bt {}/15; irreversible bt {}/15",
            base.undisturbed_successes,
            bt.undisturbed_successes,
            base.disturbed_successes,
            bt.disturbed_successes,
            irreversible.disturbed_successes
        ),
    }
}

fn feedback_examples() -> Outcome {
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12;
    let mut p = Policy::uniform(1, 4);
    feedback_update(&mut p, &[(0, 0)], 1.0, 0.9, 1e-3);
    let first = p
        .row(0)
        .iter()
        .zip([0.625, 0.125, 0.125, 0.125])
        .all(|(a, b)| close(*a, b));

    let mut p = Policy::uniform(1, 4);
    feedback_update(&mut p, &[(0, 0)], -1.0, 0.9, 1e-3);
    let total = 0.751;
    let second =
        close(p.row(0)[0], 1e-3 / total) && p.row(0)[1..].iter().all(|x| close(*x, 0.25 / total));

    let mut p = Policy::uniform(3, 4);
    feedback_update(&mut p, &[(0, 0), (1, 0), (2, 0)], 1.0, 0.9, 1e-3);
    let third = [0.81, 0.9, 1.0]
        .iter()
        .enumerate()
        .all(|(s, inc)| close(p.row(s)[0] * (1.0 + inc) - 0.25, *inc));
    Outcome {
        pass: first && second && third,
        detail: format!("uniform +1: {first}, clamp on -1: {second}, discount ladder: {third}"),
    }
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 7] = [
        ("1 soundness", soundness),
        ("2 parser and semantics", parser_semantics),
        ("3 policy iteration oracle", policy_iteration_oracle),
        ("4 reward trend", reward_trend),
        ("5 learning properties", learning_properties),
        ("6 key-door", key_door),
        ("7 feedback update", feedback_examples),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let start = Instant::now();
        let outcome = run();
        if !outcome.pass {
            failed += 1;
        }
        println!(
            "{} criterion {name} ({:.1}s): {}",
            if outcome.pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            outcome.detail
        );
    }
    println!("{} of 7 criteria passed", 7 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
