//! Independent oracles shared by the integration and acceptance tests.
#![allow(dead_code)]

use std::sync::Arc;

use ltlf_bt::ltlf::{Alphabet, Formula, StateVector, Trace, FALSE, TRUE};
use ltlf_bt::planners::Mdp;
use rand::Rng;

/// Direct reading of the LTLf semantics, with no memoization.
pub fn naive_eval(f: &Formula, trace: &Trace, i: usize) -> bool {
    let n = trace.len();
    match f {
        Formula::Atom { name } if name == TRUE => true,
        Formula::Atom { name } if name == FALSE => false,
        Formula::Atom { name } => trace.states()[i].get(name).unwrap(),
        Formula::Not { arg } => !naive_eval(arg, trace, i),
        Formula::And { lhs, rhs } => naive_eval(lhs, trace, i) && naive_eval(rhs, trace, i),
        Formula::Or { lhs, rhs } => naive_eval(lhs, trace, i) || naive_eval(rhs, trace, i),
        Formula::Next { arg } => i + 1 < n && naive_eval(arg, trace, i + 1),
        Formula::Finally { arg } => (i..n).any(|j| naive_eval(arg, trace, j)),
        Formula::Globally { arg } => (i..n).all(|j| naive_eval(arg, trace, j)),
        Formula::Until { lhs, rhs } => {
            (i..n).any(|j| naive_eval(rhs, trace, j) && (i..j).all(|k| naive_eval(lhs, trace, k)))
        }
    }
}

pub fn random_formula<R: Rng>(rng: &mut R, atoms: &[&str], depth: usize) -> Formula {
    if depth == 0 || rng.random_bool(0.25) {
        return match rng.random_range(0..10) {
            0 => Formula::tt(),
            1 => Formula::ff(),
            _ => Formula::atom(atoms[rng.random_range(0..atoms.len())]),
        };
    }
    let sub = |rng: &mut R| random_formula(rng, atoms, depth - 1);
    match rng.random_range(0..8) {
        0 => Formula::not(sub(rng)),
        1 => Formula::next(sub(rng)),
        2 => Formula::finally(sub(rng)),
        3 => Formula::globally(sub(rng)),
        4 => Formula::and(sub(rng), sub(rng)),
        5 => Formula::or(sub(rng), sub(rng)),
        _ => Formula::until(sub(rng), sub(rng)),
    }
}

pub fn random_trace<R: Rng>(rng: &mut R, alphabet: &Arc<Alphabet>, max_len: usize) -> Trace {
    let len = rng.random_range(1..=max_len);
    let states = (0..len)
        .map(|_| {
            let values = (0..alphabet.len()).map(|_| rng.random_bool(0.5)).collect();
            StateVector::from_values(alphabet.clone(), values).unwrap()
        })
        .collect();
    Trace::from_states(states).unwrap()
}

/// Value iteration to a sup-norm change below `tol`, then the greedy
/// policy with ties to the lowest action index.
pub fn value_iteration_policy(mdp: &Mdp, gamma: f64, tol: f64) -> Vec<usize> {
    let n = mdp.n_states();
    let q = |s: usize, a: usize, v: &[f64]| {
        mdp.reward(s, a) + gamma * (0..n).map(|t| mdp.transition(s, a, t) * v[t]).sum::<f64>()
    };
    let mut v = vec![0.0; n];
    loop {
        let next: Vec<f64> = (0..n)
            .map(|s| {
                (0..mdp.n_actions())
                    .map(|a| q(s, a, &v))
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect();
        let delta = next
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        v = next;
        if delta < tol {
            break;
        }
    }
    (0..n)
        .map(|s| {
            let qs: Vec<f64> = (0..mdp.n_actions()).map(|a| q(s, a, &v)).collect();
            let best = qs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            qs.iter().position(|x| *x >= best - 1e-9).unwrap()
        })
        .collect()
}
