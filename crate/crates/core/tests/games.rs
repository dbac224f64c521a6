mod common;

use std::sync::Arc;

use common::{binom, q, states_with_phi_at_most};
use expert_minimax::potential::{LogPotential, OptimizedLogPotential, PerfectExpertPotential};
use expert_minimax::sim::{
    estimate_t_b_star, exact_expected_loss, monte_carlo, play_game, t_star, trace_g,
};
use expert_minimax::states::{enumerate_decompositions, successor};
use expert_minimax::strategies::{
    even_split, EvenSplitAdversary, MajorityOfLeaders, MultiplicativeWeights, OptimalAdversary,
    PotentialForecaster, RandomLeader, UniformAdversary,
};
use expert_minimax::{
    lower_bound, perfect_expert_loss, upper_bound, Adversary, ChoiceSet, ExactLoss, ExactSolver,
    Forecaster, LossScalar, MistakeBudget, Potential, SolverConfig, State,
};
use proptest::prelude::*;

fn st(counts: &[u32]) -> State {
    State::new(counts.to_vec()).unwrap()
}

fn log_forecaster(c: f64) -> PotentialForecaster {
    PotentialForecaster::new(Arc::new(LogPotential::new(c).unwrap()), 2).unwrap()
}

fn all_forecasters() -> Vec<Box<dyn Forecaster>> {
    vec![
        Box::new(log_forecaster(2.0)),
        Box::new(PotentialForecaster::new(Arc::new(OptimizedLogPotential), 2).unwrap()),
        Box::new(MultiplicativeWeights::new(0.5).unwrap()),
        Box::new(MajorityOfLeaders),
        Box::new(RandomLeader),
    ]
}

#[test]
fn every_forecast_is_a_probability_vector() {
    for b in [0usize, 1, 2] {
        for counts in states_with_phi_at_most(b, 6) {
            let state = State::new(counts).unwrap();
            for dec in enumerate_decompositions(&state, &ChoiceSet::full(2)) {
                for f in &mut all_forecasters() {
                    let p = f.forecast(&state, &dec).unwrap();
                    assert!(p.probs().iter().all(|&x| (0.0..=1.0).contains(&x)));
                    assert!((p.probs().iter().sum::<f64>() - 1.0).abs() <= 1e-12);
                }
            }
        }
    }
}

proptest! {
    #[test]
    fn even_split_halves_every_level(counts in prop::collection::vec(0u32..200, 1..=5)) {
        prop_assume!(counts.iter().any(|&k| k > 0));
        let state = State::new(counts.clone()).unwrap();
        let dec = even_split(&state);
        for (i, &k) in counts.iter().enumerate() {
            let (a, b) = (dec.votes(0, i), dec.votes(1, i));
            prop_assert_eq!(a + b, k);
            prop_assert!(a.abs_diff(b) <= 1);
        }
    }
}

#[test]
fn lower_bound_below_exact_for_perfect_expert() {
    let mut solver = ExactSolver::with_defaults(MistakeBudget(0)).unwrap();
    for n in 1..=64u32 {
        let lb = lower_bound(n as u64, MistakeBudget(0)).unwrap();
        let lb = ExactLoss::from_f64_lossless(lb).unwrap();
        assert!(lb <= solver.minimax_loss(&st(&[n])).unwrap(), "n = {n}");
    }
    for n in 1..=1024u64 {
        let lb = lower_bound(n, MistakeBudget(0)).unwrap();
        let l: f64 = perfect_expert_loss::<ExactLoss>(n).unwrap().approx();
        assert!(lb <= l && l <= upper_bound(n, MistakeBudget(0)).unwrap(), "n = {n}");
    }
}

#[test]
fn potential_forecaster_never_needs_negative_mass() {
    // Certified potentials keep p_d >= 0 on every (state, dec).
    for c in [1.5, 2.0, 4.0] {
        let mut f = log_forecaster(c);
        for counts in states_with_phi_at_most(1, 10) {
            let state = State::new(counts).unwrap();
            for dec in enumerate_decompositions(&state, &ChoiceSet::full(2)) {
                f.forecast(&state, &dec).unwrap();
            }
        }
    }
}

#[test]
fn optimal_adversary_round_costs_at_least_a_minus_one_over_a() {
    // Against a uniform draw on A, the forecaster's best round loss is (a-1)/a.
    for counts in states_with_phi_at_most(1, 8) {
        let start = State::new(counts).unwrap();
        if start == State::absorbing(MistakeBudget(1)) {
            continue;
        }
        let mut adv = OptimalAdversary::new(&start, SolverConfig::new(MistakeBudget(1))).unwrap();
        let play = adv.play(&start).unwrap();
        let a = play.support.len() as f64;
        assert!(a >= 2.0);
        for f in &mut all_forecasters() {
            let p = f.forecast(&start, &play.dec).unwrap();
            let hit: f64 = play.support.members().iter().map(|&j| p.prob(j)).sum();
            assert!(1.0 - hit / a >= (a - 1.0) / a - 1e-12, "{start}");
        }
    }
}

#[test]
fn transcripts_chain_through_successors() {
    let start = st(&[6, 2]);
    let mut adv = OptimalAdversary::new(&start, SolverConfig::new(MistakeBudget(1))).unwrap();
    for seed in 0..20 {
        for f in &mut all_forecasters() {
            let t = play_game(f.as_mut(), &mut adv, &start, 10_000, seed).unwrap();
            assert!(t.absorbed);
            let mut prev = start.clone();
            for r in &t.rounds {
                assert_eq!(r.state_before, prev);
                let next = successor(&r.state_before, &r.dec, r.outcome).unwrap().unwrap();
                assert_eq!(next, r.state_after);
                assert_eq!(r.loss, u32::from(r.prediction != r.outcome));
                prev = next;
            }
            assert_eq!(t.final_state(), &State::absorbing(MistakeBudget(1)));
        }
    }
}

fn check_mc_against_exact(
    make_f: &(dyn Fn() -> Box<dyn Forecaster> + Sync),
    make_a: &(dyn Fn() -> Box<dyn Adversary> + Sync),
    start: &State,
) {
    let exact = exact_expected_loss(make_f().as_mut(), make_a().as_mut(), start, 64)
        .unwrap()
        .approx();
    let mc = monte_carlo(|| Ok(make_f()), || Ok(make_a()), start, 100_000, 100_000, 2024).unwrap();
    assert!(
        (mc.mean_loss - exact).abs() <= 3.0 * mc.std_error,
        "{start}: mc {} ± {} vs exact {exact}",
        mc.mean_loss,
        mc.std_error
    );
    assert!((mc.mean_expected_loss - exact).abs() <= 3.0 * mc.expected_std_error + 1e-9);
}

#[test]
fn monte_carlo_agrees_with_exact_expectation() {
    let start = st(&[3, 0]);
    let solver = {
        let mut s = ExactSolver::with_defaults(MistakeBudget(1)).unwrap();
        s.solve(&start).unwrap();
        Arc::new(s)
    };
    let optimal = || Box::new(OptimalAdversary::from_solver(solver.clone())) as Box<dyn Adversary>;
    let even = || Box::new(EvenSplitAdversary::new(2).unwrap()) as Box<dyn Adversary>;
    let fc = || Box::new(log_forecaster(2.0)) as Box<dyn Forecaster>;
    let mw = || Box::new(MultiplicativeWeights::new(1.0).unwrap()) as Box<dyn Forecaster>;
    check_mc_against_exact(&fc, &optimal, &start);
    check_mc_against_exact(&mw, &optimal, &start);
    check_mc_against_exact(&fc, &even, &st(&[2, 1]));
    let uniform = || {
        Box::new(UniformAdversary::new(ChoiceSet::parse("1,2", 2).unwrap())) as Box<dyn Adversary>
    };
    check_mc_against_exact(&mw, &uniform, &st(&[1, 2]));
}

#[test]
fn certified_forecaster_sandwich() {
    // l(start) <= E[loss of f's forecaster vs the optimal adversary] <= f(start).
    let certificates: Vec<Arc<dyn Potential<f64>>> = vec![
        Arc::new(LogPotential::new(2.0).unwrap()),
        Arc::new(LogPotential::new(4.0).unwrap()),
        Arc::new(OptimizedLogPotential),
    ];
    for b in [1u32, 2] {
        let mut solver = ExactSolver::with_defaults(MistakeBudget(b)).unwrap();
        for counts in states_with_phi_at_most(b as usize, 6) {
            let start = State::new(counts).unwrap();
            let ell = solver.minimax_loss(&start).unwrap();
            for pot in &certificates {
                let mut f = PotentialForecaster::new(pot.clone(), 2).unwrap();
                let mut adv =
                    OptimalAdversary::new(&start, SolverConfig::new(MistakeBudget(b))).unwrap();
                let v = exact_expected_loss(&mut f, &mut adv, &start, 64).unwrap();
                let bound = ExactLoss::from_f64_lossless(pot.value(&start).unwrap()).unwrap();
                assert!(ell <= v, "{start}");
                assert!(v <= bound, "{start} with {}", pot.name());
            }
        }
    }
}

#[test]
fn perfect_expert_forecaster_is_minimax_optimal() {
    for n in 1..=16u32 {
        let start = st(&[n]);
        let mut f = PotentialForecaster::new(Arc::new(PerfectExpertPotential), 2).unwrap();
        let mut adv = OptimalAdversary::new(&start, SolverConfig::new(MistakeBudget(0))).unwrap();
        let v = exact_expected_loss(&mut f, &mut adv, &start, 64).unwrap();
        assert_eq!(v, perfect_expert_loss::<ExactLoss>(n as u64).unwrap());
    }
}

#[test]
fn even_split_trajectories_follow_the_recurrences() {
    for k in 3..=6u32 {
        let n = 1u32 << k;
        for b in 0..=2u32 {
            for seed in 0..50 {
                let trace = trace_g(n, MistakeBudget(b), 4 * k as usize + 8, seed).unwrap();
                for t in 0..=k as usize {
                    assert_eq!(trace.g(0, t), n >> t);
                }
                for t in 1..=trace.rounds() {
                    let total = |t: usize| trace.rows[t].iter().sum::<u32>();
                    assert!(total(t) <= total(t - 1));
                    for i in 1..=b as usize {
                        let lhs = 2.0 * trace.g(i, t) as f64;
                        let rhs = trace.g(i - 1, t - 1) as f64 + trace.g(i, t - 1) as f64 - 1.0;
                        assert!(lhs >= rhs, "k={k} b={b} seed={seed} t={t} i={i}");
                    }
                }
                for t in 0..=k as usize {
                    for i in 0..=b as usize {
                        let floor = (n as i64 >> t) * binom(t as u64, i as u64) as i64 - (1 << i) + 1;
                        assert!(trace.g(i, t) as i64 >= floor);
                    }
                }
            }
        }
    }
}

#[test]
fn t_star_examples() {
    let s = estimate_t_b_star(32, MistakeBudget(0), 200, 9).unwrap();
    assert!(s.per_trial.iter().all(|t| t.value == 5 && !t.censored));
    let s = estimate_t_b_star(1, MistakeBudget(0), 5, 9).unwrap();
    assert_eq!(s.max, 0);
    let s = estimate_t_b_star(32, MistakeBudget(1), 1000, 9).unwrap();
    assert_eq!(s.censored, 0);
    assert!(s.loss_floor >= lower_bound(32, MistakeBudget(1)).unwrap());
    let trace = trace_g(8, MistakeBudget(0), 10, 0).unwrap();
    assert_eq!(t_star(&trace, 0), 3);
}

#[test]
fn simulate_examples_perfect_expert() {
    let start = st(&[32]);
    let even = || Ok(Box::new(EvenSplitAdversary::new(2)?) as Box<dyn Adversary>);
    let opt = monte_carlo(
        || Ok(Box::new(PotentialForecaster::new(Arc::new(OptimizedLogPotential), 2)?) as Box<dyn Forecaster>),
        even,
        &start,
        10_000,
        10_000,
        5,
    )
    .unwrap();
    assert!((opt.mean_loss - 2.5).abs() <= 3.0 * opt.std_error);
    let mw = monte_carlo(
        || Ok(Box::new(MultiplicativeWeights::new(0.5)?) as Box<dyn Forecaster>),
        even,
        &start,
        10_000,
        10_000,
        5,
    )
    .unwrap();
    assert!(mw.mean_loss >= 2.5 - 3.0 * mw.std_error);
}

#[test]
fn exact_expectation_against_even_split_is_half_per_coin_round() {
    for k in 0..=4u32 {
        let start = st(&[1 << k]);
        for f in &mut all_forecasters() {
            let mut adv = EvenSplitAdversary::new(2).unwrap();
            let v = exact_expected_loss(f.as_mut(), &mut adv, &start, 64).unwrap();
            assert_eq!(v, q(k as i64, 2));
        }
    }
}

#[test]
fn majority_against_optimal_adversary_is_no_better_than_minimax() {
    let start = st(&[4]);
    let mut adv = OptimalAdversary::new(&start, SolverConfig::new(MistakeBudget(0))).unwrap();
    let v = exact_expected_loss(&mut MajorityOfLeaders, &mut adv, &start, 64).unwrap();
    assert!(v >= q(1, 1));
}
