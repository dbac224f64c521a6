//! Game execution, Monte Carlo summaries, the exact expectation for fixed
//! strategies, and the `g_i(t)` / `t_b*` instrumentation of the even-split
//! adversary.
//!
//! Randomness comes from ChaCha8 keyed by the game seed. The forecaster and
//! the adversary draw from separate streams and every round reads from its
//! own block offset, so extra draws by one role never shift the other.

use std::collections::HashMap;
use std::io::Write;

use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::states::{phi, successor, Decomposition, MistakeBudget, State};
use crate::strategies::{Adversary, EvenSplitAdversary, ForecastDistribution, Forecaster};

const FORECASTER_STREAM: u64 = 1;
const ADVERSARY_STREAM: u64 = 2;

/// Uniform draw in `[0, 1)` for `(seed, role, round)`.
fn draw(seed: u64, stream: u64, round: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng.set_word_pos(round as u128 * 16);
    rng.random::<f64>()
}

/// Per-game seed for trial `trial` of a batch seeded with `seed`.
pub fn trial_seed(seed: u64, trial: usize) -> u64 {
    // splitmix64 finaliser
    let mut z = seed.wrapping_add((trial as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Clone, Debug, PartialEq)]
pub struct RoundRecord {
    /// 1-based.
    pub round: usize,
    pub state_before: State,
    pub dec: Decomposition,
    pub forecast: ForecastDistribution,
    /// 0-based drawn prediction.
    pub prediction: usize,
    /// 0-based correct choice.
    pub outcome: usize,
    pub loss: u32,
    /// `1 - p_outcome`.
    pub expected_loss: f64,
    pub state_after: State,
    pub coin_flip: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Transcript {
    pub start: State,
    pub rounds: Vec<RoundRecord>,
    /// Ended at `(0, …, 0, 1)` rather than at the round cap.
    pub absorbed: bool,
}

pub const TRANSCRIPT_HEADER: [&str; 9] = [
    "round",
    "state_before",
    "dec",
    "forecast_probs",
    "forecast",
    "outcome",
    "loss",
    "state_after",
    "coinflip",
];

impl Transcript {
    pub fn total_loss(&self) -> u64 {
        self.rounds.iter().map(|r| r.loss as u64).sum()
    }

    pub fn expected_loss(&self) -> f64 {
        self.rounds.iter().map(|r| r.expected_loss).sum()
    }

    pub fn final_state(&self) -> &State {
        self.rounds.last().map_or(&self.start, |r| &r.state_after)
    }

    /// One CSV row per round; choices are 1-based.
    pub fn write_csv(&self, w: impl Write) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(TRANSCRIPT_HEADER)?;
        for r in &self.rounds {
            out.write_record([
                r.round.to_string(),
                r.state_before.to_colon_string(),
                r.dec.to_part_string(),
                r.forecast.to_string(),
                (r.prediction + 1).to_string(),
                (r.outcome + 1).to_string(),
                r.loss.to_string(),
                r.state_after.to_colon_string(),
                u8::from(r.coin_flip).to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

fn pick(probs: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (j, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return j;
        }
    }
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(probs.len() - 1)
}

/// Plays until the absorbing state or `max_rounds`, whichever comes first.
pub fn play_game(
    forecaster: &mut dyn Forecaster,
    adversary: &mut dyn Adversary,
    start: &State,
    max_rounds: usize,
    seed: u64,
) -> Result<Transcript> {
    if max_rounds == 0 {
        return Err(Error::Config("max_rounds must be at least 1".into()));
    }
    let d = adversary.d();
    let mut state = start.clone();
    let mut rounds = Vec::new();
    for round in 1..=max_rounds {
        if state.is_absorbing() {
            break;
        }
        let protocol = |msg: String| Error::Protocol { round, msg };
        let play = adversary.play(&state)?;
        if play.dec.d() != d || play.support.d() != d {
            return Err(protocol(format!("move uses {} choices, expected {d}", play.dec.d())));
        }
        play.dec
            .validate(&state)
            .map_err(|e| protocol(e.to_string()))?;
        let forecast = forecaster.forecast(&state, &play.dec)?;
        if forecast.d() != d {
            return Err(protocol(format!("forecast has {} entries", forecast.d())));
        }
        let prediction = pick(forecast.probs(), draw(seed, FORECASTER_STREAM, round));
        let members = play.support.members();
        let u = draw(seed, ADVERSARY_STREAM, round);
        let outcome = members[((u * members.len() as f64) as usize).min(members.len() - 1)];
        let next = successor(&state, &play.dec, outcome)?
            .ok_or_else(|| protocol(format!("outcome {} empties the state", outcome + 1)))?;
        forecaster.observe(&state, &play.dec, outcome);
        rounds.push(RoundRecord {
            round,
            state_before: state.clone(),
            expected_loss: 1.0 - forecast.prob(outcome),
            dec: play.dec,
            forecast,
            prediction,
            outcome,
            loss: u32::from(prediction != outcome),
            state_after: next.clone(),
            coin_flip: play.coin_flip,
        });
        state = next;
    }
    Ok(Transcript {
        start: start.clone(),
        absorbed: state.is_absorbing(),
        rounds,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct MonteCarloSummary {
    pub trials: usize,
    pub mean_loss: f64,
    pub std_error: f64,
    /// Mean of the per-game sums of `1 - p_outcome`.
    pub mean_expected_loss: f64,
    pub expected_std_error: f64,
    /// Games that hit the round cap before absorbing.
    pub censored: usize,
}

fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Runs `trials` independent games in parallel; results are reduced in
/// trial order, so the summary does not depend on scheduling.
pub fn monte_carlo<F, A>(
    make_forecaster: F,
    make_adversary: A,
    start: &State,
    trials: usize,
    max_rounds: usize,
    seed: u64,
) -> Result<MonteCarloSummary>
where
    F: Fn() -> Result<Box<dyn Forecaster>> + Sync,
    A: Fn() -> Result<Box<dyn Adversary>> + Sync,
{
    if trials == 0 {
        return Err(Error::Config("trials must be at least 1".into()));
    }
    let games: Vec<(f64, f64, bool)> = (0..trials)
        .into_par_iter()
        .map_init(
            || (make_forecaster(), make_adversary()),
            |(f, a), t| {
                let f = f.as_mut().map_err(|e| Error::Config(e.to_string()))?;
                let a = a.as_mut().map_err(|e| Error::Config(e.to_string()))?;
                let tr = play_game(f.as_mut(), a.as_mut(), start, max_rounds, trial_seed(seed, t))?;
                Ok((tr.total_loss() as f64, tr.expected_loss(), tr.absorbed))
            },
        )
        .collect::<Result<_>>()?;
    let losses: Vec<f64> = games.iter().map(|g| g.0).collect();
    let expected: Vec<f64> = games.iter().map(|g| g.1).collect();
    let (mean_loss, std_error) = mean_and_se(&losses);
    let (mean_expected_loss, expected_std_error) = mean_and_se(&expected);
    Ok(MonteCarloSummary {
        trials,
        mean_loss,
        std_error,
        mean_expected_loss,
        expected_std_error,
        censored: games.iter().filter(|g| !g.2).count(),
    })
}

/// Exact expected loss of a stationary forecaster against a stationary
/// adversary, by recursion over every outcome branch.
///
/// Forecast probabilities are converted to rationals exactly (the last
/// entry absorbs rounding so each forecast sums to one). A branch that
/// returns to the same state is solved in closed form.
pub fn exact_expected_loss(
    forecaster: &mut dyn Forecaster,
    adversary: &mut dyn Adversary,
    start: &State,
    phi_cap: u64,
) -> Result<BigRational> {
    if !forecaster.is_stationary() {
        return Err(Error::Config(format!(
            "{} is not stationary; exact expectation needs a state-based forecaster",
            forecaster.name()
        )));
    }
    if phi(start) > phi_cap {
        return Err(Error::ResourceLimit {
            phi: phi(start),
            cap: phi_cap,
        });
    }
    let mut memo = HashMap::new();
    expected_from(forecaster, adversary, start, &mut memo)
}

fn expected_from(
    forecaster: &mut dyn Forecaster,
    adversary: &mut dyn Adversary,
    state: &State,
    memo: &mut HashMap<State, BigRational>,
) -> Result<BigRational> {
    if state.is_absorbing() {
        return Ok(BigRational::zero());
    }
    if let Some(v) = memo.get(state) {
        return Ok(v.clone());
    }
    let play = adversary.play(state)?;
    play.dec.validate(state)?;
    let probs = forecaster.forecast(state, &play.dec)?.to_exact();
    let members = play.support.members();
    let m = BigRational::from_integer(members.len().into());

    let mut round_loss = BigRational::zero();
    let mut rest = BigRational::zero();
    let mut looped = false;
    for &o in members {
        round_loss += BigRational::one() - &probs[o];
        let next = successor(state, &play.dec, o)?.ok_or_else(|| {
            Error::Internal(format!("adversary support empties {state} on {}", o + 1))
        })?;
        if &next == state {
            looped = true;
        } else {
            rest += expected_from(forecaster, adversary, &next, memo)?;
        }
    }
    if play.coin_flip && members.len() == 2 && probs.len() == 2 {
        let half = BigRational::new(1.into(), 2.into());
        if &round_loss / &m != half {
            return Err(Error::Internal(format!(
                "coin-flip round at {state} has expected loss {} instead of 1/2",
                &round_loss / &m
            )));
        }
    }
    let value = if looped {
        if members.len() == 1 {
            if round_loss.is_zero() {
                BigRational::zero()
            } else {
                return Err(Error::Internal(format!(
                    "{state} loops forever with positive loss"
                )));
            }
        } else {
            (round_loss + rest) / (m - BigRational::one())
        }
    } else {
        (round_loss + rest) / m
    };
    memo.insert(state.clone(), value.clone());
    Ok(value)
}

/// Realised `g_i(t)`: row `t` holds the state after `t` rounds.
#[derive(Clone, Debug, PartialEq)]
pub struct GiTrace {
    pub rows: Vec<Vec<u32>>,
    /// Whether each round `t >= 1` was a genuine coin flip.
    pub coin_flips: Vec<bool>,
}

impl GiTrace {
    pub fn g(&self, level: usize, t: usize) -> u32 {
        self.rows[t][level]
    }

    pub fn rounds(&self) -> usize {
        self.rows.len() - 1
    }
}

/// One even-split trajectory from `(n, 0, …, 0)`. Once absorbed the state
/// is repeated up to `rounds`.
pub fn trace_g(n: u32, budget: MistakeBudget, rounds: usize, seed: u64) -> Result<GiTrace> {
    let mut state = State::start(n, budget)?;
    let mut adv = EvenSplitAdversary::new(2)?;
    let mut rows = vec![state.counts().to_vec()];
    let mut coin_flips = Vec::with_capacity(rounds);
    for round in 1..=rounds {
        if state.is_absorbing() {
            rows.push(state.counts().to_vec());
            coin_flips.push(false);
            continue;
        }
        let play = adv.play(&state)?;
        let members = play.support.members();
        let u = draw(seed, ADVERSARY_STREAM, round);
        let outcome = members[((u * members.len() as f64) as usize).min(members.len() - 1)];
        state = successor(&state, &play.dec, outcome)?
            .ok_or_else(|| Error::Internal("even split emptied the state".into()))?;
        rows.push(state.counts().to_vec());
        coin_flips.push(play.coin_flip);
    }
    Ok(GiTrace { rows, coin_flips })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TStar {
    pub value: usize,
    /// The trajectory had not absorbed by the round cap, so `value` is only
    /// a lower bound.
    pub censored: bool,
}

/// `t_b*` of one trajectory: one past the last round with `g_b > 1`.
pub fn t_star(trace: &GiTrace, level: usize) -> usize {
    trace
        .rows
        .iter()
        .rposition(|row| row[level] > 1)
        .map_or(0, |t| t + 1)
}

#[derive(Clone, Debug, PartialEq)]
pub struct TStarSummary {
    pub per_trial: Vec<TStar>,
    pub min: usize,
    pub mean: f64,
    pub max: usize,
    /// `min t_b* / 2`, the empirical loss floor.
    pub loss_floor: f64,
    pub censored: usize,
}

/// Round cap used by [`estimate_t_b_star`]; a trajectory loses at least one
/// unit of `phi` on every coin round, so this is generous.
pub fn default_round_cap(n: u32, budget: MistakeBudget) -> usize {
    64 * (n as usize + 1) * budget.levels()
}

/// Runs `trials` even-split trajectories to absorption (or the round cap)
/// and summarises `t_b*`.
pub fn estimate_t_b_star(
    n: u32,
    budget: MistakeBudget,
    trials: usize,
    seed: u64,
) -> Result<TStarSummary> {
    if trials == 0 {
        return Err(Error::Config("trials must be at least 1".into()));
    }
    let cap = default_round_cap(n, budget);
    let level = budget.0 as usize;
    let per_trial: Vec<TStar> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let trace = trace_g(n, budget, cap, trial_seed(seed, t))?;
            let last = trace.rows.last().expect("row 0 exists");
            let absorbed = State::from_counts(last.clone()).is_some_and(|s| s.is_absorbing());
            Ok(TStar {
                value: t_star(&trace, level),
                censored: !absorbed,
            })
        })
        .collect::<Result<_>>()?;
    let min = per_trial.iter().map(|t| t.value).min().expect("trials >= 1");
    let max = per_trial.iter().map(|t| t.value).max().expect("trials >= 1");
    let mean = per_trial.iter().map(|t| t.value as f64).sum::<f64>() / trials as f64;
    Ok(TStarSummary {
        min,
        max,
        mean,
        loss_floor: min as f64 / 2.0,
        censored: per_trial.iter().filter(|t| t.censored).count(),
        per_trial,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::SolverConfig;
    use crate::potential::PerfectExpertPotential;
    use crate::strategies::{
        MajorityOfLeaders, OptimalAdversary, PotentialForecaster, RandomLeader,
    };
    use std::sync::Arc;

    fn st(counts: &[u32]) -> State {
        State::new(counts.to_vec()).unwrap()
    }

    fn perfect() -> PotentialForecaster {
        PotentialForecaster::new(Arc::new(PerfectExpertPotential), 2).unwrap()
    }

    fn ratio(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn absorbing_start_costs_nothing() {
        let mut f = perfect();
        let mut a = EvenSplitAdversary::new(2).unwrap();
        let t = play_game(&mut f, &mut a, &st(&[0, 1]), 10, 7).unwrap();
        assert!(t.rounds.is_empty());
        assert!(t.absorbed);
        assert_eq!(t.total_loss(), 0);
    }

    #[test]
    fn same_seed_same_transcript() {
        let run = |seed| {
            let mut f = RandomLeader;
            let mut a = EvenSplitAdversary::new(2).unwrap();
            play_game(&mut f, &mut a, &st(&[9, 0]), 100, seed).unwrap()
        };
        assert_eq!(run(3), run(3));
        assert_ne!(run(3), run(4));
    }

    #[test]
    fn transcript_chains_and_exports() {
        let mut f = RandomLeader;
        let mut a = EvenSplitAdversary::new(2).unwrap();
        let t = play_game(&mut f, &mut a, &st(&[5, 2]), 100, 11).unwrap();
        let mut prev = t.start.clone();
        for r in &t.rounds {
            assert_eq!(r.state_before, prev);
            assert_eq!(successor(&r.state_before, &r.dec, r.outcome).unwrap().unwrap(), r.state_after);
            prev = r.state_after.clone();
        }
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with(
            "round,state_before,dec,forecast_probs,forecast,outcome,loss,state_after,coinflip\n"
        ));
        assert_eq!(text.lines().count(), t.rounds.len() + 1);
    }

    #[test]
    fn exact_expectation_examples() {
        let cfg = SolverConfig::new(MistakeBudget(0));
        let start = st(&[2]);
        let mut adv = OptimalAdversary::new(&start, cfg.clone()).unwrap();
        let v = exact_expected_loss(&mut perfect(), &mut adv, &start, 64).unwrap();
        assert_eq!(v, ratio(1, 2));

        for k in 0..=4u32 {
            let start = st(&[1 << k]);
            let mut even = EvenSplitAdversary::new(2).unwrap();
            for f in [&mut perfect() as &mut dyn Forecaster, &mut MajorityOfLeaders, &mut RandomLeader] {
                let v = exact_expected_loss(f, &mut even, &start, 64).unwrap();
                assert_eq!(v, ratio(k as i64, 2));
            }
        }

        let start = st(&[4]);
        let mut adv = OptimalAdversary::new(&start, cfg).unwrap();
        let v = exact_expected_loss(&mut MajorityOfLeaders, &mut adv, &start, 64).unwrap();
        assert!(v >= ratio(1, 1));
        assert!(matches!(
            exact_expected_loss(&mut MajorityOfLeaders, &mut adv, &start, 3),
            Err(Error::ResourceLimit { phi: 4, cap: 3 })
        ));
    }

    #[test]
    fn g_trace_powers_of_two() {
        let trace = trace_g(32, MistakeBudget(0), 10, 5).unwrap();
        for t in 0..=5 {
            assert_eq!(trace.g(0, t), 32 >> t);
        }
        let summary = estimate_t_b_star(32, MistakeBudget(0), 20, 1).unwrap();
        assert_eq!((summary.min, summary.max), (5, 5));
        let single = estimate_t_b_star(1, MistakeBudget(0), 3, 1).unwrap();
        assert_eq!(single.max, 0);
        assert_eq!(single.censored, 0);
    }

    #[test]
    fn monte_carlo_is_deterministic() {
        let run = || {
            monte_carlo(
                || Ok(Box::new(RandomLeader) as Box<dyn Forecaster>),
                || Ok(Box::new(EvenSplitAdversary::new(2)?) as Box<dyn Adversary>),
                &st(&[8]),
                100_000,
                1000,
                42,
            )
            .unwrap()
        };
        let a = run();
        assert_eq!(a, run());
        assert_eq!(a.mean_expected_loss, 1.5);
        assert!((a.mean_loss - 1.5).abs() < 3.0 * a.std_error + 1e-12);
    }
}
