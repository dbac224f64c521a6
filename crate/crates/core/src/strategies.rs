//! Forecasters and adversaries.
//!
//! A forecaster sees the state and the adversary's decomposition and emits a
//! distribution over the `d` choices. An adversary picks the decomposition
//! and a support from which the correct choice is drawn uniformly.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use num_rational::BigRational;

use crate::error::{Error, Result};
use crate::exact::{AdversaryMove, MinimaxSolver, SolverConfig};
use crate::potential::Potential;
use crate::states::{binomial, successor, ChoiceSet, Decomposition, MistakeBudget, State};

const SUM_TOLERANCE: f64 = 1e-12;
const P_LAST_TOLERANCE: f64 = 1e-9;

/// Probability vector over the `d` choices.
#[derive(Clone, Debug, PartialEq)]
pub struct ForecastDistribution {
    probs: Vec<f64>,
}

impl ForecastDistribution {
    /// Entries in `[-1e-12, 0)` are clamped to zero; anything else outside
    /// `[0, 1]`, or a sum more than `1e-12` from one, is rejected.
    pub fn new(mut probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::Internal("empty forecast".into()));
        }
        for p in &mut probs {
            if !p.is_finite() || *p < -SUM_TOLERANCE || *p > 1.0 + SUM_TOLERANCE {
                return Err(Error::Internal(format!("invalid probability {p}")));
            }
            *p = p.clamp(0.0, 1.0);
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::Internal(format!("forecast sums to {sum}")));
        }
        Ok(Self { probs })
    }

    pub fn point_mass(choice: usize, d: usize) -> Self {
        let mut probs = vec![0.0; d];
        probs[choice] = 1.0;
        Self { probs }
    }

    /// Normalises nonnegative weights.
    pub fn proportional(weights: &[f64]) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if total <= 0.0 || !total.is_finite() {
            return Err(Error::Internal("all forecast weights are zero".into()));
        }
        let (last, rest) = weights.split_last().expect("nonempty");
        let mut probs: Vec<f64> = rest.iter().map(|w| w / total).collect();
        let head: f64 = probs.iter().sum();
        probs.push(if *last == 0.0 { 0.0 } else { 1.0 - head });
        Self::new(probs)
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn d(&self) -> usize {
        self.probs.len()
    }

    pub fn prob(&self, choice: usize) -> f64 {
        self.probs[choice]
    }

    /// Exact rational copy; the last entry is `1 - sum(others)` so the
    /// vector sums to one exactly.
    pub fn to_exact(&self) -> Vec<BigRational> {
        let mut out: Vec<BigRational> = self.probs[..self.probs.len() - 1]
            .iter()
            .map(|&p| BigRational::from_float(p).expect("finite"))
            .collect();
        let head = out
            .iter()
            .fold(BigRational::from_integer(0.into()), |acc, p| acc + p);
        out.push(BigRational::from_integer(1.into()) - head);
        out
    }
}

impl fmt::Display for ForecastDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.probs.iter().map(|p| format!("{p:.6}")).collect();
        f.write_str(&parts.join(":"))
    }
}

pub trait Forecaster {
    fn forecast(&mut self, state: &State, dec: &Decomposition) -> Result<ForecastDistribution>;

    /// Called after each round with the realised correct choice.
    fn observe(&mut self, _state: &State, _dec: &Decomposition, _outcome: usize) {}

    /// True when the forecast is a function of `(state, dec)` alone.
    fn is_stationary(&self) -> bool {
        true
    }

    fn name(&self) -> String;
}

/// The forecaster induced by a potential `f`:
/// `p_i = max(0, 1 + f(s_i) - f(k))` for `i < d`, remainder on choice `d`.
///
/// Choices whose successor would be empty get probability zero. A
/// remainder below `-1e-9` means `f` is not a valid certificate there.
pub struct PotentialForecaster {
    potential: Arc<dyn Potential<f64>>,
    d: usize,
    cache: HashMap<State, f64>,
}

impl PotentialForecaster {
    pub fn new(potential: Arc<dyn Potential<f64>>, d: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::Config("forecasting needs d >= 2".into()));
        }
        Ok(Self {
            potential,
            d,
            cache: HashMap::new(),
        })
    }

    fn f(&mut self, state: &State) -> Result<f64> {
        if let Some(&v) = self.cache.get(state) {
            return Ok(v);
        }
        let v = self.potential.value(state)?;
        self.cache.insert(state.clone(), v);
        Ok(v)
    }
}

impl Forecaster for PotentialForecaster {
    fn forecast(&mut self, state: &State, dec: &Decomposition) -> Result<ForecastDistribution> {
        if dec.d() != self.d {
            return Err(Error::Config(format!(
                "decomposition has {} parts, forecaster expects {}",
                dec.d(),
                self.d
            )));
        }
        let fk = self.f(state)?;
        let mut probs = Vec::with_capacity(self.d);
        for j in 0..self.d - 1 {
            let p = match successor(state, dec, j)? {
                Some(s) => (1.0 + self.f(&s)? - fk).max(0.0),
                None => 0.0,
            };
            probs.push(p);
        }
        let head: f64 = probs.iter().sum();
        let last = 1.0 - head;
        if last < -P_LAST_TOLERANCE {
            return Err(Error::CertificationViolation {
                state: state.to_string(),
                dec: dec.to_part_string(),
                p_last: last,
            });
        }
        if last < 0.0 {
            for p in &mut probs {
                *p /= head;
            }
            let head: f64 = probs.iter().sum();
            probs.push((1.0 - head).max(0.0));
        } else {
            probs.push(last);
        }
        ForecastDistribution::new(probs)
    }

    fn name(&self) -> String {
        format!("potential:{}", self.potential.name())
    }
}

/// Multiplicative weights with learning rate `eta`.
///
/// Every expert starts at weight one and each mistake multiplies its weight
/// by `exp(-eta)`, so an expert's weight is `exp(-eta * level)` and the
/// forecast is a function of the state and decomposition. Experts that
/// exhausted their budget have left the state and carry no weight.
#[derive(Clone, Debug)]
pub struct MultiplicativeWeights {
    eta: f64,
}

impl MultiplicativeWeights {
    pub fn new(eta: f64) -> Result<Self> {
        if eta <= 0.0 || !eta.is_finite() {
            return Err(Error::Domain(format!("mw needs eta > 0, got {eta}")));
        }
        Ok(Self { eta })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }
}

impl Forecaster for MultiplicativeWeights {
    fn forecast(&mut self, state: &State, dec: &Decomposition) -> Result<ForecastDistribution> {
        // Log-weights relative to the leaders keep the largest term at one.
        let lead = state.leader_level();
        let weights: Vec<f64> = (0..dec.d())
            .map(|j| {
                dec.part(j)
                    .iter()
                    .enumerate()
                    .skip(lead)
                    .map(|(i, &k)| k as f64 * (-self.eta * (i - lead) as f64).exp())
                    .sum()
            })
            .collect();
        ForecastDistribution::proportional(&weights)
    }

    fn name(&self) -> String {
        format!("mw:{}", self.eta)
    }
}

/// `min_eta (eta * b + ln n) / (1 - exp(-eta))`, minimised numerically.
pub fn mw_loss_bound(n: u64, budget: MistakeBudget) -> Result<(f64, f64)> {
    if n == 0 {
        return Err(Error::Domain("mw bound needs n >= 1".into()));
    }
    let b = budget.0 as f64;
    let ln_n = (n as f64).ln();
    let g = |eta: f64| (eta * b + ln_n) / (1.0 - (-eta).exp());
    if budget.0 == 0 {
        // Decreasing in eta with limit ln n.
        return Ok((ln_n, f64::INFINITY));
    }
    // Unimodal in ln(eta): coarse scan then golden section.
    let (lo, hi) = (-20f64, 10f64);
    let steps = 400;
    let mut best = (f64::INFINITY, 0.0);
    for i in 0..=steps {
        let u = lo + (hi - lo) * i as f64 / steps as f64;
        let v = g(u.exp());
        if v < best.0 {
            best = (v, u);
        }
    }
    let step = (hi - lo) / steps as f64;
    let (mut a, mut c) = (best.1 - step, best.1 + step);
    let r = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let x1 = c - r * (c - a);
        let x2 = a + r * (c - a);
        if g(x1.exp()) <= g(x2.exp()) {
            c = x2;
        } else {
            a = x1;
        }
    }
    let u = 0.5 * (a + c);
    let v = g(u.exp());
    Ok(if v < best.0 { (v, u.exp()) } else { (best.0, best.1.exp()) })
}

fn leader_votes(state: &State, dec: &Decomposition) -> Vec<u32> {
    let lead = state.leader_level();
    (0..dec.d()).map(|j| dec.votes(j, lead)).collect()
}

/// Puts all mass on the choice most leaders vote for (lowest index on ties).
#[derive(Clone, Copy, Debug, Default)]
pub struct MajorityOfLeaders;

impl Forecaster for MajorityOfLeaders {
    fn forecast(&mut self, state: &State, dec: &Decomposition) -> Result<ForecastDistribution> {
        let votes = leader_votes(state, dec);
        let top = *votes.iter().max().expect("d >= 1");
        let choice = votes.iter().position(|&v| v == top).expect("max exists");
        Ok(ForecastDistribution::point_mass(choice, dec.d()))
    }

    fn name(&self) -> String {
        "majority".into()
    }
}

/// Follows a uniformly random leader.
#[derive(Clone, Copy, Debug, Default)]
pub struct RandomLeader;

impl Forecaster for RandomLeader {
    fn forecast(&mut self, state: &State, dec: &Decomposition) -> Result<ForecastDistribution> {
        let votes: Vec<f64> = leader_votes(state, dec).iter().map(|&v| v as f64).collect();
        ForecastDistribution::proportional(&votes)
    }

    fn name(&self) -> String {
        "random-leader".into()
    }
}

/// Probability `1 + log4(x)` of following a majority of fraction `x`.
pub fn binary_majority_rule(x: f64) -> Result<f64> {
    if !(0.5..=1.0).contains(&x) {
        return Err(Error::Domain(format!(
            "binary majority rule needs 1/2 <= x <= 1, got {x}"
        )));
    }
    Ok(1.0 + x.ln() / 4f64.ln())
}

/// One adversary round: the votes, and the choices the correct answer is
/// drawn from uniformly.
#[derive(Clone, Debug, PartialEq)]
pub struct AdversaryPlay {
    pub dec: Decomposition,
    pub support: ChoiceSet,
    /// The outcome is a genuine fair draw between two or more choices.
    pub coin_flip: bool,
}

pub trait Adversary {
    fn play(&mut self, state: &State) -> Result<AdversaryPlay>;
    fn d(&self) -> usize;
    fn name(&self) -> String;
}

/// Support restricted to choices whose successor keeps some expert.
fn surviving_support(state: &State, dec: &Decomposition, choices: &[usize]) -> Result<ChoiceSet> {
    let mut keep = Vec::with_capacity(choices.len());
    for &j in choices {
        if successor(state, dec, j)?.is_some() {
            keep.push(j);
        }
    }
    ChoiceSet::new(keep, dec.d())
}

/// Binary split of every level as evenly as possible. For odd `k_j` the
/// first part takes the floor when the number of even counts below level
/// `j` is even and the ceiling otherwise.
pub fn even_split(state: &State) -> Decomposition {
    let mut first = Vec::with_capacity(state.levels());
    let mut second = Vec::with_capacity(state.levels());
    let mut evens_below = 0u32;
    for &k in state.counts() {
        let half = k / 2;
        let part = if k.is_multiple_of(2) || evens_below.is_multiple_of(2) {
            half
        } else {
            k - half
        };
        first.push(part);
        second.push(k - part);
        if k % 2 == 0 {
            evens_below += 1;
        }
    }
    Decomposition::new(vec![first, second]).expect("parts share a length")
}

/// The lower-bound adversary: [`even_split`] votes and a fair coin. When one
/// side would empty the state, the other side is played with certainty and
/// the round is not a coin flip.
#[derive(Clone, Copy, Debug)]
pub struct EvenSplitAdversary;

impl EvenSplitAdversary {
    pub fn new(d: usize) -> Result<Self> {
        if d != 2 {
            return Err(Error::Config(format!(
                "the even-split adversary is binary; d = {d}"
            )));
        }
        Ok(Self)
    }
}

impl Adversary for EvenSplitAdversary {
    fn play(&mut self, state: &State) -> Result<AdversaryPlay> {
        let dec = even_split(state);
        let support = surviving_support(state, &dec, &[0, 1])?;
        let coin_flip = support.len() == 2;
        Ok(AdversaryPlay {
            dec,
            support,
            coin_flip,
        })
    }

    fn d(&self) -> usize {
        2
    }

    fn name(&self) -> String {
        "even-split".into()
    }
}

/// Plays the solver's argmax move and draws uniformly from its subset.
#[derive(Clone)]
pub struct OptimalAdversary {
    solver: Arc<MinimaxSolver<BigRational>>,
}

impl OptimalAdversary {
    /// Solves every state reachable from `start`.
    pub fn new(start: &State, cfg: SolverConfig) -> Result<Self> {
        let mut solver = MinimaxSolver::new(start.budget(), cfg)?;
        solver.solve(start)?;
        Ok(Self {
            solver: Arc::new(solver),
        })
    }

    pub fn from_solver(solver: Arc<MinimaxSolver<BigRational>>) -> Self {
        Self { solver }
    }

    pub fn solver(&self) -> &MinimaxSolver<BigRational> {
        &self.solver
    }

    pub fn adversary_move(&self, state: &State) -> Result<AdversaryMove> {
        if state.is_absorbing() {
            return Err(Error::Domain(format!(
                "{state} is absorbing; the adversary has no move there"
            )));
        }
        self.solver.stored_move(state).cloned().ok_or_else(|| {
            Error::Config(format!("{state} was not solved for this adversary"))
        })
    }
}

impl Adversary for OptimalAdversary {
    fn play(&mut self, state: &State) -> Result<AdversaryPlay> {
        let mv = self.adversary_move(state)?;
        Ok(AdversaryPlay {
            dec: mv.dec,
            coin_flip: mv.choices.len() >= 2,
            support: mv.choices,
        })
    }

    fn d(&self) -> usize {
        self.solver.config().d
    }

    fn name(&self) -> String {
        "optimal".into()
    }
}

/// Splits each level as evenly as possible across a fixed subset `A`
/// (earlier members take the remainder) and draws uniformly from the
/// members of `A` whose successor is nonempty.
#[derive(Clone, Debug)]
pub struct UniformAdversary {
    choices: ChoiceSet,
}

impl UniformAdversary {
    pub fn new(choices: ChoiceSet) -> Self {
        Self { choices }
    }
}

impl Adversary for UniformAdversary {
    fn play(&mut self, state: &State) -> Result<AdversaryPlay> {
        let d = self.choices.d();
        let a = self.choices.len() as u32;
        let mut parts = vec![vec![0u32; state.levels()]; d];
        for (level, &k) in state.counts().iter().enumerate() {
            for (rank, &j) in self.choices.members().iter().enumerate() {
                parts[j][level] = k / a + u32::from((rank as u32) < k % a);
            }
        }
        let dec = Decomposition::new(parts)?;
        let support = surviving_support(state, &dec, self.choices.members())?;
        let coin_flip = support.len() >= 2;
        Ok(AdversaryPlay {
            dec,
            support,
            coin_flip,
        })
    }

    fn d(&self) -> usize {
        self.choices.d()
    }

    fn name(&self) -> String {
        format!("uniform:{}", self.choices)
    }
}

/// `0.5 * floor(log2 n) + 0.5 * floor(log2 C(floor(log2 n), b)) - 0.5 * b`,
/// valid when `b <= floor(log2 n) / 5`.
pub fn lower_bound(n: u64, budget: MistakeBudget) -> Result<f64> {
    if n == 0 {
        return Err(Error::Domain("lower_bound needs n >= 1".into()));
    }
    let k = 63 - n.leading_zeros() as u64;
    let b = budget.0 as u64;
    if 5 * b > k {
        return Err(Error::Domain(format!(
            "lower_bound needs b <= floor(log2 n)/5; got b = {b}, floor(log2 n) = {k}"
        )));
    }
    let c = binomial(k, b);
    let log_c = 127 - c.leading_zeros() as u64;
    Ok(0.5 * k as f64 + 0.5 * log_c as f64 - 0.5 * b as f64)
}
