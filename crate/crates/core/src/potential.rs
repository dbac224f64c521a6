//! Potential functions: the logarithmic family `f_c`, its minimisation over
//! `c`, closed-form upper bounds, and an exhaustive certifier for the
//! boundary and decomposition conditions.
//!
//! A potential `f` is certified on a cap when `f(0, …, 0, 1) >= 0` and, for
//! every state with `phi <= cap`, every nonempty `A` and every
//! decomposition,
//!
//! ```text
//! f(k) >= (a - 1)/a + (1/a) * sum_{i in A} f(s_i)
//! ```
//!
//! Such a potential upper-bounds the minimax loss and induces a forecaster
//! (see [`crate::strategies::PotentialForecaster`]).

use std::collections::HashMap;
use std::f64::consts::LN_2;
use std::sync::Mutex;

use num_rational::BigRational;
use num_traits::Float;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::exact::{perfect_expert_loss, MinimaxSolver, SolverConfig};
use crate::scalar::LossScalar;
use crate::states::{
    enumerate_decompositions, states_up_to_phi, successor, ChoiceSet, Decomposition,
    MistakeBudget, RealState, State,
};

/// Candidate upper bound on the minimax loss.
pub trait Potential<S>: Send + Sync {
    fn value(&self, state: &State) -> Result<S>;
    fn name(&self) -> String;
}

/// Potential defined on real-valued states.
pub trait RealPotential<F>: Sync {
    fn value_real(&self, state: &RealState<F>) -> F;
    /// Only concave potentials may use the uniform-split shortcut.
    fn is_concave(&self) -> bool;
    fn name(&self) -> String;
}

/// `c > 1` and the derived base `gamma = (2c/(c+1))^2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PotentialParams<F> {
    c: F,
    gamma: F,
}

impl<F: Float> PotentialParams<F> {
    pub fn new(c: F) -> Result<Self> {
        if c <= F::one() || !c.is_finite() {
            return Err(Error::Domain(format!(
                "f_c needs a finite c > 1, got {}",
                c.to_f64().unwrap_or(f64::NAN)
            )));
        }
        let two = F::one() + F::one();
        let ratio = two * c / (c + F::one());
        Ok(Self {
            c,
            gamma: ratio * ratio,
        })
    }

    pub fn c(&self) -> F {
        self.c
    }

    pub fn gamma(&self) -> F {
        self.gamma
    }
}

/// `sum_i c^(b-i) k_i` by Horner's rule.
fn weighted_mass<F: Float>(counts: impl Iterator<Item = F>, c: F) -> F {
    counts.fold(F::zero(), |acc, k| acc * c + k)
}

/// `f_c(k) = log_gamma(sum_i c^(b-i) k_i)`.
pub fn f_c<F: Float>(state: &State, params: &PotentialParams<F>) -> F {
    let mass = weighted_mass(
        state.counts().iter().map(|&k| F::from(k).expect("u32 converts")),
        params.c,
    );
    mass.ln() / params.gamma.ln()
}

/// The `f_c` potential for a fixed `c`.
#[derive(Clone, Copy, Debug)]
pub struct LogPotential<F> {
    params: PotentialParams<F>,
}

impl<F: Float> LogPotential<F> {
    pub fn new(c: F) -> Result<Self> {
        Ok(Self {
            params: PotentialParams::new(c)?,
        })
    }

    pub fn params(&self) -> &PotentialParams<F> {
        &self.params
    }
}

impl<F: Float + LossScalar> Potential<F> for LogPotential<F> {
    fn value(&self, state: &State) -> Result<F> {
        Ok(f_c(state, &self.params))
    }

    fn name(&self) -> String {
        format!("fc:{}", self.params.c.approx())
    }
}

impl<F: Float + Sync> RealPotential<F> for LogPotential<F> {
    fn value_real(&self, state: &RealState<F>) -> F {
        weighted_mass(state.counts().iter().copied(), self.params.c).ln() / self.params.gamma.ln()
    }

    fn is_concave(&self) -> bool {
        true
    }

    fn name(&self) -> String {
        format!("fc:{}", self.params.c.to_f64().unwrap_or(f64::NAN))
    }
}

/// Named choices of `c` for a start state with `n` experts.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CPreset {
    /// `log2(4n + 4) / ln 4`, the choice behind the closed-form bound and
    /// the figure overlays. Always above 1.
    Figure,
    /// `log2(n) / b`, the quick choice of the forecasting algorithm.
    Fast,
}

pub fn c_preset(preset: CPreset, n: u64, budget: MistakeBudget) -> Result<f64> {
    if n == 0 {
        return Err(Error::Domain("presets need n >= 1".into()));
    }
    let c = match preset {
        CPreset::Figure => (4.0 * n as f64 + 4.0).log2() / 4f64.ln(),
        CPreset::Fast => {
            if budget.0 == 0 {
                return Err(Error::Domain("the fast preset needs b >= 1".into()));
            }
            (n as f64).log2() / budget.0 as f64
        }
    };
    if c <= 1.0 {
        return Err(Error::Domain(format!(
            "preset {preset:?} gives c = {c} <= 1 for n = {n}, b = {}",
            budget.0
        )));
    }
    Ok(c)
}

/// Minimum of `c -> f_c(state)` found by [`f_opt`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OptimizedValue {
    pub value: f64,
    pub c: f64,
}

const C_MIN_OFFSET: f64 = 1.0 / 1024.0;
const C_MAX: f64 = 1_048_576.0;
const GRID_POINTS: usize = 64;

fn log_g(counts: &[u32], c: f64) -> f64 {
    let params = PotentialParams::new(c).expect("grid stays above 1");
    weighted_mass(counts.iter().map(|&k| k as f64), c).ln() / params.gamma.ln()
}

fn c_of(u: f64) -> f64 {
    (1.0 + u.exp()).min(C_MAX)
}

/// Approximate `min_{c > 1} f_c(state)`.
///
/// A 64-point grid, log-spaced in `c - 1` over `[2^-10, 2^20 - 1]`, is
/// scanned together with the two presets, then golden-section search
/// refines the bracket around the best grid point. `c` stays clamped to
/// `[1 + 2^-10, 2^20]`; for `b = 0` the infimum sits at `c -> inf` and the
/// clamp costs under `1e-4` for `n <= 1e6`.
pub fn f_opt(state: &State) -> OptimizedValue {
    let n = state.total();
    let mut extra = Vec::with_capacity(2);
    for preset in [CPreset::Figure, CPreset::Fast] {
        if let Ok(c) = c_preset(preset, n, state.budget()) {
            extra.push(c.clamp(1.0 + C_MIN_OFFSET, C_MAX));
        }
    }
    f_opt_with(state, &extra)
}

/// [`f_opt`] with caller-supplied extra probe points.
pub fn f_opt_with(state: &State, extra: &[f64]) -> OptimizedValue {
    let counts = state.counts();
    let u_lo = C_MIN_OFFSET.ln();
    let u_hi = (C_MAX - 1.0).ln();
    let grid: Vec<f64> = (0..GRID_POINTS)
        .map(|i| u_lo + (u_hi - u_lo) * i as f64 / (GRID_POINTS - 1) as f64)
        .collect();

    let mut best = OptimizedValue {
        value: f64::INFINITY,
        c: f64::NAN,
    };
    let mut best_idx = 0;
    for (i, &u) in grid.iter().enumerate() {
        let c = c_of(u);
        let v = log_g(counts, c);
        if v < best.value {
            best = OptimizedValue { value: v, c };
            best_idx = i;
        }
    }
    let lo = grid[best_idx.saturating_sub(1)];
    let hi = grid[(best_idx + 1).min(GRID_POINTS - 1)];
    golden_section(counts, lo, hi, &mut best);
    for &c in extra {
        let v = log_g(counts, c);
        if v < best.value {
            best = OptimizedValue { value: v, c };
        }
    }
    best
}

fn golden_section(counts: &[u32], mut lo: f64, mut hi: f64, best: &mut OptimizedValue) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = log_g(counts, c_of(x1));
    let mut f2 = log_g(counts, c_of(x2));
    for _ in 0..200 {
        if hi - lo < 1e-10 {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = log_g(counts, c_of(x1));
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = log_g(counts, c_of(x2));
        }
        for (x, f) in [(x1, f1), (x2, f2)] {
            if f < best.value {
                *best = OptimizedValue {
                    value: f,
                    c: c_of(x),
                };
            }
        }
    }
}

/// `min_c f_c` as a potential.
#[derive(Clone, Copy, Debug, Default)]
pub struct OptimizedLogPotential;

impl Potential<f64> for OptimizedLogPotential {
    fn value(&self, state: &State) -> Result<f64> {
        Ok(f_opt(state).value)
    }

    fn name(&self) -> String {
        "opt".into()
    }
}

/// `log4(n) + b * (log4(log2(n + 1)) + 4) + 1`.
pub fn upper_bound(n: u64, budget: MistakeBudget) -> Result<f64> {
    if n == 0 {
        return Err(Error::Domain("upper_bound needs n >= 1".into()));
    }
    let n = n as f64;
    let log4 = |x: f64| x.ln() / 4f64.ln();
    Ok(log4(n) + budget.0 as f64 * (log4((n + 1.0).log2()) + 4.0) + 1.0)
}

/// `(1 + 2b/ln n) * (log4(n) + b * log4(log2(n) / b))`, valid for
/// `1 <= b < ln(n)/2`.
pub fn precise_upper_bound(n: u64, budget: MistakeBudget) -> Result<f64> {
    let b = budget.0 as f64;
    let ln_n = (n as f64).ln();
    if budget.0 < 1 || n < 2 || b >= ln_n / 2.0 {
        return Err(Error::Domain(format!(
            "precise_upper_bound needs 1 <= b < ln(n)/2; got n = {n}, b = {}",
            budget.0
        )));
    }
    let log4 = |x: f64| x.ln() / (2.0 * LN_2);
    Ok((1.0 + 2.0 * b / ln_n) * (log4(n as f64) + b * log4((n as f64).log2() / b)))
}

/// A point where a potential fails its conditions.
#[derive(Clone, Debug, PartialEq)]
pub enum Witness<S> {
    /// `f(0, …, 0, 1) < 0`.
    Boundary { value: S },
    /// `f(state) = lhs < rhs = (a-1)/a + (1/a) sum_{i in A} f(s_i)`.
    Decomposition {
        state: State,
        choices: ChoiceSet,
        dec: Decomposition,
        lhs: S,
        rhs: S,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub enum Certification<S> {
    /// Every condition holds on all states up to the cap.
    Certified { phi_cap: u64, states: usize },
    /// First violation in canonical state order.
    Refuted(Witness<S>),
}

impl<S> Certification<S> {
    pub fn is_certified(&self) -> bool {
        matches!(self, Certification::Certified { .. })
    }
}

/// Exhaustively checks the boundary and decomposition conditions on every
/// state with `phi <= phi_cap`, every nonempty `A ⊆ [d]` and every
/// decomposition over all `d` choices. Moves that would empty a successor
/// in `A` are skipped. Floats use a `1e-9` slack, exact scalars none.
pub fn certify<S, P>(
    f: &P,
    budget: MistakeBudget,
    phi_cap: u64,
    d: usize,
) -> Result<Certification<S>>
where
    S: LossScalar,
    P: Potential<S> + ?Sized,
{
    if phi_cap < 1 || d < 1 {
        return Err(Error::Config("certify needs phi_cap >= 1 and d >= 1".into()));
    }
    let boundary = f.value(&State::absorbing(budget))?;
    if boundary < S::zero() - S::slack() {
        return Ok(Certification::Refuted(Witness::Boundary { value: boundary }));
    }
    let states = states_up_to_phi(budget, phi_cap);
    let subsets = ChoiceSet::subsets(d, 1, d);
    let found = states
        .par_iter()
        .map(|s| check_state(f, s, d, &subsets))
        .find_map_first(|r| match r {
            Ok(None) => None,
            Ok(Some(w)) => Some(Ok(w)),
            Err(e) => Some(Err(e)),
        });
    match found {
        Some(Ok(w)) => Ok(Certification::Refuted(w)),
        Some(Err(e)) => Err(e),
        None => Ok(Certification::Certified {
            phi_cap,
            states: states.len(),
        }),
    }
}

fn check_state<S, P>(
    f: &P,
    state: &State,
    d: usize,
    subsets: &[ChoiceSet],
) -> Result<Option<Witness<S>>>
where
    S: LossScalar,
    P: Potential<S> + ?Sized,
{
    let fk = f.value(state)?;
    let bound = fk.clone() + S::slack();
    let mut cache: HashMap<State, S> = HashMap::new();
    for dec in enumerate_decompositions(state, &ChoiceSet::full(d)) {
        let mut succ_values: Vec<Option<S>> = Vec::with_capacity(d);
        for j in 0..d {
            let value = match successor(state, &dec, j)? {
                None => None,
                Some(s) => Some(match cache.get(&s) {
                    Some(v) => v.clone(),
                    None => {
                        let v = f.value(&s)?;
                        cache.insert(s, v.clone());
                        v
                    }
                }),
            };
            succ_values.push(value);
        }
        for choices in subsets {
            let a = choices.len();
            let mut sum = S::zero();
            let mut legal = true;
            for &j in choices.members() {
                match &succ_values[j] {
                    Some(v) => sum = sum + v.clone(),
                    None => {
                        legal = false;
                        break;
                    }
                }
            }
            if !legal {
                continue;
            }
            let rhs = S::ratio(a as u64 - 1, a as u64) + sum / S::from_usize(a).expect("fits");
            if rhs > bound {
                return Ok(Some(Witness::Decomposition {
                    state: state.clone(),
                    choices: choices.clone(),
                    dec,
                    lhs: fk,
                    rhs,
                }));
            }
        }
    }
    Ok(None)
}

/// Violation of the uniform-split inequality.
#[derive(Clone, Debug, PartialEq)]
pub struct ShortcutWitness<F> {
    pub state: State,
    pub a: usize,
    /// `(a-1)/a + f(s_1(k_a))`.
    pub lhs: F,
    /// `f(k)`.
    pub rhs: F,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ShortcutReport<F> {
    pub passed: bool,
    pub witness: Option<ShortcutWitness<F>>,
}

/// For concave potentials it is enough to check
/// `(a-1)/a + f(s_1(k/a, …, k/a, 0, …)) <= f(k)` for each `a in [d]`.
pub fn concavity_shortcut_check<F, P>(
    f: &P,
    budget: MistakeBudget,
    phi_cap: u64,
    d: usize,
) -> Result<ShortcutReport<F>>
where
    F: Float,
    P: RealPotential<F> + ?Sized,
{
    if !f.is_concave() {
        return Err(Error::Config(format!(
            "{} is not declared concave; use certify instead",
            f.name()
        )));
    }
    let slack = F::from(1e-9).expect("converts");
    for state in states_up_to_phi(budget, phi_cap) {
        let real = RealState::from_state(&state);
        let rhs = f.value_real(&real);
        for a in 1..=d {
            let af = F::from(a).expect("converts");
            let lhs = (af - F::one()) / af + f.value_real(&real.uniform_split_successor(a));
            if lhs > rhs + slack {
                return Ok(ShortcutReport {
                    passed: false,
                    witness: Some(ShortcutWitness {
                        state,
                        a,
                        lhs,
                        rhs,
                    }),
                });
            }
        }
    }
    Ok(ShortcutReport {
        passed: true,
        witness: None,
    })
}

/// A constant potential.
#[derive(Clone, Debug)]
pub struct ConstantPotential<S>(pub S);

impl<S: LossScalar> Potential<S> for ConstantPotential<S> {
    fn value(&self, _state: &State) -> Result<S> {
        Ok(self.0.clone())
    }

    fn name(&self) -> String {
        format!("const:{}", self.0.approx())
    }
}

/// `sum_i k_i`; concave but too flat near one expert.
#[derive(Clone, Copy, Debug, Default)]
pub struct LinearPotential;

impl Potential<f64> for LinearPotential {
    fn value(&self, state: &State) -> Result<f64> {
        Ok(state.total() as f64)
    }

    fn name(&self) -> String {
        "linear".into()
    }
}

impl RealPotential<f64> for LinearPotential {
    fn value_real(&self, state: &RealState<f64>) -> f64 {
        state.counts().iter().sum()
    }

    fn is_concave(&self) -> bool {
        true
    }

    fn name(&self) -> String {
        "linear".into()
    }
}

/// Closed-form perfect-expert loss; only defined for `b = 0`.
#[derive(Clone, Copy, Debug, Default)]
pub struct PerfectExpertPotential;

impl<S: LossScalar> Potential<S> for PerfectExpertPotential {
    fn value(&self, state: &State) -> Result<S> {
        if state.levels() != 1 {
            return Err(Error::Domain(
                "the perfect-expert potential only covers b = 0".into(),
            ));
        }
        perfect_expert_loss(state.total())
    }

    fn name(&self) -> String {
        "perfect".into()
    }
}

/// The exact minimax loss, evaluated on demand.
pub struct ExactLossPotential {
    solver: Mutex<MinimaxSolver<BigRational>>,
}

impl ExactLossPotential {
    pub fn new(budget: MistakeBudget, cfg: SolverConfig) -> Result<Self> {
        Ok(Self {
            solver: Mutex::new(MinimaxSolver::new(budget, cfg)?),
        })
    }

    pub fn from_solver(solver: MinimaxSolver<BigRational>) -> Self {
        Self {
            solver: Mutex::new(solver),
        }
    }
}

impl Potential<BigRational> for ExactLossPotential {
    fn value(&self, state: &State) -> Result<BigRational> {
        self.solver
            .lock()
            .map_err(|_| Error::Internal("solver lock poisoned".into()))?
            .minimax_loss(state)
    }

    fn name(&self) -> String {
        "exact".into()
    }
}

impl Potential<f64> for ExactLossPotential {
    fn value(&self, state: &State) -> Result<f64> {
        Potential::<BigRational>::value(self, state).map(|v| v.approx())
    }

    fn name(&self) -> String {
        "exact".into()
    }
}
