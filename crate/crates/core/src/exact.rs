//! Exact minimax loss by dynamic programming over states.
//!
//! The adversary's optimal play picks a subset `A` of at least two choices,
//! a decomposition that votes only inside `A`, and draws the correct choice
//! uniformly from `A`. The value of a state is therefore
//!
//! ```text
//! l(k) = max_{A, dec} (a - 1)/a + (1/a) * sum_{i in A} l(s_i)
//! ```
//!
//! with `l(0, …, 0, 1) = 0`. When one successor equals `k` itself (everyone
//! voted for it) the candidate is solved in closed form:
//! `v = 1 + (1/(a - 1)) * sum_{j != i*} l(s_j)`.
//!
//! The reachable set of a state is its prefix-sum down-set, so the solver
//! fills that set bottom-up in increasing `phi`. States sharing a `phi`
//! value never depend on each other and are evaluated in parallel when more
//! than one thread is configured.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use num_rational::BigRational;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalar::{parse_ratio, LossScalar};
use crate::states::{
    dominated_states, phi, successor_into, ChoiceSet, Decomposition, MistakeBudget, State,
    VoteCursor,
};

/// Float candidates further than this below the running best are skipped
/// without touching the exact value.
const PRUNE_EPS: f64 = 1e-9;

/// Default `phi` ceiling per mistake budget. `b = 1` admits the 80×80
/// surface, whose corner `(80, 80)` has `phi = 240`.
pub fn default_phi_cap(budget: MistakeBudget) -> u64 {
    match budget.0 {
        0 => 4096,
        1 => 240,
        2 => 24,
        _ => 16,
    }
}

#[derive(Clone, Debug)]
pub struct SolverConfig {
    /// Number of choices.
    pub d: usize,
    pub phi_cap: u64,
    /// Only try adversary subsets of size two.
    pub pairs_only: bool,
    /// Worker threads; `0` or `1` runs on the calling thread.
    pub threads: usize,
    /// Check `l(k) > l(r)` on every successor edge visited.
    pub check_monotone: bool,
}

impl SolverConfig {
    pub fn new(budget: MistakeBudget) -> Self {
        Self {
            d: 2,
            phi_cap: default_phi_cap(budget),
            pairs_only: false,
            threads: 1,
            check_monotone: true,
        }
    }

    pub fn with_d(mut self, d: usize) -> Self {
        self.d = d;
        self
    }

    pub fn with_phi_cap(mut self, cap: u64) -> Self {
        self.phi_cap = cap;
        self
    }

    pub fn with_threads(mut self, threads: usize) -> Self {
        self.threads = threads;
        self
    }

    pub fn pairs_only(mut self, on: bool) -> Self {
        self.pairs_only = on;
        self
    }

    pub fn check_monotone(mut self, on: bool) -> Self {
        self.check_monotone = on;
        self
    }
}

/// Adversary move: vote inside `choices`, then draw the correct choice
/// uniformly from `choices`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct AdversaryMove {
    pub choices: ChoiceSet,
    pub dec: Decomposition,
}

impl AdversaryMove {
    /// `(choice, successor)` for each choice in the move's support.
    pub fn successors(&self, state: &State) -> Result<Vec<(usize, State)>> {
        self.choices
            .members()
            .iter()
            .map(|&c| {
                crate::states::successor(state, &self.dec, c)?
                    .map(|s| (c, s))
                    .ok_or_else(|| {
                        Error::InvalidDecomposition(format!(
                            "move {} empties {state} on choice {}",
                            self.dec,
                            c + 1
                        ))
                    })
            })
            .collect()
    }

    /// Value of this move given the values of its successors, with the
    /// self-loop solved in closed form.
    pub fn value_with<S: LossScalar>(
        &self,
        state: &State,
        mut value_of: impl FnMut(&State) -> Result<S>,
    ) -> Result<S> {
        let a = self.choices.len();
        let mut sum = S::zero();
        let mut looped = false;
        for (_, s) in self.successors(state)? {
            if &s == state {
                looped = true;
            } else {
                sum = sum + value_of(&s)?;
            }
        }
        Ok(combine(a, looped, sum))
    }
}

#[inline]
fn combine<S: LossScalar>(a: usize, looped: bool, sum: S) -> S {
    if looped {
        S::one() + sum / S::from_usize(a - 1).expect("fits")
    } else {
        S::ratio(a as u64 - 1, a as u64) + sum / S::from_usize(a).expect("fits")
    }
}

#[derive(Clone, Debug)]
struct Entry<S> {
    value: S,
    approx: f64,
    mv: Option<AdversaryMove>,
}

impl<S: LossScalar> Entry<S> {
    fn new(value: S, mv: Option<AdversaryMove>) -> Self {
        let approx = value.approx();
        Self { value, approx, mv }
    }
}

/// Memoised minimax solver over a scalar type.
pub struct MinimaxSolver<S> {
    budget: MistakeBudget,
    cfg: SolverConfig,
    memo: HashMap<State, Entry<S>>,
}

impl<S: LossScalar> MinimaxSolver<S> {
    pub fn new(budget: MistakeBudget, cfg: SolverConfig) -> Result<Self> {
        if cfg.d < 2 {
            return Err(Error::Config(format!("d must be at least 2, got {}", cfg.d)));
        }
        if cfg.d > 16 {
            return Err(Error::Config(format!("d = {} is beyond the supported 16", cfg.d)));
        }
        let mut memo = HashMap::new();
        memo.insert(State::absorbing(budget), Entry::new(S::zero(), None));
        Ok(Self { budget, cfg, memo })
    }

    pub fn with_defaults(budget: MistakeBudget) -> Result<Self> {
        Self::new(budget, SolverConfig::new(budget))
    }

    pub fn budget(&self) -> MistakeBudget {
        self.budget
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    /// Number of memoised states.
    pub fn len(&self) -> usize {
        self.memo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.memo.is_empty()
    }

    /// Already-computed value, if any.
    pub fn value(&self, state: &State) -> Option<&S> {
        self.memo.get(state).map(|e| &e.value)
    }

    /// Already-computed argmax move, if any.
    pub fn stored_move(&self, state: &State) -> Option<&AdversaryMove> {
        self.memo.get(state).and_then(|e| e.mv.as_ref())
    }

    /// Every memoised `(state, value)` pair in canonical order.
    pub fn entries(&self) -> Vec<(&State, &S)> {
        let mut out: Vec<_> = self.memo.iter().map(|(s, e)| (s, &e.value)).collect();
        out.sort_by(|a, b| crate::states::canonical_cmp(a.0, b.0));
        out
    }

    fn check_state(&self, state: &State) -> Result<()> {
        if state.budget() != self.budget {
            return Err(Error::InvalidState(format!(
                "{state} has b = {}, solver runs with b = {}",
                state.budget().0,
                self.budget.0
            )));
        }
        let p = phi(state);
        if p > self.cfg.phi_cap {
            return Err(Error::ResourceLimit {
                phi: p,
                cap: self.cfg.phi_cap,
            });
        }
        Ok(())
    }

    /// Exact minimax expected loss from `state`.
    pub fn minimax_loss(&mut self, state: &State) -> Result<S> {
        self.solve(state)?;
        Ok(self.memo[state].value.clone())
    }

    /// Fills the memo for every state reachable from `state`.
    pub fn solve(&mut self, state: &State) -> Result<()> {
        if self.memo.contains_key(state) {
            return Ok(());
        }
        self.check_state(state)?;
        let pending: Vec<State> = dominated_states(state)
            .into_iter()
            .filter(|s| !self.memo.contains_key(s))
            .collect();
        let pool = if self.cfg.threads > 1 {
            Some(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(self.cfg.threads)
                    .build()
                    .map_err(|e| Error::Internal(e.to_string()))?,
            )
        } else {
            None
        };
        // `pending` is sorted by phi; evaluate one phi layer at a time.
        let mut start = 0;
        while start < pending.len() {
            let layer_phi = phi(&pending[start]);
            let end = pending[start..]
                .iter()
                .position(|s| phi(s) != layer_phi)
                .map_or(pending.len(), |off| start + off);
            let layer = &pending[start..end];
            let memo = &self.memo;
            let cfg = &self.cfg;
            let results: Vec<Entry<S>> = match &pool {
                Some(pool) => pool.install(|| {
                    layer
                        .par_iter()
                        .map(|s| evaluate(s, memo, cfg))
                        .collect::<Result<_>>()
                })?,
                None => layer
                    .iter()
                    .map(|s| evaluate(s, memo, cfg))
                    .collect::<Result<_>>()?,
            };
            for (s, e) in layer.iter().zip(results) {
                self.memo.insert(s.clone(), e);
            }
            start = end;
        }
        Ok(())
    }

    /// An `(A, dec)` attaining the maximum; ties go to the first maximiser
    /// in canonical enumeration order.
    pub fn optimal_adversary_move(&mut self, state: &State) -> Result<AdversaryMove> {
        if state.is_absorbing() {
            return Err(Error::Domain(format!(
                "{state} is absorbing; the adversary has no move there"
            )));
        }
        self.solve(state)?;
        if let Some(mv) = self.stored_move(state) {
            return Ok(mv.clone());
        }
        // Loaded from a memo file without its move: solve the successors and
        // re-run the maximisation for this one state.
        for s in dominated_states(state) {
            if &s != state {
                self.solve(&s)?;
            }
        }
        let entry = evaluate(state, &self.memo, &self.cfg)?;
        let mv = entry.mv.clone().expect("non-absorbing states carry a move");
        self.memo.insert(state.clone(), entry);
        Ok(mv)
    }
}

struct Best<S> {
    value: S,
    approx: f64,
    choices: ChoiceSet,
    cursor: VoteCursor,
}

fn lookup<'m, S>(memo: &'m HashMap<State, Entry<S>>, counts: &[u32]) -> Result<&'m Entry<S>> {
    memo.get(counts)
        .ok_or_else(|| Error::Internal(format!("successor {counts:?} evaluated out of order")))
}

/// Successor rows for every slot of the cursor. Returns `None` if some slot
/// empties the state, otherwise the self-loop slot if there is one.
#[inline]
fn fill_successors(
    counts: &[u32],
    cursor: &VoteCursor,
    a: usize,
    rows: &mut [Vec<u32>],
) -> Option<Option<usize>> {
    let mut loop_slot = None;
    for (slot, row) in rows.iter_mut().enumerate().take(a) {
        successor_into(counts, |i| cursor.vote(i, slot), row);
        if row.iter().all(|&k| k == 0) {
            return None;
        }
        if row.as_slice() == counts {
            loop_slot = Some(slot);
        }
    }
    Some(loop_slot)
}

fn evaluate<S: LossScalar>(
    state: &State,
    memo: &HashMap<State, Entry<S>>,
    cfg: &SolverConfig,
) -> Result<Entry<S>> {
    if state.is_absorbing() {
        return Ok(Entry::new(S::zero(), None));
    }
    let counts = state.counts();
    let max_a = if cfg.pairs_only { 2 } else { cfg.d };
    let mut rows = vec![vec![0u32; counts.len()]; max_a];
    let mut best: Option<Best<S>> = None;
    let mut max_successor = f64::NEG_INFINITY;

    for choices in ChoiceSet::subsets(cfg.d, 2, max_a) {
        let a = choices.len();
        let mut cursor = VoteCursor::new(counts, a);
        loop {
            if let Some(loop_slot) = fill_successors(counts, &cursor, a, &mut rows) {
                let mut approx_sum = 0.0;
                for (slot, row) in rows.iter().enumerate().take(a) {
                    if Some(slot) != loop_slot {
                        let e = lookup(memo, row)?;
                        approx_sum += e.approx;
                        max_successor = max_successor.max(e.approx);
                    }
                }
                let approx = combine::<f64>(a, loop_slot.is_some(), approx_sum);
                if best.as_ref().is_none_or(|b| approx >= b.approx - PRUNE_EPS) {
                    let mut sum = S::zero();
                    for (slot, row) in rows.iter().enumerate().take(a) {
                        if Some(slot) != loop_slot {
                            sum = sum + lookup(memo, row)?.value.clone();
                        }
                    }
                    let value = combine(a, loop_slot.is_some(), sum);
                    if best.as_ref().is_none_or(|b| value > b.value) {
                        best = Some(Best {
                            approx: value.approx(),
                            value,
                            choices: choices.clone(),
                            cursor: cursor.clone(),
                        });
                    }
                }
            }
            if !cursor.advance() {
                break;
            }
        }
    }

    let best = best.ok_or_else(|| {
        Error::Internal(format!("no legal adversary move from non-absorbing {state}"))
    })?;
    if cfg.check_monotone && max_successor >= best.approx - PRUNE_EPS {
        verify_strict_decrease(state, &best.value, memo, cfg, max_a, &mut rows)?;
    }
    let mv = AdversaryMove {
        dec: best.cursor.to_decomposition(&best.choices),
        choices: best.choices,
    };
    Ok(Entry::new(best.value, Some(mv)))
}

/// Exact re-scan used only when the float screen cannot separate the state
/// value from its largest successor.
fn verify_strict_decrease<S: LossScalar>(
    state: &State,
    value: &S,
    memo: &HashMap<State, Entry<S>>,
    cfg: &SolverConfig,
    max_a: usize,
    rows: &mut [Vec<u32>],
) -> Result<()> {
    let counts = state.counts();
    let threshold = value.approx() - PRUNE_EPS;
    for choices in ChoiceSet::subsets(cfg.d, 2, max_a) {
        let a = choices.len();
        let mut cursor = VoteCursor::new(counts, a);
        loop {
            for (slot, row) in rows.iter_mut().enumerate().take(a) {
                successor_into(counts, |i| cursor.vote(i, slot), row);
                if row.iter().all(|&k| k == 0) || row.as_slice() == counts {
                    continue;
                }
                let e = lookup(memo, row)?;
                if e.approx >= threshold && e.value >= *value {
                    return Err(Error::Monotonicity {
                        state: state.to_string(),
                        successor: format!("({})", row.iter().map(u32::to_string).collect::<Vec<_>>().join(",")),
                    });
                }
            }
            if !cursor.advance() {
                break;
            }
        }
    }
    Ok(())
}

/// Closed-form loss with a perfect expert among `n`:
/// `0.5 * (k - 1 + n / 2^k)` with `2^k <= n < 2^(k+1)`.
pub fn perfect_expert_loss<S: LossScalar>(n: u64) -> Result<S> {
    if n == 0 {
        return Err(Error::Domain("perfect_expert_loss needs n >= 1".into()));
    }
    let k = 63 - n.leading_zeros();
    let two = S::from_u64(2).expect("fits");
    let level = S::from_i64(k as i64 - 1).expect("fits");
    let frac = S::from_u64(n).expect("fits") / S::from_u64(1u64 << k).expect("fits");
    Ok((level + frac) / two)
}

/// Persistable exact memo table.
///
/// Text format: a header `b=<int> d=<int> version=1`, one row per state
/// `k_0,…,k_b;<num>/<den>`, then optionally a `#moves` line followed by
/// `state;A=<i,j,…>;dec=<level0|level1|…>` rows.
#[derive(Clone, Debug, PartialEq)]
pub struct MemoTable {
    pub budget: MistakeBudget,
    pub d: usize,
    pub values: BTreeMap<State, BigRational>,
    pub moves: BTreeMap<State, AdversaryMove>,
}

impl MemoTable {
    pub fn new(budget: MistakeBudget, d: usize) -> Self {
        Self {
            budget,
            d,
            values: BTreeMap::new(),
            moves: BTreeMap::new(),
        }
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "b={} d={} version=1", self.budget.0, self.d)?;
        for (state, value) in &self.values {
            writeln!(w, "{};{}", state.to_comma_string(), value.render_ratio())?;
        }
        if !self.moves.is_empty() {
            writeln!(w, "#moves")?;
            for (state, mv) in &self.moves {
                writeln!(
                    w,
                    "{};A={};dec={}",
                    state.to_comma_string(),
                    mv.choices,
                    mv.dec.to_level_string()
                )?;
            }
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn read_from(r: impl BufRead) -> Result<Self> {
        let mut lines = r.lines().enumerate();
        let (_, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            msg: "empty memo file".into(),
        })?;
        let header = header?;
        let (budget, d) = parse_header(&header)?;
        let mut table = Self::new(budget, d);
        let mut in_moves = false;
        for (idx, line) in lines {
            let line = line?;
            let lineno = idx + 1;
            let bad = |msg: String| Error::Parse { line: lineno, msg };
            if line.is_empty() {
                continue;
            }
            if line == "#moves" {
                in_moves = true;
                continue;
            }
            let fields: Vec<&str> = line.split(';').collect();
            let state = State::parse(fields[0]).map_err(|e| bad(e.to_string()))?;
            if state.budget() != budget {
                return Err(bad(format!("{state} does not have b = {}", budget.0)));
            }
            if in_moves {
                let [_, a_field, dec_field] = fields[..] else {
                    return Err(bad(format!("expected 3 fields, got {}", fields.len())));
                };
                let a_spec = a_field
                    .strip_prefix("A=")
                    .ok_or_else(|| bad("missing A=".into()))?;
                let dec_spec = dec_field
                    .strip_prefix("dec=")
                    .ok_or_else(|| bad("missing dec=".into()))?;
                let choices = ChoiceSet::parse(a_spec, d).map_err(|e| bad(e.to_string()))?;
                let dec = Decomposition::parse_levels(dec_spec).map_err(|e| bad(e.to_string()))?;
                dec.validate(&state).map_err(|e| bad(e.to_string()))?;
                if dec.d() != d || !dec.is_supported_on(&choices) {
                    return Err(bad(format!("move {dec} does not fit A={choices}, d={d}")));
                }
                table.moves.insert(state, AdversaryMove { choices, dec });
            } else {
                let [_, value] = fields[..] else {
                    return Err(bad(format!("expected 2 fields, got {}", fields.len())));
                };
                let value =
                    parse_ratio(value).ok_or_else(|| bad(format!("bad rational {value:?}")))?;
                table.values.insert(state, value);
            }
        }
        Ok(table)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_from(BufReader::new(File::open(path)?))
    }
}

fn parse_header(line: &str) -> Result<(MistakeBudget, usize)> {
    let bad = |msg: &str| Error::Parse {
        line: 1,
        msg: format!("{msg} in header {line:?}"),
    };
    let mut b = None;
    let mut d = None;
    let mut version = None;
    for field in line.split_whitespace() {
        let (key, value) = field.split_once('=').ok_or_else(|| bad("malformed field"))?;
        let value: u32 = value.parse().map_err(|_| bad("non-integer value"))?;
        match key {
            "b" => b = Some(value),
            "d" => d = Some(value as usize),
            "version" => version = Some(value),
            _ => return Err(bad("unknown key")),
        }
    }
    if version != Some(1) {
        return Err(bad("unsupported version"));
    }
    Ok((
        MistakeBudget(b.ok_or_else(|| bad("missing b"))?),
        d.ok_or_else(|| bad("missing d"))?,
    ))
}

impl MinimaxSolver<BigRational> {
    pub fn to_memo(&self) -> MemoTable {
        let mut table = MemoTable::new(self.budget, self.cfg.d);
        for (state, entry) in &self.memo {
            table.values.insert(state.clone(), entry.value.clone());
            if let Some(mv) = &entry.mv {
                table.moves.insert(state.clone(), mv.clone());
            }
        }
        table
    }

    /// Merges a saved table; `b` and `d` must match this solver.
    pub fn load_memo(&mut self, table: MemoTable) -> Result<()> {
        if table.budget != self.budget {
            return Err(Error::Incompatible(format!(
                "table has b = {}, run has b = {}",
                table.budget.0, self.budget.0
            )));
        }
        if table.d != self.cfg.d {
            return Err(Error::Incompatible(format!(
                "table has d = {}, run has d = {}",
                table.d, self.cfg.d
            )));
        }
        let MemoTable {
            values, mut moves, ..
        } = table;
        for (state, value) in values {
            let mv = moves.remove(&state);
            self.memo.insert(state, Entry::new(value, mv));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ExactLoss;

    fn st(counts: &[u32]) -> State {
        State::new(counts.to_vec()).unwrap()
    }

    fn q(n: u64, d: u64) -> ExactLoss {
        ExactLoss::ratio(n, d)
    }

    fn solver(b: u32) -> MinimaxSolver<ExactLoss> {
        MinimaxSolver::with_defaults(MistakeBudget(b)).unwrap()
    }

    #[test]
    fn base_cases() {
        for b in 1..=3 {
            let mut s = solver(b);
            assert_eq!(s.minimax_loss(&State::absorbing(MistakeBudget(b))).unwrap(), q(0, 1));
            let mut one_left = vec![0; b as usize + 1];
            one_left[b as usize - 1] = 1;
            assert_eq!(s.minimax_loss(&st(&one_left)).unwrap(), q(1, 1));
        }
    }

    #[test]
    fn perfect_expert_small_values() {
        assert_eq!(perfect_expert_loss::<ExactLoss>(1).unwrap(), q(0, 1));
        assert_eq!(perfect_expert_loss::<ExactLoss>(3).unwrap(), q(3, 4));
        assert_eq!(perfect_expert_loss::<ExactLoss>(4).unwrap(), q(1, 1));
        assert!(matches!(
            perfect_expert_loss::<ExactLoss>(0),
            Err(Error::Domain(_))
        ));
        assert_eq!(solver(0).minimax_loss(&st(&[4])).unwrap(), q(1, 1));
    }

    #[test]
    fn brute_force_anchor_for_two_fresh_experts() {
        // Frozen from an independent full-tree expectimax.
        assert_eq!(solver(1).minimax_loss(&st(&[2, 0])).unwrap(), q(7, 4));
        assert_eq!(solver(1).minimax_loss(&st(&[3, 0])).unwrap(), q(67, 32));
        assert_eq!(solver(1).minimax_loss(&st(&[2, 1])).unwrap(), q(29, 16));
    }

    #[test]
    fn optimal_moves() {
        let mut s = solver(0);
        let mv = s.optimal_adversary_move(&st(&[2])).unwrap();
        assert_eq!(mv.choices, ChoiceSet::full(2));
        assert_eq!(mv.dec.to_part_string(), "1|1");

        let mut s = solver(1);
        let k = st(&[1, 0]);
        let mv = s.optimal_adversary_move(&k).unwrap();
        let succ = mv.successors(&k).unwrap();
        assert!(succ.iter().any(|(_, r)| r == &k));

        let mut s = solver(0);
        let k = st(&[3]);
        let mv = s.optimal_adversary_move(&k).unwrap();
        let v: ExactLoss = mv.value_with(&k, |r| Ok(s.value(r).unwrap().clone())).unwrap();
        assert_eq!(v, q(3, 4));
    }

    #[test]
    fn absorbing_state_has_no_move() {
        let mut s = solver(1);
        assert!(matches!(
            s.optimal_adversary_move(&State::absorbing(MistakeBudget(1))),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn cap_is_enforced() {
        let cfg = SolverConfig::new(MistakeBudget(1)).with_phi_cap(5);
        let mut s: MinimaxSolver<ExactLoss> = MinimaxSolver::new(MistakeBudget(1), cfg).unwrap();
        assert!(matches!(
            s.minimax_loss(&st(&[3, 0])),
            Err(Error::ResourceLimit { phi: 6, cap: 5 })
        ));
    }

    #[test]
    fn wrong_budget_is_rejected() {
        assert!(matches!(
            solver(1).minimax_loss(&st(&[1, 0, 0])),
            Err(Error::InvalidState(_))
        ));
    }

    #[test]
    fn float_solver_tracks_exact_solver() {
        let mut exact = solver(1);
        let mut float: MinimaxSolver<f64> = MinimaxSolver::with_defaults(MistakeBudget(1)).unwrap();
        let k = st(&[5, 3]);
        let e = exact.minimax_loss(&k).unwrap().approx();
        let f = float.minimax_loss(&k).unwrap();
        assert!((e - f).abs() < 1e-12);
    }

    #[test]
    fn memo_round_trip() {
        let mut s = solver(0);
        s.minimax_loss(&st(&[3])).unwrap();
        let table = s.to_memo();
        assert_eq!(table.values.len(), 3);
        assert_eq!(table.moves.len(), 2);
        let mut buf = Vec::new();
        table.write_to(&mut buf).unwrap();
        let back = MemoTable::read_from(buf.as_slice()).unwrap();
        assert_eq!(back, table);
    }

    #[test]
    fn memo_rejects_corruption_and_mismatch() {
        let text = "b=1 d=2 version=1\n0,1;0/1\n1,0;1/x\n";
        match MemoTable::read_from(text.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
        let table = MemoTable::read_from("b=1 d=2 version=1\n0,1;0/1\n".as_bytes()).unwrap();
        let mut s = solver(2);
        assert!(matches!(s.load_memo(table), Err(Error::Incompatible(_))));
    }

    #[test]
    fn loaded_values_without_moves_still_yield_moves() {
        let mut s = solver(1);
        s.minimax_loss(&st(&[2, 1])).unwrap();
        let mut table = s.to_memo();
        table.moves.clear();
        let mut fresh = solver(1);
        fresh.load_memo(table).unwrap();
        let mv = fresh.optimal_adversary_move(&st(&[2, 1])).unwrap();
        assert_eq!(Some(&mv), s.stored_move(&st(&[2, 1])));
    }

    #[test]
    fn parallel_matches_serial() {
        let k = st(&[6, 4]);
        let mut serial = solver(1);
        let cfg = SolverConfig::new(MistakeBudget(1)).with_threads(4);
        let mut par: MinimaxSolver<ExactLoss> = MinimaxSolver::new(MistakeBudget(1), cfg).unwrap();
        assert_eq!(serial.minimax_loss(&k).unwrap(), par.minimax_loss(&k).unwrap());
        for (state, value) in serial.entries() {
            assert_eq!(par.value(state), Some(value));
            assert_eq!(par.stored_move(state), serial.stored_move(state));
        }
    }
}
