//! State algebra: mistake histograms, decompositions, successors and
//! reachability.
//!
//! A [`State`] `(k_0, …, k_b)` counts the surviving experts by how many
//! mistakes they have made. A [`Decomposition`] splits every level across the
//! `d` choices; once the correct choice `j` is revealed, experts voting `j`
//! keep their level and everyone else moves up one level (or drops out from
//! level `b`).
//!
//! Choices are 0-based in the API and printed 1-based in every text format.

use std::cmp::Ordering;
use std::collections::{HashSet, VecDeque};
use std::fmt;

use num_traits::Float;

use crate::error::{Error, Result};

/// Upper bound `b` on the mistakes of the best expert.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MistakeBudget(pub u32);

impl MistakeBudget {
    pub fn levels(self) -> usize {
        self.0 as usize + 1
    }
}

/// Mistake-count histogram of the surviving experts. Never all-zero.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct State {
    counts: Vec<u32>,
}

impl State {
    pub fn new(counts: Vec<u32>) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::InvalidState("a state needs at least one level".into()));
        }
        if counts.iter().all(|&k| k == 0) {
            return Err(Error::InvalidState(
                "the all-zero vector is outside the domain".into(),
            ));
        }
        Ok(Self { counts })
    }

    /// `(n, 0, …, 0)`: `n` fresh experts.
    pub fn start(n: u32, budget: MistakeBudget) -> Result<Self> {
        let mut counts = vec![0; budget.levels()];
        counts[0] = n;
        Self::new(counts)
    }

    /// `(0, …, 0, 1)`: a single expert that can no longer err.
    pub fn absorbing(budget: MistakeBudget) -> Self {
        let mut counts = vec![0; budget.levels()];
        counts[budget.0 as usize] = 1;
        Self { counts }
    }

    /// `None` when every entry is zero.
    pub fn from_counts(counts: Vec<u32>) -> Option<Self> {
        Self::new(counts).ok()
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn budget(&self) -> MistakeBudget {
        MistakeBudget(self.counts.len() as u32 - 1)
    }

    pub fn levels(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().map(|&k| k as u64).sum()
    }

    pub fn is_absorbing(&self) -> bool {
        let (last, rest) = self.counts.split_last().expect("non-empty");
        *last == 1 && rest.iter().all(|&k| k == 0)
    }

    /// Lowest level holding at least one expert.
    pub fn leader_level(&self) -> usize {
        self.counts.iter().position(|&k| k > 0).expect("non-zero state")
    }

    /// Colon-separated rendering `k0:k1:…:kb`.
    pub fn to_colon_string(&self) -> String {
        join(&self.counts, ":")
    }

    /// Comma-separated rendering `k0,k1,…,kb`.
    pub fn to_comma_string(&self) -> String {
        join(&self.counts, ",")
    }

    /// Accepts `,` or `:` separators, with or without parentheses.
    pub fn parse(text: &str) -> Result<Self> {
        let trimmed = text.trim().trim_start_matches('(').trim_end_matches(')');
        let counts = trimmed
            .split([',', ':'])
            .map(|part| {
                part.trim()
                    .parse::<u32>()
                    .map_err(|e| Error::InvalidState(format!("bad count {part:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(counts)
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", join(&self.counts, ","))
    }
}

/// Orders states by `phi` first, then lexicographically.
pub fn canonical_cmp(a: &State, b: &State) -> Ordering {
    phi(a).cmp(&phi(b)).then_with(|| a.counts.cmp(&b.counts))
}

/// Remaining mistake budget `sum_i k_i (b - i + 1)`.
///
/// Every non-self-loop successor has strictly smaller `phi`, which makes it
/// the termination measure of the dynamic program.
pub fn phi(state: &State) -> u64 {
    phi_of(state.counts())
}

pub(crate) fn phi_of(counts: &[u32]) -> u64 {
    let b = counts.len() as u64 - 1;
    counts
        .iter()
        .enumerate()
        .map(|(i, &k)| k as u64 * (b - i as u64 + 1))
        .sum()
}

/// Nonempty subset `A` of the `d` choices.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ChoiceSet {
    members: Vec<usize>,
    d: usize,
}

impl ChoiceSet {
    /// `members` are 0-based choice indices.
    pub fn new(mut members: Vec<usize>, d: usize) -> Result<Self> {
        members.sort_unstable();
        members.dedup();
        if members.is_empty() {
            return Err(Error::Config("a choice set must be nonempty".into()));
        }
        if let Some(&bad) = members.iter().find(|&&m| m >= d) {
            return Err(Error::ChoiceOutOfRange { choice: bad + 1, d });
        }
        Ok(Self { members, d })
    }

    pub fn full(d: usize) -> Self {
        Self {
            members: (0..d).collect(),
            d,
        }
    }

    fn from_mask(mask: u32, d: usize) -> Self {
        Self {
            members: (0..d).filter(|i| mask & (1 << i) != 0).collect(),
            d,
        }
    }

    /// Every subset with at least `min_size` members, in ascending bitmask
    /// order. `max_size` limits the size from above.
    pub fn subsets(d: usize, min_size: usize, max_size: usize) -> Vec<ChoiceSet> {
        (1u32..(1 << d))
            .filter(|m| {
                let size = m.count_ones() as usize;
                size >= min_size && size <= max_size
            })
            .map(|m| Self::from_mask(m, d))
            .collect()
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn contains(&self, choice: usize) -> bool {
        self.members.binary_search(&choice).is_ok()
    }

    /// Parses a 1-based list such as `1,2`.
    pub fn parse(text: &str, d: usize) -> Result<Self> {
        let members = text
            .split(',')
            .map(|p| {
                let v: usize = p
                    .trim()
                    .parse()
                    .map_err(|e| Error::Config(format!("bad choice {p:?}: {e}")))?;
                if v == 0 {
                    return Err(Error::ChoiceOutOfRange { choice: 0, d });
                }
                Ok(v - 1)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(members, d)
    }
}

impl fmt::Display for ChoiceSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let one_based: Vec<u32> = self.members.iter().map(|&m| m as u32 + 1).collect();
        f.write_str(&join(&one_based, ","))
    }
}

/// Partition of a state's experts by the choice they vote for next.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Decomposition {
    /// `parts[j][i]`: experts with `i` mistakes voting for choice `j`.
    parts: Vec<Vec<u32>>,
}

impl Decomposition {
    pub fn new(parts: Vec<Vec<u32>>) -> Result<Self> {
        let Some(first) = parts.first() else {
            return Err(Error::InvalidDecomposition("no parts".into()));
        };
        let levels = first.len();
        if levels == 0 || parts.iter().any(|p| p.len() != levels) {
            return Err(Error::InvalidDecomposition(
                "all parts must have b+1 entries".into(),
            ));
        }
        Ok(Self { parts })
    }

    /// Every expert votes for `choice`.
    pub fn unanimous(state: &State, choice: usize, d: usize) -> Result<Self> {
        if choice >= d {
            return Err(Error::ChoiceOutOfRange {
                choice: choice + 1,
                d,
            });
        }
        let mut parts = vec![vec![0; state.levels()]; d];
        parts[choice] = state.counts().to_vec();
        Ok(Self { parts })
    }

    pub fn d(&self) -> usize {
        self.parts.len()
    }

    pub fn levels(&self) -> usize {
        self.parts[0].len()
    }

    pub fn part(&self, choice: usize) -> &[u32] {
        &self.parts[choice]
    }

    pub fn parts(&self) -> &[Vec<u32>] {
        &self.parts
    }

    /// Votes for `choice` from experts on `level`.
    pub fn votes(&self, choice: usize, level: usize) -> u32 {
        self.parts[choice][level]
    }

    /// Checks that the column sums recover `state`.
    pub fn validate(&self, state: &State) -> Result<()> {
        if self.levels() != state.levels() {
            return Err(Error::InvalidDecomposition(format!(
                "decomposition has {} levels, state {} has {}",
                self.levels(),
                state,
                state.levels()
            )));
        }
        for (level, &k) in state.counts().iter().enumerate() {
            let sum: u64 = self.parts.iter().map(|p| p[level] as u64).sum();
            if sum != k as u64 {
                return Err(Error::InvalidDecomposition(format!(
                    "level {level} sums to {sum}, state {state} has {k}"
                )));
            }
        }
        Ok(())
    }

    /// True when no expert votes outside `choices`.
    pub fn is_supported_on(&self, choices: &ChoiceSet) -> bool {
        self.parts
            .iter()
            .enumerate()
            .all(|(j, p)| choices.contains(j) || p.iter().all(|&v| v == 0))
    }

    /// `k0,k1|k0,k1|…`, one group per choice.
    pub fn to_part_string(&self) -> String {
        self.parts
            .iter()
            .map(|p| join(p, ","))
            .collect::<Vec<_>>()
            .join("|")
    }

    /// `c1,c2,…|c1,c2,…`, one group per level.
    pub fn to_level_string(&self) -> String {
        (0..self.levels())
            .map(|level| {
                let row: Vec<u32> = self.parts.iter().map(|p| p[level]).collect();
                join(&row, ",")
            })
            .collect::<Vec<_>>()
            .join("|")
    }

    /// Inverse of [`Decomposition::to_level_string`].
    pub fn parse_levels(text: &str) -> Result<Self> {
        let rows = text
            .split('|')
            .map(|row| {
                row.split(',')
                    .map(|v| {
                        v.trim().parse::<u32>().map_err(|e| {
                            Error::InvalidDecomposition(format!("bad entry {v:?}: {e}"))
                        })
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let d = rows.first().map_or(0, Vec::len);
        if d == 0 || rows.iter().any(|r| r.len() != d) {
            return Err(Error::InvalidDecomposition(format!(
                "ragged level rows in {text:?}"
            )));
        }
        let parts = (0..d).map(|j| rows.iter().map(|r| r[j]).collect()).collect();
        Self::new(parts)
    }
}

impl fmt::Display for Decomposition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_part_string())
    }
}

/// Successor counts for the choice whose votes are `part`, written into
/// `out`. Only the correct choice's own part matters: everyone else on level
/// `i - 1` moves up to level `i`.
#[inline]
pub(crate) fn successor_into(counts: &[u32], part: impl Fn(usize) -> u32, out: &mut [u32]) {
    out[0] = part(0);
    for i in 1..counts.len() {
        out[i] = part(i) + counts[i - 1] - part(i - 1);
    }
}

/// State reached when `choice` (0-based) turns out correct. `Ok(None)` means
/// every surviving expert erred from level `b`, which leaves the all-zero
/// vector; callers must treat such a move as illegal for the adversary.
pub fn successor(state: &State, dec: &Decomposition, choice: usize) -> Result<Option<State>> {
    dec.validate(state)?;
    if choice >= dec.d() {
        return Err(Error::ChoiceOutOfRange {
            choice: choice + 1,
            d: dec.d(),
        });
    }
    let mut out = vec![0; state.levels()];
    let part = dec.part(choice);
    successor_into(state.counts(), |i| part[i], &mut out);
    Ok(State::from_counts(out))
}

/// Lexicographic successor of a composition in place. Returns `false` after
/// the last composition `(k, 0, …, 0)`.
#[inline]
pub(crate) fn next_composition(row: &mut [u32]) -> bool {
    let a = row.len();
    let mut tail = 0;
    for i in (0..a.saturating_sub(1)).rev() {
        tail += row[i + 1];
        if tail > 0 {
            row[i] += 1;
            for v in &mut row[i + 1..] {
                *v = 0;
            }
            row[a - 1] = tail - 1;
            return true;
        }
    }
    false
}

#[inline]
pub(crate) fn reset_composition(row: &mut [u32], total: u32) {
    for v in row.iter_mut() {
        *v = 0;
    }
    if let Some(last) = row.last_mut() {
        *last = total;
    }
}

/// Odometer over per-level compositions of a state into `slots` parts.
///
/// Level rows are laid out contiguously (`votes[level * slots + slot]`); each
/// row walks its compositions lexicographically and the last level turns
/// fastest.
#[derive(Clone, Debug)]
pub(crate) struct VoteCursor {
    totals: Vec<u32>,
    slots: usize,
    votes: Vec<u32>,
}

impl VoteCursor {
    pub(crate) fn new(totals: &[u32], slots: usize) -> Self {
        let mut votes = vec![0; totals.len() * slots];
        for (level, &k) in totals.iter().enumerate() {
            reset_composition(&mut votes[level * slots..(level + 1) * slots], k);
        }
        Self {
            totals: totals.to_vec(),
            slots,
            votes,
        }
    }

    #[inline]
    pub(crate) fn vote(&self, level: usize, slot: usize) -> u32 {
        self.votes[level * self.slots + slot]
    }

    pub(crate) fn advance(&mut self) -> bool {
        let s = self.slots;
        for level in (0..self.totals.len()).rev() {
            let row = &mut self.votes[level * s..(level + 1) * s];
            if next_composition(row) {
                return true;
            }
            reset_composition(row, self.totals[level]);
        }
        false
    }

    /// Expands the slot columns onto the members of `choices`.
    pub(crate) fn to_decomposition(&self, choices: &ChoiceSet) -> Decomposition {
        let levels = self.totals.len();
        let mut parts = vec![vec![0; levels]; choices.d()];
        for (slot, &choice) in choices.members().iter().enumerate() {
            for (level, v) in parts[choice].iter_mut().enumerate() {
                *v = self.vote(level, slot);
            }
        }
        Decomposition { parts }
    }
}

/// Lazy sequence of every decomposition of `state` that puts no vote
/// outside `choices`, in canonical order (per-level lexicographic
/// compositions, mixed-radix over levels with the last level fastest).
pub struct Decompositions {
    cursor: VoteCursor,
    choices: ChoiceSet,
    done: bool,
}

impl Iterator for Decompositions {
    type Item = Decomposition;

    fn next(&mut self) -> Option<Decomposition> {
        if self.done {
            return None;
        }
        let dec = self.cursor.to_decomposition(&self.choices);
        self.done = !self.cursor.advance();
        Some(dec)
    }
}

pub fn enumerate_decompositions(state: &State, choices: &ChoiceSet) -> Decompositions {
    Decompositions {
        cursor: VoteCursor::new(state.counts(), choices.len()),
        choices: choices.clone(),
        done: false,
    }
}

/// Number of decompositions [`enumerate_decompositions`] yields:
/// `prod_i C(k_i + a - 1, a - 1)`.
pub fn decomposition_count(state: &State, a: usize) -> u128 {
    state
        .counts()
        .iter()
        .map(|&k| binomial(k as u64 + a as u64 - 1, a as u64 - 1))
        .product()
}

pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Componentwise prefix-sum domination: `to` keeps no more experts at or
/// below each level than `from` does. Every successor satisfies it, and
/// moving single experts one level at a time realises any dominated state.
pub fn dominates(from: &State, to: &State) -> bool {
    if from.levels() != to.levels() {
        return false;
    }
    let mut pf = 0u64;
    let mut pt = 0u64;
    from.counts().iter().zip(to.counts()).all(|(&f, &t)| {
        pf += f as u64;
        pt += t as u64;
        pt <= pf
    })
}

/// True when `to` can be reached from `from` through a chain of
/// successors (the empty chain included). Breadth-first search, pruning
/// states whose `phi` already fell below `phi(to)`.
pub fn is_reachable(from: &State, to: &State) -> bool {
    if from.levels() != to.levels() {
        return false;
    }
    if from == to {
        return true;
    }
    let target_phi = phi(to);
    if phi(from) < target_phi {
        return false;
    }
    let mut seen = HashSet::new();
    let mut queue = VecDeque::new();
    seen.insert(from.clone());
    queue.push_back(from.clone());
    let mut out = vec![0; from.levels()];
    while let Some(current) = queue.pop_front() {
        let counts = current.counts();
        let mut cursor = VoteCursor::new(counts, 2);
        loop {
            successor_into(counts, |i| cursor.vote(i, 0), &mut out);
            if phi_of(&out) >= target_phi && out.iter().any(|&k| k > 0) {
                if out == to.counts() {
                    return true;
                }
                if !seen.contains(out.as_slice()) {
                    let next = State { counts: out.clone() };
                    seen.insert(next.clone());
                    queue.push_back(next);
                }
            }
            if !cursor.advance() {
                break;
            }
        }
    }
    false
}

impl std::borrow::Borrow<[u32]> for State {
    fn borrow(&self) -> &[u32] {
        &self.counts
    }
}

/// Every state reachable from `state` (itself included), in canonical order.
pub fn dominated_states(state: &State) -> Vec<State> {
    let prefix: Vec<u64> = state
        .counts()
        .iter()
        .scan(0u64, |acc, &k| {
            *acc += k as u64;
            Some(*acc)
        })
        .collect();
    let mut out = Vec::new();
    let mut current = vec![0u32; state.levels()];
    fill_dominated(&prefix, 0, 0, &mut current, &mut out);
    out.sort_by(canonical_cmp);
    out
}

fn fill_dominated(
    prefix: &[u64],
    level: usize,
    used: u64,
    current: &mut Vec<u32>,
    out: &mut Vec<State>,
) {
    if level == prefix.len() {
        if used > 0 {
            out.push(State {
                counts: current.clone(),
            });
        }
        return;
    }
    for k in 0..=(prefix[level] - used) {
        current[level] = k as u32;
        fill_dominated(prefix, level + 1, used + k, current, out);
    }
    current[level] = 0;
}

/// Every state with `b + 1` levels and `phi <= cap`, in canonical order.
pub fn states_up_to_phi(budget: MistakeBudget, cap: u64) -> Vec<State> {
    let levels = budget.levels();
    let mut out = Vec::new();
    let mut current = vec![0u32; levels];
    fill_by_phi(levels, 0, cap, &mut current, &mut out);
    out.sort_by(canonical_cmp);
    out
}

fn fill_by_phi(levels: usize, level: usize, left: u64, current: &mut Vec<u32>, out: &mut Vec<State>) {
    if level == levels {
        if current.iter().any(|&k| k > 0) {
            out.push(State {
                counts: current.clone(),
            });
        }
        return;
    }
    let weight = (levels - level) as u64;
    for k in 0..=(left / weight) {
        current[level] = k as u32;
        fill_by_phi(levels, level + 1, left - k * weight, current, out);
    }
    current[level] = 0;
}

/// State with real-valued entries, used by the concavity shortcut.
#[derive(Clone, Debug, PartialEq)]
pub struct RealState<F> {
    counts: Vec<F>,
}

impl<F: Float> RealState<F> {
    pub fn new(counts: Vec<F>) -> Result<Self> {
        if counts.is_empty() || counts.iter().any(|&k| k < F::zero() || !k.is_finite()) {
            return Err(Error::InvalidState(
                "real state entries must be finite and nonnegative".into(),
            ));
        }
        if counts.iter().all(|&k| k == F::zero()) {
            return Err(Error::InvalidState(
                "the all-zero vector is outside the domain".into(),
            ));
        }
        Ok(Self { counts })
    }

    pub fn from_state(state: &State) -> Self {
        Self {
            counts: state
                .counts()
                .iter()
                .map(|&k| F::from(k).expect("u32 converts"))
                .collect(),
        }
    }

    pub fn counts(&self) -> &[F] {
        &self.counts
    }

    /// Successor for choice 1 of the uniform split `(k/a, …, k/a, 0, …)`.
    pub fn uniform_split_successor(&self, a: usize) -> Self {
        let a = F::from(a).expect("usize converts");
        let share = |k: F| k / a;
        let mut out = Vec::with_capacity(self.counts.len());
        out.push(share(self.counts[0]));
        for i in 1..self.counts.len() {
            out.push(share(self.counts[i]) + self.counts[i - 1] - share(self.counts[i - 1]));
        }
        Self { counts: out }
    }
}

fn join(values: &[u32], sep: &str) -> String {
    values
        .iter()
        .map(u32::to_string)
        .collect::<Vec<_>>()
        .join(sep)
}
