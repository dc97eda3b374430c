//! Variable selection driven by the mutual information estimator.
//!
//! Two greedy procedures produce candidate sets:
//!
//! - *Option 1* ranks variables by their individual MI with the target.
//! - *Option 2* grows a set by adding, at each step, the variable that
//!   maximizes the MI of the enlarged set, follows each addition with a
//!   backward step that may drop one earlier variable, and stops as soon as a
//!   forward step lowers the MI.
//!
//! All of B (Option 2) plus the best-ranked Option 1 variables form a pool C
//! of P variables, whose `2^P - 1` non-empty subsets are then searched
//! exhaustively for the highest MI.
//!
//! Ties are broken deterministically: lowest column index for the greedy
//! steps; smaller cardinality, then lexicographic column order, for the
//! exhaustive search. MI values are compared as they come out of the
//! estimator, negative ones included.

use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::error::{Error, Result};
use crate::mi::{MiEstimate, MiEstimator};
use crate::par;

/// Largest candidate pool accepted by [`exhaustive_search`].
pub const MAX_EXHAUSTIVE: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Provenance {
    Option1,
    Option2,
    Union,
    Exhaustive,
}

/// Ordered set of distinct column indices.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct VariableSubset {
    indices: Vec<usize>,
    provenance: Provenance,
}

impl VariableSubset {
    pub fn new(indices: Vec<usize>, provenance: Provenance) -> Result<Self> {
        let mut sorted = indices.clone();
        sorted.sort_unstable();
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::DuplicateIndex { index: w[0] });
        }
        Ok(VariableSubset { indices, provenance })
    }

    pub fn empty(provenance: Provenance) -> Self {
        VariableSubset { indices: Vec::new(), provenance }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, column: usize) -> bool {
        self.indices.contains(&column)
    }

    pub fn is_subset_of(&self, other: &VariableSubset) -> bool {
        self.indices.iter().all(|&c| other.contains(c))
    }

    pub fn sorted(&self) -> Vec<usize> {
        let mut s = self.indices.clone();
        s.sort_unstable();
        s
    }

    fn with(&self, column: usize) -> VariableSubset {
        let mut indices = self.indices.clone();
        indices.push(column);
        VariableSubset { indices, provenance: self.provenance }
    }

    fn without(&self, column: usize) -> VariableSubset {
        let indices = self.indices.iter().copied().filter(|&c| c != column).collect();
        VariableSubset { indices, provenance: self.provenance }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum StepKind {
    Forward,
    Backward,
    Stop,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Decision {
    /// Forward addition kept.
    Accepted,
    /// Forward addition lowered the MI; the procedure ends without it.
    Rejected,
    /// Backward removal applied.
    Removed,
    /// No removal raised the MI.
    Kept,
    /// No unselected variable left.
    Exhausted,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TraceStep {
    pub kind: StepKind,
    /// Variable added (forward) or removed / best removal candidate (backward).
    pub candidate: Option<usize>,
    /// Subset whose MI is logged.
    pub subset: Vec<usize>,
    pub mi: Option<f64>,
    pub decision: Decision,
}

/// Audit log of an Option 2 run.
#[derive(Debug, Clone, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SelectionTrace {
    pub steps: Vec<TraceStep>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RankedVariable {
    pub column: usize,
    pub mi: f64,
}

/// Evaluates every column alone and returns the `count` best, by descending
/// MI, together with the complete ranking.
pub fn rank_option1(est: &MiEstimator, count: usize) -> Result<(VariableSubset, Vec<RankedVariable>)> {
    let m = est.n_variables();
    if count > m {
        return Err(Error::CountTooLarge { requested: count, available: m });
    }
    let values = par::map_indexed(m, |j| est.estimate(&[j]));
    let mut ranking = values
        .into_iter()
        .enumerate()
        .map(|(column, r)| r.map(|e| RankedVariable { column, mi: e.value }))
        .collect::<Result<Vec<_>>>()?;
    ranking.sort_by(|a, b| b.mi.total_cmp(&a.mi).then(a.column.cmp(&b.column)));
    let top = ranking[..count].iter().map(|r| r.column).collect();
    Ok((VariableSubset { indices: top, provenance: Provenance::Option1 }, ranking))
}

/// Adds the unselected variable maximizing the MI of the enlarged set.
pub fn forward_step(est: &MiEstimator, current: &VariableSubset) -> Result<(VariableSubset, MiEstimate)> {
    let candidates: Vec<usize> = (0..est.n_variables()).filter(|&j| !current.contains(j)).collect();
    if candidates.is_empty() {
        return Err(Error::NoCandidates);
    }
    let values = par::map_indexed(candidates.len(), |c| {
        let mut s = current.indices.clone();
        s.push(candidates[c]);
        est.estimate(&s)
    });
    let mut best: Option<(usize, MiEstimate)> = None;
    for (c, v) in values.into_iter().enumerate() {
        let v = v?;
        // candidates ascend, so strict improvement keeps the lowest index on ties
        if best.as_ref().map_or(true, |(_, b)| v.value > b.value) {
            best = Some((candidates[c], v));
        }
    }
    let (column, mi) = best.ok_or(Error::NoCandidates)?;
    Ok((current.with(column), mi))
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BackwardOutcome {
    pub subset: VariableSubset,
    /// Column dropped, if any removal strictly raised the MI.
    pub removed: Option<usize>,
    /// MI of the returned subset.
    pub mi: MiEstimate,
    /// Best removal candidate and the MI without it.
    pub best_candidate: (usize, MiEstimate),
}

/// Tries removing each variable except `protected`; removes the one whose
/// removal raises the MI most, only if it strictly exceeds the MI of
/// `current`. At most one variable is removed.
pub fn backward_step(est: &MiEstimator, current: &VariableSubset, protected: usize) -> Result<BackwardOutcome> {
    let full = est.estimate(current.indices())?;
    backward_from(est, current, protected, full)
}

fn backward_from(
    est: &MiEstimator,
    current: &VariableSubset,
    protected: usize,
    full: MiEstimate,
) -> Result<BackwardOutcome> {
    if !current.contains(protected) {
        return Err(Error::ProtectedNotSelected(protected));
    }
    if current.len() < 2 {
        return Err(Error::SubsetTooSmall(current.len()));
    }
    let mut removable: Vec<usize> = current.indices.iter().copied().filter(|&c| c != protected).collect();
    removable.sort_unstable();
    let values = par::map_indexed(removable.len(), |r| est.estimate(current.without(removable[r]).indices()));
    let mut best: Option<(usize, MiEstimate)> = None;
    for (r, v) in values.into_iter().enumerate() {
        let v = v?;
        if best.as_ref().map_or(true, |(_, b)| v.value > b.value) {
            best = Some((removable[r], v));
        }
    }
    let best = best.ok_or(Error::SubsetTooSmall(current.len()))?;
    if best.1.value > full.value {
        Ok(BackwardOutcome { subset: current.without(best.0), removed: Some(best.0), mi: best.1, best_candidate: best })
    } else {
        Ok(BackwardOutcome { subset: current.clone(), removed: None, mi: full, best_candidate: best })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Option2Config {
    /// Repeat the backward step until it stops removing (default: one pass).
    pub iterate_backward: bool,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Option2Result {
    pub subset: VariableSubset,
    pub mi: MiEstimate,
    pub trace: SelectionTrace,
}

/// Forward selection with backward steps, stopped when a forward step
/// decreases the MI of the accepted (post-backward) set.
pub fn run_option2(est: &MiEstimator, config: Option2Config) -> Result<Option2Result> {
    let mut trace = SelectionTrace::default();
    let mut current = VariableSubset::empty(Provenance::Option2);
    let mut current_mi: Option<MiEstimate> = None;
    loop {
        if current.len() == est.n_variables() {
            trace.steps.push(TraceStep {
                kind: StepKind::Stop,
                candidate: None,
                subset: current.indices.clone(),
                mi: current_mi.map(|m| m.value),
                decision: Decision::Exhausted,
            });
            break;
        }
        let (grown, grown_mi) = forward_step(est, &current)?;
        let added = *grown.indices.last().expect("forward step adds a variable");
        let decreased = current_mi.is_some_and(|m| grown_mi.value < m.value);
        trace.steps.push(TraceStep {
            kind: StepKind::Forward,
            candidate: Some(added),
            subset: grown.indices.clone(),
            mi: Some(grown_mi.value),
            decision: if decreased { Decision::Rejected } else { Decision::Accepted },
        });
        if decreased {
            trace.steps.push(TraceStep {
                kind: StepKind::Stop,
                candidate: None,
                subset: current.indices.clone(),
                mi: current_mi.map(|m| m.value),
                decision: Decision::Rejected,
            });
            break;
        }
        current = grown;
        let mut mi = grown_mi;
        while current.len() >= 2 {
            let out = backward_from(est, &current, added, mi)?;
            let (cand, cand_mi) = out.best_candidate;
            trace.steps.push(TraceStep {
                kind: StepKind::Backward,
                candidate: Some(cand),
                subset: current.without(cand).indices,
                mi: Some(cand_mi.value),
                decision: if out.removed.is_some() { Decision::Removed } else { Decision::Kept },
            });
            let removed = out.removed.is_some();
            current = out.subset;
            mi = out.mi;
            if !removed || !config.iterate_backward {
                break;
            }
        }
        current_mi = Some(mi);
    }
    let mi = match current_mi {
        Some(mi) => mi,
        None => return Err(Error::NoCandidates),
    };
    Ok(Option2Result { subset: current, mi, trace })
}

/// Keeps all of `b` and appends the best-ranked variables of `a_rank` not
/// already present until the pool holds `p` variables.
pub fn build_candidate_set(a_rank: &[usize], b: &VariableSubset, p: usize) -> Result<VariableSubset> {
    if b.len() > p {
        return Err(Error::PoolSmallerThanB { b: b.len(), p });
    }
    let mut indices = b.indices.clone();
    for &c in a_rank {
        if indices.len() == p {
            break;
        }
        if !indices.contains(&c) {
            indices.push(c);
        }
    }
    if indices.len() < p {
        return Err(Error::CountTooLarge { requested: p, available: indices.len() });
    }
    VariableSubset::new(indices, Provenance::Union)
}

/// Evaluates every non-empty subset of `pool` and returns the one with the
/// highest MI.
pub fn exhaustive_search(est: &MiEstimator, pool: &VariableSubset) -> Result<(VariableSubset, MiEstimate)> {
    let p = pool.len();
    if p > MAX_EXHAUSTIVE {
        return Err(Error::CandidatePoolTooLarge { len: p, max: MAX_EXHAUSTIVE });
    }
    if p == 0 {
        return Err(Error::EmptySubset);
    }
    let columns = pool.sorted();
    let subset_of = |mask: usize| -> Vec<usize> {
        columns.iter().enumerate().filter(|(b, _)| mask >> b & 1 == 1).map(|(_, &c)| c).collect()
    };
    let count = (1usize << p) - 1;
    let values = par::map_indexed(count, |i| est.estimate(&subset_of(i + 1)).map(|e| e.value));
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values.into_iter().enumerate() {
        let (mask, v) = (i + 1, v?);
        let better = match best {
            None => true,
            Some((bm, bv)) => match v.total_cmp(&bv) {
                Ordering::Greater => true,
                Ordering::Less => false,
                Ordering::Equal => tie_break(mask, bm, &subset_of) == Ordering::Less,
            },
        };
        if better {
            best = Some((mask, v));
        }
    }
    let (mask, value) = best.ok_or(Error::EmptySubset)?;
    let subset = VariableSubset::new(subset_of(mask), Provenance::Exhaustive)?;
    Ok((subset, MiEstimate { value, k: est.k(), n_samples: est.n_samples() }))
}

fn tie_break(a: usize, b: usize, subset_of: &impl Fn(usize) -> Vec<usize>) -> Ordering {
    a.count_ones().cmp(&b.count_ones()).then_with(|| subset_of(a).cmp(&subset_of(b)))
}

/// Every intermediate product of the full selection pipeline.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Selection {
    /// Complete Option 1 ranking.
    pub ranking: Vec<RankedVariable>,
    /// Option 1 variables used to fill the pool.
    pub a: VariableSubset,
    pub b: VariableSubset,
    pub b_mi: MiEstimate,
    pub c: VariableSubset,
    pub winner: VariableSubset,
    pub winner_mi: MiEstimate,
    pub trace: SelectionTrace,
}

/// Option 2, Option 1 ranking, pool of `p` variables, exhaustive search.
pub fn select(est: &MiEstimator, p: usize, config: Option2Config) -> Result<Selection> {
    if p > MAX_EXHAUSTIVE {
        return Err(Error::CandidatePoolTooLarge { len: p, max: MAX_EXHAUSTIVE });
    }
    let p = p.min(est.n_variables());
    let option2 = run_option2(est, config)?;
    let (_, ranking) = rank_option1(est, 0)?;
    let order: Vec<usize> = ranking.iter().map(|r| r.column).collect();
    let c = build_candidate_set(&order, &option2.subset, p.max(option2.subset.len()))?;
    let a_members: Vec<usize> = c.indices()[option2.subset.len()..].to_vec();
    // A is the Option 1 prefix that was consumed to fill the pool.
    let consumed = order.iter().position(|col| a_members.last() == Some(col)).map_or(0, |pos| pos + 1);
    let a = VariableSubset::new(order[..consumed].to_vec(), Provenance::Option1)?;
    let (winner, winner_mi) = exhaustive_search(est, &c)?;
    Ok(Selection { ranking, a, b: option2.subset, b_mi: option2.mi, c, winner, winner_mi, trace: option2.trace })
}
