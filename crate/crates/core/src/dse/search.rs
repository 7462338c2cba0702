use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::{Candidate, DseError, DseResult};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchStats {
    /// Search-tree nodes visited, root included.
    pub explored: u64,
    /// Branches cut because their optimistic latency exceeds the incumbent.
    pub pruned_bound: u64,
    /// Branches cut because no completion fits the budget.
    pub pruned_infeasible: u64,
}

impl SearchStats {
    pub fn pruned(&self) -> u64 {
        self.pruned_bound + self.pruned_infeasible
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SelectOptions {
    /// Record the candidate ids of every pruned partial selection.
    pub trace_pruned: bool,
}

/// Relative slack on the bound test, so rounding in the bound never cuts a tie.
const BOUND_SLACK: f64 = 1e-12;

/// Ordering of complete selections: latency, then device memory, then the
/// per-instance `(iteration, model, id)` sequence.
#[derive(Clone, Debug, PartialEq)]
struct Key {
    total: f64,
    resource: u64,
    picks: Vec<(u32, crate::decomposition::Model, u32)>,
}

impl Key {
    fn cmp(&self, other: &Key) -> Ordering {
        self.total
            .total_cmp(&other.total)
            .then(self.resource.cmp(&other.resource))
            .then_with(|| self.picks.cmp(&other.picks))
    }
}

struct Search<'a> {
    candidates: &'a [Candidate],
    lists: Vec<Vec<usize>>,
    min_total_after: Vec<f64>,
    min_resource_after: Vec<u64>,
    budget: u64,
    stats: SearchStats,
    best: Option<(Key, Vec<usize>)>,
    trace: Option<Vec<Vec<u32>>>,
    picks: Vec<usize>,
}

impl Search<'_> {
    fn key(&self, total: f64, resource: u64) -> Key {
        Key {
            total,
            resource,
            picks: self
                .picks
                .iter()
                .map(|&k| {
                    let c = &self.candidates[k];
                    (c.iteration, c.model, c.id)
                })
                .collect(),
        }
    }

    fn record_prune(&mut self, extra: usize) {
        if let Some(trace) = &mut self.trace {
            let mut ids: Vec<u32> = self.picks.iter().map(|&k| self.candidates[k].id).collect();
            ids.push(self.candidates[extra].id);
            trace.push(ids);
        }
    }

    fn descend(&mut self, level: usize, total: f64, resource: u64) {
        self.stats.explored += 1;
        if level == self.lists.len() {
            let key = self.key(total, resource);
            if self.best.as_ref().is_none_or(|(b, _)| key.cmp(b) == Ordering::Less) {
                self.best = Some((key, self.picks.clone()));
            }
            return;
        }
        for idx in 0..self.lists[level].len() {
            let k = self.lists[level][idx];
            let candidates = self.candidates;
            let c = &candidates[k];
            let used = resource.saturating_add(c.resource_cost);
            if used > self.budget || used.saturating_add(self.min_resource_after[level + 1]) > self.budget {
                self.stats.pruned_infeasible += 1;
                self.record_prune(k);
                continue;
            }
            let partial = total + c.predicted.total_s();
            let bound = partial + self.min_total_after[level + 1];
            if let Some((best, _)) = &self.best {
                if bound - best.total > BOUND_SLACK * best.total {
                    self.stats.pruned_bound += 1;
                    self.record_prune(k);
                    continue;
                }
            }
            self.picks.push(k);
            self.descend(level + 1, partial, used);
            self.picks.pop();
        }
    }
}

fn check(candidates: &[Candidate]) -> Result<(), DseError> {
    let mut seen = BTreeSet::new();
    for c in candidates {
        if !seen.insert(c.id) {
            return Err(DseError::DuplicateId { id: c.id });
        }
        let t = c.predicted.total_s();
        if !(t.is_finite() && t > 0.0) {
            return Err(DseError::InvalidCandidate { id: c.id });
        }
    }
    Ok(())
}

/// Branch-and-bound over one-candidate-per-instance selections.
///
/// Instances are covered in ascending order, each level branching over that
/// instance's candidates from cheapest to dearest. A branch is cut when its
/// device memory cannot fit the budget even with the leanest completion, or
/// when its latency plus the cheapest budget-feasible completion exceeds the
/// incumbent. Ties are never cut. Among equal latencies the smaller memory
/// footprint wins, then the lower iterations, then the model order.
pub fn select(candidates: &[Candidate], budget: u64) -> Result<DseResult, DseError> {
    select_with(candidates, budget, SelectOptions::default()).map(|(r, _)| r)
}

/// [`select`] that also returns the pruned partial selections when asked to.
pub fn select_with(candidates: &[Candidate], budget: u64, options: SelectOptions) -> Result<(DseResult, Vec<Vec<u32>>), DseError> {
    check(candidates)?;
    let instances: Vec<u32> = candidates.iter().map(|c| c.instance).collect::<BTreeSet<_>>().into_iter().collect();
    let mut lists: Vec<Vec<usize>> = vec![Vec::new(); instances.len()];
    for (k, c) in candidates.iter().enumerate() {
        let level = instances.binary_search(&c.instance).expect("instance listed");
        lists[level].push(k);
    }
    for list in &mut lists {
        list.sort_by(|&a, &b| {
            let (a, b) = (&candidates[a], &candidates[b]);
            a.predicted
                .total_s()
                .total_cmp(&b.predicted.total_s())
                .then(a.resource_cost.cmp(&b.resource_cost))
                .then((a.iteration, a.model, a.id).cmp(&(b.iteration, b.model, b.id)))
        });
    }

    let levels = lists.len();
    let mut min_total_after = vec![0.0; levels + 1];
    let mut min_resource_after = vec![0u64; levels + 1];
    let mut feasible = true;
    for level in (0..levels).rev() {
        let fitting = lists[level].iter().map(|&k| &candidates[k]).filter(|c| c.resource_cost <= budget);
        match fitting.clone().map(|c| c.predicted.total_s()).min_by(f64::total_cmp) {
            Some(t) => min_total_after[level] = t + min_total_after[level + 1],
            None => feasible = false,
        }
        let r = fitting.map(|c| c.resource_cost).min().unwrap_or(u64::MAX);
        min_resource_after[level] = r.saturating_add(min_resource_after[level + 1]);
    }

    let mut search = Search {
        candidates,
        lists,
        min_total_after,
        min_resource_after,
        budget,
        stats: SearchStats::default(),
        best: None,
        trace: options.trace_pruned.then(Vec::new),
        picks: Vec::new(),
    };
    if feasible {
        search.descend(0, 0.0, 0);
    }
    let stats = search.stats;
    let trace = search.trace.take().unwrap_or_default();

    let (picks, fallback): (Vec<usize>, bool) = match search.best.take() {
        Some((_, picks)) => (picks, false),
        None => (host_only(candidates, &search.lists), true),
    };
    let picks: Vec<Candidate> = picks.into_iter().map(|k| candidates[k].clone()).collect();
    let predicted_total_s = picks.iter().fold(0.0, |acc, c| acc + c.predicted.total_s());
    let baseline = baseline(candidates, &search.lists);
    let result = DseResult {
        chosen: picks.iter().map(|c| c.id).collect(),
        predicted_total_s,
        baseline_s: baseline,
        predicted_speedup: baseline.filter(|_| !picks.is_empty()).map(|b| b / predicted_total_s),
        budget,
        budget_used: picks.iter().map(|c| c.resource_cost).sum(),
        fallback,
        search_stats: stats,
        picks,
        traces: Vec::new(),
    };
    Ok((result, trace))
}

/// Cheapest `i = 0` candidate of every instance that has one.
fn host_only(candidates: &[Candidate], lists: &[Vec<usize>]) -> Vec<usize> {
    lists
        .iter()
        .filter_map(|list| list.iter().copied().find(|&k| candidates[k].iteration == 0))
        .collect()
}

fn baseline(candidates: &[Candidate], lists: &[Vec<usize>]) -> Option<f64> {
    let host = host_only(candidates, lists);
    (host.len() == lists.len()).then(|| host.iter().fold(0.0, |acc, &k| acc + candidates[k].predicted.total_s()))
}
