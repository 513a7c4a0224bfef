//! Minimum-weight set cover over candidate sets produced by the trajectory engine.
//!
//! Weights are carried in log space. Solvers work with linear weights shifted by the
//! smallest log-weight, so instances whose weights are `e^{S_n f}` for large `n`
//! stay representable.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stateset::StateSet;
use crate::system::ControlWord;

/// Relative slack used by every "strictly better" comparison in this module.
const REL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateSet {
    pub elements: StateSet,
    /// Natural log of the set's weight.
    pub log_weight: f64,
    pub word: ControlWord,
}

/// Bookkeeping from the enumerator.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EnumerationStats {
    pub horizon: usize,
    pub nodes: usize,
    pub pruned: usize,
    pub dominated: usize,
    /// The word budget ran out before all words were visited.
    pub truncated: bool,
    /// Words were merged by a positive tolerance.
    pub approximate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverInstance {
    universe: usize,
    sets: Vec<CandidateSet>,
    stats: EnumerationStats,
}

impl CoverInstance {
    pub fn from_candidates(
        universe: usize,
        sets: Vec<CandidateSet>,
        stats: EnumerationStats,
    ) -> Self {
        Self {
            universe,
            sets,
            stats,
        }
    }

    /// Instance from plain `(elements, log_weight)` pairs; set `i` is tagged with the
    /// one-letter word `[i]`.
    pub fn from_log_weights(universe: usize, sets: Vec<(Vec<usize>, f64)>) -> Result<Self> {
        let sets = sets
            .into_iter()
            .enumerate()
            .map(|(i, (elements, log_weight))| {
                if let Some(&e) = elements.iter().find(|&&e| e >= universe) {
                    return Err(Error::ShapeMismatch(format!(
                        "element {e} outside a universe of {universe}"
                    )));
                }
                if log_weight.is_nan() {
                    return Err(Error::InvalidWeight("NaN log-weight".into()));
                }
                Ok(CandidateSet {
                    elements: StateSet::from_indices(universe, elements),
                    log_weight,
                    word: ControlWord::from_raw(vec![i]),
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            universe,
            sets,
            stats: EnumerationStats::default(),
        })
    }

    pub fn universe(&self) -> usize {
        self.universe
    }

    pub fn sets(&self) -> &[CandidateSet] {
        &self.sets
    }

    pub fn stats(&self) -> &EnumerationStats {
        &self.stats
    }

    /// Every word was visited and nothing was merged, so the optimum is exact.
    pub fn is_exhaustive(&self) -> bool {
        !self.stats.truncated && !self.stats.approximate
    }

    pub fn union(&self) -> StateSet {
        let mut u = StateSet::empty(self.universe);
        for s in &self.sets {
            u.union_with(&s.elements);
        }
        u
    }

    pub fn is_feasible(&self) -> bool {
        self.union().is_full()
    }

    /// Elements no candidate covers.
    pub fn uncovered(&self) -> Vec<usize> {
        let u = self.union();
        (0..self.universe).filter(|&e| !u.contains(e)).collect()
    }

    /// `log Σ_{i∈chosen} e^{lw_i}`.
    pub fn log_cost(&self, chosen: &[usize]) -> f64 {
        log_sum_exp(chosen.iter().map(|&i| self.sets[i].log_weight))
    }

    pub fn covers(&self, chosen: &[usize]) -> bool {
        let mut u = StateSet::empty(self.universe);
        for &i in chosen {
            u.union_with(&self.sets[i].elements);
        }
        u.is_full()
    }

    fn min_log_weight(&self) -> f64 {
        self.sets
            .iter()
            .map(|s| s.log_weight)
            .fold(f64::INFINITY, f64::min)
    }
}

pub(crate) fn log_sum_exp<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    let xs: Vec<f64> = xs.into_iter().collect();
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoverStatus {
    Optimal,
    FeasibleUpperBound,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverSolution {
    pub status: CoverStatus,
    /// Indices into [`CoverInstance::sets`], increasing.
    pub chosen: Vec<usize>,
    /// Log of the total weight of `chosen` (`+inf` when infeasible).
    pub log_value: f64,
    /// Best proven lower bound on the log of the optimum.
    pub log_lower_bound: f64,
    pub nodes: u64,
}

impl CoverSolution {
    fn infeasible() -> Self {
        Self {
            status: CoverStatus::Infeasible,
            chosen: Vec::new(),
            log_value: f64::INFINITY,
            log_lower_bound: f64::INFINITY,
            nodes: 0,
        }
    }

    pub fn words<'a>(&self, inst: &'a CoverInstance) -> Vec<&'a ControlWord> {
        self.chosen.iter().map(|&i| &inst.sets[i].word).collect()
    }
}

/// Shifted linear weights plus the element -> sets incidence.
struct Prepared {
    shift: f64,
    weight: Vec<f64>,
    /// Surviving sets after removing duplicates and dominated sets, as original indices.
    ids: Vec<usize>,
    incidence: Vec<Vec<usize>>,
}

impl Prepared {
    fn new(inst: &CoverInstance, reduce: bool) -> Self {
        let shift = inst.min_log_weight();
        let mut ids: Vec<usize> = (0..inst.sets.len())
            .filter(|&i| !inst.sets[i].elements.is_empty())
            .collect();
        if reduce {
            ids = reduce_sets(inst, ids);
        }
        let weight = ids
            .iter()
            .map(|&i| (inst.sets[i].log_weight - shift).exp())
            .collect();
        let mut incidence = vec![Vec::new(); inst.universe];
        for (k, &i) in ids.iter().enumerate() {
            for e in inst.sets[i].elements.iter() {
                incidence[e].push(k);
            }
        }
        Self {
            shift,
            weight,
            ids,
            incidence,
        }
    }

    fn log_of(&self, linear: f64) -> f64 {
        self.shift + linear.ln()
    }
}

/// Above this many sets the quadratic dominance scan is skipped.
const REDUCE_LIMIT: usize = 20_000;

/// Drops sets contained in another set of no larger weight. Among equal candidates the
/// smallest index survives.
fn reduce_sets(inst: &CoverInstance, ids: Vec<usize>) -> Vec<usize> {
    if ids.len() > REDUCE_LIMIT {
        return ids;
    }
    let mut order = ids.clone();
    order.sort_by(|&a, &b| {
        let (sa, sb) = (&inst.sets[a], &inst.sets[b]);
        sa.log_weight
            .total_cmp(&sb.log_weight)
            .then(sb.elements.count().cmp(&sa.elements.count()))
            .then(a.cmp(&b))
    });
    let mut kept: Vec<usize> = Vec::new();
    for &i in &order {
        let s = &inst.sets[i].elements;
        if !kept.iter().any(|&k| s.is_subset_of(&inst.sets[k].elements)) {
            kept.push(i);
        }
    }
    kept.sort_unstable();
    kept
}

fn better(candidate: f64, incumbent: f64) -> bool {
    candidate < incumbent * (1.0 - REL_TOL)
}

/// Greedy cover: repeatedly take the set with the smallest weight per newly covered
/// element (ties to the smallest index), then drop sets made redundant by later picks.
/// Its value is an upper bound on the optimum.
pub fn solve_greedy(inst: &CoverInstance) -> CoverSolution {
    if !inst.is_feasible() {
        return CoverSolution::infeasible();
    }
    let p = Prepared::new(inst, false);
    let (chosen, _) = greedy_on(inst, &p);
    let mut out: Vec<usize> = chosen.iter().map(|&k| p.ids[k]).collect();
    out.sort_unstable();
    let log_value = inst.log_cost(&out);
    CoverSolution {
        status: CoverStatus::FeasibleUpperBound,
        chosen: out,
        log_value,
        log_lower_bound: certified_lower_bound_inner(inst, &p, log_value),
        nodes: 0,
    }
}

fn greedy_on(inst: &CoverInstance, p: &Prepared) -> (Vec<usize>, f64) {
    let mut covered = StateSet::empty(inst.universe);
    let mut chosen = Vec::new();
    while !covered.is_full() {
        let mut best: Option<(usize, f64)> = None;
        for (k, &i) in p.ids.iter().enumerate() {
            let gain = inst.sets[i].elements.count_outside(&covered);
            if gain == 0 {
                continue;
            }
            let ratio = p.weight[k] / gain as f64;
            if best.is_none_or(|(_, r)| better(ratio, r)) {
                best = Some((k, ratio));
            }
        }
        let (k, _) = best.expect("feasible instance has a covering set");
        covered.union_with(&inst.sets[p.ids[k]].elements);
        chosen.push(k);
    }
    drop_redundant(inst, p, &mut chosen);
    let total = chosen.iter().map(|&k| p.weight[k]).sum();
    (chosen, total)
}

/// Removes chosen sets whose elements are all covered by the others, heaviest first.
fn drop_redundant(inst: &CoverInstance, p: &Prepared, chosen: &mut Vec<usize>) {
    let mut multiplicity = vec![0u32; inst.universe];
    for &k in chosen.iter() {
        for e in inst.sets[p.ids[k]].elements.iter() {
            multiplicity[e] += 1;
        }
    }
    let mut order = chosen.clone();
    order.sort_by(|&a, &b| p.weight[b].total_cmp(&p.weight[a]).then(b.cmp(&a)));
    for k in order {
        let elements = &inst.sets[p.ids[k]].elements;
        if elements.iter().all(|e| multiplicity[e] > 1) {
            for e in elements.iter() {
                multiplicity[e] -= 1;
            }
            chosen.retain(|&c| c != k);
        }
    }
}

fn harmonic(k: usize) -> f64 {
    (1..=k).map(|i| 1.0 / i as f64).sum()
}

fn certified_lower_bound_inner(inst: &CoverInstance, p: &Prepared, greedy_log: f64) -> f64 {
    let s_max = inst
        .sets
        .iter()
        .map(|s| s.elements.count())
        .max()
        .unwrap_or(1);
    let from_greedy = greedy_log - harmonic(s_max).ln();
    let from_elements = (0..inst.universe)
        .map(|e| {
            p.incidence[e]
                .iter()
                .map(|&k| inst.sets[p.ids[k]].log_weight)
                .fold(f64::INFINITY, f64::min)
        })
        .fold(f64::NEG_INFINITY, f64::max);
    from_greedy.max(from_elements)
}

/// Log of a lower bound on the optimum: the larger of the greedy value divided by
/// `H(max set size)` and the most expensive element's cheapest covering set.
pub fn certified_lower_bound(inst: &CoverInstance) -> Result<f64> {
    if !inst.is_feasible() {
        return Err(Error::NotSpanning {
            uncovered: inst.uncovered().len(),
        });
    }
    let p = Prepared::new(inst, false);
    let (_, total) = greedy_on(inst, &p);
    Ok(certified_lower_bound_inner(inst, &p, p.log_of(total)))
}

/// Exact minimum-weight cover by depth-first branch and bound, falling back to the
/// best cover found when `node_budget` runs out. Instances whose sets are all runs of
/// consecutive elements are solved directly by dynamic programming.
pub fn solve_exact(inst: &CoverInstance, node_budget: u64) -> CoverSolution {
    if !inst.is_feasible() {
        return CoverSolution::infeasible();
    }
    let p = Prepared::new(inst, true);
    if let Some(sol) = solve_intervals(inst, &p) {
        return sol;
    }
    let (greedy, greedy_total) = greedy_on(inst, &p);
    let mut bb = BranchAndBound::new(inst, &p, greedy, greedy_total, node_budget);
    let root_bound = bb.bound();
    bb.search();
    let mut chosen: Vec<usize> = bb.best.iter().map(|&k| p.ids[k]).collect();
    chosen.sort_unstable();
    let log_value = inst.log_cost(&chosen);
    let complete = !bb.exhausted_budget;
    let log_lower_bound = if complete {
        log_value
    } else {
        let greedy_log = p.log_of(greedy_total);
        certified_lower_bound_inner(inst, &p, greedy_log).max(p.log_of(root_bound))
    };
    CoverSolution {
        status: if complete {
            CoverStatus::Optimal
        } else {
            CoverStatus::FeasibleUpperBound
        },
        chosen,
        log_value,
        log_lower_bound,
        nodes: bb.nodes,
    }
}

/// Weighted interval cover when every set is a run `[l, r]` of consecutive elements.
fn solve_intervals(inst: &CoverInstance, p: &Prepared) -> Option<CoverSolution> {
    let mut runs = Vec::with_capacity(p.ids.len());
    for (k, &i) in p.ids.iter().enumerate() {
        let s = &inst.sets[i].elements;
        let first = s.iter().next()?;
        let count = s.count();
        let last = first + count - 1;
        if !s.contains(last) || s.iter().last() != Some(last) {
            return None;
        }
        runs.push((first, last, k));
    }
    let n = inst.universe;
    // best[r + 1]: cheapest collection of runs covering 0..=r whose largest right end is r
    let mut best = vec![f64::INFINITY; n + 1];
    let mut from: Vec<Option<(usize, usize)>> = vec![None; n + 1];
    best[0] = 0.0;
    runs.sort_by_key(|&(l, r, k)| (r, l, k));
    for &(l, r, k) in &runs {
        let mut prev: Option<(usize, f64)> = None;
        for (j, &v) in best.iter().enumerate().take(r + 1).skip(l) {
            if v.is_finite() && prev.is_none_or(|(_, pv)| better(v, pv)) {
                prev = Some((j, v));
            }
        }
        if let Some((j, v)) = prev {
            let cost = v + p.weight[k];
            if better(cost, best[r + 1]) || !best[r + 1].is_finite() {
                best[r + 1] = cost;
                from[r + 1] = Some((j, k));
            }
        }
    }
    let mut chosen = Vec::new();
    let mut at = n;
    while at > 0 {
        let (j, k) = from[at].expect("feasible instance");
        chosen.push(p.ids[k]);
        at = j;
    }
    chosen.sort_unstable();
    let log_value = inst.log_cost(&chosen);
    Some(CoverSolution {
        status: CoverStatus::Optimal,
        chosen,
        log_value,
        log_lower_bound: log_value,
        nodes: runs.len() as u64,
    })
}

struct BranchAndBound<'a> {
    inst: &'a CoverInstance,
    p: &'a Prepared,
    covered: StateSet,
    /// Uncovered elements in each set.
    open_count: Vec<usize>,
    /// Allowed sets per element.
    allowed_count: Vec<usize>,
    forbidden: Vec<bool>,
    stack: Vec<usize>,
    cost: f64,
    best: Vec<usize>,
    best_cost: f64,
    nodes: u64,
    node_budget: u64,
    exhausted_budget: bool,
}

impl<'a> BranchAndBound<'a> {
    fn new(
        inst: &'a CoverInstance,
        p: &'a Prepared,
        greedy: Vec<usize>,
        greedy_cost: f64,
        node_budget: u64,
    ) -> Self {
        let open_count = p
            .ids
            .iter()
            .map(|&i| inst.sets[i].elements.count())
            .collect();
        let allowed_count = p.incidence.iter().map(|v| v.len()).collect();
        Self {
            inst,
            p,
            covered: StateSet::empty(inst.universe),
            open_count,
            allowed_count,
            forbidden: vec![false; p.ids.len()],
            stack: Vec::new(),
            cost: 0.0,
            best: greedy,
            best_cost: greedy_cost,
            nodes: 0,
            node_budget,
            exhausted_budget: false,
        }
    }

    fn elements(&self, k: usize) -> &StateSet {
        &self.inst.sets[self.p.ids[k]].elements
    }

    /// Lower bound on the cost of covering the remaining elements: the larger of a
    /// packing bound over pairwise set-disjoint elements and the fractional bound that
    /// charges each element its cheapest per-element share.
    fn bound(&self) -> f64 {
        let universe = self.inst.universe;
        let mut blocked = StateSet::empty(universe);
        let mut packing = 0.0;
        let mut fractional = 0.0;
        for e in 0..universe {
            if self.covered.contains(e) {
                continue;
            }
            let mut cheapest = f64::INFINITY;
            let mut share = f64::INFINITY;
            for &k in &self.p.incidence[e] {
                if self.forbidden[k] {
                    continue;
                }
                let w = self.p.weight[k];
                cheapest = cheapest.min(w);
                share = share.min(w / self.open_count[k] as f64);
            }
            if !cheapest.is_finite() {
                return f64::INFINITY;
            }
            fractional += share;
            if !blocked.contains(e) {
                packing += cheapest;
                for &k in &self.p.incidence[e] {
                    if !self.forbidden[k] {
                        blocked.union_with(self.elements(k));
                    }
                }
            }
        }
        packing.max(fractional)
    }

    fn take(&mut self, k: usize) -> Vec<usize> {
        let newly: Vec<usize> = self
            .elements(k)
            .iter()
            .filter(|&e| !self.covered.contains(e))
            .collect();
        for &e in &newly {
            self.covered.insert(e);
            for &j in &self.p.incidence[e] {
                self.open_count[j] -= 1;
            }
        }
        self.stack.push(k);
        self.cost += self.p.weight[k];
        newly
    }

    fn untake(&mut self, k: usize, newly: &[usize]) {
        for &e in newly {
            self.covered.remove(e);
            for &j in &self.p.incidence[e] {
                self.open_count[j] += 1;
            }
        }
        self.stack.pop();
        self.cost -= self.p.weight[k];
    }

    fn forbid(&mut self, k: usize) {
        self.forbidden[k] = true;
        for e in self.inst.sets[self.p.ids[k]].elements.iter() {
            self.allowed_count[e] -= 1;
        }
    }

    fn allow(&mut self, k: usize) {
        self.forbidden[k] = false;
        for e in self.inst.sets[self.p.ids[k]].elements.iter() {
            self.allowed_count[e] += 1;
        }
    }

    fn search(&mut self) {
        if self.nodes >= self.node_budget {
            self.exhausted_budget = true;
            return;
        }
        self.nodes += 1;
        if self.covered.is_full() {
            if better(self.cost, self.best_cost) {
                self.best_cost = self.cost;
                self.best = self.stack.clone();
            }
            return;
        }
        if !better(self.cost + self.bound(), self.best_cost) {
            return;
        }
        let branch = (0..self.inst.universe)
            .filter(|&e| !self.covered.contains(e))
            .min_by_key(|&e| (self.allowed_count[e], e))
            .expect("not yet covered");
        if self.allowed_count[branch] == 0 {
            return;
        }
        let mut children: Vec<usize> = self.p.incidence[branch]
            .iter()
            .copied()
            .filter(|&k| !self.forbidden[k])
            .collect();
        children.sort_by_key(|&k| (std::cmp::Reverse(self.open_count[k]), k));
        let mut forbidden_here = Vec::new();
        for k in children {
            let newly = self.take(k);
            self.search();
            self.untake(k, &newly);
            if self.exhausted_budget {
                break;
            }
            self.forbid(k);
            forbidden_here.push(k);
        }
        for k in forbidden_here.into_iter().rev() {
            self.allow(k);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Exhaustive minimum over all subsets.
    fn brute_force(inst: &CoverInstance) -> Option<f64> {
        let m = inst.sets().len();
        assert!(m <= 16);
        let mut best: Option<f64> = None;
        for mask in 1u32..(1 << m) {
            let chosen: Vec<usize> = (0..m).filter(|i| mask & (1 << i) != 0).collect();
            if inst.covers(&chosen) {
                let c = inst.log_cost(&chosen);
                if best.is_none_or(|b| c < b) {
                    best = Some(c);
                }
            }
        }
        best
    }

    fn instance_strategy() -> impl Strategy<Value = CoverInstance> {
        (1usize..9).prop_flat_map(|universe| {
            proptest::collection::vec(
                (
                    proptest::collection::vec(0..universe, 1..=universe),
                    -3.0f64..3.0,
                ),
                1..11,
            )
            .prop_map(move |sets| CoverInstance::from_log_weights(universe, sets).unwrap())
        })
    }

    proptest! {
        #[test]
        fn exact_matches_brute_force(inst in instance_strategy()) {
            let sol = solve_exact(&inst, 10_000_000);
            match brute_force(&inst) {
                None => prop_assert_eq!(sol.status, CoverStatus::Infeasible),
                Some(b) => {
                    prop_assert_eq!(sol.status, CoverStatus::Optimal);
                    prop_assert!(inst.covers(&sol.chosen));
                    prop_assert!((sol.log_value - b).abs() < 1e-9, "{} vs {}", sol.log_value, b);
                }
            }
        }

        #[test]
        fn greedy_and_bounds_bracket_optimum(inst in instance_strategy()) {
            if let Some(b) = brute_force(&inst) {
                let g = solve_greedy(&inst);
                prop_assert!(inst.covers(&g.chosen));
                prop_assert!(g.log_value >= b - 1e-9);
                let lb = certified_lower_bound(&inst).unwrap();
                prop_assert!(lb <= b + 1e-9, "lower bound {} above optimum {}", lb, b);
            }
        }

        #[test]
        fn argmin_is_scale_invariant(inst in instance_strategy(), shift in -5.0f64..5.0) {
            let shifted = CoverInstance::from_log_weights(
                inst.universe(),
                inst.sets().iter().map(|s| (s.elements.to_vec(), s.log_weight + shift)).collect(),
            ).unwrap();
            let a = solve_exact(&inst, 10_000_000);
            let b = solve_exact(&shifted, 10_000_000);
            prop_assert_eq!(a.status, b.status);
            if a.status == CoverStatus::Optimal {
                prop_assert!((a.log_value + shift - b.log_value).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn interval_instances_use_dynamic_programming() {
        let inst = CoverInstance::from_log_weights(
            6,
            vec![
                (vec![0, 1, 2], 0.0),
                (vec![2, 3], 0.0),
                (vec![3, 4, 5], 0.5),
                (vec![1, 2, 3, 4, 5], 1.2),
                (vec![0], -1.0),
            ],
        )
        .unwrap();
        let sol = solve_exact(&inst, 10);
        assert_eq!(sol.status, CoverStatus::Optimal);
        assert!((sol.log_value - brute_force(&inst).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn non_interval_instance_needs_search() {
        // a 3-cycle where every pair must be covered
        let inst = CoverInstance::from_log_weights(
            4,
            vec![
                (vec![0, 2], 0.0),
                (vec![1, 3], 0.0),
                (vec![0, 1, 2, 3], 1.0),
                (vec![0, 3], -0.5),
                (vec![1, 2], -0.5),
            ],
        )
        .unwrap();
        let sol = solve_exact(&inst, 1_000);
        assert_eq!(sol.status, CoverStatus::Optimal);
        assert!((sol.log_value - (2.0f64 * (-0.5f64).exp()).ln()).abs() < 1e-12);
    }

    #[test]
    fn infeasible_instances() {
        let inst = CoverInstance::from_log_weights(3, vec![(vec![0, 1], 0.0)]).unwrap();
        assert_eq!(solve_exact(&inst, 100).status, CoverStatus::Infeasible);
        assert_eq!(solve_greedy(&inst).status, CoverStatus::Infeasible);
        assert!(matches!(
            certified_lower_bound(&inst),
            Err(Error::NotSpanning { uncovered: 1 })
        ));
    }

    #[test]
    fn budget_exhaustion_reports_upper_bound() {
        let sets: Vec<(Vec<usize>, f64)> = (0..12)
            .map(|i| {
                (
                    vec![i % 7, (i * 3 + 1) % 7, (i * 5 + 2) % 7],
                    (i as f64 * 0.37).sin(),
                )
            })
            .collect();
        let inst = CoverInstance::from_log_weights(7, sets).unwrap();
        let sol = solve_exact(&inst, 0);
        assert_eq!(sol.status, CoverStatus::FeasibleUpperBound);
        assert!(inst.covers(&sol.chosen));
        assert!(sol.log_lower_bound <= sol.log_value + 1e-12);
    }

    #[test]
    fn extreme_log_weights_stay_finite() {
        let inst =
            CoverInstance::from_log_weights(2, vec![(vec![0], 900.0), (vec![1], 901.0)]).unwrap();
        let sol = solve_exact(&inst, 100);
        let expected = 901.0 + (1.0 + (-1.0f64).exp()).ln();
        assert!((sol.log_value - expected).abs() < 1e-9);
    }
}
