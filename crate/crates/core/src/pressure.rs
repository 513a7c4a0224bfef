//! Spanning sequences `a_n`, feedback sequences `q_n`, and the pressure estimates built
//! from them.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cover::{
    solve_exact, solve_greedy, CandidateSet, CoverInstance, CoverStatus, EnumerationStats,
};
use crate::error::{Error, Result};
use crate::stateset::StateSet;
use crate::system::{
    linalg, ControlAlphabet, ControlSystem, ControlWord, WeightFunction, WeightKind,
};
use crate::trajectory::{
    enumerate_cover_instance, invariant_domain, strong_invariance_check, visit_dynamics, Dynamics,
    DynamicsVisitor, EnumerationOptions, VerificationMode,
};

/// Enclosure of a positive quantity such as `a_n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalValue {
    pub lower: f64,
    pub upper: f64,
    pub exact: bool,
}

impl IntervalValue {
    pub fn exact(v: f64) -> Self {
        Self {
            lower: v,
            upper: v,
            exact: true,
        }
    }

    pub fn new(lower: f64, upper: f64) -> Self {
        debug_assert!(lower <= upper * (1.0 + 1e-12), "{lower} > {upper}");
        Self {
            lower: lower.min(upper),
            upper,
            exact: false,
        }
    }

    pub fn contains(&self, v: f64, rel_tol: f64) -> bool {
        v >= self.lower * (1.0 - rel_tol) && v <= self.upper * (1.0 + rel_tol)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverMethod {
    Exact,
    Greedy,
    /// Exact below a size threshold, greedy above it.
    Auto,
}

/// Sets above which [`SolverMethod::Auto`] switches to greedy.
pub const AUTO_EXACT_LIMIT: usize = 50_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Budgets {
    pub method: SolverMethod,
    pub node_budget: u64,
    pub enumeration: EnumerationOptions,
}

impl Default for Budgets {
    fn default() -> Self {
        Self {
            method: SolverMethod::Exact,
            node_budget: 10_000_000,
            enumeration: EnumerationOptions::default(),
        }
    }
}

impl Budgets {
    pub fn greedy() -> Self {
        Self {
            method: SolverMethod::Greedy,
            ..Self::default()
        }
    }
}

/// Everything learned while computing one `a_n` (or `q_n`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpanningOutcome {
    pub n: usize,
    pub value: IntervalValue,
    pub log_lower: f64,
    pub log_upper: f64,
    /// Words of the best cover found.
    pub words: Vec<ControlWord>,
    pub status: CoverStatus,
    pub candidates: usize,
    pub stats: EnumerationStats,
}

impl SpanningOutcome {
    pub fn is_feasible(&self) -> bool {
        self.status != CoverStatus::Infeasible
    }
}

fn solve_instance(
    inst: &CoverInstance,
    n: usize,
    trivial_log_lower: f64,
    budgets: &Budgets,
) -> SpanningOutcome {
    let greedy = match budgets.method {
        SolverMethod::Greedy => true,
        SolverMethod::Exact => false,
        SolverMethod::Auto => inst.sets().len() > AUTO_EXACT_LIMIT,
    };
    let sol = if greedy {
        solve_greedy(inst)
    } else {
        solve_exact(inst, budgets.node_budget)
    };
    let words = sol.words(inst).into_iter().cloned().collect();
    let base = SpanningOutcome {
        n,
        value: IntervalValue::exact(f64::INFINITY),
        log_lower: f64::INFINITY,
        log_upper: f64::INFINITY,
        words,
        status: sol.status,
        candidates: inst.sets().len(),
        stats: inst.stats().clone(),
    };
    if sol.status == CoverStatus::Infeasible {
        if inst.is_exhaustive() {
            return base;
        }
        // a truncated enumeration may simply have missed the covering words
        return SpanningOutcome {
            value: IntervalValue::new(trivial_log_lower.exp(), f64::INFINITY),
            log_lower: trivial_log_lower,
            ..base
        };
    }
    let log_upper = sol.log_value;
    let exact = inst.is_exhaustive() && sol.status == CoverStatus::Optimal;
    let log_lower = if exact {
        log_upper
    } else if inst.is_exhaustive() {
        sol.log_lower_bound.max(trivial_log_lower).min(log_upper)
    } else {
        trivial_log_lower.min(log_upper)
    };
    let value = if exact {
        IntervalValue::exact(log_upper.exp())
    } else {
        IntervalValue::new(log_lower.exp(), log_upper.exp())
    };
    SpanningOutcome {
        value,
        log_lower,
        log_upper,
        ..base
    }
}

/// `log a_n >= n * dt * min f`: at least one word is needed.
fn trivial_log_lower(f: &WeightFunction, n: usize, dt: f64) -> f64 {
    let m = f.table().iter().copied().fold(f64::INFINITY, f64::min);
    n as f64 * dt * m
}

fn warn_if_not_invariant(sys: &ControlSystem, mode: &VerificationMode) -> Result<Option<String>> {
    if mode.is_outer() {
        return Ok(None);
    }
    let report = strong_invariance_check(sys, mode)?;
    if report.ok {
        return Ok(None);
    }
    let msg = format!(
        "region is not strongly invariant: {} element(s) have no admissible control",
        report.failures().count()
    );
    log::warn!("{msg}");
    Ok(Some(msg))
}

/// `a_n(f, Q)` with its optimal word family.
pub fn a_n_detailed(
    sys: &ControlSystem,
    f: &WeightFunction,
    n: usize,
    mode: &VerificationMode,
    budgets: &Budgets,
) -> Result<SpanningOutcome> {
    let inst = enumerate_cover_instance(sys, n, f, mode, &budgets.enumeration)?;
    if inst.stats().truncated {
        log::warn!("word budget exhausted at n = {n}; a_{n} is only bounded");
    }
    let t = trivial_log_lower(f, n, sys.time_step());
    Ok(solve_instance(&inst, n, t, budgets))
}

/// `a_n(f, Q)` as an enclosure; `+inf` when no spanning family exists.
pub fn a_n(
    sys: &ControlSystem,
    f: &WeightFunction,
    n: usize,
    mode: &VerificationMode,
    budgets: &Budgets,
) -> Result<IntervalValue> {
    Ok(a_n_detailed(sys, f, n, mode, budgets)?.value)
}

/// Integer enclosure of the minimal spanning cardinality.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountInterval {
    pub lower: u64,
    pub upper: Option<u64>,
    pub exact: bool,
}

/// Minimal number of words in a strongly `(n, Q)`-spanning family (`a_n` with `f = 0`).
pub fn spanning_count(
    sys: &ControlSystem,
    n: usize,
    mode: &VerificationMode,
    budgets: &Budgets,
) -> Result<CountInterval> {
    let f = WeightFunction::zero(sys.alphabet_len());
    let v = a_n(sys, &f, n, mode, budgets)?;
    // the solver reports integers up to rounding
    let upper = v
        .upper
        .is_finite()
        .then(|| (v.upper - 1e-9).ceil().max(1.0) as u64);
    let lower = if v.lower.is_finite() {
        (v.lower - 1e-9).ceil().max(1.0) as u64
    } else {
        u64::MAX
    };
    Ok(CountInterval {
        lower: upper.map_or(lower, |u| lower.min(u)),
        upper,
        exact: v.exact,
    })
}

/// One row of the per-n table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerNRow {
    pub n: usize,
    pub a: IntervalValue,
    pub log_lower: f64,
    pub log_upper: f64,
    /// `log a_n.upper / (n dt)`.
    pub log_a_over_n: f64,
    pub exact: bool,
    pub words: Vec<ControlWord>,
    pub candidates: usize,
    pub stats: EnumerationStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum EstimateMode {
    Inner { verification: VerificationMode },
    Outer { epsilons: Vec<f64> },
    Feedback { cover: usize, tau: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OuterLevel {
    pub epsilon: f64,
    pub fekete_inf: f64,
    pub tail_slope: f64,
    pub per_n: Vec<PerNRow>,
}

/// Per-n comparison between consecutive rungs of the ε ladder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotoneCheck {
    pub n: usize,
    pub larger_epsilon: f64,
    pub smaller_epsilon: f64,
    /// `a_n.upper(larger) <= a_n.upper(smaller)`.
    pub holds: bool,
    /// Both values are exact, so `holds = false` would be a genuine violation.
    pub exact: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackCandidate {
    pub tau: usize,
    pub members: usize,
    pub fekete_inf: f64,
    pub tail_slope: f64,
}

/// Growth-rate estimate assembled from a computed sequence. Rates are per unit time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PressureEstimate {
    pub mode: EstimateMode,
    pub time_step: f64,
    /// Steps per sequence index (`τ` for feedback, 1 otherwise).
    pub block: usize,
    pub per_n: Vec<PerNRow>,
    /// `min_n log a_n.upper / (n dt)`.
    pub fekete_inf: f64,
    /// Least-squares slope of `log a_n.upper` over the last `⌈n_max/2⌉` rows, per unit time.
    pub tail_slope: f64,
    /// Reported value (`fekete_inf`).
    pub value: f64,
    /// `[min(tail_slope, min_n log a_n.lower / (n dt)), max(tail_slope, fekete_inf)]`.
    pub interval: [f64; 2],
    pub all_exact: bool,
    pub warnings: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub outer_levels: Option<Vec<OuterLevel>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub monotone: Option<Vec<MonotoneCheck>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub feedback_candidates: Option<Vec<FeedbackCandidate>>,
}

fn least_squares_slope(points: &[(f64, f64)]) -> f64 {
    let k = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / k;
    let my = points.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

impl PressureEstimate {
    fn assemble(
        mode: EstimateMode,
        time_step: f64,
        block: usize,
        per_n: Vec<PerNRow>,
        warnings: Vec<String>,
    ) -> Self {
        let unit = |n: usize| n as f64 * block as f64 * time_step;
        let fekete_inf = per_n
            .iter()
            .map(|r| r.log_a_over_n)
            .fold(f64::INFINITY, f64::min);
        let n_max = per_n.last().map_or(0, |r| r.n);
        let k = n_max.div_ceil(2).min(per_n.len());
        let tail = &per_n[per_n.len() - k..];
        let tail_slope = if tail.len() >= 2 {
            let pts: Vec<(f64, f64)> = tail.iter().map(|r| (unit(r.n), r.log_upper)).collect();
            least_squares_slope(&pts)
        } else {
            tail.first().map_or(f64::NAN, |r| r.log_a_over_n)
        };
        let lower_rate = per_n
            .iter()
            .map(|r| r.log_lower / unit(r.n))
            .fold(f64::INFINITY, f64::min);
        let all_exact = per_n.iter().all(|r| r.exact);
        Self {
            mode,
            time_step,
            block,
            per_n,
            fekete_inf,
            tail_slope,
            value: fekete_inf,
            interval: [tail_slope.min(lower_rate), tail_slope.max(fekete_inf)],
            all_exact,
            warnings,
            outer_levels: None,
            monotone: None,
            feedback_candidates: None,
        }
    }

    pub fn row(&self, n: usize) -> Option<&PerNRow> {
        self.per_n.iter().find(|r| r.n == n)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Columns `n, a_lower, a_upper, exact, log_a_over_n`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,a_lower,a_upper,exact,log_a_over_n\n");
        for r in &self.per_n {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                r.n,
                fmt_float(r.a.lower),
                fmt_float(r.a.upper),
                r.exact,
                fmt_float(r.log_a_over_n)
            );
        }
        out
    }
}

/// Shortest decimal that round-trips, with `inf`/`nan` spelled out.
pub fn fmt_float(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{x:?}")
    }
}

fn row_from(outcome: SpanningOutcome, unit: f64) -> PerNRow {
    PerNRow {
        n: outcome.n,
        a: outcome.value,
        log_lower: outcome.log_lower,
        log_upper: outcome.log_upper,
        log_a_over_n: outcome.log_upper / unit,
        exact: outcome.value.exact,
        words: outcome.words,
        candidates: outcome.candidates,
        stats: outcome.stats,
    }
}

fn check_horizons(n_min: usize, n_max: usize) -> Result<()> {
    if n_min == 0 {
        return Err(Error::InvalidHorizon { min: 1, got: n_min });
    }
    if n_max < n_min.max(2) {
        return Err(Error::InvalidHorizon {
            min: n_min.max(2),
            got: n_max,
        });
    }
    Ok(())
}

fn spanning_rows(
    sys: &ControlSystem,
    f: &WeightFunction,
    n_min: usize,
    n_max: usize,
    mode: &VerificationMode,
    budgets: &Budgets,
) -> Result<Vec<PerNRow>> {
    let dt = sys.time_step();
    (n_min..=n_max)
        .map(|n| {
            let out = a_n_detailed(sys, f, n, mode, budgets)?;
            if out.log_upper.is_infinite() && out.value.exact {
                return Err(Error::Infeasible { n });
            }
            Ok(row_from(out, n as f64 * dt))
        })
        .collect()
}

/// Inner pressure from `a_n`, `n = n_min..=n_max`.
pub fn pressure_inner(
    sys: &ControlSystem,
    f: &WeightFunction,
    n_min: usize,
    n_max: usize,
    mode: &VerificationMode,
    budgets: &Budgets,
) -> Result<PressureEstimate> {
    check_horizons(n_min, n_max)?;
    if mode.is_outer() {
        return Err(Error::KindMismatch(
            "inner pressure needs a center or box mode".into(),
        ));
    }
    let warnings = warn_if_not_invariant(sys, mode)?.into_iter().collect();
    let rows = spanning_rows(sys, f, n_min, n_max, mode, budgets)?;
    Ok(PressureEstimate::assemble(
        EstimateMode::Inner {
            verification: *mode,
        },
        sys.time_step(),
        1,
        rows,
        warnings,
    ))
}

/// `{0.1, 0.05, 0.02, 0.01}` times the smallest half-width of the region.
pub fn default_epsilon_ladder(sys: &ControlSystem) -> Vec<f64> {
    let h = match sys {
        ControlSystem::Quantized(q) => q
            .region()
            .half_widths()
            .iter()
            .zip(q.metric_scale())
            .map(|(h, s)| h / s)
            .fold(f64::INFINITY, f64::min),
        ControlSystem::Finite(_) => 1.0,
    };
    [0.1, 0.05, 0.02, 0.01].iter().map(|k| k * h).collect()
}

/// Outer pressure along a strictly decreasing ε ladder; the final value is the estimate at
/// the smallest ε.
pub fn pressure_outer(
    sys: &ControlSystem,
    f: &WeightFunction,
    n_min: usize,
    n_max: usize,
    ladder: &[f64],
    budgets: &Budgets,
) -> Result<PressureEstimate> {
    check_horizons(n_min, n_max)?;
    if ladder.is_empty() {
        return Err(Error::InvalidLadder("empty".into()));
    }
    if ladder.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
        return Err(Error::InvalidLadder("values must be positive".into()));
    }
    if ladder.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidLadder(
            "values must be strictly decreasing".into(),
        ));
    }
    let mut levels: Vec<(f64, PressureEstimate)> = Vec::with_capacity(ladder.len());
    for &eps in ladder {
        let mode = VerificationMode::Outer { epsilon: eps };
        let rows = spanning_rows(sys, f, n_min, n_max, &mode, budgets)?;
        let est = PressureEstimate::assemble(
            EstimateMode::Outer {
                epsilons: vec![eps],
            },
            sys.time_step(),
            1,
            rows,
            Vec::new(),
        );
        levels.push((eps, est));
    }
    let mut monotone = Vec::new();
    for w in levels.windows(2) {
        let (big, small) = (&w[0], &w[1]);
        for (rb, rs) in big.1.per_n.iter().zip(&small.1.per_n) {
            monotone.push(MonotoneCheck {
                n: rb.n,
                larger_epsilon: big.0,
                smaller_epsilon: small.0,
                holds: rb.a.upper <= rs.a.upper * (1.0 + 1e-9),
                exact: rb.exact && rs.exact,
            });
        }
    }
    let mut warnings = Vec::new();
    let violations = monotone.iter().filter(|m| !m.holds).count();
    if violations > 0 {
        warnings.push(format!(
            "{violations} per-n comparison(s) along the epsilon ladder are not monotone"
        ));
    }
    let outer_levels = levels
        .iter()
        .map(|(eps, e)| OuterLevel {
            epsilon: *eps,
            fekete_inf: e.fekete_inf,
            tail_slope: e.tail_slope,
            per_n: e.per_n.clone(),
        })
        .collect();
    let (_, last) = levels.pop().expect("nonempty ladder");
    let mut est = last;
    est.mode = EstimateMode::Outer {
        epsilons: ladder.to_vec(),
    };
    est.warnings = warnings;
    est.outer_levels = Some(outer_levels);
    est.monotone = Some(monotone);
    Ok(est)
}

/// Cover of the universe by sets `A` with a length-`τ` word `G(A)` keeping `A` admissible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantOpenCover {
    pub tau: usize,
    pub members: Vec<(StateSet, ControlWord)>,
}

impl InvariantOpenCover {
    pub fn universe(&self) -> usize {
        self.members.first().map_or(0, |m| m.0.universe())
    }
}

/// Cover whose members are the invariant domains of `words` (all of length `τ`).
/// Words with an empty domain are dropped.
pub fn invariant_cover_from_spanning(
    sys: &ControlSystem,
    words: &[ControlWord],
    tau: usize,
    mode: &VerificationMode,
) -> Result<InvariantOpenCover> {
    if tau == 0 {
        return Err(Error::InvalidHorizon { min: 1, got: 0 });
    }
    let mut union = StateSet::empty(sys.universe_size());
    let mut members = Vec::with_capacity(words.len());
    for w in words {
        if w.len() != tau {
            return Err(Error::InvalidWord(format!(
                "word {w} does not have length {tau}"
            )));
        }
        let dom = invariant_domain(sys, w, mode)?;
        if dom.is_empty() {
            continue;
        }
        union.union_with(&dom);
        members.push((dom, w.clone()));
    }
    if !union.is_full() {
        return Err(Error::NotSpanning {
            uncovered: union.universe() - union.count(),
        });
    }
    Ok(InvariantOpenCover { tau, members })
}

struct FeedbackNode<T> {
    sequence: Vec<u32>,
    log_weight: f64,
    alive: Vec<u32>,
    tracks: Vec<T>,
    offset: Option<Vec<f64>>,
}

fn feedback_instance<D: Dynamics>(
    d: &D,
    cover: &InvariantOpenCover,
    n: usize,
    weights: &[f64],
    mode: &VerificationMode,
    opts: &EnumerationOptions,
) -> Result<CoverInstance> {
    let tau = cover.tau;
    let universe = d.universe_size();
    let m = cover.members.len();
    let guard = &d.guard(mode, n * tau)?;
    let member_weight: &Vec<f64> = &cover
        .members
        .iter()
        .map(|(_, w)| w.indices().iter().fold(0.0, |acc, &u| acc + weights[u]))
        .collect::<Vec<f64>>();
    let mut stats = EnumerationStats {
        horizon: n,
        ..EnumerationStats::default()
    };
    let mut frontier = vec![FeedbackNode {
        sequence: Vec::new(),
        log_weight: 0.0,
        alive: (0..universe as u32).collect(),
        tracks: (0..universe).map(|e| d.start(e)).collect(),
        offset: d.root_offset(),
    }];
    for block in 0..n {
        let start_depth = block * tau;
        let remaining = opts.word_budget.saturating_sub(stats.nodes);
        let expandable = (remaining / m.max(1)).min(frontier.len());
        if expandable < frontier.len() {
            stats.truncated = true;
            frontier.truncate(expandable);
        }
        stats.nodes += frontier.len() * m;
        let children: Vec<FeedbackNode<D::Track>> = frontier
            .par_iter()
            .flat_map_iter(|p| {
                (0..m).filter_map(move |j| {
                    let (set, word) = &cover.members[j];
                    let mut offsets = Vec::with_capacity(tau);
                    if let Some(mut s) = p.offset.clone() {
                        for &u in word.indices() {
                            s = d.next_offset(&s, u);
                            offsets.push(s.clone());
                        }
                    }
                    let mut alive = Vec::new();
                    let mut tracks = Vec::new();
                    'elements: for (&e, t) in p.alive.iter().zip(&p.tracks) {
                        let e = e as usize;
                        match d.occupied(guard, e, t, p.offset.as_deref(), start_depth) {
                            Some(cell) if set.contains(cell) => {}
                            _ => continue,
                        }
                        let mut track = t.clone();
                        for (k, &u) in word.indices().iter().enumerate() {
                            let off = offsets.get(k).map(|v| v.as_slice());
                            match d.advance(guard, e, &track, u, off, start_depth + k + 1) {
                                Some(nt) => track = nt,
                                None => continue 'elements,
                            }
                        }
                        alive.push(e as u32);
                        tracks.push(track);
                    }
                    if alive.is_empty() {
                        return None;
                    }
                    let mut sequence = p.sequence.clone();
                    sequence.push(j as u32);
                    Some(FeedbackNode {
                        sequence,
                        log_weight: p.log_weight + member_weight[j],
                        alive,
                        tracks,
                        offset: offsets.pop().or_else(|| p.offset.clone()),
                    })
                })
            })
            .collect();
        stats.pruned += frontier.len() * m - children.len();
        frontier = children;
        if frontier.is_empty() {
            break;
        }
    }
    let sets = frontier
        .into_iter()
        .filter(|p| p.sequence.len() == n)
        .map(|p| {
            let word: Vec<usize> = p
                .sequence
                .iter()
                .flat_map(|&j| cover.members[j as usize].1.indices().iter().copied())
                .collect();
            CandidateSet {
                elements: StateSet::from_indices(universe, p.alive.iter().map(|&e| e as usize)),
                log_weight: p.log_weight,
                word: ControlWord::from_raw(word),
            }
        })
        .collect();
    Ok(CoverInstance::from_candidates(universe, sets, stats))
}

/// Set-cover instance over `{B_n(α)}` for `α ∈ members^n`, weighted by
/// `e^{(S_{nτ} f)(ω(α))}`.
pub fn feedback_cover_instance(
    sys: &ControlSystem,
    f: &WeightFunction,
    cover: &InvariantOpenCover,
    n: usize,
    mode: &VerificationMode,
    opts: &EnumerationOptions,
) -> Result<CoverInstance> {
    if n == 0 {
        return Err(Error::InvalidHorizon { min: 1, got: 0 });
    }
    f.check_len(sys.alphabet_len())?;
    if cover.members.is_empty() || cover.universe() != sys.universe_size() {
        return Err(Error::ShapeMismatch(
            "cover does not match the system".into(),
        ));
    }
    let weights = f.scaled(sys.time_step()).table().to_vec();
    struct V<'a> {
        cover: &'a InvariantOpenCover,
        n: usize,
        weights: &'a [f64],
        mode: &'a VerificationMode,
        opts: &'a EnumerationOptions,
    }
    impl DynamicsVisitor for V<'_> {
        type Output = Result<CoverInstance>;
        fn visit<D: Dynamics>(self, d: &D) -> Result<CoverInstance> {
            feedback_instance(d, self.cover, self.n, self.weights, self.mode, self.opts)
        }
    }
    visit_dynamics(
        sys,
        V {
            cover,
            n,
            weights: &weights,
            mode,
            opts,
        },
    )
}

/// `q_n(f, Q, C)` with the best generating family found.
pub fn feedback_q_n_detailed(
    sys: &ControlSystem,
    f: &WeightFunction,
    cover: &InvariantOpenCover,
    n: usize,
    mode: &VerificationMode,
    budgets: &Budgets,
) -> Result<SpanningOutcome> {
    let inst = feedback_cover_instance(sys, f, cover, n, mode, &budgets.enumeration)?;
    let t = trivial_log_lower(f, n * cover.tau, sys.time_step());
    Ok(solve_instance(&inst, n, t, budgets))
}

pub fn feedback_q_n(
    sys: &ControlSystem,
    f: &WeightFunction,
    cover: &InvariantOpenCover,
    n: usize,
    mode: &VerificationMode,
    budgets: &Budgets,
) -> Result<IntervalValue> {
    Ok(feedback_q_n_detailed(sys, f, cover, n, mode, budgets)?.value)
}

/// Covers built from the optimal spanning families at `τ = 1..=tau_max`.
pub fn feedback_cover_candidates(
    sys: &ControlSystem,
    f: &WeightFunction,
    tau_max: usize,
    mode: &VerificationMode,
    budgets: &Budgets,
) -> Result<Vec<InvariantOpenCover>> {
    if tau_max == 0 {
        return Err(Error::InvalidHorizon { min: 1, got: 0 });
    }
    (1..=tau_max)
        .map(|tau| {
            let out = a_n_detailed(sys, f, tau, mode, budgets)?;
            if !out.is_feasible() {
                return Err(Error::Infeasible { n: tau });
            }
            invariant_cover_from_spanning(sys, &out.words, tau, mode)
        })
        .collect()
}

/// Feedback pressure: per-cover estimates of `log q_n / (n τ dt)` for `n = 1..=n_max`;
/// the estimate of the cover with the smallest Fekete value is returned.
pub fn pressure_feedback(
    sys: &ControlSystem,
    f: &WeightFunction,
    candidates: &[InvariantOpenCover],
    n_max: usize,
    mode: &VerificationMode,
    budgets: &Budgets,
) -> Result<PressureEstimate> {
    if candidates.is_empty() {
        return Err(Error::Config(
            "at least one cover candidate is required".into(),
        ));
    }
    check_horizons(1, n_max)?;
    let warnings: Vec<String> = warn_if_not_invariant(sys, mode)?.into_iter().collect();
    let dt = sys.time_step();
    let mut best: Option<PressureEstimate> = None;
    let mut summary = Vec::with_capacity(candidates.len());
    for (id, cover) in candidates.iter().enumerate() {
        let rows = (1..=n_max)
            .map(|n| {
                let out = feedback_q_n_detailed(sys, f, cover, n, mode, budgets)?;
                if out.log_upper.is_infinite() && out.value.exact {
                    return Err(Error::Infeasible { n });
                }
                Ok(row_from(out, (n * cover.tau) as f64 * dt))
            })
            .collect::<Result<Vec<_>>>()?;
        let est = PressureEstimate::assemble(
            EstimateMode::Feedback {
                cover: id,
                tau: cover.tau,
            },
            dt,
            cover.tau,
            rows,
            warnings.clone(),
        );
        summary.push(FeedbackCandidate {
            tau: cover.tau,
            members: cover.members.len(),
            fekete_inf: est.fekete_inf,
            tail_slope: est.tail_slope,
        });
        if best
            .as_ref()
            .is_none_or(|b| est.fekete_inf < b.fekete_inf * (1.0 - 1e-12) - 1e-15)
        {
            best = Some(est);
        }
    }
    let mut est = best.expect("nonempty candidates");
    est.feedback_candidates = Some(summary);
    Ok(est)
}

/// `f(u0) + Σ max(0, Re μ_i)` over the eigenvalues of `A` (`d <= 4`).
pub fn linear_pressure_formula(a: &DMatrix<f64>, f: WeightKind, u0: &[f64]) -> Result<f64> {
    let fu = f.evaluate(u0).ok_or_else(|| {
        Error::InvalidWeight("a tabulated weight needs the alphabet to evaluate u0".into())
    })?;
    linear_formula_value(a, fu)
}

/// Same as [`linear_pressure_formula`] for a weight tabulated on `alphabet`; `u0` must be
/// one of its values.
pub fn linear_pressure_formula_tabulated(
    a: &DMatrix<f64>,
    f: &WeightFunction,
    alphabet: &ControlAlphabet,
    u0: &[f64],
) -> Result<f64> {
    let i = alphabet
        .index_of(u0, 1e-12)
        .ok_or_else(|| Error::InvalidWeight(format!("{u0:?} is not an alphabet value")))?;
    f.check_len(alphabet.len())?;
    linear_formula_value(a, f.value(i))
}

fn linear_formula_value(a: &DMatrix<f64>, fu: f64) -> Result<f64> {
    let eig = linalg::eigenvalues(a)?;
    Ok(fu + eig.iter().map(|z| z.re.max(0.0)).sum::<f64>())
}
