//! Trajectories, invariant domains of control words, and cover-instance assembly.
//!
//! All per-word computations go through the [`Dynamics`] trait, which tracks one
//! "alive" element (state or grid cell) at a time along a word. Affine systems are
//! tracked through a word-level offset: after a prefix `w` of length `k` every cell
//! center `x` sits at `A^k x + s(w)`, where `A^k x` is shared by all words. Two prefixes
//! with bitwise-equal offsets therefore have identical futures, which the enumerator
//! uses for exact dominance pruning.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::cover::{CandidateSet, CoverInstance, EnumerationStats};
use crate::error::{Error, Result};
use crate::stateset::StateSet;
use crate::system::{
    ControlSystem, ControlWord, FiniteStateControlSystem, QuantizedSystem, StepMap, Successor,
    WeightFunction,
};

/// How a gridded system decides that a step stays admissible.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum VerificationMode {
    /// Cell centers must land in `shrink(Q, delta)`.
    Center { delta: f64 },
    /// The bounding box of the affine image of the whole cell must lie in `shrink(Q, delta)`.
    Box { delta: f64 },
    /// Cell centers must land in the open neighborhood `N_epsilon(Q)`.
    Outer { epsilon: f64 },
}

impl VerificationMode {
    pub fn is_outer(&self) -> bool {
        matches!(self, VerificationMode::Outer { .. })
    }
}

/// Per-element, per-word stepping. See the module docs.
pub trait Dynamics: Sync {
    type Track: Clone + Send + Sync;
    type Guard: Send + Sync;

    fn universe_size(&self) -> usize;
    fn alphabet_size(&self) -> usize;
    /// Precomputes whatever `advance` needs for words of length up to `horizon`.
    fn guard(&self, mode: &VerificationMode, horizon: usize) -> Result<Self::Guard>;
    fn start(&self, element: usize) -> Self::Track;
    fn root_offset(&self) -> Option<Vec<f64>> {
        None
    }
    fn next_offset(&self, offset: &[f64], _control: usize) -> Vec<f64> {
        offset.to_vec()
    }
    /// Moves `element` one step under `control`, arriving at step `depth` (1-based).
    /// `offset` is the word-level offset after the step. `None` when the step is not
    /// admissible.
    fn advance(
        &self,
        guard: &Self::Guard,
        element: usize,
        track: &Self::Track,
        control: usize,
        offset: Option<&[f64]>,
        depth: usize,
    ) -> Option<Self::Track>;
    /// Universe element currently occupied at step `depth`, if any.
    fn occupied(
        &self,
        guard: &Self::Guard,
        element: usize,
        track: &Self::Track,
        offset: Option<&[f64]>,
        depth: usize,
    ) -> Option<usize>;
}

impl Dynamics for FiniteStateControlSystem {
    type Track = u32;
    type Guard = ();

    fn universe_size(&self) -> usize {
        self.state_count()
    }

    fn alphabet_size(&self) -> usize {
        self.control_count()
    }

    fn guard(&self, _mode: &VerificationMode, _horizon: usize) -> Result<()> {
        Ok(())
    }

    fn start(&self, element: usize) -> u32 {
        element as u32
    }

    #[inline]
    fn advance(
        &self,
        _: &(),
        _: usize,
        track: &u32,
        control: usize,
        _: Option<&[f64]>,
        _: usize,
    ) -> Option<u32> {
        self.interior_successor(*track as usize, control)
            .map(|s| s as u32)
    }

    fn occupied(
        &self,
        _: &(),
        _: usize,
        track: &u32,
        _: Option<&[f64]>,
        _: usize,
    ) -> Option<usize> {
        Some(*track as usize)
    }
}

/// Target set for gridded systems.
#[derive(Debug, Clone)]
pub struct TargetBox {
    lo: Vec<f64>,
    hi: Vec<f64>,
    open: bool,
}

impl TargetBox {
    fn new(sys: &QuantizedSystem, mode: &VerificationMode) -> Result<Self> {
        let (b, open) = match *mode {
            VerificationMode::Center { delta } | VerificationMode::Box { delta } => {
                (sys.interior_box(delta)?, false)
            }
            VerificationMode::Outer { epsilon } => (sys.neighborhood_box(epsilon)?, true),
        };
        Ok(Self {
            lo: b.lo().to_vec(),
            hi: b.hi().to_vec(),
            open,
        })
    }

    #[inline]
    fn admits(&self, x: &[f64], radius: Option<&[f64]>) -> bool {
        let d = self.lo.len();
        (0..d).all(|i| {
            let r = radius.map_or(0.0, |r| r[i]);
            if self.open {
                self.lo[i] < x[i] - r && x[i] + r < self.hi[i]
            } else {
                self.lo[i] <= x[i] - r && x[i] + r <= self.hi[i]
            }
        })
    }
}

/// Affine view of a gridded system, tracked through word offsets.
pub struct AffineDynamics<'a> {
    sys: &'a QuantizedSystem,
}

pub struct AffineGuard {
    target: TargetBox,
    /// `A^k x_e` for every depth `k` and cell `e`, flattened cell-major.
    powered: Vec<Vec<f64>>,
    /// Half-widths of the bounding box of the `k`-step image of a cell (box mode only).
    radii: Option<Vec<Vec<f64>>>,
}

impl AffineGuard {
    /// Powered centers only advance as far as an enumeration needs them.
    fn point(&self, element: usize, depth: usize, offset: &[f64]) -> SmallVec<[f64; 4]> {
        let d = offset.len();
        let base = &self.powered[depth][element * d..(element + 1) * d];
        base.iter().zip(offset).map(|(a, s)| a + s).collect()
    }
}

impl<'a> AffineDynamics<'a> {
    pub fn new(sys: &'a QuantizedSystem) -> Option<Self> {
        sys.is_affine().then_some(Self { sys })
    }
}

impl Dynamics for AffineDynamics<'_> {
    type Track = ();
    type Guard = AffineGuard;

    fn universe_size(&self) -> usize {
        self.sys.grid().cell_count()
    }

    fn alphabet_size(&self) -> usize {
        self.sys.alphabet().len()
    }

    fn guard(&self, mode: &VerificationMode, horizon: usize) -> Result<AffineGuard> {
        let target = TargetBox::new(self.sys, mode)?;
        let grid = self.sys.grid();
        let d = self.sys.dim();
        let mut current: Vec<f64> = (0..grid.cell_count())
            .flat_map(|e| grid.center(e))
            .collect();
        let mut powered = Vec::with_capacity(horizon + 1);
        powered.push(current.clone());
        for _ in 0..horizon {
            current = current
                .chunks(d)
                .flat_map(|x| self.sys.linear_part(x))
                .collect();
            powered.push(current.clone());
        }
        let radii = match mode {
            VerificationMode::Box { .. } => {
                let (a, _, _) = self.sys.affine_parts().expect("affine");
                let half: Vec<f64> = grid.cell_widths().iter().map(|w| 0.5 * w).collect();
                let mut power = nalgebra::DMatrix::<f64>::identity(d, d);
                let mut out = Vec::with_capacity(horizon + 1);
                for _ in 0..=horizon {
                    let abs_p = power.map(|x| x.abs());
                    let r: Vec<f64> = (0..d)
                        .map(|i| {
                            let s: f64 = (0..d).map(|j| abs_p[(i, j)] * half[j]).sum();
                            // outward slack for rounding in the center computation
                            s * (1.0 + 1e-12) + 1e-14
                        })
                        .collect();
                    out.push(r);
                    power = a * &power;
                }
                Some(out)
            }
            _ => None,
        };
        Ok(AffineGuard {
            target,
            powered,
            radii,
        })
    }

    fn start(&self, _element: usize) {}

    fn root_offset(&self) -> Option<Vec<f64>> {
        Some(vec![0.0; self.sys.dim()])
    }

    fn next_offset(&self, offset: &[f64], control: usize) -> Vec<f64> {
        self.sys.affine_step(offset, control)
    }

    #[inline]
    fn advance(
        &self,
        guard: &AffineGuard,
        element: usize,
        _track: &(),
        _control: usize,
        offset: Option<&[f64]>,
        depth: usize,
    ) -> Option<()> {
        let offset = offset.expect("affine dynamics carry offsets");
        let x = guard.point(element, depth, offset);
        let radius = guard.radii.as_ref().map(|r| r[depth].as_slice());
        guard.target.admits(&x, radius).then_some(())
    }

    fn occupied(
        &self,
        guard: &AffineGuard,
        element: usize,
        _: &(),
        offset: Option<&[f64]>,
        depth: usize,
    ) -> Option<usize> {
        let x = guard.point(
            element,
            depth,
            offset.expect("affine dynamics carry offsets"),
        );
        self.sys.grid().locate(&x)
    }
}

/// View of a gridded system with a host-supplied map; tracks explicit points.
pub struct CustomDynamics<'a> {
    sys: &'a QuantizedSystem,
}

impl<'a> CustomDynamics<'a> {
    pub fn new(sys: &'a QuantizedSystem) -> Self {
        Self { sys }
    }
}

impl Dynamics for CustomDynamics<'_> {
    type Track = SmallVec<[f64; 4]>;
    type Guard = TargetBox;

    fn universe_size(&self) -> usize {
        self.sys.grid().cell_count()
    }

    fn alphabet_size(&self) -> usize {
        self.sys.alphabet().len()
    }

    fn guard(&self, mode: &VerificationMode, _horizon: usize) -> Result<TargetBox> {
        if matches!(mode, VerificationMode::Box { .. }) {
            return Err(Error::BoxModeRequiresAffine);
        }
        TargetBox::new(self.sys, mode)
    }

    fn start(&self, element: usize) -> Self::Track {
        self.sys.grid().center(element).into()
    }

    fn advance(
        &self,
        guard: &TargetBox,
        _element: usize,
        track: &Self::Track,
        control: usize,
        _offset: Option<&[f64]>,
        _depth: usize,
    ) -> Option<Self::Track> {
        let next = self.sys.step(track, control);
        guard.admits(&next, None).then(|| next.into())
    }

    fn occupied(
        &self,
        _: &TargetBox,
        _: usize,
        track: &Self::Track,
        _: Option<&[f64]>,
        _: usize,
    ) -> Option<usize> {
        self.sys.grid().locate(track)
    }
}

/// Generic computation over whichever [`Dynamics`] a system provides.
pub trait DynamicsVisitor {
    type Output;
    fn visit<D: Dynamics>(self, dynamics: &D) -> Self::Output;
}

pub fn visit_dynamics<V: DynamicsVisitor>(sys: &ControlSystem, visitor: V) -> V::Output {
    match sys {
        ControlSystem::Finite(s) => visitor.visit(s),
        ControlSystem::Quantized(q) => match q.map() {
            StepMap::Affine { .. } => visitor.visit(&AffineDynamics { sys: q }),
            StepMap::Custom(_) => visitor.visit(&CustomDynamics { sys: q }),
        },
    }
}

/// `[x_0, .., x_n]` for a table system; an EXIT ends the sequence.
pub fn trajectory_finite(
    sys: &FiniteStateControlSystem,
    x0: usize,
    word: &ControlWord,
) -> Result<Vec<Successor>> {
    if x0 >= sys.state_count() {
        return Err(Error::MalformedTable(format!("state {x0} out of range")));
    }
    check_word(word, sys.control_count())?;
    let mut out = vec![Successor::State(x0)];
    let mut x = x0;
    for &u in word.indices() {
        match sys.successor(x, u) {
            Successor::State(t) => {
                out.push(Successor::State(t));
                x = t;
            }
            Successor::Exit => {
                out.push(Successor::Exit);
                break;
            }
        }
    }
    Ok(out)
}

/// `[x_0, .., x_n]` under the step map of a gridded system (no admissibility checks).
pub fn trajectory_points(
    sys: &QuantizedSystem,
    x0: &[f64],
    word: &ControlWord,
) -> Result<Vec<Vec<f64>>> {
    if x0.len() != sys.dim() {
        return Err(Error::ShapeMismatch(format!(
            "initial point has dimension {} but the system has {}",
            x0.len(),
            sys.dim()
        )));
    }
    check_word(word, sys.alphabet().len())?;
    let mut out = Vec::with_capacity(word.len() + 1);
    out.push(x0.to_vec());
    for &u in word.indices() {
        let next = sys.step(out.last().expect("nonempty"), u);
        out.push(next);
    }
    Ok(out)
}

fn check_word(word: &ControlWord, alphabet: usize) -> Result<()> {
    if word.is_empty() {
        return Err(Error::InvalidWord("word is empty".into()));
    }
    if word.indices().iter().any(|&u| u >= alphabet) {
        return Err(Error::InvalidWord(format!(
            "word {word} uses an index outside an alphabet of {alphabet}"
        )));
    }
    Ok(())
}

fn domain_along<D: Dynamics>(dyn_: &D, guard: &D::Guard, word: &ControlWord) -> StateSet {
    let universe = dyn_.universe_size();
    let mut offsets = Vec::new();
    if let Some(mut s) = dyn_.root_offset() {
        for &u in word.indices() {
            s = dyn_.next_offset(&s, u);
            offsets.push(s.clone());
        }
    }
    let mut out = StateSet::empty(universe);
    'elements: for e in 0..universe {
        let mut track = dyn_.start(e);
        for (k, &u) in word.indices().iter().enumerate() {
            let off = offsets.get(k).map(|v| v.as_slice());
            match dyn_.advance(guard, e, &track, u, off, k + 1) {
                Some(t) => track = t,
                None => continue 'elements,
            }
        }
        out.insert(e);
    }
    out
}

/// States (cells) that stay admissible for steps `1..=n` under `word`.
pub fn invariant_domain(
    sys: &ControlSystem,
    word: &ControlWord,
    mode: &VerificationMode,
) -> Result<StateSet> {
    struct V<'a> {
        word: &'a ControlWord,
        mode: &'a VerificationMode,
    }
    impl DynamicsVisitor for V<'_> {
        type Output = Result<StateSet>;
        fn visit<D: Dynamics>(self, d: &D) -> Result<StateSet> {
            check_word(self.word, d.alphabet_size())?;
            let guard = d.guard(self.mode, self.word.len())?;
            Ok(domain_along(d, &guard, self.word))
        }
    }
    visit_dynamics(sys, V { word, mode })
}

/// Result of a one-step invariance scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvarianceReport {
    pub ok: bool,
    /// First admissible control for each state or cell.
    pub witnesses: Vec<Option<usize>>,
}

impl InvarianceReport {
    pub fn failures(&self) -> impl Iterator<Item = usize> + '_ {
        self.witnesses
            .iter()
            .enumerate()
            .filter(|(_, w)| w.is_none())
            .map(|(i, _)| i)
    }
}

/// Checks that every state (cell) admits a control with an admissible successor.
pub fn strong_invariance_check(
    sys: &ControlSystem,
    mode: &VerificationMode,
) -> Result<InvarianceReport> {
    struct V<'a>(&'a VerificationMode);
    impl DynamicsVisitor for V<'_> {
        type Output = Result<InvarianceReport>;
        fn visit<D: Dynamics>(self, d: &D) -> Result<InvarianceReport> {
            let guard = d.guard(self.0, 1)?;
            let root = d.root_offset();
            let offsets: Vec<Option<Vec<f64>>> = (0..d.alphabet_size())
                .map(|u| root.as_ref().map(|s| d.next_offset(s, u)))
                .collect();
            let witnesses: Vec<Option<usize>> = (0..d.universe_size())
                .into_par_iter()
                .map(|e| {
                    let track = d.start(e);
                    (0..d.alphabet_size()).find(|&u| {
                        d.advance(&guard, e, &track, u, offsets[u].as_deref(), 1)
                            .is_some()
                    })
                })
                .collect();
            Ok(InvarianceReport {
                ok: witnesses.iter().all(|w| w.is_some()),
                witnesses,
            })
        }
    }
    visit_dynamics(sys, V(mode))
}

/// Controls for [`enumerate_cover_instance`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnumerationOptions {
    /// Drop prefixes whose domain is already empty.
    pub prune: bool,
    /// Maximum number of enumerated word nodes.
    pub word_budget: usize,
    /// Drop a prefix when another prefix with the same offset key has a superset
    /// domain and no larger weight (affine systems only).
    pub dominance: bool,
    /// Offset keys are bitwise when zero, otherwise offsets are bucketed at this
    /// resolution. A positive value keeps only a subset of the words, so the optimum
    /// becomes an upper bound.
    pub merge_tolerance: f64,
}

impl Default for EnumerationOptions {
    fn default() -> Self {
        Self {
            prune: true,
            word_budget: 1_000_000,
            dominance: true,
            merge_tolerance: 0.0,
        }
    }
}

struct Prefix<T> {
    word: Vec<u32>,
    log_weight: f64,
    alive: Vec<u32>,
    tracks: Vec<T>,
    offset: Option<Vec<f64>>,
}

fn offset_key(offset: &[f64], tol: f64) -> Vec<i64> {
    offset
        .iter()
        .map(|&x| {
            if tol > 0.0 {
                (x / tol).round() as i64
            } else if x == 0.0 {
                0
            } else {
                x.to_bits() as i64
            }
        })
        .collect()
}

fn is_sorted_subset(small: &[u32], big: &[u32]) -> bool {
    if small.len() > big.len() {
        return false;
    }
    let mut j = 0;
    for &x in small {
        while j < big.len() && big[j] < x {
            j += 1;
        }
        if j == big.len() || big[j] != x {
            return false;
        }
        j += 1;
    }
    true
}

/// Marks prefixes dominated by another prefix sharing their offset key.
fn dominance_filter<T>(children: &[Prefix<T>], tol: f64) -> Vec<bool> {
    let mut groups: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
    for (i, c) in children.iter().enumerate() {
        if let Some(off) = &c.offset {
            groups.entry(offset_key(off, tol)).or_default().push(i);
        }
    }
    let mut keep = vec![true; children.len()];
    for members in groups.values_mut() {
        if members.len() < 2 {
            continue;
        }
        members.sort_by(|&a, &b| {
            children[a]
                .log_weight
                .total_cmp(&children[b].log_weight)
                .then(children[b].alive.len().cmp(&children[a].alive.len()))
                .then(a.cmp(&b))
        });
        let mut kept: Vec<usize> = Vec::new();
        for &m in members.iter() {
            let dominated = kept
                .iter()
                .any(|&k| is_sorted_subset(&children[m].alive, &children[k].alive));
            if dominated {
                keep[m] = false;
            } else {
                kept.push(m);
            }
        }
    }
    keep
}

fn enumerate_with<D: Dynamics>(
    d: &D,
    n: usize,
    weights: &[f64],
    mode: &VerificationMode,
    opts: &EnumerationOptions,
) -> Result<CoverInstance> {
    let universe = d.universe_size();
    let alphabet = d.alphabet_size();
    let guard = &d.guard(mode, n)?;
    let mut stats = EnumerationStats {
        horizon: n,
        ..EnumerationStats::default()
    };
    let mut frontier = vec![Prefix {
        word: Vec::new(),
        log_weight: 0.0,
        alive: (0..universe as u32).collect(),
        tracks: (0..universe).map(|e| d.start(e)).collect(),
        offset: d.root_offset(),
    }];
    let use_dominance = opts.dominance && d.root_offset().is_some();
    for depth in 1..=n {
        let remaining = opts.word_budget.saturating_sub(stats.nodes);
        let expandable = (remaining / alphabet).min(frontier.len());
        if expandable < frontier.len() {
            stats.truncated = true;
            frontier.truncate(expandable);
        }
        stats.nodes += frontier.len() * alphabet;
        let children: Vec<Prefix<D::Track>> = frontier
            .par_iter()
            .flat_map_iter(|p| {
                (0..alphabet).filter_map(move |u| {
                    let offset = p.offset.as_ref().map(|s| d.next_offset(s, u));
                    let mut alive = Vec::new();
                    let mut tracks = Vec::new();
                    for (&e, t) in p.alive.iter().zip(&p.tracks) {
                        if let Some(nt) =
                            d.advance(guard, e as usize, t, u, offset.as_deref(), depth)
                        {
                            alive.push(e);
                            tracks.push(nt);
                        }
                    }
                    if opts.prune && alive.is_empty() {
                        return None;
                    }
                    let mut word = p.word.clone();
                    word.push(u as u32);
                    Some(Prefix {
                        word,
                        log_weight: p.log_weight + weights[u],
                        alive,
                        tracks,
                        offset,
                    })
                })
            })
            .collect();
        stats.pruned += frontier.len() * alphabet - children.len();
        frontier = if use_dominance {
            let keep = dominance_filter(&children, opts.merge_tolerance);
            stats.dominated += keep.iter().filter(|k| !**k).count();
            children
                .into_iter()
                .zip(keep)
                .filter_map(|(c, k)| k.then_some(c))
                .collect()
        } else {
            children
        };
        if frontier.is_empty() {
            break;
        }
    }
    if opts.merge_tolerance > 0.0 && stats.dominated > 0 {
        stats.approximate = true;
    }
    let sets: Vec<CandidateSet> = frontier
        .into_iter()
        .filter(|p| p.word.len() == n && !p.alive.is_empty())
        .map(|p| CandidateSet {
            elements: StateSet::from_indices(universe, p.alive.iter().map(|&e| e as usize)),
            log_weight: p.log_weight,
            word: ControlWord::from_raw(p.word.iter().map(|&u| u as usize).collect()),
        })
        .collect();
    Ok(CoverInstance::from_candidates(universe, sets, stats))
}

/// One candidate set per length-`n` word with nonempty invariant domain, weighted by
/// `e^{(S_n f)(ω)}` (per-step weight scaled by the system's sampling interval).
pub fn enumerate_cover_instance(
    sys: &ControlSystem,
    n: usize,
    f: &WeightFunction,
    mode: &VerificationMode,
    opts: &EnumerationOptions,
) -> Result<CoverInstance> {
    if n == 0 {
        return Err(Error::InvalidHorizon { min: 1, got: n });
    }
    let alphabet = sys.alphabet_len();
    f.check_len(alphabet)?;
    if opts.word_budget < alphabet {
        return Err(Error::BudgetTooSmall {
            budget: opts.word_budget,
            alphabet,
        });
    }
    let weights = f.scaled(sys.time_step()).table().to_vec();
    struct V<'a> {
        n: usize,
        weights: &'a [f64],
        mode: &'a VerificationMode,
        opts: &'a EnumerationOptions,
    }
    impl DynamicsVisitor for V<'_> {
        type Output = Result<CoverInstance>;
        fn visit<D: Dynamics>(self, d: &D) -> Result<CoverInstance> {
            enumerate_with(d, self.n, self.weights, self.mode, self.opts)
        }
    }
    visit_dynamics(
        sys,
        V {
            n,
            weights: &weights,
            mode,
            opts,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::{m3_fixture, ControlAlphabet, IntervalBox};
    use nalgebra::{DMatrix, DVector};

    const CENTER: VerificationMode = VerificationMode::Center { delta: 1e-3 };

    fn word(ix: &[usize]) -> ControlWord {
        ControlWord::new(ix.to_vec(), 16).unwrap()
    }

    fn doubling(cells: usize) -> QuantizedSystem {
        QuantizedSystem::affine(
            DMatrix::from_element(1, 1, 2.0),
            DMatrix::from_element(1, 1, 1.0),
            DVector::zeros(1),
            ControlAlphabet::equispaced(9, -1.0, 1.0).unwrap(),
            IntervalBox::from_intervals(&[(-0.9, 0.9)]).unwrap(),
            vec![cells],
            1e-3,
        )
        .unwrap()
    }

    #[test]
    fn m3_trajectories() {
        let m3 = m3_fixture();
        assert_eq!(
            trajectory_finite(&m3, 1, &word(&[0, 1])).unwrap(),
            vec![
                Successor::State(1),
                Successor::State(0),
                Successor::State(1)
            ]
        );
        assert_eq!(
            trajectory_finite(&m3, 1, &word(&[1])).unwrap(),
            vec![Successor::State(1), Successor::Exit]
        );
    }

    #[test]
    fn m3_domains() {
        let sys = ControlSystem::from(m3_fixture());
        assert_eq!(
            invariant_domain(&sys, &word(&[0]), &CENTER)
                .unwrap()
                .to_vec(),
            vec![0, 1]
        );
        assert_eq!(
            invariant_domain(&sys, &word(&[1]), &CENTER)
                .unwrap()
                .to_vec(),
            vec![0]
        );
        assert!(invariant_domain(&sys, &word(&[1, 1]), &CENTER)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn zero_control_keeps_origin() {
        let sys = doubling(512);
        let traj = trajectory_points(&sys, &[0.0], &ControlWord::constant(4, 6)).unwrap();
        assert!(traj.iter().all(|x| x[0] == 0.0));
    }

    #[test]
    fn doubling_two_step_domain_matches_closed_form() {
        let q = doubling(512);
        let sys = ControlSystem::from(q.clone());
        let dom = invariant_domain(&sys, &word(&[4, 4]), &CENTER).unwrap();
        let oracle: Vec<usize> = (0..512)
            .filter(|&i| {
                let x = q.grid().center(i)[0];
                (2.0 * x).abs() <= 0.9 - 1e-3 && (4.0 * x).abs() <= 0.9 - 1e-3
            })
            .collect();
        assert_eq!(dom.to_vec(), oracle);
        assert!(!oracle.is_empty());
    }

    #[test]
    fn strong_invariance_scans() {
        let m3 = ControlSystem::from(m3_fixture());
        let r = strong_invariance_check(&m3, &CENTER).unwrap();
        assert!(r.ok);
        assert_eq!(r.witnesses, vec![Some(0), Some(0)]);

        let q = ControlSystem::from(doubling(512));
        assert!(strong_invariance_check(&q, &CENTER).unwrap().ok);

        let sink = FiniteStateControlSystem::with_default_labels(
            vec![vec![Some(1)], vec![None]],
            vec![true, false],
        )
        .unwrap();
        let r = strong_invariance_check(&sink.into(), &CENTER).unwrap();
        assert!(!r.ok);
        assert_eq!(r.failures().collect::<Vec<_>>(), vec![0, 1]);
    }

    #[test]
    fn m3_instances() {
        let sys = ControlSystem::from(m3_fixture());
        let f = WeightFunction::tabulated(vec![1.0, 0.0]).unwrap();
        let opts = EnumerationOptions::default();
        let inst = enumerate_cover_instance(&sys, 1, &f, &CENTER, &opts).unwrap();
        assert_eq!(inst.universe(), 2);
        let got: Vec<(Vec<usize>, f64)> = inst
            .sets()
            .iter()
            .map(|s| (s.elements.to_vec(), s.log_weight))
            .collect();
        assert_eq!(got, vec![(vec![0, 1], 1.0), (vec![0], 0.0)]);

        let inst = enumerate_cover_instance(&sys, 2, &f, &CENTER, &opts).unwrap();
        let got: Vec<(Vec<usize>, Vec<usize>, f64)> = inst
            .sets()
            .iter()
            .map(|s| (s.word.indices().to_vec(), s.elements.to_vec(), s.log_weight))
            .collect();
        assert_eq!(
            got,
            vec![
                (vec![0, 0], vec![0, 1], 2.0),
                (vec![0, 1], vec![0, 1], 1.0),
                (vec![1, 0], vec![0], 1.0),
            ]
        );
        assert!(inst.is_exhaustive());
    }

    #[test]
    fn single_letter_alphabet_gives_one_set() {
        let sys = ControlSystem::from(
            FiniteStateControlSystem::with_default_labels(vec![vec![Some(0)]], vec![true]).unwrap(),
        );
        let inst = enumerate_cover_instance(
            &sys,
            1,
            &WeightFunction::zero(1),
            &CENTER,
            &EnumerationOptions::default(),
        )
        .unwrap();
        assert!(inst.sets().len() <= 1);
    }

    #[test]
    fn box_mode_needs_affine() {
        let q = QuantizedSystem::custom(
            std::sync::Arc::new(|x: &[f64], u: &[f64]| vec![0.5 * x[0] + u[0]]),
            ControlAlphabet::equispaced(3, -0.1, 0.1).unwrap(),
            IntervalBox::from_intervals(&[(-1.0, 1.0)]).unwrap(),
            vec![8],
            1e-3,
        )
        .unwrap();
        let r = invariant_domain(
            &q.into(),
            &word(&[0]),
            &VerificationMode::Box { delta: 1e-3 },
        );
        assert!(matches!(r, Err(Error::BoxModeRequiresAffine)));
    }

    #[test]
    fn budget_must_cover_alphabet() {
        let sys = ControlSystem::from(doubling(16));
        let opts = EnumerationOptions {
            word_budget: 3,
            ..Default::default()
        };
        assert!(matches!(
            enumerate_cover_instance(&sys, 1, &WeightFunction::zero(9), &CENTER, &opts),
            Err(Error::BudgetTooSmall { .. })
        ));
    }

    #[test]
    fn truncation_is_flagged() {
        let sys = ControlSystem::from(doubling(64));
        let opts = EnumerationOptions {
            word_budget: 100,
            dominance: false,
            ..Default::default()
        };
        let inst =
            enumerate_cover_instance(&sys, 4, &WeightFunction::zero(9), &CENTER, &opts).unwrap();
        assert!(!inst.is_exhaustive());
        assert!(inst.stats().nodes <= 100);
    }
}
