//! Machine-checked identities and inequalities on exact table fixtures.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::Result;
use crate::pressure::{
    a_n_detailed, feedback_cover_candidates, feedback_q_n, Budgets, SpanningOutcome,
};
use crate::system::{
    m3_fixture, ControlSystem, ControlWord, FiniteStateControlSystem, WeightFunction,
};
use crate::trajectory::VerificationMode;
use crate::transforms::{
    conjugate_system, power_system, product_system, PowerOptions, SkewConjugacy,
};

const MODE: VerificationMode = VerificationMode::Center { delta: 1e-3 };
const REL: f64 = 1e-9;
/// Largest horizon used for products and feedback sequences.
const PRODUCT_N_MAX: usize = 4;
const FEEDBACK_N_MAX: usize = 4;

/// A table system with a weight and, optionally, two strongly invariant parts whose
/// union is the whole state set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fixture {
    pub id: String,
    pub system: FiniteStateControlSystem,
    pub weight: WeightFunction,
    pub parts: Option<(Vec<usize>, Vec<usize>)>,
}

pub fn m3_weighted_fixture() -> Fixture {
    Fixture {
        id: "M3".into(),
        system: m3_fixture(),
        weight: WeightFunction::tabulated(vec![1.0, 0.0]).expect("finite"),
        parts: None,
    }
}

fn dyadic(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    let steps = ((hi - lo) * 16.0) as i64;
    lo + rng.gen_range(0..=steps) as f64 / 16.0
}

/// Random strongly invariant table with `3..=8` states and `2..=3` controls, built as
/// the union of two overlapping strongly invariant blocks `[0, m1)` and `[m2, S)`.
/// Weights are multiples of 1/16 so Birkhoff sums are exact.
pub fn random_fixture(rng: &mut ChaCha8Rng, id: &str) -> Fixture {
    let states = rng.gen_range(3..=8usize);
    let controls = rng.gen_range(2..=3usize);
    let m2 = rng.gen_range(1..states - 1);
    let m1 = rng.gen_range(m2 + 1..states);
    let block1: Vec<usize> = (0..m1).collect();
    let block2: Vec<usize> = (m2..states).collect();
    let mut interior: Vec<bool> = (0..states).map(|_| rng.gen_bool(0.8)).collect();
    interior[0] = true;
    interior[states - 1] = true;
    let interior_of = |block: &[usize], interior: &[bool]| -> Vec<usize> {
        block.iter().copied().filter(|&s| interior[s]).collect()
    };
    let int1 = interior_of(&block1, &interior);
    let int2 = interior_of(&block2, &interior);
    let mut table = vec![vec![None; controls]; states];
    for (x, row) in table.iter_mut().enumerate() {
        for entry in row.iter_mut() {
            *entry = if rng.gen_bool(0.2) {
                None
            } else {
                Some(rng.gen_range(0..states))
            };
        }
        let in1 = x < m1;
        let in2 = x >= m2;
        let mut us: Vec<usize> = (0..controls).collect();
        us.shuffle(rng);
        if in1 {
            row[us[0]] = Some(*int1.choose(rng).expect("block has an interior state"));
        }
        if in2 {
            let slot = if in1 { us[1] } else { us[0] };
            row[slot] = Some(*int2.choose(rng).expect("block has an interior state"));
        }
    }
    let system = FiniteStateControlSystem::with_default_labels(table, interior)
        .expect("generated table is well formed");
    debug_assert!(system.is_strongly_invariant());
    let weight = WeightFunction::tabulated((0..controls).map(|_| dyadic(rng, -1.0, 1.0)).collect())
        .expect("finite");
    Fixture {
        id: id.into(),
        system,
        weight,
        parts: Some((block1, block2)),
    }
}

/// M3 followed by `count` random fixtures drawn from `seed`.
pub fn standard_fixtures(count: usize, seed: u64) -> Vec<Fixture> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![m3_weighted_fixture()];
    for i in 0..count {
        out.push(random_fixture(&mut rng, &format!("random-{i:02}")));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PropertyStatus {
    Pass,
    Fail,
    /// Soft check, reported with its measured value.
    Diagnostic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyEntry {
    pub property: String,
    pub fixture: String,
    pub status: PropertyStatus,
    pub checks: usize,
    /// First violation, or the measured quantity for diagnostics.
    pub witness: Option<serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyReport {
    pub n_max: usize,
    pub seed: u64,
    pub entries: Vec<PropertyEntry>,
    pub passed: usize,
    pub failed: usize,
    pub diagnostics: usize,
}

impl PropertyReport {
    pub fn failures(&self) -> impl Iterator<Item = &PropertyEntry> {
        self.entries
            .iter()
            .filter(|e| e.status == PropertyStatus::Fail)
    }

    pub fn entries_for<'a>(
        &'a self,
        property: &'a str,
    ) -> impl Iterator<Item = &'a PropertyEntry> + 'a {
        self.entries.iter().filter(move |e| e.property == property)
    }
}

/// Accumulates checks of one property on one fixture.
struct Tally {
    property: &'static str,
    checks: usize,
    witness: Option<serde_json::Value>,
}

impl Tally {
    fn new(property: &'static str) -> Self {
        Self {
            property,
            checks: 0,
            witness: None,
        }
    }

    fn check(&mut self, ok: bool, witness: impl FnOnce() -> serde_json::Value) {
        self.checks += 1;
        if !ok && self.witness.is_none() {
            self.witness = Some(witness());
        }
    }

    fn finish(self, fixture: &str) -> PropertyEntry {
        PropertyEntry {
            property: self.property.into(),
            fixture: fixture.into(),
            status: if self.witness.is_some() {
                PropertyStatus::Fail
            } else {
                PropertyStatus::Pass
            },
            checks: self.checks,
            witness: self.witness,
        }
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= REL * a.abs().max(b.abs())
}

fn sorted_words(o: &SpanningOutcome) -> Vec<ControlWord> {
    let mut w = o.words.clone();
    w.sort();
    w
}

struct Exact<'a> {
    budgets: &'a Budgets,
}

impl Exact<'_> {
    fn run(&self, sys: &ControlSystem, f: &WeightFunction, n: usize) -> Result<SpanningOutcome> {
        a_n_detailed(sys, f, n, &MODE, self.budgets)
    }

    fn values(
        &self,
        sys: &ControlSystem,
        f: &WeightFunction,
        n_max: usize,
    ) -> Result<Vec<SpanningOutcome>> {
        (1..=n_max).map(|n| self.run(sys, f, n)).collect()
    }
}

fn rng_for(seed: u64, index: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ (0x9e37_79b9_7f4a_7c15u64.wrapping_mul(index as u64 + 1)))
}

fn fixture_battery(
    fx: &Fixture,
    index: usize,
    n_max: usize,
    seed: u64,
) -> Result<Vec<PropertyEntry>> {
    let budgets = Budgets::default();
    let ex = Exact { budgets: &budgets };
    let mut rng = rng_for(seed, index);
    let sys = ControlSystem::from(fx.system.clone());
    let f = &fx.weight;
    let k = f.len();
    let base = ex.values(&sys, f, n_max)?;
    let a = |n: usize| base[n - 1].value.upper;
    let mut out = Vec::new();

    let mut t = Tally::new("exactness");
    for o in &base {
        t.check(o.value.exact, || json!({ "n": o.n }));
    }
    out.push(t.finish(&fx.id));

    let mut t = Tally::new("subadditivity");
    for n in 1..n_max {
        for m in 1..=n_max - n {
            let (l, r) = (a(n + m).ln(), a(n).ln() + a(m).ln());
            t.check(
                l <= r + 1e-9,
                || json!({ "n": n, "k": m, "log_a_n_plus_k": l, "bound": r }),
            );
        }
    }
    out.push(t.finish(&fx.id));

    let c = dyadic(&mut rng, -1.0, 1.0);
    let shifted = ex.values(&sys, &f.shifted(c), n_max)?;
    let mut t = Tally::new("constant_shift");
    for (n, (o, s)) in base.iter().zip(&shifted).enumerate() {
        let n = n + 1;
        let expected = (n as f64 * c).exp() * o.value.upper;
        t.check(
            close(s.value.upper, expected),
            || json!({ "n": n, "c": c, "shifted": s.value.upper, "expected": expected }),
        );
        t.check(
            sorted_words(o) == sorted_words(s),
            || json!({ "n": n, "c": c, "reason": "optimal families differ" }),
        );
    }
    out.push(t.finish(&fx.id));

    let bump: Vec<f64> = (0..k).map(|_| dyadic(&mut rng, 0.0, 1.0)).collect();
    let g = WeightFunction::tabulated(f.table().iter().zip(&bump).map(|(x, b)| x + b).collect())?;
    let larger = ex.values(&sys, &g, n_max)?;
    let mut t = Tally::new("monotonicity");
    for (o, l) in base.iter().zip(&larger) {
        t.check(
            o.value.upper <= l.value.upper * (1.0 + REL),
            || json!({ "n": o.n, "a_f": o.value.upper, "a_g": l.value.upper }),
        );
    }
    out.push(t.finish(&fx.id));

    let h = WeightFunction::tabulated((0..k).map(|_| dyadic(&mut rng, -1.0, 1.0)).collect())?;
    let dist = f.sup_distance(&h);
    let other = ex.values(&sys, &h, n_max)?;
    let mut t = Tally::new("weight_lipschitz");
    for (o, h) in base.iter().zip(&other) {
        let ratio = o.value.upper / h.value.upper;
        let bound = (o.n as f64 * dist).exp();
        t.check(
            ratio <= bound * (1.0 + REL),
            || json!({ "n": o.n, "ratio": ratio, "bound": bound }),
        );
    }
    out.push(t.finish(&fx.id));

    let (p, gp) = power_system(&sys, f, 2, &PowerOptions::default())?;
    let mut t = Tally::new("power_rule");
    for n in 1..=n_max / 2 {
        let lhs = ex.run(&p, &gp, n)?.value.upper;
        t.check(
            close(lhs, a(2 * n)),
            || json!({ "n": n, "power": lhs, "a_2n": a(2 * n) }),
        );
    }
    out.push(t.finish(&fx.id));

    let mut states: Vec<usize> = (0..fx.system.state_count()).collect();
    let mut controls: Vec<usize> = (0..k).collect();
    states.shuffle(&mut rng);
    controls.shuffle(&mut rng);
    let conj = SkewConjugacy::Relabel {
        states: states.clone(),
        controls: controls.clone(),
    };
    let csys = conjugate_system(&sys, &conj)?;
    let cf = f.permuted(&controls);
    let mut t = Tally::new("conjugacy");
    for n in 1..=n_max {
        let v = ex.run(&csys, &cf, n)?.value.upper;
        t.check(close(v, a(n)), || {
            json!({ "n": n, "states": states, "controls": controls, "conjugate": v, "original": a(n) })
        });
    }
    out.push(t.finish(&fx.id));

    let partner = m3_weighted_fixture();
    let psys = ControlSystem::from(partner.system.clone());
    let (prod, pf) = product_system(&sys, f, &psys, &partner.weight)?;
    let pn = n_max.min(PRODUCT_N_MAX);
    let partner_vals = ex.values(&psys, &partner.weight, pn)?;
    let prod_vals = ex.values(&prod, &pf, pn)?;
    let mut t = Tally::new("product_inequality");
    for n in 1..=pn {
        let (l, r) = (
            prod_vals[n - 1].value.upper,
            a(n) * partner_vals[n - 1].value.upper,
        );
        t.check(
            l <= r * (1.0 + REL),
            || json!({ "n": n, "product": l, "bound": r }),
        );
    }
    out.push(t.finish(&fx.id));
    let rate = |v: &[SpanningOutcome]| {
        v.iter()
            .map(|o| o.log_upper / o.n as f64)
            .fold(f64::INFINITY, f64::min)
    };
    let gap = rate(&prod_vals) - rate(&base[..pn]) - rate(&partner_vals);
    out.push(PropertyEntry {
        property: "product_additivity".into(),
        fixture: fx.id.clone(),
        status: PropertyStatus::Diagnostic,
        checks: 1,
        witness: Some(json!({ "n_max": pn, "rate_gap": gap })),
    });

    if let Some((p1, p2)) = &fx.parts {
        let s1 = ControlSystem::from(fx.system.restrict(p1)?);
        let s2 = ControlSystem::from(fx.system.restrict(p2)?);
        let mut t = Tally::new("union_inequality");
        for n in 1..=n_max {
            let (v1, v2) = (
                ex.run(&s1, f, n)?.value.upper,
                ex.run(&s2, f, n)?.value.upper,
            );
            t.check(
                a(n) <= (v1 + v2) * (1.0 + REL),
                || json!({ "n": n, "whole": a(n), "parts": [v1, v2] }),
            );
        }
        out.push(t.finish(&fx.id));
    }

    let zero = WeightFunction::zero(k);
    let counts = ex.values(&sys, &zero, n_max)?;
    let mut t = Tally::new("entropy_integer");
    for o in &counts {
        let v = o.value.upper;
        t.check(
            (v - v.round()).abs() < 1e-9 && v >= 1.0,
            || json!({ "n": o.n, "a_n": v }),
        );
    }
    out.push(t.finish(&fx.id));

    out.push(feedback_sandwich(&sys, f, fx, &base, n_max, &ex)?);
    Ok(out)
}

fn feedback_sandwich(
    sys: &ControlSystem,
    f: &WeightFunction,
    fx: &Fixture,
    base: &[SpanningOutcome],
    n_max: usize,
    ex: &Exact,
) -> Result<PropertyEntry> {
    let mut t = Tally::new("feedback_sandwich");
    let covers = feedback_cover_candidates(sys, f, 2, &MODE, ex.budgets)?;
    for cover in &covers {
        let tau = cover.tau;
        let a_tau = base[tau - 1].value.upper;
        let mut q = Vec::new();
        for n in 1..=FEEDBACK_N_MAX {
            let qn = feedback_q_n(sys, f, cover, n, &MODE, ex.budgets)?;
            t.check(
                qn.exact,
                || json!({ "tau": tau, "n": n, "reason": "q_n not exact" }),
            );
            let a_nt = if n * tau <= n_max {
                base[n * tau - 1].value.upper
            } else {
                ex.run(sys, f, n * tau)?.value.upper
            };
            let upper = a_tau.powi(n as i32);
            t.check(a_nt <= qn.upper * (1.0 + REL) && qn.upper <= upper * (1.0 + REL), || {
                json!({ "tau": tau, "n": n, "a_n_tau": a_nt, "q_n": qn.upper, "a_tau_pow_n": upper })
            });
            q.push(qn.upper);
        }
        for n in 1..FEEDBACK_N_MAX {
            for m in 1..=FEEDBACK_N_MAX - n {
                t.check(
                    q[n + m - 1] <= q[n - 1] * q[m - 1] * (1.0 + REL),
                    || json!({ "tau": tau, "n": n, "k": m, "q_n_plus_k": q[n + m - 1] }),
                );
            }
        }
    }
    Ok(t.finish(&fx.id))
}

/// `min_i a_i/b_i <= Σa / Σb <= max_i a_i/b_i` on random positive vectors of sizes 2..=10.
pub fn ratio_of_sums_check(trials: usize, seed: u64) -> PropertyEntry {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = Tally::new("ratio_of_sums");
    for trial in 0..trials {
        let len = rng.gen_range(2..=10);
        let a: Vec<f64> = (0..len).map(|_| rng.gen_range(1e-3..10.0)).collect();
        let b: Vec<f64> = (0..len).map(|_| rng.gen_range(1e-3..10.0)).collect();
        let ratio = a.iter().sum::<f64>() / b.iter().sum::<f64>();
        let r: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x / y).collect();
        let lo = r.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = r.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        t.check(
            lo <= ratio * (1.0 + 1e-12) && ratio <= hi * (1.0 + 1e-12),
            || json!({ "trial": trial, "ratio": ratio, "min": lo, "max": hi }),
        );
    }
    t.finish("random-vectors")
}

/// Runs every property on every fixture (in parallel; entries keep fixture order).
pub fn run_property_suite(fixtures: &[Fixture], n_max: usize, seed: u64) -> Result<PropertyReport> {
    let per_fixture: Vec<Result<Vec<PropertyEntry>>> = fixtures
        .par_iter()
        .enumerate()
        .map(|(i, fx)| fixture_battery(fx, i, n_max, seed))
        .collect();
    let mut entries = Vec::new();
    for r in per_fixture {
        entries.extend(r?);
    }
    entries.push(ratio_of_sums_check(1000, seed));
    let count = |s: PropertyStatus| entries.iter().filter(|e| e.status == s).count();
    Ok(PropertyReport {
        n_max,
        seed,
        passed: count(PropertyStatus::Pass),
        failed: count(PropertyStatus::Fail),
        diagnostics: count(PropertyStatus::Diagnostic),
        entries,
    })
}
