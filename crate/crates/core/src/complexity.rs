//! Combinatorial dimensions by exhaustive search on small spaces, the
//! composition bound on the weak VC-major dimension, the `Γ̄_m(d)` factor
//! of the generalization bound, and a Monte-Carlo Rademacher estimate.

use std::collections::{BTreeSet, HashSet};

use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::losses::Loss;
use crate::scenario::{HypothesisClass, Scenario};
use crate::transition::TransitionClass;

pub const NATARAJAN_CAP: usize = 16;
pub const VC_MAJOR_CAP: usize = 12;

/// Above this `min(d, m)` the binomial sum in `Γ̄` is done in log space.
const EXACT_BINOMIAL_TERMS: u64 = 2000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DimensionResult {
    pub value: u64,
    /// Shattered points; `[x]` for Natarajan, `[x, o]` for the weak
    /// VC-major dimension, `[x, y, o]` for the transition dimension.
    pub points: Vec<Vec<usize>>,
    /// Natarajan witness pair `(f0, f1)` restricted to the points.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub functions: Option<(Vec<usize>, Vec<usize>)>,
    /// Loss threshold at which the maximum is attained.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    /// True when the search proved that no larger set is shattered.
    pub exhaustive: bool,
}

impl DimensionResult {
    fn zero(exhaustive: bool) -> Self {
        Self {
            value: 0,
            points: Vec::new(),
            functions: None,
            threshold: None,
            exhaustive,
        }
    }
}

/// `k`-subsets of `0..n` in lexicographic order.
fn for_each_subset(n: usize, k: usize, mut f: impl FnMut(&[usize]) -> bool) -> bool {
    if k > n {
        return false;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        if f(&idx) {
            return true;
        }
        // advance to the next combination
        let mut p = k;
        loop {
            if p == 0 {
                return false;
            }
            p -= 1;
            if idx[p] < n - k + p {
                break;
            }
            if p == 0 {
                return false;
            }
        }
        idx[p] += 1;
        for q in p + 1..k {
            idx[q] = idx[q - 1] + 1;
        }
    }
}

fn floor_log2(v: usize) -> usize {
    if v == 0 {
        0
    } else {
        (usize::BITS - 1 - v.leading_zeros()) as usize
    }
}

/// N-shattering test on `points` for a set of (distinct) tables; returns
/// the witness pair on success.
pub fn natarajan_shattered(tables: &[Vec<usize>], points: &[usize]) -> Option<(Vec<usize>, Vec<usize>)> {
    let patterns: BTreeSet<Vec<usize>> = tables
        .iter()
        .map(|t| points.iter().map(|&x| t[x]).collect())
        .collect();
    let k = points.len();
    if patterns.len() < 1usize << k {
        return None;
    }
    let lookup: HashSet<&Vec<usize>> = patterns.iter().collect();
    let list: Vec<&Vec<usize>> = patterns.iter().collect();
    let mut mix = vec![0usize; k];
    for (a, f0) in list.iter().enumerate() {
        for f1 in &list[a + 1..] {
            if f0.iter().zip(f1.iter()).any(|(p, q)| p == q) {
                continue;
            }
            let all = (0..1u64 << k).all(|bits| {
                for t in 0..k {
                    mix[t] = if bits >> t & 1 == 1 { f1[t] } else { f0[t] };
                }
                lookup.contains(&mix)
            });
            if all {
                return Some(((*f0).clone(), (*f1).clone()));
            }
        }
    }
    None
}

fn distinct_tables(hclass: &HypothesisClass) -> Vec<Vec<usize>> {
    let set: BTreeSet<&Vec<usize>> = hclass.tables().iter().collect();
    set.into_iter().cloned().collect()
}

/// Exhaustive Natarajan dimension over every subset of the instance space.
pub fn natarajan_dimension(hclass: &HypothesisClass, cap: usize) -> Result<DimensionResult> {
    let n = hclass.instances();
    if n > cap {
        return Err(Error::CapExceeded {
            what: "instances for an exhaustive Natarajan search (use the randomized search)",
            size: n,
            cap,
        });
    }
    let tables = distinct_tables(hclass);
    let mut best = DimensionResult::zero(true);
    // a shattered k-set needs 2^k distinct restrictions
    let kmax = floor_log2(tables.len()).min(n);
    for k in 1..=kmax {
        let mut found = None;
        for_each_subset(n, k, |pts| {
            if let Some(pair) = natarajan_shattered(&tables, pts) {
                found = Some((pts.to_vec(), pair));
                true
            } else {
                false
            }
        });
        match found {
            Some((pts, pair)) => {
                best = DimensionResult {
                    value: k as u64,
                    points: pts.into_iter().map(|x| vec![x]).collect(),
                    functions: Some(pair),
                    threshold: None,
                    exhaustive: true,
                };
            }
            // subsets of shattered sets are shattered, so the search can stop
            None => break,
        }
    }
    Ok(best)
}

/// Certified lower bound from `samples` random subsets per size.
pub fn natarajan_dimension_randomized(hclass: &HypothesisClass, samples: usize, seed: u64) -> DimensionResult {
    let n = hclass.instances();
    let tables = distinct_tables(hclass);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = DimensionResult::zero(false);
    for k in 1..=floor_log2(tables.len()).min(n) {
        let mut hit = None;
        for _ in 0..samples {
            let mut pts: Vec<usize> = rand::seq::index::sample(&mut rng, n, k).into_vec();
            pts.sort_unstable();
            if let Some(pair) = natarajan_shattered(&tables, &pts) {
                hit = Some((pts, pair));
                break;
            }
        }
        match hit {
            Some((pts, pair)) => {
                best = DimensionResult {
                    value: k as u64,
                    points: pts.into_iter().map(|x| vec![x]).collect(),
                    functions: Some(pair),
                    threshold: None,
                    exhaustive: false,
                };
            }
            None => break,
        }
    }
    best
}

/// VC dimension of a set of binary functions over at most 64 points given
/// as bitmasks; returns the value and the first shattered set found.
fn vc_of_masks(masks: &BTreeSet<u64>, npoints: usize) -> (usize, Vec<usize>) {
    let mut best = (0, Vec::new());
    let kmax = floor_log2(masks.len()).min(npoints);
    let mut seen: HashSet<u64> = HashSet::new();
    for k in 1..=kmax {
        let mut found = None;
        for_each_subset(npoints, k, |pts| {
            let sel: u64 = pts.iter().map(|&p| 1u64 << p).sum();
            seen.clear();
            for &m in masks {
                seen.insert(m & sel);
                if seen.len() == 1 << k {
                    found = Some(pts.to_vec());
                    return true;
                }
            }
            false
        });
        match found {
            Some(pts) => best = (k, pts),
            None => break,
        }
    }
    best
}

/// `max_u VC({1{v > u}})` over a family of real vectors on common points.
/// Thresholds range over the distinct finite values; the first `u`
/// attaining the maximum is reported.
fn vc_major_of(points: Vec<Vec<usize>>, vectors: &[Vec<f64>], cap: usize, what: &'static str) -> Result<DimensionResult> {
    let p = points.len();
    if p > cap {
        return Err(Error::CapExceeded { what, size: p, cap });
    }
    let mut values: Vec<f64> = vectors.iter().flatten().copied().filter(|v| v.is_finite()).collect();
    values.sort_by(f64::total_cmp);
    values.dedup();
    let mut best = DimensionResult::zero(true);
    for &u in &values {
        let masks: BTreeSet<u64> = vectors
            .iter()
            .map(|v| {
                v.iter()
                    .enumerate()
                    .filter(|(_, &l)| l > u)
                    .map(|(k, _)| 1u64 << k)
                    .sum()
            })
            .collect();
        if floor_log2(masks.len()) as u64 <= best.value {
            continue;
        }
        let (k, pts) = vc_of_masks(&masks, p);
        if k as u64 > best.value {
            best = DimensionResult {
                value: k as u64,
                points: pts.into_iter().map(|q| points[q].clone()).collect(),
                functions: None,
                threshold: Some(u),
                exhaustive: true,
            };
        }
    }
    Ok(best)
}

/// Loss vectors of every `(h, T)` over the points `(x, o)` in row-major
/// order.
pub fn loss_vectors(hclass: &HypothesisClass, tclass: &TransitionClass, loss: &Loss) -> Vec<Vec<f64>> {
    let n = hclass.instances();
    let s = tclass.outcomes().size();
    let mut out = Vec::with_capacity(hclass.len() * tclass.len());
    for h in hclass.tables() {
        for t in tclass.members() {
            let mut v = Vec::with_capacity(n * s);
            for x in 0..n {
                for o in 0..s {
                    v.push(loss.eval(h[x], t, x, o));
                }
            }
            out.push(v);
        }
    }
    out
}

/// Weak VC-major dimension of `{(x, o) ↦ ℓ(h(x), T, (x, o))}` by exhaustive
/// shattering over `X × O`, thresholding strictly above each realized
/// finite loss value.
pub fn weak_vc_major_dimension(
    hclass: &HypothesisClass,
    tclass: &TransitionClass,
    loss: &Loss,
    cap: usize,
) -> Result<DimensionResult> {
    let n = hclass.instances();
    let s = tclass.outcomes().size();
    let points = (0..n).flat_map(|x| (0..s).map(move |o| vec![x, o])).collect();
    vc_major_of(points, &loss_vectors(hclass, tclass, loss), cap, "points in X x O for an exhaustive weak VC-major search")
}

/// Weak VC-major dimension of the transition-side loss class
/// `{(x, y, o) ↦ ℓ(y, T, (x, o)) : T}` over `X × Y × O`.
pub fn transition_dimension(tclass: &TransitionClass, instances: usize, loss: &Loss, cap: usize) -> Result<DimensionResult> {
    let c = tclass.labels().size();
    let s = tclass.outcomes().size();
    let mut points = Vec::with_capacity(instances * c * s);
    for x in 0..instances {
        for y in 0..c {
            for o in 0..s {
                points.push(vec![x, y, o]);
            }
        }
    }
    let vectors: Vec<Vec<f64>> = tclass
        .members()
        .iter()
        .map(|t| points.iter().map(|p| loss.eval(p[1], t, p[0], p[2])).collect())
        .collect();
    vc_major_of(points, &vectors, cap, "points in X x Y x O for an exhaustive transition dimension search")
}

/// `ceil(2((d_h + d_t) ln(6(d_h + d_t)) + 2 d_h ln c))`, zero when
/// `d_h + d_t = 0`.
pub fn dimension_bound(d_h: u64, d_t: u64, c: usize) -> Result<u64> {
    if c < 2 {
        return Err(Error::BadParams(format!("c = {c}; the bound needs at least two labels")));
    }
    let sum = d_h + d_t;
    if sum == 0 {
        return Ok(0);
    }
    let sum = sum as f64;
    let v = 2.0 * (sum * (6.0 * sum).ln() + 2.0 * d_h as f64 * (c as f64).ln());
    Ok(v.ceil() as u64)
}

fn ln_big(v: &BigUint) -> f64 {
    let bits = v.bits();
    if bits <= 1000 {
        return to_f64(v).ln();
    }
    let shift = bits - 64;
    to_f64(&(v >> shift)).ln() + shift as f64 * std::f64::consts::LN_2
}

fn to_f64(v: &BigUint) -> f64 {
    v.to_u64_digits()
        .iter()
        .rev()
        .fold(0.0, |acc, &digit| acc * 18_446_744_073_709_551_616.0 + digit as f64)
}

/// `Γ̄_m(d) = ln(2 Σ_{j ≤ min(d, m)} C(m, j))`.
pub fn gamma_bar(m: u64, d: u64) -> Result<f64> {
    if m == 0 {
        return Err(Error::BadParams("m must be at least 1".into()));
    }
    let k = d.min(m);
    if k <= EXACT_BINOMIAL_TERMS {
        let mut term = BigUint::from(1u32);
        let mut sum = term.clone();
        for j in 1..=k {
            term = term * BigUint::from(m - j + 1) / BigUint::from(j);
            sum += &term;
        }
        return Ok(ln_big(&(sum * 2u32)));
    }
    // log-sum-exp with a compensated sum of the scaled terms
    let lf = |j: u64| ln_gamma(m as f64 + 1.0) - ln_gamma(j as f64 + 1.0) - ln_gamma((m - j) as f64 + 1.0);
    let logs: Vec<f64> = (0..=k).map(lf).collect();
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (mut acc, mut comp) = (0.0f64, 0.0f64);
    for l in &logs {
        let v = (l - top).exp();
        let t = acc + v;
        comp += if acc.abs() >= v.abs() { (acc - t) + v } else { (v - t) + acc };
        acc = t;
    }
    Ok(std::f64::consts::LN_2 + top + (acc + comp).ln())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DimensionSource {
    /// Exhaustive weak VC-major search.
    Exhaustive,
    /// Composition bound from the Natarajan and transition dimensions.
    CompositionBound,
    /// `floor(log2(|H| |T|))`, valid for any finite class.
    Cardinality,
}

/// A value of `d` usable in the bound: exact when `X × O` is small, else
/// the smaller of the available upper bounds.
pub fn dimension_for_bound(scn: &Scenario) -> Result<(u64, DimensionSource)> {
    let (n, c, s) = (scn.n(), scn.c(), scn.s());
    if n * s <= VC_MAJOR_CAP {
        let r = weak_vc_major_dimension(scn.hclass(), scn.tclass(), scn.loss(), VC_MAJOR_CAP)?;
        return Ok((r.value, DimensionSource::Exhaustive));
    }
    let count = scn.hclass().len().saturating_mul(scn.tclass().len());
    let mut best = (floor_log2(count) as u64, DimensionSource::Cardinality);
    if n <= NATARAJAN_CAP && n * c * s <= VC_MAJOR_CAP {
        let d_h = natarajan_dimension(scn.hclass(), NATARAJAN_CAP)?.value;
        let d_t = transition_dimension(scn.tclass(), n, scn.loss(), VC_MAJOR_CAP)?.value;
        let v = dimension_bound(d_h, d_t, c)?;
        if v < best.0 {
            best = (v, DimensionSource::CompositionBound);
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RademacherEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub trials: u64,
}

/// Monte-Carlo estimate of `E (1/m) sup_{h,T} |Σ_k ε_k ℓ(h(x_k), T, (x_k, o_k))|`
/// with the sup taken by full grid scan. Trial `k` draws its sample with
/// seed `seed + k` and its signs from a second stream of the same seed.
pub fn rademacher_estimate(scn: &Scenario, m: usize, mc_trials: u64, seed: u64) -> Result<RademacherEstimate> {
    if mc_trials < 2 {
        return Err(Error::BadParams("at least two Monte-Carlo trials are needed".into()));
    }
    scn.loss_ceiling()?;
    let (n, c, s) = (scn.n(), scn.c(), scn.s());
    let mut values = Vec::with_capacity(mc_trials as usize);
    for trial in 0..mc_trials {
        let trial_seed = seed.wrapping_add(trial);
        let data = scn.sample_dataset(m, trial_seed)?;
        let mut rng = ChaCha8Rng::seed_from_u64(trial_seed);
        rng.set_stream(1);
        let mut weights = vec![0i64; n * s];
        for &(x, o) in data.samples() {
            weights[x * s + o] += if rng.gen::<bool>() { 1 } else { -1 };
        }
        let mut sup: f64 = 0.0;
        for t in scn.tclass().members() {
            let mut table = vec![0.0; n * c];
            for x in 0..n {
                for label in 0..c {
                    let mut acc = 0.0;
                    for o in 0..s {
                        let w = weights[x * s + o];
                        if w != 0 {
                            acc += w as f64 * scn.loss().eval(label, t, x, o);
                        }
                    }
                    table[x * c + label] = acc;
                }
            }
            for h in scn.hclass().tables() {
                let total: f64 = (0..n).map(|x| table[x * c + h[x]]).sum();
                sup = sup.max(total.abs());
            }
        }
        values.push(sup / m as f64);
    }
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0);
    Ok(RademacherEstimate {
        mean,
        std_error: (var / k).sqrt(),
        trials: mc_trials,
    })
}

/// `b sqrt(2Γ̄_m(d)/m) + 4bΓ̄_m(d)/m`, the bound the estimate is checked
/// against.
pub fn rademacher_bound(b: f64, d: u64, m: u64) -> Result<f64> {
    let g = gamma_bar(m, d)?;
    let mf = m as f64;
    Ok(b * (2.0 * g / mf).sqrt() + 4.0 * b * g / mf)
}
