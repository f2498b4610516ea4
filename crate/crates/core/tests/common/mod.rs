//! Random instance generators and naive reference implementations shared by
//! the integration tests. The references deliberately avoid the library's
//! own helpers (grouped sums, bitmask searches, pruning).

#![allow(dead_code)]

use std::collections::BTreeSet;

use indsup::scenario::{Dataset, HypothesisClass, Labeling, Scenario};
use indsup::spaces::{Distribution, FiniteSpace};
use indsup::transition::{TransitionClass, TransitionHypothesis};
use indsup::{ConcentrationSets, Loss};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A probability vector; with `zeros`, entries are dropped to zero with
/// probability 1/4 (at least one stays positive).
pub fn random_probs(rng: &mut ChaCha8Rng, s: usize, zeros: bool) -> Vec<f64> {
    loop {
        let w: Vec<f64> = (0..s)
            .map(|_| {
                if zeros && rng.gen_bool(0.25) {
                    0.0
                } else {
                    rng.gen_range(0.01..1.0)
                }
            })
            .collect();
        let total: f64 = w.iter().sum();
        if total > 0.0 {
            return w.iter().map(|v| v / total).collect();
        }
    }
}

pub fn random_matrix(rng: &mut ChaCha8Rng, c: usize, s: usize, zeros: bool) -> Vec<Vec<f64>> {
    (0..c).map(|_| random_probs(rng, s, zeros)).collect()
}

pub fn constant_class(rng: &mut ChaCha8Rng, c: usize, s: usize, members: usize, zeros: bool) -> TransitionClass {
    let members = (0..members)
        .map(|_| TransitionHypothesis::constant(&random_matrix(rng, c, s, zeros)).unwrap())
        .collect();
    TransitionClass::new(
        FiniteSpace::indexed("y", c).unwrap(),
        FiniteSpace::indexed("o", s).unwrap(),
        members,
        None,
    )
    .unwrap()
}

pub fn random_table(rng: &mut ChaCha8Rng, n: usize, c: usize) -> Vec<usize> {
    (0..n).map(|_| rng.gen_range(0..c)).collect()
}

/// Explicit class of up to `max` random tables that always contains `h0`.
pub fn random_hclass(rng: &mut ChaCha8Rng, n: usize, c: usize, h0: &[usize], max: usize) -> HypothesisClass {
    if rng.gen_bool(0.3) {
        return HypothesisClass::all_functions(n, c).unwrap();
    }
    let k = rng.gen_range(1..=max);
    let mut tables = vec![h0.to_vec()];
    for _ in 1..k {
        tables.push(random_table(rng, n, c));
    }
    tables.shuffle(rng);
    HypothesisClass::explicit(tables, n, c).unwrap()
}

/// Instance weights, sometimes with zero-mass instances.
pub fn random_dx(rng: &mut ChaCha8Rng, n: usize) -> Distribution {
    Distribution::from_weights(&random_probs(rng, n, true)).unwrap()
}

pub fn labeling(rng: &mut ChaCha8Rng, n: usize, c: usize, h0: Vec<usize>, hclass: HypothesisClass) -> Labeling {
    Labeling::new(
        FiniteSpace::indexed("x", n).unwrap(),
        FiniteSpace::indexed("y", c).unwrap(),
        random_dx(rng, n),
        h0,
        hclass,
    )
    .unwrap()
}

pub fn random_sets(rng: &mut ChaCha8Rng, c: usize, s: usize) -> ConcentrationSets {
    let sets: Vec<Vec<usize>> = (0..c)
        .map(|_| (0..s).filter(|_| rng.gen_bool(0.5)).collect())
        .collect();
    ConcentrationSets::new(&sets, s).unwrap()
}

/// A small random scenario with constant transitions.
pub struct TinySpec {
    pub n: std::ops::RangeInclusive<usize>,
    pub c: std::ops::RangeInclusive<usize>,
    pub s: std::ops::RangeInclusive<usize>,
    pub t: std::ops::RangeInclusive<usize>,
    pub max_tables: usize,
    pub all_functions: bool,
    pub zeros: bool,
}

pub fn random_scenario(rng: &mut ChaCha8Rng, spec: &TinySpec) -> Scenario {
    let n = rng.gen_range(spec.n.clone());
    let c = rng.gen_range(spec.c.clone());
    let s = rng.gen_range(spec.s.clone());
    let nt = rng.gen_range(spec.t.clone());
    let h0 = random_table(rng, n, c);
    let hclass = if spec.all_functions {
        HypothesisClass::all_functions(n, c).unwrap()
    } else {
        random_hclass(rng, n, c, &h0, spec.max_tables)
    };
    let lab = labeling(rng, n, c, h0, hclass);
    let tclass = constant_class(rng, c, s, nt, spec.zeros);
    let t0 = rng.gen_range(0..nt);
    let loss = if rng.gen_bool(0.5) {
        Loss::CrossEntropy
    } else {
        Loss::Concentration(random_sets(rng, c, s))
    };
    Scenario::with_member(lab, tclass, t0, loss).unwrap()
}

// ------------------------------------------------------------ references

pub fn naive_kl(p: &[f64], q: &[f64]) -> f64 {
    let mut total = 0.0;
    for (a, b) in p.iter().zip(q) {
        if *a == 0.0 {
            continue;
        }
        if *b == 0.0 {
            return f64::INFINITY;
        }
        total += a * (a / b).ln();
    }
    total.max(0.0)
}

pub fn naive_loss(loss: &Loss, label: usize, t: &TransitionHypothesis, x: usize, o: usize) -> f64 {
    match loss {
        Loss::CrossEntropy => {
            let p = t.row(x, label).unwrap().probs()[o];
            if p == 0.0 {
                f64::INFINITY
            } else {
                -p.ln()
            }
        }
        Loss::Concentration(sets) => {
            if sets.members(label).contains(&o) {
                0.0
            } else {
                1.0
            }
        }
    }
}

/// Sample-by-sample average in draw order.
pub fn naive_empirical_risk(h: &[usize], t: &TransitionHypothesis, data: &Dataset, loss: &Loss) -> f64 {
    let total: f64 = data
        .samples()
        .iter()
        .map(|&(x, o)| naive_loss(loss, h[x], t, x, o))
        .sum();
    total / data.m() as f64
}

/// Minimum empirical risk over `H × T` and every pair attaining it.
pub fn naive_erm(scn: &Scenario, data: &Dataset) -> (f64, Vec<(usize, usize)>, Vec<Vec<f64>>) {
    let risks: Vec<Vec<f64>> = scn
        .hclass()
        .tables()
        .iter()
        .map(|h| {
            scn.tclass()
                .members()
                .iter()
                .map(|t| naive_empirical_risk(h, t, data, scn.loss()))
                .collect()
        })
        .collect();
    let min = risks.iter().flatten().copied().fold(f64::INFINITY, f64::min);
    let mut arg = Vec::new();
    for (hk, row) in risks.iter().enumerate() {
        for (tk, r) in row.iter().enumerate() {
            if close(*r, min, 1e-12) {
                arg.push((hk, tk));
            }
        }
    }
    (min, arg, risks)
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    if a.is_infinite() || b.is_infinite() {
        return a == b;
    }
    (a - b).abs() <= tol
}

fn all_assignments(k: usize, c: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..k {
        out = out
            .into_iter()
            .flat_map(|p| {
                (0..c).map(move |v| {
                    let mut q = p.clone();
                    q.push(v);
                    q
                })
            })
            .collect();
    }
    out
}

/// Natarajan dimension by trying every subset and every witness pair.
pub fn naive_natarajan(tables: &[Vec<usize>], n: usize, c: usize) -> usize {
    let mut best = 0;
    for mask in 0u32..1 << n {
        let pts: Vec<usize> = (0..n).filter(|x| mask >> x & 1 == 1).collect();
        let k = pts.len();
        if k <= best {
            continue;
        }
        let seen: BTreeSet<Vec<usize>> = tables
            .iter()
            .map(|t| pts.iter().map(|&x| t[x]).collect())
            .collect();
        let candidates = all_assignments(k, c);
        let shattered = candidates.iter().any(|f0| {
            candidates.iter().any(|f1| {
                (0..k).all(|q| f0[q] != f1[q])
                    && (0..1u32 << k).all(|bits| {
                        let mix: Vec<usize> = (0..k)
                            .map(|q| if bits >> q & 1 == 1 { f1[q] } else { f0[q] })
                            .collect();
                        seen.contains(&mix)
                    })
            })
        });
        if shattered {
            best = k;
        }
    }
    best
}

/// Plain VC dimension of a family of 0/1 vectors.
pub fn naive_vc(vectors: &[Vec<bool>]) -> usize {
    let p = vectors.first().map_or(0, Vec::len);
    let mut best = 0;
    for mask in 0u32..1 << p {
        let pts: Vec<usize> = (0..p).filter(|q| mask >> q & 1 == 1).collect();
        if pts.len() <= best {
            continue;
        }
        let patterns: BTreeSet<Vec<bool>> = vectors
            .iter()
            .map(|v| pts.iter().map(|&q| v[q]).collect())
            .collect();
        if patterns.len() == 1 << pts.len() {
            best = pts.len();
        }
    }
    best
}

/// Weak VC-major dimension with the thresholds taken over every realized
/// loss value plus one below all of them.
pub fn naive_weak_vc_major(scn_h: &HypothesisClass, tclass: &TransitionClass, loss: &Loss) -> usize {
    let n = scn_h.instances();
    let s = tclass.outcomes().size();
    let mut vectors = Vec::new();
    for h in scn_h.tables() {
        for t in tclass.members() {
            let mut v = Vec::new();
            for x in 0..n {
                for o in 0..s {
                    v.push(naive_loss(loss, h[x], t, x, o));
                }
            }
            vectors.push(v);
        }
    }
    let mut thresholds: Vec<f64> = vectors.iter().flatten().copied().filter(|v| v.is_finite()).collect();
    thresholds.push(f64::NEG_INFINITY);
    thresholds
        .iter()
        .map(|&u| {
            let sets: Vec<Vec<bool>> = vectors.iter().map(|v| v.iter().map(|&l| l > u).collect()).collect();
            naive_vc(&sets)
        })
        .max()
        .unwrap_or(0)
}

/// `min_{x, T, T'} KL(T(x)_i || T'(x)_j)` over the constrained instances,
/// straight from the definition.
pub fn naive_separation(scn: &Scenario) -> f64 {
    let lab = scn.labeling();
    let mut best = f64::INFINITY;
    for x in 0..scn.n() {
        if lab.dx().prob(x) <= 0.0 {
            continue;
        }
        let i = lab.h0()[x];
        let reachable: BTreeSet<usize> = lab.hclass().tables().iter().map(|h| h[x]).collect();
        for &j in reachable.iter().filter(|&&j| j != i) {
            for a in scn.tclass().members() {
                for b in scn.tclass().members() {
                    let v = naive_kl(a.row(x, i).unwrap().probs(), b.row(x, j).unwrap().probs());
                    best = best.min(v);
                }
            }
        }
    }
    best
}

/// Scenario whose transitions lean towards random concentration sets, so
/// that the concentration degree is often non-negative. Returns the sets.
pub fn planted_concentration(rng: &mut ChaCha8Rng, spec: &TinySpec) -> (Scenario, ConcentrationSets) {
    let n = rng.gen_range(spec.n.clone());
    let c = rng.gen_range(spec.c.clone());
    let s = rng.gen_range(spec.s.clone()).max(c);
    let nt = rng.gen_range(spec.t.clone());
    let mut outcomes: Vec<usize> = (0..s).collect();
    outcomes.shuffle(rng);
    let sets: Vec<Vec<usize>> = (0..c)
        .map(|i| {
            let mut set = vec![outcomes[i]];
            set.extend((c..s).filter(|_| rng.gen_bool(0.3)).map(|k| outcomes[k]));
            set
        })
        .collect();
    let members = (0..nt)
        .map(|_| {
            let lean = rng.gen_range(0.2..0.95);
            let rows: Vec<Vec<f64>> = sets
                .iter()
                .map(|set| {
                    let noise = random_probs(rng, s, spec.zeros);
                    (0..s)
                        .map(|o| {
                            let planted = if set.contains(&o) { 1.0 / set.len() as f64 } else { 0.0 };
                            lean * planted + (1.0 - lean) * noise[o]
                        })
                        .collect()
                })
                .collect();
            TransitionHypothesis::constant(&rows).unwrap()
        })
        .collect();
    let tclass = TransitionClass::new(
        FiniteSpace::indexed("y", c).unwrap(),
        FiniteSpace::indexed("o", s).unwrap(),
        members,
        None,
    )
    .unwrap();
    let h0 = random_table(rng, n, c);
    let lab = labeling(rng, n, c, h0, HypothesisClass::all_functions(n, c).unwrap());
    let sets = ConcentrationSets::new(&sets, s).unwrap();
    let t0 = rng.gen_range(0..nt);
    (
        Scenario::with_member(lab, tclass, t0, Loss::Concentration(sets.clone())).unwrap(),
        sets,
    )
}
