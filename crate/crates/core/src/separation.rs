//! Separation-theoretic quantities computed exactly over finite classes:
//! the separation degree and its pairwise version, the concentration
//! degree, evidence lower bounds, the identifiability level, and the
//! witness construction showing that zero separation defeats learning.
//!
//! In the realizable deterministic setting `p(x, y_i) > 0` is read as
//! `D_X(x) > 0 ∧ h0(x) = i`. Every infimum is a minimum over a finite
//! enumeration; ties go to the lexicographically smallest witness.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::losses::{ConcentrationSets, Loss};
use crate::scenario::{HypothesisClass, Labeling, Scenario};
use crate::spaces::{kl, serialize_extended, Distribution, DivergenceValue};
use crate::transition::TransitionClass;

/// Note attached to every separation report about how the constraint set
/// is read.
pub const CONSTRAINT_SET_NOTE: &str =
    "constraint set: D_X(x) > 0, i = h0(x), j != i, y_j reachable at x (reachability also applied when T is known)";

/// Note attached when the transition class samples a continuous family.
pub const GRID_NOTE: &str =
    "transition class is a finite grid: reported infima are exact on the grid and upper bounds for the continuous family";

/// `H(x) = {h(x) : h ∈ H}`.
pub fn reachable_labels(hclass: &HypothesisClass, x: usize) -> BTreeSet<usize> {
    hclass.tables().iter().map(|t| t[x]).collect()
}

/// Where a separation infimum is attained: instance, true label, confused
/// label, and the class members supplying the two rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct SeparationWitness {
    pub x: usize,
    pub i: usize,
    pub j: usize,
    pub t_i: usize,
    pub t_j: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairwiseSeparation {
    pub from: usize,
    pub to: usize,
    pub value: DivergenceValue,
    pub witness: Option<SeparationWitness>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeparationReport {
    pub gamma: DivergenceValue,
    pub witness: Option<SeparationWitness>,
    /// Every ordered pair `i ≠ j`, row-major.
    pub pairwise: Vec<PairwiseSeparation>,
    pub grid_caveat: bool,
    pub notes: Vec<String>,
}

impl SeparationReport {
    pub fn pair(&self, i: usize, j: usize) -> Option<&PairwiseSeparation> {
        self.pairwise.iter().find(|p| p.from == i && p.to == j)
    }
}

/// Per-instance pairwise separation: `min KL(D_i ‖ D_j)` over the two
/// induced families at `x`, with the first minimizing `(t_i, t_j)`.
pub(crate) fn family_kl(class: &TransitionClass, x: usize, i: usize, j: usize) -> (DivergenceValue, usize, usize) {
    let members = class.members();
    let mut best = (DivergenceValue::INFINITE, 0, 0);
    let mut found = false;
    for (ti, a) in members.iter().enumerate() {
        let di = a.r(x, i);
        for (tj, b) in members.iter().enumerate() {
            let v = kl(di, b.r(x, j)).expect("rows of one class share a space");
            if !found || v < best.0 {
                best = (v, ti, tj);
                found = true;
            }
        }
    }
    best
}

/// `γ_{i→j}` for an arbitrary class over a labeling.
pub fn pairwise_separation_for(
    labeling: &Labeling,
    class: &TransitionClass,
    i: usize,
    j: usize,
) -> Result<PairwiseSeparation> {
    let c = labeling.c();
    if i == j {
        return Err(Error::SameLabel(i));
    }
    for l in [i, j] {
        if l >= c {
            return Err(Error::IndexOutOfRange {
                what: "label",
                index: l,
                size: c,
            });
        }
    }
    let mut value = DivergenceValue::INFINITE;
    let mut witness = None;
    for x in labeling.support() {
        if labeling.h0()[x] != i || !labeling.hclass().reachable(x)[j] {
            continue;
        }
        let (v, t_i, t_j) = family_kl(class, x, i, j);
        if witness.is_none() || v < value {
            value = v;
            witness = Some(SeparationWitness { x, i, j, t_i, t_j });
        }
    }
    Ok(PairwiseSeparation {
        from: i,
        to: j,
        value,
        witness,
    })
}

/// `γ_{i→j}` on the scenario's own class.
pub fn pairwise_separation(scn: &Scenario, i: usize, j: usize) -> Result<PairwiseSeparation> {
    pairwise_separation_for(scn.labeling(), scn.tclass(), i, j)
}

/// `γ` and the full pairwise table for an arbitrary class.
pub fn separation_degree_for(labeling: &Labeling, class: &TransitionClass) -> SeparationReport {
    let c = labeling.c();
    let pairs: Vec<(usize, usize)> = (0..c)
        .flat_map(|i| (0..c).filter(move |&j| j != i).map(move |j| (i, j)))
        .collect();
    let pairwise: Vec<PairwiseSeparation> = pairs
        .par_iter()
        .map(|&(i, j)| pairwise_separation_for(labeling, class, i, j).expect("valid pair"))
        .collect();
    let mut gamma = DivergenceValue::INFINITE;
    let mut witness: Option<SeparationWitness> = None;
    for p in &pairwise {
        let Some(w) = p.witness else { continue };
        let better = match witness {
            None => true,
            Some(cur) => p.value < gamma || (p.value == gamma && w < cur),
        };
        if better {
            gamma = p.value;
            witness = Some(w);
        }
    }
    let grid_caveat = class.grid_derived();
    let mut notes = vec![CONSTRAINT_SET_NOTE.to_string()];
    if grid_caveat {
        notes.push(GRID_NOTE.to_string());
    }
    SeparationReport {
        gamma,
        witness,
        pairwise,
        grid_caveat,
        notes,
    }
}

/// `separation_degree`: `γ` for the scenario.
pub fn separation_degree(scn: &Scenario) -> SeparationReport {
    separation_degree_for(scn.labeling(), scn.tclass())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ConcentrationWitness {
    pub x: usize,
    pub i: usize,
    pub j: usize,
    pub t: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcentrationReport {
    /// May be negative; `+inf` when there are no `(x, i, j)` triples.
    #[serde(serialize_with = "serialize_extended")]
    pub gamma_c: f64,
    pub witness: Option<ConcentrationWitness>,
}

/// `γ_C = min P_T(O ∈ S_i | x, y_i) − P_T(O ∈ S_j | x, y_i)` over members
/// `T`, instances with `D_X(x) > 0`, and all ordered label pairs.
pub fn concentration_degree(scn: &Scenario, sets: &ConcentrationSets) -> Result<ConcentrationReport> {
    sets.check_shape(scn.c(), scn.s())?;
    let c = scn.c();
    let mut gamma_c = f64::INFINITY;
    let mut witness = None;
    for x in scn.labeling().support() {
        for i in 0..c {
            for j in (0..c).filter(|&j| j != i) {
                for (t, member) in scn.tclass().members().iter().enumerate() {
                    let row = member.r(x, i);
                    let v = row.mass_of(sets.mask(i)) - row.mass_of(sets.mask(j));
                    if witness.is_none() || v < gamma_c {
                        gamma_c = v;
                        witness = Some(ConcentrationWitness { x, i, j, t });
                    }
                }
            }
        }
    }
    Ok(ConcentrationReport { gamma_c, witness })
}

/// Evidence vectors `u_ij ∈ R^s` keyed by ordered label pair.
pub type EvidenceTable = BTreeMap<(usize, usize), Vec<f64>>;

/// `u_ij = 1_{S_i} − 1_{S_j}` for every ordered pair.
pub fn concentration_evidence(sets: &ConcentrationSets) -> EvidenceTable {
    let c = sets.labels();
    let mut table = EvidenceTable::new();
    for i in 0..c {
        for j in (0..c).filter(|&j| j != i) {
            let u = sets
                .mask(i)
                .iter()
                .zip(sets.mask(j))
                .map(|(&a, &b)| f64::from(u8::from(a)) - f64::from(u8::from(b)))
                .collect();
            table.insert((i, j), u);
        }
    }
    table
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvidencePair {
    pub i: usize,
    pub j: usize,
    /// `min ⟨u, D_i⟩ − ⟨u, D_j⟩` over the constraint set.
    pub gamma_ij: f64,
    /// `‖u_ij‖_∞`.
    pub lipschitz: f64,
    /// Instance attaining `gamma_ij`.
    pub x: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvidenceReport {
    pub pairs: Vec<EvidencePair>,
    /// `½ min (γ_ij / L_ij)²` when every `γ_ij > 0`; `+inf` when no pair
    /// is constrained.
    #[serde(serialize_with = "serialize_optional_extended")]
    pub bound: Option<f64>,
    /// First pair with `γ_ij ≤ 0`.
    pub failure: Option<EvidencePair>,
}

fn serialize_optional_extended<S: serde::Serializer>(v: &Option<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(v) => serialize_extended(v, s),
        None => s.serialize_none(),
    }
}

/// Lower bound on `γ` from linear evidence functionals.
pub fn evidence_bound(scn: &Scenario, evidence: &EvidenceTable) -> Result<EvidenceReport> {
    evidence_bound_for(scn.labeling(), scn.tclass(), evidence)
}

pub fn evidence_bound_for(labeling: &Labeling, class: &TransitionClass, evidence: &EvidenceTable) -> Result<EvidenceReport> {
    let c = labeling.c();
    let s = class.outcomes().size();
    let mut pairs = Vec::new();
    for i in 0..c {
        for j in (0..c).filter(|&j| j != i) {
            let xs: Vec<usize> = labeling
                .support()
                .filter(|&x| labeling.h0()[x] == i && labeling.hclass().reachable(x)[j])
                .collect();
            if xs.is_empty() {
                continue;
            }
            let u = evidence.get(&(i, j)).ok_or(Error::MissingEvidence { i, j })?;
            if u.len() != s {
                return Err(Error::LengthMismatch {
                    expected: s,
                    got: u.len(),
                });
            }
            let lipschitz = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if lipschitz == 0.0 {
                return Err(Error::ZeroVector { i, j });
            }
            let mut best: Option<(f64, usize)> = None;
            for &x in &xs {
                let low_i = class
                    .members()
                    .iter()
                    .map(|t| t.r(x, i).dot(u))
                    .fold(f64::INFINITY, f64::min);
                let high_j = class
                    .members()
                    .iter()
                    .map(|t| t.r(x, j).dot(u))
                    .fold(f64::NEG_INFINITY, f64::max);
                let gap = low_i - high_j;
                if best.is_none_or(|(g, _)| gap < g) {
                    best = Some((gap, x));
                }
            }
            let (gamma_ij, x) = best.expect("non-empty constraint set");
            pairs.push(EvidencePair {
                i,
                j,
                gamma_ij,
                lipschitz,
                x,
            });
        }
    }
    let failure = pairs.iter().find(|p| p.gamma_ij <= 0.0).cloned();
    let bound = if failure.is_some() {
        None
    } else {
        Some(
            pairs
                .iter()
                .map(|p| 0.5 * (p.gamma_ij / p.lipschitz).powi(2))
                .fold(f64::INFINITY, f64::min),
        )
    };
    Ok(EvidenceReport { pairs, bound, failure })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EtaReport {
    #[serde(serialize_with = "serialize_extended")]
    pub eta: f64,
    pub witness_h: usize,
    pub witness_table: Vec<usize>,
    pub witness_t: usize,
    #[serde(serialize_with = "serialize_extended")]
    pub numerator: f64,
    pub denominator: f64,
}

/// `η = min_{h: R(h) > 0, T} (R_O(T∘h) − min_T R_O(T∘h0)) / R(h)` by full
/// enumeration of `H × T`.
pub fn identifiability_level(scn: &Scenario) -> Result<EtaReport> {
    let (n, c) = (scn.n(), scn.c());
    let table = scn.expected_losses();
    let support: Vec<usize> = scn.labeling().support().collect();
    let dx = scn.dx();
    let risk = |h: &[usize], t: usize| -> f64 {
        let mut total = 0.0;
        for &x in &support {
            total += dx.prob(x) * table[(t * n + x) * c + h[x]];
        }
        total
    };
    let nt = scn.tclass().len();
    let baseline = (0..nt).map(|t| risk(scn.h0(), t)).fold(f64::INFINITY, f64::min);

    let mut best: Option<EtaReport> = None;
    for (hk, h) in scn.hclass().tables().iter().enumerate() {
        let r = scn.classification_risk(h)?;
        if r <= 0.0 {
            continue;
        }
        for t in 0..nt {
            let numerator = risk(h, t) - baseline;
            let eta = numerator / r;
            if best.as_ref().is_none_or(|b| eta < b.eta) {
                best = Some(EtaReport {
                    eta,
                    witness_h: hk,
                    witness_table: h.clone(),
                    witness_t: t,
                    numerator,
                    denominator: r,
                });
            }
        }
    }
    best.ok_or(Error::NoWrongHypothesis)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConsistencyReport {
    /// `h0` attains the minimum annotation risk over `H × T`.
    pub holds: bool,
    pub argmin_h: usize,
    pub argmin_t: usize,
    #[serde(serialize_with = "serialize_extended")]
    pub min_risk: f64,
    #[serde(serialize_with = "serialize_extended")]
    pub h0_min_risk: f64,
}

/// Grid check that `h0 ∈ argmin_{h, T} R_O(T∘h)`, tolerance 1e-12.
pub fn consistency(scn: &Scenario) -> Result<ConsistencyReport> {
    let mut best = (f64::INFINITY, 0, 0);
    let mut h0_min = f64::INFINITY;
    for (hk, h) in scn.hclass().tables().iter().enumerate() {
        for (tk, t) in scn.tclass().members().iter().enumerate() {
            let r = scn.annotation_risk(h, t)?;
            if r < best.0 {
                best = (r, hk, tk);
            }
            if hk == scn.labeling().h0_index() {
                h0_min = h0_min.min(r);
            }
        }
    }
    // any h equal to h0 on the support counts as h0
    let on_support = scn.classification_risk(scn.hclass().get(best.1))? == 0.0;
    Ok(ConsistencyReport {
        holds: on_support || h0_min <= best.0 + 1e-12,
        argmin_h: best.1,
        argmin_t: best.2,
        min_risk: best.0,
        h0_min_risk: h0_min,
    })
}

/// The construction behind "zero separation means arbitrarily weak
/// identifiability": a point-mass instance distribution at the witness
/// instance, a true transition supplying `D_i` and a wrong one supplying a
/// close `D_j`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NonLearnabilityWitness {
    pub k: u32,
    pub x: usize,
    pub i: usize,
    pub j: usize,
    /// Member used as the true transition `T0^(k)`.
    pub t0: usize,
    /// Member supplying the confusable row, `T_-^(k)`.
    pub t_minus: usize,
    /// First hypothesis predicting `y_j` at `x`.
    pub h_minus: usize,
    pub kl: DivergenceValue,
    /// Identifiability level of the constructed scenario.
    #[serde(serialize_with = "serialize_extended")]
    pub eta: f64,
    #[serde(skip)]
    pub scenario: Scenario,
}

pub fn non_learnability_witness(template: &Scenario, k: u32) -> Result<NonLearnabilityWitness> {
    if k == 0 {
        return Err(Error::BadParams("k must be at least 1".into()));
    }
    let report = separation_degree(template);
    let threshold = 1.0 / f64::from(k);
    let w = match report.witness {
        Some(w) if report.gamma.value() < threshold => w,
        _ => {
            return Err(Error::SeparationHolds {
                gamma: report.gamma.value(),
                k,
            })
        }
    };
    let labeling = template
        .labeling()
        .with_dx(Distribution::point_mass(template.n(), w.x))?;
    let scenario = Scenario::with_member(labeling, template.tclass().clone(), w.t_i, Loss::CrossEntropy)?;
    let h_minus = scenario
        .hclass()
        .tables()
        .iter()
        .position(|h| h[w.x] == w.j)
        .expect("witness label is reachable");
    let eta = identifiability_level(&scenario)?.eta;
    Ok(NonLearnabilityWitness {
        k,
        x: w.x,
        i: w.i,
        j: w.j,
        t0: w.t_i,
        t_minus: w.t_j,
        h_minus,
        kl: report.gamma,
        eta,
        scenario,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::HypothesisClass;
    use crate::spaces::FiniteSpace;
    use crate::transition::{build_class, uniform_noise_matrix, BuildOptions, ClassSpec, TransitionClass};

    fn d(w: &[f64]) -> Distribution {
        Distribution::from_weights(w).unwrap()
    }

    fn three_by_two() -> Scenario {
        let labels = FiniteSpace::indexed("y", 3).unwrap();
        let spec = ClassSpec::Explicit {
            outcomes: None,
            matrices: vec![vec![vec![0.1, 0.9], vec![0.5, 0.5], vec![0.9, 0.1]]],
        };
        let tclass = build_class(&spec, &labels, &BuildOptions::default()).unwrap();
        let labeling = Labeling::new(
            FiniteSpace::indexed("x", 3).unwrap(),
            labels,
            Distribution::uniform(3),
            vec![0, 1, 2],
            HypothesisClass::all_functions(3, 3).unwrap(),
        )
        .unwrap();
        Scenario::with_member(labeling, tclass, 0, Loss::CrossEntropy).unwrap()
    }

    fn noise_scenario(c: usize, rates: &[f64], hclass: HypothesisClass, h0: Vec<usize>) -> Scenario {
        let labels = FiniteSpace::indexed("y", c).unwrap();
        let tclass = build_class(
            &ClassSpec::UniformNoise { rates: rates.to_vec() },
            &labels,
            &BuildOptions::default(),
        )
        .unwrap();
        let n = h0.len();
        let labeling = Labeling::new(
            FiniteSpace::indexed("x", n).unwrap(),
            labels,
            Distribution::uniform(n),
            h0,
            hclass,
        )
        .unwrap();
        Scenario::with_member(labeling, tclass, 0, Loss::CrossEntropy).unwrap()
    }

    /// Closed-form KL over all six ordered row pairs of the 3x2 matrix.
    fn three_by_two_oracle() -> f64 {
        let rows: [[f64; 2]; 3] = [[0.1, 0.9], [0.5, 0.5], [0.9, 0.1]];
        let mut best = f64::INFINITY;
        for a in 0..3 {
            for b in 0..3 {
                if a != b {
                    let v: f64 = (0..2).map(|k| rows[a][k] * (rows[a][k] / rows[b][k]).ln()).sum();
                    best = best.min(v);
                }
            }
        }
        best
    }

    #[test]
    fn reachable_label_examples() {
        let single = HypothesisClass::explicit(vec![vec![1, 0, 2]], 3, 3).unwrap();
        assert_eq!(reachable_labels(&single, 0), BTreeSet::from([1]));
        let all = HypothesisClass::all_functions(3, 3).unwrap();
        assert_eq!(reachable_labels(&all, 1), BTreeSet::from([0, 1, 2]));
        let thr = HypothesisClass::threshold_1d(&[0.0, 1.0, 2.0]).unwrap();
        // tables: 111, 011, 001, 000
        assert_eq!(reachable_labels(&thr, 0), BTreeSet::from([0, 1]));
        let two = HypothesisClass::explicit(vec![vec![1, 1, 1], vec![0, 1, 1]], 3, 2).unwrap();
        assert_eq!(reachable_labels(&two, 2), BTreeSet::from([1]));
    }

    #[test]
    fn three_by_two_separation() {
        let scn = three_by_two();
        let r = separation_degree(&scn);
        let oracle = three_by_two_oracle();
        assert!((oracle - 0.368064).abs() < 1e-6);
        assert!((r.gamma.value() - oracle).abs() < 1e-12);
        let w = r.witness.unwrap();
        assert_eq!((w.i, w.j), (0, 1));
        assert!(!r.grid_caveat);
        let p13 = pairwise_separation(&scn, 0, 2).unwrap();
        assert!((p13.value.value() - 0.8 * 9f64.ln()).abs() < 1e-12);
        assert_eq!(pairwise_separation(&scn, 1, 1), Err(Error::SameLabel(1)));
        let min_pair = r
            .pairwise
            .iter()
            .map(|p| p.value)
            .fold(DivergenceValue::INFINITE, |a, b| if b < a { b } else { a });
        assert_eq!(min_pair, r.gamma);
    }

    #[test]
    fn singleton_hypothesis_class_is_infinitely_separated() {
        let scn = noise_scenario(
            2,
            &[0.1],
            HypothesisClass::explicit(vec![vec![0, 1]], 2, 2).unwrap(),
            vec![0, 1],
        );
        let r = separation_degree(&scn);
        assert!(r.gamma.is_infinite());
        assert!(r.witness.is_none());
        assert!(pairwise_separation(&scn, 0, 1).unwrap().value.is_infinite());
    }

    #[test]
    fn duplicated_rows_give_zero_separation() {
        // rate 0.5 makes both binary rows (0.5, 0.5)
        let scn = noise_scenario(2, &[0.1, 0.5], HypothesisClass::all_functions(2, 2).unwrap(), vec![0, 1]);
        assert_eq!(separation_degree(&scn).gamma.value(), 0.0);
        assert!(scn.tclass().grid_derived());
        assert!(separation_degree(&scn).grid_caveat);
        // with the coin-flip member as the truth, a wrong label costs nothing
        let scn = Scenario::with_member(scn.labeling().clone(), scn.tclass().clone(), 1, Loss::CrossEntropy).unwrap();
        let eta = identifiability_level(&scn).unwrap();
        assert!(eta.eta.abs() < 1e-12);
    }

    #[test]
    fn symmetric_pairs_agree() {
        let scn = noise_scenario(2, &[0.2, 0.3], HypothesisClass::all_functions(2, 2).unwrap(), vec![0, 1]);
        let a = pairwise_separation(&scn, 0, 1).unwrap().value.value();
        let b = pairwise_separation(&scn, 1, 0).unwrap().value.value();
        assert!((a - b).abs() < 1e-15);
        // (0.7, 0.3) against the closest wrong row (0.3, 0.7)
        let expected = kl(&d(&[0.7, 0.3]), &d(&[0.3, 0.7])).unwrap().value();
        assert!((a - expected).abs() < 1e-15);
    }

    #[test]
    fn concentration_examples() {
        let scn = noise_scenario(2, &[0.2], HypothesisClass::all_functions(2, 2).unwrap(), vec![0, 1]);
        let sets = ConcentrationSets::new(&[vec![0], vec![1]], 2).unwrap();
        let r = concentration_degree(&scn, &sets).unwrap();
        assert!((r.gamma_c - (1.0 - 2.0 * 0.2)).abs() < 1e-12);

        let everything = ConcentrationSets::new(&[vec![0, 1], vec![0, 1]], 2).unwrap();
        assert_eq!(concentration_degree(&scn, &everything).unwrap().gamma_c, 0.0);

        // negative values are reported, not clamped
        let noisy = noise_scenario(2, &[0.7], HypothesisClass::all_functions(1, 2).unwrap(), vec![0]);
        let r = concentration_degree(&noisy, &sets).unwrap();
        assert!((r.gamma_c - (1.0 - 1.4)).abs() < 1e-12);
    }

    #[test]
    fn superset_concentration_matches_ambiguity_formula() {
        let labels = FiniteSpace::indexed("y", 3).unwrap();
        let tclass = build_class(
            &ClassSpec::SupersetNoise { q_in: vec![1.0], cap: None },
            &labels,
            &BuildOptions::default(),
        )
        .unwrap();
        let labeling = Labeling::new(
            FiniteSpace::indexed("x", 2).unwrap(),
            labels,
            Distribution::uniform(2),
            vec![0, 2],
            HypothesisClass::all_functions(2, 3).unwrap(),
        )
        .unwrap();
        let scn = Scenario::with_member(labeling, tclass, 0, Loss::CrossEntropy).unwrap();
        let sets: Vec<Vec<usize>> = (0..3).map(|i| (0..8).filter(|m| m >> i & 1 == 1).collect()).collect();
        let sets = ConcentrationSets::new(&sets, 8).unwrap();
        let got = concentration_degree(&scn, &sets).unwrap().gamma_c;
        // direct sum over the 8 subsets: max_j P(y_j ∈ O | y_i) for j ≠ i
        let t = scn.t0();
        let mut worst: f64 = 0.0;
        for i in 0..3 {
            for j in (0..3).filter(|&j| j != i) {
                let p: f64 = (0..8).filter(|m| m >> j & 1 == 1).map(|m| t.r(0, i).prob(m)).sum();
                worst = worst.max(p);
            }
        }
        assert!((got - (1.0 - worst)).abs() < 1e-12);
        assert!((got - 0.5).abs() < 1e-12);
    }

    #[test]
    fn evidence_from_concentration_sets() {
        let scn = noise_scenario(3, &[0.1, 0.2], HypothesisClass::all_functions(3, 3).unwrap(), vec![0, 1, 2]);
        let sets = ConcentrationSets::new(&[vec![0], vec![1], vec![2]], 3).unwrap();
        let gc = concentration_degree(&scn, &sets).unwrap().gamma_c;
        assert!((gc - 0.7).abs() < 1e-12);
        let r = evidence_bound(&scn, &concentration_evidence(&sets)).unwrap();
        assert!((r.bound.unwrap() - 2.0 * gc * gc).abs() < 1e-12);
        assert!(separation_degree(&scn).gamma.value() >= r.bound.unwrap() - 1e-12);
    }

    #[test]
    fn orthogonal_evidence_fails() {
        let scn = noise_scenario(2, &[0.2], HypothesisClass::all_functions(1, 2).unwrap(), vec![0]);
        // every row sums to one, so the all-ones vector sees no difference
        let mut table = EvidenceTable::new();
        table.insert((0, 1), vec![1.0, 1.0]);
        let r = evidence_bound(&scn, &table).unwrap();
        assert!(r.bound.is_none());
        let f = r.failure.unwrap();
        assert!(f.gamma_ij.abs() < 1e-15);
        table.insert((0, 1), vec![0.0, 0.0]);
        assert_eq!(evidence_bound(&scn, &table), Err(Error::ZeroVector { i: 0, j: 1 }));
        assert_eq!(
            evidence_bound(&scn, &EvidenceTable::new()),
            Err(Error::MissingEvidence { i: 0, j: 1 })
        );
    }

    #[test]
    fn three_by_two_eta_equals_gamma() {
        let scn = three_by_two();
        let eta = identifiability_level(&scn).unwrap();
        let gamma = separation_degree(&scn).gamma.value();
        assert!((eta.eta - gamma).abs() < 1e-12);
        assert!(eta.denominator > 0.0);
        assert!((eta.numerator / eta.denominator - eta.eta).abs() < 1e-15);
    }

    #[test]
    fn eta_needs_a_wrong_hypothesis() {
        let scn = noise_scenario(
            2,
            &[0.1],
            HypothesisClass::explicit(vec![vec![0, 1]], 2, 2).unwrap(),
            vec![0, 1],
        );
        assert_eq!(identifiability_level(&scn), Err(Error::NoWrongHypothesis));
    }

    #[test]
    fn concentration_eta_dominates_gamma_c() {
        let scn = noise_scenario(3, &[0.1, 0.25], HypothesisClass::all_functions(2, 3).unwrap(), vec![0, 2]);
        let sets = ConcentrationSets::new(&[vec![0], vec![1], vec![2]], 3).unwrap();
        let scn = scn.with_loss(Loss::Concentration(sets.clone())).unwrap();
        let gc = concentration_degree(&scn, &sets).unwrap().gamma_c;
        let eta = identifiability_level(&scn).unwrap().eta;
        assert!(eta >= gc - 1e-12, "{eta} < {gc}");
    }

    #[test]
    fn consistency_under_separation() {
        let scn = three_by_two();
        assert!(consistency(&scn).unwrap().holds);
    }

    #[test]
    fn witness_examples() {
        // the 3x2 matrix is separated by ~0.368
        assert!(matches!(
            non_learnability_witness(&three_by_two(), 8),
            Err(Error::SeparationHolds { k: 8, .. })
        ));
        let w = non_learnability_witness(&three_by_two(), 1).unwrap();
        assert!(w.eta <= w.kl.value() + 1e-12);

        // two members with identical relevant rows
        let labels = FiniteSpace::indexed("y", 2).unwrap();
        let a = uniform_noise_matrix(2, 0.1).unwrap();
        let b = crate::transition::TransitionHypothesis::constant(&[vec![0.9, 0.1], vec![0.9, 0.1]]).unwrap();
        let class = TransitionClass::new(labels.clone(), labels.clone(), vec![a, b], None).unwrap();
        let labeling = Labeling::new(
            FiniteSpace::indexed("x", 2).unwrap(),
            labels,
            Distribution::uniform(2),
            vec![0, 1],
            HypothesisClass::all_functions(2, 2).unwrap(),
        )
        .unwrap();
        let scn = Scenario::with_member(labeling, class, 0, Loss::CrossEntropy).unwrap();
        let w = non_learnability_witness(&scn, 4).unwrap();
        assert_eq!(w.kl.value(), 0.0);
        assert_eq!(w.eta, 0.0);
        assert_eq!(w.scenario.dx().prob(w.x), 1.0);
    }

    #[test]
    fn witness_on_close_grid_rows() {
        let eps = 0.01;
        let scn = noise_scenario(
            2,
            &[0.1, 0.5 - eps],
            HypothesisClass::all_functions(2, 2).unwrap(),
            vec![0, 1],
        );
        let w = non_learnability_witness(&scn, 4).unwrap();
        let closest = kl(&d(&[0.5 + eps, 0.5 - eps]), &d(&[0.5 - eps, 0.5 + eps])).unwrap().value();
        assert!((w.kl.value() - closest).abs() < 1e-15);
        assert!(w.eta <= closest + 1e-12);
    }
}
