//! A complete realizable problem instance: instance distribution, true
//! labeling `h0`, true transition `T0`, hypothesis and transition classes,
//! and the annotation loss. Exact population risks are finite sums here;
//! synthetic training sets are drawn with a pinned ChaCha8 stream.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::losses::Loss;
use crate::spaces::{Distribution, FiniteSpace};
use crate::transition::{TransitionClass, TransitionHypothesis};

/// Hard cap on `c^n` for the all-functions class.
pub const ALL_FUNCTIONS_CAP: usize = 1 << 20;

/// A label assignment `x ↦ h(x)` by index.
pub type Assignment = Vec<usize>;

#[derive(Debug, Clone, PartialEq)]
pub enum HypothesisProvenance {
    Explicit,
    AllFunctions,
    Threshold1d { embedding: Vec<f64> },
}

/// Finite, ordered hypothesis class. Duplicated tables are allowed and
/// flagged.
#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisClass {
    tables: Vec<Assignment>,
    instances: usize,
    labels: usize,
    provenance: HypothesisProvenance,
    has_duplicates: bool,
}

impl HypothesisClass {
    pub fn explicit(tables: Vec<Assignment>, instances: usize, labels: usize) -> Result<Self> {
        Self::from_parts(tables, instances, labels, HypothesisProvenance::Explicit)
    }

    /// Every map from `instances` points to `labels` labels, in
    /// lexicographic order of the tables (instance 0 most significant).
    pub fn all_functions(instances: usize, labels: usize) -> Result<Self> {
        let count = (labels as u128).checked_pow(instances as u32).unwrap_or(u128::MAX);
        if count > ALL_FUNCTIONS_CAP as u128 {
            return Err(Error::CapExceeded {
                what: "all-functions hypothesis class",
                size: count.min(usize::MAX as u128) as usize,
                cap: ALL_FUNCTIONS_CAP,
            });
        }
        let mut tables = Vec::with_capacity(count as usize);
        let mut table = vec![0usize; instances];
        loop {
            tables.push(table.clone());
            // increment the base-`labels` counter, last instance fastest
            let mut pos = instances;
            loop {
                if pos == 0 {
                    return Self::from_parts(tables, instances, labels, HypothesisProvenance::AllFunctions);
                }
                pos -= 1;
                table[pos] += 1;
                if table[pos] < labels {
                    break;
                }
                table[pos] = 0;
            }
        }
    }

    /// Binary one-sided thresholds `h_t(x) = 1{e(x) ≥ t}` over every cut of
    /// the sorted embedding, from "all label 1" to "all label 0".
    pub fn threshold_1d(embedding: &[f64]) -> Result<Self> {
        if embedding.is_empty() {
            return Err(Error::EmptyGrid("threshold class needs an embedding".into()));
        }
        let mut cuts: Vec<f64> = embedding.to_vec();
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        cuts.push(f64::INFINITY);
        let tables = cuts
            .iter()
            .map(|&t| embedding.iter().map(|&e| usize::from(e >= t)).collect())
            .collect();
        Self::from_parts(
            tables,
            embedding.len(),
            2,
            HypothesisProvenance::Threshold1d {
                embedding: embedding.to_vec(),
            },
        )
    }

    fn from_parts(
        tables: Vec<Assignment>,
        instances: usize,
        labels: usize,
        provenance: HypothesisProvenance,
    ) -> Result<Self> {
        if tables.is_empty() {
            return Err(Error::EmptyGrid("hypothesis class has no members".into()));
        }
        for (k, t) in tables.iter().enumerate() {
            if t.len() != instances {
                return Err(Error::CoverageGap(format!(
                    "hypothesis {k} covers {} of {instances} instances",
                    t.len()
                )));
            }
            if let Some(&bad) = t.iter().find(|&&y| y >= labels) {
                return Err(Error::IndexOutOfRange {
                    what: "label",
                    index: bad,
                    size: labels,
                });
            }
        }
        let mut sorted: Vec<&Assignment> = tables.iter().collect();
        sorted.sort();
        let has_duplicates = sorted.windows(2).any(|w| w[0] == w[1]);
        Ok(Self {
            tables,
            instances,
            labels,
            provenance,
            has_duplicates,
        })
    }

    pub fn tables(&self) -> &[Assignment] {
        &self.tables
    }

    pub fn get(&self, k: usize) -> &Assignment {
        &self.tables[k]
    }

    pub fn len(&self) -> usize {
        self.tables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tables.is_empty()
    }

    pub fn instances(&self) -> usize {
        self.instances
    }

    pub fn labels(&self) -> usize {
        self.labels
    }

    pub fn provenance(&self) -> &HypothesisProvenance {
        &self.provenance
    }

    pub fn has_duplicates(&self) -> bool {
        self.has_duplicates
    }

    pub fn position_of(&self, table: &[usize]) -> Option<usize> {
        self.tables.iter().position(|t| t == table)
    }

    /// `H(x)` as a membership mask over labels.
    pub fn reachable(&self, x: usize) -> Vec<bool> {
        let mut mask = vec![false; self.labels];
        for t in &self.tables {
            mask[t[x]] = true;
        }
        mask
    }
}

/// The labeling part of a problem: spaces, `D_X`, `h0` and `H`.
#[derive(Debug, Clone, PartialEq)]
pub struct Labeling {
    instances: FiniteSpace,
    labels: FiniteSpace,
    dx: Distribution,
    h0: Assignment,
    h0_index: usize,
    hclass: HypothesisClass,
}

impl Labeling {
    pub fn new(
        instances: FiniteSpace,
        labels: FiniteSpace,
        dx: Distribution,
        h0: Assignment,
        hclass: HypothesisClass,
    ) -> Result<Self> {
        let n = instances.size();
        if dx.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                got: dx.len(),
            });
        }
        if hclass.instances() != n || hclass.labels() != labels.size() {
            return Err(Error::SpaceMismatch(format!(
                "hypothesis class is over {} instances and {} labels, scenario has {} and {}",
                hclass.instances(),
                hclass.labels(),
                n,
                labels.size()
            )));
        }
        if h0.len() != n {
            return Err(Error::CoverageGap(format!("h0 covers {} of {n} instances", h0.len())));
        }
        let h0_index = hclass
            .position_of(&h0)
            .ok_or_else(|| Error::InvalidScenario("h0 is not a member of the hypothesis class".into()))?;
        Ok(Self {
            instances,
            labels,
            dx,
            h0,
            h0_index,
            hclass,
        })
    }

    pub fn instances(&self) -> &FiniteSpace {
        &self.instances
    }

    pub fn labels(&self) -> &FiniteSpace {
        &self.labels
    }

    pub fn dx(&self) -> &Distribution {
        &self.dx
    }

    pub fn h0(&self) -> &[usize] {
        &self.h0
    }

    pub fn h0_index(&self) -> usize {
        self.h0_index
    }

    pub fn hclass(&self) -> &HypothesisClass {
        &self.hclass
    }

    pub fn n(&self) -> usize {
        self.instances.size()
    }

    pub fn c(&self) -> usize {
        self.labels.size()
    }

    /// Instances carrying positive mass.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n()).filter(move |&x| self.dx.prob(x) > 0.0)
    }

    pub fn with_dx(&self, dx: Distribution) -> Result<Self> {
        Self::new(
            self.instances.clone(),
            self.labels.clone(),
            dx,
            self.h0.clone(),
            self.hclass.clone(),
        )
    }

    /// `R(h) = P(h(x) ≠ h0(x))`.
    pub fn classification_risk(&self, h: &[usize]) -> Result<f64> {
        if h.len() != self.n() {
            return Err(Error::CoverageGap(format!(
                "hypothesis covers {} of {} instances",
                h.len(),
                self.n()
            )));
        }
        Ok(self
            .support()
            .filter(|&x| h[x] != self.h0[x])
            .map(|x| self.dx.prob(x))
            .fold(0.0, |a, p| a + p))
    }
}

/// The full problem tuple.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    labeling: Labeling,
    tclass: TransitionClass,
    t0_index: usize,
    loss: Loss,
}

impl Scenario {
    /// Builds a scenario whose true transition is `t0`; `t0` must equal a
    /// class member within 1e-12.
    pub fn new(labeling: Labeling, tclass: TransitionClass, t0: &TransitionHypothesis, loss: Loss) -> Result<Self> {
        let t0_index = tclass
            .position_of(t0, labeling.n())
            .ok_or_else(|| Error::InvalidScenario("T0 is not a member of the transition class".into()))?;
        Self::with_member(labeling, tclass, t0_index, loss)
    }

    /// Builds a scenario whose true transition is member `t0_index`.
    pub fn with_member(labeling: Labeling, tclass: TransitionClass, t0_index: usize, loss: Loss) -> Result<Self> {
        check_compatible(&labeling, &tclass)?;
        tclass.get(t0_index)?;
        if let Some(sets) = loss.sets() {
            sets.check_shape(labeling.c(), tclass.outcomes().size())?;
        }
        Ok(Self {
            labeling,
            tclass,
            t0_index,
            loss,
        })
    }

    pub fn labeling(&self) -> &Labeling {
        &self.labeling
    }

    pub fn tclass(&self) -> &TransitionClass {
        &self.tclass
    }

    pub fn t0(&self) -> &TransitionHypothesis {
        &self.tclass.members()[self.t0_index]
    }

    pub fn t0_index(&self) -> usize {
        self.t0_index
    }

    pub fn loss(&self) -> &Loss {
        &self.loss
    }

    pub fn hclass(&self) -> &HypothesisClass {
        self.labeling.hclass()
    }

    pub fn dx(&self) -> &Distribution {
        self.labeling.dx()
    }

    pub fn h0(&self) -> &[usize] {
        self.labeling.h0()
    }

    pub fn n(&self) -> usize {
        self.labeling.n()
    }

    pub fn c(&self) -> usize {
        self.labeling.c()
    }

    pub fn s(&self) -> usize {
        self.tclass.outcomes().size()
    }

    pub fn with_loss(&self, loss: Loss) -> Result<Self> {
        Self::with_member(self.labeling.clone(), self.tclass.clone(), self.t0_index, loss)
    }

    pub fn with_labeling(&self, labeling: Labeling) -> Result<Self> {
        Self::with_member(labeling, self.tclass.clone(), self.t0_index, self.loss.clone())
    }

    /// The true law of `O` given `x`: `(T0(x))_{h0(x)}`.
    pub fn true_row(&self, x: usize) -> &Distribution {
        self.t0().r(x, self.labeling.h0[x])
    }

    pub fn classification_risk(&self, h: &[usize]) -> Result<f64> {
        self.labeling.classification_risk(h)
    }

    /// Exact `R_O(T∘h) = Σ_x D_X(x) Σ_o P_{T0}(o | x, h0(x)) ℓ(h(x), T, (x, o))`.
    pub fn annotation_risk(&self, h: &[usize], t: &TransitionHypothesis) -> Result<f64> {
        if h.len() != self.n() {
            return Err(Error::CoverageGap(format!(
                "hypothesis covers {} of {} instances",
                h.len(),
                self.n()
            )));
        }
        if t.labels() != self.c() || t.outcomes() != self.s() {
            return Err(Error::SpaceMismatch("transition does not match the scenario spaces".into()));
        }
        if let Some(n) = t.instance_count() {
            if n != self.n() {
                return Err(Error::SpaceMismatch(format!(
                    "transition covers {n} instances, scenario has {}",
                    self.n()
                )));
            }
        }
        let mut total = 0.0;
        for x in self.labeling.support() {
            let row = self.true_row(x);
            let mut inner = 0.0;
            for (o, &p) in row.probs().iter().enumerate() {
                if p > 0.0 {
                    inner += p * self.loss.eval(h[x], t, x, o);
                }
            }
            total += self.dx().prob(x) * inner;
        }
        Ok(total)
    }

    /// `E_o[ℓ(label, T_t, (x, o))]` under the true row at `x`, indexed
    /// `[(t * n + x) * c + label]`.
    pub(crate) fn expected_losses(&self) -> Vec<f64> {
        let (n, c) = (self.n(), self.c());
        let mut table = vec![0.0; self.tclass.len() * n * c];
        for (ti, t) in self.tclass.members().iter().enumerate() {
            for x in 0..n {
                let row = self.true_row(x);
                for label in 0..c {
                    let mut v = 0.0;
                    for (o, &p) in row.probs().iter().enumerate() {
                        if p > 0.0 {
                            v += p * self.loss.eval(label, t, x, o);
                        }
                    }
                    table[(ti * n + x) * c + label] = v;
                }
            }
        }
        table
    }

    /// Draws `m` iid pairs: `x ~ D_X`, then `o ~ (T0(x))_{h0(x)}`, both by
    /// inverse CDF on one ChaCha8 stream seeded with `seed`.
    pub fn sample_dataset(&self, m: usize, seed: u64) -> Result<Dataset> {
        if m == 0 {
            return Err(Error::BadParams("dataset size must be at least 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let samples = (0..m)
            .map(|_| {
                let x = self.dx().quantile(rng.gen::<f64>());
                let o = self.true_row(x).quantile(rng.gen::<f64>());
                (x, o)
            })
            .collect();
        Ok(Dataset { samples, seed })
    }

    /// The loss ceiling `b`: 1 for the concentration loss, `-ln(floor)` for
    /// cross-entropy provided no zero entry can be hit by the data.
    pub fn loss_ceiling(&self) -> Result<f64> {
        match self.loss {
            Loss::Concentration(_) => Ok(1.0),
            Loss::CrossEntropy => {
                if let Some(w) = self.unbounded_witness() {
                    return Err(w);
                }
                Ok((-self.tclass.floor().ln()).max(f64::MIN_POSITIVE))
            }
        }
    }

    fn unbounded_witness(&self) -> Option<Error> {
        for x in self.labeling.support() {
            let row = self.true_row(x);
            let reachable = self.hclass().reachable(x);
            for (member, t) in self.tclass.members().iter().enumerate() {
                for label in (0..self.c()).filter(|&l| reachable[l]) {
                    let candidate = t.r(x, label);
                    for (o, &p) in row.probs().iter().enumerate() {
                        if p > 0.0 && candidate.prob(o) <= 0.0 {
                            return Some(Error::UnboundedLoss {
                                member,
                                x,
                                label,
                                outcome: o,
                            });
                        }
                    }
                }
            }
        }
        None
    }
}

fn check_compatible(labeling: &Labeling, tclass: &TransitionClass) -> Result<()> {
    if tclass.labels().size() != labeling.c() {
        return Err(Error::SpaceMismatch(format!(
            "transition class has {} labels, scenario has {}",
            tclass.labels().size(),
            labeling.c()
        )));
    }
    if let Some(n) = tclass.instance_count() {
        if n != labeling.n() {
            return Err(Error::SpaceMismatch(format!(
                "transition class covers {n} instances, scenario has {}",
                labeling.n()
            )));
        }
    }
    Ok(())
}

/// A training set `{(x_k, o_k)}` with the seed that produced it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    samples: Vec<(usize, usize)>,
    seed: u64,
}

impl Dataset {
    pub fn new(samples: Vec<(usize, usize)>, seed: u64) -> Self {
        Self { samples, seed }
    }

    pub fn samples(&self) -> &[(usize, usize)] {
        &self.samples
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn m(&self) -> usize {
        self.samples.len()
    }

    /// `counts[x * s + o]`. Fails on indices outside `n × s`.
    pub fn counts(&self, n: usize, s: usize) -> Result<Vec<u64>> {
        let mut counts = vec![0u64; n * s];
        for &(x, o) in &self.samples {
            if x >= n {
                return Err(Error::IndexOutOfRange {
                    what: "instance",
                    index: x,
                    size: n,
                });
            }
            if o >= s {
                return Err(Error::IndexOutOfRange {
                    what: "outcome",
                    index: o,
                    size: s,
                });
            }
            counts[x * s + o] += 1;
        }
        Ok(counts)
    }
}

/// `(1/m) Σ_k ℓ(h(x_k), T, (x_k, o_k))`.
///
/// Samples are grouped by `(x, o)` and summed in that order, which is the
/// same order [`crate::learning::erm`] uses, so the two agree bit for bit.
pub fn empirical_annotation_risk(
    h: &[usize],
    t: &TransitionHypothesis,
    dataset: &Dataset,
    loss: &Loss,
) -> Result<f64> {
    if dataset.m() == 0 {
        return Err(Error::EmptyDataset);
    }
    let n = h.len();
    let s = t.outcomes();
    let counts = dataset.counts(n, s)?;
    Ok(grouped_loss_sum(&counts, n, s, |x, o| loss.eval(h[x], t, x, o)) / dataset.m() as f64)
}

/// `Σ_x Σ_o counts[x, o] · f(x, o)`, skipping empty cells so that infinite
/// losses on unseen outcomes do not poison the sum.
pub(crate) fn grouped_loss_sum(counts: &[u64], n: usize, s: usize, f: impl Fn(usize, usize) -> f64) -> f64 {
    let mut total = 0.0;
    for x in 0..n {
        total += per_instance_sum(&counts[x * s..(x + 1) * s], |o| f(x, o));
    }
    total
}

#[inline]
pub(crate) fn per_instance_sum(counts: &[u64], f: impl Fn(usize) -> f64) -> f64 {
    let mut acc = 0.0;
    for (o, &k) in counts.iter().enumerate() {
        if k > 0 {
            acc += k as f64 * f(o);
        }
    }
    acc
}
