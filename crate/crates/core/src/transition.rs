//! Transition hypotheses `T(x)`, finite transition classes and the induced
//! distribution families `{(T(x))_i : T ∈ class}`.
//!
//! Continuous families (noise rates, logistic weights) only ever exist here
//! as user-declared grids, so every infimum computed over a class is exact
//! for the grid and an upper bound for the continuous family it samples.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spaces::{Distribution, FiniteSpace, MATRIX_TOLERANCE};

/// Default cap on the size of a materialized superset annotation space.
pub const DEFAULT_SUPERSET_CAP: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub enum Rows {
    /// One row per label, shared by every instance.
    Constant(Vec<Distribution>),
    /// `rows[x][i]`.
    PerInstance(Vec<Vec<Distribution>>),
}

/// A candidate transition: for each instance `x` a row-stochastic `c × s`
/// matrix whose row `i` is `P(O = · | x, y_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionHypothesis {
    labels: usize,
    outcomes: usize,
    rows: Rows,
    entry_floor: f64,
    params: Vec<(String, f64)>,
}

impl TransitionHypothesis {
    pub fn from_rows(rows: Rows) -> Result<Self> {
        let (labels, outcomes) = {
            let first: &[Distribution] = match &rows {
                Rows::Constant(r) => r,
                Rows::PerInstance(t) => t
                    .first()
                    .ok_or_else(|| Error::EmptyGrid("per-instance table without instances".into()))?,
            };
            let first_row = first
                .first()
                .ok_or_else(|| Error::EmptyGrid("transition matrix without rows".into()))?;
            (first.len(), first_row.len())
        };
        let tables: Vec<&[Distribution]> = match &rows {
            Rows::Constant(r) => vec![r.as_slice()],
            Rows::PerInstance(t) => t.iter().map(Vec::as_slice).collect(),
        };
        let mut floor = f64::INFINITY;
        for table in &tables {
            if table.len() != labels {
                return Err(Error::LengthMismatch {
                    expected: labels,
                    got: table.len(),
                });
            }
            for row in *table {
                if row.len() != outcomes {
                    return Err(Error::LengthMismatch {
                        expected: outcomes,
                        got: row.len(),
                    });
                }
                floor = floor.min(row.positive_floor());
            }
        }
        Ok(Self {
            labels,
            outcomes,
            rows,
            entry_floor: floor,
            params: Vec::new(),
        })
    }

    /// Instance-independent matrix given as raw weights, one row per label.
    pub fn constant(matrix: &[Vec<f64>]) -> Result<Self> {
        let rows = matrix
            .iter()
            .map(|w| Distribution::from_weights(w))
            .collect::<Result<Vec<_>>>()?;
        Self::from_rows(Rows::Constant(rows))
    }

    /// `tables[x]` is the matrix used at instance `x`.
    pub fn per_instance(tables: &[Vec<Vec<f64>>]) -> Result<Self> {
        let rows = tables
            .iter()
            .map(|m| {
                m.iter()
                    .map(|w| Distribution::from_weights(w))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_rows(Rows::PerInstance(rows))
    }

    pub fn with_params(mut self, params: Vec<(String, f64)>) -> Self {
        self.params = params;
        self
    }

    pub fn labels(&self) -> usize {
        self.labels
    }

    pub fn outcomes(&self) -> usize {
        self.outcomes
    }

    pub fn rows(&self) -> &Rows {
        &self.rows
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.rows, Rows::Constant(_))
    }

    /// Number of instances the table covers; `None` for constant matrices.
    pub fn instance_count(&self) -> Option<usize> {
        match &self.rows {
            Rows::Constant(_) => None,
            Rows::PerInstance(t) => Some(t.len()),
        }
    }

    /// Smallest strictly positive entry over every row.
    pub fn entry_floor(&self) -> f64 {
        self.entry_floor
    }

    /// Named numeric parameters (noise rates, weights) used by joint
    /// constraints.
    pub fn params(&self) -> &[(String, f64)] {
        &self.params
    }

    pub fn param(&self, name: &str) -> Option<f64> {
        self.params.iter().find(|(n, _)| n == name).map(|&(_, v)| v)
    }

    /// `(T(x))_i`.
    pub fn row(&self, x: usize, i: usize) -> Result<&Distribution> {
        if i >= self.labels {
            return Err(Error::IndexOutOfRange {
                what: "label",
                index: i,
                size: self.labels,
            });
        }
        match &self.rows {
            Rows::Constant(r) => Ok(&r[i]),
            Rows::PerInstance(t) => t.get(x).map(|m| &m[i]).ok_or(Error::IndexOutOfRange {
                what: "instance",
                index: x,
                size: t.len(),
            }),
        }
    }

    /// Unchecked row access for inner loops; indices are validated when the
    /// owning scenario is built.
    #[inline]
    pub(crate) fn r(&self, x: usize, i: usize) -> &Distribution {
        match &self.rows {
            Rows::Constant(r) => &r[i],
            Rows::PerInstance(t) => &t[x][i],
        }
    }

    /// Entry-wise equality within `tol` on instances `0..instances`.
    pub fn approx_eq(&self, other: &Self, instances: usize, tol: f64) -> bool {
        if self.labels != other.labels || self.outcomes != other.outcomes {
            return false;
        }
        (0..instances.max(1)).all(|x| {
            (0..self.labels).all(|i| self.r(x, i).max_abs_diff(other.r(x, i)) <= tol)
        })
    }

    /// First `(x, i, o)` with a zero entry on instances `0..instances`.
    pub fn zero_entry(&self, instances: usize) -> Option<(usize, usize, usize)> {
        let xs = match &self.rows {
            Rows::Constant(_) => 1,
            Rows::PerInstance(_) => instances,
        };
        for x in 0..xs {
            for i in 0..self.labels {
                if let Some(o) = self.r(x, i).probs().iter().position(|&p| p <= 0.0) {
                    return Some((x, i, o));
                }
            }
        }
        None
    }
}

/// `induced_distribution`: the row `(T(x))_i`.
pub fn induced_distribution(t: &TransitionHypothesis, x: usize, i: usize) -> Result<&Distribution> {
    t.row(x, i)
}

/// `Σ coefficient · param ≤ bound`, evaluated on the parameters of a joint
/// member (`1.<name>` for the first source, `2.<name>` for the second).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearConstraint {
    pub terms: BTreeMap<String, f64>,
    pub bound: f64,
}

impl LinearConstraint {
    pub fn is_satisfied(&self, t: &TransitionHypothesis) -> Result<bool> {
        let mut lhs = 0.0;
        for (name, coef) in &self.terms {
            let v = t
                .param(name)
                .ok_or_else(|| Error::UnknownName(format!("constraint parameter `{name}`")))?;
            lhs += coef * v;
        }
        // grid values such as 0.1 - 0.3 miss the bound by one ulp otherwise
        Ok(lhs <= self.bound + MATRIX_TOLERANCE)
    }
}

/// How a transition class is enumerated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClassSpec {
    /// Instance-independent matrices listed verbatim.
    Explicit {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        outcomes: Option<Vec<String>>,
        matrices: Vec<Vec<Vec<f64>>>,
    },
    /// Instance-dependent members, `members[t][x]` is a matrix.
    PerInstance {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        outcomes: Option<Vec<String>>,
        members: Vec<Vec<Vec<Vec<f64>>>>,
    },
    /// Label noise with `P(O ≠ y | y) = rate`, spread evenly over the other
    /// labels. Annotation space equals the label space.
    UniformNoise { rates: Vec<f64> },
    /// Superset annotations over `2^labels`: `q_in = P(y ∈ O | y)`, mass
    /// shared evenly inside the "contains y" and "misses y" groups.
    SupersetNoise {
        q_in: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        cap: Option<usize>,
    },
    /// Binary label noise with flip probability `sigmoid(wᵀ e(x))`.
    Logistic {
        embeddings: Vec<Vec<f64>>,
        weights: Vec<Vec<f64>>,
    },
    /// Two sources mixed with probability `lambda` for the first.
    Joint {
        lambda: f64,
        distinguished: bool,
        first: Box<ClassSpec>,
        second: Box<ClassSpec>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        constraint: Option<LinearConstraint>,
    },
}

impl ClassSpec {
    /// True when the class samples a continuous family.
    pub fn is_grid(&self) -> bool {
        match self {
            ClassSpec::Explicit { .. } | ClassSpec::PerInstance { .. } => false,
            ClassSpec::UniformNoise { .. }
            | ClassSpec::SupersetNoise { .. }
            | ClassSpec::Logistic { .. } => true,
            ClassSpec::Joint { first, second, .. } => first.is_grid() || second.is_grid(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ClassSpec::Explicit { .. } => "explicit",
            ClassSpec::PerInstance { .. } => "per_instance",
            ClassSpec::UniformNoise { .. } => "uniform_noise",
            ClassSpec::SupersetNoise { .. } => "superset_noise",
            ClassSpec::Logistic { .. } => "logistic",
            ClassSpec::Joint { .. } => "joint",
        }
    }
}

/// A finite, ordered, non-empty family of transition hypotheses sharing
/// label and annotation spaces.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionClass {
    labels: FiniteSpace,
    outcomes: FiniteSpace,
    members: Vec<TransitionHypothesis>,
    provenance: Option<ClassSpec>,
    floor: f64,
}

impl TransitionClass {
    pub fn new(
        labels: FiniteSpace,
        outcomes: FiniteSpace,
        members: Vec<TransitionHypothesis>,
        provenance: Option<ClassSpec>,
    ) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::EmptyGrid("transition class has no members".into()));
        }
        let mut instances = None;
        for t in &members {
            if t.labels() != labels.size() || t.outcomes() != outcomes.size() {
                return Err(Error::SpaceMismatch(format!(
                    "member is {}x{}, class is {}x{}",
                    t.labels(),
                    t.outcomes(),
                    labels.size(),
                    outcomes.size()
                )));
            }
            if let Some(n) = t.instance_count() {
                match instances {
                    None => instances = Some(n),
                    Some(m) if m != n => {
                        return Err(Error::SpaceMismatch(format!(
                            "members cover {m} and {n} instances"
                        )))
                    }
                    _ => {}
                }
            }
        }
        let floor = members
            .iter()
            .map(TransitionHypothesis::entry_floor)
            .fold(f64::INFINITY, f64::min);
        Ok(Self {
            labels,
            outcomes,
            members,
            provenance,
            floor,
        })
    }

    pub fn labels(&self) -> &FiniteSpace {
        &self.labels
    }

    pub fn outcomes(&self) -> &FiniteSpace {
        &self.outcomes
    }

    pub fn members(&self) -> &[TransitionHypothesis] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn get(&self, index: usize) -> Result<&TransitionHypothesis> {
        self.members.get(index).ok_or(Error::IndexOutOfRange {
            what: "transition",
            index,
            size: self.members.len(),
        })
    }

    pub fn provenance(&self) -> Option<&ClassSpec> {
        self.provenance.as_ref()
    }

    /// True when derived quantities are only upper bounds for a continuous
    /// family the grid discretizes.
    pub fn grid_derived(&self) -> bool {
        self.provenance.as_ref().is_some_and(ClassSpec::is_grid)
    }

    /// Smallest positive entry across all members.
    pub fn floor(&self) -> f64 {
        self.floor
    }

    /// Instance count fixed by instance-dependent members, if any.
    pub fn instance_count(&self) -> Option<usize> {
        self.members.iter().find_map(TransitionHypothesis::instance_count)
    }

    pub fn all_constant(&self) -> bool {
        self.members.iter().all(TransitionHypothesis::is_constant)
    }

    /// Index of the first member equal to `t` within [`MATRIX_TOLERANCE`].
    pub fn position_of(&self, t: &TransitionHypothesis, instances: usize) -> Option<usize> {
        self.members
            .iter()
            .position(|m| m.approx_eq(t, instances, MATRIX_TOLERANCE))
    }

    pub fn induced_family(&self, x: usize, i: usize) -> Result<InducedFamily> {
        let distributions = self
            .members
            .iter()
            .map(|t| t.row(x, i).cloned())
            .collect::<Result<Vec<_>>>()?;
        Ok(InducedFamily {
            x,
            label: i,
            distributions,
        })
    }
}

/// `{(T(x))_i : T ∈ class}` in class order, duplicates kept.
#[derive(Debug, Clone, PartialEq)]
pub struct InducedFamily {
    pub x: usize,
    pub label: usize,
    pub distributions: Vec<Distribution>,
}

impl InducedFamily {
    pub fn len(&self) -> usize {
        self.distributions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.distributions.is_empty()
    }
}

/// `induced_family` as a free function.
pub fn induced_family(class: &TransitionClass, x: usize, i: usize) -> Result<InducedFamily> {
    class.induced_family(x, i)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BuildOptions {
    pub superset_cap: usize,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self {
            superset_cap: DEFAULT_SUPERSET_CAP,
        }
    }
}

/// Enumerates the class described by `spec` over `labels`.
pub fn build_class(spec: &ClassSpec, labels: &FiniteSpace, opts: &BuildOptions) -> Result<TransitionClass> {
    let c = labels.size();
    match spec {
        ClassSpec::Explicit { outcomes, matrices } => {
            if matrices.is_empty() {
                return Err(Error::EmptyGrid("explicit class lists no matrices".into()));
            }
            let members = matrices
                .iter()
                .map(|m| TransitionHypothesis::constant(m))
                .collect::<Result<Vec<_>>>()?;
            let s = members[0].outcomes();
            let outcomes = outcome_space(outcomes.as_deref(), s)?;
            TransitionClass::new(labels.clone(), outcomes, members, Some(spec.clone()))
        }
        ClassSpec::PerInstance { outcomes, members } => {
            if members.is_empty() {
                return Err(Error::EmptyGrid("per-instance class lists no members".into()));
            }
            let members = members
                .iter()
                .map(|m| TransitionHypothesis::per_instance(m))
                .collect::<Result<Vec<_>>>()?;
            let s = members[0].outcomes();
            let outcomes = outcome_space(outcomes.as_deref(), s)?;
            TransitionClass::new(labels.clone(), outcomes, members, Some(spec.clone()))
        }
        ClassSpec::UniformNoise { rates } => {
            if rates.is_empty() {
                return Err(Error::EmptyGrid("uniform noise needs at least one rate".into()));
            }
            if c < 2 {
                return Err(Error::BadParams("uniform noise needs at least two labels".into()));
            }
            let members = rates
                .iter()
                .map(|&r| uniform_noise_matrix(c, r))
                .collect::<Result<Vec<_>>>()?;
            TransitionClass::new(labels.clone(), labels.clone(), members, Some(spec.clone()))
        }
        ClassSpec::SupersetNoise { q_in, cap } => {
            if q_in.is_empty() {
                return Err(Error::EmptyGrid("superset noise needs at least one q_in".into()));
            }
            let cap = cap.unwrap_or(opts.superset_cap);
            let s = 1usize
                .checked_shl(c as u32)
                .filter(|&s| c < usize::BITS as usize && s <= cap)
                .ok_or(Error::SpaceTooLarge {
                    size: if c < usize::BITS as usize { 1 << c } else { usize::MAX },
                    cap,
                })?;
            let outcomes = superset_space(labels)?;
            debug_assert_eq!(outcomes.size(), s);
            let members = q_in
                .iter()
                .map(|&q| superset_matrix(c, q))
                .collect::<Result<Vec<_>>>()?;
            TransitionClass::new(labels.clone(), outcomes, members, Some(spec.clone()))
        }
        ClassSpec::Logistic { embeddings, weights } => {
            if weights.is_empty() {
                return Err(Error::EmptyGrid("logistic grid needs at least one weight".into()));
            }
            if embeddings.is_empty() {
                return Err(Error::EmptyGrid("logistic grid needs instance embeddings".into()));
            }
            if c != 2 {
                return Err(Error::BadParams("logistic noise is binary (two labels)".into()));
            }
            let p = embeddings[0].len();
            if let Some(e) = embeddings.iter().find(|e| e.len() != p) {
                return Err(Error::DimensionMismatch(format!(
                    "embedding of length {} next to length {p}",
                    e.len()
                )));
            }
            let members = weights
                .iter()
                .map(|w| logistic_member(embeddings, w))
                .collect::<Result<Vec<_>>>()?;
            TransitionClass::new(labels.clone(), labels.clone(), members, Some(spec.clone()))
        }
        ClassSpec::Joint {
            lambda,
            distinguished,
            first,
            second,
            constraint,
        } => {
            let first = build_class(first, labels, opts)?;
            let second = build_class(second, labels, opts)?;
            let joint = crate::joint::JointSpec {
                first,
                second,
                lambda: *lambda,
                distinguished: *distinguished,
                constraint: constraint.clone(),
            };
            let class = crate::joint::compose_joint(&joint)?;
            Ok(TransitionClass {
                provenance: Some(spec.clone()),
                ..class
            })
        }
    }
}

fn outcome_space(names: Option<&[String]>, s: usize) -> Result<FiniteSpace> {
    match names {
        Some(n) => {
            if n.len() != s {
                return Err(Error::LengthMismatch {
                    expected: s,
                    got: n.len(),
                });
            }
            FiniteSpace::new(n.iter().cloned())
        }
        None => FiniteSpace::indexed("o", s),
    }
}

fn check_unit(name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::BadParams(format!("{name} = {v} is outside [0, 1]")));
    }
    Ok(())
}

/// Diagonal `1 - rate`, off-diagonal `rate / (c - 1)`.
pub fn uniform_noise_matrix(c: usize, rate: f64) -> Result<TransitionHypothesis> {
    check_unit("noise rate", rate)?;
    let off = rate / (c - 1) as f64;
    let matrix: Vec<Vec<f64>> = (0..c)
        .map(|i| (0..c).map(|j| if i == j { 1.0 - rate } else { off }).collect())
        .collect();
    Ok(TransitionHypothesis::constant(&matrix)?.with_params(vec![("rate".into(), rate)]))
}

/// Outcome `k` is the subset whose bit `i` is set iff label `i` is in it.
pub fn superset_space(labels: &FiniteSpace) -> Result<FiniteSpace> {
    let c = labels.size();
    FiniteSpace::new((0..1usize << c).map(|mask| {
        let inner: Vec<&str> = (0..c)
            .filter(|i| mask >> i & 1 == 1)
            .map(|i| labels.name(i))
            .collect();
        format!("{{{}}}", inner.join(","))
    }))
}

pub fn superset_matrix(c: usize, q_in: f64) -> Result<TransitionHypothesis> {
    check_unit("q_in", q_in)?;
    let s = 1usize << c;
    let group = (s / 2) as f64;
    let matrix: Vec<Vec<f64>> = (0..c)
        .map(|i| {
            (0..s)
                .map(|mask| {
                    if mask >> i & 1 == 1 {
                        q_in / group
                    } else {
                        (1.0 - q_in) / group
                    }
                })
                .collect()
        })
        .collect();
    Ok(TransitionHypothesis::constant(&matrix)?.with_params(vec![("q_in".into(), q_in)]))
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn logistic_member(embeddings: &[Vec<f64>], w: &[f64]) -> Result<TransitionHypothesis> {
    let p = embeddings[0].len();
    if w.len() != p {
        return Err(Error::DimensionMismatch(format!(
            "weight of length {} for embeddings of length {p}",
            w.len()
        )));
    }
    let tables: Vec<Vec<Vec<f64>>> = embeddings
        .iter()
        .map(|e| {
            let flip = sigmoid(e.iter().zip(w).map(|(a, b)| a * b).sum());
            vec![vec![1.0 - flip, flip], vec![flip, 1.0 - flip]]
        })
        .collect();
    let params = w
        .iter()
        .enumerate()
        .map(|(k, &v)| (format!("w{k}"), v))
        .collect();
    Ok(TransitionHypothesis::per_instance(&tables)?.with_params(params))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(c: usize) -> FiniteSpace {
        FiniteSpace::indexed("y", c).unwrap()
    }

    fn three_by_two() -> TransitionClass {
        let spec = ClassSpec::Explicit {
            outcomes: None,
            matrices: vec![vec![vec![0.1, 0.9], vec![0.5, 0.5], vec![0.9, 0.1]]],
        };
        build_class(&spec, &labels(3), &BuildOptions::default()).unwrap()
    }

    #[test]
    fn induced_distribution_examples() {
        let class = three_by_two();
        let t = class.get(0).unwrap();
        for x in [0, 5, 100] {
            assert_eq!(induced_distribution(t, x, 0).unwrap().probs(), &[0.1, 0.9]);
        }
        let id = uniform_noise_matrix(3, 0.0).unwrap();
        for i in 0..3 {
            assert_eq!(id.row(0, i).unwrap(), &Distribution::point_mass(3, i));
        }
        let noisy = uniform_noise_matrix(2, 0.4).unwrap();
        assert_eq!(noisy.row(0, 0).unwrap().probs(), &[0.6, 0.4]);
        assert!(matches!(t.row(0, 3), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn induced_family_examples() {
        let single = three_by_two().induced_family(2, 1).unwrap();
        assert_eq!(single.len(), 1);
        assert_eq!(single.distributions[0].probs(), &[0.5, 0.5]);

        let spec = ClassSpec::UniformNoise { rates: vec![0.1, 0.2] };
        let class = build_class(&spec, &labels(2), &BuildOptions::default()).unwrap();
        let fam = class.induced_family(0, 0).unwrap();
        assert_eq!(fam.distributions[0].probs(), &[0.9, 0.1]);
        assert_eq!(fam.distributions[1].probs(), &[0.8, 0.2]);
    }

    #[test]
    fn empty_grids_rejected() {
        let opts = BuildOptions::default();
        assert!(matches!(
            build_class(&ClassSpec::UniformNoise { rates: vec![] }, &labels(2), &opts),
            Err(Error::EmptyGrid(_))
        ));
        assert!(matches!(
            build_class(
                &ClassSpec::Explicit { outcomes: None, matrices: vec![] },
                &labels(2),
                &opts
            ),
            Err(Error::EmptyGrid(_))
        ));
    }

    #[test]
    fn zero_noise_is_identity() {
        let spec = ClassSpec::UniformNoise { rates: vec![0.0] };
        let class = build_class(&spec, &labels(2), &BuildOptions::default()).unwrap();
        assert_eq!(class.len(), 1);
        let t = class.get(0).unwrap();
        assert_eq!(t.row(0, 0).unwrap().probs(), &[1.0, 0.0]);
        assert_eq!(t.row(0, 1).unwrap().probs(), &[0.0, 1.0]);
    }

    #[test]
    fn logistic_zero_weight_flips_half() {
        let spec = ClassSpec::Logistic {
            embeddings: vec![vec![-3.0], vec![0.0], vec![7.5]],
            weights: vec![vec![0.0]],
        };
        let class = build_class(&spec, &labels(2), &BuildOptions::default()).unwrap();
        let t = class.get(0).unwrap();
        for x in 0..3 {
            assert_eq!(t.row(x, 0).unwrap().probs(), &[0.5, 0.5]);
        }
        let bad = ClassSpec::Logistic {
            embeddings: vec![vec![1.0, 2.0]],
            weights: vec![vec![1.0]],
        };
        assert!(matches!(
            build_class(&bad, &labels(2), &BuildOptions::default()),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn logistic_rows_follow_sigmoid() {
        let spec = ClassSpec::Logistic {
            embeddings: vec![vec![1.0, 0.5], vec![-2.0, 1.0]],
            weights: vec![vec![0.5, 2.0]],
        };
        let class = build_class(&spec, &labels(2), &BuildOptions::default()).unwrap();
        let t = class.get(0).unwrap();
        let flip0 = 1.0 / (1.0 + (-1.5f64).exp());
        assert!((t.row(0, 0).unwrap().prob(1) - flip0).abs() < 1e-15);
        assert!((t.row(0, 1).unwrap().prob(0) - flip0).abs() < 1e-15);
        let flip1 = 1.0 / (1.0 + (-1f64).exp());
        assert!((t.row(1, 1).unwrap().prob(0) - flip1).abs() < 1e-14);
        assert!(class.grid_derived());
    }

    #[test]
    fn superset_rows() {
        let spec = ClassSpec::SupersetNoise {
            q_in: vec![0.8],
            cap: None,
        };
        let class = build_class(&spec, &labels(3), &BuildOptions::default()).unwrap();
        assert_eq!(class.outcomes().size(), 8);
        assert_eq!(class.outcomes().name(0), "{}");
        assert_eq!(class.outcomes().name(5), "{y0,y2}");
        let row = class.get(0).unwrap().row(0, 1).unwrap();
        let contains: Vec<bool> = (0..8).map(|m| m >> 1 & 1 == 1).collect();
        assert!((row.mass_of(&contains) - 0.8).abs() < 1e-12);
        let capped = ClassSpec::SupersetNoise {
            q_in: vec![0.8],
            cap: Some(4),
        };
        assert!(matches!(
            build_class(&capped, &labels(3), &BuildOptions::default()),
            Err(Error::SpaceTooLarge { size: 8, cap: 4 })
        ));
    }

    #[test]
    fn uniform_noise_margin_matches_hand_formula() {
        for c in 2..6 {
            for r in [0.0, 0.1, 0.35, 0.6] {
                let t = uniform_noise_matrix(c, r).unwrap();
                let row = t.row(0, 0).unwrap();
                let margin = row.prob(0) - row.prob(c - 1);
                let expected = 1.0 - r - r / (c - 1) as f64;
                assert!((margin - expected).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn enumeration_is_deterministic() {
        let spec = ClassSpec::UniformNoise {
            rates: vec![0.3, 0.1, 0.2],
        };
        let a = build_class(&spec, &labels(3), &BuildOptions::default()).unwrap();
        let b = build_class(&spec, &labels(3), &BuildOptions::default()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.get(0).unwrap().param("rate"), Some(0.3));
    }

    #[test]
    fn floor_tracks_smallest_positive_entry() {
        let t = TransitionHypothesis::constant(&[vec![0.0, 0.25, 0.75], vec![0.5, 0.5, 0.0]]).unwrap();
        assert_eq!(t.entry_floor(), 0.25);
        assert_eq!(t.zero_entry(1), Some((0, 0, 0)));
    }
}
