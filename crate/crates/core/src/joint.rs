//! Two annotation sources mixed into one stream. With probability `lambda`
//! an annotation comes from the first source, otherwise from the second.
//! In distinguished mode the learner knows which source produced each
//! annotation (outcomes are tagged `1:o` / `2:o`); in mixed mode outcomes
//! with the same name are merged and their mass summed.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::losses::Loss;
use crate::scenario::{HypothesisClass, Labeling, Scenario};
use crate::separation::{evidence_bound, family_kl, separation_degree_for, EvidenceReport, EvidenceTable};
use crate::spaces::{Distribution, DivergenceValue, FiniteSpace};
use crate::transition::{
    build_class, BuildOptions, ClassSpec, LinearConstraint, Rows, TransitionClass, TransitionHypothesis,
};

/// Tolerance for the additivity checks.
pub const JOINT_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct JointSpec {
    pub first: TransitionClass,
    pub second: TransitionClass,
    pub lambda: f64,
    pub distinguished: bool,
    pub constraint: Option<LinearConstraint>,
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::BadParams(format!("lambda = {lambda} must lie strictly between 0 and 1")));
    }
    Ok(())
}

/// Composed outcome space and, for each source, where its outcomes land.
fn compose_outcomes(a: &FiniteSpace, b: &FiniteSpace, distinguished: bool) -> Result<(FiniteSpace, Vec<usize>, Vec<usize>)> {
    if distinguished {
        let names = a
            .names()
            .iter()
            .map(|o| format!("1:{o}"))
            .chain(b.names().iter().map(|o| format!("2:{o}")));
        let space = FiniteSpace::new(names)?;
        let first = (0..a.size()).collect();
        let second = (a.size()..a.size() + b.size()).collect();
        return Ok((space, first, second));
    }
    let mut names: Vec<String> = a.names().to_vec();
    let mut second = Vec::with_capacity(b.size());
    for o in b.names() {
        match names.iter().position(|n| n == o) {
            Some(k) => second.push(k),
            None => {
                second.push(names.len());
                names.push(o.clone());
            }
        }
    }
    Ok((FiniteSpace::new(names)?, (0..a.size()).collect(), second))
}

fn joint_row(
    r1: &Distribution,
    r2: &Distribution,
    lambda: f64,
    s: usize,
    map1: &[usize],
    map2: &[usize],
) -> Result<Distribution> {
    let mut w = vec![0.0; s];
    for (o, &p) in r1.probs().iter().enumerate() {
        w[map1[o]] += lambda * p;
    }
    for (o, &p) in r2.probs().iter().enumerate() {
        w[map2[o]] += (1.0 - lambda) * p;
    }
    Distribution::from_weights(&w)
}

/// Every pair `(T1, T2)` passing the constraint, in `(index1, index2)`
/// order. Row `(x, i)` is `lambda (T1(x))_i ⊕ (1 - lambda) (T2(x))_i`.
pub fn compose_joint(spec: &JointSpec) -> Result<TransitionClass> {
    check_lambda(spec.lambda)?;
    let (a, b) = (&spec.first, &spec.second);
    if a.labels() != b.labels() {
        return Err(Error::SpaceMismatch("the two sources use different label spaces".into()));
    }
    let instances = match (a.instance_count(), b.instance_count()) {
        (Some(n), Some(m)) if n != m => {
            return Err(Error::SpaceMismatch(format!(
                "sources cover {n} and {m} instances"
            )))
        }
        (n, m) => n.or(m),
    };
    let (outcomes, map1, map2) = compose_outcomes(a.outcomes(), b.outcomes(), spec.distinguished)?;
    let s = outcomes.size();
    let c = a.labels().size();

    let mut members = Vec::new();
    for t1 in a.members() {
        for t2 in b.members() {
            let table = |x: usize| -> Result<Vec<Distribution>> {
                (0..c)
                    .map(|i| joint_row(t1.r(x, i), t2.r(x, i), spec.lambda, s, &map1, &map2))
                    .collect()
            };
            let rows = match instances {
                None => Rows::Constant(table(0)?),
                Some(n) => Rows::PerInstance((0..n).map(table).collect::<Result<_>>()?),
            };
            let params = t1
                .params()
                .iter()
                .map(|(k, v)| (format!("1.{k}"), *v))
                .chain(t2.params().iter().map(|(k, v)| (format!("2.{k}"), *v)))
                .collect();
            let member = TransitionHypothesis::from_rows(rows)?.with_params(params);
            if let Some(constraint) = &spec.constraint {
                if !constraint.is_satisfied(&member)? {
                    continue;
                }
            }
            members.push(member);
        }
    }
    if members.is_empty() {
        return Err(Error::EmptyAfterConstraint);
    }
    TransitionClass::new(a.labels().clone(), outcomes, members, None)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointwiseSeparation {
    pub x: usize,
    pub joint: DivergenceValue,
    pub first: DivergenceValue,
    pub second: DivergenceValue,
    pub slack: f64,
}

/// `γ_{i→j}` of the joint class next to `λ γ_{i→j,1} + (1 - λ) γ_{i→j,2}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoFreeSeparationReport {
    pub i: usize,
    pub j: usize,
    pub lambda: f64,
    pub distinguished: bool,
    pub joint: DivergenceValue,
    pub first: DivergenceValue,
    pub second: DivergenceValue,
    pub combination: DivergenceValue,
    /// `combination - joint`; zero when both are infinite.
    pub slack: f64,
    /// `joint ≤ combination` within [`JOINT_TOLERANCE`].
    pub inequality_holds: bool,
    /// `|slack| ≤` [`JOINT_TOLERANCE`].
    pub equality: bool,
    /// The same comparison at each constrained instance separately.
    pub pointwise: Vec<PointwiseSeparation>,
    pub pointwise_inequality_holds: bool,
    pub pointwise_equality: bool,
}

fn combine(lambda: f64, a: DivergenceValue, b: DivergenceValue) -> DivergenceValue {
    if a.is_infinite() || b.is_infinite() {
        DivergenceValue::INFINITE
    } else {
        DivergenceValue::finite(lambda * a.value() + (1.0 - lambda) * b.value())
    }
}

fn slack_of(joint: DivergenceValue, combination: DivergenceValue) -> f64 {
    if joint.is_infinite() && combination.is_infinite() {
        0.0
    } else {
        combination.value() - joint.value()
    }
}

/// Compares the pairwise separation of the unconstrained joint class with
/// the mixture of the two sources' values. Any constraint on `spec` is
/// ignored.
pub fn verify_no_free_separation(
    spec: &JointSpec,
    labeling: &Labeling,
    i: usize,
    j: usize,
) -> Result<NoFreeSeparationReport> {
    let unconstrained = JointSpec {
        constraint: None,
        ..spec.clone()
    };
    let joint_class = compose_joint(&unconstrained)?;
    let joint = crate::separation::pairwise_separation_for(labeling, &joint_class, i, j)?.value;
    let first = crate::separation::pairwise_separation_for(labeling, &spec.first, i, j)?.value;
    let second = crate::separation::pairwise_separation_for(labeling, &spec.second, i, j)?.value;
    let combination = combine(spec.lambda, first, second);
    let slack = slack_of(joint, combination);

    let mut pointwise = Vec::new();
    for x in labeling.support() {
        if labeling.h0()[x] != i || !labeling.hclass().reachable(x)[j] {
            continue;
        }
        let pj = family_kl(&joint_class, x, i, j).0;
        let p1 = family_kl(&spec.first, x, i, j).0;
        let p2 = family_kl(&spec.second, x, i, j).0;
        let slack = slack_of(pj, combine(spec.lambda, p1, p2));
        pointwise.push(PointwiseSeparation {
            x,
            joint: pj,
            first: p1,
            second: p2,
            slack,
        });
    }
    Ok(NoFreeSeparationReport {
        i,
        j,
        lambda: spec.lambda,
        distinguished: spec.distinguished,
        joint,
        first,
        second,
        combination,
        slack,
        inequality_holds: slack >= -JOINT_TOLERANCE,
        equality: slack.abs() <= JOINT_TOLERANCE,
        pointwise_inequality_holds: pointwise.iter().all(|p| p.slack >= -JOINT_TOLERANCE),
        pointwise_equality: pointwise.iter().all(|p| p.slack.abs() <= JOINT_TOLERANCE),
        pointwise,
    })
}

/// `k / 10` for `k = 0..=10`.
pub fn default_rate_grid() -> Vec<f64> {
    (0..=10).map(|k| f64::from(k) / 10.0).collect()
}

/// The binary "learning from difference" construction: two label-noise
/// annotators whose rates are individually unrestricted but whose
/// difference is bounded by `gap < 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct DifferenceScenario {
    pub scenario: Scenario,
    pub lambda: f64,
    pub gap: f64,
    pub evidence: EvidenceTable,
    pub evidence_report: EvidenceReport,
    /// Separation degree of each source's unconstrained rate grid alone.
    pub marginal_gammas: [DivergenceValue; 2],
}

impl DifferenceScenario {
    /// The evidence bound is positive while neither source is separated
    /// on its own.
    pub fn verified(&self) -> bool {
        self.evidence_report.bound.is_some_and(|b| b > 0.0)
            && self.marginal_gammas.iter().all(|g| g.value() == 0.0)
    }
}

pub fn difference_scenario(lambda: f64, gap: f64, rates: &[f64]) -> Result<DifferenceScenario> {
    check_lambda(lambda)?;
    if !(gap < 0.0) {
        return Err(Error::BadParams(format!("the rate gap must be negative, got {gap}")));
    }
    let labels = FiniteSpace::indexed("y", 2)?;
    let source = ClassSpec::UniformNoise { rates: rates.to_vec() };
    let mut terms = std::collections::BTreeMap::new();
    terms.insert("1.rate".to_string(), 1.0);
    terms.insert("2.rate".to_string(), -1.0);
    let spec = ClassSpec::Joint {
        lambda,
        distinguished: true,
        first: Box::new(source.clone()),
        second: Box::new(source.clone()),
        constraint: Some(LinearConstraint { terms, bound: gap }),
    };
    let opts = BuildOptions::default();
    let class = build_class(&spec, &labels, &opts)?;
    let labeling = Labeling::new(
        FiniteSpace::indexed("x", 2)?,
        labels.clone(),
        Distribution::uniform(2),
        vec![0, 1],
        HypothesisClass::all_functions(2, 2)?,
    )?;
    let marginal = build_class(&source, &labels, &opts)?;
    let marginal_gamma = separation_degree_for(&labeling, &marginal).gamma;
    let scenario = Scenario::with_member(labeling, class, 0, Loss::CrossEntropy)?;

    // Φ = e_1 / λ − e_3 / (1 − λ) on the tagged space (1:y0, 1:y1, 2:y0, 2:y1)
    let u = vec![1.0 / lambda, 0.0, -1.0 / (1.0 - lambda), 0.0];
    let mut evidence = EvidenceTable::new();
    evidence.insert((1, 0), u.iter().map(|v| -v).collect());
    evidence.insert((0, 1), u);
    let evidence_report = evidence_bound(&scenario, &evidence)?;
    Ok(DifferenceScenario {
        scenario,
        lambda,
        gap,
        evidence,
        evidence_report,
        marginal_gammas: [marginal_gamma, marginal_gamma],
    })
}
