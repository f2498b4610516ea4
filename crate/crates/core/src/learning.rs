//! Empirical risk minimization over the finite `H × T` grid, learning
//! curves over seeded trials, and the generalization bound they are
//! checked against.

use rayon::prelude::*;
use serde::Serialize;

use crate::complexity::{dimension_for_bound, gamma_bar, DimensionSource};
use crate::error::{Error, Result};
use crate::losses::Loss;
use crate::scenario::{per_instance_sum, Dataset, Scenario};
use crate::separation::{concentration_degree, identifiability_level, separation_degree};
use crate::spaces::serialize_extended;

/// Largest `|H| · |T| · |X|` for which `η` is computed exactly when
/// assembling bound inputs.
pub const EXACT_ETA_CAP: usize = 1 << 24;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErmResult {
    pub h_index: usize,
    pub h_star: Vec<usize>,
    pub t_star: usize,
    #[serde(serialize_with = "serialize_extended")]
    pub empirical_risk: f64,
    pub true_classification_risk: f64,
    /// Number of `(h, T)` pairs attaining the minimum, the returned one
    /// included.
    pub ties: usize,
}

/// Summed losses per `(t, x, label)` over the dataset's `(x, o)` counts.
fn loss_sums(scn: &Scenario, counts: &[u64]) -> Vec<f64> {
    let (n, c, s) = (scn.n(), scn.c(), scn.s());
    let loss = scn.loss();
    let mut table = vec![0.0; scn.tclass().len() * n * c];
    for (ti, t) in scn.tclass().members().iter().enumerate() {
        for x in 0..n {
            let cx = &counts[x * s..(x + 1) * s];
            for label in 0..c {
                table[(ti * n + x) * c + label] = per_instance_sum(cx, |o| loss.eval(label, t, x, o));
            }
        }
    }
    table
}

/// Full scan of `H × T` in `(hypothesis index, transition index)` order;
/// the first strict minimizer wins. Candidates with infinite empirical risk
/// rank after every finite one.
pub fn erm(scn: &Scenario, dataset: &Dataset) -> Result<ErmResult> {
    if dataset.m() == 0 {
        return Err(Error::EmptyDataset);
    }
    let (n, c) = (scn.n(), scn.c());
    let counts = dataset.counts(n, scn.s())?;
    let sums = loss_sums(scn, &counts);
    let m = dataset.m() as f64;

    let mut best = (f64::INFINITY, 0usize, 0usize);
    let mut ties = 0usize;
    let mut first = true;
    for (hk, h) in scn.hclass().tables().iter().enumerate() {
        for t in 0..scn.tclass().len() {
            let base = t * n;
            let mut total = 0.0;
            for x in 0..n {
                total += sums[(base + x) * c + h[x]];
            }
            let risk = total / m;
            if first || risk < best.0 {
                best = (risk, hk, t);
                ties = 1;
                first = false;
            } else if risk == best.0 {
                ties += 1;
            }
        }
    }
    let h_star = scn.hclass().get(best.1).clone();
    Ok(ErmResult {
        true_classification_risk: scn.classification_risk(&h_star)?,
        h_index: best.1,
        h_star,
        t_star: best.2,
        empirical_risk: best.0,
        ties,
    })
}

/// `(2b/η)(sqrt(2Γ̄_m(d)/m) + 4Γ̄_m(d)/m + sqrt(2 ln(4/δ)/m))`.
pub fn theorem_bound(b: f64, eta: f64, d: u64, m: u64, delta: f64) -> Result<f64> {
    if !(b > 0.0 && b.is_finite()) {
        return Err(Error::BadParams(format!("b = {b} must be positive and finite")));
    }
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::BadParams(format!("eta = {eta} must be positive and finite")));
    }
    check_delta(delta)?;
    if m == 0 {
        return Err(Error::BadParams("m must be at least 1".into()));
    }
    let g = gamma_bar(m, d)?;
    let mf = m as f64;
    Ok(2.0 * b / eta * ((2.0 * g / mf).sqrt() + 4.0 * g / mf + (2.0 * (4.0 / delta).ln() / mf).sqrt()))
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::BadParams(format!("delta = {delta} must lie strictly between 0 and 1")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EtaSource {
    /// Exact identifiability level by grid enumeration.
    Exact,
    /// Separation degree, a lower bound for cross-entropy.
    Gamma,
    /// Concentration degree, a lower bound for the concentration loss.
    GammaC,
    /// Every hypothesis agrees with `h0` on the support.
    NoWrongHypothesis,
}

/// Everything the bound needs besides `m`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundInputs {
    /// Loss ceiling; `inf` when the cross-entropy is unbounded on the data.
    #[serde(serialize_with = "serialize_extended")]
    pub b: f64,
    #[serde(serialize_with = "serialize_extended")]
    pub eta: f64,
    pub eta_source: EtaSource,
    pub d: u64,
    pub d_source: DimensionSource,
    pub delta: f64,
}

impl BoundInputs {
    /// The bound at sample size `m`, with the degenerate cases spelled out:
    /// `+inf` when `b` is unbounded or `η = 0`, and `0` when no wrong
    /// hypothesis exists.
    pub fn bound(&self, m: u64) -> Result<f64> {
        if self.eta_source == EtaSource::NoWrongHypothesis || self.eta == f64::INFINITY {
            return Ok(0.0);
        }
        if self.b.is_infinite() || self.eta <= 0.0 {
            return Ok(f64::INFINITY);
        }
        theorem_bound(self.b, self.eta, self.d, m, self.delta)
    }
}

/// Computes `b`, `η` (exact on small grids, else its lower bound `γ` or
/// `γ_C`) and `d` (exact on small grids, else a proven upper bound).
pub fn bound_inputs(scn: &Scenario, delta: f64) -> Result<BoundInputs> {
    check_delta(delta)?;
    let b = match scn.loss_ceiling() {
        Ok(b) => b,
        Err(Error::UnboundedLoss { .. }) => f64::INFINITY,
        Err(e) => return Err(e),
    };
    let work = scn
        .hclass()
        .len()
        .saturating_mul(scn.tclass().len())
        .saturating_mul(scn.n());
    let (eta, eta_source) = if work <= EXACT_ETA_CAP {
        match identifiability_level(scn) {
            Ok(r) => (r.eta.max(0.0), EtaSource::Exact),
            Err(Error::NoWrongHypothesis) => (f64::INFINITY, EtaSource::NoWrongHypothesis),
            Err(e) => return Err(e),
        }
    } else {
        match scn.loss() {
            Loss::CrossEntropy => (separation_degree(scn).gamma.value(), EtaSource::Gamma),
            Loss::Concentration(sets) => (concentration_degree(scn, sets)?.gamma_c.max(0.0), EtaSource::GammaC),
        }
    };
    let (d, d_source) = dimension_for_bound(scn)?;
    Ok(BoundInputs {
        b,
        eta,
        eta_source,
        d,
        d_source,
        delta,
    })
}

/// One `(m, trial)` run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveRecord {
    pub m: u64,
    pub trial: u64,
    pub seed: u64,
    pub risk: f64,
    #[serde(serialize_with = "serialize_extended")]
    pub bound: f64,
    #[serde(serialize_with = "serialize_extended")]
    pub b: f64,
    #[serde(serialize_with = "serialize_extended")]
    pub eta: f64,
    pub d: u64,
    pub delta: f64,
    pub ties: usize,
}

/// Seed of trial `trial`; shared across sample sizes so curves are paired.
pub fn trial_seed(base_seed: u64, trial: u64) -> u64 {
    base_seed.wrapping_add(trial)
}

/// Runs `trials` ERM fits at each `m`; records are ordered by `(m, trial)`.
pub fn learning_curve(
    scn: &Scenario,
    m_grid: &[u64],
    trials: u64,
    base_seed: u64,
    inputs: &BoundInputs,
) -> Result<Vec<CurveRecord>> {
    if trials == 0 {
        return Err(Error::BadParams("trials must be at least 1".into()));
    }
    if m_grid.is_empty() {
        return Err(Error::BadParams("the sample-size grid is empty".into()));
    }
    if m_grid[0] == 0 || m_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::BadParams("sample sizes must be positive and strictly ascending".into()));
    }
    let jobs: Vec<(u64, u64)> = m_grid
        .iter()
        .flat_map(|&m| (0..trials).map(move |t| (m, t)))
        .collect();
    jobs.par_iter()
        .map(|&(m, trial)| {
            let seed = trial_seed(base_seed, trial);
            let data = scn.sample_dataset(m as usize, seed)?;
            let fit = erm(scn, &data)?;
            Ok(CurveRecord {
                m,
                trial,
                seed,
                risk: fit.true_classification_risk,
                bound: inputs.bound(m)?,
                b: inputs.b,
                eta: inputs.eta,
                d: inputs.d,
                delta: inputs.delta,
                ties: fit.ties,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageReport {
    pub m: u64,
    pub trials: u64,
    pub covered: u64,
    pub fraction: f64,
    #[serde(serialize_with = "serialize_extended")]
    pub bound: f64,
    pub inputs: BoundInputs,
}

/// Fraction of trials whose classification risk is at most the bound.
pub fn bound_coverage(scn: &Scenario, m: u64, delta: f64, trials: u64, base_seed: u64) -> Result<CoverageReport> {
    if trials == 0 {
        return Err(Error::BadParams("trials must be at least 1".into()));
    }
    let inputs = bound_inputs(scn, delta)?;
    coverage_with(scn, m, trials, base_seed, inputs)
}

pub fn coverage_with(scn: &Scenario, m: u64, trials: u64, base_seed: u64, inputs: BoundInputs) -> Result<CoverageReport> {
    let records = learning_curve(scn, &[m], trials, base_seed, &inputs)?;
    let bound = inputs.bound(m)?;
    let covered = records.iter().filter(|r| r.risk <= bound).count() as u64;
    Ok(CoverageReport {
        m,
        trials,
        covered,
        fraction: covered as f64 / trials as f64,
        bound,
        inputs,
    })
}

/// Per-`m` aggregate of a curve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveSummary {
    pub m: u64,
    pub mean_risk: f64,
    pub q05: f64,
    pub q95: f64,
    #[serde(serialize_with = "serialize_extended")]
    pub bound: f64,
}

/// Mean and the 5% / 95% empirical quantiles (nearest rank) per `m`.
pub fn summarize(records: &[CurveRecord]) -> Vec<CurveSummary> {
    let mut out = Vec::new();
    let mut start = 0;
    while start < records.len() {
        let m = records[start].m;
        let end = records[start..]
            .iter()
            .position(|r| r.m != m)
            .map_or(records.len(), |k| start + k);
        let group = &records[start..end];
        let mut risks: Vec<f64> = group.iter().map(|r| r.risk).collect();
        risks.sort_by(f64::total_cmp);
        let rank = |q: f64| {
            let k = ((q * risks.len() as f64).ceil() as usize).clamp(1, risks.len());
            risks[k - 1]
        };
        out.push(CurveSummary {
            m,
            mean_risk: risks.iter().sum::<f64>() / risks.len() as f64,
            q05: rank(0.05),
            q95: rank(0.95),
            bound: group[0].bound,
        });
        start = end;
    }
    out
}
