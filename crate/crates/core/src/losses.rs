//! Annotation losses: cross-entropy of the induced row, and the
//! transition-independent concentration (generalized zero-one) loss.

use crate::error::{Error, Result};
use crate::transition::TransitionHypothesis;

/// Concentration sets `S_1..S_c ⊆ O`, stored as membership masks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConcentrationSets {
    masks: Vec<Vec<bool>>,
}

impl ConcentrationSets {
    /// `sets[i]` lists the outcome indices in `S_i`; `outcomes` is `|O|`.
    pub fn new(sets: &[Vec<usize>], outcomes: usize) -> Result<Self> {
        let mut masks = Vec::with_capacity(sets.len());
        for (label, set) in sets.iter().enumerate() {
            let mut mask = vec![false; outcomes];
            for &o in set {
                if o >= outcomes {
                    return Err(Error::BadSet { label, outcome: o });
                }
                mask[o] = true;
            }
            masks.push(mask);
        }
        Ok(Self { masks })
    }

    pub fn from_masks(masks: Vec<Vec<bool>>) -> Self {
        Self { masks }
    }

    pub fn labels(&self) -> usize {
        self.masks.len()
    }

    pub fn outcomes(&self) -> usize {
        self.masks.first().map_or(0, Vec::len)
    }

    pub fn mask(&self, label: usize) -> &[bool] {
        &self.masks[label]
    }

    pub fn contains(&self, label: usize, outcome: usize) -> bool {
        self.masks[label][outcome]
    }

    /// Outcome indices of `S_label`.
    pub fn members(&self, label: usize) -> Vec<usize> {
        self.masks[label]
            .iter()
            .enumerate()
            .filter(|(_, &m)| m)
            .map(|(o, _)| o)
            .collect()
    }

    pub(crate) fn check_shape(&self, labels: usize, outcomes: usize) -> Result<()> {
        if self.masks.len() != labels {
            return Err(Error::LengthMismatch {
                expected: labels,
                got: self.masks.len(),
            });
        }
        if let Some(mask) = self.masks.iter().find(|m| m.len() != outcomes) {
            return Err(Error::BadSet {
                label: 0,
                outcome: mask.len(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Loss {
    CrossEntropy,
    Concentration(ConcentrationSets),
}

impl Loss {
    /// `ℓ(ŷ, T, (x, o))` without index checks. May be `+inf`.
    #[inline]
    pub fn eval(&self, y_hat: usize, t: &TransitionHypothesis, x: usize, o: usize) -> f64 {
        match self {
            Loss::CrossEntropy => {
                let p = t.r(x, y_hat).prob(o);
                if p <= 0.0 {
                    f64::INFINITY
                } else {
                    -p.ln()
                }
            }
            Loss::Concentration(sets) => {
                if sets.contains(y_hat, o) {
                    0.0
                } else {
                    1.0
                }
            }
        }
    }

    pub fn depends_on_transition(&self) -> bool {
        matches!(self, Loss::CrossEntropy)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Loss::CrossEntropy => "cross_entropy",
            Loss::Concentration(_) => "concentration",
        }
    }

    pub fn sets(&self) -> Option<&ConcentrationSets> {
        match self {
            Loss::CrossEntropy => None,
            Loss::Concentration(s) => Some(s),
        }
    }
}

/// A loss together with its ceiling `b`.
#[derive(Debug, Clone, PartialEq)]
pub struct LossSpec {
    pub loss: Loss,
    pub ceiling: f64,
}

/// `-ln (T(x))_ŷ(o)`, `+inf` on a zero entry.
pub fn cross_entropy_loss(y_hat: usize, t: &TransitionHypothesis, x: usize, o: usize) -> Result<f64> {
    let row = t.row(x, y_hat)?;
    if o >= row.len() {
        return Err(Error::IndexOutOfRange {
            what: "outcome",
            index: o,
            size: row.len(),
        });
    }
    Ok(Loss::CrossEntropy.eval(y_hat, t, x, o))
}

/// `1{o ∉ S_ŷ}`.
pub fn concentration_loss(y_hat: usize, sets: &ConcentrationSets, o: usize) -> Result<f64> {
    if y_hat >= sets.labels() {
        return Err(Error::IndexOutOfRange {
            what: "label",
            index: y_hat,
            size: sets.labels(),
        });
    }
    if o >= sets.outcomes() {
        return Err(Error::BadSet {
            label: y_hat,
            outcome: o,
        });
    }
    Ok(if sets.contains(y_hat, o) { 0.0 } else { 1.0 })
}
