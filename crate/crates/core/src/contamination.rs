//! Adversarial contamination: replace at most `floor(eps * n)` rows of a
//! clean sample after it has been drawn.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::SampleMatrix;
use crate::rng::Stream;

/// How replaced rows are rewritten.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum AdversaryKind {
    #[default]
    None,
    /// Every entry becomes `+-magnitude` with an independent fair sign.
    LargeOutlier { magnitude: f64 },
    /// Each coordinate moves by `-sign(clean column mean) * magnitude`.
    OppositeShift { magnitude: f64 },
    /// Replaced rows alternate between `+magnitude` and `-magnitude` in every coordinate.
    MaxSpread { magnitude: f64 },
}

/// Which rows the adversary rewrites.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum TargetRows {
    /// Rows with the largest sup-norm (ties by index).
    #[default]
    LargestLinf,
    /// A uniformly random subset.
    Random,
    /// The first rows of the sample.
    Leading,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct AdversaryPolicy {
    #[serde(default)]
    pub kind: AdversaryKind,
    #[serde(default)]
    pub target_rows: TargetRows,
    /// Cap on replaced rows; `None` uses the whole budget `floor(eps * n)`.
    #[serde(default)]
    pub max_rows: Option<usize>,
}

impl AdversaryPolicy {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn new(kind: AdversaryKind) -> Self {
        AdversaryPolicy { kind, ..Self::default() }
    }

    pub fn with_targets(mut self, target_rows: TargetRows) -> Self {
        self.target_rows = target_rows;
        self
    }
}

/// A contaminated sample together with its clean source.
#[derive(Debug, Clone, PartialEq)]
pub struct ContaminatedSample {
    pub values: SampleMatrix,
    pub clean: SampleMatrix,
    /// `true` marks a replaced row.
    pub mask: Vec<bool>,
    pub epsilon: f64,
}

impl ContaminatedSample {
    /// Wrap a sample with no contamination.
    pub fn clean(sample: SampleMatrix) -> Self {
        let n = sample.n();
        ContaminatedSample { values: sample.clone(), clean: sample, mask: vec![false; n], epsilon: 0.0 }
    }

    pub fn n(&self) -> usize {
        self.values.n()
    }

    pub fn d(&self) -> usize {
        self.values.d()
    }

    pub fn replaced(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }
}

/// `floor(eps * n)`, robust to decimal epsilons such as `0.29 * 100`.
pub fn contamination_budget(epsilon: f64, n: usize) -> usize {
    let x = epsilon * n as f64;
    let r = x.round();
    if (x - r).abs() <= 1e-9 * r.max(1.0) {
        r as usize
    } else {
        x.floor() as usize
    }
}

pub fn check_epsilon(epsilon: f64) -> Result<()> {
    if (0.0..0.5).contains(&epsilon) {
        Ok(())
    } else {
        Err(Error::EpsilonOutOfRange(epsilon))
    }
}

/// Replace `min(floor(eps * n), policy cap)` rows according to `policy`.
pub fn contaminate(clean: SampleMatrix, epsilon: f64, policy: &AdversaryPolicy, stream: Stream) -> Result<ContaminatedSample> {
    check_epsilon(epsilon)?;
    let n = clean.n();
    let d = clean.d();
    let mut budget = contamination_budget(epsilon, n);
    if let Some(cap) = policy.max_rows {
        budget = budget.min(cap);
    }
    if matches!(policy.kind, AdversaryKind::None) {
        budget = 0;
    }
    let mut out = ContaminatedSample { values: clean.clone(), clean, mask: vec![false; n], epsilon };
    if budget == 0 {
        return Ok(out);
    }
    let mut rng = stream.rng();
    let rows = choose_rows(&out.clean, budget, policy.target_rows, &mut rng);
    match policy.kind {
        AdversaryKind::None => {}
        AdversaryKind::LargeOutlier { magnitude } => {
            for &i in &rows {
                for x in out.values.row_mut(i) {
                    *x = if rng.random::<bool>() { magnitude } else { -magnitude };
                }
            }
        }
        AdversaryKind::OppositeShift { magnitude } => {
            let shifts: Vec<f64> = (0..d)
                .map(|j| {
                    let m = crate::numeric::mean(&out.clean.column(j));
                    if m >= 0.0 {
                        -magnitude
                    } else {
                        magnitude
                    }
                })
                .collect();
            for &i in &rows {
                for (x, s) in out.values.row_mut(i).iter_mut().zip(&shifts) {
                    *x += s;
                }
            }
        }
        AdversaryKind::MaxSpread { magnitude } => {
            for (r, &i) in rows.iter().enumerate() {
                let v = if r % 2 == 0 { magnitude } else { -magnitude };
                out.values.row_mut(i).fill(v);
            }
        }
    }
    for &i in &rows {
        out.mask[i] = true;
    }
    Ok(out)
}

fn choose_rows(clean: &SampleMatrix, count: usize, target: TargetRows, rng: &mut impl Rng) -> Vec<usize> {
    let n = clean.n();
    match target {
        TargetRows::Leading => (0..count).collect(),
        TargetRows::Random => {
            let mut idx: Vec<usize> = (0..n).collect();
            idx.partial_shuffle(rng, count);
            idx.truncate(count);
            idx
        }
        TargetRows::LargestLinf => {
            let norms: Vec<f64> = (0..n).map(|i| clean.row(i).iter().fold(0.0, |a: f64, x| a.max(x.abs()))).collect();
            let mut idx: Vec<usize> = (0..n).collect();
            idx.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]).then(a.cmp(&b)));
            idx.truncate(count);
            idx
        }
    }
}
