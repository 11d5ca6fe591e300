use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::LabelRaster;

/// How predicted clusters are matched to truth classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mapping {
    /// Each cluster goes to the truth class it overlaps most.
    Auto,
    /// Truth class per cluster id.
    Given(Vec<u32>),
}

/// Truth-by-truth confusion counts after cluster mapping.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfusionMatrix {
    /// `counts[t][p]`: pixels of truth class `t` mapped to class `p`.
    pub counts: Vec<Vec<u64>>,
    /// Truth class of every predicted cluster.
    pub mapping: Vec<u32>,
    pub names: Vec<String>,
}

impl ConfusionMatrix {
    pub fn truth_count(&self) -> usize {
        self.counts.len()
    }

    pub fn row_total(&self, t: usize) -> u64 {
        self.counts[t].iter().sum()
    }

    /// Per-class accuracy in percent (0 for classes without pixels).
    pub fn class_accuracy(&self) -> Vec<f64> {
        (0..self.truth_count())
            .map(|t| {
                let total = self.row_total(t);
                if total == 0 {
                    0.0
                } else {
                    100.0 * self.counts[t][t] as f64 / total as f64
                }
            })
            .collect()
    }

    /// Mean of the per-class accuracies over classes that have pixels.
    pub fn average_accuracy(&self) -> f64 {
        let acc = self.class_accuracy();
        let present: Vec<f64> = (0..self.truth_count())
            .filter(|&t| self.row_total(t) > 0)
            .map(|t| acc[t])
            .collect();
        if present.is_empty() {
            0.0
        } else {
            present.iter().sum::<f64>() / present.len() as f64
        }
    }

    /// Share of all counted pixels on the diagonal, in percent.
    pub fn overall_accuracy(&self) -> f64 {
        let total: u64 = (0..self.truth_count()).map(|t| self.row_total(t)).sum();
        let diag: u64 = (0..self.truth_count()).map(|t| self.counts[t][t]).sum();
        if total == 0 {
            0.0
        } else {
            100.0 * diag as f64 / total as f64
        }
    }

    /// Row-normalised percentages with two decimals, one row per truth class.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("truth");
        for n in &self.names {
            s.push_str(&format!(",{n}"));
        }
        s.push_str(",accuracy\n");
        let acc = self.class_accuracy();
        for t in 0..self.truth_count() {
            s.push_str(&self.names[t]);
            let total = self.row_total(t);
            for &c in &self.counts[t] {
                let pct = if total == 0 {
                    0.0
                } else {
                    100.0 * c as f64 / total as f64
                };
                s.push_str(&format!(",{pct:.2}"));
            }
            s.push_str(&format!(",{:.2}\n", acc[t]));
        }
        s.push_str(&format!(
            "average,{}{:.2}\n",
            ",".repeat(self.truth_count()),
            self.average_accuracy()
        ));
        s.push_str(&format!(
            "overall,{}{:.2}\n",
            ",".repeat(self.truth_count()),
            self.overall_accuracy()
        ));
        s
    }
}

/// Confusion matrix of `predicted` against `truth`. Pixels whose truth is
/// `ignore` are left out of every count.
pub fn evaluate(
    predicted: &LabelRaster,
    truth: &LabelRaster,
    names: &[String],
    ignore: Option<u32>,
    mapping: &Mapping,
) -> Result<ConfusionMatrix> {
    truth.ensure_shape(predicted.shape())?;
    let n_truth = names.len();
    if truth
        .as_slice()
        .iter()
        .any(|&t| t as usize >= n_truth && Some(t) != ignore)
    {
        return Err(Error::InvalidParameter(
            "truth label without a class name".into(),
        ));
    }
    let n_pred = predicted
        .as_slice()
        .iter()
        .copied()
        .max()
        .map_or(0, |m| m as usize + 1);
    let mut overlap = vec![vec![0u64; n_truth]; n_pred];
    for (&p, &t) in predicted.as_slice().iter().zip(truth.as_slice()) {
        if Some(t) != ignore {
            overlap[p as usize][t as usize] += 1;
        }
    }
    let map: Vec<u32> = match mapping {
        Mapping::Auto => overlap
            .iter()
            .map(|row| {
                let mut best = 0;
                for (t, &v) in row.iter().enumerate() {
                    if v > row[best] {
                        best = t;
                    }
                }
                best as u32
            })
            .collect(),
        Mapping::Given(m) => {
            if m.len() < n_pred || m.iter().any(|&t| t as usize >= n_truth) {
                return Err(Error::InvalidParameter(
                    "mapping does not cover every cluster".into(),
                ));
            }
            m.clone()
        }
    };
    let mut counts = vec![vec![0u64; n_truth]; n_truth];
    for (p, row) in overlap.iter().enumerate() {
        for (t, &v) in row.iter().enumerate() {
            counts[t][map[p] as usize] += v;
        }
    }
    Ok(ConfusionMatrix {
        counts,
        mapping: map,
        names: names.to_vec(),
    })
}
