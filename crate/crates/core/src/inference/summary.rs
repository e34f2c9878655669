//! Summaries of scalar functionals over a collection of draws.

use serde::{Deserialize, Serialize};

use super::cramer::cramers_v_model;
use super::loglinear::loglinear_for_subset;
use crate::error::{Error, Result};
use crate::model::SpParafacParams;
use crate::tensor::{cell_prob_marginal, univariate_marginal};

/// Histogram bins used when none are requested.
pub const DEFAULT_BINS: usize = 50;

/// Equal-width histogram over `[edges[0], edges[bins]]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl Histogram {
    /// Bins `values` over their range. A constant sample gets a single
    /// zero-width bin.
    pub fn from_values(values: &[f64], bins: usize) -> Result<Self> {
        if bins == 0 {
            return Err(Error::invalid("histogram needs at least one bin"));
        }
        if values.is_empty() {
            return Err(Error::invalid("histogram of an empty sample"));
        }
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !lo.is_finite() || !hi.is_finite() {
            return Err(Error::Numerical("histogram of non-finite values".into()));
        }
        if lo == hi {
            return Ok(Self { edges: vec![lo, hi], counts: vec![values.len() as u64] });
        }
        let width = (hi - lo) / bins as f64;
        let mut edges: Vec<f64> = (0..bins).map(|b| lo + width * b as f64).collect();
        edges.push(hi);
        let mut counts = vec![0u64; bins];
        for &v in values {
            let b = (((v - lo) / width) as usize).min(bins - 1);
            counts[b] += 1;
        }
        Ok(Self { edges, counts })
    }

    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    /// `(bin_left, bin_right, count)` rows.
    pub fn rows(&self) -> impl Iterator<Item = (f64, f64, u64)> + '_ {
        self.counts
            .iter()
            .enumerate()
            .map(|(b, &c)| (self.edges[b], self.edges[b + 1], c))
    }
}

/// Moments, quantiles and a histogram of a scalar sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryReport {
    pub count: usize,
    pub mean: f64,
    pub sd: f64,
    pub q025: f64,
    pub q50: f64,
    pub q975: f64,
    pub min: f64,
    pub max: f64,
    /// Moment skewness; absent for a constant sample.
    pub skewness: Option<f64>,
    /// Pearson (non-excess) kurtosis; absent for a constant sample.
    pub kurtosis: Option<f64>,
    pub histogram: Histogram,
}

/// Quantile of sorted data with linear interpolation between order statistics
/// (`h = (n − 1) q`).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of an empty sample");
    let h = (sorted.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Summarizes a sample of at least two finite values.
pub fn summarize(values: &[f64], bins: usize) -> Result<SummaryReport> {
    if values.len() < 2 {
        return Err(Error::invalid(format!(
            "a summary needs at least 2 values, got {}",
            values.len()
        )));
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::Numerical(format!("non-finite functional value {v}")));
    }
    let n = values.len() as f64;
    let mean = crate::math::compensated_sum(values.iter().copied()) / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &v in values {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    let (m2, m3, m4) = (m2 / n, m3 / n, m4 / n);
    let sd = (m2 * n / (n - 1.0)).sqrt();
    let (skewness, kurtosis) = if m2 > 0.0 {
        (Some(m3 / m2.powf(1.5)), Some(m4 / (m2 * m2)))
    } else {
        (None, None)
    };
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(SummaryReport {
        count: values.len(),
        mean,
        sd,
        q025: quantile_sorted(&sorted, 0.025),
        q50: quantile_sorted(&sorted, 0.5),
        q975: quantile_sorted(&sorted, 0.975),
        min: sorted[0],
        max: sorted[sorted.len() - 1],
        skewness,
        kurtosis,
        histogram: Histogram::from_values(&sorted, bins)?,
    })
}

/// Outcome of checking whether a credible interval excludes zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Significance {
    Significant,
    NotSignificant,
}

/// Significant iff zero lies outside the closed interval `[q025, q975]`.
pub fn significance_decision(report: &SummaryReport) -> Significance {
    if report.q025 <= 0.0 && 0.0 <= report.q975 {
        Significance::NotSignificant
    } else {
        Significance::Significant
    }
}

/// Scalar functionals of a single parameter draw. Variable indices are
/// 0-based; category codes are 1-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Functional {
    CramersV { j: usize, j2: usize },
    /// `β_subset` computed on the marginal over `variables` (binary).
    Coefficient { variables: Vec<usize>, subset: Vec<usize> },
    /// Marginal probability that each of `variables` takes its `codes` entry.
    CellProb { variables: Vec<usize>, codes: Vec<usize> },
    /// `P(y_j = code)`.
    Marginal { j: usize, code: usize },
    /// Mixture weight `ν_h`.
    Weight { h: usize },
    Alpha,
    ActiveCount,
}

impl Functional {
    pub fn evaluate(&self, model: &SpParafacParams) -> Result<f64> {
        match self {
            Functional::CramersV { j, j2 } => cramers_v_model(model, *j, *j2),
            Functional::Coefficient { variables, subset } => {
                loglinear_for_subset(model, variables)?
                    .get(subset)
                    .ok_or_else(|| Error::Request(format!("subset {subset:?} not within {variables:?}")))
            }
            Functional::CellProb { variables, codes } => cell_prob_marginal(model, variables, codes),
            Functional::Marginal { j, code } => {
                let m = univariate_marginal(model, *j)?;
                if *code == 0 || *code > m.len() {
                    return Err(Error::Request(format!("code {code} outside 1..={}", m.len())));
                }
                Ok(m[code - 1])
            }
            Functional::Weight { h } => model
                .weights()
                .get(*h)
                .copied()
                .ok_or_else(|| Error::Request(format!("component {h} beyond truncation"))),
            Functional::Alpha => Ok(model.alpha()),
            Functional::ActiveCount => Ok(model.active_count() as f64),
        }
    }
}

/// Evaluates `functional` on every draw and summarizes the values.
pub fn posterior_functional_summary<'a, I>(draws: I, functional: &Functional, bins: usize) -> Result<SummaryReport>
where
    I: IntoIterator<Item = &'a SpParafacParams>,
{
    let values = draws
        .into_iter()
        .enumerate()
        .map(|(index, m)| {
            functional.evaluate(m).map_err(|e| Error::AtDraw { index, source: Box::new(e) })
        })
        .collect::<Result<Vec<_>>>()?;
    summarize(&values, bins)
}
