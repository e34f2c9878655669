//! Aggregation of interval decisions across simulation replicates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-replicate outcome for one coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntervalOutcome {
    /// The 95% interval excludes zero.
    pub significant: bool,
    /// The 95% interval contains the true value.
    pub covers_truth: bool,
}

/// Rejection and coverage rates for one coefficient.
///
/// `rejection_rate` is power when `truth != 0` and type-I error otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub name: String,
    pub truth: f64,
    pub replicates: usize,
    pub rejection_rate: f64,
    pub coverage: f64,
}

impl AggregateRow {
    pub fn is_null(&self) -> bool {
        self.truth == 0.0
    }

    pub fn power(&self) -> Option<f64> {
        (!self.is_null()).then_some(self.rejection_rate)
    }

    pub fn type_one_error(&self) -> Option<f64> {
        self.is_null().then_some(self.rejection_rate)
    }
}

/// One row per coefficient; `outcomes[r][c]` is replicate `r`, coefficient `c`.
pub fn replicate_aggregate(
    names: &[String],
    truths: &[f64],
    outcomes: &[Vec<IntervalOutcome>],
) -> Result<Vec<AggregateRow>> {
    if names.len() != truths.len() {
        return Err(Error::invalid("one truth per coefficient is required"));
    }
    if outcomes.is_empty() {
        return Err(Error::invalid("no replicates to aggregate"));
    }
    if let Some(r) = outcomes.iter().position(|row| row.len() != names.len()) {
        return Err(Error::invalid(format!(
            "replicate {r} has {} outcomes, expected {}",
            outcomes[r].len(),
            names.len()
        )));
    }
    let total = outcomes.len() as f64;
    Ok(names
        .iter()
        .zip(truths)
        .enumerate()
        .map(|(c, (name, &truth))| {
            let rejected = outcomes.iter().filter(|row| row[c].significant).count();
            let covered = outcomes.iter().filter(|row| row[c].covers_truth).count();
            AggregateRow {
                name: name.clone(),
                truth,
                replicates: outcomes.len(),
                rejection_rate: rejected as f64 / total,
                coverage: covered as f64 / total,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn outcome(significant: bool, covers_truth: bool) -> IntervalOutcome {
        IntervalOutcome { significant, covers_truth }
    }

    #[test]
    fn rates() {
        let names = vec!["b1".to_string(), "b2".to_string()];
        let truths = [2.0, 0.0];
        let outcomes: Vec<_> = (0..20)
            .map(|r| vec![outcome(r < 17, r % 2 == 0), outcome(false, true)])
            .collect();
        let rows = replicate_aggregate(&names, &truths, &outcomes).unwrap();
        assert_eq!(rows[0].power(), Some(0.85));
        assert_eq!(rows[0].coverage, 0.5);
        assert_eq!(rows[1].type_one_error(), Some(0.0));
        assert_eq!(rows[1].power(), None);
        assert_eq!(rows[1].coverage, 1.0);
    }

    #[test]
    fn all_significant_gives_full_power() {
        let rows = replicate_aggregate(&["x".into()], &[1.5], &vec![vec![outcome(true, true)]; 10]).unwrap();
        assert_eq!(rows[0].power(), Some(1.0));
    }

    #[test]
    fn shape_errors() {
        assert!(replicate_aggregate(&["x".into()], &[], &[]).is_err());
        assert!(replicate_aggregate(&["x".into()], &[1.0], &[]).is_err());
        assert!(replicate_aggregate(&["x".into()], &[1.0], &[vec![]]).is_err());
    }
}
