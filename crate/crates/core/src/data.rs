//! Categorical data tables.

use crate::error::{Error, Result};

/// Code used in the packed value table for a missing entry.
pub const MISSING: u16 = 0;

/// An `n × p` table of category codes. Codes are 1-based (`1..=d_j`);
/// missing entries are stored as [`MISSING`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CategoricalDataset {
    n: usize,
    p: usize,
    levels: Vec<usize>,
    values: Vec<u16>,
}

impl CategoricalDataset {
    /// Builds a dataset from a row-major code table where `0` marks a missing entry.
    pub fn new(levels: Vec<usize>, values: Vec<u16>) -> Result<Self> {
        let p = levels.len();
        if p == 0 {
            return Err(Error::Data("dataset has no variables".into()));
        }
        if let Some(j) = levels.iter().position(|&d| d < 2) {
            return Err(Error::Data(format!(
                "variable {} has {} levels; at least 2 are required",
                j + 1,
                levels[j]
            )));
        }
        if let Some(j) = levels.iter().position(|&d| d > u16::MAX as usize) {
            return Err(Error::Data(format!("variable {} has too many levels", j + 1)));
        }
        if values.len() % p != 0 {
            return Err(Error::Data(format!(
                "{} values do not form rows of {} variables",
                values.len(),
                p
            )));
        }
        let n = values.len() / p;
        for (k, &v) in values.iter().enumerate() {
            let j = k % p;
            if v as usize > levels[j] {
                return Err(Error::Data(format!(
                    "row {}, variable {}: code {} outside 1..={}",
                    k / p + 1,
                    j + 1,
                    v,
                    levels[j]
                )));
            }
        }
        Ok(Self { n, p, levels, values })
    }

    pub fn from_rows(levels: Vec<usize>, rows: &[Vec<Option<usize>>]) -> Result<Self> {
        let p = levels.len();
        let mut values = Vec::with_capacity(rows.len() * p);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != p {
                return Err(Error::Data(format!(
                    "row {} has {} entries, expected {}",
                    i + 1,
                    row.len(),
                    p
                )));
            }
            for &v in row {
                match v {
                    None => values.push(MISSING),
                    Some(0) => {
                        return Err(Error::Data(format!("row {}: code 0 is not a category", i + 1)))
                    }
                    Some(c) => values.push(u16::try_from(c).map_err(|_| {
                        Error::Data(format!("row {}: code {} too large", i + 1, c))
                    })?),
                }
            }
        }
        Self::new(levels, values)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn levels(&self) -> &[usize] {
        &self.levels
    }

    /// Category code of subject `i` on variable `j` (both 0-based), or `None` if missing.
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Option<usize> {
        match self.values[i * self.p + j] {
            MISSING => None,
            c => Some(c as usize),
        }
    }

    /// Packed codes of one subject.
    #[inline]
    pub fn row(&self, i: usize) -> &[u16] {
        &self.values[i * self.p..(i + 1) * self.p]
    }

    pub fn values(&self) -> &[u16] {
        &self.values
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = Option<usize>> + '_ {
        (0..self.n).map(move |i| self.get(i, j))
    }

    /// Per-category counts of variable `j`, skipping missing entries.
    pub fn column_counts(&self, j: usize) -> Vec<usize> {
        let mut counts = vec![0; self.levels[j]];
        for c in self.column(j).flatten() {
            counts[c - 1] += 1;
        }
        counts
    }

    pub fn missing_count(&self) -> usize {
        self.values.iter().filter(|&&v| v == MISSING).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_out_of_range_codes() {
        assert!(CategoricalDataset::new(vec![2, 2], vec![1, 3]).is_err());
        assert!(CategoricalDataset::new(vec![1, 2], vec![1, 1]).is_err());
        assert!(CategoricalDataset::new(vec![2, 2], vec![1, 2, 1]).is_err());
    }

    #[test]
    fn missing_entries_are_skipped_in_counts() {
        let ds = CategoricalDataset::from_rows(
            vec![3, 2],
            &[vec![Some(1), None], vec![Some(3), Some(2)], vec![None, Some(2)]],
        )
        .unwrap();
        assert_eq!(ds.n(), 3);
        assert_eq!(ds.column_counts(0), vec![1, 0, 1]);
        assert_eq!(ds.column_counts(1), vec![0, 2]);
        assert_eq!(ds.get(0, 1), None);
        assert_eq!(ds.missing_count(), 2);
    }
}
