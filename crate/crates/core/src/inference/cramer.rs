//! Cramér's V, `ρ² = 1/(min(d_j, d_j') − 1) Σ (π_ll' − π_l π_l')² / (π_l π_l')`.

use crate::data::CategoricalDataset;
use crate::error::{Error, Result};
use crate::math::CompensatedSum;
use crate::model::SpParafacParams;
use crate::tensor::{univariate_marginal, ProbMatrix};

/// Symmetric `p × p` matrix with unit diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct CramersVMatrix {
    p: usize,
    values: Vec<f64>,
}

impl CramersVMatrix {
    pub fn from_values(p: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != p * p {
            return Err(Error::invalid(format!("{} values for a {p}×{p} matrix", values.len())));
        }
        for a in 0..p {
            if values[a * p + a] != 1.0 {
                return Err(Error::invalid("diagonal entries must be 1"));
            }
            for b in 0..a {
                let v = values[a * p + b];
                if v != values[b * p + a] {
                    return Err(Error::invalid("matrix is not symmetric"));
                }
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::invalid(format!("entry {v} outside [0, 1]")));
                }
            }
        }
        Ok(Self { p, values })
    }

    fn build(p: usize, mut entry: impl FnMut(usize, usize) -> Result<f64>) -> Result<Self> {
        let mut values = vec![0.0; p * p];
        for a in 0..p {
            values[a * p + a] = 1.0;
            for b in a + 1..p {
                let v = entry(a, b)?;
                values[a * p + b] = v;
                values[b * p + a] = v;
            }
        }
        Ok(Self { p, values })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.values[a * self.p + b]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.p)
    }
}

fn finish(chi: f64, min_levels: usize) -> f64 {
    (chi / (min_levels - 1) as f64).sqrt().clamp(0.0, 1.0)
}

/// Cramér's V of a joint probability table, with marginals taken from the table.
pub fn cramers_v_from_table(joint: &ProbMatrix) -> Result<f64> {
    let rows = joint.row_sums();
    let cols = joint.col_sums();
    if rows.iter().chain(&cols).any(|&m| !(m > 0.0)) {
        return Err(Error::Numerical("Cramér's V needs strictly positive marginals".into()));
    }
    let mut chi = CompensatedSum::new();
    for (r, &pr) in rows.iter().enumerate() {
        for (c, &pc) in cols.iter().enumerate() {
            let e = pr * pc;
            chi.add((joint.get(r, c) - e).powi(2) / e);
        }
    }
    Ok(finish(chi.value(), joint.rows.min(joint.cols)))
}

fn null_in_model(model: &SpParafacParams, j: usize) -> bool {
    (0..model.num_components()).all(|h| model.weights()[h] == 0.0 || !model.is_active(h, j))
}

/// Model-implied Cramér's V between 0-based variables `j` and `j2`.
///
/// The departure from independence is evaluated as the weighted covariance
/// `Σ_h ν_h (λ_h^(j) − π^(j)) (λ_h^(j2) − π^(j2))ᵀ`, which equals
/// `π^(jj2) − π^(j) π^(j2)ᵀ` but does not cancel two nearly equal numbers.
pub fn cramers_v_model(model: &SpParafacParams, j: usize, j2: usize) -> Result<f64> {
    let p = model.num_variables();
    if j >= p || j2 >= p {
        return Err(Error::invalid("variable index out of range"));
    }
    if j == j2 {
        return Err(Error::invalid("Cramér's V needs two distinct variables"));
    }
    let ma = univariate_marginal(model, j)?;
    let mb = univariate_marginal(model, j2)?;
    if ma.iter().chain(&mb).any(|&m| !(m > 0.0)) {
        return Err(Error::Numerical(format!(
            "variables {} and {} have a zero marginal probability",
            j + 1,
            j2 + 1
        )));
    }
    if null_in_model(model, j) || null_in_model(model, j2) {
        return Ok(0.0);
    }
    Ok(cramers_v_with_marginals(model, j, j2, &ma, &mb))
}

fn cramers_v_with_marginals(model: &SpParafacParams, j: usize, j2: usize, ma: &[f64], mb: &[f64]) -> f64 {
    let (da, db) = (ma.len(), mb.len());
    let mut cov = vec![CompensatedSum::new(); da * db];
    for h in 0..model.num_components() {
        let w = model.weights()[h];
        if w == 0.0 {
            continue;
        }
        let a = model.lambda(h, j);
        let b = model.lambda(h, j2);
        for r in 0..da {
            let x = w * (a[r] - ma[r]);
            for c in 0..db {
                cov[r * db + c].add(x * (b[c] - mb[c]));
            }
        }
    }
    let mut chi = CompensatedSum::new();
    for r in 0..da {
        for c in 0..db {
            chi.add(cov[r * db + c].value().powi(2) / (ma[r] * mb[c]));
        }
    }
    finish(chi.value(), da.min(db))
}

/// Model-implied Cramér's V for every pair of variables.
pub fn cramers_v_model_matrix(model: &SpParafacParams) -> Result<CramersVMatrix> {
    let p = model.num_variables();
    let marginals = (0..p)
        .map(|j| univariate_marginal(model, j))
        .collect::<Result<Vec<_>>>()?;
    if let Some(j) = marginals.iter().position(|m| m.iter().any(|&x| !(x > 0.0))) {
        return Err(Error::Numerical(format!("variable {} has a zero marginal probability", j + 1)));
    }
    let null: Vec<bool> = (0..p).map(|j| null_in_model(model, j)).collect();
    CramersVMatrix::build(p, |a, b| {
        Ok(if null[a] || null[b] {
            0.0
        } else {
            cramers_v_with_marginals(model, a, b, &marginals[a], &marginals[b])
        })
    })
}

/// Plug-in Cramér's V from the rows where both variables are observed.
/// Categories that never occur are dropped from the sum and from `min(d_j, d_j2)`.
pub fn cramers_v_empirical(data: &CategoricalDataset, j: usize, j2: usize) -> Result<f64> {
    let p = data.p();
    if j >= p || j2 >= p {
        return Err(Error::invalid("variable index out of range"));
    }
    if j == j2 {
        return Err(Error::invalid("Cramér's V needs two distinct variables"));
    }
    let (da, db) = (data.levels()[j], data.levels()[j2]);
    let mut table = vec![0u64; da * db];
    let mut total = 0u64;
    for i in 0..data.n() {
        if let (Some(a), Some(b)) = (data.get(i, j), data.get(i, j2)) {
            table[(a - 1) * db + (b - 1)] += 1;
            total += 1;
        }
    }
    if total == 0 {
        return Err(Error::Data(format!(
            "variables {} and {} are never observed together",
            j + 1,
            j2 + 1
        )));
    }
    Ok(cramers_v_counts(&table, da, db, total))
}

fn cramers_v_counts(table: &[u64], da: usize, db: usize, total: u64) -> f64 {
    let n = total as f64;
    let rows: Vec<u64> = (0..da).map(|r| table[r * db..(r + 1) * db].iter().sum()).collect();
    let cols: Vec<u64> = (0..db).map(|c| (0..da).map(|r| table[r * db + c]).sum()).collect();
    let kept_rows = rows.iter().filter(|&&x| x > 0).count();
    let kept_cols = cols.iter().filter(|&&x| x > 0).count();
    let k = kept_rows.min(kept_cols);
    if k < 2 {
        return 0.0;
    }
    let mut chi = CompensatedSum::new();
    for r in (0..da).filter(|&r| rows[r] > 0) {
        let pr = rows[r] as f64 / n;
        for c in (0..db).filter(|&c| cols[c] > 0) {
            let e = pr * cols[c] as f64 / n;
            chi.add((table[r * db + c] as f64 / n - e).powi(2) / e);
        }
    }
    finish(chi.value(), k)
}

/// Plug-in Cramér's V for every pair of variables.
pub fn cramers_v_empirical_matrix(data: &CategoricalDataset) -> Result<CramersVMatrix> {
    CramersVMatrix::build(data.p(), |a, b| cramers_v_empirical(data, a, b))
}
