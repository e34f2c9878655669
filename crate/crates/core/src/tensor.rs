//! Probability vectors and tensors, and exact evaluation of sp-PARAFAC models.
//!
//! Dense tensors store cells with the first axis varying fastest. Category
//! codes in a [`CellIndex`] are 1-based; variable indices are 0-based.

use crate::error::{Error, Result};
use crate::math::{log_sum_exp, CompensatedSum};
use crate::model::{SpParafacParams, SIMPLEX_TOLERANCE};

/// Default cap on the number of cells of a dense tensor (2^24).
pub const DEFAULT_CELL_CAP: usize = 1 << 24;

/// Tolerance on the total mass of a dense probability tensor.
pub const TENSOR_TOLERANCE: f64 = 1e-9;

/// A probability vector over `d` categories.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexVector(Vec<f64>);

impl SimplexVector {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::invalid("empty probability vector"));
        }
        if let Some(x) = probs.iter().find(|x| !(**x >= 0.0) || !x.is_finite()) {
            return Err(Error::invalid(format!("probability {x} is not a finite nonnegative number")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > SIMPLEX_TOLERANCE {
            return Err(Error::invalid(format!("probabilities sum to {total}, not 1")));
        }
        Ok(Self(probs))
    }

    /// Rescales nonnegative weights to sum to one.
    pub fn normalized(mut weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || !total.is_finite() || weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::invalid("weights must be nonnegative with a positive finite sum"));
        }
        for w in &mut weights {
            *w /= total;
        }
        Self::new(weights)
    }

    pub fn uniform(d: usize) -> Self {
        assert!(d > 0, "uniform vector needs at least one category");
        Self(vec![1.0 / d as f64; d])
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Probability of the 1-based category `code`.
    pub fn prob(&self, code: usize) -> f64 {
        self.0[code - 1]
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// One category code per axis, 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CellIndex(pub Vec<usize>);

impl CellIndex {
    pub fn new(coords: Vec<usize>) -> Self {
        Self(coords)
    }

    pub fn coords(&self) -> &[usize] {
        &self.0
    }

    fn check(&self, dims: &[usize]) -> Result<()> {
        if self.0.len() != dims.len() {
            return Err(Error::invalid(format!(
                "cell has {} coordinates, expected {}",
                self.0.len(),
                dims.len()
            )));
        }
        for (axis, (&c, &d)) in self.0.iter().zip(dims).enumerate() {
            if c == 0 || c > d {
                return Err(Error::invalid(format!(
                    "coordinate {c} on axis {} outside 1..={d}",
                    axis + 1
                )));
            }
        }
        Ok(())
    }
}

/// Number of cells of a tensor with the given dimensions, subject to `cap`.
pub fn cell_count(dims: &[usize], cap: usize) -> Result<usize> {
    let cells = dims.iter().fold(1u128, |acc, &d| acc.saturating_mul(d as u128));
    if cells > cap as u128 {
        return Err(Error::Size { cells, cap });
    }
    Ok(cells as usize)
}

/// Explicit probability array over all cells.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseProbTensor {
    dims: Vec<usize>,
    cells: Vec<f64>,
}

impl DenseProbTensor {
    pub fn new(dims: Vec<usize>, cells: Vec<f64>) -> Result<Self> {
        Self::with_cap(dims, cells, DEFAULT_CELL_CAP)
    }

    pub fn with_cap(dims: Vec<usize>, cells: Vec<f64>, cap: usize) -> Result<Self> {
        if dims.is_empty() || dims.contains(&0) {
            return Err(Error::invalid("tensor dimensions must be nonempty and positive"));
        }
        let count = cell_count(&dims, cap)?;
        if cells.len() != count {
            return Err(Error::invalid(format!(
                "{} cells supplied for {} expected",
                cells.len(),
                count
            )));
        }
        if let Some(x) = cells.iter().find(|x| !(**x >= 0.0) || !x.is_finite()) {
            return Err(Error::invalid(format!("cell value {x} is not a probability")));
        }
        let total = crate::math::compensated_sum(cells.iter().copied());
        if (total - 1.0).abs() > TENSOR_TOLERANCE {
            return Err(Error::invalid(format!("cells sum to {total}, not 1")));
        }
        Ok(Self { dims, cells })
    }

    /// Unit mass on one cell.
    pub fn point_mass(dims: Vec<usize>, cell: &CellIndex) -> Result<Self> {
        cell.check(&dims)?;
        let count = cell_count(&dims, DEFAULT_CELL_CAP)?;
        let mut cells = vec![0.0; count];
        cells[flat_index(&dims, cell.coords())] = 1.0;
        Ok(Self { dims, cells })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn cells(&self) -> &[f64] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn get(&self, cell: &CellIndex) -> Result<f64> {
        cell.check(&self.dims)?;
        Ok(self.cells[flat_index(&self.dims, cell.coords())])
    }

    pub fn total(&self) -> f64 {
        crate::math::compensated_sum(self.cells.iter().copied())
    }

    /// Sums out every axis not listed in `keep`; the result's axes follow the order of `keep`.
    pub fn sum_to_axes(&self, keep: &[usize]) -> Result<DenseProbTensor> {
        check_subset(keep, self.dims.len())?;
        let out_dims: Vec<usize> = keep.iter().map(|&a| self.dims[a]).collect();
        let out_len: usize = out_dims.iter().product();
        let mut acc = vec![CompensatedSum::new(); out_len];
        let mut coords = vec![0usize; self.dims.len()];
        for &x in &self.cells {
            let mut idx = 0;
            let mut stride = 1;
            for (k, &a) in keep.iter().enumerate() {
                idx += coords[a] * stride;
                stride *= out_dims[k];
            }
            acc[idx].add(x);
            increment(&mut coords, &self.dims);
        }
        Ok(DenseProbTensor {
            dims: out_dims,
            cells: acc.iter().map(CompensatedSum::value).collect(),
        })
    }
}

/// Flat position of 1-based coordinates (first axis fastest).
pub fn flat_index(dims: &[usize], coords: &[usize]) -> usize {
    let mut idx = 0;
    let mut stride = 1;
    for (&c, &d) in coords.iter().zip(dims) {
        idx += (c - 1) * stride;
        stride *= d;
    }
    idx
}

/// Advances 0-based coordinates in storage order.
pub(crate) fn increment(coords: &mut [usize], dims: &[usize]) {
    for (c, &d) in coords.iter_mut().zip(dims) {
        *c += 1;
        if *c < d {
            return;
        }
        *c = 0;
    }
}

fn check_subset(subset: &[usize], p: usize) -> Result<()> {
    if subset.is_empty() {
        return Err(Error::invalid("variable subset is empty"));
    }
    let mut seen = vec![false; p];
    for &j in subset {
        if j >= p {
            return Err(Error::invalid(format!("variable index {j} out of range for {p} variables")));
        }
        if std::mem::replace(&mut seen[j], true) {
            return Err(Error::invalid(format!("variable index {j} repeated")));
        }
    }
    Ok(())
}

/// `π(cell)`, evaluated per component in log space and combined with log-sum-exp.
pub fn cell_prob(model: &SpParafacParams, cell: &CellIndex) -> Result<f64> {
    cell.check(model.levels())?;
    let logs: Vec<f64> = (0..model.num_components())
        .map(|h| {
            let mut acc = model.weights()[h].ln();
            for (j, &c) in cell.coords().iter().enumerate() {
                acc += model.lambda(h, j)[c - 1].ln();
            }
            acc
        })
        .collect();
    Ok(log_sum_exp(&logs).exp())
}

/// Marginal probability that `variables[k]` takes code `codes[k]` for every `k`.
pub fn cell_prob_marginal(model: &SpParafacParams, variables: &[usize], codes: &[usize]) -> Result<f64> {
    check_subset(variables, model.num_variables())?;
    if codes.len() != variables.len() {
        return Err(Error::invalid("one code per variable is required"));
    }
    for (&j, &c) in variables.iter().zip(codes) {
        if c == 0 || c > model.levels()[j] {
            return Err(Error::invalid(format!("code {c} out of range for variable {j}")));
        }
    }
    let mut acc = CompensatedSum::new();
    for h in 0..model.num_components() {
        let mut t = model.weights()[h];
        for (&j, &c) in variables.iter().zip(codes) {
            t *= model.lambda(h, j)[c - 1];
        }
        acc.add(t);
    }
    Ok(acc.value())
}

/// Dense tensor of every cell probability.
pub fn full_tensor(model: &SpParafacParams) -> Result<DenseProbTensor> {
    full_tensor_with_cap(model, DEFAULT_CELL_CAP)
}

pub fn full_tensor_with_cap(model: &SpParafacParams, cap: usize) -> Result<DenseProbTensor> {
    let all: Vec<usize> = (0..model.num_variables()).collect();
    marginal_tensor_with_cap(model, &all, cap)
}

/// Joint distribution of the variables in `subset` (0-based, result axes in
/// the given order). Factors outside the subset drop out because each sums to one.
pub fn marginal_tensor(model: &SpParafacParams, subset: &[usize]) -> Result<DenseProbTensor> {
    marginal_tensor_with_cap(model, subset, DEFAULT_CELL_CAP)
}

pub fn marginal_tensor_with_cap(
    model: &SpParafacParams,
    subset: &[usize],
    cap: usize,
) -> Result<DenseProbTensor> {
    check_subset(subset, model.num_variables())?;
    let dims: Vec<usize> = subset.iter().map(|&j| model.levels()[j]).collect();
    let count = cell_count(&dims, cap)?;
    let mut acc = vec![CompensatedSum::new(); count];
    let mut term = Vec::with_capacity(count);
    for h in 0..model.num_components() {
        let w = model.weights()[h];
        if w == 0.0 {
            continue;
        }
        term.clear();
        term.push(w);
        for &j in subset {
            let lam = model.lambda(h, j);
            let len = term.len();
            term.resize(len * lam.len(), 0.0);
            // fill higher categories first so the source block stays intact
            for c in (0..lam.len()).rev() {
                for idx in 0..len {
                    term[idx + len * c] = term[idx] * lam[c];
                }
            }
        }
        for (a, &t) in acc.iter_mut().zip(&term) {
            a.add(t);
        }
    }
    Ok(DenseProbTensor {
        dims,
        cells: acc.iter().map(CompensatedSum::value).collect(),
    })
}

/// Univariate marginal `Σ_h ν_h λ_h^(j)`.
pub fn univariate_marginal(model: &SpParafacParams, j: usize) -> Result<Vec<f64>> {
    if j >= model.num_variables() {
        return Err(Error::invalid(format!("variable index {j} out of range")));
    }
    let d = model.levels()[j];
    let mut acc = vec![CompensatedSum::new(); d];
    for h in 0..model.num_components() {
        let w = model.weights()[h];
        for (a, &l) in acc.iter_mut().zip(model.lambda(h, j)) {
            a.add(w * l);
        }
    }
    Ok(acc.iter().map(CompensatedSum::value).collect())
}

/// Row-major probability matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl ProbMatrix {
    /// Entry for 0-based categories.
    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.rows)
            .map(|r| crate::math::compensated_sum(self.data[r * self.cols..(r + 1) * self.cols].iter().copied()))
            .collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        (0..self.cols)
            .map(|c| crate::math::compensated_sum((0..self.rows).map(|r| self.get(r, c))))
            .collect()
    }
}

/// `Pr(y_j = l, y_j2 = l')` for all category pairs.
pub fn pairwise_marginal(model: &SpParafacParams, j: usize, j2: usize) -> Result<ProbMatrix> {
    let p = model.num_variables();
    if j >= p || j2 >= p {
        return Err(Error::invalid("variable index out of range"));
    }
    if j == j2 {
        return Err(Error::invalid("pairwise marginal needs two distinct variables"));
    }
    let (rows, cols) = (model.levels()[j], model.levels()[j2]);
    let mut acc = vec![CompensatedSum::new(); rows * cols];
    for h in 0..model.num_components() {
        let w = model.weights()[h];
        if w == 0.0 {
            continue;
        }
        let a = model.lambda(h, j);
        let b = model.lambda(h, j2);
        for r in 0..rows {
            let wa = w * a[r];
            for c in 0..cols {
                acc[r * cols + c].add(wa * b[c]);
            }
        }
    }
    Ok(ProbMatrix {
        rows,
        cols,
        data: acc.iter().map(CompensatedSum::value).collect(),
    })
}

/// `Σ |a − b|` over all cells.
pub fn l1_distance(a: &DenseProbTensor, b: &DenseProbTensor) -> Result<f64> {
    if a.dims != b.dims {
        return Err(Error::invalid("tensors have different dimensions"));
    }
    Ok(crate::math::compensated_sum(
        a.cells.iter().zip(&b.cells).map(|(x, y)| (x - y).abs()),
    ))
}
