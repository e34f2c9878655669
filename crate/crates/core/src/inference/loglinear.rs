//! Saturated log-linear parameterization of binary tensors.
//!
//! For binary variables with code 1 as the reference level and code 2 as the
//! active level,
//!
//! ```text
//! log π(c) = β_∅ + Σ_{S ≠ ∅} β_S 1(c_S = active)
//! β_S = Σ_{T ⊆ S} (−1)^{|S∖T|} log π(cell(T))
//! ```
//!
//! where `cell(T)` has the active level exactly on `T`. With the first axis
//! varying fastest, `cell(T)` is the flat index whose bits are `T`, so both
//! directions are subset-sum (zeta/Möbius) transforms over bit masks.

use crate::error::{Error, Result};
use crate::model::SpParafacParams;
use crate::tensor::{cell_count, marginal_tensor, DenseProbTensor, DEFAULT_CELL_CAP};

/// Largest number of variables in one coefficient table.
const MAX_VARIABLES: usize = 24;

/// Coefficients `β_S` over the subsets of a set of binary variables.
#[derive(Debug, Clone, PartialEq)]
pub struct LogLinearCoeffs {
    variables: Vec<usize>,
    /// `values[mask]`, bit `k` standing for `variables[k]`; `values[0]` is
    /// the reference log-probability `β_∅`.
    values: Vec<f64>,
}

impl LogLinearCoeffs {
    /// Coefficients over `variables` (sorted and distinct) from `(subset, β)` terms;
    /// unlisted subsets are zero. The reference term is fixed by normalization.
    pub fn from_terms(variables: Vec<usize>, terms: &[(Vec<usize>, f64)]) -> Result<Self> {
        check_variables(&variables)?;
        let mut values = vec![0.0; 1 << variables.len()];
        for (subset, beta) in terms {
            if subset.is_empty() {
                return Err(Error::invalid("the empty subset is the reference term"));
            }
            let mask = mask_of(&variables, subset)?;
            values[mask] = *beta;
        }
        let mut out = Self { variables, values };
        out.values[0] = -log_partition(&out.values);
        Ok(out)
    }

    pub fn variables(&self) -> &[usize] {
        &self.variables
    }

    /// `log π` of the all-reference cell.
    pub fn reference_log_prob(&self) -> f64 {
        self.values[0]
    }

    /// `β_S` for a nonempty subset of the variables (any order).
    pub fn get(&self, subset: &[usize]) -> Option<f64> {
        if subset.is_empty() {
            return None;
        }
        mask_of(&self.variables, subset).ok().map(|m| self.values[m])
    }

    pub fn by_mask(&self, mask: usize) -> f64 {
        self.values[mask]
    }

    /// Nonempty subsets in canonical order: by size, then lexicographically.
    pub fn subsets(&self) -> Vec<Vec<usize>> {
        canonical_masks(self.variables.len())
            .into_iter()
            .map(|m| self.subset_of(m))
            .collect()
    }

    /// `(subset, β_S)` for every nonempty subset in canonical order.
    pub fn iter(&self) -> impl Iterator<Item = (Vec<usize>, f64)> + '_ {
        canonical_masks(self.variables.len())
            .into_iter()
            .map(move |m| (self.subset_of(m), self.values[m]))
    }

    fn subset_of(&self, mask: usize) -> Vec<usize> {
        (0..self.variables.len())
            .filter(|k| mask >> k & 1 == 1)
            .map(|k| self.variables[k])
            .collect()
    }
}

fn check_variables(variables: &[usize]) -> Result<()> {
    if variables.is_empty() {
        return Err(Error::invalid("no variables given"));
    }
    if variables.len() > MAX_VARIABLES {
        return Err(Error::Size {
            cells: 1u128 << variables.len(),
            cap: DEFAULT_CELL_CAP,
        });
    }
    if variables.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("variables must be sorted and distinct"));
    }
    Ok(())
}

fn mask_of(variables: &[usize], subset: &[usize]) -> Result<usize> {
    let mut mask = 0usize;
    for v in subset {
        let k = variables
            .binary_search(v)
            .map_err(|_| Error::invalid(format!("variable {v} is not in the coefficient set")))?;
        if mask >> k & 1 == 1 {
            return Err(Error::invalid(format!("variable {v} repeated in subset")));
        }
        mask |= 1 << k;
    }
    Ok(mask)
}

/// Nonempty masks over `q` bits ordered by popcount, then by the sorted bit positions.
pub(crate) fn canonical_masks(q: usize) -> Vec<usize> {
    let mut masks: Vec<usize> = (1..1usize << q).collect();
    let key = |m: &usize| {
        let bits: Vec<u32> = (0..q as u32).filter(|k| m >> k & 1 == 1).collect();
        (bits.len(), bits)
    };
    masks.sort_by_key(key);
    masks
}

/// `log Σ_cells exp(η(cell))` with `η(cell) = Σ_{S ⊆ cell} β_S`, ignoring `β_∅`.
fn log_partition(values: &[f64]) -> f64 {
    let mut eta = values.to_vec();
    eta[0] = 0.0;
    zeta_transform(&mut eta);
    crate::math::log_sum_exp(&eta)
}

/// `v[mask] ← Σ_{sub ⊆ mask} v[sub]`.
fn zeta_transform(v: &mut [f64]) {
    let len = v.len();
    let mut bit = 1;
    while bit < len {
        for mask in 0..len {
            if mask & bit != 0 {
                v[mask] += v[mask ^ bit];
            }
        }
        bit <<= 1;
    }
}

/// `v[mask] ← Σ_{sub ⊆ mask} (−1)^{|mask∖sub|} v[sub]`.
fn mobius_transform(v: &mut [f64]) {
    let len = v.len();
    let mut bit = 1;
    while bit < len {
        for mask in 0..len {
            if mask & bit != 0 {
                v[mask] -= v[mask ^ bit];
            }
        }
        bit <<= 1;
    }
}

/// Coefficients of a binary tensor; the variables are its axes `0..q`.
pub fn loglinear_from_tensor(t: &DenseProbTensor) -> Result<LogLinearCoeffs> {
    loglinear_from_tensor_for(t, (0..t.dims().len()).collect())
}

/// Coefficients of a binary tensor whose axis `k` is variable `variables[k]`.
pub fn loglinear_from_tensor_for(t: &DenseProbTensor, variables: Vec<usize>) -> Result<LogLinearCoeffs> {
    if t.dims().iter().any(|&d| d != 2) {
        return Err(Error::Unsupported(
            "log-linear extraction is implemented for binary variables only".into(),
        ));
    }
    if variables.len() != t.dims().len() {
        return Err(Error::invalid("one variable label per axis is required"));
    }
    check_variables(&variables)?;
    if let Some(x) = t.cells().iter().find(|&&x| !(x > 0.0)) {
        return Err(Error::Domain(format!(
            "log-linear coefficients need positive cells, found {x}"
        )));
    }
    let mut values: Vec<f64> = t.cells().iter().map(|x| x.ln()).collect();
    let reference = values[0];
    mobius_transform(&mut values);
    values[0] = reference;
    Ok(LogLinearCoeffs { variables, values })
}

/// Binary tensor over the coefficient variables (axis `k` = `variables[k]`).
///
/// The result is normalized; variables outside the coefficient set are
/// uniform and independent of these and are not represented.
pub fn tensor_from_loglinear(coeffs: &LogLinearCoeffs) -> Result<DenseProbTensor> {
    let q = coeffs.variables.len();
    cell_count(&vec![2; q], DEFAULT_CELL_CAP)?;
    let mut eta = coeffs.values.clone();
    eta[0] = 0.0;
    zeta_transform(&mut eta);
    let max = eta.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut cells: Vec<f64> = eta.iter().map(|e| (e - max).exp()).collect();
    let total = crate::math::compensated_sum(cells.iter().copied());
    cells.iter_mut().for_each(|c| *c /= total);
    DenseProbTensor::new(vec![2; q], cells)
}

/// Dense binary tensor over variables `0..p`; variables outside the
/// coefficient set are uniform and independent.
pub fn tensor_from_loglinear_dense(coeffs: &LogLinearCoeffs, p: usize) -> Result<DenseProbTensor> {
    if coeffs.variables.last().is_some_and(|&v| v >= p) {
        return Err(Error::invalid("coefficient variable outside 0..p"));
    }
    let count = cell_count(&vec![2; p], DEFAULT_CELL_CAP)?;
    let sub = tensor_from_loglinear(coeffs)?;
    let scale = 0.5f64.powi((p - coeffs.variables.len()) as i32);
    let cells = (0..count)
        .map(|flat| {
            let mask = coeffs
                .variables
                .iter()
                .enumerate()
                .fold(0usize, |m, (k, &v)| m | ((flat >> v & 1) << k));
            sub.cells()[mask] * scale
        })
        .collect();
    DenseProbTensor::new(vec![2; p], cells)
}

/// Coefficients over a subset of a model's binary variables, computed from
/// the model's marginal on that subset.
pub fn loglinear_for_subset(model: &SpParafacParams, variables: &[usize]) -> Result<LogLinearCoeffs> {
    let mut sorted = variables.to_vec();
    sorted.sort_unstable();
    let t = marginal_tensor(model, &sorted)?;
    loglinear_from_tensor_for(&t, sorted)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_tensor_has_zero_coefficients() {
        let t = DenseProbTensor::new(vec![2, 2, 2], vec![0.125; 8]).unwrap();
        let b = loglinear_from_tensor(&t).unwrap();
        assert!(b.iter().all(|(_, v)| v.abs() < 1e-15));
        assert_eq!(b.subsets().len(), 7);
    }

    #[test]
    fn two_by_two_example() {
        // π11 = 0.4, π12 = 0.1, π21 = 0.2, π22 = 0.3 (first axis fastest)
        let t = DenseProbTensor::new(vec![2, 2], vec![0.4, 0.2, 0.1, 0.3]).unwrap();
        let b = loglinear_from_tensor(&t).unwrap();
        assert!((b.get(&[0]).unwrap() - 0.5f64.ln()).abs() < 1e-14);
        assert!((b.get(&[1]).unwrap() - 0.25f64.ln()).abs() < 1e-14);
        assert!((b.get(&[0, 1]).unwrap() - 6f64.ln()).abs() < 1e-14);
        assert!((b.get(&[1, 0]).unwrap() - 6f64.ln()).abs() < 1e-14);
        assert!((b.reference_log_prob() - 0.4f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn single_main_effect() {
        let b = LogLinearCoeffs::from_terms(vec![0], &[(vec![0], 3f64.ln())]).unwrap();
        let t = tensor_from_loglinear(&b).unwrap();
        assert!((t.cells()[0] - 0.25).abs() < 1e-15 && (t.cells()[1] - 0.75).abs() < 1e-15);
        let zero = LogLinearCoeffs::from_terms(vec![0, 1, 2], &[]).unwrap();
        assert!(tensor_from_loglinear(&zero).unwrap().cells().iter().all(|&c| (c - 0.125).abs() < 1e-15));
    }

    #[test]
    fn rejects_bad_inputs() {
        let t = DenseProbTensor::new(vec![3], vec![0.2, 0.3, 0.5]).unwrap();
        assert!(matches!(loglinear_from_tensor(&t), Err(Error::Unsupported(_))));
        let t = DenseProbTensor::new(vec![2], vec![0.0, 1.0]).unwrap();
        assert!(matches!(loglinear_from_tensor(&t), Err(Error::Domain(_))));
        assert!(LogLinearCoeffs::from_terms(vec![2, 1], &[]).is_err());
        assert!(LogLinearCoeffs::from_terms(vec![1, 2], &[(vec![3], 1.0)]).is_err());
        assert!(LogLinearCoeffs::from_terms(vec![1, 2], &[(vec![], 1.0)]).is_err());
    }

    #[test]
    fn canonical_order() {
        let b = LogLinearCoeffs::from_terms(vec![1, 3, 11, 13], &[]).unwrap();
        let s = b.subsets();
        assert_eq!(s.len(), 15);
        assert_eq!(s[0], vec![1]);
        assert_eq!(s[4], vec![1, 3]);
        assert_eq!(s[14], vec![1, 3, 11, 13]);
    }

    #[test]
    fn dense_expansion_keeps_other_variables_uniform() {
        let b = LogLinearCoeffs::from_terms(vec![1], &[(vec![1], 1.0)]).unwrap();
        let t = tensor_from_loglinear_dense(&b, 3).unwrap();
        let sub = t.sum_to_axes(&[0, 2]).unwrap();
        assert!(sub.cells().iter().all(|&c| (c - 0.25).abs() < 1e-15));
        let back = loglinear_from_tensor(&t).unwrap();
        assert!((back.get(&[1]).unwrap() - 1.0).abs() < 1e-12);
        assert!(back.get(&[0]).unwrap().abs() < 1e-12);
    }
}
