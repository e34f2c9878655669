//! Parameter state of an sp-PARAFAC model.
//!
//! A model with `K` components over `p` categorical variables is
//!
//! ```text
//! π(c_1..c_p) = Σ_h ν_h Π_{j ∈ S_h} λ_h^(j)[c_j] Π_{j ∉ S_h} λ_0^(j)[c_j]
//! ```
//!
//! Component vectors are stored for every `(h, j)`; where variable `j` is
//! inactive in component `h` the stored vector is a copy of the baseline, so
//! evaluation never has to branch on the allocation flags.

use crate::error::{Error, Result};
use crate::tensor::SimplexVector;

/// Tolerance for simplex-valued inputs handed to the constructors.
pub const SIMPLEX_TOLERANCE: f64 = 1e-10;

/// Stick-breaking weights `ν_h = V_h Π_{l<h} (1 − V_l)`.
///
/// The last fraction must equal one so the weights sum to one.
pub fn stick_breaking(sticks: &[f64]) -> Result<Vec<f64>> {
    let Some(&last) = sticks.last() else {
        return Err(Error::invalid("at least one stick fraction is required"));
    };
    if let Some(v) = sticks.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::invalid(format!("stick fraction {v} outside [0, 1]")));
    }
    if last != 1.0 {
        return Err(Error::invalid(format!("last stick fraction must be 1, got {last}")));
    }
    Ok(stick_weights_unchecked(sticks))
}

pub(crate) fn stick_weights_unchecked(sticks: &[f64]) -> Vec<f64> {
    let mut remaining = 1.0;
    sticks
        .iter()
        .map(|&v| {
            let w = v * remaining;
            remaining *= 1.0 - v;
            w
        })
        .collect()
}

/// Inverse of [`stick_breaking`]: the fractions that reproduce `weights`.
pub fn sticks_from_weights(weights: &[f64]) -> Vec<f64> {
    let k = weights.len();
    let mut sticks = Vec::with_capacity(k);
    let mut remaining = 1.0;
    for (h, &w) in weights.iter().enumerate() {
        if h + 1 == k {
            sticks.push(1.0);
        } else if remaining > 0.0 {
            let v = (w / remaining).clamp(0.0, 1.0);
            sticks.push(v);
            remaining -= w;
            if remaining < 0.0 {
                remaining = 0.0;
            }
        } else {
            sticks.push(0.0);
        }
    }
    sticks
}

/// Owned pieces used to assemble an [`SpParafacParams`].
#[derive(Debug, Clone)]
pub struct ParamsParts {
    pub levels: Vec<usize>,
    pub baseline: Vec<SimplexVector>,
    /// `V_1..V_K`, with `V_K = 1`.
    pub sticks: Vec<f64>,
    pub alpha: f64,
    pub tau: Vec<f64>,
    /// `active[h][j]` is `Some(λ_h^(j))` when variable `j` is active in component `h`.
    pub components: Vec<Vec<Option<SimplexVector>>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpParafacParams {
    levels: Vec<usize>,
    offsets: Vec<usize>,
    sticks: Vec<f64>,
    weights: Vec<f64>,
    alpha: f64,
    tau: Vec<f64>,
    active: Vec<bool>,
    lambda: Vec<f64>,
    baseline: Vec<f64>,
}

impl SpParafacParams {
    pub fn from_parts(parts: ParamsParts) -> Result<Self> {
        let ParamsParts {
            levels,
            baseline,
            sticks,
            alpha,
            tau,
            components,
        } = parts;
        let p = levels.len();
        let k = sticks.len();
        if p == 0 || k == 0 {
            return Err(Error::invalid("model needs at least one variable and one component"));
        }
        if baseline.len() != p {
            return Err(Error::invalid(format!(
                "{} baseline vectors for {} variables",
                baseline.len(),
                p
            )));
        }
        if tau.len() != k || components.len() != k {
            return Err(Error::invalid("tau and component tables must have one entry per stick"));
        }
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::invalid(format!("alpha must be positive, got {alpha}")));
        }
        if let Some(t) = tau.iter().find(|t| !(0.0..=1.0).contains(*t)) {
            return Err(Error::invalid(format!("tau {t} outside [0, 1]")));
        }
        let weights = stick_breaking(&sticks)?;
        let offsets = offsets_for(&levels);
        let width = offsets[p];
        let mut base = Vec::with_capacity(width);
        for (j, b) in baseline.iter().enumerate() {
            if b.len() != levels[j] {
                return Err(Error::invalid(format!(
                    "baseline of variable {} has {} entries, expected {}",
                    j + 1,
                    b.len(),
                    levels[j]
                )));
            }
            base.extend_from_slice(b.probs());
        }
        let mut active = vec![false; k * p];
        let mut lambda = Vec::with_capacity(k * width);
        for (h, row) in components.into_iter().enumerate() {
            if row.len() != p {
                return Err(Error::invalid(format!(
                    "component {} has {} variables, expected {}",
                    h + 1,
                    row.len(),
                    p
                )));
            }
            for (j, entry) in row.into_iter().enumerate() {
                match entry {
                    Some(v) => {
                        if v.len() != levels[j] {
                            return Err(Error::invalid(format!(
                                "component {} variable {} has {} entries, expected {}",
                                h + 1,
                                j + 1,
                                v.len(),
                                levels[j]
                            )));
                        }
                        active[h * p + j] = true;
                        lambda.extend_from_slice(v.probs());
                    }
                    None => lambda.extend_from_slice(&base[offsets[j]..offsets[j + 1]]),
                }
            }
        }
        Ok(Self {
            levels,
            offsets,
            sticks,
            weights,
            alpha,
            tau,
            active,
            lambda,
            baseline: base,
        })
    }

    /// Model with explicit mixture weights; `tau` is set to each component's
    /// active fraction and `alpha` to one.
    pub fn from_weights(
        weights: &[f64],
        baseline: Vec<SimplexVector>,
        components: Vec<Vec<Option<SimplexVector>>>,
    ) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if weights.iter().any(|w| !(*w >= 0.0)) || (total - 1.0).abs() > SIMPLEX_TOLERANCE {
            return Err(Error::invalid("mixture weights must be nonnegative and sum to 1"));
        }
        let levels = baseline.iter().map(SimplexVector::len).collect();
        let tau = components
            .iter()
            .map(|row| {
                if row.is_empty() {
                    0.0
                } else {
                    row.iter().filter(|c| c.is_some()).count() as f64 / row.len() as f64
                }
            })
            .collect();
        Self::from_parts(ParamsParts {
            levels,
            baseline,
            sticks: sticks_from_weights(weights),
            alpha: 1.0,
            tau,
            components,
        })
    }

    /// Model in which every variable sits at its baseline in a single component.
    pub fn independence(baseline: Vec<SimplexVector>) -> Result<Self> {
        let p = baseline.len();
        Self::from_weights(&[1.0], baseline, vec![vec![None; p]])
    }

    pub fn num_components(&self) -> usize {
        self.sticks.len()
    }

    pub fn num_variables(&self) -> usize {
        self.levels.len()
    }

    pub fn levels(&self) -> &[usize] {
        &self.levels
    }

    /// Start of variable `j`'s block inside a component row; `offsets()[p]` is the row width.
    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn width(&self) -> usize {
        self.offsets[self.levels.len()]
    }

    pub fn sticks(&self) -> &[f64] {
        &self.sticks
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn tau(&self) -> &[f64] {
        &self.tau
    }

    #[inline]
    pub fn is_active(&self, h: usize, j: usize) -> bool {
        self.active[h * self.levels.len() + j]
    }

    pub fn active_flags(&self) -> &[bool] {
        &self.active
    }

    pub fn active_count(&self) -> usize {
        self.active.iter().filter(|&&a| a).count()
    }

    pub fn active_in_component(&self, h: usize) -> usize {
        let p = self.levels.len();
        self.active[h * p..(h + 1) * p].iter().filter(|&&a| a).count()
    }

    /// Component-`h` probability vector of variable `j`; the baseline when inactive.
    #[inline]
    pub fn lambda(&self, h: usize, j: usize) -> &[f64] {
        let w = self.width();
        &self.lambda[h * w + self.offsets[j]..h * w + self.offsets[j + 1]]
    }

    /// All component vectors of component `h`, concatenated over variables.
    pub fn component_row(&self, h: usize) -> &[f64] {
        let w = self.width();
        &self.lambda[h * w..(h + 1) * w]
    }

    pub fn baseline(&self, j: usize) -> &[f64] {
        &self.baseline[self.offsets[j]..self.offsets[j + 1]]
    }

    pub fn baseline_vectors(&self) -> Vec<SimplexVector> {
        (0..self.num_variables())
            .map(|j| SimplexVector::new(self.baseline(j).to_vec()).expect("baseline validated"))
            .collect()
    }

    /// True when variable `j` sits at its baseline in every component.
    pub fn is_null_variable(&self, j: usize) -> bool {
        (0..self.num_components()).all(|h| !self.is_active(h, j))
    }

    /// Component `h` of the result is component `perm[h]` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let k = self.num_components();
        let mut seen = vec![false; k];
        if perm.len() != k || perm.iter().any(|&h| h >= k || std::mem::replace(&mut seen[h], true)) {
            return Err(Error::invalid("not a permutation of the components"));
        }
        let p = self.num_variables();
        let w = self.width();
        let weights: Vec<f64> = perm.iter().map(|&h| self.weights[h]).collect();
        let sticks = sticks_from_weights(&weights);
        let mut out = self.clone();
        out.weights = stick_weights_unchecked(&sticks);
        out.sticks = sticks;
        for (new_h, &old_h) in perm.iter().enumerate() {
            out.tau[new_h] = self.tau[old_h];
            out.active[new_h * p..(new_h + 1) * p]
                .copy_from_slice(&self.active[old_h * p..(old_h + 1) * p]);
            out.lambda[new_h * w..(new_h + 1) * w]
                .copy_from_slice(&self.lambda[old_h * w..(old_h + 1) * w]);
        }
        Ok(out)
    }

    /// Checks every structural invariant of the type.
    pub fn check_invariants(&self) -> Result<()> {
        let total: f64 = crate::math::compensated_sum(self.weights.iter().copied());
        if self.weights.iter().any(|w| !(*w >= 0.0)) || (total - 1.0).abs() > 1e-12 {
            return Err(Error::Numerical(format!("weights sum to {total}")));
        }
        if *self.sticks.last().unwrap() != 1.0 {
            return Err(Error::Numerical("last stick fraction is not 1".into()));
        }
        let p = self.num_variables();
        for h in 0..self.num_components() {
            for j in 0..p {
                let v = self.lambda(h, j);
                let s: f64 = v.iter().sum();
                if v.iter().any(|x| !(*x >= 0.0)) || (s - 1.0).abs() > SIMPLEX_TOLERANCE {
                    return Err(Error::Numerical(format!(
                        "component {} variable {} is not a probability vector",
                        h + 1,
                        j + 1
                    )));
                }
                if !self.is_active(h, j) && v != self.baseline(j) {
                    return Err(Error::Numerical(format!(
                        "inactive component {} variable {} differs from its baseline",
                        h + 1,
                        j + 1
                    )));
                }
            }
        }
        Ok(())
    }

    // Mutation is reserved for the sampler, which maintains the invariants.

    pub(crate) fn sticks_mut(&mut self) -> &mut [f64] {
        &mut self.sticks
    }

    pub(crate) fn refresh_weights(&mut self) {
        self.weights = stick_weights_unchecked(&self.sticks);
    }

    pub(crate) fn set_alpha(&mut self, alpha: f64) {
        self.alpha = alpha;
    }

    pub(crate) fn tau_mut(&mut self) -> &mut [f64] {
        &mut self.tau
    }

    pub(crate) fn set_inactive(&mut self, h: usize, j: usize) {
        let p = self.num_variables();
        self.active[h * p + j] = false;
        let w = self.width();
        let (lo, hi) = (self.offsets[j], self.offsets[j + 1]);
        self.lambda[h * w + lo..h * w + hi].copy_from_slice(&self.baseline[lo..hi]);
    }

    /// Marks `(h, j)` active and returns its vector for the caller to fill.
    pub(crate) fn activate(&mut self, h: usize, j: usize) -> &mut [f64] {
        let p = self.num_variables();
        self.active[h * p + j] = true;
        let w = self.width();
        let (lo, hi) = (self.offsets[j], self.offsets[j + 1]);
        &mut self.lambda[h * w + lo..h * w + hi]
    }

    pub(crate) fn lambda_table(&self) -> &[f64] {
        &self.lambda
    }
}

pub(crate) fn offsets_for(levels: &[usize]) -> Vec<usize> {
    let mut offsets = Vec::with_capacity(levels.len() + 1);
    let mut acc = 0;
    offsets.push(0);
    for &d in levels {
        acc += d;
        offsets.push(acc);
    }
    offsets
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stick_breaking_examples() {
        assert_eq!(stick_breaking(&[1.0]).unwrap(), vec![1.0]);
        assert_eq!(stick_breaking(&[0.5, 0.5, 1.0]).unwrap(), vec![0.5, 0.25, 0.25]);
        assert!(stick_breaking(&[0.5, 1.2, 1.0]).is_err());
        assert!(stick_breaking(&[0.5, 0.5]).is_err());
        assert!(stick_breaking(&[]).is_err());
    }

    #[test]
    fn sticks_round_trip_through_weights() {
        let w = [0.1, 0.0, 0.6, 0.3];
        let v = sticks_from_weights(&w);
        let back = stick_breaking(&v).unwrap();
        for (a, b) in w.iter().zip(&back) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn inactive_vectors_equal_baseline() {
        let m = SpParafacParams::from_weights(
            &[0.5, 0.5],
            vec![SimplexVector::uniform(2), SimplexVector::uniform(3)],
            vec![
                vec![Some(SimplexVector::new(vec![0.9, 0.1]).unwrap()), None],
                vec![None, None],
            ],
        )
        .unwrap();
        assert!(m.is_active(0, 0));
        assert_eq!(m.lambda(0, 1), m.baseline(1));
        assert_eq!(m.active_count(), 1);
        assert!(m.is_null_variable(1));
        m.check_invariants().unwrap();
    }

    #[test]
    fn rejects_malformed_parts() {
        let bad = SpParafacParams::from_weights(
            &[0.5, 0.4],
            vec![SimplexVector::uniform(2)],
            vec![vec![None], vec![None]],
        );
        assert!(bad.is_err());
        let bad = SpParafacParams::from_weights(
            &[1.0],
            vec![SimplexVector::uniform(2)],
            vec![vec![Some(SimplexVector::uniform(3))]],
        );
        assert!(bad.is_err());
    }
}
