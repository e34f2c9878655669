//! Hierarchical prior of the sparse factorization:
//!
//! ```text
//! λ_h^(j) ~ (1 − τ_h) δ_{λ_0^(j)} + τ_h Dirichlet(a_j)
//! ν_h = V_h Π_{l<h} (1 − V_l),   V_h ~ Beta(1, α),   α ~ Gamma(a_α, b_α)
//! τ_h ~ Beta(1, γ)
//! ```
//!
//! Stick-breaking is truncated at `K` components with `V_K = 1`.

use rand::Rng;
use rand_distr::{Beta, Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::data::CategoricalDataset;
use crate::error::{Error, Result};
use crate::math::{ln_beta, ln_choose};
use crate::model::{ParamsParts, SpParafacParams};
use crate::tensor::SimplexVector;

/// Smallest Dirichlet shape handed to the gamma sampler.
pub const DIRICHLET_SHAPE_FLOOR: f64 = 1e-3;

/// Smallest concentration `α` kept by the samplers; Beta(1, 0) is undefined.
pub const ALPHA_FLOOR: f64 = 1e-10;

/// Stick fractions are kept below this so `log(1 − V)` stays finite.
pub const STICK_CEILING: f64 = 1.0 - f64::EPSILON;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum BaselineMode {
    /// `λ_0^(j) = (1/d_j, …, 1/d_j)`.
    #[default]
    Uniform,
    /// Observed category proportions of each column.
    Empirical,
}

/// Dirichlet concentration of the active component vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Concentration {
    /// The same value for every category of every variable.
    Symmetric(f64),
    /// One vector per variable.
    PerVariable(Vec<Vec<f64>>),
}

impl Default for Concentration {
    fn default() -> Self {
        Concentration::Symmetric(1.0)
    }
}

impl Concentration {
    /// Concentration vectors for each variable.
    pub fn resolve(&self, levels: &[usize]) -> Result<Vec<Vec<f64>>> {
        let out = match self {
            Concentration::Symmetric(a) => levels.iter().map(|&d| vec![*a; d]).collect(),
            Concentration::PerVariable(v) => {
                if v.len() != levels.len() {
                    return Err(Error::Config(format!(
                        "{} Dirichlet vectors for {} variables",
                        v.len(),
                        levels.len()
                    )));
                }
                for (j, (a, &d)) in v.iter().zip(levels).enumerate() {
                    if a.len() != d {
                        return Err(Error::Config(format!(
                            "Dirichlet vector of variable {} has {} entries, expected {}",
                            j + 1,
                            a.len(),
                            d
                        )));
                    }
                }
                v.clone()
            }
        };
        if out.iter().flatten().any(|a| !(*a > 0.0) || !a.is_finite()) {
            return Err(Error::Config("Dirichlet concentrations must be positive".into()));
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PriorConfig {
    /// Truncation level `K`.
    pub truncation: usize,
    /// Sparsity penalty `γ`; `0` gives the standard (non-sparse) factorization.
    pub gamma: f64,
    pub alpha_shape: f64,
    pub alpha_rate: f64,
    pub dirichlet: Concentration,
    pub baseline: BaselineMode,
}

impl Default for PriorConfig {
    fn default() -> Self {
        Self {
            truncation: 20,
            gamma: 1.0,
            alpha_shape: 1.0,
            alpha_rate: 1.0,
            dirichlet: Concentration::default(),
            baseline: BaselineMode::Uniform,
        }
    }
}

impl PriorConfig {
    /// Defaults with `γ = 0.2 p`.
    pub fn for_variables(p: usize) -> Self {
        Self {
            gamma: 0.2 * p as f64,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.truncation == 0 {
            return Err(Error::Config("truncation level must be at least 1".into()));
        }
        if !(self.gamma >= 0.0) || !self.gamma.is_finite() {
            return Err(Error::Config(format!("gamma must be finite and nonnegative, got {}", self.gamma)));
        }
        if !(self.alpha_shape > 0.0 && self.alpha_rate > 0.0)
            || !self.alpha_shape.is_finite()
            || !self.alpha_rate.is_finite()
        {
            return Err(Error::Config("alpha hyperparameters must be positive".into()));
        }
        if let Concentration::Symmetric(a) = self.dirichlet {
            if !(a > 0.0) || !a.is_finite() {
                return Err(Error::Config("Dirichlet concentration must be positive".into()));
            }
        }
        Ok(())
    }
}

/// Baseline vector `λ_0^(j)` of 0-based variable `j` with `d` categories.
///
/// The empirical mode uses category proportions; categories never observed
/// are floored at `1/(2n)` and the vector renormalized.
pub fn baseline_vector(
    mode: BaselineMode,
    j: usize,
    d: usize,
    data: Option<&CategoricalDataset>,
) -> Result<SimplexVector> {
    match mode {
        BaselineMode::Uniform => Ok(SimplexVector::uniform(d)),
        BaselineMode::Empirical => {
            let data = data.ok_or_else(|| {
                Error::Config("empirical baseline requires a dataset".into())
            })?;
            if j >= data.p() || data.levels()[j] != d {
                return Err(Error::invalid(format!("variable {} does not match the dataset", j + 1)));
            }
            let counts = data.column_counts(j);
            let total: usize = counts.iter().sum();
            if total == 0 {
                return Err(Error::Data(format!(
                    "variable {} has no observed values for an empirical baseline",
                    j + 1
                )));
            }
            let floor = 1.0 / (2.0 * data.n() as f64);
            let props: Vec<f64> = counts
                .iter()
                .map(|&c| if c == 0 { floor } else { c as f64 / total as f64 })
                .collect();
            SimplexVector::normalized(props)
        }
    }
}

pub fn baseline_vectors(
    mode: BaselineMode,
    levels: &[usize],
    data: Option<&CategoricalDataset>,
) -> Result<Vec<SimplexVector>> {
    levels
        .iter()
        .enumerate()
        .map(|(j, &d)| baseline_vector(mode, j, d, data))
        .collect()
}

/// `Pr(|S_h| = s)` when flags are Bernoulli(τ) given `τ ~ Beta(1, γ)`:
/// `C(p, s) B(1 + s, γ + p − s) / B(1, γ)`.
///
/// The Beta-function ratio is expanded into falling factorials,
/// `γ Π_{m<s} (p − m) / Π_{m≤s} (γ + p − m)`, and accumulated on the log
/// scale; differencing `log Γ` at large `γ` loses about `1e-11` absolute.
pub fn beta_bernoulli_pmf(p: u64, gamma: f64, s: u64) -> Result<f64> {
    if s > p {
        return Err(Error::invalid(format!("subset size {s} exceeds {p}")));
    }
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::invalid(format!("gamma must be positive, got {gamma}")));
    }
    let top = p as f64;
    let mut ln = gamma.ln() - (gamma + top).ln();
    for m in 0..s {
        let m = m as f64;
        ln += (top - m).ln() - (gamma + top - m - 1.0).ln();
    }
    Ok(ln.exp().clamp(0.0, 1.0))
}

/// Same quantity through `log Γ`; used to cross-check the product form.
pub fn beta_bernoulli_pmf_lgamma(p: u64, gamma: f64, s: u64) -> Result<f64> {
    if s > p {
        return Err(Error::invalid(format!("subset size {s} exceeds {p}")));
    }
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::invalid(format!("gamma must be positive, got {gamma}")));
    }
    let ln = ln_choose(p, s) + ln_beta(1.0 + s as f64, gamma + (p - s) as f64) + gamma.ln();
    Ok(ln.exp().clamp(0.0, 1.0))
}

/// Draws `Beta(a, b)`, treating a zero second shape as a point mass at one.
pub(crate) fn draw_beta<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> f64 {
    if b <= 0.0 {
        return 1.0;
    }
    Beta::new(a, b)
        .expect("beta shapes are positive")
        .sample(rng)
}

/// Draws `Gamma(shape, rate)`.
pub(crate) fn draw_gamma<R: Rng + ?Sized>(shape: f64, rate: f64, rng: &mut R) -> f64 {
    Gamma::new(shape, 1.0 / rate)
        .expect("gamma parameters are positive")
        .sample(rng)
}

/// Log of a `Gamma(shape, 1)` draw, accurate for small shapes where the
/// variate itself would underflow.
pub(crate) fn draw_log_gamma<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> f64 {
    if shape >= 1.0 {
        draw_gamma(shape, 1.0, rng).ln()
    } else {
        // G(a) = G(a + 1) U^{1/a}
        let u: f64 = rng.random::<f64>();
        draw_gamma(shape + 1.0, 1.0, rng).ln() + (1.0 - u).ln() / shape
    }
}

/// Draws `V ~ Beta(a, b)` and returns `(V, log(1 − V))`. The stored fraction
/// is capped at [`STICK_CEILING`] but the log remainder is exact, so updates
/// that depend on `log(1 − V)` see the true value even when `b` is tiny.
pub(crate) fn draw_stick<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> (f64, f64) {
    if b <= 0.0 {
        return (STICK_CEILING, f64::NEG_INFINITY);
    }
    let lx = draw_log_gamma(a, rng);
    let ly = draw_log_gamma(b, rng);
    let m = lx.max(ly);
    let lse = m + ((lx - m).exp() + (ly - m).exp()).ln();
    ((lx - lse).exp().min(STICK_CEILING), ly - lse)
}

/// Fills `out` with a Dirichlet draw. Gamma variates are generated on the log
/// scale so small shapes do not underflow before normalization.
pub(crate) fn draw_dirichlet_into<R: Rng + ?Sized>(shape: &[f64], out: &mut [f64], rng: &mut R) {
    debug_assert_eq!(shape.len(), out.len());
    let mut max = f64::NEG_INFINITY;
    for (o, &a) in out.iter_mut().zip(shape) {
        *o = draw_log_gamma(a.max(DIRICHLET_SHAPE_FLOOR), rng);
        max = max.max(*o);
    }
    let mut total = 0.0;
    for o in out.iter_mut() {
        *o = (*o - max).exp();
        total += *o;
    }
    for o in out.iter_mut() {
        *o /= total;
    }
}

pub fn draw_dirichlet<R: Rng + ?Sized>(shape: &[f64], rng: &mut R) -> SimplexVector {
    let mut out = vec![0.0; shape.len()];
    draw_dirichlet_into(shape, &mut out, rng);
    SimplexVector::normalized(out).expect("dirichlet draw is a probability vector")
}

/// One draw of all model parameters from the prior.
///
/// `data` is needed only for the empirical baseline.
pub fn draw_prior<R: Rng + ?Sized>(
    config: &PriorConfig,
    levels: &[usize],
    data: Option<&CategoricalDataset>,
    rng: &mut R,
) -> Result<SpParafacParams> {
    config.validate()?;
    let baseline = baseline_vectors(config.baseline, levels, data)?;
    draw_prior_with_baseline(config, baseline, rng)
}

pub fn draw_prior_with_baseline<R: Rng + ?Sized>(
    config: &PriorConfig,
    baseline: Vec<SimplexVector>,
    rng: &mut R,
) -> Result<SpParafacParams> {
    config.validate()?;
    let levels: Vec<usize> = baseline.iter().map(SimplexVector::len).collect();
    let conc = config.dirichlet.resolve(&levels)?;
    let k = config.truncation;

    let alpha = draw_gamma(config.alpha_shape, config.alpha_rate, rng).max(ALPHA_FLOOR);
    let mut sticks: Vec<f64> = (0..k - 1)
        .map(|_| draw_stick(1.0, alpha, rng).0)
        .collect();
    sticks.push(1.0);
    let tau: Vec<f64> = (0..k).map(|_| draw_beta(1.0, config.gamma, rng)).collect();

    let components = tau
        .iter()
        .map(|&t| {
            conc.iter()
                .map(|a| {
                    let on = t >= 1.0 || rng.random::<f64>() < t;
                    on.then(|| draw_dirichlet(a, rng))
                })
                .collect()
        })
        .collect();

    SpParafacParams::from_parts(ParamsParts {
        levels,
        baseline,
        sticks,
        alpha,
        tau,
        components,
    })
}

/// Prior mean of `|S_h|`, `p / (1 + γ)`.
pub fn expected_active_per_component(p: usize, gamma: f64) -> f64 {
    p as f64 / (1.0 + gamma)
}
