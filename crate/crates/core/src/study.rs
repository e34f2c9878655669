//! Prior simulation and simulate→fit→summarize replication studies.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::CategoricalDataset;
use crate::error::{Error, Result};
use crate::gibbs::{run_chain_with_rng, GibbsConfig, PosteriorSampleSet};
use crate::inference::{
    cramers_v_model, loglinear_for_subset, loglinear_from_tensor, replicate_aggregate, significance_decision,
    summarize, AggregateRow, CramersVMatrix, IntervalOutcome, Significance, SummaryReport, DEFAULT_BINS,
};
use crate::model::SpParafacParams;
use crate::prior::{draw_prior, PriorConfig};
use crate::simgen::ScenarioSpec;
use crate::tensor::{full_tensor, univariate_marginal, DenseProbTensor};

/// Largest `p` for which prior simulation reports every coefficient of the
/// full tensor.
pub const FULL_COEFFICIENT_MAX_P: usize = 10;

/// Positions whose coefficients are tested as known nulls by default.
pub const DEFAULT_FAR_NULL: [usize; 4] = [20, 30, 40, 50];

/// `"b2"`, `"b2_12"`, … for 1-based positions.
pub fn coefficient_name(subset: &[usize]) -> String {
    let parts: Vec<String> = subset.iter().map(usize::to_string).collect();
    format!("b{}", parts.join("_"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorSimConfig {
    pub p: usize,
    #[serde(default = "two")]
    pub d: usize,
    pub draws: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_bins")]
    pub bins: usize,
    pub prior: PriorConfig,
}

fn two() -> usize {
    2
}

fn default_bins() -> usize {
    DEFAULT_BINS
}

/// Summary of one coefficient (1-based positions).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientSummary {
    pub name: String,
    pub subset: Vec<usize>,
    pub summary: SummaryReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorSimReport {
    pub p: usize,
    pub gamma: f64,
    pub draws: usize,
    pub seed: u64,
    /// Every nonempty subset, when `p ≤ FULL_COEFFICIENT_MAX_P`.
    pub coefficients: Vec<CoefficientSummary>,
    /// `Σ_j |β_j|` with `β_j` the log-odds of variable `j`'s marginal.
    pub main_l1: SummaryReport,
}

/// `Σ_j |log(π_j(2) / π_j(1))|` over the univariate marginals.
pub fn main_effect_l1(model: &SpParafacParams) -> Result<f64> {
    let mut total = 0.0;
    for j in 0..model.num_variables() {
        let m = univariate_marginal(model, j)?;
        if m.len() != 2 {
            return Err(Error::Unsupported("main-effect norm needs binary variables".into()));
        }
        total += (m[1].ln() - m[0].ln()).abs();
    }
    Ok(total)
}

/// Draws tensors from the prior and summarizes their log-linear coefficients.
pub fn prior_sim(config: &PriorSimConfig) -> Result<PriorSimReport> {
    if config.d != 2 {
        return Err(Error::Config("prior simulation reports binary log-linear coefficients; set d = 2".into()));
    }
    if config.p == 0 || config.draws < 2 {
        return Err(Error::Config("prior simulation needs p ≥ 1 and at least 2 draws".into()));
    }
    config.prior.validate()?;
    let levels = vec![2; config.p];
    let full = config.p <= FULL_COEFFICIENT_MAX_P;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut coeffs: Vec<Vec<f64>> = Vec::new();
    let mut subsets: Vec<Vec<usize>> = Vec::new();
    let mut l1 = Vec::with_capacity(config.draws);
    for _ in 0..config.draws {
        let model = draw_prior(&config.prior, &levels, None, &mut rng)?;
        l1.push(main_effect_l1(&model)?);
        if full {
            let b = loglinear_from_tensor(&full_tensor(&model)?)?;
            if subsets.is_empty() {
                subsets = b.subsets();
                coeffs = vec![Vec::with_capacity(config.draws); subsets.len()];
            }
            for (acc, (_, v)) in coeffs.iter_mut().zip(b.iter()) {
                acc.push(v);
            }
        }
    }
    let coefficients = subsets
        .into_iter()
        .zip(&coeffs)
        .map(|(s, values)| {
            let subset: Vec<usize> = s.iter().map(|j| j + 1).collect();
            Ok(CoefficientSummary { name: coefficient_name(&subset), subset, summary: summarize(values, config.bins)? })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PriorSimReport {
        p: config.p,
        gamma: config.prior.gamma,
        draws: config.draws,
        seed: config.seed,
        coefficients,
        main_l1: summarize(&l1, config.bins)?,
    })
}

/// Values of every coefficient over `variables` (0-based, sorted) for each
/// draw; `result[s][t]` is subset `s` (canonical order) at draw `t`.
pub fn coefficient_draws<'a, I>(draws: I, variables: &[usize]) -> Result<(Vec<Vec<usize>>, Vec<Vec<f64>>)>
where
    I: IntoIterator<Item = &'a SpParafacParams>,
{
    let mut subsets = Vec::new();
    let mut values: Vec<Vec<f64>> = Vec::new();
    for (index, m) in draws.into_iter().enumerate() {
        let b = loglinear_for_subset(m, variables).map_err(|e| Error::AtDraw { index, source: Box::new(e) })?;
        if subsets.is_empty() {
            subsets = b.subsets();
            values = vec![Vec::new(); subsets.len()];
        }
        for (acc, (_, v)) in values.iter_mut().zip(b.iter()) {
            acc.push(v);
        }
    }
    Ok((subsets, values))
}

/// Posterior mean and 2.5% / 97.5% quantiles of every pairwise Cramér's V.
#[derive(Debug, Clone, PartialEq)]
pub struct CramersVSummary {
    pub mean: CramersVMatrix,
    pub q025: CramersVMatrix,
    pub q975: CramersVMatrix,
}

pub fn posterior_cramers_v(draws: &[&SpParafacParams]) -> Result<CramersVSummary> {
    let Some(first) = draws.first() else {
        return Err(Error::invalid("no draws"));
    };
    let p = first.num_variables();
    let mut mean = identity(p);
    let mut lo = identity(p);
    let mut hi = identity(p);
    let mut values = vec![0.0; draws.len()];
    for a in 0..p {
        for b in a + 1..p {
            for (t, m) in draws.iter().enumerate() {
                values[t] = cramers_v_model(m, a, b).map_err(|e| Error::AtDraw { index: t, source: Box::new(e) })?;
            }
            let mu = crate::math::compensated_sum(values.iter().copied()) / draws.len() as f64;
            let mut sorted = values.clone();
            sorted.sort_by(f64::total_cmp);
            for (mat, v) in [
                (&mut mean, mu.clamp(0.0, 1.0)),
                (&mut lo, crate::inference::quantile_sorted(&sorted, 0.025)),
                (&mut hi, crate::inference::quantile_sorted(&sorted, 0.975)),
            ] {
                mat[a * p + b] = v;
                mat[b * p + a] = v;
            }
        }
    }
    Ok(CramersVSummary {
        mean: CramersVMatrix::from_values(p, mean)?,
        q025: CramersVMatrix::from_values(p, lo)?,
        q975: CramersVMatrix::from_values(p, hi)?,
    })
}

fn identity(p: usize) -> Vec<f64> {
    let mut v = vec![0.0; p * p];
    (0..p).for_each(|a| v[a * p + a] = 1.0);
    v
}

/// Average of the full probability tensors of the draws.
pub fn posterior_mean_tensor<'a, I>(draws: I) -> Result<DenseProbTensor>
where
    I: IntoIterator<Item = &'a SpParafacParams>,
{
    let mut acc: Option<(Vec<usize>, Vec<crate::math::CompensatedSum>)> = None;
    let mut count = 0usize;
    for m in draws {
        let t = full_tensor(m)?;
        let (_, sums) = acc.get_or_insert_with(|| (t.dims().to_vec(), vec![Default::default(); t.len()]));
        for (s, &x) in sums.iter_mut().zip(t.cells()) {
            s.add(x);
        }
        count += 1;
    }
    let (dims, sums) = acc.ok_or_else(|| Error::invalid("no draws"))?;
    DenseProbTensor::new(dims, sums.iter().map(|s| s.value() / count as f64).collect())
}

/// Separate random streams for data generation and for the chain.
const DATA_STREAM: u64 = 0;
const CHAIN_STREAM: u64 = 1;

/// Generator for `stream` of replicate seed `seed`.
pub fn replicate_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Simulates a dataset from `scenario` and fits it, both seeded from `seed`.
pub fn simulate_and_fit(scenario: &ScenarioSpec, gibbs: &GibbsConfig, seed: u64) -> Result<(CategoricalDataset, PosteriorSampleSet)> {
    let data = scenario.generate_with_rng(&mut replicate_rng(seed, DATA_STREAM))?;
    let config = GibbsConfig { seed, ..gibbs.clone() };
    let samples = run_chain_with_rng(&data, &config, &mut replicate_rng(seed, CHAIN_STREAM))?;
    Ok((data, samples))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReplicateConfig {
    pub scenario: ScenarioSpec,
    pub gibbs: GibbsConfig,
    pub replicates: usize,
    /// Replicate `r` uses seed `base_seed + r`.
    #[serde(default)]
    pub base_seed: u64,
    /// 1-based positions tested as known nulls; every nonempty subset is checked.
    #[serde(default = "far_null_default")]
    pub far_null: Vec<usize>,
}

fn far_null_default() -> Vec<usize> {
    DEFAULT_FAR_NULL.to_vec()
}

/// Interval results for one coefficient in one replicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientResult {
    pub name: String,
    pub truth: f64,
    pub mean: f64,
    pub q025: f64,
    pub q975: f64,
    pub significant: bool,
    pub covers_truth: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateResult {
    pub replicate: usize,
    pub seed: u64,
    pub coefficients: Vec<CoefficientResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateFailure {
    pub replicate: usize,
    pub seed: u64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateStudy {
    pub results: Vec<ReplicateResult>,
    pub failures: Vec<ReplicateFailure>,
    /// Active-set coefficients first, then the far-null coefficients.
    pub rows: Vec<AggregateRow>,
}

impl ReplicateConfig {
    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        self.gibbs.validate()?;
        if self.replicates == 0 {
            return Err(Error::Config("replicates must be at least 1".into()));
        }
        if self.scenario.d != 2 {
            return Err(Error::Config("coefficient replication needs a binary scenario (d = 2)".into()));
        }
        let mut far = self.far_null.clone();
        far.sort_unstable();
        far.dedup();
        if far.len() != self.far_null.len() || far.iter().any(|&j| j == 0 || j > self.scenario.p) {
            return Err(Error::Config("far_null positions must be distinct and within 1..=p".into()));
        }
        if far.iter().any(|j| self.scenario.active_set.contains(j)) {
            return Err(Error::Config("far_null positions must lie outside the active set".into()));
        }
        Ok(())
    }

    /// Tested coefficient names and true values, in output order.
    pub fn tested(&self) -> Result<Vec<(Vec<usize>, f64)>> {
        let truth = self.scenario.truth()?;
        let mut out = Vec::new();
        for set in [&self.scenario.active_set, &self.far_null] {
            if set.is_empty() {
                continue;
            }
            let mut sorted = set.clone();
            sorted.sort_unstable();
            for mask in crate::inference::canonical_masks(sorted.len()) {
                let subset: Vec<usize> =
                    (0..sorted.len()).filter(|k| mask >> k & 1 == 1).map(|k| sorted[k]).collect();
                let value = truth.coefficient(&subset).unwrap_or(0.0);
                out.push((subset, value));
            }
        }
        Ok(out)
    }
}

/// One replicate: simulate, fit, and check each tested coefficient's 95% interval.
pub fn run_replicate(config: &ReplicateConfig, replicate: usize) -> Result<ReplicateResult> {
    let seed = config.base_seed.wrapping_add(replicate as u64);
    let (_, samples) = simulate_and_fit(&config.scenario, &config.gibbs, seed)?;
    let tested = config.tested()?;
    let mut coefficients = Vec::with_capacity(tested.len());
    for set in [&config.scenario.active_set, &config.far_null] {
        if set.is_empty() {
            continue;
        }
        let mut vars: Vec<usize> = set.iter().map(|j| j - 1).collect();
        vars.sort_unstable();
        let (subsets, values) = coefficient_draws(samples.params(), &vars)?;
        for (s, v) in subsets.iter().zip(&values) {
            let subset: Vec<usize> = s.iter().map(|j| j + 1).collect();
            let truth = tested.iter().find(|(t, _)| *t == subset).map_or(0.0, |(_, v)| *v);
            let r = summarize(v, DEFAULT_BINS)?;
            coefficients.push(CoefficientResult {
                name: coefficient_name(&subset),
                truth,
                mean: r.mean,
                q025: r.q025,
                q975: r.q975,
                significant: significance_decision(&r) == Significance::Significant,
                covers_truth: r.q025 <= truth && truth <= r.q975,
            });
        }
    }
    Ok(ReplicateResult { replicate, seed, coefficients })
}

/// Runs every replicate (in parallel when the `parallel` feature is on) and
/// aggregates over those that completed.
pub fn run_replicates(config: &ReplicateConfig) -> Result<ReplicateStudy> {
    config.validate()?;
    let run = |r: usize| (r, run_replicate(config, r));
    #[cfg(feature = "parallel")]
    let outcomes: Vec<_> = {
        use rayon::prelude::*;
        (0..config.replicates).into_par_iter().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let outcomes: Vec<_> = (0..config.replicates).map(run).collect();

    let mut results = Vec::new();
    let mut failures = Vec::new();
    for (r, outcome) in outcomes {
        match outcome {
            Ok(res) => results.push(res),
            Err(e) => failures.push(ReplicateFailure {
                replicate: r,
                seed: config.base_seed.wrapping_add(r as u64),
                message: e.to_string(),
            }),
        }
    }
    if results.is_empty() {
        return Err(Error::Numerical(format!(
            "all {} replicates failed; first error: {}",
            failures.len(),
            failures.first().map_or("", |f| f.message.as_str())
        )));
    }
    let names: Vec<String> = results[0].coefficients.iter().map(|c| c.name.clone()).collect();
    let truths: Vec<f64> = results[0].coefficients.iter().map(|c| c.truth).collect();
    let table: Vec<Vec<IntervalOutcome>> = results
        .iter()
        .map(|r| {
            r.coefficients
                .iter()
                .map(|c| IntervalOutcome { significant: c.significant, covers_truth: c.covers_truth })
                .collect()
        })
        .collect();
    let rows = replicate_aggregate(&names, &truths, &table)?;
    Ok(ReplicateStudy { results, failures, rows })
}
