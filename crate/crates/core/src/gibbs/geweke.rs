//! Joint-distribution ("getting it right") check of the sampler.
//!
//! The marginal-conditional simulator draws parameters from the prior and
//! data given parameters. The successive-conditional simulator alternates a
//! Gibbs sweep with a fresh draw of the data given the current parameters and
//! allocations. Both target the same joint distribution, so the means of any
//! test function must agree up to Monte Carlo error.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::CategoricalDataset;
use crate::error::{Error, Result};
use crate::math::sample_probs;
use crate::model::SpParafacParams;
use crate::prior::{draw_prior, BaselineMode, PriorConfig};

use super::GibbsSampler;

pub const TEST_FUNCTIONS: [&str; 5] = [
    "tau_1",
    "active_flag_count",
    "nu_1",
    "alpha",
    "lambda_1_1_1",
];

fn test_functions(m: &SpParafacParams) -> [f64; 5] {
    [
        m.tau()[0],
        m.active_count() as f64,
        m.weights()[0],
        m.alpha(),
        m.lambda(0, 0)[0],
    ]
}

#[derive(Debug, Clone)]
pub struct GewekeConfig {
    pub n: usize,
    pub levels: Vec<usize>,
    pub prior: PriorConfig,
    /// Draws per simulator.
    pub samples: usize,
    /// Batches used for the variance of the successive-conditional mean.
    pub batches: usize,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct GewekeReport {
    pub names: Vec<&'static str>,
    pub marginal_mean: Vec<f64>,
    pub successive_mean: Vec<f64>,
    pub z_scores: Vec<f64>,
}

impl GewekeReport {
    pub fn max_abs_z(&self) -> f64 {
        self.z_scores.iter().fold(0.0, |m, z| m.max(z.abs()))
    }
}

/// Draws allocations from the weights and data from the component vectors.
pub fn simulate_data<R: Rng + ?Sized>(
    params: &SpParafacParams,
    n: usize,
    rng: &mut R,
) -> Result<(CategoricalDataset, Vec<u32>)> {
    let z: Vec<u32> = (0..n).map(|_| sample_probs(params.weights(), rng) as u32).collect();
    let data = simulate_given_z(params, &z, rng)?;
    Ok((data, z))
}

/// Draws data given allocations.
pub fn simulate_given_z<R: Rng + ?Sized>(
    params: &SpParafacParams,
    z: &[u32],
    rng: &mut R,
) -> Result<CategoricalDataset> {
    let p = params.num_variables();
    let mut values = Vec::with_capacity(z.len() * p);
    for &h in z {
        for j in 0..p {
            values.push(sample_probs(params.lambda(h as usize, j), rng) as u16 + 1);
        }
    }
    CategoricalDataset::new(params.levels().to_vec(), values)
}

fn batch_mean_variance(series: &[f64], batches: usize) -> f64 {
    let size = series.len() / batches;
    let means: Vec<f64> = series
        .chunks_exact(size)
        .take(batches)
        .map(|c| c.iter().sum::<f64>() / size as f64)
        .collect();
    let m = means.iter().sum::<f64>() / batches as f64;
    let var = means.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (batches - 1) as f64;
    var / batches as f64
}

pub fn geweke_test(config: &GewekeConfig) -> Result<GewekeReport> {
    if config.prior.baseline != BaselineMode::Uniform {
        return Err(Error::Config("the joint-distribution test needs a fixed baseline".into()));
    }
    if config.batches < 2 || config.samples < 2 * config.batches {
        return Err(Error::Config("too few samples for the requested batches".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let m = TEST_FUNCTIONS.len();

    let mut marginal = vec![Vec::with_capacity(config.samples); m];
    for _ in 0..config.samples {
        let params = draw_prior(&config.prior, &config.levels, None, &mut rng)?;
        for (series, v) in marginal.iter_mut().zip(test_functions(&params)) {
            series.push(v);
        }
    }

    let params = draw_prior(&config.prior, &config.levels, None, &mut rng)?;
    let (data, z) = simulate_data(&params, config.n, &mut rng)?;
    let mut sampler = GibbsSampler::new(data, config.prior.clone(), params, z)?;
    let mut successive = vec![Vec::with_capacity(config.samples); m];
    for _ in 0..config.samples {
        sampler.sweep(&mut rng)?;
        let fresh = simulate_given_z(sampler.params(), sampler.state().z(), &mut rng)?;
        sampler.replace_data(fresh)?;
        for (series, v) in successive.iter_mut().zip(test_functions(sampler.params())) {
            series.push(v);
        }
    }

    let mut report = GewekeReport {
        names: TEST_FUNCTIONS.to_vec(),
        marginal_mean: Vec::new(),
        successive_mean: Vec::new(),
        z_scores: Vec::new(),
    };
    for (a, b) in marginal.iter().zip(&successive) {
        let na = a.len() as f64;
        let ma = a.iter().sum::<f64>() / na;
        let va = a.iter().map(|x| (x - ma).powi(2)).sum::<f64>() / (na - 1.0) / na;
        let mb = b.iter().sum::<f64>() / b.len() as f64;
        let vb = batch_mean_variance(b, config.batches);
        report.marginal_mean.push(ma);
        report.successive_mean.push(mb);
        report.z_scores.push((ma - mb) / (va + vb).sqrt());
    }
    Ok(report)
}
