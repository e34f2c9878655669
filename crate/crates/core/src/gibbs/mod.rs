//! Gibbs sampler for the sparse factorization.
//!
//! Each sweep updates, in order:
//!
//! 1. `(S_hj, λ_h^(j))` for every component and variable, from the two-part
//!    mixture of the baseline point mass and the conjugate Dirichlet;
//! 2. `τ_h ~ Beta(1 + #active_h, γ + #inactive_h)`;
//! 3. `V_h ~ Beta(1 + n_h, α + Σ_{l>h} n_l)` for `h < K`;
//! 4. `z_i` from its multinomial full conditional;
//! 5. `α ~ Gamma(a_α + K − 1, b_α − Σ_{h<K} log(1 − V_h))`.
//!
//! All mixture and allocation weights are computed on the log scale. The
//! truncation `K` is fixed and every component is updated on every sweep.

pub mod geweke;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{CategoricalDataset, MISSING};
use crate::error::{Error, Result};
use crate::math::{ln_gamma, sample_log_weights};
use crate::model::SpParafacParams;
use crate::prior::{
    self, draw_beta, draw_dirichlet_into, draw_gamma, draw_stick, PriorConfig, ALPHA_FLOOR,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GibbsConfig {
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    /// Keep the allocation vector of every retained draw.
    pub keep_z: bool,
    pub prior: PriorConfig,
}

impl Default for GibbsConfig {
    fn default() -> Self {
        Self {
            iterations: 25_000,
            burn_in: 10_000,
            thin: 5,
            seed: 0,
            keep_z: false,
            prior: PriorConfig::default(),
        }
    }
}

impl GibbsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.burn_in >= self.iterations {
            return Err(Error::Config(format!(
                "burn-in ({}) must be smaller than the number of iterations ({})",
                self.burn_in, self.iterations
            )));
        }
        if self.thin == 0 {
            return Err(Error::Config("thinning interval must be at least 1".into()));
        }
        self.prior.validate()
    }

    /// Number of draws `run_chain` keeps.
    pub fn retained_count(&self) -> usize {
        (self.iterations - self.burn_in) / self.thin
    }

    fn retains(&self, iteration: usize) -> bool {
        iteration > self.burn_in && (iteration - self.burn_in) % self.thin == 0
    }
}

/// Normalized log weights `(log w0, log w1)` of the baseline and Dirichlet
/// parts of the `λ_h^(j)` full conditional.
///
/// `counts[c]` is the number of subjects in the component with category `c`;
/// `concentration` is the Dirichlet prior vector.
pub fn lambda_mixture_logweights(
    counts: &[u32],
    tau: f64,
    baseline: &[f64],
    concentration: &[f64],
) -> (f64, f64) {
    if tau <= 0.0 {
        return (0.0, f64::NEG_INFINITY);
    }
    if tau >= 1.0 {
        return (f64::NEG_INFINITY, 0.0);
    }
    let mut log_w0 = (-tau).ln_1p();
    let mut log_w1 = tau.ln();
    let (mut a_sum, mut n_sum) = (0.0, 0.0);
    for ((&n, &b), &a) in counts.iter().zip(baseline).zip(concentration) {
        if n > 0 {
            let n = n as f64;
            log_w0 += n * b.ln();
            log_w1 += ln_gamma(a + n) - ln_gamma(a);
            n_sum += n;
        }
        a_sum += a;
    }
    log_w1 -= ln_gamma(a_sum + n_sum) - ln_gamma(a_sum);
    let hi = log_w0.max(log_w1);
    let norm = hi + ((log_w0 - hi).exp() + (log_w1 - hi).exp()).ln();
    (log_w0 - norm, log_w1 - norm)
}

/// Parameters, allocations and the sufficient statistics derived from them.
#[derive(Debug, Clone)]
pub struct ChainState {
    params: SpParafacParams,
    z: Vec<u32>,
    counts: Vec<u32>,
    occupancy: Vec<usize>,
}

impl ChainState {
    pub fn params(&self) -> &SpParafacParams {
        &self.params
    }

    /// 0-based component of every subject.
    pub fn z(&self) -> &[u32] {
        &self.z
    }

    /// `n_hjc` for all categories `c` of variable `j` in component `h`.
    pub fn counts(&self, h: usize, j: usize) -> &[u32] {
        let w = self.params.width();
        let off = self.params.offsets();
        &self.counts[h * w + off[j]..h * w + off[j + 1]]
    }

    /// `n_h`, the number of subjects allocated to each component.
    pub fn occupancy(&self) -> &[usize] {
        &self.occupancy
    }

    pub fn occupied_components(&self) -> usize {
        self.occupancy.iter().filter(|&&n| n > 0).count()
    }

    /// Verifies the count invariants against `data` and the parameter invariants.
    pub fn check_invariants(&self, data: &CategoricalDataset) -> Result<()> {
        self.params.check_invariants()?;
        let k = self.params.num_components();
        if self.occupancy.iter().sum::<usize>() != data.n() {
            return Err(Error::Numerical("occupancy does not sum to n".into()));
        }
        for h in 0..k {
            for j in 0..data.p() {
                let expect = (0..data.n())
                    .filter(|&i| self.z[i] as usize == h && data.get(i, j).is_some())
                    .count();
                let got: u32 = self.counts(h, j).iter().sum();
                if got as usize != expect {
                    return Err(Error::Numerical(format!(
                        "counts of component {} variable {} are stale",
                        h + 1,
                        j + 1
                    )));
                }
            }
        }
        Ok(())
    }
}

/// One retained posterior draw.
#[derive(Debug, Clone, PartialEq)]
pub struct RetainedDraw {
    pub iteration: usize,
    pub params: SpParafacParams,
    pub occupied: usize,
    pub z: Option<Vec<u32>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub config: GibbsConfig,
    pub seed: u64,
    pub n: usize,
    pub levels: Vec<usize>,
    /// Baseline vectors `λ_0^(j)` used by the chain.
    pub baseline: Vec<Vec<f64>>,
    pub wall_time_secs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSampleSet {
    pub draws: Vec<RetainedDraw>,
    pub meta: RunMeta,
}

impl PosteriorSampleSet {
    pub fn params(&self) -> impl Iterator<Item = &SpParafacParams> {
        self.draws.iter().map(|d| &d.params)
    }

    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }
}

/// Sampler state together with the data and precomputed prior constants.
#[derive(Debug, Clone)]
pub struct GibbsSampler {
    data: CategoricalDataset,
    prior: PriorConfig,
    /// Dirichlet concentration laid out like a component row.
    concentration: Vec<f64>,
    /// Observed cell positions (variable offset + category) per subject.
    cell_index: Vec<u32>,
    cell_start: Vec<usize>,
    state: ChainState,
    log_lambda: Vec<f64>,
    scratch: Vec<f64>,
    shape: Vec<f64>,
    /// `log(1 − V_h)` of the free sticks, kept exactly for the `α` update.
    log_rest: Vec<f64>,
}

impl GibbsSampler {
    /// Starts from given parameters and allocations (0-based components).
    pub fn new(
        data: CategoricalDataset,
        prior: PriorConfig,
        params: SpParafacParams,
        z: Vec<u32>,
    ) -> Result<Self> {
        prior.validate()?;
        if params.levels() != data.levels() {
            return Err(Error::invalid("model and dataset dimensions differ"));
        }
        if params.num_components() != prior.truncation {
            return Err(Error::invalid(format!(
                "model has {} components but the truncation level is {}",
                params.num_components(),
                prior.truncation
            )));
        }
        if z.len() != data.n() || z.iter().any(|&h| h as usize >= prior.truncation) {
            return Err(Error::invalid("allocations do not match the data and truncation"));
        }
        let concentration = prior.dirichlet.resolve(data.levels())?.concat();
        let k = prior.truncation;
        let width = params.width();
        let max_d = data.levels().iter().copied().max().unwrap_or(0);
        let log_rest = params.sticks()[..k - 1].iter().map(|v| (-v).ln_1p()).collect();
        let mut sampler = Self {
            data,
            prior,
            concentration,
            cell_index: Vec::new(),
            cell_start: Vec::new(),
            state: ChainState {
                params,
                z,
                counts: vec![0; k * width],
                occupancy: vec![0; k],
            },
            log_lambda: vec![0.0; k * width],
            scratch: vec![0.0; k],
            shape: vec![0.0; max_d],
            log_rest,
        };
        sampler.index_cells();
        sampler.rebuild_counts();
        Ok(sampler)
    }

    /// Starts from a prior draw with allocations uniform over the components.
    pub fn from_prior<R: Rng + ?Sized>(
        data: CategoricalDataset,
        prior: PriorConfig,
        rng: &mut R,
    ) -> Result<Self> {
        let params = prior::draw_prior(&prior, data.levels(), Some(&data), rng)?;
        let k = prior.truncation as u32;
        let z = (0..data.n()).map(|_| rng.random_range(0..k)).collect();
        Self::new(data, prior, params, z)
    }

    pub fn state(&self) -> &ChainState {
        &self.state
    }

    pub fn data(&self) -> &CategoricalDataset {
        &self.data
    }

    pub fn params(&self) -> &SpParafacParams {
        &self.state.params
    }

    /// Swaps in a new dataset of the same shape and recomputes the counts.
    pub fn replace_data(&mut self, data: CategoricalDataset) -> Result<()> {
        if data.levels() != self.data.levels() || data.n() != self.data.n() {
            return Err(Error::invalid("replacement data must have the same shape"));
        }
        self.data = data;
        self.index_cells();
        self.rebuild_counts();
        Ok(())
    }

    /// Overwrites the allocations and recomputes the counts.
    pub fn set_z(&mut self, z: Vec<u32>) -> Result<()> {
        if z.len() != self.data.n() || z.iter().any(|&h| h as usize >= self.prior.truncation) {
            return Err(Error::invalid("allocations do not match the data and truncation"));
        }
        self.state.z = z;
        self.rebuild_counts();
        Ok(())
    }

    fn index_cells(&mut self) {
        let offsets = offsets(self.data.levels());
        self.cell_index.clear();
        self.cell_start.clear();
        for i in 0..self.data.n() {
            self.cell_start.push(self.cell_index.len());
            for (j, &c) in self.data.row(i).iter().enumerate() {
                if c != MISSING {
                    self.cell_index.push((offsets[j] + c as usize - 1) as u32);
                }
            }
        }
        self.cell_start.push(self.cell_index.len());
    }

    fn rebuild_counts(&mut self) {
        let width = self.state.params.width();
        self.state.counts.iter_mut().for_each(|c| *c = 0);
        self.state.occupancy.iter_mut().for_each(|c| *c = 0);
        for i in 0..self.data.n() {
            let h = self.state.z[i] as usize;
            self.state.occupancy[h] += 1;
            let base = h * width;
            for &idx in &self.cell_index[self.cell_start[i]..self.cell_start[i + 1]] {
                self.state.counts[base + idx as usize] += 1;
            }
        }
    }

    /// Step 1: allocation flags and component vectors.
    pub fn update_lambda<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let params = &mut self.state.params;
        let k = params.num_components();
        let p = params.num_variables();
        let width = params.width();
        let offsets = params.offsets().to_vec();
        for h in 0..k {
            let tau = params.tau()[h];
            for j in 0..p {
                let (lo, hi) = (offsets[j], offsets[j + 1]);
                let counts = &self.state.counts[h * width + lo..h * width + hi];
                let conc = &self.concentration[lo..hi];
                let (_, log_w1) = lambda_mixture_logweights(counts, tau, params.baseline(j), conc);
                let active = if log_w1 == 0.0 {
                    true
                } else if log_w1 == f64::NEG_INFINITY {
                    false
                } else {
                    rng.random::<f64>() < log_w1.exp()
                };
                if active {
                    let shape = &mut self.shape[..hi - lo];
                    for ((s, &a), &n) in shape.iter_mut().zip(conc).zip(counts) {
                        *s = a + n as f64;
                    }
                    draw_dirichlet_into(shape, params.activate(h, j), rng);
                } else {
                    params.set_inactive(h, j);
                }
            }
        }
    }

    /// Step 2: `τ_h` given the allocation flags.
    pub fn update_tau<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let params = &mut self.state.params;
        let p = params.num_variables();
        let gamma = self.prior.gamma;
        for h in 0..params.num_components() {
            let on = params.active_in_component(h);
            params.tau_mut()[h] = draw_beta(1.0 + on as f64, gamma + (p - on) as f64, rng);
        }
    }

    /// Step 3: stick fractions given the occupancy counts.
    pub fn update_sticks<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let alpha = self.state.params.alpha();
        let occ = &self.state.occupancy;
        let k = occ.len();
        let mut tail: usize = occ.iter().sum();
        let sticks = self.state.params.sticks_mut();
        for h in 0..k - 1 {
            tail -= occ[h];
            (sticks[h], self.log_rest[h]) = draw_stick(1.0 + occ[h] as f64, alpha + tail as f64, rng);
        }
        sticks[k - 1] = 1.0;
        self.state.params.refresh_weights();
    }

    /// Step 4: component allocations, then the sufficient statistics.
    pub fn update_z<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<()> {
        let params = &self.state.params;
        let k = params.num_components();
        let width = params.width();
        for (dst, &l) in self.log_lambda.iter_mut().zip(params.lambda_table()) {
            *dst = l.ln();
        }
        let log_nu: Vec<f64> = params.weights().iter().map(|w| w.ln()).collect();
        for i in 0..self.data.n() {
            let cells = &self.cell_index[self.cell_start[i]..self.cell_start[i + 1]];
            for h in 0..k {
                let row = &self.log_lambda[h * width..(h + 1) * width];
                let mut acc = log_nu[h];
                for &idx in cells {
                    acc += row[idx as usize];
                }
                self.scratch[h] = acc;
            }
            match sample_log_weights(&mut self.scratch, rng) {
                Some(h) => self.state.z[i] = h as u32,
                None => {
                    return Err(Error::Numerical(format!(
                        "subject {} has zero probability under every component (weights {:?})",
                        i + 1,
                        params.weights()
                    )))
                }
            }
        }
        self.rebuild_counts();
        Ok(())
    }

    /// Full-conditional allocation probabilities of subject `i` under the
    /// current parameters.
    pub fn allocation_probabilities(&self, i: usize) -> Result<Vec<f64>> {
        let params = &self.state.params;
        let mut w: Vec<f64> = (0..params.num_components())
            .map(|h| {
                let row = params.component_row(h);
                self.cell_index[self.cell_start[i]..self.cell_start[i + 1]]
                    .iter()
                    .fold(params.weights()[h].ln(), |acc, &idx| acc + row[idx as usize].ln())
            })
            .collect();
        crate::math::normalize_log_weights(&mut w)
            .ok_or_else(|| Error::Numerical(format!("subject {} has zero probability", i + 1)))?;
        Ok(w)
    }

    /// Step 5: concentration `α` given the free stick fractions.
    pub fn update_alpha<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let shape = self.prior.alpha_shape + self.log_rest.len() as f64;
        let rate = self.prior.alpha_rate - self.log_rest.iter().sum::<f64>();
        let alpha = draw_gamma(shape, rate, rng).max(ALPHA_FLOOR);
        self.state.params.set_alpha(alpha);
    }

    /// One full sweep in the fixed order λ, τ, V, z, α.
    pub fn sweep<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<()> {
        self.update_lambda(rng);
        self.update_tau(rng);
        self.update_sticks(rng);
        self.update_z(rng)?;
        self.update_alpha(rng);
        Ok(())
    }
}

fn offsets(levels: &[usize]) -> Vec<usize> {
    crate::model::offsets_for(levels)
}

#[cfg(not(target_arch = "wasm32"))]
fn clock() -> Option<std::time::Instant> {
    Some(std::time::Instant::now())
}

#[cfg(target_arch = "wasm32")]
fn clock() -> Option<std::time::Instant> {
    None
}

/// Runs a chain seeded from `config.seed`.
pub fn run_chain(data: &CategoricalDataset, config: &GibbsConfig) -> Result<PosteriorSampleSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    run_chain_with_rng(data, config, &mut rng)
}

/// Initializes from the prior, sweeps `config.iterations` times and keeps
/// every `thin`-th draw after burn-in.
pub fn run_chain_with_rng<R: Rng + ?Sized>(
    data: &CategoricalDataset,
    config: &GibbsConfig,
    rng: &mut R,
) -> Result<PosteriorSampleSet> {
    config.validate()?;
    let start = clock();
    let mut sampler = GibbsSampler::from_prior(data.clone(), config.prior.clone(), rng)?;
    let mut draws = Vec::with_capacity(config.retained_count());
    for iteration in 1..=config.iterations {
        sampler.sweep(rng).map_err(|e| Error::AtIteration {
            iteration,
            source: Box::new(e),
        })?;
        if config.retains(iteration) {
            let state = sampler.state();
            draws.push(RetainedDraw {
                iteration,
                params: state.params.clone(),
                occupied: state.occupied_components(),
                z: config.keep_z.then(|| state.z.clone()),
            });
        }
    }
    Ok(PosteriorSampleSet {
        draws,
        meta: RunMeta {
            config: config.clone(),
            seed: config.seed,
            n: data.n(),
            levels: data.levels().to_vec(),
            baseline: (0..data.p()).map(|j| sampler.params().baseline(j).to_vec()).collect(),
            wall_time_secs: start.map_or(0.0, |s| s.elapsed().as_secs_f64()),
        },
    })
}
