//! Browser bindings for the demo page in `www/`. Every function returns a
//! JSON string so the page needs no generated TypeScript types.

use serde::Serialize;
use spparafac::inference::{cramers_v_empirical_matrix, summarize, Histogram};
use spparafac::prior::beta_bernoulli_pmf;
use spparafac::simgen::ScenarioSpec;
use spparafac::study::{posterior_cramers_v, prior_sim, simulate_and_fit, PriorSimConfig};
use spparafac::{GibbsConfig, PriorConfig, SpParafacParams};
use wasm_bindgen::prelude::*;

fn to_js<T: Serialize>(value: &T) -> Result<String, JsError> {
    serde_json::to_string(value).map_err(|e| JsError::new(&e.to_string()))
}

fn js_err(e: spparafac::Error) -> JsError {
    JsError::new(&e.to_string())
}

#[derive(Serialize)]
struct CoefficientView {
    name: String,
    mean: f64,
    sd: f64,
    edges: Vec<f64>,
    counts: Vec<u64>,
}

#[derive(Serialize)]
struct PriorView {
    coefficients: Vec<CoefficientView>,
    main_l1_mean: f64,
}

fn view(name: String, mean: f64, sd: f64, h: &Histogram) -> CoefficientView {
    CoefficientView { name, mean, sd, edges: h.edges.clone(), counts: h.counts.clone() }
}

/// Histograms of the log-linear coefficients induced by the prior on `p`
/// binary variables.
#[wasm_bindgen]
pub fn prior_coefficients(p: usize, gamma: f64, draws: usize, bins: usize, seed: u64) -> Result<String, JsError> {
    if p == 0 || p > 6 {
        return Err(JsError::new("choose between 1 and 6 variables"));
    }
    let report = prior_sim(&PriorSimConfig {
        p,
        d: 2,
        draws,
        seed,
        bins,
        prior: PriorConfig { gamma, ..PriorConfig::default() },
    })
    .map_err(js_err)?;
    let coefficients = report
        .coefficients
        .iter()
        .map(|c| view(c.name.clone(), c.summary.mean, c.summary.sd, &c.summary.histogram))
        .collect();
    to_js(&PriorView { coefficients, main_l1_mean: report.main_l1.mean })
}

/// Prior probabilities of each active-set size `0..=p`.
#[wasm_bindgen]
pub fn active_size_pmf(p: u32, gamma: f64) -> Result<String, JsError> {
    let pmf = (0..=p as u64)
        .map(|s| beta_bernoulli_pmf(p as u64, gamma, s))
        .collect::<spparafac::Result<Vec<f64>>>()
        .map_err(js_err)?;
    to_js(&pmf)
}

#[derive(Serialize)]
struct DependenceView {
    p: usize,
    active_set: Vec<usize>,
    posterior: Vec<f64>,
    empirical: Vec<f64>,
    null_posterior_mean: f64,
    null_empirical_mean: f64,
    alpha: CoefficientView,
}

/// Simulates the log-linear scenario, runs a short chain and returns the
/// posterior-mean and empirical Cramér's V matrices (row-major).
#[wasm_bindgen]
pub fn dependence_demo(n: usize, p: usize, iterations: usize, seed: u64) -> Result<String, JsError> {
    let scenario = ScenarioSpec { n, p, ..ScenarioSpec::default_loglinear() };
    let gibbs = GibbsConfig {
        iterations,
        burn_in: iterations / 2,
        thin: 2,
        prior: PriorConfig::for_variables(p),
        ..GibbsConfig::default()
    };
    let (data, samples) = simulate_and_fit(&scenario, &gibbs, seed).map_err(js_err)?;
    let draws: Vec<&SpParafacParams> = samples.params().collect();
    let posterior = posterior_cramers_v(&draws).map_err(js_err)?.mean;
    let empirical = cramers_v_empirical_matrix(&data).map_err(js_err)?;
    let active = scenario.active_indices();
    let (mut post, mut emp, mut count) = (0.0, 0.0, 0usize);
    for a in 0..p {
        for b in a + 1..p {
            if !(active.contains(&a) && active.contains(&b)) {
                post += posterior.get(a, b);
                emp += empirical.get(a, b);
                count += 1;
            }
        }
    }
    let alphas: Vec<f64> = draws.iter().map(|m| m.alpha()).collect();
    let alpha = summarize(&alphas, 30).map_err(js_err)?;
    to_js(&DependenceView {
        p,
        active_set: scenario.active_set.clone(),
        posterior: posterior.values().to_vec(),
        empirical: empirical.values().to_vec(),
        null_posterior_mean: post / count.max(1) as f64,
        null_empirical_mean: emp / count.max(1) as f64,
        alpha: view("alpha".into(), alpha.mean, alpha.sd, &alpha.histogram),
    })
}
