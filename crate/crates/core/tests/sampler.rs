mod common;

use common::*;
use spparafac::gibbs::geweke::simulate_data;
use spparafac::io::{read_draws_jsonl, write_draws_jsonl};
use spparafac::prior::{beta_bernoulli_pmf, draw_prior};
use spparafac::simgen::ScenarioSpec;
use spparafac::*;

#[test]
fn active_set_sizes_follow_the_beta_bernoulli_law() {
    let p = 12;
    let gamma = 3.0;
    let cfg = PriorConfig { gamma, truncation: 5, ..PriorConfig::default() };
    let mut g = rng(21);
    let mut counts = vec![0usize; p + 1];
    let draws = 4_000;
    for _ in 0..draws {
        let m = draw_prior(&cfg, &vec![2; p], None, &mut g).unwrap();
        for h in 0..m.num_components() {
            counts[m.active_in_component(h)] += 1;
        }
    }
    let total = (draws * cfg.truncation) as f64;
    // Pool sparse tail bins so every expected count is at least 5.
    let (mut chi, mut dof, mut obs, mut exp) = (0.0, 0usize, 0.0, 0.0);
    for s in 0..=p {
        obs += counts[s] as f64;
        exp += total * beta_bernoulli_pmf(p as u64, gamma, s as u64).unwrap();
        if exp >= 5.0 || s == p {
            chi += (obs - exp).powi(2) / exp;
            dof += 1;
            obs = 0.0;
            exp = 0.0;
        }
    }
    // 99.9% point of chi-square with up to 12 degrees of freedom is below 33.
    assert!(chi < 33.0, "chi-square {chi} with {} bins", dof);
}

#[test]
fn huge_penalty_leaves_prior_draws_at_baseline() {
    let cfg = PriorConfig { gamma: 1e6, ..PriorConfig::default() };
    let p = 10;
    let mut g = rng(8);
    let mut flags = 0usize;
    let draws = 1_000;
    for _ in 0..draws {
        flags += draw_prior(&cfg, &vec![3; p], None, &mut g).unwrap().active_count();
    }
    let cells = draws * cfg.truncation * p;
    assert!((flags as f64) / (cells as f64) < 1e-4, "{flags} of {cells}");
}

#[test]
fn chain_recovers_a_two_component_mixture() {
    let v = |a: f64| Some(SimplexVector::new(vec![a, 1.0 - a]).unwrap());
    let p = 5;
    let mut c1 = vec![None; p];
    let mut c2 = vec![None; p];
    for j in 0..3 {
        c1[j] = v(0.9);
        c2[j] = v(0.1);
    }
    let truth = SpParafacParams::from_weights(&[0.5, 0.5], vec![SimplexVector::uniform(2); p], vec![c1, c2]).unwrap();
    let (data, _) = simulate_data(&truth, 2_000, &mut rng(3)).unwrap();
    let config = GibbsConfig {
        iterations: 1_500,
        burn_in: 500,
        thin: 5,
        seed: 1,
        prior: PriorConfig::for_variables(p),
        ..GibbsConfig::default()
    };
    let samples = run_chain(&data, &config).unwrap();
    let draws: Vec<&SpParafacParams> = samples.params().collect();
    let est = spparafac::study::posterior_mean_tensor(draws.iter().copied()).unwrap();
    let exact = spparafac::tensor::full_tensor(&truth).unwrap();
    let dist = spparafac::tensor::l1_distance(&est, &exact).unwrap();
    assert!(dist < 0.1, "L1 {dist}");
    let cv = spparafac::inference::cramers_v_model(&truth, 0, 1).unwrap();
    let post: f64 = draws.iter().map(|m| spparafac::inference::cramers_v_model(m, 0, 1).unwrap()).sum::<f64>()
        / draws.len() as f64;
    assert!((post - cv).abs() < 0.05, "posterior V {post} truth {cv}");
    let null: f64 = draws.iter().map(|m| spparafac::inference::cramers_v_model(m, 3, 4).unwrap()).sum::<f64>()
        / draws.len() as f64;
    assert!(null < 0.03, "null V {null}");
}

#[test]
fn retained_draws_survive_the_file_format() {
    let data = ScenarioSpec { n: 50, p: 20, ..ScenarioSpec::default_loglinear() }.generate().unwrap();
    let config = GibbsConfig { iterations: 80, burn_in: 20, thin: 3, seed: 4, keep_z: true, ..GibbsConfig::default() };
    let samples = run_chain(&data, &config).unwrap();
    assert_eq!(samples.len(), config.retained_count());
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("draws.jsonl");
    write_draws_jsonl(&path, &samples).unwrap();
    let back = read_draws_jsonl(&path, &samples.meta).unwrap();
    assert_eq!(back.len(), samples.len());
    for (a, b) in back.iter().zip(&samples.draws) {
        assert_eq!(a.params, b.params);
        assert_eq!(a.z, b.z);
        assert_eq!(a.iteration, b.iteration);
    }
}

#[test]
fn different_seeds_give_different_chains() {
    let data = ScenarioSpec { n: 50, p: 20, ..ScenarioSpec::default_loglinear() }.generate().unwrap();
    let mut config = GibbsConfig { iterations: 40, burn_in: 10, thin: 1, seed: 1, ..GibbsConfig::default() };
    let a = run_chain(&data, &config).unwrap();
    config.seed = 2;
    let b = run_chain(&data, &config).unwrap();
    assert_ne!(a.draws.last().unwrap().params, b.draws.last().unwrap().params);
}
