use std::path::Path;

use spparafac::simgen::ScenarioSpec;
use spparafac::{Error, GibbsConfig, PriorConfig, Result};

use crate::ChainArgs;

pub mod fit;
pub mod prior_sim;
pub mod replicate;
pub mod simulate;
pub mod summarize;

pub fn init_threads(threads: Option<usize>) -> Result<()> {
    let Some(n) = threads else { return Ok(()) };
    if n == 0 {
        return Err(Error::Config("--threads must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))
}

pub fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io { path: dir.display().to_string(), source: e })
}

/// Applies chain flags on top of `gibbs`; an unset `γ` becomes `0.2 p`.
pub fn apply_chain(gibbs: &mut GibbsConfig, args: &ChainArgs, gamma_given: bool, p: usize) {
    if !gamma_given {
        gibbs.prior.gamma = PriorConfig::for_variables(p).gamma;
    }
    if let Some(v) = args.iterations {
        gibbs.iterations = v;
    }
    if let Some(v) = args.burn_in {
        gibbs.burn_in = v;
    }
    if let Some(v) = args.thin {
        gibbs.thin = v;
    }
    if let Some(v) = args.truncation {
        gibbs.prior.truncation = v;
    }
    if let Some(v) = args.gamma {
        gibbs.prior.gamma = v;
    }
    if let Some(v) = args.baseline {
        gibbs.prior.baseline = v;
    }
}

pub fn builtin_scenario(name: &str) -> Result<ScenarioSpec> {
    match name {
        "loglinear" => Ok(ScenarioSpec::default_loglinear()),
        "subpop" => Ok(ScenarioSpec::default_subpop()),
        "glm" => Ok(ScenarioSpec::default_glm()),
        _ => Err(Error::Config(format!("unknown scenario '{name}' (expected loglinear, subpop or glm)"))),
    }
}

/// Resolves the scenario from the configured one, a built-in name and size overrides.
pub fn resolve_scenario(
    configured: Option<ScenarioSpec>,
    name: Option<&str>,
    n: Option<usize>,
    p: Option<usize>,
) -> Result<ScenarioSpec> {
    let mut spec = match name {
        Some(name) => builtin_scenario(name)?,
        None => configured.unwrap_or_else(ScenarioSpec::default_loglinear),
    };
    if let Some(n) = n {
        spec.n = n;
    }
    if let Some(p) = p {
        spec.p = p;
    }
    Ok(spec)
}

/// Parses `1,2,3` into positions.
pub fn parse_positions(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|t| t.trim().parse::<usize>().map_err(|_| Error::Request(format!("bad position '{t}' in '{s}'"))))
        .collect()
}

/// Parses `var:code`.
pub fn parse_pair(s: &str) -> Result<(usize, usize)> {
    let bad = || Error::Request(format!("expected var:code, got '{s}'"));
    let (a, b) = s.split_once(':').ok_or_else(bad)?;
    Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
}
