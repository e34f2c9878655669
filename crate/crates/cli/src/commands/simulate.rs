use spparafac::io::{default_header, write_dataset_csv, write_json};

use super::{create_dir, resolve_scenario};
use crate::config::RunConfig;
use crate::SimulateArgs;

pub fn run(config: RunConfig, args: SimulateArgs) -> spparafac::Result<()> {
    let mut spec = resolve_scenario(config.simulate.scenario.clone(), args.scenario.as_deref(), args.n, args.p)?;
    if let Some(seed) = config.seed {
        spec.seed = seed;
    }
    spec.validate()?;
    let data = spec.generate()?;
    let truth = spec.truth()?;
    let out = config.out_dir();
    create_dir(&out)?;
    write_dataset_csv(out.join("data.csv"), &data, Some(&default_header(spec.p)))?;
    write_json(out.join("truth.json"), &truth)?;
    write_json(out.join("scenario.json"), &spec)?;
    eprintln!(
        "simulate: {} scenario, n = {}, p = {}, seed {} -> {}",
        spec.kind_name(),
        spec.n,
        spec.p,
        spec.seed,
        out.display()
    );
    Ok(())
}
