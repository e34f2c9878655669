use spparafac::io::{parse_dataset_csv, write_draws_jsonl, write_json, write_trace_csv};
use spparafac::{run_chain, Error};

use super::{apply_chain, create_dir};
use crate::config::RunConfig;
use crate::FitArgs;

pub fn run(mut config: RunConfig, args: FitArgs) -> spparafac::Result<()> {
    if args.data.is_some() {
        config.fit.data = args.data.clone();
    }
    if args.levels.is_some() {
        config.fit.levels = args.levels.clone();
    }
    let path = config
        .fit
        .data
        .clone()
        .ok_or_else(|| Error::Config("fit needs a dataset (--data or fit.data)".into()))?;
    let parsed = parse_dataset_csv(&path, config.fit.levels.as_deref())?;
    let p = parsed.dataset.p();
    let mut gibbs = config.fit.gibbs.clone();
    apply_chain(&mut gibbs, &args.chain, config.fit.gamma_given, p);
    if args.keep_z {
        gibbs.keep_z = true;
    }
    if let Some(seed) = config.seed {
        gibbs.seed = seed;
    }
    gibbs.validate()?;
    config.fit.gibbs = gibbs.clone();
    config.fit.gamma_given = true;
    config.seed = Some(gibbs.seed);

    let out = config.out_dir();
    create_dir(&out)?;
    let samples = run_chain(&parsed.dataset, &gibbs)?;
    write_draws_jsonl(out.join("draws.jsonl"), &samples)?;
    write_json(out.join("run_meta.json"), &samples.meta)?;
    write_trace_csv(out.join("trace.csv"), &samples)?;
    write_json(out.join("labels.json"), &parsed.dictionary())?;
    write_json(out.join("config.json"), &config)?;
    eprintln!(
        "fit: n = {}, p = {}, {} draws retained (seed {}) in {:.1}s -> {}",
        parsed.dataset.n(),
        p,
        samples.len(),
        gibbs.seed,
        samples.meta.wall_time_secs,
        out.display()
    );
    Ok(())
}
