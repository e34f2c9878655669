use serde::Serialize;
use spparafac::io::{write_aggregate_csv, write_json};
use spparafac::study::{run_replicates, ReplicateConfig, ReplicateFailure};

use super::{apply_chain, create_dir, resolve_scenario};
use crate::config::RunConfig;
use crate::ReplicateArgs;

#[derive(Serialize)]
struct StudyMeta<'a> {
    config: &'a ReplicateConfig,
    completed: usize,
    failures: &'a [ReplicateFailure],
}

pub fn run(config: RunConfig, args: ReplicateArgs) -> spparafac::Result<()> {
    let section = config.replicate.clone();
    let scenario = resolve_scenario(section.scenario.clone(), args.scenario.as_deref(), args.n, args.p)?;
    let mut gibbs = section.gibbs.clone();
    apply_chain(&mut gibbs, &args.chain, section.gamma_given, scenario.p);
    let base_seed = args.base_seed.or(config.seed).unwrap_or(section.base_seed);
    let study_config = ReplicateConfig {
        scenario,
        gibbs,
        replicates: args.replicates.unwrap_or(section.replicates),
        base_seed,
        far_null: section.far_null.clone(),
    };
    study_config.validate()?;

    let out = config.out_dir();
    let rep_dir = out.join("replicates");
    create_dir(&rep_dir)?;
    let study = run_replicates(&study_config)?;
    for f in &study.failures {
        eprintln!("warning: replicate {} (seed {}) failed: {}", f.replicate, f.seed, f.message);
    }
    for r in &study.results {
        write_json(rep_dir.join(format!("replicate_{:04}.json", r.replicate)), r)?;
    }
    write_aggregate_csv(out.join("aggregate.csv"), &study.rows)?;
    write_json(
        out.join("study.json"),
        &StudyMeta { config: &study_config, completed: study.results.len(), failures: &study.failures },
    )?;
    eprintln!(
        "replicate: {} of {} replicates completed (base seed {}) -> {}",
        study.results.len(),
        study_config.replicates,
        base_seed,
        out.display()
    );
    for row in &study.rows {
        let label = if row.is_null() { "type I" } else { "power" };
        eprintln!(
            "  {:<14} truth {:>6.2} {:<6} {:.2} coverage {:.2}",
            row.name, row.truth, label, row.rejection_rate, row.coverage
        );
    }
    Ok(())
}
