use serde::Serialize;
use spparafac::inference::Histogram;
use spparafac::io::{write_histogram_csv, write_json};
use spparafac::study::{prior_sim, PriorSimConfig, PriorSimReport};

use super::create_dir;
use crate::config::RunConfig;
use crate::PriorSimArgs;

#[derive(Serialize)]
struct Output<'a> {
    #[serde(flatten)]
    report: &'a PriorSimReport,
    truncation: usize,
}

pub fn run(config: RunConfig, args: PriorSimArgs) -> spparafac::Result<()> {
    let mut section = config.prior_sim.clone();
    if let Some(v) = args.p {
        section.p = v;
    }
    if let Some(v) = args.d {
        section.d = v;
    }
    if let Some(v) = args.draws {
        section.draws = v;
    }
    if let Some(v) = args.gamma {
        section.prior.gamma = v;
    }
    if let Some(v) = args.truncation {
        section.prior.truncation = v;
    }
    if let Some(v) = args.bins {
        section.bins = v;
    }
    let sim = PriorSimConfig {
        p: section.p,
        d: section.d,
        draws: section.draws,
        seed: config.seed.unwrap_or(0),
        bins: section.bins,
        prior: section.prior.clone(),
    };
    let report = prior_sim(&sim)?;
    let out = config.out_dir();
    let hist_dir = out.join("histograms");
    create_dir(&hist_dir)?;
    write_json(
        out.join("prior_summary.json"),
        &Output { report: &report, truncation: sim.prior.truncation },
    )?;
    let write = |name: &str, h: &Histogram| write_histogram_csv(hist_dir.join(format!("{name}.csv")), h);
    write("main_l1", &report.main_l1.histogram)?;
    for c in &report.coefficients {
        write(&c.name, &c.summary.histogram)?;
    }
    eprintln!(
        "prior-sim: p = {}, gamma = {}, {} draws, mean |beta_main|_1 = {:.4} -> {}",
        sim.p,
        sim.prior.gamma,
        sim.draws,
        report.main_l1.mean,
        out.display()
    );
    for c in &report.coefficients {
        let s = &c.summary;
        eprintln!("  {:<10} mean {:>8.4} sd {:>8.4} min {:>9.3} max {:>9.3}", c.name, s.mean, s.sd, s.min, s.max);
    }
    Ok(())
}
