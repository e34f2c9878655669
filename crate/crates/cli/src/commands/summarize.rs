use std::path::Path;

use serde::Serialize;
use spparafac::inference::{
    posterior_functional_summary, significance_decision, summarize, Functional, Significance, SummaryReport,
};
use spparafac::io::{default_header, read_json, read_sample_set, write_histogram_csv, write_json, write_matrix_csv, LabelDictionary};
use spparafac::study::{coefficient_draws, coefficient_name, posterior_cramers_v};
use spparafac::{Error, Result, SpParafacParams};

use super::{create_dir, parse_pair, parse_positions};
use crate::config::{CellRequest, MarginalRequest, RunConfig};
use crate::SummarizeArgs;

#[derive(Serialize)]
struct Term {
    name: String,
    subset: Vec<usize>,
    significance: Significance,
    summary: SummaryReport,
}

#[derive(Serialize)]
struct CoefficientBlock {
    variables: Vec<usize>,
    terms: Vec<Term>,
}

#[derive(Serialize)]
struct CellSummary {
    variables: Vec<usize>,
    codes: Vec<usize>,
    summary: SummaryReport,
}

#[derive(Serialize)]
struct MarginalSummary {
    variable: usize,
    code: usize,
    summary: SummaryReport,
}

#[derive(Serialize)]
struct CramersVFiles {
    mean: String,
    q025: String,
    q975: String,
}

#[derive(Serialize)]
struct Summary {
    run: String,
    seed: u64,
    draws: usize,
    variables: Vec<String>,
    cramers_v: Option<CramersVFiles>,
    coefficients: Vec<CoefficientBlock>,
    cells: Vec<CellSummary>,
    marginals: Vec<MarginalSummary>,
}

fn check_position(j: usize, p: usize) -> Result<usize> {
    if j == 0 || j > p {
        return Err(Error::Request(format!("variable {j} outside 1..={p}")));
    }
    Ok(j - 1)
}

fn variable_names(run: &Path, p: usize) -> Vec<String> {
    match read_json::<LabelDictionary>(run.join("labels.json")) {
        Ok(d) if d.columns.len() == p => d.columns.into_iter().map(|c| c.name).collect(),
        _ => default_header(p),
    }
}

pub fn run(config: RunConfig, args: SummarizeArgs) -> Result<()> {
    let mut section = config.summarize.clone();
    if args.run.is_some() {
        section.run = args.run.clone();
    }
    section.cramers_v |= args.cramers_v;
    for b in &args.beta {
        section.beta.push(parse_positions(b)?);
    }
    for c in &args.cell {
        let pairs = c.split(',').map(parse_pair).collect::<Result<Vec<_>>>()?;
        section.cells.push(CellRequest {
            variables: pairs.iter().map(|p| p.0).collect(),
            codes: pairs.iter().map(|p| p.1).collect(),
        });
    }
    for m in &args.marginal {
        let (variable, code) = parse_pair(m)?;
        section.marginals.push(MarginalRequest { variable, code });
    }
    if let Some(b) = args.bins {
        section.bins = b;
    }
    if !section.cramers_v && section.beta.is_empty() && section.cells.is_empty() && section.marginals.is_empty() {
        return Err(Error::Request("nothing to summarize: pass --cramers-v, --beta, --cell or --marginal".into()));
    }

    let out = config.out_dir();
    let run_dir = section.run.clone().unwrap_or_else(|| out.clone());
    let samples = read_sample_set(run_dir.join("draws.jsonl"), run_dir.join("run_meta.json"))?;
    if samples.len() < 2 {
        return Err(Error::Data("the run has fewer than two retained draws".into()));
    }
    let p = samples.meta.levels.len();
    let draws: Vec<&SpParafacParams> = samples.params().collect();

    // Validate every request before computing anything.
    let mut beta_sets = Vec::new();
    for set in &section.beta {
        let mut vars = set.iter().map(|&j| check_position(j, p)).collect::<Result<Vec<_>>>()?;
        vars.sort_unstable();
        vars.dedup();
        if vars.is_empty() {
            return Err(Error::Request("empty coefficient variable set".into()));
        }
        if let Some(&j) = vars.iter().find(|&&j| samples.meta.levels[j] != 2) {
            return Err(Error::Request(format!("variable {} is not binary", j + 1)));
        }
        beta_sets.push(vars);
    }
    for c in &section.cells {
        if c.variables.len() != c.codes.len() || c.variables.is_empty() {
            return Err(Error::Request("cell request needs one code per variable".into()));
        }
        for &j in &c.variables {
            check_position(j, p)?;
        }
    }
    for m in &section.marginals {
        check_position(m.variable, p)?;
    }

    let hist_dir = out.join("histograms");
    create_dir(&hist_dir)?;
    let mut summary = Summary {
        run: run_dir.display().to_string(),
        seed: samples.meta.seed,
        draws: samples.len(),
        variables: variable_names(&run_dir, p),
        cramers_v: None,
        coefficients: Vec::new(),
        cells: Vec::new(),
        marginals: Vec::new(),
    };

    if section.cramers_v {
        let cv = posterior_cramers_v(&draws)?;
        let files = CramersVFiles {
            mean: "cramers_v_mean.csv".into(),
            q025: "cramers_v_q025.csv".into(),
            q975: "cramers_v_q975.csv".into(),
        };
        write_matrix_csv(out.join(&files.mean), &summary.variables, cv.mean.values())?;
        write_matrix_csv(out.join(&files.q025), &summary.variables, cv.q025.values())?;
        write_matrix_csv(out.join(&files.q975), &summary.variables, cv.q975.values())?;
        summary.cramers_v = Some(files);
    }

    for vars in beta_sets {
        let (subsets, values) = coefficient_draws(draws.iter().copied(), &vars)?;
        let mut terms = Vec::with_capacity(subsets.len());
        for (s, v) in subsets.iter().zip(&values) {
            let subset: Vec<usize> = s.iter().map(|j| j + 1).collect();
            let name = coefficient_name(&subset);
            let report = summarize(v, section.bins)?;
            write_histogram_csv(hist_dir.join(format!("{name}.csv")), &report.histogram)?;
            terms.push(Term { name, subset, significance: significance_decision(&report), summary: report });
        }
        summary.coefficients.push(CoefficientBlock { variables: vars.iter().map(|j| j + 1).collect(), terms });
    }

    for c in &section.cells {
        let f = Functional::CellProb {
            variables: c.variables.iter().map(|j| j - 1).collect(),
            codes: c.codes.clone(),
        };
        let report = posterior_functional_summary(draws.iter().copied(), &f, section.bins)?;
        let tag: Vec<String> = c.variables.iter().zip(&c.codes).map(|(j, k)| format!("{j}-{k}")).collect();
        write_histogram_csv(hist_dir.join(format!("cell_{}.csv", tag.join("_"))), &report.histogram)?;
        summary.cells.push(CellSummary { variables: c.variables.clone(), codes: c.codes.clone(), summary: report });
    }

    for m in &section.marginals {
        let f = Functional::Marginal { j: m.variable - 1, code: m.code };
        let report = posterior_functional_summary(draws.iter().copied(), &f, section.bins)?;
        write_histogram_csv(hist_dir.join(format!("marginal_{}-{}.csv", m.variable, m.code)), &report.histogram)?;
        summary.marginals.push(MarginalSummary { variable: m.variable, code: m.code, summary: report });
    }

    write_json(out.join("summary.json"), &summary)?;
    eprintln!("summarize: {} draws from {} -> {}", summary.draws, summary.run, out.display());
    for block in &summary.coefficients {
        for t in &block.terms {
            eprintln!(
                "  {:<14} mean {:>8.4} 95% [{:>8.4}, {:>8.4}] {:?}",
                t.name, t.summary.mean, t.summary.q025, t.summary.q975, t.significance
            );
        }
    }
    Ok(())
}
