//! `linecomp eval`: score checkpoints on held-out completion samples.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::Args;
use rayon::prelude::*;

use linecomp::decode::{complete_line, BeamParams, ModeArtifacts};
use linecomp::metrics::{failure_record, render_report, score_sample, EvalReport, SampleRecord};
use linecomp::neural::{ModelConfig, ModelParams};
use linecomp::pycorpus::{CompletionSample, Token};

use crate::corpus::{
    check_vocab, find_data, gather_samples, load_checkpoint, write_text, PrepData,
    VALID_SOURCES_FILE,
};
use crate::error::{data, CliError};

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Prepared data directories; each checkpoint is paired with the one
    /// whose mode matches.  Repeatable.
    #[arg(long, required = true)]
    pub data: Vec<PathBuf>,
    /// Checkpoints to score.  Repeatable.
    #[arg(long, required = true)]
    pub checkpoint: Vec<PathBuf>,
    /// Beam width for candidate search.
    #[arg(long, default_value_t = 5)]
    pub beam: usize,
    /// Longest completion (in symbols) the search may emit.
    #[arg(long, default_value_t = 100)]
    pub max_target_len: usize,
    /// Cap on held-out samples per checkpoint.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Emit one comparison row per checkpoint instead of full reports.
    #[arg(long)]
    pub table: bool,
}

pub fn run(args: &EvalArgs) -> Result<(), CliError> {
    let datas = args
        .data
        .iter()
        .map(|d| PrepData::load(d))
        .collect::<Result<Vec<_>, _>>()?;
    let bparams = BeamParams {
        beam_width: args.beam,
        max_target_len: args.max_target_len,
        length_normalize: false,
    };

    let mut out = String::new();
    let mut rows: Vec<(String, EvalReport)> = Vec::new();
    for path in &args.checkpoint {
        let model = load_checkpoint(path)?;
        let prep = find_data(&datas, model.experiment.mode)?;
        check_vocab(&model, prep)?;
        let sources = prep.sources(VALID_SOURCES_FILE)?;
        let (mut samples, unreadable) = gather_samples(&sources, prep.config.max_len);
        if unreadable > 0 {
            eprintln!("{unreadable} validation sources no longer tokenize");
        }
        if let Some(cap) = args.samples {
            samples.truncate(cap);
        }
        if samples.is_empty() {
            return Err(data(format!(
                "no evaluation samples in the validation split of {}",
                prep.dir.display()
            )));
        }
        eprintln!(
            "evaluating {} on {} samples ({} mode, beam {})",
            model.label,
            samples.len(),
            prep.mode(),
            args.beam
        );
        let report = evaluate_parallel(
            &model.params,
            &model.mcfg,
            &prep.artifacts(),
            &samples,
            &bparams,
        );

        let mut experiment = model.experiment.clone();
        experiment.beam = args.beam;
        experiment.max_target_len = args.max_target_len;
        let _ = writeln!(out, "[{}]", model.label);
        out.push_str(&experiment.to_kv_text());
        out.push('\n');
        if args.table {
            rows.push((model.label.clone(), report));
        } else {
            out.push_str(&render_report(&report));
            out.push('\n');
        }
    }
    if args.table {
        out.push_str(&render_table(&rows));
    }

    match &args.report {
        Some(path) => {
            write_text(path, &out)?;
            println!("wrote {}", path.display());
        }
        None => print!("{out}"),
    }
    Ok(())
}

/// Same records `metrics::evaluate` produces, fanned out across workers;
/// collection keeps sample order, so the report is unchanged.
pub fn evaluate_parallel(
    params: &ModelParams<f32>,
    cfg: &ModelConfig,
    artifacts: &ModeArtifacts,
    samples: &[CompletionSample],
    bparams: &BeamParams,
) -> EvalReport {
    let records: Vec<SampleRecord> = samples
        .par_iter()
        .map(|sample| {
            let id = sample.id();
            let target = sample.target.content();
            match complete_line(params, cfg, artifacts, &sample.context, bparams) {
                Ok(found) => {
                    let candidates: Vec<Vec<Token>> =
                        found.candidates.iter().map(|c| c.tokens.clone()).collect();
                    score_sample(&id, &candidates, target)
                }
                Err(_) => failure_record(&id, target.len()),
            }
        })
        .collect();
    EvalReport::from_records(records)
}

/// One row per scored checkpoint, metrics as percentages.
fn render_table(rows: &[(String, EvalReport)]) -> String {
    let mut out = String::from(
        "label\tn\tacc1\tacc1_no_id\tacc5\tacc5_no_id\tmrr\tbleu4\tedit_sim\n",
    );
    for (label, r) in rows {
        let _ = writeln!(
            out,
            "{label}\t{}\t{:.2}\t{:.2}\t{:.2}\t{:.2}\t{:.2}\t{:.2}\t{:.2}",
            r.n_samples, r.acc1, r.acc1_no_id, r.acc5, r.acc5_no_id, r.mrr, r.bleu4, r.edit_sim
        );
    }
    out
}
