//! `linecomp bench`: wall-clock seconds per completed line, one row per
//! checkpoint, with the share spent in legality masking.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::Args;

use linecomp::decode::{bench_inference, BeamParams, BenchEntry};
use linecomp::neural::Arch;
use linecomp::pycorpus::Token;

use crate::corpus::{
    check_vocab, find_data, gather_samples, load_checkpoint, write_text, PrepData,
    VALID_SOURCES_FILE,
};
use crate::error::{data, CliError};

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Prepared data directories; each checkpoint is paired with the one
    /// whose mode matches.  Repeatable.
    #[arg(long, required = true)]
    pub data: Vec<PathBuf>,
    /// Checkpoints to time.  Repeatable.
    #[arg(long, required = true)]
    pub checkpoint: Vec<PathBuf>,
    /// Beam width for candidate search.
    #[arg(long, default_value_t = 5)]
    pub beam: usize,
    /// Longest completion (in symbols) the search may emit.
    #[arg(long, default_value_t = 100)]
    pub max_target_len: usize,
    /// Contexts timed per checkpoint.
    #[arg(long, default_value_t = 20)]
    pub samples: usize,
    /// Write the table here instead of stdout.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

pub fn run(args: &BenchArgs) -> Result<(), CliError> {
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
    let mut entries: Vec<(BenchEntry, Arch)> = Vec::new();
    for path in &args.checkpoint {
        let model = load_checkpoint(path)?;
        let prep = find_data(&datas, model.experiment.mode)?;
        check_vocab(&model, prep)?;
        let sources = prep.sources(VALID_SOURCES_FILE)?;
        let (samples, _) = gather_samples(&sources, prep.config.max_len);
        let contexts: Vec<Vec<Token>> = samples
            .iter()
            .take(args.samples)
            .map(|s| s.context.clone())
            .collect();
        if contexts.is_empty() {
            return Err(data(format!(
                "no contexts to time in the validation split of {}",
                prep.dir.display()
            )));
        }
        eprintln!(
            "timing {} on {} contexts ({} mode, beam {})",
            model.label,
            contexts.len(),
            prep.mode(),
            args.beam
        );
        let entry = bench_inference(
            &model.label,
            &model.params,
            &model.mcfg,
            &prep.artifacts(),
            &contexts,
            &bparams,
        );

        let mut experiment = model.experiment.clone();
        experiment.beam = args.beam;
        experiment.max_target_len = args.max_target_len;
        let _ = writeln!(out, "[{}]", model.label);
        out.push_str(&experiment.to_kv_text());
        out.push('\n');
        entries.push((entry, model.mcfg.arch));
    }

    out.push_str("label\tmode\tarch\tbeam\tlines\tfailures\tmean_s_per_line\tmask_share\n");
    for (e, arch) in &entries {
        let _ = writeln!(
            out,
            "{}\t{}\t{arch}\t{}\t{}\t{}\t{:.4}\t{:.3}",
            e.label, e.mode, e.beam_width, e.n_lines, e.failures, e.mean_seconds, e.mask_share
        );
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
