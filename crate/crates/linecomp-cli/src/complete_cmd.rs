//! `linecomp complete`: propose full next lines after a prefix, either
//! once for a file or in an interactive accept/edit loop.

use std::io::{self, BufRead, Write};
use std::path::PathBuf;

use clap::Args;

use linecomp::decode::{complete_line, BeamParams, Completions};
use linecomp::pycorpus::{flatten_lines, tokenize_file, LineCategory};

use crate::corpus::{check_vocab, load_checkpoint, read_text, LoadedModel, PrepData};
use crate::error::{data, user, CliError};

#[derive(Debug, Args)]
pub struct CompleteArgs {
    /// Source file whose end is the completion point.
    pub file: Option<PathBuf>,
    /// Prepared data directory the checkpoint was trained from.
    #[arg(long)]
    pub data: PathBuf,
    /// Checkpoint to complete with.
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Beam width; one candidate is printed per beam slot.
    #[arg(long, default_value_t = 5)]
    pub beam: usize,
    /// Longest completion (in symbols) the search may emit.
    #[arg(long, default_value_t = 100)]
    pub max_target_len: usize,
    /// Read lines from stdin: pick a candidate by number, type a line to
    /// insert it instead, `q` to quit.
    #[arg(long)]
    pub interactive: bool,
}

pub fn run(args: &CompleteArgs) -> Result<(), CliError> {
    let prep = PrepData::load(&args.data)?;
    let model = load_checkpoint(&args.checkpoint)?;
    if model.experiment.mode != prep.mode() {
        return Err(user(format!(
            "checkpoint {} is a {} model but {} is prepared in {} mode",
            model.label,
            model.experiment.mode,
            prep.dir.display(),
            prep.mode()
        )));
    }
    check_vocab(&model, &prep)?;
    let bparams = BeamParams {
        beam_width: args.beam,
        max_target_len: args.max_target_len,
        length_normalize: false,
    };

    if args.interactive {
        let stdin = io::stdin();
        interactive_loop(&model, &prep, &bparams, stdin.lock(), io::stdout())
    } else {
        let path = args
            .file
            .as_ref()
            .ok_or_else(|| user("give a source file or pass --interactive"))?;
        let source = read_text(path)?;
        let completions = complete_source(&model, &prep, &bparams, &source)?;
        let mut stdout = io::stdout();
        print_candidates(&mut stdout, &completions).map_err(|e| data(e.to_string()))
    }
}

fn complete_source(
    model: &LoadedModel,
    prep: &PrepData,
    bparams: &BeamParams,
    source: &str,
) -> Result<Completions, CliError> {
    let lines = tokenize_file(source).map_err(|e| data(e.to_string()))?;
    let context = flatten_lines(&lines);
    complete_line(&model.params, &model.mcfg, &prep.artifacts(), &context, bparams)
        .map_err(|e| data(e.to_string()))
}

fn print_candidates(out: &mut impl Write, completions: &Completions) -> io::Result<()> {
    if !completions.any_finished {
        writeln!(out, "(no candidate finished within the target cap)")?;
    }
    for (i, c) in completions.candidates.iter().enumerate() {
        writeln!(
            out,
            "{:>2}  {:>9.4}  {}{}",
            i + 1,
            c.log_prob,
            c.line,
            if c.finished { "" } else { "  (incomplete)" }
        )?;
    }
    Ok(())
}

/// Accept/edit/repeat loop over `input`, kept off the terminal APIs so
/// tests can drive it with byte buffers.
pub fn interactive_loop(
    model: &LoadedModel,
    prep: &PrepData,
    bparams: &BeamParams,
    input: impl BufRead,
    mut out: impl Write,
) -> Result<(), CliError> {
    let as_data = |e: io::Error| data(e.to_string());
    let mut source = String::new();
    let mut lines = input.lines();
    loop {
        let completions = complete_source(model, prep, bparams, &source)?;
        print_candidates(&mut out, &completions).map_err(as_data)?;
        write!(out, "[number to accept, text to insert, q to quit] > ").map_err(as_data)?;
        out.flush().map_err(as_data)?;
        let Some(reply) = lines.next() else {
            break;
        };
        let reply = reply.map_err(as_data)?;
        let trimmed = reply.trim_end();
        if trimmed.is_empty() || trimmed == "q" {
            break;
        }
        let chosen = match trimmed.trim().parse::<usize>() {
            Ok(n) if (1..=completions.candidates.len()).contains(&n) => {
                indent_for(&source) + &completions.candidates[n - 1].line
            }
            Ok(n) => {
                writeln!(out, "no candidate {n}").map_err(as_data)?;
                continue;
            }
            // Leading whitespace is kept, so a typed line can place
            // itself; bare text lands at the current block level.
            Err(_) if trimmed.starts_with(char::is_whitespace) => trimmed.to_string(),
            Err(_) => indent_for(&source) + trimmed,
        };
        let attempt = format!("{source}{chosen}\n");
        match tokenize_file(&attempt) {
            Ok(_) => {
                writeln!(out, "+ {chosen}").map_err(as_data)?;
                source = attempt;
            }
            Err(e) => writeln!(out, "rejected: {e}").map_err(as_data)?,
        }
    }
    Ok(())
}

/// Indentation for the next inserted line: the last line's level, one
/// deeper after a compound header.  Four spaces per level.
fn indent_for(source: &str) -> String {
    let Ok(lines) = tokenize_file(source) else {
        return String::new();
    };
    let Some(last) = lines.last() else {
        return String::new();
    };
    let level = last.indent_level + usize::from(last.category == LineCategory::CompoundHeader);
    "    ".repeat(level)
}
