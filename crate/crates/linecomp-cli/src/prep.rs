//! `linecomp prep`: lex (and for syntax mode, parse) a corpus, split it,
//! build the symbol table, and write one stream per file.

use std::fs;
use std::path::PathBuf;

use clap::Args;

use linecomp::asdl::{ast_to_actions, load_grammar, Action, AsdlGrammar};
use linecomp::bpe::BpeModel;
use linecomp::decode::{ActionVocab, Mode};
use linecomp::pycorpus::{
    build_vocab, flatten_lines, marker, tokenize_file, LogicalLine, StatsBuilder,
};
use linecomp::pyparse::parse_statement;

use crate::config::ExperimentConfig;
use crate::corpus::{
    collect_sources, hash_files, paths_to_text, split_indices, streams_to_text, write_text,
    ACTION_VOCAB_FILE, CONFIG_FILE, GRAMMAR_FILE, MERGES_FILE, STATS_FILE, TRAIN_FILE,
    TRAIN_SOURCES_FILE, VALID_FILE, VALID_SOURCES_FILE, VOCAB_FILE,
};
use crate::error::{data, CliError};

#[derive(Debug, Args)]
pub struct PrepArgs {
    /// Corpus root: a directory of .py files, one .py file, or a manifest
    /// listing paths (one per line, relative to the manifest).
    pub corpus: PathBuf,
    /// Directory to write the prepared artifacts into.
    #[arg(long)]
    pub out: PathBuf,
    /// Stream representation to prepare: token, bpe, or syntax.
    #[arg(long, default_value = "token")]
    pub mode: Mode,
    /// Vocabulary cap, reserved markers included; in syntax mode this caps
    /// the generated-token payload table.
    #[arg(long, default_value_t = 80_000)]
    pub vocab_cap: usize,
    /// Merge operations to learn in bpe mode.
    #[arg(long, default_value_t = 30_000)]
    pub bpe_merges: usize,
    /// Grammar file for syntax mode; the built-in Python subset otherwise.
    #[arg(long)]
    pub grammar: Option<PathBuf>,
    /// Seed for the train/valid split (and the default for training).
    #[arg(long, default_value_t = 13)]
    pub seed: u64,
    /// Longest stream (in symbols) kept for training; longer files are
    /// dropped from the stream files.
    #[arg(long, default_value_t = 1500)]
    pub max_len: usize,
}

struct FileData {
    path: PathBuf,
    lines: Vec<LogicalLine>,
    /// Gold action sequence per line; present in syntax mode only.
    line_actions: Option<Vec<Vec<Action>>>,
}

pub fn run(args: &PrepArgs) -> Result<(), CliError> {
    let sources = collect_sources(&args.corpus)?;
    let input_hash = hash_files(&sources)?;
    let grammar = match (&args.grammar, args.mode) {
        (_, Mode::Token | Mode::Bpe) => None,
        (Some(path), Mode::Syntax) => {
            let text = crate::corpus::read_text(path)?;
            Some(load_grammar(&text).map_err(|e| data(format!("{}: {e}", path.display())))?)
        }
        (None, Mode::Syntax) => {
            Some(load_grammar(linecomp::PYSUBSET_GRAMMAR).expect("built-in grammar parses"))
        }
    };

    let mut stats = StatsBuilder::new();
    let mut files: Vec<FileData> = Vec::new();
    for path in &sources {
        match load_file(path, args.mode, grammar.as_ref(), &mut stats) {
            Ok(file) => files.push(file),
            Err(reason) => {
                eprintln!("skipping {}: {reason}", path.display());
                stats.add_skipped();
            }
        }
    }
    if files.len() < 2 {
        return Err(data(format!(
            "{} usable files; need at least 2 to split",
            files.len()
        )));
    }

    let (train_idx, valid_idx) = split_indices(files.len(), args.seed);
    let pick = |idx: &[usize]| -> Vec<&FileData> { idx.iter().map(|&i| &files[i]).collect() };
    let train_files = pick(&train_idx);
    let valid_files = pick(&valid_idx);

    // Symbol table from the training split only, then both splits encoded.
    let (table_text, table_file, merges, train_streams, valid_streams) = match args.mode {
        Mode::Token => {
            let texts: Vec<String> = train_files
                .iter()
                .flat_map(|f| token_texts(f))
                .collect();
            let vocab = build_vocab(texts.iter().map(String::as_str), args.vocab_cap)
                .map_err(|e| data(e.to_string()))?;
            let enc = |fs: &[&FileData]| fs.iter().map(|f| token_texts(f)).collect::<Vec<_>>();
            (vocab.to_text(), VOCAB_FILE, None, enc(&train_files), enc(&valid_files))
        }
        Mode::Bpe => {
            let texts: Vec<String> = train_files
                .iter()
                .flat_map(|f| token_texts(f))
                .collect();
            let bpe = BpeModel::train(texts.iter().map(String::as_str), args.bpe_merges);
            let enc = |fs: &[&FileData]| {
                fs.iter()
                    .map(|f| bpe.encode_stream(token_texts(f)))
                    .collect::<Vec<_>>()
            };
            let train_streams = enc(&train_files);
            let pieces = train_streams.iter().flatten();
            let vocab = build_vocab(pieces.map(String::as_str), args.vocab_cap)
                .map_err(|e| data(e.to_string()))?;
            let valid_streams = enc(&valid_files);
            (vocab.to_text(), VOCAB_FILE, Some(bpe.to_text()), train_streams, valid_streams)
        }
        Mode::Syntax => {
            let grammar = grammar.as_ref().expect("grammar loaded for syntax mode");
            let actions = train_files
                .iter()
                .flat_map(|f| f.line_actions.as_ref().expect("parsed").iter().flatten());
            let avocab = ActionVocab::build(grammar, actions, args.vocab_cap);
            let enc = |fs: &[&FileData]| fs.iter().map(|f| action_texts(f)).collect::<Vec<_>>();
            (avocab.to_text(), ACTION_VOCAB_FILE, None, enc(&train_files), enc(&valid_files))
        }
    };

    let keep = |streams: Vec<Vec<String>>| -> (Vec<Vec<String>>, usize) {
        let before = streams.len();
        let kept: Vec<_> = streams.into_iter().filter(|s| s.len() <= args.max_len).collect();
        let dropped = before - kept.len();
        (kept, dropped)
    };
    let (train_kept, train_dropped) = keep(train_streams);
    let (valid_kept, valid_dropped) = keep(valid_streams);
    if train_kept.is_empty() || valid_kept.is_empty() {
        return Err(data(format!(
            "every stream in a split exceeds --max-len {}",
            args.max_len
        )));
    }

    let config = ExperimentConfig {
        mode: args.mode,
        arch: None,
        corpus: args.corpus.display().to_string(),
        vocab_cap: args.vocab_cap,
        bpe_merges: args.bpe_merges,
        grammar: args
            .grammar
            .as_ref()
            .map(|p| p.display().to_string())
            .unwrap_or_else(|| "builtin".to_string()),
        seed: args.seed,
        beam: 5,
        max_target_len: 100,
        max_len: args.max_len,
        input_hash,
    };

    let corpus_stats = stats.finish();
    let out = &args.out;
    fs::create_dir_all(out)
        .map_err(|e| CliError::User(format!("cannot create {}: {e}", out.display())))?;
    write_text(&out.join(CONFIG_FILE), &config.to_kv_text())?;
    write_text(&out.join(TRAIN_FILE), &streams_to_text(&train_kept))?;
    write_text(&out.join(VALID_FILE), &streams_to_text(&valid_kept))?;
    let source_paths =
        |picked: &[&FileData]| picked.iter().map(|f| f.path.clone()).collect::<Vec<_>>();
    write_text(&out.join(TRAIN_SOURCES_FILE), &paths_to_text(&source_paths(&train_files)))?;
    write_text(&out.join(VALID_SOURCES_FILE), &paths_to_text(&source_paths(&valid_files)))?;
    write_text(&out.join(table_file), &table_text)?;
    if let Some(merges) = merges {
        write_text(&out.join(MERGES_FILE), &merges)?;
    }
    if args.mode == Mode::Syntax {
        let text = match &args.grammar {
            Some(path) => crate::corpus::read_text(path)?,
            None => linecomp::PYSUBSET_GRAMMAR.to_string(),
        };
        write_text(&out.join(GRAMMAR_FILE), &text)?;
    }
    let stats_text = format!(
        "{corpus_stats}\ntrain files            {}\nvalid files            {}\ndropped overlong       {}\n",
        train_kept.len(),
        valid_kept.len(),
        train_dropped + valid_dropped,
    );
    write_text(&out.join(STATS_FILE), &stats_text)?;

    println!(
        "prepared {} mode data in {}: {} train / {} valid files ({} skipped, {} overlong)",
        args.mode,
        out.display(),
        train_kept.len(),
        valid_kept.len(),
        corpus_stats.files_skipped,
        train_dropped + valid_dropped,
    );
    println!("{corpus_stats}");
    Ok(())
}

fn load_file(
    path: &std::path::Path,
    mode: Mode,
    grammar: Option<&AsdlGrammar>,
    stats: &mut StatsBuilder,
) -> Result<FileData, String> {
    let source = fs::read_to_string(path).map_err(|e| e.to_string())?;
    let lines = tokenize_file(&source).map_err(|e| e.to_string())?;
    if lines.is_empty() {
        return Err("no statements".to_string());
    }
    let line_actions = match mode {
        Mode::Token | Mode::Bpe => None,
        Mode::Syntax => {
            let grammar = grammar.expect("grammar loaded for syntax mode");
            let mut per_line = Vec::with_capacity(lines.len());
            for line in &lines {
                let ast = parse_statement(line.content()).map_err(|e| e.to_string())?;
                per_line.push(ast_to_actions(&ast, grammar).map_err(|e| e.to_string())?);
            }
            // Recorded only once the whole file is known to parse, so
            // skipped files leave no trace in the averages.
            for actions in &per_line {
                stats.add_actions(actions.len());
            }
            Some(per_line)
        }
    };
    stats.add_file(&lines);
    Ok(FileData { path: path.to_path_buf(), lines, line_actions })
}

fn token_texts(file: &FileData) -> Vec<String> {
    flatten_lines(&file.lines).iter().map(|t| t.text.clone()).collect()
}

fn action_texts(file: &FileData) -> Vec<String> {
    let actions = file.line_actions.as_ref().expect("parsed in syntax mode");
    let mut out = Vec::new();
    for (line, line_acts) in file.lines.iter().zip(actions) {
        for event in &line.indent_events {
            out.push(event.text.clone());
        }
        for action in line_acts {
            out.push(action.to_string());
        }
        out.push(marker::EOL.to_string());
    }
    out
}
