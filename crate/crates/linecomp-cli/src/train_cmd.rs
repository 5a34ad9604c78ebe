//! `linecomp train`: fit a model on a prepared directory and write the
//! checkpoint from the best validation epoch.

use std::path::PathBuf;

use clap::Args;

use linecomp::neural::{checkpoint, train, Arch, ModelConfig, TrainConfig, TrainError};

use crate::corpus::{PrepData, TRAIN_FILE, VALID_FILE};
use crate::error::{data, user, CliError};

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Prepared data directory from `linecomp prep`.
    #[arg(long)]
    pub data: PathBuf,
    /// Network architecture: transformer or gru.
    #[arg(long, default_value = "transformer")]
    pub arch: Arch,
    /// Where to write the checkpoint.
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Seed for initialization, batch shuffling, and dropout.
    #[arg(long, default_value_t = 13)]
    pub seed: u64,
    /// Cap on training epochs.
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Files per batch (4 for the transformer, 8 for the GRU by default).
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Epochs without validation improvement before stopping.
    #[arg(long)]
    pub patience: Option<usize>,
    /// Adam learning rate.
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub d_model: Option<usize>,
    #[arg(long)]
    pub d_embed: Option<usize>,
    #[arg(long)]
    pub d_ff: Option<usize>,
    #[arg(long)]
    pub heads: Option<usize>,
    #[arg(long)]
    pub layers: Option<usize>,
    #[arg(long)]
    pub gru_hidden: Option<usize>,
    /// Keep probability for embedding/output dropout; 1 disables it.
    #[arg(long)]
    pub dropout_keep: Option<f64>,
}

pub fn run(args: &TrainArgs) -> Result<(), CliError> {
    let prep = PrepData::load(&args.data)?;
    let train_data = prep.load_seqs(TRAIN_FILE)?;
    let valid_data = prep.load_seqs(VALID_FILE)?;
    let vocab = prep.symbol_count();

    let mut mcfg = match args.arch {
        Arch::Transformer => ModelConfig::transformer(vocab),
        Arch::Gru => ModelConfig::gru(vocab),
    };
    mcfg.max_len = prep.config.max_len;
    set(&mut mcfg.d_model, args.d_model);
    set(&mut mcfg.d_embed, args.d_embed);
    set(&mut mcfg.d_ff, args.d_ff);
    set(&mut mcfg.n_heads, args.heads);
    set(&mut mcfg.n_layers, args.layers);
    set(&mut mcfg.gru_hidden, args.gru_hidden);
    set(&mut mcfg.dropout_keep, args.dropout_keep);
    if args.arch == Arch::Transformer && mcfg.d_model % mcfg.n_heads != 0 {
        return Err(user(format!(
            "--d-model {} is not divisible by --heads {}",
            mcfg.d_model, mcfg.n_heads
        )));
    }

    let mut tcfg = TrainConfig::for_arch(args.arch);
    tcfg.seed = args.seed;
    set(&mut tcfg.max_epochs, args.epochs);
    set(&mut tcfg.batch_size, args.batch_size);
    set(&mut tcfg.patience, args.patience);
    set(&mut tcfg.lr, args.lr);

    println!(
        "training {} on {} train / {} valid streams, {} symbols",
        args.arch,
        train_data.len(),
        valid_data.len(),
        vocab
    );
    let outcome = train::<f32>(&mcfg, &tcfg, &train_data, &valid_data, |e| {
        println!(
            "epoch {:>3}  train {:.4}  valid {:.4}",
            e.epoch, e.train_loss, e.val_loss
        );
    })
    .map_err(|e| match e {
        TrainError::Diverged { .. } => CliError::Diverged(e.to_string()),
        TrainError::EmptyDataset => data(e.to_string()),
    })?;

    let mut experiment = prep.config.clone();
    experiment.arch = Some(args.arch);
    experiment.seed = args.seed;
    let config_text = format!("{}{}", mcfg.to_kv_text(), experiment.to_kv_text());
    checkpoint::save(&args.checkpoint, &config_text, &outcome.params)
        .map_err(|e| user(format!("cannot write {}: {e}", args.checkpoint.display())))?;
    println!(
        "best epoch {} (valid {:.4}); wrote {}",
        outcome.best_epoch,
        outcome.best_val_loss,
        args.checkpoint.display()
    );
    Ok(())
}

fn set<T: Copy>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}
