use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConfigError {
    #[error("bad config line {line}: expected key=value")]
    BadLine { line: usize },
    #[error("missing key '{0}'")]
    Missing(&'static str),
    #[error("bad value for '{key}': {value}")]
    BadValue { key: &'static str, value: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arch {
    Transformer,
    Gru,
}

impl fmt::Display for Arch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Arch::Transformer => write!(f, "transformer"),
            Arch::Gru => write!(f, "gru"),
        }
    }
}

impl std::str::FromStr for Arch {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "transformer" => Ok(Arch::Transformer),
            "gru" => Ok(Arch::Gru),
            other => Err(format!("unknown architecture '{other}'")),
        }
    }
}

/// Model shape. Defaults follow the completion setup this reproduces:
/// d_model 128, d_embed 128, d_ff 512, 4 heads, 4 layers, input budget
/// 1500 tokens, dropout keep probability 0.9; the recurrent baseline uses
/// a 512-wide hidden state.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub arch: Arch,
    pub vocab: usize,
    pub d_model: usize,
    pub d_embed: usize,
    pub d_ff: usize,
    pub n_heads: usize,
    pub n_layers: usize,
    pub max_len: usize,
    pub dropout_keep: f64,
    pub gru_hidden: usize,
}

impl ModelConfig {
    pub fn transformer(vocab: usize) -> Self {
        Self {
            arch: Arch::Transformer,
            vocab,
            d_model: 128,
            d_embed: 128,
            d_ff: 512,
            n_heads: 4,
            n_layers: 4,
            max_len: 1500,
            dropout_keep: 0.9,
            gru_hidden: 512,
        }
    }

    pub fn gru(vocab: usize) -> Self {
        Self {
            arch: Arch::Gru,
            ..Self::transformer(vocab)
        }
    }

    pub fn head_dim(&self) -> usize {
        debug_assert_eq!(self.d_model % self.n_heads, 0);
        self.d_model / self.n_heads
    }

    /// `key=value` lines in fixed order; embedded in checkpoints.
    pub fn to_kv_text(&self) -> String {
        format!(
            "arch={}\nvocab={}\nd_model={}\nd_embed={}\nd_ff={}\nn_heads={}\nn_layers={}\nmax_len={}\ndropout_keep={}\ngru_hidden={}\n",
            self.arch,
            self.vocab,
            self.d_model,
            self.d_embed,
            self.d_ff,
            self.n_heads,
            self.n_layers,
            self.max_len,
            self.dropout_keep,
            self.gru_hidden,
        )
    }

    /// Parses `key=value` lines, ignoring keys it does not know (the
    /// CLI appends its own metadata to the same block).
    pub fn from_kv_text(text: &str) -> Result<Self, ConfigError> {
        let mut pairs = std::collections::BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(ConfigError::BadLine { line: i + 1 });
            };
            pairs.insert(k.trim().to_string(), v.trim().to_string());
        }
        fn req<'a>(
            pairs: &'a std::collections::BTreeMap<String, String>,
            key: &'static str,
        ) -> Result<&'a str, ConfigError> {
            pairs
                .get(key)
                .map(String::as_str)
                .ok_or(ConfigError::Missing(key))
        }
        fn num<T: std::str::FromStr>(
            pairs: &std::collections::BTreeMap<String, String>,
            key: &'static str,
        ) -> Result<T, ConfigError> {
            let raw = req(pairs, key)?;
            raw.parse().map_err(|_| ConfigError::BadValue {
                key,
                value: raw.to_string(),
            })
        }
        Ok(Self {
            arch: req(&pairs, "arch")?
                .parse()
                .map_err(|_| ConfigError::BadValue {
                    key: "arch",
                    value: pairs["arch"].clone(),
                })?,
            vocab: num(&pairs, "vocab")?,
            d_model: num(&pairs, "d_model")?,
            d_embed: num(&pairs, "d_embed")?,
            d_ff: num(&pairs, "d_ff")?,
            n_heads: num(&pairs, "n_heads")?,
            n_layers: num(&pairs, "n_layers")?,
            max_len: num(&pairs, "max_len")?,
            dropout_keep: num(&pairs, "dropout_keep")?,
            gru_hidden: num(&pairs, "gru_hidden")?,
        })
    }
}

/// Optimization settings: Adam with global-norm clipping.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub clip_norm: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Stop after this many epochs without validation improvement.
    pub patience: usize,
    pub seed: u64,
}

impl TrainConfig {
    pub fn for_arch(arch: Arch) -> Self {
        Self {
            lr: 2.5e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            clip_norm: 1.0,
            batch_size: match arch {
                Arch::Transformer => 4,
                Arch::Gru => 8,
            },
            max_epochs: 30,
            patience: 3,
            seed: 1,
        }
    }
}
