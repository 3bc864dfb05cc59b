//! Token estimation used for all budget accounting.
//!
//! Two modes: BPE against a loaded rank table, or a naive whitespace word
//! count. The engine runs fully in WHITESPACE mode; BPE is an optional asset.

use std::collections::HashMap;
use std::path::Path;

use base64::Engine as _;

use crate::error::{AfmError, Result};
use crate::model::Role;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenMode {
    Bpe,
    Whitespace,
}

/// Byte-pair-merge rank table. File format: one `<base64 token> <rank>` pair
/// per line.
#[derive(Debug, Clone)]
pub struct BpeVocab {
    ranks: HashMap<Vec<u8>, u32>,
}

impl BpeVocab {
    pub fn from_file(path: &Path) -> Result<Self> {
        let data = std::fs::read_to_string(path).map_err(|e| AfmError::AssetLoad {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        Self::parse(&data).map_err(|reason| AfmError::AssetLoad {
            path: path.display().to_string(),
            reason,
        })
    }

    pub fn parse(data: &str) -> std::result::Result<Self, String> {
        let mut ranks = HashMap::new();
        for (lineno, line) in data.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let (tok, rank) = line
                .split_once(' ')
                .ok_or_else(|| format!("line {}: expected '<base64> <rank>'", lineno + 1))?;
            let bytes = base64::engine::general_purpose::STANDARD
                .decode(tok)
                .map_err(|e| format!("line {}: {}", lineno + 1, e))?;
            let rank: u32 = rank
                .trim()
                .parse()
                .map_err(|e| format!("line {}: {}", lineno + 1, e))?;
            ranks.insert(bytes, rank);
        }
        if ranks.is_empty() {
            return Err("vocabulary is empty".to_string());
        }
        Ok(BpeVocab { ranks })
    }

    /// Number of tokens produced by byte-pair merging: start from single
    /// bytes and repeatedly merge the adjacent pair with the lowest rank.
    /// Bytes not covered by any merge stay as single-byte tokens.
    fn encode_len(&self, piece: &[u8]) -> usize {
        if piece.is_empty() {
            return 0;
        }
        // part boundaries into `piece`
        let mut bounds: Vec<usize> = (0..=piece.len()).collect();
        loop {
            let mut best: Option<(u32, usize)> = None;
            for i in 1..bounds.len() - 1 {
                let seg = &piece[bounds[i - 1]..bounds[i + 1]];
                if let Some(&r) = self.ranks.get(seg) {
                    if best.map_or(true, |(br, _)| r < br) {
                        best = Some((r, i));
                    }
                }
            }
            match best {
                Some((_, i)) => {
                    bounds.remove(i);
                }
                None => break,
            }
        }
        bounds.len() - 1
    }
}

/// Deterministic token estimator shared by scoring, compression and packing.
#[derive(Debug, Clone)]
pub struct TokenCounter {
    mode: TokenMode,
    vocab: Option<BpeVocab>,
    overhead: usize,
}

impl TokenCounter {
    pub fn whitespace() -> Self {
        TokenCounter {
            mode: TokenMode::Whitespace,
            vocab: None,
            overhead: 0,
        }
    }

    /// BPE mode; fails with an asset error when the vocabulary cannot be
    /// loaded, in which case callers fall back to whitespace mode.
    pub fn bpe(vocab_path: &Path) -> Result<Self> {
        Ok(TokenCounter {
            mode: TokenMode::Bpe,
            vocab: Some(BpeVocab::from_file(vocab_path)?),
            overhead: 0,
        })
    }

    pub fn with_vocab(vocab: BpeVocab) -> Self {
        TokenCounter {
            mode: TokenMode::Bpe,
            vocab: Some(vocab),
            overhead: 0,
        }
    }

    /// Fixed per-message overhead added by `message_cost`/`count_messages`.
    pub fn with_overhead(mut self, overhead: usize) -> Self {
        self.overhead = overhead;
        self
    }

    pub fn mode(&self) -> TokenMode {
        self.mode
    }

    pub fn count(&self, text: &str) -> usize {
        match self.mode {
            TokenMode::Whitespace => text.split_whitespace().count(),
            TokenMode::Bpe => {
                let vocab = self.vocab.as_ref().expect("BPE mode has a vocabulary");
                text.split_whitespace()
                    .map(|run| vocab.encode_len(run.as_bytes()))
                    .sum()
            }
        }
    }

    /// Cost charged for one message representation during packing.
    pub fn message_cost(&self, content: &str) -> usize {
        self.count(content) + self.overhead
    }

    pub fn count_messages(&self, messages: &[(Role, &str)]) -> usize {
        messages.iter().map(|(_, c)| self.message_cost(c)).sum()
    }
}
