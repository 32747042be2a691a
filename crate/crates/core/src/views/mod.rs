//! The three per-token views of an utterance: contextual, positional and
//! syntactic. Every view is a deterministic function of its inputs.

mod pos;
mod tokenize;

use std::fmt;
use std::path::PathBuf;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::dataio::{read_embeddings, EmbeddingTable};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::spectral::DataMatrix;

pub use pos::{pos_tag, PosTag};
pub use tokenize::tokenize;

pub const DEFAULT_CONTEXTUAL_DIM: usize = 64;
pub const DEFAULT_POSITIONAL_DIM: usize = 64;
pub const SYNTACTIC_DIM: usize = PosTag::COUNT;
pub const MIN_CONTEXTUAL_DIM: usize = 8;

/// Which slot of a dialogue an utterance occupies. Context turns render as
/// their index, candidate responses as `r<index>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UttIndex {
    Context(usize),
    Response(usize),
}

impl fmt::Display for UttIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UttIndex::Context(i) => write!(f, "{i}"),
            UttIndex::Response(i) => write!(f, "r{i}"),
        }
    }
}

/// `dialogue_id:utt_index:position`, the key scheme shared by embedding
/// files and cached encodings.
pub fn embedding_key(dialogue_id: &str, utt: UttIndex, position: usize) -> String {
    format!("{dialogue_id}:{utt}:{position}")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    pub pos_tag: PosTag,
    pub position: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenizedUtterance {
    pub dialogue_id: String,
    pub utt_index: UttIndex,
    tokens: Vec<Token>,
}

impl TokenizedUtterance {
    /// Tokenizes and tags `text`. Supplied tags override the built-in tagger
    /// and must match the token count.
    pub fn from_text(
        dialogue_id: impl Into<String>,
        utt_index: UttIndex,
        text: &str,
        tags: Option<&[PosTag]>,
    ) -> Result<Self> {
        let words = tokenize(text);
        let tags = match tags {
            Some(t) if t.len() != words.len() => {
                return Err(Error::Invalid(format!(
                    "{} tags supplied for {} tokens in utterance {utt_index}",
                    t.len(),
                    words.len()
                )))
            }
            Some(t) => t.to_vec(),
            None => pos_tag(&words),
        };
        Self::new(dialogue_id, utt_index, words.into_iter().zip(tags).collect())
    }

    pub fn new(
        dialogue_id: impl Into<String>,
        utt_index: UttIndex,
        words: Vec<(String, PosTag)>,
    ) -> Result<Self> {
        if words.is_empty() {
            return Err(Error::EmptyInput("utterance has no tokens"));
        }
        let tokens = words
            .into_iter()
            .enumerate()
            .map(|(position, (text, pos_tag))| {
                if text.is_empty() {
                    return Err(Error::EmptyInput("empty token text"));
                }
                Ok(Token {
                    text,
                    pos_tag,
                    position,
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            dialogue_id: dialogue_id.into(),
            utt_index,
            tokens,
        })
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tags(&self) -> Vec<PosTag> {
        self.tokens.iter().map(|t| t.pos_tag).collect()
    }
}

/// Where contextual vectors come from, before any file is loaded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EmbeddingProviderConfig {
    Hashed { dim: usize, seed: u64 },
    ExternalFile { path: PathBuf },
}

impl Default for EmbeddingProviderConfig {
    fn default() -> Self {
        EmbeddingProviderConfig::Hashed {
            dim: DEFAULT_CONTEXTUAL_DIM,
            seed: 0,
        }
    }
}

/// A resolved contextual-embedding source.
#[derive(Debug, Clone)]
pub enum ContextualProvider {
    /// Feature-hashes each token together with its neighbours.
    Hashed { dim: usize, seed: u64 },
    /// Looks vectors up by [`embedding_key`].
    External(Arc<EmbeddingTable>),
}

impl ContextualProvider {
    pub fn hashed(dim: usize, seed: u64) -> Result<Self> {
        check_contextual_dim(dim)?;
        Ok(ContextualProvider::Hashed { dim, seed })
    }

    pub fn from_table(table: EmbeddingTable) -> Result<Self> {
        check_contextual_dim(table.dim())?;
        Ok(ContextualProvider::External(Arc::new(table)))
    }

    pub fn from_config(cfg: &EmbeddingProviderConfig) -> Result<Self> {
        match cfg {
            EmbeddingProviderConfig::Hashed { dim, seed } => Self::hashed(*dim, *seed),
            EmbeddingProviderConfig::ExternalFile { path } => Self::from_table(read_embeddings(path)?),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            ContextualProvider::Hashed { dim, .. } => *dim,
            ContextualProvider::External(table) => table.dim(),
        }
    }
}

fn check_contextual_dim(dim: usize) -> Result<()> {
    if dim < MIN_CONTEXTUAL_DIM {
        return Err(Error::out_of_range("contextual dim", dim, format!("[{MIN_CONTEXTUAL_DIM}, inf)")));
    }
    Ok(())
}

/// The `n x v1` contextual view.
pub fn contextual_view<T: Scalar>(utt: &TokenizedUtterance, provider: &ContextualProvider) -> Result<DataMatrix<T>> {
    let n = utt.len();
    match provider {
        ContextualProvider::Hashed { dim, seed } => {
            let mut m = DMatrix::<T>::zeros(n, *dim);
            for (i, row) in hashed_rows(utt, *dim, *seed).into_iter().enumerate() {
                for (j, v) in row.into_iter().enumerate() {
                    m[(i, j)] = T::lit(v);
                }
            }
            DataMatrix::new(m)
        }
        ContextualProvider::External(table) => {
            let mut m = DMatrix::<T>::zeros(n, table.dim());
            for token in utt.tokens() {
                let key = embedding_key(&utt.dialogue_id, utt.utt_index, token.position);
                let vector = table.get(&key).ok_or(Error::MissingEmbedding { key })?;
                for (j, &v) in vector.iter().enumerate() {
                    m[(token.position, j)] = T::from_single(v);
                }
            }
            DataMatrix::new(m)
        }
    }
}

const NEIGHBOUR_WEIGHT: f64 = 0.5;

fn hashed_rows(utt: &TokenizedUtterance, dim: usize, seed: u64) -> Vec<Vec<f64>> {
    let tokens = utt.tokens();
    (0..tokens.len())
        .map(|i| {
            let prev = if i == 0 { "<bos>" } else { tokens[i - 1].text.as_str() };
            let next = tokens.get(i + 1).map_or("<eos>", |t| t.text.as_str());
            let mut row = vec![0.0; dim];
            for (slot, feature, weight) in [
                ("w", tokens[i].text.as_str(), 1.0),
                ("p", prev, NEIGHBOUR_WEIGHT),
                ("n", next, NEIGHBOUR_WEIGHT),
            ] {
                let h = feature_hash(seed, slot, feature);
                let sign = if mix(h) >> 63 == 0 { 1.0 } else { -1.0 };
                row[(h % dim as u64) as usize] += sign * weight;
            }
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                row.iter_mut().for_each(|v| *v /= norm);
            } else {
                // the three features cancelled exactly; fall back to the word bucket
                let h = feature_hash(seed, "w", &tokens[i].text);
                row[(h % dim as u64) as usize] = 1.0;
            }
            row
        })
        .collect()
}

/// Seeded FNV-1a over `slot \x1f feature`, finished with a splitmix64 round.
fn feature_hash(seed: u64, slot: &str, feature: &str) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64 ^ mix(seed);
    for b in slot.bytes().chain([0x1f]).chain(feature.bytes()) {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    mix(h)
}

fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Sinusoidal position encoding: column `2i` holds
/// `sin(pos / 10000^(2i/dim))` and column `2i + 1` the matching cosine.
pub fn positional_view<T: Scalar>(n: usize, dim: usize) -> Result<DataMatrix<T>> {
    if dim < 2 || dim % 2 != 0 {
        return Err(Error::out_of_range("positional dim", dim, "even and >= 2"));
    }
    let m = DMatrix::from_fn(n, dim, |pos, col| {
        let i = (col / 2) as f64;
        let angle = pos as f64 / 10000f64.powf(2.0 * i / dim as f64);
        T::lit(if col % 2 == 0 { angle.sin() } else { angle.cos() })
    });
    DataMatrix::new(m)
}

/// One-hot rows over [`PosTag::ALL`].
pub fn syntactic_view<T: Scalar>(tags: &[PosTag]) -> Result<DataMatrix<T>> {
    let mut m = DMatrix::<T>::zeros(tags.len(), SYNTACTIC_DIM);
    for (i, tag) in tags.iter().enumerate() {
        m[(i, tag.index())] = T::one();
    }
    DataMatrix::new(m)
}

/// The three views of one utterance, sharing a row per token.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewBundle<T: Scalar> {
    pub contextual: DataMatrix<T>,
    pub positional: DataMatrix<T>,
    pub syntactic: DataMatrix<T>,
}

impl<T: Scalar> ViewBundle<T> {
    pub fn build(utt: &TokenizedUtterance, provider: &ContextualProvider, positional_dim: usize) -> Result<Self> {
        Self::new(
            contextual_view(utt, provider)?,
            positional_view(utt.len(), positional_dim)?,
            syntactic_view(&utt.tags())?,
        )
    }

    pub fn new(contextual: DataMatrix<T>, positional: DataMatrix<T>, syntactic: DataMatrix<T>) -> Result<Self> {
        let n = contextual.n_samples();
        for (name, view) in [("positional", &positional), ("syntactic", &syntactic)] {
            if view.n_samples() != n {
                return Err(Error::Invalid(format!(
                    "{name} view has {} rows, contextual view has {n}",
                    view.n_samples()
                )));
            }
        }
        Ok(Self {
            contextual,
            positional,
            syntactic,
        })
    }

    pub fn n_tokens(&self) -> usize {
        self.contextual.n_samples()
    }

    /// `min(v1, v2, v3)`
    pub fn max_components(&self) -> usize {
        self.contextual
            .n_variables()
            .min(self.positional.n_variables())
            .min(self.syntactic.n_variables())
    }

    pub fn views(&self) -> [DataMatrix<T>; 3] {
        [self.contextual.clone(), self.positional.clone(), self.syntactic.clone()]
    }
}
