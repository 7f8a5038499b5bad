//! Token vocabulary with reserved marker tokens.
//!
//! Every vocabulary reserves three markers at fixed ids: `<bos>` (0), `<eos>`
//! (1), and `<unk>` (2). Regular tokens follow in the order they were added.
//! Model outputs never place mass on `<bos>` or `<unk>`; the *predictable*
//! tokens are everything else, `<eos>` included.

use std::collections::HashMap;
use std::fmt;

use crate::error::{NafError, Result};

/// Index of a token within a [`Vocabulary`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TokenId(pub u32);

impl TokenId {
    pub const BOS: TokenId = TokenId(0);
    pub const EOS: TokenId = TokenId(1);
    pub const UNK: TokenId = TokenId(2);

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for TokenId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

pub const BOS_TOKEN: &str = "<bos>";
pub const EOS_TOKEN: &str = "<eos>";
pub const UNK_TOKEN: &str = "<unk>";

/// A sequence of token ids (markers excluded unless stated otherwise).
pub type TokenSequence = Vec<TokenId>;

/// Bidirectional mapping between token strings and dense ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    ids: HashMap<String, TokenId>,
}

impl Vocabulary {
    /// A vocabulary holding only the three marker tokens.
    pub fn new() -> Self {
        let mut v = Vocabulary {
            tokens: Vec::new(),
            ids: HashMap::new(),
        };
        for marker in [BOS_TOKEN, EOS_TOKEN, UNK_TOKEN] {
            v.push(marker.to_string());
        }
        v
    }

    /// Builds a vocabulary from regular tokens, which must not collide with
    /// the markers or each other.
    pub fn from_tokens<I, S>(tokens: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut v = Vocabulary::new();
        for t in tokens {
            v.add(t.into())?;
        }
        Ok(v)
    }

    fn push(&mut self, token: String) -> TokenId {
        let id = TokenId(self.tokens.len() as u32);
        self.ids.insert(token.clone(), id);
        self.tokens.push(token);
        id
    }

    /// Adds a regular token, rejecting duplicates and marker collisions.
    pub fn add(&mut self, token: String) -> Result<TokenId> {
        if self.ids.contains_key(&token) {
            return Err(NafError::InvalidParameter(format!(
                "duplicate token {token:?}"
            )));
        }
        Ok(self.push(token))
    }

    /// Total number of tokens, markers included.
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        false // markers are always present
    }

    /// Number of predictable tokens: everything except `<bos>` and `<unk>`.
    pub fn predictable_len(&self) -> usize {
        self.tokens.len() - 2
    }

    /// True for ids a model may emit (`<eos>` and regular tokens).
    pub fn is_predictable(&self, id: TokenId) -> bool {
        id != TokenId::BOS && id != TokenId::UNK && id.index() < self.tokens.len()
    }

    pub fn token(&self, id: TokenId) -> Option<&str> {
        self.tokens.get(id.index()).map(String::as_str)
    }

    pub fn id(&self, token: &str) -> Option<TokenId> {
        self.ids.get(token).copied()
    }

    /// Maps a token string to its id, falling back to `<unk>`.
    pub fn id_or_unk(&self, token: &str) -> TokenId {
        self.id(token).unwrap_or(TokenId::UNK)
    }

    /// Regular tokens (markers excluded) in id order.
    pub fn regular_tokens(&self) -> impl Iterator<Item = (TokenId, &str)> {
        self.tokens
            .iter()
            .enumerate()
            .skip(3)
            .map(|(i, t)| (TokenId(i as u32), t.as_str()))
    }

    /// All tokens in id order, markers included.
    pub fn all_tokens(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(String::as_str)
    }

    /// Encodes a whitespace-separated line, mapping unknown words to `<unk>`.
    pub fn encode_line(&self, line: &str) -> TokenSequence {
        line.split_whitespace().map(|w| self.id_or_unk(w)).collect()
    }

    /// Decodes ids to a whitespace-joined string.
    pub fn decode(&self, seq: &[TokenId]) -> String {
        seq.iter()
            .map(|&id| self.token(id).unwrap_or(UNK_TOKEN))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

impl Default for Vocabulary {
    fn default() -> Self {
        Vocabulary::new()
    }
}
