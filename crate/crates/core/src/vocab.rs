//! Subword vocabulary with SentencePiece-style word boundaries.
//!
//! A token whose raw form starts with `▁` (U+2581) begins a new word; every
//! other token continues the word in progress. Penalty construction only ever
//! looks at word-initial tokens, matched case-insensitively against input
//! words.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// SentencePiece word-boundary marker.
pub const WORD_BOUNDARY: char = '\u{2581}';
pub const EOS_TOKEN: &str = "</s>";
pub const UNK_TOKEN: &str = "<unk>";

/// Unicode lowercase. Used everywhere a case-insensitive comparison is made.
pub fn casefold(s: &str) -> String {
    s.to_lowercase()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Subword {
    pub id: u32,
    pub raw: String,
    pub word_initial: bool,
    /// `raw` without the boundary marker.
    pub surface: String,
    pub surface_folded: String,
}

impl Subword {
    fn new(id: u32, raw: String) -> Self {
        let (word_initial, surface) = match raw.strip_prefix(WORD_BOUNDARY) {
            Some(rest) => (true, rest.to_string()),
            None => (false, raw.clone()),
        };
        // A raw token may carry more than one marker ("▁▁"); the surface
        // never does.
        let surface = surface.replace(WORD_BOUNDARY, "");
        let surface_folded = casefold(&surface);
        Self {
            id,
            raw,
            word_initial,
            surface,
            surface_folded,
        }
    }
}

/// Immutable token inventory. Ids are dense and follow file line order.
#[derive(Debug, Clone)]
pub struct SubwordVocab {
    subwords: Vec<Subword>,
    eos_id: u32,
    unk_id: u32,
    by_raw: HashMap<String, u32>,
    /// folded surface -> word-initial ids with exactly that folded surface
    prefix_index: HashMap<String, Vec<u32>>,
    max_raw_chars: usize,
}

impl SubwordVocab {
    /// Builds a vocabulary from tokens in id order.
    pub fn from_tokens<I, S>(tokens: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut subwords = Vec::new();
        let mut by_raw: HashMap<String, u32> = HashMap::new();
        for (idx, tok) in tokens.into_iter().enumerate() {
            let raw: String = tok.into();
            if let Some(&first) = by_raw.get(&raw) {
                return Err(Error::DuplicateToken {
                    token: raw,
                    line: idx + 1,
                    first: first as usize + 1,
                });
            }
            let id = idx as u32;
            by_raw.insert(raw.clone(), id);
            subwords.push(Subword::new(id, raw));
        }
        if subwords.is_empty() {
            return Err(Error::EmptyVocab);
        }
        let eos_id = *by_raw
            .get(EOS_TOKEN)
            .ok_or(Error::MissingReserved(EOS_TOKEN))?;
        let unk_id = *by_raw
            .get(UNK_TOKEN)
            .ok_or(Error::MissingReserved(UNK_TOKEN))?;

        let mut prefix_index: HashMap<String, Vec<u32>> = HashMap::new();
        for s in subwords.iter().filter(|s| s.word_initial) {
            prefix_index
                .entry(s.surface_folded.clone())
                .or_default()
                .push(s.id);
        }
        let max_raw_chars = subwords
            .iter()
            .map(|s| s.raw.chars().count())
            .max()
            .unwrap_or(0);

        Ok(Self {
            subwords,
            eos_id,
            unk_id,
            by_raw,
            prefix_index,
            max_raw_chars,
        })
    }

    /// Reads a vocabulary file: UTF-8, one token per line, line number = id.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let lines = text.lines().map(|l| l.strip_suffix('\r').unwrap_or(l));
        Self::from_tokens(lines)
    }

    pub fn len(&self) -> usize {
        self.subwords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subwords.is_empty()
    }

    pub fn eos_id(&self) -> u32 {
        self.eos_id
    }

    pub fn unk_id(&self) -> u32 {
        self.unk_id
    }

    pub fn subwords(&self) -> &[Subword] {
        &self.subwords
    }

    pub fn get(&self, id: u32) -> Result<&Subword> {
        self.subwords
            .get(id as usize)
            .ok_or(Error::InvalidTokenId(id))
    }

    pub fn id_of(&self, raw: &str) -> Option<u32> {
        self.by_raw.get(raw).copied()
    }

    /// Word-initial subwords whose folded surface is a nonempty prefix of
    /// the folded `word`. Sorted by id.
    pub fn subwords_beginning(&self, word: &str) -> Vec<u32> {
        let folded = casefold(word);
        let mut out = Vec::new();
        for (end, ch) in folded.char_indices() {
            let prefix = &folded[..end + ch.len_utf8()];
            if let Some(ids) = self.prefix_index.get(prefix) {
                out.extend(ids.iter().copied().filter(|&id| id != self.eos_id));
            }
        }
        out.sort_unstable();
        out
    }

    /// Reassembles words from a token sequence.
    ///
    /// A trailing word is only emitted when the sequence ends with eos or
    /// `finalize` is set. A sequence starting with a continuation token
    /// starts its first word with that token.
    pub fn words_from_tokens(&self, ids: &[u32], finalize: bool) -> Result<Vec<String>> {
        let mut words = Vec::new();
        let mut pending: Option<String> = None;
        for (pos, &id) in ids.iter().enumerate() {
            let sw = self.get(id)?;
            if id == self.eos_id {
                if pos + 1 != ids.len() {
                    return Err(Error::MisplacedEos(pos));
                }
                words.extend(pending.take());
                return Ok(words);
            }
            match (&mut pending, sw.word_initial) {
                (Some(word), false) => word.push_str(&sw.surface),
                (slot, _) => {
                    words.extend(slot.take());
                    *slot = Some(sw.surface.clone());
                }
            }
        }
        if finalize {
            words.extend(pending);
        }
        Ok(words)
    }

    /// Renders tokens as a whitespace-joined sentence, closing any trailing
    /// word.
    pub fn detokenize(&self, ids: &[u32]) -> Result<String> {
        Ok(self.words_from_tokens(ids, true)?.join(" "))
    }

    /// Greedy longest-match segmentation of one whitespace-free word.
    ///
    /// The first piece is matched against `▁`-prefixed tokens, later pieces
    /// against continuation tokens. A position no token covers becomes
    /// `<unk>` for a single character.
    pub fn segment_word(&self, word: &str) -> Vec<u32> {
        let chars: Vec<(usize, char)> = word.char_indices().collect();
        let mut out = Vec::new();
        let mut start = 0;
        let mut buf = String::new();
        while start < chars.len() {
            let initial = start == 0;
            let longest = self.max_raw_chars.min(chars.len() - start);
            let mut matched = None;
            for take in (1..=longest).rev() {
                let from = chars[start].0;
                let to = chars
                    .get(start + take)
                    .map_or(word.len(), |&(byte, _)| byte);
                buf.clear();
                if initial {
                    buf.push(WORD_BOUNDARY);
                }
                buf.push_str(&word[from..to]);
                if let Some(&id) = self.by_raw.get(buf.as_str()) {
                    matched = Some((id, take));
                    break;
                }
            }
            match matched {
                Some((id, take)) => {
                    out.push(id);
                    start += take;
                }
                None => {
                    out.push(self.unk_id);
                    start += 1;
                }
            }
        }
        out
    }

    /// Greedy segmentation of a whitespace-separated sentence (no eos).
    pub fn segment(&self, sentence: &str) -> Vec<u32> {
        sentence
            .split_whitespace()
            .flat_map(|w| self.segment_word(w))
            .collect()
    }
}
