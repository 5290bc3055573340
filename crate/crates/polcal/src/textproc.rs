//! Tokenization, vocabulary construction and sentence splitting.
//!
//! All models and metrics in this crate share the same text normalization:
//! lowercase, whitespace/punctuation-separated word tokens. The vocabulary is
//! word-level; the synthetic corpus has a closed vocabulary so no subword
//! scheme is needed.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};

/// Reserved token ids. These are never produced by corpus text.
pub const PAD: u32 = 0;
pub const BOS: u32 = 1;
pub const EOS: u32 = 2;
pub const UNK: u32 = 3;
/// Document separator used when concatenating cluster inputs. Not one of the
/// four reserved ids, but present in every vocabulary at a fixed position.
pub const SEP: u32 = 4;

const SPECIAL_TOKENS: [&str; 5] = ["<pad>", "<bos>", "<eos>", "<unk>", "<sep>"];

/// Bijective token <-> id map with reserved ids 0..3 and `<sep>` at 4.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocab {
    tokens: Vec<String>,
    #[serde(skip)]
    index: HashMap<String, u32>,
}

impl Vocab {
    fn from_tokens(tokens: Vec<String>) -> Self {
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        Vocab { tokens, index }
    }

    /// Rebuild the token index after deserialization.
    pub fn rebuild_index(&mut self) {
        self.index = self
            .tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.tokens.get(id as usize).map(|s| s.as_str())
    }

    /// Token list in id order, the serialized form.
    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn save_json(&self, path: &std::path::Path) -> Result<()> {
        let text = serde_json::to_string_pretty(&self.tokens)?;
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load_json(path: &std::path::Path) -> Result<Vocab> {
        let text = std::fs::read_to_string(path)?;
        let tokens: Vec<String> = serde_json::from_str(&text)?;
        Vocab::from_token_list(tokens).map_err(|e| {
            Error::data(format!("vocab file {}: {e}", path.display()))
        })
    }

    /// Reconstruct a vocabulary from its serialized token list.
    pub fn from_token_list(tokens: Vec<String>) -> Result<Vocab> {
        if tokens.len() < SPECIAL_TOKENS.len()
            || tokens[..SPECIAL_TOKENS.len()] != SPECIAL_TOKENS.map(String::from)
        {
            return Err(Error::data("missing reserved token prefix".to_string()));
        }
        Ok(Vocab::from_tokens(tokens))
    }
}

/// Build a vocabulary from raw texts, keeping tokens with frequency >= `min_freq`.
///
/// Order is deterministic: the five special tokens, then corpus tokens by
/// frequency descending with lexicographic tie-break.
pub fn build_vocab<S: AsRef<str>>(corpus_texts: &[S], min_freq: usize) -> Result<Vocab> {
    if min_freq < 1 {
        return Err(Error::config("build_vocab: min_freq must be >= 1"));
    }
    let mut freq: BTreeMap<String, usize> = BTreeMap::new();
    for text in corpus_texts {
        for tok in normalize_tokens(text.as_ref()) {
            *freq.entry(tok).or_insert(0) += 1;
        }
    }
    if freq.is_empty() {
        return Err(Error::config("build_vocab: empty corpus"));
    }
    let mut entries: Vec<(String, usize)> = freq.into_iter().collect();
    entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));

    let mut tokens: Vec<String> = SPECIAL_TOKENS.iter().map(|s| s.to_string()).collect();
    tokens.extend(
        entries
            .into_iter()
            .filter(|(_, c)| *c >= min_freq)
            .map(|(t, _)| t),
    );
    Ok(Vocab::from_tokens(tokens))
}

/// Lowercase and split into word/punctuation tokens.
///
/// Alphanumeric runs form word tokens; every other non-whitespace character is
/// its own token. This is the single normalization used by tokenization and
/// by the Rouge metrics.
pub fn normalize_tokens(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut word = String::new();
    for ch in text.chars() {
        if ch.is_alphanumeric() {
            word.extend(ch.to_lowercase());
        } else {
            if !word.is_empty() {
                out.push(std::mem::take(&mut word));
            }
            if !ch.is_whitespace() {
                out.push(ch.to_lowercase().collect());
            }
        }
    }
    if !word.is_empty() {
        out.push(word);
    }
    out
}

/// Map text to token ids; unknown tokens become [`UNK`].
pub fn tokenize(text: &str, vocab: &Vocab) -> Vec<u32> {
    normalize_tokens(text)
        .iter()
        .map(|t| vocab.id(t).unwrap_or(UNK))
        .collect()
}

/// Map ids back to a space-joined string. Errors on out-of-range ids.
pub fn detokenize(ids: &[u32], vocab: &Vocab) -> Result<String> {
    let mut parts = Vec::with_capacity(ids.len());
    for &id in ids {
        match vocab.token(id) {
            Some(tok) => parts.push(tok),
            None => {
                return Err(Error::data(format!(
                    "detokenize: id {} out of range (vocab size {})",
                    id,
                    vocab.len()
                )))
            }
        }
    }
    Ok(parts.join(" "))
}

/// Space-joined normalized form of a text; the fixed point of
/// `detokenize(tokenize(..))` on UNK-free input.
pub fn normalize(text: &str) -> String {
    normalize_tokens(text).join(" ")
}

/// Split on terminal punctuation (`.` `!` `?`) followed by whitespace.
///
/// The terminator stays with its sentence. Never emits empty sentences, and
/// never drops non-whitespace characters.
pub fn split_sentences(text: &str) -> Vec<String> {
    let chars: Vec<char> = text.chars().collect();
    let mut sentences = Vec::new();
    let mut current = String::new();
    let mut i = 0;
    while i < chars.len() {
        let ch = chars[i];
        current.push(ch);
        if matches!(ch, '.' | '!' | '?') {
            let next_is_ws = chars.get(i + 1).map(|c| c.is_whitespace()).unwrap_or(false);
            if next_is_ws {
                let s = current.trim();
                if !s.is_empty() {
                    sentences.push(s.to_string());
                }
                current.clear();
            }
        }
        i += 1;
    }
    let tail = current.trim();
    if !tail.is_empty() {
        sentences.push(tail.to_string());
    }
    sentences
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn vocab_frequency_threshold() {
        let v = build_vocab(&["a a b"], 2).unwrap();
        let expected: Vec<String> = SPECIAL_TOKENS
            .iter()
            .map(|s| s.to_string())
            .chain(std::iter::once("a".to_string()))
            .collect();
        assert_eq!(v.tokens(), expected.as_slice());
        assert_eq!(v.id("a"), Some(5));
        assert_eq!(v.id("b"), None);
    }

    #[test]
    fn vocab_deterministic() {
        let texts = ["the sound is great .", "the battery is poor ."];
        let a = build_vocab(&texts, 1).unwrap();
        let b = build_vocab(&texts, 1).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn vocab_order_freq_then_lex() {
        // "b" appears twice, "a" and "c" once each.
        let v = build_vocab(&["b c b a"], 1).unwrap();
        assert_eq!(v.token(5), Some("b"));
        assert_eq!(v.token(6), Some("a"));
        assert_eq!(v.token(7), Some("c"));
    }

    #[test]
    fn empty_corpus_errors() {
        let texts: [&str; 0] = [];
        assert!(build_vocab(&texts, 1).is_err());
        assert!(build_vocab(&["   "], 1).is_err());
    }

    #[test]
    fn tokenize_splits_punctuation() {
        let v = build_vocab(&["great sound !"], 1).unwrap();
        let ids = tokenize("Great sound!", &v);
        assert_eq!(
            ids,
            vec![v.id("great").unwrap(), v.id("sound").unwrap(), v.id("!").unwrap()]
        );
    }

    #[test]
    fn oov_maps_to_unk() {
        let v = build_vocab(&["known words"], 1).unwrap();
        let ids = tokenize("unknownword", &v);
        assert_eq!(ids, vec![UNK]);
    }

    #[test]
    fn round_trip_in_vocab_sentence() {
        let v = build_vocab(&["the screen is crisp ."], 1).unwrap();
        let text = "The screen is crisp.";
        let ids = tokenize(text, &v);
        assert_eq!(detokenize(&ids, &v).unwrap(), normalize(text));
    }

    #[test]
    fn detokenize_out_of_range() {
        let v = build_vocab(&["a"], 1).unwrap();
        assert!(detokenize(&[v.len() as u32], &v).is_err());
    }

    #[test]
    fn split_sentences_basic() {
        assert_eq!(split_sentences("Good. Bad!"), vec!["Good.", "Bad!"]);
        assert_eq!(split_sentences("no terminator"), vec!["no terminator"]);
        assert!(split_sentences("").is_empty());
        assert!(split_sentences("   ").is_empty());
        assert_eq!(split_sentences("Really?! Yes."), vec!["Really?!", "Yes."]);
    }

    #[test]
    fn vocab_json_round_trip() {
        let v = build_vocab(&["alpha beta beta"], 1).unwrap();
        let dir = std::env::temp_dir().join("polcal_vocab_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("vocab.json");
        v.save_json(&path).unwrap();
        let loaded = Vocab::load_json(&path).unwrap();
        assert_eq!(v, loaded);
    }

    proptest! {
        #[test]
        fn split_preserves_non_whitespace(s in "[ a-z.!?]{0,80}") {
            let joined: String = split_sentences(&s).join(" ");
            let keep = |t: &str| t.chars().filter(|c| !c.is_whitespace()).collect::<String>();
            prop_assert_eq!(keep(&joined), keep(&s));
        }

        #[test]
        fn tokenize_detokenize_round_trip(words in proptest::collection::vec("[a-z]{1,6}", 1..8)) {
            let text = words.join(" ");
            let v = build_vocab(&[text.as_str()], 1).unwrap();
            let ids = tokenize(&text, &v);
            prop_assert_eq!(detokenize(&ids, &v).unwrap(), normalize(&text));
        }
    }
}
