//! Byte-level tokenization, train/validation splits and deterministic
//! batching.

use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::TrainError;

/// Byte values occupy ids `0..256`; one special id follows.
pub const BYTE_VOCAB: usize = 256;
/// Document separator; never produced by [`encode`].
pub const EOS_ID: usize = 256;
pub const VOCAB_SIZE: usize = 257;

pub fn encode(text: &str) -> Vec<usize> {
    text.bytes().map(usize::from).collect()
}

/// Inverse of [`encode`]; special ids are skipped and invalid UTF-8 is
/// replaced.
pub fn decode(ids: &[usize]) -> String {
    let bytes: Vec<u8> = ids.iter().filter_map(|&i| u8::try_from(i).ok()).collect();
    String::from_utf8_lossy(&bytes).into_owned()
}

/// Contiguous train/validation token streams.
#[derive(Debug, Clone, PartialEq)]
pub struct CharCorpus {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub vocab_size: usize,
}

impl CharCorpus {
    /// The first `round(split_frac * n)` tokens train, the rest validate.
    pub fn from_text(text: &str, split_frac: f64) -> Result<Self, TrainError> {
        if text.is_empty() {
            return Err(TrainError::Data("corpus is empty".into()));
        }
        if !(split_frac > 0.0 && split_frac < 1.0) {
            return Err(TrainError::Data(format!("split_frac must lie in (0, 1), got {split_frac}")));
        }
        let tokens = encode(text);
        if tokens.len() < 2 {
            return Err(TrainError::Data("corpus needs at least two bytes to split".into()));
        }
        let cut = ((split_frac * tokens.len() as f64).round() as usize).clamp(1, tokens.len() - 1);
        let (train, val) = tokens.split_at(cut);
        Ok(Self {
            train: train.to_vec(),
            val: val.to_vec(),
            vocab_size: VOCAB_SIZE,
        })
    }
}

/// Read a UTF-8 text file and split it.
pub fn char_corpus(path: &Path, split_frac: f64) -> Result<CharCorpus, TrainError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| TrainError::Data(format!("cannot read corpus {}: {e}", path.display())))?;
    CharCorpus::from_text(&text, split_frac)
}

/// `(inputs, targets)`, each `batch * seq` ids, targets shifted by one.
pub type Batch = (Vec<usize>, Vec<usize>);

fn window(tokens: &[usize], start: usize, seq: usize, inputs: &mut Vec<usize>, targets: &mut Vec<usize>) {
    inputs.extend_from_slice(&tokens[start..start + seq]);
    targets.extend_from_slice(&tokens[start + 1..start + seq + 1]);
}

fn check_len(tokens: &[usize], seq: usize, what: &str) -> Result<(), TrainError> {
    if tokens.len() < seq + 1 {
        return Err(TrainError::Data(format!(
            "{what} split has {} tokens, need at least seq_len + 1 = {}",
            tokens.len(),
            seq + 1
        )));
    }
    Ok(())
}

/// Random windows drawn from a seeded stream.
#[derive(Debug, Clone)]
pub struct Batcher<'a> {
    tokens: &'a [usize],
    batch: usize,
    seq: usize,
    rng: ChaCha8Rng,
}

impl<'a> Batcher<'a> {
    pub fn new(tokens: &'a [usize], batch: usize, seq: usize, seed: u64) -> Result<Self, TrainError> {
        check_len(tokens, seq, "train")?;
        Ok(Self {
            tokens,
            batch,
            seq,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn next_batch(&mut self) -> Batch {
        let mut inputs = Vec::with_capacity(self.batch * self.seq);
        let mut targets = Vec::with_capacity(self.batch * self.seq);
        let max_start = self.tokens.len() - self.seq - 1;
        for _ in 0..self.batch {
            let start = self.rng.random_range(0..=max_start);
            window(self.tokens, start, self.seq, &mut inputs, &mut targets);
        }
        (inputs, targets)
    }
}

/// A fixed evaluation set: `n_batches * batch` windows spread evenly over
/// the stream.
pub fn eval_batches(tokens: &[usize], n_batches: usize, batch: usize, seq: usize) -> Result<Vec<Batch>, TrainError> {
    check_len(tokens, seq, "validation")?;
    let total = n_batches * batch;
    let max_start = tokens.len() - seq - 1;
    let mut out = Vec::with_capacity(n_batches);
    for b in 0..n_batches {
        let mut inputs = Vec::with_capacity(batch * seq);
        let mut targets = Vec::with_capacity(batch * seq);
        for i in 0..batch {
            let w = b * batch + i;
            let start = if total > 1 { w * max_start / (total - 1) } else { 0 };
            window(tokens, start, seq, &mut inputs, &mut targets);
        }
        out.push((inputs, targets));
    }
    Ok(out)
}

const WORDS: &[&str] = &[
    "the", "of", "and", "to", "a", "in", "is", "it", "that", "was", "he", "for", "on", "are", "as",
    "with", "his", "they", "at", "be", "this", "from", "have", "or", "by", "one", "had", "not",
    "but", "what", "all", "were", "when", "we", "there", "can", "an", "your", "which", "their",
    "said", "if", "do", "will", "each", "about", "how", "up", "out", "them", "then", "she", "many",
    "some", "so", "these", "would", "other", "into", "has", "more", "her", "two", "like", "him",
    "see", "time", "could", "no", "make", "than", "first", "been", "its", "who", "now", "people",
    "my", "made", "over", "did", "down", "only", "way", "find", "use", "may", "water", "long",
    "little", "very", "after", "words", "called", "just", "where", "most", "know", "get",
    "through", "back", "much", "before", "go", "good", "new", "write", "our", "used", "me", "man",
    "too", "any", "day", "same", "right", "look", "think", "also", "around", "another", "came",
    "come", "work", "three", "word", "must", "because", "does", "part", "even", "place", "well",
    "such", "here", "take", "why", "things", "help", "put", "years", "different", "away", "again",
    "off", "went", "old", "number", "great", "tell", "men", "say", "small", "every", "found",
    "still", "between", "name", "should", "home", "big", "give", "air", "line", "set", "own",
    "under", "read", "last", "never", "us", "left", "end", "along", "while", "might", "next",
    "sound", "below", "saw", "something", "thought", "both", "few", "those", "always", "looked",
    "show", "large", "often", "together", "asked", "house", "world", "going", "want", "school",
    "important", "until", "form", "food", "keep", "children", "feet", "land", "side", "without",
    "boy", "once", "animals", "life", "enough", "took", "sometimes", "four", "head", "above",
    "kind", "began", "almost", "live", "page", "got", "earth", "need", "far", "hand", "high",
    "year", "mother", "light", "country", "father", "let", "night", "picture", "being", "study",
    "second", "soon", "story", "since", "white", "ever", "paper", "hard", "near", "sentence",
    "better", "best", "across", "during", "today", "however", "sure", "knew", "try", "told",
    "young", "sun", "thing", "whole", "hear", "example", "heard", "several", "change", "answer",
    "room", "sea", "against", "top", "turned", "learn", "point", "city", "play", "toward", "five",
    "himself", "usually", "money", "seen", "car", "morning", "river", "garden", "window", "music",
];

/// Deterministic English-like text of exactly `n_bytes` bytes: sentences of
/// Zipf-distributed common words, grouped into paragraphs.
pub fn synthetic_corpus(n_bytes: usize, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights: Vec<f64> = (1..=WORDS.len()).map(|r| 1.0 / r as f64).collect();
    let pick = WeightedIndex::new(&weights).expect("positive weights");
    let mut out = String::with_capacity(n_bytes + 64);
    while out.len() < n_bytes {
        let sentences = rng.random_range(2..6);
        for s in 0..sentences {
            if s > 0 {
                out.push(' ');
            }
            let len = rng.random_range(4..14);
            for w in 0..len {
                let word = WORDS[pick.sample(&mut rng)];
                if w == 0 {
                    let mut chars = word.chars();
                    if let Some(c) = chars.next() {
                        out.push(c.to_ascii_uppercase());
                        out.push_str(chars.as_str());
                    }
                } else {
                    out.push(' ');
                    out.push_str(word);
                    if w + 1 < len && rng.random_bool(0.08) {
                        out.push(',');
                    }
                }
            }
            out.push(if rng.random_bool(0.1) { '?' } else { '.' });
        }
        out.push('\n');
    }
    out.truncate(n_bytes);
    out
}
