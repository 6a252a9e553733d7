//! Near-duplicate detection with word-shingle Jaccard similarity.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use crate::document::{GovernanceDocument, LineClass};

pub const SHINGLE_WORDS: usize = 5;
pub const DUPLICATE_SIMILARITY: f64 = 0.9;

/// Hashed 5-word shingles of a document's normalised substantive text,
/// kept sorted and deduplicated.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShingleSet {
    hashes: Vec<u64>,
}

impl ShingleSet {
    pub fn of(doc: &GovernanceDocument) -> Self {
        Self::with_size(doc, SHINGLE_WORDS)
    }

    pub fn with_size(doc: &GovernanceDocument, size: usize) -> Self {
        let words: Vec<u64> = normalized_words(doc).iter().map(|w| hash_word(w)).collect();
        let size = size.max(1);
        let mut hashes: Vec<u64> = if words.is_empty() {
            Vec::new()
        } else if words.len() < size {
            vec![combine(&words)]
        } else {
            words.windows(size).map(combine).collect()
        };
        hashes.sort_unstable();
        hashes.dedup();
        ShingleSet { hashes }
    }

    pub fn len(&self) -> usize {
        self.hashes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hashes.is_empty()
    }

    /// Jaccard similarity; two empty sets are identical.
    pub fn jaccard(&self, other: &ShingleSet) -> f64 {
        if self.is_empty() && other.is_empty() {
            return 1.0;
        }
        let (a, b) = (&self.hashes, &other.hashes);
        let (mut i, mut j, mut inter) = (0, 0, 0);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    inter += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
        let union = a.len() + b.len() - inter;
        inter as f64 / union as f64
    }

    /// Whether the similarity can reach `threshold` at all, from sizes alone.
    pub fn may_reach(&self, other: &ShingleSet, threshold: f64) -> bool {
        let (a, b) = (self.len().min(other.len()), self.len().max(other.len()));
        b == 0 || a as f64 >= threshold * b as f64
    }
}

/// Lowercased words of the non-boilerplate lines, in order.
pub fn normalized_words(doc: &GovernanceDocument) -> Vec<String> {
    doc.lines()
        .iter()
        .filter(|l| l.class == LineClass::Substantive)
        .flat_map(|l| l.text.split_whitespace())
        .map(str::to_lowercase)
        .collect()
}

fn hash_word(word: &str) -> u64 {
    let mut h = DefaultHasher::new();
    word.hash(&mut h);
    h.finish()
}

/// Order-sensitive mix of word hashes.
fn combine(words: &[u64]) -> u64 {
    words.iter().fold(0xcbf2_9ce4_8422_2325u64, |acc, w| {
        (acc ^ w)
            .wrapping_mul(0x0000_0100_0000_01b3)
            .rotate_left(29)
    })
}

pub fn shingle_similarity(a: &GovernanceDocument, b: &GovernanceDocument) -> f64 {
    ShingleSet::of(a).jaccard(&ShingleSet::of(b))
}

pub fn near_duplicate(a: &GovernanceDocument, b: &GovernanceDocument) -> bool {
    shingle_similarity(a, b) >= DUPLICATE_SIMILARITY
}
