//! Words over the pair alphabet, sample sets and the dataset text format.

use std::collections::BTreeSet;
use std::fmt;
use std::ops::Deref;

use crate::error::{Error, Result};
use crate::symbol::{sort_letters, Letter};

/// Token for the empty word in dataset files and verdict lines.
pub const EMPTY_TOKEN: &str = "<empty>";

/// A finite sequence of letters. The empty sequence is the empty word.
///
/// `Ord` is shortlex over interned letter ids; use [`Word::name_cmp`] where an
/// order that is stable across processes is needed.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct Word(Vec<Letter>);

impl Word {
    pub fn empty() -> Word {
        Word(Vec::new())
    }

    pub fn new(letters: Vec<Letter>) -> Word {
        Word(letters)
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn into_letters(self) -> Vec<Letter> {
        self.0
    }

    pub fn push(&mut self, letter: Letter) {
        self.0.push(letter);
    }

    pub fn concat(parts: &[&[Letter]]) -> Word {
        let len = parts.iter().map(|p| p.len()).sum();
        let mut v = Vec::with_capacity(len);
        for p in parts {
            v.extend_from_slice(p);
        }
        Word(v)
    }

    pub fn prefix(&self, len: usize) -> Word {
        Word(self.0[..len].to_vec())
    }

    pub fn suffix_from(&self, start: usize) -> Word {
        Word(self.0[start..].to_vec())
    }

    /// Swaps input and output on every letter.
    pub fn inverted(&self) -> Word {
        Word(self.0.iter().map(|l| l.inverted()).collect())
    }

    /// Shortlex comparison on symbol names.
    pub fn name_cmp(&self, other: &Word) -> std::cmp::Ordering {
        self.len().cmp(&other.len()).then_with(|| {
            for (a, b) in self.0.iter().zip(other.0.iter()) {
                let c = a.name_key().cmp(&b.name_key());
                if c.is_ne() {
                    return c;
                }
            }
            std::cmp::Ordering::Equal
        })
    }

    /// Parses a whitespace-separated list of `in:out` letters, or `<empty>`.
    pub fn parse(text: &str) -> Option<Word> {
        let text = text.trim();
        if text.is_empty() || text == EMPTY_TOKEN {
            return Some(Word::empty());
        }
        text.split_whitespace()
            .map(Letter::parse)
            .collect::<Option<Vec<_>>>()
            .map(Word)
    }
}

impl Deref for Word {
    type Target = [Letter];
    fn deref(&self) -> &[Letter] {
        &self.0
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Word {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0
            .len()
            .cmp(&other.0.len())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl FromIterator<Letter> for Word {
    fn from_iter<T: IntoIterator<Item = Letter>>(iter: T) -> Self {
        Word(iter.into_iter().collect())
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str(EMPTY_TOKEN);
        }
        for (k, l) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{l}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{self}]")
    }
}

/// A deduplicated finite set of recorded words.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SampleSet {
    words: BTreeSet<Word>,
}

impl SampleSet {
    pub fn new() -> SampleSet {
        SampleSet::default()
    }

    /// Adds a word. Words containing the stay letter `(ε, ε)` are rejected.
    pub fn insert(&mut self, word: Word) -> Result<bool> {
        if word.iter().any(|l| l.is_stay()) {
            return Err(Error::Precondition(format!(
                "word {word} contains the stay letter <eps>:<eps>"
            )));
        }
        Ok(self.words.insert(word))
    }

    pub fn contains(&self, word: &Word) -> bool {
        self.words.contains(word)
    }

    /// Membership of the concatenation of `parts`.
    pub fn contains_concat(&self, parts: &[&[Letter]]) -> bool {
        self.words.contains(&Word::concat(parts))
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Word> {
        self.words.iter()
    }

    pub fn max_len(&self) -> Option<usize> {
        self.words.iter().map(|w| w.len()).max()
    }

    /// Distinct letters, sorted by symbol names.
    pub fn alphabet(&self) -> Vec<Letter> {
        let set: BTreeSet<Letter> = self.words.iter().flat_map(|w| w.iter().copied()).collect();
        let mut v: Vec<Letter> = set.into_iter().collect();
        sort_letters(&mut v);
        v
    }

    /// Removes every word that contains `letter`.
    pub fn without_letter(&self, letter: Letter) -> SampleSet {
        SampleSet {
            words: self
                .words
                .iter()
                .filter(|w| !w.contains(&letter))
                .cloned()
                .collect(),
        }
    }

    /// Words in shortlex order of symbol names.
    pub fn sorted_words(&self) -> Vec<&Word> {
        let mut v: Vec<&Word> = self.words.iter().collect();
        v.sort_by(|a, b| a.name_cmp(b));
        v
    }

    /// Parses the dataset format: one word per line, `#` comments,
    /// blank line or `<empty>` for the empty word.
    pub fn parse(text: &str) -> Result<SampleSet> {
        let mut set = SampleSet::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let body = raw.split('#').next().unwrap_or("");
            if body.trim().is_empty() && !raw.trim().is_empty() {
                // comment-only line
                continue;
            }
            let word = Word::parse(body).ok_or_else(|| Error::Parse {
                line,
                msg: format!(
                    "expected `in:out` letters or {EMPTY_TOKEN}, got {:?}",
                    body.trim()
                ),
            })?;
            set.insert(word).map_err(|e| Error::Parse {
                line,
                msg: e.to_string(),
            })?;
        }
        Ok(set)
    }

    /// One word per line in name-shortlex order.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for w in self.sorted_words() {
            out.push_str(&w.to_string());
            out.push('\n');
        }
        out
    }
}

impl FromIterator<Word> for SampleSet {
    fn from_iter<T: IntoIterator<Item = Word>>(iter: T) -> Self {
        SampleSet {
            words: iter
                .into_iter()
                .filter(|w| !w.iter().any(|l| l.is_stay()))
                .collect(),
        }
    }
}

impl<'a> IntoIterator for &'a SampleSet {
    type Item = &'a Word;
    type IntoIter = std::collections::btree_set::Iter<'a, Word>;
    fn into_iter(self) -> Self::IntoIter {
        self.words.iter()
    }
}
