//! Free-group word arithmetic: parsing, free reduction, inversion, concatenation.
//!
//! Elements of `F_n` are freely reduced words over a symmetric alphabet of `n`
//! generators. The text format is lowercase for generators and uppercase for
//! inverses (`"abA"` is `a b a^-1`), which is unambiguous for `n <= 26`.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum WordError {
    #[error("symbol '{symbol}' is outside the alphabet of rank {rank}")]
    SymbolOutsideAlphabet { symbol: char, rank: usize },
    #[error("malformed word text: '{0}' is not an ASCII letter")]
    Malformed(char),
    #[error("alphabet rank mismatch: {0} vs {1}")]
    RankMismatch(usize, usize),
    #[error("alphabet rank must be at least 1")]
    ZeroRank,
}

/// One symbol of a word: a generator index and whether it is inverted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Letter {
    pub gen: usize,
    pub inverse: bool,
}

impl Letter {
    pub fn new(gen: usize, inverse: bool) -> Self {
        Letter { gen, inverse }
    }

    pub fn inverted(self) -> Self {
        Letter { gen: self.gen, inverse: !self.inverse }
    }

    pub fn cancels(self, other: Letter) -> bool {
        self.gen == other.gen && self.inverse != other.inverse
    }

    fn to_char(self) -> char {
        let base = if self.inverse { b'A' } else { b'a' };
        (base + self.gen as u8) as char
    }
}

/// A freely reduced word over a fixed alphabet rank. The empty word is the
/// identity. Words are immutable values.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Word {
    letters: Vec<Letter>,
    rank: usize,
}

impl Word {
    pub fn empty(rank: usize) -> Self {
        Word { letters: Vec::new(), rank }
    }

    /// Free reduction of a raw letter sequence. The result is independent of
    /// cancellation order since the reduced form of a word is unique.
    pub fn reduce(letters: Vec<Letter>, rank: usize) -> Self {
        let mut stack: Vec<Letter> = Vec::with_capacity(letters.len());
        for l in letters {
            match stack.last() {
                Some(&top) if top.cancels(l) => {
                    stack.pop();
                }
                _ => stack.push(l),
            }
        }
        Word { letters: stack, rank }
    }

    /// Parses the lowercase/uppercase text format, applying free reduction.
    pub fn parse(text: &str, rank: usize) -> Result<Self, WordError> {
        if rank == 0 {
            return Err(WordError::ZeroRank);
        }
        let mut letters = Vec::with_capacity(text.len());
        for ch in text.chars() {
            if !ch.is_ascii_alphabetic() {
                return Err(WordError::Malformed(ch));
            }
            let (gen, inverse) = if ch.is_ascii_lowercase() {
                ((ch as u8 - b'a') as usize, false)
            } else {
                ((ch as u8 - b'A') as usize, true)
            };
            if gen >= rank {
                return Err(WordError::SymbolOutsideAlphabet { symbol: ch, rank });
            }
            letters.push(Letter::new(gen, inverse));
        }
        Ok(Word::reduce(letters, rank))
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn inverse(&self) -> Word {
        let letters = self.letters.iter().rev().map(|l| l.inverted()).collect();
        // reversing a reduced word keeps it reduced
        Word { letters, rank: self.rank }
    }

    pub fn concat(&self, other: &Word) -> Result<Word, WordError> {
        if self.rank != other.rank {
            return Err(WordError::RankMismatch(self.rank, other.rank));
        }
        let mut letters = self.letters.clone();
        letters.extend_from_slice(&other.letters);
        Ok(Word::reduce(letters, self.rank))
    }

    pub fn pow(&self, exp: i32) -> Word {
        let base = if exp < 0 { self.inverse() } else { self.clone() };
        let mut out = Word::empty(self.rank);
        for _ in 0..exp.unsigned_abs() {
            out = out.concat(&base).expect("equal ranks");
        }
        out
    }

    /// Splits `w = g c g^-1` with `c` cyclically reduced; returns `(g, c)`.
    pub fn cyclic_decompose(&self) -> (Word, Word) {
        let mut lo = 0;
        let mut hi = self.letters.len();
        while hi - lo >= 2 && self.letters[lo].cancels(self.letters[hi - 1]) {
            lo += 1;
            hi -= 1;
        }
        let conj = Word { letters: self.letters[..lo].to_vec(), rank: self.rank };
        let core = Word { letters: self.letters[lo..hi].to_vec(), rank: self.rank };
        (conj, core)
    }

    /// The free-group root: the shortest `u` with `self = u^i` for some
    /// `i >= 1`. Computed combinatorially by cyclically reducing to
    /// `g c g^-1` and taking the primitive string-power root of `c`.
    pub fn primitive_root(&self) -> Word {
        if self.is_empty() {
            return self.clone();
        }
        let (conj, core) = self.cyclic_decompose();
        let n = core.letters.len();
        let mut root = core.clone();
        for d in 1..n {
            if n % d != 0 {
                continue;
            }
            if (0..n).all(|i| core.letters[i] == core.letters[i % d]) {
                root = Word { letters: core.letters[..d].to_vec(), rank: self.rank };
                break;
            }
        }
        let g_inv = conj.inverse();
        conj.concat(&root)
            .and_then(|w| w.concat(&g_inv))
            .expect("equal ranks")
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in &self.letters {
            write!(f, "{}", l.to_char())?;
        }
        Ok(())
    }
}
