//! Typed binary predicates in neo-Davidsonian form and their canonical text
//! representation.
//!
//! A predicate connects two typed arguments through two relation slots, e.g.
//! `(elect.2,elect.in.2,government,time)`. The canonical string is the
//! identity of a predicate: equality, ordering and hashing all go through it,
//! so iteration over ordered collections of predicates follows canonical
//! string order.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;
use core::hash::{Hash, Hasher};
use core::str::FromStr;

/// Prefix marking a negated predicate in canonical form.
pub const NEG_PREFIX: &str = "NEG__";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PredicateError {
    #[error("malformed predicate `{text}`: {reason}")]
    MalformedPredicate { text: String, reason: &'static str },
    #[error("invalid argument type `{0}`: expected lowercase letters and underscores")]
    InvalidArgType(String),
    #[error("invalid relation slot: {0}")]
    InvalidSlot(&'static str),
}

/// Argument type such as `person` or `living_thing`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ArgType(String);

impl ArgType {
    pub fn new(name: &str) -> Result<Self, PredicateError> {
        let valid = !name.is_empty() && name.bytes().all(|b| b.is_ascii_lowercase() || b == b'_');
        if !valid {
            return Err(PredicateError::InvalidArgType(name.to_string()));
        }
        Ok(ArgType(name.to_string()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Surface form used in template sentences: `living_thing` -> `Living Thing`.
    pub fn title_case(&self) -> String {
        let mut out = String::with_capacity(self.0.len());
        for (i, word) in self.0.split('_').filter(|w| !w.is_empty()).enumerate() {
            if i > 0 {
                out.push(' ');
            }
            let mut chars = word.chars();
            if let Some(first) = chars.next() {
                out.extend(first.to_uppercase());
                out.push_str(chars.as_str());
            }
        }
        out
    }

    /// The title-cased words, one per underscore-separated part.
    pub fn title_words(&self) -> Vec<String> {
        self.title_case().split(' ').map(|w| w.to_string()).collect()
    }
}

impl fmt::Display for ArgType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// One relation slot: center relation tokens (plus prepositions) and the
/// argument index within them.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RelSlot {
    words: Vec<String>,
    index: u8,
}

fn valid_token(tok: &str) -> bool {
    !tok.is_empty()
        && !tok.chars().any(|c| c.is_whitespace() || c.is_uppercase() || matches!(c, '.' | ',' | '(' | ')' | '\t'))
}

impl RelSlot {
    pub fn new<S: AsRef<str>>(words: &[S], index: u8) -> Result<Self, PredicateError> {
        if words.is_empty() {
            return Err(PredicateError::InvalidSlot("empty relation words"));
        }
        if !(1..=3).contains(&index) {
            return Err(PredicateError::InvalidSlot("index outside 1..=3"));
        }
        let mut out = Vec::with_capacity(words.len());
        for w in words {
            let w = w.as_ref();
            if !valid_token(w) {
                return Err(PredicateError::InvalidSlot("token must be lowercase without separators"));
            }
            out.push(w.to_string());
        }
        Ok(RelSlot { words: out, index })
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn index(&self) -> u8 {
        self.index
    }

    pub fn head(&self) -> &str {
        &self.words[0]
    }

    fn write_into(&self, out: &mut String) {
        for w in &self.words {
            out.push_str(w);
            out.push('.');
        }
        out.push(char::from(b'0' + self.index));
    }
}

/// Typed predicate `(w1.i1, w2.i2, t1, t2)` with an optional negation flag.
///
/// `type1` is the type of the argument attached to `slot1`.
#[derive(Debug, Clone)]
pub struct TypedPredicate {
    negated: bool,
    slot1: RelSlot,
    slot2: RelSlot,
    type1: ArgType,
    type2: ArgType,
    canonical: String,
}

impl TypedPredicate {
    pub fn new(negated: bool, slot1: RelSlot, slot2: RelSlot, type1: ArgType, type2: ArgType) -> Self {
        let mut canonical = String::new();
        if negated {
            canonical.push_str(NEG_PREFIX);
        }
        canonical.push('(');
        slot1.write_into(&mut canonical);
        canonical.push(',');
        slot2.write_into(&mut canonical);
        canonical.push(',');
        canonical.push_str(type1.as_str());
        canonical.push(',');
        canonical.push_str(type2.as_str());
        canonical.push(')');
        TypedPredicate { negated, slot1, slot2, type1, type2, canonical }
    }

    pub fn negated(&self) -> bool {
        self.negated
    }

    pub fn slot1(&self) -> &RelSlot {
        &self.slot1
    }

    pub fn slot2(&self) -> &RelSlot {
        &self.slot2
    }

    pub fn type1(&self) -> &ArgType {
        &self.type1
    }

    pub fn type2(&self) -> &ArgType {
        &self.type2
    }

    pub fn as_str(&self) -> &str {
        &self.canonical
    }

    /// Same relation with the argument types replaced.
    pub fn with_types(&self, type1: ArgType, type2: ArgType) -> Self {
        TypedPredicate::new(self.negated, self.slot1.clone(), self.slot2.clone(), type1, type2)
    }
}

impl PartialEq for TypedPredicate {
    fn eq(&self, other: &Self) -> bool {
        self.canonical == other.canonical
    }
}

impl Eq for TypedPredicate {}

impl PartialOrd for TypedPredicate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for TypedPredicate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.canonical.cmp(&other.canonical)
    }
}

impl Hash for TypedPredicate {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.canonical.hash(state)
    }
}

impl fmt::Display for TypedPredicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical)
    }
}

impl FromStr for TypedPredicate {
    type Err = PredicateError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_predicate(s)
    }
}

fn malformed(text: &str, reason: &'static str) -> PredicateError {
    PredicateError::MalformedPredicate { text: text.to_string(), reason }
}

fn parse_slot(text: &str, field: &str) -> Result<RelSlot, PredicateError> {
    let parts: Vec<&str> = field.split('.').map(str::trim).collect();
    if parts.len() < 2 {
        return Err(malformed(text, "slot needs relation words and an index"));
    }
    let (words, index) = parts.split_at(parts.len() - 1);
    let index: u8 = index[0].parse().map_err(|_| malformed(text, "non-integer slot index"))?;
    if words.iter().any(|w| w.is_empty()) {
        return Err(malformed(text, "empty slot token"));
    }
    RelSlot::new(words, index).map_err(|e| match e {
        PredicateError::InvalidSlot(reason) => malformed(text, reason),
        other => other,
    })
}

/// Parse `[NEG__](w1.i1,w2.i2,t1,t2)`; whitespace around fields is ignored.
pub fn parse_predicate(text: &str) -> Result<TypedPredicate, PredicateError> {
    let trimmed = text.trim();
    let (negated, rest) = match trimmed.strip_prefix(NEG_PREFIX) {
        Some(rest) => (true, rest.trim_start()),
        None => (false, trimmed),
    };
    let inner = rest
        .strip_prefix('(')
        .and_then(|r| r.strip_suffix(')'))
        .ok_or_else(|| malformed(text, "expected parenthesised tuple"))?;
    let fields: Vec<&str> = inner.split(',').map(str::trim).collect();
    if fields.len() != 4 {
        return Err(malformed(text, "expected exactly four fields"));
    }
    if fields.iter().any(|f| f.is_empty()) {
        return Err(malformed(text, "empty field"));
    }
    let slot1 = parse_slot(text, fields[0])?;
    let slot2 = parse_slot(text, fields[1])?;
    let type1 = ArgType::new(fields[2])?;
    let type2 = ArgType::new(fields[3])?;
    Ok(TypedPredicate::new(negated, slot1, slot2, type1, type2))
}

pub fn format_predicate(p: &TypedPredicate) -> String {
    p.as_str().to_string()
}

/// Letter attached to an argument in template sentences.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Letter {
    A,
    B,
}

impl Letter {
    pub fn as_str(self) -> &'static str {
        match self {
            Letter::A => "A",
            Letter::B => "B",
        }
    }

    pub fn other(self) -> Letter {
        match self {
            Letter::A => Letter::B,
            Letter::B => Letter::A,
        }
    }
}

/// A pair of argument types with a letter orientation: `first` carries "A"
/// and `second` carries "B". When both types are equal the single type
/// carries both letters.
///
/// Two type pairs that differ only in orientation house the same graph; use
/// [`TypePair::canonical`] to get the lexicographically ordered key.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TypePair {
    first: ArgType,
    second: ArgType,
}

impl TypePair {
    /// Oriented pair; `first` is rendered with letter A.
    pub fn new(first: ArgType, second: ArgType) -> Self {
        TypePair { first, second }
    }

    /// Lexicographically ordered pair.
    pub fn ordered(a: ArgType, b: ArgType) -> Self {
        if a <= b {
            TypePair { first: a, second: b }
        } else {
            TypePair { first: b, second: a }
        }
    }

    pub fn canonical(&self) -> TypePair {
        TypePair::ordered(self.first.clone(), self.second.clone())
    }

    pub fn first(&self) -> &ArgType {
        &self.first
    }

    pub fn second(&self) -> &ArgType {
        &self.second
    }

    pub fn is_same_type(&self) -> bool {
        self.first == self.second
    }

    /// Letter for a distinct-type argument; `None` for types outside the pair
    /// and for same-type pairs, where slot order decides the letter.
    pub fn letter_of(&self, t: &ArgType) -> Option<Letter> {
        if self.is_same_type() {
            return None;
        }
        if *t == self.first {
            Some(Letter::A)
        } else if *t == self.second {
            Some(Letter::B)
        } else {
            None
        }
    }

    pub fn type_of(&self, letter: Letter) -> &ArgType {
        match letter {
            Letter::A => &self.first,
            Letter::B => &self.second,
        }
    }

    /// Whether `p`'s two argument types are exactly this pair's types.
    pub fn houses(&self, p: &TypedPredicate) -> bool {
        (p.type1() == &self.first && p.type2() == &self.second)
            || (p.type1() == &self.second && p.type2() == &self.first)
    }
}

impl fmt::Display for TypePair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.first, self.second)
    }
}

/// Canonical (lexicographically ordered) type pair housing `p`.
pub fn type_pair_of(p: &TypedPredicate) -> TypePair {
    TypePair::ordered(p.type1().clone(), p.type2().clone())
}
