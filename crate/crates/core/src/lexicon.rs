//! Word-class lexicon and rule-based lemmatizer backing the surface mapper.
//!
//! The lexicon is a plain-text file with one section per word class. A copy
//! ships with the crate ([`Lexicon::bundled`]); callers can load their own
//! with [`Lexicon::parse`].

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

const BUNDLED: &str = include_str!("../data/lexicon.txt");

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("lexicon line {line}: {reason}")]
pub struct LexiconError {
    pub line: usize,
    pub reason: String,
}

/// Coarse part-of-speech class of a single token.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PosClass {
    Verb,
    PpVerb,
    Preposition,
    Adverb,
    Adjective,
    Noun,
    Modal,
    Other,
}

impl PosClass {
    /// Finite verb or past participle.
    pub fn is_verb(self) -> bool {
        matches!(self, PosClass::Verb | PosClass::PpVerb)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IrregularForms {
    pub third_person: String,
    pub past_participle: String,
    pub gerund: String,
    pub other: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum FormKind {
    Finite,
    PastParticiple,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Replacement {
    Literal(&'static str),
    Suffix,
    Undouble,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Guard {
    Long,
    Sibilant,
    PlainS,
    Doubled,
    RestoreE,
    Stem,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct SuffixRule {
    suffix: String,
    replacement: Replacement,
    replacement_text: String,
    guard: Guard,
}

#[derive(Debug, Clone)]
pub struct Lexicon {
    version: u32,
    modals: BTreeSet<String>,
    prepositions: BTreeSet<String>,
    adverbs: BTreeSet<String>,
    verbs: BTreeSet<String>,
    nouns: BTreeSet<String>,
    adjectives: BTreeSet<String>,
    irregular: BTreeMap<String, IrregularForms>,
    irregular_forms: BTreeMap<String, (String, FormKind)>,
    rules: Vec<SuffixRule>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Section {
    None,
    Modal,
    Preposition,
    Adverb,
    Verb,
    Irregular,
    Noun,
    Adjective,
    Suffix,
}

fn err(line: usize, reason: &str) -> LexiconError {
    LexiconError { line, reason: reason.to_string() }
}

impl Lexicon {
    /// The lexicon shipped with this crate.
    pub fn bundled() -> Lexicon {
        Lexicon::parse(BUNDLED).expect("bundled lexicon is well formed")
    }

    pub fn parse(text: &str) -> Result<Lexicon, LexiconError> {
        let mut lex = Lexicon {
            version: 0,
            modals: BTreeSet::new(),
            prepositions: BTreeSet::new(),
            adverbs: BTreeSet::new(),
            verbs: BTreeSet::new(),
            nouns: BTreeSet::new(),
            adjectives: BTreeSet::new(),
            irregular: BTreeMap::new(),
            irregular_forms: BTreeMap::new(),
            rules: Vec::new(),
        };
        let mut section = Section::None;
        for (i, raw) in text.lines().enumerate() {
            let lineno = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(v) = line.strip_prefix("@version") {
                lex.version = v.trim().parse().map_err(|_| err(lineno, "bad version"))?;
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                section = match name {
                    "modal" => Section::Modal,
                    "preposition" => Section::Preposition,
                    "adverb" => Section::Adverb,
                    "verb" => Section::Verb,
                    "irregular" => Section::Irregular,
                    "noun" => Section::Noun,
                    "adjective" => Section::Adjective,
                    "suffix" => Section::Suffix,
                    _ => return Err(err(lineno, "unknown section")),
                };
                continue;
            }
            if line.chars().any(char::is_uppercase) {
                return Err(err(lineno, "entries must be lowercase"));
            }
            let word = || line.to_string();
            match section {
                Section::None => return Err(err(lineno, "entry outside of a section")),
                Section::Modal => {
                    lex.modals.insert(word());
                }
                Section::Preposition => {
                    lex.prepositions.insert(word());
                }
                Section::Adverb => {
                    lex.adverbs.insert(word());
                }
                Section::Verb => {
                    lex.verbs.insert(word());
                }
                Section::Noun => {
                    lex.nouns.insert(word());
                }
                Section::Adjective => {
                    lex.adjectives.insert(word());
                }
                Section::Irregular => lex.add_irregular(lineno, line)?,
                Section::Suffix => lex.rules.push(parse_rule(lineno, line)?),
            }
        }
        if lex.version == 0 {
            return Err(err(0, "missing @version"));
        }
        Ok(lex)
    }

    fn add_irregular(&mut self, lineno: usize, line: &str) -> Result<(), LexiconError> {
        let cols: Vec<&str> = line.split_whitespace().collect();
        if cols.len() < 4 {
            return Err(err(lineno, "irregular row needs base, 3sg, participle and gerund"));
        }
        let base = cols[0].to_string();
        let forms = IrregularForms {
            third_person: cols[1].to_string(),
            past_participle: cols[2].to_string(),
            gerund: cols[3].to_string(),
            other: cols[4..].iter().map(|s| s.to_string()).collect(),
        };
        for form in [cols[0], cols[1], cols[3]].iter().chain(cols[4..].iter()) {
            self.irregular_forms.entry(form.to_string()).or_insert_with(|| (base.clone(), FormKind::Finite));
        }
        // participle reading wins for forms shared with the base ("set", "put")
        self.irregular_forms.insert(forms.past_participle.clone(), (base.clone(), FormKind::PastParticiple));
        self.irregular.insert(base, forms);
        Ok(())
    }

    pub fn version(&self) -> u32 {
        self.version
    }

    pub fn is_modal(&self, token: &str) -> bool {
        self.modals.contains(token)
    }

    pub fn is_preposition(&self, token: &str) -> bool {
        self.prepositions.contains(token)
    }

    pub fn irregular(&self, base: &str) -> Option<&IrregularForms> {
        self.irregular.get(base)
    }

    /// Whether `word` is a verb base form known to the lexicon.
    pub fn is_verb_base(&self, word: &str) -> bool {
        self.verbs.contains(word) || self.irregular.contains_key(word)
    }

    pub fn verb_bases(&self) -> impl Iterator<Item = &str> {
        self.verbs.iter().chain(self.irregular.keys()).map(String::as_str)
    }

    pub fn nouns(&self) -> impl Iterator<Item = &str> {
        self.nouns.iter().map(String::as_str)
    }

    pub fn adjectives(&self) -> impl Iterator<Item = &str> {
        self.adjectives.iter().map(String::as_str)
    }

    pub fn prepositions(&self) -> impl Iterator<Item = &str> {
        self.prepositions.iter().map(String::as_str)
    }

    fn is_known(&self, word: &str) -> bool {
        self.is_verb_base(word)
            || self.nouns.contains(word)
            || self.adjectives.contains(word)
            || self.adverbs.contains(word)
            || self.prepositions.contains(word)
            || self.modals.contains(word)
    }

    /// Base form of `token`: irregular table first, then suffix rules
    /// (preferring candidates the lexicon knows), else the token itself.
    /// Rules are applied until a fixed point, so the result is idempotent.
    pub fn lemmatize(&self, token: &str) -> String {
        let mut current = token.to_lowercase();
        // each step either maps to a known base or shortens the word
        for _ in 0..64 {
            let next = self.lemma_step(&current);
            if next == current {
                break;
            }
            current = next;
        }
        current
    }

    fn lemma_step(&self, word: &str) -> String {
        if let Some((base, _)) = self.irregular_forms.get(word) {
            return base.clone();
        }
        if self.is_verb_base(word) {
            return word.to_string();
        }
        let candidates = self.suffix_candidates(word);
        // participles listed as adjectives ("opposed") still lemmatize to the verb
        if word.ends_with("ed") || word.ends_with("ing") {
            if let Some((c, _)) = candidates.iter().find(|(c, _)| self.is_verb_base(c)) {
                return c.clone();
            }
        }
        if self.is_known(word) {
            return word.to_string();
        }
        if let Some((c, _)) = candidates.iter().find(|(c, _)| self.is_known(c)) {
            return c.clone();
        }
        candidates.into_iter().find(|(_, guarded)| *guarded).map(|(c, _)| c).unwrap_or_else(|| word.to_string())
    }

    /// Every rule rewrite of `word`, in rule order, with whether its guard passed.
    fn suffix_candidates(&self, word: &str) -> Vec<(String, bool)> {
        let mut out = Vec::new();
        for rule in &self.rules {
            let Some(stem) = word.strip_suffix(rule.suffix.as_str()) else {
                continue;
            };
            if stem.chars().count() < 2 {
                continue;
            }
            let candidate = match rule.replacement {
                Replacement::Suffix => {
                    let mut c = stem.to_string();
                    c.push_str(&rule.replacement_text);
                    c
                }
                Replacement::Literal(s) => {
                    let mut c = stem.to_string();
                    c.push_str(s);
                    c
                }
                Replacement::Undouble => match undouble(stem) {
                    Some(c) => c,
                    None => continue,
                },
            };
            out.push((candidate, guard_passes(rule.guard, stem, word)));
        }
        out
    }

    /// Single class per token; lexicon lists take precedence over suffix
    /// heuristics, and within each the order is
    /// modal > preposition > adverb > verb forms > adjective/noun > other.
    pub fn pos_class(&self, token: &str) -> PosClass {
        let t = token.to_lowercase();
        if self.modals.contains(&t) {
            return PosClass::Modal;
        }
        if self.prepositions.contains(&t) {
            return PosClass::Preposition;
        }
        if self.adverbs.contains(&t) {
            return PosClass::Adverb;
        }
        if let Some((_, kind)) = self.irregular_forms.get(&t) {
            return match kind {
                FormKind::PastParticiple => PosClass::PpVerb,
                FormKind::Finite => PosClass::Verb,
            };
        }
        if self.verbs.contains(&t) {
            return PosClass::Verb;
        }
        let lemma = self.lemmatize(&t);
        if self.is_verb_base(&lemma) {
            return if t.ends_with("ed") { PosClass::PpVerb } else { PosClass::Verb };
        }
        if self.adjectives.contains(&t) || self.adjectives.contains(&lemma) {
            return PosClass::Adjective;
        }
        if self.nouns.contains(&t) || self.nouns.contains(&lemma) {
            return PosClass::Noun;
        }
        heuristic_class(&t)
    }

    /// Third-person singular present of a verb base.
    pub fn third_person(&self, base: &str) -> String {
        if let Some(forms) = self.irregular.get(base) {
            return forms.third_person.clone();
        }
        let mut out = base.to_string();
        if ends_consonant_y(base) {
            out.pop();
            out.push_str("ies");
        } else if ["s", "x", "z", "ch", "sh", "o"].iter().any(|s| base.ends_with(s)) {
            out.push_str("es");
        } else {
            out.push('s');
        }
        out
    }

    /// Past participle of a verb base.
    pub fn past_participle(&self, base: &str) -> String {
        if let Some(forms) = self.irregular.get(base) {
            return forms.past_participle.clone();
        }
        let mut out = base.to_string();
        if base.ends_with('e') {
            out.push('d');
        } else if ends_consonant_y(base) {
            out.pop();
            out.push_str("ied");
        } else if short_cvc(base) {
            if let Some(last) = base.chars().last() {
                out.push(last);
            }
            out.push_str("ed");
        } else {
            out.push_str("ed");
        }
        out
    }
}

fn parse_rule(lineno: usize, line: &str) -> Result<SuffixRule, LexiconError> {
    let cols: Vec<&str> = line.split_whitespace().collect();
    if cols.len() != 3 {
        return Err(err(lineno, "suffix rule needs suffix, replacement and guard"));
    }
    let replacement = match cols[1] {
        "-" => Replacement::Literal(""),
        "~" => Replacement::Undouble,
        _ => Replacement::Suffix,
    };
    let guard = match cols[2] {
        "?long" => Guard::Long,
        "?sibilant" => Guard::Sibilant,
        "?plain_s" => Guard::PlainS,
        "?doubled" => Guard::Doubled,
        "?restore_e" => Guard::RestoreE,
        "?stem" => Guard::Stem,
        _ => return Err(err(lineno, "unknown guard")),
    };
    Ok(SuffixRule { suffix: cols[0].to_string(), replacement, replacement_text: cols[1].to_string(), guard })
}

fn is_vowel(c: char) -> bool {
    matches!(c, 'a' | 'e' | 'i' | 'o' | 'u')
}

fn ends_consonant_y(word: &str) -> bool {
    let mut rev = word.chars().rev();
    matches!((rev.next(), rev.next()), (Some('y'), Some(c)) if !is_vowel(c))
}

/// One-syllable consonant-vowel-consonant words double their final consonant.
fn short_cvc(word: &str) -> bool {
    let chars: Vec<char> = word.chars().collect();
    if chars.len() < 3 || chars.len() > 4 {
        return false;
    }
    let n = chars.len();
    let (c1, v, c2) = (chars[n - 3], chars[n - 2], chars[n - 1]);
    let vowels = chars.iter().filter(|c| is_vowel(**c)).count();
    vowels == 1 && !is_vowel(c1) && is_vowel(v) && !is_vowel(c2) && !matches!(c2, 'w' | 'x' | 'y')
}

fn undouble(stem: &str) -> Option<String> {
    let mut rev = stem.chars().rev();
    let (a, b) = (rev.next()?, rev.next()?);
    if a == b && !is_vowel(a) {
        let mut out = stem.to_string();
        out.pop();
        Some(out)
    } else {
        None
    }
}

fn wants_final_e(stem: &str) -> bool {
    const ENDINGS: [&str; 13] = ["c", "v", "z", "u", "dg", "at", "ot", "ut", "ir", "ur", "ar", "as", "us"];
    if ENDINGS.iter().any(|e| stem.ends_with(e)) {
        return true;
    }
    let mut rev = stem.chars().rev();
    match (rev.next(), rev.next()) {
        (Some('l'), Some(c)) => matches!(c, 'b' | 'c' | 'd' | 'f' | 'g' | 'k' | 'p' | 't' | 'z'),
        (Some('s'), Some(c)) => is_vowel(c),
        _ => false,
    }
}

fn guard_passes(guard: Guard, stem: &str, word: &str) -> bool {
    match guard {
        Guard::Long => word.chars().count() > 4,
        Guard::Sibilant => ["s", "x", "z", "ch", "sh", "o"].iter().any(|s| stem.ends_with(s)),
        Guard::PlainS => {
            stem.chars().count() >= 3 && !stem.ends_with('s') && !stem.ends_with('u') && !stem.ends_with('i')
        }
        Guard::Doubled => {
            let mut rev = stem.chars().rev();
            matches!((rev.next(), rev.next()), (Some(a), Some(b))
                if a == b && matches!(a, 'b' | 'd' | 'g' | 'k' | 'm' | 'n' | 'p' | 'r' | 't'))
        }
        Guard::RestoreE => wants_final_e(stem),
        Guard::Stem => stem.chars().count() >= 3 && stem.chars().any(|c| is_vowel(c) || c == 'y'),
    }
}

fn heuristic_class(t: &str) -> PosClass {
    let len = t.chars().count();
    if len > 4 && t.ends_with("ly") {
        return PosClass::Adverb;
    }
    if len > 4 && t.ends_with("ed") {
        return PosClass::PpVerb;
    }
    if len > 5 && t.ends_with("ing") {
        return PosClass::Verb;
    }
    const ADJ: [&str; 12] = ["ous", "ful", "ive", "able", "ible", "ical", "ic", "less", "ant", "ent", "ary", "ish"];
    if len > 4 && ADJ.iter().any(|s| t.ends_with(s)) {
        return PosClass::Adjective;
    }
    const NOUN: [&str; 12] =
        ["tion", "sion", "ment", "ness", "ity", "ship", "ism", "ist", "hood", "dom", "ance", "ence"];
    if len > 4 && NOUN.iter().any(|s| t.ends_with(s)) {
        return PosClass::Noun;
    }
    PosClass::Other
}
