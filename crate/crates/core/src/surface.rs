//! Bidirectional mapping between typed predicates and template sentences.
//!
//! [`SurfaceMapper::render`] turns a predicate into a sentence such as
//! "Government A is elected in Time B"; [`SurfaceMapper::resolve`] maps a
//! sentence back to a predicate, or `None` when the sentence has no
//! recognisable relation.
//!
//! Argument order: the first argument mentioned in the sentence fills slot 1.
//! For distinct types this fixes `type1`; for same-type pairs the argument
//! lettered A always fills slot 1, so "Thing B eats Thing A" resolves to
//! `(eat.2,eat.1,thing,thing)`.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::lexicon::{Lexicon, PosClass};
use crate::predicate::{ArgType, Letter, RelSlot, TypePair, TypedPredicate};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SurfaceError {
    #[error("predicate {0} has no sentence pattern")]
    UnsupportedShape(String),
    #[error("predicate {predicate} does not belong to type pair {type_pair}")]
    TypeMismatch { predicate: String, type_pair: String },
}

/// A rendered predicate together with its argument lettering.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateSentence {
    pub text: String,
    pub type_pair: TypePair,
    pub slot1_letter: Letter,
    pub slot2_letter: Letter,
}

/// Trims, collapses internal whitespace and drops one trailing period.
pub fn normalize_sentence(s: &str) -> String {
    let joined = s.split_whitespace().collect::<Vec<_>>().join(" ");
    match joined.strip_suffix('.') {
        Some(t) => t.trim_end().to_string(),
        None => joined,
    }
}

#[derive(Debug, Clone)]
pub struct SurfaceMapper {
    lexicon: Lexicon,
}

struct Mention {
    start: usize,
    end: usize,
    ty: ArgType,
    letter: Letter,
}

impl SurfaceMapper {
    pub fn new(lexicon: Lexicon) -> Self {
        SurfaceMapper { lexicon }
    }

    pub fn bundled() -> Self {
        SurfaceMapper::new(Lexicon::bundled())
    }

    pub fn lexicon(&self) -> &Lexicon {
        &self.lexicon
    }

    pub fn render(&self, p: &TypedPredicate, tp: &TypePair) -> Result<TemplateSentence, SurfaceError> {
        let mismatch = || SurfaceError::TypeMismatch { predicate: p.to_string(), type_pair: tp.to_string() };
        if !tp.houses(p) {
            return Err(mismatch());
        }
        let unsupported = || SurfaceError::UnsupportedShape(p.to_string());
        if tp.is_same_type() {
            let ty = tp.first().title_case();
            if let Some(phrase) = self.phrase(p.slot1(), p.slot2(), p.negated()) {
                return Ok(self.sentence(tp, &ty, Letter::A, &phrase, &ty, Letter::B));
            }
            let phrase = self.phrase(p.slot2(), p.slot1(), p.negated()).ok_or_else(unsupported)?;
            return Ok(self.sentence(tp, &ty, Letter::B, &phrase, &ty, Letter::A));
        }
        let phrase = self.phrase(p.slot1(), p.slot2(), p.negated()).ok_or_else(unsupported)?;
        let l1 = tp.letter_of(p.type1()).ok_or_else(mismatch)?;
        let mut out = self.sentence(tp, &p.type1().title_case(), l1, &phrase, &p.type2().title_case(), l1.other());
        out.slot1_letter = l1;
        out.slot2_letter = l1.other();
        Ok(out)
    }

    fn sentence(
        &self,
        tp: &TypePair,
        first_type: &str,
        first: Letter,
        phrase: &str,
        second_type: &str,
        second: Letter,
    ) -> TemplateSentence {
        TemplateSentence {
            text: format!("{} {} {} {} {}", first_type, first.as_str(), phrase, second_type, second.as_str()),
            type_pair: tp.clone(),
            slot1_letter: Letter::A,
            slot2_letter: Letter::B,
        }
    }

    /// Relation phrase for a predicate whose first-mentioned argument fills
    /// `s1`, or `None` if the slot pair matches no pattern.
    fn phrase(&self, s1: &RelSlot, s2: &RelSlot, negated: bool) -> Option<String> {
        let lex = &self.lexicon;
        let [v] = s1.words() else { return None };
        let (head, rest) = s2.words().split_first()?;
        if head != v {
            return None;
        }
        let rest_ends_in_prep = rest.last().is_some_and(|w| lex.is_preposition(w));
        let tail = rest.join(" ");
        let join = |parts: &[&str]| parts.iter().filter(|s| !s.is_empty()).copied().collect::<Vec<_>>().join(" ");
        let copula = if negated { "is not" } else { "is" };
        match (s1.index(), s2.index()) {
            (1, 2) if v == "be" => {
                if !rest.is_empty() && !rest_ends_in_prep {
                    return None;
                }
                Some(join(&[copula, &tail]))
            }
            (1, 2) if rest.is_empty() => Some(if negated { join(&["does not", v]) } else { lex.third_person(v) }),
            (1, 2) if rest_ends_in_prep => {
                if matches!(lex.pos_class(v), PosClass::Noun | PosClass::Adjective) {
                    Some(join(&[copula, v, &tail]))
                } else if negated {
                    Some(join(&["does not", v, &tail]))
                } else {
                    Some(join(&[&lex.third_person(v), &tail]))
                }
            }
            (2, 2) if rest_ends_in_prep => Some(join(&[copula, &lex.past_participle(v), &tail])),
            (2, 3) if !rest_ends_in_prep => Some(join(&[copula, &lex.past_participle(v), &tail])),
            _ => None,
        }
    }

    /// Maps a template sentence back to a predicate. Total over arbitrary
    /// input: anything without two typed arguments and a relation head
    /// yields `None`.
    pub fn resolve(&self, sentence: &str, tp: &TypePair) -> Option<TypedPredicate> {
        let tokens: Vec<&str> = sentence
            .split_whitespace()
            .map(|t| t.trim_matches(|c: char| !c.is_alphanumeric() && c != '\''))
            .filter(|t| !t.is_empty())
            .collect();
        let mentions = find_mentions(&tokens, tp);
        let [m1, m2] = mentions.as_slice() else { return None };
        let (type1, type2, swapped) = if tp.is_same_type() {
            if m1.letter == m2.letter {
                return None;
            }
            (m1.ty.clone(), m2.ty.clone(), m1.letter == Letter::B)
        } else {
            if m1.ty == m2.ty {
                return None;
            }
            (m1.ty.clone(), m2.ty.clone(), false)
        };
        let words: Vec<String> = tokens
            .iter()
            .enumerate()
            .filter(|(i, _)| !(m1.start..m1.end).contains(i) && !(m2.start..m2.end).contains(i))
            .map(|(_, t)| t.to_lowercase())
            .collect();
        let (negated, (w1, i1), (w2, i2)) = self.resolve_relation(words)?;
        let slot1 = RelSlot::new(&w1, i1).ok()?;
        let slot2 = RelSlot::new(&w2, i2).ok()?;
        Some(if swapped {
            TypedPredicate::new(negated, slot2, slot1, type1, type2)
        } else {
            TypedPredicate::new(negated, slot1, slot2, type1, type2)
        })
    }

    #[allow(clippy::type_complexity)]
    fn resolve_relation(&self, mut l: Vec<String>) -> Option<(bool, (Vec<String>, u8), (Vec<String>, u8))> {
        let lex = &self.lexicon;
        if l.is_empty() {
            return None;
        }
        let negated = self.strip_negation(&mut l);
        l.retain(|t| !lex.is_modal(t));
        if negated && l.len() > 1 && lex.lemmatize(&l[0]) == "do" && lex.pos_class(&l[1]).is_verb() {
            l.remove(0);
        }
        if l.len() > 1 && matches!(l[0].as_str(), "have" | "has" | "had") && l[1] == "been" {
            l.remove(0);
        }
        if l.len() > 1 && lex.lemmatize(&l[0]) == "have" && lex.pos_class(&l[1]) == PosClass::PpVerb {
            l.remove(0);
        }
        if l.len() > 2 && lex.lemmatize(&l[0]) == "have" && l[1] == "to" {
            l.drain(..2);
        }
        if l.is_empty() {
            return None;
        }

        let is_verb = |t: &str| lex.pos_class(t).is_verb();
        let mut head = 0;
        let mut tail = l.len() - 1;
        while head <= tail && !is_verb(&l[head]) {
            head += 1;
        }
        if head > tail {
            return None;
        }
        while head <= tail && !(is_verb(&l[tail]) || lex.is_preposition(&l[tail])) {
            tail -= 1;
        }
        let mut lp: Vec<String> = l[head..=tail].to_vec();
        if lp.len() > 1
            && lex.lemmatize(&lp[0]) == "be"
            && lp[1].ends_with("ing")
            && lex.pos_class(&lp[1]) == PosClass::Verb
        {
            lp.remove(0);
        }

        let last_is_prep = |lp: &[String]| lp.last().is_some_and(|w| lex.is_preposition(w));
        let t = lex.lemmatize(&lp[0]);
        if t == "be" {
            let be = || Vec::from(["be".to_string()]);
            if lp.len() == 1 {
                return Some((negated, (be(), 1), (be(), 2)));
            }
            if !lex.is_preposition(&lp[1]) {
                if lex.pos_class(&lp[1]) == PosClass::Adverb {
                    lp.remove(1);
                }
                if lp.len() > 1 {
                    let class = lex.pos_class(&lp[1]);
                    if matches!(class, PosClass::Adjective | PosClass::Noun) && last_is_prep(&lp) {
                        lp[1] = lex.lemmatize(&lp[1]);
                        return Some((negated, (lp[1..2].to_vec(), 1), (lp[1..].to_vec(), 2)));
                    }
                    if class == PosClass::PpVerb {
                        lp[1] = lex.lemmatize(&lp[1]);
                        let index = if last_is_prep(&lp) { 2 } else { 3 };
                        return Some((negated, (lp[1..2].to_vec(), 2), (lp[1..].to_vec(), index)));
                    }
                }
            }
            // copula followed by a bare verb or a preposition ("is after")
            if lp.len() > 1 && last_is_prep(&lp) {
                let mut slot2 = be();
                slot2.extend(lp[1..].iter().cloned());
                return Some((negated, (be(), 1), (slot2, 2)));
            }
            return None;
        }
        lp[0] = t;
        if lp.len() == 1 {
            return Some((negated, (lp.clone(), 1), (lp, 2)));
        }
        if last_is_prep(&lp) {
            return Some((negated, (lp[..1].to_vec(), 1), (lp, 2)));
        }
        None
    }

    /// Detects and removes a negation marker at the start of `l`.
    fn strip_negation(&self, l: &mut Vec<String>) -> bool {
        let lex = &self.lexicon;
        let first = l[0].as_str();
        if first == "not" {
            l.remove(0);
            return true;
        }
        if first == "cannot" || first.ends_with("n't") {
            let expanded = match first {
                "cannot" | "can't" => "can",
                "won't" => "will",
                "shan't" => "shall",
                "ain't" => "is",
                other => other.strip_suffix("n't").unwrap_or(other),
            };
            l[0] = expanded.to_string();
            return true;
        }
        if l.len() > 1 && l[1] == "not" {
            let aux = lex.is_modal(first) || matches!(lex.lemmatize(first).as_str(), "be" | "do" | "have");
            if aux {
                l.remove(1);
                return true;
            }
        }
        false
    }
}

fn find_mentions(tokens: &[&str], tp: &TypePair) -> Vec<Mention> {
    let mut types: Vec<(ArgType, Vec<String>)> = Vec::new();
    for ty in [tp.first(), tp.second()] {
        if !types.iter().any(|(t, _)| t == ty) {
            types.push((ty.clone(), ty.title_words()));
        }
    }
    // longer type names first so "Living Thing A" is not read as "Thing A"
    types.sort_by_key(|t| core::cmp::Reverse(t.1.len()));
    let mut mentions = Vec::new();
    let mut i = 0;
    'scan: while i < tokens.len() {
        for (ty, words) in &types {
            let k = words.len();
            if i + k >= tokens.len() {
                continue;
            }
            let names_match = tokens[i..i + k].iter().zip(words).all(|(t, w)| t.eq_ignore_ascii_case(w));
            let letter = match tokens[i + k] {
                "A" => Letter::A,
                "B" => Letter::B,
                _ => continue,
            };
            if names_match {
                mentions.push(Mention { start: i, end: i + k + 1, ty: ty.clone(), letter });
                i += k + 1;
                continue 'scan;
            }
        }
        i += 1;
    }
    mentions
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::predicate::parse_predicate;

    fn tp(a: &str, b: &str) -> TypePair {
        TypePair::new(ArgType::new(a).unwrap(), ArgType::new(b).unwrap())
    }

    fn pg() -> TypePair {
        tp("person", "government")
    }

    fn resolve(s: &str) -> Option<String> {
        SurfaceMapper::bundled().resolve(s, &pg()).map(|p| p.to_string())
    }

    fn render(p: &str, tp: &TypePair) -> String {
        SurfaceMapper::bundled().render(&parse_predicate(p).unwrap(), tp).unwrap().text
    }

    #[test]
    fn renders_examples() {
        assert_eq!(
            render("(elect.2,elect.in.2,government,time)", &tp("government", "time")),
            "Government A is elected in Time B"
        );
        assert_eq!(render("(adore.1,adore.2,person,government)", &pg()), "Person A adores Government B");
        assert_eq!(render("(magnet.1,magnet.for.2,government,person)", &pg()), "Government B is magnet for Person A");
        assert_eq!(
            render("(issue.1,issue.call.for.2,government,person)", &pg()),
            "Government B issues call for Person A"
        );
        assert_eq!(
            render("(be.1,be.gravitate.towards.2,government,person)", &pg()),
            "Government B is gravitate towards Person A"
        );
        assert_eq!(render("(give.2,give.3,person,government)", &pg()), "Person A is given Government B");
    }

    #[test]
    fn renders_negation() {
        assert_eq!(render("NEG__(be.1,be.2,person,government)", &pg()), "Person A is not Government B");
        assert_eq!(render("NEG__(adore.1,adore.2,person,government)", &pg()), "Person A does not adore Government B");
        assert_eq!(render("NEG__(draw.2,draw.to.2,government,person)", &pg()), "Government B is not drawn to Person A");
    }

    #[test]
    fn same_type_pairs_keep_direction() {
        let tt = tp("thing", "thing");
        let m = SurfaceMapper::bundled();
        assert_eq!(render("(eat.1,eat.2,thing,thing)", &tt), "Thing A eats Thing B");
        assert_eq!(render("(eat.2,eat.1,thing,thing)", &tt), "Thing B eats Thing A");
        let back = m.resolve("Thing B eats Thing A.", &tt).unwrap();
        assert_eq!(back.to_string(), "(eat.2,eat.1,thing,thing)");
        assert!(m.resolve("Thing A eats Thing A.", &tt).is_none());
    }

    #[test]
    fn resolves_examples() {
        assert_eq!(
            resolve("Person A is identified with Government B.").as_deref(),
            Some("(identify.2,identify.with.2,person,government)")
        );
        assert_eq!(
            resolve("Person A identifies with Government B.").as_deref(),
            Some("(identify.1,identify.with.2,person,government)")
        );
        assert_eq!(
            resolve("Government B is drawn to Person A.").as_deref(),
            Some("(draw.2,draw.to.2,government,person)")
        );
        assert_eq!(resolve("Person A the the Government B."), None);
        assert_eq!(resolve(""), None);
        assert_eq!(resolve("Person A adores"), None);
    }

    #[test]
    fn resolves_auxiliary_constructions() {
        for (s, want) in [
            ("Person A has been identified with Government B", "(identify.2,identify.with.2,person,government)"),
            ("Person A has adored Government B", "(adore.1,adore.2,person,government)"),
            ("Person A has to obey Government B", "(obey.1,obey.2,person,government)"),
            ("Person A will adore Government B", "(adore.1,adore.2,person,government)"),
            ("Person A is deeply devoted to Government B", "(devote.2,devote.to.2,person,government)"),
            ("Person A is adoring Government B", "(adore.1,adore.2,person,government)"),
            ("Person A does not adore Government B", "NEG__(adore.1,adore.2,person,government)"),
            ("Person A doesn't adore Government B", "NEG__(adore.1,adore.2,person,government)"),
            ("Person A isn't Government B", "NEG__(be.1,be.2,person,government)"),
            ("Person A cannot adore Government B", "NEG__(adore.1,adore.2,person,government)"),
            ("Person A notices Government B", "(notice.1,notice.2,person,government)"),
            ("Government B is given Person A", "(give.2,give.3,government,person)"),
        ] {
            assert_eq!(resolve(s).as_deref(), Some(want), "{s}");
        }
    }

    #[test]
    fn paraphrases_collide() {
        let te = tp("thing", "event");
        assert_eq!(render("(use.2,use.in.2,thing,event)", &te), render("(be.1,be.used.in.2,thing,event)", &te));
        assert_eq!(render("(use.2,use.in.2,thing,event)", &te), "Thing A is used in Event B");
    }

    #[test]
    fn multiword_types() {
        let t = tp("living_thing", "thing");
        let m = SurfaceMapper::bundled();
        let p = parse_predicate("(eat.1,eat.2,living_thing,thing)").unwrap();
        let s = m.render(&p, &t).unwrap();
        assert_eq!(s.text, "Living Thing A eats Thing B");
        assert_eq!(m.resolve(&s.text, &t), Some(p));
    }

    #[test]
    fn rejects_foreign_types_and_shapes() {
        let m = SurfaceMapper::bundled();
        let p = parse_predicate("(adore.1,adore.2,person,time)").unwrap();
        assert!(matches!(m.render(&p, &pg()), Err(SurfaceError::TypeMismatch { .. })));
        let p = parse_predicate("(adore.3,adore.2,person,government)").unwrap();
        assert!(matches!(m.render(&p, &pg()), Err(SurfaceError::UnsupportedShape(_))));
        let p = parse_predicate("(adore.1,know.2,person,government)").unwrap();
        assert!(matches!(m.render(&p, &pg()), Err(SurfaceError::UnsupportedShape(_))));
    }

    #[test]
    fn normalizes_sentences() {
        assert_eq!(normalize_sentence("  Person A  adores Government B. "), "Person A adores Government B");
        assert_eq!(normalize_sentence("x"), "x");
    }

    #[test]
    fn every_lexicon_verb_round_trips() {
        let m = SurfaceMapper::bundled();
        let lex = m.lexicon();
        let preps: Vec<&str> = lex.prepositions().collect();
        let t = pg();
        let mut failures = Vec::new();
        for (n, v) in lex.verb_bases().enumerate() {
            if v == "be" {
                continue;
            }
            let prep = preps[n % preps.len()];
            for neg in ["", "NEG__"] {
                for shape in [
                    format!("{neg}({v}.1,{v}.2,person,government)"),
                    format!("{neg}({v}.1,{v}.{prep}.2,government,person)"),
                    format!("{neg}({v}.2,{v}.{prep}.2,person,government)"),
                    format!("{neg}({v}.2,{v}.3,person,government)"),
                ] {
                    let p = parse_predicate(&shape).unwrap();
                    let s = m.render(&p, &t).unwrap();
                    if m.resolve(&s.text, &t).as_ref() != Some(&p) {
                        failures.push(format!("{shape} -> {}", s.text));
                    }
                }
            }
        }
        assert!(failures.is_empty(), "{failures:#?}");
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn resolve_is_total(s in "\\PC{0,60}") {
                let m = SurfaceMapper::bundled();
                let _ = m.resolve(&s, &pg());
                let _ = m.resolve(&s, &tp("thing", "thing"));
            }

            #[test]
            fn resolve_is_total_on_framed_noise(words in proptest::collection::vec("[a-zA-Z']{1,8}", 0..6)) {
                let m = SurfaceMapper::bundled();
                let s = format!("Person A {} Government B.", words.join(" "));
                if let Some(p) = m.resolve(&s, &pg()) {
                    prop_assert_eq!(p.slot1().head(), p.slot2().head());
                }
            }
        }
    }
}
