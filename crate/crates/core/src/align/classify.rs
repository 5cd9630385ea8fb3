use super::{char_distance, LexiconSet};
use crate::textcore::{Edit, ErrorType, Sentence};

/// Rule-based error type. The first rule that fires wins:
/// PUNCT, ORTH, SPELL, DET, PREP, inflection-table category, OTHER.
///
/// A token pair listed in the inflection table is never SPELL, even when it
/// is a one-character change.
pub fn classify_edit(edit: &Edit, src: &Sentence, lex: &LexiconSet) -> ErrorType {
    let orig = &src.tokens()[edit.start..edit.end];
    let corr = &edit.replacement[..];

    if orig.iter().chain(corr).all(|t| lex.is_punct(t)) {
        return ErrorType::Punct;
    }

    let orig_cat: String = orig.concat();
    let corr_cat: String = corr.concat();
    if !orig_cat.is_empty() && orig_cat.to_lowercase() == corr_cat.to_lowercase() {
        return ErrorType::Orth;
    }

    let inflection = match (orig, corr) {
        ([a], [b]) => lex.inflection(a, b),
        _ => None,
    };

    if let ([a], [b]) = (orig, corr) {
        let alphabetic = |t: &str| t.chars().all(char::is_alphabetic);
        let len = a.chars().count().max(b.chars().count());
        if inflection.is_none()
            && !lex.in_closed_class(a)
            && !lex.in_closed_class(b)
            && alphabetic(a)
            && alphabetic(b)
            && char_distance(a, b) <= len.div_ceil(2)
        {
            return ErrorType::Spell;
        }
    }

    let content: Vec<&String> = orig
        .iter()
        .chain(corr)
        .filter(|t| !lex.is_punct(t))
        .collect();
    if !content.is_empty() {
        if content.iter().all(|t| lex.determiners.contains(*t)) {
            return ErrorType::Det;
        }
        if content.iter().all(|t| lex.prepositions.contains(*t)) {
            return ErrorType::Prep;
        }
    }

    if let Some(cat) = inflection {
        return cat.clone();
    }
    ErrorType::Other
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::textcore::Mode;

    fn classify(src: &str, start: usize, end: usize, repl: &[&str]) -> ErrorType {
        let mut lex = LexiconSet::english();
        lex.add_inflection(ErrorType::Sva, "go", "goes");
        lex.add_inflection(ErrorType::Nn, "dog", "dogs");
        let src = Sentence::parse_joined(src, Mode::Word).unwrap();
        classify_edit(&Edit::from_strs(start, end, repl, ErrorType::Other), &src, &lex)
    }

    #[test]
    fn punctuation() {
        assert_eq!(classify("I have a dog", 4, 4, &["."]), ErrorType::Punct);
        assert_eq!(classify("yes , no", 1, 2, &[]), ErrorType::Punct);
        assert_eq!(classify("yes , no", 1, 2, &[";"]), ErrorType::Punct);
    }

    #[test]
    fn orthography() {
        assert_eq!(classify("she runs", 0, 1, &["She"]), ErrorType::Orth);
        assert_eq!(classify("every day", 0, 2, &["everyday"]), ErrorType::Orth);
    }

    #[test]
    fn spelling() {
        assert_eq!(classify("I recieve it", 1, 2, &["receive"]), ErrorType::Spell);
        // too far apart to be a typo
        assert_eq!(classify("I eat it", 1, 2, &["devour"]), ErrorType::Other);
        // digits are not alphabetic
        assert_eq!(classify("I ate 21", 2, 3, &["12"]), ErrorType::Other);
    }

    #[test]
    fn determiners_and_prepositions() {
        assert_eq!(classify("I saw dog", 2, 2, &["the"]), ErrorType::Det);
        assert_eq!(classify("I saw a dog", 2, 3, &["the"]), ErrorType::Det);
        assert_eq!(classify("look to me", 1, 2, &["at"]), ErrorType::Prep);
        assert_eq!(classify("go to the park", 1, 3, &["the", "to"]), ErrorType::Other);
    }

    #[test]
    fn inflection_table() {
        assert_eq!(classify("she go home", 1, 2, &["goes"]), ErrorType::Sva);
        assert_eq!(classify("two dog", 1, 2, &["dogs"]), ErrorType::Nn);
    }

    #[test]
    fn transposition_is_other() {
        assert_eq!(classify("she home goes", 1, 3, &["goes", "home"]), ErrorType::Other);
    }
}
