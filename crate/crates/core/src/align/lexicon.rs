use std::collections::{HashMap, HashSet};
use std::path::Path;

use crate::error::{read_file, Error, Result};
use crate::textcore::ErrorType;

/// Closed-class token sets and an optional inflection table used by the
/// rule-based edit classifier.
#[derive(Clone, Debug, Default)]
pub struct LexiconSet {
    pub determiners: HashSet<String>,
    pub prepositions: HashSet<String>,
    pub punctuation: HashSet<String>,
    inflections: HashMap<(String, String), ErrorType>,
}

pub const DETERMINERS_FILE: &str = "determiners.txt";
pub const PREPOSITIONS_FILE: &str = "prepositions.txt";
pub const PUNCTUATION_FILE: &str = "punctuation.txt";
pub const INFLECTIONS_FILE: &str = "inflections.tsv";

impl LexiconSet {
    /// A small English default: common determiners, prepositions and ASCII
    /// plus CJK punctuation. No inflection table.
    pub fn english() -> Self {
        let mut lex = LexiconSet::default();
        for d in [
            "a", "an", "the", "this", "that", "these", "those", "my", "your", "his", "her", "its",
            "our", "their", "some", "any", "no", "every", "each",
        ] {
            lex.determiners.insert(d.to_string());
        }
        for p in [
            "about", "above", "across", "after", "against", "along", "among", "around", "at",
            "before", "behind", "below", "beside", "between", "by", "during", "for", "from", "in",
            "inside", "into", "near", "of", "off", "on", "onto", "over", "through", "to",
            "toward", "towards", "under", "until", "up", "upon", "with", "within", "without",
        ] {
            lex.prepositions.insert(p.to_string());
        }
        for p in [
            ".", ",", "!", "?", ";", ":", "'", "\"", "(", ")", "[", "]", "-", "--", "...", "`",
            "``", "''", "。", "，", "！", "？", "；", "：", "、", "“", "”", "（", "）",
        ] {
            lex.punctuation.insert(p.to_string());
        }
        lex
    }

    pub fn add_inflection(&mut self, category: ErrorType, a: &str, b: &str) {
        self.inflections
            .insert((a.to_string(), b.to_string()), category.clone());
        self.inflections.insert((b.to_string(), a.to_string()), category);
    }

    /// Category of the inflection table entry relating `a` and `b`, in either direction.
    pub fn inflection(&self, a: &str, b: &str) -> Option<&ErrorType> {
        self.inflections.get(&(a.to_string(), b.to_string()))
    }

    pub fn has_inflections(&self) -> bool {
        !self.inflections.is_empty()
    }

    pub fn is_punct(&self, t: &str) -> bool {
        self.punctuation.contains(t)
    }

    pub fn in_closed_class(&self, t: &str) -> bool {
        self.determiners.contains(t) || self.prepositions.contains(t) || self.punctuation.contains(t)
    }

    /// Loads whichever of the four lexicon files exist in `dir`; missing
    /// token-set files leave that set empty.
    pub fn load_dir(dir: &Path) -> Result<Self> {
        let mut lex = LexiconSet::default();
        for (file, set) in [
            (DETERMINERS_FILE, &mut lex.determiners),
            (PREPOSITIONS_FILE, &mut lex.prepositions),
            (PUNCTUATION_FILE, &mut lex.punctuation),
        ] {
            let path = dir.join(file);
            if path.exists() {
                *set = parse_token_list(&read_file(&path)?).map_err(|e| e.in_file(&path))?;
            }
        }
        let path = dir.join(INFLECTIONS_FILE);
        if path.exists() {
            lex.load_inflections(&read_file(&path)?)
                .map_err(|e| e.in_file(&path))?;
        }
        Ok(lex)
    }

    /// Inflection table rows: `category<TAB>form1<TAB>form2`.
    pub fn load_inflections(&mut self, text: &str) -> Result<()> {
        for (i, line) in text.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 3 || cols.iter().any(|c| c.is_empty()) {
                return Err(Error::format(
                    i + 1,
                    "expected 'category<TAB>form1<TAB>form2'",
                ));
            }
            let category: ErrorType = cols[0]
                .parse()
                .map_err(|e: Error| Error::format(i + 1, e.to_string()))?;
            self.add_inflection(category, cols[1], cols[2]);
        }
        Ok(())
    }

    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        let write = |name: &str, body: String| {
            let path = dir.join(name);
            std::fs::write(&path, body).map_err(|e| Error::io(&path, e))
        };
        write(DETERMINERS_FILE, sorted_lines(&self.determiners))?;
        write(PREPOSITIONS_FILE, sorted_lines(&self.prepositions))?;
        write(PUNCTUATION_FILE, sorted_lines(&self.punctuation))?;
        let mut rows: Vec<String> = self
            .inflections
            .iter()
            .filter(|((a, b), _)| a < b)
            .map(|((a, b), c)| format!("{c}\t{a}\t{b}\n"))
            .collect();
        rows.sort();
        write(INFLECTIONS_FILE, rows.concat())
    }
}

fn parse_token_list(text: &str) -> Result<HashSet<String>> {
    let mut set = HashSet::new();
    for (i, line) in text.lines().enumerate() {
        let tok = line.trim();
        if tok.is_empty() {
            continue;
        }
        if tok.contains(char::is_whitespace) {
            return Err(Error::format(i + 1, "one token per line expected"));
        }
        set.insert(tok.to_string());
    }
    Ok(set)
}

fn sorted_lines(set: &HashSet<String>) -> String {
    let mut v: Vec<&String> = set.iter().collect();
    v.sort();
    v.into_iter().map(|t| format!("{t}\n")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inflections_are_symmetric() {
        let mut lex = LexiconSet::default();
        lex.load_inflections("SVA\twalk\twalks\nNN\tdog\tdogs\n").unwrap();
        assert_eq!(lex.inflection("walks", "walk"), Some(&ErrorType::Sva));
        assert_eq!(lex.inflection("dog", "dogs"), Some(&ErrorType::Nn));
        assert_eq!(lex.inflection("dog", "walk"), None);
    }

    #[test]
    fn bad_inflection_row() {
        let mut lex = LexiconSet::default();
        assert!(matches!(
            lex.load_inflections("SVA\twalk\n"),
            Err(Error::Format { line: 1, .. })
        ));
    }

    #[test]
    fn token_lists_skip_blank_lines() {
        let set = parse_token_list("the\n\n a \n").unwrap();
        assert_eq!(set.len(), 2);
        assert!(!set.contains(""));
    }
}
