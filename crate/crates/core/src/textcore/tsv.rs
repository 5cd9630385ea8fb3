//! COLA TSV: one `label<TAB>sentence` instance per line, LF terminated.

use super::{ColaInstance, Label, Mode, Origin, Sentence};
use crate::error::{Error, Result};

/// Parses instances, tagging every one with `origin` (the TSV does not carry it).
pub fn parse_cola_tsv(text: &str, mode: Mode, origin: Origin) -> Result<Vec<ColaInstance>> {
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let (label, sentence) = line
            .split_once('\t')
            .ok_or_else(|| Error::format(lineno, "expected 'label<TAB>sentence'"))?;
        let label = match label {
            "0" => Label::Unacceptable,
            "1" => Label::Acceptable,
            other => {
                return Err(Error::format(
                    lineno,
                    format!("label must be 0 or 1, found {other:?}"),
                ))
            }
        };
        let sentence = Sentence::parse_joined(sentence, mode)
            .map_err(|e| Error::format(lineno, e.to_string()))?;
        out.push(ColaInstance::new(sentence, label, origin));
    }
    Ok(out)
}

pub fn emit_cola_tsv(instances: &[ColaInstance]) -> String {
    let mut out = String::new();
    for inst in instances {
        out.push_str(if inst.label == Label::Acceptable { "1" } else { "0" });
        out.push('\t');
        out.push_str(&inst.sentence.joined());
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_labels() {
        let text = "1\tShe goes home .\n0\tShe go home .\n";
        let inst = parse_cola_tsv(text, Mode::Word, Origin::Linguistics).unwrap();
        assert_eq!(inst[0].label, Label::Acceptable);
        assert_eq!(inst[1].label, Label::Unacceptable);
        assert_eq!(inst[1].sentence.tokens(), &["She", "go", "home", "."]);
        assert_eq!(emit_cola_tsv(&inst), text);
    }

    #[test]
    fn rejects_non_binary_label() {
        let err = parse_cola_tsv("1\tok\n2\tx\n", Mode::Word, Origin::Synthetic).unwrap_err();
        assert!(matches!(err, Error::Format { line: 2, .. }));
    }

    #[test]
    fn rejects_missing_tab() {
        assert!(parse_cola_tsv("1 x\n", Mode::Word, Origin::Synthetic).is_err());
    }
}
