//! M2 reader and writer.
//!
//! ```text
//! S <tokens joined by single space>
//! A <start> <end>|||<type>|||<replacement or -NONE->|||REQUIRED|||-NONE-|||<annotator>
//! ```
//!
//! Blocks are separated by one blank line. An annotator that made no
//! corrections is written as `A -1 -1|||noop|||-NONE-|||REQUIRED|||-NONE-|||<id>`.

use std::fmt::Write as _;

use super::{AnnotatedPair, Edit, ErrorType, Mode, Sentence};
use crate::error::{Error, Result};

const FIELD_SEP: &str = "|||";
const NONE: &str = "-NONE-";
const REQUIRED: &str = "REQUIRED";
const NOOP: &str = "noop";

struct Block {
    source: Sentence,
    annotators: Vec<(u32, Vec<Edit>)>,
}

impl Block {
    fn finish(self) -> AnnotatedPair {
        let (annotator_ids, gold) = self.annotators.into_iter().unzip();
        AnnotatedPair {
            source: self.source,
            target: None,
            gold,
            annotator_ids,
        }
    }
}

pub fn parse_m2(text: &str, mode: Mode) -> Result<Vec<AnnotatedPair>> {
    let mut pairs = Vec::new();
    let mut current: Option<Block> = None;

    for (idx, line) in text.split('\n').enumerate() {
        let lineno = idx + 1;
        if line.is_empty() {
            if let Some(block) = current.take() {
                pairs.push(block.finish());
            }
            continue;
        }
        if let Some(rest) = line.strip_prefix("S ").or(if line == "S" { Some("") } else { None }) {
            if let Some(block) = current.take() {
                pairs.push(block.finish());
            }
            let source = Sentence::parse_joined(rest, mode)
                .map_err(|e| Error::format(lineno, e.to_string()))?;
            current = Some(Block {
                source,
                annotators: Vec::new(),
            });
        } else if let Some(rest) = line.strip_prefix("A ") {
            let block = current
                .as_mut()
                .ok_or_else(|| Error::format(lineno, "annotation line before any S line"))?;
            parse_annotation(rest, block, mode, lineno)?;
        } else {
            return Err(Error::format(
                lineno,
                format!("expected an S or A line, found {line:?}"),
            ));
        }
    }
    if let Some(block) = current.take() {
        pairs.push(block.finish());
    }
    Ok(pairs)
}

fn parse_annotation(rest: &str, block: &mut Block, mode: Mode, lineno: usize) -> Result<()> {
    let fields: Vec<&str> = rest.split(FIELD_SEP).collect();
    if fields.len() != 6 {
        return Err(Error::format(
            lineno,
            format!("expected 6 '|||'-separated fields, found {}", fields.len()),
        ));
    }
    let mut span = fields[0].split(' ');
    let (start, end) = match (span.next(), span.next(), span.next()) {
        (Some(s), Some(e), None) => (parse_offset(s, lineno)?, parse_offset(e, lineno)?),
        _ => return Err(Error::format(lineno, "span must be '<start> <end>'")),
    };
    if fields[3] != REQUIRED || fields[4] != NONE {
        return Err(Error::format(
            lineno,
            format!("expected '{REQUIRED}|||{NONE}' in fields 4 and 5"),
        ));
    }
    let annotator: u32 = fields[5]
        .parse()
        .map_err(|_| Error::format(lineno, format!("bad annotator id {:?}", fields[5])))?;

    let slot = match block.annotators.iter().position(|(id, _)| *id == annotator) {
        Some(i) => i,
        None => {
            block.annotators.push((annotator, Vec::new()));
            block.annotators.len() - 1
        }
    };

    if fields[1] == NOOP {
        if start != -1 || end != -1 {
            return Err(Error::format(lineno, "noop annotation must span -1 -1"));
        }
        return Ok(());
    }
    if start < 0 || end < start {
        return Err(Error::format(lineno, format!("invalid span {start} {end}")));
    }
    let (start, end) = (start as usize, end as usize);
    if end > block.source.len() {
        return Err(Error::format(
            lineno,
            format!(
                "span {start} {end} exceeds sentence length {}",
                block.source.len()
            ),
        ));
    }
    let etype: ErrorType = fields[1]
        .parse()
        .map_err(|e: Error| Error::format(lineno, e.to_string()))?;
    // ERRANT writes deletions with an empty correction field; accept both spellings.
    let replacement = if fields[2] == NONE || fields[2].is_empty() {
        Vec::new()
    } else {
        Sentence::parse_joined(fields[2], mode)
            .map_err(|e| Error::format(lineno, e.to_string()))?
            .into_tokens()
    };
    let edit = Edit::new(start, end, replacement, etype);
    if edit.is_null() {
        return Err(Error::format(lineno, "null edit (empty span and correction)"));
    }
    let edits = &mut block.annotators[slot].1;
    if let Some(prev) = edits.last() {
        if edit.start < prev.end {
            return Err(Error::format(
                lineno,
                format!(
                    "edit {start} {end} overlaps or precedes previous edit {} {}",
                    prev.start, prev.end
                ),
            ));
        }
    }
    edits.push(edit);
    Ok(())
}

fn parse_offset(s: &str, lineno: usize) -> Result<i64> {
    s.parse()
        .map_err(|_| Error::format(lineno, format!("bad span offset {s:?}")))
}

pub fn emit_m2(pairs: &[AnnotatedPair]) -> String {
    let mut out = String::new();
    for (i, pair) in pairs.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let _ = writeln!(out, "S {}", pair.source.joined());
        for (edits, id) in pair.gold.iter().zip(&pair.annotator_ids) {
            if edits.is_empty() {
                let _ = writeln!(
                    out,
                    "A -1 -1{FIELD_SEP}{NOOP}{FIELD_SEP}{NONE}{FIELD_SEP}{REQUIRED}{FIELD_SEP}{NONE}{FIELD_SEP}{id}"
                );
            }
            for e in edits {
                let repl = if e.replacement.is_empty() {
                    NONE.to_string()
                } else {
                    e.replacement.join(" ")
                };
                let _ = writeln!(
                    out,
                    "A {} {}{FIELD_SEP}{}{FIELD_SEP}{repl}{FIELD_SEP}{REQUIRED}{FIELD_SEP}{NONE}{FIELD_SEP}{id}",
                    e.start, e.end, e.etype
                );
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_single_edit() {
        let text = "S I has a dog .\nA 1 2|||SVA|||have|||REQUIRED|||-NONE-|||0\n";
        let pairs = parse_m2(text, Mode::Word).unwrap();
        assert_eq!(pairs.len(), 1);
        assert_eq!(pairs[0].annotator_ids, vec![0]);
        assert_eq!(
            pairs[0].gold[0],
            vec![Edit::from_strs(1, 2, &["have"], ErrorType::Sva)]
        );
        assert_eq!(emit_m2(&pairs), text);
    }

    #[test]
    fn noop_yields_empty_edit_list() {
        let text = "S ok .\nA -1 -1|||noop|||-NONE-|||REQUIRED|||-NONE-|||0\n";
        let pairs = parse_m2(text, Mode::Word).unwrap();
        assert_eq!(pairs[0].gold, vec![Vec::<Edit>::new()]);
        assert_eq!(emit_m2(&pairs), text);
    }

    #[test]
    fn multi_block_multi_annotator_round_trip() {
        let text = "S She go home\n\
                    A 1 2|||SVA|||goes|||REQUIRED|||-NONE-|||0\n\
                    A 3 3|||PUNCT|||.|||REQUIRED|||-NONE-|||0\n\
                    A 1 2|||VERB|||went|||REQUIRED|||-NONE-|||1\n\
                    \n\
                    S the the cat\n\
                    A 0 1|||OTHER|||-NONE-|||REQUIRED|||-NONE-|||0\n\
                    \n\
                    S fine\n";
        let pairs = parse_m2(text, Mode::Word).unwrap();
        assert_eq!(pairs.len(), 3);
        assert_eq!(pairs[0].gold.len(), 2);
        assert_eq!(pairs[1].gold[0][0].replacement, Vec::<String>::new());
        assert!(pairs[2].gold.is_empty());
        assert_eq!(emit_m2(&pairs), text);
    }

    #[test]
    fn accepts_errant_empty_deletion() {
        let text = "S a b\nA 0 1|||OTHER||||||REQUIRED|||-NONE-|||0\n";
        let pairs = parse_m2(text, Mode::Word).unwrap();
        assert!(pairs[0].gold[0][0].replacement.is_empty());
    }

    #[test]
    fn annotation_before_sentence_is_an_error() {
        let err = parse_m2("A 1 2|||SVA|||have|||REQUIRED|||-NONE-|||0\n", Mode::Word)
            .unwrap_err();
        assert!(matches!(err, Error::Format { line: 1, .. }));
    }

    #[test]
    fn malformed_lines_report_line_number() {
        let bad = [
            "S a b\nA 0 1|||X|||y|||REQUIRED|||-NONE-\n",
            "S a b\nA 0 5|||X|||y|||REQUIRED|||-NONE-|||0\n",
            "S a b\nA 0 x|||X|||y|||REQUIRED|||-NONE-|||0\n",
            "S a b\nA 0 1|||X|||y|||OPTIONAL|||-NONE-|||0\n",
            "S a b\nA 1 2|||X|||y|||REQUIRED|||-NONE-|||0\nA 0 1|||X|||y|||REQUIRED|||-NONE-|||0\n",
            "S a b\nA 1 1|||X|||-NONE-|||REQUIRED|||-NONE-|||0\n",
            "S a b\nhello\n",
        ];
        for (i, text) in bad.iter().enumerate() {
            match parse_m2(text, Mode::Word) {
                Err(Error::Format { line, .. }) => assert!(line >= 2, "case {i}"),
                other => panic!("case {i}: expected format error, got {other:?}"),
            }
        }
    }

    #[test]
    fn character_mode_round_trip() {
        let text = "S 我 喜 欢 猫\nA 3 3|||PUNCT|||。|||REQUIRED|||-NONE-|||0\n";
        let pairs = parse_m2(text, Mode::Character).unwrap();
        assert_eq!(pairs[0].source.mode(), Mode::Character);
        assert_eq!(emit_m2(&pairs), text);
    }
}
