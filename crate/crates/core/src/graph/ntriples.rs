//! Line-oriented N-Triples reader for the subset the engine needs: IRIs,
//! blank nodes and quoted literals (language tags and datatypes are
//! accepted and dropped).

use std::io::BufRead;

use super::{GraphBuilder, RdfGraph, Term};
use crate::error::{Result, SkqError};

pub fn ingest_ntriples<R: BufRead>(input: R) -> Result<RdfGraph> {
    let mut builder = GraphBuilder::new();
    let mut triples = 0usize;
    for (idx, line) in input.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| SkqError::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        let Some((s, p, o)) = parse_line(&line).map_err(|message| SkqError::Parse {
            line: line_no,
            message,
        })?
        else {
            continue;
        };
        builder.add_triple(s, &p, o).map_err(|e| SkqError::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        triples += 1;
    }
    if triples == 0 {
        return Err(SkqError::EmptyGraph);
    }
    Ok(builder.build())
}

pub fn ingest_ntriples_str(text: &str) -> Result<RdfGraph> {
    ingest_ntriples(text.as_bytes())
}

struct Cursor<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn rest(&self) -> &'a str {
        &self.text[self.pos..]
    }

    fn skip_ws(&mut self) {
        let rest = self.rest();
        self.pos += rest.len() - rest.trim_start().len();
    }

    fn peek(&self) -> Option<char> {
        self.rest().chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }
}

type Triple = (Term, String, Term);

/// Returns `Ok(None)` for blank and comment lines.
fn parse_line(line: &str) -> std::result::Result<Option<Triple>, String> {
    let mut cur = Cursor { text: line, pos: 0 };
    cur.skip_ws();
    match cur.peek() {
        None | Some('#') => return Ok(None),
        _ => {}
    }
    let subject = parse_term(&mut cur)?;
    if matches!(subject, Term::Literal(_)) {
        return Err("literal in subject position".into());
    }
    cur.skip_ws();
    let predicate = match parse_term(&mut cur)? {
        Term::Iri(iri) => iri,
        other => return Err(format!("predicate must be an IRI, found {other}")),
    };
    cur.skip_ws();
    let object = parse_term(&mut cur)?;
    cur.skip_ws();
    if cur.bump() != Some('.') {
        return Err("missing terminating '.'".into());
    }
    cur.skip_ws();
    match cur.peek() {
        None | Some('#') => Ok(Some((subject, predicate, object))),
        Some(c) => Err(format!("unexpected {c:?} after '.'")),
    }
}

fn parse_term(cur: &mut Cursor<'_>) -> std::result::Result<Term, String> {
    match cur.peek() {
        Some('<') => {
            cur.bump();
            let rest = cur.rest();
            let end = rest.find('>').ok_or("unterminated IRI")?;
            let iri = &rest[..end];
            if iri.is_empty() || iri.contains(char::is_whitespace) {
                return Err(format!("invalid IRI <{iri}>"));
            }
            cur.pos += end + 1;
            Ok(Term::Iri(iri.to_owned()))
        }
        Some('_') => {
            let rest = cur.rest();
            if !rest.starts_with("_:") {
                return Err("expected blank node label".into());
            }
            let label: String = rest[2..]
                .chars()
                .take_while(|c| c.is_alphanumeric() || matches!(c, '_' | '-'))
                .collect();
            if label.is_empty() {
                return Err("empty blank node label".into());
            }
            cur.pos += 2 + label.len();
            Ok(Term::Blank(label))
        }
        Some('"') => {
            cur.bump();
            let value = parse_literal_body(cur)?;
            // language tag or datatype, both ignored
            match cur.peek() {
                Some('@') => {
                    cur.bump();
                    while matches!(cur.peek(), Some(c) if c.is_alphanumeric() || c == '-') {
                        cur.bump();
                    }
                }
                Some('^') => {
                    if !cur.rest().starts_with("^^<") {
                        return Err("malformed datatype".into());
                    }
                    cur.pos += 2;
                    parse_term(cur)?;
                }
                _ => {}
            }
            Ok(Term::Literal(value))
        }
        Some(c) => Err(format!("unexpected {c:?} where a term was expected")),
        None => Err("unexpected end of line".into()),
    }
}

fn parse_literal_body(cur: &mut Cursor<'_>) -> std::result::Result<String, String> {
    let mut out = String::new();
    loop {
        match cur.bump() {
            None => return Err("unterminated literal".into()),
            Some('"') => return Ok(out),
            Some('\\') => match cur.bump() {
                Some('n') => out.push('\n'),
                Some('t') => out.push('\t'),
                Some('r') => out.push('\r'),
                Some('"') => out.push('"'),
                Some('\\') => out.push('\\'),
                Some('\'') => out.push('\''),
                Some('u') => out.push(parse_hex_escape(cur, 4)?),
                Some('U') => out.push(parse_hex_escape(cur, 8)?),
                other => return Err(format!("invalid escape \\{}", other.unwrap_or(' '))),
            },
            Some(c) => out.push(c),
        }
    }
}

fn parse_hex_escape(cur: &mut Cursor<'_>, digits: usize) -> std::result::Result<char, String> {
    let rest = cur.rest();
    let hex = rest.get(..digits).ok_or("truncated unicode escape")?;
    let code = u32::from_str_radix(hex, 16).map_err(|_| format!("bad unicode escape {hex}"))?;
    cur.pos += digits;
    char::from_u32(code).ok_or_else(|| format!("invalid code point {code:#x}"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::tests::FIX1;
    use crate::graph::{VertexId, VertexKind};

    #[test]
    fn single_triple() {
        let g = ingest_ntriples_str("<a> <p> <b> .\n").unwrap();
        assert_eq!(g.num_vertices(), 2);
        assert_eq!(g.num_edges(), 1);
        assert!(g.vertex_ids().all(|v| g.kind(v) == VertexKind::Entity));
    }

    #[test]
    fn missing_dot_reports_line() {
        let err = ingest_ntriples_str("<a> <p> <b> .\n<a> <p> <c>\n").unwrap_err();
        assert!(matches!(err, SkqError::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn empty_input_is_rejected() {
        assert!(matches!(ingest_ntriples_str(""), Err(SkqError::EmptyGraph)));
        assert!(matches!(
            ingest_ntriples_str("# only a comment\n\n"),
            Err(SkqError::EmptyGraph)
        ));
    }

    #[test]
    fn literal_subject_is_rejected() {
        let err = ingest_ntriples_str("\"x\" <p> <b> .").unwrap_err();
        assert!(matches!(err, SkqError::Parse { line: 1, .. }));
    }

    #[test]
    fn escapes_tags_and_blank_nodes() {
        let g = ingest_ntriples_str(
            "_:b1 <http://x/name> \"Caf\\u00e9 \\\"X\\\"\"@fr .\n\
             _:b1 <http://x/age> \"3\"^^<http://www.w3.org/2001/XMLSchema#int> . # trailing\n",
        )
        .unwrap();
        assert_eq!(g.num_vertices(), 3);
        assert_eq!(g.label(VertexId(1)), "Café \"X\"");
        assert_eq!(g.label(VertexId(2)), "3");
    }

    #[test]
    fn duplicates_are_idempotent() {
        let once = ingest_ntriples_str(FIX1).unwrap();
        let twice = ingest_ntriples_str(&format!("{FIX1}{FIX1}")).unwrap();
        assert_eq!(once.edges(), twice.edges());
        assert_eq!(once.vertices(), twice.vertices());
        assert_eq!(once.fingerprint(), twice.fingerprint());
    }

    #[test]
    fn type_objects_become_classes() {
        let g = ingest_ntriples_str(
            "<x> <http://www.w3.org/1999/02/22-rdf-syntax-ns#type> <C> .\n<C> <sub> <D> .\n",
        )
        .unwrap();
        assert_eq!(g.kind(g.find_by_label("C")[0]), VertexKind::Class);
        assert_eq!(g.kind(g.find_by_label("D")[0]), VertexKind::Entity);
    }
}
