//! Inverted index from tokens to literal vertices, and the content cost of
//! matching a keyword phrase against a literal.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use crate::error::{Result, SkqError};
use crate::graph::{RdfGraph, VertexId, VertexKind};

/// Lowercased alphanumeric runs, deduplicated.
pub fn tokenize(text: &str) -> BTreeSet<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KeywordMatch {
    pub vertex: VertexId,
    /// In `[0, 1)`; zero iff the phrase covers every token of the label.
    pub cost: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KeywordIndex {
    postings: BTreeMap<String, Vec<VertexId>>,
}

/// Token-coverage cost: `1 - |tokens(phrase)| / |tokens(label)|`.
pub fn content_cost(phrase_tokens: usize, label_tokens: usize) -> f64 {
    1.0 - phrase_tokens as f64 / label_tokens as f64
}

impl KeywordIndex {
    pub fn build(graph: &RdfGraph) -> Self {
        let mut postings: BTreeMap<String, Vec<VertexId>> = BTreeMap::new();
        for v in graph.vertex_ids() {
            if graph.kind(v) != VertexKind::Literal {
                continue;
            }
            for tok in tokenize(graph.label(v)) {
                postings.entry(tok).or_default().push(v);
            }
        }
        // vertex ids are visited in increasing order, so lists are sorted
        KeywordIndex { postings }
    }

    pub fn posting(&self, token: &str) -> &[VertexId] {
        self.postings.get(token).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn num_tokens(&self) -> usize {
        self.postings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.postings.is_empty()
    }

    /// Literal vertices containing every token of `phrase`, ordered by cost
    /// then vertex id.
    pub fn match_keyword(&self, graph: &RdfGraph, phrase: &str) -> Result<Vec<KeywordMatch>> {
        let tokens = tokenize(phrase);
        if tokens.is_empty() {
            return Err(SkqError::EmptyKeyword(phrase.to_owned()));
        }
        let mut lists: Vec<&[VertexId]> = tokens.iter().map(|t| self.posting(t)).collect();
        lists.sort_by_key(|l| l.len());
        let mut hits: Vec<VertexId> = lists[0].to_vec();
        for list in &lists[1..] {
            hits.retain(|v| list.binary_search(v).is_ok());
        }
        let mut out: Vec<KeywordMatch> = hits
            .into_iter()
            .map(|v| KeywordMatch {
                vertex: v,
                cost: content_cost(tokens.len(), tokenize(graph.label(v)).len()),
            })
            .collect();
        out.sort_by(|a, b| a.cost.total_cmp(&b.cost).then(a.vertex.cmp(&b.vertex)));
        Ok(out)
    }

    pub(crate) fn write_to<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        w.write_u32::<LittleEndian>(self.postings.len() as u32)?;
        for (tok, list) in &self.postings {
            crate::binio::write_str(w, tok)?;
            w.write_u32::<LittleEndian>(list.len() as u32)?;
            for v in list {
                w.write_u32::<LittleEndian>(v.0)?;
            }
        }
        Ok(())
    }

    pub(crate) fn read_from<R: Read>(r: &mut R) -> Result<Self> {
        let bad = |m: String| SkqError::Format {
            what: "index",
            message: m,
        };
        let io = |e: std::io::Error| bad(e.to_string());
        let n = r.read_u32::<LittleEndian>().map_err(io)?;
        let mut postings = BTreeMap::new();
        for _ in 0..n {
            let tok = crate::binio::read_str(r, "index")?;
            let len = r.read_u32::<LittleEndian>().map_err(io)?;
            let mut list = Vec::with_capacity(len.min(1 << 20) as usize);
            for _ in 0..len {
                list.push(VertexId(r.read_u32::<LittleEndian>().map_err(io)?));
            }
            postings.insert(tok, list);
        }
        Ok(KeywordIndex { postings })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::tests::{fix1, id};
    use crate::graph::{GraphBuilder, Term};
    use proptest::prelude::*;

    #[test]
    fn fix1_postings() {
        let g = fix1();
        let idx = KeywordIndex::build(&g);
        assert_eq!(idx.posting("philadelphia"), &[id(&g, "Philadelphia")]);
        assert_eq!(idx.posting("award"), &[id(&g, "Academy Award")]);
        assert_eq!(idx.num_tokens(), 3);
    }

    #[test]
    fn no_literals_means_empty_index() {
        let mut b = GraphBuilder::new();
        b.add("a", "p", "b", false);
        assert!(KeywordIndex::build(&b.build()).is_empty());
    }

    #[test]
    fn shared_token_posts_both() {
        let mut b = GraphBuilder::new();
        b.add("a", "label", "red car", true).add("b", "label", "Red door", true);
        let g = b.build();
        let idx = KeywordIndex::build(&g);
        assert_eq!(idx.posting("red").len(), 2);
    }

    #[test]
    fn fix1_match_costs() {
        let g = fix1();
        let idx = KeywordIndex::build(&g);
        let l2 = id(&g, "Academy Award");
        assert_eq!(
            idx.match_keyword(&g, "Academy Award").unwrap(),
            vec![KeywordMatch { vertex: l2, cost: 0.0 }]
        );
        assert_eq!(
            idx.match_keyword(&g, "Award").unwrap(),
            vec![KeywordMatch { vertex: l2, cost: 0.5 }]
        );
        assert!(idx.match_keyword(&g, "Oscar").unwrap().is_empty());
        assert!(matches!(
            idx.match_keyword(&g, " - "),
            Err(SkqError::EmptyKeyword(_))
        ));
    }

    proptest! {
        #[test]
        fn matches_equal_brute_force_scan(
            labels in prop::collection::vec(
                prop::collection::vec(prop::sample::select(vec!["red", "blue", "car", "door", "x"]), 1..4),
                1..12,
            ),
            phrase in prop::collection::vec(prop::sample::select(vec!["red", "blue", "car", "door", "x"]), 1..3),
        ) {
            let mut b = GraphBuilder::new();
            for (i, words) in labels.iter().enumerate() {
                b.add_triple(
                    Term::Iri(format!("e{i}")),
                    "label",
                    Term::Literal(words.join(" ")),
                ).unwrap();
            }
            let g = b.build();
            let idx = KeywordIndex::build(&g);
            let phrase = phrase.join(" ");
            let want = tokenize(&phrase);
            let mut brute: Vec<KeywordMatch> = g
                .vertex_ids()
                .filter(|&v| g.kind(v) == VertexKind::Literal)
                .filter_map(|v| {
                    let have = tokenize(g.label(v));
                    want.is_subset(&have).then(|| KeywordMatch {
                        vertex: v,
                        cost: 1.0 - want.len() as f64 / have.len() as f64,
                    })
                })
                .collect();
            brute.sort_by(|a, b| a.cost.total_cmp(&b.cost).then(a.vertex.cmp(&b.vertex)));
            let got = idx.match_keyword(&g, &phrase).unwrap();
            for m in &got {
                prop_assert!((0.0..1.0).contains(&m.cost));
                prop_assert_eq!(m.cost == 0.0, tokenize(g.label(m.vertex)) == want);
            }
            prop_assert_eq!(got, brute);
        }
    }
}
