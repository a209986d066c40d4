//! Line-oriented text reports. Field order is fixed so that two runs can be
//! diffed line by line; timings always go on their own `timing` line.

use std::io::{self, Write};

use crate::engine::{Answer, Outcome, SkResult};
use crate::graph::RdfGraph;

fn quoted(s: &str) -> String {
    format!("{s:?}")
}

pub fn format_result(graph: &RdfGraph, answer: &Answer, rank: usize, r: &SkResult) -> String {
    let mut binding: Vec<String> = answer
        .variables
        .iter()
        .enumerate()
        .map(|(slot, name)| {
            let v = r.values[slot];
            format!("{name}={}", quoted(graph.label(v)))
        })
        .collect();
    for (i, p) in r.binding.predicates.iter().enumerate() {
        binding.push(format!("?pred{i}={}", graph.predicate_name(*p)));
    }
    let anchors: Vec<String> = r
        .anchors
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let path: Vec<&str> = a.path.iter().map(|e| graph.predicate_name(e.predicate)).collect();
            format!(
                "k{}:{}->{}[{}]",
                i + 1,
                quoted(graph.label(a.keyword_vertex)),
                quoted(graph.label(a.vertex)),
                path.join(",")
            )
        })
        .collect();
    format!(
        "result rank={rank} total={:.6} content={:.6} structure={:.6} binding={} anchors={}",
        r.total,
        r.content,
        r.structure,
        binding.join(","),
        anchors.join(";")
    )
}

pub fn write_answer<W: Write + ?Sized>(w: &mut W, graph: &RdfGraph, answer: &Answer) -> io::Result<()> {
    if let Outcome::Unanswerable(reason) = &answer.outcome {
        let detail = reason.to_string();
        writeln!(w, "unanswerable reason={} detail={}", reason.code(), quoted(&detail))?;
    }
    for (i, r) in answer.results.iter().enumerate() {
        writeln!(w, "{}", format_result(graph, answer, i + 1, r))?;
    }
    let c = answer.counters;
    writeln!(
        w,
        "counters outcome={} results={} pops={} relaxations={} matcher_calls={} matches={}",
        answer.outcome.name(),
        answer.results.len(),
        c.pops,
        c.relaxations,
        c.matcher_calls,
        c.matches
    )
}

pub fn write_timing<W: Write + ?Sized>(w: &mut W, seconds: f64) -> io::Result<()> {
    writeln!(w, "timing seconds={seconds:.6}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{answer_sk_query, EngineConfig};
    use crate::exec::Execution;
    use crate::graph::tests::fix1;
    use crate::query::tests::FIX1_QUERY;
    use crate::query::SkQuery;
    use crate::star_index::{IndexBundle, IndexParams};

    #[test]
    fn fix1_report() {
        let g = fix1();
        let idx = IndexBundle::build(&g, IndexParams::for_graph(&g), Execution::Sequential);
        let ans = answer_sk_query(&g, &idx, &SkQuery::parse(FIX1_QUERY).unwrap(), &EngineConfig::default()).unwrap();
        let mut out = Vec::new();
        write_answer(&mut out, &g, &ans).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(
            lines[0],
            r#"result rank=1 total=0.857143 content=0.000000 structure=0.857143 binding=?a="A",?f="F" anchors=k1:"Academy Award"->"A"[label,wonPrize]"#
        );
        assert!(lines[1].starts_with("counters outcome=early-stop results=1 "));
    }
}
