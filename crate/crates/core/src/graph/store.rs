//! Flat binary store: versioned header followed by the vertex table, the
//! predicate dictionary (with optional salience column) and the edge list.
//! All integers little-endian.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use super::{assemble, Edge, PredicateId, RdfGraph, Term, Vertex, VertexId, VertexKind};
use crate::binio::{read_str as read_str_what, write_str};
use crate::error::{Result, SkqError};

fn read_str<R: Read>(r: &mut R) -> Result<String> {
    read_str_what(r, "store")
}

const MAGIC: &[u8; 8] = b"SKQSTORE";
pub const STORE_VERSION: u32 = 1;
const FLAG_SALIENCE: u32 = 1;

pub fn save_store(graph: &RdfGraph, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| SkqError::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_store(graph, &mut w)
        .and_then(|_| w.flush())
        .map_err(|e| SkqError::io(path, e))
}

pub fn load_store(path: impl AsRef<Path>) -> Result<RdfGraph> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| SkqError::io(path, e))?;
    read_store(&mut BufReader::new(file))
}

pub(crate) fn write_store<W: Write>(graph: &RdfGraph, w: &mut W) -> std::io::Result<()> {
    w.write_all(MAGIC)?;
    w.write_u32::<LittleEndian>(STORE_VERSION)?;
    w.write_u32::<LittleEndian>(FLAG_SALIENCE)?;

    w.write_u32::<LittleEndian>(graph.vertices.len() as u32)?;
    for v in &graph.vertices {
        w.write_u8(match v.kind {
            VertexKind::Literal => 0,
            VertexKind::Entity => 1,
            VertexKind::Class => 2,
        })?;
        let (tag, text) = match &v.term {
            Term::Iri(s) => (0u8, s),
            Term::Blank(s) => (1, s),
            Term::Literal(s) => (2, s),
        };
        w.write_u8(tag)?;
        write_str(w, text)?;
    }

    w.write_u32::<LittleEndian>(graph.predicates.len() as u32)?;
    for p in &graph.predicates {
        write_str(w, p)?;
    }
    for &s in &graph.salience {
        w.write_f64::<LittleEndian>(s)?;
    }

    w.write_u32::<LittleEndian>(graph.edges.len() as u32)?;
    for e in &graph.edges {
        w.write_u32::<LittleEndian>(e.subject.0)?;
        w.write_u32::<LittleEndian>(e.predicate.0)?;
        w.write_u32::<LittleEndian>(e.object.0)?;
    }
    Ok(())
}

fn format_err(message: impl Into<String>) -> SkqError {
    SkqError::Format {
        what: "store",
        message: message.into(),
    }
}

pub(crate) fn read_store<R: Read>(r: &mut R) -> Result<RdfGraph> {
    let io = |e: std::io::Error| format_err(e.to_string());
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(io)?;
    if &magic != MAGIC {
        return Err(format_err("bad magic bytes"));
    }
    let version = r.read_u32::<LittleEndian>().map_err(io)?;
    if version != STORE_VERSION {
        return Err(SkqError::Version {
            what: "store",
            found: version,
            expected: STORE_VERSION,
        });
    }
    let flags = r.read_u32::<LittleEndian>().map_err(io)?;

    let nv = r.read_u32::<LittleEndian>().map_err(io)? as usize;
    let mut vertices = Vec::with_capacity(nv.min(1 << 20));
    for _ in 0..nv {
        let kind = match r.read_u8().map_err(io)? {
            0 => VertexKind::Literal,
            1 => VertexKind::Entity,
            2 => VertexKind::Class,
            k => return Err(format_err(format!("unknown vertex kind {k}"))),
        };
        let tag = r.read_u8().map_err(io)?;
        let text = read_str(r)?;
        let term = match tag {
            0 => Term::Iri(text),
            1 => Term::Blank(text),
            2 => Term::Literal(text),
            t => return Err(format_err(format!("unknown term tag {t}"))),
        };
        if (kind == VertexKind::Literal) != matches!(term, Term::Literal(_)) {
            return Err(format_err("vertex kind disagrees with its term"));
        }
        vertices.push(Vertex { kind, term });
    }

    let np = r.read_u32::<LittleEndian>().map_err(io)? as usize;
    let mut predicates = Vec::with_capacity(np.min(1 << 20));
    for _ in 0..np {
        predicates.push(read_str(r)?);
    }
    let salience = if flags & FLAG_SALIENCE != 0 {
        let mut s = Vec::with_capacity(np);
        for _ in 0..np {
            s.push(r.read_f64::<LittleEndian>().map_err(io)?);
        }
        Some(s)
    } else {
        None
    };

    let ne = r.read_u32::<LittleEndian>().map_err(io)? as usize;
    let mut edges = Vec::with_capacity(ne.min(1 << 24));
    for _ in 0..ne {
        let s = r.read_u32::<LittleEndian>().map_err(io)?;
        let p = r.read_u32::<LittleEndian>().map_err(io)?;
        let o = r.read_u32::<LittleEndian>().map_err(io)?;
        if s as usize >= nv || o as usize >= nv || p as usize >= np {
            return Err(format_err("edge endpoint out of range"));
        }
        if vertices[s as usize].kind == VertexKind::Literal {
            return Err(format_err("literal vertex used as subject"));
        }
        edges.push(Edge {
            subject: VertexId(s),
            predicate: PredicateId(p),
            object: VertexId(o),
        });
    }
    Ok(assemble(vertices, predicates, edges, salience))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::tests::fix1;
    use crate::graph::GraphBuilder;

    fn round_trip(g: &RdfGraph) -> RdfGraph {
        let mut buf = Vec::new();
        write_store(g, &mut buf).unwrap();
        read_store(&mut buf.as_slice()).unwrap()
    }

    #[test]
    fn fix1_round_trip() {
        let g = fix1();
        let back = round_trip(&g);
        assert_eq!(back.vertices(), g.vertices());
        assert_eq!(back.edges(), g.edges());
        assert_eq!(back.salience_table(), g.salience_table());
        assert_eq!(back.fingerprint(), g.fingerprint());
    }

    #[test]
    fn empty_graph_round_trip() {
        let g = GraphBuilder::new().build();
        let back = round_trip(&g);
        assert!(back.is_empty());
        assert_eq!(back.num_edges(), 0);
    }

    #[test]
    fn corrupted_magic() {
        let mut buf = Vec::new();
        write_store(&fix1(), &mut buf).unwrap();
        buf[0] = b'X';
        assert!(matches!(
            read_store(&mut buf.as_slice()),
            Err(SkqError::Format { .. })
        ));
    }

    #[test]
    fn version_mismatch() {
        let mut buf = Vec::new();
        write_store(&fix1(), &mut buf).unwrap();
        buf[8] = 99;
        assert!(matches!(
            read_store(&mut buf.as_slice()),
            Err(SkqError::Version { found: 99, .. })
        ));
    }

    #[test]
    fn salience_recomputed_when_absent() {
        let g = fix1();
        let mut buf = Vec::new();
        write_store(&g, &mut buf).unwrap();
        // Rewrite without the salience column.
        let mut stripped = Vec::new();
        let mut w = &mut stripped;
        w.write_all(MAGIC).unwrap();
        w.write_u32::<LittleEndian>(STORE_VERSION).unwrap();
        w.write_u32::<LittleEndian>(0).unwrap();
        let body = &buf[16..];
        // vertex section is unchanged; salience follows the predicate names
        let mut r = body;
        let nv = r.read_u32::<LittleEndian>().unwrap();
        w.write_u32::<LittleEndian>(nv).unwrap();
        for _ in 0..nv {
            let kind = r.read_u8().unwrap();
            let tag = r.read_u8().unwrap();
            let text = read_str(&mut r).unwrap();
            w.write_u8(kind).unwrap();
            w.write_u8(tag).unwrap();
            write_str(&mut w, &text).unwrap();
        }
        let np = r.read_u32::<LittleEndian>().unwrap();
        w.write_u32::<LittleEndian>(np).unwrap();
        for _ in 0..np {
            let text = read_str(&mut r).unwrap();
            write_str(&mut w, &text).unwrap();
        }
        let r = &r[np as usize * 8..];
        w.write_all(r).unwrap();
        let back = read_store(&mut stripped.as_slice()).unwrap();
        assert_eq!(back.salience_table(), g.salience_table());
    }
}
