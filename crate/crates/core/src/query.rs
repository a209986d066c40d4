//! SK queries: a SPARQL basic graph pattern plus a keyword list and `k`.
//!
//! Concrete syntax:
//!
//! ```text
//! SELECT ?a, ?f WHERE { ?a type Actor . ?a actedIn ?f . ?f label "Philadelphia" }
//!     KEYWORDS("Academy Award") K=1
//! ```
//!
//! Terms are `?name` variables, bare local names, `<full IRIs>` or quoted
//! literals. Commas between projected variables and keywords are optional.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use crate::error::{Result, SkqError};
use crate::graph::{PredicateId, RdfGraph, Term, VertexId, VertexKind};

pub const DEFAULT_K: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Constant {
    /// Bare local name, resolved against vertex labels.
    Name(String),
    Iri(String),
    Literal(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum QueryNode {
    /// Name including the leading `?`.
    Variable(String),
    Constant(Constant),
}

impl QueryNode {
    pub fn variable_name(&self) -> Option<&str> {
        match self {
            QueryNode::Variable(v) => Some(v),
            QueryNode::Constant(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum PredicateTerm {
    Constant(String),
    Variable(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TriplePattern {
    pub subject: QueryNode,
    pub predicate: PredicateTerm,
    pub object: QueryNode,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkQuery {
    pub patterns: Vec<TriplePattern>,
    pub projected: Vec<String>,
    pub keywords: Vec<String>,
    pub k: usize,
}

/// Predicate names incident to a query variable, sorted, with multiplicity.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PredicateSequence(pub Vec<String>);

impl SkQuery {
    pub fn parse(text: &str) -> Result<Self> {
        parse_sk_query(text)
    }

    /// Variables bound to graph vertices, in order of first appearance.
    pub fn vertex_variables(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for p in &self.patterns {
            for node in [&p.subject, &p.object] {
                if let Some(v) = node.variable_name() {
                    if !out.contains(&v) {
                        out.push(v);
                    }
                }
            }
        }
        out
    }

    pub fn predicate_variables(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for p in &self.patterns {
            if let PredicateTerm::Variable(v) = &p.predicate {
                if !out.contains(&v.as_str()) {
                    out.push(v);
                }
            }
        }
        out
    }

    fn validate(&self) -> Result<()> {
        if self.patterns.is_empty() {
            return Err(SkqError::InvalidQuery("empty WHERE clause".into()));
        }
        if self.keywords.is_empty() {
            return Err(SkqError::InvalidQuery("at least one keyword is required".into()));
        }
        if self.k == 0 {
            return Err(SkqError::InvalidQuery("k must be positive".into()));
        }
        for p in &self.patterns {
            if matches!(p.subject, QueryNode::Constant(Constant::Literal(_))) {
                return Err(SkqError::InvalidQuery("literal in subject position".into()));
            }
        }
        let vars = self.vertex_variables();
        if vars.is_empty() {
            return Err(SkqError::InvalidQuery("query has no vertex variables".into()));
        }
        let pvars = self.predicate_variables();
        for v in &self.projected {
            if !vars.contains(&v.as_str()) && !pvars.contains(&v.as_str()) {
                return Err(SkqError::InvalidQuery(format!(
                    "projected variable {v} does not occur in the pattern"
                )));
            }
        }
        if !self.is_connected() {
            return Err(SkqError::InvalidQuery("query graph is disconnected".into()));
        }
        Ok(())
    }

    fn is_connected(&self) -> bool {
        let mut ids: HashMap<&QueryNode, usize> = HashMap::new();
        for p in &self.patterns {
            for node in [&p.subject, &p.object] {
                let next = ids.len();
                ids.entry(node).or_insert(next);
            }
        }
        let mut parent: Vec<usize> = (0..ids.len()).collect();
        fn find(parent: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while parent[r] != r {
                r = parent[r];
            }
            parent[x] = r;
            r
        }
        for p in &self.patterns {
            let a = find(&mut parent, ids[&p.subject]);
            let b = find(&mut parent, ids[&p.object]);
            parent[a] = b;
        }
        let root = find(&mut parent, 0);
        (0..ids.len()).all(|i| find(&mut parent, i) == root)
    }
}

/// Sorted constant predicate names of every pattern touching `var`, in
/// either position. Predicate variables contribute nothing.
pub fn variable_predicate_sequence(query: &SkQuery, var: &str) -> Result<PredicateSequence> {
    let mut seen = false;
    let mut labels = Vec::new();
    for p in &query.patterns {
        for node in [&p.subject, &p.object] {
            if node.variable_name() == Some(var) {
                seen = true;
                if let PredicateTerm::Constant(name) = &p.predicate {
                    labels.push(name.clone());
                }
            }
        }
    }
    if !seen {
        return Err(SkqError::InvalidQuery(format!("unknown variable {var}")));
    }
    labels.sort();
    Ok(PredicateSequence(labels))
}

impl fmt::Display for Constant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Constant::Name(n) => write!(f, "{n}"),
            Constant::Iri(i) => write!(f, "<{i}>"),
            Constant::Literal(l) => write_quoted(f, l),
        }
    }
}

fn write_quoted(f: &mut fmt::Formatter<'_>, s: &str) -> fmt::Result {
    f.write_str("\"")?;
    for c in s.chars() {
        match c {
            '"' => f.write_str("\\\"")?,
            '\\' => f.write_str("\\\\")?,
            '\n' => f.write_str("\\n")?,
            c => write!(f, "{c}")?,
        }
    }
    f.write_str("\"")
}

impl fmt::Display for QueryNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QueryNode::Variable(v) => write!(f, "{v}"),
            QueryNode::Constant(c) => write!(f, "{c}"),
        }
    }
}

impl fmt::Display for PredicateTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PredicateTerm::Constant(name) if is_bare_name(name) => write!(f, "{name}"),
            PredicateTerm::Constant(iri) => write!(f, "<{iri}>"),
            PredicateTerm::Variable(v) => write!(f, "{v}"),
        }
    }
}

impl fmt::Display for SkQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SELECT {} WHERE {{ ", self.projected.join(", "))?;
        for (i, p) in self.patterns.iter().enumerate() {
            if i > 0 {
                f.write_str(" . ")?;
            }
            write!(f, "{} {} {}", p.subject, p.predicate, p.object)?;
        }
        f.write_str(" } KEYWORDS(")?;
        for (i, kw) in self.keywords.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write_quoted(f, kw)?;
        }
        write!(f, ") K={}", self.k)
    }
}

fn is_bare_name(s: &str) -> bool {
    !s.is_empty() && s.chars().all(is_name_char)
}

fn is_name_char(c: char) -> bool {
    c.is_alphanumeric() || matches!(c, '_' | '-' | ':')
}

// ---------------------------------------------------------------------------
// Parser

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Var(String),
    Name(String),
    Iri(String),
    Str(String),
    Int(usize),
    LBrace,
    RBrace,
    LParen,
    RParen,
    Dot,
    Comma,
    Eq,
}

fn lex(text: &str) -> Result<Vec<(usize, Token)>> {
    let err = |position: usize, message: &str| SkqError::QuerySyntax {
        position,
        message: message.to_owned(),
    };
    let mut out = Vec::new();
    let mut chars = text.char_indices().peekable();
    while let Some(&(pos, c)) = chars.peek() {
        match c {
            c if c.is_whitespace() => {
                chars.next();
            }
            '{' | '}' | '(' | ')' | '.' | ',' | '=' => {
                chars.next();
                out.push((
                    pos,
                    match c {
                        '{' => Token::LBrace,
                        '}' => Token::RBrace,
                        '(' => Token::LParen,
                        ')' => Token::RParen,
                        '.' => Token::Dot,
                        ',' => Token::Comma,
                        _ => Token::Eq,
                    },
                ));
            }
            '?' => {
                chars.next();
                let mut name = String::from("?");
                while let Some(&(_, c)) = chars.peek() {
                    if c.is_alphanumeric() || c == '_' {
                        name.push(c);
                        chars.next();
                    } else {
                        break;
                    }
                }
                if name.len() == 1 {
                    return Err(err(pos, "empty variable name"));
                }
                out.push((pos, Token::Var(name)));
            }
            '<' => {
                chars.next();
                let mut iri = String::new();
                loop {
                    match chars.next() {
                        Some((_, '>')) => break,
                        Some((_, c)) if !c.is_whitespace() => iri.push(c),
                        _ => return Err(err(pos, "unterminated IRI")),
                    }
                }
                out.push((pos, Token::Iri(iri)));
            }
            '"' => {
                chars.next();
                let mut s = String::new();
                loop {
                    match chars.next() {
                        Some((_, '"')) => break,
                        Some((_, '\\')) => match chars.next() {
                            Some((_, 'n')) => s.push('\n'),
                            Some((_, c)) => s.push(c),
                            None => return Err(err(pos, "unterminated string")),
                        },
                        Some((_, c)) => s.push(c),
                        None => return Err(err(pos, "unterminated string")),
                    }
                }
                out.push((pos, Token::Str(s)));
            }
            c if c.is_ascii_digit() => {
                let mut n = String::new();
                while let Some(&(_, c)) = chars.peek() {
                    if c.is_ascii_digit() {
                        n.push(c);
                        chars.next();
                    } else {
                        break;
                    }
                }
                let value = n.parse().map_err(|_| err(pos, "integer out of range"))?;
                // digits followed by name characters form a name
                if matches!(chars.peek(), Some(&(_, c)) if is_name_char(c)) {
                    let mut name = n;
                    while let Some(&(_, c)) = chars.peek() {
                        if is_name_char(c) {
                            name.push(c);
                            chars.next();
                        } else {
                            break;
                        }
                    }
                    out.push((pos, Token::Name(name)));
                } else {
                    out.push((pos, Token::Int(value)));
                }
            }
            c if is_name_char(c) => {
                let mut name = String::new();
                while let Some(&(_, c)) = chars.peek() {
                    if is_name_char(c) {
                        name.push(c);
                        chars.next();
                    } else {
                        break;
                    }
                }
                out.push((pos, Token::Name(name)));
            }
            other => return Err(err(pos, &format!("unexpected character {other:?}"))),
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<(usize, Token)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.tokens.get(self.pos).map(|(p, _)| *p).unwrap_or(self.end)
    }

    fn error(&self, message: impl Into<String>) -> SkqError {
        SkqError::QuerySyntax {
            position: self.offset(),
            message: message.into(),
        }
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).map(|(_, t)| t.clone());
        self.pos += 1;
        t
    }

    fn keyword(&mut self, kw: &str) -> bool {
        if let Some(Token::Name(n)) = self.peek() {
            if n.eq_ignore_ascii_case(kw) {
                self.pos += 1;
                return true;
            }
        }
        false
    }

    fn expect(&mut self, tok: Token, what: &str) -> Result<()> {
        if self.peek() == Some(&tok) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(format!("expected {what}")))
        }
    }

    fn node(&mut self) -> Result<QueryNode> {
        match self.next() {
            Some(Token::Var(v)) => Ok(QueryNode::Variable(v)),
            Some(Token::Name(n)) => Ok(QueryNode::Constant(Constant::Name(n))),
            Some(Token::Int(i)) => Ok(QueryNode::Constant(Constant::Name(i.to_string()))),
            Some(Token::Iri(i)) => Ok(QueryNode::Constant(Constant::Iri(i))),
            Some(Token::Str(s)) => Ok(QueryNode::Constant(Constant::Literal(s))),
            _ => {
                self.pos -= 1;
                Err(self.error("expected a term"))
            }
        }
    }

    fn predicate(&mut self) -> Result<PredicateTerm> {
        match self.next() {
            Some(Token::Var(v)) => Ok(PredicateTerm::Variable(v)),
            Some(Token::Name(n)) => Ok(PredicateTerm::Constant(n)),
            Some(Token::Iri(i)) => Ok(PredicateTerm::Constant(i)),
            _ => {
                self.pos -= 1;
                Err(self.error("expected a predicate"))
            }
        }
    }
}

pub fn parse_sk_query(text: &str) -> Result<SkQuery> {
    let mut p = Parser {
        tokens: lex(text)?,
        pos: 0,
        end: text.len(),
    };
    if !p.keyword("SELECT") {
        return Err(p.error("expected SELECT"));
    }
    let mut projected = Vec::new();
    while let Some(Token::Var(v)) = p.peek() {
        projected.push(v.clone());
        p.pos += 1;
        if p.peek() == Some(&Token::Comma) {
            p.pos += 1;
        }
    }
    if projected.is_empty() {
        return Err(p.error("expected at least one projected variable"));
    }
    if !p.keyword("WHERE") {
        return Err(p.error("expected WHERE"));
    }
    p.expect(Token::LBrace, "'{'")?;
    let mut patterns = Vec::new();
    loop {
        if p.peek() == Some(&Token::RBrace) {
            p.pos += 1;
            break;
        }
        let subject = p.node()?;
        let predicate = p.predicate()?;
        let object = p.node()?;
        patterns.push(TriplePattern {
            subject,
            predicate,
            object,
        });
        match p.peek() {
            Some(Token::Dot) => p.pos += 1,
            Some(Token::RBrace) => {}
            _ => return Err(p.error("expected '.' or '}'")),
        }
    }
    let mut keywords = Vec::new();
    if p.keyword("KEYWORDS") {
        p.expect(Token::LParen, "'('")?;
        loop {
            match p.next() {
                Some(Token::Str(s)) => keywords.push(s),
                Some(Token::RParen) => break,
                _ => {
                    p.pos -= 1;
                    return Err(p.error("expected a quoted keyword or ')'"));
                }
            }
            if p.peek() == Some(&Token::Comma) {
                p.pos += 1;
            }
        }
    } else {
        return Err(p.error("expected KEYWORDS(...)"));
    }
    let mut k = DEFAULT_K;
    if p.keyword("K") {
        p.expect(Token::Eq, "'='")?;
        match p.next() {
            Some(Token::Int(n)) => k = n,
            _ => {
                p.pos -= 1;
                return Err(p.error("expected an integer after K="));
            }
        }
    }
    if p.peek().is_some() {
        return Err(p.error("trailing input"));
    }
    let query = SkQuery {
        patterns,
        projected,
        keywords,
        k,
    };
    query.validate()?;
    Ok(query)
}

// ---------------------------------------------------------------------------
// Binding against a graph

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeBinding {
    Variable,
    Constant(VertexId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PredicateBinding {
    Constant(PredicateId),
    /// Index into [`BoundQuery::predicate_variables`].
    Variable(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QueryEdge {
    pub subject: usize,
    pub predicate: PredicateBinding,
    pub object: usize,
}

/// A query resolved against one graph: nodes are dense indices, constants
/// carry their vertex ids and predicates their dictionary ids.
#[derive(Debug, Clone)]
pub struct BoundQuery {
    pub nodes: Vec<(QueryNode, NodeBinding)>,
    pub edges: Vec<QueryEdge>,
    /// Node indices of vertex variables in first-appearance order; a match
    /// binding lists vertices in this order.
    pub variables: Vec<usize>,
    pub predicate_variables: Vec<String>,
    pub keywords: Vec<String>,
    pub k: usize,
}

/// Why a query cannot have any answer on a given graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Unsatisfiable {
    UnknownConstant(String),
    AmbiguousConstant(String),
    UnknownPredicate(String),
    NoCandidates(String),
    NoKeywordMatch(String),
}

impl Unsatisfiable {
    pub fn code(&self) -> &'static str {
        match self {
            Unsatisfiable::UnknownConstant(_) => "unknown-constant",
            Unsatisfiable::AmbiguousConstant(_) => "ambiguous-constant",
            Unsatisfiable::UnknownPredicate(_) => "unknown-predicate",
            Unsatisfiable::NoCandidates(_) => "no-candidates",
            Unsatisfiable::NoKeywordMatch(_) => "no-keyword-match",
        }
    }
}

impl fmt::Display for Unsatisfiable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let detail = match self {
            Unsatisfiable::UnknownConstant(s)
            | Unsatisfiable::AmbiguousConstant(s)
            | Unsatisfiable::UnknownPredicate(s)
            | Unsatisfiable::NoCandidates(s)
            | Unsatisfiable::NoKeywordMatch(s) => s,
        };
        write!(f, "{} ({detail})", self.code())
    }
}

impl BoundQuery {
    pub fn variable_name(&self, var: usize) -> &str {
        self.nodes[self.variables[var]].0.variable_name().unwrap_or("?")
    }

    /// Position of a node in [`Self::variables`], if it is a variable.
    pub fn variable_slot(&self, node: usize) -> Option<usize> {
        self.variables.iter().position(|&n| n == node)
    }

    pub fn is_variable(&self, node: usize) -> bool {
        matches!(self.nodes[node].1, NodeBinding::Variable)
    }

    /// Predicate ids incident to a variable node, sorted with multiplicity.
    pub fn variable_predicates(&self, node: usize) -> Vec<PredicateId> {
        let mut out = Vec::new();
        for e in &self.edges {
            if let PredicateBinding::Constant(p) = e.predicate {
                if e.subject == node {
                    out.push(p);
                }
                if e.object == node {
                    out.push(p);
                }
            }
        }
        out.sort();
        out
    }

    /// Whether the node is the subject of some pattern (and so can never
    /// bind a literal).
    pub fn is_subject(&self, node: usize) -> bool {
        self.edges.iter().any(|e| e.subject == node)
    }
}

/// Resolves constants by exact term/label match and predicates by
/// dictionary lookup.
pub fn bind_constants(
    query: &SkQuery,
    graph: &RdfGraph,
) -> std::result::Result<BoundQuery, Unsatisfiable> {
    let mut index: BTreeMap<QueryNode, usize> = BTreeMap::new();
    let mut nodes: Vec<(QueryNode, NodeBinding)> = Vec::new();
    let mut variables = Vec::new();
    let mut node_of = |node: &QueryNode| -> std::result::Result<usize, Unsatisfiable> {
        if let Some(&i) = index.get(node) {
            return Ok(i);
        }
        let binding = match node {
            QueryNode::Variable(_) => NodeBinding::Variable,
            QueryNode::Constant(c) => NodeBinding::Constant(resolve_constant(c, graph)?),
        };
        let i = nodes.len();
        if binding == NodeBinding::Variable {
            variables.push(i);
        }
        nodes.push((node.clone(), binding));
        index.insert(node.clone(), i);
        Ok(i)
    };
    let mut predicate_variables: Vec<String> = Vec::new();
    let mut edges = Vec::with_capacity(query.patterns.len());
    for p in &query.patterns {
        let subject = node_of(&p.subject)?;
        let object = node_of(&p.object)?;
        let predicate = match &p.predicate {
            PredicateTerm::Constant(name) => PredicateBinding::Constant(
                graph
                    .find_predicate(name)
                    .ok_or_else(|| Unsatisfiable::UnknownPredicate(name.clone()))?,
            ),
            PredicateTerm::Variable(v) => {
                let slot = match predicate_variables.iter().position(|x| x == v) {
                    Some(slot) => slot,
                    None => {
                        predicate_variables.push(v.clone());
                        predicate_variables.len() - 1
                    }
                };
                PredicateBinding::Variable(slot)
            }
        };
        let edge = QueryEdge {
            subject,
            predicate,
            object,
        };
        // a repeated pattern is the same constraint, not a second edge
        if !edges.contains(&edge) {
            edges.push(edge);
        }
    }
    Ok(BoundQuery {
        nodes,
        edges,
        variables,
        predicate_variables,
        keywords: query.keywords.clone(),
        k: query.k,
    })
}

fn resolve_constant(c: &Constant, graph: &RdfGraph) -> std::result::Result<VertexId, Unsatisfiable> {
    let unknown = || Unsatisfiable::UnknownConstant(c.to_string());
    match c {
        Constant::Iri(iri) => graph.find_term(&Term::Iri(iri.clone())).ok_or_else(unknown),
        Constant::Literal(s) => graph.find_term(&Term::Literal(s.clone())).ok_or_else(unknown),
        Constant::Name(name) => {
            let hits: Vec<VertexId> = graph
                .find_by_label(name)
                .iter()
                .copied()
                .filter(|&v| graph.kind(v) != VertexKind::Literal)
                .collect();
            match hits.as_slice() {
                [] => Err(unknown()),
                [v] => Ok(*v),
                _ => Err(Unsatisfiable::AmbiguousConstant(name.clone())),
            }
        }
    }
}
