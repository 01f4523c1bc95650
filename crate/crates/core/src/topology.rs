//! Random overlay graphs: generation under a connectivity and diameter
//! constraint, BFS diameter, and a small DOT subset for import/export.

use std::collections::VecDeque;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Dense node identifier in `0..n`.
pub type NodeId = u32;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TopologyError {
    #[error("invalid generator parameter: {0}")]
    InvalidParameter(String),
    #[error(
        "no connected graph with diameter <= {d_max} found for n={n}, edges_per_node={edges_per_node} \
         after {attempts} attempts"
    )]
    ConstraintUnsatisfiable {
        n: usize,
        edges_per_node: usize,
        d_max: u32,
        attempts: u32,
    },
    #[error("graph is disconnected")]
    Disconnected,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: directed graphs are not supported")]
    RejectDirected { line: usize },
}

/// Undirected simple overlay graph with dense node ids.
#[derive(Debug, Clone)]
pub struct Graph {
    adjacency: Vec<Vec<NodeId>>,
    pub graph_id: String,
    pub gen_seed: u64,
}

impl Graph {
    /// Builds a graph from an edge list. Rejects self-loops, parallel edges
    /// and out-of-range endpoints; connectivity is not checked here.
    pub fn from_edges(
        n: usize,
        edges: impl IntoIterator<Item = (NodeId, NodeId)>,
    ) -> Result<Self, TopologyError> {
        if n == 0 {
            return Err(TopologyError::InvalidParameter(
                "graph must have at least one node".into(),
            ));
        }
        let mut adjacency = vec![Vec::new(); n];
        for (u, v) in edges {
            if u as usize >= n || v as usize >= n {
                return Err(TopologyError::InvalidParameter(format!(
                    "edge {u}--{v} out of range for {n} nodes"
                )));
            }
            if u == v {
                return Err(TopologyError::InvalidParameter(format!(
                    "self-loop on node {u}"
                )));
            }
            if adjacency[u as usize].contains(&v) {
                return Err(TopologyError::InvalidParameter(format!(
                    "parallel edge {u}--{v}"
                )));
            }
            adjacency[u as usize].push(v);
            adjacency[v as usize].push(u);
        }
        for nbrs in &mut adjacency {
            nbrs.sort_unstable();
        }
        Ok(Self {
            adjacency,
            graph_id: String::new(),
            gen_seed: 0,
        })
    }

    pub fn with_id(mut self, graph_id: impl Into<String>) -> Self {
        self.graph_id = graph_id.into();
        self
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Neighbors of `v` in ascending id order.
    pub fn neighbors(&self, v: NodeId) -> &[NodeId] {
        &self.adjacency[v as usize]
    }

    pub fn degree(&self, v: NodeId) -> usize {
        self.adjacency[v as usize].len()
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        self.adjacency
            .get(u as usize)
            .is_some_and(|nbrs| nbrs.binary_search(&v).is_ok())
    }

    /// Edges as `(u, v)` with `u < v`, in ascending lexicographic order.
    pub fn edges(&self) -> Vec<(NodeId, NodeId)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for (u, nbrs) in self.adjacency.iter().enumerate() {
            let u = u as NodeId;
            out.extend(nbrs.iter().filter(|&&v| v > u).map(|&v| (u, v)));
        }
        out
    }

    /// True when both graphs have the same node count and edge set.
    pub fn same_structure(&self, other: &Graph) -> bool {
        self.node_count() == other.node_count() && self.edges() == other.edges()
    }

    pub fn is_connected(&self) -> bool {
        let dist = bfs_distances(self, 0);
        dist.iter().all(|d| d.is_some())
    }
}

/// Hop distances from `root`; `None` for unreachable nodes.
pub fn bfs_distances(g: &Graph, root: NodeId) -> Vec<Option<u32>> {
    let mut dist = vec![None; g.node_count()];
    let mut queue = VecDeque::new();
    dist[root as usize] = Some(0);
    queue.push_back(root);
    while let Some(u) = queue.pop_front() {
        let du = dist[u as usize].unwrap_or(0);
        for &v in g.neighbors(u) {
            if dist[v as usize].is_none() {
                dist[v as usize] = Some(du + 1);
                queue.push_back(v);
            }
        }
    }
    dist
}

/// Longest shortest path, by BFS from every node.
pub fn diameter(g: &Graph) -> Result<u32, TopologyError> {
    let mut best = 0;
    for root in 0..g.node_count() as NodeId {
        for d in bfs_distances(g, root) {
            best = best.max(d.ok_or(TopologyError::Disconnected)?);
        }
    }
    Ok(best)
}

/// Random overlay where every node initiates `edges_per_node` attachments to
/// distinct uniformly drawn partners. Rejected draws (self, existing edge)
/// are redrawn; a node already adjacent to everyone skips its attachment.
/// Whole graphs are regenerated with `seed + attempt` until the result is
/// connected with diameter at most `d_max`.
pub fn generate_overlay(
    n: usize,
    edges_per_node: usize,
    d_max: u32,
    seed: u64,
    max_attempts: u32,
) -> Result<Graph, TopologyError> {
    if n < 2 {
        return Err(TopologyError::InvalidParameter(format!(
            "n must be >= 2, got {n}"
        )));
    }
    if edges_per_node < 1 {
        return Err(TopologyError::InvalidParameter(
            "edges_per_node must be >= 1".into(),
        ));
    }
    if d_max < 1 {
        return Err(TopologyError::InvalidParameter("d_max must be >= 1".into()));
    }
    for attempt in 0..max_attempts {
        let attempt_seed = seed.wrapping_add(u64::from(attempt));
        let mut g = attach_random(n, edges_per_node, attempt_seed);
        if matches!(diameter(&g), Ok(d) if d <= d_max) {
            g.gen_seed = attempt_seed;
            g.graph_id = format!("er-n{n}-e{edges_per_node}-s{seed}");
            return Ok(g);
        }
    }
    Err(TopologyError::ConstraintUnsatisfiable {
        n,
        edges_per_node,
        d_max,
        attempts: max_attempts,
    })
}

fn attach_random(n: usize, edges_per_node: usize, seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut adjacency: Vec<Vec<NodeId>> = vec![Vec::new(); n];
    for u in 0..n {
        for _ in 0..edges_per_node {
            if adjacency[u].len() >= n - 1 {
                break;
            }
            let v = loop {
                let v = rng.random_range(0..n);
                if v != u && !adjacency[u].contains(&(v as NodeId)) {
                    break v;
                }
            };
            adjacency[u].push(v as NodeId);
            adjacency[v].push(u as NodeId);
        }
    }
    for nbrs in &mut adjacency {
        nbrs.sort_unstable();
    }
    Graph {
        adjacency,
        graph_id: String::new(),
        gen_seed: seed,
    }
}

/// Canonical DOT text: `graph G {`, one `  u -- v;` per edge in ascending
/// `(u, v)` order with `u < v`, then `}`.
pub fn export_dot(g: &Graph) -> String {
    let mut out = String::from("graph G {\n");
    for (u, v) in g.edges() {
        let _ = writeln!(out, "  {u} -- {v};");
    }
    out.push_str("}\n");
    out
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Word(String),
    EdgeOp,
    ArcOp,
    Open,
    Close,
    Semi,
    Comma,
    Equals,
}

fn tokenize(text: &str) -> Result<Vec<(Token, usize)>, TopologyError> {
    let mut tokens = Vec::new();
    let mut chars = text.chars().peekable();
    let mut line = 1;
    let mut attr_depth = 0usize;
    while let Some(c) = chars.next() {
        if c == '\n' {
            line += 1;
            continue;
        }
        if attr_depth > 0 {
            match c {
                '[' => attr_depth += 1,
                ']' => attr_depth -= 1,
                _ => {}
            }
            continue;
        }
        match c {
            c if c.is_whitespace() => {}
            '[' => attr_depth = 1,
            '{' => tokens.push((Token::Open, line)),
            '}' => tokens.push((Token::Close, line)),
            ';' => tokens.push((Token::Semi, line)),
            ',' => tokens.push((Token::Comma, line)),
            '=' => tokens.push((Token::Equals, line)),
            '#' => {
                while chars.peek().is_some_and(|&c| c != '\n') {
                    chars.next();
                }
            }
            '/' if chars.peek() == Some(&'/') => {
                while chars.peek().is_some_and(|&c| c != '\n') {
                    chars.next();
                }
            }
            '/' if chars.peek() == Some(&'*') => {
                chars.next();
                let mut prev = ' ';
                loop {
                    match chars.next() {
                        Some('/') if prev == '*' => break,
                        Some(c) => {
                            if c == '\n' {
                                line += 1;
                            }
                            prev = c;
                        }
                        None => {
                            return Err(TopologyError::Parse {
                                line,
                                message: "unterminated comment".into(),
                            })
                        }
                    }
                }
            }
            '-' if chars.peek() == Some(&'-') => {
                chars.next();
                tokens.push((Token::EdgeOp, line));
            }
            '-' if chars.peek() == Some(&'>') => {
                chars.next();
                tokens.push((Token::ArcOp, line));
            }
            '"' => {
                let mut word = String::new();
                loop {
                    match chars.next() {
                        Some('"') => break,
                        Some(c) => {
                            if c == '\n' {
                                line += 1;
                            }
                            word.push(c);
                        }
                        None => {
                            return Err(TopologyError::Parse {
                                line,
                                message: "unterminated string".into(),
                            })
                        }
                    }
                }
                tokens.push((Token::Word(word), line));
            }
            c if c.is_alphanumeric() || c == '_' || c == '.' => {
                let mut word = String::from(c);
                while let Some(&next) = chars.peek() {
                    if next.is_alphanumeric() || next == '_' || next == '.' {
                        word.push(next);
                        chars.next();
                    } else {
                        break;
                    }
                }
                tokens.push((Token::Word(word), line));
            }
            other => {
                return Err(TopologyError::Parse {
                    line,
                    message: format!("unexpected character {other:?}"),
                })
            }
        }
    }
    if attr_depth > 0 {
        return Err(TopologyError::Parse {
            line,
            message: "unterminated attribute list".into(),
        });
    }
    Ok(tokens)
}

fn parse_node_id(word: &str, line: usize) -> Result<NodeId, TopologyError> {
    word.parse().map_err(|_| TopologyError::Parse {
        line,
        message: format!("node id {word:?} is not a non-negative integer"),
    })
}

/// Reads an undirected DOT graph. Whitespace, comments, attribute lists,
/// attribute assignments and node-only statements are ignored; edge chains
/// (`a -- b -- c`) are accepted. The node count is `max id + 1` and the
/// result must be connected.
pub fn import_dot(text: &str) -> Result<Graph, TopologyError> {
    let tokens = tokenize(text)?;
    let mut pos = 0;
    let line_at = |pos: usize| tokens.get(pos).map_or(text.lines().count().max(1), |t| t.1);

    if let Some((Token::Word(w), _)) = tokens.get(pos) {
        if w.eq_ignore_ascii_case("strict") {
            pos += 1;
        }
    }
    match tokens.get(pos) {
        Some((Token::Word(w), line)) if w.eq_ignore_ascii_case("digraph") => {
            return Err(TopologyError::RejectDirected { line: *line });
        }
        Some((Token::Word(w), _)) if w.eq_ignore_ascii_case("graph") => pos += 1,
        _ => {
            return Err(TopologyError::Parse {
                line: line_at(pos),
                message: "expected `graph`".into(),
            })
        }
    }
    let mut name = String::from("G");
    if let Some((Token::Word(w), _)) = tokens.get(pos) {
        name = w.clone();
        pos += 1;
    }
    if !matches!(tokens.get(pos), Some((Token::Open, _))) {
        return Err(TopologyError::Parse {
            line: line_at(pos),
            message: "expected `{`".into(),
        });
    }
    pos += 1;

    let mut edges: Vec<(NodeId, NodeId, usize)> = Vec::new();
    let mut closed = false;
    while pos < tokens.len() {
        let (tok, line) = &tokens[pos];
        match tok {
            Token::Close => {
                closed = true;
                pos += 1;
                break;
            }
            Token::Semi | Token::Comma => pos += 1,
            Token::ArcOp => return Err(TopologyError::RejectDirected { line: *line }),
            Token::Word(first) => {
                // Statement: a chain of words joined by `--`, an assignment,
                // or a lone node / keyword statement.
                let mut chain = vec![(first.clone(), *line)];
                pos += 1;
                if matches!(tokens.get(pos), Some((Token::Equals, _))) {
                    pos += 1;
                    if matches!(tokens.get(pos), Some((Token::Word(_), _))) {
                        pos += 1;
                    }
                    continue;
                }
                while let Some((Token::EdgeOp, _)) = tokens.get(pos) {
                    pos += 1;
                    match tokens.get(pos) {
                        Some((Token::Word(w), l)) => {
                            chain.push((w.clone(), *l));
                            pos += 1;
                        }
                        Some((Token::ArcOp, l)) => {
                            return Err(TopologyError::RejectDirected { line: *l })
                        }
                        _ => {
                            return Err(TopologyError::Parse {
                                line: line_at(pos),
                                message: "expected node id after `--`".into(),
                            })
                        }
                    }
                }
                if let Some((Token::ArcOp, l)) = tokens.get(pos) {
                    return Err(TopologyError::RejectDirected { line: *l });
                }
                for pair in chain.windows(2) {
                    let u = parse_node_id(&pair[0].0, pair[0].1)?;
                    let v = parse_node_id(&pair[1].0, pair[1].1)?;
                    edges.push((u, v, pair[1].1));
                }
            }
            other => {
                return Err(TopologyError::Parse {
                    line: *line,
                    message: format!("unexpected token {other:?}"),
                })
            }
        }
    }
    if !closed {
        return Err(TopologyError::Parse {
            line: line_at(pos),
            message: "missing closing `}`".into(),
        });
    }
    if pos < tokens.len() {
        return Err(TopologyError::Parse {
            line: tokens[pos].1,
            message: "trailing content after closing `}`".into(),
        });
    }
    if edges.is_empty() {
        return Err(TopologyError::Parse {
            line: line_at(pos),
            message: "graph has no edges".into(),
        });
    }

    let n = edges.iter().map(|&(u, v, _)| u.max(v)).max().unwrap_or(0) as usize + 1;
    let mut seen = std::collections::HashSet::new();
    for &(u, v, line) in &edges {
        if u == v {
            return Err(TopologyError::Parse {
                line,
                message: format!("self-loop on node {u}"),
            });
        }
        if !seen.insert((u.min(v), u.max(v))) {
            return Err(TopologyError::Parse {
                line,
                message: format!("parallel edge {u} -- {v}"),
            });
        }
    }
    let g = Graph::from_edges(n, edges.iter().map(|&(u, v, _)| (u, v)))?.with_id(name);
    if !g.is_connected() {
        return Err(TopologyError::Disconnected);
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path3() -> Graph {
        Graph::from_edges(3, [(0, 1), (1, 2)]).unwrap()
    }

    fn complete(n: usize) -> Graph {
        let mut edges = Vec::new();
        for u in 0..n as NodeId {
            for v in u + 1..n as NodeId {
                edges.push((u, v));
            }
        }
        Graph::from_edges(n, edges).unwrap()
    }

    #[test]
    fn diameter_of_small_graphs() {
        assert_eq!(diameter(&path3()), Ok(2));
        assert_eq!(diameter(&complete(4)), Ok(1));
    }

    #[test]
    fn diameter_rejects_disconnected() {
        let g = Graph::from_edges(4, [(0, 1), (2, 3)]).unwrap();
        assert_eq!(diameter(&g), Err(TopologyError::Disconnected));
    }

    #[test]
    fn two_node_overlay_is_single_edge() {
        let g = generate_overlay(2, 1, 1, 11, 10).unwrap();
        assert_eq!(g.edges(), vec![(0, 1)]);
    }

    #[test]
    fn full_size_overlay() {
        let g = generate_overlay(100, 2, 8, 42, 1000).unwrap();
        assert_eq!(g.node_count(), 100);
        assert_eq!(g.edge_count(), 200);
        assert!(diameter(&g).unwrap() <= 8);
    }

    #[test]
    fn generator_rejects_bad_parameters() {
        assert!(matches!(
            generate_overlay(1, 1, 1, 0, 1),
            Err(TopologyError::InvalidParameter(_))
        ));
        assert!(matches!(
            generate_overlay(5, 0, 1, 0, 1),
            Err(TopologyError::InvalidParameter(_))
        ));
        assert!(matches!(
            generate_overlay(5, 1, 0, 0, 1),
            Err(TopologyError::InvalidParameter(_))
        ));
    }

    #[test]
    fn unsatisfiable_diameter() {
        // A sparse 50-node graph cannot have diameter 1.
        let err = generate_overlay(50, 1, 1, 3, 5).unwrap_err();
        assert!(matches!(
            err,
            TopologyError::ConstraintUnsatisfiable { attempts: 5, .. }
        ));
    }

    #[test]
    fn import_simple_edge_list() {
        let g = import_dot("graph G { 0 -- 1; 1 -- 2; }").unwrap();
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.edge_count(), 2);
    }

    #[test]
    fn import_rejects_digraph() {
        assert_eq!(
            import_dot("digraph G { 0 -> 1; }").unwrap_err(),
            TopologyError::RejectDirected { line: 1 }
        );
        assert!(matches!(
            import_dot("graph G {\n 0 -> 1;\n}").unwrap_err(),
            TopologyError::RejectDirected { line: 2 }
        ));
    }

    #[test]
    fn import_tolerates_noise() {
        let text = "strict graph \"net\" {\n  node [shape=circle];\n  3;\n  0 -- 1 [weight=2]\n\n  1--2--3 // chain\n  label = \"x\";\n}\n";
        let g = import_dot(text).unwrap();
        assert_eq!(g.edges(), vec![(0, 1), (1, 2), (2, 3)]);
        assert_eq!(g.graph_id, "net");
    }

    #[test]
    fn import_reports_line_numbers() {
        let err = import_dot("graph G {\n  0 -- 1;\n  1 -- x;\n}").unwrap_err();
        assert!(
            matches!(err, TopologyError::Parse { line: 3, .. }),
            "{err:?}"
        );
        let err = import_dot("graph G {\n  0 -- 1;\n  1 -- 0;\n}").unwrap_err();
        assert!(
            matches!(err, TopologyError::Parse { line: 3, .. }),
            "{err:?}"
        );
        let err = import_dot("graph G {\n  0 -- 1;\n").unwrap_err();
        assert!(matches!(err, TopologyError::Parse { .. }), "{err:?}");
    }

    #[test]
    fn export_is_canonical() {
        let g = Graph::from_edges(3, [(2, 1), (1, 0)]).unwrap();
        assert_eq!(export_dot(&g), "graph G {\n  0 -- 1;\n  1 -- 2;\n}\n");
    }
}
