//! Line-oriented grid description.
//!
//! ```text
//! # comment lines and blank lines are ignored
//! nodes 4
//! 0 root
//! 1 intermediate
//! 2 leaf
//! 3 leaf
//! edges 3
//! 0 1 0.02 0.05 1
//! 1 2 0.03 0.01 1
//! 1 3 0.04 0.02 1
//! stats 2
//! 2 0.8 0.5 0.1 -0.4 -0.2
//! 3 1.1 0.7 0 -0.6 -0.1
//! ```
//!
//! Node lines list ids `0..N` in order; node 0 is the only root. Edge lines are
//! `u v r x operational` with `u < v`, sorted. Stats lines are
//! `id var_p var_q cov_pq mean_p mean_q`, sorted by id. Numbers are written
//! in shortest round-trip form, so emit -> parse -> emit is byte-identical.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::grid::{edge_key, validate_tree, CandidateGraph, EdgeKey, LineImpedance, NodeId, RadialTree};
use crate::powerflow::{InjectionStats, NodeStats};

/// Line number and whitespace-split fields.
type Row = (usize, Vec<String>);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Root,
    Leaf,
    Intermediate,
}

impl NodeKind {
    pub fn name(self) -> &'static str {
        match self {
            NodeKind::Root => "root",
            NodeKind::Leaf => "leaf",
            NodeKind::Intermediate => "intermediate",
        }
    }
}

impl FromStr for NodeKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "root" => Ok(NodeKind::Root),
            "leaf" => Ok(NodeKind::Leaf),
            "intermediate" => Ok(NodeKind::Intermediate),
            other => Err(format!("unknown node kind '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridEdge {
    pub u: NodeId,
    pub v: NodeId,
    pub z: LineImpedance,
    pub operational: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridFile {
    kinds: Vec<NodeKind>,
    edges: Vec<GridEdge>,
    stats: BTreeMap<NodeId, NodeStats>,
}

impl GridFile {
    /// Canonicalizes edge order and endpoint order.
    pub fn new(kinds: Vec<NodeKind>, edges: Vec<GridEdge>, stats: BTreeMap<NodeId, NodeStats>) -> Result<Self> {
        if kinds.first() != Some(&NodeKind::Root) {
            return Err(Error::Config("node 0 must be the root".into()));
        }
        if let Some(i) = kinds.iter().skip(1).position(|k| *k == NodeKind::Root) {
            return Err(Error::Config(format!("node {} is a second root", i + 1)));
        }
        let mut edges: Vec<GridEdge> = edges
            .into_iter()
            .map(|e| {
                let (u, v) = edge_key(e.u, e.v);
                GridEdge { u, v, ..e }
            })
            .collect();
        edges.sort_by_key(|e| (e.u, e.v));
        let file = Self { kinds, edges, stats };
        // surfaces self-loops, duplicates and unknown nodes
        file.graph()?;
        for (v, s) in &file.stats {
            if v.0 >= file.kinds.len() {
                return Err(Error::UnknownNode(*v));
            }
            if !s.is_psd() {
                return Err(Error::NonPsdStats(*v));
            }
        }
        Ok(file)
    }

    pub fn node_count(&self) -> usize {
        self.kinds.len()
    }

    pub fn kinds(&self) -> &[NodeKind] {
        &self.kinds
    }

    pub fn edges(&self) -> &[GridEdge] {
        &self.edges
    }

    pub fn stats(&self) -> &BTreeMap<NodeId, NodeStats> {
        &self.stats
    }

    fn nodes_of(&self, kind: NodeKind) -> BTreeSet<NodeId> {
        self.kinds
            .iter()
            .enumerate()
            .filter(|(_, k)| **k == kind)
            .map(|(i, _)| NodeId(i))
            .collect()
    }

    pub fn leaves(&self) -> BTreeSet<NodeId> {
        self.nodes_of(NodeKind::Leaf)
    }

    pub fn missing(&self) -> BTreeSet<NodeId> {
        self.nodes_of(NodeKind::Intermediate)
    }

    /// All candidate lines, operational or not.
    pub fn graph(&self) -> Result<CandidateGraph> {
        let mut g = CandidateGraph::new(self.node_count());
        for e in &self.edges {
            g.add_edge(e.u, e.v, e.z)?;
        }
        Ok(g)
    }

    pub fn operational_edges(&self) -> Vec<EdgeKey> {
        self.edges
            .iter()
            .filter(|e| e.operational)
            .map(|e| (e.u, e.v))
            .collect()
    }

    /// The operational tree, checked against every identifiability rule.
    pub fn tree(&self) -> Result<RadialTree> {
        validate_tree(&self.graph()?, &self.operational_edges(), &self.leaves())
    }

    /// Per-node statistics; nodes without a stats line get zeros.
    pub fn injection_stats(&self) -> Result<InjectionStats> {
        let mut v = vec![NodeStats::default(); self.node_count()];
        for (id, s) in &self.stats {
            v[id.0] = *s;
        }
        InjectionStats::new(v)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("# leafgrid grid v1\n");
        let _ = writeln!(out, "nodes {}", self.kinds.len());
        for (i, k) in self.kinds.iter().enumerate() {
            let _ = writeln!(out, "{i} {}", k.name());
        }
        let _ = writeln!(out, "edges {}", self.edges.len());
        for e in &self.edges {
            let _ = writeln!(out, "{} {} {} {} {}", e.u, e.v, e.z.r, e.z.x, u8::from(e.operational));
        }
        let _ = writeln!(out, "stats {}", self.stats.len());
        for (id, s) in &self.stats {
            let _ = writeln!(
                out,
                "{id} {} {} {} {} {}",
                s.var_p, s.var_q, s.cov_pq, s.mean_p, s.mean_q
            );
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

        let mut section = |name: &str| -> Result<(usize, Vec<Row>)> {
            let (ln, header) = lines.next().ok_or_else(|| Error::Parse {
                line: 0,
                msg: format!("missing '{name}' section"),
            })?;
            let mut parts = header.split_whitespace();
            if parts.next() != Some(name) {
                return Err(Error::Parse {
                    line: ln,
                    msg: format!("expected '{name} <count>', got '{header}'"),
                });
            }
            let count: usize = parse_field(parts.next(), ln, "count")?;
            let mut rows = Vec::with_capacity(count);
            for _ in 0..count {
                let (l, body) = lines.next().ok_or_else(|| Error::Parse {
                    line: ln,
                    msg: format!("section '{name}' ends early"),
                })?;
                rows.push((l, body.split_whitespace().map(str::to_string).collect()));
            }
            Ok((ln, rows))
        };

        let (_, node_rows) = section("nodes")?;
        let mut kinds = Vec::with_capacity(node_rows.len());
        for (i, (ln, f)) in node_rows.iter().enumerate() {
            expect_fields(f, 2, *ln)?;
            let id: usize = parse_field(Some(&f[0]), *ln, "node id")?;
            if id != i {
                return Err(Error::Parse {
                    line: *ln,
                    msg: format!("node ids must be dense and ordered; expected {i}, got {id}"),
                });
            }
            kinds.push(f[1].parse().map_err(|msg| Error::Parse { line: *ln, msg })?);
        }

        let (_, edge_rows) = section("edges")?;
        let mut edges = Vec::with_capacity(edge_rows.len());
        for (ln, f) in &edge_rows {
            expect_fields(f, 5, *ln)?;
            let u = NodeId(parse_field(Some(&f[0]), *ln, "u")?);
            let v = NodeId(parse_field(Some(&f[1]), *ln, "v")?);
            let r: f64 = parse_field(Some(&f[2]), *ln, "r")?;
            let x: f64 = parse_field(Some(&f[3]), *ln, "x")?;
            let op: u8 = parse_field(Some(&f[4]), *ln, "operational flag")?;
            if op > 1 {
                return Err(Error::Parse {
                    line: *ln,
                    msg: "operational flag must be 0 or 1".into(),
                });
            }
            let z = LineImpedance::new(r, x).map_err(|e| Error::Parse {
                line: *ln,
                msg: e.to_string(),
            })?;
            edges.push(GridEdge { u, v, z, operational: op == 1 });
        }

        let (_, stat_rows) = section("stats")?;
        let mut stats = BTreeMap::new();
        for (ln, f) in &stat_rows {
            expect_fields(f, 6, *ln)?;
            let id = NodeId(parse_field(Some(&f[0]), *ln, "node id")?);
            let mut vals = [0.0; 5];
            for (k, val) in vals.iter_mut().enumerate() {
                *val = parse_field(Some(&f[k + 1]), *ln, "statistic")?;
            }
            let s = NodeStats {
                var_p: vals[0],
                var_q: vals[1],
                cov_pq: vals[2],
                mean_p: vals[3],
                mean_q: vals[4],
            };
            if stats.insert(id, s).is_some() {
                return Err(Error::Parse {
                    line: *ln,
                    msg: format!("duplicate stats for node {id}"),
                });
            }
        }
        if let Some((ln, l)) = lines.next() {
            return Err(Error::Parse {
                line: ln,
                msg: format!("unexpected trailing content '{l}'"),
            });
        }
        Self::new(kinds, edges, stats)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}

fn expect_fields(f: &[String], n: usize, line: usize) -> Result<()> {
    if f.len() == n {
        Ok(())
    } else {
        Err(Error::Parse {
            line,
            msg: format!("expected {n} fields, got {}", f.len()),
        })
    }
}

fn parse_field<T: FromStr, S: AsRef<str>>(s: Option<S>, line: usize, what: &str) -> Result<T> {
    s.and_then(|s| s.as_ref().parse().ok()).ok_or_else(|| Error::Parse {
        line,
        msg: format!("bad {what}"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const STAR: &str = "\
nodes 4
0 root
1 intermediate
2 leaf
3 leaf
edges 4
0 1 0.02 0.05 1
1 2 0.03 0.01 1
2 3 0.05 0.05 0
1 3 0.04 0.02 1
stats 2
2 0.8 0.5 0.1 -0.4 -0.2
3 1.1 0.7 0 -0.6 -0.1
";

    #[test]
    fn parse_and_canonicalize() {
        let g = GridFile::parse(STAR).unwrap();
        assert_eq!(g.node_count(), 4);
        assert_eq!(g.leaves(), [NodeId(2), NodeId(3)].into());
        let t = g.tree().unwrap();
        assert_eq!(t.edges().len(), 3);
        let text = g.to_text();
        assert!(text.contains("edges 4\n0 1 0.02 0.05 1\n1 2 0.03 0.01 1\n1 3 0.04 0.02 1\n2 3 0.05 0.05 0\n"));
        assert_eq!(GridFile::parse(&text).unwrap().to_text(), text);
    }

    #[test]
    fn parse_errors_name_the_line() {
        let bad = STAR.replace("1 2 0.03 0.01 1", "1 2 -0.03 0.01 1");
        match GridFile::parse(&bad) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 8),
            other => panic!("{other:?}"),
        }
        let dup = STAR.replace("2 3 0.05 0.05 0", "2 1 0.05 0.05 0");
        assert!(matches!(GridFile::parse(&dup), Err(Error::DuplicateEdge(..))));
        let two_roots = STAR.replace("1 intermediate", "1 root");
        assert!(GridFile::parse(&two_roots).is_err());
    }
}
