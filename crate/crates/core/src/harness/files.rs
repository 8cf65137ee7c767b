//! Sample matrices (CSV) and learned topology files.

use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{edge_key, NodeId};
use crate::learner::{EdgeProvenance, LearnedTopology, Stage, TopologyStatus};
use crate::powerflow::SampleMatrix;

/// Header of node ids, then one row per observation.
pub fn write_samples<W: Write>(samples: &SampleMatrix, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(samples.observed().iter().map(|v| v.to_string()))?;
    for i in 0..samples.rows() {
        w.write_record(samples.row(i).iter().map(|x| x.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_samples<R: Read>(input: R) -> Result<SampleMatrix> {
    let mut r = csv::Reader::from_reader(input);
    let observed = r
        .headers()?
        .iter()
        .map(|h| {
            h.trim().parse().map(NodeId).map_err(|_| Error::Parse {
                line: 1,
                msg: format!("bad node id '{h}' in header"),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut values = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        if rec.len() != observed.len() {
            return Err(Error::Parse {
                line: i + 2,
                msg: format!("expected {} columns, got {}", observed.len(), rec.len()),
            });
        }
        for f in rec.iter() {
            values.push(f.trim().parse().map_err(|_| Error::Parse {
                line: i + 2,
                msg: format!("bad value '{f}'"),
            })?);
        }
    }
    SampleMatrix::new(observed, values)
}

pub fn write_samples_file(samples: &SampleMatrix, path: &Path) -> Result<()> {
    write_samples(samples, std::fs::File::create(path)?)
}

pub fn read_samples_file(path: &Path) -> Result<SampleMatrix> {
    read_samples(std::fs::File::open(path)?)
}

/// ```text
/// # leafgrid topology v1
/// status complete
/// nodes 21
/// edges 20
/// 0 7 root-join 0
/// 3 7 leaf-pair 1.2e-17
/// ...
/// diag <free text>
/// ```
pub fn topology_to_text(t: &LearnedTopology) -> String {
    let mut out = String::from("# leafgrid topology v1\n");
    let _ = writeln!(out, "status {}", t.status);
    let _ = writeln!(out, "nodes {}", t.node_count);
    let _ = writeln!(out, "edges {}", t.edges.len());
    for ((u, v), p) in &t.edges {
        let _ = writeln!(out, "{u} {v} {} {:e}", p.stage.name(), p.residual);
    }
    for d in &t.diagnostics {
        let _ = writeln!(out, "diag {d}");
    }
    out
}

pub fn topology_from_text(text: &str) -> Result<LearnedTopology> {
    let bad = |line: usize, msg: &str| Error::Parse {
        line,
        msg: msg.to_string(),
    };
    let mut status = None;
    let mut node_count = None;
    let mut expected_edges = None;
    let mut edges = std::collections::BTreeMap::new();
    let mut diagnostics = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let ln = i + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(d) = line.strip_prefix("diag ") {
            diagnostics.push(d.to_string());
            continue;
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        match f.as_slice() {
            ["status", "complete"] => status = Some(TopologyStatus::Complete),
            ["status", "partial"] => status = Some(TopologyStatus::Partial),
            ["nodes", n] => node_count = Some(n.parse().map_err(|_| bad(ln, "bad node count"))?),
            ["edges", n] => expected_edges = Some(n.parse::<usize>().map_err(|_| bad(ln, "bad edge count"))?),
            [u, v, stage, res] => {
                let u = NodeId(u.parse().map_err(|_| bad(ln, "bad node id"))?);
                let v = NodeId(v.parse().map_err(|_| bad(ln, "bad node id"))?);
                let stage: Stage = stage.parse().map_err(|_| bad(ln, "bad stage"))?;
                let residual: f64 = res.parse().map_err(|_| bad(ln, "bad residual"))?;
                edges.insert(edge_key(u, v), EdgeProvenance { stage, residual });
            }
            _ => return Err(bad(ln, "unrecognized line")),
        }
    }
    if expected_edges != Some(edges.len()) {
        return Err(bad(0, "edge count does not match the edge lines"));
    }
    Ok(LearnedTopology {
        node_count: node_count.ok_or_else(|| bad(0, "missing node count"))?,
        edges,
        status: status.ok_or_else(|| bad(0, "missing status"))?,
        diagnostics,
    })
}
