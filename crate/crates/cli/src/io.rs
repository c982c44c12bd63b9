use std::collections::BTreeSet;
use std::path::Path;
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use clairvoyant::variants::{ColoredGraph, DirectedGraph};
use clairvoyant::walk::parse_walk;
use clairvoyant::{Graph, Walk};
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const GRAPH_FORMAT: &str = "clairvoyant-graph/1";
pub const REPORT_FORMAT: &str = "clairvoyant-report/1";

/// On-disk graph document. `edges` holds undirected edges; the directed
/// variant adds `one_way` (ordered tail, head) and `two_way`, the colored
/// variant adds `red` and `blue`. The underlying simple graph is the union
/// of every listed edge.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphFile {
    pub format: String,
    pub vertices: Vec<String>,
    #[serde(default)]
    pub edges: Vec<(String, String)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub one_way: Option<Vec<(String, String)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub two_way: Option<Vec<(String, String)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub red: Option<Vec<(String, String)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blue: Option<Vec<(String, String)>>,
}

pub struct LoadedGraph {
    pub file: GraphFile,
    pub graph: Arc<Graph>,
}

fn resolve(graph: &Graph, field: &str, list: &[(String, String)]) -> Result<Vec<(usize, usize)>> {
    list.iter()
        .enumerate()
        .map(|(k, (a, b))| {
            let a = graph.vertex(a).map_err(|e| anyhow!("{field}[{k}]: {e}"))?;
            let b = graph.vertex(b).map_err(|e| anyhow!("{field}[{k}]: {e}"))?;
            Ok((a, b))
        })
        .collect()
}

impl GraphFile {
    pub fn parse(text: &str) -> Result<LoadedGraph> {
        let file: GraphFile = serde_json::from_str(text)?;
        if file.format != GRAPH_FORMAT {
            bail!("format: expected `{GRAPH_FORMAT}`, found `{}`", file.format);
        }
        let mut names = BTreeSet::new();
        for (k, v) in file.vertices.iter().enumerate() {
            if !names.insert(v.as_str()) {
                bail!("vertices[{k}]: duplicate vertex `{v}`");
            }
        }
        let mut seen = BTreeSet::new();
        let mut union = Vec::new();
        for (field, list) in file.lists() {
            for (k, (a, b)) in list.iter().enumerate() {
                for x in [a, b] {
                    if !names.contains(x.as_str()) {
                        bail!("{field}[{k}]: unknown vertex `{x}`");
                    }
                }
                if a == b {
                    bail!("{field}[{k}]: self-loop at `{a}`");
                }
                let key = if a < b { (a, b) } else { (b, a) };
                if seen.insert(key) {
                    union.push((a.as_str(), b.as_str()));
                }
            }
        }
        let vs: Vec<&str> = file.vertices.iter().map(String::as_str).collect();
        let graph = Graph::new(&vs, &union).context("graph")?;
        graph.require_connected().context("graph")?;
        Ok(LoadedGraph {
            file,
            graph: Arc::new(graph),
        })
    }

    pub fn load(path: &Path) -> Result<LoadedGraph> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("{}", path.display()))
    }

    fn lists(&self) -> Vec<(&'static str, &[(String, String)])> {
        let mut out: Vec<(&'static str, &[(String, String)])> = vec![("edges", &self.edges)];
        for (name, l) in [
            ("one_way", &self.one_way),
            ("two_way", &self.two_way),
            ("red", &self.red),
            ("blue", &self.blue),
        ] {
            if let Some(l) = l {
                out.push((name, l));
            }
        }
        out
    }

    pub fn from_graph(g: &Graph) -> Self {
        GraphFile {
            format: GRAPH_FORMAT.into(),
            vertices: g.names().to_vec(),
            edges: g
                .edges()
                .map(|(a, b)| (g.name(a).to_string(), g.name(b).to_string()))
                .collect(),
            ..Default::default()
        }
    }
}

impl LoadedGraph {
    /// Directed view. Without `two_way`, every plain edge that is not
    /// listed as one-way counts as two-way.
    pub fn directed(&self) -> Result<DirectedGraph> {
        let g = &self.graph;
        let one_way = self
            .file
            .one_way
            .as_deref()
            .ok_or_else(|| anyhow!("graph file has no `one_way` field"))?;
        let one = resolve(g, "one_way", one_way)?;
        let two = match &self.file.two_way {
            Some(t) => resolve(g, "two_way", t)?,
            None => {
                let used: BTreeSet<(usize, usize)> = one.iter().map(|&(a, b)| (a.min(b), a.max(b))).collect();
                g.edges().filter(|e| !used.contains(e)).collect()
            }
        };
        Ok(DirectedGraph::new(g.clone(), &one, &two)?)
    }

    pub fn colored(&self) -> Result<ColoredGraph> {
        let g = &self.graph;
        let red = self.file.red.as_deref().ok_or_else(|| anyhow!("graph file has no `red` field"))?;
        let blue = self.file.blue.as_deref().ok_or_else(|| anyhow!("graph file has no `blue` field"))?;
        Ok(ColoredGraph::new(g.clone(), &resolve(g, "red", red)?, &resolve(g, "blue", blue)?)?)
    }

    pub fn summary(&self) -> Value {
        let mut v = serde_json::json!({
            "vertices": self.graph.len(),
            "edges": self.graph.edge_count(),
        });
        for (name, l) in self.file.lists().into_iter().skip(1) {
            v[name] = l.len().into();
        }
        v
    }
}

pub fn load_walk(graph: &Arc<Graph>, path: &Path) -> Result<Walk> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_walk(graph, &text).with_context(|| format!("{}", path.display()))
}

/// Walk text: names separated by whitespace, one line per 32 vertices.
pub fn write_walk(walk: &Walk, path: &Path) -> Result<()> {
    let mut text = String::new();
    for chunk in walk.names().chunks(32) {
        text.push_str(&chunk.join(" "));
        text.push('\n');
    }
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub format: &'static str,
    pub tool_version: &'static str,
    pub command: String,
    #[serde(skip_serializing_if = "Value::is_null")]
    pub graph: Value,
    pub parameters: Value,
    pub result: Value,
}

impl Report {
    pub fn new(command: &str, graph: Value, parameters: Value, result: Value) -> Self {
        Report {
            format: REPORT_FORMAT,
            tool_version: env!("CARGO_PKG_VERSION"),
            command: command.into(),
            graph,
            parameters,
            result,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn position_in_errors() {
        let text = r#"{"format":"clairvoyant-graph/1","vertices":["A","B"],"edges":[["A","B"],["A","C"]]}"#;
        let err = GraphFile::parse(text).err().unwrap().to_string();
        assert!(err.contains("edges[1]"), "{err}");

        let err = GraphFile::parse("{\"format\": 3}").err().unwrap().to_string();
        assert!(err.contains("line 1"), "{err}");
    }

    #[test]
    fn directed_defaults_two_way() {
        let text = r#"{"format":"clairvoyant-graph/1","vertices":["A","B","C"],
            "edges":[["A","B"],["B","C"]],"one_way":[["A","C"]]}"#;
        let g = GraphFile::parse(text).unwrap();
        let d = g.directed().unwrap();
        assert_eq!(d.two_way().len(), 2);
        assert_eq!(d.one_way(), &[(0, 2)]);
    }

    #[test]
    fn graph_round_trip() {
        let g = clairvoyant::graph::families::complete(4);
        let text = serde_json::to_string(&GraphFile::from_graph(&g)).unwrap();
        let back = GraphFile::parse(&text).unwrap();
        assert_eq!(*back.graph, g);
    }
}
