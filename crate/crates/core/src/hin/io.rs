//! Flat-file ingestion and export.
//!
//! Four CSV tables, each with a header row:
//!
//! * nodes: `id,type,timestamp` (timestamp blank or integer epoch-days)
//! * attributes: `id,attr_name,attr_value`
//! * edges: `id,src,dst,relation,timestamp`
//! * labels: `id,risky` with `risky` in `{0,1}`

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;
use std::sync::Arc;

use super::graph::{Hin, HinBuilder, RiskLabel};
use super::schema::{ObjectTypeId, Schema};
use super::{HinError, Location};

pub const DEFAULT_QUANTILE_BINS: usize = 5;

#[derive(Debug, Clone)]
pub struct NamedText {
    pub name: String,
    pub text: String,
}

impl NamedText {
    pub fn new(name: impl Into<String>, text: impl Into<String>) -> Self {
        NamedText {
            name: name.into(),
            text: text.into(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct HinSources {
    pub nodes: NamedText,
    pub attributes: Option<NamedText>,
    pub edges: NamedText,
    pub labels: Option<NamedText>,
}

impl HinSources {
    pub const NODES: &'static str = "nodes.csv";
    pub const ATTRIBUTES: &'static str = "attributes.csv";
    pub const EDGES: &'static str = "edges.csv";
    pub const LABELS: &'static str = "labels.csv";

    /// Reads the four tables from a directory; attributes and labels are optional.
    pub fn from_dir(dir: &Path) -> Result<Self, HinError> {
        let read = |name: &str, required: bool| -> Result<Option<NamedText>, HinError> {
            let path = dir.join(name);
            match fs::read_to_string(&path) {
                Ok(text) => Ok(Some(NamedText::new(path.display().to_string(), text))),
                Err(e) if !required && e.kind() == std::io::ErrorKind::NotFound => Ok(None),
                Err(e) => Err(HinError::Io {
                    path: path.display().to_string(),
                    message: e.to_string(),
                }),
            }
        };
        Ok(HinSources {
            nodes: read(Self::NODES, true)?.expect("required"),
            attributes: read(Self::ATTRIBUTES, false)?,
            edges: read(Self::EDGES, true)?.expect("required"),
            labels: read(Self::LABELS, false)?,
        })
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LoadOptions {
    /// Numeric attributes are replaced by `q0..q{bins-1}` quantile levels.
    pub quantile_bins: Option<usize>,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            quantile_bins: Some(DEFAULT_QUANTILE_BINS),
        }
    }
}

struct Table<'a> {
    name: &'a str,
    columns: Vec<String>,
    rows: Vec<(u64, csv::StringRecord)>,
}

impl<'a> Table<'a> {
    fn parse(src: &'a NamedText, required: &[&str]) -> Result<Self, HinError> {
        let mut columns = Vec::new();
        let mut rows = Vec::new();
        if !src.text.trim().is_empty() {
            let mut reader = csv::ReaderBuilder::new()
                .has_headers(true)
                .trim(csv::Trim::All)
                .from_reader(src.text.as_bytes());
            let headers = reader.headers().map_err(|e| csv_error(&src.name, e))?;
            columns = headers.iter().map(str::to_string).collect();
            for rec in reader.records() {
                let rec = rec.map_err(|e| csv_error(&src.name, e))?;
                let line = rec.position().map_or(0, |p| p.line());
                rows.push((line, rec));
            }
        }
        let table = Table {
            name: &src.name,
            columns,
            rows,
        };
        if !table.rows.is_empty() || !table.columns.is_empty() {
            for col in required {
                if !table.columns.iter().any(|c| c == col) {
                    return Err(HinError::Parse {
                        location: Some(Location {
                            file: src.name.clone(),
                            line: 1,
                            column: (*col).to_string(),
                        }),
                        value: String::new(),
                        reason: "missing required column".into(),
                    });
                }
            }
        }
        Ok(table)
    }

    fn col(&self, name: &str) -> usize {
        self.columns.iter().position(|c| c == name).expect("checked in parse")
    }

    fn loc(&self, line: u64, column: &str) -> Location {
        Location {
            file: self.name.to_string(),
            line,
            column: column.to_string(),
        }
    }
}

fn csv_error(file: &str, e: csv::Error) -> HinError {
    let line = e.position().map_or(0, |p| p.line());
    HinError::Parse {
        location: Some(Location {
            file: file.to_string(),
            line,
            column: String::new(),
        }),
        value: String::new(),
        reason: e.to_string(),
    }
}

fn parse_timestamp(raw: &str, loc: impl FnOnce() -> Location) -> Result<Option<i64>, HinError> {
    if raw.is_empty() {
        return Ok(None);
    }
    raw.parse::<i64>().map(Some).map_err(|_| HinError::Parse {
        location: Some(loc()),
        value: raw.to_string(),
        reason: "timestamp must be an integer number of days".into(),
    })
}

/// Builds a fully indexed network from the CSV sources.
pub fn load_hin(schema: Schema, sources: &HinSources, options: LoadOptions) -> Result<Hin, HinError> {
    let mut builder = HinBuilder::new(Arc::new(schema));

    let nodes = Table::parse(&sources.nodes, &["id", "type", "timestamp"])?;
    if !nodes.rows.is_empty() {
        let (ci, ct, cts) = (nodes.col("id"), nodes.col("type"), nodes.col("timestamp"));
        for (line, rec) in &nodes.rows {
            let line = *line;
            let id = rec.get(ci).unwrap_or("");
            let otype = rec.get(ct).unwrap_or("");
            let ts = parse_timestamp(rec.get(cts).unwrap_or(""), || nodes.loc(line, "timestamp"))?;
            if id.is_empty() {
                return Err(HinError::Parse {
                    location: Some(nodes.loc(line, "id")),
                    value: String::new(),
                    reason: "empty id".into(),
                });
            }
            builder.add_node(id, otype, ts).map_err(|e| {
                let column = if matches!(e, HinError::UnknownType { .. }) { "type" } else { "id" };
                e.at(nodes.loc(line, column))
            })?;
        }
    }

    if let Some(src) = &sources.attributes {
        let attrs = Table::parse(src, &["id", "attr_name", "attr_value"])?;
        if !attrs.rows.is_empty() {
            let (ci, cn, cv) = (attrs.col("id"), attrs.col("attr_name"), attrs.col("attr_value"));
            for (line, rec) in &attrs.rows {
                let id = rec.get(ci).unwrap_or("");
                let node = builder.node_idx(id).ok_or_else(|| HinError::Parse {
                    location: Some(attrs.loc(*line, "id")),
                    value: id.to_string(),
                    reason: "attribute for unknown node".into(),
                })?;
                let name = rec.get(cn).unwrap_or("");
                if name.is_empty() {
                    return Err(HinError::Parse {
                        location: Some(attrs.loc(*line, "attr_name")),
                        value: String::new(),
                        reason: "empty attribute name".into(),
                    });
                }
                builder.set_attribute(node, name, rec.get(cv).unwrap_or(""));
            }
        }
    }

    let edges = Table::parse(&sources.edges, &["id", "src", "dst", "relation", "timestamp"])?;
    if !edges.rows.is_empty() {
        let (ci, cs, cd, cr, cts) = (
            edges.col("id"),
            edges.col("src"),
            edges.col("dst"),
            edges.col("relation"),
            edges.col("timestamp"),
        );
        for (line, rec) in &edges.rows {
            let line = *line;
            let id = rec.get(ci).unwrap_or("");
            let src = rec.get(cs).unwrap_or("");
            let dst = rec.get(cd).unwrap_or("");
            let relation = rec.get(cr).unwrap_or("");
            let ts = parse_timestamp(rec.get(cts).unwrap_or(""), || edges.loc(line, "timestamp"))?;
            builder.add_edge(id, src, dst, relation, ts).map_err(|e| {
                let column = match &e {
                    HinError::DanglingEdge { node, .. } if node == src => "src",
                    HinError::DanglingEdge { .. } => "dst",
                    HinError::DuplicateId { .. } => "id",
                    _ => "relation",
                };
                e.at(edges.loc(line, column))
            })?;
        }
    }

    if let Some(src) = &sources.labels {
        let labels = Table::parse(src, &["id", "risky"])?;
        if !labels.rows.is_empty() {
            let (ci, cr) = (labels.col("id"), labels.col("risky"));
            for (line, rec) in &labels.rows {
                let id = rec.get(ci).unwrap_or("");
                let node = builder.node_idx(id).ok_or_else(|| HinError::Parse {
                    location: Some(labels.loc(*line, "id")),
                    value: id.to_string(),
                    reason: "label for unknown node".into(),
                })?;
                let risky = match rec.get(cr).unwrap_or("") {
                    "0" => false,
                    "1" => true,
                    other => {
                        return Err(HinError::Parse {
                            location: Some(labels.loc(*line, "risky")),
                            value: other.to_string(),
                            reason: "expected 0 or 1".into(),
                        })
                    }
                };
                builder.set_label(node, Some(RiskLabel::observed(risky)));
            }
        }
    }

    let hin = builder.build();
    Ok(match options.quantile_bins {
        Some(bins) => discretize_numeric_attributes(&hin, bins),
        None => hin,
    })
}

/// Replaces every attribute whose values are all numeric (per object type)
/// with quantile levels `q0..q{bins-1}`. Categorical attributes are untouched.
pub fn discretize_numeric_attributes(hin: &Hin, bins: usize) -> Hin {
    let bins = bins.max(1);
    let mut values: HashMap<(ObjectTypeId, &str), Vec<f64>> = HashMap::new();
    let mut categorical: HashMap<(ObjectTypeId, &str), bool> = HashMap::new();
    for node in hin.nodes() {
        for (name, value) in &node.attributes {
            let key = (node.otype, name.as_str());
            match value.parse::<f64>() {
                Ok(v) if v.is_finite() => values.entry(key).or_default().push(v),
                _ => {
                    categorical.insert(key, true);
                }
            }
        }
    }
    let mut cuts: HashMap<(ObjectTypeId, &str), Vec<f64>> = HashMap::new();
    for (key, mut vals) in values {
        if categorical.contains_key(&key) {
            continue;
        }
        vals.sort_by(f64::total_cmp);
        let n = vals.len();
        let thresholds = (1..bins).map(|k| vals[(k * n / bins).min(n - 1)]).collect();
        cuts.insert(key, thresholds);
    }
    let attrs: Vec<BTreeMap<String, String>> = hin
        .nodes()
        .iter()
        .map(|node| {
            node.attributes
                .iter()
                .map(|(name, value)| match cuts.get(&(node.otype, name.as_str())) {
                    Some(thresholds) => {
                        let v: f64 = value.parse().expect("numeric by construction");
                        let level = thresholds.iter().filter(|&&t| t <= v).count();
                        (name.clone(), format!("q{level}"))
                    }
                    None => (name.clone(), value.clone()),
                })
                .collect()
        })
        .collect();
    hin.with_attributes(attrs)
}

/// Writes the network as the four CSV tables. Only observed labels are written.
pub fn write_hin(hin: &Hin, dir: &Path) -> Result<(), HinError> {
    let io_err = |path: &Path, e: std::io::Error| HinError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    };
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let schema = hin.schema();
    let ts = |t: Option<i64>| t.map(|v| v.to_string()).unwrap_or_default();

    let mut nodes = String::from("id,type,timestamp\n");
    let mut attrs = String::from("id,attr_name,attr_value\n");
    let mut labels = String::from("id,risky\n");
    for node in hin.nodes() {
        nodes.push_str(&format!("{},{},{}\n", node.id, schema.object(node.otype).name, ts(node.timestamp)));
        for (k, v) in &node.attributes {
            attrs.push_str(&format!("{},{},{}\n", node.id, k, v));
        }
        if let Some(risky) = node.observed_label() {
            labels.push_str(&format!("{},{}\n", node.id, u8::from(risky)));
        }
    }
    let mut edges = String::from("id,src,dst,relation,timestamp\n");
    for e in hin.edges() {
        edges.push_str(&format!(
            "{},{},{},{},{}\n",
            e.id,
            hin.node(e.src).id,
            hin.node(e.dst).id,
            schema.relation(e.rtype).name,
            ts(e.timestamp)
        ));
    }
    for (name, body) in [
        (HinSources::NODES, nodes),
        (HinSources::ATTRIBUTES, attrs),
        (HinSources::EDGES, edges),
        (HinSources::LABELS, labels),
    ] {
        let path = dir.join(name);
        fs::write(&path, body).map_err(|e| io_err(&path, e))?;
    }
    Ok(())
}
