//! Model and dataset serialization: models as JSON documents with weights
//! stored as 17-significant-digit decimal strings (bit-exact round trips),
//! datasets as JSON Lines.

use dsfkit::concave::{ConcaveUnit, UnitKind};
use dsfkit::dsf::{DsfModel, DsfNode};
use dsfkit::error::{DsfError, Result};
use dsfkit::learn::Dataset;
use dsfkit::set::{GroundSet, Subset};
use serde::{Deserialize, Serialize};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::Arc;

/// Encodes an f64 as a decimal string with 17 significant digits — enough to
/// reparse bit-identically.
pub fn encode_weight(w: f64) -> String {
    format!("{:.16e}", w)
}

/// Parses a weight string written by [`encode_weight`] (or any decimal).
pub fn decode_weight(s: &str) -> Result<f64> {
    s.parse::<f64>().map_err(|_| DsfError::Io(format!("malformed weight '{s}'")))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct UnitFile {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub params: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub breakpoints: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slopes: Option<Vec<String>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ParentFile {
    /// Internal edge source (node id) — exactly one of `node`/`element` is set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub node: Option<usize>,
    /// Ground edge source (element label).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub element: Option<String>,
    pub weight: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NodeFile {
    pub id: usize,
    pub unit: UnitFile,
    pub parents: Vec<ParentFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layer: Option<usize>,
}

/// On-disk model document.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModelFile {
    pub ground: Vec<String>,
    pub nodes: Vec<NodeFile>,
    pub root: usize,
    pub final_modular: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frozen: Option<Vec<usize>>,
}

fn encode_unit(u: &ConcaveUnit<f64>) -> UnitFile {
    let (kind, params, breakpoints, slopes) = match u.kind() {
        UnitKind::Identity => ("identity", vec![], None, None),
        UnitKind::Sqrt => ("sqrt", vec![], None, None),
        UnitKind::Power { exponent } => ("power", vec![*exponent], None, None),
        UnitKind::LogGamma { gamma } => ("log_gamma", vec![*gamma], None, None),
        UnitKind::Truncate { gamma } => ("truncate", vec![*gamma], None, None),
        UnitKind::OneMinusExp => ("one_minus_exp", vec![], None, None),
        UnitKind::ShiftedSigmoid => ("shifted_sigmoid", vec![], None, None),
        UnitKind::SoftMin { a, c } => ("soft_min", vec![*a, *c], None, None),
        UnitKind::LinThenSqrt { gamma } => ("lin_then_sqrt", vec![*gamma], None, None),
        UnitKind::PiecewiseLinear { breakpoints, slopes } => {
            ("piecewise_linear", vec![], Some(breakpoints.clone()), Some(slopes.clone()))
        }
    };
    UnitFile {
        kind: kind.to_string(),
        params: params.iter().map(|&p| encode_weight(p)).collect(),
        breakpoints: breakpoints.map(|b| b.iter().map(|&x| encode_weight(x)).collect()),
        slopes: slopes.map(|s| s.iter().map(|&x| encode_weight(x)).collect()),
    }
}

fn decode_unit(u: &UnitFile) -> Result<ConcaveUnit<f64>> {
    let params: Vec<f64> = u.params.iter().map(|s| decode_weight(s)).collect::<Result<_>>()?;
    let need = |n: usize| -> Result<()> {
        if params.len() != n {
            return Err(DsfError::Io(format!("unit '{}' expects {n} params, got {}", u.kind, params.len())));
        }
        Ok(())
    };
    let kind = match u.kind.as_str() {
        "identity" => UnitKind::Identity,
        "sqrt" => UnitKind::Sqrt,
        "power" => {
            need(1)?;
            UnitKind::Power { exponent: params[0] }
        }
        "log_gamma" => {
            need(1)?;
            UnitKind::LogGamma { gamma: params[0] }
        }
        "truncate" => {
            need(1)?;
            UnitKind::Truncate { gamma: params[0] }
        }
        "one_minus_exp" => UnitKind::OneMinusExp,
        "shifted_sigmoid" => UnitKind::ShiftedSigmoid,
        "soft_min" => {
            need(2)?;
            UnitKind::SoftMin { a: params[0], c: params[1] }
        }
        "lin_then_sqrt" => {
            need(1)?;
            UnitKind::LinThenSqrt { gamma: params[0] }
        }
        "piecewise_linear" => {
            let bp = u.breakpoints.as_ref().ok_or_else(|| DsfError::Io("missing breakpoints".into()))?;
            let sl = u.slopes.as_ref().ok_or_else(|| DsfError::Io("missing slopes".into()))?;
            UnitKind::PiecewiseLinear {
                breakpoints: bp.iter().map(|s| decode_weight(s)).collect::<Result<_>>()?,
                slopes: sl.iter().map(|s| decode_weight(s)).collect::<Result<_>>()?,
            }
        }
        other => return Err(DsfError::Io(format!("unknown unit kind '{other}'"))),
    };
    ConcaveUnit::new(kind)
}

impl ModelFile {
    /// Captures a model into its file form.
    pub fn from_model(f: &DsfModel<f64>) -> ModelFile {
        let ground = f.ground();
        let nodes = f
            .nodes()
            .iter()
            .enumerate()
            .map(|(id, node)| {
                let mut parents = Vec::new();
                for &(u, w) in &node.parents_internal {
                    parents.push(ParentFile { node: Some(u), element: None, weight: encode_weight(w) });
                }
                for &(e, w) in &node.parents_ground {
                    parents.push(ParentFile {
                        node: None,
                        element: Some(ground.label(e).to_string()),
                        weight: encode_weight(w),
                    });
                }
                NodeFile { id, unit: encode_unit(&node.unit), parents, layer: node.layer }
            })
            .collect();
        let frozen: Vec<usize> = f.frozen_nodes().iter().copied().collect();
        ModelFile {
            ground: ground.labels().to_vec(),
            nodes,
            root: f.root(),
            final_modular: f.final_modular().iter().map(|&m| encode_weight(m)).collect(),
            frozen: if frozen.is_empty() { None } else { Some(frozen) },
        }
    }

    /// Rebuilds the model; fails when the document violates the schema or the
    /// resulting model does not pass structural validation.
    pub fn to_model(&self) -> Result<DsfModel<f64>> {
        let ground = GroundSet::new(self.ground.iter().cloned())?;
        let mut nodes = Vec::with_capacity(self.nodes.len());
        for (i, nf) in self.nodes.iter().enumerate() {
            if nf.id != i {
                return Err(DsfError::Io(format!("node ids must be 0..n in order; found {} at {i}", nf.id)));
            }
            let unit = decode_unit(&nf.unit)?;
            let mut parents_internal = Vec::new();
            let mut parents_ground = Vec::new();
            for p in &nf.parents {
                let w = decode_weight(&p.weight)?;
                match (&p.node, &p.element) {
                    (Some(u), None) => parents_internal.push((*u, w)),
                    (None, Some(label)) => {
                        let e = ground
                            .id_of(label)
                            .ok_or_else(|| DsfError::Io(format!("unknown element label '{label}'")))?;
                        parents_ground.push((e, w));
                    }
                    _ => return Err(DsfError::Io("parent needs exactly one of node/element".into())),
                }
            }
            let mut node = DsfNode::inner(unit, parents_internal);
            node.parents_ground = parents_ground;
            if let Some(l) = nf.layer {
                node = node.at_layer(l);
            }
            nodes.push(node);
        }
        let final_modular: Vec<f64> =
            self.final_modular.iter().map(|s| decode_weight(s)).collect::<Result<_>>()?;
        let mut model = DsfModel::new(&ground, nodes, self.root, final_modular)?;
        if let Some(frozen) = &self.frozen {
            model.freeze_nodes(frozen.iter().copied());
        }
        let report = model.validate();
        if !report.pass {
            return Err(DsfError::InvalidModel(report.failures.join("; ")));
        }
        Ok(model)
    }
}

/// Writes a model as pretty-printed JSON.
pub fn save_model(f: &DsfModel<f64>, path: &Path) -> Result<()> {
    let doc = ModelFile::from_model(f);
    let json = serde_json::to_string_pretty(&doc).map_err(|e| DsfError::Io(e.to_string()))?;
    std::fs::write(path, json + "\n").map_err(|e| DsfError::Io(e.to_string()))
}

/// Loads a model JSON file.
pub fn load_model(path: &Path) -> Result<DsfModel<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| DsfError::Io(format!("{}: {e}", path.display())))?;
    let doc: ModelFile = serde_json::from_str(&text).map_err(|e| DsfError::Io(e.to_string()))?;
    doc.to_model()
}

/// Save-then-load helper (spec-level round-trip operation).
pub fn save_load_roundtrip(f: &DsfModel<f64>, path: &Path) -> Result<DsfModel<f64>> {
    save_model(f, path)?;
    load_model(path)
}

/// One JSON Lines record of a dataset file.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DatasetRecord {
    /// Element labels of the subset.
    pub set: Vec<String>,
    /// Target value; absent for summary records.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
}

/// Writes a dataset as JSON Lines; regression targets included when present.
pub fn save_dataset(data: &Dataset, with_values: bool, path: &Path) -> Result<()> {
    let mut out = Vec::new();
    for (s, y) in data.samples() {
        let rec = DatasetRecord {
            set: s.label_vec().iter().map(|l| l.to_string()).collect(),
            value: if with_values { Some(*y) } else { None },
        };
        let line = serde_json::to_string(&rec).map_err(|e| DsfError::Io(e.to_string()))?;
        out.write_all(line.as_bytes()).and_then(|_| out.write_all(b"\n")).map_err(|e| DsfError::Io(e.to_string()))?;
    }
    std::fs::write(path, out).map_err(|e| DsfError::Io(e.to_string()))
}

fn read_records(path: &Path) -> Result<Vec<DatasetRecord>> {
    let file = std::fs::File::open(path).map_err(|e| DsfError::Io(format!("{}: {e}", path.display())))?;
    let mut out = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| DsfError::Io(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| DsfError::Io(format!("bad record: {e}")))?);
    }
    Ok(out)
}

fn record_subset(ground: &Arc<GroundSet>, rec: &DatasetRecord) -> Result<Subset> {
    let labels: Vec<&str> = rec.set.iter().map(|s| s.as_str()).collect();
    Subset::from_labels(ground, &labels)
}

/// Loads a regression dataset (every record needs a value).
pub fn load_regression_dataset(ground: &Arc<GroundSet>, path: &Path) -> Result<Dataset> {
    let mut samples = Vec::new();
    for rec in read_records(path)? {
        let y = rec.value.ok_or_else(|| DsfError::Io("regression record without a value".into()))?;
        samples.push((record_subset(ground, &rec)?, y));
    }
    Dataset::regression(ground, samples)
}

/// Loads a summary dataset (values, if any, are ignored).
pub fn load_summary_dataset(ground: &Arc<GroundSet>, path: &Path) -> Result<Dataset> {
    let mut sets = Vec::new();
    for rec in read_records(path)? {
        sets.push(record_subset(ground, &rec)?);
    }
    Dataset::summaries(ground, sets)
}
