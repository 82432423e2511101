//! A feed-forward subset of the ONNX exchange format.
//!
//! Import understands `MatMul`, `Gemm`, `Add`, `Relu`, `Flatten`, `Reshape`,
//! `Concat` and `Identity` over vectors (a leading batch dimension of one is
//! dropped). Export writes only `MatMul`, `Add`, `Relu` and `Concat` with
//! `DOUBLE` tensors, so every exported model can be imported again.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::{Path, PathBuf};

use prost::Message;

use crate::graph::{lower_to_relu, Graph, GraphBuilder, Matrix, NodeId, NodeKind};

use super::IoError;

/// Hand-written subset of `onnx.proto`; field numbers follow the upstream
/// schema so files interoperate with other tools.
pub mod proto {
    #[derive(Clone, PartialEq, prost::Message)]
    pub struct ModelProto {
        #[prost(int64, tag = "1")]
        pub ir_version: i64,
        #[prost(string, tag = "2")]
        pub producer_name: String,
        #[prost(string, tag = "3")]
        pub producer_version: String,
        #[prost(message, optional, tag = "7")]
        pub graph: Option<GraphProto>,
        #[prost(message, repeated, tag = "8")]
        pub opset_import: Vec<OperatorSetIdProto>,
    }

    #[derive(Clone, PartialEq, prost::Message)]
    pub struct OperatorSetIdProto {
        #[prost(string, tag = "1")]
        pub domain: String,
        #[prost(int64, tag = "2")]
        pub version: i64,
    }

    #[derive(Clone, PartialEq, prost::Message)]
    pub struct GraphProto {
        #[prost(message, repeated, tag = "1")]
        pub node: Vec<NodeProto>,
        #[prost(string, tag = "2")]
        pub name: String,
        #[prost(message, repeated, tag = "5")]
        pub initializer: Vec<TensorProto>,
        #[prost(message, repeated, tag = "11")]
        pub input: Vec<ValueInfoProto>,
        #[prost(message, repeated, tag = "12")]
        pub output: Vec<ValueInfoProto>,
    }

    #[derive(Clone, PartialEq, prost::Message)]
    pub struct NodeProto {
        #[prost(string, repeated, tag = "1")]
        pub input: Vec<String>,
        #[prost(string, repeated, tag = "2")]
        pub output: Vec<String>,
        #[prost(string, tag = "3")]
        pub name: String,
        #[prost(string, tag = "4")]
        pub op_type: String,
        #[prost(message, repeated, tag = "5")]
        pub attribute: Vec<AttributeProto>,
        #[prost(string, tag = "7")]
        pub domain: String,
    }

    #[derive(Clone, PartialEq, prost::Message)]
    pub struct AttributeProto {
        #[prost(string, tag = "1")]
        pub name: String,
        #[prost(float, tag = "2")]
        pub f: f32,
        #[prost(int64, tag = "3")]
        pub i: i64,
        #[prost(bytes = "vec", tag = "4")]
        pub s: Vec<u8>,
        #[prost(message, optional, tag = "5")]
        pub t: Option<TensorProto>,
        #[prost(float, repeated, packed = "false", tag = "7")]
        pub floats: Vec<f32>,
        #[prost(int64, repeated, packed = "false", tag = "8")]
        pub ints: Vec<i64>,
        #[prost(int32, tag = "20")]
        pub r#type: i32,
    }

    pub mod attribute_type {
        pub const FLOAT: i32 = 1;
        pub const INT: i32 = 2;
        pub const INTS: i32 = 7;
    }

    #[derive(Clone, PartialEq, prost::Message)]
    pub struct TensorProto {
        #[prost(int64, repeated, packed = "false", tag = "1")]
        pub dims: Vec<i64>,
        #[prost(int32, tag = "2")]
        pub data_type: i32,
        #[prost(float, repeated, tag = "4")]
        pub float_data: Vec<f32>,
        #[prost(int64, repeated, tag = "7")]
        pub int64_data: Vec<i64>,
        #[prost(string, tag = "8")]
        pub name: String,
        #[prost(bytes = "vec", tag = "9")]
        pub raw_data: Vec<u8>,
        #[prost(double, repeated, tag = "10")]
        pub double_data: Vec<f64>,
    }

    pub mod data_type {
        pub const FLOAT: i32 = 1;
        pub const INT64: i32 = 7;
        pub const DOUBLE: i32 = 11;
    }

    #[derive(Clone, PartialEq, prost::Message)]
    pub struct ValueInfoProto {
        #[prost(string, tag = "1")]
        pub name: String,
        #[prost(message, optional, tag = "2")]
        pub r#type: Option<TypeProto>,
    }

    #[derive(Clone, PartialEq, prost::Message)]
    pub struct TypeProto {
        #[prost(message, optional, tag = "1")]
        pub tensor_type: Option<TensorTypeProto>,
    }

    #[derive(Clone, PartialEq, prost::Message)]
    pub struct TensorTypeProto {
        #[prost(int32, tag = "1")]
        pub elem_type: i32,
        #[prost(message, optional, tag = "2")]
        pub shape: Option<TensorShapeProto>,
    }

    #[derive(Clone, PartialEq, prost::Message)]
    pub struct TensorShapeProto {
        #[prost(message, repeated, tag = "1")]
        pub dim: Vec<Dimension>,
    }

    #[derive(Clone, PartialEq, prost::Message)]
    pub struct Dimension {
        #[prost(int64, optional, tag = "1")]
        pub dim_value: Option<i64>,
        #[prost(string, optional, tag = "2")]
        pub dim_param: Option<String>,
    }

    impl TensorProto {
        /// A `DOUBLE` tensor with little-endian `raw_data`.
        pub fn doubles(name: &str, dims: &[usize], values: &[f64]) -> Self {
            TensorProto {
                dims: dims.iter().map(|&d| d as i64).collect(),
                data_type: data_type::DOUBLE,
                name: name.to_string(),
                raw_data: values.iter().flat_map(|v| v.to_le_bytes()).collect(),
                ..Default::default()
            }
        }
    }

    impl ValueInfoProto {
        pub fn tensor(name: &str, elem_type: i32, dims: &[Dimension]) -> Self {
            ValueInfoProto {
                name: name.to_string(),
                r#type: Some(TypeProto {
                    tensor_type: Some(TensorTypeProto {
                        elem_type,
                        shape: Some(TensorShapeProto { dim: dims.to_vec() }),
                    }),
                }),
            }
        }
    }

    impl Dimension {
        pub fn fixed(n: usize) -> Self {
            Dimension { dim_value: Some(n as i64), dim_param: None }
        }

        pub fn symbolic(name: &str) -> Self {
            Dimension { dim_value: None, dim_param: Some(name.to_string()) }
        }
    }

    impl NodeProto {
        pub fn op(op_type: &str, inputs: &[&str], output: &str) -> Self {
            NodeProto {
                input: inputs.iter().map(|s| s.to_string()).collect(),
                output: vec![output.to_string()],
                name: output.to_string(),
                op_type: op_type.to_string(),
                ..Default::default()
            }
        }

        pub fn with_int(mut self, name: &str, value: i64) -> Self {
            self.attribute.push(AttributeProto {
                name: name.to_string(),
                i: value,
                r#type: attribute_type::INT,
                ..Default::default()
            });
            self
        }
    }
}

use proto::{data_type, Dimension, GraphProto, ModelProto, NodeProto, OperatorSetIdProto, TensorProto, ValueInfoProto};

const OPSET: i64 = 13;
const IR_VERSION: i64 = 8;
const SUPPORTED: [&str; 8] = ["Add", "Concat", "Flatten", "Gemm", "Identity", "MatMul", "Relu", "Reshape"];

/// An imported network.
#[derive(Debug, Clone)]
pub struct ModelFile {
    pub source: PathBuf,
    pub graph: Graph,
    pub report: ImportReport,
}

/// What an import saw.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ImportReport {
    /// Operator histogram of the source model.
    pub operators: BTreeMap<String, usize>,
    pub opset: Option<i64>,
    pub producer: String,
}

pub fn import_model(path: &Path) -> Result<ModelFile, IoError> {
    let bytes = std::fs::read(path).map_err(|e| IoError::file(path, e))?;
    let (graph, report) = model_from_bytes(&bytes)?;
    Ok(ModelFile { source: path.to_path_buf(), graph, report })
}

pub fn model_from_bytes(bytes: &[u8]) -> Result<(Graph, ImportReport), IoError> {
    let model = ModelProto::decode(bytes).map_err(|e| IoError::Malformed(format!("not an ONNX model: {e}")))?;
    let report = ImportReport {
        operators: model.graph.iter().flat_map(|g| &g.node).fold(BTreeMap::new(), |mut acc, n| {
            *acc.entry(n.op_type.clone()).or_insert(0) += 1;
            acc
        }),
        opset: model.opset_import.iter().find(|o| o.domain.is_empty()).map(|o| o.version),
        producer: model.producer_name.clone(),
    };
    let graph = model.graph.as_ref().ok_or_else(|| IoError::Malformed("model has no graph".into()))?;
    let unsupported: BTreeSet<String> = graph
        .node
        .iter()
        .filter(|n| !(n.domain.is_empty() || n.domain == "ai.onnx") || !SUPPORTED.contains(&n.op_type.as_str()))
        .map(|n| n.op_type.clone())
        .collect();
    if !unsupported.is_empty() {
        return Err(IoError::Unsupported { operators: unsupported.into_iter().collect() });
    }
    Ok((Importer::default().run(graph)?, report))
}

#[derive(Clone)]
enum Source {
    Node(NodeId),
    Const(Vec<usize>, Vec<f64>),
}

#[derive(Default)]
struct Importer {
    b: GraphBuilder,
    values: HashMap<String, Source>,
    /// Affine nodes produced by `MatMul` whose zero bias may absorb a
    /// following constant `Add`.
    open_bias: BTreeSet<NodeId>,
    uses: HashMap<String, usize>,
    batched: bool,
}

impl Importer {
    fn run(mut self, graph: &GraphProto) -> Result<Graph, IoError> {
        for t in &graph.initializer {
            let (dims, data) = tensor_values(t)?;
            self.values.insert(t.name.clone(), Source::Const(dims, data));
        }
        let free: Vec<&ValueInfoProto> = graph.input.iter().filter(|i| !self.values.contains_key(&i.name)).collect();
        let [input] = free.as_slice() else {
            return Err(IoError::Malformed(format!("expected one graph input, found {}", free.len())));
        };
        let (dims, batched) = input_dims(input)?;
        self.batched = batched;
        let x = self.b.input(dims.iter().product())?;
        self.values.insert(input.name.clone(), Source::Node(x));
        for node in &graph.node {
            for name in &node.input {
                *self.uses.entry(name.clone()).or_insert(0) += 1;
            }
        }
        for out in &graph.output {
            *self.uses.entry(out.name.clone()).or_insert(0) += 1;
        }
        for node in &graph.node {
            self.node(node)?;
        }
        let [output] = graph.output.as_slice() else {
            return Err(IoError::Malformed(format!("expected one graph output, found {}", graph.output.len())));
        };
        match self.values.get(&output.name) {
            Some(Source::Node(id)) => {
                let id = *id;
                Ok(self.b.finish(id)?)
            }
            Some(Source::Const(..)) => Err(IoError::Malformed("graph output is a constant".into())),
            None => Err(IoError::Malformed(format!("graph output {} is never computed", output.name))),
        }
    }

    fn get(&self, name: &str) -> Result<Source, IoError> {
        self.values.get(name).cloned().ok_or_else(|| IoError::Malformed(format!("undefined value {name}")))
    }

    fn node_input(&self, node: &NodeProto, k: usize) -> Result<Source, IoError> {
        let name = node
            .input
            .get(k)
            .ok_or_else(|| IoError::Malformed(format!("{} node {} lacks input {k}", node.op_type, node.name)))?;
        self.get(name)
    }

    fn as_node(&mut self, source: Source) -> Result<NodeId, IoError> {
        match source {
            Source::Node(id) => Ok(id),
            Source::Const(_, data) => Ok(self.b.parameter(data)?),
        }
    }

    fn node(&mut self, node: &NodeProto) -> Result<(), IoError> {
        let [out] = node.output.as_slice() else {
            return Err(IoError::Malformed(format!("{} node {} must have one output", node.op_type, node.name)));
        };
        let unsupported = |what: &str| IoError::Unsupported { operators: vec![format!("{} ({what})", node.op_type)] };
        let result = match node.op_type.as_str() {
            "Identity" | "Flatten" | "Reshape" => self.node_input(node, 0)?,
            "Relu" => {
                let x = self.node_input(node, 0)?;
                let x = self.as_node(x)?;
                Source::Node(self.b.relu(x)?)
            }
            "MatMul" => {
                let Source::Const(dims, w) = self.node_input(node, 1)? else {
                    return Err(unsupported("needs a constant right operand"));
                };
                let x = self.node_input(node, 0)?;
                let x = self.as_node(x)?;
                let (k, r) = matrix_dims(&dims).ok_or_else(|| unsupported("right operand must be a matrix"))?;
                let weight = Matrix::new(k, r, w)?.transpose();
                let id = self.b.affine(x, weight, vec![0.0; r])?;
                self.open_bias.insert(id);
                Source::Node(id)
            }
            "Gemm" => {
                let attr = |name: &str, default: f64| {
                    node.attribute.iter().find(|a| a.name == name).map_or(default, |a| {
                        if a.r#type == proto::attribute_type::FLOAT {
                            f64::from(a.f)
                        } else {
                            a.i as f64
                        }
                    })
                };
                if attr("alpha", 1.0) != 1.0 || attr("beta", 1.0) != 1.0 || attr("transA", 0.0) != 0.0 {
                    return Err(unsupported("only alpha = beta = 1 without transA"));
                }
                let Source::Const(dims, w) = self.node_input(node, 1)? else {
                    return Err(unsupported("needs constant weights"));
                };
                let x = self.node_input(node, 0)?;
                let x = self.as_node(x)?;
                let (a, c) = matrix_dims(&dims).ok_or_else(|| unsupported("weights must be a matrix"))?;
                let weight = if attr("transB", 0.0) != 0.0 { Matrix::new(a, c, w)? } else { Matrix::new(a, c, w)?.transpose() };
                let rows = weight.rows();
                let bias = match node.input.get(2).filter(|s| !s.is_empty()) {
                    None => vec![0.0; rows],
                    Some(name) => match self.get(name)? {
                        Source::Const(_, c) => broadcast(&c, rows).ok_or_else(|| unsupported("bias does not broadcast"))?,
                        Source::Node(_) => return Err(unsupported("bias must be constant")),
                    },
                };
                Source::Node(self.b.affine(x, weight, bias)?)
            }
            "Add" => {
                let (a, b) = (self.node_input(node, 0)?, self.node_input(node, 1)?);
                match (a, b) {
                    (Source::Node(x), Source::Const(_, c)) | (Source::Const(_, c), Source::Node(x)) => {
                        self.add_constant(node, x, &c)?
                    }
                    (Source::Node(x), Source::Node(y)) => Source::Node(self.b.add(x, y)?),
                    (a @ Source::Const(..), b @ Source::Const(..)) => {
                        let (x, y) = (self.as_node(a)?, self.as_node(b)?);
                        Source::Node(self.b.add(x, y)?)
                    }
                }
            }
            "Concat" => {
                let axis = node.attribute.iter().find(|a| a.name == "axis").map_or(0, |a| a.i);
                let mut parts = Vec::new();
                for k in 0..node.input.len() {
                    let s = self.node_input(node, k)?;
                    parts.push(self.as_node(s)?);
                }
                let feature_axis = if self.batched { 1 } else { 0 };
                if axis != -1 && axis != feature_axis {
                    return Err(unsupported("only concatenation along the feature axis"));
                }
                Source::Node(if parts.len() == 1 { parts[0] } else { self.b.add_node(NodeKind::Concat(0), parts)? })
            }
            _ => return Err(IoError::Unsupported { operators: vec![node.op_type.clone()] }),
        };
        self.values.insert(out.clone(), result);
        Ok(())
    }

    /// `x + c`, folded into the bias of a fresh `MatMul` affine when nothing
    /// else reads that affine.
    fn add_constant(&mut self, node: &NodeProto, x: NodeId, c: &[f64]) -> Result<Source, IoError> {
        let dim = self.b.dim(x)?;
        let c = broadcast(c, dim).ok_or_else(|| {
            IoError::Malformed(format!("Add node {}: constant of length {} does not fit {dim}", node.name, c.len()))
        })?;
        let single_use = node
            .input
            .iter()
            .any(|n| matches!(self.values.get(n), Some(Source::Node(id)) if *id == x) && self.uses.get(n) == Some(&1));
        if single_use && self.open_bias.remove(&x) {
            self.b.set_bias(x, c)?;
            return Ok(Source::Node(x));
        }
        let p = self.b.parameter(c)?;
        Ok(Source::Node(self.b.add(x, p)?))
    }
}

fn matrix_dims(dims: &[usize]) -> Option<(usize, usize)> {
    match dims {
        [k, r] => Some((*k, *r)),
        _ => None,
    }
}

fn broadcast(c: &[f64], n: usize) -> Option<Vec<f64>> {
    match c.len() {
        1 => Some(vec![c[0]; n]),
        len if len == n => Some(c.to_vec()),
        _ => None,
    }
}

/// Dimensions of the graph input without its batch axis, and whether it
/// had one.
fn input_dims(info: &ValueInfoProto) -> Result<(Vec<usize>, bool), IoError> {
    let mut dims = info
        .r#type
        .as_ref()
        .and_then(|t| t.tensor_type.as_ref())
        .and_then(|t| t.shape.as_ref())
        .map(|s| s.dim.as_slice())
        .ok_or_else(|| IoError::Malformed(format!("input {} has no tensor shape", info.name)))?;
    // a symbolic or unit leading axis is the batch
    let batched = dims.len() > 1 && dims[0].dim_value.is_none_or(|v| v == 1);
    if batched {
        dims = &dims[1..];
    }
    let dims = dims
        .iter()
        .map(|d| match d.dim_value {
            Some(v) if v > 0 => Ok(v as usize),
            _ => Err(IoError::Malformed(format!("input {} has a dynamic dimension", info.name))),
        })
        .collect::<Result<_, _>>()?;
    Ok((dims, batched))
}

fn tensor_values(t: &TensorProto) -> Result<(Vec<usize>, Vec<f64>), IoError> {
    let dims: Vec<usize> = t.dims.iter().map(|&d| d.max(0) as usize).collect();
    let numel: usize = dims.iter().product();
    let raw = &t.raw_data;
    let data: Vec<f64> = match t.data_type {
        data_type::DOUBLE if !raw.is_empty() => {
            raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect()
        }
        data_type::DOUBLE => t.double_data.clone(),
        data_type::FLOAT if !raw.is_empty() => {
            raw.chunks_exact(4).map(|c| f64::from(f32::from_le_bytes(c.try_into().expect("4 bytes")))).collect()
        }
        data_type::FLOAT => t.float_data.iter().map(|&x| f64::from(x)).collect(),
        data_type::INT64 if !raw.is_empty() => {
            raw.chunks_exact(8).map(|c| i64::from_le_bytes(c.try_into().expect("8 bytes")) as f64).collect()
        }
        data_type::INT64 => t.int64_data.iter().map(|&x| x as f64).collect(),
        other => return Err(IoError::Malformed(format!("tensor {} has unsupported data type {other}", t.name))),
    };
    if data.len() != numel {
        return Err(IoError::Malformed(format!("tensor {} holds {} values for shape {dims:?}", t.name, data.len())));
    }
    Ok((dims, data))
}

/// Encodes `graph` in the export subset. Native piecewise nodes are lowered
/// to ReLU gadgets first; subtraction, negation, scaling and index
/// selection become affine maps whose evaluation is exact.
pub fn model_to_bytes(graph: &Graph) -> Result<Vec<u8>, IoError> {
    let lowered = lower_to_relu(graph)?.graph;
    let mut e = Exporter::default();
    let input = lowered.input()?;
    for id in lowered.ids() {
        let shape = lowered.shape(id)?;
        if shape.rank() != 1 {
            return Err(IoError::Unrepresentable(format!("{id} has shape {:?}; export handles vectors only", shape.dims())));
        }
    }
    let names: Vec<String> = lowered
        .ids()
        .map(|id| if id == input { "X".to_string() } else if id == lowered.sink() { "Y".to_string() } else { format!("n{}", id.0) })
        .collect();
    for &id in lowered.topological_order()? {
        let node = &lowered.nodes()[id.index()];
        let out = &names[id.index()];
        let p: Vec<&str> = node.preds.iter().map(|q| names[q.index()].as_str()).collect();
        let dim = |q: NodeId| lowered.shape(q).map(|s| s.numel());
        match &node.kind {
            NodeKind::Input(_) => {}
            NodeKind::Parameter(_, values) => e.constant(out, values),
            NodeKind::Affine { weight, bias } => e.affine(p[0], weight, bias, out),
            NodeKind::Relu => e.node(NodeProto::op("Relu", &p, out)),
            NodeKind::Add => e.node(NodeProto::op("Add", &p, out)),
            NodeKind::Subtract => {
                let n = dim(node.preds[0])?;
                let both = format!("{out}_ab");
                e.node(NodeProto::op("Concat", &p, &both).with_int("axis", 0));
                let mut w = Matrix::zeros(n, 2 * n);
                for i in 0..n {
                    w.set(i, i, 1.0);
                    w.set(i, n + i, -1.0);
                }
                e.affine(&both, &w, &vec![0.0; n], out);
            }
            NodeKind::Negate | NodeKind::ScaleConst(_) => {
                let n = dim(node.preds[0])?;
                let s = if let NodeKind::ScaleConst(s) = node.kind { s } else { -1.0 };
                let mut w = Matrix::zeros(n, n);
                (0..n).for_each(|i| w.set(i, i, s));
                e.affine(p[0], &w, &vec![0.0; n], out);
            }
            NodeKind::Slice { .. } | NodeKind::SelectIndices(_) => {
                let n = dim(node.preds[0])?;
                let picks: Vec<usize> = match &node.kind {
                    NodeKind::Slice { start, end } => (*start..*end).collect(),
                    NodeKind::SelectIndices(indices) => indices.clone(),
                    _ => unreachable!(),
                };
                let mut w = Matrix::zeros(picks.len(), n);
                for (i, &j) in picks.iter().enumerate() {
                    w.set(i, j, 1.0);
                }
                e.affine(p[0], &w, &vec![0.0; picks.len()], out);
            }
            NodeKind::Concat(_) => e.node(NodeProto::op("Concat", &p, out).with_int("axis", 0)),
            NodeKind::MaxPairwise | NodeKind::MinPairwise | NodeKind::ClampConst { .. } | NodeKind::ReduceMax => {
                unreachable!("lowered above")
            }
        }
    }
    let d = lowered.input_dim()?;
    let m = lowered.output_dim()?;
    let model = ModelProto {
        ir_version: IR_VERSION,
        producer_name: env!("CARGO_PKG_NAME").into(),
        producer_version: env!("CARGO_PKG_VERSION").into(),
        graph: Some(GraphProto {
            node: e.nodes,
            name: "composed".into(),
            initializer: e.initializers,
            input: vec![ValueInfoProto::tensor("X", data_type::DOUBLE, &[Dimension::fixed(d)])],
            output: vec![ValueInfoProto::tensor("Y", data_type::DOUBLE, &[Dimension::fixed(m)])],
        }),
        opset_import: vec![OperatorSetIdProto { domain: String::new(), version: OPSET }],
    };
    Ok(model.encode_to_vec())
}

#[derive(Default)]
struct Exporter {
    nodes: Vec<NodeProto>,
    initializers: Vec<TensorProto>,
}

impl Exporter {
    fn node(&mut self, node: NodeProto) {
        self.nodes.push(node);
    }

    fn constant(&mut self, name: &str, values: &[f64]) {
        self.initializers.push(TensorProto::doubles(name, &[values.len()], values));
    }

    /// `MatMul` by the transposed weight, then `Add` of the bias.
    fn affine(&mut self, x: &str, weight: &Matrix, bias: &[f64], out: &str) {
        let w = format!("{out}_w");
        let b = format!("{out}_b");
        let product = format!("{out}_mm");
        let t = weight.transpose();
        self.initializers.push(TensorProto::doubles(&w, &[t.rows(), t.cols()], t.data()));
        self.constant(&b, bias);
        self.node(NodeProto::op("MatMul", &[x, &w], &product));
        self.node(NodeProto::op("Add", &[&product, &b], out));
    }
}

pub fn export_model(graph: &Graph, path: &Path) -> Result<(), IoError> {
    let bytes = model_to_bytes(graph)?;
    std::fs::write(path, bytes).map_err(|e| IoError::file(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::evaluate_flat;

    #[test]
    fn export_then_import_evaluates_identically() {
        let mut b = GraphBuilder::new();
        let x = b.input(3).unwrap();
        let a = b.affine(x, Matrix::new(2, 3, vec![0.1, -0.2, 0.3, 1.5, 2.5, -3.5]).unwrap(), vec![0.25, -0.75]).unwrap();
        let r = b.relu(a).unwrap();
        let s = b.slice(x, 1, 3).unwrap();
        let d = b.sub(r, s).unwrap();
        let n = b.neg(d).unwrap();
        let k = b.scale(n, 0.3).unwrap();
        let m = b.max_node(k, s).unwrap();
        let c = b.concat(&[m, r]).unwrap();
        let sel = b.select(c, vec![3, 0]).unwrap();
        let g = b.finish(sel).unwrap();
        let (back, report) = model_from_bytes(&model_to_bytes(&g).unwrap()).unwrap();
        assert_eq!(report.opset, Some(OPSET));
        for w in [[0.1, 0.2, 0.3], [-1.0, 2.0, 0.5], [3.0, -0.125, 1.0 / 3.0]] {
            assert_eq!(evaluate_flat(&back, &w).unwrap(), evaluate_flat(&g, &w).unwrap());
        }
    }

    #[test]
    fn convolution_is_named_in_the_error() {
        let model = ModelProto {
            graph: Some(GraphProto {
                node: vec![NodeProto::op("Conv", &["X", "W"], "Y"), NodeProto::op("MaxPool", &["Y"], "Z")],
                ..Default::default()
            }),
            ..Default::default()
        };
        let err = model_from_bytes(&model.encode_to_vec()).unwrap_err();
        assert_eq!(err, IoError::Unsupported { operators: vec!["Conv".into(), "MaxPool".into()] });
        assert!(err.to_string().contains("Conv"));
    }

    #[test]
    fn garbage_is_malformed() {
        assert!(matches!(model_from_bytes(b"\xff\xff\xff"), Err(IoError::Malformed(_))));
    }
}
