use std::fmt;

use rand::{Rng, RngExt};

use super::GraphError;

/// Index of a node inside its graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "node {}", self.0)
    }
}

/// Extents of a dense tensor. Every extent is at least one.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TensorShape(Vec<usize>);

impl TensorShape {
    pub fn new(dims: Vec<usize>) -> Result<Self, GraphError> {
        if dims.is_empty() || dims.iter().any(|&d| d == 0) {
            return Err(GraphError::Construction(format!(
                "tensor shape {dims:?} must have at least one axis and positive extents"
            )));
        }
        Ok(TensorShape(dims))
    }

    pub fn vector(len: usize) -> Result<Self, GraphError> {
        TensorShape::new(vec![len])
    }

    pub fn dims(&self) -> &[usize] {
        &self.0
    }

    pub fn rank(&self) -> usize {
        self.0.len()
    }

    pub fn numel(&self) -> usize {
        self.0.iter().product()
    }
}

impl fmt::Display for TensorShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

/// A dense tensor of finite reals, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Value {
    shape: TensorShape,
    data: Vec<f64>,
}

impl Value {
    pub fn new(shape: TensorShape, data: Vec<f64>) -> Result<Self, GraphError> {
        if data.len() != shape.numel() {
            return Err(GraphError::Construction(format!(
                "value of shape {shape} needs {} entries, got {}",
                shape.numel(),
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|x| !x.is_finite()) {
            return Err(GraphError::Construction(format!(
                "value entry {pos} is not finite"
            )));
        }
        Ok(Value { shape, data })
    }

    pub fn vector(data: Vec<f64>) -> Result<Self, GraphError> {
        Value::new(TensorShape::vector(data.len())?, data)
    }

    pub fn scalar(x: f64) -> Result<Self, GraphError> {
        Value::vector(vec![x])
    }

    pub fn shape(&self) -> &TensorShape {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}

/// Dense row-major matrix used for affine weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, GraphError> {
        if rows == 0 || cols == 0 || data.len() != rows * cols {
            return Err(GraphError::Construction(format!(
                "matrix {rows}x{cols} cannot hold {} entries",
                data.len()
            )));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(GraphError::Construction("matrix entries must be finite".into()));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, GraphError> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(GraphError::Construction("ragged matrix rows".into()));
        }
        Matrix::new(rows.len(), cols, rows.concat())
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Matrix { rows: n, cols: n, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, x: f64) {
        self.data[i * self.cols + j] = x;
    }

    pub fn row_vecs(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }
}

/// Axis-aligned box `{ x | lower <= x <= upper }` with finite bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct Hyperrectangle {
    lower: Value,
    upper: Value,
}

impl Hyperrectangle {
    pub fn from_values(lower: Value, upper: Value) -> Result<Self, GraphError> {
        if lower.shape() != upper.shape() {
            return Err(GraphError::Construction(format!(
                "box bounds have shapes {} and {}",
                lower.shape(),
                upper.shape()
            )));
        }
        if let Some(i) = (0..lower.len()).find(|&i| lower.data[i] > upper.data[i]) {
            return Err(GraphError::Construction(format!(
                "box lower bound exceeds upper bound in coordinate {i}"
            )));
        }
        Ok(Hyperrectangle { lower, upper })
    }

    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self, GraphError> {
        Hyperrectangle::from_values(Value::vector(lower)?, Value::vector(upper)?)
    }

    /// `[lo, hi]^dim`.
    pub fn uniform(dim: usize, lo: f64, hi: f64) -> Result<Self, GraphError> {
        Hyperrectangle::new(vec![lo; dim], vec![hi; dim])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        self.lower.data()
    }

    pub fn upper(&self) -> &[f64] {
        self.upper.data()
    }

    pub fn lower_value(&self) -> &Value {
        &self.lower
    }

    pub fn upper_value(&self) -> &Value {
        &self.upper
    }

    pub fn contains(&self, point: &[f64]) -> bool {
        point.len() == self.dim()
            && point
                .iter()
                .zip(self.lower().iter().zip(self.upper()))
                .all(|(x, (lo, hi))| lo <= x && x <= hi)
    }

    /// Cartesian product `self × other` (coordinates of `self` first).
    pub fn product(&self, other: &Hyperrectangle) -> Hyperrectangle {
        let lower = [self.lower(), other.lower()].concat();
        let upper = [self.upper(), other.upper()].concat();
        Hyperrectangle::new(lower, upper).expect("product of valid boxes")
    }

    pub fn center(&self) -> Vec<f64> {
        self.lower()
            .iter()
            .zip(self.upper())
            .map(|(lo, hi)| lo + 0.5 * (hi - lo))
            .collect()
    }

    pub fn widths(&self) -> Vec<f64> {
        self.lower()
            .iter()
            .zip(self.upper())
            .map(|(lo, hi)| hi - lo)
            .collect()
    }

    pub fn clamp(&self, point: &mut [f64]) {
        for (x, (lo, hi)) in point.iter_mut().zip(self.lower().iter().zip(self.upper())) {
            *x = x.clamp(*lo, *hi);
        }
    }

    /// Bisects coordinate `axis` at its midpoint.
    pub fn bisect(&self, axis: usize) -> (Hyperrectangle, Hyperrectangle) {
        let lo = self.lower()[axis];
        let hi = self.upper()[axis];
        let mid = (lo + 0.5 * (hi - lo)).clamp(lo, hi);
        let mut left_upper = self.upper().to_vec();
        left_upper[axis] = mid;
        let mut right_lower = self.lower().to_vec();
        right_lower[axis] = mid;
        (
            Hyperrectangle::new(self.lower().to_vec(), left_upper).expect("left half"),
            Hyperrectangle::new(right_lower, self.upper().to_vec()).expect("right half"),
        )
    }

    /// Uniform sample from the box.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.lower()
            .iter()
            .zip(self.upper())
            .map(|(&lo, &hi)| {
                if hi > lo {
                    rng.random_range(lo..=hi)
                } else {
                    lo
                }
            })
            .collect()
    }
}

/// The closed set of operations a node may perform.
#[derive(Debug, Clone, PartialEq)]
pub enum NodeKind {
    /// The single free input of the graph.
    Input(TensorShape),
    /// A constant source.
    Parameter(TensorShape, Vec<f64>),
    /// `weight · flatten(x) + bias`.
    Affine { weight: Matrix, bias: Vec<f64> },
    Relu,
    MaxPairwise,
    MinPairwise,
    Add,
    Subtract,
    Negate,
    ScaleConst(f64),
    Concat(usize),
    /// Contiguous range `[start, end)` of the flattened predecessor.
    Slice { start: usize, end: usize },
    SelectIndices(Vec<usize>),
    ClampConst { lo: Vec<f64>, hi: Vec<f64> },
    ReduceMax,
}

impl NodeKind {
    /// Number of predecessors; `None` for variadic kinds.
    pub fn arity(&self) -> Option<usize> {
        match self {
            NodeKind::Input(_) | NodeKind::Parameter(..) => Some(0),
            NodeKind::Affine { .. }
            | NodeKind::Relu
            | NodeKind::Negate
            | NodeKind::ScaleConst(_)
            | NodeKind::Slice { .. }
            | NodeKind::SelectIndices(_)
            | NodeKind::ClampConst { .. }
            | NodeKind::ReduceMax => Some(1),
            NodeKind::MaxPairwise | NodeKind::MinPairwise | NodeKind::Add | NodeKind::Subtract => {
                Some(2)
            }
            NodeKind::Concat(_) => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            NodeKind::Input(_) => "input",
            NodeKind::Parameter(..) => "parameter",
            NodeKind::Affine { .. } => "affine",
            NodeKind::Relu => "relu",
            NodeKind::MaxPairwise => "max",
            NodeKind::MinPairwise => "min",
            NodeKind::Add => "add",
            NodeKind::Subtract => "subtract",
            NodeKind::Negate => "negate",
            NodeKind::ScaleConst(_) => "scale",
            NodeKind::Concat(_) => "concat",
            NodeKind::Slice { .. } => "slice",
            NodeKind::SelectIndices(_) => "select",
            NodeKind::ClampConst { .. } => "clamp",
            NodeKind::ReduceMax => "reduce_max",
        }
    }

    /// Whether the node's function is affine in its predecessors.
    pub fn is_linear(&self) -> bool {
        !matches!(
            self,
            NodeKind::Relu
                | NodeKind::MaxPairwise
                | NodeKind::MinPairwise
                | NodeKind::ClampConst { .. }
                | NodeKind::ReduceMax
        )
    }
}
