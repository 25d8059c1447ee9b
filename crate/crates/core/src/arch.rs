//! Declarative CNN description and shape propagation.
//!
//! Networks are square throughout: an input of `spatial × spatial × channels`
//! flows through a conv stack, crosses at most one boundary layer
//! (`Flatten` or `GlobalAvgPool`) and ends in a stack of dense layers.
//! After the boundary a tensor is represented as `1 × 1 × features`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TensorShape {
    pub spatial: u64,
    pub channels: u64,
}

impl TensorShape {
    pub fn new(spatial: u64, channels: u64) -> Self {
        Self { spatial, channels }
    }

    /// Number of scalar elements, `spatial² × channels`.
    pub fn elements(&self) -> Option<u64> {
        self.spatial
            .checked_mul(self.spatial)?
            .checked_mul(self.channels)
    }
}

impl fmt::Display for TensorShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}×{}×{}", self.spatial, self.spatial, self.channels)
    }
}

fn one() -> u64 {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvLayer {
    pub out_channels: u64,
    pub kernel: u64,
    #[serde(default = "one")]
    pub stride: u64,
    #[serde(default)]
    pub padding: u64,
    #[serde(default = "one")]
    pub dilation: u64,
    #[serde(rename = "bias", default)]
    pub has_bias: bool,
}

impl ConvLayer {
    /// Bias-free, undilated, stride-1, unpadded convolution.
    pub fn new(out_channels: u64, kernel: u64) -> Self {
        Self {
            out_channels,
            kernel,
            stride: 1,
            padding: 0,
            dilation: 1,
            has_bias: false,
        }
    }

    pub fn with_stride(mut self, stride: u64) -> Self {
        self.stride = stride;
        self
    }

    pub fn with_padding(mut self, padding: u64) -> Self {
        self.padding = padding;
        self
    }

    pub fn with_dilation(mut self, dilation: u64) -> Self {
        self.dilation = dilation;
        self
    }

    pub fn with_bias(mut self, has_bias: bool) -> Self {
        self.has_bias = has_bias;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PoolKind {
    Max,
    Avg,
}

/// Max or average pooling. Pooling is never dilated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoolLayer {
    pub kind: PoolKind,
    pub kernel: u64,
    pub stride: u64,
    #[serde(default)]
    pub padding: u64,
}

impl PoolLayer {
    pub fn max(kernel: u64, stride: u64) -> Self {
        Self {
            kind: PoolKind::Max,
            kernel,
            stride,
            padding: 0,
        }
    }

    pub fn avg(kernel: u64, stride: u64, padding: u64) -> Self {
        Self {
            kind: PoolKind::Avg,
            kernel,
            stride,
            padding,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DenseLayer {
    pub out_features: u64,
    #[serde(rename = "bias", default)]
    pub has_bias: bool,
}

impl DenseLayer {
    pub fn new(out_features: u64) -> Self {
        Self {
            out_features,
            has_bias: false,
        }
    }

    pub fn with_bias(mut self, has_bias: bool) -> Self {
        self.has_bias = has_bias;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Layer {
    Conv(ConvLayer),
    Pool(PoolLayer),
    GlobalAvgPool {},
    Flatten {},
    Dense(DenseLayer),
}

impl Layer {
    pub const GLOBAL_AVG_POOL: Layer = Layer::GlobalAvgPool {};
    pub const FLATTEN: Layer = Layer::Flatten {};

    pub fn is_boundary(&self) -> bool {
        matches!(self, Layer::GlobalAvgPool {} | Layer::Flatten {})
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Layer::Conv(_) => "conv",
            Layer::Pool(_) => "pool",
            Layer::GlobalAvgPool {} => "global_avg_pool",
            Layer::Flatten {} => "flatten",
            Layer::Dense(_) => "dense",
        }
    }

    pub fn as_conv(&self) -> Option<&ConvLayer> {
        match self {
            Layer::Conv(c) => Some(c),
            _ => None,
        }
    }

    pub fn as_dense(&self) -> Option<&DenseLayer> {
        match self {
            Layer::Dense(d) => Some(d),
            _ => None,
        }
    }
}

impl From<ConvLayer> for Layer {
    fn from(l: ConvLayer) -> Self {
        Layer::Conv(l)
    }
}

impl From<PoolLayer> for Layer {
    fn from(l: PoolLayer) -> Self {
        Layer::Pool(l)
    }
}

impl From<DenseLayer> for Layer {
    fn from(l: DenseLayer) -> Self {
        Layer::Dense(l)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub name: String,
    pub input: TensorShape,
    pub layers: Vec<Layer>,
}

impl NetworkSpec {
    pub fn new(name: impl Into<String>, input: TensorShape, layers: Vec<Layer>) -> Self {
        Self {
            name: name.into(),
            input,
            layers,
        }
    }

    /// Same architecture fed with a different square input size.
    pub fn with_input_spatial(&self, spatial: u64) -> Self {
        let mut net = self.clone();
        net.input.spatial = spatial;
        net
    }

    pub fn boundary_index(&self) -> Option<usize> {
        self.layers.iter().position(Layer::is_boundary)
    }

    pub fn conv_indices(&self) -> Vec<usize> {
        self.layers
            .iter()
            .enumerate()
            .filter(|(_, l)| matches!(l, Layer::Conv(_)))
            .map(|(i, _)| i)
            .collect()
    }
}

/// Output side length of a square sliding window:
/// `floor((n + 2p − d·(k − 1) − 1) / s) + 1`.
///
/// `None` when the dilated window does not fit the padded input, or when
/// stride, kernel or dilation is zero.
pub fn window_output_size(
    input: u64,
    kernel: u64,
    stride: u64,
    padding: u64,
    dilation: u64,
) -> Option<u64> {
    if kernel == 0 || stride == 0 || dilation == 0 {
        return None;
    }
    let extent = dilation.checked_mul(kernel - 1)?.checked_add(1)?;
    let padded = padding.checked_mul(2)?.checked_add(input)?;
    if padded < extent {
        return None;
    }
    Some((padded - extent) / stride + 1)
}

fn window_extent(kernel: u64, dilation: u64) -> u64 {
    dilation.saturating_mul(kernel.saturating_sub(1)).saturating_add(1)
}

/// Shape produced by `layer` when fed `input`.
///
/// Assumes the layer already passed the structural checks of [`validate`].
pub fn layer_output_shape(index: usize, layer: &Layer, input: TensorShape) -> Result<TensorShape> {
    let geometry = |kernel, dilation, padding| Error::InvalidGeometry {
        layer: index,
        input,
        extent: window_extent(kernel, dilation),
        padding,
    };
    match layer {
        Layer::Conv(c) => {
            let m = window_output_size(input.spatial, c.kernel, c.stride, c.padding, c.dilation)
                .ok_or_else(|| geometry(c.kernel, c.dilation, c.padding))?;
            Ok(TensorShape::new(m, c.out_channels))
        }
        Layer::Pool(p) => {
            let m = window_output_size(input.spatial, p.kernel, p.stride, p.padding, 1)
                .ok_or_else(|| geometry(p.kernel, 1, p.padding))?;
            Ok(TensorShape::new(m, input.channels))
        }
        Layer::GlobalAvgPool {} => Ok(TensorShape::new(1, input.channels)),
        Layer::Flatten {} => input
            .elements()
            .map(|n| TensorShape::new(1, n))
            .ok_or(Error::Overflow("flattened length")),
        Layer::Dense(d) => Ok(TensorShape::new(1, d.out_features)),
    }
}

/// Shape after every layer, in order (`result[i]` is the output of layer `i`).
pub fn propagate_shapes(net: &NetworkSpec) -> Result<Vec<TensorShape>> {
    let structural = structural_violations(net);
    if !structural.is_empty() {
        return Err(Error::InvalidNetwork(ValidationReport {
            violations: structural,
        }));
    }
    propagate_unchecked(net)
}

fn propagate_unchecked(net: &NetworkSpec) -> Result<Vec<TensorShape>> {
    let mut shape = net.input;
    let mut shapes = Vec::with_capacity(net.layers.len());
    for (i, layer) in net.layers.iter().enumerate() {
        shape = layer_output_shape(i, layer, shape)?;
        shapes.push(shape);
    }
    Ok(shapes)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    /// Offending layer, `None` for network-level findings.
    pub layer: Option<usize>,
    pub message: String,
}

impl Violation {
    fn at(layer: usize, message: impl Into<String>) -> Self {
        Self {
            layer: Some(layer),
            message: message.into(),
        }
    }

    fn net(message: impl Into<String>) -> Self {
        Self {
            layer: None,
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.layer {
            Some(i) => write!(f, "layer {i}: {}", self.message),
            None => write!(f, "network: {}", self.message),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    /// True when some violation message contains `needle`.
    pub fn mentions(&self, needle: &str) -> bool {
        self.violations.iter().any(|v| v.message.contains(needle))
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "  {v}")?;
        }
        Ok(())
    }
}

fn structural_violations(net: &NetworkSpec) -> Vec<Violation> {
    let mut out = Vec::new();
    if net.input.spatial < 1 {
        out.push(Violation::net("input spatial ≥ 1"));
    }
    if net.input.channels < 1 {
        out.push(Violation::net("input channels ≥ 1"));
    }

    let mut boundaries = 0usize;
    // true once the tensor is a flat feature vector
    let mut flat = false;
    let mut spatial_seen = false;
    for (i, layer) in net.layers.iter().enumerate() {
        match layer {
            Layer::Conv(c) => {
                if c.out_channels < 1 {
                    out.push(Violation::at(i, "out_channels ≥ 1"));
                }
                if c.kernel < 1 {
                    out.push(Violation::at(i, "kernel ≥ 1"));
                }
                if c.stride < 1 {
                    out.push(Violation::at(i, "stride ≥ 1"));
                }
                if c.dilation < 1 {
                    out.push(Violation::at(i, "dilation ≥ 1"));
                }
                if flat {
                    out.push(Violation::at(i, "conv after dense boundary"));
                }
                spatial_seen = true;
            }
            Layer::Pool(p) => {
                if p.kernel < 1 {
                    out.push(Violation::at(i, "kernel ≥ 1"));
                }
                if p.stride < 1 {
                    out.push(Violation::at(i, "stride ≥ 1"));
                }
                if flat {
                    out.push(Violation::at(i, "pool after dense boundary"));
                }
                spatial_seen = true;
            }
            Layer::GlobalAvgPool {} | Layer::Flatten {} => {
                boundaries += 1;
                if boundaries == 2 {
                    out.push(Violation::at(i, "more than one conv→dense boundary"));
                } else if flat {
                    out.push(Violation::at(i, "boundary after dense layer"));
                }
                flat = true;
            }
            Layer::Dense(d) => {
                if d.out_features < 1 {
                    out.push(Violation::at(i, "out_features ≥ 1"));
                }
                if !flat && (spatial_seen || net.input.spatial != 1) {
                    out.push(Violation::at(
                        i,
                        "dense layer on unflattened input (missing flatten or global_avg_pool)",
                    ));
                }
                flat = true;
            }
        }
    }
    out
}

/// Layer-parameter and layout checks only, without shape propagation.
pub(crate) fn check_structure(net: &NetworkSpec) -> ValidationReport {
    ValidationReport {
        violations: structural_violations(net),
    }
}

/// Every invariant violation of `net`; empty iff the network is valid.
pub fn validate(net: &NetworkSpec) -> ValidationReport {
    let mut violations = structural_violations(net);
    if violations.is_empty() {
        if let Err(e) = propagate_unchecked(net) {
            let layer = match &e {
                Error::InvalidGeometry { layer, .. } => Some(*layer),
                _ => None,
            };
            violations.push(Violation {
                layer,
                message: e.to_string(),
            });
        }
    }
    ValidationReport { violations }
}
