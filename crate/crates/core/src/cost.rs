//! Exact parameter and FLOPS accounting.
//!
//! Conventions: a conv layer costs `M²·(C²·K_in + 1)·K_out` FLOPS with bias
//! and `M²·C²·K_in·K_out` without; a dense layer costs `I·O (+ O)` for both
//! parameters and FLOPS; pooling (including global average pooling) costs
//! one FLOP per input element and has no parameters; flatten is free.
//! All arithmetic is checked `u64`.

use serde::Serialize;

use crate::arch::{propagate_shapes, ConvLayer, Layer, NetworkSpec, TensorShape};
use crate::error::{Error, Result};

fn mul(a: u64, b: u64, what: &'static str) -> Result<u64> {
    a.checked_mul(b).ok_or(Error::Overflow(what))
}

fn add(a: u64, b: u64, what: &'static str) -> Result<u64> {
    a.checked_add(b).ok_or(Error::Overflow(what))
}

pub fn conv_params(layer: &ConvLayer, in_channels: u64) -> Result<u64> {
    const WHAT: &str = "conv params";
    let per_filter = mul(mul(layer.kernel, layer.kernel, WHAT)?, in_channels, WHAT)?;
    let per_filter = add(per_filter, layer.has_bias as u64, WHAT)?;
    mul(per_filter, layer.out_channels, WHAT)
}

pub fn dense_params(in_features: u64, out_features: u64, bias: bool) -> Result<u64> {
    const WHAT: &str = "dense params";
    add(mul(in_features, out_features, WHAT)?, if bias { out_features } else { 0 }, WHAT)
}

pub fn conv_flops(out_spatial: u64, layer: &ConvLayer, in_channels: u64) -> Result<u64> {
    const WHAT: &str = "conv flops";
    let window = mul(mul(layer.kernel, layer.kernel, WHAT)?, in_channels, WHAT)?;
    let per_output = add(window, layer.has_bias as u64, WHAT)?;
    let positions = mul(out_spatial, out_spatial, WHAT)?;
    mul(mul(positions, per_output, WHAT)?, layer.out_channels, WHAT)
}

/// One operation per element of the pooling layer's input.
pub fn pool_flops(in_shape: TensorShape) -> Result<u64> {
    in_shape.elements().ok_or(Error::Overflow("pool flops"))
}

pub fn dense_flops(in_features: u64, out_features: u64, bias: bool) -> Result<u64> {
    dense_params(in_features, out_features, bias).map_err(|_| Error::Overflow("dense flops"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct LayerCost {
    pub params: u64,
    pub flops: u64,
    pub out_shape: TensorShape,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CostReport {
    pub per_layer: Vec<LayerCost>,
    pub total_params: u64,
    pub total_flops: u64,
}

/// Cost of a single layer given the tensor it consumes and produces.
pub fn layer_cost(layer: &Layer, input: TensorShape, output: TensorShape) -> Result<LayerCost> {
    let (params, flops) = match layer {
        Layer::Conv(c) => (
            conv_params(c, input.channels)?,
            conv_flops(output.spatial, c, input.channels)?,
        ),
        Layer::Pool(_) | Layer::GlobalAvgPool {} => (0, pool_flops(input)?),
        Layer::Flatten {} => (0, 0),
        Layer::Dense(d) => {
            let in_features = input.elements().ok_or(Error::Overflow("dense input"))?;
            (
                dense_params(in_features, d.out_features, d.has_bias)?,
                dense_flops(in_features, d.out_features, d.has_bias)?,
            )
        }
    };
    Ok(LayerCost {
        params,
        flops,
        out_shape: output,
    })
}

pub fn cost_report(net: &NetworkSpec) -> Result<CostReport> {
    let shapes = propagate_shapes(net)?;
    let mut per_layer = Vec::with_capacity(net.layers.len());
    let mut input = net.input;
    let (mut total_params, mut total_flops) = (0u64, 0u64);
    for (layer, &output) in net.layers.iter().zip(&shapes) {
        let cost = layer_cost(layer, input, output)?;
        total_params = add(total_params, cost.params, "total params")?;
        total_flops = add(total_flops, cost.flops, "total flops")?;
        per_layer.push(cost);
        input = output;
    }
    let report = CostReport {
        per_layer,
        total_params,
        total_flops,
    };
    debug_assert!(report.is_consistent());
    Ok(report)
}

impl CostReport {
    /// Totals equal the per-layer sums.
    pub fn is_consistent(&self) -> bool {
        let params: u128 = self.per_layer.iter().map(|c| c.params as u128).sum();
        let flops: u128 = self.per_layer.iter().map(|c| c.flops as u128).sum();
        params == self.total_params as u128 && flops == self.total_flops as u128
    }

    pub fn output_shape(&self) -> Option<TensorShape> {
        self.per_layer.last().map(|c| c.out_shape)
    }
}

/// Signed difference `after − before`.
pub fn signed_delta(before: u64, after: u64) -> Result<i64> {
    let d = after as i128 - before as i128;
    i64::try_from(d).map_err(|_| Error::Overflow("cost delta"))
}
