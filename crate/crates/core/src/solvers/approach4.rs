//! Approach IV: re-shape the first two conv layers with no added layers.
//!
//! conv1 gets a larger kernel `C₁' > C₁` and `K₁'` filters; conv2 keeps its
//! `K₂` filters but gets a new kernel, stride and padding so that its output
//! side `M₂` is unchanged. Params mode keeps
//! `K₁C₁²D + K₂C₂²K₁` equal, FLOPS mode keeps
//! `DM₁²C₁²K₁ + M₂²K₁C₂²K₂` equal. Any pooling layers between conv1 and
//! conv2 are kept and propagated through, but are outside the equality.

use super::{check_resolution, exact_quotient, first_conv, sorted, Approach, BudgetMode, EnumRanges, Finisher, Solution, SolutionCandidate};
use crate::arch::{layer_output_shape, propagate_shapes, window_output_size, ConvLayer, Layer, NetworkSpec, TensorShape};
use crate::cost::{conv_flops, conv_params};
use crate::error::{Error, Result};

/// Index of conv2: the first non-pooling layer after conv1, which must be a conv.
pub(crate) fn second_conv_index(net: &NetworkSpec) -> Result<usize> {
    let idx = net
        .layers
        .iter()
        .enumerate()
        .skip(1)
        .find(|(_, l)| !matches!(l, Layer::Pool(_)))
        .map(|(i, _)| i);
    match idx.map(|i| (i, &net.layers[i])) {
        Some((i, Layer::Conv(_))) => Ok(i),
        Some((_, other)) => Err(Error::StructureMismatch(format!(
            "second non-pooling layer must be conv, found {}",
            other.kind_name()
        ))),
        None => Err(Error::StructureMismatch("network has a single conv layer".into())),
    }
}

pub fn solve_approach4(
    net: &NetworkSpec,
    new_resolution: u64,
    ranges: &EnumRanges,
    mode: BudgetMode,
) -> Result<Vec<SolutionCandidate>> {
    ranges.validate()?;
    check_resolution(net, new_resolution)?;
    let conv1 = first_conv(net)?;
    let j = second_conv_index(net)?;
    let conv2 = *net.layers[j].as_conv().expect("conv2 located");
    let depth = net.input.channels;
    let k2 = conv2.out_channels;

    let shapes = propagate_shapes(net)?;
    let m1 = shapes[0].spatial;
    let m2 = shapes[j].spatial;
    let target = match mode {
        BudgetMode::Params => conv_params(&conv1, depth)?
            .checked_add(conv_params(&conv2, conv1.out_channels)?),
        BudgetMode::Flops => conv_flops(m1, &conv1, depth)?
            .checked_add(conv_flops(m2, &conv2, conv1.out_channels)?),
    }
    .ok_or(Error::Overflow("first two conv budget"))?;
    let finisher = Finisher::new(Approach::IV, mode, new_resolution, net)?;

    let overflow = || Error::Overflow("first two conv per-filter cost");
    let sq = |x: u64| x.checked_mul(x).ok_or_else(overflow);
    let b1 = conv1.has_bias as u64;
    let b2 = conv2.has_bias as u64;

    let mut out = Vec::new();
    for kernel in ranges.kernel.iter().filter(|&k| k > conv1.kernel) {
        let window1 = sq(kernel)?
            .checked_mul(depth)
            .and_then(|w| w.checked_add(b1))
            .ok_or_else(overflow)?;
        for padding in ranges.padding.iter() {
            for stride in ranges.stride.iter() {
                let Some(m1p) = window_output_size(new_resolution, kernel, stride, padding, conv1.dilation) else {
                    continue;
                };
                // carry the new conv1 output through any pooling before conv2
                let mut feed = Some(TensorShape::new(m1p, conv1.out_channels));
                for (i, layer) in net.layers.iter().enumerate().take(j).skip(1) {
                    feed = feed.and_then(|s| layer_output_shape(i, layer, s).ok());
                }
                let Some(feed) = feed else {
                    continue;
                };
                for conv2_kernel in ranges.kernel.iter() {
                    for conv2_padding in ranges.padding.iter() {
                        for conv2_stride in ranges.stride.iter() {
                            let m2p = window_output_size(
                                feed.spatial,
                                conv2_kernel,
                                conv2_stride,
                                conv2_padding,
                                conv2.dilation,
                            );
                            if m2p != Some(m2) {
                                continue;
                            }
                            // budget = K₁'·unit + offset
                            let conv2_per_k1 = sq(conv2_kernel)?.checked_mul(k2).ok_or_else(overflow)?;
                            let (unit, offset) = match mode {
                                BudgetMode::Params => (window1.checked_add(conv2_per_k1), k2 * b2),
                                BudgetMode::Flops => (
                                    sq(m1p)?
                                        .checked_mul(window1)
                                        .zip(sq(m2)?.checked_mul(conv2_per_k1))
                                        .and_then(|(a, b)| a.checked_add(b)),
                                    sq(m2)? * k2 * b2,
                                ),
                            };
                            let unit = unit.ok_or_else(overflow)?;
                            let Some(filters) = exact_quotient(target, offset, unit) else {
                                continue;
                            };

                            let mut modified = net.with_input_spatial(new_resolution);
                            modified.layers[0] = ConvLayer {
                                out_channels: filters,
                                kernel,
                                stride,
                                padding,
                                ..conv1
                            }
                            .into();
                            modified.layers[j] = ConvLayer {
                                kernel: conv2_kernel,
                                stride: conv2_stride,
                                padding: conv2_padding,
                                ..conv2
                            }
                            .into();
                            let solution = Solution::FirstTwoConvs {
                                filters,
                                kernel,
                                padding,
                                stride,
                                conv2_kernel,
                                conv2_padding,
                                conv2_stride,
                            };
                            out.push(finisher.finish(solution, modified)?);
                        }
                    }
                }
            }
        }
    }
    Ok(sorted(out))
}
