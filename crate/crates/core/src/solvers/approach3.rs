//! Approach III: a larger conv1 kernel with fewer filters, followed by a new
//! average-pooling layer that brings the map back to the original side `M₁`.
//!
//! Params mode keeps conv1 parameters equal (`K₁C₁²D = K₁'C₁'²D`), FLOPS
//! mode keeps conv1 FLOPS plus the new pooling FLOPS equal
//! (`M₁²C₁²DK₁ = M₁'²C₁'²DK₁' + M₁'²K₁'`). In both cases `K₁'` is the only
//! unknown once `C₁'`, `P₁'`, `S₁'` are fixed, so it is solved exactly.
//!
//! Layers after the pool see `K₁'` channels instead of `K₁`; their costs
//! move accordingly and show up in the candidate's whole-network deltas.

use super::{check_resolution, exact_quotient, first_conv, sorted, Approach, BudgetMode, EnumRanges, Finisher, Solution, SolutionCandidate};
use crate::arch::{propagate_shapes, window_output_size, ConvLayer, Layer, NetworkSpec, PoolLayer};
use crate::cost::{conv_flops, conv_params};
use crate::error::{Error, Result};

pub fn solve_approach3(
    net: &NetworkSpec,
    new_resolution: u64,
    ranges: &EnumRanges,
    mode: BudgetMode,
) -> Result<Vec<SolutionCandidate>> {
    ranges.validate()?;
    check_resolution(net, new_resolution)?;
    let conv1 = first_conv(net)?;
    let depth = net.input.channels;
    let m1 = propagate_shapes(net)?[0].spatial;
    let target = match mode {
        BudgetMode::Params => conv_params(&conv1, depth)?,
        BudgetMode::Flops => conv_flops(m1, &conv1, depth)?,
    };
    let finisher = Finisher::new(Approach::III, mode, new_resolution, net)?;
    let overflow = || Error::Overflow("conv1 per-filter cost");

    let mut out = Vec::new();
    for kernel in ranges.kernel.iter().filter(|&k| k > conv1.kernel) {
        // cost of one conv1 filter, excluding the output-position factor
        let window = kernel
            .checked_mul(kernel)
            .and_then(|k2| k2.checked_mul(depth))
            .and_then(|w| w.checked_add(conv1.has_bias as u64))
            .ok_or_else(overflow)?;
        for padding in ranges.padding.iter() {
            for stride in ranges.stride.iter() {
                let Some(m1p) = window_output_size(new_resolution, kernel, stride, padding, conv1.dilation) else {
                    continue;
                };
                let unit = match mode {
                    BudgetMode::Params => window,
                    // conv1 output positions plus one pooling op per pool-input element
                    BudgetMode::Flops => m1p
                        .checked_mul(m1p)
                        .and_then(|pos| pos.checked_mul(window + 1))
                        .ok_or_else(overflow)?,
                };
                let Some(filters) = exact_quotient(target, 0, unit) else {
                    continue;
                };
                for pool_kernel in ranges.kernel.iter() {
                    for pool_padding in ranges.padding.iter() {
                        for pool_stride in ranges.stride.iter() {
                            if window_output_size(m1p, pool_kernel, pool_stride, pool_padding, 1) != Some(m1) {
                                continue;
                            }
                            let mut modified = net.with_input_spatial(new_resolution);
                            modified.layers[0] = ConvLayer {
                                out_channels: filters,
                                kernel,
                                stride,
                                padding,
                                ..conv1
                            }
                            .into();
                            modified
                                .layers
                                .insert(1, Layer::Pool(PoolLayer::avg(pool_kernel, pool_stride, pool_padding)));
                            let solution = Solution::PooledConv1 {
                                filters,
                                kernel,
                                padding,
                                stride,
                                pool_kernel,
                                pool_padding,
                                pool_stride,
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
