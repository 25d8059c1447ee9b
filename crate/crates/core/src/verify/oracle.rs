//! Naive nested-loop enumeration of every solution tuple.
//!
//! No algebra: unknown filter counts and fc widths are scanned upward from 1
//! until the (strictly increasing) budget side overshoots the target, and
//! each equality is evaluated by brute force.

use std::collections::BTreeSet;

use super::{conv2_position, side, walk};
use crate::arch::{Layer, NetworkSpec};
use crate::error::{Error, Result};
use crate::solvers::{Approach, BudgetMode, EnumRanges, Solution};

/// Every solution tuple of `approach` for `net` at `new_resolution`.
pub fn oracle_enumerate(
    net: &NetworkSpec,
    new_resolution: u64,
    ranges: &EnumRanges,
    approach: Approach,
    mode: BudgetMode,
) -> Result<BTreeSet<Solution>> {
    match approach {
        Approach::I => fc_head(net, new_resolution, mode),
        Approach::II => dilated(net, new_resolution, ranges),
        Approach::III => pooled(net, new_resolution, ranges, mode),
        Approach::IV => two_convs(net, new_resolution, ranges, mode),
    }
}

fn mismatch(msg: &str) -> Error {
    Error::StructureMismatch(msg.to_string())
}

/// Scans `k = 1, 2, …` while `cost(k) ≤ target`, collecting exact hits.
fn scan(target: i128, cost: impl Fn(i128) -> i128) -> Vec<u64> {
    let mut hits = Vec::new();
    let mut k = 1i128;
    loop {
        let c = cost(k);
        if c > target {
            break;
        }
        if c == target {
            hits.push(k as u64);
        }
        k += 1;
    }
    hits
}

fn fc_head(net: &NetworkSpec, n_new: u64, mode: BudgetMode) -> Result<BTreeSet<Solution>> {
    let b = net
        .layers
        .iter()
        .position(|l| matches!(l, Layer::Flatten {} | Layer::GlobalAvgPool {}))
        .ok_or_else(|| mismatch("no boundary"))?;
    let (Some(Layer::Dense(fc1)), Some(Layer::Dense(fc2))) = (net.layers.get(b + 1), net.layers.get(b + 2)) else {
        return Err(mismatch("need two dense layers after the boundary"));
    };
    let mut gap = net.clone();
    gap.layers[b] = Layer::GlobalAvgPool {};
    let before = walk(&gap)?;
    let mut wide = gap.clone();
    wide.input.spatial = n_new;
    let after = walk(&wide)?;

    let u = before.steps[b].in_side as i128;
    let u_new = after.steps[b].in_side as i128;
    let v = before.steps[b].in_ch as i128;
    let z1 = fc1.out_features as i128;
    let z2 = fc2.out_features as i128;
    let (b1, b2) = (fc1.has_bias as i128, fc2.has_bias as i128);

    let hits = match mode {
        BudgetMode::Params => {
            let target = v * z1 + b1 * z1 + z1 * z2 + b2 * z2;
            scan(target, |z| v * z + b1 * z + z * z2 + b2 * z2)
        }
        BudgetMode::Flops => {
            let target = u * u * v + v * z1 + b1 * z1 + z1 * z2 + b2 * z2;
            scan(target, |z| u_new * u_new * v + v * z + b1 * z + z * z2 + b2 * z2)
        }
    };
    Ok(hits.into_iter().map(|fc1_width| Solution::FcHead { fc1_width }).collect())
}

fn first_conv(net: &NetworkSpec) -> Result<crate::arch::ConvLayer> {
    match net.layers.first() {
        Some(Layer::Conv(c)) => Ok(*c),
        _ => Err(mismatch("first layer must be conv")),
    }
}

fn dilated(net: &NetworkSpec, n_new: u64, ranges: &EnumRanges) -> Result<BTreeSet<Solution>> {
    let c1 = first_conv(net)?;
    if c1.dilation != 1 {
        return Err(mismatch("conv1 is already dilated"));
    }
    let n = net.input.spatial;
    let m1 = side(n, c1.kernel, c1.stride, c1.padding, 1).ok_or_else(|| mismatch("conv1 does not fit"))?;
    let mut out = BTreeSet::new();
    for padding in ranges.padding.iter() {
        for stride in ranges.stride.iter() {
            for dilation in ranges.dilation.iter() {
                if side(n_new, c1.kernel, stride, padding, dilation) == Some(m1) {
                    out.insert(Solution::DilatedConv1 {
                        padding,
                        stride,
                        dilation,
                    });
                }
            }
        }
    }
    Ok(out)
}

fn pooled(net: &NetworkSpec, n_new: u64, ranges: &EnumRanges, mode: BudgetMode) -> Result<BTreeSet<Solution>> {
    let c1 = first_conv(net)?;
    let base = walk(net)?;
    let d = net.input.channels as i128;
    let m1 = base.steps[0].out_side;
    let (k1, cc1, mm1) = (c1.out_channels as i128, c1.kernel as i128, m1 as i128);
    let b = c1.has_bias as i128;
    let target = match mode {
        BudgetMode::Params => k1 * cc1 * cc1 * d + b * k1,
        BudgetMode::Flops => mm1 * mm1 * cc1 * cc1 * d * k1 + b * mm1 * mm1 * k1,
    };

    let mut out = BTreeSet::new();
    for kernel in ranges.kernel.iter() {
        if kernel <= c1.kernel {
            continue;
        }
        for padding in ranges.padding.iter() {
            for stride in ranges.stride.iter() {
                let Some(m1p) = side(n_new, kernel, stride, padding, c1.dilation) else {
                    continue;
                };
                let (c, m) = (kernel as i128, m1p as i128);
                let filter_hits = match mode {
                    BudgetMode::Params => scan(target, |k| k * c * c * d + b * k),
                    BudgetMode::Flops => scan(target, |k| m * m * c * c * d * k + b * m * m * k + m * m * k),
                };
                for filters in filter_hits {
                    for pool_kernel in ranges.kernel.iter() {
                        for pool_padding in ranges.padding.iter() {
                            for pool_stride in ranges.stride.iter() {
                                if side(m1p, pool_kernel, pool_stride, pool_padding, 1) == Some(m1) {
                                    out.insert(Solution::PooledConv1 {
                                        filters,
                                        kernel,
                                        padding,
                                        stride,
                                        pool_kernel,
                                        pool_padding,
                                        pool_stride,
                                    });
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

fn two_convs(net: &NetworkSpec, n_new: u64, ranges: &EnumRanges, mode: BudgetMode) -> Result<BTreeSet<Solution>> {
    let c1 = first_conv(net)?;
    let j = conv2_position(net).ok_or_else(|| mismatch("conv2 missing"))?;
    let Some(Layer::Conv(c2)) = net.layers.get(j).copied() else {
        return Err(mismatch("conv2 missing"));
    };
    let base = walk(net)?;
    let d = net.input.channels as i128;
    let (m1, m2) = (base.steps[0].out_side as i128, base.steps[j].out_side);
    let mm2 = m2 as i128;
    let (k1, cc1, k2, cc2) = (
        c1.out_channels as i128,
        c1.kernel as i128,
        c2.out_channels as i128,
        c2.kernel as i128,
    );
    let (b1, b2) = (c1.has_bias as i128, c2.has_bias as i128);
    let target = match mode {
        BudgetMode::Params => k1 * cc1 * cc1 * d + b1 * k1 + k2 * cc2 * cc2 * k1 + b2 * k2,
        BudgetMode::Flops => {
            d * m1 * m1 * cc1 * cc1 * k1 + b1 * m1 * m1 * k1 + mm2 * mm2 * k1 * cc2 * cc2 * k2 + b2 * mm2 * mm2 * k2
        }
    };

    let mut out = BTreeSet::new();
    for kernel in ranges.kernel.iter() {
        if kernel <= c1.kernel {
            continue;
        }
        for padding in ranges.padding.iter() {
            for stride in ranges.stride.iter() {
                let Some(m1p) = side(n_new, kernel, stride, padding, c1.dilation) else {
                    continue;
                };
                // pooling layers between conv1 and conv2
                let mut feed = Some(m1p);
                for layer in &net.layers[1..j] {
                    if let Layer::Pool(p) = layer {
                        feed = feed.and_then(|x| side(x, p.kernel, p.stride, p.padding, 1));
                    }
                }
                let Some(feed) = feed else {
                    continue;
                };
                for conv2_kernel in ranges.kernel.iter() {
                    for conv2_padding in ranges.padding.iter() {
                        for conv2_stride in ranges.stride.iter() {
                            if side(feed, conv2_kernel, conv2_stride, conv2_padding, c2.dilation) != Some(m2) {
                                continue;
                            }
                            let (c, cp, m) = (kernel as i128, conv2_kernel as i128, m1p as i128);
                            let hits = match mode {
                                BudgetMode::Params => {
                                    scan(target, |k| k * c * c * d + b1 * k + k2 * cp * cp * k + b2 * k2)
                                }
                                BudgetMode::Flops => scan(target, |k| {
                                    d * m * m * c * c * k + b1 * m * m * k + mm2 * mm2 * k * cp * cp * k2 + b2 * mm2 * mm2 * k2
                                }),
                            };
                            for filters in hits {
                                out.insert(Solution::FirstTwoConvs {
                                    filters,
                                    kernel,
                                    padding,
                                    stride,
                                    conv2_kernel,
                                    conv2_padding,
                                    conv2_stride,
                                });
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}
