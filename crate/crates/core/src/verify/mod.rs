//! Independent re-derivation of every claim a [`SolutionCandidate`] makes.
//!
//! Nothing here calls into the solvers or the cost model: shapes and costs
//! are recomputed with separate straight-line `i128` arithmetic so a
//! transcription error on either side shows up as a disagreement.

mod oracle;

use std::fmt;

use serde::Serialize;

pub use oracle::oracle_enumerate;

use crate::arch::{check_structure, Layer, NetworkSpec, PoolKind, PoolLayer, TensorShape};
use crate::error::{Error, Result};
use crate::solvers::{Approach, BudgetMode, Solution, SolutionCandidate};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VerificationReport {
    pub scope_equality_holds: bool,
    pub whole_network_param_delta: i128,
    pub whole_network_flops_delta: i128,
    pub interface_shape_match: bool,
    pub violations: Vec<String>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.scope_equality_holds && self.interface_shape_match && self.violations.is_empty()
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "scope equality holds:   {}", self.scope_equality_holds)?;
        writeln!(f, "interface shape match:  {}", self.interface_shape_match)?;
        writeln!(f, "whole-network Δparams:  {}", self.whole_network_param_delta)?;
        writeln!(f, "whole-network ΔFLOPS:   {}", self.whole_network_flops_delta)?;
        if self.violations.is_empty() {
            write!(f, "violations:             none")
        } else {
            write!(f, "violations:")?;
            for v in &self.violations {
                write!(f, "\n  - {v}")?;
            }
            Ok(())
        }
    }
}

/// `floor((n + 2p − d(k − 1) − 1)/s) + 1`, `None` unless positive.
pub(crate) fn side(n: u64, k: u64, s: u64, p: u64, d: u64) -> Option<u64> {
    if s == 0 || k == 0 || d == 0 {
        return None;
    }
    let num = n as i128 + 2 * p as i128 - d as i128 * (k as i128 - 1) - 1;
    let m = num.div_euclid(s as i128) + 1;
    (m >= 1).then_some(m as u64)
}

/// One layer as seen by the oracle: input/output `(side, channels)` and cost.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Step {
    pub in_side: u64,
    pub in_ch: u64,
    pub out_side: u64,
    pub out_ch: u64,
    pub params: i128,
    pub flops: i128,
}

pub(crate) struct Walk {
    pub steps: Vec<Step>,
    pub params: i128,
    pub flops: i128,
}

/// Straight-line re-evaluation of a whole network.
pub(crate) fn walk(net: &NetworkSpec) -> Result<Walk> {
    let structural = check_structure(net);
    if !structural.is_valid() {
        return Err(Error::InvalidNetwork(structural));
    }
    let (mut n, mut ch) = (net.input.spatial, net.input.channels);
    let mut steps = Vec::with_capacity(net.layers.len());
    for (i, layer) in net.layers.iter().enumerate() {
        let geometry = || Error::InvalidGeometry {
            layer: i,
            input: TensorShape::new(n, ch),
            extent: 0,
            padding: 0,
        };
        let (ni, ci) = (n as i128, ch as i128);
        let step = match *layer {
            Layer::Conv(c) => {
                let m = side(n, c.kernel, c.stride, c.padding, c.dilation).ok_or_else(geometry)?;
                let (k, kk, mi) = (c.out_channels as i128, c.kernel as i128, m as i128);
                let b = c.has_bias as i128;
                Step {
                    in_side: n,
                    in_ch: ch,
                    out_side: m,
                    out_ch: c.out_channels,
                    params: k * kk * kk * ci + b * k,
                    flops: mi * mi * kk * kk * ci * k + b * mi * mi * k,
                }
            }
            Layer::Pool(p) => {
                let m = side(n, p.kernel, p.stride, p.padding, 1).ok_or_else(geometry)?;
                Step {
                    in_side: n,
                    in_ch: ch,
                    out_side: m,
                    out_ch: ch,
                    params: 0,
                    flops: ni * ni * ci,
                }
            }
            Layer::GlobalAvgPool {} => Step {
                in_side: n,
                in_ch: ch,
                out_side: 1,
                out_ch: ch,
                params: 0,
                flops: ni * ni * ci,
            },
            Layer::Flatten {} => Step {
                in_side: n,
                in_ch: ch,
                out_side: 1,
                out_ch: n * n * ch,
                params: 0,
                flops: 0,
            },
            Layer::Dense(d) => {
                let inputs = ni * ni * ci;
                let o = d.out_features as i128;
                let cost = inputs * o + if d.has_bias { o } else { 0 };
                Step {
                    in_side: n,
                    in_ch: ch,
                    out_side: 1,
                    out_ch: d.out_features,
                    params: cost,
                    flops: cost,
                }
            }
        };
        n = step.out_side;
        ch = step.out_ch;
        steps.push(step);
    }
    let params = steps.iter().map(|s| s.params).sum();
    let flops = steps.iter().map(|s| s.flops).sum();
    Ok(Walk { steps, params, flops })
}

/// The network the candidate must be compared against.
fn expected_baseline(original: &NetworkSpec, approach: Approach) -> NetworkSpec {
    let mut net = original.clone();
    if approach == Approach::I {
        for layer in net.layers.iter_mut() {
            if matches!(layer, Layer::Flatten {}) {
                *layer = Layer::GlobalAvgPool {};
            }
        }
    }
    net
}

fn conv2_position(net: &NetworkSpec) -> Option<usize> {
    (1..net.layers.len())
        .find(|&i| !matches!(net.layers[i], Layer::Pool(_)))
        .filter(|&i| matches!(net.layers[i], Layer::Conv(_)))
}

/// Rebuilds the modified network from the baseline and the solution tuple.
fn rebuild(baseline: &NetworkSpec, solution: &Solution, new_resolution: u64) -> Option<NetworkSpec> {
    let mut net = baseline.clone();
    net.input.spatial = new_resolution;
    match *solution {
        Solution::FcHead { fc1_width } => {
            let b = net.layers.iter().position(|l| matches!(l, Layer::GlobalAvgPool {}))?;
            match net.layers.get_mut(b + 1)? {
                Layer::Dense(d) => d.out_features = fc1_width,
                _ => return None,
            }
        }
        Solution::DilatedConv1 {
            padding,
            stride,
            dilation,
        } => match net.layers.first_mut()? {
            Layer::Conv(c) => {
                c.padding = padding;
                c.stride = stride;
                c.dilation = dilation;
            }
            _ => return None,
        },
        Solution::PooledConv1 {
            filters,
            kernel,
            padding,
            stride,
            pool_kernel,
            pool_padding,
            pool_stride,
        } => {
            match net.layers.first_mut()? {
                Layer::Conv(c) => {
                    c.out_channels = filters;
                    c.kernel = kernel;
                    c.padding = padding;
                    c.stride = stride;
                }
                _ => return None,
            }
            net.layers.insert(
                1,
                Layer::Pool(PoolLayer {
                    kind: PoolKind::Avg,
                    kernel: pool_kernel,
                    stride: pool_stride,
                    padding: pool_padding,
                }),
            );
        }
        Solution::FirstTwoConvs {
            filters,
            kernel,
            padding,
            stride,
            conv2_kernel,
            conv2_padding,
            conv2_stride,
        } => {
            let j = conv2_position(&net)?;
            match net.layers.first_mut()? {
                Layer::Conv(c) => {
                    c.out_channels = filters;
                    c.kernel = kernel;
                    c.padding = padding;
                    c.stride = stride;
                }
                _ => return None,
            }
            match &mut net.layers[j] {
                Layer::Conv(c) => {
                    c.kernel = conv2_kernel;
                    c.padding = conv2_padding;
                    c.stride = conv2_stride;
                }
                _ => return None,
            }
        }
    }
    Some(net)
}

fn same_structure(a: &NetworkSpec, b: &NetworkSpec) -> bool {
    a.input == b.input && a.layers == b.layers
}

/// Checks every claim `candidate` makes about `original`.
pub fn verify_candidate(original: &NetworkSpec, candidate: &SolutionCandidate) -> Result<VerificationReport> {
    let baseline = expected_baseline(original, candidate.approach);
    let base = walk(&baseline)?;
    let modified = &candidate.modified_net;
    let new = walk(modified)?;

    let mut violations = Vec::new();
    let param_delta = new.params - base.params;
    let flops_delta = new.flops - base.flops;

    if !same_structure(&candidate.baseline, &baseline) {
        violations.push("recorded baseline differs from the original network".to_string());
    }
    if candidate.solution.approach() != candidate.approach {
        violations.push(format!(
            "solution tuple belongs to approach {}, candidate claims approach {}",
            candidate.solution.approach(),
            candidate.approach
        ));
    }
    if candidate.scope != candidate.approach.scope() {
        violations.push(format!("scope {:?} does not match approach {}", candidate.scope, candidate.approach));
    }
    if modified.input.spatial != candidate.new_resolution {
        violations.push(format!(
            "modified input side {} differs from declared resolution {}",
            modified.input.spatial, candidate.new_resolution
        ));
    }
    if modified.input.channels != baseline.input.channels {
        violations.push("input depth changed".to_string());
    }
    if candidate.new_resolution < baseline.input.spatial {
        violations.push("resolution was lowered".to_string());
    }
    match rebuild(&baseline, &candidate.solution, candidate.new_resolution) {
        Some(expected) if same_structure(&expected, modified) => {}
        _ => violations.push(format!(
            "modified network does not match solution tuple ({})",
            candidate.solution
        )),
    }
    if i128::from(candidate.deltas.params) != param_delta {
        violations.push(format!(
            "recorded parameter delta {} differs from recomputed {}",
            candidate.deltas.params, param_delta
        ));
    }
    if i128::from(candidate.deltas.flops) != flops_delta {
        violations.push(format!(
            "recorded FLOPS delta {} differs from recomputed {}",
            candidate.deltas.flops, flops_delta
        ));
    }

    let (scope_equality_holds, interface_shape_match) = match candidate.approach {
        Approach::I => check_fc_head(&baseline, &base, modified, &new, candidate.budget_mode, &mut violations),
        Approach::II => check_dilated(&baseline, &base, modified, &new, &mut violations),
        Approach::III => check_pooled(&baseline, &base, modified, &new, candidate.budget_mode, &mut violations),
        Approach::IV => check_two_convs(&baseline, &base, modified, &new, candidate.budget_mode, &mut violations),
    };

    Ok(VerificationReport {
        scope_equality_holds,
        whole_network_param_delta: param_delta,
        whole_network_flops_delta: flops_delta,
        interface_shape_match,
        violations,
    })
}

fn equality(label: &str, before: i128, after: i128, violations: &mut Vec<String>) -> bool {
    if before == after {
        true
    } else {
        violations.push(format!("{label} equality violated: original {before}, modified {after}"));
        false
    }
}

fn conv_at(net: &NetworkSpec, i: usize) -> Option<crate::arch::ConvLayer> {
    net.layers.get(i).and_then(|l| l.as_conv()).copied()
}

fn check_fc_head(
    baseline: &NetworkSpec,
    base: &Walk,
    modified: &NetworkSpec,
    new: &Walk,
    mode: BudgetMode,
    violations: &mut Vec<String>,
) -> (bool, bool) {
    let gap = |net: &NetworkSpec| net.layers.iter().position(|l| matches!(l, Layer::GlobalAvgPool {}));
    let (Some(b0), Some(b1)) = (gap(baseline), gap(modified)) else {
        violations.push("fc head: no global average pooling boundary".to_string());
        return (false, false);
    };
    if b0 != b1 || b0 + 2 >= base.steps.len() || b1 + 2 >= new.steps.len() {
        violations.push("fc head: layout differs from the original".to_string());
        return (false, false);
    }
    let sum = |w: &Walk, b: usize, f: fn(&Step) -> i128| (b..=b + 2).map(|i| f(&w.steps[i])).sum::<i128>();
    let holds = match mode {
        BudgetMode::Params => equality(
            "fc-head parameter",
            sum(base, b0, |s| s.params),
            sum(new, b1, |s| s.params),
            violations,
        ),
        BudgetMode::Flops => equality(
            "fc-head FLOPS (pooling + fc1 + fc2)",
            sum(base, b0, |s| s.flops),
            sum(new, b1, |s| s.flops),
            violations,
        ),
    };
    let (s0, s1) = (base.steps[b0], new.steps[b1]);
    let interface = (s0.out_side, s0.out_ch) == (s1.out_side, s1.out_ch);
    if !interface {
        violations.push("fc head: pooled feature vector length changed".to_string());
    }
    (holds, interface)
}

fn check_dilated(
    baseline: &NetworkSpec,
    base: &Walk,
    modified: &NetworkSpec,
    new: &Walk,
    violations: &mut Vec<String>,
) -> (bool, bool) {
    let (Some(c0), Some(c1)) = (conv_at(baseline, 0), conv_at(modified, 0)) else {
        violations.push("conv1 missing".to_string());
        return (false, false);
    };
    if (c0.kernel, c0.out_channels, c0.has_bias) != (c1.kernel, c1.out_channels, c1.has_bias) {
        violations.push("dilated conv1 must keep kernel size, filter count and bias".to_string());
    }
    let params = equality("conv1 parameter", base.steps[0].params, new.steps[0].params, violations);
    let flops = equality("conv1 FLOPS", base.steps[0].flops, new.steps[0].flops, violations);
    let (s0, s1) = (base.steps[0], new.steps[0]);
    let interface = (s0.out_side, s0.out_ch) == (s1.out_side, s1.out_ch);
    if !interface {
        violations.push(format!(
            "conv1 output side changed: original {}, modified {}",
            s0.out_side, s1.out_side
        ));
    }
    (params && flops, interface)
}

fn check_pooled(
    baseline: &NetworkSpec,
    base: &Walk,
    modified: &NetworkSpec,
    new: &Walk,
    mode: BudgetMode,
    violations: &mut Vec<String>,
) -> (bool, bool) {
    let (Some(c0), Some(c1)) = (conv_at(baseline, 0), conv_at(modified, 0)) else {
        violations.push("conv1 missing".to_string());
        return (false, false);
    };
    if !matches!(modified.layers.get(1), Some(Layer::Pool(p)) if p.kind == PoolKind::Avg) || new.steps.len() < 2 {
        violations.push("no average pooling layer after conv1".to_string());
        return (false, false);
    }
    let mut holds = true;
    if c1.kernel <= c0.kernel {
        violations.push(format!("conv1 kernel must grow (C1'={} ≤ C1={})", c1.kernel, c0.kernel));
        holds = false;
    }
    holds &= match mode {
        BudgetMode::Params => equality("conv1 parameter", base.steps[0].params, new.steps[0].params, violations),
        BudgetMode::Flops => equality(
            "conv1+pool FLOPS",
            base.steps[0].flops,
            new.steps[0].flops + new.steps[1].flops,
            violations,
        ),
    };
    let interface = base.steps[0].out_side == new.steps[1].out_side;
    if !interface {
        violations.push(format!(
            "pooled side {} differs from original conv1 side {}",
            new.steps[1].out_side, base.steps[0].out_side
        ));
    }
    (holds, interface)
}

fn check_two_convs(
    baseline: &NetworkSpec,
    base: &Walk,
    modified: &NetworkSpec,
    new: &Walk,
    mode: BudgetMode,
    violations: &mut Vec<String>,
) -> (bool, bool) {
    let (Some(j0), Some(j1)) = (conv2_position(baseline), conv2_position(modified)) else {
        violations.push("conv2 missing".to_string());
        return (false, false);
    };
    let (Some(a0), Some(a1), Some(b0), Some(b1)) =
        (conv_at(baseline, 0), conv_at(modified, 0), conv_at(baseline, j0), conv_at(modified, j1))
    else {
        violations.push("conv1 missing".to_string());
        return (false, false);
    };
    let mut holds = true;
    if a1.kernel <= a0.kernel {
        violations.push(format!("conv1 kernel must grow (C1'={} ≤ C1={})", a1.kernel, a0.kernel));
        holds = false;
    }
    if b1.out_channels != b0.out_channels {
        violations.push(format!(
            "conv2 filter count must stay {} (found {})",
            b0.out_channels, b1.out_channels
        ));
        holds = false;
    }
    holds &= match mode {
        BudgetMode::Params => equality(
            "first-two-conv parameter",
            base.steps[0].params + base.steps[j0].params,
            new.steps[0].params + new.steps[j1].params,
            violations,
        ),
        BudgetMode::Flops => equality(
            "first-two-conv FLOPS",
            base.steps[0].flops + base.steps[j0].flops,
            new.steps[0].flops + new.steps[j1].flops,
            violations,
        ),
    };
    let (s0, s1) = (base.steps[j0], new.steps[j1]);
    let interface = (s0.out_side, s0.out_ch) == (s1.out_side, s1.out_ch);
    if !interface {
        violations.push(format!(
            "conv2 output {}×{}×{} differs from original {}×{}×{}",
            s1.out_side, s1.out_side, s1.out_ch, s0.out_side, s0.out_side, s0.out_ch
        ));
    }
    (holds, interface)
}
