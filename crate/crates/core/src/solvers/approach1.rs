//! Approach I: global average pooling in front of the fc head.
//!
//! With a `GlobalAvgPool` boundary the fc head sees `V₁` features at every
//! resolution, so parameters are unchanged. In FLOPS mode the width `Z₁` of
//! the first dense layer is re-solved so that pooling + fc1 + fc2 FLOPS stay
//! equal:
//!
//! ```text
//! U₁²V₁ + V₁Z₁ + Z₁Z₂ = U₁'²V₁ + V₁Z₁' + Z₁'Z₂
//! ```
//!
//! (plus `Z₁`/`Z₂` terms for layers with bias).

use super::{check_resolution, exact_quotient, sorted, Approach, BudgetMode, Finisher, Solution, SolutionCandidate};
use crate::arch::{propagate_shapes, DenseLayer, Layer, NetworkSpec, TensorShape};
use crate::cost::{dense_flops, pool_flops};
use crate::error::{Error, Result};

struct Head {
    boundary: usize,
    fc1: DenseLayer,
    fc2: DenseLayer,
}

fn locate_head(net: &NetworkSpec) -> Result<Head> {
    let boundary = net
        .boundary_index()
        .ok_or_else(|| Error::StructureMismatch("no flatten/global_avg_pool boundary".into()))?;
    let dense = |i: usize| net.layers.get(i).and_then(Layer::as_dense).copied();
    match (dense(boundary + 1), dense(boundary + 2)) {
        (Some(fc1), Some(fc2)) => Ok(Head { boundary, fc1, fc2 }),
        _ => Err(Error::StructureMismatch(
            "boundary must be followed by at least two dense layers".into(),
        )),
    }
}

/// The original network with its boundary replaced by global average pooling.
pub fn gap_reference(net: &NetworkSpec) -> Result<NetworkSpec> {
    let head = locate_head(net)?;
    let mut reference = net.clone();
    reference.layers[head.boundary] = Layer::GLOBAL_AVG_POOL;
    Ok(reference)
}

fn boundary_input(net: &NetworkSpec, shapes: &[TensorShape], boundary: usize) -> TensorShape {
    if boundary == 0 {
        net.input
    } else {
        shapes[boundary - 1]
    }
}

pub fn solve_approach1(
    net: &NetworkSpec,
    new_resolution: u64,
    mode: BudgetMode,
) -> Result<Vec<SolutionCandidate>> {
    check_resolution(net, new_resolution)?;
    let reference = gap_reference(net)?;
    let Head { boundary, fc1, fc2 } = locate_head(&reference)?;
    let finisher = Finisher::new(Approach::I, mode, new_resolution, &reference)?;
    let widened = reference.with_input_spatial(new_resolution);

    let fc1_width = match mode {
        BudgetMode::Params => fc1.out_features,
        BudgetMode::Flops => {
            let before = boundary_input(&reference, &propagate_shapes(&reference)?, boundary);
            let after = boundary_input(&widened, &propagate_shapes(&widened)?, boundary);
            let v1 = before.channels;
            let z2 = fc2.out_features;

            let target = [
                pool_flops(before)?,
                dense_flops(v1, fc1.out_features, fc1.has_bias)?,
                dense_flops(fc1.out_features, z2, fc2.has_bias)?,
            ]
            .into_iter()
            .try_fold(0u64, |acc, x| acc.checked_add(x))
            .ok_or(Error::Overflow("fc head flops"))?;

            // new head flops = U₁'²V₁ + b₂·Z₂ + Z₁'·(V₁ + b₁ + Z₂)
            let offset = pool_flops(after)?
                .checked_add(if fc2.has_bias { z2 } else { 0 })
                .ok_or(Error::Overflow("fc head flops"))?;
            let unit = v1 + fc1.has_bias as u64 + z2;
            match exact_quotient(target, offset, unit) {
                Some(z) => z,
                None => return Ok(Vec::new()),
            }
        }
    };

    let mut modified = widened;
    modified.layers[boundary + 1] = DenseLayer {
        out_features: fc1_width,
        ..fc1
    }
    .into();
    let candidate = finisher.finish(Solution::FcHead { fc1_width }, modified)?;
    Ok(sorted(vec![candidate]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arch::{ConvLayer, TensorShape};
    use crate::cost::cost_report;

    /// 1×1 conv producing `v1` maps of side `u1`, then GAP → fc(z1) → fc(z2).
    fn head_net(u1: u64, v1: u64, z1: u64, z2: u64) -> NetworkSpec {
        NetworkSpec::new(
            "head",
            TensorShape::new(u1, 1),
            vec![
                ConvLayer::new(v1, 1).into(),
                Layer::GLOBAL_AVG_POOL,
                DenseLayer::new(z1).into(),
                DenseLayer::new(z2).into(),
            ],
        )
    }

    #[test]
    fn flops_mode_solves_fc1_width() {
        let out = solve_approach1(&head_net(2, 10, 100, 10), 4, BudgetMode::Flops).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].solution, Solution::FcHead { fc1_width: 94 });
        // both sides of the head equation
        let (u1, u1p, v1, z1, z1p, z2) = (2u64, 4u64, 10u64, 100u64, 94u64, 10u64);
        assert_eq!(u1 * u1 * v1 + v1 * z1 + z1 * z2, 2040);
        assert_eq!(u1p * u1p * v1 + v1 * z1p + z1p * z2, 2040);
    }

    #[test]
    fn unchanged_pool_input_keeps_width() {
        let out = solve_approach1(&head_net(4, 10, 100, 10), 4, BudgetMode::Flops).unwrap();
        assert_eq!(out[0].solution, Solution::FcHead { fc1_width: 100 });
        assert_eq!(out[0].deltas.flops, 0);
    }

    #[test]
    fn non_integer_width_gives_no_solution() {
        // 256 + 1600 + 1000 − 1024 = 1832, 1832 / 26 is not an integer
        let out = solve_approach1(&head_net(4, 16, 100, 10), 8, BudgetMode::Flops).unwrap();
        assert!(out.is_empty());
    }

    #[test]
    fn params_mode_is_single_gap_candidate() {
        let net = NetworkSpec::new(
            "flat",
            TensorShape::new(8, 1),
            vec![
                ConvLayer::new(6, 3).into(),
                Layer::FLATTEN,
                DenseLayer::new(20).into(),
                DenseLayer::new(10).into(),
            ],
        );
        let out = solve_approach1(&net, 13, BudgetMode::Params).unwrap();
        assert_eq!(out.len(), 1);
        let c = &out[0];
        assert_eq!(c.baseline.layers[1], Layer::GLOBAL_AVG_POOL);
        assert_eq!(c.deltas.params, 0);
        assert!(c.deltas.flops > 0);
        assert_eq!(
            cost_report(&c.modified_net).unwrap().total_params,
            cost_report(&c.baseline).unwrap().total_params
        );
    }

    #[test]
    fn biased_head_equation() {
        let mut net = head_net(2, 10, 100, 10);
        net.layers[2] = DenseLayer::new(100).with_bias(true).into();
        net.layers[3] = DenseLayer::new(10).with_bias(true).into();
        // before: 40 + 1100 + 1010 = 2150; after: 160 + 10 + 21·Z → Z = 1980/21 (not integral)
        assert!(solve_approach1(&net, 4, BudgetMode::Flops).unwrap().is_empty());
        // U₁' = 5: 250 + 10 + 21·Z = 2150 → Z = 90
        let out = solve_approach1(&net, 5, BudgetMode::Flops).unwrap();
        assert_eq!(out[0].solution, Solution::FcHead { fc1_width: 90 });
    }

    #[test]
    fn missing_head_is_structure_mismatch() {
        let net = NetworkSpec::new(
            "short",
            TensorShape::new(8, 1),
            vec![ConvLayer::new(4, 3).into(), Layer::FLATTEN, DenseLayer::new(10).into()],
        );
        assert!(matches!(
            solve_approach1(&net, 16, BudgetMode::Params),
            Err(Error::StructureMismatch(_))
        ));
    }
}
