//! Approach II: dilate conv1 and re-solve its stride and padding so that
//! its output side is unchanged at the larger input. Kernel and filter
//! count are untouched, so whole-network parameters and FLOPS are equal.

use super::{check_resolution, first_conv, sorted, Approach, BudgetMode, EnumRanges, Finisher, Solution, SolutionCandidate};
use crate::arch::{propagate_shapes, window_output_size, ConvLayer, NetworkSpec};
use crate::error::{Error, Result};

pub fn solve_approach2(
    net: &NetworkSpec,
    new_resolution: u64,
    ranges: &EnumRanges,
) -> Result<Vec<SolutionCandidate>> {
    ranges.validate()?;
    check_resolution(net, new_resolution)?;
    let conv1 = first_conv(net)?;
    if conv1.dilation != 1 {
        return Err(Error::StructureMismatch(format!(
            "conv1 is already dilated (dilation {})",
            conv1.dilation
        )));
    }
    let m1 = propagate_shapes(net)?[0].spatial;
    // budget mode is immaterial: both quantities are preserved
    let finisher = Finisher::new(Approach::II, BudgetMode::Params, new_resolution, net)?;

    let mut out = Vec::new();
    for padding in ranges.padding.iter() {
        for stride in ranges.stride.iter() {
            for dilation in ranges.dilation.iter() {
                if window_output_size(new_resolution, conv1.kernel, stride, padding, dilation) != Some(m1) {
                    continue;
                }
                let mut modified = net.with_input_spatial(new_resolution);
                modified.layers[0] = ConvLayer {
                    stride,
                    padding,
                    dilation,
                    ..conv1
                }
                .into();
                let solution = Solution::DilatedConv1 {
                    padding,
                    stride,
                    dilation,
                };
                out.push(finisher.finish(solution, modified)?);
            }
        }
    }
    Ok(sorted(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arch::{DenseLayer, Layer, PoolLayer, TensorShape};
    use crate::solvers::Interval;

    fn mnist(n: u64) -> NetworkSpec {
        NetworkSpec::new(
            "mnist",
            TensorShape::new(n, 1),
            vec![
                ConvLayer::new(10, 5).into(),
                PoolLayer::max(2, 2).into(),
                ConvLayer::new(10, 5).into(),
                PoolLayer::max(2, 2).into(),
                Layer::FLATTEN,
                DenseLayer::new(100).into(),
                DenseLayer::new(10).into(),
            ],
        )
    }

    #[test]
    fn doubled_resolution_admits_stride_two_dilation_two() {
        let out = solve_approach2(&mnist(28), 56, &EnumRanges::default()).unwrap();
        let wanted = Solution::DilatedConv1 {
            padding: 0,
            stride: 2,
            dilation: 2,
        };
        assert!(out.iter().any(|c| c.solution == wanted));
        for c in &out {
            assert_eq!(c.deltas.params, 0);
            assert_eq!(c.deltas.flops, 0);
        }
    }

    #[test]
    fn identity_at_same_resolution() {
        let ranges = EnumRanges {
            dilation: Interval::new(1, 4),
            ..Default::default()
        };
        let out = solve_approach2(&mnist(28), 28, &ranges).unwrap();
        let identity = out
            .iter()
            .find(|c| c.solution == Solution::DilatedConv1 { padding: 0, stride: 1, dilation: 1 })
            .expect("identity solution");
        let mut expected = mnist(28);
        expected.name = identity.modified_net.name.clone();
        assert_eq!(identity.modified_net, expected);
    }

    #[test]
    fn dilated_original_rejected() {
        let mut net = mnist(28);
        net.layers[0] = ConvLayer::new(10, 5).with_dilation(2).into();
        assert!(matches!(
            solve_approach2(&net, 40, &EnumRanges::default()),
            Err(Error::StructureMismatch(_))
        ));
    }

    #[test]
    fn output_is_sorted() {
        let out = solve_approach2(&mnist(28), 44, &EnumRanges::default()).unwrap();
        assert!(out.windows(2).all(|w| w[0].solution < w[1].solution));
    }
}
