#![allow(dead_code)]

use netrescale::search::{lenet, original_grid};
use netrescale::{ConvLayer, DatasetProfile, DenseLayer, Layer, NetworkSpec, PoolLayer, TensorShape};

/// Counts window placements by walking the padded input one position at a
/// time. `None` when no placement fits.
pub fn count_windows(n: u64, kernel: u64, stride: u64, padding: u64, dilation: u64) -> Option<u64> {
    let padded = n + 2 * padding;
    let mut count = 0;
    let mut start = 0;
    loop {
        let last_tap = start + dilation * (kernel - 1);
        if last_tap >= padded {
            break;
        }
        count += 1;
        start += stride;
    }
    (count > 0).then_some(count)
}

/// The LeNet family at 28×28 used in hand-summed checks.
pub fn mnist_reference() -> NetworkSpec {
    lenet(DatasetProfile::Mnist, 28, [5, 5], [2, 2])
}

/// Small nets exercising biases, pooling between the two convs and both
/// boundary kinds.
pub fn synthetic_nets() -> Vec<NetworkSpec> {
    vec![
        NetworkSpec::new(
            "biased",
            TensorShape::new(10, 2),
            vec![
                ConvLayer::new(6, 3).with_bias(true).into(),
                ConvLayer::new(4, 3).with_bias(true).into(),
                Layer::FLATTEN,
                DenseLayer::new(20).with_bias(true).into(),
                DenseLayer::new(5).with_bias(true).into(),
            ],
        ),
        NetworkSpec::new(
            "gap-head",
            TensorShape::new(12, 3),
            vec![
                ConvLayer::new(8, 3).into(),
                PoolLayer::avg(2, 2, 0).into(),
                ConvLayer::new(8, 2).into(),
                Layer::GLOBAL_AVG_POOL,
                DenseLayer::new(16).into(),
                DenseLayer::new(4).into(),
            ],
        ),
        NetworkSpec::new(
            "tiny",
            TensorShape::new(8, 1),
            vec![
                ConvLayer::new(8, 2).into(),
                ConvLayer::new(8, 2).into(),
                Layer::FLATTEN,
                DenseLayer::new(16).into(),
                DenseLayer::new(10).into(),
            ],
        ),
    ]
}

/// Every valid grid network of every profile.
pub fn full_grid() -> Vec<NetworkSpec> {
    [DatasetProfile::Mnist, DatasetProfile::Fmnist, DatasetProfile::Cifar10]
        .into_iter()
        .flat_map(|p| original_grid(p, None))
        .collect()
}

pub struct Case {
    pub net: NetworkSpec,
    pub resolution: u64,
    pub approach: netrescale::Approach,
    pub mode: netrescale::BudgetMode,
    pub ranges: netrescale::EnumRanges,
}

impl Case {
    pub fn label(&self) -> String {
        format!(
            "{} {}→{} approach {} {}",
            self.net.name, self.net.input.spatial, self.resolution, self.approach, self.mode
        )
    }
}

/// Fixed grid of solver inputs used for the oracle comparison.
pub fn completeness_cases() -> Vec<Case> {
    use netrescale::{Approach, BudgetMode, EnumRanges, Interval};

    let mut nets = vec![
        lenet(DatasetProfile::Fmnist, 7, [2, 2], [1, 1]),
        lenet(DatasetProfile::Mnist, 14, [3, 3], [2, 1]),
        lenet(DatasetProfile::Mnist, 28, [5, 5], [2, 2]),
        lenet(DatasetProfile::Cifar10, 8, [3, 3], [1, 1]),
        lenet(DatasetProfile::Cifar10, 16, [3, 5], [1, 2]),
    ];
    nets.extend(synthetic_nets());

    let mut cases = Vec::new();
    for net in nets {
        let n = net.input.spatial;
        let mut ranges = EnumRanges::default();
        if net.name == "tiny" {
            ranges.kernel = Interval::new(1, 8);
        }
        for resolution in [n + 1, n + n / 2 + 1, 2 * n] {
            for approach in Approach::ALL {
                for mode in [BudgetMode::Params, BudgetMode::Flops] {
                    cases.push(Case {
                        net: net.clone(),
                        resolution,
                        approach,
                        mode,
                        ranges,
                    });
                }
            }
        }
    }
    cases
}

/// At least 200 seeded originals across all profiles, each paired with two
/// seeded resolutions in `(N, 2N]`.
pub fn soundness_inputs(seed: u64) -> Vec<(NetworkSpec, u64)> {
    use netrescale::search::{sample_original_networks, seeded_rng};
    use rand::Rng;

    let mut rng = seeded_rng(seed);
    let mut out = Vec::new();
    for (i, profile) in [DatasetProfile::Mnist, DatasetProfile::Fmnist, DatasetProfile::Cifar10]
        .into_iter()
        .enumerate()
    {
        for net in sample_original_networks(profile, 70, seed.wrapping_add(i as u64)) {
            let n = net.input.spatial;
            for _ in 0..2 {
                out.push((net.clone(), rng.random_range(n + 1..=2 * n)));
            }
        }
    }
    out
}
