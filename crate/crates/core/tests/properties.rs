mod common;

use std::collections::BTreeSet;

use common::count_windows;
use netrescale::cli::ArchitectureDocument;
use netrescale::{
    cost_report, oracle_enumerate, propagate_shapes, sample_candidates, solve, validate, verify_candidate,
    window_output_size, Approach, BudgetMode, ConvLayer, DenseLayer, EnumRanges, Interval, Layer, NetworkSpec,
    PoolKind, PoolLayer, Solution, TensorShape,
};
use proptest::prelude::*;

fn arb_conv() -> impl Strategy<Value = ConvLayer> {
    (1u64..64, 1u64..9, 1u64..4, 0u64..4, 1u64..4, any::<bool>()).prop_map(|(k, c, s, p, d, b)| ConvLayer {
        out_channels: k,
        kernel: c,
        stride: s,
        padding: p,
        dilation: d,
        has_bias: b,
    })
}

fn arb_pool() -> impl Strategy<Value = PoolLayer> {
    (prop_oneof![Just(PoolKind::Max), Just(PoolKind::Avg)], 1u64..4, 1u64..4, 0u64..2)
        .prop_map(|(kind, kernel, stride, padding)| PoolLayer { kind, kernel, stride, padding })
}

fn arb_layer() -> impl Strategy<Value = Layer> {
    prop_oneof![
        arb_conv().prop_map(Layer::from),
        arb_pool().prop_map(Layer::from),
        Just(Layer::GLOBAL_AVG_POOL),
        Just(Layer::FLATTEN),
        (1u64..200, any::<bool>()).prop_map(|(o, b)| DenseLayer::new(o).with_bias(b).into()),
    ]
}

/// Any layer list, valid or not.
fn arb_any_net() -> impl Strategy<Value = NetworkSpec> {
    ("[a-z0-9_-]{0,12}", 0u64..100, 0u64..8, prop::collection::vec(arb_layer(), 0..10))
        .prop_map(|(name, s, c, layers)| NetworkSpec::new(name, TensorShape::new(s, c), layers))
}

/// conv → [pool] → conv → [pool] → boundary → fc → fc, filtered to valid.
fn arb_lenet() -> impl Strategy<Value = NetworkSpec> {
    (
        (5u64..20, 1u64..4),
        (1u64..24, 1u64..6, any::<bool>()),
        prop::option::of(1u64..3),
        (1u64..16, 1u64..5, any::<bool>()),
        prop::option::of(1u64..3),
        any::<bool>(),
        (1u64..60, 1u64..12, any::<bool>(), any::<bool>()),
    )
        .prop_map(|((n, d), (k1, c1, b1), pool1, (k2, c2, b2), pool2, gap, (z1, z2, bz1, bz2))| {
            let mut layers: Vec<Layer> = vec![ConvLayer::new(k1, c1).with_bias(b1).into()];
            if let Some(p) = pool1 {
                layers.push(PoolLayer::max(p, p).into());
            }
            layers.push(ConvLayer::new(k2, c2).with_bias(b2).into());
            if let Some(p) = pool2 {
                layers.push(PoolLayer::avg(p, p, 0).into());
            }
            layers.push(if gap { Layer::GLOBAL_AVG_POOL } else { Layer::FLATTEN });
            layers.push(DenseLayer::new(z1).with_bias(bz1).into());
            layers.push(DenseLayer::new(z2).with_bias(bz2).into());
            NetworkSpec::new("p", TensorShape::new(n, d), layers)
        })
        .prop_filter("valid", |net| validate(net).is_valid())
}

fn arb_approach() -> impl Strategy<Value = Approach> {
    prop::sample::select(Approach::ALL.to_vec())
}

fn arb_mode() -> impl Strategy<Value = BudgetMode> {
    prop_oneof![Just(BudgetMode::Params), Just(BudgetMode::Flops)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn architecture_json_round_trips(net in arb_any_net()) {
        let doc = ArchitectureDocument::from(net.clone());
        let back: NetworkSpec = ArchitectureDocument::parse(&doc.to_json()).unwrap().into();
        prop_assert_eq!(back, net);
    }

    #[test]
    fn window_formula_matches_counter(n in 1u64..400, c in 1u64..12, s in 1u64..8, p in 0u64..8, d in 1u64..6) {
        prop_assert_eq!(window_output_size(n, c, s, p, d), count_windows(n, c, s, p, d));
    }

    #[test]
    fn shapes_deterministic(net in arb_lenet()) {
        let a = propagate_shapes(&net).unwrap();
        prop_assert_eq!(&a, &propagate_shapes(&net).unwrap());
        prop_assert_eq!(a.len(), net.layers.len());
        prop_assert!(a.iter().all(|s| s.spatial >= 1 && s.channels >= 1));
    }

    #[test]
    fn flops_grow_with_resolution(net in arb_lenet(), extra in 1u64..10) {
        let small = cost_report(&net).unwrap();
        let big = cost_report(&net.with_input_spatial(net.input.spatial + extra)).unwrap();
        prop_assert!(big.total_flops >= small.total_flops);
    }

    #[test]
    fn gap_params_ignore_resolution(net in arb_lenet(), extra in 1u64..10) {
        let mut net = net;
        let b = net.boundary_index().unwrap();
        net.layers[b] = Layer::GLOBAL_AVG_POOL;
        let small = cost_report(&net).unwrap();
        let big = cost_report(&net.with_input_spatial(net.input.spatial + extra)).unwrap();
        prop_assert_eq!(big.total_params, small.total_params);
    }

    #[test]
    fn sampling_is_a_deterministic_subset(len in 1usize..40, k in 0usize..50, seed in any::<u64>()) {
        let list: Vec<usize> = (0..len).collect();
        let a = sample_candidates(&list, k, seed).unwrap();
        prop_assert_eq!(&a, &sample_candidates(&list, k, seed).unwrap());
        prop_assert_eq!(a.len(), k.min(len));
        prop_assert_eq!(a.iter().collect::<BTreeSet<_>>().len(), a.len());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn candidates_verify(net in arb_lenet(), approach in arb_approach(), mode in arb_mode(), step in 1u64..100) {
        let n = net.input.spatial;
        let resolution = n + 1 + step % n;
        let out = solve(&net, approach, resolution, &EnumRanges::default(), mode).unwrap();
        let tuples: Vec<Solution> = out.iter().map(|c| c.solution).collect();
        prop_assert!(tuples.windows(2).all(|w| w[0] < w[1]), "not strictly sorted");
        for c in &out {
            let report = verify_candidate(&net, c).unwrap();
            prop_assert!(report.passed(), "{}\n{}", c.solution, report);
            match approach {
                Approach::II => prop_assert_eq!((c.deltas.params, c.deltas.flops), (0, 0)),
                Approach::IV if mode == BudgetMode::Params => prop_assert_eq!(c.deltas.params, 0),
                _ => {}
            }
        }
    }

    #[test]
    fn solver_equals_oracle(net in arb_lenet(), approach in arb_approach(), mode in arb_mode(), step in 1u64..100) {
        let n = net.input.spatial;
        let resolution = n + 1 + step % n;
        let ranges = EnumRanges {
            kernel: Interval::new(1, 6),
            stride: Interval::new(1, 3),
            padding: Interval::new(0, 3),
            dilation: Interval::new(1, 3),
        };
        let solved: BTreeSet<Solution> = solve(&net, approach, resolution, &ranges, mode)
            .unwrap()
            .into_iter()
            .map(|c| c.solution)
            .collect();
        let oracle = oracle_enumerate(&net, resolution, &ranges, approach, mode).unwrap();
        prop_assert_eq!(solved, oracle);
    }
}
