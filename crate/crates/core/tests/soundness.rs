mod common;

use std::collections::BTreeSet;

use common::soundness_inputs;
use netrescale::{solve, verify_candidate, Approach, BudgetMode, EnumRanges};

#[test]
fn every_emitted_candidate_verifies() {
    let inputs = soundness_inputs(2024);
    let originals: BTreeSet<_> = inputs.iter().map(|(n, _)| n.name.clone()).collect();
    assert!(inputs.len() / 2 >= 200);
    assert!(originals.len() > 50);

    let ranges = EnumRanges::default();
    let mut checked = 0usize;
    for (net, resolution) in &inputs {
        for approach in Approach::ALL {
            for mode in [BudgetMode::Params, BudgetMode::Flops] {
                let out = solve(net, approach, *resolution, &ranges, mode)
                    .unwrap_or_else(|e| panic!("{} →{resolution} {approach} {mode}: {e}", net.name));
                for c in &out {
                    let report = verify_candidate(net, c).unwrap();
                    assert!(
                        report.passed(),
                        "{} →{resolution} {approach} {mode} {}:\n{report}",
                        net.name,
                        c.solution
                    );
                    checked += 1;
                }
            }
        }
    }
    assert!(checked > 1000, "only {checked} candidates");
}

#[test]
fn dilated_conv1_conserves_whole_network() {
    let ranges = EnumRanges::default();
    let mut seen = 0;
    for (net, resolution) in soundness_inputs(7) {
        for c in solve(&net, Approach::II, resolution, &ranges, BudgetMode::Params).unwrap() {
            let report = verify_candidate(&net, &c).unwrap();
            assert_eq!(report.whole_network_param_delta, 0);
            assert_eq!(report.whole_network_flops_delta, 0);
            assert_eq!((c.deltas.params, c.deltas.flops), (0, 0));
            seen += 1;
        }
    }
    assert!(seen > 100);
}
