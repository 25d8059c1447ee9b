mod common;

use common::{mnist_reference, synthetic_nets};
use netrescale::search::lenet;
use netrescale::DatasetProfile;
use netrescale::{solve, verify_candidate, Approach, BudgetMode, EnumRanges, Interval, Layer, Solution, SolutionCandidate};

fn tiny() -> netrescale::NetworkSpec {
    synthetic_nets().into_iter().find(|n| n.name == "tiny").unwrap()
}

fn first(net: &netrescale::NetworkSpec, approach: Approach, resolution: u64, mode: BudgetMode) -> SolutionCandidate {
    let ranges = EnumRanges {
        kernel: Interval::new(1, 8),
        ..Default::default()
    };
    solve(net, approach, resolution, &ranges, mode).unwrap().remove(0)
}

fn violations(net: &netrescale::NetworkSpec, c: &SolutionCandidate) -> Vec<String> {
    let report = verify_candidate(net, c).unwrap();
    assert!(!report.passed());
    report.violations
}

#[test]
fn conv2_kernel_edit_breaks_two_conv_equality() {
    let net = tiny();
    let mut c = first(&net, Approach::IV, 16, BudgetMode::Params);
    assert!(verify_candidate(&net, &c).unwrap().passed());
    if let Solution::FirstTwoConvs { conv2_kernel, .. } = &mut c.solution {
        *conv2_kernel += 1;
    }
    if let Layer::Conv(conv) = &mut c.modified_net.layers[1] {
        conv.kernel += 1;
    }
    let v = violations(&net, &c);
    assert!(v.iter().any(|m| m.contains("first-two-conv parameter")), "{v:?}");
}

#[test]
fn tuple_edit_alone_is_caught() {
    let net = tiny();
    let mut c = first(&net, Approach::IV, 16, BudgetMode::Params);
    if let Solution::FirstTwoConvs { filters, .. } = &mut c.solution {
        *filters += 1;
    }
    let v = violations(&net, &c);
    assert!(v.iter().any(|m| m.contains("does not match solution tuple")), "{v:?}");
}

#[test]
fn fc_width_edit_breaks_head_equality() {
    let net = mnist_reference();
    for mode in [BudgetMode::Params, BudgetMode::Flops] {
        let mut c = first(&net, Approach::I, 29, mode);
        if let Solution::FcHead { fc1_width } = &mut c.solution {
            *fc1_width += 1;
        }
        let b = c.modified_net.boundary_index().unwrap();
        if let Layer::Dense(d) = &mut c.modified_net.layers[b + 1] {
            d.out_features += 1;
        }
        let v = violations(&net, &c);
        assert!(v.iter().any(|m| m.contains("fc-head")), "{v:?}");
    }
}

#[test]
fn dilation_edit_breaks_interface() {
    let net = mnist_reference();
    let mut c = first(&net, Approach::II, 56, BudgetMode::Params);
    if let Solution::DilatedConv1 { dilation, .. } = &mut c.solution {
        *dilation += 1;
    }
    if let Layer::Conv(conv) = &mut c.modified_net.layers[0] {
        conv.dilation += 1;
    }
    match verify_candidate(&net, &c) {
        Ok(report) => {
            assert!(!report.interface_shape_match);
            assert!(!report.passed());
        }
        Err(e) => assert!(matches!(e, netrescale::Error::InvalidGeometry { .. })),
    }
}

#[test]
fn pool_stride_edit_breaks_interface() {
    let net = lenet(DatasetProfile::Fmnist, 7, [2, 2], [1, 1]);
    let mut c = first(&net, Approach::III, 8, BudgetMode::Flops);
    if let Solution::PooledConv1 { pool_stride, .. } = &mut c.solution {
        *pool_stride += 1;
    }
    if let Layer::Pool(p) = &mut c.modified_net.layers[1] {
        p.stride += 1;
    }
    match verify_candidate(&net, &c) {
        Ok(report) => assert!(!report.interface_shape_match),
        Err(e) => assert!(matches!(e, netrescale::Error::InvalidGeometry { .. })),
    }
}

#[test]
fn recorded_delta_edit_is_caught() {
    let net = mnist_reference();
    let mut c = first(&net, Approach::II, 56, BudgetMode::Params);
    c.deltas.flops = 1;
    let v = violations(&net, &c);
    assert!(v.iter().any(|m| m.contains("FLOPS delta")), "{v:?}");
}

#[test]
fn wrong_original_is_caught() {
    let net = mnist_reference();
    let c = first(&net, Approach::II, 56, BudgetMode::Params);
    let other = net.with_input_spatial(27);
    let report = verify_candidate(&other, &c).unwrap();
    assert!(!report.passed());
}

#[test]
fn approach_label_swap_is_caught() {
    let net = tiny();
    let mut c = first(&net, Approach::IV, 16, BudgetMode::Params);
    c.approach = Approach::III;
    c.scope = Approach::III.scope();
    assert!(!verify_candidate(&net, &c).unwrap().passed());
}
