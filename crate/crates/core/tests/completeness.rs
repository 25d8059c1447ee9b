mod common;

use std::collections::BTreeSet;

use common::completeness_cases;
use netrescale::{oracle_enumerate, solve, Approach, BudgetMode, Solution};

#[test]
fn solvers_match_brute_force_enumeration() {
    let cases = completeness_cases();
    assert!(cases.len() >= 50);
    let mut nonempty = 0;
    for case in &cases {
        let solved = solve(&case.net, case.approach, case.resolution, &case.ranges, case.mode);
        let oracle = oracle_enumerate(&case.net, case.resolution, &case.ranges, case.approach, case.mode);
        match (solved, oracle) {
            (Ok(solved), Ok(oracle)) => {
                let got: BTreeSet<Solution> = solved.iter().map(|c| c.solution).collect();
                assert_eq!(got.len(), solved.len(), "duplicates for {}", case.label());
                assert_eq!(got, oracle, "{}", case.label());
                nonempty += usize::from(!got.is_empty());
            }
            (Err(a), Err(b)) => assert_eq!(
                std::mem::discriminant(&a),
                std::mem::discriminant(&b),
                "{}",
                case.label()
            ),
            (a, b) => panic!("{}: solver {a:?} vs oracle {b:?}", case.label()),
        }
    }
    // the comparison is only meaningful if most cases have solutions
    assert!(nonempty * 2 > cases.len(), "{nonempty} of {}", cases.len());
}

#[test]
fn every_approach_and_mode_has_a_nonempty_case() {
    let cases = completeness_cases();
    for approach in Approach::ALL {
        for mode in [BudgetMode::Params, BudgetMode::Flops] {
            let hit = cases.iter().filter(|c| c.approach == approach && c.mode == mode).any(|c| {
                oracle_enumerate(&c.net, c.resolution, &c.ranges, approach, mode).is_ok_and(|s| !s.is_empty())
            });
            assert!(hit, "approach {approach} {mode} never admits a solution");
        }
    }
}
