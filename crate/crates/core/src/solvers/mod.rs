//! The four budget-preserving rescaling procedures.
//!
//! Each solver takes an original network and a larger input side `N'` and
//! returns every modification (within the configured [`EnumRanges`]) that
//! keeps parameters or FLOPS equal over the solver's scope while restoring
//! the original tensor shape where the untouched remainder of the network
//! begins. Results are sorted by their solution tuple.
//!
//! | approach | edit                                     | scope             |
//! |----------|------------------------------------------|-------------------|
//! | I        | global average pooling, resized fc1      | fc head           |
//! | II       | dilation/stride/padding of conv1         | conv1             |
//! | III      | larger conv1 kernel, fewer filters, pool | conv1 + new pool  |
//! | IV       | conv1 and conv2 kernels/strides/padding  | first two convs   |
//!
//! Equalities use the layers' bias flags; for bias-free layers (the default)
//! they are exactly the textbook no-bias equations.

mod approach1;
mod approach2;
mod approach3;
mod approach4;
mod ranges;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use approach1::{gap_reference, solve_approach1};
pub use approach2::solve_approach2;
pub use approach3::solve_approach3;
pub use approach4::solve_approach4;
pub use ranges::{EnumRanges, Interval};

use crate::arch::{ConvLayer, Layer, NetworkSpec};
use crate::cost::{cost_report, signed_delta, CostReport};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Approach {
    I,
    II,
    III,
    IV,
}

impl Approach {
    pub const ALL: [Approach; 4] = [Approach::I, Approach::II, Approach::III, Approach::IV];

    pub fn number(self) -> u8 {
        match self {
            Approach::I => 1,
            Approach::II => 2,
            Approach::III => 3,
            Approach::IV => 4,
        }
    }

    pub fn from_number(n: u8) -> Option<Self> {
        Self::ALL.get(usize::from(n).checked_sub(1)?).copied()
    }

    pub fn scope(self) -> Scope {
        match self {
            Approach::I => Scope::FcHead,
            Approach::II => Scope::Conv1,
            Approach::III => Scope::Conv1Pool,
            Approach::IV => Scope::FirstTwoConvs,
        }
    }
}

impl fmt::Display for Approach {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Approach::I => "I",
            Approach::II => "II",
            Approach::III => "III",
            Approach::IV => "IV",
        };
        f.write_str(s)
    }
}

impl FromStr for Approach {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "1" | "I" | "i" => Ok(Approach::I),
            "2" | "II" | "ii" => Ok(Approach::II),
            "3" | "III" | "iii" => Ok(Approach::III),
            "4" | "IV" | "iv" => Ok(Approach::IV),
            other => Err(format!("unknown approach {other:?} (expected 1-4)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BudgetMode {
    Params,
    Flops,
}

impl BudgetMode {
    /// The budgeted quantity out of a `(params, flops)` pair.
    pub fn pick<T>(self, params: T, flops: T) -> T {
        match self {
            BudgetMode::Params => params,
            BudgetMode::Flops => flops,
        }
    }
}

impl fmt::Display for BudgetMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.pick("params", "flops"))
    }
}

impl FromStr for BudgetMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "params" | "parameters" => Ok(BudgetMode::Params),
            "flops" => Ok(BudgetMode::Flops),
            other => Err(format!("unknown budget mode {other:?} (expected params|flops)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scope {
    Conv1,
    #[serde(rename = "conv1+pool")]
    Conv1Pool,
    FirstTwoConvs,
    FcHead,
}

/// The free variables an approach solved for.
///
/// Field order is the lexicographic sort order of the solution tuple.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Solution {
    FcHead {
        fc1_width: u64,
    },
    DilatedConv1 {
        padding: u64,
        stride: u64,
        dilation: u64,
    },
    PooledConv1 {
        filters: u64,
        kernel: u64,
        padding: u64,
        stride: u64,
        pool_kernel: u64,
        pool_padding: u64,
        pool_stride: u64,
    },
    FirstTwoConvs {
        filters: u64,
        kernel: u64,
        padding: u64,
        stride: u64,
        conv2_kernel: u64,
        conv2_padding: u64,
        conv2_stride: u64,
    },
}

impl Solution {
    pub fn approach(&self) -> Approach {
        match self {
            Solution::FcHead { .. } => Approach::I,
            Solution::DilatedConv1 { .. } => Approach::II,
            Solution::PooledConv1 { .. } => Approach::III,
            Solution::FirstTwoConvs { .. } => Approach::IV,
        }
    }

    /// Solution tuple in sort order.
    pub fn values(&self) -> Vec<u64> {
        match *self {
            Solution::FcHead { fc1_width } => vec![fc1_width],
            Solution::DilatedConv1 {
                padding,
                stride,
                dilation,
            } => vec![padding, stride, dilation],
            Solution::PooledConv1 {
                filters,
                kernel,
                padding,
                stride,
                pool_kernel,
                pool_padding,
                pool_stride,
            } => vec![filters, kernel, padding, stride, pool_kernel, pool_padding, pool_stride],
            Solution::FirstTwoConvs {
                filters,
                kernel,
                padding,
                stride,
                conv2_kernel,
                conv2_padding,
                conv2_stride,
            } => vec![filters, kernel, padding, stride, conv2_kernel, conv2_padding, conv2_stride],
        }
    }
}

impl fmt::Display for Solution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Solution::FcHead { fc1_width } => write!(f, "Z1'={fc1_width}"),
            Solution::DilatedConv1 {
                padding,
                stride,
                dilation,
            } => write!(f, "P1'={padding} S1'={stride} D1'={dilation}"),
            Solution::PooledConv1 {
                filters,
                kernel,
                padding,
                stride,
                pool_kernel,
                pool_padding,
                pool_stride,
            } => write!(
                f,
                "K1'={filters} C1'={kernel} P1'={padding} S1'={stride} Cp={pool_kernel} Pp={pool_padding} Sp={pool_stride}"
            ),
            Solution::FirstTwoConvs {
                filters,
                kernel,
                padding,
                stride,
                conv2_kernel,
                conv2_padding,
                conv2_stride,
            } => write!(
                f,
                "K1'={filters} C1'={kernel} P1'={padding} S1'={stride} C2'={conv2_kernel} P2'={conv2_padding} S2'={conv2_stride}"
            ),
        }
    }
}

/// Whole-network `modified − baseline` differences.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Deltas {
    pub params: i64,
    pub flops: i64,
}

impl Deltas {
    pub fn between(baseline: &CostReport, modified: &CostReport) -> Result<Self> {
        Ok(Self {
            params: signed_delta(baseline.total_params, modified.total_params)?,
            flops: signed_delta(baseline.total_flops, modified.total_flops)?,
        })
    }

    pub fn get(&self, mode: BudgetMode) -> i64 {
        mode.pick(self.params, self.flops)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolutionCandidate {
    pub approach: Approach,
    pub budget_mode: BudgetMode,
    pub new_resolution: u64,
    pub scope: Scope,
    pub solution: Solution,
    /// Network the deltas are measured against. Identical to the original
    /// except for approach I, where the boundary is a global average pool.
    pub baseline: NetworkSpec,
    pub modified_net: NetworkSpec,
    pub deltas: Deltas,
}

/// Runs the solver for `approach`.
pub fn solve(
    net: &NetworkSpec,
    approach: Approach,
    new_resolution: u64,
    ranges: &EnumRanges,
    mode: BudgetMode,
) -> Result<Vec<SolutionCandidate>> {
    match approach {
        Approach::I => solve_approach1(net, new_resolution, mode),
        Approach::II => Ok(solve_approach2(net, new_resolution, ranges)?
            .into_iter()
            .map(|c| SolutionCandidate {
                budget_mode: mode,
                ..c
            })
            .collect()),
        Approach::III => solve_approach3(net, new_resolution, ranges, mode),
        Approach::IV => solve_approach4(net, new_resolution, ranges, mode),
    }
}

fn check_resolution(net: &NetworkSpec, new_resolution: u64) -> Result<()> {
    if new_resolution < net.input.spatial {
        return Err(Error::ResolutionDecrease {
            original: net.input.spatial,
            new: new_resolution,
        });
    }
    Ok(())
}

fn first_conv(net: &NetworkSpec) -> Result<ConvLayer> {
    match net.layers.first() {
        Some(Layer::Conv(c)) => Ok(*c),
        Some(other) => Err(Error::StructureMismatch(format!(
            "first layer must be conv, found {}",
            other.kind_name()
        ))),
        None => Err(Error::StructureMismatch("network has no layers".into())),
    }
}

/// `(target − offset) / unit` when that is a positive integer.
fn exact_quotient(target: u64, offset: u64, unit: u64) -> Option<u64> {
    let rest = target.checked_sub(offset)?;
    if unit == 0 || rest == 0 || rest % unit != 0 {
        return None;
    }
    Some(rest / unit)
}

/// Shared tail of every solver: cost the modified net against the baseline.
struct Finisher<'a> {
    approach: Approach,
    mode: BudgetMode,
    new_resolution: u64,
    baseline: &'a NetworkSpec,
    baseline_cost: CostReport,
}

impl<'a> Finisher<'a> {
    fn new(
        approach: Approach,
        mode: BudgetMode,
        new_resolution: u64,
        baseline: &'a NetworkSpec,
    ) -> Result<Self> {
        Ok(Self {
            approach,
            mode,
            new_resolution,
            baseline,
            baseline_cost: cost_report(baseline)?,
        })
    }

    fn finish(&self, solution: Solution, mut modified_net: NetworkSpec) -> Result<SolutionCandidate> {
        modified_net.name = format!(
            "{}-approach{}-{}",
            self.baseline.name,
            self.approach,
            self.new_resolution
        );
        let modified_cost = cost_report(&modified_net)?;
        Ok(SolutionCandidate {
            approach: self.approach,
            budget_mode: self.mode,
            new_resolution: self.new_resolution,
            scope: self.approach.scope(),
            solution,
            baseline: self.baseline.clone(),
            deltas: Deltas::between(&self.baseline_cost, &modified_cost)?,
            modified_net,
        })
    }
}

fn sorted(mut out: Vec<SolutionCandidate>) -> Vec<SolutionCandidate> {
    out.sort_by_key(|c| c.solution);
    out
}
