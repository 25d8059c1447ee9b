//! On-disk JSON formats.

use serde::{Deserialize, Deserializer, Serialize};

use crate::arch::{Layer, NetworkSpec, TensorShape};
use crate::cost::cost_report;
use crate::error::Result;
use crate::solvers::{Approach, BudgetMode, Deltas, Scope, Solution, SolutionCandidate};

pub const FORMAT_VERSION: u32 = 1;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

fn current_version() -> u32 {
    FORMAT_VERSION
}

fn checked_version<'de, D: Deserializer<'de>>(d: D) -> Result<u32, D::Error> {
    let v = u32::deserialize(d)?;
    if v != FORMAT_VERSION {
        return Err(serde::de::Error::custom(format!(
            "unsupported format_version {v} (this build reads {FORMAT_VERSION})"
        )));
    }
    Ok(v)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArchitectureDocument {
    #[serde(default = "current_version", deserialize_with = "checked_version")]
    pub format_version: u32,
    pub name: String,
    pub input: TensorShape,
    pub layers: Vec<Layer>,
}

impl From<NetworkSpec> for ArchitectureDocument {
    fn from(net: NetworkSpec) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            name: net.name,
            input: net.input,
            layers: net.layers,
        }
    }
}

impl From<ArchitectureDocument> for NetworkSpec {
    fn from(doc: ArchitectureDocument) -> Self {
        NetworkSpec::new(doc.name, doc.input, doc.layers)
    }
}

impl ArchitectureDocument {
    pub fn parse(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("architecture serializes")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostTotals {
    pub params: u64,
    pub flops: u64,
}

impl CostTotals {
    pub fn of(net: &NetworkSpec) -> Result<Self> {
        let r = cost_report(net)?;
        Ok(Self {
            params: r.total_params,
            flops: r.total_flops,
        })
    }
}

/// One candidate with everything needed to rebuild and train both networks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolutionDocument {
    #[serde(default = "current_version", deserialize_with = "checked_version")]
    pub format_version: u32,
    pub tool_version: String,
    pub approach: Approach,
    pub budget_mode: BudgetMode,
    pub new_resolution: u64,
    pub scope: Scope,
    pub solution: Solution,
    pub deltas: Deltas,
    /// The network as supplied by the user.
    pub original: ArchitectureDocument,
    /// The network the deltas are measured against. Differs from `original`
    /// only for approach I, whose reference replaces flatten by global
    /// average pooling.
    pub baseline: ArchitectureDocument,
    pub modified: ArchitectureDocument,
    pub baseline_cost: CostTotals,
    pub modified_cost: CostTotals,
}

impl SolutionDocument {
    pub fn new(original: &NetworkSpec, c: &SolutionCandidate) -> Result<Self> {
        Ok(Self {
            format_version: FORMAT_VERSION,
            tool_version: TOOL_VERSION.to_string(),
            approach: c.approach,
            budget_mode: c.budget_mode,
            new_resolution: c.new_resolution,
            scope: c.scope,
            solution: c.solution,
            deltas: c.deltas,
            original: original.clone().into(),
            baseline: c.baseline.clone().into(),
            modified: c.modified_net.clone().into(),
            baseline_cost: CostTotals::of(&c.baseline)?,
            modified_cost: CostTotals::of(&c.modified_net)?,
        })
    }

    pub fn parse(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("solution serializes")
    }

    pub fn original_net(&self) -> NetworkSpec {
        self.original.clone().into()
    }

    pub fn candidate(&self) -> SolutionCandidate {
        SolutionCandidate {
            approach: self.approach,
            budget_mode: self.budget_mode,
            new_resolution: self.new_resolution,
            scope: self.scope,
            solution: self.solution,
            baseline: self.baseline.clone().into(),
            modified_net: self.modified.clone().into(),
            deltas: self.deltas,
        }
    }
}
