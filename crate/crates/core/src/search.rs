//! Resolution sweeps, budget-slack filtering and seeded sampling.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arch::{validate, ConvLayer, DenseLayer, Layer, NetworkSpec, PoolLayer, TensorShape};
use crate::error::{Error, Result};
use crate::cost::{cost_report, CostReport};
use crate::solvers::{solve, Approach, BudgetMode, Deltas, EnumRanges, SolutionCandidate};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResolutionRule {
    /// Every integer `N'` with `N < N' ≤ 2N`.
    UpToDouble,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ResolutionSet {
    Explicit(Vec<u64>),
    Rule(ResolutionRule),
}

impl Default for ResolutionSet {
    fn default() -> Self {
        ResolutionSet::Rule(ResolutionRule::UpToDouble)
    }
}

impl ResolutionSet {
    /// Concrete, ascending, de-duplicated resolutions for an input side `n`.
    pub fn resolve(&self, n: u64) -> Result<Vec<u64>> {
        match self {
            ResolutionSet::Rule(ResolutionRule::UpToDouble) => Ok((n + 1..=2 * n).collect()),
            ResolutionSet::Explicit(list) => {
                if let Some(&bad) = list.iter().find(|&&r| r <= n) {
                    return Err(Error::ResolutionDecrease { original: n, new: bad });
                }
                let set: BTreeSet<u64> = list.iter().copied().collect();
                Ok(set.into_iter().collect())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlackRule {
    /// Keep iff `|Δ| ≤ α`.
    #[default]
    Absolute,
    /// Keep iff `0 < Δ < α`.
    StrictPositive,
}

impl SlackRule {
    pub fn admits(self, delta: i64, slack: u64) -> bool {
        let slack = i128::from(slack);
        let delta = i128::from(delta);
        match self {
            SlackRule::Absolute => delta.abs() <= slack,
            SlackRule::StrictPositive => 0 < delta && delta < slack,
        }
    }
}

fn all_approaches() -> Vec<Approach> {
    Approach::ALL.to_vec()
}

fn default_sample_count() -> usize {
    4
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchConfig {
    #[serde(default = "all_approaches")]
    pub approaches: Vec<Approach>,
    #[serde(default = "default_mode")]
    pub budget_mode: BudgetMode,
    #[serde(default)]
    pub resolutions: ResolutionSet,
    #[serde(default)]
    pub ranges: EnumRanges,
    /// Allowed whole-network deviation α of the budgeted quantity. Without
    /// one every solver candidate is kept.
    #[serde(default)]
    pub slack: Option<u64>,
    #[serde(default)]
    pub slack_rule: SlackRule,
    /// Candidates exported per resolution; 0 exports all of them.
    #[serde(default = "default_sample_count")]
    pub sample_count: usize,
    #[serde(default)]
    pub rng_seed: u64,
}

fn default_mode() -> BudgetMode {
    BudgetMode::Params
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            approaches: all_approaches(),
            budget_mode: BudgetMode::Params,
            resolutions: ResolutionSet::default(),
            ranges: EnumRanges::default(),
            slack: None,
            slack_rule: SlackRule::Absolute,
            sample_count: default_sample_count(),
            rng_seed: 0,
        }
    }
}

impl SearchConfig {
    pub fn admits(&self, candidate: &SolutionCandidate) -> bool {
        self.admits_deltas(&candidate.deltas)
    }

    pub fn admits_deltas(&self, deltas: &Deltas) -> bool {
        self.slack
            .is_none_or(|a| self.slack_rule.admits(deltas.get(self.budget_mode), a))
    }
}

/// Whole-network deltas recomputed from both networks.
fn recost(candidate: &SolutionCandidate, baseline: &CostReport) -> Result<Deltas> {
    Deltas::between(baseline, &cost_report(&candidate.modified_net)?)
}

/// Outcome of one `(N', approach)` solver run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SweepRow {
    pub resolution: u64,
    pub approach: Approach,
    pub emitted: usize,
    pub retained: usize,
    /// Range of the budgeted whole-network delta over retained candidates.
    pub min_delta: Option<i64>,
    pub max_delta: Option<i64>,
    /// Why the solver could not run, if it could not.
    pub skipped: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SweepResult {
    /// Retained candidates per `N'`, ordered by approach then solution tuple.
    pub candidates: BTreeMap<u64, Vec<SolutionCandidate>>,
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn total_emitted(&self) -> usize {
        self.rows.iter().map(|r| r.emitted).sum()
    }

    pub fn total_retained(&self) -> usize {
        self.rows.iter().map(|r| r.retained).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = &SolutionCandidate> {
        self.candidates.values().flatten()
    }
}

/// Runs every enabled approach at every resolution and keeps the candidates
/// whose whole-network budget delta passes the slack rule.
pub fn sweep(net: &NetworkSpec, config: &SearchConfig) -> Result<SweepResult> {
    let report = validate(net);
    if !report.is_valid() {
        return Err(Error::InvalidNetwork(report));
    }
    config.ranges.validate()?;
    let resolutions = config.resolutions.resolve(net.input.spatial)?;
    let approaches: BTreeSet<Approach> = config.approaches.iter().copied().collect();

    let jobs: Vec<(u64, Approach)> = resolutions
        .iter()
        .flat_map(|&r| approaches.iter().map(move |&a| (r, a)))
        .collect();
    let outcomes: Vec<(SweepRow, Vec<SolutionCandidate>)> = jobs
        .par_iter()
        .map(|&(resolution, approach)| {
            let run = solve(net, approach, resolution, &config.ranges, config.budget_mode).and_then(|emitted| {
                let Some(first) = emitted.first() else {
                    return Ok((0, Vec::new()));
                };
                let baseline = cost_report(&first.baseline)?;
                let n = emitted.len();
                // a candidate that cannot be re-costed is excluded, not fatal
                let kept = emitted
                    .into_iter()
                    .filter_map(|mut c| {
                        c.deltas = recost(&c, &baseline).ok()?;
                        config.admits(&c).then_some(c)
                    })
                    .collect::<Vec<_>>();
                Ok((n, kept))
            });
            match run {
                Ok((n, kept)) => {
                    let deltas = kept.iter().map(|c| c.deltas.get(config.budget_mode));
                    let row = SweepRow {
                        resolution,
                        approach,
                        emitted: n,
                        retained: kept.len(),
                        min_delta: deltas.clone().min(),
                        max_delta: deltas.max(),
                        skipped: None,
                    };
                    (row, kept)
                }
                Err(e) => {
                    let row = SweepRow {
                        resolution,
                        approach,
                        emitted: 0,
                        retained: 0,
                        min_delta: None,
                        max_delta: None,
                        skipped: Some(e.to_string()),
                    };
                    (row, Vec::new())
                }
            }
        })
        .collect();

    let mut result = SweepResult::default();
    for (row, kept) in outcomes {
        if !kept.is_empty() {
            result.candidates.entry(row.resolution).or_default().extend(kept);
        }
        result.rows.push(row);
    }
    Ok(result)
}

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `k` distinct entries of `list` (all of them if shorter), in the order of a
/// seeded pseudo-random permutation.
pub fn sample_candidates<T: Clone>(list: &[T], k: usize, seed: u64) -> Result<Vec<T>> {
    if list.is_empty() {
        return Err(Error::EmptyCandidateList);
    }
    let mut rng = seeded_rng(seed);
    let picks = rand::seq::index::sample(&mut rng, list.len(), k.min(list.len()));
    Ok(picks.into_iter().map(|i| list[i].clone()).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetProfile {
    Mnist,
    Fmnist,
    Cifar10,
}

impl DatasetProfile {
    pub fn image_sizes(self) -> [u64; 3] {
        match self {
            DatasetProfile::Cifar10 => [8, 16, 32],
            _ => [7, 14, 28],
        }
    }

    pub fn conv_kernels(self) -> [u64; 3] {
        match self {
            DatasetProfile::Cifar10 => [3, 5, 7],
            _ => [2, 3, 5],
        }
    }

    pub fn filters(self) -> u64 {
        match self {
            DatasetProfile::Cifar10 => 30,
            _ => 10,
        }
    }

    pub fn channels(self) -> u64 {
        match self {
            DatasetProfile::Cifar10 => 3,
            _ => 1,
        }
    }
}

impl fmt::Display for DatasetProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DatasetProfile::Mnist => "mnist",
            DatasetProfile::Fmnist => "fmnist",
            DatasetProfile::Cifar10 => "cifar10",
        })
    }
}

impl FromStr for DatasetProfile {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "mnist" => Ok(DatasetProfile::Mnist),
            "fmnist" | "fashionmnist" => Ok(DatasetProfile::Fmnist),
            "cifar10" | "cifar" => Ok(DatasetProfile::Cifar10),
            other => Err(format!("unknown dataset profile {other:?}")),
        }
    }
}

const POOL_KERNELS: [u64; 2] = [1, 2];
const HIDDEN_UNITS: u64 = 100;
const CLASSES: u64 = 10;

/// conv → pool → conv → pool → flatten → fc → fc.
pub fn lenet(profile: DatasetProfile, image: u64, conv_kernels: [u64; 2], pool_kernels: [u64; 2]) -> NetworkSpec {
    let k = profile.filters();
    NetworkSpec::new(
        format!(
            "{profile}-n{image}-c{}x{}-p{}x{}",
            conv_kernels[0], conv_kernels[1], pool_kernels[0], pool_kernels[1]
        ),
        TensorShape::new(image, profile.channels()),
        vec![
            ConvLayer::new(k, conv_kernels[0]).into(),
            PoolLayer::max(pool_kernels[0], pool_kernels[0]).into(),
            ConvLayer::new(k, conv_kernels[1]).into(),
            PoolLayer::max(pool_kernels[1], pool_kernels[1]).into(),
            Layer::FLATTEN,
            DenseLayer::new(HIDDEN_UNITS).into(),
            DenseLayer::new(CLASSES).into(),
        ],
    )
}

/// Every valid LeNet-style original of the profile's grid, optionally
/// restricted to one image size. Invalid geometries are dropped.
pub fn original_grid(profile: DatasetProfile, image: Option<u64>) -> Vec<NetworkSpec> {
    let mut out = Vec::new();
    for n in profile.image_sizes().into_iter().filter(|&n| image.is_none_or(|i| i == n)) {
        for c1 in profile.conv_kernels() {
            for c2 in profile.conv_kernels() {
                for p1 in POOL_KERNELS {
                    for p2 in POOL_KERNELS {
                        let net = lenet(profile, n, [c1, c2], [p1, p2]);
                        if validate(&net).is_valid() {
                            out.push(net);
                        }
                    }
                }
            }
        }
    }
    out
}

/// `count` originals drawn from the grid. Draws are distinct until the grid
/// is exhausted, after which a fresh permutation is started.
pub fn sample_original_networks(profile: DatasetProfile, count: usize, seed: u64) -> Vec<NetworkSpec> {
    draw_cyclic(original_grid(profile, None), count, seed)
}

/// As [`sample_original_networks`], restricted to one input size.
pub fn sample_original_networks_at(profile: DatasetProfile, image: u64, count: usize, seed: u64) -> Vec<NetworkSpec> {
    draw_cyclic(original_grid(profile, Some(image)), count, seed)
}

fn draw_cyclic(grid: Vec<NetworkSpec>, count: usize, seed: u64) -> Vec<NetworkSpec> {
    if grid.is_empty() {
        return Vec::new();
    }
    let mut rng = seeded_rng(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let mut round = grid.clone();
        round.shuffle(&mut rng);
        out.extend(round.into_iter().take(count - out.len()));
    }
    out
}
