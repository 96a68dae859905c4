use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

/// Which Santaló campaign to run; the first three are proved cases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SantaloCase {
    /// Every body unconditional.
    Unconditional,
    /// `j = k`, arbitrary symmetric bodies.
    JEqualsK,
    /// `j` even, slots `3..k` unconditional.
    JEvenMixed,
    /// Arbitrary symmetric bodies; reported, not asserted.
    General,
}

impl SantaloCase {
    pub fn is_theorem(self) -> bool {
        self != Self::General
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub seed: u64,
    /// Monte Carlo samples per estimate.
    pub samples: usize,
    /// Floor added to every `·stderr` tolerance, relative to the compared value.
    pub tol: f64,
    pub corpus: CorpusCfg,
    pub verify_santalo: SantaloCfg,
    pub symmetrize: SymmetrizeCfg,
    pub search: SearchCfg,
    pub radial: RadialCfg,
    pub functional: FunctionalCfg,
    pub ball: BallCfg,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            seed: 0,
            samples: 200_000,
            tol: 1e-9,
            corpus: CorpusCfg::default(),
            verify_santalo: SantaloCfg::default(),
            symmetrize: SymmetrizeCfg::default(),
            search: SearchCfg::default(),
            radial: RadialCfg::default(),
            functional: FunctionalCfg::default(),
            ball: BallCfg::default(),
        }
    }
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).context("invalid configuration")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml(&text)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusCfg {
    /// Generator count: each random polytope is the hull of `±` these `m` points.
    pub generators: usize,
    /// Full sweeps allowed when unconditionalizing a corpus body.
    pub max_sweeps: usize,
}

impl Default for CorpusCfg {
    fn default() -> Self {
        Self { generators: 6, max_sweeps: 50 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SantaloCfg {
    pub case: SantaloCase,
    pub n: usize,
    pub j: usize,
    pub k: usize,
    pub tuples: usize,
}

impl Default for SantaloCfg {
    fn default() -> Self {
        Self { case: SantaloCase::Unconditional, n: 2, j: 2, k: 3, tuples: 200 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SymmetrizeCfg {
    pub n: usize,
    pub j: usize,
    pub k: usize,
    pub chains: usize,
    /// Sampled section heights per Steiner step.
    pub heights: usize,
    /// Relative slack allowed on the volume product.
    pub product_slack: f64,
    /// Constraint slack allowed on section containment.
    pub section_slack: f64,
}

impl Default for SymmetrizeCfg {
    fn default() -> Self {
        Self { n: 2, j: 2, k: 2, chains: 50, heights: 10, product_slack: 1e-9, section_slack: 1e-8 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SearchStart {
    /// Polytope approximation of the `l_j` ball in every slot.
    Ball,
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchCfg {
    pub n: usize,
    pub j: usize,
    pub k: usize,
    pub start: SearchStart,
    pub restarts: usize,
    pub steps: usize,
    /// Initial temperature on the log-ratio scale.
    pub t0: f64,
    /// Geometric cooling factor per step.
    pub cooling: f64,
    /// Initial vertex perturbation scale, decayed with the temperature.
    pub step: f64,
    /// Boundary directions of the starting ball approximation.
    pub ball_vertices: usize,
}

impl Default for SearchCfg {
    fn default() -> Self {
        Self {
            n: 2,
            j: 2,
            k: 3,
            start: SearchStart::Random,
            restarts: 4,
            steps: 1000,
            t0: 0.05,
            cooling: 0.995,
            step: 0.1,
            ball_vertices: 32,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadialCfg {
    pub n: usize,
    pub k: usize,
    /// Sampled unit directions per body.
    pub directions: usize,
    /// Random polytope tuples in the mixed corpus.
    pub tuples: usize,
}

impl Default for RadialCfg {
    fn default() -> Self {
        Self { n: 2, k: 3, directions: 48, tuples: 10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FunctionalCfg {
    pub n: usize,
    pub indicator: bool,
    pub exponential: bool,
    pub smooth: bool,
    pub ball: bool,
    /// Body pairs in the indicator corpus.
    pub tuples: usize,
    /// Lattice spacing of tabulated functions.
    pub spacing: f64,
    /// Random tuples drawn by the polarity sampler.
    pub polarity_samples: usize,
}

impl Default for FunctionalCfg {
    fn default() -> Self {
        Self { n: 2, indicator: true, exponential: true, smooth: true, ball: true, tuples: 6, spacing: 0.0625, polarity_samples: 50_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BallCfg {
    pub restarts: usize,
    pub max_iter: usize,
}

impl Default for BallCfg {
    fn default() -> Self {
        Self { restarts: 8, max_iter: 400 }
    }
}
