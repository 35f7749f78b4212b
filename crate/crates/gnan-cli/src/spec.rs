//! Parser for experiment spec files: small `key = value` text files that
//! describe a family of planted benchmark datasets (a block structure swept
//! over one knob, an attribute design swept over signal strength) together
//! with the fit settings used when benchmarking against them.

use std::fmt;
use std::ops::Range;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use gnan::synth::{
    planted_community, planted_disassortative, planted_mixture, BlockMatrix, DependencyMatrix,
    StrongBlock,
};
use gnan::{Matrix, Mode};

/// Which planted link structure the spec sweeps over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Structure {
    /// Assortative diagonal blocks; sweeps the within-community probability.
    Community,
    /// Three communities with strong off-diagonal coupling; sweeps the base
    /// between-community probability.
    Disassortative,
    /// Five communities mixing assortative, disassortative and overlapping
    /// blocks; sweeps the four coupling knobs in lockstep.
    Mixture,
    /// Two communities, dense core and silent periphery; sweeps the two
    /// coupling knobs in lockstep.
    CorePeriphery,
}

impl fmt::Display for Structure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Structure::Community => "community",
            Structure::Disassortative => "disassortative",
            Structure::Mixture => "mixture",
            Structure::CorePeriphery => "core-periphery",
        };
        f.write_str(s)
    }
}

impl Structure {
    fn parse(s: &str) -> Result<Self> {
        match s {
            "community" => Ok(Structure::Community),
            "disassortative" => Ok(Structure::Disassortative),
            "mixture" => Ok(Structure::Mixture),
            "core-periphery" => Ok(Structure::CorePeriphery),
            other => bail!(
                "unknown structure {other:?} (expected community, disassortative, \
                 mixture or core-periphery)"
            ),
        }
    }
}

/// One point of the sweep: an x value for curve output plus the block matrix
/// realised at that point.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub x: f64,
    pub blocks: BlockMatrix,
}

/// Fit settings carried by a spec (all optional in the file; defaults match
/// the library defaults).
#[derive(Debug, Clone, Copy)]
pub struct FitSettings {
    pub restarts: usize,
    pub max_iters: usize,
    pub tol: f64,
    pub jitter: f64,
}

impl Default for FitSettings {
    fn default() -> Self {
        FitSettings { restarts: 10, max_iters: 500, tol: 1e-6, jitter: 0.1 }
    }
}

/// A fully validated experiment description.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub name: String,
    pub structure: Structure,
    pub block_sizes: Vec<usize>,
    /// Number of communities handed to the fitter (defaults to the number of
    /// planted blocks).
    pub communities: usize,
    pub repetitions: usize,
    pub modes: Vec<Mode>,
    pub seed: u64,
    pub sweep: Vec<SweepPoint>,
    pub p_strong: Vec<f64>,
    pub p_noise: f64,
    pub strong_per_block: usize,
    pub extra_noise_attrs: usize,
    pub overrides: Vec<StrongBlock>,
    pub fit: FitSettings,
}

impl ExperimentSpec {
    /// Parses and validates a spec file.
    pub fn load(path: &Path) -> Result<ExperimentSpec> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading spec file {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in spec file {}", path.display()))
    }

    /// Parses a spec from text. Unknown keys, missing required keys and
    /// malformed values are all hard errors.
    pub fn parse(text: &str) -> Result<ExperimentSpec> {
        let mut raw = RawSpec::default();
        for (lineno, line) in text.lines().enumerate() {
            let line = match line.find('#') {
                Some(pos) => &line[..pos],
                None => line,
            };
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected `key = value`", lineno + 1))?;
            raw.set(key.trim(), value.trim())
                .with_context(|| format!("line {}", lineno + 1))?;
        }
        raw.build()
    }

    /// Attribute design for one strong-signal probability of the sweep.
    pub fn dependency(&self, p_strong: f64) -> Result<DependencyMatrix> {
        gnan::synth::dependency_design(
            self.block_sizes.len(),
            self.strong_per_block,
            p_strong,
            self.p_noise,
            self.extra_noise_attrs,
            &self.overrides,
        )
        .map_err(|e| anyhow!("attribute design: {e}"))
    }

    /// Total number of nodes per dataset.
    pub fn n_nodes(&self) -> usize {
        self.block_sizes.iter().sum()
    }
}

/// Short stable label for a mode, used in output file names.
pub fn mode_label(mode: Mode) -> &'static str {
    match mode {
        Mode::Both => "both",
        Mode::LinksOnly => "links",
        Mode::AttrsOnly => "attrs",
    }
}

/// Formats a float the way it appears in file names and curve columns:
/// shortest round-trip representation (`0.06`, not `0.060000`).
pub fn fmt_knob(x: f64) -> String {
    format!("{x}")
}

#[derive(Default)]
struct RawSpec {
    name: Option<String>,
    structure: Option<Structure>,
    block_sizes: Option<Vec<usize>>,
    communities: Option<usize>,
    repetitions: Option<usize>,
    modes: Option<Vec<Mode>>,
    seed: Option<u64>,
    lambda: Option<f64>,
    omega: Option<Vec<f64>>,
    lambda1: Option<Vec<f64>>,
    omega1: Option<Vec<f64>>,
    omega2: Option<Vec<f64>>,
    omega3: Option<Vec<f64>>,
    omega4: Option<Vec<f64>>,
    p_strong: Option<Vec<f64>>,
    p_noise: Option<f64>,
    strong_per_block: Option<usize>,
    extra_noise_attrs: Option<usize>,
    overrides: Vec<StrongBlock>,
    restarts: Option<usize>,
    max_iters: Option<usize>,
    tol: Option<f64>,
    jitter: Option<f64>,
}

impl RawSpec {
    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "name" => set_once(&mut self.name, key, parse_name(value)?),
            "structure" => set_once(&mut self.structure, key, Structure::parse(value)?),
            "block_sizes" => set_once(&mut self.block_sizes, key, parse_list(value, key)?),
            "communities" => set_once(&mut self.communities, key, parse_scalar(value, key)?),
            "repetitions" => set_once(&mut self.repetitions, key, parse_scalar(value, key)?),
            "modes" => set_once(&mut self.modes, key, parse_modes(value)?),
            "seed" => set_once(&mut self.seed, key, parse_scalar(value, key)?),
            "lambda" => set_once(&mut self.lambda, key, parse_scalar(value, key)?),
            "omega" => set_once(&mut self.omega, key, parse_list(value, key)?),
            "lambda1" => set_once(&mut self.lambda1, key, parse_list(value, key)?),
            "omega1" => set_once(&mut self.omega1, key, parse_list(value, key)?),
            "omega2" => set_once(&mut self.omega2, key, parse_list(value, key)?),
            "omega3" => set_once(&mut self.omega3, key, parse_list(value, key)?),
            "omega4" => set_once(&mut self.omega4, key, parse_list(value, key)?),
            "p_strong" => set_once(&mut self.p_strong, key, parse_list(value, key)?),
            "p_noise" => set_once(&mut self.p_noise, key, parse_scalar(value, key)?),
            "strong_per_block" => {
                set_once(&mut self.strong_per_block, key, parse_scalar(value, key)?)
            }
            "extra_noise_attrs" => {
                set_once(&mut self.extra_noise_attrs, key, parse_scalar(value, key)?)
            }
            "strong_block" => {
                self.overrides.push(parse_strong_block(value)?);
                Ok(())
            }
            "restarts" => set_once(&mut self.restarts, key, parse_scalar(value, key)?),
            "max_iters" => set_once(&mut self.max_iters, key, parse_scalar(value, key)?),
            "tol" => set_once(&mut self.tol, key, parse_scalar(value, key)?),
            "jitter" => set_once(&mut self.jitter, key, parse_scalar(value, key)?),
            other => bail!("unknown key {other:?}"),
        }
    }

    fn build(self) -> Result<ExperimentSpec> {
        let structure =
            self.structure.ok_or_else(|| anyhow!("missing required key `structure`"))?;
        {
            let block_sizes = self
                .block_sizes
                .as_ref()
                .ok_or_else(|| anyhow!("missing required key `block_sizes`"))?;
            if block_sizes.is_empty() || block_sizes.contains(&0) {
                bail!("block_sizes must be a non-empty list of positive counts");
            }
            let expected_blocks: Option<usize> = match structure {
                Structure::Community => None,
                Structure::Disassortative => Some(3),
                Structure::Mixture => Some(5),
                Structure::CorePeriphery => Some(2),
            };
            if let Some(expected) = expected_blocks {
                if block_sizes.len() != expected {
                    bail!(
                        "structure needs exactly {expected} blocks, block_sizes has {}",
                        block_sizes.len()
                    );
                }
            }
        }

        let sweep = build_sweep(structure, &self)?;
        if sweep.is_empty() {
            bail!("sweep is empty: provide at least one value");
        }

        let name = self.name.ok_or_else(|| anyhow!("missing required key `name`"))?;
        let block_sizes = self.block_sizes.expect("validated above");
        let repetitions =
            self.repetitions.ok_or_else(|| anyhow!("missing required key `repetitions`"))?;
        if repetitions == 0 {
            bail!("repetitions must be at least 1");
        }
        let p_strong = self.p_strong.ok_or_else(|| anyhow!("missing required key `p_strong`"))?;
        if p_strong.is_empty() {
            bail!("p_strong must list at least one value");
        }
        if !self.overrides.is_empty() && p_strong.len() != 1 {
            bail!(
                "strong_block overrides fix the attribute design, so p_strong must be a \
                 single value (it only names the output files)"
            );
        }

        let spec = ExperimentSpec {
            communities: self.communities.unwrap_or(block_sizes.len()),
            name,
            structure,
            block_sizes,
            repetitions,
            modes: self.modes.unwrap_or_else(|| vec![Mode::Both]),
            seed: self.seed.unwrap_or(0),
            sweep,
            p_strong,
            p_noise: self.p_noise.unwrap_or(0.1),
            strong_per_block: self.strong_per_block.unwrap_or(10),
            extra_noise_attrs: self.extra_noise_attrs.unwrap_or(0),
            overrides: self.overrides,
            fit: FitSettings {
                restarts: self.restarts.unwrap_or(FitSettings::default().restarts),
                max_iters: self.max_iters.unwrap_or(FitSettings::default().max_iters),
                tol: self.tol.unwrap_or(FitSettings::default().tol),
                jitter: self.jitter.unwrap_or(FitSettings::default().jitter),
            },
        };
        if spec.communities == 0 {
            bail!("communities must be at least 1");
        }
        // Validate the attribute design once per sweep value up front so a bad
        // spec fails at load time, not mid-run.
        for &p in &spec.p_strong {
            spec.dependency(p)?;
        }
        Ok(spec)
    }
}

fn build_sweep(structure: Structure, raw: &RawSpec) -> Result<Vec<SweepPoint>> {
    match structure {
        Structure::Community => {
            let omega = require(&raw.omega, "omega (list of within-community probabilities)")?;
            let lambda = require(&raw.lambda, "lambda (between-community probability)")?;
            forbid(raw.lambda1.is_some(), "lambda1", "community")?;
            forbid(raw.omega1.is_some() || raw.omega2.is_some(), "omega1..omega4", "community")?;
            omega
                .iter()
                .map(|&w| {
                    let blocks = planted_community(raw_blocks(raw), w, *lambda)?;
                    Ok(SweepPoint { x: w, blocks })
                })
                .collect()
        }
        Structure::Disassortative => {
            let lambda1 = require(&raw.lambda1, "lambda1 (list of base coupling probabilities)")?;
            forbid(raw.omega.is_some() || raw.lambda.is_some(), "omega/lambda", "disassortative")?;
            lambda1
                .iter()
                .map(|&l1| Ok(SweepPoint { x: l1, blocks: planted_disassortative(l1)? }))
                .collect()
        }
        Structure::Mixture => {
            let w1 = require(&raw.omega1, "omega1")?;
            let w2 = require(&raw.omega2, "omega2")?;
            let w3 = require(&raw.omega3, "omega3")?;
            let w4 = require(&raw.omega4, "omega4")?;
            let lambda = require(&raw.lambda, "lambda (background probability)")?;
            if w1.len() != w2.len() || w1.len() != w3.len() || w1.len() != w4.len() {
                bail!("omega1..omega4 must all have the same length");
            }
            (0..w1.len())
                .map(|i| {
                    let blocks = planted_mixture(w1[i], w2[i], w3[i], w4[i], *lambda)?;
                    Ok(SweepPoint { x: (i + 1) as f64, blocks })
                })
                .collect()
        }
        Structure::CorePeriphery => {
            let w3 = require(&raw.omega3, "omega3 (core density)")?;
            let w4 = require(&raw.omega4, "omega4 (core-periphery coupling)")?;
            forbid(raw.omega1.is_some() || raw.omega2.is_some(), "omega1/omega2", "core-periphery")?;
            if w3.len() != w4.len() {
                bail!("omega3 and omega4 must have the same length");
            }
            (0..w3.len())
                .map(|i| {
                    let m = Matrix::from_rows(&[vec![w3[i], w4[i]], vec![w4[i], 0.0]]);
                    let blocks = BlockMatrix::new(m)?;
                    Ok(SweepPoint { x: (i + 1) as f64, blocks })
                })
                .collect()
        }
    }
}

fn raw_blocks(raw: &RawSpec) -> usize {
    raw.block_sizes.as_ref().map_or(0, Vec::len)
}

fn require<'a, T>(opt: &'a Option<T>, what: &str) -> Result<&'a T> {
    opt.as_ref().ok_or_else(|| anyhow!("missing required key `{}`", what.split(' ').next().unwrap_or(what)).context(format!("this structure needs {what}")))
}

fn forbid(present: bool, key: &str, structure: &str) -> Result<()> {
    if present {
        bail!("key {key} does not apply to structure {structure}");
    }
    Ok(())
}

fn set_once<T>(slot: &mut Option<T>, key: &str, value: T) -> Result<()> {
    if slot.is_some() {
        bail!("duplicate key {key:?}");
    }
    *slot = Some(value);
    Ok(())
}

fn parse_name(value: &str) -> Result<String> {
    if value.is_empty() {
        bail!("name must not be empty");
    }
    if !value.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
        bail!("name {value:?} may only contain letters, digits, `_` and `-`");
    }
    Ok(value.to_string())
}

fn parse_scalar<T>(value: &str, key: &str) -> Result<T>
where
    T: std::str::FromStr,
    T::Err: fmt::Display,
{
    value.parse().map_err(|e| anyhow!("bad value for {key}: {e}"))
}

fn parse_list<T>(value: &str, key: &str) -> Result<Vec<T>>
where
    T: std::str::FromStr,
    T::Err: fmt::Display,
{
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|e| anyhow!("bad value for {key}: {e}")))
        .collect()
}

fn parse_modes(value: &str) -> Result<Vec<Mode>> {
    let modes: Vec<Mode> = value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| match s {
            "both" => Ok(Mode::Both),
            "links" => Ok(Mode::LinksOnly),
            "attrs" => Ok(Mode::AttrsOnly),
            other => bail!("unknown mode {other:?} (expected both, links or attrs)"),
        })
        .collect::<Result<_>>()?;
    if modes.is_empty() {
        bail!("modes must list at least one of both, links, attrs");
    }
    Ok(modes)
}

/// Parses `A..B x C..D @ P` into a strong-block override: communities A..B get
/// attributes C..D at on-probability P.
fn parse_strong_block(value: &str) -> Result<StrongBlock> {
    let (ranges, p) = value
        .split_once('@')
        .ok_or_else(|| anyhow!("strong_block needs the form `A..B x C..D @ P`"))?;
    let (comm, attr) = ranges
        .split_once('x')
        .ok_or_else(|| anyhow!("strong_block needs the form `A..B x C..D @ P`"))?;
    Ok(StrongBlock {
        communities: parse_range(comm.trim())?,
        attrs: parse_range(attr.trim())?,
        p: parse_scalar(p.trim(), "strong_block probability")?,
    })
}

fn parse_range(s: &str) -> Result<Range<usize>> {
    let (a, b) = s
        .split_once("..")
        .ok_or_else(|| anyhow!("bad range {s:?} (expected `start..end`)"))?;
    let start: usize = parse_scalar(a.trim(), "range start")?;
    let end: usize = parse_scalar(b.trim(), "range end")?;
    if end <= start {
        bail!("bad range {s:?}: end must be greater than start");
    }
    Ok(start..end)
}
