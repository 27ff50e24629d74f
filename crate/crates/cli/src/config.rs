//! Experiment configuration: a sectioned key-value file (TOML syntax, one
//! section per module). Unknown keys are hard errors, and validation
//! messages name the offending field.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

use peano_ldp::potential::{AngularProfile, GradientSystem, HomogeneousPotential};
use peano_ldp::sphere;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub potential: PotentialSection,
    pub grid: GridSection,
    #[serde(default)]
    pub spectrum: SpectrumSection,
    pub flow: FlowSection,
    pub sde: SdeSection,
    #[serde(default)]
    pub density: DensitySection,
    #[serde(default)]
    pub rates: RatesSection,
    pub targets: Vec<TargetSection>,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSection {
    /// `isotropic`, `cosine`, or `tabulated`.
    pub family: String,
    pub d: usize,
    pub gamma: f64,
    /// Isotropic value `θ ≡ value`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    /// Cosine family `θ = c0 + c1 cos(k φ)` (d = 2).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<u32>,
    /// Two-column (angle, value) text file for the tabulated d = 2 family.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub n: usize,
    /// Box half-width; omitted → smallest L with `e^{-U(L e)} < 1e-12` over
    /// the sphere mesh.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l: Option<f64>,
    #[serde(default = "default_true")]
    pub cell_centered: bool,
    #[serde(default = "default_memory_cap")]
    pub memory_cap_bytes: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumSection {
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
}

impl Default for SpectrumSection {
    fn default() -> Self {
        Self { k: default_k(), tol: default_tol(), max_iter: default_max_iter() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowSection {
    /// Departure-angle mesh size (d = 1 always uses `{-1, +1}`).
    #[serde(default = "default_angles")]
    pub n_angles: usize,
    pub t_max: f64,
    #[serde(default = "default_r0")]
    pub r0: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SdeSection {
    /// Strictly decreasing ε ladder.
    pub epsilons: Vec<f64>,
    pub n_paths: usize,
    pub master_seed: u64,
    #[serde(default = "default_dt_cap")]
    pub dt_cap: f64,
    #[serde(default = "default_stride")]
    pub record_stride: usize,
    /// Simulation horizon; omitted → the largest target time.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
    #[serde(default)]
    pub write_endpoints: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensitySection {
    #[serde(default = "default_bridge_samples")]
    pub n_bridge_samples: usize,
    #[serde(default = "default_bridge_steps")]
    pub n_bridge_steps: usize,
    #[serde(default = "default_mercer_k")]
    pub mercer_k: usize,
    /// Ensemble size for the representation check.
    #[serde(default = "default_density_paths")]
    pub n_paths: usize,
    /// Fixed KDE bandwidth (per dimension); omitted → Silverman.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bandwidth: Option<Vec<f64>>,
}

impl Default for DensitySection {
    fn default() -> Self {
        Self {
            n_bridge_samples: default_bridge_samples(),
            n_bridge_steps: default_bridge_steps(),
            mercer_k: default_mercer_k(),
            n_paths: default_density_paths(),
            bandwidth: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatesSection {
    /// Number of finely recorded paths classified into rates.csv.
    #[serde(default = "default_classify")]
    pub classify_paths: usize,
    /// Neighborhood radius for endpoint classification; omitted → 0.4 × the
    /// minimum distance between extremal endpoints.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha_delta: Option<f64>,
    #[serde(default = "default_alpha_paths")]
    pub alpha_n_paths: usize,
    /// Residual tolerance of the ODE-solution classifier.
    #[serde(default = "default_solution_tol")]
    pub solution_tol: f64,
}

impl Default for RatesSection {
    fn default() -> Self {
        Self {
            classify_paths: default_classify(),
            alpha_delta: None,
            alpha_n_paths: default_alpha_paths(),
            solution_tol: default_solution_tol(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSection {
    pub t: f64,
    pub x: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_out_dir")]
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: default_out_dir() }
    }
}

fn default_true() -> bool {
    true
}
fn default_memory_cap() -> u64 {
    peano_ldp::spectral::DEFAULT_MEMORY_CAP
}
fn default_k() -> usize {
    8
}
fn default_tol() -> f64 {
    1e-10
}
fn default_max_iter() -> usize {
    10_000
}
fn default_angles() -> usize {
    512
}
fn default_r0() -> f64 {
    1e-6
}
fn default_dt_cap() -> f64 {
    1e-4
}
fn default_stride() -> usize {
    100
}
fn default_bridge_samples() -> usize {
    20_000
}
fn default_bridge_steps() -> usize {
    2048
}
fn default_mercer_k() -> usize {
    8
}
fn default_density_paths() -> usize {
    50_000
}
fn default_classify() -> usize {
    200
}
fn default_alpha_paths() -> usize {
    50_000
}
fn default_solution_tol() -> f64 {
    peano_ldp::rates::DEFAULT_SOLUTION_TOL
}
fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

impl ExperimentConfig {
    /// Parse from a config file; unknown keys are hard errors.
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config file {}", path.display()))?;
        let cfg: ExperimentConfig =
            toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        cfg.validate(path.parent().unwrap_or(Path::new(".")))?;
        Ok(cfg)
    }

    /// Field-by-field validation with messages naming the field.
    pub fn validate(&self, base_dir: &Path) -> anyhow::Result<()> {
        let p = &self.potential;
        if !(p.gamma > 0.0 && p.gamma < 1.0) {
            bail!("potential.gamma = {} outside the open interval (0, 1)", p.gamma);
        }
        if !(1..=3).contains(&p.d) {
            bail!("potential.d = {} not in {{1, 2, 3}}", p.d);
        }
        match p.family.as_str() {
            "isotropic" => {
                if p.value.is_none() {
                    bail!("potential.value required for the isotropic family");
                }
            }
            "cosine" => {
                if p.d != 2 {
                    bail!("potential.family = \"cosine\" requires potential.d = 2");
                }
                if p.c0.is_none() || p.c1.is_none() || p.k.is_none() {
                    bail!("potential.c0, potential.c1, potential.k required for the cosine family");
                }
            }
            "tabulated" => {
                if p.d != 2 {
                    bail!("potential.family = \"tabulated\" requires potential.d = 2");
                }
                let Some(file) = &p.file else {
                    bail!("potential.file required for the tabulated family");
                };
                let resolved = resolve_path(base_dir, file);
                if !resolved.exists() {
                    bail!("potential.file = {} does not exist", resolved.display());
                }
            }
            other => bail!("potential.family = \"{other}\" (expected isotropic | cosine | tabulated)"),
        }
        if self.grid.n < 16 || self.grid.n % 2 != 0 {
            bail!("grid.n = {} must be even and >= 16", self.grid.n);
        }
        if let Some(l) = self.grid.l {
            if !(l > 0.0) {
                bail!("grid.l = {l} must be positive");
            }
        }
        if self.spectrum.k == 0 || self.spectrum.k > 16 {
            bail!("spectrum.k = {} not in 1..=16", self.spectrum.k);
        }
        if !(self.flow.t_max > 0.0) {
            bail!("flow.t_max = {} must be positive", self.flow.t_max);
        }
        if !(self.flow.r0 > 0.0) {
            bail!("flow.r0 = {} must be positive", self.flow.r0);
        }
        if self.sde.epsilons.is_empty() {
            bail!("sde.epsilons must not be empty");
        }
        for w in self.sde.epsilons.windows(2) {
            if !(w[1] < w[0]) {
                bail!("sde.epsilons must be strictly decreasing, got {:?}", self.sde.epsilons);
            }
        }
        if self.sde.epsilons.iter().any(|&e| !(e > 0.0)) {
            bail!("sde.epsilons must be positive");
        }
        if self.sde.n_paths == 0 {
            bail!("sde.n_paths must be >= 1");
        }
        if !(self.sde.dt_cap > 0.0) {
            bail!("sde.dt_cap = {} must be positive", self.sde.dt_cap);
        }
        if self.sde.record_stride == 0 {
            bail!("sde.record_stride must be >= 1");
        }
        if self.targets.is_empty() {
            bail!("targets must contain at least one (t, x) point");
        }
        for (i, tgt) in self.targets.iter().enumerate() {
            if !(tgt.t > 0.0) {
                bail!("targets[{i}].t = {} must be positive", tgt.t);
            }
            if tgt.x.len() != p.d {
                bail!(
                    "targets[{i}].x has dimension {} but potential.d = {}",
                    tgt.x.len(),
                    p.d
                );
            }
        }
        Ok(())
    }

    pub fn build_potential(&self, base_dir: &Path) -> anyhow::Result<HomogeneousPotential<f64>> {
        let p = &self.potential;
        let profile = match p.family.as_str() {
            "isotropic" => AngularProfile::isotropic(p.d, p.value.unwrap())
                .map_err(|e| anyhow::anyhow!("potential.value: {e}"))?,
            "cosine" => AngularProfile::cosine(p.c0.unwrap(), p.c1.unwrap(), p.k.unwrap())
                .map_err(|e| anyhow::anyhow!("potential.c0/c1: {e}"))?,
            "tabulated" => {
                let path = resolve_path(base_dir, p.file.as_ref().unwrap());
                let (angles, values) = read_profile_table(&path)?;
                AngularProfile::tabulated(angles, values)
                    .map_err(|e| anyhow::anyhow!("potential.file: {e}"))?
            }
            _ => unreachable!("validated"),
        };
        HomogeneousPotential::new(profile, p.gamma)
            .map_err(|e| anyhow::anyhow!("potential.gamma: {e}"))
    }

    /// Box half-width: explicit, or the smallest `L` with
    /// `e^{-U(L e)} < 1e-12` for every mesh direction.
    pub fn resolved_l(&self, pot: &HomogeneousPotential<f64>) -> f64 {
        if let Some(l) = self.grid.l {
            return l;
        }
        let theta_min = sphere::default_mesh::<f64>(pot.dim())
            .iter()
            .map(|y| pot.profile().eval(y))
            .fold(f64::INFINITY, f64::min);
        // U(L e) = θ(e) L^{1+γ} > -ln(1e-12)
        let target = -(1e-12f64).ln();
        (target / theta_min).powf(1.0 / (1.0 + self.potential.gamma))
    }

    /// Simulation horizon: explicit or the largest target time.
    pub fn resolved_t_max(&self) -> f64 {
        self.sde
            .t_max
            .unwrap_or_else(|| self.targets.iter().map(|t| t.t).fold(0.0, f64::max))
    }

    /// Fully resolved copy (every optional filled in) for the manifest.
    pub fn resolved(&self, pot: &HomogeneousPotential<f64>) -> ExperimentConfig {
        let mut out = self.clone();
        out.grid.l = Some(self.resolved_l(pot));
        out.sde.t_max = Some(self.resolved_t_max());
        let _ = pot.u(&vec![0.0; pot.dim()]);
        out
    }
}

fn resolve_path(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// Two-column (angle, value) whitespace- or comma-separated text file.
pub fn read_profile_table(path: &Path) -> anyhow::Result<(Vec<f64>, Vec<f64>)> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading profile table {}", path.display()))?;
    let mut angles = Vec::new();
    let mut values = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parts: Vec<&str> = line.split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .collect();
        if parts.len() != 2 {
            bail!("{}:{}: expected two columns", path.display(), lineno + 1);
        }
        angles.push(parts[0].parse::<f64>().with_context(|| format!("line {}", lineno + 1))?);
        values.push(parts[1].parse::<f64>().with_context(|| format!("line {}", lineno + 1))?);
    }
    Ok((angles, values))
}
