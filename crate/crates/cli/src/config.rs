//! Scenario configuration files (TOML).
//!
//! ```toml
//! scenario = "convergence"   # onebody | manybody | medium | convergence | scaling
//! seed = 3
//!
//! [medium]                   # epsilon0 and mu0 default to 1
//! omega = 6.283185307179586
//!
//! [shape]                    # kind = sphere | ellipsoid | mesh
//! kind = "sphere"
//! order = 32                 # quadrature order, optional
//! t_samples = 6
//!
//! [impedance]
//! h = [0.2, 0.0]             # [re, im], Re h >= 0
//! kappa = 0.5
//!
//! [incident]
//! amplitude = [[0, 0], [1, 0], [0, 0]]
//! direction = [1, 0, 0]
//!
//! [particle]                 # onebody, scaling
//! a = 1e-3
//! center = [0, 0, 0]
//!
//! [domain]
//! boxes = [{ min = [0, 0, 0], max = [1, 1, 1] }]
//!
//! [cloud]                    # N(x) = density + density_gradient·x
//! a = 1e-3                   # manybody only
//! density = 1.0
//!
//! [grid]
//! cubes_per_unit = 8
//!
//! [convergence]
//! a_levels = [6.944444444444444e-3, 3.472222222222222e-3, 1.736111111111111e-3]
//! reference_cubes_per_unit = 48
//! compare_side = 0.25
//!
//! [scaling]
//! a_values = [1e-5, 1e-4, 1e-3]   # ka <= 0.05
//! kappas = [0.0, 0.5, 0.9]
//! observation = [1, 0, 0]
//!
//! [solver]
//! method = "iterative"       # direct | iterative
//! tol = 1e-8
//!
//! [output]
//! dir = "out"
//! points = [[2, 0, 0]]
//! far_field = { theta = 8, phi = 16, kr = 100 }
//! ```

use std::path::{Path, PathBuf};

use impscat_core::effective_medium::IeMethod;
use impscat_core::geometry::{compute_shape_matrices, ParticleShape, ShapeMatrices, TriMesh, DEFAULT_MESH_ORDER, DEFAULT_SMOOTH_ORDER};
use impscat_core::many_body::{AxisBox, CloudOptions, Domain, MIN_SPACING_RATIO};
use impscat_core::{CVec3, GmresOptions, Impedance, Medium, PlaneWave, SolveMethod, Vec3, C64};
use serde::{Deserialize, Serialize};
use toml::de::{DeTable, DeValue};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    Onebody,
    Manybody,
    Medium,
    Convergence,
    Scaling,
}

impl ScenarioKind {
    pub fn name(&self) -> &'static str {
        match self {
            ScenarioKind::Onebody => "onebody",
            ScenarioKind::Manybody => "manybody",
            ScenarioKind::Medium => "medium",
            ScenarioKind::Convergence => "convergence",
            ScenarioKind::Scaling => "scaling",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: Option<ScenarioKind>,
    #[serde(default)]
    pub seed: u64,
    pub medium: MediumConfig,
    #[serde(default)]
    pub shape: ShapeConfig,
    pub impedance: ImpedanceConfig,
    #[serde(default)]
    pub incident: IncidentConfig,
    pub particle: Option<ParticleConfig>,
    #[serde(default)]
    pub domain: DomainConfig,
    pub cloud: Option<CloudConfig>,
    pub grid: Option<GridConfig>,
    pub convergence: Option<ConvergenceConfig>,
    pub scaling: Option<ScalingConfig>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub output: OutputConfig,
    /// Directory relative paths in the file are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MediumConfig {
    #[serde(default = "one")]
    pub epsilon0: f64,
    #[serde(default = "one")]
    pub mu0: f64,
    pub omega: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeKind {
    #[default]
    Sphere,
    Ellipsoid,
    Mesh,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShapeConfig {
    #[serde(default)]
    pub kind: ShapeKind,
    pub semi_axes: Option<[f64; 3]>,
    /// OFF file for `kind = "mesh"`.
    pub mesh: Option<PathBuf>,
    pub order: Option<usize>,
    #[serde(default = "default_t_samples")]
    pub t_samples: usize,
}

fn default_t_samples() -> usize {
    6
}

impl Default for ShapeConfig {
    fn default() -> Self {
        ShapeConfig { kind: ShapeKind::Sphere, semi_axes: None, mesh: None, order: None, t_samples: default_t_samples() }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImpedanceConfig {
    pub h: [f64; 2],
    pub kappa: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IncidentConfig {
    pub amplitude: [[f64; 2]; 3],
    pub direction: [f64; 3],
}

impl Default for IncidentConfig {
    fn default() -> Self {
        IncidentConfig { amplitude: [[0.0, 0.0], [1.0, 0.0], [0.0, 0.0]], direction: [1.0, 0.0, 0.0] }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParticleConfig {
    pub a: f64,
    #[serde(default)]
    pub center: [f64; 3],
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxConfig {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub boxes: Vec<BoxConfig>,
}

impl Default for DomainConfig {
    fn default() -> Self {
        DomainConfig { boxes: vec![BoxConfig { min: [0.0; 3], max: [1.0; 3] }] }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CloudConfig {
    pub a: Option<f64>,
    #[serde(default = "one")]
    pub density: f64,
    #[serde(default)]
    pub density_gradient: [f64; 3],
    #[serde(default = "one")]
    pub spacing_constant: f64,
    #[serde(default = "default_probe")]
    pub probe_resolution: usize,
}

fn default_probe() -> usize {
    24
}

impl Default for CloudConfig {
    fn default() -> Self {
        CloudConfig { a: None, density: 1.0, density_gradient: [0.0; 3], spacing_constant: 1.0, probe_resolution: default_probe() }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default = "default_cubes")]
    pub cubes_per_unit: usize,
    #[serde(default)]
    pub method: IeMethod,
}

fn default_cubes() -> usize {
    8
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { cubes_per_unit: default_cubes(), method: IeMethod::Fft }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceConfig {
    pub a_levels: Vec<f64>,
    #[serde(default = "default_reference")]
    pub reference_cubes_per_unit: usize,
    #[serde(default = "default_compare_side")]
    pub compare_side: f64,
}

fn default_reference() -> usize {
    32
}

fn default_compare_side() -> f64 {
    0.25
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingConfig {
    pub a_values: Vec<f64>,
    /// Defaults to `impedance.kappa`.
    pub kappas: Option<Vec<f64>>,
    pub observation: [f64; 3],
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default)]
    pub method: SolveMethod,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_restart")]
    pub restart: usize,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
}

fn default_tol() -> f64 {
    1e-8
}
fn default_restart() -> usize {
    60
}
fn default_max_iters() -> usize {
    2000
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { method: SolveMethod::Iterative, tol: default_tol(), restart: default_restart(), max_iters: default_max_iters() }
    }
}

impl SolverConfig {
    pub fn gmres(&self) -> GmresOptions {
        GmresOptions { tol: self.tol, restart: self.restart, max_iters: self.max_iters }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FarFieldGrid {
    pub theta: usize,
    pub phi: usize,
    pub kr: f64,
}

impl Default for FarFieldGrid {
    fn default() -> Self {
        FarFieldGrid { theta: 8, phi: 16, kr: 100.0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_out")]
    pub dir: PathBuf,
    #[serde(default)]
    pub points: Vec<[f64; 3]>,
    #[serde(default)]
    pub far_field: FarFieldGrid,
    #[serde(default = "default_true")]
    pub with_h: bool,
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}
fn default_true() -> bool {
    true
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: default_out(), points: Vec::new(), far_field: FarFieldGrid::default(), with_h: true }
    }
}

/// A failed check, located by its dotted key path.
#[derive(Debug, Clone, PartialEq)]
pub struct Invalid {
    pub key: String,
    pub message: String,
}

fn invalid(key: impl Into<String>, message: impl Into<String>) -> Invalid {
    Invalid { key: key.into(), message: message.into() }
}

fn positive(key: &str, v: f64) -> std::result::Result<(), Invalid> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(invalid(key, format!("must be positive and finite, got {v}")))
    }
}

fn finite3(key: &str, v: &[f64; 3]) -> std::result::Result<(), Invalid> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(invalid(key, "components must be finite"))
    }
}

fn aligned(key: &str, domain: &DomainConfig, per_unit: f64) -> std::result::Result<(), Invalid> {
    for (i, b) in domain.boxes.iter().enumerate() {
        for v in b.min.iter().chain(&b.max) {
            let s = v * per_unit;
            if (s - s.round()).abs() > 1e-9 * s.abs().max(1.0) {
                return Err(invalid(
                    key,
                    format!("domain box {i} is not aligned with cubes of side {}", 1.0 / per_unit),
                ));
            }
        }
    }
    Ok(())
}

impl ScenarioConfig {
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::Config {
            origin: origin.to_string(),
            line: e.span().map(|s| line_at(text, s.start)),
            key: "syntax".to_string(),
            message: e.message().trim().to_string(),
        })
    }

    /// Reads and validates a configuration file for scenario `kind`.
    pub fn load(path: &Path, kind: ScenarioKind) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
        let origin = path.display().to_string();
        let mut cfg = Self::parse(&text, &origin)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        cfg.validate(kind).map_err(|e| locate(&text, &origin, e))?;
        Ok(cfg)
    }

    /// Checks every parameter needed by `kind` before anything is computed.
    pub fn validate(&self, kind: ScenarioKind) -> std::result::Result<(), Invalid> {
        if let Some(s) = self.scenario {
            if s != kind {
                return Err(invalid("scenario", format!("file is for `{}` but `{}` was requested", s.name(), kind.name())));
            }
        }
        self.medium().map_err(|e| invalid("medium", e.to_string()))?;
        let (h, kappa) = (self.impedance.h, self.impedance.kappa);
        if !(h[0].is_finite() && h[1].is_finite()) || h[0] < 0.0 {
            return Err(invalid("impedance.h", format!("needs finite [re, im] with re >= 0, got {h:?}")));
        }
        if !(0.0..1.0).contains(&kappa) {
            return Err(invalid("impedance.kappa", format!("must lie in [0, 1), got {kappa}")));
        }
        self.plane_wave().map_err(|e| invalid("incident", e.to_string()))?;
        match (self.shape.kind, &self.shape.semi_axes, &self.shape.mesh) {
            (ShapeKind::Ellipsoid, None, _) => return Err(invalid("shape.semi_axes", "required for an ellipsoid")),
            (ShapeKind::Mesh, _, None) => return Err(invalid("shape.mesh", "required for a mesh")),
            _ => {}
        }
        if let Some(ax) = self.shape.semi_axes {
            if ax.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                return Err(invalid("shape.semi_axes", format!("must be positive, got {ax:?}")));
            }
        }
        if self.shape.order == Some(0) {
            return Err(invalid("shape.order", "must be positive"));
        }
        if self.shape.t_samples == 0 {
            return Err(invalid("shape.t_samples", "must be positive"));
        }
        if self.domain.boxes.is_empty() {
            return Err(invalid("domain.boxes", "needs at least one box"));
        }
        self.domain().map_err(|e| invalid("domain.boxes", e.to_string()))?;
        let s = &self.solver;
        if !(s.tol.is_finite() && s.tol > 0.0 && s.tol < 1.0) {
            return Err(invalid("solver.tol", format!("must lie in (0, 1), got {}", s.tol)));
        }
        if s.restart == 0 || s.max_iters == 0 {
            return Err(invalid("solver", "restart and max_iters must be positive"));
        }
        for (i, p) in self.output.points.iter().enumerate() {
            finite3(&format!("output.points[{i}]"), p)?;
        }
        match kind {
            ScenarioKind::Onebody => {
                self.validate_particle()?;
                let ff = &self.output.far_field;
                if ff.theta == 0 || ff.phi == 0 {
                    return Err(invalid("output.far_field", "theta and phi counts must be positive"));
                }
                if !(ff.kr.is_finite() && ff.kr >= impscat_core::one_body::FAR_FIELD_MIN_KR) {
                    return Err(invalid(
                        "output.far_field.kr",
                        format!("must be at least {}, got {}", impscat_core::one_body::FAR_FIELD_MIN_KR, ff.kr),
                    ));
                }
            }
            ScenarioKind::Manybody => {
                let a = self.cloud_config().a.ok_or_else(|| invalid("cloud.a", "required for a many-body run"))?;
                positive("cloud.a", a)?;
                self.validate_cloud(a)?;
            }
            ScenarioKind::Medium => {
                self.validate_density()?;
                let g = self.grid_config();
                if g.cubes_per_unit == 0 {
                    return Err(invalid("grid.cubes_per_unit", "must be positive"));
                }
                aligned("grid.cubes_per_unit", &self.domain, g.cubes_per_unit as f64)?;
            }
            ScenarioKind::Convergence => {
                let c = self.convergence.as_ref().ok_or_else(|| invalid("convergence", "section is required"))?;
                if c.a_levels.len() < 2 {
                    return Err(invalid("convergence.a_levels", "needs at least two levels"));
                }
                for (i, a) in c.a_levels.iter().enumerate() {
                    positive(&format!("convergence.a_levels[{i}]"), *a)?;
                    self.validate_cloud(*a).map_err(|e| invalid(format!("convergence.a_levels[{i}]"), e.message))?;
                }
                if c.a_levels.windows(2).any(|w| w[1] >= w[0]) {
                    return Err(invalid("convergence.a_levels", "levels must be strictly decreasing"));
                }
                if c.reference_cubes_per_unit < 2 {
                    return Err(invalid("convergence.reference_cubes_per_unit", "must be at least 2"));
                }
                aligned("convergence.reference_cubes_per_unit", &self.domain, c.reference_cubes_per_unit as f64)?;
                positive("convergence.compare_side", c.compare_side)?;
                aligned("convergence.compare_side", &self.domain, 1.0 / c.compare_side)?;
            }
            ScenarioKind::Scaling => {
                let center = self.validate_particle()?;
                let sc = self.scaling.as_ref().ok_or_else(|| invalid("scaling", "section is required"))?;
                validate_scaling(sc, &self.medium().expect("checked"), center)?;
            }
        }
        Ok(())
    }

    fn validate_particle(&self) -> std::result::Result<Vec3, Invalid> {
        let p = self.particle.as_ref().ok_or_else(|| invalid("particle", "section is required"))?;
        positive("particle.a", p.a)?;
        finite3("particle.center", &p.center)?;
        Ok(Vec3(p.center))
    }

    fn validate_density(&self) -> std::result::Result<f64, Invalid> {
        let c = self.cloud_config();
        finite3("cloud.density_gradient", &c.density_gradient)?;
        let mut max: f64 = 0.0;
        for b in &self.domain.boxes {
            for corner in 0..8 {
                let x: [f64; 3] = std::array::from_fn(|i| if corner >> i & 1 == 1 { b.max[i] } else { b.min[i] });
                let n = c.density + (0..3).map(|i| c.density_gradient[i] * x[i]).sum::<f64>();
                if !(n.is_finite() && n >= -1e-12 * c.density.abs().max(1.0)) {
                    return Err(invalid("cloud.density", format!("density is negative ({n}) at domain corner {x:?}")));
                }
                max = max.max(n);
            }
        }
        Ok(max)
    }

    fn validate_cloud(&self, a: f64) -> std::result::Result<(), Invalid> {
        let n_max = self.validate_density()?;
        let c = self.cloud_config();
        positive("cloud.spacing_constant", c.spacing_constant)?;
        if c.probe_resolution == 0 {
            return Err(invalid("cloud.probe_resolution", "must be positive"));
        }
        if n_max > 0.0 {
            let d = c.spacing_constant * a.powf((2.0 - self.impedance.kappa) / 3.0) * n_max.powf(-1.0 / 3.0);
            if d < MIN_SPACING_RATIO * a {
                return Err(invalid(
                    "cloud.a",
                    format!("lattice spacing {d:.3e} is below {MIN_SPACING_RATIO}·a = {:.3e}; decrease a", MIN_SPACING_RATIO * a),
                ));
            }
        }
        Ok(())
    }

    pub fn medium(&self) -> impscat_core::Result<Medium> {
        Medium::new(self.medium.epsilon0, self.medium.mu0, self.medium.omega)
    }

    pub fn impedance(&self) -> impscat_core::Result<Impedance> {
        Impedance::new(self.h(), self.impedance.kappa)
    }

    pub fn h(&self) -> C64 {
        C64::new(self.impedance.h[0], self.impedance.h[1])
    }

    pub fn plane_wave(&self) -> impscat_core::Result<PlaneWave> {
        let amp = CVec3(self.incident.amplitude.map(|[re, im]| C64::new(re, im)));
        PlaneWave::new(amp, Vec3(self.incident.direction))
    }

    pub fn domain(&self) -> impscat_core::Result<Domain> {
        let boxes = self
            .domain
            .boxes
            .iter()
            .map(|b| AxisBox::new(Vec3(b.min), Vec3(b.max)))
            .collect::<impscat_core::Result<Vec<_>>>()?;
        Domain::new(boxes)
    }

    pub fn cloud_config(&self) -> CloudConfig {
        self.cloud.unwrap_or_default()
    }

    pub fn grid_config(&self) -> GridConfig {
        self.grid.unwrap_or_default()
    }

    pub fn cloud_options(&self) -> CloudOptions {
        let c = self.cloud_config();
        CloudOptions { spacing_constant: c.spacing_constant, seed: self.seed, probe_resolution: c.probe_resolution }
    }

    /// `N(x) = density + density_gradient·x`.
    pub fn density(&self) -> impl Fn(&Vec3) -> f64 + Sync {
        let c = self.cloud_config();
        move |x: &Vec3| (c.density + (0..3).map(|i| c.density_gradient[i] * x[i]).sum::<f64>()).max(0.0)
    }

    pub fn particle_shape(&self) -> impscat_core::Result<ParticleShape> {
        Ok(match self.shape.kind {
            ShapeKind::Sphere => ParticleShape::sphere(1.0),
            ShapeKind::Ellipsoid => ParticleShape::ellipsoid(self.shape.semi_axes.unwrap_or([1.0; 3])),
            ShapeKind::Mesh => {
                let rel = self.shape.mesh.clone().unwrap_or_default();
                ParticleShape::TriMesh(TriMesh::load(&self.base_dir.join(rel))?)
            }
        })
    }

    pub fn shape_matrices(&self) -> impscat_core::Result<ShapeMatrices> {
        let shape = self.particle_shape()?;
        let default = if self.shape.kind == ShapeKind::Mesh { DEFAULT_MESH_ORDER } else { DEFAULT_SMOOTH_ORDER };
        compute_shape_matrices(&shape, self.shape.order.unwrap_or(default), self.shape.t_samples)
    }

    pub fn output_dir(&self) -> PathBuf {
        self.base_dir.join(&self.output.dir)
    }
}

fn validate_scaling(sc: &ScalingConfig, med: &Medium, center: Vec3) -> std::result::Result<(), Invalid> {
    if sc.a_values.len() < 3 {
        return Err(invalid("scaling.a_values", format!("needs at least 3 values, got {}", sc.a_values.len())));
    }
    for (i, a) in sc.a_values.iter().enumerate() {
        let key = format!("scaling.a_values[{i}]");
        positive(&key, *a)?;
        if med.k() * a > 0.05 {
            return Err(invalid(key, format!("ka = {:.3e} exceeds 0.05", med.k() * a)));
        }
    }
    let (lo, hi) = sc.a_values.iter().fold((f64::INFINITY, 0.0f64), |(l, h), a| (l.min(*a), h.max(*a)));
    if hi < 10.0 * lo * (1.0 - 1e-12) {
        return Err(invalid("scaling.a_values", "values must span at least one decade"));
    }
    if let Some(ks) = &sc.kappas {
        if ks.is_empty() {
            return Err(invalid("scaling.kappas", "must not be empty"));
        }
        for (i, k) in ks.iter().enumerate() {
            if !(0.0..1.0).contains(k) {
                return Err(invalid(format!("scaling.kappas[{i}]"), format!("must lie in [0, 1), got {k}")));
            }
        }
    }
    finite3("scaling.observation", &sc.observation)?;
    let r = (Vec3(sc.observation) - center).norm();
    if r < 10.0 * hi {
        return Err(invalid("scaling.observation", format!("must be at least 10·a = {:.3e} from the particle", 10.0 * hi)));
    }
    Ok(())
}

fn line_at(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|b| *b == b'\n').count() + 1
}

/// Line of the deepest existing element of a dotted key path such as
/// `domain.boxes[1].min`.
pub fn key_line(text: &str, key: &str) -> Option<usize> {
    let doc = DeTable::parse(text).ok()?;
    let root = DeValue::Table(doc.into_inner());
    let mut node = &root;
    let mut found = None;
    for part in key.split('.') {
        let (name, indices) = match part.find('[') {
            Some(p) => (&part[..p], &part[p..]),
            None => (part, ""),
        };
        let Some(next) = node.get(name) else { break };
        node = next.get_ref();
        found = Some(next.span().start);
        for idx in indices.split(['[', ']']).filter(|s| !s.is_empty()) {
            let Some(next) = idx.parse::<usize>().ok().and_then(|i| node.get(i)) else { break };
            node = next.get_ref();
            found = Some(next.span().start);
        }
    }
    found.map(|off| line_at(text, off))
}

pub fn locate(text: &str, origin: &str, e: Invalid) -> CliError {
    CliError::Config { origin: origin.to_string(), line: key_line(text, &e.key), key: e.key, message: e.message }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = "seed = 1\n[medium]\nomega = 6.0\n[impedance]\nh = [0.2, 0.0]\nkappa = 0.5\n[particle]\na = 1e-3\n";

    fn check(text: &str, kind: ScenarioKind) -> std::result::Result<(), CliError> {
        let cfg = ScenarioConfig::parse(text, "test.toml")?;
        cfg.validate(kind).map_err(|e| locate(text, "test.toml", e))
    }

    #[test]
    fn minimal_onebody_config_is_valid() {
        check(BASE, ScenarioKind::Onebody).unwrap();
    }

    #[test]
    fn errors_carry_line_numbers() {
        let bad = BASE.replace("omega = 6.0", "omega = -6.0");
        match check(&bad, ScenarioKind::Onebody).unwrap_err() {
            CliError::Config { line, .. } => assert_eq!(line, Some(2)),
            e => panic!("{e}"),
        }
        let bad = BASE.replace("kappa = 0.5", "kappa = 1.5");
        match check(&bad, ScenarioKind::Onebody).unwrap_err() {
            CliError::Config { line, key, .. } => {
                assert_eq!(key, "impedance.kappa");
                assert_eq!(line, Some(6));
            }
            e => panic!("{e}"),
        }
        let bad = format!("{BASE}typo = 3\n");
        match check(&bad, ScenarioKind::Onebody).unwrap_err() {
            CliError::Config { line, .. } => assert_eq!(line, Some(9)),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn indexed_keys_resolve() {
        let text = "[scaling]\na_values = [\n  1e-4,\n  1e-3,\n  -1.0,\n]\n";
        assert_eq!(key_line(text, "scaling.a_values[2]"), Some(5));
        assert_eq!(key_line(text, "scaling.missing"), Some(1));
    }

    #[test]
    fn scaling_needs_three_points_and_a_decade() {
        let two = format!("{BASE}[scaling]\na_values = [1e-4, 1e-3]\nobservation = [1, 0, 0]\n");
        assert!(check(&two, ScenarioKind::Scaling).is_err());
        let narrow = format!("{BASE}[scaling]\na_values = [1e-4, 2e-4, 5e-4]\nobservation = [1, 0, 0]\n");
        assert!(check(&narrow, ScenarioKind::Scaling).is_err());
        let ok = format!("{BASE}[scaling]\na_values = [1e-5, 1e-4, 1e-3]\nkappas = [0.0, 0.9]\nobservation = [1, 0, 0]\n");
        assert!(check(&ok, ScenarioKind::Scaling).is_ok());
    }

    #[test]
    fn crowded_cloud_is_rejected_before_running() {
        let text = BASE.replace("[particle]\na = 1e-3\n", "[cloud]\na = 0.2\n");
        match check(&text, ScenarioKind::Manybody).unwrap_err() {
            CliError::Config { key, .. } => assert_eq!(key, "cloud.a"),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn scenario_mismatch_is_reported() {
        let text = format!("scenario = \"medium\"\n{BASE}");
        assert!(check(&text, ScenarioKind::Onebody).is_err());
    }
}
