//! The JSON run configuration.

use std::path::{Path, PathBuf};

use hbem_core::asymptotics::check_sweep;
use hbem_core::geometry::{ellipsoid, icosphere, load_mesh, CavityScene, Point3, SurfaceMesh};
use hbem_core::solve::{BoundaryField, FieldLabel};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ShapeSpec {
    Icosphere {
        subdivisions: u32,
        #[serde(default = "one")]
        radius: f64,
    },
    Ellipsoid {
        subdivisions: u32,
        semi_axes: [f64; 3],
    },
    /// An OFF file, relative paths resolved against the config file's directory.
    File {
        path: PathBuf,
        /// Flat midpoint refinements applied after loading.
        #[serde(default)]
        refine: u32,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatumSpec {
    /// `g = -p . n`.
    Pressure { p: Point3 },
    Constant { value: f64 },
    Zero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub struct GridSpec {
    pub x_range: [f64; 2],
    pub y_range: [f64; 2],
    pub nx: usize,
    pub ny: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ObservationSpec {
    Points(Vec<Point3>),
    /// A plane grid at `x_d = 0`, `x` varying fastest.
    Grid(GridSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub shape: ShapeSpec,
    #[serde(default = "default_center")]
    pub z: Point3,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "one")]
    pub delta0: f64,
    #[serde(default = "default_datum")]
    pub datum: DatumSpec,
    #[serde(default = "default_observation")]
    pub observation: ObservationSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon_sweep: Option<Vec<f64>>,
    /// Registered trace solver name.
    #[serde(default = "default_method")]
    pub method: String,
    /// Negative control for `convergence`: compare against a zero model.
    #[serde(default)]
    pub drop_dipole: bool,
}

fn one() -> f64 {
    1.0
}

fn default_center() -> Point3 {
    [0.0, 0.0, -2.0]
}

fn default_epsilon() -> f64 {
    0.25
}

fn default_datum() -> DatumSpec {
    DatumSpec::Pressure { p: [0.0, 0.0, 1.0] }
}

fn default_observation() -> ObservationSpec {
    ObservationSpec::Points(vec![[0.5, 0.0, 0.0]])
}

fn default_method() -> String {
    "direct".into()
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("invalid config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut config = Self::from_json(&text)?;
        if let ShapeSpec::File { path: mesh, .. } = &mut config.shape {
            if mesh.is_relative() {
                if let Some(dir) = path.parent() {
                    *mesh = dir.join(&*mesh);
                }
            }
        }
        Ok(config)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    /// First 16 hex digits of the SHA-256 of the canonical JSON form.
    pub fn fingerprint(&self) -> String {
        Sha256::digest(self.to_json().as_bytes())
            .iter()
            .take(8)
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn base_mesh(&self) -> Result<SurfaceMesh, CliError> {
        let mesh = match &self.shape {
            ShapeSpec::Icosphere { subdivisions, radius } => icosphere(*subdivisions, *radius),
            ShapeSpec::Ellipsoid { subdivisions, semi_axes } => ellipsoid(*subdivisions, *semi_axes),
            ShapeSpec::File { path, refine } => load_mesh(path).and_then(|m| m.subdivide(*refine)),
        };
        mesh.map_err(|e| CliError::Config(format!("shape: {e}")))
    }

    /// Scene-level invariants: `|z_d| >= delta0` and `eps * circumradius < |z_d|`.
    pub fn validate_scene(&self, mesh: &SurfaceMesh) -> Result<(), CliError> {
        let depth = -self.z[2];
        if !(self.delta0 > 0.0) {
            return Err(CliError::Config(format!("delta0: must be positive, got {}", self.delta0)));
        }
        if !(depth >= self.delta0) {
            return Err(CliError::Config(format!(
                "z: |z_d| = {depth} must be at least delta0 = {} below the plane",
                self.delta0
            )));
        }
        let mut eps = vec![self.epsilon];
        if let Some(sweep) = &self.epsilon_sweep {
            check_sweep(sweep).map_err(|e| CliError::Config(format!("epsilon_sweep: {e}")))?;
            eps.extend(sweep);
        }
        let radius = mesh.circumradius();
        for e in eps {
            if !(e > 0.0) {
                return Err(CliError::Config(format!("epsilon: must be positive, got {e}")));
            }
            if !(e * radius < depth) {
                return Err(CliError::Config(format!(
                    "epsilon: eps * circumradius = {} must be below |z_d| = {depth}",
                    e * radius
                )));
            }
        }
        if self.method.is_empty() {
            return Err(CliError::Config("method: empty solver name".into()));
        }
        Ok(())
    }

    pub fn scene(&self, mesh: &SurfaceMesh, epsilon: f64) -> Result<CavityScene, CliError> {
        CavityScene::new(mesh.clone(), self.z, epsilon, self.delta0)
            .map_err(|e| CliError::Config(format!("scene: {e}")))
    }

    pub fn datum(&self, mesh: &SurfaceMesh) -> BoundaryField {
        match &self.datum {
            DatumSpec::Pressure { p } => BoundaryField::pressure(mesh, *p),
            DatumSpec::Constant { value } => BoundaryField::constant(mesh, *value, FieldLabel::G),
            DatumSpec::Zero => BoundaryField::zeros(mesh, FieldLabel::G),
        }
    }

    pub fn observation_points(&self) -> Result<Vec<Point3>, CliError> {
        let points = match &self.observation {
            ObservationSpec::Points(p) => p.clone(),
            ObservationSpec::Grid(g) => {
                if g.nx < 1 || g.ny < 1 {
                    return Err(CliError::Config("observation.grid: nx and ny must be >= 1".into()));
                }
                let axis = |r: [f64; 2], n: usize, k: usize| {
                    if n == 1 {
                        r[0]
                    } else {
                        r[0] + (r[1] - r[0]) * k as f64 / (n - 1) as f64
                    }
                };
                (0..g.ny)
                    .flat_map(|j| (0..g.nx).map(move |i| (i, j)))
                    .map(|(i, j)| [axis(g.x_range, g.nx, i), axis(g.y_range, g.ny, j), 0.0])
                    .collect()
            }
        };
        if points.is_empty() {
            return Err(CliError::Config("observation: no points".into()));
        }
        if let Some(p) = points.iter().find(|p| p.iter().any(|c| !c.is_finite()) || p[2] > 0.0) {
            return Err(CliError::Config(format!(
                "observation: point {p:?} is not in the closed lower half-space"
            )));
        }
        Ok(points)
    }
}
