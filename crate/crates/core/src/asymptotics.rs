//! Small-cavity asymptotics of the plane displacement: the auxiliary traces
//! `Psi_i`, the polarization tensor `M` and the two-term expansion
//!
//! `u_eps(x) ~ 2 eps^2 Gamma(x - z) int g_hat
//!           + 2 eps^3 grad Gamma(x - z) . int { n ext(g_hat) - zeta g_hat }`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{HbemError, Result};
use crate::field::evaluate_on_plane;
use crate::geometry::{dot, sub, CavityScene, Point3, SurfaceMesh};
use crate::kernels::LAPLACE_3D;
use crate::linalg::symmetric_eigenvalues_3x3;
use crate::solve::{BoundaryField, DirectLu, ExteriorSystem, FieldLabel, TraceSystem};

pub type Tensor3 = [[f64; 3]; 3];

/// Traces on `dB` of `Psi_i`, the decaying exterior solutions with `dPsi_i/dn = -n_i`.
pub fn psi_traces(mesh: &SurfaceMesh) -> Result<[BoundaryField; 3]> {
    psi_traces_with(&ExteriorSystem::new(mesh)?)
}

pub fn psi_traces_with(system: &ExteriorSystem) -> Result<[BoundaryField; 3]> {
    let mesh = system.mesh();
    let trace = |i: usize| {
        let mut e = [0.0; 3];
        e[i] = 1.0;
        system.trace(&BoundaryField::pressure(mesh, e), FieldLabel::PsiComponent)
    };
    Ok([trace(0)?, trace(1)?, trace(2)?])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolarizationResult {
    /// `(M + M^T) / 2`.
    pub tensor: Tensor3,
    /// `M_ij = sum n_i (zeta_j + Psi_j) area` before symmetrization.
    pub raw: Tensor3,
    pub shape_fingerprint: String,
    pub panel_count: usize,
    /// `||M - M^T||_inf` of the raw tensor.
    pub raw_symmetry_defect: f64,
    pub symmetry_defect: f64,
    /// Eigenvalues of the symmetrized tensor, ascending.
    pub eigenvalues: [f64; 3],
    pub min_eigenvalue: f64,
}

impl PolarizationResult {
    pub fn relative_raw_defect(&self) -> f64 {
        self.raw_symmetry_defect / tensor_norm_inf(&self.raw)
    }

    pub fn is_positive_definite(&self) -> bool {
        self.min_eigenvalue > 0.0
    }
}

pub fn polarization_tensor(mesh: &SurfaceMesh) -> Result<PolarizationResult> {
    let psi = psi_traces(mesh)?;
    let mut raw = geometric_tensor(mesh);
    for (k, p) in mesh.panels().iter().enumerate() {
        for i in 0..3 {
            for j in 0..3 {
                raw[i][j] += p.normal[i] * psi[j].values()[k] * p.area;
            }
        }
    }
    let tensor: Tensor3 = std::array::from_fn(|i| std::array::from_fn(|j| 0.5 * (raw[i][j] + raw[j][i])));
    let eigenvalues = symmetric_eigenvalues_3x3(&tensor);
    Ok(PolarizationResult {
        tensor,
        raw,
        shape_fingerprint: mesh.fingerprint().to_string(),
        panel_count: mesh.len(),
        raw_symmetry_defect: symmetry_defect(&raw),
        symmetry_defect: symmetry_defect(&tensor),
        eigenvalues,
        min_eigenvalue: eigenvalues[0],
    })
}

/// `sum n_i zeta_j area`; equals `|B| delta_ij` in the continuum.
pub fn geometric_tensor(mesh: &SurfaceMesh) -> Tensor3 {
    let mut m = [[0.0; 3]; 3];
    for p in mesh.panels() {
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] += p.normal[i] * p.centroid[j] * p.area;
            }
        }
    }
    m
}

pub fn tensor_norm_inf(m: &Tensor3) -> f64 {
    m.iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

fn symmetry_defect(m: &Tensor3) -> f64 {
    let d: Tensor3 = std::array::from_fn(|i| std::array::from_fn(|j| m[i][j] - m[j][i]));
    tensor_norm_inf(&d)
}

pub fn mat_vec3(m: &Tensor3, v: Point3) -> Point3 {
    m.map(|row| dot(row, v))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExpansionSample {
    pub point: Point3,
    pub leading_monopole: f64,
    pub dipole: f64,
    pub total: f64,
}

/// The `eps`-independent moments of a datum `g_hat` sampled on `B`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralExpansion {
    /// `int g_hat`.
    pub monopole_moment: f64,
    /// `int { n ext(g_hat) - zeta g_hat }`.
    pub dipole_moment: Point3,
}

impl GeneralExpansion {
    pub fn new(base: &SurfaceMesh, g_hat: &BoundaryField) -> Result<Self> {
        Self::with_system(&ExteriorSystem::new(base)?, g_hat)
    }

    pub fn with_system(system: &ExteriorSystem, g_hat: &BoundaryField) -> Result<Self> {
        let base = system.mesh();
        g_hat.check_mesh(base)?;
        let monopole_moment = match g_hat.pressure_vector() {
            // int -p.n = -p . sum(a n), and the exactly summed vector area of a
            // closed mesh is exactly zero
            Some(p) => 0.0 - dot(p, base.exact_vector_area()),
            None => g_hat.integral(base)?,
        };
        let ext = system.trace(g_hat, FieldLabel::F)?;
        let mut dipole_moment = [0.0; 3];
        for ((p, e), g) in base.panels().iter().zip(ext.values()).zip(g_hat.values()) {
            for k in 0..3 {
                dipole_moment[k] += (p.normal[k] * e - p.centroid[k] * g) * p.area;
            }
        }
        Ok(Self {
            monopole_moment,
            dipole_moment,
        })
    }

    pub fn sample(&self, x: Point3, scene: &CavityScene) -> Result<ExpansionSample> {
        check_on_plane(x)?;
        let eps = scene.epsilon();
        let r = sub(x, scene.center());
        let leading_monopole = if self.monopole_moment == 0.0 {
            0.0
        } else {
            2.0 * eps * eps * LAPLACE_3D.gamma(&r)? * self.monopole_moment
        };
        let dipole = dipole_term(r, eps, self.dipole_moment)?;
        Ok(ExpansionSample {
            point: x,
            leading_monopole,
            dipole,
            total: leading_monopole + dipole,
        })
    }
}

fn check_on_plane(x: Point3) -> Result<()> {
    if x[2] != 0.0 {
        return Err(HbemError::OffPlane(x[2]));
    }
    Ok(())
}

fn dipole_term(r: Point3, eps: f64, moment: Point3) -> Result<f64> {
    let grad = LAPLACE_3D.grad_gamma(&r)?;
    Ok(2.0 * eps.powi(3) * (grad[0] * moment[0] + grad[1] * moment[1] + grad[2] * moment[2]))
}

/// Two-term expansion for a datum `g_hat` on `scene.base()`.
pub fn expansion_general(x: Point3, scene: &CavityScene, g_hat: &BoundaryField) -> Result<ExpansionSample> {
    check_on_plane(x)?;
    GeneralExpansion::new(scene.base(), g_hat)?.sample(x, scene)
}

/// `2 eps^3 grad Gamma(x - z) . M p`. Pass the raw tensor to agree with
/// [`expansion_general`] on the same mesh to rounding.
pub fn expansion_constant_pressure(
    x: Point3,
    scene: &CavityScene,
    p: Point3,
    tensor: &Tensor3,
) -> Result<ExpansionSample> {
    check_on_plane(x)?;
    let dipole = dipole_term(sub(x, scene.center()), scene.epsilon(), mat_vec3(tensor, p))?;
    Ok(ExpansionSample {
        point: x,
        leading_monopole: 0.0,
        dipole,
        total: dipole,
    })
}

/// `max_k |f_eps(z + eps zeta_k) - eps ext(g_hat)(zeta_k)|` where `f_eps` solves
/// the half-space trace equation for `g(z + eps zeta) = g_hat(zeta)`.
pub fn inverse_operator_expansion_check(scene: &CavityScene, g_hat: &BoundaryField) -> Result<f64> {
    let ext = ExteriorSystem::new(scene.base())?.trace(g_hat, FieldLabel::F)?;
    let system = TraceSystem::new(scene)?;
    let (f, _) = system.solve(&g_hat.transported(scene.placed())?, &DirectLu)?;
    Ok(trace_deviation(&f, &ext, scene.epsilon()))
}

fn trace_deviation(f: &BoundaryField, ext: &BoundaryField, eps: f64) -> f64 {
    f.values()
        .iter()
        .zip(ext.values())
        .map(|(a, b)| (a - eps * b).abs())
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub epsilon: f64,
    pub u_bie: f64,
    pub expansion: f64,
    pub error: f64,
    pub trace_deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceStudy {
    pub rows: Vec<ConvergenceRow>,
    /// Log-log slope of `error` against `epsilon`.
    pub slope: f64,
    /// Log-log slope of `trace_deviation` against `epsilon`.
    pub trace_slope: f64,
}

pub fn check_sweep(epsilons: &[f64]) -> Result<()> {
    if epsilons.len() < 3 {
        return Err(HbemError::InvalidInput(format!(
            "need >= 3 points in the epsilon sweep, got {}",
            epsilons.len()
        )));
    }
    if epsilons.iter().any(|e| !(*e > 0.0) || !e.is_finite()) {
        return Err(HbemError::InvalidInput("sweep values must be positive".into()));
    }
    if epsilons.windows(2).any(|w| w[1] >= w[0]) {
        return Err(HbemError::InvalidInput("sweep values must be strictly decreasing".into()));
    }
    Ok(())
}

/// Full solve against the constant-pressure expansion at one plane point for
/// each `eps`. With `include_dipole = false` the model is dropped to zero.
pub fn convergence_study(
    base: &SurfaceMesh,
    center: Point3,
    delta0: f64,
    x: Point3,
    p: Point3,
    epsilons: &[f64],
    include_dipole: bool,
) -> Result<ConvergenceStudy> {
    check_sweep(epsilons)?;
    check_on_plane(x)?;
    let exterior = ExteriorSystem::new(base)?;
    let g_hat = BoundaryField::pressure(base, p);
    let ext = exterior.trace(&g_hat, FieldLabel::F)?;
    let moments = GeneralExpansion::with_system(&exterior, &g_hat)?;
    let rows = epsilons
        .par_iter()
        .map(|&eps| {
            let scene = CavityScene::new(base.clone(), center, eps, delta0)?;
            let system = TraceSystem::new(&scene)?;
            let g = BoundaryField::pressure(scene.placed(), p);
            let (f, _) = system.solve(&g, &DirectLu)?;
            let u_bie = evaluate_on_plane(x, &scene, &f, &g)?.value;
            let expansion = if include_dipole {
                moments.sample(x, &scene)?.total
            } else {
                0.0
            };
            Ok(ConvergenceRow {
                epsilon: eps,
                u_bie,
                expansion,
                error: (u_bie - expansion).abs(),
                trace_deviation: trace_deviation(&f, &ext, eps),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let eps: Vec<f64> = rows.iter().map(|r| r.epsilon).collect();
    let slope = log_log_slope(&eps, &rows.iter().map(|r| r.error).collect::<Vec<_>>());
    let trace_slope = log_log_slope(&eps, &rows.iter().map(|r| r.trace_deviation).collect::<Vec<_>>());
    Ok(ConvergenceStudy {
        rows,
        slope,
        trace_slope,
    })
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len().min(y.len()) as f64;
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}
