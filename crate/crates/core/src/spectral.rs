//! Eigenvalues of the discrete adjoint operator `K* + D~*` on a placed cavity.

use serde::Serialize;

use crate::assembly::{assemble, OperatorKind};
use crate::error::Result;
use crate::geometry::{CavityScene, SurfaceMesh};
use crate::linalg::{eigenvalues, eigenvector_near, Complex, Matrix};

/// Imaginary parts above this are reported as discretization artifacts.
pub const IMAG_TOLERANCE: f64 = 1e-2;
/// Window around 1/2 used to count the top eigenvalue.
pub const HALF_WINDOW: f64 = 0.02;
/// Allowed discrete excursion above -1/2 ...
pub const LOWER_SLACK: f64 = 0.005;
/// ... and above 1/2.
pub const UPPER_SLACK: f64 = 0.02;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumReport {
    /// `(re, im)`, sorted by real part descending.
    pub eigenvalues: Vec<(f64, f64)>,
    pub max_imag: f64,
    pub imag_flagged: bool,
    pub count_near_half: usize,
    pub min_real: f64,
    pub max_real: f64,
}

impl SpectrumReport {
    pub fn from_eigenvalues(values: &[Complex]) -> Self {
        let mut eigenvalues: Vec<(f64, f64)> = values.iter().map(|c| (c.re, c.im)).collect();
        eigenvalues.sort_by(|a, b| b.0.total_cmp(&a.0).then(b.1.total_cmp(&a.1)));
        let max_imag = eigenvalues.iter().map(|e| e.1.abs()).fold(0.0, f64::max);
        let count_near_half = eigenvalues
            .iter()
            .filter(|e| (e.0 - 0.5).hypot(e.1) <= HALF_WINDOW)
            .count();
        Self {
            max_imag,
            imag_flagged: max_imag > IMAG_TOLERANCE,
            count_near_half,
            min_real: eigenvalues.last().map_or(f64::NAN, |e| e.0),
            max_real: eigenvalues.first().map_or(f64::NAN, |e| e.0),
            eigenvalues,
        }
    }

    /// Real parts in `(-1/2 + slack, 1/2 + slack)`, near-real, and exactly one
    /// eigenvalue near 1/2.
    pub fn inclusion_holds(&self) -> bool {
        self.min_real > -0.5 + LOWER_SLACK
            && self.max_real < 0.5 + UPPER_SLACK
            && !self.imag_flagged
            && self.count_near_half == 1
    }

    /// Spectral radius of `1/2 I - K - D~`, whose eigenvalues are `1/2 - lambda`.
    pub fn series_spectral_radius(&self) -> f64 {
        self.eigenvalues
            .iter()
            .map(|e| (0.5 - e.0).hypot(e.1))
            .fold(0.0, f64::max)
    }
}

/// `K* + D~*` on the placed cavity.
pub fn adjoint_operator(scene: &CavityScene) -> Result<Matrix> {
    let mesh = scene.placed();
    let kstar = assemble(OperatorKind::Kstar, mesh)?;
    let dstar = assemble(OperatorKind::DtildeStar, mesh)?;
    Ok(kstar.matrix().add_scaled(dstar.matrix(), 1.0))
}

/// `K + D~` on the placed cavity.
pub fn primal_operator(scene: &CavityScene) -> Result<Matrix> {
    let mesh = scene.placed();
    let k = assemble(OperatorKind::K, mesh)?;
    let d = assemble(OperatorKind::Dtilde, mesh)?;
    Ok(k.matrix().add_scaled(d.matrix(), 1.0))
}

pub fn spectrum(scene: &CavityScene) -> Result<SpectrumReport> {
    Ok(SpectrumReport::from_eigenvalues(&eigenvalues(&adjoint_operator(scene)?)?))
}

/// Spectrum of `K*` alone (image term zeroed).
pub fn free_space_spectrum(mesh: &SurfaceMesh) -> Result<SpectrumReport> {
    let kstar = assemble(OperatorKind::Kstar, mesh)?;
    Ok(SpectrumReport::from_eigenvalues(&eigenvalues(kstar.matrix())?))
}

/// `||A v - v/2|| / ||v||`.
pub fn half_residual(a: &Matrix, v: &[f64]) -> f64 {
    let av = a.matvec(v);
    let r: f64 = av.iter().zip(v).map(|(x, y)| (x - 0.5 * y).powi(2)).sum();
    let n: f64 = v.iter().map(|y| y * y).sum();
    (r / n).sqrt()
}

/// Eigen-residual at 1/2 of the eigenvector whose eigenvalue is nearest 1/2.
pub fn half_eigenfunction_check(scene: &CavityScene) -> Result<f64> {
    let a = adjoint_operator(scene)?;
    let (v, _) = eigenvector_near(&a, 0.5)?;
    Ok(half_residual(&a, &v))
}

/// Hausdorff distance between the spectra of `K + D~` and `K* + D~*`.
pub fn adjoint_conjugacy_check(scene: &CavityScene) -> Result<f64> {
    let primal = eigenvalues(&primal_operator(scene)?)?;
    let adjoint = eigenvalues(&adjoint_operator(scene)?)?;
    Ok(hausdorff_distance(&primal, &adjoint))
}

pub fn hausdorff_distance(a: &[Complex], b: &[Complex]) -> f64 {
    let directed = |from: &[Complex], to: &[Complex]| {
        from.iter()
            .map(|x| to.iter().map(|y| x.dist(*y)).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    directed(a, b).max(directed(b, a))
}
