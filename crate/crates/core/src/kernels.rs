//! Closed-form kernels of potential theory in `R^d`, `d >= 3`.
//!
//! Points are plain coordinate slices whose length must equal the dimension
//! of the [`KernelConstants`] they are evaluated with. The last coordinate is
//! the vertical one; the half-space of interest is `x_d < 0`.

use std::f64::consts::PI;

use crate::error::{HbemError, Result};

/// Dimension-dependent constants of the fundamental solution
/// `Gamma(x) = kappa_d |x|^(2-d)`, `kappa_d = 1 / (omega_d (2 - d))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelConstants {
    dim: usize,
    omega: f64,
    kappa: f64,
}

/// The three-dimensional constants used by every scene.
pub const LAPLACE_3D: KernelConstants = KernelConstants {
    dim: 3,
    omega: 4.0 * PI,
    kappa: -1.0 / (4.0 * PI),
};

impl KernelConstants {
    pub fn new(dim: usize) -> Result<Self> {
        if dim < 3 {
            return Err(HbemError::UnsupportedDimension(dim));
        }
        let omega = unit_sphere_area(dim);
        Ok(Self {
            dim,
            omega,
            kappa: 1.0 / (omega * (2.0 - dim as f64)),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Surface area of the unit `(d-1)`-sphere.
    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn gamma(&self, x: &[f64]) -> Result<f64> {
        debug_assert_eq!(x.len(), self.dim);
        let r = norm(x);
        if r == 0.0 {
            return Err(HbemError::SingularPoint { kernel: "gamma" });
        }
        Ok(self.kappa * r.powi(2 - self.dim as i32))
    }

    /// `grad Gamma(x) = x / (omega_d |x|^d)`.
    pub fn grad_gamma(&self, x: &[f64]) -> Result<Vec<f64>> {
        debug_assert_eq!(x.len(), self.dim);
        let r = norm(x);
        if r == 0.0 {
            return Err(HbemError::SingularPoint { kernel: "grad_gamma" });
        }
        let scale = 1.0 / (self.omega * r.powi(self.dim as i32));
        Ok(x.iter().map(|c| c * scale).collect())
    }

    /// Half-space Neumann function `N(x, y) = Gamma(x - y) + Gamma(x~ - y)`.
    pub fn neumann_function(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        let direct = self.radial(x, y, false, "neumann_function")?;
        let image = self.radial(x, y, true, "neumann_function")?;
        Ok(self.kappa * (direct.powi(2 - self.dim as i32) + image.powi(2 - self.dim as i32)))
    }

    /// Double-layer kernel `(y - x) . n_y / (omega_d |x - y|^d)`, i.e. `dGamma(x - y)/dn_y`.
    pub fn kernel_k(&self, x: &[f64], y: &[f64], n_y: &[f64]) -> Result<f64> {
        self.dipole(x, y, n_y, false, "kernel_K")
    }

    /// Adjoint kernel `(x - y) . n_x / (omega_d |x - y|^d)`.
    pub fn kernel_kstar(&self, x: &[f64], y: &[f64], n_x: &[f64]) -> Result<f64> {
        self.dipole(y, x, n_x, false, "kernel_Kstar")
    }

    /// Image double-layer kernel `(y - x~) . n_y / (omega_d |x~ - y|^d)`.
    pub fn kernel_dtilde(&self, x: &[f64], y: &[f64], n_y: &[f64]) -> Result<f64> {
        self.dipole(x, y, n_y, true, "kernel_Dtilde")
    }

    /// Adjoint image kernel `(x - y~) . n_x / (omega_d |y~ - x|^d)`.
    pub fn kernel_dtilde_star(&self, x: &[f64], y: &[f64], n_x: &[f64]) -> Result<f64> {
        // |x~ - y| = |x - y~| and (x - y~) . n_x = (x~ - y)~ . n_x, so this is D~ with roles swapped.
        self.dipole(y, x, n_x, true, "kernel_DtildeStar")
    }

    /// `|x - y|`, or `|x~ - y|` when `reflect_x`.
    fn radial(&self, x: &[f64], y: &[f64], reflect_x: bool, kernel: &'static str) -> Result<f64> {
        debug_assert_eq!(x.len(), self.dim);
        debug_assert_eq!(y.len(), self.dim);
        let last = self.dim - 1;
        let mut sq = 0.0;
        for k in 0..self.dim {
            let xk = if reflect_x && k == last { -x[k] } else { x[k] };
            let d = y[k] - xk;
            sq += d * d;
        }
        if sq == 0.0 {
            return Err(HbemError::SingularPoint { kernel });
        }
        Ok(sq.sqrt())
    }

    /// `(y - x') . n / (omega_d |y - x'|^d)` with `x' = x` or `x~`.
    fn dipole(
        &self,
        x: &[f64],
        y: &[f64],
        n: &[f64],
        reflect_x: bool,
        kernel: &'static str,
    ) -> Result<f64> {
        debug_assert_eq!(x.len(), self.dim);
        debug_assert_eq!(y.len(), self.dim);
        debug_assert_eq!(n.len(), self.dim);
        let last = self.dim - 1;
        let mut sq = 0.0;
        let mut dot = 0.0;
        for k in 0..self.dim {
            let xk = if reflect_x && k == last { -x[k] } else { x[k] };
            let d = y[k] - xk;
            sq += d * d;
            dot += d * n[k];
        }
        if sq == 0.0 {
            return Err(HbemError::SingularPoint { kernel });
        }
        let r = sq.sqrt();
        Ok(dot / (self.omega * r.powi(self.dim as i32)))
    }
}

/// Reflection across the plane `x_d = 0`.
pub fn reflect<const D: usize>(x: [f64; D]) -> [f64; D] {
    let mut out = x;
    out[D - 1] = -out[D - 1];
    out
}

pub fn norm(x: &[f64]) -> f64 {
    x.iter().map(|c| c * c).sum::<f64>().sqrt()
}

fn unit_sphere_area(dim: usize) -> f64 {
    // omega_2 = 2 pi, omega_3 = 4 pi, omega_{d+2} = 2 pi omega_d / d
    let mut area = if dim % 2 == 0 { 2.0 * PI } else { 4.0 * PI };
    let mut d = if dim % 2 == 0 { 2 } else { 3 };
    while d < dim {
        area *= 2.0 * PI / d as f64;
        d += 2;
    }
    area
}
