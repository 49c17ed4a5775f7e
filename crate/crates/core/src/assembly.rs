//! Dense collocation matrices of the layer operators on a flat-panel mesh.
//!
//! Entry `(i, j)` is the kernel evaluated at centroid `i` against centroid
//! `j`, times the area of panel `j`. Image operators evaluate at the reflected
//! centroid and never need a singular rule while the mesh stays below the
//! plane.

use std::f64::consts::PI;
use std::fmt;
use std::io::{Read, Write};

use rayon::prelude::*;

use crate::error::{HbemError, Result};
use crate::geometry::{Panel, SurfaceMesh};
use crate::kernels::{reflect, LAPLACE_3D};
use crate::linalg::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OperatorKind {
    /// Single layer.
    S,
    /// Principal-value double layer.
    K,
    /// L2 adjoint of `K`.
    Kstar,
    /// Single layer evaluated at reflected points.
    Stilde,
    /// Double layer collocated on the boundary; same matrix as `K`.
    D,
    /// Double layer evaluated at reflected points.
    Dtilde,
    /// L2 adjoint of `Dtilde`.
    DtildeStar,
}

impl OperatorKind {
    pub const ALL: [OperatorKind; 7] = [
        OperatorKind::S,
        OperatorKind::K,
        OperatorKind::Kstar,
        OperatorKind::Stilde,
        OperatorKind::D,
        OperatorKind::Dtilde,
        OperatorKind::DtildeStar,
    ];

    pub fn uses_image(self) -> bool {
        matches!(self, OperatorKind::Stilde | OperatorKind::Dtilde | OperatorKind::DtildeStar)
    }

    pub fn name(self) -> &'static str {
        match self {
            OperatorKind::S => "S",
            OperatorKind::K => "K",
            OperatorKind::Kstar => "Kstar",
            OperatorKind::Stilde => "Stilde",
            OperatorKind::D => "D",
            OperatorKind::Dtilde => "Dtilde",
            OperatorKind::DtildeStar => "DtildeStar",
        }
    }

    fn code(self) -> u8 {
        match self {
            OperatorKind::S => 0,
            OperatorKind::K => 1,
            OperatorKind::Kstar => 2,
            OperatorKind::Stilde => 3,
            OperatorKind::D => 4,
            OperatorKind::Dtilde => 5,
            OperatorKind::DtildeStar => 6,
        }
    }

    fn from_code(code: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.code() == code)
    }
}

impl fmt::Display for OperatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseOperator {
    kind: OperatorKind,
    matrix: Matrix,
    mesh_fingerprint: String,
}

impl DenseOperator {
    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> Matrix {
        self.matrix
    }

    pub fn mesh_fingerprint(&self) -> &str {
        &self.mesh_fingerprint
    }

    pub fn uses_image(&self) -> bool {
        self.kind.uses_image()
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn apply(&self, values: &[f64]) -> Vec<f64> {
        self.matrix.matvec(values)
    }

    pub fn check_mesh(&self, mesh: &SurfaceMesh) -> Result<()> {
        if self.mesh_fingerprint != mesh.fingerprint() {
            return Err(HbemError::MeshMismatch {
                expected: mesh.fingerprint().to_string(),
                found: self.mesh_fingerprint.clone(),
            });
        }
        Ok(())
    }

    /// Debug dump: `"HBEM"`, kind byte, 3 zero bytes, `u32` n (LE), 4 zero
    /// bytes, then `n * n` little-endian `f64` in row-major order.
    pub fn write_binary<W: Write>(&self, mut out: W) -> Result<()> {
        let n = self.dim() as u32;
        let mut header = [0u8; 16];
        header[..4].copy_from_slice(b"HBEM");
        header[4] = self.kind.code();
        header[8..12].copy_from_slice(&n.to_le_bytes());
        out.write_all(&header)?;
        for x in self.matrix.as_slice() {
            out.write_all(&x.to_le_bytes())?;
        }
        Ok(())
    }

    /// Read a dump back; the fingerprint is not stored and must be supplied.
    pub fn read_binary<R: Read>(mut input: R, mesh_fingerprint: &str) -> Result<Self> {
        let mut header = [0u8; 16];
        input.read_exact(&mut header)?;
        if &header[..4] != b"HBEM" {
            return Err(HbemError::InvalidInput("missing HBEM magic".into()));
        }
        let kind = OperatorKind::from_code(header[4])
            .ok_or_else(|| HbemError::InvalidInput(format!("unknown kind byte {}", header[4])))?;
        let n = u32::from_le_bytes(header[8..12].try_into().expect("4 bytes")) as usize;
        let mut data = vec![0.0; n * n];
        let mut buf = [0u8; 8];
        for x in &mut data {
            input.read_exact(&mut buf)?;
            *x = f64::from_le_bytes(buf);
        }
        Ok(Self {
            kind,
            matrix: Matrix::from_row_major(n, n, data),
            mesh_fingerprint: mesh_fingerprint.to_string(),
        })
    }
}

/// Equivalent-disk rule for the single-layer self interaction:
/// `kappa_3 * 2 pi * R`, `R = sqrt(area / pi)`.
pub fn self_term_s(panel: &Panel) -> f64 {
    self_term_s_area(panel.area)
}

pub fn self_term_s_area(area: f64) -> f64 {
    LAPLACE_3D.kappa() * 2.0 * PI * (area / PI).sqrt()
}

pub fn assemble(kind: OperatorKind, mesh: &SurfaceMesh) -> Result<DenseOperator> {
    if kind.uses_image() && !(mesh.max_vertical() < 0.0) {
        return Err(HbemError::ImageAbovePlane { kind: kind.name() });
    }
    let matrix = match kind {
        OperatorKind::S => fill(mesh, |i, x, p| {
            if i.is_diagonal {
                Ok(self_term_s(p))
            } else {
                Ok(LAPLACE_3D.gamma(&diff(x, p.centroid))? * p.area)
            }
        })?,
        OperatorKind::K | OperatorKind::D => fill(mesh, |i, x, p| {
            if i.is_diagonal {
                // (y - x) . n_y vanishes on a flat panel
                Ok(0.0)
            } else {
                Ok(LAPLACE_3D.kernel_k(&x, &p.centroid, &p.normal)? * p.area)
            }
        })?,
        OperatorKind::Stilde => fill(mesh, |_, x, p| {
            Ok(LAPLACE_3D.gamma(&diff(reflect(x), p.centroid))? * p.area)
        })?,
        OperatorKind::Dtilde => fill(mesh, |_, x, p| {
            Ok(LAPLACE_3D.kernel_dtilde(&x, &p.centroid, &p.normal)? * p.area)
        })?,
        OperatorKind::Kstar => {
            let k = assemble(OperatorKind::K, mesh)?;
            return adjoint_discretization(&k, mesh);
        }
        OperatorKind::DtildeStar => {
            let d = assemble(OperatorKind::Dtilde, mesh)?;
            return adjoint_discretization(&d, mesh);
        }
    };
    Ok(DenseOperator {
        kind,
        matrix,
        mesh_fingerprint: mesh.fingerprint().to_string(),
    })
}

/// Weighted transpose `W^{-1} M^T W`, `W = diag(panel areas)`: the discrete
/// L2 adjoint. Maps `K <-> Kstar` and `Dtilde <-> DtildeStar`.
pub fn adjoint_discretization(op: &DenseOperator, mesh: &SurfaceMesh) -> Result<DenseOperator> {
    op.check_mesh(mesh)?;
    let kind = match op.kind {
        OperatorKind::K => OperatorKind::Kstar,
        OperatorKind::Kstar => OperatorKind::K,
        OperatorKind::Dtilde => OperatorKind::DtildeStar,
        OperatorKind::DtildeStar => OperatorKind::Dtilde,
        other => return Err(HbemError::UnsupportedKind(other.name())),
    };
    let matrix = weighted_transpose(&op.matrix, &mesh.areas());
    Ok(DenseOperator {
        kind,
        matrix,
        mesh_fingerprint: op.mesh_fingerprint.clone(),
    })
}

pub(crate) fn weighted_transpose(m: &Matrix, weights: &[f64]) -> Matrix {
    let n = m.rows();
    assert_eq!(weights.len(), n);
    let mut out = Matrix::zeros(n, n);
    out.as_mut_slice()
        .par_chunks_mut(n)
        .enumerate()
        .for_each(|(i, row)| {
            for (j, x) in row.iter_mut().enumerate() {
                *x = m[(j, i)] * weights[j] / weights[i];
            }
        });
    out
}

struct Entry {
    is_diagonal: bool,
}

fn fill<F>(mesh: &SurfaceMesh, entry: F) -> Result<Matrix>
where
    F: Fn(Entry, [f64; 3], &Panel) -> Result<f64> + Sync,
{
    let panels = mesh.panels();
    let n = panels.len();
    let mut m = Matrix::zeros(n, n);
    m.as_mut_slice()
        .par_chunks_mut(n)
        .enumerate()
        .try_for_each(|(i, row)| {
            let x = panels[i].centroid;
            for (j, (value, p)) in row.iter_mut().zip(panels).enumerate() {
                *value = entry(Entry { is_diagonal: i == j }, x, p)?;
            }
            Ok::<(), HbemError>(())
        })?;
    Ok(m)
}

fn diff(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{icosphere, CavityScene};
    use crate::linalg::norm_inf;

    fn row_sums(op: &DenseOperator) -> Vec<f64> {
        op.apply(&vec![1.0; op.dim()])
    }

    #[test]
    fn self_term_examples() {
        assert!((self_term_s_area(PI) + 0.5).abs() < 1e-15);
        assert!((self_term_s_area(4.0 * PI) + 1.0).abs() < 1e-15);
        assert!(self_term_s_area(1e-20).abs() < 1e-10);
        assert_eq!(self_term_s_area(0.0), 0.0);
    }

    #[test]
    fn gauss_identities_on_sphere_s3() {
        let mesh = icosphere(3, 1.0).unwrap();
        let k = assemble(OperatorKind::K, &mesh).unwrap();
        let gap = norm_inf(&row_sums(&k).iter().map(|s| s - 0.5).collect::<Vec<_>>());
        assert!(gap <= 2e-2, "K gap {gap}");
        let s = assemble(OperatorKind::S, &mesh).unwrap();
        let gap = norm_inf(&row_sums(&s).iter().map(|s| s + 1.0).collect::<Vec<_>>());
        assert!(gap <= 2e-2, "S gap {gap}");
        assert!(s.matrix().all_finite() && k.matrix().all_finite());
        let n = s.dim();
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    assert!(s.matrix()[(i, j)] < 0.0);
                }
            }
        }
    }

    #[test]
    fn gauss_identity_converges_under_refinement() {
        let gaps: Vec<f64> = (1..=3)
            .map(|s| {
                let k = assemble(OperatorKind::K, &icosphere(s, 1.0).unwrap()).unwrap();
                norm_inf(&row_sums(&k).iter().map(|x| x - 0.5).collect::<Vec<_>>())
            })
            .collect();
        assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
    }

    #[test]
    fn exterior_gauss_identity_at_s3() {
        let mesh = icosphere(3, 1.0).unwrap();
        let solid = |x: [f64; 3]| -> f64 {
            mesh.panels()
                .iter()
                .map(|p| LAPLACE_3D.kernel_k(&x, &p.centroid, &p.normal).unwrap() * p.area)
                .sum()
        };
        assert!((solid([0.1, -0.2, 0.3]) - 1.0).abs() < 1e-2);
        assert!(solid([1.8, 0.4, -0.5]).abs() < 1e-2);
    }

    #[test]
    fn image_operators_follow_reflection() {
        let scene = CavityScene::new(icosphere(2, 1.0).unwrap(), [0.0, 0.0, -1.5], 0.8, 1.0).unwrap();
        let mesh = scene.placed();
        let dt = assemble(OperatorKind::Dtilde, mesh).unwrap();
        let st = assemble(OperatorKind::Stilde, mesh).unwrap();
        let panels = mesh.panels();
        // independent loop with the reflected evaluation point
        for (i, pi) in panels.iter().enumerate() {
            let xr = reflect(pi.centroid);
            for (j, pj) in panels.iter().enumerate() {
                let kij = LAPLACE_3D.kernel_k(&xr, &pj.centroid, &pj.normal).unwrap() * pj.area;
                assert_eq!(dt.matrix()[(i, j)], kij);
                let d = diff(xr, pj.centroid);
                let sij = -pj.area / (4.0 * PI * (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt());
                assert!((st.matrix()[(i, j)] - sij).abs() <= 1e-15 * sij.abs());
            }
        }
        assert!(dt.uses_image() && st.uses_image());
        assert!(!assemble(OperatorKind::S, mesh).unwrap().uses_image());
    }

    #[test]
    fn image_entry_bound() {
        let scene = CavityScene::new(icosphere(2, 1.0).unwrap(), [0.3, 0.0, -1.4], 0.9, 1.0).unwrap();
        let mesh = scene.placed();
        // every point of the mesh sits at depth >= |z_d| - eps
        let depth = -mesh.max_vertical();
        let area_max = mesh.panels().iter().map(|p| p.area).fold(0.0, f64::max);
        let bound = area_max / (4.0 * PI * (2.0 * depth).powi(2));
        let dt = assemble(OperatorKind::Dtilde, mesh).unwrap();
        assert!(dt.matrix().max_abs() <= bound);
    }

    #[test]
    fn image_kinds_need_submerged_mesh() {
        let mesh = icosphere(1, 1.0).unwrap();
        for kind in [OperatorKind::Stilde, OperatorKind::Dtilde, OperatorKind::DtildeStar] {
            assert_eq!(
                assemble(kind, &mesh).unwrap_err(),
                HbemError::ImageAbovePlane { kind: kind.name() }
            );
        }
    }

    #[test]
    fn adjoint_rules() {
        let mesh = crate::geometry::ellipsoid(2, [1.0, 0.7, 1.3]).unwrap();
        let k = assemble(OperatorKind::K, &mesh).unwrap();
        let ks = adjoint_discretization(&k, &mesh).unwrap();
        assert_eq!(ks.kind(), OperatorKind::Kstar);
        let back = adjoint_discretization(&ks, &mesh).unwrap();
        assert_eq!(back.kind(), OperatorKind::K);
        for (a, b) in back.matrix().as_slice().iter().zip(k.matrix().as_slice()) {
            assert!((a - b).abs() <= 1e-15 * (1.0 + b.abs()));
        }

        // independent assembly from the adjoint kernel
        let panels = mesh.panels();
        for (i, pi) in panels.iter().enumerate() {
            for (j, pj) in panels.iter().enumerate() {
                let direct = if i == j {
                    0.0
                } else {
                    LAPLACE_3D.kernel_kstar(&pi.centroid, &pj.centroid, &pi.normal).unwrap() * pj.area
                };
                assert!((ks.matrix()[(i, j)] - direct).abs() <= 1e-13 * (1.0 + direct.abs()));
            }
        }

        // discrete duality <psi, K phi>_W = <K* psi, phi>_W
        let w = mesh.areas();
        let n = mesh.len();
        let phi: Vec<f64> = (0..n).map(|i| (0.37 * i as f64).sin()).collect();
        let psi: Vec<f64> = (0..n).map(|i| (1.3 * i as f64 + 0.2).cos()).collect();
        let kphi = k.apply(&phi);
        let kspsi = ks.apply(&psi);
        let lhs: f64 = (0..n).map(|i| psi[i] * kphi[i] * w[i]).sum();
        let rhs: f64 = (0..n).map(|i| kspsi[i] * phi[i] * w[i]).sum();
        assert!((lhs - rhs).abs() < 1e-12);

        let s = assemble(OperatorKind::S, &mesh).unwrap();
        assert_eq!(
            adjoint_discretization(&s, &mesh).unwrap_err(),
            HbemError::UnsupportedKind("S")
        );
        let other = icosphere(2, 1.0).unwrap();
        assert!(matches!(
            adjoint_discretization(&k, &other),
            Err(HbemError::MeshMismatch { .. })
        ));
    }

    #[test]
    fn equal_area_adjoint_is_transpose() {
        let mesh = icosphere(0, 1.0).unwrap();
        let k = assemble(OperatorKind::K, &mesh).unwrap();
        let ks = assemble(OperatorKind::Kstar, &mesh).unwrap();
        let t = k.matrix().transpose();
        for (a, b) in ks.matrix().as_slice().iter().zip(t.as_slice()) {
            assert!((a - b).abs() <= 1e-15 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn deterministic_across_worker_counts() {
        let mesh = icosphere(2, 1.0).unwrap();
        let run = |threads: usize| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| assemble(OperatorKind::S, &mesh).unwrap())
        };
        let a = run(1);
        let b = run(3);
        assert!(a
            .matrix()
            .as_slice()
            .iter()
            .zip(b.matrix().as_slice())
            .all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn binary_dump_round_trip() {
        let mesh = icosphere(1, 1.0).unwrap();
        let k = assemble(OperatorKind::K, &mesh).unwrap();
        let mut buf = Vec::new();
        k.write_binary(&mut buf).unwrap();
        assert_eq!(buf.len(), 16 + 8 * 80 * 80);
        assert_eq!(&buf[..4], b"HBEM");
        assert_eq!(u32::from_le_bytes(buf[8..12].try_into().unwrap()), 80);
        let back = DenseOperator::read_binary(buf.as_slice(), mesh.fingerprint()).unwrap();
        assert_eq!(back, k);
        assert!(DenseOperator::read_binary(&b"NOPE0000000000000"[..], "x").is_err());
    }
}
