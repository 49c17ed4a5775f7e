//! Boundary equations for the trace `f`:
//!
//! * half-space cavity: `(1/2 I + K + D~) f = (S + S~) g` on the placed mesh;
//! * free-space exterior problem on `B`: `(1/2 I + K_B) f = S_B g`.
//!
//! Linear solves go through a [`TraceSolver`] strategy picked by name from a
//! [`SolverRegistry`]. Two strategies ship by default: dense LU (`"direct"`)
//! and the Neumann series `sum_h A^h` with `A = I - system` (`"neumann_series"`).

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::assembly::{assemble, DenseOperator, OperatorKind};
use crate::error::{HbemError, Result};
use crate::geometry::{CavityScene, SurfaceMesh};
use crate::linalg::{norm_inf, LuFactors, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldLabel {
    G,
    F,
    PsiComponent,
    Generic,
}

/// Per-panel samples on a specific mesh; quadrature weights are the panel areas.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryField {
    values: Vec<f64>,
    mesh_fingerprint: String,
    label: FieldLabel,
    /// Set when the samples are the constant-pressure datum `-p . n`.
    pressure: Option<[f64; 3]>,
}

impl BoundaryField {
    pub fn new(mesh: &SurfaceMesh, values: Vec<f64>, label: FieldLabel) -> Result<Self> {
        if values.len() != mesh.len() {
            return Err(HbemError::InvalidInput(format!(
                "field has {} values but the mesh has {} panels",
                values.len(),
                mesh.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(HbemError::InvalidInput("field values must be finite".into()));
        }
        Ok(Self {
            values,
            mesh_fingerprint: mesh.fingerprint().to_string(),
            label,
            pressure: None,
        })
    }

    pub fn zeros(mesh: &SurfaceMesh, label: FieldLabel) -> Self {
        Self::constant(mesh, 0.0, label)
    }

    pub fn constant(mesh: &SurfaceMesh, value: f64, label: FieldLabel) -> Self {
        Self {
            values: vec![value; mesh.len()],
            mesh_fingerprint: mesh.fingerprint().to_string(),
            label,
            pressure: None,
        }
    }

    /// The constant-pressure datum `g = -p . n`.
    pub fn pressure(mesh: &SurfaceMesh, p: [f64; 3]) -> Self {
        let values = mesh
            .panels()
            .iter()
            .map(|panel| -(p[0] * panel.normal[0] + p[1] * panel.normal[1] + p[2] * panel.normal[2]))
            .collect();
        Self {
            values,
            mesh_fingerprint: mesh.fingerprint().to_string(),
            label: FieldLabel::G,
            pressure: Some(p),
        }
    }

    /// Same values re-attached to another mesh with identical panel ordering,
    /// e.g. `g_hat` on `B` carried to `z + eps B`.
    pub fn transported(&self, mesh: &SurfaceMesh) -> Result<Self> {
        let mut out = Self::new(mesh, self.values.clone(), self.label)?;
        // provenance survives only if the samples are still -p . n on the new mesh
        if let Some(p) = self.pressure {
            if Self::pressure(mesh, p).values == out.values {
                out.pressure = Some(p);
            }
        }
        Ok(out)
    }

    /// The pressure vector `p` if this field is the datum `-p . n`.
    pub fn pressure_vector(&self) -> Option<[f64; 3]> {
        self.pressure
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn mesh_fingerprint(&self) -> &str {
        &self.mesh_fingerprint
    }

    pub fn label(&self) -> FieldLabel {
        self.label
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn norm_inf(&self) -> f64 {
        norm_inf(&self.values)
    }

    /// `sum_j value_j * area_j`.
    pub fn integral(&self, mesh: &SurfaceMesh) -> Result<f64> {
        self.check_mesh(mesh)?;
        Ok(self
            .values
            .iter()
            .zip(mesh.panels())
            .map(|(v, p)| v * p.area)
            .sum())
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
}

/// Outcome of one linear solve.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub values: Vec<f64>,
    /// Series terms used; 0 for direct factorization.
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub method: String,
    pub iterations: usize,
    /// `|| (1/2 I + K + D~) f - (S + S~) g ||_inf`.
    pub residual: f64,
}

/// A way of solving `system * x = rhs` for the boundary equations.
pub trait TraceSolver: Send + Sync {
    fn name(&self) -> &str;

    fn solve(&self, system: &Matrix, rhs: &[f64]) -> Result<Solution>;

    fn solve_many(&self, system: &Matrix, rhs: &[Vec<f64>]) -> Result<Vec<Solution>> {
        rhs.iter().map(|b| self.solve(system, b)).collect()
    }
}

/// LU with partial pivoting.
#[derive(Debug, Clone, Copy, Default)]
pub struct DirectLu;

impl TraceSolver for DirectLu {
    fn name(&self) -> &str {
        "direct"
    }

    fn solve(&self, system: &Matrix, rhs: &[f64]) -> Result<Solution> {
        Ok(self.solve_many(system, &[rhs.to_vec()])?.remove(0))
    }

    fn solve_many(&self, system: &Matrix, rhs: &[Vec<f64>]) -> Result<Vec<Solution>> {
        let lu = LuFactors::factor(system)?;
        Ok(rhs
            .iter()
            .map(|b| Solution {
                values: lu.solve(b),
                iterations: 0,
            })
            .collect())
    }
}

pub const DEFAULT_SERIES_TOLERANCE: f64 = 1e-10;
pub const DEFAULT_SERIES_MAX_TERMS: usize = 500;

/// Neumann series for `system = I - A`.
#[derive(Debug, Clone, Copy)]
pub struct NeumannSeries {
    pub tolerance: f64,
    pub max_terms: usize,
}

impl Default for NeumannSeries {
    fn default() -> Self {
        Self {
            tolerance: DEFAULT_SERIES_TOLERANCE,
            max_terms: DEFAULT_SERIES_MAX_TERMS,
        }
    }
}

impl TraceSolver for NeumannSeries {
    fn name(&self) -> &str {
        "neumann_series"
    }

    fn solve(&self, system: &Matrix, rhs: &[f64]) -> Result<Solution> {
        let a = Matrix::identity(system.rows()).add_scaled(system, -1.0);
        let (values, iterations) = neumann_series_solve(&a, rhs, self.tolerance, self.max_terms)?;
        Ok(Solution { values, iterations })
    }

    fn solve_many(&self, system: &Matrix, rhs: &[Vec<f64>]) -> Result<Vec<Solution>> {
        let a = Matrix::identity(system.rows()).add_scaled(system, -1.0);
        rhs.iter()
            .map(|b| {
                let (values, iterations) =
                    neumann_series_solve(&a, b, self.tolerance, self.max_terms)?;
                Ok(Solution { values, iterations })
            })
            .collect()
    }
}

/// Partial sums `sum_h A^h rhs` until the newest term has inf-norm `<= tol`.
/// Returns the sum and the number of terms added.
pub fn neumann_series_solve(
    a: &Matrix,
    rhs: &[f64],
    tol: f64,
    max_terms: usize,
) -> Result<(Vec<f64>, usize)> {
    let mut sum = rhs.to_vec();
    let mut term = rhs.to_vec();
    let mut terms = 1;
    let mut last = norm_inf(&term);
    while last > tol {
        if terms >= max_terms {
            return Err(HbemError::SeriesDiverged {
                terms,
                last_norm: last,
            });
        }
        term = a.matvec(&term);
        for (s, t) in sum.iter_mut().zip(&term) {
            *s += t;
        }
        terms += 1;
        last = norm_inf(&term);
        if !last.is_finite() {
            return Err(HbemError::SeriesDiverged {
                terms,
                last_norm: last,
            });
        }
    }
    Ok((sum, terms))
}

/// Named solver strategies.
#[derive(Clone)]
pub struct SolverRegistry {
    solvers: BTreeMap<String, Arc<dyn TraceSolver>>,
}

impl SolverRegistry {
    pub fn empty() -> Self {
        Self {
            solvers: BTreeMap::new(),
        }
    }

    pub fn register(&mut self, solver: Arc<dyn TraceSolver>) -> Option<Arc<dyn TraceSolver>> {
        self.solvers.insert(solver.name().to_string(), solver)
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn TraceSolver>> {
        self.solvers
            .get(name)
            .cloned()
            .ok_or_else(|| HbemError::UnknownSolver(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.solvers.keys().map(String::as_str)
    }
}

impl Default for SolverRegistry {
    fn default() -> Self {
        let mut r = Self::empty();
        r.register(Arc::new(DirectLu));
        r.register(Arc::new(NeumannSeries::default()));
        r
    }
}

impl std::fmt::Debug for SolverRegistry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_list().entries(self.solvers.keys()).finish()
    }
}

/// The assembled half-space trace equation on a placed cavity.
#[derive(Debug, Clone)]
pub struct TraceSystem {
    mesh: SurfaceMesh,
    s: DenseOperator,
    k: DenseOperator,
    stilde: DenseOperator,
    dtilde: DenseOperator,
    lhs: Matrix,
    rhs_operator: Matrix,
}

impl TraceSystem {
    pub fn new(scene: &CavityScene) -> Result<Self> {
        let mesh = scene.placed().clone();
        let s = assemble(OperatorKind::S, &mesh)?;
        let k = assemble(OperatorKind::K, &mesh)?;
        let stilde = assemble(OperatorKind::Stilde, &mesh)?;
        let dtilde = assemble(OperatorKind::Dtilde, &mesh)?;
        let lhs = k.matrix().add_scaled(dtilde.matrix(), 1.0).shifted(0.5);
        let rhs_operator = s.matrix().add_scaled(stilde.matrix(), 1.0);
        Ok(Self {
            mesh,
            s,
            k,
            stilde,
            dtilde,
            lhs,
            rhs_operator,
        })
    }

    pub fn mesh(&self) -> &SurfaceMesh {
        &self.mesh
    }

    pub fn operator(&self, kind: OperatorKind) -> Option<&DenseOperator> {
        match kind {
            OperatorKind::S => Some(&self.s),
            OperatorKind::K => Some(&self.k),
            OperatorKind::Stilde => Some(&self.stilde),
            OperatorKind::Dtilde => Some(&self.dtilde),
            _ => None,
        }
    }

    /// `1/2 I + K + D~`.
    pub fn lhs(&self) -> &Matrix {
        &self.lhs
    }

    /// `A = 1/2 I - K - D~`, the Neumann-series operator.
    pub fn series_operator(&self) -> Matrix {
        Matrix::identity(self.lhs.rows()).add_scaled(&self.lhs, -1.0)
    }

    /// `(S + S~) g`.
    pub fn rhs(&self, g: &BoundaryField) -> Result<Vec<f64>> {
        g.check_mesh(&self.mesh)?;
        Ok(self.rhs_operator.matvec(g.values()))
    }

    pub fn residual(&self, f: &BoundaryField, g: &BoundaryField) -> Result<f64> {
        f.check_mesh(&self.mesh)?;
        let rhs = self.rhs(g)?;
        let lf = self.lhs.matvec(f.values());
        Ok(lf.iter().zip(&rhs).fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }

    pub fn solve(
        &self,
        g: &BoundaryField,
        solver: &dyn TraceSolver,
    ) -> Result<(BoundaryField, SolveReport)> {
        Ok(self.solve_many(std::slice::from_ref(g), solver)?.remove(0))
    }

    pub fn solve_many(
        &self,
        data: &[BoundaryField],
        solver: &dyn TraceSolver,
    ) -> Result<Vec<(BoundaryField, SolveReport)>> {
        let rhs = data.iter().map(|g| self.rhs(g)).collect::<Result<Vec<_>>>()?;
        let solutions = solver.solve_many(&self.lhs, &rhs)?;
        data.iter()
            .zip(solutions)
            .map(|(g, sol)| {
                let f = BoundaryField::new(&self.mesh, sol.values, FieldLabel::F)?;
                let residual = self.residual(&f, g)?;
                let report = SolveReport {
                    method: solver.name().to_string(),
                    iterations: sol.iterations,
                    residual,
                };
                Ok((f, report))
            })
            .collect()
    }
}

/// Solve the half-space trace equation on `place(scene)` for the datum `g`.
pub fn solve_trace(
    scene: &CavityScene,
    g: &BoundaryField,
    solver: &dyn TraceSolver,
) -> Result<(BoundaryField, SolveReport)> {
    TraceSystem::new(scene)?.solve(g, solver)
}

/// The factored free-space exterior equation `(1/2 I + K_B) f = S_B g`.
#[derive(Debug, Clone)]
pub struct ExteriorSystem {
    mesh: SurfaceMesh,
    s: DenseOperator,
    k: DenseOperator,
    lu: LuFactors,
}

impl ExteriorSystem {
    pub fn new(mesh: &SurfaceMesh) -> Result<Self> {
        let s = assemble(OperatorKind::S, mesh)?;
        let k = assemble(OperatorKind::K, mesh)?;
        let lu = LuFactors::factor(&k.matrix().shifted(0.5))?;
        Ok(Self {
            mesh: mesh.clone(),
            s,
            k,
            lu,
        })
    }

    pub fn mesh(&self) -> &SurfaceMesh {
        &self.mesh
    }

    pub fn k(&self) -> &DenseOperator {
        &self.k
    }

    pub fn s(&self) -> &DenseOperator {
        &self.s
    }

    /// Trace on `dB` of the decaying exterior harmonic function with Neumann datum `g`.
    pub fn trace(&self, g: &BoundaryField, label: FieldLabel) -> Result<BoundaryField> {
        g.check_mesh(&self.mesh)?;
        let rhs = self.s.apply(g.values());
        BoundaryField::new(&self.mesh, self.lu.solve(&rhs), label)
    }
}

/// `(1/2 I + K_B)^{-1} S_B g`.
pub fn exterior_trace(mesh: &SurfaceMesh, g: &BoundaryField) -> Result<BoundaryField> {
    ExteriorSystem::new(mesh)?.trace(g, FieldLabel::F)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::icosphere;

    fn sphere_scene(s: u32, depth: f64, eps: f64) -> CavityScene {
        CavityScene::new(icosphere(s, 1.0).unwrap(), [0.0, 0.0, -depth], eps, 1.0_f64.min(depth)).unwrap()
    }

    #[test]
    fn zero_datum_gives_zero_trace() {
        let scene = sphere_scene(1, 2.0, 0.5);
        let g = BoundaryField::zeros(scene.placed(), FieldLabel::G);
        for solver in [&DirectLu as &dyn TraceSolver, &NeumannSeries::default()] {
            let (f, report) = solve_trace(&scene, &g, solver).unwrap();
            assert!(f.values().iter().all(|&v| v == 0.0));
            assert_eq!(report.residual, 0.0);
        }
        let (_, report) = solve_trace(&scene, &g, &NeumannSeries::default()).unwrap();
        assert_eq!(report.iterations, 1);
        assert_eq!(exterior_trace(scene.base(), &BoundaryField::zeros(scene.base(), FieldLabel::G))
            .unwrap()
            .norm_inf(), 0.0);
    }

    #[test]
    fn series_terms_on_zero_rhs() {
        let a = Matrix::identity(4).shifted(-0.5);
        assert_eq!(neumann_series_solve(&a, &[0.0; 4], 1e-10, 10).unwrap(), (vec![0.0; 4], 1));
    }

    #[test]
    fn series_reports_divergence() {
        let a = Matrix::identity(3).shifted(0.1);
        let err = neumann_series_solve(&a, &[1.0, 0.0, 0.0], 1e-10, 50).unwrap_err();
        assert!(matches!(err, HbemError::SeriesDiverged { terms: 50, .. }));
    }

    #[test]
    fn series_sums_geometric_scalar() {
        let a = Matrix::identity(1).shifted(-0.5);
        let (x, terms) = neumann_series_solve(&a, &[1.0], 1e-12, 100).unwrap();
        assert!((x[0] - 2.0).abs() < 2e-12);
        assert_eq!(terms, 41);
    }

    #[test]
    fn direct_and_series_agree_on_sphere_scene() {
        let scene = sphere_scene(2, 2.0, 0.5);
        let system = TraceSystem::new(&scene).unwrap();
        let g = BoundaryField::pressure(scene.placed(), [0.0, 0.0, 1.0]);
        let (fd, rd) = system.solve(&g, &DirectLu).unwrap();
        let (fs, rs) = system.solve(&g, &NeumannSeries::default()).unwrap();
        assert!(rd.residual <= 1e-10 * g.norm_inf() * system.lhs().norm_inf());
        assert!(rs.iterations > 1);
        let gap = fd.values().iter().zip(fs.values()).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(gap <= 1e-8, "gap {gap}");
        assert_eq!(rd.method, "direct");
        assert_eq!(rs.method, "neumann_series");
    }

    #[test]
    fn series_needs_more_terms_near_the_plane() {
        let terms = |depth: f64| {
            let scene = sphere_scene(2, depth, 1.0);
            let g = BoundaryField::pressure(scene.placed(), [0.0, 0.0, 1.0]);
            solve_trace(&scene, &g, &NeumannSeries::default()).unwrap().1.iterations
        };
        let shallow = terms(1.1);
        let deep = terms(4.0);
        assert!(shallow > deep, "shallow {shallow}, deep {deep}");
    }

    #[test]
    fn linearity() {
        let scene = sphere_scene(2, 2.0, 0.5);
        let system = TraceSystem::new(&scene).unwrap();
        let mesh = scene.placed();
        let g1 = BoundaryField::pressure(mesh, [0.3, -1.0, 0.5]);
        let g2 = BoundaryField::new(
            mesh,
            mesh.panels().iter().map(|p| p.centroid[0] * p.centroid[2]).collect(),
            FieldLabel::G,
        )
        .unwrap();
        let (alpha, beta) = (1.7, -0.4);
        let combo = BoundaryField::new(
            mesh,
            g1.values().iter().zip(g2.values()).map(|(a, b)| alpha * a + beta * b).collect(),
            FieldLabel::G,
        )
        .unwrap();
        let f = |g: &BoundaryField| system.solve(g, &DirectLu).unwrap().0.into_values();
        let (f1, f2, fc) = (f(&g1), f(&g2), f(&combo));
        for i in 0..mesh.len() {
            assert!((fc[i] - alpha * f1[i] - beta * f2[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn exterior_trace_of_unit_flux() {
        let mesh = icosphere(3, 1.0).unwrap();
        let f = exterior_trace(&mesh, &BoundaryField::constant(&mesh, 1.0, FieldLabel::G)).unwrap();
        assert!(f.values().iter().all(|v| (v + 1.0).abs() <= 2e-2));
    }

    #[test]
    fn exterior_trace_of_normal_component() {
        let mesh = icosphere(3, 1.0).unwrap();
        let system = ExteriorSystem::new(&mesh).unwrap();
        for i in 0..3 {
            let mut p = [0.0; 3];
            p[i] = 1.0;
            // g = -n_i
            let psi = system.trace(&BoundaryField::pressure(&mesh, p), FieldLabel::PsiComponent).unwrap();
            let err = psi
                .values()
                .iter()
                .zip(mesh.panels())
                .fold(0.0f64, |m, (v, panel)| m.max((v - panel.centroid[i] / 2.0).abs()));
            assert!(err <= 3e-2, "component {i}: {err}");
        }
    }

    #[test]
    fn deep_cavity_decouples_from_plane() {
        let base = icosphere(2, 1.0).unwrap();
        let p = [0.0, 0.0, 1.0];
        let gaps: Vec<f64> = [2.0, 5.0, 10.0, 20.0]
            .iter()
            .map(|&depth| {
                let scene = CavityScene::new(base.clone(), [0.0, 0.0, -depth], 0.1, 1.0).unwrap();
                let g = BoundaryField::pressure(scene.placed(), p);
                let (f, _) = solve_trace(&scene, &g, &DirectLu).unwrap();
                let free = exterior_trace(scene.placed(), &g).unwrap();
                let diff = f.values().iter().zip(free.values()).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
                diff / free.norm_inf()
            })
            .collect();
        assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
        assert!(gaps[2] <= 2e-2);
    }

    #[test]
    fn registry_lookup() {
        let registry = SolverRegistry::default();
        assert_eq!(registry.names().collect::<Vec<_>>(), vec!["direct", "neumann_series"]);
        assert_eq!(registry.get("direct").unwrap().name(), "direct");
        assert_eq!(
            registry.get("gmres").err(),
            Some(HbemError::UnknownSolver("gmres".into()))
        );
        let mut custom = SolverRegistry::empty();
        custom.register(Arc::new(NeumannSeries {
            tolerance: 1e-6,
            max_terms: 10,
        }));
        assert!(custom.get("direct").is_err());
    }

    #[test]
    fn mesh_mismatch_is_rejected() {
        let scene = sphere_scene(1, 2.0, 0.5);
        let wrong = BoundaryField::zeros(scene.base(), FieldLabel::G);
        assert!(matches!(
            solve_trace(&scene, &wrong, &DirectLu),
            Err(HbemError::MeshMismatch { .. })
        ));
        assert!(BoundaryField::new(scene.base(), vec![0.0; 3], FieldLabel::G).is_err());
        assert!(BoundaryField::new(scene.base(), vec![f64::NAN; 80], FieldLabel::G).is_err());
    }
}
