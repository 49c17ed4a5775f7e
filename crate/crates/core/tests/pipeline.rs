use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use hbem_core::assembly::{assemble, DenseOperator, OperatorKind};
use hbem_core::field::{boundary_limit_check, evaluate_on_plane};
use hbem_core::geometry::{icosphere, load_mesh, CavityScene};
use hbem_core::linalg::Matrix;
use hbem_core::solve::{BoundaryField, DirectLu, Solution, SolverRegistry, TraceSolver, TraceSystem};
use hbem_core::HbemError;

/// Counts calls and defers to LU; stands in for a user-supplied strategy.
struct Counting {
    calls: AtomicUsize,
}

impl TraceSolver for Counting {
    fn name(&self) -> &str {
        "counting"
    }

    fn solve(&self, system: &Matrix, rhs: &[f64]) -> hbem_core::Result<Solution> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        DirectLu.solve(system, rhs)
    }
}

#[test]
fn mesh_file_to_plane_field() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ball.off");
    icosphere(2, 1.0).unwrap().write_off(std::fs::File::create(&path).unwrap()).unwrap();
    let base = load_mesh(&path).unwrap();
    assert_eq!(base.fingerprint(), icosphere(2, 1.0).unwrap().fingerprint());

    let scene = CavityScene::new(base, [0.3, -0.2, -2.5], 0.4, 1.0).unwrap();
    let system = TraceSystem::new(&scene).unwrap();
    let g = BoundaryField::pressure(scene.placed(), [0.1, 0.2, 1.0]);

    let mut registry = SolverRegistry::default();
    let counting = Arc::new(Counting {
        calls: AtomicUsize::new(0),
    });
    registry.register(counting.clone());
    assert_eq!(registry.names().collect::<Vec<_>>(), ["counting", "direct", "neumann_series"]);

    let mut traces = Vec::new();
    for name in ["direct", "neumann_series", "counting"] {
        let (f, report) = system.solve(&g, registry.get(name).unwrap().as_ref()).unwrap();
        assert_eq!(report.method, name);
        assert!(report.residual <= 1e-9);
        traces.push(f);
    }
    assert_eq!(counting.calls.load(Ordering::SeqCst), 1);
    assert_eq!(traces[0], traces[2]);
    let gap = traces[0]
        .values()
        .iter()
        .zip(traces[1].values())
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    assert!(gap <= 1e-8);

    assert!(boundary_limit_check(&system, &traces[0], &g).unwrap() <= 1e-9);
    let u = evaluate_on_plane([1.0, 0.5, 0.0], &scene, &traces[0], &g).unwrap();
    assert!(u.value.is_finite() && u.value != 0.0);
    assert!(matches!(registry.get("gmres"), Err(HbemError::UnknownSolver(_))));
}

#[test]
fn operator_dump_round_trip() {
    let scene = CavityScene::new(icosphere(1, 1.0).unwrap(), [0.0, 0.0, -2.0], 0.5, 1.0).unwrap();
    let op = assemble(OperatorKind::DtildeStar, scene.placed()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("dtilde_star.bin");
    op.write_binary(std::fs::File::create(&path).unwrap()).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    assert_eq!(bytes.len(), 16 + 8 * 80 * 80);

    let back = DenseOperator::read_binary(bytes.as_slice(), scene.placed().fingerprint()).unwrap();
    assert_eq!(back, op);
    assert_eq!(back.kind(), OperatorKind::DtildeStar);
}
