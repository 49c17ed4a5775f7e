//! Off-boundary evaluation of `u` through the Neumann function:
//! `u(x) = sum_j [N(x, y_j) g_j - dN/dn_y(x, y_j) f_j] area_j`.

use crate::error::{HbemError, Result};
use crate::geometry::{norm3, sub, CavityScene, Point3};
use crate::kernels::{reflect, LAPLACE_3D};
use crate::solve::{BoundaryField, TraceSystem};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample {
    pub point: Point3,
    pub value: f64,
    pub on_plane: bool,
}

fn check_inputs(scene: &CavityScene, f: &BoundaryField, g: &BoundaryField) -> Result<()> {
    f.check_mesh(scene.placed())?;
    g.check_mesh(scene.placed())
}

/// Points closer to a panel centroid than that panel's diameter are refused.
fn check_far_field(x: Point3, scene: &CavityScene) -> Result<()> {
    for (panel, p) in scene.placed().panels().iter().enumerate() {
        let distance = norm3(sub(x, p.centroid));
        let limit = p.diameter();
        if distance <= limit {
            return Err(HbemError::TooClose {
                panel,
                distance,
                limit,
            });
        }
    }
    Ok(())
}

pub fn evaluate(
    x: Point3,
    scene: &CavityScene,
    f: &BoundaryField,
    g: &BoundaryField,
) -> Result<FieldSample> {
    if x.iter().any(|c| !c.is_finite()) || x[2] > 0.0 {
        return Err(HbemError::InvalidInput(format!(
            "evaluation point {x:?} is not in the closed lower half-space"
        )));
    }
    check_inputs(scene, f, g)?;
    check_far_field(x, scene)?;
    let xr = reflect(x);
    let mut u = 0.0;
    for ((p, gj), fj) in scene.placed().panels().iter().zip(g.values()).zip(f.values()) {
        let n = LAPLACE_3D.neumann_function(&x, &p.centroid)?;
        // dN/dn_y = dGamma(x - y)/dn_y + dGamma(x~ - y)/dn_y
        let dn = LAPLACE_3D.kernel_k(&x, &p.centroid, &p.normal)?
            + LAPLACE_3D.kernel_k(&xr, &p.centroid, &p.normal)?;
        u += (n * gj - dn * fj) * p.area;
    }
    Ok(FieldSample {
        point: x,
        value: u,
        on_plane: x[2] == 0.0,
    })
}

/// On the plane `x = x~`, so `u = 2 (S g - D f)`.
pub fn evaluate_on_plane(
    x: Point3,
    scene: &CavityScene,
    f: &BoundaryField,
    g: &BoundaryField,
) -> Result<FieldSample> {
    if x[2] != 0.0 {
        return Err(HbemError::OffPlane(x[2]));
    }
    check_inputs(scene, f, g)?;
    check_far_field(x, scene)?;
    let mut single = 0.0;
    let mut double = 0.0;
    for ((p, gj), fj) in scene.placed().panels().iter().zip(g.values()).zip(f.values()) {
        single += LAPLACE_3D.gamma(&sub(x, p.centroid))? * gj * p.area;
        double += LAPLACE_3D.kernel_k(&x, &p.centroid, &p.normal)? * fj * p.area;
    }
    Ok(FieldSample {
        point: x,
        value: 2.0 * (single - double),
        on_plane: true,
    })
}

/// `max_i |f_i - [S g + S~ g - (-1/2 I + K + D~) f]_i|`: the exterior trace of
/// the representation formula compared with `f` itself.
pub fn boundary_limit_check(
    system: &TraceSystem,
    f: &BoundaryField,
    g: &BoundaryField,
) -> Result<f64> {
    use crate::assembly::OperatorKind;
    let mesh = system.mesh();
    f.check_mesh(mesh)?;
    g.check_mesh(mesh)?;
    let op = |kind| system.operator(kind).expect("trace system holds S, K, S~, D~");
    let sg = op(OperatorKind::S).apply(g.values());
    let stg = op(OperatorKind::Stilde).apply(g.values());
    let kf = op(OperatorKind::K).apply(f.values());
    let dtf = op(OperatorKind::Dtilde).apply(f.values());
    Ok((0..mesh.len())
        .map(|i| {
            let fi = f.values()[i];
            let trace = sg[i] + stg[i] - (-0.5 * fi + kf[i] + dtf[i]);
            (fi - trace).abs()
        })
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::icosphere;
    use crate::solve::{DirectLu, FieldLabel};

    fn solved(p: [f64; 3]) -> (CavityScene, TraceSystem, BoundaryField, BoundaryField) {
        let scene = CavityScene::new(icosphere(2, 1.0).unwrap(), [0.0, 0.0, -2.0], 0.5, 1.0).unwrap();
        let system = TraceSystem::new(&scene).unwrap();
        let g = BoundaryField::pressure(scene.placed(), p);
        let (f, _) = system.solve(&g, &DirectLu).unwrap();
        (scene, system, f, g)
    }

    #[test]
    fn zero_data_give_zero_field() {
        let scene = CavityScene::new(icosphere(1, 1.0).unwrap(), [0.0, 0.0, -2.0], 0.5, 1.0).unwrap();
        let z = BoundaryField::zeros(scene.placed(), FieldLabel::G);
        assert_eq!(evaluate([1.0, 0.0, -0.5], &scene, &z, &z).unwrap().value, 0.0);
        assert_eq!(evaluate_on_plane([1.0, 2.0, 0.0], &scene, &z, &z).unwrap().value, 0.0);
        let system = TraceSystem::new(&scene).unwrap();
        assert_eq!(boundary_limit_check(&system, &z, &z).unwrap(), 0.0);
    }

    #[test]
    fn plane_formula_matches_general_formula() {
        let (scene, _, f, g) = solved([0.0, 0.0, 1.0]);
        for x in [[1.0, 0.0, 0.0], [0.5, -0.3, 0.0], [-3.0, 4.0, 0.0]] {
            let a = evaluate(x, &scene, &f, &g).unwrap();
            let b = evaluate_on_plane(x, &scene, &f, &g).unwrap();
            assert!(a.on_plane && b.on_plane);
            assert!((a.value - b.value).abs() <= 1e-12 * a.value.abs().max(1e-12), "{x:?}");
        }
        assert!(!evaluate([1.0, 0.0, -0.1], &scene, &f, &g).unwrap().on_plane);
    }

    #[test]
    fn pressure_sign_flip_flips_field() {
        let (scene, _, f, g) = solved([0.2, 0.0, 1.0]);
        let (_, _, fm, gm) = solved([-0.2, 0.0, -1.0]);
        let x = [0.5, 0.0, 0.0];
        let a = evaluate_on_plane(x, &scene, &f, &g).unwrap().value;
        let b = evaluate_on_plane(x, &scene, &fm, &gm).unwrap().value;
        assert!((a + b).abs() <= 1e-14 * a.abs());
    }

    #[test]
    fn far_field_decay() {
        let (scene, _, f, g) = solved([0.0, 0.0, 1.0]);
        let u = |r: f64| evaluate([r, 0.0, 0.0], &scene, &f, &g).unwrap().value.abs();
        assert!(u(5.0) > u(10.0) && u(10.0) > u(20.0));
        assert!(u(10.0) / u(20.0) >= 3.5);
    }

    #[test]
    fn boundary_limit_of_solved_and_perturbed_trace() {
        let (_, system, f, g) = solved([0.0, 0.0, 1.0]);
        assert!(boundary_limit_check(&system, &f, &g).unwrap() <= 1e-9);
        let mut values = f.values().to_vec();
        values[7] += 0.1;
        let perturbed = BoundaryField::new(system.mesh(), values, FieldLabel::F).unwrap();
        assert!(boundary_limit_check(&system, &perturbed, &g).unwrap() >= 0.049);
    }

    #[test]
    fn input_errors() {
        let (scene, _, f, g) = solved([0.0, 0.0, 1.0]);
        assert_eq!(
            evaluate_on_plane([1.0, 0.0, -0.1], &scene, &f, &g).unwrap_err(),
            HbemError::OffPlane(-0.1)
        );
        assert!(matches!(
            evaluate([0.0, 0.0, -1.5], &scene, &f, &g),
            Err(HbemError::TooClose { .. })
        ));
        assert!(evaluate([0.0, 0.0, 0.5], &scene, &f, &g).is_err());
        let other = BoundaryField::zeros(scene.base(), FieldLabel::G);
        assert!(matches!(
            evaluate([1.0, 0.0, 0.0], &scene, &f, &other),
            Err(HbemError::MeshMismatch { .. })
        ));
    }

    #[test]
    fn vertical_derivative_vanishes_on_plane() {
        let (scene, _, f, g) = solved([0.3, 0.0, 1.0]);
        let h = 1e-3;
        let u = |x: Point3| evaluate(x, &scene, &f, &g).unwrap().value;
        for x in [[0.5, 0.0, 0.0], [1.0, 1.0, 0.0], [-2.0, 0.5, 0.0]] {
            // second-order one-sided difference from below
            let below = |k: f64| [x[0], x[1], -k * h];
            let dz = (-3.0 * u(x) + 4.0 * u(below(1.0)) - u(below(2.0))) / (-2.0 * h);
            let dx = (u([x[0] + h, x[1], 0.0]) - u([x[0] - h, x[1], 0.0])) / (2.0 * h);
            let dy = (u([x[0], x[1] + h, 0.0]) - u([x[0], x[1] - h, 0.0])) / (2.0 * h);
            assert!(dz.abs() <= 1e-3 * dx.hypot(dy), "{x:?}: dz {dz}, grad {}", dx.hypot(dy));
        }
    }
}
