//! Named commands behind a common trait, selected at runtime by name.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use hbem_core::asymptotics::{
    convergence_study, expansion_constant_pressure, polarization_tensor, tensor_norm_inf, GeneralExpansion,
};
use hbem_core::field::evaluate;
use hbem_core::geometry::Point3;
use hbem_core::linalg::norm_inf;
use hbem_core::solve::{ExteriorSystem, SolverRegistry, TraceSystem};
use hbem_core::spectral::{half_eigenfunction_check, spectrum};
use hbem_core::HbemError;
use serde_json::json;

use crate::config::{DatumSpec, RunConfig, ShapeSpec};
use crate::table::{num, ResultTable, Verdict};
use crate::CliError;

pub trait Command: Send + Sync {
    fn name(&self) -> &'static str;
    fn about(&self) -> &'static str;
    fn run(&self, config: &RunConfig) -> Result<ResultTable, CliError>;
}

#[derive(Clone)]
pub struct CommandRegistry {
    commands: BTreeMap<&'static str, Arc<dyn Command>>,
}

impl CommandRegistry {
    pub fn empty() -> Self {
        Self {
            commands: BTreeMap::new(),
        }
    }

    pub fn register(&mut self, command: Arc<dyn Command>) {
        self.commands.insert(command.name(), command);
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn Command>, CliError> {
        self.commands.get(name).cloned().ok_or_else(|| {
            CliError::Config(format!(
                "unknown command '{name}', expected one of: {}",
                self.names().collect::<Vec<_>>().join(", ")
            ))
        })
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.commands.keys().copied()
    }

    /// One `name  description` line per command, for help output.
    pub fn describe(&self) -> String {
        self.commands
            .values()
            .map(|c| format!("  {:<14}{}", c.name(), c.about()))
            .collect::<Vec<_>>()
            .join("\n")
    }
}

impl Default for CommandRegistry {
    fn default() -> Self {
        let mut r = Self::empty();
        r.register(Arc::new(Solve));
        r.register(Arc::new(Expand));
        r.register(Arc::new(Polarization));
        r.register(Arc::new(Spectrum));
        r.register(Arc::new(Convergence));
        r
    }
}

fn numeric(e: HbemError) -> CliError {
    CliError::Numeric(e.to_string())
}

fn on_plane_points(config: &RunConfig) -> Result<Vec<Point3>, CliError> {
    let points = config.observation_points()?;
    if let Some(p) = points.iter().find(|p| p[2] != 0.0) {
        return Err(CliError::Config(format!("observation: point {p:?} is not on the plane x_d = 0")));
    }
    Ok(points)
}

pub struct Solve;

impl Command for Solve {
    fn name(&self) -> &'static str {
        "solve"
    }

    fn about(&self) -> &'static str {
        "solve the trace equation and evaluate u at the observation points"
    }

    fn run(&self, config: &RunConfig) -> Result<ResultTable, CliError> {
        let base = config.base_mesh()?;
        config.validate_scene(&base)?;
        let points = config.observation_points()?;
        let solvers = SolverRegistry::default();
        let solver = solvers.get(&config.method).map_err(|e| CliError::Config(format!("method: {e}")))?;
        let scene = config.scene(&base, config.epsilon)?;
        let system = TraceSystem::new(&scene).map_err(numeric)?;
        let g = config.datum(scene.placed());
        let (f, report) = system.solve(&g, solver.as_ref()).map_err(numeric)?;

        let mut comparison = serde_json::Map::new();
        for name in solvers.names().filter(|n| *n != config.method) {
            let other = solvers.get(name).map_err(numeric)?;
            let entry = match system.solve(&g, other.as_ref()) {
                Ok((h, _)) => {
                    let diff = f.values().iter().zip(h.values()).map(|(a, b)| (a - b).abs());
                    json!(diff.fold(0.0, f64::max))
                }
                Err(e) => json!(e.to_string()),
            };
            comparison.insert(name.to_string(), entry);
        }

        let mut table = ResultTable::new(&["x", "y", "z", "u"], scene.placed().fingerprint());
        for x in points {
            let u = evaluate(x, &scene, &f, &g).map_err(numeric)?.value;
            table.push(vec![num(x[0]), num(x[1]), num(x[2]), num(u)]);
        }
        let scale = norm_inf(&system.rhs(&g).map_err(numeric)?).max(1.0);
        table.verdict = Verdict::from_pass(report.residual <= 1e-8 * scale);
        table.note("method", report.method);
        table.note("iterations", report.iterations);
        table.note("residual", report.residual);
        table.note("max_abs_difference_to", comparison);
        table.note("panels", scene.placed().len());
        Ok(table)
    }
}

pub struct Expand;

impl Command for Expand {
    fn name(&self) -> &'static str {
        "expand"
    }

    fn about(&self) -> &'static str {
        "compare the full solve with the two-term small-cavity expansion on the plane"
    }

    fn run(&self, config: &RunConfig) -> Result<ResultTable, CliError> {
        let base = config.base_mesh()?;
        config.validate_scene(&base)?;
        let points = on_plane_points(config)?;
        let scene = config.scene(&base, config.epsilon)?;
        let g_hat = config.datum(&base);
        let exterior = ExteriorSystem::new(&base).map_err(numeric)?;
        let model = GeneralExpansion::with_system(&exterior, &g_hat).map_err(numeric)?;
        let g = g_hat.transported(scene.placed()).map_err(numeric)?;
        let (f, _) = TraceSystem::new(&scene)
            .and_then(|s| s.solve(&g, &hbem_core::solve::DirectLu))
            .map_err(numeric)?;
        let tensor = match config.datum {
            DatumSpec::Pressure { p } => Some((p, polarization_tensor(&base).map_err(numeric)?.raw)),
            _ => None,
        };

        let mut table = ResultTable::new(
            &["x", "y", "u_bie", "monopole", "dipole", "expansion", "difference"],
            scene.placed().fingerprint(),
        );
        let mut pass = true;
        let mut worst_consistency: f64 = 0.0;
        for x in points {
            let u = evaluate(x, &scene, &f, &g).map_err(numeric)?.value;
            let e = model.sample(x, &scene).map_err(numeric)?;
            if let Some((p, m)) = &tensor {
                let t = expansion_constant_pressure(x, &scene, *p, m).map_err(numeric)?;
                let rel = (t.total - e.total).abs() / t.total.abs().max(f64::MIN_POSITIVE);
                worst_consistency = worst_consistency.max(rel);
                pass &= e.leading_monopole.to_bits() == 0 && (rel <= 1e-10 || t.total == e.total);
            }
            pass &= u.is_finite() && e.total.is_finite();
            table.push(vec![
                num(x[0]),
                num(x[1]),
                num(u),
                num(e.leading_monopole),
                num(e.dipole),
                num(e.total),
                num(u - e.total),
            ]);
        }
        table.verdict = Verdict::from_pass(pass);
        table.note("monopole_moment", model.monopole_moment);
        table.note("dipole_moment", model.dipole_moment.to_vec());
        if tensor.is_some() {
            table.note("tensor_form_relative_difference", worst_consistency);
        }
        Ok(table)
    }
}

pub struct Polarization;

impl Command for Polarization {
    fn name(&self) -> &'static str {
        "polarization"
    }

    fn about(&self) -> &'static str {
        "polarization tensor of the shape (z and epsilon are ignored)"
    }

    fn run(&self, config: &RunConfig) -> Result<ResultTable, CliError> {
        let base = config.base_mesh()?;
        let m = polarization_tensor(&base).map_err(numeric)?;
        let mut table = ResultTable::new(&["i", "j", "m", "m_raw"], base.fingerprint());
        for i in 0..3 {
            for j in 0..3 {
                table.push(vec![i.to_string(), j.to_string(), num(m.tensor[i][j]), num(m.raw[i][j])]);
            }
        }
        let mut pass = m.is_positive_definite() && m.symmetry_defect <= 1e-8 * tensor_norm_inf(&m.tensor);
        if let ShapeSpec::Icosphere { radius, .. } = config.shape {
            // a ball of radius r has M = (3/2)|B| I = 2 pi r^3 I
            let reference = 2.0 * PI * radius.powi(3);
            let mut worst: f64 = 0.0;
            for i in 0..3 {
                for j in 0..3 {
                    let expected = if i == j { reference } else { 0.0 };
                    worst = worst.max((m.tensor[i][j] - expected).abs() / reference);
                }
            }
            pass &= worst <= 0.015;
            table.note("sphere_reference", reference);
            table.note("sphere_relative_deviation", worst);
        }
        table.verdict = Verdict::from_pass(pass);
        table.note("eigenvalues", m.eigenvalues.to_vec());
        table.note("min_eigenvalue", m.min_eigenvalue);
        table.note("raw_symmetry_defect", m.raw_symmetry_defect);
        table.note("symmetry_defect", m.symmetry_defect);
        table.note("panels", m.panel_count);
        table.note("volume", base.enclosed_volume());
        Ok(table)
    }
}

pub struct Spectrum;

impl Command for Spectrum {
    fn name(&self) -> &'static str {
        "spectrum"
    }

    fn about(&self) -> &'static str {
        "eigenvalues of K* + D~* on the placed cavity with the inclusion verdict"
    }

    fn run(&self, config: &RunConfig) -> Result<ResultTable, CliError> {
        let base = config.base_mesh()?;
        config.validate_scene(&base)?;
        let scene = config.scene(&base, config.epsilon)?;
        let report = spectrum(&scene).map_err(numeric)?;
        let mut table = ResultTable::new(&["rank", "re", "im"], scene.placed().fingerprint());
        for (k, (re, im)) in report.eigenvalues.iter().enumerate() {
            table.push(vec![k.to_string(), num(*re), num(*im)]);
        }
        table.verdict = Verdict::from_pass(report.inclusion_holds());
        table.note("min_real", report.min_real);
        table.note("max_real", report.max_real);
        table.note("max_imag", report.max_imag);
        table.note("imag_flagged", report.imag_flagged);
        table.note("count_near_half", report.count_near_half);
        table.note("series_spectral_radius", report.series_spectral_radius());
        table.note("half_residual", half_eigenfunction_check(&scene).map_err(numeric)?);
        Ok(table)
    }
}

pub struct Convergence;

/// Required log-log slope: the remainder is `O(eps^4)`, less half an order.
pub const CONVERGENCE_SLOPE: f64 = 3.5;

impl Command for Convergence {
    fn name(&self) -> &'static str {
        "convergence"
    }

    fn about(&self) -> &'static str {
        "epsilon sweep of |u_bie - 2 eps^3 grad Gamma . M p| with its log-log slope"
    }

    fn run(&self, config: &RunConfig) -> Result<ResultTable, CliError> {
        let base = config.base_mesh()?;
        let sweep = config
            .epsilon_sweep
            .as_ref()
            .ok_or_else(|| CliError::Config("epsilon_sweep: required for convergence".into()))?;
        config.validate_scene(&base)?;
        let DatumSpec::Pressure { p } = config.datum else {
            return Err(CliError::Config("datum: convergence needs a pressure datum".into()));
        };
        let points = on_plane_points(config)?;
        let [x] = points[..] else {
            return Err(CliError::Config("observation: convergence needs exactly one point".into()));
        };
        let study = convergence_study(&base, config.z, config.delta0, x, p, sweep, !config.drop_dipole)
            .map_err(numeric)?;
        let mut table = ResultTable::new(
            &["epsilon", "u_bie", "expansion", "error", "trace_deviation"],
            base.fingerprint(),
        );
        for r in &study.rows {
            table.push(vec![num(r.epsilon), num(r.u_bie), num(r.expansion), num(r.error), num(r.trace_deviation)]);
        }
        table.verdict = Verdict::from_pass(study.slope >= CONVERGENCE_SLOPE);
        table.note("slope", study.slope);
        table.note("required_slope", CONVERGENCE_SLOPE);
        table.note("trace_slope", study.trace_slope);
        table.note("dipole_included", !config.drop_dipole);
        Ok(table)
    }
}
