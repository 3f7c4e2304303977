//! Scenario runners. Each writes its tables into the output directory and
//! returns a report whose headline numbers are also in `report.json`.

use std::f64::consts::PI;
use std::fs::File;
use std::io::BufWriter;
use std::path::Path;
use std::time::Instant;

use impscat_core::effective_medium::{
    compare_cube_averages, dispersion_check, refraction_shift_for_grid, solve_limit_equation, CubeGrid,
};
use impscat_core::many_body::{assemble_las, generate_cloud, solve_las, EffectiveField, FieldSample};
use impscat_core::{CVec3, IncidentField, OneBodySolution, SolveMethod, Vec3, C64};
use serde::Serialize;

use crate::config::{ScenarioConfig, ScenarioKind};
use crate::error::{CliError, Result};
use crate::report::RunReport;
use crate::scaling::scaling_study;
use crate::table::{field_table, grid_table, Table};

/// Runs `kind` on a validated configuration, on a dedicated pool of
/// `threads` workers when given.
pub fn run_with_threads(cfg: &ScenarioConfig, kind: ScenarioKind, threads: Option<usize>) -> Result<RunReport> {
    match threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build().map_err(|e| CliError::Config {
                origin: "--threads".into(),
                line: None,
                key: "threads".into(),
                message: e.to_string(),
            })?;
            pool.install(|| run(cfg, kind))
        }
        None => run(cfg, kind),
    }
}

pub fn run(cfg: &ScenarioConfig, kind: ScenarioKind) -> Result<RunReport> {
    let start = Instant::now();
    let out = cfg.output_dir();
    std::fs::create_dir_all(&out).map_err(CliError::io(&out))?;
    let mut report = RunReport::new(kind, cfg);
    match kind {
        ScenarioKind::Onebody => onebody(cfg, &out, &mut report)?,
        ScenarioKind::Manybody => manybody(cfg, &out, &mut report)?,
        ScenarioKind::Medium => medium(cfg, &out, &mut report)?,
        ScenarioKind::Convergence => convergence(cfg, &out, &mut report)?,
        ScenarioKind::Scaling => scaling(cfg, &out, &mut report)?,
    }
    report.wall_time_s = start.elapsed().as_secs_f64();
    let path = out.join("report.json");
    report.outputs.push(path.clone());
    report.write_json(&path)?;
    Ok(report)
}

fn save(report: &mut RunReport, table: &Table, path: &Path) -> Result<()> {
    table.save(path)?;
    report.outputs.push(path.to_path_buf());
    Ok(())
}

fn save_json(report: &mut RunReport, value: &impl Serialize, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("serializable");
    std::fs::write(path, text + "\n").map_err(CliError::io(path))?;
    report.outputs.push(path.to_path_buf());
    Ok(())
}

fn points(cfg: &ScenarioConfig) -> Vec<Vec3> {
    cfg.output.points.iter().map(|p| Vec3(*p)).collect()
}

fn max_relative_deviation(samples: &[FieldSample], incident: &dyn IncidentField, cfg: &ScenarioConfig) -> Result<f64> {
    let med = cfg.medium()?;
    Ok(samples
        .iter()
        .map(|s| {
            let e0 = incident.e(&med, &s.position);
            (s.e - e0).norm() / e0.norm().max(f64::MIN_POSITIVE)
        })
        .fold(0.0, f64::max))
}

fn onebody(cfg: &ScenarioConfig, out: &Path, report: &mut RunReport) -> Result<()> {
    let med = cfg.medium()?;
    let pw = cfg.plane_wave()?;
    let sm = cfg.shape_matrices()?;
    let p = cfg.particle.expect("validated");
    let sol = OneBodySolution::solve(&sm, &cfg.impedance()?, &med, &pw, Vec3(p.center), p.a)?;

    let ff = cfg.output.far_field;
    let r = ff.kr / med.k();
    let mut table = Table::new(
        "far_field",
        &["theta", "phi", "dx", "dy", "dz", "re_ex", "im_ex", "re_ey", "im_ey", "re_ez", "im_ez", "transversality"],
    );
    let mut worst: f64 = 0.0;
    for i in 0..ff.theta {
        let theta = (i as f64 + 0.5) * PI / ff.theta as f64;
        for j in 0..ff.phi {
            let phi = 2.0 * PI * j as f64 / ff.phi as f64;
            let dir = Vec3::new(theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos());
            let v = sol.far_field(&dir, r)?;
            let t = if v.norm() > 0.0 { v.dot_real(&dir).norm() / v.norm() } else { 0.0 };
            worst = worst.max(t);
            let mut row = vec![theta, phi, dir[0], dir[1], dir[2]];
            for c in v.0 {
                row.extend([c.re, c.im]);
            }
            row.push(t);
            table.push(row);
        }
    }
    save(report, &table, &out.join("far_field.csv"))?;

    let pts = points(cfg);
    if !pts.is_empty() {
        let samples = pts
            .iter()
            .map(|x| {
                let e = sol.total_field(&pw, x)?;
                let h = if cfg.output.with_h { Some(sol.magnetic_field(&pw, x)?) } else { None };
                Ok(FieldSample { position: *x, e, h })
            })
            .collect::<Result<Vec<_>>>()?;
        save(report, &field_table(&samples), &out.join("fields.csv"))?;
    }
    report.set("q_norm", sol.q.norm());
    report.set("q", sol.q.0.iter().flat_map(|c| [c.re, c.im]).collect::<Vec<f64>>());
    report.set("ka", med.k() * p.a);
    report.set("far_field_kr", ff.kr);
    report.set("max_far_field_transversality", worst);
    Ok(())
}

fn manybody(cfg: &ScenarioConfig, out: &Path, report: &mut RunReport) -> Result<()> {
    let med = cfg.medium()?;
    let pw = cfg.plane_wave()?;
    let sm = cfg.shape_matrices()?;
    let dom = cfg.domain()?;
    let a = cfg.cloud_config().a.expect("validated");
    let h = cfg.h();
    let cloud = generate_cloud(&dom, a, cfg.impedance.kappa, &cfg.density(), &move |_| h, &sm, &cfg.cloud_options())?;
    let path = out.join("cloud.txt");
    let mut w = BufWriter::new(File::create(&path).map_err(CliError::io(&path))?);
    cloud.write_text(&mut w)?;
    drop(w);
    report.outputs.push(path);

    let sys = assemble_las(&cloud, &med, &pw)?;
    let sol = solve_las(&sys, cfg.solver.method, &cfg.solver.gmres())?;
    report.record_solve("las", &sol.stats);
    let ev = EffectiveField::new(&cloud, &sol, &med, &pw)?;
    let at_particles = ev.at_all_particles(cfg.output.with_h);
    save(report, &field_table(&at_particles), &out.join("particles.csv"))?;
    let mut deviation = max_relative_deviation(&at_particles, &pw, cfg)?;
    let pts = points(cfg);
    if !pts.is_empty() {
        let samples = ev.at_points(&pts, cfg.output.with_h)?;
        deviation = deviation.max(max_relative_deviation(&samples, &pw, cfg)?);
        save(report, &field_table(&samples), &out.join("fields.csv"))?;
    }
    report.set("particles", cloud.len());
    report.set("target_count", cloud.target_count.unwrap_or(f64::NAN));
    report.set("spacing", cloud.spacing.unwrap_or(f64::NAN));
    report.set("iterations", sol.stats.iterations);
    report.set("relative_residual", sol.stats.relative_residual);
    report.set("max_relative_deviation_from_incident", deviation);
    Ok(())
}

#[derive(Serialize)]
struct HomogenizedSummary {
    c1: [f64; 2],
    c2: [f64; 2],
    k_squared: f64,
    k1_squared: [f64; 2],
    dispersion: Option<impscat_core::effective_medium::DispersionReport>,
}

fn pair(z: C64) -> [f64; 2] {
    [z.re, z.im]
}

fn medium(cfg: &ScenarioConfig, out: &Path, report: &mut RunReport) -> Result<()> {
    let med = cfg.medium()?;
    let pw = cfg.plane_wave()?;
    let sm = cfg.shape_matrices()?;
    let dom = cfg.domain()?;
    let g = cfg.grid_config();
    let h = cfg.h();
    let grid = CubeGrid::with_resolution(&dom, g.cubes_per_unit, &cfg.density(), &move |_| h)?;
    let sol = solve_limit_equation(&grid, &med, &pw, &sm, g.method, &cfg.solver.gmres())?;
    report.record_solve("limit_equation", &sol.stats);
    save(report, &grid_table(&grid, &sol), &out.join("grid.csv"))?;
    report.set("cubes", grid.len());
    report.set("iterations", sol.stats.iterations);
    report.set("relative_residual", sol.stats.relative_residual);
    match refraction_shift_for_grid(&sm, &med, &grid) {
        Ok(hom) => {
            let dispersion = dispersion_check(&hom, &grid, &sol).ok();
            report.set("c1", pair(hom.c1).to_vec());
            report.set("c2", pair(hom.c2).to_vec());
            report.set("k_squared", hom.k_squared);
            report.set("k1_squared", pair(hom.k1_squared).to_vec());
            if let Some(d) = &dispersion {
                report.set("dispersion_residual", d.residual);
                report.set("homogenized_residual", d.homogenized_residual);
            }
            let summary = HomogenizedSummary {
                c1: pair(hom.c1),
                c2: pair(hom.c2),
                k_squared: hom.k_squared,
                k1_squared: pair(hom.k1_squared),
                dispersion,
            };
            save_json(report, &summary, &out.join("homogenized.json"))?;
        }
        Err(e) => report.set("homogenized", format!("not computed: {e}")),
    }
    Ok(())
}

fn convergence(cfg: &ScenarioConfig, out: &Path, report: &mut RunReport) -> Result<()> {
    let c = cfg.convergence.clone().expect("validated");
    let med = cfg.medium()?;
    let pw = cfg.plane_wave()?;
    let sm = cfg.shape_matrices()?;
    let dom = cfg.domain()?;
    let h = cfg.h();
    let density = cfg.density();
    let grid = CubeGrid::with_resolution(&dom, c.reference_cubes_per_unit, &density, &move |_| h)?;
    let ie = solve_limit_equation(&grid, &med, &pw, &sm, cfg.grid_config().method, &cfg.solver.gmres())?;
    report.record_solve("limit_equation", &ie.stats);

    let mut levels = Table::new(
        "convergence",
        &["level", "a", "particles", "spacing", "iterations", "relative_residual", "relative_difference"],
    );
    let mut averages = Table::new(
        "cube_averages",
        &[
            "level", "x0", "y0", "z0", "count", "re_ex", "im_ex", "re_ey", "im_ey", "re_ez", "im_ez", "re_gx", "im_gx", "re_gy",
            "im_gy", "re_gz", "im_gz",
        ],
    );
    let mut diffs = Vec::new();
    for (level, &a) in c.a_levels.iter().enumerate() {
        let cloud = generate_cloud(&dom, a, cfg.impedance.kappa, &density, &move |_| h, &sm, &cfg.cloud_options())?;
        let sys = assemble_las(&cloud, &med, &pw)?;
        let sol = solve_las(&sys, SolveMethod::Iterative, &cfg.solver.gmres())?;
        report.record_solve(format!("las_level_{level}"), &sol.stats);
        let ev = EffectiveField::new(&cloud, &sol, &med, &pw)?;
        let e: Vec<CVec3> = ev.at_all_particles(false).into_iter().map(|s| s.e).collect();
        let cmp = compare_cube_averages(&dom, c.compare_side, &cloud.positions, &e, &grid, &ie)?;
        log::info!("level {level}: a = {a:.4e}, M = {}, difference {:.4e}", cloud.len(), cmp.relative_difference);
        levels.push(vec![
            level as f64,
            a,
            cloud.len() as f64,
            cloud.spacing.unwrap_or(f64::NAN),
            sol.stats.iterations as f64,
            sol.stats.relative_residual,
            cmp.relative_difference,
        ]);
        let av = &cmp.averages;
        for i in 0..av.corners.len() {
            let mut row = vec![level as f64];
            row.extend(av.corners[i].0);
            row.push(av.counts[i] as f64);
            for v in [av.particle_mean[i], av.grid_mean[i]] {
                for z in v.0 {
                    row.extend([z.re, z.im]);
                }
            }
            averages.push(row);
        }
        diffs.push(cmp.relative_difference);
    }
    save(report, &levels, &out.join("convergence.csv"))?;
    save(report, &averages, &out.join("cube_averages.csv"))?;
    let ratios: Vec<f64> = diffs.windows(2).map(|w| w[1] / w[0]).collect();
    report.set("reference_cubes", grid.len());
    report.set("a_levels", c.a_levels.clone());
    report.set("relative_differences", diffs.clone());
    report.set("convergence_ratios", ratios);
    report.set("strictly_decreasing", diffs.windows(2).all(|w| w[1] < w[0]));
    Ok(())
}

fn scaling(cfg: &ScenarioConfig, out: &Path, report: &mut RunReport) -> Result<()> {
    let sc = cfg.scaling.clone().expect("validated");
    let kappas = sc.kappas.clone().unwrap_or_else(|| vec![cfg.impedance.kappa]);
    let mut table = Table::new("scaling", &["kappa", "a", "magnitude"]);
    let (mut slopes, mut widths, mut expected) = (Vec::new(), Vec::new(), Vec::new());
    for &kappa in &kappas {
        let fit = scaling_study(cfg, &sc.a_values, kappa)?;
        for (a, m) in fit.sizes.iter().zip(&fit.magnitudes) {
            table.push(vec![kappa, *a, *m]);
        }
        slopes.push(fit.slope);
        widths.push(fit.half_width);
        expected.push(2.0 - kappa);
    }
    save(report, &table, &out.join("scaling.csv"))?;
    report.set("kappas", kappas);
    report.set("slopes", slopes);
    report.set("slope_half_widths", widths);
    report.set("expected_slopes", expected);
    Ok(())
}
