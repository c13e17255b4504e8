use std::f64::consts::{FRAC_PI_2, PI};
use std::io::Write;

use serde_json::{json, Value};

use longi_readout::cavity::{pointer_separation, CavityTrajectory};
use longi_readout::circuit::{flatness, spectrum_sweep, write_spectrum_csv, CircuitReport};
use longi_readout::floquet::{cd_amplitude, floquet_drive, FloquetDescriptor};
use longi_readout::genetic::ga_run;
use longi_readout::oracle::{evolve_floquet, frame_elimination_check, evolve_master, relative_deviation, EvolutionConfig, Frame, QubitCavityState};
use longi_readout::params::linspace;
use longi_readout::pulse_design::{
    baseline, gz_from_gc, polynomial_ansatz, trigonometric_ansatz, verify_boundaries, DEFAULT_BOUNDARY_TOL,
};
use longi_readout::readout::{fit_scaling, snr_curve, SnrCurve};
use longi_readout::time_optimal::{bang_trajectory, minimal_time, ControlProblem};
use longi_readout::{Modulation, SystemParams};

use crate::artifacts::ArtifactDir;
use crate::config::{Ansatz, ExperimentConfig, Scenario};
use crate::error::CliError;

/// Which part of a design-family pipeline to emit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Full,
    Design,
    Snr,
}

/// Time series a scenario exposes to `compare`.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub times: Vec<f64>,
    pub separation: Vec<f64>,
    pub snr: Option<SnrCurve>,
}

#[derive(Debug, Clone)]
pub struct ScenarioOutput {
    pub summary: Value,
    pub series: Option<Series>,
}

fn ansatz(p: &SystemParams, a: Ansatz) -> Modulation {
    match a {
        Ansatz::Polynomial => polynomial_ansatz(p),
        Ansatz::Trigonometric => trigonometric_ansatz(p),
    }
}

fn csv_rows<W: Write>(mut w: W, header: &str, cols: &[&[f64]]) -> std::io::Result<()> {
    writeln!(w, "{header}")?;
    let n = cols.first().map_or(0, |c| c.len());
    for i in 0..n {
        let row: Vec<String> = cols.iter().map(|c| format!("{:e}", c[i])).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

pub fn run(cfg: &ExperimentConfig, dir: &mut ArtifactDir, stage: Stage) -> Result<ScenarioOutput, CliError> {
    let out = match cfg.scenario {
        Scenario::DesignPoly | Scenario::DesignTrig | Scenario::Baseline => design(cfg, dir, stage)?,
        Scenario::CDFrame => cd_frame(cfg, dir)?,
        Scenario::Floquet => floquet(cfg, dir)?,
        Scenario::GA => genetic(cfg, dir)?,
        Scenario::Oracle => oracle(cfg, dir)?,
        Scenario::Circuit => circuit(cfg, dir)?,
        Scenario::OCT => oct(cfg, dir)?,
    };
    let mut summary = json!({
        "scenario": cfg.scenario,
        "label": cfg.label(),
    });
    if let (Value::Object(s), Value::Object(extra)) = (&mut summary, out.summary) {
        s.extend(extra);
    }
    dir.write_json("summary.json", &summary)?;
    Ok(ScenarioOutput { summary, series: out.series })
}

fn design(cfg: &ExperimentConfig, dir: &mut ArtifactDir, stage: Stage) -> Result<ScenarioOutput, CliError> {
    let p = &cfg.system;
    let gc = match cfg.scenario {
        Scenario::DesignPoly => polynomial_ansatz(p),
        Scenario::DesignTrig => trigonometric_ansatz(p),
        _ => baseline(p),
    };
    let mut summary = serde_json::Map::new();
    if stage != Stage::Snr {
        let gz = gz_from_gc(&gc, p.omega_r)?;
        dir.write_csv("modulation_gc.csv", |w| gc.write_csv(w, cfg.grid_points))?;
        dir.write_csv("modulation_gz.csv", |w| gz.write_csv(w, cfg.grid_points))?;
        let report = verify_boundaries(&gc, p, DEFAULT_BOUNDARY_TOL);
        dir.write_json("boundary_report.json", &report)?;
        summary.insert("boundary_passed".into(), json!(report.passed));
        summary.insert("max_normalized_residual".into(), json!(report.max_normalized_residual()));
    }
    let mut series = None;
    if stage != Stage::Design {
        let grid = linspace(0.0, p.t_f, cfg.grid_points);
        let traj = CavityTrajectory::compute(&gc, p.kappa, &grid)?;
        let phi = cfg.squeeze.map_or(FRAC_PI_2, |s| s.phi);
        let curve = snr_curve(&traj, phi, &grid[1..], cfg.squeeze.as_ref())?;
        dir.write_csv("trajectory.csv", |w| traj.write_csv(w))?;
        dir.write_csv("snr.csv", |w| curve.write_csv(w))?;
        let d = pointer_separation(&traj);
        summary.insert("separation_at_t_f".into(), json!(d[d.len() - 1]));
        summary.insert("snr_at_t_f".into(), json!(curve.snr[curve.snr.len() - 1]));
        series = Some(Series { times: grid, separation: d, snr: Some(curve) });
    }
    Ok(ScenarioOutput { summary: Value::Object(summary), series })
}

fn cd_frame(cfg: &ExperimentConfig, dir: &mut ArtifactDir) -> Result<ScenarioOutput, CliError> {
    let p = &cfg.system;
    let gc = ansatz(p, cfg.ansatz);
    let gz = gz_from_gc(&gc, p.omega_r)?;
    let grid = linspace(0.0, p.t_f, cfg.grid_points);
    let gz_v: Vec<f64> = grid.iter().map(|&t| gz.value(t)).collect();
    let cd = grid.iter().map(|&t| cd_amplitude(&gz, p.omega_r, t)).collect::<Result<Vec<_>, _>>()?;
    dir.write_csv("cd_amplitude.csv", |w| csv_rows(w, "t,g_z,cd_amplitude", &[&grid, &gz_v, &cd]))?;
    let fc = frame_elimination_check(p, &gc, &gz, &grid, cfg.fock_truncation)?;
    dir.write_csv("frame_check.csv", |w| {
        csv_rows(w, "t,fidelity_e,fidelity_g", &[&fc.times, &fc.fidelity_e, &fc.fidelity_g])
    })?;
    let peak_cd = cd.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(ScenarioOutput {
        summary: json!({
            "ansatz": cfg.ansatz,
            "fock_truncation": cfg.fock_truncation,
            "worst_fidelity": fc.worst(),
            "final_infidelity": 1.0 - fc.fidelity()[fc.times.len() - 1],
            "peak_cd_amplitude": peak_cd,
        }),
        series: None,
    })
}

fn floquet(cfg: &ExperimentConfig, dir: &mut ArtifactDir) -> Result<ScenarioOutput, CliError> {
    let p = &cfg.system;
    let spec = cfg.floquet.expect("validated");
    spec.validate()?;
    let gz = gz_from_gc(&ansatz(p, cfg.ansatz), p.omega_r)?;
    dir.write_json("floquet_descriptor.json", &FloquetDescriptor::new(&spec, &gz))?;
    let grid = linspace(0.0, p.t_f, cfg.grid_points);
    let amps = grid.iter().map(|&t| floquet_drive(&gz, p.omega_r, &spec, t)).collect::<Result<Vec<_>, _>>()?;
    let diag: Vec<f64> = amps.iter().map(|a| a.diag_amp).collect();
    let coup: Vec<f64> = amps.iter().map(|a| a.coupling_amp).collect();
    dir.write_csv("drive.csv", |w| csv_rows(w, "t,diag_amp,coupling_amp", &[&grid, &diag, &coup]))?;

    let evo = EvolutionConfig::rk4(cfg.fock_truncation, Frame::Rotating);
    let rho0 = QubitCavityState::plus_vacuum(cfg.fock_truncation)?;
    let out = evolve_floquet(p, &gz, spec, &rho0, &evo, &grid)?;
    dir.write_csv("oracle.csv", |w| out.write_csv(w))?;
    let d = pointer_separation(&out.conditional_means());
    Ok(ScenarioOutput {
        summary: json!({
            "ansatz": cfg.ansatz,
            "Omega": spec.omega,
            "nu": spec.nu,
            "slow_against_omega_r": spec.is_slow_against(p.omega_r),
            "fock_truncation": cfg.fock_truncation,
            "separation_at_t_f": d[d.len() - 1],
            "max_separation": d.iter().copied().fold(0.0, f64::max),
            "sigma_z_drift": out.sigma_z_drift(),
        }),
        series: Some(Series { times: grid, separation: d, snr: None }),
    })
}

fn genetic(cfg: &ExperimentConfig, dir: &mut ArtifactDir) -> Result<ScenarioOutput, CliError> {
    let p = &cfg.system;
    let ga = cfg.ga.clone().expect("validated");
    let best = ga_run(p, &ga)?;
    dir.write_json("optimized_modulation.json", &best)?;
    dir.write_csv("history.csv", |w| best.write_history_csv(w))?;
    let m = best.modulation()?;
    dir.write_csv("modulation_gc.csv", |w| m.write_csv(w, cfg.grid_points))?;
    let grid = linspace(0.0, ga.horizon, cfg.grid_points);
    let traj = CavityTrajectory::compute(&m, p.kappa, &grid)?;
    let curve = snr_curve(&traj, FRAC_PI_2, &grid[1..], None)?;
    dir.write_csv("trajectory.csv", |w| traj.write_csv(w))?;
    dir.write_csv("snr.csv", |w| curve.write_csv(w))?;
    Ok(ScenarioOutput {
        summary: json!({
            "seed": ga.seed,
            "horizon": ga.horizon,
            "final_snr": best.final_snr,
            "incumbent_snr": best.incumbent_snr,
            "final_fitness": best.final_fitness,
            "boundary_passed": best.constraint_residuals.passed,
        }),
        series: Some(Series { times: grid, separation: pointer_separation(&traj), snr: Some(curve) }),
    })
}

fn oracle(cfg: &ExperimentConfig, dir: &mut ArtifactDir) -> Result<ScenarioOutput, CliError> {
    let p = &cfg.system;
    let evo = cfg.evolution.expect("validated");
    let m = ansatz(p, cfg.ansatz);
    let grid = linspace(0.0, p.t_f, cfg.grid_points);
    let rho0 = QubitCavityState::plus_vacuum(evo.fock_truncation)?;
    let out = evolve_master(p, &m, &rho0, &evo, &grid)?;
    let reference = CavityTrajectory::compute(&m, p.kappa, &grid)?;
    let means = out.conditional_means();
    let rel = relative_deviation(&means, &reference)?;
    let max_abs = (0..grid.len())
        .map(|i| (means.alpha_e[i] - reference.alpha_e[i]).norm().max((means.alpha_g[i] - reference.alpha_g[i]).norm()))
        .fold(0.0, f64::max);
    dir.write_csv("oracle.csv", |w| out.write_csv(w))?;
    dir.write_csv("analytic.csv", |w| reference.write_csv(w))?;
    let report = json!({
        "fock_truncation": evo.fock_truncation,
        "frame": evo.frame,
        "relative_deviation": rel,
        "max_abs_deviation": max_abs,
        "sigma_z_drift": out.sigma_z_drift(),
        "trace_error": out.trace_error(),
    });
    dir.write_json("agreement.json", &report)?;
    Ok(ScenarioOutput {
        summary: report,
        series: Some(Series { times: grid, separation: pointer_separation(&means), snr: None }),
    })
}

fn circuit(cfg: &ExperimentConfig, dir: &mut ArtifactDir) -> Result<ScenarioOutput, CliError> {
    let cp = cfg.circuit.expect("validated");
    let report = CircuitReport::new(&cp)?;
    dir.write_json("circuit_report.json", &report)?;
    let varphi = linspace(0.0, PI, cfg.grid_points);
    let sweep = spectrum_sweep(&cp, &[cp.e_j], &varphi, 4)?;
    dir.write_csv("spectrum.csv", |w| write_spectrum_csv(&sweep, w))?;
    let flat = flatness(&cp, &varphi, 4)?;
    dir.write_json("flatness.json", &flat)?;
    Ok(ScenarioOutput {
        summary: json!({
            "omega_q_formula": report.omega_q_formula,
            "omega_q_exact": report.omega_q_exact,
            "gz_formula": report.gz_formula,
            "ratio_formula": report.ratio_formula,
            "leakage_warning": report.pauli.leakage_warning,
            "flatness_passed": flat.passed,
        }),
        series: None,
    })
}

fn oct(cfg: &ExperimentConfig, dir: &mut ArtifactDir) -> Result<ScenarioOutput, CliError> {
    let p = &cfg.system;
    let oc = cfg.oct.expect("validated");
    let mut problem = ControlProblem::for_params(p, oc.u_max)?;
    problem.max_returns = oc.max_returns;
    let report = minimal_time(&problem)?;
    dir.write_json("minimal_time.json", &report)?;
    let grid = linspace(0.0, report.t_min, cfg.grid_points);
    let tr = bang_trajectory(oc.u_max, p.omega_r, &grid)?;
    dir.write_csv("bang_trajectory.csv", |w| csv_rows(w, "t,g_c,g_d", &[&tr.times, &tr.g_c, &tr.g_d]))?;
    Ok(ScenarioOutput {
        summary: json!({
            "u_max": oc.u_max,
            "k": report.k,
            "t_min": report.t_min,
            "target_met": report.target_met,
        }),
        series: None,
    })
}

/// Exponent of SNR ∝ τ^x over the whole curve, if the fit succeeds.
pub fn full_window_exponent(curve: &SnrCurve) -> Option<f64> {
    let lo = *curve.taus.first()?;
    let hi = *curve.taus.last()?;
    fit_scaling(curve, (lo, hi)).ok().map(|f| f.exponent)
}
