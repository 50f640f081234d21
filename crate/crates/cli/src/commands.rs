//! One function per experiment. Each writes its artifacts into
//! `<root>/runs/<experiment>/<hash>/` and appends a record there.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use gmi_core::alber::{
    default_xi_range, detect_instability_contour, detect_instability_gridscan, eigenvalue_oracle, image_curve,
    minimal_truncation, riemann_convergence_study, write_nyquist_csv, Convention, KernelParams, Status,
};
use gmi_core::experiments::{
    config_hash, inhomogeneity, run_gmi_with, run_table1_with, RunRecord, Timing, TABLE1_FACTORS, TABLE1_PUBLISHED,
};
use gmi_core::io::{export_field, write_coefficients_csv, write_heatmap_csv, write_verdict_json, FieldSidecar};
use gmi_core::nlssim::{extract_inhomogeneity_planewave, grid, grid_points_for, solve, sup_modulus, SimConfig};
use gmi_core::seastate::{generate, generate_ensemble, sample_on_grid, write_modes_csv};
use gmi_core::spectrum::discretize;
use gmi_core::Complex64;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{InitialCondition, RunConfig, StabilityMethod};
use crate::{run_directory, CliError, Experiment, Report};

/// Hash of everything that determines the results. The output root does not.
pub fn hash(cfg: &RunConfig) -> Result<String, CliError> {
    Ok(config_hash(&hashed(cfg))?)
}

fn hashed(cfg: &RunConfig) -> RunConfig {
    RunConfig {
        output: None,
        ..cfg.clone()
    }
}

struct Produced {
    artifacts: Vec<String>,
    outputs: Vec<(&'static str, Value)>,
    summary: String,
    indeterminate: Option<String>,
}

impl Produced {
    fn new(summary: String) -> Self {
        Self {
            artifacts: Vec::new(),
            outputs: Vec::new(),
            summary,
            indeterminate: None,
        }
    }

    fn output(mut self, key: &'static str, value: Value) -> Self {
        self.outputs.push((key, value));
        self
    }
}

pub fn run(experiment: Experiment, cfg: &RunConfig, root: &Path) -> Result<Report, CliError> {
    let started = Timing::start();
    let dir = run_directory(root, experiment, cfg)?;
    fs::create_dir_all(&dir)?;
    let produced = match experiment {
        Experiment::Spectrum => spectrum(cfg, &dir)?,
        Experiment::Realize => realize(cfg, &dir)?,
        Experiment::Stability => stability(cfg, &dir)?,
        Experiment::Converge => converge(cfg, &dir)?,
        Experiment::Simulate => simulate(cfg, &dir)?,
        Experiment::Table1 => table1(cfg, &dir)?,
        Experiment::Gmi => gmi(cfg, &dir)?,
    };
    let mut record = RunRecord::new(experiment.name(), &hashed(cfg), Timing::finish(started))?;
    for (k, v) in produced.outputs {
        record = record.output(k, v)?;
    }
    record.artifacts = produced.artifacts.clone();
    record.append(root)?;
    if let Some(why) = produced.indeterminate {
        return Err(CliError::Indeterminate(format!("{why}; artifacts in {}", dir.display())));
    }
    Ok(Report {
        directory: dir,
        artifacts: produced.artifacts,
        summary: produced.summary,
    })
}

fn create(dir: &Path, name: &str, artifacts: &mut Vec<String>) -> Result<BufWriter<File>, CliError> {
    artifacts.push(name.to_string());
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn write_text(dir: &Path, name: &str, text: &str, artifacts: &mut Vec<String>) -> Result<(), CliError> {
    artifacts.push(name.to_string());
    fs::write(dir.join(name), text)?;
    Ok(())
}

fn half_coefficients(p: f64, q: f64, convention: Convention) -> (f64, f64) {
    match convention {
        Convention::Half => (p, q),
        Convention::Full => (2.0 * p, 2.0 * q),
    }
}

fn spectrum(cfg: &RunConfig, dir: &Path) -> Result<Produced, CliError> {
    let s = cfg.spectrum.build()?;
    let d = discretize(&s, cfg.domain.length, cfg.domain.spacing_multiplier)?;
    let mut out = Produced::new(format!(
        "{} coefficients, total variance {:e}",
        d.mode_count(),
        d.total_variance()
    ));
    write_coefficients_csv(&d, create(dir, "coefficients.csv", &mut out.artifacts)?)?;
    Ok(out
        .output("mode_count", json!(d.mode_count()))
        .output("max_index", json!(d.max_index()))
        .output("total_variance", json!(d.total_variance())))
}

fn realize(cfg: &RunConfig, dir: &Path) -> Result<Produced, CliError> {
    let s = cfg.spectrum.build()?;
    let rc = &cfg.experiment.realize;
    let (l, m) = (cfg.domain.length, cfg.domain.spacing_multiplier);
    let realizations = if rc.count == 1 {
        vec![generate(&s, l, m, cfg.seed)?]
    } else {
        generate_ensemble(&s, l, m, cfg.seed, rc.count)?.realizations().to_vec()
    };
    let mut out = Produced::new(format!("{} realization(s)", realizations.len()));
    let mut powers = Vec::new();
    for (i, r) in realizations.iter().enumerate() {
        write_modes_csv(r, create(dir, &format!("realization_{i}_modes.csv"), &mut out.artifacts)?)?;
        let points = rc.points.unwrap_or_else(|| r.min_grid_points());
        let u = sample_on_grid(r, points)?;
        let mut text = String::from("x,re,im\n");
        for (x, z) in grid(l, points).iter().zip(&u) {
            let _ = writeln!(text, "{x:e},{:e},{:e}", z.re, z.im);
        }
        write_text(dir, &format!("realization_{i}_field.csv"), &text, &mut out.artifacts)?;
        powers.push(r.power());
    }
    Ok(out.output("power", json!(powers)))
}

fn stability(cfg: &RunConfig, dir: &Path) -> Result<Produced, CliError> {
    let sc = &cfg.stability;
    let s = cfg.spectrum.build()?;
    let d = discretize(&s, cfg.domain.length, cfg.domain.spacing_multiplier)?;
    let kp = KernelParams::from_convention(sc.p, sc.q, sc.convention, d)?;
    let (lo, hi) = default_xi_range(&kp);
    let range = (sc.xi_min.unwrap_or(lo), sc.xi_max.unwrap_or(hi));
    let verdict = match sc.method {
        StabilityMethod::Contour => detect_instability_contour(&kp, range, &sc.contour, sc.refine_tol)?,
        StabilityMethod::Gridscan => detect_instability_gridscan(&kp, range, &sc.grid, sc.refine_tol)?,
        StabilityMethod::Oracle => eigenvalue_oracle(&kp, sc.k_trunc.unwrap_or_else(|| minimal_truncation(&kp)))?,
    };
    let mut out = Produced::new(format!(
        "{:?}: {:?}, unstable={}, max growth rate {:e}",
        verdict.method, verdict.status, verdict.unstable, verdict.max_growth_rate
    ));
    out.artifacts.push("verdict.json".into());
    write_verdict_json(&verdict, &dir.join("verdict.json"))?;

    let xi = sc.nyquist_xi.unwrap_or_else(|| {
        verdict
            .witnesses
            .iter()
            .max_by(|a, b| a.omega.re.total_cmp(&b.omega.re))
            .map_or(1, |w| w.xi)
    });
    let curve = image_curve(&kp, xi, &sc.contour)?;
    write_nyquist_csv(&curve, create(dir, "nyquist.csv", &mut out.artifacts)?)?;

    if verdict.status == Status::Indeterminate {
        out.indeterminate = Some(format!("contour verdict undecided ({})", verdict.notes.join("; ")));
    }
    Ok(out
        .output("status", json!(verdict.status))
        .output("unstable", json!(verdict.unstable))
        .output("max_growth_rate", json!(verdict.max_growth_rate))
        .output("witnesses", json!(verdict.witnesses.len()))
        .output("nyquist_xi", json!(xi)))
}

fn converge(cfg: &RunConfig, dir: &Path) -> Result<Produced, CliError> {
    let sc = &cfg.stability;
    let s = cfg.spectrum.build()?;
    let (p, q) = half_coefficients(sc.p, sc.q, sc.convention);
    let x = sc.converge_x.unwrap_or(1.0 / cfg.domain.length);
    let omega = Complex64::new(sc.converge_omega[0], sc.converge_omega[1]);
    let lengths: Vec<f64> = sc.ladder_factors.iter().map(|f| f * cfg.domain.length).collect();
    let rows = riemann_convergence_study(&s, x, omega, p, q, &lengths)?;
    let mut text = String::from("domain_length,xi,re_periodized,im_periodized,re_limit,im_limit,error\n");
    for r in &rows {
        let _ = writeln!(
            text,
            "{:e},{},{:e},{:e},{:e},{:e},{:e}",
            r.domain_length, r.xi, r.periodized.re, r.periodized.im, r.limit.re, r.limit.im, r.error
        );
    }
    let mut out = Produced::new(format!("{} ladder rows at X = {x:e}", rows.len()));
    write_text(dir, "convergence.csv", &text, &mut out.artifacts)?;
    let errors: Vec<f64> = rows.iter().map(|r| r.error).collect();
    Ok(out.output("x", json!(x)).output("errors", json!(errors)))
}

fn simulate(cfg: &RunConfig, dir: &Path) -> Result<Produced, CliError> {
    let sim = &cfg.simulation;
    let (p, q) = sim.full_coefficients();
    let l = cfg.domain.length;
    let nx = match sim.nx {
        Some(n) => n,
        None => grid_points_for(l, sim.dx)?,
    };
    let xs = grid(l, nx);
    let initial: Vec<Complex64> = match &sim.initial {
        InitialCondition::PlaneWave { amplitude } => vec![Complex64::new(*amplitude, 0.0); nx],
        InitialCondition::Inhomogeneity { j, amplitude } => xs
            .iter()
            .map(|&x| inhomogeneity(*j, x).map(|d| Complex64::new(amplitude * (1.0 + d), 0.0)))
            .collect::<gmi_core::Result<_>>()?,
        InitialCondition::SeaState => {
            let s = cfg.spectrum.build()?;
            sample_on_grid(&generate(&s, l, cfg.domain.spacing_multiplier, cfg.seed)?, nx)?
        }
    };
    let sc = SimConfig::new(p, q, l, sim.dt, sim.t_final, initial)?;
    let field = solve(&sc, sim.store_every)?;

    let mut out = Produced::new(String::new());
    let sidecar = FieldSidecar::new(nx, sim.dt, sc.dx(), l, field.times.clone());
    export_field(dir, "field", &field.snapshots, &sidecar)?;
    out.artifacts.extend(["field.bin".to_string(), "field.json".to_string()]);

    // Sea states have no plane-wave reference, so their heatmap shows |u|.
    let delta = match &sim.initial {
        InitialCondition::PlaneWave { amplitude } | InitialCondition::Inhomogeneity { amplitude, .. } => {
            extract_inhomogeneity_planewave(&field, *amplitude, q)?
        }
        InitialCondition::SeaState => field.snapshots.clone(),
    };
    write_heatmap_csv(&delta, &field.times, &xs, sim.heatmap_stride, create(dir, "heatmap.csv", &mut out.artifacts)?)?;

    let mut text = String::from("t,mass,energy\n");
    for r in &field.invariant_trace {
        let _ = writeln!(text, "{:e},{:e},{:e}", r.time, r.mass, r.energy);
    }
    write_text(dir, "invariants.csv", &text, &mut out.artifacts)?;

    let sup = sup_modulus(&delta);
    out.summary = format!(
        "{} steps on {nx} points, sup {sup:e}, mass drift {:e}",
        sc.steps(),
        field.mass_drift()
    );
    Ok(out
        .output("nx", json!(nx))
        .output("steps", json!(sc.steps()))
        .output("sup", json!(sup))
        .output("mass_drift", json!(field.mass_drift()))
        .output("energy_drift", json!(field.energy_drift())))
}

fn published(j: u8, factor: f64) -> Option<f64> {
    let col = TABLE1_FACTORS.iter().position(|&f| f == factor)?;
    TABLE1_PUBLISHED.get(usize::from(j).checked_sub(1)?).map(|row| row[col])
}

fn table1(cfg: &RunConfig, dir: &Path) -> Result<Produced, CliError> {
    let cells = cfg.experiment.table1.cells();
    let outcomes = cells
        .par_iter()
        .map(|c| run_table1_with(c).map(|r| r.outcome))
        .collect::<gmi_core::Result<Vec<_>>>()?;
    let mut text = String::from("j,N,max_delta,published,domain_length,nx,mass_drift,energy_drift\n");
    let mut values = Vec::new();
    for (c, o) in cells.iter().zip(&outcomes) {
        let reference = published(c.j, c.factor).map_or(String::new(), |v| v.to_string());
        let _ = writeln!(
            text,
            "{},{},{},{},{},{},{:e},{:e}",
            c.j, c.factor, o.max_delta, reference, o.domain_length, o.nx, o.mass_drift, o.energy_drift
        );
        values.push(json!({"j": c.j, "N": c.factor, "max_delta": o.max_delta}));
    }
    let mut out = Produced::new(format!("{} cell(s)", cells.len()));
    write_text(dir, "metric.csv", &text, &mut out.artifacts)?;
    Ok(out.output("cells", Value::Array(values)))
}

fn gmi(cfg: &RunConfig, dir: &Path) -> Result<Produced, CliError> {
    let runs = cfg.experiment.gmi.runs();
    let outcomes = runs
        .par_iter()
        .map(|c| run_gmi_with(c).map(|r| r.outcome))
        .collect::<gmi_core::Result<Vec<_>>>()?;
    let mut text = String::from("N,sup_delta,initial_sup_delta,growth,domain_length,nx\n");
    let mut values = Vec::new();
    for (c, o) in runs.iter().zip(&outcomes) {
        let growth = o.sup_delta / o.initial_sup_delta;
        let _ = writeln!(
            text,
            "{},{},{},{},{},{}",
            c.periods, o.sup_delta, o.initial_sup_delta, growth, o.domain_length, o.nx
        );
        values.push(json!({"N": c.periods, "sup_delta": o.sup_delta, "growth": growth}));
    }
    let mut out = Produced::new(format!("{} run(s)", runs.len()));
    write_text(dir, "metric.csv", &text, &mut out.artifacts)?;
    Ok(out.output("runs", Value::Array(values)))
}
