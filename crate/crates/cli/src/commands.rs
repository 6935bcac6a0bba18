use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ergo_homog::algebra::{
    level_set_measure, presets as algebra_presets, strongly_regular, RegularityOptions, DEFAULT_DELTA_SCHEDULE,
};
use ergo_homog::flux::{presets, validate_flux, Flux, ValidationOptions};
use ergo_homog::harness::{run_sweep, solve_homogenized, Scenario, ScenarioConfig};
use ergo_homog::homogenized::{em0_check, homogenized_f, Em0Report, HomogenizeOptions};
use ergo_homog::quadrature::QuadratureOptions;
use ergo_homog::solver::{solve, DiscretePressure, Grid1D, Sampling};
use ergo_homog::Error;
use rayon::prelude::*;
use serde::Serialize;

use crate::args::{Command, Common, Tolerances};
use crate::output::{config_hash, Output};
use crate::Failure;

pub fn dispatch(cmd: Command) -> Result<(), Failure> {
    let common = match &cmd {
        Command::HomogenizeFlux { common, .. }
        | Command::Sweep { common }
        | Command::Levelset { common, .. }
        | Command::Solve { common, .. }
        | Command::ValidateFlux { common, .. } => common.clone(),
    };
    if let Some(n) = common.max_threads {
        if n == 0 {
            return Err(Failure::Usage("--max-threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Usage(e.to_string()))?;
    }
    match cmd {
        Command::HomogenizeFlux {
            common,
            points,
            u_min,
            u_max,
        } => homogenize_flux(&common, points, (u_min, u_max)),
        Command::Sweep { common } => sweep(&common),
        Command::Levelset { common, alpha } => levelset(&common, alpha),
        Command::Solve { common, eps, cadence } => solve_one(&common, eps, cadence),
        Command::ValidateFlux { common, resolution } => validate(&common, resolution),
    }
}

/// Scenario names accepted by `--preset`; `stefan` is the well-prepared run.
fn scenario_preset(name: &str) -> Result<ScenarioConfig, Failure> {
    let name = if name == "stefan" { "stefan-wellprepared" } else { name };
    Ok(ScenarioConfig::preset(name)?)
}

fn read_config(path: &Path) -> Result<ScenarioConfig, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
    ScenarioConfig::from_toml(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn canonical_scenario(cfg: &ScenarioConfig) -> String {
    let mut c = cfg.clone();
    c.seed = None;
    c.to_toml()
}

fn canonical(command: &str, source: &str, tol: &Tolerances, extra: &[(&str, String)]) -> String {
    let mut s = format!("command = {command:?}\n{source}");
    for (k, v) in tol.pairs() {
        writeln!(s, "tol_{k} = {v:e}").unwrap();
    }
    for (k, v) in extra {
        writeln!(s, "{k} = {v}").unwrap();
    }
    s
}

struct FluxSource {
    flux: Flux<f64>,
    text: String,
    seed: u64,
}

fn flux_source(c: &Common) -> Result<FluxSource, Failure> {
    if let Some(path) = &c.config {
        let cfg = read_config(path)?;
        return Ok(FluxSource {
            flux: presets::by_name(&cfg.flux.preset)?,
            text: canonical_scenario(&cfg),
            seed: c.seed.or(cfg.seed).unwrap_or(0),
        });
    }
    let name = c
        .preset
        .as_deref()
        .ok_or_else(|| Failure::Usage("one of --preset or --config is required".into()))?;
    let flux = match presets::by_name(name) {
        Ok(f) => f,
        Err(_) => presets::by_name(&scenario_preset(name)?.flux.preset)?,
    };
    Ok(FluxSource {
        flux,
        text: format!("preset = {name:?}\n"),
        seed: c.seed.unwrap_or(0),
    })
}

fn scenario_source(c: &Common) -> Result<(ScenarioConfig, String), Failure> {
    let mut cfg = match (&c.config, &c.preset) {
        (Some(path), _) => read_config(path)?,
        (None, Some(name)) => scenario_preset(name)?,
        (None, None) => return Err(Failure::Usage("one of --preset or --config is required".into())),
    };
    cfg.seed = Some(c.seed.or(cfg.seed).unwrap_or(0));
    let text = canonical_scenario(&cfg);
    Ok((cfg, text))
}

fn homogenize_options(tol: &Tolerances) -> HomogenizeOptions<f64> {
    let mut opts = HomogenizeOptions::default();
    apply_homogenize(&mut opts, tol);
    opts
}

fn apply_homogenize(opts: &mut HomogenizeOptions<f64>, tol: &Tolerances) {
    if let Some(v) = tol.tol_em0 {
        opts.em0_tol = v;
    }
    if let Some(v) = tol.tol_interp {
        opts.interp_tol = v;
    }
    if let Some(v) = tol.tol_quad {
        opts.quad.abs_tol = v;
    }
}

fn scenario(cfg: &ScenarioConfig, tol: &Tolerances) -> Result<Scenario<f64>, Failure> {
    let mut sc = Scenario::<f64>::from_config(cfg)?;
    apply_homogenize(&mut sc.homogenize, tol);
    if let Some(v) = tol.tol_newton {
        sc.step.tol = v;
    }
    Ok(sc)
}

fn em0_csv(report: &Em0Report) -> String {
    let mut s = format!("# tolerance={:e} passed={}\n", report.tolerance, report.passed);
    s.push_str("alpha,x,probes,worst_v,worst_mass\n");
    for e in &report.entries {
        writeln!(s, "{:e},{:e},{},{:e},{:e}", e.alpha, e.x, e.probes, e.worst_v, e.worst_mass).unwrap();
    }
    s
}

fn homogenize_flux(c: &Common, points: usize, u_range: (f64, f64)) -> Result<(), Failure> {
    if points < 2 || !(u_range.0 < u_range.1) {
        return Err(Failure::Usage("need at least two points and u-min < u-max".into()));
    }
    let src = flux_source(c)?;
    let extra = [
        ("points", points.to_string()),
        ("u_range", format!("[{:e}, {:e}]", u_range.0, u_range.1)),
    ];
    let out = Output::create(&c.out, "homogenize-flux", &canonical("homogenize-flux", &src.text, &c.tol, &extra), src.seed)?;
    let mut opts = homogenize_options(&c.tol);
    let (a, b) = src.flux.domain;
    if !src.flux.is_x_independent() {
        opts.x_grid = (0..=32).map(|i| a + (b - a) * i as f64 / 32.0).collect();
    }
    let us: Vec<f64> = (0..points)
        .map(|i| u_range.0 + (u_range.1 - u_range.0) * i as f64 / (points - 1) as f64)
        .collect();
    match homogenized_f(&src.flux, &opts) {
        Ok(hf) => {
            out.write("fbar.csv", &hf.to_csv(&us))?;
            out.write("em0_report.csv", &em0_csv(&hf.em0))?;
            Ok(())
        }
        Err(e @ Error::Em0Violation { .. }) => {
            let xs = if opts.x_grid.is_empty() { vec![0.5 * (a + b)] } else { opts.x_grid.clone() };
            let mut entries = Vec::new();
            for x in xs {
                entries.extend(em0_check(&src.flux, x, &opts)?);
            }
            let report = Em0Report {
                entries,
                tolerance: opts.em0_tol,
                passed: false,
            };
            out.write("em0_report.csv", &em0_csv(&report))?;
            Err(e.into())
        }
        Err(e) => Err(e.into()),
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    run: RunInfo,
    tolerances: BTreeMap<String, f64>,
    scenario: &'a ScenarioConfig,
}

#[derive(Serialize)]
struct RunInfo {
    command: String,
    cli_version: String,
    core_version: String,
    seed: u64,
    config_sha256: String,
    cells: Vec<usize>,
    convexity_constant: f64,
}

fn sweep(c: &Common) -> Result<(), Failure> {
    let (cfg, text) = scenario_source(c)?;
    let seed = cfg.seed.unwrap_or(0);
    let canon = canonical("sweep", &text, &c.tol, &[]);
    let out = Output::create(&c.out, "sweep", &canon, seed)?;
    let sc = scenario(&cfg, &c.tol)?;
    let report = run_sweep(&sc)?;
    for r in &report.records {
        eprintln!("eps={:e} cells={} runtime_s={:.3}", r.eps, r.cells, r.runtime_s);
    }
    out.write("sweep.csv", &report.to_csv(false))?;
    out.write("orders.csv", &report.orders_csv())?;
    let mut dual = String::from("eps,cells,dual_distance\n");
    for r in &report.records {
        writeln!(dual, "{:e},{},{:e}", r.eps, r.cells, r.dual_distance).unwrap();
    }
    out.write("dual.csv", &dual)?;
    let manifest = Manifest {
        run: RunInfo {
            command: "sweep".into(),
            cli_version: env!("CARGO_PKG_VERSION").into(),
            core_version: ergo_homog::VERSION.into(),
            seed,
            config_sha256: config_hash(&canon),
            cells: report.records.iter().map(|r| r.cells).collect(),
            convexity_constant: report.convexity_constant,
        },
        tolerances: c.tol.pairs().into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
        scenario: &cfg,
    };
    let body = toml::to_string(&manifest).map_err(|e| Failure::Usage(e.to_string()))?;
    out.write("manifest.toml", &body)?;
    Ok(())
}

fn solve_one(c: &Common, eps: Option<f64>, cadence: usize) -> Result<(), Failure> {
    let (cfg, text) = scenario_source(c)?;
    let seed = cfg.seed.unwrap_or(0);
    let extra = [
        ("eps", eps.map_or("\"homogenized\"".to_string(), |e| format!("{e:e}"))),
        ("cadence", cadence.to_string()),
    ];
    let out = Output::create(&c.out, "solve", &canonical("solve", &text, &c.tol, &extra), seed)?;
    let sc = scenario(&cfg, &c.tol)?;
    let body = match eps {
        None => {
            let hf = homogenized_f(&sc.flux, &sc.homogenize_options())?;
            let traj = solve_homogenized(&sc, &hf)?;
            let law = DiscretePressure::new(&sc.flux, &traj.grid, Sampling::Homogenized(&hf))?;
            traj.to_csv(&law, cadence)
        }
        Some(eps) => {
            if !(eps > 0.0) {
                return Err(Failure::Usage("--eps must be positive".into()));
            }
            let grid = Grid1D::new(sc.omega.0, sc.omega.1, sc.cells_for(eps)?)?;
            let (_, common_dt) = sc.resolution()?;
            let dt = common_dt.min(sc.dt_factor * grid.dx());
            let law = DiscretePressure::new(&sc.flux, &grid, Sampling::Eps(eps))?;
            let init = sc.initial.to_general(&sc.flux).sample(&grid, eps)?;
            let traj = solve(&law, &init, sc.t_final, dt, &sc.sigma, &sc.step)?;
            traj.to_csv(&law.with_sigma(traj.sigma), cadence)
        }
    };
    out.write("solution.csv", &body)?;
    Ok(())
}

fn levelset(c: &Common, alpha: Vec<f64>) -> Result<(), Failure> {
    if c.config.is_some() {
        return Err(Failure::Usage("levelset takes an algebra function via --preset".into()));
    }
    let name = match c.preset.as_deref() {
        None | Some("stefan") => "stefan_psi0",
        Some(n) => n,
    };
    let f = algebra_presets::preset::<f64>(name)?;
    let alphas = if alpha.is_empty() {
        (-10..=10).map(|k| k as f64 / 10.0).collect()
    } else {
        alpha
    };
    let extra = [(
        "alpha",
        format!("[{}]", alphas.iter().map(|a| format!("{a:e}")).collect::<Vec<_>>().join(", ")),
    )];
    let seed = c.seed.unwrap_or(0);
    let out = Output::create(
        &c.out,
        "levelset",
        &canonical("levelset", &format!("preset = {name:?}\n"), &c.tol, &extra),
        seed,
    )?;
    let mut quad = QuadratureOptions::default();
    if let Some(v) = c.tol.tol_quad {
        quad.abs_tol = v;
    }
    let schedule = DEFAULT_DELTA_SCHEDULE.to_vec();
    let rows = alphas
        .par_iter()
        .map(|&a| -> Result<String, Failure> {
            let est = level_set_measure(&f, a, &schedule, &quad)?;
            let certified = match strongly_regular(&f, a, 256, &RegularityOptions::default()) {
                Ok(cert) => cert.certified,
                Err(Error::MissingGradient) => false,
                Err(e) => return Err(e.into()),
            };
            let mut s = String::new();
            for (d, m) in est.delta_schedule.iter().zip(&est.estimates) {
                writeln!(s, "{a:e},{d:e},{m:e},{:e},{certified}", est.extrapolated).unwrap();
            }
            Ok(s)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut body = String::from("alpha,delta,estimate,extrapolated,certified\n");
    for r in rows {
        body.push_str(&r);
    }
    out.write("levelset.csv", &body)?;
    Ok(())
}

fn validate(c: &Common, resolution: usize) -> Result<(), Failure> {
    let src = flux_source(c)?;
    let extra = [("resolution", resolution.to_string())];
    let out = Output::create(&c.out, "validate-flux", &canonical("validate-flux", &src.text, &c.tol, &extra), src.seed)?;
    let mut opts = ValidationOptions::default();
    if let Some(v) = c.tol.tol_boundary {
        opts.boundary_tol = v;
    }
    let mut body = String::from("check,value\n");
    match validate_flux(&src.flux, (-4.0, 4.0), resolution, &opts) {
        Ok(r) => {
            writeln!(body, "monotonicity_violations,{}", r.monotonicity_violations).unwrap();
            writeln!(body, "lipschitz,{:e}", r.lipschitz).unwrap();
            match r.min_h {
                Some(h) => writeln!(body, "min_h,{h:e}").unwrap(),
                None => body.push_str("min_h,\n"),
            }
            writeln!(body, "max_boundary_trace,{:e}", r.max_boundary_trace).unwrap();
            writeln!(body, "coercivity_low,{:e}", r.coercivity_witness.0).unwrap();
            writeln!(body, "coercivity_high,{:e}", r.coercivity_witness.1).unwrap();
            writeln!(body, "fbar_lipschitz_bound,{:e}", r.fbar_lipschitz_bound).unwrap();
            out.write("validation.csv", &body)?;
            Ok(())
        }
        Err(Error::ValidationFailure(msgs)) => {
            for m in &msgs {
                writeln!(body, "failure,\"{}\"", m.replace('"', "'")).unwrap();
            }
            out.write("validation.csv", &body)?;
            Err(Error::ValidationFailure(msgs).into())
        }
        Err(e) => Err(e.into()),
    }
}
