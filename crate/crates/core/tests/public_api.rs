//! The crate-root f64 aliases, driven the way a downstream user would.

use ergo_homog::harness::{run_sweep, ScenarioConfig};
use ergo_homog::homogenized::{homogenized_f, HomogenizeOptions};
use ergo_homog::solver::{evolve, Role, Sampling, StepOptions};
use ergo_homog::{DiscretePressure, Field, Flux, Grid1D, HomogenizedFlux, Scenario, SweepReport};

#[test]
fn stefan_gbar_and_fbar_are_inverse() {
    let flux: Flux = ergo_homog::flux::presets::stefan();
    let hf: HomogenizedFlux = homogenized_f(&flux, &HomogenizeOptions::default()).unwrap();
    for k in -30..=30 {
        let u = k as f64 / 10.0;
        let v = hf.eval(0.0, u);
        assert!((hf.inverse(0.0, v) - u).abs() < 1e-9, "{u}");
    }
    // ḡ(v) = 3v/2 on [-1, 1].
    assert!((hf.inverse(0.0, 0.5) - 0.75).abs() < 1e-9);
}

#[test]
fn toml_scenario_runs() {
    let text = r#"
T = 0.05
epsilons = [0.5, 0.25]
dt_factor = 0.5

[flux]
preset = "heat"

[omega]
a = 0.0
b = 1.0

[initial]
kind = "sine"

[tests]
count = 2
width = 0.3
"#;
    let cfg = ScenarioConfig::from_toml(text).unwrap();
    let scenario: Scenario = Scenario::from_config(&cfg).unwrap();
    let report: SweepReport = run_sweep(&scenario).unwrap();
    assert_eq!(report.records.len(), 2);
    assert_eq!(report.records[1].cells, 2 * report.records[0].cells);
    for r in &report.records {
        for row in &r.rows {
            assert!(row.weak_star.is_finite() && row.corrector_l1.is_finite());
        }
    }
}

#[test]
fn homogenized_heat_law_evolves_like_heat() {
    let flux: Flux = ergo_homog::flux::presets::heat();
    let hf = homogenized_f(&flux, &HomogenizeOptions::default()).unwrap();
    let grid = Grid1D::new(0.0, 1.0, 100).unwrap();
    let law = DiscretePressure::new(&flux, &grid, Sampling::Homogenized(&hf)).unwrap();
    let u0 = Field::from_fn(grid, Role::Density, |x| (std::f64::consts::PI * x).sin()).unwrap();
    let traj = evolve(&law, &u0, 0.05, 1e-3, &StepOptions::default()).unwrap();
    let peak = traj.final_field().values.iter().cloned().fold(0.0, f64::max);
    let expect = (-std::f64::consts::PI.powi(2) * 0.05).exp();
    assert!((peak - expect).abs() < 5e-3, "{peak} {expect}");
}
