//! Library-level runs of the experiment commands on edge configurations.

use metasep::experiments::{growth_rows, run_dynamics, run_separation, DynamicsConfig, GrowthConfig, SeparationConfig};
use metasep::risk::Workers;

#[test]
fn dynamics_without_tasks_keeps_initial_state() {
    let cfg = DynamicsConfig {
        t_tasks: 0,
        ..DynamicsConfig::default()
    };
    let tr = run_dynamics(&cfg).unwrap();
    assert_eq!(tr.states.len(), 1);
    assert!(tr.signs.is_empty());
}

#[test]
fn first_step_geometry() {
    let cfg = DynamicsConfig {
        t_tasks: 1,
        ..DynamicsConfig::default()
    };
    let tr = run_dynamics(&cfg).unwrap();
    let s = tr.signs[0].value();
    let a_bar = ((0.01 + 4.0001f64.sqrt()) / 2.0).sqrt();
    assert!((tr.states[1].a - (0.7 * 0.1 + 0.3 * a_bar)).abs() < 1e-15);
    assert!((tr.states[1].b - 0.3 * s / a_bar).abs() < 1e-15);
}

#[test]
fn single_growth_row() {
    let cfg = GrowthConfig {
        t_values: vec![500],
        seeds: 1,
        ..GrowthConfig::default()
    };
    let rows = growth_rows(&cfg, &Workers::new(1).unwrap()).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].satisfied, rows[0].a_t >= rows[0].bound);
}

fn tiny(d: usize, epsilon: f64) -> SeparationConfig {
    SeparationConfig {
        d,
        epsilon,
        trials: 40,
        convex_grid: vec![4, 8, 16],
        nonconvex_grid: vec![4, 8, 16],
        reptile_t: 500,
        ..SeparationConfig::default()
    }
}

#[test]
fn separation_one_dimension_is_well_formed() {
    let rep = run_separation(&tiny(1, 0.5), &Workers::new(2).unwrap()).unwrap();
    assert!(rep.convex_n_eps.is_some());
    assert!(rep.nonconvex_n_eps.is_some());
    assert_eq!(rep.convex_lower_bound_n, 1);
}

#[test]
fn separation_loose_target_takes_first_grid_point() {
    // unregularized least squares blows up near n = d, so start the convex grid well above it
    let cfg = SeparationConfig {
        convex_grid: vec![16, 32],
        ..tiny(5, 10.0)
    };
    let rep = run_separation(&cfg, &Workers::new(2).unwrap()).unwrap();
    assert_eq!(rep.convex_n_eps, Some(16));
    assert_eq!(rep.nonconvex_n_eps, Some(4));
    assert!(rep.convex.iter().all(|c| c.search.points.len() == 1));
}
