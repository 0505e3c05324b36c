use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use spnplan_core::sim::{
    generate_dataset, oracle_grid, sample_environment, Dataset, DesignSampler, EnvParams, SimConfig,
};
use spnplan_testkit::checks::simulator_ledger_suite;

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("spnplan-core-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn ledger_bounds_labels_and_monotonicity() {
    match simulator_ledger_suite(41) {
        Ok(line) => println!("{line}"),
        Err(e) => panic!("{e}"),
    }
}

#[test]
fn midday_irradiance_matches_the_beta_mean() {
    let env = EnvParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let n = 100_000;
    let total: f64 = (0..n)
        .map(|_| sample_environment(&mut rng, &env).irradiance[12])
        .sum();
    let want =
        env.clear_sky(12.0) * env.clearness_alpha / (env.clearness_alpha + env.clearness_beta);
    let mean = total / n as f64;
    assert!((mean - want).abs() < 0.02, "{mean} vs {want}");
}

#[test]
fn single_row_round_trips_bit_exactly() {
    let data = generate_dataset(1, 5, &SimConfig::default()).unwrap();
    let path = scratch("one").join("one.csv");
    data.write_csv(&path).unwrap();
    let back = Dataset::read_csv(&path).unwrap();
    assert_eq!(back.rows.len(), 1);
    for (a, b) in data.rows[0].features.iter().zip(&back.rows[0].features) {
        assert_eq!(a.to_bits(), b.to_bits());
    }
    assert_eq!(back.rows, data.rows);
    assert_eq!(back.csv_string(), data.csv_string());
    std::fs::remove_dir_all(path.parent().unwrap()).unwrap();
}

#[test]
fn ten_rows_match_golden_file() {
    let text = generate_dataset(10, 2024, &SimConfig::default())
        .unwrap()
        .csv_string();
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/dataset_n10.csv");
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&golden, &text).unwrap();
    }
    assert_eq!(text, std::fs::read_to_string(&golden).unwrap());
}

#[test]
fn paper_sized_dataset_has_a_feasible_top_design() {
    let config = SimConfig::default();
    let data = generate_dataset(45_000, 7, &config).unwrap();
    assert_eq!(data.len(), 45_000);
    let g = &config.grid;
    let top = data
        .empirical_shortfall(g.max_pv_units, g.max_battery_units)
        .unwrap();
    assert!(top.support > 100);
    assert!(top.ratio < 0.05, "top design ratio {}", top.ratio);
}

#[test]
fn concentrated_sampler_puts_every_row_on_one_design() {
    let config = SimConfig {
        sampler: DesignSampler::Fixed {
            pv_units: 3,
            battery_units: 4,
        },
        ..SimConfig::default()
    };
    let data = generate_dataset(500, 9, &config).unwrap();
    assert!(data
        .rows
        .iter()
        .all(|r| (r.pv_units, r.battery_units) == (3, 4)));
    let e = data.empirical_shortfall(3, 4).unwrap();
    assert_eq!(e.support, 500);
    assert_eq!(e.ratio, data.prevalence());
}

#[test]
fn oracle_interval_and_shared_scenario_monotonicity() {
    let config = SimConfig::default();
    let g = &config.grid;
    let grid = oracle_grid(10_000, 3, &config);
    // The cell closest to the 5% boundary has a tight enough interval.
    let boundary = grid
        .iter()
        .min_by(|a, b| {
            (a.estimate - 0.05)
                .abs()
                .total_cmp(&(b.estimate - 0.05).abs())
        })
        .unwrap();
    assert!(boundary.half_width <= 0.01, "{boundary:?}");
    // With common scenarios, adding a unit can only remove shortfalls.
    for pv in 0..g.pv_levels() {
        for bat in 0..g.battery_levels() {
            let here = grid[g.index(pv, bat)].estimate;
            if g.contains(pv, bat + 1) {
                assert!(
                    grid[g.index(pv, bat + 1)].estimate <= here,
                    "battery step at ({pv}, {bat})"
                );
            }
            if g.contains(pv + 1, bat) {
                assert!(
                    grid[g.index(pv + 1, bat)].estimate <= here,
                    "pv step at ({pv}, {bat})"
                );
            }
        }
    }
    assert_eq!(grid[g.index(0, 0)].estimate, 1.0);
}
