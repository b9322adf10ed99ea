//! Configuration properties of the command-line layer.

use mmwave_cs_cli::{config_from_result, ConfigOverrides, Experiment, OutputFormat, ResultFile, RunStatus};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};

fn overrides() -> impl Strategy<Value = ConfigOverrides> {
    let experiment = prop_oneof![Just(Experiment::Mse), Just(Experiment::Rate), Just(Experiment::Complexity)];
    let format = prop_oneof![Just(OutputFormat::Csv), Just(OutputFormat::Json)];
    (
        (experiment, format, 2usize..20, 2usize..20, 2usize..60, 2usize..60, 2usize..8),
        (0.0f64..10.0, 0.0f64..=1.0, any::<u64>(), prop::collection::btree_set(1usize..12, 1..4)),
        (prop::collection::btree_set(-20i32..20, 1..4), 1usize..30, prop::option::of(0.0f64..1.0)),
    )
        .prop_map(|((e, f, n_t, n_r, g_t, g_r, g_bar), (delta, rho, seed, m), (snr, blocks, reacq))| {
            ConfigOverrides {
                experiment: Some(e),
                format: Some(f),
                n_t: Some(n_t),
                n_r: Some(n_r),
                g_t: Some(g_t),
                g_r: Some(g_r),
                g_bar_t: Some(g_bar),
                delta_deg: Some(delta),
                rho: Some(rho),
                seed: Some(seed),
                m: Some(m.into_iter().collect()),
                snr_db: Some(snr.into_iter().map(|s| s as f64 * 0.5).collect()),
                blocks: Some(blocks),
                reacquire_threshold: reacq,
                ..Default::default()
            }
        })
}

/// The configuration echoed into a result file, in either format, parses back
/// to the identical run, and rendering is a pure function of its inputs.
pub fn echo_round_trips(cases: u32) -> Result<(), String> {
    let config = Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    };
    let mut runner = TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha));
    runner
        .run(&overrides(), |o| {
            let Ok(cfg) = o.resolve() else {
                // Some draws violate cross-field limits; those must be rejected before running.
                return Ok(());
            };
            let file = ResultFile {
                version: "test",
                status: RunStatus::Complete,
                config: &cfg,
                records: &[],
            };
            for text in [file.to_csv(), file.to_json()] {
                let back = config_from_result(&text).unwrap().resolve().unwrap();
                prop_assert_eq!(&back, &cfg);
            }
            prop_assert_eq!(file.to_csv(), file.to_csv());
            Ok(())
        })
        .map_err(|e| e.to_string())
}
