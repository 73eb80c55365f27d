use std::fs;
use std::path::Path;

use proptest::prelude::*;
use proptest::strategy::Strategy as Strategy_;
use votesim::formats::{
    load_dataset, trajectory_csv_bytes, write_dataset, write_metrics_csv, METRICS_HEADER, TRAJECTORY_HEADER,
};
use votesim::Scenario;
use votesim_core::forecast::ForecastDataset;
use votesim_core::{run, SimConfig, Strategy};

fn data_dir() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data")
}

#[test]
fn csv_headers_are_stable() {
    assert_eq!(TRAJECTORY_HEADER, "tick,value,count");
    assert_eq!(METRICS_HEADER, "tick,winning_count,change_rate,friend_agreement,random_agreement");
}

#[test]
fn trajectory_csv_is_long_form_over_the_whole_domain() {
    let traj = run(SimConfig { max_ticks: 5, ..SimConfig::new(30, 3, 3).with_seed(2) }).unwrap();
    let text = String::from_utf8(trajectory_csv_bytes(&traj)).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), traj.snapshots.len() * 4);
    for tick in 0..traj.snapshots.len() {
        let total: usize =
            rows[tick * 4..tick * 4 + 4].iter().map(|r| r.rsplit(',').next().unwrap().parse::<usize>().unwrap()).sum();
        assert_eq!(total, 30);
    }
    let mut metrics = Vec::new();
    write_metrics_csv(&traj, &mut metrics).unwrap();
    assert_eq!(String::from_utf8(metrics).unwrap().lines().count(), traj.snapshots.len() + 1);
}

#[test]
fn bundled_fixture_matches_its_generator() {
    let loaded =
        load_dataset(&data_dir().join("synthetic_predictions.csv"), &data_dir().join("synthetic_actuals.csv")).unwrap();
    assert_eq!(loaded, ForecastDataset::synthetic(60, &[-2, -1, 0, 1, 2], 2016));
    let (mut p, mut a) = (Vec::new(), Vec::new());
    write_dataset(&loaded, &mut p, &mut a).unwrap();
    assert_eq!(p, fs::read(data_dir().join("synthetic_predictions.csv")).unwrap());
    assert_eq!(a, fs::read(data_dir().join("synthetic_actuals.csv")).unwrap());
}

#[test]
fn bundled_scenarios_parse_and_validate() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios");
    let mut count = 0;
    for entry in fs::read_dir(dir).unwrap() {
        let scenario = Scenario::load(&entry.unwrap().path()).unwrap();
        scenario.validate().unwrap();
        count += 1;
    }
    assert_eq!(count, 4);
}

fn arb_scenario() -> impl Strategy_<Value = Scenario> {
    (
        (2usize..400, 0u32..8, 1usize..30, 0usize..10, 0.0f64..=1.0),
        (0.01f64..=1.0, 0usize..3, 0.0f64..=1.0, any::<bool>(), 1usize..1000, any::<u64>()),
        (1usize..20, proptest::option::of(0usize..1000), "[a-z0-9 ]{0,12}"),
    )
        .prop_map(|((n, k, v, f, fp), (act, strat, mixed, incl, ticks, seed), (reps, burn_in, label))| {
            let f = f.min(n - 1);
            let sim = SimConfig {
                n,
                k,
                v,
                f,
                friend_prob: if f == 0 { 0.0 } else { fp },
                activation_prob: act,
                strategy: [Strategy::Dominant, Strategy::Consensus, Strategy::Mixed][strat],
                mixed_consensus_prob: mixed,
                include_self: incl,
                max_ticks: ticks,
                seed,
                symmetric_friends: false,
            };
            let burn_in = burn_in.map(|b| b % ticks);
            Scenario { burn_in, ..Scenario::new(label, sim, reps) }
        })
}

proptest! {
    #[test]
    fn scenario_json_round_trips(s in arb_scenario()) {
        let text = s.to_json();
        let back = Scenario::from_json(&text).unwrap();
        prop_assert_eq!(&back, &s);
        prop_assert_eq!(back.to_json(), text);
    }
}
