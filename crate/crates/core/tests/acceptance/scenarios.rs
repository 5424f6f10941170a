use std::fs;

use cavity_stirap::scenarios::{
    preset_catalog, run_scenario, run_sweep, RunOptions, ScenarioConfig, ScenarioResult, SweepAxis, SweepTable,
};

fn quick() -> RunOptions {
    RunOptions { samples: Some(21), ..Default::default() }
}

#[test]
fn catalog_carries_the_reference_parameters() {
    let cat = preset_catalog();
    let get = |preset: &str, param: &str| {
        let p = cat.iter().find(|p| p.name == preset).unwrap_or_else(|| panic!("missing {preset}"));
        p.params.iter().find(|x| x.name == param).unwrap().default
    };
    assert_eq!(get("star_w", "G"), 5.0);
    assert_eq!(get("star_w", "sigma"), 2.0);
    assert_eq!(get("star_w", "t_targets"), -1.0);
    assert_eq!(get("star_w", "t_source"), 1.0);
    assert_eq!(get("star_perturbed_one", "G"), 50.0);
    assert_eq!(get("star_perturbed_one", "g_perturb"), 5.0);
    assert_eq!(get("h_counterintuitive", "t3b"), -5.22);
    assert_eq!(get("h_counterintuitive", "t1b"), -1.72);
    for name in ["star_perturbed_two", "cat_two_measurements", "cat_displaced", "cat_sign_couplings"] {
        assert!(cat.iter().any(|p| p.name == name), "{name}");
    }
}

#[test]
fn every_preset_is_byte_reproducible() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for p in preset_catalog() {
        let config = ScenarioConfig::preset(p.name);
        for dir in [&a, &b] {
            let opts = RunOptions { samples: Some(11), seed: Some(3), ..RunOptions::writing(dir.path()) };
            let r = run_scenario(&config, &opts).unwrap();
            let bounded = |x: f64| (-1e-12..=1.0 + 1e-9).contains(&x);
            assert!(r.fidelity.is_none_or(bounded), "{}: fidelity {:?}", p.name, r.fidelity);
            assert!(r.final_populations.values().chain(r.max_populations.values()).all(|x| bounded(*x)), "{}", p.name);
            assert!(r.branches.iter().all(|b| bounded(b.probability) && b.fidelity.is_none_or(bounded)), "{}", p.name);
        }
        let read = |dir: &tempfile::TempDir| fs::read(dir.path().join(p.name).join("summary.json")).unwrap();
        assert_eq!(read(&a), read(&b), "{}", p.name);
    }
}

#[test]
fn results_round_trip_through_json() {
    let r = run_scenario(&ScenarioConfig::preset("cat_sign_couplings"), &quick()).unwrap();
    let back: ScenarioResult = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
    assert_eq!(back, r);
    let mut c = ScenarioConfig::preset("h_epr").with_param("G", 4.0);
    c.sweep = vec![SweepAxis::linspace("params.sigma", 2.0, 3.0, 2)];
    let t = run_sweep(&c, &quick()).unwrap();
    let back: SweepTable = serde_json::from_str(&serde_json::to_string(&t).unwrap()).unwrap();
    assert_eq!(back, t);
    let cfg: ScenarioConfig = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
    assert_eq!(cfg, c);
}

#[test]
fn sweeps_do_not_depend_on_worker_count() {
    let mut c = ScenarioConfig::preset("star_w");
    c.sweep = vec![SweepAxis::linspace("params.G", 2.0, 6.0, 5), SweepAxis::linspace("params.delta", -0.5, 0.5, 3)];
    let tables: Vec<SweepTable> = [1, 3, 8]
        .into_iter()
        .map(|workers| run_sweep(&c, &RunOptions { workers: Some(workers), ..quick() }).unwrap())
        .collect();
    assert_eq!(tables[0].rows.len(), 15);
    assert_eq!(tables[0].rows[1].values, vec![2.0, 0.0]);
    assert_eq!(tables[0], tables[1]);
    assert_eq!(tables[0], tables[2]);
}

#[test]
fn single_point_sweep_equals_a_run() {
    let mut c = ScenarioConfig::preset("h_counterintuitive");
    c.sweep = vec![SweepAxis { values: vec![0.3], ..SweepAxis::linspace("params.gamma", 0.0, 0.0, 1) }];
    let table = run_sweep(&c, &quick()).unwrap();
    let direct = run_scenario(&ScenarioConfig::preset("h_counterintuitive").with_param("gamma", 0.3), &quick()).unwrap();
    assert_eq!(table.rows.len(), 1);
    assert_eq!(table.rows[0].fidelity, direct.fidelity);
    assert_eq!(table.rows[0].final_populations, direct.final_populations);
}

#[test]
fn custom_system_from_json() {
    let text = r#"{
        "name": "two-cavity",
        "system": {
            "modes": [{"n_max": 1}, {"n_max": 1}],
            "atoms": ["two_level"],
            "couplings": [
                {"atom": 0, "mode": 0, "pulse": {"shape": "gaussian", "center": 1.5, "width": 2.0, "amplitude": 20.0}},
                {"atom": 0, "mode": 1, "pulse": {"shape": "gaussian", "center": -1.5, "width": 2.0, "amplitude": 20.0}}
            ],
            "detunings": [0.0]
        },
        "initial": {"label": "|1,0,->"},
        "target": {"kind": "basis", "label": "|0,1,->"},
        "watch": ["|0,1,->", "|1,0,->"],
        "window": {"samples": 51, "tolerance": 1e-10}
    }"#;
    let dir = tempfile::tempdir().unwrap();
    let r = run_scenario(&ScenarioConfig::from_json(text).unwrap(), &RunOptions::writing(dir.path())).unwrap();
    assert!(r.fidelity.unwrap() > 0.999, "{:?}", r.fidelity);
    assert!(r.final_population("|0,1,->").unwrap() > 0.998);
    let csv = fs::read_to_string(dir.path().join("two-cavity").join("trajectory.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "t,\"|1,0,->\",\"|0,1,->\",n1,n2,norm");
    assert_eq!(lines.count(), 51);
    assert_eq!(r.samples, 51);
    assert_eq!(r.tolerance, 1e-10);
}

#[test]
fn cat_stages_write_one_trajectory_each() {
    let dir = tempfile::tempdir().unwrap();
    let r = run_scenario(&ScenarioConfig::preset("cat_two_measurements"), &RunOptions { samples: Some(5), ..RunOptions::writing(dir.path()) }).unwrap();
    assert_eq!(r.stages.len(), 3);
    assert_eq!(r.files.len(), 3);
    for f in &r.files {
        assert!(dir.path().join("cat_two_measurements").join(f).exists(), "{f:?}");
    }
    let total: f64 = r.branches.iter().filter(|b| b.stage == 1).map(|b| b.probability).sum();
    assert!((total - 1.0).abs() < 1e-8);
}
