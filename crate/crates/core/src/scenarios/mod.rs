//! Named scenarios, JSON configs, sweeps and their file outputs.

mod config;
mod output;
mod presets;
mod protocol;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::distributions::WeightedIndex;
use rand::prelude::*;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use config::{AtomInit, InitialState, ModeInit, ScenarioConfig, SweepAxis, WindowConfig};
pub use presets::{preset_catalog, ParamInfo, PresetInfo};
pub use protocol::BranchRecord;

use crate::error::{Error, Result};
use crate::model::SystemSpec;
use crate::propagate::{
    adiabaticity_report, fidelity, integrate, IntegrationWindow, StepStats, Trajectory, DEFAULT_SAMPLES,
    DEFAULT_TOLERANCE,
};
use presets::{resolve, Evolution, Plan};
use protocol::{run_cat, StageGrid, StageRun};

/// Run-time settings that are not part of a scenario. Unset fields fall
/// back to the config, then to the defaults.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub out_dir: Option<PathBuf>,
    pub tolerance: Option<f64>,
    pub samples: Option<usize>,
    /// Seeds the draw of one measurement outcome; no draw without it.
    pub seed: Option<u64>,
    /// Sweep worker threads; all available cores when unset.
    pub workers: Option<usize>,
    pub write_files: bool,
}

impl RunOptions {
    /// Options that write into `out_dir`.
    pub fn writing(out_dir: impl Into<PathBuf>) -> Self {
        RunOptions { out_dir: Some(out_dir.into()), write_files: true, ..Default::default() }
    }
}

/// Diagnostics of one integrated stage.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageSummary {
    pub name: String,
    pub t_start: f64,
    pub t_end: f64,
    /// Number of propagated basis states.
    pub dimension: usize,
    pub stats: StepStats,
    pub final_norm: f64,
    /// Peak coupling times width, per Gaussian coupling.
    pub g_sigma: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_gap: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_h_ratio: Option<f64>,
    /// Couplings whose pulse is not negligible at a window edge.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub edge_warnings: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub scenario: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    /// Every preset parameter after overrides.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub parameters: BTreeMap<String, f64>,
    pub tolerance: f64,
    pub samples: usize,
    /// `|<target|final>|`; for measurement protocols the smallest value over
    /// the final non-null branches.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fidelity: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fidelity_squared: Option<f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub final_populations: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub max_populations: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub branches: Vec<BranchRecord>,
    pub stages: Vec<StageSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampled_outcome: Option<String>,
    /// Written files, relative to the run directory.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub files: Vec<PathBuf>,
}

impl ScenarioResult {
    pub fn final_population(&self, label: &str) -> Option<f64> {
        self.final_populations.get(label).copied()
    }

    pub fn max_population(&self, label: &str) -> Option<f64> {
        self.max_populations.get(label).copied()
    }
}

fn out_root(config: &ScenarioConfig, options: &RunOptions) -> PathBuf {
    options.out_dir.clone().or_else(|| config.output.clone()).unwrap_or_else(|| PathBuf::from("out"))
}

fn grid(config: &ScenarioConfig, options: &RunOptions) -> StageGrid {
    StageGrid {
        samples: options.samples.or(config.window.samples).unwrap_or(DEFAULT_SAMPLES),
        tolerance: options.tolerance.or(config.window.tolerance).unwrap_or(DEFAULT_TOLERANCE),
    }
}

/// Preset or custom plan, with config fields layered on top.
fn plan_for(config: &ScenarioConfig) -> Result<(BTreeMap<String, f64>, Plan)> {
    match (&config.preset, &config.system) {
        (Some(_), Some(_)) => Err(Error::Config("give either `preset` or `system`, not both".into())),
        (None, None) => Err(Error::Config("config needs a `preset` or a `system`".into())),
        (Some(name), None) => {
            let (params, mut plan) = resolve(name, &config.params)?;
            match &mut plan {
                Plan::Evolution(e) => {
                    if let Some(init) = &config.initial {
                        e.initial = init.clone();
                    }
                    if let Some(t) = &config.target {
                        e.target = Some(t.clone());
                    }
                    if !config.watch.is_empty() {
                        e.watch = config.watch.clone();
                    }
                }
                Plan::Cat(_) => {
                    if config.initial.is_some() || config.target.is_some() || !config.watch.is_empty() {
                        return Err(Error::Config(format!("preset `{name}` fixes its own states")));
                    }
                    if config.window.t_start.is_some() || config.window.t_end.is_some() {
                        return Err(Error::Config(format!("preset `{name}` derives every stage window")));
                    }
                }
            }
            Ok((params, plan))
        }
        (None, Some(system)) => {
            if !config.params.is_empty() {
                return Err(Error::Config("`params` only applies to presets".into()));
            }
            let initial = config.initial.clone().ok_or_else(|| Error::Config("custom system needs `initial`".into()))?;
            Ok((
                BTreeMap::new(),
                Plan::Evolution(Evolution {
                    system: system.clone(),
                    initial,
                    target: config.target.clone(),
                    watch: config.watch.clone(),
                }),
            ))
        }
    }
}

fn summarize(stage: &StageRun) -> Result<StageSummary> {
    let report = adiabaticity_report(&stage.spec, &stage.window)?;
    let traj = &stage.trajectory;
    Ok(StageSummary {
        name: stage.name.clone(),
        t_start: stage.window.t_start,
        t_end: stage.window.t_end,
        dimension: traj.indices().len(),
        stats: traj.stats(),
        final_norm: *traj.norms().last().expect("trajectory has samples"),
        g_sigma: report.pulses.iter().map(|p| (p.coupling.clone(), p.g_sigma)).collect(),
        min_gap: report.min_gap.map(|g| g.gap),
        max_h_ratio: report.max_h_ratio(),
        edge_warnings: stage.window.edge_violations(&stage.spec),
    })
}

fn window_for(spec: &SystemSpec<f64>, w: &WindowConfig, grid: StageGrid) -> Result<IntegrationWindow<f64>> {
    match (w.t_start, w.t_end) {
        (Some(a), Some(b)) => IntegrationWindow::new(a, b, grid.samples, grid.tolerance),
        (None, None) => IntegrationWindow::for_spec(spec, grid.samples, grid.tolerance),
        (a, b) => {
            let auto = IntegrationWindow::for_spec(spec, grid.samples, grid.tolerance)?;
            IntegrationWindow::new(a.unwrap_or(auto.t_start), b.unwrap_or(auto.t_end), grid.samples, grid.tolerance)
        }
    }
}

struct Evolved {
    stage: StageRun,
    watch: Vec<String>,
    fidelity: Option<f64>,
    final_populations: BTreeMap<String, f64>,
    max_populations: BTreeMap<String, f64>,
}

fn run_evolution(e: Evolution, window: &WindowConfig, grid: StageGrid) -> Result<Evolved> {
    let basis = Arc::new(e.system.basis());
    let psi0 = e.initial.build(basis.clone())?;
    let w = window_for(&e.system, window, grid)?;
    let traj: Trajectory<f64> = integrate(&e.system, &w, &psi0)?;
    let last = traj.final_state();
    let fid = match &e.target {
        Some(t) => Some(fidelity(&last, &t.build(basis.clone())?)?.amplitude),
        None => None,
    };
    let mut final_populations = BTreeMap::new();
    let mut max_populations = BTreeMap::new();
    let mut watch = Vec::with_capacity(e.watch.len());
    for label in &e.watch {
        let i = basis.parse_label(label)?;
        let name = basis.label_string(i);
        let series = traj.population_of(i);
        final_populations.insert(name.clone(), *series.last().expect("trajectory has samples"));
        max_populations.insert(name.clone(), series.iter().copied().fold(0.0, f64::max));
        watch.push(name);
    }
    Ok(Evolved {
        stage: StageRun { name: "evolution".into(), spec: e.system, window: w, trajectory: traj },
        watch,
        fidelity: fid,
        final_populations,
        max_populations,
    })
}

fn draw(branches: &[BranchRecord], seed: u64) -> Option<String> {
    let last = branches.iter().map(|b| b.stage).max()?;
    let finals: Vec<&BranchRecord> = branches.iter().filter(|b| b.stage == last).collect();
    let dist = WeightedIndex::new(finals.iter().map(|b| b.probability.max(0.0))).ok()?;
    let mut rng = StdRng::seed_from_u64(seed);
    Some(finals[dist.sample(&mut rng)].outcome.clone())
}

/// Runs one scenario and, if asked, writes `trajectory*.csv` and
/// `summary.json` under `<out>/<scenario>/`.
pub fn run_scenario(config: &ScenarioConfig, options: &RunOptions) -> Result<ScenarioResult> {
    let (parameters, plan) = plan_for(config)?;
    let grid = grid(config, options);
    let (stages, watch, fid, final_populations, max_populations, branches) = match plan {
        Plan::Evolution(e) => {
            let r = run_evolution(e, &config.window, grid)?;
            (vec![r.stage], r.watch, r.fidelity, r.final_populations, r.max_populations, Vec::new())
        }
        Plan::Cat(p) => {
            let run = run_cat(&p, grid)?;
            let last = run.branches.iter().map(|b| b.stage).max().unwrap_or(0);
            let fid = run
                .branches
                .iter()
                .filter(|b| b.stage == last)
                .filter_map(|b| b.fidelity)
                .min_by(f64::total_cmp);
            (run.stages, Vec::new(), fid, BTreeMap::new(), BTreeMap::new(), run.branches)
        }
    };

    let mut result = ScenarioResult {
        scenario: config.display_name(),
        preset: config.preset.clone(),
        parameters,
        tolerance: grid.tolerance,
        samples: grid.samples,
        fidelity: fid,
        fidelity_squared: fid.map(|f| f * f),
        final_populations,
        max_populations,
        sampled_outcome: options.seed.and_then(|s| draw(&branches, s)),
        branches,
        stages: stages.iter().map(summarize).collect::<Result<_>>()?,
        files: Vec::new(),
    };

    if options.write_files {
        let dir = out_root(config, options).join(&result.scenario);
        output::ensure_dir(&dir)?;
        for s in &stages {
            let name = if stages.len() == 1 { "trajectory.csv".to_string() } else { format!("trajectory_{}.csv", s.name) };
            output::write_trajectory(&dir.join(&name), &s.trajectory, &watch)?;
            result.files.push(PathBuf::from(name));
        }
        output::write_json(&dir.join("summary.json"), &result)?;
    }
    Ok(result)
}

/// One sweep point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fidelity: Option<f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub final_populations: BTreeMap<String, f64>,
}

/// Sweep results in axis order, the first axis varying slowest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub scenario: String,
    pub axes: Vec<String>,
    pub rows: Vec<SweepRow>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub files: Vec<PathBuf>,
}

impl SweepTable {
    pub fn fidelities(&self) -> Vec<Option<f64>> {
        self.rows.iter().map(|r| r.fidelity).collect()
    }

    fn csv(&self) -> (Vec<String>, Vec<Vec<f64>>) {
        let labels: Vec<String> = self.rows.first().map(|r| r.final_populations.keys().cloned().collect()).unwrap_or_default();
        let mut header = self.axes.clone();
        header.push("fidelity".into());
        header.extend(labels.iter().cloned());
        let rows = self
            .rows
            .iter()
            .map(|r| {
                let mut v = r.values.clone();
                v.push(r.fidelity.unwrap_or(f64::NAN));
                v.extend(labels.iter().map(|l| r.final_populations.get(l).copied().unwrap_or(f64::NAN)));
                v
            })
            .collect();
        (header, rows)
    }
}

fn sweep_points(axes: &[SweepAxis]) -> Result<Vec<Vec<f64>>> {
    let mut points = vec![Vec::new()];
    for axis in axes {
        let values = axis.points()?;
        points = points.into_iter().flat_map(|p| values.iter().map(move |v| [p.clone(), vec![*v]].concat())).collect();
    }
    Ok(points)
}

fn point_config(config: &ScenarioConfig, axes: &[SweepAxis], values: &[f64]) -> Result<ScenarioConfig> {
    let mut c = ScenarioConfig { sweep: Vec::new(), ..config.clone() };
    for (axis, v) in axes.iter().zip(values) {
        c = c.with_value(&axis.path, *v)?;
    }
    Ok(c)
}

/// Runs every point of the config's one or two sweep axes. Points are
/// evaluated in parallel and returned in axis order; with `write_files`
/// the table goes to `sweep.csv` and `sweep.json`.
pub fn run_sweep(config: &ScenarioConfig, options: &RunOptions) -> Result<SweepTable> {
    let axes = &config.sweep;
    if axes.is_empty() || axes.len() > 2 {
        return Err(Error::Config(format!("a sweep needs one or two axes, got {}", axes.len())));
    }
    let points = sweep_points(axes)?;
    // Check every path up front so a bad axis fails before any integration.
    let configs = points.iter().map(|p| point_config(config, axes, p)).collect::<Result<Vec<_>>>()?;
    for c in &configs {
        plan_for(c)?;
    }
    let point_options = RunOptions { write_files: false, seed: None, ..options.clone() };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.workers.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(format!("cannot start workers: {e}")))?;
    let results: Vec<ScenarioResult> =
        pool.install(|| configs.par_iter().map(|c| run_scenario(c, &point_options)).collect::<Result<_>>())?;

    let mut table = SweepTable {
        scenario: config.display_name(),
        axes: axes.iter().map(|a| a.path.clone()).collect(),
        rows: points
            .into_iter()
            .zip(results)
            .map(|(values, r)| SweepRow { values, fidelity: r.fidelity, final_populations: r.final_populations })
            .collect(),
        files: Vec::new(),
    };
    if options.write_files {
        let dir = out_root(config, options).join(&table.scenario);
        output::ensure_dir(&dir)?;
        let (header, rows) = table.csv();
        output::write_rows(&dir.join("sweep.csv"), &header, &rows)?;
        table.files = vec![PathBuf::from("sweep.csv")];
        output::write_json(&dir.join("sweep.json"), &table)?;
    }
    Ok(table)
}

/// Loads a config from a path, or treats `name` as a preset when no such
/// file exists.
pub fn load_config(name: &str) -> Result<ScenarioConfig> {
    let path = Path::new(name);
    if path.exists() {
        ScenarioConfig::load(path)
    } else if preset_catalog().iter().any(|p| p.name == name) {
        Ok(ScenarioConfig::preset(name))
    } else {
        Err(Error::UnknownPreset(name.to_string()))
    }
}
