//! Configuration, output writers and the run driver used by the CLI.

mod config;
mod writers;

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

pub use config::{parse_config, RunConfig, KEYS};
pub use writers::{
    timeseries_csv, vtk_snapshot, write_timeseries_csv, write_vtk_snapshot, CSV_HEADER,
};

use crate::error::Result;
use crate::evolution::{Simulation, TimeSeries};
use crate::fields::State;

/// JSON record of a run: configuration, versions and tolerances.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub program: String,
    pub version: String,
    pub config: RunConfig,
    pub n_steps: usize,
    pub n_nodes: usize,
    pub n_elements: usize,
}

impl Manifest {
    pub fn new(config: &RunConfig) -> Result<Manifest> {
        let n = config.n_sub;
        Ok(Manifest {
            program: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config: config.clone(),
            n_steps: config.n_steps()?,
            n_nodes: (n + 1) * (n + 1) + n * n,
            n_elements: 4 * n * n,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Manifest> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Files written by [`execute`].
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub series: TimeSeries,
    pub state: State,
    pub csv: PathBuf,
    pub snapshots: Vec<PathBuf>,
}

fn snapshot_path(dir: &Path, step: usize) -> PathBuf {
    dir.join(format!("snapshot_{step:05}.vtk"))
}

/// Runs `config`, writing `manifest.json`, `timeseries.csv` and VTK
/// snapshots into the output directory. A failing step still leaves the
/// series computed so far on disk.
pub fn execute(config: &RunConfig) -> Result<RunOutput> {
    let model = config.model()?;
    let dir = &config.out_dir;
    fs::create_dir_all(dir)?;
    fs::write(dir.join("manifest.json"), Manifest::new(config)?.to_json()?)?;
    let csv = dir.join("timeseries.csv");

    let mut sim = Simulation::new(model, config.solver)?;
    let mut snapshots = Vec::new();
    while !sim.finished() {
        let out = match sim.step() {
            Ok(out) => out,
            Err(e) => {
                write_timeseries_csv(&csv, sim.series())?;
                return Err(e);
            }
        };
        let k = out.record.step;
        let due = config.snapshot_every > 0 && k % config.snapshot_every == 0;
        if due || sim.finished() {
            let path = snapshot_path(dir, k);
            write_vtk_snapshot(&path, sim.model(), sim.state(), &out.amdp.field, k, out.record.t)?;
            snapshots.push(path);
        }
    }
    write_timeseries_csv(&csv, sim.series())?;
    let (series, state) = sim.into_parts();
    Ok(RunOutput {
        series,
        state,
        csv,
        snapshots,
    })
}
