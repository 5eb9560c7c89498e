use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use log::{info, warn};
use serde::{Deserialize, Serialize};

use super::config::{Featurizer, ModelChoice, TrainConfig, TrainMode};
use super::train::{train, ExperimentRecord, CHECKPOINT_FILE};
use crate::artifact::{ensure_writable, write_atomic};
use crate::models::TeacherScale;
use crate::signalgen::{Dataset, Split};
use crate::wavelet::WaveletFamily;
use crate::{Error, Result};

pub const GRID_CSV: &str = "grid.csv";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellMode {
    Teacher,
    Distill,
    Plain,
}

impl fmt::Display for CellMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CellMode::Teacher => "teacher",
            CellMode::Distill => "distill",
            CellMode::Plain => "plain",
        })
    }
}

/// Cartesian sweep over featurizers, training modes and seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSpec {
    pub bases: Vec<WaveletFamily>,
    pub levels: Vec<usize>,
    /// Adds an STFT featurizer next to the wavelet ones.
    pub include_stft: bool,
    pub modes: Vec<CellMode>,
    pub seeds: Vec<u64>,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            bases: vec![WaveletFamily::Daubechies(4)],
            levels: vec![5],
            include_stft: false,
            modes: vec![CellMode::Teacher, CellMode::Distill, CellMode::Plain],
            seeds: vec![0, 1, 2, 3, 4],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridCell {
    pub id: String,
    pub featurizer: Featurizer,
    pub mode: CellMode,
    pub seed: u64,
}

impl GridSpec {
    pub fn featurizers(&self) -> Vec<Featurizer> {
        let mut out: Vec<Featurizer> = self
            .bases
            .iter()
            .flat_map(|&basis| self.levels.iter().map(move |&level| Featurizer::Wpd { basis, level }))
            .collect();
        if self.include_stft {
            out.push(Featurizer::Stft);
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        if self.featurizers().is_empty() || self.modes.is_empty() || self.seeds.is_empty() {
            return Err(Error::Config("grid has no cells".into()));
        }
        if self.modes.contains(&CellMode::Distill) && !self.modes.contains(&CellMode::Teacher) {
            return Err(Error::Config("distill cells need teacher cells".into()));
        }
        Ok(())
    }

    /// Cells in execution order: per featurizer and seed, teacher first.
    pub fn cells(&self) -> Vec<GridCell> {
        let mut modes = self.modes.clone();
        modes.sort();
        modes.dedup();
        let mut out = Vec::new();
        for featurizer in self.featurizers() {
            for &seed in &self.seeds {
                for &mode in &modes {
                    out.push(GridCell {
                        id: format!("{featurizer}-{mode}-s{seed}"),
                        featurizer,
                        mode,
                        seed,
                    });
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct CellOutcome {
    pub cell: GridCell,
    pub result: std::result::Result<ExperimentRecord, String>,
}

/// Outcomes of every cell in [`GridSpec::cells`] order.
#[derive(Debug, Clone)]
pub struct GridReport {
    pub outcomes: Vec<CellOutcome>,
}

impl GridReport {
    pub fn record(&self, featurizer: Featurizer, mode: CellMode, seed: u64) -> Option<&ExperimentRecord> {
        self.outcomes
            .iter()
            .find(|o| o.cell.featurizer == featurizer && o.cell.mode == mode && o.cell.seed == seed)
            .and_then(|o| o.result.as_ref().ok())
    }

    /// Consolidated table; metrics are on the day-1 test split, with the
    /// later days' MDE appended.
    pub fn to_csv(&self) -> String {
        let mut s = String::from(
            "cell_id,basis,level,featurizer,mode,seed,mde,std,cdf_1m,cdf_3m,mde_day2,mde_day3,status\n",
        );
        for o in &self.outcomes {
            let (basis, level, kind) = match o.cell.featurizer {
                Featurizer::Wpd { basis, level } => (basis.to_string(), level.to_string(), "wpd"),
                Featurizer::Stft => (String::new(), String::new(), "stft"),
            };
            let _ = write!(s, "{},{basis},{level},{kind},{},{},", o.cell.id, o.cell.mode, o.cell.seed);
            match &o.result {
                Ok(r) => {
                    let mde = |split| r.evaluation(split).map(|e| e.metrics.mde.to_string()).unwrap_or_default();
                    match r.evaluation(Split::TestDay1) {
                        Some(e) => {
                            let m = &e.metrics;
                            let _ = write!(s, "{},{},{},{},", m.mde, m.std, m.cdf_at(1.0), m.cdf_at(3.0));
                        }
                        None => s.push_str(",,,,"),
                    }
                    let _ = writeln!(s, "{},{},ok", mde(Split::TestDay2), mde(Split::TestDay3));
                }
                Err(msg) => {
                    let _ = writeln!(s, ",,,,,,failed: {}", msg.replace([',', '\n'], ";"));
                }
            }
        }
        s
    }
}

/// The two architectures a grid trains.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridModels {
    pub teacher: TeacherScale,
    pub student_width: usize,
}

/// Runs every cell, writing each into `out/<cell id>/` and the consolidated
/// table to `out/grid.csv`. Work units (one featurizer and seed, all modes)
/// run on up to `jobs` threads; a failed cell is recorded and the rest go on.
pub fn run_experiment_grid(
    dataset: &Dataset,
    spec: &GridSpec,
    models: GridModels,
    base: &TrainConfig,
    out: &Path,
    jobs: usize,
    overwrite: bool,
) -> Result<GridReport> {
    spec.validate()?;
    ensure_writable(&out.join(GRID_CSV), overwrite)?;
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let cells = spec.cells();
    let per_unit = {
        let mut m = spec.modes.clone();
        m.sort();
        m.dedup();
        m.len()
    };
    let units: Vec<&[GridCell]> = cells.chunks(per_unit).collect();
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<CellOutcome>>> = Mutex::new(vec![None; cells.len()]);
    std::thread::scope(|scope| {
        for _ in 0..jobs.clamp(1, units.len()) {
            scope.spawn(|| loop {
                let u = next.fetch_add(1, Ordering::SeqCst);
                let Some(unit) = units.get(u) else { break };
                let mut teacher_ckpt: Option<PathBuf> = None;
                for (k, cell) in unit.iter().enumerate() {
                    let result = run_cell(dataset, models, base, cell, teacher_ckpt.as_deref(), out, overwrite);
                    match &result {
                        Ok(r) if cell.mode == CellMode::Teacher => teacher_ckpt = Some(r.checkpoint.clone()),
                        Ok(_) => {}
                        Err(e) => warn!("event=cell_failed cell={} error=\"{e}\"", cell.id),
                    }
                    results.lock().expect("grid results")[u * per_unit + k] = Some(CellOutcome {
                        cell: cell.clone(),
                        result: result.map_err(|e| e.to_string()),
                    });
                }
            });
        }
    });
    let outcomes = results
        .into_inner()
        .expect("grid results")
        .into_iter()
        .map(|o| o.expect("every cell ran"))
        .collect();
    let report = GridReport { outcomes };
    write_atomic(&out.join(GRID_CSV), report.to_csv().as_bytes())?;
    info!("event=grid_done cells={} out={}", cells.len(), out.display());
    Ok(report)
}

fn run_cell(
    dataset: &Dataset,
    models: GridModels,
    base: &TrainConfig,
    cell: &GridCell,
    teacher_ckpt: Option<&Path>,
    out: &Path,
    overwrite: bool,
) -> Result<ExperimentRecord> {
    let student = ModelChoice::Student {
        width: models.student_width,
    };
    let (model, mode) = match cell.mode {
        CellMode::Teacher => (
            ModelChoice::Teacher { scale: models.teacher },
            TrainMode::Plain,
        ),
        CellMode::Plain => (student, TrainMode::Plain),
        CellMode::Distill => {
            let checkpoint = teacher_ckpt
                .ok_or_else(|| Error::Incompatible(format!("no trained teacher for {}", cell.id)))?
                .to_path_buf();
            (
                student,
                TrainMode::Distill {
                    checkpoint,
                    teacher_scale: models.teacher,
                },
            )
        }
    };
    let config = TrainConfig {
        seed: cell.seed,
        featurizer: cell.featurizer,
        model,
        mode,
        ..base.clone()
    };
    let record = train(dataset, &config, &out.join(&cell.id), overwrite)?;
    debug_assert!(record.checkpoint.ends_with(CHECKPOINT_FILE));
    Ok(record)
}
