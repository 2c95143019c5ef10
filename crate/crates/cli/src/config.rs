//! JSON run configuration.
//!
//! ```json
//! {
//!   "lattice": { "tau": "1/10", "c": "1", "horizon": 20 },
//!   "table": { "kind": "uniform" },
//!   "simulation": { "replicas": 10000, "seed": 42, "trajectories": 5 },
//!   "converge": { "total_time": "1", "n_list": [10, 100, 1000], "replicas": 2000 },
//!   "output": { "dir": "out" }
//! }
//! ```
//!
//! Table sources (`"kind"`): `inline` (`rows`), `file` (`path` to a table
//! JSON), `uniform`, `constant_row` (`row`), `forced` (`row0` plus either an
//! inline `schedule` or a `schedule_path`). Generated tables have
//! `horizon + 1` rows unless `rows` is given. Relative paths resolve against
//! the config file's directory.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use cylwalk::dynamics::{evolve_forced, ScheduleRepr};
use cylwalk::rational::parse_rational;
use cylwalk::table::{parse_row, validate_row, Row};
use cylwalk::{ForceSchedule, LatticeConfig, Rational, StepProbabilityTable, TableFamily};
use serde::Deserialize;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub lattice: LatticeConfig,
    pub table: TableSource,
    #[serde(default)]
    pub simulation: SimulationBlock,
    #[serde(default)]
    pub converge: Option<ConvergeBlock>,
    #[serde(default)]
    pub output: OutputBlock,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TableSource {
    Inline { rows: Vec<Vec<String>> },
    File { path: PathBuf },
    Uniform { rows: Option<usize> },
    ConstantRow { row: Vec<String>, rows: Option<usize> },
    Forced {
        row0: Vec<String>,
        schedule: Option<ScheduleRepr>,
        schedule_path: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationBlock {
    pub steps: Option<usize>,
    #[serde(default = "default_replicas")]
    pub replicas: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_trajectories")]
    pub trajectories: usize,
}

fn default_replicas() -> usize {
    10_000
}

fn default_trajectories() -> usize {
    5
}

impl Default for SimulationBlock {
    fn default() -> Self {
        SimulationBlock {
            steps: None,
            replicas: default_replicas(),
            seed: 0,
            trajectories: default_trajectories(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergeBlock {
    pub total_time: Option<String>,
    #[serde(default)]
    pub n_list: Vec<usize>,
    #[serde(default = "default_converge_replicas")]
    pub replicas: usize,
}

fn default_converge_replicas() -> usize {
    1_000
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    pub dir: Option<PathBuf>,
}

/// A resolved table: the rows, plus the schedule when they came from one.
#[derive(Debug, Clone)]
pub struct ResolvedTable {
    pub table: StepProbabilityTable,
    pub schedule: Option<ForceSchedule>,
    pub family: Option<TableFamily>,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub lattice: LatticeConfig,
    pub table: TableSource,
    pub simulation: SimulationBlock,
    pub converge: Option<ConvergeBlock>,
    pub output_dir: Option<PathBuf>,
    base_dir: PathBuf,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_json(&text, &base)
    }

    pub fn from_json(text: &str, base_dir: &Path) -> Result<Self> {
        let raw: RawConfig = serde_json::from_str(text).context("parsing config")?;
        let output_dir = raw.output.dir.map(|d| base_dir.join(d));
        let cfg = RunConfig {
            lattice: raw.lattice,
            table: raw.table,
            simulation: raw.simulation,
            converge: raw.converge,
            output_dir,
            base_dir: base_dir.to_path_buf(),
        };
        cfg.check_paths()?;
        Ok(cfg)
    }

    fn check_paths(&self) -> Result<()> {
        let paths: Vec<&PathBuf> = match &self.table {
            TableSource::File { path } => vec![path],
            TableSource::Forced { schedule_path: Some(p), .. } => vec![p],
            _ => vec![],
        };
        for p in paths {
            let full = self.base_dir.join(p);
            if !full.is_file() {
                bail!("referenced file {} does not exist", full.display());
            }
        }
        Ok(())
    }

    fn generated_rows(&self, rows: Option<usize>) -> usize {
        rows.unwrap_or(self.lattice.horizon() + 1)
    }

    pub fn resolve_table(&self) -> Result<ResolvedTable> {
        Ok(match &self.table {
            TableSource::Inline { rows } => ResolvedTable {
                table: StepProbabilityTable::new(
                    rows.iter().map(|r| parse_row(r)).collect::<cylwalk::Result<Vec<_>>>()?,
                )?,
                schedule: None,
                family: None,
            },
            TableSource::File { path } => {
                let full = self.base_dir.join(path);
                let text = std::fs::read_to_string(&full)
                    .with_context(|| format!("reading table {}", full.display()))?;
                ResolvedTable {
                    table: StepProbabilityTable::from_json(&text)?,
                    schedule: None,
                    family: None,
                }
            }
            TableSource::Uniform { rows } => ResolvedTable {
                table: StepProbabilityTable::uniform(self.generated_rows(*rows))?,
                schedule: None,
                family: Some(TableFamily::Uniform),
            },
            TableSource::ConstantRow { row, rows } => {
                let row = checked_row(row)?;
                ResolvedTable {
                    table: StepProbabilityTable::constant(row.clone(), self.generated_rows(*rows))?,
                    schedule: None,
                    family: Some(TableFamily::ConstantRow(row)),
                }
            }
            TableSource::Forced { row0, schedule, schedule_path } => {
                let row0 = checked_row(row0)?;
                let schedule = self.load_schedule(schedule.as_ref(), schedule_path.as_ref())?;
                let start = StepProbabilityTable::new(vec![row0])?;
                ResolvedTable {
                    table: evolve_forced(&start, &schedule)?,
                    schedule: Some(schedule),
                    family: None,
                }
            }
        })
    }

    /// The schedule of a `forced` table source without evolving it.
    pub fn schedule(&self) -> Result<Option<(Row, ForceSchedule)>> {
        match &self.table {
            TableSource::Forced { row0, schedule, schedule_path } => Ok(Some((
                checked_row(row0)?,
                self.load_schedule(schedule.as_ref(), schedule_path.as_ref())?,
            ))),
            _ => Ok(None),
        }
    }

    fn load_schedule(
        &self,
        inline: Option<&ScheduleRepr>,
        path: Option<&PathBuf>,
    ) -> Result<ForceSchedule> {
        match (inline, path) {
            (Some(repr), None) => Ok(repr.clone().try_into()?),
            (None, Some(p)) => {
                let full = self.base_dir.join(p);
                let text = std::fs::read_to_string(&full)
                    .with_context(|| format!("reading schedule {}", full.display()))?;
                Ok(ForceSchedule::from_json(&text)?)
            }
            _ => bail!("forced table needs exactly one of `schedule` or `schedule_path`"),
        }
    }

    pub fn total_time(&self) -> Result<Rational> {
        match self.converge.as_ref().and_then(|c| c.total_time.as_deref()) {
            Some(t) => Ok(parse_rational(t)?),
            None => Ok(self.lattice.tau() * Rational::from_integer(self.lattice.horizon().into())),
        }
    }
}

fn checked_row(cells: &[String]) -> Result<Row> {
    let row = parse_row(cells)?;
    validate_row(&row)?;
    Ok(row)
}
