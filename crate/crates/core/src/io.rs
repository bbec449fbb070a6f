//! Trajectory persistence (CSV / JSON) and run manifests.

use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::integrate::{Diagnostics, Horizon, Trajectory};
use crate::model::MobilityState;
use crate::scenario::{json_error, simulate, ScenarioSpec};

pub const CSV_HEADER: &str = "t,congestion,adoption";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    /// Picks the format from a file extension (`.csv` / `.json`).
    pub fn from_path(path: &Path) -> Result<Self> {
        match path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase)
            .as_deref()
        {
            Some("csv") => Ok(Format::Csv),
            Some("json") => Ok(Format::Json),
            _ => Err(Error::Validation(format!(
                "cannot infer trajectory format from `{}` (use .csv or .json)",
                path.display()
            ))),
        }
    }
}

/// Reproducibility record for one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub scenario: ScenarioSpec,
    pub version: String,
    /// ISO-8601 UTC.
    pub timestamp: String,
    /// `sha256:` + hex digest of the trajectory's CSV rendering.
    pub content_hash: String,
}

impl RunManifest {
    pub fn new(scenario: &ScenarioSpec, trajectory: &Trajectory) -> Self {
        Self {
            scenario: scenario.clone(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: utc_timestamp(),
            content_hash: content_hash(trajectory),
        }
    }

    /// Manifest for a trajectory that did not come from a [`ScenarioSpec`].
    pub fn for_trajectory(trajectory: &Trajectory) -> Self {
        let spec = ScenarioSpec {
            name: trajectory.scenario_name.clone(),
            description: String::new(),
            params: trajectory.params,
            initial: trajectory.states[0],
            horizon: Horizon::new(trajectory.t0(), trajectory.t_end(), trajectory.len()),
            integrator: trajectory.integrator,
        };
        Self::new(&spec, trajectory)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(json_error)
    }

    /// Re-runs the recorded scenario and checks the output hash.
    pub fn reproduce(&self) -> Result<bool> {
        let sol = simulate(&self.scenario)?;
        Ok(content_hash(&sol.trajectory) == self.content_hash)
    }
}

pub fn utc_timestamp() -> String {
    chrono::Utc::now()
        .format("%Y-%m-%dT%H:%M:%SZ")
        .to_string()
}

pub fn content_hash(trajectory: &Trajectory) -> String {
    let digest = Sha256::digest(trajectory_csv(trajectory).as_bytes());
    format!("sha256:{}", hex::encode(digest))
}

/// CSV rendering: fixed header, LF endings, shortest round-trip decimals.
pub fn trajectory_csv(trajectory: &Trajectory) -> String {
    samples_csv(&trajectory.times, &trajectory.states)
}

fn samples_csv(times: &[f64], states: &[MobilityState]) -> String {
    let mut out = String::with_capacity(32 * (times.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for (t, s) in times.iter().zip(states) {
        // f64's Display is the shortest string that parses back to the same value,
        // never locale-dependent and never in exponent form.
        let _ = writeln!(out, "{t},{},{}", s.congestion, s.adoption);
    }
    out
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrajectoryDoc {
    manifest: RunManifest,
    times: Vec<f64>,
    congestion: Vec<f64>,
    adoption: Vec<f64>,
    diagnostics: Diagnostics,
}

pub fn trajectory_json(trajectory: &Trajectory, manifest: &RunManifest) -> String {
    let doc = TrajectoryDoc {
        manifest: manifest.clone(),
        times: trajectory.times.clone(),
        congestion: trajectory.states.iter().map(|s| s.congestion).collect(),
        adoption: trajectory.states.iter().map(|s| s.adoption).collect(),
        diagnostics: trajectory.diagnostics,
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("trajectory serializes");
    s.push('\n');
    s
}

/// Serializes `trajectory` to `out`, returning the number of bytes written.
///
/// JSON output embeds a manifest built from the trajectory itself; use
/// [`write_trajectory_with_manifest`] to supply the originating scenario.
pub fn write_trajectory<W: Write>(trajectory: &Trajectory, format: Format, out: W) -> Result<usize> {
    let manifest = match format {
        Format::Csv => None,
        Format::Json => Some(RunManifest::for_trajectory(trajectory)),
    };
    write_trajectory_with_manifest(trajectory, format, manifest.as_ref(), out)
}

pub fn write_trajectory_with_manifest<W: Write>(
    trajectory: &Trajectory,
    format: Format,
    manifest: Option<&RunManifest>,
    mut out: W,
) -> Result<usize> {
    trajectory.check_ordered()?;
    let text = match format {
        Format::Csv => trajectory_csv(trajectory),
        Format::Json => {
            let owned;
            let m = match manifest {
                Some(m) => m,
                None => {
                    owned = RunManifest::for_trajectory(trajectory);
                    &owned
                }
            };
            trajectory_json(trajectory, m)
        }
    };
    out.write_all(text.as_bytes())?;
    out.flush()?;
    Ok(text.len())
}

/// Writes `bytes` to `path` through a temporary file in the same directory and
/// a rename, so readers never observe a partial file.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<usize> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(bytes.len())
}

/// Time-ordered samples without run metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Samples {
    pub times: Vec<f64>,
    pub states: Vec<MobilityState>,
}

#[derive(Debug, Clone)]
pub struct LoadedTrajectory {
    pub samples: Samples,
    /// Present for JSON input, which carries the full run record.
    pub trajectory: Option<Trajectory>,
    pub manifest: Option<RunManifest>,
    pub warnings: Vec<String>,
}

fn check_increasing(times: &[f64]) -> Result<()> {
    if let Some(i) = times.windows(2).position(|w| !(w[1] > w[0])) {
        return Err(Error::Validation(format!(
            "times not strictly increasing (row {})",
            i + 2
        )));
    }
    Ok(())
}

pub fn read_trajectory<R: Read>(source: R, format: Format) -> Result<LoadedTrajectory> {
    match format {
        Format::Csv => read_csv(source),
        Format::Json => read_json(source),
    }
}

pub fn read_trajectory_file(path: &Path) -> Result<LoadedTrajectory> {
    let format = Format::from_path(path)?;
    let file = std::fs::File::open(path)?;
    read_trajectory(std::io::BufReader::new(file), format)
}

fn read_csv<R: Read>(source: R) -> Result<LoadedTrajectory> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(source);
    let headers = reader
        .headers()
        .map_err(|e| Error::Row {
            row: 0,
            message: e.to_string(),
        })?
        .clone();
    let find = |name: &str| headers.iter().position(|h| h == name);
    let (Some(ti), Some(ci), Some(ai)) = (find("t"), find("congestion"), find("adoption")) else {
        return Err(Error::Validation(format!(
            "CSV header must contain t, congestion, adoption (found `{}`)",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    };
    let mut warnings = Vec::new();
    let extra: Vec<&str> = headers
        .iter()
        .enumerate()
        .filter(|(i, _)| ![ti, ci, ai].contains(i))
        .map(|(_, h)| h)
        .collect();
    if !extra.is_empty() {
        let w = format!("ignoring extra CSV columns: {}", extra.join(", "));
        log::warn!("{w}");
        warnings.push(w);
    }

    let mut times = Vec::new();
    let mut states = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let row = idx + 1;
        let record = record.map_err(|e| Error::Row {
            row,
            message: e.to_string(),
        })?;
        let cell = |i: usize, name: &str| -> Result<f64> {
            let raw = record.get(i).unwrap_or("");
            let v: f64 = raw.parse().map_err(|_| Error::Row {
                row,
                message: format!("column `{name}`: `{raw}` is not a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::Row {
                    row,
                    message: format!("column `{name}`: `{raw}` is not finite"),
                });
            }
            Ok(v)
        };
        times.push(cell(ti, "t")?);
        states.push(MobilityState::new(
            cell(ci, "congestion")?,
            cell(ai, "adoption")?,
        ));
    }
    check_increasing(&times)?;
    Ok(LoadedTrajectory {
        samples: Samples { times, states },
        trajectory: None,
        manifest: None,
        warnings,
    })
}

fn read_json<R: Read>(source: R) -> Result<LoadedTrajectory> {
    let doc: TrajectoryDoc = serde_json::from_reader(source).map_err(json_error)?;
    let n = doc.times.len();
    if doc.congestion.len() != n || doc.adoption.len() != n {
        return Err(Error::Validation(format!(
            "array lengths differ: times {n}, congestion {}, adoption {}",
            doc.congestion.len(),
            doc.adoption.len()
        )));
    }
    check_increasing(&doc.times)?;
    let states: Vec<MobilityState> = doc
        .congestion
        .iter()
        .zip(&doc.adoption)
        .map(|(&c, &a)| MobilityState::new(c, a))
        .collect();
    let trajectory = Trajectory {
        times: doc.times.clone(),
        states: states.clone(),
        scenario_name: doc.manifest.scenario.name.clone(),
        params: doc.manifest.scenario.params,
        integrator: doc.manifest.scenario.integrator,
        diagnostics: doc.diagnostics,
    };
    Ok(LoadedTrajectory {
        samples: Samples {
            times: doc.times,
            states,
        },
        trajectory: Some(trajectory),
        manifest: Some(doc.manifest),
        warnings: Vec::new(),
    })
}
