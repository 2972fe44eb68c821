use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use super::trial::read_trial_samples;
use super::{DataError, Label, Trial, SAMPLE_RATE_HZ, TRIAL_SAMPLES};

/// Column header every manifest must carry.
pub const MANIFEST_HEADER: &str = "path,subject_id,session_id,trial_id,label,excluded";

/// One manifest row.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialRecord {
    /// Path as written in the manifest, relative to the manifest directory
    /// unless absolute.
    pub path: PathBuf,
    pub subject_id: String,
    pub session_id: String,
    pub trial_id: String,
    pub label: Label,
    pub excluded: bool,
    /// 1-based line in the manifest file.
    pub line: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetManifest {
    /// Directory relative paths resolve against.
    pub root: PathBuf,
    pub sample_rate_hz: f64,
    pub window_s: (f64, f64),
    pub records: Vec<TrialRecord>,
}

impl DatasetManifest {
    pub fn resolve(&self, record: &TrialRecord) -> PathBuf {
        if record.path.is_absolute() {
            record.path.clone()
        } else {
            self.root.join(&record.path)
        }
    }

    /// Renders the manifest text. Paths are written as stored.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str("# eeg-fewshot trial manifest\n");
        writeln!(out, "@sample_rate_hz={}", self.sample_rate_hz).unwrap();
        writeln!(out, "@window_s={},{}", self.window_s.0, self.window_s.1).unwrap();
        out.push_str(MANIFEST_HEADER);
        out.push('\n');
        for r in &self.records {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                r.path.display(),
                r.subject_id,
                r.session_id,
                r.trial_id,
                r.label.token(),
                r.excluded
            )
            .unwrap();
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<(), DataError> {
        std::fs::write(path, self.to_text()).map_err(|source| DataError::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

/// Parses manifest text. Every problem found is reported, not only the first.
pub fn parse_manifest(text: &str, path: &Path) -> Result<DatasetManifest, DataError> {
    let root = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let mut errors = Vec::new();
    let err = |line: usize, message: String| DataError::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut sample_rate_hz = SAMPLE_RATE_HZ;
    let mut window_s = (3.5, 7.0);
    let mut header_seen = false;
    let mut records = Vec::new();
    let mut seen_ids: HashMap<String, usize> = HashMap::new();

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(directive) = line.strip_prefix('@') {
            let Some((key, value)) = directive.split_once('=') else {
                errors.push(err(line_no, format!("malformed directive `{line}`")));
                continue;
            };
            match key.trim() {
                "sample_rate_hz" => match value.trim().parse::<f64>() {
                    Ok(v) if v.is_finite() && v > 0.0 => sample_rate_hz = v,
                    _ => errors.push(err(line_no, format!("invalid sample rate `{value}`"))),
                },
                "window_s" => {
                    let parts: Vec<_> = value.split(',').map(|p| p.trim().parse::<f64>()).collect();
                    match parts.as_slice() {
                        [Ok(a), Ok(b)] if a.is_finite() && b.is_finite() && b > a => window_s = (*a, *b),
                        _ => errors.push(err(line_no, format!("invalid window `{value}`"))),
                    }
                }
                other => errors.push(err(line_no, format!("unknown directive `{other}`"))),
            }
            continue;
        }
        if !header_seen {
            if line == MANIFEST_HEADER {
                header_seen = true;
            } else {
                errors.push(err(line_no, format!("expected header `{MANIFEST_HEADER}`")));
                header_seen = true;
            }
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 6 {
            errors.push(err(line_no, format!("expected 6 fields, found {}", fields.len())));
            continue;
        }
        let mut row_ok = true;
        for (name, value) in [("path", fields[0]), ("subject_id", fields[1]), ("session_id", fields[2]), ("trial_id", fields[3])] {
            if value.is_empty() {
                errors.push(err(line_no, format!("empty {name}")));
                row_ok = false;
            }
        }
        let label = Label::from_token(fields[4]);
        if label.is_none() {
            errors.push(err(line_no, format!("label must be L or R, found `{}`", fields[4])));
            row_ok = false;
        }
        let excluded = match fields[5] {
            "true" => Some(true),
            "false" => Some(false),
            other => {
                errors.push(err(line_no, format!("excluded must be true or false, found `{other}`")));
                None
            }
        };
        if let Some(first) = seen_ids.get(fields[3]) {
            errors.push(err(
                line_no,
                format!("duplicate trial id `{}` (first on line {first})", fields[3]),
            ));
            row_ok = false;
        } else if !fields[3].is_empty() {
            seen_ids.insert(fields[3].to_string(), line_no);
        }
        if let (true, Some(label), Some(excluded)) = (row_ok, label, excluded) {
            records.push(TrialRecord {
                path: PathBuf::from(fields[0]),
                subject_id: fields[1].to_string(),
                session_id: fields[2].to_string(),
                trial_id: fields[3].to_string(),
                label,
                excluded,
                line: line_no,
            });
        }
    }
    if !header_seen {
        errors.push(err(1, format!("missing header `{MANIFEST_HEADER}`")));
    }
    let samples = (window_s.1 - window_s.0) * sample_rate_hz;
    if (samples - TRIAL_SAMPLES as f64).abs() > 1e-6 {
        errors.push(err(
            0,
            format!(
                "window {}-{} s at {} Hz gives {samples} samples, expected {TRIAL_SAMPLES}",
                window_s.0, window_s.1, sample_rate_hz
            ),
        ));
    }
    DataError::collect(errors)?;
    Ok(DatasetManifest {
        root,
        sample_rate_hz,
        window_s,
        records,
    })
}

/// Reads and validates a manifest, including that every referenced file exists.
pub fn load_manifest(path: &Path) -> Result<DatasetManifest, DataError> {
    let text = std::fs::read_to_string(path).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let manifest = parse_manifest(&text, path)?;
    let missing: Vec<DataError> = manifest
        .records
        .iter()
        .map(|r| manifest.resolve(r))
        .filter(|p| !p.is_file())
        .map(|path| DataError::MissingFile { path })
        .collect();
    DataError::collect(missing)?;
    Ok(manifest)
}

/// Reads one referenced trial file.
pub fn load_trial(manifest: &DatasetManifest, record: &TrialRecord) -> Result<Trial, DataError> {
    let samples = read_trial_samples(&manifest.resolve(record))?;
    Trial::new(
        samples,
        record.label,
        record.subject_id.clone(),
        record.session_id.clone(),
        record.trial_id.clone(),
    )
}

/// A trial the manifest lists but ingestion did not use.
#[derive(Clone, Debug, PartialEq)]
pub struct RejectedTrial {
    pub trial_id: String,
    pub reason: String,
}

/// All loaded trials of a manifest, in manifest order.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub manifest: DatasetManifest,
    pub trials: Vec<Arc<Trial>>,
    pub rejected: Vec<RejectedTrial>,
}

impl Dataset {
    pub fn from_trials(trials: Vec<Trial>) -> Self {
        let records = trials
            .iter()
            .enumerate()
            .map(|(i, t)| TrialRecord {
                path: PathBuf::new(),
                subject_id: t.subject_id.clone(),
                session_id: t.session_id.clone(),
                trial_id: t.trial_id.clone(),
                label: t.label,
                excluded: false,
                line: i + 1,
            })
            .collect();
        Self {
            manifest: DatasetManifest {
                root: PathBuf::new(),
                sample_rate_hz: SAMPLE_RATE_HZ,
                window_s: (3.5, 7.0),
                records,
            },
            trials: trials.into_iter().map(Arc::new).collect(),
            rejected: Vec::new(),
        }
    }

    /// Subject ids in order of first appearance.
    pub fn subjects(&self) -> Vec<String> {
        let mut seen = HashSet::new();
        self.trials
            .iter()
            .filter(|t| seen.insert(t.subject_id.clone()))
            .map(|t| t.subject_id.clone())
            .collect()
    }

    /// Session ids of one subject in order of first appearance.
    pub fn sessions_of(&self, subject: &str) -> Vec<String> {
        let mut seen = HashSet::new();
        self.trials
            .iter()
            .filter(|t| t.subject_id == subject && seen.insert(t.session_id.clone()))
            .map(|t| t.session_id.clone())
            .collect()
    }

    pub fn trials_of(&self, subject: &str) -> Vec<Arc<Trial>> {
        self.trials
            .iter()
            .filter(|t| t.subject_id == subject)
            .cloned()
            .collect()
    }
}

/// Loads a manifest and every non-excluded trial it references. All
/// problems are gathered into one error.
pub fn load_dataset(path: &Path) -> Result<Dataset, DataError> {
    let manifest = load_manifest(path)?;
    let mut trials = Vec::new();
    let mut rejected = Vec::new();
    let mut errors = Vec::new();
    for record in &manifest.records {
        if record.excluded {
            rejected.push(RejectedTrial {
                trial_id: record.trial_id.clone(),
                reason: "excluded by manifest".into(),
            });
            continue;
        }
        match load_trial(&manifest, record) {
            Ok(t) => trials.push(Arc::new(t)),
            Err(e) => errors.push(e),
        }
    }
    DataError::collect(errors)?;
    Ok(Dataset {
        manifest,
        trials,
        rejected,
    })
}
