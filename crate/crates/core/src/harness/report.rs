use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::eval::SubjectReport;
use super::train::LogRecord;
use super::HarnessError;

/// `"74.6 ± 10.2"`: mean and std of fractions, shown in percent.
pub fn format_mean_std(mean: f64, std: f64) -> String {
    format!("{:.1} ± {:.1}", 100.0 * mean, 100.0 * std)
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Pretty-printed JSON.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), HarnessError> {
    let text = serde_json::to_string_pretty(value).expect("report serialises");
    std::fs::write(path, text + "\n").map_err(io(path))
}

pub const FLAT_HEADER: &str = "fold,subject,k_shot,repeat,accuracy,n_queries,c00,c01,c10,c11";

/// Flat table, one row per (fold, k, repeat), for plotting. Rows without
/// a fold use `-`.
pub fn write_crossval_csv<'a>(
    path: &Path,
    rows: impl IntoIterator<Item = (Option<usize>, &'a SubjectReport)>,
) -> Result<(), HarnessError> {
    let mut out = String::from(FLAT_HEADER);
    out.push('\n');
    for (fold, r) in rows {
        let fold = fold.map_or("-".to_string(), |f| f.to_string());
        for rep in &r.repeats {
            let c = &rep.confusion;
            out.push_str(&format!(
                "{fold},{},{},{},{},{},{},{},{},{}\n",
                r.subject,
                r.k_shot,
                rep.repeat,
                rep.accuracy,
                rep.predictions.len(),
                c[0][0],
                c[0][1],
                c[1][0],
                c[1][1]
            ));
        }
    }
    std::fs::write(path, out).map_err(io(path))
}

/// Appends training records as JSON lines, flushing each one.
pub struct LogWriter {
    path: PathBuf,
    file: BufWriter<File>,
}

impl LogWriter {
    pub fn create(path: &Path) -> Result<Self, HarnessError> {
        let file = File::create(path).map_err(io(path))?;
        Ok(Self {
            path: path.to_path_buf(),
            file: BufWriter::new(file),
        })
    }

    pub fn append(&mut self, record: &LogRecord) -> Result<(), HarnessError> {
        let line = serde_json::to_string(record).expect("record serialises");
        writeln!(self.file, "{line}")
            .and_then(|_| self.file.flush())
            .map_err(io(&self.path))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_std_format() {
        assert_eq!(format_mean_std(0.746, 0.102), "74.6 ± 10.2");
    }
}
