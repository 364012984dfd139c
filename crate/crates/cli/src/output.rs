use std::fs;
use std::path::{Path, PathBuf};

use wlab_core::scenario::ScenarioConfig;

use crate::Failure;

pub fn read_config(path: &Path) -> Result<ScenarioConfig, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))?;
    ScenarioConfig::from_json(&text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

pub fn out_dir(flag: Option<&PathBuf>, config: Option<&ScenarioConfig>, fallback: &str) -> PathBuf {
    flag.cloned()
        .or_else(|| config.and_then(|c| c.output.as_ref()).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(fallback))
}

pub fn ensure_dir(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::numeric(format!("cannot create {}: {e}", dir.display())))
}

pub fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::numeric(format!("cannot write {}: {e}", path.display())))
}

/// A CSV writer over `path`, with errors mapped to exit code 3.
pub fn csv_file(path: &Path) -> Result<csv::Writer<fs::File>, Failure> {
    csv::Writer::from_path(path).map_err(|e| Failure::numeric(format!("cannot write {}: {e}", path.display())))
}

pub fn csv_err(e: csv::Error) -> Failure {
    Failure::numeric(format!("csv write failed: {e}"))
}

/// Full precision, `NaN` for missing values.
pub fn num(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else {
        format!("{v:e}")
    }
}

/// gnuplot script plotting `columns` of `csv` against its first column.
pub fn gnuplot_script(csv: &str, title: &str, columns: &[&str]) -> String {
    let mut s = format!("set datafile separator ','\nset key autotitle columnhead\nset title '{title}'\nset xlabel 't'\n");
    let plots: Vec<String> = columns.iter().map(|c| format!("'{csv}' using 1:'{c}' with lines")).collect();
    s.push_str(&format!("plot {}\n", plots.join(", \\\n     ")));
    s
}
