//! Artifact files. Every file is written to a temporary name first and
//! renamed into place.

use std::fmt::Write as _;
use std::path::Path;

use crate::config::RunConfig;
use crate::run::{Field, Outcome, RunError, Summary};

pub fn write_atomic(path: &Path, contents: &str) -> Result<(), RunError> {
    let io = |source| RunError::Io {
        path: path.display().to_string(),
        source,
    };
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    std::fs::write(&tmp, contents).map_err(io)?;
    std::fs::rename(&tmp, path).map_err(io)
}

pub fn convergence_csv(s: &Summary) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# task: {}", serde_json::to_string(&s.task).unwrap_or_default().trim_matches('"'));
    if let Some(p) = s.problem {
        let _ = writeln!(out, "# problem: {}", serde_json::to_string(&p).unwrap_or_default().trim_matches('"'));
    }
    let _ = writeln!(out, "# reference: {}", s.reference);
    if let Some(r) = s.geometric_rate {
        let _ = writeln!(out, "# geometric_rate: {r:e}");
    }
    out.push_str("N,dofs_total,dofs_radial,rel_error,wall_seconds\n");
    for r in &s.rows {
        let _ = writeln!(out, "{},{},{},{:e},{:.6}", r.n, r.dofs_total, r.dofs_radial, r.rel_error, r.wall_seconds);
    }
    out
}

pub fn field_csv(f: &Field) -> String {
    let mut out = String::from("# vertex-sampled interior solution\n");
    out.push_str(&f.columns.join(","));
    out.push('\n');
    for row in &f.rows {
        let line: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

/// Writes `summary.json`, `convergence.csv`, `field.csv` (when the task has
/// a field) and the resolved `config.json` into `dir`.
pub fn write_all(dir: &Path, cfg: &RunConfig, outcome: &Outcome) -> Result<(), RunError> {
    std::fs::create_dir_all(dir).map_err(|source| RunError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    write_atomic(&dir.join("config.json"), &pretty(cfg))?;
    write_atomic(&dir.join("summary.json"), &pretty(&outcome.summary))?;
    write_atomic(&dir.join("convergence.csv"), &convergence_csv(&outcome.summary))?;
    if let Some(f) = &outcome.field {
        write_atomic(&dir.join("field.csv"), &field_csv(f))?;
    }
    Ok(())
}

fn pretty<T: serde::Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).unwrap_or_default();
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Task;
    use crate::run::{Phases, Row};

    #[test]
    fn csv_layout() {
        let s = Summary {
            task: Task::Solve1d,
            problem: None,
            reference: "analytic".into(),
            rows: vec![Row {
                n: 3,
                dofs_total: 10,
                dofs_radial: 5,
                rel_error: 1.5e-7,
                wall_seconds: 0.25,
            }],
            geometric_rate: None,
            phases: Phases::default(),
            results: serde_json::Value::Null,
        };
        let text = convergence_csv(&s);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# task: solve1d");
        assert_eq!(lines[2], "N,dofs_total,dofs_radial,rel_error,wall_seconds");
        assert_eq!(lines[3], "3,10,5,1.5e-7,0.250000");
    }

    #[test]
    fn atomic_write_leaves_no_temp() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.txt");
        write_atomic(&p, "one").unwrap();
        write_atomic(&p, "two").unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "two");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
