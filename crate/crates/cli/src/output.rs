//! CSV emission with 17-significant-digit floats plus a metadata sidecar
//! per file, so any artifact can be traced back to its exact run.

use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use fractsplit_core::{ConvergenceReport, EnsembleStats, Grid1D, RngStream, ScalarField};

use crate::config::RunConfig;

/// Provenance recorded next to every emitted file. Deliberately free of
/// timestamps so reruns are byte-identical.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub config_sha256: String,
    pub root_seed: u64,
    pub rng_algorithm: String,
    pub git_describe: String,
    pub app_version: String,
}

impl RunMetadata {
    pub fn for_config(config: &RunConfig) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(config.emit().as_bytes());
        Self {
            config_sha256: format!("{:x}", hasher.finalize()),
            root_seed: config.root_seed,
            rng_algorithm: RngStream::ALGORITHM.to_string(),
            git_describe: env!("FRACTSPLIT_GIT_DESCRIBE").to_string(),
            app_version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_with_sidecar(path: &Path, body: String, meta: &RunMetadata) -> io::Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, body)?;
    let mut sidecar = serde_json::to_string_pretty(meta).expect("metadata serializes");
    sidecar.push('\n');
    fs::write(sidecar_path(path), sidecar)
}

/// `<file>.meta.json` next to an emitted file.
pub fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".meta.json");
    path.with_file_name(name)
}

/// Columns `x,u`, one row per cell.
pub fn emit_field_csv(
    field: &ScalarField,
    grid: &Grid1D,
    path: &Path,
    meta: &RunMetadata,
) -> io::Result<()> {
    let mut body = String::from("x,u\n");
    for (j, v) in field.values().iter().enumerate() {
        body.push_str(&fmt(grid.cell_center(j)));
        body.push(',');
        body.push_str(&fmt(*v));
        body.push('\n');
    }
    write_with_sidecar(path, body, meta)
}

/// Columns `t,mean_linf,max_linf,mean_tv,stderr_tv`, one row per recorded
/// time.
pub fn emit_stats_csv(stats: &EnsembleStats, path: &Path, meta: &RunMetadata) -> io::Result<()> {
    let mut body = String::from("t,mean_linf,max_linf,mean_tv,stderr_tv\n");
    for i in 0..stats.times.len() {
        body.push_str(&format!(
            "{},{},{},{},{}\n",
            fmt(stats.times[i]),
            fmt(stats.mean_linf[i]),
            fmt(stats.max_linf[i]),
            fmt(stats.mean_tv[i]),
            fmt(stats.stderr_tv[i]),
        ));
    }
    write_with_sidecar(path, body, meta)
}

/// Columns `dx,dt,l1_error`, one row per refinement level.
pub fn emit_convergence_csv(
    report: &ConvergenceReport,
    path: &Path,
    meta: &RunMetadata,
) -> io::Result<()> {
    let mut body = String::from("dx,dt,l1_error\n");
    for level in &report.levels {
        body.push_str(&format!(
            "{},{},{}\n",
            fmt(level.dx),
            fmt(level.dt),
            fmt(level.l1_error)
        ));
    }
    write_with_sidecar(path, body, meta)
}

/// Small gnuplot script rendering the emitted curves.
pub fn emit_plot_script(dir: &Path, meta: &RunMetadata) -> io::Result<()> {
    let body = "\
set datafile separator ','
set key autotitle columnhead
set xlabel 'x'
set ylabel 'u'
plot 'final_mean.csv' using 1:2 with lines title 'ensemble mean', \\
     'final_path0.csv' using 1:2 with lines title 'path 0'
pause -1
";
    write_with_sidecar(&dir.join("plot.gp"), body.to_string(), meta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use fractsplit_core::Grid1D;

    fn meta() -> RunMetadata {
        RunMetadata::for_config(&RunConfig::preset("example1", 0.5))
    }

    #[test]
    fn constant_field_csv_has_header_and_rows() {
        let dir = tempfile::tempdir().unwrap();
        let grid = Grid1D::new(1.5, 1.0).unwrap();
        let field = ScalarField::constant(2.0, &grid).unwrap();
        let path = dir.path().join("field.csv");
        emit_field_csv(&field, &grid, &path, &meta()).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[0], "x,u");
        for line in &lines[1..] {
            assert!(line.ends_with(",2.0000000000000000e0"), "{line}");
        }
        assert!(sidecar_path(&path).exists());
    }

    #[test]
    fn emission_is_byte_stable() {
        let dir = tempfile::tempdir().unwrap();
        let grid = Grid1D::new(1.5, 1.0).unwrap();
        let field = ScalarField::new(vec![0.1, -0.25, 1.0 / 3.0], &grid).unwrap();
        let a = dir.path().join("a.csv");
        let b = dir.path().join("b.csv");
        emit_field_csv(&field, &grid, &a, &meta()).unwrap();
        emit_field_csv(&field, &grid, &b, &meta()).unwrap();
        assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
        assert_eq!(
            fs::read(sidecar_path(&a)).unwrap(),
            fs::read(sidecar_path(&b)).unwrap()
        );
    }

    #[test]
    fn formatted_floats_round_trip() {
        for v in [0.1, -1.0 / 3.0, 1e-20, 123456.789, f64::MIN_POSITIVE] {
            let parsed: f64 = fmt(v).parse().unwrap();
            assert_eq!(parsed.to_bits(), v.to_bits(), "{v}");
        }
    }

    #[test]
    fn metadata_hash_tracks_config_changes() {
        let a = RunMetadata::for_config(&RunConfig::preset("example1", 0.5));
        let b = RunMetadata::for_config(&RunConfig::preset("example1", 0.3));
        assert_ne!(a.config_sha256, b.config_sha256);
        let c = RunMetadata::for_config(&RunConfig::preset("example1", 0.5));
        assert_eq!(a, c);
    }
}
