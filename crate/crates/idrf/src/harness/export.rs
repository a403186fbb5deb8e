//! Result export: CSV with a metadata header, raw little-endian binary
//! with a sidecar metadata file, and a gnuplot matrix format.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use super::config::{OutputConfig, OutputFormat};
use super::TargetGrid;
use crate::error::{Error, Result};
use crate::field::FieldRealization;

fn metadata_lines(r: &FieldRealization, grid: &TargetGrid) -> Vec<String> {
    let mut lines = vec![
        format!("method={}", r.meta.method),
        format!("detail={}", r.meta.detail),
        format!("measure={}", r.meta.measure.name()),
        format!("seed={}", r.meta.seed),
        format!("stream={}", r.meta.stream_id),
        format!("summands={}", r.meta.summands),
        format!("random_variables={}", r.meta.random_variables),
        format!("window={}", grid.halfwidth),
        format!("grid={}", grid.points),
        format!("dim={}", grid.dim),
    ];
    if let Some(eps) = r.meta.epsilon {
        lines.push(format!("epsilon={eps}"));
    }
    lines
}

fn check_len(r: &FieldRealization, grid: &TargetGrid) -> Result<()> {
    if r.values.len() != grid.len() {
        return Err(Error::usage(format!(
            "export: {} values do not fill a {}^{} grid",
            r.values.len(),
            grid.points,
            grid.dim
        )));
    }
    Ok(())
}

pub fn export_csv(r: &FieldRealization, grid: &TargetGrid, path: &Path) -> Result<()> {
    check_len(r, grid)?;
    let mut out = String::new();
    for line in metadata_lines(r, grid) {
        out.push_str(&format!("# {line}\n"));
    }
    for (flat, v) in r.values.iter().enumerate() {
        let point = grid.point(flat);
        for c in &point {
            out.push_str(&format!("{c},"));
        }
        out.push_str(&format!("{v}\n"));
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn export_bin(r: &FieldRealization, grid: &TargetGrid, path: &Path) -> Result<()> {
    check_len(r, grid)?;
    let mut bytes = Vec::with_capacity(r.values.len() * 8);
    for v in &r.values {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&bytes).map_err(|e| Error::io(path, e))?;
    let sidecar = sidecar_path(path);
    let meta = metadata_lines(r, grid).join("\n") + "\n";
    fs::write(&sidecar, meta).map_err(|e| Error::io(&sidecar, e))
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_os_string();
    s.push(".meta");
    PathBuf::from(s)
}

/// Read back a binary export; exact inverse of [`export_bin`].
pub fn import_bin(path: &Path) -> Result<Vec<f64>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() % 8 != 0 {
        return Err(Error::usage(format!(
            "import: {} is not a multiple of 8 bytes",
            path.display()
        )));
    }
    Ok(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
}

/// Matrix layout for `plot ... matrix`: one line per first-axis index,
/// second axis across the columns. Two-dimensional grids only.
pub fn export_gnuplot(r: &FieldRealization, grid: &TargetGrid, path: &Path) -> Result<()> {
    check_len(r, grid)?;
    if grid.dim != 2 {
        return Err(Error::usage("gnuplot export expects a two-dimensional grid"));
    }
    let mut out = String::new();
    for line in metadata_lines(r, grid) {
        out.push_str(&format!("# {line}\n"));
    }
    for row in r.values.chunks(grid.points) {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        out.push_str(&cells.join(" "));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Path for realization `i` of `total`: unchanged for a single realization,
/// otherwise an `_i` suffix before the extension.
fn indexed_path(base: &Path, i: usize, total: usize) -> PathBuf {
    if total <= 1 {
        return base.to_path_buf();
    }
    let stem = base.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    let name = match base.extension().and_then(|s| s.to_str()) {
        Some(ext) => format!("{stem}_{i:03}.{ext}"),
        None => format!("{stem}_{i:03}"),
    };
    base.with_file_name(name)
}

pub fn export_batch(
    batch: &[FieldRealization],
    grid: &TargetGrid,
    out: &OutputConfig,
) -> Result<Vec<PathBuf>> {
    let base = Path::new(&out.path);
    let mut written = Vec::with_capacity(batch.len());
    for (i, r) in batch.iter().enumerate() {
        let path = indexed_path(base, i, batch.len());
        match out.format {
            OutputFormat::Csv => export_csv(r, grid, &path)?,
            OutputFormat::Bin => export_bin(r, grid, &path)?,
            OutputFormat::Gnuplot => export_gnuplot(r, grid, &path)?,
        }
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::RealizationMeta;
    use crate::measures::MeasureSpec;

    fn sample_realization(values: Vec<f64>) -> FieldRealization {
        FieldRealization {
            values,
            meta: RealizationMeta {
                method: "step".into(),
                detail: "n=4".into(),
                epsilon: Some(0.5),
                measure: MeasureSpec::Gaussian,
                seed: 9,
                stream_id: 1,
                summands: 64,
                random_variables: 64,
                coefficient_ms: 0.0,
                synthesis_ms: 1.0,
            },
        }
    }

    fn tmp(name: &str) -> PathBuf {
        std::env::temp_dir().join(format!("idrf-export-{}-{name}", std::process::id()))
    }

    #[test]
    fn csv_rows_and_metadata() {
        let grid = TargetGrid::new(1.0, 3, 2).unwrap();
        let r = sample_realization((0..9).map(|i| i as f64).collect());
        let path = tmp("rows.csv");
        export_csv(&r, &grid, &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let data_rows = text.lines().filter(|l| !l.starts_with('#')).count();
        assert_eq!(data_rows, 9);
        assert!(text.contains("# seed=9"));
        assert!(text.contains("# method=step"));
        assert!(text.contains("# epsilon=0.5"));
        assert!(text.contains("# summands=64"));
        // first data row carries the lower-left target
        let first = text.lines().find(|l| !l.starts_with('#')).unwrap();
        assert_eq!(first, "-1,-1,0");
    }

    #[test]
    fn bin_roundtrip_bit_exact() {
        let grid = TargetGrid::new(1.0, 2, 2).unwrap();
        let values = vec![0.1, -2.5e-300, f64::MAX, 1.0 / 3.0];
        let r = sample_realization(values.clone());
        let path = tmp("roundtrip.bin");
        export_bin(&r, &grid, &path).unwrap();
        let back = import_bin(&path).unwrap();
        assert_eq!(
            back.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            values.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
        let sidecar = fs::read_to_string(sidecar_path(&path)).unwrap();
        assert!(sidecar.contains("seed=9"));
    }

    #[test]
    fn gnuplot_matrix_shape() {
        let grid = TargetGrid::new(1.0, 3, 2).unwrap();
        let r = sample_realization((0..9).map(|i| i as f64).collect());
        let path = tmp("matrix.gp");
        export_gnuplot(&r, &grid, &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[0].split(' ').count(), 3);
    }

    #[test]
    fn length_mismatch_rejected() {
        let grid = TargetGrid::new(1.0, 3, 2).unwrap();
        let r = sample_realization(vec![1.0; 5]);
        assert!(export_csv(&r, &grid, &tmp("bad.csv")).is_err());
    }

    #[test]
    fn batch_suffixes() {
        let grid = TargetGrid::new(1.0, 2, 2).unwrap();
        let batch = vec![
            sample_realization(vec![0.0; 4]),
            sample_realization(vec![1.0; 4]),
        ];
        let out = OutputConfig {
            path: tmp("batch.csv").to_string_lossy().into_owned(),
            format: OutputFormat::Csv,
        };
        let written = export_batch(&batch, &grid, &out).unwrap();
        assert_eq!(written.len(), 2);
        assert!(written[0].to_string_lossy().contains("_000"));
        assert!(written[1].to_string_lossy().contains("_001"));
    }
}
