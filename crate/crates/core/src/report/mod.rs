//! File output: atomic writes, report documents and SVG figures.

mod svg;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

pub use svg::{colormap, fmt_num, latent_plane, relevance_bars, scatter_grid, PANEL_POINTS};

use crate::experiment::ExperimentReport;
use crate::{Error, Result};

/// Writes `bytes` to a sibling temp file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| Error::Config(format!("`{}` is not a file path", path.display())))?;
    let tmp = dir.join(format!(
        ".{}.tmp{}",
        name.to_string_lossy(),
        std::process::id()
    ));
    let result = fs::File::create(&tmp)
        .and_then(|mut f| {
            f.write_all(bytes)?;
            f.sync_all()
        })
        .and_then(|_| fs::rename(&tmp, path));
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(Error::io(path, e));
    }
    Ok(())
}

/// The figures for a report as `(file name, svg)` pairs.
///
/// Always a relevance bar chart and a latent-by-feature scatter grid; for
/// two-feature datasets also the `(x1, x2)` plane colored by the most
/// relevant latent of the plotted run.
pub fn figures(report: &ExperimentReport) -> Result<Vec<(&'static str, String)>> {
    let title = match &report.config {
        Some(cfg) => format!(
            "{}: mean relevance over {} runs",
            cfg.name, report.aggregate.runs
        ),
        None => format!("{}: relevance", report.dataset.generator),
    };
    let mut out = vec![(
        "relevance.svg",
        relevance_bars(&report.aggregate.sorted(), &title)?,
    )];

    let run = report
        .runs
        .iter()
        .find(|r| r.seed == report.sample.seed)
        .ok_or_else(|| Error::Data(format!("no run with plotted seed {}", report.sample.seed)))?;
    let latents: Vec<(usize, String)> = run
        .relevance
        .order
        .iter()
        .map(|&j| (j, format!("z{}", j + 1)))
        .collect();
    let s = &report.sample;
    out.push((
        "scatter_grid.svg",
        scatter_grid(&s.features, &report.dataset.names, &s.z_mean, &latents)?,
    ));

    if report.dataset.names.len() == 2 {
        let top = *run
            .relevance
            .order
            .first()
            .ok_or_else(|| Error::Data("report has no latents".into()))?;
        let points: Vec<[f64; 2]> = (0..s.features.rows())
            .map(|i| [s.features.get(i, 0), s.features.get(i, 1)])
            .collect();
        let z = s.z_mean.column(top);
        let label = format!("⟨z{}⟩", top + 1);
        let names = &report.dataset.names;
        out.push((
            "latent_plane.svg",
            latent_plane(&points, &z, [&names[0], &names[1], &label])?,
        ));
    }
    Ok(out)
}

/// Renders [`figures`] into `dir`.
pub fn render_figures(report: &ExperimentReport, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    figures(report)?
        .into_iter()
        .map(|(name, svg)| {
            let path = dir.join(name);
            write_atomic(&path, svg.as_bytes())?;
            Ok(path)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_write_replaces_and_leaves_no_temp() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.txt");
        write_atomic(&path, b"one").unwrap();
        write_atomic(&path, b"two").unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "two");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn atomic_write_to_missing_dir_fails() {
        let dir = tempfile::tempdir().unwrap();
        let err = write_atomic(&dir.path().join("nope/a.txt"), b"x").unwrap_err();
        assert_eq!(err.code(), "io");
    }
}
