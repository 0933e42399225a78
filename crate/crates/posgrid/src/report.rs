//! Report artifacts: `report.json`, `cell_accuracy.csv`, `cell_majority.csv`,
//! `heatmap.pgm` and `region_majority.ppm`.

use std::path::Path;

use posgrid_core::score::{AccuracyEntry, EvalReport, MajorityEntry, Vote};

use crate::error::{PosgridError, Result};
use crate::fsutil;

/// Map colors for the region majority image, canonical label order.
pub const LABEL_COLORS: [[u8; 3]; 9] = [
    [230, 25, 75],
    [60, 180, 75],
    [255, 225, 25],
    [0, 130, 200],
    [245, 130, 48],
    [145, 30, 180],
    [70, 240, 240],
    [240, 50, 230],
    [210, 245, 60],
];
pub const INVALID_COLOR: [u8; 3] = [128, 128, 128];
pub const NO_DATA_COLOR: [u8; 3] = [0, 0, 0];

pub fn vote_color(v: Vote) -> [u8; 3] {
    match v {
        Vote::Label(l) => LABEL_COLORS[l.index()],
        Vote::Invalid => INVALID_COLOR,
        Vote::NoData => NO_DATA_COLOR,
    }
}

/// Gray level of a cell: `round(accuracy * 255)`, 0 without support.
pub fn gray(e: &AccuracyEntry) -> u8 {
    e.accuracy
        .map_or(0, |a| (a * 255.0).round().clamp(0.0, 255.0) as u8)
}

fn csv_bytes<T, F: Fn(&T) -> String>(rows: &[Vec<T>], cell: F) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(Vec::new());
    for row in rows {
        w.write_record(row.iter().map(&cell))
            .map_err(|e| PosgridError::Input(e.to_string()))?;
    }
    w.into_inner()
        .map_err(|e| PosgridError::Input(e.to_string()))
}

pub fn heatmap_pgm(report: &EvalReport) -> Vec<u8> {
    let mut out = b"P5\n9 9\n255\n".to_vec();
    out.extend(report.cell_accuracy.iter().flatten().map(gray));
    out
}

pub fn region_majority_ppm(report: &EvalReport) -> Vec<u8> {
    let mut out = b"P6\n3 3\n255\n".to_vec();
    for e in report.region_majority.iter().flatten() {
        out.extend_from_slice(&vote_color(e.winner));
    }
    out
}

pub fn emit_reports(report: &EvalReport, dir: &Path) -> Result<()> {
    fsutil::create_dir_all(dir)?;
    fsutil::write_json(&dir.join("report.json"), report)?;
    let acc = csv_bytes(&report.cell_accuracy, |e: &AccuracyEntry| {
        e.accuracy.map(|a| format!("{a:.6}")).unwrap_or_default()
    })?;
    fsutil::write_atomic(&dir.join("cell_accuracy.csv"), &acc)?;
    let maj = csv_bytes(&report.cell_majority, |e: &MajorityEntry| {
        e.winner.to_string()
    })?;
    fsutil::write_atomic(&dir.join("cell_majority.csv"), &maj)?;
    fsutil::write_atomic(&dir.join("heatmap.pgm"), &heatmap_pgm(report))?;
    fsutil::write_atomic(
        &dir.join("region_majority.ppm"),
        &region_majority_ppm(report),
    )
}
