//! CSV output of evaluation results.

use std::io::Write;

use super::cluster::ClusterScores;
use super::confusion::SegMetrics;
use super::trimap::TrimapPoint;
use crate::error::Result;
use crate::model::LatentDump;

fn cell(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// `class,iou,acc,prec,rec`: one row per class (blank for classes that do
/// not take part) and a final `mean` row.
pub fn write_metrics_csv<W: Write>(out: W, m: &SegMetrics) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["class", "iou", "acc", "prec", "rec"])
        .map_err(csv_err)?;
    for c in 0..m.iou.len() {
        w.write_record([
            c.to_string(),
            cell(m.iou[c]),
            cell(m.accuracy[c]),
            cell(m.precision[c]),
            cell(m.recall[c]),
        ])
        .map_err(csv_err)?;
    }
    w.write_record([
        "mean".to_string(),
        m.mean_iou.to_string(),
        m.mean_accuracy.to_string(),
        m.mean_precision.to_string(),
        m.mean_recall.to_string(),
    ])
    .map_err(csv_err)?;
    w.flush()?;
    Ok(())
}

/// `width,error_pct`; an empty band leaves `error_pct` blank.
pub fn write_trimap_csv<W: Write>(out: W, curve: &[TrimapPoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["width", "error_pct"]).map_err(csv_err)?;
    for p in curve {
        w.write_record([p.width.to_string(), cell(p.error_pct)])
            .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// `tag,v0,v1,...`, one row per latent point.
pub fn write_latent_csv<W: Write>(out: W, dump: &LatentDump) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let header: Vec<String> = std::iter::once("tag".to_string())
        .chain((0..dump.dim).map(|i| format!("v{i}")))
        .collect();
    w.write_record(&header).map_err(csv_err)?;
    for (p, t) in dump.points.iter().zip(&dump.tags) {
        let row: Vec<String> = std::iter::once(t.to_string())
            .chain(p.iter().map(|v| v.to_string()))
            .collect();
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// `metric,value` rows for SSI, CHI and DBI.
pub fn write_cluster_csv<W: Write>(out: W, s: &ClusterScores) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["metric", "value"]).map_err(csv_err)?;
    for (k, v) in [
        ("ssi", s.silhouette),
        ("chi", s.calinski_harabasz),
        ("dbi", s.davies_bouldin),
    ] {
        w.write_record([k.to_string(), v.to_string()])
            .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> crate::Error {
    crate::Error::Format(e.to_string())
}
