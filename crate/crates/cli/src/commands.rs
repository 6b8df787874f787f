use std::fs;
use std::path::{Path, PathBuf};

use hourglass_core::evaluation::{
    latent_metrics, seg_metrics, write_cluster_csv, write_latent_csv, write_metrics_csv,
    write_trimap_csv, ConfusionMatrix, TrimapTally,
};
use hourglass_core::losses::BalanceWeights;
use hourglass_core::model::{load_checkpoint, save_checkpoint};
use hourglass_core::targets::io::{load_dataset, write_dataset, write_label_png, write_mask_png};
use hourglass_core::trainer::{latent_dump, predict, train as run_training, TrainConfig};
use hourglass_core::{
    build_targets, synth_shapes, ClassWeights, DistanceTransformConfig, Error, Result,
};

use crate::manifest::{clear_stale, temp_sibling, write_atomic, RunManifest};
use crate::plot::{read_series, render};

const RUN_FILE: &str = "run.json";

fn start(out_dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(out_dir)?;
    let run = out_dir.join(RUN_FILE);
    clear_stale(&run)?;
    Ok(run)
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

pub fn synth(seed: u64, count: usize, size: usize, classes: usize, out_dir: &Path) -> Result<()> {
    let samples = synth_shapes(seed, count, size, classes)?;
    let run = start(out_dir)?;
    let manifest = write_dataset(out_dir, &samples)?;
    let mut m = RunManifest::new("synth");
    m.seed = Some(seed);
    m.set("count", count);
    m.set("size", size);
    m.set("classes", classes);
    for i in 0..count {
        for kind in ["image", "labels", "instances"] {
            m.output(&out_dir.join(format!("{kind}_{i:04}.png")))?;
        }
    }
    m.output(&manifest)?;
    m.write(&run)
}

fn weights_rows(out: &mut Vec<u8>, target: &str, w: &ClassWeights) -> Result<()> {
    use std::io::Write;
    for c in 0..w.n_classes() {
        writeln!(out, "{target},{c},{}", w.weight(c))?;
    }
    Ok(())
}

pub fn targets(
    manifest: &Path,
    truncation: u32,
    bins: usize,
    classes: Option<usize>,
    out_dir: &Path,
) -> Result<()> {
    let cfg = DistanceTransformConfig::new(truncation, bins)?;
    let samples = load_dataset(manifest, classes)?;
    let run = start(out_dir)?;
    let mut m = RunManifest::new("targets");
    m.input(manifest);
    m.set("truncation", truncation);
    m.set("bins", bins);
    let mut bundles = Vec::with_capacity(samples.len());
    for (i, s) in samples.iter().enumerate() {
        let b = build_targets(&s.labels, &s.instances, cfg)?;
        let edge = out_dir.join(format!("edge_{i:04}.png"));
        let contour = out_dir.join(format!("contour_{i:04}.png"));
        let distq = out_dir.join(format!("distq_{i:04}.png"));
        write_mask_png(&edge, &b.edge)?;
        write_label_png(&contour, &b.contour)?;
        write_label_png(&distq, &b.distance.as_label_map())?;
        for p in [&edge, &contour, &distq] {
            m.output(p)?;
        }
        bundles.push(b);
    }
    let w = BalanceWeights::from_targets(&bundles)?;
    let bytes = csv_bytes(|out| {
        out.extend_from_slice(b"target,class,weight\n");
        weights_rows(out, "seg", &w.seg)?;
        weights_rows(out, "contour", &w.contour)?;
        weights_rows(out, "distance", &w.energy)
    })?;
    let weights = out_dir.join("class_weights.csv");
    write_atomic(&weights, &bytes)?;
    m.output(&weights)?;
    m.write(&run)
}

pub struct TrainArgs {
    pub config: PathBuf,
    pub manifest: PathBuf,
    pub out_dir: PathBuf,
    pub tasks: Option<String>,
    pub seed: Option<u64>,
    pub classes: Option<usize>,
}

pub fn train(args: &TrainArgs) -> Result<()> {
    let text = fs::read_to_string(&args.config)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", args.config.display())))?;
    let mut cfg = TrainConfig::parse_str(&text)?;
    if let Some(t) = &args.tasks {
        cfg.set("tasks", t)?;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    let dataset = load_dataset(&args.manifest, args.classes)?;
    let run = start(&args.out_dir)?;
    let checkpoint = cfg
        .checkpoint
        .clone()
        .unwrap_or_else(|| args.out_dir.join("model.ckpt"));
    let log = cfg
        .log
        .clone()
        .unwrap_or_else(|| args.out_dir.join("train_log.csv"));
    let latent = cfg
        .latent
        .clone()
        .unwrap_or_else(|| args.out_dir.join("latent.csv"));
    cfg.checkpoint = Some(checkpoint.clone());
    cfg.log = Some(log.clone());
    cfg.latent = Some(latent.clone());

    let outcome = run_training(&cfg, &dataset)?;
    save_checkpoint(&outcome.params, &checkpoint)?;
    write_atomic(&log, &csv_bytes(|b| outcome.log.write_csv(b))?)?;
    write_atomic(
        &latent,
        &csv_bytes(|b| write_latent_csv(b, &outcome.latent))?,
    )?;
    let snapshot = args.out_dir.join("config.txt");
    write_atomic(&snapshot, cfg.to_kv_string().as_bytes())?;

    let mut m = RunManifest::new("train");
    m.seed = Some(cfg.seed);
    for line in cfg.to_kv_string().lines() {
        if let Some((k, v)) = line.split_once(" = ") {
            m.set(k, v);
        }
    }
    m.input(&args.config);
    m.input(&args.manifest);
    for p in [&checkpoint, &log, &latent, &snapshot] {
        m.output(p)?;
    }
    m.write(&run)
}

pub fn eval(
    checkpoint: &Path,
    manifest: &Path,
    widths: &[u32],
    out_dir: &Path,
    perfect_stub: bool,
) -> Result<()> {
    let params = load_checkpoint(checkpoint)?;
    let data = load_dataset(manifest, Some(params.config.n_classes))?;
    if data.is_empty() {
        return Err(Error::Degenerate(format!(
            "{} lists no samples",
            manifest.display()
        )));
    }
    let run = start(out_dir)?;
    let preds = if perfect_stub {
        data.iter().map(|s| s.labels.clone()).collect()
    } else {
        predict(&params, &data)?
    };
    let mut cm = ConfusionMatrix::new(params.config.n_classes);
    let mut tally = TrimapTally::new(widths)?;
    for (p, s) in preds.iter().zip(&data) {
        cm.accumulate(p, &s.labels, None)?;
        tally.accumulate(p, &s.labels)?;
    }
    let seg = seg_metrics(&cm)?;
    let dump = latent_dump(&params, &data)?;
    let scores = latent_metrics(&dump)?;

    let mut m = RunManifest::new("eval");
    m.input(checkpoint);
    m.input(manifest);
    m.set(
        "widths",
        widths
            .iter()
            .map(u32::to_string)
            .collect::<Vec<_>>()
            .join(","),
    );
    m.set("perfect_stub", perfect_stub);
    let files: [(&str, Vec<u8>); 4] = [
        ("metrics.csv", csv_bytes(|b| write_metrics_csv(b, &seg))?),
        (
            "trimap.csv",
            csv_bytes(|b| write_trimap_csv(b, &tally.curve()))?,
        ),
        ("latent.csv", csv_bytes(|b| write_latent_csv(b, &dump))?),
        (
            "latent_metrics.csv",
            csv_bytes(|b| write_cluster_csv(b, &scores))?,
        ),
    ];
    for (name, bytes) in files {
        let p = out_dir.join(name);
        write_atomic(&p, &bytes)?;
        m.output(&p)?;
    }
    m.write(&run)
}

pub fn plot(inputs: &[PathBuf], out: &Path) -> Result<()> {
    let run = out.with_extension("run.json");
    clear_stale(&run)?;
    let mut kind = None;
    let mut series = Vec::with_capacity(inputs.len());
    for path in inputs {
        let (k, s) = read_series(path)?;
        if kind.is_some_and(|prev| prev != k) {
            return Err(Error::Format(
                "cannot mix trimap curves and training logs in one chart".into(),
            ));
        }
        kind = Some(k);
        series.push(s);
    }
    let kind = kind.ok_or_else(|| Error::Config("no input files".into()))?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let tmp = temp_sibling(out);
    render(kind, &series, &tmp)?;
    fs::rename(&tmp, out)?;
    let mut m = RunManifest::new("plot");
    for p in inputs {
        m.input(p);
    }
    m.output(out)?;
    m.write(&run)
}
