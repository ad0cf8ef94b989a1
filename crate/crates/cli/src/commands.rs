use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use cropcurate::curation::{compute_distances, curate_batch, CurationReport, CuratorConfig, DistanceSummary, Embedder};
use cropcurate::data::{
    append_summary_row, load_config, save_config, CurationStepRecord, DatasetSpec, MetricRecord, MetricsWriter,
    RunConfig, SummaryRow,
};
use cropcurate::eval::{knn_accuracy, linear_probe};
use cropcurate::experiment::{rng_stream, run_training, ViewSampler, STREAM_CURATION, STREAM_SHUFFLE, STREAM_VIEWS};
use cropcurate::model::{load_checkpoint, save_checkpoint};
use cropcurate::{
    config_statistics_sharded, sample_crop, CropParams, EncoderModel, Error, EvalConfig, HeatmapAccumulator,
    LabeledImageSet, SamplingRegime,
};
use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::{resolve_out_dir, CliError, CliResult, CurateDemoArgs, EvalArgs, HeatmapArgs, StatsArgs, TrainArgs};

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn env_out_dir() -> Option<PathBuf> {
    std::env::var_os(crate::OUT_DIR_ENV).filter(|v| !v.is_empty()).map(PathBuf::from)
}

fn create_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e).into())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(Error::from)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e).into())
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

/// Wall-clock metadata, kept out of every other artifact.
#[derive(Serialize)]
struct RunMeta<'a> {
    command: &'a str,
    version: &'a str,
    started_unix: u64,
    finished_unix: u64,
}

fn write_meta(dir: &Path, command: &str, started_unix: u64) -> CliResult<()> {
    let meta = RunMeta {
        command,
        version: env!("CARGO_PKG_VERSION"),
        started_unix,
        finished_unix: unix_now(),
    };
    write_json(&dir.join("run_meta.json"), &meta)
}

fn crop_params(scale: (f64, f64), ratio: (f64, f64)) -> CliResult<CropParams> {
    let p = CropParams::default().with_scale(scale.0, scale.1).with_ratio(ratio.0, ratio.1);
    p.validate().map_err(|e| usage(e.to_string()))?;
    Ok(p)
}

fn pct(v: f64) -> String {
    format!("{:6.2}%", 100.0 * v)
}

pub fn cmd_stats(a: &StatsArgs) -> CliResult<()> {
    if a.samples == 0 {
        return Err(usage("--samples must be at least 1"));
    }
    if a.image_size == 0 {
        return Err(usage("--image-size must be at least 1"));
    }
    let regime = SamplingRegime::new(a.regime, crop_params(a.scale, a.ratio)?).with_geometry(a.geometry);
    let s = a.image_size;
    let stats = config_statistics_sharded(a.seed, s, s, &regime, a.samples)?;

    println!("regime          {}", a.regime);
    println!("samples         {}", stats.n_samples);
    println!("image size      {s}x{s}");
    println!("scale / ratio   [{}, {}] / [{:.4}, {:.4}]", a.scale.0, a.scale.1, a.ratio.0, a.ratio.1);
    println!();
    println!("configuration   frequency");
    println!("global-local    {}", pct(stats.freq_global_local));
    println!("adjacent        {}", pct(stats.freq_adjacent));
    println!("intersection    {}", pct(stats.freq_intersection));
    println!();
    println!("avg patch size  {}", pct(stats.mean_area_fraction));

    if let Some(path) = a.out.clone().or_else(|| env_out_dir().map(|d| d.join("stats.json"))) {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            create_dir(dir)?;
        }
        write_json(&path, &stats)?;
    }
    Ok(())
}

fn write_with<F>(path: &Path, f: F) -> CliResult<()>
where
    F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
{
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    f(&mut w).and_then(|_| w.flush()).map_err(|e| Error::io(path, e).into())
}

pub fn cmd_heatmap(a: &HeatmapArgs) -> CliResult<()> {
    if a.samples == 0 {
        return Err(usage("--samples must be at least 1"));
    }
    if a.image_size == 0 {
        return Err(usage("--image-size must be at least 1"));
    }
    let params = crop_params(a.scale, a.ratio)?;
    let s = a.image_size;
    let mut rng = rng_stream(a.seed, 0);
    let mut acc = HeatmapAccumulator::new(s, s);
    for _ in 0..a.samples {
        acc.add(&sample_crop(&mut rng, s, s, &params)?)?;
    }
    let map = acc.finish()?;

    let (pgm, csv) = match (&a.out_pgm, &a.out_csv, env_out_dir()) {
        (None, None, Some(dir)) => (Some(dir.join("heatmap.pgm")), Some(dir.join("heatmap.csv"))),
        (p, c, _) => (p.clone(), c.clone()),
    };
    if let Some(path) = &pgm {
        write_with(path, |w| map.write_pgm(w))?;
    }
    if let Some(path) = &csv {
        write_with(path, |w| map.write_csv(w))?;
    }

    let last = s - 1;
    let mid = s / 2;
    println!("crops           {}", a.samples);
    println!("image size      {s}x{s}");
    println!("center ({mid},{mid})   {:.4}", map.at(mid, mid));
    for (x, y) in [(0, 0), (last, 0), (0, last), (last, last)] {
        println!("corner ({x},{y})   {:.4}", map.at(x, y));
    }
    Ok(())
}

/// Run-level results written next to the checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub regime: String,
    pub curated: bool,
    pub epochs: usize,
    pub final_knn: Option<f64>,
    pub best_knn: Option<f64>,
    pub curation_steps: usize,
    pub satisfied_fraction: Option<f64>,
    pub mean_area_fraction: f64,
    pub checksum: String,
}

pub fn cmd_train(a: &TrainArgs) -> CliResult<()> {
    let mut cfg = load_config(&a.config)?;
    if let Some(e) = a.epochs {
        cfg.train.epochs = e;
    }
    if let Some(s) = a.seed {
        cfg.train.seed = s;
    }
    if a.curate || a.warmup.is_some() {
        let mut cur = cfg.train.curation.unwrap_or_else(|| CuratorConfig::for_epochs(cfg.train.epochs));
        if let Some(w) = a.warmup {
            cur.warmup_epochs = w;
        }
        cfg.train.curation = Some(cur);
    }
    cfg.output_dir = resolve_out_dir(a.out_dir.as_deref(), &cfg.output_dir);
    cfg.validate()?;

    let started = unix_now();
    let dir = cfg.output_dir.clone();
    create_dir(&dir)?;
    save_config(&cfg, &dir.join("config.json"))?;
    let (train, test) = cfg.dataset.load()?;

    println!("{:>5}  {:>9}  {:>8}  {:>9}", "epoch", "loss", "knn", "satisfied");
    let mut writer = MetricsWriter::create(&dir.join("metrics.jsonl"))?;
    let result = run_training(&cfg.train, &cfg.eval, &train, &test, &mut |r| {
        writer.write(r)?;
        if let MetricRecord::Epoch(e) = r {
            let opt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |v| format!("{v:.4}"));
            println!("{:>5}  {:>9.4}  {:>8}  {:>9}", e.epoch, e.loss, opt(e.knn_acc), opt(e.curation_satisfied));
        }
        Ok(())
    });
    writer.flush()?;
    let outcome = result?;

    save_checkpoint(&outcome.model, &dir.join("checkpoint.ckpt"))?;
    let summary = TrainSummary {
        regime: cfg.train.regime.kind.name().to_string(),
        curated: cfg.train.curation.is_some(),
        epochs: cfg.train.epochs,
        final_knn: outcome.final_knn,
        best_knn: outcome.best_knn,
        curation_steps: outcome.curation_steps.len(),
        satisfied_fraction: outcome.satisfied_fraction(),
        mean_area_fraction: outcome.mean_area_fraction,
        checksum: format!("{:016x}", outcome.model.checksum()),
    };
    write_json(&dir.join("train_summary.json"), &summary)?;
    write_meta(&dir, "train", started)?;

    println!();
    if let Some(k) = summary.final_knn {
        println!("final knn       {k:.4}");
    }
    if let Some(f) = summary.satisfied_fraction {
        println!("satisfied       {:.4} of {} curated batches", f, summary.curation_steps);
    }
    println!("avg patch size  {}", pct(summary.mean_area_fraction));
    println!("output          {}", dir.display());
    Ok(())
}

/// A CIFAR-10 directory, or a JSON file with either a dataset spec or a
/// whole run config.
pub fn load_dataset_arg(path: &Path) -> CliResult<(LabeledImageSet, LabeledImageSet)> {
    if path.is_dir() {
        return Ok(cropcurate::data::load_cifar10(path)?);
    }
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let spec: DatasetSpec = match serde_json::from_str(&text) {
        Ok(spec) => spec,
        Err(_) => RunConfig::from_json(&text)?.dataset,
    };
    Ok(spec.load()?)
}

pub fn cmd_eval(a: &EvalArgs) -> CliResult<()> {
    let model = load_checkpoint(&a.checkpoint)?;
    let (train, test) = load_dataset_arg(&a.dataset)?;
    if a.k == 0 || a.k > train.len() {
        return Err(usage(format!("--k must be in 1..={} (train set size), got {}", train.len(), a.k)));
    }
    let run_dir = a.checkpoint.parent().unwrap_or(Path::new("."));
    let run_cfg = load_config(&run_dir.join("config.json")).ok();
    let train_summary: Option<TrainSummary> = fs::read_to_string(run_dir.join("train_summary.json"))
        .ok()
        .and_then(|t| serde_json::from_str(&t).ok());

    let base = run_cfg.as_ref().map_or_else(EvalConfig::default, |c| c.eval);
    let eval = EvalConfig {
        k: a.k,
        probe_epochs: a.probe_epochs,
        input_size: a
            .input_size
            .or_else(|| run_cfg.as_ref().map(|c| c.train.regime.crop.out_size as usize)),
        seed: a.seed,
        ..base
    };
    eval.validate().map_err(|e| usage(e.to_string()))?;

    let knn = knn_accuracy(&model, &train, &test, &eval)?;
    let linear = if a.probe_epochs > 0 {
        Some(linear_probe(&model, &train, &test, &eval)?)
    } else {
        None
    };
    let row = SummaryRow {
        model_id: a.model_id.clone().unwrap_or_else(|| a.checkpoint.display().to_string()),
        regime: run_cfg
            .as_ref()
            .map_or_else(|| "unknown".to_string(), |c| c.train.regime.kind.name().to_string()),
        curated: run_cfg.as_ref().is_some_and(|c| c.train.curation.is_some()),
        knn_acc: Some(knn),
        linear_acc: linear,
        mean_area_fraction: train_summary.map(|s| s.mean_area_fraction),
    };
    let summary_path = a
        .summary
        .clone()
        .unwrap_or_else(|| resolve_out_dir(a.out_dir.as_deref(), Path::new(".")).join("summary.csv"));
    if let Some(dir) = summary_path.parent().filter(|d| !d.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    append_summary_row(&summary_path, &row)?;

    println!("model           {}", row.model_id);
    println!("knn ({:>3})       {knn:.4}", a.k);
    if let Some(l) = linear {
        println!("linear          {l:.4}");
    }
    println!("summary         {}", summary_path.display());
    Ok(())
}

pub const DEMO_HEADER: &str =
    "step  d_s(before)  d_d(before)  rounds  resampled  satisfied  d_s(after)  d_d(after)    margin";

/// One table row: distances before, the report, distances after.
pub fn demo_row(step: usize, before: &DistanceSummary, report: &CurationReport, after: &DistanceSummary) -> String {
    format!(
        "{:>4}  {:>11.6}  {:>11.6}  {:>6}  {:>9}  {:>9}  {:>10.6}  {:>10.6}  {:>8.6}",
        step,
        before.d_s,
        before.d_d,
        report.rounds_used,
        report.resampled,
        if report.satisfied { "yes" } else { "no" },
        after.d_s,
        after.d_d,
        after.margin(),
    )
}

pub fn cmd_curate_demo(a: &CurateDemoArgs) -> CliResult<()> {
    if a.steps == 0 {
        return Err(usage("--steps must be at least 1"));
    }
    let mut cfg = load_config(&a.config)?;
    if let Some(s) = a.seed {
        cfg.train.seed = s;
    }
    cfg.output_dir = resolve_out_dir(a.out_dir.as_deref(), &cfg.output_dir);
    let curator = cfg.train.curation.unwrap_or_default();
    cfg.train.curation = Some(curator);
    cfg.validate()?;

    let started = unix_now();
    let dir = cfg.output_dir.clone();
    create_dir(&dir)?;
    save_config(&cfg, &dir.join("config.json"))?;
    let (train, _) = cfg.dataset.load()?;
    let model = match &a.checkpoint {
        Some(p) => load_checkpoint(p)?,
        None => EncoderModel::<f32>::new(cfg.train.encoder.clone(), cfg.train.seed)?,
    };
    let seed = cfg.train.seed;
    let (regime, augment) = (cfg.train.regime, cfg.train.augment);
    let mut pick = rng_stream(seed, STREAM_SHUFFLE);
    let mut sampler = ViewSampler::new(&train, regime, augment, rng_stream(seed, STREAM_VIEWS));
    let mut resampler = ViewSampler::new(&train, regime, augment, rng_stream(seed, STREAM_CURATION));
    let batch_size = cfg.train.batch_size.min(train.len());
    let epoch = curator.warmup_epochs;

    let mut writer = MetricsWriter::create(&dir.join("curate_demo.jsonl"))?;
    println!("{DEMO_HEADER}");
    for step in 0..a.steps {
        let instances = sample(&mut pick, train.len(), batch_size).into_vec();
        let batch = sampler.sample_batch(&instances)?;
        let before = compute_distances(&model.embed(&batch.views, curator.space)?)?;
        let (batch, report) = curate_batch(batch, &model, epoch, &curator, &mut resampler)?;
        let after = compute_distances(&model.embed(&batch.views, curator.space)?)?;
        println!("{}", demo_row(step, &before, &report, &after));
        if report.satisfied {
            println!("      d_s {:.6} < d_d {:.6}", after.d_s, after.d_d);
        }
        writer.write(&MetricRecord::Curation(CurationStepRecord {
            epoch,
            step,
            rounds_used: report.rounds_used,
            resampled: report.resampled,
            satisfied: report.satisfied,
            margin: after.margin(),
        }))?;
    }
    writer.flush()?;
    write_meta(&dir, "curate-demo", started)?;
    Ok(())
}
