use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde::Serialize;
use trigan_core::data::{class_priors, LabeledDataset, Label};
use trigan_core::equilibrium::{verify_equilibrium, EquilibriumReport};
use trigan_core::metrics::{aggregate, emit, precision_recall_f1, AggregateResult, MetricsRecord, Prf, SimilarityScores};
use trigan_core::nn::{load_checkpoint, save_checkpoint, NamedNets, NeuralNet};
use trigan_core::tri_gan::{classify_batch, evaluate, train, NetRole, TriGanModel};
use trigan_core::variants::{baseline_train, grad_check_suite, GradCheckResult, Variant};
use trigan_core::rng::derive_seed;
use trigan_core::Priors;

use crate::config::{load_data, load_split, RunConfig};

const FINAL_EVAL_STREAM: u64 = 0x6669_6e61_6c;

/// Checkpoint key of the baseline's single net.
pub const CLASSIFIER: &str = "Classifier";

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub variant: Variant,
    pub seed: u64,
    pub priors: Priors,
    pub iterations: usize,
    pub train_size: usize,
    pub val_size: usize,
    pub test_size: usize,
    /// Classifier metrics on the test split (G_y, or the baseline net).
    pub test: Option<Prf>,
    /// Generated vs. real training samples after the last iteration.
    pub similarity: Option<SimilarityScores>,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))
}

fn test_metrics(net: &NeuralNet, test: &LabeledDataset) -> Result<Option<Prf>> {
    if test.is_empty() {
        return Ok(None);
    }
    let (_, pred) = classify_batch(net, test.features().view())?;
    Ok(Some(precision_recall_f1(&pred, &test.labels(), Label::Supported.as_u8())?))
}

pub struct RunOutput {
    pub summary: RunSummary,
    pub records: Vec<MetricsRecord>,
    pub checkpoint: NamedNets,
}

/// One seeded run of the configured variant, without touching the disk.
pub fn run_once(cfg: &RunConfig, seed: u64, run: u64) -> Result<RunOutput> {
    let (parts, _) = load_split(cfg)?;
    let priors = class_priors(&parts.train).context("training split")?;
    let train_cfg = trigan_core::tri_gan::TrainConfig { seed, ..cfg.train.clone() };
    let val = Some(&parts.val).filter(|v| !v.is_empty());

    let (checkpoint, mut records, test, similarity) = match cfg.variant.rules() {
        None => {
            let (net, records) = baseline_train(&parts.train, val, &cfg.model, &train_cfg)?;
            let test = test_metrics(&net, &parts.test)?;
            (NamedNets::from([(CLASSIFIER.to_string(), net)]), records, test, None)
        }
        Some(rules) => {
            let model = TriGanModel::new(&cfg.model, parts.train.dim(), priors, seed)?;
            let (model, records) = train(model, &rules, &parts.train, val, &train_cfg)?;
            let test = test_metrics(&model.g_y, &parts.test)?;
            let eval_seed = derive_seed(seed, FINAL_EVAL_STREAM, 0);
            let report = evaluate(&model, &parts.train, None, cfg.train.similarity_sample_cap, cfg.train.pairing, eval_seed)?;
            let similarity = report.similarity;
            (model.to_named(), records, test, similarity)
        }
    };
    for r in &mut records {
        r.run = run;
    }
    let summary = RunSummary {
        variant: cfg.variant,
        seed,
        priors,
        iterations: cfg.train.iterations,
        train_size: parts.train.len(),
        val_size: parts.val.len(),
        test_size: parts.test.len(),
        test,
        similarity,
    };
    Ok(RunOutput { summary, records, checkpoint })
}

fn write_run(dir: &Path, cfg: &RunConfig, out: &RunOutput) -> Result<()> {
    create_dir(dir)?;
    save_checkpoint(&out.checkpoint, dir.join("checkpoint.json"))?;
    emit(&out.records, dir.join(format!("metrics.{}", cfg.metrics_format.extension())), cfg.metrics_format)?;
    write_json(&dir.join("run.json"), &out.summary)
}

pub fn cmd_train(cfg: &RunConfig, out: &Path) -> Result<()> {
    let result = run_once(cfg, cfg.base_seed(), 0)?;
    write_run(out, cfg, &result)?;
    write_json(&out.join("config.json"), cfg)?;
    match result.summary.test {
        Some(p) => println!(
            "{} seed {}: test precision {:.4} recall {:.4} f1 {:.4}",
            cfg.variant, result.summary.seed, p.precision, p.recall, p.f1
        ),
        None => println!("{} seed {}: no test split", cfg.variant, result.summary.seed),
    }
    println!("wrote {}", out.display());
    Ok(())
}

#[derive(Debug, Serialize)]
struct EvalOutput {
    checkpoint: PathBuf,
    net: String,
    samples: usize,
    metrics: Prf,
}

/// Scores a checkpoint's classifier (G_y, or the baseline net) on
/// `dataset`, or on the configured test split when none is given.
pub fn cmd_eval(cfg: &RunConfig, checkpoint: &Path, dataset: Option<&Path>, out: &Path) -> Result<()> {
    let mut nets = load_checkpoint(checkpoint)?;
    let (name, net) = [NetRole::Gy.name(), CLASSIFIER]
        .into_iter()
        .find_map(|k| nets.remove(k).map(|n| (k.to_string(), n)))
        .with_context(|| format!("{} holds neither a Gy nor a {CLASSIFIER} net", checkpoint.display()))?;
    let data = match dataset {
        Some(p) => LabeledDataset::read_csv(p)?,
        None => load_split(cfg)?.0.test,
    };
    if data.is_empty() {
        bail!("evaluation set is empty");
    }
    let metrics = test_metrics(&net, &data)?.expect("non-empty");
    create_dir(out)?;
    let report = EvalOutput { checkpoint: checkpoint.to_path_buf(), net: name, samples: data.len(), metrics };
    write_json(&out.join("eval.json"), &report)?;
    println!(
        "{} samples: precision {:.4} recall {:.4} f1 {:.4}",
        data.len(),
        metrics.precision,
        metrics.recall,
        metrics.f1
    );
    Ok(())
}

pub fn cmd_gen_data(cfg: &RunConfig, out: &Path) -> Result<()> {
    let loaded = load_data(&cfg.data)?;
    for note in &loaded.notes {
        eprintln!("{note}");
    }
    let parts = trigan_core::data::split(&loaded.dataset, cfg.splits, cfg.data.seed)?;
    create_dir(out)?;
    loaded.dataset.write_csv(out.join("dataset.csv"))?;
    for (name, part) in [("train", &parts.train), ("val", &parts.val), ("test", &parts.test)] {
        part.write_csv(out.join(format!("{name}.csv")))?;
    }
    let d = &loaded.dataset;
    println!(
        "{} samples ({} supported, {} refuted), dim {}; split {}/{}/{}",
        d.len(),
        d.count(Label::Supported),
        d.count(Label::Refuted),
        d.dim(),
        parts.train.len(),
        parts.val.len(),
        parts.test.len()
    );
    Ok(())
}

pub fn cmd_verify_equilibrium(cfg: &RunConfig, out: &Path) -> Result<EquilibriumReport> {
    let report = verify_equilibrium(&cfg.equilibrium.problem()?)?;
    create_dir(out)?;
    write_json(&out.join("equilibrium.json"), &report)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(report)
}

pub fn cmd_grad_check(cfg: &RunConfig, out: &Path) -> Result<Vec<GradCheckResult>> {
    let results = grad_check_suite(&cfg.grad_check.spec, cfg.grad_check.seed)?;
    create_dir(out)?;
    write_json(&out.join("grad_check.json"), &results)?;
    for r in &results {
        let worst_net = r.max_error.iter().max_by(|a, b| a.1.total_cmp(b.1)).map(|(k, _)| k.as_str()).unwrap_or("-");
        println!(
            "{} {:<20} max relative error {:.3e} ({worst_net})",
            if r.passed { "PASS" } else { "FAIL" },
            r.case,
            r.worst
        );
    }
    Ok(results)
}

#[derive(Debug, Serialize)]
struct RepeatSummary {
    variant: Variant,
    base_seed: u64,
    seeds: Vec<u64>,
    aggregate: AggregateResult,
}

/// `cfg.repeats` runs with seeds `base + i`, each in `run-i/`, then the
/// per-run and aggregate tables.
pub fn cmd_repeat(cfg: &RunConfig, out: &Path) -> Result<AggregateResult> {
    let base = cfg.base_seed();
    create_dir(out)?;
    let outputs = (0..cfg.repeats as u64)
        .into_par_iter()
        .map(|i| {
            let seed = base.wrapping_add(i);
            let result = run_once(cfg, seed, i).with_context(|| format!("run {i} (seed {seed})"))?;
            write_run(&out.join(format!("run-{i}")), cfg, &result)?;
            Ok(result.summary)
        })
        .collect::<Result<Vec<_>>>()?;

    let prfs = outputs
        .iter()
        .map(|s| s.test.context("repeat needs a non-empty test split"))
        .collect::<Result<Vec<_>>>()?;
    let agg = aggregate(&prfs)?;

    let mut runs = String::from("run,seed,precision,recall,f1\n");
    for (i, (s, p)) in outputs.iter().zip(&prfs).enumerate() {
        runs.push_str(&format!("{i},{},{:?},{:?},{:?}\n", s.seed, p.precision, p.recall, p.f1));
    }
    fs::write(out.join("runs.csv"), runs).context("writing runs.csv")?;

    let mut table = String::from("method,runs,precision_mean,precision_std,recall_mean,recall_std,f1_mean,f1_std\n");
    table.push_str(&format!(
        "{},{},{:?},{:?},{:?},{:?},{:?},{:?}\n",
        cfg.variant,
        agg.runs,
        agg.precision.mean,
        agg.precision.std,
        agg.recall.mean,
        agg.recall.std,
        agg.f1.mean,
        agg.f1.std
    ));
    fs::write(out.join("summary.csv"), table).context("writing summary.csv")?;
    write_json(
        &out.join("summary.json"),
        &RepeatSummary { variant: cfg.variant, base_seed: base, seeds: outputs.iter().map(|s| s.seed).collect(), aggregate: agg.clone() },
    )?;

    println!("{:<20} {:>16} {:>16} {:>16}", "Method", "Precision", "Recall", "F1 Score");
    println!(
        "{:<20} {:>7.4} ± {:<6.4} {:>7.4} ± {:<6.4} {:>7.4} ± {:<6.4}",
        cfg.variant.name(),
        agg.precision.mean,
        agg.precision.std,
        agg.recall.mean,
        agg.recall.std,
        agg.f1.mean,
        agg.f1.std
    );
    Ok(agg)
}
