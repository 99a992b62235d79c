//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits nonzero if any criterion fails.
//!
//! `cargo test --release -p trigan-cli --test acceptance`

use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use trigan_core::data::{class_priors, gaussian_mixture, load_claims, make_pairs, split, Label, MixtureSpec};
use trigan_core::equilibrium::{optimal_t_binary, optimal_t_ternary, v_star, DiscreteDist, EQUILIBRIUM_VALUE};
use trigan_core::metrics::{f1_score, precision_recall_f1, spearman};
use trigan_core::rng::standard_normal;
use trigan_core::tri_gan::{classify_batch, train, Architecture, GameRules, Minibatch, TrainConfig, TriGanModel};
use trigan_core::variants::{baseline_train, grad_check_suite, symmetric_values, GradCheckSpec, SymmetricMode};
use trigan_core::Priors;

type Outcome = Result<String, String>;

fn within_time(elapsed: Duration, limit: Duration, detail: String) -> Outcome {
    if elapsed < limit {
        Ok(format!("{detail}; {:.2}s", elapsed.as_secs_f64()))
    } else {
        Err(format!("{detail}; took {:.2}s, limit {:.0}s", elapsed.as_secs_f64(), limit.as_secs_f64()))
    }
}

fn grid_argmax(f: impl Fn(f64) -> f64, step: f64) -> f64 {
    let n = (1.0 / step).round() as usize;
    (1..n).map(|i| i as f64 * step).max_by(|&x, &y| f(x).total_cmp(&f(y))).expect("non-empty grid")
}

fn unit_weight(rng: &mut ChaCha8Rng) -> f64 {
    1.0 - rng.random::<f64>()
}

fn binary_optimum() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let (a, b) = (unit_weight(&mut rng), unit_weight(&mut rng));
        let grid = grid_argmax(|t| a * t.ln() + b * (1.0 - t).ln(), 1e-4);
        worst = worst.max((grid - optimal_t_binary(a, b).map_err(|e| e.to_string())?).abs());
    }
    let detail = format!("max |grid - a/(a+b)| = {worst:.2e} over 200 draws");
    if worst > 1e-3 {
        return Err(detail);
    }
    within_time(start.elapsed(), Duration::from_secs(1), detail)
}

fn ternary_optimum() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let (a, b, c) = (unit_weight(&mut rng), unit_weight(&mut rng), unit_weight(&mut rng));
        let grid = grid_argmax(|t| a * t.ln() + b * (1.0 - t).ln() + c * (1.0 - t).ln(), 1e-4);
        let closed = optimal_t_ternary(a, b, c).map_err(|e| e.to_string())?;
        let swapped = optimal_t_ternary(a, c, b).map_err(|e| e.to_string())?;
        if closed.to_bits() != swapped.to_bits() {
            return Err(format!("b/c swap changed the optimum for ({a}, {b}, {c})"));
        }
        worst = worst.max((grid - closed).abs()).max((closed - a / (a + b + c)).abs());
    }
    let detail = format!("max |grid - a/(a+b+c)| = {worst:.2e} over 200 draws, b/c swap exact");
    if worst <= 1e-3 { Ok(detail) } else { Err(detail) }
}

fn random_dist(rng: &mut ChaCha8Rng, k: usize) -> DiscreteDist {
    let w: Vec<f64> = (0..k).map(|_| rng.random::<f64>() + 1e-3).collect();
    DiscreteDist::from_weights(&w).expect("positive weights")
}

fn equilibrium_value() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let k = rng.random_range(1..=8);
        let priors = Priors::from_positive(rng.random_range(0.01..0.99)).expect("valid prior");
        let (gp, gn) = (random_dist(&mut rng, k), random_dist(&mut rng, k));
        let p = DiscreteDist::mixture(&gp, &gn, priors).map_err(|e| e.to_string())?;
        let v = v_star(&p, &gp, &gn, priors).map_err(|e| e.to_string())?;
        worst = worst.max((v - EQUILIBRIUM_VALUE).abs());
    }
    let detail = format!("max |v* - 2 ln(1/2)| = {worst:.2e} over 100 instances");
    if worst <= 1e-9 { Ok(detail) } else { Err(detail) }
}

fn trigan() -> Command {
    Command::new(env!("CARGO_BIN_EXE_trigan"))
}

fn equilibrium_location(dir: &Path) -> Outcome {
    let start = Instant::now();
    let out = dir.join("equilibrium");
    let status = trigan().args(["--out"]).arg(&out).arg("verify-equilibrium").output().map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let text = fs::read_to_string(out.join("equilibrium.json")).map_err(|e| e.to_string())?;
    let report: serde_json::Value = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    let vec = |key: &str| -> Vec<f64> {
        report[key].as_array().map(|a| a.iter().filter_map(|v| v.as_f64()).collect()).unwrap_or_default()
    };
    let (gp, gn) = (vec("minimizer_p_gp"), vec("minimizer_p_gn"));
    let gap = report["gap"].as_f64().unwrap_or(f64::NAN);
    let slack = report["value_slack"].as_f64().unwrap_or(f64::NAN);
    let detail = format!("minimizer p_gp={gp:?} p_gn={gn:?}, gap {gap:.2e}, slack {slack:.3}");
    let ok = status.status.success() && gp == [1.0, 0.0] && gn == [0.0, 1.0] && gap.abs() <= slack;
    if !ok {
        return Err(detail);
    }
    within_time(elapsed, Duration::from_secs(10), detail)
}

fn gradient_fidelity() -> Outcome {
    let start = Instant::now();
    let spec = GradCheckSpec::default();
    let results = grad_check_suite(&spec, 0).map_err(|e| e.to_string())?;
    let worst = results.iter().map(|r| r.worst).fold(0.0, f64::max);
    let failed: Vec<_> = results.iter().filter(|r| !r.passed).map(|r| r.case.as_str()).collect();
    let detail = format!("{} cases x {} instances, max relative error {worst:.2e}", results.len(), spec.instances);
    if !failed.is_empty() || worst > 1e-4 {
        return Err(format!("{detail}; failing: {failed:?}"));
    }
    within_time(start.elapsed(), Duration::from_secs(30), detail)
}

struct ToyRun {
    model: TriGanModel,
    cos: Vec<(f64, f64)>,
    d_real: f64,
    d_fake: f64,
    elapsed: Duration,
    f1: f64,
    baseline_f1: f64,
}

fn toy_run() -> Result<ToyRun, String> {
    let start = Instant::now();
    let data = gaussian_mixture(&MixtureSpec::default(), 0).map_err(|e| e.to_string())?;
    let parts = split(&data, [0.8, 0.1, 0.1], 0).map_err(|e| e.to_string())?;
    let priors = class_priors(&parts.train).map_err(|e| e.to_string())?;
    let cfg = TrainConfig::default();
    let model = TriGanModel::new(&Architecture::default(), 2, priors, cfg.seed).map_err(|e| e.to_string())?;
    let (model, records) =
        train(model, &GameRules::proposed(), &parts.train, Some(&parts.val), &cfg).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();

    let cos = records.iter().filter_map(|r| r.cos.map(|c| (r.iter as f64, c))).collect();
    let positives = parts.train.class_features(Label::Supported);
    let mean = |a: ndarray::Array2<f64>| a.mean().unwrap_or(f64::NAN);
    let d_real = mean(model.d_p.predict(positives.view()).map_err(|e| e.to_string())?);
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let fake = model.g_p.predict(standard_normal(&mut rng, 5000, model.noise_dim()).view()).map_err(|e| e.to_string())?;
    let d_fake = mean(model.d_p.predict(fake.view()).map_err(|e| e.to_string())?);

    let score = |net: &trigan_core::nn::NeuralNet| -> Result<f64, String> {
        let (_, pred) = classify_batch(net, parts.test.features().view()).map_err(|e| e.to_string())?;
        Ok(precision_recall_f1(&pred, &parts.test.labels(), 1).map_err(|e| e.to_string())?.f1)
    };
    let f1 = score(&model.g_y)?;
    let (baseline, _) =
        baseline_train(&parts.train, None, &Architecture::default(), &cfg).map_err(|e| e.to_string())?;
    let baseline_f1 = score(&baseline)?;
    Ok(ToyRun { model, cos, d_real, d_fake, elapsed, f1, baseline_f1 })
}

fn toy_equilibrium(run: &ToyRun) -> Outcome {
    let (iters, cos): (Vec<f64>, Vec<f64>) = run.cos.iter().copied().unzip();
    let rho = spearman(&iters, &cos);
    let detail = format!(
        "mean D_p: real {:.3}, generated {:.3}; cosine-vs-iteration Spearman {} over {} checkpoints",
        run.d_real,
        run.d_fake,
        rho.map_or("undefined".to_string(), |r| format!("{r:.3}")),
        cos.len()
    );
    let d_ok = (run.d_real - 0.5).abs() <= 0.1 && (run.d_fake - 0.5).abs() <= 0.1;
    if !(d_ok && rho.is_some_and(|r| r > 0.0)) {
        return Err(detail);
    }
    within_time(run.elapsed, Duration::from_secs(300), detail)
}

fn toy_classification(run: &ToyRun) -> Outcome {
    let detail = format!(
        "G_y test F1 {:.4} (noise dim {}), baseline test F1 {:.4}",
        run.f1,
        run.model.noise_dim(),
        run.baseline_f1
    );
    if run.f1 >= 0.9 && run.baseline_f1 >= 0.95 { Ok(detail) } else { Err(detail) }
}

fn metric_arithmetic() -> Outcome {
    let f1 = f1_score(0.50, 0.93);
    let detail = format!("F1(0.50, 0.93) = {f1:.6}");
    if (f1 - 0.6503).abs() < 5e-5 && format!("{f1:.2}") == "0.65" { Ok(detail) } else { Err(detail) }
}

fn prior_computation() -> Outcome {
    let priors = Priors::from_counts(80_035, 29_775).map_err(|e| e.to_string())?;
    let detail = format!("pi_p = {:.7}, target 0.728868 +/- 1e-6", priors.pi_p());
    if (priors.pi_p() - 0.728868).abs() <= 1e-6 { Ok(detail) } else { Err(detail) }
}

fn preprocessing_cardinality(dir: &Path) -> Outcome {
    let path = dir.join("claims.jsonl");
    let lines = [
        r#"{"claim": "A", "evidence": ["a1", "a2", "a3"], "label": "SUPPORTS"}"#,
        r#"{"claim": "B", "evidence": ["b1"], "label": "REFUTES"}"#,
        r#"{"claim": "C", "evidence": ["c1", "c2"], "label": "SUPPORTS"}"#,
    ];
    fs::write(&path, lines.join("\n")).map_err(|e| e.to_string())?;
    let load = load_claims(&path).map_err(|e| e.to_string())?;
    let pairs = make_pairs(&load.records);
    let labels: Vec<u8> = pairs.iter().map(|p| p.label.as_u8()).collect();
    let detail = format!("{} records -> {} pairs, labels {labels:?}", load.records.len(), pairs.len());
    if pairs.len() == 6 && labels == [1, 1, 1, 0, 1, 1] { Ok(detail) } else { Err(detail) }
}

fn files_under(root: &Path) -> Vec<std::path::PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).into_iter().flatten().flatten() {
            let p = entry.path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push(p.strip_prefix(root).expect("under root").to_path_buf());
            }
        }
    }
    out.sort();
    out
}

fn determinism(dir: &Path) -> Outcome {
    let config = dir.join("repeat.toml");
    fs::write(
        &config,
        "[data.source.mixture]\nn_per_class = 300\nmean_pos = [2.0, 2.0]\nmean_neg = [-2.0, -2.0]\ncov_scale = 1.0\n\n\
         [model]\ngenerator_hidden = [16, 16]\ndiscriminator_hidden = [16, 16]\n\n\
         [train]\niterations = 200\nbatch_size = 32\neval_every = 50\n",
    )
    .map_err(|e| e.to_string())?;
    let outs = [dir.join("repeat-a"), dir.join("repeat-b")];
    for out in &outs {
        let o = trigan()
            .arg("--config")
            .arg(&config)
            .args(["--seed", "17", "--out"])
            .arg(out)
            .arg("repeat")
            .output()
            .map_err(|e| e.to_string())?;
        if !o.status.success() {
            return Err(format!("repeat failed: {}", String::from_utf8_lossy(&o.stderr)));
        }
    }
    let (a, b) = (files_under(&outs[0]), files_under(&outs[1]));
    if a != b || a.is_empty() {
        return Err(format!("file sets differ: {a:?} vs {b:?}"));
    }
    for f in &a {
        if fs::read(outs[0].join(f)).ok() != fs::read(outs[1].join(f)).ok() {
            return Err(format!("{} differs between runs", f.display()));
        }
    }
    let metrics = a.iter().filter(|f| f.to_string_lossy().contains("metrics")).count();
    Ok(format!("{} files identical, {metrics} metric files", a.len()))
}

fn symmetric_literalness() -> Outcome {
    let arch = Architecture { noise_dim: 3, generator_hidden: vec![8], discriminator_hidden: vec![8], ..Default::default() };
    for i in 0..100u64 {
        let model = TriGanModel::new(&arch, 2, Priors::from_positive(0.3 + 0.004 * i as f64).expect("valid"), i)
            .map_err(|e| e.to_string())?;
        let batch = Minibatch::random(3, 2, 16, 1000 + i);
        let (first, second) = symmetric_values(&model, &batch, SymmetricMode::AsPrinted).map_err(|e| e.to_string())?;
        if first.to_bits() != second.to_bits() {
            return Err(format!("batch {i}: {first:e} vs {second:e}"));
        }
    }
    Ok("both value functions bitwise equal on 100 batches".into())
}

fn main() {
    let dir = tempfile::tempdir().expect("temp dir");
    let toy = toy_run();
    let toy_outcome = |f: fn(&ToyRun) -> Outcome| match &toy {
        Ok(run) => f(run),
        Err(e) => Err(format!("toy run failed: {e}")),
    };
    let outcomes: Vec<(&str, Outcome)> = vec![
        ("optimal discriminator closed form", binary_optimum()),
        ("ternary optimum", ternary_optimum()),
        ("equilibrium value", equilibrium_value()),
        ("equilibrium location", equilibrium_location(dir.path())),
        ("gradient fidelity", gradient_fidelity()),
        ("toy equilibrium behavior", toy_outcome(toy_equilibrium)),
        ("toy classification", toy_outcome(toy_classification)),
        ("metric arithmetic", metric_arithmetic()),
        ("prior computation", prior_computation()),
        ("preprocessing cardinality", preprocessing_cardinality(dir.path())),
        ("determinism", determinism(dir.path())),
        ("symmetric literalness", symmetric_literalness()),
    ];
    let mut failures = 0;
    for (i, (name, outcome)) in outcomes.iter().enumerate() {
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(detail) => {
                failures += 1;
                println!("FAIL {:>2} {name}: {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", outcomes.len() - failures, outcomes.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
