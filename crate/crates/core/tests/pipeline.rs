use std::fs;

use trigan_core::data::{class_priors, embed_pairs, load_claims, make_pairs, split, Label, LabeledDataset};
use trigan_core::metrics::{emit, parse_records, RecordFormat};
use trigan_core::nn::{load_checkpoint, save_checkpoint};
use trigan_core::tri_gan::{classify_batch, train, Architecture, GameRules, TrainConfig, TriGanModel};
use trigan_core::variants::Variant;

const CLAIMS: &str = r#"{"claim": "Tetris has sold millions", "evidence": ["Tetris has sold 495 million copies"], "label": "SUPPORTS"}
{"claim": "Paris is in Germany", "evidence": ["Paris is the capital of France", "Paris lies on the Seine"], "label": "REFUTES"}
{"claim": "Some unverifiable thing", "evidence": ["nothing"], "label": "NOT ENOUGH INFO"}
{"claim": "The sun is a star", "evidence": ["The Sun is the star at the centre of the Solar System", "It is a G-type star", "It is hot"], "label": "supports"}
{"claim": "Cats are reptiles", "evidence": ["Cats are mammals"], "label": "refutes"}
"#;

#[test]
fn corpus_to_trained_model() {
    let dir = tempfile::tempdir().unwrap();
    let claims = dir.path().join("claims.jsonl");
    fs::write(&claims, CLAIMS).unwrap();

    let load = load_claims(&claims).unwrap();
    assert_eq!((load.records.len(), load.skipped_label), (4, 1));
    let pairs = make_pairs(&load.records);
    assert_eq!(pairs.len(), 7);
    let embedded = embed_pairs(&pairs, 32, 9).unwrap();
    assert!(embedded.empty.is_empty());
    let data = embedded.dataset;

    let csv = dir.path().join("data.csv");
    data.write_csv(&csv).unwrap();
    assert_eq!(LabeledDataset::read_csv(&csv).unwrap(), data);

    let parts = split(&data, [1.0, 0.0, 0.0], 0).unwrap();
    let priors = class_priors(&parts.train).unwrap();
    assert!((priors.pi_p() - 4.0 / 7.0).abs() < 1e-15);

    let arch = Architecture { noise_dim: 4, generator_hidden: vec![16], discriminator_hidden: vec![16], ..Default::default() };
    let cfg = TrainConfig { iterations: 25, batch_size: 4, eval_every: 5, ..Default::default() };
    for variant in Variant::ALL {
        let Some(rules) = variant.rules() else { continue };
        let model = TriGanModel::new(&arch, 32, priors, 1).unwrap();
        let (trained, records) = train(model, &rules, &parts.train, Some(&parts.train), &cfg).unwrap();
        assert_eq!(records.len(), 25, "{variant}");
        assert!(trained.to_named().values().all(|n| n.is_finite()), "{variant}");

        let ck = dir.path().join(format!("{variant}.json"));
        save_checkpoint(&trained.to_named(), &ck).unwrap();
        let restored = TriGanModel::from_named(load_checkpoint(&ck).unwrap(), priors).unwrap();
        assert_eq!(restored, trained);
        let x = data.features();
        assert_eq!(classify_batch(&restored.g_y, x.view()).unwrap(), classify_batch(&trained.g_y, x.view()).unwrap());

        for format in [RecordFormat::Csv, RecordFormat::LineJson] {
            let path = dir.path().join(format!("{variant}.{}", format.extension()));
            emit(&records, &path, format).unwrap();
            assert_eq!(parse_records(&path, format).unwrap(), records);
        }
    }
}

#[test]
fn proposed_learns_separable_toy_data() {
    let spec = trigan_core::data::MixtureSpec { n_per_class: 400, ..Default::default() };
    let data = trigan_core::data::gaussian_mixture(&spec, 2).unwrap();
    let parts = split(&data, [0.8, 0.1, 0.1], 2).unwrap();
    let priors = class_priors(&parts.train).unwrap();
    let arch = Architecture { generator_hidden: vec![32, 32], discriminator_hidden: vec![32, 32], ..Default::default() };
    let model = TriGanModel::new(&arch, 2, priors, 3).unwrap();
    let cfg = TrainConfig { iterations: 400, eval_every: 0, ..Default::default() };
    let (model, _) = train(model, &GameRules::proposed(), &parts.train, None, &cfg).unwrap();
    let (_, pred) = classify_batch(&model.g_y, parts.test.features().view()).unwrap();
    let p = trigan_core::metrics::precision_recall_f1(&pred, &parts.test.labels(), Label::Supported.as_u8()).unwrap();
    assert!(p.f1 >= 0.9, "f1 {}", p.f1);
}
