use bicogan_core::bicogan::{
    load_checkpoint, save_checkpoint, train, Architecture, ExtrinsicSpec, GammaSchedule, ObjectiveMode, PriorSpec,
    TrainingConfig,
};
use bicogan_core::data::{decode_idx, encode_idx, Split, SyntheticSpec};
use bicogan_core::eval::{evaluate, EvalConfig};
use bicogan_core::nn::param_hash;
use bicogan_core::{BiCoGan32, Trainer};

fn small(epochs: usize) -> TrainingConfig {
    TrainingConfig {
        epochs,
        batch_size: 32,
        seed: 4,
        prior: PriorSpec { z_dim: 2, ..PriorSpec::default() },
        architecture: Architecture {
            generator_hidden: vec![32],
            encoder_hidden: vec![32],
            discriminator_hidden: vec![32],
            ..Architecture::default()
        },
        ..TrainingConfig::default()
    }
}

#[test]
fn ring_training_learns_the_label_map() {
    let spec = SyntheticSpec::gaussian_ring(4, 0.05, 800, 400, 2);
    let (tr, te) = (spec.generate(Split::Train).unwrap(), spec.generate(Split::Test).unwrap());
    let (model, reports) = train(&tr.x, &tr.c, tr.extrinsic, &small(15)).unwrap();
    assert_eq!(reports.len(), 15);
    assert!(reports.iter().all(|r| r.d_loss.is_finite() && r.ge_loss.is_finite()));
    let cfg = EvalConfig { n_gen: 400, ips_bases: 50, ..EvalConfig::default() };
    let r = evaluate(&model, &tr, &te, &cfg, GammaSchedule::default(), 15, 0).unwrap();
    assert!(r.a_c.unwrap() > 0.9, "{r:?}");
    assert!(r.scores_in_unit_interval());
}

#[test]
fn checkpoint_survives_training_and_reload() {
    let spec = SyntheticSpec::bars(4, 0.05, 64, 0, 1);
    let tr = spec.generate(Split::Train).unwrap();
    let (model, _) = train(&tr.x, &tr.c, tr.extrinsic, &small(2)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    save_checkpoint(&model, &serde_json::Value::Null, dir.path()).unwrap();
    let (back, header) = load_checkpoint::<f64>(dir.path()).unwrap();
    assert_eq!(back, model);
    assert_eq!(header.x_dim, 64);
    let x = tr.x.select_rows(&[0, 1, 2]);
    assert_eq!(back.reconstruct(&x).unwrap(), model.reconstruct(&x).unwrap());
}

#[test]
fn single_precision_path_trains() {
    let spec = SyntheticSpec::gaussian_ring(3, 0.05, 96, 0, 1);
    let tr = spec.generate(Split::Train).unwrap();
    let cfg = small(1);
    let model = BiCoGan32::new(2, cfg.prior, tr.extrinsic, ObjectiveMode::Bicogan, &cfg.architecture, 0).unwrap();
    let before = param_hash(&model.generator);
    let (x, c) = (tr.x.cast::<f32>(), tr.c.cast::<f32>());
    let mut trainer = bicogan_core::bicogan::Trainer::new(model, cfg, c.clone()).unwrap();
    let r = trainer.train_epoch(&x, &c, 0).unwrap();
    assert!(r.d_loss.is_finite());
    assert_ne!(param_hash(&trainer.model.generator), before);
}

#[test]
fn reduced_modes_train_end_to_end() {
    let spec = SyntheticSpec::gaussian_ring(3, 0.05, 96, 0, 1);
    let tr = spec.generate(Split::Train).unwrap();
    for mode in [ObjectiveMode::Gan, ObjectiveMode::Cgan, ObjectiveMode::Bigan] {
        let cfg = TrainingConfig { mode, ..small(2) };
        let model = bicogan_core::BiCoGan::new(2, cfg.prior, tr.extrinsic, mode, &cfg.architecture, 0).unwrap();
        let mut trainer = Trainer::new(model, cfg, tr.c.clone()).unwrap();
        let reports = trainer.fit(&tr.x, &tr.c, |_, _| Ok(())).unwrap();
        assert!(reports.iter().all(|r| r.efl.is_none()), "{mode:?}");
    }
}

#[test]
fn idx_round_trip_feeds_training() {
    let spec = SyntheticSpec::bars(8, 0.0, 40, 0, 3);
    let bars = spec.generate(Split::Train).unwrap();
    let (images, labels) = encode_idx(&bars).unwrap();
    let ds = decode_idx(&images, &labels, Split::Train).unwrap();
    assert_eq!(ds.labels(), bars.labels());
    assert_eq!(ds.image_shape, Some((8, 8)));
    assert_eq!(ds.extrinsic, ExtrinsicSpec::categorical(10));
    let (_, reports) = train(&ds.x, &ds.c, ds.extrinsic, &small(1)).unwrap();
    assert_eq!(reports[0].steps, 2);
}
