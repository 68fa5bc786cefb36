use shaml::curvedata::{synthesize_dataset, train_test_split, ClassSpec, Dataset, SplitSpec};
use shaml::experiments::{fit_classifier, prepare_pair};
use shaml::featureng::{FeatureSpec, Target};
use shaml::models::{gbm_fit, mlp_fit, GbmTask, ModelKind, ModelParams, TrainConfig, TrainedModel, MODEL_FORMAT_VERSION};
use shaml::Error;

fn data() -> (Dataset, Dataset) {
    let ds = synthesize_dataset(600, &ClassSpec::new(&[(4, 1), (9, 1)]), 11).unwrap();
    train_test_split(&ds, SplitSpec::default()).unwrap()
}

fn quick_config() -> TrainConfig {
    let mut cfg = TrainConfig::with_seed(5);
    cfg.mlp.epochs = 4;
    cfg.mlp.hidden = vec![16, 8];
    cfg.logistic.max_epochs = 300;
    cfg.gbm.n_trees = 25;
    cfg
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(f)
}

#[test]
fn every_model_kind_survives_json_roundtrip() {
    let (tr, te) = data();
    let spec = FeatureSpec::bsd(true, true);
    let target = Target::ShaClass(vec![4, 9]);
    let (a, b) = prepare_pair(&tr, &te, &spec, &target).unwrap();
    let cfg = quick_config();
    for kind in ModelKind::ALL {
        let (params, _) = fit_classifier(kind, &a, &b, &cfg).unwrap();
        let model = TrainedModel::new(spec.clone(), target.clone(), a.scaler.clone(), cfg.clone(), params);
        let back = TrainedModel::from_json(&model.to_json().unwrap()).unwrap();
        assert_eq!(back, model, "{kind}");
        assert_eq!(back.predict_dataset(&te).unwrap(), model.predict_dataset(&te).unwrap(), "{kind}");
    }
}

#[test]
fn saved_model_scores_raw_dataset_like_training_pipeline() {
    let (tr, te) = data();
    let spec = FeatureSpec::bsd(true, true);
    let target = Target::ShaClass(vec![4, 9]);
    let (a, b) = prepare_pair(&tr, &te, &spec, &target).unwrap();
    let cfg = quick_config();
    let (params, _) = fit_classifier(ModelKind::Logistic, &a, &b, &cfg).unwrap();
    let direct = params.predict(&b.x).unwrap();
    let model = TrainedModel::new(spec, target, a.scaler.clone(), cfg, params);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.json");
    model.save(&path).unwrap();
    assert_eq!(TrainedModel::load(&path).unwrap().predict_dataset(&te).unwrap(), direct);
}

#[test]
fn unknown_format_version_is_rejected() {
    let (tr, _) = data();
    let spec = FeatureSpec::bsd(false, false);
    let m = shaml::featureng::prepare(&tr, &spec, &Target::SqrtSha).unwrap();
    let mut cfg = quick_config();
    cfg.gbm.n_trees = 2;
    let g = gbm_fit(&m, &cfg, GbmTask::Regress).unwrap();
    let mut model = TrainedModel::new(spec, Target::SqrtSha, None, cfg, ModelParams::Gbm(g));
    model.format_version = MODEL_FORMAT_VERSION + 1;
    let json = model.to_json().unwrap();
    assert!(matches!(TrainedModel::from_json(&json), Err(Error::Config(_))));
}

#[test]
fn gbm_identical_across_thread_counts() {
    let (tr, te) = data();
    let spec = FeatureSpec::bsd(false, false);
    let (a, b) = prepare_pair(&tr, &te, &spec, &Target::SqrtSha).unwrap();
    let cfg = quick_config();
    let one = in_pool(1, || gbm_fit(&a, &cfg, GbmTask::Regress).unwrap());
    let four = in_pool(4, || gbm_fit(&a, &cfg, GbmTask::Regress).unwrap());
    assert_eq!(one, four);
    assert_eq!(one.predict(&b.x).unwrap(), four.predict(&b.x).unwrap());
}

#[test]
fn mlp_reproducible_and_eval_is_pure() {
    let (tr, te) = data();
    let spec = FeatureSpec::bsd(true, true);
    let target = Target::ShaClass(vec![4, 9]);
    let (a, b) = prepare_pair(&tr, &te, &spec, &target).unwrap();
    let cfg = quick_config();
    let f1 = in_pool(1, || mlp_fit(&a, &b, &cfg).unwrap());
    let f2 = in_pool(3, || mlp_fit(&a, &b, &cfg).unwrap());
    assert_eq!(f1.model, f2.model);
    assert_eq!(f1.history, f2.history);
    let p = f1.model.predict_proba(&b.x).unwrap();
    assert_eq!(p, f1.model.predict_proba(&b.x).unwrap());

    let other = mlp_fit(&a, &b, &TrainConfig { seed: 6, ..cfg }).unwrap();
    assert_ne!(other.model.params, f1.model.params);
}
