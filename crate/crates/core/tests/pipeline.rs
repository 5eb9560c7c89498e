use std::path::Path;

use wkpnet::models::TeacherScale;
use wkpnet::nn::halving_lr;
use wkpnet::pipeline::{
    run_experiment_grid, train, CellMode, Featurizer, GridModels, GridSpec, ModelChoice, TrainConfig, TrainMode,
    CHECKPOINT_FILE, GRID_CSV,
};
use wkpnet::signalgen::{generate_dataset, Dataset, SignalConfig};
use wkpnet::wavelet::WaveletFamily;
use wkpnet::Error;

fn sanity_dataset(dir: &Path, seed: u64) -> Dataset {
    let cfg = SignalConfig {
        grid_rows: 2,
        grid_cols: 2,
        train_per_point: 8,
        test_per_point: 2,
        seed,
        ..SignalConfig::indoor()
    };
    let path = dir.join(format!("data{seed}"));
    generate_dataset(&cfg, &path, false).unwrap();
    Dataset::open(&path).unwrap()
}

fn quick(epochs: usize) -> TrainConfig {
    TrainConfig {
        epochs,
        seed: 5,
        ..TrainConfig::default()
    }
}

#[test]
fn learning_rate_halves_every_two_epochs() {
    assert_eq!(halving_lr(1e-3, 2, 0), 1e-3);
    assert_eq!(halving_lr(1e-3, 2, 1), 1e-3);
    assert_eq!(halving_lr(1e-3, 2, 2), 5e-4);
    assert_eq!(halving_lr(1e-3, 2, 3), 5e-4);
    for epoch in 0..20 {
        assert_eq!(halving_lr(1e-3, 2, epoch), 1e-3 * 0.5f64.powi((epoch / 2) as i32));
    }
    assert_eq!(halving_lr(1e-3, 2, 19), 1e-3 * 0.5f64.powi(9));
}

#[test]
fn training_is_bit_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let ds = sanity_dataset(dir.path(), 2);
    let cfg = quick(2);
    let a = train(&ds, &cfg, &dir.path().join("a"), false).unwrap();
    let b = train(&ds, &cfg, &dir.path().join("b"), false).unwrap();
    assert_eq!(std::fs::read(&a.checkpoint).unwrap(), std::fs::read(&b.checkpoint).unwrap());
    assert_eq!(a.epoch_losses, b.epoch_losses);
    let c = train(&ds, &TrainConfig { seed: 6, ..cfg.clone() }, &dir.path().join("c"), false).unwrap();
    assert_ne!(std::fs::read(&a.checkpoint).unwrap(), std::fs::read(&c.checkpoint).unwrap());
    assert!(matches!(
        train(&ds, &cfg, &dir.path().join("a"), false),
        Err(Error::OutputExists(_))
    ));
}

#[test]
fn distillation_contract() {
    let dir = tempfile::tempdir().unwrap();
    let ds = sanity_dataset(dir.path(), 3);
    let teacher_cfg = TrainConfig {
        model: ModelChoice::Teacher {
            scale: TeacherScale::Quarter,
        },
        ..quick(1)
    };
    let t = train(&ds, &teacher_cfg, &dir.path().join("teacher"), false).unwrap();
    let before = std::fs::read(&t.checkpoint).unwrap();
    let distill = |alpha: f64, out: &str| {
        let cfg = TrainConfig {
            alpha,
            mode: TrainMode::Distill {
                checkpoint: t.checkpoint.clone(),
                teacher_scale: TeacherScale::Quarter,
            },
            ..quick(2)
        };
        train(&ds, &cfg, &dir.path().join(out), false)
    };

    // alpha = 0 removes the teacher term entirely
    let d0 = distill(0.0, "d0").unwrap();
    let plain = train(&ds, &quick(2), &dir.path().join("plain"), false).unwrap();
    assert_eq!(std::fs::read(&d0.checkpoint).unwrap(), std::fs::read(&plain.checkpoint).unwrap());

    let d = distill(0.5, "d").unwrap();
    assert_ne!(std::fs::read(&d.checkpoint).unwrap(), std::fs::read(&plain.checkpoint).unwrap());
    assert_eq!(std::fs::read(&t.checkpoint).unwrap(), before, "teacher changed");

    // a teacher from another dataset is refused
    let other = sanity_dataset(dir.path(), 4);
    let cfg = TrainConfig {
        mode: TrainMode::Distill {
            checkpoint: t.checkpoint.clone(),
            teacher_scale: TeacherScale::Quarter,
        },
        ..quick(1)
    };
    assert!(matches!(
        train(&other, &cfg, &dir.path().join("x"), false),
        Err(Error::Incompatible(_))
    ));
    // and so is one built for a different featurizer
    let cfg = TrainConfig {
        featurizer: Featurizer::Wpd {
            basis: WaveletFamily::Haar,
            level: 5,
        },
        ..cfg
    };
    assert!(matches!(
        train(&ds, &cfg, &dir.path().join("y"), false),
        Err(Error::Incompatible(_))
    ));
}

#[test]
fn grid_runs_every_cell_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let ds = sanity_dataset(dir.path(), 7);
    let spec = GridSpec {
        bases: vec![WaveletFamily::Haar, WaveletFamily::Daubechies(4)],
        levels: vec![4, 5],
        include_stft: false,
        modes: vec![CellMode::Plain],
        seeds: vec![1],
    };
    let models = GridModels {
        teacher: TeacherScale::Quarter,
        student_width: 1,
    };
    let base = quick(1);
    let a = run_experiment_grid(&ds, &spec, models, &base, &dir.path().join("g1"), 2, false).unwrap();
    assert_eq!(a.outcomes.len(), 4);
    assert!(a.outcomes.iter().all(|o| o.result.is_ok()));
    let b = run_experiment_grid(&ds, &spec, models, &base, &dir.path().join("g2"), 1, false).unwrap();
    let strip = |csv: String| csv.lines().map(str::to_string).collect::<Vec<_>>();
    assert_eq!(strip(a.to_csv()), strip(b.to_csv()));
    let csv = std::fs::read_to_string(dir.path().join("g1").join(GRID_CSV)).unwrap();
    assert_eq!(csv.lines().count(), 5);
    assert!(csv.starts_with("cell_id,basis,level,featurizer,mode,seed,mde,std,cdf_1m,cdf_3m"));
    assert!(dir.path().join("g1/wpd-haar-L4-plain-s1").join(CHECKPOINT_FILE).exists());

    // a failing cell is recorded and the others still run
    let bad = GridSpec {
        levels: vec![5, 13],
        bases: vec![WaveletFamily::Haar],
        ..spec
    };
    let r = run_experiment_grid(&ds, &bad, models, &base, &dir.path().join("g3"), 1, false).unwrap();
    assert!(r.outcomes[0].result.is_ok());
    assert!(r.outcomes[1].result.is_err());
    assert!(r.to_csv().lines().nth(2).unwrap().contains("failed"));
}
