//! Central finite-difference gradient checks in 64-bit.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wkpnet::nn::{kd_loss, DistillParams, LayerSpec, Mode, Module, Tensor};

pub const EPS: f64 = 1e-3;
pub const TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, Copy, Default)]
pub struct GradReport {
    pub max_rel: f64,
    pub checked: usize,
    /// Coordinates within `EPS` of a kink (ReLU zero, pooling tie), detected
    /// by disagreeing one-sided differences.
    pub skipped: usize,
}

impl GradReport {
    pub fn passes(&self) -> bool {
        self.max_rel < TOLERANCE && self.kinks_within_budget()
    }

    fn kinks_within_budget(&self) -> bool {
        self.skipped * 20 <= self.checked + self.skipped
    }

    pub fn merge(self, other: GradReport) -> GradReport {
        GradReport {
            max_rel: self.max_rel.max(other.max_rel),
            checked: self.checked + other.checked,
            skipped: self.skipped + other.skipped,
        }
    }
}

pub fn rel_err(a: f64, n: f64) -> f64 {
    (a - n).abs() / (a.abs() + n.abs() + 1e-8)
}

fn random_tensor(rng: &mut impl Rng, shape: [usize; 4]) -> Tensor<f64> {
    let n = shape.iter().product();
    Tensor::from_vec(shape, (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
}

/// Objective values on the `±EPS` and `±EPS/2` stencils around one coordinate.
struct Probe {
    plus: f64,
    minus: f64,
    half_plus: f64,
    half_minus: f64,
}

impl Probe {
    fn measure(mut f: impl FnMut(f64) -> f64) -> Probe {
        Probe {
            plus: f(EPS),
            minus: f(-EPS),
            half_plus: f(EPS / 2.0),
            half_minus: f(-EPS / 2.0),
        }
    }

    /// The central difference at `EPS`, or `None` when it disagrees with the
    /// half-width stencil, i.e. a kink lies inside the stencil.
    fn slope(&self) -> Option<f64> {
        let wide = (self.plus - self.minus) / (2.0 * EPS);
        let narrow = (self.half_plus - self.half_minus) / EPS;
        ((wide - narrow).abs() <= 1e-5 * wide.abs() + 1e-7).then_some(wide)
    }
}

fn tally(report: &mut GradReport, analytic: f64, probe: Probe) {
    match probe.slope() {
        Some(num) => {
            report.max_rel = report.max_rel.max(rel_err(analytic, num));
            report.checked += 1;
        }
        None => report.skipped += 1,
    }
}

/// Builds `spec` with randomized parameters and checks input and parameter
/// gradients on a random batch of `shape`. Draws that land too close to a
/// kink are resampled.
pub fn check_layer(spec: &LayerSpec, shape: [usize; 4], seed: u64) -> GradReport {
    let mut report = check_layer_once(spec, shape, seed);
    for attempt in 1..8 {
        if report.kinks_within_budget() {
            break;
        }
        report = check_layer_once(spec, shape, seed + 1000 * attempt);
    }
    report
}

fn check_layer_once(spec: &LayerSpec, shape: [usize; 4], seed: u64) -> GradReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut module = Module::<f64>::build(spec, "probe", &mut rng).unwrap();
    for p in module.params_mut() {
        p.value.iter_mut().for_each(|v| *v = rng.random_range(-1.0..1.0));
    }
    let x = random_tensor(&mut rng, shape);
    let y = module.forward(&x, Mode::Train).unwrap();
    let r = random_tensor(&mut rng, y.shape());
    let dx = module.backward(&r).unwrap();
    let analytic_params: Vec<Vec<f64>> = module.params().iter().map(|p| p.grad.clone()).collect();

    let objective = |m: &mut Module<f64>, x: &Tensor<f64>| -> f64 {
        let y = m.forward(x, Mode::Train).unwrap();
        y.data().iter().zip(r.data()).map(|(a, b)| a * b).sum()
    };
    let mut report = GradReport::default();
    for i in 0..x.len() {
        let probe = Probe::measure(|h| {
            let mut xp = x.clone();
            xp.data_mut()[i] += h;
            objective(&mut module, &xp)
        });
        tally(&mut report, dx.data()[i], probe);
    }
    for (pi, analytic) in analytic_params.iter().enumerate() {
        for (j, &a) in analytic.iter().enumerate() {
            let orig = module.params()[pi].value[j];
            let probe = Probe::measure(|h| {
                module.params_mut()[pi].value[j] = orig + h;
                objective(&mut module, &x)
            });
            module.params_mut()[pi].value[j] = orig;
            tally(&mut report, a, probe);
        }
    }
    report
}

/// Checks the loss gradient w.r.t. the student logits. `teacher = false`
/// gives plain cross-entropy.
pub fn check_loss(
    batch: usize,
    classes: usize,
    teacher: bool,
    params: DistillParams,
    seed: u64,
) -> GradReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shape = [batch, classes, 1, 1];
    let zs = random_tensor(&mut rng, shape).map(|v| 3.0 * v);
    let zt = random_tensor(&mut rng, shape).map(|v| 3.0 * v);
    let labels: Vec<usize> = (0..batch).map(|_| rng.random_range(0..classes)).collect();
    let teacher = teacher.then_some(&zt);
    let params = if teacher.is_some() {
        params
    } else {
        DistillParams { temperature: 1.0, alpha: 0.0, t2_scaling: false }
    };
    let loss = |z: &Tensor<f64>| kd_loss(z, teacher, &labels, params).unwrap().total;
    let grad = kd_loss(&zs, teacher, &labels, params).unwrap().grad;
    let mut report = GradReport::default();
    for i in 0..zs.len() {
        let probe = Probe::measure(|h| {
            let mut z = zs.clone();
            z.data_mut()[i] += h;
            loss(&z)
        });
        tally(&mut report, grad.data()[i], probe);
    }
    report
}

/// Every layer kind and loss at three shapes each, as `(label, report)`.
pub fn full_suite() -> Vec<(String, GradReport)> {
    let mut out = Vec::new();
    fn run(out: &mut Vec<(String, GradReport)>, label: &str, spec: LayerSpec, shapes: &[[usize; 4]]) {
        for (k, &s) in shapes.iter().enumerate() {
            out.push((format!("{label} {s:?}"), check_layer(&spec, s, 100 + k as u64)));
        }
    }
    run(
        &mut out,
        "conv 3->4 k3 p1",
        LayerSpec::conv(3, 4, 3, 1, 1, 1, true),
        &[[2, 3, 5, 5], [1, 3, 4, 6], [3, 3, 3, 2]],
    );
    run(
        &mut out,
        "conv 4->6 k3 s2 g2",
        LayerSpec::conv(4, 6, 3, 2, 1, 2, false),
        &[[2, 4, 5, 5], [2, 4, 6, 4], [1, 4, 7, 3]],
    );
    run(
        &mut out,
        "conv 6->6 depthwise",
        LayerSpec::conv(6, 6, 3, 1, 1, 6, true),
        &[[2, 6, 4, 4], [1, 6, 3, 5], [2, 6, 2, 2]],
    );
    run(
        &mut out,
        "conv 4->2 pointwise",
        LayerSpec::conv(4, 2, 1, 1, 0, 1, true),
        &[[2, 4, 3, 3], [3, 4, 1, 5], [1, 4, 4, 2]],
    );
    run(
        &mut out,
        "batch norm",
        LayerSpec::BatchNorm { channels: 3 },
        &[[2, 3, 4, 4], [4, 3, 2, 3], [2, 3, 1, 1]],
    );
    run(&mut out, "relu", LayerSpec::Relu, &[[2, 3, 4, 4], [1, 5, 2, 3], [3, 1, 6, 1]]);
    run(&mut out, "sigmoid", LayerSpec::Sigmoid, &[[2, 3, 4, 4], [1, 5, 2, 3], [3, 1, 6, 1]]);
    run(
        &mut out,
        "maxpool 1x2",
        LayerSpec::MaxPool { kh: 1, kw: 2 },
        &[[2, 3, 4, 4], [1, 2, 3, 6], [2, 1, 2, 5]],
    );
    run(
        &mut out,
        "maxpool 2x2",
        LayerSpec::MaxPool { kh: 2, kw: 2 },
        &[[2, 2, 4, 4], [1, 3, 5, 4], [2, 1, 2, 6]],
    );
    run(
        &mut out,
        "adaptive avgpool",
        LayerSpec::AdaptiveAvgPool,
        &[[2, 3, 4, 4], [1, 5, 2, 3], [3, 2, 1, 7]],
    );
    run(&mut out, "flatten", LayerSpec::Flatten, &[[2, 3, 2, 2], [1, 4, 1, 3], [3, 2, 3, 1]]);
    for (k, (i, o)) in [(12, 5), (7, 3), (20, 9)].into_iter().enumerate() {
        let spec = LayerSpec::Linear { in_features: i, out_features: o };
        out.push((format!("linear {i}->{o}"), check_layer(&spec, [3, i, 1, 1], 200 + k as u64)));
    }
    run(
        &mut out,
        "spatial attention k7",
        LayerSpec::SpatialAttention { kernel: 7 },
        &[[2, 3, 5, 4], [1, 2, 8, 3], [2, 4, 3, 3]],
    );
    run(
        &mut out,
        "resnext block identity",
        LayerSpec::ResNeXtBlock { in_channels: 4, mid_channels: 4, out_channels: 4, groups: 2, stride: 1 },
        &[[4, 4, 5, 5], [6, 4, 4, 3], [3, 4, 6, 4]],
    );
    run(
        &mut out,
        "resnext block projection",
        LayerSpec::ResNeXtBlock { in_channels: 2, mid_channels: 4, out_channels: 6, groups: 2, stride: 2 },
        &[[4, 2, 6, 6], [6, 2, 5, 4], [3, 2, 8, 4]],
    );
    for (k, (b, m)) in [(2, 4), (5, 3), (3, 10)].into_iter().enumerate() {
        out.push((
            format!("cross entropy {b}x{m}"),
            check_loss(b, m, false, DistillParams::default(), 300 + k as u64),
        ));
        out.push((
            format!("kd total T=5 alpha=0.5 {b}x{m}"),
            check_loss(b, m, true, DistillParams::default(), 400 + k as u64),
        ));
        out.push((
            format!("kd total T=5 alpha=0.5 t2 {b}x{m}"),
            check_loss(b, m, true, DistillParams { t2_scaling: true, ..Default::default() }, 500 + k as u64),
        ));
    }
    out
}
