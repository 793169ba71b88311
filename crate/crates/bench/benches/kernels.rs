use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use pdnet_bench::{phantom_volume, random_tensor};
use pdnet_core::layers::{conv3d_backward, conv3d_forward, maxpool3d_forward, ActivationKind, Conv3d, MaxPool3d, Mode};
use pdnet_core::model::{ActivationFamily, ArchitectureSpec, Model};
use pdnet_core::preprocess::{affine_resample, make_similarity, normalize_integral, normalize_max, DEFAULT_TOP_FRACTION};
use pdnet_core::train::{fit, TrainConfig};
use pdnet_core::Label;

fn conv(c: &mut Criterion) {
    let mut g = c.benchmark_group("conv3d");
    // first alexnet3d layer at phantom and full resolution
    for (name, dims) in [("24x28x24", [1, 24, 28, 24]), ("57x69x57", [1, 57, 69, 57])] {
        let x = random_tensor(&dims, 1);
        let layer = Conv3d::new(random_tensor(&[8, 1, 5, 5, 5], 2), vec![0.0; 8], [1; 3], [0; 3], ActivationKind::Relu).unwrap();
        let out = conv3d_forward(&layer, &x).unwrap();
        let grad = random_tensor(out.dims(), 3);
        g.bench_with_input(BenchmarkId::new("forward", name), &x, |b, x| b.iter(|| conv3d_forward(&layer, black_box(x)).unwrap()));
        g.bench_with_input(BenchmarkId::new("backward", name), &x, |b, x| {
            b.iter(|| conv3d_backward(&layer, black_box(x), &grad).unwrap())
        });
    }
    g.finish();
}

fn pool(c: &mut Criterion) {
    let x = random_tensor(&[8, 20, 24, 20], 4);
    let p = MaxPool3d::new(2).unwrap();
    c.bench_function("maxpool3d/8x20x24x20", |b| b.iter(|| maxpool3d_forward(&p, black_box(&x)).unwrap()));
}

fn preprocessing(c: &mut Criterion) {
    let v = phantom_volume([57, 69, 57], 5);
    let a = make_similarity(1.02, [3.0, -2.0, 4.0], [1.0, 0.5, -1.0]).unwrap().about([28.0, 34.0, 28.0]);
    let mut g = c.benchmark_group("preprocess/57x69x57");
    g.bench_function("normalize_integral", |b| b.iter(|| normalize_integral(black_box(&v)).unwrap()));
    g.bench_function("normalize_max", |b| b.iter(|| normalize_max(black_box(&v), DEFAULT_TOP_FRACTION).unwrap()));
    g.bench_function("affine_resample", |b| b.iter(|| affine_resample(black_box(&v), &a, v.dims()).unwrap()));
    g.finish();
}

fn model(c: &mut Criterion) {
    let shape = [24, 28, 24];
    let spec = ArchitectureSpec::alexnet3d(ActivationFamily::Relu).with_input_shape(shape).with_width_scale(0.5);
    let m = Model::build(spec, 0).unwrap();
    let inputs: Vec<_> = (0..16).map(|i| phantom_volume(shape, i).into_tensor().reshape(&[1, 24, 28, 24]).unwrap()).collect();
    let labels: Vec<Label> = (0..16).map(|i| if i % 2 == 0 { Label::Control } else { Label::Pd }).collect();
    let cfg = TrainConfig { epochs: 1, batch_size: 16, ..Default::default() };
    let mut g = c.benchmark_group("alexnet3d-half/24x28x24");
    g.sample_size(10);
    g.bench_function("infer", |b| b.iter(|| m.predict_proba(black_box(&inputs[0]), Mode::Infer, 0).unwrap()));
    g.bench_function("train_step_batch16", |b| b.iter(|| fit(m.clone(), black_box(&inputs), &labels, &cfg).unwrap()));
    g.finish();
}

criterion_group!(benches, conv, pool, preprocessing, model);
criterion_main!(benches);
