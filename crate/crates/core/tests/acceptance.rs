//! Acceptance criteria. Each test prints one `criterion N ... PASS|FAIL`
//! line. Tests share one lock so timing measurements run alone.
//!
//! Criterion 7 (full CIFAR-10 recipe) takes hours and is documented in the
//! README instead of running here.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::sync::Mutex;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use increg_core::compact::{bench, build_plan, compact, masked, BenchConfig, FlopsAccount};
use increg_core::data::{synthetic_blobs, BatchSampler, BlobsConfig, Splits};
use increg_core::increg::{
    build_groups, delta_lambda_at, run_pruning, target_count, zero_group, GroupKind, GroupState,
    PruneOutcome, PruneSchedule,
};
use increg_core::nn::{
    evaluate, presets, train, Architecture, GroupPenalty, Layer, LayerSpec, Network, TrainConfig,
};
use increg_core::theorem::{library, minimize, theorem1_suite, Quadratic};
use increg_core::{Shape3, Tensor4};

static LOCK: Mutex<()> = Mutex::new(());

fn report(id: u32, name: &str, started: Instant, failures: &[String]) {
    let status = if failures.is_empty() { "PASS" } else { "FAIL" };
    println!(
        "criterion {id} [{name}] ... {status} ({:.1} s)",
        started.elapsed().as_secs_f64()
    );
    for f in failures {
        println!("    {f}");
    }
    assert!(failures.is_empty(), "criterion {id} failed: {failures:?}");
}

// ---------------------------------------------------------------- toy setup

const WEIGHT_DECAY: f64 = 5e-3;
/// Pruning threshold for the toy net. Its He-initialised weights are O(0.3)
/// and SGD noise keeps penalised groups near 1e-4, so the library default
/// of 1e-5 would need penalties far beyond the stable step size.
const TOY_EPSILON: f64 = 1e-3;

fn toy_data(seed: u64) -> Splits {
    let mut s = synthetic_blobs(&BlobsConfig {
        classes: 4,
        seed,
        ..BlobsConfig::default()
    })
    .unwrap();
    s.normalize();
    s
}

fn toy_config() -> TrainConfig {
    TrainConfig {
        base_lr: 0.05,
        momentum: 0.9,
        weight_decay: WEIGHT_DECAY,
        batch_size: 32,
        max_iters: 60_000,
        ..TrainConfig::default()
    }
}

/// Pretraining length. Pruning starts from a converged model whose weight
/// norms have settled under weight decay.
const PRETRAIN_ITERS: u64 = 4000;

fn pretrained(seed: u64, data: &Splits) -> (Network<f32>, BatchSampler) {
    let mut net = Network::<f32>::new(presets::toy(4), seed).unwrap();
    let mut sampler = BatchSampler::new(data.train.len(), seed);
    let layers = net.layers().len();
    train(&mut net, &data.train, &mut sampler, &toy_config(), &GroupPenalty::none(layers), 0, PRETRAIN_ITERS, |_, _| {})
        .unwrap();
    (net, sampler)
}

fn toy_schedule(ratio: f64, speed: Option<f64>, retrain: u64) -> PruneSchedule {
    let mut s = PruneSchedule::uniform(&presets::toy(4), ratio, GroupKind::Column);
    s.epsilon = TOY_EPSILON;
    s.update_interval = 2;
    s.speed = speed;
    s.retrain_iters = retrain;
    s
}

fn prune_toy(seed: u64, ratio: f64, speed: Option<f64>, retrain: u64) -> (PruneOutcome<f32>, Splits) {
    let data = toy_data(seed);
    let (net, mut sampler) = pretrained(seed, &data);
    let out = run_pruning(net, &data.train, &toy_config(), &toy_schedule(ratio, speed, retrain), &mut sampler)
        .unwrap_or_else(|e| panic!("pruning seed {seed} ratio {ratio}: {e}"));
    (out, data)
}

// -------------------------------------------------------------- criterion 1

#[test]
fn criterion_1_theorem() {
    let _g = LOCK.lock().unwrap_or_else(|e| e.into_inner());
    let t = Instant::now();
    let mut fail = Vec::new();
    let q = Quadratic::default();
    for (lambda, expect) in [(1.0, 2.0 / 3.0), (2.0, 0.5)] {
        match minimize(&q, lambda, 0.0) {
            Ok(r) if (r.omega_star - expect).abs() <= 1e-8 => {}
            other => fail.push(format!("omega*({lambda}) = {other:?}, expected {expect}")),
        }
    }
    let suite = theorem1_suite(&library(), &[0.1, 0.5, 1.0, 2.0], &[1e-3, 1e-2, 1e-1]).unwrap();
    if suite.rows.is_empty() {
        fail.push("suite produced no rows".into());
    }
    for r in suite.rows.iter().filter(|r| !r.shrinks) {
        fail.push(format!("no shrinkage: {r:?}"));
    }
    println!(
        "    {} continuation checks, {} flagged basin jumps, {} skipped starts",
        suite.rows.len(),
        suite.jumps(),
        suite.skipped
    );
    if t.elapsed().as_secs_f64() > 5.0 {
        fail.push(format!("runtime {:?} over 5 s", t.elapsed()));
    }
    report(1, "theorem 1 shrinkage", t, &fail);
}

// -------------------------------------------------------------- criterion 2

#[test]
fn criterion_2_delta_lambda_law() {
    let _g = LOCK.lock().unwrap_or_else(|e| e.into_inner());
    let t = Instant::now();
    let mut fail = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut tested = 0;
    while tested < 1000 {
        let n: usize = rng.random_range(2..200);
        let ratio: f64 = rng.random_range(0.0..1.0);
        let speed: f64 = 10f64.powf(rng.random_range(-6.0..0.0));
        let boundary = ratio * n as f64;
        if !(boundary > 0.0 && (n as f64 - 1.0) - boundary > 0.0) {
            assert!(delta_lambda_at(0.0, ratio, n, speed).is_err());
            continue;
        }
        tested += 1;
        let d = |r: f64| delta_lambda_at(r, ratio, n, speed).unwrap();
        if d(0.0) != speed || d(boundary) != 0.0 || d(n as f64 - 1.0) != -speed {
            fail.push(format!("endpoints n={n} R={ratio} A={speed}: {} {} {}", d(0.0), d(boundary), d(n as f64 - 1.0)));
        }
        let mut prev = f64::INFINITY;
        for r in 0..n {
            let v = d(r as f64);
            let rf = r as f64;
            let sign_ok = if rf < boundary { v > 0.0 } else if rf == boundary { v == 0.0 } else { v < 0.0 };
            if !(v < prev) || !sign_ok || v.abs() > speed {
                fail.push(format!("shape n={n} R={ratio} r={r}: {v}"));
                break;
            }
            prev = v;
        }
    }
    if t.elapsed().as_secs_f64() > 1.0 {
        fail.push(format!("runtime {:?} over 1 s", t.elapsed()));
    }
    report(2, "delta-lambda law", t, &fail);
}

// -------------------------------------------------------------- criterion 3

fn check_run(out: &PruneOutcome<f32>, fail: &mut Vec<String>, tag: &str) {
    for l in &out.report.summary.layers {
        let scanned = out.groups.iter().filter(|g| g.layer == l.layer && g.pruned).count();
        let want = target_count(l.ratio, l.groups);
        if scanned != want || l.pruned != want {
            fail.push(format!("{tag} layer {}: {scanned} pruned, want {want}", l.layer));
        }
    }
    let mut pruned_at: std::collections::HashMap<(usize, usize), u64> = Default::default();
    for r in &out.report.rows {
        if r.lambda_g < 0.0 {
            fail.push(format!("{tag} negative lambda at step {}: {r:?}", r.step));
            return;
        }
        let key = (r.layer, r.group_id);
        match (r.pruned, pruned_at.get(&key)) {
            (true, None) => {
                pruned_at.insert(key, r.step);
            }
            (false, Some(s)) => {
                fail.push(format!("{tag} group {key:?} unpruned after step {s}"));
                return;
            }
            _ => {}
        }
    }
}

#[test]
fn criterion_3_convergence_count() {
    let _g = LOCK.lock().unwrap_or_else(|e| e.into_inner());
    let t = Instant::now();
    let mut fail = Vec::new();
    for ratio in [0.25, 0.5, 0.78] {
        let (out, _) = prune_toy(0, ratio, None, 0);
        let counts: Vec<String> = out
            .report
            .summary
            .layers
            .iter()
            .map(|l| format!("{}/{}", l.pruned, l.groups))
            .collect();
        println!(
            "    R={ratio}: pruned {} after {} iterations",
            counts.join(", "),
            out.report.summary.prune_iters
        );
        check_run(&out, &mut fail, &format!("R={ratio}"));
    }
    if t.elapsed().as_secs_f64() > 300.0 {
        fail.push(format!("runtime {:?} over 5 min", t.elapsed()));
    }
    report(3, "exact pruned counts", t, &fail);
}

// -------------------------------------------------------------- criterion 4

fn direct_conv(x: &[f64], k: &Tensor4<f64>, bias: &[f64], g: &increg_core::tensor::ConvGeometry) -> Vec<f64> {
    let [n, c, kh, kw] = k.dims();
    let (ho, wo) = (g.out_h(), g.out_w());
    let mut out = vec![0.0; n * ho * wo];
    for f in 0..n {
        for oh in 0..ho {
            for ow in 0..wo {
                let mut s = bias[f];
                for ch in 0..c {
                    for i in 0..kh {
                        for j in 0..kw {
                            let ih = (oh * g.stride + i) as isize - g.pad as isize;
                            let iw = (ow * g.stride + j) as isize - g.pad as isize;
                            if ih >= 0 && iw >= 0 && (ih as usize) < g.in_h && (iw as usize) < g.in_w {
                                s += k.get(f, ch, i, j) * x[(ch * g.in_h + ih as usize) * g.in_w + iw as usize];
                            }
                        }
                    }
                }
                out[(f * ho + oh) * wo + ow] = s;
            }
        }
    }
    out
}

fn random_tensor(rng: &mut ChaCha8Rng, n: usize, s: Shape3) -> Tensor4<f64> {
    let data = (0..n * s.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
    Tensor4::from_vec([n, s.channels, s.height, s.width], data).unwrap()
}

fn lowering_vs_direct(rng: &mut ChaCha8Rng, fail: &mut Vec<String>) {
    let mut done = 0;
    while done < 50 {
        let input = Shape3::new(rng.random_range(1..5), rng.random_range(3..13), rng.random_range(3..13));
        let pad = rng.random_range(0..3);
        let kh = rng.random_range(1..6);
        let kw = rng.random_range(1..6);
        if kh > input.height + 2 * pad || kw > input.width + 2 * pad {
            continue;
        }
        let arch = Architecture {
            input,
            layers: vec![LayerSpec::Conv {
                filters: rng.random_range(1..7),
                kernel_h: kh,
                kernel_w: kw,
                stride: rng.random_range(1..4),
                pad,
                prune_exempt: false,
                columns: None,
            }],
        };
        let mut net = Network::<f64>::new(arch, rng.random()).unwrap();
        net.conv_mut(0).unwrap().bias.iter_mut().for_each(|b| *b = rng.random_range(-1.0..1.0));
        let x = random_tensor(rng, 2, input);
        let y = net.predict(&x).unwrap();
        let c = net.conv(0).unwrap();
        for n in 0..2 {
            let want = direct_conv(x.sample(n), &c.kernel(), &c.bias, &c.geometry);
            let worst = y
                .row(n)
                .iter()
                .zip(&want)
                .map(|(a, b)| (a - b).abs() / b.abs().max(1e-6))
                .fold(0.0, f64::max);
            if worst > 1e-6 {
                fail.push(format!("geometry {:?}: rel {worst:e}", c.geometry));
            }
        }
        done += 1;
    }
}

fn gradients_vs_fd(fail: &mut Vec<String>) {
    // Every layer type: strided padded conv, relu, overlapping max-pool,
    // fully connected, softmax cross-entropy.
    let arch = Architecture {
        input: Shape3::new(2, 7, 7),
        layers: vec![
            LayerSpec::conv(3, 3, 2, 1),
            LayerSpec::Relu,
            LayerSpec::conv(4, 2, 1, 0),
            LayerSpec::MaxPool { size: 2, stride: 1 },
            LayerSpec::FullyConnected { out: 5 },
            LayerSpec::Relu,
            LayerSpec::FullyConnected { out: 3 },
            LayerSpec::SoftmaxXent,
        ],
    };
    let mut rng = ChaCha8Rng::seed_from_u64(40);
    let mut net = Network::<f64>::new(arch, 41).unwrap();
    for (k, t) in net.tensors_mut().into_iter().enumerate() {
        if k % 4 == 1 {
            t.iter_mut().for_each(|v| *v = rng.random_range(-0.1..0.1));
        }
    }
    let x = random_tensor(&mut rng, 3, net.input_shape());
    let labels = [0, 1, 2];
    let (_, grads) = net.loss_and_grad(&x, &labels).unwrap();
    let h = 1e-4;
    for idx in 0..net.layers().len() {
        let Some(g) = &grads.layers[idx] else { continue };
        let mut worst = 0.0f64;
        for (k, an) in g.weight.iter().chain(&g.bias).enumerate() {
            let eval = |d: f64| {
                let mut m = net.clone();
                let (w, b) = match &mut m.layers_mut()[idx] {
                    Layer::Conv(c) => (c.weight.as_mut_slice(), &mut c.bias),
                    Layer::FullyConnected(f) => (f.weight.as_mut_slice(), &mut f.bias),
                    _ => unreachable!(),
                };
                if k < w.len() {
                    w[k] += d;
                } else {
                    b[k - w.len()] += d;
                }
                m.loss_and_grad(&x, &labels).unwrap().0
            };
            let fd = (eval(h) - eval(-h)) / (2.0 * h);
            worst = worst.max((fd - an).abs() / fd.abs().max(an.abs()).max(1e-3));
        }
        if worst > 1e-5 {
            fail.push(format!("layer {idx}: gradient rel error {worst:e}"));
        }
    }
}

fn masked_vs_compact(net: &Network<f32>, groups: &[GroupState], inputs: usize, seed: u64, tag: &str, fail: &mut Vec<String>) {
    let reference = masked(net, groups);
    let small = match build_plan(net, groups).and_then(|p| compact(net, &p)) {
        Ok(s) => s,
        Err(e) => {
            fail.push(format!("{tag}: {e}"));
            return;
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = net.input_shape();
    let data: Vec<f32> = (0..inputs * s.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
    let x = Tensor4::from_vec([inputs, s.channels, s.height, s.width], data).unwrap();
    let a = reference.predict(&x).unwrap();
    let b = small.predict(&x).unwrap();
    let scale = a.as_slice().iter().fold(0.0f32, |m, v| m.max(v.abs())).max(1e-3);
    let worst = a
        .as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(p, q)| ((p - q).abs() / p.abs().max(1e-3 * scale)) as f64)
        .fold(0.0, f64::max);
    if worst > 1e-5 {
        fail.push(format!("{tag}: masked vs compact rel {worst:e}"));
    }
}

fn random_prune(net: &mut Network<f32>, layer: usize, kind: GroupKind, frac: f64, rng: &mut ChaCha8Rng) -> Vec<GroupState> {
    let mut g = build_groups(net, layer, kind).unwrap();
    let k = ((g.len() as f64 * frac) as usize).clamp(1, g.len() - 1);
    let mut ids: Vec<usize> = (0..g.len()).collect();
    for i in 0..k {
        let j = rng.random_range(i..ids.len());
        ids.swap(i, j);
    }
    for &i in &ids[..k] {
        g[i].pruned = true;
        zero_group(net, &g[i]);
    }
    g
}

#[test]
fn criterion_4_oracles() {
    let _g = LOCK.lock().unwrap_or_else(|e| e.into_inner());
    let t = Instant::now();
    let mut fail = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    lowering_vs_direct(&mut rng, &mut fail);
    gradients_vs_fd(&mut fail);

    // Plans from the scheduler.
    for ratio in [0.25, 0.78] {
        let (out, _) = prune_toy(1, ratio, None, 0);
        masked_vs_compact(&out.net, &out.groups, 100, 5, &format!("toy scheduler R={ratio}"), &mut fail);
    }
    // Random plans of every kind on the toy net.
    for kind in [GroupKind::Row, GroupKind::Column, GroupKind::Channel] {
        for layer in [0, 2] {
            let mut net = Network::<f32>::new(presets::toy(4), 7).unwrap();
            let mut groups = random_prune(&mut net, layer, kind, 0.5, &mut rng);
            if kind == GroupKind::Column {
                groups.extend(random_prune(&mut net, 2 - layer, kind, 0.3, &mut rng));
            }
            masked_vs_compact(&net, &groups, 100, 6, &format!("toy {kind} layer {layer}"), &mut fail);
        }
    }
    // ConvNet at a 2x FLOPs reduction.
    let mut net = Network::<f32>::new(presets::convnet(), 8).unwrap();
    let mut groups = Vec::new();
    for layer in [0, 3, 6] {
        groups.extend(random_prune(&mut net, layer, GroupKind::Column, 0.5, &mut rng));
    }
    masked_vs_compact(&net, &groups, 100, 9, "convnet 2x", &mut fail);

    if t.elapsed().as_secs_f64() > 120.0 {
        fail.push(format!("runtime {:?} over 2 min", t.elapsed()));
    }
    report(4, "oracle equivalences", t, &fail);
}

// -------------------------------------------------------------- criterion 5

fn prune_columns(net: &mut Network<f32>, layer: usize, count: usize) -> Vec<GroupState> {
    let mut g = build_groups(net, layer, GroupKind::Column).unwrap();
    // Spread pruned columns over the lowered width.
    let n = g.len();
    for i in 0..count {
        let id = i * n / count;
        g[id].pruned = true;
        zero_group(net, &g[id]);
    }
    g
}

#[test]
fn criterion_5_flops_and_speed() {
    let _g = LOCK.lock().unwrap_or_else(|e| e.into_inner());
    let t = Instant::now();
    let mut fail = Vec::new();

    // Exact 1/(1-p) per layer for every prunable count.
    for (arch, layers) in [(presets::toy(4), vec![0, 2]), (presets::convnet(), vec![0, 3, 6])] {
        for &layer in &layers {
            let base = Network::<f32>::new(arch.clone(), 0).unwrap();
            let n = base.conv(layer).unwrap().columns.len();
            for k in [1, n / 4, n / 2, n - 1] {
                let mut net = base.clone();
                let g = prune_columns(&mut net, layer, k);
                let small = compact(&net, &build_plan(&net, &g).unwrap()).unwrap();
                let acc = FlopsAccount::compare(&base, &small);
                let row = acc.layers.iter().find(|r| r.layer == layer).unwrap();
                // ratio == n / (n - k), compared in integers.
                if row.flops_base * (n - k) as u64 != row.flops_pruned * n as u64 {
                    fail.push(format!("layer {layer}: {k}/{n} columns gave {}/{}", row.flops_base, row.flops_pruned));
                }
            }
        }
    }

    // Uniform 50% column pruning of the ConvNet preset.
    let base = Network::<f32>::new(presets::convnet(), 0).unwrap();
    let mut net = base.clone();
    let mut groups = Vec::new();
    for layer in [0, 3, 6] {
        let n = net.conv(layer).unwrap().columns.len();
        groups.extend(prune_columns(&mut net, layer, n / 2));
    }
    let small = compact(&net, &build_plan(&net, &groups).unwrap()).unwrap();
    let acc = FlopsAccount::compare(&base, &small);
    println!(
        "    convnet conv GFLOPs {:.4} -> {:.4} (x{:.2})",
        acc.conv_base as f64 * 1e-9,
        acc.conv_pruned as f64 * 1e-9,
        acc.conv_speedup()
    );
    if acc.conv_base != 2 * acc.conv_pruned {
        fail.push(format!("conv FLOPs {} vs {}", acc.conv_base, acc.conv_pruned));
    }

    let cfg = BenchConfig {
        batch: 10,
        repeats: 50,
        warmup: 5,
        threads: 1,
        seed: 0,
    };
    let rep = bench(&base, &small, &cfg).unwrap();
    println!(
        "    conv time {:.2} ms -> {:.2} ms (x{:.2}); cpu {:?}, {} logical cpus, {} worker thread",
        rep.conv.ms_base, rep.conv.ms_pruned, rep.conv.ratio, rep.hardware.cpu, rep.hardware.logical_cpus, cfg.threads
    );
    if rep.conv.ratio < 1.4 {
        fail.push(format!("conv wall-time ratio {:.3} < 1.4", rep.conv.ratio));
    }
    if t.elapsed().as_secs_f64() > 120.0 {
        fail.push(format!("runtime {:?} over 2 min", t.elapsed()));
    }
    report(5, "FLOPs and speedup", t, &fail);
}

// -------------------------------------------------------------- criterion 6

#[test]
fn criterion_6_weight_energy() {
    let _g = LOCK.lock().unwrap_or_else(|e| e.into_inner());
    let t = Instant::now();
    let mut fail = Vec::new();
    // Heaviest pruning of criterion 3. At R = 0.25 this over-sized toy net
    // has no need to grow its surviving columns.
    let ratio = 0.78;
    for seed in [10, 11, 12] {
        let (out, _) = prune_toy(seed, ratio, None, 0);
        let rows = &out.report.rows;
        let last = *out.report.steps().last().unwrap();
        for l in &out.report.summary.layers {
            let boundary = ratio * l.groups as f64;
            let end: Vec<_> = rows.iter().filter(|r| r.step == last && r.layer == l.layer).collect();
            let keep: Vec<usize> = end
                .iter()
                .filter(|r| r.inst_rank as f64 >= boundary)
                .map(|r| r.group_id)
                .collect();
            let mean = |step: u64| {
                let v: Vec<f64> = rows
                    .iter()
                    .filter(|r| r.step == step && r.layer == l.layer && keep.contains(&r.group_id))
                    .map(|r| r.l1)
                    .collect();
                v.iter().sum::<f64>() / v.len() as f64
            };
            let (before, after) = (mean(0), mean(last));
            println!("    seed {seed} layer {}: kept-group mean L1 {before:.4} -> {after:.4}", l.layer);
            if !(after >= before) {
                fail.push(format!("seed {seed} layer {}: mean L1 fell {before} -> {after}", l.layer));
            }
            if let Some(r) = end.iter().find(|r| r.pruned && !(r.l1 < TOY_EPSILON)) {
                fail.push(format!("seed {seed}: pruned group with l1 {}", r.l1));
            }
        }
        for g in out.groups.iter().filter(|g| g.pruned) {
            let w = out.net.conv(g.layer).unwrap().weight.as_slice();
            let l1: f64 = g.members.iter().map(|&i| w[i].abs() as f64).sum();
            if !(l1 < TOY_EPSILON) {
                fail.push(format!("seed {seed}: group {}:{} ends with l1 {l1}", g.layer, g.id));
            }
        }
    }
    report(6, "weight-energy balance", t, &fail);
}

// -------------------------------------------------------------- criterion 8

#[test]
fn criterion_8_speed_sweep() {
    let _g = LOCK.lock().unwrap_or_else(|e| e.into_inner());
    let t = Instant::now();
    let mut fail = Vec::new();
    let mut results = Vec::new();
    for speed in [WEIGHT_DECAY / 8.0, WEIGHT_DECAY / 2.0, 2.0 * WEIGHT_DECAY] {
        let (out, data) = prune_toy(20, 0.5, Some(speed), 400);
        let acc = evaluate(&out.net, &data.test, 256).unwrap().accuracy;
        let iters = out.report.summary.prune_iters;
        println!("    A={speed:e}: {iters} pruning iterations, test accuracy {acc:.4}");
        results.push((iters, acc));
    }
    let accs: Vec<f64> = results.iter().map(|r| r.1).collect();
    let spread = accs.iter().cloned().fold(f64::MIN, f64::max) - accs.iter().cloned().fold(f64::MAX, f64::min);
    if spread > 0.03 {
        fail.push(format!("accuracy spread {spread:.4} > 0.03"));
    }
    if !results.windows(2).all(|w| w[1].0 < w[0].0) {
        fail.push(format!("iterations not strictly decreasing: {results:?}"));
    }
    if t.elapsed().as_secs_f64() > 900.0 {
        fail.push(format!("runtime {:?} over 15 min", t.elapsed()));
    }
    report(8, "speed sweep", t, &fail);
}
