use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::data::{synthetic_blobs, BatchSampler, BlobsConfig};
use crate::tensor::{Shape3, Tensor4};
use crate::Error;

fn random_batch(rng: &mut ChaCha8Rng, n: usize, s: Shape3) -> Tensor4<f64> {
    let data = (0..n * s.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
    Tensor4::from_vec([n, s.channels, s.height, s.width], data).unwrap()
}

fn perturb(net: &mut Network<f64>, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = net.tensors_mut();
    // Biases start at zero; give them values so their gradients matter.
    for (k, slice) in t.iter_mut().enumerate() {
        if k % 4 == 1 {
            for v in slice.iter_mut() {
                *v = rng.random_range(-0.1..0.1);
            }
        }
    }
}

/// Direct evaluation of a sequential net on one sample, with no lowering.
fn oracle_forward(net: &Network<f64>, x: &[f64]) -> Vec<f64> {
    let mut a = x.to_vec();
    for (layer, shape) in net.layers().iter().zip(net.shapes()) {
        let (ci, hi, wi) = (shape.input.channels, shape.input.height, shape.input.width);
        let (co, ho, wo) = (shape.output.channels, shape.output.height, shape.output.width);
        a = match layer {
            Layer::Conv(c) => {
                let k = c.kernel();
                let g = c.geometry;
                let mut out = vec![0.0; co * ho * wo];
                for f in 0..co {
                    for oh in 0..ho {
                        for ow in 0..wo {
                            let mut s = c.bias[f];
                            for ch in 0..ci {
                                for kh in 0..g.kernel_h {
                                    for kw in 0..g.kernel_w {
                                        let ih = (oh * g.stride + kh) as isize - g.pad as isize;
                                        let iw = (ow * g.stride + kw) as isize - g.pad as isize;
                                        if ih < 0 || iw < 0 || ih >= hi as isize || iw >= wi as isize {
                                            continue;
                                        }
                                        s += k.get(f, ch, kh, kw)
                                            * a[(ch * hi + ih as usize) * wi + iw as usize];
                                    }
                                }
                            }
                            out[(f * ho + oh) * wo + ow] = s;
                        }
                    }
                }
                out
            }
            Layer::Relu => a.iter().map(|v| v.max(0.0)).collect(),
            Layer::MaxPool { size, stride } => {
                let mut out = vec![f64::NEG_INFINITY; co * ho * wo];
                for ch in 0..co {
                    for oh in 0..ho {
                        for ow in 0..wo {
                            for dh in 0..*size {
                                for dw in 0..*size {
                                    let v = a[(ch * hi + oh * stride + dh) * wi + ow * stride + dw];
                                    let o = &mut out[(ch * ho + oh) * wo + ow];
                                    *o = o.max(v);
                                }
                            }
                        }
                    }
                }
                out
            }
            Layer::FullyConnected(f) => (0..f.outputs)
                .map(|o| f.bias[o] + (0..f.inputs).map(|i| f.weight.get(o, i) * a[i]).sum::<f64>())
                .collect(),
            Layer::SoftmaxXent => a,
        };
    }
    a
}

fn strided_arch() -> Architecture {
    Architecture {
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
    }
}

#[test]
fn zero_network_has_uniform_loss() {
    let mut net = Network::<f64>::new(presets::toy(4), 1).unwrap();
    for t in net.tensors_mut() {
        t.fill(0.0);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let x = random_batch(&mut rng, 3, net.input_shape());
    let (loss, _) = net.loss_and_grad(&x, &[0, 1, 3]).unwrap();
    assert!((loss - 4f64.ln()).abs() < 1e-12);
}

#[test]
fn identity_conv_passes_input_through() {
    let arch = Architecture {
        input: Shape3::new(1, 3, 3),
        layers: vec![LayerSpec::conv(1, 1, 1, 0)],
    };
    let mut net = Network::<f64>::new(arch, 0).unwrap();
    net.conv_mut(0).unwrap().weight.set(0, 0, 1.0);
    let x = Tensor4::from_vec([1, 1, 3, 3], (0..9).map(f64::from).collect()).unwrap();
    let y = net.predict(&x).unwrap();
    assert_eq!(y.as_slice(), x.as_slice());
}

#[test]
fn forward_matches_direct_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for arch in [presets::toy(3), strided_arch()] {
        let mut net = Network::<f64>::new(arch, 11).unwrap();
        perturb(&mut net, 12);
        let x = random_batch(&mut rng, 4, net.input_shape());
        let y = net.predict(&x).unwrap();
        for n in 0..4 {
            let o = oracle_forward(&net, x.sample(n));
            for (a, b) in y.row(n).iter().zip(&o) {
                assert!((a - b).abs() <= 1e-10 * b.abs().max(1.0), "{a} vs {b}");
            }
        }
    }
}

fn check_gradients(arch: Architecture, seed: u64) {
    let mut net = Network::<f64>::new(arch, seed).unwrap();
    perturb(&mut net, seed + 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed + 2);
    let x = random_batch(&mut rng, 3, net.input_shape());
    let classes = net.classes();
    let labels: Vec<usize> = (0..3).map(|i| i % classes).collect();
    let (_, grads) = net.loss_and_grad(&x, &labels).unwrap();
    let h = 1e-4;
    let mut worst = 0.0f64;
    for idx in 0..net.layers().len() {
        let Some(g) = &grads.layers[idx] else { continue };
        let analytic: Vec<f64> = g.weight.iter().chain(&g.bias).copied().collect();
        for (k, an) in analytic.iter().enumerate() {
            let eval = |delta: f64| {
                let mut m = net.clone();
                let (w, b) = match &mut m.layers_mut()[idx] {
                    Layer::Conv(c) => (c.weight.as_mut_slice(), &mut c.bias),
                    Layer::FullyConnected(f) => (f.weight.as_mut_slice(), &mut f.bias),
                    _ => unreachable!(),
                };
                if k < w.len() {
                    w[k] += delta;
                } else {
                    b[k - w.len()] += delta;
                }
                m.loss_and_grad(&x, &labels).unwrap().0
            };
            let fd = (eval(h) - eval(-h)) / (2.0 * h);
            let err = (fd - an).abs() / (fd.abs().max(an.abs()).max(1e-3));
            worst = worst.max(err);
        }
    }
    assert!(worst < 1e-5, "worst relative gradient error {worst}");
}

#[test]
fn gradients_match_finite_differences() {
    check_gradients(presets::toy(3), 21);
    check_gradients(strided_arch(), 31);
}

#[test]
fn confident_prediction_has_small_gradient() {
    let arch = Architecture {
        input: Shape3::new(1, 1, 2),
        layers: vec![LayerSpec::FullyConnected { out: 2 }, LayerSpec::SoftmaxXent],
    };
    let mut net = Network::<f64>::new(arch, 0).unwrap();
    if let Layer::FullyConnected(f) = &mut net.layers_mut()[0] {
        f.weight = crate::Matrix::from_vec(2, 2, vec![50.0, 0.0, 0.0, 0.0]).unwrap();
    }
    let x = Tensor4::from_vec([1, 1, 1, 2], vec![1.0, 1.0]).unwrap();
    let (loss, g) = net.loss_and_grad(&x, &[0]).unwrap();
    assert!(loss < 1e-20);
    let pg = g.layers[0].as_ref().unwrap();
    assert!(pg.weight.iter().chain(&pg.bias).all(|v| v.abs() < 1e-20));
}

#[test]
fn blocked_relu_stops_gradient() {
    let mut net = Network::<f64>::new(presets::toy(3), 3).unwrap();
    net.conv_mut(0).unwrap().bias.fill(-100.0);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let x = random_batch(&mut rng, 2, net.input_shape());
    let (_, g) = net.loss_and_grad(&x, &[0, 1]).unwrap();
    let c0 = g.layers[0].as_ref().unwrap();
    assert!(c0.weight.iter().chain(&c0.bias).all(|v| *v == 0.0));
    let c2 = g.layers[2].as_ref().unwrap();
    assert!(c2.weight.iter().all(|v| *v == 0.0));
}

#[test]
fn backward_rejects_bad_labels() {
    let net = Network::<f64>::new(presets::toy(3), 3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let x = random_batch(&mut rng, 2, net.input_shape());
    assert!(net.loss_and_grad(&x, &[0]).is_err());
    assert!(net.loss_and_grad(&x, &[0, 3]).is_err());
}

fn single_weight_net() -> Network<f64> {
    let arch = Architecture {
        input: Shape3::new(1, 1, 1),
        layers: vec![LayerSpec::conv(1, 1, 1, 0)],
    };
    let mut net = Network::<f64>::new(arch, 0).unwrap();
    net.conv_mut(0).unwrap().weight.set(0, 0, 1.0);
    net
}

#[test]
fn sgd_weight_decay_example() {
    let mut net = single_weight_net();
    let cfg = TrainConfig {
        base_lr: 0.1,
        momentum: 0.0,
        weight_decay: 1.0,
        ..TrainConfig::default()
    };
    let mut g = Gradients {
        layers: vec![Some(ParamGrad {
            weight: vec![0.0],
            bias: vec![0.0],
        })],
    };
    sgd_step(&mut net, &mut g, &cfg, 0, &GroupPenalty::none(1)).unwrap();
    assert!((net.conv(0).unwrap().weight.get(0, 0) - 0.9).abs() < 1e-15);
}

#[test]
fn negative_group_factor_is_rejected() {
    let mut net = single_weight_net();
    let mut g = Gradients {
        layers: vec![Some(ParamGrad {
            weight: vec![0.0],
            bias: vec![0.0],
        })],
    };
    let pen = GroupPenalty {
        layers: vec![Some(LayerPenalty {
            lambda: vec![-1e-3],
            pruned: vec![false],
            pruned_bias: vec![false],
        })],
    };
    let r = sgd_step(&mut net, &mut g, &TrainConfig::default(), 0, &pen);
    assert!(matches!(r, Err(Error::Contract(_))));
}

fn blobs() -> crate::data::Splits {
    synthetic_blobs(&BlobsConfig {
        classes: 3,
        train: 96,
        val: 0,
        test: 0,
        ..BlobsConfig::default()
    })
    .unwrap()
}

#[test]
fn pruned_group_stays_zero() {
    let data = blobs();
    let mut net = Network::<f32>::new(presets::toy(3), 4).unwrap();
    let n = net.conv(0).unwrap().weight.as_slice().len();
    let cols = net.conv(0).unwrap().columns.len();
    let mut pruned = vec![false; n];
    for f in 0..net.conv(0).unwrap().filters {
        pruned[f * cols + 5] = true;
    }
    let mut pen = GroupPenalty::none(net.layers().len());
    pen.layers[0] = Some(LayerPenalty {
        lambda: vec![0.0; n],
        pruned: pruned.clone(),
        pruned_bias: vec![false; 3],
    });
    let cfg = TrainConfig {
        batch_size: 8,
        ..TrainConfig::default()
    };
    let mut sampler = BatchSampler::new(data.train.len(), 0);
    for it in 0..5 {
        train_step(&mut net, &data.train, &mut sampler, &cfg, it, &pen).unwrap();
        let c = net.conv(0).unwrap();
        for (i, _) in pruned.iter().enumerate().filter(|(_, m)| **m) {
            assert_eq!(c.weight.as_slice()[i], 0.0);
            assert_eq!(c.weight_velocity.as_slice()[i], 0.0);
        }
    }
}

/// Conv-only network, so a uniform group factor covers every weight.
fn conv_only() -> Architecture {
    Architecture {
        input: Shape3::new(2, 8, 8),
        layers: vec![
            LayerSpec::conv(3, 3, 1, 1),
            LayerSpec::Relu,
            LayerSpec::conv(3, 8, 1, 0),
            LayerSpec::SoftmaxXent,
        ],
    }
}

fn run<T: crate::Scalar>(cfg: &TrainConfig, lambda: f64, iters: u64) -> Network<T> {
    let data = blobs();
    let mut net = Network::<T>::new(conv_only(), 9).unwrap();
    let mut pen = GroupPenalty::none(net.layers().len());
    for idx in [0, 2] {
        let c = net.conv(idx).unwrap();
        let n = c.weight.as_slice().len();
        pen.layers[idx] = Some(LayerPenalty {
            lambda: vec![T::from_f64(lambda); n],
            pruned: vec![false; n],
            pruned_bias: vec![false; c.filters],
        });
    }
    let mut sampler = BatchSampler::new(data.train.len(), 1);
    train(&mut net, &data.train, &mut sampler, cfg, &pen, 0, iters, |_, _| {}).unwrap();
    net
}

fn bits<T: crate::Scalar>(net: &Network<T>) -> Vec<u64> {
    net.tensors()
        .iter()
        .flat_map(|t| t.iter().map(|v| v.as_f64().to_bits()))
        .collect()
}

#[test]
fn uniform_group_factor_equals_weight_decay() {
    let base = TrainConfig {
        base_lr: 0.05,
        weight_decay: 1e-3,
        bias_decay_mult: 0.0,
        batch_size: 8,
        ..TrainConfig::default()
    };
    let c = 2.5e-3;
    let with_groups = run::<f64>(&base, c, 30);
    let plain = run::<f64>(
        &TrainConfig {
            weight_decay: base.weight_decay + c,
            ..base.clone()
        },
        0.0,
        30,
    );
    assert_eq!(bits(&with_groups), bits(&plain));

    // A zero factor is plain SGD in either precision.
    let z32 = run::<f32>(&base, 0.0, 30);
    let data = blobs();
    let mut net = Network::<f32>::new(conv_only(), 9).unwrap();
    let mut sampler = BatchSampler::new(data.train.len(), 1);
    train(&mut net, &data.train, &mut sampler, &base, &GroupPenalty::none(4), 0, 30, |_, _| {})
        .unwrap();
    assert_eq!(bits(&z32), bits(&net));
}

#[test]
fn training_is_reproducible() {
    let cfg = TrainConfig {
        batch_size: 8,
        ..TrainConfig::default()
    };
    let a = run::<f32>(&cfg, 0.0, 20);
    let b = run::<f32>(&cfg, 0.0, 20);
    assert_eq!(bits(&a), bits(&b));
    let fresh = Network::<f32>::new(conv_only(), 9).unwrap();
    assert_ne!(bits(&a), bits(&fresh));
}

#[test]
fn precisions_share_initialisation() {
    let a = Network::<f32>::new(presets::toy(3), 17).unwrap();
    let b = Network::<f64>::new(presets::toy(3), 17).unwrap();
    for (x, y) in a.tensors().iter().zip(b.tensors()) {
        for (p, q) in x.iter().zip(y) {
            assert_eq!(*p, *q as f32);
        }
    }
}
