//! Deterministic fixtures shared by the criterion benchmarks.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use increg_core::compact::{build_plan, compact};
use increg_core::increg::{build_groups, zero_group, GroupKind, GroupState};
use increg_core::nn::{presets, Network};
use increg_core::{Matrix, Result, Tensor4};

pub fn random_matrix(rows: usize, cols: usize, seed: u64) -> Matrix<f32> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..rows * cols).map(|_| rng.random_range(-1.0..1.0)).collect();
    Matrix::from_vec(rows, cols, data).expect("sized")
}

pub fn random_batch(net: &Network<f32>, batch: usize, seed: u64) -> Tensor4<f32> {
    let s = net.input_shape();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..batch * s.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
    Tensor4::from_vec([batch, s.channels, s.height, s.width], data).expect("sized")
}

/// Marks a random `fraction` of each convolution's groups as pruned and
/// zeroes them.
pub fn prune_random(net: &mut Network<f32>, kind: GroupKind, fraction: f64, seed: u64) -> Result<Vec<GroupState>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut all = Vec::new();
    for layer in net.architecture().conv_layers() {
        let mut groups = build_groups(net, layer, kind)?;
        let mut ids: Vec<usize> = (0..groups.len()).collect();
        ids.shuffle(&mut rng);
        let k = (fraction * groups.len() as f64).round() as usize;
        for &i in &ids[..k.min(groups.len().saturating_sub(1))] {
            groups[i].pruned = true;
            zero_group(net, &groups[i]);
        }
        all.extend(groups);
    }
    Ok(all)
}

/// The ConvNet preset and its compact form with `fraction` of the
/// lowered columns removed from every convolution.
pub fn convnet_pair(fraction: f64, seed: u64) -> Result<(Network<f32>, Network<f32>)> {
    let mut net = Network::<f32>::new(presets::convnet(), seed)?;
    let groups = prune_random(&mut net, GroupKind::Column, fraction, seed)?;
    let small = compact(&net, &build_plan(&net, &groups)?)?;
    Ok((net, small))
}
