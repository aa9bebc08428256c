#![allow(dead_code)]

use fusionframe::generate::{self, RandomSpec};
use fusionframe::nalgebra::DMatrix;
use fusionframe::sampling::{self, SeededRng};
use fusionframe::{FusionFrameSystem, Mat};
use rand::Rng;

/// Random system in ℝ^m with `count` subspaces of dimension `dim`, `extra`
/// redundant local vectors each and random weights. `count` is raised until
/// the subspaces can span.
pub fn random_ffs(m: usize, count: usize, dim: usize, extra: usize, seed: u64) -> FusionFrameSystem {
    let dim = dim.clamp(1, m);
    let count = count.max(m.div_ceil(dim));
    let spec = RandomSpec {
        random_weights: true,
        ..RandomSpec::uniform(m, count, dim, dim + extra)
    };
    generate::random_system(&spec, seed).expect("valid spec")
}

/// The `k`-th of a family of varied random systems (M ≤ 12, ≤ 12 subspaces).
pub fn varied_ffs(k: u64) -> FusionFrameSystem {
    let mut rng = sampling::seeded_stream(0xF00D, k);
    let m = rng.random_range(2..=12);
    let dim = rng.random_range(1..=m);
    let count = rng.random_range(1..=6);
    let extra = rng.random_range(0..=3);
    random_ffs(m, count, dim, extra, k)
}

/// Random symmetric positive definite matrix, eigenvalues in about [0.5, 5].
pub fn random_spd(rng: &mut SeededRng, m: usize) -> Mat {
    let g = sampling::gaussian_matrix(rng, m, m);
    let s = &g * g.transpose() / (m as f64) + DMatrix::identity(m, m) * 0.5;
    Mat::from_matrix((&s + s.transpose()) * 0.5).unwrap()
}
