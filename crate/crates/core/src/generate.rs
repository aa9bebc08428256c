//! Seeded random fusion frame systems.

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{Error, Result};
use crate::frames::Frame;
use crate::fusion::{split_frame, FusionFrame, FusionFrameSystem, Subspace};
use crate::numkit::{self, Mat, DEFAULT_RANK_TOL};
use crate::sampling::{self, seeded};

/// Shape of a random system: subspace `i` has dimension `subspace_dims[i]`
/// and carries `local_sizes[i]` local vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct RandomSpec {
    pub ambient_dim: usize,
    pub subspace_dims: Vec<usize>,
    pub local_sizes: Vec<usize>,
    /// Weights drawn uniformly from `[0.5, 2]` instead of all ones.
    pub random_weights: bool,
}

impl RandomSpec {
    /// `count` subspaces of dimension `dim`, each with `local_size` vectors.
    pub fn uniform(ambient_dim: usize, count: usize, dim: usize, local_size: usize) -> Self {
        RandomSpec {
            ambient_dim,
            subspace_dims: vec![dim; count],
            local_sizes: vec![local_size; count],
            random_weights: false,
        }
    }

    fn validate(&self) -> Result<()> {
        let m = self.ambient_dim;
        if m == 0 {
            return Err(Error::BadDims("ambient dimension must be positive".into()));
        }
        if self.subspace_dims.is_empty() {
            return Err(Error::BadDims("need at least one subspace".into()));
        }
        if self.subspace_dims.len() != self.local_sizes.len() {
            return Err(Error::BadDims(format!(
                "{} subspace dimensions but {} local frame sizes",
                self.subspace_dims.len(),
                self.local_sizes.len()
            )));
        }
        for (i, (&d, &n)) in self.subspace_dims.iter().zip(&self.local_sizes).enumerate() {
            if d == 0 || d > m {
                return Err(Error::BadDims(format!("subspace {i} has dimension {d}, need 1..={m}")));
            }
            if n < d {
                return Err(Error::BadDims(format!(
                    "subspace {i}: {n} local vectors cannot span dimension {d}"
                )));
            }
        }
        let total: usize = self.subspace_dims.iter().sum();
        if total < m {
            return Err(Error::BadDims(format!(
                "subspace dimensions sum to {total} < {m}; the subspaces cannot span"
            )));
        }
        Ok(())
    }
}

/// Orthonormalized Gaussian `m × d` matrix.
pub fn random_subspace<R: Rng + ?Sized>(rng: &mut R, m: usize, d: usize) -> Result<Subspace> {
    if d == 0 || d > m {
        return Err(Error::BadDims(format!("subspace dimension {d} not in 1..={m}")));
    }
    loop {
        let g = sampling::gaussian_matrix(rng, m, d);
        let s = Subspace::from_vectors(&Mat::from_matrix(g)?, DEFAULT_RANK_TOL)?;
        if s.dim() == d {
            return Ok(s);
        }
    }
}

/// `n` vectors spanning `w`: its orthonormal basis when `n = dim W`,
/// otherwise `U G` with Gaussian `G`.
pub fn random_local_frame<R: Rng + ?Sized>(rng: &mut R, w: &Subspace, n: usize) -> Result<Frame> {
    let d = w.dim();
    if n < d {
        return Err(Error::BadDims(format!("{n} vectors cannot span dimension {d}")));
    }
    if n == d {
        return Frame::new(w.basis().clone());
    }
    loop {
        let g = sampling::gaussian_matrix(rng, d, n);
        let f = Mat::from_matrix(w.basis().as_matrix() * g)?;
        if numkit::numerical_rank(&f, 1e-8) == d {
            return Frame::new(f);
        }
    }
}

fn draw_weights<R: Rng + ?Sized>(rng: &mut R, count: usize, random: bool) -> Vec<f64> {
    (0..count)
        .map(|_| if random { rng.random_range(0.5..=2.0) } else { 1.0 })
        .collect()
}

/// Random subspaces, random local frames, canonical local duals. Redraws
/// until the subspaces span, so the result is always a fusion frame.
pub fn random_system(spec: &RandomSpec, seed: u64) -> Result<FusionFrameSystem> {
    spec.validate()?;
    let mut rng = seeded(seed);
    let m = spec.ambient_dim;
    loop {
        let subspaces = spec
            .subspace_dims
            .iter()
            .map(|&d| random_subspace(&mut rng, m, d))
            .collect::<Result<Vec<_>>>()?;
        let weights = draw_weights(&mut rng, subspaces.len(), spec.random_weights);
        let ff = FusionFrame::from_pairs(subspaces.into_iter().zip(weights))?;
        if !crate::fusion::fusion_bounds(&ff).is_frame {
            continue;
        }
        let locals = ff
            .components()
            .iter()
            .zip(&spec.local_sizes)
            .map(|(c, &n)| random_local_frame(&mut rng, &c.subspace, n))
            .collect::<Result<Vec<_>>>()?;
        return FusionFrameSystem::new(ff, locals, None);
    }
}

/// Zero-based index blocks of `n` vectors: block `b` starts at `b·⌈n/k⌉`
/// and takes `⌈n/k⌉ + overlap` consecutive indices, wrapping around.
pub fn contiguous_blocks(n: usize, blocks: usize, overlap: usize) -> Result<Vec<Vec<usize>>> {
    if blocks == 0 || blocks > n {
        return Err(Error::BadDims(format!("cannot split {n} vectors into {blocks} blocks")));
    }
    let step = n.div_ceil(blocks);
    let len = (step + overlap).min(n);
    Ok((0..blocks)
        .map(|b| (0..len).map(|k| (b * step + k) % n).collect())
        .collect())
}

/// A Gaussian frame of `n` vectors in `ℝ^m`, split into `blocks`
/// overlapping contiguous blocks with unit weights.
pub fn split_system(m: usize, n: usize, blocks: usize, overlap: usize, seed: u64) -> Result<FusionFrameSystem> {
    if m == 0 || n < m {
        return Err(Error::BadDims(format!("{n} vectors cannot form a frame for dimension {m}")));
    }
    let partition = contiguous_blocks(n, blocks, overlap)?;
    let mut rng = seeded(seed);
    loop {
        let frame = Frame::new(Mat::from_matrix(sampling::gaussian_matrix(&mut rng, m, n))?)?;
        if numkit::numerical_rank(frame.vectors(), 1e-8) < m {
            continue;
        }
        let ffs = split_frame(&frame, &partition, &vec![1.0; blocks])?;
        if crate::fusion::fusion_bounds(ffs.fusion_frame()).is_frame {
            return Ok(ffs);
        }
    }
}

/// Coordinate blocks partitioning `ℝ^m` into `blocks` pieces: an
/// orthonormal fusion basis with orthonormal local frames.
pub fn orthonormal_system(m: usize, blocks: usize) -> Result<FusionFrameSystem> {
    if blocks == 0 || blocks > m {
        return Err(Error::BadDims(format!("cannot split dimension {m} into {blocks} blocks")));
    }
    let mut pairs = Vec::with_capacity(blocks);
    let mut start = 0;
    for b in 0..blocks {
        let size = m / blocks + usize::from(b < m % blocks);
        let axes: Vec<usize> = (start..start + size).collect();
        start += size;
        pairs.push((Subspace::coordinate(m, &axes)?, 1.0));
    }
    FusionFrameSystem::with_orthonormal_locals(FusionFrame::from_pairs(pairs)?)
}

/// Parseval local frames for `ffs`: each local frame is replaced by an
/// orthonormal basis of its subspace.
pub fn with_parseval_locals(ffs: &FusionFrameSystem) -> Result<FusionFrameSystem> {
    FusionFrameSystem::with_orthonormal_locals(ffs.fusion_frame().clone())
}

/// Replaces every local dual `F̃_i` by `F̃_i + U_i K_i (I − F_i⁺ F_i)` with
/// Gaussian `K_i`. The added term vanishes against `F_iᵀ`, so the result is
/// still a dual on `W_i`. Local frames without redundancy keep their
/// (unique) dual.
pub fn alternate_duals(ffs: &FusionFrameSystem, seed: u64) -> Result<FusionFrameSystem> {
    let mut rng = seeded(seed);
    let mut duals = Vec::with_capacity(ffs.len());
    for ((c, frame), dual) in ffs
        .fusion_frame()
        .components()
        .iter()
        .zip(ffs.local_frames())
        .zip(ffs.local_duals())
    {
        let f = frame.vectors().as_matrix();
        let n = frame.len();
        let u = c.subspace.basis().as_matrix();
        // (I − F⁺F) projects coefficient space onto ker F
        let svd = numkit::thin_svd(f);
        let rank = svd.sigma.iter().filter(|&&s| s > DEFAULT_RANK_TOL * svd.sigma[0]).count();
        let v_t = svd.v_t.rows(0, rank);
        let kernel = DMatrix::identity(n, n) - v_t.transpose() * v_t;
        let k = sampling::gaussian_matrix(&mut rng, u.ncols(), n);
        let extra = u * k * kernel;
        duals.push(Frame::new(Mat::from_matrix(dual.vectors().as_matrix() + extra)?)?);
    }
    FusionFrameSystem::new(ffs.fusion_frame().clone(), ffs.local_frames().to_vec(), Some(duals))
}
