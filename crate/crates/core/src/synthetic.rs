//! Synthetic multi-view Gaussian blob datasets for tests and demos.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::MultiViewDataset;
use crate::error::Result;

/// Specification of a labeled multi-view blob dataset. Cluster centers sit
/// on scaled coordinate axes so every pair is at least `separation` apart
/// in every view.
#[derive(Debug, Clone, PartialEq)]
pub struct BlobSpec {
    pub clusters: usize,
    pub samples_per_cluster: usize,
    /// Feature count of each view.
    pub view_dims: Vec<usize>,
    /// Minimum distance between any two cluster centers.
    pub separation: f64,
    /// Isotropic per-coordinate noise standard deviation.
    pub noise_sigma: f64,
    pub seed: u64,
}

impl BlobSpec {
    pub fn new(clusters: usize, samples_per_cluster: usize, view_dims: Vec<usize>) -> Self {
        BlobSpec {
            clusters,
            samples_per_cluster,
            view_dims,
            separation: 8.0,
            noise_sigma: 1.0,
            seed: 7,
        }
    }
}

fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller; the (0,1] shift keeps ln() finite
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Generate a complete labeled dataset of Gaussian blobs, one independent
/// noise draw per view. Samples are grouped by cluster, labels 0..c.
pub fn gaussian_blobs(spec: &BlobSpec) -> Result<MultiViewDataset> {
    let n = spec.clusters * spec.samples_per_cluster;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut views = Vec::with_capacity(spec.view_dims.len());
    for &dim in &spec.view_dims {
        let mut view = Array2::zeros((n, dim));
        for cluster in 0..spec.clusters {
            // center on axis (cluster % dim), pushed out one step further
            // every time the axes wrap; any two centers are >= separation
            // apart
            let axis = cluster % dim;
            let scale = spec.separation * (1.0 + (cluster / dim) as f64);
            for s in 0..spec.samples_per_cluster {
                let row = cluster * spec.samples_per_cluster + s;
                for col in 0..dim {
                    let center = if col == axis { scale } else { 0.0 };
                    view[[row, col]] = center + spec.noise_sigma * standard_normal(&mut rng);
                }
            }
        }
        views.push(view);
    }
    let labels = (0..n).map(|i| i / spec.samples_per_cluster).collect();
    MultiViewDataset::from_complete(views, Some(labels))
}
