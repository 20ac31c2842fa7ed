//! Seeded data generators with known generative parameters.

use filler_gap_core::stats::{interaction_design, InteractionRecord};
use nalgebra::DMatrix;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Cell means `10 + 0.5 x_wh - 0.2 x_gap + effect * (-x_wh x_gap)` plus an
/// item offset (sd `item_sd`) and cell noise (sd `resid_sd`).
pub fn interaction_records(
    seed: u64,
    n_items: usize,
    effect: f64,
    resid_sd: f64,
    item_sd: f64,
) -> Vec<InteractionRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let item = Normal::new(0.0, item_sd).unwrap();
    let noise = Normal::new(0.0, resid_sd).unwrap();
    let cells = [(-0.5, -0.5), (0.5, -0.5), (-0.5, 0.5), (0.5, 0.5)];
    (0..n_items)
        .map(|i| {
            let u = item.sample(&mut rng);
            let s = cells
                .map(|(w, g): (f64, f64)| 10.0 + 0.5 * w - 0.2 * g + effect * -(w * g) + u + noise.sample(&mut rng));
            InteractionRecord::new(format!("{}", i + 1), vec![], "m", s).unwrap()
        })
        .collect()
}

/// `n_items` items observed at every length: interaction =
/// `1 + slope * length + item offset + noise`.
pub fn slope_data(
    seed: u64,
    n_items: usize,
    lengths: &[f64],
    slope: f64,
    resid_sd: f64,
    item_sd: f64,
) -> (Vec<f64>, Vec<f64>, Vec<String>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let item = Normal::new(0.0, item_sd).unwrap();
    let noise = Normal::new(0.0, resid_sd).unwrap();
    let (mut y, mut x, mut ids) = (Vec::new(), Vec::new(), Vec::new());
    for i in 0..n_items {
        let u = item.sample(&mut rng);
        for &l in lengths {
            y.push(1.0 + slope * l + u + noise.sample(&mut rng));
            x.push(l);
            ids.push(format!("{}", i + 1));
        }
    }
    (y, x, ids)
}

/// Noise that sums to zero within each item leaves no between-item
/// variation, so the REML optimum sits at zero item variance.
pub fn zero_item_variance_data(seed: u64) -> (Vec<f64>, DMatrix<f64>, Vec<String>, Vec<String>) {
    let recs = interaction_records(seed, 21, 2.0, 0.0, 0.0);
    let (mut y, x, names, items) = interaction_design(&recs);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for chunk in y.chunks_mut(4) {
        let e: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mean = e.iter().sum::<f64>() / 4.0;
        for (v, e) in chunk.iter_mut().zip(e) {
            *v += e - mean;
        }
    }
    (y, x, names, items)
}
