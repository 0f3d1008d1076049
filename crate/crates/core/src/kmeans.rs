//! Seeded k-means++ initialisation followed by Lloyd iterations.

use nalgebra::DVector;
use rand::Rng;

use crate::rng::{self, Stream};
use crate::{Error, Result};

const MAX_LLOYD_ITERS: usize = 500;

#[derive(Debug, Clone)]
pub struct Clustering {
    pub centers: Vec<DVector<f64>>,
    pub labels: Vec<usize>,
    pub iterations: usize,
}

pub fn kmeans(points: &[DVector<f64>], k: usize, seed: u64) -> Result<Clustering> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    if points.len() < k {
        return Err(Error::TooFewSamples {
            needed: k,
            got: points.len(),
        });
    }
    let dim = points[0].len();
    if let Some(p) = points.iter().find(|p| p.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: p.len(),
        });
    }

    let mut rng = rng::stream(seed);
    let mut centers = plus_plus(points, k, &mut rng);
    let mut labels = vec![usize::MAX; points.len()];
    let mut iterations = 0;

    for it in 0..MAX_LLOYD_ITERS {
        iterations = it + 1;
        let mut changed = false;
        for (p, l) in points.iter().zip(labels.iter_mut()) {
            let best = nearest(&centers, p).0;
            if best != *l {
                *l = best;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let mut sums = vec![DVector::zeros(dim); k];
        let mut counts = vec![0usize; k];
        for (p, &l) in points.iter().zip(&labels) {
            sums[l] += p;
            counts[l] += 1;
        }
        for ((c, s), n) in centers.iter_mut().zip(sums).zip(counts) {
            // empty clusters keep their previous center
            if n > 0 {
                *c = s / n as f64;
            }
        }
    }

    Ok(Clustering {
        centers,
        labels,
        iterations,
    })
}

fn nearest(centers: &[DVector<f64>], p: &DVector<f64>) -> (usize, f64) {
    centers
        .iter()
        .enumerate()
        .map(|(i, c)| (i, (p - c).norm_squared()))
        .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best })
}

fn plus_plus(points: &[DVector<f64>], k: usize, rng: &mut Stream) -> Vec<DVector<f64>> {
    let mut centers = Vec::with_capacity(k);
    centers.push(points[rng.random_range(0..points.len())].clone());
    let mut d2: Vec<f64> = points
        .iter()
        .map(|p| (p - &centers[0]).norm_squared())
        .collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let idx = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = points.len() - 1;
            for (i, &d) in d2.iter().enumerate() {
                if target < d {
                    chosen = i;
                    break;
                }
                target -= d;
            }
            chosen
        } else {
            rng.random_range(0..points.len())
        };
        let c = points[idx].clone();
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min((p - &c).norm_squared());
        }
        centers.push(c);
    }
    centers
}
