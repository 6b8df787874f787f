use rayon::prelude::*;

use crate::error::{Axis, Error, Result};

/// Points grouped by integer labels, with labels remapped to `0..k` in
/// ascending order of the original ids.
struct Clusters<'a> {
    points: &'a [Vec<f64>],
    ids: Vec<usize>,
    k: usize,
    sizes: Vec<usize>,
}

impl<'a> Clusters<'a> {
    fn new(points: &'a [Vec<f64>], labels: &[usize]) -> Result<Self> {
        Error::check(Axis::Length, points.len(), labels.len())?;
        if let Some(d) = points.first().map(Vec::len) {
            if let Some(bad) = points.iter().find(|p| p.len() != d) {
                return Err(Error::dim(Axis::Length, d, bad.len()));
            }
        }
        let mut distinct: Vec<usize> = labels.to_vec();
        distinct.sort_unstable();
        distinct.dedup();
        let k = distinct.len();
        if k < 2 {
            return Err(Error::Config(format!(
                "clustering metrics need at least 2 clusters, got {k}"
            )));
        }
        let ids: Vec<usize> = labels
            .iter()
            .map(|l| distinct.binary_search(l).expect("collected"))
            .collect();
        let mut sizes = vec![0; k];
        for &i in &ids {
            sizes[i] += 1;
        }
        Ok(Clusters {
            points,
            ids,
            k,
            sizes,
        })
    }

    fn dim(&self) -> usize {
        self.points[0].len()
    }

    fn centroids(&self) -> Vec<Vec<f64>> {
        let mut c = vec![vec![0.0; self.dim()]; self.k];
        for (p, &i) in self.points.iter().zip(&self.ids) {
            for (a, b) in c[i].iter_mut().zip(p) {
                *a += b;
            }
        }
        for (ci, &n) in c.iter_mut().zip(&self.sizes) {
            ci.iter_mut().for_each(|v| *v /= n as f64);
        }
        c
    }
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    dist2(a, b).sqrt()
}

/// Mean silhouette coefficient with Euclidean distances.
///
/// Points in singleton clusters score 0, as do points with `a = b = 0`.
pub fn silhouette(points: &[Vec<f64>], labels: &[usize]) -> Result<f64> {
    let cl = Clusters::new(points, labels)?;
    let scores: Vec<f64> = (0..points.len())
        .into_par_iter()
        .map(|i| {
            let own = cl.ids[i];
            if cl.sizes[own] == 1 {
                return 0.0;
            }
            let mut sums = vec![0.0; cl.k];
            for (j, q) in points.iter().enumerate() {
                if j != i {
                    sums[cl.ids[j]] += dist(&points[i], q);
                }
            }
            let a = sums[own] / (cl.sizes[own] - 1) as f64;
            let b = (0..cl.k)
                .filter(|&c| c != own)
                .map(|c| sums[c] / cl.sizes[c] as f64)
                .fold(f64::INFINITY, f64::min);
            let m = a.max(b);
            if m == 0.0 {
                0.0
            } else {
                (b - a) / m
            }
        })
        .collect();
    Ok(scores.iter().sum::<f64>() / points.len() as f64)
}

/// `(SS_M / SS_W) * (N - k) / (k - 1)`.
pub fn calinski_harabasz(points: &[Vec<f64>], labels: &[usize]) -> Result<f64> {
    let cl = Clusters::new(points, labels)?;
    let centroids = cl.centroids();
    let mut overall = vec![0.0; cl.dim()];
    for p in points {
        for (a, b) in overall.iter_mut().zip(p) {
            *a += b;
        }
    }
    overall.iter_mut().for_each(|v| *v /= points.len() as f64);
    let ss_m: f64 = centroids
        .iter()
        .zip(&cl.sizes)
        .map(|(c, &n)| n as f64 * dist2(c, &overall))
        .sum();
    let ss_w: f64 = points
        .iter()
        .zip(&cl.ids)
        .map(|(p, &i)| dist2(p, &centroids[i]))
        .sum();
    if ss_w == 0.0 {
        return Err(Error::Degenerate(
            "within-cluster dispersion is zero".into(),
        ));
    }
    let (n, k) = (points.len() as f64, cl.k as f64);
    Ok(ss_m / ss_w * (n - k) / (k - 1.0))
}

/// `(1/k) sum_i max_{j != i} (s_i + s_j) / d_ij`.
pub fn davies_bouldin(points: &[Vec<f64>], labels: &[usize]) -> Result<f64> {
    let cl = Clusters::new(points, labels)?;
    let centroids = cl.centroids();
    let mut spread = vec![0.0; cl.k];
    for (p, &i) in points.iter().zip(&cl.ids) {
        spread[i] += dist(p, &centroids[i]);
    }
    for (s, &n) in spread.iter_mut().zip(&cl.sizes) {
        *s /= n as f64;
    }
    let mut total = 0.0;
    for i in 0..cl.k {
        let mut worst = f64::NEG_INFINITY;
        for j in (0..cl.k).filter(|&j| j != i) {
            let d = dist(&centroids[i], &centroids[j]);
            if d == 0.0 {
                return Err(Error::Degenerate(format!(
                    "clusters {i} and {j} share a centroid"
                )));
            }
            worst = worst.max((spread[i] + spread[j]) / d);
        }
        total += worst;
    }
    Ok(total / cl.k as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterScores {
    pub silhouette: f64,
    pub calinski_harabasz: f64,
    pub davies_bouldin: f64,
}

/// All three scores over the points of a latent dump, clustered by tag.
pub fn latent_metrics(dump: &crate::model::LatentDump) -> Result<ClusterScores> {
    let labels: Vec<usize> = dump.tags.iter().map(|&t| t as usize).collect();
    Ok(ClusterScores {
        silhouette: silhouette(&dump.points, &labels)?,
        calinski_harabasz: calinski_harabasz(&dump.points, &labels)?,
        davies_bouldin: davies_bouldin(&dump.points, &labels)?,
    })
}
