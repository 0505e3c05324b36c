use rand::Rng;

/// Lloyd's k-means on row-major points with k-means++ seeding.
///
/// Returns one cluster index per point. A cluster that loses all its
/// members is reseeded from the point farthest from its current center.
pub fn kmeans<R: Rng + ?Sized>(
    points: &[Vec<f64>],
    k: usize,
    max_iter: usize,
    rng: &mut R,
) -> Vec<usize> {
    let n = points.len();
    if n == 0 || k == 0 {
        return vec![0; n];
    }
    let k = k.min(n);
    let mut centers = seed_plus_plus(points, k, rng);
    let mut assign = vec![usize::MAX; n];

    for _ in 0..max_iter {
        let mut changed = false;
        for (i, p) in points.iter().enumerate() {
            let c = nearest(&centers, p).0;
            if assign[i] != c {
                assign[i] = c;
                changed = true;
            }
        }

        let dim = points[0].len();
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &c) in points.iter().zip(&assign) {
            counts[c] += 1;
            sums[c].iter_mut().zip(p).for_each(|(s, x)| *s += x);
        }
        for c in 0..k {
            if counts[c] > 0 {
                centers[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
        for c in 0..k {
            if counts[c] == 0 {
                let (far, dist) = (0..n)
                    .map(|i| (i, nearest(&centers, &points[i]).1))
                    .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)))
                    .expect("n > 0");
                if dist == 0.0 {
                    // Every point sits on a center; nothing to split off.
                    continue;
                }
                centers[c] = points[far].clone();
                if assign[far] != c {
                    assign[far] = c;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    assign
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Nearest center and its squared distance; ties go to the lower index.
fn nearest(centers: &[Vec<f64>], p: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, center) in centers.iter().enumerate() {
        let d = sq_dist(center, p);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn seed_plus_plus<R: Rng + ?Sized>(points: &[Vec<f64>], k: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut centers = vec![points[rng.random_range(0..n)].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut u = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (i, &d) in d2.iter().enumerate() {
                if u < d {
                    pick = i;
                    break;
                }
                u -= d;
            }
            pick
        } else {
            rng.random_range(0..n)
        };
        centers.push(points[next].clone());
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(sq_dist(p, &points[next]));
        }
    }
    centers
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    #[test]
    fn separates_two_blobs() {
        let mut points = Vec::new();
        for i in 0..50 {
            points.push(vec![0.0 + i as f64 * 0.001, 0.0]);
            points.push(vec![10.0 + i as f64 * 0.001, 10.0]);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let assign = kmeans(&points, 2, 50, &mut rng);
        for pair in assign.chunks(2) {
            assert_ne!(pair[0], pair[1]);
        }
        assert!(assign.iter().step_by(2).all(|&c| c == assign[0]));
    }

    #[test]
    fn identical_points_stay_together() {
        let points = vec![vec![1.0, 1.0]; 10];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let assign = kmeans(&points, 2, 50, &mut rng);
        assert!(assign.iter().all(|&c| c == assign[0]));
    }

    #[test]
    fn deterministic_under_seed() {
        let points: Vec<Vec<f64>> = (0..40)
            .map(|i| vec![(i * 7 % 13) as f64, (i % 5) as f64])
            .collect();
        let run = |s| kmeans(&points, 3, 50, &mut ChaCha8Rng::seed_from_u64(s));
        assert_eq!(run(9), run(9));
    }
}
