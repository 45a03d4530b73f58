/// Upper clip applied to every clearance value (meters).
pub const CLEARANCE_CLIP_M: f64 = 1.0;

const FAR: f64 = 1e30;

/// Exact Euclidean distance (meters) from every cell center to the nearest
/// non-traversable cell center, clipped to `[0, CLEARANCE_CLIP_M]`.
///
/// Uses the separable squared-distance transform of Felzenszwalb and
/// Huttenlocher: a column pass followed by a row pass of lower envelopes of
/// parabolas. All intermediate values are sums of squared integers, so the
/// result is bit-identical to a brute-force search. Cells outside the grid are
/// not obstacles; a grid without obstacles is `CLEARANCE_CLIP_M` everywhere.
pub fn clearance_field(traversable: &[bool], width: usize, height: usize, resolution: f64) -> Vec<f64> {
    assert_eq!(traversable.len(), width * height, "grid size mismatch");
    let mut sq: Vec<f64> = traversable.iter().map(|&t| if t { FAR } else { 0.0 }).collect();

    let n = width.max(height);
    let mut f = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut v = vec![0usize; n];
    let mut z = vec![0.0; n + 1];

    for x in 0..width {
        for y in 0..height {
            f[y] = sq[y * width + x];
        }
        envelope(&f[..height], &mut d[..height], &mut v, &mut z);
        for y in 0..height {
            sq[y * width + x] = d[y];
        }
    }
    for y in 0..height {
        f[..width].copy_from_slice(&sq[y * width..(y + 1) * width]);
        envelope(&f[..width], &mut d[..width], &mut v, &mut z);
        sq[y * width..(y + 1) * width].copy_from_slice(&d[..width]);
    }

    sq.into_iter()
        .map(|s| {
            if s >= FAR {
                CLEARANCE_CLIP_M
            } else {
                (s.sqrt() * resolution).min(CLEARANCE_CLIP_M)
            }
        })
        .collect()
}

/// One-dimensional squared distance transform of a sampled function `f`.
fn envelope(f: &[f64], d: &mut [f64], v: &mut [usize], z: &mut [f64]) {
    let n = f.len();
    if f.iter().all(|&x| x >= FAR) {
        d.iter_mut().for_each(|x| *x = FAR);
        return;
    }
    let mut k = 0usize;
    // Start the envelope at the first finite sample.
    let first = f.iter().position(|&x| x < FAR).unwrap();
    v[0] = first;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    for q in first + 1..n {
        if f[q] >= FAR {
            continue;
        }
        loop {
            let p = v[k];
            let s = ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64)) / (2.0 * (q as f64 - p as f64));
            if s <= z[k] {
                k -= 1;
                continue;
            }
            k += 1;
            v[k] = q;
            z[k] = s;
            z[k + 1] = f64::INFINITY;
            break;
        }
    }
    k = 0;
    for (q, dq) in d.iter_mut().enumerate() {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let p = v[k];
        let diff = q as f64 - p as f64;
        *dq = diff * diff + f[p];
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Nearest obstacle by exhaustive search over every cell pair.
    fn brute_force(t: &[bool], w: usize, h: usize, res: f64) -> Vec<f64> {
        let obstacles: Vec<(i64, i64)> = (0..w * h)
            .filter(|&i| !t[i])
            .map(|i| ((i % w) as i64, (i / w) as i64))
            .collect();
        (0..w * h)
            .map(|i| {
                let (x, y) = ((i % w) as i64, (i / w) as i64);
                match obstacles
                    .iter()
                    .map(|&(ox, oy)| (x - ox).pow(2) + (y - oy).pow(2))
                    .min()
                {
                    None => CLEARANCE_CLIP_M,
                    Some(d2) => ((d2 as f64).sqrt() * res).min(CLEARANCE_CLIP_M),
                }
            })
            .collect()
    }

    #[test]
    fn all_free_grid_is_clipped_everywhere() {
        let f = clearance_field(&[true; 100], 10, 10, 0.25);
        assert!(f.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn single_obstacle_neighbors_are_one_cell_away() {
        let (w, h) = (9, 9);
        let mut t = vec![true; w * h];
        t[4 * w + 4] = false;
        let f = clearance_field(&t, w, h, 0.1);
        assert_eq!(f[4 * w + 4], 0.0);
        for (x, y) in [(3, 4), (5, 4), (4, 3), (4, 5)] {
            assert!((f[y * w + x] - 0.1).abs() < 1e-15);
        }
        assert!((f[3 * w + 3] - 0.1 * 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn random_grids_match_brute_force_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let (w, h) = (rng.random_range(1..=32), rng.random_range(1..=32));
            let t: Vec<bool> = (0..w * h).map(|_| rng.random::<f64>() > 0.2).collect();
            let res = 0.05;
            assert_eq!(clearance_field(&t, w, h, res), brute_force(&t, w, h, res));
        }
    }

    #[test]
    fn obstacles_are_zero_and_values_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let (w, h) = (40, 25);
        let t: Vec<bool> = (0..w * h).map(|_| rng.random::<f64>() > 0.05).collect();
        let f = clearance_field(&t, w, h, 0.25);
        for (i, &v) in f.iter().enumerate() {
            assert!((0.0..=1.0).contains(&v));
            assert_eq!(v == 0.0, !t[i]);
        }
    }
}
