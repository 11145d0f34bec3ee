//! Deterministic reductions.
//!
//! The split points of every tree depend only on the slice length, so the
//! result is bit-identical for any number of worker threads.

const LEAF: usize = 1024;
const PAR_MIN: usize = 1 << 15;

/// Pairwise sum with a fixed tree shape.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= LEAF {
        return v.iter().sum();
    }
    let mid = split(v.len());
    let (a, b) = v.split_at(mid);
    if v.len() >= PAR_MIN {
        let (x, y) = rayon::join(|| pairwise_sum(a), || pairwise_sum(b));
        x + y
    } else {
        pairwise_sum(a) + pairwise_sum(b)
    }
}

/// Pairwise dot product with the same tree shape as [`pairwise_sum`].
pub fn pairwise_dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    if a.len() <= LEAF {
        return a.iter().zip(b).map(|(x, y)| x * y).sum();
    }
    let mid = split(a.len());
    let (a0, a1) = a.split_at(mid);
    let (b0, b1) = b.split_at(mid);
    if a.len() >= PAR_MIN {
        let (x, y) = rayon::join(|| pairwise_dot(a0, b0), || pairwise_dot(a1, b1));
        x + y
    } else {
        pairwise_dot(a0, b0) + pairwise_dot(a1, b1)
    }
}

/// Pairwise maximum of absolute values.
pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

fn split(len: usize) -> usize {
    let half = len / 2;
    half - half % LEAF.min(half.max(1))
}

/// Median of a slice (average of the two middle values for even length).
pub fn median(v: &[f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    let mut w = v.to_vec();
    w.sort_by(|a, b| a.total_cmp(b));
    let k = w.len();
    if k % 2 == 1 {
        w[k / 2]
    } else {
        0.5 * (w[k / 2 - 1] + w[k / 2])
    }
}

/// Minimum, median and maximum of a sample.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Spread {
    pub min: f64,
    pub median: f64,
    pub max: f64,
    pub count: usize,
}

impl Spread {
    pub fn of(v: &[f64]) -> Spread {
        let finite: Vec<f64> = v.iter().copied().filter(|x| x.is_finite()).collect();
        if finite.is_empty() {
            return Spread { min: f64::NAN, median: f64::NAN, max: f64::NAN, count: 0 };
        }
        Spread {
            min: finite.iter().copied().fold(f64::INFINITY, f64::min),
            median: median(&finite),
            max: finite.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            count: finite.len(),
        }
    }
}

/// Relative change |a − b| / |b|, with 0 when both vanish.
pub fn relative_change(a: f64, b: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_matches_exact_integers() {
        let v: Vec<f64> = (0..100_000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&v), 99_999.0 * 100_000.0 / 2.0);
        assert_eq!(pairwise_dot(&v[..10], &v[..10]), 285.0);
    }

    #[test]
    fn pairwise_independent_of_pool_size() {
        let v: Vec<f64> = (0..200_000).map(|i| ((i * 7919) % 1000) as f64 * 1e-3 + 0.1).collect();
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let many = rayon::ThreadPoolBuilder::new().num_threads(8).build().unwrap();
        let a = one.install(|| pairwise_sum(&v));
        let b = many.install(|| pairwise_sum(&v));
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn median_and_spread() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        let s = Spread::of(&[1.0, f64::NAN, 5.0, 3.0]);
        assert_eq!((s.min, s.median, s.max, s.count), (1.0, 3.0, 5.0, 3));
    }
}
