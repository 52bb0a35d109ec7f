//! Order-fixed summation.
//!
//! The collective sums over rings are evaluated with a pairwise tree whose
//! shape depends only on the number of terms. Per-ring terms may be computed
//! on any number of threads; as long as they land in the same slots the
//! result is bitwise identical.

const LEAF: usize = 8;

/// Pairwise (cascade) sum of `terms`.
pub fn pairwise_sum(terms: &[f64]) -> f64 {
    if terms.len() <= LEAF {
        return terms.iter().fold(0.0, |acc, &x| acc + x);
    }
    let mid = terms.len() / 2;
    pairwise_sum(&terms[..mid]) + pairwise_sum(&terms[mid..])
}

/// Component-wise pairwise sum of fixed-width rows.
pub fn pairwise_sum_rows<const K: usize>(rows: &[[f64; K]]) -> [f64; K] {
    if rows.len() <= LEAF {
        let mut acc = [0.0; K];
        for row in rows {
            for (a, x) in acc.iter_mut().zip(row) {
                *a += x;
            }
        }
        return acc;
    }
    let mid = rows.len() / 2;
    let left = pairwise_sum_rows(&rows[..mid]);
    let right = pairwise_sum_rows(&rows[mid..]);
    let mut out = [0.0; K];
    for k in 0..K {
        out[k] = left[k] + right[k];
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn small_inputs() {
        assert_eq!(pairwise_sum(&[]), 0.0);
        assert_eq!(pairwise_sum(&[1.5]), 1.5);
        assert_eq!(pairwise_sum_rows::<2>(&[[1.0, 2.0], [3.0, 4.0]]), [4.0, 6.0]);
    }

    #[test]
    fn beats_naive_on_cancellation() {
        // 1 + many tiny terms: the naive left fold loses all of them
        let mut v = vec![1.0];
        v.extend(std::iter::repeat_n(1e-16, 1 << 16));
        let exact = 1.0 + (1 << 16) as f64 * 1e-16;
        let naive: f64 = v.iter().sum();
        assert!((pairwise_sum(&v) - exact).abs() < (naive - exact).abs());
    }

    proptest! {
        #[test]
        fn rows_match_columns(xs in prop::collection::vec(-1e6f64..1e6, 0..300)) {
            let rows: Vec<[f64; 2]> = xs.iter().map(|&x| [x, 2.0 * x]).collect();
            let [a, b] = pairwise_sum_rows(&rows);
            prop_assert_eq!(a, pairwise_sum(&xs));
            let doubled: Vec<f64> = xs.iter().map(|x| 2.0 * x).collect();
            prop_assert_eq!(b, pairwise_sum(&doubled));
        }
    }
}
