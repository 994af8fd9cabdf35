use crate::dependency::JointGrid;
use crate::scalar::Scalar;

/// Shannon entropy in nats of a discrete distribution, with `0·ln 0 = 0`.
pub fn entropy<T: Scalar>(p: &[T]) -> T {
    p.iter()
        .filter(|&&v| v > T::zero())
        .map(|&v| -v * v.ln())
        .sum()
}

/// Plug-in joint and marginal entropies of a grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridEntropies<T> {
    pub joint: T,
    pub first: T,
    pub second: T,
}

impl<T: Scalar> GridEntropies<T> {
    pub fn of(grid: &JointGrid<T>) -> Self {
        Self {
            joint: entropy(grid.cells()),
            first: entropy(&grid.first_marginal()),
            second: entropy(&grid.second_marginal()),
        }
    }

    /// `H(second | first)`.
    pub fn second_given_first(&self) -> T {
        self.joint - self.first
    }

    /// `H(first | second)`.
    pub fn first_given_second(&self) -> T {
        self.joint - self.second
    }

    /// `H(first) + H(second) − H(first, second)`, unclamped.
    pub fn mutual_information(&self) -> T {
        self.first + self.second - self.joint
    }
}

/// `(H(s_j | s_i), H(s_i | s_j))` for a grid whose axis 0 is `s_i`.
pub fn conditional_entropies<T: Scalar>(grid: &JointGrid<T>) -> (T, T) {
    let h = GridEntropies::of(grid);
    (h.second_given_first(), h.first_given_second())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dependency::{kde_joint_grid, KdeOptions};
    use crate::rng::rng_from;
    use proptest::prelude::*;
    use rand::Rng;

    fn grid(bins: usize, w: Vec<f64>) -> JointGrid<f64> {
        JointGrid::from_weights(bins, w).unwrap()
    }

    #[test]
    fn symmetric_grid_has_equal_conditionals() {
        let g = grid(3, vec![0.1, 0.2, 0.05, 0.2, 0.1, 0.15, 0.05, 0.15, 0.0]);
        let (a, b) = conditional_entropies(&g);
        assert_eq!(a, b);
    }

    #[test]
    fn independent_grid_conditional_equals_marginal() {
        let px = [0.1, 0.6, 0.3];
        let py = [0.25, 0.25, 0.5];
        let w: Vec<f64> = px.iter().flat_map(|a| py.iter().map(move |b| a * b)).collect();
        let g = grid(3, w);
        let (hy_given_x, hx_given_y) = conditional_entropies(&g);
        assert!((hy_given_x - entropy(&py)).abs() < 1e-9);
        assert!((hx_given_y - entropy(&px)).abs() < 1e-9);
    }

    #[test]
    fn permutation_grid_has_zero_conditionals() {
        let b = 4;
        let perm = [2, 0, 3, 1];
        let mut w = vec![0.0; b * b];
        for (i, &j) in perm.iter().enumerate() {
            w[i * b + j] = 1.0 / b as f64;
        }
        let (a, c) = conditional_entropies(&grid(b, w));
        assert!(a.abs() < 1e-15 && c.abs() < 1e-15);
    }

    #[test]
    fn two_by_two_closed_form() {
        // P = [[1/2, 1/4], [0, 1/4]]
        let g = grid(2, vec![0.5, 0.25, 0.0, 0.25]);
        let ln2 = std::f64::consts::LN_2;
        let joint = 1.5 * ln2; // 1/2·ln2 + 2·(1/4·ln4)
        let first = (0.75f64).ln() * -0.75 + 0.25 * (4.0f64).ln(); // rows (3/4, 1/4)
        let second = ln2; // cols (1/2, 1/2)
        let (a, b) = conditional_entropies(&g);
        assert!((a - (joint - first)).abs() < 1e-12);
        assert!((b - (joint - second)).abs() < 1e-12);
        assert!(((a - b).abs() - (second - first).abs()).abs() < 1e-12);
    }

    /// Pure histogram: samples are integer cell indices.
    fn histogram_entropies(cells: &[(usize, usize)], bins: usize) -> (f64, f64, f64) {
        let n = cells.len() as f64;
        let mut joint = vec![0.0; bins * bins];
        let mut px = vec![0.0; bins];
        let mut py = vec![0.0; bins];
        for &(a, b) in cells {
            joint[a * bins + b] += 1.0 / n;
            px[a] += 1.0 / n;
            py[b] += 1.0 / n;
        }
        let h = |p: &[f64]| -> f64 { p.iter().filter(|&&v| v > 0.0).map(|v| -v * v.ln()).sum() };
        (h(&joint), h(&px), h(&py))
    }

    #[test]
    fn degenerate_bandwidth_matches_histogram() {
        let bins = 8;
        let mut rng = rng_from(5);
        let cells: Vec<(usize, usize)> = (0..300)
            .map(|_| {
                let a = rng.random_range(0..bins);
                (a, (a + rng.random_range(0..3)) % bins)
            })
            .chain([(0, 0), (bins - 1, bins - 1)])
            .collect();
        // cell k has center k when the span is [-0.5, bins - 0.5]
        let xs: Vec<f64> = cells.iter().map(|c| c.0 as f64).collect();
        let ys: Vec<f64> = cells.iter().map(|c| c.1 as f64).collect();
        let opts = KdeOptions::histogram_like(bins, -0.5, bins as f64 - 0.5);
        let h = GridEntropies::of(&kde_joint_grid(&xs, &ys, &opts).unwrap());
        let (joint, hx, hy) = histogram_entropies(&cells, bins);
        assert!((h.joint - joint).abs() < 1e-6);
        assert!((h.first - hx).abs() < 1e-6);
        assert!((h.second - hy).abs() < 1e-6);
    }

    proptest! {
        #[test]
        fn joint_dominates_marginals(w in prop::collection::vec(0.0f64..1.0, 25)) {
            prop_assume!(w.iter().sum::<f64>() > 1e-6);
            let h = GridEntropies::of(&grid(5, w));
            prop_assert!(h.joint >= h.first.max(h.second) - 1e-12);
            prop_assert!(h.mutual_information() >= -1e-12);
        }
    }
}
