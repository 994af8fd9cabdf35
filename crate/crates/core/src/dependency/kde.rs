//! Product-Gaussian kernel density estimate of a pair of scalar variables,
//! discretized onto a `bins × bins` grid of cell masses.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Bandwidth {
    /// `1.06 · std · n^{-1/5}` per axis, floored at `1e-6 · range`.
    Silverman,
    /// Explicit per-axis bandwidths.
    Fixed(f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KdeOptions {
    pub bins: usize,
    pub bandwidth: Bandwidth,
    /// Per-axis `(low, high)` grid span. Defaults to `[min − 3h, max + 3h]`.
    pub span: Option<[(f64, f64); 2]>,
}

impl Default for KdeOptions {
    fn default() -> Self {
        Self {
            bins: 32,
            bandwidth: Bandwidth::Silverman,
            span: None,
        }
    }
}

impl KdeOptions {
    pub fn with_bins(bins: usize) -> Self {
        Self {
            bins,
            ..Self::default()
        }
    }

    /// Histogram-equivalent configuration: the grid covers `[low, high]` on
    /// both axes and the kernel is so narrow that every sample lying on a
    /// cell center contributes to that cell alone.
    pub fn histogram_like(bins: usize, low: f64, high: f64) -> Self {
        let width = (high - low) / bins as f64;
        let h = width * 1e-3;
        Self {
            bins,
            bandwidth: Bandwidth::Fixed(h, h),
            span: Some([(low, high), (low, high)]),
        }
    }
}

/// Normalized joint cell masses. Axis 0 indexes the first variable.
#[derive(Debug, Clone, PartialEq)]
pub struct JointGrid<T> {
    bins: usize,
    mass: Vec<T>,
}

impl<T: Scalar> JointGrid<T> {
    /// Normalizes arbitrary nonnegative weights into a grid.
    pub fn from_weights(bins: usize, weights: Vec<T>) -> Result<Self> {
        if weights.len() != bins * bins {
            return Err(Error::ShapeMismatch {
                expected: format!("{} cells", bins * bins),
                actual: format!("{}", weights.len()),
            });
        }
        if weights.iter().any(|&w| w < T::zero() || !w.is_finite()) {
            return Err(Error::InvalidArgument("grid weights must be finite and nonnegative".into()));
        }
        let total: T = weights.iter().copied().sum();
        if !(total > T::zero()) {
            return Err(Error::Degenerate("grid carries no mass".into()));
        }
        Ok(Self {
            bins,
            mass: weights.into_iter().map(|w| w / total).collect(),
        })
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn get(&self, a: usize, b: usize) -> T {
        self.mass[a * self.bins + b]
    }

    pub fn cells(&self) -> &[T] {
        &self.mass
    }

    /// Marginal over axis 0 (sums each row).
    pub fn first_marginal(&self) -> Vec<T> {
        self.mass.chunks(self.bins).map(|r| r.iter().copied().sum()).collect()
    }

    /// Marginal over axis 1 (sums each column).
    pub fn second_marginal(&self) -> Vec<T> {
        let mut out = vec![T::zero(); self.bins];
        for row in self.mass.chunks(self.bins) {
            for (o, &v) in out.iter_mut().zip(row) {
                *o += v;
            }
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let b = self.bins;
        let mut mass = vec![T::zero(); b * b];
        for i in 0..b {
            for j in 0..b {
                mass[j * b + i] = self.mass[i * b + j];
            }
        }
        Self { bins: b, mass }
    }
}

fn axis_stats<T: Scalar>(xs: &[T]) -> (T, T, T) {
    let n = T::of_usize(xs.len());
    let mean = xs.iter().copied().sum::<T>() / n;
    let var = xs.iter().map(|&x| (x - mean) * (x - mean)).sum::<T>() / (n - T::one());
    let (min, max) = xs
        .iter()
        .fold((T::infinity(), T::neg_infinity()), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    (var.sqrt(), min, max)
}

/// `n × bins` unnormalized Gaussian kernel weights of each sample at each
/// cell center along one axis.
fn axis_kernel<T: Scalar>(
    xs: &[T],
    bins: usize,
    h: T,
    low: T,
    high: T,
) -> Vec<T> {
    let width = (high - low) / T::of_usize(bins);
    let half = T::of(0.5);
    let centers: Vec<T> = (0..bins)
        .map(|k| low + (T::of_usize(k) + half) * width)
        .collect();
    let mut k = Vec::with_capacity(xs.len() * bins);
    for &x in xs {
        for &c in &centers {
            let u = (c - x) / h;
            k.push((-half * u * u).exp());
        }
    }
    k
}

fn silverman<T: Scalar>(xs: &[T]) -> Result<(T, T, T)> {
    let (std, min, max) = axis_stats(xs);
    let range = max - min;
    if !(range > T::zero()) {
        return Err(Error::Degenerate("zero-spread axis".into()));
    }
    let n = T::of_usize(xs.len());
    let h = T::of(1.06) * std * n.powf(T::of(-0.2));
    Ok((h.max(T::of(1e-6) * range), min, max))
}

/// Joint cell masses of paired samples `(xs[k], ys[k])`.
///
/// Fails with [`Error::Degenerate`] when either axis has zero spread.
pub fn kde_joint_grid<T: Scalar>(xs: &[T], ys: &[T], opts: &KdeOptions) -> Result<JointGrid<T>> {
    if xs.len() != ys.len() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} paired samples", xs.len()),
            actual: format!("{}", ys.len()),
        });
    }
    if xs.len() < 2 {
        return Err(Error::Empty(format!("KDE needs >= 2 samples, got {}", xs.len())));
    }
    if opts.bins == 0 {
        return Err(Error::InvalidArgument("zero bins".into()));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("KDE sample".into()));
    }

    let mut kernels = Vec::with_capacity(2);
    for (axis, data) in [xs, ys].into_iter().enumerate() {
        let (h, min, max) = match opts.bandwidth {
            Bandwidth::Silverman => silverman(data)?,
            Bandwidth::Fixed(hx, hy) => {
                let (_, min, max) = axis_stats(data);
                if !(max > min) {
                    return Err(Error::Degenerate("zero-spread axis".into()));
                }
                (T::of(if axis == 0 { hx } else { hy }), min, max)
            }
        };
        let three = T::of(3.0);
        let (low, high) = match opts.span {
            Some(span) => (T::of(span[axis].0), T::of(span[axis].1)),
            None => (min - three * h, max + three * h),
        };
        kernels.push(axis_kernel(data, opts.bins, h, low, high));
    }

    let b = opts.bins;
    let (kx, ky) = (&kernels[0], &kernels[1]);
    let mut weights = vec![T::zero(); b * b];
    for s in 0..xs.len() {
        let row_x = &kx[s * b..(s + 1) * b];
        let row_y = &ky[s * b..(s + 1) * b];
        for (a, &wx) in row_x.iter().enumerate() {
            if wx == T::zero() {
                continue;
            }
            let cell = &mut weights[a * b..(a + 1) * b];
            for (c, &wy) in cell.iter_mut().zip(row_y) {
                *c += wx * wy;
            }
        }
    }
    JointGrid::from_weights(b, weights)
}
