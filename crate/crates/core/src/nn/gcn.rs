//! Two-layer graph convolution stack `Z = Â·ReLU(Â·X·W1 + b1)·W2 + b2`
//! with a hand-derived reverse pass.

use rand::Rng;

use crate::error::{Error, Result};
use crate::nn::{DenseMatrix, SparsePropagator};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams<T> {
    pub weight: DenseMatrix<T>,
    pub bias: Vec<T>,
}

impl<T: Scalar> LayerParams<T> {
    pub fn new(weight: DenseMatrix<T>, bias: Vec<T>) -> Result<Self> {
        if bias.len() != weight.cols() {
            return Err(Error::ShapeMismatch {
                expected: format!("bias of length {}", weight.cols()),
                actual: format!("{}", bias.len()),
            });
        }
        Ok(Self { weight, bias })
    }

    pub fn glorot<R: Rng + ?Sized>(d_in: usize, d_out: usize, rng: &mut R) -> Self {
        Self {
            weight: DenseMatrix::glorot(d_in, d_out, rng),
            bias: vec![T::zero(); d_out],
        }
    }

    pub fn zeros(d_in: usize, d_out: usize) -> Self {
        Self {
            weight: DenseMatrix::zeros(d_in, d_out),
            bias: vec![T::zero(); d_out],
        }
    }

    pub fn d_in(&self) -> usize {
        self.weight.rows()
    }

    pub fn d_out(&self) -> usize {
        self.weight.cols()
    }

    /// `x · W + b`.
    pub fn affine(&self, x: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
        let mut out = x.matmul(&self.weight)?;
        out.add_row_broadcast(&self.bias)?;
        Ok(out)
    }
}

/// Gradients for one [`LayerParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrads<T> {
    pub weight: DenseMatrix<T>,
    pub bias: Vec<T>,
}

impl<T: Scalar> LayerGrads<T> {
    pub fn zeros_like(p: &LayerParams<T>) -> Self {
        Self {
            weight: DenseMatrix::zeros(p.d_in(), p.d_out()),
            bias: vec![T::zero(); p.d_out()],
        }
    }

    pub fn add_assign(&mut self, other: &Self) -> Result<()> {
        self.weight.add_assign(&other.weight)?;
        for (a, &b) in self.bias.iter_mut().zip(&other.bias) {
            *a += b;
        }
        Ok(())
    }
}

/// Two stacked aggregation layers. `version` changes whenever parameters are
/// handed out mutably, so a cache from an older forward pass is detectable.
#[derive(Debug, Clone, PartialEq)]
pub struct Gcn<T> {
    layers: [LayerParams<T>; 2],
    version: u64,
}

#[derive(Debug, Clone)]
pub struct GcnCache<T> {
    version: u64,
    x: DenseMatrix<T>,
    pre1: DenseMatrix<T>,
    hidden: DenseMatrix<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GcnGrads<T> {
    pub layers: [LayerGrads<T>; 2],
    pub input: Option<DenseMatrix<T>>,
}

impl<T: Scalar> GcnGrads<T> {
    pub fn add_assign(&mut self, other: &Self) -> Result<()> {
        self.layers[0].add_assign(&other.layers[0])?;
        self.layers[1].add_assign(&other.layers[1])?;
        Ok(())
    }

    /// Flat views in the same order as [`Gcn::parameters_mut`].
    pub fn flat(&self) -> Vec<&[T]> {
        vec![
            self.layers[0].weight.as_slice(),
            &self.layers[0].bias,
            self.layers[1].weight.as_slice(),
            &self.layers[1].bias,
        ]
    }
}

impl<T: Scalar> Gcn<T> {
    pub fn new(layer1: LayerParams<T>, layer2: LayerParams<T>) -> Result<Self> {
        if layer1.d_out() != layer2.d_in() {
            return Err(Error::ShapeMismatch {
                expected: format!("layer 2 input {}", layer1.d_out()),
                actual: format!("{}", layer2.d_in()),
            });
        }
        Ok(Self {
            layers: [layer1, layer2],
            version: 0,
        })
    }

    pub fn glorot<R: Rng + ?Sized>(d_in: usize, d_hidden: usize, d_out: usize, rng: &mut R) -> Self {
        Self {
            layers: [
                LayerParams::glorot(d_in, d_hidden, rng),
                LayerParams::glorot(d_hidden, d_out, rng),
            ],
            version: 0,
        }
    }

    pub fn layers(&self) -> &[LayerParams<T>; 2] {
        &self.layers
    }

    pub fn d_in(&self) -> usize {
        self.layers[0].d_in()
    }

    pub fn d_out(&self) -> usize {
        self.layers[1].d_out()
    }

    /// Mutable flat views `[W1, b1, W2, b2]`. Invalidates outstanding caches.
    pub fn parameters_mut(&mut self) -> Vec<&mut [T]> {
        self.version += 1;
        let [l1, l2] = &mut self.layers;
        vec![
            l1.weight.as_mut_slice(),
            l1.bias.as_mut_slice(),
            l2.weight.as_mut_slice(),
            l2.bias.as_mut_slice(),
        ]
    }

    pub fn parameters(&self) -> Vec<&[T]> {
        vec![
            self.layers[0].weight.as_slice(),
            &self.layers[0].bias,
            self.layers[1].weight.as_slice(),
            &self.layers[1].bias,
        ]
    }

    pub fn forward(
        &self,
        prop: &SparsePropagator<T>,
        x: &DenseMatrix<T>,
    ) -> Result<(DenseMatrix<T>, GcnCache<T>)> {
        if x.cols() != self.d_in() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} input features", self.d_in()),
                actual: format!("{}", x.cols()),
            });
        }
        let [l1, l2] = &self.layers;
        let mut pre1 = prop.apply(&x.matmul(&l1.weight)?)?;
        pre1.add_row_broadcast(&l1.bias)?;
        let hidden = pre1.map(|v| v.max(T::zero()));
        let mut z = prop.apply(&hidden.matmul(&l2.weight)?)?;
        z.add_row_broadcast(&l2.bias)?;
        Ok((
            z,
            GcnCache {
                version: self.version,
                x: x.clone(),
                pre1,
                hidden,
            },
        ))
    }

    /// Forward pass without keeping intermediates.
    pub fn predict(&self, prop: &SparsePropagator<T>, x: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
        self.forward(prop, x).map(|(z, _)| z)
    }

    pub fn backward(
        &self,
        prop: &SparsePropagator<T>,
        cache: &GcnCache<T>,
        d_out: &DenseMatrix<T>,
        want_input_grad: bool,
    ) -> Result<GcnGrads<T>> {
        if cache.version != self.version {
            return Err(Error::StaleCache);
        }
        if d_out.shape() != (cache.hidden.rows(), self.d_out()) {
            return Err(Error::ShapeMismatch {
                expected: format!("{}x{}", cache.hidden.rows(), self.d_out()),
                actual: format!("{}x{}", d_out.rows(), d_out.cols()),
            });
        }
        let [l1, l2] = &self.layers;

        let bias2 = d_out.column_sums();
        let g2 = prop.apply_transpose(d_out)?;
        let weight2 = cache.hidden.t_matmul(&g2)?;
        let d_hidden = g2.matmul_t(&l2.weight)?;

        // ReLU subgradient at 0 is 0
        let d_pre1 = d_hidden.zip_map(&cache.pre1, |g, p| if p > T::zero() { g } else { T::zero() })?;
        let bias1 = d_pre1.column_sums();
        let g1 = prop.apply_transpose(&d_pre1)?;
        let weight1 = cache.x.t_matmul(&g1)?;
        let input = if want_input_grad {
            Some(g1.matmul_t(&l1.weight)?)
        } else {
            None
        };

        Ok(GcnGrads {
            layers: [
                LayerGrads {
                    weight: weight1,
                    bias: bias1,
                },
                LayerGrads {
                    weight: weight2,
                    bias: bias2,
                },
            ],
            input,
        })
    }
}
