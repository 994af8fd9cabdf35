use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use rand::Rng;

use crate::embedding::gcn_from_tensors;
use crate::error::{Error, Result};
use crate::graph::Edge;
use crate::nn::{params_io, DenseMatrix, Gcn, GcnCache, LayerGrads, LayerParams, SparsePropagator};
use crate::scalar::Scalar;

/// Two-layer perceptron on `z_u ⊙ z_v`: width `d_z`, ReLU, scalar logit.
#[derive(Debug, Clone, PartialEq)]
pub struct Decoder<T> {
    pub hidden: LayerParams<T>,
    pub out: LayerParams<T>,
}

#[derive(Debug, Clone)]
pub struct DecoderCache<T> {
    pairs: Vec<Edge>,
    input: DenseMatrix<T>,
    pre: DenseMatrix<T>,
    act: DenseMatrix<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecoderGrads<T> {
    pub hidden: LayerGrads<T>,
    pub out: LayerGrads<T>,
}

impl<T: Scalar> DecoderGrads<T> {
    pub fn zeros_like(d: &Decoder<T>) -> Self {
        Self {
            hidden: LayerGrads::zeros_like(&d.hidden),
            out: LayerGrads::zeros_like(&d.out),
        }
    }

    pub fn add_scaled(&mut self, other: &Self, w: T) -> Result<()> {
        for (a, b) in [(&mut self.hidden, &other.hidden), (&mut self.out, &other.out)] {
            let mut s = b.clone();
            s.weight.scale(w);
            s.bias.iter_mut().for_each(|v| *v *= w);
            a.add_assign(&s)?;
        }
        Ok(())
    }
}

impl<T: Scalar> Decoder<T> {
    pub fn glorot<R: Rng + ?Sized>(d_z: usize, rng: &mut R) -> Self {
        Self {
            hidden: LayerParams::glorot(d_z, d_z, rng),
            out: LayerParams::glorot(d_z, 1, rng),
        }
    }

    pub fn d_z(&self) -> usize {
        self.hidden.d_in()
    }

    fn hadamard(z: &DenseMatrix<T>, pairs: &[Edge]) -> Result<DenseMatrix<T>> {
        let d = z.cols();
        let mut data = Vec::with_capacity(pairs.len() * d);
        for &(u, v) in pairs {
            for i in [u, v] {
                if i >= z.rows() {
                    return Err(Error::NodeOutOfRange {
                        index: i,
                        n_nodes: z.rows(),
                    });
                }
            }
            data.extend(z.row(u).iter().zip(z.row(v)).map(|(&a, &b)| a * b));
        }
        DenseMatrix::from_vec(pairs.len(), d, data)
    }

    pub fn forward(&self, z: &DenseMatrix<T>, pairs: &[Edge]) -> Result<(Vec<T>, DecoderCache<T>)> {
        let input = Self::hadamard(z, pairs)?;
        let pre = self.hidden.affine(&input)?;
        let act = pre.map(|v| v.max(T::zero()));
        let logits = self.out.affine(&act)?.into_vec();
        Ok((
            logits,
            DecoderCache {
                pairs: pairs.to_vec(),
                input,
                pre,
                act,
            },
        ))
    }

    /// Parameter gradients and `dL/dZ` for the encodings `z` that produced
    /// `cache`.
    pub fn backward(
        &self,
        z: &DenseMatrix<T>,
        cache: &DecoderCache<T>,
        d_logits: &[T],
    ) -> Result<(DecoderGrads<T>, DenseMatrix<T>)> {
        if d_logits.len() != cache.pairs.len() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} logit gradients", cache.pairs.len()),
                actual: format!("{}", d_logits.len()),
            });
        }
        let g = DenseMatrix::from_vec(d_logits.len(), 1, d_logits.to_vec())?;
        let out = LayerGrads {
            weight: cache.act.t_matmul(&g)?,
            bias: g.column_sums(),
        };
        let d_act = g.matmul_t(&self.out.weight)?;
        let d_pre = d_act.zip_map(&cache.pre, |g, p| if p > T::zero() { g } else { T::zero() })?;
        let hidden = LayerGrads {
            weight: cache.input.t_matmul(&d_pre)?,
            bias: d_pre.column_sums(),
        };
        let d_input = d_pre.matmul_t(&self.hidden.weight)?;
        let mut dz = DenseMatrix::zeros(z.rows(), z.cols());
        for (p, &(u, v)) in cache.pairs.iter().enumerate() {
            let gi = d_input.row(p);
            for c in 0..z.cols() {
                let (zu, zv) = (z[(u, c)], z[(v, c)]);
                dz[(u, c)] += gi[c] * zv;
                dz[(v, c)] += gi[c] * zu;
            }
        }
        Ok((DecoderGrads { hidden, out }, dz))
    }
}

/// Encoder shared across both graph views, and the pair decoder.
#[derive(Debug, Clone, PartialEq)]
pub struct LpModel<T> {
    pub encoder: Gcn<T>,
    pub decoder: Decoder<T>,
}

impl<T: Scalar> LpModel<T> {
    pub fn glorot<R: Rng + ?Sized>(d_in: usize, hidden: usize, d_z: usize, rng: &mut R) -> Self {
        Self {
            encoder: Gcn::glorot(d_in, hidden, d_z, rng),
            decoder: Decoder::glorot(d_z, rng),
        }
    }

    pub fn encode(&self, prop: &SparsePropagator<T>, x: &DenseMatrix<T>) -> Result<(DenseMatrix<T>, GcnCache<T>)> {
        self.encoder.forward(prop, x)
    }

    pub fn decode_pairs(&self, z: &DenseMatrix<T>, pairs: &[Edge]) -> Result<Vec<T>> {
        self.decoder.forward(z, pairs).map(|(l, _)| l)
    }

    /// Logits for `pairs` under the given graph view.
    pub fn score(&self, prop: &SparsePropagator<T>, x: &DenseMatrix<T>, pairs: &[Edge]) -> Result<Vec<T>> {
        let z = self.encoder.predict(prop, x)?;
        self.decode_pairs(&z, pairs)
    }

    /// `[W1, b1, W2, b2]` of the encoder then the decoder.
    pub fn parameters_mut(&mut self) -> Vec<&mut [T]> {
        let mut p = self.encoder.parameters_mut();
        let Decoder { hidden, out } = &mut self.decoder;
        p.push(hidden.weight.as_mut_slice());
        p.push(hidden.bias.as_mut_slice());
        p.push(out.weight.as_mut_slice());
        p.push(out.bias.as_mut_slice());
        p
    }

    pub fn parameters(&self) -> Vec<&[T]> {
        let mut p = self.encoder.parameters();
        p.push(self.decoder.hidden.weight.as_slice());
        p.push(&self.decoder.hidden.bias);
        p.push(self.decoder.out.weight.as_slice());
        p.push(&self.decoder.out.bias);
        p
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let row = |b: &[T]| DenseMatrix::from_vec(1, b.len(), b.to_vec());
        let [l1, l2] = self.encoder.layers();
        let (h, o) = (&self.decoder.hidden, &self.decoder.out);
        let (b1, b2, b3, b4) = (row(&l1.bias)?, row(&l2.bias)?, row(&h.bias)?, row(&o.bias)?);
        params_io::write_params(
            &mut BufWriter::new(file),
            &[&l1.weight, &b1, &l2.weight, &b2, &h.weight, &b3, &o.weight, &b4],
        )
        .map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut t: Vec<DenseMatrix<T>> = params_io::read_params(&mut BufReader::new(file))?;
        if t.len() != 8 {
            return Err(Error::BadParamFile(format!("expected 8 tensors, found {}", t.len())));
        }
        let dec = t.split_off(4);
        let [hw, hb, ow, ob]: [DenseMatrix<T>; 4] = dec.try_into().expect("length checked");
        Ok(Self {
            encoder: gcn_from_tensors(t)?,
            decoder: Decoder {
                hidden: LayerParams::new(hw, hb.into_vec())?,
                out: LayerParams::new(ow, ob.into_vec())?,
            },
        })
    }
}
