//! Flat binary parameter files: `CMP1`, tensor count, `(rows, cols)` per
//! tensor as little-endian `u32`, then every value as little-endian `f64`
//! in declaration order.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::nn::DenseMatrix;
use crate::scalar::Scalar;

pub const MAGIC: &[u8; 4] = b"CMP1";

pub fn write_params<T: Scalar, W: Write>(out: &mut W, tensors: &[&DenseMatrix<T>]) -> std::io::Result<()> {
    out.write_all(MAGIC)?;
    out.write_all(&(tensors.len() as u32).to_le_bytes())?;
    for t in tensors {
        out.write_all(&(t.rows() as u32).to_le_bytes())?;
        out.write_all(&(t.cols() as u32).to_le_bytes())?;
    }
    for t in tensors {
        for v in t.as_slice() {
            out.write_all(&v.as_f64().to_le_bytes())?;
        }
    }
    Ok(())
}

fn read_u32<R: Read>(input: &mut R) -> Result<u32> {
    let mut buf = [0u8; 4];
    input
        .read_exact(&mut buf)
        .map_err(|e| Error::BadParamFile(format!("truncated header: {e}")))?;
    Ok(u32::from_le_bytes(buf))
}

pub fn read_params<T: Scalar, R: Read>(input: &mut R) -> Result<Vec<DenseMatrix<T>>> {
    let mut magic = [0u8; 4];
    input
        .read_exact(&mut magic)
        .map_err(|e| Error::BadParamFile(format!("missing magic: {e}")))?;
    if &magic != MAGIC {
        return Err(Error::BadParamFile(format!("bad magic {magic:?}")));
    }
    let count = read_u32(input)? as usize;
    let mut shapes = Vec::with_capacity(count);
    for _ in 0..count {
        shapes.push((read_u32(input)? as usize, read_u32(input)? as usize));
    }
    let mut tensors = Vec::with_capacity(count);
    let mut buf = [0u8; 8];
    for (rows, cols) in shapes {
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows * cols {
            input
                .read_exact(&mut buf)
                .map_err(|e| Error::BadParamFile(format!("truncated values: {e}")))?;
            let v = f64::from_le_bytes(buf);
            if !v.is_finite() {
                return Err(Error::NonFinite("parameter file value".into()));
            }
            data.push(T::of(v));
        }
        tensors.push(DenseMatrix::from_vec(rows, cols, data)?);
    }
    Ok(tensors)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_layout_and_roundtrip() {
        let a = DenseMatrix::from_fn(2, 3, |r, c| r as f64 - c as f64 * 0.25);
        let b = DenseMatrix::from_vec(1, 2, vec![1.5, -2.0]).unwrap();
        let mut buf = Vec::new();
        write_params(&mut buf, &[&a, &b]).unwrap();
        assert_eq!(&buf[..4], b"CMP1");
        assert_eq!(&buf[4..8], &2u32.to_le_bytes());
        assert_eq!(&buf[8..12], &2u32.to_le_bytes());
        assert_eq!(&buf[12..16], &3u32.to_le_bytes());
        assert_eq!(buf.len(), 4 + 4 + 16 + 8 * 8);
        let back: Vec<DenseMatrix<f64>> = read_params(&mut buf.as_slice()).unwrap();
        assert_eq!(back, vec![a, b]);
    }

    #[test]
    fn rejects_bad_magic_and_truncation() {
        assert!(read_params::<f64, _>(&mut &b"XXXX\0\0\0\0"[..]).is_err());
        let a = DenseMatrix::<f64>::identity(2);
        let mut buf = Vec::new();
        write_params(&mut buf, &[&a]).unwrap();
        buf.truncate(buf.len() - 3);
        assert!(read_params::<f64, _>(&mut buf.as_slice()).is_err());
    }
}
