//! Binary model containers. Every field is little-endian; counts are `u32`,
//! parameters `f32`, matrices row-major.
//!
//! ```text
//! LDA1 | out_dim | input_dim | class_count | projection[out_dim * input_dim]
//! UBM1 | components | dim | weights[K] | means[K * dim] | variances[K * dim]
//! PRJ1 | out_dim | in_dim | explained_variance[out_dim] | mean[in_dim] | rows[out_dim * in_dim]
//! ```
//!
//! UBM weights are renormalized in `f64` after loading.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{EmbeddingProjection, LdaTransform, Ubm};
use crate::error::{Error, Result};

const LDA_MAGIC: &[u8; 4] = b"LDA1";
const UBM_MAGIC: &[u8; 4] = b"UBM1";
const PRJ_MAGIC: &[u8; 4] = b"PRJ1";

fn put_u32<W: Write>(w: &mut W, v: usize) -> Result<()> {
    let v = u32::try_from(v).map_err(|_| Error::format(format!("count {v} exceeds u32")))?;
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn put_f32s<W: Write>(w: &mut W, values: &[f64]) -> Result<()> {
    for &v in values {
        w.write_all(&(v as f32).to_le_bytes())?;
    }
    Ok(())
}

struct Reader<R> {
    inner: R,
    what: &'static str,
}

impl<R: Read> Reader<R> {
    fn open(mut inner: R, magic: &[u8; 4], what: &'static str) -> Result<Self> {
        let mut got = [0u8; 4];
        inner
            .read_exact(&mut got)
            .map_err(|_| Error::format(format!("{what}: truncated header")))?;
        if &got != magic {
            return Err(Error::format(format!("{what}: bad magic")));
        }
        Ok(Self { inner, what })
    }

    fn u32(&mut self) -> Result<usize> {
        let mut b = [0u8; 4];
        self.inner
            .read_exact(&mut b)
            .map_err(|_| Error::format(format!("{}: truncated header", self.what)))?;
        Ok(u32::from_le_bytes(b) as usize)
    }

    fn f32s(&mut self, n: usize) -> Result<Vec<f64>> {
        let mut buf = vec![0u8; n * 4];
        self.inner
            .read_exact(&mut buf)
            .map_err(|_| Error::format(format!("{}: truncated payload", self.what)))?;
        Ok(buf
            .chunks_exact(4)
            .map(|b| f64::from(f32::from_le_bytes(b.try_into().unwrap())))
            .collect())
    }

    fn finish(mut self) -> Result<()> {
        let mut rest = [0u8; 1];
        if self.inner.read(&mut rest)? != 0 {
            return Err(Error::format(format!("{}: trailing bytes", self.what)));
        }
        Ok(())
    }
}

pub fn write_lda<W: Write>(lda: &LdaTransform, mut w: W) -> Result<()> {
    w.write_all(LDA_MAGIC)?;
    put_u32(&mut w, lda.out_dim())?;
    put_u32(&mut w, lda.input_dim())?;
    put_u32(&mut w, lda.class_count())?;
    put_f32s(&mut w, lda.projection())?;
    w.flush()?;
    Ok(())
}

pub fn read_lda<R: Read>(r: R) -> Result<LdaTransform> {
    let mut r = Reader::open(r, LDA_MAGIC, "lda")?;
    let (out_dim, input_dim, classes) = (r.u32()?, r.u32()?, r.u32()?);
    let projection = r.f32s(out_dim * input_dim)?;
    r.finish()?;
    LdaTransform::from_parts(projection, out_dim, input_dim, classes).map_err(|e| Error::format(format!("lda: {e}")))
}

pub fn write_ubm<W: Write>(ubm: &Ubm, mut w: W) -> Result<()> {
    w.write_all(UBM_MAGIC)?;
    put_u32(&mut w, ubm.components())?;
    put_u32(&mut w, ubm.dim())?;
    put_f32s(&mut w, ubm.weights())?;
    put_f32s(&mut w, ubm.means())?;
    put_f32s(&mut w, ubm.variances())?;
    w.flush()?;
    Ok(())
}

pub fn read_ubm<R: Read>(r: R) -> Result<Ubm> {
    let mut r = Reader::open(r, UBM_MAGIC, "ubm")?;
    let (k, dim) = (r.u32()?, r.u32()?);
    let mut weights = r.f32s(k)?;
    let means = r.f32s(k * dim)?;
    let variances = r.f32s(k * dim)?;
    r.finish()?;
    let total: f64 = weights.iter().sum();
    if total > 0.0 {
        weights.iter_mut().for_each(|w| *w /= total);
    }
    Ubm::new(weights, means, variances, dim).map_err(|e| Error::format(format!("ubm: {e}")))
}

pub fn write_projection<W: Write>(p: &EmbeddingProjection, mut w: W) -> Result<()> {
    w.write_all(PRJ_MAGIC)?;
    put_u32(&mut w, p.out_dim())?;
    put_u32(&mut w, p.in_dim())?;
    put_f32s(&mut w, p.explained_variance())?;
    put_f32s(&mut w, p.mean())?;
    put_f32s(&mut w, p.rows())?;
    w.flush()?;
    Ok(())
}

pub fn read_projection<R: Read>(r: R) -> Result<EmbeddingProjection> {
    let mut r = Reader::open(r, PRJ_MAGIC, "projection")?;
    let (out_dim, in_dim) = (r.u32()?, r.u32()?);
    let explained = r.f32s(out_dim)?;
    let mean = r.f32s(in_dim)?;
    let rows = r.f32s(out_dim * in_dim)?;
    r.finish()?;
    EmbeddingProjection::from_parts(rows, out_dim, in_dim, explained, mean)
        .map_err(|e| Error::format(format!("projection: {e}")))
}

macro_rules! file_io {
    ($read_file:ident, $read:ident, $write_file:ident, $write:ident, $ty:ty) => {
        pub fn $read_file(path: impl AsRef<Path>) -> Result<$ty> {
            $read(BufReader::new(File::open(path)?))
        }

        pub fn $write_file(value: &$ty, path: impl AsRef<Path>) -> Result<()> {
            $write(value, BufWriter::new(File::create(path)?))
        }
    };
}

file_io!(read_lda_file, read_lda, write_lda_file, write_lda, LdaTransform);
file_io!(read_ubm_file, read_ubm, write_ubm_file, write_ubm, Ubm);
file_io!(
    read_projection_file,
    read_projection,
    write_projection_file,
    write_projection,
    EmbeddingProjection
);
