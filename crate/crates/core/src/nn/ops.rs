use super::{Real, Tensor};
use crate::error::{Error, Result};

pub fn relu<T: Real>(x: &Tensor<T>) -> Tensor<T> {
    let mut out = x.clone();
    // NaN maps to 0, like every non-positive input
    for v in out.values_mut() {
        *v = v.max(T::zero());
    }
    out
}

/// Mask `grad_out` by `x > 0`; the subgradient at 0 is 0.
pub fn relu_backward<T: Real>(x: &Tensor<T>, grad_out: &Tensor<T>) -> Result<Tensor<T>> {
    x.ensure_shape(grad_out, "relu backward")?;
    let mut g = grad_out.clone();
    for (gv, &xv) in g.values_mut().iter_mut().zip(x.values()) {
        if xv <= T::zero() || xv.is_nan() {
            *gv = T::zero();
        }
    }
    Ok(g)
}

/// Concatenate along the channel axis, in list order.
pub fn concat_channels<T: Real>(parts: &[&Tensor<T>]) -> Result<Tensor<T>> {
    let first = parts
        .first()
        .ok_or_else(|| Error::Shape("concat of an empty list".into()))?;
    let (h, w) = (first.height(), first.width());
    if let Some(p) = parts.iter().find(|p| p.height() != h || p.width() != w) {
        return Err(Error::Shape(format!(
            "concat spatial mismatch: {}×{} vs {h}×{w}",
            p.height(),
            p.width()
        )));
    }
    let c: usize = parts.iter().map(|p| p.channels()).sum();
    let mut values = Vec::with_capacity(h * w * c);
    for i in 0..h * w {
        for p in parts {
            let pc = p.channels();
            values.extend_from_slice(&p.values()[i * pc..(i + 1) * pc]);
        }
    }
    Tensor::new(h, w, c, values)
}

/// Inverse of [`concat_channels`]: slice `x` into consecutive channel groups.
pub fn split_channels<T: Real>(x: &Tensor<T>, sizes: &[usize]) -> Result<Vec<Tensor<T>>> {
    let total: usize = sizes.iter().sum();
    if total != x.channels() {
        return Err(Error::Shape(format!(
            "split sizes sum to {total}, tensor has {} channels",
            x.channels()
        )));
    }
    let (h, w, c) = x.shape();
    let mut outs: Vec<Vec<T>> = sizes
        .iter()
        .map(|&s| Vec::with_capacity(h * w * s))
        .collect();
    for px in x.values().chunks_exact(c) {
        let mut off = 0;
        for (o, &s) in outs.iter_mut().zip(sizes) {
            o.extend_from_slice(&px[off..off + s]);
            off += s;
        }
    }
    outs.into_iter()
        .zip(sizes)
        .map(|(v, &s)| Tensor::new(h, w, s, v))
        .collect()
}

pub fn add<T: Real>(a: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>> {
    let mut out = a.clone();
    add_assign(&mut out, b)?;
    Ok(out)
}

pub fn add_assign<T: Real>(a: &mut Tensor<T>, b: &Tensor<T>) -> Result<()> {
    a.ensure_shape(b, "add")?;
    for (x, &y) in a.values_mut().iter_mut().zip(b.values()) {
        *x += y;
    }
    Ok(())
}
