use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::FeatureMap;
use crate::error::{Error, Result};

/// Dense 2D convolution weights, laid out `[out][in][kh][kw]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvKernel {
    pub kh: usize,
    pub kw: usize,
    pub in_channels: usize,
    pub out_channels: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl ConvKernel {
    pub fn new(
        kh: usize,
        kw: usize,
        in_channels: usize,
        out_channels: usize,
        weights: Vec<f64>,
        bias: Vec<f64>,
    ) -> Result<Self> {
        let k = Self { kh, kw, in_channels, out_channels, weights, bias };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<()> {
        if self.kh.is_multiple_of(2) || self.kw.is_multiple_of(2) {
            return Err(Error::ShapeMismatch(format!("kernel extent {}x{} must be odd", self.kh, self.kw)));
        }
        let n = self.out_channels * self.in_channels * self.kh * self.kw;
        if self.weights.len() != n || self.bias.len() != self.out_channels {
            return Err(Error::ShapeMismatch(format!(
                "{}x{} kernel {}->{} needs {n} weights and {} biases, got {} and {}",
                self.kh,
                self.kw,
                self.in_channels,
                self.out_channels,
                self.out_channels,
                self.weights.len(),
                self.bias.len()
            )));
        }
        if !self.weights.iter().chain(&self.bias).all(|v| v.is_finite()) {
            return Err(Error::NonFinite("kernel weight".into()));
        }
        Ok(())
    }

    pub fn zeros(kh: usize, kw: usize, in_channels: usize, out_channels: usize) -> Self {
        Self {
            kh,
            kw,
            in_channels,
            out_channels,
            weights: vec![0.0; out_channels * in_channels * kh * kw],
            bias: vec![0.0; out_channels],
        }
    }

    /// 1x1 kernel passing every channel through unchanged.
    pub fn identity(channels: usize) -> Self {
        let mut k = Self::zeros(1, 1, channels, channels);
        for c in 0..channels {
            k.weights[c * channels + c] = 1.0;
        }
        k
    }

    #[inline]
    pub fn weight(&self, o: usize, c: usize, di: usize, dj: usize) -> f64 {
        self.weights[((o * self.in_channels + c) * self.kh + di) * self.kw + dj]
    }
}

/// Same-size cross-correlation with zero padding.
pub fn conv2d(f: &FeatureMap, k: &ConvKernel) -> Result<FeatureMap> {
    k.validate()?;
    if k.in_channels != f.channels {
        return Err(Error::ShapeMismatch(format!(
            "kernel expects {} input channels, map has {}",
            k.in_channels, f.channels
        )));
    }
    let (h, w, cin, cout) = (f.height, f.width, f.channels, k.out_channels);
    let (ph, pw) = (k.kh / 2, k.kw / 2);
    // regroup weights as [di][dj][out][in] so the inner loop is contiguous
    let mut taps = vec![0.0; k.kh * k.kw * cout * cin];
    for o in 0..cout {
        for c in 0..cin {
            for di in 0..k.kh {
                for dj in 0..k.kw {
                    taps[((di * k.kw + dj) * cout + o) * cin + c] = k.weight(o, c, di, dj);
                }
            }
        }
    }
    let mut out = FeatureMap::zeros(h, w, cout, f.stride);
    if cout == 0 || w == 0 {
        return Ok(out);
    }
    out.data.par_chunks_mut(w * cout).enumerate().for_each(|(i, row)| {
        for j in 0..w {
            let acc = &mut row[j * cout..(j + 1) * cout];
            acc.copy_from_slice(&k.bias);
            for di in 0..k.kh {
                let ii = i as isize + di as isize - ph as isize;
                if ii < 0 || ii >= h as isize {
                    continue;
                }
                for dj in 0..k.kw {
                    let jj = j as isize + dj as isize - pw as isize;
                    if jj < 0 || jj >= w as isize {
                        continue;
                    }
                    let x = f.cell(ii as usize, jj as usize);
                    let tap = &taps[(di * k.kw + dj) * cout * cin..(di * k.kw + dj + 1) * cout * cin];
                    for (o, a) in acc.iter_mut().enumerate() {
                        let wrow = &tap[o * cin..(o + 1) * cin];
                        *a += wrow.iter().zip(x).map(|(wv, xv)| wv * xv).sum::<f64>();
                    }
                }
            }
        }
    });
    Ok(out)
}
