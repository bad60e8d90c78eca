use std::io::{Read, Write};

use crate::error::{Error, Result};

/// Dense `H x W x C` grid, row-major with channels innermost.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    /// Image pixels per feature cell.
    pub stride: u32,
    pub data: Vec<f64>,
}

impl FeatureMap {
    pub fn zeros(height: usize, width: usize, channels: usize, stride: u32) -> Self {
        Self { height, width, channels, stride, data: vec![0.0; height * width * channels] }
    }

    pub fn from_vec(height: usize, width: usize, channels: usize, stride: u32, data: Vec<f64>) -> Result<Self> {
        if data.len() != height * width * channels {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a {height}x{width}x{channels} map",
                data.len()
            )));
        }
        if stride == 0 {
            return Err(Error::InvalidArg("stride must be at least 1".into()));
        }
        if let Some(v) = data.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("feature value {v}")));
        }
        Ok(Self { height, width, channels, stride, data })
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.height, self.width, self.channels, self.stride)
    }

    pub fn num_cells(&self) -> usize {
        self.height * self.width
    }

    #[inline]
    pub fn offset(&self, i: usize, j: usize) -> usize {
        (i * self.width + j) * self.channels
    }

    #[inline]
    pub fn cell(&self, i: usize, j: usize) -> &[f64] {
        let o = self.offset(i, j);
        &self.data[o..o + self.channels]
    }

    #[inline]
    pub fn cell_mut(&mut self, i: usize, j: usize) -> &mut [f64] {
        let o = self.offset(i, j);
        let c = self.channels;
        &mut self.data[o..o + c]
    }

    pub fn same_shape(&self, o: &FeatureMap) -> bool {
        self.height == o.height && self.width == o.width && self.channels == o.channels
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { data: self.data.iter().map(|v| v * s).collect(), ..self.clone() }
    }

    pub fn max_abs_diff(&self, o: &FeatureMap) -> f64 {
        self.data.iter().zip(&o.data).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    /// Writes the tensor file layout: `h, w, c, stride` as little-endian
    /// `u32`, then `h * w * c` little-endian `f32` values in row-major order.
    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        for v in [self.height, self.width, self.channels, self.stride as usize] {
            let v = u32::try_from(v).map_err(|_| Error::InvalidArg(format!("dimension {v} exceeds u32")))?;
            out.write_all(&v.to_le_bytes())?;
        }
        let mut buf = Vec::with_capacity(self.data.len() * 4);
        for v in &self.data {
            buf.extend_from_slice(&(*v as f32).to_le_bytes());
        }
        out.write_all(&buf)?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut input: R) -> Result<Self> {
        let mut header = [0u8; 16];
        input
            .read_exact(&mut header)
            .map_err(|e| Error::Parse { line: 0, reason: format!("tensor header: {e}") })?;
        let field = |k: usize| u32::from_le_bytes(header[4 * k..4 * k + 4].try_into().unwrap()) as usize;
        let (h, w, c, stride) = (field(0), field(1), field(2), field(3));
        let n = h
            .checked_mul(w)
            .and_then(|v| v.checked_mul(c))
            .ok_or_else(|| Error::Parse { line: 0, reason: "tensor dimensions overflow".into() })?;
        let mut body = Vec::new();
        input.read_to_end(&mut body)?;
        if body.len() != n * 4 {
            return Err(Error::Parse {
                line: 0,
                reason: format!("expected {} payload bytes for {h}x{w}x{c}, found {}", n * 4, body.len()),
            });
        }
        let data = body
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().unwrap()) as f64)
            .collect();
        Self::from_vec(h, w, c, stride as u32, data)
    }
}
