//! Uniform phase-space grids and the SSQG binary format.

use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"SSQG";
pub const VERSION: u32 = 1;
pub const MIN_COUNT: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub count: usize,
    pub min: f64,
    pub step: f64,
}

impl Axis {
    pub fn new(count: usize, min: f64, step: f64) -> Self {
        Axis { count, min, step }
    }

    /// `count` points covering [−extent, extent).
    pub fn centered(count: usize, extent: f64) -> Self {
        let step = 2.0 * extent / count as f64;
        Axis::new(count, -extent, step)
    }

    pub fn coord(&self, i: usize) -> f64 {
        self.min + i as f64 * self.step
    }

    pub fn coords(&self) -> Vec<f64> {
        (0..self.count).map(|i| self.coord(i)).collect()
    }

    pub fn length(&self) -> f64 {
        self.count as f64 * self.step
    }

    /// True when min = −count·step/2, the layout the partial Fourier transform needs.
    pub fn is_centered(&self) -> bool {
        let want = -0.5 * self.length();
        (self.min - want).abs() <= 1e-12 * (1.0 + want.abs())
    }

    /// Dual (frequency) axis: step 2π/(N h), min −(N/2)·step.
    pub fn dual(&self) -> Axis {
        let dk = 2.0 * std::f64::consts::PI / self.length();
        Axis::new(self.count, -((self.count / 2) as f64) * dk, dk)
    }

    /// Inverse of `dual` for a centred primal axis.
    pub fn primal_of_dual(&self) -> Axis {
        let h = 2.0 * std::f64::consts::PI / (self.count as f64 * self.step);
        Axis::new(self.count, -0.5 * self.count as f64 * h, h)
    }

    pub fn nyquist(&self) -> f64 {
        std::f64::consts::PI / self.step
    }

    fn same(&self, o: &Axis) -> bool {
        self.count == o.count
            && (self.min - o.min).abs() <= 1e-12 * (1.0 + self.min.abs())
            && (self.step - o.step).abs() <= 1e-12 * self.step
    }
}

/// Complex samples on 𝔞 × ℒ (or 𝔞 × dual), row-major with a-axes outermost.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseSpaceGrid {
    pub n_a: usize,
    pub n_l: usize,
    pub axes: Vec<Axis>,
    pub dual: bool,
    pub hbar: f64,
    pub data: Vec<Complex64>,
}

impl PhaseSpaceGrid {
    pub fn new(n_a: usize, n_l: usize, axes: Vec<Axis>, dual: bool, hbar: f64, data: Vec<Complex64>) -> Result<Self> {
        let g = PhaseSpaceGrid { n_a, n_l, axes, dual, hbar, data };
        g.check()?;
        Ok(g)
    }

    pub fn check(&self) -> Result<()> {
        if self.axes.len() != self.n_a + self.n_l || self.n_a == 0 || self.n_l == 0 {
            return Err(Error::Shape(format!(
                "{} axes for n_a = {}, n_l = {}",
                self.axes.len(),
                self.n_a,
                self.n_l
            )));
        }
        for (i, ax) in self.axes.iter().enumerate() {
            if ax.count < MIN_COUNT || !ax.count.is_power_of_two() {
                return Err(Error::Shape(format!("axis {i}: count {} is not a power of two >= {MIN_COUNT}", ax.count)));
            }
            if !(ax.step > 0.0) || !ax.step.is_finite() || !ax.min.is_finite() {
                return Err(Error::Shape(format!("axis {i}: bad min/step")));
            }
        }
        if !(self.hbar > 0.0) || !self.hbar.is_finite() {
            return Err(Error::Shape(format!("hbar must be positive, got {}", self.hbar)));
        }
        let n: usize = self.axes.iter().map(|a| a.count).product();
        if n != self.data.len() {
            return Err(Error::Shape(format!("data length {} != {n}", self.data.len())));
        }
        Ok(())
    }

    pub fn zeros(n_a: usize, n_l: usize, axes: Vec<Axis>, dual: bool, hbar: f64) -> Result<Self> {
        let n = axes.iter().map(|a| a.count).product();
        Self::new(n_a, n_l, axes, dual, hbar, vec![Complex64::new(0.0, 0.0); n])
    }

    /// n-dimensional square grid, `points` per axis over [−extent, extent).
    pub fn square(n: usize, points: usize, extent: f64, hbar: f64) -> Result<Self> {
        Self::zeros(n, n, vec![Axis::centered(points, extent); 2 * n], false, hbar)
    }

    pub fn from_fn<F>(n: usize, points: usize, extent: f64, hbar: f64, f: F) -> Result<Self>
    where
        F: Fn(&[f64], &[f64]) -> Complex64,
    {
        let mut g = Self::square(n, points, extent, hbar)?;
        g.fill(f);
        Ok(g)
    }

    pub fn fill<F>(&mut self, f: F)
    where
        F: Fn(&[f64], &[f64]) -> Complex64,
    {
        let mut c = vec![0.0; self.axes.len()];
        for i in 0..self.data.len() {
            self.coords_into(i, &mut c);
            self.data[i] = f(&c[..self.n_a], &c[self.n_a..]);
        }
    }

    pub fn map<F: Fn(Complex64) -> Complex64>(&self, f: F) -> Self {
        let mut g = self.clone();
        g.data.iter_mut().for_each(|v| *v = f(*v));
        g
    }

    pub fn with_data(&self, data: Vec<Complex64>) -> Self {
        assert_eq!(data.len(), self.data.len());
        let mut g = self.clone();
        g.data = data;
        g
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.count).collect()
    }

    pub fn a_axes(&self) -> &[Axis] {
        &self.axes[..self.n_a]
    }

    pub fn l_axes(&self) -> &[Axis] {
        &self.axes[self.n_a..]
    }

    /// Number of samples in one a-slice.
    pub fn slice_len(&self) -> usize {
        self.l_axes().iter().map(|a| a.count).product()
    }

    pub fn a_len(&self) -> usize {
        self.a_axes().iter().map(|a| a.count).product()
    }

    pub fn coords_into(&self, mut i: usize, out: &mut [f64]) {
        for d in (0..self.axes.len()).rev() {
            let n = self.axes[d].count;
            out[d] = self.axes[d].coord(i % n);
            i /= n;
        }
    }

    pub fn coords(&self, i: usize) -> Vec<f64> {
        let mut c = vec![0.0; self.axes.len()];
        self.coords_into(i, &mut c);
        c
    }

    pub fn cell_volume(&self) -> f64 {
        self.axes.iter().map(|a| a.step).product()
    }

    pub fn same_geometry(&self, o: &PhaseSpaceGrid) -> bool {
        self.n_a == o.n_a
            && self.n_l == o.n_l
            && self.dual == o.dual
            && self.axes.len() == o.axes.len()
            && self.axes.iter().zip(&o.axes).all(|(x, y)| x.same(y))
    }

    pub fn ensure_compatible(&self, o: &PhaseSpaceGrid) -> Result<()> {
        if !self.same_geometry(o) {
            return Err(Error::GridMismatch("axes, dimensions or dual flags differ".into()));
        }
        Ok(())
    }

    pub fn ensure_dual(&self, dual: bool) -> Result<()> {
        if self.dual != dual {
            return Err(Error::DualMismatch { expected: dual });
        }
        Ok(())
    }

    pub fn norm_l2(&self) -> f64 {
        (self.data.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.cell_volume()).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    /// ‖self − o‖₂ / ‖o‖₂ over raw samples.
    pub fn rel_l2_diff(&self, o: &PhaseSpaceGrid) -> f64 {
        let num: f64 = self.data.iter().zip(&o.data).map(|(x, y)| (x - y).norm_sqr()).sum();
        let den: f64 = o.data.iter().map(|y| y.norm_sqr()).sum();
        if den == 0.0 {
            return num.sqrt();
        }
        (num / den).sqrt()
    }

    pub fn add(&self, o: &PhaseSpaceGrid) -> PhaseSpaceGrid {
        self.with_data(self.data.iter().zip(&o.data).map(|(x, y)| x + y).collect())
    }

    pub fn sub(&self, o: &PhaseSpaceGrid) -> PhaseSpaceGrid {
        self.with_data(self.data.iter().zip(&o.data).map(|(x, y)| x - y).collect())
    }

    pub fn mul(&self, o: &PhaseSpaceGrid) -> PhaseSpaceGrid {
        self.with_data(self.data.iter().zip(&o.data).map(|(x, y)| x * y).collect())
    }

    pub fn scale(&self, s: Complex64) -> PhaseSpaceGrid {
        self.map(|v| v * s)
    }

    pub fn conj(&self) -> PhaseSpaceGrid {
        self.map(|v| v.conj())
    }

    /// Max modulus on the boundary layer of each axis (first and last sample).
    pub fn boundary_max(&self) -> f64 {
        let shape = self.shape();
        let mut m = 0.0f64;
        for (i, v) in self.data.iter().enumerate() {
            let mut r = i;
            let mut edge = false;
            for d in (0..shape.len()).rev() {
                let j = r % shape[d];
                r /= shape[d];
                if j == 0 || j + 1 == shape[d] {
                    edge = true;
                }
            }
            if edge {
                m = m.max(v.norm());
            }
        }
        m
    }

    /// Zero-pads the l-axes by `factor`, keeping them centred.
    pub fn pad_l(&self, factor: usize) -> Result<PhaseSpaceGrid> {
        if factor == 1 {
            return Ok(self.clone());
        }
        if !factor.is_power_of_two() {
            return Err(Error::Argument(format!("oversample factor {factor} is not a power of two")));
        }
        if self.dual {
            return Err(Error::DualMismatch { expected: false });
        }
        let mut axes = self.axes.clone();
        let mut offs = Vec::new();
        for ax in axes[self.n_a..].iter_mut() {
            let off = ax.count * (factor - 1) / 2;
            offs.push(off);
            ax.min -= off as f64 * ax.step;
            ax.count *= factor;
        }
        let mut out = PhaseSpaceGrid::zeros(self.n_a, self.n_l, axes, false, self.hbar)?;
        let src_shape = self.shape();
        let dst_shape = out.shape();
        let mut idx = vec![0usize; src_shape.len()];
        for i in 0..self.data.len() {
            unravel(i, &src_shape, &mut idx);
            for (d, o) in offs.iter().enumerate() {
                idx[self.n_a + d] += o;
            }
            out.data[ravel(&idx, &dst_shape)] = self.data[i];
        }
        Ok(out)
    }

    /// Inverse of `pad_l`: keeps the central part with the axes of `like`.
    pub fn crop_l(&self, like: &PhaseSpaceGrid) -> Result<PhaseSpaceGrid> {
        if self.same_geometry(like) {
            return Ok(self.clone());
        }
        let mut out = like.clone();
        let mut offs = Vec::new();
        for (big, small) in self.l_axes().iter().zip(like.l_axes()) {
            let off = ((small.min - big.min) / big.step).round();
            if off < 0.0 || (off as usize + small.count) > big.count {
                return Err(Error::GridMismatch("crop target does not fit".into()));
            }
            offs.push(off as usize);
        }
        let src_shape = self.shape();
        let dst_shape = like.shape();
        let mut idx = vec![0usize; dst_shape.len()];
        for i in 0..out.data.len() {
            unravel(i, &dst_shape, &mut idx);
            for (d, o) in offs.iter().enumerate() {
                idx[self.n_a + d] += o;
            }
            out.data[i] = self.data[ravel(&idx, &src_shape)];
        }
        out.hbar = self.hbar;
        Ok(out)
    }

    /// Keeps every `step`-th sample along every axis.
    pub fn downsample(&self, step: usize) -> Result<PhaseSpaceGrid> {
        if step == 0 || !step.is_power_of_two() {
            return Err(Error::Argument("downsample step must be a power of two".into()));
        }
        let axes: Vec<Axis> = self
            .axes
            .iter()
            .map(|a| Axis::new(a.count / step, a.min, a.step * step as f64))
            .collect();
        let mut out = PhaseSpaceGrid::zeros(self.n_a, self.n_l, axes, self.dual, self.hbar)?;
        let src_shape = self.shape();
        let dst_shape = out.shape();
        let mut idx = vec![0usize; dst_shape.len()];
        for i in 0..out.data.len() {
            unravel(i, &dst_shape, &mut idx);
            idx.iter_mut().for_each(|v| *v *= step);
            out.data[i] = self.data[ravel(&idx, &src_shape)];
        }
        Ok(out)
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        w.write_all(&MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&(self.n_a as u32).to_le_bytes())?;
        w.write_all(&(self.n_l as u32).to_le_bytes())?;
        w.write_all(&[self.dual as u8])?;
        w.write_all(&self.hbar.to_le_bytes())?;
        for ax in &self.axes {
            w.write_all(&(ax.count as u64).to_le_bytes())?;
            w.write_all(&ax.min.to_le_bytes())?;
            w.write_all(&ax.step.to_le_bytes())?;
        }
        let mut buf = Vec::with_capacity(self.data.len() * 16);
        for v in &self.data {
            buf.extend_from_slice(&v.re.to_le_bytes());
            buf.extend_from_slice(&v.im.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut v = Vec::new();
        self.write_to(&mut v).expect("writing to memory");
        v
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if magic != MAGIC {
            return Err(Error::Format("bad magic".into()));
        }
        let version = read_u32(r)?;
        if version != VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        let n_a = read_u32(r)? as usize;
        let n_l = read_u32(r)? as usize;
        if n_a == 0 || n_l == 0 || n_a > 16 || n_l > 16 {
            return Err(Error::Format(format!("implausible dimensions n_a = {n_a}, n_l = {n_l}")));
        }
        let mut flag = [0u8; 1];
        r.read_exact(&mut flag)?;
        let dual = match flag[0] {
            0 => false,
            1 => true,
            f => return Err(Error::Format(format!("bad dual flag {f}"))),
        };
        let hbar = read_f64(r)?;
        let mut axes = Vec::with_capacity(n_a + n_l);
        let mut total: usize = 1;
        for _ in 0..n_a + n_l {
            let count = read_u64(r)? as usize;
            let min = read_f64(r)?;
            let step = read_f64(r)?;
            total = total
                .checked_mul(count)
                .filter(|t| *t <= 1 << 31)
                .ok_or_else(|| Error::Format("grid too large".into()))?;
            axes.push(Axis::new(count, min, step));
        }
        let mut raw = vec![0u8; total * 16];
        r.read_exact(&mut raw)?;
        let data = raw
            .chunks_exact(16)
            .map(|c| {
                let re = f64::from_le_bytes(c[..8].try_into().unwrap());
                let im = f64::from_le_bytes(c[8..].try_into().unwrap());
                Complex64::new(re, im)
            })
            .collect();
        let mut extra = [0u8; 1];
        if r.read(&mut extra)? != 0 {
            return Err(Error::Format("trailing bytes after data".into()));
        }
        PhaseSpaceGrid::new(n_a, n_l, axes, dual, hbar, data).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn from_bytes(b: &[u8]) -> Result<Self> {
        let mut c = b;
        Self::read_from(&mut c)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let f = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(f);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Self::read_from(&mut std::io::BufReader::new(f))
    }
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

pub(crate) fn unravel(mut i: usize, shape: &[usize], out: &mut [usize]) {
    for d in (0..shape.len()).rev() {
        out[d] = i % shape[d];
        i /= shape[d];
    }
}

pub(crate) fn ravel(idx: &[usize], shape: &[usize]) -> usize {
    idx.iter().zip(shape).fold(0, |acc, (i, n)| acc * n + i)
}

/// exp(−Σ((x−c)/w)²) with separate widths for a and l.
pub fn gaussian(n: usize, points: usize, extent: f64, hbar: f64, center: &[f64], wa: f64, wl: f64) -> Result<PhaseSpaceGrid> {
    if center.len() != 2 * n {
        return Err(Error::Shape(format!("center needs {} coordinates", 2 * n)));
    }
    PhaseSpaceGrid::from_fn(n, points, extent, hbar, |a, l| {
        let mut s = 0.0;
        for i in 0..n {
            s += ((a[i] - center[i]) / wa).powi(2) + ((l[i] - center[n + i]) / wl).powi(2);
        }
        Complex64::new((-s).exp(), 0.0)
    })
}

/// Compactly supported C^∞ bump exp(1 − 1/(1 − r²)), r = |x − c|/w.
pub fn bump(n: usize, points: usize, extent: f64, hbar: f64, center: &[f64], width: f64) -> Result<PhaseSpaceGrid> {
    if center.len() != 2 * n {
        return Err(Error::Shape(format!("center needs {} coordinates", 2 * n)));
    }
    PhaseSpaceGrid::from_fn(n, points, extent, hbar, |a, l| {
        let mut r2 = 0.0;
        for i in 0..n {
            r2 += (a[i] - center[i]).powi(2) + (l[i] - center[n + i]).powi(2);
        }
        r2 /= width * width;
        let v = if r2 < 1.0 { (1.0 - 1.0 / (1.0 - r2)).exp() } else { 0.0 };
        Complex64::new(v, 0.0)
    })
}

/// Smooth plateau Π_i ½[erf((c − |x_i|)/s) + 1] over all coordinates.
pub fn plateau_window(x: &[f64], c: f64, s: f64) -> f64 {
    x.iter()
        .map(|v| 0.5 * (libm::erf((c - v.abs()) / s) + 1.0))
        .product()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ssqg_round_trip_is_byte_identical() {
        let g = gaussian(1, 16, 4.0, 0.7, &[0.3, -0.2], 1.0, 1.5).unwrap();
        let b = g.to_bytes();
        assert_eq!(&b[..4], b"SSQG");
        assert_eq!(b.len(), 4 + 4 + 4 + 4 + 1 + 8 + 2 * 24 + 256 * 16);
        let back = PhaseSpaceGrid::from_bytes(&b).unwrap();
        assert_eq!(back, g);
        assert_eq!(back.to_bytes(), b);
    }

    #[test]
    fn ssqg_rejects_garbage() {
        assert!(PhaseSpaceGrid::from_bytes(b"NOPE").is_err());
        let g = PhaseSpaceGrid::square(1, 8, 1.0, 1.0).unwrap();
        let mut b = g.to_bytes();
        b.push(0);
        assert!(PhaseSpaceGrid::from_bytes(&b).is_err());
        b.truncate(b.len() - 17);
        assert!(PhaseSpaceGrid::from_bytes(&b).is_err());
    }

    #[test]
    fn invariants_enforced() {
        assert!(PhaseSpaceGrid::square(1, 12, 1.0, 1.0).is_err());
        assert!(PhaseSpaceGrid::square(1, 4, 1.0, 1.0).is_err());
        assert!(PhaseSpaceGrid::square(1, 8, 1.0, 0.0).is_err());
    }

    #[test]
    fn pad_and_crop() {
        let g = gaussian(1, 16, 4.0, 1.0, &[0.0, 0.5], 1.0, 1.0).unwrap();
        let p = g.pad_l(4).unwrap();
        assert_eq!(p.shape(), vec![16, 64]);
        assert!(p.l_axes()[0].is_centered());
        assert!((p.norm_l2() - g.norm_l2()).abs() < 1e-15);
        assert_eq!(p.crop_l(&g).unwrap(), g);
    }

    #[test]
    fn dual_axis_layout() {
        let ax = Axis::centered(64, 8.0);
        let d = ax.dual();
        assert!((d.step - 2.0 * std::f64::consts::PI / 16.0).abs() < 1e-15);
        assert_eq!(d.min, -32.0 * d.step);
        let back = d.primal_of_dual();
        assert!((back.step - ax.step).abs() < 1e-15 && (back.min - ax.min).abs() < 1e-14);
    }
}
