//! Weyl product, the deformed product ⋆_ℏ, Moyal series, brackets,
//! traces and inner products.

use std::collections::HashMap;
use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eset::EsetStructure;
use crate::error::{Error, Result};
use crate::fourier::{fft_axis, signed_index};
use crate::grid::{ravel, unravel, Axis, PhaseSpaceGrid};
use crate::transform::{self, Interpolation, TransformOptions};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Conjugation,
    Kernel,
    Flat,
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "conjugation" => Ok(Method::Conjugation),
            "kernel" => Ok(Method::Kernel),
            "flat" => Ok(Method::Flat),
            _ => Err(Error::Argument(format!("unknown method `{s}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StarParams {
    pub hbar: f64,
    pub method: Method,
    pub interpolation: Interpolation,
    /// l-axis zero-padding factor for the conjugation path.
    pub oversample: usize,
    pub truncation_order: usize,
    /// a-axis refinement of the kernel quadrature.
    pub kernel_refine: usize,
}

impl StarParams {
    pub fn new(hbar: f64) -> Self {
        StarParams {
            hbar,
            method: Method::Conjugation,
            interpolation: Interpolation::Cubic,
            oversample: 4,
            truncation_order: 2,
            kernel_refine: 8,
        }
    }

    pub fn with_method(mut self, m: Method) -> Self {
        self.method = m;
        self
    }

    pub fn with_interpolation(mut self, i: Interpolation) -> Self {
        self.interpolation = i;
        self
    }

    pub fn with_oversample(mut self, os: usize) -> Self {
        self.oversample = os;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.hbar > 0.0) || !self.hbar.is_finite() {
            return Err(Error::Argument(format!("hbar must be positive, got {}", self.hbar)));
        }
        if self.oversample == 0 || self.kernel_refine == 0 {
            return Err(Error::Argument("oversample factors must be >= 1".into()));
        }
        Ok(())
    }

    fn transform_options(&self) -> TransformOptions {
        TransformOptions {
            interpolation: self.interpolation,
            oversample: 1,
            flat: self.method == Method::Flat,
        }
    }
}

/// C_n(ℏ) = (πℏ)^{−2n}.
pub fn weyl_constant(n: usize, hbar: f64) -> f64 {
    (PI * hbar).powi(-2 * n as i32)
}

fn identity_pairing(n: usize) -> DMatrix<f64> {
    DMatrix::identity(n, n)
}

fn check_pair(u: &PhaseSpaceGrid, v: &PhaseSpaceGrid) -> Result<()> {
    u.ensure_compatible(v)?;
    u.ensure_dual(false)?;
    if u.n_a != u.n_l {
        return Err(Error::GridMismatch("products need n_a = n_l".into()));
    }
    Ok(())
}

fn check_hbar(hbar: f64) -> Result<()> {
    if !(hbar > 0.0) || !hbar.is_finite() {
        return Err(Error::Argument(format!("hbar must be positive, got {hbar}")));
    }
    Ok(())
}

/// Weyl product for the standard form ω⁰ = Σ da_i ∧ dl_i, by FFT.
pub fn weyl_product_fft(u: &PhaseSpaceGrid, v: &PhaseSpaceGrid, hbar: f64) -> Result<PhaseSpaceGrid> {
    weyl_fft_with(u, v, hbar, &identity_pairing(u.n_a))
}

/// Phase e^{−iK_m·x_min} tying the centred coefficient m to the DFT of samples starting at x_min.
fn origin_phase(axes: &[Axis], ms: &[i64]) -> Complex64 {
    let ph: f64 = axes
        .iter()
        .zip(ms)
        .map(|(ax, m)| 2.0 * PI * *m as f64 / ax.length() * ax.min)
        .sum();
    Complex64::from_polar(1.0, -ph)
}

/// Fourier coefficients c(m) with u(x) = Σ_m c(m) e^{iK_m·x}, centred order, Nyquist modes dropped.
fn coefficients(g: &PhaseSpaceGrid) -> Vec<Complex64> {
    let shape = g.shape();
    let mut d = g.data.clone();
    for ax in 0..shape.len() {
        fft_axis(&mut d, &shape, ax, false);
    }
    let total = d.len() as f64;
    let mut out = vec![Complex64::new(0.0, 0.0); d.len()];
    let mut idx = vec![0; shape.len()];
    let mut pos = vec![0; shape.len()];
    let mut ms = vec![0i64; shape.len()];
    for (i, v) in d.iter().enumerate() {
        unravel(i, &shape, &mut idx);
        if idx.iter().zip(&shape).any(|(j, n)| *j == n / 2) {
            continue;
        }
        for k in 0..shape.len() {
            ms[k] = signed_index(idx[k], shape[k]);
            pos[k] = (ms[k] + (shape[k] / 2) as i64) as usize;
        }
        out[ravel(&pos, &shape)] = v * origin_phase(&g.axes, &ms) / total;
    }
    out
}

/// Inverse of `coefficients`.
fn from_coefficients(c: &[Complex64], like: &PhaseSpaceGrid) -> PhaseSpaceGrid {
    let shape = like.shape();
    let mut d = vec![Complex64::new(0.0, 0.0); c.len()];
    let mut idx = vec![0; shape.len()];
    let mut pos = vec![0; shape.len()];
    let mut ms = vec![0i64; shape.len()];
    for (i, v) in c.iter().enumerate() {
        if v.norm_sqr() == 0.0 {
            continue;
        }
        unravel(i, &shape, &mut idx);
        for k in 0..shape.len() {
            ms[k] = idx[k] as i64 - (shape[k] / 2) as i64;
            pos[k] = ms[k].rem_euclid(shape[k] as i64) as usize;
        }
        d[ravel(&pos, &shape)] = v / origin_phase(&like.axes, &ms);
    }
    for ax in 0..shape.len() {
        fft_axis(&mut d, &shape, ax, true);
    }
    like.with_data(d)
}

/// Twisted convolution in the full Fourier domain.
///
/// With M = B^{−T}, c_w(P, K) = Σ_p e^{i(ℏ/2)pᵀMK} Σ_k c_u(p, k) e^{−i(ℏ/2)PᵀMk} c_v(P − p, K − k);
/// the inner sum is a linear convolution over the l-frequencies done with zero-padded FFTs.
pub(crate) fn weyl_fft_with(
    u: &PhaseSpaceGrid,
    v: &PhaseSpaceGrid,
    hbar: f64,
    pairing: &DMatrix<f64>,
) -> Result<PhaseSpaceGrid> {
    check_pair(u, v)?;
    check_hbar(hbar)?;
    let n = u.n_a;
    let mmat = pairing
        .transpose()
        .try_inverse()
        .ok_or_else(|| Error::Singular("pairing matrix".into()))?;
    let shape = u.shape();
    let ashape: Vec<usize> = shape[..n].to_vec();
    let lshape: Vec<usize> = shape[n..].to_vec();
    let na: usize = ashape.iter().product();
    let nl: usize = lshape.iter().product();
    let pshape: Vec<usize> = lshape.iter().map(|c| 2 * c).collect();
    let np: usize = pshape.iter().product();

    let cu = coefficients(u);
    let cv = coefficients(v);

    // wavevectors of the centred coefficient indices
    let wave = |axes: &[Axis], idx: &[usize]| -> Vec<f64> {
        idx.iter()
            .zip(axes)
            .map(|(i, a)| 2.0 * PI * (*i as f64 - (a.count / 2) as f64) / a.length())
            .collect::<Vec<f64>>()
    };
    let a_axes = u.a_axes().to_vec();
    let l_axes = u.l_axes().to_vec();
    let mut tmp = vec![0; n];
    let pvecs: Vec<Vec<f64>> = (0..na)
        .map(|i| {
            unravel(i, &ashape, &mut tmp);
            wave(&a_axes, &tmp)
        })
        .collect();
    // Mk for every l-frequency index
    let mk: Vec<Vec<f64>> = (0..nl)
        .map(|i| {
            unravel(i, &lshape, &mut tmp);
            let k = wave(&l_axes, &tmp);
            (0..n).map(|r| (0..n).map(|c| mmat[(r, c)] * k[c]).sum()).collect()
        })
        .collect();
    let dot = |p: &[f64], q: &[f64]| p.iter().zip(q).map(|(x, y)| x * y).sum::<f64>();
    let ha = 0.5 * hbar;

    let embed = |src: &[Complex64], dst: &mut [Complex64]| {
        let mut idx = vec![0; lshape.len()];
        for (i, s) in src.iter().enumerate() {
            unravel(i, &lshape, &mut idx);
            dst[ravel(&idx, &pshape)] = *s;
        }
    };
    let fft_p = |buf: &mut [Complex64], inverse: bool| {
        for d in 0..pshape.len() {
            fft_axis(buf, &pshape, d, inverse);
        }
    };
    let fv: Vec<Option<Vec<Complex64>>> = (0..na)
        .into_par_iter()
        .map(|ia| {
            let row = &cv[ia * nl..(ia + 1) * nl];
            if row.iter().all(|z| z.norm_sqr() == 0.0) {
                return None;
            }
            let mut buf = vec![Complex64::new(0.0, 0.0); np];
            embed(row, &mut buf);
            for d in 0..pshape.len() {
                crate::fourier::fft_axis(&mut buf, &pshape, d, false);
            }
            Some(buf)
        })
        .collect();
    let nonzero_u: Vec<bool> = (0..na)
        .map(|ia| cu[ia * nl..(ia + 1) * nl].iter().any(|z| z.norm_sqr() != 0.0))
        .collect();

    let half_l: Vec<usize> = lshape.iter().map(|c| c / 2).collect();
    let rows: Vec<Vec<Complex64>> = (0..na)
        .into_par_iter()
        .map(|ip| {
            let mut acc = vec![Complex64::new(0.0, 0.0); nl];
            let mut pi = vec![0usize; n];
            let mut qi = vec![0usize; n];
            let mut di = vec![0usize; n];
            unravel(ip, &ashape, &mut pi);
            if pi.iter().any(|j| *j == 0) {
                return acc;
            }
            let pvec = &pvecs[ip];
            let mut buf = vec![Complex64::new(0.0, 0.0); np];
            let mut lidx = vec![0usize; lshape.len()];
            for iq in 0..na {
                if !nonzero_u[iq] {
                    continue;
                }
                unravel(iq, &ashape, &mut qi);
                // P − p in centred index space
                let mut ok = true;
                for d in 0..n {
                    let h = (ashape[d] / 2) as i64;
                    let m = (pi[d] as i64 - h) - (qi[d] as i64 - h);
                    if m <= -h || m >= h {
                        ok = false;
                        break;
                    }
                    di[d] = (m + h) as usize;
                }
                if !ok {
                    continue;
                }
                let id = ravel(&di, &ashape);
                let fvd = match &fv[id] {
                    Some(f) => f,
                    None => continue,
                };
                buf.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
                let row = &cu[iq * nl..(iq + 1) * nl];
                for (k, c) in row.iter().enumerate() {
                    if c.norm_sqr() == 0.0 {
                        continue;
                    }
                    unravel(k, &lshape, &mut lidx);
                    let ph = -ha * dot(pvec, &mk[k]);
                    buf[ravel(&lidx, &pshape)] = c * Complex64::from_polar(1.0, ph);
                }
                fft_p(&mut buf, false);
                for (b, f) in buf.iter_mut().zip(fvd) {
                    *b *= f;
                }
                fft_p(&mut buf, true);
                let qvec = &pvecs[iq];
                for (kk, a) in acc.iter_mut().enumerate() {
                    unravel(kk, &lshape, &mut lidx);
                    if lidx.iter().any(|j| *j == 0) {
                        continue;
                    }
                    for d in 0..lidx.len() {
                        lidx[d] += half_l[d];
                    }
                    let val = buf[ravel(&lidx, &pshape)] / np as f64;
                    let ph = ha * dot(qvec, &mk[kk]);
                    *a += val * Complex64::from_polar(1.0, ph);
                }
            }
            acc
        })
        .collect();
    let mut cw = Vec::with_capacity(na * nl);
    for r in rows {
        cw.extend(r);
    }
    let mut out = from_coefficients(&cw, u);
    out.hbar = hbar;
    Ok(out)
}

/// Geometry of the oscillatory kernel.
enum Kernel<'a> {
    Flat(DMatrix<f64>),
    Curved(&'a EsetStructure),
}

/// Band-limited refinement of the a-axes by `q` (spectral zero padding).
fn refine_a(g: &PhaseSpaceGrid, q: usize) -> Result<PhaseSpaceGrid> {
    if q == 1 {
        return Ok(g.clone());
    }
    if !q.is_power_of_two() {
        return Err(Error::Argument(format!("refinement {q} is not a power of two")));
    }
    let n = g.n_a;
    let shape = g.shape();
    let mut spec = g.data.clone();
    for d in 0..n {
        fft_axis(&mut spec, &shape, d, false);
    }
    let mut axes = g.axes.clone();
    for ax in axes[..n].iter_mut() {
        ax.count *= q;
        ax.step /= q as f64;
    }
    let mut out = PhaseSpaceGrid::zeros(g.n_a, g.n_l, axes, false, g.hbar)?;
    let big = out.shape();
    let mut idx = vec![0; shape.len()];
    let mut pos = vec![0; shape.len()];
    for (i, v) in spec.iter().enumerate() {
        unravel(i, &shape, &mut idx);
        let mut w = 1.0;
        let mut targets: Vec<Vec<usize>> = vec![vec![]];
        for d in 0..shape.len() {
            if d < n {
                let nn = shape[d];
                let m = signed_index(idx[d], nn);
                let opts: Vec<usize> = if idx[d] == nn / 2 {
                    w *= 0.5;
                    vec![(big[d] - nn / 2) % big[d], nn / 2]
                } else {
                    vec![m.rem_euclid(big[d] as i64) as usize]
                };
                targets = targets
                    .into_iter()
                    .flat_map(|t| {
                        opts.iter().map(move |o| {
                            let mut t2 = t.clone();
                            t2.push(*o);
                            t2
                        })
                    })
                    .collect();
            } else {
                for t in targets.iter_mut() {
                    t.push(idx[d]);
                }
            }
        }
        for t in targets {
            pos.copy_from_slice(&t);
            out.data[ravel(&pos, &big)] += v * w;
        }
    }
    for d in 0..n {
        fft_axis(&mut out.data, &big, d, true);
    }
    let norm = 1.0 / g.a_len() as f64;
    out.data.iter_mut().for_each(|z| *z *= norm);
    Ok(out)
}

/// Quadrature of u ⋆ v(x₀) = C ∫∫ e^{(2i/ℏ)S(x₀,x₁,x₂)} J(a₂−a₁) u(x₁) v(x₂).
///
/// The l-integrals are evaluated exactly for band-limited data; the a-integrals are
/// trapezoidal sums on an a-grid refined `refine` times.
fn kernel_quadrature(
    kind: Kernel<'_>,
    u: &PhaseSpaceGrid,
    v: &PhaseSpaceGrid,
    hbar: f64,
    refine: usize,
) -> Result<PhaseSpaceGrid> {
    check_pair(u, v)?;
    check_hbar(hbar)?;
    let n = u.n_a;
    let uf = refine_a(u, refine)?;
    let vf = refine_a(v, refine)?;
    let fshape: Vec<usize> = uf.shape()[..n].to_vec();
    let nf: usize = fshape.iter().product();
    let hf: Vec<f64> = uf.a_axes().iter().map(|a| a.step).collect();
    let l_axes = u.l_axes().to_vec();
    let lshape: Vec<usize> = l_axes.iter().map(|a| a.count).collect();
    let nl: usize = lshape.iter().product();

    // difference multi-indices δ ∈ (−N_f, N_f)^n, stored at δ + N_f − 1
    let dshape: Vec<usize> = fshape.iter().map(|c| 2 * c - 1).collect();
    let nd: usize = dshape.iter().product();
    let diff_slot = |a: &[usize], b: &[usize]| -> usize {
        let mut s = 0;
        for d in 0..n {
            s = s * dshape[d] + (a[d] + fshape[d] - 1 - b[d]);
        }
        s
    };
    let scale = 2.0 / hbar;
    let info: Vec<(Vec<f64>, f64)> = (0..nd)
        .into_par_iter()
        .map(|i| {
            let mut idx = vec![0; n];
            unravel(i, &dshape, &mut idx);
            let d: Vec<f64> = (0..n)
                .map(|k| (idx[k] as f64 - (fshape[k] - 1) as f64) * hf[k])
                .collect();
            match &kind {
                Kernel::Flat(b) => {
                    let w: Vec<f64> = (0..n).map(|j| scale * (0..n).map(|r| b[(r, j)] * d[r]).sum::<f64>()).collect();
                    Ok((w, 1.0))
                }
                Kernel::Curved(e) => {
                    let z = e.zeta_covector(&d);
                    let amp = e.twist_jacobian_det(&d).abs();
                    Ok((z.iter().map(|x| scale * x).collect(), amp))
                }
            }
        })
        .collect::<Result<Vec<_>>>()?;

    let lpts: Vec<Vec<f64>> = {
        let mut idx = vec![0; lshape.len()];
        (0..nl)
            .map(|i| {
                unravel(i, &lshape, &mut idx);
                idx.iter().zip(&l_axes).map(|(j, a)| a.coord(*j)).collect()
            })
            .collect()
    };
    let hl: f64 = l_axes.iter().map(|a| a.step).product();
    let in_band = |w: &[f64]| w.iter().zip(&l_axes).all(|(x, a)| x.abs() < a.nyquist());
    let dotl = |w: &[f64], l: &[f64]| w.iter().zip(l).map(|(x, y)| x * y).sum::<f64>();

    // ∫ e^{iω(δ)·l} f(a, l) dl for every fine a and every difference δ
    let transform = |f: &PhaseSpaceGrid| -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); nf * nd];
        out.par_chunks_mut(nd).enumerate().for_each(|(ia, row)| {
            let s = &f.data[ia * nl..(ia + 1) * nl];
            if s.iter().all(|z| z.norm_sqr() == 0.0) {
                return;
            }
            for (id, slot) in row.iter_mut().enumerate() {
                let w = &info[id].0;
                if !in_band(w) {
                    continue;
                }
                let mut acc = Complex64::new(0.0, 0.0);
                for (z, l) in s.iter().zip(&lpts) {
                    acc += z * Complex64::from_polar(1.0, dotl(w, l));
                }
                *slot = acc * hl;
            }
        });
        out
    };
    let uh = transform(&uf);
    let vh = transform(&vf);

    let coarse_shape: Vec<usize> = u.a_axes().iter().map(|a| a.count).collect();
    let nc: usize = coarse_shape.iter().product();
    let c = weyl_constant(n, hbar) * hf.iter().product::<f64>().powi(2);
    let fidx: Vec<Vec<usize>> = (0..nf)
        .map(|i| {
            let mut idx = vec![0; n];
            unravel(i, &fshape, &mut idx);
            idx
        })
        .collect();
    let rows: Vec<Vec<Complex64>> = (0..nc)
        .into_par_iter()
        .map(|ic| {
            let mut cidx = vec![0; n];
            unravel(ic, &coarse_shape, &mut cidx);
            let a0: Vec<usize> = cidx.iter().map(|i| i * refine).collect();
            let mut dsum = vec![Complex64::new(0.0, 0.0); nd];
            for (i1, a1) in fidx.iter().enumerate() {
                let d01 = diff_slot(&a0, a1);
                let vrow_off = d01;
                for (i2, a2) in fidx.iter().enumerate() {
                    let uu = uh[i1 * nd + diff_slot(a2, &a0)];
                    if uu.norm_sqr() == 0.0 {
                        continue;
                    }
                    let vv = vh[i2 * nd + vrow_off];
                    if vv.norm_sqr() == 0.0 {
                        continue;
                    }
                    dsum[diff_slot(a1, a2)] += uu * vv;
                }
            }
            let mut out = vec![Complex64::new(0.0, 0.0); nl];
            for (id, s) in dsum.iter().enumerate() {
                if s.norm_sqr() == 0.0 {
                    continue;
                }
                let (w, amp) = &info[id];
                let s = s * (*amp * c);
                for (o, l) in out.iter_mut().zip(&lpts) {
                    *o += s * Complex64::from_polar(1.0, dotl(w, l));
                }
            }
            out
        })
        .collect();
    let mut data = Vec::with_capacity(nc * nl);
    for r in rows {
        data.extend(r);
    }
    let mut out = u.with_data(data);
    out.hbar = hbar;
    Ok(out)
}

/// Weyl product by direct quadrature (oracle).
pub fn weyl_product_quad(u: &PhaseSpaceGrid, v: &PhaseSpaceGrid, hbar: f64, refine: usize) -> Result<PhaseSpaceGrid> {
    kernel_quadrature(Kernel::Flat(identity_pairing(u.n_a)), u, v, hbar, refine)
}

fn check_structure(e: &EsetStructure, u: &PhaseSpaceGrid) -> Result<()> {
    if u.n_a != e.n_a || u.n_l != e.n_l {
        return Err(Error::GridMismatch("grid dimensions do not match the structure".into()));
    }
    Ok(())
}

/// a ⋆_ℏ b by the method in `params`.
pub fn star_hbar(e: &EsetStructure, u: &PhaseSpaceGrid, v: &PhaseSpaceGrid, params: &StarParams) -> Result<PhaseSpaceGrid> {
    params.validate()?;
    check_structure(e, u)?;
    check_pair(u, v)?;
    let hbar = params.hbar;
    match params.method {
        Method::Flat => weyl_fft_with(u, v, hbar, e.pairing()),
        Method::Kernel => star_hbar_kernel(e, u, v, params),
        Method::Conjugation => {
            let opts = params.transform_options();
            let up = u.pad_l(params.oversample)?;
            let vp = v.pad_l(params.oversample)?;
            let tu = transform::t_hbar(e, &up, hbar, &opts)?;
            let tv = transform::t_hbar(e, &vp, hbar, &opts)?;
            let w = weyl_fft_with(&tu, &tv, hbar, e.pairing())?;
            transform::tau_hbar(e, &w, hbar, &opts)?.crop_l(u).map(|mut g| {
                g.hbar = hbar;
                g
            })
        }
    }
}

/// Kernel-path quadrature; `Method::Flat` swaps in amplitude 1 and the flat phase.
pub fn star_hbar_kernel(e: &EsetStructure, u: &PhaseSpaceGrid, v: &PhaseSpaceGrid, params: &StarParams) -> Result<PhaseSpaceGrid> {
    params.validate()?;
    check_structure(e, u)?;
    let kind = if params.method == Method::Flat {
        Kernel::Flat(e.pairing().clone())
    } else {
        Kernel::Curved(e)
    };
    kernel_quadrature(kind, u, v, params.hbar, params.kernel_refine)
}

/// Spectral derivative ∂^μ along all axes (μ a multi-index over the 2n axes).
fn spectral_derivative(g: &PhaseSpaceGrid, mu: &[usize]) -> PhaseSpaceGrid {
    if mu.iter().all(|m| *m == 0) {
        return g.clone();
    }
    let shape = g.shape();
    let mut d = g.data.clone();
    for (ax, &m) in mu.iter().enumerate() {
        if m == 0 {
            continue;
        }
        fft_axis(&mut d, &shape, ax, false);
        let n = shape[ax];
        let len = g.axes[ax].length();
        let stride: usize = shape[ax + 1..].iter().product();
        let fac: Vec<Complex64> = (0..n)
            .map(|j| {
                if j == n / 2 && m % 2 == 1 {
                    return Complex64::new(0.0, 0.0);
                }
                let k = 2.0 * PI * signed_index(j, n) as f64 / len;
                Complex64::new(0.0, k).powu(m as u32) / n as f64
            })
            .collect();
        d.par_iter_mut().enumerate().for_each(|(i, z)| {
            *z *= fac[(i / stride) % n];
        });
        fft_axis(&mut d, &shape, ax, true);
    }
    g.with_data(d)
}

/// Standard Poisson tensor on (a, l) coordinates for pairing B: Π = [[0, B^{−T}], [−B^{−1}, 0]].
pub fn poisson_tensor_for(pairing: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = pairing.nrows();
    let m = pairing
        .transpose()
        .try_inverse()
        .ok_or_else(|| Error::Singular("pairing matrix".into()))?;
    let mut p = DMatrix::zeros(2 * n, 2 * n);
    p.view_mut((0, n), (n, n)).copy_from(&m);
    p.view_mut((n, 0), (n, n)).copy_from(&(-m.transpose()));
    Ok(p)
}

pub const MAX_MOYAL_ORDER: usize = 6;

/// Moyal terms t_k = (1/k!) Π^{i₁j₁}⋯Π^{i_kj_k} ∂_{i₁⋯i_k}u ∂_{j₁⋯j_k}v for k = 0..=order.
pub fn moyal_terms_with(
    u: &PhaseSpaceGrid,
    v: &PhaseSpaceGrid,
    pi: &DMatrix<f64>,
    order: usize,
) -> Result<Vec<PhaseSpaceGrid>> {
    check_pair(u, v)?;
    if order > MAX_MOYAL_ORDER {
        return Err(Error::Argument(format!("moyal order {order} exceeds {MAX_MOYAL_ORDER}")));
    }
    let dim = u.axes.len();
    if pi.nrows() != dim || pi.ncols() != dim {
        return Err(Error::Shape("Poisson tensor size".into()));
    }
    let pairs: Vec<(usize, usize, f64)> = (0..dim)
        .flat_map(|i| (0..dim).map(move |j| (i, j)))
        .filter_map(|(i, j)| (pi[(i, j)] != 0.0).then(|| (i, j, pi[(i, j)])))
        .collect();
    let mut cache_u: HashMap<Vec<usize>, PhaseSpaceGrid> = HashMap::new();
    let mut cache_v: HashMap<Vec<usize>, PhaseSpaceGrid> = HashMap::new();
    let mut terms = Vec::with_capacity(order + 1);
    for k in 0..=order {
        let mut acc = u.with_data(vec![Complex64::new(0.0, 0.0); u.data.len()]);
        for counts in compositions(k, pairs.len()) {
            // multinomial k!/Πc! with the 1/k! prefactor leaves 1/Πc!
            let mut coef = 1.0;
            let mut mu = vec![0; dim];
            let mut nu = vec![0; dim];
            for (c, (i, j, p)) in counts.iter().zip(&pairs) {
                coef *= p.powi(*c as i32) / factorial(*c);
                mu[*i] += c;
                nu[*j] += c;
            }
            let du = cache_u.entry(mu.clone()).or_insert_with(|| spectral_derivative(u, &mu));
            let du = du.clone();
            let dv = cache_v.entry(nu.clone()).or_insert_with(|| spectral_derivative(v, &nu));
            for ((a, x), y) in acc.data.iter_mut().zip(&du.data).zip(&dv.data) {
                *a += x * y * coef;
            }
        }
        terms.push(acc);
    }
    Ok(terms)
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|v| v as f64).product()
}

/// All ways to write k as an ordered sum of `parts` nonnegative integers.
fn compositions(k: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 0 {
        return if k == 0 { vec![vec![]] } else { vec![] };
    }
    let mut out = Vec::new();
    for first in 0..=k {
        for mut rest in compositions(k - first, parts - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// Σ_{k≤order} ν^k t_k for the standard Poisson tensor.
pub fn moyal_series(u: &PhaseSpaceGrid, v: &PhaseSpaceGrid, nu: Complex64, order: usize) -> Result<PhaseSpaceGrid> {
    let pi = poisson_tensor_for(&identity_pairing(u.n_a))?;
    let terms = moyal_terms_with(u, v, &pi, order)?;
    let mut out = terms[0].clone();
    let mut p = Complex64::new(1.0, 0.0);
    for t in &terms[1..] {
        p *= nu;
        for (o, x) in out.data.iter_mut().zip(&t.data) {
            *o += x * p;
        }
    }
    Ok(out)
}

/// ν for a given ℏ: ℏ/(2i).
pub fn nu_of_hbar(hbar: f64) -> Complex64 {
    Complex64::new(0.0, -0.5 * hbar)
}

/// {u, v} = ∂_a u · ∂_l v − ∂_l u · ∂_a v.
pub fn poisson_bracket(u: &PhaseSpaceGrid, v: &PhaseSpaceGrid) -> Result<PhaseSpaceGrid> {
    let pi = poisson_tensor_for(&identity_pairing(u.n_a))?;
    Ok(moyal_terms_with(u, v, &pi, 1)?.pop().expect("order 1 term"))
}

pub fn poisson_bracket_with(u: &PhaseSpaceGrid, v: &PhaseSpaceGrid, pairing: &DMatrix<f64>) -> Result<PhaseSpaceGrid> {
    let pi = poisson_tensor_for(pairing)?;
    Ok(moyal_terms_with(u, v, &pi, 1)?.pop().expect("order 1 term"))
}

/// ∫ u.
pub fn trace(u: &PhaseSpaceGrid) -> Complex64 {
    u.data.iter().sum::<Complex64>() * u.cell_volume()
}

/// ∫ u v̄.
pub fn inner_product_l2(u: &PhaseSpaceGrid, v: &PhaseSpaceGrid) -> Result<Complex64> {
    u.ensure_compatible(v)?;
    Ok(u.data.iter().zip(&v.data).map(|(x, y)| x * y.conj()).sum::<Complex64>() * u.cell_volume())
}

/// (u, v)_E = (T_ℏ u, T_ℏ v)_{L²}.
pub fn inner_product_e(
    e: &EsetStructure,
    u: &PhaseSpaceGrid,
    v: &PhaseSpaceGrid,
    hbar: f64,
    opts: &TransformOptions,
) -> Result<Complex64> {
    let tu = transform::t_hbar(e, u, hbar, opts)?;
    let tv = transform::t_hbar(e, v, hbar, opts)?;
    inner_product_l2(&tu, &tv)
}

pub const POWER_ITERATIONS: usize = 30;

/// Power-iteration estimate of ‖L_a‖ for L_a b = a ⋆ b in the E inner product.
pub fn operator_norm_estimate(e: &EsetStructure, a: &PhaseSpaceGrid, params: &StarParams) -> Result<f64> {
    let opts = params.transform_options();
    let opts = TransformOptions {
        oversample: params.oversample,
        ..opts
    };
    if a.data.iter().all(|z| z.norm_sqr() == 0.0) {
        return Ok(0.0);
    }
    let enorm = |b: &PhaseSpaceGrid| -> Result<f64> { Ok(inner_product_e(e, b, b, params.hbar, &opts)?.re.sqrt()) };
    let mut b = a.clone();
    b.fill(|x, l| {
        let r2: f64 = x.iter().map(|v| (v - 0.3).powi(2)).sum::<f64>() + l.iter().map(|v| (v + 0.2).powi(2)).sum::<f64>();
        Complex64::new((-r2 / 2.25).exp(), 0.0)
    });
    let ac = a.conj();
    let mut est = 0.0;
    for _ in 0..POWER_ITERATIONS {
        let nb = enorm(&b)?;
        if nb == 0.0 {
            return Ok(0.0);
        }
        b = b.scale(Complex64::new(1.0 / nb, 0.0));
        let ab = star_hbar(e, a, &b, params)?;
        let w = star_hbar(e, &ac, &ab, params)?;
        est = inner_product_e(e, &w, &b, params.hbar, &opts)?.re.max(0.0).sqrt();
        b = w;
    }
    Ok(est)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::gaussian;

    #[test]
    fn compositions_count() {
        assert_eq!(compositions(3, 2).len(), 4);
        assert_eq!(compositions(0, 3), vec![vec![0, 0, 0]]);
    }

    #[test]
    fn coefficient_round_trip() {
        let g = gaussian(1, 64, 8.0, 1.0, &[0.3, -0.4], 1.0, 0.8).unwrap();
        let back = from_coefficients(&coefficients(&g), &g);
        assert!(back.rel_l2_diff(&g) < 1e-9);
    }

    #[test]
    fn weyl_small_hbar_is_pointwise() {
        let u = gaussian(1, 64, 8.0, 1.0, &[0.3, 0.0], 1.2, 1.0).unwrap();
        let v = gaussian(1, 64, 8.0, 1.0, &[-0.2, 0.4], 1.0, 1.3).unwrap();
        let w = weyl_product_fft(&u, &v, 1e-6).unwrap();
        assert!(w.rel_l2_diff(&u.mul(&v)) < 1e-5);
    }

    #[test]
    fn ground_state_is_idempotent() {
        let hbar = 2.0;
        let u0 = PhaseSpaceGrid::from_fn(1, 128, 8.0, hbar, |a, l| Complex64::new(2.0 * (-(a[0] * a[0] + l[0] * l[0]) / hbar).exp(), 0.0)).unwrap();
        let w = weyl_product_fft(&u0, &u0, hbar).unwrap();
        assert!(w.rel_l2_diff(&u0) < 1e-12);
    }

    #[test]
    fn zero_factor_gives_zero() {
        let u = gaussian(1, 16, 4.0, 1.0, &[0.0, 0.0], 1.0, 1.0).unwrap();
        let z = u.map(|_| Complex64::new(0.0, 0.0));
        assert_eq!(weyl_product_quad(&u, &z, 1.0, 2).unwrap().max_abs(), 0.0);
        assert_eq!(weyl_product_fft(&z, &u, 1.0).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn refine_reproduces_band_limited_data() {
        let g = gaussian(1, 64, 8.0, 1.0, &[0.2, 0.0], 1.2, 1.0).unwrap();
        let r = refine_a(&g, 4).unwrap();
        let mut want = r.clone();
        want.fill(|a, l| Complex64::new((-((a[0] - 0.2) / 1.2).powi(2) - l[0] * l[0]).exp(), 0.0));
        assert!(r.rel_l2_diff(&want) < 1e-10);
    }
}
