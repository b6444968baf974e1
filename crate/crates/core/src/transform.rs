//! Partial Fourier transform, dilations, twist pullbacks and the
//! intertwiners T_ℏ, τ_ℏ; plus exact grid pullbacks by the group action.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eset::EsetStructure;
use crate::error::{Error, Result};
use crate::fourier::{fft_axis, shift_factor};
use crate::geometry::{self, GroupElement, Point};
use crate::grid::{ravel, unravel, Axis, PhaseSpaceGrid};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Interpolation {
    #[default]
    Cubic,
    Sinc,
}

impl std::str::FromStr for Interpolation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cubic" => Ok(Interpolation::Cubic),
            "sinc" => Ok(Interpolation::Sinc),
            _ => Err(Error::Argument(format!("unknown interpolation `{s}`"))),
        }
    }
}

/// Settings shared by the transform stack.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransformOptions {
    pub interpolation: Interpolation,
    /// Zero-padding factor of the l-axes around every transform (power of two).
    pub oversample: usize,
    /// Replace φ by the identity.
    pub flat: bool,
}

impl Default for TransformOptions {
    fn default() -> Self {
        TransformOptions {
            interpolation: Interpolation::Cubic,
            oversample: 1,
            flat: false,
        }
    }
}

impl TransformOptions {
    pub fn sinc(oversample: usize) -> Self {
        TransformOptions {
            interpolation: Interpolation::Sinc,
            oversample,
            flat: false,
        }
    }
}

/// Coordinate of sample i on a centred axis, computed so that i and N − i are exact negatives.
#[inline]
fn sym_coord(ax: &Axis, i: usize) -> f64 {
    (i as f64 - (ax.count / 2) as f64) * ax.step
}

fn check_dims(e: &EsetStructure, g: &PhaseSpaceGrid) -> Result<()> {
    if g.n_a != e.n_a || g.n_l != e.n_l {
        return Err(Error::GridMismatch(format!(
            "grid has n_a = {}, n_l = {}; structure has {}, {}",
            g.n_a, g.n_l, e.n_a, e.n_l
        )));
    }
    Ok(())
}

fn check_centered(axes: &[Axis]) -> Result<()> {
    if let Some(i) = axes.iter().position(|a| !a.is_centered()) {
        return Err(Error::GridMismatch(format!("axis {i} is not centred at 0")));
    }
    Ok(())
}

fn parity(idx: &[usize]) -> f64 {
    if idx.iter().sum::<usize>() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Multiplies every sample by f(l-multi-index).
fn modulate_l<F: Fn(&[usize]) -> Complex64 + Sync>(g: &mut PhaseSpaceGrid, f: F) {
    let lshape: Vec<usize> = g.l_axes().iter().map(|a| a.count).collect();
    let sl = g.slice_len();
    let table: Vec<Complex64> = (0..sl)
        .map(|i| {
            let mut idx = vec![0; lshape.len()];
            unravel(i, &lshape, &mut idx);
            f(&idx)
        })
        .collect();
    g.data.par_chunks_mut(sl).for_each(|s| {
        for (v, t) in s.iter_mut().zip(&table) {
            *v *= t;
        }
    });
}

fn fft_l(g: &mut PhaseSpaceGrid, inverse: bool) {
    let shape = g.shape();
    for d in g.n_a..shape.len() {
        fft_axis(&mut g.data, &shape, d, inverse);
    }
}

/// Fu(a, k) = ∫ e^{−ik·l} u(a, l) dl along the l-axes, with k = Bᵀα.
pub fn partial_fourier(e: &EsetStructure, g: &PhaseSpaceGrid) -> Result<PhaseSpaceGrid> {
    check_dims(e, g)?;
    partial_fourier_raw(g)
}

pub(crate) fn partial_fourier_raw(g: &PhaseSpaceGrid) -> Result<PhaseSpaceGrid> {
    g.ensure_dual(false)?;
    check_centered(g.l_axes())?;
    let mut out = g.clone();
    modulate_l(&mut out, |m| Complex64::new(parity(m), 0.0));
    fft_l(&mut out, false);
    let axes: Vec<Axis> = g.l_axes().to_vec();
    let h: f64 = axes.iter().map(|a| a.step).product();
    modulate_l(&mut out, |j| {
        let s: usize = j.iter().zip(&axes).map(|(j, a)| j + a.count / 2).sum();
        Complex64::new(if s % 2 == 0 { h } else { -h }, 0.0)
    });
    let n_a = g.n_a;
    for (d, ax) in axes.iter().enumerate() {
        out.axes[n_a + d] = ax.dual();
    }
    out.dual = true;
    Ok(out)
}

pub fn partial_fourier_inv(e: &EsetStructure, g: &PhaseSpaceGrid) -> Result<PhaseSpaceGrid> {
    check_dims(e, g)?;
    partial_fourier_inv_raw(g)
}

pub(crate) fn partial_fourier_inv_raw(g: &PhaseSpaceGrid) -> Result<PhaseSpaceGrid> {
    g.ensure_dual(true)?;
    let mut out = g.clone();
    let duals: Vec<Axis> = g.l_axes().to_vec();
    modulate_l(&mut out, |j| {
        let s: usize = j.iter().zip(&duals).map(|(j, a)| j + a.count / 2).sum();
        Complex64::new(if s % 2 == 0 { 1.0 } else { -1.0 }, 0.0)
    });
    fft_l(&mut out, true);
    let prim: Vec<Axis> = duals.iter().map(|a| a.primal_of_dual()).collect();
    let scale: f64 = prim.iter().map(|a| 1.0 / (a.count as f64 * a.step)).product();
    modulate_l(&mut out, |m| Complex64::new(scale * parity(m), 0.0));
    let n_a = g.n_a;
    for (d, ax) in prim.iter().enumerate() {
        out.axes[n_a + d] = *ax;
    }
    out.dual = false;
    Ok(out)
}

/// ‖Fu‖₂ / ‖u‖₂ for the discrete normalisation, (2π)^{n/2}.
pub fn plancherel_constant(n_l: usize) -> f64 {
    (2.0 * PI).powf(n_l as f64 / 2.0)
}

/// Warped dual points, one per dual-slice sample; None evaluates to zero.
type Warp = Vec<Option<Vec<f64>>>;

fn dual_points(axes: &[Axis]) -> Vec<Vec<f64>> {
    let shape: Vec<usize> = axes.iter().map(|a| a.count).collect();
    let n: usize = shape.iter().product();
    let mut idx = vec![0; shape.len()];
    (0..n)
        .map(|i| {
            unravel(i, &shape, &mut idx);
            idx.iter().zip(axes).map(|(j, a)| sym_coord(a, *j)).collect()
        })
        .collect()
}

fn in_band(k: &[f64], axes: &[Axis]) -> bool {
    k.iter()
        .zip(axes)
        .all(|(v, a)| v.abs() < (a.count / 2) as f64 * a.step)
}

/// k ↦ Bᵀ (2/ℏ) φ(ℏ B^{−T} k / 2), or with φ⁻¹.
fn twist_warp(e: &EsetStructure, axes: &[Axis], hbar: f64, inverse: bool) -> Result<Warp> {
    let b = e.pairing().clone();
    let bt_inv = b
        .transpose()
        .try_inverse()
        .ok_or_else(|| Error::Singular("pairing matrix".into()))?;
    let pts = dual_points(axes);
    pts.par_iter()
        .map(|k| {
            // the Nyquist bin has no conjugate partner; leaving it out keeps real data real
            if !in_band(k, axes) {
                return Ok(None);
            }
            let alpha = &bt_inv * DVector::from_column_slice(k);
            let arg: Vec<f64> = alpha.iter().map(|v| 0.5 * hbar * v).collect();
            let w = if inverse { e.twist_inverse(&arg)? } else { e.twist(&arg)? };
            let w = DVector::from_vec(w) * (2.0 / hbar);
            let kp: Vec<f64> = (b.transpose() * w).iter().copied().collect();
            Ok(if in_band(&kp, axes) && kp.iter().all(|v| v.is_finite()) {
                Some(kp)
            } else {
                None
            })
        })
        .collect()
}

fn scale_warp(axes: &[Axis], lambda: f64) -> Warp {
    dual_points(axes)
        .into_iter()
        .map(|k| {
            let kp: Vec<f64> = k.iter().map(|v| v * lambda).collect();
            (in_band(&k, axes) && in_band(&kp, axes)).then_some(kp)
        })
        .collect()
}

/// Per-point phase tables h_d e^{−i k′_d l_m} for the band-limited evaluation.
struct PhaseTables {
    dims: Vec<usize>,
    tables: Vec<Option<Vec<Complex64>>>,
}

impl PhaseTables {
    fn new(prim: &[Axis], warp: &Warp) -> Self {
        let dims: Vec<usize> = prim.iter().map(|a| a.count).collect();
        let tables = warp
            .par_iter()
            .map(|w| {
                w.as_ref().map(|k| {
                    let mut t = Vec::with_capacity(dims.iter().sum());
                    for (d, ax) in prim.iter().enumerate() {
                        for m in 0..ax.count {
                            t.push(Complex64::from_polar(ax.step, -k[d] * sym_coord(ax, m)));
                        }
                    }
                    t
                })
            })
            .collect();
        PhaseTables { dims, tables }
    }

    /// Σ_m u[m] Π_d t_d[m_d] by successive contraction of the last axis.
    fn eval(&self, j: usize, u: &[Complex64], scratch: &mut Vec<Complex64>) -> Complex64 {
        let t = match &self.tables[j] {
            Some(t) => t,
            None => return Complex64::new(0.0, 0.0),
        };
        let nd = self.dims.len();
        if nd == 1 {
            return u.iter().zip(t).map(|(a, b)| a * b).sum();
        }
        let mut offs = vec![0; nd];
        for d in 1..nd {
            offs[d] = offs[d - 1] + self.dims[d - 1];
        }
        scratch.clear();
        scratch.extend_from_slice(u);
        let mut len = u.len();
        for d in (0..nd).rev() {
            let n = self.dims[d];
            let td = &t[offs[d]..offs[d] + n];
            let outer = len / n;
            for o in 0..outer {
                let s: Complex64 = scratch[o * n..(o + 1) * n].iter().zip(td).map(|(a, b)| a * b).sum();
                scratch[o] = s;
            }
            len = outer;
        }
        scratch[0]
    }
}

/// Band-limited evaluation of the partial Fourier transform of a primal grid at warped points.
fn sinc_eval_from_primal(p: &PhaseSpaceGrid, warp: &Warp) -> PhaseSpaceGrid {
    let tables = PhaseTables::new(p.l_axes(), warp);
    let sl = p.slice_len();
    let mut out = p.clone();
    out.data
        .par_chunks_mut(sl)
        .zip(p.data.par_chunks(sl))
        .for_each(|(o, u)| {
            let mut scratch = Vec::new();
            for (j, v) in o.iter_mut().enumerate() {
                *v = tables.eval(j, u, &mut scratch);
            }
        });
    let n_a = p.n_a;
    for (d, ax) in p.l_axes().iter().enumerate() {
        out.axes[n_a + d] = ax.dual();
    }
    out.dual = true;
    out
}

/// Keys cubic convolution kernel (a = −1/2).
#[inline]
fn keys(x: f64) -> f64 {
    let x = x.abs();
    if x <= 1.0 {
        (1.5 * x - 2.5) * x * x + 1.0
    } else if x < 2.0 {
        ((-0.5 * x + 2.5) * x - 4.0) * x + 2.0
    } else {
        0.0
    }
}

/// Stencil (first index, 4 weights) for position x on an axis; indices outside are dropped later.
fn cubic_stencil(ax: &Axis, x: f64) -> (i64, [f64; 4]) {
    let t = (x - sym_coord(ax, 0)) / ax.step;
    let base = t.floor() as i64;
    let mut w = [0.0; 4];
    for (q, wq) in w.iter_mut().enumerate() {
        *wq = keys(t - (base - 1 + q as i64) as f64);
    }
    (base - 1, w)
}

fn cubic_eval_on_slice(axes: &[Axis], u: &[Complex64], x: &[f64]) -> Complex64 {
    let nd = axes.len();
    let stencils: Vec<(i64, [f64; 4])> = axes.iter().zip(x).map(|(a, v)| cubic_stencil(a, *v)).collect();
    let shape: Vec<usize> = axes.iter().map(|a| a.count).collect();
    let mut acc = Complex64::new(0.0, 0.0);
    let total = 4usize.pow(nd as u32);
    let mut idx = vec![0usize; nd];
    'outer: for c in 0..total {
        let mut r = c;
        let mut w = 1.0;
        for d in (0..nd).rev() {
            let q = r % 4;
            r /= 4;
            let i = stencils[d].0 + q as i64;
            if i < 0 || i >= shape[d] as i64 {
                continue 'outer;
            }
            idx[d] = i as usize;
            w *= stencils[d].1[q];
        }
        if w != 0.0 {
            acc += u[ravel(&idx, &shape)] * w;
        }
    }
    acc
}

fn cubic_eval_on_dual(g: &PhaseSpaceGrid, warp: &Warp) -> PhaseSpaceGrid {
    let sl = g.slice_len();
    let axes = g.l_axes().to_vec();
    let mut out = g.clone();
    out.data
        .par_chunks_mut(sl)
        .zip(g.data.par_chunks(sl))
        .for_each(|(o, u)| {
            for (j, v) in o.iter_mut().enumerate() {
                *v = match &warp[j] {
                    Some(k) => cubic_eval_on_slice(&axes, u, k),
                    None => Complex64::new(0.0, 0.0),
                };
            }
        });
    out
}

fn resample_dual(g: &PhaseSpaceGrid, warp: &Warp, interp: Interpolation) -> Result<PhaseSpaceGrid> {
    match interp {
        Interpolation::Cubic => Ok(cubic_eval_on_dual(g, warp)),
        Interpolation::Sinc => {
            let p = partial_fourier_inv_raw(g)?;
            Ok(sinc_eval_from_primal(&p, warp))
        }
    }
}

fn oversample_of(opts: &TransformOptions) -> Result<usize> {
    let os = opts.oversample.max(1);
    if !os.is_power_of_two() {
        return Err(Error::Argument(format!("oversample {os} is not a power of two")));
    }
    Ok(os)
}

/// (φ_ℏ* û)(a, k) = û(a, φ_ℏ(k)); φ_ℏ⁻¹ when `inverse` is set.
pub fn pullback_phi(
    e: &EsetStructure,
    g: &PhaseSpaceGrid,
    hbar: f64,
    inverse: bool,
    opts: &TransformOptions,
) -> Result<PhaseSpaceGrid> {
    check_dims(e, g)?;
    g.ensure_dual(true)?;
    check_hbar(hbar)?;
    if opts.flat {
        return Ok(g.clone());
    }
    let warp = twist_warp(e, g.l_axes(), hbar, inverse)?;
    resample_dual(g, &warp, opts.interpolation)
}

fn check_hbar(hbar: f64) -> Result<()> {
    if !(hbar > 0.0) || !hbar.is_finite() {
        return Err(Error::Argument(format!("hbar must be positive, got {hbar}")));
    }
    Ok(())
}

fn conjugate(
    e: &EsetStructure,
    g: &PhaseSpaceGrid,
    hbar: f64,
    inverse: bool,
    opts: &TransformOptions,
) -> Result<PhaseSpaceGrid> {
    check_dims(e, g)?;
    g.ensure_dual(false)?;
    check_hbar(hbar)?;
    let mut out = if opts.flat {
        g.clone()
    } else {
        let p = g.pad_l(oversample_of(opts)?)?;
        check_centered(p.l_axes())?;
        let duals: Vec<Axis> = p.l_axes().iter().map(|a| a.dual()).collect();
        let warp = twist_warp(e, &duals, hbar, inverse)?;
        let d = match opts.interpolation {
            Interpolation::Sinc => sinc_eval_from_primal(&p, &warp),
            Interpolation::Cubic => cubic_eval_on_dual(&partial_fourier_raw(&p)?, &warp),
        };
        partial_fourier_inv_raw(&d)?.crop_l(g)?
    };
    out.hbar = hbar;
    Ok(out)
}

/// T_ℏ = F⁻¹ ∘ φ_ℏ* ∘ F.
pub fn t_hbar(e: &EsetStructure, g: &PhaseSpaceGrid, hbar: f64, opts: &TransformOptions) -> Result<PhaseSpaceGrid> {
    conjugate(e, g, hbar, false, opts)
}

/// τ_ℏ = F⁻¹ ∘ (φ_ℏ⁻¹)* ∘ F.
pub fn tau_hbar(e: &EsetStructure, g: &PhaseSpaceGrid, hbar: f64, opts: &TransformOptions) -> Result<PhaseSpaceGrid> {
    conjugate(e, g, hbar, true, opts)
}

/// Matrix of 1-d resampling x_i ↦ λ x_i on a centred axis.
fn dilation_matrix(ax: &Axis, lambda: f64, interp: Interpolation) -> DMatrix<f64> {
    let n = ax.count;
    let half = 0.5 * ax.length();
    DMatrix::from_fn(n, n, |i, m| {
        let x = lambda * sym_coord(ax, i);
        if x.abs() > half {
            return 0.0;
        }
        let t = (x - sym_coord(ax, m)) / ax.step;
        match interp {
            Interpolation::Sinc => {
                if t == 0.0 {
                    1.0
                } else {
                    (PI * t).sin() / (PI * t)
                }
            }
            Interpolation::Cubic => keys(t),
        }
    })
}

/// (d_λ u)(a, l) = u(a, λl); on dual grids the dual variable is scaled.
pub fn dilate(e: &EsetStructure, g: &PhaseSpaceGrid, lambda: f64, interp: Interpolation) -> Result<PhaseSpaceGrid> {
    check_dims(e, g)?;
    dilate_raw(g, lambda, interp)
}

pub(crate) fn dilate_raw(g: &PhaseSpaceGrid, lambda: f64, interp: Interpolation) -> Result<PhaseSpaceGrid> {
    if lambda == 0.0 || !lambda.is_finite() {
        return Err(Error::Argument("dilation factor must be finite and nonzero".into()));
    }
    if lambda == 1.0 {
        return Ok(g.clone());
    }
    if g.dual {
        let warp = scale_warp(g.l_axes(), lambda);
        return resample_dual(g, &warp, interp);
    }
    check_centered(g.l_axes())?;
    let mut out = g.clone();
    let shape = g.shape();
    for d in g.n_a..shape.len() {
        let m = dilation_matrix(&g.axes[d], lambda, interp);
        apply_along_axis(&mut out.data, &shape, d, &m);
    }
    Ok(out)
}

fn apply_along_axis(data: &mut [Complex64], shape: &[usize], axis: usize, m: &DMatrix<f64>) {
    let n = shape[axis];
    let stride: usize = shape[axis + 1..].iter().product();
    data.par_chunks_mut(n * stride).for_each(|blk| {
        let mut line = vec![Complex64::new(0.0, 0.0); n];
        for s in 0..stride {
            for j in 0..n {
                line[j] = blk[j * stride + s];
            }
            for i in 0..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for j in 0..n {
                    let w = m[(i, j)];
                    if w != 0.0 {
                        acc += line[j] * w;
                    }
                }
                blk[i * stride + s] = acc;
            }
        }
    });
}

/// v(a, l) = u(a, l − s(a)) by exact Fourier shifts; `shifts` has one vector per a-sample.
pub fn shift_l_rows(g: &PhaseSpaceGrid, shifts: &[Vec<f64>]) -> Result<PhaseSpaceGrid> {
    g.ensure_dual(false)?;
    if shifts.len() != g.a_len() {
        return Err(Error::Shape("one shift per a-sample required".into()));
    }
    let mut out = g.clone();
    fft_l(&mut out, false);
    let axes = g.l_axes().to_vec();
    let lshape: Vec<usize> = axes.iter().map(|a| a.count).collect();
    let sl = g.slice_len();
    let norm = 1.0 / sl as f64;
    out.data.par_chunks_mut(sl).enumerate().for_each(|(r, s)| {
        let mut idx = vec![0; lshape.len()];
        for (i, v) in s.iter_mut().enumerate() {
            unravel(i, &lshape, &mut idx);
            let mut f = Complex64::new(norm, 0.0);
            for (d, ax) in axes.iter().enumerate() {
                f *= shift_factor(idx[d], ax.count, ax.length(), shifts[r][d]);
            }
            *v *= f;
        }
    });
    fft_l(&mut out, true);
    Ok(out)
}

/// v(a, l) = u(a − α, l).
pub fn shift_a(g: &PhaseSpaceGrid, alpha: &[f64]) -> Result<PhaseSpaceGrid> {
    if alpha.len() != g.n_a {
        return Err(Error::Shape("shift needs n_a components".into()));
    }
    let mut out = g.clone();
    let shape = g.shape();
    for d in 0..g.n_a {
        fft_axis(&mut out.data, &shape, d, false);
    }
    let ashape: Vec<usize> = shape[..g.n_a].to_vec();
    let axes = g.a_axes().to_vec();
    let sl = g.slice_len();
    let norm = 1.0 / g.a_len() as f64;
    out.data.par_chunks_mut(sl).enumerate().for_each(|(r, s)| {
        let mut idx = vec![0; ashape.len()];
        unravel(r, &ashape, &mut idx);
        let mut f = Complex64::new(norm, 0.0);
        for (d, ax) in axes.iter().enumerate() {
            f *= shift_factor(idx[d], ax.count, ax.length(), alpha[d]);
        }
        s.iter_mut().for_each(|v| *v *= f);
    });
    for d in 0..g.n_a {
        fft_axis(&mut out.data, &shape, d, true);
    }
    Ok(out)
}

/// v(x) = u(−x) along the chosen axes (index j ↦ −j mod N on centred axes).
fn reflect(g: &PhaseSpaceGrid, a: bool, l: bool) -> Result<PhaseSpaceGrid> {
    let shape = g.shape();
    let flip: Vec<bool> = (0..shape.len()).map(|d| if d < g.n_a { a } else { l }).collect();
    for (d, ax) in g.axes.iter().enumerate() {
        if flip[d] && !ax.is_centered() {
            return Err(Error::GridMismatch(format!("axis {d} is not centred at 0")));
        }
    }
    let mut out = g.clone();
    let mut idx = vec![0; shape.len()];
    for i in 0..g.data.len() {
        unravel(i, &shape, &mut idx);
        for d in 0..shape.len() {
            if flip[d] {
                idx[d] = (shape[d] - idx[d]) % shape[d];
            }
        }
        out.data[i] = g.data[ravel(&idx, &shape)];
    }
    Ok(out)
}

fn row_points(g: &PhaseSpaceGrid) -> Vec<Vec<f64>> {
    let ashape: Vec<usize> = g.a_axes().iter().map(|a| a.count).collect();
    let mut idx = vec![0; ashape.len()];
    (0..g.a_len())
        .map(|r| {
            unravel(r, &ashape, &mut idx);
            idx.iter().zip(g.a_axes()).map(|(i, ax)| ax.coord(*i)).collect()
        })
        .collect()
}

/// (g·u)(x) = u(g⁻¹x) for a transvection g.
pub fn act_transvection(e: &EsetStructure, g: &GroupElement, u: &PhaseSpaceGrid) -> Result<PhaseSpaceGrid> {
    check_dims(e, u)?;
    let rows = row_points(u);
    let shifts: Vec<Vec<f64>> = rows
        .iter()
        .map(|a| {
            let ap: Vec<f64> = a.iter().zip(&g.a).map(|(x, y)| x + y).collect();
            geometry::action_l_shift(e, g, &ap)
        })
        .collect();
    let v = shift_l_rows(u, &shifts)?;
    shift_a(&v, &g.a)
}

/// (s_x* u)(y) = u(s_x y).
pub fn pull_symmetry(e: &EsetStructure, x: &Point, u: &PhaseSpaceGrid) -> Result<PhaseSpaceGrid> {
    check_dims(e, u)?;
    let rows = row_points(u);
    let shifts: Vec<Vec<f64>> = rows
        .iter()
        .map(|a| {
            let d: Vec<f64> = a.iter().zip(&x.a).map(|(p, q)| p - q).collect();
            e.cosh_l(&d, &x.l).iter().map(|v| 2.0 * v).collect()
        })
        .collect();
    let v = shift_l_rows(&reflect(u, false, true)?, &shifts)?;
    let two_a: Vec<f64> = x.a.iter().map(|v| 2.0 * v).collect();
    shift_a(&reflect(&v, true, false)?, &two_a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::gaussian;

    fn e2() -> EsetStructure {
        EsetStructure::example_2d()
    }

    #[test]
    fn fourier_of_gaussian() {
        let e = e2();
        let w = 1.3;
        let g = gaussian(1, 16, 8.0, 1.0, &[0.4, 0.0], 1.0, w).unwrap();
        let g = PhaseSpaceGrid::new(1, 1, vec![g.axes[0], Axis::centered(256, 10.0)], false, 1.0, vec![Complex64::new(0.0, 0.0); 16 * 256]).map(|mut x| {
            x.fill(|a, l| Complex64::new((-((a[0] - 0.4f64).powi(2)) - (l[0] / w).powi(2)).exp(), 0.0));
            x
        }).unwrap();
        let f = partial_fourier(&e, &g).unwrap();
        let mut want = f.clone();
        want.fill(|a, k| {
            let amp = (-((a[0] - 0.4f64).powi(2))).exp() * PI.sqrt() * w;
            Complex64::new(amp * (-(k[0] * w).powi(2) / 4.0).exp(), 0.0)
        });
        assert!(f.rel_l2_diff(&want) < 1e-8);
        let back = partial_fourier_inv(&e, &f).unwrap();
        assert!(back.rel_l2_diff(&g) < 1e-14);
        let ratio = f.norm_l2() / g.norm_l2();
        assert!((ratio - plancherel_constant(1)).abs() < 1e-12);
    }

    #[test]
    fn dual_flag_is_enforced() {
        let e = e2();
        let g = gaussian(1, 16, 4.0, 1.0, &[0.0, 0.0], 1.0, 1.0).unwrap();
        assert!(partial_fourier_inv(&e, &g).is_err());
        let f = partial_fourier(&e, &g).unwrap();
        assert!(partial_fourier(&e, &f).is_err());
    }

    #[test]
    fn flat_options_are_identity() {
        let e = e2();
        let g = gaussian(1, 32, 6.0, 2.0, &[0.3, 0.0], 1.0, 1.0).unwrap();
        let o = TransformOptions { flat: true, ..Default::default() };
        assert_eq!(t_hbar(&e, &g, 2.0, &o).unwrap(), g);
        assert_eq!(tau_hbar(&e, &g, 2.0, &o).unwrap(), g);
        let f = partial_fourier(&e, &g).unwrap();
        assert_eq!(pullback_phi(&e, &f, 2.0, false, &o).unwrap(), f);
    }

    #[test]
    fn pullback_fixes_origin_and_compresses() {
        let e = e2();
        let g = gaussian(1, 16, 8.0, 2.0, &[0.0, 0.0], 1.0, 1.0).unwrap();
        let g = g.pad_l(8).unwrap();
        let f = partial_fourier(&e, &g).unwrap();
        for interp in [Interpolation::Cubic, Interpolation::Sinc] {
            let o = TransformOptions { interpolation: interp, ..Default::default() };
            let p = pullback_phi(&e, &f, 2.0, false, &o).unwrap();
            let mid = 8 * 128 + 64;
            assert!((p.data[mid] - f.data[mid]).norm() < 1e-12);
            assert!(p.norm_l2() < f.norm_l2());
        }
    }

    #[test]
    fn shifts_and_reflections() {
        let e = e2();
        let g = gaussian(1, 64, 8.0, 1.0, &[0.5, -0.25], 1.0, 1.0).unwrap();
        let s = shift_a(&g, &[0.7]).unwrap();
        let want = gaussian(1, 64, 8.0, 1.0, &[1.2, -0.25], 1.0, 1.0).unwrap();
        assert!(s.rel_l2_diff(&want) < 1e-12);
        let r = reflect(&g, true, true).unwrap();
        let want = gaussian(1, 64, 8.0, 1.0, &[-0.5, 0.25], 1.0, 1.0).unwrap();
        assert!(r.rel_l2_diff(&want) < 1e-12);
        let x = Point::new(vec![0.0], vec![0.0]);
        let p = pull_symmetry(&e, &x, &g).unwrap();
        assert!(p.rel_l2_diff(&want) < 1e-12);
    }
}
