//! Points, symmetries, the transvection group and phase functions.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::eset::{AlgebraVector, EsetStructure, Part};
use crate::error::{Error, Result};

/// A point (a, l) of M = 𝔞 × ℒ in the global Darboux chart.
#[derive(Clone, Debug, PartialEq)]
pub struct Point {
    pub a: Vec<f64>,
    pub l: Vec<f64>,
}

impl Point {
    pub fn new(a: Vec<f64>, l: Vec<f64>) -> Self {
        Point { a, l }
    }

    pub fn origin(n: usize) -> Self {
        Point::new(vec![0.0; n], vec![0.0; n])
    }

    /// Splits [a..., l...] in half.
    pub fn from_flat(v: &[f64]) -> Result<Self> {
        if v.is_empty() || v.len() % 2 != 0 {
            return Err(Error::Shape(format!("point needs an even number of coordinates, got {}", v.len())));
        }
        let n = v.len() / 2;
        Ok(Point::new(v[..n].to_vec(), v[n..].to_vec()))
    }

    pub fn flat(&self) -> Vec<f64> {
        self.a.iter().chain(&self.l).copied().collect()
    }

    pub fn dist_inf(&self, o: &Point) -> f64 {
        self.flat()
            .iter()
            .zip(o.flat())
            .fold(0.0, |m, (x, y)| m.max((x - y).abs()))
    }

    pub fn norm_inf(&self) -> f64 {
        self.flat().iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

impl Serialize for Point {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.flat().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Point {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<f64>::deserialize(d)?;
        Point::from_flat(&v).map_err(serde::de::Error::custom)
    }
}

/// An element (a, k, l) of G = 𝔞 × 𝔨 × ℒ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupElement {
    pub a: Vec<f64>,
    pub k: Vec<f64>,
    pub l: Vec<f64>,
}

impl GroupElement {
    pub fn identity(e: &EsetStructure) -> Self {
        GroupElement {
            a: vec![0.0; e.n_a],
            k: vec![0.0; e.n_k],
            l: vec![0.0; e.n_l],
        }
    }

    fn b(&self) -> DVector<f64> {
        DVector::from_iterator(self.k.len() + self.l.len(), self.k.iter().chain(&self.l).copied())
    }

    fn from_ab(a: Vec<f64>, b: &DVector<f64>, n_k: usize) -> Self {
        GroupElement {
            a,
            k: b.rows(0, n_k).iter().copied().collect(),
            l: b.rows(n_k, b.len() - n_k).iter().copied().collect(),
        }
    }

    pub fn dist_inf(&self, o: &GroupElement) -> f64 {
        let d = |x: &[f64], y: &[f64]| x.iter().zip(y).fold(0.0f64, |m, (p, q)| m.max((p - q).abs()));
        d(&self.a, &o.a).max(d(&self.k, &o.k)).max(d(&self.l, &o.l))
    }
}

fn add(x: &[f64], y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(p, q)| p + q).collect()
}

fn sub(x: &[f64], y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(p, q)| p - q).collect()
}

fn scale(x: &[f64], s: f64) -> Vec<f64> {
    x.iter().map(|p| p * s).collect()
}

/// s_x(y) = (2a − a′, 2cosh(a − a′)l − l′).
pub fn symmetry(e: &EsetStructure, x: &Point, y: &Point) -> Point {
    let d = sub(&x.a, &y.a);
    let cl = e.cosh_l(&d, &x.l);
    Point::new(
        sub(&scale(&x.a, 2.0), &y.a),
        sub(&scale(&cl, 2.0), &y.l),
    )
}

/// The point m with s_m(o) = x.
pub fn midpoint(e: &EsetStructure, x: &Point) -> Result<Point> {
    let h = scale(&x.a, 0.5);
    let c = e.cosh_ll(&h);
    let l = c
        .lu()
        .solve(&DVector::from_column_slice(&x.l))
        .ok_or_else(|| Error::Singular(format!("cosh(a/2) on L at a = {:?}", x.a)))?;
    Ok(Point::new(h, l.iter().map(|v| 0.5 * v).collect()))
}

/// (a, b)(a′, b′) = (a + a′, exp(ρ(a)) b′ + b).
pub fn group_mul(e: &EsetStructure, g: &GroupElement, h: &GroupElement) -> GroupElement {
    let ex = crate::linalg::expm(&e.rho_hat(&g.a));
    let b = ex * h.b() + g.b();
    GroupElement::from_ab(add(&g.a, &h.a), &b, e.n_k)
}

pub fn group_inv(e: &EsetStructure, g: &GroupElement) -> GroupElement {
    let na = scale(&g.a, -1.0);
    let ex = crate::linalg::expm(&e.rho_hat(&na));
    let b = -(ex * g.b());
    GroupElement::from_ab(na, &b, e.n_k)
}

/// (α, κ, λ)·(a, l) = (a + α, cosh(a + α)λ − sinh(a + α)κ + l).
pub fn group_act(e: &EsetStructure, g: &GroupElement, x: &Point) -> Point {
    let a = add(&x.a, &g.a);
    let cl = e.cosh_l(&a, &g.l);
    let sk = e.sinh_l_of_k(&a, &g.k);
    Point::new(a.clone(), add(&sub(&cl, &sk), &x.l))
}

/// ℒ-shift c(a) with g·(a − α, l) = (a, l + c(a)).
pub fn action_l_shift(e: &EsetStructure, g: &GroupElement, a: &[f64]) -> Vec<f64> {
    let cl = e.cosh_l(a, &g.l);
    let sk = e.sinh_l_of_k(a, &g.k);
    sub(&cl, &sk)
}

pub fn project_pi(e: &EsetStructure, g: &GroupElement) -> Point {
    let cl = e.cosh_l(&g.a, &g.l);
    let sk = e.sinh_l_of_k(&g.a, &g.k);
    Point::new(g.a.clone(), sub(&cl, &sk))
}

pub fn section_gamma(e: &EsetStructure, x: &Point) -> GroupElement {
    let s = e.sinh_matrix(&x.a);
    let c = e.cosh_ll(&x.a);
    let l = DVector::from_column_slice(&x.l);
    let k = s.view((0, e.n_k), (e.n_k, e.n_l)) * &l;
    GroupElement {
        a: x.a.clone(),
        k: k.iter().copied().collect(),
        l: (c * l).iter().copied().collect(),
    }
}

/// u(x, y) = ξ(sinh(a′)l − sinh(a)l′).
pub fn two_point_u(e: &EsetStructure, x: &Point, y: &Point) -> f64 {
    e.zeta(&y.a, &x.l) - e.zeta(&x.a, &y.l)
}

/// S(x₁, x₂, x₃) = ξ(sinh(a₁−a₂)l₃ + sinh(a₂−a₃)l₁ + sinh(a₃−a₁)l₂).
pub fn phase_s(e: &EsetStructure, x1: &Point, x2: &Point, x3: &Point) -> f64 {
    e.zeta(&sub(&x1.a, &x2.a), &x3.l)
        + e.zeta(&sub(&x2.a, &x3.a), &x1.l)
        + e.zeta(&sub(&x3.a, &x1.a), &x2.l)
}

/// Matrix J of the chart symplectic form Ω(s, t) = sᵀJt, coordinates (a, l).
pub fn chart_form(e: &EsetStructure) -> DMatrix<f64> {
    let n = e.n_a;
    let b = e.pairing();
    let mut j = DMatrix::zeros(2 * n, 2 * n);
    j.view_mut((0, n), (n, n)).copy_from(b);
    j.view_mut((n, 0), (n, n)).copy_from(&(-b.transpose()));
    j
}

/// Standard form ω⁰((p, q), (p′, q′)) = p·q′ − q·p′ on ℝ^{2n}.
pub fn standard_form(n: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        j[(i, n + i)] = 1.0;
        j[(n + i, i)] = -1.0;
    }
    j
}

fn bilinear(x: &[f64], j: &DMatrix<f64>, y: &[f64]) -> f64 {
    let mut s = 0.0;
    for r in 0..x.len() {
        for c in 0..y.len() {
            s += x[r] * j[(r, c)] * y[c];
        }
    }
    s
}

/// S^J(x, y, z) = ⟨x, Jy⟩ + ⟨y, Jz⟩ + ⟨z, Jx⟩; J defaults to the standard form.
pub fn flat_phase_s0(x: &[f64], y: &[f64], z: &[f64], j: Option<&DMatrix<f64>>) -> Result<f64> {
    let m = x.len();
    if y.len() != m || z.len() != m || m % 2 != 0 {
        return Err(Error::Shape("flat phase needs three points of equal even dimension".into()));
    }
    let std;
    let j = match j {
        Some(j) => {
            if j.nrows() != m || j.ncols() != m {
                return Err(Error::Shape(format!("J must be {m}x{m}")));
            }
            if crate::linalg::max_abs(&(j + j.transpose())) > 1e-14 {
                return Err(Error::Argument("J is not skew".into()));
            }
            j
        }
        None => {
            std = standard_form(m / 2);
            &std
        }
    };
    Ok(bilinear(x, j, y) + bilinear(y, j, z) + bilinear(z, j, x))
}

/// Residuals of the three admissibility properties.
#[derive(Clone, Debug, Default, Serialize)]
pub struct Admissibility {
    pub samples: usize,
    pub cyclic: f64,
    pub symmetry_invariance: f64,
    pub reflection: f64,
}

impl Admissibility {
    pub fn max(&self) -> f64 {
        self.cyclic.max(self.symmetry_invariance).max(self.reflection)
    }
}

/// Checks (i) S(x,y,z) = S(z,x,y) = −S(y,x,z), (ii) S∘s_m = S, (iii) S(x, s_x y, z) = −S(x,y,z).
///
/// Residuals are relative to max(1, |S|).
pub fn admissibility_check<P, Q>(
    phase: P,
    sym: Q,
    sampler: &mut PointSampler,
    samples: usize,
) -> Admissibility
where
    P: Fn(&Point, &Point, &Point) -> f64,
    Q: Fn(&Point, &Point) -> Point,
{
    let mut rep = Admissibility {
        samples,
        ..Default::default()
    };
    for _ in 0..samples {
        let (x, y, z, m) = (sampler.point(), sampler.point(), sampler.point(), sampler.point());
        let s = phase(&x, &y, &z);
        let sc = 1.0f64.max(s.abs());
        let c1 = (s - phase(&z, &x, &y)).abs().max((s + phase(&y, &x, &z)).abs()) / sc;
        let inv = phase(&sym(&m, &x), &sym(&m, &y), &sym(&m, &z));
        let c2 = (inv - s).abs() / sc.max(inv.abs());
        let r = phase(&x, &sym(&x, &y), &z);
        let c3 = (r + s).abs() / sc.max(r.abs());
        rep.cyclic = rep.cyclic.max(c1);
        rep.symmetry_invariance = rep.symmetry_invariance.max(c2);
        rep.reflection = rep.reflection.max(c3);
    }
    rep
}

/// h(g) = [S(a,b,g) + S(g,c,d)] − [S(a,g,d) + S(g,b,c)].
pub fn barycenter_defect<P>(phase: &P, a: &Point, b: &Point, c: &Point, d: &Point, g: &Point) -> f64
where
    P: Fn(&Point, &Point, &Point) -> f64,
{
    phase(a, b, g) + phase(g, c, d) - phase(a, g, d) - phase(g, b, c)
}

/// Point g on the chart segment a→c where the two bracketings agree.
pub fn barycenter<P>(phase: P, a: &Point, b: &Point, c: &Point, d: &Point) -> Result<Point>
where
    P: Fn(&Point, &Point, &Point) -> f64,
{
    let fa = a.flat();
    let fc = c.flat();
    let at = |t: f64| {
        let v: Vec<f64> = fa.iter().zip(&fc).map(|(p, q)| p + t * (q - p)).collect();
        Point::from_flat(&v).expect("even length")
    };
    let h = |t: f64| barycenter_defect(&phase, a, b, c, d, &at(t));
    if a == c {
        return Ok(a.clone());
    }
    // symmetric configurations make h vanish on the whole segment; prefer its midpoint
    if h(0.5).abs() < 1e-12 {
        return Ok(at(0.5));
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    let (mut hlo, hhi) = (h(lo), h(hi));
    if hlo == 0.0 {
        return Ok(a.clone());
    }
    if hhi == 0.0 {
        return Ok(c.clone());
    }
    if hlo.signum() == hhi.signum() {
        return Err(Error::Argument(format!(
            "no sign change of the barycenter defect on the segment (h(a) = {hlo:e}, h(c) = {hhi:e})"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let hm = h(mid);
        if hm.abs() < 1e-12 || hi - lo < 1e-17 {
            return Ok(at(mid));
        }
        if hm.signum() == hlo.signum() {
            lo = mid;
            hlo = hm;
        } else {
            hi = mid;
        }
    }
    Ok(at(0.5 * (lo + hi)))
}

/// λ_X(a, l) = ξ(ρ(X_𝔞) l) − ξ(ρ(φ(a)) X_ℒ) for X ∈ 𝒫.
pub fn hamiltonian(e: &EsetStructure, x_alg: &AlgebraVector, x: &Point) -> Result<f64> {
    let (xa, xl) = split_p(e, x_alg)?;
    let phi = e.twist(&x.a)?;
    Ok(-e.omega_pair(&xa, &x.l) + e.omega_pair(&phi, &xl))
}

/// Gradient (∂_a λ_X, ∂_l λ_X) from the closed form.
pub fn hamiltonian_gradient(e: &EsetStructure, x_alg: &AlgebraVector, x: &Point) -> Result<Point> {
    let (xa, xl) = split_p(e, x_alg)?;
    let b = e.pairing();
    let jac = e.twist_jacobian(&x.a)?;
    let bxl = b * DVector::from_column_slice(&xl);
    let ga = -(jac.transpose() * bxl);
    let gl = b.transpose() * DVector::from_column_slice(&xa);
    Ok(Point::new(ga.iter().copied().collect(), gl.iter().copied().collect()))
}

fn split_p(e: &EsetStructure, x: &AlgebraVector) -> Result<(Vec<f64>, Vec<f64>)> {
    let (na, nk, nl) = (e.n_a, e.n_k, e.n_l);
    match x.part {
        Part::A if x.coords.len() == na => Ok((x.coords.clone(), vec![0.0; nl])),
        Part::L if x.coords.len() == nl => Ok((vec![0.0; na], x.coords.clone())),
        Part::G if x.coords.len() == na + nk + nl => {
            if x.coords[na..na + nk].iter().any(|v| *v != 0.0) {
                return Err(Error::Argument("hamiltonians are only defined for X in a + L".into()));
            }
            Ok((x.coords[..na].to_vec(), x.coords[na + nk..].to_vec()))
        }
        _ => Err(Error::Shape(format!("bad algebra vector {:?} for hamiltonian", x.part))),
    }
}

/// Chart Poisson bracket of two gradients: ∇_a uᵀ B^{-T} ∇_l v − ∇_l uᵀ B^{-1} ∇_a v.
pub fn poisson_of_gradients(e: &EsetStructure, du: &Point, dv: &Point) -> Result<f64> {
    let pi = poisson_tensor(e)?;
    let u = du.flat();
    let v = dv.flat();
    Ok(bilinear(&u, &pi, &v))
}

/// Π = J^{-T} in (a, l) coordinates.
pub fn poisson_tensor(e: &EsetStructure) -> Result<DMatrix<f64>> {
    let j = chart_form(e);
    j.try_inverse()
        .map(|m| m.transpose())
        .ok_or_else(|| Error::Singular("chart symplectic form".into()))
}

/// Seeded uniform sampling on the default boxes a ∈ [−2, 2], l ∈ [−4, 4].
pub struct PointSampler {
    rng: ChaCha8Rng,
    n: usize,
    pub a_box: f64,
    pub l_box: f64,
}

impl PointSampler {
    pub fn new(n: usize, seed: u64) -> Self {
        PointSampler {
            rng: ChaCha8Rng::seed_from_u64(seed),
            n,
            a_box: 2.0,
            l_box: 4.0,
        }
    }

    pub fn with_boxes(mut self, a_box: f64, l_box: f64) -> Self {
        self.a_box = a_box;
        self.l_box = l_box;
        self
    }

    pub fn uniform(&mut self, half: f64) -> f64 {
        self.rng.gen_range(-half..=half)
    }

    pub fn vector(&mut self, len: usize, half: f64) -> Vec<f64> {
        (0..len).map(|_| self.uniform(half)).collect()
    }

    pub fn point(&mut self) -> Point {
        let a = self.vector(self.n, self.a_box);
        let l = self.vector(self.n, self.l_box);
        Point::new(a, l)
    }

    pub fn group_element(&mut self, e: &EsetStructure) -> GroupElement {
        GroupElement {
            a: self.vector(e.n_a, self.a_box),
            k: self.vector(e.n_k, self.l_box),
            l: self.vector(e.n_l, self.l_box),
        }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e2() -> EsetStructure {
        EsetStructure::example_2d()
    }

    fn p(a: f64, l: f64) -> Point {
        Point::new(vec![a], vec![l])
    }

    #[test]
    fn symmetry_examples() {
        let e = e2();
        assert_eq!(symmetry(&e, &p(1.0, 2.0), &p(1.0, 2.0)), p(1.0, 2.0));
        assert_eq!(symmetry(&e, &p(1.0, 0.0), &p(0.0, 1.0)), p(2.0, -1.0));
        assert_eq!(symmetry(&e, &p(0.0, 0.0), &p(0.3, -0.7)), p(-0.3, 0.7));
    }

    #[test]
    fn midpoint_examples() {
        let e = e2();
        let m = midpoint(&e, &p(2.0, 2.0 * 1.0f64.cosh())).unwrap();
        assert!(m.dist_inf(&p(1.0, 1.0)) < 1e-14);
        assert_eq!(midpoint(&e, &p(2.0, 0.0)).unwrap(), p(1.0, 0.0));
        assert_eq!(midpoint(&e, &Point::origin(1)).unwrap(), Point::origin(1));
        let s = symmetry(&e, &p(1.0, 1.0), &Point::origin(1));
        assert!(s.dist_inf(&p(2.0, 2.0 * 1.0f64.cosh())) < 1e-14);
    }

    #[test]
    fn group_examples() {
        let e = e2();
        let g = GroupElement { a: vec![1.0], k: vec![0.0], l: vec![0.0] };
        let h = GroupElement { a: vec![0.0], k: vec![1.0], l: vec![0.0] };
        let gh = group_mul(&e, &g, &h);
        assert!((gh.k[0] - 1.0f64.cosh()).abs() < 1e-14);
        assert!((gh.l[0] - 1.0f64.sinh()).abs() < 1e-14);
        assert_eq!(group_act(&e, &h, &p(0.0, 0.0)), p(0.0, 0.0));
        let y = group_act(&e, &h, &p(1.0, 0.0));
        assert!(y.dist_inf(&p(1.0, -1.0f64.sinh())) < 1e-14);
        let gi = group_mul(&e, &gh, &group_inv(&e, &gh));
        assert!(gi.dist_inf(&GroupElement::identity(&e)) < 1e-13);
    }

    #[test]
    fn phase_examples() {
        let e = e2();
        let s = phase_s(&e, &p(0.0, 0.0), &p(1.0, 0.0), &p(0.0, 1.0));
        assert!((s + 1.0f64.sinh()).abs() < 1e-15);
        let u = two_point_u(&e, &p(1.0, 0.0), &p(0.0, 1.0));
        assert!((u + 1.0f64.sinh()).abs() < 1e-15);
        let s0 = flat_phase_s0(&[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0], None).unwrap();
        assert_eq!(s0, 1.0);
        let z = DMatrix::zeros(2, 2);
        assert_eq!(flat_phase_s0(&[1.0, 2.0], &[3.0, 0.5], &[0.0, 1.0], Some(&z)).unwrap(), 0.0);
        let bad = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        assert!(flat_phase_s0(&[1.0, 2.0], &[3.0, 0.5], &[0.0, 1.0], Some(&bad)).is_err());
    }

    #[test]
    fn hamiltonians_of_example() {
        let e = e2();
        let da = AlgebraVector::new(Part::A, vec![1.0]);
        let dl = AlgebraVector::new(Part::L, vec![1.0]);
        assert_eq!(hamiltonian(&e, &da, &Point::origin(1)).unwrap(), 0.0);
        assert!((hamiltonian(&e, &da, &p(0.4, 1.7)).unwrap() - 1.7).abs() < 1e-15);
        assert!((hamiltonian(&e, &dl, &p(0.4, 1.7)).unwrap() + 0.4f64.sinh()).abs() < 1e-15);
        let k = AlgebraVector::new(Part::G, vec![0.0, 1.0, 0.0]);
        assert!(hamiltonian(&e, &k, &p(0.4, 1.7)).is_err());
    }

    #[test]
    fn square_barycenter() {
        let s0 = |x: &Point, y: &Point, z: &Point| flat_phase_s0(&x.flat(), &y.flat(), &z.flat(), None).unwrap();
        let g = barycenter(s0, &p(0.0, 0.0), &p(1.0, 0.0), &p(1.0, 1.0), &p(0.0, 1.0)).unwrap();
        assert!(g.dist_inf(&p(0.5, 0.5)) < 1e-12);
        let a = p(0.2, 0.3);
        let g = barycenter(s0, &a, &p(1.0, 0.0), &a, &p(0.0, 1.0)).unwrap();
        assert_eq!(g, a);
    }

    #[test]
    fn corrupted_phase_fails_cyclicity() {
        let e = e2();
        let bad = |x: &Point, y: &Point, z: &Point| {
            let d = x.a[0] - y.a[0];
            d.cosh() * z.l[0] + e.zeta(&[y.a[0] - z.a[0]], &x.l) + e.zeta(&[z.a[0] - x.a[0]], &y.l)
        };
        let mut s = PointSampler::new(1, 3);
        let r = admissibility_check(bad, |m: &Point, y: &Point| symmetry(&e, m, y), &mut s, 50);
        assert!(r.cyclic > 1e-3);
    }
}
