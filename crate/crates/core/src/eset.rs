//! Elementary solvable exact triples: structure data, validation, matrix
//! functions and the twisting map.

use std::fmt;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

/// Absolute tolerance on structure-constant residuals.
pub const VALIDATION_TOL: f64 = 1e-12;

const NEWTON_MAX_ITER: usize = 50;
const NEWTON_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Part {
    A,
    K,
    L,
    B,
    G,
}

/// Coordinates of an element of one of the pieces of 𝔤 = 𝔞 ⊕ 𝔨 ⊕ ℒ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlgebraVector {
    pub part: Part,
    pub coords: Vec<f64>,
}

impl AlgebraVector {
    pub fn new(part: Part, coords: Vec<f64>) -> Self {
        AlgebraVector { part, coords }
    }
}

/// On-disk form of a structure.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EsetFile {
    pub name: String,
    pub n_a: usize,
    pub n_k: usize,
    pub n_l: usize,
    pub rho: Vec<Vec<Vec<f64>>>,
    pub xi: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Axiom {
    Dimension,
    Commutativity,
    SigmaAnticommutation,
    Nondegeneracy,
    Injectivity,
}

impl fmt::Display for Axiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Axiom::Dimension => "dimension n_a = n_l",
            Axiom::Commutativity => "commutativity",
            Axiom::SigmaAnticommutation => "sigma anticommutation",
            Axiom::Nondegeneracy => "pairing matrix singular",
            Axiom::Injectivity => "rho not injective",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Violation {
    pub axiom: Axiom,
    pub indices: Vec<usize>,
    pub residual: f64,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.axiom)?;
        if !self.indices.is_empty() {
            write!(f, " at {:?}", self.indices)?;
        }
        write!(f, " (residual {:.3e})", self.residual)
    }
}

/// Structure constants (ρ, ξ) of an elementary solvable exact triple.
///
/// 𝔟 is ordered with the 𝔨 basis first, then ℒ.
#[derive(Clone, Debug)]
pub struct EsetStructure {
    pub name: String,
    pub n_a: usize,
    pub n_k: usize,
    pub n_l: usize,
    rho: Vec<DMatrix<f64>>,
    xi: DVector<f64>,
    pairing: DMatrix<f64>,
}

impl EsetStructure {
    /// Builds a structure, checking only array shapes.
    pub fn new(
        name: &str,
        n_a: usize,
        n_k: usize,
        n_l: usize,
        rho: Vec<Vec<Vec<f64>>>,
        xi: Vec<f64>,
    ) -> Result<Self> {
        if n_a == 0 || n_k == 0 || n_l == 0 {
            return Err(Error::Shape("dimensions must be positive".into()));
        }
        let n_b = n_k + n_l;
        if rho.len() != n_a {
            return Err(Error::Shape(format!(
                "rho has {} matrices, expected n_a = {n_a}",
                rho.len()
            )));
        }
        let mut mats = Vec::with_capacity(n_a);
        for (i, m) in rho.iter().enumerate() {
            if m.len() != n_b || m.iter().any(|r| r.len() != n_b) {
                return Err(Error::Shape(format!("rho[{i}] is not {n_b}x{n_b}")));
            }
            if m.iter().flatten().any(|v| !v.is_finite()) {
                return Err(Error::Shape(format!("rho[{i}] has non-finite entries")));
            }
            mats.push(DMatrix::from_fn(n_b, n_b, |r, c| m[r][c]));
        }
        if xi.len() != n_k {
            return Err(Error::Shape(format!(
                "xi has length {}, expected n_k = {n_k}",
                xi.len()
            )));
        }
        let xi = DVector::from_vec(xi);
        let pairing = DMatrix::from_fn(n_a, n_l, |i, j| {
            (0..n_k).map(|r| xi[r] * mats[i][(r, n_k + j)]).sum()
        });
        Ok(EsetStructure {
            name: name.to_string(),
            n_a,
            n_k,
            n_l,
            rho: mats,
            xi,
            pairing,
        })
    }

    pub fn from_file(f: EsetFile) -> Result<Self> {
        Self::new(&f.name, f.n_a, f.n_k, f.n_l, f.rho, f.xi)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let f: EsetFile = serde_json::from_str(s)?;
        Self::from_file(f)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let s = std::fs::read_to_string(path)?;
        Self::from_json_str(&s)
    }

    pub fn to_file(&self) -> EsetFile {
        let n_b = self.n_b();
        EsetFile {
            name: self.name.clone(),
            n_a: self.n_a,
            n_k: self.n_k,
            n_l: self.n_l,
            rho: self
                .rho
                .iter()
                .map(|m| (0..n_b).map(|r| (0..n_b).map(|c| m[(r, c)]).collect()).collect())
                .collect(),
            xi: self.xi.iter().copied().collect(),
        }
    }

    /// The two-dimensional example: ρ(A) swaps E and L, ξ(E) = 1.
    pub fn example_2d() -> Self {
        Self::new(
            "example-2d",
            1,
            1,
            1,
            vec![vec![vec![0.0, 1.0], vec![1.0, 0.0]]],
            vec![1.0],
        )
        .expect("shapes are fixed")
    }

    /// Direct product of `n` copies of the two-dimensional example.
    pub fn example_product(n: usize) -> Self {
        let n_b = 2 * n;
        let rho = (0..n)
            .map(|i| {
                let mut m = vec![vec![0.0; n_b]; n_b];
                m[i][n + i] = 1.0;
                m[n + i][i] = 1.0;
                m
            })
            .collect();
        Self::new(&format!("example-2d^{n}"), n, n, n, rho, vec![1.0; n])
            .expect("shapes are fixed")
    }

    pub fn n_b(&self) -> usize {
        self.n_k + self.n_l
    }

    /// Half-dimension of M = 𝔞 × ℒ.
    pub fn dim(&self) -> usize {
        self.n_a
    }

    pub fn rho(&self) -> &[DMatrix<f64>] {
        &self.rho
    }

    pub fn xi(&self) -> &DVector<f64> {
        &self.xi
    }

    /// B[i][j] = ξ(ρ(e_i) f_j).
    pub fn pairing(&self) -> &DMatrix<f64> {
        &self.pairing
    }

    pub fn part_dim(&self, p: Part) -> usize {
        match p {
            Part::A => self.n_a,
            Part::K => self.n_k,
            Part::L => self.n_l,
            Part::B => self.n_b(),
            Part::G => self.n_a + self.n_b(),
        }
    }

    fn check_len(&self, what: &str, v: &[f64], n: usize) -> Result<()> {
        if v.len() != n {
            return Err(Error::Shape(format!("{what} has length {}, expected {n}", v.len())));
        }
        Ok(())
    }

    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let (n_k, n_l) = (self.n_k, self.n_l);
        if self.n_a != n_l {
            out.push(Violation {
                axiom: Axiom::Dimension,
                indices: vec![self.n_a, n_l],
                residual: (self.n_a as f64 - n_l as f64).abs(),
            });
        }
        for i in 0..self.n_a {
            for j in i + 1..self.n_a {
                let c = &self.rho[i] * &self.rho[j] - &self.rho[j] * &self.rho[i];
                let r = linalg::max_abs(&c);
                if r > VALIDATION_TOL {
                    out.push(Violation {
                        axiom: Axiom::Commutativity,
                        indices: vec![i, j],
                        residual: r,
                    });
                }
            }
        }
        for (i, m) in self.rho.iter().enumerate() {
            let kk = m.view((0, 0), (n_k, n_k));
            let ll = m.view((n_k, n_k), (n_l, n_l));
            let r = kk.iter().chain(ll.iter()).fold(0.0f64, |a, v| a.max(v.abs()));
            if r > VALIDATION_TOL {
                out.push(Violation {
                    axiom: Axiom::SigmaAnticommutation,
                    indices: vec![i],
                    residual: r,
                });
            }
        }
        if self.n_a == n_l {
            let sv = self.pairing.clone().singular_values();
            let smin = sv.iter().copied().fold(f64::INFINITY, f64::min);
            if smin <= VALIDATION_TOL {
                out.push(Violation {
                    axiom: Axiom::Nondegeneracy,
                    indices: vec![],
                    residual: smin,
                });
            }
        }
        let n_b = self.n_b();
        let flat = DMatrix::from_fn(self.n_a, n_b * n_b, |i, c| self.rho[i][(c / n_b, c % n_b)]);
        let sv = flat.singular_values();
        let smin = sv.iter().copied().fold(f64::INFINITY, f64::min);
        if sv.len() < self.n_a || smin <= VALIDATION_TOL {
            out.push(Violation {
                axiom: Axiom::Injectivity,
                indices: vec![],
                residual: smin,
            });
        }
        out
    }

    /// Largest structure-constant residual (commutators and σ-diagonal blocks), violations or not.
    pub fn structure_residual(&self) -> f64 {
        let (n_k, n_l) = (self.n_k, self.n_l);
        let mut r = 0.0f64;
        for i in 0..self.n_a {
            for j in i + 1..self.n_a {
                let c = &self.rho[i] * &self.rho[j] - &self.rho[j] * &self.rho[i];
                r = r.max(linalg::max_abs(&c));
            }
        }
        for m in &self.rho {
            let kk = m.view((0, 0), (n_k, n_k));
            let ll = m.view((n_k, n_k), (n_l, n_l));
            r = kk.iter().chain(ll.iter()).fold(r, |a, v| a.max(v.abs()));
        }
        r
    }

    /// Σ a_i ρ(e_i).
    pub fn rho_hat(&self, a: &[f64]) -> DMatrix<f64> {
        let n_b = self.n_b();
        let mut m = DMatrix::zeros(n_b, n_b);
        for (ai, r) in a.iter().zip(&self.rho) {
            m += r * *ai;
        }
        m
    }

    pub fn rho_apply(&self, a: &AlgebraVector, b: &AlgebraVector) -> Result<AlgebraVector> {
        if a.part != Part::A || b.part != Part::B {
            return Err(Error::Shape("rho_apply takes (A-part, B-part)".into()));
        }
        self.check_len("A", &a.coords, self.n_a)?;
        self.check_len("b", &b.coords, self.n_b())?;
        let v = self.rho_hat(&a.coords) * DVector::from_column_slice(&b.coords);
        Ok(AlgebraVector::new(Part::B, v.iter().copied().collect()))
    }

    /// (sinh ρ(a), cosh ρ(a)) as endomorphisms of 𝔟.
    pub fn sinh_cosh(&self, a: &[f64]) -> (DMatrix<f64>, DMatrix<f64>) {
        linalg::sinh_cosh(&self.rho_hat(a))
    }

    pub fn sinh_matrix(&self, a: &[f64]) -> DMatrix<f64> {
        self.sinh_cosh(a).0
    }

    pub fn cosh_matrix(&self, a: &[f64]) -> DMatrix<f64> {
        self.sinh_cosh(a).1
    }

    /// ℒℒ block of cosh(a).
    pub fn cosh_ll(&self, a: &[f64]) -> DMatrix<f64> {
        let c = self.cosh_matrix(a);
        c.view((self.n_k, self.n_k), (self.n_l, self.n_l)).into_owned()
    }

    /// cosh(a) applied to l ∈ ℒ.
    pub fn cosh_l(&self, a: &[f64], l: &[f64]) -> Vec<f64> {
        let c = self.cosh_ll(a);
        (c * DVector::from_column_slice(l)).iter().copied().collect()
    }

    /// ℒ-component of sinh(a) applied to k ∈ 𝔨.
    pub fn sinh_l_of_k(&self, a: &[f64], k: &[f64]) -> Vec<f64> {
        let s = self.sinh_matrix(a);
        let blk = s.view((self.n_k, 0), (self.n_l, self.n_k));
        (blk * DVector::from_column_slice(k)).iter().copied().collect()
    }

    /// ξ(sinh(a) l) for l ∈ ℒ.
    pub fn zeta(&self, a: &[f64], l: &[f64]) -> f64 {
        self.zeta_covector(a).iter().zip(l).map(|(z, x)| z * x).sum()
    }

    /// z with z·l = ξ(sinh(a) l).
    pub fn zeta_covector(&self, a: &[f64]) -> Vec<f64> {
        let s = self.sinh_matrix(a);
        let blk = s.view((0, self.n_k), (self.n_k, self.n_l));
        (blk.transpose() * &self.xi).iter().copied().collect()
    }

    /// −ξ(ρ(A) l) = −Aᵀ B l.
    pub fn omega_pair(&self, a: &[f64], l: &[f64]) -> f64 {
        -self.darboux_pair(a, l)
    }

    /// ξ(ρ(A) l) = Aᵀ B l; the pairing behind the chart symplectic form.
    pub fn darboux_pair(&self, a: &[f64], l: &[f64]) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n_a {
            for j in 0..self.n_l {
                s += a[i] * self.pairing[(i, j)] * l[j];
            }
        }
        s
    }

    fn pairing_t_solve(&self, z: &[f64]) -> Result<Vec<f64>> {
        let bt = self.pairing.transpose();
        bt.lu()
            .solve(&DVector::from_column_slice(z))
            .map(|v| v.iter().copied().collect())
            .ok_or_else(|| Error::Singular("pairing matrix".into()))
    }

    /// φ(a), the solution of ξ(ρ(φ(a)) l) = ξ(sinh(a) l) for all l.
    pub fn twist(&self, a: &[f64]) -> Result<Vec<f64>> {
        self.check_len("a", a, self.n_a)?;
        self.pairing_t_solve(&self.zeta_covector(a))
    }

    /// Jacobian matrix of φ at a: B^{-T} C_ℒᵀ Bᵀ.
    pub fn twist_jacobian(&self, a: &[f64]) -> Result<DMatrix<f64>> {
        let c = self.cosh_ll(a);
        let bt = self.pairing.transpose();
        let rhs = c.transpose() * &bt;
        bt.lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Singular("pairing matrix".into()))
    }

    /// det(cosh(a)|_ℒ).
    pub fn twist_jacobian_det(&self, a: &[f64]) -> f64 {
        self.cosh_ll(a).determinant()
    }

    /// φ⁻¹(a) by Newton's method from x₀ = a.
    pub fn twist_inverse(&self, a: &[f64]) -> Result<Vec<f64>> {
        self.check_len("a", a, self.n_a)?;
        let target = DVector::from_column_slice(a);
        let mut x = target.clone();
        let mut best = f64::INFINITY;
        for _ in 0..NEWTON_MAX_ITER {
            let fx = DVector::from_vec(self.twist(x.as_slice())?);
            let r = &fx - &target;
            let res = r.amax();
            best = best.min(res);
            if res <= 1e-15 * (1.0 + target.amax()) {
                return Ok(x.iter().copied().collect());
            }
            let j = self.twist_jacobian(x.as_slice())?;
            let dx = j
                .lu()
                .solve(&r)
                .ok_or_else(|| Error::Singular("twist jacobian".into()))?;
            x -= dx;
            if !x.iter().all(|v| v.is_finite()) {
                break;
            }
        }
        let fx = DVector::from_vec(self.twist(x.as_slice())?);
        let res = (&fx - &target).amax();
        if res.is_finite() && res < NEWTON_TOL {
            Ok(x.iter().copied().collect())
        } else {
            Err(Error::Divergence {
                input: a.to_vec(),
                residual: res.min(best),
            })
        }
    }

    /// Max deviation between sinh(φ⁻¹(a)) and ρ̂(a) on 𝔨 and on ρ(𝔞)𝔨 ⊂ ℒ.
    pub fn lemma_sinh_residual(&self, a: &[f64]) -> Result<f64> {
        let x = self.twist_inverse(a)?;
        let s = self.sinh_matrix(&x);
        let r = self.rho_hat(a);
        let d = s - r;
        let n_b = self.n_b();
        let mut probes: Vec<DVector<f64>> = Vec::new();
        for j in 0..self.n_k {
            let mut k = DVector::zeros(n_b);
            k[j] = 1.0;
            for m in &self.rho {
                probes.push(m * &k);
            }
            probes.push(k);
        }
        Ok(probes
            .iter()
            .map(|v| (&d * v).amax())
            .fold(0.0, f64::max))
    }

    /// Sign of φ near the origin: +1 when twist(εa)/ε → a.
    pub fn twist_orientation(&self) -> f64 {
        let eps = 1e-6;
        let mut acc = 0.0;
        for i in 0..self.n_a {
            let mut a = vec![0.0; self.n_a];
            a[i] = eps;
            if let Ok(p) = self.twist(&a) {
                acc += p[i] / eps;
            }
        }
        if acc >= 0.0 {
            1.0
        } else {
            -1.0
        }
    }
}

impl Serialize for EsetStructure {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_file().serialize(s)
    }
}

impl<'de> Deserialize<'de> for EsetStructure {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let f = EsetFile::deserialize(d)?;
        EsetStructure::from_file(f).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e2() -> EsetStructure {
        EsetStructure::example_2d()
    }

    #[test]
    fn example_is_valid() {
        assert!(e2().validate().is_empty());
        assert!(EsetStructure::example_product(2).validate().is_empty());
    }

    #[test]
    fn singular_pairing_is_flagged() {
        let e = EsetStructure::new("bad", 1, 1, 1, vec![vec![vec![0.0, 0.0], vec![1.0, 0.0]]], vec![1.0])
            .unwrap();
        let v = e.validate();
        assert!(v.iter().any(|v| v.axiom == Axiom::Nondegeneracy));
        assert_eq!(v[0].to_string().split(" (").next().unwrap(), "pairing matrix singular");
    }

    #[test]
    fn ll_block_breaks_sigma() {
        let e = EsetStructure::new("bad", 1, 1, 1, vec![vec![vec![0.0, 1.0], vec![1.0, 0.5]]], vec![1.0])
            .unwrap();
        assert!(e.validate().iter().any(|v| v.axiom == Axiom::SigmaAnticommutation));
    }

    #[test]
    fn noncommuting_rho_is_flagged() {
        let r1 = vec![
            vec![0.0, 0.0, 1.0, 0.0],
            vec![0.0, 0.0, 0.0, 1.0],
            vec![1.0, 0.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0, 0.0],
        ];
        let r2 = vec![
            vec![0.0, 0.0, 1.0, 2.0],
            vec![0.0, 0.0, 0.0, 1.0],
            vec![0.0, 1.0, 0.0, 0.0],
            vec![1.0, 0.0, 0.0, 0.0],
        ];
        let e = EsetStructure::new("nc", 2, 2, 2, vec![r1, r2], vec![1.0, 1.0]).unwrap();
        assert!(e.validate().iter().any(|v| v.axiom == Axiom::Commutativity));
    }

    #[test]
    fn shape_errors_are_structural() {
        let r = EsetStructure::new("bad", 1, 1, 1, vec![vec![vec![0.0, 1.0]]], vec![1.0]);
        assert!(matches!(r, Err(Error::Shape(_))));
        let r = EsetStructure::new("bad", 1, 1, 1, vec![vec![vec![0.0, 1.0], vec![1.0, 0.0]]], vec![]);
        assert!(matches!(r, Err(Error::Shape(_))));
    }

    #[test]
    fn rho_apply_swaps() {
        let e = e2();
        let a = AlgebraVector::new(Part::A, vec![1.0]);
        let l = AlgebraVector::new(Part::B, vec![0.0, 1.0]);
        assert_eq!(e.rho_apply(&a, &l).unwrap().coords, vec![1.0, 0.0]);
        let k = AlgebraVector::new(Part::B, vec![1.0, 0.0]);
        assert_eq!(e.rho_apply(&a, &k).unwrap().coords, vec![0.0, 1.0]);
        let z = AlgebraVector::new(Part::A, vec![0.0]);
        assert_eq!(e.rho_apply(&z, &k).unwrap().coords, vec![0.0, 0.0]);
    }

    #[test]
    fn hyperbolic_blocks() {
        let e = e2();
        let t = 0.83;
        let (s, c) = e.sinh_cosh(&[t]);
        assert!((s[(0, 1)] - t.sinh()).abs() < 1e-14);
        assert!((c[(1, 1)] - t.cosh()).abs() < 1e-14);
        let (s0, c0) = e.sinh_cosh(&[0.0]);
        assert_eq!(s0, DMatrix::zeros(2, 2));
        assert_eq!(c0, DMatrix::identity(2, 2));
    }

    #[test]
    fn omega_pair_sign() {
        let e = e2();
        assert_eq!(e.omega_pair(&[1.0], &[1.0]), -1.0);
        assert_eq!(e.omega_pair(&[0.0], &[3.0]), 0.0);
    }

    #[test]
    fn twist_of_example_is_sinh() {
        let e = e2();
        assert_eq!(e.twist(&[0.0]).unwrap(), vec![0.0]);
        let p = e.twist(&[1.0]).unwrap()[0];
        assert!((p - 1.0f64.sinh()).abs() < 1e-14);
        assert_eq!(e.twist_orientation(), 1.0);
    }

    #[test]
    fn twist_inverse_is_asinh() {
        let e = e2();
        let x = e.twist_inverse(&[1.0f64.sinh()]).unwrap()[0];
        assert!((x - 1.0).abs() < 1e-13);
        assert_eq!(e.twist_inverse(&[0.0]).unwrap(), vec![0.0]);
        let x = e.twist_inverse(&[20.0]).unwrap()[0];
        assert!((x - 20.0f64.asinh()).abs() < 1e-12);
        // the iteration cap turns far-out inputs into a divergence error
        assert!(matches!(e.twist_inverse(&[250.0]), Err(Error::Divergence { .. })));
    }

    #[test]
    fn jacobian_det_is_cosh() {
        let e = e2();
        assert_eq!(e.twist_jacobian_det(&[0.0]), 1.0);
        assert!((e.twist_jacobian_det(&[1.0]) - 1.0f64.cosh()).abs() < 1e-14);
    }

    #[test]
    fn lemma_sinh_on_product() {
        let e = EsetStructure::example_product(2);
        let r = e.lemma_sinh_residual(&[0.7, -1.9]).unwrap();
        assert!(r < 1e-10, "{r}");
    }

    #[test]
    fn json_round_trip() {
        let e = e2();
        let s = serde_json::to_string(&e).unwrap();
        let back = EsetStructure::from_json_str(&s).unwrap();
        assert_eq!(back.to_file().rho, e.to_file().rho);
        assert_eq!(back.name, "example-2d");
    }
}
