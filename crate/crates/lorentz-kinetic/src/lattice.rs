//! Momentum bookkeeping (the split `k = κ − η`), lattice index boxes and the
//! periodic potential model.
//!
//! Half-integer points `κ ∈ (Z/2)^d` are stored through the integer vector `2κ`.

use crate::error::{Error, Result};
use crate::numeric::I;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// A momentum written as `k = κ − η` with `κ ∈ (Z/2)^d` and `η ∈ [−1/4, 1/4)^d`.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentumSplit {
    /// The integer vector `2κ`.
    pub kappa2: Vec<i64>,
    /// The offset `η`.
    pub eta: Vec<f64>,
}

impl MomentumSplit {
    /// The half-integer point `κ`.
    pub fn kappa(&self) -> Vec<f64> {
        self.kappa2.iter().map(|&j| j as f64 / 2.0).collect()
    }

    /// The reconstructed momentum `κ − η`.
    pub fn momentum(&self) -> Vec<f64> {
        self.kappa2
            .iter()
            .zip(&self.eta)
            .map(|(&j, e)| j as f64 / 2.0 - e)
            .collect()
    }
}

/// Splits `k` into the nearest half-integer `κ` (ties resolved downward) and `η = κ − k`.
pub fn split_momentum(k: &[f64]) -> MomentumSplit {
    let kappa2: Vec<i64> = k.iter().map(|&v| (2.0 * v - 0.5).ceil() as i64).collect();
    let eta = kappa2
        .iter()
        .zip(k)
        .map(|(&j, v)| j as f64 / 2.0 - v)
        .collect();
    MomentumSplit { kappa2, eta }
}

/// The sup-norm box `{n ∈ Z^d : |n|_∞ ≤ radius}`, enumerated in row-major order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeBox {
    pub dim: usize,
    pub radius: i64,
}

impl LatticeBox {
    pub fn new(dim: usize, radius: i64) -> Self {
        assert!(dim >= 1 && radius >= 0);
        LatticeBox { dim, radius }
    }

    /// Points per axis.
    pub fn side(&self) -> usize {
        (2 * self.radius + 1) as usize
    }

    /// Number of points.
    pub fn len(&self) -> usize {
        self.side().pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// The lattice point with linear index `idx`.
    pub fn point(&self, mut idx: usize) -> Vec<i64> {
        let side = self.side();
        let mut p = vec![0; self.dim];
        for k in (0..self.dim).rev() {
            p[k] = (idx % side) as i64 - self.radius;
            idx /= side;
        }
        p
    }

    /// Linear index of `p`, or `None` outside the box.
    pub fn index(&self, p: &[i64]) -> Option<usize> {
        let side = self.side() as i64;
        let mut idx = 0i64;
        for &c in p {
            if c.abs() > self.radius {
                return None;
            }
            idx = idx * side + (c + self.radius);
        }
        Some(idx as usize)
    }

    /// All points in index order.
    pub fn points(&self) -> Vec<Vec<i64>> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }
}

/// A real `Z^d`-periodic potential given by finitely many Fourier coefficients `V̂(n)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodicPotential {
    pub dim: usize,
    /// Pairs `(n, V̂(n))`, sorted by `n`, Hermitian-complete.
    pub coeffs: Vec<(Vec<i64>, (f64, f64))>,
}

impl PeriodicPotential {
    /// Builds a potential from `(n, V̂(n))` entries. With `complete` set, missing Hermitian
    /// partners `V̂(−n) = conj V̂(n)` are added; otherwise they must be present and consistent.
    pub fn new(dim: usize, entries: &[(Vec<i64>, Complex64)], complete: bool) -> Result<Self> {
        let mut map: std::collections::BTreeMap<Vec<i64>, Complex64> = Default::default();
        for (n, v) in entries {
            if n.len() != dim {
                return Err(Error::InvalidInput(format!(
                    "mode {n:?} has wrong dimension"
                )));
            }
            map.insert(n.clone(), *v);
        }
        if complete {
            let keys: Vec<_> = map.keys().cloned().collect();
            for n in keys {
                let m: Vec<i64> = n.iter().map(|v| -v).collect();
                let v = map[&n];
                map.entry(m).or_insert(v.conj());
            }
        }
        let mut worst: f64 = 0.0;
        for (n, v) in &map {
            let m: Vec<i64> = n.iter().map(|v| -v).collect();
            let partner = map.get(&m).copied().unwrap_or_default();
            worst = worst.max((partner - v.conj()).norm());
        }
        if worst > 1e-12 {
            return Err(Error::NonHermitian(worst));
        }
        Ok(PeriodicPotential {
            dim,
            coeffs: map.into_iter().map(|(n, v)| (n, (v.re, v.im))).collect(),
        })
    }

    /// The zero potential.
    pub fn zero(dim: usize) -> Self {
        PeriodicPotential {
            dim,
            coeffs: Vec::new(),
        }
    }

    /// `V̂(±e_axis) = amplitude`, i.e. `V(x) = 2·amplitude·cos(2π x_axis)`.
    pub fn single_mode(dim: usize, axis: usize, amplitude: f64) -> Self {
        let mut e = vec![0; dim];
        e[axis] = 1;
        let entries = vec![(e, Complex64::new(amplitude, 0.0))];
        Self::new(dim, &entries, true).expect("single mode is Hermitian")
    }

    /// Truncation radius `N_V = max |n|_∞`.
    pub fn radius(&self) -> i64 {
        self.coeffs
            .iter()
            .map(|(n, _)| n.iter().map(|v| v.abs()).max().unwrap_or(0))
            .max()
            .unwrap_or(0)
    }

    /// `V̂(n)` (zero when absent).
    pub fn coeff(&self, n: &[i64]) -> Complex64 {
        self.coeffs
            .iter()
            .find(|(m, _)| m.as_slice() == n)
            .map(|(_, v)| Complex64::new(v.0, v.1))
            .unwrap_or_default()
    }

    /// Nonzero modes `n ≠ 0` with their coefficients; `V̂(0)` is inert in every driver sum.
    pub fn modes(&self) -> Vec<(Vec<i64>, Complex64)> {
        self.coeffs
            .iter()
            .filter(|(n, v)| n.iter().any(|&c| c != 0) && (v.0 != 0.0 || v.1 != 0.0))
            .map(|(n, v)| (n.clone(), Complex64::new(v.0, v.1)))
            .collect()
    }

    /// Whether every coefficient vanishes.
    pub fn is_zero(&self) -> bool {
        self.modes().is_empty()
    }
}

/// Evaluates `V(x) = Σ_n V̂(n) e^{2πi n·x}`, reporting a non-Hermitian residue above `1e−10`.
pub fn evaluate_potential(v: &PeriodicPotential, x: &[f64]) -> Result<f64> {
    let mut s = Complex64::new(0.0, 0.0);
    for (n, c) in &v.coeffs {
        let phase: f64 = n.iter().zip(x).map(|(&a, b)| a as f64 * b).sum();
        s += Complex64::new(c.0, c.1) * (I * 2.0 * PI * phase).exp();
    }
    if s.im.abs() > 1e-10 {
        return Err(Error::NonHermitian(s.im.abs()));
    }
    Ok(s.re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn split_examples() {
        let s = split_momentum(&[0.6]);
        assert_eq!(s.kappa2, vec![1]);
        assert!((s.eta[0] + 0.1).abs() < 1e-15);
        let s = split_momentum(&[0.0]);
        assert_eq!((s.kappa2[0], s.eta[0]), (0, 0.0));
        let s = split_momentum(&[0.25]);
        assert_eq!(s.kappa2, vec![0]);
        assert_eq!(s.eta, vec![-0.25]);
    }

    #[test]
    fn potential_examples() {
        let z = PeriodicPotential::zero(2);
        assert_eq!(evaluate_potential(&z, &[0.3, 0.1]).unwrap(), 0.0);
        let v = PeriodicPotential::single_mode(2, 0, 0.5);
        for x in [0.0, 0.13, 0.71] {
            let got = evaluate_potential(&v, &[x, 0.4]).unwrap();
            assert!((got - (2.0 * PI * x).cos()).abs() < 1e-14);
        }
    }

    #[test]
    fn random_hermitian_set_matches_direct_sum() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let entries: Vec<_> = (1..=4)
            .map(|k| {
                (
                    vec![k],
                    Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                )
            })
            .collect();
        let v = PeriodicPotential::new(1, &entries, true).unwrap();
        let x = 0.37;
        let direct: f64 = entries
            .iter()
            .map(|(n, c)| {
                2.0 * (c.re * (2.0 * PI * n[0] as f64 * x).cos()
                    - c.im * (2.0 * PI * n[0] as f64 * x).sin())
            })
            .sum();
        assert!((evaluate_potential(&v, &[x]).unwrap() - direct).abs() < 1e-12);
    }

    #[test]
    fn non_hermitian_rejected() {
        let entries = vec![
            (vec![1], Complex64::new(1.0, 0.0)),
            (vec![-1], Complex64::new(0.5, 0.0)),
        ];
        assert!(matches!(
            PeriodicPotential::new(1, &entries, false),
            Err(Error::NonHermitian(_))
        ));
    }

    #[test]
    fn box_indexing_roundtrip() {
        let b = LatticeBox::new(2, 3);
        for i in 0..b.len() {
            assert_eq!(b.index(&b.point(i)), Some(i));
        }
        assert_eq!(b.index(&[4, 0]), None);
    }

    proptest! {
        #[test]
        fn split_reconstructs_and_is_idempotent(k in prop::collection::vec(-20.0f64..20.0, 1..4)) {
            let s = split_momentum(&k);
            for (e, r) in s.eta.iter().zip(s.momentum().iter().zip(&k)) {
                prop_assert!(*e >= -0.25 && *e < 0.25);
                prop_assert!((r.0 - r.1).abs() < 1e-12);
            }
            let again = split_momentum(&s.momentum());
            prop_assert_eq!(&again.kappa2, &s.kappa2);
            for (a, b) in again.eta.iter().zip(&s.eta) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }

        #[test]
        fn hermitian_sets_evaluate_real(re in -1.0f64..1.0, im in -1.0f64..1.0, x in 0.0f64..1.0, y in 0.0f64..1.0) {
            let v = PeriodicPotential::new(2, &[(vec![1, 2], Complex64::new(re, im)), (vec![0, 1], Complex64::new(im, re))], true).unwrap();
            prop_assert!(evaluate_potential(&v, &[x, y]).is_ok());
        }
    }
}
