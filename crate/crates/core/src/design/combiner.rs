use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{DmaError, Result};
use crate::linalg::{modulus, CMat, CVec};
use crate::scalar::{c, cis, cr, czero, j, Real, C};
use crate::seed::uniform_phase;

/// Block-diagonal DMA combiner `Q = blkdiag[q_1†, …, q_{N_v}†]`.
///
/// The stacked vector `q` (with `vec(Q†) = B q`) is `½(u − j1)` for a
/// unimodular `u = e^{jθ}`; the entries of `Q` are `conj(q)`, which lie on the
/// Lorentzian circle `{½(j + e^{jφ})}`.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalogCombiner<T: Real> {
    microstrips: usize,
    elements_per_microstrip: usize,
    theta: Vec<T>,
    weights: Vec<C<T>>,
}

impl<T: Real> AnalogCombiner<T> {
    /// From phases `θ` of `u`; each phase is wrapped into `[0, 2π)`.
    pub fn from_phases(microstrips: usize, elements_per_microstrip: usize, theta: &[T]) -> Result<Self> {
        let u: Vec<C<T>> = theta.iter().map(|&t| cis(t)).collect();
        Self::from_unimodular(microstrips, elements_per_microstrip, &u)
    }

    /// From a unimodular `u`; entries are renormalized to `|u_m| = 1`.
    pub fn from_unimodular(
        microstrips: usize,
        elements_per_microstrip: usize,
        u: &[C<T>],
    ) -> Result<Self> {
        let n = microstrips * elements_per_microstrip;
        if n == 0 || u.len() != n {
            return Err(DmaError::invalid(format!(
                "expected {n} unimodular entries, got {}",
                u.len()
            )));
        }
        let tau = T::two_pi();
        let mut theta = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for &z in u {
            let m = modulus(z);
            if !(m > T::zero()) || !m.is_finite() {
                return Err(DmaError::numerical("unimodular entry with zero or non-finite modulus"));
            }
            let z = z / cr(m);
            let mut t = z.im.atan2(z.re);
            if t < T::zero() {
                t += tau;
            }
            if t >= tau {
                t -= tau;
            }
            theta.push(t);
            // conj(½(u − j)) = ½(conj(u) + j)
            weights.push((z.conj() + j()) * cr(T::lit(0.5)));
        }
        Ok(Self {
            microstrips,
            elements_per_microstrip,
            theta,
            weights,
        })
    }

    /// i.i.d. uniform phases.
    pub fn random<R: Rng + ?Sized>(microstrips: usize, elements_per_microstrip: usize, rng: &mut R) -> Self {
        let theta: Vec<T> = (0..microstrips * elements_per_microstrip)
            .map(|_| uniform_phase(rng))
            .collect();
        Self::from_phases(microstrips, elements_per_microstrip, &theta)
            .expect("phases produce a valid combiner")
    }

    pub fn microstrips(&self) -> usize {
        self.microstrips
    }

    pub fn elements_per_microstrip(&self) -> usize {
        self.elements_per_microstrip
    }

    pub fn elements(&self) -> usize {
        self.weights.len()
    }

    pub fn theta(&self) -> &[T] {
        &self.theta
    }

    /// Nonzero entry of row `microstrip_of(m)` of `Q` at column `m`.
    #[inline]
    pub fn weight(&self, m: usize) -> C<T> {
        self.weights[m]
    }

    pub fn weights(&self) -> &[C<T>] {
        &self.weights
    }

    /// Stacked `q = ½(u − j1)`.
    pub fn q_stacked(&self) -> CVec<T> {
        CVec::from_iterator(self.elements(), self.weights.iter().map(|w| w.conj()))
    }

    /// `u = 2q + j1`.
    pub fn unimodular(&self) -> Vec<C<T>> {
        self.q_stacked()
            .iter()
            .map(|q| *q * cr(T::lit(2.0)) + j())
            .collect()
    }

    /// Position of `q_m` inside `vec(Q†)` (the `B` index map).
    #[inline]
    pub fn selection_index(&self, m: usize) -> usize {
        (m / self.elements_per_microstrip) * self.elements() + m
    }

    /// `B q` as a length `N·N_v` vector.
    pub fn selection_apply(&self, q: &CVec<T>) -> CVec<T> {
        let mut out = CVec::from_element(self.elements() * self.microstrips, czero());
        for (m, qm) in q.iter().enumerate() {
            out[self.selection_index(m)] = *qm;
        }
        out
    }

    /// Dense `N_v × N` matrix.
    pub fn matrix(&self) -> CMat<T> {
        let ne = self.elements_per_microstrip;
        let n = self.elements();
        DMatrix::from_fn(self.microstrips, n, |i, m| {
            if m / ne == i {
                self.weights[m]
            } else {
                czero()
            }
        })
    }

    /// `max_m | |Q_{i,m} − ½j| − ½ |`.
    pub fn lorentzian_violation(&self) -> T {
        let center = c(T::zero(), T::lit(0.5));
        self.weights
            .iter()
            .map(|w| (modulus(*w - center) - T::lit(0.5)).abs())
            .fold(T::zero(), |a, b| a.max(b))
    }
}

/// Digital combiner `W` (N_v × K); the soft estimate is `ŝ = W† z`.
#[derive(Debug, Clone, PartialEq)]
pub struct DigitalCombiner<T: Real> {
    pub w: CMat<T>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from_seed;

    #[test]
    fn weights_lie_on_lorentzian_circle() {
        let q = AnalogCombiner::<f64>::random(3, 5, &mut rng_from_seed(1));
        assert!(q.lorentzian_violation() < 1e-15);
        for (&qm, u) in q.q_stacked().iter().zip(q.unimodular()) {
            assert!((qm - (u - j()) * cr(0.5)).norm() < 1e-15);
            assert!((u.norm() - 1.0).abs() < 1e-15);
        }
        assert!(q.theta().iter().all(|&t| (0.0..std::f64::consts::TAU).contains(&t)));
    }

    #[test]
    fn selection_map_reproduces_vec_of_adjoint() {
        let q = AnalogCombiner::<f64>::random(3, 4, &mut rng_from_seed(2));
        let dense = q.matrix().adjoint();
        let vec_qh = CVec::from_iterator(dense.len(), dense.iter().copied());
        assert_eq!(q.selection_apply(&q.q_stacked()), vec_qh);
    }

    #[test]
    fn block_structure() {
        let q = AnalogCombiner::<f64>::random(2, 3, &mut rng_from_seed(3));
        let m = q.matrix();
        for i in 0..2 {
            for col in 0..6 {
                if col / 3 != i {
                    assert_eq!(m[(i, col)], czero());
                }
            }
        }
    }

    #[test]
    fn phase_round_trip() {
        let theta = [0.1, 3.0, 6.0, 1.5];
        let q = AnalogCombiner::<f64>::from_phases(2, 2, &theta).unwrap();
        for (a, b) in q.theta().iter().zip(theta) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(AnalogCombiner::<f64>::from_phases(2, 2, &theta[..3]).is_err());
    }
}
