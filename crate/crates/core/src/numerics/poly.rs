//! Dense univariate polynomials with ascending coefficients. Used by the
//! closed-form coefficient recursion of the density expansion, where each
//! level maps polynomials to polynomials.

#[derive(Debug, Clone, PartialEq)]
pub struct Poly(pub Vec<f64>);

impl Poly {
    pub fn constant(c: f64) -> Self {
        Poly(vec![c])
    }

    pub fn degree(&self) -> usize {
        self.0.len().saturating_sub(1)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn scale(&self, s: f64) -> Poly {
        Poly(self.0.iter().map(|c| c * s).collect())
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let n = self.0.len().max(other.0.len());
        let mut out = vec![0.0; n];
        for (i, &c) in self.0.iter().enumerate() {
            out[i] += c;
        }
        for (i, &c) in other.0.iter().enumerate() {
            out[i] += c;
        }
        Poly(out)
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = vec![0.0; self.0.len() + other.0.len() - 1];
        for (i, &a) in self.0.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for (j, &b) in other.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly(out)
    }

    pub fn second_derivative(&self) -> Poly {
        if self.0.len() <= 2 {
            return Poly::constant(0.0);
        }
        Poly(
            self.0[2..]
                .iter()
                .enumerate()
                .map(|(k, &c)| c * ((k + 2) * (k + 1)) as f64)
                .collect(),
        )
    }

    /// Multiplies by `x^k`.
    pub fn shift_up(&self, k: usize) -> Poly {
        let mut out = vec![0.0; self.0.len() + k];
        out[k..].copy_from_slice(&self.0);
        Poly(out)
    }

    /// Antiderivative with zero constant term.
    pub fn antiderivative(&self) -> Poly {
        let mut out = vec![0.0; self.0.len() + 1];
        for (k, &c) in self.0.iter().enumerate() {
            out[k + 1] = c / (k + 1) as f64;
        }
        Poly(out)
    }

    /// Divides by `x^k`, asserting the low-order coefficients vanish (they are
    /// exactly zero by construction in the coefficient recursion).
    pub fn shift_down(&self, k: usize) -> Poly {
        debug_assert!(self.0.len() > k);
        Poly(self.0[k..].to_vec())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn algebra_round_trip() {
        let p = Poly(vec![1.0, -2.0, 3.0]); // 1 - 2x + 3x^2
        assert_abs_diff_eq!(p.eval(2.0), 9.0);
        let q = p.mul(&Poly(vec![0.0, 1.0])); // x * p
        assert_abs_diff_eq!(q.eval(2.0), 18.0);
        assert_abs_diff_eq!(p.second_derivative().eval(5.0), 6.0);
        let a = p.antiderivative();
        assert_abs_diff_eq!(a.eval(1.0) - a.eval(0.0), 1.0 - 1.0 + 1.0, epsilon = 1e-14);
        assert_eq!(q.shift_down(1), p);
    }
}
