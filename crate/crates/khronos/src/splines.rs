//! Univariate B-spline machinery: the compact quadratic activation kernel used
//! by the separable surrogate atoms, and the clamped Cox–de Boor basis used by
//! geometry fitting.

use crate::error::{Error, Result};

/// Cardinal quadratic B-spline ψ, symmetric about 0 with support [-3/2, 3/2].
///
/// Piecewise form:
/// - `3/4 - d²`            for |d| ≤ 1/2
/// - `(3/2 - |d|)² / 2`    for 1/2 < |d| ≤ 3/2
/// - `0`                   otherwise
///
/// At the breakpoints the closed-interval branch is taken from the |d| ≤ 1/2
/// side at exactly 1/2 and the zero branch at exactly 3/2, so evaluation is
/// deterministic and bit-reproducible. ψ is C¹ everywhere and integrates to 1.
#[inline]
pub fn quadratic_kernel(d: f64) -> f64 {
    let a = d.abs();
    if a <= 0.5 {
        0.75 - d * d
    } else if a < 1.5 {
        let t = 1.5 - a;
        0.5 * t * t
    } else {
        0.0
    }
}

/// First derivative dψ/dd of [`quadratic_kernel`].
#[inline]
pub fn quadratic_kernel_deriv(d: f64) -> f64 {
    let a = d.abs();
    if a <= 0.5 {
        -2.0 * d
    } else if a < 1.5 {
        -(1.5 - a) * d.signum()
    } else {
        0.0
    }
}

/// Clamped B-spline basis on [0, 1]: first and last knots repeated
/// `degree + 1` times, interior knots uniform.
#[derive(Debug, Clone, PartialEq)]
pub struct ClampedBasis {
    degree: usize,
    n: usize,
    knots: Vec<f64>,
}

impl ClampedBasis {
    /// Uniform clamped basis with `n` functions of the given degree on [0, 1].
    pub fn uniform(n: usize, degree: usize) -> Result<Self> {
        if degree == 0 {
            return Err(Error::Config("spline degree must be at least 1".into()));
        }
        if n < degree + 1 {
            return Err(Error::Config(format!(
                "need at least degree+1 = {} basis functions, got {n}",
                degree + 1
            )));
        }
        let spans = n - degree;
        let mut knots = Vec::with_capacity(n + degree + 1);
        knots.extend(std::iter::repeat(0.0).take(degree + 1));
        for i in 1..spans {
            knots.push(i as f64 / spans as f64);
        }
        knots.extend(std::iter::repeat(1.0).take(degree + 1));
        Ok(Self { degree, n, knots })
    }

    /// Basis from an explicit knot vector (must be nondecreasing, clamped on
    /// [0, 1] with degree+1 repeats at each end).
    pub fn from_knots(degree: usize, knots: Vec<f64>) -> Result<Self> {
        if degree == 0 {
            return Err(Error::Config("spline degree must be at least 1".into()));
        }
        if knots.len() < 2 * (degree + 1) {
            return Err(Error::Config(format!(
                "knot vector too short: {} knots for degree {degree}",
                knots.len()
            )));
        }
        if knots.windows(2).any(|w| w[1] < w[0]) || knots.iter().any(|k| !k.is_finite()) {
            return Err(Error::Config("knot vector must be finite and nondecreasing".into()));
        }
        let n = knots.len() - degree - 1;
        for i in 0..=degree {
            if knots[i] != knots[0] || knots[knots.len() - 1 - i] != knots[knots.len() - 1] {
                return Err(Error::Config(format!(
                    "knot vector is not clamped with {}-fold end repeats",
                    degree + 1
                )));
            }
        }
        Ok(Self { degree, n, knots })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Index of the knot span containing ζ, clamped so the last nonempty span
    /// is closed at ζ = 1.
    fn find_span(&self, zeta: f64) -> usize {
        let p = self.degree;
        let n = self.n;
        if zeta >= self.knots[n] {
            return n - 1;
        }
        let mut lo = p;
        let mut hi = n;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if zeta < self.knots[mid] {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        lo
    }

    /// All `n` basis values N_{i,degree}(ζ). Nonnegative, summing to 1.
    ///
    /// ζ outside [0, 1] is a domain error.
    pub fn eval(&self, zeta: f64) -> Result<Vec<f64>> {
        if !(0.0..=1.0).contains(&zeta) {
            return Err(Error::Domain(format!("zeta = {zeta} outside [0, 1]")));
        }
        let mut out = vec![0.0; self.n];
        let span = self.find_span(zeta);
        let vals = self.nonzero_at(zeta, span);
        out[span - self.degree..=span].copy_from_slice(&vals);
        Ok(out)
    }

    /// The `degree + 1` nonvanishing basis values on the given span
    /// (Cox–de Boor triangle).
    fn nonzero_at(&self, zeta: f64, span: usize) -> Vec<f64> {
        let p = self.degree;
        let mut vals = vec![0.0; p + 1];
        let mut left = vec![0.0; p + 1];
        let mut right = vec![0.0; p + 1];
        vals[0] = 1.0;
        for j in 1..=p {
            left[j] = zeta - self.knots[span + 1 - j];
            right[j] = self.knots[span + j] - zeta;
            let mut saved = 0.0;
            for r in 0..j {
                let denom = right[r + 1] + left[j - r];
                let temp = if denom != 0.0 { vals[r] / denom } else { 0.0 };
                vals[r] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            vals[j] = saved;
        }
        vals
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn kernel_exact_values() {
        assert_eq!(quadratic_kernel(0.0), 0.75);
        assert_eq!(quadratic_kernel(1.5), 0.0);
        assert_eq!(quadratic_kernel(-1.5), 0.0);
        assert_eq!(quadratic_kernel(2.0), 0.0);
        // (3/2 - 1)^2 / 2
        assert_eq!(quadratic_kernel(1.0), 0.125);
        assert_eq!(quadratic_kernel(-1.0), 0.125);
    }

    #[test]
    fn kernel_even_nonnegative_compact() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10_000 {
            let d: f64 = rng.random_range(-3.0..3.0);
            let v = quadratic_kernel(d);
            assert!(v >= 0.0);
            assert_eq!(v, quadratic_kernel(-d));
            if d.abs() >= 1.5 {
                assert_eq!(v, 0.0);
            }
        }
    }

    #[test]
    fn kernel_c1_at_breakpoints() {
        let h = 1e-9;
        for b in [0.5, 1.5, -0.5, -1.5] {
            let jump = (quadratic_kernel(b + h) - quadratic_kernel(b - h)).abs();
            assert!(jump < 1e-8, "value jump {jump} at {b}");
            let djump = (quadratic_kernel_deriv(b + h) - quadratic_kernel_deriv(b - h)).abs();
            assert!(djump < 1e-8, "derivative jump {djump} at {b}");
        }
    }

    #[test]
    fn kernel_deriv_exact_values() {
        assert_eq!(quadratic_kernel_deriv(0.0), 0.0);
        assert_eq!(quadratic_kernel_deriv(2.0), 0.0);
        assert_eq!(quadratic_kernel_deriv(1.0), -0.5);
        assert_eq!(quadratic_kernel_deriv(-1.0), 0.5);
    }

    #[test]
    fn kernel_deriv_matches_central_differences() {
        // 1e6 random points, skipping a small window around the breakpoints
        // where the central difference straddles two branches.
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let h = 1e-6;
        for _ in 0..1_000_000 {
            let d: f64 = rng.random_range(-2.0..2.0);
            let a = d.abs();
            if (a - 0.5).abs() < 1e-4 || (a - 1.5).abs() < 1e-4 {
                continue;
            }
            let fd = (quadratic_kernel(d + h) - quadratic_kernel(d - h)) / (2.0 * h);
            assert!(
                (fd - quadratic_kernel_deriv(d)).abs() < 1e-6,
                "fd mismatch at d = {d}"
            );
        }
    }

    #[test]
    fn kernel_integrates_to_one() {
        // Fine trapezoidal quadrature over the support.
        let n = 3_000_000;
        let a = -1.5;
        let b = 1.5;
        let dx = (b - a) / n as f64;
        let mut sum = 0.5 * (quadratic_kernel(a) + quadratic_kernel(b));
        for i in 1..n {
            sum += quadratic_kernel(a + i as f64 * dx);
        }
        let integral = sum * dx;
        assert!((integral - 1.0).abs() < 1e-9, "integral = {integral}");
    }

    /// Naive recursive Cox–de Boor, independent of the production evaluator.
    fn naive_basis(knots: &[f64], i: usize, k: usize, z: f64) -> f64 {
        if k == 0 {
            // Half-open spans; callers sample z strictly inside (0, 1).
            return if knots[i] <= z && z < knots[i + 1] { 1.0 } else { 0.0 };
        }
        let mut acc = 0.0;
        let d1 = knots[i + k] - knots[i];
        if d1 > 0.0 {
            acc += (z - knots[i]) / d1 * naive_basis(knots, i, k - 1, z);
        }
        let d2 = knots[i + k + 1] - knots[i + 1];
        if d2 > 0.0 {
            acc += (knots[i + k + 1] - z) / d2 * naive_basis(knots, i + 1, k - 1, z);
        }
        acc
    }

    #[test]
    fn clamped_endpoints_interpolate() {
        for degree in [2, 3] {
            for n in [8, 16, 32] {
                let basis = ClampedBasis::uniform(n, degree).unwrap();
                let at0 = basis.eval(0.0).unwrap();
                assert_eq!(at0[0], 1.0);
                assert!(at0[1..].iter().all(|&v| v == 0.0));
                let at1 = basis.eval(1.0).unwrap();
                assert_eq!(at1[n - 1], 1.0);
                assert!(at1[..n - 1].iter().all(|&v| v == 0.0));
            }
        }
    }

    #[test]
    fn partition_of_unity_and_nonnegativity() {
        for degree in [2usize, 3] {
            for n in [8usize, 16, 32] {
                let basis = ClampedBasis::uniform(n, degree).unwrap();
                for t in 0..=1000 {
                    let z = t as f64 / 1000.0;
                    let vals = basis.eval(z).unwrap();
                    let sum: f64 = vals.iter().sum();
                    assert!(
                        (sum - 1.0).abs() < 1e-12,
                        "sum = {sum} at z = {z}, degree {degree}, n {n}"
                    );
                    assert!(vals.iter().all(|&v| v >= 0.0));
                }
            }
        }
    }

    #[test]
    fn matches_naive_recursive_evaluation() {
        for degree in [2usize, 3] {
            for n in [8usize, 16] {
                let basis = ClampedBasis::uniform(n, degree).unwrap();
                for t in 1..1000 {
                    let z = t as f64 / 1000.0;
                    let vals = basis.eval(z).unwrap();
                    for i in 0..n {
                        let expect = naive_basis(basis.knots(), i, degree, z);
                        assert!(
                            (vals[i] - expect).abs() < 1e-12,
                            "basis {i} at z = {z}: {} vs naive {expect}",
                            vals[i]
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn local_support() {
        let degree = 3;
        let basis = ClampedBasis::uniform(16, degree).unwrap();
        let knots = basis.knots().to_vec();
        for t in 0..=500 {
            let z = t as f64 / 500.0;
            let vals = basis.eval(z).unwrap();
            for (i, &v) in vals.iter().enumerate() {
                if v != 0.0 {
                    assert!(
                        knots[i] <= z && z <= knots[i + degree + 1],
                        "basis {i} nonzero at z = {z} outside its support"
                    );
                }
            }
        }
    }

    #[test]
    fn rejects_out_of_domain() {
        let basis = ClampedBasis::uniform(8, 3).unwrap();
        assert!(basis.eval(-0.001).is_err());
        assert!(basis.eval(1.001).is_err());
        assert!(basis.eval(f64::NAN).is_err());
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(ClampedBasis::uniform(3, 3).is_err());
        assert!(ClampedBasis::uniform(4, 0).is_err());
        assert!(ClampedBasis::from_knots(2, vec![0.0, 0.0, 0.5, 1.0, 1.0]).is_err());
        assert!(ClampedBasis::from_knots(2, vec![0.0, 0.0, 0.0, 0.6, 0.4, 1.0, 1.0, 1.0]).is_err());
    }
}
