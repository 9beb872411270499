//! Analytic NACA 4-digit airfoil generator (closed trailing edge), used to
//! produce reference point clouds for fitting tests and demos.

use crate::error::{Error, Result};

/// Upper and lower surface point clouds for a 4-digit code like "0012" or
/// "2412", each running leading edge -> trailing edge with `n_per_side`
/// cosine-spaced stations on the unit chord.
pub fn naca4(code: &str, n_per_side: usize) -> Result<(Vec<[f64; 2]>, Vec<[f64; 2]>)> {
    if code.len() != 4 || !code.chars().all(|c| c.is_ascii_digit()) {
        return Err(Error::Config(format!("not a 4-digit NACA code: {code:?}")));
    }
    if n_per_side < 2 {
        return Err(Error::Config("need at least 2 stations per side".into()));
    }
    let digits: Vec<u32> = code.chars().map(|c| c.to_digit(10).unwrap()).collect();
    let m = digits[0] as f64 / 100.0; // max camber
    let p = digits[1] as f64 / 10.0; // camber position
    let t = (digits[2] * 10 + digits[3]) as f64 / 100.0; // thickness

    // Closed trailing edge: the final coefficient is -0.1036.
    let half_thickness = |x: f64| {
        5.0 * t
            * (0.2969 * x.sqrt() - 0.1260 * x - 0.3516 * x * x + 0.2843 * x * x * x
                - 0.1036 * x * x * x * x)
    };
    let camber = |x: f64| -> (f64, f64) {
        if m == 0.0 || p == 0.0 {
            (0.0, 0.0)
        } else if x < p {
            (m / (p * p) * (2.0 * p * x - x * x), 2.0 * m / (p * p) * (p - x))
        } else {
            (
                m / ((1.0 - p) * (1.0 - p)) * (1.0 - 2.0 * p + 2.0 * p * x - x * x),
                2.0 * m / ((1.0 - p) * (1.0 - p)) * (p - x),
            )
        }
    };

    let mut upper = Vec::with_capacity(n_per_side);
    let mut lower = Vec::with_capacity(n_per_side);
    for i in 0..n_per_side {
        let x = 0.5 * (1.0 - (std::f64::consts::PI * i as f64 / (n_per_side - 1) as f64).cos());
        let yt = half_thickness(x);
        let (yc, dyc) = camber(x);
        let theta = dyc.atan();
        upper.push([x - yt * theta.sin(), yc + yt * theta.cos()]);
        lower.push([x + yt * theta.sin(), yc - yt * theta.cos()]);
    }
    Ok((upper, lower))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_foil_mirrors() {
        let (up, lo) = naca4("0012", 101).unwrap();
        for (u, l) in up.iter().zip(&lo) {
            assert!((u[0] - l[0]).abs() < 1e-12);
            assert!((u[1] + l[1]).abs() < 1e-12);
        }
        // Closed trailing edge.
        assert!(up.last().unwrap()[1].abs() < 1e-12);
    }

    #[test]
    fn thickness_peak_is_near_30_percent_chord() {
        let (up, lo) = naca4("0012", 401).unwrap();
        let (idx, thickest) = up
            .iter()
            .zip(&lo)
            .enumerate()
            .map(|(i, (u, l))| (i, u[1] - l[1]))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        assert!((thickest - 0.12).abs() < 2e-3, "max thickness {thickest}");
        let x_at = up[idx][0];
        assert!((0.25..0.35).contains(&x_at), "thickest at x = {x_at}");
    }

    #[test]
    fn cambered_foil_has_positive_mean_line() {
        let (up, lo) = naca4("2412", 101).unwrap();
        let mid = up.len() / 2;
        assert!(up[mid][1] + lo[mid][1] > 0.0);
    }

    #[test]
    fn rejects_bad_codes() {
        assert!(naca4("00123", 50).is_err());
        assert!(naca4("ab12", 50).is_err());
        assert!(naca4("0012", 1).is_err());
    }
}
