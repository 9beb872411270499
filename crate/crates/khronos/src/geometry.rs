//! Cubic B-spline airfoil parameterization: chord-length point
//! parameterization, constrained least-squares fitting of the upper and lower
//! surfaces to a shared control polygon, curve reconstruction, and
//! feature extraction for surrogate inputs.
//!
//! The two sides share their leading-edge and trailing-edge control points
//! (C0 at the trailing edge), and the two control points adjacent to the
//! leading edge are pinned to the leading-edge x-coordinate, which makes the
//! tangent at the nose vertical.

pub mod naca;

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::splines::ClampedBasis;

/// A planar B-spline curve with a clamped basis on [0, 1].
#[derive(Debug, Clone)]
pub struct BSplineCurve {
    basis: ClampedBasis,
    control: Vec<[f64; 2]>,
}

impl BSplineCurve {
    pub fn new(control: Vec<[f64; 2]>, degree: usize) -> Result<Self> {
        let basis = ClampedBasis::uniform(control.len(), degree)?;
        Ok(Self { basis, control })
    }

    pub fn control(&self) -> &[[f64; 2]] {
        &self.control
    }

    pub fn degree(&self) -> usize {
        self.basis.degree()
    }

    pub fn knots(&self) -> &[f64] {
        self.basis.knots()
    }

    /// Point on the curve at parameter ζ ∈ [0, 1].
    pub fn eval(&self, zeta: f64) -> Result<[f64; 2]> {
        let weights = self.basis.eval(zeta)?;
        let mut p = [0.0, 0.0];
        for (w, c) in weights.iter().zip(&self.control) {
            p[0] += w * c[0];
            p[1] += w * c[1];
        }
        Ok(p)
    }

    pub fn eval_many(&self, zetas: &[f64]) -> Result<Vec<[f64; 2]>> {
        zetas.iter().map(|&z| self.eval(z)).collect()
    }
}

/// Fitted airfoil: upper and lower curves sharing LE/TE control points.
#[derive(Debug, Clone)]
pub struct AirfoilCurve {
    pub upper: BSplineCurve,
    pub lower: BSplineCurve,
}

/// Which surface side of an [`AirfoilCurve`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Upper,
    Lower,
}

impl AirfoilCurve {
    pub fn curve(&self, side: Side) -> &BSplineCurve {
        match side {
            Side::Upper => &self.upper,
            Side::Lower => &self.lower,
        }
    }

    /// Leading-edge control point (shared by both sides).
    pub fn leading_edge(&self) -> [f64; 2] {
        self.upper.control()[0]
    }

    /// Trailing-edge control point of the upper side (equal to the lower
    /// side's when the fit shared it).
    pub fn trailing_edge(&self) -> [f64; 2] {
        *self.upper.control().last().unwrap()
    }

    /// Chord implied by the control polygon.
    pub fn chord(&self) -> f64 {
        self.trailing_edge()[0] - self.leading_edge()[0]
    }

    /// Number of distinct control points across both sides
    /// (LE and TE counted once).
    pub fn n_distinct_control(&self) -> usize {
        self.upper.control().len() + self.lower.control().len() - 2
    }

    pub fn sample(&self, side: Side, zetas: &[f64]) -> Result<Vec<[f64; 2]>> {
        self.curve(side).eval_many(zetas)
    }
}

/// Fit-quality report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitReport {
    /// Root-mean-square geometric distance over all fitted points.
    pub rmse: f64,
    /// Per-point Euclidean residuals: upper points first, then lower.
    pub residuals: Vec<f64>,
    pub zeta_upper: Vec<f64>,
    pub zeta_lower: Vec<f64>,
    /// Condition estimate of the constrained design matrix.
    pub condition: f64,
}

/// Continuity and sizing options for the airfoil fit.
#[derive(Debug, Clone, Copy)]
pub struct FitOptions {
    /// Total distinct control points across both sides (even, >= 8);
    /// each side gets n_ctrl/2 + 1 including the shared LE/TE points.
    pub n_ctrl: usize,
    pub degree: usize,
    /// Share a single trailing-edge control point between the sides (C0).
    pub share_trailing_edge: bool,
    /// Pin the x-coordinate of the two LE-adjacent control points to the
    /// leading-edge control point's x.
    pub pin_le_neighbor_x: bool,
    /// Condition-number limit before the fit is declared ill-conditioned.
    pub cond_limit: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            n_ctrl: 16,
            degree: 3,
            share_trailing_edge: true,
            pin_le_neighbor_x: true,
            cond_limit: 1e12,
        }
    }
}

impl FitOptions {
    /// Control points per side for the shared-endpoint layout.
    pub fn per_side(&self) -> Result<usize> {
        if self.n_ctrl < 8 || self.n_ctrl % 2 != 0 {
            return Err(Error::Config(format!(
                "n_ctrl must be even and >= 8, got {}",
                self.n_ctrl
            )));
        }
        Ok(self.n_ctrl / 2 + 1)
    }
}

/// Chord-length parameterization: ζ proportional to cumulative polyline
/// length, ζ_first = 0, ζ_last = 1. Duplicate consecutive points collapse to
/// equal ζ; an all-identical cloud is a degenerate-geometry error.
pub fn parameterize_points(points: &[[f64; 2]]) -> Result<Vec<f64>> {
    if points.len() < 2 {
        return Err(Error::DegenerateGeometry(format!(
            "need at least 2 points to parameterize, got {}",
            points.len()
        )));
    }
    let mut cumulative = Vec::with_capacity(points.len());
    cumulative.push(0.0);
    let mut total = 0.0;
    for w in points.windows(2) {
        let dx = w[1][0] - w[0][0];
        let dy = w[1][1] - w[0][1];
        total += (dx * dx + dy * dy).sqrt();
        cumulative.push(total);
    }
    if total == 0.0 {
        return Err(Error::DegenerateGeometry("all points coincide".into()));
    }
    let mut zeta: Vec<f64> = cumulative.iter().map(|&c| c / total).collect();
    zeta[points.len() - 1] = 1.0;
    Ok(zeta)
}

/// Unconstrained least-squares fit of a single B-spline curve to points at
/// the given parameter values. Returns the curve, its RMSE, and the design
/// condition estimate.
pub fn fit_curve_lsq(
    points: &[[f64; 2]],
    zeta: &[f64],
    n_ctrl: usize,
    degree: usize,
) -> Result<(BSplineCurve, f64, f64)> {
    if points.len() != zeta.len() {
        return Err(Error::DimensionMismatch {
            context: "curve fit parameter values",
            expected: points.len(),
            got: zeta.len(),
        });
    }
    if points.len() < n_ctrl {
        return Err(Error::Config(format!(
            "need at least {n_ctrl} points for {n_ctrl} control points, got {}",
            points.len()
        )));
    }
    let basis = ClampedBasis::uniform(n_ctrl, degree)?;
    let n = points.len();
    let mut a = DMatrix::zeros(n, n_ctrl);
    let mut bx = DVector::zeros(n);
    let mut by = DVector::zeros(n);
    for (row, (&p, &z)) in points.iter().zip(zeta).enumerate() {
        let w = basis.eval(z)?;
        for (col, &wi) in w.iter().enumerate() {
            a[(row, col)] = wi;
        }
        bx[row] = p[0];
        by[row] = p[1];
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if cond > 1e12 {
        return Err(Error::IllConditionedFit { cond, limit: 1e12 });
    }
    let cx = svd.solve(&bx, 0.0).map_err(|e| Error::Data(e.to_string()))?;
    let cy = svd.solve(&by, 0.0).map_err(|e| Error::Data(e.to_string()))?;
    let control: Vec<[f64; 2]> = (0..n_ctrl).map(|i| [cx[i], cy[i]]).collect();
    let curve = BSplineCurve::new(control, degree)?;
    let mut se = 0.0;
    for (&p, &z) in points.iter().zip(zeta) {
        let q = curve.eval(z)?;
        se += (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2);
    }
    Ok((curve, (se / n as f64).sqrt(), cond))
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
enum VarKey {
    LeadingEdge(usize),
    TrailingEdge(usize),
    Free(u8, usize, usize),
}

/// Resolves (side, control index, axis) to a reduced-variable column,
/// applying the shared-point and pinned-x constraints by variable
/// identification.
struct VarMap {
    per_side: usize,
    share_te: bool,
    pin_le_x: bool,
    slots: HashMap<VarKey, usize>,
    n_slots: usize,
}

impl VarMap {
    fn build(per_side: usize, share_te: bool, pin_le_x: bool) -> Self {
        let mut map = Self { per_side, share_te, pin_le_x, slots: HashMap::new(), n_slots: 0 };
        for side in 0..2u8 {
            for i in 0..per_side {
                for axis in 0..2usize {
                    let key = map.key(side, i, axis);
                    if !map.slots.contains_key(&key) {
                        map.slots.insert(key, map.n_slots);
                        map.n_slots += 1;
                    }
                }
            }
        }
        map
    }

    fn key(&self, side: u8, i: usize, axis: usize) -> VarKey {
        if i == 0 {
            return VarKey::LeadingEdge(axis);
        }
        if i == 1 && axis == 0 && self.pin_le_x {
            return VarKey::LeadingEdge(0);
        }
        if i == self.per_side - 1 && self.share_te {
            return VarKey::TrailingEdge(axis);
        }
        VarKey::Free(side, i, axis)
    }

    fn slot(&self, side: u8, i: usize, axis: usize) -> usize {
        self.slots[&self.key(side, i, axis)]
    }
}

/// Constrained least-squares airfoil fit with explicit parameter values per
/// side. Points must run leading edge -> trailing edge on each side.
pub fn fit_airfoil_with_params(
    upper: &[[f64; 2]],
    zeta_upper: &[f64],
    lower: &[[f64; 2]],
    zeta_lower: &[f64],
    opts: &FitOptions,
) -> Result<(AirfoilCurve, FitReport)> {
    let per_side = opts.per_side()?;
    if upper.len() < per_side || lower.len() < per_side {
        return Err(Error::Config(format!(
            "each side needs at least {per_side} points (upper {}, lower {})",
            upper.len(),
            lower.len()
        )));
    }
    if upper.len() != zeta_upper.len() || lower.len() != zeta_lower.len() {
        return Err(Error::DimensionMismatch {
            context: "airfoil fit parameter values",
            expected: upper.len() + lower.len(),
            got: zeta_upper.len() + zeta_lower.len(),
        });
    }
    let basis = ClampedBasis::uniform(per_side, opts.degree)?;
    let vars = VarMap::build(per_side, opts.share_trailing_edge, opts.pin_le_neighbor_x);

    let n_rows = 2 * (upper.len() + lower.len());
    let mut a = DMatrix::zeros(n_rows, vars.n_slots);
    let mut b = DVector::zeros(n_rows);
    let mut row = 0usize;
    for (side, (pts, zs)) in [(0u8, (upper, zeta_upper)), (1u8, (lower, zeta_lower))] {
        for (&p, &z) in pts.iter().zip(zs) {
            let w = basis.eval(z)?;
            for axis in 0..2 {
                for (i, &wi) in w.iter().enumerate() {
                    a[(row, vars.slot(side, i, axis))] += wi;
                }
                b[row] = p[axis];
                row += 1;
            }
        }
    }

    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if cond > opts.cond_limit {
        return Err(Error::IllConditionedFit { cond, limit: opts.cond_limit });
    }
    let sol = svd.solve(&b, 0.0).map_err(|e| Error::Data(e.to_string()))?;

    let extract = |side: u8| -> Vec<[f64; 2]> {
        (0..per_side)
            .map(|i| [sol[vars.slot(side, i, 0)], sol[vars.slot(side, i, 1)]])
            .collect()
    };
    let curve = AirfoilCurve {
        upper: BSplineCurve::new(extract(0), opts.degree)?,
        lower: BSplineCurve::new(extract(1), opts.degree)?,
    };

    let mut residuals = Vec::with_capacity(upper.len() + lower.len());
    let mut se = 0.0;
    for (side, (pts, zs)) in
        [(Side::Upper, (upper, zeta_upper)), (Side::Lower, (lower, zeta_lower))]
    {
        for (&p, &z) in pts.iter().zip(zs) {
            let q = curve.curve(side).eval(z)?;
            let d = ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt();
            se += d * d;
            residuals.push(d);
        }
    }
    let rmse = (se / residuals.len() as f64).sqrt();
    let report = FitReport {
        rmse,
        residuals,
        zeta_upper: zeta_upper.to_vec(),
        zeta_lower: zeta_lower.to_vec(),
        condition: cond,
    };
    Ok((curve, report))
}

/// Orients a side leading edge first (ascending x overall).
fn orient_le_first(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    if points.first().map(|p| p[0]) > points.last().map(|p| p[0]) {
        points.iter().rev().copied().collect()
    } else {
        points.to_vec()
    }
}

/// Constrained airfoil fit with chord-length parameterization of each side.
/// Sides may run in either direction; they are oriented LE-first before
/// fitting.
pub fn fit_airfoil(
    upper: &[[f64; 2]],
    lower: &[[f64; 2]],
    opts: &FitOptions,
) -> Result<(AirfoilCurve, FitReport)> {
    let upper = orient_le_first(upper);
    let lower = orient_le_first(lower);
    let zu = parameterize_points(&upper)?;
    let zl = parameterize_points(&lower)?;
    fit_airfoil_with_params(&upper, &zu, &lower, &zl, opts)
}

/// Feature layout for [`geometry_features`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureLayout {
    /// y-coordinates only, chord units: length = distinct control points.
    YOnly,
    /// Interleaved (x, y), chord-normalized: twice that length.
    XyFlat,
}

/// Chord-normalized control-point features in a fixed order: the upper
/// side's control points LE -> TE, then the lower side's interior control
/// points (the shared LE/TE appear once). x is measured from the LE control
/// point in chord units; y is in chord units.
pub fn geometry_features(curve: &AirfoilCurve, layout: FeatureLayout) -> Vec<f64> {
    let chord = curve.chord();
    let scale = if chord > 0.0 { chord } else { 1.0 };
    let x0 = curve.leading_edge()[0];
    let m = curve.upper.control().len();
    let points = curve
        .upper
        .control()
        .iter()
        .chain(curve.lower.control()[1..m - 1].iter());
    let mut out = Vec::new();
    for p in points {
        match layout {
            FeatureLayout::YOnly => out.push(p[1] / scale),
            FeatureLayout::XyFlat => {
                out.push((p[0] - x0) / scale);
                out.push(p[1] / scale);
            }
        }
    }
    out
}

/// Splits a raw surface point cloud into upper/lower sides by the sign of y
/// (y >= 0 is upper), sorts each by x, and makes sure both sides span the
/// full chord by sharing the extreme-x points.
pub fn split_surface(points: &[[f64; 2]]) -> Result<(Vec<[f64; 2]>, Vec<[f64; 2]>)> {
    if points.len() < 4 {
        return Err(Error::DegenerateGeometry(format!(
            "need at least 4 surface points to split, got {}",
            points.len()
        )));
    }
    let mut upper: Vec<[f64; 2]> = points.iter().filter(|p| p[1] >= 0.0).copied().collect();
    let mut lower: Vec<[f64; 2]> = points.iter().filter(|p| p[1] < 0.0).copied().collect();
    upper.sort_by(|a, b| a[0].total_cmp(&b[0]));
    lower.sort_by(|a, b| a[0].total_cmp(&b[0]));
    let le = *points
        .iter()
        .min_by(|a, b| a[0].total_cmp(&b[0]))
        .unwrap();
    let te = *points
        .iter()
        .max_by(|a, b| a[0].total_cmp(&b[0]))
        .unwrap();
    for side in [&mut upper, &mut lower] {
        if side.first().map(|p| p[0] > le[0]).unwrap_or(true) {
            side.insert(0, le);
        }
        if side.last().map(|p| p[0] < te[0]).unwrap_or(true) {
            side.push(te);
        }
    }
    if upper.len() < 2 || lower.len() < 2 {
        return Err(Error::DegenerateGeometry("one surface side has fewer than 2 points".into()));
    }
    Ok((upper, lower))
}

/// Serializable form of a fitted airfoil (control points + knots).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CurveFile {
    pub degree: usize,
    pub upper_control: Vec<[f64; 2]>,
    pub lower_control: Vec<[f64; 2]>,
    pub knots: Vec<f64>,
}

impl CurveFile {
    pub fn from_curve(curve: &AirfoilCurve) -> Self {
        Self {
            degree: curve.upper.degree(),
            upper_control: curve.upper.control().to_vec(),
            lower_control: curve.lower.control().to_vec(),
            knots: curve.upper.knots().to_vec(),
        }
    }

    pub fn to_curve(&self) -> Result<AirfoilCurve> {
        Ok(AirfoilCurve {
            upper: BSplineCurve::new(self.upper_control.clone(), self.degree)?,
            lower: BSplineCurve::new(self.lower_control.clone(), self.degree)?,
        })
    }
}
