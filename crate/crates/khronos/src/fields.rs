//! Field post-processing: far-field band construction, freestream-state
//! inference, dimensional pressure and Cp reconstruction, Reynolds number,
//! min-max normalization, and station interpolation.
//!
//! The reduced (kinematic) pressure carried by the flow solution is defined
//! only up to an additive constant, so a dimensional surface pressure is
//! recovered by aligning the mean over a far-field band with a prescribed
//! ambient pressure.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Standard air density, kg/m^3.
pub const RHO_AIR: f64 = 1.225;
/// Ambient pressure, Pa.
pub const P_AMBIENT: f64 = 101_325.0;
/// Dynamic viscosity of air, Pa*s.
pub const MU_AIR: f64 = 1.81e-5;

/// One interior flow sample: position, reduced pressure, velocity.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct InternalPoint {
    pub x: f64,
    pub y: f64,
    pub p_bar: f64,
    pub u: f64,
    pub v: f64,
}

/// A single airfoil flow case: surface geometry, optional interior samples,
/// operating conditions, and fluid constants.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AirfoilCase {
    pub surface: Vec<[f64; 2]>,
    #[serde(default)]
    pub internal: Vec<InternalPoint>,
    /// Freestream speed from case metadata, m/s.
    pub freestream_speed: f64,
    /// Angle of attack, degrees.
    pub aoa_deg: f64,
    #[serde(default)]
    pub surface_p_bar: Option<Vec<f64>>,
    #[serde(default)]
    pub surface_cp: Option<Vec<f64>>,
    pub rho: f64,
    pub p_ambient: f64,
    pub mu: f64,
}

impl AirfoilCase {
    pub fn new(surface: Vec<[f64; 2]>, freestream_speed: f64, aoa_deg: f64) -> Self {
        Self {
            surface,
            internal: Vec::new(),
            freestream_speed,
            aoa_deg,
            surface_p_bar: None,
            surface_cp: None,
            rho: RHO_AIR,
            p_ambient: P_AMBIENT,
            mu: MU_AIR,
        }
    }

    /// Chord length: streamwise extent of the surface.
    pub fn chord(&self) -> f64 {
        let (min, max) = self
            .surface
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                (lo.min(p[0]), hi.max(p[0]))
            });
        max - min
    }

    /// Midpoint of the surface bounding box.
    pub fn center(&self) -> [f64; 2] {
        let mut xlo = f64::INFINITY;
        let mut xhi = f64::NEG_INFINITY;
        let mut ylo = f64::INFINITY;
        let mut yhi = f64::NEG_INFINITY;
        for p in &self.surface {
            xlo = xlo.min(p[0]);
            xhi = xhi.max(p[0]);
            ylo = ylo.min(p[1]);
            yhi = yhi.max(p[1]);
        }
        [0.5 * (xlo + xhi), 0.5 * (ylo + yhi)]
    }
}

/// Freestream reference inferred from a far-field band.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FreestreamState {
    /// Mean reduced pressure over the band, m^2/s^2.
    pub p_bar_inf: f64,
    /// Mean flow speed over the band, m/s.
    pub u_inf: f64,
    /// Indices into the case's internal points.
    pub band: Vec<usize>,
}

/// Band-selection knobs.
#[derive(Debug, Clone, Copy)]
pub struct BandOptions {
    /// Minimum clearance beyond the outermost surface point, in chords.
    pub margin_fraction: f64,
    /// Radii above this quantile of the candidate set are discarded.
    pub outlier_quantile: f64,
    /// Minimum band size after filtering.
    pub min_points: usize,
}

impl Default for BandOptions {
    fn default() -> Self {
        Self { margin_fraction: 0.5, outlier_quantile: 0.99, min_points: 100 }
    }
}

/// Linear-interpolation quantile of an ascending-sorted slice.
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = q.clamp(0.0, 1.0) * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Selects the far-field band: interior points whose distance from the
/// geometric center exceeds the outermost surface radius by at least
/// `margin_fraction` chords, with extreme radii above the outlier quantile
/// discarded.
pub fn farfield_band(case: &AirfoilCase, opts: &BandOptions) -> Result<Vec<usize>> {
    if case.internal.is_empty() {
        return Err(Error::InsufficientFarfield { found: 0, required: opts.min_points });
    }
    let center = case.center();
    let chord = case.chord();
    let r_surf_max = case
        .surface
        .iter()
        .map(|p| ((p[0] - center[0]).powi(2) + (p[1] - center[1]).powi(2)).sqrt())
        .fold(0.0f64, f64::max);
    let r_min = r_surf_max + opts.margin_fraction * chord;

    let mut candidates: Vec<(usize, f64)> = Vec::new();
    for (idx, pt) in case.internal.iter().enumerate() {
        let r = ((pt.x - center[0]).powi(2) + (pt.y - center[1]).powi(2)).sqrt();
        if r >= r_min {
            candidates.push((idx, r));
        }
    }
    if candidates.is_empty() {
        return Err(Error::InsufficientFarfield { found: 0, required: opts.min_points });
    }
    let mut radii: Vec<f64> = candidates.iter().map(|&(_, r)| r).collect();
    radii.sort_by(|a, b| a.total_cmp(b));
    let r_cut = quantile_sorted(&radii, opts.outlier_quantile);
    let band: Vec<usize> = candidates
        .iter()
        .filter(|&&(_, r)| r <= r_cut)
        .map(|&(idx, _)| idx)
        .collect();
    if band.len() < opts.min_points {
        return Err(Error::InsufficientFarfield { found: band.len(), required: opts.min_points });
    }
    Ok(band)
}

/// Arithmetic means of reduced pressure and flow speed over the band.
pub fn freestream_state(case: &AirfoilCase, band: &[usize]) -> Result<FreestreamState> {
    if band.is_empty() {
        return Err(Error::InsufficientFarfield { found: 0, required: 1 });
    }
    let mut p_sum = 0.0;
    let mut u_sum = 0.0;
    for &idx in band {
        let pt = &case.internal[idx];
        p_sum += pt.p_bar;
        u_sum += (pt.u * pt.u + pt.v * pt.v).sqrt();
    }
    let n = band.len() as f64;
    Ok(FreestreamState { p_bar_inf: p_sum / n, u_inf: u_sum / n, band: band.to_vec() })
}

/// Band selection followed by freestream estimation.
pub fn infer_freestream(case: &AirfoilCase, opts: &BandOptions) -> Result<FreestreamState> {
    let band = farfield_band(case, opts)?;
    freestream_state(case, &band)
}

/// Dimensional pressure from reduced pressure:
/// `p = P_inf + rho * (p_bar - p_bar_inf)`.
pub fn reconstruct_pressure(p_bar: &[f64], fs: &FreestreamState, rho: f64, p_ambient: f64) -> Vec<f64> {
    p_bar.iter().map(|&pb| p_ambient + rho * (pb - fs.p_bar_inf)).collect()
}

/// Pressure coefficient: `Cp = (p - P_inf) / (rho U_inf^2 / 2)`.
pub fn cp_from_pressure(p: &[f64], fs: &FreestreamState, rho: f64, p_ambient: f64) -> Result<Vec<f64>> {
    if fs.u_inf <= 0.0 {
        return Err(Error::Domain(format!(
            "freestream speed must be positive for Cp, got {}",
            fs.u_inf
        )));
    }
    let q = 0.5 * rho * fs.u_inf * fs.u_inf;
    Ok(p.iter().map(|&pi| (pi - p_ambient) / q).collect())
}

/// Cp from boundary-layer edge speed ratios: `Cp = 1 - (u_e/u_inf)^2`.
pub fn cp_from_edge_velocity(ratios: &[f64]) -> Vec<f64> {
    ratios.iter().map(|&r| 1.0 - r * r).collect()
}

/// Chord Reynolds number `Re = rho U c / mu`.
pub fn reynolds(case: &AirfoilCase) -> f64 {
    case.rho * case.freestream_speed * case.chord() / case.mu
}

/// Per-feature min-max statistics, fitted on training data only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    mins: Vec<f64>,
    maxs: Vec<f64>,
}

impl NormStats {
    /// Pass-through statistics mapping [0, 1] to itself.
    pub fn identity(dim: usize) -> Self {
        Self { mins: vec![0.0; dim], maxs: vec![1.0; dim] }
    }

    pub fn from_bounds(mins: Vec<f64>, maxs: Vec<f64>) -> Result<Self> {
        if mins.len() != maxs.len() {
            return Err(Error::DimensionMismatch {
                context: "norm stats bounds",
                expected: mins.len(),
                got: maxs.len(),
            });
        }
        if mins.iter().zip(&maxs).any(|(lo, hi)| hi < lo) {
            return Err(Error::Data("norm stats require max >= min per feature".into()));
        }
        Ok(Self { mins, maxs })
    }

    /// Fits per-feature minima and maxima over the given rows.
    pub fn fit<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let first = rows.first().ok_or_else(|| Error::Data("cannot fit norm stats on empty data".into()))?;
        let dim = first.as_ref().len();
        let mut mins = vec![f64::INFINITY; dim];
        let mut maxs = vec![f64::NEG_INFINITY; dim];
        for row in rows {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    context: "norm stats fit",
                    expected: dim,
                    got: row.len(),
                });
            }
            for (f, &v) in row.iter().enumerate() {
                mins[f] = mins[f].min(v);
                maxs[f] = maxs[f].max(v);
            }
        }
        Ok(Self { mins, maxs })
    }

    pub fn dim(&self) -> usize {
        self.mins.len()
    }

    pub fn mins(&self) -> &[f64] {
        &self.mins
    }

    pub fn maxs(&self) -> &[f64] {
        &self.maxs
    }

    /// `(x - min) / (max - min)`; constant features map to 0.5.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                context: "norm stats apply",
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(x.iter()
            .enumerate()
            .map(|(f, &v)| {
                let span = self.maxs[f] - self.mins[f];
                if span == 0.0 {
                    0.5
                } else {
                    (v - self.mins[f]) / span
                }
            })
            .collect())
    }

    pub fn apply_rows<R: AsRef<[f64]>>(&self, rows: &[R]) -> Result<Vec<Vec<f64>>> {
        rows.iter().map(|r| self.apply(r.as_ref())).collect()
    }

    /// Inverse transform; constant features return their stored value.
    pub fn invert(&self, xn: &[f64]) -> Vec<f64> {
        xn.iter()
            .enumerate()
            .map(|(f, &v)| {
                let span = self.maxs[f] - self.mins[f];
                if span == 0.0 {
                    self.mins[f]
                } else {
                    self.mins[f] + v * span
                }
            })
            .collect()
    }
}

/// Piecewise-linear interpolation with clamped extrapolation at the ends.
/// Source positions must be strictly increasing.
pub fn interpolate_to_stations(src_pos: &[f64], src_val: &[f64], targets: &[f64]) -> Result<Vec<f64>> {
    if src_pos.len() < 2 {
        return Err(Error::TooFewStations(src_pos.len()));
    }
    if src_pos.len() != src_val.len() {
        return Err(Error::DimensionMismatch {
            context: "interpolation source",
            expected: src_pos.len(),
            got: src_val.len(),
        });
    }
    if src_pos.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Data("interpolation source positions must be strictly increasing".into()));
    }
    let out = targets
        .iter()
        .map(|&t| {
            if t <= src_pos[0] {
                src_val[0]
            } else if t >= src_pos[src_pos.len() - 1] {
                src_val[src_val.len() - 1]
            } else {
                let hi = src_pos.partition_point(|&p| p <= t);
                let lo = hi - 1;
                let w = (t - src_pos[lo]) / (src_pos[hi] - src_pos[lo]);
                src_val[lo] + w * (src_val[hi] - src_val[lo])
            }
        })
        .collect();
    Ok(out)
}

/// One surface sample with a value attached, used when interpolating a field
/// between station sets split by surface side.
#[derive(Debug, Clone, Copy)]
pub struct SurfaceSample {
    pub x: f64,
    pub y: f64,
    pub value: f64,
}

/// Interpolates per surface side: samples are split into upper/lower by the
/// sign of y (y >= 0 is upper), sorted by x, and each target is interpolated
/// against its own side.
pub fn interpolate_surface(samples: &[SurfaceSample], targets: &[SurfaceSample]) -> Result<Vec<f64>> {
    let side = |s: &SurfaceSample| s.y >= 0.0;
    let mut out = Vec::with_capacity(targets.len());
    for upper in [true, false] {
        let mut src: Vec<&SurfaceSample> = samples.iter().filter(|s| side(s) == upper).collect();
        src.sort_by(|a, b| a.x.total_cmp(&b.x));
        src.dedup_by(|a, b| a.x == b.x);
        let pos: Vec<f64> = src.iter().map(|s| s.x).collect();
        let val: Vec<f64> = src.iter().map(|s| s.value).collect();
        let tgt: Vec<f64> = targets.iter().filter(|t| side(t) == upper).map(|t| t.x).collect();
        if tgt.is_empty() {
            continue;
        }
        let vals = interpolate_to_stations(&pos, &val, &tgt)?;
        out.extend(vals);
    }
    // Reassemble in target order.
    let mut upper_iter = 0usize;
    let n_upper = targets.iter().filter(|t| side(t)).count();
    let mut lower_iter = n_upper;
    let mut ordered = Vec::with_capacity(targets.len());
    for t in targets {
        if side(t) {
            ordered.push(out[upper_iter]);
            upper_iter += 1;
        } else {
            ordered.push(out[lower_iter]);
            lower_iter += 1;
        }
    }
    Ok(ordered)
}

/// Parses `(U, AoA)` from a case filename of the form
/// `<name>_U<speed>_AOA<angle>.csv` (keys case-insensitive, extension
/// optional).
pub fn parse_meta_from_filename(name: &str) -> Option<(f64, f64)> {
    let stem = name.rsplit('/').next()?.trim_end_matches(".csv");
    let mut u = None;
    let mut aoa = None;
    for token in stem.split('_') {
        let lower = token.to_ascii_lowercase();
        if let Some(rest) = lower.strip_prefix("aoa") {
            aoa = rest.parse::<f64>().ok();
        } else if let Some(rest) = lower.strip_prefix("u") {
            if let Ok(v) = rest.parse::<f64>() {
                u = Some(v);
            }
        }
    }
    match (u, aoa) {
        (Some(u), Some(a)) => Some((u, a)),
        _ => None,
    }
}

/// Reads a per-case surface CSV with header columns `x,y,p,Cp`.
pub fn read_case_csv(path: &Path) -> Result<(Vec<[f64; 2]>, Vec<f64>, Vec<f64>)> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let headers = reader.headers()?.clone();
    let col = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::Data(format!("missing column {name:?} in {}", path.display())))
    };
    let (cx, cy, cp_col, ccp) = (col("x")?, col("y")?, col("p")?, col("Cp")?);
    let mut pts = Vec::new();
    let mut p = Vec::new();
    let mut cp = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let line = (i + 2) as u64;
        let field = |c: usize| -> Result<f64> {
            record
                .get(c)
                .ok_or_else(|| Error::Parse { line, msg: "short record".into() })?
                .parse::<f64>()
                .map_err(|e| Error::Parse { line, msg: e.to_string() })
        };
        pts.push([field(cx)?, field(cy)?]);
        p.push(field(cp_col)?);
        cp.push(field(ccp)?);
    }
    Ok((pts, p, cp))
}

/// A processed case ready for surrogate consumption.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProcessedCase {
    pub freestream_speed: f64,
    pub aoa_deg: f64,
    pub chord: f64,
    pub reynolds: f64,
    pub surface: Vec<[f64; 2]>,
    pub cp: Vec<f64>,
}

pub fn write_processed_case(path: &Path, case: &ProcessedCase) -> Result<()> {
    let file = std::fs::File::create(path)?;
    serde_json::to_writer_pretty(std::io::BufWriter::new(file), case)?;
    Ok(())
}
