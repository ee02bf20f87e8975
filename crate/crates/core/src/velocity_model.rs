//! Layered wave-speed profiles c(z), their slowness structure, and the
//! slowness distribution function.
//!
//! A profile is a monotone-preserving cubic Hermite interpolant through
//! strictly positive speed samples on [0, h]. The interpolation keeps
//! evaluations inside the sampled speed range, which prevents spurious
//! low-velocity zones from overshoot.

use crate::error::{Error, Result};
use crate::interp::CubicHermite;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Smooth layered wave speed c(z) on [0, h].
#[derive(Debug, Clone)]
pub struct VelocityProfile {
    h: f64,
    spline: CubicHermite,
}

#[derive(Serialize, Deserialize)]
struct ProfileJson {
    h: f64,
    knots: Vec<KnotJson>,
}

#[derive(Serialize, Deserialize)]
struct KnotJson {
    z: f64,
    c: f64,
}

impl VelocityProfile {
    /// Build from (depth, speed) knots covering [0, h] with monotone
    /// Hermite tangents.
    pub fn from_knots(knots: &[(f64, f64)]) -> Result<Self> {
        let z: Vec<f64> = knots.iter().map(|k| k.0).collect();
        let c: Vec<f64> = knots.iter().map(|k| k.1).collect();
        Self::validate_knots(&z, &c)?;
        let spline = CubicHermite::pchip(z, c)?;
        let h = spline.domain().1;
        Ok(VelocityProfile { h, spline })
    }

    /// Build from explicit Hermite data (values and tangents per knot).
    pub fn from_hermite_parts(z: Vec<f64>, c: Vec<f64>, tangents: Vec<f64>) -> Result<Self> {
        Self::validate_knots(&z, &c)?;
        let spline = CubicHermite::with_tangents(z, c, tangents)?;
        let h = spline.domain().1;
        Ok(VelocityProfile { h, spline })
    }

    /// Sample a function on a uniform grid of `n` knots.
    pub fn from_function<F: Fn(f64) -> f64>(h: f64, n: usize, f: F) -> Result<Self> {
        if !(h > 0.0) || n < 2 {
            return Err(Error::Domain("need h > 0 and at least two knots".into()));
        }
        let knots: Vec<(f64, f64)> = (0..n)
            .map(|i| {
                let z = h * i as f64 / (n - 1) as f64;
                (z, f(z))
            })
            .collect();
        Self::from_knots(&knots)
    }

    fn validate_knots(z: &[f64], c: &[f64]) -> Result<()> {
        if z.len() < 2 {
            return Err(Error::Domain("profile needs at least two knots".into()));
        }
        if z[0] != 0.0 {
            return Err(Error::Domain(format!(
                "first knot depth must be 0, got {}",
                z[0]
            )));
        }
        for i in 1..z.len() {
            if !(z[i] > z[i - 1]) {
                return Err(Error::Domain(format!(
                    "knot depths must be strictly ascending; violation at index {i}"
                )));
            }
        }
        for (i, &ci) in c.iter().enumerate() {
            if !(ci > 0.0) || !ci.is_finite() {
                return Err(Error::Domain(format!(
                    "speeds must be strictly positive and finite; violation at index {i} (c = {ci})"
                )));
            }
        }
        Ok(())
    }

    pub fn depth_extent(&self) -> f64 {
        self.h
    }

    pub fn surface_speed(&self) -> f64 {
        self.spline.values()[0]
    }

    /// Interpolated speed; exact at knots. Depths outside [0, h] are
    /// rejected.
    pub fn eval_speed(&self, z: f64) -> Result<f64> {
        if !(0.0..=self.h).contains(&z) {
            return Err(Error::Domain(format!("depth {z} outside [0, {}]", self.h)));
        }
        Ok(self.spline.value(z))
    }

    /// Speed with the depth clamped into [0, h]; for internal quadrature
    /// nodes that may land epsilon outside from substitutions.
    pub(crate) fn speed_clamped(&self, z: f64) -> f64 {
        self.spline.value(z.clamp(0.0, self.h))
    }

    /// dc/dz of the interpolant (continuous across knots).
    pub fn speed_derivative(&self, z: f64) -> Result<f64> {
        if !(0.0..=self.h).contains(&z) {
            return Err(Error::Domain(format!("depth {z} outside [0, {}]", self.h)));
        }
        Ok(self.spline.derivative(z))
    }

    pub(crate) fn derivative_clamped(&self, z: f64) -> f64 {
        self.spline.derivative(z.clamp(0.0, self.h))
    }

    pub fn knot_depths(&self) -> &[f64] {
        self.spline.knots()
    }

    pub fn knot_speeds(&self) -> &[f64] {
        self.spline.values()
    }

    pub(crate) fn spline(&self) -> &CubicHermite {
        &self.spline
    }

    /// (min c, max c) over [0, h], found per segment from the cubic's
    /// stationary points.
    pub fn speed_extrema(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let z = self.spline.knots();
        for i in 0..self.spline.segment_count() {
            for u in self.segment_breakpoints(i) {
                let v = self.spline.value(z[i] + u);
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        (lo, hi)
    }

    /// (p_min, p_max) = (1 / max c, 1 / min c).
    pub fn slowness_extrema(&self) -> (f64, f64) {
        let (cmin, cmax) = self.speed_extrema();
        (1.0 / cmax, 1.0 / cmin)
    }

    /// Speed extrema restricted to [0, z_max].
    pub(crate) fn speed_extrema_to(&self, z_max: f64) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let z = self.spline.knots();
        for i in 0..self.spline.segment_count() {
            if z[i] >= z_max {
                break;
            }
            for u in self.segment_breakpoints(i) {
                let zu = (z[i] + u).min(z_max);
                let v = self.spline.value(zu);
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        let v = self.spline.value(z_max.min(self.h));
        (lo.min(v), hi.max(v))
    }

    /// Stationary points and endpoints of segment i, as offsets from the
    /// left knot (sorted, including 0 and the segment width).
    fn segment_breakpoints(&self, i: usize) -> Vec<f64> {
        let z = self.spline.knots();
        let width = z[i + 1] - z[i];
        let [_, c1, c2, c3] = self.spline.segment_coefficients(i);
        let mut pts = vec![0.0, width];
        // roots of 3 c3 u^2 + 2 c2 u + c1 = 0
        if c3 != 0.0 {
            let disc = 4.0 * c2 * c2 - 12.0 * c3 * c1;
            if disc >= 0.0 {
                let sq = disc.sqrt();
                for r in [(-2.0 * c2 - sq) / (6.0 * c3), (-2.0 * c2 + sq) / (6.0 * c3)] {
                    if r > 0.0 && r < width {
                        pts.push(r);
                    }
                }
            }
        } else if c2 != 0.0 {
            let r = -c1 / (2.0 * c2);
            if r > 0.0 && r < width {
                pts.push(r);
            }
        }
        pts.sort_by(f64::total_cmp);
        pts
    }

    /// All solutions of c(z) = level in [0, z_max], ascending.
    pub(crate) fn speed_level_crossings(&self, level: f64, z_max: f64) -> Vec<f64> {
        let mut roots = Vec::new();
        let z = self.spline.knots();
        for i in 0..self.spline.segment_count() {
            if z[i] > z_max {
                break;
            }
            let pts = self.segment_breakpoints(i);
            for w in pts.windows(2) {
                let (ua, ub) = (w[0], w[1]);
                let za = z[i] + ua;
                let zb = (z[i] + ub).min(z_max);
                if zb <= za {
                    continue;
                }
                let fa = self.spline.value(za) - level;
                let fb = self.spline.value(zb) - level;
                if fa == 0.0 {
                    push_root(&mut roots, za);
                    continue;
                }
                if fb == 0.0 {
                    // picked up as the start of the next piece unless last
                    if zb == z_max || ub == *pts.last().unwrap() {
                        push_root(&mut roots, zb);
                    }
                    continue;
                }
                if fa * fb < 0.0 {
                    let r = bisect(|t| self.spline.value(t) - level, za, zb);
                    push_root(&mut roots, r);
                }
            }
        }
        roots
    }

    /// Smallest z with c(z) = 1/p, refined to near machine precision;
    /// None when the level is never attained on [0, h].
    pub fn turning_depth(&self, p: f64) -> Option<f64> {
        if !(p > 0.0) || !p.is_finite() {
            return None;
        }
        let level = 1.0 / p;
        let roots = self.speed_level_crossings(level, self.h);
        roots.first().copied()
    }

    /// Maximal intervals on which the interpolant is exactly constant.
    pub(crate) fn constant_runs(&self) -> Vec<(f64, f64, f64)> {
        let z = self.spline.knots();
        let mut runs: Vec<(f64, f64, f64)> = Vec::new();
        for i in 0..self.spline.segment_count() {
            let [c0, c1, c2, c3] = self.spline.segment_coefficients(i);
            if c1 == 0.0 && c2 == 0.0 && c3 == 0.0 {
                match runs.last_mut() {
                    Some(last) if last.1 == z[i] && last.2 == c0 => last.1 = z[i + 1],
                    _ => runs.push((z[i], z[i + 1], c0)),
                }
            }
        }
        runs
    }

    pub fn to_json_string(&self) -> Result<String> {
        let doc = ProfileJson {
            h: self.h,
            knots: self
                .spline
                .knots()
                .iter()
                .zip(self.spline.values())
                .map(|(&z, &c)| KnotJson { z, c })
                .collect(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let doc: ProfileJson = serde_json::from_str(s)?;
        if !(doc.h > 0.0) {
            return Err(Error::Domain(format!("h must be positive, got {}", doc.h)));
        }
        let knots: Vec<(f64, f64)> = doc.knots.iter().map(|k| (k.z, k.c)).collect();
        let profile = Self::from_knots(&knots)?;
        if (profile.h - doc.h).abs() > 1e-12 * doc.h.abs() {
            return Err(Error::Domain(format!(
                "last knot depth {} does not match h = {}",
                profile.h, doc.h
            )));
        }
        Ok(profile)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path)?;
        Self::from_json_str(&s)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json_string()?)?;
        Ok(())
    }
}

fn push_root(roots: &mut Vec<f64>, r: f64) {
    if roots
        .last()
        .map_or(true, |&last| r > last + 1e-14 * (1.0 + r.abs()))
    {
        roots.push(r);
    }
}

fn bisect<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> f64 {
    let mut fa = f(a);
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fa > 0.0) == (fm > 0.0) {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}

/// Slowness distribution function on a grid: density F(q; p) and its
/// cumulative (layer-cake) form G(q; p).
#[derive(Debug, Clone)]
pub struct SdfDensity {
    /// Reference horizontal slowness.
    pub p: f64,
    /// Slowness grid.
    pub q: Vec<f64>,
    /// Density values; `f64::INFINITY` marks concentration points where
    /// only the cumulative is meaningful.
    pub density: Vec<f64>,
    /// Cumulative G(q; p) = measure of { z <= Z(p) : 1/c(z) <= q }.
    pub cumulative: Vec<f64>,
    /// Depth limit actually used: Z(p) when a turning point exists, h
    /// otherwise.
    pub depth_limit: f64,
}

/// Density value F(q; p) at a single q: sum over roots of 1/c(z) = q up
/// to `z_limit` of c^2 / |c'|, infinite at critical points.
pub(crate) fn sdf_density_at(profile: &VelocityProfile, q: f64, z_limit: f64) -> f64 {
    let level = 1.0 / q;
    // exact constant runs at this level produce an atom
    for (a, b, v) in profile.constant_runs() {
        if v == level && a < z_limit.min(b) {
            return f64::INFINITY;
        }
    }
    let mut total = 0.0;
    for z in profile.speed_level_crossings(level, z_limit) {
        let c = profile.speed_clamped(z);
        let dc = profile.derivative_clamped(z);
        if dc == 0.0 {
            return f64::INFINITY;
        }
        // |d(1/c)/dz| = |c'| / c^2
        total += c * c / dc.abs();
    }
    total
}

/// Measure of the sublevel set { z in [0, z_limit] : 1/c(z) <= q }.
pub(crate) fn sublevel_measure(profile: &VelocityProfile, q: f64, z_limit: f64) -> f64 {
    let level = 1.0 / q;
    let mut cuts = vec![0.0];
    cuts.extend(profile.speed_level_crossings(level, z_limit));
    cuts.push(z_limit);
    cuts.sort_by(f64::total_cmp);
    let mut measure = 0.0;
    for w in cuts.windows(2) {
        if w[1] <= w[0] {
            continue;
        }
        let mid = 0.5 * (w[0] + w[1]);
        if profile.speed_clamped(mid) >= level {
            measure += w[1] - w[0];
        }
    }
    measure
}

/// Slowness distribution function of `profile` at reference slowness `p`
/// on the given q grid. The grid must lie within the physical slowness
/// range [p_min, p_max].
pub fn sdf(profile: &VelocityProfile, p: f64, q_grid: &[f64]) -> Result<SdfDensity> {
    let (p_lo, p_hi) = profile.slowness_extrema();
    let slack = 1e-12 * p_hi;
    for &q in q_grid {
        if q < p_lo - slack || q > p_hi + slack {
            return Err(Error::Domain(format!(
                "q = {q} outside physical slowness range [{p_lo}, {p_hi}]"
            )));
        }
    }
    let depth_limit = profile.turning_depth(p).unwrap_or(profile.depth_extent());
    let density: Vec<f64> = q_grid
        .iter()
        .map(|&q| sdf_density_at(profile, q, depth_limit))
        .collect();
    let cumulative: Vec<f64> = q_grid
        .iter()
        .map(|&q| sublevel_measure(profile, q, depth_limit))
        .collect();
    Ok(SdfDensity {
        p,
        q: q_grid.to_vec(),
        density,
        cumulative,
        depth_limit,
    })
}

/// Default junction blend width, as a fraction of the depth extent.
pub const DEFAULT_BLEND_FRACTION: f64 = 1e-2;

/// Rearrange contiguous blocks of the profile and smooth the junctions
/// with a C1 blend of the adjacent pieces over `blend_width`
/// (`DEFAULT_BLEND_FRACTION * h` is the conventional choice).
///
/// `blocks` must tile [0, L] for some L <= h; `order` is a permutation of
/// the block indices. Material beyond L is left in place. The rearranged
/// profile has the same slowness distribution as the original up to the
/// blend zones.
pub fn rearrange_profile(
    profile: &VelocityProfile,
    blocks: &[(f64, f64)],
    order: &[usize],
    blend_width: f64,
) -> Result<VelocityProfile> {
    let h = profile.depth_extent();
    if blocks.is_empty() {
        return Err(Error::Domain("no blocks given".into()));
    }
    if order.len() != blocks.len() {
        return Err(Error::Domain(
            "order must list every block exactly once".into(),
        ));
    }
    let mut seen = vec![false; blocks.len()];
    for &k in order {
        if k >= blocks.len() || seen[k] {
            return Err(Error::Domain(
                "order is not a permutation of the blocks".into(),
            ));
        }
        seen[k] = true;
    }
    let tol = 1e-9 * h;
    if blocks[0].0.abs() > tol {
        return Err(Error::Domain("blocks must start at depth 0".into()));
    }
    for (i, &(a, b)) in blocks.iter().enumerate() {
        if !(b > a) {
            return Err(Error::Domain(format!("block {i} is empty or reversed")));
        }
        if i > 0 && (a - blocks[i - 1].1).abs() > tol {
            return Err(Error::Domain(format!(
                "blocks must be contiguous; gap or overlap before block {i}"
            )));
        }
    }
    let rearranged_end = blocks.last().unwrap().1;
    if rearranged_end > h + tol {
        return Err(Error::Domain(
            "blocks extend beyond the profile depth".into(),
        ));
    }
    if !(blend_width > 0.0) {
        return Err(Error::Domain("blend width must be positive".into()));
    }

    // target placement: (target start, source start, length)
    let mut placements = Vec::with_capacity(order.len());
    let mut offset = 0.0;
    for &k in order {
        let (a, b) = blocks[k];
        placements.push((offset, a, b - a));
        offset += b - a;
    }

    // map target depth -> source depth
    let source_of = |z: f64| -> f64 {
        for &(t0, s0, len) in &placements {
            if z <= t0 + len {
                return s0 + (z - t0);
            }
        }
        z // tail beyond the rearranged region is untouched
    };

    // junction positions between consecutive placed blocks; junctions
    // where the pieces already join C1 need no smoothing and are spliced
    // exactly
    let mut junctions = Vec::new();
    {
        let mut candidates = Vec::new();
        let mut acc = 0.0;
        for &k in &order[..order.len() - 1] {
            acc += blocks[k].1 - blocks[k].0;
            candidates.push(acc);
        }
        if rearranged_end < h - tol {
            candidates.push(rearranged_end);
        }
        let (cmin, cmax) = profile.speed_extrema();
        let vscale = cmax.max(cmin.abs());
        for j in candidates {
            let eps = 1e-12 * h.max(1.0);
            let zl = {
                let mut s = 0.0;
                for &(t0, s0, len) in &placements {
                    if j - eps <= t0 + len {
                        s = s0 + (j - eps - t0);
                        break;
                    }
                }
                s
            };
            let zr = if j + eps > rearranged_end {
                j + eps
            } else {
                let mut s = 0.0;
                for &(t0, s0, len) in &placements {
                    if j + eps <= t0 + len {
                        s = s0 + (j + eps - t0);
                        break;
                    }
                }
                s
            };
            let dv = (profile.spline().value(zl) - profile.spline().value(zr)).abs();
            let dd = (profile.spline().derivative(zl) - profile.spline().derivative(zr)).abs();
            if dv > 1e-9 * vscale || dd > 1e-4 * vscale / h.max(1e-300) {
                junctions.push(j);
            }
        }
    }

    // half-width of each blend zone, clipped so zones stay disjoint and
    // inside (0, h)
    let half_widths: Vec<f64> = junctions
        .iter()
        .enumerate()
        .map(|(i, &j)| {
            let mut w = 0.5 * blend_width;
            let left = if i == 0 { 0.0 } else { junctions[i - 1] };
            let right = if i + 1 < junctions.len() {
                junctions[i + 1]
            } else {
                h
            };
            w = w.min(0.45 * (j - left)).min(0.45 * (right - j));
            w.max(0.0)
        })
        .collect();

    let in_blend = |z: f64| -> bool {
        junctions
            .iter()
            .zip(&half_widths)
            .any(|(&j, &w)| (z - j).abs() < w)
    };

    // collect knots: carried block knots outside blend zones, plus dense
    // samples with exact blended tangents inside each zone
    let mut pts: Vec<(f64, f64, f64)> = Vec::new();
    let src_knots = profile.knot_depths();
    for &(t0, s0, len) in &placements {
        // block boundary points and interior source knots
        let mut local = vec![t0, t0 + len];
        for &zk in src_knots {
            if zk > s0 && zk < s0 + len {
                local.push(t0 + (zk - s0));
            }
        }
        for z in local {
            if !in_blend(z) {
                let zs = source_of(z.clamp(t0, t0 + len));
                pts.push((z, profile.speed_clamped(zs), profile.derivative_clamped(zs)));
            }
        }
    }
    // tail knots (unmoved)
    if rearranged_end < h - tol {
        for &zk in src_knots {
            if zk > rearranged_end && !in_blend(zk) {
                pts.push((
                    zk,
                    profile.speed_clamped(zk),
                    profile.derivative_clamped(zk),
                ));
            }
        }
        if !in_blend(h) {
            pts.push((h, profile.speed_clamped(h), profile.derivative_clamped(h)));
        }
    }
    // blend-zone samples
    let blend_samples = 25;
    for (ji, &j) in junctions.iter().enumerate() {
        let w = half_widths[ji];
        if w == 0.0 {
            continue;
        }
        // adjacent pieces: left evaluated via source map of the left side,
        // right likewise; both extended across the zone
        let left_src_at =
            |z: f64| source_of(j - 1e-13 * h.max(1.0)) + (z - (j - 1e-13 * h.max(1.0)));
        let right_src_at =
            |z: f64| source_of(j + 1e-13 * h.max(1.0)) + (z - (j + 1e-13 * h.max(1.0)));
        for s in 0..=blend_samples {
            let z = j - w + 2.0 * w * s as f64 / blend_samples as f64;
            let t = (z - (j - w)) / (2.0 * w);
            let sm = t * t * (3.0 - 2.0 * t);
            let dsm = 6.0 * t * (1.0 - t) / (2.0 * w);
            let zl = left_src_at(z);
            let zr = right_src_at(z);
            let (lv, ld) = (profile.spline().value(zl), profile.spline().derivative(zl));
            let (rv, rd) = (profile.spline().value(zr), profile.spline().derivative(zr));
            let v = (1.0 - sm) * lv + sm * rv;
            let d = (1.0 - sm) * ld + sm * rd + dsm * (rv - lv);
            pts.push((z, v, d));
        }
    }

    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    pts.dedup_by(|a, b| (a.0 - b.0).abs() < 1e-13 * h.max(1.0));
    if let Some(first) = pts.first_mut() {
        if first.0.abs() < tol {
            first.0 = 0.0;
        }
    }
    let z: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let c: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let d: Vec<f64> = pts.iter().map(|p| p.2).collect();
    VelocityProfile::from_hermite_parts(z, c, d)
}
