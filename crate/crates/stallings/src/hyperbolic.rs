//! Loxodromic isometries of upper half-space, displacement cylinders, and
//! Schottky group sampling.
//!
//! Isometries are unit-determinant 2x2 complex matrices acting on
//! `H^3 = {(x, y, z) : z > 0}` by the Poincare extension of the Mobius map.
//! Distance uses the closed form `cosh d = 1 + (|dxy|^2 + (z - z')^2)/(2 z z')`.

use num_complex::Complex64;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::core_graph::CoreGraph;
use crate::words::{Letter, Word};

pub const DET_TOL: f64 = 1e-9;
const CLASS_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum HyperbolicError {
    #[error("matrix determinant {0} is not 1 within tolerance")]
    NonUnitDeterminant(f64),
    #[error("point must have z > 0 (got {0})")]
    DegeneratePoint(f64),
    #[error("isometry is not loxodromic")]
    NotLoxodromic,
    #[error("empty cylinder: lambda {lambda} < translation length {ell}")]
    EmptyCylinder { lambda: f64, ell: f64 },
    #[error("failed to certify a Schottky configuration after {0} attempts")]
    CertificationFailure(usize),
}

/// A point of upper half-space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointH3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl PointH3 {
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self, HyperbolicError> {
        if !(z > 0.0) {
            return Err(HyperbolicError::DegeneratePoint(z));
        }
        Ok(PointH3 { x, y, z })
    }

    pub fn horizontal(&self) -> Complex64 {
        Complex64::new(self.x, self.y)
    }
}

/// Hyperbolic distance in the upper half-space model.
pub fn distance(p: &PointH3, q: &PointH3) -> f64 {
    let dxy = (p.x - q.x).powi(2) + (p.y - q.y).powi(2);
    let dz = (p.z - q.z).powi(2);
    let cosh_d = 1.0 + (dxy + dz) / (2.0 * p.z * q.z);
    cosh_d.max(1.0).acosh()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum IsometryClass {
    Identity,
    Parabolic,
    Elliptic,
    Loxodromic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Classification {
    pub class: IsometryClass,
    /// Positive exactly for loxodromics: `2 log |largest eigenvalue|`.
    pub translation_length: f64,
    /// `2 arg(largest eigenvalue)`, normalized to `(-pi, pi]`.
    pub rotation_angle: f64,
}

/// A 2x2 complex matrix of determinant 1 acting on upper half-space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Isometry {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    pub d: Complex64,
}

impl Isometry {
    pub fn new(
        a: Complex64,
        b: Complex64,
        c: Complex64,
        d: Complex64,
    ) -> Result<Self, HyperbolicError> {
        let det = a * d - b * c;
        if (det - Complex64::new(1.0, 0.0)).norm() > DET_TOL {
            return Err(HyperbolicError::NonUnitDeterminant(det.norm()));
        }
        Ok(Isometry { a, b, c, d })
    }

    /// Scales an invertible matrix to determinant 1.
    pub fn normalized(
        a: Complex64,
        b: Complex64,
        c: Complex64,
        d: Complex64,
    ) -> Result<Self, HyperbolicError> {
        let det = a * d - b * c;
        if det.norm() < 1e-30 {
            return Err(HyperbolicError::NonUnitDeterminant(det.norm()));
        }
        let s = det.sqrt();
        Ok(Isometry { a: a / s, b: b / s, c: c / s, d: d / s })
    }

    pub fn identity() -> Self {
        Isometry {
            a: Complex64::new(1.0, 0.0),
            b: Complex64::new(0.0, 0.0),
            c: Complex64::new(0.0, 0.0),
            d: Complex64::new(1.0, 0.0),
        }
    }

    /// `diag(exp(mu/2), exp(-mu/2))` with `mu = ell + i theta`: translation
    /// by `ell` along the vertical axis with rotation `theta`.
    pub fn axial(ell: f64, theta: f64) -> Self {
        let half = Complex64::new(ell / 2.0, theta / 2.0).exp();
        Isometry {
            a: half,
            b: Complex64::new(0.0, 0.0),
            c: Complex64::new(0.0, 0.0),
            d: half.inv(),
        }
    }

    pub fn inverse(&self) -> Isometry {
        Isometry { a: self.d, b: -self.b, c: -self.c, d: self.a }
    }

    /// Matrix product. No renormalization: the determinant of a product of
    /// unit-determinant matrices is 1 up to rounding drift, while recomputing
    /// `ad - bc` on large-entry products loses it entirely to cancellation.
    pub fn compose(&self, other: &Isometry) -> Isometry {
        Isometry {
            a: self.a * other.a + self.b * other.c,
            b: self.a * other.b + self.b * other.d,
            c: self.c * other.a + self.d * other.c,
            d: self.c * other.b + self.d * other.d,
        }
    }

    pub fn determinant(&self) -> Complex64 {
        self.a * self.d - self.b * self.c
    }

    pub fn trace(&self) -> Complex64 {
        self.a + self.d
    }

    /// Mobius action on the boundary plane.
    pub fn apply_boundary(&self, z: Complex64) -> Complex64 {
        (self.a * z + self.b) / (self.c * z + self.d)
    }

    /// Poincare extension to upper half-space.
    pub fn apply(&self, p: &PointH3) -> PointH3 {
        let z = p.horizontal();
        let t = p.z;
        let cz_d = self.c * z + self.d;
        let denom = cz_d.norm_sqr() + self.c.norm_sqr() * t * t;
        let new_z = ((self.a * z + self.b) * cz_d.conj() + self.a * self.c.conj() * t * t) / denom;
        PointH3 { x: new_z.re, y: new_z.im, z: t / denom }
    }

    pub fn classify(&self) -> Result<Classification, HyperbolicError> {
        let det = self.determinant();
        if (det - Complex64::new(1.0, 0.0)).norm() > DET_TOL {
            return Err(HyperbolicError::NonUnitDeterminant(det.norm()));
        }
        let one = Complex64::new(1.0, 0.0);
        let near_identity = |s: f64| {
            (self.a - s * one).norm() < CLASS_TOL
                && self.b.norm() < CLASS_TOL
                && self.c.norm() < CLASS_TOL
                && (self.d - s * one).norm() < CLASS_TOL
        };
        if near_identity(1.0) || near_identity(-1.0) {
            return Ok(Classification {
                class: IsometryClass::Identity,
                translation_length: 0.0,
                rotation_angle: 0.0,
            });
        }
        let t = self.trace();
        let sqrt_disc = (t * t - 4.0 * one).sqrt();
        let lam1 = (t + sqrt_disc) / 2.0;
        let lam2 = (t - sqrt_disc) / 2.0;
        let lam = if lam1.norm() >= lam2.norm() { lam1 } else { lam2 };
        if lam.norm() > 1.0 + CLASS_TOL {
            let mut angle = 2.0 * lam.arg();
            if angle <= -std::f64::consts::PI {
                angle += 2.0 * std::f64::consts::PI;
            } else if angle > std::f64::consts::PI {
                angle -= 2.0 * std::f64::consts::PI;
            }
            return Ok(Classification {
                class: IsometryClass::Loxodromic,
                translation_length: 2.0 * lam.norm().ln(),
                rotation_angle: angle,
            });
        }
        // |eigenvalue| = 1 forces a real trace in [-2, 2]
        let class = if (t.re.abs() - 2.0).abs() < CLASS_TOL {
            IsometryClass::Parabolic
        } else {
            IsometryClass::Elliptic
        };
        Ok(Classification {
            class,
            translation_length: 0.0,
            rotation_angle: 2.0 * lam.arg(),
        })
    }

    pub fn is_loxodromic(&self) -> bool {
        matches!(
            self.classify(),
            Ok(Classification { class: IsometryClass::Loxodromic, .. })
        )
    }

    /// Fixed points of the Mobius map on the boundary; `None` marks infinity.
    pub fn fixed_points(&self) -> (Option<Complex64>, Option<Complex64>) {
        let one = Complex64::new(1.0, 0.0);
        if self.c.norm() < 1e-14 {
            if (self.a - self.d).norm() < 1e-14 {
                return (None, None);
            }
            return (Some(self.b / (self.d - self.a)), None);
        }
        let t = self.trace();
        let sqrt_disc = (t * t - 4.0 * one).sqrt();
        (
            Some((self.a - self.d + sqrt_disc) / (2.0 * self.c)),
            Some((self.a - self.d - sqrt_disc) / (2.0 * self.c)),
        )
    }

    /// A point on the invariant axis of a loxodromic.
    pub fn axis_point(&self) -> Result<PointH3, HyperbolicError> {
        if !self.is_loxodromic() {
            return Err(HyperbolicError::NotLoxodromic);
        }
        match self.fixed_points() {
            (Some(p), Some(q)) => {
                let mid = (p + q) / 2.0;
                let r = (p - q).norm() / 2.0;
                PointH3::new(mid.re, mid.im, r)
            }
            (Some(p), None) | (None, Some(p)) => PointH3::new(p.re, p.im, 1.0),
            (None, None) => Err(HyperbolicError::NotLoxodromic),
        }
    }

    pub fn to_json(&self) -> IsometryJson {
        IsometryJson {
            a: [self.a.re, self.a.im],
            b: [self.b.re, self.b.im],
            c: [self.c.re, self.c.im],
            d: [self.d.re, self.d.im],
        }
    }

    pub fn from_json(j: &IsometryJson) -> Result<Self, HyperbolicError> {
        Isometry::new(
            Complex64::new(j.a[0], j.a[1]),
            Complex64::new(j.b[0], j.b[1]),
            Complex64::new(j.c[0], j.c[1]),
            Complex64::new(j.d[0], j.d[1]),
        )
    }
}

/// Complex entries serialized as `[re, im]` pairs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IsometryJson {
    pub a: [f64; 2],
    pub b: [f64; 2],
    pub c: [f64; 2],
    pub d: [f64; 2],
}

/// `d(P, m * P)`.
pub fn displacement(p: &PointH3, m: &Isometry) -> f64 {
    distance(p, &m.apply(p))
}

/// Truncated membership test for the cylinder `Z_lambda(C)` of the cyclic
/// group generated by a loxodromic: true iff some power `g^j` with
/// `1 <= |j| <= max_power` displaces `p` by strictly less than `lambda`.
/// This under-approximates the union over all non-trivial powers.
pub fn cylinder_contains(
    p: &PointH3,
    generator: &Isometry,
    lambda: f64,
    max_power: usize,
) -> Result<bool, HyperbolicError> {
    if !generator.is_loxodromic() {
        return Err(HyperbolicError::NotLoxodromic);
    }
    let mut pow = *generator;
    let mut inv_pow = generator.inverse();
    for _ in 0..max_power {
        if displacement(p, &pow) < lambda || displacement(p, &inv_pow) < lambda {
            return Ok(true);
        }
        pow = pow.compose(generator);
        inv_pow = inv_pow.compose(&generator.inverse());
    }
    Ok(false)
}

/// Radius of the cylinder `Z_lambda` of a loxodromic with translation length
/// `ell > 0` and rotation `theta`: the `r >= 0` solving
/// `cosh lambda = cosh(ell) cosh^2 r - cos(theta) sinh^2 r`,
/// found by bisection to 1e-12. The displacement at distance `r` from the
/// axis is strictly increasing in `r`, so the solution is unique.
pub fn cylinder_radius(ell: f64, theta: f64, lambda: f64) -> Result<f64, HyperbolicError> {
    if lambda < ell {
        return Err(HyperbolicError::EmptyCylinder { lambda, ell });
    }
    let f = |r: f64| {
        let (ch, sh) = (r.cosh(), r.sinh());
        ell.cosh() * ch * ch - theta.cos() * sh * sh - lambda.cosh()
    };
    if f(0.0) >= 0.0 {
        return Ok(0.0);
    }
    let mut hi = 1.0;
    while f(hi) < 0.0 {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(HyperbolicError::EmptyCylinder { lambda, ell });
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-13 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// A circle on the boundary plane.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Circle {
    pub center: [f64; 2],
    pub radius: f64,
}

impl Circle {
    fn center_c(&self) -> Complex64 {
        Complex64::new(self.center[0], self.center[1])
    }
}

/// A rank-k Schottky group: k loxodromic generators in certified ping-pong
/// position, each mapping the exterior of its source circle onto the interior
/// of its target circle.
#[derive(Debug, Clone)]
pub struct SchottkyConfig {
    pub k: usize,
    pub generators: Vec<Isometry>,
    /// `(source, target)` circle pair per generator.
    pub circles: Vec<(Circle, Circle)>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SchottkyJson {
    pub k: usize,
    pub generators: Vec<IsometryJson>,
    pub circles: Vec<(Circle, Circle)>,
}

impl SchottkyConfig {
    pub fn to_json(&self) -> SchottkyJson {
        SchottkyJson {
            k: self.k,
            generators: self.generators.iter().map(|g| g.to_json()).collect(),
            circles: self.circles.clone(),
        }
    }

    /// Numerical ping-pong certification: the 2k circles are pairwise
    /// disjoint, every generator is loxodromic, and sampled source-circle
    /// points land on the target circle within 1e-9 with exterior points
    /// mapped inside.
    pub fn certify(&self) -> bool {
        let tol = 1e-9;
        let mut all: Vec<Circle> = Vec::new();
        for (s, t) in &self.circles {
            all.push(*s);
            all.push(*t);
        }
        for i in 0..all.len() {
            for j in i + 1..all.len() {
                let gap = (all[i].center_c() - all[j].center_c()).norm();
                if gap <= all[i].radius + all[j].radius {
                    return false;
                }
            }
        }
        for (g, (src, tgt)) in self.generators.iter().zip(&self.circles) {
            if !g.is_loxodromic() {
                return false;
            }
            for s in 0..16 {
                let angle = 2.0 * std::f64::consts::PI * s as f64 / 16.0;
                let on_src = src.center_c()
                    + src.radius * Complex64::new(angle.cos(), angle.sin());
                let image = g.apply_boundary(on_src);
                if ((image - tgt.center_c()).norm() - tgt.radius).abs() > tol {
                    return false;
                }
                // a point just outside the source circle must map inside
                let outside = src.center_c()
                    + 1.5 * src.radius * Complex64::new(angle.cos(), angle.sin());
                if (g.apply_boundary(outside) - tgt.center_c()).norm() >= tgt.radius {
                    return false;
                }
            }
        }
        true
    }
}

/// Samples a rank-k Schottky configuration: 2k disjoint circles near the real
/// axis, with generator `g_i(z) = c_t + r_s r_t / (z - c_s)` pairing them.
/// Deterministic per seed.
pub fn sample_schottky(k: usize, seed: u64) -> Result<SchottkyConfig, HyperbolicError> {
    assert!(k >= 2, "Schottky rank must be at least 2");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    const ATTEMPTS: usize = 100;
    for _ in 0..ATTEMPTS {
        let mut circles = Vec::with_capacity(k);
        let mut generators = Vec::with_capacity(k);
        let mut centers: Vec<Complex64> = Vec::new();
        for i in 0..2 * k {
            centers.push(Complex64::new(
                4.0 * i as f64 + rng.gen_range(-0.5..0.5),
                rng.gen_range(-0.5..0.5),
            ));
        }
        let radii: Vec<f64> = (0..2 * k).map(|_| rng.gen_range(0.5..1.0)).collect();
        let mut ok = true;
        for i in 0..k {
            let (cs, rs) = (centers[2 * i], radii[2 * i]);
            let (ct, rt) = (centers[2 * i + 1], radii[2 * i + 1]);
            // maps |z - cs| = rs onto |w - ct| = rt, exterior to interior
            let g = Isometry::normalized(
                ct,
                rs * rt - cs * ct,
                Complex64::new(1.0, 0.0),
                -cs,
            );
            match g {
                Ok(g) if g.is_loxodromic() => {
                    generators.push(g);
                    circles.push((
                        Circle { center: [cs.re, cs.im], radius: rs },
                        Circle { center: [ct.re, ct.im], radius: rt },
                    ));
                }
                _ => {
                    ok = false;
                    break;
                }
            }
        }
        if !ok {
            continue;
        }
        let cfg = SchottkyConfig { k, generators, circles };
        if cfg.certify() {
            return Ok(cfg);
        }
    }
    Err(HyperbolicError::CertificationFailure(ATTEMPTS))
}

/// `max_j d(P, g_j P) - log(2k - 1)`; nonnegative for free ping-pong groups.
pub fn check_log_bound(p: &PointH3, cfg: &SchottkyConfig) -> f64 {
    let max_disp = cfg
        .generators
        .iter()
        .map(|g| displacement(p, g))
        .fold(f64::NEG_INFINITY, f64::max);
    max_disp - ((2 * cfg.k - 1) as f64).ln()
}

/// Sampling estimate of the subgroup generated by the maximal cyclic
/// subgroups whose cylinders contain `P`, truncated at word length `L`.
#[derive(Debug, Clone)]
pub struct GpEstimate {
    pub point: PointH3,
    pub lambda: f64,
    pub word_length_bound: usize,
    /// All reduced words of length <= L whose displacement at P is < lambda.
    pub survivors: Vec<Word>,
    /// Deduplicated primitive roots of the survivors.
    pub roots: Vec<Word>,
    /// Rank of `<roots>` in F_k; a lower-bound estimate of `rk G_P(lambda)`.
    pub rank_estimate: usize,
}

#[derive(Debug, Serialize)]
pub struct GpEstimateJson {
    pub point: [f64; 3],
    pub lambda: f64,
    pub word_length_bound: usize,
    pub survivors: Vec<String>,
    pub roots: Vec<String>,
    pub rank_estimate: usize,
}

impl GpEstimate {
    pub fn to_json(&self) -> GpEstimateJson {
        GpEstimateJson {
            point: [self.point.x, self.point.y, self.point.z],
            lambda: self.lambda,
            word_length_bound: self.word_length_bound,
            survivors: self.survivors.iter().map(|w| w.to_string()).collect(),
            roots: self.roots.iter().map(|w| w.to_string()).collect(),
            rank_estimate: self.rank_estimate,
        }
    }
}

/// Enumerates all reduced words of length <= `max_len` in the Schottky
/// generators, keeps those displacing `p` by < `lambda`, extracts primitive
/// roots, and reports the rank of the subgroup of F_k they generate.
pub fn estimate_gp(
    p: &PointH3,
    cfg: &SchottkyConfig,
    lambda: f64,
    max_len: usize,
) -> GpEstimate {
    let k = cfg.k;
    let mut letter_mats = Vec::with_capacity(2 * k);
    for g in &cfg.generators {
        letter_mats.push(*g);
    }
    for g in &cfg.generators {
        letter_mats.push(g.inverse());
    }
    let letter = |idx: usize| {
        if idx < k {
            Letter::new(idx, false)
        } else {
            Letter::new(idx - k, true)
        }
    };
    let mut survivors: Vec<Word> = Vec::new();
    // iterative DFS over reduced words with incremental matrix products
    let mut stack: Vec<(Vec<usize>, Isometry)> = (0..2 * k)
        .rev()
        .map(|i| (vec![i], letter_mats[i]))
        .collect();
    while let Some((path, mat)) = stack.pop() {
        if displacement(p, &mat) < lambda {
            let letters = path.iter().map(|&i| letter(i)).collect();
            survivors.push(Word::reduce(letters, k));
        }
        if path.len() < max_len {
            let last = *path.last().unwrap();
            let banned = if last < k { last + k } else { last - k };
            for next in (0..2 * k).rev() {
                if next == banned {
                    continue;
                }
                let mut p2 = path.clone();
                p2.push(next);
                stack.push((p2, mat.compose(&letter_mats[next])));
            }
        }
    }
    let mut seen = std::collections::BTreeSet::new();
    let mut roots = Vec::new();
    for w in &survivors {
        let root = w.primitive_root();
        let s = root.to_string();
        let s_inv = root.inverse().to_string();
        let key = s.clone().min(s_inv);
        if seen.insert(key) {
            roots.push(root);
        }
    }
    let rank_estimate = CoreGraph::from_generators(&roots, k)
        .expect("roots share alphabet rank k")
        .rank();
    GpEstimate {
        point: *p,
        lambda,
        word_length_bound: max_len,
        survivors,
        roots,
        rank_estimate,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const LOG9: f64 = 2.1972245773362196;

    fn pt(x: f64, y: f64, z: f64) -> PointH3 {
        PointH3::new(x, y, z).unwrap()
    }

    fn diag3() -> Isometry {
        Isometry::new(
            Complex64::new(3.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0 / 3.0, 0.0),
        )
        .unwrap()
    }

    #[test]
    fn classify_examples() {
        let c = diag3().classify().unwrap();
        assert_eq!(c.class, IsometryClass::Loxodromic);
        assert!((c.translation_length - LOG9).abs() < 1e-12);
        assert!(c.rotation_angle.abs() < 1e-12);

        let c = Isometry::identity().classify().unwrap();
        assert_eq!(c.class, IsometryClass::Identity);
        assert_eq!(c.translation_length, 0.0);

        let parabolic = Isometry::new(
            Complex64::new(1.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
        )
        .unwrap();
        assert_eq!(parabolic.classify().unwrap().class, IsometryClass::Parabolic);

        let bad = Isometry {
            a: Complex64::new(2.0, 0.0),
            b: Complex64::new(0.0, 0.0),
            c: Complex64::new(0.0, 0.0),
            d: Complex64::new(2.0, 0.0),
        };
        assert!(matches!(bad.classify(), Err(HyperbolicError::NonUnitDeterminant(_))));
    }

    #[test]
    fn displacement_examples() {
        let p = pt(0.0, 0.0, 1.0);
        assert_eq!(displacement(&p, &Isometry::identity()), 0.0);
        // P on the axis of diag(3, 1/3): image (0, 0, 9)
        assert!((displacement(&p, &diag3()) - LOG9).abs() < 1e-12);
        // parabolic (1,1;0,1): distance between (0,0,1) and (1,0,1)
        let parabolic = Isometry::new(
            Complex64::new(1.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
        )
        .unwrap();
        assert!((displacement(&p, &parabolic) - 1.5f64.acosh()).abs() < 1e-12);
    }

    #[test]
    fn degenerate_points_are_rejected() {
        assert!(matches!(
            PointH3::new(0.0, 0.0, 0.0),
            Err(HyperbolicError::DegeneratePoint(_))
        ));
        assert!(matches!(
            PointH3::new(0.0, 0.0, -1.0),
            Err(HyperbolicError::DegeneratePoint(_))
        ));
    }

    #[test]
    fn cylinder_contains_examples() {
        let p = pt(0.0, 0.0, 1.0);
        let g = diag3();
        assert!(cylinder_contains(&p, &g, LOG9 + 0.1, 1).unwrap());
        // displacement of g^j at the axis is j * log 9, so the strict
        // inequality fails for every power at lambda = d(P, gP)
        let lam = displacement(&p, &g);
        assert!(!cylinder_contains(&p, &g, lam, 5).unwrap());
        let far = pt(50.0, 0.0, 0.01);
        assert!(!cylinder_contains(&far, &g, 0.5, 5).unwrap());
        let parabolic = Isometry::new(
            Complex64::new(1.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
        )
        .unwrap();
        assert!(matches!(
            cylinder_contains(&p, &parabolic, 1.0, 1),
            Err(HyperbolicError::NotLoxodromic)
        ));
    }

    #[test]
    fn cylinder_radius_examples() {
        assert_eq!(cylinder_radius(1.0, 0.0, 1.0).unwrap(), 0.0);
        // closed form: r = arcsinh(sqrt((cosh lambda - cosh ell)/(cosh ell - 1)))
        let expected = ((LOG9.cosh() - 1f64.cosh()) / (1f64.cosh() - 1.0)).sqrt().asinh();
        let r = cylinder_radius(1.0, 0.0, LOG9).unwrap();
        assert!((r - expected).abs() < 1e-11, "r = {r}, expected {expected}");
        assert!(matches!(
            cylinder_radius(1.0, 0.0, 0.5),
            Err(HyperbolicError::EmptyCylinder { .. })
        ));
    }

    #[test]
    fn cylinder_radius_matches_matrix_displacement() {
        // gamma = axial(ell, theta); a point at axis distance r on the unit
        // hemisphere is (tanh r, 0, 1/cosh r)
        for &(ell, theta, r) in &[(1.0f64, 0.0f64, 0.7f64), (0.5, 1.2, 1.3), (2.0, -0.9, 0.3)] {
            let g = Isometry::axial(ell, theta);
            let p = pt(r.tanh(), 0.0, 1.0 / r.cosh());
            let d = displacement(&p, &g);
            let solved = cylinder_radius(ell, theta, d).unwrap();
            assert!((solved - r).abs() < 1e-9, "ell={ell} theta={theta}: {solved} vs {r}");
        }
    }

    #[test]
    fn cylinder_radius_is_monotone_in_lambda() {
        let mut prev = 0.0;
        for i in 1..40 {
            let lam = 1.0 + 0.25 * i as f64;
            let r = cylinder_radius(1.0, 0.7, lam).unwrap();
            assert!(r > prev);
            prev = r;
        }
    }

    #[test]
    fn axis_point_realizes_translation_length() {
        let g = Isometry::axial(1.3, 0.4);
        // conjugate to move the axis somewhere generic
        let h = Isometry::normalized(
            Complex64::new(2.0, 1.0),
            Complex64::new(0.5, -0.3),
            Complex64::new(0.1, 0.2),
            Complex64::new(1.0, 0.0),
        )
        .unwrap();
        let conj = h.compose(&g).compose(&h.inverse());
        let c = conj.classify().unwrap();
        assert!((c.translation_length - 1.3).abs() < 1e-9);
        let axis = conj.axis_point().unwrap();
        assert!((displacement(&axis, &conj) - c.translation_length).abs() < 1e-9);
        // off-axis displacement is strictly larger
        let off = pt(axis.x + 1.0, axis.y, axis.z);
        assert!(displacement(&off, &conj) > c.translation_length + 1e-6);
    }

    #[test]
    fn conjugation_invariance_of_displacement() {
        let g = Isometry::axial(0.9, -0.6);
        let h = Isometry::normalized(
            Complex64::new(1.0, 0.5),
            Complex64::new(-0.2, 0.1),
            Complex64::new(0.3, 0.0),
            Complex64::new(1.0, -0.4),
        )
        .unwrap();
        let p = pt(0.3, -0.7, 2.1);
        let lhs = displacement(&p, &g);
        let conj = h.compose(&g).compose(&h.inverse());
        let rhs = displacement(&h.apply(&p), &conj);
        assert!((lhs - rhs).abs() < 1e-9);
    }

    #[test]
    fn schottky_sampling_is_deterministic_and_certified() {
        let a = sample_schottky(2, 7).unwrap();
        let b = sample_schottky(2, 7).unwrap();
        assert!(a.certify());
        for (x, y) in a.generators.iter().zip(&b.generators) {
            assert_eq!(x, y);
        }
        assert!(a.generators.iter().all(|g| g.is_loxodromic()));
        // 4 pairwise disjoint circles
        let mut all = Vec::new();
        for (s, t) in &a.circles {
            all.push(*s);
            all.push(*t);
        }
        assert_eq!(all.len(), 4);
    }

    #[test]
    fn log_bound_margin_is_positive_far_from_axes() {
        let cfg = sample_schottky(2, 3).unwrap();
        let far = pt(0.0, 0.0, 2000.0);
        assert!(check_log_bound(&far, &cfg) > 1.0);
    }

    #[test]
    fn gp_estimate_empty_when_lambda_tiny() {
        let cfg = sample_schottky(2, 5).unwrap();
        let p = pt(1.0, 0.0, 1.0);
        let est = estimate_gp(&p, &cfg, 1e-9, 4);
        assert!(est.survivors.is_empty());
        assert_eq!(est.rank_estimate, 0);
    }

    #[test]
    fn gp_estimate_deduplicates_powers_to_roots() {
        // explicit rank-2 config: one axial generator with the vertical axis,
        // one conjugated far away so mixed words displace the base point a lot
        let g1 = Isometry::axial(1.0, 0.0);
        let shift = Isometry::new(
            Complex64::new(1.0, 0.0),
            Complex64::new(100.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
        )
        .unwrap();
        let g2 = shift.compose(&g1).compose(&shift.inverse());
        let cfg = SchottkyConfig { k: 2, generators: vec![g1, g2], circles: vec![] };
        let p = pt(0.0, 0.0, 1.0);
        // a and a^2 (and inverses) survive at lambda = 2.5; a^3 does not
        let est = estimate_gp(&p, &cfg, 2.5, 3);
        let texts: std::collections::BTreeSet<String> =
            est.survivors.iter().map(|w| w.to_string()).collect();
        assert_eq!(
            texts,
            ["a", "A", "aa", "AA"].iter().map(|s| s.to_string()).collect()
        );
        assert_eq!(est.roots.len(), 1);
        assert_eq!(est.rank_estimate, 1);
    }

    #[test]
    fn gp_estimate_monotone_in_lambda_and_length() {
        let cfg = sample_schottky(2, 9).unwrap();
        let p = cfg.generators[0].axis_point().unwrap();
        let base = estimate_gp(&p, &cfg, 1.2, 4);
        let more_lambda = estimate_gp(&p, &cfg, 2.4, 4);
        let more_len = estimate_gp(&p, &cfg, 1.2, 6);
        assert!(base.rank_estimate <= more_lambda.rank_estimate);
        assert!(base.rank_estimate <= more_len.rank_estimate);
    }
}
