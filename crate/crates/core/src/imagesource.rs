//! Geometric image sources for polygonal reflectors: mirror positions,
//! specular/edge classification, reflection filtering, and fitting filter
//! coefficients to absorption targets.

use std::f64::consts::FRAC_PI_2;

use thiserror::Error;

use crate::geometry::{PlanarPolygon, Vec3};
use crate::transmission::OnePoleState;
use crate::Sample;

pub const DEFAULT_EDGE_EXPONENT: f64 = 2.7;

/// One-sided planar reflector. Only the side the face normal points to
/// reflects.
#[derive(Debug, Clone)]
pub struct Reflector {
    pub polygon: PlanarPolygon,
    /// Reflectivity coefficient rho in [0, 1].
    pub reflectivity: f64,
    /// Damping coefficient delta in [0, 1).
    pub damping: f64,
    /// Edge soft-fade exponent kappa.
    pub edge_exponent: f64,
}

impl Reflector {
    pub fn new(polygon: PlanarPolygon, reflectivity: f64, damping: f64) -> Reflector {
        Reflector { polygon, reflectivity, damping, edge_exponent: DEFAULT_EDGE_EXPONENT }
    }
}

/// Mirror image of a point across the reflector's infinite plane:
/// `p_img = 2 * p_cut - p_src` with `p_cut` the closest point on the plane.
pub fn mirror_position(p_src: Vec3, polygon: &PlanarPolygon) -> Vec3 {
    let p_cut = polygon.project_to_plane(p_src);
    p_cut * 2.0 - p_src
}

/// Receiver-dependent classification of an image source.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Visibility {
    /// The image source is visible through the reflector polygon and is
    /// rendered at its mirror position with unit gain.
    Specular,
    /// The intersection point falls outside the polygon: the apparent
    /// position shifts to the line through the receiver and the nearest
    /// boundary point, keeping the source-receiver distance, and the
    /// shift angle controls a soft-fade gain.
    Edge { position: Vec3, angle: f64 },
    /// Source or receiver is behind the reflecting side; not rendered.
    Hidden,
}

impl Visibility {
    /// Apparent render position, if the image is rendered at all.
    pub fn position(&self, p_img: Vec3) -> Option<Vec3> {
        match *self {
            Visibility::Specular => Some(p_img),
            Visibility::Edge { position, .. } => Some(position),
            Visibility::Hidden => None,
        }
    }

    pub fn gain(&self, edge_exponent: f64) -> f64 {
        match *self {
            Visibility::Specular => 1.0,
            Visibility::Edge { angle, .. } => edge_gain(angle, edge_exponent),
            Visibility::Hidden => 0.0,
        }
    }
}

/// Classify an image source (already mirrored) against its reflector for
/// one receiver position.
pub fn classify_reflection(p_img: Vec3, p_rec: Vec3, reflector: &Reflector) -> Visibility {
    let poly = &reflector.polygon;
    // The image sits behind the plane exactly when the primary source is
    // in front of it; a non-negative image distance means the source is
    // behind the reflecting side.
    if poly.plane_distance(p_img) >= 0.0 || poly.plane_distance(p_rec) <= 0.0 {
        return Visibility::Hidden;
    }
    let p_is = match poly.segment_plane_intersection(p_img, p_rec) {
        Some(p) => p,
        None => return Visibility::Hidden,
    };
    if poly.contains(p_is) {
        return Visibility::Specular;
    }
    let p_edge = poly.closest_boundary_point(p_is);
    let to_edge = (p_edge - p_rec).normalized();
    if to_edge == Vec3::ZERO {
        return Visibility::Hidden;
    }
    let distance = (p_img - p_rec).norm();
    let position = p_rec + to_edge * distance;
    let to_img = (p_img - p_rec).normalized();
    let angle = to_img.dot(to_edge).clamp(-1.0, 1.0).acos();
    Visibility::Edge { position, angle }
}

/// Soft-fade gain `g = cos(theta)^kappa` for shift angles below 90
/// degrees, zero beyond.
pub fn edge_gain(theta: f64, kappa: f64) -> f64 {
    if theta < FRAC_PI_2 {
        theta.cos().powf(kappa)
    } else {
        0.0
    }
}

/// Reflection filter `y[n] = delta * y[n-1] + rho * x[n]`, applied once
/// per reflection order.
pub fn reflection_filter(
    block: &mut [Sample],
    reflectivity: f64,
    damping: f64,
    state: &mut OnePoleState,
) {
    let rho = reflectivity as Sample;
    let delta = damping as Sample;
    for x in block.iter_mut() {
        *x = state.step(*x, rho, delta);
    }
}

/// Frequency-dependent absorption of the reflection filter:
/// `alpha(f) = (1 - |rho (1-delta) / (1 - delta e^{-i 2 pi f / fs})|)^2`.
pub fn absorption_from_coeffs(reflectivity: f64, damping: f64, f: f64, sample_rate: f64) -> f64 {
    let theta = 2.0 * std::f64::consts::PI * f / sample_rate;
    let re = 1.0 - damping * theta.cos();
    let im = damping * theta.sin();
    let denom = (re * re + im * im).sqrt();
    let mag = reflectivity * (1.0 - damping) / denom;
    (1.0 - mag).powi(2)
}

#[derive(Debug, Error, PartialEq)]
pub enum FitError {
    #[error("no absorption targets given")]
    NoTargets,
}

/// Result of fitting (rho, delta) to absorption targets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitResult {
    pub reflectivity: f64,
    pub damping: f64,
    /// Mean-square error over the targets at the returned coefficients.
    pub residual: f64,
    /// False when the search stopped at the iteration cap; the best
    /// iterate is still returned.
    pub converged: bool,
}

/// Fit reflection coefficients to `(frequency, absorption)` targets by
/// minimizing the mean-square error of `absorption_from_coeffs`.
///
/// Coarse grid search over [0,1] x [0,1) followed by a compass search
/// refinement down to an objective tolerance of 1e-8.
pub fn fit_reflection_coeffs(
    targets: &[(f64, f64)],
    sample_rate: f64,
) -> Result<FitResult, FitError> {
    if targets.is_empty() {
        return Err(FitError::NoTargets);
    }
    const DELTA_MAX: f64 = 0.999_999;
    let objective = |rho: f64, delta: f64| -> f64 {
        targets
            .iter()
            .map(|&(f, a)| {
                let err = absorption_from_coeffs(rho, delta, f, sample_rate) - a;
                err * err
            })
            .sum::<f64>()
            / targets.len() as f64
    };

    let mut best = (1.0, 0.0);
    let mut best_obj = objective(1.0, 0.0);
    let steps = 50;
    for i in 0..=steps {
        let rho = i as f64 / steps as f64;
        for j in 0..steps {
            let delta = j as f64 / steps as f64;
            let obj = objective(rho, delta.min(DELTA_MAX));
            if obj < best_obj {
                best_obj = obj;
                best = (rho, delta.min(DELTA_MAX));
            }
        }
    }

    // Compass search refinement.
    let mut step = 1.0 / steps as f64;
    let mut iterations = 0usize;
    let mut converged = false;
    while iterations < 100_000 {
        iterations += 1;
        let (rho, delta) = best;
        let mut improved = false;
        for (dr, dd) in [(step, 0.0), (-step, 0.0), (0.0, step), (0.0, -step)] {
            let cand = ((rho + dr).clamp(0.0, 1.0), (delta + dd).clamp(0.0, DELTA_MAX));
            let obj = objective(cand.0, cand.1);
            if obj < best_obj {
                best_obj = obj;
                best = cand;
                improved = true;
            }
        }
        if !improved {
            step *= 0.5;
            if step < 1e-10 {
                converged = true;
                break;
            }
        }
        if best_obj < 1e-16 {
            converged = true;
            break;
        }
    }

    Ok(FitResult {
        reflectivity: best.0,
        damping: best.1,
        residual: best_obj,
        converged,
    })
}

/// Image source of order >= 1: a primary source mirrored through a chain
/// of reflectors. The last chain entry is the reflector the final
/// classification runs against.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageSource {
    /// Index of the parent primary source.
    pub source: usize,
    /// Reflector indices in bounce order.
    pub chain: Vec<usize>,
    /// Mirrored position for the current source position.
    pub position: Vec3,
}

impl ImageSource {
    pub fn order(&self) -> u32 {
        self.chain.len() as u32
    }

    pub fn reflector(&self) -> usize {
        *self.chain.last().expect("image source chain is never empty")
    }
}

/// All reflector chains up to `max_order`, excluding chains that mirror
/// against the same reflector twice in a row (those images coincide with
/// their grandparent). Enumeration order is by order, then lexicographic,
/// and is deterministic.
pub fn image_chains(reflector_count: usize, max_order: u32) -> Vec<Vec<usize>> {
    let mut chains: Vec<Vec<usize>> = Vec::new();
    let mut previous: Vec<Vec<usize>> = vec![vec![]];
    for _ in 0..max_order {
        let mut next = Vec::new();
        for parent in &previous {
            for r in 0..reflector_count {
                if parent.last() == Some(&r) {
                    continue;
                }
                let mut chain = parent.clone();
                chain.push(r);
                next.push(chain);
            }
        }
        chains.extend(next.iter().cloned());
        previous = next;
    }
    chains
}

/// Fold a position through a chain of mirrors.
pub fn mirror_through_chain(p: Vec3, chain: &[usize], reflectors: &[Reflector]) -> Vec3 {
    chain.iter().fold(p, |pos, &r| mirror_position(pos, &reflectors[r].polygon))
}

/// Enumerate image sources of all orders 1..=max_order for every primary
/// source position.
pub fn generate_image_sources(
    source_positions: &[Vec3],
    reflectors: &[Reflector],
    max_order: u32,
) -> Vec<ImageSource> {
    let chains = image_chains(reflectors.len(), max_order);
    let mut images = Vec::with_capacity(source_positions.len() * chains.len());
    for (source, &pos) in source_positions.iter().enumerate() {
        for chain in &chains {
            images.push(ImageSource {
                source,
                chain: chain.clone(),
                position: mirror_through_chain(pos, chain, reflectors),
            });
        }
    }
    images
}
