//! Positions, orientations, trajectories and coordinate transforms for
//! scene objects.
//!
//! Orientations use intrinsic Z-Y-X Euler angles (yaw, pitch, roll), i.e.
//! the rotation matrix is `Rz * Ry * Rx`. All angles are radians.

use std::f64::consts::PI;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("trajectory needs at least one position sample")]
    EmptyTrajectory,
    #[error("trajectory sample times must be strictly increasing (at t={0})")]
    NonMonotonicTimes(f64),
    #[error("polygon needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("polygon is degenerate (zero-area normal)")]
    DegeneratePolygon,
}

/// Cartesian vector/point in meters (unitless when normalized).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 0.0 };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn dot(self, other: Vec3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn cross(self, other: Vec3) -> Vec3 {
        Vec3::new(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )
    }

    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn distance(self, other: Vec3) -> f64 {
        (self - other).norm()
    }

    /// Unit vector in the same direction; the zero vector stays zero.
    pub fn normalized(self) -> Vec3 {
        let n = self.norm();
        if n > 0.0 {
            self * (1.0 / n)
        } else {
            Vec3::ZERO
        }
    }

    /// Projection onto the x,y-plane (z set to zero).
    pub fn horizontal(self) -> Vec3 {
        Vec3::new(self.x, self.y, 0.0)
    }

    pub fn azimuth(self) -> f64 {
        self.y.atan2(self.x)
    }

    pub fn elevation(self) -> f64 {
        self.z.atan2(self.horizontal().norm())
    }

    pub fn from_spherical(radius: f64, azimuth: f64, elevation: f64) -> Vec3 {
        let (se, ce) = elevation.sin_cos();
        let (sa, ca) = azimuth.sin_cos();
        Vec3::new(radius * ce * ca, radius * ce * sa, radius * se)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl std::ops::Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl std::ops::Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl std::ops::Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

impl std::ops::Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

/// Euler angles in radians, applied in Z (yaw), then Y (pitch), then X
/// (roll) order.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Euler {
    pub z: f64,
    pub y: f64,
    pub x: f64,
}

impl Euler {
    pub const IDENTITY: Euler = Euler { z: 0.0, y: 0.0, x: 0.0 };

    pub const fn new(z: f64, y: f64, x: f64) -> Self {
        Euler { z, y, x }
    }

    pub fn is_finite(self) -> bool {
        self.z.is_finite() && self.y.is_finite() && self.x.is_finite()
    }
}

/// Row-major 3x3 matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat3(pub [[f64; 3]; 3]);

impl Mat3 {
    pub const IDENTITY: Mat3 =
        Mat3([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);

    pub fn mul_vec(&self, v: Vec3) -> Vec3 {
        let m = &self.0;
        Vec3::new(
            m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
            m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
            m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z,
        )
    }

    pub fn mul_mat(&self, o: &Mat3) -> Mat3 {
        let mut r = [[0.0; 3]; 3];
        for (i, row) in r.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = (0..3).map(|k| self.0[i][k] * o.0[k][j]).sum();
            }
        }
        Mat3(r)
    }

    /// For rotation matrices the transpose is the inverse.
    pub fn transpose(&self) -> Mat3 {
        let m = &self.0;
        Mat3([
            [m[0][0], m[1][0], m[2][0]],
            [m[0][1], m[1][1], m[2][1]],
            [m[0][2], m[1][2], m[2][2]],
        ])
    }

    pub fn determinant(&self) -> f64 {
        let m = &self.0;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }
}

/// Rotation matrix for intrinsic Z-Y-X Euler angles: `Rz(z) * Ry(y) * Rx(x)`.
pub fn euler_to_matrix(e: Euler) -> Mat3 {
    let (sz, cz) = e.z.sin_cos();
    let (sy, cy) = e.y.sin_cos();
    let (sx, cx) = e.x.sin_cos();
    Mat3([
        [cz * cy, cz * sy * sx - sz * cx, cz * sy * cx + sz * sx],
        [sz * cy, sz * sy * sx + cz * cx, sz * sy * cx - cz * sx],
        [-sy, cy * sx, cy * cx],
    ])
}

/// Position plus orientation, with the rotation matrix cached.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub position: Vec3,
    pub orientation: Euler,
    rotation: Mat3,
}

impl Pose {
    pub fn new(position: Vec3, orientation: Euler) -> Pose {
        Pose { position, orientation, rotation: euler_to_matrix(orientation) }
    }

    pub const IDENTITY: Pose = Pose {
        position: Vec3::ZERO,
        orientation: Euler::IDENTITY,
        rotation: Mat3::IDENTITY,
    };

    pub fn rotation(&self) -> &Mat3 {
        &self.rotation
    }

    /// Object-to-world transform: `position + R * v`.
    pub fn to_world(&self, v: Vec3) -> Vec3 {
        self.position + self.rotation.mul_vec(v)
    }
}

/// World position expressed in the reference object's coordinate system:
/// `R_ref^-1 * (p - p_ref)`.
pub fn relative_position(p_obj: Vec3, reference: &Pose) -> Vec3 {
    reference.rotation.transpose().mul_vec(p_obj - reference.position)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PositionInterp {
    #[default]
    Cartesian,
    /// Interpolate radius, azimuth and elevation about the origin. Azimuth
    /// takes the shorter arc; exact 180-degree ties go in the positive
    /// direction.
    Spherical,
}

/// Sampled position/orientation over time. Sample times are strictly
/// increasing; times outside the sampled range clamp to the end samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    positions: Vec<(f64, Vec3)>,
    orientations: Vec<(f64, Euler)>,
    interp: PositionInterp,
}

fn check_monotonic<T>(samples: &[(f64, T)]) -> Result<(), GeometryError> {
    for pair in samples.windows(2) {
        if pair[1].0 <= pair[0].0 {
            return Err(GeometryError::NonMonotonicTimes(pair[1].0));
        }
    }
    Ok(())
}

impl Trajectory {
    pub fn new(
        positions: Vec<(f64, Vec3)>,
        orientations: Vec<(f64, Euler)>,
        interp: PositionInterp,
    ) -> Result<Trajectory, GeometryError> {
        if positions.is_empty() {
            return Err(GeometryError::EmptyTrajectory);
        }
        check_monotonic(&positions)?;
        check_monotonic(&orientations)?;
        Ok(Trajectory { positions, orientations, interp })
    }

    /// Constant pose for static objects.
    pub fn fixed(position: Vec3, orientation: Euler) -> Trajectory {
        Trajectory {
            positions: vec![(0.0, position)],
            orientations: vec![(0.0, orientation)],
            interp: PositionInterp::Cartesian,
        }
    }

    pub fn position_samples(&self) -> &[(f64, Vec3)] {
        &self.positions
    }

    pub fn orientation_samples(&self) -> &[(f64, Euler)] {
        &self.orientations
    }

    pub fn interp_mode(&self) -> PositionInterp {
        self.interp
    }

    pub fn end_time(&self) -> f64 {
        let pt = self.positions.last().map(|s| s.0).unwrap_or(0.0);
        let ot = self.orientations.last().map(|s| s.0).unwrap_or(0.0);
        pt.max(ot)
    }

    pub fn interpolate(&self, t: f64) -> Pose {
        let position = self.position_at(t);
        let orientation = self.orientation_at(t);
        Pose::new(position, orientation)
    }

    pub fn position_at(&self, t: f64) -> Vec3 {
        match segment(&self.positions, t) {
            Segment::Exact(p) => p,
            Segment::Between(a, b, u) => match self.interp {
                PositionInterp::Cartesian => lerp_vec(a, b, u),
                PositionInterp::Spherical => slerp_spherical(a, b, u),
            },
        }
    }

    pub fn orientation_at(&self, t: f64) -> Euler {
        if self.orientations.is_empty() {
            return Euler::IDENTITY;
        }
        match segment(&self.orientations, t) {
            Segment::Exact(e) => e,
            Segment::Between(a, b, u) => Euler::new(
                a.z + (b.z - a.z) * u,
                a.y + (b.y - a.y) * u,
                a.x + (b.x - a.x) * u,
            ),
        }
    }
}

enum Segment<T> {
    Exact(T),
    Between(T, T, f64),
}

fn segment<T: Copy>(samples: &[(f64, T)], t: f64) -> Segment<T> {
    let first = samples[0];
    if t <= first.0 {
        return Segment::Exact(first.1);
    }
    let last = samples[samples.len() - 1];
    if t >= last.0 {
        return Segment::Exact(last.1);
    }
    // Binary search for the segment containing t.
    let idx = samples.partition_point(|s| s.0 <= t);
    let (t0, a) = samples[idx - 1];
    let (t1, b) = samples[idx];
    if t == t0 {
        return Segment::Exact(a);
    }
    Segment::Between(a, b, (t - t0) / (t1 - t0))
}

fn lerp_vec(a: Vec3, b: Vec3, u: f64) -> Vec3 {
    a + (b - a) * u
}

fn slerp_spherical(a: Vec3, b: Vec3, u: f64) -> Vec3 {
    let (ra, aza, ela) = (a.norm(), a.azimuth(), a.elevation());
    let (rb, azb, elb) = (b.norm(), b.azimuth(), b.elevation());
    let r = ra + (rb - ra) * u;
    let el = ela + (elb - ela) * u;
    let az = aza + wrap_angle(azb - aza) * u;
    Vec3::from_spherical(r, az, el)
}

/// Wrap into (-pi, pi]; an exact pi difference stays +pi.
pub fn wrap_angle(a: f64) -> f64 {
    let mut a = a % (2.0 * PI);
    if a > PI {
        a -= 2.0 * PI;
    } else if a <= -PI {
        a += 2.0 * PI;
    }
    a
}

/// Planar polygon with a unit face normal (Newell orientation, vertices
/// counter-clockwise about it) and an in-plane orthonormal basis.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanarPolygon {
    vertices: Vec<Vec3>,
    normal: Vec3,
    origin: Vec3,
    basis_u: Vec3,
    basis_v: Vec3,
}

// Points closer than this to a polygon edge count as inside, so edge
// classification stays continuous across the boundary.
const EDGE_TOLERANCE: f64 = 1e-9;

impl PlanarPolygon {
    pub fn new(vertices: Vec<Vec3>) -> Result<PlanarPolygon, GeometryError> {
        if vertices.len() < 3 {
            return Err(GeometryError::TooFewVertices(vertices.len()));
        }
        let normal = newell_normal(&vertices);
        if normal.norm() == 0.0 {
            return Err(GeometryError::DegeneratePolygon);
        }
        let normal = normal.normalized();
        let origin = vertices[0];
        let basis_u = (vertices[1] - vertices[0]).normalized();
        let basis_v = normal.cross(basis_u);
        Ok(PlanarPolygon { vertices, normal, origin, basis_u, basis_v })
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn normal(&self) -> Vec3 {
        self.normal
    }

    pub fn area(&self) -> f64 {
        newell_normal(&self.vertices).norm()
    }

    /// Largest out-of-plane vertex deviation, for coplanarity validation.
    pub fn coplanarity_residual(&self) -> f64 {
        let centroid = self
            .vertices
            .iter()
            .fold(Vec3::ZERO, |acc, &v| acc + v * (1.0 / self.vertices.len() as f64));
        self.vertices
            .iter()
            .map(|&v| (v - centroid).dot(self.normal).abs())
            .fold(0.0, f64::max)
    }

    /// Signed distance to the (infinite) plane, positive on the normal side.
    pub fn plane_distance(&self, p: Vec3) -> f64 {
        (p - self.origin).dot(self.normal)
    }

    /// Closest point on the infinite plane.
    pub fn project_to_plane(&self, p: Vec3) -> Vec3 {
        p - self.normal * self.plane_distance(p)
    }

    fn plane_coords(&self, p: Vec3) -> (f64, f64) {
        let d = p - self.origin;
        (d.dot(self.basis_u), d.dot(self.basis_v))
    }

    /// Whether a point already on the plane lies inside the polygon
    /// (winding number; points on the boundary count as inside).
    pub fn contains(&self, p: Vec3) -> bool {
        let (px, py) = self.plane_coords(p);
        let mut winding = 0i32;
        let n = self.vertices.len();
        for i in 0..n {
            let (ax, ay) = self.plane_coords(self.vertices[i]);
            let (bx, by) = self.plane_coords(self.vertices[(i + 1) % n]);
            // On-edge check with tolerance.
            if point_near_segment_2d(px, py, ax, ay, bx, by, EDGE_TOLERANCE) {
                return true;
            }
            if ay <= py {
                if by > py && cross_2d(bx - ax, by - ay, px - ax, py - ay) > 0.0 {
                    winding += 1;
                }
            } else if by <= py && cross_2d(bx - ax, by - ay, px - ax, py - ay) < 0.0 {
                winding -= 1;
            }
        }
        winding != 0
    }

    /// Closest point to `p` on the polygon boundary.
    pub fn closest_boundary_point(&self, p: Vec3) -> Vec3 {
        let n = self.vertices.len();
        let mut best = self.vertices[0];
        let mut best_d = f64::INFINITY;
        for i in 0..n {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            let q = closest_point_on_segment(p, a, b);
            let d = (q - p).norm_squared();
            if d < best_d {
                best_d = d;
                best = q;
            }
        }
        best
    }

    /// Intersection of the segment a-b with the plane, if the segment
    /// properly crosses it (no intersection when parallel).
    pub fn segment_plane_intersection(&self, a: Vec3, b: Vec3) -> Option<Vec3> {
        let da = self.plane_distance(a);
        let db = self.plane_distance(b);
        if da == db {
            return None; // parallel to the plane
        }
        let t = da / (da - db);
        if !(0.0..=1.0).contains(&t) {
            return None;
        }
        Some(a + (b - a) * t)
    }

    /// Whether the segment a-b passes through the polygon interior.
    pub fn segment_intersects(&self, a: Vec3, b: Vec3) -> bool {
        match self.segment_plane_intersection(a, b) {
            Some(p) => self.contains(p),
            None => false,
        }
    }
}

fn newell_normal(vertices: &[Vec3]) -> Vec3 {
    let mut n = Vec3::ZERO;
    for i in 0..vertices.len() {
        let a = vertices[i];
        let b = vertices[(i + 1) % vertices.len()];
        n.x += (a.y - b.y) * (a.z + b.z);
        n.y += (a.z - b.z) * (a.x + b.x);
        n.z += (a.x - b.x) * (a.y + b.y);
    }
    n * 0.5
}

fn cross_2d(ax: f64, ay: f64, bx: f64, by: f64) -> f64 {
    ax * by - ay * bx
}

fn point_near_segment_2d(
    px: f64,
    py: f64,
    ax: f64,
    ay: f64,
    bx: f64,
    by: f64,
    tol: f64,
) -> bool {
    let (ex, ey) = (bx - ax, by - ay);
    let len_sq = ex * ex + ey * ey;
    let t = if len_sq > 0.0 {
        (((px - ax) * ex + (py - ay) * ey) / len_sq).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let (qx, qy) = (ax + ex * t, ay + ey * t);
    let (dx, dy) = (px - qx, py - qy);
    dx * dx + dy * dy <= tol * tol
}

pub fn closest_point_on_segment(p: Vec3, a: Vec3, b: Vec3) -> Vec3 {
    let e = b - a;
    let len_sq = e.norm_squared();
    if len_sq == 0.0 {
        return a;
    }
    let t = ((p - a).dot(e) / len_sq).clamp(0.0, 1.0);
    a + e * t
}
