//! Planar points and ray intersection in image coordinates (x right, y down).

use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

/// Cross products with magnitude at or below this are treated as parallel rays.
pub const PARALLEL_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 3-D cross product.
    pub fn cross(self, other: Point) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Point) -> f64 {
        (self - other).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl From<[f64; 2]> for Point {
    fn from([x, y]: [f64; 2]) -> Self {
        Self { x, y }
    }
}

impl From<Point> for [f64; 2] {
    fn from(p: Point) -> Self {
        [p.x, p.y]
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, rhs: Point) -> Point {
        Point::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, rhs: Point) -> Point {
        Point::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, rhs: f64) -> Point {
        Point::new(self.x * rhs, self.y * rhs)
    }
}

/// Where two rays meet: `point = o1 + t1·v1 = o2 + t2·v2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayHit {
    pub point: Point,
    pub t1: f64,
    pub t2: f64,
}

/// Intersect the supporting lines of two rays.
///
/// Returns `None` when the directions are parallel or colinear. The sign of
/// the ray parameters is not inspected; callers decide what "in front" means.
pub fn ray_intersection(o1: Point, v1: Point, o2: Point, v2: Point) -> Option<RayHit> {
    let denom = v1.cross(v2);
    if denom.abs() <= PARALLEL_EPS {
        return None;
    }
    let r = o2 - o1;
    let t1 = r.cross(v2) / denom;
    let t2 = r.cross(v1) / denom;
    Some(RayHit {
        point: o1 + v1 * t1,
        t1,
        t2,
    })
}
