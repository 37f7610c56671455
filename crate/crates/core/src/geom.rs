//! Small fixed-size vector helpers.

#[allow(unused_imports)]
use num_traits::Float;

use crate::Point;

#[inline]
pub fn sub(a: &Point, b: &Point) -> Point {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn add(a: &Point, b: &Point) -> Point {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn scale(a: &Point, s: f64) -> Point {
    [a[0] * s, a[1] * s, a[2] * s]
}

#[inline]
pub fn dot(a: &Point, b: &Point) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn cross(a: &Point, b: &Point) -> Point {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
pub fn norm(a: &Point) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn distance(a: &Point, b: &Point) -> f64 {
    norm(&sub(a, b))
}

#[inline]
pub fn midpoint(a: &Point, b: &Point) -> Point {
    scale(&add(a, b), 0.5)
}

/// Signed volume of the tetrahedron `(p0, p1, p2, p3)`; positive when the
/// last three vertices are counter-clockwise seen from the first.
#[inline]
pub fn signed_volume(p: [&Point; 4]) -> f64 {
    let e1 = sub(p[1], p[0]);
    let e2 = sub(p[2], p[0]);
    let e3 = sub(p[3], p[0]);
    dot(&e1, &cross(&e2, &e3)) / 6.0
}

#[inline]
pub fn triangle_area(p: [&Point; 3]) -> f64 {
    0.5 * norm(&cross(&sub(p[1], p[0]), &sub(p[2], p[0])))
}

/// Point with barycentric coordinates `bary` in the simplex spanned by `p`.
#[inline]
pub fn barycentric_point<const N: usize>(p: [&Point; N], bary: &[f64; N]) -> Point {
    let mut x = [0.0; 3];
    for (v, &l) in p.iter().zip(bary) {
        for d in 0..3 {
            x[d] += l * v[d];
        }
    }
    x
}
