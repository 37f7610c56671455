use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;

use crate::geom::{cross, dot, norm, sub};
use crate::{Error, Point, Result};

const UNIT_TOL: f64 = 1e-12;
const OUTSIDE_TOL: f64 = 1e-12;

/// The closed half-space `{x : normal·x <= offset}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfSpace {
    pub normal: Point,
    pub offset: f64,
}

impl HalfSpace {
    pub fn new(normal: Point, offset: f64) -> Self {
        Self { normal, offset }
    }

    /// `offset - normal·x`: positive inside, zero on the bounding plane.
    #[inline]
    pub fn slack(&self, x: &Point) -> f64 {
        self.offset - dot(&self.normal, x)
    }
}

/// Geometry of a right prism `P × [z0, z1]` whose lateral faces include two
/// planes through the `x3` axis meeting at the interior angle `omega`.
#[derive(Debug, Clone, PartialEq)]
pub struct Prism {
    pub omega: f64,
    pub lambda: f64,
    /// Base polygon, counter-clockwise, starting at the vertex on the
    /// singular edge (the origin).
    pub base: Vec<[f64; 2]>,
    pub z_range: (f64, f64),
}

impl Prism {
    pub fn base_area(&self) -> f64 {
        let n = self.base.len();
        let mut twice = 0.0;
        for i in 0..n {
            let a = self.base[i];
            let b = self.base[(i + 1) % n];
            twice += a[0] * b[1] - a[1] * b[0];
        }
        0.5 * twice
    }

    pub fn base_perimeter(&self) -> f64 {
        let n = self.base.len();
        (0..n)
            .map(|i| {
                let a = self.base[i];
                let b = self.base[(i + 1) % n];
                ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt()
            })
            .sum()
    }

    pub fn height(&self) -> f64 {
        self.z_range.1 - self.z_range.0
    }
}

/// A bounded convex polyhedron given as an intersection of half-spaces.
///
/// Face ids used by [`crate::mesh::Mesh`] are indices into
/// [`HalfSpaceDomain::halfspaces`].
#[derive(Debug, Clone, PartialEq)]
pub struct HalfSpaceDomain {
    halfspaces: Vec<HalfSpace>,
    prism: Option<Prism>,
}

impl HalfSpaceDomain {
    /// A general convex polyhedron. Normals must have unit length.
    pub fn new(halfspaces: Vec<HalfSpace>) -> Result<Self> {
        if halfspaces.len() < 4 {
            return Err(Error::Domain(format!(
                "a bounded polyhedron needs at least 4 half-spaces, got {}",
                halfspaces.len()
            )));
        }
        for (i, hs) in halfspaces.iter().enumerate() {
            let len = norm(&hs.normal);
            if (len - 1.0).abs() > UNIT_TOL {
                return Err(Error::Domain(format!("normal {i} has length {len}")));
            }
        }
        Ok(Self {
            halfspaces,
            prism: None,
        })
    }

    /// The benchmark prism `((-1,1)² ∩ {0 < φ < ω}) × (0,1)`.
    ///
    /// Face ids: 0 `x2 = 0`, 1 `x1 = 1`, 2 `x2 = 1`, 3 the plane `φ = ω`,
    /// 4 `x3 = 0`, 5 `x3 = 1`, and for `ω > 3π/4` also 6 `x1 = -1`.
    pub fn benchmark(omega: f64) -> Result<Self> {
        check_angle(omega)?;
        let (s, c) = omega.sin_cos();
        // cos(π/2) is not exactly zero in floating point.
        let c = if c.abs() < 1e-15 { 0.0 } else { c };
        let mut hs = alloc::vec![
            HalfSpace::new([0.0, -1.0, 0.0], 0.0),
            HalfSpace::new([1.0, 0.0, 0.0], 1.0),
            HalfSpace::new([0.0, 1.0, 0.0], 1.0),
            HalfSpace::new([-s, c, 0.0], 0.0),
            HalfSpace::new([0.0, 0.0, -1.0], 0.0),
            HalfSpace::new([0.0, 0.0, 1.0], 1.0),
        ];
        // The slanted plane leaves the square through x1 = -1 past 3π/4.
        if c / s < -1.0 - 1e-12 {
            hs.push(HalfSpace::new([-1.0, 0.0, 0.0], 1.0));
        }
        Self::prism(hs)
    }

    /// A right prism: lateral faces parallel to `x3`, one bottom and one top
    /// cap, and exactly two lateral planes through the `x3` axis.
    pub fn prism(halfspaces: Vec<HalfSpace>) -> Result<Self> {
        let mut domain = Self::new(halfspaces)?;
        domain.prism = Some(prism_geometry(&domain.halfspaces)?);
        Ok(domain)
    }

    /// The tetrahedron spanned by four affinely independent points.
    pub fn tetrahedron(p: [Point; 4]) -> Result<Self> {
        let mut hs = Vec::with_capacity(4);
        for k in 0..4 {
            let f: Vec<&Point> = (0..4).filter(|&i| i != k).map(|i| &p[i]).collect();
            let n = cross(&sub(f[1], f[0]), &sub(f[2], f[0]));
            let len = norm(&n);
            if len < 1e-300 {
                return Err(Error::Domain("degenerate tetrahedron".into()));
            }
            let mut n = [n[0] / len, n[1] / len, n[2] / len];
            let mut b = dot(&n, f[0]);
            if dot(&n, &p[k]) > b {
                n = [-n[0], -n[1], -n[2]];
                b = -b;
            }
            hs.push(HalfSpace::new(n, b));
        }
        Self::new(hs)
    }

    pub fn halfspaces(&self) -> &[HalfSpace] {
        &self.halfspaces
    }

    pub fn prism_geometry(&self) -> Option<&Prism> {
        self.prism.as_ref()
    }

    /// Interior angle at the singular edge, for prism domains.
    pub fn omega(&self) -> Option<f64> {
        self.prism.as_ref().map(|p| p.omega)
    }

    /// Critical exponent `π / ω`, for prism domains.
    pub fn lambda(&self) -> Option<f64> {
        self.prism.as_ref().map(|p| p.lambda)
    }

    /// Exact distance to the boundary of the convex domain.
    pub fn distance_to_boundary(&self, x: &Point) -> Result<f64> {
        let d = self.signed_distance(x);
        if d < -OUTSIDE_TOL {
            return Err(Error::OutsideDomain(d));
        }
        Ok(d.max(0.0))
    }

    /// `min_i (b_i - a_i·x)`, negative outside.
    pub fn signed_distance(&self, x: &Point) -> f64 {
        self.halfspaces
            .iter()
            .map(|h| h.slack(x))
            .fold(f64::INFINITY, f64::min)
    }

    /// Index of the bounding plane that contains all of `points`, if any.
    pub fn face_containing(&self, points: &[&Point], tol: f64) -> Option<usize> {
        self.halfspaces
            .iter()
            .position(|h| points.iter().all(|p| h.slack(p).abs() <= tol))
    }

    /// Volume, when the domain is a prism.
    pub fn volume(&self) -> Option<f64> {
        self.prism.as_ref().map(|p| p.base_area() * p.height())
    }

    /// Surface area, when the domain is a prism.
    pub fn surface_area(&self) -> Option<f64> {
        self.prism
            .as_ref()
            .map(|p| 2.0 * p.base_area() + p.base_perimeter() * p.height())
    }
}

fn check_angle(omega: f64) -> Result<()> {
    if !(PI / 2.0 - 1e-12..PI).contains(&omega) {
        return Err(Error::Domain(format!(
            "edge angle {omega} outside [π/2, π)"
        )));
    }
    Ok(())
}

fn prism_geometry(hs: &[HalfSpace]) -> Result<Prism> {
    let mut bottom = None;
    let mut top = None;
    let mut lateral = Vec::new();
    for h in hs {
        let n = h.normal;
        if n[2].abs() <= UNIT_TOL {
            lateral.push([n[0], n[1], h.offset]);
        } else if (n[2] + 1.0).abs() <= UNIT_TOL && bottom.is_none() {
            bottom = Some(-h.offset);
        } else if (n[2] - 1.0).abs() <= UNIT_TOL && top.is_none() {
            top = Some(h.offset);
        } else {
            return Err(Error::Domain(
                "prism faces must be lateral or a single bottom/top cap".into(),
            ));
        }
    }
    let (Some(z0), Some(z1)) = (bottom, top) else {
        return Err(Error::Domain("prism needs a bottom and a top cap".into()));
    };
    if z1 <= z0 {
        return Err(Error::Domain("prism caps enclose an empty slab".into()));
    }

    let through_axis: Vec<&[f64; 3]> = lateral.iter().filter(|l| l[2].abs() <= UNIT_TOL).collect();
    if through_axis.len() != 2 {
        return Err(Error::Domain(format!(
            "expected exactly two lateral planes through the x3 axis, found {}",
            through_axis.len()
        )));
    }
    let cos_normals = through_axis[0][0] * through_axis[1][0] + through_axis[0][1] * through_axis[1][1];
    let omega = PI - cos_normals.clamp(-1.0, 1.0).acos();
    check_angle(omega)?;

    // Vertices of the base polygon: pairwise line intersections that satisfy
    // every lateral constraint.
    let tol = 1e-10;
    let mut verts: Vec<[f64; 2]> = Vec::new();
    for i in 0..lateral.len() {
        for j in i + 1..lateral.len() {
            let (a, b) = (lateral[i], lateral[j]);
            let det = a[0] * b[1] - a[1] * b[0];
            if det.abs() < 1e-14 {
                continue;
            }
            let p = [
                (a[2] * b[1] - a[1] * b[2]) / det,
                (a[0] * b[2] - a[2] * b[0]) / det,
            ];
            let inside = lateral.iter().all(|l| l[2] - l[0] * p[0] - l[1] * p[1] >= -tol);
            let fresh = verts
                .iter()
                .all(|q| (q[0] - p[0]).abs() > tol || (q[1] - p[1]).abs() > tol);
            if inside && fresh {
                verts.push(p);
            }
        }
    }
    if verts.len() < 3 {
        return Err(Error::Domain("lateral half-spaces do not bound a polygon".into()));
    }
    // Every lateral line must carry an edge; otherwise the base is unbounded
    // or a constraint is redundant.
    for l in &lateral {
        let on = verts
            .iter()
            .filter(|p| (l[2] - l[0] * p[0] - l[1] * p[1]).abs() <= tol)
            .count();
        if on < 2 {
            return Err(Error::Domain(
                "lateral half-space does not carry an edge of the base".into(),
            ));
        }
    }
    let n = verts.len() as f64;
    let cx = verts.iter().map(|p| p[0]).sum::<f64>() / n;
    let cy = verts.iter().map(|p| p[1]).sum::<f64>() / n;
    verts.sort_by(|p, q| {
        let ap = (p[1] - cy).atan2(p[0] - cx);
        let aq = (q[1] - cy).atan2(q[0] - cx);
        ap.total_cmp(&aq)
    });
    let origin = verts
        .iter()
        .position(|p| p[0].abs() <= tol && p[1].abs() <= tol)
        .ok_or_else(|| Error::Domain("base polygon does not contain the origin".into()))?;
    verts.rotate_left(origin);

    Ok(Prism {
        omega,
        lambda: PI / omega,
        base: verts,
        z_range: (z0, z1),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn benchmark_bases_match_the_figure() {
        let d = HalfSpaceDomain::benchmark(PI / 2.0).unwrap();
        assert_eq!(
            d.prism_geometry().unwrap().base,
            alloc::vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]
        );
        let d = HalfSpaceDomain::benchmark(2.0 * PI / 3.0).unwrap();
        let v = d.prism_geometry().unwrap().base[3];
        assert_abs_diff_eq!(v[0], -0.57735026919, epsilon = 1e-11);
        assert_abs_diff_eq!(v[1], 1.0, epsilon = 1e-14);
        let d = HalfSpaceDomain::benchmark(3.0 * PI / 4.0).unwrap();
        let p = d.prism_geometry().unwrap();
        assert_abs_diff_eq!(p.base[3][0], -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(d.volume().unwrap(), 1.5, epsilon = 1e-12);
        assert_abs_diff_eq!(p.omega, 3.0 * PI / 4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.lambda, 4.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn wide_angles_gain_a_fifth_vertex() {
        let d = HalfSpaceDomain::benchmark(0.9 * PI).unwrap();
        let p = d.prism_geometry().unwrap();
        assert_eq!(p.base.len(), 5);
        assert_eq!(d.halfspaces().len(), 7);
    }

    #[test]
    fn invalid_angles_are_rejected() {
        for omega in [0.4 * PI, PI, 1.2 * PI, f64::NAN] {
            assert!(matches!(
                HalfSpaceDomain::benchmark(omega),
                Err(Error::Domain(_))
            ));
        }
    }

    #[test]
    fn non_unit_normals_are_rejected() {
        let mut hs = HalfSpaceDomain::benchmark(PI / 2.0).unwrap().halfspaces().to_vec();
        hs[1].normal[0] = 1.0 + 1e-9;
        assert!(HalfSpaceDomain::new(hs).is_err());
    }

    #[test]
    fn user_prism_recovers_the_angle() {
        let omega = 0.6 * PI;
        let hs = HalfSpaceDomain::benchmark(omega).unwrap().halfspaces().to_vec();
        let d = HalfSpaceDomain::prism(hs).unwrap();
        assert_abs_diff_eq!(d.omega().unwrap(), omega, epsilon = 1e-12);
    }

    #[test]
    fn distance_in_the_cube() {
        let d = HalfSpaceDomain::benchmark(PI / 2.0).unwrap();
        assert_abs_diff_eq!(d.distance_to_boundary(&[0.5, 0.5, 0.5]).unwrap(), 0.5);
        assert_abs_diff_eq!(d.distance_to_boundary(&[0.25, 0.5, 0.5]).unwrap(), 0.25);
        assert_eq!(d.distance_to_boundary(&[1.0, 0.3, 0.0]).unwrap(), 0.0);
        assert!(matches!(
            d.distance_to_boundary(&[1.1, 0.5, 0.5]),
            Err(Error::OutsideDomain(_))
        ));
    }
}
