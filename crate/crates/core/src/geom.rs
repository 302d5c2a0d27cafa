//! Points and vectors in R, R^2 and on the circle, stored as `[f64; 2]`.
//! One-dimensional carriers use the first coordinate and keep the second at 0.

pub type Point = [f64; 2];

pub const TAU: f64 = std::f64::consts::TAU;

#[inline]
pub fn pt1(x: f64) -> Point {
    [x, 0.0]
}

#[inline]
pub fn add(a: Point, b: Point) -> Point {
    [a[0] + b[0], a[1] + b[1]]
}

#[inline]
pub fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
pub fn scale(a: Point, c: f64) -> Point {
    [a[0] * c, a[1] * c]
}

#[inline]
pub fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
pub fn norm(a: Point) -> f64 {
    a[0].hypot(a[1])
}

#[inline]
pub fn lerp(a: Point, b: Point, t: f64) -> Point {
    [a[0] + (b[0] - a[0]) * t, a[1] + (b[1] - a[1]) * t]
}

/// Symmetric 2x2 matrix `[[a, b], [b, c]]` applied to `v`.
#[inline]
pub fn mat_vec(m: [[f64; 2]; 2], v: Point) -> Point {
    [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
}

pub fn det(m: [[f64; 2]; 2]) -> f64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

pub fn inverse(m: [[f64; 2]; 2]) -> Option<[[f64; 2]; 2]> {
    let d = det(m);
    if d == 0.0 || !d.is_finite() {
        return None;
    }
    Some([[m[1][1] / d, -m[0][1] / d], [-m[1][0] / d, m[0][0] / d]])
}

/// Eigenvalues of a symmetric 2x2 matrix, ascending.
pub fn sym_eigenvalues(m: [[f64; 2]; 2]) -> (f64, f64) {
    let a = m[0][0];
    let c = m[1][1];
    let b = 0.5 * (m[0][1] + m[1][0]);
    let mean = 0.5 * (a + c);
    let r = (0.5 * (a - c)).hypot(b);
    (mean - r, mean + r)
}

/// Wraps an angle into `[0, 2π)`.
pub fn wrap_angle(t: f64) -> f64 {
    let r = t.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigenvalues_of_diagonal() {
        assert_eq!(sym_eigenvalues([[2.0, 0.0], [0.0, 5.0]]), (2.0, 5.0));
        let (lo, hi) = sym_eigenvalues([[2.0, 1.0], [1.0, 2.0]]);
        assert!((lo - 1.0).abs() < 1e-15 && (hi - 3.0).abs() < 1e-15);
    }

    #[test]
    fn inverse_roundtrip() {
        let m = [[2.0, 1.0], [1.0, 3.0]];
        let inv = inverse(m).unwrap();
        let v = mat_vec(m, mat_vec(inv, [0.3, -0.7]));
        assert!((v[0] - 0.3).abs() < 1e-15 && (v[1] + 0.7).abs() < 1e-15);
        assert!(inverse([[1.0, 2.0], [2.0, 4.0]]).is_none());
    }

    #[test]
    fn wraps_negative_angles() {
        assert!((wrap_angle(-0.5) - (TAU - 0.5)).abs() < 1e-15);
        assert_eq!(wrap_angle(TAU), 0.0);
    }
}
