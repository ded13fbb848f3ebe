//! Adaptive quadrature and the special functions used as cross-checks.
//!
//! The workhorse is adaptive Simpson with Richardson acceptance; the
//! two-sphere integrator nests it in spherical angles. Carlson's symmetric
//! elliptic integrals give closed forms for spheroid and ellipsoid areas
//! that the quadrature results are tested against.

use crate::scalar::{c, Real};

/// Adaptive Simpson integration of `f` over `[a, b]` to the given relative
/// tolerance (floored by a tiny absolute tolerance so zero integrals finish).
pub fn adaptive_simpson<T: Real, F: Fn(T) -> T>(f: &F, a: T, b: T, rel_tol: T) -> T {
    let half = c::<T>(0.5);
    let m = (a + b) * half;
    let fa = f(a);
    let fb = f(b);
    let fm = f(m);
    let whole = simpson(a, b, fa, fm, fb);
    let lm = (a + m) * half;
    let rm = (m + b) * half;
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    // The error budget scales with the composite estimate of |f|, not the
    // signed integral: an integrand that happens to vanish on the three
    // coarse nodes (odd moments, symmetric zeros) must not collapse the
    // tolerance to the absolute floor and force a full-depth descent.
    let four = c::<T>(4.0);
    let l1 = (b - a).abs() / c::<T>(12.0)
        * (fa.abs() + four * flm.abs() + c::<T>(2.0) * fm.abs() + four * frm.abs() + fb.abs());
    let scale = whole.abs().max((left + right).abs()).max(l1);
    let eps = (rel_tol * scale).max(c::<T>(1e-300));
    let eps_half = eps * half;
    simpson_rec(f, a, fa, m, fm, lm, flm, left, eps_half, 47)
        + simpson_rec(f, m, fm, b, fb, rm, frm, right, eps_half, 47)
}

fn simpson<T: Real>(a: T, b: T, fa: T, fm: T, fb: T) -> T {
    (b - a) / c::<T>(6.0) * (fa + c::<T>(4.0) * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec<T: Real, F: Fn(T) -> T>(
    f: &F,
    a: T,
    fa: T,
    b: T,
    fb: T,
    m: T,
    fm: T,
    whole: T,
    eps: T,
    depth: u32,
) -> T {
    let lm = (a + m) * c::<T>(0.5);
    let rm = (m + b) * c::<T>(0.5);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= c::<T>(15.0) * eps {
        // Richardson extrapolation of the two half-panels.
        return left + right + delta / c::<T>(15.0);
    }
    let half = eps * c::<T>(0.5);
    simpson_rec(f, a, fa, m, fm, lm, flm, left, half, depth - 1)
        + simpson_rec(f, m, fm, b, fb, rm, frm, right, half, depth - 1)
}

/// Integral of `f` over the unit two-sphere with the round area element,
/// via nested adaptive Simpson in colatitude/longitude.
pub fn integrate_sphere2<T: Real, F: Fn([T; 3]) -> T>(f: &F, rel_tol: T) -> T {
    let pi = T::PI();
    let two_pi = pi * c::<T>(2.0);
    let inner_tol = rel_tol * c::<T>(0.125);
    let g = |theta: T| {
        let (st, ct) = (theta.sin(), theta.cos());
        let ring = adaptive_simpson(
            &|phi: T| f([st * phi.cos(), st * phi.sin(), ct]),
            T::zero(),
            two_pi,
            inner_tol,
        );
        ring * st
    };
    adaptive_simpson(&g, T::zero(), pi, rel_tol)
}

/// Surface area of the ellipsoid `x^2/a^2 + y^2/b^2 + z^2/c^2 = 1` by the
/// support-function integral `abc * int_{S^2} sqrt(sum s_i^2 / a_i^2) dS`.
/// No ordering constraint on the axes.
pub fn ellipsoid_area3<T: Real>(axes: [T; 3], rel_tol: T) -> T {
    let vol = axes[0] * axes[1] * axes[2];
    let inv2 = [
        T::one() / (axes[0] * axes[0]),
        T::one() / (axes[1] * axes[1]),
        T::one() / (axes[2] * axes[2]),
    ];
    let f = |s: [T; 3]| (s[0] * s[0] * inv2[0] + s[1] * s[1] * inv2[1] + s[2] * s[2] * inv2[2]).sqrt();
    vol * integrate_sphere2(&f, rel_tol)
}

/// Arc length of the ellipse with semiaxes `a`, `b`.
pub fn ellipse_perimeter<T: Real>(a: T, b: T, rel_tol: T) -> T {
    let f = |t: T| {
        let (s, co) = (t.sin(), t.cos());
        (a * a * s * s + b * b * co * co).sqrt()
    };
    adaptive_simpson(&f, T::zero(), T::PI() * c::<T>(2.0), rel_tol)
}

/// Ramanujan's second approximation to the ellipse perimeter; relative
/// error below 1e-9 for aspect ratios up to about 3.
pub fn ellipse_perimeter_ramanujan<T: Real>(a: T, b: T) -> T {
    let h = (a - b) * (a - b) / ((a + b) * (a + b));
    let three = c::<T>(3.0);
    T::PI() * (a + b) * (T::one() + three * h / (c::<T>(10.0) + (c::<T>(4.0) - three * h).sqrt()))
}

/// Carlson's symmetric integral `R_F(x, y, z)` by the duplication theorem.
pub fn carlson_rf(x: f64, y: f64, z: f64) -> f64 {
    assert!(x >= 0.0 && y >= 0.0 && z >= 0.0, "R_F needs nonnegative arguments");
    let (mut xt, mut yt, mut zt) = (x, y, z);
    let (mut ave, mut dx, mut dy, mut dz);
    loop {
        let lam = xt.sqrt() * yt.sqrt() + xt.sqrt() * zt.sqrt() + yt.sqrt() * zt.sqrt();
        xt = 0.25 * (xt + lam);
        yt = 0.25 * (yt + lam);
        zt = 0.25 * (zt + lam);
        ave = (xt + yt + zt) / 3.0;
        dx = (ave - xt) / ave;
        dy = (ave - yt) / ave;
        dz = (ave - zt) / ave;
        if dx.abs().max(dy.abs()).max(dz.abs()) < 0.0025 {
            break;
        }
    }
    let e2 = dx * dy - dz * dz;
    let e3 = dx * dy * dz;
    (1.0 + (e2 / 24.0 - 0.1 - 3.0 * e3 / 44.0) * e2 + e3 / 14.0) / ave.sqrt()
}

/// Carlson's symmetric integral `R_D(x, y, z)` by the duplication theorem.
pub fn carlson_rd(x: f64, y: f64, z: f64) -> f64 {
    assert!(x >= 0.0 && y >= 0.0 && z > 0.0, "R_D needs z > 0");
    let (mut xt, mut yt, mut zt) = (x, y, z);
    let mut sum = 0.0;
    let mut fac = 1.0;
    let (mut ave, mut dx, mut dy, mut dz);
    loop {
        let lam = xt.sqrt() * yt.sqrt() + xt.sqrt() * zt.sqrt() + yt.sqrt() * zt.sqrt();
        sum += fac / (zt.sqrt() * (zt + lam));
        fac *= 0.25;
        xt = 0.25 * (xt + lam);
        yt = 0.25 * (yt + lam);
        zt = 0.25 * (zt + lam);
        ave = 0.2 * (xt + yt + 3.0 * zt);
        dx = (ave - xt) / ave;
        dy = (ave - yt) / ave;
        dz = (ave - zt) / ave;
        if dx.abs().max(dy.abs()).max(dz.abs()) < 0.0015 {
            break;
        }
    }
    let ea = dx * dy;
    let eb = dz * dz;
    let ec = ea - eb;
    let ed = ea - 6.0 * eb;
    let ee = ed + ec + ec;
    3.0 * sum
        + fac
            * (1.0
                + ed * (-3.0 / 14.0 + 9.0 / 88.0 * ed - 4.5 / 26.0 * dz * ee)
                + dz * (ee / 6.0 + dz * (-9.0 / 22.0 * ec + dz * 3.0 / 26.0 * ea)))
            / (ave * ave.sqrt())
}

/// Closed-form ellipsoid surface area (Legendre form through Carlson
/// integrals). Requires strictly ordered axes `a > b > c > 0`.
pub fn ellipsoid_area_carlson(a: f64, b: f64, c: f64) -> f64 {
    assert!(a > b && b > c && c > 0.0, "Carlson area formula needs a > b > c > 0");
    let phi = (c / a).acos();
    let (sp, cp) = (phi.sin(), phi.cos());
    let k2 = a * a * (b * b - c * c) / (b * b * (a * a - c * c));
    let q = 1.0 - k2 * sp * sp;
    let ff = sp * carlson_rf(cp * cp, q, 1.0);
    let ee = ff - k2 * sp * sp * sp / 3.0 * carlson_rd(cp * cp, q, 1.0);
    let pi = std::f64::consts::PI;
    2.0 * pi * c * c + 2.0 * pi * a * b / sp * (ee * sp * sp + ff * cp * cp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn simpson_handles_smooth_integrands() {
        let v = adaptive_simpson(&|x: f64| x * x * x - 2.0 * x, 0.0, 2.0, 1e-12);
        assert_relative_eq!(v, 0.0, epsilon = 1e-12);
        let v = adaptive_simpson(&f64::sin, 0.0, std::f64::consts::PI, 1e-12);
        assert_relative_eq!(v, 2.0, epsilon = 1e-11);
        let v = adaptive_simpson(&|x: f64| (-x).exp(), 0.0, 30.0, 1e-10);
        assert_relative_eq!(v, 1.0 - (-30.0f64).exp(), max_relative = 1e-9);
    }

    #[test]
    fn sphere_integrator_recovers_area_and_moments() {
        let area = integrate_sphere2(&|_s: [f64; 3]| 1.0, 1e-10);
        assert_relative_eq!(area, 4.0 * std::f64::consts::PI, max_relative = 1e-10);
        // int z^2 dS = 4 pi / 3.
        let zz = integrate_sphere2(&|s: [f64; 3]| s[2] * s[2], 1e-10);
        assert_relative_eq!(zz, 4.0 * std::f64::consts::PI / 3.0, max_relative = 1e-9);
    }

    #[test]
    fn unit_sphere_area() {
        let a = ellipsoid_area3([1.0, 1.0, 1.0], 1e-10);
        assert_relative_eq!(a, 4.0 * std::f64::consts::PI, max_relative = 1e-10);
    }

    #[test]
    fn prolate_spheroid_matches_closed_form() {
        // Semiaxes (2, 1, 1): area = 2 pi (1 + 4 pi / (3 sqrt 3)).
        let pi = std::f64::consts::PI;
        let exact = 2.0 * pi * (1.0 + 4.0 * pi / (3.0 * 3.0f64.sqrt()));
        let a = ellipsoid_area3([2.0, 1.0, 1.0], 1e-9);
        assert_relative_eq!(a, exact, max_relative = 1e-8);
    }

    #[test]
    fn triaxial_area_matches_carlson_form() {
        for axes in [[2.0, 1.5, 1.2], [4.0, 1.5, 1.2], [1.5, 1.2, 1.0]] {
            let quad = ellipsoid_area3(axes, 1e-9);
            let closed = ellipsoid_area_carlson(axes[0], axes[1], axes[2]);
            assert_relative_eq!(quad, closed, max_relative = 1e-8);
        }
    }

    #[test]
    fn carlson_rf_special_values() {
        // R_F(0, y, y) = pi / (2 sqrt y).
        let pi = std::f64::consts::PI;
        assert_relative_eq!(carlson_rf(0.0, 1.0, 1.0), pi / 2.0, max_relative = 1e-12);
        assert_relative_eq!(carlson_rf(0.0, 4.0, 4.0), pi / 4.0, max_relative = 1e-12);
        // R_F(x, x, x) = x^{-1/2}.
        assert_relative_eq!(carlson_rf(2.0, 2.0, 2.0), 1.0 / 2.0f64.sqrt(), max_relative = 1e-12);
        // R_D(x, x, x) = x^{-3/2}.
        assert_relative_eq!(carlson_rd(2.0, 2.0, 2.0), 2.0f64.powf(-1.5), max_relative = 1e-12);
    }

    #[test]
    fn ellipse_perimeter_against_ramanujan() {
        for (a, b) in [(1.2, 1.0), (1.5, 1.0), (2.0, 1.0)] {
            let exact = ellipse_perimeter(a, b, 1e-12);
            let approx = ellipse_perimeter_ramanujan(a, b);
            assert_relative_eq!(exact, approx, max_relative = 1e-6);
        }
        // Circle sanity: perimeter 2 pi r.
        assert_relative_eq!(
            ellipse_perimeter(3.0, 3.0, 1e-12),
            6.0 * std::f64::consts::PI,
            max_relative = 1e-10
        );
    }
}
