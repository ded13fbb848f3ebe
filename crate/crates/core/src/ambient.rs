//! Ambient three-spaces: flat `R^3`, the round three-sphere, and quadric
//! hypersurfaces (four-axis ellipsoids) in flat `R^4`.
//!
//! Points are kept in embedding coordinates: `[x, y, z, 0]` for the flat
//! space, on-manifold `R^4` coordinates otherwise. The designated
//! parametrization for the curved spaces is a pair of overlapping
//! stereographic-type charts whose excluded poles sit on the `x1` axis, so
//! every point (poles included) has a nondegenerate tangent basis in at
//! least one chart.

use crate::error::{MinsurfError, Result};
use crate::scalar::{c, Real};
use serde::{Deserialize, Serialize};

/// Ambient point or vector in embedding coordinates.
pub type V4<T> = [T; 4];

/// Small helpers for `[T; 4]` arithmetic; kept as free functions so the
/// geometry kernels stay readable without pulling matrix traits in.
pub mod vec4 {
    use crate::scalar::Real;

    pub fn dot<T: Real>(a: [T; 4], b: [T; 4]) -> T {
        a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]
    }
    pub fn norm<T: Real>(a: [T; 4]) -> T {
        dot(a, a).sqrt()
    }
    pub fn add<T: Real>(a: [T; 4], b: [T; 4]) -> [T; 4] {
        [a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]]
    }
    pub fn sub<T: Real>(a: [T; 4], b: [T; 4]) -> [T; 4] {
        [a[0] - b[0], a[1] - b[1], a[2] - b[2], a[3] - b[3]]
    }
    pub fn scale<T: Real>(a: [T; 4], s: T) -> [T; 4] {
        [a[0] * s, a[1] * s, a[2] * s, a[3] * s]
    }
    /// a + s b
    pub fn axpy<T: Real>(a: [T; 4], s: T, b: [T; 4]) -> [T; 4] {
        [a[0] + s * b[0], a[1] + s * b[1], a[2] + s * b[2], a[3] + s * b[3]]
    }
    pub fn dist<T: Real>(a: [T; 4], b: [T; 4]) -> T {
        norm(sub(a, b))
    }
    pub fn normalize<T: Real>(a: [T; 4]) -> [T; 4] {
        scale(a, T::one() / norm(a))
    }
}

use vec4::*;

/// The three ambient geometries the pipeline understands.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AmbientSpace<T: Real> {
    /// Flat `R^3`, embedded as the `w = 0` slice of `R^4`.
    Euclidean3,
    /// Round three-sphere of the given radius, centered at the origin of `R^4`.
    RoundSphere3 { radius: T },
    /// `{ sum_i x_i^2 / a_i^2 = 1 }` with strictly ordered semiaxes
    /// `a > b > c > d > 0`.
    Ellipsoid4 { semiaxes: [T; 4] },
}

/// Serialized form of a space spec, `{"kind": ..., ...}`.
#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum SpaceSpec {
    Euclidean3,
    RoundSphere3 { radius: f64 },
    Ellipsoid4 { semiaxes: [f64; 4] },
}

/// Pointwise curvature data returned by [`AmbientSpace::curvature_sample`].
#[derive(Debug, Clone, Copy)]
pub struct CurvatureSample<T: Real> {
    pub point: V4<T>,
    pub direction: V4<T>,
    /// Ricci curvature of the ambient space in the given unit direction.
    pub ricci_nn: T,
    /// Scalar curvature of the ambient space at the point.
    pub scalar: T,
}

/// Endpoint of a geodesic segment together with its (parallel) velocity.
#[derive(Debug, Clone, Copy)]
pub struct GeodesicEnd<T: Real> {
    pub point: V4<T>,
    pub velocity: V4<T>,
}

impl AmbientSpace<f64> {
    /// Parse a JSON space spec such as `{"kind":"ellipsoid4","semiaxes":[4,1.5,1.2,1]}`.
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: SpaceSpec = serde_json::from_str(text)?;
        let space = match spec {
            SpaceSpec::Euclidean3 => AmbientSpace::Euclidean3,
            SpaceSpec::RoundSphere3 { radius } => AmbientSpace::RoundSphere3 { radius },
            SpaceSpec::Ellipsoid4 { semiaxes } => AmbientSpace::Ellipsoid4 { semiaxes },
        };
        space.validate()?;
        Ok(space)
    }

    /// Emit the JSON spec for this space.
    pub fn to_json(&self) -> serde_json::Value {
        match *self {
            AmbientSpace::Euclidean3 => serde_json::json!({"kind": "euclidean3"}),
            AmbientSpace::RoundSphere3 { radius } => {
                serde_json::json!({"kind": "roundsphere3", "radius": radius})
            }
            AmbientSpace::Ellipsoid4 { semiaxes } => {
                serde_json::json!({"kind": "ellipsoid4", "semiaxes": semiaxes})
            }
        }
    }
}

impl<T: Real> AmbientSpace<T> {
    /// Check the structural invariants of the space parameters.
    pub fn validate(&self) -> Result<()> {
        match *self {
            AmbientSpace::Euclidean3 => Ok(()),
            AmbientSpace::RoundSphere3 { radius } => {
                if radius > T::zero() {
                    Ok(())
                } else {
                    Err(MinsurfError::InvalidInput("sphere radius must be positive".into()))
                }
            }
            AmbientSpace::Ellipsoid4 { semiaxes: a } => {
                if a[3] > T::zero() && a[0] > a[1] && a[1] > a[2] && a[2] > a[3] {
                    Ok(())
                } else {
                    Err(MinsurfError::InvalidInput(
                        "ellipsoid semiaxes must satisfy a > b > c > d > 0".into(),
                    ))
                }
            }
        }
    }

    /// Convert the parameters to another scalar type.
    pub fn cast<U: Real>(&self) -> AmbientSpace<U> {
        let f = |x: T| U::of(x.to_f64().unwrap());
        match *self {
            AmbientSpace::Euclidean3 => AmbientSpace::Euclidean3,
            AmbientSpace::RoundSphere3 { radius } => AmbientSpace::RoundSphere3 { radius: f(radius) },
            AmbientSpace::Ellipsoid4 { semiaxes } => AmbientSpace::Ellipsoid4 {
                semiaxes: [f(semiaxes[0]), f(semiaxes[1]), f(semiaxes[2]), f(semiaxes[3])],
            },
        }
    }

    /// Semiaxes of the quadric, treating the round sphere as the equal-axes
    /// case. `None` for the flat space.
    pub fn quadric_axes(&self) -> Option<[T; 4]> {
        match *self {
            AmbientSpace::Euclidean3 => None,
            AmbientSpace::RoundSphere3 { radius } => Some([radius; 4]),
            AmbientSpace::Ellipsoid4 { semiaxes } => Some(semiaxes),
        }
    }

    /// Defect `Q(p) - 1` of the quadric equation; zero for points on the space.
    pub fn quadric_defect(&self, p: V4<T>) -> T {
        match self.quadric_axes() {
            None => p[3],
            Some(a) => {
                let mut q = -T::one();
                for i in 0..4 {
                    q += p[i] * p[i] / (a[i] * a[i]);
                }
                q
            }
        }
    }

    /// Retract an off-manifold point back onto the space. For the quadrics
    /// this normalizes the axis-rescaled point on the unit sphere, which is
    /// a smooth retraction (not the closest-point projection).
    pub fn project(&self, p: V4<T>) -> V4<T> {
        match self.quadric_axes() {
            None => [p[0], p[1], p[2], T::zero()],
            Some(a) => {
                let y = [p[0] / a[0], p[1] / a[1], p[2] / a[2], p[3] / a[3]];
                let y = normalize(y);
                [y[0] * a[0], y[1] * a[1], y[2] * a[2], y[3] * a[3]]
            }
        }
    }

    /// Outward unit normal of the quadric at `p` (gradient direction of `Q`).
    /// For `Euclidean3` this is the suppressed fourth axis.
    pub fn unit_normal(&self, p: V4<T>) -> V4<T> {
        match self.quadric_axes() {
            None => [T::zero(), T::zero(), T::zero(), T::one()],
            Some(a) => {
                let g = [
                    p[0] / (a[0] * a[0]),
                    p[1] / (a[1] * a[1]),
                    p[2] / (a[2] * a[2]),
                    p[3] / (a[3] * a[3]),
                ];
                normalize(g)
            }
        }
    }

    /// Index of the stereographic chart covering `p`: the chart is centered
    /// at the pole opposite to `p` on the `x1` axis, so chart 0 (projection
    /// point `(-a1,0,0,0)`) covers the half with `x1 >= 0` and chart 1 the
    /// other half. Each chart misses exactly one point.
    pub fn chart_index(&self, p: V4<T>) -> usize {
        if p[0] >= T::zero() {
            0
        } else {
            1
        }
    }

    /// Chart coordinates of `p` in the given chart.
    ///
    /// Charts only exist for the quadric spaces; the flat space uses the
    /// identity (first three coordinates).
    pub fn chart_coords(&self, chart: usize, p: V4<T>) -> [T; 3] {
        match self.quadric_axes() {
            None => [p[0], p[1], p[2]],
            Some(a) => {
                // sigma is the x1-sign of the excluded projection pole.
                let sigma = if chart == 0 { -T::one() } else { T::one() };
                let y = [p[0] / a[0], p[1] / a[1], p[2] / a[2], p[3] / a[3]];
                let denom = T::one() - sigma * y[0];
                [y[1] / denom, y[2] / denom, y[3] / denom]
            }
        }
    }

    /// Embed chart coordinates back into `R^4`.
    pub fn chart_embed(&self, chart: usize, u: [T; 3]) -> V4<T> {
        match self.quadric_axes() {
            None => [u[0], u[1], u[2], T::zero()],
            Some(a) => {
                let sigma = if chart == 0 { -T::one() } else { T::one() };
                let s = u[0] * u[0] + u[1] * u[1] + u[2] * u[2];
                let d = T::one() + s;
                let two = c::<T>(2.0);
                let y = [
                    sigma * (s - T::one()) / d,
                    two * u[0] / d,
                    two * u[1] / d,
                    two * u[2] / d,
                ];
                [y[0] * a[0], y[1] * a[1], y[2] * a[2], y[3] * a[3]]
            }
        }
    }

    /// Coordinate tangent basis of the given chart at chart point `u`, as
    /// three ambient vectors spanning the tangent space of the manifold.
    pub fn tangent_basis_in_chart(&self, chart: usize, u: [T; 3]) -> [V4<T>; 3] {
        match self.quadric_axes() {
            None => [
                [T::one(), T::zero(), T::zero(), T::zero()],
                [T::zero(), T::one(), T::zero(), T::zero()],
                [T::zero(), T::zero(), T::one(), T::zero()],
            ],
            Some(a) => {
                let sigma = if chart == 0 { -T::one() } else { T::one() };
                let s = u[0] * u[0] + u[1] * u[1] + u[2] * u[2];
                let d = T::one() + s;
                let d2 = d * d;
                let two = c::<T>(2.0);
                let four = c::<T>(4.0);
                let mut basis = [[T::zero(); 4]; 3];
                for (j, b) in basis.iter_mut().enumerate() {
                    b[0] = a[0] * sigma * four * u[j] / d2;
                    for i in 0..3 {
                        let delta = if i == j { T::one() } else { T::zero() };
                        b[i + 1] = a[i + 1] * (two * delta / d - four * u[i] * u[j] / d2);
                    }
                }
                basis
            }
        }
    }

    /// Coordinate tangent basis of the designated chart at `p`.
    pub fn tangent_basis(&self, p: V4<T>) -> [V4<T>; 3] {
        let chart = self.chart_index(p);
        self.tangent_basis_in_chart(chart, self.chart_coords(chart, p))
    }

    /// Metric tensor in the coordinate basis of the given chart at `u`.
    pub fn metric_in_chart(&self, chart: usize, u: [T; 3]) -> [[T; 3]; 3] {
        let b = self.tangent_basis_in_chart(chart, u);
        let mut g = [[T::zero(); 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                g[i][j] = dot(b[i], b[j]);
            }
        }
        g
    }

    /// First fundamental form of the designated parametrization at `p`,
    /// i.e. the metric tensor in the chart's coordinate basis.
    pub fn metric_at(&self, p: V4<T>) -> [[T; 3]; 3] {
        let chart = self.chart_index(p);
        self.metric_in_chart(chart, self.chart_coords(chart, p))
    }

    /// Orthonormal basis of the tangent space at `p` (Gram-Schmidt over the
    /// chart basis), used for frame-independent curvature contractions.
    pub fn orthonormal_frame(&self, p: V4<T>) -> [V4<T>; 3] {
        let b = self.tangent_basis(p);
        let mut e = b;
        for i in 0..3 {
            for j in 0..i {
                let proj = dot(e[i], e[j]);
                e[i] = axpy(e[i], -proj, e[j]);
            }
            e[i] = normalize(e[i]);
        }
        e
    }

    /// Second fundamental form `h(x, y)` of the quadric in flat `R^4`,
    /// taken with respect to the outward unit normal. Zero in the flat space.
    pub fn second_fundamental(&self, p: V4<T>, x: V4<T>, y: V4<T>) -> T {
        match self.quadric_axes() {
            None => T::zero(),
            Some(a) => {
                // Q(x) = sum x_i^2/a_i^2, Hess Q = diag(2/a_i^2);
                // h(X,Y) = Hess Q (X,Y) / |grad Q|.
                let two = c::<T>(2.0);
                let mut hxy = T::zero();
                let mut grad = [T::zero(); 4];
                for i in 0..4 {
                    let ai2 = a[i] * a[i];
                    hxy += two * x[i] * y[i] / ai2;
                    grad[i] = two * p[i] / ai2;
                }
                hxy / norm(grad)
            }
        }
    }

    /// Ricci curvature `Ric(v, v)` for a unit tangent vector `v` at `p`.
    ///
    /// On the quadrics this is the Gauss-equation contraction
    /// `H_E h(v,v) - h^2(v,v)` of the hypersurface data in flat `R^4`;
    /// the round sphere short-circuits to `2 / R^2`.
    pub fn ambient_ricci(&self, p: V4<T>, v: V4<T>) -> Result<T> {
        self.check_unit_tangent(p, v)?;
        Ok(match *self {
            AmbientSpace::Euclidean3 => T::zero(),
            AmbientSpace::RoundSphere3 { radius } => c::<T>(2.0) / (radius * radius),
            AmbientSpace::Ellipsoid4 { .. } => {
                let e = self.orthonormal_frame(p);
                let mut trace = T::zero();
                let mut hsq = T::zero();
                for ei in e.iter() {
                    trace += self.second_fundamental(p, *ei, *ei);
                    let hv = self.second_fundamental(p, v, *ei);
                    hsq += hv * hv;
                }
                trace * self.second_fundamental(p, v, v) - hsq
            }
        })
    }

    /// Scalar curvature at `p`.
    pub fn scalar_curvature(&self, p: V4<T>) -> T {
        match *self {
            AmbientSpace::Euclidean3 => T::zero(),
            AmbientSpace::RoundSphere3 { radius } => c::<T>(6.0) / (radius * radius),
            AmbientSpace::Ellipsoid4 { .. } => {
                let e = self.orthonormal_frame(p);
                let mut trace = T::zero();
                let mut normsq = T::zero();
                for ei in e.iter() {
                    trace += self.second_fundamental(p, *ei, *ei);
                    for ej in e.iter() {
                        let hij = self.second_fundamental(p, *ei, *ej);
                        normsq += hij * hij;
                    }
                }
                trace * trace - normsq
            }
        }
    }

    /// Bundle of Ricci and scalar curvature at a point/direction.
    pub fn curvature_sample(&self, p: V4<T>, v: V4<T>) -> Result<CurvatureSample<T>> {
        Ok(CurvatureSample {
            point: p,
            direction: v,
            ricci_nn: self.ambient_ricci(p, v)?,
            scalar: self.scalar_curvature(p),
        })
    }

    fn check_unit_tangent(&self, p: V4<T>, v: V4<T>) -> Result<()> {
        let tol = c::<T>(1e-6);
        if (norm(v) - T::one()).abs() > tol {
            return Err(MinsurfError::Precondition("direction must be unit length".into()));
        }
        let n = self.unit_normal(p);
        if dot(v, n).abs() > tol {
            return Err(MinsurfError::Precondition("direction must be tangent to the space".into()));
        }
        if self.quadric_defect(p).abs() > tol {
            return Err(MinsurfError::Precondition("point must lie on the space".into()));
        }
        Ok(())
    }

    /// Walk the geodesic from `p` with initial velocity `v` for parameter
    /// time `t`. Velocity need not be unit; the curve has constant speed
    /// `|v|`. `tol` is the local error budget per unit parameter (pass
    /// `None` for the 1e-9 default).
    pub fn exp_map(&self, p: V4<T>, v: V4<T>, t: T, tol: Option<T>) -> Result<GeodesicEnd<T>> {
        match *self {
            AmbientSpace::Euclidean3 => Ok(GeodesicEnd { point: axpy(p, t, v), velocity: v }),
            AmbientSpace::RoundSphere3 { radius } => {
                let speed = norm(v);
                if speed == T::zero() {
                    return Ok(GeodesicEnd { point: p, velocity: v });
                }
                let theta = speed * t / radius;
                let vhat = scale(v, T::one() / speed);
                let point = add(scale(p, theta.cos()), scale(vhat, radius * theta.sin()));
                let velocity = add(
                    scale(vhat, speed * theta.cos()),
                    scale(p, -speed * theta.sin() / radius),
                );
                Ok(GeodesicEnd { point, velocity })
            }
            AmbientSpace::Ellipsoid4 { .. } => self.integrate_geodesic(p, v, t, tol),
        }
    }

    /// Geodesic acceleration of the quadric in flat `R^4`:
    /// `x'' = -(v^T Hess Q v) / |grad Q|^2 * grad Q`.
    fn geodesic_accel(&self, a: [T; 4], x: V4<T>, v: V4<T>) -> V4<T> {
        let two = c::<T>(2.0);
        let mut grad = [T::zero(); 4];
        let mut vhv = T::zero();
        for i in 0..4 {
            let ai2 = a[i] * a[i];
            grad[i] = two * x[i] / ai2;
            vhv += two * v[i] * v[i] / ai2;
        }
        scale(grad, -vhv / dot(grad, grad))
    }

    fn rk4_step(&self, a: [T; 4], x: V4<T>, v: V4<T>, h: T) -> (V4<T>, V4<T>) {
        let half = c::<T>(0.5);
        let sixth = T::one() / c::<T>(6.0);
        let two = c::<T>(2.0);

        let k1x = v;
        let k1v = self.geodesic_accel(a, x, v);
        let k2x = axpy(v, h * half, k1v);
        let k2v = self.geodesic_accel(a, axpy(x, h * half, k1x), axpy(v, h * half, k1v));
        let k3x = axpy(v, h * half, k2v);
        let k3v = self.geodesic_accel(a, axpy(x, h * half, k2x), axpy(v, h * half, k2v));
        let k4x = axpy(v, h, k3v);
        let k4v = self.geodesic_accel(a, axpy(x, h, k3x), axpy(v, h, k3v));

        let comb = |k1: V4<T>, k2: V4<T>, k3: V4<T>, k4: V4<T>| {
            let mut out = [T::zero(); 4];
            for i in 0..4 {
                out[i] = (k1[i] + two * k2[i] + two * k3[i] + k4[i]) * sixth;
            }
            out
        };
        (axpy(x, h, comb(k1x, k2x, k3x, k4x)), axpy(v, h, comb(k1v, k2v, k3v, k4v)))
    }

    /// Classical fourth-order integration with step halving driven by the
    /// step-doubling error estimate.
    fn integrate_geodesic(&self, p: V4<T>, v: V4<T>, t: T, tol: Option<T>) -> Result<GeodesicEnd<T>> {
        let a = self.quadric_axes().expect("quadric space");
        let tol = tol.unwrap_or_else(|| c::<T>(1e-9));
        self.check_on_space(p)?;

        let speed = norm(v);
        if speed == T::zero() || t == T::zero() {
            return Ok(GeodesicEnd { point: p, velocity: v });
        }

        let dir = if t >= T::zero() { T::one() } else { -T::one() };
        let total = t.abs();
        let mut remaining = total;
        let mut x = p;
        let mut vel = scale(v, dir);
        // Initial step keyed to the curvature scale of the smallest axis.
        let mut h = (a[3] / speed * c::<T>(0.1)).min(remaining);
        let fifteen = c::<T>(15.0);
        let mut halvings = 0usize;

        while remaining > T::zero() {
            h = h.min(remaining);
            let (xf, vf) = self.rk4_step(a, x, vel, h);
            let (xh, vh) = self.rk4_step(a, x, vel, h * c::<T>(0.5));
            let (xh2, vh2) = self.rk4_step(a, xh, vh, h * c::<T>(0.5));
            let err = (dist(xf, xh2) + dist(vf, vh2)) / fifteen;
            let budget = tol * h;
            if err > budget {
                h = h * c::<T>(0.5);
                halvings += 1;
                if halvings > 60 {
                    return Err(MinsurfError::Solver(
                        "geodesic step control failed to meet the error budget".into(),
                    ));
                }
                continue;
            }
            x = xh2;
            vel = vh2;
            remaining -= h;
            if err < budget * c::<T>(0.02) {
                h = h * c::<T>(2.0);
            }
        }

        // Clamp accumulated drift off the quadric; the retraction moves the
        // point by O(defect), well inside the integration budget.
        let x = self.project(x);
        let n = self.unit_normal(x);
        let vel = axpy(vel, -dot(vel, n), n);
        Ok(GeodesicEnd { point: x, velocity: scale(vel, dir) })
    }

    fn check_on_space(&self, p: V4<T>) -> Result<()> {
        if self.quadric_defect(p).abs() > c::<T>(1e-6) {
            return Err(MinsurfError::Precondition("point must lie on the space".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn ell() -> AmbientSpace<f64> {
        AmbientSpace::Ellipsoid4 { semiaxes: [2.0, 1.5, 1.2, 1.0] }
    }

    #[test]
    fn json_round_trip() {
        let s = AmbientSpace::from_json(r#"{"kind":"ellipsoid4","semiaxes":[4,1.5,1.2,1]}"#).unwrap();
        assert_eq!(s, AmbientSpace::Ellipsoid4 { semiaxes: [4.0, 1.5, 1.2, 1.0] });
        let text = s.to_json().to_string();
        assert_eq!(AmbientSpace::from_json(&text).unwrap(), s);
        assert!(AmbientSpace::from_json(r#"{"kind":"ellipsoid4","semiaxes":[1,1.5,1.2,1]}"#).is_err());
    }

    #[test]
    fn metric_is_identity_at_sphere_equator() {
        // Orthogonal angle coordinates at the equator give the identity;
        // the stereographic chart agrees there because its conformal factor
        // is 1 on the equator sphere |u| = 1.
        let s = AmbientSpace::RoundSphere3 { radius: 1.0 };
        let p = [0.0, 1.0, 0.0, 0.0];
        let g = s.metric_at(p);
        for i in 0..3 {
            for j in 0..3 {
                assert_relative_eq!(g[i][j], if i == j { 1.0 } else { 0.0 }, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn metric_matches_finite_difference_pullback() {
        // Independent check: differentiate the chart embedding numerically
        // and compare Gram matrices. Exercises the chart that covers the
        // x1 pole, where the naive angular parametrization degenerates.
        let s = ell();
        let pts = [
            [2.0, 0.0, 0.0, 0.0],
            s.project([0.3, 0.9, -0.4, 0.2]),
            s.project([-1.2, 0.5, 0.1, -0.8]),
        ];
        for p in pts {
            let chart = s.chart_index(p);
            let u = s.chart_coords(chart, p);
            let h = 1e-6;
            let mut fd = [[0.0; 4]; 3];
            for j in 0..3 {
                let mut up = u;
                let mut um = u;
                up[j] += h;
                um[j] -= h;
                let xp = s.chart_embed(chart, up);
                let xm = s.chart_embed(chart, um);
                for i in 0..4 {
                    fd[j][i] = (xp[i] - xm[i]) / (2.0 * h);
                }
            }
            let g = s.metric_at(p);
            for i in 0..3 {
                for j in 0..3 {
                    let gfd = vec4::dot(fd[i], fd[j]);
                    assert_relative_eq!(g[i][j], gfd, epsilon = 1e-8, max_relative = 1e-8);
                }
            }
        }
    }

    #[test]
    fn chart_embed_round_trips() {
        let s = ell();
        let p = s.project([0.7, -0.2, 0.9, 0.4]);
        let chart = s.chart_index(p);
        let u = s.chart_coords(chart, p);
        let q = s.chart_embed(chart, u);
        assert!(vec4::dist(p, q) < 1e-12);
    }

    #[test]
    fn ricci_of_round_sphere_through_quadric_path() {
        // Equal-axes quadric must reproduce the round value 2/R^2 through
        // the generic Gauss-equation contraction. The enum forbids equal
        // semiaxes, so call the internals directly on a nearly-round case
        // and on the exact round space.
        let s = AmbientSpace::RoundSphere3 { radius: 1.0 };
        let p = [0.0, 0.0, 1.0, 0.0];
        let v = [1.0, 0.0, 0.0, 0.0];
        assert_relative_eq!(s.ambient_ricci(p, v).unwrap(), 2.0, epsilon = 1e-12);

        // Equal-axes quadric through the generic Gauss-equation path
        // (the ordered-axes invariant is deliberately bypassed here).
        let round = AmbientSpace::Ellipsoid4 { semiaxes: [1.0, 1.0, 1.0, 1.0] };
        let dirs: [[f64; 4]; 2] = [[1.0, 0.0, 0.0, 0.0], [0.0, 0.6, 0.0, 0.8]];
        for v in dirs {
            let ric = round.ambient_ricci(p, v).unwrap();
            assert_relative_eq!(ric, 2.0, epsilon = 1e-10);
        }
        assert_relative_eq!(round.scalar_curvature(p), 6.0, epsilon = 1e-10);

        // Genuinely triaxial case: cross-check Ricci against the scalar
        // curvature contraction sum_i Ric(e_i, e_i) = scal.
        let s = ell();
        let q = s.project([0.5, 0.7, -0.6, 0.4]);
        let frame = s.orthonormal_frame(q);
        let sum: f64 = frame.iter().map(|e| s.ambient_ricci(q, *e).unwrap()).sum();
        assert_relative_eq!(sum, s.scalar_curvature(q), max_relative = 1e-12);
    }

    #[test]
    fn ricci_rejects_non_unit_and_non_tangent() {
        let s = ell();
        let p = [2.0, 0.0, 0.0, 0.0];
        assert!(s.ambient_ricci(p, [0.0, 2.0, 0.0, 0.0]).is_err());
        assert!(s.ambient_ricci(p, [1.0, 0.0, 0.0, 0.0]).is_err());
        assert!(s.ambient_ricci(p, [0.0, 1.0, 0.0, 0.0]).is_ok());
    }

    #[test]
    fn sphere_geodesic_reaches_antipode() {
        let s = AmbientSpace::RoundSphere3 { radius: 1.0 };
        let p = [1.0, 0.0, 0.0, 0.0];
        let v = [0.0, 1.0, 0.0, 0.0];
        let end = s.exp_map(p, v, std::f64::consts::PI, None).unwrap();
        assert!(vec4::dist(end.point, [-1.0, 0.0, 0.0, 0.0]) < 1e-8);
    }

    #[test]
    fn ellipsoid_geodesic_conserves_speed_and_stays_on_quadric() {
        let s = ell();
        let p = s.project([0.9, 0.8, -0.3, 0.5]);
        let n = s.unit_normal(p);
        let mut v = [0.3, -0.4, 0.8, 0.1];
        let vn = vec4::dot(v, n);
        for i in 0..4 {
            v[i] -= vn * n[i];
        }
        let speed0 = vec4::norm(v);
        let end = s.exp_map(p, v, 2.5, None).unwrap();
        assert!(s.quadric_defect(end.point).abs() < 1e-8);
        assert_relative_eq!(vec4::norm(end.velocity), speed0, max_relative = 1e-8);
    }

    #[test]
    fn geodesic_semigroup_property() {
        let s = ell();
        let p = s.project([-0.4, 1.0, 0.3, 0.3]);
        let n = s.unit_normal(p);
        let mut v = [1.0, 0.2, -0.5, 0.4];
        let vn = vec4::dot(v, n);
        for i in 0..4 {
            v[i] -= vn * n[i];
        }
        let whole = s.exp_map(p, v, 1.7, None).unwrap();
        let half = s.exp_map(p, v, 0.9, None).unwrap();
        let rest = s.exp_map(half.point, half.velocity, 0.8, None).unwrap();
        assert!(vec4::dist(whole.point, rest.point) < 1e-6);
        assert!(vec4::dist(whole.velocity, rest.velocity) < 1e-6);
    }
}
