//! Triangulated two-spheres in an ambient space: construction, validation,
//! induced-metric area, discrete curvature, geodesic discs, normal graphs,
//! and an ASCII interchange format.
//!
//! Vertices are stored in embedding coordinates (`[x, y, z, 0]` in the flat
//! space, on-quadric `R^4` points otherwise); the interchange format writes
//! per-vertex chart coordinates instead so files stay chart-faithful.

use std::collections::BTreeMap;

use crate::ambient::{vec4, AmbientSpace, V4};
use crate::error::{MinsurfError, Result};
use crate::scalar::{c, Real};

/// Closed oriented triangle mesh of sphere topology.
#[derive(Debug, Clone)]
pub struct TriSurface<T: Real> {
    pub vertices: Vec<V4<T>>,
    pub triangles: Vec<[u32; 3]>,
    /// Distinguished vertex used as the center of geodesic-disc excisions.
    pub marked: Option<u32>,
    euler: i64,
}

/// 3x3 determinant helper for the 4d cross product.
fn det3<T: Real>(m: [[T; 3]; 3]) -> T {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Vector orthogonal to three vectors in `R^4` (generalized cross product).
pub fn cross4<T: Real>(a: V4<T>, b: V4<T>, v: V4<T>) -> V4<T> {
    let minor = |cols: [usize; 3]| {
        det3([
            [a[cols[0]], a[cols[1]], a[cols[2]]],
            [b[cols[0]], b[cols[1]], b[cols[2]]],
            [v[cols[0]], v[cols[1]], v[cols[2]]],
        ])
    };
    [
        minor([1, 2, 3]),
        -minor([0, 2, 3]),
        minor([0, 1, 3]),
        -minor([0, 1, 2]),
    ]
}

/// Area of the flat (chordal) triangle spanned by three `R^4` points.
pub fn chord_triangle_area<T: Real>(p: V4<T>, q: V4<T>, r: V4<T>) -> T {
    let e1 = vec4::sub(q, p);
    let e2 = vec4::sub(r, p);
    let g11 = vec4::dot(e1, e1);
    let g22 = vec4::dot(e2, e2);
    let g12 = vec4::dot(e1, e2);
    (g11 * g22 - g12 * g12).max(T::zero()).sqrt() * c::<T>(0.5)
}

impl<T: Real> TriSurface<T> {
    /// Build and validate a closed sphere mesh.
    pub fn new(vertices: Vec<V4<T>>, triangles: Vec<[u32; 3]>) -> Result<Self> {
        let mut s = TriSurface { vertices, triangles, marked: None, euler: 0 };
        s.euler = s.validate()?;
        Ok(s)
    }

    pub fn nv(&self) -> usize {
        self.vertices.len()
    }

    pub fn nt(&self) -> usize {
        self.triangles.len()
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.euler
    }

    pub fn with_marked(mut self, idx: u32) -> Self {
        assert!((idx as usize) < self.nv(), "marked vertex out of range");
        self.marked = Some(idx);
        self
    }

    /// Check the structural invariants: every edge shared by exactly two
    /// triangles with opposite orientation, Euler characteristic 2, no
    /// degenerate triangles. Returns the Euler characteristic.
    pub fn validate(&self) -> Result<i64> {
        if self.vertices.len() < 4 || self.triangles.is_empty() {
            return Err(MinsurfError::Mesh("too few vertices or triangles".into()));
        }
        let nv = self.vertices.len() as u32;
        let mut directed: BTreeMap<(u32, u32), u32> = BTreeMap::new();
        for t in &self.triangles {
            if t[0] == t[1] || t[1] == t[2] || t[0] == t[2] {
                return Err(MinsurfError::Mesh("triangle repeats a vertex".into()));
            }
            for k in 0..3 {
                let (i, j) = (t[k], t[(k + 1) % 3]);
                if i >= nv || j >= nv {
                    return Err(MinsurfError::Mesh("triangle index out of range".into()));
                }
                *directed.entry((i, j)).or_insert(0) += 1;
            }
        }
        for (&(i, j), &n) in &directed {
            if n != 1 {
                return Err(MinsurfError::Mesh(format!(
                    "directed edge ({i},{j}) used {n} times; mesh not oriented"
                )));
            }
            if directed.get(&(j, i)) != Some(&1) {
                return Err(MinsurfError::Mesh(format!(
                    "edge ({i},{j}) lacks an opposite triangle; mesh not closed"
                )));
            }
        }
        let ne = (directed.len() / 2) as i64;
        let euler = self.vertices.len() as i64 - ne + self.triangles.len() as i64;
        if euler != 2 {
            return Err(MinsurfError::Mesh(format!(
                "Euler characteristic {euler}, expected 2 (two-sphere)"
            )));
        }
        let areas: Vec<T> = self
            .triangles
            .iter()
            .map(|t| {
                chord_triangle_area(
                    self.vertices[t[0] as usize],
                    self.vertices[t[1] as usize],
                    self.vertices[t[2] as usize],
                )
            })
            .collect();
        let mean = areas.iter().fold(T::zero(), |s, a| s + *a) / c::<T>(areas.len() as f64);
        if areas.iter().any(|a| *a <= c::<T>(1e-12) * mean) {
            return Err(MinsurfError::Mesh("degenerate triangle (area ~ 0)".into()));
        }
        Ok(euler)
    }

    /// Apply a pointwise map to the vertices, keeping connectivity.
    pub fn map_vertices<F: Fn(V4<T>) -> V4<T>>(&self, f: F) -> Self {
        TriSurface {
            vertices: self.vertices.iter().map(|p| f(*p)).collect(),
            triangles: self.triangles.clone(),
            marked: self.marked,
            euler: self.euler,
        }
    }

    /// Uniform dilation about the origin (flat-space diagnostic helper).
    pub fn dilated(&self, s: T) -> Self {
        self.map_vertices(|p| vec4::scale(p, s))
    }

    fn tri_pts(&self, t: [u32; 3]) -> [V4<T>; 3] {
        [
            self.vertices[t[0] as usize],
            self.vertices[t[1] as usize],
            self.vertices[t[2] as usize],
        ]
    }

    /// Induced-metric surface area: per triangle, the chart pullback metric
    /// is integrated with the mid-edge quadrature rule (exact for quadratic
    /// integrands, hence second-order in the mesh size).
    pub fn area(&self, space: &AmbientSpace<T>) -> T {
        let half = c::<T>(0.5);
        let third = T::one() / c::<T>(3.0);
        let mut total = T::zero();
        for t in &self.triangles {
            let p = self.tri_pts(*t);
            // One chart per triangle, selected by the centroid; triangles
            // are small so all three vertices are far from the excluded pole.
            let centroid = vec4::scale(vec4::add(vec4::add(p[0], p[1]), p[2]), third);
            let chart = space.chart_index(centroid);
            let u: Vec<[T; 3]> = p.iter().map(|q| space.chart_coords(chart, *q)).collect();
            let e1 = [u[1][0] - u[0][0], u[1][1] - u[0][1], u[1][2] - u[0][2]];
            let e2 = [u[2][0] - u[0][0], u[2][1] - u[0][1], u[2][2] - u[0][2]];
            let mids = [
                mid3(u[0], u[1]),
                mid3(u[1], u[2]),
                mid3(u[2], u[0]),
            ];
            let mut tri_area = T::zero();
            for m in mids {
                let g = space.metric_in_chart(chart, m);
                let m11 = quad_form3(g, e1, e1);
                let m22 = quad_form3(g, e2, e2);
                let m12 = quad_form3(g, e1, e2);
                tri_area += (m11 * m22 - m12 * m12).max(T::zero()).sqrt();
            }
            total += tri_area * third * half;
        }
        total
    }

    /// Outward unit normals of the surface inside the ambient manifold:
    /// per-vertex average of incident-triangle normals, each taken inside
    /// the ambient tangent space at the vertex.
    pub fn vertex_normals(&self, space: &AmbientSpace<T>) -> Vec<V4<T>> {
        let mut normals = vec![[T::zero(); 4]; self.nv()];
        for t in &self.triangles {
            let p = self.tri_pts(*t);
            for k in 0..3 {
                let base = p[k];
                let e1 = vec4::sub(p[(k + 1) % 3], base);
                let e2 = vec4::sub(p[(k + 2) % 3], base);
                let n = cross4(space.unit_normal(base), e1, e2);
                normals[t[k] as usize] = vec4::add(normals[t[k] as usize], n);
            }
        }
        normals
            .iter()
            .zip(&self.vertices)
            .map(|(n, p)| {
                let ne = space.unit_normal(*p);
                let n = vec4::axpy(*n, -vec4::dot(*n, ne), ne);
                vec4::normalize(n)
            })
            .collect()
    }

    /// Discrete second-fundamental-form data per vertex: `(H, |A|^2)`.
    ///
    /// Normal curvatures are estimated along each incident edge chord by
    /// `2 <p - q, nu> / |q - p|^2` (exact on round spheres) and the shape
    /// operator is recovered by least squares in the tangent plane. On a
    /// mesh lying in a reflection hyperplane the estimator vanishes
    /// identically, which is the totally-geodesic certificate.
    pub fn shape_operator(&self, space: &AmbientSpace<T>) -> Vec<(T, T)> {
        let normals = self.vertex_normals(space);
        let mut neighbors: Vec<Vec<u32>> = vec![Vec::new(); self.nv()];
        for t in &self.triangles {
            for k in 0..3 {
                neighbors[t[k] as usize].push(t[(k + 1) % 3]);
            }
        }
        let two = c::<T>(2.0);
        self.vertices
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let nu = normals[i];
                // Tangent frame orthogonal to both the surface normal and
                // the ambient constraint normal. Seed with the coordinate
                // axis least aligned with their span; a fixed seed
                // degenerates at axial vertices, where both normals can
                // lie in a coordinate plane.
                let ne = space.unit_normal(*p);
                let mut seed = 0;
                let mut best = T::neg_infinity();
                for k in 0..4 {
                    let residual = T::one() - nu[k] * nu[k] - ne[k] * ne[k];
                    if residual > best {
                        best = residual;
                        seed = k;
                    }
                }
                let mut t1 = [T::zero(); 4];
                t1[seed] = T::one();
                t1 = vec4::axpy(t1, -vec4::dot(t1, nu), nu);
                t1 = vec4::axpy(t1, -vec4::dot(t1, ne), ne);
                let t1 = vec4::normalize(t1);
                let t2 = vec4::normalize(cross4(ne, nu, t1));
                // Least squares for kappa(theta) = a c^2 + 2b cs + c s^2.
                let mut ata = [[T::zero(); 3]; 3];
                let mut atb = [T::zero(); 3];
                for &j in &neighbors[i] {
                    let d = vec4::sub(self.vertices[j as usize], *p);
                    let dn = vec4::dot(d, nu);
                    let len2 = vec4::dot(d, d);
                    // Sign convention: outward-normal round spheres have
                    // H = 2/r > 0, hence the chord points from neighbor to
                    // center.
                    let kappa = -(two * dn) / len2;
                    let (x, y) = (vec4::dot(d, t1), vec4::dot(d, t2));
                    let r = (x * x + y * y).sqrt();
                    let (co, si) = (x / r, y / r);
                    let row = [co * co, two * co * si, si * si];
                    for a in 0..3 {
                        for b in 0..3 {
                            ata[a][b] += row[a] * row[b];
                        }
                        atb[a] += row[a] * kappa;
                    }
                }
                let sol = solve3(ata, atb);
                let (sa, sb, sc) = (sol[0], sol[1], sol[2]);
                (sa + sc, sa * sa + two * sb * sb + sc * sc)
            })
            .collect()
    }

    /// Offset the surface vertexwise along its unit normal via the ambient
    /// exponential map; connectivity is preserved. Fails if any triangle
    /// normal flips (the graph folds over).
    pub fn normal_graph(&self, space: &AmbientSpace<T>, heights: &[T]) -> Result<Self> {
        if heights.len() != self.nv() {
            return Err(MinsurfError::InvalidInput(
                "height field length must match vertex count".into(),
            ));
        }
        let normals = self.vertex_normals(space);
        let mut moved = Vec::with_capacity(self.nv());
        for ((p, nu), h) in self.vertices.iter().zip(&normals).zip(heights) {
            moved.push(space.exp_map(*p, *nu, *h, None)?.point);
        }
        let out = TriSurface {
            vertices: moved,
            triangles: self.triangles.clone(),
            marked: self.marked,
            euler: self.euler,
        };
        for (told, tnew) in self.triangles.iter().zip(&out.triangles) {
            let po = self.tri_pts(*told);
            let pn = out.tri_pts(*tnew);
            let no = cross4(space.unit_normal(po[0]), vec4::sub(po[1], po[0]), vec4::sub(po[2], po[0]));
            let nn = cross4(space.unit_normal(pn[0]), vec4::sub(pn[1], pn[0]), vec4::sub(pn[2], pn[0]));
            if vec4::dot(no, nn) <= T::zero() {
                return Err(MinsurfError::Precondition(
                    "normal graph folds over (height too large)".into(),
                ));
            }
        }
        Ok(out)
    }

    /// Intrinsic geodesic distance from a source vertex to every vertex,
    /// by Dijkstra ordering with two-triangle unfolding updates (virtual
    /// source construction), considerably more accurate than graph distance.
    pub fn geodesic_distances(&self, source: u32) -> Vec<T> {
        use std::cmp::Ordering;
        use std::collections::BinaryHeap;

        #[derive(PartialEq)]
        struct Item<T>(T, u32);
        impl<T: PartialOrd> Eq for Item<T> {}
        impl<T: PartialOrd> PartialOrd for Item<T> {
            fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
                // Reversed: BinaryHeap is a max-heap, we need min-first.
                other.0.partial_cmp(&self.0)
            }
        }
        impl<T: PartialOrd> Ord for Item<T> {
            fn cmp(&self, other: &Self) -> Ordering {
                self.partial_cmp(other).expect("no NaN distances")
            }
        }

        let nv = self.nv();
        let mut incident: Vec<Vec<u32>> = vec![Vec::new(); nv];
        for (ti, t) in self.triangles.iter().enumerate() {
            for &v in t {
                incident[v as usize].push(ti as u32);
            }
        }
        let inf = T::infinity();
        let mut dist = vec![inf; nv];
        let mut settled = vec![false; nv];
        let mut heap = BinaryHeap::new();
        dist[source as usize] = T::zero();
        heap.push(Item(T::zero(), source));

        while let Some(Item(d, v)) = heap.pop() {
            if settled[v as usize] {
                continue;
            }
            settled[v as usize] = true;
            for &ti in &incident[v as usize] {
                let t = self.triangles[ti as usize];
                for k in 0..3 {
                    let w = t[k];
                    if w == v || settled[w as usize] {
                        continue;
                    }
                    let pv = self.vertices[v as usize];
                    let pw = self.vertices[w as usize];
                    let mut cand = d + vec4::dist(pv, pw);
                    // Third vertex of this triangle, if settled, enables
                    // the planar unfolding update.
                    let m = (0..3).find(|&m| t[m] != v && t[m] != w).unwrap();
                    let u = t[m];
                    if settled[u as usize] {
                        let pu = self.vertices[u as usize];
                        if let Some(c2) = unfold_update(
                            vec4::dist(pv, pu),
                            vec4::dist(pv, pw),
                            vec4::dist(pu, pw),
                            d,
                            dist[u as usize],
                        ) {
                            if c2 < cand {
                                cand = c2;
                            }
                        }
                    }
                    if cand < dist[w as usize] {
                        dist[w as usize] = cand;
                        heap.push(Item(cand, w));
                    }
                }
            }
        }
        dist
    }

    /// Remove the intrinsic geodesic disc of radius `mu` about the marked
    /// vertex. Straddling triangles are clipped along the interpolated
    /// iso-distance line, so `disc_area + remaining_area` equals the total
    /// chordal area exactly.
    pub fn excise_geodesic_disc(
        &self,
        space: &AmbientSpace<T>,
        mu: T,
    ) -> Result<GeodesicDiscExcision<T>> {
        let center = self.marked.ok_or_else(|| {
            MinsurfError::Precondition("excision needs a marked vertex".into())
        })?;
        if mu <= T::zero() {
            return Err(MinsurfError::Precondition("excision radius must be positive".into()));
        }
        let dist = self.geodesic_distances(center);
        let dmax = dist.iter().cloned().fold(T::zero(), T::max);
        // Injectivity-scale estimate: half the intrinsic radius of the mesh,
        // with a small slack for the discrete-distance error.
        if mu > dmax * c::<T>(0.5) * (T::one() + c::<T>(0.02)) {
            return Err(MinsurfError::Precondition(format!(
                "excision radius {} exceeds half the intrinsic radius {}",
                mu.to_f64().unwrap_or(f64::NAN),
                dmax.to_f64().unwrap_or(f64::NAN)
            )));
        }

        let mut disc_area = T::zero();
        let mut remaining_area = T::zero();
        // Crossing points keyed by undirected edge, plus per-triangle pairs
        // of crossing edges for chaining the boundary loop.
        let mut crossings: BTreeMap<(u32, u32), V4<T>> = BTreeMap::new();
        let mut segments: Vec<((u32, u32), (u32, u32))> = Vec::new();

        for t in &self.triangles {
            let p = self.tri_pts(*t);
            let d = [
                dist[t[0] as usize],
                dist[t[1] as usize],
                dist[t[2] as usize],
            ];
            let inside = [d[0] < mu, d[1] < mu, d[2] < mu];
            let total = chord_triangle_area(p[0], p[1], p[2]);
            match inside.iter().filter(|b| **b).count() {
                3 => disc_area += total,
                0 => remaining_area += total,
                _ => {
                    let mut in_poly: Vec<V4<T>> = Vec::new();
                    let mut cross_edges: Vec<(u32, u32)> = Vec::new();
                    for k in 0..3 {
                        let j = (k + 1) % 3;
                        if inside[k] {
                            in_poly.push(p[k]);
                        }
                        if inside[k] != inside[j] {
                            let s = (mu - d[k]) / (d[j] - d[k]);
                            let x = vec4::axpy(p[k], s, vec4::sub(p[j], p[k]));
                            let x = space.project(x);
                            in_poly.push(x);
                            let key = (t[k].min(t[j]), t[k].max(t[j]));
                            crossings.insert(key, x);
                            cross_edges.push(key);
                        }
                    }
                    let a_in = polygon_area(&in_poly);
                    disc_area += a_in;
                    remaining_area += total - a_in;
                    if cross_edges.len() == 2 {
                        segments.push((cross_edges[0], cross_edges[1]));
                    }
                }
            }
        }

        // Chain the crossing segments into a loop.
        let loop_keys = chain_loop(&segments)?;
        let boundary_loop: Vec<V4<T>> = loop_keys.iter().map(|k| crossings[k]).collect();

        Ok(GeodesicDiscExcision {
            center,
            radius: mu,
            disc_area,
            remaining_area,
            boundary_loop,
        })
    }
}

/// Result of removing a geodesic disc: the excised and remaining areas and
/// the polyline of the excision circle.
#[derive(Debug, Clone)]
pub struct GeodesicDiscExcision<T: Real> {
    pub center: u32,
    pub radius: T,
    pub disc_area: T,
    pub remaining_area: T,
    pub boundary_loop: Vec<V4<T>>,
}

impl<T: Real> GeodesicDiscExcision<T> {
    /// Length of the excision circle polyline.
    pub fn boundary_length(&self) -> T {
        let n = self.boundary_loop.len();
        let mut len = T::zero();
        for i in 0..n {
            len += vec4::dist(self.boundary_loop[i], self.boundary_loop[(i + 1) % n]);
        }
        len
    }

    /// Centroid of the excision circle (ambient coordinates, off-surface).
    pub fn boundary_centroid(&self) -> V4<T> {
        let n = c::<T>(self.boundary_loop.len() as f64);
        let mut s = [T::zero(); 4];
        for p in &self.boundary_loop {
            s = vec4::add(s, *p);
        }
        vec4::scale(s, T::one() / n)
    }
}

fn mid3<T: Real>(a: [T; 3], b: [T; 3]) -> [T; 3] {
    let h = c::<T>(0.5);
    [(a[0] + b[0]) * h, (a[1] + b[1]) * h, (a[2] + b[2]) * h]
}

fn quad_form3<T: Real>(g: [[T; 3]; 3], x: [T; 3], y: [T; 3]) -> T {
    let mut s = T::zero();
    for i in 0..3 {
        for j in 0..3 {
            s += x[i] * g[i][j] * y[j];
        }
    }
    s
}

/// Solve a 3x3 symmetric system by Gaussian elimination with pivoting.
fn solve3<T: Real>(mut a: [[T; 3]; 3], mut b: [T; 3]) -> [T; 3] {
    for col in 0..3 {
        let mut piv = col;
        for r in col + 1..3 {
            if a[r][col].abs() > a[piv][col].abs() {
                piv = r;
            }
        }
        a.swap(col, piv);
        b.swap(col, piv);
        let d = a[col][col];
        if d == T::zero() {
            return [T::zero(); 3];
        }
        for r in 0..3 {
            if r != col {
                let f = a[r][col] / d;
                for cc in 0..3 {
                    a[r][cc] = a[r][cc] - f * a[col][cc];
                }
                b[r] = b[r] - f * b[col];
            }
        }
    }
    [b[0] / a[0][0], b[1] / a[1][1], b[2] / a[2][2]]
}

/// Planar two-triangle unfolding: given edge lengths of triangle (a, b, c)
/// and distances already known at `a` and `b`, the distance at `c` through
/// the triangle interior via a virtual planar source. Place `a` at the
/// origin and `b` at `(L, 0)`; the virtual source sits below the axis, the
/// target above; the straight segment between them must cross `[0, L]`.
fn unfold_update<T: Real>(lab: T, lac: T, lbc: T, da: T, db: T) -> Option<T> {
    let l = lab;
    if l <= T::zero() {
        return None;
    }
    let two = c::<T>(2.0);
    let xs = (l * l + da * da - db * db) / (two * l);
    let ys2 = da * da - xs * xs;
    if ys2 < T::zero() {
        return None;
    }
    let ys = ys2.sqrt();
    let xc = (l * l + lac * lac - lbc * lbc) / (two * l);
    let yc2 = lac * lac - xc * xc;
    let yc = yc2.max(T::zero()).sqrt();
    if ys + yc <= T::zero() {
        return None;
    }
    let cross_x = xs + (xc - xs) * ys / (ys + yc);
    if cross_x < T::zero() || cross_x > l {
        return None;
    }
    let dy = yc + ys;
    let dx = xc - xs;
    let cand = (dx * dx + dy * dy).sqrt();
    // Causality: a distance through the triangle cannot undercut its inputs.
    if cand < da.max(db) {
        return None;
    }
    Some(cand)
}

/// Flat area of a planar-ish polygon in `R^4` (fan triangulation).
fn polygon_area<T: Real>(poly: &[V4<T>]) -> T {
    let mut area = T::zero();
    for i in 1..poly.len().saturating_sub(1) {
        area += chord_triangle_area(poly[0], poly[i], poly[i + 1]);
    }
    area
}

/// Order crossing-edge keys into a single closed loop; errors if the
/// segments form zero or several loops.
fn chain_loop(segments: &[((u32, u32), (u32, u32))]) -> Result<Vec<(u32, u32)>> {
    if segments.is_empty() {
        return Err(MinsurfError::Precondition("excision boundary is empty".into()));
    }
    let mut adj: BTreeMap<(u32, u32), Vec<(u32, u32)>> = BTreeMap::new();
    for (a, b) in segments {
        adj.entry(*a).or_default().push(*b);
        adj.entry(*b).or_default().push(*a);
    }
    let start = segments[0].0;
    let mut out = vec![start];
    let mut prev = start;
    let mut cur = adj[&start][0];
    while cur != start {
        out.push(cur);
        let nbrs = &adj[&cur];
        if nbrs.len() != 2 {
            return Err(MinsurfError::Precondition(
                "excision boundary is not a single closed curve".into(),
            ));
        }
        let next = if nbrs[0] == prev { nbrs[1] } else { nbrs[0] };
        prev = cur;
        cur = next;
        if out.len() > segments.len() + 1 {
            return Err(MinsurfError::Precondition("excision boundary fails to close".into()));
        }
    }
    if out.len() != segments.len() {
        return Err(MinsurfError::Precondition(
            "excision boundary has more than one component".into(),
        ));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Builders
// ---------------------------------------------------------------------------

/// Icosahedron subdivided `level` times and projected to the unit sphere
/// (Euclidean coordinates, fourth component zero). 20 * 4^level triangles.
pub fn icosphere<T: Real>(level: u32) -> TriSurface<T> {
    let phi = c::<T>((1.0 + 5.0f64.sqrt()) / 2.0);
    let one = T::one();
    let zero = T::zero();
    let raw: [[T; 3]; 12] = [
        [-one, phi, zero],
        [one, phi, zero],
        [-one, -phi, zero],
        [one, -phi, zero],
        [zero, -one, phi],
        [zero, one, phi],
        [zero, -one, -phi],
        [zero, one, -phi],
        [phi, zero, -one],
        [phi, zero, one],
        [-phi, zero, -one],
        [-phi, zero, one],
    ];
    let mut vertices: Vec<V4<T>> = raw
        .iter()
        .map(|p| vec4::normalize([p[0], p[1], p[2], T::zero()]))
        .collect();
    let mut triangles: Vec<[u32; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];

    for _ in 0..level {
        let mut midpoint: BTreeMap<(u32, u32), u32> = BTreeMap::new();
        let mut next = Vec::with_capacity(triangles.len() * 4);
        for t in &triangles {
            let mut m = [0u32; 3];
            for k in 0..3 {
                let (i, j) = (t[k], t[(k + 1) % 3]);
                let key = (i.min(j), i.max(j));
                m[k] = *midpoint.entry(key).or_insert_with(|| {
                    let p = vec4::normalize(vec4::add(
                        vertices[i as usize],
                        vertices[j as usize],
                    ));
                    vertices.push(p);
                    (vertices.len() - 1) as u32
                });
            }
            next.push([t[0], m[0], m[2]]);
            next.push([t[1], m[1], m[0]]);
            next.push([t[2], m[2], m[1]]);
            next.push([m[0], m[1], m[2]]);
        }
        triangles = next;
    }

    // Ensure outward orientation (positive dot of triangle normal with the
    // position vector); the seed list is consistent so one check suffices.
    let t = triangles[0];
    let p = [
        vertices[t[0] as usize],
        vertices[t[1] as usize],
        vertices[t[2] as usize],
    ];
    let n = cross4(
        [T::zero(), T::zero(), T::zero(), T::one()],
        vec4::sub(p[1], p[0]),
        vec4::sub(p[2], p[0]),
    );
    if vec4::dot(n, p[0]) < T::zero() {
        for t in &mut triangles {
            t.swap(1, 2);
        }
    }

    TriSurface::new(vertices, triangles).expect("icosphere is a valid sphere mesh")
}

/// Round sphere of radius `r` centered at `center` in the flat space.
pub fn sphere_mesh<T: Real>(center: [T; 3], r: T, level: u32) -> TriSurface<T> {
    icosphere(level).map_vertices(|p| {
        [
            center[0] + r * p[0],
            center[1] + r * p[1],
            center[2] + r * p[2],
            T::zero(),
        ]
    })
}

/// Ellipsoid `x^2/a^2 + y^2/b^2 + z^2/c^2 = 1` in the flat space.
pub fn ellipsoid_mesh_e3<T: Real>(axes: [T; 3], level: u32) -> TriSurface<T> {
    icosphere(level).map_vertices(|p| [axes[0] * p[0], axes[1] * p[1], axes[2] * p[2], T::zero()])
}

/// Great two-sphere `{x_axis = 0}` inside the round three-sphere of radius
/// `r`, oriented so vertex normals point toward `+x_axis`.
pub fn great_sphere_mesh<T: Real>(r: T, axis: usize, level: u32) -> TriSurface<T> {
    assert!(axis < 4, "axis index in 0..4");
    embed_slice(icosphere(level), [r; 4], axis)
}

/// Planar two-sphere `Gamma_i = E(a) ∩ {x_i = 0}` on the quadric with the
/// given semiaxes (the totally geodesic fixed set of `x_i -> -x_i`).
pub fn ellipsoid_slice_mesh<T: Real>(semiaxes: [T; 4], axis: usize, level: u32) -> TriSurface<T> {
    assert!(axis < 4, "axis index in 0..4");
    embed_slice(icosphere(level), semiaxes, axis)
}

fn embed_slice<T: Real>(ico: TriSurface<T>, semiaxes: [T; 4], axis: usize) -> TriSurface<T> {
    let others: Vec<usize> = (0..4).filter(|i| *i != axis).collect();
    let mut out = ico.map_vertices(|p| {
        let mut q = [T::zero(); 4];
        for (slot, &i) in others.iter().enumerate() {
            q[i] = semiaxes[i] * p[slot];
        }
        q
    });
    // Orient so the surface normal matches +e_axis: the slice normal is
    // exactly the deleted coordinate direction.
    let space = AmbientSpace::Ellipsoid4 { semiaxes };
    let n0 = out.vertex_normals(&space)[0];
    if n0[axis] < T::zero() {
        for t in &mut out.triangles {
            t.swap(1, 2);
        }
    }
    out
}

/// Area of the planar two-sphere `Gamma_i` by adaptive quadrature on the
/// three remaining semiaxes (relative error `rel_tol`).
pub fn planar_sphere_area<T: Real>(semiaxes: [T; 4], axis: usize, rel_tol: T) -> T {
    assert!(axis < 4, "axis index in 0..4");
    let rest: Vec<T> = (0..4).filter(|i| *i != axis).map(|i| semiaxes[i]).collect();
    crate::quad::ellipsoid_area3([rest[0], rest[1], rest[2]], rel_tol)
}

/// Structured mesh of the planar sphere `Gamma_axis` on a stretched
/// quadric, adapted along the long first coordinate: cross-section rings
/// are spaced uniformly in `x_1` (step `dx`) inside `|x_1| <= x_fine` and
/// cosine-spaced toward the poles outside, with `cols` vertices per ring.
/// Row-major numbering keeps the adjacency bandwidth near `cols`, which
/// the banded factorizations rely on. The ring stations are symmetric
/// under `x_1 -> -x_1` by construction.
pub fn tube_slice_mesh<T: Real>(
    semiaxes: [T; 4],
    axis: usize,
    x_fine: T,
    dx: T,
    coarse_rows: usize,
    cols: usize,
) -> TriSurface<T> {
    assert!(axis != 0 && axis < 4, "tube runs along x_1; slice axis in 1..4");
    assert!(cols >= 8 && coarse_rows >= 2);
    let a1 = semiaxes[0];
    let rem: Vec<usize> = (1..4).filter(|i| *i != axis).collect();
    let (ra, rb) = (rem[0], rem[1]);

    // Half-grid of positive stations, pole excluded, midplane included.
    let fine_top = x_fine.min(a1 * c::<T>(0.9));
    let n_fine = (fine_top / dx).ceil().to_f64().unwrap() as usize;
    let fine_step = fine_top / c::<T>(n_fine as f64);
    let theta_star = (fine_top / a1).acos();
    let mut half: Vec<T> = Vec::new();
    for j in 1..coarse_rows {
        let th = theta_star * c::<T>(j as f64) / c::<T>(coarse_rows as f64);
        half.push(a1 * th.cos());
    }
    for j in 0..n_fine {
        half.push(fine_top - fine_step * c::<T>(j as f64));
    }
    // Stations descending from near +a1 to 0, then mirrored.
    let mut stations: Vec<T> = half.clone();
    stations.push(T::zero());
    for x in half.iter().rev() {
        stations.push(-*x);
    }

    let rows = stations.len();
    let mut vertices: Vec<V4<T>> = Vec::with_capacity(rows * cols + 2);
    let two_pi = T::PI() * c::<T>(2.0);
    for &x in &stations {
        let s = (T::one() - (x / a1) * (x / a1)).max(T::zero()).sqrt();
        for j in 0..cols {
            let psi = two_pi * c::<T>(j as f64) / c::<T>(cols as f64);
            let mut p = [T::zero(); 4];
            p[0] = x;
            p[ra] = semiaxes[ra] * s * psi.cos();
            p[rb] = semiaxes[rb] * s * psi.sin();
            vertices.push(p);
        }
    }
    let pole_plus = vertices.len() as u32;
    vertices.push({
        let mut p = [T::zero(); 4];
        p[0] = a1;
        p
    });
    let pole_minus = vertices.len() as u32;
    vertices.push({
        let mut p = [T::zero(); 4];
        p[0] = -a1;
        p
    });

    let vid = |i: usize, j: usize| (i * cols + j % cols) as u32;
    let mut triangles: Vec<[u32; 3]> = Vec::with_capacity(2 * rows * cols);
    for j in 0..cols {
        triangles.push([pole_plus, vid(0, j), vid(0, j + 1)]);
    }
    for i in 0..rows - 1 {
        for j in 0..cols {
            triangles.push([vid(i, j), vid(i + 1, j), vid(i + 1, j + 1)]);
            triangles.push([vid(i, j), vid(i + 1, j + 1), vid(i, j + 1)]);
        }
    }
    for j in 0..cols {
        triangles.push([pole_minus, vid(rows - 1, j + 1), vid(rows - 1, j)]);
    }

    let mut out = TriSurface::new(vertices, triangles).expect("tube slice mesh is valid");
    let space = AmbientSpace::Ellipsoid4 { semiaxes };
    let probe = (rows / 2) * cols;
    if out.vertex_normals(&space)[probe][axis] < T::zero() {
        for t in &mut out.triangles {
            t.swap(1, 2);
        }
    }
    out
}

/// Chordal area of the part of the surface with `lo <= x_coord <= hi`,
/// with straddling triangles clipped along the interpolated planes.
pub fn coordinate_strip_area<T: Real>(
    surf: &TriSurface<T>,
    coord: usize,
    lo: T,
    hi: T,
) -> T {
    assert!(coord < 4 && lo < hi);
    let mut total = T::zero();
    for t in &surf.triangles {
        let mut poly: Vec<V4<T>> = t
            .iter()
            .map(|&i| surf.vertices[i as usize])
            .collect();
        poly = clip_halfspace(&poly, coord, lo, true);
        poly = clip_halfspace(&poly, coord, hi, false);
        total += polygon_area(&poly);
    }
    total
}

/// Keep the part of a convex polygon with `p[coord] >= bound` (or `<=`
/// when `keep_above` is false), clipping edges by linear interpolation.
fn clip_halfspace<T: Real>(poly: &[V4<T>], coord: usize, bound: T, keep_above: bool) -> Vec<V4<T>> {
    let inside = |p: &V4<T>| {
        if keep_above {
            p[coord] >= bound
        } else {
            p[coord] <= bound
        }
    };
    let mut out = Vec::new();
    let n = poly.len();
    for i in 0..n {
        let (p, q) = (poly[i], poly[(i + 1) % n]);
        let (ip, iq) = (inside(&p), inside(&q));
        if ip {
            out.push(p);
        }
        if ip != iq {
            let s = (bound - p[coord]) / (q[coord] - p[coord]);
            out.push(vec4::axpy(p, s, vec4::sub(q, p)));
        }
    }
    out
}

// ---------------------------------------------------------------------------
// ASCII interchange format
// ---------------------------------------------------------------------------

/// Serialize a mesh with optional per-vertex scalar attributes. Positions
/// are written as chart coordinates; the header records the space spec.
pub fn write_ascii(
    space: &AmbientSpace<f64>,
    surf: &TriSurface<f64>,
    attrs: &[(&str, &[f64])],
) -> String {
    use std::fmt::Write as _;
    let mut out = String::new();
    writeln!(out, "minsurf-mesh 1").unwrap();
    writeln!(out, "space {}", space.to_json()).unwrap();
    writeln!(out, "counts {} {} {}", surf.nv(), surf.nt(), attrs.len()).unwrap();
    for p in &surf.vertices {
        let chart = space.chart_index(*p);
        let u = space.chart_coords(chart, *p);
        writeln!(out, "v {} {} {} {}", chart, u[0], u[1], u[2]).unwrap();
    }
    for t in &surf.triangles {
        writeln!(out, "t {} {} {}", t[0], t[1], t[2]).unwrap();
    }
    if let Some(m) = surf.marked {
        writeln!(out, "marked {m}").unwrap();
    }
    for (name, vals) in attrs {
        assert_eq!(vals.len(), surf.nv(), "attribute length must match vertex count");
        assert!(!name.contains(char::is_whitespace), "attribute names are single tokens");
        writeln!(out, "attr {name}").unwrap();
        for v in *vals {
            writeln!(out, "{v}").unwrap();
        }
    }
    out
}

/// Parse the ASCII mesh format back into a space, a surface, and any
/// per-vertex attributes.
#[allow(clippy::type_complexity)]
pub fn read_ascii(text: &str) -> Result<(AmbientSpace<f64>, TriSurface<f64>, Vec<(String, Vec<f64>)>)> {
    let mut lines = text.lines();
    let bad = |m: &str| MinsurfError::InvalidInput(format!("mesh parse: {m}"));
    let header = lines.next().ok_or_else(|| bad("empty file"))?;
    if header.trim() != "minsurf-mesh 1" {
        return Err(bad("unknown header"));
    }
    let space_line = lines.next().ok_or_else(|| bad("missing space line"))?;
    let json = space_line
        .strip_prefix("space ")
        .ok_or_else(|| bad("missing space line"))?;
    let space = AmbientSpace::from_json(json)?;
    let counts = lines.next().ok_or_else(|| bad("missing counts"))?;
    let nums: Vec<usize> = counts
        .strip_prefix("counts ")
        .ok_or_else(|| bad("missing counts"))?
        .split_whitespace()
        .map(|s| s.parse().map_err(|_| bad("bad count")))
        .collect::<Result<_>>()?;
    if nums.len() != 3 {
        return Err(bad("counts needs nv nt nattr"));
    }
    let (nv, nt, na) = (nums[0], nums[1], nums[2]);

    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let line = lines.next().ok_or_else(|| bad("missing vertex"))?;
        let mut it = line.split_whitespace();
        if it.next() != Some("v") {
            return Err(bad("expected vertex line"));
        }
        let chart: usize = it.next().ok_or_else(|| bad("vertex chart"))?.parse().map_err(|_| bad("vertex chart"))?;
        let mut u = [0.0; 3];
        for x in &mut u {
            *x = it
                .next()
                .ok_or_else(|| bad("vertex coordinate"))?
                .parse()
                .map_err(|_| bad("vertex coordinate"))?;
        }
        vertices.push(space.chart_embed(chart, u));
    }
    let mut triangles = Vec::with_capacity(nt);
    for _ in 0..nt {
        let line = lines.next().ok_or_else(|| bad("missing triangle"))?;
        let mut it = line.split_whitespace();
        if it.next() != Some("t") {
            return Err(bad("expected triangle line"));
        }
        let mut t = [0u32; 3];
        for x in &mut t {
            *x = it
                .next()
                .ok_or_else(|| bad("triangle index"))?
                .parse()
                .map_err(|_| bad("triangle index"))?;
        }
        triangles.push(t);
    }
    let mut surf = TriSurface::new(vertices, triangles)?;

    let mut attrs = Vec::new();
    let mut pending: Vec<&str> = lines.collect();
    pending.reverse();
    while let Some(line) = pending.pop() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(m) = line.strip_prefix("marked ") {
            let idx: u32 = m.parse().map_err(|_| bad("marked index"))?;
            if idx as usize >= nv {
                return Err(bad("marked index out of range"));
            }
            surf = surf.with_marked(idx);
        } else if let Some(name) = line.strip_prefix("attr ") {
            let mut vals = Vec::with_capacity(nv);
            for _ in 0..nv {
                let l = pending.pop().ok_or_else(|| bad("attribute values truncated"))?;
                vals.push(l.trim().parse().map_err(|_| bad("attribute value"))?);
            }
            attrs.push((name.to_string(), vals));
        } else {
            return Err(bad("unexpected line"));
        }
    }
    if attrs.len() != na {
        return Err(bad("attribute count mismatch"));
    }
    Ok((space, surf, attrs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const PI4: f64 = 4.0 * std::f64::consts::PI;

    #[test]
    fn icosphere_is_valid_and_refines() {
        for level in [0u32, 2] {
            let s: TriSurface<f64> = icosphere(level);
            assert_eq!(s.euler_characteristic(), 2);
            assert_eq!(s.nt(), 20 * 4usize.pow(level));
        }
    }

    #[test]
    fn unit_sphere_area_converges_second_order() {
        let space = AmbientSpace::Euclidean3;
        let mut errs = Vec::new();
        for level in [2u32, 3, 4] {
            let a = icosphere::<f64>(level).area(&space);
            errs.push((PI4 - a).abs());
        }
        // Monotone from below, ~4x error reduction per refinement.
        assert!(errs[0] > errs[1] && errs[1] > errs[2]);
        assert!(errs[0] / errs[1] > 3.4 && errs[1] / errs[2] > 3.4);
        // ~20k triangles: inside 0.1%.
        let a5 = icosphere::<f64>(5).area(&space);
        assert!((PI4 - a5).abs() / PI4 < 1e-3, "area {a5}");
    }

    #[test]
    fn great_sphere_area_in_round_three_sphere() {
        let space = AmbientSpace::RoundSphere3 { radius: 1.0 };
        let s = great_sphere_mesh::<f64>(1.0, 3, 5);
        let a = s.area(&space);
        assert!((PI4 - a).abs() / PI4 < 1e-3, "area {a}");
    }

    #[test]
    fn prolate_spheroid_area_matches_closed_form() {
        let pi = std::f64::consts::PI;
        let exact = 2.0 * pi * (1.0 + 4.0 * pi / (3.0 * 3.0f64.sqrt()));
        let s = ellipsoid_mesh_e3::<f64>([2.0, 1.0, 1.0], 5);
        let a = s.area(&AmbientSpace::Euclidean3);
        assert!((exact - a).abs() / exact < 1e-3, "area {a} vs {exact}");
    }

    #[test]
    fn planar_sphere_areas_increase_with_axis_index() {
        let ax = [4.0, 3.0, 2.0, 1.0];
        let areas: Vec<f64> = (0..4).map(|i| planar_sphere_area(ax, i, 1e-9)).collect();
        assert!(areas[0] < areas[1] && areas[1] < areas[2] && areas[2] < areas[3]);
        assert_relative_eq!(planar_sphere_area([1.0; 4], 2, 1e-9), PI4, max_relative = 1e-8);
        // Mesh area agrees with the quadrature value.
        let mesh = ellipsoid_slice_mesh::<f64>(ax, 1, 5);
        let space = AmbientSpace::Ellipsoid4 { semiaxes: ax };
        let am = mesh.area(&space);
        assert!((am - areas[1]).abs() / areas[1] < 1e-3, "mesh {am} quad {}", areas[1]);
    }

    #[test]
    fn area_exactly_invariant_under_reflection() {
        let ax = [2.0, 1.5, 1.2, 1.0];
        let space = AmbientSpace::Ellipsoid4 { semiaxes: ax };
        let s = ellipsoid_slice_mesh::<f64>(ax, 1, 3);
        let flipped = s.map_vertices(|p| [-p[0], p[1], p[2], p[3]]);
        assert_eq!(s.area(&space), flipped.area(&space));
    }

    #[test]
    fn slice_mesh_normals_and_shape_operator_are_exact() {
        let ax = [2.0, 1.5, 1.2, 1.0];
        let space = AmbientSpace::Ellipsoid4 { semiaxes: ax };
        let s = ellipsoid_slice_mesh::<f64>(ax, 1, 3);
        for n in s.vertex_normals(&space) {
            assert!((n[1] - 1.0).abs() < 1e-14);
            assert_eq!(n[0], 0.0);
            assert_eq!(n[2], 0.0);
            assert_eq!(n[3], 0.0);
        }
        for (h, a2) in s.shape_operator(&space) {
            assert!(h.abs() < 1e-10, "H {h}");
            assert!(a2 < 1e-10, "|A|^2 {a2}");
        }
    }

    #[test]
    fn round_sphere_shape_operator() {
        let space = AmbientSpace::Euclidean3;
        let s = sphere_mesh::<f64>([0.0; 3], 2.0, 4);
        for (h, a2) in s.shape_operator(&space) {
            assert_relative_eq!(h, 1.0, max_relative = 1e-2);
            // |A|^2 is quadratic in the fitted curvatures, so the averaged
            // vertex-normal bias enters twice.
            assert_relative_eq!(a2, 0.5, max_relative = 2e-2);
        }
    }

    #[test]
    fn geodesic_distance_pole_to_pole() {
        let s: TriSurface<f64> = icosphere(5);
        // Vertex 0 and its antipode: the icosahedron has antipodal symmetry;
        // find the farthest vertex and compare with pi.
        let d = s.geodesic_distances(0);
        let dmax = d.iter().cloned().fold(0.0, f64::max);
        assert!((dmax - std::f64::consts::PI).abs() / std::f64::consts::PI < 1e-2, "dmax {dmax}");
    }

    #[test]
    fn excision_reproduces_spherical_cap() {
        let space = AmbientSpace::Euclidean3;
        let s: TriSurface<f64> = icosphere(5).with_marked(0);
        let total = s.area(&space);
        let exc = s.excise_geodesic_disc(&space, std::f64::consts::FRAC_PI_2).unwrap();
        let two_pi = 2.0 * std::f64::consts::PI;
        assert!((exc.remaining_area - two_pi).abs() / two_pi < 1e-2);
        // Chordal accounting is exact; against the quadrature area it only
        // needs to match at mesh order.
        assert!(((exc.remaining_area + exc.disc_area) - total).abs() / total < 1e-3);
        // Boundary is a single loop near the equator, length ~ 2 pi.
        assert!((exc.boundary_length() - two_pi).abs() / two_pi < 2e-2);

        // Monotonicity in the radius.
        let bigger = s.excise_geodesic_disc(&space, 0.6 * std::f64::consts::PI * 0.5).unwrap();
        let smaller = s.excise_geodesic_disc(&space, 0.4 * std::f64::consts::PI * 0.5).unwrap();
        assert!(bigger.remaining_area < smaller.remaining_area);

        // Tiny disc: remaining -> total.
        let tiny = s.excise_geodesic_disc(&space, 1e-3).unwrap();
        assert!(tiny.disc_area < 1e-5);
        // Oversized disc: precondition error.
        assert!(s.excise_geodesic_disc(&space, 4.0).is_err());
    }

    #[test]
    fn normal_graph_zero_and_constant_offsets() {
        let space = AmbientSpace::RoundSphere3 { radius: 1.0 };
        let s = great_sphere_mesh::<f64>(1.0, 0, 4);
        let zero = vec![0.0; s.nv()];
        let same = s.normal_graph(&space, &zero).unwrap();
        for (p, q) in s.vertices.iter().zip(&same.vertices) {
            assert!(vec4::dist(*p, *q) < 1e-14);
        }
        // Constant offset t: geodesic sphere of radius pi/2 - t, area
        // 4 pi cos^2 t.
        let t = 0.3;
        let offs = vec![t; s.nv()];
        let moved = s.normal_graph(&space, &offs).unwrap();
        let expected = PI4 * t.cos().powi(2);
        let a = moved.area(&space);
        assert!((a - expected).abs() / expected < 5e-3, "area {a} vs {expected}");
        // Reflection symmetry of the totally geodesic center.
        let neg: Vec<f64> = offs.iter().map(|x| -x).collect();
        let mirrored = s.normal_graph(&space, &neg).unwrap();
        let am = mirrored.area(&space);
        assert!((a - am).abs() / a < 1e-10);
    }

    #[test]
    fn tube_slice_mesh_is_valid_and_matches_quadrature() {
        let ax = [8.0, 1.5, 1.2, 1.0];
        let space = AmbientSpace::Ellipsoid4 { semiaxes: ax };
        let s = tube_slice_mesh::<f64>(ax, 1, 6.0, 0.25, 12, 48);
        assert_eq!(s.euler_characteristic(), 2);
        let quad = planar_sphere_area(ax, 1, 1e-9);
        let am = s.area(&space);
        assert!((am - quad).abs() / quad < 2e-3, "mesh {am} quad {quad}");
        // Hyperplane slice: normals and shape operator exactly zero out.
        for n in s.vertex_normals(&space) {
            assert!((n[1].abs() - 1.0).abs() < 1e-14);
        }
        for (h, a2) in s.shape_operator(&space) {
            assert!(h.abs() < 1e-10);
            assert!(a2 < 1e-10);
        }
    }

    #[test]
    fn coordinate_strip_areas_partition_the_surface() {
        let s: TriSurface<f64> = icosphere(4);
        let total: f64 = s
            .triangles
            .iter()
            .map(|t| {
                chord_triangle_area(
                    s.vertices[t[0] as usize],
                    s.vertices[t[1] as usize],
                    s.vertices[t[2] as usize],
                )
            })
            .sum();
        let left = coordinate_strip_area(&s, 0, -1.1, 0.2);
        let right = coordinate_strip_area(&s, 0, 0.2, 1.1);
        assert!((left + right - total).abs() < 1e-12 * total);
        // Archimedes: a band of height h on the unit sphere has area 2 pi h.
        let band = coordinate_strip_area(&s, 2, -0.3, 0.4);
        let exact = 2.0 * std::f64::consts::PI * 0.7;
        assert!((band - exact).abs() / exact < 1e-2, "band {band}");
    }

    #[test]
    fn ascii_round_trip_preserves_geometry_and_attributes() {
        let space = AmbientSpace::RoundSphere3 { radius: 1.0 };
        let s = great_sphere_mesh::<f64>(1.0, 1, 2).with_marked(7);
        let field: Vec<f64> = (0..s.nv()).map(|i| (i as f64).sin()).collect();
        let text = write_ascii(&space, &s, &[("mode0", &field)]);
        let (space2, s2, attrs) = read_ascii(&text).unwrap();
        assert_eq!(space, space2);
        assert_eq!(s.triangles, s2.triangles);
        assert_eq!(s2.marked, Some(7));
        assert_eq!(attrs.len(), 1);
        assert_eq!(attrs[0].0, "mode0");
        for (a, b) in field.iter().zip(&attrs[0].1) {
            assert_eq!(a, b);
        }
        for (p, q) in s.vertices.iter().zip(&s2.vertices) {
            assert!(vec4::dist(*p, *q) < 1e-12);
        }
    }

    #[test]
    fn ascii_round_trip_is_byte_stable_in_flat_space() {
        // Single-chart space: chart coordinates reproduce exactly, so a
        // write-read-write cycle is the identity on bytes.
        let space = AmbientSpace::Euclidean3;
        let s = sphere_mesh::<f64>([0.3, -0.7, 1.1], 0.9, 2).with_marked(0);
        let field: Vec<f64> = (0..s.nv()).map(|i| 1.0 / (1.0 + i as f64)).collect();
        let text = write_ascii(&space, &s, &[("h", &field)]);
        let (space2, s2, attrs) = read_ascii(&text).unwrap();
        let text2 = write_ascii(&space2, &s2, &[("h", &attrs[0].1)]);
        assert_eq!(text, text2);
    }
}
