//! Convex hulls in dimension 2 (monotone chain) and 3 (quickhull with
//! conflict lists).

use std::collections::HashMap;

use nalgebra::{DVector, Vector3};

use crate::error::{GeomError, Result};

/// A facet `⟨normal, x⟩ = offset` with outward unit normal.
#[derive(Debug, Clone)]
pub struct Facet {
    pub normal: DVector<f64>,
    pub offset: f64,
    pub verts: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct Hull {
    pub facets: Vec<Facet>,
    /// Indices of input points that are hull vertices, sorted.
    pub vertices: Vec<usize>,
}

impl Hull {
    /// Largest signed distance of `x` outside the hull (≤ 0 inside).
    pub fn excess(&self, x: &DVector<f64>) -> f64 {
        self.facets.iter().map(|f| f.normal.dot(x) - f.offset).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Convex hull of points in ℝ² or ℝ³.
pub fn hull(points: &[DVector<f64>]) -> Result<Hull> {
    match points.first().map(|p| p.len()) {
        None => Err(GeomError::Empty),
        Some(2) => hull2(points),
        Some(3) => hull3(points),
        Some(d) => Err(GeomError::Precondition(format!("hull only in dimension 2 or 3, got {d}"))),
    }
}

fn scale_of(points: &[DVector<f64>]) -> f64 {
    points.iter().map(|p| p.amax()).fold(0.0, f64::max).max(f64::MIN_POSITIVE)
}

fn hull2(points: &[DVector<f64>]) -> Result<Hull> {
    let sc = scale_of(points);
    let tol = 1e-12 * sc * sc;
    let mut idx: Vec<usize> = (0..points.len()).collect();
    idx.sort_by(|&a, &b| {
        let (p, q) = (&points[a], &points[b]);
        p[0].partial_cmp(&q[0]).unwrap().then(p[1].partial_cmp(&q[1]).unwrap())
    });
    let cross = |o: usize, a: usize, b: usize| {
        let (o, a, b) = (&points[o], &points[a], &points[b]);
        (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
    };
    let mut lower: Vec<usize> = Vec::new();
    for &i in &idx {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], i) <= tol {
            lower.pop();
        }
        lower.push(i);
    }
    let mut upper: Vec<usize> = Vec::new();
    for &i in idx.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], i) <= tol {
            upper.pop();
        }
        upper.push(i);
    }
    lower.pop();
    upper.pop();
    let ring: Vec<usize> = lower.into_iter().chain(upper).collect();
    if ring.len() < 3 {
        return Err(GeomError::Precondition("points are collinear".into()));
    }
    let mut facets = Vec::with_capacity(ring.len());
    for k in 0..ring.len() {
        let (a, b) = (ring[k], ring[(k + 1) % ring.len()]);
        let d = &points[b] - &points[a];
        let n = DVector::from_vec(vec![d[1], -d[0]]).normalize();
        facets.push(Facet { offset: n.dot(&points[a]), normal: n, verts: vec![a, b] });
    }
    let mut vertices = ring;
    vertices.sort_unstable();
    Ok(Hull { facets, vertices })
}

struct Face {
    v: [usize; 3],
    nb: [usize; 3],
    n: Vector3<f64>,
    off: f64,
    outside: Vec<usize>,
    alive: bool,
}

fn plane(p: &[Vector3<f64>], v: [usize; 3]) -> (Vector3<f64>, f64) {
    let n = (p[v[1]] - p[v[0]]).cross(&(p[v[2]] - p[v[0]]));
    let n = n / n.norm();
    (n, n.dot(&p[v[0]]))
}

fn hull3(points: &[DVector<f64>]) -> Result<Hull> {
    let p: Vec<Vector3<f64>> = points.iter().map(|x| Vector3::new(x[0], x[1], x[2])).collect();
    let scale = scale_of(points);
    let eps = 1e-11 * scale;

    // initial tetrahedron
    let (mut i0, mut i1) = (0, 0);
    for (i, q) in p.iter().enumerate() {
        if q.x < p[i0].x {
            i0 = i;
        }
        if q.x > p[i1].x {
            i1 = i;
        }
    }
    if (p[i1] - p[i0]).norm() <= eps {
        for (i, q) in p.iter().enumerate() {
            if (q - p[i0]).norm() > (p[i1] - p[i0]).norm() {
                i1 = i;
            }
        }
    }
    let dir = p[i1] - p[i0];
    if dir.norm() <= eps {
        return Err(GeomError::Precondition("points coincide".into()));
    }
    let dir = dir / dir.norm();
    let i2 = (0..p.len())
        .max_by(|&a, &b| {
            let da = (p[a] - p[i0]).cross(&dir).norm();
            let db = (p[b] - p[i0]).cross(&dir).norm();
            da.partial_cmp(&db).unwrap()
        })
        .unwrap();
    if (p[i2] - p[i0]).cross(&dir).norm() <= eps {
        return Err(GeomError::Precondition("points are collinear".into()));
    }
    let nrm = (p[i1] - p[i0]).cross(&(p[i2] - p[i0])).normalize();
    let i3 = (0..p.len())
        .max_by(|&a, &b| {
            let da = (p[a] - p[i0]).dot(&nrm).abs();
            let db = (p[b] - p[i0]).dot(&nrm).abs();
            da.partial_cmp(&db).unwrap()
        })
        .unwrap();
    if (p[i3] - p[i0]).dot(&nrm).abs() <= eps {
        return Err(GeomError::Precondition("points are coplanar".into()));
    }
    let centre = (p[i0] + p[i1] + p[i2] + p[i3]) / 4.0;

    let mut faces: Vec<Face> = Vec::new();
    let tet = [i0, i1, i2, i3];
    let tris = [[0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]];
    for t in tris {
        let mut v = [tet[t[0]], tet[t[1]], tet[t[2]]];
        let (mut n, mut off) = plane(&p, v);
        if n.dot(&centre) - off > 0.0 {
            v.swap(1, 2);
            (n, off) = plane(&p, v);
        }
        faces.push(Face { v, nb: [usize::MAX; 3], n, off, outside: Vec::new(), alive: true });
    }
    link_all(&mut faces);

    for i in 0..p.len() {
        if tet.contains(&i) {
            continue;
        }
        assign(&mut faces, &p, i, &[0, 1, 2, 3], eps);
    }

    let mut stack: Vec<usize> = (0..faces.len()).collect();
    while let Some(fi) = stack.pop() {
        if !faces[fi].alive || faces[fi].outside.is_empty() {
            continue;
        }
        let f = &faces[fi];
        let apex = *f
            .outside
            .iter()
            .max_by(|&&a, &&b| (f.n.dot(&p[a]) - f.off).partial_cmp(&(f.n.dot(&p[b]) - f.off)).unwrap())
            .unwrap();
        let a = p[apex];

        // visible set by flood fill
        let mut visible = vec![fi];
        let mut is_vis: HashMap<usize, bool> = HashMap::new();
        is_vis.insert(fi, true);
        let mut k = 0;
        while k < visible.len() {
            let g = visible[k];
            k += 1;
            for e in 0..3 {
                let h = faces[g].nb[e];
                if is_vis.contains_key(&h) {
                    continue;
                }
                let vis = faces[h].n.dot(&a) - faces[h].off > eps;
                is_vis.insert(h, vis);
                if vis {
                    visible.push(h);
                }
            }
        }
        // horizon edges (u, w, outer face), oriented as in the visible face
        let mut horizon = Vec::new();
        for &g in &visible {
            for e in 0..3 {
                let h = faces[g].nb[e];
                if !is_vis[&h] {
                    horizon.push((faces[g].v[e], faces[g].v[(e + 1) % 3], h));
                }
            }
        }
        let mut orphans = Vec::new();
        for &g in &visible {
            faces[g].alive = false;
            orphans.append(&mut faces[g].outside);
        }
        let mut by_start: HashMap<usize, usize> = HashMap::new();
        let mut by_end: HashMap<usize, usize> = HashMap::new();
        let mut created = Vec::with_capacity(horizon.len());
        for &(u, w, outer) in &horizon {
            let v = [u, w, apex];
            let (n, off) = plane(&p, v);
            let id = faces.len();
            faces.push(Face { v, nb: [outer, usize::MAX, usize::MAX], n, off, outside: Vec::new(), alive: true });
            let slot = (0..3).find(|&e| faces[outer].v[e] == w && faces[outer].v[(e + 1) % 3] == u).unwrap();
            faces[outer].nb[slot] = id;
            by_start.insert(u, id);
            by_end.insert(w, id);
            created.push(id);
        }
        for &id in &created {
            let [u, w, _] = faces[id].v;
            faces[id].nb[1] = by_start[&w];
            faces[id].nb[2] = by_end[&u];
        }
        for o in orphans {
            if o != apex {
                assign(&mut faces, &p, o, &created, eps);
            }
        }
        stack.extend(created);
    }

    let mut facets = Vec::new();
    // a true vertex sees at least three distinct incident facet planes
    let mut incident: std::collections::BTreeMap<usize, Vec<Vector3<f64>>> = Default::default();
    for f in faces.iter().filter(|f| f.alive) {
        for &i in &f.v {
            let list = incident.entry(i).or_default();
            if !list.iter().any(|n| (n - f.n).norm() < 1e-9) {
                list.push(f.n);
            }
        }
        facets.push(Facet { normal: DVector::from_column_slice(f.n.as_slice()), offset: f.off, verts: f.v.to_vec() });
    }
    let vertices = incident.into_iter().filter(|(_, n)| n.len() >= 3).map(|(i, _)| i).collect();
    Ok(Hull { facets, vertices })
}

fn assign(faces: &mut [Face], p: &[Vector3<f64>], i: usize, candidates: &[usize], eps: f64) {
    let mut best = None;
    let mut bd = eps;
    for &f in candidates {
        let d = faces[f].n.dot(&p[i]) - faces[f].off;
        if d > bd {
            bd = d;
            best = Some(f);
        }
    }
    if let Some(f) = best {
        faces[f].outside.push(i);
    }
}

fn link_all(faces: &mut [Face]) {
    let n = faces.len();
    for a in 0..n {
        for e in 0..3 {
            let (u, w) = (faces[a].v[e], faces[a].v[(e + 1) % 3]);
            for b in 0..n {
                if b == a {
                    continue;
                }
                if (0..3).any(|s| faces[b].v[s] == w && faces[b].v[(s + 1) % 3] == u) {
                    faces[a].nb[e] = b;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn v(c: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(c)
    }

    #[test]
    fn cube_hull() {
        let mut pts = Vec::new();
        for s in 0..8 {
            pts.push(v(&[
                if s & 1 == 0 { -1.0 } else { 1.0 },
                if s & 2 == 0 { -1.0 } else { 1.0 },
                if s & 4 == 0 { -1.0 } else { 1.0 },
            ]));
        }
        pts.push(v(&[0.0, 0.0, 0.0]));
        pts.push(v(&[0.5, 0.2, 1.0]));
        let h = hull(&pts).unwrap();
        assert_eq!(h.vertices, (0..8).collect::<Vec<_>>());
        assert_eq!(h.facets.len(), 12);
        for f in &h.facets {
            assert!((f.offset - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn random_cloud_contains_all_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pts: Vec<_> = (0..3000).map(|_| DVector::from_fn(3, |_, _| rng.gen_range(-1.0..1.0))).collect();
        let h = hull(&pts).unwrap();
        for q in &pts {
            assert!(h.excess(q) < 1e-10);
        }
        for &i in &h.vertices {
            assert!(h.excess(&pts[i]).abs() < 1e-10);
        }
        // Euler characteristic of a triangulated sphere
        assert_eq!(h.facets.len(), 2 * h.vertices.len() - 4);
    }

    #[test]
    fn sphere_points_all_vertices() {
        let mut pts = Vec::new();
        for i in 0..40 {
            for j in 0..20 {
                let th = std::f64::consts::PI * (j as f64 + 0.5) / 20.0;
                let ph = 2.0 * std::f64::consts::PI * i as f64 / 40.0;
                pts.push(v(&[th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos()]));
            }
        }
        let h = hull(&pts).unwrap();
        assert_eq!(h.vertices.len(), pts.len());
    }

    #[test]
    fn polygon_hull() {
        let pts = vec![v(&[0., 0.]), v(&[1., 0.]), v(&[1., 1.]), v(&[0., 1.]), v(&[0.5, 0.5]), v(&[0.5, 0.0])];
        let h = hull(&pts).unwrap();
        assert_eq!(h.vertices, vec![0, 1, 2, 3]);
        for q in &pts {
            assert!(h.excess(q) < 1e-14);
        }
    }

    #[test]
    fn degenerate_inputs() {
        assert!(hull(&[v(&[0., 0., 0.]), v(&[1., 0., 0.]), v(&[0., 1., 0.]), v(&[1., 1., 0.])]).is_err());
        assert!(hull(&[]).is_err());
    }
}
