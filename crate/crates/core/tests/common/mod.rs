#![allow(dead_code)]

use nalgebra::{Matrix3, Vector3};
use rand::rngs::StdRng;
use rand::Rng;
use wirebend_core::fabcheck::check_all;
use wirebend_core::machine::MachineProfile;
use wirebend_core::wiregraph::WireframeGraph;

pub type V = Vector3<f64>;

/// Root-mean-square distance after the optimal rigid alignment of `a` onto
/// `b` (Kabsch, reflections excluded).
pub fn kabsch_rmsd(a: &[V], b: &[V]) -> f64 {
    assert_eq!(a.len(), b.len());
    let n = a.len() as f64;
    let ca = a.iter().sum::<V>() / n;
    let cb = b.iter().sum::<V>() / n;
    let mut h = Matrix3::zeros();
    for (p, q) in a.iter().zip(b) {
        h += (p - ca) * (q - cb).transpose();
    }
    let svd = h.svd(true, true);
    let (u, vt) = (svd.u.unwrap(), svd.v_t.unwrap());
    let mut d = Matrix3::identity();
    if (vt.transpose() * u.transpose()).determinant() < 0.0 {
        d[(2, 2)] = -1.0;
    }
    let r = vt.transpose() * d * u.transpose();
    let sq: f64 = a
        .iter()
        .zip(b)
        .map(|(p, q)| (r * (p - ca) + cb - q).norm_squared())
        .sum();
    (sq / n).sqrt()
}

fn unit(rng: &mut StdRng) -> V {
    loop {
        let v = V::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let n = v.norm();
        if n > 0.1 && n <= 1.0 {
            return v / n;
        }
    }
}

/// Random walk polyline: segments in `[20.4, 80]` mm, bends in `[2, 150]`
/// degrees, `n` vertices.
pub fn random_walk(rng: &mut StdRng, n: usize) -> Vec<V> {
    let mut pts = vec![V::zeros()];
    let mut dir = unit(rng);
    for k in 1..n {
        if k > 1 {
            let bend = rng.gen_range(2.0_f64..150.0).to_radians();
            let mut perp = unit(rng);
            perp -= dir * dir.dot(&perp);
            if perp.norm() < 1e-3 {
                perp = dir.cross(&V::x());
                if perp.norm() < 1e-3 {
                    perp = dir.cross(&V::y());
                }
            }
            let perp = perp.normalize();
            dir = (dir * bend.cos() + perp * bend.sin()).normalize();
        }
        let len = rng.gen_range(20.4..80.0);
        let next = pts[k - 1] + dir * len;
        pts.push(next);
    }
    pts
}

/// Random fabricable wireframe with at most `max_vertices` vertices and the
/// path the checker chose for it. Open walks, closed loops and walks that
/// revisit a vertex are all generated.
pub fn random_fabricable(rng: &mut StdRng, max_vertices: usize) -> (WireframeGraph, Vec<usize>) {
    let profile = MachineProfile::default();
    loop {
        let n = rng.gen_range(2..=max_vertices);
        let pts = random_walk(rng, n);
        let mut edges: Vec<(usize, usize)> = (0..n - 1).map(|i| (i, i + 1)).collect();
        // Close the loop or return to an earlier vertex now and then.
        match rng.gen_range(0..4) {
            0 if n >= 4 => edges.push((n - 1, 0)),
            1 if n >= 5 => edges.push((n - 1, rng.gen_range(0..n - 3))),
            _ => {}
        }
        let Ok(g) = WireframeGraph::new(pts, &edges) else { continue };
        let d = check_all(&g, &profile);
        if d.overall_fabricable {
            return (g, d.euler.path.unwrap());
        }
    }
}

/// Every walk that uses each edge exactly once, as vertex sequences.
pub fn all_euler_walks(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<usize>> {
    fn go(v: usize, edges: &[(usize, usize)], used: &mut [bool], walk: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if used.iter().all(|&u| u) {
            out.push(walk.clone());
            return;
        }
        for k in 0..edges.len() {
            if used[k] {
                continue;
            }
            let (a, b) = edges[k];
            let w = if a == v {
                b
            } else if b == v {
                a
            } else {
                continue;
            };
            used[k] = true;
            walk.push(w);
            go(w, edges, used, walk, out);
            walk.pop();
            used[k] = false;
        }
    }
    let mut out = Vec::new();
    if edges.is_empty() {
        return out;
    }
    for s in 0..n {
        let mut used = vec![false; edges.len()];
        let mut walk = vec![s];
        go(s, edges, &mut used, &mut walk, &mut out);
    }
    out
}

pub fn graph_from(n: usize, edges: &[(usize, usize)], rng: &mut StdRng) -> WireframeGraph {
    let pts = (0..n)
        .map(|_| V::new(rng.gen_range(0.0..100.0), rng.gen_range(0.0..100.0), rng.gen_range(0.0..100.0)))
        .collect();
    WireframeGraph::new(pts, edges).unwrap()
}
