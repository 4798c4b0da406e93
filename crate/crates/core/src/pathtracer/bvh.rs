//! Binned-SAH bounding volume hierarchy over triangles.

use glam::DVec3;

use super::camera::Ray;
use crate::scene::Aabb;

const BINS: usize = 12;
const LEAF_SIZE: usize = 4;
const TRAVERSAL_COST: f64 = 1.0;
const INTERSECT_COST: f64 = 1.0;

#[derive(Clone, Copy, Debug)]
struct Node {
    bounds: Aabb,
    /// Leaf: index of the first primitive. Interior: index of the right child
    /// (the left child immediately follows the node).
    offset: u32,
    /// Zero for interior nodes.
    count: u32,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TriangleHit {
    pub t: f64,
    pub prim: usize,
    /// Barycentric weights of vertices 1 and 2.
    pub b1: f64,
    pub b2: f64,
}

#[derive(Clone, Debug)]
pub struct Bvh {
    nodes: Vec<Node>,
    /// Triangles reordered to match the leaves, with their original indices.
    tris: Vec<[DVec3; 3]>,
    prim_ids: Vec<usize>,
}

struct BuildPrim {
    bounds: Aabb,
    centroid: DVec3,
    id: usize,
}

fn surface_area(b: &Aabb) -> f64 {
    if b.is_empty() {
        return 0.0;
    }
    let e = b.extent();
    2.0 * (e.x * e.y + e.y * e.z + e.z * e.x)
}

impl Bvh {
    pub fn build(triangles: &[[DVec3; 3]]) -> Bvh {
        let mut prims: Vec<BuildPrim> = triangles
            .iter()
            .enumerate()
            .map(|(id, t)| {
                let bounds = Aabb::from_points(t.iter().copied());
                BuildPrim {
                    bounds,
                    centroid: bounds.center(),
                    id,
                }
            })
            .collect();
        let mut nodes = Vec::with_capacity(2 * prims.len().max(1));
        if !prims.is_empty() {
            let n = prims.len();
            build_recursive(&mut prims, 0, n, &mut nodes);
        }
        let prim_ids: Vec<usize> = prims.iter().map(|p| p.id).collect();
        Bvh {
            nodes,
            tris: prim_ids.iter().map(|&i| triangles[i]).collect(),
            prim_ids,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn bounds(&self) -> Aabb {
        self.nodes.first().map(|n| n.bounds).unwrap_or(Aabb::EMPTY)
    }

    /// Closest hit with `t` in `(t_min, t_max)`.
    pub fn intersect(&self, ray: &Ray, t_min: f64, t_max: f64) -> Option<TriangleHit> {
        self.traverse(ray, t_min, t_max, false)
    }

    pub fn occluded(&self, ray: &Ray, t_min: f64, t_max: f64) -> bool {
        self.traverse(ray, t_min, t_max, true).is_some()
    }

    fn traverse(&self, ray: &Ray, t_min: f64, mut t_max: f64, any_hit: bool) -> Option<TriangleHit> {
        if self.nodes.is_empty() {
            return None;
        }
        let inv = ray.dir.recip();
        let neg = [inv.x < 0.0, inv.y < 0.0, inv.z < 0.0];
        let mut best = None;
        let mut stack = [0u32; 128];
        let mut sp = 0usize;
        let mut idx = 0usize;
        loop {
            let node = &self.nodes[idx];
            if slab(&node.bounds, ray.origin, inv, t_min, t_max) {
                if node.count > 0 {
                    let start = node.offset as usize;
                    for i in start..start + node.count as usize {
                        if let Some((t, b1, b2)) = intersect_triangle(ray, &self.tris[i], t_min, t_max) {
                            t_max = t;
                            best = Some(TriangleHit {
                                t,
                                prim: self.prim_ids[i],
                                b1,
                                b2,
                            });
                            if any_hit {
                                return best;
                            }
                        }
                    }
                } else {
                    // Visit the near child first.
                    let left = idx + 1;
                    let right = node.offset as usize;
                    let axis = longest_axis(&node.bounds);
                    let (first, second) = if neg[axis] { (right, left) } else { (left, right) };
                    stack[sp] = second as u32;
                    sp += 1;
                    idx = first;
                    continue;
                }
            }
            if sp == 0 {
                break;
            }
            sp -= 1;
            idx = stack[sp] as usize;
        }
        best
    }
}

fn longest_axis(b: &Aabb) -> usize {
    let e = b.extent();
    if e.x >= e.y && e.x >= e.z {
        0
    } else if e.y >= e.z {
        1
    } else {
        2
    }
}

#[inline]
fn slab(b: &Aabb, o: DVec3, inv: DVec3, t_min: f64, t_max: f64) -> bool {
    let t0 = (b.min - o) * inv;
    let t1 = (b.max - o) * inv;
    // NaN from 0 * inf is dropped by min/max, which keeps axis-parallel rays correct.
    let near = t0.min(t1).max_element().max(t_min);
    let far = t0.max(t1).min_element().min(t_max);
    near <= far
}

/// Möller-Trumbore.
#[inline]
pub fn intersect_triangle(ray: &Ray, tri: &[DVec3; 3], t_min: f64, t_max: f64) -> Option<(f64, f64, f64)> {
    let e1 = tri[1] - tri[0];
    let e2 = tri[2] - tri[0];
    let p = ray.dir.cross(e2);
    let det = e1.dot(p);
    if det.abs() < 1e-14 {
        return None;
    }
    let inv_det = 1.0 / det;
    let s = ray.origin - tri[0];
    let b1 = s.dot(p) * inv_det;
    if !(0.0..=1.0).contains(&b1) {
        return None;
    }
    let q = s.cross(e1);
    let b2 = ray.dir.dot(q) * inv_det;
    if b2 < 0.0 || b1 + b2 > 1.0 {
        return None;
    }
    let t = e2.dot(q) * inv_det;
    (t > t_min && t < t_max).then_some((t, b1, b2))
}

fn build_recursive(prims: &mut [BuildPrim], start: usize, end: usize, nodes: &mut Vec<Node>) -> usize {
    let slice = &mut prims[start..end];
    let bounds = slice.iter().fold(Aabb::EMPTY, |b, p| b.union(p.bounds));
    let node_idx = nodes.len();
    nodes.push(Node {
        bounds,
        offset: start as u32,
        count: (end - start) as u32,
    });
    let n = end - start;
    if n <= LEAF_SIZE {
        return node_idx;
    }
    let cbounds = Aabb::from_points(slice.iter().map(|p| p.centroid));
    let axis = longest_axis(&cbounds);
    let lo = cbounds.min[axis];
    let extent = cbounds.max[axis] - lo;
    if !(extent > 0.0) {
        // All centroids coincide; split in the middle of the list.
        let mid = start + n / 2;
        return split(prims, start, mid, end, node_idx, nodes);
    }
    let bin_of = |c: f64| (((c - lo) / extent * BINS as f64) as usize).min(BINS - 1);
    let mut bin_bounds = [Aabb::EMPTY; BINS];
    let mut bin_counts = [0usize; BINS];
    for p in slice.iter() {
        let b = bin_of(p.centroid[axis]);
        bin_bounds[b] = bin_bounds[b].union(p.bounds);
        bin_counts[b] += 1;
    }
    let mut best = (f64::INFINITY, 0usize);
    for split_at in 1..BINS {
        let (mut lb, mut rb) = (Aabb::EMPTY, Aabb::EMPTY);
        let (mut lc, mut rc) = (0, 0);
        for i in 0..split_at {
            lb = lb.union(bin_bounds[i]);
            lc += bin_counts[i];
        }
        for i in split_at..BINS {
            rb = rb.union(bin_bounds[i]);
            rc += bin_counts[i];
        }
        if lc == 0 || rc == 0 {
            continue;
        }
        let cost = surface_area(&lb) * lc as f64 + surface_area(&rb) * rc as f64;
        if cost < best.0 {
            best = (cost, split_at);
        }
    }
    let leaf_cost = INTERSECT_COST * n as f64;
    let split_cost = TRAVERSAL_COST + INTERSECT_COST * best.0 / surface_area(&bounds).max(1e-300);
    if best.0.is_infinite() || (split_cost >= leaf_cost && n <= 4 * LEAF_SIZE) {
        return node_idx;
    }
    // Partition in place.
    let mut i = 0;
    let mut j = n;
    while i < j {
        if bin_of(slice[i].centroid[axis]) < best.1 {
            i += 1;
        } else {
            j -= 1;
            slice.swap(i, j);
        }
    }
    split(prims, start, start + i, end, node_idx, nodes)
}

fn split(prims: &mut [BuildPrim], start: usize, mid: usize, end: usize, node_idx: usize, nodes: &mut Vec<Node>) -> usize {
    build_recursive(prims, start, mid, nodes);
    let right = build_recursive(prims, mid, end, nodes);
    nodes[node_idx].offset = right as u32;
    nodes[node_idx].count = 0;
    node_idx
}
