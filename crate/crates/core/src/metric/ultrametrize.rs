//! Subdominant integral ultrametric of a finite metric space.

use super::space::{MetricSpace, UltrametricSpace};
use super::union_find::UnionFind;

/// Returns the largest ultrametric lying pointwise below the ceiling of `d`:
/// `ρ(x, y)` is the least, over chains from x to y, of the largest rounded-up
/// hop. Computed by single linkage (Kruskal) over the rounded distances.
pub fn ultrametrize(space: &MetricSpace) -> UltrametricSpace {
    let n = space.len();
    let mut edges: Vec<(u64, usize, usize)> = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            edges.push((space.dist(i, j).ceil() as u64, i, j));
        }
    }
    edges.sort_unstable();

    let mut uf = UnionFind::new(n);
    let mut members: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    let mut rho = vec![0u64; n * n];
    for (w, i, j) in edges {
        let (ri, rj) = (uf.find(i), uf.find(j));
        if ri == rj {
            continue;
        }
        for &a in &members[ri] {
            for &b in &members[rj] {
                rho[a * n + b] = w;
                rho[b * n + a] = w;
            }
        }
        uf.union(ri, rj);
        let root = uf.find(ri);
        let (keep, gone) = if root == ri { (ri, rj) } else { (rj, ri) };
        let moved = std::mem::take(&mut members[gone]);
        members[keep].extend(moved);
    }
    UltrametricSpace::from_fn(space.labels().to_vec(), |i, j| rho[i * n + j])
}
