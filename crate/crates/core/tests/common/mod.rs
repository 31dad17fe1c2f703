//! Brute-force oracles shared by the integration tests. None of them call the
//! library's geometry, complex or reduction code.

#![allow(dead_code)]

use std::collections::HashMap;

use stochtop::{Manifold, PointSample};

/// Nearest translate of `p` around `base` using only the model's periods.
pub fn lift(m: &Manifold, base: &[f64], p: &[f64]) -> Vec<f64> {
    (0..m.dim())
        .map(|a| {
            let d = p[a] - base[a];
            match m.period(a) {
                Some(l) => base[a] + d - l * (d / l).round(),
                None => p[a],
            }
        })
        .collect()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Geodesic distance on a flat model, from the periods alone.
pub fn geodesic(m: &Manifold, p: &[f64], q: &[f64]) -> f64 {
    dist(&lift(m, p, q), p)
}

/// Gauss-Jordan with full pivoting; `None` when singular.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    let mut perm: Vec<usize> = (0..n).collect();
    let scale = a.iter().flatten().fold(0f64, |s, x| s.max(x.abs())).max(1e-300);
    for col in 0..n {
        let (mut pr, mut pc, mut best) = (col, col, 0.0);
        for (i, row) in a.iter().enumerate().skip(col) {
            for (j, v) in row.iter().enumerate().skip(col) {
                if v.abs() > best {
                    best = v.abs();
                    pr = i;
                    pc = j;
                }
            }
        }
        if best <= 1e-14 * scale {
            return None;
        }
        a.swap(col, pr);
        b.swap(col, pr);
        for row in a.iter_mut() {
            row.swap(col, pc);
        }
        perm.swap(col, pc);
        for i in 0..n {
            if i != col {
                let f = a[i][col] / a[col][col];
                if f != 0.0 {
                    for j in col..n {
                        a[i][j] -= f * a[col][j];
                    }
                    b[i] -= f * b[col];
                }
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in 0..n {
        x[perm[i]] = b[i] / a[i][i];
    }
    Some(x)
}

/// Circumcenter in the affine hull, its radius and barycentric coordinates.
pub fn circum(pts: &[Vec<f64>]) -> Option<(Vec<f64>, f64, Vec<f64>)> {
    let p0 = &pts[0];
    if pts.len() == 1 {
        return Some((p0.clone(), 0.0, vec![1.0]));
    }
    let v: Vec<Vec<f64>> = pts[1..]
        .iter()
        .map(|p| p.iter().zip(p0).map(|(a, b)| a - b).collect())
        .collect();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let gram: Vec<Vec<f64>> = v.iter().map(|a| v.iter().map(|b| 2.0 * dot(a, b)).collect()).collect();
    let rhs: Vec<f64> = v.iter().map(|a| dot(a, a)).collect();
    let lam = solve(gram, rhs)?;
    let mut c = p0.clone();
    for (l, vi) in lam.iter().zip(&v) {
        for (cj, x) in c.iter_mut().zip(vi) {
            *cj += l * x;
        }
    }
    let mut bary = vec![1.0 - lam.iter().sum::<f64>()];
    bary.extend(lam);
    let r = dist(&c, p0);
    Some((c, r, bary))
}

pub fn subsets(n: usize, max: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, max: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if !cur.is_empty() {
            out.push(cur.clone());
        }
        if cur.len() == max {
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, max, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, max, &mut Vec::new(), &mut out);
    out
}

/// Smallest enclosing ball radius: the least circumradius over subsets of at
/// most `d + 1` points whose sphere contains every point.
pub fn brute_miniball(pts: &[Vec<f64>]) -> f64 {
    let d = pts[0].len();
    let scale = pts.iter().flatten().fold(1f64, |s, x| s.max(x.abs()));
    let mut best = f64::INFINITY;
    for s in subsets(pts.len(), d + 1) {
        let sub: Vec<Vec<f64>> = s.iter().map(|&i| pts[i].clone()).collect();
        if let Some((c, r, _)) = circum(&sub) {
            if r < best && pts.iter().all(|p| dist(p, &c) <= r + 1e-12 * scale) {
                best = r;
            }
        }
    }
    best
}

/// All simplices of dimension at most `kmax` of the Čech complex at `r`,
/// by testing every vertex subset.
pub fn brute_cech(m: &Manifold, s: &PointSample, r: f64, kmax: usize) -> Vec<Vec<Vec<usize>>> {
    let mut levels = vec![Vec::new(); kmax + 1];
    for sub in subsets(s.len(), kmax + 1) {
        let base = s.coords(sub[0]);
        let lifted: Vec<Vec<f64>> = sub.iter().map(|&i| lift(m, base, s.coords(i))).collect();
        if lifted.iter().any(|p| dist(p, base) > 2.0 * r) {
            continue;
        }
        if brute_miniball(&lifted) <= r {
            levels[sub.len() - 1].push(sub);
        }
    }
    for l in &mut levels {
        l.sort();
    }
    levels
}

/// Rank over GF(2) of a dense matrix given as bit rows.
pub fn gf2_rank(mut rows: Vec<Vec<u64>>) -> usize {
    let cols = rows.first().map_or(0, |r| r.len() * 64);
    let mut rank = 0;
    for c in 0..cols {
        let (w, b) = (c / 64, 1u64 << (c % 64));
        let Some(p) = (rank..rows.len()).find(|&i| rows[i][w] & b != 0) else {
            continue;
        };
        rows.swap(rank, p);
        let pivot = rows[rank].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i != rank && row[w] & b != 0 {
                for (x, y) in row.iter_mut().zip(&pivot) {
                    *x ^= y;
                }
            }
        }
        rank += 1;
    }
    rank
}

/// Betti numbers by dense elimination over GF(2). `levels[k]` lists the
/// k-simplices as sorted vertex lists.
pub fn dense_betti(levels: &[Vec<Vec<usize>>], kmax: usize) -> Vec<usize> {
    let index: Vec<HashMap<&[usize], usize>> = levels
        .iter()
        .map(|l| l.iter().enumerate().map(|(i, s)| (s.as_slice(), i)).collect())
        .collect();
    let rank_of = |k: usize| -> usize {
        if k == 0 || k >= levels.len() || levels[k].is_empty() {
            return 0;
        }
        let words = levels[k].len().div_ceil(64);
        let mut rows = vec![vec![0u64; words]; levels[k - 1].len()];
        for (j, s) in levels[k].iter().enumerate() {
            for skip in 0..s.len() {
                let face: Vec<usize> = s.iter().enumerate().filter(|&(i, _)| i != skip).map(|(_, &v)| v).collect();
                let row = index[k - 1][face.as_slice()];
                rows[row][j / 64] ^= 1 << (j % 64);
            }
        }
        gf2_rank(rows)
    };
    (0..=kmax)
        .map(|k| {
            let nk = levels.get(k).map_or(0, Vec::len);
            nk - rank_of(k) - rank_of(k + 1)
        })
        .collect()
}

pub fn union_find_components(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> usize {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let mut comps = n;
    for (a, b) in edges {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra] = rb;
            comps -= 1;
        }
    }
    comps
}

/// Composite Simpson rule with `panels` (even) subintervals.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    let mut s = f(a) + f(b);
    for i in 1..panels {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// Wraps periodic coordinates into `[0, L)`.
pub fn wrap(m: &Manifold, x: &[f64]) -> Vec<f64> {
    (0..m.dim())
        .map(|a| match m.period(a) {
            Some(l) => x[a].rem_euclid(l),
            None => x[a],
        })
        .collect()
}

/// A critical point found by exhaustive search.
#[derive(Clone, Debug)]
pub struct BruteCritical {
    pub vertices: Vec<usize>,
    pub radius: f64,
    pub center: Vec<f64>,
}

/// Every subset of size `k + 1` whose circumcenter lies in its closed hull,
/// whose circumball is empty and whose radius lies in `(lo, hi]` (closed at
/// `lo = 0`).
pub fn brute_critical(m: &Manifold, s: &PointSample, k: usize, lo: f64, hi: f64) -> Vec<BruteCritical> {
    let mut out = Vec::new();
    for sub in subsets(s.len(), k + 1).into_iter().filter(|v| v.len() == k + 1) {
        let base = s.coords(sub[0]);
        let lifted: Vec<Vec<f64>> = sub.iter().map(|&i| lift(m, base, s.coords(i))).collect();
        if lifted.iter().any(|p| dist(p, base) > 2.0 * hi) {
            continue;
        }
        let Some((c, r, bary)) = circum(&lifted) else { continue };
        if bary.iter().any(|&b| b < -1e-12) {
            continue;
        }
        let in_range = if lo == 0.0 { r <= hi } else { r > lo && r <= hi };
        if !in_range {
            continue;
        }
        let cw = wrap(m, &c);
        let tol = 1e-12 * r.max(1.0);
        let empty = (0..s.len()).all(|j| sub.contains(&j) || geodesic(m, &cw, s.coords(j)) >= r - tol);
        if empty {
            out.push(BruteCritical {
                vertices: sub,
                radius: r,
                center: cw,
            });
        }
    }
    out.sort_by(|a, b| a.vertices.cmp(&b.vertices));
    out
}

pub fn random_rotation(d: usize, rng: &mut impl rand::Rng) -> Vec<Vec<f64>> {
    // Gram-Schmidt on a random matrix
    let mut q: Vec<Vec<f64>> = Vec::new();
    while q.len() < d {
        let mut v: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        for u in &q {
            let p: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
            for (x, y) in v.iter_mut().zip(u) {
                *x -= p * y;
            }
        }
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-3 {
            q.push(v.into_iter().map(|x| x / n).collect());
        }
    }
    q
}

pub fn apply(rot: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    rot.iter().map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}
