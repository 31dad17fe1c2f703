//! Euclidean primitives evaluated in a single chart: circumspheres in the
//! affine hull of a point set and smallest enclosing balls.

use smallvec::SmallVec;

use crate::error::{domain, Result};
use crate::manifold::Coords;
use crate::scalar::{dist2, dot, Real};

/// Sphere through `k + 1` points, centred in their affine hull.
#[derive(Clone, Debug, PartialEq)]
pub struct Circumsphere<T> {
    pub center: Coords<T>,
    pub radius: T,
    /// Barycentric coordinates of `center` with respect to the input points.
    pub barycentric: SmallVec<[T; 4]>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Ball<T> {
    pub center: Coords<T>,
    pub radius: T,
}

/// Solves `a x = b` for a small dense system with partial pivoting. Returns
/// the solution and the product of pivots (the determinant up to sign).
fn solve_small<T: Real>(mut a: SmallVec<[[T; 4]; 4]>, mut b: SmallVec<[T; 4]>) -> Option<(SmallVec<[T; 4]>, T)> {
    let n = b.len();
    let mut det = T::one();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())?;
        if a[piv][col] == T::zero() {
            return None;
        }
        if piv != col {
            a.swap(piv, col);
            b.swap(piv, col);
        }
        det *= a[col][col];
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                let v = a[col][k];
                a[row][k] -= f * v;
            }
            let v = b[col];
            b[row] -= f * v;
        }
    }
    let mut x: SmallVec<[T; 4]> = SmallVec::from_elem(T::zero(), n);
    for row in (0..n).rev() {
        let mut s = b[row];
        for k in row + 1..n {
            s -= a[row][k] * x[k];
        }
        x[row] = s / a[row][row];
    }
    Some((x, det))
}

/// Unique point of the affine hull of `pts` equidistant from all of them.
///
/// Returns `None` when the points are affinely dependent, judged by the Gram
/// determinant relative to the product of the squared edge lengths from the
/// first point.
pub fn circumsphere<T: Real>(pts: &[Coords<T>]) -> Option<Circumsphere<T>> {
    let m = pts.len();
    if m == 0 || m > 4 {
        return None;
    }
    let p0 = &pts[0];
    if m == 1 {
        return Some(Circumsphere {
            center: p0.clone(),
            radius: T::zero(),
            barycentric: SmallVec::from_slice(&[T::one()]),
        });
    }
    let k = m - 1;
    let edges: SmallVec<[Coords<T>; 3]> = pts[1..]
        .iter()
        .map(|p| p.iter().zip(p0.iter()).map(|(&a, &b)| a - b).collect())
        .collect();
    let mut gram: SmallVec<[[T; 4]; 4]> = SmallVec::from_elem([T::zero(); 4], k);
    let mut rhs: SmallVec<[T; 4]> = SmallVec::from_elem(T::zero(), k);
    let mut scale = T::one();
    for i in 0..k {
        for j in 0..k {
            gram[i][j] = dot(&edges[i], &edges[j]);
        }
        rhs[i] = gram[i][i] / T::lit(2.0);
        scale *= gram[i][i];
    }
    if !(scale > T::zero()) {
        return None;
    }
    let (lambda, det) = solve_small(gram, rhs)?;
    if det.abs() <= T::degeneracy_tol() * scale {
        return None;
    }
    let mut center = p0.clone();
    for (l, e) in lambda.iter().zip(&edges) {
        for (c, &v) in center.iter_mut().zip(e.iter()) {
            *c += *l * v;
        }
    }
    let mut bary: SmallVec<[T; 4]> = SmallVec::with_capacity(m);
    bary.push(T::one() - lambda.iter().copied().sum::<T>());
    bary.extend(lambda.iter().copied());
    let radius = dist2(&center, p0).sqrt();
    Some(Circumsphere {
        center,
        radius,
        barycentric: bary,
    })
}

#[inline]
fn ball_contains<T: Real>(ball: &Ball<T>, p: &[T]) -> bool {
    if ball.radius < T::zero() {
        return false;
    }
    let slack = T::geom_tol() * ball.radius.max(T::one());
    dist2(&ball.center, p).sqrt() <= ball.radius + slack
}

fn ball_through<T: Real>(pts: &[Coords<T>], support: &[usize], dim: usize) -> Option<Ball<T>> {
    match support.len() {
        0 => Some(Ball {
            center: SmallVec::from_elem(T::zero(), dim),
            radius: -T::one(),
        }),
        _ => {
            let chosen: SmallVec<[Coords<T>; 4]> = support.iter().map(|&i| pts[i].clone()).collect();
            circumsphere(&chosen).map(|s| Ball {
                center: s.center,
                radius: s.radius,
            })
        }
    }
}

fn welzl<T: Real>(pts: &[Coords<T>], n: usize, support: &mut SmallVec<[usize; 4]>, dim: usize) -> Option<Ball<T>> {
    if n == 0 || support.len() == dim + 1 {
        return ball_through(pts, support, dim);
    }
    let ball = welzl(pts, n - 1, support, dim)?;
    if ball_contains(&ball, &pts[n - 1]) {
        return Some(ball);
    }
    support.push(n - 1);
    let out = welzl(pts, n - 1, support, dim);
    support.pop();
    out
}

/// Smallest enclosing ball of a finite point set given in one chart.
///
/// Uses Welzl's recursion in input order, which is deterministic. Affinely
/// degenerate supports (coincident or collinear points) fall back to an
/// exhaustive search over supports.
pub fn min_enclosing_ball<T: Real>(pts: &[Coords<T>]) -> Result<Ball<T>> {
    if pts.is_empty() {
        return domain("smallest enclosing ball of an empty set");
    }
    let dim = pts[0].len();
    if pts.iter().any(|p| p.len() != dim) {
        return domain("points of mixed dimension");
    }
    let mut support = SmallVec::new();
    if let Some(ball) = welzl(pts, pts.len(), &mut support, dim) {
        if pts.iter().all(|p| ball_contains(&ball, p)) {
            return Ok(ball);
        }
    }
    Ok(exhaustive_ball(pts))
}

fn exhaustive_ball<T: Real>(pts: &[Coords<T>]) -> Ball<T> {
    let max_support = (pts[0].len() + 1).min(4);
    let mut best: Option<Ball<T>> = None;
    let mut support: SmallVec<[usize; 4]> = SmallVec::new();
    search_supports(pts, 0, max_support, &mut support, &mut best);
    // the diametral ball of the farthest pair always exists; reaching here
    // without a candidate requires non-finite input
    best.unwrap_or_else(|| Ball {
        center: pts[0].clone(),
        radius: T::infinity(),
    })
}

fn search_supports<T: Real>(
    pts: &[Coords<T>],
    from: usize,
    max_support: usize,
    support: &mut SmallVec<[usize; 4]>,
    best: &mut Option<Ball<T>>,
) {
    if !support.is_empty() {
        if let Some(ball) = ball_through(pts, support, pts[0].len()) {
            if best.as_ref().map_or(true, |b| ball.radius < b.radius) && pts.iter().all(|p| ball_contains(&ball, p)) {
                *best = Some(ball);
            }
        }
    }
    if support.len() == max_support {
        return;
    }
    for i in from..pts.len() {
        support.push(i);
        search_supports(pts, i + 1, max_support, support, best);
        support.pop();
    }
}

/// Radius of the smallest enclosing ball, the Čech filtration value.
pub fn miniball_radius<T: Real>(pts: &[Coords<T>]) -> Result<T> {
    min_enclosing_ball(pts).map(|b| b.radius)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(v: &[f64]) -> Coords<f64> {
        Coords::from_slice(v)
    }

    #[test]
    fn circumsphere_examples() {
        let s = circumsphere(&[c(&[0.0, 0.0]), c(&[1.0, 0.0])]).unwrap();
        assert!((s.center[0] - 0.5).abs() < 1e-15 && s.center[1].abs() < 1e-15);
        assert!((s.radius - 0.5).abs() < 1e-15);

        let h = 3f64.sqrt() / 2.0;
        let tri = [c(&[0.0, 0.0]), c(&[1.0, 0.0]), c(&[0.5, h])];
        let s = circumsphere(&tri).unwrap();
        assert!((s.center[0] - 0.5).abs() < 1e-14 && (s.center[1] - h / 3.0).abs() < 1e-14);
        assert!((s.radius - 1.0 / 3f64.sqrt()).abs() < 1e-14);
        for b in &s.barycentric {
            assert!((b - 1.0 / 3.0).abs() < 1e-14);
        }
    }

    #[test]
    fn single_point_circumsphere() {
        let s = circumsphere(&[c(&[0.3, 0.2])]).unwrap();
        assert_eq!(s.radius, 0.0);
        assert_eq!(s.center.as_slice(), &[0.3, 0.2]);
    }

    #[test]
    fn degenerate_circumsphere_is_reported() {
        assert!(circumsphere(&[c(&[0.0, 0.0]), c(&[1.0, 0.0]), c(&[2.0, 0.0])]).is_none());
        assert!(circumsphere(&[c(&[0.5, 0.5]), c(&[0.5, 0.5])]).is_none());
    }

    #[test]
    fn circumsphere_in_plane_of_3d_triangle() {
        let tri = [c(&[0.1, 0.2, 0.3]), c(&[0.9, 0.1, 0.4]), c(&[0.3, 0.8, 0.7])];
        let s = circumsphere(&tri).unwrap();
        for p in &tri {
            assert!((dist2(&s.center, p).sqrt() - s.radius).abs() < 1e-12);
        }
        let recon: Vec<f64> = (0..3)
            .map(|a| (0..3).map(|i| s.barycentric[i] * tri[i][a]).sum())
            .collect();
        for a in 0..3 {
            assert!((recon[a] - s.center[a]).abs() < 1e-12);
        }
    }

    #[test]
    fn miniball_examples() {
        assert_eq!(miniball_radius(&[c(&[0.4, 0.4])]).unwrap(), 0.0);
        let h = 3f64.sqrt() / 2.0;
        let r = miniball_radius(&[c(&[0.0, 0.0]), c(&[1.0, 0.0]), c(&[0.5, h])]).unwrap();
        assert!((r - 1.0 / 3f64.sqrt()).abs() < 1e-14);
        let sq = [c(&[0.0, 0.0]), c(&[1.0, 0.0]), c(&[0.0, 1.0]), c(&[1.0, 1.0])];
        let b = min_enclosing_ball(&sq).unwrap();
        assert!((b.radius - 2f64.sqrt() / 2.0).abs() < 1e-14);
        assert!((b.center[0] - 0.5).abs() < 1e-14 && (b.center[1] - 0.5).abs() < 1e-14);
        assert!(min_enclosing_ball::<f64>(&[]).is_err());
        let many: Vec<Coords<f64>> = (0..9)
            .map(|i| {
                let t = i as f64 * 0.7;
                c(&[t.cos() * 0.5, t.sin() * 0.5])
            })
            .collect();
        assert!((miniball_radius(&many).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn obtuse_triangle_uses_longest_edge() {
        let pts = [c(&[0.0, 0.0]), c(&[2.0, 0.0]), c(&[1.0, 0.2])];
        let r = miniball_radius(&pts).unwrap();
        assert!((r - 1.0).abs() < 1e-14);
    }

    #[test]
    fn collinear_and_duplicate_inputs() {
        let pts = [c(&[0.0, 0.0]), c(&[1.0, 0.0]), c(&[3.0, 0.0])];
        assert!((miniball_radius(&pts).unwrap() - 1.5).abs() < 1e-14);
        let dup = [c(&[0.2, 0.2]), c(&[0.2, 0.2]), c(&[0.4, 0.2])];
        assert!((miniball_radius(&dup).unwrap() - 0.1).abs() < 1e-14);
    }
}
