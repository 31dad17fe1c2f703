//! Closed-form volumes and the special functions used by the counting
//! arguments: unit-ball volumes, the capped-ball profile `G_d`, the integer
//! upper incomplete gamma function and the `Λ = n ω_d r^d` parametrization.

use crate::error::{domain, Result};
use crate::scalar::Real;

/// Volume `ω_d` of the unit ball in `R^d`.
pub fn unit_ball_volume<T: Real>(d: usize) -> T {
    // ω_0 = 1, ω_1 = 2, ω_d = 2π/d · ω_{d-2}
    let mut w = if d % 2 == 0 { T::one() } else { T::lit(2.0) };
    let mut k = if d % 2 == 0 { 2 } else { 3 };
    while k <= d {
        w = w * T::lit(2.0) * T::PI() / T::from_usize_lossy(k);
        k += 2;
    }
    w
}

const GK_NODES: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];

const GK_WEIGHTS: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];

const GAUSS_WEIGHTS: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gauss_kronrod<T: Real, F: Fn(T) -> T>(f: &F, a: T, b: T) -> (T, T) {
    let half = (b - a) / T::lit(2.0);
    let mid = (a + b) / T::lit(2.0);
    let fc = f(mid);
    let mut kronrod = fc * T::lit(GK_WEIGHTS[7]);
    let mut gauss = fc * T::lit(GAUSS_WEIGHTS[3]);
    for i in 0..7 {
        let dx = half * T::lit(GK_NODES[i]);
        let s = f(mid - dx) + f(mid + dx);
        kronrod += s * T::lit(GK_WEIGHTS[i]);
        if i % 2 == 1 {
            gauss += s * T::lit(GAUSS_WEIGHTS[i / 2]);
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Adaptive 15-point Gauss–Kronrod quadrature of `f` over `[a, b]` to the
/// absolute tolerance `tol`.
pub fn integrate_adaptive<T: Real, F: Fn(T) -> T>(f: F, a: T, b: T, tol: T) -> T {
    fn recurse<T: Real, F: Fn(T) -> T>(f: &F, a: T, b: T, tol: T, whole: (T, T), depth: u32) -> T {
        let (value, err) = whole;
        if err <= tol || depth == 0 {
            return value;
        }
        let m = (a + b) / T::lit(2.0);
        let left = gauss_kronrod(f, a, m);
        let right = gauss_kronrod(f, m, b);
        let half_tol = tol / T::lit(2.0);
        recurse(f, a, m, half_tol, left, depth - 1) + recurse(f, m, b, half_tol, right, depth - 1)
    }
    let whole = gauss_kronrod(&f, a, b);
    recurse(&f, a, b, tol, whole, 40)
}

/// `G_d(u) = ∫_0^u (1 - t²)^{(d-1)/2} dt` for `u ∈ [0, 1]`.
pub fn g_function<T: Real>(d: usize, u: T) -> Result<T> {
    if d < 1 {
        return domain("G_d requires d >= 1");
    }
    if !(u >= T::zero() && u <= T::one()) {
        return domain(format!("G_d argument {u} outside [0, 1]"));
    }
    let one = T::one();
    Ok(match d {
        1 => u,
        2 => (u * (one - u * u).max(T::zero()).sqrt() + u.asin()) / T::lit(2.0),
        3 => u - u * u * u / T::lit(3.0),
        _ => {
            let e = T::from_usize_lossy(d - 1) / T::lit(2.0);
            integrate_adaptive(|t: T| (one - t * t).max(T::zero()).powf(e), T::zero(), u, T::lit(1e-14))
        }
    })
}

/// Volume of the radius-`r` ball whose centre is at distance `delta` from a
/// flat boundary hyperplane, intersected with the half-space containing the
/// centre: `ω_d r^d · ½ · (1 + G_d(δ/r) / G_d(1))`.
pub fn ball_volume_capped<T: Real>(d: usize, r: T, delta: T) -> Result<T> {
    if !(r > T::zero()) {
        return domain("capped ball radius must be positive");
    }
    if !(delta >= T::zero() && delta <= r) {
        return domain(format!("cap distance {delta} must lie in [0, r = {r}]"));
    }
    let q = delta / r;
    let frac = (T::one() + g_function(d, q)? / g_function(d, T::one())?) / T::lit(2.0);
    Ok(unit_ball_volume::<T>(d) * r.powi(d as i32) * frac)
}

/// `Γ(k, x) = (k-1)! e^{-x} Σ_{i<k} x^i / i!` for integer `k >= 1`.
pub fn upper_incomplete_gamma<T: Real>(k: u32, x: T) -> Result<T> {
    if k < 1 {
        return domain("incomplete gamma requires k >= 1");
    }
    if !(x >= T::zero()) {
        return domain("incomplete gamma requires x >= 0");
    }
    let mut term = T::one();
    let mut sum = T::one();
    for i in 1..k {
        term = term * x / T::from_u32(i).expect("small integer");
        sum += term;
    }
    let factorial = (1..k).fold(T::one(), |acc, i| acc * T::from_u32(i).expect("small integer"));
    Ok(factorial * (-x).exp() * sum)
}

/// `Λ = n ω_d r^d`, the expected number of points in a radius-`r` ball.
pub fn lambda_param<T: Real>(n: T, d: usize, r: T) -> Result<T> {
    if !(n > T::zero() && r > T::zero()) || d == 0 {
        return domain("lambda requires n > 0, r > 0, d >= 1");
    }
    Ok(n * unit_ball_volume::<T>(d) * r.powi(d as i32))
}

/// Inverse of [`lambda_param`]: `r = (Λ / (n ω_d))^{1/d}`.
pub fn radius_for_lambda<T: Real>(n: T, d: usize, lambda: T) -> Result<T> {
    if !(n > T::zero() && lambda > T::zero()) || d == 0 {
        return domain(format!("radius requires n > 0, Λ > 0, d >= 1 (got n = {n}, Λ = {lambda})"));
    }
    Ok((lambda / (n * unit_ball_volume::<T>(d))).powf(T::one() / T::from_usize_lossy(d)))
}
