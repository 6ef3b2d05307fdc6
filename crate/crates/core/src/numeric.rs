//! Scalar functions with numerically stable branches.

/// `ln(1 + e^x)` without overflow.
#[inline]
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Logistic sigmoid, stable for large `|x|`.
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `-ln(sigmoid(z)) = softplus(-z)`.
#[inline]
pub fn neg_log_sigmoid(z: f64) -> f64 {
    softplus(-z)
}

/// Inverse of [`softplus`] for `y > 0`.
#[inline]
pub fn softplus_inv(y: f64) -> f64 {
    y + (-(-y).exp_m1()).ln()
}

/// `softplus(raw) + floor`.
#[inline]
pub fn positive(raw: f64, floor: f64) -> f64 {
    softplus(raw) + floor
}

/// Raw value whose [`positive`] image is `target`, nudged by ulps until the
/// round trip is exact when that is reachable.
pub fn raw_for_positive(target: f64, floor: f64) -> f64 {
    let mut raw = softplus_inv(target - floor);
    for _ in 0..64 {
        let v = positive(raw, floor);
        if v == target {
            break;
        }
        raw = if v < target {
            next_up(raw)
        } else {
            next_down(raw)
        };
    }
    raw
}

fn next_up(x: f64) -> f64 {
    if x == 0.0 {
        return f64::from_bits(1);
    }
    let bits = x.to_bits();
    f64::from_bits(if x > 0.0 { bits + 1 } else { bits - 1 })
}

fn next_down(x: f64) -> f64 {
    -next_up(-x)
}

/// `arccosh(max(z, 1))`, accurate near 1.
#[inline]
pub fn acosh_clamped(z: f64) -> f64 {
    let t = (z - 1.0).max(0.0);
    (t + (t * (t + 2.0)).sqrt()).ln_1p()
}

/// `sinh(s) / s`.
#[inline]
pub fn sinhc(s: f64) -> f64 {
    if s.abs() < 1e-7 {
        1.0 + s * s / 6.0
    } else {
        s.sinh() / s
    }
}

/// `(cosh(s) - sinh(s)/s) / s^2`, which tends to 1/3 at the origin.
#[inline]
pub fn cosh_minus_sinhc_over_sq(s: f64) -> f64 {
    if s.abs() < 1e-2 {
        let s2 = s * s;
        1.0 / 3.0 + s2 / 30.0 + s2 * s2 / 840.0
    } else {
        (s.cosh() - s.sinh() / s) / (s * s)
    }
}

/// `a / sinh(a)` for `a = arccosh(z)`, i.e. `arccosh(z) / sqrt(z^2 - 1)`; 1 at `z <= 1`.
#[inline]
pub fn acosh_over_sinh(z: f64) -> f64 {
    let t = (z - 1.0).max(0.0);
    if t < 1e-12 {
        return 1.0 - t / 3.0;
    }
    let sh = (t * (t + 2.0)).sqrt();
    (t + sh).ln_1p() / sh
}
