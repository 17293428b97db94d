//! Gamma function, the fractional weight `ω_μ(t) = t^{μ-1}/Γ(μ)`, and
//! cancellation-free differences of power functions.

use std::f64::consts::PI;

// Lanczos approximation, g = 7, nine terms.
const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Γ(x) for real `x` away from the nonpositive integers.
pub fn gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection: Γ(x)Γ(1-x) = π / sin(πx)
        PI / ((PI * x).sin() * gamma(1.0 - x))
    } else {
        let x = x - 1.0;
        let mut acc = LANCZOS_COEF[0];
        for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
            acc += c / (x + i as f64);
        }
        let t = x + LANCZOS_G + 0.5;
        (2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * acc
    }
}

/// `ω_μ(t) = t^{μ-1}/Γ(μ)` for `t > 0`.
pub fn omega(mu: f64, t: f64) -> f64 {
    t.powf(mu - 1.0) / gamma(mu)
}

/// `(1 + x)^p - 1` without cancellation for small `x`.
#[inline]
fn pow1pm1(p: f64, x: f64) -> f64 {
    (p * x.ln_1p()).exp_m1()
}

/// `(a + d)^p - a^p` for `a >= 0`, `d > 0`, accurate to a few ulps even when
/// `d << a`.
pub fn power_increment(p: f64, a: f64, d: f64) -> f64 {
    if a == 0.0 {
        d.powf(p)
    } else {
        a.powf(p) * pow1pm1(p, d / a)
    }
}

/// Mixed second difference
/// `(b + x + y)^p - (b + x)^p - (b + y)^p + b^p` for `b >= 0`, `x, y > 0`.
///
/// Far from the origin (`b >> min(x, y)`) the four-corner sum cancels to
/// many digits; there it is evaluated from the binomial expansion in the
/// smaller relative increment `s = min(x, y)/b`:
/// `Σ_{i>=1} C(p, i) s^i [(1 + l)^{p-i} - 1]`, `l = max(x, y)/b`.
pub fn power_mixed_difference(p: f64, b: f64, x: f64, y: f64) -> f64 {
    let (small, large) = if x <= y { (x, y) } else { (y, x) };
    if b == 0.0 {
        return power_increment(p, large, small) - small.powf(p);
    }
    let s = small / b;
    let l = large / b;
    if s > 0.5 {
        return (b + x + y).powf(p) - (b + x).powf(p) - (b + y).powf(p) + b.powf(p);
    }
    let mut sum = 0.0;
    let mut coef = 1.0; // C(p, i)
    let mut s_pow = 1.0;
    for i in 1..400 {
        let fi = i as f64;
        coef *= (p - fi + 1.0) / fi;
        s_pow *= s;
        let term = coef * s_pow * pow1pm1(p - fi, l);
        sum += term;
        if fi > p + 1.0 && term.abs() <= 1e-18 * sum.abs() {
            break;
        }
    }
    b.powf(p) * sum
}

/// Interval average of the fractional weight,
/// `(1/d) ∫_a^{a+d} ω_μ(x) dx = [ω_{μ+1}(a+d) - ω_{μ+1}(a)] / d`.
pub fn omega_average(mu: f64, a: f64, d: f64) -> f64 {
    power_increment(mu, a, d) / (gamma(mu + 1.0) * d)
}
