//! Independent oracles shared by the integration suites.
//!
//! Nothing here calls into the kernel generators or the DOC/DCC
//! constructors; Γ comes from `statrs`, integrals from adaptive
//! Gauss–Kronrod on the raw integrands.

#![allow(dead_code)]

use convopd::mesh::TimeMesh;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for i in 0..7 {
        let dx = h * XGK[i];
        let s = f(c - dx) + f(c + dx);
        kronrod += WGK[i] * s;
        if i % 2 == 1 {
            gauss += WG[i / 2] * s;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Adaptive Gauss–Kronrod (7/15) by recursive bisection.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rtol: f64) -> f64 {
    fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, whole: f64, err: f64, atol: f64, depth: u32) -> f64 {
        if err <= atol || depth == 0 || (b - a) <= 1e-15 * a.abs().max(b.abs()) {
            return whole;
        }
        let m = 0.5 * (a + b);
        let (l, el) = gk15(f, a, m);
        let (r, er) = gk15(f, m, b);
        rec(f, a, m, l, el, 0.5 * atol, depth - 1) + rec(f, m, b, r, er, 0.5 * atol, depth - 1)
    }
    let (whole, err) = gk15(&f, a, b);
    let atol = rtol * whole.abs().max(1e-300);
    rec(&f, a, b, whole, err, atol, 40)
}

pub fn gamma(x: f64) -> f64 {
    statrs::function::gamma::gamma(x)
}

pub fn omega(mu: f64, x: f64) -> f64 {
    x.powf(mu - 1.0) / gamma(mu)
}

/// Exponent `q` of the substitution `x = x0 + len·v^q` that turns the
/// endpoint behavior `x^{μ-1}` into at least `v^1`.
fn grading_for(mu: f64) -> f64 {
    (2.0 / mu).ceil().max(1.0)
}

/// `(1/len) ∫_{x0}^{x0+len} κ(x) dx` for `κ` with a possible `x^{μ-1}`
/// singularity at `x = 0`.
pub fn average_of<F: Fn(f64) -> f64>(kappa: F, singular_order: f64, x0: f64, len: f64) -> f64 {
    let q = grading_for(singular_order);
    let g = |v: f64| {
        if v <= 0.0 {
            return 0.0;
        }
        kappa(x0 + len * v.powf(q)) * q * v.powf(q - 1.0)
    };
    integrate(g, 0.0, 1.0, 1e-15)
}

/// `(1/τ_k) ∫_{t_{k-1}}^{t_k} ω_μ(t_n - s) ds`.
pub fn weight_average_oracle(mesh: &TimeMesh, mu: f64, n: usize, k: usize) -> f64 {
    let x0 = mesh.t(n) - mesh.t(k);
    let len = mesh.t(k) - mesh.t(k - 1);
    average_of(|x| omega(mu, x), mu, x0, len)
}

/// `(1/(τ_n τ_k)) ∫_{t_{n-1}}^{t_n} ∫_{t_{k-1}}^{min(t,t_k)} ω_{1-α}(t - s) ds dt`
/// by nested adaptive quadrature.
pub fn l1plus_oracle(mesh: &TimeMesh, alpha: f64, n: usize, k: usize) -> f64 {
    let mu = 1.0 - alpha;
    let (tn1, tn) = (mesh.t(n - 1), mesh.t(n));
    let (tk1, tk) = (mesh.t(k - 1), mesh.t(k));
    let inner = |t: f64| -> f64 {
        let upper = t.min(tk);
        if upper <= tk1 {
            return 0.0;
        }
        // elapsed x = t - s runs over [t - upper, t - t_{k-1}]
        let x0 = t - upper;
        let len = upper - tk1;
        len * average_of(|x| omega(mu, x), mu, x0, len)
    };
    // outer substitution t = t_{n-1} + τ_n w^2 smooths the (t - t_{n-1})^{1-α} start
    let tau_n = tn - tn1;
    let q = 4.0;
    let outer = |w: f64| -> f64 {
        if w <= 0.0 {
            return 0.0;
        }
        inner(tn1 + tau_n * w.powf(q)) * tau_n * q * w.powf(q - 1.0)
    };
    integrate(outer, 0.0, 1.0, 1e-14) / (tau_n * (tk - tk1))
}

/// Dense inverse of the lower-triangular form matrix `A[k][j] = a^{(k)}_{k-j}`
/// by column-wise forward substitution. Returns `inv[n-1][j-1]`.
pub fn lower_triangular_inverse(a: &convopd::KernelFamily) -> Vec<Vec<f64>> {
    let n = a.levels();
    let m = |i: usize, j: usize| if j <= i { a.get(i, i - j) } else { 0.0 };
    let mut inv = vec![vec![0.0; n]; n];
    for col in 1..=n {
        // solve A x = e_col
        let mut x = vec![0.0; n + 1];
        for i in 1..=n {
            let rhs = if i == col { 1.0 } else { 0.0 };
            let mut s = rhs;
            for j in 1..i {
                s -= m(i, j) * x[j];
            }
            x[i] = s / m(i, i);
        }
        for i in 1..=n {
            inv[i - 1][col - 1] = x[i];
        }
    }
    inv
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_vector(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.random_range(-1.0..1.0)).collect()
}

pub fn rel_err(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs().max(1e-300)
}
