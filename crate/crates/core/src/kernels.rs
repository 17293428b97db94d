//! Discrete convolution kernel families on a [`TimeMesh`].
//!
//! Every generator produces a triangle whose row `n` holds
//! `a^{(n)}_{n-k}` for `k = 1..=n`, stored at index `j = n - k`.

use std::fmt;
use std::sync::Arc;

use crate::mesh::TimeMesh;
use crate::quad::tanh_sinh;
use crate::special::{gamma, omega, omega_average, power_increment, power_mixed_difference};
use crate::triangle::Triangle;
use crate::{Error, Result};

const QUAD_RTOL: f64 = 1e-12;
const PROBES_PER_STEP: usize = 4;

/// Triangular array of variable-step convolution kernels with a provenance
/// label.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelFamily {
    a: Triangle,
    label: String,
}

impl KernelFamily {
    /// Wraps a triangle after checking the zero-tail rule: within a row,
    /// once an entry with `j >= 1` is zero, every later entry is zero.
    pub fn new(a: Triangle, label: impl Into<String>) -> Result<Self> {
        for n in 1..=a.levels() {
            let row = a.row(n);
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::InvalidParameter(format!(
                        "non-finite kernel value at ({n}, {j})"
                    )));
                }
            }
            if let Some(z) = row.iter().skip(1).position(|&v| v == 0.0) {
                let first_zero = z + 1;
                if let Some(off) = row[first_zero..].iter().position(|&v| v != 0.0) {
                    return Err(Error::ZeroTail { n, j: first_zero + off });
                }
            }
        }
        Ok(KernelFamily { a, label: label.into() })
    }

    pub fn levels(&self) -> usize {
        self.a.levels()
    }

    /// `a^{(n)}_j`.
    #[inline]
    pub fn get(&self, n: usize, j: usize) -> f64 {
        self.a.get(n, j)
    }

    pub fn row(&self, n: usize) -> &[f64] {
        self.a.row(n)
    }

    pub fn triangle(&self) -> &Triangle {
        &self.a
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// `a^{(n)}_j = δ_{j0}`.
    pub fn identity(levels: usize) -> Self {
        let mut a = Triangle::zeros(levels);
        for n in 1..=levels {
            a.set(n, 0, 1.0);
        }
        KernelFamily { a, label: format!("identity(N={levels})") }
    }
}

fn check_unit_interval(name: &str, value: f64, include_one: bool) -> Result<()> {
    let ok = value > 0.0 && (value < 1.0 || (include_one && value == 1.0));
    if ok {
        Ok(())
    } else {
        let range = if include_one { "(0, 1]" } else { "(0, 1)" };
        Err(Error::InvalidParameter(format!("{name} must lie in {range}, got {value}")))
    }
}

fn averaged_family<F>(mesh: &TimeMesh, label: String, average: F) -> Result<KernelFamily>
where
    F: Fn(f64, f64) -> Result<f64>,
{
    let levels = mesh.steps();
    let mut a = Triangle::zeros(levels);
    for n in 1..=levels {
        let tn = mesh.t(n);
        for k in 1..=n {
            // elapsed-time interval [t_n - t_k, t_n - t_{k-1}]
            let start = tn - mesh.t(k);
            a.set(n, n - k, average(start, mesh.tau(k))?);
        }
    }
    KernelFamily::new(a, label)
}

/// `a^{(n)}_{n-k} = (1/τ_k) ∫_{t_{k-1}}^{t_k} ω_μ(t_n - s) ds` for `0 < μ <= 1`.
pub fn weight_average_kernels(mesh: &TimeMesh, mu: f64) -> Result<KernelFamily> {
    check_unit_interval("mu", mu, true)?;
    averaged_family(mesh, format!("weight(mu={mu})"), |start, len| {
        Ok(omega_average(mu, start, len))
    })
}

/// Variable-step L1 kernels for the Caputo derivative of order `α ∈ (0, 1)`.
pub fn l1_kernels(mesh: &TimeMesh, alpha: f64) -> Result<KernelFamily> {
    check_unit_interval("alpha", alpha, false)?;
    let mut fam = weight_average_kernels(mesh, 1.0 - alpha)?;
    fam.label = format!("L1(alpha={alpha})");
    Ok(fam)
}

/// Midpoint-rule kernels of the Riemann–Liouville integral of order `γ ∈ (0, 1)`,
/// i.e. the L1 kernels with `α = 1 - γ`.
pub fn rl_midpoint_kernels(mesh: &TimeMesh, gamma_order: f64) -> Result<KernelFamily> {
    check_unit_interval("gamma", gamma_order, false)?;
    let mut fam = weight_average_kernels(mesh, gamma_order)?;
    fam.label = format!("RL-midpoint(gamma={gamma_order})");
    Ok(fam)
}

/// Second-order L1⁺ kernels
/// `ā^{(n)}_{n-k} = (1/(τ_n τ_k)) ∫_{t_{n-1}}^{t_n} ∫_{t_{k-1}}^{min(t, t_k)} ω_{1-α}(t - s) ds dt`.
pub fn l1plus_kernels(mesh: &TimeMesh, alpha: f64) -> Result<KernelFamily> {
    check_unit_interval("alpha", alpha, false)?;
    // antiderivative chain: ω_{1-α} -> ω_{2-α} -> ω_{3-α}(x) = x^{2-α}/Γ(3-α)
    let q = 2.0 - alpha;
    let g = gamma(3.0 - alpha);
    let levels = mesh.steps();
    let mut a = Triangle::zeros(levels);
    for n in 1..=levels {
        let tau_n = mesh.tau(n);
        // k = n: the inner upper limit is min(t, t_n) = t, so the inner
        // integral is ω_{2-α}(t - t_{n-1}) and the outer one ω_{3-α}(τ_n).
        a.set(n, 0, tau_n.powf(q) / (g * tau_n * tau_n));
        for k in 1..n {
            // k < n: min(t, t_k) = t_k; four corners of ω_{3-α} with
            // b = t_{n-1} - t_k, increments τ_k and τ_n.
            let tau_k = mesh.tau(k);
            let b = mesh.t(n - 1) - mesh.t(k);
            let d = power_mixed_difference(q, b, tau_k, tau_n);
            a.set(n, n - k, d / (g * tau_n * tau_k));
        }
    }
    KernelFamily::new(a, format!("L1plus(alpha={alpha})"))
}

/// Time-independent kernels `a^{(n)}_j = a_j`, `N` = number of coefficients.
pub fn constant_kernels(coefficients: &[f64]) -> Result<KernelFamily> {
    if coefficients.is_empty() {
        return Err(Error::InvalidParameter("constant kernel needs at least one coefficient".into()));
    }
    let levels = coefficients.len();
    let rows = (1..=levels).map(|n| coefficients[..n].to_vec()).collect();
    let label = format!(
        "constant({})",
        coefficients.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(",")
    );
    KernelFamily::new(Triangle::from_rows(rows)?, label)
}

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum KappaForm {
    Weight(f64),
    Exponential(f64),
    Power(f64),
    Constant(f64),
    Custom { kappa: ScalarFn, antiderivative: Option<ScalarFn> },
}

/// Shape hypotheses on `κ`: positive, decreasing, convex.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KernelShape {
    pub decreasing: bool,
    pub convex: bool,
}

/// Convolution kernel `κ(t)` of elapsed time for Volterra-type operators.
#[derive(Clone)]
pub struct VolterraKernel {
    form: KappaForm,
    shape: KernelShape,
    label: String,
}

impl fmt::Debug for VolterraKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VolterraKernel").field("label", &self.label).field("shape", &self.shape).finish()
    }
}

/// Positive, strictly decreasing, convex.
pub const MONOTONE_CONVEX: KernelShape = KernelShape { decreasing: true, convex: true };

impl VolterraKernel {
    /// `κ = ω_β`, `0 < β < 1`.
    pub fn weight(beta: f64) -> Result<Self> {
        check_unit_interval("beta", beta, false)?;
        Ok(VolterraKernel { form: KappaForm::Weight(beta), shape: MONOTONE_CONVEX, label: format!("weight(beta={beta})") })
    }

    /// `κ(t) = e^{-λ t}`, `λ > 0`.
    pub fn exponential(rate: f64) -> Result<Self> {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::InvalidParameter(format!("rate must be positive, got {rate}")));
        }
        Ok(VolterraKernel { form: KappaForm::Exponential(rate), shape: MONOTONE_CONVEX, label: format!("exp(rate={rate})") })
    }

    /// `κ(t) = t^{-β}`, `0 < β < 1`.
    pub fn power(beta: f64) -> Result<Self> {
        check_unit_interval("beta", beta, false)?;
        Ok(VolterraKernel { form: KappaForm::Power(beta), shape: MONOTONE_CONVEX, label: format!("power(beta={beta})") })
    }

    /// `κ(t) = c > 0`; nonincreasing but not strictly decreasing.
    pub fn constant(value: f64) -> Result<Self> {
        if !(value > 0.0 && value.is_finite()) {
            return Err(Error::InvalidParameter(format!("constant kernel must be positive, got {value}")));
        }
        Ok(VolterraKernel {
            form: KappaForm::Constant(value),
            shape: KernelShape { decreasing: false, convex: true },
            label: format!("constant({value})"),
        })
    }

    /// User kernel; `shape` records what the caller asserts about `κ'` and `κ''`.
    /// Without an antiderivative the interval averages use tanh-sinh quadrature.
    pub fn custom<F>(label: impl Into<String>, kappa: F, antiderivative: Option<ScalarFn>, shape: KernelShape) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        VolterraKernel {
            form: KappaForm::Custom { kappa: Arc::new(kappa), antiderivative },
            shape,
            label: label.into(),
        }
    }

    pub fn shape(&self) -> KernelShape {
        self.shape
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// `κ(t)`, `t > 0`.
    pub fn eval(&self, t: f64) -> f64 {
        match &self.form {
            KappaForm::Weight(beta) => omega(*beta, t),
            KappaForm::Exponential(rate) => (-rate * t).exp(),
            KappaForm::Power(beta) => t.powf(-beta),
            KappaForm::Constant(c) => *c,
            KappaForm::Custom { kappa, .. } => kappa(t),
        }
    }

    /// `(1/len) ∫_start^{start+len} κ(x) dx`.
    pub fn average(&self, start: f64, len: f64) -> Result<f64> {
        Ok(match &self.form {
            KappaForm::Weight(beta) => omega_average(*beta, start, len),
            KappaForm::Exponential(rate) => {
                (-rate * start).exp() * (-(-rate * len).exp_m1()) / (rate * len)
            }
            KappaForm::Power(beta) => {
                let p = 1.0 - beta;
                power_increment(p, start, len) / (p * len)
            }
            KappaForm::Constant(c) => *c,
            KappaForm::Custom { antiderivative: Some(anti), .. } => (anti(start + len) - anti(start)) / len,
            KappaForm::Custom { kappa, antiderivative: None } => {
                tanh_sinh(|x| kappa(x), start, start + len, QUAD_RTOL)? / len
            }
        })
    }
}

/// `κ^{(n)}_{n-k} = (1/τ_k) ∫_{t_{k-1}}^{t_k} κ(t_n - s) ds`.
///
/// Positivity of `κ` is probed on a grid covering `(0, T]`.
pub fn volterra_kernels(mesh: &TimeMesh, kappa: &VolterraKernel) -> Result<KernelFamily> {
    for k in 1..=mesh.steps() {
        for i in 1..=PROBES_PER_STEP {
            let at = mesh.t(k - 1) + mesh.tau(k) * i as f64 / PROBES_PER_STEP as f64;
            let v = kappa.eval(at);
            if !(v > 0.0) {
                return Err(Error::NonPositiveKernel { at });
            }
        }
    }
    averaged_family(mesh, format!("volterra({})", kappa.label), |start, len| kappa.average(start, len))
}
