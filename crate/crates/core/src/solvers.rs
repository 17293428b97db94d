//! Variable-step time integrators on a periodic 1D grid: the stabilized
//! time-fractional Allen–Cahn scheme, and backward Euler for
//! `∂_t u = K * Δu + f` with midpoint convolution quadrature (fractional
//! wave and general Volterra kernels).

use serde::Serialize;

use crate::kernels::{l1_kernels, rl_midpoint_kernels, volterra_kernels, KernelFamily, VolterraKernel};
use crate::mesh::TimeMesh;
use crate::{Error, Result};

/// Tolerance in the maximum-principle check `‖u‖_∞ <= 1 + MAX_PRINCIPLE_TOL`.
pub const MAX_PRINCIPLE_TOL: f64 = 1e-12;

/// Relative tolerance in the L² bound check.
pub const BOUND_RTOL: f64 = 1e-10;
pub const ENERGY_RTOL: f64 = 1e-10;
pub const ENERGY_ATOL: f64 = 1e-12;

/// `M` equispaced nodes `x_i = i·h` on the periodic interval `[0, L)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialGrid1D {
    m: usize,
    length: f64,
}

impl SpatialGrid1D {
    pub fn new(m: usize, length: f64) -> Result<Self> {
        if m < 3 {
            return Err(Error::InvalidParameter(format!("need M >= 3 nodes, got {m}")));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::InvalidParameter(format!("domain length must be positive, got {length}")));
        }
        Ok(SpatialGrid1D { m, length })
    }

    /// Unit-length domain.
    pub fn unit(m: usize) -> Result<Self> {
        Self::new(m, 1.0)
    }

    pub fn nodes(&self) -> usize {
        self.m
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn h(&self) -> f64 {
        self.length / self.m as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.h()
    }

    pub fn sample(&self, f: impl Fn(f64) -> f64) -> GridFunction {
        GridFunction((0..self.m).map(|i| f(self.x(i))).collect())
    }

    fn check(&self, u: &GridFunction) -> Result<()> {
        if u.len() != self.m {
            return Err(Error::SizeMismatch { expected: self.m, found: u.len() });
        }
        Ok(())
    }

    /// `sqrt(h Σ u_i²)`.
    pub fn l2_norm(&self, u: &GridFunction) -> f64 {
        (self.h() * u.0.iter().map(|v| v * v).sum::<f64>()).sqrt()
    }
}

/// Nodal values on a [`SpatialGrid1D`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridFunction(pub Vec<f64>);

impl GridFunction {
    pub fn constant(m: usize, value: f64) -> Self {
        GridFunction(vec![value; m])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn linf(&self) -> f64 {
        self.0.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

fn laplacian_into(h2: f64, u: &[f64], out: &mut [f64]) {
    let m = u.len();
    for i in 0..m {
        let left = u[(i + m - 1) % m];
        let right = u[(i + 1) % m];
        out[i] = (left - 2.0 * u[i] + right) / h2;
    }
}

/// `(D_h u)_i = (u_{i-1} - 2u_i + u_{i+1})/h²`, indices mod `M`.
pub fn laplacian_apply(grid: &SpatialGrid1D, u: &GridFunction) -> Result<GridFunction> {
    grid.check(u)?;
    let mut out = vec![0.0; u.len()];
    laplacian_into(grid.h().powi(2), &u.0, &mut out);
    Ok(GridFunction(out))
}

/// Solve the periodic system `diag·x_i + off·(x_{i-1} + x_{i+1}) = rhs_i`
/// (indices mod `M`, `M >= 3`) by a tridiagonal sweep with a
/// Sherman–Morrison correction for the two corner entries.
pub fn solve_cyclic(diag: f64, off: f64, rhs: &[f64]) -> Result<Vec<f64>> {
    let m = rhs.len();
    if m < 3 {
        return Err(Error::SizeMismatch { expected: 3, found: m });
    }
    // A = T + u vᵀ with u = (γ, 0, ..., 0, off), v = (1, 0, ..., 0, off/γ)
    let gamma = -diag;
    let mut b = vec![diag; m];
    b[0] = diag - gamma;
    b[m - 1] = diag - off * off / gamma;
    let x = thomas(off, &b, rhs)?;
    let mut u = vec![0.0; m];
    u[0] = gamma;
    u[m - 1] = off;
    let z = thomas(off, &b, &u)?;
    let vx = x[0] + off / gamma * x[m - 1];
    let vz = z[0] + off / gamma * z[m - 1];
    let den = 1.0 + vz;
    if den == 0.0 || !den.is_finite() {
        return Err(Error::Singular);
    }
    let factor = vx / den;
    Ok(x.iter().zip(&z).map(|(xi, zi)| xi - factor * zi).collect())
}

/// Tridiagonal solve with constant off-diagonals.
fn thomas(off: f64, diag: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let m = diag.len();
    let mut c = vec![0.0; m];
    let mut d = vec![0.0; m];
    let mut pivot = diag[0];
    if pivot == 0.0 {
        return Err(Error::Singular);
    }
    c[0] = off / pivot;
    d[0] = rhs[0] / pivot;
    for i in 1..m {
        pivot = diag[i] - off * c[i - 1];
        if pivot == 0.0 || !pivot.is_finite() {
            return Err(Error::Singular);
        }
        c[i] = off / pivot;
        d[i] = (rhs[i] - off * d[i - 1]) / pivot;
    }
    for i in (0..m - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Ok(d)
}

/// Double-well `F(u) = (1 - u²)²/4`.
#[inline]
pub fn double_well(u: f64) -> f64 {
    0.25 * (1.0 - u * u).powi(2)
}

/// `F'(u) = u³ - u`.
#[inline]
pub fn double_well_prime(u: f64) -> f64 {
    u * u * u - u
}

/// `E = -(ε²/2) uᵀ D_h u + Σ_i F(u_i)` (nodal sum, no `h` weight).
pub fn discrete_energy(grid: &SpatialGrid1D, eps: f64, u: &GridFunction) -> Result<f64> {
    let du = laplacian_apply(grid, u)?;
    let quad: f64 = u.0.iter().zip(&du.0).map(|(a, b)| a * b).sum();
    Ok(-0.5 * eps * eps * quad + u.0.iter().map(|&v| double_well(v)).sum::<f64>())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRecord {
    pub n: usize,
    pub t: f64,
    pub linf: f64,
    pub l2: f64,
    pub energy: Option<f64>,
    pub bound: Option<f64>,
}

/// One record per time level, starting with the initial state at `n = 0`.
/// `states[n]` is `u^n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverTrace {
    pub records: Vec<TraceRecord>,
    pub states: Vec<GridFunction>,
}

impl SolverTrace {
    pub fn max_linf(&self) -> f64 {
        self.records.iter().fold(0.0f64, |m, r| m.max(r.linf))
    }

    pub fn max_principle_holds(&self) -> bool {
        self.max_linf() <= 1.0 + MAX_PRINCIPLE_TOL
    }

    /// `E^n <= E^0 + 1e-10 |E^0|` for all recorded `n`. The extra absolute
    /// 1e-12 only matters at the zero-energy fixed point `u = 1`.
    pub fn energy_bounded_by_initial(&self) -> bool {
        let Some(e0) = self.records.first().and_then(|r| r.energy) else {
            return true;
        };
        let limit = e0 + ENERGY_RTOL * e0.abs() + ENERGY_ATOL;
        self.records.iter().filter_map(|r| r.energy).all(|e| e <= limit)
    }

    /// First `n` with `‖u^n‖ > bound_n + 1e-10 max(bound_n, 1)`, if any.
    pub fn bound_violation(&self) -> Option<usize> {
        self.records.iter().find_map(|r| match r.bound {
            Some(b) if r.l2 > b + BOUND_RTOL * b.abs().max(1.0) => Some(r.n),
            _ => None,
        })
    }

    pub fn final_state(&self) -> &GridFunction {
        self.states.last().expect("trace holds the initial state")
    }
}

fn record(grid: &SpatialGrid1D, n: usize, t: f64, u: &GridFunction, energy: Option<f64>, bound: Option<f64>) -> TraceRecord {
    TraceRecord { n, t, linf: u.linf(), l2: grid.l2_norm(u), energy, bound }
}

/// Parameters of the stabilized Allen–Cahn run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AllenCahnParams {
    pub alpha: f64,
    pub eps: f64,
    pub stabilization: f64,
}

/// Stabilized L1 scheme
/// `(c_0 + S) u^n - ε² D_h u^n = (c_0 + S) u^{n-1} - Σ_{k<n} c_{n-k} ∇_τ u^k - F'(u^{n-1})`.
pub fn allen_cahn_solve(grid: &SpatialGrid1D, mesh: &TimeMesh, params: AllenCahnParams, u0: &GridFunction) -> Result<SolverTrace> {
    let AllenCahnParams { alpha, eps, stabilization: s } = params;
    if !(s >= 0.0 && s.is_finite()) {
        return Err(Error::InvalidParameter(format!("stabilization S must be >= 0, got {s}")));
    }
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidParameter(format!("eps must be positive, got {eps}")));
    }
    grid.check(u0)?;
    let c = l1_kernels(mesh, alpha)?;
    let m = grid.nodes();
    let h2 = grid.h().powi(2);
    let e2 = eps * eps;

    let mut states = vec![u0.clone()];
    let mut increments: Vec<Vec<f64>> = Vec::with_capacity(mesh.steps());
    let mut records = vec![record(grid, 0, 0.0, u0, Some(discrete_energy(grid, eps, u0)?), None)];
    let mut rhs = vec![0.0; m];
    for n in 1..=mesh.steps() {
        let prev = &states[n - 1].0;
        let lead = c.get(n, 0) + s;
        for i in 0..m {
            let mut hist = 0.0;
            for (k, inc) in increments.iter().enumerate() {
                hist += c.get(n, n - 1 - k) * inc[i];
            }
            rhs[i] = lead * prev[i] - hist - double_well_prime(prev[i]);
        }
        let next = solve_cyclic(lead + 2.0 * e2 / h2, -e2 / h2, &rhs)?;
        increments.push(next.iter().zip(prev).map(|(a, b)| a - b).collect());
        let u = GridFunction(next);
        records.push(record(grid, n, mesh.t(n), &u, Some(discrete_energy(grid, eps, &u)?), None));
        states.push(u);
    }
    Ok(SolverTrace { records, states })
}

/// `Σ_k <∇_τ u^k, Σ_j a^{(k)}_{k-j} ∇_τ u^j>` over a trace; positive whenever
/// the kernels are positive definite and some increment is nonzero.
pub fn increment_form(a: &KernelFamily, trace: &SolverTrace) -> Result<f64> {
    let steps = trace.states.len() - 1;
    if steps != a.levels() {
        return Err(Error::SizeMismatch { expected: a.levels(), found: steps });
    }
    let inc: Vec<Vec<f64>> = (1..=steps)
        .map(|k| trace.states[k].0.iter().zip(&trace.states[k - 1].0).map(|(x, y)| x - y).collect())
        .collect();
    let m = inc.first().map_or(0, Vec::len);
    let mut total = 0.0;
    for k in 1..=steps {
        for i in 0..m {
            let inner: f64 = (1..=k).map(|j| a.get(k, k - j) * inc[j - 1][i]).sum();
            total += inc[k - 1][i] * inner;
        }
    }
    Ok(total)
}

/// Forcing `f(x, t)`.
pub type Forcing<'a> = &'a dyn Fn(f64, f64) -> f64;

/// Backward Euler with midpoint convolution quadrature,
/// `(u^n - u^{n-1})/τ_n = Σ_{k=1}^{n} a^{(n)}_{n-k} τ_k D_h u^{k-1/2} + f(t_n)`.
pub fn midpoint_convolution_solve(
    grid: &SpatialGrid1D,
    mesh: &TimeMesh,
    kernels: &KernelFamily,
    u0: &GridFunction,
    f: Forcing,
) -> Result<SolverTrace> {
    grid.check(u0)?;
    if kernels.levels() != mesh.steps() {
        return Err(Error::SizeMismatch { expected: mesh.steps(), found: kernels.levels() });
    }
    let m = grid.nodes();
    let h2 = grid.h().powi(2);
    let mut states = vec![u0.clone()];
    // D_h u^{k-1/2} for completed steps
    let mut mid_lap: Vec<Vec<f64>> = Vec::with_capacity(mesh.steps());
    let mut bound = grid.l2_norm(u0);
    let mut records = vec![record(grid, 0, 0.0, u0, None, Some(bound))];
    let mut lap_prev = vec![0.0; m];
    let mut rhs = vec![0.0; m];
    for n in 1..=mesh.steps() {
        let tau = mesh.tau(n);
        let tn = mesh.t(n);
        let prev = &states[n - 1].0;
        laplacian_into(h2, prev, &mut lap_prev);
        let half = 0.5 * kernels.get(n, 0) * tau;
        let forcing = grid.sample(|x| f(x, tn));
        bound += tau * grid.l2_norm(&forcing);
        for i in 0..m {
            let mut hist = 0.0;
            for (k, lap) in mid_lap.iter().enumerate() {
                hist += kernels.get(n, n - 1 - k) * mesh.tau(k + 1) * lap[i];
            }
            rhs[i] = prev[i] / tau + half * lap_prev[i] + hist + forcing.0[i];
        }
        let next = solve_cyclic(1.0 / tau + 2.0 * half / h2, -half / h2, &rhs)?;
        let mid: Vec<f64> = next.iter().zip(prev).map(|(a, b)| 0.5 * (a + b)).collect();
        let mut lap_mid = vec![0.0; m];
        laplacian_into(h2, &mid, &mut lap_mid);
        mid_lap.push(lap_mid);
        let u = GridFunction(next);
        records.push(record(grid, n, tn, &u, None, Some(bound)));
        states.push(u);
    }
    Ok(SolverTrace { records, states })
}

/// Fractional wave equation `∂_t u = I^γ Δu + f` with the midpoint RL kernels.
pub fn frac_wave_solve(grid: &SpatialGrid1D, mesh: &TimeMesh, gamma: f64, u0: &GridFunction, f: Forcing) -> Result<SolverTrace> {
    let kernels = rl_midpoint_kernels(mesh, gamma)?;
    midpoint_convolution_solve(grid, mesh, &kernels, u0, f)
}

/// Volterra equation `∂_t u = K_t Δu + f`; `κ` must be declared strictly
/// decreasing and convex.
pub fn volterra_solve(grid: &SpatialGrid1D, mesh: &TimeMesh, kappa: &VolterraKernel, u0: &GridFunction, f: Forcing) -> Result<SolverTrace> {
    let shape = kappa.shape();
    if !(shape.decreasing && shape.convex) {
        return Err(Error::InvalidParameter(format!(
            "kernel {} must be strictly decreasing and convex",
            kappa.label()
        )));
    }
    let kernels = volterra_kernels(mesh, kappa)?;
    midpoint_convolution_solve(grid, mesh, &kernels, u0, f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn zero(_: f64, _: f64) -> f64 {
        0.0
    }

    #[test]
    fn laplacian_examples() {
        let g = SpatialGrid1D::new(16, 2.0).unwrap();
        let c = laplacian_apply(&g, &GridFunction::constant(16, 3.0)).unwrap();
        assert!(c.0.iter().all(|v| *v == 0.0));
        let u = g.sample(|x| (2.0 * PI * x / g.length()).cos());
        let du = laplacian_apply(&g, &u).unwrap();
        let lam = -(2.0 / g.h().powi(2)) * (1.0 - (2.0 * PI * g.h() / g.length()).cos());
        for i in 0..16 {
            assert!((du.0[i] - lam * u.0[i]).abs() < 1e-12 * lam.abs());
        }
        let w = g.sample(|x| x * x - x.powi(3));
        let s: f64 = laplacian_apply(&g, &w).unwrap().0.iter().sum();
        assert!(s.abs() < 1e-10);
        assert!(laplacian_apply(&g, &GridFunction::constant(5, 0.0)).is_err());
    }

    #[test]
    fn grid_validation() {
        assert!(SpatialGrid1D::unit(2).is_err());
        assert!(SpatialGrid1D::new(4, 0.0).is_err());
        assert_eq!(SpatialGrid1D::new(4, 2.0).unwrap().h(), 0.5);
    }

    #[test]
    fn cyclic_solve_matches_dense_product() {
        for m in [3usize, 4, 9, 33] {
            let (d, o) = (4.5, -1.25);
            let x: Vec<f64> = (0..m).map(|i| ((i * 7 % 5) as f64) - 1.5).collect();
            let rhs: Vec<f64> = (0..m).map(|i| d * x[i] + o * (x[(i + m - 1) % m] + x[(i + 1) % m])).collect();
            let got = solve_cyclic(d, o, &rhs).unwrap();
            for i in 0..m {
                assert!((got[i] - x[i]).abs() < 1e-13, "m={m} i={i}");
            }
        }
    }

    #[test]
    fn energy_examples() {
        let g = SpatialGrid1D::unit(4).unwrap();
        assert_eq!(discrete_energy(&g, 0.1, &GridFunction::constant(4, 1.0)).unwrap(), 0.0);
        assert_eq!(discrete_energy(&g, 0.1, &GridFunction::constant(4, 0.0)).unwrap(), 1.0);
        // alternating ±δ: (D u)_i = -4u_i/h², uᵀDu = -16δ²/h²
        let d = 0.3;
        let u = GridFunction(vec![d, -d, d, -d]);
        let h2 = g.h().powi(2);
        let want = 0.5 * 0.01 * 16.0 * d * d / h2 + 4.0 * double_well(d);
        assert!((discrete_energy(&g, 0.1, &u).unwrap() - want).abs() < 1e-14);
    }

    #[test]
    fn allen_cahn_fixed_points() {
        let g = SpatialGrid1D::unit(8).unwrap();
        let mesh = TimeMesh::graded(1.0, 10, 2.0).unwrap();
        let p = AllenCahnParams { alpha: 0.5, eps: 0.1, stabilization: 2.0 };
        for v in [0.0, 1.0, -1.0] {
            let tr = allen_cahn_solve(&g, &mesh, p, &GridFunction::constant(8, v)).unwrap();
            assert_eq!(tr.records.len(), 11);
            // exact up to the roundoff of the periodic solve
            assert!(tr.states.iter().all(|u| u.0.iter().all(|x| (x - v).abs() < 1e-14)));
            if v != 0.0 {
                assert!(tr.records.iter().all(|r| r.energy.unwrap().abs() < 1e-12));
            }
        }
    }

    #[test]
    fn allen_cahn_rejects_negative_stabilization() {
        let g = SpatialGrid1D::unit(8).unwrap();
        let mesh = TimeMesh::uniform(1.0, 4).unwrap();
        let p = AllenCahnParams { alpha: 0.5, eps: 0.1, stabilization: -1.0 };
        assert!(allen_cahn_solve(&g, &mesh, p, &GridFunction::constant(8, 0.0)).is_err());
    }

    #[test]
    fn wave_zero_data_stays_zero() {
        let g = SpatialGrid1D::unit(8).unwrap();
        let mesh = TimeMesh::graded(1.0, 12, 2.0).unwrap();
        let tr = frac_wave_solve(&g, &mesh, 0.5, &GridFunction::constant(8, 0.0), &zero).unwrap();
        assert!(tr.states.iter().all(|u| u.linf() == 0.0));
    }

    #[test]
    fn volterra_weight_kernel_matches_wave() {
        let g = SpatialGrid1D::unit(12).unwrap();
        let mesh = TimeMesh::graded(1.0, 15, 2.0).unwrap();
        let u0 = g.sample(|x| (2.0 * PI * x).sin());
        let wave = frac_wave_solve(&g, &mesh, 0.4, &u0, &zero).unwrap();
        let volt = volterra_solve(&g, &mesh, &VolterraKernel::weight(0.4).unwrap(), &u0, &zero).unwrap();
        assert_eq!(wave, volt);
    }

    #[test]
    fn volterra_requires_shape() {
        let g = SpatialGrid1D::unit(8).unwrap();
        let mesh = TimeMesh::uniform(1.0, 4).unwrap();
        let k = VolterraKernel::constant(1.0).unwrap();
        assert!(volterra_solve(&g, &mesh, &k, &GridFunction::constant(8, 0.0), &zero).is_err());
    }
}
