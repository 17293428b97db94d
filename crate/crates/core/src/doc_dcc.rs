//! Discrete orthogonal convolution (DOC) kernels `θ^{(n)}_{n-k}` and
//! discrete complementary convolution (DCC) kernels `p^{(n)}_{n-k}`.
//!
//! The DOC kernels are the convolution inverse of a kernel family,
//!
//! ```text
//! Σ_{j=k}^{n} θ^{(n)}_{n-j} a^{(j)}_{j-k} = δ_{nk},
//! ```
//!
//! and the DCC kernels are their column partial sums,
//! `p^{(n)}_{n-k} = Σ_{j=k}^{n} θ^{(j)}_{j-k}`, for which the same sum equals one.
//!
//! The recursions are the canonical constructors. The explicit products in
//! terms of the auxiliary ratio sequences `ψ` and `χ` are kept as
//! independent cross-checks.

use crate::kernels::KernelFamily;
use crate::triangle::Triangle;
use crate::{Error, Result};
use twofloat::TwoFloat;

/// Environment variable overriding the default relative identity tolerance.
pub const RTOL_ENV: &str = "CONVOPD_RTOL";

#[derive(Debug, Clone, PartialEq)]
pub struct DocKernels(pub Triangle);

#[derive(Debug, Clone, PartialEq)]
pub struct DccKernels(pub Triangle);

impl DocKernels {
    pub fn levels(&self) -> usize {
        self.0.levels()
    }

    /// `θ^{(n)}_j`.
    #[inline]
    pub fn get(&self, n: usize, j: usize) -> f64 {
        self.0.get(n, j)
    }

    /// `σ_n = Σ_{j=1}^{n} θ^{(n)}_{n-j}`, the full row sum.
    pub fn row_sum(&self, n: usize) -> f64 {
        self.0.row(n).iter().sum()
    }
}

impl DccKernels {
    pub fn levels(&self) -> usize {
        self.0.levels()
    }

    /// `p^{(n)}_j`.
    #[inline]
    pub fn get(&self, n: usize, j: usize) -> f64 {
        self.0.get(n, j)
    }
}

// Far-tail entries come out of long sums with heavy cancellation; in plain
// f64 they lose up to six digits at N = 100. All constructors below carry
// double-double intermediates and round once on output.
type Dd = TwoFloat;

#[inline]
fn dd(x: f64) -> Dd {
    Dd::from(x)
}

fn leading_inverses(a: &KernelFamily) -> Result<Vec<Dd>> {
    // index 0 unused so that inv[k] = 1 / a^{(k)}_0
    let mut inv = vec![dd(0.0); a.levels() + 1];
    for k in 1..=a.levels() {
        let lead = a.get(k, 0);
        if lead == 0.0 {
            return Err(Error::ZeroLeading { level: k });
        }
        inv[k] = dd(1.0) / dd(lead);
    }
    Ok(inv)
}

fn round_rows(levels: usize, rows: &[Vec<Dd>]) -> Triangle {
    let mut out = Triangle::zeros(levels);
    for n in 1..=levels {
        for (j, v) in rows[n].iter().enumerate() {
            out.set(n, j, v.hi());
        }
    }
    out
}

fn doc_rows(a: &KernelFamily) -> Result<Vec<Vec<Dd>>> {
    let inv = leading_inverses(a)?;
    let levels = a.levels();
    let mut rows = vec![Vec::new(); levels + 1];
    for n in 1..=levels {
        let mut row = vec![dd(0.0); n];
        row[0] = inv[n];
        for k in (1..n).rev() {
            let mut acc = dd(0.0);
            for j in (k + 1)..=n {
                acc += row[n - j] * a.get(j, j - k);
            }
            row[n - k] = -(inv[k] * acc);
        }
        rows[n] = row;
    }
    Ok(rows)
}

/// DOC kernels by back substitution:
/// `θ^{(n)}_0 = 1/a^{(n)}_0`,
/// `θ^{(n)}_{n-k} = -(1/a^{(k)}_0) Σ_{j=k+1}^{n} θ^{(n)}_{n-j} a^{(j)}_{j-k}` for `k = n-1, ..., 1`.
pub fn doc_recursive(a: &KernelFamily) -> Result<DocKernels> {
    Ok(DocKernels(round_rows(a.levels(), &doc_rows(a)?)))
}

/// DCC kernels as column partial sums of the DOC kernels.
pub fn dcc_from_doc(theta: &DocKernels) -> DccKernels {
    let levels = theta.levels();
    let mut rows: Vec<Vec<Dd>> = vec![Vec::new(); levels + 1];
    for n in 1..=levels {
        let mut row = vec![dd(theta.get(n, 0)); n];
        for k in 1..n {
            // p^{(n)}_{n-k} = p^{(n-1)}_{n-1-k} + θ^{(n)}_{n-k}
            row[n - k] = rows[n - 1][n - 1 - k] + theta.get(n, n - k);
        }
        rows[n] = row;
    }
    DccKernels(round_rows(levels, &rows))
}

/// DCC kernels from the complementary recursion:
/// `p^{(n)}_0 = 1/a^{(n)}_0`,
/// `p^{(n)}_{n-ℓ} = (1/a^{(ℓ)}_0) Σ_{j=ℓ+1}^{n} (a^{(j)}_{j-ℓ-1} - a^{(j)}_{j-ℓ}) p^{(n)}_{n-j}`.
pub fn dcc_recursive(a: &KernelFamily) -> Result<DccKernels> {
    let inv = leading_inverses(a)?;
    let levels = a.levels();
    let mut rows = vec![Vec::new(); levels + 1];
    for n in 1..=levels {
        let mut row = vec![dd(0.0); n];
        row[0] = inv[n];
        for l in (1..n).rev() {
            let mut acc = dd(0.0);
            for j in (l + 1)..=n {
                let diff = Dd::new_sub(a.get(j, j - l - 1), a.get(j, j - l));
                acc += diff * row[n - j];
            }
            row[n - l] = inv[l] * acc;
        }
        rows[n] = row;
    }
    Ok(DccKernels(round_rows(levels, &rows)))
}

/// Ratio sequence `ψ^{(m)}_0 = 1/a^{(m)}_0`, `ψ^{(m)}_j = a^{(m)}_j / a^{(m-1)}_{j-1}`
/// (zero when the denominator vanishes).
#[derive(Debug, Clone, PartialEq)]
pub struct PsiTable {
    rows: Vec<Vec<Dd>>,
}

impl PsiTable {
    #[inline]
    pub fn get(&self, m: usize, j: usize) -> f64 {
        self.rows[m][j].hi()
    }

    #[inline]
    fn get_dd(&self, m: usize, j: usize) -> Dd {
        self.rows[m][j]
    }

    pub fn levels(&self) -> usize {
        self.rows.len() - 1
    }
}

/// `χ^{(k)}_ℓ` relative to a fixed top level `n`, for `0 <= k <= n-3` and
/// `2 <= ℓ <= n-k-1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChiTable {
    level: usize,
    rows: Vec<Vec<Dd>>,
}

impl ChiTable {
    pub fn level(&self) -> usize {
        self.level
    }

    /// Number of `k` rows (`n - 2` for `n >= 3`, else zero).
    pub fn depth(&self) -> usize {
        self.rows.len()
    }

    #[inline]
    pub fn get(&self, k: usize, l: usize) -> f64 {
        self.rows[k][l - 2].hi()
    }
}

/// ψ for every level and one χ table per level `n = 1..=N`.
#[derive(Debug, Clone, PartialEq)]
pub struct AuxSequences {
    pub psi: PsiTable,
    pub chi: Vec<ChiTable>,
}

impl AuxSequences {
    /// χ table of top level `n`.
    pub fn chi_at(&self, n: usize) -> &ChiTable {
        &self.chi[n - 1]
    }

    /// `Ψ^{(ℓ)} = χ^{(n-ℓ)}_2 ψ^{(ℓ)}_2 - ψ^{(ℓ)}_1` relative to top level `n`,
    /// for `3 <= ℓ <= n`.
    pub fn big_psi(&self, n: usize, l: usize) -> f64 {
        self.big_psi_dd(n, l).hi()
    }

    fn big_psi_dd(&self, n: usize, l: usize) -> Dd {
        let chi = &self.chi_at(n).rows[n - l][0];
        *chi * self.psi.get_dd(l, 2) - self.psi.get_dd(l, 1)
    }
}

pub fn psi_sequence(a: &KernelFamily) -> Result<PsiTable> {
    let inv = leading_inverses(a)?;
    let levels = a.levels();
    let mut rows = vec![Vec::new(); levels + 1];
    for m in 1..=levels {
        let mut row = vec![dd(0.0); m];
        row[0] = inv[m];
        for j in 1..m {
            let den = a.get(m - 1, j - 1);
            if den != 0.0 {
                row[j] = dd(a.get(m, j)) / dd(den);
            }
        }
        rows[m] = row;
    }
    Ok(PsiTable { rows })
}

/// χ table for top level `n` from the ψ chain; zero denominators give χ = 1.
pub fn chi_sequence(psi: &PsiTable, n: usize) -> Result<ChiTable> {
    if n > psi.levels() || n == 0 {
        return Err(Error::SizeMismatch { expected: psi.levels(), found: n });
    }
    if n < 3 {
        return Ok(ChiTable { level: n, rows: Vec::new() });
    }
    let mut rows: Vec<Vec<Dd>> = Vec::with_capacity(n - 2);
    rows.push(vec![dd(1.0); n - 2]); // k = 0, ℓ = 2..=n-1
    for k in 1..=(n - 3) {
        let m = n - k + 1;
        let prev = &rows[k - 1];
        let psi1 = psi.get_dd(m, 1);
        let den = prev[0] * psi.get_dd(m, 2) - psi1;
        let row: Vec<Dd> = (2..=(n - k - 1))
            .map(|l| {
                if den == 0.0 {
                    dd(1.0)
                } else {
                    (prev[l + 1 - 2] * psi.get_dd(m, l + 1) - psi1) / den
                }
            })
            .collect();
        rows.push(row);
    }
    Ok(ChiTable { level: n, rows })
}

pub fn aux_sequences(a: &KernelFamily) -> Result<AuxSequences> {
    let psi = psi_sequence(a)?;
    let chi = (1..=a.levels()).map(|n| chi_sequence(&psi, n)).collect::<Result<Vec<_>>>()?;
    Ok(AuxSequences { psi, chi })
}

/// DOC kernels from the product formula
/// `θ^{(n)}_j = -ψ^{(n)}_0 ψ^{(n-j+1)}_1 Π_{ℓ=n-j+2}^{n} Ψ^{(ℓ)}`.
pub fn doc_explicit(a: &KernelFamily) -> Result<DocKernels> {
    let aux = aux_sequences(a)?;
    Ok(doc_from_aux(&aux))
}

pub fn doc_from_aux(aux: &AuxSequences) -> DocKernels {
    let psi = &aux.psi;
    let levels = psi.levels();
    let mut theta = Triangle::zeros(levels);
    for n in 1..=levels {
        let psi0 = psi.get_dd(n, 0);
        theta.set(n, 0, psi0.hi());
        let mut prod = dd(1.0);
        for j in 1..n {
            if j >= 2 {
                prod *= aux.big_psi_dd(n, n - j + 2);
            }
            theta.set(n, j, (-(psi0 * psi.get_dd(n - j + 1, 1) * prod)).hi());
        }
    }
    DocKernels(theta)
}

/// DCC kernels from
/// `p^{(n)}_{n-k} = 1/a^{(k)}_0 - ψ^{(k+1)}_1 Σ_{j=k+1}^{n} (1/a^{(j)}_0) Π_{ℓ=k+2}^{j} Ψ^{(ℓ)}`,
/// where each product uses the χ table of level `j`.
pub fn dcc_explicit(a: &KernelFamily) -> Result<DccKernels> {
    let aux = aux_sequences(a)?;
    let psi = &aux.psi;
    let levels = a.levels();
    let mut running = vec![dd(0.0); levels + 1]; // running[k] = Σ_{j=k+1}^{n} ψ^{(j)}_0 Π
    let mut p = Triangle::zeros(levels);
    for n in 1..=levels {
        let psi0 = psi.get_dd(n, 0);
        let mut prod = dd(1.0);
        for k in (1..n).rev() {
            if k + 2 <= n {
                prod *= aux.big_psi_dd(n, k + 2);
            }
            running[k] += psi0 * prod;
        }
        p.set(n, 0, psi0.hi());
        for k in 1..n {
            let v = psi.get_dd(k, 0) - psi.get_dd(k + 1, 1) * running[k];
            p.set(n, n - k, v.hi());
        }
    }
    Ok(DccKernels(p))
}

/// Acceptance band `|r| <= atol + rtol * scale` for identity residuals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance { rtol: 1e-11, atol: 1e-14 }
    }
}

impl Tolerance {
    /// Default band with `rtol` taken from `CONVOPD_RTOL` when set.
    pub fn from_env() -> Result<Self> {
        let mut tol = Tolerance::default();
        if let Ok(raw) = std::env::var(RTOL_ENV) {
            let rtol: f64 = raw
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("{RTOL_ENV}={raw} is not a number")))?;
            if !(rtol > 0.0 && rtol.is_finite()) {
                return Err(Error::InvalidParameter(format!("{RTOL_ENV} must be positive, got {rtol}")));
            }
            tol.rtol = rtol;
        }
        Ok(tol)
    }
}

/// Largest residual of one identity over all `(n, k)`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Residual {
    pub max_abs: f64,
    /// `max |r| / Σ|terms|`.
    pub max_scaled: f64,
    /// Largest `|r| / (atol + rtol·scale)`; at most one means within tolerance.
    pub max_ratio: f64,
    pub worst: Option<[usize; 2]>,
}

impl Residual {
    fn new() -> Self {
        Residual { max_abs: 0.0, max_scaled: 0.0, max_ratio: 0.0, worst: None }
    }

    fn record(&mut self, n: usize, k: usize, residual: f64, scale: f64, tol: Tolerance) {
        let r = residual.abs();
        let ratio = r / (tol.atol + tol.rtol * scale);
        self.max_abs = self.max_abs.max(r);
        if scale > 0.0 {
            self.max_scaled = self.max_scaled.max(r / scale);
        } else if r > 0.0 {
            self.max_scaled = f64::INFINITY;
        }
        if ratio > self.max_ratio || self.worst.is_none() {
            self.max_ratio = self.max_ratio.max(ratio);
            self.worst = Some([n, k]);
        }
    }

    pub fn passes(&self) -> bool {
        self.max_ratio <= 1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct IdentityReport {
    /// `Σ_{j=k}^n θ^{(n)}_{n-j} a^{(j)}_{j-k} - δ_{nk}`.
    pub orthogonal: Residual,
    /// `Σ_{j=k}^n a^{(n)}_{n-j} θ^{(j)}_{j-k} - δ_{nk}`.
    pub mutual: Residual,
    /// `Σ_{j=k}^n p^{(n)}_{n-j} a^{(j)}_{j-k} - 1`.
    pub complementary: Residual,
}

impl IdentityReport {
    pub fn passes(&self) -> bool {
        self.orthogonal.passes() && self.mutual.passes() && self.complementary.passes()
    }

    pub fn max_scaled(&self) -> f64 {
        self.orthogonal.max_scaled.max(self.mutual.max_scaled).max(self.complementary.max_scaled)
    }
}

/// Residuals of the orthogonal, mutual-orthogonal, and complementary identities.
pub fn verify_identities(
    a: &KernelFamily,
    theta: &DocKernels,
    p: &DccKernels,
    tol: Tolerance,
) -> Result<IdentityReport> {
    let levels = a.levels();
    for found in [theta.levels(), p.levels()] {
        if found != levels {
            return Err(Error::SizeMismatch { expected: levels, found });
        }
    }
    let mut orthogonal = Residual::new();
    let mut mutual = Residual::new();
    let mut complementary = Residual::new();
    for n in 1..=levels {
        for k in 1..=n {
            let delta = if n == k { 1.0 } else { 0.0 };
            let (mut s1, mut m1) = (0.0, 0.0);
            let (mut s2, mut m2) = (0.0, 0.0);
            let (mut s3, mut m3) = (0.0, 0.0);
            for j in k..=n {
                let t1 = theta.get(n, n - j) * a.get(j, j - k);
                let t2 = a.get(n, n - j) * theta.get(j, j - k);
                let t3 = p.get(n, n - j) * a.get(j, j - k);
                s1 += t1;
                m1 += t1.abs();
                s2 += t2;
                m2 += t2.abs();
                s3 += t3;
                m3 += t3.abs();
            }
            orthogonal.record(n, k, s1 - delta, m1, tol);
            mutual.record(n, k, s2 - delta, m2, tol);
            complementary.record(n, k, s3 - 1.0, m3, tol);
        }
    }
    Ok(IdentityReport { orthogonal, mutual, complementary })
}
