//! Sufficient conditions for positive definiteness of convolution quadratic
//! forms, and an eigenvalue oracle that certifies the conclusion directly.

use serde::{Deserialize, Serialize};

use crate::doc_dcc::{dcc_from_doc, doc_recursive, DccKernels, DocKernels};
use crate::eigen::SymMatrix;
use crate::kernels::{l1plus_kernels, KernelFamily};
use crate::mesh::TimeMesh;
use crate::{Error, Result};

/// Relative slack used to keep genuine equalities from flipping on roundoff.
pub const SLACK: f64 = 1e-14;

/// Half-width of the semidefinite band, relative to `λ_max`.
pub const CLASS_RTOL: f64 = 1e-10;

/// `lhs > rhs` up to roundoff.
#[inline]
fn strictly_greater(lhs: f64, rhs: f64) -> bool {
    lhs - rhs > SLACK * lhs.abs().max(rhs.abs())
}

/// `lhs >= rhs` up to roundoff.
#[inline]
fn at_least(lhs: f64, rhs: f64) -> bool {
    lhs - rhs >= -SLACK * lhs.abs().max(rhs.abs())
}

/// Outcome of one condition; `witness` is the lexicographically smallest
/// failing `(n, j)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub pass: bool,
    pub witness: Option<(usize, usize)>,
}

impl Verdict {
    pub const PASS: Verdict = Verdict { pass: true, witness: None };

    fn fail_at(n: usize, j: usize) -> Self {
        Verdict { pass: false, witness: Some((n, j)) }
    }

    /// Scan `(n, j)` in lexicographic order and stop at the first failure.
    fn scan<I, F>(pairs: I, mut holds: F) -> Self
    where
        I: IntoIterator<Item = (usize, usize)>,
        F: FnMut(usize, usize) -> bool,
    {
        for (n, j) in pairs {
            if !holds(n, j) {
                return Verdict::fail_at(n, j);
            }
        }
        Verdict::PASS
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    PdCertified,
    SemidefCertified,
    WeakC4Certified,
    Uncertified,
}

impl Classification {
    pub fn as_str(self) -> &'static str {
        match self {
            Classification::PdCertified => "pd-certified",
            Classification::SemidefCertified => "semidef-certified",
            Classification::WeakC4Certified => "weak-c4-certified",
            Classification::Uncertified => "uncertified",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub c1: Verdict,
    pub c2: Verdict,
    pub c3: Verdict,
    pub c4: Verdict,
    pub cor_c1: Verdict,
    pub cor_c2: Verdict,
    pub cor_c3: Verdict,
    pub cor_c4: Verdict,
    pub weak_c4: Verdict,
    pub classification: Classification,
}

impl ConditionReport {
    pub fn theorem_holds(&self) -> bool {
        self.c1.pass && self.c2.pass && self.c3.pass && self.c4.pass
    }

    pub fn corollary_holds(&self) -> bool {
        self.cor_c1.pass && self.cor_c2.pass && self.cor_c3.pass && self.cor_c4.pass
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// `(n, j)` for `min_n <= n <= levels`, `j_lo <= j <= n - j_hi_offset`, in
/// lexicographic order. Callers keep `min_n >= j_hi_offset`.
fn pairs(levels: usize, min_n: usize, j_lo: usize, j_hi_offset: usize) -> impl Iterator<Item = (usize, usize)> {
    (min_n..=levels).flat_map(move |n| (j_lo..=n - j_hi_offset).map(move |j| (n, j)))
}

pub fn check_c1(a: &KernelFamily) -> Verdict {
    Verdict::scan(pairs(a.levels(), 1, 0, 1), |n, j| a.get(n, j) > 0.0)
}

pub fn check_c2(a: &KernelFamily) -> Verdict {
    Verdict::scan(pairs(a.levels(), 2, 1, 1), |n, j| strictly_greater(a.get(n - 1, j - 1), a.get(n, j)))
}

pub fn check_c3(a: &KernelFamily) -> Verdict {
    Verdict::scan(pairs(a.levels(), 3, 1, 2), |n, j| {
        at_least(a.get(n - 1, j - 1) * a.get(n, j + 1), a.get(n - 1, j) * a.get(n, j))
    })
}

pub fn check_c4(a: &KernelFamily) -> Verdict {
    Verdict::scan(pairs(a.levels(), 2, 1, 1), |n, j| at_least(a.get(n, j - 1), a.get(n, j)))
}

fn corollary_verdicts(a: &KernelFamily) -> [Verdict; 4] {
    [
        Verdict::scan(pairs(a.levels(), 1, 0, 1), |n, j| a.get(n, j) >= 0.0),
        Verdict::scan(pairs(a.levels(), 2, 1, 1), |n, j| at_least(a.get(n - 1, j - 1), a.get(n, j))),
        check_c3(a),
        check_c4(a),
    ]
}

/// Which levels the weakened condition is imposed on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WeakC4Scope {
    /// `n = N` only.
    #[default]
    FinalLevel,
    /// Every `1 <= n <= N`.
    AllLevels,
}

/// `p^{(n)}_{n-k} > -σ_k` with `σ_k = Σ_{j=1}^{k} θ^{(k)}_{k-j}`.
///
/// The witness is `(n, n - k)`, the index of the offending `p` entry.
pub fn check_weak_c4(theta: &DocKernels, p: &DccKernels, scope: WeakC4Scope) -> Result<Verdict> {
    if theta.levels() != p.levels() {
        return Err(Error::SizeMismatch { expected: theta.levels(), found: p.levels() });
    }
    let levels = theta.levels();
    let sigma: Vec<f64> = (0..=levels).map(|k| if k == 0 { 0.0 } else { theta.row_sum(k) }).collect();
    let first = match scope {
        WeakC4Scope::FinalLevel => levels,
        WeakC4Scope::AllLevels => 1,
    };
    let pairs = (first..=levels).flat_map(|n| (0..n).map(move |j| (n, j)));
    Ok(Verdict::scan(pairs, |n, j| strictly_greater(p.get(n, j), -sigma[n - j])))
}

/// Evaluate C1–C4, the Corollary variants and the weakened C4.
pub fn check_conditions(a: &KernelFamily) -> ConditionReport {
    check_conditions_scoped(a, WeakC4Scope::FinalLevel)
}

pub fn check_conditions_scoped(a: &KernelFamily, scope: WeakC4Scope) -> ConditionReport {
    let (c1, c2, c3, c4) = (check_c1(a), check_c2(a), check_c3(a), check_c4(a));
    let [cor_c1, cor_c2, cor_c3, cor_c4] = corollary_verdicts(a);
    let weak_c4 = match doc_recursive(a) {
        Ok(theta) => {
            let p = dcc_from_doc(&theta);
            check_weak_c4(&theta, &p, scope).unwrap_or(Verdict { pass: false, witness: None })
        }
        // a vanishing leading coefficient leaves the DOC kernels undefined
        Err(_) => Verdict { pass: false, witness: None },
    };
    let classification = if c1.pass && c2.pass && c3.pass && c4.pass {
        Classification::PdCertified
    } else if cor_c1.pass && cor_c2.pass && cor_c3.pass && cor_c4.pass {
        Classification::SemidefCertified
    } else if c1.pass && c2.pass && c3.pass && weak_c4.pass {
        Classification::WeakC4Certified
    } else {
        Classification::Uncertified
    };
    ConditionReport { c1, c2, c3, c4, cor_c1, cor_c2, cor_c3, cor_c4, weak_c4, classification }
}

/// `Σ_{k=1}^{N} w_k Σ_{j=1}^{k} a^{(k)}_{k-j} w_j`.
pub fn quadratic_form(a: &KernelFamily, w: &[f64]) -> Result<f64> {
    if w.len() != a.levels() {
        return Err(Error::SizeMismatch { expected: a.levels(), found: w.len() });
    }
    let mut total = 0.0;
    for k in 1..=a.levels() {
        let inner: f64 = (1..=k).map(|j| a.get(k, k - j) * w[j - 1]).sum();
        total += w[k - 1] * inner;
    }
    Ok(total)
}

/// Row-major `A[k][j] = a^{(k)}_{k-j}` for `j <= k`, zero above the diagonal.
pub fn form_matrix(a: &KernelFamily) -> Vec<f64> {
    let n = a.levels();
    let mut m = vec![0.0; n * n];
    for k in 1..=n {
        for j in 1..=k {
            m[(k - 1) * n + (j - 1)] = a.get(k, k - j);
        }
    }
    m
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PdClass {
    PositiveDefinite,
    PositiveSemidefinite,
    Indefinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PdVerdict {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub class: PdClass,
}

impl PdVerdict {
    /// Band half-width `1e-10·|λ_max|`.
    pub fn band(&self) -> f64 {
        CLASS_RTOL * self.lambda_max.abs()
    }
}

pub fn classify(lambda_min: f64, lambda_max: f64) -> PdVerdict {
    let band = CLASS_RTOL * lambda_max.abs();
    let class = if lambda_min > band {
        PdClass::PositiveDefinite
    } else if lambda_min.abs() <= band {
        PdClass::PositiveSemidefinite
    } else {
        PdClass::Indefinite
    };
    PdVerdict { lambda_min, lambda_max, class }
}

/// Extreme eigenvalues of the symmetric part of the form matrix.
pub fn pd_oracle(a: &KernelFamily) -> Result<PdVerdict> {
    let s = SymMatrix::symmetric_part(a.levels(), &form_matrix(a))?;
    let eig = s.eigenvalues()?;
    Ok(classify(eig[0], eig[eig.len() - 1]))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignReport {
    /// `θ^{(n)}_0 > 0`.
    pub theta0: Verdict,
    /// `θ^{(n)}_1 < 0` for `n >= 2`.
    pub theta1: Verdict,
    /// Levels where `θ^{(n)}_1` is exactly zero (degenerate kernels with a
    /// vanishing first off-diagonal) and the strict sign is not applicable.
    pub theta1_vacuous: Vec<usize>,
    /// `θ^{(n)}_j <= 0` for `2 <= j <= n-1`.
    pub tail: Verdict,
    /// `σ_n = Σ_j θ^{(n)}_j > 0`.
    pub sigma: Verdict,
}

impl SignReport {
    pub fn passes(&self) -> bool {
        self.theta0.pass && self.theta1.pass && self.tail.pass && self.sigma.pass
    }
}

fn row_scale(t: &crate::Triangle, n: usize) -> f64 {
    t.row(n).iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

pub fn sign_report(theta: &DocKernels) -> SignReport {
    let t = &theta.0;
    let levels = t.levels();
    let theta0 = Verdict::scan((1..=levels).map(|n| (n, 0)), |n, _| t.get(n, 0) > 0.0);
    let theta1_vacuous: Vec<usize> = (2..=levels).filter(|&n| t.get(n, 1) == 0.0).collect();
    // exact zeros are listed in `theta1_vacuous` instead of failing
    let theta1 = Verdict::scan((2..=levels).map(|n| (n, 1)), |n, _| t.get(n, 1) <= 0.0);
    let tail = Verdict::scan(pairs(levels, 3, 2, 1), |n, j| t.get(n, j) <= SLACK * row_scale(t, n));
    let sigma = Verdict::scan((1..=levels).map(|n| (n, 0)), |n, _| theta.row_sum(n) > 0.0);
    SignReport { theta0, theta1, theta1_vacuous, tail, sigma }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DccReport {
    /// `p^{(n)}_0 > 0`.
    pub p0: Verdict,
    /// `p^{(n-1)}_0 > p^{(n)}_1`.
    pub first_step: Verdict,
    /// `p^{(n-1)}_{j-1} >= p^{(n)}_j` for `2 <= j <= n-1`.
    pub monotone: Verdict,
    /// `p^{(n)}_j >= 0`.
    pub nonnegative: Verdict,
}

impl DccReport {
    pub fn passes(&self) -> bool {
        self.p0.pass && self.first_step.pass && self.monotone.pass && self.nonnegative.pass
    }

    /// All but the strict `first_step` inequality.
    pub fn non_strict_pass(&self) -> bool {
        self.monotone.pass && self.nonnegative.pass
    }
}

pub fn dcc_report(p: &DccKernels) -> DccReport {
    let t = &p.0;
    let levels = t.levels();
    let p0 = Verdict::scan((1..=levels).map(|n| (n, 0)), |n, _| t.get(n, 0) > 0.0);
    let first_step = Verdict::scan((2..=levels).map(|n| (n, 1)), |n, _| strictly_greater(t.get(n - 1, 0), t.get(n, 1)));
    let monotone = Verdict::scan(pairs(levels, 3, 2, 1), |n, j| at_least(t.get(n - 1, j - 1), t.get(n, j)));
    let nonnegative = Verdict::scan(pairs(levels, 1, 0, 1), |n, j| t.get(n, j) >= -SLACK * row_scale(t, n));
    DccReport { p0, first_step, monotone, nonnegative }
}

/// Both sides of
/// `2 Σ_k V_k Σ_j θ^{(k)}_{k-j} V_j >= Σ_k (σ_k + p^{(N)}_{N-k}) V_k²`.
pub fn convolution_quadratic_sides(theta: &DocKernels, p: &DccKernels, v: &[f64]) -> Result<(f64, f64)> {
    let levels = theta.levels();
    if v.len() != levels || p.levels() != levels {
        return Err(Error::SizeMismatch { expected: levels, found: v.len() });
    }
    let mut lhs = 0.0;
    let mut rhs = 0.0;
    for k in 1..=levels {
        let inner: f64 = (1..=k).map(|j| theta.get(k, k - j) * v[j - 1]).sum();
        lhs += 2.0 * v[k - 1] * inner;
        rhs += (theta.row_sum(k) + p.get(levels, levels - k)) * v[k - 1] * v[k - 1];
    }
    Ok((lhs, rhs))
}

/// Mesh on which the L1⁺ kernels violate C4, found by a seeded scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct C4Witness {
    pub alpha: f64,
    pub seed: u64,
    pub low: f64,
    pub high: f64,
    pub t: Vec<f64>,
    pub c4_witness: (usize, usize),
}

pub const WITNESS_RATIO_BOUNDS: (f64, f64) = (0.2, 5.0);

/// Try seeds `first_seed..first_seed + tries` of `TimeMesh::random(1, steps, 0.2, 5, seed)`
/// and return the first mesh on which `l1plus_kernels(·, alpha)` fails C4.
pub fn find_l1plus_c4_witness(alpha: f64, steps: usize, first_seed: u64, tries: u64) -> Result<Option<C4Witness>> {
    let (low, high) = WITNESS_RATIO_BOUNDS;
    for seed in first_seed..first_seed + tries {
        let mesh = TimeMesh::random(1.0, steps, low, high, seed)?;
        let a = l1plus_kernels(&mesh, alpha)?;
        let c4 = check_c4(&a);
        if let Some(at) = c4.witness {
            return Ok(Some(C4Witness { alpha, seed, low, high, t: mesh.points().to_vec(), c4_witness: at }));
        }
    }
    Ok(None)
}
