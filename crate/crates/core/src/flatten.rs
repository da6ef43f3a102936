//! Embezzling states, the block-splitting permutations W_b, spectrum
//! flattening, and convex splits of flattened states.
//!
//! Register D carries labels 0..|D|. W_b is indexed d * |E| + e; the
//! controlled W of a flattened spectrum is indexed (c * |E| + e) * |D| + d in
//! the eigenbasis of the base state. All embezzlement bounds use the exact
//! ratio S(1, n) / S(a, n).

use rayon::prelude::*;

use crate::convex_split::{
    block_divergence, lift_permutation, select_members, split_rc, u_ell, ConvexSplitReport, PrimeRegister,
};
use crate::entropy::dmax_matrices;
use crate::error::{Error, Result};
use crate::field::{next_prime_in, pairwise_family};
use crate::linalg::sparse::{Partition, SparseOp};
use crate::linalg::{
    c, diag, eigh, identity, kron, lambda_min, partial_trace_matrix, re, scale, CMat, DensityOperator, RegisterSystem,
    C64,
};

const GRID_TOL: f64 = 1e-9;

/// S(a, n) = sum_{j=a}^{n} 1/j, zero when a > n.
pub fn harmonic(a: usize, n: usize) -> f64 {
    (a.max(1)..=n).rev().map(|j| 1.0 / j as f64).sum()
}

/// xi^{a:n} = (1 / S(a, n)) sum_{j=a}^{n} (1/j) |j><j|.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbezzleState {
    a: usize,
    n: usize,
    norm: f64,
}

pub fn embezzling_state(a: usize, n: usize) -> Result<EmbezzleState> {
    if a == 0 || a > n {
        return Err(Error::InvalidParameter(format!("embezzling state needs 1 <= a <= n, got a = {a}, n = {n}")));
    }
    Ok(EmbezzleState { a, n, norm: harmonic(a, n) })
}

impl EmbezzleState {
    pub fn a(&self) -> usize {
        self.a
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// S(a, n).
    pub fn normalization(&self) -> f64 {
        self.norm
    }

    pub fn weight(&self, j: usize) -> f64 {
        if (self.a..=self.n).contains(&j) {
            1.0 / (self.norm * j as f64)
        } else {
            0.0
        }
    }

    /// Weights on labels 0..d_size.
    pub fn weights(&self, d_size: usize) -> Vec<f64> {
        (0..d_size).map(|j| self.weight(j)).collect()
    }

    pub fn density(&self, label: &str, d_size: usize) -> Result<DensityOperator> {
        if d_size <= self.n {
            return Err(Error::DimensionMismatch { expected: self.n + 1, got: d_size });
        }
        DensityOperator::from_diagonal(RegisterSystem::single(label, d_size)?, &self.weights(d_size))
    }

    /// |xi> = sum_j sqrt(xi_j) |j>|j> on D' D.
    pub fn purification(&self, d_size: usize) -> Vec<C64> {
        let mut v = vec![re(0.0); d_size * d_size];
        for j in self.a..=self.n.min(d_size - 1) {
            v[j * d_size + j] = re(self.weight(j).sqrt());
        }
        v
    }
}

/// W_b on D E: |j>|0> -> |j / b>|j mod b>, completed by pairing the remaining
/// domain and codomain states in lexicographic order. b = 0 gives the identity.
pub fn w_b_permutation(b: usize, d_size: usize, e_size: usize) -> Result<Vec<usize>> {
    if b > e_size {
        return Err(Error::InvalidParameter(format!("b = {b} exceeds |E| = {e_size}")));
    }
    let dim = d_size * e_size;
    if b == 0 {
        return Ok((0..dim).collect());
    }
    let mut perm = vec![usize::MAX; dim];
    let mut hit = vec![false; dim];
    for j in 0..d_size {
        let img = (j / b) * e_size + j % b;
        perm[j * e_size] = img;
        hit[img] = true;
    }
    let free = (0..dim).filter(|&x| !hit[x]);
    let open: Vec<usize> = (0..dim).filter(|&x| perm[x] == usize::MAX).collect();
    for (x, y) in open.into_iter().zip(free) {
        perm[x] = y;
    }
    Ok(perm)
}

/// Exact minimal ratio r with A <= r B for diagonal A, B, infinite when A
/// leaves supp(B).
fn diagonal_ratio(lhs: &[f64], rhs: &[f64]) -> f64 {
    lhs.iter().zip(rhs).filter(|(l, _)| **l > 0.0).fold(
        0.0,
        |acc, (l, r)| {
            if *r > 0.0 {
                acc.max(l / r)
            } else {
                f64::INFINITY
            }
        },
    )
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RatioCheck {
    pub ratio: f64,
    pub bound: f64,
    pub holds: bool,
}

/// W_b(xi^{a:n} (x) |0><0|)W_b^dagger against xi^{1:n} (x) mu_b, with |D| = n + 1
/// and |E| = b.
pub fn check_embezzle_upper(a: usize, b: usize, n: usize) -> Result<RatioCheck> {
    if !(b >= 1 && a >= b && n >= a) {
        return Err(Error::InvalidParameter(format!("need n >= a >= b >= 1, got a = {a}, b = {b}, n = {n}")));
    }
    let d_size = n + 1;
    let perm = w_b_permutation(b, d_size, b)?;
    let src = embezzling_state(a, n)?;
    let dst = embezzling_state(1, n)?;
    let mut lhs = vec![0.0; d_size * b];
    for j in a..=n {
        lhs[perm[j * b]] += src.weight(j);
    }
    let rhs: Vec<f64> = (0..d_size * b).map(|x| dst.weight(x / b) / b as f64).collect();
    let ratio = diagonal_ratio(&lhs, &rhs);
    let bound = harmonic(1, n) / harmonic(a, n);
    Ok(RatioCheck { ratio, bound, holds: ratio <= bound + 1e-12 })
}

/// W_b^dagger(xi^{1:n} (x) mu_b)W_b against 4 xi^{1:|D|-1} (x) |0><0| with |E| = b.
pub fn check_unembezzle(a: usize, b: usize, n: usize, d_size: usize) -> Result<RatioCheck> {
    if !(b >= 1 && a >= b && n >= a) {
        return Err(Error::InvalidParameter(format!("need n >= a >= b >= 1, got a = {a}, b = {b}, n = {n}")));
    }
    if d_size < (n + 1) * b || d_size > n * n {
        return Err(Error::InvalidParameter(format!("|D| = {d_size} outside [{}, {}]", (n + 1) * b, n * n)));
    }
    let perm = w_b_permutation(b, d_size, b)?;
    let src = embezzling_state(1, n)?;
    let dst = embezzling_state(1, d_size - 1)?;
    let mut inv = vec![0; perm.len()];
    for (x, &y) in perm.iter().enumerate() {
        inv[y] = x;
    }
    let mut lhs = vec![0.0; d_size * b];
    for d in 1..=n {
        for e in 0..b {
            lhs[inv[d * b + e]] += src.weight(d) / b as f64;
        }
    }
    let rhs: Vec<f64> = (0..d_size * b).map(|x| if x % b == 0 { dst.weight(x / b) } else { 0.0 }).collect();
    let ratio = diagonal_ratio(&lhs, &rhs);
    Ok(RatioCheck { ratio, bound: 4.0, holds: ratio <= 4.0 })
}

/// |<xi^{1:n}| <Phi_b| (W_b (x) W_b) |xi^{a:n}>|00>|, summed over the
/// surviving labels j = a..n.
pub fn purified_embezzle_fidelity(a: usize, b: usize, n: usize) -> f64 {
    if b == 0 || a == 0 || a > n {
        return 0.0;
    }
    let scale = 1.0 / (harmonic(a, n) * harmonic(1, n)).sqrt();
    let sum: f64 = (a..=n).rev().filter(|&j| j / b >= 1).map(|j| 1.0 / ((j * (j / b) * b) as f64).sqrt()).sum();
    scale * sum
}

/// Smallest delta with n >= a^{1/delta}.
pub fn embezzle_delta(a: usize, n: usize) -> f64 {
    (a as f64).ln() / (n as f64).ln()
}

/// delta = max(log a / log n, b / a) for the purified claim.
pub fn purified_delta(a: usize, b: usize, n: usize) -> f64 {
    embezzle_delta(a, n).max(b as f64 / a as f64)
}

/// |S(a, n) - log2(n / a)|.
pub fn harmonic_log_gap(a: usize, n: usize) -> f64 {
    (harmonic(a, n) - (n as f64 / a as f64).log2()).abs()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rounding {
    /// omega <= sigma / (1 - gamma)
    Up,
    /// sigma <= omega / (1 - gamma)
    Down,
}

/// Base state sigma_C = sum_c (b(c) / g) |v_c><v_c| with g = |C| / gamma. The
/// columns of `basis` are the v_c.
#[derive(Clone, Debug)]
pub struct FlatSpectrum {
    gamma: f64,
    grid: usize,
    blocks: Vec<usize>,
    basis: CMat,
}

/// g = |C| / gamma, required to be an integer.
pub fn grid_size(dim: usize, gamma: f64) -> Result<usize> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::InvalidParameter(format!("gamma = {gamma} outside (0, 1)")));
    }
    let g = dim as f64 / gamma;
    let r = g.round();
    if (g - r).abs() > GRID_TOL * g {
        return Err(Error::InvalidParameter(format!("|C| / gamma = {g} is not an integer")));
    }
    Ok(r as usize)
}

fn spectral_frame(m: &CMat) -> (Vec<f64>, CMat) {
    let d = m.nrows();
    let off = (0..d)
        .flat_map(|i| (0..d).filter(move |&j| j != i).map(move |j| (i, j)))
        .fold(0.0f64, |acc, (i, j)| acc.max(m[(i, j)].norm()));
    if off < 1e-14 {
        ((0..d).map(|i| m[(i, i)].re.max(0.0)).collect(), identity(d))
    } else {
        let e = eigh(m);
        (e.values.iter().map(|v| v.max(0.0)).collect(), e.vectors)
    }
}

fn integral(y: f64) -> bool {
    (y - y.round()).abs() <= GRID_TOL
}

fn ceil_tol(y: f64) -> usize {
    (y - GRID_TOL).ceil().max(0.0) as usize
}

fn floor_tol(y: f64) -> usize {
    (y + GRID_TOL).floor().max(0.0) as usize
}

/// Integers k_c summing to g with k_c = ceil(x w_c) (up) or floor(x w_c)
/// (down) at the extremal scale x, ties broken toward g in index order.
fn round_counts(w: &[f64], g: usize, dir: Rounding) -> Vec<usize> {
    let mut cand: Vec<f64> = Vec::new();
    for &wc in w.iter().filter(|&&wc| wc > 0.0) {
        for m in 1..=(g + w.len() + 1) {
            cand.push(m as f64 / wc);
        }
    }
    cand.sort_by(|a, b| a.total_cmp(b));
    let tied = |x: f64| -> Vec<usize> { (0..w.len()).filter(|&c| w[c] > 0.0 && integral(x * w[c])).collect() };
    match dir {
        Rounding::Up => {
            let total = |x: f64| w.iter().map(|&wc| ceil_tol(x * wc)).sum::<usize>();
            let x = *cand.iter().rfind(|&&x| total(x) <= g).expect("smallest breakpoint fits");
            let mut k: Vec<usize> = w.iter().map(|&wc| ceil_tol(x * wc)).collect();
            let deficit = g - k.iter().sum::<usize>();
            for c in tied(x).into_iter().take(deficit) {
                k[c] += 1;
            }
            k
        }
        Rounding::Down => {
            let total = |x: f64| w.iter().map(|&wc| floor_tol(x * wc)).sum::<usize>();
            let x = *cand.iter().find(|&&x| total(x) >= g).expect("largest breakpoint reaches g");
            let mut k: Vec<usize> = w.iter().map(|&wc| floor_tol(x * wc)).collect();
            let excess = k.iter().sum::<usize>() - g;
            let lowered: Vec<usize> = tied(x).into_iter().filter(|&c| k[c] > 0).take(excess).collect();
            for c in lowered {
                k[c] -= 1;
            }
            k
        }
    }
}

/// A grid state sigma_C with eigenvalues in (gamma / |C|) Z near `omega`.
pub fn round_spectrum(omega: &DensityOperator, gamma: f64, dir: Rounding) -> Result<FlatSpectrum> {
    let g = grid_size(omega.dim(), gamma)?;
    let (w, basis) = spectral_frame(omega.matrix());
    let blocks = round_counts(&w, g, dir);
    debug_assert_eq!(blocks.iter().sum::<usize>(), g);
    Ok(FlatSpectrum { gamma, grid: g, blocks, basis })
}

/// Reads the block sizes of a state whose spectrum already lies on the grid.
pub fn flat_spectrum_of(sigma: &DensityOperator, gamma: f64) -> Result<FlatSpectrum> {
    let g = grid_size(sigma.dim(), gamma)?;
    let (w, basis) = spectral_frame(sigma.matrix());
    let mut blocks = Vec::with_capacity(w.len());
    for &q in &w {
        let y = q * g as f64;
        if !integral(y) {
            return Err(Error::InvalidParameter(format!("eigenvalue {q} is not a multiple of 1/{g}")));
        }
        blocks.push(y.round() as usize);
    }
    if blocks.iter().sum::<usize>() != g {
        return Err(Error::InvalidState(format!("block sizes sum to {} instead of {g}", blocks.iter().sum::<usize>())));
    }
    Ok(FlatSpectrum { gamma, grid: g, blocks, basis })
}

impl FlatSpectrum {
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// g = |C| / gamma = |supp(sigma_CE)|.
    pub fn grid(&self) -> usize {
        self.grid
    }

    /// b(c) = q(c) g.
    pub fn blocks(&self) -> &[usize] {
        &self.blocks
    }

    pub fn basis(&self) -> &CMat {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.blocks.len()
    }

    /// |E| = max_c b(c).
    pub fn e_size(&self) -> usize {
        self.blocks.iter().copied().max().unwrap_or(0)
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.blocks.iter().map(|&b| b as f64 / self.grid as f64).collect()
    }

    /// Support label offset of each c: s = offset(c) + e for e < b(c).
    pub fn offsets(&self) -> Vec<usize> {
        self.blocks
            .iter()
            .scan(0, |acc, &b| {
                let o = *acc;
                *acc += b;
                Some(o)
            })
            .collect()
    }

    /// sigma_C in the original basis.
    pub fn sigma(&self) -> CMat {
        let v = &self.basis;
        v * diag(&self.probabilities()) * v.adjoint()
    }

    /// lambda_min of the slack of the rounding inequality for `dir`.
    pub fn rounding_slack(&self, omega: &DensityOperator, dir: Rounding) -> f64 {
        let sigma = self.sigma();
        let w = omega.matrix();
        let s = 1.0 - self.gamma;
        match dir {
            Rounding::Up => lambda_min(&(&sigma - scale(w, s))),
            Rounding::Down => lambda_min(&(w - scale(&sigma, s))),
        }
    }

    /// Diagonal of sigma_CE in the eigenbasis frame, index c * |E| + e.
    fn flat_diagonal(&self, e_size: usize) -> Vec<f64> {
        let mut d = vec![0.0; self.dim() * e_size];
        for (cc, &b) in self.blocks.iter().enumerate() {
            for e in 0..b {
                d[cc * e_size + e] = 1.0 / self.grid as f64;
            }
        }
        d
    }
}

/// sigma_CE = sum_c q(c) |v_c><v_c| (x) (1 / b(c)) sum_{e < b(c)} |e><e| over C E.
pub fn flatten(spec: &FlatSpectrum) -> Result<DensityOperator> {
    let e_size = spec.e_size();
    let diag_ce = diag(&spec.flat_diagonal(e_size));
    let u = kron(spec.basis(), &identity(e_size));
    let m = &u * diag_ce * u.adjoint();
    let system = RegisterSystem::new(&[("C", spec.dim()), ("E", e_size)])?;
    Ok(DensityOperator::from_parts_unchecked(system, m))
}

/// Flattens a grid state given directly.
pub fn flatten_state(sigma: &DensityOperator, gamma: f64) -> Result<DensityOperator> {
    flatten(&flat_spectrum_of(sigma, gamma)?)
}

fn check_register(spec: &FlatSpectrum, a: usize, n: usize) -> Result<()> {
    if a != spec.e_size() {
        return Err(Error::InvalidParameter(format!("a = {a} differs from |E| = {}", spec.e_size())));
    }
    if a == 0 || n < a {
        return Err(Error::InvalidParameter(format!("need n >= a >= 1, got a = {a}, n = {n}")));
    }
    Ok(())
}

/// W = sum_c |c><c| (x) W_{b(c)} on C E D with |E| = a and |D| = n + 1.
pub fn unitary_flatten_w(spec: &FlatSpectrum, a: usize, n: usize) -> Result<Vec<usize>> {
    check_register(spec, a, n)?;
    let d_size = n + 1;
    let block = a * d_size;
    let mut perm = vec![0; spec.dim() * block];
    for (cc, &b) in spec.blocks().iter().enumerate() {
        let w = w_b_permutation(b, d_size, a)?;
        for d in 0..d_size {
            for e in 0..a {
                let img = w[d * a + e];
                perm[cc * block + e * d_size + d] = cc * block + (img % a) * d_size + img / a;
            }
        }
    }
    Ok(perm)
}

/// W(sigma_C (x) |0><0|_E (x) xi^{a:n})W^dagger against sigma_CE (x) xi^{1:n} by
/// diagonal quotient in the eigenbasis frame.
pub fn check_flatten_upper(spec: &FlatSpectrum, a: usize, n: usize) -> Result<RatioCheck> {
    let perm = unitary_flatten_w(spec, a, n)?;
    let d_size = n + 1;
    let src = embezzling_state(a, n)?;
    let dst = embezzling_state(1, n)?;
    let q = spec.probabilities();
    let flat = spec.flat_diagonal(a);
    let mut lhs = vec![0.0; perm.len()];
    for (cc, qc) in q.iter().enumerate() {
        for j in a..=n {
            lhs[perm[cc * a * d_size + j]] += qc * src.weight(j);
        }
    }
    let rhs: Vec<f64> = (0..perm.len()).map(|x| flat[x / d_size] * dst.weight(x % d_size)).collect();
    let ratio = diagonal_ratio(&lhs, &rhs);
    let bound = harmonic(1, n) / harmonic(a, n);
    Ok(RatioCheck { ratio, bound, holds: ratio <= bound + 1e-12 })
}

/// Flattening parameters: grid gamma, |E| = a and xi^{a:n} on |D| = n + 1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlatParams {
    pub gamma: f64,
    pub a: usize,
    pub n: usize,
}

/// rho = W(Psi_RC (x) |0><0|_E (x) xi^{a:n})W^dagger restricted to R (x) supp(sigma_CE) (x) D.
struct FlatInput {
    spec: FlatSpectrum,
    k: f64,
    r: usize,
    d_size: usize,
    psi_r: CMat,
    entries: FlatEntries,
}

fn prepare_flat(psi: &DensityOperator, c_label: &str, omega: &DensityOperator, p: &FlatParams) -> Result<FlatInput> {
    let (m, r, d) = split_rc(psi, c_label)?;
    if omega.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, got: omega.dim() });
    }
    let psi_r = partial_trace_matrix(&m, &[r, d], &[0]);
    let k = dmax_matrices(&m, &kron(&psi_r, omega.matrix())).expect_finite("dmax(Psi_RC, Psi_R x omega_C)")?;
    let spec = round_spectrum(omega, p.gamma, Rounding::Up)?;
    check_register(&spec, p.a, p.n)?;
    let u = kron(&identity(r), spec.basis());
    let rot = u.adjoint() * &m * &u;
    let entries = flat_entries(&rot, r, &spec, &embezzling_state(p.a, p.n)?);
    Ok(FlatInput { spec, k, r, d_size: p.n + 1, psi_r, entries })
}

/// Entries of W(Psi_RC (x) |0><0|_E (x) xi)W^dagger as (s, d, r) x (s', d', r'), with
/// `rot` the R C matrix in the eigenbasis frame of `spec`.
pub(crate) fn flat_entries(rot: &CMat, r: usize, spec: &FlatSpectrum, xi: &EmbezzleState) -> FlatEntries {
    let d = spec.dim();
    let offs = spec.offsets();
    let b = spec.blocks();
    let mut entries = Vec::new();
    for j in xi.a()..=xi.n() {
        let w = xi.weight(j);
        for c0 in (0..d).filter(|&c| b[c] > 0) {
            let (s0, d0) = (offs[c0] + j % b[c0], j / b[c0]);
            for c1 in (0..d).filter(|&c| b[c] > 0) {
                let (s1, d1) = (offs[c1] + j % b[c1], j / b[c1]);
                for x in 0..r {
                    for y in 0..r {
                        let v = rot[(x * d + c0, y * d + c1)];
                        if v.norm() > 1e-300 {
                            entries.push(((s0, d0, x), (s1, d1, y), v * w));
                        }
                    }
                }
            }
        }
    }
    entries
}

pub(crate) type FlatEntries = Vec<((usize, usize, usize), (usize, usize, usize), C64)>;

/// rho (x) |0><0|_Q (x) sigma_{C1 E1} (x) mu_{F2} on the prime register F over the
/// index ((i * |F| + f2) * |D| + d) * |R| + r with i = reg.index(0, s0, s1).
pub(crate) fn flat_classical_input(
    entries: &FlatEntries,
    reg: &PrimeRegister,
    g: usize,
    ds: usize,
    r: usize,
) -> SparseOp {
    let f = reg.prime();
    let dim = f * f * ds * r;
    let scale_in = 1.0 / (g * f) as f64;
    let mut out = Vec::with_capacity(entries.len() * g * f);
    for &((s0, d0, x), (t0, e0, y), v) in entries {
        for s1 in 0..g {
            let i = reg.index(0, s0, s1).expect("q = 0 labels fit");
            let ip = reg.index(0, t0, s1).expect("q = 0 labels fit");
            for f2 in 0..f {
                out.push(((((i * f + f2) * ds + d0) * r + x), (((ip * f + f2) * ds + e0) * r + y), v * scale_in));
            }
        }
    }
    SparseOp::from_triplets(dim, out)
}

fn flat_bound(k: f64, params: &FlatParams, n_members: usize) -> f64 {
    let ratio = harmonic(1, params.n) / harmonic(params.a, params.n);
    ratio.log2() + (1.0 + (2f64.powf(k + 2.0) - 1.0) / n_members as f64).log2()
}

/// 1-design split of the flattened state: tau = (1/N) sum_j V^{(j)} rho V^{(j)dagger}
/// averaged over X1 X2 in GF(g^2), checked against Psi_R (x) sigma_CE (x) xi^{1:n} (x) mu_{X1 X2}.
pub fn convex_split_flat_1design(
    psi: &DensityOperator,
    c_label: &str,
    omega: &DensityOperator,
    params: &FlatParams,
    n_members: usize,
    seed: u64,
) -> Result<ConvexSplitReport> {
    let fi = prepare_flat(psi, c_label, omega, params)?;
    let g = fi.spec.grid();
    let q = (g * g) as u64;
    let family = pairwise_family(q)?;
    if n_members == 0 || n_members as u64 > q {
        return Err(Error::InvalidParameter(format!("N = {n_members} outside 1..={q}")));
    }
    let (r, ds) = (fi.r, fi.d_size);
    let inner = ds * r;
    let dim = g * inner;
    let rho = SparseOp::from_triplets(
        dim,
        fi.entries.iter().map(|&((s, d, x), (t, e, y), v)| ((s * ds + d) * r + x, (t * ds + e) * r + y, v)).collect(),
    );
    let xi = embezzling_state(1, params.n)?;
    let weights: Vec<f64> = (0..g * ds).map(|x| xi.weight(x % ds) / g as f64).collect();
    let members = select_members(&family, n_members, seed);
    let per_label: Vec<(f64, f64)> = (0..q * q)
        .into_par_iter()
        .map(|x| {
            let (x1, x2) = (x / q, x % q);
            let rotated: Vec<SparseOp> = members
                .iter()
                .map(|&j| {
                    let v = family.eval(j, x1, x2) as usize;
                    let (sa, sb) = (v / g, v % g);
                    let images: Vec<usize> = (0..g).map(|s| (s + sa) % g).collect();
                    let phases: Vec<C64> = (0..dim)
                        .map(|idx| {
                            let t = 2.0 * std::f64::consts::PI * (((idx / inner) * sb) % g) as f64 / g as f64;
                            c(t.cos(), t.sin())
                        })
                        .collect();
                    rho.conjugate_monomial(&lift_permutation(&images, inner), Some(&phases))
                })
                .collect();
            let tau = SparseOp::sum(dim, &rotated).scaled(1.0 / n_members as f64);
            block_divergence(&tau, &fi.psi_r, &weights)
        })
        .collect();
    let count = per_label.len() as f64;
    let achieved = per_label.iter().map(|p| p.0).sum::<f64>() / count;
    let fid = per_label.iter().map(|p| p.1).sum::<f64>() / count;
    Ok(ConvexSplitReport::new(fi.k, n_members, flat_bound(fi.k, params, n_members), achieved, fid.min(1.0)))
}

/// Classical split of the flattened state and the marginal ratio check.
#[derive(Clone, Debug, PartialEq)]
pub struct FlatClassicalReport {
    pub split: ConvexSplitReport,
    pub prime: usize,
    /// max over m != 0 of the exact ratio in Tr_{F2}(tau_m) <= r Psi_R (x) mu_{F1} (x) xi^{1:n}.
    pub marginal_ratio: f64,
    /// S(1, n) / S(a, n).
    pub ratio_bound: f64,
}

impl FlatClassicalReport {
    pub fn holds(&self, tol: f64) -> bool {
        self.split.holds(tol) && self.marginal_ratio <= self.ratio_bound + tol
    }
}

/// tau = (1/N) sum_{l in S} U_l(rho_{R C0 E0 D} (x) |0><0|_Q (x) sigma_{C1 E1} (x) mu_{F2})U_l^dagger
/// over the prime register F, checked against Psi_R (x) mu_{F1} (x) xi^{1:n} (x) mu_{F2}.
pub fn convex_split_flat_classical(
    psi: &DensityOperator,
    c_label: &str,
    omega: &DensityOperator,
    params: &FlatParams,
    s: &[usize],
) -> Result<FlatClassicalReport> {
    if s.is_empty() {
        return Err(Error::InvalidParameter("empty selection set".into()));
    }
    let fi = prepare_flat(psi, c_label, omega, params)?;
    let g = fi.spec.grid();
    let reg = PrimeRegister::with_prime(g, next_prime_in((g * g) as u64) as usize)?;
    let f = reg.prime();
    let mut sorted = s.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != s.len() || sorted.last().is_some_and(|&l| l >= f) {
        return Err(Error::InvalidParameter(format!("selection must be distinct labels below {f}")));
    }
    let (r, ds) = (fi.r, fi.d_size);
    let inner = ds * r;
    let dim = f * f * inner;
    let input = flat_classical_input(&fi.entries, &reg, g, ds, r);
    let rotated: Vec<SparseOp> = s
        .iter()
        .map(|&l| Ok(input.conjugate_monomial(&lift_permutation(&u_ell(l, f)?, inner), None)))
        .collect::<Result<_>>()?;
    let tau = SparseOp::sum(dim, &rotated).scaled(1.0 / s.len() as f64);
    let xi = embezzling_state(1, params.n)?;
    let weights: Vec<f64> = (0..f * f * ds).map(|x| xi.weight(x % ds) / (f * f) as f64).collect();
    let (achieved, fid) = block_divergence(&tau, &fi.psi_r, &weights);
    let split = ConvexSplitReport::new(fi.k, s.len(), flat_bound(fi.k, params, s.len()), achieved, fid.min(1.0));
    let marginal_ratio = (1..f)
        .into_par_iter()
        .map(|m| marginal_ratio(&input, m, (f, ds, r), &fi.psi_r, &xi))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    Ok(FlatClassicalReport {
        split,
        prime: f,
        marginal_ratio,
        ratio_bound: harmonic(1, params.n) / harmonic(params.a, params.n),
    })
}

/// Exact ratio c with Tr_{F2}(U_m input U_m^dagger) <= c Psi_R (x) mu_{F1} (x) xi^{1:n},
/// evaluated blockwise over the index (f1 * |D| + d) * |R| + r.
pub(crate) fn marginal_ratio(
    input: &SparseOp,
    m: usize,
    shape: (usize, usize, usize),
    psi_r: &CMat,
    xi: &EmbezzleState,
) -> Result<f64> {
    let (f, ds, r) = shape;
    let inner = ds * r;
    let rotated = input.conjugate_monomial(&lift_permutation(&u_ell(m, f)?, inner), None);
    let entries = rotated
        .entries()
        .iter()
        .filter(|&&(a, b, _)| (a / inner) % f == (b / inner) % f)
        .map(|&(a, b, v)| ((a / inner / f) * inner + a % inner, (b / inner / f) * inner + b % inner, v))
        .collect();
    let marginal = SparseOp::from_triplets(f * inner, entries);
    let partition = Partition::from_ops(marginal.dim(), r, &[&marginal]);
    let (blocks, _) = partition.blocks(&marginal);
    let weights: Vec<f64> = (0..f * ds).map(|x| xi.weight(x % ds) / f as f64).collect();
    let mut worst = 0.0f64;
    for (b, block) in blocks.iter().enumerate() {
        let target = partition.fiber_block(b, psi_r, &weights);
        worst = worst.max(dmax_matrices(block, &target).expect_finite("marginal ratio")?);
    }
    Ok(2f64.powf(worst))
}

/// Operator-inequality slack lambda_min(c B - A).
pub fn operator_slack(a: &CMat, b: &CMat, c: f64) -> f64 {
    lambda_min(&(scale(b, c) - a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs_diff, PureState};

    #[test]
    fn embezzling_examples() {
        let x = embezzling_state(1, 2).unwrap();
        assert!((x.normalization() - 1.5).abs() < 1e-15);
        assert!((x.weight(1) - 2.0 / 3.0).abs() < 1e-15 && (x.weight(2) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(embezzling_state(1, 1).unwrap().weights(2), vec![0.0, 1.0]);
        let x = embezzling_state(2, 4).unwrap();
        assert!((x.normalization() - 13.0 / 12.0).abs() < 1e-15);
        for (j, w) in [(2, 6.0 / 13.0), (3, 4.0 / 13.0), (4, 3.0 / 13.0)] {
            assert!((x.weight(j) - w).abs() < 1e-15);
        }
        assert!(embezzling_state(3, 2).is_err());
        let rho = x.density("D", 5).unwrap();
        assert!((rho.trace() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn w_b_examples() {
        let id = w_b_permutation(1, 6, 2).unwrap();
        for j in 0..6 {
            assert_eq!(id[j * 2], j * 2);
        }
        let w2 = w_b_permutation(2, 8, 2).unwrap();
        assert_eq!(w2[5 * 2], 2 * 2 + 1);
        let w3 = w_b_permutation(3, 12, 3).unwrap();
        let mut seen = [false; 36];
        for &y in &w3 {
            assert!(!seen[y]);
            seen[y] = true;
        }
        for j in 0..12 {
            assert_eq!(w3[j * 3], (j / 3) * 3 + j % 3);
        }
        assert!(w_b_permutation(3, 4, 2).is_err());
    }

    #[test]
    fn ratio_examples() {
        let chk = check_embezzle_upper(4, 2, 64).unwrap();
        assert!(chk.holds);
        for n in [8, 16, 64] {
            let chk = check_embezzle_upper(3, 1, n).unwrap();
            assert!((chk.ratio - chk.bound).abs() < 1e-12);
        }
        assert!(check_unembezzle(2, 2, 16, 34).unwrap().holds);
        assert!(check_unembezzle(2, 2, 8, 64).unwrap().holds);
        assert!(check_unembezzle(2, 2, 8, 17).is_err());
        assert!((check_unembezzle(1, 1, 16, 17).unwrap().ratio - 1.0).abs() < 1e-12);
    }

    #[test]
    fn purified_matches_vectors() {
        for (a, b, n) in [(2, 1, 6), (3, 2, 9), (4, 4, 11), (5, 2, 12)] {
            let ds = n + 1;
            let src = embezzling_state(a, n).unwrap();
            let dst = embezzling_state(1, n).unwrap();
            let w = w_b_permutation(b, ds, b).unwrap();
            // D' D E' E with index ((d' * ds + d) * b + e') * b + e
            let mut lhs = vec![0.0; ds * ds * b * b];
            for j in a..=n {
                let img = w[j * b];
                let (d, e) = (img / b, img % b);
                lhs[((d * ds + d) * b + e) * b + e] += src.weight(j).sqrt();
            }
            let mut overlap = 0.0;
            for d in 1..=n {
                for e in 0..b {
                    overlap += lhs[((d * ds + d) * b + e) * b + e] * (dst.weight(d) / b as f64).sqrt();
                }
            }
            assert!((overlap - purified_embezzle_fidelity(a, b, n)).abs() < 1e-12);
        }
        let f = purified_embezzle_fidelity(3, 1, 40);
        assert!((f - (harmonic(3, 40) / harmonic(1, 40)).sqrt()).abs() < 1e-12);
        let f = purified_embezzle_fidelity(32, 2, 4096);
        assert!((f - 0.740956213333865).abs() < 1e-9);
        assert!(f >= (harmonic(32, 4096) / harmonic(1, 4096)).sqrt());
    }

    #[test]
    fn rounding_examples() {
        let omega = DensityOperator::from_diagonal(RegisterSystem::single("C", 2).unwrap(), &[0.7, 0.3]).unwrap();
        let up = round_spectrum(&omega, 0.5, Rounding::Up).unwrap();
        assert_eq!(up.blocks(), &[3, 1]);
        assert!(up.rounding_slack(&omega, Rounding::Up) >= -1e-10);
        let down = round_spectrum(&omega, 0.5, Rounding::Down).unwrap();
        assert_eq!(down.blocks().iter().sum::<usize>(), 4);
        assert!(down.rounding_slack(&omega, Rounding::Down) >= -1e-10);
        let mu = DensityOperator::maximally_mixed(RegisterSystem::single("C", 2).unwrap());
        for gamma in [0.5, 0.25, 0.125] {
            let s = round_spectrum(&mu, gamma, Rounding::Up).unwrap();
            assert!(max_abs_diff(&s.sigma(), mu.matrix()) < 1e-14);
        }
        assert!(round_spectrum(&omega, 0.3, Rounding::Up).is_err());
    }

    #[test]
    fn flatten_examples() {
        let mu = DensityOperator::maximally_mixed(RegisterSystem::single("C", 2).unwrap());
        let s = flatten_state(&mu, 0.5).unwrap();
        assert_eq!(s.dim(), 4);
        assert!(max_abs_diff(s.matrix(), &scale(&identity(4), 0.25)) < 1e-15);
        let sigma = DensityOperator::from_diagonal(RegisterSystem::single("C", 2).unwrap(), &[0.75, 0.25]).unwrap();
        let spec = flat_spectrum_of(&sigma, 0.25).unwrap();
        assert_eq!(spec.blocks(), &[6, 2]);
        let ce = flatten(&spec).unwrap();
        let eig = ce.eigenvalues();
        assert_eq!(eig.iter().filter(|&&x| (x - 0.125).abs() < 1e-14).count(), 8);
        assert!(max_abs_diff(ce.marginal(&["C"]).unwrap().matrix(), sigma.matrix()) < 1e-15);
        let off = DensityOperator::from_diagonal(RegisterSystem::single("C", 2).unwrap(), &[0.7, 0.3]).unwrap();
        assert!(flat_spectrum_of(&off, 0.5).is_err());
    }

    #[test]
    fn flatten_permutation_blocks() {
        let sigma = DensityOperator::from_diagonal(RegisterSystem::single("C", 2).unwrap(), &[0.75, 0.25]).unwrap();
        let spec = flat_spectrum_of(&sigma, 0.25).unwrap();
        let (a, n) = (6, 12);
        let w = unitary_flatten_w(&spec, a, n).unwrap();
        let ds = n + 1;
        for (cc, b) in [(0usize, 6usize), (1, 2)] {
            for j in 0..ds {
                let img = w[(cc * a) * ds + j];
                assert_eq!(img, (cc * a + j % b) * ds + j / b);
            }
        }
        assert!(check_flatten_upper(&spec, a, n).unwrap().holds);
        assert!(unitary_flatten_w(&spec, 4, n).is_err());
    }

    #[test]
    fn flat_splits_small() {
        let phi = PureState::maximally_entangled("R", "C", 2).unwrap().density();
        let mu = DensityOperator::maximally_mixed(RegisterSystem::single("C", 2).unwrap());
        let params = FlatParams { gamma: 0.5, a: 2, n: 4 };
        let rep = convex_split_flat_1design(&phi, "C", &mu, &params, 16, 3).unwrap();
        assert!(rep.holds(1e-7), "{rep:?}");
        let cl = convex_split_flat_classical(&phi, "C", &mu, &params, &[0, 1, 2]).unwrap();
        assert_eq!(cl.prime, 17);
        assert!(cl.holds(1e-7), "{cl:?}");
    }
}
