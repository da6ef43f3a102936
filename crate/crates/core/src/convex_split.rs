//! Convex splits built from Heisenberg-Weyl unitaries selected by a pairwise
//! independent family, and from classical affine permutations over a prime
//! register.
//!
//! Mixtures of permuted copies are block diagonal in the classical labels:
//! the 1-design split is classical on X1 X2 and evaluated label by label,
//! while the classical split is evaluated on the connected components of
//! its support (see [`crate::linalg::sparse::Partition`]).

use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

use crate::entropy::{dmax_matrices, relative_entropy_matrices};
use crate::error::{Error, Result};
use crate::field::{is_prime, next_prime_in, PairwiseFamily};
use crate::linalg::sparse::{Partition, SparseOp};
use crate::linalg::{
    c, fidelity_matrices, frobenius_distance, identity, kron, lift_operator, partial_trace_matrix, permute_registers,
    re, scale, CMat, DensityOperator, C64,
};

/// V_{a,b} = sum_c e^{2 pi i c b / d} |c + a><c|.
#[derive(Clone, Debug)]
pub struct HwUnitary {
    pub a: usize,
    pub b: usize,
    pub d: usize,
    pub matrix: CMat,
}

impl HwUnitary {
    /// Images c -> c + a and phases of the monomial form.
    pub fn monomial(&self) -> (Vec<usize>, Vec<C64>) {
        monomial(self.a, self.b, self.d)
    }
}

fn monomial(a: usize, b: usize, d: usize) -> (Vec<usize>, Vec<C64>) {
    let images = (0..d).map(|x| (x + a) % d).collect();
    let phases = (0..d)
        .map(|x| {
            let t = 2.0 * PI * ((x * b) % d) as f64 / d as f64;
            c(t.cos(), t.sin())
        })
        .collect();
    (images, phases)
}

pub fn hw_unitary(a: usize, b: usize, d: usize) -> Result<HwUnitary> {
    if d == 0 || a >= d || b >= d {
        return Err(Error::InvalidParameter(format!("HW indices ({a},{b}) out of range for d = {d}")));
    }
    let (images, phases) = monomial(a, b, d);
    let mut matrix = CMat::zeros(d, d);
    for x in 0..d {
        matrix[(images[x], x)] = phases[x];
    }
    Ok(HwUnitary { a, b, d, matrix })
}

/// State reordered so that `c_label` is the last register. Returns the
/// matrix over R C (R the remaining registers, possibly trivial) with |R|
/// and |C|.
pub(crate) fn split_rc(psi: &DensityOperator, c_label: &str) -> Result<(CMat, usize, usize)> {
    let d = psi.system().dim_of(c_label)?;
    let mut order: Vec<&str> = psi.system().labels().into_iter().filter(|l| *l != c_label).collect();
    order.push(c_label);
    let m = permute_registers(psi, &order)?.into_matrix();
    Ok((m, psi.dim() / d, d))
}

/// (1/d^2) sum_{a,b} V_{a,b} rho V_{a,b}^dagger with V acting on `c_label`.
pub fn one_design_average(rho: &DensityOperator, c_label: &str, d: usize) -> Result<DensityOperator> {
    let got = rho.system().dim_of(c_label)?;
    if got != d {
        return Err(Error::DimensionMismatch { expected: d, got });
    }
    let dims = rho.system().dims();
    let pos = rho.system().position(c_label)?;
    let mut acc = CMat::zeros(rho.dim(), rho.dim());
    for a in 0..d {
        for b in 0..d {
            let v = lift_operator(&hw_unitary(a, b, d)?.matrix, &dims, &[pos]);
            acc += &v * rho.matrix() * v.adjoint();
        }
    }
    Ok(DensityOperator::from_parts_unchecked(rho.system().clone(), scale(&acc, 1.0 / (d * d) as f64)))
}

/// Frobenius distance between the 1-design average and rho_R (x) mu_C.
pub fn one_design_residual(rho: &DensityOperator, c_label: &str) -> Result<f64> {
    let d = rho.system().dim_of(c_label)?;
    let avg = one_design_average(rho, c_label, d)?;
    let (m, _, _) = split_rc(&avg, c_label)?;
    let (orig, r, _) = split_rc(rho, c_label)?;
    let rho_r = partial_trace_matrix(&orig, &[r, d], &[0]);
    let target = kron(&rho_r, &scale(&identity(d), 1.0 / d as f64));
    Ok(frobenius_distance(&m, &target))
}

/// Prime register G embedded in Q C C with |Q| = 2.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PrimeRegister {
    base: usize,
    prime: usize,
}

impl PrimeRegister {
    /// Smallest prime |G| >= |C|^2.
    pub fn new(base: usize) -> Result<Self> {
        if base < 2 {
            return Err(Error::InvalidParameter(format!("base dimension {base} < 2")));
        }
        Self::with_prime(base, next_prime_in((base * base) as u64) as usize)
    }

    pub fn with_prime(base: usize, prime: usize) -> Result<Self> {
        if base < 2 || !is_prime(prime as u64) {
            return Err(Error::InvalidParameter(format!("|G| = {prime} is not prime")));
        }
        if prime < base * base || prime > 2 * base * base {
            return Err(Error::InvalidParameter(format!(
                "|G| = {prime} outside [{}, {}]",
                base * base,
                2 * base * base
            )));
        }
        Ok(Self { base, prime })
    }

    pub fn base(&self) -> usize {
        self.base
    }

    pub fn prime(&self) -> usize {
        self.prime
    }

    /// Label of |q>|c>|c'>, or None for the unused q = 1 tail.
    pub fn index(&self, q: usize, c: usize, cp: usize) -> Option<usize> {
        assert!(q < 2 && c < self.base && cp < self.base);
        let i = q * self.base * self.base + c * self.base + cp;
        (i < self.prime).then_some(i)
    }

    pub fn decode(&self, i: usize) -> (usize, usize, usize) {
        assert!(i < self.prime);
        let n = self.base * self.base;
        (i / n, (i % n) / self.base, i % self.base)
    }
}

/// U_ell as a permutation of pair labels i * g + j.
pub fn u_ell(ell: usize, g: usize) -> Result<Vec<usize>> {
    if ell >= g {
        return Err(Error::InvalidParameter(format!("ell = {ell} >= |G| = {g}")));
    }
    Ok((0..g * g)
        .map(|x| {
            let (i, j) = (x / g, x % g);
            let shift = (j + g - i) % g * ell % g;
            ((i + shift) % g) * g + (j + shift) % g
        })
        .collect())
}

/// (a . b)(x) = a(b(x)).
pub fn compose(a: &[usize], b: &[usize]) -> Vec<usize> {
    b.iter().map(|&x| a[x]).collect()
}

pub fn invert(p: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; p.len()];
    for (x, &y) in p.iter().enumerate() {
        inv[y] = x;
    }
    inv
}

/// Psi_{R C0} (x) |0><0|_Q (x) mu_{C1} (x) mu_{G2} over the index
/// (i * |G| + j) * |R| + r.
pub(crate) fn embedded_input(m: &CMat, r: usize, d: usize, reg: &PrimeRegister) -> SparseOp {
    let g = reg.prime();
    let w = 1.0 / (d * g) as f64;
    let mut entries = Vec::with_capacity(d * d * d * g * r * r);
    for c0 in 0..d {
        for c0p in 0..d {
            for c1 in 0..d {
                let i = reg.index(0, c0, c1).expect("q = 0 labels fit");
                let ip = reg.index(0, c0p, c1).expect("q = 0 labels fit");
                for j in 0..g {
                    for x in 0..r {
                        for y in 0..r {
                            let v = m[(x * d + c0, y * d + c0p)];
                            if v != re(0.0) {
                                entries.push(((i * g + j) * r + x, (ip * g + j) * r + y, v * w));
                            }
                        }
                    }
                }
            }
        }
    }
    SparseOp::from_triplets(g * g * r, entries)
}

/// Extends a permutation of labels to indices label * inner + rest.
pub(crate) fn lift_permutation(perm: &[usize], inner: usize) -> Vec<usize> {
    (0..perm.len() * inner).map(|x| perm[x / inner] * inner + x % inner).collect()
}

/// D(tau || sigma) and F(tau, sigma) for sigma = sum_g weights[g] |g><g| (x) inner,
/// evaluated on the connected components of tau's support.
pub(crate) fn block_divergence(tau: &SparseOp, inner: &CMat, weights: &[f64]) -> (f64, f64) {
    let partition = Partition::from_ops(tau.dim(), inner.nrows(), &[tau]);
    let (blocks, crossing) = partition.blocks(tau);
    debug_assert_eq!(crossing, 0.0);
    blocks
        .iter()
        .enumerate()
        .map(|(b, tau_b)| {
            let sigma_b = partition.fiber_block(b, inner, weights);
            (relative_entropy_matrices(tau_b, &sigma_b).as_f64(), fidelity_matrices(tau_b, &sigma_b))
        })
        .fold((0.0, 0.0), |acc, x| (acc.0 + x.0, acc.1 + x.1))
}

/// Frobenius residual of Tr_{G2} U_m(Psi (x) |0><0| (x) mu_{C1} (x) mu_{G2})U_m^dagger
/// against Psi_R (x) mu_{G1}.
pub fn classical_marginal_check(psi: &DensityOperator, c_label: &str, reg: &PrimeRegister, m: usize) -> Result<f64> {
    let g = reg.prime();
    if m == 0 || m >= g {
        return Err(Error::InvalidParameter(format!("m = {m} outside 1..{g}")));
    }
    let (mat, r, d) = split_rc(psi, c_label)?;
    if d != reg.base() {
        return Err(Error::DimensionMismatch { expected: reg.base(), got: d });
    }
    let input = embedded_input(&mat, r, d, reg);
    let images = lift_permutation(&u_ell(m, g)?, r);
    let rotated = input.conjugate_monomial(&images, None);
    // trace out G2: keep entries whose G2 labels agree, index G1 * |R| + r
    let mut marginal = CMat::zeros(g * r, g * r);
    for &(a, b, v) in rotated.entries() {
        let (pa, pb) = (a / r, b / r);
        if pa % g == pb % g {
            marginal[((pa / g) * r + a % r, (pb / g) * r + b % r)] += v;
        }
    }
    let psi_r = partial_trace_matrix(&mat, &[r, d], &[0]);
    let target = kron(&scale(&identity(g), 1.0 / g as f64), &psi_r);
    Ok(frobenius_distance(&marginal, &target))
}

/// Outcome of a convex-split evaluation. Entropies in bits.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvexSplitReport {
    pub k: f64,
    pub n: usize,
    pub analytic_bound: f64,
    pub achieved_rel_entropy: f64,
    pub achieved_fidelity: f64,
    /// Lower bound on the squared fidelity, 2^{-analytic_bound}.
    pub fidelity_sq_bound: f64,
}

impl ConvexSplitReport {
    pub(crate) fn new(
        k: f64,
        n: usize,
        analytic_bound: f64,
        achieved_rel_entropy: f64,
        achieved_fidelity: f64,
    ) -> Self {
        Self {
            k,
            n,
            analytic_bound,
            achieved_rel_entropy,
            achieved_fidelity,
            fidelity_sq_bound: 2f64.powf(-analytic_bound),
        }
    }

    pub fn entropy_slack(&self) -> f64 {
        self.analytic_bound - self.achieved_rel_entropy
    }

    pub fn fidelity_slack(&self) -> f64 {
        self.achieved_fidelity * self.achieved_fidelity - self.fidelity_sq_bound
    }

    pub fn holds(&self, tol: f64) -> bool {
        self.entropy_slack() >= -tol && self.fidelity_slack() >= -tol
    }
}

/// k = dmax(Psi_RC, Psi_R (x) mu_C) for a matrix in R C order.
pub(crate) fn decoupling_k(m: &CMat, r: usize, d: usize) -> Result<f64> {
    let psi_r = partial_trace_matrix(m, &[r, d], &[0]);
    let target = kron(&psi_r, &scale(&identity(d), 1.0 / d as f64));
    dmax_matrices(m, &target).expect_finite("dmax(Psi_RC, Psi_R x mu_C)")
}

/// Members of the family used for a split of size n: the additive prefix
/// {0, ..., n-1} under a seeded affine map j -> alpha j + beta. Prefixes
/// for a fixed seed are nested.
pub fn select_members(family: &PairwiseFamily, n: usize, seed: u64) -> Vec<u64> {
    let f = family.field();
    let q = family.size();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let nonzero: Vec<u64> = (1..q).collect();
    let alpha = *nonzero.choose(&mut rng).expect("q >= 2");
    let beta = *(0..q).collect::<Vec<_>>().choose(&mut rng).expect("q >= 1");
    (0..n as u64).map(|s| f.add(f.mul(alpha, s), beta)).collect()
}

/// tau = (1/N) sum_j V^{(j)}(Psi_RC (x) mu_{X1 X2})V^{(j)dagger} over N members
/// of `family`, checked against Psi_R (x) mu_C (x) mu_{X1 X2}.
pub fn convex_split_1design(
    psi: &DensityOperator,
    c_label: &str,
    n: usize,
    family: &PairwiseFamily,
    seed: u64,
) -> Result<ConvexSplitReport> {
    let (m, r, d) = split_rc(psi, c_label)?;
    if !d.is_power_of_two() || d < 2 {
        return Err(Error::InvalidParameter(format!("|C| = {d} is not a power of 2")));
    }
    let q = family.size();
    if q != (d * d) as u64 {
        return Err(Error::DimensionMismatch { expected: d * d, got: q as usize });
    }
    if n == 0 || n as u64 > q {
        return Err(Error::InvalidParameter(format!("N = {n} outside 1..={q}")));
    }
    let k = decoupling_k(&m, r, d)?;
    let members = select_members(family, n, seed);
    let psi_r = partial_trace_matrix(&m, &[r, d], &[0]);
    let sigma = kron(&psi_r, &scale(&identity(d), 1.0 / d as f64));
    let dim = r * d;
    let per_label: Vec<(f64, f64)> = (0..q * q)
        .into_par_iter()
        .map(|x| {
            let (x1, x2) = (x / q, x % q);
            let mut tau = CMat::zeros(dim, dim);
            for &j in &members {
                let v = family.eval(j, x1, x2) as usize;
                let (images, phases) = monomial(v / d, v % d, d);
                for col in 0..dim {
                    let (yc, cc) = (col / d, col % d);
                    let pc = phases[cc].conj();
                    let tc = yc * d + images[cc];
                    for row in 0..dim {
                        let (yr, cr) = (row / d, row % d);
                        tau[(yr * d + images[cr], tc)] += phases[cr] * m[(row, col)] * pc;
                    }
                }
            }
            let tau = scale(&tau, 1.0 / n as f64);
            let rel = relative_entropy_matrices(&tau, &sigma).as_f64();
            (rel, fidelity_matrices(&tau, &sigma))
        })
        .collect();
    let count = per_label.len() as f64;
    let achieved = per_label.iter().map(|p| p.0).sum::<f64>() / count;
    let fid = per_label.iter().map(|p| p.1).sum::<f64>() / count;
    let bound = (1.0 + (2f64.powf(k) - 1.0) / n as f64).log2();
    Ok(ConvexSplitReport::new(k, n, bound, achieved, fid.min(1.0)))
}

/// tau_{R G1 G2} = (1/N) sum_{l in S} U_l(Psi_{R C0} (x) |0><0|_Q (x) mu_{C1} (x) mu_{G2})U_l^dagger,
/// checked against Psi_R (x) mu_{G1} (x) mu_{G2}.
pub fn convex_split_classical(
    psi: &DensityOperator,
    c_label: &str,
    reg: &PrimeRegister,
    s: &[usize],
) -> Result<ConvexSplitReport> {
    if s.is_empty() {
        return Err(Error::InvalidParameter("empty selection set".into()));
    }
    let g = reg.prime();
    let mut sorted = s.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != s.len() || sorted.last().is_some_and(|&l| l >= g) {
        return Err(Error::InvalidParameter(format!("selection must be distinct labels below {g}")));
    }
    let (m, r, d) = split_rc(psi, c_label)?;
    if d != reg.base() {
        return Err(Error::DimensionMismatch { expected: reg.base(), got: d });
    }
    let k = decoupling_k(&m, r, d)?;
    let input = embedded_input(&m, r, d, reg);
    let rotated: Vec<SparseOp> = s
        .iter()
        .map(|&l| Ok(input.conjugate_monomial(&lift_permutation(&u_ell(l, g)?, r), None)))
        .collect::<Result<_>>()?;
    let tau = SparseOp::sum(g * g * r, &rotated).scaled(1.0 / s.len() as f64);
    let psi_r = partial_trace_matrix(&m, &[r, d], &[0]);
    let weights = vec![1.0 / (g * g) as f64; g * g];
    let (achieved, fid) = block_divergence(&tau, &psi_r, &weights);
    let n = s.len();
    let bound = (1.0 + (2f64.powf(k + 1.0) - 1.0) / n as f64).log2();
    Ok(ConvexSplitReport::new(k, n, bound, achieved, fid.min(1.0)))
}

/// Dense tau_{R G1 G2} for small instances, ordered R G1 G2.
pub fn classical_split_state(psi: &DensityOperator, c_label: &str, reg: &PrimeRegister, s: &[usize]) -> Result<CMat> {
    let g = reg.prime();
    let (m, r, d) = split_rc(psi, c_label)?;
    let input = embedded_input(&m, r, d, reg);
    let mut tau = SparseOp::zeros(input.dim());
    for &l in s {
        let rot = input.conjugate_monomial(&lift_permutation(&u_ell(l, g)?, r), None);
        tau = SparseOp::sum(input.dim(), [&tau, &rot]);
    }
    let dense = tau.scaled(1.0 / s.len() as f64).to_dense();
    // (G1 G2) R -> R (G1 G2)
    Ok(crate::linalg::permute_matrix(&dense, &[g * g, r], &[1, 0]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::pairwise_family;
    use crate::linalg::{max_abs_diff, random_density, PureState, RegisterSystem};

    #[test]
    fn hw_examples() {
        let i2 = hw_unitary(0, 0, 2).unwrap();
        assert!(max_abs_diff(&i2.matrix, &identity(2)) < 1e-15);
        let x = hw_unitary(1, 0, 2).unwrap().matrix;
        assert_eq!((x[(1, 0)], x[(0, 1)], x[(0, 0)]), (re(1.0), re(1.0), re(0.0)));
        let z = hw_unitary(0, 1, 2).unwrap().matrix;
        assert!((z[(0, 0)] - re(1.0)).norm() < 1e-15 && (z[(1, 1)] - re(-1.0)).norm() < 1e-15);
        assert!(hw_unitary(2, 0, 2).is_err());
    }

    #[test]
    fn one_design_examples() {
        let zero = DensityOperator::basis_state(RegisterSystem::single("C", 2).unwrap(), 0).unwrap();
        let avg = one_design_average(&zero, "C", 2).unwrap();
        assert!(max_abs_diff(avg.matrix(), &scale(&identity(2), 0.5)) < 1e-15);
        let phi = PureState::maximally_entangled("R", "C", 3).unwrap().density();
        let avg = one_design_average(&phi, "C", 3).unwrap();
        assert!(max_abs_diff(avg.matrix(), &scale(&identity(9), 1.0 / 9.0)) < 1e-14);
        assert!(one_design_average(&phi, "C", 2).is_err());
    }

    #[test]
    fn prime_register_labels() {
        let reg = PrimeRegister::new(2).unwrap();
        assert_eq!(reg.prime(), 5);
        assert_eq!(reg.index(0, 1, 1), Some(3));
        assert_eq!(reg.index(1, 0, 0), Some(4));
        assert_eq!(reg.index(1, 0, 1), None);
        assert_eq!(reg.decode(4), (1, 0, 0));
        assert!(PrimeRegister::with_prime(2, 6).is_err());
        assert!(PrimeRegister::with_prime(2, 11).is_err());
    }

    #[test]
    fn u_ell_examples() {
        assert_eq!(u_ell(0, 5).unwrap(), (0..25).collect::<Vec<_>>());
        assert_eq!(u_ell(2, 5).unwrap()[5 + 3], 2);
        let id = compose(&u_ell(2, 5).unwrap(), &u_ell(3, 5).unwrap());
        assert_eq!(id, (0..25).collect::<Vec<_>>());
        assert!(u_ell(5, 5).is_err());
    }

    #[test]
    fn marginal_check_examples() {
        let phi = PureState::maximally_entangled("R", "C", 2).unwrap().density();
        let reg = PrimeRegister::new(2).unwrap();
        assert!(classical_marginal_check(&phi, "C", &reg, 1).unwrap() < 1e-10);
        assert!(classical_marginal_check(&phi, "C", &reg, 0).is_err());
    }

    #[test]
    fn maximally_entangled_bounds() {
        let phi = PureState::maximally_entangled("R", "C", 2).unwrap().density();
        let fam = pairwise_family(4).unwrap();
        let rep = convex_split_1design(&phi, "C", 1, &fam, 0).unwrap();
        assert!((rep.k - 2.0).abs() < 1e-9);
        assert!((rep.analytic_bound - 2.0).abs() < 1e-9);
        let reg = PrimeRegister::new(2).unwrap();
        let rep = convex_split_classical(&phi, "C", &reg, &[0, 1, 2, 3, 4]).unwrap();
        assert!((rep.analytic_bound - 1.263034405833794).abs() < 1e-9);
        assert!(rep.holds(1e-7));
    }

    #[test]
    fn product_input_is_already_decoupled() {
        let r = random_density(4, RegisterSystem::single("R", 2).unwrap(), 2).unwrap();
        let mu = DensityOperator::maximally_mixed(RegisterSystem::single("C", 2).unwrap());
        let psi = crate::linalg::tensor(&r, &mu).unwrap();
        let rep = convex_split_1design(&psi, "C", 3, &pairwise_family(4).unwrap(), 1).unwrap();
        assert!(rep.k.abs() < 1e-9 && rep.analytic_bound.abs() < 1e-9);
        assert!(rep.achieved_rel_entropy.abs() < 1e-9);
    }

    #[test]
    fn classical_blocks_match_dense() {
        let psi = random_density(9, RegisterSystem::new(&[("R", 2), ("C", 2)]).unwrap(), 4).unwrap();
        let reg = PrimeRegister::new(2).unwrap();
        let s = [1, 3];
        let rep = convex_split_classical(&psi, "C", &reg, &s).unwrap();
        let tau = classical_split_state(&psi, "C", &reg, &s).unwrap();
        let psi_r = partial_trace_matrix(psi.matrix(), &[2, 2], &[0]);
        let sigma = kron(&psi_r, &scale(&identity(25), 1.0 / 25.0));
        let dense = relative_entropy_matrices(&tau, &sigma).as_f64();
        assert!((rep.achieved_rel_entropy - dense).abs() < 1e-9);
        assert!((rep.achieved_fidelity - fidelity_matrices(&tau, &sigma)).abs() < 1e-9);
    }
}
