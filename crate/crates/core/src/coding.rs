//! Quantum channels, Hayashi-Nagaoka decoders, position-based decoding and the
//! entanglement-assisted channel code over flattened embezzlement.
//!
//! Channel coding works in the eigenbasis frame of Psi_A. Bob's registers are
//! indexed ((b * |C| + c) * |E| + e) * |D| + d and Alice's retained registers
//! e' * |D| + d'. Heisenberg-Weyl operators act on support labels
//! s = offset(c) + e of sigma_CE and as the identity elsewhere.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::convex_split::{
    embedded_input, hw_unitary, invert, lift_permutation, select_members, split_rc, u_ell, PrimeRegister,
};
use crate::entropy::{dh_eps, dmax, imax, neyman_pearson_matrices, NeymanPearsonTest};
use crate::error::{Error, Result};
use crate::field::{next_prime_in, pairwise_family};
use crate::flatten::{
    check_unembezzle, embezzling_state, flat_classical_input, flat_entries, harmonic, marginal_ratio, purified_delta,
    round_spectrum, w_b_permutation, FlatEntries, FlatParams, FlatSpectrum, Rounding,
};
use crate::linalg::sparse::{Partition, SparseOp};
use crate::linalg::{
    c, diag, eigh, eigvalsh, floor_eig, hermitian_deviation, identity, kron, lambda_min, max_abs_diff,
    partial_trace_matrix, permute_registers, re, reassemble, scale, trace_product, CMat, DensityOperator, PureState,
    RegisterSystem, C64, HERMITIAN_TOL, PSD_TOL, TRACE_TOL,
};

/// Relative eigenvalue cut defining supp(sum Omega).
const SUPPORT_TOL: f64 = 1e-12;
/// Largest message set simulated exactly.
pub const MAX_MESSAGES: usize = 64;

/// CPTP map in Kraus form, K_k of shape |out| x |in|.
#[derive(Clone, Debug)]
pub struct QuantumChannel {
    name: String,
    kraus: Vec<CMat>,
}

fn check_probability(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("p = {p} outside [0, 1]")))
    }
}

impl QuantumChannel {
    pub fn new(name: &str, kraus: Vec<CMat>) -> Result<Self> {
        let first = kraus.first().ok_or_else(|| Error::InvalidParameter("empty Kraus list".into()))?;
        let (rows, cols) = (first.nrows(), first.ncols());
        if let Some(k) = kraus.iter().find(|k| k.nrows() != rows || k.ncols() != cols) {
            return Err(Error::DimensionMismatch { expected: rows * cols, got: k.nrows() * k.ncols() });
        }
        let channel = Self { name: name.into(), kraus };
        let res = channel.tp_residual();
        if res > TRACE_TOL {
            return Err(Error::InvalidParameter(format!(
                "Kraus operators are not trace preserving (residual {res:e})"
            )));
        }
        Ok(channel)
    }

    pub fn identity(d: usize) -> Result<Self> {
        Self::new("identity", vec![identity(d)])
    }

    /// rho -> (1 - p) rho + p mu_d with Heisenberg-Weyl Kraus operators.
    pub fn depolarizing(d: usize, p: f64) -> Result<Self> {
        check_probability(p)?;
        let dd = (d * d) as f64;
        let mut kraus = Vec::new();
        for a in 0..d {
            for b in 0..d {
                let w = if a == 0 && b == 0 { 1.0 - p + p / dd } else { p / dd };
                if w > 0.0 {
                    kraus.push(scale(&hw_unitary(a, b, d)?.matrix, w.sqrt()));
                }
            }
        }
        Self::new(&format!("depolarizing({p})"), kraus)
    }

    /// Qubit dephasing: off-diagonal entries scaled by 1 - p.
    pub fn dephasing(p: f64) -> Result<Self> {
        check_probability(p)?;
        let z = diag(&[1.0, -1.0]);
        Self::new(
            &format!("dephasing({p})"),
            vec![scale(&identity(2), (1.0 - p / 2.0).sqrt()), scale(&z, (p / 2.0).sqrt())],
        )
    }

    /// Qubit amplitude damping with decay probability `g`.
    pub fn amplitude_damping(g: f64) -> Result<Self> {
        check_probability(g)?;
        let mut k0 = CMat::zeros(2, 2);
        k0[(0, 0)] = re(1.0);
        k0[(1, 1)] = re((1.0 - g).sqrt());
        let mut k1 = CMat::zeros(2, 2);
        k1[(0, 1)] = re(g.sqrt());
        Self::new(&format!("amplitude_damping({g})"), vec![k0, k1])
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn input_dim(&self) -> usize {
        self.kraus[0].ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.kraus[0].nrows()
    }

    pub fn kraus(&self) -> &[CMat] {
        &self.kraus
    }

    /// max |sum_k K_k^dagger K_k - I|.
    pub fn tp_residual(&self) -> f64 {
        let d = self.input_dim();
        let sum = self.kraus.iter().fold(CMat::zeros(d, d), |acc, k| acc + k.adjoint() * k);
        max_abs_diff(&sum, &identity(d))
    }

    pub fn apply_matrix(&self, m: &CMat) -> Result<CMat> {
        if m.nrows() != self.input_dim() {
            return Err(Error::DimensionMismatch { expected: self.input_dim(), got: m.nrows() });
        }
        let d = self.output_dim();
        Ok(self.kraus.iter().fold(CMat::zeros(d, d), |acc, k| acc + k * m * k.adjoint()))
    }
}

/// sum_k K_k rho K_k^dagger with the channel acting on register `label`.
pub fn apply_channel(channel: &QuantumChannel, state: &DensityOperator, label: &str) -> Result<DensityOperator> {
    let sys = state.system();
    let pos = sys.position(label)?;
    let dims = sys.dims();
    if dims[pos] != channel.input_dim() {
        return Err(Error::DimensionMismatch { expected: channel.input_dim(), got: dims[pos] });
    }
    let left = identity(dims[..pos].iter().product());
    let right = identity(dims[pos + 1..].iter().product());
    let dout = channel.output_dim();
    let total = state.dim() / dims[pos] * dout;
    let mut out = CMat::zeros(total, total);
    for k in channel.kraus() {
        let lifted = kron(&kron(&left, k), &right);
        out += &lifted * state.matrix() * lifted.adjoint();
    }
    let regs =
        sys.registers().iter().enumerate().map(|(i, (l, d))| (l.clone(), if i == pos { dout } else { *d })).collect();
    DensityOperator::new(RegisterSystem::from_owned(regs)?, out)
}

/// Measurement {Lambda_{-1}, Lambda_0, ...}.
#[derive(Clone, Debug)]
pub struct Povm {
    pub elements: Vec<CMat>,
    /// Lambda_{-1}.
    pub failure: CMat,
}

impl Povm {
    /// max |sum Lambda - I|.
    pub fn completeness_residual(&self) -> f64 {
        let sum = self.elements.iter().fold(self.failure.clone(), |acc, e| acc + e);
        max_abs_diff(&sum, &identity(sum.nrows()))
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.elements.iter().chain(std::iter::once(&self.failure)).map(lambda_min).fold(f64::INFINITY, f64::min)
    }
}

/// (sum)^{-1/2} on its support and the projector onto the complement.
fn inverse_sqrt_on_support(m: &CMat) -> (CMat, CMat) {
    let e = eigh(m);
    let thr = SUPPORT_TOL * e.values.first().copied().unwrap_or(0.0).max(1.0);
    let s = reassemble(&e, |x| if x > thr { 1.0 / x.sqrt() } else { 0.0 });
    let pc = reassemble(&e, |x| if x > thr { 0.0 } else { 1.0 });
    (s, pc)
}

/// Lambda_i = S Omega_i S with S = (sum Omega)^{-1/2} on its support and
/// Lambda_{-1} the projector onto the complement.
pub fn hayashi_nagaoka_povm(ops: &[CMat]) -> Result<Povm> {
    let n = ops.first().ok_or_else(|| Error::InvalidParameter("empty operator family".into()))?.nrows();
    for op in ops {
        if op.nrows() != n || op.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, got: op.nrows() });
        }
        let dev = hermitian_deviation(op);
        if dev > HERMITIAN_TOL {
            return Err(Error::NotHermitian(dev));
        }
        let vals = eigvalsh(op);
        if vals.last().is_some_and(|&x| x < -PSD_TOL) || vals.first().is_some_and(|&x| x > 1.0 + PSD_TOL) {
            return Err(Error::InvalidParameter("operator outside 0 <= Omega <= I".into()));
        }
    }
    let sum = ops.iter().fold(CMat::zeros(n, n), |acc, o| acc + o);
    let (s, failure) = inverse_sqrt_on_support(&sum);
    let elements = ops.iter().map(|o| &s * o * &s).collect();
    Ok(Povm { elements, failure })
}

/// lambda_min of (1 + c)(I - Omega_i) + (2 + c + 1/c) sum_{j != i} Omega_j - (I - Lambda_i).
pub fn hn_slack(ops: &[CMat], povm: &Povm, i: usize, c: f64) -> f64 {
    let n = ops[i].nrows();
    let id = identity(n);
    let others = ops.iter().enumerate().filter(|&(j, _)| j != i).fold(CMat::zeros(n, n), |acc, (_, o)| acc + o);
    let rhs = scale(&(&id - &ops[i]), 1.0 + c) + scale(&others, 2.0 + c + 1.0 / c);
    lambda_min(&(rhs - (&id - &povm.elements[i])))
}

/// Hayashi-Nagaoka decoder for sparse operators, assembled on the connected
/// components of their joint support. Lambda_{-1} is the identity outside.
#[derive(Clone, Debug)]
pub struct BlockDecoder {
    partition: Partition,
    /// elements[i][k]: Lambda_i on component k, None where not assembled.
    elements: Vec<Vec<Option<CMat>>>,
    failure: Vec<Option<CMat>>,
}

impl BlockDecoder {
    pub fn new(ops: &[SparseOp], fiber: usize) -> Result<Self> {
        Self::build(ops, fiber, None)
    }

    /// Assembles only the components containing one of `indices`.
    pub fn focused(ops: &[SparseOp], fiber: usize, indices: &[usize]) -> Result<Self> {
        Self::build(ops, fiber, Some(indices))
    }

    fn build(ops: &[SparseOp], fiber: usize, focus: Option<&[usize]>) -> Result<Self> {
        let dim = ops.first().ok_or_else(|| Error::InvalidParameter("empty operator family".into()))?.dim();
        if let Some(o) = ops.iter().find(|o| o.dim() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, got: o.dim() });
        }
        let refs: Vec<&SparseOp> = ops.iter().collect();
        let partition = Partition::from_ops(dim, fiber, &refs);
        let wanted: Vec<bool> = match focus {
            None => vec![true; partition.len()],
            Some(ix) => {
                let mut w = vec![false; partition.len()];
                for k in ix.iter().filter_map(|&i| partition.component_of(i)) {
                    w[k] = true;
                }
                w
            }
        };
        let blocks: Vec<Vec<CMat>> = ops.iter().map(|o| partition.blocks(o).0).collect();
        let mut elements = vec![vec![None; partition.len()]; ops.len()];
        let mut failure = vec![None; partition.len()];
        for k in (0..partition.len()).filter(|&k| wanted[k]) {
            let n = partition.components()[k].len();
            let sum = blocks.iter().fold(CMat::zeros(n, n), |acc, b| acc + &b[k]);
            let (s, pc) = inverse_sqrt_on_support(&sum);
            for (i, b) in blocks.iter().enumerate() {
                elements[i][k] = Some(&s * &b[k] * &s);
            }
            failure[k] = Some(pc);
        }
        Ok(Self { partition, elements, failure })
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Tr(Lambda_i rho). Entries of rho outside assembled components contribute nothing.
    pub fn success(&self, i: usize, rho: &SparseOp) -> f64 {
        let mut acc = re(0.0);
        for &(a, b, v) in rho.entries() {
            if let (Some(ka), Some(kb)) = (self.partition.component_of(a), self.partition.component_of(b)) {
                if let (true, Some(l)) = (ka == kb, &self.elements[i][ka]) {
                    acc += l[(self.partition.local_index(b), self.partition.local_index(a))] * v;
                }
            }
        }
        acc.re
    }

    /// sum_k <v_k| Lambda_i |v_k> over sparse column vectors.
    pub fn success_columns(&self, i: usize, columns: &[Vec<(usize, C64)>]) -> f64 {
        let mut acc = 0.0;
        for col in columns {
            let located: Vec<(usize, usize, C64)> = col
                .iter()
                .filter_map(|&(idx, v)| {
                    self.partition.component_of(idx).map(|k| (k, self.partition.local_index(idx), v))
                })
                .collect();
            for &(ka, la, va) in &located {
                let Some(l) = &self.elements[i][ka] else { continue };
                for &(kb, lb, vb) in &located {
                    if kb == ka {
                        acc += (va.conj() * l[(la, lb)] * vb).re;
                    }
                }
            }
        }
        acc
    }

    /// max |sum Lambda - I| over assembled components.
    pub fn completeness_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for (k, f) in self.failure.iter().enumerate() {
            let Some(f) = f else { continue };
            let sum = self.elements.iter().fold(f.clone(), |acc, e| acc + e[k].as_ref().expect("assembled"));
            worst = worst.max(max_abs_diff(&sum, &identity(sum.nrows())));
        }
        worst
    }

    /// Smallest eigenvalue of any assembled element.
    pub fn min_eigenvalue(&self) -> f64 {
        self.elements
            .iter()
            .flatten()
            .chain(self.failure.iter())
            .flatten()
            .map(lambda_min)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Success probabilities of a position-based decoder and the bounds they are
/// checked against.
#[derive(Clone, Debug, PartialEq)]
pub struct DecodingReport {
    /// Tr(Lambda_l tau_l) in the order of S.
    pub success: Vec<f64>,
    pub min_success: f64,
    pub dh: f64,
    /// (delta^2 / 4 eps) 2^dh.
    pub cap: f64,
    /// 1 - eps - 4 delta (classical) or 1 - eps - 64 delta (flattened).
    pub closed_form_bound: f64,
    /// Hayashi-Nagaoka chain with every ratio evaluated exactly.
    pub exact_bound: f64,
    /// Same chain with Tr(Omega Psi_B (x) sigma_C) replaced by 2^{1 - dh}.
    pub ratio_bound: f64,
    pub completeness_residual: f64,
}

impl DecodingReport {
    pub fn holds(&self, tol: f64) -> bool {
        let floor = self.closed_form_bound.max(self.exact_bound).max(self.ratio_bound);
        self.min_success >= floor - tol
    }
}

fn check_decode_params(s: &[usize], labels: usize, eps: f64, delta: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter(format!("eps = {eps} outside (0, 1)")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter(format!("delta = {delta} outside (0, 1)")));
    }
    let mut sorted = s.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if s.is_empty() || sorted.len() != s.len() || sorted.last().is_some_and(|&l| l >= labels) {
        return Err(Error::InvalidParameter(format!("S must be nonempty distinct labels below {labels}")));
    }
    Ok(())
}

fn check_cap(s: usize, cap: f64, enforce: bool) -> Result<()> {
    if enforce && s as f64 > cap {
        return Err(Error::CapExceeded { requested: s, cap });
    }
    Ok(())
}

/// Omega_{B C0} (x) I_{C1} (x) I_{G2}, zero on the q = 1 tail, over
/// (i * |G| + j) * |B| + b.
fn embedded_test(omega: &CMat, r: usize, d: usize, reg: &PrimeRegister) -> SparseOp {
    let g = reg.prime();
    let mut entries = Vec::new();
    for c0 in 0..d {
        for c0p in 0..d {
            for x in 0..r {
                for y in 0..r {
                    let v = omega[(x * d + c0, y * d + c0p)];
                    if v.norm() <= 1e-300 {
                        continue;
                    }
                    for c1 in 0..d {
                        let i = reg.index(0, c0, c1).expect("q = 0 labels fit");
                        let ip = reg.index(0, c0p, c1).expect("q = 0 labels fit");
                        for j in 0..g {
                            entries.push(((i * g + j) * r + x, (ip * g + j) * r + y, v));
                        }
                    }
                }
            }
        }
    }
    SparseOp::from_triplets(g * g * r, entries)
}

/// Decodes l in S from tau_l with the POVM built on {U_l Omega_{BC0} U_l^dagger}.
pub fn position_based_decode_classical(
    psi: &DensityOperator,
    c_label: &str,
    reg: &PrimeRegister,
    s: &[usize],
    eps: f64,
    delta: f64,
) -> Result<DecodingReport> {
    decode_classical(psi, c_label, reg, s, eps, delta, true)
}

/// As [`position_based_decode_classical`] without the cap on |S|.
pub fn position_based_decode_classical_unchecked(
    psi: &DensityOperator,
    c_label: &str,
    reg: &PrimeRegister,
    s: &[usize],
    eps: f64,
    delta: f64,
) -> Result<DecodingReport> {
    decode_classical(psi, c_label, reg, s, eps, delta, false)
}

fn hn_terms(eps: f64, delta: f64) -> (f64, f64) {
    let c = delta / eps;
    (1.0 + c, 2.0 + c + 1.0 / c)
}

fn decode_classical(
    psi: &DensityOperator,
    c_label: &str,
    reg: &PrimeRegister,
    s: &[usize],
    eps: f64,
    delta: f64,
    enforce_cap: bool,
) -> Result<DecodingReport> {
    let g = reg.prime();
    check_decode_params(s, g, eps, delta)?;
    let (m, r, d) = split_rc(psi, c_label)?;
    if d != reg.base() {
        return Err(Error::DimensionMismatch { expected: reg.base(), got: d });
    }
    let psi_b = partial_trace_matrix(&m, &[r, d], &[0]);
    let np = neyman_pearson_matrices(&m, &kron(&psi_b, &scale(&identity(d), 1.0 / d as f64)), eps)?;
    let dh = np.dh().expect_finite("dh(Psi_BC || Psi_B x mu_C)")?;
    let cap = delta * delta / (4.0 * eps) * 2f64.powf(dh);
    check_cap(s.len(), cap, enforce_cap)?;
    let input = embedded_input(&m, r, d, reg);
    let test = embedded_test(&np.test, r, d, reg);
    let mut ops = Vec::with_capacity(s.len());
    let mut states = Vec::with_capacity(s.len());
    for &l in s {
        let images = lift_permutation(&u_ell(l, g)?, r);
        ops.push(test.conjugate_monomial(&images, None));
        states.push(input.conjugate_monomial(&images, None));
    }
    let dec = BlockDecoder::new(&ops, r)?;
    let success: Vec<f64> = (0..s.len()).map(|i| dec.success(i, &states[i])).collect();
    let miss = ops.iter().zip(&states).map(|(o, t)| 1.0 - o.trace_product(t).re).fold(0.0, f64::max);
    let (own, cross) = hn_terms(eps, delta);
    let others = (s.len() - 1) as f64;
    let exact_bound = 1.0 - own * miss - cross * others * (d * d) as f64 / g as f64 * np.type_two;
    let ratio_bound = 1.0 - own * miss - cross * others * 2.0 * np.type_two;
    Ok(DecodingReport {
        min_success: success.iter().copied().fold(f64::INFINITY, f64::min),
        success,
        dh,
        cap,
        closed_form_bound: 1.0 - eps - 4.0 * delta,
        exact_bound,
        ratio_bound,
        completeness_residual: dec.completeness_residual(),
    })
}

/// P W(Omega (x) I_{E D})W^dagger P as (s, d, b) x (s', d', b') entries, P the
/// projector onto supp(sigma_CE) (x) D and `omega` in the eigenbasis frame.
fn flattened_test(omega: &CMat, r: usize, spec: &FlatSpectrum, e_size: usize, ds: usize) -> Result<FlatEntries> {
    let d = spec.dim();
    let b = spec.blocks();
    let offs = spec.offsets();
    let mut by_pre: Vec<Vec<(usize, usize, usize)>> = vec![Vec::new(); ds * e_size];
    for cc in (0..d).filter(|&cc| b[cc] > 0) {
        let inv = invert(&w_b_permutation(b[cc], ds, e_size)?);
        for e in 0..b[cc] {
            for dd in 0..ds {
                by_pre[inv[dd * e_size + e]].push((cc, offs[cc] + e, dd));
            }
        }
    }
    let mut entries = Vec::new();
    for group in &by_pre {
        for &(c0, s0, d0) in group {
            for &(c1, s1, d1) in group {
                for x in 0..r {
                    for y in 0..r {
                        let v = omega[(x * d + c0, y * d + c1)];
                        if v.norm() > 1e-300 {
                            entries.push(((s0, d0, x), (s1, d1, y), v));
                        }
                    }
                }
            }
        }
    }
    Ok(entries)
}

/// Decodes l in S from the flattened tau_l with the POVM built on
/// {U_l W Omega_{BC0} W^dagger U_l^dagger}, sigma_C rounded down from omega_C.
#[allow(clippy::too_many_arguments)]
pub fn position_based_decode_flat(
    psi: &DensityOperator,
    c_label: &str,
    omega: &DensityOperator,
    params: &FlatParams,
    d_size: usize,
    s: &[usize],
    eps: f64,
    delta: f64,
) -> Result<DecodingReport> {
    decode_flat(psi, c_label, omega, params, d_size, s, eps, delta, true)
}

/// As [`position_based_decode_flat`] without the cap on |S|.
#[allow(clippy::too_many_arguments)]
pub fn position_based_decode_flat_unchecked(
    psi: &DensityOperator,
    c_label: &str,
    omega: &DensityOperator,
    params: &FlatParams,
    d_size: usize,
    s: &[usize],
    eps: f64,
    delta: f64,
) -> Result<DecodingReport> {
    decode_flat(psi, c_label, omega, params, d_size, s, eps, delta, false)
}

fn check_d_bracket(d_size: usize, n: usize, e_size: usize) -> Result<()> {
    if d_size < (n + 1) * e_size || d_size > n * n {
        return Err(Error::InvalidParameter(format!("|D| = {d_size} outside [{}, {}]", (n + 1) * e_size, n * n)));
    }
    Ok(())
}

/// max_c of the exact unembezzling ratio for block b(c).
fn unembezzle_ratio(spec: &FlatSpectrum, n: usize, d_size: usize) -> Result<f64> {
    let mut worst = 0.0f64;
    for &b in spec.blocks().iter().filter(|&&b| b > 0) {
        worst = worst.max(check_unembezzle(b, b, n, d_size)?.ratio);
    }
    Ok(worst)
}

#[allow(clippy::too_many_arguments)]
fn decode_flat(
    psi: &DensityOperator,
    c_label: &str,
    omega: &DensityOperator,
    params: &FlatParams,
    ds: usize,
    s: &[usize],
    eps: f64,
    delta: f64,
    enforce_cap: bool,
) -> Result<DecodingReport> {
    if !(delta > 0.0 && delta < 1.0 / 15.0) {
        return Err(Error::InvalidParameter(format!("delta = {delta} outside (0, 1/15)")));
    }
    let (m, r, d) = split_rc(psi, c_label)?;
    if omega.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, got: omega.dim() });
    }
    let spec = round_spectrum(omega, params.gamma, Rounding::Down)?;
    let e_size = spec.e_size();
    if params.a != e_size || params.n < params.a {
        return Err(Error::InvalidParameter(format!(
            "need a = |E| = {e_size} and n >= a, got a = {}, n = {}",
            params.a, params.n
        )));
    }
    check_d_bracket(ds, params.n, e_size)?;
    let g = spec.grid();
    let reg = PrimeRegister::with_prime(g, next_prime_in((g * g) as u64) as usize)?;
    let f = reg.prime();
    check_decode_params(s, f, eps, delta)?;
    let psi_b = partial_trace_matrix(&m, &[r, d], &[0]);
    let np = neyman_pearson_matrices(&m, &kron(&psi_b, omega.matrix()), eps)?;
    let dh = np.dh().expect_finite("dh(Psi_BC || Psi_B x omega_C)")?;
    let cap = delta * delta / (4.0 * eps) * 2f64.powf(dh);
    check_cap(s.len(), cap, enforce_cap)?;

    let u = kron(&identity(r), spec.basis());
    let rot = u.adjoint() * &m * &u;
    let test_rot = u.adjoint() * &np.test * &u;
    let xi = embezzling_state(params.a, params.n)?;
    let input = flat_classical_input(&flat_entries(&rot, r, &spec, &xi), &reg, g, ds, r);
    let test =
        flat_classical_input(&flattened_test(&test_rot, r, &spec, e_size, ds)?, &reg, g, ds, r).scaled((g * f) as f64);
    let inner = ds * r;
    let mut ops = Vec::with_capacity(s.len());
    let mut states = Vec::with_capacity(s.len());
    for &l in s {
        let images = lift_permutation(&u_ell(l, f)?, inner);
        ops.push(test.conjugate_monomial(&images, None));
        states.push(input.conjugate_monomial(&images, None));
    }
    let dec = BlockDecoder::new(&ops, r)?;
    let success: Vec<f64> = (0..s.len()).map(|i| dec.success(i, &states[i])).collect();
    let miss = ops.iter().zip(&states).map(|(o, t)| 1.0 - o.trace_product(t).re).fold(0.0, f64::max);

    let mut diffs: Vec<usize> =
        s.iter().flat_map(|&l| s.iter().filter(move |&&k| k != l).map(move |&k| (l + f - k) % f)).collect();
    diffs.sort_unstable();
    diffs.dedup();
    let xi_full = embezzling_state(1, params.n)?;
    let r_emb = diffs
        .par_iter()
        .map(|&k| marginal_ratio(&input, k, (f, ds, r), &psi_b, &xi_full))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let r_un = unembezzle_ratio(&spec, params.n, ds)?;
    let tr_sigma = trace_product(&np.test, &kron(&psi_b, &spec.sigma())).re;
    let (own, cross) = hn_terms(eps, delta);
    let chain = cross * (s.len() - 1) as f64 * r_emb * (g * g) as f64 / f as f64 * r_un;
    Ok(DecodingReport {
        min_success: success.iter().copied().fold(f64::INFINITY, f64::min),
        success,
        dh,
        cap,
        closed_form_bound: 1.0 - eps - 64.0 * delta,
        exact_bound: 1.0 - own * miss - chain * tr_sigma,
        ratio_bound: 1.0 - own * miss - chain * 2.0 * np.type_two,
        completeness_residual: dec.completeness_residual(),
    })
}

/// Protocol parameters of the entanglement-assisted code.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CodeParams {
    /// 2^rate messages.
    pub rate: u32,
    pub eps: f64,
    pub gamma: f64,
    pub delta_prime: f64,
    pub a: usize,
    pub n: usize,
    pub d_size: usize,
    pub seed: u64,
}

/// Outcome of an exact simulation of every message and every shared x1 x2.
#[derive(Clone, Debug, PartialEq)]
pub struct CodingReport {
    pub channel: String,
    pub rate: u32,
    pub eps: f64,
    /// max(log a / log n, |E| / a).
    pub delta: f64,
    pub delta_prime: f64,
    pub gamma: f64,
    pub dh: f64,
    /// dh - 5 - log(4 (eps + 4 gamma^{1/4}) / delta').
    pub max_rate: f64,
    pub within_cap: bool,
    /// eps + 4 gamma^{1/4} + delta' + 2 P(theta, theta').
    pub analytic_error_bound: f64,
    /// Hayashi-Nagaoka chain with exact ratios, valid at any rate.
    pub general_bound: f64,
    pub empirical_max_error: f64,
    /// Pr[M' != m] per message.
    pub message_errors: Vec<f64>,
    /// max_m P(theta_m, theta'_m).
    pub purified_distance: f64,
    /// log|C| + log|D|.
    pub entanglement_qubits: f64,
    /// (1 / delta) log(|A| / (gamma delta)).
    pub entanglement_budget: f64,
    /// Exactly evaluated (message, x1, x2) triples.
    pub trials: usize,
}

impl CodingReport {
    /// Error within the rate-conditioned bound at an admissible rate.
    pub fn holds(&self, tol: f64) -> bool {
        self.within_cap && self.empirical_max_error <= self.analytic_error_bound + tol
    }

    pub fn general_holds(&self, tol: f64) -> bool {
        self.empirical_max_error <= self.general_bound + tol
    }

    pub fn budget_holds(&self) -> bool {
        self.entanglement_qubits <= self.entanglement_budget
    }
}

type Column = Vec<(usize, C64)>;

/// Registers and unitaries of the protocol in the eigenbasis frame of Psi_A.
struct Protocol {
    da: usize,
    db: usize,
    ne: usize,
    ds: usize,
    g: usize,
    blocks: Vec<usize>,
    offs: Vec<usize>,
    q: Vec<f64>,
    kraus: Vec<CMat>,
    /// W_{b(c)} on d * |E| + e and its inverse.
    w: Vec<Vec<usize>>,
    w_inv: Vec<Vec<usize>>,
    xi: crate::flatten::EmbezzleState,
}

impl Protocol {
    fn bob(&self, bo: usize, cc: usize, e: usize, dd: usize) -> usize {
        ((bo * self.da + cc) * self.ne + e) * self.ds + dd
    }

    fn bob_dim(&self) -> usize {
        self.db * self.da * self.ne * self.ds
    }

    fn label(&self, cc: usize, e: usize) -> Option<usize> {
        (e < self.blocks[cc]).then(|| self.offs[cc] + e)
    }

    fn unlabel(&self, s: usize) -> (usize, usize) {
        let cc =
            (0..self.da).find(|&k| s >= self.offs[k] && s < self.offs[k] + self.blocks[k]).expect("label in range");
        (cc, s - self.offs[cc])
    }

    /// W_{b(c)} (or its inverse) on (e, d).
    fn apply_w(&self, cc: usize, e: usize, dd: usize, inverse: bool) -> (usize, usize) {
        let p = if inverse { &self.w_inv[cc] } else { &self.w[cc] };
        let y = p[dd * self.ne + e];
        (y % self.ne, y / self.ne)
    }

    /// V_v on (c, e): V|s> = omega^{s sb}|s + sa>; transpose maps |s + sa> to omega^{s sb}|s>.
    fn apply_hw(&self, v: usize, cc: usize, e: usize, transpose: bool) -> (usize, usize, C64) {
        let Some(s) = self.label(cc, e) else { return (cc, e, re(1.0)) };
        let (sa, sb) = (v / self.g, v % self.g);
        let src = if transpose { (s + self.g - sa) % self.g } else { s };
        let t = 2.0 * PI * ((src * sb) % self.g) as f64 / self.g as f64;
        let dst = if transpose { src } else { (s + sa) % self.g };
        let (c2, e2) = self.unlabel(dst);
        (c2, e2, c(t.cos(), t.sin()))
    }

    /// Columns of theta'_v after Bob's W: Alice encodes with W_A^dagger V^T_v W_A,
    /// sends A through the channel and keeps E' D'.
    fn received(&self, v: usize) -> Vec<Column> {
        let mut cols: Vec<Vec<(usize, C64)>> = vec![Vec::new(); self.kraus.len() * self.ne * self.ds];
        for cc in (0..self.da).filter(|&k| self.blocks[k] > 0) {
            for j in self.xi.a()..=self.xi.n() {
                let amp = re((self.q[cc] * self.xi.weight(j)).sqrt());
                let (e1, d1) = self.apply_w(cc, 0, j, false);
                let (c2, e2, ph) = self.apply_hw(v, cc, e1, true);
                let (e3, d3) = self.apply_w(c2, e2, d1, true);
                let (eb, db) = self.apply_w(cc, 0, j, false);
                let rest = e3 * self.ds + d3;
                for (k, kr) in self.kraus.iter().enumerate() {
                    for bo in 0..self.db {
                        let x = kr[(bo, c2)] * amp * ph;
                        if x.norm() > 1e-300 {
                            cols[k * self.ne * self.ds + rest].push((self.bob(bo, cc, eb, db), x));
                        }
                    }
                }
            }
        }
        cols.into_iter().filter(|c| !c.is_empty()).map(merge_column).collect()
    }

    /// Columns of theta_v = V_v W(sigma_BC (x) xi^{a:n} (x) |0><0|)W^dagger V_v^dagger.
    fn ideal(&self, v: usize) -> Vec<Column> {
        let width = self.xi.n() + 1;
        let mut cols: Vec<Vec<(usize, C64)>> = vec![Vec::new(); self.kraus.len() * width];
        for cc in (0..self.da).filter(|&k| self.blocks[k] > 0) {
            for j in self.xi.a()..=self.xi.n() {
                let amp = re((self.q[cc] * self.xi.weight(j)).sqrt());
                let (e1, d1) = self.apply_w(cc, 0, j, false);
                let (c2, e2, ph) = self.apply_hw(v, cc, e1, false);
                for (k, kr) in self.kraus.iter().enumerate() {
                    for bo in 0..self.db {
                        let x = kr[(bo, cc)] * amp * ph;
                        if x.norm() > 1e-300 {
                            cols[k * width + j].push((self.bob(bo, c2, e2, d1), x));
                        }
                    }
                }
            }
        }
        cols.into_iter().filter(|c| !c.is_empty()).map(merge_column).collect()
    }

    /// Monomial form of V_v on the Bob index.
    fn hw_monomial(&self, v: usize) -> (Vec<usize>, Vec<C64>) {
        let dim = self.bob_dim();
        let mut images = vec![0; dim];
        let mut phases = vec![re(1.0); dim];
        for bo in 0..self.db {
            for cc in 0..self.da {
                for e in 0..self.ne {
                    let (c2, e2, ph) = self.apply_hw(v, cc, e, false);
                    for dd in 0..self.ds {
                        let x = self.bob(bo, cc, e, dd);
                        images[x] = self.bob(bo, c2, e2, dd);
                        phases[x] = ph;
                    }
                }
            }
        }
        (images, phases)
    }

    /// W(Omega (x) I_{E D})W^dagger on the Bob index.
    fn decoding_test(&self, omega: &CMat) -> SparseOp {
        let mut entries = Vec::new();
        for pre in 0..self.ds * self.ne {
            let (e0, d0) = (pre % self.ne, pre / self.ne);
            for bo in 0..self.db {
                for cc in 0..self.da {
                    let (e1, d1) = self.apply_w(cc, e0, d0, false);
                    for bp in 0..self.db {
                        for cp in 0..self.da {
                            let v = omega[(bo * self.da + cc, bp * self.da + cp)];
                            if v.norm() <= 1e-300 {
                                continue;
                            }
                            let (e2, d2) = self.apply_w(cp, e0, d0, false);
                            entries.push((self.bob(bo, cc, e1, d1), self.bob(bp, cp, e2, d2), v));
                        }
                    }
                }
            }
        }
        SparseOp::from_triplets(self.bob_dim(), entries)
    }
}

fn merge_column(mut col: Column) -> Column {
    col.sort_by_key(|&(i, _)| i);
    let mut out: Column = Vec::with_capacity(col.len());
    for (i, v) in col {
        match out.last_mut() {
            Some((j, w)) if *j == i => *w += v,
            _ => out.push((i, v)),
        }
    }
    out
}

/// ||A^dagger B||_1 = F(A A^dagger, B B^dagger) for column lists A, B.
fn low_rank_fidelity(a: &[Column], b: &[Column], dim: usize) -> f64 {
    let mut m = CMat::zeros(a.len(), b.len());
    let mut dense = vec![re(0.0); dim];
    for (i, ca) in a.iter().enumerate() {
        for &(k, v) in ca {
            dense[k] = v.conj();
        }
        for (j, cb) in b.iter().enumerate() {
            m[(i, j)] = cb.iter().fold(re(0.0), |acc, &(k, v)| acc + dense[k] * v);
        }
        for &(k, _) in ca {
            dense[k] = re(0.0);
        }
    }
    eigvalsh(&(&m * m.adjoint())).into_iter().map(|x| floor_eig(x).sqrt()).sum()
}

/// Entanglement-assisted code for `channel` using the purification `psi` of
/// the channel input on register `a_label`. Refuses rates above the cap.
pub fn ea_channel_code(
    channel: &QuantumChannel,
    psi: &PureState,
    a_label: &str,
    params: &CodeParams,
) -> Result<CodingReport> {
    run_code(channel, psi, a_label, params, true)
}

/// As [`ea_channel_code`] at any rate; only the general bound applies above the cap.
pub fn ea_channel_code_unchecked(
    channel: &QuantumChannel,
    psi: &PureState,
    a_label: &str,
    params: &CodeParams,
) -> Result<CodingReport> {
    run_code(channel, psi, a_label, params, false)
}

/// Cap on the rate for the given test.
fn max_rate(np: &NeymanPearsonTest, eps: f64, gamma: f64, delta_prime: f64) -> Result<f64> {
    let dh = np.dh().expect_finite("dh(N(Psi_AC) || N(Psi_A) x Psi_C)")?;
    Ok(dh - 5.0 - (4.0 * (eps + 4.0 * gamma.powf(0.25)) / delta_prime).log2())
}

fn run_code(
    channel: &QuantumChannel,
    psi: &PureState,
    a_label: &str,
    p: &CodeParams,
    enforce_cap: bool,
) -> Result<CodingReport> {
    if !(p.eps > 0.0 && p.eps < 1.0) || !(p.delta_prime > 0.0 && p.delta_prime < 1.0) {
        return Err(Error::InvalidParameter(format!("eps = {}, delta' = {} must lie in (0, 1)", p.eps, p.delta_prime)));
    }
    let messages = 1usize
        .checked_shl(p.rate)
        .filter(|&m| m <= MAX_MESSAGES)
        .ok_or_else(|| Error::InvalidParameter(format!("2^R with R = {} exceeds {MAX_MESSAGES} messages", p.rate)))?;
    let rho_a = psi.density().marginal(&[a_label])?;
    let da = rho_a.dim();
    if channel.input_dim() != da {
        return Err(Error::DimensionMismatch { expected: channel.input_dim(), got: da });
    }
    let db = channel.output_dim();
    let eig = eigh(rho_a.matrix());
    let lambda: Vec<f64> = eig.values.iter().map(|&x| floor_eig(x)).collect();
    let kraus: Vec<CMat> = channel.kraus().iter().map(|k| k * &eig.vectors).collect();

    // N applied to sum_c sqrt(w_c) |c>_A |c>_C, ordered B C.
    let channel_output = |w: &[f64]| {
        let mut m = CMat::zeros(db * da, db * da);
        for k in &kraus {
            let phi: Vec<C64> = (0..db * da).map(|x| k[(x / da, x % da)] * w[x % da].sqrt()).collect();
            m += crate::linalg::outer(&phi, &phi);
        }
        m
    };
    let psi_bc = channel_output(&lambda);
    let psi_b = partial_trace_matrix(&psi_bc, &[db, da], &[0]);
    let np = neyman_pearson_matrices(&psi_bc, &kron(&psi_b, &diag(&lambda)), p.eps)?;
    let dh = np.dh().expect_finite("dh(N(Psi_AC) || N(Psi_A) x Psi_C)")?;
    let cap = max_rate(&np, p.eps, p.gamma, p.delta_prime)?;
    let within_cap = p.rate as f64 <= cap;
    if enforce_cap && !within_cap {
        return Err(Error::RateRefused { requested: p.rate as f64, max_rate: cap });
    }

    let psi_c = DensityOperator::from_diagonal(RegisterSystem::single("C", da)?, &lambda)?;
    let spec = round_spectrum(&psi_c, p.gamma, Rounding::Down)?;
    if max_abs_diff(spec.basis(), &identity(da)) > 1e-12 {
        return Err(Error::Numerical("rounded spectrum left the eigenbasis frame".into()));
    }
    let ne = spec.e_size();
    if p.a < ne || p.n < p.a {
        return Err(Error::InvalidParameter(format!("need n >= a >= |E| = {ne}, got a = {}, n = {}", p.a, p.n)));
    }
    check_d_bracket(p.d_size, p.n, ne)?;
    let g = spec.grid();
    let q_field = (g * g) as u64;
    if messages as u64 > q_field {
        return Err(Error::InvalidParameter(format!("2^R = {messages} exceeds |GF({q_field})|")));
    }
    let family = pairwise_family(q_field)?;
    let members = select_members(&family, messages, p.seed);
    let w: Vec<Vec<usize>> = spec.blocks().iter().map(|&b| w_b_permutation(b, p.d_size, ne)).collect::<Result<_>>()?;
    let proto = Protocol {
        da,
        db,
        ne,
        ds: p.d_size,
        g,
        blocks: spec.blocks().to_vec(),
        offs: spec.offsets(),
        q: spec.probabilities(),
        kraus: kraus.clone(),
        w_inv: w.iter().map(|x| invert(x)).collect(),
        w,
        xi: embezzling_state(p.a, p.n)?,
    };

    let labels = q_field as usize;
    let received: Vec<Vec<Column>> = (0..labels).into_par_iter().map(|v| proto.received(v)).collect();
    let fidelity: Vec<f64> = (0..labels)
        .into_par_iter()
        .map(|v| low_rank_fidelity(&proto.ideal(v), &received[v], proto.bob_dim()).min(1.0))
        .collect();
    let monomials: Vec<(Vec<usize>, Vec<C64>)> = (0..labels).into_par_iter().map(|v| proto.hw_monomial(v)).collect();
    let test = proto.decoding_test(&np.test);

    let per_x: Vec<Vec<f64>> = (0..labels * labels)
        .into_par_iter()
        .map(|x| {
            let (x1, x2) = ((x / labels) as u64, (x % labels) as u64);
            let vs: Vec<usize> = members.iter().map(|&j| family.eval(j, x1, x2) as usize).collect();
            let ops: Vec<SparseOp> =
                vs.iter().map(|&v| test.conjugate_monomial(&monomials[v].0, Some(&monomials[v].1))).collect();
            let focus: Vec<usize> = vs.iter().flat_map(|&v| received[v].iter().flatten().map(|&(i, _)| i)).collect();
            let dec = BlockDecoder::focused(&ops, 1, &focus).expect("nonempty family");
            vs.iter().enumerate().map(|(m, &v)| 1.0 - dec.success_columns(m, &received[v])).collect()
        })
        .collect();
    let count = (labels * labels) as f64;
    let mut message_errors = vec![0.0; messages];
    let mut mean_fid = vec![0.0; messages];
    for (x, errs) in per_x.iter().enumerate() {
        let (x1, x2) = ((x / labels) as u64, (x % labels) as u64);
        for (m, &j) in members.iter().enumerate() {
            message_errors[m] += errs[m];
            mean_fid[m] += fidelity[family.eval(j, x1, x2) as usize];
        }
    }
    for m in 0..messages {
        message_errors[m] /= count;
        mean_fid[m] /= count;
    }
    let purified = mean_fid.iter().map(|&f| (1.0 - (f * f).min(1.0)).sqrt()).fold(0.0, f64::max);

    let q = spec.probabilities();
    let sigma_bc = channel_output(&q);
    let sigma_b = partial_trace_matrix(&sigma_bc, &[db, da], &[0]);
    let tr_own = trace_product(&np.test, &sigma_bc).re;
    let tr_cross = trace_product(&np.test, &kron(&sigma_b, &diag(&q))).re;
    let r_emb = embezzle_ratio(&spec, &proto.xi)?;
    let r_un = unembezzle_ratio(&spec, p.n, p.d_size)?;
    let slack = p.eps + 4.0 * p.gamma.powf(0.25);
    let cc = p.delta_prime / slack;
    let general_bound = 2.0 * purified
        + (1.0 + cc) * (1.0 - tr_own)
        + (2.0 + cc + 1.0 / cc) * (messages - 1) as f64 * r_emb * r_un * tr_cross;
    let delta = purified_delta(p.a, ne, p.n);
    Ok(CodingReport {
        channel: channel.name().to_string(),
        rate: p.rate,
        eps: p.eps,
        delta,
        delta_prime: p.delta_prime,
        gamma: p.gamma,
        dh,
        max_rate: cap,
        within_cap,
        analytic_error_bound: slack + p.delta_prime + 2.0 * purified,
        general_bound,
        empirical_max_error: message_errors.iter().copied().fold(0.0, f64::max),
        message_errors,
        purified_distance: purified,
        entanglement_qubits: (da as f64).log2() + (p.d_size as f64).log2(),
        entanglement_budget: (da as f64 / (p.gamma * delta)).log2() / delta,
        trials: messages * labels * labels,
    })
}

/// Exact r with W(sigma_C (x) |0><0|_E (x) xi^{a:n})W^dagger <= r sigma_CE (x) xi^{1:n}.
fn embezzle_ratio(spec: &FlatSpectrum, xi: &crate::flatten::EmbezzleState) -> Result<f64> {
    let full = embezzling_state(1, xi.n())?;
    let g = spec.grid() as f64;
    let q = spec.probabilities();
    let mut worst = 0.0f64;
    for (cc, &b) in spec.blocks().iter().enumerate().filter(|(_, &b)| b > 0) {
        for j in xi.a()..=xi.n() {
            worst = worst.max(q[cc] * xi.weight(j) * g / full.weight(j / b));
        }
    }
    Ok(worst)
}

/// Communication and entanglement bounds for redistribution and merging.
#[derive(Clone, Debug, PartialEq)]
pub struct RedistributionBounds {
    /// Communication bound per omega_C candidate; candidates with infinite D_max are skipped.
    pub grid: Vec<(String, f64)>,
    /// Minimum over the grid.
    pub communication_qubits: f64,
    /// (4 + 1/delta) log(|C| / delta).
    pub entanglement_qubits: f64,
    /// I_max(R:C) / 2 + 2 + 2 log(1/delta).
    pub merge_communication_qubits: f64,
}

/// Bounds for a pure state on registers R, A, B, C with no smoothing; `eps`
/// enters the hypothesis-testing term and the additive constant.
pub fn redistribution_bounds(psi: &DensityOperator, eps: f64, delta: f64) -> Result<RedistributionBounds> {
    if !(eps > 0.0 && eps < 1.0) || !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter(format!("eps = {eps}, delta = {delta} must lie in (0, 1)")));
    }
    let purity = psi.purity();
    if (purity - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidState(format!("input has purity {purity}, expected a pure state")));
    }
    let psi = permute_registers(psi, &["R", "A", "B", "C"])?;
    let rbc = psi.marginal(&["R", "B", "C"])?;
    let rb = psi.marginal(&["R", "B"])?;
    let bc = psi.marginal(&["B", "C"])?;
    let b = psi.marginal(&["B"])?;
    let psi_c = psi.marginal(&["C"])?;
    let dc = psi_c.dim();
    let c_sys = RegisterSystem::single("C", dc)?;
    let mut candidates = vec![
        ("Psi_C".to_string(), psi_c.clone()),
        ("mu_C".to_string(), DensityOperator::maximally_mixed(c_sys.clone())),
    ];
    for (gamma, tag) in [(0.5, "1/2"), (0.25, "1/4")] {
        for (dir, name) in [(Rounding::Up, "up"), (Rounding::Down, "down")] {
            let spec = round_spectrum(&psi_c, gamma, dir)?;
            candidates
                .push((format!("{name}({tag})"), DensityOperator::from_parts_unchecked(c_sys.clone(), spec.sigma())));
        }
    }
    let constant = (32.0 / (eps * eps * delta.powi(6))).log2();
    let mut grid = Vec::new();
    for (label, omega) in candidates {
        let dm = dmax(&rbc, &crate::linalg::tensor(&rb, &omega)?)?;
        let dh = dh_eps(&bc, &crate::linalg::tensor(&b, &omega)?, eps)?;
        if dm.is_finite() && dh.is_finite() {
            grid.push((label, 0.5 * (dm.as_f64() - dh.as_f64() + constant)));
        }
    }
    let communication_qubits = grid.iter().map(|x| x.1).fold(f64::INFINITY, f64::min);
    let rc = psi.marginal(&["R", "C"])?;
    let im = imax(&rc, &["R"], &["C"])?.expect_finite("I_max(R:C)")?;
    Ok(RedistributionBounds {
        grid,
        communication_qubits,
        entanglement_qubits: (4.0 + 1.0 / delta) * (dc as f64 / delta).log2(),
        merge_communication_qubits: 0.5 * im + 2.0 + 2.0 * (1.0 / delta).log2(),
    })
}

/// S(1, n) / S(a, n), the exact embezzlement ratio.
pub fn embezzlement_ratio(a: usize, n: usize) -> f64 {
    harmonic(1, n) / harmonic(a, n)
}
