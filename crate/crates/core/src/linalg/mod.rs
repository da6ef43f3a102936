//! Register-labelled dense complex linear algebra.
//!
//! Basis indices are row-major over the register list: the first register is
//! the most significant digit.

pub mod sparse;

use std::collections::HashSet;
use std::fmt;

use faer::{Mat, Side};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

pub type C64 = faer::c64;
pub type CMat = Mat<C64>;

/// Maximum entry-wise |M - M†| accepted as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-9;
/// Eigenvalues in [-PSD_TOL, 0) are treated as zero.
pub const PSD_TOL: f64 = 1e-9;
/// Allowed deviation of a state's trace from one.
pub const TRACE_TOL: f64 = 1e-9;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Ordered list of labelled tensor factors.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RegisterSystem {
    registers: Vec<(String, usize)>,
}

impl RegisterSystem {
    pub fn new(registers: &[(&str, usize)]) -> Result<Self> {
        Self::from_owned(registers.iter().map(|(l, d)| (l.to_string(), *d)).collect())
    }

    pub fn from_owned(registers: Vec<(String, usize)>) -> Result<Self> {
        let mut seen = HashSet::new();
        for (label, dim) in &registers {
            if *dim == 0 {
                return Err(Error::InvalidRegister(format!("register {label} has dimension 0")));
            }
            if label.is_empty() {
                return Err(Error::InvalidRegister("empty register label".into()));
            }
            if !seen.insert(label.as_str()) {
                return Err(Error::LabelCollision(label.clone()));
            }
        }
        Ok(Self { registers })
    }

    pub fn single(label: &str, dim: usize) -> Result<Self> {
        Self::new(&[(label, dim)])
    }

    /// The system with no registers (total dimension 1).
    pub fn trivial() -> Self {
        Self { registers: Vec::new() }
    }

    pub fn registers(&self) -> &[(String, usize)] {
        &self.registers
    }

    pub fn labels(&self) -> Vec<&str> {
        self.registers.iter().map(|(l, _)| l.as_str()).collect()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.registers.iter().map(|(_, d)| *d).collect()
    }

    pub fn len(&self) -> usize {
        self.registers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.registers.is_empty()
    }

    pub fn total_dim(&self) -> usize {
        self.registers.iter().map(|(_, d)| *d).product()
    }

    pub fn position(&self, label: &str) -> Result<usize> {
        self.registers.iter().position(|(l, _)| l == label).ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    pub fn dim_of(&self, label: &str) -> Result<usize> {
        Ok(self.registers[self.position(label)?].1)
    }

    pub fn contains(&self, label: &str) -> bool {
        self.registers.iter().any(|(l, _)| l == label)
    }

    pub fn concat(&self, other: &RegisterSystem) -> Result<Self> {
        let mut regs = self.registers.clone();
        regs.extend(other.registers.iter().cloned());
        Self::from_owned(regs)
    }

    /// Registers named in `labels`, kept in this system's order.
    pub fn subsystem(&self, labels: &[&str]) -> Result<Self> {
        for l in labels {
            self.position(l)?;
        }
        Ok(Self { registers: self.registers.iter().filter(|(l, _)| labels.contains(&l.as_str())).cloned().collect() })
    }

    /// Registers not named in `labels`.
    pub fn complement(&self, labels: &[&str]) -> Result<Self> {
        for l in labels {
            self.position(l)?;
        }
        Ok(Self { registers: self.registers.iter().filter(|(l, _)| !labels.contains(&l.as_str())).cloned().collect() })
    }
}

impl fmt::Display for RegisterSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.registers.is_empty() {
            return write!(f, "()");
        }
        let parts: Vec<String> = self.registers.iter().map(|(l, d)| format!("{l}[{d}]")).collect();
        write!(f, "{}", parts.join(" x "))
    }
}

/// Density operator on a register system. Trace one unless built through
/// [`DensityOperator::new_subnormalized`].
#[derive(Clone, Debug)]
pub struct DensityOperator {
    system: RegisterSystem,
    matrix: CMat,
}

impl DensityOperator {
    pub fn new(system: RegisterSystem, matrix: CMat) -> Result<Self> {
        let op = Self::validated(system, matrix)?;
        let t = op.trace();
        if (t - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {t} differs from 1")));
        }
        Ok(op)
    }

    /// Accepts PSD operators with trace at most one.
    pub fn new_subnormalized(system: RegisterSystem, matrix: CMat) -> Result<Self> {
        let op = Self::validated(system, matrix)?;
        let t = op.trace();
        if t > 1.0 + TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {t} exceeds 1")));
        }
        Ok(op)
    }

    fn validated(system: RegisterSystem, matrix: CMat) -> Result<Self> {
        let d = system.total_dim();
        check_square(&matrix, d)?;
        let dev = hermitian_deviation(&matrix);
        if dev > HERMITIAN_TOL {
            return Err(Error::NotHermitian(dev));
        }
        let lmin = lambda_min(&matrix);
        if lmin < -PSD_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {lmin:e}")));
        }
        Ok(Self { system, matrix })
    }

    /// Wraps a matrix the caller knows to be a valid state.
    pub fn from_parts_unchecked(system: RegisterSystem, matrix: CMat) -> Self {
        debug_assert_eq!(matrix.nrows(), system.total_dim());
        Self { system, matrix }
    }

    pub fn from_diagonal(system: RegisterSystem, probs: &[f64]) -> Result<Self> {
        let d = system.total_dim();
        if probs.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: probs.len() });
        }
        let m = CMat::from_fn(d, d, |i, j| if i == j { re(probs[i]) } else { re(0.0) });
        Self::new(system, m)
    }

    pub fn maximally_mixed(system: RegisterSystem) -> Self {
        let d = system.total_dim();
        let m = CMat::from_fn(d, d, |i, j| if i == j { re(1.0 / d as f64) } else { re(0.0) });
        Self { system, matrix: m }
    }

    pub fn basis_state(system: RegisterSystem, index: usize) -> Result<Self> {
        let d = system.total_dim();
        if index >= d {
            return Err(Error::InvalidParameter(format!("basis index {index} >= {d}")));
        }
        let m = CMat::from_fn(d, d, |i, j| if i == index && j == index { re(1.0) } else { re(0.0) });
        Ok(Self { system, matrix: m })
    }

    pub fn from_pure(psi: &PureState) -> Self {
        Self { system: psi.system.clone(), matrix: outer(&psi.vector, &psi.vector) }
    }

    pub fn system(&self) -> &RegisterSystem {
        &self.system
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMat {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> f64 {
        trace(&self.matrix).re
    }

    pub fn purity(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                s += self.matrix[(i, j)].norm_sqr();
            }
        }
        s
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        eigvalsh(&self.matrix)
    }

    pub fn marginal(&self, keep: &[&str]) -> Result<Self> {
        let drop: Vec<&str> = self.system.labels().into_iter().filter(|l| !keep.contains(l)).collect();
        for k in keep {
            self.system.position(k)?;
        }
        partial_trace(self, &drop)
    }

    /// Same matrix, registers renamed and regrouped into `system`.
    pub fn relabel(&self, system: RegisterSystem) -> Result<Self> {
        check_square(&self.matrix, system.total_dim())?;
        Ok(Self { system, matrix: self.matrix.clone() })
    }
}

/// Unit vector on a register system.
#[derive(Clone, Debug)]
pub struct PureState {
    system: RegisterSystem,
    vector: Vec<C64>,
}

impl PureState {
    pub fn new(system: RegisterSystem, vector: Vec<C64>) -> Result<Self> {
        let d = system.total_dim();
        if vector.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: vector.len() });
        }
        let norm = vector.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidState(format!("vector norm {norm} differs from 1")));
        }
        Ok(Self { system, vector })
    }

    /// Normalizes `vector` before wrapping it.
    pub fn normalized(system: RegisterSystem, mut vector: Vec<C64>) -> Result<Self> {
        let norm = vector.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidState("zero vector".into()));
        }
        for z in vector.iter_mut() {
            *z /= norm;
        }
        Self::new(system, vector)
    }

    /// (|00> + |11> + ...)/sqrt(d) on registers (a, b).
    pub fn maximally_entangled(a: &str, b: &str, d: usize) -> Result<Self> {
        let system = RegisterSystem::new(&[(a, d), (b, d)])?;
        let mut v = vec![re(0.0); d * d];
        let amp = 1.0 / (d as f64).sqrt();
        for i in 0..d {
            v[i * d + i] = re(amp);
        }
        Self::new(system, v)
    }

    pub fn system(&self) -> &RegisterSystem {
        &self.system
    }

    pub fn vector(&self) -> &[C64] {
        &self.vector
    }

    pub fn density(&self) -> DensityOperator {
        DensityOperator::from_pure(self)
    }
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues descending.
#[derive(Clone, Debug)]
pub struct Eigh {
    pub values: Vec<f64>,
    pub vectors: CMat,
}

fn check_square(m: &CMat, d: usize) -> Result<()> {
    if m.nrows() != d || m.ncols() != d {
        return Err(Error::DimensionMismatch { expected: d, got: m.nrows().max(m.ncols()) });
    }
    Ok(())
}

pub fn zeros(n: usize) -> CMat {
    CMat::zeros(n, n)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn diag(values: &[f64]) -> CMat {
    let n = values.len();
    CMat::from_fn(n, n, |i, j| if i == j { re(values[i]) } else { re(0.0) })
}

pub fn outer(a: &[C64], b: &[C64]) -> CMat {
    CMat::from_fn(a.len(), b.len(), |i, j| a[i] * b[j].conj())
}

pub fn adjoint(m: &CMat) -> CMat {
    m.adjoint().to_owned()
}

pub fn transpose(m: &CMat) -> CMat {
    m.transpose().to_owned()
}

pub fn trace(m: &CMat) -> C64 {
    let mut t = re(0.0);
    for i in 0..m.nrows().min(m.ncols()) {
        t += m[(i, i)];
    }
    t
}

/// Tr(A B) without forming the product.
pub fn trace_product(a: &CMat, b: &CMat) -> C64 {
    let mut t = re(0.0);
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            t += a[(i, j)] * b[(j, i)];
        }
    }
    t
}

pub fn frobenius(m: &CMat) -> f64 {
    let mut s = 0.0;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            s += m[(i, j)].norm_sqr();
        }
    }
    s.sqrt()
}

pub fn frobenius_distance(a: &CMat, b: &CMat) -> f64 {
    frobenius(&(a - b))
}

pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    let mut m = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max((a[(i, j)] - b[(i, j)]).norm());
        }
    }
    m
}

pub fn hermitian_deviation(m: &CMat) -> f64 {
    let n = m.nrows();
    let mut dev = 0.0f64;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

fn symmetrized(m: &CMat) -> CMat {
    let n = m.nrows();
    CMat::from_fn(n, n, |i, j| (m[(i, j)] + m[(j, i)].conj()) * 0.5)
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac) = (a.nrows(), a.ncols());
    let (br, bc) = (b.nrows(), b.ncols());
    CMat::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

pub fn scale(m: &CMat, s: f64) -> CMat {
    m * faer::Scale(re(s))
}

/// U M U†.
pub fn conjugate(u: &CMat, m: &CMat) -> CMat {
    u * m * u.adjoint()
}

/// Eigendecomposition of the Hermitian part of `m`. Callers that need the
/// input validated use [`eig_hermitian`].
pub fn eigh(m: &CMat) -> Eigh {
    let n = m.nrows();
    if n == 0 {
        return Eigh { values: Vec::new(), vectors: CMat::zeros(0, 0) };
    }
    let h = symmetrized(m);
    let evd = h.self_adjoint_eigen(Side::Lower).expect("self-adjoint eigendecomposition failed");
    let u = evd.U();
    let s = evd.S().column_vector();
    // faer returns ascending order
    let values: Vec<f64> = (0..n).rev().map(|k| s[k].re).collect();
    let vectors = CMat::from_fn(n, n, |i, j| u[(i, n - 1 - j)]);
    Eigh { values, vectors }
}

/// Eigenvalues of the Hermitian part of `m`, descending.
pub fn eigvalsh(m: &CMat) -> Vec<f64> {
    let n = m.nrows();
    if n == 0 {
        return Vec::new();
    }
    let h = symmetrized(m);
    let mut vals: Vec<f64> = h
        .self_adjoint_eigenvalues(Side::Lower)
        .expect("self-adjoint eigenvalue computation failed")
        .into_iter()
        .collect();
    vals.reverse();
    vals
}

pub fn lambda_min(m: &CMat) -> f64 {
    eigvalsh(m).last().copied().unwrap_or(0.0)
}

pub fn lambda_max(m: &CMat) -> f64 {
    eigvalsh(m).first().copied().unwrap_or(0.0)
}

/// V diag(f(lambda)) V† for Hermitian `m`.
pub fn hermitian_fn(m: &CMat, f: impl Fn(f64) -> f64) -> CMat {
    let e = eigh(m);
    reassemble(&e, f)
}

pub fn reassemble(e: &Eigh, f: impl Fn(f64) -> f64) -> CMat {
    let n = e.values.len();
    let w: Vec<f64> = e.values.iter().map(|&x| f(x)).collect();
    let v = &e.vectors;
    let mut out = CMat::zeros(n, n);
    for k in 0..n {
        if w[k] == 0.0 {
            continue;
        }
        for j in 0..n {
            let vjk = v[(j, k)].conj() * w[k];
            for i in 0..n {
                out[(i, j)] += v[(i, k)] * vjk;
            }
        }
    }
    out
}

/// Clamps tiny negative eigenvalues to zero.
pub fn floor_eig(x: f64) -> f64 {
    if x < 0.0 {
        0.0
    } else {
        x
    }
}

pub fn sqrt_psd(m: &CMat) -> CMat {
    hermitian_fn(m, |x| floor_eig(x).sqrt())
}

/// Mixed-radix digits of `index`, most significant first.
pub fn digits(mut index: usize, dims: &[usize]) -> Vec<usize> {
    let mut out = vec![0; dims.len()];
    for k in (0..dims.len()).rev() {
        out[k] = index % dims[k];
        index /= dims[k];
    }
    out
}

pub fn from_digits(ds: &[usize], dims: &[usize]) -> usize {
    ds.iter().zip(dims).fold(0, |acc, (&d, &n)| acc * n + d)
}

/// Partial trace of a raw matrix keeping the factors at `keep` (ascending).
pub fn partial_trace_matrix(m: &CMat, dims: &[usize], keep: &[usize]) -> CMat {
    let total: usize = dims.iter().product();
    let keep_dims: Vec<usize> = keep.iter().map(|&k| dims[k]).collect();
    let drop: Vec<usize> = (0..dims.len()).filter(|k| !keep.contains(k)).collect();
    let drop_dims: Vec<usize> = drop.iter().map(|&k| dims[k]).collect();
    let dk: usize = keep_dims.iter().product();
    let dd: usize = drop_dims.iter().product();
    // strides of each factor in the full index
    let mut strides = vec![1usize; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        strides[k] = strides[k + 1] * dims[k + 1];
    }
    let offset = |local: usize, which: &[usize], wdims: &[usize]| -> usize {
        let ds = digits(local, wdims);
        ds.iter().zip(which).map(|(&d, &k)| d * strides[k]).sum()
    };
    let keep_off: Vec<usize> = (0..dk).map(|x| offset(x, keep, &keep_dims)).collect();
    let drop_off: Vec<usize> = (0..dd).map(|x| offset(x, &drop, &drop_dims)).collect();
    debug_assert_eq!(m.nrows(), total);
    CMat::from_fn(dk, dk, |i, j| {
        let mut s = re(0.0);
        for &t in &drop_off {
            s += m[(keep_off[i] + t, keep_off[j] + t)];
        }
        s
    })
}

/// Reorders tensor factors: output factor k is input factor `order[k]`.
pub fn permute_matrix(m: &CMat, dims: &[usize], order: &[usize]) -> CMat {
    let n = m.nrows();
    let new_dims: Vec<usize> = order.iter().map(|&k| dims[k]).collect();
    // map new index -> old index
    let map: Vec<usize> = (0..n)
        .map(|x| {
            let nd = digits(x, &new_dims);
            let mut od = vec![0; dims.len()];
            for (k, &src) in order.iter().enumerate() {
                od[src] = nd[k];
            }
            from_digits(&od, dims)
        })
        .collect();
    CMat::from_fn(n, n, |i, j| m[(map[i], map[j])])
}

/// Lifts `op` acting on the factors at `positions` (in that order) to the
/// full space, identity elsewhere.
pub fn lift_operator(op: &CMat, dims: &[usize], positions: &[usize]) -> CMat {
    let n: usize = dims.iter().product();
    let local_dims: Vec<usize> = positions.iter().map(|&k| dims[k]).collect();
    let dl: usize = local_dims.iter().product();
    assert_eq!(op.nrows(), dl, "operator does not match the addressed registers");
    let mut out = CMat::zeros(n, n);
    for col in 0..n {
        let cd = digits(col, dims);
        let lc: Vec<usize> = positions.iter().map(|&k| cd[k]).collect();
        let lcol = from_digits(&lc, &local_dims);
        for lrow in 0..dl {
            let v = op[(lrow, lcol)];
            if v == re(0.0) {
                continue;
            }
            let rd = digits(lrow, &local_dims);
            let mut full = cd.clone();
            for (t, &k) in positions.iter().enumerate() {
                full[k] = rd[t];
            }
            out[(from_digits(&full, dims), col)] += v;
        }
    }
    out
}

pub fn tensor(a: &DensityOperator, b: &DensityOperator) -> Result<DensityOperator> {
    let system = a.system.concat(&b.system)?;
    Ok(DensityOperator { system, matrix: kron(&a.matrix, &b.matrix) })
}

pub fn tensor_pure(a: &PureState, b: &PureState) -> Result<PureState> {
    let system = a.system.concat(&b.system)?;
    let mut v = Vec::with_capacity(a.vector.len() * b.vector.len());
    for x in &a.vector {
        for y in &b.vector {
            v.push(*x * *y);
        }
    }
    Ok(PureState { system, vector: v })
}

pub fn partial_trace(op: &DensityOperator, drop: &[&str]) -> Result<DensityOperator> {
    for l in drop {
        op.system.position(l)?;
    }
    let keep_sys = op.system.complement(drop)?;
    let keep: Vec<usize> =
        op.system.labels().iter().enumerate().filter(|(_, l)| !drop.contains(l)).map(|(k, _)| k).collect();
    let m = partial_trace_matrix(&op.matrix, &op.system.dims(), &keep);
    Ok(DensityOperator { system: keep_sys, matrix: m })
}

pub fn permute_registers(op: &DensityOperator, new_order: &[&str]) -> Result<DensityOperator> {
    if new_order.len() != op.system.len() {
        return Err(Error::NotAPermutation);
    }
    let mut order = Vec::with_capacity(new_order.len());
    for l in new_order {
        let p = op.system.position(l).map_err(|_| Error::NotAPermutation)?;
        if order.contains(&p) {
            return Err(Error::NotAPermutation);
        }
        order.push(p);
    }
    let regs = order.iter().map(|&k| op.system.registers[k].clone()).collect();
    let system = RegisterSystem::from_owned(regs)?;
    if order.iter().enumerate().all(|(k, &p)| k == p) {
        return Ok(DensityOperator { system, matrix: op.matrix.clone() });
    }
    let m = permute_matrix(&op.matrix, &op.system.dims(), &order);
    Ok(DensityOperator { system, matrix: m })
}

pub fn eig_hermitian(op: &DensityOperator) -> Result<Eigh> {
    eig_hermitian_matrix(&op.matrix)
}

/// Validated Hermitian eigendecomposition of a raw matrix.
pub fn eig_hermitian_matrix(m: &CMat) -> Result<Eigh> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch { expected: m.nrows(), got: m.ncols() });
    }
    let dev = hermitian_deviation(m);
    if dev > HERMITIAN_TOL {
        return Err(Error::NotHermitian(dev));
    }
    Ok(eigh(m))
}

/// Fidelity ||sqrt(rho) sqrt(sigma)||_1 of PSD matrices (trace not required
/// to be one).
pub fn fidelity_matrices(rho: &CMat, sigma: &CMat) -> f64 {
    let sr = sqrt_psd(rho);
    let m = &sr * sigma * &sr;
    eigvalsh(&m).into_iter().map(|x| floor_eig(x).sqrt()).sum()
}

fn same_dims(a: &DensityOperator, b: &DensityOperator) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), got: b.dim() });
    }
    Ok(())
}

pub fn fidelity(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    same_dims(rho, sigma)?;
    Ok(fidelity_matrices(&rho.matrix, &sigma.matrix).min(1.0))
}

pub fn purified_distance(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    let f = fidelity(rho, sigma)?;
    Ok((1.0 - f * f).max(0.0).sqrt())
}

/// (rho^{1/2} x I)(sum_i |i>|i>) with the mirror register appended.
pub fn canonical_purification(rho: &DensityOperator, mirror_label: &str) -> Result<PureState> {
    let d = rho.dim();
    let mirror = RegisterSystem::single(mirror_label, d)?;
    let system = rho.system.concat(&mirror)?;
    let sr = sqrt_psd(&rho.matrix);
    let mut v = vec![re(0.0); d * d];
    for a in 0..d {
        for i in 0..d {
            v[a * d + i] = sr[(a, i)];
        }
    }
    PureState::normalized(system, v)
}

fn gaussian(rng: &mut ChaCha20Rng) -> C64 {
    let x: f64 = StandardNormal.sample(rng);
    let y: f64 = StandardNormal.sample(rng);
    c(x, y)
}

/// Normalized G G† for a complex Gaussian d×rank matrix G.
pub fn random_density(seed: u64, system: RegisterSystem, rank: usize) -> Result<DensityOperator> {
    let d = system.total_dim();
    if rank == 0 || rank > d {
        return Err(Error::InvalidParameter(format!("rank {rank} outside 1..={d}")));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let g = CMat::from_fn(d, rank, |_, _| gaussian(&mut rng));
    let mut m = &g * g.adjoint();
    let t = trace(&m).re;
    m = scale(&m, 1.0 / t);
    let m = symmetrized(&m);
    Ok(DensityOperator { system, matrix: m })
}

/// Haar-random pure state from a normalized complex Gaussian vector.
pub fn random_pure(seed: u64, system: RegisterSystem) -> PureState {
    let d = system.total_dim();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut v: Vec<C64> = (0..d).map(|_| gaussian(&mut rng)).collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    for z in v.iter_mut() {
        *z /= norm;
    }
    PureState { system, vector: v }
}

/// Haar-random unitary from Gram-Schmidt on a complex Gaussian matrix.
pub fn random_unitary(seed: u64, d: usize) -> CMat {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let g = CMat::from_fn(d, d, |_, _| gaussian(&mut rng));
    gram_schmidt(&g)
}

/// Orthonormalizes the columns of a full-rank square matrix.
pub fn gram_schmidt(g: &CMat) -> CMat {
    let d = g.nrows();
    let mut q = g.clone();
    for j in 0..d {
        for k in 0..j {
            let mut dot = re(0.0);
            for i in 0..d {
                dot += q[(i, k)].conj() * q[(i, j)];
            }
            for i in 0..d {
                let v = q[(i, k)] * dot;
                q[(i, j)] -= v;
            }
        }
        let norm = (0..d).map(|i| q[(i, j)].norm_sqr()).sum::<f64>().sqrt();
        for i in 0..d {
            q[(i, j)] /= norm;
        }
    }
    q
}

/// ||U†U - I||_F.
pub fn unitarity_residual(u: &CMat) -> f64 {
    if u.nrows() != u.ncols() {
        return f64::INFINITY;
    }
    frobenius(&(u.adjoint() * u - identity(u.nrows())))
}

/// Row-major dump: one row per line, entries `re,im` separated by spaces,
/// shortest round-trip decimal.
pub fn dump_matrix(m: &CMat) -> String {
    let mut out = String::new();
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format!("{:?},{:?}", m[(i, j)].re, m[(i, j)].im)).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

pub fn parse_matrix(text: &str) -> Result<CMat> {
    let mut rows: Vec<Vec<C64>> = Vec::new();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let mut row = Vec::new();
        for tok in line.split_whitespace() {
            let (a, b) =
                tok.split_once(',').ok_or_else(|| Error::InvalidParameter(format!("bad matrix entry {tok}")))?;
            let x: f64 = a.parse().map_err(|_| Error::InvalidParameter(format!("bad number {a}")))?;
            let y: f64 = b.parse().map_err(|_| Error::InvalidParameter(format!("bad number {b}")))?;
            row.push(c(x, y));
        }
        rows.push(row);
    }
    let n = rows.len();
    let m = rows.first().map_or(0, |r| r.len());
    if rows.iter().any(|r| r.len() != m) {
        return Err(Error::InvalidParameter("ragged matrix rows".into()));
    }
    Ok(CMat::from_fn(n, m, |i, j| rows[i][j]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sys(regs: &[(&str, usize)]) -> RegisterSystem {
        RegisterSystem::new(regs).unwrap()
    }

    #[test]
    fn register_system_rejects_bad_input() {
        assert!(RegisterSystem::new(&[("A", 0)]).is_err());
        assert!(matches!(RegisterSystem::new(&[("A", 2), ("A", 3)]), Err(Error::LabelCollision(_))));
        let s = sys(&[("A", 2), ("B", 3)]);
        assert_eq!(s.total_dim(), 6);
        assert_eq!(s.dim_of("B").unwrap(), 3);
    }

    #[test]
    fn tensor_of_mixed_states() {
        let a = DensityOperator::maximally_mixed(sys(&[("A", 2)]));
        let b = DensityOperator::maximally_mixed(sys(&[("B", 2)]));
        let ab = tensor(&a, &b).unwrap();
        assert!(max_abs_diff(ab.matrix(), &scale(&identity(4), 0.25)) < 1e-15);
        let k0 = DensityOperator::basis_state(sys(&[("A", 2)]), 0).unwrap();
        let k1 = DensityOperator::basis_state(sys(&[("B", 2)]), 1).unwrap();
        let t = tensor(&k0, &k1).unwrap();
        assert_eq!(t.matrix()[(1, 1)], re(1.0));
        assert!(tensor(&a, &a).is_err());
    }

    #[test]
    fn trace_is_multiplicative() {
        let a = random_density(1, sys(&[("A", 3)]), 2).unwrap();
        let b = random_density(2, sys(&[("B", 2)]), 2).unwrap();
        let t = tensor(&a, &b).unwrap();
        assert!((t.trace() - a.trace() * b.trace()).abs() < 1e-9);
    }

    #[test]
    fn partial_trace_examples() {
        let phi = PureState::maximally_entangled("R", "C", 2).unwrap().density();
        let r = partial_trace(&phi, &["C"]).unwrap();
        assert!(max_abs_diff(r.matrix(), &scale(&identity(2), 0.5)) < 1e-15);
        let a = random_density(3, sys(&[("A", 2)]), 2).unwrap();
        let b = random_density(4, sys(&[("B", 3)]), 3).unwrap();
        let ab = tensor(&a, &b).unwrap();
        let back = partial_trace(&ab, &["B"]).unwrap();
        assert!(frobenius_distance(back.matrix(), a.matrix()) < 1e-12);
        let back_b = partial_trace(&ab, &["A"]).unwrap();
        assert!(frobenius_distance(back_b.matrix(), b.matrix()) < 1e-12);
        let full = partial_trace(&ab, &["A", "B"]).unwrap();
        assert_eq!(full.dim(), 1);
        assert!((full.matrix()[(0, 0)].re - 1.0).abs() < 1e-12);
        assert!(matches!(partial_trace(&ab, &["Z"]), Err(Error::UnknownLabel(_))));
    }

    #[test]
    fn partial_trace_middle_register() {
        let a = random_density(5, sys(&[("A", 2)]), 2).unwrap();
        let b = random_density(6, sys(&[("B", 3)]), 2).unwrap();
        let c_ = random_density(7, sys(&[("C", 2)]), 1).unwrap();
        let abc = tensor(&tensor(&a, &b).unwrap(), &c_).unwrap();
        let ac = partial_trace(&abc, &["B"]).unwrap();
        let expect = tensor(&a, &c_).unwrap();
        assert!(frobenius_distance(ac.matrix(), expect.matrix()) < 1e-12);
        assert_eq!(ac.system().labels(), vec!["A", "C"]);
    }

    #[test]
    fn permute_swaps_factors() {
        let a = random_density(8, sys(&[("A", 2)]), 2).unwrap();
        let b = random_density(9, sys(&[("B", 3)]), 2).unwrap();
        let ab = tensor(&a, &b).unwrap();
        let ba = permute_registers(&ab, &["B", "A"]).unwrap();
        let expect = tensor(&b, &a).unwrap();
        assert!(frobenius_distance(ba.matrix(), expect.matrix()) < 1e-15);
        let same = permute_registers(&ab, &["A", "B"]).unwrap();
        assert_eq!(frobenius_distance(same.matrix(), ab.matrix()), 0.0);
        let back = permute_registers(&ba, &["A", "B"]).unwrap();
        assert_eq!(frobenius_distance(back.matrix(), ab.matrix()), 0.0);
        assert!(permute_registers(&ab, &["A", "A"]).is_err());
        assert!(permute_registers(&ab, &["A"]).is_err());
    }

    #[test]
    fn eigen_examples() {
        let s = sys(&[("A", 2)]);
        let d = DensityOperator::from_diagonal(s, &[0.25, 0.75]).unwrap();
        let e = eig_hermitian(&d).unwrap();
        assert!((e.values[0] - 0.75).abs() < 1e-14 && (e.values[1] - 0.25).abs() < 1e-14);
        let mu = DensityOperator::maximally_mixed(sys(&[("A", 4)]));
        assert!(eig_hermitian(&mu).unwrap().values.iter().all(|x| (x - 0.25).abs() < 1e-14));
        let h = random_density(10, sys(&[("A", 6)]), 6).unwrap();
        let e = eig_hermitian(&h).unwrap();
        assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
        assert!(frobenius_distance(&reassemble(&e, |x| x), h.matrix()) < 1e-8);
        let mut bad = identity(2);
        bad[(0, 1)] = re(1.0);
        assert!(matches!(eig_hermitian_matrix(&bad), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn fidelity_examples() {
        let s = sys(&[("A", 2)]);
        let rho = random_density(11, s.clone(), 2).unwrap();
        assert!((fidelity(&rho, &rho).unwrap() - 1.0).abs() < 1e-9);
        let zero = PureState::new(s.clone(), vec![re(1.0), re(0.0)]).unwrap().density();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let plus = PureState::new(s.clone(), vec![re(h), re(h)]).unwrap().density();
        assert!((fidelity(&zero, &plus).unwrap() - h).abs() < 1e-9);
        let p = DensityOperator::from_diagonal(s.clone(), &[0.5, 0.5]).unwrap();
        let q = DensityOperator::from_diagonal(s.clone(), &[0.9, 0.1]).unwrap();
        let oracle = (0.45f64).sqrt() + (0.05f64).sqrt();
        assert!((fidelity(&p, &q).unwrap() - oracle).abs() < 1e-12);
        assert!((purified_distance(&p, &q).unwrap() - (1.0 - oracle * oracle).sqrt()).abs() < 1e-9);
        let one = PureState::new(s, vec![re(0.0), re(1.0)]).unwrap().density();
        assert!((purified_distance(&zero, &one).unwrap() - 1.0).abs() < 1e-12);
        assert!(purified_distance(&p, &p).unwrap() < 1e-7);
    }

    #[test]
    fn canonical_purification_examples() {
        let mu = DensityOperator::maximally_mixed(sys(&[("A", 2)]));
        let psi = canonical_purification(&mu, "B").unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let v = psi.vector();
        assert!((v[0].re - h).abs() < 1e-12 && (v[3].re - h).abs() < 1e-12);
        assert!(v[1].norm() < 1e-12 && v[2].norm() < 1e-12);
        let k0 = DensityOperator::basis_state(sys(&[("A", 2)]), 0).unwrap();
        let p0 = canonical_purification(&k0, "B").unwrap();
        assert!((p0.vector()[0].re - 1.0).abs() < 1e-12);
        let d = DensityOperator::from_diagonal(sys(&[("A", 2)]), &[0.75, 0.25]).unwrap();
        let pd = canonical_purification(&d, "B").unwrap();
        assert!((pd.vector()[0].re - 0.75f64.sqrt()).abs() < 1e-12);
        assert!((pd.vector()[3].re - 0.25f64.sqrt()).abs() < 1e-12);
        let back = partial_trace(&pd.density(), &["B"]).unwrap();
        assert!(max_abs_diff(back.matrix(), d.matrix()) < 1e-9);
        let rho = random_density(12, sys(&[("A", 3)]), 3).unwrap();
        let pr = canonical_purification(&rho, "M").unwrap();
        let back = partial_trace(&pr.density(), &["M"]).unwrap();
        assert!(max_abs_diff(back.matrix(), rho.matrix()) < 1e-9);
    }

    #[test]
    fn random_states_are_valid_and_deterministic() {
        let s = sys(&[("A", 2), ("B", 2)]);
        let a = random_density(42, s.clone(), 3).unwrap();
        let b = random_density(42, s.clone(), 3).unwrap();
        assert_eq!(dump_matrix(a.matrix()), dump_matrix(b.matrix()));
        let pure = random_density(43, s.clone(), 1).unwrap();
        assert!((pure.purity() - 1.0).abs() < 1e-9);
        let full = random_density(44, s.clone(), 4).unwrap();
        assert!(lambda_min(full.matrix()) > 0.0);
        assert!(random_density(1, s.clone(), 0).is_err());
        assert!(random_density(1, s.clone(), 5).is_err());
        let v = random_pure(45, s.clone());
        let w = random_pure(45, s);
        assert_eq!(v.vector(), w.vector());
        assert!(DensityOperator::new(v.system().clone(), v.density().into_matrix()).is_ok());
    }

    #[test]
    fn density_validation() {
        let s = sys(&[("A", 2)]);
        assert!(DensityOperator::from_diagonal(s.clone(), &[0.5, 0.6]).is_err());
        assert!(DensityOperator::from_diagonal(s.clone(), &[1.5, -0.5]).is_err());
        assert!(DensityOperator::new_subnormalized(s.clone(), diag(&[0.3, 0.2])).is_ok());
        assert!(DensityOperator::new(s, diag(&[0.3, 0.2])).is_err());
    }

    #[test]
    fn lift_matches_kronecker() {
        let u = random_unitary(3, 2);
        let dims = [3, 2, 2];
        let lifted = lift_operator(&u, &dims, &[1]);
        let expect = kron(&kron(&identity(3), &u), &identity(2));
        assert!(frobenius_distance(&lifted, &expect) < 1e-14);
        let two = random_unitary(4, 4);
        let lifted = lift_operator(&two, &[2, 2], &[1, 0]);
        let swap = lift_operator(&identity(4), &[2, 2], &[1, 0]);
        assert!(frobenius_distance(&swap, &identity(4)) < 1e-15);
        let perm = permute_matrix(&two, &[2, 2], &[1, 0]);
        assert!(frobenius_distance(&lifted, &perm) < 1e-14);
    }

    #[test]
    fn dump_round_trips() {
        let u = random_unitary(5, 3);
        let back = parse_matrix(&dump_matrix(&u)).unwrap();
        assert_eq!(max_abs_diff(&u, &back), 0.0);
        assert!(unitarity_residual(&u) < 1e-12);
    }
}
