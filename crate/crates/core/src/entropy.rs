//! Information measures in bits: relative entropy, max-relative entropy,
//! hypothesis-testing relative entropy, conditional min-entropy and
//! max-information, plus numerical checks of standard inequalities.

use std::fmt;

use faer::linalg::solvers::Solve;
use faer::Mat;

use crate::error::{Error, Result};
use crate::linalg::{
    self, adjoint, eigh, eigvalsh, floor_eig, identity, kron, lambda_max, lambda_min, partial_trace_matrix,
    permute_matrix, re, reassemble, trace, trace_product, CMat, DensityOperator, C64,
};

/// Eigenvalues of the reference operator at or below this are outside its support.
pub const SUPPORT_EIG_TOL: f64 = 1e-10;
/// Weight of the first argument outside the reference support tolerated
/// before a quantity is declared infinite.
pub const SUPPORT_LEAK_TOL: f64 = 1e-8;

/// A value in bits, or +infinity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EntropyValue {
    pub value: f64,
    pub finite: bool,
}

impl EntropyValue {
    pub fn finite(value: f64) -> Self {
        Self { value, finite: true }
    }

    pub fn infinite() -> Self {
        Self { value: f64::INFINITY, finite: false }
    }

    pub fn is_finite(&self) -> bool {
        self.finite
    }

    /// The value as a float, +inf when not finite.
    pub fn as_f64(&self) -> f64 {
        if self.finite {
            self.value
        } else {
            f64::INFINITY
        }
    }

    pub fn expect_finite(&self, what: &str) -> Result<f64> {
        if self.finite {
            Ok(self.value)
        } else {
            Err(Error::InvalidState(format!("{what} is infinite (support violation)")))
        }
    }
}

impl fmt::Display for EntropyValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.finite {
            write!(f, "{}", self.value)
        } else {
            write!(f, "inf")
        }
    }
}

fn same_dims(a: &DensityOperator, b: &DensityOperator) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), got: b.dim() });
    }
    Ok(())
}

/// Weight of rho on the eigenvectors of sigma with eigenvalue <= SUPPORT_EIG_TOL.
fn support_leak(rho: &CMat, sigma_eig: &linalg::Eigh) -> f64 {
    let v = &sigma_eig.vectors;
    let n = v.nrows();
    let mut leak = 0.0;
    for (k, &lam) in sigma_eig.values.iter().enumerate() {
        if lam > SUPPORT_EIG_TOL {
            continue;
        }
        let mut acc = re(0.0);
        for i in 0..n {
            let mut row = re(0.0);
            for j in 0..n {
                row += rho[(i, j)] * v[(j, k)];
            }
            acc += v[(i, k)].conj() * row;
        }
        leak += acc.re;
    }
    leak
}

/// Shannon-style sum of -lambda log lambda over the spectrum, in bits.
pub fn entropy_of_spectrum(values: &[f64]) -> f64 {
    values.iter().map(|&x| floor_eig(x)).filter(|&x| x > 0.0).map(|x| -x * x.log2()).sum()
}

pub fn von_neumann_entropy(rho: &DensityOperator) -> f64 {
    entropy_of_spectrum(&eigvalsh(rho.matrix()))
}

/// Tr rho (log rho - log sigma) for PSD matrices.
pub fn relative_entropy_matrices(rho: &CMat, sigma: &CMat) -> EntropyValue {
    let es = eigh(sigma);
    if support_leak(rho, &es) > SUPPORT_LEAK_TOL {
        return EntropyValue::infinite();
    }
    let log_sigma = reassemble(&es, |x| if x > SUPPORT_EIG_TOL { x.log2() } else { 0.0 });
    let neg_h = -entropy_of_spectrum(&eigvalsh(rho));
    EntropyValue::finite(neg_h - trace_product(rho, &log_sigma).re)
}

pub fn relative_entropy(rho: &DensityOperator, sigma: &DensityOperator) -> Result<EntropyValue> {
    same_dims(rho, sigma)?;
    Ok(relative_entropy_matrices(rho.matrix(), sigma.matrix()))
}

/// log lambda_max(sigma^{-1/2} rho sigma^{-1/2}) with the pseudo-inverse on supp(sigma).
pub fn dmax_matrices(rho: &CMat, sigma: &CMat) -> EntropyValue {
    let es = eigh(sigma);
    if support_leak(rho, &es) > SUPPORT_LEAK_TOL {
        return EntropyValue::infinite();
    }
    let s = reassemble(&es, |x| if x > SUPPORT_EIG_TOL { 1.0 / x.sqrt() } else { 0.0 });
    let m = &s * rho * &s;
    EntropyValue::finite(lambda_max(&m).log2())
}

pub fn dmax(rho: &DensityOperator, sigma: &DensityOperator) -> Result<EntropyValue> {
    same_dims(rho, sigma)?;
    Ok(dmax_matrices(rho.matrix(), sigma.matrix()))
}

/// Optimal Neyman-Pearson test and its errors.
#[derive(Clone, Debug)]
pub struct NeymanPearsonTest {
    pub test: CMat,
    pub threshold: f64,
    /// Tr(test * rho)
    pub acceptance: f64,
    /// Tr(test * sigma)
    pub type_two: f64,
}

impl NeymanPearsonTest {
    pub fn dh(&self) -> EntropyValue {
        if self.type_two > 0.0 {
            EntropyValue::finite(-self.type_two.log2())
        } else {
            EntropyValue::infinite()
        }
    }
}

fn positive_projector(rho: &CMat, sigma: &CMat, t: f64, thr: f64) -> (CMat, f64) {
    let diff = rho - sigma * faer::Scale(re(t));
    let e = eigh(&diff);
    let p = reassemble(&e, |x| if x > thr { 1.0 } else { 0.0 });
    let acc = trace_product(&p, rho).re;
    (p, acc)
}

/// Minimizes Tr(P sigma) over 0 <= P <= I with Tr(P rho) >= 1 - eps by
/// bisection on the threshold t of the projector onto the positive part of
/// rho - t sigma. The final test mixes the projectors at both ends of the
/// bracket so the constraint is met with equality.
pub fn neyman_pearson_matrices(rho: &CMat, sigma: &CMat, eps: f64) -> Result<NeymanPearsonTest> {
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::InvalidParameter(format!("eps = {eps} outside [0, 1)")));
    }
    if rho.nrows() != sigma.nrows() {
        return Err(Error::DimensionMismatch { expected: rho.nrows(), got: sigma.nrows() });
    }
    let n = rho.nrows();
    let tr_rho = trace(rho).re;
    let target = (1.0 - eps).min(tr_rho);
    let feas_tol = 1e-12;
    let scale_s = lambda_max(sigma).max(1e-300);
    let thr = |t: f64| 1e-12 * (1.0 + t * scale_s);

    let es = eigh(sigma);
    let s = reassemble(&es, |x| if x > SUPPORT_EIG_TOL { 1.0 / x.sqrt() } else { 0.0 });
    let tmax = lambda_max(&(&s * rho * &s)).max(0.0);
    let mut hi = tmax * (1.0 + 1e-9) + 1e-12;
    let (mut p_hi, mut a_hi) = positive_projector(rho, sigma, hi, thr(hi));
    while a_hi >= target - feas_tol && hi < 1e16 {
        hi *= 8.0;
        let r = positive_projector(rho, sigma, hi, thr(hi));
        p_hi = r.0;
        a_hi = r.1;
    }
    let mut lo = 0.0;
    let (mut p_lo, mut a_lo) = positive_projector(rho, sigma, lo, thr(lo));
    if a_hi >= target - feas_tol {
        // support of rho outside supp(sigma) already carries the required weight
        let type_two = trace_product(&p_hi, sigma).re.max(0.0);
        return Ok(NeymanPearsonTest { test: p_hi, threshold: hi, acceptance: a_hi, type_two });
    }
    for _ in 0..200 {
        if hi - lo < 1e-12 * hi.max(1.0) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let (p, a) = positive_projector(rho, sigma, mid, thr(mid));
        if a >= target - feas_tol {
            lo = mid;
            p_lo = p;
            a_lo = a;
        } else {
            hi = mid;
            p_hi = p;
            a_hi = a;
        }
    }
    let test = if a_lo - a_hi <= 1e-15 {
        p_lo
    } else {
        let w = ((target - a_hi) / (a_lo - a_hi)).clamp(0.0, 1.0);
        &p_hi * faer::Scale(re(1.0 - w)) + &p_lo * faer::Scale(re(w))
    };
    debug_assert_eq!(test.nrows(), n);
    let acceptance = trace_product(&test, rho).re;
    let type_two = trace_product(&test, sigma).re.max(0.0);
    Ok(NeymanPearsonTest { test, threshold: 0.5 * (lo + hi), acceptance, type_two })
}

pub fn neyman_pearson_operator(rho: &DensityOperator, sigma: &DensityOperator, eps: f64) -> Result<NeymanPearsonTest> {
    same_dims(rho, sigma)?;
    neyman_pearson_matrices(rho.matrix(), sigma.matrix(), eps)
}

pub fn dh_eps(rho: &DensityOperator, sigma: &DensityOperator, eps: f64) -> Result<EntropyValue> {
    Ok(neyman_pearson_operator(rho, sigma, eps)?.dh())
}

/// Reorders `rho` so the `a` registers precede the `b` registers; returns the
/// matrix and the two dimensions.
fn split_ab(rho: &DensityOperator, a: &[&str], b: &[&str]) -> Result<(CMat, usize, usize)> {
    let sys = rho.system();
    let mut order = Vec::new();
    for l in a.iter().chain(b.iter()) {
        let p = sys.position(l)?;
        if order.contains(&p) {
            return Err(Error::InvalidParameter(format!("label {l} listed twice")));
        }
        order.push(p);
    }
    if order.len() != sys.len() {
        return Err(Error::InvalidParameter("labels do not partition the system".into()));
    }
    let dims = sys.dims();
    let da: usize = a.iter().map(|l| sys.dim_of(l).unwrap()).product();
    let db: usize = b.iter().map(|l| sys.dim_of(l).unwrap()).product();
    let m = if order.iter().enumerate().all(|(k, &p)| k == p) {
        rho.matrix().clone()
    } else {
        permute_matrix(rho.matrix(), &dims, &order)
    };
    Ok((m, da, db))
}

/// D_max(rho_AB || rho_A x rho_B).
pub fn imax(rho: &DensityOperator, a: &[&str], b: &[&str]) -> Result<EntropyValue> {
    let (m, da, db) = split_ab(rho, a, b)?;
    let ra = partial_trace_matrix(&m, &[da, db], &[0]);
    let rb = partial_trace_matrix(&m, &[da, db], &[1]);
    Ok(dmax_matrices(&m, &kron(&ra, &rb)))
}

/// Solution of min Tr X s.t. I_A x X >= rho_AB.
#[derive(Clone, Debug)]
pub struct HminSolution {
    pub value: EntropyValue,
    pub x_b: CMat,
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
}

fn hermitian_basis(d: usize) -> Vec<CMat> {
    let mut basis = Vec::with_capacity(d * d);
    for i in 0..d {
        let mut m = CMat::zeros(d, d);
        m[(i, i)] = re(1.0);
        basis.push(m);
    }
    for i in 0..d {
        for j in (i + 1)..d {
            let mut m = CMat::zeros(d, d);
            m[(i, j)] = re(1.0);
            m[(j, i)] = re(1.0);
            basis.push(m);
            let mut m = CMat::zeros(d, d);
            m[(i, j)] = C64::new(0.0, 1.0);
            m[(j, i)] = C64::new(0.0, -1.0);
            basis.push(m);
        }
    }
    basis
}

fn inverse_pd(z: &CMat) -> Option<(CMat, f64)> {
    let e = eigh(z);
    if e.values.iter().any(|&x| x <= 0.0) {
        return None;
    }
    let logdet: f64 = e.values.iter().map(|x| x.ln()).sum();
    Some((reassemble(&e, |x| 1.0 / x), logdet))
}

fn solve_real(h: &Mat<f64>, g: &[f64]) -> Vec<f64> {
    let n = g.len();
    let rhs = Mat::<f64>::from_fn(n, 1, |i, _| g[i]);
    let sol = h.partial_piv_lu().solve(&rhs);
    (0..n).map(|i| sol[(i, 0)]).collect()
}

/// Log-barrier Newton method for the conditional min-entropy SDP, with an
/// exactly feasible dual certificate built from the final barrier point.
pub fn hmin_sdp(rho: &DensityOperator, a: &[&str], b: &[&str]) -> Result<HminSolution> {
    let (m, da, db) = split_ab(rho, a, b)?;
    let dim = da * db;
    let basis = hermitian_basis(db);
    let nb = basis.len();
    let lifted: Vec<CMat> = basis.iter().map(|e| kron(&identity(da), e)).collect();
    let tr_basis: Vec<f64> = basis.iter().map(|e| trace(e).re).collect();
    let assemble = |p: &[f64]| -> CMat {
        let mut x = CMat::zeros(db, db);
        for (k, e) in basis.iter().enumerate() {
            x += e * faer::Scale(re(p[k]));
        }
        x
    };
    let lmax = lambda_max(&m).max(1e-12);
    // strictly feasible start on the ray X = c I
    let mut params = vec![0.0; nb];
    params[..db].fill(2.0 * lmax);
    let mut t = 1.0 / lmax;
    let barrier = |p: &[f64], t: f64| -> Option<f64> {
        let x = assemble(p);
        let z = kron(&identity(da), &x) - &m;
        let (_, logdet) = inverse_pd(&z)?;
        let trx: f64 = p.iter().zip(&tr_basis).map(|(a, b)| a * b).sum();
        Some(t * trx - logdet)
    };
    let gap_target = 1e-7;
    loop {
        for _ in 0..100 {
            let x = assemble(&params);
            let z = kron(&identity(da), &x) - &m;
            let (zi, _) = inverse_pd(&z).ok_or_else(|| Error::Numerical("lost feasibility".into()))?;
            let a_k: Vec<CMat> = lifted.iter().map(|l| &zi * l).collect();
            let mut g = vec![0.0; nb];
            for k in 0..nb {
                g[k] = t * tr_basis[k] - trace(&a_k[k]).re;
            }
            let mut h = Mat::<f64>::zeros(nb, nb);
            for k in 0..nb {
                for l in k..nb {
                    let v = trace_product(&a_k[k], &a_k[l]).re;
                    h[(k, l)] = v;
                    h[(l, k)] = v;
                }
            }
            let neg_g: Vec<f64> = g.iter().map(|x| -x).collect();
            let step = solve_real(&h, &neg_g);
            let decrement: f64 = -g.iter().zip(&step).map(|(a, b)| a * b).sum::<f64>();
            if decrement / 2.0 < 1e-12 {
                break;
            }
            let f0 = barrier(&params, t).unwrap();
            let mut s = 1.0;
            loop {
                let cand: Vec<f64> = params.iter().zip(&step).map(|(p, d)| p + s * d).collect();
                if let Some(f1) = barrier(&cand, t) {
                    if f1 <= f0 - 0.25 * s * decrement {
                        params = cand;
                        break;
                    }
                }
                s *= 0.5;
                if s < 1e-14 {
                    break;
                }
            }
            if s < 1e-14 {
                break;
            }
        }
        if dim as f64 / t < gap_target {
            break;
        }
        t *= 5.0;
    }
    let x = assemble(&params);
    let z = kron(&identity(da), &x) - &m;
    let (zi, _) = inverse_pd(&z).ok_or_else(|| Error::Numerical("lost feasibility".into()))?;
    // rescale Z^{-1}/t so its A-marginal is exactly I_B
    let y = &zi * faer::Scale(re(1.0 / t));
    let w = partial_trace_matrix(&y, &[da, db], &[1]);
    let s = linalg::hermitian_fn(&w, |v| 1.0 / floor_eig(v).max(1e-300).sqrt());
    let ls = kron(&identity(da), &s);
    let y_feas = &ls * &y * &ls;
    let primal = trace(&x).re;
    let dual = trace_product(&m, &y_feas).re;
    Ok(HminSolution { value: EntropyValue::finite(-primal.log2()), x_b: x, primal, dual, gap: primal - dual })
}

pub fn hmin(rho: &DensityOperator, a: &[&str], b: &[&str]) -> Result<EntropyValue> {
    Ok(hmin_sdp(rho, a, b)?.value)
}

/// |D(sum p_i rho_i || theta) - sum p_i (D(rho_i||theta) - D(rho_i||rho))|,
/// +inf when a term is infinite.
pub fn check_mixture_identity(states: &[DensityOperator], weights: &[f64], theta: &DensityOperator) -> Result<f64> {
    if states.is_empty() || states.len() != weights.len() {
        return Err(Error::InvalidParameter("states and weights must be nonempty and aligned".into()));
    }
    if weights.iter().any(|&w| w < 0.0) || (weights.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter("weights must form a probability vector".into()));
    }
    let d = theta.dim();
    let mut mix = CMat::zeros(d, d);
    for (s, &w) in states.iter().zip(weights) {
        same_dims(s, theta)?;
        mix += s.matrix() * faer::Scale(re(w));
    }
    let lhs = relative_entropy_matrices(&mix, theta.matrix());
    let mut rhs = 0.0;
    for (s, &w) in states.iter().zip(weights) {
        let a = relative_entropy_matrices(s.matrix(), theta.matrix());
        let b = relative_entropy_matrices(s.matrix(), &mix);
        if !a.finite || !b.finite {
            return Ok(f64::INFINITY);
        }
        rhs += w * (a.value - b.value);
    }
    if !lhs.finite {
        return Ok(f64::INFINITY);
    }
    Ok((lhs.value - rhs).abs())
}

/// U^T, checked against (U x I)|Phi> = (I x U^T)|Phi>.
pub fn transpose_unitary(u: &CMat) -> Result<CMat> {
    let res = linalg::unitarity_residual(u);
    if res > 1e-9 {
        return Err(Error::NotUnitary(res));
    }
    let ut = linalg::transpose(u);
    let r = transpose_trick_residual(u, &ut);
    if r > 1e-9 {
        return Err(Error::Numerical(format!("transpose identity residual {r:e}")));
    }
    Ok(ut)
}

/// ||(U x I)|Phi> - (I x V)|Phi>|| for the maximally entangled |Phi>.
pub fn transpose_trick_residual(u: &CMat, v: &CMat) -> f64 {
    let d = u.nrows();
    let amp = 1.0 / (d as f64).sqrt();
    let mut s = 0.0;
    for a in 0..d {
        for b in 0..d {
            // (U x I)|Phi> has amplitude U[a,b]/sqrt(d) at |a,b>
            let lhs = u[(a, b)] * amp;
            let rhs = v[(b, a)] * amp;
            s += (lhs - rhs).norm_sqr();
        }
    }
    s.sqrt()
}

/// Numerical slack of standard fidelity and entropy inequalities; a
/// nonnegative return value means the inequality holds.
pub mod facts {
    use super::*;

    /// F(rho, sigma) - 2^{-D(rho||sigma)/2}.
    pub fn pinsker_slack(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
        let f = linalg::fidelity(rho, sigma)?;
        let d = relative_entropy(rho, sigma)?;
        Ok(f - (-d.as_f64() / 2.0).exp2())
    }

    /// F(rho, A rho A / Tr(A^2 rho)) - sqrt(Tr(A^2 rho)) for 0 <= A <= I.
    pub fn gentle_measurement_slack(rho: &DensityOperator, a: &CMat) -> Result<f64> {
        let arho_a = a * rho.matrix() * a;
        let p = trace(&arho_a).re;
        if p <= 0.0 {
            return Err(Error::InvalidParameter("measurement annihilates the state".into()));
        }
        let post = &arho_a * faer::Scale(re(1.0 / p));
        let f = linalg::fidelity_matrices(rho.matrix(), &post);
        Ok(f - p.sqrt())
    }

    /// P(rho, sigma) - |sqrt Tr(L rho) - sqrt Tr(L sigma)| for 0 <= L <= I.
    pub fn measurement_continuity_slack(lambda: &CMat, rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
        let p = linalg::purified_distance(rho, sigma)?;
        let a = trace_product(lambda, rho.matrix()).re.max(0.0).sqrt();
        let b = trace_product(lambda, sigma.matrix()).re.max(0.0).sqrt();
        Ok(p - (a - b).abs())
    }

    /// For canonical purifications: returns (|F_AB - Tr sqrt(rho) sqrt(sigma)|,
    /// F_AB - (1 - P(rho_A, sigma_A))).
    pub fn canonical_fidelity(rho: &DensityOperator, sigma: &DensityOperator) -> Result<(f64, f64)> {
        let pr = linalg::canonical_purification(rho, "mirror")?;
        let ps = linalg::canonical_purification(sigma, "mirror")?;
        let overlap: C64 = pr.vector().iter().zip(ps.vector()).fold(re(0.0), |acc, (x, y)| acc + x.conj() * *y);
        let f_ab = overlap.norm();
        let sr = linalg::sqrt_psd(rho.matrix());
        let ss = linalg::sqrt_psd(sigma.matrix());
        let tr = trace(&(&sr * &ss)).re;
        let p = linalg::purified_distance(rho, sigma)?;
        Ok(((f_ab - tr).abs(), f_ab - (1.0 - p)))
    }

    /// lambda_min(c B - A), the slack of A <= c B.
    pub fn operator_le_slack(a: &CMat, b: &CMat, c: f64) -> f64 {
        lambda_min(&(b * faer::Scale(re(c)) - a))
    }

    /// Random 0 < A < I built from a seeded unitary and spectrum in (0.05, 0.95).
    pub fn random_contraction(seed: u64, d: usize) -> CMat {
        use rand::{Rng, SeedableRng};
        let u = linalg::random_unitary(seed, d);
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
        let vals: Vec<f64> = (0..d).map(|_| rng.gen_range(0.05..0.95)).collect();
        &u * linalg::diag(&vals) * adjoint(&u)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{random_density, PureState, RegisterSystem};

    fn qubit() -> RegisterSystem {
        RegisterSystem::single("A", 2).unwrap()
    }

    fn diag_state(p: &[f64]) -> DensityOperator {
        DensityOperator::from_diagonal(RegisterSystem::single("A", p.len()).unwrap(), p).unwrap()
    }

    #[test]
    fn relative_entropy_examples() {
        let mu = DensityOperator::maximally_mixed(qubit());
        assert!(relative_entropy(&mu, &mu).unwrap().value.abs() < 1e-12);
        let zero = DensityOperator::basis_state(qubit(), 0).unwrap();
        assert!((relative_entropy(&zero, &mu).unwrap().value - 1.0).abs() < 1e-12);
        let a = diag_state(&[0.75, 0.25]);
        let oracle = 0.75 * 1.5f64.log2() + 0.25 * 0.5f64.log2();
        assert!((relative_entropy(&a, &mu).unwrap().value - oracle).abs() < 1e-12);
        assert!(!relative_entropy(&mu, &zero).unwrap().finite);
    }

    #[test]
    fn dmax_examples() {
        let r = random_density(1, qubit(), 2).unwrap();
        assert!(dmax(&r, &r).unwrap().value.abs() < 1e-9);
        let phi = PureState::maximally_entangled("R", "C", 2).unwrap().density();
        let mu4 = DensityOperator::maximally_mixed(phi.system().clone());
        assert!((dmax(&phi, &mu4).unwrap().value - 2.0).abs() < 1e-9);
        let a = diag_state(&[0.75, 0.25]);
        let mu = DensityOperator::maximally_mixed(qubit());
        assert!((dmax(&a, &mu).unwrap().value - 1.5f64.log2()).abs() < 1e-12);
        let zero = DensityOperator::basis_state(qubit(), 0).unwrap();
        assert!(!dmax(&mu, &zero).unwrap().finite);
    }

    #[test]
    fn dh_examples() {
        let r = random_density(2, qubit(), 2).unwrap();
        assert!(dh_eps(&r, &r, 0.0).unwrap().value.abs() < 1e-8);
        let p = diag_state(&[0.5, 0.5]);
        let q = diag_state(&[0.9, 0.1]);
        let np = neyman_pearson_operator(&p, &q, 0.5).unwrap();
        assert!((np.dh().value - 10f64.log2()).abs() < 1e-8);
        assert!((np.test[(1, 1)].re - 1.0).abs() < 1e-8 && np.test[(0, 0)].norm() < 1e-8);
        assert!(dh_eps(&p, &q, 1.0).is_err());
        assert!(dh_eps(&p, &q, -0.1).is_err());
    }

    #[test]
    fn dh_at_zero_eps_on_rank_deficient_states() {
        // dh_0 = -log Tr(P_rho sigma)
        let rho = diag_state(&[0.6, 0.4, 0.0]);
        let sigma = diag_state(&[0.2, 0.3, 0.5]);
        let v = dh_eps(&rho, &sigma, 0.0).unwrap();
        assert!((v.value + 0.5f64.log2()).abs() < 1e-8);
    }

    #[test]
    fn neyman_pearson_meets_constraint() {
        let sys = RegisterSystem::single("A", 3).unwrap();
        for seed in 0..10 {
            let rho = random_density(100 + seed, sys.clone(), 3).unwrap();
            let sigma = random_density(200 + seed, sys.clone(), 3).unwrap();
            let np = neyman_pearson_operator(&rho, &sigma, 0.2).unwrap();
            assert!((np.acceptance - 0.8).abs() < 1e-10);
            assert!(lambda_min(&np.test) > -1e-9);
            assert!(lambda_max(&np.test) < 1.0 + 1e-9);
        }
    }

    #[test]
    fn hmin_examples() {
        let mu_a = DensityOperator::maximally_mixed(RegisterSystem::single("A", 2).unwrap());
        let s_b = random_density(3, RegisterSystem::single("B", 2).unwrap(), 2).unwrap();
        let prod = linalg::tensor(&mu_a, &s_b).unwrap();
        let sol = hmin_sdp(&prod, &["A"], &["B"]).unwrap();
        assert!((sol.value.value - 1.0).abs() < 1e-5);
        assert!(sol.gap.abs() < 1e-6);
        let phi = PureState::maximally_entangled("A", "B", 2).unwrap().density();
        assert!((hmin(&phi, &["A"], &["B"]).unwrap().value + 1.0).abs() < 1e-5);
        assert!(hmin(&phi, &["A"], &[]).is_err());
    }

    #[test]
    fn imax_examples() {
        let a = random_density(4, RegisterSystem::single("A", 2).unwrap(), 2).unwrap();
        let b = random_density(5, RegisterSystem::single("B", 3).unwrap(), 2).unwrap();
        let ab = linalg::tensor(&a, &b).unwrap();
        assert!(imax(&ab, &["A"], &["B"]).unwrap().value.abs() < 1e-8);
        let phi = PureState::maximally_entangled("A", "B", 2).unwrap().density();
        assert!((imax(&phi, &["A"], &["B"]).unwrap().value - 2.0).abs() < 1e-9);
    }

    #[test]
    fn mixture_identity_examples() {
        let t = diag_state(&[0.3, 0.7]);
        let r = diag_state(&[0.6, 0.4]);
        assert_eq!(check_mixture_identity(std::slice::from_ref(&r), &[1.0], &t).unwrap(), 0.0);
        let s = diag_state(&[0.1, 0.9]);
        assert!(check_mixture_identity(&[r, s], &[0.4, 0.6], &t).unwrap() < 1e-8);
    }

    #[test]
    fn transpose_examples() {
        let id = identity(3);
        assert!(linalg::max_abs_diff(&transpose_unitary(&id).unwrap(), &id) < 1e-15);
        let mut p = CMat::zeros(3, 3);
        p[(1, 0)] = re(1.0);
        p[(2, 1)] = re(1.0);
        p[(0, 2)] = re(1.0);
        let pt = transpose_unitary(&p).unwrap();
        assert!(linalg::max_abs_diff(&(&pt * &p), &identity(3)) < 1e-15);
        let u = linalg::random_unitary(7, 4);
        let ut = transpose_unitary(&u).unwrap();
        assert!(transpose_trick_residual(&u, &ut) < 1e-9);
        assert!(transpose_unitary(&(&u * faer::Scale(re(2.0)))).is_err());
    }
}
