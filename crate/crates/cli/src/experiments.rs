//! Subcommand experiments. Each resolves its parameters first and returns a
//! job that computes the records.

use std::time::Instant;

use oneshot_qit::circuit::{metrics, swap_fragment, synth_decoupler, verify_decoupler};
use oneshot_qit::coding::{
    ea_channel_code, ea_channel_code_unchecked, position_based_decode_classical,
    position_based_decode_classical_unchecked, position_based_decode_flat, position_based_decode_flat_unchecked,
    redistribution_bounds, CodeParams, QuantumChannel,
};
use oneshot_qit::convex_split::{convex_split_1design, convex_split_classical, PrimeRegister};
use oneshot_qit::entropy::{
    check_mixture_identity, dh_eps, dmax, facts, hmin, imax, relative_entropy, transpose_trick_residual,
    transpose_unitary,
};
use oneshot_qit::error::Error;
use oneshot_qit::field::pairwise_family;
use oneshot_qit::flatten::{
    check_embezzle_upper, check_unembezzle, convex_split_flat_1design, convex_split_flat_classical, harmonic_log_gap,
    purified_delta, purified_embezzle_fidelity, round_spectrum, FlatParams, Rounding,
};
use oneshot_qit::linalg::{
    random_density, random_pure, random_unitary, tensor, tensor_pure, DensityOperator, PureState, RegisterSystem,
};
use rand::RngCore;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::config::{usage, List, Resolver, Usage};
use crate::report::Record;

/// Why a run stopped: bad input (exit 2) or a failed computation (exit 1).
#[derive(Debug)]
pub enum RunError {
    Usage(String),
    Failure(String),
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        match e {
            Error::Numerical(_) => RunError::Failure(e.to_string()),
            _ => RunError::Usage(e.to_string()),
        }
    }
}

pub type Run<T> = std::result::Result<T, RunError>;

pub struct Ctx {
    pub seed: u64,
    pub tol_scale: f64,
    pub timing: bool,
}

impl Ctx {
    /// Seed of the independent stream `id` split from the global seed.
    pub fn stream(&self, id: u64) -> u64 {
        let mut rng = ChaCha20Rng::seed_from_u64(self.seed);
        rng.set_stream(id);
        rng.next_u64()
    }

    pub fn tol(&self, base: f64) -> f64 {
        base * self.tol_scale
    }
}

pub type Job = Box<dyn FnOnce(&Ctx) -> Run<Vec<Record>>>;

/// (subcommand, verified result) pairs printed by --list.
pub const MAPPING: [(&str, &str); 7] = [
    ("entropy", "entropy oracles and the fidelity, measurement, mixture and transpose facts"),
    ("convexsplit", "Heisenberg-Weyl and classical-unitary convex-split decoupling bounds"),
    ("circuit", "reversible circuit for the classical decoupling unitaries"),
    ("flatten", "embezzlement ratio claims and flattened convex splits"),
    ("decode", "position-based decoding success bounds"),
    ("code", "entanglement-assisted channel code over flattened embezzlement"),
    ("bounds", "state redistribution and state merging resource bounds"),
];

pub fn build(command: &str, r: &mut Resolver) -> Usage<Job> {
    match command {
        "entropy" => entropy(r),
        "convexsplit" => convexsplit(r),
        "circuit" => circuit(r),
        "flatten" => flatten(r),
        "decode" => decode(r),
        "code" => code(r),
        "bounds" => bounds(r),
        other => Err(usage(format!("unknown subcommand {other}"))),
    }
}

fn timed(ctx: &Ctx, f: impl FnOnce() -> Run<Record>) -> Run<Record> {
    let start = Instant::now();
    let mut rec = f()?;
    if ctx.timing {
        rec.seconds = Some(start.elapsed().as_secs_f64());
    }
    Ok(rec)
}

fn sys(regs: &[(&str, usize)]) -> Run<RegisterSystem> {
    Ok(RegisterSystem::new(regs)?)
}

fn rc_state(kind: &str, seed: u64, r: usize, c: usize) -> Run<DensityOperator> {
    match kind {
        "random" => Ok(random_density(seed, sys(&[("R", r), ("C", c)])?, r * c)?),
        "pure" => Ok(random_pure(seed, sys(&[("R", r), ("C", c)])?).density()),
        "phi" if r == c => Ok(PureState::maximally_entangled("R", "C", c)?.density()),
        "product" => {
            let a = random_density(seed, sys(&[("R", r)])?, r)?;
            Ok(tensor(&a, &DensityOperator::maximally_mixed(sys(&[("C", c)])?))?)
        }
        _ => Err(RunError::Usage(format!("state {kind:?} is not one of random, pure, phi (|R| = |C|), product"))),
    }
}

fn check_state_kind(kind: &str) -> Usage<()> {
    match kind {
        "random" | "pure" | "phi" | "product" => Ok(()),
        _ => Err(usage(format!("state {kind:?} is not one of random, pure, phi, product"))),
    }
}

fn positive(key: &str, v: usize) -> Usage<usize> {
    if v == 0 {
        Err(usage(format!("{key} must be positive")))
    } else {
        Ok(v)
    }
}

fn closeness(id: &str, got: f64, want: f64, tol: f64) -> Record {
    Record::new(id)
        .float("tolerance", tol)
        .value("computed", got)
        .bound("expected", want)
        .check((got - want).abs() <= tol || (got.is_infinite() && got == want))
}

fn entropy(r: &mut Resolver) -> Usage<Job> {
    let demo = r.flag("demo")?;
    let count: usize = r.get("facts", 0)?;
    if !demo && count == 0 {
        return Err(usage("entropy needs --demo or --facts N"));
    }
    Ok(Box::new(move |ctx| {
        let mut out = Vec::new();
        if demo {
            out.extend(entropy_demo(ctx)?);
        }
        if count > 0 {
            out.extend(entropy_facts(ctx, count)?);
        }
        Ok(out)
    }))
}

fn entropy_demo(ctx: &Ctx) -> Run<Vec<Record>> {
    let q = sys(&[("A", 2)])?;
    let mu = DensityOperator::maximally_mixed(q.clone());
    let zero = DensityOperator::basis_state(q.clone(), 0)?;
    let skew = DensityOperator::from_diagonal(q.clone(), &[0.75, 0.25])?;
    let half = DensityOperator::from_diagonal(q.clone(), &[0.5, 0.5])?;
    let tilted = DensityOperator::from_diagonal(q.clone(), &[0.9, 0.1])?;
    let phi_rc = PureState::maximally_entangled("R", "C", 2)?.density();
    let mu_rc = DensityOperator::maximally_mixed(sys(&[("R", 2), ("C", 2)])?);
    let phi_ab = PureState::maximally_entangled("A", "B", 2)?.density();
    let rho = random_density(ctx.stream(0), sys(&[("A", 3)])?, 3)?;
    let sigma_b = random_density(ctx.stream(1), sys(&[("B", 2)])?, 2)?;
    let product = tensor(&mu, &sigma_b)?;
    let u = random_unitary(ctx.stream(2), 3);
    let t = ctx.tol(1e-9);
    let ts = ctx.tol(1e-5);
    Ok(vec![
        closeness("D(mu||mu)", relative_entropy(&mu, &mu)?.as_f64(), 0.0, t),
        closeness("D(|0>||mu)", relative_entropy(&zero, &mu)?.as_f64(), 1.0, t),
        closeness(
            "D(diag(.75,.25)||mu)",
            relative_entropy(&skew, &mu)?.as_f64(),
            0.75 * 1.5f64.log2() + 0.25 * 0.5f64.log2(),
            t,
        ),
        closeness("Dmax(rho||rho)", dmax(&rho, &rho)?.as_f64(), 0.0, ctx.tol(1e-8)),
        closeness("Dmax(Phi||mu x mu)", dmax(&phi_rc, &mu_rc)?.as_f64(), 2.0, t),
        closeness("Dmax(diag(.75,.25)||mu)", dmax(&skew, &mu)?.as_f64(), 1.5f64.log2(), t),
        closeness("DH_0(rho||rho)", dh_eps(&rho, &rho, 0.0)?.as_f64(), 0.0, ctx.tol(1e-8)),
        closeness(
            "DH_0.5(diag(.5,.5)||diag(.9,.1))",
            dh_eps(&half, &tilted, 0.5)?.as_f64(),
            10f64.log2(),
            ctx.tol(1e-8),
        ),
        closeness("Hmin(A|B) mu x sigma", hmin(&product, &["A"], &["B"])?.as_f64(), 1.0, ts),
        closeness("Hmin(A|B) Phi", hmin(&phi_ab, &["A"], &["B"])?.as_f64(), -1.0, ts),
        closeness("Imax(A:B) product", imax(&product, &["A"], &["B"])?.as_f64(), 0.0, ctx.tol(1e-8)),
        closeness("Imax(A:B) Phi", imax(&phi_ab, &["A"], &["B"])?.as_f64(), 2.0, ctx.tol(1e-8)),
        closeness("mixture single state", check_mixture_identity(std::slice::from_ref(&rho), &[1.0], &rho)?, 0.0, t),
        closeness("transpose trick", transpose_trick_residual(&u, &transpose_unitary(&u)?), 0.0, t),
    ])
}

fn entropy_facts(ctx: &Ctx, count: usize) -> Run<Vec<Record>> {
    let mut worst = [f64::INFINITY; 5];
    let mut residual = [0.0f64; 3];
    for i in 0..count {
        let seed = ctx.stream(100 + i as u64);
        let d = 2 + i % 3;
        let s = sys(&[("A", d)])?;
        let rho = random_density(seed, s.clone(), d)?;
        let sigma = random_density(seed ^ 0x5a5a, s.clone(), d)?;
        let a = facts::random_contraction(seed, d);
        let (gap, slack) = facts::canonical_fidelity(&rho, &sigma)?;
        worst[0] = worst[0].min(facts::pinsker_slack(&rho, &sigma)?);
        worst[1] = worst[1].min(facts::gentle_measurement_slack(&rho, &a)?);
        worst[2] = worst[2].min(facts::measurement_continuity_slack(&a, &rho, &sigma)?);
        worst[3] = worst[3].min(slack);
        residual[0] = residual[0].max(gap);
        let theta = random_density(seed ^ 0xa5a5, s, d)?;
        residual[1] = residual[1].max(check_mixture_identity(&[rho.clone(), sigma.clone()], &[0.3, 0.7], &theta)?);
        let u = random_unitary(seed, d);
        residual[2] = residual[2].max(transpose_trick_residual(&u, &transpose_unitary(&u)?));
        let b = random_density(seed ^ 0x3c3c, sys(&[("B", 2)])?, 2)?;
        let h = hmin(&tensor(&rho, &b)?, &["A"], &["B"])?.as_f64();
        let top = rho.eigenvalues().into_iter().fold(0.0, f64::max);
        worst[4] = worst[4].min(-(h + top.log2()).abs());
    }
    let slack = |id: &str, v: f64, tol: f64| {
        Record::new(id).int("instances", count as i64).value("min_slack", v).bound("floor", -tol).check(v >= -tol)
    };
    let resid = |id: &str, v: f64, tol: f64| {
        Record::new(id).int("instances", count as i64).value("max_residual", v).bound("ceiling", tol).check(v <= tol)
    };
    Ok(vec![
        slack("pinsker", worst[0], ctx.tol(1e-9)),
        slack("gentle measurement", worst[1], ctx.tol(1e-9)),
        slack("measurement continuity", worst[2], ctx.tol(1e-9)),
        slack("canonical purification fidelity", worst[3], ctx.tol(1e-9)),
        resid("canonical overlap identity", residual[0], ctx.tol(1e-9)),
        resid("mixture identity", residual[1], ctx.tol(1e-7)),
        resid("transpose trick", residual[2], ctx.tol(1e-9)),
        slack("hmin product closed form", worst[4], ctx.tol(1e-5)),
    ])
}

fn convexsplit(r: &mut Resolver) -> Usage<Job> {
    let d: usize = r.get("dim-c", 2)?;
    let rd: usize = positive("dim-r", r.get("dim-r", 2)?)?;
    let prime: usize = r.get("prime", 0)?;
    let ladder: List<usize> = r.get("ladder", List(vec![1, 2, 4]))?;
    let states: usize = positive("states", r.get("states", 1)?)?;
    let kind: String = r.get("state", "random".to_string())?;
    check_state_kind(&kind)?;
    let classical = prime > 0;
    if classical {
        PrimeRegister::with_prime(d, prime).map_err(|e| usage(e.to_string()))?;
    } else if !(d >= 2 && d.is_power_of_two()) {
        return Err(usage(format!(
            "Heisenberg-Weyl split needs |C| a power of 2, got {d}; pass --prime for the classical split"
        )));
    }
    let limit = if classical { prime } else { d * d };
    if let Some(&n) = ladder.0.iter().find(|&&n| n == 0 || n > limit) {
        return Err(usage(format!("ladder entry {n} outside 1..={limit}")));
    }
    Ok(Box::new(move |ctx| {
        let mut out = Vec::new();
        for i in 0..states {
            let seed = ctx.stream(i as u64);
            let psi = rc_state(&kind, seed, rd, d)?;
            let mut last = f64::INFINITY;
            for &n in &ladder.0 {
                let rec = timed(ctx, || {
                    let rep = if classical {
                        let reg = PrimeRegister::with_prime(d, prime)?;
                        convex_split_classical(&psi, "C", &reg, &(0..n).collect::<Vec<_>>())?
                    } else {
                        convex_split_1design(&psi, "C", n, &pairwise_family((d * d) as u64)?, seed)?
                    };
                    let rise = rep.achieved_rel_entropy - last.min(f64::MAX);
                    Ok(Record::new(format!("{}/state{i}/N{n}", if classical { "classical" } else { "pauli" }))
                        .int("dim-c", d as i64)
                        .int("prime", prime as i64)
                        .int("N", n as i64)
                        .text("state_seed", seed.to_string())
                        .value("k", rep.k)
                        .value("achieved_rel_entropy", rep.achieved_rel_entropy)
                        .value("achieved_fidelity", rep.achieved_fidelity)
                        .value("rise_from_previous_N", if last.is_finite() { rise } else { 0.0 })
                        .bound("analytic_bound", rep.analytic_bound)
                        .bound("fidelity_sq_bound", rep.fidelity_sq_bound)
                        .check(rep.holds(ctx.tol(1e-7)))
                        .check(!last.is_finite() || rise <= ctx.tol(1e-9)))
                })?;
                last = rec.values.iter().find(|v| v.0 == "achieved_rel_entropy").map(|v| v.1).unwrap_or(last);
                out.push(rec);
            }
        }
        Ok(out)
    }))
}

fn circuit(r: &mut Resolver) -> Usage<Job> {
    let d: usize = r.get("dim-c", 2)?;
    let prime: u64 = r.get("prime", 5)?;
    let l_size: u64 = r.get("l-size", 0)?;
    let verify: String = r.get("verify", "exhaustive".to_string())?;
    if verify != "exhaustive" && verify != "none" {
        return Err(usage(format!("verify {verify:?} is not one of exhaustive, none")));
    }
    PrimeRegister::with_prime(d, prime as usize).map_err(|e| usage(e.to_string()))?;
    let l_size = if l_size == 0 { prime } else { l_size };
    Ok(Box::new(move |ctx| {
        let dec = timed(ctx, || {
            let dec = synth_decoupler(d, prime, l_size)?;
            let m = metrics(&dec.circuit);
            let mut rec = Record::new("decoupler")
                .int("dim-c", d as i64)
                .int("prime", prime as i64)
                .int("l-size", l_size as i64)
                .text("verify", verify.clone())
                .value("size", m.size as f64)
                .value("depth", m.depth as f64)
                .value("ancillas", m.ancilla_count as f64)
                .value("wires", dec.circuit.wires() as f64);
            if verify == "exhaustive" {
                let check = verify_decoupler(&dec)?;
                rec = rec
                    .value("inputs", check.inputs as f64)
                    .value("mismatches", check.mismatches as f64)
                    .value("dirty_ancillas", check.dirty_ancillas as f64)
                    .value("inverse_failures", check.inverse_failures as f64)
                    .bound("expected_inputs", (prime * prime * l_size) as f64)
                    .check(check.passed() && check.inputs as u64 == prime * prime * l_size);
            }
            Ok(rec)
        })?;
        let m = metrics(&swap_fragment());
        let swap = Record::new("swap fragment")
            .value("size", m.size as f64)
            .value("depth", m.depth as f64)
            .bound("expected_size", 3.0)
            .bound("expected_depth", 3.0)
            .check(m.size == 3 && m.depth == 3);
        Ok(vec![dec, swap])
    }))
}

fn flatten(r: &mut Resolver) -> Usage<Job> {
    let mode: String = r.get("mode", "claims".to_string())?;
    match mode.as_str() {
        "claims" => flatten_claims(r),
        "split" | "classical" => flatten_split(r, mode == "classical"),
        _ => Err(usage(format!("mode {mode:?} is not one of claims, split, classical"))),
    }
}

fn flatten_claims(r: &mut Resolver) -> Usage<Job> {
    let a_list: List<usize> = r.get("a", List(vec![2, 4, 8]))?;
    let b_list: List<usize> = r.get("b", List(vec![1, 2, 4]))?;
    let n_list: List<usize> = r.get("n", List(vec![16, 64, 256]))?;
    Ok(Box::new(move |ctx| {
        let mut out = Vec::new();
        for &a in &a_list.0 {
            for &b in &b_list.0 {
                for &n in &n_list.0 {
                    if !(b >= 1 && a >= b && n >= a) {
                        continue;
                    }
                    let up = check_embezzle_upper(a, b, n)?;
                    let down = check_unembezzle(a, b, n, (n + 1) * b)?;
                    let delta = purified_delta(a, b, n);
                    let fid = purified_embezzle_fidelity(a, b, n);
                    let floor = (1.0 - 25.0 * delta).max(0.0).sqrt();
                    let gap = harmonic_log_gap(a, n);
                    out.push(
                        Record::new(format!("a{a}/b{b}/n{n}"))
                            .int("a", a as i64)
                            .int("b", b as i64)
                            .int("n", n as i64)
                            .value("embezzle_ratio", up.ratio)
                            .value("unembezzle_ratio", down.ratio)
                            .value("purified_fidelity", fid)
                            .value("delta", delta)
                            .value("harmonic_log_gap", gap)
                            .bound("embezzle_bound", up.bound)
                            .bound("unembezzle_bound", down.bound)
                            .bound("fidelity_floor", floor)
                            .bound("log_gap_bound", 4.0)
                            .check(up.ratio <= up.bound + ctx.tol(1e-12) && down.holds)
                            .check(fid >= floor - ctx.tol(1e-12) && gap <= 4.0),
                    );
                }
            }
        }
        Ok(out)
    }))
}

fn omega_for(kind: &str, psi: &DensityOperator) -> Run<DensityOperator> {
    match kind {
        "psi" => Ok(psi.marginal(&["C"])?),
        "mu" => Ok(DensityOperator::maximally_mixed(psi.system().subsystem(&["C"])?)),
        _ => Err(RunError::Usage(format!("omega {kind:?} is not one of psi, mu"))),
    }
}

fn flatten_split(r: &mut Resolver, classical: bool) -> Usage<Job> {
    let gamma: f64 = r.get("gamma", 0.5)?;
    let n: usize = r.get("n", 8)?;
    let ladder: List<usize> = r.get("ladder", List(vec![1, 2]))?;
    let states: usize = positive("states", r.get("states", 1)?)?;
    let kind: String = r.get("state", "random".to_string())?;
    let omega: String = r.get("omega", "psi".to_string())?;
    check_state_kind(&kind)?;
    if omega != "psi" && omega != "mu" {
        return Err(usage(format!("omega {omega:?} is not one of psi, mu")));
    }
    if ladder.0.contains(&0) {
        return Err(usage("ladder entries must be positive"));
    }
    Ok(Box::new(move |ctx| {
        let mut out = Vec::new();
        for i in 0..states {
            let seed = ctx.stream(i as u64);
            let psi = rc_state(&kind, seed, 2, 2)?;
            let om = omega_for(&omega, &psi)?;
            let a = round_spectrum(&om, gamma, Rounding::Up)?.e_size();
            let params = FlatParams { gamma, a, n };
            for &size in &ladder.0 {
                out.push(timed(ctx, || {
                    let base =
                        Record::new(format!("{}/state{i}/N{size}", if classical { "classical" } else { "pauli" }))
                            .float("gamma", gamma)
                            .int("a", a as i64)
                            .int("n", n as i64)
                            .int("N", size as i64)
                            .text("state_seed", seed.to_string());
                    if classical {
                        let rep = convex_split_flat_classical(&psi, "C", &om, &params, &(0..size).collect::<Vec<_>>())?;
                        Ok(base
                            .int("prime", rep.prime as i64)
                            .value("achieved_rel_entropy", rep.split.achieved_rel_entropy)
                            .value("marginal_ratio", rep.marginal_ratio)
                            .bound("analytic_bound", rep.split.analytic_bound)
                            .bound("ratio_bound", rep.ratio_bound)
                            .check(rep.holds(ctx.tol(1e-7))))
                    } else {
                        let rep = convex_split_flat_1design(&psi, "C", &om, &params, size, seed)?;
                        Ok(base
                            .value("achieved_rel_entropy", rep.achieved_rel_entropy)
                            .value("achieved_fidelity", rep.achieved_fidelity)
                            .bound("analytic_bound", rep.analytic_bound)
                            .bound("fidelity_sq_bound", rep.fidelity_sq_bound)
                            .check(rep.holds(ctx.tol(1e-7))))
                    }
                })?);
            }
        }
        Ok(out)
    }))
}

fn bc_state(kind: &str, seed: u64, d: usize) -> Run<DensityOperator> {
    match kind {
        "phi" => Ok(PureState::maximally_entangled("B", "C", d)?.density()),
        "random" => Ok(random_density(seed, sys(&[("B", d), ("C", d)])?, 2)?),
        _ => Err(RunError::Usage(format!("state {kind:?} is not one of phi, random"))),
    }
}

fn decode(r: &mut Resolver) -> Usage<Job> {
    let mode: String = r.get("mode", "classical".to_string())?;
    let eps: f64 = r.get("eps", 0.01)?;
    let delta: f64 = r.get("delta", 0.2)?;
    let sizes: List<usize> = r.get("sizes", List(vec![1, 2]))?;
    let kind: String = r.get("state", "phi".to_string())?;
    let d: usize = r.get("dim-c", 2)?;
    let unchecked = r.flag("unchecked")?;
    if mode != "classical" && mode != "flat" {
        return Err(usage(format!("mode {mode:?} is not one of classical, flat")));
    }
    if kind != "phi" && kind != "random" {
        return Err(usage(format!("state {kind:?} is not one of phi, random")));
    }
    if sizes.0.contains(&0) {
        return Err(usage("sizes must be positive"));
    }
    let (prime, gamma, n, d_size, omega) = if mode == "classical" {
        let prime: usize = r.get("prime", 0)?;
        let reg = if prime == 0 { PrimeRegister::new(d) } else { PrimeRegister::with_prime(d, prime) };
        (reg.map_err(|e| usage(e.to_string()))?.prime(), 0.0, 0, 0, String::new())
    } else {
        let gamma: f64 = r.get("gamma", 0.5)?;
        let n: usize = r.get("n", 8)?;
        let d_size: usize = r.get("d-size", 0)?;
        let omega: String = r.get("omega", "mu".to_string())?;
        if omega != "psi" && omega != "mu" {
            return Err(usage(format!("omega {omega:?} is not one of psi, mu")));
        }
        (0, gamma, n, d_size, omega)
    };
    Ok(Box::new(move |ctx| {
        let seed = ctx.stream(0);
        let psi = bc_state(&kind, seed, d)?;
        let mut out = Vec::new();
        for &size in &sizes.0 {
            let labels: Vec<usize> = (0..size).collect();
            out.push(timed(ctx, || {
                let (rep, base) = if mode == "classical" {
                    let reg = PrimeRegister::with_prime(d, prime)?;
                    let rep = if unchecked {
                        position_based_decode_classical_unchecked(&psi, "C", &reg, &labels, eps, delta)?
                    } else {
                        position_based_decode_classical(&psi, "C", &reg, &labels, eps, delta)?
                    };
                    (rep, Record::new(format!("classical/S{size}")).int("prime", prime as i64))
                } else {
                    let om = match omega.as_str() {
                        "psi" => psi.marginal(&["C"])?,
                        _ => DensityOperator::maximally_mixed(sys(&[("C", d)])?),
                    };
                    let a = round_spectrum(&om, gamma, Rounding::Down)?.e_size();
                    let ds = if d_size == 0 { (n + 1) * a } else { d_size };
                    let params = FlatParams { gamma, a, n };
                    let rep = if unchecked {
                        position_based_decode_flat_unchecked(&psi, "C", &om, &params, ds, &labels, eps, delta)?
                    } else {
                        position_based_decode_flat(&psi, "C", &om, &params, ds, &labels, eps, delta)?
                    };
                    let base = Record::new(format!("flat/S{size}"))
                        .float("gamma", gamma)
                        .int("a", a as i64)
                        .int("n", n as i64)
                        .int("d-size", ds as i64);
                    (rep, base)
                };
                Ok(base
                    .float("eps", eps)
                    .float("delta", delta)
                    .int("S", size as i64)
                    .value("min_success", rep.min_success)
                    .value("dh", rep.dh)
                    .value("cap", rep.cap)
                    .value("completeness_residual", rep.completeness_residual)
                    .bound("closed_form_bound", rep.closed_form_bound)
                    .bound("exact_bound", rep.exact_bound)
                    .bound("ratio_bound", rep.ratio_bound)
                    .check(rep.holds(ctx.tol(1e-9)) && rep.completeness_residual <= ctx.tol(1e-8)))
            })?);
        }
        Ok(out)
    }))
}

/// identity, depolarizing:p, dephasing:p or amplitude-damping:g.
pub fn parse_channel(spec: &str, d: usize) -> Usage<QuantumChannel> {
    let (name, arg) = spec.split_once(':').map_or((spec, None), |(n, a)| (n, Some(a)));
    let p = || -> Usage<f64> {
        arg.ok_or_else(|| usage(format!("channel {name} needs a parameter, e.g. {name}:0.1")))?
            .parse::<f64>()
            .map_err(|_| usage(format!("bad channel parameter in {spec:?}")))
    };
    let qubit = |ch: Usage<QuantumChannel>| if d == 2 { ch } else { Err(usage(format!("{name} acts on qubits only"))) };
    let ch = match name {
        "identity" => QuantumChannel::identity(d),
        "depolarizing" => QuantumChannel::depolarizing(d, p()?),
        "dephasing" => return qubit(QuantumChannel::dephasing(p()?).map_err(|e| usage(e.to_string()))),
        "amplitude-damping" => return qubit(QuantumChannel::amplitude_damping(p()?).map_err(|e| usage(e.to_string()))),
        _ => return Err(usage(format!("unknown channel {spec:?}"))),
    };
    ch.map_err(|e| usage(e.to_string()))
}

fn code(r: &mut Resolver) -> Usage<Job> {
    let channel: String = r.get("channel", "identity".to_string())?;
    let da: usize = r.get("dim-a", 2)?;
    let rate: u32 = r.get("rate", 1)?;
    let eps: f64 = r.get("eps", 0.05)?;
    let gamma: f64 = r.get("gamma", 0.5)?;
    let delta_prime: f64 = r.get("delta-prime", 0.5)?;
    let a: usize = r.get("a", 0)?;
    let n: usize = r.get("n", 8)?;
    let d_size: usize = r.get("d-size", 0)?;
    let unchecked = r.flag("unchecked")?;
    let ch = parse_channel(&channel, da)?;
    Ok(Box::new(move |ctx| {
        let psi = PureState::maximally_entangled("A", "R", da)?;
        let lambda = psi.density().marginal(&["A"])?;
        let e_size = round_spectrum(&lambda, gamma, Rounding::Down)?.e_size();
        let a = if a == 0 { e_size } else { a };
        let ds = if d_size == 0 { (n + 1) * e_size } else { d_size };
        let params = CodeParams { rate, eps, gamma, delta_prime, a, n, d_size: ds, seed: ctx.stream(0) };
        let rec = timed(ctx, || {
            let rep = if unchecked {
                ea_channel_code_unchecked(&ch, &psi, "A", &params)?
            } else {
                ea_channel_code(&ch, &psi, "A", &params)?
            };
            let mut rec = Record::new(format!("{}/R{rate}", rep.channel))
                .text("channel", channel.clone())
                .int("rate", rate as i64)
                .float("eps", eps)
                .float("gamma", gamma)
                .float("delta-prime", delta_prime)
                .int("a", a as i64)
                .int("n", n as i64)
                .int("d-size", ds as i64)
                .int("trials", rep.trials as i64)
                .value("dh", rep.dh)
                .value("max_rate", rep.max_rate)
                .value("empirical_max_error", rep.empirical_max_error)
                .value("purified_distance", rep.purified_distance)
                .value("delta", rep.delta)
                .value("entanglement_qubits", rep.entanglement_qubits)
                .bound("general_bound", rep.general_bound)
                .bound("entanglement_budget", rep.entanglement_budget)
                .check(rep.general_holds(ctx.tol(1e-9)) && rep.budget_holds());
            if rep.within_cap {
                rec = rec.bound("analytic_error_bound", rep.analytic_error_bound).check(rep.holds(ctx.tol(1e-9)));
            }
            Ok(rec)
        })?;
        Ok(vec![rec])
    }))
}

fn bounds(r: &mut Resolver) -> Usage<Job> {
    let kind: String = r.get("state", "random".to_string())?;
    let eps: f64 = r.get("eps", 0.1)?;
    let delta: f64 = r.get("delta", 0.05)?;
    if !["product", "phi-rc", "random"].contains(&kind.as_str()) {
        return Err(usage(format!("state {kind:?} is not one of product, phi-rc, random")));
    }
    Ok(Box::new(move |ctx| {
        let zero = |l: &str| {
            PureState::new(
                RegisterSystem::single(l, 2)?,
                vec![oneshot_qit::linalg::re(1.0), oneshot_qit::linalg::re(0.0)],
            )
        };
        let psi = match kind.as_str() {
            "product" => tensor_pure(&tensor_pure(&tensor_pure(&zero("R")?, &zero("A")?)?, &zero("B")?)?, &zero("C")?)?,
            "phi-rc" => {
                tensor_pure(&PureState::maximally_entangled("R", "C", 2)?, &tensor_pure(&zero("A")?, &zero("B")?)?)?
            }
            _ => random_pure(ctx.stream(0), sys(&[("R", 2), ("A", 2), ("B", 2), ("C", 2)])?),
        };
        let rep = redistribution_bounds(&psi.density(), eps, delta)?;
        let at_psi = rep.grid.iter().find(|g| g.0 == "Psi_C").map_or(f64::INFINITY, |g| g.1);
        let mut rec = Record::new(format!("redistribution/{kind}"))
            .float("eps", eps)
            .float("delta", delta)
            .value("communication_qubits", rep.communication_qubits)
            .value("entanglement_qubits", rep.entanglement_qubits)
            .value("merge_communication_qubits", rep.merge_communication_qubits);
        for (label, v) in &rep.grid {
            rec = rec.value(&format!("communication[{label}]"), *v);
        }
        Ok(vec![rec.bound("communication_at_psi_c", at_psi).check(rep.communication_qubits <= at_psi)])
    }))
}
