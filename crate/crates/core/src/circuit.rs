//! Reversible circuits over X, CNOT and Toffoli gates: modular arithmetic
//! fragments and the controlled decoupling unitary U = W2 S W1 acting on
//! |i>|j>|l> as (i, j) -> (i + (j - i) l, j + (j - i) l) mod |G|.
//!
//! Registers are little-endian wire lists. Arithmetic uses Cuccaro ripple
//! adders; modular reduction is a compare-and-conditional-subtract against a
//! constant register.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::field::is_prime;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Gate {
    X(usize),
    Cnot { control: usize, target: usize },
    Toffoli { c1: usize, c2: usize, target: usize },
}

impl Gate {
    pub fn wires(&self) -> Vec<usize> {
        match *self {
            Gate::X(t) => vec![t],
            Gate::Cnot { control, target } => vec![control, target],
            Gate::Toffoli { c1, c2, target } => vec![c1, c2, target],
        }
    }

    pub fn target(&self) -> usize {
        match *self {
            Gate::X(t) | Gate::Cnot { target: t, .. } | Gate::Toffoli { target: t, .. } => t,
        }
    }

    fn validate(&self, wires: usize) -> Result<()> {
        let w = self.wires();
        if w.iter().any(|&x| x >= wires) {
            return Err(Error::InvalidParameter(format!("gate {self} addresses a wire >= {wires}")));
        }
        for a in 0..w.len() {
            for b in a + 1..w.len() {
                if w[a] == w[b] {
                    return Err(Error::InvalidParameter(format!("gate {self} repeats a wire")));
                }
            }
        }
        Ok(())
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Gate::X(t) => write!(f, "X {t}"),
            Gate::Cnot { control, target } => write!(f, "CNOT {control} {target}"),
            Gate::Toffoli { c1, c2, target } => write!(f, "TOF {c1} {c2} {target}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Role {
    G1,
    G2,
    L,
    /// Work register returned to 0, e.g. the primed copies G1', G2'.
    Ancilla,
    /// Arithmetic scratch returned to 0.
    Scratch,
    /// Data wire of a standalone fragment.
    Data,
}

impl Role {
    fn as_str(&self) -> &'static str {
        match self {
            Role::G1 => "g1",
            Role::G2 => "g2",
            Role::L => "l",
            Role::Ancilla => "anc",
            Role::Scratch => "scratch",
            Role::Data => "data",
        }
    }

    fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "g1" => Role::G1,
            "g2" => Role::G2,
            "l" => Role::L,
            "anc" => Role::Ancilla,
            "scratch" => Role::Scratch,
            "data" => Role::Data,
            other => return Err(Error::InvalidParameter(format!("unknown wire role {other:?}"))),
        })
    }

    /// Wires that start at 0 and must end at 0.
    pub fn is_clean(&self) -> bool {
        matches!(self, Role::Ancilla | Role::Scratch)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReversibleCircuit {
    roles: Vec<Role>,
    gates: Vec<Gate>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CircuitMetrics {
    pub size: usize,
    pub depth: usize,
    pub ancilla_count: usize,
}

impl ReversibleCircuit {
    pub fn new(roles: Vec<Role>, gates: Vec<Gate>) -> Result<Self> {
        for g in &gates {
            g.validate(roles.len())?;
        }
        Ok(Self { roles, gates })
    }

    pub fn wires(&self) -> usize {
        self.roles.len()
    }

    pub fn roles(&self) -> &[Role] {
        &self.roles
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    /// Gates in reverse order; every gate is self-inverse.
    pub fn inverse(&self) -> Self {
        Self { roles: self.roles.clone(), gates: self.gates.iter().rev().copied().collect() }
    }

    pub fn clean_wires(&self) -> Vec<usize> {
        (0..self.wires()).filter(|&w| self.roles[w].is_clean()).collect()
    }

    /// Basis-state update on a packed word (wire k is bit k).
    pub fn run_word(&self, mut state: u128) -> u128 {
        assert!(self.wires() <= 128, "packed simulation supports at most 128 wires");
        for g in &self.gates {
            match *g {
                Gate::X(t) => state ^= 1 << t,
                Gate::Cnot { control, target } => state ^= ((state >> control) & 1) << target,
                Gate::Toffoli { c1, c2, target } => {
                    state ^= ((state >> c1) & (state >> c2) & 1) << target;
                }
            }
        }
        state
    }

    pub fn to_text(&self) -> String {
        let roles: Vec<&str> = self.roles.iter().map(|r| r.as_str()).collect();
        let mut out = format!("wires={} roles={}\n", self.wires(), roles.join(","));
        for g in &self.gates {
            out.push_str(&g.to_string());
            out.push('\n');
        }
        out
    }
}

impl FromStr for ReversibleCircuit {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let bad = |msg: String| Error::InvalidParameter(msg);
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| bad("empty circuit text".into()))?;
        let (w, r) = header
            .strip_prefix("wires=")
            .and_then(|rest| rest.split_once(" roles="))
            .ok_or_else(|| bad(format!("malformed header {header:?}")))?;
        let wires: usize = w.parse().map_err(|_| bad(format!("bad wire count {w:?}")))?;
        let roles: Vec<Role> =
            if r.is_empty() { Vec::new() } else { r.split(',').map(Role::parse).collect::<Result<_>>()? };
        if roles.len() != wires {
            return Err(bad(format!("{} roles for {wires} wires", roles.len())));
        }
        let mut gates = Vec::new();
        for line in lines.filter(|l| !l.trim().is_empty()) {
            let p: Vec<&str> = line.split_whitespace().collect();
            let n = |s: &str| s.parse::<usize>().map_err(|_| bad(format!("bad wire in {line:?}")));
            let g = match p.as_slice() {
                ["X", t] => Gate::X(n(t)?),
                ["CNOT", c, t] => Gate::Cnot { control: n(c)?, target: n(t)? },
                ["TOF", a, b, t] => Gate::Toffoli { c1: n(a)?, c2: n(b)?, target: n(t)? },
                _ => return Err(bad(format!("unrecognized gate line {line:?}"))),
            };
            gates.push(g);
        }
        Self::new(roles, gates)
    }
}

/// Classical simulation of a basis input.
pub fn simulate_basis(circuit: &ReversibleCircuit, input: &[bool]) -> Result<Vec<bool>> {
    if input.len() != circuit.wires() {
        return Err(Error::DimensionMismatch { expected: circuit.wires(), got: input.len() });
    }
    let mut s = input.to_vec();
    for g in circuit.gates() {
        match *g {
            Gate::X(t) => s[t] = !s[t],
            Gate::Cnot { control, target } => s[target] ^= s[control],
            Gate::Toffoli { c1, c2, target } => s[target] ^= s[c1] && s[c2],
        }
    }
    Ok(s)
}

/// Size, ASAP depth and number of wires that must be restored to 0.
pub fn metrics(circuit: &ReversibleCircuit) -> CircuitMetrics {
    let mut level = vec![0usize; circuit.wires()];
    let mut depth = 0;
    for g in circuit.gates() {
        let w = g.wires();
        let l = w.iter().map(|&x| level[x]).max().unwrap_or(0) + 1;
        for x in w {
            level[x] = l;
        }
        depth = depth.max(l);
    }
    CircuitMetrics { size: circuit.gates().len(), depth, ancilla_count: circuit.clean_wires().len() }
}

/// Bits needed for residues modulo `modulus`.
pub fn word_width(modulus: u64) -> usize {
    (64 - (modulus - 1).leading_zeros() as usize).max(1)
}

/// Shared arithmetic scratch. All wires are 0 between operations.
#[derive(Clone, Debug)]
struct Scratch {
    /// Top bit extending a target register to w + 1 bits.
    top: usize,
    /// Constant register for the modulus or a loaded constant.
    k: Vec<usize>,
    /// Constant register used by the reduction inside modular addition.
    kp: Vec<usize>,
    flag: usize,
    carry: usize,
}

/// Gate list builder with wire allocation.
pub struct CircuitBuilder {
    roles: Vec<Role>,
    gates: Vec<Gate>,
}

impl Default for CircuitBuilder {
    fn default() -> Self {
        Self::new()
    }
}

impl CircuitBuilder {
    pub fn new() -> Self {
        Self { roles: Vec::new(), gates: Vec::new() }
    }

    pub fn alloc(&mut self, n: usize, role: Role) -> Vec<usize> {
        let start = self.roles.len();
        self.roles.extend(std::iter::repeat(role).take(n));
        (start..start + n).collect()
    }

    pub fn x(&mut self, t: usize) {
        self.gates.push(Gate::X(t));
    }

    pub fn cnot(&mut self, control: usize, target: usize) {
        self.gates.push(Gate::Cnot { control, target });
    }

    pub fn toffoli(&mut self, c1: usize, c2: usize, target: usize) {
        self.gates.push(Gate::Toffoli { c1, c2, target });
    }

    pub fn mark(&self) -> usize {
        self.gates.len()
    }

    /// Appends the inverse of the gates recorded since `from`.
    pub fn undo_since(&mut self, from: usize) {
        let tail: Vec<Gate> = self.gates[from..].iter().rev().copied().collect();
        self.gates.extend(tail);
    }

    /// Three-CNOT exchange of two wires.
    pub fn swap(&mut self, a: usize, b: usize) {
        self.cnot(a, b);
        self.cnot(b, a);
        self.cnot(a, b);
    }

    pub fn copy(&mut self, src: &[usize], dst: &[usize]) {
        for (&s, &d) in src.iter().zip(dst) {
            self.cnot(s, d);
        }
    }

    fn load_constant(&mut self, value: u64, reg: &[usize], control: Option<usize>) {
        for (k, &w) in reg.iter().enumerate() {
            if (value >> k) & 1 == 1 {
                match control {
                    Some(c) => self.cnot(c, w),
                    None => self.x(w),
                }
            }
        }
    }

    /// Cuccaro adder: b <- a + b mod 2^n, carry_out ^= carry; `carry_in` is 0.
    fn add(&mut self, a: &[usize], b: &[usize], carry_in: usize, carry_out: usize) {
        self.ripple(a, b, carry_in, Some(carry_out));
    }

    fn ripple(&mut self, a: &[usize], b: &[usize], carry_in: usize, carry_out: Option<usize>) {
        let n = a.len();
        assert_eq!(n, b.len());
        let prev = |k: usize| if k == 0 { carry_in } else { a[k - 1] };
        for k in 0..n {
            // MAJ(prev, b_k, a_k)
            self.cnot(a[k], b[k]);
            self.cnot(a[k], prev(k));
            self.toffoli(prev(k), b[k], a[k]);
        }
        if let Some(z) = carry_out {
            self.cnot(a[n - 1], z);
        }
        for k in (0..n).rev() {
            // UMA(prev, b_k, a_k)
            self.toffoli(prev(k), b[k], a[k]);
            self.cnot(a[k], prev(k));
            self.cnot(prev(k), b[k]);
        }
    }

    /// Exact (n+1)-bit subtraction (b, top) <- (b, top) - a.
    fn sub(&mut self, a: &[usize], b: &[usize], carry_in: usize, top: usize) {
        let from = self.mark();
        self.add(a, b, carry_in, top);
        let fwd: Vec<Gate> = self.gates.drain(from..).collect();
        self.gates.extend(fwd.into_iter().rev());
    }

    /// y <- (y + x) mod p for residues x, y; x unchanged.
    fn mod_add(&mut self, p: u64, x: &[usize], y: &[usize], s: &Scratch) {
        if p == 1 << y.len() {
            self.ripple(x, y, s.carry, None);
            return;
        }
        self.add(x, y, s.carry, s.top);
        self.load_constant(p, &s.kp, None);
        self.sub(&s.kp, y, s.carry, s.top);
        self.load_constant(p, &s.kp, None);
        // top = 1 iff y + x < p
        self.cnot(s.top, s.flag);
        self.load_constant(p, &s.kp, Some(s.flag));
        self.add(&s.kp, y, s.carry, s.top);
        self.load_constant(p, &s.kp, Some(s.flag));
        // flag = 1 iff the sum did not wrap iff result >= x
        self.sub(x, y, s.carry, s.top);
        self.cnot(s.top, s.flag);
        self.add(x, y, s.carry, s.top);
        self.x(s.flag);
    }

    /// In-place doubling of the residue held on `reg` with zero wire `spare`;
    /// returns the new (register, spare) assignment.
    fn mod_double(&mut self, p: u64, reg: &[usize], spare: usize, s: &Scratch) -> (Vec<usize>, usize) {
        assert!(p % 2 == 1, "doubling needs an odd modulus");
        // shifting left is a relabeling: spare becomes the LSB
        let mut wide = vec![spare];
        wide.extend_from_slice(reg);
        let top = wide.pop().expect("nonempty register");
        self.load_constant(p, &s.kp, None);
        self.sub(&s.kp, &wide, s.carry, top);
        self.load_constant(p, &s.kp, None);
        self.cnot(top, s.flag);
        self.load_constant(p, &s.kp, Some(s.flag));
        self.add(&s.kp, &wide, s.carry, top);
        self.load_constant(p, &s.kp, Some(s.flag));
        // 2y is even, 2y - p is odd: flag = 1 iff the LSB is 0
        self.cnot(wide[0], s.flag);
        self.x(s.flag);
        (wide, top)
    }

    /// y <- y + l x mod p for the residue x, with l given by its bits.
    /// `z`, `spare` and `u` are zero registers of x's width (plus one wire).
    #[allow(clippy::too_many_arguments)]
    fn mod_mac(
        &mut self,
        p: u64,
        l: &[usize],
        x: &[usize],
        y: &[usize],
        z: &[usize],
        spare: usize,
        u: &[usize],
        s: &Scratch,
    ) {
        let copy_start = self.mark();
        self.copy(x, z);
        let copy_end = self.mark();
        let mut reg = z.to_vec();
        let mut sp = spare;
        let mut doublings = Vec::new();
        for (t, &bit) in l.iter().enumerate() {
            for (&zi, &ui) in reg.iter().zip(u) {
                self.toffoli(bit, zi, ui);
            }
            self.mod_add(p, u, y, s);
            for (&zi, &ui) in reg.iter().zip(u) {
                self.toffoli(bit, zi, ui);
            }
            if t + 1 < l.len() {
                let from = self.mark();
                let (r, n) = self.mod_double(p, &reg, sp, s);
                doublings.push((from, self.mark()));
                reg = r;
                sp = n;
            }
        }
        for &(from, to) in doublings.iter().rev() {
            let seg: Vec<Gate> = self.gates[from..to].iter().rev().copied().collect();
            self.gates.extend(seg);
        }
        let seg: Vec<Gate> = self.gates[copy_start..copy_end].to_vec();
        self.gates.extend(seg);
    }

    pub fn finish(self) -> ReversibleCircuit {
        ReversibleCircuit { roles: self.roles, gates: self.gates }
    }
}

fn alloc_scratch(b: &mut CircuitBuilder, w: usize) -> Scratch {
    let top = b.alloc(1, Role::Scratch)[0];
    let k = b.alloc(w, Role::Scratch);
    let kp = b.alloc(w, Role::Scratch);
    let flag = b.alloc(1, Role::Scratch)[0];
    let carry = b.alloc(1, Role::Scratch)[0];
    Scratch { top, k, kp, flag, carry }
}

fn check_wires(modulus: u64, regs: &[&[usize]]) -> Result<usize> {
    if modulus < 2 {
        return Err(Error::InvalidParameter(format!("modulus {modulus} < 2")));
    }
    let w = word_width(modulus);
    let mut seen = std::collections::HashSet::new();
    for r in regs {
        if r.len() != w {
            return Err(Error::DimensionMismatch { expected: w, got: r.len() });
        }
        for &x in r.iter() {
            if !seen.insert(x) {
                return Err(Error::InvalidParameter(format!("wire {x} used twice")));
            }
        }
    }
    Ok(w)
}

fn data_builder(regs: &[&[usize]]) -> CircuitBuilder {
    let n = regs.iter().flat_map(|r| r.iter()).max().map_or(0, |m| m + 1);
    let mut b = CircuitBuilder::new();
    b.alloc(n, Role::Data);
    b
}

/// |x>|y> -> |x>|(y + x) mod modulus> on residues, scratch appended after
/// the highest addressed wire.
pub fn synth_mod_add(modulus: u64, target: &[usize], addend: &[usize]) -> Result<ReversibleCircuit> {
    let w = check_wires(modulus, &[target, addend])?;
    let mut b = data_builder(&[target, addend]);
    let s = alloc_scratch(&mut b, w);
    b.mod_add(modulus, addend, target, &s);
    Ok(b.finish())
}

/// |x> -> |c x mod modulus> in place for prime `modulus` and invertible c.
pub fn synth_mod_mul_const(modulus: u64, c: u64, target: &[usize]) -> Result<ReversibleCircuit> {
    let w = check_wires(modulus, &[target])?;
    if !is_prime(modulus) {
        return Err(Error::InvalidParameter(format!("modulus {modulus} is not prime")));
    }
    let c = c % modulus;
    if c == 0 {
        return Err(Error::InvalidParameter(format!("{c} is not invertible mod {modulus}")));
    }
    let field = crate::field::Field::Prime(modulus);
    let c_inv = field.inv(c).expect("nonzero residue");
    let mut b = data_builder(&[target]);
    let y = b.alloc(w, Role::Ancilla);
    let s = alloc_scratch(&mut b, w);
    // y += sum_t x_t (c 2^t mod p)
    for (t, &bit) in target.iter().enumerate() {
        let k = c * ((1u64 << t) % modulus) % modulus;
        b.load_constant(k, &s.k, Some(bit));
        b.mod_add(modulus, &s.k, &y, &s);
        b.load_constant(k, &s.k, Some(bit));
    }
    // x -= sum_t y_t (c^{-1} 2^t mod p), leaving x = 0
    for (t, &bit) in y.iter().enumerate() {
        let k = c_inv * ((1u64 << t) % modulus) % modulus;
        b.load_constant(k, &s.k, Some(bit));
        let from = b.mark();
        b.mod_add(modulus, &s.k, target, &s);
        let fwd: Vec<Gate> = b.gates.drain(from..).collect();
        b.gates.extend(fwd.into_iter().rev());
        b.load_constant(k, &s.k, Some(bit));
    }
    for (&x, &yk) in target.iter().zip(&y) {
        b.swap(x, yk);
    }
    Ok(b.finish())
}

/// Two-wire exchange as a standalone circuit.
pub fn swap_fragment() -> ReversibleCircuit {
    let mut b = CircuitBuilder::new();
    let w = b.alloc(2, Role::Data);
    b.swap(w[0], w[1]);
    b.finish()
}

/// Controlled decoupler with its register layout.
#[derive(Clone, Debug)]
pub struct Decoupler {
    pub circuit: ReversibleCircuit,
    pub g: u64,
    pub l_size: u64,
    pub g1: Vec<usize>,
    pub g2: Vec<usize>,
    pub l: Vec<usize>,
}

fn pack(reg: &[usize], value: u64) -> u128 {
    reg.iter().enumerate().fold(0, |acc, (k, &w)| acc | (((value >> k) & 1) as u128) << w)
}

fn unpack(reg: &[usize], state: u128) -> u64 {
    reg.iter().enumerate().fold(0, |acc, (k, &w)| acc | (((state >> w) & 1) as u64) << k)
}

impl Decoupler {
    /// Runs the circuit on |i>|j>|l>|0...0>: returns (i', j', l') and whether
    /// every clean wire came back to 0.
    pub fn apply(&self, i: u64, j: u64, l: u64) -> (u64, u64, u64, bool) {
        let input = pack(&self.g1, i) | pack(&self.g2, j) | pack(&self.l, l);
        let out = self.circuit.run_word(input);
        let clean = self.circuit.clean_wires().iter().all(|&w| (out >> w) & 1 == 0);
        (unpack(&self.g1, out), unpack(&self.g2, out), unpack(&self.l, out), clean)
    }
}

/// U = W2 S W1 with W1 writing (i + l d, j + l d), d = j - i, into fresh
/// registers, S the register swap, and W2 clearing the old values through
/// i = (l + 1) i' - l j' and j = l i' + (1 - l) j', i.e. i = i' - l d',
/// j = j' - l d' with d' = j' - i' = d.
pub fn synth_decoupler(c_dim: usize, g: u64, l_size: u64) -> Result<Decoupler> {
    if !is_prime(g) {
        return Err(Error::InvalidParameter(format!("|G| = {g} is not prime")));
    }
    if g % 2 == 0 {
        return Err(Error::InvalidParameter("|G| must be odd".into()));
    }
    if ((c_dim * c_dim) as u64) > g {
        return Err(Error::InvalidParameter(format!("|G| = {g} < |C|^2 = {}", c_dim * c_dim)));
    }
    if l_size == 0 || l_size > g {
        return Err(Error::InvalidParameter(format!("L size {l_size} outside 1..={g}")));
    }
    let w = word_width(g);
    let wl = word_width(l_size);
    let mut b = CircuitBuilder::new();
    let g1 = b.alloc(w, Role::G1);
    let g2 = b.alloc(w, Role::G2);
    let l = b.alloc(wl, Role::L);
    let g1p = b.alloc(w, Role::Ancilla);
    let g2p = b.alloc(w, Role::Ancilla);
    let dd = b.alloc(w, Role::Ancilla);
    let z = b.alloc(w, Role::Scratch);
    let spare = b.alloc(1, Role::Scratch)[0];
    let u = b.alloc(w, Role::Scratch);
    let s = alloc_scratch(&mut b, w);

    let diff = |b: &mut CircuitBuilder, hi: &[usize], lo: &[usize]| -> usize {
        // dd <- hi - lo mod g
        let from = b.mark();
        b.copy(hi, &dd);
        let sub_from = b.mark();
        b.mod_add(g, lo, &dd, &s);
        let fwd: Vec<Gate> = b.gates.drain(sub_from..).collect();
        b.gates.extend(fwd.into_iter().rev());
        from
    };

    // W1
    let from = diff(&mut b, &g2, &g1);
    let to = b.mark();
    b.copy(&g1, &g1p);
    b.mod_mac(g, &l, &dd, &g1p, &z, spare, &u, &s);
    b.copy(&g2, &g2p);
    b.mod_mac(g, &l, &dd, &g2p, &z, spare, &u, &s);
    let seg: Vec<Gate> = b.gates[from..to].iter().rev().copied().collect();
    b.gates.extend(seg);

    // S
    for k in 0..w {
        b.swap(g1[k], g1p[k]);
        b.swap(g2[k], g2p[k]);
    }

    // W2
    let from = diff(&mut b, &g2, &g1);
    let to = b.mark();
    for (target, prime) in [(&g1p, &g1), (&g2p, &g2)] {
        let sub_from = b.mark();
        b.mod_add(g, prime, target, &s);
        let fwd: Vec<Gate> = b.gates.drain(sub_from..).collect();
        b.gates.extend(fwd.into_iter().rev());
        b.mod_mac(g, &l, &dd, target, &z, spare, &u, &s);
    }
    let seg: Vec<Gate> = b.gates[from..to].iter().rev().copied().collect();
    b.gates.extend(seg);

    Ok(Decoupler { circuit: b.finish(), g, l_size, g1, g2, l })
}

/// Exhaustive comparison against the u_ell table over all valid (i, j, l).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DecouplerCheck {
    pub inputs: usize,
    pub mismatches: usize,
    pub dirty_ancillas: usize,
    pub inverse_failures: usize,
}

impl DecouplerCheck {
    pub fn passed(&self) -> bool {
        self.mismatches == 0 && self.dirty_ancillas == 0 && self.inverse_failures == 0
    }
}

pub fn verify_decoupler(dec: &Decoupler) -> Result<DecouplerCheck> {
    let g = dec.g as usize;
    let inverse = dec.circuit.inverse();
    let mut check = DecouplerCheck { inputs: 0, mismatches: 0, dirty_ancillas: 0, inverse_failures: 0 };
    for l in 0..dec.l_size {
        let table = crate::convex_split::u_ell(l as usize, g)?;
        for i in 0..dec.g {
            for j in 0..dec.g {
                check.inputs += 1;
                let (ip, jp, lp, clean) = dec.apply(i, j, l);
                let want = table[i as usize * g + j as usize];
                if (ip as usize * g + jp as usize) != want || lp != l {
                    check.mismatches += 1;
                }
                if !clean {
                    check.dirty_ancillas += 1;
                }
                let input = pack(&dec.g1, i) | pack(&dec.g2, j) | pack(&dec.l, l);
                if inverse.run_word(dec.circuit.run_word(input)) != input {
                    check.inverse_failures += 1;
                }
            }
        }
    }
    Ok(check)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_fragment(c: &ReversibleCircuit, regs: &[(&[usize], u64)]) -> u128 {
        let input = regs.iter().fold(0, |acc, (r, v)| acc | pack(r, *v));
        c.run_word(input)
    }

    #[test]
    fn simulate_examples() {
        let empty = ReversibleCircuit::new(vec![Role::Data; 2], vec![]).unwrap();
        assert_eq!(simulate_basis(&empty, &[true, false]).unwrap(), vec![true, false]);
        let x = ReversibleCircuit::new(vec![Role::Data], vec![Gate::X(0)]).unwrap();
        assert_eq!(simulate_basis(&x, &[false]).unwrap(), vec![true]);
        let t = ReversibleCircuit::new(vec![Role::Data; 3], vec![Gate::Toffoli { c1: 0, c2: 1, target: 2 }]).unwrap();
        assert_eq!(simulate_basis(&t, &[true, true, false]).unwrap(), vec![true, true, true]);
        assert!(simulate_basis(&t, &[true]).is_err());
        assert!(ReversibleCircuit::new(vec![Role::Data; 2], vec![Gate::Cnot { control: 1, target: 1 }]).is_err());
    }

    #[test]
    fn metrics_examples() {
        let empty = ReversibleCircuit::new(vec![], vec![]).unwrap();
        assert_eq!(metrics(&empty), CircuitMetrics { size: 0, depth: 0, ancilla_count: 0 });
        let par = ReversibleCircuit::new(vec![Role::Data; 2], vec![Gate::X(0), Gate::X(1)]).unwrap();
        assert_eq!(metrics(&par).depth, 1);
        let m = metrics(&swap_fragment());
        assert_eq!((m.size, m.depth), (3, 3));
    }

    #[test]
    fn adder_is_exact() {
        let mut b = CircuitBuilder::new();
        let a = b.alloc(3, Role::Data);
        let y = b.alloc(3, Role::Data);
        let ci = b.alloc(1, Role::Scratch)[0];
        let co = b.alloc(1, Role::Data)[0];
        b.add(&a, &y, ci, co);
        let c = b.finish();
        for x in 0..8u64 {
            for v in 0..8u64 {
                let out = run_fragment(&c, &[(&a, x), (&y, v)]);
                assert_eq!(unpack(&y, out) + 8 * unpack(&[co], out), x + v);
                assert_eq!(unpack(&a, out), x);
                assert_eq!((out >> ci) & 1, 0);
            }
        }
    }

    #[test]
    fn mod_add_examples() {
        let (x, y) = ([0usize, 1, 2], [3usize, 4, 5]);
        let c = synth_mod_add(5, &y, &x).unwrap();
        let out = run_fragment(&c, &[(&x, 3), (&y, 4)]);
        assert_eq!(unpack(&y, out), 2);
        for p in [2u64, 3, 5, 7, 13, 16, 31, 64] {
            let w = word_width(p);
            let x: Vec<usize> = (0..w).collect();
            let y: Vec<usize> = (w..2 * w).collect();
            let c = synth_mod_add(p, &y, &x).unwrap();
            let clean = c.clean_wires();
            for a in 0..p {
                for v in 0..p {
                    let out = run_fragment(&c, &[(&x, a), (&y, v)]);
                    assert_eq!((unpack(&x, out), unpack(&y, out)), (a, (a + v) % p), "p = {p}");
                    assert!(clean.iter().all(|&k| (out >> k) & 1 == 0));
                }
            }
        }
        assert!(synth_mod_add(5, &[0, 1], &[2, 3, 4]).is_err());
    }

    #[test]
    fn mod_mul_examples() {
        let x = [0usize, 1, 2];
        let id = synth_mod_mul_const(5, 1, &x).unwrap();
        let c2 = synth_mod_mul_const(5, 2, &x).unwrap();
        assert_eq!(unpack(&x, run_fragment(&c2, &[(&x, 3)])), 1);
        for v in 0..5 {
            assert_eq!(unpack(&x, run_fragment(&id, &[(&x, v)])), v);
        }
        assert!(synth_mod_mul_const(5, 0, &x).is_err());
        assert!(synth_mod_mul_const(5, 10, &x).is_err());
        for (p, c) in [(7u64, 3u64), (31, 17), (61, 2)] {
            let w = word_width(p);
            let x: Vec<usize> = (0..w).collect();
            let circ = synth_mod_mul_const(p, c, &x).unwrap();
            let mut seen = vec![false; p as usize];
            for v in 0..p {
                let out = run_fragment(&circ, &[(&x, v)]);
                let r = unpack(&x, out);
                assert_eq!(r, c * v % p);
                assert!(!seen[r as usize]);
                seen[r as usize] = true;
                assert!(circ.clean_wires().iter().all(|&k| (out >> k) & 1 == 0));
            }
        }
    }

    #[test]
    fn decoupler_examples() {
        let d = synth_decoupler(2, 5, 5).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                let (a, b, _, clean) = d.apply(i, j, 0);
                assert_eq!((a, b), (i, j));
                assert!(clean);
            }
        }
        assert_eq!(d.apply(1, 3, 1), (3, 0, 1, true));
        assert!(verify_decoupler(&d).unwrap().passed());
        assert!(synth_decoupler(2, 9, 5).is_err());
    }

    #[test]
    fn text_round_trip() {
        let d = synth_decoupler(2, 5, 3).unwrap();
        let text = d.circuit.to_text();
        let back: ReversibleCircuit = text.parse().unwrap();
        assert_eq!(back, d.circuit);
        assert_eq!(back.to_text(), text);
        assert!("wires=1 roles=g1\nFOO 0\n".parse::<ReversibleCircuit>().is_err());
    }
}
