//! Stabilizer tableau simulation of Clifford circuits.
//!
//! The tableau keeps `n` destabilizer rows, `n` stabilizer rows and one
//! scratch row, each a Pauli string stored as bit-packed X and Z words plus a
//! sign bit. Gate updates and measurement follow the Aaronson–Gottesman
//! rules. Exact output distributions are obtained by enumerating both branches
//! of every random measurement outcome, so every probability is dyadic.

use std::fmt;

use crate::error::{Error, Result};
use crate::model::{Circuit, Gate, GateKind, ProbDist};

/// Upper bound on measured qubits for exact branch enumeration.
pub const MAX_MEASURED: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tableau {
    n: usize,
    words: usize,
    x: Vec<u64>,
    z: Vec<u64>,
    r: Vec<bool>,
}

impl Tableau {
    /// The tableau of |0…0⟩: destabilizers X_i, stabilizers Z_i.
    pub fn new(n: usize) -> Self {
        let words = n.div_ceil(64).max(1);
        let rows = 2 * n + 1;
        let mut t = Tableau {
            n,
            words,
            x: vec![0; rows * words],
            z: vec![0; rows * words],
            r: vec![false; rows],
        };
        for i in 0..n {
            t.x[i * words + i / 64] |= 1 << (i % 64);
            t.z[(i + n) * words + i / 64] |= 1 << (i % 64);
        }
        t
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    #[inline]
    fn bit(v: &[u64], words: usize, row: usize, q: usize) -> bool {
        (v[row * words + q / 64] >> (q % 64)) & 1 == 1
    }

    #[inline]
    fn xb(&self, row: usize, q: usize) -> bool {
        Self::bit(&self.x, self.words, row, q)
    }

    #[inline]
    fn zb(&self, row: usize, q: usize) -> bool {
        Self::bit(&self.z, self.words, row, q)
    }

    fn rows(&self) -> usize {
        2 * self.n
    }

    pub fn h(&mut self, a: usize) {
        let (w, m) = (a / 64, 1u64 << (a % 64));
        for row in 0..self.rows() {
            let k = row * self.words + w;
            let (xa, za) = (self.x[k] & m, self.z[k] & m);
            if xa != 0 && za != 0 {
                self.r[row] ^= true;
            }
            self.x[k] = (self.x[k] & !m) | za;
            self.z[k] = (self.z[k] & !m) | xa;
        }
    }

    pub fn s(&mut self, a: usize) {
        let (w, m) = (a / 64, 1u64 << (a % 64));
        for row in 0..self.rows() {
            let k = row * self.words + w;
            let xa = self.x[k] & m;
            if xa != 0 && self.z[k] & m != 0 {
                self.r[row] ^= true;
            }
            self.z[k] ^= xa;
        }
    }

    pub fn cx(&mut self, a: usize, b: usize) {
        for row in 0..self.rows() {
            let (xa, za, xb, zb) = (self.xb(row, a), self.zb(row, a), self.xb(row, b), self.zb(row, b));
            if xa && zb && (xb == za) {
                self.r[row] ^= true;
            }
            if xa {
                self.x[row * self.words + b / 64] ^= 1 << (b % 64);
            }
            if zb {
                self.z[row * self.words + a / 64] ^= 1 << (a % 64);
            }
        }
    }

    pub fn cz(&mut self, a: usize, b: usize) {
        self.h(b);
        self.cx(a, b);
        self.h(b);
    }

    /// Applies a Pauli (1 = X, 2 = Y, 3 = Z; 0 = identity) by flipping the
    /// signs of anticommuting generators.
    pub fn pauli(&mut self, a: usize, p: u8) {
        for row in 0..self.rows() {
            let flip = match p {
                1 => self.zb(row, a),
                2 => self.xb(row, a) ^ self.zb(row, a),
                3 => self.xb(row, a),
                _ => false,
            };
            self.r[row] ^= flip;
        }
    }

    /// Applies a Clifford gate; errors on non-Clifford kinds.
    pub fn apply(&mut self, g: &Gate) -> Result<()> {
        let q = g.qubits[0];
        match g.kind {
            GateKind::H => self.h(q),
            GateKind::S => self.s(q),
            GateKind::X => self.pauli(q, 1),
            GateKind::Y => self.pauli(q, 2),
            GateKind::Z => self.pauli(q, 3),
            GateKind::Cx => self.cx(q, g.qubits[1]),
            GateKind::Cz => self.cz(q, g.qubits[1]),
            k => return Err(Error::UnsupportedGate(k)),
        }
        Ok(())
    }

    /// Left-multiplies row `h` by row `i`, tracking the sign.
    fn rowsum(&mut self, h: usize, i: usize) {
        let w = self.words;
        // Sum of the i-exponents contributed by each qubit, as (+1 count) - (-1 count).
        let mut phase: i64 = 0;
        for k in 0..w {
            let (x1, z1) = (self.x[i * w + k], self.z[i * w + k]);
            let (x2, z2) = (self.x[h * w + k], self.z[h * w + k]);
            let y1 = x1 & z1;
            let xo = x1 & !z1;
            let zo = !x1 & z1;
            let pos = (y1 & z2 & !x2) | (xo & z2 & x2) | (zo & x2 & !z2);
            let neg = (y1 & x2 & !z2) | (xo & z2 & !x2) | (zo & x2 & z2);
            phase += pos.count_ones() as i64 - neg.count_ones() as i64;
        }
        let total = 2 * self.r[h] as i64 + 2 * self.r[i] as i64 + phase;
        self.r[h] = total.rem_euclid(4) == 2;
        for k in 0..w {
            self.x[h * w + k] ^= self.x[i * w + k];
            self.z[h * w + k] ^= self.z[i * w + k];
        }
    }

    fn copy_row(&mut self, dst: usize, src: usize) {
        let w = self.words;
        self.x.copy_within(src * w..(src + 1) * w, dst * w);
        self.z.copy_within(src * w..(src + 1) * w, dst * w);
        self.r[dst] = self.r[src];
    }

    fn clear_row(&mut self, row: usize) {
        let w = self.words;
        self.x[row * w..(row + 1) * w].fill(0);
        self.z[row * w..(row + 1) * w].fill(0);
        self.r[row] = false;
    }

    /// If measuring qubit `a` in Z is deterministic, its outcome.
    pub fn deterministic_outcome(&self, a: usize) -> Option<bool> {
        if (self.n..2 * self.n).any(|p| self.xb(p, a)) {
            return None;
        }
        let mut t = self.clone();
        let scratch = 2 * self.n;
        t.clear_row(scratch);
        for i in 0..self.n {
            if t.xb(i, a) {
                t.rowsum(scratch, i + self.n);
            }
        }
        Some(t.r[scratch])
    }

    /// Measures qubit `a` in Z. A random outcome is forced to `choice`.
    /// Returns (outcome, was_random).
    pub fn measure(&mut self, a: usize, choice: bool) -> (bool, bool) {
        let n = self.n;
        let Some(p) = (n..2 * n).find(|&p| self.xb(p, a)) else {
            return (self.deterministic_outcome(a).expect("checked above"), false);
        };
        for i in 0..2 * n {
            if i != p && self.xb(i, a) {
                self.rowsum(i, p);
            }
        }
        self.copy_row(p - n, p);
        self.clear_row(p);
        self.z[p * self.words + a / 64] |= 1 << (a % 64);
        self.r[p] = choice;
        (choice, true)
    }

    fn row_string(&self, row: usize) -> String {
        let mut s = String::with_capacity(self.n + 1);
        s.push(if self.r[row] { '-' } else { '+' });
        for q in 0..self.n {
            s.push(match (self.xb(row, q), self.zb(row, q)) {
                (false, false) => 'I',
                (true, false) => 'X',
                (true, true) => 'Y',
                (false, true) => 'Z',
            });
        }
        s
    }

    /// Stabilizer generators as signed Pauli strings, qubit 0 first.
    pub fn stabilizers(&self) -> Vec<String> {
        (self.n..2 * self.n).map(|r| self.row_string(r)).collect()
    }

    pub fn destabilizers(&self) -> Vec<String> {
        (0..self.n).map(|r| self.row_string(r)).collect()
    }

    /// Checks the symplectic structure: stabilizer `i` anticommutes with
    /// destabilizer `i` and every other pair of generators commutes.
    pub fn is_valid(&self) -> bool {
        let w = self.words;
        let anti = |i: usize, j: usize| {
            (0..w)
                .map(|k| {
                    ((self.x[i * w + k] & self.z[j * w + k]) ^ (self.z[i * w + k] & self.x[j * w + k]))
                        .count_ones()
                })
                .sum::<u32>()
                % 2
                == 1
        };
        let n = self.n;
        for i in 0..2 * n {
            for j in i + 1..2 * n {
                let expect = j == i + n;
                if anti(i, j) != expect {
                    return false;
                }
            }
        }
        true
    }
}

impl fmt::Display for Tableau {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in self.stabilizers() {
            writeln!(f, "{s}")?;
        }
        Ok(())
    }
}

/// Runs every gate of an all-Clifford circuit on a fresh tableau.
pub fn run_tableau(c: &Circuit) -> Result<Tableau> {
    let mut t = Tableau::new(c.n_qubits());
    for g in c.gates() {
        t.apply(g)?;
    }
    Ok(t)
}

/// Exact outcome distribution of the measured qubits of a tableau.
pub fn tableau_dist(t: &Tableau, measured: &[usize]) -> Result<ProbDist> {
    if measured.is_empty() {
        return Err(Error::EmptyMeasurement);
    }
    if measured.len() > MAX_MEASURED {
        return Err(Error::InvalidCircuit(format!(
            "{} measured qubits exceeds the exact-enumeration limit of {MAX_MEASURED}",
            measured.len()
        )));
    }
    let mut probs = vec![0.0; 1 << measured.len()];
    branch(t.clone(), measured, 0, 0, 1.0, &mut probs);
    Ok(ProbDist::from_raw(measured.len(), probs))
}

fn branch(mut t: Tableau, measured: &[usize], k: usize, bits: usize, p: f64, out: &mut [f64]) {
    if k == measured.len() {
        out[bits] += p;
        return;
    }
    let q = measured[k];
    match t.deterministic_outcome(q) {
        Some(v) => branch(t, measured, k + 1, bits | ((v as usize) << k), p, out),
        None => {
            let mut one = t.clone();
            t.measure(q, false);
            one.measure(q, true);
            branch(t, measured, k + 1, bits, p / 2.0, out);
            branch(one, measured, k + 1, bits | (1 << k), p / 2.0, out);
        }
    }
}

/// Exact distribution of an all-Clifford circuit over its measured qubits.
pub fn clifford_dist(c: &Circuit) -> Result<ProbDist> {
    clifford_dist_on(c, c.measured())
}

/// Same as [`clifford_dist`] for an explicit measured set.
pub fn clifford_dist_on(c: &Circuit, measured: &[usize]) -> Result<ProbDist> {
    if let Some(g) = c.gates().iter().find(|g| !g.kind.is_clifford()) {
        return Err(Error::UnsupportedGate(g.kind));
    }
    tableau_dist(&run_tableau(c)?, measured)
}

/// A Pauli error pushed to the end of a Clifford circuit.
///
/// An error `P` inserted before gate `U` equals `U P U†` inserted after it,
/// so errors can be accumulated into a single frame; only its X part changes
/// computational-basis outcomes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PauliFrame {
    x: Vec<bool>,
    z: Vec<bool>,
}

impl PauliFrame {
    pub fn new(n: usize) -> Self {
        PauliFrame {
            x: vec![false; n],
            z: vec![false; n],
        }
    }

    /// Multiplies a Pauli (1 = X, 2 = Y, 3 = Z) on qubit `q` into the frame.
    pub fn inject(&mut self, q: usize, p: u8) {
        self.x[q] ^= p == 1 || p == 2;
        self.z[q] ^= p == 2 || p == 3;
    }

    /// Conjugates the frame through a Clifford gate.
    pub fn propagate(&mut self, g: &Gate) -> Result<()> {
        let a = g.qubits[0];
        match g.kind {
            GateKind::H => std::mem::swap(&mut self.x[a], &mut self.z[a]),
            GateKind::S => self.z[a] ^= self.x[a],
            GateKind::X | GateKind::Y | GateKind::Z => {}
            GateKind::Cx => {
                let b = g.qubits[1];
                self.x[b] ^= self.x[a];
                self.z[a] ^= self.z[b];
            }
            GateKind::Cz => {
                let b = g.qubits[1];
                let (xa, xb) = (self.x[a], self.x[b]);
                self.z[b] ^= xa;
                self.z[a] ^= xb;
            }
            k => return Err(Error::UnsupportedGate(k)),
        }
        Ok(())
    }

    /// Outcome bit-flip mask over the measured qubits.
    pub fn flip_mask(&self, measured: &[usize]) -> usize {
        measured
            .iter()
            .enumerate()
            .fold(0, |m, (k, &q)| m | ((self.x[q] as usize) << k))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CircuitBuilder, ParamRole};
    use crate::statevector;
    use rand::Rng;

    fn c(n: usize, gates: Vec<Gate>, measured: Vec<usize>) -> Circuit {
        CircuitBuilder::new(n).gates(gates).measure(measured).build().unwrap()
    }

    #[test]
    fn hh_is_identity() {
        let mut t = Tableau::new(3);
        t.h(1);
        t.h(1);
        assert_eq!(t, Tableau::new(3));
    }

    #[test]
    fn bell_stabilizers() {
        let mut t = Tableau::new(2);
        t.h(0);
        t.cx(0, 1);
        let mut st: Vec<String> = t.stabilizers().iter().map(|s| s[1..].to_string()).collect();
        st.sort();
        assert_eq!(st, vec!["XX", "ZZ"]);
        assert!(t.is_valid());
    }

    #[test]
    fn s_has_order_four() {
        let mut rng = crate::seed::rng_from(5);
        let mut t = Tableau::new(4);
        for _ in 0..40 {
            let g = random_clifford(&mut rng, 4);
            t.apply(&g).unwrap();
        }
        let before = t.clone();
        for _ in 0..4 {
            t.s(2);
        }
        assert_eq!(t, before);
    }

    #[test]
    fn simple_distributions() {
        let bell = c(2, vec![Gate::h(0), Gate::cx(0, 1)], vec![0, 1]);
        assert_eq!(clifford_dist(&bell).unwrap().probs(), &[0.5, 0.0, 0.0, 0.5]);
        let x = c(1, vec![Gate::x(0)], vec![0]);
        assert_eq!(clifford_dist(&x).unwrap().probs(), &[0.0, 1.0]);
    }

    #[test]
    fn rejects_non_clifford() {
        let r = c(1, vec![Gate::rotation(GateKind::Rx, 0, ParamRole::Fixed(vec![0.1]))], vec![0]);
        assert_eq!(clifford_dist(&r).unwrap_err(), Error::UnsupportedGate(GateKind::Rx));
        let too_many = CircuitBuilder::new(9).build().unwrap();
        assert!(clifford_dist(&too_many).is_err());
    }

    pub(crate) fn random_clifford<R: Rng>(rng: &mut R, n: usize) -> Gate {
        let q = rng.random_range(0..n);
        let kinds = [GateKind::H, GateKind::S, GateKind::X, GateKind::Y, GateKind::Z, GateKind::Cx, GateKind::Cz];
        let k = kinds[rng.random_range(0..if n > 1 { 7 } else { 5 })];
        if k.arity() == 2 {
            let mut b = rng.random_range(0..n - 1);
            if b >= q {
                b += 1;
            }
            Gate::new(k, vec![q, b], ParamRole::Fixed(vec![])).unwrap()
        } else {
            Gate::new(k, vec![q], ParamRole::Fixed(vec![])).unwrap()
        }
    }

    fn random_circuit<R: Rng>(rng: &mut R, n: usize, len: usize) -> Circuit {
        let gates = (0..len).map(|_| random_clifford(rng, n)).collect();
        let mut measured: Vec<usize> = (0..n).filter(|_| rng.random_bool(0.7)).collect();
        if measured.is_empty() {
            measured.push(0);
        }
        c(n, gates, measured)
    }

    #[test]
    fn matches_statevector_on_random_circuits() {
        let mut rng = crate::seed::rng_from(99);
        for _ in 0..200 {
            let n = rng.random_range(1..=6);
            let len = rng.random_range(0..=60);
            let circ = random_circuit(&mut rng, n, len);
            let stab = clifford_dist(&circ).unwrap();
            let sv = statevector::measure_dist(&statevector::run(&circ, &[], &[]).unwrap(), circ.measured()).unwrap();
            for (a, b) in stab.probs().iter().zip(sv.probs()) {
                assert!((a - b).abs() < 1e-9, "{circ:?}");
                // Dyadic check: p * 2^m is an integer.
                let scaled = a * (1u64 << circ.measured().len()) as f64;
                assert!((scaled - scaled.round()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn symplectic_invariant_holds_for_every_gate() {
        for n in 1..=4 {
            let mut rng = crate::seed::rng_from(n as u64);
            let mut t = Tableau::new(n);
            for _ in 0..200 {
                t.apply(&random_clifford(&mut rng, n)).unwrap();
                assert!(t.is_valid());
            }
            // Measurement keeps the structure too.
            for q in 0..n {
                t.measure(q, rng.random_bool(0.5));
                assert!(t.is_valid());
            }
        }
    }

    #[test]
    fn frame_matches_injected_paulis() {
        let mut rng = crate::seed::rng_from(17);
        for _ in 0..100 {
            let n = rng.random_range(1..=5);
            let circ = random_circuit(&mut rng, n, 30);
            let errors: Vec<(usize, usize, u8)> = (0..4)
                .map(|_| (rng.random_range(0..30), rng.random_range(0..n), rng.random_range(1..=3)))
                .collect();
            let mut t = Tableau::new(n);
            let mut frame = PauliFrame::new(n);
            for (i, g) in circ.gates().iter().enumerate() {
                t.apply(g).unwrap();
                frame.propagate(g).unwrap();
                for &(at, q, p) in &errors {
                    if at == i {
                        t.pauli(q, p);
                        frame.inject(q, p);
                    }
                }
            }
            let direct = tableau_dist(&t, circ.measured()).unwrap();
            let ideal = clifford_dist(&circ).unwrap();
            let mask = frame.flip_mask(circ.measured());
            for (k, &p) in direct.probs().iter().enumerate() {
                assert!((p - ideal.prob(k ^ mask)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn thousand_gates_on_fifty_qubits_is_fast() {
        let mut rng = crate::seed::rng_from(3);
        let gates: Vec<Gate> = (0..1000).map(|_| random_clifford(&mut rng, 50)).collect();
        let start = std::time::Instant::now();
        let mut t = Tableau::new(50);
        for g in &gates {
            t.apply(g).unwrap();
        }
        let elapsed = start.elapsed();
        assert!(t.is_valid());
        assert!(elapsed.as_millis() < 10, "took {elapsed:?}");
    }
}
