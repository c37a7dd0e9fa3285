//! Dense statevector simulation with in-place stride kernels.
//!
//! Qubit `q` is bit `q` of an amplitude index.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64 as C64;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{Circuit, Gate, GateKind, ParamRole, ProbDist};

pub const DEFAULT_QUBIT_CAP: usize = 14;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

type Mat2 = [[C64; 2]; 2];

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<C64>,
}

/// Values bound to a circuit's parametric gates for one execution.
#[derive(Debug, Clone, Copy)]
pub struct Binding<'a> {
    pub x: &'a [f64],
    pub theta: &'a [f64],
    /// Extra angle added to a single gate (gate index, offset); used by the
    /// parameter-shift rule.
    pub shift: Option<(usize, f64)>,
}

impl<'a> Binding<'a> {
    pub fn new(x: &'a [f64], theta: &'a [f64]) -> Self {
        Binding {
            x,
            theta,
            shift: None,
        }
    }

    pub fn none() -> Binding<'static> {
        Binding {
            x: &[],
            theta: &[],
            shift: None,
        }
    }

    pub fn shifted(self, gate: usize, offset: f64) -> Self {
        Binding {
            shift: Some((gate, offset)),
            ..self
        }
    }

    /// Checks the binding covers every parameter of `c`.
    pub fn check(&self, c: &Circuit) -> Result<()> {
        if self.theta.len() != c.n_trainable() {
            return Err(Error::ParameterLength {
                expected: c.n_trainable(),
                actual: self.theta.len(),
            });
        }
        let need = c.data_dim_needed();
        if self.x.len() < need {
            return Err(Error::DataDimension {
                needed: need - 1,
                actual: self.x.len(),
            });
        }
        Ok(())
    }

    /// Rotation angle of gate `index`, after any shift.
    fn angle(&self, g: &Gate, index: usize) -> f64 {
        let base = match &g.role {
            ParamRole::Trainable(k) => self.theta[*k],
            ParamRole::Embedding(d) => self.x[*d],
            ParamRole::Fixed(a) => a.first().copied().unwrap_or(0.0),
        };
        match self.shift {
            Some((gi, off)) if gi == index => base + off,
            _ => base,
        }
    }
}

fn rx(t: f64) -> Mat2 {
    let (s, c) = (t / 2.0).sin_cos();
    [[C64::new(c, 0.0), C64::new(0.0, -s)], [C64::new(0.0, -s), C64::new(c, 0.0)]]
}

fn ry(t: f64) -> Mat2 {
    let (s, c) = (t / 2.0).sin_cos();
    [[C64::new(c, 0.0), C64::new(-s, 0.0)], [C64::new(s, 0.0), C64::new(c, 0.0)]]
}

/// U3(θ, φ, λ) = [[cos θ/2, −e^{iλ} sin θ/2], [e^{iφ} sin θ/2, e^{i(φ+λ)} cos θ/2]].
pub fn u3_matrix(theta: f64, phi: f64, lambda: f64) -> [[C64; 2]; 2] {
    let (s, c) = (theta / 2.0).sin_cos();
    [
        [C64::new(c, 0.0), -C64::from_polar(s, lambda)],
        [C64::from_polar(s, phi), C64::from_polar(c, phi + lambda)],
    ]
}

impl StateVector {
    /// |0…0⟩ on `n_qubits`.
    pub fn zero(n_qubits: usize) -> Self {
        let mut amps = vec![ZERO; 1 << n_qubits];
        amps[0] = ONE;
        StateVector { n_qubits, amps }
    }

    pub fn from_amplitudes(n_qubits: usize, amps: Vec<C64>) -> Result<Self> {
        if amps.len() != 1 << n_qubits {
            return Err(Error::DimensionMismatch {
                expected: 1 << n_qubits,
                actual: amps.len(),
            });
        }
        Ok(StateVector { n_qubits, amps })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }
    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }
    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Applies a 2×2 unitary to qubit `q`.
    pub fn apply_1q(&mut self, q: usize, m: &Mat2) {
        let stride = 1 << q;
        for chunk in self.amps.chunks_exact_mut(stride << 1) {
            let (lo, hi) = chunk.split_at_mut(stride);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = m[0][0] * x + m[0][1] * y;
                *b = m[1][0] * x + m[1][1] * y;
            }
        }
    }

    /// Multiplies amplitudes with bit `q` clear by `d0` and set by `d1`.
    fn apply_diag(&mut self, q: usize, d0: C64, d1: C64) {
        let stride = 1 << q;
        for chunk in self.amps.chunks_exact_mut(stride << 1) {
            let (lo, hi) = chunk.split_at_mut(stride);
            if d0 != ONE {
                lo.iter_mut().for_each(|a| *a *= d0);
            }
            hi.iter_mut().for_each(|a| *a *= d1);
        }
    }

    fn apply_x(&mut self, q: usize) {
        let stride = 1 << q;
        for chunk in self.amps.chunks_exact_mut(stride << 1) {
            let (lo, hi) = chunk.split_at_mut(stride);
            lo.swap_with_slice(hi);
        }
    }

    fn apply_cx(&mut self, control: usize, target: usize) {
        let (cm, tm) = (1usize << control, 1usize << target);
        for i in 0..self.amps.len() {
            if i & cm != 0 && i & tm == 0 {
                self.amps.swap(i, i | tm);
            }
        }
    }

    fn apply_cz(&mut self, a: usize, b: usize) {
        let mask = (1usize << a) | (1usize << b);
        for (i, amp) in self.amps.iter_mut().enumerate() {
            if i & mask == mask {
                *amp = -*amp;
            }
        }
    }

    /// Applies a Pauli (0 = I, 1 = X, 2 = Y, 3 = Z) to qubit `q`.
    pub fn apply_pauli(&mut self, q: usize, pauli: u8) {
        match pauli {
            1 => self.apply_x(q),
            2 => {
                // Y = i X Z
                self.apply_diag(q, ONE, -ONE);
                self.apply_x(q);
                self.amps.iter_mut().for_each(|a| *a *= I);
            }
            3 => self.apply_diag(q, ONE, -ONE),
            _ => {}
        }
    }

    /// Applies gate number `index` of a circuit under `binding`.
    pub fn apply_gate(&mut self, g: &Gate, index: usize, binding: &Binding) {
        let q = g.qubits[0];
        match g.kind {
            GateKind::Rx => self.apply_1q(q, &rx(binding.angle(g, index))),
            GateKind::Ry => self.apply_1q(q, &ry(binding.angle(g, index))),
            GateKind::Rz => {
                let t = binding.angle(g, index) / 2.0;
                self.apply_diag(q, C64::from_polar(1.0, -t), C64::from_polar(1.0, t));
            }
            GateKind::U3 => {
                let a = match &g.role {
                    ParamRole::Fixed(a) => [a[0], a[1], a[2]],
                    _ => unreachable!("U3 gates carry fixed angles"),
                };
                self.apply_1q(q, &u3_matrix(a[0], a[1], a[2]));
            }
            GateKind::H => {
                let h = C64::new(FRAC_1_SQRT_2, 0.0);
                self.apply_1q(q, &[[h, h], [h, -h]]);
            }
            GateKind::S => self.apply_diag(q, ONE, I),
            GateKind::X => self.apply_pauli(q, 1),
            GateKind::Y => self.apply_pauli(q, 2),
            GateKind::Z => self.apply_pauli(q, 3),
            GateKind::Cx => self.apply_cx(q, g.qubits[1]),
            GateKind::Cz => self.apply_cz(q, g.qubits[1]),
        }
    }
}

/// Runs `c` from |0…0⟩ with data `x` and parameters `theta`.
pub fn run(c: &Circuit, x: &[f64], theta: &[f64]) -> Result<StateVector> {
    run_bound(c, &Binding::new(x, theta), DEFAULT_QUBIT_CAP)
}

/// Runs `c` under an explicit binding and qubit cap.
pub fn run_bound(c: &Circuit, binding: &Binding, cap: usize) -> Result<StateVector> {
    if c.n_qubits() > cap {
        return Err(Error::TooManyQubits {
            n_qubits: c.n_qubits(),
            cap,
        });
    }
    binding.check(c)?;
    let mut s = StateVector::zero(c.n_qubits());
    for (i, g) in c.gates().iter().enumerate() {
        s.apply_gate(g, i, binding);
    }
    Ok(s)
}

fn check_measured(s: &StateVector, measured: &[usize]) -> Result<()> {
    if measured.is_empty() {
        return Err(Error::EmptyMeasurement);
    }
    if let Some(&q) = measured.iter().find(|&&q| q >= s.n_qubits) {
        return Err(Error::InvalidCircuit(format!(
            "measured qubit {q} out of range for {} qubits",
            s.n_qubits
        )));
    }
    Ok(())
}

/// Exact outcome distribution of the measured qubits; bit `k` of an outcome
/// is qubit `measured[k]`.
pub fn measure_dist(s: &StateVector, measured: &[usize]) -> Result<ProbDist> {
    check_measured(s, measured)?;
    let mut out = vec![0.0; 1 << measured.len()];
    for (i, a) in s.amps.iter().enumerate() {
        let k = measured
            .iter()
            .enumerate()
            .fold(0, |acc, (b, &q)| acc | (((i >> q) & 1) << b));
        out[k] += a.norm_sqr();
    }
    // Rounding drift in long circuits is far below the 1e-9 normalization
    // tolerance, but renormalize so downstream sums stay exact.
    let total: f64 = out.iter().sum();
    out.iter_mut().for_each(|p| *p /= total);
    Ok(ProbDist::from_raw(measured.len(), out))
}

/// ⟨Z_q⟩ for each measured qubit.
pub fn z_expectations(s: &StateVector, measured: &[usize]) -> Result<Vec<f64>> {
    check_measured(s, measured)?;
    Ok(measured
        .iter()
        .map(|&q| {
            s.amps
                .iter()
                .enumerate()
                .map(|(i, a)| {
                    if (i >> q) & 1 == 0 {
                        a.norm_sqr()
                    } else {
                        -a.norm_sqr()
                    }
                })
                .sum()
        })
        .collect())
}

/// Empirical distribution of `shots` draws from a distribution.
pub fn sample_dist<R: Rng + ?Sized>(p: &ProbDist, shots: u64, rng: &mut R) -> Result<ProbDist> {
    if shots == 0 {
        return Err(Error::config("shots", "must be at least 1"));
    }
    let index = WeightedIndex::new(p.probs())
        .map_err(|e| Error::InvalidDistribution(e.to_string()))?;
    let mut counts = vec![0.0; p.probs().len()];
    for _ in 0..shots {
        counts[index.sample(rng)] += 1.0;
    }
    ProbDist::from_weights(p.n_bits(), counts)
}

/// Empirical measured-qubit distribution from `shots` samples of `s`.
pub fn sample<R: Rng + ?Sized>(
    s: &StateVector,
    measured: &[usize],
    shots: u64,
    rng: &mut R,
) -> Result<ProbDist> {
    sample_dist(&measure_dist(s, measured)?, shots, rng)
}
