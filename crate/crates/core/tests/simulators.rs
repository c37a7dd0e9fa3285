//! Statevector against an explicit dense-matrix oracle, and stabilizer
//! against statevector.

use std::time::Instant;

use elivagar::model::{CircuitBuilder, Gate, GateKind, ParamRole};
use elivagar::seed::rng_from;
use elivagar::stabilizer::{clifford_dist, Tableau};
use elivagar::statevector::{self, StateVector};
use num_complex::Complex64 as C;
use rand::Rng;

type M = Vec<Vec<C>>;

fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

/// 2×2 unitary of a 1-qubit gate at angle `t` (or `u3` angles).
fn one_qubit(kind: GateKind, t: f64, u3: [f64; 3]) -> [[C; 2]; 2] {
    let (s, co) = (t / 2.0).sin_cos();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    match kind {
        GateKind::Rx => [[c(co, 0.0), c(0.0, -s)], [c(0.0, -s), c(co, 0.0)]],
        GateKind::Ry => [[c(co, 0.0), c(-s, 0.0)], [c(s, 0.0), c(co, 0.0)]],
        GateKind::Rz => [[C::from_polar(1.0, -t / 2.0), c(0.0, 0.0)], [c(0.0, 0.0), C::from_polar(1.0, t / 2.0)]],
        GateKind::H => [[c(h, 0.0), c(h, 0.0)], [c(h, 0.0), c(-h, 0.0)]],
        GateKind::S => [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(0.0, 1.0)]],
        GateKind::X => [[c(0.0, 0.0), c(1.0, 0.0)], [c(1.0, 0.0), c(0.0, 0.0)]],
        GateKind::Y => [[c(0.0, 0.0), c(0.0, -1.0)], [c(0.0, 1.0), c(0.0, 0.0)]],
        GateKind::Z => [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(-1.0, 0.0)]],
        GateKind::U3 => {
            let [a, p, l] = u3;
            let (s, co) = (a / 2.0).sin_cos();
            [
                [c(co, 0.0), -C::from_polar(s, l)],
                [C::from_polar(s, p), C::from_polar(co, p + l)],
            ]
        }
        _ => unreachable!(),
    }
}

/// Full 2^n matrix: Kronecker product with identities, little-endian qubits.
fn embed_1q(n: usize, q: usize, u: [[C; 2]; 2]) -> M {
    let d = 1 << n;
    let mut m = vec![vec![c(0.0, 0.0); d]; d];
    for i in 0..d {
        for j in 0..d {
            if (i & !(1 << q)) == (j & !(1 << q)) {
                m[i][j] = u[(i >> q) & 1][(j >> q) & 1];
            }
        }
    }
    m
}

fn embed_2q(n: usize, a: usize, b: usize, cz: bool) -> M {
    let d = 1 << n;
    let mut m = vec![vec![c(0.0, 0.0); d]; d];
    for j in 0..d {
        let (ba, bb) = ((j >> a) & 1, (j >> b) & 1);
        if cz {
            m[j][j] = if ba == 1 && bb == 1 { c(-1.0, 0.0) } else { c(1.0, 0.0) };
        } else {
            let i = if ba == 1 { j ^ (1 << b) } else { j };
            m[i][j] = c(1.0, 0.0);
        }
    }
    m
}

fn matvec(m: &M, v: &[C]) -> Vec<C> {
    m.iter().map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}

#[test]
fn statevector_matches_dense_matrix_oracle() {
    let mut rng = rng_from(2024);
    let kinds = [
        GateKind::Rx,
        GateKind::Ry,
        GateKind::Rz,
        GateKind::H,
        GateKind::S,
        GateKind::X,
        GateKind::Y,
        GateKind::Z,
        GateKind::U3,
        GateKind::Cx,
        GateKind::Cz,
    ];
    for trial in 0..60 {
        let n = 1 + trial % 5;
        let mut gates = Vec::new();
        let mut theta = Vec::new();
        let x: Vec<f64> = (0..3).map(|_| rng.random::<f64>() * 6.0).collect();
        for _ in 0..30 {
            let mut kind = kinds[rng.random_range(0..kinds.len())];
            if n == 1 && kind.arity() == 2 {
                kind = GateKind::H;
            }
            let q = rng.random_range(0..n);
            let g = match kind {
                GateKind::Cx | GateKind::Cz => {
                    let mut r = rng.random_range(0..n);
                    while r == q {
                        r = rng.random_range(0..n);
                    }
                    Gate::new(kind, vec![q, r], ParamRole::Fixed(vec![])).unwrap()
                }
                GateKind::U3 => Gate::u3(q, [rng.random(), rng.random::<f64>() * 6.0, rng.random::<f64>() * 6.0]),
                k if k.is_rotation() => {
                    let role = match rng.random_range(0..3) {
                        0 => {
                            theta.push(rng.random::<f64>() * 6.0);
                            ParamRole::Trainable(theta.len() - 1)
                        }
                        1 => ParamRole::Embedding(rng.random_range(0..3)),
                        _ => ParamRole::Fixed(vec![rng.random::<f64>() * 6.0]),
                    };
                    Gate::rotation(k, q, role)
                }
                k => Gate::new(k, vec![q], ParamRole::Fixed(vec![])).unwrap(),
            };
            gates.push(g);
        }
        let circ = CircuitBuilder::new(n).gates(gates.clone()).build().unwrap();
        let got = statevector::run(&circ, &x, &theta).unwrap();

        let mut v = vec![c(0.0, 0.0); 1 << n];
        v[0] = c(1.0, 0.0);
        for g in &gates {
            let m = match g.kind {
                GateKind::Cx => embed_2q(n, g.qubits[0], g.qubits[1], false),
                GateKind::Cz => embed_2q(n, g.qubits[0], g.qubits[1], true),
                k => {
                    let (t, u3) = match &g.role {
                        ParamRole::Trainable(i) => (theta[*i], [0.0; 3]),
                        ParamRole::Embedding(d) => (x[*d], [0.0; 3]),
                        ParamRole::Fixed(a) if k == GateKind::U3 => (0.0, [a[0], a[1], a[2]]),
                        ParamRole::Fixed(a) => (a.first().copied().unwrap_or(0.0), [0.0; 3]),
                    };
                    embed_1q(n, g.qubits[0], one_qubit(k, t, u3))
                }
            };
            v = matvec(&m, &v);
        }
        let err = got
            .amplitudes()
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-8, "trial {trial}: {err}");
        assert!((got.norm_sqr() - 1.0).abs() < 1e-9);
    }
}

#[test]
fn twelve_qubit_hundred_gate_circuit_is_fast() {
    let mut rng = rng_from(1);
    let mut gates = Vec::new();
    for i in 0..100 {
        let q = rng.random_range(0..12);
        gates.push(if i % 3 == 2 {
            Gate::cx(q, (q + 1) % 12)
        } else {
            Gate::rotation(GateKind::Ry, q, ParamRole::Fixed(vec![rng.random()]))
        });
    }
    let circ = CircuitBuilder::new(12).gates(gates).build().unwrap();
    statevector::run(&circ, &[], &[]).unwrap();
    let t = Instant::now();
    let s = statevector::run(&circ, &[], &[]).unwrap();
    let dt = t.elapsed();
    assert!((s.norm_sqr() - 1.0).abs() < 1e-9);
    assert!(dt.as_millis() < 50, "{dt:?}");
}

#[test]
fn stabilizer_large_circuit_is_fast_and_valid() {
    let mut rng = rng_from(3);
    let mut t = Tableau::new(50);
    let start = Instant::now();
    for _ in 0..1000 {
        let a = rng.random_range(0..50);
        match rng.random_range(0..4) {
            0 => t.h(a),
            1 => t.s(a),
            2 => t.cx(a, (a + 1 + rng.random_range(0..49)) % 50),
            _ => t.cz(a, (a + 1 + rng.random_range(0..49)) % 50),
        }
    }
    assert!(start.elapsed().as_millis() < 10, "{:?}", start.elapsed());
    assert!(t.is_valid());
}

#[test]
fn ghz_distribution_on_both_simulators() {
    let c = CircuitBuilder::new(3)
        .gates([Gate::h(0), Gate::cx(0, 1), Gate::cx(1, 2)])
        .measure([0, 2])
        .build()
        .unwrap();
    let a = clifford_dist(&c).unwrap();
    let b = statevector::measure_dist(&statevector::run(&c, &[], &[]).unwrap(), c.measured()).unwrap();
    assert_eq!(a.probs(), &[0.5, 0.0, 0.0, 0.5]);
    assert!(a.tvd(&b).unwrap() < 1e-12);
    let zero = StateVector::zero(2);
    assert_eq!(statevector::z_expectations(&zero, &[0, 1]).unwrap(), vec![1.0, 1.0]);
}
