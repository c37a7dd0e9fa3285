//! Representational capacity: a training-free predictor of how well a
//! circuit can separate classes.
//!
//! Output states are approximated classically by their measured-qubit
//! distributions in a few random local bases. Two inputs are similar when
//! those distributions agree, averaged over random parameter draws. The
//! score compares the resulting sample-by-sample similarity matrix with the
//! ideal block matrix that is 1 within a class and 0 across classes.

use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{tvd, Circuit, Dataset, ProbDist, RunConfig};
use crate::seed::{derive, rng_from};
use crate::statevector::{self, u3_matrix, Binding, DEFAULT_QUBIT_CAP};

/// Random U3 angles: `alphas[basis][k]` rotates measured qubit `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bases {
    pub alphas: Vec<Vec<[f64; 3]>>,
}

impl Bases {
    /// Angles uniform over `[0, 2π)`.
    pub fn random<R: Rng + ?Sized>(n_bases: usize, n_meas: usize, rng: &mut R) -> Bases {
        let tau = std::f64::consts::TAU;
        let alphas = (0..n_bases)
            .map(|_| {
                (0..n_meas)
                    .map(|_| [rng.random::<f64>() * tau, rng.random::<f64>() * tau, rng.random::<f64>() * tau])
                    .collect()
            })
            .collect();
        Bases { alphas }
    }

    /// A single basis of identity rotations.
    pub fn computational(n_meas: usize) -> Bases {
        Bases {
            alphas: vec![vec![[0.0; 3]; n_meas]],
        }
    }

    pub fn n_bases(&self) -> usize {
        self.alphas.len()
    }

    /// The same bases restricted to the first `n_meas` qubits.
    pub fn for_width(&self, n_meas: usize) -> Result<Bases> {
        let alphas = self
            .alphas
            .iter()
            .map(|b| {
                b.get(..n_meas).map(<[_]>::to_vec).ok_or(Error::DimensionMismatch {
                    expected: n_meas,
                    actual: b.len(),
                })
            })
            .collect::<Result<_>>()?;
        Ok(Bases { alphas })
    }
}

/// Measured-qubit distributions of one state, one per basis.
#[derive(Debug, Clone, PartialEq)]
pub struct StateApprox {
    pub dists: Vec<ProbDist>,
}

/// Classical approximation of the state `c` prepares on `(x, θ)`.
pub fn approx_state(c: &Circuit, x: &[f64], theta: &[f64], bases: &Bases) -> Result<StateApprox> {
    approx_state_capped(c, &Binding::new(x, theta), bases, DEFAULT_QUBIT_CAP)
}

fn approx_state_capped(c: &Circuit, binding: &Binding, bases: &Bases, cap: usize) -> Result<StateApprox> {
    let measured = c.measured();
    if bases.alphas.is_empty() {
        return Err(Error::config("n_bases", "must be at least 1"));
    }
    if let Some(bad) = bases.alphas.iter().find(|b| b.len() != measured.len()) {
        return Err(Error::DimensionMismatch {
            expected: measured.len(),
            actual: bad.len(),
        });
    }
    let state = statevector::run_bound(c, binding, cap)?;
    let dists = bases
        .alphas
        .iter()
        .map(|basis| {
            let mut s = state.clone();
            for (&q, a) in measured.iter().zip(basis) {
                s.apply_1q(q, &u3_matrix(a[0], a[1], a[2]));
            }
            statevector::measure_dist(&s, measured)
        })
        .collect::<Result<_>>()?;
    Ok(StateApprox { dists })
}

/// Mean over bases of `1 − tvd`.
pub fn similarity(a: &StateApprox, b: &StateApprox) -> Result<f64> {
    if a.dists.len() != b.dists.len() || a.dists.is_empty() {
        return Err(Error::DimensionMismatch {
            expected: a.dists.len(),
            actual: b.dists.len(),
        });
    }
    let mut total = 0.0;
    for (p, q) in a.dists.iter().zip(&b.dists) {
        total += 1.0 - tvd(p, q)?;
    }
    Ok(total / a.dists.len() as f64)
}

/// Similarity of the states for `x_i` and `x_j`, averaged over the shared
/// parameter draws `thetas`.
pub fn induced_similarity(c: &Circuit, x_i: &[f64], x_j: &[f64], thetas: &[Vec<f64>], bases: &Bases) -> Result<f64> {
    if thetas.is_empty() {
        return Err(Error::config("n_p", "must be at least 1"));
    }
    let mut total = 0.0;
    for theta in thetas {
        let a = approx_state(c, x_i, theta, bases)?;
        let b = approx_state(c, x_j, theta, bases)?;
        total += similarity(&a, &b)?;
    }
    Ok(total / thetas.len() as f64)
}

/// `n_p` parameter vectors, each entry uniform over `[0, 2π)`.
pub fn theta_draws<R: Rng + ?Sized>(n_trainable: usize, n_p: usize, rng: &mut R) -> Vec<Vec<f64>> {
    (0..n_p)
        .map(|_| (0..n_trainable).map(|_| rng.random::<f64>() * std::f64::consts::TAU).collect())
        .collect()
}

/// Induced-similarity matrix over the sampled points and its ideal target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityMatrix {
    pub labels: Vec<usize>,
    /// Row-major `d × d`.
    pub r_c: Vec<f64>,
}

impl SimilarityMatrix {
    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.r_c[i * self.dim() + j]
    }

    pub fn reference(&self, i: usize, j: usize) -> f64 {
        (self.labels[i] == self.labels[j]) as u8 as f64
    }

    /// `1 − ‖R_C − R_ref‖²_F / (2 · n_c · d_c²)`.
    pub fn rep(&self, n_classes: usize, d_c: usize) -> f64 {
        let d = self.dim();
        let mut err = 0.0;
        for i in 0..d {
            for j in 0..d {
                err += (self.get(i, j) - self.reference(i, j)).powi(2);
            }
        }
        1.0 - err / (2.0 * n_classes as f64 * (d_c * d_c) as f64)
    }
}

/// Samples and bases shared by every candidate of one search. Circuits
/// measuring fewer qubits than the bases cover use the leading angles.
#[derive(Debug, Clone, PartialEq)]
pub struct RepCapContext {
    pub n_classes: usize,
    pub d_c: usize,
    pub x: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub bases: Bases,
}

impl RepCapContext {
    /// Draws `d_c` training points per class without replacement and
    /// `n_bases` random bases over `n_meas` qubits.
    pub fn new<R: Rng + ?Sized>(ds: &Dataset, n_meas: usize, cfg: &RunConfig, rng: &mut R) -> Result<RepCapContext> {
        if cfg.d_c == 0 {
            return Err(Error::config("d_c", "must be at least 1"));
        }
        let mut x = Vec::new();
        let mut labels = Vec::new();
        for class in 0..ds.n_classes() {
            let members: Vec<&[f64]> = ds.train_class(class).map(|s| s.x.as_slice()).collect();
            if members.len() < cfg.d_c {
                return Err(Error::InsufficientSamples {
                    class,
                    available: members.len(),
                    needed: cfg.d_c,
                });
            }
            let mut picks = index::sample(rng, members.len(), cfg.d_c).into_vec();
            picks.sort_unstable();
            for i in picks {
                x.push(members[i].to_vec());
                labels.push(class);
            }
        }
        Ok(RepCapContext {
            n_classes: ds.n_classes(),
            d_c: cfg.d_c,
            x,
            labels,
            bases: Bases::random(cfg.n_bases, n_meas, rng),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepCapResult {
    pub rep: f64,
    pub matrix: SimilarityMatrix,
    /// Circuit executions counting one per (sample, parameter draw).
    pub executions: u64,
    /// Executions counting each measurement basis separately.
    pub physical_executions: u64,
}

/// Scores `c` on the context's samples with `cfg.n_p` parameter draws from
/// the stream `(seed, "theta", 0)`. Each (sample, draw) state is simulated
/// once; the diagonal is 1 without execution.
pub fn repcap_score_with(c: &Circuit, ctx: &RepCapContext, cfg: &RunConfig, seed: u64) -> Result<RepCapResult> {
    if cfg.n_p == 0 {
        return Err(Error::config("n_p", "must be at least 1"));
    }
    let thetas = theta_draws(c.n_trainable(), cfg.n_p, &mut rng_from(derive(seed, "theta", 0)));
    let bases = ctx.bases.for_width(c.measured().len())?;
    let states: Vec<Vec<StateApprox>> = ctx
        .x
        .par_iter()
        .map(|x| {
            thetas
                .iter()
                .map(|t| approx_state_capped(c, &Binding::new(x, t), &bases, cfg.qubit_cap))
                .collect()
        })
        .collect::<Result<_>>()?;
    let d = ctx.x.len();
    let upper: Vec<Vec<f64>> = (0..d)
        .into_par_iter()
        .map(|i| {
            (i + 1..d)
                .map(|j| {
                    let mut s = 0.0;
                    for (a, b) in states[i].iter().zip(&states[j]) {
                        s += similarity(a, b)?;
                    }
                    Ok(s / thetas.len() as f64)
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let mut r_c = vec![1.0; d * d];
    for i in 0..d {
        for (k, &v) in upper[i].iter().enumerate() {
            let j = i + 1 + k;
            r_c[i * d + j] = v;
            r_c[j * d + i] = v;
        }
    }
    let matrix = SimilarityMatrix {
        labels: ctx.labels.clone(),
        r_c,
    };
    let executions = (ctx.n_classes * ctx.d_c * cfg.n_p) as u64;
    Ok(RepCapResult {
        rep: matrix.rep(ctx.n_classes, ctx.d_c),
        matrix,
        executions,
        physical_executions: executions * ctx.bases.n_bases() as u64,
    })
}

/// Standalone score: draws its own samples, bases and parameters from `rng`.
pub fn repcap_score<R: Rng + ?Sized>(c: &Circuit, ds: &Dataset, cfg: &RunConfig, rng: &mut R) -> Result<RepCapResult> {
    let ctx = RepCapContext::new(ds, c.measured().len(), cfg, rng)?;
    repcap_score_with(c, &ctx, cfg, rng.random())
}
