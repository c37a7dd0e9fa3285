use elivagar::data::DataSpec;
use elivagar::generate::{generate_candidates, CircuitConfig};
use elivagar::model::{Circuit, CircuitBuilder, DeviceModel, Gate, GateKind, ParamRole, RunConfig, Sample, Topology};
use elivagar::seed::rng_from;
use elivagar::train::{evaluate, train, Backend, TrainConfig};
use rand::Rng;

fn xor_circuit() -> Circuit {
    CircuitBuilder::new(2)
        .gates([
            Gate::rotation(GateKind::Rx, 0, ParamRole::Embedding(0)),
            Gate::rotation(GateKind::Rx, 1, ParamRole::Embedding(1)),
            Gate::rotation(GateKind::Ry, 0, ParamRole::Trainable(0)),
            Gate::cx(0, 1),
            Gate::rotation(GateKind::Ry, 1, ParamRole::Trainable(1)),
        ])
        .measure([1])
        .build()
        .unwrap()
}

fn xor_samples(n: usize, seed: u64) -> Vec<Sample> {
    let mut rng = rng_from(seed);
    (0..n)
        .map(|_| {
            let (a, b) = (rng.random_bool(0.5), rng.random_bool(0.5));
            let jitter = |r: &mut elivagar::seed::Rng| (r.random::<f64>() - 0.5) * 0.4;
            Sample {
                x: vec![
                    a as u8 as f64 * std::f64::consts::PI + jitter(&mut rng),
                    b as u8 as f64 * std::f64::consts::PI + jitter(&mut rng),
                ],
                y: (a ^ b) as usize,
            }
        })
        .collect()
}

#[test]
fn xor_is_learned_and_matches_grid_search_optimum() {
    let c = xor_circuit();
    let test = xor_samples(100, 99);
    // Best accuracy reachable by this circuit, found by brute force.
    let mut best = 0.0f64;
    for i in 0..24 {
        for j in 0..24 {
            let th = [i as f64 * std::f64::consts::TAU / 24.0, j as f64 * std::f64::consts::TAU / 24.0];
            best = best.max(evaluate(&c, &th, &test, 2, Backend::Noiseless).unwrap().accuracy);
        }
    }
    assert!(best >= 0.95, "grid optimum {best}");
    for seed in 0..3 {
        let tcfg = TrainConfig {
            epochs: 60,
            batch: 16,
            lr: 0.05,
            seed,
            ..Default::default()
        };
        let r = train(&c, &xor_samples(80, seed), 2, &tcfg).unwrap();
        let acc = evaluate(&c, &r.theta, &test, 2, Backend::Noiseless).unwrap().accuracy;
        assert!(acc >= 0.9, "seed {seed}: {acc} (grid optimum {best})");
    }
}

#[test]
fn moons_loss_mostly_decreases() {
    let ds = DataSpec::moons_default(1).load().unwrap();
    let dev = DeviceModel::noiseless(Topology::HeavyHex7);
    let conf = CircuitConfig {
        n_q: 4,
        n_params: 16,
        n_embeds: 4,
        n_meas: 1,
        data_dim: 2,
    };
    let c = &generate_candidates(&dev, &conf, &RunConfig::default(), 1, 5).unwrap()[0];
    let tcfg = TrainConfig {
        epochs: 50,
        seed: 1,
        ..Default::default()
    };
    let h = train(c, ds.train(), 2, &tcfg).unwrap().history;
    assert_eq!(h.len(), 51);
    let down = h.windows(2).filter(|w| w[1] <= w[0] + 1e-12).count();
    assert!(down as f64 >= 0.8 * 50.0, "{down}/50 epochs decreased");
    assert!(h[50] < h[0]);
}

#[test]
fn constant_half_predictor_is_at_chance() {
    let ds = DataSpec::moons_default(3).load().unwrap();
    // H leaves ⟨Z⟩ = 0, so both classes get probability 1/2 for every input.
    let c = CircuitBuilder::new(1)
        .gates([Gate::h(0)])
        .measure([0])
        .build()
        .unwrap();
    let m = evaluate(&c, &[], ds.test(), 2, Backend::Noiseless).unwrap();
    assert!((m.accuracy - 0.5).abs() < 0.1, "{}", m.accuracy);
    assert!((m.mse - 0.25).abs() < 1e-12);
}
