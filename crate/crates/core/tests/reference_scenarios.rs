//! End-to-end scenarios at the κ=1.5, β=−7, χ=0.05 reference parameters.

use kerr_qsd::classical::bistable_window;
use kerr_qsd::ensemble::Engine;
use kerr_qsd::experiments::{hysteresis_sweep, jump_snapshot, Basin, BasinMap, SweepEngine, SweepOptions};
use kerr_qsd::hilbert::qp_to_amplitude;
use kerr_qsd::qsd::{DisplacedState, StepOptions};
use kerr_qsd::{FockDim, ModelParams};

fn reference() -> ModelParams {
    ModelParams::new(-5.0, -7.0, 0.05, 1.5).unwrap()
}

#[test]
fn wave_packet_spreads_during_a_jump() {
    let p = reference();
    let basins = BasinMap::from_params(&p, 0.35).unwrap();
    let local = FockDim::new(96).unwrap();
    let start = DisplacedState::coherent(qp_to_amplitude(7.0, 14.0), local);
    let rec = Engine::mqsd(local)
        .start(&start, p, 5)
        .unwrap()
        .run(&StepOptions::new(2e-4, 6.0, 50), Some(&basins))
        .unwrap();
    let jumps = jump_snapshot(&rec);
    assert_eq!(jumps.len(), 1);
    let j = jumps[0];
    assert_eq!((j.from, j.to), (Basin::Upper, Basin::Lower));
    assert!(j.ratio > 3.0, "ratio {}", j.ratio);
    assert!(j.baseline_variance > 0.9 && j.baseline_variance < 3.0);
}

#[test]
fn classical_sweep_is_seed_independent_and_spans_window() {
    let p = reference();
    let (lo, hi) = bistable_window(&p).unwrap().unwrap();
    let opts = |seed| SweepOptions {
        detuning_range: (-10.0, -2.0),
        step: 0.1,
        t_m: 50.0,
        dt: 0.01,
        seed,
        engine: SweepEngine::Classical,
    };
    let a = hysteresis_sweep(&p, &opts(1)).unwrap();
    let b = hysteresis_sweep(&p, &opts(2)).unwrap();
    assert_eq!(a.detuning_width, b.detuning_width);
    assert!((a.detuning_width - (hi - lo)).abs() <= 0.1);
    assert!(a.up_jump.unwrap() > a.down_jump.unwrap());
}
