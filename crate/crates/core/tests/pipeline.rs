use sbnrg::circuit::{map_to_spin_boson, CircuitParams, DeltaConvention};
use sbnrg::criticality::{classify_phase, count_crossings, crossover_point, Phase};
use sbnrg::nrg::{run, NrgConfig};
use sbnrg::SpinBosonParams;

fn device(bias: f64) -> CircuitParams {
    CircuitParams {
        c_j: 0.85e-12,
        c_0: 5.0 * 0.85e-12,
        i_0: 2e-6,
        i_b: bias * 2e-6,
        l: 2500.0 * 1.6e-10,
        c: 1.6e-10,
    }
}

fn quick() -> NrgConfig {
    NrgConfig {
        n_s: 40,
        n_iter: 40,
        ..NrgConfig::default()
    }
}

#[test]
fn circuit_alpha_feeds_a_single_crossing_flow() {
    let mapping = map_to_spin_boson(&device(0.9), 1e14, DeltaConvention::HalfOmegaP).unwrap();
    let alpha = mapping.model.alpha;
    assert!(alpha > 0.5 && alpha < 0.8, "{alpha}");

    let p = SpinBosonParams::ohmic(1e-2, alpha);
    let result = run(&p, &quick()).unwrap();
    assert_eq!(count_crossings(&result.flow, 0.3), 1);
    let pt = crossover_point(alpha, &result.flow, 0.3).unwrap();
    assert!(pt.n_star > 1.0 && pt.n_star < 40.0, "{}", pt.n_star);
}

#[test]
fn stronger_coupling_delays_the_crossover() {
    let n_star = |alpha: f64| {
        let r = run(&SpinBosonParams::ohmic(1e-2, alpha), &quick()).unwrap();
        crossover_point(alpha, &r.flow, 0.3).unwrap().n_star
    };
    let (a, b, c) = (n_star(0.3), n_star(0.5), n_star(0.7));
    assert!(a < b && b < c, "{a} {b} {c}");
}

#[test]
fn bias_localizes_strong_coupling_only() {
    let cfg = quick();
    let weak = run(&SpinBosonParams::ohmic(1e-2, 0.1).with_epsilon(1e-4), &cfg).unwrap();
    let strong = run(&SpinBosonParams::ohmic(1e-2, 2.0).with_epsilon(1e-4), &cfg).unwrap();
    assert_eq!(
        classify_phase(weak.delta_p, 0.05, 0.45).unwrap().label,
        Phase::Delocalized
    );
    assert_eq!(
        classify_phase(strong.delta_p, 0.05, 0.45).unwrap().label,
        Phase::Localized
    );
}
