//! Property-based invariants across the library.

use num_complex::Complex64;
use proptest::prelude::*;

use kik_core::bounds::bounds_from;
use kik_core::coefficients::{
    adaptive_coefficients, adaptive_coefficients_ls, l2_error_on, richardson_weights, sampling_overhead,
    taylor_coefficients,
};
use kik_core::dynamics::{propagate, pulse_inverse, Segment};
use kik_core::engine::{allocate_shots, MeasurementMatrix};
use kik_core::liouville::{
    hamiltonian_superop, lindblad_superop, pauli_channel_superop, pauli_labels, ptm_of, vectorize, HilbertOp,
    SuperOperator, VecObservable, VecState,
};
use kik_core::noise::{accumulated_noise, build_generator, NoiseKind, NoiseSpec};
use kik_core::scenarios::config::{ScenarioConfig, ScenarioKind};
use kik_core::PulseSchedule;

fn complex_op(d: usize, re: &[f64], im: &[f64]) -> HilbertOp {
    let z: Vec<Complex64> = re.iter().zip(im).map(|(a, b)| Complex64::new(*a, *b)).collect();
    HilbertOp::from_row_slice(d, &z).unwrap()
}

fn hermitian(d: usize, re: &[f64], im: &[f64]) -> HilbertOp {
    let a = complex_op(d, re, im);
    a.add(&a.adjoint()).scale(0.5)
}

/// `A A† / Tr(A A†)`.
fn density(d: usize, re: &[f64], im: &[f64]) -> HilbertOp {
    let a = complex_op(d, re, im);
    let p = a.mul(&a.adjoint());
    let tr = p.trace().re;
    p.scale(1.0 / tr)
}

fn entries(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, n)
}

fn two_qubit_schedule(h: &[f64], rates: &[f64], dur: f64) -> PulseSchedule {
    let labels: Vec<String> = pauli_labels(2).into_iter().skip(1).collect();
    let mut ham = HilbertOp::zeros(4);
    for (l, c) in labels.iter().zip(h) {
        ham = ham.add(&kik_core::liouville::pauli_string(l).unwrap().scale(*c));
    }
    let terms: Vec<(&str, f64)> = labels.iter().zip(rates).map(|(l, r)| (l.as_str(), *r)).collect();
    let l = pauli_channel_superop(&terms).unwrap();
    PulseSchedule::single(Segment::new(ham, l, dur, "p").unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn vectorization_identity(b in entries(18), cc in entries(18), dd in entries(18)) {
        let (b, cm, d) = (complex_op(3, &b[..9], &b[9..]), complex_op(3, &cc[..9], &cc[9..]), complex_op(3, &dd[..9], &dd[9..]));
        let lhs = vectorize(&b.mul(&cm).mul(&d));
        let dt = HilbertOp::new(d.matrix().transpose()).unwrap();
        let s = SuperOperator::from_matrix(3, b.kron(&dt).into_matrix()).unwrap();
        let rhs = s.apply(&vectorize(&cm)).unwrap();
        let diff = (lhs.vector() - rhs.vector()).camax();
        prop_assert!(diff < 1e-12);
    }

    #[test]
    fn observable_is_trace(a in entries(32), r in entries(32)) {
        let a = hermitian(4, &a[..16], &a[16..]);
        let rho = density(4, &r[..16], &r[16..]);
        let via_vec = VecObservable::new(&a).unwrap().apply(&vectorize(&rho)).unwrap();
        let tr = a.mul(&rho).trace();
        prop_assert!((via_vec - tr).norm() < 1e-12);
    }

    #[test]
    fn unitary_evolution_keeps_expectation_real(h in entries(32), a in entries(32), r in entries(32), t in 0.0f64..3.0) {
        let h = hermitian(4, &h[..16], &h[16..]);
        let s = PulseSchedule::single(Segment::noiseless(h, t.max(1e-3), "h").unwrap());
        let p = propagate(&s).unwrap().value;
        let rho = VecState::physical(&density(4, &r[..16], &r[16..]), 1e-10).unwrap();
        let obs = VecObservable::new(&hermitian(4, &a[..16], &a[16..])).unwrap();
        let z = obs.apply(&p.apply(&rho).unwrap()).unwrap();
        prop_assert!(z.im.abs() < 1e-10);
        let sts = p.adjoint().compose(&p);
        prop_assert!(sts.max_abs_diff(&SuperOperator::identity(4)) < 1e-9);
    }

    #[test]
    fn generators_are_trace_preserving(j in entries(16), rates in prop::collection::vec(0.0f64..2.0, 15)) {
        let jump = complex_op(2, &j[..4], &j[4..8]);
        let jump2 = complex_op(2, &j[8..12], &j[12..]);
        let g = lindblad_superop(&[(jump, rates[0]), (jump2, rates[1])], 2).unwrap();
        prop_assert!(g.trace_defect(true) < 1e-12);
        let labels: Vec<String> = pauli_labels(2).into_iter().skip(1).collect();
        let terms: Vec<(&str, f64)> = labels.iter().zip(&rates).map(|(l, r)| (l.as_str(), *r)).collect();
        let pc = pauli_channel_superop(&terms).unwrap();
        prop_assert!(pc.trace_defect(true) < 1e-12);
        prop_assert!(pc.is_hermitian(1e-12));
        let e = pc.exp(0.7).unwrap();
        prop_assert!(e.is_trace_preserving(1e-10));
    }

    #[test]
    fn depolarizing_commutes_with_unitaries(h in entries(32), p in 0.0f64..0.5) {
        let spec = NoiseSpec::new(NoiseKind::GlobalDepolarizing { p, dim: 4 }, 1.0);
        let g = build_generator(&spec).unwrap();
        let hs = hamiltonian_superop(&hermitian(4, &h[..16], &h[16..])).unwrap();
        let comm = g.compose(&hs).sub(&hs.compose(&g));
        prop_assert!(comm.max_abs_diff(&SuperOperator::zeros(4)) < 1e-10);
    }

    #[test]
    fn ptm_composition(h1 in entries(32), h2 in entries(32), rates in prop::collection::vec(0.0f64..0.3, 15)) {
        let a = two_qubit_schedule(&h1[..15], &rates, 0.8);
        let b = two_qubit_schedule(&h2[..15], &rates, 0.5);
        let ka = propagate(&a).unwrap().value;
        let kb = propagate(&b).unwrap().value;
        let lhs = ptm_of(&kb.compose(&ka)).unwrap();
        let rhs = ptm_of(&kb).unwrap().compose(&ptm_of(&ka).unwrap());
        prop_assert!((lhs.r - rhs.r).amax() < 1e-10);
        let pu = ptm_of(&propagate(&a.noiseless()).unwrap().value).unwrap();
        let orth = &pu.r * pu.r.transpose();
        prop_assert!((orth - nalgebra::DMatrix::identity(16, 16)).amax() < 1e-10);
        prop_assert!((pu.r[(0, 0)] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn schedule_propagator_is_tp_and_inverse_is_involution(h in entries(15), rates in prop::collection::vec(0.0f64..0.3, 15), dur in 0.1f64..2.0) {
        let s = two_qubit_schedule(&h, &rates, dur);
        prop_assert!(propagate(&s).unwrap().value.is_trace_preserving(1e-9));
        prop_assert_eq!(pulse_inverse(&pulse_inverse(&s)), s.clone());
        let both = s.then(&pulse_inverse(&s));
        prop_assert!((accumulated_noise(&both) - 2.0 * accumulated_noise(&s)).abs() < 1e-12);
    }

    #[test]
    fn coefficient_normalization(m in 0usize..=8, g in 0.0f64..=1.0) {
        prop_assert!((taylor_coefficients(m).unwrap().sum() - 1.0).abs() < 1e-12);
        if m >= 1 {
            prop_assert!((adaptive_coefficients_ls(m, g).unwrap().sum() - 1.0).abs() < 1e-12);
        }
        if (1..=3).contains(&m) {
            prop_assert!((adaptive_coefficients(m, g).unwrap().sum() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn richardson_matches_taylor(m in 0usize..=6, lam in 1e-3f64..10.0) {
        let t = taylor_coefficients(m).unwrap();
        for (a, b) in t.values.iter().zip(richardson_weights(m, lam)) {
            prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
        }
    }

    #[test]
    fn adaptive_is_local_l2_minimum(m in 1usize..=3, g in 0.05f64..0.95, dir in entries(3)) {
        let a = adaptive_coefficients(m, g).unwrap();
        let base = l2_error_on(&a.values, g).unwrap();
        let mut v = a.values.clone();
        let norm = dir[..m].iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-9);
        for k in 0..m {
            v[k] += 1e-3 * dir[k] / norm;
        }
        let head: f64 = v[..m].iter().sum();
        v[m] = 1.0 - head;
        prop_assert!(l2_error_on(&v, g).unwrap() >= base - 1e-15);
    }

    #[test]
    fn overhead_grows_as_g_shrinks(m in 1usize..=3, g in 0.0f64..0.99) {
        let lo = sampling_overhead(&adaptive_coefficients(m, g).unwrap());
        let hi = sampling_overhead(&adaptive_coefficients(m, (g + 0.01).min(1.0)).unwrap());
        prop_assert!(lo >= hi - 1e-12);
    }

    #[test]
    fn bound_ordering_in_admissible_region(m in 1usize..=3, lam in 0.0f64..0.5, t in 0.0f64..=1.0) {
        let floor = (-2.0 * lam).exp();
        let mu = floor + t * (1.0 - floor);
        let b = bounds_from(1.0, lam, mu, m).unwrap();
        prop_assert!(b.admissible());
        prop_assert!(b.ordered(1e-12), "{:?}", b);
    }

    #[test]
    fn shot_allocation_is_integer_optimal(m in 1usize..=3, g in 0.0f64..=1.0, total in 10u64..5000) {
        let a = adaptive_coefficients(m, g).unwrap();
        let n = allocate_shots(&a, total).unwrap();
        prop_assert_eq!(n.iter().sum::<u64>(), total);
        let cost = |n: &[u64]| a.values.iter().zip(n).map(|(x, k)| x * x / *k as f64).sum::<f64>();
        let base = cost(&n);
        for i in 0..n.len() {
            for j in 0..n.len() {
                if i != j && n[j] > 1 {
                    let mut moved = n.clone();
                    moved[i] += 1;
                    moved[j] -= 1;
                    prop_assert!(cost(&moved) >= base * (1.0 - 1e-12));
                }
            }
        }
    }

    #[test]
    fn readout_round_trip(flips in prop::collection::vec((0.0f64..0.2, 0.0f64..0.2), 1..=3), raw in prop::collection::vec(0.01f64..1.0, 8)) {
        let mm = MeasurementMatrix::from_flip_probs(&flips).unwrap();
        let d = 1usize << flips.len();
        let tot: f64 = raw[..d].iter().sum();
        let p: Vec<f64> = raw[..d].iter().map(|x| x / tot).collect();
        let back = mm.correct(&mm.distort(&p)).unwrap();
        for (x, y) in p.iter().zip(&back) {
            prop_assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn config_round_trip(seed in any::<u64>(), xi in prop::collection::vec(0.0f64..0.1, 1..4), k in 0usize..6) {
        let mut cfg = ScenarioConfig::default_for(ScenarioKind::ALL[k]);
        cfg.scenario.seed = seed;
        cfg.noise.xi = xi;
        let back = ScenarioConfig::parse(&cfg.to_toml()).unwrap();
        prop_assert_eq!(&back, &cfg);
        prop_assert_eq!(back.hash(), cfg.hash());
    }
}
