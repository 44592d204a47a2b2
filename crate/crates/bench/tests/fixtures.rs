use kik_bench::ising_schedule;
use kik_core::dynamics::propagate;

#[test]
fn bench_schedules_are_trace_preserving() {
    for n in [2, 3] {
        let p = propagate(&ising_schedule(n, 2)).unwrap().value;
        assert!(p.is_trace_preserving(1e-10));
    }
}
