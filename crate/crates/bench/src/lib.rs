//! Criterion benchmarks for `kik-core`; see `benches/`.

use kik_core::dynamics::PulseSchedule;
use kik_core::scenarios::models::IsingModel;

/// Reference Ising chain truncated to `n` qubits.
pub fn ising_schedule(n: usize, steps: usize) -> PulseSchedule {
    let mut m = IsingModel::reference();
    m.n_qubits = n;
    m.trotter_steps = steps;
    m.jump_weights.truncate(n);
    m.schedule(0.01).expect("valid model")
}
