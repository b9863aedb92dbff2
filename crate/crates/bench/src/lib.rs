//! Input builders shared by the criterion benches.

use aclab_core::mdp::{self, joint_kernel, KernelKind, MdpSpec, StateActionKernel};
use aclab_core::policy::{softmax_policy, PolicyTable, ThetaTable};
use aclab_core::table::Table;

/// The two-state chain fixture.
pub fn chain() -> MdpSpec {
    mdp::fixtures::chain()
}

/// A seeded dense MDP with `n` states and 4 actions.
pub fn dense_mdp(n: usize) -> MdpSpec {
    mdp::random_mdp(n, 4, 0.9, 99, 0.001).expect("random spec is valid")
}

/// A mildly tilted softmax policy for `spec`.
pub fn tilted_policy(spec: &MdpSpec) -> PolicyTable {
    let data: Vec<f64> = (0..spec.n_xi()).map(|i| 0.3 * ((i % 5) as f64 - 2.0)).collect();
    let theta =
        ThetaTable::new(Table::from_flat(spec.n_states(), spec.n_actions(), data).unwrap())
            .unwrap();
    softmax_policy(&theta)
}

/// Joint original-chain kernel for `spec` under the tilted policy.
pub fn tilted_kernel(spec: &MdpSpec) -> StateActionKernel {
    joint_kernel(spec, &tilted_policy(spec), KernelKind::OriginalWithG).expect("kernel builds")
}
