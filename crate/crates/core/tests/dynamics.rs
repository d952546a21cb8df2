use flownet_core::dynamics::{integrate, rhs, Evaluator, IntegrationConfig, Termination};
use flownet_core::fixtures::motivating_network;
use flownet_core::properties::{random_network, random_softmax, RandomNetworkConfig};
use flownet_core::routing::{check_axioms, AxiomCheck, MotivatingPolicy, RoutingMatrix};
use flownet_core::{Bound, RoutingPolicy};
use proptest::prelude::*;

#[test]
fn fixed_matrix_equilibrium_in_closed_form() {
    // origin splits 4/3 : 2/3, link 1 splits evenly, so at equilibrium
    // 2 (1 - e^-r1) = 4/3, 1 - e^-r2 = 2/3, 1 - e^-r3 = 1 - e^-r4 = 2/3 and
    // 3 (1 - e^-r5) = 4/3
    let net = motivating_network(Bound::Unbounded);
    let p = MotivatingPolicy::new(&net, RoutingMatrix::Fixed).unwrap();
    let cfg = IntegrationConfig { t_max: 500.0, ..IntegrationConfig::default() };
    let traj = integrate(&net, &p, &[0.0; 5], &cfg).unwrap();
    assert!(matches!(traj.termination, Termination::EquilibriumDetected { .. }));
    let l3 = 3f64.ln();
    let expected = [l3, l3, l3, l3, (9.0f64 / 5.0).ln()];
    for (a, b) in traj.final_state().iter().zip(expected) {
        assert!((a - b).abs() < 1e-7, "{a} vs {b}");
    }
}

#[test]
fn motivating_policies_pass_the_axioms() {
    let net = motivating_network(Bound::Unbounded);
    for m in [RoutingMatrix::Fixed, RoutingMatrix::LocallyResponsive, RoutingMatrix::FlowControl] {
        let p = MotivatingPolicy::new(&net, m).unwrap();
        let r = check_axioms(&p, &net, &AxiomCheck { samples: 200, ..AxiomCheck::default() });
        assert!(r.errors.is_empty(), "{m:?}");
    }
}

fn instance(seed: u64) -> (flownet_core::Network, flownet_core::routing::SoftmaxPolicy, Vec<f64>) {
    let cfg = RandomNetworkConfig { max_load: None, ..RandomNetworkConfig::default() };
    let net = random_network(seed, &cfg);
    let p = random_softmax(&net, seed ^ 1);
    let rho = net
        .links()
        .iter()
        .enumerate()
        .map(|(i, l)| {
            let u = ((seed.rotate_left(i as u32 * 7) % 1000) as f64 + 0.5) / 1000.0;
            match l.buffer {
                Bound::Finite(b) => u * b,
                Bound::Unbounded => 5.0 * u,
            }
        })
        .collect();
    (net, p, rho)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn flows_are_feasible_and_conserve_mass(seed in any::<u64>()) {
        let (net, p, rho) = instance(seed);
        let m = net.link_count();
        let (mut fin, mut fout) = (vec![0.0; m], vec![0.0; m]);
        Evaluator::new(&net, &p).flows(&rho, &mut fin, &mut fout).unwrap();
        for (e, l) in net.links().iter().enumerate() {
            prop_assert!(fout[e] >= 0.0 && fin[e] >= 0.0);
            prop_assert!(fout[e] <= l.capacity.as_f64() * (1.0 + 1e-12));
        }
        let d = rhs(&net, &p, &rho).unwrap();
        let exits: f64 = net.destination_links().iter().map(|e| fout[e.0]).sum();
        let total: f64 = d.iter().sum();
        prop_assert!((total - (net.total_inflow() - exits)).abs() <= 1e-12 * (1.0 + net.total_inflow() + exits) * m as f64);
        // every node passes on exactly what it receives
        for v in net.nodes().filter(|v| !net.is_destination(*v)) {
            let arriving: f64 = net.in_links(v).iter().map(|e| fout[e.0]).sum::<f64>() + net.inflow(v);
            let leaving: f64 = net.out_links(v).iter().map(|e| fin[e.0]).sum();
            prop_assert!((arriving - leaving).abs() <= 1e-12 * (1.0 + arriving));
        }
    }

    #[test]
    fn trajectories_stay_in_the_box(seed in any::<u64>()) {
        let (net, p, rho) = instance(seed);
        let cfg = IntegrationConfig { t_max: 5.0, tol_buffer: 1e-3, ..IntegrationConfig::default() };
        let traj = integrate(&net, &p, &rho, &cfg).unwrap();
        for s in &traj.states {
            for (r, l) in s.iter().zip(net.links()) {
                prop_assert!(*r >= 0.0);
                if let Bound::Finite(b) = l.buffer {
                    prop_assert!(*r < b);
                }
            }
        }
        prop_assert!(traj.times.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn softmax_splits_are_pure(seed in any::<u64>()) {
        let (net, p, rho) = instance(seed);
        let a = rhs(&net, &p, &rho).unwrap();
        let b = rhs(&net, &p, &rho).unwrap();
        prop_assert_eq!(a, b);
        prop_assert_eq!(p.name(), "softmax");
    }
}
