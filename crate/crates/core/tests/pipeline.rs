use std::sync::Arc;

use teamform::dynamics::{run, SimConfig, StopReason, StopRule};
use teamform::matching::{empty_matching, load_matching, save_matching};
use teamform::network::{gen_random, load_network, parse_network, save_network, write_network, ConstraintRule};
use teamform::oracle::best_matching;

#[test]
fn files_round_trip_and_simulation_reaches_stable() {
    let dir = tempfile::tempdir().unwrap();
    let net = gen_random(8, 20, 0.35, 17, ConstraintRule::CappedRatio).unwrap();
    assert_eq!(parse_network(&write_network(&net)).unwrap(), net);

    let net_path = dir.path().join("net.txt");
    save_network(&net, &net_path).unwrap();
    let net = Arc::new(load_network(&net_path).unwrap());

    let best = best_matching(&net);
    let m_path = dir.path().join("best.txt");
    save_matching(&best.witness, &m_path).unwrap();
    let witness = load_matching(&net, &m_path).unwrap();
    assert_eq!(witness.total_deficit(), best.d_star);

    if best.stable_exists {
        let cfg = SimConfig::new(0.8, 0.7, 5).unwrap().with_stop(StopRule::Stable);
        let traj = run(&empty_matching(&net), &cfg);
        assert_eq!(traj.stop_reason, StopReason::RuleSatisfied);
        assert!(traj.final_matching.is_stable());
        let deficits: Vec<usize> = traj.records.iter().map(|r| r.deficit).collect();
        assert!(deficits.windows(2).all(|w| w[1] <= w[0]));
    }
}
