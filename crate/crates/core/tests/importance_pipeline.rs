use vnom::experiments::{run_sweep, with_workers, SweepSpec};
use vnom::importance::{
    delta_p, delta_rho, estimate_rates, instantiate_edges, run_importance_trials, screen_partitions,
    ProfileWeighting, ScreeningThresholds, TopicMap, BIN_WIDTH,
};
use vnom::io::{self, generate_surrogate, SurrogateConfig, TopicGraphFile};
use vnom::kappa::{sample_kappa, KappaParams, SimplexVec3};
use vnom::nomination::{default_grid, FusionWeight};
use vnom::{Partition, SimpleGraph};

#[test]
fn default_surrogate_density_concentrates() {
    let c = SurrogateConfig::default();
    for seed in 0..100 {
        let g = generate_surrogate(&c, seed).unwrap();
        let d = g.relative_density().unwrap();
        assert!((0.04..=0.06).contains(&d), "seed {seed}: density {d}");
    }
}

#[test]
fn surrogate_file_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("a.txt");
    let second = dir.path().join("b.txt");
    let g = generate_surrogate(&SurrogateConfig::default(), 11).unwrap();
    io::write_topic_graph(&TopicGraphFile::unnamed(g), &first).unwrap();
    let a = io::read_topic_graph(&first).unwrap();
    assert_eq!((a.graph.n(), a.graph.k()), (184, 32));
    io::write_topic_graph(&a, &second).unwrap();
    let b = io::read_topic_graph(&second).unwrap();
    assert_eq!(a, b);
    assert_eq!(std::fs::read(&first).unwrap(), std::fs::read(&second).unwrap());
}

#[test]
fn default_screening_accepts_and_respects_thresholds() {
    let g = generate_surrogate(&SurrogateConfig::default(), 5).unwrap();
    let th = ScreeningThresholds::default();
    let out = screen_partitions(&g, 10, &th, 100_000, 1, ProfileWeighting::MessageCount).unwrap();
    assert!(!out.accepted.is_empty());
    for a in out.accepted.iter().take(200) {
        let dr = delta_rho(&g, &a.partition).unwrap();
        let dp = delta_p(&g, &a.partition, ProfileWeighting::MessageCount).unwrap();
        assert!(dr > th.tau_rho && dp > th.tau_p);
    }
}

#[test]
fn stricter_thresholds_accept_a_subset() {
    let g = generate_surrogate(&SurrogateConfig::default(), 6).unwrap();
    let w = ProfileWeighting::MessageCount;
    let loose = screen_partitions(&g, 10, &ScreeningThresholds::new(0.05, 0.1).unwrap(), 20_000, 3, w).unwrap();
    let strict = screen_partitions(&g, 10, &ScreeningThresholds::new(0.15, 0.3).unwrap(), 20_000, 3, w).unwrap();
    let loose_draws: Vec<u64> = loose.accepted.iter().map(|a| a.draw).collect();
    assert!(strict.accepted.len() <= loose.accepted.len());
    assert!(strict.accepted.iter().all(|a| loose_draws.binary_search(&a.draw).is_ok()));
}

#[test]
fn instantiated_rates_are_unbiased() {
    let g = generate_surrogate(&SurrogateConfig::default(), 8).unwrap();
    let part = Partition::new(g.n(), &(0..30).collect::<Vec<_>>()).unwrap();
    let map = TopicMap::new((0..g.k()).map(|k| k % 3 == 0).collect());
    // Expected count of red edges on each side: sum of red-topic mass.
    let member = part.membership();
    let (mut red_side, mut green_side) = (0.0, 0.0);
    for e in g.edges() {
        let mass: f64 = map.red_topics().iter().map(|&k| e.topics[k - 1]).sum();
        match (member[e.u], member[e.v]) {
            (true, true) => red_side += mass,
            (false, false) => green_side += mass,
            _ => {}
        }
    }
    let pairs = |x: usize| (x * (x - 1) / 2) as f64;
    let (want_s1, want_p1) = (red_side / pairs(30), green_side / pairs(g.n() - 30));
    let reps = 400;
    let (mut s1, mut p1) = (0.0, 0.0);
    for seed in 0..reps {
        let a = instantiate_edges(&g, &part, &map, seed).unwrap();
        let r = estimate_rates(&a, &part).unwrap();
        s1 += r.s_hat_1 / reps as f64;
        p1 += r.p_hat_1 / reps as f64;
    }
    assert!((s1 - want_s1).abs() < 0.01, "{s1} vs {want_s1}");
    assert!((p1 - want_p1).abs() < 0.002, "{p1} vs {want_p1}");
}

#[test]
fn kappa_rate_estimates_are_consistent() {
    let p = SimplexVec3::new(0.7, 0.1, 0.2).unwrap();
    let s = SimplexVec3::new(0.3, 0.5, 0.2).unwrap();
    let params = KappaParams::new(100, 20, 5, p, s).unwrap();
    let reps = 100;
    let mut acc = [0.0; 4];
    for seed in 0..reps {
        let g = sample_kappa(&params, seed);
        let part = Partition::new(g.n(), &g.red_set()).unwrap();
        let r = estimate_rates(&g, &part).unwrap();
        for (a, x) in acc.iter_mut().zip([r.p_hat_1, r.p_hat_2, r.s_hat_1, r.s_hat_2]) {
            *a += x / reps as f64;
        }
    }
    for (got, want) in acc.iter().zip([0.1, 0.2, 0.5, 0.2]) {
        assert!((got - want).abs() < 0.01, "{got} vs {want}");
    }
}

#[test]
fn importance_results_do_not_depend_on_worker_count() {
    let g = generate_surrogate(&SurrogateConfig::default(), 2).unwrap();
    let grid: Vec<FusionWeight> = [0.0, 0.5, 1.0].iter().map(|&x| FusionWeight::new(x).unwrap()).collect();
    let run = |workers| {
        with_workers(Some(workers), || {
            let out =
                screen_partitions(&g, 10, &ScreeningThresholds::default(), 30_000, 4, ProfileWeighting::MessageCount)
                    .unwrap();
            run_importance_trials(&g, &out.accepted, 5, &grid, 3, BIN_WIDTH, 4).unwrap()
        })
        .unwrap()
    };
    assert_eq!(run(1), run(4));
}

#[test]
fn sweep_results_do_not_depend_on_worker_count() {
    let mut spec = SweepSpec::standard(0.25, 30, 77);
    spec.m_values = vec![8, 20];
    spec.gamma_grid = default_grid().iter().map(|w| w.gamma()).collect();
    let one = with_workers(Some(1), || run_sweep(&spec)).unwrap().unwrap();
    let many = with_workers(Some(6), || run_sweep(&spec)).unwrap().unwrap();
    assert_eq!(one, many);
}
