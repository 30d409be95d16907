use robust_dividend::simulator::{
    settle, simulate, simulate_aggregate, simulate_two_lines, trace_aggregate, trace_two_lines, SimConfig, SimMode,
};
use robust_dividend::{solve, ClosedFormSolution, RawParams};

fn base() -> ClosedFormSolution {
    solve(&RawParams::base().validate().unwrap()).unwrap()
}

fn two_line(x1: f64, x2: f64) -> SimConfig {
    SimConfig {
        x1,
        x2,
        mode: SimMode::TwoLine,
        ..Default::default()
    }
}

#[test]
fn identical_seeds_give_identical_results() {
    let s = base();
    for cfg in [
        SimConfig {
            x0: 0.8,
            n_paths: 64,
            dt: 1e-2,
            seed: 11,
            antithetic: true,
            ..Default::default()
        },
        SimConfig {
            n_paths: 64,
            dt: 1e-2,
            seed: 11,
            kill_after: Some(1.0),
            ..two_line(0.2, 0.5)
        },
    ] {
        let a = serde_json::to_string(&simulate(&s, &cfg).unwrap()).unwrap();
        let b = serde_json::to_string(&simulate(&s, &cfg).unwrap()).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn antithetic_counts_pairs() {
    let s = base();
    let cfg = SimConfig {
        n_paths: 10,
        dt: 1e-2,
        t_max: Some(2.0),
        antithetic: true,
        keep_paths: true,
        ..Default::default()
    };
    let r = simulate_aggregate(&s, &cfg).unwrap();
    assert_eq!(r.n_samples, 10);
    assert_eq!(r.paths.unwrap().len(), 20);
}

#[test]
fn two_line_aggregate_tracks_the_aggregate_path() {
    let s = base();
    for (x1, x2) in [(0.4, 0.6), (0.0, 1.0), (1.2, 0.1)] {
        let two = SimConfig {
            dt: 1e-3,
            t_max: Some(20.0),
            seed: 5,
            ..two_line(x1, x2)
        };
        let agg = SimConfig {
            x0: x1 + x2,
            mode: SimMode::Aggregate,
            ..two
        };
        for id in 0..4 {
            let (xs, r2) = trace_two_lines(&s, &two, id).unwrap();
            let (ys, ra) = trace_aggregate(&s, &agg, id).unwrap();
            assert_eq!(xs.len(), ys.len());
            for (k, ((a, b), y)) in xs.iter().zip(&ys).enumerate() {
                assert!((a + b - y).abs() <= 1e-12, "path {id} step {k}: {} vs {y}", a + b);
                assert!(
                    *a >= 0.0 && *b >= 0.0 || a + b <= 0.0,
                    "({a}, {b}) at step {k} of {}",
                    xs.len()
                );
            }
            assert_eq!(r2.ruin_time, ra.ruin_time);
            assert!(
                (r2.discounted_dividends - ra.discounted_dividends).abs() <= 1e-12 * ra.discounted_dividends.max(1.0)
            );
            assert!((r2.discounted_penalty - ra.discounted_penalty).abs() <= 1e-12 * ra.discounted_penalty.max(1.0));
        }
    }
}

#[test]
fn excess_on_line_one_cascades_to_a_dividend() {
    let b = base().bstar;
    let st = settle(b + 1.0, 0.0, b);
    assert_eq!((st.x1, st.x2), (b, 0.0));
    assert_eq!(st.from1, 1.0);
    assert!((st.dividend - 1.0).abs() < 1e-15);
    let quiet = settle(0.3, 0.3, b);
    assert_eq!(
        (quiet.x1, quiet.x2, quiet.dividend, quiet.from1, quiet.from2),
        (0.3, 0.3, 0.0, 0.0, 0.0)
    );
    let rescue = settle(-0.1, 0.5, b);
    assert!((rescue.x2 - 0.4).abs() < 1e-15 && rescue.x1 == 0.0 && rescue.from2 == 0.1);
}

#[test]
fn lump_start_matches_the_cascade() {
    let s = base();
    let b = s.bstar;
    let cfg = SimConfig {
        n_paths: 1,
        dt: 1e-3,
        t_max: Some(1e-3),
        keep_paths: true,
        ..two_line(b + 1.0, 0.0)
    };
    let r = simulate_two_lines(&s, &cfg).unwrap();
    let p = r.paths.unwrap()[0];
    assert!(p.discounted_dividends >= 1.0 - 1e-12);
    assert!(p.transfer_from1 >= 1.0);
}

#[test]
fn no_dividends_before_the_barrier_is_reached() {
    let s = base();
    let cfg = SimConfig {
        n_paths: 200,
        dt: 1e-3,
        t_max: Some(0.02),
        ..two_line(0.2, 0.2)
    };
    let r = simulate_two_lines(&s, &cfg).unwrap();
    assert_eq!(r.dividend_part, 0.0);
}

#[test]
fn swapped_labels_mirror_the_canonical_run() {
    let raw = RawParams::base();
    let flipped = RawParams {
        mu1: raw.mu2,
        mu2: raw.mu1,
        sigma1: raw.sigma2,
        sigma2: raw.sigma1,
        a1: 0.7,
        a2: Some(0.3),
        ..raw
    };
    let (s, f) = (base(), solve(&flipped.validate().unwrap()).unwrap());
    assert!(f.swapped);
    let cfg = SimConfig {
        n_paths: 50,
        dt: 1e-2,
        t_max: Some(10.0),
        ..two_line(0.1, 0.9)
    };
    let mirrored = SimConfig {
        x1: 0.9,
        x2: 0.1,
        ..cfg
    };
    let (a, b) = (
        simulate_two_lines(&s, &cfg).unwrap(),
        simulate_two_lines(&f, &mirrored).unwrap(),
    );
    assert_eq!(a.j_hat, b.j_hat);
    assert_eq!(
        (a.mean_transfer_from1, a.mean_transfer_from2),
        (b.mean_transfer_from2, b.mean_transfer_from1)
    );
}

#[test]
fn dividends_are_positive_when_paths_survive() {
    let s = base();
    let r = simulate_aggregate(
        &s,
        &SimConfig {
            x0: 0.5,
            n_paths: 100,
            dt: 1e-2,
            ..Default::default()
        },
    )
    .unwrap();
    assert!(r.ruined_fraction < 1.0);
    assert!(r.dividend_part > 0.0);
    assert!(r.std_err >= 0.0 && (0.0..=1.0).contains(&r.ruined_fraction));
}

#[test]
fn refinement_differences_shrink() {
    // one Brownian path per seed, sampled at 8, 4, 2 and 1 fine increments per step
    let s = base();
    let fine = 2.5e-3;
    let run = |k: u32| {
        let cfg = SimConfig {
            x0: 1.0,
            dt: fine * k as f64,
            substeps: k,
            n_paths: 4000,
            kill_after: Some(2.0),
            seed: 3,
            ..Default::default()
        };
        simulate_aggregate(&s, &cfg).unwrap().j_hat
    };
    let j: Vec<f64> = [8, 4, 2, 1].into_iter().map(run).collect();
    let d: Vec<f64> = j.windows(2).map(|w| (w[0] - w[1]).abs()).collect();
    assert!(d[0] > d[1] && d[1] > d[2], "{j:?} {d:?}");
}
