use mapsim::modulator::{simulate_modulator, stationary_measure, ModulatorSpec, State};
use mapsim::rng::Seed;

const RATES: [(&str, &str, f64); 5] = [("a", "b", 1.0), ("b", "c", 2.0), ("c", "a", 3.0), ("a", "c", 0.5), ("c", "b", 1.0)];

/// Invariant law of the uniformized jump chain by power iteration.
fn power_iteration() -> [f64; 3] {
    let idx = |s: &str| (s.as_bytes()[0] - b'a') as usize;
    let mut q = [[0.0; 3]; 3];
    for (f, t, r) in RATES {
        q[idx(f)][idx(t)] += r;
        q[idx(f)][idx(f)] -= r;
    }
    let u = 5.0;
    let mut p = [1.0 / 3.0; 3];
    for _ in 0..5000 {
        let mut next = [0.0; 3];
        for i in 0..3 {
            for j in 0..3 {
                next[j] += p[i] * (if i == j { 1.0 } else { 0.0 } + q[i][j] / u);
            }
        }
        p = next;
    }
    p
}

#[test]
fn occupation_fractions_approach_stationary_law() {
    let spec = ModulatorSpec::finite(&["a", "b", "c"], &RATES).unwrap();
    let oracle = power_iteration();
    let pi = stationary_measure(&spec).unwrap();
    for s in 0..3 {
        assert!((pi.weight(State(s)) - oracle[s as usize]).abs() < 1e-12);
    }
    let horizon = 2.0e4;
    let path = simulate_modulator(&spec, State(0), horizon, &mut Seed(7).stream(0)).unwrap();
    let mut occ = [0.0; 3];
    for seg in path.segments() {
        occ[seg.state.0 as usize] += seg.len();
    }
    assert!((occ.iter().sum::<f64>() - horizon).abs() < 1e-6 * horizon);
    for s in 0..3 {
        // mixing time is O(1), so the fraction error is O(T^{-1/2})
        assert!((occ[s] / horizon - oracle[s]).abs() < 0.02, "state {s}: {} vs {}", occ[s] / horizon, oracle[s]);
    }
}

#[test]
fn walk_returns_to_origin() {
    let spec = ModulatorSpec::SymmetricWalk;
    let paths = 400;
    let mut returned = 0;
    for i in 0..paths {
        let path = simulate_modulator(&spec, State(0), 1.0e4, &mut Seed(8).stream(i)).unwrap();
        if path.transitions().skip(1).any(|(_, _, to)| to == State(0)) {
            returned += 1;
        }
        assert!(path.transitions().all(|(_, from, to)| (from.0 - to.0).abs() == 1));
    }
    // a return is certain with probability one; by T = 1e4 the miss chance is about 1%
    assert!(returned as f64 / paths as f64 > 0.95, "{returned}/{paths}");
}

#[test]
fn walk_occupation_of_origin_grows_like_sqrt_t() {
    let spec = ModulatorSpec::SymmetricWalk;
    let h = spec.darling_kac();
    let mean = |t: f64| {
        let n = 2000;
        (0..n)
            .map(|i| {
                let path = simulate_modulator(&spec, State(0), t, &mut Seed(9).stream(i)).unwrap();
                path.segments().filter(|s| s.state == State(0)).map(|s| s.len()).sum::<f64>()
            })
            .sum::<f64>()
            / n as f64
    };
    let (small, large) = (mean(100.0), mean(1600.0));
    let growth = large / small;
    assert!((growth - 4.0).abs() < 0.4, "growth {growth}");
    assert!((h.h(1600.0) / h.h(100.0) - 4.0).abs() < 1e-12);
}
