use std::f64::consts::FRAC_PI_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use softlabel_core::activations::{SigmoidParams, SsfParams, StepGrid, TailMode};

const THETAS: [f64; 3] = [0.0, 0.05, 0.2];

fn near_breakpoint(p: &SsfParams, x: f64, radius: f64) -> bool {
    p.breakpoints().iter().any(|b| (x - b).abs() < radius)
}

/// Nearest grid value by exhaustive search, ties to the larger value.
fn brute_nearest(grid: &[f64], y: f64) -> f64 {
    let mut best = grid[0];
    for &g in grid {
        if (y - g).abs() <= (y - best).abs() {
            best = g;
        }
    }
    best
}

#[test]
fn grid_points_and_midpoints_are_fixed() {
    for a in 1..=10u32 {
        for theta in THETAS {
            let p = SsfParams::new(a, theta).unwrap();
            let af = f64::from(a);
            for k in 0..=a {
                let x = f64::from(k) / af;
                if theta > 0.0 && k == a {
                    continue;
                }
                assert!((p.value(x) - x).abs() < 1e-12, "a={a} theta={theta} k={k}");
            }
            for n in 0..a {
                let mid = f64::from(2 * n + 1) / (2.0 * af);
                assert!((p.value(mid) - mid).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn continuity_at_breakpoints() {
    let eps = 1e-12;
    for a in 1..=10u32 {
        for theta in THETAS {
            for tail in [TailMode::Jump, TailMode::Continuous] {
                let p = SsfParams::with_tail(a, theta, tail).unwrap();
                for b in p.breakpoints() {
                    let gap = p.value(b) - p.value(b - eps);
                    let expected = if tail == TailMode::Jump && b == 1.0 { theta } else { 0.0 };
                    assert!(
                        (gap - expected).abs() < 1e-9,
                        "a={a} theta={theta} {tail:?} at {b}: gap {gap}"
                    );
                }
            }
        }
    }
}

#[test]
fn monotone_for_positive_slope() {
    for a in [1u32, 2, 3, 5, 10] {
        for theta in [0.05, 0.2] {
            for tail in [TailMode::Jump, TailMode::Continuous] {
                let p = SsfParams::with_tail(a, theta, tail).unwrap();
                let n = 100_000;
                let mut prev = f64::NEG_INFINITY;
                for i in 0..n {
                    let x = -2.0 + 5.0 * i as f64 / (n - 1) as f64;
                    let y = p.value(x);
                    assert!(y >= prev, "a={a} x={x}");
                    prev = y;
                }
            }
        }
    }
}

#[test]
fn derivative_range_and_zero_at_interior_grid_points() {
    for a in 1..=10u32 {
        let p = SsfParams::new(a, 0.05).unwrap();
        for i in 0..10_000 {
            let x = i as f64 / 10_000.0;
            let d = p.derivative(x);
            assert!((-1e-15..=FRAC_PI_2 + 1e-15).contains(&d));
        }
        let af = f64::from(a);
        for k in 1..a {
            let x = f64::from(k) / af;
            assert!(p.derivative(x).abs() < 1e-12);
            // left side: end of segment k-1
            let left = p.derivative(x - 1e-12);
            assert!(left.abs() < 1e-9, "a={a} k={k}: {left}");
        }
    }
}

#[test]
fn analytic_derivatives_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let h = 1e-6;
    for a in [1u32, 2, 3, 5, 10] {
        for tail in [TailMode::Jump, TailMode::Continuous] {
            let p = SsfParams::with_tail(a, 0.05, tail).unwrap();
            let mut checked = 0;
            while checked < 1000 {
                let x: f64 = rng.gen_range(-2.0..3.0);
                if near_breakpoint(&p, x, 1e-4) {
                    continue;
                }
                let fd = (p.value(x + h) - p.value(x - h)) / (2.0 * h);
                let an = p.derivative(x);
                assert!((an - fd).abs() / an.abs().max(1.0) < 1e-5, "a={a} x={x}");
                checked += 1;
            }
        }
    }
    for widening in [1.0, 5.0] {
        let s = SigmoidParams::new(widening).unwrap();
        for _ in 0..1000 {
            let x: f64 = rng.gen_range(-2.0..3.0);
            let fd = (s.value(x + h) - s.value(x - h)) / (2.0 * h);
            let an = s.derivative(x);
            assert!((an - fd).abs() / an.abs().max(1.0) < 1e-5);
        }
    }
}

#[test]
fn quantizer_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for a in 1..=10u32 {
        let g = StepGrid::new(a).unwrap();
        assert_eq!(g.values().len() as u32, a + 1);
        assert!(g.values().windows(2).all(|w| w[0] < w[1]));
        assert_eq!(g.values()[0], 0.0);
        assert_eq!(*g.values().last().unwrap(), 1.0);
        for _ in 0..10_000 {
            let y: f64 = rng.gen_range(-1.0..2.0);
            let q = g.quantize(y);
            assert_eq!(q, brute_nearest(g.values(), y), "a={a} y={y}");
            assert_eq!(g.quantize(q), q);
        }
        // exact midpoints go up
        for w in g.values().windows(2) {
            let mid = (w[0] + w[1]) / 2.0;
            if (mid - w[0]) == (w[1] - mid) {
                assert_eq!(g.quantize(mid), w[1]);
            }
        }
    }
}

#[test]
fn widening_flattens_everywhere() {
    let wide = SigmoidParams::default();
    let unit = SigmoidParams::new(1.0).unwrap();
    for i in -2000..=2000 {
        let x = i as f64 * 0.01;
        if x == 0.0 {
            continue;
        }
        assert!((wide.value(x) - 0.5).abs() < (unit.value(x) - 0.5).abs());
    }
}
