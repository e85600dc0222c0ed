//! Retrieval metrics against exact rational arithmetic.

use num_rational::Ratio;
use proptest::prelude::*;
use vnom::metrics::{chance_baseline, hits, Criterion, EvalReport};

type Q = Ratio<i128>;

fn to_f64(q: Q) -> f64 {
    *q.numer() as f64 / *q.denom() as f64
}

/// 1-based positions of the reds.
fn positions(h: &[bool]) -> Vec<i128> {
    h.iter().enumerate().filter(|(_, &x)| x).map(|(i, _)| i as i128 + 1).collect()
}

fn ap_y(h: &[bool], y: usize) -> Q {
    let pos = positions(h);
    let sum: Q = pos[..y].iter().enumerate().map(|(j, &p)| Q::new(j as i128 + 1, p)).sum();
    sum / Q::from(y as i128)
}

fn oracle(h: &[bool], c: Criterion) -> Q {
    let pos = positions(h);
    match c {
        Criterion::SuccessAt1 => Q::from((pos[0] == 1) as i128),
        Criterion::Mrr => Q::new(1, pos[0]),
        Criterion::Map => ap_y(h, pos.len()),
        Criterion::ApAt(y) => ap_y(h, y),
    }
}

fn close(a: f64, b: Q) -> bool {
    (a - to_f64(b)).abs() <= 1e-12
}

fn relevance() -> impl Strategy<Value = Vec<bool>> {
    proptest::collection::vec(any::<bool>(), 1..40).prop_filter("needs a red", |h| h.contains(&true))
}

proptest! {
    #[test]
    fn metrics_match_rational_oracle(h in relevance()) {
        let r = EvalReport::from_hits(&h).unwrap();
        prop_assert_eq!(r.s_at_1, oracle(&h, Criterion::SuccessAt1) == Q::from(1));
        prop_assert!(close(r.rr, oracle(&h, Criterion::Mrr)));
        prop_assert!(close(r.ap, oracle(&h, Criterion::Map)));
        prop_assert!(close(hits::average_precision(&h).unwrap(), oracle(&h, Criterion::Map)));
        for y in 1..=r.n_red_candidates {
            prop_assert!(close(r.ap_y[y - 1], ap_y(&h, y)));
            prop_assert!(close(hits::average_precision_at_y(&h, y).unwrap(), ap_y(&h, y)));
        }
        for k in 1..=h.len() {
            let reds = h[..k].iter().filter(|&&x| x).count() as i128;
            prop_assert!(close(hits::precision_at(&h, k).unwrap(), Q::new(reds, k as i128)));
        }
    }

    #[test]
    fn truncated_ap_is_monotone_in_quality(h in relevance(), swap in any::<prop::sample::Index>()) {
        // Moving a red one place up never lowers any truncated AP.
        let i = swap.index(h.len());
        prop_assume!(i > 0 && h[i] && !h[i - 1]);
        let mut better = h.clone();
        better.swap(i, i - 1);
        let (a, b) = (EvalReport::from_hits(&h).unwrap(), EvalReport::from_hits(&better).unwrap());
        for (x, y) in a.ap_y.iter().zip(&b.ap_y) {
            prop_assert!(y >= x);
        }
    }
}

/// Mean of the oracle over every placement of `reds` among `n` positions.
fn chance_oracle(n: usize, reds: usize, c: Criterion) -> Q {
    let mut total = Q::from(0);
    let mut count = 0;
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != reds {
            continue;
        }
        let h: Vec<bool> = (0..n).map(|i| mask & (1 << i) != 0).collect();
        total += oracle(&h, c);
        count += 1;
    }
    total / Q::from(count)
}

#[test]
fn chance_baseline_matches_enumeration() {
    for n in 1..=10 {
        for reds in 1..=n.min(4) {
            let mut criteria = vec![Criterion::SuccessAt1, Criterion::Mrr, Criterion::Map];
            criteria.extend((1..=reds).map(Criterion::ApAt));
            for c in criteria {
                let b = chance_baseline(n, reds, c).unwrap();
                assert!(b.exact);
                let want = chance_oracle(n, reds, c);
                assert!(close(b.value, want), "n={n} reds={reds} {c}: {} vs {}", b.value, to_f64(want));
            }
        }
    }
}

#[test]
fn closed_form_chance_values() {
    // One red: uniform position, so S@1 = 1/n and MRR = MAP = H(n)/n.
    for n in [5usize, 50, 2000] {
        let h: f64 = (1..=n).map(|k| 1.0 / k as f64).sum();
        assert!((chance_baseline(n, 1, Criterion::SuccessAt1).unwrap().value - 1.0 / n as f64).abs() < 1e-12);
        assert!((chance_baseline(n, 1, Criterion::Mrr).unwrap().value - h / n as f64).abs() < 1e-12);
    }
    assert!((chance_baseline(4, 1, Criterion::Mrr).unwrap().value - 25.0 / 48.0).abs() < 1e-15);
}

#[test]
fn monte_carlo_chance_is_close_and_reproducible() {
    // C(183, 3) exceeds the enumeration limit.
    let a = chance_baseline(183, 3, Criterion::SuccessAt1).unwrap();
    assert!(!a.exact);
    assert_eq!(a, chance_baseline(183, 3, Criterion::SuccessAt1).unwrap());
    let exact: f64 = 3.0 / 183.0;
    let sd = (exact * (1.0 - exact) / 1e5).sqrt();
    assert!((a.value - exact).abs() < 5.0 * sd);
}
