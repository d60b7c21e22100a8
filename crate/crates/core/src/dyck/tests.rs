use super::*;
use crate::bath::{influence_table, EtaTable, InfluenceTable};
use crate::system::LiouvilleMatrix;
use crate::C64;
use std::collections::BTreeSet;

type Term = BTreeSet<(bool, usize, usize)>;

/// Parse products written as `~3jp 2jn ...` with time letters `j k n p l` for points 0..4.
fn parse_term(s: &str) -> Term {
    let letter = |c: char| "jknpl".find(c).expect("time letter");
    s.split_whitespace()
        .map(|f| {
            let dashed = f.starts_with('~');
            let f = f.trim_start_matches('~');
            let lag: usize = f[..1].parse().unwrap();
            let mut cs = f[1..].chars();
            let a = letter(cs.next().unwrap());
            let b = letter(cs.next().unwrap());
            assert_eq!(b - a, lag, "lag label of {f}");
            (dashed, a, b)
        })
        .collect()
}

fn recipe_term(r: &KernelTermRecipe) -> Term {
    r.dashed.iter().map(|a| (true, a.start, a.end)).chain(r.solid.iter().map(|a| (false, a.start, a.end))).collect()
}

fn multiset(order: usize) -> Vec<Term> {
    let mut v: Vec<Term> = recipes(order).unwrap().iter().map(recipe_term).collect();
    v.sort();
    v
}

#[test]
fn small_orders_enumerate_in_word_order() {
    let words: Vec<String> = enumerate_paths(2).unwrap().iter().map(|p| p.to_string()).collect();
    assert_eq!(words, ["1010", "1100"]);
    assert_eq!(enumerate_paths(4).unwrap().len(), 14);
    assert_eq!(enumerate_paths(8).unwrap().len(), 1430);
    assert!(matches!(enumerate_paths(17), Err(crate::Error::Resource(_))));
    assert!(enumerate_paths(0).is_err());
}

#[test]
fn statistics_of_small_paths() {
    let s = DyckPath::parse("1010").unwrap().statistics();
    assert_eq!((s.peaks, s.segments, s.max_height, s.hills), (2, 2, 1, 2));
    let s = DyckPath::parse("1100").unwrap().statistics();
    assert_eq!((s.peaks, s.segments, s.max_height, s.hills), (1, 1, 2, 0));
    assert!(DyckPath::parse("0110").is_err());
    assert!(DyckPath::parse("110").is_err());
}

#[test]
fn counts_follow_catalan_narayana_ballot_and_fine() {
    // Fine numbers from (1 + 2x) F(x)... via F_n = (C_n - F_{n-1}) / 2, F_0 = 1
    let mut fine = vec![1u128];
    for n in 1..=10 {
        let prev = fine[n - 1];
        fine.push((catalan(n) - prev) / 2);
    }
    for n in 1..=10 {
        let paths = enumerate_paths(n).unwrap();
        assert_eq!(paths.len() as u128, catalan(n));
        let hill_free = paths.iter().filter(|p| p.statistics().hills == 0).count() as u128;
        assert_eq!(hill_free, fine[n], "Fine number at {n}");
        if n <= 8 {
            let mut peaks = vec![0u128; n + 1];
            let mut segs = vec![0u128; n + 1];
            for p in &paths {
                let s = p.statistics();
                peaks[s.peaks] += 1;
                segs[s.segments] += 1;
            }
            for k in 1..=n {
                assert_eq!(peaks[k], narayana(n, k));
                // paths with k returns: k/(2n-k) * binom(2n-k, n)
                let ballot = k as u128 * binomial(2 * n - k, n) / (2 * n - k) as u128;
                assert_eq!(segs[k], ballot);
            }
        }
    }
    let row: Vec<u128> = (1..=5).map(|k| narayana(5, k)).collect();
    assert_eq!(row, [1, 10, 20, 10, 1]);
}

#[test]
fn recipes_for_orders_one_and_two() {
    let r = recipe_from_path(&DyckPath::parse("10").unwrap());
    assert_eq!(r.dashed, [Arc { start: 0, end: 1 }]);
    assert!(r.solid.is_empty());
    let r = recipe_from_path(&DyckPath::parse("1100").unwrap());
    assert_eq!(r.dashed, [Arc { start: 0, end: 2 }]);
    assert_eq!(r.solid, [Arc { start: 0, end: 1 }, Arc { start: 1, end: 2 }]);
    let r = recipe_from_path(&DyckPath::parse("1010").unwrap());
    assert_eq!(r.dashed, [Arc { start: 0, end: 1 }, Arc { start: 1, end: 2 }]);
    assert!(r.solid.is_empty());
}

#[test]
fn order_three_matches_explicit_products() {
    let mut want: Vec<Term> = [
        "~3jp 2jn 2kp 1jk 1kn 1np",
        "1kn ~2jn ~2kp 1jk 1np",
        "1kn ~2kp ~1jk 1np",
        "1kn ~2jn ~1np 1jk",
        "~1jk ~1kn ~1np",
    ]
    .iter()
    .map(|s| parse_term(s))
    .collect();
    want.sort();
    assert_eq!(multiset(3), want);
}

#[test]
fn order_four_matches_explicit_products() {
    let mut want: Vec<Term> = [
        "~4jl 1jk 2jn 3jp 1kn 2kp 3kl 1np 2nl 1pl",
        "~3jp 1jk 2jn 1kn 2kp 1np ~3kl 2nl 1pl",
        "~3jp 1jk 2jn 1kn 2kp 1np ~2nl 1pl",
        "~3jp 1jk 2jn 1kn 2kp 1np ~1pl",
        "~2jn 1jk 1kn ~3kl 2kp 1np 2nl 1pl",
        "~2jn 1jk 1kn ~2kp 1np ~2nl 1pl",
        "~2jn 1jk 1kn ~2kp 1np ~1pl",
        "~2jn 1jk 1kn ~2nl 1np 1pl",
        "~2jn 1jk 1kn ~1np ~1pl",
        "~1jk ~3kl 1kn 2kp 1np 2nl 1pl",
        "~1jk ~2kp 1kn 1np ~2nl 1pl",
        "~1jk ~2kp 1kn 1np ~1pl",
        "~1jk ~1kn ~2nl 1np 1pl",
        "~1jk ~1kn ~1np ~1pl",
    ]
    .iter()
    .map(|s| parse_term(s))
    .collect();
    want.sort();
    assert_eq!(multiset(4), want);
}

#[test]
fn dashed_arcs_count_peaks() {
    for n in 1..=7 {
        for p in enumerate_paths(n).unwrap() {
            let r = recipe_from_path(&p);
            assert_eq!(r.dashed.len(), p.statistics().peaks);
            assert!(r.dashed.iter().chain(&r.solid).all(|a| a.start < a.end && a.end <= n));
        }
    }
    let crest = recipe_from_path(&DyckPath::crest(5));
    assert_eq!(crest.dashed, [Arc { start: 0, end: 5 }]);
    assert_eq!(crest.solid.len(), 5 * 6 / 2 - 1);
}

fn random_blocks(order: usize, seed: u64) -> ArcBlocks {
    // deterministic pseudo-random entries near one, distinct per lag
    let mut s = seed;
    let mut next = move || {
        s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
    };
    let n = 4;
    let i0: Vec<C64> = (0..n).map(|_| C64::new(1.0 + 0.2 * next(), 0.2 * next())).collect();
    let lags: Vec<Vec<C64>> =
        (0..order).map(|_| (0..n * n).map(|_| C64::new(1.0 + 0.3 * next(), 0.3 * next())).collect()).collect();
    let table = InfluenceTable::from_parts(0.1, vec![1.0, -1.0], i0, lags).unwrap();
    let links = (0..order).map(|_| (0..n * n).map(|_| C64::new(next(), next())).collect()).collect();
    ArcBlocks::with_links(&table, links)
}

/// Brute force over all configurations of the internal points.
fn brute_force(blocks: &ArcBlocks, r: &KernelTermRecipe) -> Vec<C64> {
    let n = blocks.pair_dim;
    let order = r.order;
    let mut out = vec![C64::default(); n * n];
    let total = n.pow(order as u32 + 1);
    for code in 0..total {
        let xs: Vec<usize> = (0..=order).map(|a| (code / n.pow((order - a) as u32)) % n).collect();
        let mut w = C64::new(1.0, 0.0);
        for a in 0..=order {
            w *= blocks.i0[xs[a]];
        }
        for a in 0..order {
            w *= blocks.links[a][xs[a] * n + xs[a + 1]];
        }
        for arc in &r.dashed {
            w *= blocks.dashed[arc.lag() - 1][xs[arc.start] * n + xs[arc.end]];
        }
        for arc in &r.solid {
            w *= blocks.solid[arc.lag() - 1][xs[arc.start] * n + xs[arc.end]];
        }
        out[xs[0] * n + xs[order]] += w;
    }
    out
}

#[test]
fn contraction_matches_brute_force() {
    for order in 1..=5 {
        let blocks = random_blocks(order, 7 + order as u64);
        for r in recipes(order).unwrap().iter() {
            let a = contract_recipe(&blocks, r);
            let b = brute_force(&blocks, r);
            let err = a.iter().zip(&b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
            assert!(err < 1e-12, "order {order} {}: {err}", r.word);
        }
    }
}

#[test]
fn shared_walk_matches_per_term_contraction() {
    for order in 1..=7 {
        let blocks = random_blocks(order, 100 + order as u64);
        let rs = recipes(order).unwrap();
        let mut seen = Vec::new();
        let mut visit = |p: &DyckPath, m: &[C64]| seen.push((p.to_string(), m.to_vec()));
        for_each_term(&blocks, order, true, &mut visit).unwrap();
        assert_eq!(seen.len(), rs.len());
        for ((word, m), r) in seen.iter().zip(rs.iter()) {
            assert_eq!(word, &r.word);
            let want = contract_recipe(&blocks, r);
            let err = m.iter().zip(&want).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
            assert!(err < 1e-12, "order {order} {word}: {err}");
        }
        let without = sum_order(&blocks, order, false).unwrap();
        assert_eq!(without.terms as u128, catalan(order) - 1);
        assert!(without.crest.is_none());
    }
}

#[test]
fn t_tensor_low_orders() {
    let eta = EtaTable::new(0.1, vec![C64::new(0.02, 0.01), C64::new(0.03, -0.02), C64::new(0.01, -0.005)]);
    let t = influence_table(&eta, &[1.0, -1.0], 2).unwrap();
    let t1 = build_t_tensor(&t, 1, false).unwrap();
    let t2 = build_t_tensor(&t, 2, false).unwrap();
    let i0 = t.i0();
    for j in 0..4 {
        for k in 0..4 {
            let want = t.tilde(1, j, k) * i0[j] * i0[k];
            assert!((t1.get(&[j, k]) - want).norm() < 1e-15);
            for m in 0..4 {
                let want = (t.tilde(2, j, m) * t.get(1, j, k) * t.get(1, k, m) + t.tilde(1, j, k) * t.tilde(1, k, m))
                    * i0[j]
                    * i0[k]
                    * i0[m];
                assert!((t2.get(&[j, k, m]) - want).norm() < 1e-15);
            }
        }
    }
    let unit = InfluenceTable::unit(0.1, vec![1.0, -1.0], 3);
    assert!(build_t_tensor(&unit, 3, false).unwrap().data.iter().all(|v| v.norm() == 0.0));
    let _ = LiouvilleMatrix::identity(2);
}

#[test]
fn merged_sum_matches_term_walk() {
    for order in 1..=8 {
        let blocks = random_blocks(order, 300 + order as u64);
        for include_crest in [true, false] {
            let n = blocks.pair_dim;
            let mut total = vec![C64::default(); n * n];
            let mut crest = None;
            let mut visit = |p: &DyckPath, m: &[C64]| {
                for (t, v) in total.iter_mut().zip(m) {
                    *t += v;
                }
                if p.is_crest() {
                    crest = Some(m.to_vec());
                }
            };
            for_each_term(&blocks, order, include_crest, &mut visit).unwrap();
            let merged = sum_order(&blocks, order, include_crest).unwrap();
            let scale = total.iter().map(|v| v.norm()).fold(1.0, f64::max);
            let err = merged.total.iter().zip(&total).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
            assert!(err < 1e-12 * scale, "order {order}: {err}");
            let expect = catalan(order) - u128::from(!include_crest);
            assert_eq!(merged.terms as u128, expect);
            assert_eq!(merged.crest, crest);
        }
    }
}
