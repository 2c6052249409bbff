use proptest::prelude::*;

use protocc::decode::{bp_decode, DecoderConfig, Stopping};
use protocc::oracle::{exact_spectrum, free_distance_upper, nullspace_basis, rank, theorem1_check};
use protocc::{lift, LiftSpec, LiftStyle, LiftedBand, Protograph, SparseBinaryMatrix, Unwrapping};

fn base_matrix(rows: usize, cols: usize, max_entry: u32) -> impl Strategy<Value = Vec<Vec<u32>>> {
    prop::collection::vec(prop::collection::vec(0..=max_entry, cols), rows)
}

/// Base matrices without empty rows or columns.
fn protograph(rows: std::ops::RangeInclusive<usize>, cols: std::ops::RangeInclusive<usize>, max_entry: u32) -> impl Strategy<Value = Protograph> {
    (rows, cols)
        .prop_flat_map(move |(r, c)| base_matrix(r, c, max_entry))
        .prop_filter_map("empty row or column", |b| {
            let cols_ok = (0..b[0].len()).all(|v| b.iter().any(|row| row[v] > 0));
            let rows_ok = b.iter().all(|row| row.iter().any(|&e| e > 0));
            (cols_ok && rows_ok).then(|| Protograph::from_base("p", b).ok()).flatten()
        })
}

/// Protographs whose dimensions share a factor of at least 2.
fn cuttable(max_entry: u32) -> impl Strategy<Value = Protograph> {
    prop_oneof![Just((2usize, 4usize)), Just((2, 6)), Just((3, 6)), Just((4, 6))]
        .prop_flat_map(move |(r, c)| protograph(r..=r, c..=c, max_entry))
}

fn sparse(rows: usize, cols: usize) -> impl Strategy<Value = SparseBinaryMatrix> {
    prop::collection::vec(prop::bool::weighted(0.3), rows * cols).prop_map(move |bits| {
        let entries = bits.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| (i / cols, i % cols));
        SparseBinaryMatrix::from_entries(rows, cols, entries).unwrap()
    })
}

fn sorted_degrees(p: &Protograph) -> (Vec<u32>, Vec<u32>) {
    let d = p.degree_profile();
    let (mut v, mut c) = (d.variable_degrees, d.check_degrees);
    v.sort_unstable();
    c.sort_unstable();
    (v, c)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn expansion_keeps_node_degrees(p in protograph(1..=3, 2..=5, 3), m in 2usize..=3, seed in any::<u64>()) {
        let e = p.expand(m, seed).unwrap();
        prop_assert_eq!(e.n_c(), m * p.n_c());
        prop_assert_eq!(e.n_v(), m * p.n_v());
        let (dp, de) = (p.degree_profile(), e.degree_profile());
        for v in 0..e.n_v() {
            prop_assert_eq!(de.variable_degrees[v], dp.variable_degrees[v / m]);
        }
        for c in 0..e.n_c() {
            prop_assert_eq!(de.check_degrees[c], dp.check_degrees[c / m]);
        }
        for c in 0..p.n_c() {
            for v in 0..p.n_v() {
                let block: u32 = (0..m).flat_map(|i| (0..m).map(move |j| (i, j)))
                    .map(|(i, j)| e.entry(c * m + i, v * m + j))
                    .sum();
                prop_assert_eq!(block, p.entry(c, v) * m as u32);
            }
        }
    }

    #[test]
    fn lifted_blocks_have_exact_sums(p in protograph(1..=3, 2..=5, 3), n in 3usize..=6, seed in any::<u64>(), circ in any::<bool>()) {
        let style = if circ { LiftStyle::Circulant } else { LiftStyle::RandomPermutation };
        let h = lift(&p, &LiftSpec::new(n, style, seed).unwrap()).unwrap();
        prop_assert_eq!((h.rows(), h.cols()), (p.n_c() * n, p.n_v() * n));
        for c in 0..p.n_c() {
            for v in 0..p.n_v() {
                let b = p.entry(c, v) as usize;
                for i in 0..n {
                    let row = h.row(c * n + i).iter().filter(|&&j| j / n == v).count();
                    let col = h.col(v * n + i).iter().filter(|&&r| r / n == c).count();
                    prop_assert_eq!(row, b);
                    prop_assert_eq!(col, b);
                }
            }
        }
    }

    #[test]
    fn cut_reassembles_and_tailbiting_keeps_degrees(p in cuttable(2), lambda in 1usize..=4) {
        let u = Unwrapping::cut(&p).unwrap();
        for c in 0..p.n_c() {
            for v in 0..p.n_v() {
                prop_assert_eq!(u.lower()[c][v] + u.upper()[c][v], p.entry(c, v));
            }
        }
        let tb = u.tailbite(lambda).unwrap();
        let (pv, pc) = sorted_degrees(&p);
        let (tv, tc) = sorted_degrees(&tb);
        let repeat = |d: &[u32]| {
            let mut r: Vec<u32> = d.iter().copied().cycle().take(d.len() * lambda).collect();
            r.sort_unstable();
            r
        };
        prop_assert_eq!(tv, repeat(&pv));
        prop_assert_eq!(tc, repeat(&pc));
        prop_assert_eq!(tb.rates().0, p.rates().0);
    }

    #[test]
    fn removing_the_wrap_block_gives_the_window(p in cuttable(2), lambda in 2usize..=4) {
        let u = Unwrapping::cut(&p).unwrap();
        let tb = u.tailbite(lambda).unwrap();
        let win = u.conv_window(lambda).unwrap();
        let (n_c, n_v) = (p.n_c(), p.n_v());
        for r in 0..lambda * n_c {
            for c in 0..lambda * n_v {
                let wrap = r < n_c && c >= (lambda - 1) * n_v;
                let expected = if wrap { 0 } else { tb.entry(r, c) };
                prop_assert_eq!(win.matrix[r][c], expected);
            }
        }
    }

    #[test]
    fn rank_plus_dimension_is_length(h in (1usize..=8, 1usize..=12).prop_flat_map(|(r, c)| sparse(r, c))) {
        let basis = nullspace_basis(&h);
        prop_assert_eq!(rank(&h) + basis.len(), h.cols());
        for b in &basis {
            prop_assert!(h.is_codeword(&b.to_bits()));
        }
    }

    #[test]
    fn spectrum_counts_every_codeword(h in (1usize..=6, 2usize..=12).prop_flat_map(|(r, c)| sparse(r, c)), seed in any::<u64>()) {
        let s = exact_spectrum(&h, 20).unwrap();
        prop_assert_eq!(s.counts.values().sum::<u64>(), 1u64 << s.k);
        prop_assert_eq!(s.count(0), 1);
        let first = s.counts.iter().find(|(&w, &c)| w > 0 && c > 0).map(|(&w, _)| w);
        prop_assert_eq!(s.d_min, first);
        // relabelling coordinates leaves the spectrum unchanged
        use rand::{seq::SliceRandom, SeedableRng};
        let mut perm: Vec<usize> = (0..h.cols()).collect();
        perm.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(exact_spectrum(&h.permute_columns(&perm), 20).unwrap().counts, s.counts);
    }

    #[test]
    fn alist_round_trip(h in (1usize..=8, 1usize..=10).prop_flat_map(|(r, c)| sparse(r, c))) {
        let back = SparseBinaryMatrix::from_alist(&h.to_alist()).unwrap();
        prop_assert_eq!(back, h);
    }
}

fn ldpc(seed: u64) -> SparseBinaryMatrix {
    let p = Protograph::from_base("p", vec![vec![1, 1, 1, 1], vec![1, 2, 1, 1]]).unwrap();
    lift(&p, &LiftSpec::random(5, seed)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn bp_is_permutation_equivariant(
        seed in 0u64..1000,
        llr in prop::collection::vec(-4.0f64..4.0, 20),
        perm_seed in any::<u64>(),
    ) {
        use rand::{seq::SliceRandom, SeedableRng};
        let h = ldpc(seed);
        let mut perm: Vec<usize> = (0..h.cols()).collect();
        perm.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(perm_seed));
        let cfg = DecoderConfig { max_iterations: 20, ..DecoderConfig::default() };
        let a = bp_decode(&h, &llr, &cfg).unwrap();
        // column c of h becomes column perm[c]
        let hp = h.permute_columns(&perm);
        let mut llr_p = vec![0.0; llr.len()];
        for (c, &pc) in perm.iter().enumerate() {
            llr_p[pc] = llr[c];
        }
        let b = bp_decode(&hp, &llr_p, &cfg).unwrap();
        for (c, &pc) in perm.iter().enumerate() {
            prop_assert_eq!(b.hard_decision[pc], a.hard_decision[c]);
        }
        prop_assert_eq!(a.converged, b.converged);
    }

    #[test]
    fn converged_results_satisfy_the_checks(seed in 0u64..1000, llr in prop::collection::vec(-3.0f64..6.0, 20)) {
        let h = ldpc(seed);
        let r = bp_decode(&h, &llr, &DecoderConfig::default()).unwrap();
        if r.converged {
            prop_assert!(h.is_codeword(&r.hard_decision));
        }
    }

    #[test]
    fn larger_budget_keeps_converged_results(seed in 0u64..1000, llr in prop::collection::vec(-3.0f64..6.0, 20)) {
        let h = ldpc(seed);
        let small = DecoderConfig { max_iterations: 10, ..DecoderConfig::default() };
        let a = bp_decode(&h, &llr, &small).unwrap();
        if a.converged {
            let big = DecoderConfig { max_iterations: 200, ..DecoderConfig::default() };
            prop_assert_eq!(bp_decode(&h, &llr, &big).unwrap(), a);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn tailbiting_distance_never_exceeds_free_distance_bound(
        p in cuttable(2),
        seed in any::<u64>(),
    ) {
        let u = Unwrapping::cut(&p).unwrap();
        let spec = LiftSpec::random(2, seed);
        let rows = theorem1_check(&u, &spec, &[1, 2, 3], 3, 28).unwrap();
        for r in rows {
            prop_assert!(r.holds, "{:?}", r);
        }
    }

    #[test]
    fn free_distance_bound_shrinks_with_window(p in cuttable(1), seed in any::<u64>()) {
        let u = Unwrapping::cut(&p).unwrap();
        let spec = LiftSpec::random(1, seed);
        let b = free_distance_upper(&u, &spec, 1, 5, 28).unwrap();
        let mut best: Option<usize> = None;
        for &(_, d) in &b.per_window {
            let next = match (best, d) {
                (Some(a), Some(x)) => Some(a.min(x)),
                (a, x) => a.or(x),
            };
            if let (Some(prev), Some(now)) = (best, next) {
                prop_assert!(now <= prev);
            }
            best = next;
        }
        prop_assert_eq!(best, b.d_upper);
    }
}

#[test]
fn fixed_iteration_budget_is_used_in_full() {
    let h = ldpc(3);
    let cfg = DecoderConfig {
        max_iterations: 7,
        stopping: Stopping::FixedIterations,
        ..DecoderConfig::default()
    };
    let r = bp_decode(&h, &[5.0; 20], &cfg).unwrap();
    assert_eq!(r.iterations_used, 7);
}

#[test]
fn band_wraps_to_the_tailbiting_lift() {
    let p = Protograph::from_base("ex1", vec![vec![1; 6]; 3]).unwrap();
    let u = Unwrapping::cut(&p).unwrap();
    for lambda in 1..=4 {
        let spec = LiftSpec::random(3, 11);
        let band = LiftedBand::new(&u, &spec, lambda).unwrap();
        let direct = lift(&u.tailbite(lambda).unwrap(), &spec).unwrap();
        assert_eq!(band.tail_biting(), direct, "lambda {lambda}");
    }
}
