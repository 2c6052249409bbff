//! Cross-checks of the asymptotic machinery and the decoders against exact
//! small-instance computations.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use protocc::decode::{bp_decode, sliding_window_decode, DecoderConfig};
use protocc::oracle::{exact_spectrum, free_distance_upper, min_distance, nullspace_basis, theorem1_check};
use protocc::spectral::check::{binary_entropy, check_enumerator};
use protocc::spectral::{growth_rate, spectral_shape, GrowthOptions, GrowthStatus, Normalization, ShapeOptions};
use protocc::{lift, LiftSpec, LiftedBand, Protograph, Unwrapping};

fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Number of `N x k` binary matrices with even rows and column sums `w`,
/// by dynamic programming over the number of odd rows after each column.
fn even_row_count(n: usize, w: &[usize]) -> f64 {
    let mut state = vec![0.0; n + 1];
    state[0] = 1.0;
    for &we in w {
        let mut next = vec![0.0; n + 1];
        for (odd, &ways) in state.iter().enumerate() {
            if ways == 0.0 {
                continue;
            }
            // i ones land on odd rows, the rest on even rows
            for i in we.saturating_sub(n - odd)..=we.min(odd) {
                next[odd - i + (we - i)] += ways * binomial(odd, i) * binomial(n - odd, we - i);
            }
        }
        state = next;
    }
    state[0]
}

/// Column sums `floor(N x)`, with the entry of largest fractional part
/// rounded up when needed to make the total even.
fn quantize(n: usize, x: &[f64]) -> Vec<usize> {
    let mut w: Vec<usize> = x.iter().map(|&xe| (n as f64 * xe).floor() as usize).collect();
    if w.iter().sum::<usize>() % 2 == 1 {
        let frac = |e: usize| n as f64 * x[e] - w[e] as f64;
        let e = (0..x.len()).max_by(|&a, &b| frac(a).total_cmp(&frac(b))).unwrap();
        w[e] += 1;
    }
    w
}

fn interior_point(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    loop {
        let x: Vec<f64> = (0..k).map(|_| rng.gen_range(0.05..0.5)).collect();
        let (sum, max) = (x.iter().sum::<f64>(), x.iter().cloned().fold(0.0, f64::max));
        if 2.0 * max < sum {
            return x;
        }
    }
}

#[test]
fn dp_count_matches_closed_forms() {
    // degree 2: both columns carry the same w rows
    assert_eq!(even_row_count(20, &[6, 6]), binomial(20, 6));
    assert_eq!(even_row_count(20, &[6, 8]), 0.0);
    // degree 3 at N = 4, w = (2, 2, 2): rows are 000 or one of 3 pairs
    // brute force over all 2^12 matrices
    let mut brute = 0;
    for m in 0u32..1 << 12 {
        let rows: Vec<u32> = (0..4).map(|r| (m >> (3 * r)) & 7).collect();
        let even = rows.iter().all(|r| r.count_ones() % 2 == 0);
        let sums: Vec<u32> = (0..3).map(|c| rows.iter().map(|r| (r >> c) & 1).sum()).collect();
        if even && sums == [2, 2, 2] {
            brute += 1;
        }
    }
    assert_eq!(even_row_count(4, &[2, 2, 2]), brute as f64);
}

#[test]
fn degree_two_enumerator_is_binary_entropy() {
    let a = check_enumerator(&[0.3, 0.3]).unwrap().value;
    assert!((a - 0.6109).abs() < 1e-4, "{a}");
    assert!((a - binary_entropy(0.3)).abs() < 1e-12);
}

#[test]
fn finite_counts_approach_the_enumerator() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for k in [3, 6] {
        for _ in 0..20 {
            let x = interior_point(&mut rng, k);
            let a = check_enumerator(&x).unwrap().value;
            let gaps: Vec<f64> = [8, 16, 32, 64]
                .iter()
                .map(|&n| ((even_row_count(n, &quantize(n, &x)).ln() / n as f64) - a).abs())
                .collect();
            // at N = 8 rounding can move the count by a visible amount, so
            // the first step is only required to be beaten by N = 64
            assert!(gaps[1..].windows(2).all(|g| g[1] < g[0]), "k {k}, x {x:?}: {gaps:?}");
            assert!(gaps[3] < gaps[0], "k {k}, x {x:?}: {gaps:?}");
            // leading correction is (k - 1)/2 ln(2 pi N) / N
            let n = 64.0f64;
            assert!(gaps[3] < (k as f64 - 1.0) / 2.0 * (2.0 * std::f64::consts::PI * n).ln() / n + 0.05);
        }
    }
}

#[test]
fn envelope_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for k in [3, 6] {
        for _ in 0..20 {
            let x = interior_point(&mut rng, k);
            let grad = check_enumerator(&x).unwrap().gradient();
            for e in 0..k {
                let h = 1e-5;
                let (mut xp, mut xm) = (x.clone(), x.clone());
                xp[e] += h;
                xm[e] -= h;
                let fd = (check_enumerator(&xp).unwrap().value - check_enumerator(&xm).unwrap().value) / (2.0 * h);
                let rel = (fd - grad[e]).abs() / grad[e].abs().max(1e-3);
                assert!(rel < 1e-6, "k {k}, e {e}: fd {fd} vs {}", grad[e]);
            }
        }
    }
}

#[test]
fn single_check_pair_matches_exact_count() {
    // the [[1,1]] code lifted by N has exactly C(N, w) codewords of weight 2w
    let p = Protograph::from_base("pair", vec![vec![1, 1]]).unwrap();
    let h = lift(&p, &LiftSpec::random(10, 3)).unwrap();
    let s = exact_spectrum(&h, 20).unwrap();
    for w in 0..=10 {
        assert_eq!(s.count(2 * w), binomial(10, w) as u64);
    }
    let r = spectral_shape(&p, 0.3, &ShapeOptions::default()).unwrap();
    assert!((r - binary_entropy(0.3) / 2.0).abs() < 1e-10);
}

#[test]
fn regular_two_four_has_no_linear_growth() {
    let p = Protograph::from_base("reg24", vec![vec![1; 4]; 2]).unwrap();
    let curve = growth_rate(&p, &GrowthOptions::default()).unwrap();
    assert_eq!(curve.status, GrowthStatus::NoLinearGrowth);
    // exact minimum distances of lifts stay small while n grows
    let d: Vec<usize> = [2, 4, 6]
        .iter()
        .map(|&n| min_distance(&lift(&p, &LiftSpec::random(n, 5)).unwrap(), 28).unwrap().unwrap())
        .collect();
    assert!(d.iter().all(|&x| x <= 4), "{d:?}");
}

#[test]
fn averaged_spectra_stay_below_the_shape() {
    let p = Protograph::from_base("reg24", vec![vec![1; 4]; 2]).unwrap();
    let opts = ShapeOptions {
        normalization: Normalization::AllNodes,
        ..ShapeOptions::default()
    };
    for n in [2, 3, 4] {
        let len = 4 * n;
        let mut avg = vec![0.0; len + 1];
        for seed in 0..100 {
            let s = exact_spectrum(&lift(&p, &LiftSpec::random(n, seed)).unwrap(), 28).unwrap();
            for (&w, &c) in &s.counts {
                avg[w] += c as f64 / 100.0;
            }
        }
        for w in 1..len {
            if avg[w] == 0.0 {
                continue;
            }
            let delta = w as f64 / len as f64;
            let r = spectral_shape(&p, delta, &opts).unwrap();
            let envelope = r + 2.0 * ((len + 1) as f64).ln() / len as f64;
            assert!(avg[w].ln() / (len as f64) <= envelope, "N {n}, w {w}: {} vs {envelope}", avg[w]);
        }
    }
}

#[test]
fn lifted_pair_has_weight_two_basis() {
    let p = Protograph::from_base("pair", vec![vec![1, 1]]).unwrap();
    let h = lift(&p, &LiftSpec::random(4, 9)).unwrap();
    let basis = nullspace_basis(&h);
    assert_eq!(basis.len(), 4);
    assert!(basis.iter().all(|b| b.weight() == 2));
}

fn ex1() -> Protograph {
    Protograph::from_base("ex1", vec![vec![1; 6]; 3]).unwrap()
}

#[test]
fn theorem_one_on_the_ex1_band() {
    let u = Unwrapping::cut(&ex1()).unwrap();
    let rows = theorem1_check(&u, &LiftSpec::random(1, 0), &[1, 2, 3, 4, 5, 6], 6, 28).unwrap();
    for r in &rows {
        assert!(r.holds, "{r:?}");
    }
    let rows = theorem1_check(&u, &LiftSpec::random(2, 4), &[1, 2, 3], 3, 28).unwrap();
    assert!(rows.iter().all(|r| r.holds), "{rows:?}");
}

#[test]
fn memoryless_band_bound_equals_block_distance() {
    // the upper-right block is empty, so the band is the block code repeated
    let p = Protograph::from_base("lower", vec![vec![1, 1, 0, 0], vec![1, 1, 1, 1]]).unwrap();
    let u = Unwrapping::cut(&p).unwrap();
    assert!(u.upper_is_zero());
    let spec = LiftSpec::random(3, 1);
    let block = min_distance(&lift(&p, &spec).unwrap(), 28).unwrap();
    let bound = free_distance_upper(&u, &spec, 1, 4, 28).unwrap();
    assert_eq!(bound.d_upper, block);
    let rows = theorem1_check(&u, &spec, &[1], 4, 28).unwrap();
    assert_eq!(rows[0].d_min_tb, rows[0].d_upper);
}

#[test]
fn bp_matches_exhaustive_ml_on_the_lifted_pair() {
    let p = Protograph::from_base("pair", vec![vec![1, 1]]).unwrap();
    let h = lift(&p, &LiftSpec::random(4, 2)).unwrap();
    let basis = nullspace_basis(&h);
    let codewords: Vec<Vec<u8>> = (0..1u32 << basis.len())
        .map(|m| {
            let mut w = vec![0u8; h.cols()];
            for (i, b) in basis.iter().enumerate() {
                if m >> i & 1 == 1 {
                    for (x, y) in w.iter_mut().zip(b.to_bits()) {
                        *x ^= y;
                    }
                }
            }
            w
        })
        .collect();
    assert_eq!(codewords.len(), 16);
    for sent in &codewords {
        for wrong in 0..h.cols() {
            let mut llr: Vec<f64> = sent.iter().map(|&b| if b == 0 { 8.0 } else { -8.0 }).collect();
            llr[wrong] = if sent[wrong] == 0 { -0.5 } else { 0.5 };
            let metric = |c: &Vec<u8>| -> f64 { c.iter().zip(&llr).map(|(&b, &l)| if b == 0 { l } else { -l }).sum() };
            let ml = codewords.iter().max_by(|a, b| metric(a).total_cmp(&metric(b))).unwrap();
            let out = bp_decode(&h, &llr, &DecoderConfig::default()).unwrap();
            assert_eq!(&out.hard_decision, ml);
        }
    }
}

fn noisy_stream(blocks: usize, width: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..blocks)
        .map(|_| (0..width).map(|_| rng.gen_range(-1.0..4.0)).collect())
        .collect()
}

#[test]
fn first_window_matches_one_shot_decoding() {
    let u = Unwrapping::cut(&ex1()).unwrap();
    let spec = LiftSpec::random(4, 13);
    for period in [1, 2, 3] {
        let band = LiftedBand::new(&u, &spec, period).unwrap();
        let w = band.block_width();
        for seed in 0..10 {
            let stream = noisy_stream(8, w, seed);
            let cfg = DecoderConfig {
                window_periods: 4,
                window_iterations_per_shift: 15,
                ..DecoderConfig::default()
            };
            let sliding = sliding_window_decode(&u, &spec, period, &stream, &cfg).unwrap();
            let h = band.window(0, 4, false);
            let llr: Vec<f64> = stream[..4].concat();
            let one_shot = bp_decode(
                &h,
                &llr,
                &DecoderConfig {
                    max_iterations: 15,
                    ..cfg.clone()
                },
            )
            .unwrap();
            assert_eq!(sliding[0], one_shot.hard_decision[..w], "period {period}, seed {seed}");
        }
    }
}

#[test]
fn sliding_window_recovers_a_noiseless_codeword() {
    let u = Unwrapping::cut(&ex1()).unwrap();
    let spec = LiftSpec::random(2, 6);
    let band = LiftedBand::new(&u, &spec, 2).unwrap();
    let w = band.block_width();
    // a zero-terminated window codeword padded with zeros is a band codeword
    let h = band.window(0, 3, true);
    let basis = nullspace_basis(&h);
    let word = basis.iter().max_by_key(|b| b.weight()).expect("window has codewords").to_bits();
    let mut bits = word.clone();
    bits.resize(7 * w, 0);
    let stream: Vec<Vec<f64>> = bits
        .chunks(w)
        .map(|c| c.iter().map(|&b| if b == 0 { 10.0 } else { -10.0 }).collect())
        .collect();
    let out = sliding_window_decode(&u, &spec, 2, &stream, &DecoderConfig::default()).unwrap();
    assert_eq!(out.concat(), bits);
    let zeros = vec![vec![10.0; w]; 5];
    let out = sliding_window_decode(&u, &spec, 2, &zeros, &DecoderConfig::default()).unwrap();
    assert!(out.iter().flatten().all(|&b| b == 0));
}
