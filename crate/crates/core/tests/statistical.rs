//! Distributional checks of the rank transform and the Monte-Carlo engine
//! against independent references.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rankbins::bin_selection::{optimal_bin_count, BinSearchSpec};
use rankbins::divergence::DistanceKind;
use rankbins::monte_carlo::{false_reject_probability, standard_error, McConfig};
use rankbins::rank_transform::{rank_histogram, transform_ranks, RankSeries};
use statrs::distribution::{Binomial, ChiSquared, ContinuousCDF, Discrete};

fn uniform_ranks(m: u64, n: usize, seed: u64) -> RankSeries {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ranks = (0..n).map(|_| rng.gen_range(1..=m as i64 + 1)).collect();
    RankSeries::new(m, ranks).unwrap()
}

fn chi_square_p(counts: &[u64]) -> f64 {
    let n: u64 = counts.iter().sum();
    let e = n as f64 / counts.len() as f64;
    let x2: f64 = counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum();
    ChiSquared::new((counts.len() - 1) as f64).unwrap().sf(x2)
}

#[test]
fn rebinned_uniform_ranks_are_uniform_for_non_divisible_k() {
    // 20 rank categories into 7 bins: each bin straddles rank boundaries.
    let series = uniform_ranks(19, 200_000, 11);
    let h = rank_histogram(&series, 7, 5).unwrap();
    let p = chi_square_p(h.counts().unwrap());
    assert!(p > 1e-3, "chi-square p-value {p}");
}

#[test]
fn per_bin_counts_follow_binomial_marginals() {
    // Bin 0 of k = 3 from m = 4: its count over many short series is Binomial(n, 1/3).
    let (n, reps, k) = (30usize, 4000usize, 3usize);
    let mut tally = vec![0u64; n + 1];
    for r in 0..reps {
        let series = uniform_ranks(4, n, 1000 + r as u64);
        let h = rank_histogram(&series, k, r as u64).unwrap();
        tally[h.counts().unwrap()[0] as usize] += 1;
    }
    let binom = Binomial::new(1.0 / k as f64, n as u64).unwrap();
    // Pool the tails so every expected cell is at least 5.
    let (mut obs, mut exp) = (Vec::new(), Vec::new());
    let (mut o_acc, mut e_acc) = (0.0, 0.0);
    for (x, &observed) in tally.iter().enumerate() {
        o_acc += observed as f64;
        e_acc += binom.pmf(x as u64) * reps as f64;
        if e_acc >= 5.0 && remaining(&binom, x, n) * reps as f64 >= 5.0 {
            obs.push(o_acc);
            exp.push(e_acc);
            o_acc = 0.0;
            e_acc = 0.0;
        }
    }
    *obs.last_mut().unwrap() += o_acc;
    *exp.last_mut().unwrap() += e_acc;
    let x2: f64 = obs.iter().zip(&exp).map(|(o, e)| (o - e).powi(2) / e).sum();
    let p = ChiSquared::new((obs.len() - 1) as f64).unwrap().sf(x2);
    assert!(p > 1e-3, "p = {p}, cells = {}", obs.len());
}

fn remaining(binom: &Binomial, x: usize, n: usize) -> f64 {
    ((x + 1)..=n).map(|y| binom.pmf(y as u64)).sum()
}

#[test]
fn transformed_values_stay_inside_their_rank_cell() {
    let series = uniform_ranks(9, 5000, 3);
    let t = transform_ranks(&series, 8);
    for (&r, &v) in series.ranks().iter().zip(&t.values) {
        let lo = (r - 1) as f64 / 10.0;
        assert!(v >= lo - 1e-15 && v < r as f64 / 10.0 + 1e-15, "rank {r} -> {v}");
    }
}

fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &p in &idx[i..=j] {
            ranks[p] = avg;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

#[test]
fn optimal_bin_count_grows_with_sample_size() {
    let ns: Vec<f64> = (1..=10).map(|i| (20 * i) as f64).collect();
    let ks: Vec<f64> = ns
        .iter()
        .map(|&n| {
            let spec = BinSearchSpec::new(DistanceKind::L2, 0.1, n as usize, 0.1, McConfig::new(20_000, 4));
            optimal_bin_count(&spec).unwrap().k_opt as f64
        })
        .collect();
    let rho = pearson(&average_ranks(&ns), &average_ranks(&ks));
    assert!(rho > 0.8, "spearman rho {rho}, k_opt = {ks:?}");
}

#[test]
fn monte_carlo_matches_exhaustive_enumeration() {
    // All 4^6 bin assignments for k = 4, n = 6 under the L1 distance.
    let (k, n) = (4usize, 6usize);
    let mut ds = Vec::new();
    for code in 0..k.pow(n as u32) {
        let mut counts = [0usize; 4];
        let mut c = code;
        for _ in 0..n {
            counts[c % k] += 1;
            c /= k;
        }
        let d: f64 = counts.iter().map(|&x| (k as f64 * x as f64 / n as f64 - 1.0).abs()).sum::<f64>() / k as f64;
        ds.push(d);
    }
    let reps = 100_000;
    for c in [0.2, 0.5, 0.7, 0.9] {
        let exact = ds.iter().filter(|&&d| d > c + 1e-12).count() as f64 / ds.len() as f64;
        let mc = false_reject_probability(DistanceKind::L1, c, k, n, &McConfig::new(reps, 21)).unwrap();
        assert!((mc - exact).abs() <= 4.0 * standard_error(exact, reps), "c={c}: mc {mc} exact {exact}");
    }
}
