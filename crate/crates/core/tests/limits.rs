use uict::boundary_chain::{run_strips, sample_trajectory, RandomMoves};
use uict::branching::sample_conditioned_chain;
use uict::diffusion::{bessel3_cdf, rescaled_growth_marginal};
use uict::rng::StreamSeed;
use uict::stats::{ks_one_sample, ks_two_sample, mean};

#[test]
fn size_biased_chain_matches_growth_slices() {
    let t = 64;
    let n = 20_000;
    let seed = StreamSeed::new(41);
    let chain: Vec<f64> = (0..n)
        .map(|i| sample_conditioned_chain(1, t - 1, seed.domain("gw"), i).unwrap()[t - 1] as f64)
        .collect();
    let grown: Vec<f64> = (0..n)
        .map(|i| {
            let rng = seed.domain("growth").stream(i);
            run_strips(1, t, RandomMoves::new(rng), |_| {})
                .unwrap()
                .boundary() as f64
        })
        .collect();
    let d = ks_two_sample(&chain, &grown).unwrap();
    assert!(d < 0.02, "KS {d}");
}

#[test]
fn size_biased_chain_mean_at_128() {
    let t = 128;
    let seed = StreamSeed::new(42).domain("gw");
    let v: Vec<f64> = (0..20_000)
        .map(|i| {
            *sample_conditioned_chain(1, t, seed, i)
                .unwrap()
                .last()
                .unwrap() as f64
                / t as f64
        })
        .collect();
    // exact mean of eta_128 / 128 is 257 / 128
    let m = mean(&v);
    assert!((m - 2.0).abs() < 0.05, "mean {m}");
}

#[test]
fn one_step_mean_at_four() {
    // E[xi | M = 4] = 1/4
    let n = 1_000_000u64;
    let plus = (0..n)
        .filter(|&i| sample_trajectory(4, 1, i).unwrap().values[1] == 5)
        .count() as f64;
    let xi = (2.0 * plus - n as f64) / n as f64;
    let sd = (1.0 - 0.0625f64).sqrt() / (n as f64).sqrt();
    assert!((xi - 0.25).abs() < 3.0 * sd, "{xi}");
}

#[test]
fn growth_marginal_approaches_bessel_law() {
    let seed = StreamSeed::new(43);
    let d: Vec<f64> = [100u64, 1_000, 10_000]
        .iter()
        .map(|&n| {
            let v =
                rescaled_growth_marginal(n, 1.0, 1, 4_000, seed.domain(&n.to_string())).unwrap();
            ks_one_sample(&v, bessel3_cdf).unwrap()
        })
        .collect();
    // lattice spacing 2 / sqrt(n) dominates at small n; allow sampling noise after that
    assert!(d[1] < d[0], "{d:?}");
    assert!(d[2] < d[1] + 0.02, "{d:?}");
}
