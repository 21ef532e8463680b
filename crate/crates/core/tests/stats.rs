use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, Normal};
use stoflp::stats::{studentized_range_q_numeric, tukey_from_summary, Factor};
use stoflp::{main_effects_anova, one_way_anova, studentized_range_q, tukey_hsd};

/// Range distribution of `p` standard normals by the trapezoid rule on a
/// fine grid, then the upper quantile by bisection.
fn q_infinite_oracle(p: usize, alpha: f64) -> f64 {
    let phi = Normal::standard();
    let cdf = |w: f64| {
        let (a, b, m) = (-12.0, 12.0, 24_000);
        let h = (b - a) / m as f64;
        let g = |z: f64| {
            let inner = phi.cdf(z + w) - phi.cdf(z);
            (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt() * inner.powi(p as i32 - 1)
        };
        let mut s = 0.5 * (g(a) + g(b));
        for i in 1..m {
            s += g(a + i as f64 * h);
        }
        p as f64 * s * h
    };
    let (mut lo, mut hi) = (0.0, 10.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if cdf(mid) < 1.0 - alpha {
            lo = mid
        } else {
            hi = mid
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn tabled_q_matches_integration_oracle() {
    for (p, expect) in [(2, 2.772), (5, 3.858)] {
        let oracle = q_infinite_oracle(p, 0.05);
        let q = studentized_range_q(p, f64::INFINITY, 0.05).unwrap();
        assert!((q - oracle).abs() < 1e-3, "p = {p}: table {q}, oracle {oracle}");
        assert!((oracle - expect).abs() < 1e-3);
    }
}

#[test]
fn table_agrees_with_numerical_quantiles() {
    for alpha in [0.05, 0.01] {
        for p in [2, 3, 5, 8, 10] {
            for f in [2.0, 5.0, 10.0, 24.0, 60.0, 120.0] {
                let t = studentized_range_q(p, f, alpha).unwrap();
                let n = studentized_range_q_numeric(p, f, alpha).unwrap();
                assert!((t - n).abs() < 2e-3 * t, "p {p} f {f} alpha {alpha}: {t} vs {n}");
            }
        }
    }
}

#[test]
fn interpolated_q_is_bracketed() {
    let q = studentized_range_q(4, 27.0, 0.05).unwrap();
    let (a, b) = (studentized_range_q(4, 24.0, 0.05).unwrap(), studentized_range_q(4, 30.0, 0.05).unwrap());
    assert!(q < a && q > b);
    assert!(studentized_range_q(4, 27.0, 0.10).is_err());
}

fn random_groups(rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let k = rng.random_range(2..7);
    (0..k)
        .map(|g| {
            let n = rng.random_range(2..30);
            let shift = rng.random_range(-5.0..5.0) * g as f64;
            let scale = 10f64.powf(rng.random_range(-3.0..6.0));
            (0..n).map(|_| scale * (shift + rng.random_range(-1.0..1.0))).collect()
        })
        .collect()
}

#[test]
fn ss_decomposition_identity_on_random_data() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..1000 {
        let groups = random_groups(&mut rng);
        let t = one_way_anova(&groups).unwrap();
        let all: Vec<f64> = groups.iter().flatten().copied().collect();
        let grand = all.iter().sum::<f64>() / all.len() as f64;
        let sst: f64 = all.iter().map(|x| (x - grand).powi(2)).sum();
        let parts = t.sources[0].ss + t.sse;
        assert!((sst - parts).abs() <= 1e-6 * sst, "{sst} vs {parts}");
        assert_eq!(t.df_total, t.sources[0].df + t.df_error);
        assert!((0.0..=1.0).contains(&t.sources[0].p));
    }
}

#[test]
fn tukey_thresholds_match_formula() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..200 {
        let groups = random_groups(&mut rng);
        let rep = tukey_hsd(&groups, 0.05).unwrap();
        let t = one_way_anova(&groups).unwrap();
        let q = stoflp::stats::q_value(groups.len(), t.df_error as f64, 0.05).unwrap();
        for pair in &rep.pairs {
            let (ni, nj) = (groups[pair.i].len() as f64, groups[pair.j].len() as f64);
            let direct = q / 2f64.sqrt() * (t.mse * (1.0 / ni + 1.0 / nj)).sqrt();
            assert!((pair.threshold - direct).abs() <= 1e-12 * direct.max(1e-300));
            assert_eq!(pair.rejected, pair.diff.abs() > pair.threshold);
        }
    }
}

#[test]
fn pairwise_trace_with_reference_threshold() {
    // b = -1, 0, 1, 1.5, 2
    let means = [3_316_002.0, 3_370_616.0, 3_461_362.0, 3_424_912.0, 3_443_006.0];
    let n = 10_000;
    let q = studentized_range_q(5, f64::INFINITY, 0.05).unwrap();
    let mse = n as f64 * (44_948.75 / q).powi(2);
    let rep = tukey_from_summary(&means, &[n; 5], mse, 5 * (n - 1), 0.05).unwrap();
    assert!(rep.pairs.iter().all(|p| (p.threshold - 44_948.75).abs() < 1e-6));
    let kept: Vec<(usize, usize)> = rep.pairs.iter().filter(|p| !p.rejected).map(|p| (p.i, p.j)).collect();
    assert_eq!(kept, vec![(2, 3), (2, 4), (3, 4)]);
    assert!((rep.pair(2, 4).unwrap().diff - 18_356.0).abs() < 1.0);
}

/// F p-value against a Monte Carlo permutation estimate.
#[test]
fn f_p_values_match_permutation_estimates() {
    let mut rng = ChaCha8Rng::seed_from_u64(123);
    let normal = Normal::standard();
    for case in 0..4 {
        let shift = 0.4 * case as f64;
        let groups: Vec<Vec<f64>> = (0..3)
            .map(|g| (0..5).map(|_| normal.inverse_cdf(rng.random::<f64>()) + shift * g as f64).collect())
            .collect();
        let p = one_way_anova(&groups).unwrap().sources[0].p;
        let f_of = |gs: &[Vec<f64>]| one_way_anova(gs).unwrap().sources[0].f;
        let observed = f_of(&groups);
        let mut pool: Vec<f64> = groups.iter().flatten().copied().collect();
        let draws = 100_000;
        let mut hits = 0;
        for _ in 0..draws {
            rand::seq::SliceRandom::shuffle(pool.as_mut_slice(), &mut rng);
            let perm: Vec<Vec<f64>> = pool.chunks(5).map(<[f64]>::to_vec).collect();
            if f_of(&perm) >= observed - 1e-12 {
                hits += 1;
            }
        }
        let est = hits as f64 / draws as f64;
        assert!((p - est).abs() < 0.02, "case {case}: F p {p} vs permutation {est}");
    }
}

/// Residual sum of squares of a least-squares fit, via normal equations.
fn rss(design: &[Vec<f64>], y: &[f64]) -> f64 {
    let k = design[0].len();
    let mut a = vec![vec![0.0; k + 1]; k];
    for (row, &yi) in design.iter().zip(y) {
        for i in 0..k {
            for j in 0..k {
                a[i][j] += row[i] * row[j];
            }
            a[i][k] += row[i] * yi;
        }
    }
    for c in 0..k {
        let piv = (c..k).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        a.swap(c, piv);
        for r in 0..k {
            if r != c {
                let m = a[r][c] / a[c][c];
                for j in c..=k {
                    a[r][j] -= m * a[c][j];
                }
            }
        }
    }
    let beta: Vec<f64> = (0..k).map(|i| a[i][k] / a[i][i]).collect();
    design.iter().zip(y).map(|(row, &yi)| (yi - row.iter().zip(&beta).map(|(x, b)| x * b).sum::<f64>()).powi(2)).sum()
}

fn indicators(levels: &[usize], count: usize) -> Vec<Vec<f64>> {
    levels.iter().map(|&l| (1..count).map(|c| f64::from(u8::from(l == c))).collect()).collect()
}

#[test]
fn main_effects_match_indicator_regression() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for (la, lb, reps) in [(2usize, 2usize, 3usize), (3, 2, 4), (2, 4, 2)] {
        let mut a = Vec::new();
        let mut b = Vec::new();
        let mut y = Vec::new();
        for i in 0..la {
            for j in 0..lb {
                for _ in 0..reps {
                    a.push(i);
                    b.push(j);
                    y.push(i as f64 * 1.5 - j as f64 + rng.random_range(-1.0..1.0));
                }
            }
        }
        let t = main_effects_anova(&[Factor { name: "a", levels: &a }, Factor { name: "b", levels: &b }], &y).unwrap();
        let ones: Vec<Vec<f64>> = y.iter().map(|_| vec![1.0]).collect();
        let (ia, ib) = (indicators(&a, la), indicators(&b, lb));
        let with_a: Vec<Vec<f64>> = ones.iter().zip(&ia).map(|(o, x)| [o.clone(), x.clone()].concat()).collect();
        let with_ab: Vec<Vec<f64>> = with_a.iter().zip(&ib).map(|(o, x)| [o.clone(), x.clone()].concat()).collect();
        let (r0, r1, r2) = (rss(&ones, &y), rss(&with_a, &y), rss(&with_ab, &y));
        assert!((t.sources[0].ss - (r0 - r1)).abs() < 1e-8 * r0);
        assert!((t.sources[1].ss - (r1 - r2)).abs() < 1e-8 * r0);
        assert!((t.sse - r2).abs() < 1e-8 * r0);
        assert_eq!(t.df_error, y.len() - 1 - (la - 1) - (lb - 1));
    }
}

proptest! {
    #[test]
    fn anova_is_translation_invariant(seed in any::<u64>(), c in -1e4f64..1e4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let groups: Vec<Vec<f64>> = (0..4).map(|g| (0..6).map(|_| g as f64 + rng.random_range(-2.0..2.0)).collect()).collect();
        let shifted: Vec<Vec<f64>> = groups.iter().map(|g| g.iter().map(|x| x + c).collect()).collect();
        let (a, b) = (one_way_anova(&groups).unwrap(), one_way_anova(&shifted).unwrap());
        prop_assert!((a.sources[0].f - b.sources[0].f).abs() <= 1e-6 * a.sources[0].f.max(1.0));
        prop_assert!((a.sources[0].p - b.sources[0].p).abs() <= 1e-6);
    }

    #[test]
    fn tukey_rejections_are_scale_and_shift_invariant(seed in any::<u64>(), s in 0.01f64..100.0, c in -50f64..50.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let groups: Vec<Vec<f64>> = (0..5).map(|g| (0..8).map(|_| 0.7 * g as f64 + rng.random_range(-2.0..2.0)).collect()).collect();
        let moved: Vec<Vec<f64>> = groups.iter().map(|g| g.iter().map(|x| s * x + c).collect()).collect();
        let (a, b) = (tukey_hsd(&groups, 0.05).unwrap(), tukey_hsd(&moved, 0.05).unwrap());
        for (x, y) in a.pairs.iter().zip(&b.pairs) {
            // skip pairs sitting on the threshold up to rounding
            if (x.diff.abs() - x.threshold).abs() > 1e-9 * x.threshold {
                prop_assert_eq!(x.rejected, y.rejected);
            }
        }
    }
}
