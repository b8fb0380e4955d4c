use std::fmt;

use statrs::function::erf::erfc;

use crate::error::{Error, Result};

/// Pooled sample size up to which [`rank_sum_test`] enumerates exactly.
pub const EXACT_LIMIT: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RankSumMethod {
    /// Full permutation distribution of the midrank sum.
    Exact,
    /// Normal approximation with tie and continuity correction.
    Normal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankSumResult {
    /// Mann-Whitney `U` of the first sample.
    pub u: f64,
    /// Two-sided p-value.
    pub p_value: f64,
    pub method: RankSumMethod,
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Two-sided Wilcoxon rank-sum (Mann-Whitney) test. Exact for pooled size
/// up to [`EXACT_LIMIT`], normal approximation beyond.
pub fn rank_sum_test(a: &[f64], b: &[f64]) -> Result<RankSumResult> {
    let method = if a.len() + b.len() <= EXACT_LIMIT {
        RankSumMethod::Exact
    } else {
        RankSumMethod::Normal
    };
    rank_sum_test_with(a, b, method)
}

pub fn rank_sum_test_with(a: &[f64], b: &[f64], method: RankSumMethod) -> Result<RankSumResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidParameter("rank-sum test needs two non-empty samples".into()));
    }
    for (index, &value) in a.iter().chain(b).enumerate() {
        if !value.is_finite() {
            return Err(Error::NonFinite { index, value });
        }
    }
    let (n, m) = (a.len(), b.len());
    let total = n + m;
    if method == RankSumMethod::Exact && total > 62 {
        return Err(Error::InvalidParameter(format!(
            "exact enumeration is limited to 62 pooled values, got {total}"
        )));
    }
    let doubled = doubled_midranks(a, b);
    let ra2: u64 = doubled[..n].iter().sum();
    // 2U = 2R_a − n(n+1)
    let u2 = ra2 as i64 - (n * (n + 1)) as i64;
    let u = u2 as f64 / 2.0;
    let center2 = (n * m) as i64;
    let observed = (u2 - center2).abs();

    if doubled.iter().all(|&r| r == doubled[0]) {
        return Ok(RankSumResult {
            u,
            p_value: 1.0,
            method,
        });
    }

    let p_value = match method {
        RankSumMethod::Exact => {
            let mut sorted = doubled.clone();
            sorted.sort_unstable();
            let counts = subset_sum_counts(&sorted, n);
            let mut extreme = 0.0;
            let mut all = 0.0;
            for (s, &c) in counts.iter().enumerate() {
                if c == 0.0 {
                    continue;
                }
                all += c;
                let u2s = s as i64 - (n * (n + 1)) as i64;
                if (u2s - center2).abs() >= observed {
                    extreme += c;
                }
            }
            (extreme / all).min(1.0)
        }
        RankSumMethod::Normal => {
            let (nf, mf, tf) = (n as f64, m as f64, total as f64);
            let ties = tie_term(&doubled);
            let var = nf * mf / 12.0 * ((tf + 1.0) - ties / (tf * (tf - 1.0)));
            if var <= 0.0 {
                1.0
            } else {
                let z = ((observed as f64 / 2.0) - 0.5).max(0.0) / var.sqrt();
                erfc(z / std::f64::consts::SQRT_2).min(1.0)
            }
        }
    };
    Ok(RankSumResult {
        u,
        p_value,
        method,
    })
}

/// Midranks of the pooled sample times two, so ties stay integral.
/// Entries follow the order of `a` then `b`.
fn doubled_midranks(a: &[f64], b: &[f64]) -> Vec<u64> {
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let mut order: Vec<usize> = (0..pooled.len()).collect();
    order.sort_by(|&i, &j| pooled[i].total_cmp(&pooled[j]));
    let mut ranks = vec![0u64; pooled.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && pooled[order[end]] == pooled[order[start]] {
            end += 1;
        }
        // ranks start+1 ..= end, doubled average = start + 1 + end
        let r2 = (start + 1 + end) as u64;
        for &k in &order[start..end] {
            ranks[k] = r2;
        }
        start = end;
    }
    ranks
}

fn tie_term(doubled: &[u64]) -> f64 {
    let mut sorted = doubled.to_vec();
    sorted.sort_unstable();
    sorted
        .chunk_by(|x, y| x == y)
        .map(|g| {
            let t = g.len() as f64;
            t * t * t - t
        })
        .sum()
}

/// `counts[s]` = number of size-`k` subsets of `values` summing to `s`.
fn subset_sum_counts(values: &[u64], k: usize) -> Vec<f64> {
    let max: usize = values.iter().map(|&v| v as usize).sum();
    let mut table = vec![vec![0.0f64; max + 1]; k + 1];
    table[0][0] = 1.0;
    for &v in values {
        let v = v as usize;
        for size in (1..=k).rev() {
            let (lo, hi) = table.split_at_mut(size);
            let prev = &lo[size - 1];
            let cur = &mut hi[0];
            for s in (v..=max).rev() {
                cur[s] += prev[s - v];
            }
        }
    }
    table.swap_remove(k)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Win,
    Draw,
    Loss,
}

impl Verdict {
    /// Classifies sample `a` against `b` (smaller is better).
    pub fn classify(a: &[f64], b: &[f64], alpha: f64) -> Result<(Verdict, RankSumResult)> {
        let test = rank_sum_test(a, b)?;
        let verdict = if test.p_value < alpha {
            let (ma, mb) = (mean(a), mean(b));
            if ma < mb {
                Verdict::Win
            } else if ma > mb {
                Verdict::Loss
            } else {
                Verdict::Draw
            }
        } else {
            Verdict::Draw
        };
        Ok((verdict, test))
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Win => "win",
            Verdict::Draw => "draw",
            Verdict::Loss => "loss",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct WdlCounts {
    pub wins: usize,
    pub draws: usize,
    pub losses: usize,
}

/// Win/draw/loss counts of `a` over `b` across problems.
pub fn wdl_summary(results: &[(Vec<f64>, Vec<f64>)], alpha: f64) -> Result<WdlCounts> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!("alpha = {alpha} is outside (0, 1)")));
    }
    let mut counts = WdlCounts::default();
    for (a, b) in results {
        match Verdict::classify(a, b, alpha)?.0 {
            Verdict::Win => counts.wins += 1,
            Verdict::Draw => counts.draws += 1,
            Verdict::Loss => counts.losses += 1,
        }
    }
    Ok(counts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{Draws, RngStream};

    /// Enumerates every split of the pooled sample and recomputes U from
    /// scratch by pairwise comparison.
    fn brute_force(a: &[f64], b: &[f64]) -> (f64, f64) {
        let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
        let n = a.len();
        let u_of = |xs: &[f64], ys: &[f64]| -> f64 {
            let mut u = 0.0;
            for x in xs {
                for y in ys {
                    if x > y {
                        u += 1.0;
                    } else if x == y {
                        u += 0.5;
                    }
                }
            }
            u
        };
        let nm = (n * b.len()) as f64;
        let u_obs = u_of(a, b);
        let obs = (u_obs - nm / 2.0).abs();
        let (mut hits, mut all) = (0u64, 0u64);
        for mask in 0u32..(1 << pooled.len()) {
            if mask.count_ones() as usize != n {
                continue;
            }
            let (xs, ys): (Vec<(usize, f64)>, Vec<(usize, f64)>) =
                pooled.iter().copied().enumerate().partition(|(i, _)| mask >> i & 1 == 1);
            let xs: Vec<f64> = xs.into_iter().map(|p| p.1).collect();
            let ys: Vec<f64> = ys.into_iter().map(|p| p.1).collect();
            all += 1;
            if (u_of(&xs, &ys) - nm / 2.0).abs() >= obs - 1e-9 {
                hits += 1;
            }
        }
        (u_obs, hits as f64 / all as f64)
    }

    #[test]
    fn examples() {
        let r = rank_sum_test(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]).unwrap();
        assert_eq!(r.u, 0.0);
        assert!((r.p_value - 0.1).abs() < 1e-12);
        assert_eq!(r.method, RankSumMethod::Exact);
        let r = rank_sum_test(&[1.0, 2.0], &[1.0, 2.0]).unwrap();
        assert_eq!(r.u, 2.0);
        assert_eq!(r.p_value, 1.0);
        let r = rank_sum_test(&[3.0; 5], &[3.0; 30]).unwrap();
        assert_eq!(r.p_value, 1.0);
        let r = rank_sum_test(&[0.5, 0.7, 0.9], &[0.5, 0.7, 0.9]).unwrap();
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(rank_sum_test(&[], &[1.0]).is_err());
        assert!(rank_sum_test(&[f64::NAN], &[1.0]).is_err());
        assert!(rank_sum_test_with(&[0.0; 40], &[1.0; 40], RankSumMethod::Exact).is_err());
    }

    #[test]
    fn exact_matches_brute_force() {
        let mut rng = RngStream::new(3, 3);
        for trial in 0..200 {
            let n = 1 + trial % 6;
            let m = 1 + (trial / 6) % 7;
            // coarse values so ties are common
            let mut draw = |k: usize| -> Vec<f64> {
                (0..k).map(|_| (rng.uniform() * 6.0).floor()).collect()
            };
            let a = draw(n);
            let b = draw(m);
            let (u, p) = brute_force(&a, &b);
            let r = rank_sum_test_with(&a, &b, RankSumMethod::Exact).unwrap();
            assert_eq!(r.u, u, "{a:?} {b:?}");
            assert!((r.p_value - p).abs() < 1e-12, "{a:?} {b:?}: {} vs {p}", r.p_value);
        }
    }

    #[test]
    fn normal_approximation_tracks_exact() {
        let mut rng = RngStream::new(8, 8);
        for _ in 0..300 {
            let shift = rng.uniform() * 2.0;
            let a: Vec<f64> = (0..8).map(|_| rng.normal()).collect();
            let b: Vec<f64> = (0..8).map(|_| rng.normal() + shift).collect();
            let e = rank_sum_test_with(&a, &b, RankSumMethod::Exact).unwrap();
            let z = rank_sum_test_with(&a, &b, RankSumMethod::Normal).unwrap();
            assert_eq!(e.u, z.u);
            assert!((e.p_value - z.p_value).abs() < 0.02, "{} vs {}", e.p_value, z.p_value);
        }
    }

    #[test]
    fn large_samples_use_normal_path() {
        let a: Vec<f64> = (0..20).map(f64::from).collect();
        let b: Vec<f64> = (100..120).map(f64::from).collect();
        let r = rank_sum_test(&a, &b).unwrap();
        assert_eq!(r.method, RankSumMethod::Normal);
        assert_eq!(r.u, 0.0);
        assert!(r.p_value < 1e-6);
    }

    #[test]
    fn wdl_examples() {
        let good = vec![0.1, 0.2, 0.3, 0.4];
        let bad = vec![5.0, 6.0, 7.0, 8.0];
        let sep = vec![(good.clone(), bad.clone()); 3];
        assert_eq!(
            wdl_summary(&sep, 0.05).unwrap(),
            WdlCounts { wins: 3, draws: 0, losses: 0 }
        );
        let same = vec![(good.clone(), good.clone()); 4];
        assert_eq!(
            wdl_summary(&same, 0.05).unwrap(),
            WdlCounts { wins: 0, draws: 4, losses: 0 }
        );
        // p = 0.1 for the 3-vs-3 split: a draw at 0.05, a win at 0.15
        let mixed = vec![
            (vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]),
            (bad.clone(), good.clone()),
            (good.clone(), bad.clone()),
        ];
        assert_eq!(
            wdl_summary(&mixed, 0.05).unwrap(),
            WdlCounts { wins: 1, draws: 1, losses: 1 }
        );
        assert_eq!(
            wdl_summary(&mixed, 0.15).unwrap(),
            WdlCounts { wins: 2, draws: 0, losses: 1 }
        );
        assert!(wdl_summary(&mixed, 1.0).is_err());
    }
}
