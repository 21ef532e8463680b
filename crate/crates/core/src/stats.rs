//! Fixed-effects ANOVA, Tukey HSD and studentized range quantiles.

use std::fmt::Write as _;

use statrs::distribution::{ContinuousCDF, FisherSnedecor};
use statrs::function::erf::erfc;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

mod qtable;

#[derive(Debug, Clone, PartialEq)]
pub struct AnovaRow {
    pub source: String,
    pub ss: f64,
    pub df: usize,
    pub ms: f64,
    pub f: f64,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnovaTable {
    pub sources: Vec<AnovaRow>,
    pub sse: f64,
    pub df_error: usize,
    pub mse: f64,
    pub ss_total: f64,
    pub df_total: usize,
    /// Zero residual variance: F is undefined (0/0) or infinite.
    pub degenerate: bool,
}

impl AnovaTable {
    /// p-value of the first (for one-way: the only) source.
    pub fn p_value(&self) -> f64 {
        self.sources[0].p
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<12} {:>16} {:>8} {:>16} {:>12} {:>10}", "source", "SS", "df", "MS", "F", "p");
        for r in &self.sources {
            let _ = writeln!(
                out,
                "{:<12} {:>16.6e} {:>8} {:>16.6e} {:>12.5} {:>10.4}",
                r.source, r.ss, r.df, r.ms, r.f, r.p
            );
        }
        let _ = writeln!(out, "{:<12} {:>16.6e} {:>8} {:>16.6e}", "error", self.sse, self.df_error, self.mse);
        let _ = writeln!(out, "{:<12} {:>16.6e} {:>8}", "total", self.ss_total, self.df_total);
        if self.degenerate {
            out.push_str("(zero residual variance)\n");
        }
        out
    }

    pub fn render_csv(&self) -> String {
        let mut out = String::from("source,ss,df,ms,f,p\n");
        for r in &self.sources {
            let _ = writeln!(out, "{},{},{},{},{},{:e}", r.source, r.ss, r.df, r.ms, r.f, r.p);
        }
        let _ = writeln!(out, "error,{},{},{},,", self.sse, self.df_error, self.mse);
        let _ = writeln!(out, "total,{},{},,,", self.ss_total, self.df_total);
        out
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Mean that is exact for constant samples.
fn stable_mean(xs: &[f64]) -> f64 {
    let first = xs[0];
    if xs.iter().all(|&x| x == first) {
        first
    } else {
        mean(xs)
    }
}

fn sum_sq_dev(xs: &[f64], m: f64) -> f64 {
    xs.iter().map(|&x| (x - m) * (x - m)).sum()
}

/// Upper tail of F(df1, df2) at `f`, with the degenerate cases resolved:
/// `0/0` gives 1 and `x/0` gives 0.
fn f_upper_tail(ss_effect: f64, df1: usize, ss_error: f64, df2: usize) -> (f64, f64, bool) {
    if ss_error <= 0.0 {
        return if ss_effect <= 0.0 { (f64::NAN, 1.0, true) } else { (f64::INFINITY, 0.0, true) };
    }
    let f = (ss_effect / df1 as f64) / (ss_error / df2 as f64);
    let dist = FisherSnedecor::new(df1 as f64, df2 as f64).expect("positive degrees of freedom");
    (f, dist.sf(f).clamp(0.0, 1.0), false)
}

/// One-way fixed-effects ANOVA over independent groups.
pub fn one_way_anova<G: AsRef<[f64]>>(groups: &[G]) -> Result<AnovaTable> {
    let k = groups.len();
    if k < 2 {
        return Err(Error::Stats(format!("ANOVA needs at least 2 groups, got {k}")));
    }
    if let Some(i) = groups.iter().position(|g| g.as_ref().len() < 2) {
        return Err(Error::Stats(format!("group {i} has fewer than 2 observations")));
    }
    let all: Vec<f64> = groups.iter().flat_map(|g| g.as_ref().iter().copied()).collect();
    let n_total = all.len();
    let grand = stable_mean(&all);
    let means: Vec<f64> = groups.iter().map(|g| stable_mean(g.as_ref())).collect();
    let ss_between: f64 = if means.iter().all(|&m| m == means[0]) {
        0.0
    } else {
        groups.iter().zip(&means).map(|(g, &m)| g.as_ref().len() as f64 * (m - grand).powi(2)).sum()
    };
    let sse: f64 = groups.iter().zip(&means).map(|(g, &m)| sum_sq_dev(g.as_ref(), m)).sum();
    let ss_total = sum_sq_dev(&all, grand);
    let (df_b, df_e) = (k - 1, n_total - k);
    let (f, p, degenerate) = f_upper_tail(ss_between, df_b, sse, df_e);
    Ok(AnovaTable {
        sources: vec![AnovaRow {
            source: "between".into(),
            ss: ss_between,
            df: df_b,
            ms: ss_between / df_b as f64,
            f,
            p,
        }],
        sse,
        df_error: df_e,
        mse: sse / df_e as f64,
        ss_total,
        df_total: n_total - 1,
        degenerate,
    })
}

/// A factor of a designed experiment: one level label per observation.
#[derive(Debug, Clone, Copy)]
pub struct Factor<'a> {
    pub name: &'a str,
    pub levels: &'a [usize],
}

/// Main-effects ANOVA for a balanced full-factorial design; interactions are
/// pooled into the residual.
pub fn main_effects_anova(factors: &[Factor<'_>], response: &[f64]) -> Result<AnovaTable> {
    let n = response.len();
    if factors.is_empty() || n < 2 {
        return Err(Error::Stats("need at least one factor and two observations".into()));
    }
    let mut level_sets: Vec<Vec<usize>> = Vec::with_capacity(factors.len());
    for f in factors {
        if f.levels.len() != n {
            return Err(Error::Dimension { expected: n, got: f.levels.len() });
        }
        let mut ls = f.levels.to_vec();
        ls.sort_unstable();
        ls.dedup();
        if ls.len() < 2 {
            return Err(Error::Stats(format!("factor `{}` has fewer than 2 levels", f.name)));
        }
        level_sets.push(ls);
    }
    // balanced full factorial: every level combination appears equally often
    let cells: usize = level_sets.iter().map(Vec::len).product();
    if n % cells != 0 {
        return Err(Error::Stats(format!("unbalanced design: {n} observations over {cells} cells")));
    }
    let mut counts = std::collections::HashMap::new();
    for obs in 0..n {
        let key: Vec<usize> = factors.iter().map(|f| f.levels[obs]).collect();
        *counts.entry(key).or_insert(0usize) += 1;
    }
    if counts.len() != cells || counts.values().any(|&c| c != n / cells) {
        return Err(Error::Stats("unbalanced design: cell counts differ".into()));
    }

    let grand = stable_mean(response);
    let ss_total = sum_sq_dev(response, grand);
    let mut rows = Vec::with_capacity(factors.len());
    let mut ss_sum = 0.0;
    let mut df_sum = 0;
    for (f, ls) in factors.iter().zip(&level_sets) {
        let mut ss = 0.0;
        for &l in ls {
            let ys: Vec<f64> = response.iter().zip(f.levels).filter(|(_, &x)| x == l).map(|(&y, _)| y).collect();
            ss += ys.len() as f64 * (stable_mean(&ys) - grand).powi(2);
        }
        ss_sum += ss;
        df_sum += ls.len() - 1;
        rows.push(AnovaRow {
            source: f.name.to_string(),
            ss,
            df: ls.len() - 1,
            ms: ss / (ls.len() - 1) as f64,
            f: 0.0,
            p: 1.0,
        });
    }
    if df_sum + 1 >= n {
        return Err(Error::Stats("no residual degrees of freedom".into()));
    }
    let df_e = n - 1 - df_sum;
    let sse = (ss_total - ss_sum).max(0.0);
    let mut degenerate = false;
    for r in &mut rows {
        let (f, p, d) = f_upper_tail(r.ss, r.df, sse, df_e);
        r.f = f;
        r.p = p;
        degenerate |= d;
    }
    Ok(AnovaTable { sources: rows, sse, df_error: df_e, mse: sse / df_e as f64, ss_total, df_total: n - 1, degenerate })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TukeyPair {
    pub i: usize,
    pub j: usize,
    /// `c_i - c_j`
    pub diff: f64,
    pub threshold: f64,
    pub rejected: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TukeyReport {
    pub alpha: f64,
    pub q: f64,
    pub mse: f64,
    pub df_error: usize,
    pub means: Vec<f64>,
    pub pairs: Vec<TukeyPair>,
}

impl TukeyReport {
    pub fn pair(&self, i: usize, j: usize) -> Option<&TukeyPair> {
        self.pairs.iter().find(|p| (p.i, p.j) == (i, j) || (p.i, p.j) == (j, i))
    }

    pub fn render_text(&self, labels: &[String]) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "Tukey HSD (alpha = {}, q = {:.4}, MSE = {:.6e}, df = {})",
            self.alpha, self.q, self.mse, self.df_error
        );
        let _ = writeln!(out, "{:<24} {:>16} {:>16} {:>9}", "pair", "difference", "threshold", "rejected");
        for p in &self.pairs {
            let name = format!("{} - {}", labels[p.i], labels[p.j]);
            let _ = writeln!(
                out,
                "{:<24} {:>16.4} {:>16.4} {:>9}",
                name,
                p.diff,
                p.threshold,
                if p.rejected { "yes" } else { "no" }
            );
        }
        out
    }

    pub fn render_csv(&self) -> String {
        let mut out = String::from("i,j,difference,threshold,rejected\n");
        for p in &self.pairs {
            let _ = writeln!(out, "{},{},{},{},{}", p.i, p.j, p.diff, p.threshold, p.rejected);
        }
        out
    }
}

/// Tukey comparisons from group summaries: the pair `(i, j)` is rejected when
/// `|c_i - c_j| > q / sqrt(2) * sqrt(MSE (1/n_i + 1/n_j))`.
pub fn tukey_from_summary(
    means: &[f64],
    counts: &[usize],
    mse: f64,
    df_error: usize,
    alpha: f64,
) -> Result<TukeyReport> {
    let k = means.len();
    if k < 2 {
        return Err(Error::Stats(format!("Tukey HSD needs at least 2 groups, got {k}")));
    }
    if counts.len() != k {
        return Err(Error::Dimension { expected: k, got: counts.len() });
    }
    let q = q_value(k, df_error as f64, alpha)?;
    let mut pairs = Vec::with_capacity(k * (k - 1) / 2);
    for i in 0..k {
        for j in i + 1..k {
            let threshold = q / 2f64.sqrt() * (mse * (1.0 / counts[i] as f64 + 1.0 / counts[j] as f64)).sqrt();
            let diff = means[i] - means[j];
            pairs.push(TukeyPair { i, j, diff, threshold, rejected: diff.abs() > threshold });
        }
    }
    Ok(TukeyReport { alpha, q, mse, df_error, means: means.to_vec(), pairs })
}

/// Tukey HSD over raw groups, using MSE and residual df of the one-way ANOVA.
pub fn tukey_hsd<G: AsRef<[f64]>>(groups: &[G], alpha: f64) -> Result<TukeyReport> {
    let table = one_way_anova(groups)?;
    let means: Vec<f64> = groups.iter().map(|g| stable_mean(g.as_ref())).collect();
    let counts: Vec<usize> = groups.iter().map(|g| g.as_ref().len()).collect();
    tukey_from_summary(&means, &counts, table.mse, table.df_error, alpha)
}

/// Table quantile when available, numerical integration otherwise.
pub fn q_value(p: usize, f: f64, alpha: f64) -> Result<f64> {
    match studentized_range_q(p, f, alpha) {
        Ok(q) => Ok(q),
        Err(_) => studentized_range_q_numeric(p, f, alpha),
    }
}

/// Upper-`alpha` quantile of the studentized range for `p` groups and `f`
/// error degrees of freedom, from the embedded table (alpha 0.05 or 0.01,
/// `2 <= p <= 10`). Degrees of freedom between tabled rows are interpolated
/// linearly in `1/f`; `f > 120` uses the infinite row.
pub fn studentized_range_q(p: usize, f: f64, alpha: f64) -> Result<f64> {
    let table = if alpha == 0.05 {
        &qtable::Q_05
    } else if alpha == 0.01 {
        &qtable::Q_01
    } else {
        return Err(Error::Stats(format!("alpha {alpha} is not tabled (0.05, 0.01); use studentized_range_q_numeric")));
    };
    if !(2..=10).contains(&p) {
        return Err(Error::Stats(format!("p = {p} groups is not tabled (2..=10); use studentized_range_q_numeric")));
    }
    if !(f >= 1.0) {
        return Err(Error::Stats(format!("error degrees of freedom must be >= 1, got {f}")));
    }
    let col = p - 2;
    let dfs = &qtable::DF;
    if f > 120.0 {
        return Ok(table[dfs.len()][col]);
    }
    if let Some(i) = dfs.iter().position(|&d| d == f) {
        return Ok(table[i][col]);
    }
    let hi = dfs.iter().position(|&d| d > f).expect("f <= 120 is bracketed");
    let lo = hi - 1;
    let (f0, f1) = (dfs[lo], dfs[hi]);
    let t = (1.0 / f0 - 1.0 / f) / (1.0 / f0 - 1.0 / f1);
    Ok(table[lo][col] + t * (table[hi][col] - table[lo][col]))
}

fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

fn simpson(a: f64, b: f64, intervals: usize, f: impl Fn(f64) -> f64) -> f64 {
    let m = intervals + intervals % 2;
    let h = (b - a) / m as f64;
    let mut s = f(a) + f(b);
    for i in 1..m {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// P(range of `p` standard normals <= w).
fn range_cdf_normal(w: f64, p: usize) -> f64 {
    if w <= 0.0 {
        return 0.0;
    }
    let pf = p as f64;
    let v = simpson(-8.5, 8.5, 600, |z| {
        let d = (normal_cdf(z) - normal_cdf(z - w)).max(0.0);
        (-0.5 * z * z).exp() * d.powi(p as i32 - 1)
    });
    (pf * v / (2.0 * std::f64::consts::PI).sqrt()).clamp(0.0, 1.0)
}

/// CDF of the studentized range `Q(p, f)`; `f = inf` gives the normal range.
pub fn studentized_range_cdf(q: f64, p: usize, f: f64) -> f64 {
    if q <= 0.0 {
        return 0.0;
    }
    if f.is_infinite() || f > 1e5 {
        return range_cdf_normal(q, p);
    }
    // S = chi_f / sqrt(f); density of S on a window wide enough for any f >= 1
    let half = 0.5 * f;
    let log_norm = half * f.ln() - ln_gamma(half) - (half - 1.0) * 2f64.ln();
    let width = 9.0 / (2.0 * f).sqrt();
    let (lo, hi) = ((1.0 - width).max(0.0), 1.0 + width + 1.0 / f);
    simpson(lo, hi, 400, |s| {
        if s <= 0.0 {
            return 0.0;
        }
        let dens = (log_norm + (f - 1.0) * s.ln() - half * s * s).exp();
        dens * range_cdf_normal(q * s, p)
    })
    .clamp(0.0, 1.0)
}

/// Upper-`alpha` studentized range quantile by numerical integration and bisection.
pub fn studentized_range_q_numeric(p: usize, f: f64, alpha: f64) -> Result<f64> {
    if p < 2 || !(f >= 1.0) || !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Stats(format!("invalid studentized range arguments p = {p}, f = {f}, alpha = {alpha}")));
    }
    let target = 1.0 - alpha;
    let (mut lo, mut hi) = (0.0, 10.0);
    while studentized_range_cdf(hi, p, f) < target {
        hi *= 2.0;
        if hi > 1e4 {
            return Err(Error::Stats("studentized range quantile did not bracket".into()));
        }
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if studentized_range_cdf(mid, p, f) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-7 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_one_way_example() {
        let t = one_way_anova(&[vec![1.0, 2.0, 3.0], vec![2.0, 3.0, 4.0]]).unwrap();
        let r = &t.sources[0];
        assert!((r.ss - 1.5).abs() < 1e-12);
        assert!((t.sse - 4.0).abs() < 1e-12);
        assert!((r.f - 1.5).abs() < 1e-12);
        assert_eq!((r.df, t.df_error, t.df_total), (1, 4, 5));
        // P(F(1,4) > 1.5) = P(|T_4| > sqrt(1.5))
        assert!((r.p - 0.287_864).abs() < 1e-5, "{}", r.p);
    }

    #[test]
    fn constant_groups_are_degenerate() {
        let t = one_way_anova(&[vec![3.3; 4], vec![3.3; 4], vec![3.3; 4]]).unwrap();
        assert!(t.degenerate);
        assert_eq!(t.p_value(), 1.0);
        let t = one_way_anova(&[vec![1.0; 3], vec![2.0; 3]]).unwrap();
        assert!(t.degenerate);
        assert_eq!(t.p_value(), 0.0);
    }

    #[test]
    fn anova_errors() {
        assert!(one_way_anova(&[vec![1.0, 2.0]]).is_err());
        assert!(one_way_anova(&[vec![1.0, 2.0], vec![1.0]]).is_err());
    }

    #[test]
    fn table_lookup() {
        assert!((studentized_range_q(2, f64::INFINITY, 0.05).unwrap() - 2.772).abs() < 1e-3);
        assert!((studentized_range_q(5, 1e6, 0.05).unwrap() - 3.858).abs() < 1e-3);
        assert!((studentized_range_q(3, 10.0, 0.05).unwrap() - 3.8768).abs() < 1e-4);
        let mid = studentized_range_q(3, 22.0, 0.05).unwrap();
        let (a, b) = (studentized_range_q(3, 20.0, 0.05).unwrap(), studentized_range_q(3, 24.0, 0.05).unwrap());
        assert!(mid < a && mid > b);
        assert!(studentized_range_q(3, 10.0, 0.10).is_err());
        assert!(studentized_range_q(11, 10.0, 0.05).is_err());
    }

    #[test]
    fn q_increases_with_groups() {
        for alpha in [0.05, 0.01] {
            for f in [5.0, 12.0, 30.0, 120.0, f64::INFINITY] {
                let qs: Vec<f64> = (2..=10).map(|p| studentized_range_q(p, f, alpha).unwrap()).collect();
                assert!(qs.windows(2).all(|w| w[0] < w[1]));
            }
        }
    }

    #[test]
    fn identical_groups_never_rejected() {
        let g = vec![1.0, 4.0, 2.0, 8.0];
        let r = tukey_hsd(&[g.clone(), g], 0.05).unwrap();
        assert!(!r.pairs[0].rejected);
        assert_eq!(r.pairs[0].diff, 0.0);
    }

    #[test]
    fn main_effects_df_for_5x3x2_design() {
        let (mut a, mut b, mut c, mut y) = (vec![], vec![], vec![], vec![]);
        for i in 0..5 {
            for j in 0..3 {
                for k in 0..2 {
                    for r in 0..4 {
                        a.push(i);
                        b.push(j);
                        c.push(k);
                        y.push((i * 7 + j * 3 + k + r * r) as f64);
                    }
                }
            }
        }
        let t = main_effects_anova(
            &[
                Factor { name: "flow", levels: &a },
                Factor { name: "cost", levels: &b },
                Factor { name: "ratio", levels: &c },
            ],
            &y,
        )
        .unwrap();
        let dfs: Vec<usize> = t.sources.iter().map(|r| r.df).collect();
        assert_eq!(dfs, vec![4, 2, 1]);
        assert_eq!(t.df_error, 112);
        let flat = main_effects_anova(&[Factor { name: "flow", levels: &a }], &vec![2.0; y.len()]).unwrap();
        assert_eq!(flat.sources[0].ss, 0.0);
        assert_eq!(flat.sse, 0.0);
        assert!(main_effects_anova(&[Factor { name: "flow", levels: &a[1..] }], &y[1..]).is_err());
    }
}
