//! 2x2 contingency tests (windows x correct/incorrect): Pearson's chi-square
//! and Fisher's exact test.

use serde::{Deserialize, Serialize};

/// Counts `[[a, b], [c, d]]`: rows are the reference and current windows,
/// columns the incorrect and correct predictions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Table2x2 {
    pub a: u64,
    pub b: u64,
    pub c: u64,
    pub d: u64,
}

impl Table2x2 {
    pub fn new(a: u64, b: u64, c: u64, d: u64) -> Self {
        Table2x2 { a, b, c, d }
    }

    pub fn n(&self) -> u64 {
        self.a + self.b + self.c + self.d
    }

    /// Expected counts under independence, row-major.
    pub fn expected(&self) -> [f64; 4] {
        let n = self.n() as f64;
        let (r1, r2) = ((self.a + self.b) as f64, (self.c + self.d) as f64);
        let (c1, c2) = ((self.a + self.c) as f64, (self.b + self.d) as f64);
        [r1 * c1 / n, r1 * c2 / n, r2 * c1 / n, r2 * c2 / n]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alternative {
    TwoSided,
    /// The current window has the larger error rate.
    Greater,
}

/// Pearson statistic `sum (O - E)^2 / E` without continuity correction.
/// `None` when a margin is empty.
pub fn chi2_statistic(t: &Table2x2) -> Option<f64> {
    let e = t.expected();
    if e.iter().any(|&v| v <= 0.0) {
        return None;
    }
    let o = [t.a, t.b, t.c, t.d];
    Some(
        o.iter()
            .zip(e)
            .map(|(&o, e)| (o as f64 - e) * (o as f64 - e) / e)
            .sum(),
    )
}

/// Upper tail of the chi-square distribution with one degree of freedom.
pub fn chi2_sf_1df(x: f64) -> f64 {
    libm::erfc(libm::sqrt(x / 2.0))
}

fn ln_choose(n: u64, k: u64) -> f64 {
    libm::lgamma(n as f64 + 1.0) - libm::lgamma(k as f64 + 1.0) - libm::lgamma((n - k) as f64 + 1.0)
}

/// Hypergeometric probability of the table with top-left cell `x` and the
/// margins of `t`.
fn table_prob(t: &Table2x2, x: u64) -> f64 {
    let (r1, r2, c1) = (t.a + t.b, t.c + t.d, t.a + t.c);
    libm::exp(ln_choose(r1, x) + ln_choose(r2, c1 - x) - ln_choose(r1 + r2, c1))
}

/// Fisher's exact test. The two-sided p-value sums all tables no more
/// probable than the observed one (relative tolerance 1e-7).
pub fn fisher_exact(t: &Table2x2, alternative: Alternative) -> f64 {
    let (r1, r2, c1) = (t.a + t.b, t.c + t.d, t.a + t.c);
    let lo = c1.saturating_sub(r2);
    let hi = r1.min(c1);
    let p = match alternative {
        // fewer reference errors means more current errors
        Alternative::Greater => (lo..=t.a).map(|x| table_prob(t, x)).sum(),
        Alternative::TwoSided => {
            let p_obs = table_prob(t, t.a);
            (lo..=hi)
                .map(|x| table_prob(t, x))
                .filter(|&p| p <= p_obs * (1.0 + 1e-7))
                .sum()
        }
    };
    f64::min(p, 1.0)
}

/// Which test produced a p-value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestUsed {
    Chi2,
    Fisher,
}

/// Chi-square p-value, falling back to Fisher's exact test when an
/// expected count is below 5.
pub fn chi2_test(t: &Table2x2) -> (f64, TestUsed) {
    match chi2_statistic(t) {
        Some(x) if t.expected().iter().all(|&e| e >= 5.0) => (chi2_sf_1df(x), TestUsed::Chi2),
        _ => (fisher_exact(t, Alternative::TwoSided), TestUsed::Fisher),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chi2_hand_computed() {
        // E = [15, 35, 15, 35]; sum (O-E)^2/E = 25/15 + 25/35 + 25/15 + 25/35
        let t = Table2x2::new(10, 40, 20, 30);
        let x = chi2_statistic(&t).unwrap();
        assert!((x - 100.0 / 21.0).abs() < 1e-12);
        assert_eq!(chi2_test(&t).1, TestUsed::Chi2);
        assert!((chi2_test(&t).0 - 0.029_096_331_741_252_3).abs() < 1e-9);
    }

    #[test]
    fn chi2_survival_reference_points() {
        assert!((chi2_sf_1df(3.841_458_820_694_124) - 0.05).abs() < 1e-12);
        assert_eq!(chi2_sf_1df(0.0), 1.0);
    }

    #[test]
    fn small_expected_counts_fall_back() {
        let t = Table2x2::new(0, 50, 25, 25);
        assert_eq!(chi2_test(&t).1, TestUsed::Chi2);
        let t = Table2x2::new(0, 10, 3, 7);
        assert_eq!(chi2_test(&t).1, TestUsed::Fisher);
    }

    #[test]
    fn fisher_reference_50_0_vs_25_25() {
        let t = Table2x2::new(0, 50, 25, 25);
        let p = fisher_exact(&t, Alternative::TwoSided);
        assert!(p < 0.01);
        // only tables with x = 0 (and the symmetric extreme x = 25) are as extreme
        let extreme = table_prob(&t, 0) + table_prob(&t, 25);
        assert!((p - extreme).abs() < 1e-15);
    }

    #[test]
    fn fisher_tea_tasting() {
        // Fisher's lady tasting tea: 3 of 4 correct, p = 17/70 two-sided
        let t = Table2x2::new(3, 1, 1, 3);
        assert!((fisher_exact(&t, Alternative::TwoSided) - 34.0 / 70.0).abs() < 1e-12);
        let t = Table2x2::new(1, 3, 3, 1);
        assert!((fisher_exact(&t, Alternative::Greater) - 17.0 / 70.0).abs() < 1e-12);
    }
}
