//! Two-sided Fisher's exact test on a 2x2 contingency table.
//!
//! The two-sided p-value follows the "probability at most that of the
//! observed table" rule: it sums, over all tables with the observed margins,
//! the hypergeometric probabilities that are `<=` the observed table's
//! probability within relative tolerance 1e-12. Conventions for two-sided
//! Fisher tests differ; this is the most common one.

/// Result of the test. A table with an empty row or column margin carries no
/// information; by convention its p is 1.0, flagged as degenerate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FisherOutcome {
    pub p: f64,
    pub degenerate: bool,
}

/// Exact two-sided p for the table `[[a, b], [c, d]]`.
pub fn fisher_exact_two_sided(a: u64, b: u64, c: u64, d: u64) -> FisherOutcome {
    let row1 = a + b;
    let row2 = c + d;
    let col1 = a + c;
    let col2 = b + d;
    if row1 == 0 || row2 == 0 || col1 == 0 || col2 == 0 {
        return FisherOutcome {
            p: 1.0,
            degenerate: true,
        };
    }
    let n = row1 + row2;

    // Cumulative ln-factorial table 0..=n.
    let mut lnf = Vec::with_capacity(n as usize + 1);
    lnf.push(0.0f64);
    for k in 1..=n {
        lnf.push(lnf[k as usize - 1] + (k as f64).ln());
    }
    let ln_p = |k: u64| -> f64 {
        lnf[row1 as usize] + lnf[row2 as usize] + lnf[col1 as usize] + lnf[col2 as usize]
            - lnf[n as usize]
            - lnf[k as usize]
            - lnf[(row1 - k) as usize]
            - lnf[(col1 - k) as usize]
            - lnf[(row2 + k - col1) as usize]
    };

    let k_min = col1.saturating_sub(row2);
    let k_max = row1.min(col1);
    let ln_observed = ln_p(a);
    // p_k <= p_obs * (1 + 1e-12)  <=>  ln p_k <= ln p_obs + ln(1 + 1e-12).
    let cutoff = ln_observed + 1e-12f64.ln_1p();
    let mut total = 0.0;
    for k in k_min..=k_max {
        let lp = ln_p(k);
        if lp <= cutoff {
            total += lp.exp();
        }
    }
    FisherOutcome {
        p: total.min(1.0),
        degenerate: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent brute-force oracle: exact integer binomials, enumerating
    /// every margin-preserving table. Valid for small margins.
    pub(crate) fn fisher_brute_force(a: u64, b: u64, c: u64, d: u64) -> f64 {
        fn binom(n: u64, k: u64) -> u128 {
            if k > n {
                return 0;
            }
            let k = k.min(n - k);
            let mut result: u128 = 1;
            for i in 0..k {
                result = result * (n - i) as u128 / (i + 1) as u128;
            }
            result
        }
        let (row1, row2, col1) = (a + b, c + d, a + c);
        let n = row1 + row2;
        let den = binom(n, col1) as f64;
        let table_p = |k: u64| (binom(row1, k) * binom(row2, col1 - k)) as f64 / den;
        let p_obs = table_p(a);
        let k_min = col1.saturating_sub(row2);
        let k_max = row1.min(col1);
        (k_min..=k_max)
            .map(table_p)
            .filter(|&p| p <= p_obs * (1.0 + 1e-12))
            .sum()
    }

    #[test]
    fn headline_table_is_not_significant() {
        // 12/25 vs 13/26 correct patches.
        let out = fisher_exact_two_sided(12, 13, 13, 13);
        assert!(!out.degenerate);
        assert!(out.p > 0.05, "p = {}", out.p);
        assert!(out.p <= 1.0);
    }

    #[test]
    fn equal_zero_proportions_give_p_one() {
        let out = fisher_exact_two_sided(0, 7, 0, 9);
        assert!(out.degenerate, "zero correct-column margin is degenerate");
        assert_eq!(out.p, 1.0);
    }

    #[test]
    fn equal_row_proportions_give_p_one() {
        for (a, b, c, d) in [(3, 3, 5, 5), (2, 4, 3, 6), (1, 1, 1, 1)] {
            let out = fisher_exact_two_sided(a, b, c, d);
            assert!(
                (out.p - 1.0).abs() < 1e-9,
                "({a},{b},{c},{d}) p = {}",
                out.p
            );
        }
    }

    #[test]
    fn known_extreme_table() {
        // Strong association: p must be tiny.
        let out = fisher_exact_two_sided(10, 0, 0, 10);
        assert!(out.p < 1e-4, "p = {}", out.p);
    }

    #[test]
    fn matches_brute_force_on_random_small_tables() {
        use crate::rng::SplitMix64;
        let mut rng = SplitMix64::new(2024);
        for _ in 0..200 {
            let a = rng.next_below(16);
            let b = rng.next_below(16);
            let c = rng.next_below(16);
            let d = rng.next_below(16);
            if a + b == 0 || c + d == 0 || a + c == 0 || b + d == 0 {
                continue;
            }
            let fast = fisher_exact_two_sided(a, b, c, d).p;
            let brute = fisher_brute_force(a, b, c, d);
            assert!(
                (fast - brute).abs() <= 1e-9 * brute.max(1.0),
                "({a},{b},{c},{d}): {fast} vs {brute}"
            );
        }
    }

    #[test]
    fn invariant_under_row_and_column_swaps() {
        use crate::rng::SplitMix64;
        let mut rng = SplitMix64::new(7);
        for _ in 0..100 {
            let (a, b, c, d) = (
                rng.next_below(12),
                rng.next_below(12),
                rng.next_below(12),
                rng.next_below(12),
            );
            let base = fisher_exact_two_sided(a, b, c, d).p;
            let rows = fisher_exact_two_sided(c, d, a, b).p;
            let cols = fisher_exact_two_sided(b, a, d, c).p;
            assert!((base - rows).abs() < 1e-12, "row swap ({a},{b},{c},{d})");
            assert!((base - cols).abs() < 1e-12, "column swap ({a},{b},{c},{d})");
        }
    }
}
