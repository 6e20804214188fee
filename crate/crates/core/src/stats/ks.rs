use std::cmp::Ordering;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Survival function of the Kolmogorov distribution, `P(K > x)`.
pub fn kolmogorov_sf(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < 0.2 {
        // the alternating series converges too slowly here; P(K > 0.2) = 1 - 3e-27
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * x * x).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-18 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// One-sample test against a continuous CDF. The p-value uses the
/// Kolmogorov limit with Stephens' finite-sample correction.
pub fn ks_one_sample(xs: &[f64], cdf: impl Fn(f64) -> f64) -> KsResult {
    assert!(!xs.is_empty(), "empty sample");
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in v.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    let sn = n.sqrt();
    KsResult { statistic: d, p_value: kolmogorov_sf((sn + 0.12 + 0.11 / sn) * d) }
}

/// Largest product `n * m` for which the exact lattice-path p-value is used.
const EXACT_LIMIT: u64 = 150_000_000;

/// Two-sample test. The statistic is exact (ties handled by evaluating both
/// empirical CDFs after each distinct value); the p-value counts lattice
/// paths exactly for `n * m` up to 1.5e8 and falls back to the Kolmogorov
/// limit beyond.
pub fn ks_two_sample(xs: &[f64], ys: &[f64]) -> KsResult {
    assert!(!xs.is_empty() && !ys.is_empty(), "empty sample");
    let mut a = xs.to_vec();
    let mut b = ys.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n, m) = (a.len() as u64, b.len() as u64);
    // D * n * m as an integer: max |i m - j n| over jumps of the two ECDFs
    let (mut i, mut j) = (0usize, 0usize);
    let mut dmax: u64 = 0;
    while i < a.len() || j < b.len() {
        let x = match (a.get(i), b.get(j)) {
            (Some(&x), Some(&y)) => match x.total_cmp(&y) {
                Ordering::Greater => y,
                _ => x,
            },
            (Some(&x), None) => x,
            (None, Some(&y)) => y,
            (None, None) => unreachable!(),
        };
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        let diff = (i as i64 * m as i64 - j as i64 * n as i64).unsigned_abs();
        dmax = dmax.max(diff);
    }
    let statistic = dmax as f64 / (n * m) as f64;
    let p_value = if n * m <= EXACT_LIMIT {
        two_sample_exact_sf(n as usize, m as usize, dmax)
    } else {
        let en = (n * m) as f64 / (n + m) as f64;
        let s = en.sqrt();
        kolmogorov_sf((s + 0.12 + 0.11 / s) * statistic)
    };
    KsResult { statistic, p_value }
}

/// `P(max |i m - j n| >= d)` over uniformly random monotone lattice paths
/// from `(0, 0)` to `(n, m)`, i.e. the exact null tail of `D_{n,m} >= d/(nm)`
/// for continuous data.
pub fn two_sample_exact_sf(n: usize, m: usize, d: u64) -> f64 {
    if d == 0 {
        return 1.0;
    }
    let inside = |i: usize, j: usize| ((i as i64 * m as i64 - j as i64 * n as i64).unsigned_abs()) < d;
    // row[j] = probability the path passes through (i, j) while staying inside
    let total = (n + m) as f64;
    let mut row = vec![0.0f64; m + 1];
    row[0] = 1.0;
    for j in 1..=m {
        // from (0, j-1) the path steps in j with probability (m-j+1)/(n+m-j+1)
        let step = (m - j + 1) as f64 / (total - (j - 1) as f64);
        row[j] = if inside(0, j) { row[j - 1] * step } else { 0.0 };
    }
    for i in 1..=n {
        let mut prev_left = 0.0;
        for j in 0..=m {
            let down = {
                // from (i-1, j): step in i with probability (n-i+1)/(n+m-(i-1)-j)
                let rem = total - (i - 1) as f64 - j as f64;
                if rem > 0.0 {
                    row[j] * (n - i + 1) as f64 / rem
                } else {
                    0.0
                }
            };
            let left = if j > 0 {
                let rem = total - i as f64 - (j - 1) as f64;
                prev_left * (m - j + 1) as f64 / rem
            } else {
                0.0
            };
            let v = if inside(i, j) { down + left } else { 0.0 };
            row[j] = v;
            prev_left = v;
        }
    }
    (1.0 - row[m]).clamp(0.0, 1.0)
}
