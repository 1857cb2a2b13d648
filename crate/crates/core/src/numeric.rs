//! Small numeric helpers shared across modules.

/// Neumaier-compensated sum.
pub(crate) fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

pub(crate) fn mean(x: &[f64]) -> f64 {
    compensated_sum(x.iter().copied()) / x.len() as f64
}

/// Sample standard deviation with divisor `n - 1`.
///
/// Deviations are taken relative to the first element before centring so a
/// constant input yields exactly zero.
pub(crate) fn sample_sd(x: &[f64]) -> f64 {
    let n = x.len();
    if n < 2 {
        return 0.0;
    }
    let shift = x[0];
    let m = compensated_sum(x.iter().map(|v| v - shift)) / n as f64;
    let ss = compensated_sum(x.iter().map(|v| {
        let d = v - shift - m;
        d * d
    }));
    (ss / (n - 1) as f64).sqrt()
}

/// Median of a non-empty slice (average of the two central values for even length).
pub(crate) fn median(x: &[f64]) -> f64 {
    let mut v = x.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
