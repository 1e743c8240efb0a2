//! Row kernels shared by the graph primitives and the value-only objectives.

/// `log Σ exp(row)` with max subtraction.
pub fn log_sum_exp(row: &[f64]) -> f64 {
    let m = row.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    if m == f64::NEG_INFINITY {
        return m;
    }
    let s: f64 = row.iter().map(|&v| libm::exp(v - m)).sum();
    m + libm::log(s)
}

/// Writes `log softmax(row / temperature)` into `out`.
pub fn log_softmax_into(row: &[f64], temperature: f64, out: &mut [f64]) {
    debug_assert_eq!(row.len(), out.len());
    for (o, &v) in out.iter_mut().zip(row) {
        *o = v / temperature;
    }
    let lse = log_sum_exp(out);
    for o in out.iter_mut() {
        *o -= lse;
    }
}

/// Writes `softmax(row)` into `out`.
pub fn softmax_into(row: &[f64], out: &mut [f64]) {
    log_softmax_into(row, 1.0, out);
    for o in out.iter_mut() {
        *o = libm::exp(*o);
    }
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// `-log softmax(row)[label]`.
pub fn cross_entropy_row(row: &[f64], label: usize) -> f64 {
    log_sum_exp(row) - row[label]
}

/// Element sign with `sgn(0) = 0`.
pub fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}
