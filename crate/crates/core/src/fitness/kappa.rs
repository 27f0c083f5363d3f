use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KappaError {
    #[error("confusion matrix must be square with at least 2 classes")]
    BadShape,
    #[error("confusion matrix is empty (total count 0)")]
    Empty,
    #[error("DEGENERATE: chance agreement is 1")]
    Degenerate,
}

/// Cohen's kappa of a `C x C` confusion matrix (rows: truth, columns:
/// prediction).
///
/// Evaluated as `(trace*total - sum_c row_c*col_c) / (total^2 - sum_c
/// row_c*col_c)` in exact integer arithmetic, which equals
/// `(p_o - p_e) / (1 - p_e)`; only the final division rounds, so scaling the
/// matrix by an integer leaves the result bit-identical.
pub fn cohen_kappa(confusion: &[Vec<u64>]) -> Result<f64, KappaError> {
    let c = confusion.len();
    if c < 2 || confusion.iter().any(|row| row.len() != c) {
        return Err(KappaError::BadShape);
    }
    let mut total: u128 = 0;
    let mut trace: u128 = 0;
    let mut rows = vec![0u128; c];
    let mut cols = vec![0u128; c];
    for (i, row) in confusion.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            let v = v as u128;
            total += v;
            rows[i] += v;
            cols[j] += v;
            if i == j {
                trace += v;
            }
        }
    }
    if total == 0 {
        return Err(KappaError::Empty);
    }
    let chance: u128 = rows.iter().zip(&cols).map(|(r, k)| r * k).sum();
    let denom = total * total - chance;
    if denom == 0 {
        return Err(KappaError::Degenerate);
    }
    let numer = (trace * total) as i128 - chance as i128;
    Ok(ratio(numer, denom))
}

// Reduce by the gcd first so large-but-proportional matrices divide the
// same pair of integers.
fn ratio(numer: i128, denom: u128) -> f64 {
    let g = gcd(numer.unsigned_abs(), denom);
    let (n, d) = (numer / g as i128, denom / g);
    n as f64 / d as f64
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.max(1)
}
