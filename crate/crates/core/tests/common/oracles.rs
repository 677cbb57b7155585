//! Brute-force reference implementations used to check the library.

/// Mean over positives of precision at that positive's rank, ranks taken
/// from a stable descending sort written out by counting.
pub fn ap_oracle(scores: &[f64], labels: &[bool]) -> Option<f64> {
    let n = scores.len();
    let rank = |i: usize| {
        1 + (0..n)
            .filter(|&j| scores[j] > scores[i] || (scores[j] == scores[i] && j < i))
            .count()
    };
    let ranks: Vec<usize> = (0..n).map(rank).collect();
    let positives: Vec<usize> = (0..n).filter(|&i| labels[i]).collect();
    if positives.is_empty() {
        return None;
    }
    let total: f64 = positives
        .iter()
        .map(|&i| {
            let hits = positives.iter().filter(|&&j| ranks[j] <= ranks[i]).count();
            hits as f64 / ranks[i] as f64
        })
        .sum();
    Some(total / positives.len() as f64)
}

/// Smallest Euclidean distance from `p` to any of `gts`.
pub fn nearest(p: (f64, f64), gts: &[(f64, f64)]) -> f64 {
    gts.iter()
        .map(|g| ((p.0 - g.0).powi(2) + (p.1 - g.1).powi(2)).sqrt())
        .fold(f64::INFINITY, f64::min)
}
