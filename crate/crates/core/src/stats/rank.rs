use crate::scalar::Scalar;

/// 1-based average ranks; tied values share the mean of their positions.
pub fn average_ranks<S: Scalar>(xs: &[S]) -> Vec<S> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| {
        xs[a]
            .partial_cmp(&xs[b])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut ranks = vec![S::zero(); xs.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && xs[order[end]] == xs[order[start]] {
            end += 1;
        }
        let avg = S::from_usize_lossy(start + 1 + end) / S::lit(2.0);
        for &k in &order[start..end] {
            ranks[k] = avg;
        }
        start = end;
    }
    ranks
}

/// Pearson correlation; `None` if either input is constant.
pub fn pearson<S: Scalar>(x: &[S], y: &[S]) -> Option<S> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let n = S::from_usize_lossy(x.len());
    let mx = x.iter().copied().sum::<S>() / n;
    let my = y.iter().copied().sum::<S>() / n;
    let (mut sxy, mut sxx, mut syy) = (S::zero(), S::zero(), S::zero());
    for (&a, &b) in x.iter().zip(y) {
        sxy = sxy + (a - mx) * (b - my);
        sxx = sxx + (a - mx) * (a - mx);
        syy = syy + (b - my) * (b - my);
    }
    if sxx == S::zero() || syy == S::zero() {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

/// Spearman rank correlation (Pearson on average ranks).
pub fn spearman<S: Scalar>(x: &[S], y: &[S]) -> Option<S> {
    pearson(&average_ranks(x), &average_ranks(y))
}
