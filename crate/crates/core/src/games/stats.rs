//! Closed-form oracles and estimators used by the games.

/// 95% Wilson score interval for `successes / trials`.
pub fn wilson(successes: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959_963_984_540_054f64;
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

fn log_sum_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// `ln Σ_{i ≤ r} C(n, i)`.
pub fn ln_ball_size(n: usize, r: usize) -> f64 {
    let mut term = 0.0f64; // ln C(n, 0)
    let mut total = 0.0f64;
    for i in 1..=r.min(n) {
        term += ((n - i + 1) as f64).ln() - (i as f64).ln();
        total = log_sum_exp(total, term);
    }
    total
}

/// Fraction of `{0,1}^n` inside a Hamming ball of radius `r`.
pub fn ball_fraction(n: usize, r: usize) -> f64 {
    (ln_ball_size(n, r) - n as f64 * std::f64::consts::LN_2).exp()
}

/// `Pr[Σ Z_i ≥ t]` for independent `Z_i ~ Ber(p_i)`, by dynamic programming.
pub fn poisson_binomial_tail(ps: &[f64], t: usize) -> f64 {
    let mut dist = vec![0.0f64; ps.len() + 1];
    dist[0] = 1.0;
    for (i, &p) in ps.iter().enumerate() {
        for c in (0..=i + 1).rev() {
            let stay = dist[c] * (1.0 - p);
            let come = if c > 0 { dist[c - 1] * p } else { 0.0 };
            dist[c] = stay + come;
        }
    }
    dist.iter().skip(t).sum()
}

/// `Pr[Bin(n, p) ≥ t]`.
pub fn binomial_tail(n: usize, p: f64, t: usize) -> f64 {
    poisson_binomial_tail(&vec![p; n], t)
}

/// Chernoff bound `exp(−n · KL(γ ‖ β))` on `Pr[Bin(n, β) ≥ γn]` for `β < γ`.
pub fn chernoff_bound(n: usize, beta: f64, gamma: f64) -> f64 {
    let kl = |a: f64, b: f64| {
        let t = |x: f64, y: f64| if x == 0.0 { 0.0 } else { x * (x / y).ln() };
        t(a, b) + t(1.0 - a, 1.0 - b)
    };
    (-(n as f64) * kl(gamma, beta)).exp()
}

/// Total-variation distance between two histograms over the same cells.
pub fn total_variation(a: &[u64], b: &[u64]) -> f64 {
    assert_eq!(a.len(), b.len(), "histograms over different supports");
    let na: u64 = a.iter().sum();
    let nb: u64 = b.iter().sum();
    if na == 0 || nb == 0 {
        return if na == nb { 0.0 } else { 1.0 };
    }
    0.5 * a
        .iter()
        .zip(b)
        .map(|(&x, &y)| (x as f64 / na as f64 - y as f64 / nb as f64).abs())
        .sum::<f64>()
}
