//! Small numeric and scheduling helpers.

/// Neumaier compensated sum.
pub fn ksum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for x in values {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// `t log t - t + 1`, which is nonnegative, accurate near `t = 1`.
/// `Ent_p(f) = sum_i p_i m h(f_i/m)` with `m = E_p[f]` has no cancellation between terms.
pub fn entropy_term(t: f64) -> f64 {
    if t <= 0.0 {
        return 1.0;
    }
    let u = t - 1.0;
    if u.abs() < 0.1 {
        // sum_{k >= 2} (-1)^k u^k / (k (k - 1))
        let mut acc = 0.0;
        let mut pow = u * u;
        for k in 2..=20 {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            acc += sign * pow / (k * (k - 1)) as f64;
            pow *= u;
        }
        acc
    } else {
        (t * t.ln() - u).max(0.0)
    }
}

/// Maps `f` over `items`, in parallel when the `parallel` feature is on.
/// Output order always matches input order.
#[cfg(feature = "parallel")]
pub fn par_map<I, T, F>(items: Vec<I>, f: F) -> Vec<T>
where
    I: Send,
    T: Send,
    F: Fn(I) -> T + Sync + Send,
{
    use rayon::prelude::*;
    items.into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn par_map<I, T, F>(items: Vec<I>, f: F) -> Vec<T>
where
    F: Fn(I) -> T,
{
    items.into_iter().map(f).collect()
}
