//! Elementary draws shared by the generator and the sampler.

use rand::Rng;
use rand_distr::{Beta, Binomial, Distribution};

use crate::model::BetaParams;

/// Draws the probability of outcome 1 from `Beta(a1, a0)`.
pub(crate) fn beta<R: Rng + ?Sized>(b: BetaParams, rng: &mut R) -> f64 {
    Beta::new(b.a1, b.a0)
        .expect("BetaParams are validated positive")
        .sample(rng)
}

pub(crate) fn binomial<R: Rng + ?Sized>(n: u64, p: f64, rng: &mut R) -> u64 {
    if n == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    Binomial::new(n, p).expect("p in (0, 1)").sample(rng)
}

/// Multinomial draw by sequential conditional binomials. `weights` need not
/// be normalised; `out` receives the counts. Returns `false` when all
/// weights are zero and `n > 0`.
pub(crate) fn multinomial<R: Rng + ?Sized>(
    n: u64,
    weights: &[f64],
    out: &mut [u64],
    rng: &mut R,
) -> bool {
    debug_assert_eq!(weights.len(), out.len());
    let mut remaining_mass: f64 = weights.iter().sum();
    if n > 0 && (remaining_mass.is_nan() || remaining_mass <= 0.0) {
        return false;
    }
    let mut remaining = n;
    let last = weights.len() - 1;
    for (k, (&w, slot)) in weights.iter().zip(out.iter_mut()).enumerate() {
        if remaining == 0 {
            *slot = 0;
            continue;
        }
        if k == last {
            *slot = remaining;
            remaining = 0;
            continue;
        }
        let p = if remaining_mass > 0.0 {
            (w / remaining_mass).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let x = binomial(remaining, p, rng);
        *slot = x;
        remaining -= x;
        remaining_mass -= w;
    }
    // trailing zero-weight cells must not absorb the remainder
    if weights[last] == 0.0 && out[last] > 0 {
        let moved = out[last];
        out[last] = 0;
        let k = weights
            .iter()
            .rposition(|w| *w > 0.0)
            .expect("some weight is positive");
        out[k] += moved;
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngState;

    #[test]
    fn multinomial_conserves_total() {
        let mut rng = RngState::new(1);
        let mut out = [0u64; 4];
        for _ in 0..200 {
            assert!(multinomial(1000, &[0.1, 0.0, 0.5, 0.4], &mut out, &mut rng));
            assert_eq!(out.iter().sum::<u64>(), 1000);
            assert_eq!(out[1], 0);
        }
    }

    #[test]
    fn multinomial_zero_tail_weight() {
        let mut rng = RngState::new(2);
        let mut out = [0u64; 3];
        assert!(multinomial(50, &[1.0, 1.0, 0.0], &mut out, &mut rng));
        assert_eq!(out[2], 0);
        assert_eq!(out[0] + out[1], 50);
    }

    #[test]
    fn multinomial_all_zero() {
        let mut rng = RngState::new(3);
        let mut out = [0u64; 2];
        assert!(!multinomial(5, &[0.0, 0.0], &mut out, &mut rng));
        assert!(multinomial(0, &[0.0, 0.0], &mut out, &mut rng));
    }

    #[test]
    fn binomial_edges() {
        let mut rng = RngState::new(4);
        assert_eq!(binomial(10, 0.0, &mut rng), 0);
        assert_eq!(binomial(10, 1.0, &mut rng), 10);
        assert_eq!(binomial(0, 0.5, &mut rng), 0);
    }
}
