//! Multi-indices, graded-lexicographic degree layers and the monomial weights
//! `ω_α = ‖z^α‖ = sqrt(α_1!···α_d! / |α|!)` of the Drury–Arveson space.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Exponent tuple `α ∈ ℕ^d`. Serialized as a plain JSON array, e.g. `[2,1,0]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<u32>", into = "Vec<u32>")]
pub struct MultiIndex(Vec<u32>);

impl TryFrom<Vec<u32>> for MultiIndex {
    type Error = Error;

    fn try_from(v: Vec<u32>) -> Result<Self> {
        MultiIndex::new(v)
    }
}

impl From<MultiIndex> for Vec<u32> {
    fn from(m: MultiIndex) -> Self {
        m.0
    }
}

impl MultiIndex {
    pub fn new(exponents: Vec<u32>) -> Result<Self> {
        if exponents.is_empty() {
            return Err(Error::Dimension(0));
        }
        Ok(MultiIndex(exponents))
    }

    pub fn zeros(d: usize) -> Self {
        assert!(d >= 1, "dimension must be positive");
        MultiIndex(vec![0; d])
    }

    /// `n·e_i`.
    pub fn axis(d: usize, i: usize, n: u32) -> Self {
        let mut e = Self::zeros(d);
        e.0[i] = n;
        e
    }

    /// The diagonal index `(n, …, n)`.
    pub fn diagonal(d: usize, n: u32) -> Self {
        assert!(d >= 1, "dimension must be positive");
        MultiIndex(vec![n; d])
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    #[inline]
    pub fn degree(&self) -> usize {
        self.0.iter().map(|&a| a as usize).sum()
    }

    #[inline]
    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn plus(&self, other: &MultiIndex) -> MultiIndex {
        debug_assert_eq!(self.dim(), other.dim());
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// `self − other` if `other ≤ self` componentwise.
    pub fn checked_minus(&self, other: &MultiIndex) -> Option<MultiIndex> {
        debug_assert_eq!(self.dim(), other.dim());
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.checked_sub(*b))
            .collect::<Option<Vec<_>>>()
            .map(MultiIndex)
    }

    /// Number of nonzero entries.
    pub fn support_len(&self) -> usize {
        self.0.iter().filter(|&&a| a > 0).count()
    }

    pub fn omega(&self) -> f64 {
        omega(self)
    }

    pub fn log_omega(&self) -> f64 {
        log_omega(self)
    }

    /// Position of `self` inside its degree layer in graded-lex order.
    pub fn rank(&self) -> usize {
        rank_in_layer(&self.0)
    }
}

/// All multi-indices of one total degree, graded-lexicographic (first
/// exponent descending).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DegreeLayer {
    pub d: usize,
    pub n: usize,
    pub indices: Vec<MultiIndex>,
}

impl DegreeLayer {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

pub fn enumerate_degree(d: usize, n: usize) -> Result<DegreeLayer> {
    if d == 0 {
        return Err(Error::Dimension(0));
    }
    let mut indices = Vec::with_capacity(layer_size(d, n));
    visit_layer(d, n, |a| indices.push(MultiIndex(a.to_vec())));
    Ok(DegreeLayer { d, n, indices })
}

/// Calls `f` on every exponent tuple of degree `n` in graded-lex order
/// without allocating a `MultiIndex` per entry.
pub fn visit_layer(d: usize, n: usize, mut f: impl FnMut(&[u32])) {
    assert!(d >= 1, "dimension must be positive");
    let mut current = vec![0u32; d];
    visit_rec(&mut current, 0, n as u32, &mut f);
}

fn visit_rec(current: &mut [u32], pos: usize, remaining: u32, f: &mut impl FnMut(&[u32])) {
    if pos == current.len() - 1 {
        current[pos] = remaining;
        f(current);
        return;
    }
    for v in (0..=remaining).rev() {
        current[pos] = v;
        visit_rec(current, pos + 1, remaining - v, f);
    }
    current[pos] = 0;
}

/// `ω_α` for every index of one layer, in layer order.
pub fn omega_layer(d: usize, n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(layer_size(d, n));
    visit_layer(d, n, |a| out.push((-0.5 * ln_multinomial(a)).exp()));
    out
}

/// Graded-lex rank of a raw exponent slice inside its layer.
pub fn rank_in_layer(alpha: &[u32]) -> usize {
    let d = alpha.len();
    let mut remaining: usize = alpha.iter().map(|&a| a as usize).sum();
    let mut rank = 0usize;
    for (i, &a) in alpha.iter().enumerate().take(d - 1) {
        let a = a as usize;
        // Indices with a larger entry at position i come first; there are
        // C(k + remaining - a - 1, k) of them, k = d - i - 1 trailing slots.
        if remaining > a {
            let k = d - i - 1;
            rank += binomial(k + remaining - a - 1, k) as usize;
        }
        remaining -= a;
    }
    rank
}

/// Number of monomials of degree `n` in `d` variables.
pub fn layer_size(d: usize, n: usize) -> usize {
    assert!(d >= 1, "dimension must be positive");
    binomial(d - 1 + n, d - 1) as usize
}

/// Number of monomials of degree ≤ `n` in `d` variables.
pub fn basis_size(d: usize, n: usize) -> usize {
    binomial(d + n, d) as usize
}

/// Exact binomial coefficient; panics on `u128` overflow.
pub fn binomial(n: usize, k: usize) -> u128 {
    checked_binomial(n, k).expect("binomial overflow")
}

/// Exact binomial coefficient, `None` on `u128` overflow.
pub fn checked_binomial(n: usize, k: usize) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for j in 1..=k {
        // acc * (n - k + j) is divisible by j after the multiplication
        acc = acc.checked_mul((n - k + j) as u128)? / j as u128;
    }
    Some(acc)
}

/// `ln(n!) - ((n + 1/2) ln n - n + ln(2π)/2)`.
fn stirling_error(n: usize) -> f64 {
    debug_assert!(n >= 1);
    if n <= 15 {
        let mut fact = 1.0f64;
        for j in 2..=n {
            fact *= j as f64;
        }
        let nf = n as f64;
        return fact.ln() - ((nf + 0.5) * nf.ln() - nf + 0.5 * (2.0 * PI).ln());
    }
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;
    let nf = n as f64;
    let nn = nf * nf;
    (S0 - (S1 - (S2 - (S3 - S4 / nn) / nn) / nn) / nn) / nf
}

/// `ln C(n, k)` without cancellation between large log-factorials.
pub fn ln_binomial(n: usize, k: usize) -> f64 {
    assert!(k <= n, "ln_binomial: k > n");
    let k = k.min(n - k);
    if k == 0 {
        return 0.0;
    }
    if n <= 50 {
        return (binomial(n, k) as f64).ln();
    }
    let (nf, kf) = (n as f64, k as f64);
    let mf = nf - kf;
    let entropy = kf * (nf / kf).ln() + mf * (kf / mf).ln_1p();
    let corr = stirling_error(n) - stirling_error(k) - stirling_error(n - k);
    entropy + corr + 0.5 * (nf / (2.0 * PI * kf * mf)).ln()
}

/// `ln(|α|! / (α_1!···α_d!))` as a sum of log-binomials.
pub fn ln_multinomial(alpha: &[u32]) -> f64 {
    let mut partial = 0usize;
    let mut acc = 0.0;
    for &a in alpha {
        partial += a as usize;
        acc += ln_binomial(partial, a as usize);
    }
    acc
}

pub fn log_omega(alpha: &MultiIndex) -> f64 {
    -0.5 * ln_multinomial(&alpha.0)
}

pub fn omega(alpha: &MultiIndex) -> f64 {
    log_omega(alpha).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_force(d: usize, n: usize) -> Vec<Vec<u32>> {
        // every tuple in [0, n]^d with the right sum
        let mut out = Vec::new();
        let total = (n + 1).pow(d as u32);
        for code in 0..total {
            let mut c = code;
            let mut t = Vec::with_capacity(d);
            for _ in 0..d {
                t.push((c % (n + 1)) as u32);
                c /= n + 1;
            }
            if t.iter().map(|&a| a as usize).sum::<usize>() == n {
                out.push(t);
            }
        }
        out
    }

    #[test]
    fn layer_examples() {
        let l = enumerate_degree(1, 5).unwrap();
        assert_eq!(l.indices, vec![MultiIndex(vec![5])]);
        let l = enumerate_degree(2, 2).unwrap();
        let got: Vec<Vec<u32>> = l.indices.iter().map(|m| m.0.clone()).collect();
        assert_eq!(got, vec![vec![2, 0], vec![1, 1], vec![0, 2]]);
        assert_eq!(enumerate_degree(3, 4).unwrap().len(), brute_force(3, 4).len());
        assert_eq!(brute_force(3, 4).len(), 15);
        assert!(matches!(enumerate_degree(0, 3), Err(Error::Dimension(0))));
    }

    #[test]
    fn layer_counts_match_brute_force() {
        for d in 1..=4 {
            for n in 0..=12 {
                let layer = enumerate_degree(d, n).unwrap();
                let mut brute = brute_force(d, n);
                assert_eq!(layer.len(), brute.len());
                assert_eq!(layer.len(), layer_size(d, n));
                let mut got: Vec<Vec<u32>> = layer.indices.iter().map(|m| m.0.clone()).collect();
                // graded-lex: strictly descending as tuples
                assert!(got.windows(2).all(|w| w[0] > w[1]));
                got.sort();
                brute.sort();
                assert_eq!(got, brute);
            }
        }
    }

    #[test]
    fn rank_matches_position() {
        for d in 1..=4 {
            for n in 0..=9 {
                let layer = enumerate_degree(d, n).unwrap();
                for (i, a) in layer.indices.iter().enumerate() {
                    assert_eq!(a.rank(), i, "{a:?}");
                }
            }
        }
    }

    #[test]
    fn omega_examples() {
        for n in [0u32, 1, 7, 300, 10_000] {
            assert_eq!(omega(&MultiIndex(vec![n])), 1.0);
        }
        assert!((omega(&MultiIndex(vec![1, 1])) - 0.5f64.sqrt()).abs() < 1e-15);
        // 2!·1!/3! = 1/3
        assert!((omega(&MultiIndex(vec![2, 1])) - (1.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(log_omega(&MultiIndex::zeros(4)), 0.0);
    }

    #[test]
    fn ln_binomial_against_exact_values() {
        // exact integers up to n = 120 via u128
        for n in 0..=120usize {
            for k in 0..=n {
                let exact = (binomial(n, k) as f64).ln();
                let got = ln_binomial(n, k);
                assert!((got - exact).abs() <= 1e-15 * exact.max(1.0), "C({n},{k}): {got} vs {exact}");
            }
        }
    }

    #[test]
    fn ln_binomial_large_symmetric_sum() {
        // Σ_k C(n,k) = 2^n, summed in scaled form
        let n = 4000usize;
        let shift = ln_binomial(n, n / 2);
        let s: f64 = (0..=n).map(|k| (ln_binomial(n, k) - shift).exp()).sum();
        let lhs = shift + s.ln();
        let rhs = n as f64 * 2f64.ln();
        assert!((lhs - rhs).abs() < 1e-11 * rhs, "{lhs} vs {rhs}");
    }

    /// ln C(n, k) as a compensated sum of ln((n − k + j)/j).
    fn ln_binomial_product(n: usize, k: usize) -> f64 {
        let (mut sum, mut comp) = (0.0f64, 0.0f64);
        for j in 1..=k {
            let y = ((n - k + j) as f64 / j as f64).ln() - comp;
            let t = sum + y;
            comp = (t - sum) - y;
            sum = t;
        }
        sum
    }

    #[test]
    fn omega_large_degree_against_product_oracle() {
        let cases: [&[u32]; 5] = [&[9999, 1], &[9990, 10], &[9800, 150, 50], &[2500, 2500, 2500, 2500], &[7000, 3000]];
        for alpha in cases {
            let mut partial = 0usize;
            let mut ln_mult = 0.0;
            for &a in alpha {
                partial += a as usize;
                ln_mult += ln_binomial_product(partial, a as usize);
            }
            let want_log = -0.5 * ln_mult;
            let a = MultiIndex::new(alpha.to_vec()).unwrap();
            let got_log = a.log_omega();
            assert!((got_log - want_log).abs() <= 2e-15 * want_log.abs().max(1.0), "{alpha:?}");
            if want_log > -700.0 {
                let rel = (a.omega() - want_log.exp()).abs() / want_log.exp();
                assert!(rel < 1e-12, "{alpha:?}: {rel}");
            }
        }
        assert!((MultiIndex::new(vec![9999, 1]).unwrap().omega() - 0.01).abs() < 1e-16);
    }

    #[test]
    fn log_omega_matches_log_gamma_identity() {
        use statrs::function::gamma::ln_gamma;
        let want = 0.5 * (2.0 * ln_gamma(51.0) - ln_gamma(101.0));
        let got = MultiIndex::new(vec![50, 50]).unwrap().log_omega();
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        assert_eq!(MultiIndex::new(vec![123]).unwrap().log_omega(), 0.0);
    }

    #[test]
    fn multinomial_identity_on_random_directions() {
        use crate::sphere::random_directions;
        // Σ_{|α|=n} (n!/α!) |ζ^α|² = |ζ|^{2n} = 1
        for d in 1..=4 {
            for zeta in random_directions(d, 20, 11 + d as u64) {
                for n in 0..=30 {
                    let mut total = 0.0;
                    visit_layer(d, n, |a| {
                        let mut log_term = ln_multinomial(a);
                        for (k, &e) in a.iter().enumerate() {
                            if e > 0 {
                                log_term += 2.0 * e as f64 * zeta[k].norm().ln();
                            }
                        }
                        total += log_term.exp();
                    });
                    assert!((total - 1.0).abs() < 1e-10, "d={d} n={n}: {total}");
                }
            }
        }
    }

    #[test]
    fn omega_bounds() {
        for d in 1..=4 {
            for n in 0..=10 {
                for a in enumerate_degree(d, n).unwrap().indices {
                    let w = a.omega();
                    assert!(w > 0.0 && w <= 1.0 + 1e-15);
                    if a.support_len() <= 1 {
                        assert_eq!(w, 1.0);
                    } else {
                        assert!(w < 1.0);
                    }
                }
            }
        }
    }

    #[test]
    fn serde_roundtrip_and_validation() {
        let a: MultiIndex = serde_json::from_str("[2,1,0]").unwrap();
        assert_eq!(a.exponents(), &[2, 1, 0]);
        assert_eq!(serde_json::to_string(&a).unwrap(), "[2,1,0]");
        assert!(serde_json::from_str::<MultiIndex>("[]").is_err());
    }
}
