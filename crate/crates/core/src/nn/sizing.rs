//! Architecture sizing by parameter counting.

use num_bigint::BigUint;

use crate::error::{Error, Result};

/// `C(n, k)` for an arbitrarily large `n` and machine-sized `k`.
pub fn binomial(n: &BigUint, k: u64) -> BigUint {
    let kb = BigUint::from(k);
    if &kb > n {
        return BigUint::from(0u32);
    }
    let mut acc = BigUint::from(1u32);
    // acc = C(n-k+i, i) after step i; exact at every step
    for i in 1..=k {
        acc = acc * (n - &kb + BigUint::from(i)) / BigUint::from(i);
    }
    acc
}

/// Generic number of d-th powers of linear forms needed for a degree-`d`
/// form in `n` variables: `⌈C(d+n−1, d) / n⌉`.
pub fn ah_count(d: u64, n: u64) -> Result<u64> {
    if d < 1 || n < 1 {
        return Err(Error::arg("ah_count needs d >= 1 and n >= 1"));
    }
    let c = binomial(&BigUint::from(d + n - 1), d);
    let n_big = BigUint::from(n);
    let q = (&c + &n_big - BigUint::from(1u32)) / n_big;
    u64::try_from(q).map_err(|_| Error::arg(format!("ah_count({d}, {n}) overflows u64")))
}

/// `p · C(M−1+e, e) ≥ C(n−1+de, de)`: can `p` nodes, each a degree-`e`
/// function from an `M`-parameter space raised to the `d`-th power, reach a
/// degree-`de` form in `n` variables?
pub fn deep_width_ok(p: u64, m: u64, e: u64, d: u64, n: u64) -> bool {
    if p == 0 || m == 0 || e == 0 || d == 0 || n == 0 {
        return false;
    }
    let lhs = BigUint::from(p) * binomial(&BigUint::from(m - 1 + e), e);
    lhs >= binomial(&BigUint::from(n - 1 + d * e), d * e)
}

/// The inequality iterated over three layers of widths `p₁, p₂, p₃` with
/// activation degrees `d₁, d₂, d₃` (layer 3 is nearest the input):
/// `p₁·C(p₂·C(p₃·C(n−1+d₃, d₃)−1+d₂, d₂)−1+d₁, d₁) ≥ C(n−1+d₁d₂d₃, d₁d₂d₃)`.
pub fn deep_width_ok3(p1: u64, p2: u64, p3: u64, d1: u64, d2: u64, d3: u64, n: u64) -> bool {
    if [p1, p2, p3, d1, d2, d3, n].contains(&0) {
        return false;
    }
    let one = BigUint::from(1u32);
    let inner = BigUint::from(p3) * binomial(&BigUint::from(n - 1 + d3), d3);
    let mid = BigUint::from(p2) * binomial(&(inner - &one + BigUint::from(d2)), d2);
    let lhs = BigUint::from(p1) * binomial(&(mid - &one + BigUint::from(d1)), d1);
    let deg = d1 * d2 * d3;
    lhs >= binomial(&BigUint::from(n - 1 + deg), deg)
}
