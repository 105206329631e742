//! Arithmetic mod p and word-sized p-adic integers.
//!
//! This covers the scalar layer underneath the coefficient algebras: residue
//! arithmetic, Teichmuller lifts computed by iterating `x -> x^p`, and
//! binomial coefficients of p-adic integers. The binomial comes in two
//! routes: the product formula `c(c-1)...(c-n+1)/n!` with explicit
//! valuation cancellation, and a digit (Lucas) route that only needs
//! `c mod p^(log_p n + 1)`. The two agree wherever both are defined; the
//! digit route is what the series layer uses for wide windows, since
//! `v_p(n!)` precision overflows a machine word long before `n` does.

use crate::error::{Error, Result};

/// Checks that `p` is an odd prime small enough for word arithmetic.
pub fn check_odd_prime(p: u64) -> Result<()> {
    if p < 3 || p % 2 == 0 {
        return Err(Error::MalformedInput(format!("p = {p} must be an odd prime")));
    }
    let mut d = 3;
    while d * d <= p {
        if p % d == 0 {
            return Err(Error::MalformedInput(format!("p = {p} is not prime")));
        }
        d += 2;
    }
    if p > 255 {
        return Err(Error::Unsupported(format!("p = {p} too large")));
    }
    Ok(())
}

pub fn add_mod(a: u64, b: u64, m: u64) -> u64 {
    (a + b) % m
}

pub fn sub_mod(a: u64, b: u64, m: u64) -> u64 {
    (a + m - b % m) % m
}

pub fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Inverse mod a prime p.
pub fn inv_mod_p(a: u64, p: u64) -> u64 {
    debug_assert!(a % p != 0);
    pow_mod(a, p - 2, p)
}

/// Inverse of a unit mod p^k (p odd prime), by Hensel lifting the mod-p inverse.
pub fn inv_mod_pk(a: u64, p: u64, k: u32) -> u64 {
    let m = p.pow(k);
    debug_assert!(a % p != 0);
    let mut x = inv_mod_p(a % p, p);
    // x -> x(2 - ax) doubles the precision each step
    let mut prec = 1;
    while prec < k {
        let two_minus = sub_mod(2 % m, mul_mod(a % m, x, m), m);
        x = mul_mod(x, two_minus, m);
        prec *= 2;
    }
    x
}

/// Smallest primitive root mod p. Fixed once per prime; the delta generator
/// of the torsion part of the cyclotomic Galois group corresponds to it.
pub fn primitive_root(p: u64) -> u64 {
    let phi = p - 1;
    let mut factors = Vec::new();
    let mut n = phi;
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            factors.push(d);
            while n % d == 0 {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        factors.push(n);
    }
    'outer: for g in 2..p {
        for &q in &factors {
            if pow_mod(g, phi / q, p) == 1 {
                continue 'outer;
            }
        }
        return g;
    }
    unreachable!("every prime has a primitive root")
}

/// v_p(n!) by Legendre's formula.
pub fn valuation_of_factorial(n: u64, p: u64) -> u32 {
    let mut v = 0u64;
    let mut q = p;
    while q <= n {
        v += n / q;
        match q.checked_mul(p) {
            Some(next) => q = next,
            None => break,
        }
    }
    v as u32
}

/// v_p of a nonzero word integer.
pub fn valuation(mut n: u64, p: u64) -> u32 {
    debug_assert!(n != 0);
    let mut v = 0;
    while n % p == 0 {
        n /= p;
        v += 1;
    }
    v
}

/// Largest k with p^k representable; callers cap requested precisions here.
pub fn max_word_precision(p: u64) -> u32 {
    let mut k = 0u32;
    let mut acc: u64 = 1;
    while let Some(next) = acc.checked_mul(p) {
        acc = next;
        k += 1;
        if k > 63 {
            break;
        }
    }
    k - 1
}

/// Teichmuller lift of a nonzero residue, as an integer mod p^k.
///
/// Computed by iterating `x -> x^p` until stable. The result is the unique
/// (p-1)-st root of unity congruent to `a` mod p.
pub fn teichmuller(a: u64, p: u64, k: u32) -> Result<u64> {
    if a % p == 0 {
        return Err(Error::ZeroInput);
    }
    if k == 0 || k > max_word_precision(p) {
        return Err(Error::PrecisionOverflow { k });
    }
    let m = p.pow(k);
    let mut x = a % m;
    loop {
        let next = pow_mod(x, p, m);
        if next == x {
            return Ok(x);
        }
        x = next;
    }
}

/// Base-p digits of an integer mod p^k, least significant first (k digits).
pub fn digits(mut c: u64, p: u64, k: u32) -> Vec<u64> {
    let mut out = Vec::with_capacity(k as usize);
    for _ in 0..k {
        out.push(c % p);
        c /= p;
    }
    out
}

/// binom(c, n) mod p via digits of c (Lucas). `c_digits` must cover at least
/// the base-p digits of n; missing high digits are taken to be 0.
pub fn binomial_mod_p_digits(c_digits: &[u64], mut n: u64, p: u64) -> u64 {
    let mut acc = 1u64;
    let mut idx = 0usize;
    while n > 0 {
        let ni = n % p;
        let ci = c_digits.get(idx).copied().unwrap_or(0);
        if ci < ni {
            return 0;
        }
        // binom(ci, ni) mod p with ci, ni < p
        let mut b = 1u64;
        for t in 0..ni {
            b = mul_mod(b, ci - t, p);
            b = mul_mod(b, inv_mod_p(t + 1, p), p);
        }
        acc = mul_mod(acc, b, p);
        n /= p;
        idx += 1;
    }
    acc
}

/// binom(c, n) mod p by the product formula `c(c-1)...(c-n+1) / n!`,
/// cancelling the p-adic valuations exactly.
///
/// `c` is an integer mod p^k; the result is determined provided
/// `k > v_p(n!)`.
pub fn padic_binomial(c: u64, p: u64, k: u32, n: u64) -> Result<u64> {
    if n == 0 {
        return Ok(1);
    }
    if k == 0 || k > max_word_precision(p) {
        return Err(Error::PrecisionOverflow { k });
    }
    let w = valuation_of_factorial(n, p);
    if k <= w {
        return Err(Error::InsufficientPadicPrecision { have: k, need: w });
    }
    let m = p.pow(k);
    let c = c % m;
    // numerator = p^num_val * num_unit, accumulated factor by factor
    let mut num_val: u64 = 0;
    let mut num_unit: u64 = 1;
    for i in 0..n {
        let f = sub_mod(c, i % m, m);
        if f == 0 {
            // valuation >= k > v_p(n!), so the quotient is divisible by p
            return Ok(0);
        }
        let v = valuation(f, p);
        num_val += v as u64;
        if num_val >= k as u64 {
            return Ok(0);
        }
        num_unit = mul_mod(num_unit, f / p.pow(v), m);
    }
    // denominator n! = p^w * den_unit
    let mut den_unit: u64 = 1;
    for i in 1..=n {
        let mut f = i;
        while f % p == 0 {
            f /= p;
        }
        den_unit = mul_mod(den_unit, f % m, m);
    }
    debug_assert!(num_val >= w as u64, "binomial of a p-adic integer is integral");
    if num_val > w as u64 {
        return Ok(0);
    }
    Ok(mul_mod(num_unit, inv_mod_pk(den_unit, p, k), m) % p)
}
