//! Exact arithmetic in the cyclotomic field `k = Q[v]/(1 + v + ... + v^{p-1})`.
//!
//! Values are stored on the basis `v^0 .. v^{p-2}` with a common positive
//! denominator. Small values live in machine words and are promoted to
//! arbitrary-precision integers whenever an intermediate result would
//! overflow, so arithmetic is always exact.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, MulAssign, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use smallvec::SmallVec;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CycloError {
    #[error("{0} is not an odd prime")]
    NotOddPrime(u32),
    #[error("zero has no inverse")]
    ZeroInverse,
    #[error("exponent denominator {0} is not supported (only 1 and 2)")]
    BadExponentDenominator(i64),
    #[error("cannot parse cyclotomic number: {0}")]
    Parse(String),
}

pub fn is_prime(n: u32) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

pub fn check_odd_prime(p: u32) -> Result<(), CycloError> {
    if p % 2 == 1 && is_prime(p) {
        Ok(())
    } else {
        Err(CycloError::NotOddPrime(p))
    }
}

/// Exponent `n/2` as an ordinary exponent mod `p`.
pub fn half_exponent(p: u32, n: i64) -> u32 {
    let p = p as i64;
    (n.rem_euclid(p) * ((p + 1) / 2)).rem_euclid(p) as u32
}

type Small = SmallVec<[i64; 12]>;

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
enum Repr {
    Small { num: Small, den: i64 },
    Big { num: Vec<BigInt>, den: BigInt },
}

/// An element of `k`. Equal values have identical representations.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct CycNum {
    p: u32,
    repr: Repr,
}

fn gcd_i128(mut a: i128, mut b: i128) -> i128 {
    a = a.abs();
    b = b.abs();
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

impl CycNum {
    pub fn zero(p: u32) -> Self {
        CycNum {
            p,
            repr: Repr::Small {
                num: smallvec::smallvec![0; (p - 1) as usize],
                den: 1,
            },
        }
    }

    pub fn one(p: u32) -> Self {
        Self::from_int(p, 1)
    }

    pub fn from_int(p: u32, n: i64) -> Self {
        let mut num: Small = smallvec::smallvec![0; (p - 1) as usize];
        num[0] = n;
        CycNum {
            p,
            repr: Repr::Small { num, den: 1 },
        }
    }

    pub fn from_bigint(p: u32, n: BigInt) -> Self {
        let mut num = vec![BigInt::zero(); (p - 1) as usize];
        num[0] = n;
        Self::from_big_parts(p, num, BigInt::one())
    }

    pub fn from_rational(p: u32, r: &BigRational) -> Self {
        let mut num = vec![BigInt::zero(); (p - 1) as usize];
        num[0] = r.numer().clone();
        Self::from_big_parts(p, num, r.denom().clone())
    }

    pub fn from_ratio(p: u32, a: i64, b: i64) -> Self {
        Self::from_rational(p, &BigRational::new(BigInt::from(a), BigInt::from(b)))
    }

    /// `v^k` for any integer `k`.
    pub fn v_pow(p: u32, k: i64) -> Self {
        let e = k.rem_euclid(p as i64) as usize;
        let n = (p - 1) as usize;
        let mut num: Small = smallvec::smallvec![0; n];
        if e < n {
            num[e] = 1;
        } else {
            for c in num.iter_mut() {
                *c = -1;
            }
        }
        CycNum {
            p,
            repr: Repr::Small { num, den: 1 },
        }
    }

    /// `v^{num/den}` with `den` equal to 1 or 2.
    pub fn v_frac(p: u32, num: i64, den: i64) -> Result<Self, CycloError> {
        match den {
            1 => Ok(Self::v_pow(p, num)),
            2 => Ok(Self::v_pow(p, half_exponent(p, num) as i64)),
            -1 => Ok(Self::v_pow(p, -num)),
            -2 => Ok(Self::v_pow(p, half_exponent(p, -num) as i64)),
            d => Err(CycloError::BadExponentDenominator(d)),
        }
    }

    /// Reduce an arbitrary Laurent polynomial in `v` into canonical form.
    pub fn reduce(p: u32, raw: &BTreeMap<i64, BigRational>) -> Self {
        let mut acc = Self::zero(p);
        for (e, c) in raw {
            acc += &(Self::v_pow(p, *e) * &Self::from_rational(p, c));
        }
        acc
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn is_zero(&self) -> bool {
        match &self.repr {
            Repr::Small { num, .. } => num.iter().all(|&c| c == 0),
            Repr::Big { .. } => false,
        }
    }

    pub fn is_one(&self) -> bool {
        *self == Self::one(self.p)
    }

    /// Coefficients of `v^0 .. v^{p-2}` as exact rationals.
    pub fn coeffs(&self) -> Vec<BigRational> {
        let (num, den) = self.big_parts();
        num.into_iter()
            .map(|c| BigRational::new(c, den.clone()))
            .collect()
    }

    /// The value as a rational number, if it lies in `Q`.
    pub fn to_rational(&self) -> Option<BigRational> {
        let c = self.coeffs();
        if c[1..].iter().all(|x| x.is_zero()) {
            Some(c[0].clone())
        } else {
            None
        }
    }

    fn big_parts(&self) -> (Vec<BigInt>, BigInt) {
        match &self.repr {
            Repr::Small { num, den } => (
                num.iter().map(|&c| BigInt::from(c)).collect(),
                BigInt::from(*den),
            ),
            Repr::Big { num, den } => (num.clone(), den.clone()),
        }
    }

    fn from_big_parts(p: u32, mut num: Vec<BigInt>, mut den: BigInt) -> Self {
        if den.is_negative() {
            den = -den;
            for c in num.iter_mut() {
                *c = -&*c;
            }
        }
        let mut g = den.clone();
        for c in &num {
            if g.is_one() {
                break;
            }
            g = g.gcd(c);
        }
        if !g.is_one() && !g.is_zero() {
            for c in num.iter_mut() {
                *c = &*c / &g;
            }
            den = &den / &g;
        }
        if num.iter().all(|c| c.is_zero()) {
            return Self::zero(p);
        }
        let small: Option<Small> = num.iter().map(|c| c.to_i64()).collect();
        match (small, den.to_i64()) {
            (Some(num), Some(den)) => CycNum {
                p,
                repr: Repr::Small { num, den },
            },
            _ => CycNum {
                p,
                repr: Repr::Big { num, den },
            },
        }
    }

    fn from_i128(p: u32, num: &[i128], den: i128) -> Self {
        let mut g = den;
        for &c in num {
            if g == 1 {
                break;
            }
            g = gcd_i128(g, c);
        }
        if num.iter().all(|&c| c == 0) {
            return Self::zero(p);
        }
        let den = den / g;
        let mut small: Small = SmallVec::with_capacity(num.len());
        let mut fits = i64::try_from(den).is_ok();
        if fits {
            for &c in num {
                match i64::try_from(c / g) {
                    Ok(x) => small.push(x),
                    Err(_) => {
                        fits = false;
                        break;
                    }
                }
            }
        }
        if fits {
            CycNum {
                p,
                repr: Repr::Small {
                    num: small,
                    den: den as i64,
                },
            }
        } else {
            Self::from_big_parts(
                p,
                num.iter().map(|&c| BigInt::from(c / g)).collect(),
                BigInt::from(den),
            )
        }
    }

    fn small_add(a: &Small, da: i64, b: &Small, db: i64, sign: i128) -> Option<(SmallVec<[i128; 12]>, i128)> {
        let mut out: SmallVec<[i128; 12]> = SmallVec::with_capacity(a.len());
        if da == db {
            for (x, y) in a.iter().zip(b.iter()) {
                out.push(*x as i128 + sign * *y as i128);
            }
            Some((out, da as i128))
        } else {
            let g = gcd_i128(da as i128, db as i128);
            let fa = db as i128 / g;
            let fb = da as i128 / g;
            for (x, y) in a.iter().zip(b.iter()) {
                let t = (*x as i128).checked_mul(fa)?;
                let u = (*y as i128).checked_mul(fb)?;
                out.push(t.checked_add(sign * u)?);
            }
            Some((out, (da as i128 / g).checked_mul(db as i128)?))
        }
    }

    fn add_signed(&self, other: &Self, sign: i64) -> Self {
        debug_assert_eq!(self.p, other.p, "mixed moduli");
        if let (Repr::Small { num: a, den: da }, Repr::Small { num: b, den: db }) =
            (&self.repr, &other.repr)
        {
            if let Some((num, den)) = Self::small_add(a, *da, b, *db, sign as i128) {
                return Self::from_i128(self.p, &num, den);
            }
        }
        let (a, da) = self.big_parts();
        let (b, db) = other.big_parts();
        let num = a
            .iter()
            .zip(b.iter())
            .map(|(x, y)| {
                let t = x * &db;
                let u = y * &da;
                if sign > 0 {
                    t + u
                } else {
                    t - u
                }
            })
            .collect();
        Self::from_big_parts(self.p, num, da * db)
    }

    fn small_mul(p: u32, a: &Small, da: i64, b: &Small, db: i64) -> Option<Self> {
        let n = p as usize;
        let mut c: SmallVec<[i128; 13]> = smallvec::smallvec![0; n];
        for (i, &x) in a.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (j, &y) in b.iter().enumerate() {
                if y == 0 {
                    continue;
                }
                let k = (i + j) % n;
                c[k] = c[k].checked_add((x as i128).checked_mul(y as i128)?)?;
            }
        }
        let top = c[n - 1];
        for k in 0..n - 1 {
            c[k] = c[k].checked_sub(top)?;
        }
        let den = (da as i128).checked_mul(db as i128)?;
        Some(Self::from_i128(p, &c[..n - 1], den))
    }

    fn big_mul(&self, other: &Self) -> Self {
        let n = self.p as usize;
        let (a, da) = self.big_parts();
        let (b, db) = other.big_parts();
        let mut c = vec![BigInt::zero(); n];
        for (i, x) in a.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            for (j, y) in b.iter().enumerate() {
                if !y.is_zero() {
                    c[(i + j) % n] += x * y;
                }
            }
        }
        let top = c.pop().unwrap();
        for x in c.iter_mut() {
            *x -= &top;
        }
        Self::from_big_parts(self.p, c, da * db)
    }

    pub fn mul_int(&self, k: i64) -> Self {
        self * &Self::from_int(self.p, k)
    }

    /// Image under the field automorphism `v -> v^k` (`p` must not divide `k`).
    pub fn galois(&self, k: i64) -> Self {
        let (num, den) = self.big_parts();
        let n = self.p as usize;
        let mut c = vec![BigInt::zero(); n];
        for (i, x) in num.into_iter().enumerate() {
            let e = ((i as i64) * k).rem_euclid(self.p as i64) as usize;
            c[e] += x;
        }
        let top = c.pop().unwrap();
        for x in c.iter_mut() {
            *x -= &top;
        }
        Self::from_big_parts(self.p, c, den)
    }

    /// Multiplicative inverse, computed as the product of the nontrivial
    /// Galois conjugates divided by the (rational) norm.
    pub fn inverse(&self) -> Result<Self, CycloError> {
        if self.is_zero() {
            return Err(CycloError::ZeroInverse);
        }
        let mut conj = Self::one(self.p);
        for k in 2..self.p as i64 {
            conj = &conj * &self.galois(k);
        }
        let norm = (self * &conj)
            .to_rational()
            .expect("field norm is rational");
        Ok(conj * Self::from_rational(self.p, &norm.recip()))
    }

    pub fn pow(&self, e: i64) -> Result<Self, CycloError> {
        let mut base = if e < 0 { self.inverse()? } else { self.clone() };
        let mut e = e.unsigned_abs();
        let mut acc = Self::one(self.p);
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            base = &base * &base;
            e >>= 1;
        }
        Ok(acc)
    }

    pub fn div(&self, other: &Self) -> Result<Self, CycloError> {
        Ok(self * &other.inverse()?)
    }

    /// Canonical string `c0 + c1*v + c2*v^2 + ...`; zero prints `0`.
    pub fn to_canonical(&self) -> String {
        let mut parts = Vec::new();
        for (i, c) in self.coeffs().iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let cs = if c.denom().is_one() {
                c.numer().to_string()
            } else {
                format!("{}/{}", c.numer(), c.denom())
            };
            parts.push(match i {
                0 => cs,
                1 => format!("{cs}*v"),
                _ => format!("{cs}*v^{i}"),
            });
        }
        if parts.is_empty() {
            "0".to_string()
        } else {
            parts.join(" + ")
        }
    }

    /// Parse the canonical form (also accepts bare `v`, `-v`, `v^k`).
    pub fn parse(p: u32, s: &str) -> Result<Self, CycloError> {
        let err = || CycloError::Parse(s.to_string());
        let s = s.trim();
        if s.is_empty() {
            return Err(err());
        }
        let mut acc = Self::zero(p);
        for term in s.split('+') {
            let term = term.trim();
            if term.is_empty() {
                return Err(err());
            }
            let (coef, power) = match term.find('v') {
                None => (term, 0i64),
                Some(i) => {
                    let c = term[..i].trim_end_matches('*').trim();
                    let rest = &term[i + 1..];
                    let e = if rest.is_empty() {
                        1
                    } else {
                        rest.strip_prefix('^')
                            .ok_or_else(err)?
                            .trim()
                            .parse::<i64>()
                            .map_err(|_| err())?
                    };
                    (c, e)
                }
            };
            let c = match coef {
                "" => BigRational::one(),
                "-" => -BigRational::one(),
                c => parse_rational(c).ok_or_else(err)?,
            };
            acc += &(Self::v_pow(p, power) * Self::from_rational(p, &c));
        }
        Ok(acc)
    }
}

fn parse_rational(s: &str) -> Option<BigRational> {
    let mut it = s.split('/');
    let a = BigInt::from_str(it.next()?.trim()).ok()?;
    let b = match it.next() {
        Some(b) => BigInt::from_str(b.trim()).ok()?,
        None => BigInt::one(),
    };
    if it.next().is_some() || b.is_zero() {
        return None;
    }
    Some(BigRational::new(a, b))
}

impl fmt::Display for CycNum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_canonical())
    }
}

impl PartialOrd for CycNum {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Arbitrary but total order (lexicographic on coefficients), used only to
/// make map keys and printed tables deterministic.
impl Ord for CycNum {
    fn cmp(&self, other: &Self) -> Ordering {
        self.coeffs().cmp(&other.coeffs())
    }
}

impl<'a> Add<&'a CycNum> for &'a CycNum {
    type Output = CycNum;
    fn add(self, rhs: &CycNum) -> CycNum {
        self.add_signed(rhs, 1)
    }
}

impl<'a> Sub<&'a CycNum> for &'a CycNum {
    type Output = CycNum;
    fn sub(self, rhs: &CycNum) -> CycNum {
        self.add_signed(rhs, -1)
    }
}

impl<'a> Mul<&'a CycNum> for &'a CycNum {
    type Output = CycNum;
    fn mul(self, rhs: &CycNum) -> CycNum {
        debug_assert_eq!(self.p, rhs.p, "mixed moduli");
        if let (Repr::Small { num: a, den: da }, Repr::Small { num: b, den: db }) =
            (&self.repr, &rhs.repr)
        {
            if let Some(r) = CycNum::small_mul(self.p, a, *da, b, *db) {
                return r;
            }
        }
        self.big_mul(rhs)
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr<CycNum> for CycNum {
            type Output = CycNum;
            fn $m(self, rhs: CycNum) -> CycNum {
                (&self).$m(&rhs)
            }
        }
        impl<'a> $tr<&'a CycNum> for CycNum {
            type Output = CycNum;
            fn $m(self, rhs: &CycNum) -> CycNum {
                (&self).$m(rhs)
            }
        }
        impl<'a> $tr<CycNum> for &'a CycNum {
            type Output = CycNum;
            fn $m(self, rhs: CycNum) -> CycNum {
                self.$m(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for &CycNum {
    type Output = CycNum;
    fn neg(self) -> CycNum {
        match &self.repr {
            Repr::Small { num, den } if num.iter().all(|&c| c != i64::MIN) => CycNum {
                p: self.p,
                repr: Repr::Small {
                    num: num.iter().map(|c| -c).collect(),
                    den: *den,
                },
            },
            _ => {
                let (num, den) = self.big_parts();
                CycNum::from_big_parts(self.p, num.into_iter().map(|c| -c).collect(), den)
            }
        }
    }
}

impl Neg for CycNum {
    type Output = CycNum;
    fn neg(self) -> CycNum {
        -&self
    }
}

impl AddAssign<&CycNum> for CycNum {
    fn add_assign(&mut self, rhs: &CycNum) {
        *self = &*self + rhs;
    }
}

impl SubAssign<&CycNum> for CycNum {
    fn sub_assign(&mut self, rhs: &CycNum) {
        *self = &*self - rhs;
    }
}

impl MulAssign<&CycNum> for CycNum {
    fn mul_assign(&mut self, rhs: &CycNum) {
        *self = &*self * rhs;
    }
}

/// `[n] = (v^n - v^{-n}) / (v - v^{-1})`, evaluated as `sum v^{n-1-2k}`.
pub fn qint(p: u32, n: i64) -> CycNum {
    if n < 0 {
        return -qint(p, -n);
    }
    let mut acc = CycNum::zero(p);
    for k in 0..n {
        acc += &CycNum::v_pow(p, n - 1 - 2 * k);
    }
    acc
}

/// `v^n - v^{-n}`.
pub fn vdiff(p: u32, n: i64) -> CycNum {
    CycNum::v_pow(p, n) - CycNum::v_pow(p, -n)
}

/// `{m} = prod_{i=1}^m (v^i - v^{-i})`.
pub fn qfact_braces(p: u32, m: u32) -> CycNum {
    let mut acc = CycNum::one(p);
    for i in 1..=m as i64 {
        acc = acc * vdiff(p, i);
    }
    acc
}

/// `[m]! = [1][2]...[m]`.
pub fn qfact(p: u32, m: u32) -> CycNum {
    let mut acc = CycNum::one(p);
    for i in 1..=m as i64 {
        acc = acc * qint(p, i);
    }
    acc
}

/// Quantum binomial `prod_{s<m}(v^{n-s} - v^{s-n}) / {m}`; requires `m < p`.
pub fn qbinom(p: u32, n: i64, m: u32) -> CycNum {
    let mut num = CycNum::one(p);
    for s in 0..m as i64 {
        num = num * vdiff(p, n - s);
    }
    if num.is_zero() {
        return num;
    }
    num.div(&qfact_braces(p, m))
        .expect("{m} is invertible for m < p")
}

/// Precomputed quantum binomials `qbinom(n, m)` for `n mod p` and `m < p`.
#[derive(Clone, Debug)]
pub struct QBinomTable {
    p: u32,
    table: Vec<CycNum>,
}

impl QBinomTable {
    pub fn new(p: u32) -> Self {
        let mut table = Vec::with_capacity((p * p) as usize);
        for n in 0..p as i64 {
            for m in 0..p {
                table.push(qbinom(p, n, m));
            }
        }
        QBinomTable { p, table }
    }

    pub fn get(&self, n: i64, m: u32) -> &CycNum {
        let n = n.rem_euclid(self.p as i64) as usize;
        &self.table[n * self.p as usize + m as usize]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reduction_examples() {
        let p = 5;
        let v4 = CycNum::v_pow(p, 4);
        assert_eq!(v4.to_canonical(), "-1 + -1*v + -1*v^2 + -1*v^3");
        assert_eq!(CycNum::v_pow(p, 2) * CycNum::v_pow(p, 3), CycNum::one(p));
        assert_eq!(CycNum::v_frac(p, 1, 2).unwrap(), CycNum::v_pow(p, 3));
        assert!(CycNum::v_frac(p, 1, 3).is_err());
    }

    #[test]
    fn overflow_promotes() {
        let p = 5;
        let big = CycNum::from_int(p, i64::MAX);
        let sq = &big * &big;
        let expect = BigInt::from(i64::MAX) * BigInt::from(i64::MAX);
        assert_eq!(sq.to_rational().unwrap(), BigRational::from_integer(expect));
        let back = sq.div(&big).unwrap();
        assert_eq!(back, big);
    }

    #[test]
    fn parse_roundtrip() {
        let p = 7;
        let x = CycNum::parse(p, "3/2 + -1*v^2 + 5*v^5").unwrap();
        assert_eq!(CycNum::parse(p, &x.to_canonical()).unwrap(), x);
        assert_eq!(CycNum::parse(p, "0").unwrap(), CycNum::zero(p));
        assert_eq!(CycNum::parse(p, "v^6").unwrap(), CycNum::v_pow(p, 6));
    }
}
