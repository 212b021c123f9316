use core::cmp::Ordering;
use core::fmt;

use crate::error::{Error, Result};

/// Exact rational number over `i128`, always stored in lowest terms with a
/// positive denominator. Every arithmetic operation is overflow-checked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Ratio {
    num: i128,
    den: i128,
}

fn gcd(mut a: i128, mut b: i128) -> i128 {
    a = a.abs();
    b = b.abs();
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

impl Ratio {
    pub const ZERO: Ratio = Ratio { num: 0, den: 1 };
    pub const ONE: Ratio = Ratio { num: 1, den: 1 };

    pub fn new(num: i128, den: i128) -> Result<Ratio> {
        if den == 0 {
            return Err(Error::Precondition("zero denominator".into()));
        }
        let g = gcd(num, den);
        let (mut num, mut den) = (num / g.max(1), den / g.max(1));
        if den < 0 {
            num = num.checked_neg().ok_or(Error::Overflow)?;
            den = den.checked_neg().ok_or(Error::Overflow)?;
        }
        Ok(Ratio { num, den })
    }

    pub fn from_int(v: i64) -> Ratio {
        Ratio {
            num: v as i128,
            den: 1,
        }
    }

    pub fn numer(&self) -> i128 {
        self.num
    }

    pub fn denom(&self) -> i128 {
        self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num == 0
    }

    pub fn signum(&self) -> i128 {
        self.num.signum()
    }

    pub fn abs(&self) -> Ratio {
        Ratio {
            num: self.num.abs(),
            den: self.den,
        }
    }

    pub fn neg(&self) -> Ratio {
        Ratio {
            num: -self.num,
            den: self.den,
        }
    }

    pub fn add(&self, o: &Ratio) -> Result<Ratio> {
        let g = gcd(self.den, o.den);
        let l = self.den / g;
        let r = o.den / g;
        let num = self
            .num
            .checked_mul(r)
            .and_then(|a| o.num.checked_mul(l).and_then(|b| a.checked_add(b)))
            .ok_or(Error::Overflow)?;
        let den = l.checked_mul(o.den).ok_or(Error::Overflow)?;
        Ratio::new(num, den)
    }

    pub fn sub(&self, o: &Ratio) -> Result<Ratio> {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &Ratio) -> Result<Ratio> {
        let g1 = gcd(self.num, o.den).max(1);
        let g2 = gcd(o.num, self.den).max(1);
        let num = (self.num / g1)
            .checked_mul(o.num / g2)
            .ok_or(Error::Overflow)?;
        let den = (self.den / g2)
            .checked_mul(o.den / g1)
            .ok_or(Error::Overflow)?;
        Ratio::new(num, den)
    }

    pub fn div(&self, o: &Ratio) -> Result<Ratio> {
        if o.num == 0 {
            return Err(Error::Precondition("division by zero".into()));
        }
        self.mul(&Ratio {
            num: o.den,
            den: o.num,
        })
        .and_then(|r| Ratio::new(r.num, r.den))
    }

    pub fn mul_int(&self, v: i64) -> Result<Ratio> {
        self.mul(&Ratio::from_int(v))
    }
}

impl PartialOrd for Ratio {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Ratio {
    fn cmp(&self, other: &Self) -> Ordering {
        // Cross multiplication may overflow; fall back to wide comparison by
        // integer part and remainder.
        match (
            self.num.checked_mul(other.den),
            other.num.checked_mul(self.den),
        ) {
            (Some(a), Some(b)) => a.cmp(&b),
            _ => {
                let (qa, ra) = (self.num.div_euclid(self.den), self.num.rem_euclid(self.den));
                let (qb, rb) = (
                    other.num.div_euclid(other.den),
                    other.num.rem_euclid(other.den),
                );
                qa.cmp(&qb).then_with(|| {
                    Ratio { num: ra, den: self.den }.cmp(&Ratio {
                        num: rb,
                        den: other.den,
                    })
                })
            }
        }
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn normalizes_sign_and_terms() {
        let r = Ratio::new(6, -4).unwrap();
        assert_eq!((r.numer(), r.denom()), (-3, 2));
        assert_eq!(Ratio::new(0, -7).unwrap(), Ratio::ZERO);
    }

    proptest! {
        #[test]
        fn field_identities(a in -50i128..50, b in 1i128..20, c in -50i128..50, d in 1i128..20) {
            let x = Ratio::new(a, b).unwrap();
            let y = Ratio::new(c, d).unwrap();
            prop_assert_eq!(x.add(&y).unwrap().sub(&y).unwrap(), x);
            if !y.is_zero() {
                prop_assert_eq!(x.mul(&y).unwrap().div(&y).unwrap(), x);
            }
            prop_assert_eq!(x < y, a * d < c * b);
        }
    }
}
