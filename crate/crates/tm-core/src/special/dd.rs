//! Software double-double arithmetic (~31 significant digits).
//!
//! Used by the extended-precision path of the variational solver, where
//! the fourth-order expansion coefficient sits on margins of order `a^6`
//! and the plain f64 accumulation noise would eat into the fit window.
//! Only the operations that path needs are implemented. The
//! operator-style method names deliberately shadow the std trait names;
//! implementing the traits buys nothing for this internal type.
#![allow(clippy::should_implement_trait)]

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

const SPLITTER: f64 = 134_217_729.0; // 2^27 + 1

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn split(a: f64) -> (f64, f64) {
    let t = SPLITTER * a;
    let hi = t - (t - a);
    (hi, a - hi)
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let (ahi, alo) = split(a);
    let (bhi, blo) = split(b);
    let err = ((ahi * bhi - p) + ahi * blo + alo * bhi) + alo * blo;
    (p, err)
}

pub const DD_LN2: Dd = Dd {
    hi: std::f64::consts::LN_2,
    lo: 2.319_046_813_846_299_6e-17,
};

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

    #[inline]
    pub fn from(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }

    #[inline]
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    #[inline]
    pub fn add(self, rhs: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, rhs.hi);
        let e = e + self.lo + rhs.lo;
        let (hi, lo) = quick_two_sum(s, e);
        Dd { hi, lo }
    }

    #[inline]
    pub fn sub(self, rhs: Dd) -> Dd {
        self.add(rhs.neg())
    }

    #[inline]
    pub fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }

    #[inline]
    pub fn mul(self, rhs: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, rhs.hi);
        let e = e + self.hi * rhs.lo + self.lo * rhs.hi;
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }

    #[inline]
    pub fn div(self, rhs: Dd) -> Dd {
        let q1 = self.hi / rhs.hi;
        let r = self.sub(rhs.mul(Dd::from(q1)));
        let q2 = r.hi / rhs.hi;
        let r2 = r.sub(rhs.mul(Dd::from(q2)));
        let q3 = r2.hi / rhs.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Dd { hi, lo }.add(Dd::from(q3))
    }

    #[inline]
    pub fn scale(self, k: f64) -> Dd {
        self.mul(Dd::from(k))
    }

    pub fn sqr(self) -> Dd {
        self.mul(self)
    }

    pub fn powi(self, n: i32) -> Dd {
        if n == 0 {
            return Dd::ONE;
        }
        if n < 0 {
            return Dd::ONE.div(self.powi(-n));
        }
        let mut base = self;
        let mut acc = Dd::ONE;
        let mut m = n;
        while m > 0 {
            if m & 1 == 1 {
                acc = acc.mul(base);
            }
            base = base.sqr();
            m >>= 1;
        }
        acc
    }

    /// exp with argument reduction `x = m ln2 + r`, `|r| <= ln2/2`, and a
    /// scaled Taylor series squared back up.
    pub fn exp(self) -> Dd {
        if self.hi < -709.0 {
            return Dd::ZERO;
        }
        if self.hi > 709.0 {
            return Dd::from(f64::INFINITY);
        }
        let m = (self.hi / DD_LN2.hi).round();
        let r = self.sub(DD_LN2.mul(Dd::from(m)));
        // scale by 2^-9 so the Taylor series converges fast
        let k = 512.0;
        let rs = r.scale(1.0 / k);
        let mut term = rs;
        let mut sum = rs;
        let mut fact = 1.0f64;
        for i in 2..26 {
            fact *= i as f64;
            term = term.mul(rs);
            let add = term.scale(1.0 / fact);
            sum = sum.add(add);
            if add.hi.abs() < 1e-35 * sum.hi.abs() {
                break;
            }
        }
        // undo scaling: (1+s)^(2^9) via s' = s^2 + 2 s repeatedly
        let mut s = sum;
        for _ in 0..9 {
            s = s.sqr().add(s.scale(2.0));
        }
        let e = s.add(Dd::ONE);
        let p = 2.0f64.powi(m as i32);
        Dd {
            hi: e.hi * p,
            lo: e.lo * p,
        }
    }

    /// ln by one double-double Newton correction of the f64 seed.
    pub fn ln(self) -> Dd {
        debug_assert!(self.hi > 0.0);
        let mut y = Dd::from(self.hi.ln());
        for _ in 0..2 {
            // y += x * exp(-y) - 1
            let e = y.neg().exp();
            y = y.add(self.mul(e).sub(Dd::ONE));
        }
        y
    }

    /// ln(1 + x), accurate for small x.
    pub fn ln_1p(self) -> Dd {
        let u = Dd::ONE.add(self);
        if u.hi <= 0.0 {
            return Dd::from(f64::NEG_INFINITY);
        }
        u.ln()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic_identities() {
        let a = Dd::from(0.1).add(Dd::from(0.2));
        // 0.1 + 0.2 in double-double carries the representation error exactly
        let exact = 0.1f64 + 0.2f64;
        assert!((a.hi - exact).abs() < 1e-16);
        let b = Dd::from(3.0).div(Dd::from(7.0)).mul(Dd::from(7.0));
        assert!((b.to_f64() - 3.0).abs() < 1e-30);
        assert!(b.sub(Dd::from(3.0)).hi.abs() < 1e-30);
    }

    #[test]
    fn exp_and_ln() {
        let e = Dd::ONE.exp();
        assert!((e.hi - std::f64::consts::E).abs() < 1e-15);
        // round trip at double-double accuracy
        for &x in &[0.3, 1.7, -5.0, 12.25, -0.001] {
            let y = Dd::from(x).exp().ln();
            let diff = y.sub(Dd::from(x));
            assert!(diff.hi.abs() < 1e-26, "x={x}, diff={:?}", diff);
        }
        // exp(ln 2) == 2
        let two = Dd::from(2.0).ln().exp();
        assert!(two.sub(Dd::from(2.0)).hi.abs() < 1e-26);
    }

    #[test]
    fn exp_against_f64_for_moderate_args() {
        for &x in &[-30.0, -2.5, 0.0, 2.5, 30.0] {
            let d = Dd::from(x).exp().to_f64();
            let f = x.exp();
            assert!((d / f - 1.0).abs() < 1e-15, "x={x}");
        }
    }
}
