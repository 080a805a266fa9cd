//! Truncated integers of the totally ramified extension `Q_p(p^{1/k})`.
//!
//! An integer `u = sum_i d_i pi^i` (with `pi^k = p` and digits `d_i` in
//! `0..p`) is stored as `k` base-`p` components `A_r = sum_j d_{kj+r} p^j`, so
//! that `u = sum_r pi^r A_r`. Carries never cross components: a carry out of
//! digit `kj + r` lands on digit `k(j+1) + r`. Component `r` is kept modulo
//! `p^{cap_r}` where `cap_r` counts the retained digits congruent to `r` mod `k`.

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub(crate) struct PiAdicInt {
    comps: Vec<BigUint>,
}

/// Shape of a truncated ring: prime, ramification index and digit count.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct Shape {
    pub p: u64,
    pub k: usize,
    pub prec: usize,
}

impl Shape {
    pub fn new(p: u64, k: usize, prec: usize) -> Self {
        Shape { p, k, prec }
    }

    fn cap(&self, r: usize) -> u32 {
        if r >= self.prec {
            0
        } else {
            ((self.prec - r + self.k - 1) / self.k) as u32
        }
    }

    fn modulus(&self, r: usize) -> BigUint {
        BigUint::from(self.p).pow(self.cap(r))
    }
}

impl PiAdicInt {
    pub fn zero(shape: Shape) -> Self {
        PiAdicInt {
            comps: vec![BigUint::zero(); shape.k],
        }
    }

    pub fn one(shape: Shape) -> Self {
        let mut z = Self::zero(shape);
        z.comps[0] = BigUint::one();
        z.reduce(shape);
        z
    }

    /// Embeds an integer of `Z_p` (given modulo a large power of `p`).
    pub fn from_base(shape: Shape, value: BigUint) -> Self {
        let mut z = Self::zero(shape);
        z.comps[0] = value;
        z.reduce(shape);
        z
    }

    pub fn from_digits(shape: Shape, digits: &[u32]) -> Self {
        let mut comps = vec![BigUint::zero(); shape.k];
        let p = BigUint::from(shape.p);
        for r in 0..shape.k {
            let mut acc = BigUint::zero();
            let mut idx: Vec<usize> = (r..digits.len().min(shape.prec)).step_by(shape.k).collect();
            idx.reverse();
            for i in idx {
                acc = acc * &p + BigUint::from(digits[i]);
            }
            comps[r] = acc;
        }
        let mut z = PiAdicInt { comps };
        z.reduce(shape);
        z
    }

    pub fn digits(&self, shape: Shape) -> Vec<u32> {
        let mut out = vec![0u32; shape.prec];
        let p = BigUint::from(shape.p);
        for r in 0..shape.k {
            let mut a = self.comps[r].clone();
            let mut i = r;
            while !a.is_zero() && i < shape.prec {
                let (q, d) = a.div_rem(&p);
                out[i] = d.to_u32().unwrap_or(0);
                a = q;
                i += shape.k;
            }
        }
        out
    }

    /// Base-`p` expansion of component 0 (the whole value when `k = 1`).
    pub fn base_component(&self) -> &BigUint {
        &self.comps[0]
    }

    fn reduce(&mut self, shape: Shape) {
        for r in 0..shape.k {
            let m = shape.modulus(r);
            if self.comps[r] >= m {
                self.comps[r] %= &m;
            }
        }
    }

    /// Number of leading zero digits, `None` for zero.
    pub fn valuation(&self, shape: Shape) -> Option<usize> {
        let p = BigUint::from(shape.p);
        let mut best: Option<usize> = None;
        for (r, a) in self.comps.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            let mut j = 0usize;
            let mut a = a.clone();
            loop {
                let (q, d) = a.div_rem(&p);
                if !d.is_zero() {
                    break;
                }
                a = q;
                j += 1;
            }
            let v = shape.k * j + r;
            best = Some(best.map_or(v, |b| b.min(v)));
        }
        best
    }

    /// Leading digit (the residue in `F_p`) of a unit.
    pub fn residue(&self, shape: Shape) -> u64 {
        (&self.comps[0] % BigUint::from(shape.p)).to_u64().unwrap_or(0)
    }

    pub fn add(&self, other: &Self, shape: Shape) -> Self {
        let comps = self
            .comps
            .iter()
            .zip(&other.comps)
            .map(|(a, b)| a + b)
            .collect();
        let mut z = PiAdicInt { comps };
        z.reduce(shape);
        z
    }

    pub fn neg(&self, shape: Shape) -> Self {
        let comps = self
            .comps
            .iter()
            .enumerate()
            .map(|(r, a)| {
                if a.is_zero() {
                    BigUint::zero()
                } else {
                    shape.modulus(r) - a
                }
            })
            .collect();
        PiAdicInt { comps }
    }

    pub fn sub(&self, other: &Self, shape: Shape) -> Self {
        self.add(&other.neg(shape), shape)
    }

    pub fn mul(&self, other: &Self, shape: Shape) -> Self {
        let k = shape.k;
        let p = BigUint::from(shape.p);
        let mut comps = vec![BigUint::zero(); k];
        for (r, a) in self.comps.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (s, b) in other.comps.iter().enumerate() {
                if b.is_zero() {
                    continue;
                }
                let prod = a * b;
                let t = r + s;
                if t >= k {
                    comps[t - k] += prod * &p;
                } else {
                    comps[t] += prod;
                }
            }
        }
        let mut z = PiAdicInt { comps };
        z.reduce(shape);
        z
    }

    /// Multiplies by `pi^s`, dropping digits that fall past the precision.
    pub fn shift_up(&self, s: usize, shape: Shape) -> Self {
        if s == 0 {
            return self.clone();
        }
        let k = shape.k;
        let p = BigUint::from(shape.p);
        let mut comps = vec![BigUint::zero(); k];
        for (r, a) in self.comps.iter().enumerate() {
            let t = r + s;
            comps[t % k] = a * p.pow((t / k) as u32);
        }
        let mut z = PiAdicInt { comps };
        z.reduce(shape);
        z
    }

    /// Divides by `pi^s`; the caller guarantees `valuation >= s`.
    /// The vacated top digits are zero.
    pub fn shift_down(&self, s: usize, shape: Shape) -> Self {
        if s == 0 {
            return self.clone();
        }
        let k = shape.k;
        let p = BigUint::from(shape.p);
        let mut comps = vec![BigUint::zero(); k];
        for (r, c) in comps.iter_mut().enumerate() {
            let t = r + s;
            let src = &self.comps[t % k];
            *c = src / p.pow((t / k) as u32);
        }
        let mut z = PiAdicInt { comps };
        z.reduce(shape);
        z
    }

    /// Inverse of a unit by Newton iteration `y <- y (2 - u y)`.
    pub fn inverse_unit(&self, shape: Shape) -> Self {
        let p = shape.p;
        let a0 = self.residue(shape);
        let inv0 = mod_inverse(a0, p);
        let mut y = Self::from_base(shape, BigUint::from(inv0));
        let two = Self::from_base(shape, BigUint::from(2u32));
        let one = Self::one(shape);
        let mut correct = 1usize;
        while correct < shape.prec {
            let uy = self.mul(&y, shape);
            y = y.mul(&two.sub(&uy, shape), shape);
            correct *= 2;
        }
        debug_assert_eq!(self.mul(&y, shape), one);
        y
    }

    pub fn resize(&self, to: Shape) -> Self {
        let mut z = self.clone();
        z.reduce(to);
        z
    }
}

fn mod_inverse(a: u64, p: u64) -> u64 {
    let (mut t, mut new_t) = (0i128, 1i128);
    let (mut r, mut new_r) = (p as i128, a as i128);
    while new_r != 0 {
        let q = r / new_r;
        (t, new_t) = (new_t, t - q * new_t);
        (r, new_r) = (new_r, r - q * new_r);
    }
    if t < 0 {
        t += p as i128;
    }
    t as u64
}
