use std::fmt;

/// Maximum number of free variables in a chart (a face with 13 labels).
pub const MAX_VARS: usize = 12;

/// Exponent vector over chart variables.
///
/// Ordering is graded lexicographic with `x_0 > x_1 > ...`: total degree
/// first, then exponents compared left to right.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Monomial {
    deg: u16,
    exps: [u8; MAX_VARS],
}

impl Monomial {
    pub const ONE: Monomial = Monomial {
        deg: 0,
        exps: [0; MAX_VARS],
    };

    pub fn from_exps(exps: &[u8]) -> Monomial {
        assert!(exps.len() <= MAX_VARS, "too many exponents");
        let mut m = Monomial::ONE;
        for (slot, &e) in m.exps.iter_mut().zip(exps) {
            *slot = e;
            m.deg += e as u16;
        }
        m
    }

    pub fn var(i: usize) -> Monomial {
        let mut m = Monomial::ONE;
        m.exps[i] = 1;
        m.deg = 1;
        m
    }

    #[inline]
    pub fn degree(&self) -> u32 {
        self.deg as u32
    }

    #[inline]
    pub fn exp(&self, i: usize) -> u8 {
        self.exps[i]
    }

    #[inline]
    pub fn exps(&self) -> &[u8; MAX_VARS] {
        &self.exps
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut m = *self;
        for (a, b) in m.exps.iter_mut().zip(other.exps) {
            *a = a.checked_add(b).expect("monomial exponent overflow");
        }
        m.deg += other.deg;
        m
    }

    /// `self / other` when `other` divides `self`.
    pub fn div(&self, other: &Monomial) -> Option<Monomial> {
        let mut m = *self;
        for (a, b) in m.exps.iter_mut().zip(other.exps) {
            *a = a.checked_sub(b)?;
        }
        m.deg -= other.deg;
        Some(m)
    }

    /// Lowers the exponent of variable `i` by one.
    pub fn lower(&self, i: usize) -> Option<Monomial> {
        let mut m = *self;
        m.exps[i] = m.exps[i].checked_sub(1)?;
        m.deg -= 1;
        Some(m)
    }

    pub fn raise(&self, i: usize) -> Monomial {
        let mut m = *self;
        m.exps[i] = m.exps[i].checked_add(1).expect("monomial exponent overflow");
        m.deg += 1;
        m
    }

    /// Evaluates the monomial at `x` (indexed by variable).
    pub fn eval_f64(&self, x: &[f64]) -> f64 {
        let mut v = 1.0;
        for (i, &e) in self.exps.iter().enumerate() {
            if e > 0 {
                v *= x[i].powi(e as i32);
            }
        }
        v
    }
}

impl fmt::Debug for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let last = self.exps.iter().rposition(|&e| e > 0).map_or(0, |i| i + 1);
        write!(f, "x{:?}", &self.exps[..last])
    }
}

/// All monomials in `nvars` variables of total degree exactly `deg`, in
/// ascending order.
pub fn monomials_of_degree(nvars: usize, deg: u32) -> Vec<Monomial> {
    let mut out = Vec::new();
    let mut cur = [0u8; MAX_VARS];
    fn rec(i: usize, nvars: usize, left: u32, cur: &mut [u8; MAX_VARS], out: &mut Vec<Monomial>) {
        if i + 1 == nvars {
            cur[i] = left as u8;
            out.push(Monomial::from_exps(&cur[..nvars]));
            return;
        }
        for e in 0..=left {
            cur[i] = e as u8;
            rec(i + 1, nvars, left - e, cur, out);
        }
    }
    if nvars == 0 {
        if deg == 0 {
            out.push(Monomial::ONE);
        }
        return out;
    }
    rec(0, nvars, deg, &mut cur, &mut out);
    out.sort();
    out
}

/// All monomials of total degree at most `max_deg`, ascending.
pub fn graded_basis(nvars: usize, max_deg: u32) -> Vec<Monomial> {
    (0..=max_deg)
        .flat_map(|d| monomials_of_degree(nvars, d))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grlex_order() {
        let x = Monomial::var(0);
        let y = Monomial::var(1);
        assert!(Monomial::ONE < y);
        assert!(y < x);
        assert!(x < y.mul(&y));
        assert!(x.mul(&y) < x.mul(&x));
    }

    #[test]
    fn basis_sizes() {
        assert_eq!(graded_basis(1, 4).len(), 5);
        assert_eq!(graded_basis(2, 3).len(), 10);
        assert_eq!(graded_basis(3, 2).len(), 10);
        assert_eq!(graded_basis(0, 5).len(), 1);
        let b = graded_basis(3, 4);
        assert!(b.windows(2).all(|w| w[0] < w[1]));
    }
}
