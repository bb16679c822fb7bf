//! Exact rational linear algebra used for every sign and definiteness decision.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Arbitrary precision rational number.
pub type Rat = BigRational;

/// Builds a rational from a pair of machine integers.
pub fn rat(num: i64, den: i64) -> Rat {
    Rat::new(BigInt::from(num), BigInt::from(den))
}

pub fn rat_int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

/// Parses `"p/q"`, `"p"` or a finite decimal literal such as `"-0.25"`.
pub fn parse_rat(text: &str) -> Result<Rat> {
    let s = text.trim();
    let bad = || Error::Parse(format!("not a rational number: {text:?}"));
    if s.is_empty() {
        return Err(bad());
    }
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(Error::Parse(format!("zero denominator in {text:?}")));
        }
        return Ok(Rat::new(n, d));
    }
    if let Some((int_part, frac_part)) = s.split_once('.') {
        if frac_part.is_empty() || !frac_part.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let negative = int_part.starts_with('-');
        let int_digits = int_part.trim_start_matches(['-', '+']);
        let whole: BigInt = if int_digits.is_empty() {
            BigInt::zero()
        } else {
            int_digits.parse().map_err(|_| bad())?
        };
        let frac: BigInt = frac_part.parse().map_err(|_| bad())?;
        let den = num_traits::pow(BigInt::from(10), frac_part.len());
        let mag = Rat::new(whole * &den + frac, den);
        return Ok(if negative { -mag } else { mag });
    }
    let n: BigInt = s.parse().map_err(|_| bad())?;
    Ok(Rat::from_integer(n))
}

/// Canonical `"p/q"` (or `"p"` for integers) rendering, inverse of [`parse_rat`].
pub fn format_rat(r: &Rat) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn to_f64(r: &Rat) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // ratio of huge integers: scale down through the f64 quotient of the digits
        let n = r.numer().to_f64().unwrap_or(f64::NAN);
        let d = r.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

/// Exact rational for a double (every finite double is a dyadic rational).
pub fn from_f64(x: f64) -> Option<Rat> {
    Rat::from_float(x)
}

pub fn sign(r: &Rat) -> i32 {
    if r.is_zero() {
        0
    } else if r.is_positive() {
        1
    } else {
        -1
    }
}

pub fn dot(a: &[Rat], b: &[Rat]) -> Rat {
    a.iter().zip(b).fold(Rat::zero(), |acc, (x, y)| acc + x * y)
}

/// Dense square matrix over the rationals.
#[derive(Clone, PartialEq, Eq)]
pub struct RatMatrix {
    n: usize,
    data: Vec<Rat>,
}

impl fmt::Debug for RatMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<Vec<String>> = (0..self.n)
            .map(|i| (0..self.n).map(|j| format_rat(self.get(i, j))).collect())
            .collect();
        f.debug_struct("RatMatrix").field("rows", &rows).finish()
    }
}

impl RatMatrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![Rat::zero(); n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.set(i, i, Rat::one());
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Rat>>) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != n {
                return Err(Error::Dimension { expected: n, found: row.len(), what: format!("matrix row {i}") });
            }
            data.extend(row);
        }
        Ok(Self { n, data })
    }

    pub fn from_i64_rows(rows: &[Vec<i64>]) -> Result<Self> {
        Self::from_rows(rows.iter().map(|r| r.iter().map(|&v| rat_int(v)).collect()).collect())
    }

    /// Gram matrix `(v_i, v_j)` of a list of vectors under the bilinear form `self`.
    pub fn gram_of(&self, vectors: &[Vec<Rat>]) -> Self {
        let k = vectors.len();
        let images: Vec<Vec<Rat>> = vectors.iter().map(|v| self.mul_vec(v)).collect();
        let mut g = Self::zeros(k);
        for i in 0..k {
            for j in i..k {
                let val = dot(&vectors[i], &images[j]);
                g.set(j, i, val.clone());
                g.set(i, j, val);
            }
        }
        g
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &Rat {
        &self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Rat) {
        self.data[i * self.n + j] = v;
    }

    pub fn row(&self, i: usize) -> &[Rat] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn rows(&self) -> Vec<Vec<Rat>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }

    pub fn mul_vec(&self, v: &[Rat]) -> Vec<Rat> {
        (0..self.n).map(|i| dot(self.row(i), v)).collect()
    }

    pub fn bilinear(&self, x: &[Rat], y: &[Rat]) -> Rat {
        dot(x, &self.mul_vec(y))
    }

    pub fn neg(&self) -> Self {
        Self { n: self.n, data: self.data.iter().map(|v| -v).collect() }
    }

    pub fn to_f64(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_fn(self.n, self.n, |i, j| to_f64(self.get(i, j)))
    }

    pub fn principal_submatrix(&self, idx: &[usize]) -> Self {
        let k = idx.len();
        let mut m = Self::zeros(k);
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                m.set(a, b, self.get(i, j).clone());
            }
        }
        m
    }

    /// Determinant by Gaussian elimination over the rationals.
    pub fn det(&self) -> Rat {
        let n = self.n;
        let mut a = self.data.clone();
        let mut det = Rat::one();
        for col in 0..n {
            let Some(piv) = (col..n).find(|&r| !a[r * n + col].is_zero()) else {
                return Rat::zero();
            };
            if piv != col {
                for c in 0..n {
                    a.swap(piv * n + c, col * n + c);
                }
                det = -det;
            }
            let p = a[col * n + col].clone();
            det *= &p;
            for r in col + 1..n {
                let f = &a[r * n + col] / &p;
                if f.is_zero() {
                    continue;
                }
                for c in col..n {
                    let sub = &f * &a[col * n + c];
                    a[r * n + c] -= sub;
                }
            }
        }
        det
    }

    /// Inverse by Gauss–Jordan elimination; `None` when singular.
    pub fn inverse(&self) -> Option<Self> {
        let n = self.n;
        let mut a = self.data.clone();
        let mut inv = Self::identity(n).data;
        for col in 0..n {
            let piv = (col..n).find(|&r| !a[r * n + col].is_zero())?;
            if piv != col {
                for c in 0..n {
                    a.swap(piv * n + c, col * n + c);
                    inv.swap(piv * n + c, col * n + c);
                }
            }
            let p = a[col * n + col].clone();
            for c in 0..n {
                a[col * n + c] /= &p;
                inv[col * n + c] /= &p;
            }
            for r in 0..n {
                if r == col || a[r * n + col].is_zero() {
                    continue;
                }
                let f = a[r * n + col].clone();
                for c in 0..n {
                    let s1 = &f * &a[col * n + c];
                    a[r * n + c] -= s1;
                    let s2 = &f * &inv[col * n + c];
                    inv[r * n + c] -= s2;
                }
            }
        }
        Some(Self { n, data: inv })
    }

    /// Solves `self * x = b`; `None` when singular.
    pub fn solve(&self, b: &[Rat]) -> Option<Vec<Rat>> {
        let inv = self.inverse()?;
        Some(inv.mul_vec(b))
    }

    /// Exact inertia `(positive, negative, zero)` of a symmetric matrix by congruence
    /// diagonalization (Sylvester's law of inertia).
    pub fn inertia(&self) -> (usize, usize, usize) {
        let mut n = self.n;
        let mut a = self.rows();
        let (mut pos, mut neg) = (0, 0);
        while n > 0 {
            if let Some(p) = (0..n).find(|&i| !a[i][i].is_zero()) {
                // move pivot to index 0
                a.swap(0, p);
                for row in a.iter_mut() {
                    row.swap(0, p);
                }
            } else if let Some((i, j)) =
                (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).find(|&(i, j)| !a[i][j].is_zero())
            {
                // all diagonal zero: row_i += row_j and col_i += col_j gives a_ii = 2 a_ij != 0
                for c in 0..n {
                    let v = a[j][c].clone();
                    a[i][c] += v;
                }
                for row in a.iter_mut() {
                    let v = row[j].clone();
                    row[i] += v;
                }
                a.swap(0, i);
                for row in a.iter_mut() {
                    row.swap(0, i);
                }
            } else {
                break;
            }
            let p = a[0][0].clone();
            if p.is_positive() {
                pos += 1;
            } else {
                neg += 1;
            }
            let mut next = vec![vec![Rat::zero(); n - 1]; n - 1];
            for r in 1..n {
                for c in 1..n {
                    next[r - 1][c - 1] = &a[r][c] - &a[r][0] * &a[0][c] / &p;
                }
            }
            a = next;
            n -= 1;
        }
        (pos, neg, self.n - pos - neg)
    }

    /// Exact negative-definiteness via the leading principal minors of `-self`.
    pub fn is_negative_definite(&self) -> bool {
        let m = self.neg();
        (1..=self.n).all(|k| {
            let idx: Vec<usize> = (0..k).collect();
            m.principal_submatrix(&idx).det().is_positive()
        })
    }

    pub fn max_abs(&self) -> Rat {
        self.data.iter().map(|v| v.abs()).max().unwrap_or_else(Rat::zero)
    }
}

/// Rank of a list of rational vectors.
pub fn rank(vectors: &[Vec<Rat>]) -> usize {
    let mut rows: Vec<Vec<Rat>> = vectors.to_vec();
    let cols = rows.first().map_or(0, Vec::len);
    let mut rank = 0;
    for col in 0..cols {
        let Some(p) = (rank..rows.len()).find(|&r| !rows[r][col].is_zero()) else {
            continue;
        };
        rows.swap(rank, p);
        let pivot = rows[rank][col].clone();
        for r in 0..rows.len() {
            if r == rank || rows[r][col].is_zero() {
                continue;
            }
            let f = &rows[r][col] / &pivot;
            for c in col..cols {
                let sub = &f * &rows[rank][c];
                rows[r][c] -= sub;
            }
        }
        rank += 1;
    }
    rank
}
