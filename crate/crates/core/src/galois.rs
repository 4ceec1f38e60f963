//! Exact arithmetic and small-matrix linear algebra over finite fields.
//!
//! Two families are supported: prime fields GF(q) with q <= 2^32 and binary
//! extension fields GF(2^m) with m <= 16.  Elements use a canonical integer
//! representation (the residue for prime fields, the coefficient bit pattern
//! for binary fields), so kernels and traces serialize as plain integers.
//! A [`Field`] is a small copyable value carrying enough metadata (order,
//! reduction polynomial) that every downstream result is bit-reproducible.
//!
//! The matrix type deliberately stays minimal: rank and row-span membership
//! are the only queries the capacity and coding machinery needs, and both
//! are exact Gaussian elimination with first-nonzero pivoting.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Reduction polynomials for GF(2^m), m = 1..=16, as coefficient bit
/// patterns with the degree-m bit set.  Each is the lowest-weight
/// irreducible commonly used for its degree; the unit tests re-verify
/// irreducibility by exhaustive trial division.
const REDUCTION_POLY: [u32; 16] = [
    0x3,     // m=1:  x + 1
    0x7,     // m=2:  x^2 + x + 1
    0xB,     // m=3:  x^3 + x + 1
    0x13,    // m=4:  x^4 + x + 1
    0x25,    // m=5:  x^5 + x^2 + 1
    0x43,    // m=6:  x^6 + x + 1
    0x89,    // m=7:  x^7 + x^3 + 1
    0x11B,   // m=8:  x^8 + x^4 + x^3 + x + 1
    0x211,   // m=9:  x^9 + x^4 + 1
    0x409,   // m=10: x^10 + x^3 + 1
    0x805,   // m=11: x^11 + x^2 + 1
    0x1053,  // m=12: x^12 + x^6 + x^4 + x + 1
    0x201B,  // m=13: x^13 + x^4 + x^3 + x + 1
    0x4443,  // m=14: x^14 + x^10 + x^6 + x + 1
    0x8003,  // m=15: x^15 + x + 1
    0x1100B, // m=16: x^16 + x^12 + x^3 + x + 1
];

/// Errors from field construction, element validation, or matrix queries.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GaloisError {
    /// The requested prime-field order is composite.
    #[error("field order {q} is not prime")]
    NotPrime { q: u64 },
    /// The requested order falls outside 2..=2^32.
    #[error("field order {q} outside the supported range 2..=2^32")]
    UnsupportedOrder { q: u64 },
    /// The requested extension degree falls outside 1..=16.
    #[error("extension degree {m} outside the supported range 1..=16")]
    UnsupportedExtension { m: u32 },
    /// An element does not lie in 0..order.
    #[error("element {value} out of range for a field of order {order}")]
    ElementOutOfRange { value: u64, order: u64 },
    /// Zero was passed where an invertible element is required.
    #[error("zero has no multiplicative inverse")]
    ZeroInverse,
    /// A vector's length does not match the matrix width.
    #[error("vector length {found} does not match matrix width {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    /// Matrix rows of unequal length were supplied.
    #[error("matrix rows must all have the same length")]
    RaggedRows,
    /// Two values built over different fields were combined.
    #[error("operands belong to different fields")]
    FieldMismatch,
}

/// Identifies a concrete finite field, including the reduction polynomial
/// for binary extensions so serialized results pin down the arithmetic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FieldSpec {
    /// GF(q) for a prime q.
    Prime { q: u64 },
    /// GF(2^m) with the given reduction polynomial (bit pattern, degree-m
    /// bit set).
    BinaryExt { m: u32, poly: u32 },
}

/// A finite field, cheap to copy and compare.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Field {
    spec: FieldSpec,
}

impl Field {
    /// Constructs GF(q) for a prime q in 2..=2^32.
    pub fn prime(q: u64) -> Result<Self, GaloisError> {
        if !(2..=1u64 << 32).contains(&q) {
            return Err(GaloisError::UnsupportedOrder { q });
        }
        if !is_prime(q) {
            return Err(GaloisError::NotPrime { q });
        }
        Ok(Field {
            spec: FieldSpec::Prime { q },
        })
    }

    /// Constructs GF(2^m) for m in 1..=16 with the fixed reduction
    /// polynomial recorded in [`FieldSpec`].
    pub fn binary_ext(m: u32) -> Result<Self, GaloisError> {
        if !(1..=16).contains(&m) {
            return Err(GaloisError::UnsupportedExtension { m });
        }
        Ok(Field {
            spec: FieldSpec::BinaryExt {
                m,
                poly: REDUCTION_POLY[(m - 1) as usize],
            },
        })
    }

    /// The field's defining metadata.
    pub fn spec(&self) -> FieldSpec {
        self.spec
    }

    /// Number of elements in the field.
    pub fn order(&self) -> u64 {
        match self.spec {
            FieldSpec::Prime { q } => q,
            FieldSpec::BinaryExt { m, .. } => 1 << m,
        }
    }

    /// Checks that `value` is a canonical element and narrows it to `u32`.
    pub fn element(&self, value: u64) -> Result<u32, GaloisError> {
        if value < self.order() {
            Ok(value as u32)
        } else {
            Err(GaloisError::ElementOutOfRange {
                value,
                order: self.order(),
            })
        }
    }

    #[inline]
    fn debug_check(&self, a: u32) {
        debug_assert!((a as u64) < self.order(), "element out of range");
    }

    /// Field addition.
    #[inline]
    pub fn add(&self, a: u32, b: u32) -> u32 {
        self.debug_check(a);
        self.debug_check(b);
        match self.spec {
            FieldSpec::Prime { q } => ((a as u64 + b as u64) % q) as u32,
            FieldSpec::BinaryExt { .. } => a ^ b,
        }
    }

    /// Field subtraction.
    #[inline]
    pub fn sub(&self, a: u32, b: u32) -> u32 {
        self.add(a, self.neg(b))
    }

    /// Additive inverse.
    #[inline]
    pub fn neg(&self, a: u32) -> u32 {
        self.debug_check(a);
        match self.spec {
            FieldSpec::Prime { q } => {
                if a == 0 {
                    0
                } else {
                    (q - a as u64) as u32
                }
            }
            FieldSpec::BinaryExt { .. } => a,
        }
    }

    /// Field multiplication.
    #[inline]
    pub fn mul(&self, a: u32, b: u32) -> u32 {
        self.debug_check(a);
        self.debug_check(b);
        match self.spec {
            FieldSpec::Prime { q } => ((a as u64 * b as u64) % q) as u32,
            FieldSpec::BinaryExt { m, poly } => {
                let mut acc = 0u32;
                let mut a = a;
                let mut b = b;
                while b != 0 {
                    if b & 1 != 0 {
                        acc ^= a;
                    }
                    b >>= 1;
                    a <<= 1;
                    if a & (1 << m) != 0 {
                        a ^= poly;
                    }
                }
                acc
            }
        }
    }

    /// Exponentiation by squaring; `pow(0, 0)` is 1 by the empty-product
    /// convention.
    pub fn pow(&self, a: u32, mut e: u64) -> u32 {
        self.debug_check(a);
        let mut base = a;
        let mut acc = 1u32;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }

    /// Multiplicative inverse via Fermat's little theorem; errors on zero.
    pub fn inv(&self, a: u32) -> Result<u32, GaloisError> {
        if a == 0 {
            return Err(GaloisError::ZeroInverse);
        }
        Ok(self.pow(a, self.order() - 2))
    }
}

/// Trial-division primality test; exact for the supported range q <= 2^32.
fn is_prime(q: u64) -> bool {
    if q < 2 {
        return false;
    }
    if q % 2 == 0 {
        return q == 2;
    }
    let mut f = 3u64;
    while f * f <= q {
        if q % f == 0 {
            return false;
        }
        f += 2;
    }
    true
}

/// A dense row-major matrix over a fixed field.  Rows are coding kernels
/// throughout this crate, so the two supported queries are row-space rank
/// and row-span membership.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldMatrix {
    field: Field,
    cols: usize,
    data: Vec<Vec<u32>>,
}

impl FieldMatrix {
    /// A matrix with no rows over `cols` columns (span is the zero space).
    pub fn empty(field: Field, cols: usize) -> Self {
        FieldMatrix {
            field,
            cols,
            data: Vec::new(),
        }
    }

    /// Builds a matrix from complete rows, validating shape and range.
    pub fn from_rows(field: Field, rows: Vec<Vec<u32>>) -> Result<Self, GaloisError> {
        let cols = match rows.first() {
            Some(r) => r.len(),
            None => return Err(GaloisError::RaggedRows),
        };
        for row in &rows {
            if row.len() != cols {
                return Err(GaloisError::RaggedRows);
            }
            for &v in row {
                field.element(v as u64)?;
            }
        }
        Ok(FieldMatrix {
            field,
            cols,
            data: rows,
        })
    }

    /// The n-by-n identity.
    pub fn identity(field: Field, n: usize) -> Self {
        let data = (0..n)
            .map(|i| {
                let mut row = vec![0u32; n];
                row[i] = 1;
                row
            })
            .collect();
        FieldMatrix {
            field,
            cols: n,
            data,
        }
    }

    /// Appends a row, validating width and range.
    pub fn push_row(&mut self, row: Vec<u32>) -> Result<(), GaloisError> {
        if row.len() != self.cols {
            return Err(GaloisError::DimensionMismatch {
                expected: self.cols,
                found: row.len(),
            });
        }
        for &v in &row {
            self.field.element(v as u64)?;
        }
        self.data.push(row);
        Ok(())
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn rows(&self) -> usize {
        self.data.len()
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[u32] {
        &self.data[i]
    }

    /// Row-space rank by Gaussian elimination with first-nonzero pivoting.
    pub fn rank(&self) -> usize {
        self.echelon().len()
    }

    /// Whether `v` lies in the span of the rows.  Decided by reducing `v`
    /// against the row-echelon form of the matrix.
    pub fn in_span(&self, v: &[u32]) -> Result<bool, GaloisError> {
        if v.len() != self.cols {
            return Err(GaloisError::DimensionMismatch {
                expected: self.cols,
                found: v.len(),
            });
        }
        let mut v: Vec<u32> = v
            .iter()
            .map(|&x| self.field.element(x as u64))
            .collect::<Result<_, _>>()?;
        for (pivot_col, row) in self.echelon() {
            if v[pivot_col] == 0 {
                continue;
            }
            let factor = self
                .field
                .mul(v[pivot_col], self.field.inv(row[pivot_col]).expect("pivot nonzero"));
            for c in pivot_col..self.cols {
                let delta = self.field.mul(factor, row[c]);
                v[c] = self.field.sub(v[c], delta);
            }
        }
        Ok(v.iter().all(|&x| x == 0))
    }

    /// Row-echelon form as (pivot column, row) pairs in increasing pivot
    /// order.  No normalization: pivots keep whatever value elimination
    /// leaves them with.
    fn echelon(&self) -> Vec<(usize, Vec<u32>)> {
        let f = self.field;
        let mut rows: Vec<Vec<u32>> = self.data.clone();
        let mut pivots: Vec<(usize, Vec<u32>)> = Vec::new();
        let mut next_row = 0usize;
        for col in 0..self.cols {
            // First row at or below the frontier with a nonzero entry.
            let Some(pivot_idx) = (next_row..rows.len()).find(|&i| rows[i][col] != 0) else {
                continue;
            };
            rows.swap(next_row, pivot_idx);
            let pivot_val = rows[next_row][col];
            let pivot_inv = f.inv(pivot_val).expect("pivot nonzero");
            let (upper, lower) = rows.split_at_mut(next_row + 1);
            let pivot_row = &upper[next_row];
            for row in lower.iter_mut() {
                if row[col] == 0 {
                    continue;
                }
                let factor = f.mul(row[col], pivot_inv);
                for (dst, &src) in row[col..].iter_mut().zip(&pivot_row[col..]) {
                    *dst = f.sub(*dst, f.mul(factor, src));
                }
            }
            pivots.push((col, rows[next_row].clone()));
            next_row += 1;
            if next_row == rows.len() {
                break;
            }
        }
        pivots
    }
}
