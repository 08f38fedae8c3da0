//! The guiding examples, over any field with rational entries.

use crate::field::Field;
use crate::linalg::Matrix;
use crate::measure::MeasureSpec;

type Q = (i64, i64);

fn build<F: Field>(f: &F, rows: &[[Q; 3]; 3]) -> Matrix<F::Elem> {
    Matrix::from_rows(rows.iter().map(|r| r.iter().map(|&(a, b)| f.from_ratio(a, b)).collect()).collect())
        .expect("3x3")
}

const ONE: Q = (1, 1);
const ZERO: Q = (0, 1);
const HALF: Q = (1, 2);
const QUARTER: Q = (1, 4);

fn n(k: i64) -> Q {
    (k, 1)
}

/// Uniform on `g1 = [[1,2,3],[0,1,1],[0,0,1]]`, `g2 = [[-1,1,2],[0,0,-1],[0,1,0]]`.
pub fn example1<F: Field>(f: F) -> MeasureSpec<F> {
    let g1 = build(&f, &[[ONE, n(2), n(3)], [ZERO, ONE, ONE], [ZERO, ZERO, ONE]]);
    let g2 = build(&f, &[[n(-1), ONE, n(2)], [ZERO, ZERO, n(-1)], [ZERO, ONE, ZERO]]);
    MeasureSpec::uniform(f, vec![g1, g2])
}

/// Example 1 with the `(1,1)` entries replaced by `1/2`.
pub fn example2<F: Field>(f: F) -> MeasureSpec<F> {
    let g1 = build(&f, &[[HALF, n(2), n(3)], [ZERO, ONE, ONE], [ZERO, ZERO, ONE]]);
    let g2 = build(&f, &[[HALF, ONE, n(2)], [ZERO, ZERO, n(-1)], [ZERO, ONE, ZERO]]);
    MeasureSpec::uniform(f, vec![g1, g2])
}

/// Uniform on three atoms with `A = 1/2` and `C_3 = C_1^-1`.
pub fn example3<F: Field>(f: F) -> MeasureSpec<F> {
    let g1 = build(&f, &[[HALF, n(2), n(3)], [ZERO, n(4), ONE], [ZERO, ZERO, QUARTER]]);
    let g2 = build(&f, &[[HALF, ONE, n(2)], [ZERO, ZERO, n(-1)], [ZERO, ONE, ZERO]]);
    let g3 = build(&f, &[[HALF, ONE, ONE], [ZERO, QUARTER, n(-1)], [ZERO, ZERO, n(4)]]);
    MeasureSpec::uniform(f, vec![g1, g2, g3])
}

pub fn example<F: Field>(id: u8, f: F) -> Option<MeasureSpec<F>> {
    match id {
        1 => Some(example1(f)),
        2 => Some(example2(f)),
        3 => Some(example3(f)),
        _ => None,
    }
}

/// Point mass at `diag(2, 1)`.
pub fn diag21<F: Field>(f: F) -> MeasureSpec<F> {
    let g = Matrix::diag(&[f.from_i64(2), f.from_i64(1)]);
    MeasureSpec::dirac(f, g)
}

pub fn identity<F: Field>(f: F, d: usize) -> MeasureSpec<F> {
    MeasureSpec::dirac(f, Matrix::identity(d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{PadicField, RealField};

    #[test]
    fn examples_validate_over_both_fields() {
        for id in 1..=3 {
            assert!(example(id, RealField::default()).unwrap().validate().is_valid());
            assert!(example(id, PadicField::new(3).unwrap()).unwrap().validate().is_valid());
        }
        assert!(example(4, RealField::default()).is_none());
    }

    #[test]
    fn example3_quotient_blocks_are_inverse() {
        let s = example3(RealField::default());
        let c1 = s.atoms[0].block(1, 3, 1, 3);
        let c3 = s.atoms[2].block(1, 3, 1, 3);
        assert_eq!(c1.matmul(&c3), Matrix::identity(2));
    }
}
