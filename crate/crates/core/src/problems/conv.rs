use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// "Valid" 2-d convolution as used by CNN layers: slide `filter` over `data`
/// and take the dot product of every full overlap (no flipping, no padding).
pub fn conv2d_valid(data: &Matrix, filter: &Matrix) -> Result<Matrix> {
    let (r, c) = (data.rows(), data.cols());
    let (p, q) = (filter.rows(), filter.cols());
    if p == 0 || q == 0 {
        return Err(Error::invalid("filter must be non-empty"));
    }
    if p > r || q > c {
        return Err(Error::invalid(format!(
            "filter {p}x{q} does not fit inside data {r}x{c}"
        )));
    }
    let mut out = Matrix::zeros(r - p + 1, c - q + 1);
    for i in 0..=r - p {
        for j in 0..=c - q {
            let mut acc = 0.0;
            for a in 0..p {
                for b in 0..q {
                    acc += data.get(i + a, j + b) * filter.get(a, b);
                }
            }
            out.set(i, j, acc);
        }
    }
    Ok(out)
}

/// The 4x4 data and anti-diagonal 2x2 filter of the classic sliding-filter
/// illustration.
pub fn demo_inputs() -> (Matrix, Matrix) {
    let data = Matrix::from_rows(&[
        [1.0, 8.0, 0.0, 2.0],
        [9.0, 1.0, 7.0, 0.0],
        [2.0, 8.0, 0.0, 8.0],
        [1.0, 0.0, 9.0, 2.0],
    ])
    .expect("static shape");
    let filter = Matrix::from_rows(&[[0.0, 1.0], [1.0, 0.0]]).expect("static shape");
    (data, filter)
}
