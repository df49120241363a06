/// Borrowed strided matrix view used as a GEMM operand.
#[derive(Debug, Clone, Copy)]
pub struct MatRef<'a> {
    pub data: &'a [f32],
    pub row_stride: usize,
    pub col_stride: usize,
}

impl<'a> MatRef<'a> {
    /// Row-major matrix with `cols` columns.
    pub fn row_major(data: &'a [f32], cols: usize) -> Self {
        MatRef { data, row_stride: cols, col_stride: 1 }
    }

    /// Transposed view of a row-major matrix that has `cols` columns.
    pub fn transposed(data: &'a [f32], cols: usize) -> Self {
        MatRef { data, row_stride: 1, col_stride: cols }
    }

    fn covers(&self, rows: usize, cols: usize) -> bool {
        if rows == 0 || cols == 0 {
            return true;
        }
        let last = (rows - 1) * self.row_stride + (cols - 1) * self.col_stride;
        last < self.data.len()
    }
}

/// `c = a · b + beta · c` where `a` is `m × k`, `b` is `k × n` and `c` is a
/// contiguous row-major `m × n` buffer.
///
/// Single-threaded; the summation order depends only on the operand sizes so
/// repeated calls are bit-identical.
pub fn gemm(m: usize, k: usize, n: usize, a: MatRef<'_>, b: MatRef<'_>, beta: f32, c: &mut [f32]) {
    assert!(a.covers(m, k), "gemm: lhs view too small for {m}x{k}");
    assert!(b.covers(k, n), "gemm: rhs view too small for {k}x{n}");
    assert!(c.len() >= m * n, "gemm: output buffer too small for {m}x{n}");
    if m == 0 || n == 0 {
        return;
    }
    if k == 0 {
        for x in &mut c[..m * n] {
            *x *= beta;
        }
        return;
    }
    // SAFETY: the asserts above guarantee every index touched by the kernel
    // lies inside the three slices, and `c` does not alias `a` or `b`.
    unsafe {
        matrixmultiply::sgemm(
            m,
            k,
            n,
            1.0,
            a.data.as_ptr(),
            a.row_stride as isize,
            a.col_stride as isize,
            b.data.as_ptr(),
            b.row_stride as isize,
            b.col_stride as isize,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transposed_operand_matches_explicit_transpose() {
        // a is 2x3, we multiply a^T (3x2) by b (2x2)
        let a = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let b = [1.0, 0.0, 0.0, 1.0];
        let mut c = [0.0; 6];
        gemm(3, 2, 2, MatRef::transposed(&a, 3), MatRef::row_major(&b, 2), 0.0, &mut c);
        assert_eq!(c, [1.0, 4.0, 2.0, 5.0, 3.0, 6.0]);
    }

    #[test]
    fn beta_accumulates() {
        let a = [2.0];
        let b = [3.0];
        let mut c = [1.0];
        gemm(1, 1, 1, MatRef::row_major(&a, 1), MatRef::row_major(&b, 1), 1.0, &mut c);
        assert_eq!(c, [7.0]);
    }
}
