//! Row-major dense affine maps on top of `matrixmultiply::dgemm`.

use matrixmultiply::dgemm;

/// `y[b×o] = x[b×i] · w[i×o] + bias`.
pub fn affine(x: &[f64], w: &[f64], bias: &[f64], batch: usize, inp: usize, out: usize, y: &mut [f64]) {
    assert!(x.len() >= batch * inp && w.len() == inp * out && bias.len() == out && y.len() >= batch * out);
    for row in y[..batch * out].chunks_exact_mut(out) {
        row.copy_from_slice(bias);
    }
    if batch == 0 || inp == 0 {
        return;
    }
    // SAFETY: dimensions and strides were checked against the slice lengths above.
    unsafe {
        dgemm(
            batch, inp, out, 1.0,
            x.as_ptr(), inp as isize, 1,
            w.as_ptr(), out as isize, 1,
            1.0,
            y.as_mut_ptr(), out as isize, 1,
        );
    }
}

/// Accumulates `gw += xᵀ · dy` and `gb += Σ_rows dy`.
pub fn affine_grad_params(
    x: &[f64],
    dy: &[f64],
    batch: usize,
    inp: usize,
    out: usize,
    gw: &mut [f64],
    gb: &mut [f64],
) {
    assert!(x.len() >= batch * inp && dy.len() >= batch * out && gw.len() == inp * out && gb.len() == out);
    for row in dy[..batch * out].chunks_exact(out) {
        for (g, d) in gb.iter_mut().zip(row) {
            *g += d;
        }
    }
    if batch == 0 || inp == 0 {
        return;
    }
    // SAFETY: as above; `x` is read transposed through swapped strides.
    unsafe {
        dgemm(
            inp, batch, out, 1.0,
            x.as_ptr(), 1, inp as isize,
            dy.as_ptr(), out as isize, 1,
            1.0,
            gw.as_mut_ptr(), out as isize, 1,
        );
    }
}

/// `dx[b×i] = dy[b×o] · wᵀ`.
pub fn affine_grad_input(dy: &[f64], w: &[f64], batch: usize, inp: usize, out: usize, dx: &mut [f64]) {
    assert!(dy.len() >= batch * out && w.len() == inp * out && dx.len() >= batch * inp);
    if batch == 0 || inp == 0 {
        return;
    }
    if out == 0 {
        dx[..batch * inp].fill(0.0);
        return;
    }
    // SAFETY: as above; `w` is read transposed through swapped strides.
    unsafe {
        dgemm(
            batch, out, inp, 1.0,
            dy.as_ptr(), out as isize, 1,
            w.as_ptr(), 1, out as isize,
            0.0,
            dx.as_mut_ptr(), inp as isize, 1,
        );
    }
}
