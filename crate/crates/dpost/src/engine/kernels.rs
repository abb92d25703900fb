//! Dense f64 kernels. Activations are stored lane-major (`[feature][n]`
//! with `n` contiguous). The matmuls tile the `n` axis and pack the operand
//! tile so the inner loops run out of L1 with register accumulators; on one
//! core this is what makes batched decoding and training fast.

/// Tile width along the position axis.
const NB: usize = 64;

/// y[M][N] += W[M][K] · X[K][N]
pub fn mm_acc(y: &mut [f64], w: &[f64], x: &[f64], m: usize, k: usize, n: usize) {
    assert_eq!(y.len(), m * n);
    assert_eq!(w.len(), m * k);
    assert_eq!(x.len(), k * n);
    let mut xt = vec![0.0; k * NB];
    let mut j0 = 0;
    while j0 < n {
        let nb = NB.min(n - j0);
        for ki in 0..k {
            xt[ki * NB..ki * NB + nb].copy_from_slice(&x[ki * n + j0..ki * n + j0 + nb]);
        }
        if nb == NB {
            for mi in 0..m {
                let mut acc = [0.0f64; NB];
                let wrow = &w[mi * k..(mi + 1) * k];
                for (ki, &a) in wrow.iter().enumerate() {
                    let xr = &xt[ki * NB..(ki + 1) * NB];
                    for j in 0..NB {
                        acc[j] += a * xr[j];
                    }
                }
                let yrow = &mut y[mi * n + j0..mi * n + j0 + NB];
                for j in 0..NB {
                    yrow[j] += acc[j];
                }
            }
        } else {
            for mi in 0..m {
                let mut acc = [0.0f64; NB];
                let wrow = &w[mi * k..(mi + 1) * k];
                for (ki, &a) in wrow.iter().enumerate() {
                    let xr = &xt[ki * NB..ki * NB + nb];
                    for j in 0..nb {
                        acc[j] += a * xr[j];
                    }
                }
                let yrow = &mut y[mi * n + j0..mi * n + j0 + nb];
                for j in 0..nb {
                    yrow[j] += acc[j];
                }
            }
        }
        j0 += nb;
    }
}

/// dX[K][N] += W[M][K]ᵀ · dY[M][N]
pub fn mm_t_acc(dx: &mut [f64], w: &[f64], dy: &[f64], m: usize, k: usize, n: usize) {
    assert_eq!(dx.len(), k * n);
    assert_eq!(w.len(), m * k);
    assert_eq!(dy.len(), m * n);
    // transpose W once, then it is a plain mm_acc
    let mut wt = vec![0.0; k * m];
    for mi in 0..m {
        for ki in 0..k {
            wt[ki * m + mi] = w[mi * k + ki];
        }
    }
    mm_acc(dx, &wt, dy, k, m, n);
}

/// dW[M][K] += dY[M][N] · X[K][N]ᵀ
pub fn mm_outer_acc(dw: &mut [f64], dy: &[f64], x: &[f64], m: usize, k: usize, n: usize) {
    assert_eq!(dw.len(), m * k);
    assert_eq!(dy.len(), m * n);
    assert_eq!(x.len(), k * n);
    let mut dyt = vec![0.0; m * NB];
    let mut xt = vec![0.0; k * NB];
    let mut j0 = 0;
    while j0 < n {
        let nb = NB.min(n - j0);
        for mi in 0..m {
            dyt[mi * NB..mi * NB + nb].copy_from_slice(&dy[mi * n + j0..mi * n + j0 + nb]);
        }
        for ki in 0..k {
            xt[ki * NB..ki * NB + nb].copy_from_slice(&x[ki * n + j0..ki * n + j0 + nb]);
        }
        for mi in 0..m {
            let dyrow = &dyt[mi * NB..mi * NB + nb];
            let dwrow = &mut dw[mi * k..(mi + 1) * k];
            for (ki, dwv) in dwrow.iter_mut().enumerate() {
                let xrow = &xt[ki * NB..ki * NB + nb];
                let mut acc = 0.0;
                for (dyj, xj) in dyrow.iter().zip(xrow) {
                    acc += *dyj * *xj;
                }
                *dwv += acc;
            }
        }
        j0 += nb;
    }
}

pub fn add_assign(dst: &mut [f64], src: &[f64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += *s;
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_mm(w: &[f64], x: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
        let mut y = vec![0.0; m * n];
        for mi in 0..m {
            for ni in 0..n {
                for ki in 0..k {
                    y[mi * n + ni] += w[mi * k + ki] * x[ki * n + ni];
                }
            }
        }
        y
    }

    #[test]
    fn kernels_match_naive() {
        // n values straddle the tile boundary
        for (m, k, n) in [(5, 7, 3), (4, 3, 64), (3, 5, 65), (8, 16, 200)] {
            let w: Vec<f64> = (0..m * k).map(|i| (i as f64 * 0.7).sin()).collect();
            let x: Vec<f64> = (0..k * n).map(|i| (i as f64 * 1.3).cos()).collect();
            let mut y = vec![0.0; m * n];
            mm_acc(&mut y, &w, &x, m, k, n);
            let want = naive_mm(&w, &x, m, k, n);
            for (a, b) in y.iter().zip(&want) {
                assert!((a - b).abs() < 1e-12);
            }

            let dy: Vec<f64> = (0..m * n).map(|i| (i as f64 * 0.11).sin()).collect();
            let mut dx = vec![0.0; k * n];
            mm_t_acc(&mut dx, &w, &dy, m, k, n);
            let mut wt = vec![0.0; k * m];
            for mi in 0..m {
                for ki in 0..k {
                    wt[ki * m + mi] = w[mi * k + ki];
                }
            }
            let want = naive_mm(&wt, &dy, k, m, n);
            for (a, b) in dx.iter().zip(&want) {
                assert!((a - b).abs() < 1e-12);
            }

            let mut dw = vec![0.0; m * k];
            mm_outer_acc(&mut dw, &dy, &x, m, k, n);
            for mi in 0..m {
                for ki in 0..k {
                    let mut want = 0.0;
                    for ni in 0..n {
                        want += dy[mi * n + ni] * x[ki * n + ni];
                    }
                    assert!((dw[mi * k + ki] - want).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn accumulation_preserved() {
        let (m, k, n) = (3, 4, 70);
        let w: Vec<f64> = (0..m * k).map(|i| i as f64).collect();
        let x: Vec<f64> = (0..k * n).map(|i| (i % 5) as f64).collect();
        let mut y = vec![1.5; m * n];
        mm_acc(&mut y, &w, &x, m, k, n);
        let mut want = naive_mm(&w, &x, m, k, n);
        for v in want.iter_mut() {
            *v += 1.5;
        }
        for (a, b) in y.iter().zip(&want) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
