use super::{is_primitive, is_row_stochastic, DenseMatrix};
use crate::error::{invalid, Error, Result};
use crate::tolerance;

/// Dominant eigenvalue of a row-stochastic matrix with its left
/// eigenvector normalized to unit sum.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub value: f64,
    pub left_vector: Vec<f64>,
    /// ‖w′A − λw′‖_∞ at termination.
    pub residual: f64,
    pub iterations: usize,
}

/// Left Perron vector of a primitive row-stochastic matrix by power
/// iteration on `A′`, renormalizing to unit 1-norm after every step.
pub fn dominant_left_eigenvector(a: &DenseMatrix, tol: f64, max_iter: usize) -> Result<EigenPair> {
    if !is_row_stochastic(a, tolerance::STOCHASTIC.max(tol))? {
        return Err(invalid("dominant_left_eigenvector needs a row-stochastic matrix"));
    }
    if !is_primitive(a)? {
        return Err(invalid("dominant_left_eigenvector needs a primitive matrix"));
    }
    let n = a.rows();
    let mut w = vec![1.0 / n as f64; n];
    let mut residual = f64::INFINITY;
    for it in 1..=max_iter {
        let mut next = a.left_mul_vec(&w)?;
        residual = next.iter().zip(&w).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        let sum: f64 = next.iter().sum();
        next.iter_mut().for_each(|v| *v /= sum);
        w = next;
        if residual <= tol {
            // Report the residual of the vector actually returned.
            let check = a.left_mul_vec(&w)?;
            let residual = check.iter().zip(&w).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            return Ok(EigenPair { value: 1.0, left_vector: w, residual, iterations: it });
        }
    }
    Err(Error::NotConverged { iterations: max_iter, residual })
}

/// All eigenvalues of a square matrix as `(re, im)` pairs, unordered.
///
/// Hessenberg reduction by stabilized elimination followed by the
/// Francis double-shift QR iteration.
pub fn eigenvalues(a: &DenseMatrix) -> Result<Vec<(f64, f64)>> {
    if !a.is_square() {
        return Err(invalid("eigenvalues of a non-square matrix"));
    }
    let n = a.rows();
    let mut h: Vec<Vec<f64>> = (0..n).map(|i| a.row(i).to_vec()).collect();
    hessenberg(&mut h);
    hessenberg_qr(&mut h)
}

/// Second-largest eigenvalue modulus |λ_{n−1}|.
///
/// Eigenvalues are sorted by modulus; a complex-conjugate pair contributes
/// its shared modulus twice. A 1×1 matrix has no second eigenvalue and
/// yields 0.
pub fn second_eigenvalue_modulus(a: &DenseMatrix) -> Result<f64> {
    let mut moduli: Vec<f64> = eigenvalues(a)?.into_iter().map(|(re, im)| re.hypot(im)).collect();
    moduli.sort_by(|x, y| y.total_cmp(x));
    Ok(moduli.get(1).copied().unwrap_or(0.0))
}

fn hessenberg(a: &mut [Vec<f64>]) {
    let n = a.len();
    for m in 1..n.saturating_sub(1) {
        let mut x = 0.0f64;
        let mut pivot = m;
        for j in m..n {
            if a[j][m - 1].abs() > x.abs() {
                x = a[j][m - 1];
                pivot = j;
            }
        }
        if pivot != m {
            a.swap(pivot, m);
            for row in a.iter_mut() {
                row.swap(pivot, m);
            }
        }
        if x != 0.0 {
            for i in (m + 1)..n {
                let mut y = a[i][m - 1];
                if y != 0.0 {
                    y /= x;
                    a[i][m - 1] = 0.0;
                    for j in m..n {
                        a[i][j] -= y * a[m][j];
                    }
                    for row in a.iter_mut() {
                        row[m] += y * row[i];
                    }
                }
            }
        }
    }
}

fn sign(a: f64, b: f64) -> f64 {
    if b >= 0.0 {
        a.abs()
    } else {
        -a.abs()
    }
}

fn hessenberg_qr(a: &mut [Vec<f64>]) -> Result<Vec<(f64, f64)>> {
    const MAX_ITS: usize = 60;
    let n = a.len();
    let mut out = vec![(0.0, 0.0); n];
    if n == 0 {
        return Ok(out);
    }
    let mut anorm = 0.0;
    for i in 0..n {
        for j in i.saturating_sub(1)..n {
            anorm += a[i][j].abs();
        }
    }
    let eps = f64::EPSILON;
    let mut nn = n as isize - 1;
    let mut t = 0.0;
    while nn >= 0 {
        let mut its = 0;
        loop {
            let nu = nn as usize;
            // Look for a negligible subdiagonal element.
            let mut l = nu;
            while l > 0 {
                let mut s = a[l - 1][l - 1].abs() + a[l][l].abs();
                if s == 0.0 {
                    s = anorm;
                }
                if a[l][l - 1].abs() <= eps * s {
                    a[l][l - 1] = 0.0;
                    break;
                }
                l -= 1;
            }
            let mut x = a[nu][nu];
            if l == nu {
                out[nu] = (x + t, 0.0);
                nn -= 1;
            } else {
                let mut y = a[nu - 1][nu - 1];
                let mut w = a[nu][nu - 1] * a[nu - 1][nu];
                if l == nu - 1 {
                    let p = 0.5 * (y - x);
                    let q = p * p + w;
                    let z = q.abs().sqrt();
                    x += t;
                    if q >= 0.0 {
                        let z = p + sign(z, p);
                        out[nu - 1] = (x + z, 0.0);
                        out[nu] = (if z != 0.0 { x - w / z } else { x + z }, 0.0);
                    } else {
                        out[nu - 1] = (x + p, z);
                        out[nu] = (x + p, -z);
                    }
                    nn -= 2;
                } else {
                    if its == MAX_ITS {
                        return Err(Error::NotConverged { iterations: its, residual: a[nu][nu - 1].abs() });
                    }
                    if its == 10 || its == 20 {
                        // Exceptional shift.
                        t += x;
                        for (i, row) in a.iter_mut().enumerate().take(nu + 1) {
                            row[i] -= x;
                        }
                        let s = a[nu][nu - 1].abs() + a[nu - 1][nu - 2].abs();
                        x = 0.75 * s;
                        y = x;
                        w = -0.4375 * s * s;
                    }
                    its += 1;
                    double_shift_step(a, l, nu, x, y, w);
                }
            }
            if nn < 0 || l + 1 >= nn as usize {
                break;
            }
        }
    }
    Ok(out)
}

/// One implicit double-shift QR sweep on the active block `l..=nn`.
fn double_shift_step(a: &mut [Vec<f64>], l: usize, nn: usize, x: f64, y: f64, w: f64) {
    let eps = f64::EPSILON;
    let mut m = nn - 2;
    let (mut p, mut q, mut r);
    loop {
        let z = a[m][m];
        let rr = x - z;
        let ss = y - z;
        p = (rr * ss - w) / a[m + 1][m] + a[m][m + 1];
        q = a[m + 1][m + 1] - z - rr - ss;
        r = a[m + 2][m + 1];
        let s = p.abs() + q.abs() + r.abs();
        p /= s;
        q /= s;
        r /= s;
        if m == l {
            break;
        }
        let u = a[m][m - 1].abs() * (q.abs() + r.abs());
        let v = p.abs() * (a[m - 1][m - 1].abs() + z.abs() + a[m + 1][m + 1].abs());
        if u <= eps * v {
            break;
        }
        m -= 1;
    }
    for i in m..(nn - 1) {
        a[i + 2][i] = 0.0;
        if i != m {
            a[i + 2][i - 1] = 0.0;
        }
    }
    let mut xk = 0.0;
    for k in m..nn {
        if k != m {
            p = a[k][k - 1];
            q = a[k + 1][k - 1];
            r = if k + 1 != nn { a[k + 2][k - 1] } else { 0.0 };
            xk = p.abs() + q.abs() + r.abs();
            if xk != 0.0 {
                p /= xk;
                q /= xk;
                r /= xk;
            }
        }
        let s = sign((p * p + q * q + r * r).sqrt(), p);
        if s == 0.0 {
            continue;
        }
        if k == m {
            if l != m {
                a[k][k - 1] = -a[k][k - 1];
            }
        } else {
            a[k][k - 1] = -s * xk;
        }
        p += s;
        let x = p / s;
        let y = q / s;
        let z = r / s;
        q /= p;
        r /= p;
        for j in k..=nn {
            let mut pp = a[k][j] + q * a[k + 1][j];
            if k + 1 != nn {
                pp += r * a[k + 2][j];
                a[k + 2][j] -= pp * z;
            }
            a[k + 1][j] -= pp * y;
            a[k][j] -= pp * x;
        }
        let mmin = nn.min(k + 3);
        for row in a.iter_mut().take(mmin + 1).skip(l) {
            let mut pp = x * row[k] + y * row[k + 1];
            if k + 1 != nn {
                pp += z * row[k + 2];
                row[k + 2] -= pp * r;
            }
            row[k + 1] -= pp * q;
            row[k] -= pp;
        }
    }
}
