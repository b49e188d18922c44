//! Fixed-size dense helpers for n ≤ 3.
//!
//! Everything lives on the stack as `[f64; 3]` / `[[f64; 3]; 3]`; entries with an
//! index ≥ n are kept at zero.

pub type Vec3 = [f64; 3];
pub type Mat3 = [[f64; 3]; 3];

pub const ZERO3: Mat3 = [[0.0; 3]; 3];

/// Jacobi sweep cap for the symmetric eigensolver.
pub const MAX_SWEEPS: usize = 50;

/// Off-diagonal stopping threshold, relative to the Frobenius norm.
pub const OFFDIAG_TOL: f64 = 1e-14;

pub fn identity(n: usize) -> Mat3 {
    let mut m = ZERO3;
    for (i, row) in m.iter_mut().enumerate().take(n) {
        row[i] = 1.0;
    }
    m
}

pub fn diag(values: &[f64]) -> Mat3 {
    let mut m = ZERO3;
    for (i, v) in values.iter().enumerate() {
        m[i][i] = *v;
    }
    m
}

pub fn mat_mul(n: usize, a: &Mat3, b: &Mat3) -> Mat3 {
    let mut c = ZERO3;
    for i in 0..n {
        for j in 0..n {
            c[i][j] = (0..n).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    c
}

pub fn transpose(n: usize, a: &Mat3) -> Mat3 {
    let mut t = ZERO3;
    for i in 0..n {
        for j in 0..n {
            t[i][j] = a[j][i];
        }
    }
    t
}

/// `Aᵀ A`, symmetric by construction.
pub fn gram(n: usize, a: &Mat3) -> Mat3 {
    let mut c = ZERO3;
    for i in 0..n {
        for j in i..n {
            let v: f64 = (0..n).map(|k| a[k][i] * a[k][j]).sum();
            c[i][j] = v;
            c[j][i] = v;
        }
    }
    c
}

pub fn det(n: usize, a: &Mat3) -> f64 {
    match n {
        2 => a[0][0] * a[1][1] - a[0][1] * a[1][0],
        3 => {
            a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
                - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
                + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
        }
        _ => unreachable!("n is validated upstream"),
    }
}

/// Solves `A x = b` by Cramer's rule; `None` when `A` is singular.
pub fn solve(n: usize, a: &Mat3, b: &Vec3) -> Option<Vec3> {
    let d = det(n, a);
    if d == 0.0 || !d.is_finite() {
        return None;
    }
    let mut x = [0.0; 3];
    for (col, xc) in x.iter_mut().enumerate().take(n) {
        let mut m = *a;
        for row in 0..n {
            m[row][col] = b[row];
        }
        *xc = det(n, &m) / d;
    }
    Some(x)
}

pub fn dot(n: usize, a: &Vec3, b: &Vec3) -> f64 {
    (0..n).map(|i| a[i] * b[i]).sum()
}

pub fn norm(n: usize, a: &Vec3) -> f64 {
    dot(n, a, a).sqrt()
}

pub fn outer(n: usize, a: &Vec3, b: &Vec3) -> Mat3 {
    let mut m = ZERO3;
    for i in 0..n {
        for j in 0..n {
            m[i][j] = a[i] * b[j];
        }
    }
    m
}

pub fn axpy(n: usize, alpha: f64, x: &Mat3, y: &Mat3) -> Mat3 {
    let mut m = ZERO3;
    for i in 0..n {
        for j in 0..n {
            m[i][j] = alpha * x[i][j] + y[i][j];
        }
    }
    m
}

fn frobenius(n: usize, a: &Mat3) -> f64 {
    let mut s = 0.0;
    for row in a.iter().take(n) {
        for v in row.iter().take(n) {
            s += v * v;
        }
    }
    s.sqrt()
}

/// Symmetric eigendecomposition. Eigenvalues come back ascending, with the
/// eigenvectors stored as the columns of the returned matrix.
///
/// n = 2 uses the closed form; n = 3 uses cyclic Jacobi rotations.
pub fn sym_eigen(n: usize, a: &Mat3) -> (Vec3, Mat3) {
    match n {
        2 => sym_eigen2(a),
        3 => jacobi3(a),
        _ => unreachable!("n is validated upstream"),
    }
}

/// Eigenvalues only, ascending.
pub fn sym_eigenvalues(n: usize, a: &Mat3) -> Vec3 {
    sym_eigen(n, a).0
}

fn sym_eigen2(a: &Mat3) -> (Vec3, Mat3) {
    let (p, q, r) = (a[0][0], a[0][1], a[1][1]);
    let half_tr = 0.5 * (p + r);
    let rad = (0.5 * (p - r)).hypot(q);
    let hi = half_tr + rad;
    // the smaller root via the determinant avoids cancellation when both are positive
    let lo = if hi != 0.0 && half_tr > 0.0 {
        (p * r - q * q) / hi
    } else {
        half_tr - rad
    };
    // rotation angle that diagonalizes [[p,q],[q,r]]
    let phi = 0.5 * (2.0 * q).atan2(p - r);
    let (s, c) = phi.sin_cos();
    // column for `hi` is (c, s); column for `lo` is (-s, c)
    let mut v = ZERO3;
    v[0][0] = -s;
    v[1][0] = c;
    v[0][1] = c;
    v[1][1] = s;
    ([lo, hi, 0.0], v)
}

fn jacobi3(a: &Mat3) -> (Vec3, Mat3) {
    let mut m = *a;
    let mut v = identity(3);
    let scale = frobenius(3, a);
    if scale == 0.0 {
        return ([0.0; 3], v);
    }
    let tol = OFFDIAG_TOL * scale;
    for _ in 0..MAX_SWEEPS {
        let off = (m[0][1] * m[0][1] + m[0][2] * m[0][2] + m[1][2] * m[1][2]).sqrt();
        if off <= tol {
            break;
        }
        for (p, q) in [(0, 1), (0, 2), (1, 2)] {
            let apq = m[p][q];
            if apq == 0.0 {
                continue;
            }
            let theta = (m[q][q] - m[p][p]) / (2.0 * apq);
            let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
            let c = 1.0 / (t * t + 1.0).sqrt();
            let s = t * c;
            for k in 0..3 {
                let mkp = m[k][p];
                let mkq = m[k][q];
                m[k][p] = c * mkp - s * mkq;
                m[k][q] = s * mkp + c * mkq;
            }
            for k in 0..3 {
                let mpk = m[p][k];
                let mqk = m[q][k];
                m[p][k] = c * mpk - s * mqk;
                m[q][k] = s * mpk + c * mqk;
            }
            for row in v.iter_mut() {
                let vkp = row[p];
                let vkq = row[q];
                row[p] = c * vkp - s * vkq;
                row[q] = s * vkp + c * vkq;
            }
        }
    }
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| m[i][i].total_cmp(&m[j][j]));
    let vals = [m[order[0]][order[0]], m[order[1]][order[1]], m[order[2]][order[2]]];
    let mut vecs = ZERO3;
    for (dst, &src) in order.iter().enumerate() {
        for row in 0..3 {
            vecs[row][dst] = v[row][src];
        }
    }
    (vals, vecs)
}

/// Singular values of `f` (ascending) from the eigenvalues of `FᵀF`.
pub fn singular_values(n: usize, f: &Mat3) -> Vec3 {
    let c = gram(n, f);
    let mut ev = sym_eigenvalues(n, &c);
    if n == 2 {
        // det C = (det F)² is exact to rounding; recover the small root from it
        let d = det(2, f);
        if ev[1] > 0.0 {
            ev[0] = d * d / ev[1];
        }
    }
    let mut out = [0.0; 3];
    for i in 0..n {
        out[i] = ev[i].max(0.0).sqrt();
    }
    out
}

/// Rotation matrix in 2D or 3D (axis-angle, axis need not be normalized).
pub fn rotation(n: usize, angle: f64, axis: &Vec3) -> Mat3 {
    let (s, c) = angle.sin_cos();
    match n {
        2 => [[c, -s, 0.0], [s, c, 0.0], [0.0; 3]],
        3 => {
            let len = norm(3, axis);
            let [x, y, z] = [axis[0] / len, axis[1] / len, axis[2] / len];
            let t = 1.0 - c;
            [
                [t * x * x + c, t * x * y - s * z, t * x * z + s * y],
                [t * x * y + s * z, t * y * y + c, t * y * z - s * x],
                [t * x * z - s * y, t * y * z + s * x, t * z * z + c],
            ]
        }
        _ => unreachable!("n is validated upstream"),
    }
}
