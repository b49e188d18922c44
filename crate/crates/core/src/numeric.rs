//! Small deterministic 1D/2D minimizers, root bracketing and the Halton sequence.

/// Inverse golden ratio `(√5 − 1)/2`.
const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Minimizes a unimodal `f` on `[lo, hi]`; returns `(x, f(x))`.
///
/// The better of the final bracket interior point and the two endpoints is returned, so a
/// minimum attained at an endpoint is never missed.
pub fn golden_section(mut f: impl FnMut(f64) -> f64, lo: f64, hi: f64, xtol: f64) -> (f64, f64) {
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut iters = 0;
    while (b - a).abs() > xtol && iters < 200 {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
        iters += 1;
    }
    let mut best = if fc <= fd { (c, fc) } else { (d, fd) };
    for x in [lo, hi] {
        let fx = f(x);
        if fx < best.1 {
            best = (x, fx);
        }
    }
    best
}

/// Nelder–Mead simplex minimization from `x0` with per-coordinate initial steps.
///
/// Stops when the spread of simplex values falls below `ftol` and the simplex diameter
/// below `xtol`, or after `max_iter` iterations. Returns `(x, f(x), iterations)`.
pub fn nelder_mead(
    mut f: impl FnMut(&[f64]) -> f64,
    x0: &[f64],
    step: &[f64],
    ftol: f64,
    xtol: f64,
    max_iter: usize,
) -> (Vec<f64>, f64, usize) {
    let dim = x0.len();
    assert_eq!(step.len(), dim, "one step per coordinate");
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(dim + 1);
    simplex.push(x0.to_vec());
    for k in 0..dim {
        let mut v = x0.to_vec();
        v[k] += step[k];
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| f(v)).collect();
    let mut iters = 0;
    while iters < max_iter {
        let mut order: Vec<usize> = (0..=dim).collect();
        order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let spread = values[dim] - values[0];
        let diameter = simplex[1..]
            .iter()
            .map(|v| {
                v.iter()
                    .zip(&simplex[0])
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if spread <= ftol && diameter <= xtol {
            break;
        }
        iters += 1;

        let centroid: Vec<f64> = (0..dim)
            .map(|k| simplex[..dim].iter().map(|v| v[k]).sum::<f64>() / dim as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            (0..dim)
                .map(|k| centroid[k] + t * (simplex[dim][k] - centroid[k]))
                .collect()
        };
        let xr = along(-1.0);
        let fr = f(&xr);
        if fr < values[0] {
            let xe = along(-2.0);
            let fe = f(&xe);
            if fe < fr {
                simplex[dim] = xe;
                values[dim] = fe;
            } else {
                simplex[dim] = xr;
                values[dim] = fr;
            }
        } else if fr < values[dim - 1] {
            simplex[dim] = xr;
            values[dim] = fr;
        } else {
            let (xc, fc) = if fr < values[dim] {
                let x = along(-0.5);
                let fx = f(&x);
                (x, fx)
            } else {
                let x = along(0.5);
                let fx = f(&x);
                (x, fx)
            };
            if fc < values[dim].min(fr) {
                simplex[dim] = xc;
                values[dim] = fc;
            } else {
                for i in 1..=dim {
                    let shrunk: Vec<f64> = (0..dim)
                        .map(|k| simplex[0][k] + 0.5 * (simplex[i][k] - simplex[0][k]))
                        .collect();
                    values[i] = f(&shrunk);
                    simplex[i] = shrunk;
                }
            }
        }
    }
    let best = (0..=dim)
        .min_by(|&i, &j| values[i].total_cmp(&values[j]))
        .expect("simplex is non-empty");
    (simplex[best].clone(), values[best], iters)
}

/// Bisection for the last `x` in `[lo, hi]` with `pred(x)` true, assuming `pred(lo)` holds
/// and `pred(hi)` fails.
pub fn bisect_last_true(mut pred: impl FnMut(f64) -> bool, mut lo: f64, mut hi: f64, iters: usize) -> f64 {
    for _ in 0..iters {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if pred(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Van der Corput radical inverse of `index` in `base`; the Halton coordinate.
pub fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut scale = inv;
    let mut out = 0.0;
    while index > 0 {
        out += (index % base) as f64 * scale;
        index /= base;
        scale *= inv;
    }
    out
}

const HALTON_BASES: [u64; 3] = [2, 3, 5];

/// Halton point `index` (≥ 1 recommended; index 0 is the origin) in `[0,1)^dim`, dim ≤ 3.
pub fn halton(index: u64, dim: usize) -> Vec<f64> {
    assert!(dim <= HALTON_BASES.len(), "Halton bases cover up to 3 dimensions");
    HALTON_BASES[..dim]
        .iter()
        .map(|&b| radical_inverse(index, b))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_section_finds_parabola_minimum() {
        let (x, fx) = golden_section(|x| (x - 0.3).powi(2) + 1.0, -1.0, 2.0, 1e-10);
        // f is flat to rounding within ~√ε of the minimizer
        assert!((x - 0.3).abs() < 1e-7);
        assert!((fx - 1.0).abs() < 1e-15);
    }

    #[test]
    fn golden_section_keeps_endpoint_minima() {
        let (x, fx) = golden_section(|x| x, 0.0, 1.0, 1e-12);
        assert_eq!((x, fx), (0.0, 0.0));
        let (x, _) = golden_section(|x| -x, 0.0, 1.0, 1e-12);
        assert_eq!(x, 1.0);
    }

    #[test]
    fn nelder_mead_on_rosenbrock() {
        let rosen = |v: &[f64]| (1.0 - v[0]).powi(2) + 100.0 * (v[1] - v[0] * v[0]).powi(2);
        let (x, fx, _) = nelder_mead(rosen, &[-1.2, 1.0], &[0.1, 0.1], 1e-20, 1e-12, 5000);
        assert!((x[0] - 1.0).abs() < 1e-6, "{x:?}");
        assert!((x[1] - 1.0).abs() < 1e-6, "{x:?}");
        assert!(fx < 1e-12);
    }

    #[test]
    fn nelder_mead_in_one_dimension() {
        let (x, _, _) = nelder_mead(|v| (v[0] + 2.0).powi(2), &[0.0], &[0.5], 1e-20, 1e-12, 500);
        assert!((x[0] + 2.0).abs() < 1e-8);
    }

    #[test]
    fn bisect_brackets_threshold() {
        let x = bisect_last_true(|x| x * x <= 2.0, 0.0, 2.0, 80);
        assert!((x - 2f64.sqrt()).abs() < 1e-15);
        assert!(x * x <= 2.0);
    }

    #[test]
    fn halton_known_values() {
        assert_eq!(radical_inverse(1, 2), 0.5);
        assert_eq!(radical_inverse(2, 2), 0.25);
        assert_eq!(radical_inverse(3, 2), 0.75);
        assert!((radical_inverse(1, 3) - 1.0 / 3.0).abs() < 1e-16);
        assert!((radical_inverse(5, 3) - 7.0 / 9.0).abs() < 1e-15);
        assert_eq!(halton(0, 2), vec![0.0, 0.0]);
        let p = halton(7, 3);
        assert_eq!(p[0], 0.875);
        assert!(p.iter().all(|&x| (0.0..1.0).contains(&x)));
    }
}
