//! Derivative-free minimization: Powell's direction-set method with Brent
//! line searches.

/// Stopping rules for [`powell`].
#[derive(Clone, Copy, Debug)]
pub struct PowellOptions {
    /// Stop when a full sweep improves f by less than this (absolute).
    pub ftol: f64,
    /// Fractional tolerance of each line minimization.
    pub line_tol: f64,
    /// Function-evaluation cap per sweep; 0 means 50·N.
    pub max_evals_per_sweep: usize,
    pub max_sweeps: usize,
    /// Stop as soon as f ≤ target.
    pub target: f64,
}

impl Default for PowellOptions {
    fn default() -> Self {
        Self { ftol: 1e-10, line_tol: 1e-12, max_evals_per_sweep: 0, max_sweeps: 200, target: f64::NEG_INFINITY }
    }
}

#[derive(Clone, Debug)]
pub struct PowellOutcome {
    pub x: Vec<f64>,
    pub f: f64,
    pub evals: usize,
    pub sweeps: usize,
}

const GOLD: f64 = 1.618_033_988_749_895;
const CGOLD: f64 = 0.381_966_011_250_105;

struct Line<'a, F> {
    f: &'a mut F,
    x: &'a [f64],
    d: &'a [f64],
    buf: Vec<f64>,
    evals: usize,
}

impl<F: FnMut(&[f64]) -> f64> Line<'_, F> {
    fn eval(&mut self, t: f64) -> f64 {
        for ((b, &x), &d) in self.buf.iter_mut().zip(self.x).zip(self.d) {
            *b = x + t * d;
        }
        self.evals += 1;
        let v = (self.f)(&self.buf);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    }
}

/// Brackets a minimum starting from (0, f0) and (1, ·) along the line.
fn bracket<F: FnMut(&[f64]) -> f64>(line: &mut Line<'_, F>, f0: f64, cap: usize) -> (f64, f64, f64, f64, f64, f64) {
    let (mut a, mut fa) = (0.0, f0);
    let (mut b, mut fb) = (1.0, line.eval(1.0));
    if fb > fa {
        std::mem::swap(&mut a, &mut b);
        std::mem::swap(&mut fa, &mut fb);
    }
    let mut c = b + GOLD * (b - a);
    let mut fc = line.eval(c);
    while fb > fc && line.evals < cap {
        let r = (b - a) * (fb - fc);
        let q = (b - c) * (fb - fa);
        let denom = 2.0 * (q - r).abs().max(1e-20).copysign(q - r);
        let mut u = b - ((b - c) * q - (b - a) * r) / denom;
        let ulim = b + 100.0 * (c - b);
        let fu;
        if (b - u) * (u - c) > 0.0 {
            let f = line.eval(u);
            if f < fc {
                return (b, u, c, fb, f, fc);
            } else if f > fb {
                return (a, b, u, fa, fb, f);
            }
            u = c + GOLD * (c - b);
            fu = line.eval(u);
        } else if (c - u) * (u - ulim) > 0.0 {
            let f = line.eval(u);
            if f < fc {
                b = c;
                c = u;
                u = c + GOLD * (c - b);
                fb = fc;
                fc = f;
                fu = line.eval(u);
            } else {
                fu = f;
            }
        } else if (u - ulim) * (ulim - c) >= 0.0 {
            u = ulim;
            fu = line.eval(u);
        } else {
            u = c + GOLD * (c - b);
            fu = line.eval(u);
        }
        a = b;
        b = c;
        c = u;
        fa = fb;
        fb = fc;
        fc = fu;
    }
    (a, b, c, fa, fb, fc)
}

/// Brent's parabolic/golden-section minimizer on a bracket (a, b, c).
fn brent<F: FnMut(&[f64]) -> f64>(line: &mut Line<'_, F>, br: (f64, f64, f64, f64, f64, f64), tol: f64, cap: usize) -> (f64, f64) {
    let (ax, bx, cx, _, fbx, _) = br;
    let (mut a, mut b) = if ax < cx { (ax, cx) } else { (cx, ax) };
    let (mut x, mut w, mut v) = (bx, bx, bx);
    let (mut fx, mut fw, mut fv) = (fbx, fbx, fbx);
    let mut d: f64 = 0.0;
    let mut e: f64 = 0.0;
    for _ in 0..200 {
        if line.evals >= cap {
            break;
        }
        let xm = 0.5 * (a + b);
        let tol1 = tol * x.abs() + 1e-15;
        let tol2 = 2.0 * tol1;
        if (x - xm).abs() <= tol2 - 0.5 * (b - a) {
            break;
        }
        if e.abs() > tol1 {
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            }
            q = q.abs();
            let etemp = e;
            e = d;
            if p.abs() >= (0.5 * q * etemp).abs() || p <= q * (a - x) || p >= q * (b - x) {
                e = if x >= xm { a - x } else { b - x };
                d = CGOLD * e;
            } else {
                d = p / q;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = tol1.copysign(xm - x);
                }
            }
        } else {
            e = if x >= xm { a - x } else { b - x };
            d = CGOLD * e;
        }
        let u = if d.abs() >= tol1 { x + d } else { x + tol1.copysign(d) };
        let fu = line.eval(u);
        if fu <= fx {
            if u >= x {
                a = x;
            } else {
                b = x;
            }
            v = w;
            w = x;
            x = u;
            fv = fw;
            fw = fx;
            fx = fu;
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                v = w;
                w = u;
                fv = fw;
                fw = fu;
            } else if fu <= fv || v == x || v == w {
                v = u;
                fv = fu;
            }
        }
    }
    (x, fx)
}

/// Minimizes f from x0 along direction d; returns (step, value, evals).
/// Moves only when the value improves on f0.
pub fn line_minimize<F: FnMut(&[f64]) -> f64>(f: &mut F, x0: &[f64], d: &[f64], f0: f64, tol: f64, cap: usize) -> (f64, f64, usize) {
    let mut line = Line { f, x: x0, d, buf: vec![0.0; x0.len()], evals: 0 };
    let br = bracket(&mut line, f0, cap);
    let (t, ft) = brent(&mut line, br, tol, cap);
    if ft < f0 {
        (t, ft, line.evals)
    } else {
        (0.0, f0, line.evals)
    }
}

/// Powell's method starting from unit coordinate directions. The returned
/// value never exceeds f(x0).
pub fn powell<F: FnMut(&[f64]) -> f64>(mut f: F, x0: &[f64], opts: &PowellOptions) -> PowellOutcome {
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut fx = f(&x);
    let mut evals = 1;
    if n == 0 || fx <= opts.target {
        return PowellOutcome { x, f: fx, evals, sweeps: 0 };
    }
    let cap = if opts.max_evals_per_sweep == 0 { 50 * n } else { opts.max_evals_per_sweep };
    let mut dirs: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    let mut sweeps = 0;
    while sweeps < opts.max_sweeps {
        sweeps += 1;
        let f_start = fx;
        let x_start = x.clone();
        let mut sweep_evals = 0;
        let mut biggest = (0usize, 0.0f64);
        for (i, d) in dirs.iter().enumerate() {
            if sweep_evals >= cap || fx <= opts.target {
                break;
            }
            let before = fx;
            let (t, ft, e) = line_minimize(&mut f, &x, d, fx, opts.line_tol, cap - sweep_evals);
            sweep_evals += e;
            if t != 0.0 {
                for (xi, di) in x.iter_mut().zip(d) {
                    *xi += t * di;
                }
                fx = ft;
            }
            if before - fx > biggest.1 {
                biggest = (i, before - fx);
            }
        }
        evals += sweep_evals;
        if fx <= opts.target || f_start - fx <= opts.ftol {
            break;
        }
        // extrapolated point and direction replacement
        let dnew: Vec<f64> = x.iter().zip(&x_start).map(|(a, b)| a - b).collect();
        let xe: Vec<f64> = x.iter().zip(&dnew).map(|(a, d)| a + d).collect();
        let fe = f(&xe);
        evals += 1;
        if fe < f_start {
            let t = 2.0 * (f_start - 2.0 * fx + fe) * (f_start - fx - biggest.1).powi(2) - biggest.1 * (f_start - fe).powi(2);
            if t < 0.0 {
                let (s, fs, e) = line_minimize(&mut f, &x, &dnew, fx, opts.line_tol, cap);
                evals += e;
                if s != 0.0 {
                    for (xi, di) in x.iter_mut().zip(&dnew) {
                        *xi += s * di;
                    }
                    fx = fs;
                }
                dirs[biggest.0] = dirs[n - 1].clone();
                dirs[n - 1] = dnew;
            }
        }
    }
    PowellOutcome { x, f: fx, evals, sweeps }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_bowl() {
        let f = |x: &[f64]| (x[0] - 1.0).powi(2) + 10.0 * (x[1] + 2.0).powi(2) + (x[0] - x[1]).powi(2) * 0.5;
        let out = powell(f, &[0.0, 0.0], &PowellOptions::default());
        let g0 = 2.0 * (out.x[0] - 1.0) + (out.x[0] - out.x[1]);
        let g1 = 20.0 * (out.x[1] + 2.0) - (out.x[0] - out.x[1]);
        assert!(g0.abs() < 1e-5 && g1.abs() < 1e-5, "{:?}", out);
    }

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| 100.0 * (x[1] - x[0] * x[0]).powi(2) + (1.0 - x[0]).powi(2);
        let opts = PowellOptions { ftol: 1e-16, max_sweeps: 2000, ..Default::default() };
        let out = powell(f, &[-1.2, 1.0], &opts);
        assert!(out.f < 1e-10, "{:?}", out);
    }

    #[test]
    fn never_worse_and_stops_at_minimum() {
        let f = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>();
        let out = powell(f, &[0.0; 4], &PowellOptions::default());
        assert_eq!(out.x, vec![0.0; 4]);
        assert_eq!(out.f, 0.0);
        let g = |x: &[f64]| x.iter().map(|v| v.cos()).sum::<f64>();
        let x0 = [0.3, 2.0, -1.0];
        let out = powell(g, &x0, &PowellOptions::default());
        assert!(out.f <= g(&x0));
        assert!((out.f + 3.0).abs() < 1e-10);
    }
}
