//! Bounded, deterministic derivative-free minimiser: a coarse scan over the
//! box followed by Nelder–Mead refinement in unit-cube coordinates.

/// One search dimension. Same-sign bounds are searched in log|x|.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
}

impl Axis {
    pub fn new(lo: f64, hi: f64) -> Option<Self> {
        (lo.is_finite() && hi.is_finite() && lo < hi).then_some(Self { lo, hi })
    }

    fn logarithmic(&self) -> bool {
        (self.lo > 0.0 && self.hi > 0.0) || (self.lo < 0.0 && self.hi < 0.0)
    }

    pub fn to_physical(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        if self.logarithmic() {
            let s = self.lo.signum();
            let (a, b) = ((self.lo.abs()).ln(), (self.hi.abs()).ln());
            s * (a + (b - a) * u).exp()
        } else {
            self.lo + (self.hi - self.lo) * u
        }
    }

    pub fn to_unit(&self, x: f64) -> f64 {
        let u = if self.logarithmic() {
            let (a, b) = ((self.lo.abs()).ln(), (self.hi.abs()).ln());
            ((x.abs()).ln() - a) / (b - a)
        } else {
            (x - self.lo) / (self.hi - self.lo)
        };
        u.clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Options {
    /// Scan points per axis (≥ 2), or 0 to skip the scan.
    pub scan_points: usize,
    /// Stop once simplex values agree to this much.
    pub f_tol: f64,
    /// and the simplex diameter (unit coordinates) is below this.
    pub x_tol: f64,
    pub max_evals: usize,
}

impl Default for Options {
    fn default() -> Self {
        Self { scan_points: 9, f_tol: 1e-6, x_tol: 1e-6, max_evals: 2000 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub x: Vec<f64>,
    pub value: f64,
    pub best: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub initial_value: f64,
    pub evals: usize,
    pub converged: bool,
    pub trace: Vec<Evaluation>,
}

struct Counter<'a, F> {
    f: F,
    axes: &'a [Axis],
    trace: Vec<Evaluation>,
    best_u: Vec<f64>,
    best: f64,
    limit: usize,
}

impl<F: FnMut(&[f64]) -> f64> Counter<'_, F> {
    fn exhausted(&self) -> bool {
        self.trace.len() >= self.limit
    }

    fn eval(&mut self, u: &[f64]) -> f64 {
        let x: Vec<f64> = u.iter().zip(self.axes).map(|(&u, a)| a.to_physical(u)).collect();
        let v = (self.f)(&x);
        let v = if v.is_nan() { f64::INFINITY } else { v };
        if v < self.best || self.trace.is_empty() {
            self.best = v;
            self.best_u = u.to_vec();
        }
        self.trace.push(Evaluation { x, value: v, best: self.best });
        v
    }
}

/// Minimises `f` over the box `axes`, starting from `x0` (physical units).
pub fn minimize<F: FnMut(&[f64]) -> f64>(f: F, axes: &[Axis], x0: &[f64], opts: Options) -> Minimum {
    let n = axes.len();
    assert_eq!(n, x0.len(), "start point dimension");
    let u0: Vec<f64> = x0.iter().zip(axes).map(|(&x, a)| a.to_unit(x)).collect();
    let mut c = Counter { f, axes, trace: Vec::new(), best_u: u0.clone(), best: f64::INFINITY, limit: opts.max_evals.max(1) };
    let initial_value = c.eval(&u0);

    if n > 0 && opts.scan_points >= 2 {
        let k = opts.scan_points;
        let total = k.pow(n as u32);
        for idx in 0..total {
            if c.exhausted() {
                break;
            }
            let mut rem = idx;
            let u: Vec<f64> = (0..n)
                .map(|_| {
                    let j = rem % k;
                    rem /= k;
                    j as f64 / (k - 1) as f64
                })
                .collect();
            c.eval(&u);
        }
    }

    let converged = if n == 0 { true } else { nelder_mead(&mut c, opts) };
    let x = c.best_u.iter().zip(axes).map(|(&u, a)| a.to_physical(u)).collect();
    Minimum { x, value: c.best, initial_value, evals: c.trace.len(), converged, trace: c.trace }
}

fn nelder_mead<F: FnMut(&[f64]) -> f64>(c: &mut Counter<'_, F>, opts: Options) -> bool {
    let n = c.best_u.len();
    let step = if opts.scan_points >= 2 { 0.5 / (opts.scan_points - 1) as f64 } else { 0.1 };
    let start = c.best_u.clone();
    let mut simplex: Vec<(Vec<f64>, f64)> = vec![(start.clone(), c.best)];
    for i in 0..n {
        if c.exhausted() {
            return false;
        }
        let mut v = start.clone();
        v[i] = if v[i] + step <= 1.0 { v[i] + step } else { v[i] - step };
        let fv = c.eval(&v);
        simplex.push((v, fv));
    }
    let clamp = |v: Vec<f64>| v.into_iter().map(|x| x.clamp(0.0, 1.0)).collect::<Vec<_>>();
    let lerp = |a: &[f64], b: &[f64], t: f64| a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect::<Vec<_>>();
    loop {
        // Stable sort keeps the earlier vertex first among ties.
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let spread = simplex[n].1 - simplex[0].1;
        let diameter = simplex[1..]
            .iter()
            .map(|(v, _)| v.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if (spread <= opts.f_tol && diameter <= opts.x_tol) || diameter < 1e-15 {
            return true;
        }
        if c.exhausted() {
            return false;
        }
        let centroid: Vec<f64> = (0..n).map(|j| simplex[..n].iter().map(|(v, _)| v[j]).sum::<f64>() / n as f64).collect();
        let worst = simplex[n].clone();
        let reflected = clamp(lerp(&centroid, &worst.0, -1.0));
        let fr = c.eval(&reflected);
        if fr < simplex[0].1 {
            if c.exhausted() {
                simplex[n] = (reflected, fr);
                continue;
            }
            let expanded = clamp(lerp(&centroid, &worst.0, -2.0));
            let fe = c.eval(&expanded);
            simplex[n] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (reflected, fr);
        } else {
            if c.exhausted() {
                return false;
            }
            let contracted = if fr < worst.1 { lerp(&centroid, &reflected, 0.5) } else { lerp(&centroid, &worst.0, 0.5) };
            let fc = c.eval(&contracted);
            if fc < worst.1.min(fr) {
                simplex[n] = (contracted, fc);
            } else {
                let best = simplex[0].0.clone();
                for vertex in simplex.iter_mut().skip(1) {
                    if c.exhausted() {
                        return false;
                    }
                    let v = lerp(&best, &vertex.0, 0.5);
                    let fv = c.eval(&v);
                    *vertex = (v, fv);
                }
            }
        }
    }
}
