use crate::error::{Error, Result};
use crate::geometry::{Point2, Vec2};
use crate::spline::{polyline_length, Collocation};
use serde::{Deserialize, Serialize};

/// Parameters of the `W^{k,q}` cost.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SobolevParams {
    pub k: usize,
    pub q: f64,
    #[serde(default)]
    pub include_zeroth: bool,
}

impl SobolevParams {
    pub fn new(k: usize, q: f64, include_zeroth: bool) -> Result<Self> {
        let s = SobolevParams { k, q, include_zeroth };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 1 {
            return Err(Error::arg("sobolev.k must be at least 1"));
        }
        if !(self.q >= 1.0 && self.q.is_finite()) {
            return Err(Error::arg(format!("sobolev.q must be finite and >= 1, got {}", self.q)));
        }
        Ok(())
    }

    /// B-spline order used for the re-interpolation.
    pub fn spline_order(&self) -> usize {
        (self.k + 2).max(4)
    }

    fn orders(&self) -> std::ops::RangeInclusive<usize> {
        (if self.include_zeroth { 0 } else { 1 })..=self.k
    }
}

/// Cost split by derivative order.
#[derive(Debug, Clone, PartialEq)]
pub struct CostBreakdown {
    /// `per_order[a]` is the `L^q` norm of the a-th derivative over both
    /// components; zero for excluded orders.
    pub per_order: Vec<f64>,
    pub total: f64,
}

/// Shared pieces of cost and gradient.
struct Discretization {
    col: Collocation,
    /// Sample spacing in arc length.
    h: f64,
    /// Whether `h` tracks the polyline length.
    h_moves: bool,
    weights: Vec<f64>,
    /// `coef[c]`: control coefficients of component `c`.
    coef: [Vec<f64>; 2],
}

fn discretize(points: &[Point2], params: &SobolevParams, arc: bool) -> Result<Discretization> {
    params.validate()?;
    let n = points.len();
    let order = params.spline_order();
    if n < order {
        return Err(Error::arg(format!("need at least {order} samples for k = {}, got {n}", params.k)));
    }
    let u: Vec<f64> = (0..n).map(|i| i as f64).collect();
    let col = Collocation::new(&u, order, params.k)?;
    let len = polyline_length(points);
    let (h, h_moves) = if !arc {
        (1.0, false)
    } else if len > 0.0 { (len / (n - 1) as f64, true) } else { (1.0 / (n - 1) as f64, false) };
    let mut weights = vec![1.0; n];
    weights[0] = 0.5;
    weights[n - 1] = 0.5;
    let xs: Vec<f64> = points.iter().map(|p| p.x).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.y).collect();
    let coef = [col.coefficients(&xs), col.coefficients(&ys)];
    Ok(Discretization { col, h, h_moves, weights, coef })
}

/// `S_a = sum_i w_i sum_c |(B^(a) coef_c)_i|^q`, derivatives in the index parameter.
fn order_sums(d: &Discretization, params: &SobolevParams) -> Vec<f64> {
    let mut s = vec![0.0; params.k + 1];
    for a in params.orders() {
        for c in 0..2 {
            let v = d.col.apply_deriv(a, &d.coef[c]);
            s[a] += v.iter().zip(&d.weights).map(|(x, w)| w * x.abs().powf(params.q)).sum::<f64>();
        }
    }
    s
}

/// Discrete `W^{k,q}` norm of the B-spline through the samples.
///
/// Samples sit at index parameters `u_i = i` and are treated as equally
/// spaced in arc length with gap `h = L/(N-1)`, `L` the polyline length, so
/// the a-th arc-length derivative is `h^-a` times the index derivative.
/// Trapezoid weights in arc length give
/// `total^q = sum_a h^(1 - a q) S_a`.
pub fn sobolev_cost(points: &[Point2], params: &SobolevParams) -> Result<CostBreakdown> {
    let d = discretize(points, params, true)?;
    let s = order_sums(&d, params);
    let q = params.q;
    let contrib: Vec<f64> = s.iter().enumerate().map(|(a, &sa)| d.h.powf(1.0 - a as f64 * q) * sa).collect();
    let total = contrib.iter().sum::<f64>().powf(1.0 / q);
    Ok(CostBreakdown { per_order: contrib.iter().map(|c| c.powf(1.0 / q)).collect(), total })
}

/// Gradient of [`sobolev_cost`]`.total` with respect to each sample.
pub fn sobolev_gradient(points: &[Point2], params: &SobolevParams) -> Result<Vec<Vec2>> {
    gradient(points, params, true)
}

/// Gradient of the same sum with derivatives taken in the sample index
/// (`h = 1`). Its scale does not blow up as the samples get denser.
pub fn sobolev_gradient_indexed(points: &[Point2], params: &SobolevParams) -> Result<Vec<Vec2>> {
    gradient(points, params, false)
}

fn gradient(points: &[Point2], params: &SobolevParams, arc: bool) -> Result<Vec<Vec2>> {
    let d = discretize(points, params, arc)?;
    let n = points.len();
    let q = params.q;
    let s = order_sums(&d, params);
    let powq: f64 = s.iter().enumerate().map(|(a, &sa)| d.h.powf(1.0 - a as f64 * q) * sa).sum();
    if powq <= 0.0 {
        return Ok(vec![Vec2::ZERO; n]);
    }
    let total = powq.powf(1.0 / q);
    let outer = total.powf(1.0 - q) / q;

    let mut grad = [vec![0.0; n], vec![0.0; n]];
    for c in 0..2 {
        // d(powq)/d(coef_c), then pulled back through the collocation solve
        let mut gc = vec![0.0; n];
        for a in params.orders() {
            let v = d.col.apply_deriv(a, &d.coef[c]);
            let g: Vec<f64> = v
                .iter()
                .zip(&d.weights)
                .map(|(x, w)| {
                    let ax = x.abs();
                    if ax == 0.0 { 0.0 } else { w * q * ax.powf(q - 1.0) * x.signum() }
                })
                .collect();
            let scale = d.h.powf(1.0 - a as f64 * q);
            for (o, t) in gc.iter_mut().zip(d.col.apply_deriv_transpose(a, &g)) {
                *o += scale * t;
            }
        }
        d.col.lu.solve_transpose(&mut gc);
        grad[c] = gc;
    }
    let mut out: Vec<Vec2> = (0..n).map(|i| Vec2::new(grad[0][i], grad[1][i])).collect();

    if d.h_moves {
        // chain rule through h = L / (N - 1)
        let dpow_dh: f64 = s
            .iter()
            .enumerate()
            .map(|(a, &sa)| (1.0 - a as f64 * q) * d.h.powf(-(a as f64) * q) * sa)
            .sum();
        let f = dpow_dh / (n - 1) as f64;
        for i in 0..n - 1 {
            let e = points[i + 1] - points[i];
            let l = e.norm();
            if l > 0.0 {
                let u = e / l;
                out[i] -= u * f;
                out[i + 1] += u * f;
            }
        }
    }
    Ok(out.into_iter().map(|g| g * outer).collect())
}
