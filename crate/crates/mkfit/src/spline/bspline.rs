use crate::error::{Error, Result};
use crate::geometry::{Point2, Vec2};

/// Banded LU factorization without pivoting. B-spline collocation matrices
/// are totally positive, so elimination without pivoting is stable and
/// produces no fill outside the band.
#[derive(Debug, Clone)]
pub(crate) struct BandLu {
    n: usize,
    kl: usize,
    ku: usize,
    a: Vec<f64>,
}

impl BandLu {
    fn new(n: usize, kl: usize, ku: usize) -> Self {
        BandLu { n, kl, ku, a: vec![0.0; n * (kl + ku + 1)] }
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        i * (self.kl + self.ku + 1) + (j + self.kl - i)
    }

    #[inline]
    fn get(&self, i: usize, j: usize) -> f64 {
        self.a[self.idx(i, j)]
    }

    fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.idx(i, j);
        self.a[k] = v;
    }

    fn factor(&mut self) -> Result<()> {
        let n = self.n;
        for k in 0..n {
            let piv = self.get(k, k);
            if piv.abs() < 1e-300 || !piv.is_finite() {
                return Err(Error::Numerical(format!("singular collocation matrix at row {k}")));
            }
            for i in k + 1..(k + self.kl + 1).min(n) {
                let l = self.get(i, k) / piv;
                self.set(i, k, l);
                if l == 0.0 {
                    continue;
                }
                for j in k + 1..(k + self.ku + 1).min(n) {
                    let v = self.get(i, j) - l * self.get(k, j);
                    self.set(i, j, v);
                }
            }
        }
        Ok(())
    }

    pub(crate) fn solve(&self, b: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            let mut s = b[i];
            for j in i.saturating_sub(self.kl)..i {
                s -= self.get(i, j) * b[j];
            }
            b[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for j in i + 1..(i + self.ku + 1).min(n) {
                s -= self.get(i, j) * b[j];
            }
            b[i] = s / self.get(i, i);
        }
    }

    /// Solves with the transposed matrix.
    pub(crate) fn solve_transpose(&self, b: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            let mut s = b[i];
            for j in i.saturating_sub(self.ku)..i {
                s -= self.get(j, i) * b[j];
            }
            b[i] = s / self.get(i, i);
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for j in i + 1..(i + self.kl + 1).min(n) {
                s -= self.get(j, i) * b[j];
            }
            b[i] = s;
        }
    }
}

fn find_span(knots: &[f64], degree: usize, n_ctrl: usize, u: f64) -> usize {
    if u >= knots[n_ctrl] {
        return n_ctrl - 1;
    }
    if u <= knots[degree] {
        return degree;
    }
    let (mut lo, mut hi) = (degree, n_ctrl);
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if u < knots[mid] {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    lo
}

/// Nonzero basis functions and their derivatives at `u`:
/// `out[k][r]` is the k-th derivative of basis `span - degree + r`.
fn basis_ders(knots: &[f64], span: usize, u: f64, degree: usize, nd: usize) -> Vec<Vec<f64>> {
    let p = degree;
    let mut ndu = vec![vec![0.0; p + 1]; p + 1];
    let mut left = vec![0.0; p + 1];
    let mut right = vec![0.0; p + 1];
    ndu[0][0] = 1.0;
    for j in 1..=p {
        left[j] = u - knots[span + 1 - j];
        right[j] = knots[span + j] - u;
        let mut saved = 0.0;
        for r in 0..j {
            ndu[j][r] = right[r + 1] + left[j - r];
            let temp = ndu[r][j - 1] / ndu[j][r];
            ndu[r][j] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        ndu[j][j] = saved;
    }
    let mut ders = vec![vec![0.0; p + 1]; nd + 1];
    for j in 0..=p {
        ders[0][j] = ndu[j][p];
    }
    let mut a = vec![vec![0.0; p + 1]; 2];
    for r in 0..=p {
        let (mut s1, mut s2) = (0usize, 1usize);
        a[0][0] = 1.0;
        for k in 1..=nd.min(p) {
            let mut d = 0.0;
            let rk = r as isize - k as isize;
            let pk = p - k;
            if r >= k {
                a[s2][0] = a[s1][0] / ndu[pk + 1][rk as usize];
                d = a[s2][0] * ndu[rk as usize][pk];
            }
            let j1 = if rk >= -1 { 1 } else { (-rk) as usize };
            let j2 = if (r as isize - 1) <= pk as isize { k - 1 } else { p - r };
            for j in j1..=j2 {
                let idx = (rk + j as isize) as usize;
                a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][idx];
                d += a[s2][j] * ndu[idx][pk];
            }
            if r <= pk {
                a[s2][k] = -a[s1][k - 1] / ndu[pk + 1][r];
                d += a[s2][k] * ndu[r][pk];
            }
            ders[k][r] = d;
            std::mem::swap(&mut s1, &mut s2);
        }
    }
    let mut fac = p as f64;
    for k in 1..=nd.min(p) {
        for v in ders[k].iter_mut() {
            *v *= fac;
        }
        fac *= (p - k) as f64;
    }
    ders
}

fn averaged_knots(params: &[f64], degree: usize) -> Vec<f64> {
    let n = params.len();
    let mut t = Vec::with_capacity(n + degree + 1);
    t.extend(std::iter::repeat_n(params[0], degree + 1));
    for j in 1..n - degree {
        t.push(params[j..j + degree].iter().sum::<f64>() / degree as f64);
    }
    t.extend(std::iter::repeat_n(params[n - 1], degree + 1));
    t
}

/// Interpolation system of a B-spline of given order at fixed parameters,
/// with derivative rows at the same parameters.
#[derive(Debug, Clone)]
pub(crate) struct Collocation {
    pub knots: Vec<f64>,
    pub params: Vec<f64>,
    /// First nonzero column of each row.
    pub first: Vec<usize>,
    /// `rows[a][i][r]`: a-th derivative of basis `first[i] + r` at `params[i]`.
    pub rows: Vec<Vec<Vec<f64>>>,
    pub lu: BandLu,
}

impl Collocation {
    pub fn new(params: &[f64], order: usize, max_deriv: usize) -> Result<Self> {
        let n = params.len();
        if order < 2 || n < order {
            return Err(Error::arg(format!("need at least {order} points for order {order}, got {n}")));
        }
        if params.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Numerical("collocation parameters must be strictly increasing".into()));
        }
        let degree = order - 1;
        let knots = averaged_knots(params, degree);
        let nd = max_deriv.min(degree);
        let mut first = Vec::with_capacity(n);
        let mut rows = vec![Vec::with_capacity(n); nd + 1];
        let (mut kl, mut ku) = (0usize, 0usize);
        for (i, &u) in params.iter().enumerate() {
            let span = find_span(&knots, degree, n, u);
            let f = span - degree;
            let ders = basis_ders(&knots, span, u, degree, nd);
            // nonzero extent of the value row
            let nz: Vec<usize> = (0..=degree).filter(|&r| ders[0][r] != 0.0).map(|r| f + r).collect();
            if let (Some(&lo), Some(&hi)) = (nz.first(), nz.last()) {
                kl = kl.max(i.saturating_sub(lo));
                ku = ku.max(hi.saturating_sub(i));
            }
            first.push(f);
            for (a, row) in rows.iter_mut().enumerate() {
                row.push(ders[a].clone());
            }
        }
        let mut lu = BandLu::new(n, kl, ku);
        for i in 0..n {
            for r in 0..=degree {
                let j = first[i] + r;
                let v = rows[0][i][r];
                if v != 0.0 {
                    lu.set(i, j, v);
                }
            }
        }
        lu.factor()?;
        Ok(Collocation { knots, params: params.to_vec(), first, rows, lu })
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    /// Control coefficients interpolating `values`.
    pub fn coefficients(&self, values: &[f64]) -> Vec<f64> {
        let mut c = values.to_vec();
        self.lu.solve(&mut c);
        c
    }

    /// `(B^(a) c)_i`: a-th derivative at each parameter.
    pub fn apply_deriv(&self, a: usize, coef: &[f64]) -> Vec<f64> {
        self.rows[a]
            .iter()
            .zip(&self.first)
            .map(|(row, &f)| row.iter().enumerate().map(|(r, v)| v * coef[f + r]).sum())
            .collect()
    }

    /// `(B^(a))^T g`.
    pub fn apply_deriv_transpose(&self, a: usize, g: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        for (i, (row, &f)) in self.rows[a].iter().zip(&self.first).enumerate() {
            for (r, v) in row.iter().enumerate() {
                out[f + r] += v * g[i];
            }
        }
        out
    }
}

/// B-spline curve in the plane.
#[derive(Debug, Clone, PartialEq)]
pub struct BSplineCurve {
    pub order: usize,
    pub knots: Vec<f64>,
    pub control: Vec<Point2>,
    /// Parameters at which the curve interpolates its construction points.
    pub params: Vec<f64>,
}

impl BSplineCurve {
    pub fn degree(&self) -> usize {
        self.order - 1
    }

    pub fn eval(&self, u: f64) -> Point2 {
        let p = self.degree();
        let span = find_span(&self.knots, p, self.control.len(), u);
        let n = basis_ders(&self.knots, span, u, p, 0);
        (0..=p).map(|r| self.control[span - p + r] * n[0][r]).sum()
    }
}

/// Interpolates at chord-length parameters with an averaged knot vector.
pub fn bspline_interpolate(points: &[Point2], order: usize) -> Result<BSplineCurve> {
    let mut params = Vec::with_capacity(points.len());
    let mut s = 0.0;
    for (i, p) in points.iter().enumerate() {
        if i > 0 {
            s += p.dist(points[i - 1]);
        }
        params.push(s);
    }
    bspline_interpolate_with_params(points, &params, order)
}

pub fn bspline_interpolate_with_params(points: &[Point2], params: &[f64], order: usize) -> Result<BSplineCurve> {
    if order < 4 {
        return Err(Error::arg(format!("order must be at least 4, got {order}")));
    }
    if params.len() != points.len() {
        return Err(Error::arg("parameter count differs from point count"));
    }
    let col = Collocation::new(params, order, 0)?;
    let xs: Vec<f64> = points.iter().map(|p| p.x).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.y).collect();
    let cx = col.coefficients(&xs);
    let cy = col.coefficients(&ys);
    Ok(BSplineCurve {
        order,
        knots: col.knots,
        control: cx.into_iter().zip(cy).map(|(x, y)| Point2::new(x, y)).collect(),
        params: params.to_vec(),
    })
}

/// `out[i][a]` is the a-th derivative at `params[i]`, `a = 0..=max_order`.
pub fn derivatives_at(curve: &BSplineCurve, params: &[f64], max_order: usize) -> Result<Vec<Vec<Vec2>>> {
    if max_order + 2 > curve.order {
        return Err(Error::arg(format!(
            "derivative order {max_order} exceeds order {} - 2",
            curve.order
        )));
    }
    let p = curve.degree();
    Ok(params
        .iter()
        .map(|&u| {
            let span = find_span(&curve.knots, p, curve.control.len(), u);
            let d = basis_ders(&curve.knots, span, u, p, max_order);
            (0..=max_order)
                .map(|a| (0..=p).map(|r| curve.control[span - p + r] * d[a][r]).sum())
                .collect()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn line_reproduction() {
        let pts: Vec<Point2> = (0..12).map(|i| Point2::new(i as f64 * 0.3, 1.0 - i as f64 * 0.1)).collect();
        for order in [4, 5, 6] {
            let c = bspline_interpolate(&pts, order).unwrap();
            let d = derivatives_at(&c, &c.params, order - 2).unwrap();
            for row in &d {
                for v in &row[2..] {
                    assert!(v.norm() < 1e-9);
                }
                assert!((row[1].norm() - 1.0).abs() < 1e-9);
            }
            for (row, p) in d.iter().zip(&pts) {
                assert!(row[0].dist(*p) < 1e-9);
            }
        }
    }

    #[test]
    fn cubic_reproduction() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut t: Vec<f64> = (0..20).map(|_| rng.random_range(0.0..2.0)).collect();
        t.sort_by(f64::total_cmp);
        let f = |t: f64| Point2::new(1.0 - 2.0 * t + t * t * t, 0.5 * t * t - 0.25 * t * t * t);
        let df = |t: f64| Vec2::new(-2.0 + 3.0 * t * t, t - 0.75 * t * t);
        let ddf = |t: f64| Vec2::new(6.0 * t, 1.0 - 1.5 * t);
        let dddf = |_t: f64| Vec2::new(6.0, -1.5);
        let pts: Vec<Point2> = t.iter().map(|&s| f(s)).collect();
        let c = bspline_interpolate_with_params(&pts, &t, 5).unwrap();
        let d = derivatives_at(&c, &t, 3).unwrap();
        for (i, &s) in t.iter().enumerate() {
            assert!(d[i][0].dist(f(s)) < 1e-8);
            assert!(d[i][1].dist(df(s)) < 1e-8);
            assert!(d[i][2].dist(ddf(s)) < 1e-8);
            assert!(d[i][3].dist(dddf(s)) < 1e-8);
        }
    }

    #[test]
    fn banded_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let pts: Vec<Point2> = (0..200).map(|_| Point2::new(rng.random(), rng.random())).collect();
        let c = bspline_interpolate(&pts, 6).unwrap();
        let d = derivatives_at(&c, &c.params, 0).unwrap();
        let resid = d.iter().zip(&pts).map(|(r, p)| r[0].dist(*p)).fold(0.0, f64::max);
        assert!(resid < 1e-9, "residual {resid}");

        let col = Collocation::new(&c.params, 6, 0).unwrap();
        let n = pts.len();
        let mut m = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            for (r, v) in col.rows[0][i].iter().enumerate() {
                m[(i, col.first[i] + r)] = *v;
            }
        }
        let xs: Vec<f64> = pts.iter().map(|p| p.x).collect();
        let dense = m.clone().lu().solve(&DVector::from_vec(xs.clone())).unwrap();
        let band = col.coefficients(&xs);
        let err = band.iter().zip(dense.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-10, "banded vs dense {err}");

        let mut bt = xs.clone();
        col.lu.solve_transpose(&mut bt);
        let dense_t = m.transpose().lu().solve(&DVector::from_vec(xs)).unwrap();
        let err = bt.iter().zip(dense_t.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-10, "transpose solve {err}");
    }

    #[test]
    fn derivatives_match_finite_differences_on_circle() {
        let pts: Vec<Point2> = (0..40).map(|i| Point2::from_polar(1.0, i as f64 * 0.12)).collect();
        let c = bspline_interpolate(&pts, 6).unwrap();
        let h = 1e-4;
        let inner: Vec<f64> = c.params[3..37].to_vec();
        let d = derivatives_at(&c, &inner, 2).unwrap();
        for (i, &u) in inner.iter().enumerate() {
            let fd1 = (c.eval(u + h) - c.eval(u - h)) / (2.0 * h);
            let fd2 = (c.eval(u + h) - c.eval(u) * 2.0 + c.eval(u - h)) / (h * h);
            assert!(d[i][1].dist(fd1) < 1e-5);
            assert!(d[i][2].dist(fd2) < 1e-5 * 1e2, "{:?} {:?}", d[i][2], fd2);
        }
    }

    #[test]
    fn derivative_is_linear_in_control_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a: Vec<Point2> = (0..15).map(|_| Point2::new(rng.random(), rng.random())).collect();
        let b: Vec<Point2> = (0..15).map(|_| Point2::new(rng.random(), rng.random())).collect();
        let params: Vec<f64> = (0..15).map(|i| i as f64).collect();
        let ca = bspline_interpolate_with_params(&a, &params, 5).unwrap();
        let cb = bspline_interpolate_with_params(&b, &params, 5).unwrap();
        let sum: Vec<Point2> = a.iter().zip(&b).map(|(p, q)| *p * 2.0 + *q).collect();
        let cs = bspline_interpolate_with_params(&sum, &params, 5).unwrap();
        let u = [0.3, 4.7, 13.9];
        let (da, db, ds) = (
            derivatives_at(&ca, &u, 3).unwrap(),
            derivatives_at(&cb, &u, 3).unwrap(),
            derivatives_at(&cs, &u, 3).unwrap(),
        );
        for i in 0..3 {
            for k in 0..=3 {
                assert!((da[i][k] * 2.0 + db[i][k]).dist(ds[i][k]) < 1e-9);
            }
        }
    }

    #[test]
    fn order_limits() {
        let pts: Vec<Point2> = (0..8).map(|i| Point2::new(i as f64, 0.0)).collect();
        let c = bspline_interpolate(&pts, 4).unwrap();
        assert!(derivatives_at(&c, &[1.0], 3).is_err());
        assert!(bspline_interpolate(&pts[..3], 4).is_err());
        let dup = vec![Point2::ZERO, Point2::ZERO, Point2::new(1.0, 0.0), Point2::new(2.0, 0.0)];
        assert!(matches!(bspline_interpolate(&dup, 4), Err(Error::Numerical(_))));
    }
}
