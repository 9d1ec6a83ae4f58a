//! Carlson symmetric elliptic integrals for complex arguments, by duplication.

use num_complex::Complex64 as C;

const TOL: f64 = 1e-3;
const MAX_ITER: usize = 200;

fn max3(a: f64, b: f64, c: f64) -> f64 {
    a.max(b).max(c)
}

pub fn rf(x: C, y: C, z: C) -> C {
    let (mut x, mut y, mut z) = (x, y, z);
    let mut a = (x + y + z) / 3.0;
    for _ in 0..MAX_ITER {
        let (dx, dy, dz) = ((a - x) / a, (a - y) / a, (a - z) / a);
        if max3(dx.norm(), dy.norm(), dz.norm()) < TOL {
            let e2 = dx * dy - dz * dz;
            let e3 = dx * dy * dz;
            return (1.0 + (e2 / 24.0 - 0.1 - e3 * (3.0 / 44.0)) * e2 + e3 / 14.0) / a.sqrt();
        }
        let (sx, sy, sz) = (x.sqrt(), y.sqrt(), z.sqrt());
        let lam = sx * sy + sx * sz + sy * sz;
        x = (x + lam) * 0.25;
        y = (y + lam) * 0.25;
        z = (z + lam) * 0.25;
        a = (x + y + z) / 3.0;
    }
    C::new(f64::NAN, f64::NAN)
}

pub fn rc(x: C, y: C) -> C {
    rf(x, y, y)
}

pub fn rd(x: C, y: C, z: C) -> C {
    let (mut x, mut y, mut z) = (x, y, z);
    let mut sum = C::new(0.0, 0.0);
    let mut fac = 1.0;
    for _ in 0..MAX_ITER {
        let a = (x + y + 3.0 * z) / 5.0;
        let (dx, dy, dz) = ((a - x) / a, (a - y) / a, (a - z) / a);
        if max3(dx.norm(), dy.norm(), dz.norm()) < TOL {
            let ea = dx * dy;
            let eb = dz * dz;
            let ec = ea - eb;
            let ed = ea - 6.0 * eb;
            let ee = ed + ec + ec;
            let (c1, c2, c3, c4) = (3.0 / 14.0, 1.0 / 6.0, 9.0 / 22.0, 3.0 / 26.0);
            let (c5, c6) = (0.25 * c3, 1.5 * c4);
            let series = 1.0
                + ed * (-c1 + c5 * ed - c6 * dz * ee)
                + dz * (c2 * ee + dz * (-c3 * ec + dz * c4 * ea));
            return 3.0 * sum + fac * series / (a * a.sqrt());
        }
        let (sx, sy, sz) = (x.sqrt(), y.sqrt(), z.sqrt());
        let lam = sx * sy + sx * sz + sy * sz;
        sum += fac / (sz * (z + lam));
        fac *= 0.25;
        x = (x + lam) * 0.25;
        y = (y + lam) * 0.25;
        z = (z + lam) * 0.25;
    }
    C::new(f64::NAN, f64::NAN)
}

pub fn rj(x: C, y: C, z: C, p: C) -> C {
    let (mut x, mut y, mut z, mut p) = (x, y, z, p);
    let delta = (p - x) * (p - y) * (p - z);
    let mut sum = C::new(0.0, 0.0);
    let mut fac = 1.0;
    let mut fac3 = 1.0;
    for _ in 0..MAX_ITER {
        let a = (x + y + z + 2.0 * p) / 5.0;
        let (dx, dy, dz) = ((a - x) / a, (a - y) / a, (a - z) / a);
        let dp = (a - p) / a;
        if dx.norm().max(dy.norm()).max(dz.norm()).max(dp.norm()) < TOL {
            let xyz = dx * dy * dz;
            let pp = -(dx + dy + dz) * 0.5;
            let e2 = dx * dy + dx * dz + dy * dz - 3.0 * pp * pp;
            let e3 = xyz + 2.0 * e2 * pp + 4.0 * pp * pp * pp;
            let e4 = (2.0 * xyz + e2 * pp + 3.0 * pp * pp * pp) * pp;
            let e5 = xyz * pp * pp;
            let series = 1.0 - 3.0 * e2 / 14.0 + e3 / 6.0 + 9.0 * e2 * e2 / 88.0
                - 3.0 * e4 / 22.0
                - 9.0 * e2 * e3 / 52.0
                + 3.0 * e5 / 26.0;
            return fac * series / (a * a.sqrt()) + 6.0 * sum;
        }
        let (sx, sy, sz, sp) = (x.sqrt(), y.sqrt(), z.sqrt(), p.sqrt());
        let lam = sx * sy + sx * sz + sy * sz;
        let d = (sp + sx) * (sp + sy) * (sp + sz);
        let e = fac3 * delta / (d * d);
        sum += fac * rc(C::new(1.0, 0.0), 1.0 + e) / d;
        fac *= 0.25;
        fac3 *= 1.0 / 64.0;
        x = (x + lam) * 0.25;
        y = (y + lam) * 0.25;
        z = (z + lam) * 0.25;
        p = (p + lam) * 0.25;
    }
    C::new(f64::NAN, f64::NAN)
}
