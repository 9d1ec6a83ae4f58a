//! Target probability measures: uniform on a polygon or weighted atoms.

use crate::error::{Error, Result};
use crate::geometry::{triangulate, Point2, Polygon, VoronoiCell};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Distance below which an atom counts as sitting on a site, and below
/// which two candidate sites count as tied.
pub const COINCIDENCE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMeasure", into = "RawMeasure")]
pub enum TargetMeasure {
    /// Density `1 / area` on the polygon.
    Uniform { domain: Polygon },
    /// Weights are positive and sum to one.
    Empirical { atoms: Vec<Point2>, weights: Vec<f64> },
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum RawMeasure {
    Uniform { domain: Polygon },
    Empirical {
        atoms: Vec<Point2>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        weights: Option<Vec<f64>>,
    },
}

impl TryFrom<RawMeasure> for TargetMeasure {
    type Error = Error;

    fn try_from(r: RawMeasure) -> Result<Self> {
        match r {
            RawMeasure::Uniform { domain } => Ok(TargetMeasure::Uniform { domain }),
            RawMeasure::Empirical { atoms, weights } => TargetMeasure::empirical(atoms, weights),
        }
    }
}

impl From<TargetMeasure> for RawMeasure {
    fn from(m: TargetMeasure) -> Self {
        match m {
            TargetMeasure::Uniform { domain } => RawMeasure::Uniform { domain },
            TargetMeasure::Empirical { atoms, weights } => RawMeasure::Empirical { atoms, weights: Some(weights) },
        }
    }
}

impl TargetMeasure {
    pub fn uniform(domain: Polygon) -> Self {
        TargetMeasure::Uniform { domain }
    }

    /// Normalizes the weights to sum to one; `None` means equal weights.
    pub fn empirical(atoms: Vec<Point2>, weights: Option<Vec<f64>>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::arg("empirical measure needs at least one atom"));
        }
        if atoms.iter().any(|p| !p.is_finite()) {
            return Err(Error::arg("atom is not finite"));
        }
        let weights = match weights {
            None => vec![1.0 / atoms.len() as f64; atoms.len()],
            Some(w) => {
                if w.len() != atoms.len() {
                    return Err(Error::arg(format!("{} weights for {} atoms", w.len(), atoms.len())));
                }
                if w.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
                    return Err(Error::arg("weights must be positive and finite"));
                }
                let s: f64 = w.iter().sum();
                w.into_iter().map(|x| x / s).collect()
            }
        };
        Ok(TargetMeasure::Empirical { atoms, weights })
    }

    /// The polygon carrying a uniform measure.
    pub fn domain(&self) -> Option<&Polygon> {
        match self {
            TargetMeasure::Uniform { domain } => Some(domain),
            TargetMeasure::Empirical { .. } => None,
        }
    }

    /// `n` i.i.d. draws, deterministic in `seed`.
    pub fn sample(&self, n: usize, seed: u64) -> Vec<Point2> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        match self {
            TargetMeasure::Uniform { domain } => {
                let tris = triangulate(domain).expect("validated polygon");
                let cum = cumulative(tris.iter().map(|t| t.area()));
                (0..n)
                    .map(|_| {
                        let t = &tris[pick(&cum, rng.random())];
                        let (mut a, mut b): (f64, f64) = (rng.random(), rng.random());
                        if a + b > 1.0 {
                            a = 1.0 - a;
                            b = 1.0 - b;
                        }
                        t.u + (t.v - t.u) * a + (t.w - t.u) * b
                    })
                    .collect()
            }
            TargetMeasure::Empirical { atoms, weights } => {
                let cum = cumulative(weights.iter().copied());
                (0..n).map(|_| atoms[pick(&cum, rng.random())]).collect()
            }
        }
    }

    /// Mass of each cell. Empirical atoms go to their nearest site.
    pub fn cell_masses(&self, sites: &[Point2], cells: &[VoronoiCell]) -> Vec<f64> {
        match self {
            TargetMeasure::Uniform { domain } => {
                let a = domain.area();
                let mut m = vec![0.0; sites.len()];
                for c in cells {
                    m[c.site_index] = c.area() / a;
                }
                m
            }
            TargetMeasure::Empirical { atoms, weights } => {
                let mut m = vec![0.0; sites.len()];
                for (j, w) in nearest_sites(atoms, sites).into_iter().zip(weights) {
                    m[j] += w;
                }
                m
            }
        }
    }

    pub fn cell_mass(&self, sites: &[Point2], cell: &VoronoiCell) -> f64 {
        match self {
            TargetMeasure::Uniform { domain } => cell.area() / domain.area(),
            TargetMeasure::Empirical { atoms, weights } => nearest_sites(atoms, sites)
                .into_iter()
                .zip(weights)
                .filter(|(j, _)| *j == cell.site_index)
                .map(|(_, w)| w)
                .sum(),
        }
    }

    /// `rho({y_j})`: mass sitting exactly on each site. Zero for uniform targets.
    pub fn sites_hit_mass(&self, sites: &[Point2]) -> Vec<f64> {
        let mut m = vec![0.0; sites.len()];
        if let TargetMeasure::Empirical { atoms, weights } = self {
            for ((j, a), w) in nearest_sites(atoms, sites).into_iter().zip(atoms).zip(weights) {
                if sites[j].dist(*a) <= COINCIDENCE_TOL {
                    m[j] += w;
                }
            }
        }
        m
    }
}

fn cumulative(w: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut s = 0.0;
    let mut c: Vec<f64> = w
        .map(|x| {
            s += x;
            s
        })
        .collect();
    let total = s;
    for v in &mut c {
        *v /= total;
    }
    c
}

fn pick(cum: &[f64], u: f64) -> usize {
    cum.partition_point(|&c| c <= u).min(cum.len() - 1)
}

/// Index of the nearest site for each point; ties within
/// [`COINCIDENCE_TOL`] go to the lowest index.
pub fn nearest_sites(points: &[Point2], sites: &[Point2]) -> Vec<usize> {
    assert!(!sites.is_empty(), "no sites");
    points
        .par_iter()
        .map(|&x| {
            let mut best = (0, sites[0].dist(x));
            for (j, s) in sites.iter().enumerate().skip(1) {
                let d = s.dist(x);
                if d < best.1 - COINCIDENCE_TOL {
                    best = (j, d);
                }
            }
            best.0
        })
        .collect()
}

/// Reads rows of `x,y[,weight]`. A first row that does not parse is taken as
/// a header. Weights are returned only if every row has one.
pub fn read_points_csv(path: impl AsRef<std::path::Path>) -> Result<(Vec<Point2>, Option<Vec<f64>>)> {
    let path = path.as_ref();
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let (mut pts, mut w) = (Vec::new(), Vec::new());
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let nums: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        let nums = match nums {
            Ok(v) => v,
            Err(_) if i == 0 => continue,
            Err(_) => return Err(Error::arg(format!("{}: row {} is not numeric", path.display(), i + 1))),
        };
        match nums.as_slice() {
            [x, y] => pts.push(Point2::new(*x, *y)),
            [x, y, wt] => {
                pts.push(Point2::new(*x, *y));
                w.push(*wt);
            }
            _ => return Err(Error::arg(format!("{}: row {} needs 2 or 3 columns", path.display(), i + 1))),
        }
    }
    let weights = if w.len() == pts.len() && !w.is_empty() { Some(w) } else if w.is_empty() { None } else {
        return Err(Error::arg(format!("{}: weights given on some rows only", path.display())));
    };
    Ok((pts, weights))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::voronoi_cells;

    #[test]
    fn csv_points() {
        let dir = std::env::temp_dir().join(format!("mkfit-csv-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let f = dir.join("a.csv");
        std::fs::write(&f, "x,y,weight\n0,1,2\n1.5, -2 ,1\n").unwrap();
        let (p, w) = read_points_csv(&f).unwrap();
        assert_eq!(p, vec![Point2::new(0.0, 1.0), Point2::new(1.5, -2.0)]);
        assert_eq!(w, Some(vec![2.0, 1.0]));
        std::fs::write(&f, "0,1\n1,2,3\n").unwrap();
        assert!(read_points_csv(&f).is_err());
        std::fs::write(&f, "0,1\nx,y\n").unwrap();
        assert!(read_points_csv(&f).is_err());
        assert!(matches!(read_points_csv(dir.join("missing.csv")), Err(Error::Io(_))));
    }

    #[test]
    fn single_atom_sampling() {
        let m = TargetMeasure::empirical(vec![Point2::new(0.3, -2.0)], None).unwrap();
        assert!(m.sample(100, 1).iter().all(|p| *p == Point2::new(0.3, -2.0)));
    }

    #[test]
    fn sampling_is_deterministic_and_centered() {
        let m = TargetMeasure::uniform(Polygon::unit_square());
        let a = m.sample(1_000_000, 7);
        assert_eq!(a, m.sample(1_000_000, 7));
        let n = a.len() as f64;
        let mean: Point2 = a.iter().copied().sum::<Point2>() / n;
        let sigma = (1.0f64 / 12.0 / n).sqrt();
        assert!((mean.x - 0.5).abs() < 3.0 * sigma && (mean.y - 0.5).abs() < 3.0 * sigma);
        assert!(a.iter().all(|p| (0.0..=1.0).contains(&p.x) && (0.0..=1.0).contains(&p.y)));
    }

    #[test]
    fn masses_of_simple_partitions() {
        let m = TargetMeasure::uniform(Polygon::unit_square());
        let sites = [Point2::new(0.5, 0.5)];
        let cells = voronoi_cells(&sites, &Polygon::unit_square()).unwrap();
        assert!((m.cell_mass(&sites, &cells[0]) - 1.0).abs() < 1e-12);
        let sites = [Point2::new(0.25, 0.5), Point2::new(0.75, 0.5)];
        let cells = voronoi_cells(&sites, &Polygon::unit_square()).unwrap();
        let ms = m.cell_masses(&sites, &cells);
        assert!((ms[0] - 0.5).abs() < 1e-12 && (ms[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn chevron_masses_match_monte_carlo() {
        let chevron = Polygon::new(vec![
            Point2::new(-1.0, -0.75),
            Point2::new(0.0, 0.75),
            Point2::new(1.0, -0.75),
            Point2::new(0.0, -0.25),
        ])
        .unwrap();
        let m = TargetMeasure::uniform(chevron.clone());
        let bb = chevron.bbox();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let sites: Vec<Point2> = (0..50)
            .map(|_| Point2::new(rng.random_range(bb.min.x..bb.max.x), rng.random_range(bb.min.y..bb.max.y)))
            .collect();
        let cells = voronoi_cells(&sites, &chevron).unwrap();
        let masses = m.cell_masses(&sites, &cells);
        assert!((masses.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        let n = 1_000_000;
        let draws = m.sample(n, 3);
        let mut counts = vec![0usize; sites.len()];
        for j in nearest_sites(&draws, &sites) {
            counts[j] += 1;
        }
        for (c, p) in counts.iter().zip(&masses) {
            let sigma = (p * (1.0 - p) / n as f64).sqrt();
            let f = *c as f64 / n as f64;
            assert!((f - p).abs() <= 3.0 * sigma + 1e-12, "{f} vs {p}");
        }
    }

    #[test]
    fn empirical_ties_and_hits() {
        let m = TargetMeasure::empirical(
            vec![Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(0.5, 0.0)],
            Some(vec![1.0, 1.0, 2.0]),
        )
        .unwrap();
        let sites = [Point2::new(0.0, 0.0), Point2::new(1.0, 0.0)];
        let cells: Vec<VoronoiCell> = (0..2).map(|i| VoronoiCell { site_index: i, pieces: vec![] }).collect();
        assert_eq!(m.cell_masses(&sites, &cells), vec![0.75, 0.25]);
        assert_eq!(m.sites_hit_mass(&sites), vec![0.25, 0.25]);
        assert!(TargetMeasure::empirical(vec![Point2::ZERO], Some(vec![0.0])).is_err());
    }

    #[test]
    fn serde_round_trip() {
        let m = TargetMeasure::uniform(Polygon::unit_square());
        let s = serde_json::to_string(&m).unwrap();
        assert_eq!(serde_json::from_str::<TargetMeasure>(&s).unwrap(), m);
        let e: TargetMeasure = serde_json::from_str(r#"{"kind":"empirical","atoms":[[0,0],[1,1]]}"#).unwrap();
        assert_eq!(e, TargetMeasure::empirical(vec![Point2::ZERO, Point2::new(1.0, 1.0)], None).unwrap());
        assert!(serde_json::from_str::<TargetMeasure>(r#"{"kind":"uniform","domain":[[0,0],[1,0],[2,0]]}"#).is_err());
        assert!(serde_json::from_str::<TargetMeasure>(r#"{"kind":"uniform","domain":[[0,0],[1,0],[0,1]],"x":1}"#).is_err());
    }
}
