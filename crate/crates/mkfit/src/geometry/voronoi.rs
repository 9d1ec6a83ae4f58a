use super::clip::{clip_by_convex, clip_convex_halfplane};
use super::{triangulate_unchecked, BBox, Point2, Polygon, Triangle};
use crate::error::{Error, Result};
use rayon::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use spade::{DelaunayTriangulation, HierarchyHintGenerator, Triangulation};
use std::collections::HashMap;

/// Voronoi cell of one site clipped to the domain.
#[derive(Debug, Clone, PartialEq)]
pub struct VoronoiCell {
    pub site_index: usize,
    /// Several pieces when a nonconvex domain disconnects the cell; empty
    /// when the cell misses the domain or the site was merged into another.
    pub pieces: Vec<Polygon>,
}

impl VoronoiCell {
    pub fn area(&self) -> f64 {
        self.pieces.iter().map(Polygon::area).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn triangles(&self) -> Vec<Triangle> {
        self.pieces.iter().flat_map(triangulate_unchecked).collect()
    }
}

/// For each site, the index of the earlier site it coincides with, if any.
fn merge_map(sites: &[Point2], tol: f64) -> Vec<Option<usize>> {
    let key = |p: Point2| ((p.x / tol).floor() as i64, (p.y / tol).floor() as i64);
    let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    let mut out = vec![None; sites.len()];
    for (i, &p) in sites.iter().enumerate() {
        let (kx, ky) = key(p);
        'search: for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(list) = grid.get(&(kx + dx, ky + dy)) {
                    if let Some(&j) = list.iter().find(|&&j| sites[j].dist(p) < tol) {
                        out[i] = Some(j);
                        break 'search;
                    }
                }
            }
        }
        if out[i].is_none() {
            grid.entry((kx, ky)).or_default().push(i);
        }
    }
    out
}

/// Delaunay neighbours of each kept site, as site indices.
fn neighbours(sites: &[Point2], kept: &[usize]) -> Result<Vec<Vec<usize>>> {
    // Randomized insertion with hierarchy hints. Insertion in curve order,
    // or spade's bulk load, slows down badly on dense smooth curves.
    let mut order = kept.to_vec();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(0x5eed));
    let mut dt: DelaunayTriangulation<spade::Point2<f64>, (), (), (), HierarchyHintGenerator<f64>> =
        DelaunayTriangulation::new();
    for (n, &i) in order.iter().enumerate() {
        let h = dt
            .insert(spade::Point2::new(sites[i].x, sites[i].y))
            .map_err(|e| Error::Numerical(format!("site {i}: {e:?}")))?;
        if h.index() != n {
            return Err(Error::Numerical(format!("site {i} collapsed in triangulation")));
        }
    }
    let handle_site = order;
    let mut out = vec![Vec::new(); sites.len()];
    for v in dt.vertices() {
        let s = handle_site[v.fix().index()];
        out[s] = v.out_edges().map(|e| handle_site[e.to().fix().index()]).collect();
    }
    Ok(out)
}

/// Voronoi cells of `sites` intersected with `domain`.
///
/// Each cell is the domain cut by the bisector half-planes of the site's
/// Delaunay neighbours. Sites closer than `1e-12` times the domain diameter
/// to an earlier site are merged into it and get an empty cell.
pub fn voronoi_cells(sites: &[Point2], domain: &Polygon) -> Result<Vec<VoronoiCell>> {
    if sites.is_empty() {
        return Err(Error::arg("no sites"));
    }
    if let Some(i) = sites.iter().position(|p| !p.is_finite()) {
        return Err(Error::arg(format!("site {i} is not finite")));
    }
    let dbox = domain.bbox();
    let diam = dbox.diagonal();
    let merged = merge_map(sites, 1e-12 * diam);
    let kept: Vec<usize> = (0..sites.len()).filter(|&i| merged[i].is_none()).collect();
    let nbrs = neighbours(sites, &kept)?;
    let convex = domain.is_convex();
    let tol = 1e-13 * diam;

    // A box holding the domain and every site; cells are clipped inside it.
    let mut all = sites.to_vec();
    all.extend_from_slice(domain.vertices());
    let bb = BBox::of(&all);
    let pad = bb.diagonal() + diam;
    let outer = vec![
        Point2::new(bb.min.x - pad, bb.min.y - pad),
        Point2::new(bb.max.x + pad, bb.min.y - pad),
        Point2::new(bb.max.x + pad, bb.max.y + pad),
        Point2::new(bb.min.x - pad, bb.max.y + pad),
    ];

    let cells = (0..sites.len())
        .into_par_iter()
        .map(|j| {
            if merged[j].is_some() {
                return VoronoiCell { site_index: j, pieces: Vec::new() };
            }
            let y = sites[j];
            let mut ring = if convex { domain.vertices().to_vec() } else { outer.clone() };
            for &k in &nbrs[j] {
                let n = sites[k] - y;
                let m = (sites[k] + y) * 0.5;
                ring = clip_convex_halfplane(&ring, m, n.perp().normalized(), tol);
                if ring.is_empty() {
                    break;
                }
            }
            let pieces = if ring.len() < 3 {
                Vec::new()
            } else if convex {
                vec![ring]
            } else {
                clip_by_convex(domain.vertices(), &ring)
            };
            VoronoiCell {
                site_index: j,
                pieces: pieces
                    .into_iter()
                    .filter(|r| r.len() >= 3)
                    .map(Polygon::from_ccw_unchecked)
                    .filter(|p| p.area() > 1e-14 * diam * diam)
                    .collect(),
            }
        })
        .collect();
    Ok(cells)
}
