//! Convex hulls and l1 Hausdorff distances for shape estimates (d <= 2).

use crate::error::{Error, Result};
use crate::lattice::Site;

pub type Point = Vec<f64>;

fn cross(o: &Site, a: &Site, b: &Site) -> i128 {
    let (ax, ay) = ((a.0[0] - o.0[0]) as i128, (a.0[1] - o.0[1]) as i128);
    let (bx, by) = ((b.0[0] - o.0[0]) as i128, (b.0[1] - o.0[1]) as i128);
    ax * by - ay * bx
}

/// Counter-clockwise hull of planar lattice points without collinear
/// vertices (monotone chain, exact integer arithmetic).
pub fn convex_hull_2d(points: &[Site]) -> Vec<Site> {
    let mut pts: Vec<Site> = points.to_vec();
    pts.sort();
    pts.dedup();
    if pts.len() <= 2 {
        return pts;
    }
    let mut lower: Vec<Site> = Vec::new();
    for p in &pts {
        while lower.len() >= 2 && cross(&lower[lower.len() - 2], &lower[lower.len() - 1], p) <= 0 {
            lower.pop();
        }
        lower.push(*p);
    }
    let mut upper: Vec<Site> = Vec::new();
    for p in pts.iter().rev() {
        while upper.len() >= 2 && cross(&upper[upper.len() - 2], &upper[upper.len() - 1], p) <= 0 {
            upper.pop();
        }
        upper.push(*p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Counter-clockwise hull of planar points (monotone chain in floating point).
pub fn convex_hull_points(points: &[Point]) -> Vec<Point> {
    let mut pts: Vec<Point> = points.to_vec();
    pts.sort_by(|a, b| a.partial_cmp(b).expect("finite coordinates"));
    pts.dedup();
    if pts.len() <= 2 {
        return pts;
    }
    let turn = |o: &Point, a: &Point, b: &Point| {
        (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
    };
    let mut lower: Vec<Point> = Vec::new();
    for p in &pts {
        while lower.len() >= 2 && turn(&lower[lower.len() - 2], &lower[lower.len() - 1], p) <= 1e-15 {
            lower.pop();
        }
        lower.push(p.clone());
    }
    let mut upper: Vec<Point> = Vec::new();
    for p in pts.iter().rev() {
        while upper.len() >= 2 && turn(&upper[upper.len() - 2], &upper[upper.len() - 1], p) <= 1e-15 {
            upper.pop();
        }
        upper.push(p.clone());
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Hull vertices of `sites / scale`: an interval for d = 1, a ccw polygon
/// for d = 2, `None` for d = 3.
pub fn scaled_hull(sites: &[Site], dim: usize, scale: f64) -> Option<Vec<Point>> {
    if sites.is_empty() {
        return Some(Vec::new());
    }
    let scale_pt = |s: &Site| s.coords(dim).iter().map(|&c| c as f64 / scale).collect();
    match dim {
        1 => {
            let lo = sites.iter().min_by_key(|s| s.0[0]).unwrap();
            let hi = sites.iter().max_by_key(|s| s.0[0]).unwrap();
            if lo == hi {
                Some(vec![scale_pt(lo)])
            } else {
                Some(vec![scale_pt(lo), scale_pt(hi)])
            }
        }
        2 => Some(convex_hull_2d(sites).iter().map(scale_pt).collect()),
        _ => None,
    }
}

/// Vertices of `{a : ||a||_1 <= 1}` for d <= 2.
pub fn unit_l1_ball(dim: usize) -> Vec<Point> {
    match dim {
        1 => vec![vec![-1.0], vec![1.0]],
        _ => vec![
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![-1.0, 0.0],
            vec![0.0, -1.0],
        ],
    }
}

pub fn l1_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// `max(sup_a inf_b |a-b|_1, sup_b inf_a |a-b|_1)` over finite point sets.
pub fn hausdorff_l1(a: &[Point], b: &[Point]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySet);
    }
    let directed = |from: &[Point], to: &[Point]| {
        from.iter()
            .map(|p| to.iter().map(|q| l1_dist(p, q)).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    Ok(directed(a, b).max(directed(b, a)))
}

/// l1 distance from `p` to the segment `[a, b]`. The objective is convex and
/// piecewise linear in the segment parameter, so its minimum sits at an end
/// or at a breakpoint where one coordinate matches.
fn point_segment_l1(p: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let eval = |s: f64| -> f64 {
        p.iter()
            .zip(a.iter().zip(b))
            .map(|(pi, (ai, bi))| (pi - (ai + s * (bi - ai))).abs())
            .sum()
    };
    let mut best = eval(0.0).min(eval(1.0));
    for i in 0..p.len() {
        let span = b[i] - a[i];
        if span != 0.0 {
            let s = (p[i] - a[i]) / span;
            if (0.0..=1.0).contains(&s) {
                best = best.min(eval(s));
            }
        }
    }
    best
}

/// l1 distance from a point to the convex hull given by its vertices
/// (interval for d = 1, ccw polygon for d = 2).
pub fn point_polytope_l1(p: &[f64], poly: &[Point]) -> Result<f64> {
    match poly.len() {
        0 => Err(Error::EmptySet),
        1 => Ok(l1_dist(p, &poly[0])),
        2 => Ok(point_segment_l1(p, &poly[0], &poly[1])),
        n => {
            let inside = (0..n).all(|i| {
                let a = &poly[i];
                let b = &poly[(i + 1) % n];
                (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]) >= -1e-12
            });
            if inside {
                return Ok(0.0);
            }
            Ok((0..n)
                .map(|i| point_segment_l1(p, &poly[i], &poly[(i + 1) % n]))
                .fold(f64::INFINITY, f64::min))
        }
    }
}

/// l1 Hausdorff distance between two convex polytopes given by vertices.
/// The distance to a convex set is a convex function, so its maximum over a
/// polytope is attained at a vertex.
pub fn polytope_hausdorff_l1(p: &[Point], q: &[Point]) -> Result<f64> {
    if p.is_empty() || q.is_empty() {
        return Err(Error::EmptySet);
    }
    let mut worst: f64 = 0.0;
    for v in p {
        worst = worst.max(point_polytope_l1(v, q)?);
    }
    for v in q {
        worst = worst.max(point_polytope_l1(v, p)?);
    }
    Ok(worst)
}
