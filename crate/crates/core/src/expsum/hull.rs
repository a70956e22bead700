//! Diameter of a planar point set via convex hull and rotating calipers.

type P = (f64, f64);

fn cross(o: P, a: P, b: P) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

fn dist2(a: P, b: P) -> f64 {
    (a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)
}

/// Hull vertex indices in counter-clockwise order (Andrew's monotone chain).
fn convex_hull(pts: &[P]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..pts.len()).collect();
    idx.sort_by(|&i, &j| pts[i].partial_cmp(&pts[j]).expect("finite points"));
    idx.dedup_by(|a, b| pts[*a] == pts[*b]);
    if idx.len() < 3 {
        return idx;
    }
    let mut hull: Vec<usize> = Vec::with_capacity(2 * idx.len());
    for pass in 0..2 {
        let floor = hull.len();
        let iter: Box<dyn Iterator<Item = &usize>> = if pass == 0 {
            Box::new(idx.iter())
        } else {
            Box::new(idx.iter().rev())
        };
        for &i in iter {
            while hull.len() >= floor + 2
                && cross(pts[hull[hull.len() - 2]], pts[hull[hull.len() - 1]], pts[i]) <= 0.0
            {
                hull.pop();
            }
            hull.push(i);
        }
        hull.pop();
    }
    hull
}

/// `(max distance, i, j)` over all pairs of points.
pub(super) fn diameter(pts: &[P]) -> (f64, usize, usize) {
    let hull = convex_hull(pts);
    let h = hull.len();
    let mut best = (0.0, hull.first().copied().unwrap_or(0), hull.first().copied().unwrap_or(0));
    let consider = |a: usize, b: usize, best: &mut (f64, usize, usize)| {
        let d = dist2(pts[a], pts[b]);
        if d > best.0 {
            *best = (d, a, b);
        }
    };
    if h <= 3 {
        for x in 0..h {
            for y in x + 1..h {
                consider(hull[x], hull[y], &mut best);
            }
        }
    } else {
        let p = |k: usize| pts[hull[k % h]];
        let mut j = 1;
        for i in 0..h {
            let ni = i + 1;
            while cross(p(i), p(ni), p(j + 1)) > cross(p(i), p(ni), p(j)) {
                j += 1;
            }
            consider(hull[i], hull[j % h], &mut best);
            consider(hull[ni % h], hull[j % h], &mut best);
        }
    }
    (best.0.sqrt(), best.1, best.2)
}
