//! Uniform bucket grid for radius and nearest-neighbor queries on point sets.

use std::collections::HashMap;

use super::Point;

/// Static bucket index over a point set.
#[derive(Clone, Debug)]
pub struct PointIndex {
    points: Vec<Point>,
    bucket: f64,
    cells: HashMap<Vec<i64>, Vec<usize>>,
}

impl PointIndex {
    /// Indexes `points` with bucket side `bucket`.
    pub fn new(points: Vec<Point>, bucket: f64) -> Self {
        let mut cells: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            cells.entry(key(p, bucket)).or_default().push(i);
        }
        Self { points, bucket, cells }
    }

    /// Chooses the bucket side so that buckets hold about `per_bucket` points.
    pub fn with_density(points: Vec<Point>, per_bucket: f64) -> Self {
        let d = points.first().map_or(1, |p| p.len());
        let (lo, hi) = bounding_box(&points);
        let vol: f64 = (0..d).map(|k| (hi[k] - lo[k]).max(1e-12)).product();
        let n = points.len().max(1) as f64;
        let side = (vol * per_bucket / n).powf(1.0 / d as f64);
        let side = if side.is_finite() && side > 0.0 { side } else { 1.0 };
        Self::new(points, side)
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    /// Indices of points with `|p - x| <= r`, ascending.
    pub fn within(&self, x: &Point, r: f64) -> Vec<usize> {
        let mut out = Vec::new();
        let r2 = r * r;
        self.visit_box(x, r, |i| {
            if (&self.points[i] - x).norm_squared() <= r2 {
                out.push(i);
            }
        });
        out.sort_unstable();
        out
    }

    /// The `k` nearest points, sorted by distance then index.
    pub fn nearest(&self, x: &Point, k: usize) -> Vec<usize> {
        let k = k.min(self.points.len());
        if k == 0 {
            return Vec::new();
        }
        let mut r = self.bucket;
        loop {
            let mut found: Vec<(f64, usize)> = Vec::new();
            self.visit_box(x, r, |i| found.push(((&self.points[i] - x).norm_squared(), i)));
            if found.len() >= k {
                found.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                // The box of half-side r contains every point within distance r.
                if found[k - 1].0.sqrt() <= r {
                    return found.into_iter().take(k).map(|e| e.1).collect();
                }
            }
            r *= 2.0;
        }
    }

    fn visit_box(&self, x: &Point, r: f64, mut f: impl FnMut(usize)) {
        let d = x.len();
        let lo: Vec<i64> = (0..d).map(|k| ((x[k] - r) / self.bucket).floor() as i64).collect();
        let hi: Vec<i64> = (0..d).map(|k| ((x[k] + r) / self.bucket).floor() as i64).collect();
        let count: i64 = (0..d).map(|k| hi[k] - lo[k] + 1).product();
        if count as usize > 4 * self.cells.len() + 16 {
            // Box larger than the occupied buckets: scan the buckets instead.
            for (c, list) in &self.cells {
                if (0..d).all(|k| c[k] >= lo[k] && c[k] <= hi[k]) {
                    list.iter().for_each(|&i| f(i));
                }
            }
            return;
        }
        let mut idx = lo.clone();
        loop {
            if let Some(list) = self.cells.get(&idx) {
                list.iter().for_each(|&i| f(i));
            }
            let mut ax = 0;
            loop {
                if ax == d {
                    return;
                }
                idx[ax] += 1;
                if idx[ax] <= hi[ax] {
                    break;
                }
                idx[ax] = lo[ax];
                ax += 1;
            }
        }
    }
}

fn key(p: &Point, bucket: f64) -> Vec<i64> {
    p.iter().map(|v| (v / bucket).floor() as i64).collect()
}

/// Componentwise bounding box of a nonempty point set.
pub fn bounding_box(points: &[Point]) -> (Point, Point) {
    let d = points.first().map_or(1, |p| p.len());
    let mut lo = Point::from_element(d, f64::INFINITY);
    let mut hi = Point::from_element(d, f64::NEG_INFINITY);
    for p in points {
        for k in 0..d {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    (lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::point;

    #[test]
    fn nearest_matches_brute_force() {
        let pts: Vec<Point> = (0..500).map(|i| point(&[(i as f64 * 0.731).sin() * 3.0, (i as f64 * 1.37).cos()])).collect();
        let idx = PointIndex::with_density(pts.clone(), 3.0);
        let q = point(&[0.3, -0.2]);
        let got = idx.nearest(&q, 17);
        let mut all: Vec<(f64, usize)> = pts.iter().enumerate().map(|(i, p)| ((p - &q).norm_squared(), i)).collect();
        all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let want: Vec<usize> = all.iter().take(17).map(|e| e.1).collect();
        assert_eq!(got, want);
        let within = idx.within(&q, 0.5);
        let brute: Vec<usize> = (0..pts.len()).filter(|&i| (&pts[i] - &q).norm() <= 0.5).collect();
        assert_eq!(within, brute);
    }
}
