use std::collections::HashMap;

/// Density-based clustering of 2-D points.
///
/// A point is core when at least `min_samples` points (itself included) lie
/// within `eps`. Clusters are grown from core points in index order, so
/// cluster ids follow their lowest-index core point and a border point
/// reachable from several clusters joins the earliest. Noise is `None`.
pub fn dbscan(points: &[(f64, f64)], eps: f64, min_samples: usize) -> Vec<Option<usize>> {
    let n = points.len();
    let mut labels = vec![None; n];
    if n == 0 || !(eps > 0.0) {
        return labels;
    }
    let cell = |p: &(f64, f64)| ((p.0 / eps).floor() as i64, (p.1 / eps).floor() as i64);
    let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for (i, p) in points.iter().enumerate() {
        grid.entry(cell(p)).or_default().push(i);
    }
    let eps2 = eps * eps;
    let neighbours = |i: usize, out: &mut Vec<usize>| {
        out.clear();
        let p = points[i];
        let (cx, cy) = cell(&p);
        for gy in cy - 1..=cy + 1 {
            for gx in cx - 1..=cx + 1 {
                if let Some(bucket) = grid.get(&(gx, gy)) {
                    for &j in bucket {
                        let q = points[j];
                        if (p.0 - q.0).powi(2) + (p.1 - q.1).powi(2) <= eps2 {
                            out.push(j);
                        }
                    }
                }
            }
        }
    };

    let mut visited = vec![false; n];
    let mut next_id = 0;
    let mut nb = Vec::new();
    let mut nb2 = Vec::new();
    let mut queue = Vec::new();
    for i in 0..n {
        if visited[i] {
            continue;
        }
        neighbours(i, &mut nb);
        if nb.len() < min_samples {
            continue;
        }
        visited[i] = true;
        let id = next_id;
        next_id += 1;
        labels[i] = Some(id);
        queue.clear();
        queue.extend(nb.iter().copied().filter(|&j| j != i));
        while let Some(j) = queue.pop() {
            if labels[j].is_none() {
                labels[j] = Some(id);
            }
            if visited[j] {
                continue;
            }
            visited[j] = true;
            neighbours(j, &mut nb2);
            if nb2.len() >= min_samples {
                queue.extend(nb2.iter().copied().filter(|&k| !visited[k]));
            }
        }
    }
    labels
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_blobs() {
        let mut pts = Vec::new();
        for i in 0..10 {
            pts.push((i as f64 * 0.1, 0.0));
            pts.push((100.0 + i as f64 * 0.1, 0.0));
        }
        let l = dbscan(&pts, 1.0, 3);
        assert_eq!(l[0], Some(0));
        assert_eq!(l[1], Some(1));
        assert!(l.iter().step_by(2).all(|&v| v == Some(0)));
        assert!(l.iter().skip(1).step_by(2).all(|&v| v == Some(1)));
    }

    #[test]
    fn single_tight_group_and_noise() {
        let pts = vec![(0.0, 0.0), (0.5, 0.0), (0.0, 0.5), (50.0, 50.0)];
        assert_eq!(dbscan(&pts, 1.0, 3), vec![Some(0), Some(0), Some(0), None]);
        assert_eq!(dbscan(&pts, 1.0, 5), vec![None; 4]);
    }
}
