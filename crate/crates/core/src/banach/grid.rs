use std::collections::HashMap;

/// Uniform grid over points of `R^d` for radius queries.
pub(crate) struct Grid {
    h: f64,
    cells: HashMap<Vec<i32>, Vec<usize>>,
}

impl Grid {
    pub(crate) fn new(h: f64) -> Self {
        Self {
            h,
            cells: HashMap::new(),
        }
    }

    fn cell(&self, x: f64) -> i32 {
        (x / self.h).floor() as i32
    }

    pub(crate) fn insert(&mut self, index: usize, p: &[f64]) {
        let key = p.iter().map(|&x| self.cell(x)).collect();
        self.cells.entry(key).or_default().push(index);
    }

    /// Calls `f` on every stored index whose cell meets the box of
    /// half-width `r` around `p` (a superset of the points within `r`).
    pub(crate) fn visit(&self, p: &[f64], r: f64, mut f: impl FnMut(usize)) {
        let lo: Vec<i32> = p.iter().map(|&x| self.cell(x - r)).collect();
        let hi: Vec<i32> = p.iter().map(|&x| self.cell(x + r)).collect();
        let boxes = lo.iter().zip(&hi).fold(1f64, |acc, (a, b)| acc * (b - a + 1) as f64);
        if boxes > self.cells.len() as f64 {
            for (key, ids) in &self.cells {
                if key.iter().zip(lo.iter().zip(&hi)).all(|(k, (a, b))| a <= k && k <= b) {
                    ids.iter().for_each(|&i| f(i));
                }
            }
            return;
        }
        let mut key = lo.clone();
        loop {
            if let Some(ids) = self.cells.get(&key) {
                ids.iter().for_each(|&i| f(i));
            }
            let mut axis = 0;
            loop {
                if axis == key.len() {
                    return;
                }
                key[axis] += 1;
                if key[axis] <= hi[axis] {
                    break;
                }
                key[axis] = lo[axis];
                axis += 1;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_all_neighbours() {
        let pts: Vec<Vec<f64>> = (0..400).map(|i| vec![(i % 20) as f64 * 0.05 - 0.5, (i / 20) as f64 * 0.05 - 0.5]).collect();
        let mut g = Grid::new(0.1);
        for (i, p) in pts.iter().enumerate() {
            g.insert(i, p);
        }
        let q = [0.013, -0.21];
        for r in [0.05, 0.12, 3.0] {
            let mut found = Vec::new();
            g.visit(&q, r, |i| found.push(i));
            for (i, p) in pts.iter().enumerate() {
                let d = ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt();
                if d <= r {
                    assert!(found.contains(&i));
                }
            }
        }
    }
}
