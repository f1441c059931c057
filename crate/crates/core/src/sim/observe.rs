//! Occupancy and island statistics inside an observation cube.

use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Observation {
    pub sites: u64,
    pub occupied: u64,
    pub particles: u64,
    /// Connected components of occupied sites (nearest-neighbour adjacency
    /// inside the cube).
    pub islands: u64,
    pub largest_island: u64,
}

impl Observation {
    pub fn occupied_fraction(&self) -> f64 {
        self.occupied as f64 / self.sites as f64
    }

    pub fn mean_island_size(&self) -> f64 {
        if self.islands == 0 {
            0.0
        } else {
            self.occupied as f64 / self.islands as f64
        }
    }
}

pub(crate) fn observe(pos: &[i32], d: usize, half_width: usize) -> Observation {
    let w = half_width as i32;
    let side = 2 * half_width + 1;
    let volume = side.pow(d as u32);
    let mut counts = vec![0u32; volume];
    let mut particles = 0;
    'particles: for x in pos.chunks(d) {
        let mut flat = 0usize;
        for &c in x {
            if c < -w || c > w {
                continue 'particles;
            }
            flat = flat * side + (c + w) as usize;
        }
        counts[flat] = counts[flat].saturating_add(1);
        particles += 1;
    }
    let occupied = counts.iter().filter(|&&c| c > 0).count() as u64;

    let strides: Vec<usize> = (0..d).map(|a| side.pow((d - 1 - a) as u32)).collect();
    let mut seen = vec![false; volume];
    let mut stack = Vec::new();
    let (mut islands, mut largest) = (0u64, 0u64);
    for start in 0..volume {
        if counts[start] == 0 || seen[start] {
            continue;
        }
        islands += 1;
        let mut size = 0u64;
        seen[start] = true;
        stack.push(start);
        while let Some(i) = stack.pop() {
            size += 1;
            for &s in &strides {
                let coord = (i / s) % side;
                if coord > 0 && counts[i - s] > 0 && !seen[i - s] {
                    seen[i - s] = true;
                    stack.push(i - s);
                }
                if coord + 1 < side && counts[i + s] > 0 && !seen[i + s] {
                    seen[i + s] = true;
                    stack.push(i + s);
                }
            }
        }
        largest = largest.max(size);
    }
    Observation {
        sites: volume as u64,
        occupied,
        particles,
        islands,
        largest_island: largest,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_dimensional_runs() {
        // occupied: -3, -2, 0, 2, 3 (twice), and 9 outside the window
        let pos = [-3, -2, 0, 2, 3, 3, 9];
        let o = observe(&pos, 1, 4);
        assert_eq!(o.sites, 9);
        assert_eq!(o.occupied, 5);
        assert_eq!(o.particles, 6);
        assert_eq!(o.islands, 3);
        assert_eq!(o.largest_island, 2);
    }

    #[test]
    fn two_dimensional_components() {
        let pos = [0, 0, 0, 1, 1, 1, -1, -1];
        let o = observe(&pos, 2, 1);
        assert_eq!(o.occupied, 4);
        // (0,0)-(0,1)-(1,1) connected; (-1,-1) only touches diagonally
        assert_eq!(o.islands, 2);
        assert_eq!(o.largest_island, 3);
    }
}
