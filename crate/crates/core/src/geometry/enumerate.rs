//! Deterministic enumeration of all rational-slope directions.
//!
//! Each quadrant is walked in Stern–Brocot order (axis first, then the tree
//! level by level, left to right), and the four quadrants are interleaved
//! round-robin starting from the positive first axis.

use super::direction::Direction;

/// Infinite iterator over every primitive direction, each exactly once.
#[derive(Debug, Clone)]
pub struct DirectionEnumerator {
    first_quadrant: Vec<(i64, i64)>,
    frontier: Vec<(i64, i64)>,
    next: usize,
}

impl Default for DirectionEnumerator {
    fn default() -> Self {
        Self::new()
    }
}

impl DirectionEnumerator {
    pub fn new() -> Self {
        DirectionEnumerator {
            first_quadrant: vec![(1, 0)],
            frontier: vec![(1, 0), (0, 1)],
            next: 0,
        }
    }

    fn grow(&mut self) {
        let mut level = Vec::with_capacity(self.frontier.len() - 1);
        let mut refined = Vec::with_capacity(2 * self.frontier.len() - 1);
        for w in self.frontier.windows(2) {
            let m = (w[0].0 + w[1].0, w[0].1 + w[1].1);
            refined.push(w[0]);
            refined.push(m);
            level.push(m);
        }
        refined.push(*self.frontier.last().unwrap());
        self.frontier = refined;
        self.first_quadrant.extend(level);
    }

    fn quadrant_item(&mut self, j: usize) -> (i64, i64) {
        while self.first_quadrant.len() <= j {
            self.grow();
        }
        self.first_quadrant[j]
    }
}

impl Iterator for DirectionEnumerator {
    type Item = Direction;

    fn next(&mut self) -> Option<Direction> {
        let i = self.next;
        self.next += 1;
        let (p, q) = self.quadrant_item(i / 4);
        let mut d = Direction::new(p, q).expect("stern-brocot vectors are non-zero");
        for _ in 0..(i % 4) {
            d = d.rotate_quarter();
        }
        Some(d)
    }
}
