//! Path encoding S of a configuration: S_n = S_{n-1} + 1 - 2 eta_n, anchored at S_0 = 0.

use crate::error::{BbsError, Result};
use crate::window::{Boundary, ParticleWindow};

/// Path values on sites `start ..= start + s.len() - 1`. The first stored value
/// sits one site left of the first encoded cell, so `origin() = start + 1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PathWindow {
    pub start: i64,
    pub s: Vec<i64>,
    pub left: Boundary,
    pub right: Boundary,
}

impl PathWindow {
    pub fn new(start: i64, s: Vec<i64>, left: Boundary, right: Boundary) -> Result<Self> {
        if s.is_empty() {
            return Err(BbsError::InvalidWindow("path needs at least one value".into()));
        }
        if s.windows(2).any(|p| (p[1] - p[0]).abs() != 1) {
            return Err(BbsError::InvalidWindow("path increments must be +1 or -1".into()));
        }
        if (left == Boundary::Periodic) != (right == Boundary::Periodic) {
            return Err(BbsError::InvalidWindow(
                "periodic boundary must be declared on both sides".into(),
            ));
        }
        let p = PathWindow { start, s, left, right };
        if p.contains(0) && p.at(0) != 0 {
            return Err(BbsError::InvalidWindow("path must vanish at site 0".into()));
        }
        Ok(p)
    }

    pub fn origin(&self) -> i64 {
        self.start + 1
    }

    pub fn end(&self) -> i64 {
        self.start + self.s.len() as i64 - 1
    }

    /// Number of encoded cells.
    pub fn cells_len(&self) -> usize {
        self.s.len() - 1
    }

    pub fn contains(&self, site: i64) -> bool {
        site >= self.start && site <= self.end()
    }

    /// Stored value at `site`; panics outside the window.
    pub fn at(&self, site: i64) -> i64 {
        self.s[(site - self.start) as usize]
    }

    pub fn is_periodic(&self) -> bool {
        self.left == Boundary::Periodic
    }

    /// Increment over one period (periodic windows only).
    pub fn drift(&self) -> i64 {
        self.s[self.s.len() - 1] - self.s[0]
    }

    /// Value at any site where the boundary semantics determine it.
    pub fn value(&self, site: i64) -> Option<i64> {
        if self.contains(site) {
            return Some(self.at(site));
        }
        let period = self.cells_len() as i64;
        if self.is_periodic() {
            if period == 0 {
                return None;
            }
            let shift = (site - self.origin()).div_euclid(period);
            let base = site - shift * period;
            return Some(self.at(base) + shift * self.drift());
        }
        if site < self.start {
            match self.left {
                Boundary::Vacuum => Some(self.s[0] - (self.start - site)),
                _ => None,
            }
        } else {
            match self.right {
                Boundary::Vacuum => Some(self.s[self.s.len() - 1] + (site - self.end())),
                _ => None,
            }
        }
    }
}

/// Encodes a configuration as its path, anchored so that S_0 = 0. Virtual
/// vacuum sites between the window and site 0 count as +1 steps.
pub fn encode(config: &ParticleWindow) -> Result<PathWindow> {
    config.validate()?;
    let start = config.origin - 1;
    let end = config.end();
    let mut raw = Vec::with_capacity(config.len() + 1);
    let mut acc = 0i64;
    raw.push(acc);
    for &c in &config.cells {
        acc += 1 - 2 * c as i64;
        raw.push(acc);
    }
    let offset = if start <= 0 && 0 <= end {
        -raw[(-start) as usize]
    } else if start > 0 {
        if config.left != Boundary::Vacuum {
            return Err(BbsError::AnchorUnresolvable);
        }
        start
    } else {
        if config.right != Boundary::Vacuum {
            return Err(BbsError::AnchorUnresolvable);
        }
        end - acc
    };
    for v in raw.iter_mut() {
        *v += offset;
    }
    Ok(PathWindow { start, s: raw, left: config.left, right: config.right })
}

/// Inverse of [`encode`]: down-steps are particles.
pub fn decode(path: &PathWindow) -> ParticleWindow {
    let cells = path.s.windows(2).map(|p| u8::from(p[1] < p[0])).collect();
    ParticleWindow { origin: path.origin(), cells, left: path.left, right: path.right }
}

/// Space reversal (RS)_n = -S_{-n}; boundaries swap sides.
pub fn reverse(path: &PathWindow) -> PathWindow {
    let s = path.s.iter().rev().map(|v| -v).collect();
    PathWindow { start: -path.end(), s, left: path.right, right: path.left }
}

/// Reversed configuration: eta'_n = eta_{1-n}.
pub fn reverse_config(config: &ParticleWindow) -> ParticleWindow {
    let cells = config.cells.iter().rev().copied().collect();
    ParticleWindow { origin: 1 - config.end(), cells, left: config.right, right: config.left }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fin(origin: i64, bits: &str) -> ParticleWindow {
        ParticleWindow::from_bits(origin, bits, Boundary::Vacuum, Boundary::Vacuum).unwrap()
    }

    #[test]
    fn encode_examples() {
        assert_eq!(encode(&fin(1, "0000")).unwrap().s, vec![0, 1, 2, 3, 4]);
        assert_eq!(encode(&fin(1, "1100")).unwrap().s, vec![0, -1, -2, -1, 0]);
        assert_eq!(encode(&fin(1, "1010")).unwrap().s, vec![0, -1, 0, -1, 0]);
    }

    #[test]
    fn decode_examples() {
        let p = PathWindow::new(0, vec![0, 1, 2, 3], Boundary::Vacuum, Boundary::Vacuum).unwrap();
        assert_eq!(decode(&p).cells, vec![0, 0, 0]);
        let p = PathWindow::new(0, vec![0, -1, -2, -1, 0], Boundary::Vacuum, Boundary::Vacuum)
            .unwrap();
        assert_eq!(decode(&p).cells, vec![1, 1, 0, 0]);
    }

    #[test]
    fn anchor_through_vacuum_gaps() {
        let right_of_zero = fin(4, "10");
        let p = encode(&right_of_zero).unwrap();
        assert_eq!(p.s, vec![3, 2, 3]);
        let left_of_zero = fin(-5, "11");
        let p = encode(&left_of_zero).unwrap();
        assert_eq!(p.value(0), Some(0));
        assert_eq!(p.s, vec![-2, -3, -4]);
    }

    #[test]
    fn anchor_fails_across_open_gap() {
        let w = ParticleWindow::from_bits(3, "101", Boundary::Open, Boundary::Vacuum).unwrap();
        assert_eq!(encode(&w), Err(BbsError::AnchorUnresolvable));
    }

    #[test]
    fn reversal_places_particle_at_zero() {
        let w = fin(1, "100");
        let r = decode(&reverse(&encode(&w).unwrap()));
        assert_eq!(r.get(0), Some(1));
        assert_eq!(r, reverse_config(&w));
    }

    #[test]
    fn reversal_of_vacuum_slope() {
        let p = encode(&fin(-3, "000000")).unwrap();
        let r = reverse(&p);
        assert!(r.s.windows(2).all(|w| w[1] - w[0] == 1));
    }

    #[test]
    fn periodic_value_extension() {
        let p = encode(&ParticleWindow::periodic(1, vec![1, 0, 0])).unwrap();
        assert_eq!(p.drift(), 1);
        assert_eq!(p.value(4), Some(0));
        assert_eq!(p.value(6), Some(2));
        assert_eq!(p.value(-3), Some(-1));
    }
}
