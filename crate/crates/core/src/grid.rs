use crate::error::ModelError;

/// Uniform node grid on `[0, r_max] × [z_min, z_max]`, both ends included.
///
/// Nodes are stored row by row in height: index `j * nr + i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub nr: usize,
    pub nz: usize,
    pub r_max: f64,
    pub z_min: f64,
    pub z_max: f64,
}

impl Grid {
    pub fn new(nr: usize, nz: usize, r_max: f64, z_max: f64) -> Result<Self, ModelError> {
        Self::with_z_range(nr, nz, r_max, 0.0, z_max)
    }

    pub fn with_z_range(
        nr: usize,
        nz: usize,
        r_max: f64,
        z_min: f64,
        z_max: f64,
    ) -> Result<Self, ModelError> {
        if nr < 2 || nz < 2 {
            return Err(ModelError::Grid("need at least 2 nodes in each direction"));
        }
        if !(r_max.is_finite() && r_max > 0.0) {
            return Err(ModelError::Grid("r_max must be positive"));
        }
        if !(z_min.is_finite() && z_max.is_finite() && z_min >= 0.0 && z_max > z_min) {
            return Err(ModelError::Grid("need 0 <= z_min < z_max"));
        }
        Ok(Self { nr, nz, r_max, z_min, z_max })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nr * self.nz
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn dr(&self) -> f64 {
        self.r_max / (self.nr - 1) as f64
    }

    #[inline]
    pub fn dz(&self) -> f64 {
        (self.z_max - self.z_min) / (self.nz - 1) as f64
    }

    #[inline]
    pub fn r(&self, i: usize) -> f64 {
        if i + 1 == self.nr {
            self.r_max
        } else {
            self.r_max * i as f64 / (self.nr - 1) as f64
        }
    }

    #[inline]
    pub fn z(&self, j: usize) -> f64 {
        if j + 1 == self.nz {
            self.z_max
        } else {
            self.z_min + (self.z_max - self.z_min) * j as f64 / (self.nz - 1) as f64
        }
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nr + i
    }

    /// `(i, j)` of a flat index.
    #[inline]
    pub fn coords(&self, k: usize) -> (usize, usize) {
        (k % self.nr, k / self.nr)
    }

    #[inline]
    pub fn point(&self, k: usize) -> (f64, f64) {
        let (i, j) = self.coords(k);
        (self.r(i), self.z(j))
    }

    /// Grid with each spacing halved (nested nodes).
    pub fn refined(&self) -> Self {
        Self { nr: 2 * self.nr - 1, nz: 2 * self.nz - 1, ..*self }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoints_exact() {
        let g = Grid::new(7, 13, 4.0, 6.0).unwrap();
        assert_eq!(g.r(0), 0.0);
        assert_eq!(g.r(6), 4.0);
        assert_eq!(g.z(12), 6.0);
        assert_eq!(g.coords(g.index(3, 5)), (3, 5));
        let f = g.refined();
        assert_eq!(f.r(2 * 3), g.r(3));
        assert_eq!(f.z(2 * 5), g.z(5));
    }

    #[test]
    fn rejects_degenerate() {
        assert!(Grid::new(0, 10, 1.0, 1.0).is_err());
        assert!(Grid::new(10, 1, 1.0, 1.0).is_err());
        assert!(Grid::new(10, 10, 0.0, 1.0).is_err());
    }
}
