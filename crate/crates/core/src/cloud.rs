//! Dense point sets in `R^L`, stored row-major.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An ordered set of `n` points in `R^dim`.
///
/// Coordinates are always finite, and the shape never changes after
/// construction. Both the optimization variable and every sample batch are
/// represented with this type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCloud", into = "RawCloud")]
pub struct PointCloud {
    n: usize,
    dim: usize,
    data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawCloud {
    dim: usize,
    points: Vec<Vec<f64>>,
}

impl TryFrom<RawCloud> for PointCloud {
    type Error = Error;

    fn try_from(raw: RawCloud) -> Result<Self> {
        let cloud = PointCloud::from_rows(&raw.points)?;
        if cloud.dim != raw.dim {
            return Err(Error::DimensionMismatch(format!(
                "declared dim {} but rows have {}",
                raw.dim, cloud.dim
            )));
        }
        Ok(cloud)
    }
}

impl From<PointCloud> for RawCloud {
    fn from(cloud: PointCloud) -> Self {
        RawCloud {
            dim: cloud.dim,
            points: cloud.rows().map(<[f64]>::to_vec).collect(),
        }
    }
}

impl PointCloud {
    pub fn new(n: usize, dim: usize, data: Vec<f64>) -> Result<Self> {
        if n == 0 || dim == 0 {
            return Err(Error::invalid(format!(
                "point cloud needs n >= 1 and dim >= 1, got n={n}, dim={dim}"
            )));
        }
        if data.len() != n * dim {
            return Err(Error::invalid(format!(
                "expected {} coordinates for a {n}x{dim} cloud, got {}",
                n * dim,
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite coordinate {} at row {}, column {}",
                data[pos],
                pos / dim,
                pos % dim
            )));
        }
        Ok(Self { n, dim, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut data = Vec::with_capacity(rows.len() * dim);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "row {i} has {} coordinates, expected {dim}",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        Self::new(rows.len(), dim, data)
    }

    /// `n` copies of the origin.
    pub fn zeros(n: usize, dim: usize) -> Result<Self> {
        Self::new(n, dim, vec![0.0; n * dim])
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    /// Rebuild a cloud of the same shape from new coordinates.
    pub fn with_data(&self, data: Vec<f64>) -> Result<Self> {
        Self::new(self.n, self.dim, data)
    }

    /// Every point shifted by `v`.
    pub fn translated(&self, v: &[f64]) -> Result<Self> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "shift has dim {}, cloud has dim {}",
                v.len(),
                self.dim
            )));
        }
        let data = self
            .data
            .iter()
            .enumerate()
            .map(|(i, x)| x + v[i % self.dim])
            .collect();
        Self::new(self.n, self.dim, data)
    }

    pub(crate) fn ensure_same_dim(&self, other: &PointCloud) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch(format!(
                "point sets have dim {} and {}",
                self.dim, other.dim
            )));
        }
        Ok(())
    }
}
