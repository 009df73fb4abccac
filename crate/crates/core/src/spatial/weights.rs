use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geo::{GeoPoint, SpatialIndex};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightScheme<T> {
    /// The `k` nearest other features (ties by id).
    Knn { k: usize },
    /// Every other feature within `miles`.
    FixedBand { miles: T },
}

/// Binary neighbor weights, one sorted list per feature.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialWeights<T> {
    scheme: Option<WeightScheme<T>>,
    neighbors: Vec<Vec<(usize, T)>>,
    include_self: bool,
    isolated: Vec<usize>,
}

impl<T: Scalar> SpatialWeights<T> {
    /// Binary weights from explicit neighbor lists (indices into the feature
    /// list). Self-links are added when `include_self` is set.
    pub fn from_neighbor_lists(lists: Vec<Vec<usize>>, include_self: bool) -> Result<Self> {
        let n = lists.len();
        let mut neighbors = Vec::with_capacity(n);
        let mut isolated = Vec::new();
        for (i, mut list) in lists.into_iter().enumerate() {
            list.retain(|&j| j != i);
            list.sort_unstable();
            if list.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::param("neighbors", format!("duplicate neighbor in list {i}")));
            }
            if let Some(&j) = list.iter().find(|&&j| j >= n) {
                return Err(Error::param("neighbors", format!("index {j} out of range in list {i}")));
            }
            if list.is_empty() {
                isolated.push(i);
            }
            if include_self {
                let pos = list.partition_point(|&j| j < i);
                list.insert(pos, i);
            }
            neighbors.push(list.into_iter().map(|j| (j, T::one())).collect());
        }
        Ok(Self {
            scheme: None,
            neighbors,
            include_self,
            isolated,
        })
    }

    pub fn scheme(&self) -> Option<WeightScheme<T>> {
        self.scheme
    }

    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }

    pub fn include_self(&self) -> bool {
        self.include_self
    }

    /// `(neighbor index, weight)` pairs of feature `i`, ascending by index.
    pub fn neighbors(&self, i: usize) -> &[(usize, T)] {
        &self.neighbors[i]
    }

    /// Features with no neighbor other than themselves.
    pub fn isolated(&self) -> &[usize] {
        &self.isolated
    }

    /// Whether `j` is a neighbor of `i`.
    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.neighbors[i].binary_search_by(|(k, _)| k.cmp(&j)).is_ok()
    }

    /// Reorders features: feature `i` of the result is feature `order[i]` here.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        if order.len() != self.len() {
            return Err(Error::LengthMismatch {
                what: "permutation",
                got: order.len(),
                expected: self.len(),
            });
        }
        let mut inverse = vec![usize::MAX; order.len()];
        for (new, &old) in order.iter().enumerate() {
            if old >= order.len() || inverse[old] != usize::MAX {
                return Err(Error::param("order", "not a permutation"));
            }
            inverse[old] = new;
        }
        let lists = order
            .iter()
            .map(|&old| {
                self.neighbors[old]
                    .iter()
                    .map(|(j, _)| inverse[*j])
                    .collect::<Vec<_>>()
            })
            .collect();
        let mut w = Self::from_neighbor_lists(lists, self.include_self)?;
        w.scheme = self.scheme;
        Ok(w)
    }
}

/// Builds binary neighbor weights over point features.
pub fn build_weights<T: Scalar, S: AsRef<str> + Sync>(
    points: &[(S, GeoPoint<T>)],
    scheme: WeightScheme<T>,
    include_self: bool,
) -> Result<SpatialWeights<T>> {
    let n = points.len();
    if n < 2 {
        return Err(Error::param("features", format!("need at least 2, got {n}")));
    }
    match scheme {
        WeightScheme::Knn { k } if k == 0 || k >= n => {
            return Err(Error::param("k", format!("must satisfy 1 <= k < n = {n}, got {k}")));
        }
        WeightScheme::FixedBand { miles } if !(miles > T::zero()) => {
            return Err(Error::param("band", format!("must be > 0, got {miles}")));
        }
        _ => {}
    }
    let index = SpatialIndex::build(points)?;
    let lists: Vec<Vec<usize>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let center = points[i].1;
            match scheme {
                WeightScheme::Knn { k } => index
                    .nearest(center, k, Some(i))
                    .into_iter()
                    .map(|h| h.index)
                    .collect(),
                WeightScheme::FixedBand { miles } => index
                    .within_radius(center, miles)
                    .expect("band validated")
                    .into_iter()
                    .map(|h| h.index)
                    .filter(|&j| j != i)
                    .collect(),
            }
        })
        .collect();
    let mut w = SpatialWeights::from_neighbor_lists(lists, include_self)?;
    w.scheme = Some(scheme);
    if !w.isolated.is_empty() {
        log::warn!("{} feature(s) have no neighbors within the band", w.isolated.len());
    }
    Ok(w)
}
