//! Elements of the centralizer of `F`, stored by their free wall blocks.
//!
//! Blocks `S_{ρ1,j1; ρ2,j2}` (size `d_ρ1 x d_ρ2`) are constant along diagonals
//! inside each combined `(ρ1, ρ2)` block, so every block is a copy of a wall
//! block `S_{ρ1, j; ρ2, 0}` with `j = j1 - j2`, or zero. A wall is free exactly
//! when `max(0, ρ1 - ρ2) <= j <= ρ1 - 1`, which gives `min(ρ1, ρ2)` walls per
//! exponent pair.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::ser::SerializeStruct;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::json::{serialize_matrix_fields, DataInput};
use crate::linalg::numerical_rank;
use crate::structure::StructureParams;

/// `(row exponent ρ1, level j, column exponent ρ2)` of a wall block `S_{ρ1,j;ρ2,0}`.
pub type WallKey = (usize, usize, usize);

#[derive(Debug, Clone, PartialEq)]
pub struct CentralizerElement {
    structure: StructureParams,
    walls: BTreeMap<WallKey, DMatrix<f64>>,
}

fn lowest_level(row_exp: usize, col_exp: usize) -> usize {
    row_exp.saturating_sub(col_exp)
}

impl CentralizerElement {
    /// All free wall positions for a structure, in a fixed order.
    pub fn wall_keys(s: &StructureParams) -> Vec<WallKey> {
        let mut keys = Vec::new();
        for b1 in s.blocks() {
            for b2 in s.blocks() {
                for j in lowest_level(b1.exponent, b2.exponent)..b1.exponent {
                    keys.push((b1.exponent, j, b2.exponent));
                }
            }
        }
        keys.sort_unstable();
        keys
    }

    /// Build from a complete set of walls with conforming shapes.
    pub fn from_walls(s: StructureParams, walls: BTreeMap<WallKey, DMatrix<f64>>) -> Result<Self> {
        let keys = Self::wall_keys(&s);
        if walls.len() != keys.len() || !keys.iter().all(|k| walls.contains_key(k)) {
            return Err(Error::InvalidInput(format!(
                "centralizer walls for {s} must be exactly {keys:?}"
            )));
        }
        for (&(r1, j, r2), w) in &walls {
            if w.shape() != (s.d(r1), s.d(r2)) {
                return Err(Error::Dimension(format!(
                    "wall ({r1}, {j}; {r2}, 0) is {:?}, expected {:?}",
                    w.shape(),
                    (s.d(r1), s.d(r2))
                )));
            }
        }
        Ok(Self { structure: s, walls })
    }

    pub fn zeros(s: StructureParams) -> Self {
        let walls = Self::wall_keys(&s)
            .into_iter()
            .map(|k| (k, DMatrix::zeros(s.d(k.0), s.d(k.2))))
            .collect();
        Self { structure: s, walls }
    }

    pub fn identity(s: StructureParams) -> Self {
        let mut e = Self::zeros(s);
        for (&(r1, j, r2), w) in e.walls.iter_mut() {
            if r1 == r2 && j == 0 {
                w.fill_with_identity();
            }
        }
        e
    }

    pub fn structure(&self) -> &StructureParams {
        &self.structure
    }

    pub fn walls(&self) -> &BTreeMap<WallKey, DMatrix<f64>> {
        &self.walls
    }

    pub fn wall(&self, key: WallKey) -> Option<&DMatrix<f64>> {
        self.walls.get(&key)
    }

    pub fn wall_mut(&mut self, key: WallKey) -> Option<&mut DMatrix<f64>> {
        self.walls.get_mut(&key)
    }

    /// Number of stored scalars; equals the centralizer dimension.
    pub fn param_count(&self) -> usize {
        self.walls.values().map(|w| w.len()).sum()
    }

    /// Block `S_{ρ1,j1;ρ2,j2}`, or `None` when it is structurally zero.
    pub fn block(&self, r1: usize, j1: usize, r2: usize, j2: usize) -> Option<&DMatrix<f64>> {
        if j1 < j2 {
            return None;
        }
        let j = j1 - j2;
        if j < lowest_level(r1, r2) {
            return None;
        }
        self.walls.get(&(r1, j, r2))
    }

    /// The full `n_min x n_min` matrix.
    pub fn realize(&self) -> DMatrix<f64> {
        let s = &self.structure;
        let n = s.n_min();
        let mut out = DMatrix::zeros(n, n);
        for b1 in s.blocks() {
            for b2 in s.blocks() {
                for q1 in 0..b1.exponent {
                    for q2 in 0..b2.exponent {
                        let j1 = b1.exponent - 1 - q1;
                        let j2 = b2.exponent - 1 - q2;
                        if let Some(w) = self.block(b1.exponent, j1, b2.exponent, j2) {
                            let r = b1.position_rows(q1).start;
                            let c = b2.position_rows(q2).start;
                            out.view_mut((r, c), w.shape()).copy_from(w);
                        }
                    }
                }
            }
        }
        out
    }

    /// Read walls off a dense matrix, checking that it commutes with `F`.
    pub fn from_matrix(s: StructureParams, m: &DMatrix<f64>, tol: f64) -> Result<Self> {
        let n = s.n_min();
        if m.shape() != (n, n) {
            return Err(Error::Dimension(format!(
                "centralizer element must be {n}x{n}, got {:?}",
                m.shape()
            )));
        }
        let f = s.jordan_matrix();
        let scale = m.amax().max(1.0);
        let comm = (m * &f - &f * m).amax();
        if comm > tol * scale {
            return Err(Error::InvalidInput(format!(
                "matrix does not commute with F (residual {comm:e})"
            )));
        }
        let mut walls = BTreeMap::new();
        for key @ (r1, j, r2) in Self::wall_keys(&s) {
            let b1 = s.block(r1).expect("key from structure");
            let b2 = s.block(r2).expect("key from structure");
            let rows = b1.label_rows(j);
            let cols = b2.label_rows(0);
            walls.insert(key, m.view((rows.start, cols.start), (rows.len(), cols.len())).clone_owned());
        }
        let e = Self { structure: s, walls };
        let diff = (e.realize() - m).amax();
        if diff > tol * scale {
            return Err(Error::InvalidInput(format!(
                "matrix is not determined by its walls (residual {diff:e})"
            )));
        }
        Ok(e)
    }

    /// Invertible iff every diagonal wall `S_{ρ,0;ρ,0}` is.
    pub fn is_invertible(&self, tol: f64) -> bool {
        self.structure.blocks().iter().all(|b| {
            let w = &self.walls[&(b.exponent, 0, b.exponent)];
            numerical_rank(w, tol).0 == b.sub_rank
        })
    }

    /// Product `self * other`; the centralizer is closed under multiplication.
    pub fn compose(&self, other: &CentralizerElement) -> Result<Self> {
        if self.structure != other.structure {
            return Err(Error::InvalidInput("structures differ".into()));
        }
        Self::from_matrix(self.structure.clone(), &(self.realize() * other.realize()), 1e-9)
    }
}

impl Serialize for CentralizerElement {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("CentralizerElement", 3)?;
        st.serialize_field("structure", &self.structure)?;
        serialize_matrix_fields(&mut st, &self.realize())?;
        st.end()
    }
}

impl<'de> Deserialize<'de> for CentralizerElement {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        #[derive(Deserialize)]
        struct Raw {
            structure: StructureParams,
            #[serde(default)]
            shape: Option<[usize; 2]>,
            data: DataInput,
        }
        let raw = Raw::deserialize(d)?;
        let m = raw.data.into_matrix(raw.shape).map_err(D::Error::custom)?;
        CentralizerElement::from_matrix(raw.structure, &m, 1e-9).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn walls_from(s: &StructureParams, mut next: impl FnMut() -> f64) -> CentralizerElement {
        let walls = CentralizerElement::wall_keys(s)
            .into_iter()
            .map(|k| (k, DMatrix::from_fn(s.d(k.0), s.d(k.2), |_, _| next())))
            .collect();
        CentralizerElement::from_walls(s.clone(), walls).unwrap()
    }

    #[test]
    fn p1_realizes_single_wall() {
        let s = StructureParams::from_pairs(&[(1, 2)]).unwrap();
        let mut v = 0.0;
        let e = walls_from(&s, || {
            v += 1.0;
            v
        });
        assert_eq!(&e.realize(), e.wall((1, 0, 1)).unwrap());
        assert_eq!(e.param_count(), 4);
    }

    #[test]
    fn printed_three_one_example() {
        let s = StructureParams::from_pairs(&[(3, 1), (1, 1)]).unwrap();
        let mut walls = BTreeMap::new();
        let w = |x: f64| DMatrix::from_element(1, 1, x);
        walls.insert((3, 0, 3), w(-0.124035));
        walls.insert((3, 1, 3), w(-0.024807));
        walls.insert((3, 2, 3), w(0.022326));
        walls.insert((3, 2, 1), w(-0.195975));
        walls.insert((1, 0, 3), w(-0.186052));
        walls.insert((1, 0, 1), w(-0.806226));
        let e = CentralizerElement::from_walls(s, walls).unwrap();
        assert_eq!(e.param_count(), 6);
        let want = DMatrix::from_row_slice(
            4,
            4,
            &[
                -0.124035, -0.024807, 0.022326, -0.195975,
                0.0, -0.124035, -0.024807, 0.0,
                0.0, 0.0, -0.124035, 0.0,
                0.0, 0.0, -0.186052, -0.806226,
            ],
        );
        assert_eq!(e.realize(), want);
    }

    #[test]
    fn realized_matrix_commutes_with_f() {
        for dvec in [vec![1, 1], vec![2, 0, 1], vec![1, 2, 1], vec![0, 0, 2]] {
            let s = StructureParams::from_dvec(&dvec).unwrap();
            let mut state = 17u64;
            let e = walls_from(&s, || {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                ((state >> 33) as f64 / (1u64 << 31) as f64) - 1.0
            });
            let m = e.realize();
            let f = s.jordan_matrix();
            assert_eq!(&m * &f, &f * &m, "dvec {dvec:?}");
            assert_eq!(e.param_count(), s.centralizer_dim());
            let back = CentralizerElement::from_matrix(s.clone(), &m, 1e-12).unwrap();
            assert_eq!(back, e);
        }
    }

    #[test]
    fn rejects_non_commuting_matrix() {
        let s = StructureParams::from_dvec(&[1, 1]).unwrap();
        let m = DMatrix::from_fn(3, 3, |i, j| (i + 2 * j) as f64);
        assert!(CentralizerElement::from_matrix(s, &m, 1e-9).is_err());
    }

    #[test]
    fn identity_and_invertibility() {
        let s = StructureParams::from_dvec(&[1, 0, 2]).unwrap();
        let e = CentralizerElement::identity(s.clone());
        assert_eq!(e.realize(), DMatrix::identity(s.n_min(), s.n_min()));
        assert!(e.is_invertible(1e-10));
        assert!(!CentralizerElement::zeros(s).is_invertible(1e-10));
    }
}
