//! Block-structured operations on the stacked coefficient matrix `G`.

mod centralizer;
mod lq;
mod param;

pub use centralizer::{CentralizerElement, WallKey};
pub use lq::{lq_multi_lag, orthogonality_residual, LqFactorization};
pub use param::{parameterize, reconstruct, OrthoParam};
pub(crate) use param::complete_basis;

use nalgebra::{DMatrix, DMatrixView};
use serde::ser::SerializeStruct;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::json::{serialize_matrix_fields, DataInput};
use crate::linalg::{numerical_rank, RANK_TOL};
use crate::structure::StructureParams;

/// `G` (`n_min x m`) together with the structure that fixes its row partition.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockMatrixG {
    data: DMatrix<f64>,
    structure: StructureParams,
}

impl BlockMatrixG {
    pub fn new(structure: StructureParams, data: DMatrix<f64>) -> Result<Self> {
        if data.nrows() != structure.n_min() {
            return Err(Error::Dimension(format!(
                "G has {} rows but structure {structure} needs n_min = {}",
                data.nrows(),
                structure.n_min()
            )));
        }
        if data.ncols() == 0 {
            return Err(Error::Dimension("G needs at least one column".into()));
        }
        Ok(Self { data, structure })
    }

    pub fn zeros(structure: StructureParams, m: usize) -> Self {
        let n = structure.n_min();
        Self {
            data: DMatrix::zeros(n, m),
            structure,
        }
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut DMatrix<f64> {
        &mut self.data
    }

    pub fn into_data(self) -> DMatrix<f64> {
        self.data
    }

    pub fn structure(&self) -> &StructureParams {
        &self.structure
    }

    pub fn m(&self) -> usize {
        self.data.ncols()
    }

    /// `G_{r, j}`, a `d_r x m` view. Panics if exponent `r` is absent.
    pub fn block(&self, r: usize, j: usize) -> DMatrixView<'_, f64> {
        let b = self
            .structure
            .block(r)
            .unwrap_or_else(|| panic!("exponent {r} not in {}", self.structure));
        let rows = b.label_rows(j);
        self.data.rows(rows.start, rows.len())
    }

    /// `G_{:,0}`, the `𝔩 x m` stack of every `G_{r,0}`.
    pub fn g0(&self) -> DMatrix<f64> {
        let rows = self.structure.g0_rows();
        DMatrix::from_fn(rows.len(), self.m(), |i, j| self.data[(rows[i], j)])
    }

    /// Same structure, different entries.
    pub fn with_data(&self, data: DMatrix<f64>) -> Result<Self> {
        Self::new(self.structure.clone(), data)
    }
}

impl Serialize for BlockMatrixG {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("BlockMatrixG", 3)?;
        st.serialize_field("structure", &self.structure)?;
        serialize_matrix_fields(&mut st, &self.data)?;
        st.end()
    }
}

#[derive(Deserialize)]
struct StructuredMatrixInput {
    structure: StructureParams,
    #[serde(default)]
    shape: Option<[usize; 2]>,
    data: DataInput,
}

impl<'de> Deserialize<'de> for BlockMatrixG {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = StructuredMatrixInput::deserialize(d)?;
        let data = raw.data.into_matrix(raw.shape).map_err(D::Error::custom)?;
        BlockMatrixG::new(raw.structure, data).map_err(D::Error::custom)
    }
}

/// One nonzero block placement of `κ`: the `G` rows at `g_start` land in the
/// `κ` rows at `kappa_start`, column block `col_block` (lag `p - col_block`).
#[derive(Debug, Clone, Copy)]
struct Placement {
    kappa_start: usize,
    g_start: usize,
    col_block: usize,
    rows: usize,
}

/// Row block `(r, l)` of `κ(G)` sits at sub-block position `l`; at lag `i <= r - l`
/// it holds `G_{r, r-l-i}`, which lives at position `l + i - 1`.
fn placements(s: &StructureParams) -> impl Iterator<Item = Placement> + '_ {
    let p = s.p();
    s.blocks().iter().flat_map(move |b| {
        (0..b.exponent).flat_map(move |l| {
            (1..=b.exponent - l).map(move |i| Placement {
                kappa_start: b.position_rows(l).start,
                g_start: b.position_rows(l + i - 1).start,
                col_block: p - i,
                rows: b.sub_rank,
            })
        })
    })
}

/// The banded embedding `κ(G)` of size `n_min x (p m)`.
pub fn kappa(g: &BlockMatrixG) -> DMatrix<f64> {
    let s = g.structure();
    let m = g.m();
    let mut out = DMatrix::zeros(s.n_min(), s.p() * m);
    for pl in placements(s) {
        out.view_mut((pl.kappa_start, pl.col_block * m), (pl.rows, m))
            .copy_from(&g.data.view((pl.g_start, 0), (pl.rows, m)));
    }
    out
}

/// Adjoint of `κ` under the Frobenius pairing: `<κ(η), N> = <η, κ*(N)>`.
pub fn kappa_adjoint(s: &StructureParams, n: &DMatrix<f64>, m: usize) -> DMatrix<f64> {
    assert_eq!(n.shape(), (s.n_min(), s.p() * m), "kappa_adjoint shape");
    let mut out = DMatrix::zeros(s.n_min(), m);
    for pl in placements(s) {
        let src = n.view((pl.kappa_start, pl.col_block * m), (pl.rows, m));
        let mut dst = out.view_mut((pl.g_start, 0), (pl.rows, m));
        dst += src;
    }
    out
}

/// Outcome of a numerical rank test against the required rank `𝔩`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankReport {
    pub rank: usize,
    pub required: usize,
    pub passed: bool,
    pub singular_values: Vec<f64>,
}

impl RankReport {
    fn from_matrix(m: &DMatrix<f64>, required: usize, tol: f64) -> Self {
        let (rank, singular_values) = numerical_rank(m, tol);
        Self {
            rank,
            required,
            passed: rank == required && m.nrows().min(m.ncols()) >= required,
            singular_values,
        }
    }
}

/// Rank of `G_{:,0}` versus `𝔩` (first minimality condition).
pub fn check_minimality_g(g: &BlockMatrixG, tol: f64) -> RankReport {
    RankReport::from_matrix(&g.g0(), g.structure().rank_alloc(), tol)
}

/// Rank of `H_{:,0}` (the `H_{r,0}` columns) versus `𝔩` (second minimality condition).
pub fn check_minimality_h(h: &DMatrix<f64>, s: &StructureParams, tol: f64) -> Result<RankReport> {
    if h.ncols() != s.n_min() {
        return Err(Error::Dimension(format!(
            "H has {} columns, structure needs {}",
            h.ncols(),
            s.n_min()
        )));
    }
    let cols: Vec<usize> = s.blocks().iter().flat_map(|b| b.position_rows(0)).collect();
    let h0 = DMatrix::from_fn(h.nrows(), cols.len(), |i, j| h[(i, cols[j])]);
    Ok(RankReport::from_matrix(&h0, s.rank_alloc(), tol))
}

/// [`check_minimality_g`] with the default relative tolerance.
pub fn minimality_g(g: &BlockMatrixG) -> RankReport {
    check_minimality_g(g, RANK_TOL)
}
