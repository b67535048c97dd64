//! Structure parameters of a minimal AR-state-space realization.
//!
//! A structure is a list of nilpotent Jordan blocks `K(r, l) = J(0, r) ⊗ I_l`,
//! given either as descending `(exponent, sub_rank)` pairs or as the vector
//! `[d_1, .., d_p]` where `d_r` is the sub-rank of exponent `r` (zero when the
//! exponent is absent). The vector form is canonical here.
//!
//! Row layout of `G` (and column layout of `H`): blocks ordered by descending
//! exponent; the block of exponent `r` has `r` sub-blocks of `d_r` rows each.
//! Sub-block *position* `q` (0-based, top to bottom) holds `G_{r, r-1-q}` and
//! the column block `H_{r, q}`.

use std::fmt;
use std::ops::Range;

use nalgebra::DMatrix;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// One Jordan block `K(exponent, sub_rank)` and where its rows start.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct JordanBlock {
    pub exponent: usize,
    pub sub_rank: usize,
    pub offset: usize,
}

impl JordanBlock {
    /// Rows of sub-block position `q` (0 = top).
    pub fn position_rows(&self, q: usize) -> Range<usize> {
        debug_assert!(q < self.exponent);
        let start = self.offset + q * self.sub_rank;
        start..start + self.sub_rank
    }

    /// Rows of `G_{r, j}`.
    pub fn label_rows(&self, j: usize) -> Range<usize> {
        self.position_rows(self.exponent - 1 - j)
    }

    pub fn size(&self) -> usize {
        self.exponent * self.sub_rank
    }
}

/// Block layout of `F = ⊕ K(r_i, l_i)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JordanSpec {
    blocks: Vec<JordanBlock>,
    n_min: usize,
}

impl JordanSpec {
    fn from_dvec(dvec: &[usize]) -> Self {
        let mut blocks = Vec::new();
        let mut offset = 0;
        for r in (1..=dvec.len()).rev() {
            let d = dvec[r - 1];
            if d > 0 {
                blocks.push(JordanBlock {
                    exponent: r,
                    sub_rank: d,
                    offset,
                });
                offset += r * d;
            }
        }
        Self {
            blocks,
            n_min: offset,
        }
    }

    /// Blocks in descending exponent order.
    pub fn blocks(&self) -> &[JordanBlock] {
        &self.blocks
    }

    pub fn n_min(&self) -> usize {
        self.n_min
    }

    pub fn block(&self, exponent: usize) -> Option<&JordanBlock> {
        self.blocks.iter().find(|b| b.exponent == exponent)
    }

    /// Dense `F`, nilpotent with the superdiagonal identity in each block.
    pub fn matrix(&self) -> DMatrix<f64> {
        let mut f = DMatrix::zeros(self.n_min, self.n_min);
        for b in &self.blocks {
            for q in 0..b.exponent - 1 {
                let rows = b.position_rows(q);
                let cols = b.position_rows(q + 1);
                for (i, j) in rows.zip(cols) {
                    f[(i, j)] = 1.0;
                }
            }
        }
        f
    }
}

/// The structure descriptor, stored canonically as `[d_1, .., d_p]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StructureParams {
    dvec: Vec<usize>,
    jordan: JordanSpec,
}

impl StructureParams {
    /// Build from `[d_1, .., d_p]`; the last entry must be positive.
    pub fn from_dvec(dvec: &[usize]) -> Result<Self> {
        match dvec.last() {
            None => return Err(Error::InvalidStructure("empty d-vector".into())),
            Some(0) => {
                return Err(Error::InvalidStructure(format!(
                    "last entry of d-vector {dvec:?} must be positive"
                )))
            }
            _ => {}
        }
        Ok(Self {
            dvec: dvec.to_vec(),
            jordan: JordanSpec::from_dvec(dvec),
        })
    }

    /// Signed variant used when parsing external input.
    pub fn from_signed_dvec(dvec: &[i64]) -> Result<Self> {
        if let Some(neg) = dvec.iter().find(|&&d| d < 0) {
            return Err(Error::InvalidStructure(format!(
                "negative entry {neg} in d-vector"
            )));
        }
        let v: Vec<usize> = dvec.iter().map(|&d| d as usize).collect();
        Self::from_dvec(&v)
    }

    /// Build from `(exponent, sub_rank)` pairs with strictly descending exponents.
    pub fn from_pairs(pairs: &[(usize, usize)]) -> Result<Self> {
        let Some(&(p, _)) = pairs.first() else {
            return Err(Error::InvalidStructure("empty pair list".into()));
        };
        for w in pairs.windows(2) {
            if w[0].0 <= w[1].0 {
                return Err(Error::InvalidStructure(format!(
                    "exponents must be strictly descending, got {pairs:?}"
                )));
            }
        }
        let mut dvec = vec![0; p];
        for &(r, l) in pairs {
            if r == 0 || l == 0 {
                return Err(Error::InvalidStructure(format!(
                    "exponents and sub-ranks must be positive, got ({r}, {l})"
                )));
            }
            dvec[r - 1] = l;
        }
        Self::from_dvec(&dvec)
    }

    pub fn dvec(&self) -> &[usize] {
        &self.dvec
    }

    /// `(exponent, sub_rank)` for every nonzero `d_r`, descending exponent.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        self.jordan
            .blocks
            .iter()
            .map(|b| (b.exponent, b.sub_rank))
            .collect()
    }

    /// Maximal lag, equal to the largest exponent.
    pub fn p(&self) -> usize {
        self.dvec.len()
    }

    /// `d_r` for `1 <= r <= p`, zero otherwise.
    pub fn d(&self, r: usize) -> usize {
        if r == 0 || r > self.dvec.len() {
            0
        } else {
            self.dvec[r - 1]
        }
    }

    /// Total rank allocation `Σ d_i`.
    pub fn rank_alloc(&self) -> usize {
        self.dvec.iter().sum()
    }

    pub fn n_min(&self) -> usize {
        self.jordan.n_min
    }

    pub fn mcmillan_degree(&self) -> usize {
        self.jordan.n_min
    }

    pub fn jordan(&self) -> &JordanSpec {
        &self.jordan
    }

    pub fn blocks(&self) -> &[JordanBlock] {
        &self.jordan.blocks
    }

    pub fn block(&self, exponent: usize) -> Option<&JordanBlock> {
        self.jordan.block(exponent)
    }

    pub fn jordan_matrix(&self) -> DMatrix<f64> {
        self.jordan.matrix()
    }

    /// Row indices of `G_{:,0}` (columns of `H_{:,0}`), block by block.
    pub fn g0_rows(&self) -> Vec<usize> {
        self.blocks()
            .iter()
            .flat_map(|b| b.label_rows(0))
            .collect()
    }

    /// `Σ_j d_j` over `j >= i`.
    pub fn tail_sum(&self, i: usize) -> usize {
        self.dvec.iter().skip(i.saturating_sub(1)).sum()
    }

    /// Dimension of the centralizer of `F`: `Σ_i (Σ_{j>=i} d_j)^2`.
    pub fn centralizer_dim(&self) -> usize {
        (1..=self.p()).map(|i| self.tail_sum(i).pow(2)).sum()
    }

    /// Check the structure fits a problem with `k` responses and `m` regressors.
    pub fn validate_for(&self, k: usize, m: usize) -> Result<()> {
        let h = k.min(m);
        if self.rank_alloc() > h {
            return Err(Error::InvalidStructure(format!(
                "total rank allocation {} exceeds min(k, m) = {h} for {self}",
                self.rank_alloc()
            )));
        }
        Ok(())
    }

    /// Number of parameters saved relative to an unrestricted VARX(p):
    /// `Σ_i (k - Σ_{j>=i} d_j)(m - Σ_{j>=i} d_j)`.
    pub fn param_reduction(&self, k: usize, m: usize) -> Result<usize> {
        self.validate_for(k, m)?;
        Ok((1..=self.p())
            .map(|i| {
                let t = self.tail_sum(i);
                (k - t) * (m - t)
            })
            .sum())
    }

    /// Free parameters of the structured model, `pmk - param_reduction`.
    pub fn free_params(&self, k: usize, m: usize) -> Result<usize> {
        Ok(self.p() * m * k - self.param_reduction(k, m)?)
    }

    /// Componentwise `d_i <= other.d_i` (a structure nested in `other`).
    pub fn is_nested_in(&self, other: &StructureParams) -> bool {
        let p = self.p().max(other.p());
        (1..=p).all(|i| self.d(i) <= other.d(i))
    }
}

impl fmt::Display for StructureParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, (r, l)) in self.pairs().into_iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "({r}, {l})")?;
        }
        write!(f, "]")
    }
}

/// Parses the display form `[(3, 1), (1, 1)]` (brackets optional) or a bare
/// d-vector such as `1,0,1`.
impl std::str::FromStr for StructureParams {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let body: String = text.chars().filter(|c| !c.is_whitespace()).collect();
        let body = body.trim_start_matches('[').trim_end_matches(']');
        let bad = || Error::InvalidStructure(format!("cannot parse structure {text:?}"));
        if body.contains('(') {
            let mut pairs = Vec::new();
            for item in body.split("),") {
                let item = item.trim_start_matches(',').trim_start_matches('(').trim_end_matches(')');
                let (r, l) = item.split_once(',').ok_or_else(bad)?;
                pairs.push((r.parse().map_err(|_| bad())?, l.parse().map_err(|_| bad())?));
            }
            Self::from_pairs(&pairs)
        } else {
            let d = body
                .split(',')
                .map(|x| x.parse::<i64>().map_err(|_| bad()))
                .collect::<Result<Vec<_>>>()?;
            Self::from_signed_dvec(&d)
        }
    }
}

/// Every structure with largest exponent exactly `p` and `Σ d_i <= h`.
///
/// Ordered descending lexicographically on `(d_p, d_{p-1}, .., d_1)`.
pub fn enumerate_structures(h: usize, p: usize) -> Vec<StructureParams> {
    fn fill(idx: usize, budget: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if idx == 0 {
            out.push(cur.clone());
            return;
        }
        for d in (0..=budget).rev() {
            cur[idx - 1] = d;
            fill(idx - 1, budget - d, cur, out);
        }
        cur[idx - 1] = 0;
    }

    if h == 0 || p == 0 {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut cur = vec![0; p];
    for dp in (1..=h).rev() {
        cur[p - 1] = dp;
        fill(p - 1, h - dp, &mut cur, &mut out);
    }
    out.into_iter()
        .map(|d| StructureParams::from_dvec(&d).expect("d_p > 0 by construction"))
        .collect()
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StructureRepr {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pairs: Option<Vec<(usize, usize)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dvec: Option<Vec<i64>>,
}

impl Serialize for StructureParams {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        StructureRepr {
            pairs: Some(self.pairs()),
            dvec: None,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for StructureParams {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let repr = StructureRepr::deserialize(d)?;
        let parsed = match (repr.pairs, repr.dvec) {
            (Some(pairs), None) => StructureParams::from_pairs(&pairs),
            (None, Some(dvec)) => StructureParams::from_signed_dvec(&dvec),
            (Some(pairs), Some(dvec)) => {
                let a = StructureParams::from_pairs(&pairs).map_err(D::Error::custom)?;
                let b = StructureParams::from_signed_dvec(&dvec).map_err(D::Error::custom)?;
                if a != b {
                    return Err(D::Error::custom("pairs and dvec disagree"));
                }
                Ok(a)
            }
            (None, None) => return Err(D::Error::custom("expected `pairs` or `dvec`")),
        };
        parsed.map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binom(n: usize, k: usize) -> usize {
        (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
    }

    #[test]
    fn enumerate_small_cases() {
        let s = enumerate_structures(2, 2);
        let pairs: Vec<_> = s.iter().map(|x| x.pairs()).collect();
        assert_eq!(
            pairs,
            vec![vec![(2, 2)], vec![(2, 1), (1, 1)], vec![(2, 1)]]
        );
        assert_eq!(enumerate_structures(10, 5).len(), 2002);
        let one = enumerate_structures(1, 1);
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].pairs(), vec![(1, 1)]);
    }

    #[test]
    fn enumerate_counts_match_binomials() {
        for h in 1..=8 {
            for p in 1..=6 {
                let exact = enumerate_structures(h, p);
                assert_eq!(exact.len(), binom(h + p - 1, p), "h={h} p={p}");
                let upto: usize = 1 + (1..=p).map(|q| enumerate_structures(h, q).len()).sum::<usize>();
                assert_eq!(upto, binom(h + p, p));
                let mut dv: Vec<_> = exact.iter().map(|s| s.dvec().to_vec()).collect();
                dv.dedup();
                assert_eq!(dv.len(), exact.len());
            }
        }
    }

    #[test]
    fn dvec_conversions() {
        assert_eq!(StructureParams::from_dvec(&[0, 1]).unwrap().pairs(), vec![(2, 1)]);
        assert_eq!(
            StructureParams::from_dvec(&[1, 0, 1]).unwrap().pairs(),
            vec![(3, 1), (1, 1)]
        );
        assert_eq!(
            StructureParams::from_dvec(&[2, 2]).unwrap().pairs(),
            vec![(2, 2), (1, 2)]
        );
        assert!(StructureParams::from_dvec(&[1, 0]).is_err());
        assert!(StructureParams::from_signed_dvec(&[1, -1, 2]).is_err());
        assert!(StructureParams::from_pairs(&[(1, 1), (2, 1)]).is_err());
    }

    #[test]
    fn jordan_matrix_examples() {
        let f = StructureParams::from_pairs(&[(2, 1), (1, 1)]).unwrap().jordan_matrix();
        let mut want = DMatrix::zeros(3, 3);
        want[(0, 1)] = 1.0;
        assert_eq!(f, want);

        let f = StructureParams::from_pairs(&[(1, 3)]).unwrap().jordan_matrix();
        assert_eq!(f, DMatrix::zeros(3, 3));

        let f = StructureParams::from_pairs(&[(3, 1), (1, 1)]).unwrap().jordan_matrix();
        let mut want = DMatrix::zeros(4, 4);
        want[(0, 1)] = 1.0;
        want[(1, 2)] = 1.0;
        assert_eq!(f, want);
    }

    #[test]
    fn degrees_and_counts() {
        let s = StructureParams::from_pairs(&[(3, 1), (1, 1)]).unwrap();
        assert_eq!(s.mcmillan_degree(), 4);
        assert_eq!(StructureParams::from_pairs(&[(4, 1)]).unwrap().mcmillan_degree(), 4);
        assert_eq!(StructureParams::from_dvec(&[2, 2]).unwrap().mcmillan_degree(), 6);

        assert_eq!(StructureParams::from_dvec(&[1, 1]).unwrap().centralizer_dim(), 5);
        assert_eq!(StructureParams::from_pairs(&[(1, 3)]).unwrap().centralizer_dim(), 9);
        assert_eq!(s.centralizer_dim(), 6);
    }

    #[test]
    fn param_reduction_examples() {
        let full = StructureParams::from_pairs(&[(3, 4)]).unwrap();
        assert_eq!(full.param_reduction(4, 4).unwrap(), 0);
        let thin = StructureParams::from_pairs(&[(3, 1)]).unwrap();
        assert_eq!(thin.param_reduction(5, 4).unwrap(), 3 * 4 * 3);
        let s = StructureParams::from_pairs(&[(2, 1)]).unwrap();
        assert_eq!(s.param_reduction(2, 2).unwrap(), 2);
        assert!(StructureParams::from_pairs(&[(2, 2), (1, 1)])
            .unwrap()
            .param_reduction(2, 5)
            .is_err());
    }

    #[test]
    fn g0_rows_follow_layout() {
        let s = StructureParams::from_pairs(&[(3, 1), (1, 1)]).unwrap();
        assert_eq!(s.g0_rows(), vec![2, 3]);
        let s = StructureParams::from_dvec(&[2, 2]).unwrap();
        assert_eq!(s.g0_rows(), vec![2, 3, 4, 5]);
        assert_eq!(s.block(2).unwrap().label_rows(1), 0..2);
    }

    #[test]
    fn json_forms() {
        let s: StructureParams = serde_json::from_str(r#"{"dvec":[1,0,1]}"#).unwrap();
        assert_eq!(s.pairs(), vec![(3, 1), (1, 1)]);
        let t: StructureParams = serde_json::from_str(r#"{"pairs":[[3,1],[1,1]]}"#).unwrap();
        assert_eq!(s, t);
        assert_eq!(serde_json::to_string(&s).unwrap(), r#"{"pairs":[[3,1],[1,1]]}"#);
        assert!(serde_json::from_str::<StructureParams>(r#"{"dvec":[1,0]}"#).is_err());
        assert!(serde_json::from_str::<StructureParams>(r#"{}"#).is_err());
    }

    #[test]
    fn parse_from_text() {
        let a: StructureParams = "[(3, 1), (1, 1)]".parse().unwrap();
        assert_eq!(a.dvec(), &[1, 0, 1]);
        assert_eq!(a.to_string().parse::<StructureParams>().unwrap(), a);
        assert_eq!("(2,2)".parse::<StructureParams>().unwrap().dvec(), &[0, 2]);
        assert_eq!("0,1".parse::<StructureParams>().unwrap().dvec(), &[0, 1]);
        assert!("1,0".parse::<StructureParams>().is_err());
        assert!("(2,x)".parse::<StructureParams>().is_err());
        assert!("(1,1),(2,1)".parse::<StructureParams>().is_err());
    }
}
