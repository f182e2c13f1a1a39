//! Stages of disjoint Givens rotations.
//!
//! A stage is a product of Givens rotations acting on pairwise disjoint
//! coordinate planes, so its factors commute and the whole stage can be
//! applied in a single O(n) sweep.

use super::OperatorError;

/// Which coordinate pairing a uniform-angle stage uses.
///
/// With 0-based indices, `Even` pairs `(0,1), (2,3), ...` and `Odd` pairs
/// `(1,2), (3,4), ...`. A trailing coordinate without a partner is left
/// untouched.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PairOffset {
    Even,
    Odd,
}

impl PairOffset {
    pub fn from_index(offset: u8) -> Option<Self> {
        match offset {
            0 => Some(PairOffset::Even),
            1 => Some(PairOffset::Odd),
            _ => None,
        }
    }

    pub fn index(self) -> u8 {
        match self {
            PairOffset::Even => 0,
            PairOffset::Odd => 1,
        }
    }

    fn start(self) -> usize {
        self.index() as usize
    }
}

/// One rotation of the plane `(i, j)` by `theta`, with `i` the coordinate
/// that receives `c*v_i - s*v_j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation {
    pub i: usize,
    pub j: usize,
    pub theta: f64,
}

#[derive(Debug, Clone, PartialEq)]
enum StageKind {
    Uniform {
        offset: PairOffset,
        theta: f64,
        cos: f64,
        sin: f64,
    },
    Explicit {
        rotations: Vec<Rotation>,
        cos_sin: Vec<(f64, f64)>,
        // slot[k] = index into `rotations` touching coordinate k, or NONE
        slot: Vec<u32>,
    },
}

const NONE: u32 = u32::MAX;

/// Where a coordinate sits inside a stage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct PairRole {
    pub partner: usize,
    pub is_first: bool,
    pub cos: f64,
    pub sin: f64,
}

/// A set of Givens rotations on disjoint coordinate pairs of `R^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct RotationStage {
    n: usize,
    kind: StageKind,
}

impl RotationStage {
    /// Uniform-angle stage pairing coordinates according to `offset`.
    pub fn uniform(n: usize, offset: PairOffset, theta: f64) -> Result<Self, OperatorError> {
        if !theta.is_finite() {
            return Err(OperatorError::InvalidArgument(format!(
                "rotation angle must be finite, got {theta}"
            )));
        }
        Ok(RotationStage {
            n,
            kind: StageKind::Uniform {
                offset,
                theta,
                cos: theta.cos(),
                sin: theta.sin(),
            },
        })
    }

    /// Stage built from an explicit list of `(i, j, theta)` triplets. The
    /// pairs must be disjoint; chain several stages to express overlapping
    /// rotation sequences.
    pub fn explicit(n: usize, rotations: Vec<Rotation>) -> Result<Self, OperatorError> {
        if n >= NONE as usize {
            return Err(OperatorError::InvalidArgument(format!(
                "explicit stages support n < {NONE}, got {n}"
            )));
        }
        let mut slot = vec![NONE; n];
        for (k, r) in rotations.iter().enumerate() {
            if r.i >= n || r.j >= n || r.i == r.j {
                return Err(OperatorError::InvalidArgument(format!(
                    "rotation plane ({}, {}) invalid for n = {n}",
                    r.i, r.j
                )));
            }
            if !r.theta.is_finite() {
                return Err(OperatorError::InvalidArgument(format!(
                    "rotation angle must be finite, got {}",
                    r.theta
                )));
            }
            for idx in [r.i, r.j] {
                if slot[idx] != NONE {
                    return Err(OperatorError::InvalidArgument(format!(
                        "coordinate {idx} appears in two rotations of one stage"
                    )));
                }
                slot[idx] = k as u32;
            }
        }
        let cos_sin = rotations.iter().map(|r| (r.theta.cos(), r.theta.sin())).collect();
        Ok(RotationStage {
            n,
            kind: StageKind::Explicit {
                rotations,
                cos_sin,
                slot,
            },
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `Some((offset, theta))` for uniform-angle stages.
    pub fn uniform_params(&self) -> Option<(PairOffset, f64)> {
        match &self.kind {
            StageKind::Uniform { offset, theta, .. } => Some((*offset, *theta)),
            StageKind::Explicit { .. } => None,
        }
    }

    /// The rotation triplets of an explicit stage.
    pub fn explicit_rotations(&self) -> Option<&[Rotation]> {
        match &self.kind {
            StageKind::Explicit { rotations, .. } => Some(rotations),
            StageKind::Uniform { .. } => None,
        }
    }

    /// Number of rotations in the stage.
    pub fn pair_count(&self) -> usize {
        match &self.kind {
            StageKind::Uniform { offset, .. } => match offset {
                PairOffset::Even => self.n / 2,
                PairOffset::Odd => self.n.saturating_sub(1) / 2,
            },
            StageKind::Explicit { rotations, .. } => rotations.len(),
        }
    }

    /// Bytes needed to describe the stage, excluding lookup tables that
    /// can be rebuilt from the description.
    pub fn descriptor_bytes(&self) -> usize {
        match &self.kind {
            StageKind::Uniform { .. } => std::mem::size_of::<usize>() + 1 + std::mem::size_of::<f64>(),
            StageKind::Explicit { rotations, .. } => {
                std::mem::size_of::<usize>() + rotations.len() * std::mem::size_of::<Rotation>()
            }
        }
    }

    /// Applies the stage (or its transpose) to `v` in place.
    pub fn apply_in_place(&self, v: &mut [f64], transposed: bool) -> Result<(), OperatorError> {
        if v.len() != self.n {
            return Err(OperatorError::DimensionMismatch {
                expected: self.n,
                found: v.len(),
            });
        }
        self.apply_unchecked(v, transposed);
        Ok(())
    }

    /// Returns the stage (or its transpose) applied to `v`.
    pub fn apply(&self, v: &[f64], transposed: bool) -> Result<Vec<f64>, OperatorError> {
        let mut out = v.to_vec();
        self.apply_in_place(&mut out, transposed)?;
        Ok(out)
    }

    pub(crate) fn apply_unchecked(&self, v: &mut [f64], transposed: bool) {
        debug_assert_eq!(v.len(), self.n);
        match &self.kind {
            StageKind::Uniform { offset, cos, sin, .. } => {
                let (c, s) = (*cos, if transposed { -*sin } else { *sin });
                let start = offset.start().min(v.len());
                for pair in v[start..].chunks_exact_mut(2) {
                    let (a, b) = (pair[0], pair[1]);
                    pair[0] = c * a - s * b;
                    pair[1] = s * a + c * b;
                }
            }
            StageKind::Explicit { rotations, cos_sin, .. } => {
                for (r, &(c, s)) in rotations.iter().zip(cos_sin) {
                    let s = if transposed { -s } else { s };
                    let (a, b) = (v[r.i], v[r.j]);
                    v[r.i] = c * a - s * b;
                    v[r.j] = s * a + c * b;
                }
            }
        }
    }

    /// `dst = diag(scale) stage(src)`, a single pass for uniform stages.
    pub(crate) fn apply_into_scaled(&self, src: &[f64], dst: &mut [f64], transposed: bool, scale: Option<&[f64]>) {
        debug_assert_eq!(src.len(), self.n);
        debug_assert_eq!(dst.len(), self.n);
        match (&self.kind, scale) {
            (StageKind::Uniform { offset, cos, sin, .. }, Some(w)) => {
                let (c, s) = (*cos, if transposed { -*sin } else { *sin });
                let start = offset.start().min(self.n);
                let end = start + (self.n - start) / 2 * 2;
                for i in (0..start).chain(end..self.n) {
                    dst[i] = w[i] * src[i];
                }
                let pairs = dst[start..end]
                    .chunks_exact_mut(2)
                    .zip(src[start..end].chunks_exact(2))
                    .zip(w[start..end].chunks_exact(2));
                for ((d, x), w) in pairs {
                    d[0] = w[0] * (c * x[0] - s * x[1]);
                    d[1] = w[1] * (s * x[0] + c * x[1]);
                }
            }
            _ => {
                dst.copy_from_slice(src);
                self.apply_unchecked(dst, transposed);
                if let Some(w) = scale {
                    for (d, w) in dst.iter_mut().zip(w) {
                        *d *= w;
                    }
                }
            }
        }
    }

    /// Role of coordinate `idx` in this stage, `None` when it is untouched.
    pub(crate) fn role(&self, idx: usize) -> Option<PairRole> {
        match &self.kind {
            StageKind::Uniform { offset, cos, sin, .. } => {
                let start = offset.start();
                if idx < start {
                    return None;
                }
                let rel = idx - start;
                let is_first = rel.is_multiple_of(2);
                let partner = if is_first { idx + 1 } else { idx - 1 };
                if partner >= self.n {
                    return None;
                }
                Some(PairRole {
                    partner,
                    is_first,
                    cos: *cos,
                    sin: *sin,
                })
            }
            StageKind::Explicit {
                rotations,
                cos_sin,
                slot,
            } => {
                let k = *slot.get(idx)?;
                if k == NONE {
                    return None;
                }
                let r = rotations[k as usize];
                let (cos, sin) = cos_sin[k as usize];
                let is_first = r.i == idx;
                Some(PairRole {
                    partner: if is_first { r.j } else { r.i },
                    is_first,
                    cos,
                    sin,
                })
            }
        }
    }

    /// Applies the stage (or its transpose) to a sparse vector given as
    /// sorted, duplicate-free `(index, value)` entries.
    pub(crate) fn apply_sparse(&self, entries: &[(usize, f64)], transposed: bool) -> Vec<(usize, f64)> {
        let mut out: Vec<(usize, f64)> = Vec::with_capacity(entries.len() * 2);
        for &(idx, val) in entries {
            match self.role(idx) {
                None => out.push((idx, val)),
                Some(role) => {
                    let s = if transposed { -role.sin } else { role.sin };
                    if role.is_first {
                        // column i of [[c, -s], [s, c]]
                        out.push((idx, role.cos * val));
                        out.push((role.partner, s * val));
                    } else {
                        out.push((role.partner, -s * val));
                        out.push((idx, role.cos * val));
                    }
                }
            }
        }
        merge_sorted(out)
    }
}

fn merge_sorted(mut entries: Vec<(usize, f64)>) -> Vec<(usize, f64)> {
    entries.sort_unstable_by_key(|e| e.0);
    let mut merged: Vec<(usize, f64)> = Vec::with_capacity(entries.len());
    for (idx, val) in entries {
        match merged.last_mut() {
            Some(last) if last.0 == idx => last.1 += val,
            _ => merged.push((idx, val)),
        }
    }
    merged
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn quarter_turn_maps_e1_to_e2() {
        let stage = RotationStage::uniform(2, PairOffset::Even, PI / 2.0).unwrap();
        let out = stage.apply(&[1.0, 0.0], false).unwrap();
        assert_abs_diff_eq!(out[0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(out[1], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn zero_angle_is_identity() {
        let v = [0.3, -1.0, 2.5, 7.0, 1e-3];
        for offset in [PairOffset::Even, PairOffset::Odd] {
            let stage = RotationStage::uniform(5, offset, 0.0).unwrap();
            assert_eq!(stage.apply(&v, false).unwrap(), v.to_vec());
            assert_eq!(stage.apply(&v, true).unwrap(), v.to_vec());
        }
    }

    #[test]
    fn eighth_turn_on_block_pairs() {
        // blocks [[c,-s],[s,c]] with c = s = sqrt(2)/2 applied to (1,0) twice
        let stage = RotationStage::uniform(4, PairOffset::Even, PI / 4.0).unwrap();
        let out = stage.apply(&[1.0, 0.0, 1.0, 0.0], false).unwrap();
        let h = 2f64.sqrt() / 2.0;
        for x in out {
            assert_abs_diff_eq!(x, h, epsilon = 1e-15);
        }
    }

    #[test]
    fn pair_counts_follow_offset() {
        for n in 1..12 {
            let even = RotationStage::uniform(n, PairOffset::Even, 0.1).unwrap();
            let odd = RotationStage::uniform(n, PairOffset::Odd, 0.1).unwrap();
            assert_eq!(even.pair_count(), n / 2);
            let expected_odd = n / 2 - usize::from(n % 2 == 0);
            assert_eq!(odd.pair_count(), expected_odd, "n = {n}");
        }
    }

    #[test]
    fn odd_length_leaves_trailing_coordinate() {
        let stage = RotationStage::uniform(3, PairOffset::Even, 1.0).unwrap();
        let out = stage.apply(&[1.0, 2.0, 3.0], false).unwrap();
        assert_eq!(out[2], 3.0);
        let stage = RotationStage::uniform(4, PairOffset::Odd, 1.0).unwrap();
        let out = stage.apply(&[1.0, 2.0, 3.0, 4.0], false).unwrap();
        assert_eq!(out[0], 1.0);
        assert_eq!(out[3], 4.0);
        assert_ne!(out[1], 2.0);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let stage = RotationStage::uniform(4, PairOffset::Even, 1.0).unwrap();
        let err = stage.apply(&[1.0, 2.0], false).unwrap_err();
        assert!(matches!(
            err,
            OperatorError::DimensionMismatch { expected: 4, found: 2 }
        ));
    }

    #[test]
    fn explicit_stage_rejects_overlap() {
        let rots = vec![Rotation { i: 0, j: 1, theta: 0.2 }, Rotation { i: 1, j: 2, theta: 0.3 }];
        assert!(RotationStage::explicit(3, rots).is_err());
    }

    #[test]
    fn explicit_matches_uniform() {
        let n = 7;
        let theta = 0.7;
        let rots = (0..3)
            .map(|k| Rotation {
                i: 2 * k + 1,
                j: 2 * k + 2,
                theta,
            })
            .collect();
        let explicit = RotationStage::explicit(n, rots).unwrap();
        let uniform = RotationStage::uniform(n, PairOffset::Odd, theta).unwrap();
        let v: Vec<f64> = (0..n).map(|i| (i as f64).sin() + 0.5).collect();
        for t in [false, true] {
            let a = explicit.apply(&v, t).unwrap();
            let b = uniform.apply(&v, t).unwrap();
            for (x, y) in a.iter().zip(&b) {
                assert_abs_diff_eq!(x, y, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn sparse_application_matches_dense() {
        let n = 9;
        let stage = RotationStage::uniform(n, PairOffset::Odd, 0.4).unwrap();
        let entries = vec![(0, 1.5), (3, -2.0), (4, 0.25), (8, 1.0)];
        let mut dense = vec![0.0; n];
        for &(i, v) in &entries {
            dense[i] = v;
        }
        for t in [false, true] {
            let d = stage.apply(&dense, t).unwrap();
            let s = stage.apply_sparse(&entries, t);
            let mut from_sparse = vec![0.0; n];
            for (i, v) in s {
                from_sparse[i] += v;
            }
            for (x, y) in d.iter().zip(&from_sparse) {
                assert_abs_diff_eq!(x, y, epsilon = 1e-15);
            }
        }
    }
}
