//! Dense 3-D scalar volumes and the operations the refinement pipeline
//! needs on them: native file I/O, thresholding, morphology, connected
//! components, and overlap metrics.
//!
//! A [`Volume3`] is a flat `f64` array in x-fastest order (x varies fastest,
//! then y, then z) plus dimensions, voxel spacing in millimeters, and a
//! [`VolumeKind`] tag. The kind carries value-range invariants that are
//! enforced at construction: probabilities and entropies live in `[0, 1]`,
//! masks hold exactly `0.0` or `1.0`.
//!
//! The on-disk format narrows to 32-bit floats (see [`io`]); in memory all
//! arithmetic is done in `f64`.

mod metrics;
mod morphology;

pub mod io;

pub use metrics::dice;
pub use morphology::{dilate, largest_connected_component};

use crate::error::{Error, Result};

/// Interpretation tag for the scalar field stored in a [`Volume3`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VolumeKind {
    Intensity,
    Probability,
    Entropy,
    Mask,
}

impl VolumeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            VolumeKind::Intensity => "intensity",
            VolumeKind::Probability => "probability",
            VolumeKind::Entropy => "entropy",
            VolumeKind::Mask => "mask",
        }
    }

    pub fn parse(s: &str) -> Option<VolumeKind> {
        match s {
            "intensity" => Some(VolumeKind::Intensity),
            "probability" => Some(VolumeKind::Probability),
            "entropy" => Some(VolumeKind::Entropy),
            "mask" => Some(VolumeKind::Mask),
            _ => None,
        }
    }
}

impl std::fmt::Display for VolumeKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Dense 3-D scalar field with dimensions, spacing, and a kind tag.
///
/// Data is stored flat in x-fastest order: the voxel `(x, y, z)` lives at
/// index `x + nx * (y + ny * z)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Volume3 {
    dims: (usize, usize, usize),
    spacing: (f64, f64, f64),
    kind: VolumeKind,
    data: Vec<f64>,
}

impl Volume3 {
    /// Builds a volume and checks every invariant: positive dimensions and
    /// spacing, matching data length, finite values, and the kind-specific
    /// value ranges.
    pub fn new(
        dims: (usize, usize, usize),
        spacing: (f64, f64, f64),
        kind: VolumeKind,
        data: Vec<f64>,
    ) -> Result<Self> {
        let (nx, ny, nz) = dims;
        if nx == 0 || ny == 0 || nz == 0 {
            return Err(Error::Invariant(format!(
                "dimensions must be positive, got {nx}x{ny}x{nz}"
            )));
        }
        let (sx, sy, sz) = spacing;
        if !(sx > 0.0 && sy > 0.0 && sz > 0.0)
            || !(sx.is_finite() && sy.is_finite() && sz.is_finite())
        {
            return Err(Error::Invariant(format!(
                "spacing must be positive and finite, got ({sx}, {sy}, {sz})"
            )));
        }
        let expected = nx * ny * nz;
        if data.len() != expected {
            return Err(Error::Invariant(format!(
                "data length {} does not match dims {nx}x{ny}x{nz} = {expected}",
                data.len()
            )));
        }
        for (i, &v) in data.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::Invariant(format!("non-finite value at voxel {i}")));
            }
            let ok = match kind {
                VolumeKind::Intensity => true,
                VolumeKind::Probability | VolumeKind::Entropy => (0.0..=1.0).contains(&v),
                VolumeKind::Mask => v == 0.0 || v == 1.0,
            };
            if !ok {
                return Err(Error::Invariant(format!(
                    "value {v} at voxel {i} is out of range for kind {kind}"
                )));
            }
        }
        Ok(Self {
            dims,
            spacing,
            kind,
            data,
        })
    }

    /// Constant-valued volume.
    pub fn filled(
        dims: (usize, usize, usize),
        spacing: (f64, f64, f64),
        kind: VolumeKind,
        value: f64,
    ) -> Result<Self> {
        let n = dims.0 * dims.1 * dims.2;
        Self::new(dims, spacing, kind, vec![value; n])
    }

    /// Builds a volume by evaluating `f` at every voxel coordinate.
    pub fn from_fn(
        dims: (usize, usize, usize),
        spacing: (f64, f64, f64),
        kind: VolumeKind,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Result<Self> {
        let (nx, ny, nz) = dims;
        let mut data = Vec::with_capacity(nx * ny * nz);
        for z in 0..nz {
            for y in 0..ny {
                for x in 0..nx {
                    data.push(f(x, y, z));
                }
            }
        }
        Self::new(dims, spacing, kind, data)
    }

    /// Mask volume from a boolean array in flat order. Infallible: the bits
    /// satisfy the mask invariant by construction.
    pub fn mask_from_bits(
        dims: (usize, usize, usize),
        spacing: (f64, f64, f64),
        bits: &[bool],
    ) -> Self {
        assert_eq!(
            bits.len(),
            dims.0 * dims.1 * dims.2,
            "bit count must match dims"
        );
        Self {
            dims,
            spacing,
            kind: VolumeKind::Mask,
            data: bits.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect(),
        }
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        self.dims
    }

    pub fn spacing(&self) -> (f64, f64, f64) {
        self.spacing
    }

    pub fn kind(&self) -> VolumeKind {
        self.kind
    }

    /// Total number of voxels.
    pub fn voxel_count(&self) -> usize {
        self.data.len()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Flat index of voxel `(x, y, z)`.
    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        debug_assert!(x < self.dims.0 && y < self.dims.1 && z < self.dims.2);
        x + self.dims.0 * (y + self.dims.1 * z)
    }

    /// Coordinates of the voxel at flat index `i`.
    #[inline]
    pub fn coords(&self, i: usize) -> (usize, usize, usize) {
        let (nx, ny, _) = self.dims;
        (i % nx, (i / nx) % ny, i / (nx * ny))
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, z: usize) -> f64 {
        self.data[self.index(x, y, z)]
    }

    #[inline]
    pub fn value(&self, i: usize) -> f64 {
        self.data[i]
    }

    pub fn same_geometry(&self, other: &Volume3) -> bool {
        self.dims == other.dims && self.spacing == other.spacing
    }

    pub fn check_same_geometry(&self, other: &Volume3, what: &str) -> Result<()> {
        if self.same_geometry(other) {
            Ok(())
        } else {
            Err(Error::GeometryMismatch(format!(
                "{what}: {:?}/{:?} vs {:?}/{:?}",
                self.dims, self.spacing, other.dims, other.spacing
            )))
        }
    }

    /// Binary threshold: output voxel is 1 iff the input is strictly greater
    /// than `t`. Requires a probability or entropy volume; `t` outside
    /// `[0, 1]` is allowed and yields an all-0 or all-1 mask.
    pub fn threshold(&self, t: f64) -> Volume3 {
        assert!(
            matches!(self.kind, VolumeKind::Probability | VolumeKind::Entropy),
            "threshold requires a probability or entropy volume, got {}",
            self.kind
        );
        let bits: Vec<bool> = self.data.iter().map(|&v| v > t).collect();
        Volume3::mask_from_bits(self.dims, self.spacing, &bits)
    }

    /// True iff the voxel at flat index `i` is set. Meaningful for masks.
    #[inline]
    pub fn is_foreground(&self, i: usize) -> bool {
        self.data[i] != 0.0
    }

    /// Number of set voxels in a mask.
    pub fn foreground_count(&self) -> usize {
        self.data.iter().filter(|&&v| v != 0.0).count()
    }

    pub(crate) fn bits(&self) -> Vec<bool> {
        self.data.iter().map(|&v| v != 0.0).collect()
    }
}

/// Ordered collection of `T` stochastic prediction volumes sharing one
/// geometry. Each pass is a probability or mask volume.
#[derive(Debug, Clone)]
pub struct PassStack {
    passes: Vec<Volume3>,
}

impl PassStack {
    pub fn new(passes: Vec<Volume3>) -> Result<Self> {
        let first = passes.first().ok_or(Error::EmptyPassStack)?;
        for (t, p) in passes.iter().enumerate() {
            if !matches!(p.kind(), VolumeKind::Probability | VolumeKind::Mask) {
                return Err(Error::Invariant(format!(
                    "pass {t} has kind {}, expected probability or mask",
                    p.kind()
                )));
            }
            first.check_same_geometry(p, &format!("pass {t}"))?;
        }
        Ok(Self { passes })
    }

    /// Number of stochastic passes `T`.
    pub fn len(&self) -> usize {
        self.passes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.passes.is_empty()
    }

    pub fn passes(&self) -> &[Volume3] {
        &self.passes
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        self.passes[0].dims()
    }

    pub fn spacing(&self) -> (f64, f64, f64) {
        self.passes[0].spacing()
    }
}
