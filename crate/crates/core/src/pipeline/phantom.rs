//! Seeded synthetic phantoms: a lumpy ellipsoidal "organ" with known ground
//! truth, a deliberately corrupted prediction, and stochastic passes whose
//! disagreement concentrates around the corrupted regions.
//!
//! The corruption mimics a flawed predictor: eroded/dilated boundary
//! patches, one false-positive blob attached to the organ, and one
//! false-negative notch carved out of it. Per-pass votes are Bernoulli
//! draws whose probability leans toward the truth but stays ambiguous
//! wherever the prediction is wrong, so the entropy map highlights exactly
//! the regions worth refining.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::volume::{dilate, PassStack, Volume3, VolumeKind};

/// Shape and noise parameters of the phantom generator.
#[derive(Debug, Clone)]
pub struct PhantomParams {
    /// Number of stochastic passes `T`.
    pub passes: usize,
    /// Standard deviation of the additive intensity noise.
    pub intensity_noise: f64,
    /// Organ tissue intensity; background is 0.
    pub organ_intensity: f64,
    /// Intensity of the ambiguous tissue at the corrupted sites.
    pub ambiguous_intensity: f64,
    /// Per-pass foreground probability deep inside the organ.
    pub core_confidence: f64,
    /// Per-pass background probability far outside the organ.
    pub background_confidence: f64,
    /// Per-pass foreground probability in the boundary shell, organ side.
    pub shell_fg_probability: f64,
    /// Per-pass foreground probability in the boundary shell, background side.
    pub shell_bg_probability: f64,
    /// Per-pass foreground probability at corrupted voxels whose truth is
    /// foreground; background-truth sites use the complement.
    pub error_fg_probability: f64,
    /// Number of eroded/dilated boundary patches.
    pub jitter_patches: usize,
    pub jitter_radius: f64,
    /// False-positive blob radius as a fraction of the organ's equivalent
    /// radius.
    pub blob_radius_frac: f64,
    /// False-negative notch radius as a fraction of the organ's equivalent
    /// radius.
    pub notch_radius_frac: f64,
}

impl Default for PhantomParams {
    fn default() -> Self {
        Self {
            passes: 20,
            intensity_noise: 0.12,
            organ_intensity: 1.0,
            ambiguous_intensity: 0.55,
            core_confidence: 0.985,
            background_confidence: 0.985,
            shell_fg_probability: 0.85,
            shell_bg_probability: 0.18,
            error_fg_probability: 0.58,
            jitter_patches: 4,
            jitter_radius: 2.5,
            blob_radius_frac: 0.62,
            notch_radius_frac: 0.68,
        }
    }
}

impl PhantomParams {
    fn validate(&self) -> Result<()> {
        if self.passes == 0 {
            return Err(Error::InvalidConfig(
                "phantom needs at least one pass".into(),
            ));
        }
        for (name, p) in [
            ("core_confidence", self.core_confidence),
            ("background_confidence", self.background_confidence),
            ("shell_fg_probability", self.shell_fg_probability),
            ("shell_bg_probability", self.shell_bg_probability),
            ("error_fg_probability", self.error_fg_probability),
        ] {
            let in_range = p > 0.0 && p < 1.0;
            if !in_range {
                return Err(Error::InvalidConfig(format!(
                    "{name} must lie in (0, 1), got {p}"
                )));
            }
        }
        let noise_ok = self.intensity_noise.is_finite() && self.intensity_noise >= 0.0;
        if !noise_ok {
            return Err(Error::InvalidConfig(
                "intensity_noise must be nonnegative".into(),
            ));
        }
        Ok(())
    }
}

/// One synthetic dataset: intensity, ground truth, corrupted prediction, and
/// the pass stack.
#[derive(Debug, Clone)]
pub struct Phantom {
    pub intensity: Volume3,
    pub ground_truth: Volume3,
    pub prediction: Volume3,
    pub passes: PassStack,
}

struct Ellipsoid {
    center: (f64, f64, f64),
    axes: (f64, f64, f64),
}

impl Ellipsoid {
    fn contains(&self, x: usize, y: usize, z: usize) -> bool {
        let dx = (x as f64 - self.center.0) / self.axes.0;
        let dy = (y as f64 - self.center.1) / self.axes.1;
        let dz = (z as f64 - self.center.2) / self.axes.2;
        dx * dx + dy * dy + dz * dz <= 1.0
    }
}

fn unit_direction(rng: &mut ChaCha20Rng) -> (f64, f64, f64) {
    let phi = rng.random::<f64>() * std::f64::consts::TAU;
    let cos_theta = 2.0 * rng.random::<f64>() - 1.0;
    let sin_theta = (1.0 - cos_theta * cos_theta).sqrt();
    (sin_theta * phi.cos(), sin_theta * phi.sin(), cos_theta)
}

/// Applies `f` to every voxel within `radius` of `center` (bounding-box
/// scan).
fn for_sphere(
    dims: (usize, usize, usize),
    center: (f64, f64, f64),
    radius: f64,
    mut f: impl FnMut(usize),
) {
    let (nx, ny, nz) = dims;
    let lo = |c: f64| ((c - radius).floor().max(0.0)) as usize;
    let hi = |c: f64, n: usize| ((c + radius).ceil().min(n as f64 - 1.0)) as usize;
    let r2 = radius * radius;
    for z in lo(center.2)..=hi(center.2, nz) {
        for y in lo(center.1)..=hi(center.1, ny) {
            for x in lo(center.0)..=hi(center.0, nx) {
                let d2 = (x as f64 - center.0).powi(2)
                    + (y as f64 - center.1).powi(2)
                    + (z as f64 - center.2).powi(2);
                if d2 <= r2 {
                    f(x + nx * (y + ny * z));
                }
            }
        }
    }
}

fn invert(bits: &[bool]) -> Vec<bool> {
    bits.iter().map(|&b| !b).collect()
}

fn erode_bits(mask: &Volume3, radius: usize) -> Vec<bool> {
    let inverted = Volume3::mask_from_bits(mask.dims(), mask.spacing(), &invert(&mask.bits()));
    invert(&dilate(&inverted, radius).bits())
}

/// Marches from `start` along `dir` until the ray leaves the mask or the
/// volume; returns the first outside point.
fn ray_exit(
    bits: &[bool],
    dims: (usize, usize, usize),
    start: (f64, f64, f64),
    dir: (f64, f64, f64),
) -> (f64, f64, f64) {
    let (nx, ny, nz) = dims;
    let mut t = 1.0;
    let limit = (nx + ny + nz) as f64;
    while t < limit {
        let p = (
            start.0 + t * dir.0,
            start.1 + t * dir.1,
            start.2 + t * dir.2,
        );
        let (x, y, z) = (p.0.round(), p.1.round(), p.2.round());
        if x < 0.0 || y < 0.0 || z < 0.0 || x >= nx as f64 || y >= ny as f64 || z >= nz as f64 {
            return p;
        }
        if !bits[x as usize + nx * (y as usize + ny * z as usize)] {
            return p;
        }
        t += 1.0;
    }
    start
}

/// Generates one phantom. Deterministic: the same seed yields an identical
/// dataset.
pub fn synth_phantom(
    seed: u64,
    dims: (usize, usize, usize),
    params: &PhantomParams,
) -> Result<Phantom> {
    params.validate()?;
    let (nx, ny, nz) = dims;
    if nx < 24 || ny < 24 || nz < 24 {
        return Err(Error::InvalidConfig(format!(
            "phantom size must be at least 24 per axis, got {nx}x{ny}x{nz}"
        )));
    }
    let n = nx * ny * nz;
    let spacing = (1.0, 1.0, 1.0);
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let scale = nx.min(ny).min(nz) as f64;

    // Ground truth: a main ellipsoid with one attached lump.
    let jitter = |rng: &mut ChaCha20Rng| (rng.random::<f64>() - 0.5) * 0.08 * scale;
    let center = (
        nx as f64 / 2.0 + jitter(&mut rng),
        ny as f64 / 2.0 + jitter(&mut rng),
        nz as f64 / 2.0 + jitter(&mut rng),
    );
    let axis = |rng: &mut ChaCha20Rng| (0.18 + 0.08 * rng.random::<f64>()) * scale;
    let main = Ellipsoid {
        center,
        axes: (axis(&mut rng), axis(&mut rng), axis(&mut rng)),
    };
    let mean_axis = (main.axes.0 + main.axes.1 + main.axes.2) / 3.0;
    let lump_dir = unit_direction(&mut rng);
    let lump = Ellipsoid {
        center: (
            center.0 + lump_dir.0 * 0.8 * mean_axis,
            center.1 + lump_dir.1 * 0.8 * mean_axis,
            center.2 + lump_dir.2 * 0.8 * mean_axis,
        ),
        axes: (main.axes.0 * 0.55, main.axes.1 * 0.55, main.axes.2 * 0.55),
    };
    let mut gt_bits = vec![false; n];
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                if main.contains(x, y, z) || lump.contains(x, y, z) {
                    gt_bits[x + nx * (y + ny * z)] = true;
                }
            }
        }
    }
    let gt = Volume3::mask_from_bits(dims, spacing, &gt_bits);
    let gt_count = gt.foreground_count().max(1);
    let equivalent_radius = (3.0 * gt_count as f64 / (4.0 * std::f64::consts::PI)).cbrt();

    // Confidence regions.
    let core = erode_bits(&gt, 2);
    let far = invert(&dilate(&gt, 2).bits());

    // Corrupted prediction: boundary jitter patches, then a false-positive
    // blob attached to the organ, then a false-negative notch.
    let mut y_bits = gt_bits.clone();
    let inner_band: Vec<usize> = {
        let eroded = erode_bits(&gt, 1);
        (0..n).filter(|&i| gt_bits[i] && !eroded[i]).collect()
    };
    let outer_band: Vec<usize> = {
        let grown = dilate(&gt, 1);
        (0..n)
            .filter(|&i| grown.is_foreground(i) && !gt_bits[i])
            .collect()
    };
    for patch in 0..params.jitter_patches {
        let add = patch % 2 == 0;
        let band = if add { &outer_band } else { &inner_band };
        if band.is_empty() {
            continue;
        }
        let center_idx = band[rng.random_range(0..band.len())];
        let (cx, cy, cz) = gt.coords(center_idx);
        let center = (cx as f64, cy as f64, cz as f64);
        for_sphere(dims, center, params.jitter_radius, |i| {
            if add && outer_band.binary_search(&i).is_ok() {
                y_bits[i] = true;
            } else if !add && inner_band.binary_search(&i).is_ok() {
                y_bits[i] = false;
            }
        });
    }

    let blob_dir = unit_direction(&mut rng);
    let blob_radius =
        params.blob_radius_frac * equivalent_radius * (0.85 + 0.3 * rng.random::<f64>());
    let exit = ray_exit(&gt_bits, dims, center, blob_dir);
    let blob_center = (
        exit.0 + blob_dir.0 * 0.8 * blob_radius,
        exit.1 + blob_dir.1 * 0.8 * blob_radius,
        exit.2 + blob_dir.2 * 0.8 * blob_radius,
    );
    for_sphere(dims, blob_center, blob_radius, |i| y_bits[i] = true);

    let notch_dir = loop {
        let d = unit_direction(&mut rng);
        let dot = d.0 * blob_dir.0 + d.1 * blob_dir.1 + d.2 * blob_dir.2;
        if dot < 0.3 {
            break d;
        }
    };
    let notch_radius =
        params.notch_radius_frac * equivalent_radius * (0.85 + 0.3 * rng.random::<f64>());
    let notch_center = ray_exit(&gt_bits, dims, center, notch_dir);
    for_sphere(dims, notch_center, notch_radius, |i| {
        if gt_bits[i] {
            y_bits[i] = false;
        }
    });

    // Per-pass foreground probability: near-certain in the organ core and
    // far background, mildly uncertain in the boundary shell, ambiguous and
    // truth-leaning wherever the prediction is wrong.
    let q: Vec<f64> = (0..n)
        .map(|i| {
            if y_bits[i] != gt_bits[i] {
                if gt_bits[i] {
                    params.error_fg_probability
                } else {
                    1.0 - params.error_fg_probability
                }
            } else if core[i] {
                params.core_confidence
            } else if far[i] {
                1.0 - params.background_confidence
            } else if gt_bits[i] {
                params.shell_fg_probability
            } else {
                params.shell_bg_probability
            }
        })
        .collect();

    let mut passes = Vec::with_capacity(params.passes);
    for _ in 0..params.passes {
        let bits: Vec<bool> = q.iter().map(|&p| rng.random::<f64>() < p).collect();
        passes.push(Volume3::mask_from_bits(dims, spacing, &bits));
    }

    // Intensity: organ tissue on background, ambiguous tissue at the
    // corrupted sites, plus Gaussian noise.
    let mut ambiguous = vec![false; n];
    for_sphere(dims, blob_center, blob_radius, |i| ambiguous[i] = true);
    for_sphere(dims, notch_center, notch_radius, |i| {
        if gt_bits[i] {
            ambiguous[i] = true;
        }
    });
    let noise = Normal::new(0.0, params.intensity_noise.max(f64::MIN_POSITIVE))
        .expect("valid noise distribution");
    let intensity_data: Vec<f64> = (0..n)
        .map(|i| {
            let base = if ambiguous[i] {
                params.ambiguous_intensity
            } else if gt_bits[i] {
                params.organ_intensity
            } else {
                0.0
            };
            base + noise.sample(&mut rng)
        })
        .collect();
    let intensity = Volume3::new(dims, spacing, VolumeKind::Intensity, intensity_data)?;

    Ok(Phantom {
        intensity,
        ground_truth: gt,
        prediction: Volume3::mask_from_bits(dims, spacing, &y_bits),
        passes: PassStack::new(passes)?,
    })
}
