//! Keypoint dataset representation: normalization, rotation augmentation,
//! client partitioning, synthetic generation, and file I/O.
//!
//! A dataset is a list of fixed-length clips. Each clip holds `W` frames of
//! `K` body joints with world `(x, y, z)` coordinates, plus a class label.
//! Features flatten joint-major with `(x, y, z)` innermost, so a clip maps to
//! a `(W, 3K)` matrix — `(60, 99)` at the default 33 joints.

mod io;
mod synthetic;

pub use io::{load_dataset, read_dataset, save_dataset, write_dataset};
pub use synthetic::{generate_synthetic, SyntheticConfig};

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// 3x3 row-major rotation matrix.
pub type Mat3 = [[f64; 3]; 3];

/// One pose sample: `K` joints with world (x, y, z) coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct KeypointFrame {
    pub joints: Vec<[f64; 3]>,
}

impl KeypointFrame {
    pub fn new(joints: Vec<[f64; 3]>) -> Self {
        Self { joints }
    }

    pub fn joint_count(&self) -> usize {
        self.joints.len()
    }

    pub fn is_finite(&self) -> bool {
        self.joints
            .iter()
            .all(|j| j.iter().all(|v| v.is_finite()))
    }
}

/// Action class with a dense id in `[0, C)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionClass {
    pub id: usize,
    pub name: String,
}

/// Fixed-length window of frames plus its class label (an index into the
/// owning dataset's class set).
#[derive(Debug, Clone, PartialEq)]
pub struct ActionClip {
    pub frames: Vec<KeypointFrame>,
    pub label: usize,
}

impl ActionClip {
    /// Flattens the clip into the model input layout: one row per frame,
    /// columns joint-major with (x, y, z) innermost.
    pub fn to_matrix(&self) -> Array2<f64> {
        let w = self.frames.len();
        let k = self.frames.first().map_or(0, |f| f.joint_count());
        let mut m = Array2::zeros((w, 3 * k));
        for (t, frame) in self.frames.iter().enumerate() {
            for (j, joint) in frame.joints.iter().enumerate() {
                for (d, v) in joint.iter().enumerate() {
                    m[[t, 3 * j + d]] = *v;
                }
            }
        }
        m
    }
}

/// A labeled clip collection with fixed dimensions (W frames, K joints).
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub clips: Vec<ActionClip>,
    pub classes: Vec<ActionClass>,
    pub joint_count: usize,
    pub window: usize,
}

impl Dataset {
    pub fn new(
        clips: Vec<ActionClip>,
        classes: Vec<ActionClass>,
        joint_count: usize,
        window: usize,
    ) -> Result<Self> {
        let ds = Self {
            clips,
            classes,
            joint_count,
            window,
        };
        ds.validate()?;
        Ok(ds)
    }

    /// Checks the structural invariants: dense class ids, exact clip
    /// dimensions, labels inside the class set, finite coordinates.
    pub fn validate(&self) -> Result<()> {
        for (i, class) in self.classes.iter().enumerate() {
            if class.id != i {
                return Err(Error::InvalidArgument(format!(
                    "class ids must be dense 0..C-1; position {i} holds id {}",
                    class.id
                )));
            }
        }
        for (i, clip) in self.clips.iter().enumerate() {
            if clip.label >= self.classes.len() {
                return Err(Error::InvalidArgument(format!(
                    "clip {i} label {} outside class set of size {}",
                    clip.label,
                    self.classes.len()
                )));
            }
            if clip.frames.len() != self.window {
                return Err(Error::DimensionMismatch(format!(
                    "clip {i} has {} frames, expected {}",
                    clip.frames.len(),
                    self.window
                )));
            }
            for (t, frame) in clip.frames.iter().enumerate() {
                if frame.joint_count() != self.joint_count {
                    return Err(Error::DimensionMismatch(format!(
                        "clip {i} frame {t} has {} joints, expected {}",
                        frame.joint_count(),
                        self.joint_count
                    )));
                }
                if !frame.is_finite() {
                    return Err(Error::NonFinite(format!("clip {i} frame {t}")));
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.clips.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clips.is_empty()
    }

    /// Number of flattened features per frame (3K).
    pub fn feature_count(&self) -> usize {
        3 * self.joint_count
    }

    /// Per-class clip counts, indexed by class id.
    pub fn class_histogram(&self) -> Vec<usize> {
        let mut hist = vec![0usize; self.classes.len()];
        for clip in &self.clips {
            hist[clip.label] += 1;
        }
        hist
    }

    /// Replaces the class names, keeping ids. Length must match.
    pub fn set_class_names(&mut self, names: &[String]) -> Result<()> {
        if names.len() != self.classes.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} names for {} classes",
                names.len(),
                self.classes.len()
            )));
        }
        for (class, name) in self.classes.iter_mut().zip(names) {
            class.name = name.clone();
        }
        Ok(())
    }
}

/// The three canonical rotation axes of the augmentation scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RotationAxis {
    X,
    Y,
    Z,
}

impl RotationAxis {
    pub const ALL: [RotationAxis; 3] = [RotationAxis::X, RotationAxis::Y, RotationAxis::Z];

    pub fn unit_vector(self) -> [f64; 3] {
        match self {
            RotationAxis::X => [1.0, 0.0, 0.0],
            RotationAxis::Y => [0.0, 1.0, 0.0],
            RotationAxis::Z => [0.0, 0.0, 1.0],
        }
    }
}

/// Largest augmentation angle magnitude, in degrees.
pub const MAX_ROTATION_DEG: i32 = 15;

const AXIS_TOLERANCE: f64 = 1e-9;

fn canonical_axis(axis: [f64; 3]) -> Option<RotationAxis> {
    for candidate in RotationAxis::ALL {
        let u = candidate.unit_vector();
        let close = axis
            .iter()
            .zip(u.iter())
            .all(|(a, b)| (a - b).abs() <= AXIS_TOLERANCE);
        if close {
            return Some(candidate);
        }
    }
    None
}

/// Proper rotation matrix about a canonical axis, via the Rodrigues
/// axis-angle construction. The angle is an integer number of degrees in
/// `[-15, 15]`; anything else is rejected.
pub fn rotation_matrix(axis: [f64; 3], angle_deg: i32) -> Result<Mat3> {
    if !(-MAX_ROTATION_DEG..=MAX_ROTATION_DEG).contains(&angle_deg) {
        return Err(Error::AngleOutOfRange(angle_deg));
    }
    let axis = canonical_axis(axis)
        .ok_or(Error::NonCanonicalAxis)?
        .unit_vector();

    let theta = f64::from(angle_deg).to_radians();
    let (sin, cos) = theta.sin_cos();
    let [ux, uy, uz] = axis;
    // R = I + sin(t) K + (1 - cos(t)) K^2, K the cross-product matrix of the axis.
    let k = [[0.0, -uz, uy], [uz, 0.0, -ux], [-uy, ux, 0.0]];
    let mut r = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let k2 = (0..3).map(|m| k[i][m] * k[m][j]).sum::<f64>();
            r[i][j] = f64::from(u8::from(i == j)) + sin * k[i][j] + (1.0 - cos) * k2;
        }
    }
    Ok(r)
}

/// Convenience wrapper taking the axis as an enum value.
pub fn rotation_matrix_for(axis: RotationAxis, angle_deg: i32) -> Result<Mat3> {
    rotation_matrix(axis.unit_vector(), angle_deg)
}

fn mat_vec(r: &Mat3, v: [f64; 3]) -> [f64; 3] {
    let mut out = [0.0; 3];
    for i in 0..3 {
        out[i] = r[i][0] * v[0] + r[i][1] * v[1] + r[i][2] * v[2];
    }
    out
}

/// Applies a rotation to every joint of a frame.
pub fn rotate_frame(frame: &KeypointFrame, r: &Mat3) -> KeypointFrame {
    KeypointFrame {
        joints: frame.joints.iter().map(|&j| mat_vec(r, j)).collect(),
    }
}

fn rotate_clip(clip: &ActionClip, r: &Mat3) -> ActionClip {
    ActionClip {
        frames: clip.frames.iter().map(|f| rotate_frame(f, r)).collect(),
        label: clip.label,
    }
}

/// Extends a dataset with `per_clip` rotated copies of every clip. Axis is
/// drawn uniformly from {x, y, z} and the angle uniformly from the integers
/// in `[-15, 15]`. Originals come first, then the copies in original-clip
/// order. Labels and clip length never change.
pub fn augment_dataset(ds: &Dataset, per_clip: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut clips = ds.clips.clone();
    clips.reserve(ds.clips.len() * per_clip);
    for clip in &ds.clips {
        for _ in 0..per_clip {
            let axis = RotationAxis::ALL[rng.gen_range(0..3)];
            let angle = rng.gen_range(-MAX_ROTATION_DEG..=MAX_ROTATION_DEG);
            let r = rotation_matrix_for(axis, angle).expect("sampled angle is in range");
            clips.push(rotate_clip(clip, &r));
        }
    }
    Dataset {
        clips,
        classes: ds.classes.clone(),
        joint_count: ds.joint_count,
        window: ds.window,
    }
}

/// Per-feature min/max over the 3K flattened coordinates, fit on training
/// data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalerParams {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl ScalerParams {
    pub fn feature_count(&self) -> usize {
        self.min.len()
    }

    /// Maps one value of feature `idx` to `(v - min) / (max - min)`.
    /// Constant features map to 0.
    pub fn transform_value(&self, idx: usize, v: f64) -> f64 {
        let (lo, hi) = (self.min[idx], self.max[idx]);
        if hi > lo {
            (v - lo) / (hi - lo)
        } else {
            0.0
        }
    }

    fn invert_value(&self, idx: usize, v: f64) -> f64 {
        let (lo, hi) = (self.min[idx], self.max[idx]);
        if hi > lo {
            v * (hi - lo) + lo
        } else {
            lo
        }
    }

    /// Scales a frame-major feature matrix (one row per frame, 3K columns)
    /// in place.
    pub fn transform_matrix(&self, m: &mut Array2<f64>) -> Result<()> {
        if m.ncols() != self.feature_count() {
            return Err(Error::DimensionMismatch(format!(
                "matrix has {} features, scaler has {}",
                m.ncols(),
                self.feature_count()
            )));
        }
        for mut row in m.rows_mut() {
            for (idx, v) in row.iter_mut().enumerate() {
                *v = self.transform_value(idx, *v);
            }
        }
        Ok(())
    }
}

fn feature_index(joint: usize, dim: usize) -> usize {
    3 * joint + dim
}

/// Computes per-feature min/max over all frames of all clips.
pub fn fit_scaler(ds: &Dataset) -> Result<ScalerParams> {
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let n = ds.feature_count();
    let mut min = vec![f64::INFINITY; n];
    let mut max = vec![f64::NEG_INFINITY; n];
    for clip in &ds.clips {
        for frame in &clip.frames {
            for (j, joint) in frame.joints.iter().enumerate() {
                for (d, &v) in joint.iter().enumerate() {
                    let idx = feature_index(j, d);
                    min[idx] = min[idx].min(v);
                    max[idx] = max[idx].max(v);
                }
            }
        }
    }
    Ok(ScalerParams { min, max })
}

fn map_dataset_values(
    ds: &Dataset,
    s: &ScalerParams,
    f: impl Fn(&ScalerParams, usize, f64) -> f64,
) -> Result<Dataset> {
    if s.feature_count() != ds.feature_count() {
        return Err(Error::DimensionMismatch(format!(
            "scaler has {} features, dataset has {}",
            s.feature_count(),
            ds.feature_count()
        )));
    }
    let clips = ds
        .clips
        .iter()
        .map(|clip| ActionClip {
            label: clip.label,
            frames: clip
                .frames
                .iter()
                .map(|frame| KeypointFrame {
                    joints: frame
                        .joints
                        .iter()
                        .enumerate()
                        .map(|(j, joint)| {
                            let mut out = [0.0; 3];
                            for d in 0..3 {
                                out[d] = f(s, feature_index(j, d), joint[d]);
                            }
                            out
                        })
                        .collect(),
                })
                .collect(),
        })
        .collect();
    Ok(Dataset {
        clips,
        classes: ds.classes.clone(),
        joint_count: ds.joint_count,
        window: ds.window,
    })
}

/// Min-max scales every feature. Values outside the fitted range (eval data)
/// are allowed to fall outside `[0, 1]`.
pub fn apply_scaler(ds: &Dataset, s: &ScalerParams) -> Result<Dataset> {
    map_dataset_values(ds, s, ScalerParams::transform_value)
}

/// Inverse of [`apply_scaler`]; constant features recover their fitted
/// minimum.
pub fn invert_scaler(ds: &Dataset, s: &ScalerParams) -> Result<Dataset> {
    map_dataset_values(ds, s, ScalerParams::invert_value)
}

/// Splits a dataset into `n_clients` class-stratified partitions whose union
/// covers it.
///
/// `overlap_fraction` controls a shared pool replicated into every
/// partition: 0 yields disjoint partitions, 1 makes every partition the full
/// dataset, and intermediate values size the pool so that roughly that
/// fraction of each partition is held by more than one client. Clips keep
/// their original dataset order inside each partition.
pub fn partition(
    ds: &Dataset,
    n_clients: usize,
    overlap_fraction: f64,
    seed: u64,
) -> Result<Vec<Dataset>> {
    if n_clients == 0 {
        return Err(Error::InvalidArgument("n_clients must be >= 1".into()));
    }
    if n_clients > ds.len() {
        return Err(Error::InvalidArgument(format!(
            "cannot split {} clips across {} clients",
            ds.len(),
            n_clients
        )));
    }
    if !(0.0..=1.0).contains(&overlap_fraction) {
        return Err(Error::InvalidArgument(format!(
            "overlap_fraction {overlap_fraction} outside [0, 1]"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = n_clients as f64;
    // Fraction of each class that goes to the shared pool. Derived so a
    // partition (pool + disjoint share) holds ~overlap_fraction shared clips.
    let pool_share = overlap_fraction / (overlap_fraction + k * (1.0 - overlap_fraction));

    let mut assigned: Vec<Vec<usize>> = vec![Vec::new(); n_clients];
    for class_id in 0..ds.classes.len() {
        let mut members: Vec<usize> = ds
            .clips
            .iter()
            .enumerate()
            .filter(|(_, c)| c.label == class_id)
            .map(|(i, _)| i)
            .collect();
        members.shuffle(&mut rng);

        let pool_count = if overlap_fraction >= 1.0 {
            members.len()
        } else {
            (members.len() as f64 * pool_share).round() as usize
        };
        let (pool, rest) = members.split_at(pool_count.min(members.len()));
        for client in assigned.iter_mut() {
            client.extend_from_slice(pool);
        }
        // Deal the private remainder round-robin, rotating the starting
        // client per class so remainders spread evenly.
        for (j, &idx) in rest.iter().enumerate() {
            assigned[(class_id + j) % n_clients].push(idx);
        }
    }

    Ok(assigned
        .into_iter()
        .map(|mut indices| {
            indices.sort_unstable();
            Dataset {
                clips: indices.iter().map(|&i| ds.clips[i].clone()).collect(),
                classes: ds.classes.clone(),
                joint_count: ds.joint_count,
                window: ds.window,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn frame_from(vals: &[[f64; 3]]) -> KeypointFrame {
        KeypointFrame::new(vals.to_vec())
    }

    /// Small handmade dataset: `clips_per_class` clips per class, 2 joints,
    /// 3 frames, coordinates varying per clip so scalers have spread.
    fn toy_dataset(classes: usize, clips_per_class: usize) -> Dataset {
        let class_set: Vec<ActionClass> = (0..classes)
            .map(|id| ActionClass {
                id,
                name: format!("action_{id:02}"),
            })
            .collect();
        let mut clips = Vec::new();
        for label in 0..classes {
            for c in 0..clips_per_class {
                let base = (label * clips_per_class + c) as f64;
                let frames = (0..3)
                    .map(|t| {
                        let v = base + t as f64 * 0.25;
                        frame_from(&[[v, -v, 2.0 * v], [v + 1.0, 0.5 * v, -1.0]])
                    })
                    .collect();
                clips.push(ActionClip { frames, label });
            }
        }
        Dataset::new(clips, class_set, 2, 3).unwrap()
    }

    #[test]
    fn rotation_zero_angle_is_identity() {
        let r = rotation_matrix([0.0, 0.0, 1.0], 0).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((r[i][j] - expected).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rotation_about_z_matches_planar_formula() {
        // Oracle: direct evaluation of the 2-D rotation of (1, 0).
        let theta = 15f64.to_radians();
        let r = rotation_matrix([0.0, 0.0, 1.0], 15).unwrap();
        let v = mat_vec(&r, [1.0, 0.0, 0.0]);
        assert!((v[0] - theta.cos()).abs() < 1e-12);
        assert!((v[1] - theta.sin()).abs() < 1e-12);
        assert!(v[2].abs() < 1e-12);
    }

    #[test]
    fn rotation_is_orthonormal_with_unit_determinant() {
        let r = rotation_matrix([1.0, 0.0, 0.0], 10).unwrap();
        // R^T R = I
        for i in 0..3 {
            for j in 0..3 {
                let dot: f64 = (0..3).map(|m| r[m][i] * r[m][j]).sum();
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((dot - expected).abs() < 1e-9, "RtR[{i}][{j}] = {dot}");
            }
        }
        let det = r[0][0] * (r[1][1] * r[2][2] - r[1][2] * r[2][1])
            - r[0][1] * (r[1][0] * r[2][2] - r[1][2] * r[2][0])
            + r[0][2] * (r[1][0] * r[2][1] - r[1][1] * r[2][0]);
        assert!((det - 1.0).abs() < 1e-9);
    }

    #[test]
    fn rotation_rejects_out_of_range_angle() {
        assert!(matches!(
            rotation_matrix([0.0, 0.0, 1.0], 16),
            Err(Error::AngleOutOfRange(16))
        ));
        assert!(matches!(
            rotation_matrix([0.0, 0.0, 1.0], -16),
            Err(Error::AngleOutOfRange(-16))
        ));
    }

    #[test]
    fn rotation_rejects_non_canonical_axis() {
        let diag = [0.577, 0.577, 0.577];
        assert!(matches!(
            rotation_matrix(diag, 5),
            Err(Error::NonCanonicalAxis)
        ));
    }

    #[test]
    fn rotate_frame_identity_and_axis_fixed_point() {
        let frame = frame_from(&[[1.0, 2.0, 3.0], [0.0, 0.0, 1.0]]);
        let id = rotation_matrix([1.0, 0.0, 0.0], 0).unwrap();
        assert_eq!(rotate_frame(&frame, &id), frame);

        for angle in [-15, -7, 3, 15] {
            let r = rotation_matrix([0.0, 0.0, 1.0], angle).unwrap();
            let rotated = rotate_frame(&frame, &r);
            let z_axis_point = rotated.joints[1];
            assert!((z_axis_point[0]).abs() < 1e-12);
            assert!((z_axis_point[1]).abs() < 1e-12);
            assert!((z_axis_point[2] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rotation_preserves_pairwise_distances() {
        let frame = frame_from(&[[0.3, -1.2, 0.7], [2.0, 0.1, -0.4], [-0.5, 0.9, 1.8]]);
        let r = rotation_matrix([0.0, 1.0, 0.0], 11).unwrap();
        let rotated = rotate_frame(&frame, &r);
        for a in 0..3 {
            for b in (a + 1)..3 {
                let d0 = dist(frame.joints[a], frame.joints[b]);
                let d1 = dist(rotated.joints[a], rotated.joints[b]);
                assert!((d0 - d1).abs() < 1e-9);
            }
        }
    }

    fn dist(a: [f64; 3], b: [f64; 3]) -> f64 {
        a.iter()
            .zip(b.iter())
            .map(|(x, y)| (x - y).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    #[test]
    fn augment_zero_copies_is_identity() {
        let ds = toy_dataset(2, 5);
        let out = augment_dataset(&ds, 0, 42);
        assert_eq!(out, ds);
    }

    #[test]
    fn augment_scales_counts_and_keeps_histogram_ratio() {
        let ds = toy_dataset(2, 5);
        let out = augment_dataset(&ds, 2, 7);
        assert_eq!(out.len(), 30);
        let h0 = ds.class_histogram();
        let h1 = out.class_histogram();
        for (a, b) in h0.iter().zip(h1.iter()) {
            assert_eq!(*b, 3 * *a);
        }
        assert!(out.clips.iter().all(|c| c.frames.len() == ds.window));
        out.validate().unwrap();
    }

    #[test]
    fn augment_is_deterministic() {
        let ds = toy_dataset(3, 4);
        let a = augment_dataset(&ds, 3, 123);
        let b = augment_dataset(&ds, 3, 123);
        assert_eq!(a, b);
        let c = augment_dataset(&ds, 3, 124);
        assert_ne!(a, c);
    }

    #[test]
    fn scaler_min_max_and_transform() {
        // One joint, x holds {2, 4, 6}, so feature 0 spans [2, 6].
        let clips = vec![ActionClip {
            frames: vec![
                frame_from(&[[2.0, 5.0, 0.0]]),
                frame_from(&[[4.0, 5.0, 0.0]]),
                frame_from(&[[6.0, 5.0, 0.0]]),
            ],
            label: 0,
        }];
        let ds = Dataset::new(
            clips,
            vec![ActionClass {
                id: 0,
                name: "a".into(),
            }],
            1,
            3,
        )
        .unwrap();
        let s = fit_scaler(&ds).unwrap();
        assert_eq!(s.min[0], 2.0);
        assert_eq!(s.max[0], 6.0);
        // Constant feature keeps min == max.
        assert_eq!(s.min[1], 5.0);
        assert_eq!(s.max[1], 5.0);

        let scaled = apply_scaler(&ds, &s).unwrap();
        let xs: Vec<f64> = scaled.clips[0]
            .frames
            .iter()
            .map(|f| f.joints[0][0])
            .collect();
        assert_eq!(xs, vec![0.0, 0.5, 1.0]);
        // Constant features map to 0.
        assert!(scaled.clips[0].frames.iter().all(|f| f.joints[0][1] == 0.0));
        // Out-of-range values extrapolate linearly: 8 -> 1.5.
        assert_eq!(s.transform_value(0, 8.0), 1.5);
    }

    #[test]
    fn scaler_of_scaled_dataset_spans_unit_interval() {
        let ds = toy_dataset(2, 4);
        let s = fit_scaler(&ds).unwrap();
        let scaled = apply_scaler(&ds, &s).unwrap();
        let s2 = fit_scaler(&scaled).unwrap();
        for idx in 0..s2.feature_count() {
            if s.max[idx] > s.min[idx] {
                assert!(s2.min[idx].abs() < 1e-12);
                assert!((s2.max[idx] - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn scaling_round_trips_through_inverse() {
        let ds = toy_dataset(3, 3);
        let s = fit_scaler(&ds).unwrap();
        let scaled = apply_scaler(&ds, &s).unwrap();
        let back = invert_scaler(&scaled, &s).unwrap();
        for (a, b) in ds.clips.iter().zip(back.clips.iter()) {
            for (fa, fb) in a.frames.iter().zip(b.frames.iter()) {
                for (ja, jb) in fa.joints.iter().zip(fb.joints.iter()) {
                    for d in 0..3 {
                        assert!((ja[d] - jb[d]).abs() < 1e-6);
                    }
                }
            }
        }
    }

    #[test]
    fn fit_scaler_rejects_empty_dataset() {
        let ds = Dataset::new(Vec::new(), Vec::new(), 2, 3).unwrap();
        assert!(matches!(fit_scaler(&ds), Err(Error::EmptyDataset)));
    }

    #[test]
    fn apply_scaler_rejects_dimension_mismatch() {
        let ds = toy_dataset(1, 2);
        let s = ScalerParams {
            min: vec![0.0; 9],
            max: vec![1.0; 9],
        };
        assert!(matches!(
            apply_scaler(&ds, &s),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn single_partition_equals_dataset() {
        let ds = toy_dataset(3, 4);
        let parts = partition(&ds, 1, 0.0, 9).unwrap();
        assert_eq!(parts.len(), 1);
        assert_eq!(parts[0], ds);
    }

    #[test]
    fn two_disjoint_partitions_cover_and_stratify() {
        // Oracle: exhaustive check of cover and disjointness on 12 clips
        // spread evenly over 3 classes.
        let ds = toy_dataset(3, 4);
        let parts = partition(&ds, 2, 0.0, 5).unwrap();
        assert_eq!(parts.len(), 2);
        assert_eq!(parts[0].len(), 6);
        assert_eq!(parts[1].len(), 6);
        for part in &parts {
            assert_eq!(part.class_histogram(), vec![2, 2, 2]);
        }

        let key = |c: &ActionClip| format!("{:?}", c.frames[0].joints);
        let a: std::collections::BTreeSet<String> = parts[0].clips.iter().map(key).collect();
        let b: std::collections::BTreeSet<String> = parts[1].clips.iter().map(key).collect();
        assert!(a.is_disjoint(&b));
        let union: std::collections::BTreeSet<String> = a.union(&b).cloned().collect();
        let all: std::collections::BTreeSet<String> = ds.clips.iter().map(key).collect();
        assert_eq!(union, all);
    }

    #[test]
    fn full_overlap_replicates_dataset_to_every_client() {
        let ds = toy_dataset(3, 4);
        let parts = partition(&ds, 3, 1.0, 2).unwrap();
        for part in &parts {
            assert_eq!(part, &ds);
        }
    }

    #[test]
    fn partition_rejects_more_clients_than_clips() {
        let ds = toy_dataset(2, 1);
        assert!(partition(&ds, 3, 0.0, 1).is_err());
    }

    proptest! {
        #[test]
        fn rotations_preserve_vector_norms(
            angle in -15i32..=15,
            axis_idx in 0usize..3,
            x in -10.0f64..10.0,
            y in -10.0f64..10.0,
            z in -10.0f64..10.0,
        ) {
            let r = rotation_matrix_for(RotationAxis::ALL[axis_idx], angle).unwrap();
            let v = [x, y, z];
            let rv = mat_vec(&r, v);
            let n0 = (x * x + y * y + z * z).sqrt();
            let n1 = (rv[0] * rv[0] + rv[1] * rv[1] + rv[2] * rv[2]).sqrt();
            prop_assert!((n0 - n1).abs() < 1e-9);
        }

        #[test]
        fn partitions_always_cover_the_dataset(
            classes in 1usize..4,
            clips_per_class in 1usize..5,
            n_clients in 1usize..4,
            overlap in 0.0f64..=1.0,
            seed in any::<u64>(),
        ) {
            let ds = toy_dataset(classes, clips_per_class);
            prop_assume!(n_clients <= ds.len());
            let parts = partition(&ds, n_clients, overlap, seed).unwrap();
            let key = |c: &ActionClip| format!("{:?}", c.frames[0].joints);
            let mut seen = std::collections::BTreeSet::new();
            for part in &parts {
                part.validate().unwrap();
                for clip in &part.clips {
                    seen.insert(key(clip));
                }
            }
            let all: std::collections::BTreeSet<String> = ds.clips.iter().map(key).collect();
            prop_assert_eq!(seen, all);
        }
    }
}
