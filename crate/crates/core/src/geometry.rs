//! Scene model and pointing geometry.
//!
//! Everything here is a pure function over value types. Positions handed to
//! [`select_object`] are expected in the robot-base frame; detections and
//! skeleton frames arrive in the camera frame and are moved into the base
//! frame through [`CameraModel`].

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

pub type Vec3 = Vector3<f64>;

/// Minimum separation of the two anchor points of a [`DeicticRay`].
pub const MIN_RAY_LENGTH: f64 = 1e-6;

const ROTATION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("depth must be positive, got {0}")]
    NonPositiveDepth(f64),
    #[error("bounding box has zero area")]
    DegenerateBBox,
    #[error("bounding box center ({u}, {v}) lies outside the image plane")]
    CenterOutsideImage { u: f64, v: f64 },
    #[error("skeleton confidence {confidence} below minimum {minimum}")]
    LowConfidence { confidence: f64, minimum: f64 },
    #[error("elbow and wrist coincide")]
    DegenerateForearm,
    #[error("ray anchor points are closer than {MIN_RAY_LENGTH} m")]
    DegenerateRay,
    #[error("no object of class `{0}` in scene")]
    NoMatchingClass(String),
    #[error("nearest `{class}` is {distance:.3} m from the ray, beyond selection radius {radius} m")]
    OutOfRange {
        class: String,
        distance: f64,
        radius: f64,
    },
    #[error("invalid camera model: {0}")]
    InvalidCamera(String),
    #[error("duplicate object id {0}")]
    DuplicateObjectId(ObjectId),
    #[error("invalid object {id}: {reason}")]
    InvalidObject { id: ObjectId, reason: String },
}

pub type Result<T, E = GeometryError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ObjectId(pub u32);

impl fmt::Display for ObjectId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// Rigid transform from the camera frame into the robot-base frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Extrinsic {
    rotation: Matrix3<f64>,
    translation: Vec3,
}

impl Extrinsic {
    pub fn new(rotation: Matrix3<f64>, translation: Vec3) -> Result<Self> {
        let gram = rotation.transpose() * rotation;
        let off = (gram - Matrix3::identity()).abs().max();
        if !off.is_finite() || off > ROTATION_TOLERANCE {
            return Err(GeometryError::InvalidCamera(format!(
                "rotation is not orthonormal (max |RᵀR − I| = {off:e})"
            )));
        }
        let det = rotation.determinant();
        if (det - 1.0).abs() > ROTATION_TOLERANCE {
            return Err(GeometryError::InvalidCamera(format!(
                "rotation determinant is {det}, expected +1"
            )));
        }
        if !translation.iter().all(|c| c.is_finite()) {
            return Err(GeometryError::InvalidCamera("non-finite translation".into()));
        }
        Ok(Self {
            rotation,
            translation,
        })
    }

    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vec3::zeros(),
        }
    }

    /// Camera placed at `eye` looking at `target`, with base +z as "up".
    /// Camera axes follow the optical convention: x right, y down, z forward.
    pub fn look_at(eye: Vec3, target: Vec3) -> Result<Self> {
        let forward = (target - eye)
            .try_normalize(1e-12)
            .ok_or_else(|| GeometryError::InvalidCamera("eye equals target".into()))?;
        let right = forward
            .cross(&Vec3::z())
            .try_normalize(1e-12)
            .ok_or_else(|| GeometryError::InvalidCamera("view direction is vertical".into()))?;
        let down = forward.cross(&right);
        Self::new(Matrix3::from_columns(&[right, down, forward]), eye)
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vec3 {
        &self.translation
    }

    pub fn apply(&self, p: &Vec3) -> Vec3 {
        self.rotation * p + self.translation
    }

    pub fn apply_inverse(&self, p: &Vec3) -> Vec3 {
        self.rotation.transpose() * (p - self.translation)
    }
}

#[derive(Serialize, Deserialize)]
struct ExtrinsicRepr {
    rotation: [[f64; 3]; 3],
    translation: [f64; 3],
}

impl Serialize for Extrinsic {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let r = &self.rotation;
        ExtrinsicRepr {
            rotation: [
                [r[(0, 0)], r[(0, 1)], r[(0, 2)]],
                [r[(1, 0)], r[(1, 1)], r[(1, 2)]],
                [r[(2, 0)], r[(2, 1)], r[(2, 2)]],
            ],
            translation: [self.translation.x, self.translation.y, self.translation.z],
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Extrinsic {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = ExtrinsicRepr::deserialize(d)?;
        let rows = repr.rotation;
        let rotation = Matrix3::from_row_slice(&[
            rows[0][0], rows[0][1], rows[0][2], rows[1][0], rows[1][1], rows[1][2], rows[2][0],
            rows[2][1], rows[2][2],
        ]);
        Extrinsic::new(rotation, Vec3::from(repr.translation)).map_err(serde::de::Error::custom)
    }
}

/// Pinhole intrinsics plus the camera → robot-base transform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CameraModelRepr", into = "CameraModelRepr")]
pub struct CameraModel {
    fx: f64,
    fy: f64,
    cx: f64,
    cy: f64,
    width: u32,
    height: u32,
    extrinsic: Extrinsic,
}

#[derive(Serialize, Deserialize)]
struct CameraModelRepr {
    fx: f64,
    fy: f64,
    cx: f64,
    cy: f64,
    width: u32,
    height: u32,
    extrinsic: Extrinsic,
}

impl TryFrom<CameraModelRepr> for CameraModel {
    type Error = GeometryError;

    fn try_from(r: CameraModelRepr) -> Result<Self> {
        CameraModel::new(r.fx, r.fy, r.cx, r.cy, r.width, r.height, r.extrinsic)
    }
}

impl From<CameraModel> for CameraModelRepr {
    fn from(c: CameraModel) -> Self {
        Self {
            fx: c.fx,
            fy: c.fy,
            cx: c.cx,
            cy: c.cy,
            width: c.width,
            height: c.height,
            extrinsic: c.extrinsic,
        }
    }
}

impl CameraModel {
    pub fn new(
        fx: f64,
        fy: f64,
        cx: f64,
        cy: f64,
        width: u32,
        height: u32,
        extrinsic: Extrinsic,
    ) -> Result<Self> {
        if !(fx > 0.0 && fx.is_finite() && fy > 0.0 && fy.is_finite()) {
            return Err(GeometryError::InvalidCamera(format!(
                "focal lengths must be positive, got fx={fx}, fy={fy}"
            )));
        }
        if !(cx.is_finite() && cy.is_finite()) {
            return Err(GeometryError::InvalidCamera("non-finite principal point".into()));
        }
        if width == 0 || height == 0 {
            return Err(GeometryError::InvalidCamera("image size must be nonzero".into()));
        }
        Ok(Self {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
            extrinsic,
        })
    }

    pub fn fx(&self) -> f64 {
        self.fx
    }

    pub fn fy(&self) -> f64 {
        self.fy
    }

    pub fn cx(&self) -> f64 {
        self.cx
    }

    pub fn cy(&self) -> f64 {
        self.cy
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn extrinsic(&self) -> &Extrinsic {
        &self.extrinsic
    }

    pub fn contains_pixel(&self, u: f64, v: f64) -> bool {
        (0.0..=self.width as f64).contains(&u) && (0.0..=self.height as f64).contains(&v)
    }

    /// Point in the camera frame seen at pixel `(u, v)` with optical depth `depth`.
    pub fn unproject(&self, u: f64, v: f64, depth: f64) -> Vec3 {
        Vec3::new(
            (u - self.cx) / self.fx * depth,
            (v - self.cy) / self.fy * depth,
            depth,
        )
    }

    /// Projects a base-frame point to `(u, v, depth)`. `None` behind the camera.
    pub fn project(&self, p_base: &Vec3) -> Option<(f64, f64, f64)> {
        let p = self.extrinsic.apply_inverse(p_base);
        if p.z <= 0.0 {
            return None;
        }
        Some((
            self.fx * p.x / p.z + self.cx,
            self.fy * p.y / p.z + self.cy,
            p.z,
        ))
    }

    pub fn to_base(&self, p_cam: &Vec3) -> Vec3 {
        self.extrinsic.apply(p_cam)
    }

    pub fn to_camera(&self, p_base: &Vec3) -> Vec3 {
        self.extrinsic.apply_inverse(p_base)
    }

    /// Re-expresses a camera-frame ray in the robot-base frame.
    pub fn ray_to_base(&self, ray: &DeicticRay) -> DeicticRay {
        DeicticRay {
            r1: self.to_base(&ray.r1),
            r2: self.to_base(&ray.r2),
            timestamp: ray.timestamp,
        }
    }

    /// Base-frame ray from the optical center through pixel `(u, v)`; used
    /// for touch selection on the camera image.
    pub fn pixel_ray(&self, u: f64, v: f64, timestamp: f64) -> Result<DeicticRay> {
        if !self.contains_pixel(u, v) {
            return Err(GeometryError::CenterOutsideImage { u, v });
        }
        DeicticRay::new(
            self.to_base(&Vec3::zeros()),
            self.to_base(&self.unproject(u, v, 1.0)),
            timestamp,
        )
    }
}

/// Axis-aligned image box in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub u_min: f64,
    pub v_min: f64,
    pub u_max: f64,
    pub v_max: f64,
}

impl BoundingBox {
    pub fn from_center(u: f64, v: f64, width: f64, height: f64) -> Self {
        Self {
            u_min: u - width / 2.0,
            v_min: v - height / 2.0,
            u_max: u + width / 2.0,
            v_max: v + height / 2.0,
        }
    }

    pub fn width(&self) -> f64 {
        self.u_max - self.u_min
    }

    pub fn height(&self) -> f64 {
        self.v_max - self.v_min
    }

    pub fn center(&self) -> (f64, f64) {
        (
            (self.u_min + self.u_max) / 2.0,
            (self.v_min + self.v_max) / 2.0,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub class_name: String,
    pub bbox: BoundingBox,
    /// Depth sampled at the box center, meters.
    pub depth_m: f64,
    pub timestamp: f64,
    pub confidence: f64,
}

/// A detected object: class label plus position, height and width.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectRecord {
    pub id: ObjectId,
    pub class_name: String,
    /// Robot-base frame, meters.
    pub position: Vec3,
    pub height_m: f64,
    pub width_m: f64,
}

impl ObjectRecord {
    pub fn new(
        id: ObjectId,
        class_name: impl Into<String>,
        position: Vec3,
        height_m: f64,
        width_m: f64,
    ) -> Result<Self> {
        let rec = Self {
            id,
            class_name: class_name.into(),
            position,
            height_m,
            width_m,
        };
        rec.check()?;
        Ok(rec)
    }

    fn check(&self) -> Result<()> {
        let invalid = |reason: &str| GeometryError::InvalidObject {
            id: self.id,
            reason: reason.to_string(),
        };
        if !(self.height_m > 0.0 && self.height_m.is_finite()) {
            return Err(invalid("height must be positive"));
        }
        if !(self.width_m > 0.0 && self.width_m.is_finite()) {
            return Err(invalid("width must be positive"));
        }
        if !self.position.iter().all(|c| c.is_finite()) {
            return Err(invalid("non-finite position"));
        }
        if self.class_name.is_empty() {
            return Err(invalid("empty class name"));
        }
        Ok(())
    }

    /// Collision footprint: a `width × width` square centered under the object.
    pub fn footprint(&self) -> Footprint {
        let half = self.width_m / 2.0;
        Footprint {
            min: [self.position.x - half, self.position.y - half],
            max: [self.position.x + half, self.position.y + half],
        }
    }

    /// Label used in logs and feedback, e.g. `cup#1`.
    pub fn label(&self) -> String {
        format!("{}{}", self.class_name, self.id)
    }
}

/// Axis-aligned rectangle on the table plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Footprint {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

impl Footprint {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.min[0] && x <= self.max[0] && y >= self.min[1] && y <= self.max[1]
    }
}

/// Scene snapshot: objects sorted by id.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "SceneRepr")]
pub struct Scene {
    objects: Vec<ObjectRecord>,
    pub timestamp: f64,
}

#[derive(Deserialize)]
struct SceneRepr {
    objects: Vec<ObjectRecord>,
    #[serde(default)]
    timestamp: f64,
}

impl TryFrom<SceneRepr> for Scene {
    type Error = GeometryError;

    fn try_from(r: SceneRepr) -> Result<Self> {
        Scene::new(r.objects, r.timestamp)
    }
}

impl Scene {
    pub fn new(mut objects: Vec<ObjectRecord>, timestamp: f64) -> Result<Self> {
        for o in &objects {
            o.check()?;
        }
        objects.sort_by_key(|o| o.id);
        if let Some(w) = objects.windows(2).find(|w| w[0].id == w[1].id) {
            return Err(GeometryError::DuplicateObjectId(w[0].id));
        }
        Ok(Self { objects, timestamp })
    }

    pub fn objects(&self) -> &[ObjectRecord] {
        &self.objects
    }

    pub fn len(&self) -> usize {
        self.objects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objects.is_empty()
    }

    pub fn get(&self, id: ObjectId) -> Option<&ObjectRecord> {
        self.objects
            .binary_search_by_key(&id, |o| o.id)
            .ok()
            .map(|i| &self.objects[i])
    }

    pub fn get_mut(&mut self, id: ObjectId) -> Option<&mut ObjectRecord> {
        self.objects
            .binary_search_by_key(&id, |o| o.id)
            .ok()
            .map(move |i| &mut self.objects[i])
    }

    /// Inserts or replaces the object with the same id.
    pub fn upsert(&mut self, object: ObjectRecord) -> Result<()> {
        object.check()?;
        match self.objects.binary_search_by_key(&object.id, |o| o.id) {
            Ok(i) => self.objects[i] = object,
            Err(i) => self.objects.insert(i, object),
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkeletonFrame {
    pub timestamp: f64,
    pub right_elbow: Vec3,
    pub right_wrist: Vec3,
    pub confidence: f64,
}

/// Pointing line through two anchor points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DeicticRayRepr")]
pub struct DeicticRay {
    pub r1: Vec3,
    pub r2: Vec3,
    pub timestamp: f64,
}

#[derive(Deserialize)]
struct DeicticRayRepr {
    r1: Vec3,
    r2: Vec3,
    timestamp: f64,
}

impl TryFrom<DeicticRayRepr> for DeicticRay {
    type Error = GeometryError;

    fn try_from(r: DeicticRayRepr) -> Result<Self> {
        DeicticRay::new(r.r1, r.r2, r.timestamp)
    }
}

impl DeicticRay {
    pub fn new(r1: Vec3, r2: Vec3, timestamp: f64) -> Result<Self> {
        let ray = Self { r1, r2, timestamp };
        ray.check()?;
        Ok(ray)
    }

    fn check(&self) -> Result<()> {
        let len = (self.r2 - self.r1).norm();
        if !(len > MIN_RAY_LENGTH) {
            return Err(GeometryError::DegenerateRay);
        }
        Ok(())
    }

    pub fn direction(&self) -> Vec3 {
        self.r2 - self.r1
    }
}

/// Back-projects a detection's box center at its sampled depth and moves it
/// into the robot-base frame. Metric extents are the pixel extents scaled by
/// `depth / focal`.
pub fn back_project(det: &Detection, cam: &CameraModel, id: ObjectId) -> Result<ObjectRecord> {
    if !(det.depth_m > 0.0 && det.depth_m.is_finite()) {
        return Err(GeometryError::NonPositiveDepth(det.depth_m));
    }
    let (w, h) = (det.bbox.width(), det.bbox.height());
    if !(w > 0.0 && h > 0.0) {
        return Err(GeometryError::DegenerateBBox);
    }
    let (u, v) = det.bbox.center();
    if !cam.contains_pixel(u, v) {
        return Err(GeometryError::CenterOutsideImage { u, v });
    }
    let p_cam = cam.unproject(u, v, det.depth_m);
    ObjectRecord::new(
        id,
        det.class_name.clone(),
        cam.to_base(&p_cam),
        h * det.depth_m / cam.fy,
        w * det.depth_m / cam.fx,
    )
}

/// Forearm line from elbow to wrist. The ray stays in the skeleton's frame.
pub fn forearm_ray(frame: &SkeletonFrame, min_confidence: f64) -> Result<DeicticRay> {
    if !(frame.confidence >= min_confidence) {
        return Err(GeometryError::LowConfidence {
            confidence: frame.confidence,
            minimum: min_confidence,
        });
    }
    DeicticRay::new(frame.right_elbow, frame.right_wrist, frame.timestamp)
        .map_err(|_| GeometryError::DegenerateForearm)
}

/// Perpendicular distance from `xi` to the infinite line through the ray's
/// anchors: `sqrt(|d × (r1 − ξ)|² / |d|²)` with `d = r2 − r1`.
pub fn point_line_distance(ray: &DeicticRay, xi: &Vec3) -> Result<f64> {
    let d = ray.direction();
    let len2 = d.norm_squared();
    if !(len2.sqrt() > MIN_RAY_LENGTH) {
        return Err(GeometryError::DegenerateRay);
    }
    let cross = d.cross(&(ray.r1 - xi));
    Ok((cross.norm_squared() / len2).sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub object: ObjectRecord,
    pub distance: f64,
}

/// Nearest object of `class_filter` to the pointing line, ties to the
/// smallest id. Fails when nothing of that class exists or when the nearest
/// match is farther than `radius`.
pub fn select_object(
    ray: &DeicticRay,
    scene: &Scene,
    class_filter: &str,
    radius: f64,
) -> Result<Selection> {
    let mut best: Option<(f64, &ObjectRecord)> = None;
    for obj in scene.objects().iter().filter(|o| o.class_name == class_filter) {
        let d = point_line_distance(ray, &obj.position)?;
        // objects are id-sorted, so strict `<` keeps the smallest id on ties
        if best.is_none_or(|(bd, _)| d < bd) {
            best = Some((d, obj));
        }
    }
    let (distance, object) =
        best.ok_or_else(|| GeometryError::NoMatchingClass(class_filter.to_string()))?;
    if distance > radius {
        return Err(GeometryError::OutOfRange {
            class: class_filter.to_string(),
            distance,
            radius,
        });
    }
    Ok(Selection {
        object: object.clone(),
        distance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn cam() -> CameraModel {
        CameraModel::new(600.0, 610.0, 320.0, 240.0, 640, 480, Extrinsic::identity()).unwrap()
    }

    fn det(u: f64, v: f64, depth: f64) -> Detection {
        Detection {
            class_name: "cup".into(),
            bbox: BoundingBox::from_center(u, v, 40.0, 60.0),
            depth_m: depth,
            timestamp: 0.0,
            confidence: 0.9,
        }
    }

    fn obj(id: u32, class: &str, p: [f64; 3]) -> ObjectRecord {
        ObjectRecord::new(ObjectId(id), class, Vec3::from(p), 0.1, 0.07).unwrap()
    }

    #[test]
    fn principal_point_back_projects_onto_optical_axis() {
        let rec = back_project(&det(320.0, 240.0, 1.0), &cam(), ObjectId(1)).unwrap();
        assert_abs_diff_eq!(rec.position, Vec3::new(0.0, 0.0, 1.0), epsilon = 1e-12);
    }

    #[test]
    fn unit_tangent_offset_scales_with_depth() {
        let rec = back_project(&det(320.0 + 600.0, 240.0, 2.0), &{
            CameraModel::new(600.0, 610.0, 320.0, 240.0, 1280, 480, Extrinsic::identity()).unwrap()
        }, ObjectId(1))
        .unwrap();
        assert_abs_diff_eq!(rec.position, Vec3::new(2.0, 0.0, 2.0), epsilon = 1e-12);
    }

    #[test]
    fn metric_extent_uses_depth_over_focal() {
        let rec = back_project(&det(320.0, 240.0, 1.5), &cam(), ObjectId(1)).unwrap();
        assert_abs_diff_eq!(rec.width_m, 40.0 * 1.5 / 600.0, epsilon = 1e-12);
        assert_abs_diff_eq!(rec.height_m, 60.0 * 1.5 / 610.0, epsilon = 1e-12);
    }

    #[test]
    fn back_project_errors() {
        assert_eq!(
            back_project(&det(320.0, 240.0, 0.0), &cam(), ObjectId(1)),
            Err(GeometryError::NonPositiveDepth(0.0))
        );
        let mut d = det(320.0, 240.0, 1.0);
        d.bbox.u_max = d.bbox.u_min;
        assert_eq!(
            back_project(&d, &cam(), ObjectId(1)),
            Err(GeometryError::DegenerateBBox)
        );
        assert!(matches!(
            back_project(&det(900.0, 240.0, 1.0), &cam(), ObjectId(1)),
            Err(GeometryError::CenterOutsideImage { .. })
        ));
    }

    #[test]
    fn rejects_non_rotation_extrinsic() {
        let m = Matrix3::from_diagonal(&Vec3::new(1.0, 1.0, -1.0));
        assert!(Extrinsic::new(m, Vec3::zeros()).is_err());
        let m = Matrix3::from_diagonal(&Vec3::new(1.0, 2.0, 0.5));
        assert!(Extrinsic::new(m, Vec3::zeros()).is_err());
        assert!(CameraModel::new(0.0, 1.0, 0.0, 0.0, 10, 10, Extrinsic::identity()).is_err());
    }

    #[test]
    fn look_at_points_optical_axis_at_target() {
        let eye = Vec3::new(1.0, 0.2, 0.6);
        let target = Vec3::new(0.3, 0.0, 0.0);
        let ext = Extrinsic::look_at(eye, target).unwrap();
        let axis = ext.apply(&Vec3::z()) - eye;
        assert_abs_diff_eq!(axis, (target - eye).normalize(), epsilon = 1e-12);
        // image "down" has a negative base-z component
        assert!(ext.rotation().column(1).z < 0.0);
    }

    #[test]
    fn forearm_ray_copies_anchor_points() {
        let frame = SkeletonFrame {
            timestamp: 2.5,
            right_elbow: Vec3::new(0.0, 0.0, 1.0),
            right_wrist: Vec3::new(0.3, 0.0, 1.0),
            confidence: 0.8,
        };
        let ray = forearm_ray(&frame, 0.3).unwrap();
        assert_eq!(ray.r1, Vec3::new(0.0, 0.0, 1.0));
        assert_eq!(ray.r2, Vec3::new(0.3, 0.0, 1.0));
        assert_eq!(ray.timestamp, 2.5);
    }

    #[test]
    fn forearm_ray_errors() {
        let mut frame = SkeletonFrame {
            timestamp: 0.0,
            right_elbow: Vec3::new(0.0, 0.0, 1.0),
            right_wrist: Vec3::new(0.0, 0.0, 1.0),
            confidence: 0.8,
        };
        assert_eq!(forearm_ray(&frame, 0.3), Err(GeometryError::DegenerateForearm));
        frame.right_wrist.x = 0.3;
        frame.confidence = 0.1;
        assert!(matches!(
            forearm_ray(&frame, 0.3),
            Err(GeometryError::LowConfidence { .. })
        ));
    }

    #[test]
    fn distance_to_x_axis() {
        let ray = DeicticRay::new(Vec3::zeros(), Vec3::x(), 0.0).unwrap();
        let d = point_line_distance(&ray, &Vec3::new(0.5, 3.0, 4.0)).unwrap();
        assert_abs_diff_eq!(d, 5.0, epsilon = 1e-9);
    }

    #[test]
    fn point_on_line_has_zero_distance() {
        let ray = DeicticRay::new(Vec3::new(0.1, -0.4, 1.2), Vec3::new(0.7, 0.3, 0.2), 0.0).unwrap();
        let p = ray.r1 + 2.5 * ray.direction();
        assert_abs_diff_eq!(point_line_distance(&ray, &p).unwrap(), 0.0, epsilon = 1e-9);
    }

    #[test]
    fn degenerate_ray_rejected() {
        assert_eq!(
            DeicticRay::new(Vec3::zeros(), Vec3::new(1e-7, 0.0, 0.0), 0.0),
            Err(GeometryError::DegenerateRay)
        );
        let bad = DeicticRay {
            r1: Vec3::zeros(),
            r2: Vec3::zeros(),
            timestamp: 0.0,
        };
        assert_eq!(
            point_line_distance(&bad, &Vec3::x()),
            Err(GeometryError::DegenerateRay)
        );
    }

    #[test]
    fn class_gate_wins_over_distance() {
        let ray = DeicticRay::new(Vec3::new(0.0, 0.0, 1.0), Vec3::new(1.0, 0.0, 1.0), 0.0).unwrap();
        let scene = Scene::new(
            vec![obj(1, "cup", [0.5, 0.02, 1.0]), obj(2, "bowl", [0.5, 0.001, 1.0])],
            0.0,
        )
        .unwrap();
        let sel = select_object(&ray, &scene, "cup", 0.5).unwrap();
        assert_eq!(sel.object.id, ObjectId(1));
        assert_abs_diff_eq!(sel.distance, 0.02, epsilon = 1e-12);
    }

    #[test]
    fn nearest_of_class_selected() {
        let ray = DeicticRay::new(Vec3::zeros(), Vec3::x(), 0.0).unwrap();
        let scene = Scene::new(
            vec![obj(4, "cup", [0.3, 0.30, 0.0]), obj(7, "cup", [0.9, 0.0, 0.10])],
            0.0,
        )
        .unwrap();
        assert_eq!(select_object(&ray, &scene, "cup", 0.5).unwrap().object.id, ObjectId(7));
    }

    #[test]
    fn ties_go_to_smallest_id() {
        let ray = DeicticRay::new(Vec3::zeros(), Vec3::x(), 0.0).unwrap();
        let scene = Scene::new(
            vec![obj(9, "cup", [0.3, 0.1, 0.0]), obj(3, "cup", [0.6, -0.1, 0.0])],
            0.0,
        )
        .unwrap();
        assert_eq!(select_object(&ray, &scene, "cup", 0.5).unwrap().object.id, ObjectId(3));
    }

    #[test]
    fn selection_errors() {
        let ray = DeicticRay::new(Vec3::zeros(), Vec3::x(), 0.0).unwrap();
        let scene = Scene::new(vec![obj(1, "cup", [0.3, 2.0, 0.0])], 0.0).unwrap();
        assert_eq!(
            select_object(&ray, &scene, "scissors", 0.5),
            Err(GeometryError::NoMatchingClass("scissors".into()))
        );
        assert!(matches!(
            select_object(&ray, &scene, "cup", 0.5),
            Err(GeometryError::OutOfRange { .. })
        ));
    }

    #[test]
    fn scene_rejects_duplicate_ids() {
        assert_eq!(
            Scene::new(vec![obj(1, "cup", [0.0; 3]), obj(1, "bowl", [1.0; 3])], 0.0),
            Err(GeometryError::DuplicateObjectId(ObjectId(1)))
        );
    }

    #[test]
    fn touch_ray_passes_through_pixel() {
        let ext = Extrinsic::look_at(Vec3::new(1.0, 0.0, 0.6), Vec3::new(0.3, 0.0, 0.0)).unwrap();
        let cam = CameraModel::new(600.0, 600.0, 320.0, 240.0, 640, 480, ext).unwrap();
        let target = Vec3::new(0.35, 0.12, 0.05);
        let (u, v, _) = cam.project(&target).unwrap();
        let ray = cam.pixel_ray(u, v, 0.0).unwrap();
        assert!(point_line_distance(&ray, &target).unwrap() < 1e-9);
    }
}
