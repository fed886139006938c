//! Named starting scenes.

use crate::geometry::{ObjectId, ObjectRecord, Scene, Vec3};

pub const PRESET_NAMES: &[&str] = &["two-cups-bowl-plate", "tabletop", "six-cups", "rubbish"];

/// Cup dimensions used across presets: 10 cm tall, 7 cm wide.
pub const CUP_H: f64 = 0.10;
pub const CUP_B: f64 = 0.07;

fn obj(id: u32, class: &str, x: f64, y: f64, h: f64, b: f64) -> ObjectRecord {
    ObjectRecord::new(ObjectId(id), class, Vec3::new(x, y, h / 2.0), h, b).expect("preset objects are valid")
}

/// Scene for `name`, or `None` if there is no such preset.
pub fn preset(name: &str) -> Option<Scene> {
    let objects = match name {
        "two-cups-bowl-plate" => vec![
            obj(1, "cup", 0.30, 0.10, CUP_H, CUP_B),
            obj(2, "cup", 0.30, -0.10, CUP_H, CUP_B),
            obj(3, "bowl", 0.45, 0.20, 0.07, 0.15),
            obj(4, "plate", 0.45, -0.22, 0.02, 0.20),
        ],
        "tabletop" => vec![
            obj(1, "cup", 0.25, 0.25, CUP_H, CUP_B),
            obj(2, "cup", 0.30, -0.05, CUP_H, CUP_B),
            obj(3, "bowl", 0.50, 0.20, 0.07, 0.15),
            obj(4, "bowl", 0.50, -0.10, 0.07, 0.15),
            obj(5, "plate", 0.35, -0.32, 0.02, 0.20),
        ],
        // 2 x 3 grid, 25 cm pitch.
        "six-cups" => (0..6)
            .map(|i| {
                let (row, col) = (i / 3, i % 3);
                obj(
                    i + 1,
                    "cup",
                    0.30 + 0.25 * row as f64,
                    -0.25 + 0.25 * col as f64,
                    CUP_H,
                    CUP_B,
                )
            })
            .collect(),
        "rubbish" => vec![
            obj(1, "rubbish", 0.35, 0.15, 0.06, 0.06),
            obj(2, "cup", 0.30, -0.15, CUP_H, CUP_B),
            obj(3, "bottle", 0.50, 0.00, 0.20, 0.07),
        ],
        _ => return None,
    };
    Some(Scene::new(objects, 0.0).expect("preset ids are unique"))
}
