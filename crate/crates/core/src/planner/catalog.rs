//! Action catalog: what each spoken action means in terms of robot calls.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

use super::api::{ApiSpec, Primitive};

/// Parameterized building block of an action expansion. Each one emits
/// zero or more primitive calls with arguments computed from the scene.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MacroStep {
    /// Opens the gripper if it is closed. Fails while holding.
    EnsureOpen,
    /// Rises if needed, then moves above the target at clearance height.
    TransitAboveTarget,
    /// Drops to the target's grasp height.
    DescendToGrasp,
    /// Closes on the target with the width-derived angle.
    CloseOnTarget,
    /// Returns to the height of the last transit.
    Lift,
    /// Lowers the held object onto the top of the target.
    DescendToPlace,
    /// Opens the gripper, letting go of the held object.
    Release,
    /// Wrist roll by the metric angle (or the default).
    Tilt,
    /// Undoes the last tilt.
    Untilt,
    TransitToBin,
    /// Slides the grasped target toward or away from the near anchor.
    Slide,
    /// Serpentine pass over the target footprint at transit height.
    Wipe,
    TransitToFlushPose,
    Dip,
    Dwell,
    GoHome,
}

impl MacroStep {
    /// Primitives the step may emit.
    pub fn primitives(self) -> &'static [Primitive] {
        use Primitive::*;
        match self {
            MacroStep::EnsureOpen | MacroStep::Release => &[OpenGripper],
            MacroStep::TransitAboveTarget | MacroStep::TransitToBin | MacroStep::TransitToFlushPose => {
                &[MoveVertical, MoveLinear]
            }
            MacroStep::Slide => &[MoveVertical, MoveLinear],
            MacroStep::DescendToGrasp | MacroStep::Lift | MacroStep::DescendToPlace | MacroStep::Dip => {
                &[MoveVertical]
            }
            MacroStep::CloseOnTarget => &[CloseGripper],
            MacroStep::Tilt | MacroStep::Untilt => &[RotateEe],
            MacroStep::Wipe => &[MoveLinear],
            MacroStep::Dwell => &[Wait],
            MacroStep::GoHome => &[MoveVertical, GoHome],
        }
    }

    pub fn needs_target(self) -> bool {
        matches!(
            self,
            MacroStep::TransitAboveTarget
                | MacroStep::DescendToGrasp
                | MacroStep::CloseOnTarget
                | MacroStep::DescendToPlace
                | MacroStep::Slide
                | MacroStep::Wipe
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionDef {
    pub object_dependent: bool,
    /// Plain-language recipe shown to the model.
    pub definition: String,
    pub expansion: Vec<MacroStep>,
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid action catalog: {0}")]
pub struct CatalogError(pub String);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BTreeMap<String, ActionDef>", into = "BTreeMap<String, ActionDef>")]
pub struct ActionCatalog {
    actions: BTreeMap<String, ActionDef>,
}

impl TryFrom<BTreeMap<String, ActionDef>> for ActionCatalog {
    type Error = CatalogError;

    fn try_from(actions: BTreeMap<String, ActionDef>) -> Result<Self, CatalogError> {
        ActionCatalog::new(actions)
    }
}

impl From<ActionCatalog> for BTreeMap<String, ActionDef> {
    fn from(c: ActionCatalog) -> Self {
        c.actions
    }
}

impl ActionCatalog {
    pub fn new(actions: BTreeMap<String, ActionDef>) -> Result<Self, CatalogError> {
        let c = Self { actions };
        for (name, def) in &c.actions {
            if def.expansion.is_empty() {
                return Err(CatalogError(format!("`{name}` has an empty expansion")));
            }
            if !def.object_dependent {
                if let Some(m) = def.expansion.iter().find(|m| m.needs_target()) {
                    return Err(CatalogError(format!(
                        "`{name}` takes no object but its expansion uses {m:?}"
                    )));
                }
            }
        }
        Ok(c)
    }

    pub fn get(&self, action: &str) -> Option<&ActionDef> {
        self.actions.get(action)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &ActionDef)> {
        self.actions.iter().map(|(k, v)| (k.as_str(), v))
    }

    /// Action name → object dependency, as the fusion encoder wants it.
    pub fn dependency_map(&self) -> BTreeMap<String, bool> {
        self.actions
            .iter()
            .map(|(k, v)| (k.clone(), v.object_dependent))
            .collect()
    }

    /// Every primitive any expansion can emit must be allowed by `api`.
    pub fn check_against(&self, api: &ApiSpec) -> Result<(), CatalogError> {
        for (name, def) in &self.actions {
            for m in &def.expansion {
                if let Some(p) = m.primitives().iter().find(|p| !api.allows(**p)) {
                    return Err(CatalogError(format!(
                        "`{name}` expands through {m:?} to {p}, which the api does not allow"
                    )));
                }
            }
        }
        Ok(())
    }

    /// The "action definition" section of the model prompt.
    pub fn describe(&self) -> String {
        let mut out = String::new();
        for (name, def) in &self.actions {
            let obj = if def.object_dependent { "needs an object" } else { "no object" };
            out.push_str(&format!("- {name} ({obj}): {}\n", def.definition));
        }
        out
    }
}

impl Default for ActionCatalog {
    fn default() -> Self {
        use MacroStep::*;
        let def = |object_dependent, definition: &str, expansion: &[MacroStep]| ActionDef {
            object_dependent,
            definition: definition.to_string(),
            expansion: expansion.to_vec(),
        };
        let actions = BTreeMap::from([
            (
                "pick".to_string(),
                def(
                    true,
                    "open the gripper if closed, move above the object at clearance height, descend to its center height, close to the angle for its width, lift back to clearance",
                    &[EnsureOpen, TransitAboveTarget, DescendToGrasp, CloseOnTarget, Lift],
                ),
            ),
            (
                "put".to_string(),
                def(
                    true,
                    "requires a held object; move above the target at clearance height, lower the held object onto the target, open the gripper, lift back to clearance",
                    &[TransitAboveTarget, DescendToPlace, Release, Lift],
                ),
            ),
            (
                "pour".to_string(),
                def(
                    true,
                    "requires a held object; move above the target at clearance height, rotate the wrist by the requested angle (90 degrees if none), rotate back",
                    &[TransitAboveTarget, Tilt, Untilt],
                ),
            ),
            (
                "push".to_string(),
                def(
                    true,
                    "grasp the object like pick but stay low, slide it toward the near anchor (or away for far), release, lift",
                    &[EnsureOpen, TransitAboveTarget, DescendToGrasp, CloseOnTarget, Slide, Release, Lift],
                ),
            ),
            (
                "throw".to_string(),
                def(
                    false,
                    "requires a held object; move to the bin pose at clearance height and open the gripper",
                    &[TransitToBin, Release],
                ),
            ),
            (
                "home".to_string(),
                def(false, "rise to clearance if needed and return to the home pose", &[GoHome]),
            ),
            // clean and flush have no established recipe; these two are invented.
            (
                "clean".to_string(),
                def(
                    true,
                    "move above the object and sweep a serpentine pattern over its footprint at clearance height",
                    &[TransitAboveTarget, Wipe],
                ),
            ),
            (
                "flush".to_string(),
                def(
                    false,
                    "move to the flush pose, dip, hold for a moment, rise",
                    &[TransitToFlushPose, Dip, Dwell, Lift],
                ),
            ),
        ]);
        Self::new(actions).expect("default catalog is valid")
    }
}
