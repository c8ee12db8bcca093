use std::collections::HashSet;
use std::fmt;

use crate::model::joint::JointType;
use crate::model::kinematics::find_cycle;
use crate::model::object::{ArticulatedObject, MIN_HALF_EXTENT};
use crate::scalar::Scalar;

/// Tolerance on `|axis_direction| = 1`.
pub const AXIS_UNIT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    Empty,
    DuplicateId(usize),
    NonDenseIds { ids: Vec<usize> },
    MissingRoot(usize),
    RootHasParent(usize),
    RootNotFixed(usize),
    UnknownParent { part: usize, parent: usize },
    MultipleRoots(Vec<usize>),
    Cycle(Vec<usize>),
    Unreachable(Vec<usize>),
    AxisNotUnit { part: usize, norm: f64 },
    RangeOrder { part: usize, lower: f64, upper: f64 },
    UnusedRangeNonzero { part: usize },
    StateOutOfRange { part: usize, state: f64 },
    NonFinite { part: usize, field: &'static str },
    NonPositiveExtent { part: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Empty => write!(f, "object has no parts"),
            Violation::DuplicateId(id) => write!(f, "duplicate part id {id}"),
            Violation::NonDenseIds { ids } => write!(f, "part ids {ids:?} are not dense in [0, N)"),
            Violation::MissingRoot(id) => write!(f, "root id {id} is not a part"),
            Violation::RootHasParent(id) => write!(f, "root part {id} has a parent"),
            Violation::RootNotFixed(id) => write!(f, "root part {id} must use a fixed joint"),
            Violation::UnknownParent { part, parent } => write!(f, "part {part} references unknown parent {parent}"),
            Violation::MultipleRoots(ids) => write!(f, "multiple parentless parts {ids:?}"),
            Violation::Cycle(ids) => write!(f, "parent cycle through parts {ids:?}"),
            Violation::Unreachable(ids) => write!(f, "parts {ids:?} are unreachable from the root"),
            Violation::AxisNotUnit { part, norm } => write!(f, "part {part} joint axis has norm {norm}"),
            Violation::RangeOrder { part, lower, upper } => {
                write!(f, "part {part} joint range is reversed: [{lower}, {upper}]")
            }
            Violation::UnusedRangeNonzero { part } => write!(f, "part {part} has a nonzero unused range pair"),
            Violation::StateOutOfRange { part, state } => write!(f, "part {part} state {state} outside [0, 1]"),
            Violation::NonFinite { part, field } => write!(f, "part {part} has a non-finite {field}"),
            Violation::NonPositiveExtent { part } => write!(f, "part {part} has a non-positive OBB half extent"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Warning {
    /// A half extent sits at the clamp floor, i.e. the part is planar or degenerate.
    ClampedExtent { part: usize },
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warning::ClampedExtent { part } => write!(f, "part {part} OBB half extent clamped to {MIN_HALF_EXTENT}"),
        }
    }
}

/// Result of [`validate_object`]; empty `violations` means the object is well formed.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    pub warnings: Vec<Warning>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            writeln!(f, "error: {v}")?;
        }
        for w in &self.warnings {
            writeln!(f, "warning: {w}")?;
        }
        Ok(())
    }
}

/// Checks every structural and numeric invariant of an object.
pub fn validate_object<T: Scalar>(object: &ArticulatedObject<T>) -> ValidationReport {
    let mut report = ValidationReport::default();
    let v = &mut report.violations;
    if object.parts.is_empty() {
        v.push(Violation::Empty);
        return report;
    }

    let mut ids = HashSet::new();
    for p in &object.parts {
        if !ids.insert(p.part_id) {
            v.push(Violation::DuplicateId(p.part_id));
        }
    }
    let n = object.parts.len();
    if ids.len() == n && ids.iter().any(|&id| id >= n) {
        let mut sorted: Vec<_> = ids.iter().copied().collect();
        sorted.sort_unstable();
        v.push(Violation::NonDenseIds { ids: sorted });
    }

    match object.part(object.root_id) {
        None => v.push(Violation::MissingRoot(object.root_id)),
        Some(root) => {
            if root.parent_id.is_some() {
                v.push(Violation::RootHasParent(root.part_id));
            }
            if root.joint.joint_type != JointType::Fixed {
                v.push(Violation::RootNotFixed(root.part_id));
            }
        }
    }
    let parentless: Vec<usize> = object.parts.iter().filter(|p| p.parent_id.is_none()).map(|p| p.part_id).collect();
    if parentless.len() > 1 {
        v.push(Violation::MultipleRoots(parentless));
    }
    for p in &object.parts {
        if let Some(pid) = p.parent_id {
            if !ids.contains(&pid) {
                v.push(Violation::UnknownParent { part: p.part_id, parent: pid });
            }
        }
    }
    if let Some(cycle) = find_cycle(object) {
        v.push(Violation::Cycle(cycle));
    } else if v.is_empty() {
        let unreachable = unreachable_parts(object);
        if !unreachable.is_empty() {
            v.push(Violation::Unreachable(unreachable));
        }
    }

    for p in &object.parts {
        let id = p.part_id;
        let j = &p.joint;
        let finite = |xs: &[T]| xs.iter().all(|x| x.is_finite());
        if !finite(&j.axis_origin.0) || !finite(&j.axis_direction.0) || !finite(&j.range) {
            v.push(Violation::NonFinite { part: id, field: "joint" });
            continue;
        }
        if !finite(&p.obb.center.0) || !finite(&p.obb.half_extents.0) || !finite(&p.obb.rotation.0) {
            v.push(Violation::NonFinite { part: id, field: "obb" });
        }
        if p.shape_latent.as_deref().is_some_and(|f| !finite(f)) {
            v.push(Violation::NonFinite { part: id, field: "shape latent" });
        }
        let norm = j.axis_direction.norm().to_f64_lossy();
        if (norm - 1.0).abs() > AXIS_UNIT_TOL {
            v.push(Violation::AxisNotUnit { part: id, norm });
        }
        for (lo, hi) in [(j.range[0], j.range[1]), (j.range[2], j.range[3])] {
            if lo > hi {
                v.push(Violation::RangeOrder { part: id, lower: lo.to_f64_lossy(), upper: hi.to_f64_lossy() });
            }
        }
        let unused_nonzero = match j.joint_type {
            JointType::Revolute | JointType::Continuous => j.range[2] != T::zero() || j.range[3] != T::zero(),
            JointType::Prismatic | JointType::Screw => j.range[0] != T::zero() || j.range[1] != T::zero(),
            JointType::Fixed => false,
        };
        if unused_nonzero {
            v.push(Violation::UnusedRangeNonzero { part: id });
        }
        if !(p.state >= T::zero() && p.state <= T::one()) {
            v.push(Violation::StateOutOfRange { part: id, state: p.state.to_f64_lossy() });
        }
        let floor = T::lit(MIN_HALF_EXTENT);
        if p.obb.half_extents.0.iter().any(|&h| h <= T::zero()) {
            v.push(Violation::NonPositiveExtent { part: id });
        } else if p.obb.half_extents.0.iter().any(|&h| h <= floor) {
            report.warnings.push(Warning::ClampedExtent { part: id });
        }
    }
    report
}

fn unreachable_parts<T: Scalar>(object: &ArticulatedObject<T>) -> Vec<usize> {
    let mut reached: HashSet<usize> = HashSet::from([object.root_id]);
    let mut changed = true;
    while changed {
        changed = false;
        for p in &object.parts {
            if let Some(pid) = p.parent_id {
                if reached.contains(&pid) && reached.insert(p.part_id) {
                    changed = true;
                }
            }
        }
    }
    object.parts.iter().map(|p| p.part_id).filter(|id| !reached.contains(id)).collect()
}
