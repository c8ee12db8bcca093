use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::math::{RigidTransform, Vec3};
use crate::scalar::Scalar;

/// Default screw pitch in meters of travel per radian of rotation.
pub const DEFAULT_SCREW_PITCH: f64 = 0.02;

/// Axis vectors shorter than this cannot be renormalized.
pub const MIN_AXIS_NORM: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JointType {
    Fixed,
    Revolute,
    Continuous,
    Prismatic,
    Screw,
}

impl JointType {
    pub const ALL: [JointType; 5] =
        [JointType::Fixed, JointType::Revolute, JointType::Continuous, JointType::Prismatic, JointType::Screw];

    /// Position in [`JointType::ALL`], used for one-hot encodings.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            JointType::Fixed => "fixed",
            JointType::Revolute => "revolute",
            JointType::Continuous => "continuous",
            JointType::Prismatic => "prismatic",
            JointType::Screw => "screw",
        }
    }

    pub fn is_rotational(self) -> bool {
        matches!(self, JointType::Revolute | JointType::Continuous)
    }

    pub fn is_translational(self) -> bool {
        matches!(self, JointType::Prismatic | JointType::Screw)
    }
}

impl fmt::Display for JointType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for JointType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        JointType::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| Error::parse(format!("unknown joint type `{s}`")))
    }
}

/// Joint axis, motion range and type connecting a part to its parent.
///
/// `range` packs `[rot_min, rot_max, trans_min, trans_max]`; only the pair
/// matching the joint type is active.
#[derive(Debug, Clone, PartialEq)]
pub struct JointSpec<T = f64> {
    pub joint_type: JointType,
    pub axis_origin: Vec3<T>,
    pub axis_direction: Vec3<T>,
    pub range: [T; 4],
    pub screw_pitch: T,
}

impl<T: Scalar> JointSpec<T> {
    /// Builds a joint, renormalizing the axis direction.
    pub fn new(
        joint_type: JointType,
        axis_origin: Vec3<T>,
        axis_direction: Vec3<T>,
        range: [T; 4],
        screw_pitch: T,
    ) -> Result<Self> {
        let axis_direction = axis_direction.try_normalize(T::lit(MIN_AXIS_NORM)).ok_or_else(|| {
            Error::Parameter(format!("joint axis norm {} below {MIN_AXIS_NORM}", axis_direction.norm()))
        })?;
        Ok(Self { joint_type, axis_origin, axis_direction, range, screw_pitch })
    }

    pub fn fixed() -> Self {
        Self {
            joint_type: JointType::Fixed,
            axis_origin: Vec3::zeros(),
            axis_direction: Vec3::unit_z(),
            range: [T::zero(); 4],
            screw_pitch: T::lit(DEFAULT_SCREW_PITCH),
        }
    }

    pub fn revolute(origin: Vec3<T>, direction: Vec3<T>, lower: T, upper: T) -> Result<Self> {
        let z = T::zero();
        Self::new(JointType::Revolute, origin, direction, [lower, upper, z, z], T::lit(DEFAULT_SCREW_PITCH))
    }

    /// Unbounded rotation, mapped onto one full turn `[-π, π]`.
    pub fn continuous(origin: Vec3<T>, direction: Vec3<T>) -> Result<Self> {
        let z = T::zero();
        Self::new(JointType::Continuous, origin, direction, [-T::PI(), T::PI(), z, z], T::lit(DEFAULT_SCREW_PITCH))
    }

    pub fn prismatic(origin: Vec3<T>, direction: Vec3<T>, lower: T, upper: T) -> Result<Self> {
        let z = T::zero();
        Self::new(JointType::Prismatic, origin, direction, [z, z, lower, upper], T::lit(DEFAULT_SCREW_PITCH))
    }

    pub fn screw(origin: Vec3<T>, direction: Vec3<T>, lower: T, upper: T, pitch: T) -> Result<Self> {
        let z = T::zero();
        Self::new(JointType::Screw, origin, direction, [z, z, lower, upper], pitch)
    }

    /// The `(min, max)` pair that drives motion, `(0, 0)` for fixed joints.
    pub fn active_range(&self) -> (T, T) {
        match self.joint_type {
            JointType::Fixed => (T::zero(), T::zero()),
            JointType::Revolute | JointType::Continuous => (self.range[0], self.range[1]),
            JointType::Prismatic | JointType::Screw => (self.range[2], self.range[3]),
        }
    }

    /// Maps a unit-interval state to radians or meters.
    pub fn denormalize_state(&self, s: T) -> Result<T> {
        check_state(s)?;
        if self.joint_type == JointType::Fixed {
            return Ok(T::zero());
        }
        let (lo, hi) = self.active_range();
        Ok(lo + s * (hi - lo))
    }

    /// Rigid motion of the child part at state `s`, in the object frame.
    pub fn joint_transform(&self, s: T) -> Result<RigidTransform<T>> {
        let amount = self.denormalize_state(s)?;
        let axis = &self.axis_direction;
        Ok(match self.joint_type {
            JointType::Fixed => RigidTransform::identity(),
            JointType::Revolute | JointType::Continuous => {
                RigidTransform::rotation_about_line(&self.axis_origin, axis, amount)
            }
            JointType::Prismatic => RigidTransform::from_translation(axis.scale(amount)),
            JointType::Screw => {
                if self.screw_pitch == T::zero() || !self.screw_pitch.is_finite() {
                    return Err(Error::Parameter("screw joint with zero pitch".into()));
                }
                let turn = RigidTransform::rotation_about_line(&self.axis_origin, axis, amount / self.screw_pitch);
                RigidTransform::from_translation(axis.scale(amount)).compose(&turn)
            }
        })
    }

    pub fn cast<U: Scalar>(&self) -> JointSpec<U> {
        JointSpec {
            joint_type: self.joint_type,
            axis_origin: self.axis_origin.cast(),
            axis_direction: self.axis_direction.cast(),
            range: self.range.map(|v| U::lit(v.to_f64_lossy())),
            screw_pitch: U::lit(self.screw_pitch.to_f64_lossy()),
        }
    }
}

pub(crate) fn check_state<T: Scalar>(s: T) -> Result<()> {
    if s >= T::zero() && s <= T::one() {
        Ok(())
    } else {
        Err(Error::Range(format!("state {s} outside [0, 1]")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::Mat3;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    #[test]
    fn denormalize_examples() {
        let rev = JointSpec::revolute(Vec3::zeros(), Vec3::unit_z(), -FRAC_PI_2, 0.0).unwrap();
        assert_eq!(rev.denormalize_state(0.5).unwrap(), -FRAC_PI_4);
        let pri = JointSpec::prismatic(Vec3::zeros(), Vec3::unit_x(), 0.0, 2.0).unwrap();
        assert_eq!(pri.denormalize_state(0.0).unwrap(), 0.0);
        let fixed = JointSpec::<f64>::fixed();
        assert_eq!(fixed.denormalize_state(0.7).unwrap(), 0.0);
        assert!(matches!(rev.denormalize_state(1.5), Err(Error::Range(_))));
        assert!(rev.denormalize_state(f64::NAN).is_err());
    }

    #[test]
    fn quarter_turn_about_z() {
        let j = JointSpec::revolute(Vec3::zeros(), Vec3::unit_z(), 0.0, FRAC_PI_2).unwrap();
        let t = j.joint_transform(1.0).unwrap();
        let rz = Mat3::from_axis_angle(&Vec3::unit_z(), FRAC_PI_2);
        assert!(t.rotation.max_abs_diff(&rz) < 1e-15);
        assert_eq!(t.translation.norm(), 0.0);
    }

    #[test]
    fn prismatic_half_way() {
        let j = JointSpec::prismatic(Vec3::zeros(), Vec3::unit_x(), 0.0, 1.0).unwrap();
        let t = j.joint_transform(0.5).unwrap();
        assert_eq!(t.translation, Vec3::new(0.5, 0.0, 0.0));
        assert_eq!(t.rotation, Mat3::identity());
    }

    #[test]
    fn half_turn_about_offset_axis() {
        // translate(p) · Rz(π) · translate(-p) with p = (1, 0, 0) sends (2, 0, 0) to (0, 0, 0)
        let j = JointSpec::revolute(Vec3::new(1.0, 0.0, 0.0), Vec3::unit_z(), 0.0, PI).unwrap();
        let t = j.joint_transform(1.0).unwrap();
        assert!(t.apply(&Vec3::new(2.0, 0.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn screw_couples_rotation_and_translation() {
        let j = JointSpec::screw(Vec3::zeros(), Vec3::unit_z(), 0.0, 0.02 * PI, 0.02).unwrap();
        let t = j.joint_transform(1.0).unwrap();
        assert!((t.translation.z() - 0.02 * PI).abs() < 1e-15);
        let p = t.apply(&Vec3::new(1.0, 0.0, 0.0));
        assert!(p.max_abs_diff(&Vec3::new(-1.0, 0.0, 0.02 * PI)) < 1e-12);

        let mut zero = j.clone();
        zero.screw_pitch = 0.0;
        assert!(matches!(zero.joint_transform(0.5), Err(Error::Parameter(_))));
    }

    #[test]
    fn axis_renormalization() {
        let j = JointSpec::revolute(Vec3::zeros(), Vec3::new(0.0, 0.0, 5.0), 0.0, 1.0).unwrap();
        assert_eq!(j.axis_direction, Vec3::unit_z());
        assert!(JointSpec::revolute(Vec3::zeros(), Vec3::new(0.0, 0.0, 1e-7), 0.0, 1.0).is_err());
    }

    #[test]
    fn joint_type_parsing() {
        for t in JointType::ALL {
            assert_eq!(t.as_str().parse::<JointType>().unwrap(), t);
        }
        assert!("hinge".parse::<JointType>().is_err());
    }
}
