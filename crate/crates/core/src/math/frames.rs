use std::fmt;
use std::marker::PhantomData;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::Quaternion;

/// Runtime tag for a reference frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrameId {
    Inertial,
    Spacecraft,
    Sun,
    SmallBody,
    CenterOfMass,
}

impl fmt::Display for FrameId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            FrameId::Inertial => "inertial",
            FrameId::Spacecraft => "spacecraft",
            FrameId::Sun => "sun",
            FrameId::SmallBody => "small_body",
            FrameId::CenterOfMass => "center_of_mass",
        };
        f.write_str(s)
    }
}

pub trait Frame: Copy + fmt::Debug + Default {
    const ID: FrameId;
}

macro_rules! frame_marker {
    ($name:ident, $id:expr) => {
        #[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
        pub struct $name;
        impl Frame for $name {
            const ID: FrameId = $id;
        }
    };
}

frame_marker!(Inertial, FrameId::Inertial);
frame_marker!(Spacecraft, FrameId::Spacecraft);
frame_marker!(Sun, FrameId::Sun);
frame_marker!(SmallBody, FrameId::SmallBody);
frame_marker!(CenterOfMass, FrameId::CenterOfMass);

/// A 3-vector tagged with the frame it is expressed in. Arithmetic is only
/// defined between vectors of the same frame; crossing frames requires a
/// [`Rotation`].
#[derive(Clone, Copy, PartialEq)]
pub struct Framed<F: Frame> {
    pub v: Vector3<f64>,
    _frame: PhantomData<F>,
}

impl<F: Frame> fmt::Debug for Framed<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[{}, {}, {}]", F::ID, self.v.x, self.v.y, self.v.z)
    }
}

impl<F: Frame> Framed<F> {
    pub fn new(v: Vector3<f64>) -> Self {
        Self { v, _frame: PhantomData }
    }
    pub fn zeros() -> Self {
        Self::new(Vector3::zeros())
    }
    pub fn frame(&self) -> FrameId {
        F::ID
    }
    pub fn norm(&self) -> f64 {
        self.v.norm()
    }
    pub fn dot(&self, o: &Self) -> f64 {
        self.v.dot(&o.v)
    }
    pub fn cross(&self, o: &Self) -> Self {
        Self::new(self.v.cross(&o.v))
    }
    pub fn into_inner(self) -> Vector3<f64> {
        self.v
    }
}

impl<F: Frame> Add for Framed<F> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.v + o.v)
    }
}

impl<F: Frame> Sub for Framed<F> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.v - o.v)
    }
}

impl<F: Frame> Neg for Framed<F> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.v)
    }
}

impl<F: Frame> Mul<f64> for Framed<F> {
    type Output = Self;
    fn mul(self, k: f64) -> Self {
        Self::new(self.v * k)
    }
}

/// Rotation taking vectors expressed in `From` to vectors expressed in `To`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation<From: Frame, To: Frame> {
    pub q: Quaternion,
    _f: PhantomData<(From, To)>,
}

impl<A: Frame, B: Frame> Rotation<A, B> {
    pub fn new(q: Quaternion) -> Self {
        Self { q, _f: PhantomData }
    }

    pub fn apply(&self, x: &Framed<A>) -> Framed<B> {
        Framed::new(self.q.rotate(&x.v))
    }

    pub fn inverse(&self) -> Rotation<B, A> {
        Rotation::new(self.q.conjugate())
    }

    /// `other ∘ self`: first `self`, then `other`.
    pub fn then<C: Frame>(&self, other: &Rotation<B, C>) -> Rotation<A, C> {
        Rotation::new(other.q.mul(&self.q))
    }
}

impl Rotation<Spacecraft, Inertial> {
    /// The body-to-inertial rotation encoded by an attitude quaternion.
    pub fn from_attitude(q: &Quaternion) -> Self {
        Self::new(*q)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rotation_round_trip_between_frames() {
        let q = Quaternion::from_axis_angle(&Vector3::new(1.0, 1.0, 0.0), 0.7);
        let r = Rotation::<Spacecraft, Inertial>::from_attitude(&q);
        let b = Framed::<Spacecraft>::new(Vector3::new(0.3, -2.0, 1.5));
        let i = r.apply(&b);
        assert_eq!(i.frame(), FrameId::Inertial);
        let back = r.inverse().apply(&i);
        assert!((back - b).norm() < 1e-12);
    }

    #[test]
    fn composition_order() {
        let a = Rotation::<Spacecraft, Sun>::new(Quaternion::from_axis_angle(&Vector3::z(), 0.5));
        let b = Rotation::<Sun, Inertial>::new(Quaternion::from_axis_angle(&Vector3::x(), -1.1));
        let x = Framed::<Spacecraft>::new(Vector3::new(1.0, 2.0, 3.0));
        let direct = b.apply(&a.apply(&x));
        let composed = a.then(&b).apply(&x);
        assert!((direct - composed).norm() < 1e-12);
    }
}
