use crate::error::{Error, Result};
use crate::real::Real;
use nalgebra::{Matrix3, Vector2, Vector3};

/// Posed pinhole camera. View space is x right, y down, z forward.
#[derive(Clone, Debug, PartialEq)]
pub struct Camera<T: Real> {
    /// Rotation part of the world→view transform.
    pub rotation: Matrix3<T>,
    /// Translation part of the world→view transform.
    pub translation: Vector3<T>,
    pub focal: Vector2<T>,
    pub principal_point: Vector2<T>,
    pub width: u32,
    pub height: u32,
    pub near: T,
}

impl<T: Real> Camera<T> {
    pub const DEFAULT_NEAR: f64 = 0.01;

    pub fn new(
        rotation: Matrix3<T>,
        translation: Vector3<T>,
        focal: Vector2<T>,
        principal_point: Vector2<T>,
        width: u32,
        height: u32,
    ) -> Result<Self> {
        let cam = Self {
            rotation,
            translation,
            focal,
            principal_point,
            width,
            height,
            near: T::lit(Self::DEFAULT_NEAR),
        };
        cam.validate()?;
        Ok(cam)
    }

    /// Camera at `eye` looking at `target`, with `up` roughly opposite to the
    /// image's +y axis.
    pub fn look_at(
        eye: Vector3<T>,
        target: Vector3<T>,
        up: Vector3<T>,
        focal: Vector2<T>,
        width: u32,
        height: u32,
    ) -> Result<Self> {
        let forward = (target - eye).normalize();
        let right = forward.cross(&up);
        if right.norm() <= T::lit(1e-12) {
            return Err(Error::InvalidCamera(
                "up vector is parallel to the view direction".into(),
            ));
        }
        let right = right.normalize();
        let down = forward.cross(&right);
        let rotation =
            Matrix3::from_rows(&[right.transpose(), down.transpose(), forward.transpose()]);
        let translation = -(rotation * eye);
        let pp = Vector2::new(T::lit(width as f64 / 2.0), T::lit(height as f64 / 2.0));
        Self::new(rotation, translation, focal, pp, width, height)
    }

    pub fn validate(&self) -> Result<()> {
        let rrt = self.rotation * self.rotation.transpose();
        let dev = (rrt - Matrix3::identity()).amax();
        if !(dev <= T::lit(1e-6)) {
            return Err(Error::InvalidCamera(format!(
                "world-to-view rotation is not orthonormal (max |RRᵀ - I| = {dev})"
            )));
        }
        if !(self.focal.x > T::zero() && self.focal.y > T::zero()) {
            return Err(Error::InvalidCamera(
                "focal lengths must be positive".into(),
            ));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidCamera("resolution must be positive".into()));
        }
        if !(self.near > T::zero()) {
            return Err(Error::InvalidCamera("near plane must be positive".into()));
        }
        if !self
            .translation
            .iter()
            .chain(self.principal_point.iter())
            .all(|v| v.is_finite())
        {
            return Err(Error::InvalidCamera("non-finite pose or intrinsics".into()));
        }
        Ok(())
    }

    /// Camera center in world space.
    pub fn center(&self) -> Vector3<T> {
        -(self.rotation.transpose() * self.translation)
    }

    #[inline]
    pub fn to_view(&self, p: &Vector3<T>) -> Vector3<T> {
        self.rotation * p + self.translation
    }

    /// Same pose rendered at a different resolution; intrinsics scale with
    /// the per-axis resize ratio.
    pub fn resized(&self, width: u32, height: u32) -> Self {
        let sx = T::lit(width as f64 / self.width as f64);
        let sy = T::lit(height as f64 / self.height as f64);
        Self {
            focal: Vector2::new(self.focal.x * sx, self.focal.y * sy),
            principal_point: Vector2::new(self.principal_point.x * sx, self.principal_point.y * sy),
            width,
            height,
            ..self.clone()
        }
    }

    pub fn cast<U: Real>(&self) -> Camera<U> {
        let c = |v: T| U::lit(v.as_f64());
        Camera {
            rotation: self.rotation.map(c),
            translation: self.translation.map(c),
            focal: self.focal.map(c),
            principal_point: self.principal_point.map(c),
            width: self.width,
            height: self.height,
            near: c(self.near),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn look_at_puts_target_on_axis() {
        let cam = Camera::<f64>::look_at(
            Vector3::new(3.0, 1.0, -2.0),
            Vector3::zeros(),
            Vector3::new(0.0, 1.0, 0.0),
            Vector2::new(100.0, 100.0),
            64,
            64,
        )
        .unwrap();
        let v = cam.to_view(&Vector3::zeros());
        assert!(v.x.abs() < 1e-12 && v.y.abs() < 1e-12 && v.z > 0.0);
        assert!((cam.center() - Vector3::new(3.0, 1.0, -2.0)).norm() < 1e-12);
    }

    #[test]
    fn rejects_bad_intrinsics_and_pose() {
        let mut cam = Camera::<f64>::new(
            Matrix3::identity(),
            Vector3::zeros(),
            Vector2::new(1.0, 1.0),
            Vector2::zeros(),
            4,
            4,
        )
        .unwrap();
        cam.focal.x = 0.0;
        assert!(cam.validate().is_err());
        cam.focal.x = 1.0;
        cam.rotation[(0, 0)] = 2.0;
        assert!(cam.validate().is_err());
    }
}
