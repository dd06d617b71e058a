//! Row-major image containers.

use crate::error::{Error, Result};

/// A single-channel row-major raster with zero-based `(x, y)` indexing.
#[derive(Clone, Debug, PartialEq)]
pub struct Raster<T> {
    width: usize,
    height: usize,
    data: Vec<T>,
}

/// 8-bit gray image.
pub type GrayImage = Raster<u8>;
/// Real-valued image; also used for filter responses.
pub type RealImage = Raster<f64>;
/// Per-pixel boolean mask.
pub type BinaryMask = Raster<bool>;

impl<T> Raster<T> {
    pub fn from_vec(width: usize, height: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::BufferSize {
                width,
                height,
                len: data.len(),
            });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn row(&self, y: usize) -> &[T] {
        &self.data[y * self.width..(y + 1) * self.width]
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Raster<U> {
        Raster {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(f).collect(),
        }
    }

    /// Fails with [`Error::DimensionMismatch`] unless `other` has the same shape.
    pub fn ensure_same_dims<U>(&self, other: &Raster<U>) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::DimensionMismatch {
                expected: self.dims(),
                found: other.dims(),
            });
        }
        Ok(())
    }

    pub(crate) fn ensure_nonempty(&self) -> Result<()> {
        if self.is_empty() {
            return Err(Error::EmptyImage {
                width: self.width,
                height: self.height,
            });
        }
        Ok(())
    }
}

impl<T: Copy> Raster<T> {
    pub fn filled(width: usize, height: usize, value: T) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> T {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: T) {
        self.data[y * self.width + x] = value;
    }
}

impl GrayImage {
    pub fn to_real(&self) -> RealImage {
        self.map(|&v| f64::from(v))
    }
}

impl BinaryMask {
    pub fn count_ones(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    /// True when every set pixel of `self` is also set in `other`.
    pub fn is_subset_of(&self, other: &BinaryMask) -> bool {
        self.dims() == other.dims() && self.data.iter().zip(&other.data).all(|(&a, &b)| !a || b)
    }

    /// 0/255 rendering for writing to disk.
    pub fn to_gray(&self) -> GrayImage {
        self.map(|&b| if b { 255 } else { 0 })
    }
}

/// A 3-channel 8-bit color fundus photograph stored as separate planes.
#[derive(Clone, Debug, PartialEq)]
pub struct FundusImage {
    red: GrayImage,
    green: GrayImage,
    blue: GrayImage,
}

impl FundusImage {
    pub fn from_planes(red: GrayImage, green: GrayImage, blue: GrayImage) -> Result<Self> {
        red.ensure_same_dims(&green)?;
        red.ensure_same_dims(&blue)?;
        Ok(Self { red, green, blue })
    }

    /// Builds from interleaved `RGBRGB...` bytes.
    pub fn from_interleaved(width: usize, height: usize, rgb: &[u8]) -> Result<Self> {
        if rgb.len() != width * height * 3 {
            return Err(Error::BufferSize {
                width,
                height,
                len: rgb.len() / 3,
            });
        }
        let plane = |c: usize| {
            Raster::from_vec(
                width,
                height,
                rgb.iter().skip(c).step_by(3).copied().collect(),
            )
        };
        Self::from_planes(plane(0)?, plane(1)?, plane(2)?)
    }

    /// Lifts a gray image to color by replicating it into all three planes.
    pub fn from_gray(gray: &GrayImage) -> Self {
        Self {
            red: gray.clone(),
            green: gray.clone(),
            blue: gray.clone(),
        }
    }

    pub fn to_interleaved(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.red.len() * 3);
        for ((&r, &g), &b) in self
            .red
            .as_slice()
            .iter()
            .zip(self.green.as_slice())
            .zip(self.blue.as_slice())
        {
            out.extend_from_slice(&[r, g, b]);
        }
        out
    }

    pub fn width(&self) -> usize {
        self.green.width()
    }

    pub fn height(&self) -> usize {
        self.green.height()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.green.dims()
    }

    pub fn red(&self) -> &GrayImage {
        &self.red
    }

    pub fn green(&self) -> &GrayImage {
        &self.green
    }

    pub fn blue(&self) -> &GrayImage {
        &self.blue
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn from_vec_checks_length() {
        assert!(GrayImage::from_vec(3, 2, vec![0; 6]).is_ok());
        assert_eq!(
            GrayImage::from_vec(3, 2, vec![0; 5]),
            Err(Error::BufferSize {
                width: 3,
                height: 2,
                len: 5
            })
        );
    }

    #[test]
    fn row_major_layout() {
        let img = Raster::from_fn(3, 2, |x, y| (10 * y + x) as u8);
        assert_eq!(img.as_slice(), &[0, 1, 2, 10, 11, 12]);
        assert_eq!(img.get(2, 1), 12);
        assert_eq!(img.row(1), &[10, 11, 12]);
    }

    #[test]
    fn interleaved_round_trip() {
        let rgb: Vec<u8> = (0..12).collect();
        let img = FundusImage::from_interleaved(2, 2, &rgb).unwrap();
        assert_eq!(img.green().as_slice(), &[1, 4, 7, 10]);
        assert_eq!(img.to_interleaved(), rgb);
    }

    #[test]
    fn mismatched_planes_rejected() {
        let a = GrayImage::filled(2, 2, 0);
        let b = GrayImage::filled(2, 3, 0);
        assert!(FundusImage::from_planes(a.clone(), b, a).is_err());
    }
}
