use crate::error::{arg, Result};
use crate::simplex::{Face, MAX_ALLELES};

/// A linear change of homogeneous coordinates between two faces.
///
/// A function living on `source` is pulled back to `target` by replacing
/// each coordinate `p^l` with the sum of the target coordinates in
/// `image(l)`. An empty image sends the coordinate to zero.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct LabelMap {
    source: Face,
    target: Face,
    images: [u16; MAX_ALLELES],
}

impl LabelMap {
    /// Restriction from `face` to one of its subfaces.
    pub fn restriction(face: Face, subface: Face) -> Result<LabelMap> {
        if !subface.is_subface_of(face) {
            return arg(format!("{subface} is not a subface of {face}"));
        }
        let mut images = [0u16; MAX_ALLELES];
        for l in subface.labels() {
            images[l] = 1 << l;
        }
        Ok(LabelMap {
            source: face,
            target: subface,
            images,
        })
    }

    /// Pullback along the collapse of `target` that moves the mass of every
    /// label in `lost` onto `anchor`.
    pub fn collapse(target: Face, anchor: usize, lost: &[usize]) -> Result<LabelMap> {
        if !target.contains(anchor) {
            return arg(format!("anchor {anchor} is not in face {target}"));
        }
        let mut source = target;
        let mut lost_mask = 0u16;
        for &s in lost {
            if s == anchor || !source.contains(s) {
                return arg(format!("cannot collapse label {s} of face {target}"));
            }
            source = source.without(s)?;
            lost_mask |= 1 << s;
        }
        let mut images = [0u16; MAX_ALLELES];
        for l in source.labels() {
            images[l] = 1 << l;
        }
        images[anchor] |= lost_mask;
        Ok(LabelMap {
            source,
            target,
            images,
        })
    }

    #[inline]
    pub fn source(&self) -> Face {
        self.source
    }

    #[inline]
    pub fn target(&self) -> Face {
        self.target
    }

    #[inline]
    pub fn image(&self, label: usize) -> u16 {
        self.images[label]
    }

    /// Union of the images of the labels in `mask`.
    pub fn image_of_mask(&self, mask: u16) -> u16 {
        self.source
            .labels()
            .filter(|l| mask & (1 << l) != 0)
            .fold(0, |acc, l| acc | self.images[l])
    }
}
