use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::crop::sample_crop_unchecked;
use super::{CropParams, Rect};
use crate::error::{Error, Result};

/// Relative position of two crops drawn from the same image.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairConfiguration {
    /// One crop lies inside the other.
    GlobalLocal,
    /// The crops do not intersect.
    Adjacent,
    /// The crops overlap without either containing the other.
    Intersection,
}

impl PairConfiguration {
    pub const ALL: [PairConfiguration; 3] = [
        PairConfiguration::GlobalLocal,
        PairConfiguration::Adjacent,
        PairConfiguration::Intersection,
    ];

    pub fn index(self) -> usize {
        match self {
            PairConfiguration::GlobalLocal => 0,
            PairConfiguration::Adjacent => 1,
            PairConfiguration::Intersection => 2,
        }
    }
}

/// How rect boundaries are treated when classifying a pair.
///
/// `PixelSet` compares the sets of covered pixels: equal rects are
/// global-local and rects that merely touch are adjacent.
///
/// `ContinuousBox` treats each rect as the closed box `[x, x+w] x [y, y+h]`:
/// global-local needs one box inside the open interior of the other, and
/// adjacent needs the closed boxes to be disjoint (at least one pixel of gap).
/// Shared edges therefore count as intersection. This is the convention
/// under which default crops on 32x32 images split 81.3% / 17.3% / 1.4%.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairGeometry {
    PixelSet,
    #[default]
    ContinuousBox,
}

impl FromStr for PairGeometry {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pixel_set" | "pixel-set" => Ok(PairGeometry::PixelSet),
            "continuous_box" | "continuous-box" => Ok(PairGeometry::ContinuousBox),
            other => Err(Error::param("geometry", format!("unknown pair geometry `{other}`"))),
        }
    }
}

/// Classifies a pair by pixel-set semantics.
pub fn classify_pair(a: &Rect, b: &Rect) -> PairConfiguration {
    classify_pair_with(a, b, PairGeometry::PixelSet)
}

pub fn classify_pair_with(a: &Rect, b: &Rect, geometry: PairGeometry) -> PairConfiguration {
    match geometry {
        PairGeometry::PixelSet => {
            if a.contains(b) || b.contains(a) {
                PairConfiguration::GlobalLocal
            } else if a.intersection(b).is_none() {
                PairConfiguration::Adjacent
            } else {
                PairConfiguration::Intersection
            }
        }
        PairGeometry::ContinuousBox => {
            if a.contains_strictly(b) || b.contains_strictly(a) {
                PairConfiguration::GlobalLocal
            } else if a.separated_from(b) {
                PairConfiguration::Adjacent
            } else {
                PairConfiguration::Intersection
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegimeKind {
    #[default]
    Default,
    GlobalLocalOnly,
    AdjacentOnly,
    IntersectionOnly,
    EqualConfiguration,
}

impl RegimeKind {
    pub fn name(self) -> &'static str {
        match self {
            RegimeKind::Default => "default",
            RegimeKind::GlobalLocalOnly => "global_local_only",
            RegimeKind::AdjacentOnly => "adjacent_only",
            RegimeKind::IntersectionOnly => "intersection_only",
            RegimeKind::EqualConfiguration => "equal_configuration",
        }
    }
}

impl fmt::Display for RegimeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RegimeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.replace('-', "_");
        [
            RegimeKind::Default,
            RegimeKind::GlobalLocalOnly,
            RegimeKind::AdjacentOnly,
            RegimeKind::IntersectionOnly,
            RegimeKind::EqualConfiguration,
        ]
        .into_iter()
        .find(|k| k.name() == norm)
        .ok_or_else(|| Error::param("regime", format!("unknown regime `{s}`")))
    }
}

/// Pair-sampling regime: which configurations are allowed, with which crop
/// parameters, under which boundary convention.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingRegime {
    pub kind: RegimeKind,
    pub crop: CropParams,
    pub geometry: PairGeometry,
}

/// Pair draws allowed per accepted pair in the constrained regimes.
pub const REJECTION_BUDGET: usize = 10_000;

impl SamplingRegime {
    pub fn new(kind: RegimeKind, crop: CropParams) -> Self {
        Self {
            kind,
            crop,
            geometry: PairGeometry::default(),
        }
    }

    pub fn with_geometry(mut self, geometry: PairGeometry) -> Self {
        self.geometry = geometry;
        self
    }

    fn fixed_target(&self) -> Option<PairConfiguration> {
        match self.kind {
            RegimeKind::GlobalLocalOnly => Some(PairConfiguration::GlobalLocal),
            RegimeKind::AdjacentOnly => Some(PairConfiguration::Adjacent),
            RegimeKind::IntersectionOnly => Some(PairConfiguration::Intersection),
            RegimeKind::Default | RegimeKind::EqualConfiguration => None,
        }
    }
}

/// Samples two crops of one image according to `regime`.
///
/// Constrained regimes rejection-sample whole pairs until the pair has the
/// target configuration; `EqualConfiguration` first picks the target
/// uniformly among the three.
pub fn sample_pair<R: Rng + ?Sized>(
    rng: &mut R,
    image_w: u32,
    image_h: u32,
    regime: &SamplingRegime,
) -> Result<(Rect, Rect)> {
    regime.crop.validate()?;
    if image_w == 0 || image_h == 0 {
        return Err(Error::Geometry(format!("image {image_w}x{image_h} is empty")));
    }
    sample_pair_unchecked(rng, image_w, image_h, regime)
}

pub(crate) fn sample_pair_unchecked<R: Rng + ?Sized>(
    rng: &mut R,
    image_w: u32,
    image_h: u32,
    regime: &SamplingRegime,
) -> Result<(Rect, Rect)> {
    let draw = |rng: &mut R| {
        (
            sample_crop_unchecked(rng, image_w, image_h, &regime.crop),
            sample_crop_unchecked(rng, image_w, image_h, &regime.crop),
        )
    };
    let target = match regime.kind {
        RegimeKind::Default => return Ok(draw(rng)),
        RegimeKind::EqualConfiguration => PairConfiguration::ALL[rng.gen_range(0..3)],
        _ => regime.fixed_target().expect("constrained regime"),
    };
    for _ in 0..REJECTION_BUDGET {
        let (a, b) = draw(rng);
        if classify_pair_with(&a, &b, regime.geometry) == target {
            return Ok((a, b));
        }
    }
    Err(Error::SamplingExhausted {
        target,
        attempts: REJECTION_BUDGET,
    })
}
