//! Rasterisation of attractors by plotting `f_w(x̃)` for all words of a fixed
//! length, in standard coordinates.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::field::embed_to_standard;
use crate::ifs::{IfsSpec, SpecAnalysis};
use crate::{AffineF, Error, Vec2F};

/// Upper bound on `mⁿ` plotted points.
pub const MAX_POINTS: f64 = 1e7;
pub const MIN_PIXELS: u32 = 16;
pub const MAX_PIXELS: u32 = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Coloring {
    #[default]
    Mono,
    FirstIndex,
    SecondIndex,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Window {
    /// The bounding ball around the centroid.
    #[default]
    Auto,
    Explicit { cx: f64, cy: f64, half_width: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Depth {
    #[default]
    Auto,
    Fixed(u32),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RenderRequest {
    pub window: Window,
    pub width: u32,
    pub height: u32,
    pub coloring: Coloring,
    pub depth: Depth,
}

impl Default for RenderRequest {
    fn default() -> Self {
        RenderRequest {
            window: Window::Auto,
            width: 512,
            height: 512,
            coloring: Coloring::Mono,
            depth: Depth::Auto,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Raster {
    pub width: u32,
    pub height: u32,
    /// Row-major, top row first.
    pub rgb: Vec<u8>,
    pub depth: u32,
    /// `true` when the point cap lowered the requested depth.
    pub capped: bool,
    /// Pixels hit by at least one point.
    pub hits: usize,
    /// Window actually used: `(cx, cy, half_width)`.
    pub window: (f64, f64, f64),
}

const BACKGROUND: [u8; 3] = [255, 255, 255];
const INK: [u8; 3] = [0, 0, 0];
const PALETTE: [[u8; 3]; 10] = [
    [31, 119, 180],
    [255, 127, 14],
    [44, 160, 44],
    [214, 39, 40],
    [148, 103, 189],
    [140, 86, 75],
    [227, 119, 194],
    [127, 127, 127],
    [188, 189, 34],
    [23, 190, 207],
];

pub fn palette_color(class: usize) -> [u8; 3] {
    PALETTE[class % PALETTE.len()]
}

fn validate(req: &RenderRequest) -> Result<(), Error> {
    if req.width < MIN_PIXELS || req.height < MIN_PIXELS {
        return Err(Error::Render(format!(
            "image must be at least {MIN_PIXELS}×{MIN_PIXELS} pixels"
        )));
    }
    if req.width > MAX_PIXELS || req.height > MAX_PIXELS {
        return Err(Error::Render(format!(
            "image sides are limited to {MAX_PIXELS} pixels"
        )));
    }
    if let Window::Explicit { cx, cy, half_width } = req.window {
        if !(half_width > 0.0 && half_width.is_finite() && cx.is_finite() && cy.is_finite()) {
            return Err(Error::Render("window needs a finite centre and half-width > 0".into()));
        }
    }
    Ok(())
}

/// Standard-coordinate maps, centroid and bounding radius.
pub struct Geometry {
    pub maps: Vec<AffineF>,
    pub centroid: Vec2F,
    pub radius: f64,
    pub ratio: f64,
}

impl Geometry {
    pub fn new(spec: &IfsSpec) -> Result<Self, Error> {
        let an = SpecAnalysis::new(spec)?;
        let e = embed_to_standard(&spec.field);
        let e_inv = e.inverse().expect("embedding is invertible");
        let embed = AffineF::new(e, Vec2F::zero());
        let unembed = AffineF::new(e_inv, Vec2F::zero());
        let maps = an
            .maps
            .iter()
            .map(|f| embed.compose(&f.to_f64()).compose(&unembed))
            .collect();
        Ok(Geometry {
            maps,
            centroid: embed.apply(&an.centroid.to_f64()),
            radius: an.attractor_radius(),
            ratio: an.contraction_ratio(),
        })
    }

    /// Depth where the pieces shrink below one pixel, and the cap flag.
    pub fn auto_depth(&self, pixel: f64) -> (u32, bool) {
        let diameter = 2.0 * self.radius;
        let mut n = 0u32;
        while diameter * self.ratio.powi(n as i32) > pixel && n < 200 {
            n += 1;
        }
        self.cap(n)
    }

    pub fn cap(&self, n: u32) -> (u32, bool) {
        let m = self.maps.len() as f64;
        if m <= 1.0 {
            return (n, false);
        }
        let max = (MAX_POINTS.ln() / m.ln()).floor() as u32;
        if n > max {
            (max, true)
        } else {
            (n, false)
        }
    }

    /// Calls `visit(first, second, point)` for every word of length `depth`
    /// starting with `first` (0-based letters; `second` is `None` at depth 1).
    pub fn for_each_point<F: FnMut(Option<usize>, &Vec2F)>(&self, first: usize, depth: u32, mut visit: F) {
        if depth == 0 {
            visit(None, &self.centroid);
            return;
        }
        let mut stack: Vec<(AffineF, u32, Option<usize>)> = vec![(self.maps[first].clone(), 1, None)];
        while let Some((f, d, second)) = stack.pop() {
            if d == depth {
                visit(second, &f.apply(&self.centroid));
                continue;
            }
            for (k, g) in self.maps.iter().enumerate().rev() {
                stack.push((f.compose(g), d + 1, second.or(Some(k))));
            }
        }
    }

    pub fn points(&self, depth: u32) -> Vec<Vec2F> {
        let mut out = Vec::new();
        if depth == 0 {
            out.push(self.centroid.clone());
            return out;
        }
        for k in 0..self.maps.len() {
            self.for_each_point(k, depth, |_, p| out.push(p.clone()));
        }
        out
    }
}

pub fn render(spec: &IfsSpec, req: &RenderRequest) -> Result<Raster, Error> {
    validate(req)?;
    let geo = Geometry::new(spec)?;
    let (w, h) = (req.width as usize, req.height as usize);
    let (cx, cy, half_width) = match req.window {
        Window::Explicit { cx, cy, half_width } => (cx, cy, half_width),
        Window::Auto => {
            let r = if geo.radius > 0.0 { geo.radius * 1.05 } else { 1.0 };
            let aspect = (w as f64 / h as f64).max(1.0);
            (geo.centroid.x, geo.centroid.y, r * aspect)
        }
    };
    let pixel = 2.0 * half_width / w as f64;
    let half_height = pixel * h as f64 / 2.0;
    let (depth, capped) = match req.depth {
        Depth::Auto => geo.auto_depth(pixel),
        Depth::Fixed(n) => geo.cap(n),
    };
    let locate = |p: &Vec2F| -> Option<usize> {
        let col = ((p.x - (cx - half_width)) / pixel).floor();
        let row = (((cy + half_height) - p.y) / pixel).floor();
        if col >= 0.0 && row >= 0.0 && (col as usize) < w && (row as usize) < h {
            Some(row as usize * w + col as usize)
        } else {
            None
        }
    };

    // per first letter: 0 = miss, otherwise 1 + second letter (or 1 at depth ≤ 1)
    let firsts = if depth == 0 { 1 } else { geo.maps.len() };
    let layers: Vec<Vec<u8>> = (0..firsts)
        .into_par_iter()
        .map(|k| {
            let mut layer = vec![0u8; w * h];
            geo.for_each_point(k, depth, |second, p| {
                if let Some(i) = locate(p) {
                    let tag = second.map_or(1, |s| (s + 1).min(255) as u8);
                    if layer[i] == 0 || tag < layer[i] {
                        layer[i] = tag;
                    }
                }
            });
            layer
        })
        .collect();

    let mut rgb = Vec::with_capacity(w * h * 3);
    let mut hits = 0;
    for i in 0..w * h {
        let hit = layers.iter().enumerate().find(|(_, l)| l[i] != 0);
        let color = match hit {
            None => BACKGROUND,
            Some((k, l)) => {
                hits += 1;
                match req.coloring {
                    Coloring::Mono => INK,
                    Coloring::FirstIndex => palette_color(k),
                    Coloring::SecondIndex => palette_color(l[i] as usize - 1),
                }
            }
        };
        rgb.extend_from_slice(&color);
    }
    Ok(Raster {
        width: req.width,
        height: req.height,
        rgb,
        depth,
        capped,
        hits,
        window: (cx, cy, half_width),
    })
}

impl Raster {
    /// Binary PPM (P6).
    pub fn to_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.rgb);
        out
    }

    pub fn to_png(&self) -> Result<Vec<u8>, Error> {
        let mut out = Vec::new();
        {
            let mut enc = png::Encoder::new(&mut out, self.width, self.height);
            enc.set_color(png::ColorType::Rgb);
            enc.set_depth(png::BitDepth::Eight);
            let mut writer = enc
                .write_header()
                .map_err(|e| Error::Render(e.to_string()))?;
            writer
                .write_image_data(&self.rgb)
                .map_err(|e| Error::Render(e.to_string()))?;
        }
        Ok(out)
    }

    pub fn pixel(&self, col: u32, row: u32) -> [u8; 3] {
        let i = 3 * (row as usize * self.width as usize + col as usize);
        [self.rgb[i], self.rgb[i + 1], self.rgb[i + 2]]
    }

    pub fn distinct_colors(&self) -> Vec<[u8; 3]> {
        let mut seen: Vec<[u8; 3]> = self
            .rgb
            .chunks_exact(3)
            .map(|c| [c[0], c[1], c[2]])
            .filter(|c| *c != BACKGROUND)
            .collect();
        seen.sort_unstable();
        seen.dedup();
        seen
    }
}
