use std::io::{self, Write};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};

use super::{FiberedSystem, OrbitStatus};

pub type PixelStatus = OrbitStatus;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Window {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl Window {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Result<Self> {
        let w = Window {
            re_min,
            re_max,
            im_min,
            im_max,
        };
        let finite = [re_min, re_max, im_min, im_max].iter().all(|x| x.is_finite());
        if !finite || re_max <= re_min || im_max <= im_min {
            return Err(Error::DegenerateWindow(format!(
                "[{re_min}, {re_max}] x [{im_min}, {im_max}]"
            )));
        }
        Ok(w)
    }

    /// `[-h, h]²`.
    pub fn square(h: f64) -> Result<Self> {
        Self::new(-h, h, -h, h)
    }
}

/// Escape status at the pixel centers of a window, row-major with the top row at
/// the largest imaginary part.
#[derive(Clone, Debug, PartialEq)]
pub struct MembershipGrid {
    pub window: Window,
    pub width: usize,
    pub height: usize,
    pub depth: u64,
    pub cells: Vec<PixelStatus>,
}

impl MembershipGrid {
    pub fn pixel_size(&self) -> (f64, f64) {
        (
            (self.window.re_max - self.window.re_min) / self.width as f64,
            (self.window.im_max - self.window.im_min) / self.height as f64,
        )
    }

    pub fn pixel_diagonal(&self) -> f64 {
        let (dx, dy) = self.pixel_size();
        dx.hypot(dy)
    }

    pub fn center(&self, x: usize, y: usize) -> Complex64 {
        let (dx, dy) = self.pixel_size();
        Complex64::new(
            self.window.re_min + (x as f64 + 0.5) * dx,
            self.window.im_max - (y as f64 + 0.5) * dy,
        )
    }

    pub fn status(&self, x: usize, y: usize) -> PixelStatus {
        self.cells[y * self.width + x]
    }

    pub fn is_bounded(&self, x: usize, y: usize) -> bool {
        self.status(x, y).is_bounded()
    }

    pub fn bounded_count(&self) -> usize {
        self.cells.iter().filter(|s| s.is_bounded()).count()
    }

    /// Pixel containing `z`, if inside the window.
    pub fn pixel_of(&self, z: Complex64) -> Option<(usize, usize)> {
        let (dx, dy) = self.pixel_size();
        let fx = (z.re - self.window.re_min) / dx;
        let fy = (self.window.im_max - z.im) / dy;
        if fx < 0.0 || fy < 0.0 {
            return None;
        }
        let (x, y) = (fx as usize, fy as usize);
        (x < self.width && y < self.height).then_some((x, y))
    }
}

pub fn render(
    sys: &FiberedSystem,
    window: Window,
    width: usize,
    height: usize,
    depth: u64,
) -> Result<MembershipGrid> {
    let window = Window::new(window.re_min, window.re_max, window.im_min, window.im_max)?;
    if width == 0 || height == 0 {
        return Err(Error::InvalidParameter(format!("resolution {width}x{height}")));
    }
    if depth == 0 {
        return Err(Error::InvalidParameter("render depth must be positive".into()));
    }
    let stages = sys.stages(depth);
    let mut grid = MembershipGrid {
        window,
        width,
        height,
        depth,
        cells: vec![OrbitStatus::BoundedUpTo(depth); width * height],
    };
    let probe = grid.clone();
    grid.cells
        .par_chunks_mut(width)
        .enumerate()
        .for_each(|(y, row)| {
            for (x, cell) in row.iter_mut().enumerate() {
                *cell = sys.escape_status(&stages, probe.center(x, y));
            }
        });
    Ok(grid)
}

/// Bounded pixels with at least one escaped 4-neighbor.
pub fn boundary_pixels(grid: &MembershipGrid) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for y in 0..grid.height {
        for x in 0..grid.width {
            if !grid.is_bounded(x, y) {
                continue;
            }
            let mut neighbors = Vec::with_capacity(4);
            if x > 0 {
                neighbors.push((x - 1, y));
            }
            if x + 1 < grid.width {
                neighbors.push((x + 1, y));
            }
            if y > 0 {
                neighbors.push((x, y - 1));
            }
            if y + 1 < grid.height {
                neighbors.push((x, y + 1));
            }
            if neighbors.iter().any(|&(i, j)| !grid.is_bounded(i, j)) {
                out.push((x, y));
            }
        }
    }
    out
}

/// Binary greymap: 255 for bounded pixels, `floor(254 r_0 / depth)` for escape stage `r_0`.
pub fn write_pgm<W: Write>(grid: &MembershipGrid, mut out: W) -> io::Result<()> {
    write!(out, "P5\n{} {}\n255\n", grid.width, grid.height)?;
    let bytes: Vec<u8> = grid
        .cells
        .iter()
        .map(|s| match s {
            OrbitStatus::BoundedUpTo(_) => 255,
            OrbitStatus::Escaped(r) => ((254 * r.min(&grid.depth)) / grid.depth) as u8,
        })
        .collect();
    out.write_all(&bytes)
}

/// Binary bitmap with bit 1 (black) for bounded pixels.
pub fn write_pbm<W: Write>(grid: &MembershipGrid, mut out: W) -> io::Result<()> {
    write!(out, "P4\n{} {}\n", grid.width, grid.height)?;
    let stride = grid.width.div_ceil(8);
    let mut row = vec![0u8; stride];
    for y in 0..grid.height {
        row.iter_mut().for_each(|b| *b = 0);
        for x in 0..grid.width {
            if grid.is_bounded(x, y) {
                row[x / 8] |= 0x80 >> (x % 8);
            }
        }
        out.write_all(&row)?;
    }
    Ok(())
}

pub fn write_metadata<W: Write>(
    grid: &MembershipGrid,
    sys: &FiberedSystem,
    extra: &[(&str, String)],
    mut out: W,
) -> io::Result<()> {
    let w = &grid.window;
    writeln!(out, "base={}", sys.base)?;
    writeln!(out, "probs={}", sys.probs)?;
    writeln!(out, "re_min={:.16e}", w.re_min)?;
    writeln!(out, "re_max={:.16e}", w.re_max)?;
    writeln!(out, "im_min={:.16e}", w.im_min)?;
    writeln!(out, "im_max={:.16e}", w.im_max)?;
    writeln!(out, "width={}", grid.width)?;
    writeln!(out, "height={}", grid.height)?;
    writeln!(out, "depth={}", grid.depth)?;
    writeln!(out, "bailout=1")?;
    writeln!(out, "sampling=pixel_center,row_major,top_row_max_im")?;
    writeln!(out, "bounded_pixels={}", grid.bounded_count())?;
    for (k, v) in extra {
        writeln!(out, "{k}={v}")?;
    }
    Ok(())
}
