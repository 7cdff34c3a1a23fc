//! Named example configurations for rendering.

use crate::error::{Error, Result};
use crate::julia::{FiberedSystem, Window};

/// Half-width of the default square window.
pub const DEFAULT_HALF_WIDTH: f64 = 1.6;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Preset {
    pub name: &'static str,
    pub base: &'static str,
    pub probs: &'static str,
}

const fn preset(name: &'static str, base: &'static str, probs: &'static str) -> Preset {
    Preset { name, base, probs }
}

pub const PRESETS: &[Preset] = &[
    preset("fig3a", "const:3", "plist:0.7;tail=1"),
    preset("fig3b", "const:3", "plist:0.5;tail=1"),
    preset("fig3c", "const:3", "plist:0.4;tail=1"),
    preset("fig4a", "const:3", "plist:0.8,0.8,0.8;tail=1"),
    preset("fig4b", "const:3", "plist:0.7,0.7,0.7;tail=1"),
    preset("fig4c", "const:3", "plist:0.6,0.6,0.6;tail=1"),
    preset("fig5a", "even", "plist:0.55,1,0.5;tail=0.55"),
    preset("fig5b", "even", "plist:0.55,1;tail=0.55"),
    preset("fig5c", "even", "plist:1;tail=0.55"),
    preset("fig6a", "even", "pconst:0.8"),
    preset("fig6b", "even", "pconst:0.6"),
    preset("fig6c", "even", "pconst:0.52"),
    preset("fig7a", "fib", "plist:0.55,1,0.5;tail=0.55"),
    preset("fig7b", "fib", "plist:0.55,1;tail=0.55"),
    preset("fig7c", "fib", "plist:1;tail=0.55"),
    preset("fig8a", "fib", "pconst:0.55"),
    preset("fig8b", "fib", "pconst:0.81"),
    preset("fig8c", "fib", "pconst:0.61"),
    preset("fig9a", "periodic:3,5", "plist:0.55,0.9;tail=0.55"),
    preset("fig9b", "periodic:3,5", "plist:0.695,1;tail=0.695"),
    preset("fig9c", "periodic:3,5", "plist:0.55,0.95,0.95,0.95;tail=0.55"),
    preset("fig10a", "periodic:3,5", "pconst:0.7"),
    preset("fig10b", "periodic:3,5", "pconst:0.704"),
    preset("fig10c", "periodic:3,5", "pconst:0.8"),
];

pub fn find(name: &str) -> Option<&'static Preset> {
    PRESETS.iter().find(|p| p.name == name)
}

impl Preset {
    pub fn system(&self) -> Result<FiberedSystem> {
        Ok(FiberedSystem::new(self.base.parse()?, self.probs.parse()?))
    }
}

pub fn system(name: &str) -> Result<FiberedSystem> {
    find(name)
        .ok_or_else(|| Error::InvalidParameter(format!("unknown preset `{name}`")))?
        .system()
}

pub fn default_window() -> Window {
    Window::square(DEFAULT_HALF_WIDTH).expect("positive half-width")
}
