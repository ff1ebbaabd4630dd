// libm keeps results identical with and without std.
pub(crate) use libm::{cos, exp, fabs as abs, sin, sqrt};

pub(crate) const PI: f64 = core::f64::consts::PI;
