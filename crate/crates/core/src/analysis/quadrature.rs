use crate::error::{Result, SdeError};

/// Composite Simpson rule with `panels` panels, each using its midpoint.
pub fn composite_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    assert!(panels > 0, "need at least one panel");
    let h = (b - a) / panels as f64;
    let mut ends = f(a) + f(b);
    let mut mids = 0.0;
    for i in 0..panels {
        let left = a + h * i as f64;
        mids += f(left + 0.5 * h);
        if i > 0 {
            ends += 2.0 * f(left);
        }
    }
    h / 6.0 * (ends + 4.0 * mids)
}

/// Richardson-extrapolated Simpson: doubles the panel count from
/// `initial_panels` until two successive extrapolants agree to `rel_tol`.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    initial_panels: usize,
    rel_tol: f64,
) -> Result<f64> {
    const MAX_DOUBLINGS: u32 = 24;
    let mut panels = initial_panels.max(1);
    let mut coarse = composite_simpson(&f, a, b, panels);
    let mut previous: Option<f64> = None;
    for _ in 0..MAX_DOUBLINGS {
        panels *= 2;
        let fine = composite_simpson(&f, a, b, panels);
        let extrapolated = fine + (fine - coarse) / 15.0;
        if let Some(prev) = previous {
            if (extrapolated - prev).abs() <= rel_tol * extrapolated.abs().max(f64::MIN_POSITIVE) {
                return Ok(extrapolated);
            }
        }
        previous = Some(extrapolated);
        coarse = fine;
    }
    Err(SdeError::QuadratureNotConverged {
        rel_tol,
        doublings: MAX_DOUBLINGS,
    })
}
