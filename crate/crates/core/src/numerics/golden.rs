#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GoldenResult {
    pub x: f64,
    pub value: f64,
    /// Width of the final bracket.
    pub width: f64,
    pub evaluations: usize,
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for the maximum of a unimodal `f` on `[lo, hi]`,
/// stopping once the bracket is narrower than `tol`.
///
/// Ties between the two interior probes move the bracket to the right, so a
/// flat top resolves to its right end.
pub fn golden_section_max<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    tol: f64,
) -> GoldenResult {
    let (mut a, mut b) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut evaluations = 2;
    while (b - a) > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
        evaluations += 1;
        if evaluations > 10_000 {
            break;
        }
    }
    let x = 0.5 * (a + b);
    let value = f(x);
    GoldenResult {
        x,
        value,
        width: b - a,
        evaluations: evaluations + 1,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_parabola_vertex() {
        let r = golden_section_max(|x| -(x - 1.234).powi(2), 0.0, 3.0, 1e-9);
        assert!((r.x - 1.234).abs() < 1e-8);
        assert!(r.width <= 1e-9);
    }

    #[test]
    fn flat_top_goes_right() {
        let r = golden_section_max(|x: f64| if x < 1.0 { x } else { 1.0 }, 0.0, 2.0, 1e-6);
        assert!(r.x > 1.99);
    }
}
