//! Golden-section line search.

/// Minimize a unimodal `f` on `[a, b]` with at most `budget` calls (>= 2).
///
/// Returns `(x, f(x), calls)` for the best probe.
pub fn golden_section<E, F: FnMut(f64) -> Result<f64, E>>(
    mut f: F,
    mut a: f64,
    mut b: f64,
    budget: usize,
) -> Result<(f64, f64, usize), E> {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    let mut used = 2;
    while used < budget {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2)?;
        }
        used += 1;
    }
    Ok(if f1 < f2 { (x1, f1, used) } else { (x2, f2, used) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parabola_minimum() {
        let (x, v, n) = golden_section(|x| Ok::<_, ()>((x - 0.3).powi(2)), -1.0, 2.0, 60).unwrap();
        assert!((x - 0.3).abs() < 1e-9 && v < 1e-17 && n == 60);
    }
}
