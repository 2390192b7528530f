//! One-dimensional maximization helpers shared by the scans.

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for a maximum of `f` on the open bracket `(a, b)`.
/// Returns the best `(x, f(x))` among all evaluated points; `a` and `b`
/// themselves are never evaluated.
pub fn golden_max(mut a: f64, mut b: f64, iterations: usize, mut f: impl FnMut(f64) -> f64) -> (f64, f64) {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut best = if fd > fc { (d, fd) } else { (c, fc) };
    for _ in 0..iterations {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
            if fc > best.1 {
                best = (c, fc);
            }
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
            if fd > best.1 {
                best = (d, fd);
            }
        }
    }
    best
}

/// Maximizes `f` over the sorted `probes`, then refines around every discrete
/// local maximum (or only the global one when `all_peaks` is false) with
/// golden-section search between its neighbours. `lo`/`hi` bound the first
/// and last brackets.
pub fn probe_and_refine(
    probes: &[f64],
    lo: f64,
    hi: f64,
    iterations: usize,
    all_peaks: bool,
    mut f: impl FnMut(f64) -> f64,
) -> (f64, f64) {
    let values: Vec<f64> = probes.iter().map(|&x| f(x)).collect();
    let mut best = (f64::NAN, f64::NEG_INFINITY);
    for (&x, &v) in probes.iter().zip(&values) {
        if v > best.1 {
            best = (x, v);
        }
    }
    let peaks: Vec<usize> = if all_peaks {
        (0..probes.len())
            .filter(|&i| {
                (i == 0 || values[i] >= values[i - 1])
                    && (i + 1 == probes.len() || values[i] >= values[i + 1])
            })
            .collect()
    } else {
        probes.iter().position(|&x| x == best.0).into_iter().collect()
    };
    for i in peaks {
        let a = if i == 0 { lo } else { probes[i - 1] };
        let b = if i + 1 == probes.len() { hi } else { probes[i + 1] };
        if !(a < b) {
            continue;
        }
        let cand = golden_max(a, b, iterations, &mut f);
        if cand.1 > best.1 {
            best = cand;
        }
    }
    best
}
