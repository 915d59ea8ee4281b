//! Central finite differences, used as the independent oracle for the
//! analytic gradients.

/// Plain second-order central difference gradient with fixed step.
pub fn central_gradient<F>(mut f: F, x: &[f64], h: f64) -> Vec<f64>
where
    F: FnMut(&[f64]) -> f64,
{
    let mut grad = Vec::with_capacity(x.len());
    let mut pt = x.to_vec();
    for i in 0..x.len() {
        pt[i] = x[i] + h;
        let plus = f(&pt);
        pt[i] = x[i] - h;
        let minus = f(&pt);
        pt[i] = x[i];
        grad.push((plus - minus) / (2.0 * h));
    }
    grad
}

/// Ridders' polynomial extrapolation of central differences. Returns the
/// derivative and an error estimate; far more accurate than a single-step
/// central difference near the roundoff floor.
pub fn ridders_derivative<F>(mut f: F, x: f64, h0: f64) -> (f64, f64)
where
    F: FnMut(f64) -> f64,
{
    const NTAB: usize = 12;
    const CON: f64 = 1.4;
    const CON2: f64 = CON * CON;
    const SAFE: f64 = 2.0;

    let mut a = [[0.0f64; NTAB]; NTAB];
    let mut h = h0;
    a[0][0] = (f(x + h) - f(x - h)) / (2.0 * h);
    let mut ans = a[0][0];
    let mut err = f64::MAX;
    for i in 1..NTAB {
        h /= CON;
        a[0][i] = (f(x + h) - f(x - h)) / (2.0 * h);
        let mut fac = CON2;
        for j in 1..=i {
            a[j][i] = (a[j - 1][i] * fac - a[j - 1][i - 1]) / (fac - 1.0);
            fac *= CON2;
            let errt = (a[j][i] - a[j - 1][i])
                .abs()
                .max((a[j][i] - a[j - 1][i - 1]).abs());
            if errt <= err {
                err = errt;
                ans = a[j][i];
            }
        }
        if (a[i][i] - a[i - 1][i - 1]).abs() >= SAFE * err {
            break;
        }
    }
    (ans, err)
}

/// Elementwise Ridders gradient; `h0` is scaled by max(1, |x_i|) per
/// coordinate.
pub fn ridders_gradient<F>(mut f: F, x: &[f64], h0: f64) -> Vec<f64>
where
    F: FnMut(&[f64]) -> f64,
{
    let mut grad = Vec::with_capacity(x.len());
    let mut pt = x.to_vec();
    for i in 0..x.len() {
        let xi = x[i];
        let h = h0 * xi.abs().max(1.0);
        let (d, _) = ridders_derivative(
            |v| {
                pt[i] = v;
                let y = f(&pt);
                pt[i] = xi;
                y
            },
            xi,
            h,
        );
        grad.push(d);
    }
    grad
}
