//! Reference values computed without the library's integrators.

use nmr_probe::linalg::Mat2;
use nmr_probe::{BathSpec, ControlField, SystemSpec};
use num_complex::Complex64;

/// Uncontrolled dephasing decoherence factor `|ρ₀₁(t)| / |ρ₀₁(0)|`.
pub fn decoherence(gamma_cap: f64, gamma: f64, t: f64) -> f64 {
    (-2.0 * gamma_cap * (t + (-gamma * t).exp_m1() / gamma)).exp()
}

/// `∂D/∂γ`.
pub fn decoherence_d_gamma(gamma_cap: f64, gamma: f64, t: f64) -> f64 {
    let e = (-gamma * t).exp();
    // d/dγ [(1 − e^{−γt})/γ] = t e^{−γt}/γ − (1 − e^{−γt})/γ²
    let inner = t * e / gamma + (-gamma * t).exp_m1() / (gamma * gamma);
    2.0 * gamma_cap * inner * decoherence(gamma_cap, gamma, t)
}

/// Uncontrolled QFI for γ of an equatorial initial state.
pub fn dephasing_qfi(gamma_cap: f64, gamma: f64, t: f64) -> f64 {
    let d = decoherence(gamma_cap, gamma, t);
    let dd = decoherence_d_gamma(gamma_cap, gamma, t);
    if dd == 0.0 {
        return 0.0;
    }
    dd * dd / (1.0 - d * d)
}

/// `Ō(t) = ∫₀ᵗ α(t,s) O(t,s) ds` evaluated directly: every `O(t, s_j)` on a
/// fine grid is marched forward by Heun's method under
/// `∂ₜO = [−iH(t) − L†Ō(t), O]` with `O(s,s) = L`, and the `s` integral is
/// a trapezoid sum. `substeps` fine steps per control interval. Returns `Ō`
/// on the control grid.
pub fn obar_quadrature(
    system: &SystemSpec,
    bath: &BathSpec,
    control: &ControlField,
    substeps: usize,
) -> Vec<Mat2<f64>> {
    let h = control.dt() / substeps as f64;
    let steps = control.len() * substeps;
    let l = system.coupling;
    let minus_i = Complex64::new(0.0, -1.0);
    let alpha = |lag: usize| bath.correlation(lag as f64 * h, 0.0);
    // ops[j] = O(t_n, s_j) for j ≤ n
    let mut ops: Vec<Mat2<f64>> = Vec::with_capacity(steps + 1);
    ops.push(l);
    let integrate = |ops: &[Mat2<f64>]| {
        let n = ops.len() - 1;
        if n == 0 {
            return Mat2::zero();
        }
        let mut acc = Mat2::zero();
        for (j, o) in ops.iter().enumerate() {
            let w = if j == 0 || j == n { 0.5 * h } else { h };
            acc = acc + o.scale_c(alpha(n - j) * w);
        }
        acc
    };
    let mut obar = Mat2::zero();
    let mut out = vec![obar];
    for n in 0..steps {
        let k = n / substeps;
        let ham = system.hamiltonian(control.sample(k));
        let gen = |ob: &Mat2<f64>| ham.scale_c(minus_i) - l.adjoint() * *ob;
        let a0 = gen(&obar);
        let predicted: Vec<Mat2<f64>> =
            ops.iter().map(|o| *o + a0.commutator(o).scale(h)).collect();
        let mut extended = predicted.clone();
        extended.push(l);
        let a1 = gen(&integrate(&extended));
        for (o, p) in ops.iter_mut().zip(&predicted) {
            *o = *o + (a0.commutator(o) + a1.commutator(p)).scale(0.5 * h);
        }
        ops.push(l);
        obar = integrate(&ops);
        if (n + 1) % substeps == 0 {
            out.push(obar);
        }
    }
    out
}

/// Spearman correlation recomputed with a plain O(n²) rank count.
pub fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    let rank = |v: &[f64]| -> Vec<f64> {
        v.iter()
            .map(|&a| {
                let below = v.iter().filter(|&&b| b < a).count() as f64;
                let equal = v.iter().filter(|&&b| b == a).count() as f64;
                below + (equal + 1.0) / 2.0
            })
            .collect()
    };
    let (rx, ry) = (rank(xs), rank(ys));
    let n = xs.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}
