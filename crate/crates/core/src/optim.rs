//! Derivative-free minimization used for observable selection.

use crate::scalar::Real;

/// Nelder–Mead simplex search. Stops when the spread of function values over
/// the simplex drops below `ftol` or after `max_evals` evaluations. Returns
/// the best vertex and its value.
pub fn nelder_mead<T: Real>(
    f: impl Fn(&[T]) -> T,
    start: &[T],
    initial_step: T,
    ftol: T,
    max_evals: usize,
) -> (Vec<T>, T) {
    let n = start.len();
    let (alpha, gamma, rho, sigma) = (T::one(), T::lit(2.0), T::lit(0.5), T::lit(0.5));
    let mut simplex: Vec<Vec<T>> = Vec::with_capacity(n + 1);
    simplex.push(start.to_vec());
    for i in 0..n {
        let mut v = start.to_vec();
        v[i] = v[i] + initial_step;
        simplex.push(v);
    }
    let mut values: Vec<T> = simplex.iter().map(|v| f(v)).collect();
    let mut evals = n + 1;

    let order = |simplex: &mut Vec<Vec<T>>, values: &mut Vec<T>| {
        let mut idx: Vec<usize> = (0..values.len()).collect();
        idx.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap_or(std::cmp::Ordering::Equal));
        *simplex = idx.iter().map(|&i| simplex[i].clone()).collect();
        *values = idx.iter().map(|&i| values[i]).collect();
    };

    while evals < max_evals {
        order(&mut simplex, &mut values);
        let spread = values[n] - values[0];
        if spread.is_finite() && spread.abs() <= ftol {
            break;
        }
        let centroid: Vec<T> = (0..n)
            .map(|j| simplex[..n].iter().map(|v| v[j]).sum::<T>() / T::from_usize_lossy(n))
            .collect();
        let towards = |coef: T| -> Vec<T> {
            centroid
                .iter()
                .zip(&simplex[n])
                .map(|(&c, &w)| c + coef * (w - c))
                .collect()
        };
        let reflected = towards(-alpha);
        let f_r = f(&reflected);
        evals += 1;
        if f_r < values[0] {
            let expanded = towards(-alpha * gamma);
            let f_e = f(&expanded);
            evals += 1;
            if f_e < f_r {
                simplex[n] = expanded;
                values[n] = f_e;
            } else {
                simplex[n] = reflected;
                values[n] = f_r;
            }
        } else if f_r < values[n - 1] {
            simplex[n] = reflected;
            values[n] = f_r;
        } else {
            let contracted = if f_r < values[n] { towards(-alpha * rho) } else { towards(rho) };
            let f_c = f(&contracted);
            evals += 1;
            if f_c < values[n].min(f_r) {
                simplex[n] = contracted;
                values[n] = f_c;
            } else {
                let best = simplex[0].clone();
                for i in 1..=n {
                    simplex[i] = best
                        .iter()
                        .zip(&simplex[i])
                        .map(|(&b, &v)| b + sigma * (v - b))
                        .collect();
                    values[i] = f(&simplex[i]);
                }
                evals += n;
            }
        }
    }
    order(&mut simplex, &mut values);
    (simplex.swap_remove(0), values[0])
}
