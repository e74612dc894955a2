//! Box-constrained L-BFGS ascent with a monotone backtracking line search.

use std::collections::VecDeque;

use crate::scalar::Scalar;

const MEMORY: usize = 10;
const ARMIJO: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 60;

pub(crate) struct AscentOutcome<T> {
    pub x: Vec<T>,
    pub value: T,
    pub iterations: usize,
    pub converged: bool,
    pub gradient_norm: T,
}

pub(crate) struct AscentSettings<T> {
    pub bound: T,
    pub tol: T,
    pub gradient_threshold: T,
    pub max_iters: usize,
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

/// Gradient with components that would push past an active bound zeroed.
fn projected<T: Scalar>(x: &[T], g: &[T], bound: T) -> Vec<T> {
    x.iter()
        .zip(g)
        .map(|(&xi, &gi)| {
            if (xi >= bound && gi > T::zero()) || (xi <= -bound && gi < T::zero()) {
                T::zero()
            } else {
                gi
            }
        })
        .collect()
}

fn norm<T: Scalar>(v: &[T]) -> T {
    dot(v, v).sqrt()
}

/// Maximizes `f` over the box `[-bound, bound]^n`. Every accepted step
/// strictly increases the objective; `observe` sees each accepted value.
pub(crate) fn maximize<T: Scalar>(
    f: impl Fn(&[T]) -> (T, Vec<T>),
    x0: Vec<T>,
    settings: &AscentSettings<T>,
    mut observe: impl FnMut(usize, T),
) -> AscentOutcome<T> {
    let bound = settings.bound;
    let clamp = |v: T| v.max(-bound).min(bound);
    let mut x: Vec<T> = x0.into_iter().map(clamp).collect();
    let (mut value, mut grad) = f(&x);
    observe(0, value);
    let mut pg = projected(&x, &grad, bound);
    let mut memory: VecDeque<(Vec<T>, Vec<T>, T)> = VecDeque::new();

    if x.is_empty() || !value.is_finite() {
        return AscentOutcome {
            gradient_norm: norm(&pg),
            converged: value.is_finite(),
            x,
            value,
            iterations: 0,
        };
    }

    let mut iterations = 0;
    let mut converged = false;
    while iterations < settings.max_iters {
        if norm(&pg) <= settings.gradient_threshold * T::of(1e-3) {
            converged = true;
            break;
        }
        iterations += 1;

        let mut direction = lbfgs_direction(&pg, &memory);
        // Freeze coordinates sitting on a bound they would cross.
        for (d, &xi) in direction.iter_mut().zip(&x) {
            if (xi >= bound && *d > T::zero()) || (xi <= -bound && *d < T::zero()) {
                *d = T::zero();
            }
        }
        if dot(&direction, &pg) <= T::zero() {
            memory.clear();
            direction = pg.clone();
        }

        let mut step = if memory.is_empty() {
            (T::one() / norm(&direction)).min(T::one())
        } else {
            T::one()
        };
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let candidate: Vec<T> = x.iter().zip(&direction).map(|(&xi, &di)| clamp(xi + step * di)).collect();
            let moved: Vec<T> = candidate.iter().zip(&x).map(|(&c, &xi)| c - xi).collect();
            let (cv, cg) = f(&candidate);
            if cv.is_finite() && cv > value && cv >= value + T::of(ARMIJO) * dot(&pg, &moved) {
                accepted = Some((candidate, moved, cv, cg));
                break;
            }
            step *= T::half();
        }
        let Some((candidate, moved, new_value, new_grad)) = accepted else {
            if memory.is_empty() {
                // No ascent possible along the projected gradient.
                converged = norm(&pg) <= settings.gradient_threshold;
                break;
            }
            memory.clear();
            continue;
        };

        // Curvature pair for the ascent problem: s = dx, y = -(dg).
        let y: Vec<T> = new_grad.iter().zip(&grad).map(|(&a, &b)| b - a).collect();
        let sy = dot(&moved, &y);
        if sy > T::of(1e-12) * norm(&moved) * norm(&y) {
            if memory.len() == MEMORY {
                memory.pop_front();
            }
            memory.push_back((moved, y, T::one() / sy));
        }

        let change = (new_value - value) / value.abs().max(T::one());
        x = candidate;
        value = new_value;
        grad = new_grad;
        pg = projected(&x, &grad, bound);
        observe(iterations, value);

        if change < settings.tol && norm(&pg) <= settings.gradient_threshold {
            converged = true;
            break;
        }
    }

    AscentOutcome {
        gradient_norm: norm(&pg),
        x,
        value,
        iterations,
        converged,
    }
}

/// Two-loop recursion; returns an ascent direction for gradient `g`.
fn lbfgs_direction<T: Scalar>(g: &[T], memory: &VecDeque<(Vec<T>, Vec<T>, T)>) -> Vec<T> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(memory.len());
    for (s, y, rho) in memory.iter().rev() {
        let a = *rho * dot(s, &q);
        for (qi, &yi) in q.iter_mut().zip(y) {
            *qi -= a * yi;
        }
        alphas.push(a);
    }
    if let Some((s, y, _)) = memory.back() {
        let gamma = dot(s, y) / dot(y, y);
        for qi in q.iter_mut() {
            *qi *= gamma;
        }
    }
    for ((s, y, rho), a) in memory.iter().zip(alphas.into_iter().rev()) {
        let b = *rho * dot(y, &q);
        for (qi, &si) in q.iter_mut().zip(s) {
            *qi += (a - b) * si;
        }
    }
    q
}
