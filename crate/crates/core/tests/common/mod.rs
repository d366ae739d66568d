//! Shared test support: finite-difference oracles and a random program
//! generator, kept independent of the jet implementation they validate.

// Each integration test target compiles its own copy and uses a subset.
#![allow(dead_code)]

use algebroid::Expr;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Central finite difference of `∂^alpha f` at `x`, applied recursively one
/// direction at a time with a fixed step.
pub fn central(f: &dyn Fn(&[f64]) -> f64, x: &[f64], alpha: &[usize], h: f64) -> f64 {
    match alpha.iter().position(|&a| a > 0) {
        None => f(x),
        Some(i) => {
            let mut reduced = alpha.to_vec();
            reduced[i] -= 1;
            let mut xp = x.to_vec();
            xp[i] += h;
            let mut xm = x.to_vec();
            xm[i] -= h;
            (central(f, &xp, &reduced, h) - central(f, &xm, &reduced, h)) / (2.0 * h)
        }
    }
}

/// Finite-difference partial derivative with steps chosen per order:
/// 1e-4 for orders one and two; Richardson-extrapolated central differences
/// at a larger step for order three, where an 1e-4 step would be dominated
/// by rounding (the error of a nested central stencil grows like
/// eps / h^order).
pub fn fd_partial(f: &dyn Fn(&[f64]) -> f64, x: &[f64], alpha: &[usize]) -> f64 {
    let order: usize = alpha.iter().sum();
    match order {
        0 => f(x),
        1 | 2 => central(f, x, alpha, 1e-4),
        _ => {
            let h = 2e-3;
            (4.0 * central(f, x, alpha, h / 2.0) - central(f, x, alpha, h)) / 3.0
        }
    }
}

/// `|a - b| <= tol * max(1, |a|, |b|)`.
pub fn close_rel(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

/// All multi-indices of total degree `<= order` in `d` variables.
pub fn multi_indices(d: usize, order: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = vec![0usize; d];
    fn rec(slot: usize, remaining: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if slot == current.len() {
            out.push(current.clone());
            return;
        }
        for a in 0..=remaining {
            current[slot] = a;
            rec(slot + 1, remaining - a, current, out);
            current[slot] = 0;
        }
    }
    rec(0, order, &mut current, &mut out);
    out
}

/// A random smooth program over `nvars` variables built from
/// `{+, -, ×, exp, sin, cos, sqrt}`. Arguments of `exp` are damped and
/// `sqrt` is applied to `0.4 + (...)²`, so every generated program is
/// analytic on all of R^nvars and safe for finite differences.
pub fn random_program(rng: &mut ChaCha8Rng, nvars: usize, depth: usize) -> Expr {
    if depth == 0 || rng.gen::<f64>() < 0.2 {
        return if rng.gen::<f64>() < 0.6 {
            Expr::Var(rng.gen_range(0..nvars))
        } else {
            Expr::Num(rng.gen_range(-1.5..1.5))
        };
    }
    let sub = |rng: &mut ChaCha8Rng| Box::new(random_program(rng, nvars, depth - 1));
    match rng.gen_range(0..7) {
        0 => Expr::Add(sub(rng), sub(rng)),
        1 => Expr::Sub(sub(rng), sub(rng)),
        2 => Expr::Mul(sub(rng), sub(rng)),
        3 => Expr::Call(algebroid::ElementaryFn::Sin, sub(rng)),
        4 => Expr::Call(algebroid::ElementaryFn::Cos, sub(rng)),
        5 => Expr::Call(
            algebroid::ElementaryFn::Exp,
            Box::new(Expr::Mul(Box::new(Expr::Num(0.5)), sub(rng))),
        ),
        _ => Expr::Call(
            algebroid::ElementaryFn::Sqrt,
            Box::new(Expr::Add(
                Box::new(Expr::Num(0.4)),
                Box::new(Expr::Pow(sub(rng), 2)),
            )),
        ),
    }
}
