//! Defining-integral oracles for the closed forms elsewhere in the crate.
//!
//! Every function here evaluates a quantity from first principles with its
//! own inline integrand and adaptive Simpson quadrature, sharing no code
//! with the closed-form implementations it cross-checks. Tests freeze
//! agreement between the two routes; production code should prefer the
//! closed forms.

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute tolerance
/// `tol`, with Richardson correction at acceptance.
pub fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, 50)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
}

/// Equal-profit price quantile written out from scratch.
fn quantile(mu: f64, v: f64, c: f64, x: f64) -> f64 {
    mu * (v - c) / (mu + x) + c
}

/// Expected gain from a second price quote, in money units, as the defining
/// integral: a consumer who compares two draws instead of one saves
/// `E[first] - E[min of two]`, and pairing levels gives the integrand
/// `p(x) (1 - 2x)`.
pub fn benefit_integral_mu(mu: f64, v: f64, c: f64, tol: f64) -> f64 {
    adaptive_simpson(&|x| quantile(mu, v, c, x) * (1.0 - 2.0 * x), 0.0, 1.0, tol)
}

/// Same integral parameterized by sampling intensity `q` with no shoppers,
/// where the captive weight is `(1 - q) / (2q)`.
pub fn benefit_integral(q: f64, v: f64, c: f64, tol: f64) -> f64 {
    benefit_integral_mu((1.0 - q) / (2.0 * q), v, c, tol)
}

/// Consumer surplus of a one-quote consumer, in money units:
/// `v - E[p] = v - integral of p(x) dx`. By the equal-gain indifference this
/// equals surplus gross of search costs for every consumer.
pub fn cs_integral(q: f64, v: f64, c: f64, tol: f64) -> f64 {
    let mu = (1.0 - q) / (2.0 * q);
    v - adaptive_simpson(&|x| quantile(mu, v, c, x), 0.0, 1.0, tol)
}

/// Gain from a second quote per unit surplus as a fixed-node Gauss-Legendre
/// integral, for brute-force grid scans where adaptivity is too slow.
pub fn benefit_gl(q: f64, rule: &crate::quad::GaussLegendre) -> f64 {
    let mu = (1.0 - q) / (2.0 * q);
    rule.integrate(0.0, 1.0, |x| quantile(mu, 1.0, 0.0, x) * (1.0 - 2.0 * x))
}
