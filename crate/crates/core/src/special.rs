//! Sine and cosine integrals.

use std::f64::consts::FRAC_PI_2;

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Returns `(Si(x), Ci(x))` for `x > 0`.
///
/// Power series below 2, Lentz continued fraction for `E1(ix)` above.
pub fn si_ci(x: f64) -> (f64, f64) {
    assert!(x > 0.0, "si_ci requires x > 0");
    if x < 2.0 {
        series(x)
    } else {
        continued_fraction(x)
    }
}

pub fn si(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else if x < 0.0 {
        -si_ci(-x).0
    } else {
        si_ci(x).0
    }
}

pub fn ci(x: f64) -> f64 {
    si_ci(x).1
}

fn series(x: f64) -> (f64, f64) {
    let mut si = 0.0;
    let mut ci = 0.0;
    // term = (-1)^k x^k / k!, odd k feeds Si, even k >= 2 feeds Ci.
    let mut term = 1.0;
    for k in 1..60 {
        term *= x / k as f64;
        let signed = if (k / 2) % 2 == 0 { term } else { -term };
        if k % 2 == 1 {
            si += signed / k as f64;
        } else {
            ci += signed / k as f64;
        }
        if term < 1e-18 * (si.abs() + 1.0) && k > 4 {
            break;
        }
    }
    (si, EULER_GAMMA + x.ln() + ci)
}

fn continued_fraction(x: f64) -> (f64, f64) {
    // E1(ix) = e^{-ix} / (1 + ix - 1/(3 + ix - 4/(5 + ix - ...)))
    const TINY: f64 = 1e-300;
    let mut b = (1.0, x);
    let mut c = (1.0 / TINY, 0.0);
    let mut d = cinv(b);
    let mut h = d;
    for i in 2..100_000 {
        let a = -((i - 1) as f64).powi(2);
        b.0 += 2.0;
        d = cinv(cadd(cscale(d, a), b));
        c = cadd(b, cscale(cinv(c), a));
        let del = cmul(c, d);
        h = cmul(h, del);
        if (del.0 - 1.0).abs() + del.1.abs() < 1e-16 {
            break;
        }
    }
    let h = cmul((x.cos(), -x.sin()), h);
    (FRAC_PI_2 + h.1, -h.0)
}

fn cadd(a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    (a.0 + b.0, a.1 + b.1)
}
fn cscale(a: (f64, f64), s: f64) -> (f64, f64) {
    (a.0 * s, a.1 * s)
}
fn cmul(a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    (a.0 * b.0 - a.1 * b.1, a.0 * b.1 + a.1 * b.0)
}
fn cinv(a: (f64, f64)) -> (f64, f64) {
    let n = a.0 * a.0 + a.1 * a.1;
    (a.0 / n, -a.1 / n)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TABLE: &[(f64, f64, f64)] = &[
        (0.1, 0.099944461108276955702, -1.7278683866572965838),
        (0.5, 0.49310741804306668916, -0.17778407880661290134),
        (1.0, 0.94608307036718301494, 0.33740392290096813466),
        (2.0, 1.6054129768026948486, 0.4229808287748649957),
        (3.0, 1.8486525279994682564, 0.11962978600800032763),
        (5.0, 1.5499312449446741373, -0.19002974965664387862),
        (10.0, 1.6583475942188740493, -0.045456433004455372635),
        (20.0, 1.5482417010434398402, 0.04441982084535331654),
        (100.0, 1.5622254668890562934, -0.0051488251426104921444),
        (1e3, 1.5702331219687712181, 0.000826315511090682282),
        (1e4, 1.5708915453859619157, -0.000030551916724485212665),
        (1e6, 1.5707953900431190815, -3.4999443892272049264e-7),
    ];

    #[test]
    fn matches_reference_table() {
        for &(x, s, c) in TABLE {
            let (gs, gc) = si_ci(x);
            assert!((gs - s).abs() < 1e-14 * s.abs().max(1.0), "Si({x}) = {gs}, want {s}");
            assert!((gc - c).abs() < 2e-14 * c.abs().max(1.0), "Ci({x}) = {gc}, want {c}");
        }
    }

    #[test]
    fn continuous_across_switch() {
        let below = series(2.0);
        let above = continued_fraction(2.0);
        assert!((below.0 - above.0).abs() < 1e-14);
        assert!((below.1 - above.1).abs() < 1e-14);
    }
}
