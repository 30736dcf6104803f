//! Bessel functions of the first and second kind of integer order.
//!
//! `J0`, `J1`, `Y0`, `Y1` follow the classical Cephes rational/asymptotic
//! approximations (near machine precision in double). Higher orders use
//! forward recurrence where it is stable (`n < x`, and always for `Y`) and a
//! continued-fraction seeded backward recurrence for `J_n` with `n > x`.

use crate::error::{Error, Result};
use std::f64::consts::{FRAC_PI_4, PI};

/// Non-negative integer order. Negative orders are reduced by the caller via
/// `J_{-n} = (-1)^n J_n`.
pub type BesselOrder = u32;

const SQRT_FRAC_2_PI: f64 = 0.7978845608028654;

fn eval_polynomial(x: f64, coeffs: &[f64]) -> f64 {
    let mut acc = coeffs[0];
    for c in &coeffs[1..] {
        acc = acc * x + c;
    }
    acc
}

// Same as `eval_polynomial` with an implicit leading coefficient of 1.
fn eval_polynomial_1(x: f64, coeffs: &[f64]) -> f64 {
    let mut acc = x + coeffs[0];
    for c in &coeffs[1..] {
        acc = acc * x + c;
    }
    acc
}

/* 5.783185962946784521175995758455807035071 */
const DR1: f64 = 5.783185962946784;
/* 30.47126234366208639907816317502275584842 */
const DR2: f64 = 30.471262343662087;

static J0_RP: [f64; 4] = [
    -4.794432209782018e9,
    1.9561749194655657e12,
    -2.4924834436096772e14,
    9.708622510473064e15,
];
static J0_RQ: [f64; 8] = [
    4.99563147152651e2,
    1.737854016763747e5,
    4.844096583399621e7,
    1.1185553704535683e10,
    2.112775201154892e12,
    3.1051822985742256e14,
    3.1812195594320496e16,
    1.7108629408104315e18,
];
static J0_PP: [f64; 7] = [
    7.969367292973471e-4,
    8.283523921074408e-2,
    1.239533716464143,
    5.447250030587687,
    8.74716500199817,
    5.303240382353949,
    1.0,
];
static J0_PQ: [f64; 7] = [
    9.244088105588637e-4,
    8.562884743544745e-2,
    1.2535274390105895,
    5.470977403304171,
    8.761908832370695,
    5.306052882353947,
    1.0,
];
static J0_QP: [f64; 8] = [
    -1.1366383889846916e-2,
    -1.2825271867050931,
    -1.9553954425773597e1,
    -9.320601521237683e1,
    -1.7768116798048806e2,
    -1.4707750515495118e2,
    -5.141053267665993e1,
    -6.050143506007285,
];
static J0_QQ: [f64; 7] = [
    6.43178256118178e1,
    8.564300259769806e2,
    3.8824018360540163e3,
    7.240467741956525e3,
    5.930727011873169e3,
    2.0620933166032783e3,
    2.420057402402914e2,
];
static Y0_YP: [f64; 8] = [
    1.5592436785523574e4,
    -1.466392959039716e7,
    5.435264770518765e9,
    -9.821360657179115e11,
    8.75906394395367e13,
    -3.466283033847297e15,
    4.4273326857256984e16,
    -1.8495080043698668e16,
];
static Y0_YQ: [f64; 7] = [
    1.0412835366425984e3,
    6.26107330137135e5,
    2.6891963339381415e8,
    8.64002487103935e10,
    2.0297961275010555e13,
    3.1715775284297505e15,
    2.5059625617265306e17,
];

/// J0(x) for any real x.
pub fn bessel_j0(mut x: f64) -> f64 {
    if x < 0.0 {
        x = -x;
    }
    if x <= 5.0 {
        let z = x * x;
        if x < 1e-5 {
            return 1.0 - z / 4.0;
        }
        let p = (z - DR1) * (z - DR2);
        return p * eval_polynomial(z, &J0_RP) / eval_polynomial_1(z, &J0_RQ);
    }
    let w = 5.0 / x;
    let q = 25.0 / (x * x);
    let p = eval_polynomial(q, &J0_PP) / eval_polynomial(q, &J0_PQ);
    let q = eval_polynomial(q, &J0_QP) / eval_polynomial_1(q, &J0_QQ);
    let xn = x - FRAC_PI_4;
    let p = p * f64::cos(xn) - w * q * f64::sin(xn);
    p * SQRT_FRAC_2_PI / f64::sqrt(x)
}

/// Y0(x) for x > 0.
pub fn bessel_y0(x: f64) -> f64 {
    if x == 0.0 {
        return f64::NEG_INFINITY;
    } else if x < 0.0 {
        return f64::NAN;
    }
    if x <= 5.0 {
        let z = x * x;
        let mut w = eval_polynomial(z, &Y0_YP) / eval_polynomial_1(z, &Y0_YQ);
        w += 2.0 / PI * f64::ln(x) * bessel_j0(x);
        return w;
    }
    let w = 5.0 / x;
    let z = 25.0 / (x * x);
    let p = eval_polynomial(z, &J0_PP) / eval_polynomial(z, &J0_PQ);
    let q = eval_polynomial(z, &J0_QP) / eval_polynomial_1(z, &J0_QQ);
    let xn = x - FRAC_PI_4;
    let p = p * f64::sin(xn) + w * q * f64::cos(xn);
    p * SQRT_FRAC_2_PI / f64::sqrt(x)
}

const Z1: f64 = 1.4681970642123893e1;
const Z2: f64 = 4.92184563216946e1;

static J1_RP: [f64; 4] = [
    -8.999712257055594e8,
    4.5222829799819403e11,
    -7.274942452218183e13,
    3.682957328638529e15,
];
static J1_RQ: [f64; 8] = [
    6.208364781180543e2,
    2.5698725675774884e5,
    8.351467914319493e7,
    2.215115954797925e10,
    4.749141220799914e12,
    7.843696078762359e14,
    8.952223361846274e16,
    5.322786203326801e18,
];
static J1_PP: [f64; 7] = [
    7.621256162081731e-4,
    7.313970569409176e-2,
    1.1271960812968493,
    5.112079511468076,
    8.424045901417724,
    5.214515986823615,
    1.0,
];
static J1_PQ: [f64; 7] = [
    5.713231280725487e-4,
    6.884559087544954e-2,
    1.105142326340617,
    5.073863861286015,
    8.399855543276042,
    5.209828486823619,
    1.0,
];
static J1_QP: [f64; 8] = [
    5.108625947501766e-2,
    4.982138729512334,
    7.582382841325453e1,
    3.667796093601508e2,
    7.108563049989261e2,
    5.974896124006136e2,
    2.1168875710057213e2,
    2.5207020585802372e1,
];
static J1_QQ: [f64; 7] = [
    7.423732770356752e1,
    1.0564488603826283e3,
    4.986410583376536e3,
    9.562318924047562e3,
    7.997041604473507e3,
    2.8261927851763908e3,
    3.360936078106983e2,
];
static Y1_YP: [f64; 6] = [
    1.2632047479017804e9,
    -6.473558763791603e11,
    1.1450951154182373e14,
    -8.127702555013251e15,
    2.024394757135949e17,
    -7.788771962659501e17,
];
static Y1_YQ: [f64; 8] = [
    5.943015923461282e2,
    2.3556409294306856e5,
    7.348119444597217e7,
    1.8760131610870617e10,
    3.8823127749623857e12,
    6.205577271469538e14,
    6.871410873553005e16,
    3.9727060811656064e18,
];

/// J1(x) for any real x.
pub fn bessel_j1(x: f64) -> f64 {
    if x < 0.0 {
        return -bessel_j1(-x);
    }
    let mut w = x;
    if w <= 5.0 {
        let z = x * x;
        w = eval_polynomial(z, &J1_RP) / eval_polynomial_1(z, &J1_RQ);
        return w * x * (z - Z1) * (z - Z2);
    }
    w = 5.0 / x;
    let z = w * w;
    let mut p = eval_polynomial(z, &J1_PP) / eval_polynomial(z, &J1_PQ);
    let q = eval_polynomial(z, &J1_QP) / eval_polynomial_1(z, &J1_QQ);
    let xn = x - 0.75 * PI;
    p = p * f64::cos(xn) - w * q * f64::sin(xn);
    p * SQRT_FRAC_2_PI / f64::sqrt(x)
}

/// Y1(x) for x > 0.
pub fn bessel_y1(x: f64) -> f64 {
    if x <= 5.0 {
        if x == 0.0 {
            return f64::NEG_INFINITY;
        } else if x < 0.0 {
            return f64::NAN;
        }
        let z = x * x;
        let mut w = x * (eval_polynomial(z, &Y1_YP) / eval_polynomial_1(z, &Y1_YQ));
        w += 2.0 / PI * (bessel_j1(x) * f64::ln(x) - 1.0 / x);
        return w;
    }
    let w = 5.0 / x;
    let z = w * w;
    let mut p = eval_polynomial(z, &J1_PP) / eval_polynomial(z, &J1_PQ);
    let q = eval_polynomial(z, &J1_QP) / eval_polynomial_1(z, &J1_QQ);
    let xn = x - 0.75 * PI;
    p = p * f64::sin(xn) + w * q * f64::cos(xn);
    p * SQRT_FRAC_2_PI / f64::sqrt(x)
}

// x below which the leading Taylor term suffices for J_n.
const TWO_M29: f64 = 1.862645149230957e-9;
const LN_MAX_EXP: f64 = 7.09782712893383973096e2;

fn bessel_jn_unchecked(n: u32, x: f64) -> f64 {
    if n == 0 {
        return bessel_j0(x);
    }
    if n == 1 {
        return bessel_j1(x);
    }
    if x == 0.0 {
        return 0.0;
    }
    let (x, negative) = if x < 0.0 { (-x, n % 2 == 1) } else { (x, false) };

    let b: f64;
    if f64::from(n) <= x {
        // forward recurrence from J0, J1
        let mut a = bessel_j0(x);
        b = {
            let mut b = bessel_j1(x);
            for i in 1..n {
                let prev = b;
                b = b * (f64::from(i + i) / x) - a;
                a = prev;
            }
            b
        };
    } else if x < TWO_M29 {
        // J(n,x) ~ (x/2)^n / n!
        if n > 33 {
            b = 0.0; // underflow
        } else {
            let half = 0.5 * x;
            let mut num = half;
            let mut fact = 1.0;
            for i in 2..=n {
                fact *= f64::from(i);
                num *= half;
            }
            b = num / fact;
        }
    } else {
        // Backward recurrence seeded by the continued fraction for
        // J(n,x)/J(n-1,x); normalized against J0 at the end.
        let w = f64::from(n + n) / x;
        let h = 2.0 / x;
        let mut q0 = w;
        let mut z = w + h;
        let mut q1 = w * z - 1.0;
        let mut k: u32 = 1;
        while q1 < 1e9 {
            k += 1;
            z += h;
            let prev = q1;
            q1 = z * q1 - q0;
            q0 = prev;
        }
        let mut t = 0.0;
        let mut i = 2 * (n + k);
        while i >= n + n {
            t = 1.0 / (f64::from(i) / x - t);
            i -= 2;
        }
        let mut a = t;
        let mut bb = 1.0;
        let n_f64 = f64::from(n);
        let x_critical = n_f64 * f64::ln(f64::abs(2.0 * n_f64 / x));
        let mut i = n - 1;
        if x_critical < LN_MAX_EXP {
            while i > 0 {
                let di = f64::from(i + i);
                let prev = bb;
                bb = bb * di / x - a;
                a = prev;
                i -= 1;
            }
        } else {
            while i > 0 {
                let di = f64::from(i + i);
                let prev = bb;
                bb = bb * di / x - a;
                a = prev;
                // rescale to avoid spurious overflow
                if bb > 1e100 {
                    a /= bb;
                    t /= bb;
                    bb = 1.0;
                }
                i -= 1;
            }
        }
        b = t * bessel_j0(x) / bb;
    }

    if negative {
        -b
    } else {
        b
    }
}

fn bessel_yn_unchecked(n: u32, x: f64) -> f64 {
    if n == 0 {
        return bessel_y0(x);
    }
    if n == 1 {
        return bessel_y1(x);
    }
    // upward recurrence is stable for Y
    let mut a = bessel_y0(x);
    let mut b = bessel_y1(x);
    for i in 1..n {
        if b.is_infinite() {
            break;
        }
        let prev = b;
        b = (f64::from(i + i) / x) * b - a;
        a = prev;
    }
    b
}

/// All of `J_0(x), ..., J_nmax(x)` in one downward (Miller) recurrence,
/// normalized with the Neumann sum `J_0 + 2 sum_k J_{2k} = 1`.
pub fn bessel_jn_all(nmax: usize, x: f64) -> Vec<f64> {
    assert!(x >= 0.0 && x.is_finite());
    if x == 0.0 {
        let mut out = vec![0.0; nmax + 1];
        out[0] = 1.0;
        return out;
    }
    // start well past the transition region so the minimal solution dominates
    let transition = x + 10.0 * x.cbrt() + 20.0;
    let start = nmax.max(transition.ceil() as usize) + 50;
    let mut out = vec![0.0; nmax + 1];
    let mut jp = 0.0f64; // J_{m+1} (unnormalized)
    let mut j = 1e-300f64; // J_m
    let mut norm = 0.0f64;
    for m in (0..=start).rev() {
        let jm = (2.0 * (m as f64 + 1.0) / x) * j - jp;
        jp = j;
        j = jm;
        if m <= nmax {
            out[m] = j;
        }
        if m % 2 == 0 {
            norm += if m == 0 { j } else { 2.0 * j };
        }
        if j.abs() > 1e250 {
            jp /= 1e250;
            j /= 1e250;
            norm /= 1e250;
            for v in &mut out[m.min(nmax + 1)..] {
                *v /= 1e250;
            }
        }
    }
    for v in &mut out {
        *v /= norm;
    }
    out
}

/// All of `Y_0(x), ..., Y_nmax(x)` by upward recurrence, saturating at
/// `-inf` once the values overflow (they are negative and growing there).
pub fn bessel_yn_all(nmax: usize, x: f64) -> Vec<f64> {
    assert!(x > 0.0 && x.is_finite());
    let mut out = Vec::with_capacity(nmax + 1);
    out.push(bessel_y0(x));
    if nmax == 0 {
        return out;
    }
    out.push(bessel_y1(x));
    for i in 1..nmax {
        let prev = out[i - 1];
        let cur = out[i];
        let next = if cur.is_infinite() {
            f64::NEG_INFINITY
        } else {
            (f64::from(i as u32 + i as u32) / x) * cur - prev
        };
        out.push(next);
    }
    out
}

/// J_n(x) for integer order n >= 0 and finite x.
pub fn bessel_j(n: BesselOrder, x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::domain("bessel_j", format!("x = {x} is not finite")));
    }
    Ok(bessel_jn_unchecked(n, x))
}

/// Y_n(x) for integer order n >= 0 and x > 0.
pub fn bessel_y(n: BesselOrder, x: f64) -> Result<f64> {
    if !x.is_finite() || x <= 0.0 {
        return Err(Error::domain("bessel_y", format!("x = {x} must be > 0")));
    }
    Ok(bessel_yn_unchecked(n, x))
}

/// |H_n^{(1)}(x)|^2 = J_n(x)^2 + Y_n(x)^2, for x > 0.
pub fn hankel1_abs2(n: BesselOrder, x: f64) -> Result<f64> {
    if !x.is_finite() || x <= 0.0 {
        return Err(Error::domain(
            "hankel1_abs2",
            format!("x = {x} must be > 0"),
        ));
    }
    let j = bessel_jn_unchecked(n, x);
    let y = bessel_yn_unchecked(n, x);
    Ok(j * j + y * y)
}
