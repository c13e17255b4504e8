//! Time-dependent coupling waveforms.
//!
//! A [`Modulation`] is either a closed-form series (with analytic
//! derivatives) or uniformly sampled data (with finite-difference
//! derivatives). Coefficient layouts per kind:
//!
//! | kind               | coefficients                                   | waveform                                   |
//! |--------------------|------------------------------------------------|--------------------------------------------|
//! | `Polynomial`       | `b_0 … b_L`                                    | Σ b_ℓ (t/t_f)^ℓ                            |
//! | `Trigonometric`    | `A_1 … A_M`                                    | Σ A_m sin(mπt/t_f)                         |
//! | `FourierSeries`    | `c_0 … c_{K-1}, d_1 … d_K`                     | Σ c_m cos(mπt/t_f) + Σ d_m sin(mπt/t_f)    |
//! | `ConstantBaseline` | `g`                                            | g                                          |
//! | `BangBang`         | `u_max, s_1, s_2, …` (increasing switch times) | u_max until s_1, 0 until s_2, …            |
//! | `Sampled`          | unused                                         | linear interpolation of `samples`          |
//!
//! All coefficients are in rad/s, switch times in seconds.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::{self, Write};

use crate::error::{ReadoutError, Result};
use crate::quadrature::{adaptive_simpson, trapezoid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModulationKind {
    Polynomial,
    Trigonometric,
    FourierSeries,
    Sampled,
    ConstantBaseline,
    BangBang,
}

/// Value and the first two time derivatives of a waveform at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Derivatives {
    pub value: f64,
    pub first: f64,
    pub second: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModulationRepr", into = "ModulationRepr")]
pub struct Modulation {
    kind: ModulationKind,
    coefficients: Vec<f64>,
    t_f: f64,
    samples: Option<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct ModulationRepr {
    kind: ModulationKind,
    #[serde(default)]
    coefficients: Vec<f64>,
    t_f: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    samples: Option<Vec<f64>>,
}

impl TryFrom<ModulationRepr> for Modulation {
    type Error = ReadoutError;

    fn try_from(r: ModulationRepr) -> Result<Self> {
        let m = Modulation {
            kind: r.kind,
            coefficients: r.coefficients,
            t_f: r.t_f,
            samples: r.samples,
        };
        m.validate()?;
        Ok(m)
    }
}

impl From<Modulation> for ModulationRepr {
    fn from(m: Modulation) -> Self {
        ModulationRepr {
            kind: m.kind,
            coefficients: m.coefficients,
            t_f: m.t_f,
            samples: m.samples,
        }
    }
}

impl Modulation {
    /// Σ b_ℓ (t/t_f)^ℓ.
    pub fn polynomial(coefficients: Vec<f64>, t_f: f64) -> Result<Self> {
        Self::closed(ModulationKind::Polynomial, coefficients, t_f)
    }

    /// Σ_{m≥1} A_m sin(mπt/t_f).
    pub fn trigonometric(sine_coefficients: Vec<f64>, t_f: f64) -> Result<Self> {
        Self::closed(ModulationKind::Trigonometric, sine_coefficients, t_f)
    }

    /// Paired series with cosines `c_0..c_{K-1}` and sines `d_1..d_K`.
    pub fn fourier(cosines: &[f64], sines: &[f64], t_f: f64) -> Result<Self> {
        if cosines.len() != sines.len() {
            return Err(ReadoutError::Input(format!(
                "Fourier series needs paired coefficients, got {} cosines and {} sines",
                cosines.len(),
                sines.len()
            )));
        }
        let mut c = cosines.to_vec();
        c.extend_from_slice(sines);
        Self::closed(ModulationKind::FourierSeries, c, t_f)
    }

    /// Flat layout `[c_0..c_{K-1}, d_1..d_K]`, as produced by
    /// [`Modulation::coefficients`].
    pub fn fourier_flat(coefficients: Vec<f64>, t_f: f64) -> Result<Self> {
        Self::closed(ModulationKind::FourierSeries, coefficients, t_f)
    }

    pub fn constant(value: f64, t_f: f64) -> Result<Self> {
        Self::closed(ModulationKind::ConstantBaseline, vec![value], t_f)
    }

    /// Starts at `u_max` and toggles to 0 / `u_max` at each switch time.
    pub fn bang_bang(u_max: f64, switch_times: &[f64], t_f: f64) -> Result<Self> {
        let mut c = vec![u_max];
        c.extend_from_slice(switch_times);
        Self::closed(ModulationKind::BangBang, c, t_f)
    }

    /// Uniform samples over `[0, t_f]`, first sample at 0 and last at `t_f`.
    pub fn sampled(values: Vec<f64>, t_f: f64) -> Result<Self> {
        let m = Modulation {
            kind: ModulationKind::Sampled,
            coefficients: Vec::new(),
            t_f,
            samples: Some(values),
        };
        m.validate()?;
        Ok(m)
    }

    fn closed(kind: ModulationKind, coefficients: Vec<f64>, t_f: f64) -> Result<Self> {
        let m = Modulation {
            kind,
            coefficients,
            t_f,
            samples: None,
        };
        m.validate()?;
        Ok(m)
    }

    fn validate(&self) -> Result<()> {
        if !(self.t_f > 0.0 && self.t_f.is_finite()) {
            return Err(ReadoutError::Input("modulation t_f must be positive".into()));
        }
        if self.coefficients.iter().any(|c| !c.is_finite()) {
            return Err(ReadoutError::Input("non-finite modulation coefficient".into()));
        }
        match self.kind {
            ModulationKind::Polynomial | ModulationKind::Trigonometric => {
                if self.coefficients.is_empty() {
                    return Err(ReadoutError::Input("empty coefficient list".into()));
                }
            }
            ModulationKind::FourierSeries => {
                if self.coefficients.is_empty() || self.coefficients.len() % 2 != 0 {
                    return Err(ReadoutError::Input(
                        "Fourier series needs an even, non-zero number of coefficients".into(),
                    ));
                }
            }
            ModulationKind::ConstantBaseline => {
                if self.coefficients.len() != 1 {
                    return Err(ReadoutError::Input(
                        "constant baseline takes exactly one coefficient".into(),
                    ));
                }
            }
            ModulationKind::BangBang => {
                if self.coefficients.is_empty() {
                    return Err(ReadoutError::Input("bang-bang needs u_max".into()));
                }
                let switches = &self.coefficients[1..];
                if switches.windows(2).any(|w| w[1] < w[0]) {
                    return Err(ReadoutError::Input("switch times must be increasing".into()));
                }
            }
            ModulationKind::Sampled => match &self.samples {
                Some(v) if v.len() >= 2 => {
                    if v.iter().any(|x| !x.is_finite()) {
                        return Err(ReadoutError::Input("non-finite sample".into()));
                    }
                }
                _ => {
                    return Err(ReadoutError::Resolution(
                        "sampled modulation needs at least two samples".into(),
                    ))
                }
            },
        }
        if self.kind != ModulationKind::Sampled && self.samples.is_some() {
            return Err(ReadoutError::Input(format!(
                "{:?} modulation does not take samples",
                self.kind
            )));
        }
        Ok(())
    }

    pub fn kind(&self) -> ModulationKind {
        self.kind
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn t_f(&self) -> f64 {
        self.t_f
    }

    pub fn samples(&self) -> Option<&[f64]> {
        self.samples.as_deref()
    }

    /// Grid of the samples of a `Sampled` waveform.
    pub fn sample_times(&self) -> Option<Vec<f64>> {
        self.samples
            .as_ref()
            .map(|v| crate::params::linspace(0.0, self.t_f, v.len()))
    }

    /// Whether derivatives are analytic (everything except `Sampled`).
    pub fn is_closed_form(&self) -> bool {
        self.kind != ModulationKind::Sampled
    }

    /// Value and derivatives at `t`, with no range check. Closed forms are
    /// extrapolated, sampled data is clamped to its end samples.
    pub fn eval(&self, t: f64) -> Derivatives {
        match self.kind {
            ModulationKind::Polynomial => self.eval_polynomial(t),
            ModulationKind::Trigonometric => self.eval_sines(&self.coefficients, 1, t),
            ModulationKind::FourierSeries => {
                let k = self.coefficients.len() / 2;
                let cos = self.eval_cosines(&self.coefficients[..k], t);
                let sin = self.eval_sines(&self.coefficients[k..], 1, t);
                Derivatives {
                    value: cos.value + sin.value,
                    first: cos.first + sin.first,
                    second: cos.second + sin.second,
                }
            }
            ModulationKind::ConstantBaseline => Derivatives {
                value: self.coefficients[0],
                ..Default::default()
            },
            ModulationKind::BangBang => {
                let passed = self.coefficients[1..].iter().filter(|&&s| s <= t).count();
                let value = if passed % 2 == 0 {
                    self.coefficients[0]
                } else {
                    0.0
                };
                Derivatives {
                    value,
                    ..Default::default()
                }
            }
            ModulationKind::Sampled => self.eval_sampled(t),
        }
    }

    /// [`Modulation::eval`] with a domain check on `[0, t_f]`.
    pub fn checked_eval(&self, t: f64) -> Result<Derivatives> {
        self.check_time(t)?;
        Ok(self.eval(t))
    }

    pub fn value(&self, t: f64) -> f64 {
        self.eval(t).value
    }

    pub fn check_time(&self, t: f64) -> Result<()> {
        let slack = 1e-12 * self.t_f;
        if !(t >= -slack && t <= self.t_f + slack) {
            return Err(ReadoutError::Domain(format!(
                "t = {t:e} outside [0, {:e}]",
                self.t_f
            )));
        }
        Ok(())
    }

    fn eval_polynomial(&self, t: f64) -> Derivatives {
        let u = t / self.t_f;
        let b = &self.coefficients;
        let (mut p, mut dp, mut ddp) = (0.0, 0.0, 0.0);
        for &c in b.iter().rev() {
            ddp = ddp * u + 2.0 * dp;
            dp = dp * u + p;
            p = p * u + c;
        }
        Derivatives {
            value: p,
            first: dp / self.t_f,
            second: ddp / (self.t_f * self.t_f),
        }
    }

    fn eval_sines(&self, coeffs: &[f64], first_harmonic: usize, t: f64) -> Derivatives {
        let mut out = Derivatives::default();
        for (i, &a) in coeffs.iter().enumerate() {
            let w = (first_harmonic + i) as f64 * PI / self.t_f;
            let (s, c) = (w * t).sin_cos();
            out.value += a * s;
            out.first += a * w * c;
            out.second -= a * w * w * s;
        }
        out
    }

    fn eval_cosines(&self, coeffs: &[f64], t: f64) -> Derivatives {
        let mut out = Derivatives::default();
        for (m, &c) in coeffs.iter().enumerate() {
            let w = m as f64 * PI / self.t_f;
            let (s, co) = (w * t).sin_cos();
            out.value += c * co;
            out.first -= c * w * s;
            out.second -= c * w * w * co;
        }
        out
    }

    fn eval_sampled(&self, t: f64) -> Derivatives {
        let v = self.samples.as_deref().unwrap_or(&[]);
        let n = v.len();
        let h = self.t_f / (n - 1) as f64;
        let x = (t / h).clamp(0.0, (n - 1) as f64);
        let i = (x.floor() as usize).min(n - 2);
        let frac = x - i as f64;
        let lerp = |a: f64, b: f64| a + (b - a) * frac;
        Derivatives {
            value: lerp(v[i], v[i + 1]),
            first: lerp(fd_first(v, i, h), fd_first(v, i + 1, h)),
            second: lerp(fd_second(v, i, h), fd_second(v, i + 1, h)),
        }
    }

    /// Largest |g| seen on a 257-point grid; used to scale tolerances.
    pub fn amplitude_scale(&self) -> f64 {
        let n = 257;
        (0..n)
            .map(|i| self.value(self.t_f * i as f64 / (n - 1) as f64).abs())
            .fold(0.0, f64::max)
    }

    /// ∫_0^{t_f} g dt. Adaptive Simpson for closed forms, trapezoid on the
    /// samples (exact for the interpolant) otherwise.
    pub fn integral(&self, abs_tol: f64) -> f64 {
        match self.kind {
            ModulationKind::Sampled => {
                let times = self.sample_times().unwrap_or_default();
                trapezoid(&times, self.samples.as_deref().unwrap_or(&[]))
            }
            ModulationKind::BangBang => {
                let mut total = 0.0;
                let mut on = true;
                let mut start = 0.0;
                for &s in &self.coefficients[1..] {
                    let s = s.clamp(0.0, self.t_f);
                    if on {
                        total += self.coefficients[0] * (s - start);
                    }
                    on = !on;
                    start = s;
                }
                if on {
                    total += self.coefficients[0] * (self.t_f - start);
                }
                total
            }
            _ => adaptive_simpson(|t| self.value(t), 0.0, self.t_f, abs_tol),
        }
    }

    /// Samples the waveform on `n` uniform points.
    pub fn to_sampled(&self, n: usize) -> Result<Modulation> {
        if n < 2 {
            return Err(ReadoutError::Resolution("need at least two samples".into()));
        }
        let values = crate::params::linspace(0.0, self.t_f, n)
            .into_iter()
            .map(|t| self.value(t))
            .collect();
        Modulation::sampled(values, self.t_f)
    }

    /// Returns a waveform of the same kind with every coefficient (or
    /// sample) multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Modulation {
        let mut m = self.clone();
        match m.kind {
            ModulationKind::BangBang => m.coefficients[0] *= factor,
            ModulationKind::Sampled => {
                if let Some(v) = m.samples.as_mut() {
                    v.iter_mut().for_each(|x| *x *= factor);
                }
            }
            _ => m.coefficients.iter_mut().for_each(|c| *c *= factor),
        }
        m
    }

    /// Two-column CSV `t_seconds,value_rad_per_s`. Sampled waveforms use
    /// their own grid; closed forms are sampled on `n` points.
    pub fn write_csv<W: Write>(&self, mut w: W, n: usize) -> io::Result<()> {
        writeln!(w, "t_seconds,value_rad_per_s")?;
        let (times, values): (Vec<f64>, Vec<f64>) = match (&self.samples, self.sample_times()) {
            (Some(v), Some(t)) => (t, v.clone()),
            _ => {
                let t = crate::params::linspace(0.0, self.t_f, n.max(2));
                let v = t.iter().map(|&x| self.value(x)).collect();
                (t, v)
            }
        };
        for (t, v) in times.iter().zip(values.iter()) {
            writeln!(w, "{t:e},{v:e}")?;
        }
        Ok(())
    }
}

fn fd_first(v: &[f64], i: usize, h: f64) -> f64 {
    let n = v.len();
    if n < 3 {
        return (v[1] - v[0]) / h;
    }
    if i == 0 {
        (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h)
    } else if i == n - 1 {
        (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * h)
    } else {
        (v[i + 1] - v[i - 1]) / (2.0 * h)
    }
}

fn fd_second(v: &[f64], i: usize, h: f64) -> f64 {
    let n = v.len();
    let h2 = h * h;
    match n {
        0..=2 => 0.0,
        3 => (v[2] - 2.0 * v[1] + v[0]) / h2,
        _ if i == 0 => (2.0 * v[0] - 5.0 * v[1] + 4.0 * v[2] - v[3]) / h2,
        _ if i == n - 1 => (2.0 * v[n - 1] - 5.0 * v[n - 2] + 4.0 * v[n - 3] - v[n - 4]) / h2,
        _ => (v[i + 1] - 2.0 * v[i] + v[i - 1]) / h2,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn polynomial_derivatives() {
        // g = 1 + 2u + 3u², t_f = 2
        let m = Modulation::polynomial(vec![1.0, 2.0, 3.0], 2.0).unwrap();
        let d = m.eval(1.0);
        assert_relative_eq!(d.value, 1.0 + 1.0 + 0.75);
        assert_relative_eq!(d.first, (2.0 + 6.0 * 0.5) / 2.0);
        assert_relative_eq!(d.second, 6.0 / 4.0);
    }

    #[test]
    fn fourier_layout() {
        let m = Modulation::fourier(&[2.0, 0.0], &[0.0, 1.0], 1.0).unwrap();
        assert_eq!(m.coefficients(), &[2.0, 0.0, 0.0, 1.0]);
        let t = 0.3;
        let d = m.eval(t);
        let w = 2.0 * PI;
        assert_relative_eq!(d.value, 2.0 + (w * t).sin(), epsilon = 1e-14);
        assert_relative_eq!(d.first, w * (w * t).cos(), epsilon = 1e-12);
        assert_relative_eq!(d.second, -w * w * (w * t).sin(), epsilon = 1e-10);
    }

    #[test]
    fn sampled_finite_differences() {
        // quadratic: centred and one-sided second-order stencils are exact
        let n = 11;
        let t_f = 1.0;
        let vals: Vec<f64> = crate::params::linspace(0.0, t_f, n)
            .iter()
            .map(|t| 3.0 * t * t - t)
            .collect();
        let m = Modulation::sampled(vals, t_f).unwrap();
        for &t in &[0.0, 0.1, 0.5, 1.0] {
            let d = m.eval(t);
            assert_relative_eq!(d.first, 6.0 * t - 1.0, epsilon = 1e-10);
            assert_relative_eq!(d.second, 6.0, epsilon = 1e-8);
        }
        assert_relative_eq!(m.value(0.05), 3.0 * 0.0025 - 0.05, epsilon = 0.01);
    }

    #[test]
    fn bang_bang_toggles() {
        let m = Modulation::bang_bang(5.0, &[1.0, 2.0], 3.0).unwrap();
        assert_eq!(m.value(0.5), 5.0);
        assert_eq!(m.value(1.5), 0.0);
        assert_eq!(m.value(2.5), 5.0);
        assert_relative_eq!(m.integral(1e-12), 10.0);
        assert!(Modulation::bang_bang(1.0, &[2.0, 1.0], 3.0).is_err());
    }

    #[test]
    fn validation() {
        assert!(Modulation::fourier_flat(vec![1.0, 2.0, 3.0], 1.0).is_err());
        assert!(Modulation::constant(1.0, 0.0).is_err());
        assert!(Modulation::sampled(vec![1.0], 1.0).is_err());
        assert!(Modulation::polynomial(vec![f64::NAN], 1.0).is_err());
        let m = Modulation::constant(1.0, 1.0).unwrap();
        assert!(m.checked_eval(1.5).is_err());
        assert!(m.checked_eval(-1e-3).is_err());
        assert!(m.checked_eval(1.0).is_ok());
    }

    #[test]
    fn json_shape() {
        let m = Modulation::trigonometric(vec![1.0, 0.5], 2e-9).unwrap();
        let s = serde_json::to_string(&m).unwrap();
        assert_eq!(s, r#"{"kind":"Trigonometric","coefficients":[1.0,0.5],"t_f":2e-9}"#);
        let back: Modulation = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
        let bad = r#"{"kind":"FourierSeries","coefficients":[1.0],"t_f":1.0}"#;
        assert!(serde_json::from_str::<Modulation>(bad).is_err());
        let sampled = r#"{"kind":"Sampled","t_f":1.0,"samples":[0.0,1.0,0.0]}"#;
        let m: Modulation = serde_json::from_str(sampled).unwrap();
        assert_eq!(m.value(0.5), 1.0);
    }

    #[test]
    fn csv_export() {
        let m = Modulation::sampled(vec![0.0, 2.0], 1e-9).unwrap();
        let mut buf = Vec::new();
        m.write_csv(&mut buf, 0).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "t_seconds,value_rad_per_s\n0e0,0e0\n1e-9,2e0\n");
    }
}
