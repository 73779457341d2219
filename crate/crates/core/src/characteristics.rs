//! Characteristic curves of the tangential momentum constraint.
//!
//! The curves solve `dr/dt = η`, `dz/dt = ζ` and, with viscosity,
//! `dΨ/dt = ν r (∂ζ/∂r − ∂η/∂z)`. Integration is classical RK4 on the
//! arc-length normalised field, so the step is a geometric distance.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::TraceError;
use crate::model::{Domain, TangentialModel};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveSample {
    pub t: f64,
    pub r: f64,
    pub z: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Termination {
    /// Crossed the MOH line at radius `r`.
    HitMoh { r: f64 },
    /// Crossed `r = R` at height `z`.
    HitOuterBoundary { z: f64 },
    /// Returned to the start.
    Closed,
    /// Step budget exhausted; `stagnated` when the field vanished.
    MaxSteps { stagnated: bool },
    /// Left through the top or (never, under the single-maximum
    /// assumptions) through an axis.
    LeftDomain,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CharCurve {
    pub samples: Vec<CurveSample>,
    pub gamma_level: f64,
    /// How the curve ends (last sample).
    pub termination: Termination,
    /// How the curve begins when traced in both directions.
    pub head: Option<Termination>,
    /// `∫ dΨ/dt dt` from the first to the last sample; zero when inviscid.
    pub psi_change: f64,
}

impl CharCurve {
    /// `max |Γ(sample) − level| / |level|`.
    pub fn level_drift<M: TangentialModel + ?Sized>(&self, model: &M) -> f64 {
        let scale = self.gamma_level.abs();
        self.samples
            .iter()
            .map(|s| (model.circulation(s.r, s.z) - self.gamma_level).abs())
            .fold(0.0, f64::max)
            / scale
    }

    pub fn min_z(&self) -> f64 {
        self.samples.iter().map(|s| s.z).fold(f64::INFINITY, f64::min)
    }

    pub fn moh_hit(&self) -> Option<f64> {
        match self.termination {
            Termination::HitMoh { r } => Some(r),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceOptions {
    /// Arc length per RK4 step.
    pub step: f64,
    pub max_steps: usize,
    /// Stop on crossing `z = moh` when set.
    pub moh: Option<f64>,
    pub radius: f64,
    pub top: f64,
    pub viscosity: f64,
}

impl TraceOptions {
    /// Step `10⁻³ min(R, H)`, MOH stop at the domain's `h`.
    pub fn for_domain(domain: &Domain) -> Self {
        let step = 1e-3 * domain.radius.min(domain.top);
        Self {
            step,
            max_steps: (40.0 * (domain.radius + domain.top) / step) as usize,
            moh: Some(domain.moh),
            radius: domain.radius,
            top: domain.top,
            viscosity: domain.viscosity,
        }
    }

    pub fn without_moh(mut self) -> Self {
        self.moh = None;
        self
    }
}

// (r, z, t, accumulated Ψ change)
type State = [f64; 4];

struct Field<'a, M: ?Sized> {
    model: &'a M,
    direction: f64,
    viscosity: f64,
    floor: f64,
}

impl<M: TangentialModel + ?Sized> Field<'_, M> {
    #[inline]
    fn eval(&self, s: &State) -> Option<State> {
        let (eta, zeta) = self.model.vorticity(s[0], s[1]);
        let speed = eta.hypot(zeta);
        if !(speed > self.floor) {
            return None;
        }
        let k = self.direction / speed;
        let source = if self.viscosity > 0.0 {
            self.viscosity
                * s[0]
                * (self.model.zeta_dr(s[0], s[1]) - self.model.eta_dz(s[0], s[1]))
        } else {
            0.0
        };
        Some([eta * k, zeta * k, k, source * k])
    }

    fn rk4(&self, s: &State, h: f64) -> Option<State> {
        let add = |a: &State, b: &State, c: f64| -> State {
            [a[0] + c * b[0], a[1] + c * b[1], a[2] + c * b[2], a[3] + c * b[3]]
        };
        let k1 = self.eval(s)?;
        let k2 = self.eval(&add(s, &k1, 0.5 * h))?;
        let k3 = self.eval(&add(s, &k2, 0.5 * h))?;
        let k4 = self.eval(&add(s, &k3, h))?;
        let mut out = *s;
        for c in 0..4 {
            out[c] += h / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
        }
        Some(out)
    }
}

impl<M: TangentialModel + ?Sized> Field<'_, M> {
    /// State where the step from `s` (toward `next`) meets `coord[axis] =
    /// target`. Newton iteration on the fraction of a full RK4 step keeps the
    /// endpoint on the integrated curve instead of on the chord.
    fn land(&self, s: &State, next: &State, axis: usize, target: f64, h: f64) -> State {
        let mut f = (target - s[axis]) / (next[axis] - s[axis]);
        let mut out = lerp(s, next, f);
        for _ in 0..4 {
            let (Some(p), Some(d)) = (self.rk4(s, f * h), self.eval(&lerp(s, next, f))) else {
                break;
            };
            out = p;
            let slope = h * d[axis];
            if slope == 0.0 {
                break;
            }
            let df = (target - p[axis]) / slope;
            f += df;
            if df.abs() < 1e-15 {
                break;
            }
        }
        out[axis] = target;
        out
    }
}

fn lerp(a: &State, b: &State, f: f64) -> State {
    [
        a[0] + f * (b[0] - a[0]),
        a[1] + f * (b[1] - a[1]),
        a[2] + f * (b[2] - a[2]),
        a[3] + f * (b[3] - a[3]),
    ]
}

/// Traces one characteristic from `start` in the direction of `+(η, ζ)`
/// (`direction > 0`) or against it.
pub fn trace_rk<M: TangentialModel + ?Sized>(
    model: &M,
    start: (f64, f64),
    direction: f64,
    opts: &TraceOptions,
) -> Result<CharCurve, TraceError> {
    let (r0, z0) = start;
    if !(opts.step > 0.0 && opts.step.is_finite()) {
        return Err(TraceError::Step(opts.step));
    }
    if !(r0 > 0.0 && z0 > 0.0 && r0 < opts.radius && z0 < opts.top) {
        return Err(TraceError::StartOutside { r: r0, z: z0 });
    }
    if let Some(r_o) = model.circulation_peak_radius() {
        let z_c = model.vertical_peak();
        if (r0 - r_o).hypot(z0 - z_c) < 1e-6 {
            return Err(TraceError::AtCriticalPoint);
        }
    }

    let field = Field {
        model,
        direction: direction.signum(),
        viscosity: opts.viscosity,
        floor: 1e-14 * model.vorticity_scale(),
    };
    let gamma_level = model.circulation(r0, z0);
    let mut samples = Vec::with_capacity(256);
    samples.push(CurveSample { t: 0.0, r: r0, z: z0 });

    let start_dir = match field.eval(&[r0, z0, 0.0, 0.0]) {
        Some(d) => d,
        None => {
            return Ok(CharCurve {
                samples,
                gamma_level,
                termination: Termination::MaxSteps { stagnated: true },
                head: None,
                psi_change: 0.0,
            })
        }
    };

    let h = opts.step;
    let mut state: State = [r0, z0, 0.0, 0.0];
    let mut termination = Termination::MaxSteps { stagnated: false };
    let mut steps = 0usize;

    loop {
        if steps >= opts.max_steps {
            break;
        }
        let next = match field.rk4(&state, h) {
            Some(n) => n,
            None => {
                termination = Termination::MaxSteps { stagnated: true };
                break;
            }
        };
        steps += 1;
        let mut push = |s: &State| samples.push(CurveSample { t: s[2], r: s[0], z: s[1] });

        if let Some(moh) = opts.moh {
            let (a, b) = (state[1] - moh, next[1] - moh);
            if (a < 0.0 && b >= 0.0) || (a > 0.0 && b <= 0.0) {
                let hit = field.land(&state, &next, 1, moh, h);
                push(&hit);
                state = hit;
                termination = Termination::HitMoh { r: hit[0] };
                break;
            }
        }
        if next[0] >= opts.radius {
            let hit = field.land(&state, &next, 0, opts.radius, h);
            push(&hit);
            state = hit;
            termination = Termination::HitOuterBoundary { z: hit[1] };
            break;
        }
        if next[1] >= opts.top {
            let hit = field.land(&state, &next, 1, opts.top, h);
            push(&hit);
            state = hit;
            termination = Termination::LeftDomain;
            break;
        }
        if !(next[0] > 0.0 && next[1] > 0.0) {
            push(&next);
            state = next;
            termination = Termination::LeftDomain;
            break;
        }
        push(&next);
        state = next;

        if steps >= 10 && (state[0] - r0).hypot(state[1] - z0) < 2.0 * h {
            if let Some(d) = field.eval(&state) {
                if d[0] * start_dir[0] + d[1] * start_dir[1] > 0.0 {
                    termination = Termination::Closed;
                    break;
                }
            }
        }
    }

    Ok(CharCurve { samples, gamma_level, termination, head: None, psi_change: state[3] })
}

/// Traces the whole characteristic through `start`: forward, and unless the
/// curve closed, backward as well. Samples run from the backward end to the
/// forward end.
pub fn trace_full<M: TangentialModel + ?Sized>(
    model: &M,
    start: (f64, f64),
    opts: &TraceOptions,
) -> Result<CharCurve, TraceError> {
    let forward = trace_rk(model, start, 1.0, opts)?;
    if forward.termination == Termination::Closed {
        return Ok(forward);
    }
    let backward = trace_rk(model, start, -1.0, opts)?;
    let mut samples: Vec<CurveSample> = backward.samples.iter().rev().copied().collect();
    samples.extend_from_slice(&forward.samples[1..]);
    Ok(CharCurve {
        samples,
        gamma_level: forward.gamma_level,
        termination: forward.termination,
        head: Some(backward.termination),
        psi_change: forward.psi_change - backward.psi_change,
    })
}
