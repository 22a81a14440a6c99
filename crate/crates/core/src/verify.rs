//! Self-checks of the closed forms against the series oracle, plus the
//! normalization and single-photon sandwich suites.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::oracle::{class_mass, SeriesOracle};
use crate::pipeline::evaluate;
use crate::pnd::{bernoulli_transform, poisson_prob, thermal_prob, SourceSetting};
use crate::protocol::{ModelOptions, Protocol, ProtocolConfig, SystemParams};
use crate::relay::{
    apply_misalignment, arm_coefficients, click_probs_signal_signal, click_probs_vacuum_signal,
    gain_expanded, gain_from_clicks, intrinsic_error_gain, symmetric_clicks, z_basis_gain,
    ChannelParams, ClickProbabilities, ClosedFormVariant, EventClass, MisalignmentReading,
    RelayParams, Side,
};

pub const ORACLE_TOL: f64 = 1e-9;
pub const TWO_PATH_TOL: f64 = 1e-12;
pub const NORM_TOL: f64 = 1e-12;
pub const IMAG_TOL: f64 = 1e-12;
pub const SANDWICH_DISTANCES: [f64; 5] = [0.0, 25.0, 50.0, 75.0, 100.0];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerifyOptions {
    pub n_max: usize,
    pub sets: usize,
    pub seed: u64,
    pub nodes: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            n_max: crate::pnd::DEFAULT_N_MAX,
            sets: 120,
            seed: 20_240_517,
            nodes: crate::oracle::DEFAULT_NODES,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyReport {
    pub name: String,
    pub passed: bool,
    pub cases: usize,
    pub worst_residual: f64,
    pub tolerance: f64,
    /// Case with the worst residual.
    pub worst_case: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub families: Vec<FamilyReport>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.families.iter().all(|f| f.passed)
    }

    pub fn family(&self, name: &str) -> Option<&FamilyReport> {
        self.families.iter().find(|f| f.name == name)
    }
}

/// Running worst residual of one family.
#[derive(Debug, Clone)]
struct Worst {
    value: f64,
    case: String,
    cases: usize,
}

impl Worst {
    fn new() -> Self {
        Self {
            value: 0.0,
            case: String::new(),
            cases: 0,
        }
    }

    fn push(&mut self, value: f64, case: impl FnOnce() -> String) {
        self.cases += 1;
        // NaN residuals must fail.
        if !(value <= self.value) {
            self.value = value;
            self.case = case();
        }
    }

    fn merge(mut self, other: Worst) -> Worst {
        let cases = self.cases + other.cases;
        if !(other.value <= self.value) {
            self = other;
        }
        self.cases = cases;
        self
    }

    fn report(self, name: &str, tol: f64) -> FamilyReport {
        FamilyReport {
            name: name.into(),
            passed: self.value <= tol && self.cases > 0,
            cases: self.cases,
            worst_residual: self.value,
            tolerance: tol,
            worst_case: self.case,
        }
    }
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// One randomized parameter set in the reference regime.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamSet {
    pub src: SourceSetting,
    pub relay: RelayParams,
    pub channel: ChannelParams,
    pub class: EventClass,
}

pub fn random_sets(n: usize, seed: u64) -> Vec<ParamSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let classes = [
        EventClass::Heralded,
        EventClass::Triggered,
        EventClass::NonTriggered,
    ];
    (0..n)
        .map(|i| {
            let mu = 10f64.powf(rng.gen_range(-4.0..-0.05));
            let src = SourceSetting::new(
                mu,
                rng.gen_range(0.3..0.5),
                10f64.powf(rng.gen_range(-6.0..-4.0)),
                rng.gen_range(0.05..0.5),
            )
            .expect("sampled source is valid");
            let relay = RelayParams::new(
                rng.gen_range(0.1..0.6),
                10f64.powf(rng.gen_range(-7.0..-5.0)),
                rng.gen_range(0.0..0.03),
            )
            .expect("sampled relay is valid");
            ParamSet {
                src,
                relay,
                channel: ChannelParams::symmetric(0.2, rng.gen_range(0.0..150.0)),
                class: classes[i % 3],
            }
        })
        .collect()
}

fn click_residual(a: &ClickProbabilities, b: &ClickProbabilities) -> f64 {
    [
        rel_diff(a.d_r0, b.d_r0),
        rel_diff(a.d_r1, b.d_r1),
        rel_diff(a.d_s0, b.d_s0),
        rel_diff(a.d_s1, b.d_s1),
    ]
    .into_iter()
    .fold(0.0, f64::max)
}

struct OracleCase {
    equivalence: Worst,
    two_path: Worst,
    imag: Worst,
}

fn oracle_case(oracle: &SeriesOracle, p: &ParamSet) -> Result<OracleCase> {
    let t = p.channel.transmittance(Side::A);
    let label = || format!("{p:?}");
    let mut eq = Worst::new();
    let mut tp = Worst::new();
    let mut im = Worst::new();

    let half = oracle.lossy_weights(&p.src, p.class, t / 2.0);
    let full = oracle.lossy_weights(&p.src, p.class, t);
    let vac = oracle.vacuum_weights();

    let closed = click_probs_signal_signal(
        &p.src,
        &p.src,
        &p.channel,
        &p.relay,
        p.class,
        ClosedFormVariant::PhaseAveraged,
    )?;
    let series = oracle.clicks(&half, &half, &p.relay, 0.0);
    eq.push(click_residual(&closed, &series.clicks), label);
    eq.push(
        rel_diff(gain_from_clicks(&closed), gain_from_clicks(&series.clicks)),
        label,
    );
    eq.push(
        rel_diff(
            intrinsic_error_gain(&closed),
            intrinsic_error_gain(&series.clicks),
        ),
        label,
    );
    im.push(series.max_imag, label);
    let series_pi = oracle.clicks(&half, &half, &p.relay, std::f64::consts::PI);
    im.push(series_pi.max_imag, label);

    let closed_v = click_probs_vacuum_signal(&p.src, Side::A, &p.channel, &p.relay, p.class)?;
    let series_v = oracle.clicks(&vac, &half, &p.relay, 0.0);
    eq.push(click_residual(&closed_v, &series_v.clicks), label);
    im.push(series_v.max_imag, label);

    let z = z_basis_gain(
        &p.src,
        &p.src,
        &p.channel,
        &p.relay,
        p.class,
        ClosedFormVariant::PhaseAveraged,
    )?;
    let (q_c, q_e) = oracle.z_basis(&half, &full, &p.relay);
    eq.push(rel_diff(z.q_c, q_c), label);
    eq.push(rel_diff(z.q_e, q_e), label);

    for variant in [
        ClosedFormVariant::PhaseAveraged,
        ClosedFormVariant::AsPrinted,
    ] {
        let c = arm_coefficients(&p.src, p.class, t, &p.relay);
        let clicks = symmetric_clicks(&c, p.relay.p_dark, variant);
        let expanded = gain_expanded(
            2.0 * c.a0 * p.relay.p_dark,
            c.prefactor,
            c.c1,
            variant.c2(&c),
        );
        tp.push(rel_diff(gain_from_clicks(&clicks), expanded), label);
    }
    Ok(OracleCase {
        equivalence: eq,
        two_path: tp,
        imag: im,
    })
}

/// Closed forms vs series oracle, expanded vs composed gain, and phase-averaged imaginary parts.
pub fn oracle_suites(opts: &VerifyOptions) -> Result<Vec<FamilyReport>> {
    let oracle = SeriesOracle {
        n_max: opts.n_max,
        nodes: opts.nodes,
    };
    let sets = random_sets(opts.sets, opts.seed);
    let cases: Vec<OracleCase> = sets
        .par_iter()
        .map(|p| oracle_case(&oracle, p))
        .collect::<Result<_>>()?;
    let (mut eq, mut tp, mut im) = (Worst::new(), Worst::new(), Worst::new());
    for c in cases {
        eq = eq.merge(c.equivalence);
        tp = tp.merge(c.two_path);
        im = im.merge(c.imag);
    }
    Ok(vec![
        eq.report("oracle_equivalence", ORACLE_TOL),
        tp.report("two_path_identity", TWO_PATH_TOL),
        im.report("imaginary_parts", IMAG_TOL),
    ])
}

/// Truncated class weights against their closed-form totals.
pub fn normalization_suite(hw_sources: &[SourceSetting], n_max: usize) -> FamilyReport {
    let oracle = SeriesOracle::new(n_max);
    let mut w = Worst::new();
    for src in hw_sources {
        let heralded: f64 = (0..=n_max).map(|n| src.heralded_prob(n)).sum();
        w.push((heralded - 1.0).abs(), || format!("heralded {src:?}"));
        let both: f64 = oracle
            .source_weights(src, EventClass::Triggered)
            .iter()
            .sum::<f64>()
            + oracle
                .source_weights(src, EventClass::NonTriggered)
                .iter()
                .sum::<f64>();
        w.push((both - 1.0).abs(), || {
            format!("triggered+non-triggered {src:?}")
        });
        for class in [EventClass::Triggered, EventClass::NonTriggered] {
            w.push(oracle.tail_bound(src, class), || {
                format!("{} {src:?}", class.label())
            });
        }
        let thermal: f64 = (0..=n_max).map(|n| thermal_prob(src.mu, n)).sum();
        w.push((thermal - 1.0).abs(), || format!("thermal {}", src.mu));
        let poisson: f64 = (0..=n_max).map(|n| poisson_prob(src.mu, n)).sum();
        w.push((poisson - 1.0).abs(), || format!("poisson {}", src.mu));
        let lossy: f64 =
            bernoulli_transform(&oracle.source_weights(src, EventClass::Heralded), 0.3)
                .iter()
                .sum();
        w.push(
            (lossy - class_mass(src, EventClass::Heralded)).abs(),
            || format!("heralded after loss {src:?}"),
        );
    }
    w.report("normalization", NORM_TOL)
}

/// Model-true single-photon yield and X-basis error for one distance.
pub fn single_photon_truth(
    channel: &ChannelParams,
    relay: &RelayParams,
    reading: MisalignmentReading,
) -> (f64, f64) {
    let oracle = SeriesOracle::new(4);
    let t = channel.transmittance(Side::A);
    let one = bernoulli_transform(&oracle.single_photon_weights(), t / 2.0);
    let c = oracle.clicks(&one, &one, relay, 0.0).clicks;
    let y11 = gain_from_clicks(&c);
    let e11 = if y11 > 0.0 {
        apply_misalignment(intrinsic_error_gain(&c) / y11, relay, reading).clamp(0.0, 1.0)
    } else {
        0.5
    };
    (y11, e11)
}

/// Every estimator's bounds must bracket the model-true single-photon quantities.
pub fn sandwich_suite(
    configs: &[ProtocolConfig],
    system: &SystemParams,
    opts: &ModelOptions,
) -> Result<(FamilyReport, FamilyReport)> {
    let mut y = Worst::new();
    let mut e = Worst::new();
    // The infinite-decoy benchmark is not an estimate; it has nothing to sandwich.
    for cfg in configs.iter().filter(|c| c.protocol != Protocol::Infinite) {
        for &d in &SANDWICH_DISTANCES {
            let ev = evaluate(cfg, d, system, opts, None)?;
            let channel = ChannelParams::symmetric(system.loss_coeff, d);
            let (y_true, e_true) = single_photon_truth(&channel, &system.relay, opts.misalignment);
            let label = || format!("{} at {d} km", cfg.protocol.label());
            // Positive residual = violation, relative to the true value.
            y.push(((ev.bounds.y11_lower - y_true) / y_true).max(0.0), label);
            e.push(((e_true - ev.bounds.e11_upper) / e_true).max(0.0), label);
        }
    }
    Ok((y.report("sandwich_y11", 0.0), e.report("sandwich_e11", 0.0)))
}

/// Runs every suite with the given system and source hardware.
pub fn run_all(
    configs: &[ProtocolConfig],
    system: &SystemParams,
    model: &ModelOptions,
    opts: &VerifyOptions,
) -> Result<VerifyReport> {
    let mut families = oracle_suites(opts)?;
    let mut sources = Vec::new();
    for cfg in configs {
        sources.push(cfg.source(crate::protocol::Role::Signal)?);
        if cfg.decoy.is_some() {
            sources.push(cfg.source(crate::protocol::Role::Decoy)?);
        }
    }
    families.push(normalization_suite(&sources, opts.n_max));
    let (y, e) = sandwich_suite(configs, system, model)?;
    families.push(y);
    families.push(e);
    Ok(VerifyReport { families })
}
