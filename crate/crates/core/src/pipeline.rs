//! End-to-end solve: IRS charging, the `tau2` search with WD charging and
//! offloading at each grid point, baselines and parameter sweeps.

use std::time::Instant;

use rayon::prelude::*;

use crate::allocation::{objective_bits, reevaluate, with_practical_amplitudes, Allocation};
use crate::channel::{perturb_csi, synth_channels, ChannelSet};
use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::offload::{optimize_offloading, OffloadMode};
use crate::report::SolveReport;
use crate::rng::combine;
use crate::scenario::{build_scenario, Scenario};
use crate::wet::{design_charging, harvested_energy, solve_p1, IrsCharging};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    Proposed,
    UpperBound,
    IdealApplied,
    FullOffloading,
    NoIrs,
}

impl Scheme {
    pub const ALL: [Scheme; 5] = [
        Scheme::Proposed,
        Scheme::UpperBound,
        Scheme::IdealApplied,
        Scheme::FullOffloading,
        Scheme::NoIrs,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Scheme::Proposed => "proposed",
            Scheme::UpperBound => "upper_bound",
            Scheme::IdealApplied => "ideal_applied",
            Scheme::FullOffloading => "full_offloading",
            Scheme::NoIrs => "no_irs",
        }
    }

    pub fn parse(s: &str) -> Option<Scheme> {
        Scheme::ALL.into_iter().find(|k| k.tag() == s)
    }
}

/// Structural switches applied on top of a configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub irs: bool,
    pub local: bool,
    /// Evaluate only this `tau2` instead of searching the grid.
    pub tau2: Option<f64>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            irs: true,
            local: true,
            tau2: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridPoint {
    pub tau2: f64,
    pub objective: Option<f64>,
    /// Why the point was skipped, if it was.
    pub note: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct P0Report {
    pub p1_probes: usize,
    pub p3: SolveReport,
    /// Offloading report at the selected grid point.
    pub p4: SolveReport,
    pub grid: Vec<GridPoint>,
}

impl P0Report {
    pub fn inner_iters(&self) -> usize {
        self.p3.inner_iters() + self.p4.inner_iters()
    }

    pub fn outer_iters(&self) -> usize {
        self.p3.outer_iters + self.p4.outer_iters
    }

    /// Index of the selected grid point.
    pub fn best_index(&self) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (i, g) in self.grid.iter().enumerate() {
            if let Some(v) = g.objective {
                if best.is_none_or(|(_, b)| v > b) {
                    best = Some((i, v));
                }
            }
        }
        best.map(|(i, _)| i)
    }
}

/// Interior grid `(j + 1) / (n + 1) * span`, endpoints excluded.
pub fn tau2_grid(span: f64, n: usize) -> Vec<f64> {
    (0..n).map(|j| span * (j + 1) as f64 / (n + 1) as f64).collect()
}

/// Solves the block on the given channels.
pub fn solve_on_channels(
    channels: &ChannelSet,
    config: &SystemConfig,
    seed: u64,
    opts: SolveOptions,
) -> Result<(Allocation, P0Report)> {
    config.validate()?;
    let channels = if opts.irs { channels.clone() } else { channels.without_irs() };
    let bm = channels.bm();
    let p1 = if opts.irs {
        solve_p1(&channels, config)?
    } else {
        IrsCharging {
            tau1: 0.0,
            w: CMat::zeros(bm, bm),
            probes: 0,
        }
    };
    let design = design_charging(&channels, config, seed, opts.irs)?;
    let span = config.t - p1.tau1;
    let points = match opts.tau2 {
        Some(t) if t > 0.0 && t < span => vec![t],
        Some(t) => return Err(Error::Infeasible(format!("tau2 = {t} outside (0, {span})"))),
        None => tau2_grid(span, config.alg.tau2_grid),
    };
    let mode = OffloadMode {
        passive: opts.irs,
        local: opts.local,
    };

    let results: Vec<Result<(Allocation, SolveReport)>> = points
        .par_iter()
        .map(|&tau2| {
            let wet = design.clone().into_setting(&p1, tau2)?;
            let t1 = config.t - p1.tau1 - tau2;
            let (_, e_wd) = harvested_energy(&wet, &channels, config)?;
            let (cs, rep) = optimize_offloading(&channels, config, &e_wd, t1, seed, mode)?;
            let mut alloc = Allocation {
                tau1: p1.tau1,
                tau2,
                t1,
                w: wet.w,
                q: wet.q,
                profile_e: wet.profile_e,
                profile_i: cs.profile_i,
                u: cs.u,
                p: cs.p,
                f: cs.f,
                irs: opts.irs,
                objective_bits: 0.0,
            };
            alloc.objective_bits = objective_bits(&alloc, &channels, config)?;
            Ok((alloc, rep))
        })
        .collect();

    let mut report = P0Report {
        p1_probes: p1.probes,
        p3: design.report.clone(),
        ..P0Report::default()
    };
    let mut best: Option<(Allocation, SolveReport)> = None;
    for (&tau2, res) in points.iter().zip(results) {
        match res {
            Ok((alloc, rep)) => {
                report.grid.push(GridPoint {
                    tau2,
                    objective: Some(alloc.objective_bits),
                    note: None,
                });
                if best.as_ref().is_none_or(|(b, _)| alloc.objective_bits > b.objective_bits) {
                    best = Some((alloc, rep));
                }
            }
            Err(e) => report.grid.push(GridPoint {
                tau2,
                objective: None,
                note: Some(e.to_string()),
            }),
        }
    }
    match best {
        Some((alloc, rep)) => {
            report.p4 = rep;
            Ok((alloc, report))
        }
        None => Err(Error::NoFeasibleGridPoint(
            report
                .grid
                .iter()
                .map(|g| format!("tau2={}: {}", g.tau2, g.note.as_deref().unwrap_or("?")))
                .collect(),
        )),
    }
}

/// Designs on channels estimated with error ratio `config.csi_delta` and
/// scores the decision on the true channels.
fn solve_with_csi(
    channels: &ChannelSet,
    config: &SystemConfig,
    seed: u64,
    opts: SolveOptions,
) -> Result<(Allocation, P0Report)> {
    if config.csi_delta == 0.0 {
        return solve_on_channels(channels, config, seed, opts);
    }
    let est = perturb_csi(channels, config.csi_delta, seed)?;
    let (alloc, report) = solve_on_channels(&est, config, seed, opts)?;
    let truth = if opts.irs { channels.clone() } else { channels.without_irs() };
    Ok((reevaluate(alloc, &truth, config)?, report))
}

/// Proposed design at the configured phase model.
pub fn solve_p0(scenario: &Scenario, config: &SystemConfig, seed: u64) -> Result<(Allocation, P0Report)> {
    run_scheme(Scheme::Proposed, scenario, config, seed, None)
}

pub fn run_baseline(
    kind: Scheme,
    scenario: &Scenario,
    config: &SystemConfig,
    seed: u64,
) -> Result<(Allocation, P0Report)> {
    run_scheme(kind, scenario, config, seed, None)
}

/// Configuration the scheme's decision is feasible under.
pub fn scheme_config(scheme: Scheme, config: &SystemConfig) -> SystemConfig {
    let mut c = config.clone();
    if scheme == Scheme::UpperBound {
        c.phase.beta_min = 1.0;
    }
    c
}

/// Any scheme, optionally at a fixed `tau2`.
pub fn run_scheme(
    scheme: Scheme,
    scenario: &Scenario,
    config: &SystemConfig,
    seed: u64,
    tau2: Option<f64>,
) -> Result<(Allocation, P0Report)> {
    config.validate()?;
    let channels = synth_channels(scenario, config, seed)?;
    let mut opts = SolveOptions {
        tau2,
        ..SolveOptions::default()
    };
    let ideal = scheme_config(Scheme::UpperBound, config);
    match scheme {
        Scheme::Proposed => solve_with_csi(&channels, config, seed, opts),
        Scheme::UpperBound => solve_with_csi(&channels, &ideal, seed, opts),
        Scheme::IdealApplied => {
            let (alloc, report) = solve_with_csi(&channels, &ideal, seed, opts)?;
            let alloc = with_practical_amplitudes(alloc, config);
            Ok((reevaluate(alloc, &channels, config)?, report))
        }
        Scheme::FullOffloading => {
            opts.local = false;
            solve_with_csi(&channels, config, seed, opts)
        }
        Scheme::NoIrs => {
            opts.irs = false;
            solve_with_csi(&channels, config, seed, opts)
        }
    }
}

/// Parameters a sweep can vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    N,
    L,
    PMax,
    KappaHu,
    K,
    Delta,
    BetaMin,
    Tau2,
}

impl SweepParam {
    pub const ALL: [SweepParam; 8] = [
        SweepParam::N,
        SweepParam::L,
        SweepParam::PMax,
        SweepParam::KappaHu,
        SweepParam::K,
        SweepParam::Delta,
        SweepParam::BetaMin,
        SweepParam::Tau2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SweepParam::N => "N",
            SweepParam::L => "L",
            SweepParam::PMax => "P_max",
            SweepParam::KappaHu => "kappa_HU",
            SweepParam::K => "K",
            SweepParam::Delta => "delta",
            SweepParam::BetaMin => "beta_min",
            SweepParam::Tau2 => "tau2",
        }
    }

    pub fn parse(s: &str) -> Option<SweepParam> {
        SweepParam::ALL.into_iter().find(|p| p.name() == s)
    }

    fn is_count(self) -> bool {
        matches!(self, SweepParam::N | SweepParam::K)
    }

    /// Applies `value` to a copy of `base`; `tau2` is returned separately.
    pub fn apply(self, base: &SystemConfig, value: f64) -> Result<(SystemConfig, Option<f64>)> {
        let mut c = base.clone();
        let mut tau2 = None;
        if self.is_count() && !(value >= 1.0 && value.fract() == 0.0) {
            return Err(Error::InvalidConfig(format!("{} needs a positive integer, got {value}", self.name())));
        }
        match self {
            SweepParam::N => c.n = value as usize,
            SweepParam::L => c.cluster_x = value,
            SweepParam::PMax => c.p_max = value,
            SweepParam::KappaHu => c.kappa_hu = value,
            SweepParam::K => c.k = value as usize,
            SweepParam::Delta => c.csi_delta = value,
            SweepParam::BetaMin => c.phase.beta_min = value,
            SweepParam::Tau2 => tau2 = Some(value),
        }
        c.validate()?;
        Ok((c, tau2))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub param: SweepParam,
    pub values: Vec<f64>,
    pub seeds: Vec<u64>,
    pub schemes: Vec<Scheme>,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::InvalidConfig("sweep needs at least one value".into()));
        }
        if self.values.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidConfig("sweep values must be strictly increasing".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::InvalidConfig("sweep needs at least one seed".into()));
        }
        if self.schemes.is_empty() {
            return Err(Error::InvalidConfig("sweep needs at least one scheme".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub sweep_param: String,
    pub value: f64,
    pub seed: u64,
    pub scheme: Scheme,
    pub objective_bits: f64,
    pub sum_rate_bps: f64,
    pub tau1_s: f64,
    pub tau2_s: f64,
    pub t1_s: f64,
    pub inner_iters: usize,
    pub outer_iters: usize,
    /// `ok`, `infeasible` or `failed`.
    pub status: String,
    pub wall_s: f64,
}

/// Seed driving every random draw of a row. Depends on the listed seed only,
/// so rows that differ in the swept value share channel realizations.
pub fn row_seed(master: u64, seed: u64) -> u64 {
    combine(master, &[seed])
}

/// One row: scenario, channels and the scheme's solve, scored on true channels.
pub fn evaluate_row(
    param: &str,
    value: f64,
    seed: u64,
    scheme: Scheme,
    config: &SystemConfig,
    tau2: Option<f64>,
    master: u64,
) -> (ResultRow, Option<(Allocation, P0Report)>) {
    let start = Instant::now();
    let rs = row_seed(master, seed);
    let outcome = build_scenario(config, config.cluster_x, rs)
        .and_then(|sc| {
            let out = run_scheme(scheme, &sc, config, rs, tau2)?;
            let ch = synth_channels(&sc, config, rs)?;
            let rate = if out.0.irs {
                out.0.sum_rate(&ch, config)?
            } else {
                out.0.sum_rate(&ch.without_irs(), config)?
            };
            Ok((out, rate))
        });
    let mut row = ResultRow {
        sweep_param: param.to_string(),
        value,
        seed,
        scheme,
        objective_bits: 0.0,
        sum_rate_bps: 0.0,
        tau1_s: 0.0,
        tau2_s: 0.0,
        t1_s: 0.0,
        inner_iters: 0,
        outer_iters: 0,
        status: String::new(),
        wall_s: 0.0,
    };
    let keep = match outcome {
        Ok(((alloc, report), rate)) => {
            row.objective_bits = alloc.objective_bits;
            row.sum_rate_bps = rate;
            row.tau1_s = alloc.tau1;
            row.tau2_s = alloc.tau2;
            row.t1_s = alloc.t1;
            row.inner_iters = report.inner_iters();
            row.outer_iters = report.outer_iters();
            row.status = "ok".into();
            Some((alloc, report))
        }
        Err(e) => {
            row.status = if e.is_infeasibility() { "infeasible" } else { "failed" }.into();
            None
        }
    };
    row.wall_s = start.elapsed().as_secs_f64();
    (row, keep)
}

/// Worker count: `WPMEC_THREADS` if set, else the machine's parallelism.
pub fn worker_threads() -> usize {
    std::env::var("WPMEC_THREADS")
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
}

/// Evaluates every (value, seed, scheme) combination. Rows come back in
/// that nesting order regardless of which worker finished first.
pub fn run_sweep(spec: &SweepSpec, base: &SystemConfig, master: u64) -> Result<Vec<ResultRow>> {
    spec.validate()?;
    base.validate()?;
    let mut jobs = Vec::new();
    for &value in &spec.values {
        let (config, tau2) = spec.param.apply(base, value)?;
        for &seed in &spec.seeds {
            for &scheme in &spec.schemes {
                jobs.push((value, seed, scheme, config.clone(), tau2));
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_threads())
        .build()
        .map_err(|e| Error::InvalidConfig(format!("worker pool: {e}")))?;
    let name = spec.param.name();
    Ok(pool.install(|| {
        jobs.par_iter()
            .map(|(value, seed, scheme, config, tau2)| {
                evaluate_row(name, *value, *seed, *scheme, config, *tau2, master).0
            })
            .collect()
    }))
}
