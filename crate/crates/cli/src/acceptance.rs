//! The nine acceptance criteria, driven by `criteria.toml` in an acceptance
//! config directory.

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use plateau_core::cycles::{ops::MASS_TOLERANCE, simplex_volume};
use plateau_core::hyperbolic::fuchsian::regular_circumradius;
use plateau_core::minimizer::gradient_check;
use plateau_core::spectral::{amenable_cycle, amenable_masses, power_law_fit, ChainVerdict};
use plateau_core::sphere::{Homomorphism, WeightFunction};
use plateau_core::{
    fundamental_polygon, kazhdan_exact, kazhdan_truncated, kesten_lower_bound, lambda1, margulis_chain_check,
    poisson_cycle, pushforward, restriction_check, verify_batch, BatchConfig, CycleMap, FuchsianGroup, GroupElement,
    MarkedGroup, MargulisChain, OrbitModel, PlateauError, PoissonParams, ReferenceMeasure, SphereVector,
};

use crate::config::ConfigError;
use crate::fixtures::{properness_sample, random_octahedron};
use crate::runs::mean_pullback;
use crate::RunError;

pub const CRITERIA_FILE: &str = "criteria.toml";

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AcceptanceConfig {
    pub seed: u64,
    pub quadrature_order: usize,
    pub pullback: PullbackCase,
    pub poisson: PoissonCase,
    pub barycenter: BarycenterCase,
    pub pushforward: PushforwardCase,
    pub properness: PropernessCase,
    pub amenable: AmenableCase,
    pub spectral: SpectralCase,
    pub geometry: GeometryCase,
    pub margulis: MargulisCase,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PullbackCase {
    pub c: Vec<f64>,
    pub rel_tol: f64,
    pub limit_c: f64,
    pub limit_tol: f64,
    /// Exponent just above the entropy in H³, reported against 1/3.
    pub limit_c_h3: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoissonCase {
    pub genus: usize,
    pub c: f64,
    pub radius: usize,
    pub mesh_level: usize,
    pub slack: f64,
    pub monotone_c: Vec<f64>,
    pub monotone_tail_bound: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BarycenterCase {
    pub samples: usize,
    pub measure_radius: usize,
    pub ell: f64,
    pub trace_tol: f64,
    pub k_gap_tol: f64,
    pub jacobian_slack: f64,
    pub equivariance_tol: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PushforwardCase {
    pub cycles: usize,
    pub spread: f64,
    pub strict_margin: f64,
    pub lazy_spread: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropernessCase {
    pub samples: usize,
    pub tol: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AmenableCase {
    pub sides: Vec<usize>,
    pub max_ratio: f64,
    pub min_exponent: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupCase {
    pub group: String,
    pub generators: Vec<String>,
    #[serde(default)]
    pub subgroup: Vec<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectralCase {
    pub sandwich: Vec<GroupCase>,
    pub restriction: Vec<GroupCase>,
    pub restriction_tol: f64,
    pub free_radii: Vec<usize>,
    pub kesten_radius: usize,
    pub floor_slack: f64,
    pub integer_radii: Vec<usize>,
    pub integer_target: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryCase {
    pub octant_tol: f64,
    pub genus: usize,
    pub area_tol: f64,
    /// 1 for the true polygon; anything else corrupts it.
    pub circumradius_scale: f64,
    pub gradient_step: f64,
    pub gradient_tol: f64,
    pub torus_side: usize,
    pub poisson_c: f64,
    pub poisson_radius: usize,
    pub poisson_mesh_level: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MargulisCase {
    pub axis_length: i32,
    pub powers_alpha: f64,
    pub conjugate_alpha: f64,
    pub rejected_alpha: f64,
    pub random_witnesses: usize,
    pub witness_radius: usize,
}

impl AcceptanceConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    pub fn load_dir(dir: &Path) -> Result<Self, ConfigError> {
        let path = dir.join(CRITERIA_FILE);
        let text = std::fs::read_to_string(&path).map_err(|source| ConfigError::Read { path, source })?;
        Self::from_toml(&text)
    }
}

#[derive(Debug, Clone)]
pub struct CriterionReport {
    pub id: usize,
    pub title: &'static str,
    pub passed: bool,
    pub measured: String,
    pub expected: String,
    /// One line per failed check.
    pub diffs: Vec<String>,
    pub seconds: f64,
}

impl fmt::Display for CriterionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "criterion {} {}: {} | measured {} | expected {} | {:.1}s",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.title,
            self.measured,
            self.expected,
            self.seconds
        )?;
        for d in &self.diffs {
            write!(f, "\n    diff: {d}")?;
        }
        Ok(())
    }
}

/// Collects checks for one criterion.
struct Checks {
    diffs: Vec<String>,
    measured: Vec<String>,
}

impl Checks {
    fn new() -> Self {
        Self {
            diffs: Vec::new(),
            measured: Vec::new(),
        }
    }

    fn note(&mut self, m: impl Into<String>) {
        self.measured.push(m.into());
    }

    fn check(&mut self, ok: bool, diff: impl FnOnce() -> String) {
        if !ok {
            self.diffs.push(diff());
        }
    }
}

pub const TITLES: [&str; 9] = [
    "Poisson pull-back identity",
    "genus-2 spherical-volume bracket",
    "barycenter invariants",
    "mass-monotone maps",
    "properness floor",
    "amenable collapse",
    "spectral identities",
    "geometry oracles",
    "Margulis-chain logic",
];

fn core(context: &str) -> impl Fn(PlateauError) -> RunError + '_ {
    move |source| RunError::Pipeline {
        context: context.to_string(),
        source,
    }
}

/// Runs criterion `id` (1..=9).
pub fn run_criterion(id: usize, cfg: &AcceptanceConfig) -> Result<CriterionReport, RunError> {
    let start = Instant::now();
    let mut ch = Checks::new();
    let expected = match id {
        1 => pullback(cfg, &mut ch)?,
        2 => poisson(cfg, &mut ch)?,
        3 => barycenter(cfg, &mut ch)?,
        4 => monotone_maps(cfg, &mut ch)?,
        5 => properness(cfg, &mut ch)?,
        6 => amenable(cfg, &mut ch)?,
        7 => spectral(cfg, &mut ch)?,
        8 => geometry(cfg, &mut ch)?,
        9 => margulis(cfg, &mut ch)?,
        _ => {
            return Err(RunError::Config(ConfigError::Invalid {
                field: "criterion".into(),
                msg: format!("no criterion {id}"),
            }))
        }
    };
    Ok(CriterionReport {
        id,
        title: TITLES[id - 1],
        passed: ch.diffs.is_empty(),
        measured: ch.measured.join("; "),
        expected,
        diffs: ch.diffs,
        seconds: start.elapsed().as_secs_f64(),
    })
}

pub fn run_all(cfg: &AcceptanceConfig) -> Result<Vec<CriterionReport>, RunError> {
    (1..=9).map(|id| run_criterion(id, cfg)).collect()
}

fn pullback(cfg: &AcceptanceConfig, ch: &mut Checks) -> Result<String, RunError> {
    let p = &cfg.pullback;
    for (k, &c) in p.c.iter().enumerate() {
        let m = mean_pullback(c, 2, p.samples, cfg.seed + k as u64).map_err(core("pull-back"))?;
        let target = c * c / 8.0;
        let rel = (m - target).abs() / target;
        ch.note(format!("c={c}: {m:.6} (rel {rel:.1e})"));
        ch.check(rel < p.rel_tol, || format!("c={c}: {m} vs c²/8 = {target}, relative error {rel:.3e}"));
    }
    for (n, c, limit) in [(2, p.limit_c, 1.0 / 8.0), (3, p.limit_c_h3, 1.0 / 3.0)] {
        let m = mean_pullback(c, n, p.samples, cfg.seed).map_err(core("pull-back"))?;
        ch.note(format!("H{n} c={c}: {m:.6}"));
        ch.check((m - limit).abs() < p.limit_tol, || {
            format!("H{n} c={c}: {m} vs (n−1)²/4n = {limit}, off by {:.3e}", (m - limit).abs())
        });
    }
    Ok(format!(
        "c²/8 within {} relative; limits 1/8 (H2) and 1/3 (H3) within {}",
        p.rel_tol, p.limit_tol
    ))
}

fn poisson_mass(cfg: &AcceptanceConfig, c: f64, tail_bound: Option<f64>) -> Result<(f64, f64), RunError> {
    let p = &cfg.poisson;
    let f = fundamental_polygon(p.genus).map_err(core("fundamental polygon"))?;
    let mut params = PoissonParams::new(c, p.radius, p.mesh_level);
    if let Some(t) = tail_bound {
        params.tail_bound = t;
    }
    let pc = poisson_cycle(&f, &params, None).map_err(core("poisson cycle"))?;
    let m = pc.cycle.mass(cfg.quadrature_order).map_err(core("mass"))?.total;
    Ok((m, pc.max_tail))
}

fn poisson(cfg: &AcceptanceConfig, ch: &mut Checks) -> Result<String, RunError> {
    let p = &cfg.poisson;
    let area = 4.0 * PI * (p.genus as f64 - 1.0);
    let target = area / 8.0;
    let lo = target - p.slack;
    let hi = p.c * p.c / 8.0 * area + p.slack;
    let (m, tail) = poisson_mass(cfg, p.c, None)?;
    ch.note(format!("mass(c={})={m:.4} (max tail {tail:.2e})", p.c));
    ch.check(m >= lo && m <= hi, || format!("mass {m:.6} outside [{lo:.4}, {hi:.4}]"));
    let mut prev: Option<(f64, f64)> = None;
    let mut series = Vec::new();
    for &c in &p.monotone_c {
        let (m, _) = poisson_mass(cfg, c, Some(p.monotone_tail_bound))?;
        series.push(format!("{c}:{m:.4}"));
        if let Some((pc, pm)) = prev {
            ch.check(m < pm, || format!("mass does not decrease from c={pc} ({pm:.6}) to c={c} ({m:.6})"));
        }
        prev = Some((c, m));
    }
    ch.note(format!("series {}", series.join(" ")));
    Ok(format!("[{lo:.4}, {hi:.4}], decreasing as c falls; target π/2 = {target:.4}"))
}

fn barycenter(cfg: &AcceptanceConfig, ch: &mut Checks) -> Result<String, RunError> {
    let p = &cfg.barycenter;
    let models = [
        ("genus 2", OrbitModel::surface(&fundamental_polygon(2).map_err(core("polygon"))?)),
        ("free loxodromic", OrbitModel::free_loxodromic(p.ell).map_err(core("loxodromic model"))?),
    ];
    for (name, model) in models {
        let mu = ReferenceMeasure::orbit(&model, p.measure_radius, model.entropy() + 2.0)
            .map_err(core("reference measure"))?;
        let bc = BatchConfig {
            samples: p.samples,
            seed: cfg.seed,
            ..BatchConfig::default()
        };
        let recs = verify_batch(&model, &mu, &bc).map_err(core("barycenter batch"))?;
        let n = model.dim();
        let bound = recs.first().map_or(f64::NAN, |r| r.rhs);
        let worst = |f: &dyn Fn(&plateau_core::BarycenterRecord) -> f64| {
            recs.iter().map(f).fold(f64::NEG_INFINITY, f64::max)
        };
        let trace = worst(&|r| (r.trace_h - 1.0).abs());
        let gap = -worst(&|r| -r.k_gap);
        let lhs = worst(&|r| r.lhs);
        let jac = worst(&|r| r.numeric_jac);
        let eqv = worst(&|r| r.equivariance);
        let over = recs.iter().filter(|r| r.lhs > r.rhs).count();
        ch.note(format!(
            "{name} n={n}: max lhs {lhs:.4} vs {bound:.4} ({over}/{} over), max jac {jac:.4}, trace dev {trace:.1e}, min k gap {gap:.1e}, equivariance {eqv:.1e}",
            recs.len()
        ));
        ch.check(trace <= p.trace_tol, || format!("{name}: |trace H − 1| = {trace:.3e} > {}", p.trace_tol));
        ch.check(gap >= -p.k_gap_tol, || format!("{name}: min eig(K − (I−H)) = {gap:.3e}"));
        ch.check(lhs <= bound, || format!("{name}: 2ⁿ√det H/det K reaches {lhs:.6} > {bound:.6} on {over} samples"));
        ch.check(jac <= bound * p.jacobian_slack, || {
            format!("{name}: numeric Jacobian {jac:.6} > {:.6}", bound * p.jacobian_slack)
        });
        ch.check(eqv < p.equivariance_tol, || format!("{name}: equivariance error {eqv:.3e}"));
    }
    Ok(format!("bound 8 (n=2), 3^(3/2) = {:.4} (n=3)", 3f64.powf(1.5)))
}

fn monotone_maps(cfg: &AcceptanceConfig, ch: &mut Checks) -> Result<String, RunError> {
    let p = &cfg.pushforward;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let z = MarkedGroup::free_abelian(1).map_err(core("target group"))?;
    let mut worst = f64::INFINITY;
    let mut weakest_strict = f64::INFINITY;
    for k in 0..p.cycles {
        let c = random_octahedron(&mut rng, p.spread, k % 2 == 1).map_err(core("random cycle"))?;
        let g = c.group().clone();
        let theta = Homomorphism::from_words(&g, &z, &["a", "1"]).map_err(core("homomorphism"))?;
        let maps = [
            ("Θ", CycleMap::Homomorphism(theta)),
            ("abs", CycleMap::Abs),
            ("⋆ ball(1)", CycleMap::Convolution(WeightFunction::uniform_ball(&g, 1).map_err(core("kernel"))?)),
        ];
        for (name, map) in maps {
            let r = pushforward(&c, &map, cfg.quadrature_order).map_err(core("push-forward"))?;
            worst = worst.min(r.margin);
            ch.check(r.margin >= -MASS_TOLERANCE, || format!("cycle {k}, {name}: mass grows by {:.3e}", -r.margin));
        }
        let eta = WeightFunction::lazy_generators(&g, p.lazy_spread).map_err(core("kernel"))?;
        let r = pushforward(&c, &CycleMap::Convolution(eta), cfg.quadrature_order).map_err(core("push-forward"))?;
        weakest_strict = weakest_strict.min(r.margin);
        ch.check(r.margin > p.strict_margin, || format!("cycle {k}: lazy convolution margin {:.3e}", r.margin));
    }
    ch.note(format!("min margin {worst:.3e}, min strict margin {weakest_strict:.3e} over {} cycles", p.cycles));
    Ok(format!("margins ≥ −{MASS_TOLERANCE:e}; lazy convolution > {:e}", p.strict_margin))
}

fn properness(cfg: &AcceptanceConfig, ch: &mut Checks) -> Result<String, RunError> {
    let p = &cfg.properness;
    let g = MarkedGroup::free(2).map_err(core("free group"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut slack = f64::INFINITY;
    for k in 0..p.samples {
        let s = properness_sample(&g, &mut rng).map_err(core("properness sample"))?;
        slack = slack.min(s.distance_sq - s.floor);
        ch.check(s.distance_sq >= s.floor - p.tol, || {
            format!("sample {k}: ‖γf₁ − f₂‖² = {:.6} < floor {:.6} at ε = {:.4}", s.distance_sq, s.floor, s.eps)
        });
    }
    ch.note(format!("min ‖γf₁ − f₂‖² − floor = {slack:.4} over {} samples", p.samples));
    Ok(format!("‖γf₁ − f₂‖² ≥ 2(1 − ε − 2√ε) − {:e}", p.tol))
}

fn amenable(cfg: &AcceptanceConfig, ch: &mut Checks) -> Result<String, RunError> {
    let p = &cfg.amenable;
    let pts = amenable_masses(&p.sides, cfg.quadrature_order).map_err(core("torus masses"))?;
    for w in pts.windows(2) {
        let ((l0, m0), (l1, m1)) = (w[0], w[1]);
        // Ratio per doubling of the side.
        let ratio = (m1 / m0).powf(1.0 / (l1 as f64 / l0 as f64).log2());
        ch.note(format!("L={l1}: {m1:.5} (ratio {ratio:.3})"));
        ch.check(m1 < m0 && ratio <= p.max_ratio, || format!("L={l0}→{l1}: ratio {ratio:.4}"));
    }
    let (exponent, _) = power_law_fit(&pts).map_err(core("fit"))?;
    ch.note(format!("L={}: {:.5}, fit exponent {exponent:.3}", pts[0].0, pts[0].1));
    ch.check(exponent > p.min_exponent, || format!("fit exponent {exponent:.4} ≤ {}", p.min_exponent));
    Ok(format!("ratio ≤ {} per doubling, exponent > {}", p.max_ratio, p.min_exponent))
}

fn parse_case(case: &GroupCase) -> Result<(MarkedGroup, Vec<GroupElement>, Vec<GroupElement>), RunError> {
    let g = MarkedGroup::parse(&case.group).map_err(core("group"))?;
    let els = |ws: &[String]| -> Result<Vec<GroupElement>, RunError> {
        ws.iter().map(|w| g.parse_element(w).map_err(core("element"))).collect()
    };
    let s = els(&case.generators)?;
    let f = els(&case.subgroup)?;
    Ok((g, s, f))
}

fn spectral(cfg: &AcceptanceConfig, ch: &mut Checks) -> Result<String, RunError> {
    let p = &cfg.spectral;
    for case in &p.sandwich {
        let (g, s, _) = parse_case(case)?;
        let k = kazhdan_exact(&g, &s).map_err(core("Kazhdan constant"))?;
        let l = lambda1(&g, &s).map_err(core("lambda1"))?;
        let lo = 2.0 / s.len() as f64 * l;
        ch.check(lo <= k.value + 1e-9 && k.value <= 2.0 * l + 1e-9, || {
            format!("{} {:?}: K = {:.6} outside [{lo:.6}, {:.6}]", case.group, case.generators, k.value, 2.0 * l)
        });
    }
    ch.note(format!("sandwich on {} fixtures", p.sandwich.len()));
    let mut worst: f64 = 0.0;
    for (k, case) in p.restriction.iter().enumerate() {
        let (g, s, f) = parse_case(case)?;
        let r = restriction_check(&g, &f, &s, cfg.seed + k as u64).map_err(core("restriction"))?;
        worst = worst.max(r.difference);
        ch.check(r.difference < p.restriction_tol, || {
            format!(
                "{} F={:?}: K_F = {:.8}, K_G = {:.8}",
                case.group, case.subgroup, r.k_subgroup.value, r.k_group.value
            )
        });
    }
    ch.note(format!("max |K_F − K_G| {worst:.2e}"));

    let f2 = MarkedGroup::free(2).map_err(core("free group"))?;
    let ab = [f2.letter(1), f2.letter(2)];
    let cert = kesten_lower_bound(2, p.kesten_radius).map_err(core("Kesten floor"))?;
    let mut lowest = f64::INFINITY;
    for &r in &p.free_radii {
        let k = kazhdan_truncated(&f2, &ab, r).map_err(core("F2 truncation"))?;
        lowest = lowest.min(k.value);
        ch.check(k.value >= cert.floor - p.floor_slack, || {
            format!("F2 R={r}: upper bound {:.6} below floor {:.6}", k.value, cert.floor)
        });
    }
    ch.note(format!("F2 min upper bound {lowest:.4} vs floor {:.4}", cert.floor));

    let z = MarkedGroup::free_abelian(1).map_err(core("integers"))?;
    let mut prev = f64::INFINITY;
    let mut last = f64::NAN;
    for &r in &p.integer_radii {
        let k = kazhdan_truncated(&z, &[z.letter(1)], r).map_err(core("Z truncation"))?;
        ch.check(k.value <= prev + 1e-12, || format!("Z R={r}: bound {:.6} rose from {prev:.6}", k.value));
        prev = k.value;
        last = k.value;
    }
    let r_max = p.integer_radii.last().copied().unwrap_or(0);
    ch.note(format!("Z R={r_max}: {last:.5}"));
    ch.check(last < p.integer_target, || format!("Z R={r_max}: bound {last:.6} ≥ {}", p.integer_target));
    Ok(format!(
        "(2/|S|)λ₁ ≤ K ≤ 2λ₁; |K_F − K_G| < {:e}; F2 ≥ floor − {:e}; Z < {} by R={r_max}",
        p.restriction_tol, p.floor_slack, p.integer_target
    ))
}

fn geometry(cfg: &AcceptanceConfig, ch: &mut Checks) -> Result<String, RunError> {
    let p = &cfg.geometry;
    let q = cfg.quadrature_order;
    let f2 = MarkedGroup::free(2).map_err(core("free group"))?;
    let diracs = [f2.identity(), f2.letter(1), f2.letter(2)]
        .into_iter()
        .map(|g| SphereVector::dirac(&f2, g))
        .collect::<plateau_core::Result<Vec<_>>>()
        .map_err(core("diracs"))?;
    let octant = simplex_volume(&diracs, q).map_err(core("octant"))?.volume;
    ch.note(format!("octant {octant:.10}"));
    ch.check((octant - PI / 2.0).abs() < p.octant_tol, || {
        format!("octant area {octant:.10} vs π/2, off by {:.3e}", (octant - PI / 2.0).abs())
    });

    let sides = 4 * p.genus;
    let r0 = regular_circumradius(sides, 2.0 * PI / sides as f64).map_err(core("circumradius"))?;
    let poly = FuchsianGroup::with_circumradius(p.genus, r0 * p.circumradius_scale).map_err(core("polygon"))?;
    let area = poly.area();
    let target = 4.0 * PI * (p.genus as f64 - 1.0);
    ch.note(format!("polygon area {area:.12}"));
    ch.check((area - target).abs() < p.area_tol, || {
        format!("polygon area {area:.12} vs 4π(g−1) = {target:.12}, off by {:.3e}", (area - target).abs())
    });

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let f = fundamental_polygon(p.genus).map_err(core("polygon"))?;
    let fixtures = [
        ("octahedron", random_octahedron(&mut rng, 0.3, false).map_err(core("octahedron"))?),
        ("torus", amenable_cycle(p.torus_side).map_err(core("torus"))?),
        (
            "poisson",
            poisson_cycle(&f, &PoissonParams::new(p.poisson_c, p.poisson_radius, p.poisson_mesh_level), None)
                .map_err(core("poisson cycle"))?
                .cycle,
        ),
    ];
    for (name, c) in fixtures {
        let err = gradient_check(&c, q, p.gradient_step, &mut rng).map_err(core("gradient check"))?;
        ch.note(format!("{name} gradient {err:.1e}"));
        ch.check(err < p.gradient_tol, || format!("{name}: gradient relative error {err:.3e}"));
    }
    Ok(format!(
        "octant π/2 within {:e}; area 4π within {:e}; gradients within {:e}",
        p.octant_tol, p.area_tol, p.gradient_tol
    ))
}

fn margulis(cfg: &AcceptanceConfig, ch: &mut Checks) -> Result<String, RunError> {
    let p = &cfg.margulis;
    let g = MarkedGroup::free(2).map_err(core("free group"))?;
    let el = |s: &str| g.parse_element(s).map_err(core("element"));
    let axis = {
        let support = (-p.axis_length..=p.axis_length)
            .map(|k| g.eval_word(&vec![k.signum(); k.unsigned_abs() as usize]))
            .collect::<plateau_core::Result<Vec<_>>>()
            .map_err(core("axis"))?;
        SphereVector::uniform(&g, &support).map_err(core("axis"))?
    };
    let dirac = SphereVector::dirac(&g, g.identity()).map_err(core("dirac"))?;

    let chain = MargulisChain {
        elements: vec![el("a")?, el("a^2")?, el("A^3")?],
        witnesses: vec![axis.clone(), axis.clone()],
    };
    let v = margulis_chain_check(&g, &chain, p.powers_alpha);
    let ok = matches!(&v, Ok(ChainVerdict::CommonCyclic { root }) if *root == g.letter(1));
    ch.note(format!("a, a², a⁻³: {}", if ok { "common root a" } else { "wrong" }));
    ch.check(ok, || format!("a, a², a⁻³ at α = {}: {v:?}", p.powers_alpha));

    let chain = MargulisChain {
        elements: vec![el("a")?, el("baB")?],
        witnesses: vec![dirac],
    };
    let v = margulis_chain_check(&g, &chain, p.conjugate_alpha);
    let ok = matches!(v, Ok(ChainVerdict::Violation { index: 0, .. }));
    ch.note(format!("a, bab⁻¹: {}", if ok { "violation" } else { "wrong" }));
    ch.check(ok, || format!("a, bab⁻¹ at α = {}: {v:?}", p.conjugate_alpha));

    let chain = MargulisChain {
        elements: vec![g.identity(), el("a")?],
        witnesses: vec![axis.clone()],
    };
    let v = margulis_chain_check(&g, &chain, p.powers_alpha);
    let ok = matches!(v, Err(PlateauError::IdentityInput));
    ch.note(format!("e, a: {}", if ok { "rejected" } else { "accepted" }));
    ch.check(ok, || format!("identity in chain: {v:?}"));

    // Sub-floor witnesses for the pair (a, b).
    let ab = [g.letter(1), g.letter(2)];
    let floor = kesten_lower_bound(2, p.witness_radius.max(1) + 2).map_err(core("floor"))?.floor;
    let alpha = floor - p.rejected_alpha;
    let mut witnesses = vec![
        kazhdan_truncated(&g, &ab, p.witness_radius)
            .map_err(core("optimizer witness"))?
            .witness
            .expect("truncation returns a vector"),
        axis,
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let ball = g.ball(p.witness_radius).map_err(core("ball"))?;
    for _ in 0..p.random_witnesses {
        let signed = rng.random_bool(0.5);
        let u = if signed {
            SphereVector::random(&g, &ball, 1, &mut rng)
        } else {
            SphereVector::random_nonnegative(&g, &ball, &mut rng)
        };
        witnesses.push(u.map_err(core("random witness"))?);
    }
    let mut accepted = 0;
    for u in &witnesses {
        let chain = MargulisChain {
            elements: ab.to_vec(),
            witnesses: vec![u.clone()],
        };
        if !matches!(margulis_chain_check(&g, &chain, alpha), Err(PlateauError::InvalidWitness(_))) {
            accepted += 1;
        }
    }
    ch.note(format!("(a, b): {}/{} sub-floor witnesses rejected", witnesses.len() - accepted, witnesses.len()));
    ch.check(accepted == 0, || format!("{accepted} witnesses for (a, b) accepted at α = {alpha:.6}"));
    Ok(format!("common root a; violation; identity rejected; every witness rejected at α = floor − {}", p.rejected_alpha))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_fixture_is_an_error() {
        let dir = std::env::temp_dir().join("plateau-no-fixture");
        let _ = std::fs::create_dir_all(&dir);
        assert!(matches!(AcceptanceConfig::load_dir(&dir), Err(ConfigError::Read { .. })));
    }

    #[test]
    fn incomplete_fixture_is_an_error() {
        assert!(matches!(AcceptanceConfig::from_toml("seed = 1"), Err(ConfigError::Parse(_))));
    }

    #[test]
    fn report_lines() {
        let r = CriterionReport {
            id: 8,
            title: TITLES[7],
            passed: false,
            measured: "x".into(),
            expected: "y".into(),
            diffs: vec!["area off".into()],
            seconds: 0.25,
        };
        let s = r.to_string();
        assert!(s.starts_with("criterion 8 FAIL: geometry oracles"));
        assert!(s.contains("diff: area off"));
    }
}
