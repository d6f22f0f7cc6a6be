//! One pipeline per experiment kind.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde_json::json;

use plateau_core::barycenter::BatchConfig;
use plateau_core::cycles::thick_mass_profile;
use plateau_core::hyperbolic::tangent_frame;
use plateau_core::minimizer::{Smoothing, StopReason};
use plateau_core::spectral::{
    amenable_cycle, amenable_masses, folner_displacement, kesten_lower_bound, lambda1, power_law_fit,
    ChainVerdict, KazhdanEstimate,
};
use plateau_core::sphere::WeightFunction;
use plateau_core::{
    descend, fundamental_polygon, kazhdan_exact, kazhdan_truncated, margulis_chain_check, poisson_cycle,
    poisson_pullback, primitive_root, restriction_check, verify_batch, DescentConfig, GroupElement, GroupKind, HPoint,
    MargulisChain, MarkedGroup, OrbitModel, PlateauError, PoissonParams, ReferenceMeasure, SimplicialCycle,
    SphereVector,
};

use crate::config::{
    AmenableParams, BarycenterParams, CycleSource, CycleSpec, ExperimentConfig, KazhdanParams, Kind, MargulisParams,
    MinimizeParams, ModelKind, SurfacePoissonParams, ThicknessParams, WitnessKind,
};
use crate::fixtures::{perturb, random_octahedron};
use crate::table::{Cell, ResultTable, RunOutput};
use crate::RunError;

fn ctx<T>(what: &str, r: plateau_core::Result<T>) -> Result<T, RunError> {
    r.map_err(|source| RunError::Pipeline {
        context: what.to_string(),
        source,
    })
}

/// Runs the experiment, inside a pool of `threads` workers when set.
pub fn run(cfg: &ExperimentConfig) -> Result<RunOutput, RunError> {
    cfg.validate()?;
    match cfg.threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| RunError::Pipeline {
                    context: "thread pool".into(),
                    source: PlateauError::InvalidArgument(e.to_string()),
                })?;
            pool.install(|| dispatch(cfg))
        }
        None => dispatch(cfg),
    }
}

fn dispatch(cfg: &ExperimentConfig) -> Result<RunOutput, RunError> {
    let mut out = RunOutput::new(cfg.kind.name(), &cfg.hash(), cfg.seed);
    // Sections are present: validate() checked them.
    match cfg.kind {
        Kind::SurfacePoisson => surface_poisson(cfg, cfg.surface_poisson.as_ref().unwrap(), &mut out)?,
        Kind::Minimize => minimize(cfg, cfg.minimize.as_ref().unwrap(), &mut out)?,
        Kind::BarycenterVerify => barycenter(cfg, cfg.barycenter.as_ref().unwrap(), &mut out)?,
        Kind::Kazhdan => kazhdan(cfg, cfg.kazhdan.as_ref().unwrap(), &mut out)?,
        Kind::AmenableCollapse => amenable(cfg, cfg.amenable.as_ref().unwrap(), &mut out)?,
        Kind::ThicknessScan => thickness(cfg, cfg.thickness.as_ref().unwrap(), &mut out)?,
        Kind::MargulisCheck => margulis(cfg, cfg.margulis.as_ref().unwrap(), &mut out)?,
    }
    Ok(out)
}

/// Mean of `‖dPoisson_c(v)‖²` over random points and unit directions in Hⁿ.
pub fn mean_pullback(c: f64, n: usize, samples: usize, seed: u64) -> plateau_core::Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = samples.max(1);
    let mut total = 0.0;
    for _ in 0..samples {
        let spatial: Vec<f64> = (0..n).map(|_| rng.random_range(-1.5..1.5)).collect();
        let x = HPoint::from_spatial(&spatial);
        let frame = tangent_frame(&x);
        let w: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let norm = w.iter().map(|a| a * a).sum::<f64>().sqrt();
        let v = frame.iter().zip(&w).fold(DVector::zeros(n + 1), |acc, (e, a)| acc + e * (*a / norm));
        total += poisson_pullback(c, &x, &v, n)?;
    }
    Ok(total / samples as f64)
}

fn surface_poisson(cfg: &ExperimentConfig, p: &SurfacePoissonParams, out: &mut RunOutput) -> Result<(), RunError> {
    let f = ctx("fundamental polygon", fundamental_polygon(p.genus))?;
    let mut t = ResultTable::new(
        "poisson",
        &["c", "pullback", "analytic", "rel_error", "cycle_mass", "mass_target", "tail_max", "tail_mean"],
        &out.config_hash,
    );
    for (k, &c) in p.c.iter().enumerate() {
        let pull = ctx("pull-back", mean_pullback(c, 2, p.pullback_samples, cfg.seed.wrapping_add(k as u64)))?;
        let analytic = c * c / 8.0;
        let (mass, tmax, tmean) = if p.pullback_only {
            (f64::NAN, f64::NAN, f64::NAN)
        } else {
            let params = PoissonParams {
                tile_order: p.tile_order,
                tail_bound: p.tail_bound,
                ..PoissonParams::new(c, p.radius, p.mesh_level)
            };
            let pc = ctx(&format!("poisson cycle at c = {c}"), poisson_cycle(&f, &params, None))?;
            let mass = ctx("cycle mass", pc.cycle.mass(cfg.quadrature_order))?.total;
            let mean = pc.tails.iter().sum::<f64>() / pc.tails.len().max(1) as f64;
            (mass, pc.max_tail, mean)
        };
        t.push(vec![
            c.into(),
            pull.into(),
            analytic.into(),
            ((pull - analytic) / analytic).abs().into(),
            mass.into(),
            (analytic * f.area()).into(),
            tmax.into(),
            tmean.into(),
        ]);
    }
    out.scalar("surface_area", f.area());
    out.scalar("spherical_volume_target", f.area() / 8.0);
    out.tables.push(t);
    Ok(())
}

/// Builds the cycle named by a `[cycle]` section.
pub fn build_cycle(spec: &CycleSpec, seed: u64) -> Result<SimplicialCycle, RunError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = match spec.source {
        CycleSource::Poisson => {
            let f = ctx("fundamental polygon", fundamental_polygon(spec.genus))?;
            // validate() guarantees these.
            let params = PoissonParams::new(spec.c.unwrap(), spec.radius.unwrap(), spec.mesh_level.unwrap());
            ctx("poisson cycle", poisson_cycle(&f, &params, None))?.cycle
        }
        CycleSource::Torus => ctx("torus", amenable_cycle(spec.side.unwrap()))?,
        CycleSource::Octahedron => ctx("octahedron", random_octahedron(&mut rng, 0.3, false))?,
    };
    ctx("perturbation", perturb(&base, spec.perturbation, &mut rng))
}

fn minimize(cfg: &ExperimentConfig, p: &MinimizeParams, out: &mut RunOutput) -> Result<(), RunError> {
    let c = build_cycle(cfg.cycle.as_ref().unwrap(), cfg.seed)?;
    let smoothing = match p.smoothing_every {
        Some(every) => Some(Smoothing {
            every,
            eta: ctx("smoothing kernel", WeightFunction::lazy_generators(c.group(), p.smoothing_spread))?,
        }),
        None => None,
    };
    let dc = DescentConfig {
        max_iters: p.max_iters,
        step0: p.step0,
        grad_tol: p.grad_tol,
        delta_min: p.delta_min,
        displacement_radius: p.displacement_radius,
        quadrature_order: cfg.quadrature_order,
        smoothing,
        ..DescentConfig::default()
    };
    let (_, trace) = ctx("descent", descend(&c, &dc))?;
    let mut t = ResultTable::new(
        "trace",
        &["iteration", "mass", "grad_norm", "min_displacement", "step", "smoothed"],
        &out.config_hash,
    );
    for r in &trace.rows {
        t.push(vec![
            r.iteration.into(),
            r.mass.into(),
            r.grad_norm.into(),
            r.min_displacement.into(),
            r.step.into(),
            (r.smoothed as usize).into(),
        ]);
    }
    let stop = match trace.stop {
        StopReason::GradientTolerance => "gradient-tolerance",
        StopReason::MaxIterations => "max-iterations",
        StopReason::Collapse => "collapse",
        StopReason::LineSearch => "line-search",
    };
    out.scalar("initial_mass", trace.initial_mass());
    out.scalar("final_mass", trace.final_mass());
    out.scalar("stop", stop);
    out.scalar("monotone", trace.is_monotone(0.0));
    out.tables.push(t);
    Ok(())
}

pub fn orbit_model(p: &BarycenterParams) -> Result<OrbitModel, RunError> {
    match p.model {
        ModelKind::Surface => Ok(OrbitModel::surface(&ctx("fundamental polygon", fundamental_polygon(p.genus))?)),
        ModelKind::FreeLoxodromic => ctx("loxodromic model", OrbitModel::free_loxodromic(p.ell)),
    }
}

fn barycenter(cfg: &ExperimentConfig, p: &BarycenterParams, out: &mut RunOutput) -> Result<(), RunError> {
    let model = orbit_model(p)?;
    let beta = p.beta.unwrap_or(model.entropy() + 2.0);
    let mu = ctx("reference measure", ReferenceMeasure::orbit(&model, p.measure_radius, beta))?;
    let bc = BatchConfig {
        samples: p.samples,
        seed: cfg.seed,
        support_radius: p.support_radius,
        h_step: p.h_step,
        atom_clearance: p.atom_clearance,
        ..BatchConfig::default()
    };
    let recs = ctx("barycenter batch", verify_batch(&model, &mu, &bc))?;
    let mut t = ResultTable::new(
        "barycenter",
        &["sample", "n", "residual", "trace_h", "k_gap", "lhs", "rhs", "numeric_jac", "equivariance", "nearest_atom"],
        &out.config_hash,
    );
    for r in &recs {
        t.push(vec![
            r.id.into(),
            r.n.into(),
            r.residual.into(),
            r.trace_h.into(),
            r.k_gap.into(),
            r.lhs.into(),
            r.rhs.into(),
            r.numeric_jac.into(),
            r.equivariance.into(),
            r.nearest_atom.into(),
        ]);
    }
    let max = |f: &dyn Fn(&plateau_core::BarycenterRecord) -> f64| recs.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
    out.scalar("atoms", mu.atoms.len());
    out.scalar("bound", recs.first().map_or(f64::NAN, |r| r.rhs));
    out.scalar("trace_deviation_max", max(&|r| (r.trace_h - 1.0).abs()));
    out.scalar("k_gap_min", -max(&|r| -r.k_gap));
    out.scalar("lhs_max", max(&|r| r.lhs));
    out.scalar("numeric_jacobian_max", max(&|r| r.numeric_jac));
    out.scalar("equivariance_max", max(&|r| r.equivariance));
    out.scalar("bound_violations", recs.iter().filter(|r| r.lhs > r.rhs).count());
    out.tables.push(t);
    Ok(())
}

fn parse_elements(g: &MarkedGroup, words: &[String]) -> Result<Vec<GroupElement>, RunError> {
    words
        .iter()
        .map(|w| ctx(&format!("element {w:?}"), g.parse_element(w)))
        .collect()
}

fn estimate_row(t: &mut ResultTable, e: &KazhdanEstimate) {
    t.push(vec![
        e.group.clone().into(),
        e.generators.join(" ").into(),
        e.kind.as_str().into(),
        e.radius.map_or(Cell::Text(String::new()), |r| r.into()),
        e.value.into(),
        e.gap.into(),
    ]);
}

fn kazhdan(_cfg: &ExperimentConfig, p: &KazhdanParams, out: &mut RunOutput) -> Result<(), RunError> {
    let g = ctx("group", MarkedGroup::parse(&p.group))?;
    let s = parse_elements(&g, &p.generators)?;
    let mut t = ResultTable::new("kazhdan", &["group", "S", "kind", "radius", "value", "gap"], &out.config_hash);
    if g.order().is_some() {
        let k = ctx("exact Kazhdan constant", kazhdan_exact(&g, &s))?;
        let l = ctx("lambda1", lambda1(&g, &s))?;
        estimate_row(&mut t, &k);
        out.scalar("lambda1", l);
        out.scalar("sandwich_lower", 2.0 / s.len() as f64 * l);
        out.scalar("sandwich_upper", 2.0 * l);
        out.scalar("kazhdan", k.value);
        if let Some(sub) = &p.subgroup {
            let fgens = parse_elements(&g, sub)?;
            let r = ctx("restriction check", restriction_check(&g, &fgens, &s, 0))?;
            let mut rt = ResultTable::new(
                "restriction",
                &["K_F", "K_G", "difference", "subgroup_order", "index", "coset_norm_error", "coset_excess"],
                &out.config_hash,
            );
            rt.push(vec![
                r.k_subgroup.value.into(),
                r.k_group.value.into(),
                r.difference.into(),
                r.subgroup_order.into(),
                r.index.into(),
                r.coset_norm_error.into(),
                r.coset_excess.into(),
            ]);
            out.tables.push(rt);
        }
    } else {
        for &r in p.radii.as_deref().unwrap_or(&[]) {
            let k = ctx(&format!("truncation at radius {r}"), kazhdan_truncated(&g, &s, r))?;
            estimate_row(&mut t, &k);
        }
        if let (Some(r), GroupKind::Free { rank }) = (p.kesten_radius, g.kind()) {
            let cert = ctx("operator-norm floor", kesten_lower_bound(*rank, r))?;
            estimate_row(&mut t, &cert.as_estimate());
            out.scalar("norm_estimate", cert.estimate);
            out.scalar("norm_limit", cert.limit);
            out.scalar("power_iteration_converged", cert.converged);
        }
    }
    out.tables.push(t);
    Ok(())
}

fn amenable(cfg: &ExperimentConfig, p: &AmenableParams, out: &mut RunOutput) -> Result<(), RunError> {
    let pts = ctx("torus masses", amenable_masses(&p.sides, cfg.quadrature_order))?;
    let mut t = ResultTable::new("amenable", &["L", "mass", "ratio", "folner_displacement"], &out.config_hash);
    for (k, &(l, m)) in pts.iter().enumerate() {
        let ratio = if k == 0 { f64::NAN } else { m / pts[k - 1].1 };
        t.push(vec![l.into(), m.into(), ratio.into(), folner_displacement(l).into()]);
    }
    let (exponent, prefactor) = ctx("power-law fit", power_law_fit(&pts))?;
    out.scalar("fit_exponent", exponent);
    out.scalar("fit_prefactor", prefactor);
    out.tables.push(t);
    Ok(())
}

fn thickness(cfg: &ExperimentConfig, p: &ThicknessParams, out: &mut RunOutput) -> Result<(), RunError> {
    let c = build_cycle(cfg.cycle.as_ref().unwrap(), cfg.seed)?;
    let total = ctx("mass", c.mass(cfg.quadrature_order))?.total;
    let prof = ctx("thick profile", thick_mass_profile(&c, &p.deltas, p.radius, p.sampling))?;
    let mut t = ResultTable::new("thickness", &["delta", "thick_mass", "fraction"], &out.config_hash);
    for (d, m) in prof {
        t.push(vec![d.into(), m.into(), (m / total).into()]);
    }
    out.scalar("mass", total);
    out.tables.push(t);
    Ok(())
}

fn witness_for(
    g: &MarkedGroup,
    kind: WitnessKind,
    pair: (&GroupElement, &GroupElement),
    radius: usize,
) -> Result<SphereVector, RunError> {
    match kind {
        WitnessKind::Dirac => ctx("dirac witness", SphereVector::dirac(g, g.identity())),
        WitnessKind::Axis => {
            let (root, _) = ctx("primitive root", primitive_root(g, pair.0))?;
            let inv = g.inv(&root);
            let mut support = vec![g.identity()];
            let (mut up, mut down) = (g.identity(), g.identity());
            for _ in 0..radius {
                up = ctx("axis", g.mul(&root, &up))?;
                down = ctx("axis", g.mul(&inv, &down))?;
                support.push(up.clone());
                support.push(down.clone());
            }
            ctx("axis witness", SphereVector::uniform(g, &support))
        }
        WitnessKind::Optimal => {
            let k = ctx("optimal witness", kazhdan_truncated(g, &[pair.0.clone(), pair.1.clone()], radius))?;
            k.witness
                .ok_or_else(|| RunError::Pipeline {
                    context: "optimal witness".into(),
                    source: PlateauError::InvalidArgument("optimizer returned no vector".into()),
                })
        }
    }
}

fn margulis(_cfg: &ExperimentConfig, p: &MargulisParams, out: &mut RunOutput) -> Result<(), RunError> {
    let g = ctx("free group", MarkedGroup::free(p.rank))?;
    let elements = parse_elements(&g, &p.elements)?;
    let mut witnesses = Vec::new();
    let mut t = ResultTable::new(
        "margulis",
        &["pair", "left", "right", "left_displacement", "right_displacement", "alpha"],
        &out.config_hash,
    );
    for (j, w) in elements.windows(2).enumerate() {
        let u = witness_for(&g, p.witness, (&w[0], &w[1]), p.witness_radius)?;
        let d = |x: &GroupElement| -> Result<f64, RunError> {
            ctx("displacement", plateau_core::act(x, &u).and_then(|m| plateau_core::chordal_distance(&m, &u)))
        };
        t.push(vec![
            j.into(),
            g.format_element(&w[0]).into(),
            g.format_element(&w[1]).into(),
            d(&w[0])?.into(),
            d(&w[1])?.into(),
            p.alpha.into(),
        ]);
        witnesses.push(u);
    }
    let chain = MargulisChain { elements, witnesses };
    let verdict = match margulis_chain_check(&g, &chain, p.alpha) {
        Ok(ChainVerdict::CommonCyclic { root }) => json!({"verdict": "common-cyclic", "root": g.format_element(&root)}),
        Ok(ChainVerdict::Violation { index, left, right }) => json!({
            "verdict": "violation",
            "pair": index,
            "left_root": g.format_element(&left),
            "right_root": g.format_element(&right),
        }),
        Err(PlateauError::InvalidWitness(msg)) => json!({"verdict": "invalid-witness", "detail": msg}),
        Err(e) => return Err(RunError::Pipeline { context: "chain check".into(), source: e }),
    };
    out.scalar("verdict", verdict);
    out.tables.push(t);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(text: &str) -> ExperimentConfig {
        ExperimentConfig::from_toml(text).unwrap()
    }

    #[test]
    fn kazhdan_restriction_table() {
        let c = cfg(r#"
kind = "kazhdan"
seed = 1
[kazhdan]
group = "cyclic 6"
generators = ["a^2"]
subgroup = ["a^2"]
"#);
        let out = run(&c).unwrap();
        let r = out.table("restriction").unwrap();
        assert!(r.reals("difference")[0] < 2e-5);
        assert!((r.reals("K_F")[0] - 3f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn runs_are_deterministic() {
        let text = r#"
kind = "minimize"
seed = 9
[minimize]
max_iters = 5
[cycle]
source = "octahedron"
perturbation = 0.05
"#;
        let a = run(&cfg(text)).unwrap();
        let b = run(&cfg(text)).unwrap();
        assert_eq!(a.tables[0].to_csv(), b.tables[0].to_csv());
        assert_eq!(a.summary(), b.summary());
        let m = a.tables[0].reals("mass");
        assert!(m.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn margulis_verdicts() {
        let base = |elements: &str, witness: &str, alpha: f64| {
            cfg(&format!(
                "kind = \"margulis-check\"\nseed = 0\n[margulis]\nelements = {elements}\nwitness = \"{witness}\"\nalpha = {alpha}\nwitness_radius = 100\n"
            ))
        };
        let out = run(&base("[\"a\", \"a^2\", \"A^3\"]", "axis", 0.5)).unwrap();
        assert_eq!(out.scalars["verdict"]["verdict"], "common-cyclic");
        assert_eq!(out.scalars["verdict"]["root"], "a");
        let out = run(&base("[\"a\", \"baB\"]", "dirac", 1.5)).unwrap();
        assert_eq!(out.scalars["verdict"]["verdict"], "violation");
        let out = run(&base("[\"a\", \"b\"]", "axis", 0.5)).unwrap();
        assert_eq!(out.scalars["verdict"]["verdict"], "invalid-witness");
    }

    #[test]
    fn amenable_table_has_ratios() {
        let out = run(&cfg("kind = \"amenable-collapse\"\nseed = 0\n[amenable]\nsides = [4, 8]\n")).unwrap();
        let r = out.table("amenable").unwrap().reals("ratio");
        assert!(r[0].is_nan() && r[1] < 0.75);
    }

    #[test]
    fn pullback_only_poisson_run() {
        let out = run(&cfg(
            "kind = \"surface-poisson\"\nseed = 0\n[surface_poisson]\nc = [1.5]\nradius = 2\nmesh_level = 1\npullback_only = true\npullback_samples = 2\n",
        ))
        .unwrap();
        assert!(out.tables[0].reals("rel_error")[0] < 1e-3);
    }
}
