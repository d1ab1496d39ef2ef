//! The individual commands. Each one returns a [`Report`]; errors are
//! input or configuration problems and map to exit code 2.

use kgraph_kms::fixtures::random_vertex_weights;
use kgraph_kms::kgraph::RhoMap;
use kgraph_kms::kms::{
    affine_defect, check_kms, compare_restrictions, critical_sequence, default_schedule, ground_state, make_kms_state,
    measure_from_vertex_vector, monomial_basis, obstruction_value, preferred_r, restrict_to_toeplitz,
    simplex_roundtrip, toeplitz_samples, GroundState, SplitStrategy, KMS_TOL, ROUNDTRIP_TOL,
};
use kgraph_kms::nt::{check_tck, Calculus, NtElement};
use kgraph_kms::pathspace::{
    flip, flip_sum, marginalize, pullback, shifted_frame, standard_frame, tensors_equal, CylinderFunction,
    CylinderMeasure,
};
use kgraph_kms::representations::{
    check_ck, check_formula_fock, check_help_formula, check_kernel_generator, check_lemma_positive,
    check_nica_covariance, compare_on_window, fock_apply_element, tck4_strictness, FockFactor, FockOp, WindowCheck,
};
use kgraph_kms::thermo::{check_subinvariance, critical_temperatures, f_beta, f_beta_series, Dynamics, GELFAND_SCHEDULE};
use kgraph_kms::{Degree, Exact, KGraph, Numeric, Weight};
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::report::Report;
use crate::{parse_beta, parse_degree, parse_r, CliError, Command, Config};

type Result<T> = std::result::Result<T, CliError>;

fn fail<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Config(e.to_string())
}

pub fn execute(command: Command, cfg: &Config, g: &KGraph) -> Result<Report> {
    let mut rep = Report::new(command.name(), cfg.to_json(command));
    let validation = g.validate();
    let failures: Vec<Value> = validation
        .failures
        .iter()
        .map(|f| json!({ "axiom": f.axiom, "witness": f.witness }))
        .collect();
    rep.flag("axioms", json!({}), Value::Array(failures), validation.is_valid());
    if !validation.is_valid() {
        return Ok(rep);
    }
    rep.set("graph", graph_summary(g));
    match command {
        Command::Validate => validate(g, &mut rep),
        Command::Coaligned => coaligned(g, &mut rep),
        Command::Spectra => spectra(g, &mut rep),
        Command::Fbeta => fbeta(cfg, g, &mut rep)?,
        Command::Kms => kms(cfg, g, &mut rep)?,
        Command::Ground => ground(cfg, g, &mut rep)?,
        Command::Critical => critical(cfg, g, &mut rep)?,
        Command::Verify => verify(cfg, g, &mut rep)?,
        Command::Restrict => restrict(cfg, g, &mut rep)?,
        Command::Measure => measure(cfg, g, &mut rep)?,
    }
    Ok(rep)
}

fn graph_summary(g: &KGraph) -> Value {
    let mats: Vec<Vec<Vec<u64>>> = g
        .vertex_matrices()
        .mats
        .iter()
        .map(|m| (0..m.nrows()).map(|r| (0..m.ncols()).map(|c| m[(r, c)]).collect()).collect())
        .collect();
    json!({
        "k": g.k(),
        "vertices": (0..g.num_vertices()).map(|v| g.vertex_name(v)).collect::<Vec<_>>(),
        "edges": g.edges().len(),
        "vertex_matrices": mats,
    })
}

fn deg_json(d: &Degree) -> Value {
    json!(d.entries())
}

fn dynamics(cfg: &Config, g: &KGraph) -> Result<Dynamics<f64>> {
    let beta = parse_beta(cfg.beta.as_deref().ok_or_else(|| fail("--beta is required"))?)?;
    let r = match parse_r(cfg.r.as_deref().unwrap_or("preferred"), g.k())? {
        Some(r) => r,
        None => preferred_r(g).map_err(fail)?,
    };
    let dy = Dynamics::new(beta, r);
    dy.check_admissible(&critical_temperatures::<f64>(g, &[]).beta_c).map_err(fail)?;
    Ok(dy)
}

fn dynamics_json(dy: &Dynamics<f64>) -> Value {
    json!({ "beta": dy.beta, "r": dy.r })
}

fn degree_or(cfg: &Option<String>, g: &KGraph, default: Degree) -> Result<Degree> {
    match cfg {
        Some(s) => parse_degree(s, g.k()),
        None => Ok(default),
    }
}

fn rng(cfg: &Config) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(cfg.seed)
}

fn validate(g: &KGraph, rep: &mut Report) {
    rep.flag("vertex_matrices_commute", json!({}), json!(g.vertex_matrices().commute()), g.vertex_matrices().commute());
}

fn coaligned(g: &KGraph, rep: &mut Report) {
    let c = g.is_one_coaligned();
    let witness = c.witness.map(|(l, m, count)| {
        json!({ "lambda": g.edges()[l].name, "mu": g.edges()[m].name, "completions": count })
    });
    rep.flag("one_coaligned", json!({}), json!({ "coaligned": c.coaligned, "witness": witness }), c.coaligned);
    if let Ok(maps) = g.rho_f_maps() {
        let list: Vec<Value> = maps
            .iter()
            .map(|(f, map)| {
                let images: Vec<&str> = map.images().iter().map(|&e| g.edges()[e].name.as_str()).collect();
                json!({ "f": g.edges()[*f].name, "images": images, "bijection": matches!(map, RhoMap::Bijection(_)) })
            })
            .collect();
        rep.set("rho_maps", Value::Array(list));
    }
}

fn spectra(g: &KGraph, rep: &mut Report) {
    let ct = critical_temperatures::<f64>(g, &GELFAND_SCHEDULE);
    for (i, sched) in ct.gelfand.iter().enumerate() {
        let &(j, est) = sched.last().expect("schedule is nonempty");
        rep.within("gelfand_estimate", json!({ "color": i + 1, "j": j }), est - ct.beta_c[i], 5e-3);
    }
    rep.set("spectral_radii", json!(ct.spectral_radii));
    rep.set("beta_c", json!(ct.beta_c));
    rep.set("gelfand", json!(ct.gelfand));
}

fn fbeta(cfg: &Config, g: &KGraph, rep: &mut Report) -> Result<()> {
    let dy = dynamics(cfg, g)?;
    let f = f_beta(g, &dy).map_err(fail)?;
    let tol = cfg.tol.unwrap_or(1e-10);
    let (series, bound) = f_beta_series(g, &dy, tol * 1e-2).map_err(fail)?;
    let diff = f.iter().zip(series.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    rep.within("fbeta_series_agreement", json!({ "tail_bound": bound }), diff, tol);
    let min = f.iter().copied().fold(f64::INFINITY, f64::min);
    rep.at_least("fbeta_at_least_one", json!({}), min, 1.0);
    let beta_c = critical_temperatures::<f64>(g, &[]).beta_c;
    rep.set("dynamics", dynamics_json(&dy));
    rep.set("beta_c", json!(beta_c));
    rep.set("margins", json!(dy.margins(&beta_c)));
    rep.set("f_beta", json!(f.as_slice()));
    Ok(())
}

/// A raw ε: random vertex weights split randomly down to level lD.
fn random_raw_measure(cfg: &Config, g: &KGraph, seed: u64) -> Result<CylinderMeasure<f64>> {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let eps = random_vertex_weights(&mut r, g.num_vertices());
    measure_from_vertex_vector(g, &eps, SplitStrategy::Random(seed), cfg.levels).map_err(fail)
}

fn kms(cfg: &Config, g: &KGraph, rep: &mut Report) -> Result<()> {
    let dy = dynamics(cfg, g)?;
    let k = g.k();
    let ones = Degree::ones(k);
    let top = ones.scale(cfg.levels);
    let depth = degree_or(&cfg.depth, g, top.clone())?;
    let tol = cfg.tol.unwrap_or(KMS_TOL);
    let raw = random_raw_measure(cfg, g, cfg.seed)?;
    let state = make_kms_state(g, &raw, &dy).map_err(fail)?;

    let kr = check_kms(g, &state, &ones, &depth).map_err(fail)?;
    let params = json!({ "max_mn": deg_json(&ones), "depth": deg_json(&depth), "basis": kr.basis_size, "pairs": kr.pairs });
    rep.push(
        "kms_relation",
        params.clone(),
        json!({ "worst": kr.worst_relation, "witness": kr.relation_witness }),
        Some(tol),
        kr.worst_relation <= tol,
    );
    rep.within("kms_normalization", json!({}), kr.normalization - 1.0, tol);
    rep.push(
        "kms_positivity",
        params,
        json!({ "min": kr.positivity_min, "witness": kr.positivity_witness }),
        Some(tol),
        kr.positivity_min >= -tol,
    );

    // recovering ε at p reads μ, hence ε, at p + e_J
    let inner = ones.scale(cfg.levels.saturating_sub(1));
    let levels = inner.box_below();
    let rt = simplex_roundtrip(g, &state, &levels).map_err(fail)?;
    rep.within("simplex_roundtrip", json!({ "levels": deg_json(&inner) }), rt.max_error, ROUNDTRIP_TOL);

    let mu = state.mu(g, &levels).map_err(fail)?;
    for p in &levels {
        let sub = check_subinvariance(g, &mu, &dy, p, tol).map_err(fail)?;
        for e in &sub.entries {
            rep.at_least("subinvariance", json!({ "level": deg_json(p), "colors": e.colors }), e.min_value, -tol);
        }
    }
    let mass = mu.total_mass(g).map_err(fail)?;
    rep.within("mu_probability", json!({}), mass - 1.0, ROUNDTRIP_TOL);

    // φ(Π(1 − Q_{e_i}) ψ_0(χ_v)) = ε(Z(v)) > 0 at admissible β
    let eps0 = state.eps.level(g, &Degree::zero(k)).map_err(fail)?;
    for v in 0..g.num_vertices() {
        let a = CylinderFunction::<Numeric>::indicator(g, &g.vertex_path(v)).map_err(fail)?;
        let got = obstruction_value(g, &state, &a).map_err(fail)?;
        rep.within("obstruction", json!({ "vertex": g.vertex_name(v) }), (got - eps0[v]).norm(), tol);
        rep.at_least("obstruction_positive", json!({ "vertex": g.vertex_name(v) }), got.re, f64::MIN_POSITIVE);
    }

    let other = make_kms_state(g, &random_raw_measure(cfg, g, cfg.seed.wrapping_add(1))?, &dy).map_err(fail)?;
    let samples: Vec<NtElement<Numeric>> = monomial_basis(g, &ones, &top)
        .map_err(fail)?
        .iter()
        .take(cfg.samples.max(1) * 10)
        .map(|m| m.element(g))
        .collect::<std::result::Result<_, _>>()
        .map_err(fail)?;
    let defect = affine_defect(g, &state, &other, 0.3, &top.box_below(), &samples).map_err(fail)?;
    rep.within("affine", json!({ "t": 0.3, "samples": samples.len() }), defect, tol);

    rep.set("dynamics", dynamics_json(&dy));
    rep.set("normalizer", json!(state.normalizer));
    rep.set("eps", levels_json(g, &state.eps, &levels)?);
    rep.set("mu", levels_json(g, &mu, &levels)?);
    Ok(())
}

fn levels_json<W: Weight>(g: &KGraph, m: &CylinderMeasure<W>, levels: &[Degree]) -> Result<Value> {
    let mut out = Vec::new();
    for p in levels {
        let w: Vec<f64> = m.level(g, p).map_err(fail)?.iter().map(|x| x.as_f64()).collect();
        out.push(json!({ "level": deg_json(p), "weights": w }));
    }
    Ok(Value::Array(out))
}

fn ground(cfg: &Config, g: &KGraph, rep: &mut Report) -> Result<()> {
    let k = g.k();
    let ones = Degree::ones(k);
    let top = ones.scale(cfg.levels);
    let raw = random_raw_measure(cfg, g, cfg.seed)?;
    let mass = raw.total_mass(g).map_err(fail)?;
    let eps = raw.scale(&(1.0 / mass));
    let gs: GroundState = ground_state(g, &eps).map_err(fail)?;
    let basis = monomial_basis(g, &ones, &top).map_err(fail)?;
    let elems: Vec<NtElement<Numeric>> =
        basis.iter().map(|m| m.element(g)).collect::<std::result::Result<_, _>>().map_err(fail)?;

    let mut worst: f64 = 0.0;
    let mut count = 0;
    for (m, e) in basis.iter().zip(&elems) {
        if m.m.is_zero() && m.n.is_zero() {
            continue;
        }
        count += 1;
        worst = worst.max(gs.eval(g, e).map_err(fail)?.norm());
    }
    rep.within("ground_vanishing", json!({ "samples": count }), worst, 0.0);

    let r = match parse_r(cfg.r.as_deref().unwrap_or("1"), k)? {
        Some(r) => r,
        None => preferred_r(g).map_err(fail)?,
    };
    let beta_c = critical_temperatures::<f64>(g, &[]).beta_c;
    let tol = cfg.tol.unwrap_or(1e-6);
    let mut sweep = Vec::new();
    for beta in [5.0, 10.0, 20.0, 40.0] {
        let dy = Dynamics::new(beta, r.clone());
        if dy.check_admissible(&beta_c).is_err() {
            sweep.push(json!({ "beta": beta, "admissible": false }));
            continue;
        }
        let state = make_kms_state(g, &raw, &dy).map_err(fail)?;
        let mut diff: f64 = 0.0;
        for e in &elems {
            diff = diff.max((state.eval(g, e).map_err(fail)? - gs.eval(g, e).map_err(fail)?).norm());
        }
        sweep.push(json!({ "beta": beta, "admissible": true, "max_diff": diff }));
        if beta == 40.0 {
            rep.within("kms_infinity_limit", json!({ "beta": beta, "samples": elems.len() }), diff, tol);
        }
    }
    if !sweep.iter().any(|s| s["beta"] == 40.0 && s["admissible"] == true) {
        rep.flag("kms_infinity_limit", json!({ "beta": 40.0 }), json!("inadmissible"), false);
    }
    rep.set("sweep", Value::Array(sweep));
    rep.set("r", json!(r));
    Ok(())
}

fn critical(cfg: &Config, g: &KGraph, rep: &mut Report) -> Result<()> {
    let k = g.k();
    let schedule = default_schedule();
    let ns: Vec<Degree> = (0..k).map(|i| Degree::unit(k, i)).collect();
    let cr = critical_sequence(g, &schedule, &ns).map_err(fail)?;
    let threshold = 1e5;
    let tol = cfg.tol.unwrap_or(1e-3);
    rep.flag("f_u_increasing", json!({}), json!(cr.increasing), cr.increasing);
    let j10 = &cr.steps[10];
    rep.at_least("f_u_threshold", json!({ "j": 10, "beta": j10.beta }), j10.f_u, threshold);
    let last = cr.steps.last().expect("schedule is nonempty");
    for (n, v) in &last.vanishing {
        rep.at_least("vanishing", json!({ "n": deg_json(n), "j": cr.steps.len() - 1 }), *v, 1.0 - tol);
    }
    let steps: Vec<Value> = cr
        .steps
        .iter()
        .map(|s| {
            let van: Vec<Value> = s.vanishing.iter().map(|(n, v)| json!({ "n": deg_json(n), "value": v })).collect();
            json!({ "beta": s.beta, "f_u": s.f_u, "vanishing": van })
        })
        .collect();
    rep.set("r", json!(cr.r));
    rep.set("u", json!({ "prefix": cr.prefix, "cycle": cr.cycle }));
    rep.set("steps", Value::Array(steps));
    Ok(())
}

fn window_check(rep: &mut Report, c: &WindowCheck, expect_pass: bool) {
    let witness = c.witness.as_ref().map(|(p, l)| json!({ "degree": deg_json(p), "path": format!("{l:?}") }));
    let params = json!({ "window": deg_json(&c.window), "depth": deg_json(&c.depth) });
    let name = c.name.split_whitespace().next().unwrap_or(&c.name).to_string();
    let mut params = params;
    for kv in c.name.split_whitespace().skip(1) {
        if let Some((key, v)) = kv.split_once('=') {
            params[key] = json!(v);
        }
    }
    rep.flag(&name, params, json!({ "cases": c.cases, "witness": witness }), c.pass() == expect_pass && c.cases > 0);
}

fn verify(cfg: &Config, g: &KGraph, rep: &mut Report) -> Result<()> {
    let k = g.k();
    let coal = g.is_one_coaligned();
    rep.flag("one_coaligned", json!({}), json!(coal.coaligned), coal.coaligned);
    if !coal.coaligned {
        return Ok(());
    }
    let ones = Degree::ones(k);
    let window = degree_or(&cfg.window, g, ones.scale(2))?;
    let depth = degree_or(&cfg.depth, g, ones.clone())?;
    let units: Vec<Degree> = (0..k).map(|i| Degree::unit(k, i)).collect();
    let chis = |d: &Degree| -> Result<Vec<CylinderFunction<Exact>>> {
        let lv = g.level(d).map_err(fail)?;
        lv.paths.iter().map(|p| CylinderFunction::indicator(g, p).map_err(fail)).collect()
    };

    for m in ones.box_below() {
        let frame = standard_frame::<Exact>(g, &m).map_err(fail)?;
        let xs: Vec<_> = chis(&(&m + &depth))?.into_iter().map(|x| x.in_fiber(m.clone())).collect();
        let w = frame.parseval_witness(g, &xs).map_err(fail)?;
        rep.flag("parseval_standard", json!({ "m": deg_json(&m) }), json!({ "cases": xs.len(), "witness": w }), w.is_none());
    }
    for m in &units {
        for n in &units {
            if m == n {
                continue;
            }
            let frame = shifted_frame::<Exact>(g, m, n).map_err(fail)?;
            let xs: Vec<_> = chis(&(m + &depth))?.into_iter().map(|x| x.in_fiber(m.clone())).collect();
            let w = frame.parseval_witness(g, &xs).map_err(fail)?;
            let params = json!({ "m": deg_json(m), "n": deg_json(n) });
            rep.flag("parseval_shifted", params, json!({ "cases": xs.len(), "witness": w }), w.is_none());

            // flip(χ_ξ∘σ^n ⊗ χ_η) = χ_η∘σ^m ⊗ χ_ξ, and flip∘flip = id
            let (mut cases, mut bad, mut involutive) = (0, None, true);
            for xi in chis(m)? {
                for eta in chis(n)? {
                    let x = pullback(g, &xi, n).map_err(fail)?;
                    let got = flip(g, &x, &eta).map_err(fail)?;
                    let want = vec![(pullback(g, &eta, m).map_err(fail)?, xi.clone())];
                    cases += 1;
                    if !tensors_equal(g, &got, &want).map_err(fail)? && bad.is_none() {
                        bad = Some(cases - 1);
                    }
                    let back = flip_sum(g, &got).map_err(fail)?;
                    involutive &= tensors_equal(g, &back, &[(x, eta)].to_vec()).map_err(fail)?;
                }
            }
            let params = json!({ "m": deg_json(m), "n": deg_json(n) });
            rep.flag("flip_formula", params.clone(), json!({ "cases": cases, "witness": bad }), bad.is_none());
            rep.flag("flip_involution", params, json!(involutive), involutive);

            let pairs: Vec<_> = chis(m)?
                .into_iter()
                .flat_map(|x| chis(n).unwrap_or_default().into_iter().map(move |y| (x.clone(), y)))
                .take(cfg.samples.max(1))
                .collect();
            let mut help_ok = true;
            for (x, y) in &pairs {
                help_ok &= check_help_formula(g, x, y).map_err(fail)?;
                let c = check_formula_fock(g, x, y, &window, &depth).map_err(fail)?;
                window_check(rep, &c, true);
            }
            rep.flag("help_formula", json!({ "m": deg_json(m), "n": deg_json(n) }), json!(pairs.len()), help_ok);
        }
    }

    let small = ones.box_below();
    for m in &small {
        for p in &small {
            let c = check_nica_covariance::<Exact>(g, m, p, &window, &depth).map_err(fail)?;
            window_check(rep, &c, true);
        }
        if !m.is_zero() {
            let c = check_lemma_positive::<Exact>(g, m, &window, &depth).map_err(fail)?;
            window_check(rep, &c, true);
        }
    }

    for rc in check_tck::<Exact>(g, &ones).map_err(fail)? {
        let w = rc.witness.clone();
        rep.flag(rc.relation, json!({ "max": deg_json(&ones) }), json!({ "cases": rc.cases, "witness": w }), rc.pass());
    }
    let zero = Degree::zero(k);
    for v in 0..g.num_vertices() {
        let c = tck4_strictness::<Exact>(g, v, &ones, &window, &zero).map_err(fail)?;
        let at_zero = c.witness.as_ref().is_some_and(|(p, l)| p.is_zero() && l.is_vertex());
        let witness = c.witness.as_ref().map(|(p, l)| json!({ "degree": deg_json(p), "path": g.path_name(l) }));
        rep.flag(
            "tck4_strict",
            json!({ "v": g.vertex_name(v), "n": deg_json(&ones) }),
            json!({ "cases": c.cases, "witness": witness }),
            at_zero,
        );
        let c = check_ck::<Exact>(g, v, &ones, &depth).map_err(fail)?;
        window_check(rep, &c, true);
        let a = CylinderFunction::<Exact>::indicator(g, &g.vertex_path(v)).map_err(fail)?;
        for m in small.iter().filter(|m| !m.is_zero()) {
            let c = check_kernel_generator(g, &a, m, &depth).map_err(fail)?;
            window_check(rep, &c, true);
        }
    }
    // the calculus against the Fock representation on S_μ*S_λ
    let calc = Calculus::<Exact>::new(g).map_err(fail)?;
    for m in &units {
        for n in &units {
            let (lm, ln) = (g.level(m).map_err(fail)?, g.level(n).map_err(fail)?);
            let a = NtElement::<Exact>::s(g, &lm.paths[0]).map_err(fail)?;
            let b = NtElement::<Exact>::s(g, &ln.paths[0]).map_err(fail)?;
            let prod = calc.multiply(&b.adjoint(), &a).map_err(fail)?;
            let word = FockOp::word(vec![FockFactor::Element(b.adjoint()), FockFactor::Element(a)]);
            let mut c = compare_on_window(
                g,
                "calculus_vs_fock",
                &window,
                &depth,
                &m.join(n),
                |v| word.apply(g, v),
                |v| fock_apply_element(g, &prod, v),
            )
            .map_err(fail)?;
            c.name = format!("calculus_vs_fock m={m} n={n}");
            window_check(rep, &c, true);
        }
    }
    Ok(())
}

fn restrict(cfg: &Config, g: &KGraph, rep: &mut Report) -> Result<()> {
    let dy = dynamics(cfg, g)?;
    let k = g.k();
    let ones = Degree::ones(k);
    let tol = cfg.tol.unwrap_or(KMS_TOL);
    let y = f_beta(g, &dy).map_err(fail)?;
    let mut r = rng(cfg);
    let mut dots = Vec::new();
    let mut first = None;
    for i in 0..cfg.samples.max(1) {
        let eps = random_vertex_weights(&mut r, g.num_vertices());
        let norm: f64 = eps.iter().zip(y.iter()).map(|(a, b)| a * b).sum();
        let eps: Vec<f64> = eps.iter().map(|x| x / norm).collect();
        let split = SplitStrategy::Random(r.gen());
        let delta = measure_from_vertex_vector(g, &eps, split, cfg.levels).map_err(fail)?;
        let rr = restrict_to_toeplitz(g, &delta, &dy, &ones).map_err(fail)?;
        rep.within("y_dot_eps", json!({ "sample": i }), rr.y_dot_eps - 1.0, ROUNDTRIP_TOL);
        rep.within("toeplitz_formula", json!({ "sample": i, "monomials": rr.samples }), rr.toeplitz_defect, tol);
        dots.push(rr.y_dot_eps);
        if first.is_none() {
            first = Some(eps);
        }
    }
    let eps = first.expect("at least one sample");
    let d1 = measure_from_vertex_vector(g, &eps, SplitStrategy::Uniform, cfg.levels).map_err(fail)?;
    let d2 = measure_from_vertex_vector(g, &eps, SplitStrategy::Random(cfg.seed), cfg.levels).map_err(fail)?;
    let cmp = compare_restrictions(g, &d1, &d2, &dy, &ones, &ones).map_err(fail)?;
    let samples = toeplitz_samples(g, &ones).map_err(fail)?.len();
    rep.within("restriction_equal", json!({ "samples": samples }), cmp.toeplitz_max_diff, tol);
    rep.push(
        "deep_terms_differ",
        json!({ "depth": deg_json(&ones) }),
        json!({ "max_diff": cmp.deep_max_diff, "witness": cmp.deep_witness }),
        Some(tol),
        cmp.deep_max_diff > tol,
    );
    rep.set("dynamics", dynamics_json(&dy));
    rep.set("y", json!(y.as_slice()));
    rep.set("y_dot_eps", json!(dots));
    Ok(())
}

fn measure(cfg: &Config, g: &KGraph, rep: &mut Report) -> Result<()> {
    let mut r = rng(cfg);
    let eps: Vec<BigRational> =
        (0..g.num_vertices()).map(|_| BigRational::new(r.gen_range(1..=9).into(), 10.into())).collect();
    let top = Degree::ones(g.k()).scale(cfg.levels);
    let zero = Degree::zero(g.k());
    let mut out = serde_json::Map::new();
    for (name, strategy) in [("uniform", SplitStrategy::Uniform), ("perron", SplitStrategy::Perron)] {
        let m = measure_from_vertex_vector(g, &eps, strategy, cfg.levels).map_err(fail)?;
        let defect = m.consistency_defect(g).map_err(fail)?;
        rep.flag(
            "consistency",
            json!({ "strategy": name, "top": deg_json(&top) }),
            json!(defect.to_f64()),
            defect.is_zero(),
        );
        let marginal = marginalize(g, &m.level(g, &top).map_err(fail)?, &top, &zero).map_err(fail)?;
        let exact = marginal == eps;
        rep.flag("vertex_marginal", json!({ "strategy": name }), json!(exact), exact);
        let sizes: Vec<Value> = m
            .stored_levels()
            .iter()
            .map(|p| json!({ "level": deg_json(p), "cylinders": g.level(p).map(|l| l.len()).unwrap_or(0) }))
            .collect();
        out.insert(name.to_string(), json!({ "levels": sizes }));
    }
    let eps_f: Vec<f64> = eps.iter().map(|x| x.to_f64().unwrap_or(f64::NAN)).collect();
    rep.set("eps", json!(eps_f));
    rep.set("strategies", Value::Object(out));
    Ok(())
}
