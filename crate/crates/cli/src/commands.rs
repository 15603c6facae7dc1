//! Dispatch of CLI commands onto spencer-core.

use serde_json::{json, Value};
use spencer_core::intransitive_algebra::{
    bracket_table, classify_plane_rank1, normal_form_equation, plane_symbol_generator, PlaneCase,
};
use spencer_core::jet_groupoid::{pushforward_equation, verify_formal_isomorphism, GroupoidSection, TransversalData};
use spencer_core::jet_space::JetSection;
use spencer_core::lie_equations::{relation, EquationSpec, LinearLieEquation, Verdict};
use spencer_core::partial_connections::PartialConnectionData;
use spencer_core::spencer_symbols::{symbol_basis, two_acyclicity, SymbolSpace};
use spencer_core::{Error, MultiIndex, Series};

use crate::dsl::{linear_string, EquationDecl, JetCoord, ProblemSpec};
use crate::report::{Report, Status};
use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Prolong,
    Symbol,
    CheckIntegrability,
    BracketTable,
    ClassifyPlane,
    VerifyIso,
    SpencerD,
    ConnectionCurvature,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Prolong => "prolong",
            Command::Symbol => "symbol",
            Command::CheckIntegrability => "check-integrability",
            Command::BracketTable => "bracket-table",
            Command::ClassifyPlane => "classify-plane",
            Command::VerifyIso => "verify-iso",
            Command::SpencerD => "spencer-d",
            Command::ConnectionCurvature => "connection-curvature",
        }
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct RunArgs {
    pub depth: Option<usize>,
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

pub fn build_equation(spec: &ProblemSpec, e: &EquationDecl) -> Result<LinearLieEquation, CliError> {
    let fiber = spec.distribution.vars.clone();
    let n = spec.dim;
    if e.relations.is_empty() {
        return Ok(LinearLieEquation::full(n, n, e.order, spec.truncation, fiber.clone(), fiber));
    }
    let relations = e
        .relations
        .iter()
        .map(|r| relation(r.terms.iter().map(|(c, s)| (c.comp, c.alpha.clone(), s.clone())).collect()))
        .collect();
    LinearLieEquation::build(EquationSpec {
        n_base: n,
        n_vars: n,
        order: e.order,
        trunc: spec.truncation,
        ambient: fiber.clone(),
        fiber_vars: fiber,
        relations,
    })
    .map_err(|err| CliError::Equation(e.name.clone(), err))
}

fn equations(spec: &ProblemSpec) -> Result<Vec<(String, LinearLieEquation)>, CliError> {
    if spec.equations.is_empty() {
        return Err(usage("the problem file declares no equation"));
    }
    spec.equations.iter().map(|e| Ok((e.name.clone(), build_equation(spec, e)?))).collect()
}

fn find_equation(spec: &ProblemSpec, name: &str) -> Result<LinearLieEquation, CliError> {
    let e = spec
        .equations
        .iter()
        .find(|e| e.name == name)
        .ok_or_else(|| usage(format!("unknown equation '{name}'")))?;
    build_equation(spec, e)
}

/// Relations of `r` in solved form, as DSL text.
pub fn relation_strings(spec: &ProblemSpec, r: &LinearLieEquation) -> Vec<String> {
    r.rows
        .iter()
        .map(|row| {
            let terms: Vec<(JetCoord, Series)> = row
                .iter()
                .enumerate()
                .filter(|(_, s)| !s.is_zero())
                .map(|(i, s)| (JetCoord { comp: r.coords[i].comp, alpha: r.coords[i].alpha.clone() }, s.clone()))
                .collect();
            spec.relation_string(&terms)
        })
        .collect()
}

fn symbol_strings(spec: &ProblemSpec, g: &SymbolSpace) -> Vec<String> {
    let basis = symbol_basis(g.n_base, g.order);
    let names: Vec<String> = basis
        .iter()
        .map(|b| {
            let c = JetCoord { comp: b.comp, alpha: b.alpha.clone() };
            spec.coord_name(&c).replacen('p', "f", 1)
        })
        .collect();
    g.basis
        .iter()
        .map(|v| {
            let consts: Vec<Series> = v.iter().map(|c| Series::constant(spec.dim, 0, c.clone())).collect();
            linear_string(consts.iter().zip(names.iter().map(String::as_str)), &spec.vars)
        })
        .collect()
}

fn index_string(a: &MultiIndex) -> String {
    let v: Vec<String> = a.0.iter().map(|x| x.to_string()).collect();
    format!("[{}]", v.join(","))
}

/// Nonzero entries of a jet section as table rows.
fn jet_rows(spec: &ProblemSpec, s: &JetSection, extra: &[(&str, String)]) -> Vec<Value> {
    let mut rows = Vec::new();
    for a in s.indices() {
        for i in 0..s.n_base {
            let v = s.get(i, &a);
            if v.is_zero() {
                continue;
            }
            let mut m = serde_json::Map::new();
            for (k, x) in extra {
                m.insert(k.to_string(), json!(x));
            }
            m.insert("entry".into(), json!(format!("{}{}", spec.vars[i], index_string(&a))));
            m.insert("value".into(), json!(spec.series_string(v)));
            rows.push(Value::Object(m));
        }
    }
    rows
}

fn jet_from_entries<'a>(
    spec: &ProblemSpec,
    order: usize,
    entries: impl Iterator<Item = (&'a JetCoord, &'a Series)>,
) -> JetSection {
    let mut s = JetSection::zero(spec.dim, spec.dim, order, spec.truncation);
    for (c, v) in entries {
        s.set(c.comp, &c.alpha, v.clone());
    }
    s
}

fn check_transversal(spec: &ProblemSpec) -> Result<Vec<usize>, CliError> {
    if let Some(t) = &spec.transversal {
        if t.vars != spec.distribution.vars {
            return Err(usage(format!(
                "transversal {} must be {{fiber coordinates = 0}} for the distribution {}",
                t.name, spec.distribution.name
            )));
        }
    }
    Ok(spec.distribution.vars.clone())
}

pub fn run_command(spec: &ProblemSpec, cmd: Command, args: RunArgs) -> Result<Report, CliError> {
    let mut rep = Report::new(cmd.name());
    match cmd {
        Command::Prolong => {
            let depth = args.depth.unwrap_or(1);
            for (name, r) in equations(spec)? {
                let mut steps = Vec::new();
                let mut cur = r;
                for d in 0..=depth {
                    if d > 0 {
                        cur = cur.prolong()?;
                    }
                    steps.push(json!({
                        "order": cur.order,
                        "fiber_dim": cur.fiber_dim(),
                        "symbol_dim": cur.symbol()?.dim(),
                        "relations": cur.rows.len(),
                    }));
                }
                rep.push(json!({
                    "equation": name,
                    "depth": depth,
                    "steps": steps,
                    "relations": relation_strings(spec, &cur),
                }));
            }
        }
        Command::Symbol => {
            let depth = args.depth.unwrap_or(2);
            for (name, r) in equations(spec)? {
                let g = r.symbol()?;
                let acyc = two_acyclicity(&g, depth)?;
                rep.push(json!({
                    "equation": name,
                    "order": g.order,
                    "dim": g.dim(),
                    "basis": symbol_strings(spec, &g),
                    "prolonged_dims": acyc.prolonged_dims,
                    "two_acyclic": acyc.two_acyclic,
                }));
            }
        }
        Command::CheckIntegrability => {
            let depth = args.depth.unwrap_or(3);
            for (name, r) in equations(spec)? {
                let ir = r.check_formal_integrability(depth)?;
                if ir.verdict != Verdict::FormallyIntegrable {
                    rep.status = Status::Negative;
                }
                let fiber_dims: Vec<usize> =
                    std::iter::once(ir.fiber_dim).chain(ir.steps.iter().map(|s| s.fiber_dim)).collect();
                let steps: Vec<Value> = ir
                    .steps
                    .iter()
                    .map(|s| {
                        json!({
                            "order": s.order,
                            "fiber_dim": s.fiber_dim,
                            "symbol_dim": s.symbol_dim,
                            "surjective": s.surjective,
                        })
                    })
                    .collect();
                rep.push(json!({
                    "equation": name,
                    "order": ir.order,
                    "verdict": ir.verdict.to_string(),
                    "symbol_dims": ir.symbol_dims(),
                    "fiber_dims": fiber_dims,
                    "two_acyclic": ir.acyclicity.two_acyclic,
                    "steps": steps,
                }));
            }
        }
        Command::BracketTable => {
            check_transversal(spec)?;
            let depth = args.depth.unwrap_or(1).max(1);
            for (name, r) in equations(spec)? {
                let order = r.order + depth;
                let alg = bracket_table(&r, order).map_err(|e| match e {
                    Error::Dimension(m) => usage(m),
                    other => other.into(),
                })?;
                let labels: Vec<&str> = alg.targets.iter().map(|g| g.label.as_str()).collect();
                let table: Vec<Value> = alg
                    .table
                    .iter()
                    .map(|e| {
                        json!({
                            "pair": format!("[[{}, {}]]", alg.generators[e.i].label, alg.generators[e.j].label),
                            "bracket": linear_string(e.coeffs.iter().zip(labels.iter().copied()), &spec.vars),
                            "coefficients": e.coeffs.iter().map(|s| spec.series_string(s)).collect::<Vec<_>>(),
                        })
                    })
                    .collect();
                rep.push(json!({
                    "equation": name,
                    "order": order,
                    "generators": alg.generators.iter().map(|g| g.label.clone()).collect::<Vec<_>>(),
                    "targets": labels,
                    "table": table,
                }));
            }
        }
        Command::ClassifyPlane => {
            if spec.dim != 2 || spec.distribution.vars != [1] {
                return Err(usage(format!(
                    "classify-plane needs a plane with V = span(d/d{})",
                    spec.vars.get(1).map(String::as_str).unwrap_or("y")
                )));
            }
            check_transversal(spec)?;
            for (name, r) in equations(spec)? {
                let (a, b) = plane_symbol_generator(&r).map_err(|e| match e {
                    Error::Dimension(m) => usage(format!("equation {name}: {m}")),
                    other => other.into(),
                })?;
                let c = classify_plane_rank1(&a, &b)?;
                let nf = normal_form_equation(&c, spec.truncation)?;
                rep.push(json!({
                    "equation": name,
                    "symbol": linear_string([(&a, "f[1,0]"), (&b, "f[0,1]")].into_iter(), &spec.vars),
                    "case": match c.case { PlaneCase::Case1 => "Case1", PlaneCase::Case2 => "Case2" },
                    "valuation": c.valuation,
                    "beta": spec.series_string(&c.beta),
                    "precision": c.precision,
                    "normal_form": relation_strings(spec, &nf),
                    "solution_family": family_note(spec, c.case, c.valuation),
                }));
            }
        }
        Command::VerifyIso => {
            let fiber = check_transversal(spec)?;
            let sd = spec.sections.first().ok_or_else(|| usage("verify-iso needs a 'section' block"))?;
            let (src, dst) = match (&sd.maps, spec.equations.as_slice()) {
                (Some(m), _) => m.clone(),
                (None, [e]) => (e.name.clone(), e.name.clone()),
                _ => return Err(usage(format!("section {} needs a 'maps R -> R2' line", sd.name))),
            };
            let r = find_equation(spec, &src)?;
            let rp = find_equation(spec, &dst)?;
            let n = spec.dim;
            let t = spec.truncation;
            let order = sd.order.unwrap_or(r.order + 1);
            let base: Vec<Series> = (0..n)
                .map(|i| sd.base_map.get(&i).cloned().unwrap_or_else(|| Series::var(n, t, i)))
                .collect();
            let mut sigma = GroupoidSection::holonomic(&base, order)?;
            if !sd.jets.is_empty() {
                let mut jets = sigma.jets();
                for (c, s) in &sd.jets {
                    if c.alpha.order() as usize > order {
                        return Err(usage(format!("section {} sets jets above its order {order}", sd.name)));
                    }
                    jets.set(c.comp, &c.alpha, s.clone());
                }
                sigma = GroupoidSection::from_jets(base.clone(), &jets)?;
            }
            let phi: Vec<Series> = (0..n)
                .map(|i| sd.phi.get(&i).cloned().unwrap_or_else(|| Series::var(n, t, i)))
                .collect();
            let nd = TransversalData { fiber_vars: fiber, phi };
            let fr = verify_formal_isomorphism(&sigma, &r, &rp, &nd)?;
            if !fr.all_pass() {
                rep.status = Status::Negative;
            }
            let mut out = json!({
                "section": sd.name,
                "source": src,
                "target": dst,
                "order": order,
                "verdict": if fr.all_pass() { "formal_isomorphism" } else { "not_verified" },
                "restricts_to_phi": fr.restricts_to_phi,
                "pushes_r_to_target": fr.pushes_r_to_rp,
                "spencer_in_r": fr.spencer_in_r,
                "witness_direction": fr.witness_direction.map(|j| format!("d/d{}", spec.vars[j])),
                "witness_residuals": fr.witness_residuals.iter().map(|s| spec.series_string(s)).collect::<Vec<_>>(),
            });
            if !fr.pushes_r_to_rp {
                let pushed = pushforward_equation(&sigma, &r)?;
                out["pushforward"] = json!(relation_strings(spec, &pushed));
            }
            rep.push(out);
        }
        Command::SpencerD => {
            if spec.jets.is_empty() {
                return Err(usage("spencer-d needs a 'jet' block"));
            }
            for jd in &spec.jets {
                if jd.order == 0 {
                    return Err(usage(format!("jet {}: D needs order at least 1", jd.name)));
                }
                let xi = jet_from_entries(spec, jd.order, jd.entries.iter());
                let d = xi.spencer_d()?;
                let mut rows = Vec::new();
                for (j, dj) in d.iter().enumerate() {
                    rows.extend(jet_rows(spec, dj, &[("direction", format!("d/d{}", spec.vars[j]))]));
                }
                let mut out = json!({
                    "jet": jd.name,
                    "order": jd.order,
                    "closed": d.iter().all(JetSection::is_zero),
                    "d": rows,
                });
                for e in spec.equations.iter().filter(|e| e.order + 1 == jd.order) {
                    let r = build_equation(spec, e)?;
                    let inside = d.iter().map(|s| r.contains(s)).collect::<Result<Vec<bool>, Error>>();
                    out[format!("d_in_{}", e.name)] = match inside {
                        Ok(v) => json!(v.iter().all(|b| *b)),
                        Err(_) => Value::Null,
                    };
                }
                rep.push(out);
            }
        }
        Command::ConnectionCurvature => {
            if spec.connections.is_empty() {
                return Err(usage("connection-curvature needs a 'connection' block"));
            }
            let fiber = spec.distribution.vars.clone();
            for cd in &spec.connections {
                if let Some(v) = cd.omega.keys().find(|v| !fiber.contains(v)) {
                    return Err(usage(format!("connection {}: d/d{} is not in the distribution", cd.name, spec.vars[*v])));
                }
                let omega = fiber
                    .iter()
                    .map(|a| {
                        let entries = cd.omega.get(a).ok_or_else(|| {
                            usage(format!("connection {}: missing omega {}", cd.name, spec.vars[*a]))
                        })?;
                        Ok(jet_from_entries(spec, cd.order, entries.iter()))
                    })
                    .collect::<Result<Vec<_>, CliError>>()?;
                let conn = PartialConnectionData::new(spec.dim, fiber.clone(), omega)?;
                let curv = conn.curvature()?;
                let flat = curv.is_flat();
                if !flat {
                    rep.status = Status::Negative;
                }
                let mut rows = Vec::new();
                for ((a, b), c) in &curv.components {
                    let pair = format!("{},{}", spec.vars[fiber[*a]], spec.vars[fiber[*b]]);
                    rows.extend(jet_rows(spec, c, &[("pair", pair)]));
                }
                rep.push(json!({
                    "connection": cd.name,
                    "order": cd.order,
                    "flat": flat,
                    "curvature": rows,
                }));
            }
        }
    }
    Ok(rep)
}

/// The family of solutions of the normal form, as text.
fn family_note(spec: &ProblemSpec, case: PlaneCase, valuation: Option<u32>) -> String {
    let (x, y) = (&spec.vars[0], &spec.vars[1]);
    let arg = match (case, valuation) {
        (PlaneCase::Case1, _) => y.clone(),
        (PlaneCase::Case2, None) => x.clone(),
        (PlaneCase::Case2, Some(1)) => format!("{x}*exp({y})"),
        (PlaneCase::Case2, Some(2)) => format!("{x}/({y}*{x} - 1)"),
        (PlaneCase::Case2, Some(k)) => format!("{x}^{m}/({m}*{y}*{x}^{m} - 1)", m = k - 1),
    };
    format!("theta({arg}) d/d{y}")
}
