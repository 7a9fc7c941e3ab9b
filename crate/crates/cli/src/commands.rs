//! One function per subcommand.
//!
//! Every command loads its problem file from scratch, resolves options with
//! the precedence flag > file options > default, runs the kernel and returns
//! both the machine report body and the human summary. Kernel errors raised
//! here mean the input was readable but a hypothesis failed, so they exit
//! with code 2; anything wrong with the file itself exits with code 1.

use crdeg_core::degeneracy::{
    bounds_diagnostics, constancy_probe, degeneracy_system, hol_vector_fields,
    symbolic_constancy, DegeneracyReport, DiagnosticStatus,
};
use crdeg_core::identity::{basic_identity, jet_determination_check, one_degenerate_identity, JetVerdict};
use crdeg_core::manifold::NormalManifold;
use crdeg_core::scalar::GaussianRational;
use crdeg_core::segre::{finite_type_test, segre_map, segre_residual};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::input::{self, CliError, Problem};
use crate::report::{scalar, scalar_row};
use crate::{PairArgs, ProblemArgs};

/// Everything the caller needs to render one finished command.
pub struct Output {
    pub command: &'static str,
    pub order: u32,
    pub seed: u64,
    pub digests: Vec<String>,
    pub result: Value,
    pub human: String,
    pub json: bool,
}

macro_rules! line {
    ($buf:expr, $($arg:tt)*) => {{
        use std::fmt::Write as _;
        let _ = writeln!($buf, $($arg)*);
    }};
}

fn join<T: ToString>(items: &[T], sep: &str) -> String {
    items.iter().map(T::to_string).collect::<Vec<_>>().join(sep)
}

fn point(coords: &[GaussianRational]) -> String {
    format!("({})", join(coords, ", "))
}

fn kmax_for(args_kmax: Option<u32>, p: &Problem, target: &NormalManifold) -> u32 {
    args_kmax.or(p.options.k_max).unwrap_or(target.cr_dim() as u32 + 1)
}

fn levels_for(args_levels: Option<usize>, p: &Problem) -> usize {
    args_levels.or(p.options.levels).unwrap_or(4)
}

fn seed_for(args_seed: Option<u64>, p: &Problem) -> u64 {
    args_seed.or(p.options.seed).unwrap_or(0)
}

fn manifold_json(m: &NormalManifold) -> Value {
    json!({
        "n": m.cr_dim(),
        "d": m.codim(),
        "ambient": m.ambient_dim(),
        "order": m.order(),
        "polynomial": m.is_polynomial(),
    })
}

fn manifold_line(buf: &mut String, role: &str, m: &NormalManifold) {
    let kind = if m.codim() == 1 { "hypersurface" } else { "generic submanifold" };
    line!(
        buf,
        "{role}: {kind} in C^{} (n = {}, d = {}), order {}{}",
        m.ambient_dim(),
        m.cr_dim(),
        m.codim(),
        m.order(),
        if m.is_polynomial() { ", polynomial" } else { "" }
    );
}

/// The certificate can run to hundreds of kilobytes, so the summary shows
/// only its size and digest; the full text travels in the JSON report.
fn certificate_line(buf: &mut String, certificate: &str) {
    let digest: String =
        Sha256::digest(certificate.as_bytes()).iter().map(|b| format!("{b:02x}")).collect();
    line!(
        buf,
        "certificate: {} bytes, sha256 {digest} (full text in the --json report)",
        certificate.len()
    );
}

fn status_str(s: &DiagnosticStatus) -> &'static str {
    match s {
        DiagnosticStatus::Pass => "pass",
        DiagnosticStatus::Fail => "FAIL",
        DiagnosticStatus::Warning => "warning",
        DiagnosticStatus::Skipped => "skipped",
    }
}

fn degeneracy_json(rep: &DegeneracyReport) -> Value {
    let entries: Vec<Value> = rep
        .entries
        .iter()
        .map(|e| {
            json!({
                "alpha": e.alpha,
                "generator": e.generator,
                "independent": e.independent,
                "vector": scalar_row(&e.vector),
            })
        })
        .collect();
    json!({
        "target_ambient": rep.target_ambient,
        "kmax": rep.kmax,
        "dims": rep.dims,
        "k0": rep.k0,
        "s": rep.s,
        "stabilized": rep.stabilized,
        "entries": entries,
    })
}

pub fn check(args: &ProblemArgs) -> Result<Output, CliError> {
    let p = input::load(&args.file, args.order)?;
    let mut human = String::new();
    manifold_line(&mut human, "source", &p.source);

    let mut map_json = Value::Null;
    let mut ok = true;
    let target_json = match &p.target {
        Some(t) => {
            manifold_line(&mut human, "target", t);
            manifold_json(t)
        }
        None => Value::Null,
    };
    if let Some(map) = &p.map {
        let target = p.target.as_ref().expect("map implies target after loading");
        line!(
            human,
            "map: C^{} -> C^{}, order {}",
            p.source.ambient_dim(),
            map.target_ambient(),
            map.order()
        );

        let into = map.check_maps_into(&p.source, target).map_err(CliError::hypothesis)?;
        ok &= into.ok;
        match into.failing_generator {
            None => line!(human, "maps into target: yes (checked to order {})", into.checked_order),
            Some(j) => line!(
                human,
                "maps into target: NO (generator {j} fails at order <= {})",
                into.checked_order
            ),
        }

        let trans = map.transversality();
        line!(
            human,
            "transversal: {} (normal rank {} of {})",
            if trans.transversal { "yes" } else { "no" },
            trans.rank,
            target.codim()
        );
        let imm = map.immersivity();
        line!(
            human,
            "immersive: {} (rank {} of {})",
            if imm.immersive { "yes" } else { "no" },
            imm.rank,
            p.source.ambient_dim()
        );
        let levi = map.levi_compatibility(&p.source, target).map_err(CliError::hypothesis)?;
        match levi.first_failure {
            None => line!(human, "levi compatibility: holds"),
            Some((m, j, k)) => {
                line!(human, "levi compatibility: fails at (m, j, k) = ({m}, {j}, {k})")
            }
        }
        ok &= levi.holds;

        map_json = json!({
            "order": map.order(),
            "maps_into": {
                "ok": into.ok,
                "checked_order": into.checked_order,
                "failing_generator": into.failing_generator,
            },
            "transversality": { "rank": trans.rank, "transversal": trans.transversal },
            "immersivity": { "rank": imm.rank, "immersive": imm.immersive },
            "levi_compatibility": { "holds": levi.holds, "first_failure": levi.first_failure },
        });
    }
    line!(human, "check: {}", if ok { "ok" } else { "FAILED" });

    Ok(Output {
        command: "check",
        order: p.order,
        seed: seed_for(args.seed, &p),
        digests: vec![p.digest.clone()],
        result: json!({
            "source": manifold_json(&p.source),
            "target": target_json,
            "map": map_json,
            "ok": ok,
        }),
        human,
        json: args.json,
    })
}

pub fn degeneracy(args: &ProblemArgs) -> Result<Output, CliError> {
    let p = input::load(&args.file, args.order)?;
    let map = p.require_map("degeneracy")?;
    let target = p.require_target("degeneracy")?;
    let kmax = kmax_for(args.kmax, &p, target);

    let sys = degeneracy_system(&p.source, target, map, kmax).map_err(CliError::hypothesis)?;
    let symbolic = symbolic_constancy(&p.source, &sys).map_err(CliError::hypothesis)?;
    let bounds =
        bounds_diagnostics(&p.source, target, map, &sys.report).map_err(CliError::hypothesis)?;
    let rep = &sys.report;

    let mut human = String::new();
    line!(human, "dims by derivative order: {} (kmax = {})", join(&rep.dims, " "), rep.kmax);
    if rep.stabilized {
        line!(human, "k0 = {}, s = {} (stabilized)", rep.k0, rep.s);
    } else {
        line!(human, "k0 = {}, s = {} (NOT stabilized; raise --kmax)", rep.k0, rep.s);
    }
    line!(
        human,
        "constancy (symbolic minors): {}",
        if symbolic.constant { "constant" } else { "may jump off the origin" }
    );
    line!(
        human,
        "bounds: trivial: {}; transversal bound: {}; generic k0: {}",
        status_str(&bounds.trivial.0),
        status_str(&bounds.transversal_bound.0),
        status_str(&bounds.generic_k0.0)
    );

    let mut result = degeneracy_json(rep);
    let extra = json!({
        "constant": symbolic.constant,
        "minors_checked": symbolic.minors_checked,
        "bounds": {
            "trivial": { "status": status_str(&bounds.trivial.0), "detail": bounds.trivial.1 },
            "transversal_bound": {
                "status": status_str(&bounds.transversal_bound.0),
                "detail": bounds.transversal_bound.1,
            },
            "generic_k0": {
                "status": status_str(&bounds.generic_k0.0),
                "detail": bounds.generic_k0.1,
            },
        },
    });
    merge(&mut result, extra);

    Ok(Output {
        command: "degeneracy",
        order: p.order,
        seed: seed_for(args.seed, &p),
        digests: vec![p.digest.clone()],
        result,
        human,
        json: args.json,
    })
}

pub fn constancy(args: &ProblemArgs) -> Result<Output, CliError> {
    let p = input::load(&args.file, args.order)?;
    let map = p.require_map("constancy")?;
    let target = p.require_target("constancy")?;
    let kmax = kmax_for(args.kmax, &p, target);
    let trials = args.trials.or(p.options.trials).unwrap_or(3);
    let seed = seed_for(args.seed, &p);

    let rep = constancy_probe(&p.source, target, map, kmax, trials, seed, true)
        .map_err(CliError::hypothesis)?;
    let symbolic = rep.symbolic.as_ref().expect("probe was asked for the symbolic test");
    let constant = rep.all_match && symbolic.constant;

    let mut human = String::new();
    line!(human, "origin: k0 = {}, s = {}", rep.origin.k0, rep.origin.s);
    let matching = rep.samples.iter().filter(|s| s.matches_origin).count();
    line!(human, "samples: {matching} of {} match the origin", rep.samples.len());
    for s in rep.samples.iter().filter(|s| !s.matches_origin) {
        line!(
            human,
            "  jump at z = {}, chi = {}, tau = {}: k0 = {}, s = {}",
            point(&s.z),
            point(&s.chi),
            point(&s.tau),
            s.k0,
            s.s
        );
    }
    line!(
        human,
        "symbolic minors: {} ({} checked)",
        if symbolic.constant { "all vanish in the ideal" } else { "some survive" },
        symbolic.minors_checked
    );
    line!(human, "verdict: {}", if constant { "constant" } else { "not constant" });

    let samples: Vec<Value> = rep
        .samples
        .iter()
        .map(|s| {
            json!({
                "z": scalar_row(&s.z),
                "chi": scalar_row(&s.chi),
                "tau": scalar_row(&s.tau),
                "k0": s.k0,
                "s": s.s,
                "stabilized": s.stabilized,
                "matches_origin": s.matches_origin,
            })
        })
        .collect();
    let result = json!({
        "kmax": kmax,
        "trials": trials,
        "origin": degeneracy_json(&rep.origin),
        "samples": samples,
        "all_match": rep.all_match,
        "symbolic": {
            "constant": symbolic.constant,
            "per_level": symbolic.per_level,
            "minors_checked": symbolic.minors_checked,
        },
        "constant": constant,
    });

    Ok(Output {
        command: "constancy",
        order: p.order,
        seed,
        digests: vec![p.digest.clone()],
        result,
        human,
        json: args.json,
    })
}

pub fn holvf(args: &ProblemArgs) -> Result<Output, CliError> {
    let p = input::load(&args.file, args.order)?;
    let map = p.require_map("holvf")?;
    let target = p.require_target("holvf")?;
    let jet_order = args.kmax.or(p.options.jet_order).unwrap_or(1);

    let rep = hol_vector_fields(&p.source, target, map, jet_order).map_err(CliError::hypothesis)?;

    let mut human = String::new();
    line!(human, "coefficient jet order: {}", rep.jet_order);
    line!(
        human,
        "solution space dimension: {} (coefficients compared to order {})",
        rep.solution_dim,
        rep.to_order
    );
    line!(human, "values at the origin span dimension: {}", rep.dim0);
    if !rep.basis_at_zero.is_empty() {
        line!(human, "basis of the values at the origin:");
        for row in &rep.basis_at_zero {
            line!(human, "  {}", point(row));
        }
    }

    let result = json!({
        "jet_order": rep.jet_order,
        "solution_dim": rep.solution_dim,
        "dim0": rep.dim0,
        "to_order": rep.to_order,
        "basis_at_zero": rep.basis_at_zero.iter().map(|r| scalar_row(r)).collect::<Vec<_>>(),
    });

    Ok(Output {
        command: "holvf",
        order: p.order,
        seed: seed_for(args.seed, &p),
        digests: vec![p.digest.clone()],
        result,
        human,
        json: args.json,
    })
}

pub fn segre(args: &ProblemArgs) -> Result<Output, CliError> {
    let p = input::load(&args.file, args.order)?;
    let levels = levels_for(args.levels, &p);

    let mut human = String::new();
    let mut chains = Vec::with_capacity(levels);
    let mut all_zero = true;
    for level in 1..=levels {
        let chain = segre_map(&p.source, level).map_err(CliError::hypothesis)?;
        let residual = segre_residual(&p.source, level).map_err(CliError::hypothesis)?;
        let zero = residual.all_zero();
        all_zero &= zero;
        let params = chain.ctx.len();
        line!(
            human,
            "level {level}: {} components in {params} chain parameter{}, residual {} to order {}",
            chain.components.len(),
            if params == 1 { "" } else { "s" },
            if zero { "zero" } else { "NONZERO" },
            residual.min_order()
        );
        chains.push(json!({
            "level": level,
            "parameters": chain.ctx.len(),
            "exact": chain.is_exact(),
            "residual_zero": zero,
            "residual_order": residual.min_order(),
        }));
    }
    line!(human, "all residuals vanish: {}", if all_zero { "yes" } else { "NO" });

    Ok(Output {
        command: "segre",
        order: p.order,
        seed: seed_for(args.seed, &p),
        digests: vec![p.digest.clone()],
        result: json!({ "levels": levels, "chains": chains, "all_zero": all_zero }),
        human,
        json: args.json,
    })
}

pub fn finite_type(args: &ProblemArgs) -> Result<Output, CliError> {
    let p = input::load(&args.file, args.order)?;
    let levels = levels_for(args.levels, &p);
    let seed = seed_for(args.seed, &p);

    let rep = finite_type_test(&p.source, levels, seed).map_err(CliError::hypothesis)?;
    let verdict = if !rep.conclusive {
        "INCONCLUSIVE"
    } else if rep.finite_type {
        "FINITE_TYPE"
    } else {
        "NOT_FINITE_TYPE"
    };

    let mut human = String::new();
    line!(human, "generic chain ranks: {}", join(&rep.generic_ranks, " "));
    match (verdict, rep.type_index) {
        ("FINITE_TYPE", Some(t)) => line!(human, "verdict: FINITE_TYPE (type {t})"),
        ("NOT_FINITE_TYPE", _) => {
            line!(human, "verdict: NOT_FINITE_TYPE (ranks stall below {})", rep.full_rank)
        }
        _ => line!(human, "verdict: {verdict} (raise --levels to extend the chain)"),
    }
    if let (Some(level), Some(pt)) = (rep.witness_level, rep.witness_point.as_ref()) {
        line!(
            human,
            "witness: level {level} at {}{}",
            point(pt),
            if rep.certified { ", rank certified exactly" } else { "" }
        );
    }

    let result = json!({
        "max_level": levels,
        "verdict": verdict,
        "finite_type": rep.finite_type,
        "conclusive": rep.conclusive,
        "type_index": rep.type_index,
        "generic_ranks": rep.generic_ranks,
        "full_rank": rep.full_rank,
        "witness_level": rep.witness_level,
        "witness_point": rep.witness_point.as_ref().map(|p| scalar_row(p)),
        "certified": rep.certified,
    });

    Ok(Output {
        command: "finite-type",
        order: p.order,
        seed,
        digests: vec![p.digest.clone()],
        result,
        human,
        json: args.json,
    })
}

fn jets_json(jets: &[(usize, Vec<u32>, GaussianRational)]) -> Value {
    Value::Array(
        jets.iter()
            .map(|(component, e, value)| {
                json!({ "component": component, "e": e, "value": scalar(value) })
            })
            .collect(),
    )
}

pub fn basic_identity_cmd(args: &ProblemArgs) -> Result<Output, CliError> {
    let p = input::load(&args.file, args.order)?;
    let map = p.require_map("basic-identity")?;
    let target = p.require_target("basic-identity")?;
    let kmax = kmax_for(args.kmax, &p, target);

    let sol = basic_identity(&p.source, target, map, kmax, 0).map_err(CliError::hypothesis)?;
    let rep = &sol.report;

    let mut human = String::new();
    line!(human, "k0 = {}", rep.k0);
    let rows = rep
        .rows
        .iter()
        .map(|(alpha, g)| format!("alpha {alpha:?} gen {g}"))
        .collect::<Vec<_>>()
        .join("; ");
    line!(human, "independent rows: {rows}");
    line!(human, "jacobian determinant in the unknowns: {}", rep.jacobian_det);
    line!(
        human,
        "solved to order {}; residual zero in the ideal to order {}",
        rep.solved_order,
        rep.residual_order
    );
    certificate_line(&mut human, &rep.certificate);

    let result = json!({
        "kmax": kmax,
        "k0": rep.k0,
        "rows": rep.rows.iter()
            .map(|(alpha, g)| json!({ "alpha": alpha, "generator": g }))
            .collect::<Vec<_>>(),
        "jets": jets_json(&rep.jets),
        "jacobian_det": scalar(&rep.jacobian_det),
        "solved_order": rep.solved_order,
        "residual_order": rep.residual_order,
        "certificate": rep.certificate,
    });

    Ok(Output {
        command: "basic-identity",
        order: p.order,
        seed: seed_for(args.seed, &p),
        digests: vec![p.digest.clone()],
        result,
        human,
        json: args.json,
    })
}

pub fn one_degenerate_cmd(args: &ProblemArgs) -> Result<Output, CliError> {
    let p = input::load(&args.file, args.order)?;
    let map = p.require_map("basic-identity-1deg")?;
    let target = p.require_target("basic-identity-1deg")?;
    let kmax = kmax_for(args.kmax, &p, target);

    let sol = one_degenerate_identity(&p.source, target, map, kmax).map_err(CliError::hypothesis)?;
    let rep = &sol.report;

    let mut human = String::new();
    line!(human, "k0 = {}", rep.k0);
    line!(human, "normal derivative at 0: {}", rep.normal_derivative);
    line!(human, "source levi product: {}", rep.levi_product);
    line!(
        human,
        "eliminating determinant: {} (matches the predicted product up to sign: {})",
        rep.determinant,
        if rep.determinant_matches { "yes" } else { "NO" }
    );
    line!(
        human,
        "solved to order {}; determinant membership to order {}; residual zero to order {}",
        rep.solved_order,
        rep.membership_order,
        rep.residual_order
    );
    certificate_line(&mut human, &rep.certificate);

    let result = json!({
        "kmax": kmax,
        "k0": rep.k0,
        "columns": rep.columns,
        "leftover": rep.leftover,
        "delta_at_zero": scalar(&rep.delta_at_zero),
        "minors_at_zero": scalar_row(&rep.minors_at_zero),
        "determinant": scalar(&rep.determinant),
        "normal_derivative": scalar(&rep.normal_derivative),
        "levi_product": scalar(&rep.levi_product),
        "determinant_matches": rep.determinant_matches,
        "solved_order": rep.solved_order,
        "membership_order": rep.membership_order,
        "residual_order": rep.residual_order,
        "jets": jets_json(&rep.jets),
        "slice_jets": jets_json(&rep.slice_jets),
        "certificate": rep.certificate,
    });

    Ok(Output {
        command: "basic-identity-1deg",
        order: p.order,
        seed: seed_for(args.seed, &p),
        digests: vec![p.digest.clone()],
        result,
        human,
        json: args.json,
    })
}

pub fn jets(args: &PairArgs) -> Result<Output, CliError> {
    let first = input::load(&args.file, args.order)?;
    let second = input::load(&args.file2, args.order)?;
    if first.geometry != second.geometry {
        return Err(CliError::input(
            "the two files disagree about the source or target geometry; \
             jets compares maps over one shared pair"
                .to_string(),
        ));
    }
    let a = first.require_map("jets")?;
    let b = second.require_map("jets")?;
    let target = first.require_target("jets")?;
    let kmax = kmax_for(args.kmax, &first, target);
    let max_level = levels_for(args.levels, &first);
    let seed = seed_for(args.seed, &first);

    let rep = jet_determination_check(&first.source, target, a, b, kmax, max_level, seed)
        .map_err(CliError::hypothesis)?;

    let mut human = String::new();
    line!(human, "stabilization order k0 = {} (span level {})", rep.k0, rep.span_level);
    line!(human, "determined to order {}", rep.threshold);
    line!(human, "compared through order {}", rep.compared_order);
    let verdict = match rep.verdict {
        JetVerdict::DeterminedEqual => {
            line!(human, "verdict: the maps coincide");
            "determined_equal"
        }
        JetVerdict::Distinct => {
            let d = rep.first_difference.as_ref().expect("distinct maps have a difference");
            line!(
                human,
                "verdict: the maps differ; first difference at order {}, component {}, exponents {:?}",
                d.order,
                d.component,
                d.exponents
            );
            "distinct"
        }
        JetVerdict::Inconclusive => {
            line!(
                human,
                "verdict: inconclusive; the data ends at order {} before order {} could be compared",
                rep.compared_order,
                rep.threshold
            );
            "inconclusive"
        }
    };

    let result = json!({
        "kmax": kmax,
        "max_level": max_level,
        "k0": rep.k0,
        "span_level": rep.span_level,
        "threshold": rep.threshold,
        "determined_to_order": rep.threshold,
        "compared_order": rep.compared_order,
        "first_difference": rep.first_difference.as_ref().map(|d| json!({
            "order": d.order,
            "component": d.component,
            "e": d.exponents,
        })),
        "verdict": verdict,
    });

    Ok(Output {
        command: "jets",
        order: first.order,
        seed,
        digests: vec![first.digest.clone(), second.digest.clone()],
        result,
        human,
        json: args.json,
    })
}

/// Merges the keys of `extra` into `base`; both must be objects.
fn merge(base: &mut Value, extra: Value) {
    if let (Value::Object(b), Value::Object(e)) = (base, extra) {
        b.extend(e);
    }
}
