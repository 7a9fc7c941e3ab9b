//! Problem files: the JSON schema and its conversion into kernel objects.
//!
//! A problem file declares a source manifold, optionally a target manifold
//! and a formal map between them, plus default options. Series are spelled as
//! term lists with exact rational coefficients, so a file round-trips through
//! the kernel without any loss.

use std::fmt;
use std::path::Path;

use crdeg_core::manifold::NormalManifold;
use crdeg_core::map::FormalMap;
use crdeg_core::scalar::GaussianRational;
use crdeg_core::series::{SeriesVector, TruncatedSeries};
use crdeg_core::vars::VariableBlocks;
use serde::Deserialize;
use sha2::{Digest, Sha256};

/// A failure carrying the process exit code it maps to: 1 for input that
/// cannot be used (IO, malformed JSON, schema or normal-form violations),
/// 2 for well-formed input that violates a hypothesis of the computation.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        CliError { code: 1, message: message.into() }
    }

    /// Wraps a kernel error raised while running a command, after the input
    /// itself was accepted.
    pub fn hypothesis(e: crdeg_core::Error) -> Self {
        CliError { code: 2, message: e.to_string() }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

/// One term of a series literal: coefficient `c + ci·i` (both parts written
/// as `"a"` or `"a/b"`, defaulting to zero) and one exponent per variable, in
/// the declaration order of the blocks.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermLiteral {
    #[serde(default)]
    pub c: Option<String>,
    #[serde(default)]
    pub ci: Option<String>,
    pub e: Vec<u32>,
}

/// A manifold in normal coordinates: `d` defining series over the blocks
/// `(z, chi, tau)` of sizes `(n, n, d)`. `polynomial` marks the series as
/// exact rather than truncations (the default); `order` overrides the
/// file-level working order for this block.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifoldBlock {
    pub n: usize,
    pub d: usize,
    #[serde(rename = "Q")]
    pub q: Vec<Vec<TermLiteral>>,
    #[serde(default)]
    pub polynomial: Option<bool>,
    #[serde(default)]
    pub order: Option<u32>,
}

/// A formal map: one component per target ambient coordinate, each a series
/// over the source blocks `(z, w)`.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapBlock {
    pub components: Vec<Vec<TermLiteral>>,
    #[serde(default)]
    pub polynomial: Option<bool>,
    #[serde(default)]
    pub order: Option<u32>,
}

/// Per-file defaults, overridden by command-line flags. Unknown keys are
/// tolerated here so files can carry annotations.
#[derive(Debug, Default, Deserialize)]
pub struct OptionsBlock {
    #[serde(default)]
    pub k_max: Option<u32>,
    #[serde(default)]
    pub levels: Option<usize>,
    #[serde(default)]
    pub trials: Option<u32>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub jet_order: Option<u32>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub order: u32,
    pub source: ManifoldBlock,
    #[serde(default)]
    pub target: Option<ManifoldBlock>,
    #[serde(default)]
    pub map: Option<MapBlock>,
    #[serde(default)]
    pub options: Option<OptionsBlock>,
}

/// A fully parsed problem, ready for the kernel.
#[derive(Debug)]
pub struct Problem {
    /// Working order after any `--order` override.
    pub order: u32,
    pub source: NormalManifold,
    pub target: Option<NormalManifold>,
    pub map: Option<FormalMap>,
    pub options: OptionsBlock,
    /// SHA-256 of the raw file bytes, hex encoded.
    pub digest: String,
    /// The raw source and target blocks, kept to detect when two files
    /// disagree about the geometry.
    pub geometry: serde_json::Value,
}

impl Problem {
    /// The target manifold, or the schema error the given command reports
    /// when it is missing.
    pub fn require_target(&self, command: &str) -> Result<&NormalManifold, CliError> {
        self.target
            .as_ref()
            .ok_or_else(|| CliError::input(format!("target required by command {command:?}")))
    }

    pub fn require_map(&self, command: &str) -> Result<&FormalMap, CliError> {
        self.map
            .as_ref()
            .ok_or_else(|| CliError::input(format!("map required by command {command:?}")))
    }
}

/// Reads and fully validates a problem file. `order_override` pins every
/// block to one working order, ignoring the declared ones.
pub fn load(path: &Path, order_override: Option<u32>) -> Result<Problem, CliError> {
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
    let digest: String = Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect();
    let file: ProblemFile = serde_json::from_slice(&bytes)
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    let raw: serde_json::Value =
        serde_json::from_slice(&bytes).map_err(|e| CliError::input(e.to_string()))?;

    let order = order_override.unwrap_or(file.order);
    let source = manifold(&file.source, file.order, order_override, "source")?;
    let target = file
        .target
        .as_ref()
        .map(|b| manifold(b, file.order, order_override, "target"))
        .transpose()?;
    let map = match (&file.map, &file.target) {
        (None, _) => None,
        (Some(_), None) => {
            return Err(CliError::input(
                "a map block needs a target block to fix its component count".to_string(),
            ));
        }
        (Some(m), Some(t)) => {
            Some(formal_map(m, &file.source, t, file.order, order_override)?)
        }
    };

    let geometry = serde_json::json!({
        "source": raw.get("source").cloned().unwrap_or(serde_json::Value::Null),
        "target": raw.get("target").cloned().unwrap_or(serde_json::Value::Null),
    });

    Ok(Problem {
        order,
        source,
        target,
        map,
        options: file.options.unwrap_or_default(),
        digest,
        geometry,
    })
}

fn scalar_of(term: &TermLiteral, what: &str) -> Result<GaussianRational, CliError> {
    GaussianRational::parse_parts(
        term.c.as_deref().unwrap_or("0"),
        term.ci.as_deref().unwrap_or("0"),
    )
    .map_err(|e| CliError::input(format!("{what}: {e}")))
}

fn series(
    ctx: &VariableBlocks,
    order: u32,
    exact: bool,
    literals: &[TermLiteral],
    what: &str,
) -> Result<TruncatedSeries, CliError> {
    let mut terms = Vec::with_capacity(literals.len());
    for (i, term) in literals.iter().enumerate() {
        let label = format!("{what}, term {i}");
        if term.e.len() != ctx.len() {
            return Err(CliError::input(format!(
                "{label}: expected {} exponents, found {}",
                ctx.len(),
                term.e.len()
            )));
        }
        terms.push((term.e.clone(), scalar_of(term, &label)?));
    }
    TruncatedSeries::from_terms(ctx, order, exact, terms)
        .map_err(|e| CliError::input(format!("{what}: {e}")))
}

fn manifold(
    block: &ManifoldBlock,
    file_order: u32,
    forced: Option<u32>,
    role: &str,
) -> Result<NormalManifold, CliError> {
    let order = forced.unwrap_or(block.order.unwrap_or(file_order));
    let exact = block.polynomial.unwrap_or(true);
    if block.q.len() != block.d {
        return Err(CliError::input(format!(
            "{role}: codimension {} needs {} defining series, found {}",
            block.d,
            block.d,
            block.q.len()
        )));
    }
    let ctx = VariableBlocks::new(&[("z", block.n), ("chi", block.n), ("tau", block.d)])
        .map_err(|e| CliError::input(format!("{role}: {e}")))?;
    let mut components = Vec::with_capacity(block.d);
    for (j, literals) in block.q.iter().enumerate() {
        components.push(series(&ctx, order, exact, literals, &format!("{role}.Q[{j}]"))?);
    }
    let q = SeriesVector::new(components).map_err(|e| CliError::input(format!("{role}: {e}")))?;
    NormalManifold::new(block.n, block.d, q)
        .map_err(|e| CliError::input(format!("{role}: {e}")))
}

fn formal_map(
    block: &MapBlock,
    source: &ManifoldBlock,
    target: &ManifoldBlock,
    file_order: u32,
    forced: Option<u32>,
) -> Result<FormalMap, CliError> {
    let order = forced.unwrap_or(block.order.unwrap_or(file_order));
    let exact = block.polynomial.unwrap_or(true);
    let ambient = target.n + target.d;
    if block.components.len() != ambient {
        return Err(CliError::input(format!(
            "map: target is C^{ambient}, so {ambient} components are needed, found {}",
            block.components.len()
        )));
    }
    let ctx = VariableBlocks::new(&[("z", source.n), ("w", source.d)])
        .map_err(|e| CliError::input(format!("map: {e}")))?;
    let mut components = Vec::with_capacity(ambient);
    for (i, literals) in block.components.iter().enumerate() {
        components.push(series(&ctx, order, exact, literals, &format!("map.components[{i}]"))?);
    }
    let holo = SeriesVector::new(components).map_err(|e| CliError::input(format!("map: {e}")))?;
    FormalMap::new(source.n, source.d, target.n, target.d, holo)
        .map_err(|e| CliError::input(format!("map: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_temp(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn parses_a_full_problem() {
        let f = write_temp(
            r#"{
                "order": 6,
                "source": {"n": 1, "d": 1,
                    "Q": [[{"ci": "2", "e": [1, 1, 0]}, {"c": "1", "e": [0, 0, 1]}]],
                    "polynomial": true},
                "target": {"n": 2, "d": 1,
                    "Q": [[{"ci": "2", "e": [1, 0, 1, 0, 0]},
                           {"ci": "2", "e": [0, 1, 0, 1, 0]},
                           {"c": "1", "e": [0, 0, 0, 0, 1]}]]},
                "map": {"components": [[{"c": "1", "e": [1, 0]}], [], [{"c": "1", "e": [0, 1]}]]}
            }"#,
        );
        let p = load(f.path(), None).unwrap();
        assert_eq!(p.order, 6);
        assert_eq!(p.source.cr_dim(), 1);
        let map = p.map.as_ref().unwrap();
        assert_eq!(map.target_ambient(), 3);
        assert!(map.check_maps_into(&p.source, p.target.as_ref().unwrap()).unwrap().ok);
        assert_eq!(p.digest.len(), 64);
    }

    #[test]
    fn rejects_a_generator_out_of_normal_form() {
        // Q(z, 0, tau) must equal tau; the pure z term breaks that.
        let f = write_temp(
            r#"{
                "order": 4,
                "source": {"n": 1, "d": 1,
                    "Q": [[{"c": "1", "e": [1, 0, 0]}, {"c": "1", "e": [0, 0, 1]}]]}
            }"#,
        );
        let err = load(f.path(), None).unwrap_err();
        assert_eq!(err.code, 1);
        assert!(err.message.contains("generator 0"), "{}", err.message);
        assert!(err.message.contains("normal form"), "{}", err.message);
    }

    #[test]
    fn rejects_wrong_exponent_count_and_bad_rationals() {
        let f = write_temp(
            r#"{"order": 4, "source": {"n": 1, "d": 1, "Q": [[{"c": "1", "e": [0, 1]}]]}}"#,
        );
        let err = load(f.path(), None).unwrap_err();
        assert_eq!(err.code, 1);
        assert!(err.message.contains("expected 3 exponents"), "{}", err.message);

        let f = write_temp(
            r#"{"order": 4, "source": {"n": 1, "d": 1,
                "Q": [[{"c": "1/0", "e": [0, 0, 1]}]]}}"#,
        );
        let err = load(f.path(), None).unwrap_err();
        assert_eq!(err.code, 1);
        assert!(err.message.contains("invalid rational literal"), "{}", err.message);
    }

    #[test]
    fn rejects_unknown_fields_with_a_named_diagnostic() {
        let f = write_temp(
            r#"{"order": 4, "source": {"n": 1, "d": 1, "Q": [[{"c": "1", "e": [0, 0, 1]}]],
                "extra": 7}}"#,
        );
        let err = load(f.path(), None).unwrap_err();
        assert_eq!(err.code, 1);
        assert!(err.message.contains("unknown field `extra`"), "{}", err.message);
    }

    #[test]
    fn map_without_target_is_rejected() {
        let f = write_temp(
            r#"{"order": 4,
                "source": {"n": 1, "d": 1, "Q": [[{"c": "1", "e": [0, 0, 1]}]]},
                "map": {"components": [[{"c": "1", "e": [1, 0]}]]}}"#,
        );
        let err = load(f.path(), None).unwrap_err();
        assert_eq!(err.code, 1);
        assert!(err.message.contains("target"), "{}", err.message);
    }

    #[test]
    fn missing_map_surfaces_through_the_accessor() {
        let f = write_temp(
            r#"{"order": 4, "source": {"n": 1, "d": 1, "Q": [[{"c": "1", "e": [0, 0, 1]}]]}}"#,
        );
        let p = load(f.path(), None).unwrap();
        let err = p.require_map("degeneracy").unwrap_err();
        assert_eq!(err.code, 1);
        assert!(err.message.contains("map required"), "{}", err.message);
    }
}
