//! Flat `key = value` problem files.
//!
//! ```text
//! # comment
//! drift.kind = linear_ou        # zero | constant | linear_ou | tumor | tabulated
//! drift.params =                # constant: c; tumor: theta, beta; tabulated: x:b, x:b, ...
//! diffusion.kind = zero         # zero | constant | tabulated
//! diffusion.params =            # constant: sigma; tabulated: x:s, ...
//! epsilon = 0.1
//! alpha = 1.5
//! measure.kind = truncated      # full | truncated
//! measure.kappa = 1
//! domain.a = -1
//! domain.b = 1
//! target = right                # right | left
//! ```

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::model::{DiffusionSpec, DriftSpec, EscapeProblem, Target};
use crate::stable::{LevyMeasure, StabilityIndex};

const KEYS: [&str; 11] = [
    "drift.kind",
    "drift.params",
    "diffusion.kind",
    "diffusion.params",
    "epsilon",
    "alpha",
    "measure.kind",
    "measure.kappa",
    "domain.a",
    "domain.b",
    "target",
];

struct Entries {
    map: BTreeMap<String, (usize, String)>,
}

impl Entries {
    fn get(&self, key: &str) -> Option<(usize, &str)> {
        self.map.get(key).map(|(l, v)| (*l, v.as_str()))
    }

    fn required(&self, key: &str) -> Result<(usize, &str)> {
        self.get(key).ok_or_else(|| Error::config(None, format!("missing required key `{key}`")))
    }

    fn number(&self, key: &str) -> Result<f64> {
        let (line, v) = self.required(key)?;
        parse_number(line, key, v)
    }
}

fn parse_number(line: usize, key: &str, v: &str) -> Result<f64> {
    v.trim()
        .parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| Error::config(Some(line), format!("`{key}` expects a finite number, got `{v}`")))
}

fn parse_list(line: usize, key: &str, v: &str) -> Result<Vec<f64>> {
    v.split(',').filter(|s| !s.trim().is_empty()).map(|s| parse_number(line, key, s)).collect()
}

fn parse_table(line: usize, key: &str, v: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for pair in v.split(',').filter(|s| !s.trim().is_empty()) {
        let (x, y) = pair
            .split_once(':')
            .ok_or_else(|| Error::config(Some(line), format!("`{key}` expects `x:value` pairs, got `{pair}`")))?;
        xs.push(parse_number(line, key, x)?);
        ys.push(parse_number(line, key, y)?);
    }
    if xs.len() < 2 {
        return Err(Error::config(Some(line), format!("`{key}` needs at least two table entries")));
    }
    Ok((xs, ys))
}

fn normalize(kind: &str) -> String {
    kind.trim().to_ascii_lowercase().replace(['-', ' '], "_")
}

/// Parse a problem file. Diagnostics carry the offending line number.
pub fn parse_problem(text: &str) -> Result<EscapeProblem> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (k, v) = content
            .split_once('=')
            .ok_or_else(|| Error::config(Some(line), format!("expected `key = value`, got `{content}`")))?;
        let key = k.trim().to_ascii_lowercase();
        if !KEYS.contains(&key.as_str()) {
            return Err(Error::config(Some(line), format!("unknown key `{}`", k.trim())));
        }
        if map.insert(key.clone(), (line, v.trim().to_string())).is_some() {
            return Err(Error::config(Some(line), format!("duplicate key `{key}`")));
        }
    }
    let e = Entries { map };

    let (dline, dkind) = e.required("drift.kind")?;
    let dparams = e.get("drift.params");
    let params = |key: &str, p: Option<(usize, &str)>, n: usize| -> Result<Vec<f64>> {
        let (line, v) = p.ok_or_else(|| Error::config(None, format!("missing `{key}`")))?;
        let vals = parse_list(line, key, v)?;
        if vals.len() != n {
            return Err(Error::config(Some(line), format!("`{key}` expects {n} value(s), got {}", vals.len())));
        }
        Ok(vals)
    };
    let drift = match normalize(dkind).as_str() {
        "zero" => DriftSpec::Zero,
        "constant" => DriftSpec::Constant(params("drift.params", dparams, 1)?[0]),
        "linear_ou" | "linearou" | "ou" => DriftSpec::LinearOu,
        "tumor" => {
            let p = params("drift.params", dparams, 2)?;
            DriftSpec::tumor(p[0], p[1]).map_err(|err| Error::config(dparams.map(|d| d.0), err.to_string()))?
        }
        "tabulated" => {
            let (line, v) = dparams.ok_or_else(|| Error::config(Some(dline), "tabulated drift needs `drift.params`"))?;
            let (xs, ys) = parse_table(line, "drift.params", v)?;
            DriftSpec::tabulated(xs, ys).map_err(|err| Error::config(Some(line), err.to_string()))?
        }
        other => return Err(Error::config(Some(dline), format!("unknown drift kind `{other}`"))),
    };

    let sparams = e.get("diffusion.params");
    let diffusion = match e.get("diffusion.kind") {
        None => DiffusionSpec::Zero,
        Some((line, kind)) => match normalize(kind).as_str() {
            "zero" => DiffusionSpec::Zero,
            "constant" => DiffusionSpec::Constant(params("diffusion.params", sparams, 1)?[0]),
            "tabulated" => {
                let (pl, v) = sparams.ok_or_else(|| Error::config(Some(line), "tabulated diffusion needs `diffusion.params`"))?;
                let (xs, ys) = parse_table(pl, "diffusion.params", v)?;
                DiffusionSpec::tabulated(xs, ys).map_err(|err| Error::config(Some(pl), err.to_string()))?
            }
            other => return Err(Error::config(Some(line), format!("unknown diffusion kind `{other}`"))),
        },
    };

    let epsilon = e.number("epsilon")?;
    let (aline, _) = e.required("alpha")?;
    let alpha = StabilityIndex::new(e.number("alpha")?).map_err(|err| Error::config(Some(aline), err.to_string()))?;
    let measure = match e.get("measure.kind") {
        None => LevyMeasure::full(alpha),
        Some((line, kind)) => match normalize(kind).as_str() {
            "full" | "fullpowerlaw" | "full_power_law" => LevyMeasure::full(alpha),
            "truncated" | "truncatedpowerlaw" | "truncated_power_law" => {
                let (kl, _) = e.required("measure.kappa")?;
                LevyMeasure::truncated(alpha, e.number("measure.kappa")?)
                    .map_err(|err| Error::config(Some(kl), err.to_string()))?
            }
            other => return Err(Error::config(Some(line), format!("unknown measure kind `{other}`"))),
        },
    };
    let target = match e.get("target") {
        None => Target::RightExterior,
        Some((line, t)) => match normalize(t).as_str() {
            "right" | "rightexterior" | "right_exterior" => Target::RightExterior,
            "left" | "leftexterior" | "left_exterior" => Target::LeftExterior,
            other => return Err(Error::config(Some(line), format!("unknown target `{other}`"))),
        },
    };
    let a = e.number("domain.a")?;
    let b = e.number("domain.b")?;
    EscapeProblem::new(drift, diffusion, epsilon, measure, (a, b), target).map_err(|err| Error::config(None, err.to_string()))
}

fn table_text(t: &crate::interp::Hermite) -> String {
    t.nodes().iter().zip(t.values()).map(|(x, y)| format!("{x}:{y}")).collect::<Vec<_>>().join(", ")
}

/// Inverse of [`parse_problem`].
pub fn problem_to_text(p: &EscapeProblem) -> String {
    let mut s = String::new();
    let (dk, dp) = match p.drift() {
        DriftSpec::Zero => ("zero", None),
        DriftSpec::Constant(c) => ("constant", Some(format!("{c}"))),
        DriftSpec::LinearOu => ("linear_ou", None),
        DriftSpec::Tumor { theta, beta } => ("tumor", Some(format!("{theta}, {beta}"))),
        DriftSpec::Tabulated(t) => ("tabulated", Some(table_text(t))),
    };
    s.push_str(&format!("drift.kind = {dk}\n"));
    if let Some(dp) = dp {
        s.push_str(&format!("drift.params = {dp}\n"));
    }
    let (sk, sp) = match p.diffusion() {
        DiffusionSpec::Zero => ("zero", None),
        DiffusionSpec::Constant(c) => ("constant", Some(format!("{c}"))),
        DiffusionSpec::Tabulated(t) => ("tabulated", Some(table_text(t))),
    };
    s.push_str(&format!("diffusion.kind = {sk}\n"));
    if let Some(sp) = sp {
        s.push_str(&format!("diffusion.params = {sp}\n"));
    }
    s.push_str(&format!("epsilon = {}\n", p.epsilon()));
    s.push_str(&format!("alpha = {}\n", p.alpha().value()));
    match p.measure() {
        LevyMeasure::FullPowerLaw { .. } => s.push_str("measure.kind = full\n"),
        LevyMeasure::TruncatedPowerLaw { kappa, .. } => {
            s.push_str(&format!("measure.kind = truncated\nmeasure.kappa = {kappa}\n"))
        }
    }
    let (a, b) = p.domain();
    s.push_str(&format!("domain.a = {a}\ndomain.b = {b}\n"));
    s.push_str(match p.target() {
        Target::RightExterior => "target = right\n",
        Target::LeftExterior => "target = left\n",
    });
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    const OU: &str = "\
# pure-jump OU
drift.kind = linear_ou
diffusion.kind = zero
epsilon = 0.1
alpha = 1.5
measure.kind = truncated
measure.kappa = 1
domain.a = -1
domain.b = 1
target = right
";

    #[test]
    fn parses_ou_problem() {
        let p = parse_problem(OU).unwrap();
        assert_eq!(p, EscapeProblem::truncated_ou(1.5, 0.1, 1.0).unwrap());
    }

    #[test]
    fn round_trips() {
        for p in [
            EscapeProblem::truncated_ou(1.5, 0.1, 1.0).unwrap(),
            EscapeProblem::brownian_with_stable_noise(0.5, 0.01).unwrap(),
            EscapeProblem::tumor(0.1, 1.2, 1.5, 0.05).unwrap(),
        ] {
            assert_eq!(parse_problem(&problem_to_text(&p)).unwrap(), p);
        }
    }

    #[test]
    fn tabulated_drift() {
        let text = "drift.kind = tabulated\ndrift.params = -1:1, 0:0.5, 1:0.25\ndiffusion.kind = constant\n\
                    diffusion.params = 0.5\nepsilon = 0\nalpha = 1.2\ndomain.a = -1\ndomain.b = 1\n";
        let p = parse_problem(text).unwrap();
        assert!((p.drift().eval(0.0).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(parse_problem(&problem_to_text(&p)).unwrap(), p);
    }

    #[test]
    fn diagnostics_carry_line_numbers() {
        let bad = OU.replace("alpha = 1.5", "alpha = fast");
        match parse_problem(&bad).unwrap_err() {
            Error::Config { line: Some(5), msg } => assert!(msg.contains("alpha")),
            other => panic!("{other:?}"),
        }
        let bad = OU.replace("target = right", "target: right");
        assert!(matches!(parse_problem(&bad), Err(Error::Config { line: Some(10), .. })));
        let bad = OU.replace("domain.b = 1", "");
        assert!(matches!(parse_problem(&bad), Err(Error::Config { line: None, .. })));
        let bad = format!("{OU}colour = blue\n");
        assert!(parse_problem(&bad).unwrap_err().is_configuration());
        let bad = OU.replace("alpha = 1.5", "alpha = 2.5");
        assert!(parse_problem(&bad).unwrap_err().is_configuration());
    }
}
