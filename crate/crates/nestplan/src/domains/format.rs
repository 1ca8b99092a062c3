//! Line-oriented text formats for domains and priors.
//!
//! Domain files start with an optional `name <n>` line followed by sections
//! `[states]`, `[actions i]`, `[actions j]`, `[observations i]`,
//! `[observations j]`, `[transition]`, `[observation i]`, `[observation j]`,
//! `[reward i]`, `[reward j]`. Label sections hold one label per line; table
//! sections hold rows `<a_i> <a_j> <state> <v1> <v2> ...` where any of the
//! three keys may be `*`. `#` starts a comment.
//!
//! Prior files start with `level <l>` and contain `[marginal]` (one
//! probability per state, on one line or several), `[density <state>]`
//! sections for level 1 (`uniform`, `piecewise lo hi d ; ...`, or
//! `point b1 .. bn w ; ...`), and `[components]` for level >= 2
//! (`<weight> <built-in prior name>` per line).

use crate::domains::builtin_prior;
use crate::error::{NestError, Result};
use crate::model::domain::{validate_domain, Agent, Domain, RowPattern, TableSpec};
use crate::model::prior::{DensitySpec, NestedPrior};

fn parse_err(line: usize, msg: impl Into<String>) -> NestError {
    NestError::Parse { line, msg: msg.into() }
}

/// Strip comments and return (1-based line number, content) for nonblank lines.
fn logical_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            None
        } else {
            Some((i + 1, line))
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Section {
    States,
    Actions(Agent),
    Observations(Agent),
    Transition,
    Observation(Agent),
    Reward(Agent),
}

fn section_for(header: &str) -> Option<Section> {
    match header {
        "states" => Some(Section::States),
        "actions i" => Some(Section::Actions(Agent::I)),
        "actions j" => Some(Section::Actions(Agent::J)),
        "observations i" => Some(Section::Observations(Agent::I)),
        "observations j" => Some(Section::Observations(Agent::J)),
        "transition" => Some(Section::Transition),
        "observation i" => Some(Section::Observation(Agent::I)),
        "observation j" => Some(Section::Observation(Agent::J)),
        "reward i" => Some(Section::Reward(Agent::I)),
        "reward j" => Some(Section::Reward(Agent::J)),
        _ => None,
    }
}

/// Parse a domain file. The result always passes `validate_domain`.
pub fn load_domain(text: &str) -> Result<Domain> {
    let mut name = String::from("custom");
    let mut labels: std::collections::HashMap<Section, Vec<String>> =
        std::collections::HashMap::new();
    let mut rows: std::collections::HashMap<Section, Vec<(usize, Vec<String>)>> =
        std::collections::HashMap::new();
    let mut current: Option<Section> = None;

    for (ln, line) in logical_lines(text) {
        if let Some(header) = line.strip_prefix('[') {
            let header = header
                .strip_suffix(']')
                .ok_or_else(|| parse_err(ln, "unterminated section header"))?;
            current = Some(
                section_for(header)
                    .ok_or_else(|| parse_err(ln, format!("unknown section [{header}]")))?,
            );
            continue;
        }
        if current.is_none() {
            if let Some(rest) = line.strip_prefix("name ") {
                name = rest.trim().to_string();
                continue;
            }
            return Err(parse_err(ln, "content before any section header"));
        }
        let sec = current.unwrap();
        match sec {
            Section::States | Section::Actions(_) | Section::Observations(_) => {
                let toks: Vec<String> = line.split_whitespace().map(str::to_string).collect();
                labels.entry(sec).or_default().extend(toks);
            }
            _ => {
                let toks: Vec<String> = line.split_whitespace().map(str::to_string).collect();
                if toks.len() < 4 {
                    return Err(parse_err(ln, "table row needs <a_i> <a_j> <state> <values...>"));
                }
                rows.entry(sec).or_default().push((ln, toks));
            }
        }
    }

    let take_labels = |sec: Section, what: &str| -> Result<Vec<String>> {
        labels
            .get(&sec)
            .filter(|v| !v.is_empty())
            .cloned()
            .ok_or_else(|| NestError::Parse { line: 0, msg: format!("missing [{what}] section") })
    };
    let states = take_labels(Section::States, "states")?;
    let actions = [
        take_labels(Section::Actions(Agent::I), "actions i")?,
        take_labels(Section::Actions(Agent::J), "actions j")?,
    ];
    let observations = [
        take_labels(Section::Observations(Agent::I), "observations i")?,
        take_labels(Section::Observations(Agent::J), "observations j")?,
    ];
    let ns = states.len();
    let (nai, naj) = (actions[0].len(), actions[1].len());

    let index_of = |pool: &[String], tok: &str, ln: usize, what: &str| -> Result<Option<usize>> {
        if tok == "*" {
            return Ok(None);
        }
        pool.iter()
            .position(|x| x == tok)
            .map(Some)
            .ok_or_else(|| parse_err(ln, format!("unknown {what} label '{tok}'")))
    };

    let build_table = |sec: Section, width: usize, table_name: &str| -> Result<Vec<f64>> {
        let mut spec = TableSpec::new(nai, naj, ns, width);
        for (ln, toks) in rows.get(&sec).map(Vec::as_slice).unwrap_or(&[]) {
            let pat = RowPattern {
                ai: index_of(&actions[0], &toks[0], *ln, "a_i")?,
                aj: index_of(&actions[1], &toks[1], *ln, "a_j")?,
                state: index_of(&states, &toks[2], *ln, "state")?,
            };
            let values: Vec<f64> = toks[3..]
                .iter()
                .map(|t| {
                    t.parse::<f64>()
                        .map_err(|_| parse_err(*ln, format!("bad number '{t}'")))
                })
                .collect::<Result<_>>()?;
            if values.len() != width {
                return Err(parse_err(
                    *ln,
                    format!("{table_name} row has {} values, expected {width}", values.len()),
                ));
            }
            spec.add(pat, values)?;
        }
        spec.build(table_name)
    };

    let transition = build_table(Section::Transition, ns, "transition")?;
    let obsfn = [
        build_table(Section::Observation(Agent::I), observations[0].len(), "observation i")?,
        build_table(Section::Observation(Agent::J), observations[1].len(), "observation j")?,
    ];
    let reward = [
        build_table(Section::Reward(Agent::I), 1, "reward i")?,
        build_table(Section::Reward(Agent::J), 1, "reward j")?,
    ];
    let d = Domain::from_tables(name, states, actions, observations, transition, obsfn, reward);
    let report = validate_domain(&d);
    if !report.is_empty() {
        let msgs: Vec<String> = report.iter().map(|v| v.to_string()).collect();
        return Err(NestError::Validation(msgs.join("; ")));
    }
    Ok(d)
}

/// Write a domain in the canonical file format; `load_domain` on the result
/// reproduces the tables exactly (values are printed with full precision).
pub fn serialize_domain(d: &Domain) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    let _ = writeln!(out, "name {}", d.name);
    let _ = writeln!(out, "\n[states]");
    for s in &d.states {
        let _ = writeln!(out, "{s}");
    }
    for (agent, what) in [(Agent::I, "actions i"), (Agent::J, "actions j")] {
        let _ = writeln!(out, "\n[{what}]");
        for a in &d.actions[agent.idx()] {
            let _ = writeln!(out, "{a}");
        }
    }
    for (agent, what) in [(Agent::I, "observations i"), (Agent::J, "observations j")] {
        let _ = writeln!(out, "\n[{what}]");
        for o in &d.observations[agent.idx()] {
            let _ = writeln!(out, "{o}");
        }
    }
    let fmt_vals = |vals: &[f64]| -> String {
        vals.iter()
            .map(|v| format!("{v:?}"))
            .collect::<Vec<_>>()
            .join(" ")
    };
    let mut emit_rows = |what: &str, row: &dyn Fn(usize, usize, usize) -> Vec<f64>| {
        let _ = writeln!(out, "\n[{what}]");
        for ai in 0..d.n_actions(Agent::I) {
            for aj in 0..d.n_actions(Agent::J) {
                for s in 0..d.n_states() {
                    let _ = writeln!(
                        out,
                        "{} {} {} {}",
                        d.actions[0][ai],
                        d.actions[1][aj],
                        d.states[s],
                        fmt_vals(&row(ai, aj, s))
                    );
                }
            }
        }
    };
    emit_rows("transition", &|ai, aj, s| d.transition_row(ai, aj, s).to_vec());
    emit_rows("observation i", &|ai, aj, s| d.obs_row(Agent::I, ai, aj, s).to_vec());
    emit_rows("observation j", &|ai, aj, s| d.obs_row(Agent::J, ai, aj, s).to_vec());
    emit_rows("reward i", &|ai, aj, s| vec![d.reward(Agent::I, ai, aj, s)]);
    emit_rows("reward j", &|ai, aj, s| vec![d.reward(Agent::J, ai, aj, s)]);
    out
}

/// Parse a prior file against a domain. Mixture components may name
/// built-in priors.
pub fn load_prior(text: &str, domain: &Domain) -> Result<NestedPrior> {
    let ns = domain.n_states();
    let mut level: Option<usize> = None;
    let mut marginal: Vec<f64> = Vec::new();
    let mut densities: Vec<Option<(usize, DensitySpec)>> = vec![None; ns];
    let mut components: Vec<(f64, NestedPrior)> = Vec::new();
    #[derive(Clone, Copy)]
    enum PSec {
        Marginal,
        Density(usize),
        Components,
    }
    let mut current: Option<PSec> = None;

    for (ln, line) in logical_lines(text) {
        if let Some(rest) = line.strip_prefix("level ") {
            level = Some(
                rest.trim()
                    .parse()
                    .map_err(|_| parse_err(ln, "bad level number"))?,
            );
            continue;
        }
        if let Some(header) = line.strip_prefix('[') {
            let header = header
                .strip_suffix(']')
                .ok_or_else(|| parse_err(ln, "unterminated section header"))?;
            current = Some(if header == "marginal" {
                PSec::Marginal
            } else if header == "components" {
                PSec::Components
            } else if let Some(state) = header.strip_prefix("density ") {
                let s = domain
                    .state_index(state.trim())
                    .ok_or_else(|| parse_err(ln, format!("unknown state '{state}'")))?;
                PSec::Density(s)
            } else {
                return Err(parse_err(ln, format!("unknown section [{header}]")));
            });
            continue;
        }
        match current {
            None => return Err(parse_err(ln, "content before any section header")),
            Some(PSec::Marginal) => {
                for tok in line.split_whitespace() {
                    marginal.push(
                        tok.parse()
                            .map_err(|_| parse_err(ln, format!("bad number '{tok}'")))?,
                    );
                }
            }
            Some(PSec::Density(s)) => {
                densities[s] = Some((ln, parse_density(ln, line)?));
            }
            Some(PSec::Components) => {
                let mut toks = line.split_whitespace();
                let w: f64 = toks
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| parse_err(ln, "component line needs <weight> <name>"))?;
                let name = toks
                    .next()
                    .ok_or_else(|| parse_err(ln, "component line needs <weight> <name>"))?;
                components.push((w, builtin_prior(name, domain)?));
            }
        }
    }

    let level = level.ok_or_else(|| NestError::Parse {
        line: 0,
        msg: "prior file must declare `level <l>`".into(),
    })?;
    let prior = match level {
        0 => NestedPrior::Level0(marginal),
        1 => {
            let densities = densities
                .into_iter()
                .enumerate()
                .map(|(s, d)| {
                    d.map(|(_, spec)| spec).ok_or_else(|| NestError::Parse {
                        line: 0,
                        msg: format!("missing [density {}] section", domain.states[s]),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            NestedPrior::Level1 { state_marginal: marginal, densities }
        }
        _ => NestedPrior::Mixture { level, state_marginal: marginal, components },
    };
    prior.validate(ns)?;
    Ok(prior)
}

fn parse_density(ln: usize, line: &str) -> Result<DensitySpec> {
    let mut toks = line.split_whitespace();
    match toks.next() {
        Some("uniform") => Ok(DensitySpec::Uniform),
        Some("piecewise") => {
            let rest: String = toks.collect::<Vec<_>>().join(" ");
            let bins = rest
                .split(';')
                .map(|chunk| {
                    let nums: Vec<f64> = chunk
                        .split_whitespace()
                        .map(|t| {
                            t.parse()
                                .map_err(|_| parse_err(ln, format!("bad number '{t}'")))
                        })
                        .collect::<Result<_>>()?;
                    if nums.len() != 3 {
                        return Err(parse_err(ln, "piecewise bin needs `lo hi density`"));
                    }
                    Ok((nums[0], nums[1], nums[2]))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(DensitySpec::Piecewise(bins))
        }
        Some("point") => {
            let rest: String = toks.collect::<Vec<_>>().join(" ");
            let points = rest
                .split(';')
                .map(|chunk| {
                    let nums: Vec<f64> = chunk
                        .split_whitespace()
                        .map(|t| {
                            t.parse()
                                .map_err(|_| parse_err(ln, format!("bad number '{t}'")))
                        })
                        .collect::<Result<_>>()?;
                    if nums.len() < 2 {
                        return Err(parse_err(ln, "point needs `b1 .. bn weight`"));
                    }
                    let (belief, w) = nums.split_at(nums.len() - 1);
                    Ok((belief.to_vec(), w[0]))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(DensitySpec::PointMass(points))
        }
        other => Err(parse_err(
            ln,
            format!("unknown density kind {:?} (uniform | piecewise | point)", other.unwrap_or("")),
        )),
    }
}
