//! Line-oriented model files.
//!
//! ```text
//! species: S E C P
//! x0: 5e-7 2e-7 0 0
//! vnom: 6.022e8
//! tfinal: 50
//! reaction k1: S + E -> C
//! rate k1 = 1e6 pm 10%
//! qoi: timeavg P
//! ```
//!
//! A reaction's rate label may be a `*`-separated product of named constants.
//! `0`, `∅` or an empty side denote no species.

use std::collections::HashSet;
use std::fmt;

use thiserror::Error;

use super::{NetworkError, ParameterSpec, RateConstant, Reaction, ReactionNetwork, UncertainParameter, MAX_ORDER};
use crate::stochastic::{QoiKind, QoiSpec};

/// Everything a model file declares.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub network: ReactionNetwork,
    pub params: ParameterSpec,
    pub qoi: QoiSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ParseErrorKind {
    Syntax(String),
    UnknownSpecies(String),
    DuplicateSpecies(String),
    UnsupportedOrder(u32),
    UnknownRate(String),
    DuplicateRate(String),
    UnusedRate(String),
    Missing(&'static str),
    Invalid(String),
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseErrorKind::Syntax(msg) => write!(f, "syntax error: {msg}"),
            ParseErrorKind::UnknownSpecies(s) => write!(f, "unknown species `{s}`"),
            ParseErrorKind::DuplicateSpecies(s) => write!(f, "duplicate species `{s}`"),
            ParseErrorKind::UnsupportedOrder(o) => {
                write!(f, "unsupported reaction order {o} (at most {MAX_ORDER})")
            }
            ParseErrorKind::UnknownRate(r) => write!(f, "rate `{r}` is not declared by a `rate` line"),
            ParseErrorKind::DuplicateRate(r) => write!(f, "rate `{r}` declared twice"),
            ParseErrorKind::UnusedRate(r) => write!(f, "rate `{r}` is not used by any reaction"),
            ParseErrorKind::Missing(d) => write!(f, "missing `{d}` directive"),
            ParseErrorKind::Invalid(msg) => write!(f, "{msg}"),
        }
    }
}

/// Parse failure; `line` is 1-based, 0 when the problem is file-wide.
#[derive(Debug, Error, Clone, PartialEq)]
pub struct ParseError {
    pub line: usize,
    pub kind: ParseErrorKind,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line == 0 {
            write!(f, "{}", self.kind)
        } else {
            write!(f, "line {}: {}", self.line, self.kind)
        }
    }
}

fn err(line: usize, kind: ParseErrorKind) -> ParseError {
    ParseError { line, kind }
}

fn syntax(line: usize, msg: impl Into<String>) -> ParseError {
    err(line, ParseErrorKind::Syntax(msg.into()))
}

struct PendingReaction {
    line: usize,
    rate_label: String,
    lhs: Vec<(u32, String)>,
    rhs: Vec<(u32, String)>,
}

struct PendingRate {
    line: usize,
    name: String,
    nominal: f64,
    half_width: Option<f64>,
}

enum PendingQoi {
    TimeAverage(String),
    Endpoint(String, f64),
}

fn parse_number(line: usize, s: &str) -> Result<f64, ParseError> {
    s.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| syntax(line, format!("`{s}` is not a number")))
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_alphabetic() || c == '_')
        && chars.all(|c| c.is_alphanumeric() || c == '_' || c == '\'')
}

fn parse_side(line: usize, side: &str) -> Result<Vec<(u32, String)>, ParseError> {
    let side = side.trim();
    if side.is_empty() || side == "0" || side == "∅" {
        return Ok(Vec::new());
    }
    side.split('+')
        .map(|term| {
            let parts: Vec<&str> = term.split_whitespace().collect();
            match parts.as_slice() {
                [name] if is_identifier(name) => Ok((1, (*name).to_string())),
                [coef, name] if is_identifier(name) => {
                    let n: u32 = coef
                        .parse()
                        .map_err(|_| syntax(line, format!("bad stoichiometric coefficient `{coef}`")))?;
                    Ok((n, (*name).to_string()))
                }
                _ => Err(syntax(line, format!("cannot read reaction term `{}`", term.trim()))),
            }
        })
        .collect()
}

fn parse_reaction(line: usize, rest: &str) -> Result<PendingReaction, ParseError> {
    let (label, body) = rest
        .split_once(':')
        .ok_or_else(|| syntax(line, "expected `reaction RATE: LHS -> RHS`"))?;
    let rate_label = label.trim().to_string();
    if rate_label.split('*').any(|f| !is_identifier(f.trim())) {
        return Err(syntax(line, format!("bad rate label `{rate_label}`")));
    }
    let (lhs, rhs) = body
        .split_once("->")
        .ok_or_else(|| syntax(line, "reaction is missing `->`"))?;
    Ok(PendingReaction {
        line,
        rate_label,
        lhs: parse_side(line, lhs)?,
        rhs: parse_side(line, rhs)?,
    })
}

fn parse_rate(line: usize, rest: &str) -> Result<PendingRate, ParseError> {
    let (name, value) = rest
        .split_once('=')
        .ok_or_else(|| syntax(line, "expected `rate NAME = VALUE [pm Q%]`"))?;
    let name = name.trim().to_string();
    if !is_identifier(&name) {
        return Err(syntax(line, format!("bad rate name `{name}`")));
    }
    let tokens: Vec<&str> = value.split_whitespace().collect();
    let (nominal, half_width) = match tokens.as_slice() {
        [v] => (parse_number(line, v)?, None),
        [v, "pm", q] => {
            let pct = q
                .strip_suffix('%')
                .ok_or_else(|| syntax(line, "uncertainty must be written as `pm Q%`"))?;
            (parse_number(line, v)?, Some(parse_number(line, pct)? / 100.0))
        }
        _ => return Err(syntax(line, "expected `rate NAME = VALUE [pm Q%]`")),
    };
    if nominal <= 0.0 {
        return Err(err(line, ParseErrorKind::Invalid(format!("rate `{name}` must be positive"))));
    }
    if let Some(rho) = half_width {
        if !(0.0..1.0).contains(&rho) {
            return Err(err(
                line,
                ParseErrorKind::Invalid(format!("relative half-width of `{name}` must lie in [0%, 100%)")),
            ));
        }
    }
    Ok(PendingRate {
        line,
        name,
        nominal,
        half_width,
    })
}

fn parse_qoi(line: usize, rest: &str) -> Result<PendingQoi, ParseError> {
    let tokens: Vec<&str> = rest.split_whitespace().collect();
    match tokens.as_slice() {
        ["timeavg", s] => Ok(PendingQoi::TimeAverage((*s).to_string())),
        ["endpoint", s, "@", t] => Ok(PendingQoi::Endpoint((*s).to_string(), parse_number(line, t)?)),
        _ => Err(syntax(line, "expected `qoi: timeavg X` or `qoi: endpoint X @ T`")),
    }
}

/// Parse and validate a model file.
pub fn parse_model(text: &str) -> Result<Model, ParseError> {
    let mut species: Option<(usize, Vec<String>)> = None;
    let mut x0: Option<(usize, Vec<f64>)> = None;
    let mut vnom: Option<f64> = None;
    let mut tfinal: Option<f64> = None;
    let mut qoi: Option<(usize, PendingQoi)> = None;
    let mut reactions = Vec::new();
    let mut rates: Vec<PendingRate> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (keyword, rest) = match content.split_once(char::is_whitespace) {
            Some((k, r)) => (k, r.trim()),
            None => (content, ""),
        };
        match keyword {
            "reaction" => reactions.push(parse_reaction(line, rest)?),
            "rate" => {
                let rate = parse_rate(line, rest)?;
                if rates.iter().any(|r| r.name == rate.name) {
                    return Err(err(line, ParseErrorKind::DuplicateRate(rate.name)));
                }
                rates.push(rate);
            }
            _ => {
                let (directive, value) = content
                    .split_once(':')
                    .ok_or_else(|| syntax(line, format!("unrecognised line `{content}`")))?;
                let value = value.trim();
                match directive.trim() {
                    "species" => {
                        let names: Vec<String> = value.split_whitespace().map(str::to_string).collect();
                        if names.is_empty() {
                            return Err(syntax(line, "no species listed"));
                        }
                        let mut seen = HashSet::new();
                        for n in &names {
                            if !is_identifier(n) {
                                return Err(syntax(line, format!("bad species name `{n}`")));
                            }
                            if !seen.insert(n.as_str()) {
                                return Err(err(line, ParseErrorKind::DuplicateSpecies(n.clone())));
                            }
                        }
                        species = Some((line, names));
                    }
                    "x0" => {
                        let values = value
                            .split_whitespace()
                            .map(|v| parse_number(line, v))
                            .collect::<Result<Vec<_>, _>>()?;
                        x0 = Some((line, values));
                    }
                    "vnom" => vnom = Some(parse_number(line, value)?),
                    "tfinal" => tfinal = Some(parse_number(line, value)?),
                    "qoi" => qoi = Some((line, parse_qoi(line, value)?)),
                    other => return Err(syntax(line, format!("unknown directive `{other}`"))),
                }
            }
        }
    }

    let (species_line, species) = species.ok_or(err(0, ParseErrorKind::Missing("species")))?;
    let n = species.len();
    let (x0_line, x0) = x0.ok_or(err(0, ParseErrorKind::Missing("x0")))?;
    if x0.len() != n {
        return Err(err(
            x0_line,
            ParseErrorKind::Invalid(format!("x0 has {} entries for {n} species", x0.len())),
        ));
    }
    if let Some(v) = x0.iter().find(|v| **v < 0.0) {
        return Err(err(x0_line, ParseErrorKind::Invalid(format!("negative initial concentration {v}"))));
    }
    let v_nom = vnom.ok_or(err(0, ParseErrorKind::Missing("vnom")))?;
    let t_final = tfinal.ok_or(err(0, ParseErrorKind::Missing("tfinal")))?;
    let (qoi_line, qoi) = qoi.ok_or(err(0, ParseErrorKind::Missing("qoi")))?;

    let constants: Vec<RateConstant> = rates
        .iter()
        .map(|r| RateConstant {
            name: r.name.clone(),
            nominal: r.nominal,
        })
        .collect();
    let mut used = vec![false; constants.len()];

    let species_index = |line: usize, name: &str| {
        species
            .iter()
            .position(|s| s == name)
            .ok_or_else(|| err(line, ParseErrorKind::UnknownSpecies(name.to_string())))
    };

    let mut built = Vec::with_capacity(reactions.len());
    for p in &reactions {
        let mut consumed = vec![0u32; n];
        let mut created = vec![0u32; n];
        for (coef, name) in &p.lhs {
            consumed[species_index(p.line, name)?] += coef;
        }
        for (coef, name) in &p.rhs {
            created[species_index(p.line, name)?] += coef;
        }
        let order: u32 = consumed.iter().sum();
        if order > MAX_ORDER {
            return Err(err(p.line, ParseErrorKind::UnsupportedOrder(order)));
        }
        if consumed == created {
            return Err(err(
                p.line,
                ParseErrorKind::Invalid("reaction has no net stoichiometric change".into()),
            ));
        }
        let mut factors = Vec::new();
        for f in p.rate_label.split('*').map(str::trim) {
            let idx = constants
                .iter()
                .position(|c| c.name == f)
                .ok_or_else(|| err(p.line, ParseErrorKind::UnknownRate(f.to_string())))?;
            used[idx] = true;
            factors.push(idx);
        }
        let k_nominal = factors.iter().map(|&f| constants[f].nominal).product();
        built.push(Reaction {
            consumed,
            created,
            rate_name: p.rate_label.clone(),
            rate_factors: factors,
            k_nominal,
        });
    }
    if let Some(pos) = used.iter().position(|u| !u) {
        return Err(err(rates[pos].line, ParseErrorKind::UnusedRate(rates[pos].name.clone())));
    }

    let params = ParameterSpec {
        entries: rates
            .iter()
            .enumerate()
            .filter_map(|(i, r)| {
                r.half_width.map(|rho| UncertainParameter {
                    name: r.name.clone(),
                    constant: i,
                    nominal: r.nominal,
                    half_width: rho,
                })
            })
            .collect(),
    };

    let (kind, qoi_species) = match qoi {
        PendingQoi::TimeAverage(s) => (QoiKind::TimeAverage, s),
        PendingQoi::Endpoint(s, t) => {
            if !(0.0..=t_final).contains(&t) {
                return Err(err(
                    qoi_line,
                    ParseErrorKind::Invalid(format!("endpoint time {t} lies outside [0, {t_final}]")),
                ));
            }
            (QoiKind::Endpoint { t_star: t }, s)
        }
    };
    let qoi = QoiSpec {
        kind,
        species: species_index(qoi_line, &qoi_species)?,
        horizon: t_final,
    };

    let network = ReactionNetwork {
        species,
        reactions: built,
        constants,
        x0,
        v_nom,
        t_final,
    };
    network.validate().map_err(|e| {
        let line = match e {
            NetworkError::DuplicateSpecies(_) | NetworkError::NoSpecies => species_line,
            _ => 0,
        };
        err(line, ParseErrorKind::Invalid(e.to_string()))
    })?;

    Ok(Model { network, params, qoi })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MM: &str = "\
species: S E C P
x0: 5e-7 2e-7 0 0
vnom: 6.022e8
tfinal: 50
reaction k1: S + E -> C
reaction k2: C -> S + E
reaction k3: C -> E + P
rate k1 = 1e6 pm 10%
rate k2 = 1e-4 pm 10%
rate k3 = 0.1 pm 10%
qoi: timeavg P          # time average of the product
";

    fn with_header(body: &str) -> String {
        format!("species: A B C D\nx0: 1 1 0 0\nvnom: 1\ntfinal: 1\nrate k = 1\nqoi: timeavg A\n{body}")
    }

    #[test]
    fn parses_michaelis_menten() {
        let m = parse_model(MM).unwrap();
        assert_eq!(m.network.n_species(), 4);
        assert_eq!(m.network.n_reactions(), 3);
        assert_eq!(m.params.len(), 3);
        assert_eq!(m.params.entries[0].half_width, 0.1);
        assert_eq!(m.qoi.species, 3);
        assert_eq!(m.qoi.kind, QoiKind::TimeAverage);
        assert_eq!(
            m.network.stoich_matrix(),
            vec![vec![-1, 1, 0], vec![-1, 1, 1], vec![1, -1, -1], vec![0, 0, 1]]
        );
    }

    #[test]
    fn dimerization_coefficients() {
        let m = parse_model(&with_header("reaction k: 2 A -> B")).unwrap();
        let r = &m.network.reactions[0];
        assert_eq!(r.consumed, vec![2, 0, 0, 0]);
        assert_eq!(r.created, vec![0, 1, 0, 0]);
        assert_eq!(r.order(), 2);
    }

    #[test]
    fn rejects_third_order() {
        let e = parse_model(&with_header("reaction k: A + B + C -> D")).unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::UnsupportedOrder(3));
        assert_eq!(e.line, 7);
    }

    #[test]
    fn rejects_unknown_species_with_line() {
        let e = parse_model(&with_header("\nreaction k: A + Z -> D")).unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::UnknownSpecies("Z".into()));
        assert_eq!(e.line, 8);
    }

    #[test]
    fn rejects_duplicate_species() {
        let e = parse_model("species: A A\n").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::DuplicateSpecies("A".into()));
        assert_eq!(e.line, 1);
    }

    #[test]
    fn syntax_errors_carry_line_numbers() {
        let e = parse_model(&with_header("reaction k: A => B")).unwrap_err();
        assert!(matches!(e.kind, ParseErrorKind::Syntax(_)));
        assert_eq!(e.line, 7);
        let e = parse_model("species: A\nbogus line\n").unwrap_err();
        assert_eq!(e.line, 2);
    }

    #[test]
    fn composite_rates_and_empty_sides() {
        let text = "\
species: A B
x0: 1 0
vnom: 1
tfinal: 5
rate a = 2 pm 10%
rate b = 3
reaction a*b: A -> A + B
reaction b: B -> 0
reaction a: -> A
qoi: endpoint B @ 2.5
";
        let m = parse_model(text).unwrap();
        assert_eq!(m.network.nominal_rates(), vec![6.0, 3.0, 2.0]);
        assert_eq!(m.network.reactions[2].order(), 0);
        assert_eq!(m.params.names(), vec!["a"]);
        assert_eq!(m.qoi.kind, QoiKind::Endpoint { t_star: 2.5 });
    }

    #[test]
    fn fixed_and_unused_rates() {
        let e = parse_model(&with_header("reaction k: A -> B\nrate unused = 4")).unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::UnusedRate("unused".into()));
        let e = parse_model(&with_header("reaction q: A -> B")).unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::UnknownRate("q".into()));
        let e = parse_model(&with_header("reaction k: A -> B\nrate j = 1 pm 120%\nreaction j: B -> A")).unwrap_err();
        assert!(matches!(e.kind, ParseErrorKind::Invalid(_)));
    }

    #[test]
    fn missing_directive() {
        let e = parse_model("species: A\nx0: 1\n").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::Missing("vnom"));
    }

    #[test]
    fn network_without_reactions_is_accepted() {
        let m = parse_model("species: A\nx0: 2\nvnom: 1\ntfinal: 1\nqoi: timeavg A\n").unwrap();
        assert_eq!(m.network.n_reactions(), 0);
        assert!(m.params.is_empty());
    }
}
