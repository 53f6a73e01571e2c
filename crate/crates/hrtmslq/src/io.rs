//! Text formats for instances, matchings and graphs.
//!
//! All files are line oriented, `#`-prefixed lines are comments, and indices
//! are 1-based on disk (0-based in the API).
//!
//! Instance format:
//!
//! ```text
//! hrtmslq 1
//! n 2 m 3
//! h 1 1 1 : ( 1 2 )
//! h 2 1 1 : ( 1 2 )
//! h 3 0 1 : ( 1 2 )
//! r 1 : 1 2 3
//! r 2 : 1 2 3
//! ```
//!
//! A preference list is a whitespace-separated token stream where `(` and `)`
//! are standalone tokens delimiting a tie and a bare index is a singleton
//! tie. The header `hrtmslq 1 incomplete` marks files whose lists may omit
//! counterparts (used for auxiliary instances without ties).
//!
//! Matching format: a `matching` header line, then one `<resident>
//! <hospital>` line per matched resident. Graph format: a `graph <vertices>
//! <edges>` header, then `e <u> <v>` lines.

use thiserror::Error;

use crate::classic::StrictInstance;
use crate::instances::Graph;
use crate::model::{Instance, Matching, ModelError, PreferenceOrder};

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum IoError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn syntax(line: usize, message: impl Into<String>) -> IoError {
    IoError::Syntax {
        line,
        message: message.into(),
    }
}

/// Instance data as read from disk, before validation.
#[derive(Clone, Debug)]
pub struct ParsedInstance {
    pub n: usize,
    pub m: usize,
    pub lower: Vec<usize>,
    pub upper: Vec<usize>,
    /// Hospital preference tiers over residents, 0-based.
    pub hospital_tiers: Vec<Vec<Vec<usize>>>,
    /// Resident preference tiers over hospitals, 0-based.
    pub resident_tiers: Vec<Vec<Vec<usize>>>,
    /// Header allowed incomplete lists.
    pub incomplete: bool,
}

impl ParsedInstance {
    /// Validates into a complete-list instance.
    pub fn into_instance(self) -> Result<Instance, ModelError> {
        let m = self.m;
        let n = self.n;
        let resident_prefs = self
            .resident_tiers
            .into_iter()
            .map(|tiers| PreferenceOrder::new(tiers, m))
            .collect::<Result<Vec<_>, _>>()?;
        let hospital_prefs = self
            .hospital_tiers
            .into_iter()
            .map(|tiers| PreferenceOrder::new(tiers, n))
            .collect::<Result<Vec<_>, _>>()?;
        Instance::new(resident_prefs, hospital_prefs, self.lower, self.upper)
    }

    /// Validates into a strict instance (all ties must be singletons; lists
    /// may be incomplete).
    pub fn into_strict(self) -> Result<StrictInstance, ModelError> {
        let flatten = |tiers: Vec<Vec<Vec<usize>>>| -> Result<Vec<Vec<usize>>, ModelError> {
            tiers
                .into_iter()
                .enumerate()
                .map(|(agent, list)| {
                    list.into_iter()
                        .map(|tier| {
                            if tier.len() == 1 {
                                Ok(tier[0])
                            } else {
                                Err(ModelError::IncompletePreference {
                                    side: crate::model::Side::Resident,
                                    agent,
                                    counterpart: *tier.first().unwrap_or(&0),
                                })
                            }
                        })
                        .collect()
                })
                .collect()
        };
        StrictInstance::new(
            flatten(self.resident_tiers)?,
            flatten(self.hospital_tiers)?,
            self.lower,
            self.upper,
        )
    }
}

/// Numbered non-comment, non-blank lines.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn parse_index(token: &str, line: usize, what: &str) -> Result<usize, IoError> {
    let value: usize = token
        .parse()
        .map_err(|_| syntax(line, format!("expected {what}, found `{token}`")))?;
    if value == 0 {
        return Err(syntax(line, format!("{what} must be 1-based, found 0")));
    }
    Ok(value - 1)
}

fn parse_pref(tokens: &[&str], line: usize) -> Result<Vec<Vec<usize>>, IoError> {
    let mut tiers = Vec::new();
    let mut open: Option<Vec<usize>> = None;
    for &tok in tokens {
        match tok {
            "(" => {
                if open.is_some() {
                    return Err(syntax(line, "nested tie"));
                }
                open = Some(Vec::new());
            }
            ")" => match open.take() {
                Some(tie) if tie.is_empty() => return Err(syntax(line, "empty tie")),
                Some(tie) => tiers.push(tie),
                None => return Err(syntax(line, "unmatched `)`")),
            },
            _ => {
                let idx = parse_index(tok, line, "preference entry")?;
                match &mut open {
                    Some(tie) => tie.push(idx),
                    None => tiers.push(vec![idx]),
                }
            }
        }
    }
    if open.is_some() {
        return Err(syntax(line, "unterminated tie"));
    }
    Ok(tiers)
}

/// Parses the instance format. Structural validation only; completeness and
/// quota checks happen in [`ParsedInstance::into_instance`].
pub fn parse_instance(text: &str) -> Result<ParsedInstance, IoError> {
    let mut lines = content_lines(text);
    let (lno, header) = lines
        .next()
        .ok_or_else(|| syntax(0, "empty file, expected `hrtmslq 1` header"))?;
    let incomplete = match header.split_whitespace().collect::<Vec<_>>()[..] {
        ["hrtmslq", "1"] => false,
        ["hrtmslq", "1", "incomplete"] => true,
        _ => return Err(syntax(lno, "expected `hrtmslq 1` header")),
    };
    let (lno, sizes) = lines.next().ok_or_else(|| syntax(lno, "missing size line"))?;
    let (n, m) = match sizes.split_whitespace().collect::<Vec<_>>()[..] {
        ["n", n, "m", m] => {
            let n: usize = n
                .parse()
                .map_err(|_| syntax(lno, "bad resident count"))?;
            let m: usize = m
                .parse()
                .map_err(|_| syntax(lno, "bad hospital count"))?;
            (n, m)
        }
        _ => return Err(syntax(lno, "expected `n <residents> m <hospitals>`")),
    };

    let mut lower = vec![0usize; m];
    let mut upper = vec![0usize; m];
    let mut hospital_tiers = Vec::with_capacity(m);
    for want in 0..m {
        let (lno, line) = lines
            .next()
            .ok_or_else(|| syntax(0, format!("missing hospital line {}", want + 1)))?;
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() < 5 || tokens[0] != "h" {
            return Err(syntax(lno, "expected `h <j> <lower> <upper> : <pref>`"));
        }
        let j = parse_index(tokens[1], lno, "hospital index")?;
        if j != want {
            return Err(syntax(
                lno,
                format!("hospital lines out of order: expected {}, found {}", want + 1, j + 1),
            ));
        }
        lower[j] = tokens[2]
            .parse()
            .map_err(|_| syntax(lno, "bad lower quota"))?;
        upper[j] = tokens[3]
            .parse()
            .map_err(|_| syntax(lno, "bad upper quota"))?;
        if tokens[4] != ":" {
            return Err(syntax(lno, "expected `:` before preference list"));
        }
        hospital_tiers.push(parse_pref(&tokens[5..], lno)?);
    }

    let mut resident_tiers = Vec::with_capacity(n);
    for want in 0..n {
        let (lno, line) = lines
            .next()
            .ok_or_else(|| syntax(0, format!("missing resident line {}", want + 1)))?;
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() < 3 || tokens[0] != "r" {
            return Err(syntax(lno, "expected `r <i> : <pref>`"));
        }
        let i = parse_index(tokens[1], lno, "resident index")?;
        if i != want {
            return Err(syntax(
                lno,
                format!("resident lines out of order: expected {}, found {}", want + 1, i + 1),
            ));
        }
        if tokens[2] != ":" {
            return Err(syntax(lno, "expected `:` before preference list"));
        }
        resident_tiers.push(parse_pref(&tokens[3..], lno)?);
    }
    if let Some((lno, _)) = lines.next() {
        return Err(syntax(lno, "trailing content after instance"));
    }
    Ok(ParsedInstance {
        n,
        m,
        lower,
        upper,
        hospital_tiers,
        resident_tiers,
        incomplete,
    })
}

fn write_pref(out: &mut String, tiers: &[Vec<usize>]) {
    for tier in tiers {
        if tier.len() == 1 {
            out.push_str(&format!(" {}", tier[0] + 1));
        } else {
            out.push_str(" (");
            for &x in tier {
                out.push_str(&format!(" {}", x + 1));
            }
            out.push_str(" )");
        }
    }
}

fn write_parts(
    n: usize,
    m: usize,
    lower: &[usize],
    upper: &[usize],
    hospital_tiers: impl Fn(usize) -> Vec<Vec<usize>>,
    resident_tiers: impl Fn(usize) -> Vec<Vec<usize>>,
    incomplete: bool,
) -> String {
    let mut out = String::new();
    out.push_str(if incomplete {
        "hrtmslq 1 incomplete\n"
    } else {
        "hrtmslq 1\n"
    });
    out.push_str(&format!("n {n} m {m}\n"));
    for j in 0..m {
        out.push_str(&format!("h {} {} {} :", j + 1, lower[j], upper[j]));
        write_pref(&mut out, &hospital_tiers(j));
        out.push('\n');
    }
    for i in 0..n {
        out.push_str(&format!("r {} :", i + 1));
        write_pref(&mut out, &resident_tiers(i));
        out.push('\n');
    }
    out
}

/// Canonical text form of an instance (ties listed ascending).
pub fn write_instance(inst: &Instance) -> String {
    write_parts(
        inst.residents(),
        inst.hospitals(),
        inst.lowers(),
        inst.uppers(),
        |j| inst.hospital_pref(j).tiers().to_vec(),
        |i| inst.resident_pref(i).tiers().to_vec(),
        false,
    )
}

/// Text form of a strict instance, flagged `incomplete` since lists need not
/// cover all counterparts.
pub fn write_strict_instance(inst: &StrictInstance) -> String {
    let singleton = |list: &[usize]| list.iter().map(|&x| vec![x]).collect::<Vec<_>>();
    write_parts(
        inst.residents(),
        inst.hospitals(),
        inst.lowers(),
        inst.uppers(),
        |j| singleton(inst.hospital_list(j)),
        |i| singleton(inst.resident_list(i)),
        true,
    )
}

pub fn write_matching(mat: &Matching) -> String {
    let mut out = String::from("matching\n");
    for (r, h) in mat.pairs() {
        out.push_str(&format!("{} {}\n", r + 1, h + 1));
    }
    out
}

/// Parses the matching format against known instance dimensions.
pub fn parse_matching(text: &str, n: usize, m: usize) -> Result<Matching, IoError> {
    let mut lines = content_lines(text);
    match lines.next() {
        Some((_, "matching")) => {}
        Some((lno, _)) => return Err(syntax(lno, "expected `matching` header")),
        None => return Err(syntax(0, "empty file, expected `matching` header")),
    }
    let mut mat = Matching::empty(n);
    for (lno, line) in lines {
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() != 2 {
            return Err(syntax(lno, "expected `<resident> <hospital>`"));
        }
        let r = parse_index(tokens[0], lno, "resident index")?;
        let h = parse_index(tokens[1], lno, "hospital index")?;
        if r >= n {
            return Err(syntax(lno, format!("resident {} out of range", r + 1)));
        }
        if h >= m {
            return Err(syntax(lno, format!("hospital {} out of range", h + 1)));
        }
        if mat.get(r).is_some() {
            return Err(syntax(lno, format!("resident {} assigned twice", r + 1)));
        }
        mat.set(r, Some(h));
    }
    Ok(mat)
}

pub fn write_graph(g: &Graph) -> String {
    let mut out = format!("graph {} {}\n", g.vertices(), g.edges().len());
    for &(u, v) in g.edges() {
        out.push_str(&format!("e {} {}\n", u + 1, v + 1));
    }
    out
}

pub fn parse_graph(text: &str) -> Result<Graph, IoError> {
    let mut lines = content_lines(text);
    let (lno, header) = lines
        .next()
        .ok_or_else(|| syntax(0, "empty file, expected `graph` header"))?;
    let (nv, ne) = match header.split_whitespace().collect::<Vec<_>>()[..] {
        ["graph", nv, ne] => {
            let nv: usize = nv.parse().map_err(|_| syntax(lno, "bad vertex count"))?;
            let ne: usize = ne.parse().map_err(|_| syntax(lno, "bad edge count"))?;
            (nv, ne)
        }
        _ => return Err(syntax(lno, "expected `graph <vertices> <edges>`")),
    };
    let mut edges = Vec::with_capacity(ne);
    for (lno, line) in lines {
        let tokens: Vec<&str> = line.split_whitespace().collect();
        match tokens[..] {
            ["e", u, v] => {
                let u = parse_index(u, lno, "vertex")?;
                let v = parse_index(v, lno, "vertex")?;
                if u >= nv || v >= nv {
                    return Err(syntax(lno, "vertex out of range"));
                }
                edges.push((u, v));
            }
            _ => return Err(syntax(lno, "expected `e <u> <v>`")),
        }
    }
    if edges.len() != ne {
        return Err(syntax(
            0,
            format!("header declared {ne} edges, found {}", edges.len()),
        ));
    }
    Graph::new(nv, edges).map_err(|e| syntax(0, e.to_string()))
}
