//! Text format for [`TMSpec`].
//!
//! ```text
//! # comment
//! tapes 2
//! blank _
//! alphabet 0 1 _
//! states A B
//! start A
//! input 0            # optional, default 0
//! output 1           # optional, default last tape
//! write A [0,_] -> B [1,_]
//! move  B -> A [L,R]
//! step  A [0>1,R] -> B
//! ```
//!
//! Write-rule entries are symbols or `*`. A `*` read must be paired with a `*`
//! write (the cell is left alone); a symbol read with a `*` write leaves that
//! symbol in place. Move entries are `L`, `N` or `R`. Step entries are `*`
//! (untouched), `L`/`R`, or `a>b` (read `a`, write `b`). Directives may appear
//! in any order; `states` may be repeated.

use std::fmt::Write as _;

use super::{valid_symbol, Action, Dir, Rule, RuleKind, StateId, Symbol, TMSpec, TuringError};

struct RawRule<'a> {
    line: usize,
    kind: RuleKind,
    text: &'a str,
}

pub fn parse_tm(text: &str) -> Result<TMSpec, TuringError> {
    let perr = |line: usize, msg: &str| TuringError::Parse {
        line,
        msg: msg.to_string(),
    };

    let mut tapes: Option<usize> = None;
    let mut blank: Symbol = b'_';
    let mut alphabet: Vec<Symbol> = Vec::new();
    let mut states: Vec<String> = Vec::new();
    let mut start: Option<(usize, String)> = None;
    let mut input = 0usize;
    let mut output: Option<usize> = None;
    let mut raw_rules = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap().trim();
        if body.is_empty() {
            continue;
        }
        let (kw, rest) = body.split_once(char::is_whitespace).unwrap_or((body, ""));
        let rest = rest.trim();
        let single_sym = |s: &str| -> Result<Symbol, TuringError> {
            match s.as_bytes() {
                [c] if valid_symbol(*c) => Ok(*c),
                _ => Err(perr(
                    line,
                    &format!("`{s}` is not a single-character symbol"),
                )),
            }
        };
        let index = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| perr(line, &format!("bad integer `{s}`")))
        };
        match kw {
            "tapes" => {
                let m = index(rest)?;
                if m == 0 {
                    return Err(perr(line, "tape count must be positive"));
                }
                tapes = Some(m);
            }
            "blank" => blank = single_sym(rest)?,
            "alphabet" => {
                for tok in rest.split_whitespace() {
                    let c = single_sym(tok)?;
                    if !alphabet.contains(&c) {
                        alphabet.push(c);
                    }
                }
            }
            "states" => states.extend(rest.split_whitespace().map(str::to_string)),
            "start" => start = Some((line, rest.to_string())),
            "input" => input = index(rest)?,
            "output" => output = Some(index(rest)?),
            "write" => raw_rules.push(RawRule {
                line,
                kind: RuleKind::Write,
                text: rest,
            }),
            "move" => raw_rules.push(RawRule {
                line,
                kind: RuleKind::Move,
                text: rest,
            }),
            "step" => raw_rules.push(RawRule {
                line,
                kind: RuleKind::Step,
                text: rest,
            }),
            other => return Err(perr(line, &format!("unknown directive `{other}`"))),
        }
    }

    let tapes = tapes.ok_or_else(|| perr(0, "missing `tapes` directive"))?;
    if !alphabet.contains(&blank) {
        alphabet.push(blank);
    }
    let (start_line, start_name) = start.ok_or_else(|| perr(0, "missing `start` directive"))?;
    let lookup = |line: usize, name: &str| -> Result<StateId, TuringError> {
        states
            .iter()
            .position(|s| s == name)
            .map(|i| i as StateId)
            .ok_or_else(|| perr(line, &format!("undeclared state `{name}`")))
    };
    let start_id = lookup(start_line, &start_name)?;

    let mut rules = Vec::with_capacity(raw_rules.len());
    for rr in &raw_rules {
        let line = rr.line;
        let (lhs, rhs) = rr
            .text
            .split_once("->")
            .ok_or_else(|| perr(line, "missing `->`"))?;
        let (from_name, from_vec) = split_vec(lhs, line)?;
        let (to_name, to_vec) = split_vec(rhs, line)?;
        let from = lookup(line, from_name)?;
        let to = lookup(line, to_name)?;
        let check_arity = |v: &[&str]| {
            if v.len() == tapes {
                Ok(())
            } else {
                Err(TuringError::Arity {
                    line,
                    expected: tapes,
                    found: v.len(),
                })
            }
        };
        let sym = |s: &str| -> Result<Symbol, TuringError> {
            match s.as_bytes() {
                [c] if alphabet.contains(c) => Ok(*c),
                _ => Err(TuringError::UnknownSymbol {
                    line,
                    symbol: s.to_string(),
                }),
            }
        };
        let actions = match rr.kind {
            RuleKind::Write => {
                let (Some(r), Some(w)) = (from_vec, to_vec) else {
                    return Err(perr(line, "write rules need a vector on both sides"));
                };
                check_arity(&r)?;
                check_arity(&w)?;
                r.iter()
                    .zip(&w)
                    .map(|(&a, &b)| match (a, b) {
                        ("*", "*") => Ok(Action::Keep),
                        ("*", _) => Err(perr(line, "a wildcard read must be written back as `*`")),
                        (a, "*") => sym(a).map(|s| Action::Write { read: s, write: s }),
                        (a, b) => Ok(Action::Write {
                            read: sym(a)?,
                            write: sym(b)?,
                        }),
                    })
                    .collect::<Result<Vec<_>, _>>()?
            }
            RuleKind::Move => {
                let (None, Some(d)) = (from_vec, to_vec) else {
                    return Err(perr(
                        line,
                        "move rules have the form `move s -> s' [d,...]`",
                    ));
                };
                check_arity(&d)?;
                d.iter()
                    .map(|&t| match t {
                        "L" => Ok(Action::Move(Dir::L)),
                        "R" => Ok(Action::Move(Dir::R)),
                        "N" | "*" => Ok(Action::Keep),
                        _ => Err(perr(line, &format!("bad direction `{t}`"))),
                    })
                    .collect::<Result<Vec<_>, _>>()?
            }
            RuleKind::Step => {
                let (Some(v), None) = (from_vec, to_vec) else {
                    return Err(perr(line, "step rules have the form `step s [..] -> s'`"));
                };
                check_arity(&v)?;
                v.iter()
                    .map(|&t| match t {
                        "*" | "N" => Ok(Action::Keep),
                        "L" => Ok(Action::Move(Dir::L)),
                        "R" => Ok(Action::Move(Dir::R)),
                        _ => {
                            let (a, b) = t
                                .split_once('>')
                                .ok_or_else(|| perr(line, &format!("bad step entry `{t}`")))?;
                            Ok(Action::Write {
                                read: sym(a.trim())?,
                                write: sym(b.trim())?,
                            })
                        }
                    })
                    .collect::<Result<Vec<_>, _>>()?
            }
        };
        rules.push(Rule {
            from,
            to,
            kind: rr.kind,
            actions,
        });
    }

    let output = output.unwrap_or(tapes - 1);
    TMSpec::new(
        tapes, blank, alphabet, states, start_id, rules, input, output,
    )
}

/// Splits `name [a,b,c]` into the name and the bracketed entries.
fn split_vec(s: &str, line: usize) -> Result<(&str, Option<Vec<&str>>), TuringError> {
    let s = s.trim();
    let Some(open) = s.find('[') else {
        if s.is_empty() || s.contains(char::is_whitespace) {
            return Err(TuringError::Parse {
                line,
                msg: format!("bad state `{s}`"),
            });
        }
        return Ok((s, None));
    };
    let close = s
        .rfind(']')
        .filter(|&c| c == s.len() - 1 && c > open)
        .ok_or_else(|| TuringError::Parse {
            line,
            msg: "unterminated `[`".to_string(),
        })?;
    let name = s[..open].trim();
    if name.is_empty() || name.contains(char::is_whitespace) {
        return Err(TuringError::Parse {
            line,
            msg: format!("bad state `{name}`"),
        });
    }
    let inner = &s[open + 1..close];
    let entries = if inner.trim().is_empty() {
        Vec::new()
    } else {
        inner.split(',').map(str::trim).collect()
    };
    Ok((name, Some(entries)))
}

/// Canonical text rendering; `parse_tm(&print_tm(s)) == s`.
pub fn print_tm(spec: &TMSpec) -> String {
    let mut out = String::new();
    let sym = |c: Symbol| (c as char).to_string();
    writeln!(out, "tapes {}", spec.tapes()).unwrap();
    writeln!(out, "blank {}", spec.blank() as char).unwrap();
    let alpha: Vec<String> = spec.alphabet().iter().map(|&c| sym(c)).collect();
    writeln!(out, "alphabet {}", alpha.join(" ")).unwrap();
    for chunk in spec.states().chunks(16) {
        writeln!(out, "states {}", chunk.join(" ")).unwrap();
    }
    writeln!(out, "start {}", spec.state_name(spec.start())).unwrap();
    writeln!(out, "input {}", spec.input_tape()).unwrap();
    writeln!(out, "output {}", spec.output_tape()).unwrap();
    for r in spec.rules() {
        let from = spec.state_name(r.from);
        let to = spec.state_name(r.to);
        match r.kind {
            RuleKind::Write => {
                let (reads, writes): (Vec<String>, Vec<String>) = r
                    .actions
                    .iter()
                    .map(|a| match *a {
                        Action::Write { read, write } => (sym(read), sym(write)),
                        _ => ("*".to_string(), "*".to_string()),
                    })
                    .unzip();
                writeln!(
                    out,
                    "write {from} [{}] -> {to} [{}]",
                    reads.join(","),
                    writes.join(",")
                )
                .unwrap();
            }
            RuleKind::Move => {
                let d: Vec<&str> = r
                    .actions
                    .iter()
                    .map(|a| match a {
                        Action::Move(Dir::L) => "L",
                        Action::Move(Dir::R) => "R",
                        _ => "N",
                    })
                    .collect();
                writeln!(out, "move {from} -> {to} [{}]", d.join(",")).unwrap();
            }
            RuleKind::Step => {
                let e: Vec<String> = r
                    .actions
                    .iter()
                    .map(|a| match *a {
                        Action::Keep => "*".to_string(),
                        Action::Move(Dir::L) => "L".to_string(),
                        Action::Move(Dir::R) => "R".to_string(),
                        Action::Write { read, write } => {
                            format!("{}>{}", read as char, write as char)
                        }
                    })
                    .collect();
                writeln!(out, "step {from} [{}] -> {to}", e.join(",")).unwrap();
            }
        }
    }
    out
}
