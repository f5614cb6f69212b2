//! Structure constants of the Galilei algebra without time translation,
//! its Heisenberg-Weyl central extension with rotations, and the
//! contraction family `X -> X/k`, `P -> P/k` that sends the latter back to a
//! trivial central extension of the former.
//!
//! Conventions: rotations carry real constants, `[J_i, G_j] = eps_ijk G_k` for
//! `G` in `{J, X, P}`; the Heisenberg bracket carries an explicit `i`,
//! `[X_i, P_j] = i delta_ij I`. With the mass set to one, the boost generator
//! is `X_i` itself, and a time translation `T` (absent from the shipped
//! tables) satisfies `[X_i, T] = P_i`.

use std::collections::HashMap;
use std::fmt;

use crate::error::validation;
use crate::{Error, Result, C64, EXACT_TOL};

const ZERO: C64 = C64::new(0.0, 0.0);

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GeneratorId {
    pub name: String,
    pub index: usize,
}

impl fmt::Display for GeneratorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

/// A linear combination `sum_e c_e G_e` with only nonzero terms kept,
/// ordered by generator index.
#[derive(Debug, Clone, PartialEq)]
pub struct Combination(pub Vec<(GeneratorId, C64)>);

impl Combination {
    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn coefficient(&self, name: &str) -> C64 {
        self.0
            .iter()
            .find(|(g, _)| g.name == name)
            .map(|(_, c)| *c)
            .unwrap_or(ZERO)
    }
}

/// Finite-dimensional Lie algebra given by named generators and dense
/// structure constants `[G_a, G_b] = sum_e c[a][b][e] G_e`.
///
/// Construction enforces antisymmetry; the Jacobi identity is checked by
/// [`jacobi_defect`].
#[derive(Debug, Clone, PartialEq)]
pub struct StructureTable {
    names: Vec<String>,
    lookup: HashMap<String, usize>,
    consts: Vec<C64>,
}

impl StructureTable {
    /// An abelian algebra on the given generator names.
    pub fn abelian<S: AsRef<str>>(names: &[S]) -> Result<Self> {
        if names.is_empty() {
            return validation("a structure table needs at least one generator");
        }
        let mut lookup = HashMap::new();
        for (i, n) in names.iter().enumerate() {
            let n = n.as_ref();
            if n.is_empty() || !n.chars().all(|c| c.is_alphanumeric() || c == '_') {
                return validation(format!("invalid generator name {n:?}"));
            }
            if lookup.insert(n.to_string(), i).is_some() {
                return validation(format!("duplicate generator name {n}"));
            }
        }
        let dim = names.len();
        Ok(Self {
            names: names.iter().map(|s| s.as_ref().to_string()).collect(),
            lookup,
            consts: vec![ZERO; dim * dim * dim],
        })
    }

    /// Builds a table from brackets `[a, b] = sum coeff * target`.
    ///
    /// Each unordered pair may be given in either order; the partner is
    /// filled in antisymmetrically. Giving both orders with inconsistent
    /// values, or a nonzero self-bracket, is a validation error.
    pub fn from_brackets<S: AsRef<str>>(
        names: &[S],
        brackets: &[BracketSpec<'_>],
    ) -> Result<Self> {
        let mut tbl = Self::abelian(names)?;
        let mut seen = HashMap::new();
        for (a, b, terms) in brackets {
            let ia = tbl.index_of(a)?;
            let ib = tbl.index_of(b)?;
            let mut row = vec![ZERO; tbl.dim()];
            for (t, c) in terms {
                row[tbl.index_of(t)?] += *c;
            }
            tbl.insert_bracket(ia, ib, row, &mut seen)?;
        }
        Ok(tbl)
    }

    fn insert_bracket(
        &mut self,
        a: usize,
        b: usize,
        row: Vec<C64>,
        seen: &mut HashMap<(usize, usize), Vec<C64>>,
    ) -> Result<()> {
        if a == b {
            if row.iter().any(|c| c.norm() > 0.0) {
                return validation(format!(
                    "[{0},{0}] must vanish (antisymmetry)",
                    self.names[a]
                ));
            }
            return Ok(());
        }
        let key = (a.min(b), a.max(b));
        let oriented: Vec<C64> = if a < b { row } else { row.iter().map(|c| -c).collect() };
        if let Some(prev) = seen.get(&key) {
            let conflict = prev
                .iter()
                .zip(&oriented)
                .any(|(p, q)| (p - q).norm() > EXACT_TOL);
            if conflict {
                return validation(format!(
                    "antisymmetry broken: [{a},{b}] and [{b},{a}] are not negatives of each other",
                    a = self.names[key.0],
                    b = self.names[key.1]
                ));
            }
            return Ok(());
        }
        for (e, c) in oriented.iter().enumerate() {
            self.set(key.0, key.1, e, *c);
            self.set(key.1, key.0, e, -c);
        }
        seen.insert(key, oriented);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn generators(&self) -> Vec<GeneratorId> {
        self.names
            .iter()
            .enumerate()
            .map(|(index, name)| GeneratorId {
                name: name.clone(),
                index,
            })
            .collect()
    }

    fn index_of(&self, name: &str) -> Result<usize> {
        self.lookup
            .get(name)
            .copied()
            .ok_or_else(|| Error::Validation(format!("unknown generator {name}")))
    }

    pub fn id(&self, name: &str) -> Result<GeneratorId> {
        Ok(GeneratorId {
            name: name.to_string(),
            index: self.index_of(name)?,
        })
    }

    fn check(&self, g: &GeneratorId) -> Result<usize> {
        match self.names.get(g.index) {
            Some(n) if *n == g.name => Ok(g.index),
            _ => validation(format!("generator {} (#{}) not in table", g.name, g.index)),
        }
    }

    #[inline]
    fn at(&self, a: usize, b: usize, e: usize) -> C64 {
        let d = self.dim();
        self.consts[(a * d + b) * d + e]
    }

    #[inline]
    fn set(&mut self, a: usize, b: usize, e: usize, c: C64) {
        let d = self.dim();
        self.consts[(a * d + b) * d + e] = c;
    }

    /// Raw structure constant `c_ab^e` by name.
    pub fn constant(&self, a: &str, b: &str, e: &str) -> Result<C64> {
        Ok(self.at(self.index_of(a)?, self.index_of(b)?, self.index_of(e)?))
    }

    /// `[a, b]` as a linear combination of generators.
    pub fn bracket(&self, a: &GeneratorId, b: &GeneratorId) -> Result<Combination> {
        let (ia, ib) = (self.check(a)?, self.check(b)?);
        Ok(Combination(
            (0..self.dim())
                .filter_map(|e| {
                    let c = self.at(ia, ib, e);
                    (c != ZERO).then(|| {
                        (
                            GeneratorId {
                                name: self.names[e].clone(),
                                index: e,
                            },
                            c,
                        )
                    })
                })
                .collect(),
        ))
    }

    /// Convenience form of [`bracket`](Self::bracket) taking names.
    pub fn bracket_named(&self, a: &str, b: &str) -> Result<Combination> {
        self.bracket(&self.id(a)?, &self.id(b)?)
    }

    /// Max-norm of `c_ab^e + c_ba^e`.
    pub fn antisymmetry_defect(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for a in 0..d {
            for b in 0..d {
                for e in 0..d {
                    worst = worst.max((self.at(a, b, e) + self.at(b, a, e)).norm());
                }
            }
        }
        worst
    }

    /// Max-norm difference between two tables on the same generators.
    pub fn max_difference(&self, other: &StructureTable) -> Result<f64> {
        if self.names != other.names {
            return validation("tables have different generators");
        }
        Ok(self
            .consts
            .iter()
            .zip(&other.consts)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    /// True when `g` brackets to zero with every generator.
    pub fn is_central(&self, g: &str) -> Result<bool> {
        let i = self.index_of(g)?;
        let d = self.dim();
        Ok((0..d).all(|b| (0..d).all(|e| self.at(i, b, e) == ZERO)))
    }

    /// True when `g` neither brackets nonzero with anything nor appears on
    /// the right-hand side of any bracket.
    pub fn is_decoupled(&self, g: &str) -> Result<bool> {
        let i = self.index_of(g)?;
        let d = self.dim();
        let on_rhs = (0..d).any(|a| (0..d).any(|b| self.at(a, b, i) != ZERO));
        Ok(self.is_central(g)? && !on_rhs)
    }

    /// Appends a generator that commutes with everything.
    pub fn with_central(&self, name: &str) -> Result<StructureTable> {
        let mut names = self.names.clone();
        names.push(name.to_string());
        let mut out = StructureTable::abelian(&names)?;
        let d = self.dim();
        for a in 0..d {
            for b in 0..d {
                for e in 0..d {
                    out.set(a, b, e, self.at(a, b, e));
                }
            }
        }
        Ok(out)
    }

    /// Plain-text form: a `generators:` line followed by one line per
    /// nonzero bracket with `a < b`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        s.push_str("generators: ");
        s.push_str(&self.names.join(" "));
        s.push('\n');
        let d = self.dim();
        for a in 0..d {
            for b in (a + 1)..d {
                let terms: Vec<String> = (0..d)
                    .filter(|&e| self.at(a, b, e) != ZERO)
                    .map(|e| format!("{}*{}", format_coefficient(self.at(a, b, e)), self.names[e]))
                    .collect();
                if !terms.is_empty() {
                    s.push_str(&format!("[{},{}] = {}\n", self.names[a], self.names[b], terms.join(" + ")));
                }
            }
        }
        s
    }

    /// Parses the format written by [`to_text`](Self::to_text). `#` starts a
    /// comment; blank lines are ignored. Without a `generators:` line the
    /// generators are taken in order of first appearance.
    pub fn parse(text: &str) -> Result<StructureTable> {
        let mut names: Option<Vec<String>> = None;
        let mut discovered: Vec<String> = Vec::new();
        let mut lines = Vec::new();
        for (no, raw) in text.lines().enumerate() {
            let line_no = no + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix("generators:") {
                if names.is_some() {
                    return Err(parse_err(line_no, "duplicate generators line"));
                }
                names = Some(
                    rest.split(|c: char| c.is_whitespace() || c == ',')
                        .filter(|s| !s.is_empty())
                        .map(str::to_string)
                        .collect(),
                );
                continue;
            }
            let parsed = parse_bracket_line(line).map_err(|m| parse_err(line_no, &m))?;
            for n in std::iter::once(&parsed.0)
                .chain(std::iter::once(&parsed.1))
                .chain(parsed.2.iter().map(|(n, _)| n))
            {
                if !discovered.contains(n) {
                    discovered.push(n.clone());
                }
            }
            lines.push((line_no, parsed));
        }
        let names = names.unwrap_or(discovered);
        let mut tbl = StructureTable::abelian(&names).map_err(|e| parse_err(0, &e.to_string()))?;
        let mut seen = HashMap::new();
        for (line_no, (a, b, terms)) in lines {
            let relocate = |e: Error| match e {
                Error::Validation(m) => parse_err(line_no, &m),
                other => other,
            };
            let ia = tbl.index_of(&a).map_err(relocate)?;
            let ib = tbl.index_of(&b).map_err(relocate)?;
            let mut row = vec![ZERO; tbl.dim()];
            for (t, c) in terms {
                row[tbl.index_of(&t).map_err(relocate)?] += c;
            }
            tbl.insert_bracket(ia, ib, row, &mut seen).map_err(relocate)?;
        }
        Ok(tbl)
    }
}

fn parse_err(line: usize, message: &str) -> Error {
    Error::Parse {
        line,
        message: message.to_string(),
    }
}

type BracketLine = (String, String, Vec<(String, C64)>);

/// `(a, b, [(e, c_ab^e), ...])` for [`StructureTable::from_brackets`].
pub type BracketSpec<'a> = (&'a str, &'a str, Vec<(&'a str, C64)>);

fn parse_bracket_line(line: &str) -> std::result::Result<BracketLine, String> {
    let (lhs, rhs) = line
        .split_once('=')
        .ok_or_else(|| "expected `[A,B] = ...`".to_string())?;
    let lhs = lhs.trim();
    let inner = lhs
        .strip_prefix('[')
        .and_then(|s| s.strip_suffix(']'))
        .ok_or_else(|| format!("malformed bracket {lhs:?}"))?;
    let (a, b) = inner
        .split_once(',')
        .ok_or_else(|| format!("bracket {lhs:?} needs two generators"))?;
    let (a, b) = (a.trim().to_string(), b.trim().to_string());
    if a.is_empty() || b.is_empty() {
        return Err(format!("bracket {lhs:?} has an empty generator"));
    }
    let rhs = rhs.trim();
    if rhs.is_empty() {
        return Err("empty right-hand side".into());
    }
    if rhs == "0" {
        return Ok((a, b, Vec::new()));
    }
    let mut terms = Vec::new();
    for term in split_terms(rhs) {
        let term = term.trim();
        let (coeff, name) = match term.rsplit_once('*') {
            Some((c, n)) => (parse_coefficient(c.trim())?, n.trim()),
            None => match term.strip_prefix('-') {
                Some(n) => (C64::new(-1.0, 0.0), n.trim()),
                None => (C64::new(1.0, 0.0), term),
            },
        };
        if name.is_empty() || !name.chars().all(|c| c.is_alphanumeric() || c == '_') {
            return Err(format!("bad generator name in term {term:?}"));
        }
        terms.push((name.to_string(), coeff));
    }
    Ok((a, b, terms))
}

/// Splits on `+` at parenthesis depth zero, skipping exponent signs.
fn split_terms(s: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    let bytes = s.as_bytes();
    for (i, &ch) in bytes.iter().enumerate() {
        match ch {
            b'(' => depth += 1,
            b')' => depth -= 1,
            b'+' if depth == 0 && i > start => {
                let prev = s[start..i].trim_end().as_bytes();
                let exponent = prev.len() >= 2
                    && matches!(prev[prev.len() - 1], b'e' | b'E')
                    && (prev[prev.len() - 2].is_ascii_digit() || prev[prev.len() - 2] == b'.');
                if !exponent {
                    out.push(&s[start..i]);
                    start = i + 1;
                }
            }
            _ => {}
        }
    }
    out.push(&s[start..]);
    out
}

/// `1`, `-0.5`, `2i`, `-i`, `(0.5+0.25i)`.
pub fn parse_coefficient(s: &str) -> std::result::Result<C64, String> {
    let bad = || format!("bad coefficient {s:?}");
    if let Some(inner) = s.strip_prefix('(').and_then(|t| t.strip_suffix(')')) {
        let inner = inner.trim();
        let body = inner.strip_suffix('i').ok_or_else(bad)?;
        // split at the last sign that is not leading and not an exponent sign
        let split = body
            .char_indices()
            .filter(|&(i, c)| {
                (c == '+' || c == '-')
                    && i > 0
                    && !matches!(body.as_bytes()[i - 1], b'e' | b'E')
            })
            .map(|(i, _)| i)
            .next_back()
            .ok_or_else(bad)?;
        let re: f64 = body[..split].trim().parse().map_err(|_| bad())?;
        let im_str = body[split..].trim();
        let im: f64 = match im_str {
            "+" => 1.0,
            "-" => -1.0,
            t => t.parse().map_err(|_| bad())?,
        };
        return Ok(C64::new(re, im));
    }
    if let Some(body) = s.strip_suffix('i') {
        let im = match body.trim() {
            "" | "+" => 1.0,
            "-" => -1.0,
            t => t.parse().map_err(|_| bad())?,
        };
        return Ok(C64::new(0.0, im));
    }
    s.parse::<f64>().map(|re| C64::new(re, 0.0)).map_err(|_| bad())
}

pub fn format_coefficient(c: C64) -> String {
    if c.im == 0.0 {
        format!("{}", c.re)
    } else if c.re == 0.0 {
        format!("{}i", c.im)
    } else {
        format!("({}{:+}i)", c.re, c.im)
    }
}

impl fmt::Display for StructureTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

fn levi_civita(i: usize, j: usize, k: usize) -> f64 {
    match (i, j, k) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

fn axis_names(prefix: &str) -> [String; 3] {
    [1, 2, 3].map(|i| format!("{prefix}{i}"))
}

fn galilei_names(central: bool, time: bool) -> Vec<String> {
    let mut names: Vec<String> = ["J", "X", "P"].iter().flat_map(|p| axis_names(p)).collect();
    if central {
        names.push("I".into());
    }
    if time {
        names.push("T".into());
    }
    names
}

fn build_galilei(central: bool, time: bool) -> StructureTable {
    let names = galilei_names(central, time);
    let mut tbl = StructureTable::abelian(&names).expect("static generator names");
    let idx = |n: &str| tbl.lookup[n];
    let mut entries: Vec<(usize, usize, usize, C64)> = Vec::new();
    for family in ["J", "X", "P"] {
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    let e = levi_civita(i, j, k);
                    if e != 0.0 {
                        entries.push((
                            idx(&format!("J{}", i + 1)),
                            idx(&format!("{family}{}", j + 1)),
                            idx(&format!("{family}{}", k + 1)),
                            C64::new(e, 0.0),
                        ));
                    }
                }
            }
        }
    }
    if central {
        for i in 1..=3 {
            entries.push((idx(&format!("X{i}")), idx(&format!("P{i}")), idx("I"), C64::new(0.0, 1.0)));
        }
    }
    if time {
        for i in 1..=3 {
            entries.push((idx(&format!("X{i}")), idx("T"), idx(&format!("P{i}")), C64::new(1.0, 0.0)));
        }
    }
    for (a, b, e, c) in entries {
        tbl.set(a, b, e, c);
        tbl.set(b, a, e, -c);
    }
    tbl
}

/// Galilei algebra without time translation: `J_i, X_i, P_i`.
pub fn galilei_s() -> StructureTable {
    build_galilei(false, false)
}

/// Heisenberg-Weyl algebra with rotations: `J_i, X_i, P_i, I`.
pub fn heisenberg_rotations() -> StructureTable {
    build_galilei(true, false)
}

/// Either shipped table with the time translation `T` appended.
pub fn with_time_translation(central: bool) -> StructureTable {
    build_galilei(central, true)
}

/// Max-norm over all generator triples of the Jacobi residual
/// `[a,[b,c]] + [b,[c,a]] + [c,[a,b]]`.
pub fn jacobi_defect(tbl: &StructureTable) -> f64 {
    let d = tbl.dim();
    let mut worst = 0.0f64;
    let mut acc = vec![ZERO; d];
    for a in 0..d {
        for b in 0..d {
            for c in 0..d {
                acc.iter_mut().for_each(|x| *x = ZERO);
                for m in 0..d {
                    let bc = tbl.at(b, c, m);
                    let ca = tbl.at(c, a, m);
                    let ab = tbl.at(a, b, m);
                    if bc == ZERO && ca == ZERO && ab == ZERO {
                        continue;
                    }
                    for (e, slot) in acc.iter_mut().enumerate() {
                        *slot += bc * tbl.at(a, m, e) + ca * tbl.at(b, m, e) + ab * tbl.at(c, m, e);
                    }
                }
                for x in &acc {
                    worst = worst.max(x.norm());
                }
            }
        }
    }
    worst
}

/// Scale `k`, the derived `hbar = 1/k^2`, and the generators rescaled by `1/k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContractionParams {
    k: f64,
    hbar: f64,
    scaled: Vec<String>,
}

impl ContractionParams {
    /// Scales `X_1..X_3` and `P_1..P_3`.
    pub fn new(k: f64) -> Result<Self> {
        let scaled = ["X", "P"].iter().flat_map(|p| axis_names(p)).collect();
        Self::with_scaled(k, scaled)
    }

    pub fn with_scaled(k: f64, scaled: Vec<String>) -> Result<Self> {
        if !k.is_finite() || k <= 0.0 {
            return validation(format!("contraction scale k must be positive and finite, got {k}"));
        }
        if k < 1.0 {
            return validation(format!("contraction scale k must be >= 1, got {k}"));
        }
        Ok(Self {
            k,
            hbar: 1.0 / (k * k),
            scaled,
        })
    }

    /// `k = 1/sqrt(hbar)`; requires `0 < hbar <= 1`.
    pub fn from_hbar(hbar: f64) -> Result<Self> {
        if !(hbar > 0.0 && hbar.is_finite()) {
            return validation(format!("hbar must be positive, got {hbar}"));
        }
        let mut p = Self::new(1.0 / hbar.sqrt())?;
        p.hbar = hbar;
        Ok(p)
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn scaled_generators(&self) -> &[String] {
        &self.scaled
    }
}

fn weights(tbl: &StructureTable, scaled: &[String]) -> Result<Vec<i32>> {
    let mut w = vec![0; tbl.dim()];
    for s in scaled {
        w[tbl.index_of(s)?] = 1;
    }
    Ok(w)
}

/// `c'_ab^e = k^(sign (w_e - w_a - w_b)) c_ab^e`, with the power taken in one
/// step so that e.g. `k = 10` gives exactly `0.01`.
fn rescale(tbl: &StructureTable, w: &[i32], k: f64, sign: i32) -> StructureTable {
    let d = tbl.dim();
    let mut out = tbl.clone();
    for a in 0..d {
        for b in 0..d {
            for e in 0..d {
                let c = tbl.at(a, b, e);
                if c != ZERO {
                    let power = sign * (w[e] - w[a] - w[b]);
                    let factor = if power < 0 { 1.0 / k.powi(-power) } else { k.powi(power) };
                    out.set(a, b, e, c * factor);
                }
            }
        }
    }
    out
}

/// Rewrites the table in the basis `G_a^c = G_a / k` for the scaled
/// generators: `c'_ab^e = (s_a s_b / s_e) c_ab^e` with `s = 1/k` on them.
pub fn contract(tbl: &StructureTable, params: &ContractionParams) -> Result<StructureTable> {
    let w = weights(tbl, &params.scaled)?;
    Ok(rescale(tbl, &w, params.k, 1))
}

/// Inverse of [`contract`]: returns to the unscaled basis.
pub fn uncontract(tbl: &StructureTable, params: &ContractionParams) -> Result<StructureTable> {
    let w = weights(tbl, &params.scaled)?;
    Ok(rescale(tbl, &w, params.k, -1))
}

/// The `k -> infinity` limit of [`contract`], computed from the power of `k`
/// carried by each structure constant.
pub fn contraction_limit<S: AsRef<str>>(tbl: &StructureTable, scaled: &[S]) -> Result<StructureTable> {
    let scaled: Vec<String> = scaled.iter().map(|s| s.as_ref().to_string()).collect();
    let w = weights(tbl, &scaled)?;
    let d = tbl.dim();
    let mut out = tbl.clone();
    for a in 0..d {
        for b in 0..d {
            for e in 0..d {
                let c = tbl.at(a, b, e);
                if c == ZERO {
                    continue;
                }
                // c'_ab^e = k^(w_e - w_a - w_b) c_ab^e
                let power = w[e] - w[a] - w[b];
                if power > 0 {
                    return Err(Error::LimitDiverges {
                        a: tbl.names[a].clone(),
                        b: tbl.names[b].clone(),
                        target: tbl.names[e].clone(),
                        power,
                    });
                }
                if power < 0 {
                    out.set(a, b, e, ZERO);
                }
            }
        }
    }
    Ok(out)
}
