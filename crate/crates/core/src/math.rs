//! Linearizes a subset of TeX math into Unicode text.
//!
//! This is what the exporters typeset: `\frac{3}{2}x^2` becomes `3/2x²`.
//! Anything outside the supported subset is a [`MathError`], and callers fall
//! back to printing the raw source.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MathError {
    #[error("unsupported command \\{0}")]
    UnknownCommand(String),
    #[error("unbalanced braces")]
    Unbalanced,
    #[error("missing argument for \\{0}")]
    MissingArgument(String),
    #[error("expression nests too deeply")]
    TooDeep,
}

const MAX_DEPTH: usize = 64;

pub fn to_unicode(source: &str) -> Result<String, MathError> {
    let mut parser = Parser { chars: source.chars().collect(), pos: 0, depth: 0 };
    let out = parser.sequence(false)?;
    if parser.pos < parser.chars.len() {
        return Err(MathError::Unbalanced);
    }
    Ok(out.trim().to_owned())
}

struct Parser {
    chars: Vec<char>,
    pos: usize,
    depth: usize,
}

impl Parser {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    /// Reads atoms until end of input, or until a closing brace when `in_group`.
    fn sequence(&mut self, in_group: bool) -> Result<String, MathError> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return Err(MathError::TooDeep);
        }
        let mut out = String::new();
        while let Some(c) = self.peek() {
            match c {
                '}' => {
                    if in_group {
                        break;
                    }
                    return Err(MathError::Unbalanced);
                }
                '^' | '_' => {
                    self.pos += 1;
                    let arg = self.argument("^")?;
                    out.push_str(&script(&arg, c == '^'));
                }
                _ => out.push_str(&self.atom()?),
            }
        }
        self.depth -= 1;
        Ok(out)
    }

    fn atom(&mut self) -> Result<String, MathError> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return Err(MathError::TooDeep);
        }
        let out = self.atom_inner();
        self.depth -= 1;
        out
    }

    fn atom_inner(&mut self) -> Result<String, MathError> {
        let c = self.peek().expect("atom called at end of input");
        match c {
            '{' => {
                self.pos += 1;
                let inner = self.sequence(true)?;
                self.expect_close()?;
                Ok(inner)
            }
            '\\' => self.command(),
            '~' => {
                self.pos += 1;
                Ok(" ".into())
            }
            '-' => {
                self.pos += 1;
                Ok("−".into())
            }
            '*' => {
                self.pos += 1;
                Ok("∗".into())
            }
            c if c.is_whitespace() => {
                while self.peek().is_some_and(char::is_whitespace) {
                    self.pos += 1;
                }
                Ok(" ".into())
            }
            c => {
                self.pos += 1;
                Ok(c.to_string())
            }
        }
    }

    fn expect_close(&mut self) -> Result<(), MathError> {
        if self.peek() == Some('}') {
            self.pos += 1;
            Ok(())
        } else {
            Err(MathError::Unbalanced)
        }
    }

    /// A braced group or a single token.
    fn argument(&mut self, name: &str) -> Result<String, MathError> {
        while self.peek().is_some_and(char::is_whitespace) {
            self.pos += 1;
        }
        match self.peek() {
            None | Some('}') => Err(MathError::MissingArgument(name.to_owned())),
            Some('^') | Some('_') => Err(MathError::MissingArgument(name.to_owned())),
            Some(_) => self.atom(),
        }
    }

    fn command(&mut self) -> Result<String, MathError> {
        self.pos += 1;
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_alphabetic()) {
            self.pos += 1;
        }
        if self.pos == start {
            // Control symbol such as \, \{ \$ \\.
            let Some(c) = self.peek() else {
                return Err(MathError::UnknownCommand(String::new()));
            };
            self.pos += 1;
            return Ok(match c {
                ',' | ';' | ':' | ' ' | '!' => if c == '!' { "" } else { " " }.to_owned(),
                '\\' => " ".to_owned(),
                '{' | '}' | '$' | '%' | '&' | '#' | '_' => c.to_string(),
                other => return Err(MathError::UnknownCommand(other.to_string())),
            });
        }
        let name: String = self.chars[start..self.pos].iter().collect();
        if let Some(sym) = symbol(&name) {
            return Ok(sym.to_owned());
        }
        match name.as_str() {
            "frac" | "dfrac" | "tfrac" => {
                let num = self.argument(&name)?;
                let den = self.argument(&name)?;
                Ok(format!("{}/{}", wrap(&num), wrap(&den)))
            }
            "sqrt" => {
                let index = if self.peek() == Some('[') {
                    self.pos += 1;
                    let mut idx = String::new();
                    loop {
                        match self.peek() {
                            Some(']') => {
                                self.pos += 1;
                                break;
                            }
                            Some('{') | Some('}') | None => return Err(MathError::Unbalanced),
                            Some(_) => idx.push_str(&self.atom()?),
                        }
                    }
                    Some(idx)
                } else {
                    None
                };
                let radicand = self.argument(&name)?;
                let root = match index.as_deref().map(str::trim) {
                    None | Some("2") => "√".to_owned(),
                    Some("3") => "∛".to_owned(),
                    Some("4") => "∜".to_owned(),
                    Some(other) => format!("{}√", script(other, true)),
                };
                Ok(format!("{root}{}", wrap(&radicand)))
            }
            "text" | "mathrm" | "textrm" | "mathit" | "mathbf" | "textbf" | "operatorname" | "mbox" => {
                self.argument(&name)
            }
            "left" | "right" | "big" | "Big" | "bigl" | "bigr" | "Bigl" | "Bigr" | "displaystyle" | "limits" => {
                // Sizing hints; the delimiter that follows is read as a normal atom.
                if (name == "left" || name == "right") && self.peek() == Some('.') {
                    self.pos += 1;
                }
                Ok(String::new())
            }
            "overline" | "bar" => Ok(format!("{}\u{305}", self.argument(&name)?)),
            "vec" => Ok(format!("{}\u{20d7}", self.argument(&name)?)),
            "hat" => Ok(format!("{}\u{302}", self.argument(&name)?)),
            _ => Err(MathError::UnknownCommand(name)),
        }
    }
}

fn wrap(s: &str) -> String {
    let s = s.trim();
    if s.chars().count() <= 1 || s.chars().all(|c| c.is_alphanumeric()) {
        s.to_owned()
    } else {
        format!("({s})")
    }
}

fn script(arg: &str, sup: bool) -> String {
    let arg = arg.trim();
    let mapped: Option<String> = arg.chars().map(|c| if sup { superscript(c) } else { subscript(c) }).collect();
    match mapped {
        Some(s) if !s.is_empty() => s,
        _ => format!("{}({})", if sup { '^' } else { '_' }, arg),
    }
}

fn superscript(c: char) -> Option<char> {
    Some(match c {
        '0' => '⁰',
        '1' => '¹',
        '2' => '²',
        '3' => '³',
        '4' => '⁴',
        '5' => '⁵',
        '6' => '⁶',
        '7' => '⁷',
        '8' => '⁸',
        '9' => '⁹',
        '+' => '⁺',
        '−' | '-' => '⁻',
        '=' => '⁼',
        '(' => '⁽',
        ')' => '⁾',
        'n' => 'ⁿ',
        'i' => 'ⁱ',
        'x' => 'ˣ',
        'T' => 'ᵀ',
        _ => return None,
    })
}

fn subscript(c: char) -> Option<char> {
    Some(match c {
        '0' => '₀',
        '1' => '₁',
        '2' => '₂',
        '3' => '₃',
        '4' => '₄',
        '5' => '₅',
        '6' => '₆',
        '7' => '₇',
        '8' => '₈',
        '9' => '₉',
        '+' => '₊',
        '−' | '-' => '₋',
        '=' => '₌',
        '(' => '₍',
        ')' => '₎',
        'n' => 'ₙ',
        'i' => 'ᵢ',
        'x' => 'ₓ',
        _ => return None,
    })
}

fn symbol(name: &str) -> Option<&'static str> {
    Some(match name {
        "alpha" => "α",
        "beta" => "β",
        "gamma" => "γ",
        "delta" => "δ",
        "epsilon" | "varepsilon" => "ε",
        "zeta" => "ζ",
        "eta" => "η",
        "theta" => "θ",
        "iota" => "ι",
        "kappa" => "κ",
        "lambda" => "λ",
        "mu" => "μ",
        "nu" => "ν",
        "xi" => "ξ",
        "pi" => "π",
        "rho" => "ρ",
        "sigma" => "σ",
        "tau" => "τ",
        "phi" | "varphi" => "φ",
        "chi" => "χ",
        "psi" => "ψ",
        "omega" => "ω",
        "Gamma" => "Γ",
        "Delta" => "Δ",
        "Theta" => "Θ",
        "Lambda" => "Λ",
        "Pi" => "Π",
        "Sigma" => "Σ",
        "Phi" => "Φ",
        "Omega" => "Ω",
        "times" => "×",
        "cdot" => "·",
        "div" => "÷",
        "pm" => "±",
        "mp" => "∓",
        "le" | "leq" => "≤",
        "ge" | "geq" => "≥",
        "ne" | "neq" => "≠",
        "approx" => "≈",
        "equiv" => "≡",
        "infty" => "∞",
        "sum" => "∑",
        "prod" => "∏",
        "int" => "∫",
        "partial" => "∂",
        "nabla" => "∇",
        "to" | "rightarrow" => "→",
        "leftarrow" => "←",
        "Rightarrow" | "implies" => "⇒",
        "iff" | "Leftrightarrow" => "⇔",
        "in" => "∈",
        "notin" => "∉",
        "subset" => "⊂",
        "subseteq" => "⊆",
        "cup" => "∪",
        "cap" => "∩",
        "emptyset" | "varnothing" => "∅",
        "forall" => "∀",
        "exists" => "∃",
        "neg" | "lnot" => "¬",
        "land" | "wedge" => "∧",
        "lor" | "vee" => "∨",
        "angle" => "∠",
        "degree" | "circ" => "°",
        "perp" => "⊥",
        "parallel" => "∥",
        "cdots" | "ldots" | "dots" => "…",
        "quad" | "qquad" => " ",
        "lbrace" => "{",
        "rbrace" => "}",
        "langle" => "⟨",
        "rangle" => "⟩",
        "sin" => "sin",
        "cos" => "cos",
        "tan" => "tan",
        "log" => "log",
        "ln" => "ln",
        "exp" => "exp",
        "lim" => "lim",
        "min" => "min",
        "max" => "max",
        "mid" => "|",
        "%" => "%",
        _ => return None,
    })
}
