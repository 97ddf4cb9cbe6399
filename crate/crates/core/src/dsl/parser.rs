use std::collections::HashSet;

use super::ast::{
    BinOp, CircuitDescription, DetectorBinding, Element, ElementKind, Expr, ParamDecl, Span,
    SplitterSpec,
};
use super::lexer::{tokenize, Tok};
use super::DslError;
use crate::mode_algebra::Mode;

pub(crate) const RESERVED: &[&str] = &[
    "modes", "param", "bs", "phase", "mirror", "detect", "removable", "balanced", "split", "pi",
];

const STATEMENTS: &[&str] = &["modes", "param", "bs", "phase", "mirror", "detect"];

enum Stmt {
    Modes(Vec<(Mode, Span)>, Span),
    Param(ParamDecl),
    Element(Element),
    Detect(DetectorBinding),
}

struct Parser {
    toks: Vec<(Tok, Span)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn span(&self) -> Span {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> (Tok, Span) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: &[&str]) -> DslError {
        let span = self.span();
        DslError::Syntax {
            line: span.line,
            col: span.col,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: self.peek().describe(),
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<Span, DslError> {
        if *self.peek() == tok {
            Ok(self.bump().1)
        } else {
            Err(self.error(&[&tok.describe()]))
        }
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn name(&mut self, what: &str) -> Result<(String, Span), DslError> {
        match self.peek().clone() {
            Tok::Ident(s) if !RESERVED.contains(&s.as_str()) => {
                let span = self.bump().1;
                Ok((s, span))
            }
            _ => Err(self.error(&[what])),
        }
    }

    fn mode(&mut self) -> Result<(Mode, Span), DslError> {
        self.name("a mode label").map(|(s, sp)| (Mode::new(s), sp))
    }

    fn statement(&mut self) -> Result<Stmt, DslError> {
        let kw = match self.peek() {
            Tok::Ident(s) if STATEMENTS.contains(&s.as_str()) => s.clone(),
            _ => {
                let expected: Vec<String> = STATEMENTS.iter().map(|s| format!("`{s}`")).collect();
                let refs: Vec<&str> = expected.iter().map(String::as_str).collect();
                return Err(self.error(&refs));
            }
        };
        let span = self.bump().1;
        let stmt = match kw.as_str() {
            "modes" => {
                let mut modes = vec![self.mode()?];
                while matches!(self.peek(), Tok::Ident(s) if !RESERVED.contains(&s.as_str())) {
                    modes.push(self.mode()?);
                }
                Stmt::Modes(modes, span)
            }
            "param" => {
                let (name, _) = self.name("a parameter name")?;
                let default = if *self.peek() == Tok::Eq {
                    self.bump();
                    Some(self.expr()?)
                } else {
                    None
                };
                Stmt::Param(ParamDecl {
                    name,
                    default,
                    span,
                })
            }
            "bs" => {
                let (name, _) = self.name("an element name")?;
                let spec = self.splitter_spec()?;
                let (i0, _) = self.mode()?;
                let (i1, _) = self.mode()?;
                self.expect(Tok::Arrow)?;
                let (o0, _) = self.mode()?;
                let (o1, _) = self.mode()?;
                let removable = if self.is_keyword("removable") {
                    self.bump();
                    true
                } else {
                    false
                };
                if *self.peek() != Tok::Semi {
                    return Err(self.error(&["`removable`", "`;`"]));
                }
                Stmt::Element(Element {
                    kind: ElementKind::BeamSplitter {
                        name,
                        spec,
                        inputs: [i0, i1],
                        outputs: [o0, o1],
                        removable,
                    },
                    span,
                })
            }
            "phase" => {
                let (mode, _) = self.mode()?;
                let value = self.expr()?;
                Stmt::Element(Element {
                    kind: ElementKind::Phase { mode, value },
                    span,
                })
            }
            "mirror" => {
                let (input, _) = self.mode()?;
                self.expect(Tok::Arrow)?;
                let (output, _) = self.mode()?;
                Stmt::Element(Element {
                    kind: ElementKind::Mirror { input, output },
                    span,
                })
            }
            "detect" => {
                let (name, _) = self.name("a detector name")?;
                let (mode, _) = self.mode()?;
                Stmt::Detect(DetectorBinding { name, mode, span })
            }
            _ => unreachable!("keyword list is closed"),
        };
        self.expect(Tok::Semi)?;
        Ok(stmt)
    }

    fn splitter_spec(&mut self) -> Result<SplitterSpec, DslError> {
        if self.is_keyword("balanced") {
            self.bump();
            return Ok(SplitterSpec::Balanced);
        }
        if !self.is_keyword("split") {
            return Err(self.error(&["`balanced`", "`split`"]));
        }
        self.bump();
        self.expect(Tok::LParen)?;
        let (mut reflectance, mut phi_t, mut phi_r) = (None, None, None);
        loop {
            let key_span = self.span();
            let key = match self.peek().clone() {
                Tok::Ident(k) => {
                    self.bump();
                    k
                }
                _ => return Err(self.error(&["`reflectance`", "`phi_t`", "`phi_r`"])),
            };
            self.expect(Tok::Eq)?;
            let value = self.expr()?;
            let slot = match key.as_str() {
                "reflectance" => &mut reflectance,
                "phi_t" => &mut phi_t,
                "phi_r" => &mut phi_r,
                _ => {
                    return Err(DslError::semantic(
                        key_span,
                        &key,
                        format!("unknown splitter argument `{key}`"),
                    ))
                }
            };
            if slot.is_some() {
                return Err(DslError::semantic(
                    key_span,
                    &key,
                    format!("splitter argument `{key}` given twice"),
                ));
            }
            *slot = Some(value);
            if *self.peek() == Tok::Comma {
                self.bump();
            } else {
                break;
            }
        }
        let close = self.expect(Tok::RParen)?;
        let reflectance = reflectance.ok_or_else(|| {
            DslError::semantic(close, "reflectance", "`split` needs a `reflectance` argument")
        })?;
        Ok(SplitterSpec::Split {
            reflectance,
            phi_t,
            phi_r,
        })
    }

    fn expr(&mut self) -> Result<Expr, DslError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr, DslError> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.factor()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn factor(&mut self) -> Result<Expr, DslError> {
        match self.peek().clone() {
            Tok::Minus => {
                self.bump();
                Ok(Expr::Neg(Box::new(self.factor()?)))
            }
            Tok::Number(x) => {
                self.bump();
                Ok(Expr::Number(x))
            }
            Tok::Ident(s) if s == "pi" => {
                self.bump();
                Ok(Expr::Pi)
            }
            Tok::Ident(s) if !RESERVED.contains(&s.as_str()) => {
                self.bump();
                Ok(Expr::Param(s))
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            _ => Err(self.error(&["a number", "`pi`", "a parameter", "`(`", "`-`"])),
        }
    }
}

/// Parse and check circuit text.
pub fn parse_circuit(text: &str) -> Result<CircuitDescription, DslError> {
    let mut parser = Parser {
        toks: tokenize(text)?,
        pos: 0,
    };
    let mut stmts = Vec::new();
    while *parser.peek() != Tok::Eof {
        stmts.push(parser.statement()?);
    }
    check(stmts, parser.span())
}

fn check(stmts: Vec<Stmt>, end: Span) -> Result<CircuitDescription, DslError> {
    let mut params: Vec<ParamDecl> = Vec::new();
    for stmt in &stmts {
        if let Stmt::Param(p) = stmt {
            if params.iter().any(|q| q.name == p.name) {
                return Err(DslError::semantic(
                    p.span,
                    &p.name,
                    format!("parameter `{}` declared twice", p.name),
                ));
            }
            if let Some(name) = p.default.as_ref().and_then(|d| d.params().first().copied()) {
                return Err(DslError::semantic(
                    p.span,
                    name,
                    format!("default of `{}` must be a constant, found `{name}`", p.name),
                ));
            }
            params.push(p.clone());
        }
    }
    let check_expr = |e: &Expr, span: Span| -> Result<(), DslError> {
        match e.params().into_iter().find(|n| !params.iter().any(|p| p.name == *n)) {
            Some(n) => Err(DslError::semantic(
                span,
                n,
                format!("undeclared parameter `{n}`"),
            )),
            None => Ok(()),
        }
    };

    let mut declared: Option<Vec<Mode>> = None;
    let mut live: Vec<Mode> = Vec::new();
    let mut seen: HashSet<Mode> = HashSet::new();
    let mut elements = Vec::new();
    let mut names: HashSet<String> = HashSet::new();
    let mut detectors: Vec<DetectorBinding> = Vec::new();

    let consume = |live: &[Mode], seen: &HashSet<Mode>, m: &Mode, span: Span| -> Result<usize, DslError> {
        if !seen.contains(m) {
            return Err(DslError::semantic(span, m.as_str(), format!("undeclared mode `{m}`")));
        }
        live.iter().position(|l| l == m).ok_or_else(|| {
            DslError::semantic(span, m.as_str(), format!("mode `{m}` was already consumed"))
        })
    };
    let fresh = |seen: &HashSet<Mode>, m: &Mode, span: Span| -> Result<(), DslError> {
        if seen.contains(m) {
            Err(DslError::semantic(
                span,
                m.as_str(),
                format!("mode label `{m}` is already in use"),
            ))
        } else {
            Ok(())
        }
    };

    for stmt in stmts {
        match stmt {
            Stmt::Param(_) => {}
            Stmt::Modes(list, span) => {
                if declared.is_some() {
                    return Err(DslError::semantic(span, "modes", "modes declared twice"));
                }
                for (m, sp) in &list {
                    fresh(&seen, m, *sp)?;
                    seen.insert(m.clone());
                    live.push(m.clone());
                }
                declared = Some(list.into_iter().map(|(m, _)| m).collect());
            }
            Stmt::Element(el) => {
                let span = el.span;
                match &el.kind {
                    ElementKind::BeamSplitter {
                        name,
                        spec,
                        inputs,
                        outputs,
                        ..
                    } => {
                        if !names.insert(name.clone()) {
                            return Err(DslError::semantic(
                                span,
                                name,
                                format!("element `{name}` defined twice"),
                            ));
                        }
                        if let SplitterSpec::Split {
                            reflectance,
                            phi_t,
                            phi_r,
                        } = spec
                        {
                            for e in [Some(reflectance), phi_t.as_ref(), phi_r.as_ref()]
                                .into_iter()
                                .flatten()
                            {
                                check_expr(e, span)?;
                            }
                        }
                        if inputs[0] == inputs[1] {
                            return Err(DslError::semantic(
                                span,
                                inputs[0].as_str(),
                                format!("mode `{}` consumed twice in one stage", inputs[0]),
                            ));
                        }
                        let s0 = consume(&live, &seen, &inputs[0], span)?;
                        let s1 = consume(&live, &seen, &inputs[1], span)?;
                        if outputs[0] == outputs[1] {
                            return Err(DslError::semantic(
                                span,
                                outputs[0].as_str(),
                                format!("mode `{}` produced twice in one stage", outputs[0]),
                            ));
                        }
                        for o in outputs {
                            fresh(&seen, o, span)?;
                        }
                        live[s0] = outputs[0].clone();
                        live[s1] = outputs[1].clone();
                        seen.extend(outputs.iter().cloned());
                    }
                    ElementKind::Phase { mode, value } => {
                        check_expr(value, span)?;
                        consume(&live, &seen, mode, span)?;
                    }
                    ElementKind::Mirror { input, output } => {
                        let s = consume(&live, &seen, input, span)?;
                        fresh(&seen, output, span)?;
                        live[s] = output.clone();
                        seen.insert(output.clone());
                    }
                }
                elements.push(el);
            }
            Stmt::Detect(d) => detectors.push(d),
        }
    }

    let modes = declared.ok_or_else(|| {
        DslError::semantic(Span::new(1, 1), "modes", "missing `modes` declaration")
    })?;

    for (i, d) in detectors.iter().enumerate() {
        if detectors[..i].iter().any(|e| e.name == d.name) {
            return Err(DslError::semantic(
                d.span,
                &d.name,
                format!("detector `{}` bound twice", d.name),
            ));
        }
        if !seen.contains(&d.mode) {
            return Err(DslError::semantic(
                d.span,
                d.mode.as_str(),
                format!("undeclared mode `{}`", d.mode),
            ));
        }
        if !live.contains(&d.mode) {
            return Err(DslError::semantic(
                d.span,
                &d.name,
                format!("detector `{}` is bound to internal mode `{}`", d.name, d.mode),
            ));
        }
        if detectors[..i].iter().any(|e| e.mode == d.mode) {
            return Err(DslError::semantic(
                d.span,
                d.mode.as_str(),
                format!("mode `{}` already has a detector", d.mode),
            ));
        }
    }
    if let Some(m) = live.iter().find(|m| !detectors.iter().any(|d| d.mode == **m)) {
        return Err(DslError::semantic(
            end,
            m.as_str(),
            format!("output mode `{m}` has no detector"),
        ));
    }

    Ok(CircuitDescription {
        modes,
        params,
        elements,
        detectors,
        outputs: live,
    })
}
