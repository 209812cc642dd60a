//! Recursive-descent parser for the supported Python subset.
//!
//! Statement grammar follows the reference grammar closely; anything outside
//! the subset (decorators, lambdas, comprehensions, `async`, `yield`, ...)
//! is reported as a [`SyntaxError`] so callers can discard the file.

use super::lexer::{tokenize, Tok, Token};
use super::tree::TreeNode;
use super::SyntaxError;

const KEYWORDS: &[&str] = &[
    "False", "None", "True", "and", "as", "assert", "async", "await", "break", "class", "continue",
    "def", "del", "elif", "else", "except", "finally", "for", "from", "global", "if", "import",
    "in", "is", "lambda", "nonlocal", "not", "or", "pass", "raise", "return", "try", "while",
    "with", "yield",
];

const AUG_OPS: &[(&str, &str)] = &[
    ("+=", "Add"),
    ("-=", "Sub"),
    ("*=", "Mult"),
    ("/=", "Div"),
    ("//=", "FloorDiv"),
    ("%=", "Mod"),
    ("**=", "Pow"),
    ("@=", "MatMult"),
    ("&=", "BitAnd"),
    ("|=", "BitOr"),
    ("^=", "BitXor"),
    ("<<=", "LShift"),
    (">>=", "RShift"),
];

pub(crate) fn parse_module(text: &str) -> Result<TreeNode, SyntaxError> {
    let tokens = tokenize(text)?;
    let mut parser = Parser { tokens, pos: 0 };
    let mut body = Vec::new();
    while !parser.at(&Tok::Eof) {
        if parser.eat(&Tok::Newline) {
            continue;
        }
        body.extend(parser.statement()?);
    }
    let end = body.last().map(|n| n.end_line).unwrap_or(1);
    Ok(TreeNode::new("Module", 1, end.max(1)).with_children(body))
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

fn node(kind: &str, start: u32, end: u32, children: Vec<TreeNode>) -> TreeNode {
    TreeNode::new(kind, start, end).with_children(children)
}

fn span_end(children: &[TreeNode], fallback: u32) -> u32 {
    children.iter().map(|c| c.end_line).max().unwrap_or(fallback).max(fallback)
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn peek_at(&self, offset: usize) -> &Tok {
        let i = (self.pos + offset).min(self.tokens.len() - 1);
        &self.tokens[i].tok
    }

    fn line(&self) -> u32 {
        self.peek().line
    }

    fn prev_end(&self) -> u32 {
        self.tokens[self.pos.saturating_sub(1)].end_line
    }

    fn advance(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn at(&self, tok: &Tok) -> bool {
        &self.peek().tok == tok
    }

    fn at_op(&self, op: &str) -> bool {
        matches!(&self.peek().tok, Tok::Op(o) if *o == op)
    }

    fn at_kw(&self, kw: &str) -> bool {
        matches!(&self.peek().tok, Tok::Name(n) if n == kw)
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.at(tok) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn eat_op(&mut self, op: &str) -> bool {
        if self.at_op(op) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.at_kw(kw) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn err(&self, message: impl Into<String>) -> SyntaxError {
        SyntaxError::new(self.line(), message)
    }

    fn unexpected(&self) -> SyntaxError {
        let what = match &self.peek().tok {
            Tok::Name(n) => format!("'{n}'"),
            Tok::Number(n) => format!("number {n}"),
            Tok::Str(_) => "string literal".to_string(),
            Tok::Op(o) => format!("'{o}'"),
            Tok::Newline => "end of line".to_string(),
            Tok::Indent => "indent".to_string(),
            Tok::Dedent => "dedent".to_string(),
            Tok::Eof => "end of file".to_string(),
        };
        self.err(format!("unexpected {what}"))
    }

    fn expect_op(&mut self, op: &str) -> Result<Token, SyntaxError> {
        if self.at_op(op) {
            Ok(self.advance())
        } else {
            Err(self.err(format!("expected '{op}'")).with_found(self.unexpected()))
        }
    }

    fn expect_kw(&mut self, kw: &str) -> Result<(), SyntaxError> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            Err(self.err(format!("expected '{kw}'")).with_found(self.unexpected()))
        }
    }

    fn identifier(&mut self) -> Result<String, SyntaxError> {
        match &self.peek().tok {
            Tok::Name(n) if !KEYWORDS.contains(&n.as_str()) => {
                let n = n.clone();
                self.advance();
                Ok(n)
            }
            _ => Err(self.err("expected identifier").with_found(self.unexpected())),
        }
    }

    fn end_of_statement(&mut self) -> Result<(), SyntaxError> {
        if self.eat(&Tok::Newline) || self.at(&Tok::Eof) {
            Ok(())
        } else {
            Err(self.unexpected())
        }
    }

    // ---------------------------------------------------------------- statements

    /// Parses one logical line or compound statement. Simple statements joined
    /// by `;` come back as several nodes.
    fn statement(&mut self) -> Result<Vec<TreeNode>, SyntaxError> {
        if let Tok::Name(kw) = &self.peek().tok {
            let compound = match kw.as_str() {
                "if" => Some(self.if_stmt()?),
                "for" => Some(self.for_stmt()?),
                "while" => Some(self.while_stmt()?),
                "def" => Some(self.funcdef()?),
                "class" => Some(self.classdef()?),
                "try" => Some(self.try_stmt()?),
                "with" => Some(self.with_stmt()?),
                "async" => return Err(self.err("async statements are not supported")),
                _ => None,
            };
            if let Some(n) = compound {
                return Ok(vec![n]);
            }
        }
        if self.at_op("@") {
            return Err(self.err("decorators are not supported"));
        }
        if matches!(self.peek().tok, Tok::Indent) {
            return Err(self.err("unexpected indent"));
        }
        self.simple_statements()
    }

    fn simple_statements(&mut self) -> Result<Vec<TreeNode>, SyntaxError> {
        let mut out = vec![self.small_statement()?];
        while self.eat_op(";") {
            if self.at(&Tok::Newline) || self.at(&Tok::Eof) {
                break;
            }
            out.push(self.small_statement()?);
        }
        self.end_of_statement()?;
        Ok(out)
    }

    fn small_statement(&mut self) -> Result<TreeNode, SyntaxError> {
        let mut stmt = self.small_statement_inner()?;
        // closing brackets of a parenthesized value still belong to the statement
        stmt.end_line = stmt.end_line.max(self.prev_end());
        Ok(stmt)
    }

    fn small_statement_inner(&mut self) -> Result<TreeNode, SyntaxError> {
        let start = self.line();
        if let Tok::Name(kw) = &self.peek().tok {
            match kw.as_str() {
                "pass" | "break" | "continue" => {
                    let kind = match kw.as_str() {
                        "pass" => "Pass",
                        "break" => "Break",
                        _ => "Continue",
                    };
                    self.advance();
                    return Ok(TreeNode::new(kind, start, start));
                }
                "return" => {
                    self.advance();
                    let mut children = Vec::new();
                    if !self.at_statement_end() {
                        children.push(self.testlist()?);
                    }
                    let end = span_end(&children, start);
                    return Ok(node("Return", start, end, children));
                }
                "del" => {
                    self.advance();
                    let targets = self.expr_list_items()?;
                    let end = span_end(&targets, start);
                    return Ok(node("Delete", start, end, targets));
                }
                "raise" => {
                    self.advance();
                    let mut children = Vec::new();
                    if !self.at_statement_end() {
                        children.push(self.test()?);
                        if self.eat_kw("from") {
                            children.push(self.test()?);
                        }
                    }
                    let end = span_end(&children, start);
                    return Ok(node("Raise", start, end, children));
                }
                "assert" => {
                    self.advance();
                    let mut children = vec![self.test()?];
                    if self.eat_op(",") {
                        children.push(self.test()?);
                    }
                    let end = span_end(&children, start);
                    return Ok(node("Assert", start, end, children));
                }
                "global" | "nonlocal" => {
                    let kind = if kw == "global" { "Global" } else { "Nonlocal" };
                    self.advance();
                    let mut names = vec![self.identifier()?];
                    while self.eat_op(",") {
                        names.push(self.identifier()?);
                    }
                    let end = self.prev_end();
                    return Ok(TreeNode::new(kind, start, end).with_label(names.join(",")));
                }
                "import" => return self.import_stmt(),
                "from" => return self.import_from_stmt(),
                "yield" => return Err(self.err("yield is not supported")),
                _ => {}
            }
        }
        self.expr_statement()
    }

    fn at_statement_end(&self) -> bool {
        matches!(self.peek().tok, Tok::Newline | Tok::Eof) || self.at_op(";")
    }

    fn expr_statement(&mut self) -> Result<TreeNode, SyntaxError> {
        let start = self.line();
        let first = self.testlist_star()?;
        if self.at_op(":") {
            self.advance();
            let annotation = self.test()?;
            let mut children = vec![first, annotation];
            if self.eat_op("=") {
                children.push(self.testlist_star()?);
            }
            let end = span_end(&children, start);
            return Ok(node("AnnAssign", start, end, children));
        }
        if let Tok::Op(op) = self.peek().tok {
            if let Some((_, name)) = AUG_OPS.iter().find(|(o, _)| *o == op) {
                self.advance();
                let value = self.testlist()?;
                let end = value.end_line.max(first.end_line);
                return Ok(node("AugAssign", start, end, vec![first, value]).with_label(*name));
            }
        }
        if self.at_op("=") {
            let mut parts = vec![first];
            while self.eat_op("=") {
                parts.push(self.testlist_star()?);
            }
            let end = span_end(&parts, start);
            return Ok(node("Assign", start, end, parts));
        }
        let end = first.end_line;
        Ok(node("Expr", start, end, vec![first]))
    }

    fn dotted_name(&mut self) -> Result<String, SyntaxError> {
        let mut name = self.identifier()?;
        while self.eat_op(".") {
            name.push('.');
            name.push_str(&self.identifier()?);
        }
        Ok(name)
    }

    fn alias(&mut self, dotted: bool) -> Result<TreeNode, SyntaxError> {
        let line = self.line();
        let mut name = if dotted { self.dotted_name()? } else { self.identifier()? };
        if self.eat_kw("as") {
            name.push_str(" as ");
            name.push_str(&self.identifier()?);
        }
        Ok(TreeNode::new("alias", line, self.prev_end()).with_label(name))
    }

    fn import_stmt(&mut self) -> Result<TreeNode, SyntaxError> {
        let start = self.line();
        self.expect_kw("import")?;
        let mut names = vec![self.alias(true)?];
        while self.eat_op(",") {
            names.push(self.alias(true)?);
        }
        let end = span_end(&names, start);
        Ok(node("Import", start, end, names))
    }

    fn import_from_stmt(&mut self) -> Result<TreeNode, SyntaxError> {
        let start = self.line();
        self.expect_kw("from")?;
        let mut module = String::new();
        loop {
            if self.eat_op(".") {
                module.push('.');
            } else if self.eat_op("...") {
                module.push_str("...");
            } else {
                break;
            }
        }
        if !self.at_kw("import") {
            module.push_str(&self.dotted_name()?);
        }
        self.expect_kw("import")?;
        let mut names = Vec::new();
        if self.at_op("*") {
            let line = self.line();
            self.advance();
            names.push(TreeNode::new("alias", line, line).with_label("*"));
        } else {
            let paren = self.eat_op("(");
            names.push(self.alias(false)?);
            while self.eat_op(",") {
                if paren && self.at_op(")") {
                    break;
                }
                names.push(self.alias(false)?);
            }
            if paren {
                self.expect_op(")")?;
            }
        }
        let end = self.prev_end();
        Ok(node("ImportFrom", start, end, names).with_label(module))
    }

    /// Parses `: suite`, returning the body statements.
    fn block(&mut self) -> Result<Vec<TreeNode>, SyntaxError> {
        self.expect_op(":")?;
        if self.eat(&Tok::Newline) {
            if !self.eat(&Tok::Indent) {
                return Err(self.err("expected an indented block"));
            }
            let mut body = Vec::new();
            while !self.eat(&Tok::Dedent) {
                if self.at(&Tok::Eof) {
                    break;
                }
                body.extend(self.statement()?);
            }
            if body.is_empty() {
                return Err(self.err("expected an indented block"));
            }
            Ok(body)
        } else {
            self.simple_statements()
        }
    }

    fn if_stmt(&mut self) -> Result<TreeNode, SyntaxError> {
        // `if` or `elif`
        let start = self.line();
        self.advance();
        let test = self.test()?;
        let mut children = vec![test];
        children.extend(self.block()?);
        if self.at_kw("elif") {
            children.push(self.if_stmt()?);
        } else if self.at_kw("else") {
            self.advance();
            children.extend(self.block()?);
        }
        let end = span_end(&children, start);
        Ok(node("If", start, end, children))
    }

    fn else_clause(&mut self, children: &mut Vec<TreeNode>) -> Result<(), SyntaxError> {
        if self.eat_kw("else") {
            children.extend(self.block()?);
        }
        Ok(())
    }

    fn for_stmt(&mut self) -> Result<TreeNode, SyntaxError> {
        let start = self.line();
        self.expect_kw("for")?;
        let target = self.target_list()?;
        self.expect_kw("in")?;
        let iter = self.testlist()?;
        let mut children = vec![target, iter];
        children.extend(self.block()?);
        self.else_clause(&mut children)?;
        let end = span_end(&children, start);
        Ok(node("For", start, end, children))
    }

    fn while_stmt(&mut self) -> Result<TreeNode, SyntaxError> {
        let start = self.line();
        self.expect_kw("while")?;
        let mut children = vec![self.test()?];
        children.extend(self.block()?);
        self.else_clause(&mut children)?;
        let end = span_end(&children, start);
        Ok(node("While", start, end, children))
    }

    fn try_stmt(&mut self) -> Result<TreeNode, SyntaxError> {
        let start = self.line();
        self.expect_kw("try")?;
        let mut children = self.block()?;
        let mut handlers = 0;
        while self.at_kw("except") {
            let hline = self.line();
            self.advance();
            let mut hchildren = Vec::new();
            let mut name = None;
            if !self.at_op(":") {
                hchildren.push(self.test()?);
                if self.eat_kw("as") {
                    name = Some(self.identifier()?);
                }
            }
            hchildren.extend(self.block()?);
            let end = span_end(&hchildren, hline);
            let mut handler = node("ExceptHandler", hline, end, hchildren);
            handler.label = name;
            children.push(handler);
            handlers += 1;
        }
        if handlers > 0 {
            self.else_clause(&mut children)?;
        }
        let mut finally = false;
        if self.eat_kw("finally") {
            children.extend(self.block()?);
            finally = true;
        }
        if handlers == 0 && !finally {
            return Err(self.err("expected 'except' or 'finally' block"));
        }
        let end = span_end(&children, start);
        Ok(node("Try", start, end, children))
    }

    fn with_stmt(&mut self) -> Result<TreeNode, SyntaxError> {
        let start = self.line();
        self.expect_kw("with")?;
        let mut children = Vec::new();
        loop {
            let iline = self.line();
            let mut item = vec![self.test()?];
            if self.eat_kw("as") {
                item.push(self.target()?);
            }
            let end = span_end(&item, iline);
            children.push(node("withitem", iline, end, item));
            if !self.eat_op(",") {
                break;
            }
        }
        children.extend(self.block()?);
        let end = span_end(&children, start);
        Ok(node("With", start, end, children))
    }

    fn funcdef(&mut self) -> Result<TreeNode, SyntaxError> {
        let start = self.line();
        self.expect_kw("def")?;
        let name = self.identifier()?;
        let args = self.parameters()?;
        let mut children = vec![args];
        if self.eat_op("->") {
            children.push(self.test()?);
        }
        children.extend(self.block()?);
        let end = span_end(&children, start);
        Ok(node("FunctionDef", start, end, children).with_label(name))
    }

    fn parameters(&mut self) -> Result<TreeNode, SyntaxError> {
        let open = self.expect_op("(")?;
        let mut params = Vec::new();
        while !self.at_op(")") {
            let line = self.line();
            let label = if self.eat_op("**") {
                format!("**{}", self.identifier()?)
            } else if self.eat_op("*") {
                if self.at_op(",") || self.at_op(")") {
                    "*".to_string()
                } else {
                    format!("*{}", self.identifier()?)
                }
            } else if self.eat_op("/") {
                "/".to_string()
            } else {
                self.identifier()?
            };
            let mut children = Vec::new();
            let plain = !label.starts_with('*') && label != "/";
            if (plain || label.len() > 1) && self.eat_op(":") {
                children.push(self.test()?);
            }
            if plain && self.eat_op("=") {
                children.push(self.test()?);
            }
            let end = span_end(&children, line);
            params.push(node("arg", line, end, children).with_label(label));
            if !self.eat_op(",") {
                break;
            }
        }
        let close = self.expect_op(")")?;
        Ok(node("arguments", open.line, close.line, params))
    }

    fn classdef(&mut self) -> Result<TreeNode, SyntaxError> {
        let start = self.line();
        self.expect_kw("class")?;
        let name = self.identifier()?;
        let mut children = Vec::new();
        if self.eat_op("(") {
            children.extend(self.call_arguments()?);
        }
        children.extend(self.block()?);
        let end = span_end(&children, start);
        Ok(node("ClassDef", start, end, children).with_label(name))
    }

    // ---------------------------------------------------------------- expressions

    fn tuple_or_single(&mut self, first: TreeNode, item: fn(&mut Self) -> Result<TreeNode, SyntaxError>) -> Result<TreeNode, SyntaxError> {
        if !self.at_op(",") {
            return Ok(first);
        }
        let start = first.start_line;
        let mut elts = vec![first];
        while self.eat_op(",") {
            if self.at_tuple_end() {
                break;
            }
            elts.push(item(self)?);
        }
        let end = span_end(&elts, start);
        Ok(node("Tuple", start, end, elts))
    }

    fn at_tuple_end(&self) -> bool {
        self.at_statement_end()
            || [")", "]", "}", "=", ":"].iter().any(|op| self.at_op(op))
            || AUG_OPS.iter().any(|(op, _)| self.at_op(op))
            || self.at_kw("in")
    }

    fn testlist(&mut self) -> Result<TreeNode, SyntaxError> {
        let first = self.test()?;
        self.tuple_or_single(first, Self::test)
    }

    fn testlist_star(&mut self) -> Result<TreeNode, SyntaxError> {
        let first = self.star_or_test()?;
        self.tuple_or_single(first, Self::star_or_test)
    }

    fn star_or_test(&mut self) -> Result<TreeNode, SyntaxError> {
        if self.at_op("*") {
            let start = self.line();
            self.advance();
            let value = self.bitor()?;
            let end = value.end_line;
            return Ok(node("Starred", start, end, vec![value]));
        }
        self.test()
    }

    fn target(&mut self) -> Result<TreeNode, SyntaxError> {
        self.star_or_bitor()
    }

    fn star_or_bitor(&mut self) -> Result<TreeNode, SyntaxError> {
        if self.at_op("*") {
            let start = self.line();
            self.advance();
            let value = self.bitor()?;
            let end = value.end_line;
            return Ok(node("Starred", start, end, vec![value]));
        }
        self.bitor()
    }

    fn target_list(&mut self) -> Result<TreeNode, SyntaxError> {
        let first = self.star_or_bitor()?;
        self.tuple_or_single(first, Self::star_or_bitor)
    }

    fn expr_list_items(&mut self) -> Result<Vec<TreeNode>, SyntaxError> {
        let mut items = vec![self.bitor()?];
        while self.eat_op(",") {
            if self.at_statement_end() {
                break;
            }
            items.push(self.bitor()?);
        }
        Ok(items)
    }

    fn test(&mut self) -> Result<TreeNode, SyntaxError> {
        if self.at_kw("lambda") {
            return Err(self.err("lambda expressions are not supported"));
        }
        if self.at_kw("yield") {
            return Err(self.err("yield is not supported"));
        }
        let body = self.or_test()?;
        if self.at_op(":=") {
            return Err(self.err("assignment expressions are not supported"));
        }
        if self.at_kw("if") {
            self.advance();
            let cond = self.or_test()?;
            self.expect_kw("else")?;
            let orelse = self.test()?;
            let start = body.start_line;
            let end = orelse.end_line.max(cond.end_line).max(body.end_line);
            return Ok(node("IfExp", start, end, vec![body, cond, orelse]));
        }
        Ok(body)
    }

    fn bool_chain(&mut self, kw: &str, label: &str, next: fn(&mut Self) -> Result<TreeNode, SyntaxError>) -> Result<TreeNode, SyntaxError> {
        let first = next(self)?;
        if !self.at_kw(kw) {
            return Ok(first);
        }
        let start = first.start_line;
        let mut values = vec![first];
        while self.eat_kw(kw) {
            values.push(next(self)?);
        }
        let end = span_end(&values, start);
        Ok(node("BoolOp", start, end, values).with_label(label))
    }

    fn or_test(&mut self) -> Result<TreeNode, SyntaxError> {
        self.bool_chain("or", "Or", Self::and_test)
    }

    fn and_test(&mut self) -> Result<TreeNode, SyntaxError> {
        self.bool_chain("and", "And", Self::not_test)
    }

    fn not_test(&mut self) -> Result<TreeNode, SyntaxError> {
        if self.at_kw("not") {
            let start = self.line();
            self.advance();
            let operand = self.not_test()?;
            let end = operand.end_line;
            return Ok(node("UnaryOp", start, end, vec![operand]).with_label("Not"));
        }
        self.comparison()
    }

    fn comparison_op(&mut self) -> Option<&'static str> {
        let op = match &self.peek().tok {
            Tok::Op("==") => "Eq",
            Tok::Op("!=") => "NotEq",
            Tok::Op("<") => "Lt",
            Tok::Op("<=") => "LtE",
            Tok::Op(">") => "Gt",
            Tok::Op(">=") => "GtE",
            Tok::Name(n) if n == "in" => "In",
            Tok::Name(n) if n == "is" => {
                if matches!(self.peek_at(1), Tok::Name(m) if m == "not") {
                    self.advance();
                    self.advance();
                    return Some("IsNot");
                }
                "Is"
            }
            Tok::Name(n) if n == "not" && matches!(self.peek_at(1), Tok::Name(m) if m == "in") => {
                self.advance();
                self.advance();
                return Some("NotIn");
            }
            _ => return None,
        };
        self.advance();
        Some(op)
    }

    fn comparison(&mut self) -> Result<TreeNode, SyntaxError> {
        let left = self.bitor()?;
        let mut ops = Vec::new();
        let mut children = vec![left];
        while let Some(op) = self.comparison_op() {
            ops.push(op);
            children.push(self.bitor()?);
        }
        if ops.is_empty() {
            return Ok(children.pop().expect("left operand"));
        }
        let start = children[0].start_line;
        let end = span_end(&children, start);
        Ok(node("Compare", start, end, children).with_label(ops.join(",")))
    }

    fn binary(&mut self, ops: &[(&str, &'static str)], next: fn(&mut Self) -> Result<TreeNode, SyntaxError>) -> Result<TreeNode, SyntaxError> {
        let mut left = next(self)?;
        loop {
            let Some((_, name)) = ops.iter().find(|(op, _)| self.at_op(op)) else {
                return Ok(left);
            };
            self.advance();
            let right = next(self)?;
            let start = left.start_line;
            let end = right.end_line.max(left.end_line);
            left = node("BinOp", start, end, vec![left, right]).with_label(*name);
        }
    }

    fn bitor(&mut self) -> Result<TreeNode, SyntaxError> {
        self.binary(&[("|", "BitOr")], Self::bitxor)
    }

    fn bitxor(&mut self) -> Result<TreeNode, SyntaxError> {
        self.binary(&[("^", "BitXor")], Self::bitand)
    }

    fn bitand(&mut self) -> Result<TreeNode, SyntaxError> {
        self.binary(&[("&", "BitAnd")], Self::shift)
    }

    fn shift(&mut self) -> Result<TreeNode, SyntaxError> {
        self.binary(&[("<<", "LShift"), (">>", "RShift")], Self::arith)
    }

    fn arith(&mut self) -> Result<TreeNode, SyntaxError> {
        self.binary(&[("+", "Add"), ("-", "Sub")], Self::term)
    }

    fn term(&mut self) -> Result<TreeNode, SyntaxError> {
        self.binary(
            &[("*", "Mult"), ("/", "Div"), ("//", "FloorDiv"), ("%", "Mod"), ("@", "MatMult")],
            Self::factor,
        )
    }

    fn factor(&mut self) -> Result<TreeNode, SyntaxError> {
        let label = match &self.peek().tok {
            Tok::Op("+") => "UAdd",
            Tok::Op("-") => "USub",
            Tok::Op("~") => "Invert",
            _ => return self.power(),
        };
        let start = self.line();
        self.advance();
        let operand = self.factor()?;
        let end = operand.end_line;
        Ok(node("UnaryOp", start, end, vec![operand]).with_label(label))
    }

    fn power(&mut self) -> Result<TreeNode, SyntaxError> {
        if self.at_kw("await") {
            return Err(self.err("await is not supported"));
        }
        let base = self.atom_expr()?;
        if self.eat_op("**") {
            let exponent = self.factor()?;
            let start = base.start_line;
            let end = exponent.end_line.max(base.end_line);
            return Ok(node("BinOp", start, end, vec![base, exponent]).with_label("Pow"));
        }
        Ok(base)
    }

    fn atom_expr(&mut self) -> Result<TreeNode, SyntaxError> {
        let mut expr = self.atom()?;
        loop {
            let start = expr.start_line;
            if self.eat_op("(") {
                let mut children = vec![expr];
                children.extend(self.call_arguments()?);
                let end = self.prev_end();
                expr = node("Call", start, end, children);
            } else if self.eat_op("[") {
                let slice = self.subscript_list()?;
                self.expect_op("]")?;
                let end = self.prev_end();
                expr = node("Subscript", start, end, vec![expr, slice]);
            } else if self.eat_op(".") {
                let attr = self.identifier()?;
                let end = self.prev_end();
                expr = node("Attribute", start, end, vec![expr]).with_label(attr);
            } else {
                return Ok(expr);
            }
        }
    }

    /// Parses call arguments after `(` up to and including `)`.
    fn call_arguments(&mut self) -> Result<Vec<TreeNode>, SyntaxError> {
        let mut args = Vec::new();
        while !self.at_op(")") {
            let line = self.line();
            if self.eat_op("**") {
                let value = self.test()?;
                let end = value.end_line;
                args.push(node("keyword", line, end, vec![value]));
            } else if self.eat_op("*") {
                let value = self.test()?;
                let end = value.end_line;
                args.push(node("Starred", line, end, vec![value]));
            } else if matches!(self.peek().tok, Tok::Name(_)) && matches!(self.peek_at(1), Tok::Op("=")) {
                let name = self.identifier()?;
                self.expect_op("=")?;
                let value = self.test()?;
                let end = value.end_line;
                args.push(node("keyword", line, end, vec![value]).with_label(name));
            } else {
                let value = self.test()?;
                if self.at_kw("for") || self.at_kw("async") {
                    return Err(self.err("comprehensions are not supported"));
                }
                args.push(value);
            }
            if !self.eat_op(",") {
                break;
            }
        }
        self.expect_op(")")?;
        Ok(args)
    }

    fn subscript_list(&mut self) -> Result<TreeNode, SyntaxError> {
        let first = self.subscript()?;
        if !self.at_op(",") {
            return Ok(first);
        }
        let start = first.start_line;
        let mut elts = vec![first];
        while self.eat_op(",") {
            if self.at_op("]") {
                break;
            }
            elts.push(self.subscript()?);
        }
        let end = span_end(&elts, start);
        Ok(node("Tuple", start, end, elts))
    }

    fn subscript(&mut self) -> Result<TreeNode, SyntaxError> {
        let start = self.line();
        let lower = if self.at_op(":") { None } else { Some(self.test()?) };
        if !self.at_op(":") {
            return lower.ok_or_else(|| self.unexpected());
        }
        self.advance();
        let mut children: Vec<TreeNode> = lower.into_iter().collect();
        if !self.at_op(":") && !self.at_op("]") && !self.at_op(",") {
            children.push(self.test()?);
        }
        if self.eat_op(":") && !self.at_op("]") && !self.at_op(",") {
            children.push(self.test()?);
        }
        let end = span_end(&children, self.prev_end().max(start));
        Ok(node("Slice", start, end, children))
    }

    fn atom(&mut self) -> Result<TreeNode, SyntaxError> {
        let tok = self.peek().clone();
        let line = tok.line;
        match &tok.tok {
            Tok::Name(n) if matches!(n.as_str(), "None" | "True" | "False") => {
                self.advance();
                Ok(TreeNode::new("Constant", line, line).with_label(n.clone()))
            }
            Tok::Name(n) if !KEYWORDS.contains(&n.as_str()) => {
                self.advance();
                Ok(TreeNode::new("Name", line, line).with_label(n.clone()))
            }
            Tok::Number(n) => {
                self.advance();
                Ok(TreeNode::new("Constant", line, line).with_label(n.clone()))
            }
            Tok::Str(_) => {
                let mut parts = Vec::new();
                let mut end = line;
                while let Tok::Str(s) = &self.peek().tok {
                    parts.push(s.clone());
                    end = self.peek().end_line;
                    self.advance();
                }
                Ok(TreeNode::new("Constant", line, end).with_label(parts.join(" ")))
            }
            Tok::Op("...") => {
                self.advance();
                Ok(TreeNode::new("Constant", line, line).with_label("..."))
            }
            Tok::Op("(") => {
                self.advance();
                if self.eat_op(")") {
                    return Ok(TreeNode::new("Tuple", line, self.prev_end()));
                }
                if self.at_kw("yield") {
                    return Err(self.err("yield is not supported"));
                }
                let first = self.star_or_test()?;
                if self.at_kw("for") || self.at_kw("async") {
                    return Err(self.err("comprehensions are not supported"));
                }
                if self.at_op(",") {
                    let mut elts = vec![first];
                    while self.eat_op(",") {
                        if self.at_op(")") {
                            break;
                        }
                        elts.push(self.star_or_test()?);
                    }
                    self.expect_op(")")?;
                    return Ok(node("Tuple", line, self.prev_end(), elts));
                }
                self.expect_op(")")?;
                Ok(first)
            }
            Tok::Op("[") => {
                self.advance();
                let elts = self.sequence_items("]")?;
                Ok(node("List", line, self.prev_end(), elts))
            }
            Tok::Op("{") => {
                self.advance();
                self.dict_or_set(line)
            }
            _ => Err(self.unexpected()),
        }
    }

    fn sequence_items(&mut self, close: &str) -> Result<Vec<TreeNode>, SyntaxError> {
        let mut elts = Vec::new();
        while !self.at_op(close) {
            elts.push(self.star_or_test()?);
            if self.at_kw("for") || self.at_kw("async") {
                return Err(self.err("comprehensions are not supported"));
            }
            if !self.eat_op(",") {
                break;
            }
        }
        self.expect_op(close)?;
        Ok(elts)
    }

    fn dict_or_set(&mut self, line: u32) -> Result<TreeNode, SyntaxError> {
        if self.eat_op("}") {
            return Ok(TreeNode::new("Dict", line, self.prev_end()));
        }
        if self.at_op("**") {
            return Err(self.err("dictionary unpacking is not supported"));
        }
        let first = self.star_or_test()?;
        if self.eat_op(":") {
            let mut items = vec![first, self.test()?];
            if self.at_kw("for") || self.at_kw("async") {
                return Err(self.err("comprehensions are not supported"));
            }
            while self.eat_op(",") {
                if self.at_op("}") {
                    break;
                }
                if self.at_op("**") {
                    return Err(self.err("dictionary unpacking is not supported"));
                }
                items.push(self.test()?);
                self.expect_op(":")?;
                items.push(self.test()?);
            }
            self.expect_op("}")?;
            return Ok(node("Dict", line, self.prev_end(), items));
        }
        if self.at_kw("for") || self.at_kw("async") {
            return Err(self.err("comprehensions are not supported"));
        }
        let mut elts = vec![first];
        if self.eat_op(",") {
            elts.extend(self.sequence_items("}")?);
        } else {
            self.expect_op("}")?;
        }
        Ok(node("Set", line, self.prev_end(), elts))
    }
}
