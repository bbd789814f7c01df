use std::f64::consts::{E, PI};

use thiserror::Error;

use super::lexer::{tokenize, Token, TokenKind};
use super::{BinaryOp, Expr, Func, Var};

/// Recursion limit for parentheses, negations and powers.
const MAX_NESTING: usize = 100;
/// Limit on the depth of the resulting tree; evaluation recurses this deep.
const MAX_TREE_DEPTH: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParseErrorKind {
    Lexical,
    Syntax,
    UnknownIdentifier,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{kind:?} error at offset {offset}: {message}")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    /// Byte offset into the source text.
    pub offset: usize,
    pub message: String,
}

/// Parses source text into an expression tree.
pub fn parse(src: &str) -> Result<Expr, ParseError> {
    let tokens = tokenize(src)?;
    let mut parser = Parser {
        tokens,
        pos: 0,
        nesting: 0,
    };
    let (expr, _) = parser.expr()?;
    let tok = parser.peek();
    if tok.kind != TokenKind::Eof {
        return Err(parser.unexpected(tok.clone(), "end of input"));
    }
    Ok(expr)
}

/// A subtree and its depth.
type Node = (Expr, usize);

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    nesting: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn advance(&mut self) -> Token {
        let tok = self.tokens[self.pos].clone();
        if tok.kind != TokenKind::Eof {
            self.pos += 1;
        }
        tok
    }

    fn unexpected(&self, tok: Token, expected: &str) -> ParseError {
        ParseError {
            kind: ParseErrorKind::Syntax,
            offset: tok.offset,
            message: format!("expected {expected}, found {}", tok.kind.describe()),
        }
    }

    fn too_deep(&self, what: &str, limit: usize) -> ParseError {
        ParseError {
            kind: ParseErrorKind::Syntax,
            offset: self.peek().offset,
            message: format!("{what} exceeds {limit} levels"),
        }
    }

    fn nested<T>(&mut self, body: impl FnOnce(&mut Self) -> Result<T, ParseError>) -> Result<T, ParseError> {
        if self.nesting >= MAX_NESTING {
            return Err(self.too_deep("nesting", MAX_NESTING));
        }
        self.nesting += 1;
        let out = body(self);
        self.nesting -= 1;
        out
    }

    fn node(&self, expr: Expr, depth: usize) -> Result<Node, ParseError> {
        if depth > MAX_TREE_DEPTH {
            return Err(self.too_deep("expression depth", MAX_TREE_DEPTH));
        }
        Ok((expr, depth))
    }

    fn expr(&mut self) -> Result<Node, ParseError> {
        self.nested(|p| {
            let (mut lhs, mut depth) = p.term()?;
            loop {
                let op = match p.peek().kind {
                    TokenKind::Plus => BinaryOp::Add,
                    TokenKind::Minus => BinaryOp::Sub,
                    _ => break,
                };
                p.advance();
                let (rhs, rd) = p.term()?;
                (lhs, depth) = p.node(Expr::binary(op, lhs, rhs), depth.max(rd) + 1)?;
            }
            Ok((lhs, depth))
        })
    }

    fn term(&mut self) -> Result<Node, ParseError> {
        let (mut lhs, mut depth) = self.unary()?;
        loop {
            let op = match self.peek().kind {
                TokenKind::Star => BinaryOp::Mul,
                TokenKind::Slash => BinaryOp::Div,
                _ => break,
            };
            self.advance();
            let (rhs, rd) = self.unary()?;
            (lhs, depth) = self.node(Expr::binary(op, lhs, rhs), depth.max(rd) + 1)?;
        }
        Ok((lhs, depth))
    }

    fn unary(&mut self) -> Result<Node, ParseError> {
        if self.peek().kind == TokenKind::Minus {
            return self.nested(|p| {
                p.advance();
                let (inner, d) = p.unary()?;
                p.node(Expr::negate(inner), d + 1)
            });
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node, ParseError> {
        let (base, bd) = self.primary()?;
        if self.peek().kind == TokenKind::Caret {
            return self.nested(|p| {
                p.advance();
                let (exponent, ed) = p.unary()?;
                p.node(Expr::binary(BinaryOp::Pow, base, exponent), bd.max(ed) + 1)
            });
        }
        Ok((base, bd))
    }

    fn primary(&mut self) -> Result<Node, ParseError> {
        let tok = self.advance();
        match tok.kind {
            TokenKind::Number(n) => Ok((Expr::Constant(n), 1)),
            TokenKind::LParen => {
                let inner = self.expr()?;
                self.expect_rparen()?;
                Ok(inner)
            }
            TokenKind::Ident(ref name) => {
                if let Some(var) = Var::from_name(name) {
                    return Ok((Expr::Variable(var), 1));
                }
                match name.as_str() {
                    "pi" => return Ok((Expr::Constant(PI), 1)),
                    "e" => return Ok((Expr::Constant(E), 1)),
                    _ => {}
                }
                if let Some(func) = Func::from_name(name) {
                    let open = self.advance();
                    if open.kind != TokenKind::LParen {
                        return Err(self.unexpected(open, &format!("'(' after '{name}'")));
                    }
                    let (arg, d) = self.expr()?;
                    self.expect_rparen()?;
                    return self.node(Expr::call(func, arg), d + 1);
                }
                Err(ParseError {
                    kind: ParseErrorKind::UnknownIdentifier,
                    offset: tok.offset,
                    message: format!(
                        "unknown identifier '{name}' (variables are t, theta, thetadot)"
                    ),
                })
            }
            _ => Err(self.unexpected(tok, "a number, variable, function or '('")),
        }
    }

    fn expect_rparen(&mut self) -> Result<(), ParseError> {
        let tok = self.advance();
        if tok.kind != TokenKind::RParen {
            return Err(self.unexpected(tok, "')'"));
        }
        Ok(())
    }
}
