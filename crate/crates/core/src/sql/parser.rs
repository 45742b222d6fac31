use std::collections::HashSet;

use super::ast::*;
use super::lexer::{tokenize, Keyword, Spanned, Token};
use super::ParseError;
use crate::types::{is_iso_date, Decimal};

/// Parses one statement, optionally terminated by `;`.
pub fn parse(sql: &str) -> Result<Query, ParseError> {
    let mut p = Parser::new(sql)?;
    let query = p.statement()?;
    p.finish()?;
    Ok(query)
}

/// Parses one `CREATE TABLE` statement.
pub fn parse_create_table(sql: &str) -> Result<CreateTable, ParseError> {
    let mut p = Parser::new(sql)?;
    let ct = p.create_table()?;
    p.finish()?;
    Ok(ct)
}

struct Parser {
    tokens: Vec<Spanned>,
    pos: usize,
    /// Set while parsing a WHERE clause; aggregates and subqueries are rejected there.
    in_predicate: bool,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn new(sql: &str) -> PResult<Parser> {
        Ok(Parser { tokens: tokenize(sql)?, pos: 0, in_predicate: false })
    }

    fn peek(&self) -> &Token {
        &self.tokens[self.pos].token
    }

    fn peek_at(&self, n: usize) -> &Token {
        let idx = (self.pos + n).min(self.tokens.len() - 1);
        &self.tokens[idx].token
    }

    fn offset(&self) -> usize {
        self.tokens[self.pos].offset
    }

    fn advance(&mut self) -> Token {
        let t = self.tokens[self.pos].token.clone();
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, t: &Token) -> bool {
        if self.peek() == t {
            self.advance();
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, k: Keyword) -> bool {
        self.eat(&Token::Keyword(k))
    }

    /// Error for the current token. Keywords of unsupported features produce
    /// `Unsupported` rather than a generic syntax error.
    fn unexpected(&self, expected: &[&str]) -> ParseError {
        let found = self.peek();
        if let Token::Keyword(k) = found {
            if let Some(feature) = k.unsupported_feature() {
                return ParseError::Unsupported { feature: feature.to_string(), position: self.offset() };
            }
        }
        ParseError::syntax(self.offset(), expected.iter().map(|s| s.to_string()).collect(), found.to_string())
    }

    fn expect(&mut self, t: Token) -> PResult<()> {
        if self.eat(&t) {
            Ok(())
        } else {
            Err(self.unexpected(&[&t.to_string()]))
        }
    }

    fn expect_kw(&mut self, k: Keyword) -> PResult<()> {
        if self.eat_kw(k) {
            Ok(())
        } else {
            Err(self.unexpected(&[&k.to_string()]))
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek() {
            Token::Ident(_) => match self.advance() {
                Token::Ident(s) => Ok(s),
                _ => unreachable!(),
            },
            _ => Err(self.unexpected(&["identifier"])),
        }
    }

    fn finish(&mut self) -> PResult<()> {
        self.eat(&Token::Semicolon);
        match self.peek() {
            Token::Eof => Ok(()),
            _ if self.tokens[self.pos - 1].token == Token::Semicolon => {
                Err(ParseError::MultipleStatements { position: self.offset() })
            }
            _ => Err(self.unexpected(&["end of input"])),
        }
    }

    fn statement(&mut self) -> PResult<Query> {
        match self.peek() {
            Token::Keyword(Keyword::Select) => Ok(Query::Select(self.select()?)),
            Token::Keyword(Keyword::Insert) => Ok(Query::Insert(self.insert()?)),
            Token::Keyword(Keyword::Update) => Ok(Query::Update(self.update()?)),
            Token::Keyword(Keyword::Delete) => Ok(Query::Delete(self.delete()?)),
            _ => Err(self.unexpected(&["SELECT", "INSERT", "UPDATE", "DELETE"])),
        }
    }

    fn select(&mut self) -> PResult<SelectQuery> {
        self.expect_kw(Keyword::Select)?;
        let saved = std::mem::replace(&mut self.in_predicate, false);
        let mut projections = vec![self.projection_item()?];
        while self.eat(&Token::Comma) {
            projections.push(self.projection_item()?);
        }
        self.expect_kw(Keyword::From)?;
        let from_start = self.offset();
        let mut from = vec![self.table_ref()?];
        while self.eat(&Token::Comma) {
            from.push(self.table_ref()?);
        }
        let mut seen = HashSet::new();
        for item in &from {
            if !seen.insert(item.binding_name().to_string()) {
                self.in_predicate = saved;
                return Err(ParseError::DuplicateAlias { alias: item.binding_name().to_string(), position: from_start });
            }
        }
        let selection = if self.eat_kw(Keyword::Where) { Some(self.where_clause()?) } else { None };
        self.in_predicate = saved;
        Ok(SelectQuery { projections, from, selection })
    }

    fn where_clause(&mut self) -> PResult<Predicate> {
        let saved = std::mem::replace(&mut self.in_predicate, true);
        let p = self.predicate();
        self.in_predicate = saved;
        p
    }

    fn projection_item(&mut self) -> PResult<ProjectionItem> {
        if self.eat(&Token::Star) {
            return Ok(ProjectionItem::Star);
        }
        // `(expr AS alias)` form
        if self.peek() == &Token::LParen {
            let start = self.pos;
            self.advance();
            if let Ok(expr) = self.expr() {
                if self.eat_kw(Keyword::As) {
                    let alias = self.ident()?;
                    self.expect(Token::RParen)?;
                    return Ok(ProjectionItem::Expr { expr, alias: Some(alias) });
                }
            }
            self.pos = start;
        }
        let expr = self.expr()?;
        let alias = if self.eat_kw(Keyword::As) || matches!(self.peek(), Token::Ident(_)) {
            Some(self.ident()?)
        } else {
            None
        };
        Ok(ProjectionItem::Expr { expr, alias })
    }

    fn table_ref(&mut self) -> PResult<FromItem> {
        if self.eat(&Token::LParen) {
            if self.peek() == &Token::Keyword(Keyword::Select) {
                let sub = self.select()?;
                self.expect(Token::RParen)?;
                let alias_pos = self.offset();
                return match self.opt_alias()? {
                    Some(alias) => Ok(FromItem::Derived { subquery: Box::new(sub), alias }),
                    None => Err(ParseError::syntax(alias_pos, vec!["derived table alias".into()], self.peek().to_string())),
                };
            }
            let inner = self.table_ref()?;
            self.expect(Token::RParen)?;
            let outer = self.opt_alias()?;
            return Ok(match (inner, outer) {
                (item, None) => item,
                (FromItem::Base { name, .. }, Some(alias)) => FromItem::Base { name, alias: Some(alias) },
                (FromItem::Derived { subquery, .. }, Some(alias)) => FromItem::Derived { subquery, alias },
            });
        }
        let name = self.ident()?;
        let alias = self.opt_alias()?;
        Ok(FromItem::Base { name, alias })
    }

    fn opt_alias(&mut self) -> PResult<Option<String>> {
        if self.eat_kw(Keyword::As) {
            return Ok(Some(self.ident()?));
        }
        if matches!(self.peek(), Token::Ident(_)) {
            return Ok(Some(self.ident()?));
        }
        Ok(None)
    }

    fn predicate(&mut self) -> PResult<Predicate> {
        let mut left = self.conjunction()?;
        while self.eat_kw(Keyword::Or) {
            let right = self.conjunction()?;
            left = Predicate::or(left, right);
        }
        Ok(left)
    }

    fn conjunction(&mut self) -> PResult<Predicate> {
        let mut left = self.predicate_atom()?;
        while self.eat_kw(Keyword::And) {
            let right = self.predicate_atom()?;
            left = Predicate::and(left, right);
        }
        Ok(left)
    }

    fn predicate_atom(&mut self) -> PResult<Predicate> {
        if self.peek() == &Token::LParen {
            // A parenthesis opens either a nested predicate or an arithmetic
            // expression; try the predicate first.
            let start = self.pos;
            self.advance();
            let first = self.predicate().and_then(|p| self.expect(Token::RParen).map(|_| p));
            match first {
                Ok(p) if !self.continues_expression() => return Ok(p),
                Ok(_) => self.pos = start,
                Err(e @ ParseError::Unsupported { .. }) => return Err(e),
                Err(e1) => {
                    self.pos = start;
                    return self.comparison().map_err(|e2| farthest(e1, e2));
                }
            }
        }
        if self.peek() == &Token::Keyword(Keyword::Not) {
            return match self.peek_at(1) {
                Token::Keyword(Keyword::Exists) => {
                    self.advance();
                    Err(self.unexpected(&[]))
                }
                _ => Err(ParseError::Unsupported { feature: "NOT outside NOT LIKE".into(), position: self.offset() }),
            };
        }
        self.comparison()
    }

    /// After a parenthesized group, does the token stream continue as arithmetic?
    fn continues_expression(&self) -> bool {
        matches!(
            self.peek(),
            Token::Plus
                | Token::Minus
                | Token::Star
                | Token::Slash
                | Token::Eq
                | Token::NotEq
                | Token::Lt
                | Token::LtEq
                | Token::Gt
                | Token::GtEq
                | Token::Keyword(Keyword::Like)
                | Token::Keyword(Keyword::Not)
        )
    }

    fn comparison(&mut self) -> PResult<Predicate> {
        let left = self.expr()?;
        let op = match self.peek() {
            Token::Eq => Some(CompareOp::Eq),
            Token::NotEq => Some(CompareOp::NotEq),
            Token::Lt => Some(CompareOp::Lt),
            Token::LtEq => Some(CompareOp::LtEq),
            Token::Gt => Some(CompareOp::Gt),
            Token::GtEq => Some(CompareOp::GtEq),
            _ => None,
        };
        if let Some(op) = op {
            self.advance();
            let right = self.expr()?;
            return Ok(Predicate::Compare { left, op, right });
        }
        let negated = if self.peek() == &Token::Keyword(Keyword::Not) {
            if self.peek_at(1) != &Token::Keyword(Keyword::Like) {
                self.advance();
                return Err(self.unexpected(&["LIKE"]));
            }
            self.advance();
            true
        } else {
            false
        };
        if self.eat_kw(Keyword::Like) {
            let pattern = self.expr()?;
            return Ok(Predicate::Like { expr: left, pattern, negated });
        }
        Err(self.unexpected(&["comparison operator", "LIKE", "NOT LIKE"]))
    }

    fn expr(&mut self) -> PResult<Expr> {
        let mut left = self.term()?;
        loop {
            let op = match self.peek() {
                Token::Plus => BinaryOp::Add,
                Token::Minus => BinaryOp::Sub,
                _ => return Ok(left),
            };
            self.advance();
            let right = self.term()?;
            left = Expr::Binary { op, left: Box::new(left), right: Box::new(right) };
        }
    }

    fn term(&mut self) -> PResult<Expr> {
        let mut left = self.factor()?;
        loop {
            let op = match self.peek() {
                Token::Star => BinaryOp::Mul,
                Token::Slash => BinaryOp::Div,
                _ => return Ok(left),
            };
            self.advance();
            let right = self.factor()?;
            left = Expr::Binary { op, left: Box::new(left), right: Box::new(right) };
        }
    }

    fn factor(&mut self) -> PResult<Expr> {
        if self.eat(&Token::Minus) {
            return Ok(Expr::Neg(Box::new(self.factor()?)));
        }
        if self.eat(&Token::Plus) {
            return self.factor();
        }
        self.primary()
    }

    fn primary(&mut self) -> PResult<Expr> {
        let position = self.offset();
        match self.peek().clone() {
            Token::Number(n) => {
                self.advance();
                number_literal(&n, position).map(Expr::Literal)
            }
            Token::Str(s) => {
                self.advance();
                Ok(Expr::Literal(Literal::Str(s)))
            }
            Token::Keyword(Keyword::Null) => {
                self.advance();
                Ok(Expr::Literal(Literal::Null))
            }
            Token::LParen => {
                self.advance();
                if self.peek() == &Token::Keyword(Keyword::Select) {
                    return Err(ParseError::Unsupported {
                        feature: "subquery in expression".into(),
                        position: self.offset(),
                    });
                }
                let e = self.expr()?;
                self.expect(Token::RParen)?;
                Ok(e)
            }
            Token::Ident(name) => {
                self.advance();
                if name == "date" {
                    if let Token::Str(s) = self.peek().clone() {
                        self.advance();
                        if !is_iso_date(&s) {
                            return Err(ParseError::syntax(position, vec!["YYYY-MM-DD date".into()], format!("'{s}'")));
                        }
                        return Ok(Expr::Literal(Literal::Date(s)));
                    }
                }
                if self.peek() == &Token::LParen {
                    return self.function_call(name, position);
                }
                if self.eat(&Token::Dot) {
                    let column = self.ident()?;
                    return Ok(Expr::column(Some(&name), &column));
                }
                Ok(Expr::column(None, &name))
            }
            _ => Err(self.unexpected(&["expression"])),
        }
    }

    fn function_call(&mut self, name: String, position: usize) -> PResult<Expr> {
        let Some(func) = AggregateFunc::from_name(&name) else {
            return Err(ParseError::Unsupported { feature: format!("function {name}()"), position });
        };
        if self.in_predicate {
            return Err(ParseError::Unsupported { feature: "aggregate in WHERE".into(), position });
        }
        self.expect(Token::LParen)?;
        if func == AggregateFunc::Count && self.eat(&Token::Star) {
            self.expect(Token::RParen)?;
            return Ok(Expr::Aggregate { func, arg: None });
        }
        let arg = self.expr()?;
        if arg.contains_aggregate() {
            return Err(ParseError::Unsupported { feature: "nested aggregate".into(), position });
        }
        self.expect(Token::RParen)?;
        Ok(Expr::Aggregate { func, arg: Some(Box::new(arg)) })
    }

    fn update(&mut self) -> PResult<UpdateQuery> {
        self.expect_kw(Keyword::Update)?;
        let table = self.ident()?;
        self.expect_kw(Keyword::Set)?;
        let mut set_clauses = vec![self.set_clause(&table)?];
        while self.eat(&Token::Comma) {
            set_clauses.push(self.set_clause(&table)?);
        }
        let selection = if self.eat_kw(Keyword::Where) { Some(self.where_clause()?) } else { None };
        Ok(UpdateQuery { table, set_clauses, selection })
    }

    fn set_clause(&mut self, table: &str) -> PResult<SetClause> {
        let position = self.offset();
        let first = self.ident()?;
        let column = if self.eat(&Token::Dot) {
            if first != table {
                return Err(ParseError::syntax(position, vec![format!("column of {table}")], first));
            }
            self.ident()?
        } else {
            first
        };
        self.expect(Token::Eq)?;
        if self.peek() == &Token::LParen && self.peek_at(1) == &Token::Keyword(Keyword::Select) {
            self.advance();
            let sub = self.select()?;
            self.expect(Token::RParen)?;
            return Ok(SetClause { column, value: SetValue::Subquery(Box::new(sub)) });
        }
        let saved = std::mem::replace(&mut self.in_predicate, true);
        let value = self.expr();
        self.in_predicate = saved;
        Ok(SetClause { column, value: SetValue::Expr(value?) })
    }

    fn insert(&mut self) -> PResult<InsertQuery> {
        self.expect_kw(Keyword::Insert)?;
        self.expect_kw(Keyword::Into)?;
        let table = self.ident()?;
        let mut columns = Vec::new();
        if self.peek() == &Token::LParen && self.peek_at(1) != &Token::Keyword(Keyword::Select) {
            self.advance();
            columns.push(self.ident()?);
            while self.eat(&Token::Comma) {
                columns.push(self.ident()?);
            }
            self.expect(Token::RParen)?;
        }
        let source = if self.eat_kw(Keyword::Values) {
            let mut rows = vec![self.value_row()?];
            while self.eat(&Token::Comma) {
                rows.push(self.value_row()?);
            }
            InsertSource::Values(rows)
        } else if self.peek() == &Token::Keyword(Keyword::Select) {
            InsertSource::Select(Box::new(self.select()?))
        } else if self.peek() == &Token::LParen && self.peek_at(1) == &Token::Keyword(Keyword::Select) {
            self.advance();
            let sub = self.select()?;
            self.expect(Token::RParen)?;
            InsertSource::Select(Box::new(sub))
        } else {
            return Err(self.unexpected(&["VALUES", "SELECT"]));
        };
        Ok(InsertQuery { table, columns, source })
    }

    fn value_row(&mut self) -> PResult<Vec<Expr>> {
        self.expect(Token::LParen)?;
        let saved = std::mem::replace(&mut self.in_predicate, true);
        let mut row = Vec::new();
        let result = (|| {
            row.push(self.expr()?);
            while self.eat(&Token::Comma) {
                row.push(self.expr()?);
            }
            self.expect(Token::RParen)
        })();
        self.in_predicate = saved;
        result.map(|_| row)
    }

    fn delete(&mut self) -> PResult<DeleteQuery> {
        self.expect_kw(Keyword::Delete)?;
        self.expect_kw(Keyword::From)?;
        let table = self.ident()?;
        let selection = if self.eat_kw(Keyword::Where) { Some(self.where_clause()?) } else { None };
        Ok(DeleteQuery { table, selection })
    }

    fn create_table(&mut self) -> PResult<CreateTable> {
        self.expect_kw(Keyword::Create)?;
        self.expect_kw(Keyword::Table)?;
        let name = self.ident()?;
        self.expect(Token::LParen)?;
        let mut columns = Vec::new();
        let mut primary_key = Vec::new();
        loop {
            if self.eat_kw(Keyword::Primary) {
                if self.ident().ok().as_deref() != Some("key") {
                    return Err(self.unexpected(&["KEY"]));
                }
                self.expect(Token::LParen)?;
                primary_key.push(self.ident()?);
                while self.eat(&Token::Comma) {
                    primary_key.push(self.ident()?);
                }
                self.expect(Token::RParen)?;
            } else {
                let col = self.ident()?;
                let ty = match self.peek().clone() {
                    Token::Ident(t) => {
                        self.advance();
                        t
                    }
                    Token::Keyword(k) => {
                        self.advance();
                        k.to_string().to_lowercase()
                    }
                    _ => return Err(self.unexpected(&["column type"])),
                };
                // DECIMAL(15,2) and friends: precision is accepted and ignored.
                if self.eat(&Token::LParen) {
                    while !matches!(self.peek(), Token::RParen | Token::Eof) {
                        self.advance();
                    }
                    self.expect(Token::RParen)?;
                }
                columns.push((col, ty));
            }
            if !self.eat(&Token::Comma) {
                break;
            }
        }
        self.expect(Token::RParen)?;
        Ok(CreateTable { name, columns, primary_key })
    }
}

fn number_literal(text: &str, position: usize) -> PResult<Literal> {
    if !text.contains('.') {
        if let Ok(v) = text.parse::<i64>() {
            return Ok(Literal::Integer(v));
        }
    }
    text.parse::<Decimal>()
        .map(Literal::Decimal)
        .map_err(|_| ParseError::syntax(position, vec!["number".into()], text.to_string()))
}

fn farthest(a: ParseError, b: ParseError) -> ParseError {
    match (&a, &b) {
        (ParseError::Unsupported { .. }, _) => a,
        (_, ParseError::Unsupported { .. }) => b,
        _ if a.position() >= b.position() => a,
        _ => b,
    }
}
