//! Scalar expressions, predicates and their evaluation over rows.
//!
//! Parsed expressions refer to columns by name. Binding them against a
//! schema resolves names to ordinals and type-checks the tree once, so that
//! evaluation only has to deal with runtime failures (overflow, division by
//! zero).

use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use crate::error::{CoreError, Result};
use crate::value::{Column, ColumnType, Row, Schema, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
        }
    }

    pub fn precedence(self) -> u8 {
        match self {
            BinaryOp::Add | BinaryOp::Sub => 1,
            BinaryOp::Mul | BinaryOp::Div => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }

    fn holds(self, ord: Ordering) -> bool {
        match self {
            CmpOp::Eq => ord == Ordering::Equal,
            CmpOp::Ne => ord != Ordering::Equal,
            CmpOp::Lt => ord == Ordering::Less,
            CmpOp::Le => ord != Ordering::Greater,
            CmpOp::Gt => ord == Ordering::Greater,
            CmpOp::Ge => ord != Ordering::Less,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Column(String),
    Literal(Value),
    Neg(Box<Expr>),
    Binary {
        op: BinaryOp,
        left: Box<Expr>,
        right: Box<Expr>,
    },
}

impl Expr {
    pub fn column(name: impl Into<String>) -> Self {
        Expr::Column(name.into())
    }

    pub fn lit(value: Value) -> Self {
        Expr::Literal(value)
    }

    pub fn binary(op: BinaryOp, left: Expr, right: Expr) -> Self {
        Expr::Binary {
            op,
            left: Box::new(left),
            right: Box::new(right),
        }
    }

    /// Binding strength used by the printer: literals and columns bind
    /// tightest.
    fn precedence(&self) -> u8 {
        match self {
            Expr::Binary { op, .. } => op.precedence(),
            Expr::Neg(_) => 3,
            Expr::Column(_) | Expr::Literal(_) => 4,
        }
    }

    pub fn bind(&self, schema: &Schema) -> Result<BoundExpr> {
        let (expr, _) = self.bind_typed(schema)?;
        Ok(expr)
    }

    /// Binds and infers the result type; `None` means the expression is
    /// always null.
    fn bind_typed(&self, schema: &Schema) -> Result<(BoundExpr, Option<ColumnType>)> {
        match self {
            Expr::Column(name) => {
                let i = schema.resolve(name)?;
                Ok((BoundExpr::Column(i), Some(schema.columns()[i].ty)))
            }
            Expr::Literal(v) => Ok((BoundExpr::Literal(v.clone()), v.column_type())),
            Expr::Neg(inner) => {
                let (e, ty) = inner.bind_typed(schema)?;
                if let Some(t) = ty.filter(|t| !t.is_numeric()) {
                    return Err(CoreError::Type(format!("cannot negate {t}")));
                }
                Ok((BoundExpr::Neg(Box::new(e)), ty))
            }
            Expr::Binary { op, left, right } => {
                let (l, lt) = left.bind_typed(schema)?;
                let (r, rt) = right.bind_typed(schema)?;
                for t in [lt, rt].into_iter().flatten() {
                    if !t.is_numeric() {
                        return Err(CoreError::Type(format!(
                            "operator {} is not defined for {t}",
                            op.symbol()
                        )));
                    }
                }
                let ty = match (lt, rt) {
                    (Some(ColumnType::Int64), Some(ColumnType::Int64)) => Some(ColumnType::Int64),
                    (Some(_), Some(_)) => Some(ColumnType::Float64),
                    _ => None,
                };
                Ok((
                    BoundExpr::Binary {
                        op: *op,
                        left: Box::new(l),
                        right: Box::new(r),
                    },
                    ty,
                ))
            }
        }
    }

    fn fmt_operand(&self, f: &mut fmt::Formatter<'_>, parens: bool) -> fmt::Result {
        if parens {
            write!(f, "({self})")
        } else {
            write!(f, "{self}")
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Column(name) => f.write_str(name),
            Expr::Literal(v) => v.write_literal(f),
            Expr::Neg(inner) => {
                f.write_str("-")?;
                let bare = match inner.as_ref() {
                    Expr::Column(_) => true,
                    Expr::Literal(Value::Int(i)) => *i >= 0,
                    Expr::Literal(Value::Float(x)) => x.is_sign_positive(),
                    Expr::Literal(_) => true,
                    _ => false,
                };
                inner.fmt_operand(f, !bare)
            }
            Expr::Binary { op, left, right } => {
                let p = op.precedence();
                left.fmt_operand(f, left.precedence() < p)?;
                write!(f, " {} ", op.symbol())?;
                right.fmt_operand(f, right.precedence() <= p)
            }
        }
    }
}

/// Expression with column references resolved to ordinals.
#[derive(Debug, Clone, PartialEq)]
pub enum BoundExpr {
    Column(usize),
    Literal(Value),
    Neg(Box<BoundExpr>),
    Binary {
        op: BinaryOp,
        left: Box<BoundExpr>,
        right: Box<BoundExpr>,
    },
}

impl BoundExpr {
    pub fn eval(&self, row: &Row) -> Result<Value> {
        match self {
            BoundExpr::Column(i) => Ok(row[*i].clone()),
            BoundExpr::Literal(v) => Ok(v.clone()),
            BoundExpr::Neg(inner) => match inner.eval(row)? {
                Value::Int(i) => i
                    .checked_neg()
                    .map(Value::Int)
                    .ok_or_else(|| CoreError::Eval("integer overflow in negation".into())),
                Value::Float(x) => Ok(Value::Float(-x)),
                Value::Null => Ok(Value::Null),
                v => Err(CoreError::Eval(format!("cannot negate {}", v.type_name()))),
            },
            BoundExpr::Binary { op, left, right } => {
                arith(*op, left.eval(row)?, right.eval(row)?)
            }
        }
    }
}

fn arith(op: BinaryOp, l: Value, r: Value) -> Result<Value> {
    let overflow = || CoreError::Eval(format!("integer overflow in {}", op.symbol()));
    match (l, r) {
        (Value::Null, _) | (_, Value::Null) => Ok(Value::Null),
        (Value::Int(a), Value::Int(b)) => {
            let v = match op {
                BinaryOp::Add => a.checked_add(b),
                BinaryOp::Sub => a.checked_sub(b),
                BinaryOp::Mul => a.checked_mul(b),
                BinaryOp::Div => {
                    if b == 0 {
                        return Err(CoreError::Eval("division by zero".into()));
                    }
                    a.checked_div(b)
                }
            };
            v.map(Value::Int).ok_or_else(overflow)
        }
        (l, r) => {
            let (Some(a), Some(b)) = (as_f64(&l), as_f64(&r)) else {
                return Err(CoreError::Eval(format!(
                    "operator {} is not defined for {} and {}",
                    op.symbol(),
                    l.type_name(),
                    r.type_name()
                )));
            };
            let v = match op {
                BinaryOp::Add => a + b,
                BinaryOp::Sub => a - b,
                BinaryOp::Mul => a * b,
                BinaryOp::Div => {
                    if b == 0.0 {
                        return Err(CoreError::Eval("division by zero".into()));
                    }
                    a / b
                }
            };
            Ok(Value::Float(v))
        }
    }
}

fn as_f64(v: &Value) -> Option<f64> {
    match v {
        Value::Int(i) => Some(*i as f64),
        Value::Float(x) => Some(*x),
        _ => None,
    }
}

/// Compares two values. `None` when either side is null or the types are not
/// comparable; such comparisons are never true.
pub fn compare(l: &Value, r: &Value) -> Option<Ordering> {
    match (l, r) {
        (Value::Int(a), Value::Int(b)) => Some(a.cmp(b)),
        (Value::Str(a), Value::Str(b)) => Some(a.cmp(b)),
        (Value::Bool(a), Value::Bool(b)) => Some(a.cmp(b)),
        _ => as_f64(l)?.partial_cmp(&as_f64(r)?),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub left: Expr,
    pub op: CmpOp,
    pub right: Expr,
}

impl fmt::Display for Comparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.left, self.op.symbol(), self.right)
    }
}

/// Disjunction of conjunctions of comparisons: `c AND c OR c AND c ...`.
#[derive(Debug, Clone, PartialEq)]
pub struct Predicate {
    pub any: Vec<Vec<Comparison>>,
}

impl Predicate {
    pub fn single(c: Comparison) -> Self {
        Predicate {
            any: alloc::vec![alloc::vec![c]],
        }
    }

    pub fn bind(&self, schema: &Schema) -> Result<BoundPredicate> {
        let any = self
            .any
            .iter()
            .map(|conj| {
                conj.iter()
                    .map(|c| bind_comparison(c, schema))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(BoundPredicate { any })
    }
}

fn bind_comparison(c: &Comparison, schema: &Schema) -> Result<BoundComparison> {
    let (left, lt) = c.left.bind_typed(schema)?;
    let (right, rt) = c.right.bind_typed(schema)?;
    if let (Some(a), Some(b)) = (lt, rt) {
        if a != b && !(a.is_numeric() && b.is_numeric()) {
            return Err(CoreError::Type(format!("cannot compare {a} with {b}")));
        }
    }
    Ok(BoundComparison {
        left,
        op: c.op,
        right,
    })
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, conj) in self.any.iter().enumerate() {
            if i > 0 {
                f.write_str(" OR ")?;
            }
            for (j, c) in conj.iter().enumerate() {
                if j > 0 {
                    f.write_str(" AND ")?;
                }
                write!(f, "{c}")?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundComparison {
    left: BoundExpr,
    op: CmpOp,
    right: BoundExpr,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundPredicate {
    any: Vec<Vec<BoundComparison>>,
}

impl BoundPredicate {
    pub fn matches(&self, row: &Row) -> Result<bool> {
        for conj in &self.any {
            let mut all = true;
            for c in conj {
                let l = c.left.eval(row)?;
                let r = c.right.eval(row)?;
                if !compare(&l, &r).is_some_and(|o| c.op.holds(o)) {
                    all = false;
                    break;
                }
            }
            if all {
                return Ok(true);
            }
        }
        Ok(false)
    }
}

/// `column = expr` in an UPDATE.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub column: String,
    pub value: Expr,
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = {}", self.column, self.value)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundAssignment {
    pub ordinal: usize,
    column: Column,
    value: BoundExpr,
}

impl BoundAssignment {
    /// Evaluates the new value, converted to the column type.
    pub fn eval(&self, row: &Row) -> Result<Value> {
        self.value.eval(row)?.coerce_to(&self.column)
    }
}

/// Binds a list of assignments. Every target must exist, appear once, and
/// accept the expression's type.
pub fn bind_assignments(assignments: &[Assignment], schema: &Schema) -> Result<Vec<BoundAssignment>> {
    if assignments.is_empty() {
        return Err(CoreError::Type("UPDATE needs at least one assignment".into()));
    }
    let mut out: Vec<BoundAssignment> = Vec::with_capacity(assignments.len());
    for a in assignments {
        let ordinal = schema.resolve(&a.column)?;
        if out.iter().any(|b| b.ordinal == ordinal) {
            return Err(CoreError::Type(format!(
                "column `{}` assigned more than once",
                a.column
            )));
        }
        let column = schema.columns()[ordinal].clone();
        let (value, ty) = a.value.bind_typed(schema)?;
        let fits = match ty {
            None => true,
            Some(t) => t == column.ty || (t == ColumnType::Int64 && column.ty == ColumnType::Float64),
        };
        if !fits {
            return Err(CoreError::TypeMismatch {
                column: column.name.clone(),
                expected: column.ty,
                found: ty.map_or("null", ColumnType::name),
            });
        }
        out.push(BoundAssignment {
            ordinal,
            column,
            value,
        });
    }
    Ok(out)
}
