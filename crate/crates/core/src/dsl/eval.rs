use std::collections::HashMap;
use std::sync::Arc;

use thiserror::Error;

use super::ast::{BinaryOp, Expr, ExprKind, Function};
use crate::Scalar;

/// Largest number of terms a `sum` may expand to.
pub const MAX_SUM_TERMS: i64 = 1_000_000;

/// Value of a symbol during evaluation.
#[derive(Debug, Clone)]
pub enum Binding<T> {
    Constant(T),
    /// One value per absolute sample index.
    Sampled(Arc<[T]>),
    /// One value per symbol, held for `samples_per_symbol` samples.
    PerSymbol {
        values: Arc<[T]>,
        samples_per_symbol: usize,
    },
}

impl<T: Scalar> Binding<T> {
    fn fill(&self, name: &str, grid: &TimeGrid<T>) -> Result<Vec<T>, EvalError> {
        let end = grid.start + grid.len;
        match self {
            Binding::Constant(v) => Ok(vec![*v; grid.len]),
            Binding::Sampled(values) => {
                if values.len() < end {
                    return Err(EvalError::BindingTooShort {
                        name: name.to_string(),
                        needed: end,
                        available: values.len(),
                    });
                }
                Ok(values[grid.start..end].to_vec())
            }
            Binding::PerSymbol {
                values,
                samples_per_symbol,
            } => {
                let sps = (*samples_per_symbol).max(1);
                let needed = end.div_ceil(sps);
                if values.len() < needed {
                    return Err(EvalError::BindingTooShort {
                        name: name.to_string(),
                        needed,
                        available: values.len(),
                    });
                }
                Ok((grid.start..end).map(|n| values[n / sps]).collect())
            }
        }
    }
}

/// Symbol bindings for evaluation. `t` and `pi` are built in.
#[derive(Debug, Clone, Default)]
pub struct EvaluationContext<T> {
    bindings: HashMap<String, Binding<T>>,
}

impl<T: Scalar> EvaluationContext<T> {
    pub fn new() -> Self {
        Self {
            bindings: HashMap::new(),
        }
    }

    pub fn bind(&mut self, name: impl Into<String>, binding: Binding<T>) -> &mut Self {
        self.bindings.insert(name.into(), binding);
        self
    }

    pub fn constant(&mut self, name: impl Into<String>, value: T) -> &mut Self {
        self.bind(name, Binding::Constant(value))
    }

    pub fn get(&self, name: &str) -> Option<&Binding<T>> {
        self.bindings.get(name)
    }
}

/// Uniform sampling instants `(start + k) / sample_rate` for `k < len`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid<T> {
    pub sample_rate: T,
    pub start: usize,
    pub len: usize,
}

impl<T: Scalar> TimeGrid<T> {
    pub fn new(sample_rate: T, len: usize) -> Self {
        Self {
            sample_rate,
            start: 0,
            len,
        }
    }

    pub fn segment(sample_rate: T, start: usize, len: usize) -> Self {
        Self {
            sample_rate,
            start,
            len,
        }
    }

    pub fn time(&self, k: usize) -> T {
        T::from_usize_lossy(self.start + k) / self.sample_rate
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DivisionGuard<T> {
    /// Quotients with `|denominator| < epsilon` evaluate to zero.
    Enabled { epsilon: T },
    Disabled,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalOptions<T> {
    pub guard: DivisionGuard<T>,
}

impl<T: Scalar> Default for EvalOptions<T> {
    fn default() -> Self {
        Self {
            guard: DivisionGuard::Enabled {
                epsilon: T::lit(1e-12),
            },
        }
    }
}

impl<T: Scalar> EvalOptions<T> {
    pub fn unguarded() -> Self {
        Self {
            guard: DivisionGuard::Disabled,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation<T> {
    pub samples: Vec<T>,
    /// Number of sample-level divisions replaced by zero.
    pub guard_count: usize,
    /// Present when some output samples were non-finite and were zeroed.
    pub invalid_mask: Option<Vec<bool>>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("time grid needs at least 2 samples, got {0}")]
    GridTooShort(usize),
    #[error("sample rate must be positive and finite")]
    BadSampleRate,
    #[error("symbol '{0}' has no binding")]
    UnboundSymbol(String),
    #[error("binding for '{name}' has {available} values, {needed} needed")]
    BindingTooShort {
        name: String,
        needed: usize,
        available: usize,
    },
    #[error("sum bounds must be constant over time")]
    SumBoundNotConstant,
    #[error("sum bound {0} is not an integer")]
    SumBoundNotInteger(f64),
    #[error("sum expands to more than {MAX_SUM_TERMS} terms")]
    SumTooLarge,
    #[error("integral segment starts at sample {got}, expected {expected}")]
    NonContiguousSegment { expected: usize, got: usize },
    #[error("non-finite value at sample {index}")]
    NonFinite { index: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Carry<T> {
    next_index: usize,
    accumulated: T,
    last_integrand: T,
}

/// Running-integral state carried between consecutive segments.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct IntegralState<T> {
    carries: Vec<Option<Carry<T>>>,
}

impl<T: Scalar> IntegralState<T> {
    pub fn new() -> Self {
        Self {
            carries: Vec::new(),
        }
    }

    fn is_fresh(&self) -> bool {
        self.carries.is_empty()
    }
}

/// Evaluate `expr` sample-by-sample over a complete grid starting at t = 0.
pub fn evaluate<T: Scalar>(
    expr: &Expr,
    ctx: &EvaluationContext<T>,
    grid: &TimeGrid<T>,
    opts: &EvalOptions<T>,
) -> Result<Evaluation<T>, EvalError> {
    if grid.len < 2 {
        return Err(EvalError::GridTooShort(grid.len));
    }
    evaluate_segment(expr, ctx, grid, opts, &mut IntegralState::new())
}

/// Evaluate one segment of a longer grid, continuing running integrals
/// from `state`. Segments passed with the same state must be contiguous.
pub fn evaluate_segment<T: Scalar>(
    expr: &Expr,
    ctx: &EvaluationContext<T>,
    grid: &TimeGrid<T>,
    opts: &EvalOptions<T>,
    state: &mut IntegralState<T>,
) -> Result<Evaluation<T>, EvalError> {
    if !(grid.sample_rate > T::zero() && grid.sample_rate.is_finite()) {
        return Err(EvalError::BadSampleRate);
    }
    if grid.start > 0 && state.is_fresh() && expr.contains_integral() {
        // integrals run from t = 0, so replay the prefix to seed the state
        let prefix = TimeGrid::segment(grid.sample_rate, 0, grid.start);
        evaluate_segment(expr, ctx, &prefix, opts, state)?;
    }
    let mut ev = Evaluator {
        ctx,
        grid,
        opts,
        state,
        instance: 0,
        guard_count: 0,
        locals: Vec::new(),
    };
    let mut samples = ev.node(expr)?;
    let guard_count = ev.guard_count;

    let mut invalid_mask = None;
    if let Some(first_bad) = samples.iter().position(|v| !v.is_finite()) {
        match opts.guard {
            DivisionGuard::Disabled => {
                return Err(EvalError::NonFinite {
                    index: grid.start + first_bad,
                })
            }
            DivisionGuard::Enabled { .. } => {
                let mask: Vec<bool> = samples.iter().map(|v| !v.is_finite()).collect();
                for (v, bad) in samples.iter_mut().zip(&mask) {
                    if *bad {
                        *v = T::zero();
                    }
                }
                invalid_mask = Some(mask);
            }
        }
    }
    Ok(Evaluation {
        samples,
        guard_count,
        invalid_mask,
    })
}

struct Evaluator<'a, T> {
    ctx: &'a EvaluationContext<T>,
    grid: &'a TimeGrid<T>,
    opts: &'a EvalOptions<T>,
    state: &'a mut IntegralState<T>,
    instance: usize,
    guard_count: usize,
    locals: Vec<(String, T)>,
}

impl<T: Scalar> Evaluator<'_, T> {
    fn node(&mut self, e: &Expr) -> Result<Vec<T>, EvalError> {
        let len = self.grid.len;
        match &e.kind {
            ExprKind::Constant(v) => Ok(vec![T::lit(*v); len]),
            ExprKind::Symbol(name) => self.symbol(name),
            ExprKind::Neg(inner) => {
                let mut v = self.node(inner)?;
                v.iter_mut().for_each(|x| *x = -*x);
                Ok(v)
            }
            ExprKind::Binary { op, lhs, rhs } => {
                let mut a = self.node(lhs)?;
                let b = self.node(rhs)?;
                match op {
                    BinaryOp::Add => a.iter_mut().zip(&b).for_each(|(x, y)| *x += *y),
                    BinaryOp::Sub => a.iter_mut().zip(&b).for_each(|(x, y)| *x -= *y),
                    BinaryOp::Mul => a.iter_mut().zip(&b).for_each(|(x, y)| *x *= *y),
                    BinaryOp::Div => match self.opts.guard {
                        DivisionGuard::Enabled { epsilon } => {
                            for (x, y) in a.iter_mut().zip(&b) {
                                if y.abs() < epsilon {
                                    *x = T::zero();
                                    self.guard_count += 1;
                                } else {
                                    *x /= *y;
                                }
                            }
                        }
                        DivisionGuard::Disabled => {
                            a.iter_mut().zip(&b).for_each(|(x, y)| *x /= *y)
                        }
                    },
                }
                Ok(a)
            }
            ExprKind::Pow { base, exponent } => {
                let mut a = self.node(base)?;
                let b = self.node(exponent)?;
                a.iter_mut().zip(&b).for_each(|(x, y)| *x = x.powf(*y));
                Ok(a)
            }
            ExprKind::Call { func, arg } => {
                let mut v = self.node(arg)?;
                match func {
                    Function::Sin => v.iter_mut().for_each(|x| *x = x.sin()),
                    Function::Cos => v.iter_mut().for_each(|x| *x = x.cos()),
                }
                Ok(v)
            }
            ExprKind::Integral { integrand, .. } => {
                let id = self.instance;
                self.instance += 1;
                let f = self.node(integrand)?;
                self.integrate(id, f)
            }
            ExprKind::Sum {
                body,
                index,
                lower,
                upper,
            } => {
                let lo = self.bound(lower)?;
                let hi = self.bound(upper)?;
                if hi.saturating_sub(lo) >= MAX_SUM_TERMS {
                    return Err(EvalError::SumTooLarge);
                }
                let mut acc = vec![T::zero(); len];
                for i in lo..=hi {
                    let value = T::from_i64(i).expect("sum index fits scalar");
                    self.locals.push((index.clone(), value));
                    let term = self.node(body);
                    self.locals.pop();
                    acc.iter_mut().zip(&term?).for_each(|(x, y)| *x += *y);
                }
                Ok(acc)
            }
        }
    }

    fn symbol(&self, name: &str) -> Result<Vec<T>, EvalError> {
        if let Some((_, v)) = self.locals.iter().rev().find(|(n, _)| n == name) {
            return Ok(vec![*v; self.grid.len]);
        }
        match name {
            "t" => Ok((0..self.grid.len).map(|k| self.grid.time(k)).collect()),
            "pi" => Ok(vec![T::PI(); self.grid.len]),
            _ => self
                .ctx
                .get(name)
                .ok_or_else(|| EvalError::UnboundSymbol(name.to_string()))?
                .fill(name, self.grid),
        }
    }

    fn bound(&mut self, e: &Expr) -> Result<i64, EvalError> {
        let v = self.node(e)?;
        let first = v[0];
        if v.iter().any(|x| *x != first) {
            return Err(EvalError::SumBoundNotConstant);
        }
        let f = first.as_f64();
        let r = f.round();
        if !f.is_finite() || (f - r).abs() > 1e-9 {
            return Err(EvalError::SumBoundNotInteger(f));
        }
        Ok(r as i64)
    }

    /// Cumulative trapezoid with zero initial value at t = 0.
    fn integrate(&mut self, id: usize, f: Vec<T>) -> Result<Vec<T>, EvalError> {
        if self.state.carries.len() <= id {
            self.state.carries.resize(id + 1, None);
        }
        let (mut acc, mut prev) = match self.state.carries[id] {
            Some(c) => {
                if c.next_index != self.grid.start {
                    return Err(EvalError::NonContiguousSegment {
                        expected: c.next_index,
                        got: self.grid.start,
                    });
                }
                (c.accumulated, Some(c.last_integrand))
            }
            None if self.grid.start == 0 => (T::zero(), None),
            None => {
                return Err(EvalError::NonContiguousSegment {
                    expected: 0,
                    got: self.grid.start,
                })
            }
        };
        let half_dt = T::lit(0.5) / self.grid.sample_rate;
        let mut out = Vec::with_capacity(f.len());
        for &x in &f {
            if let Some(p) = prev {
                acc += (p + x) * half_dt;
            }
            out.push(acc);
            prev = Some(x);
        }
        if let Some(last) = prev {
            self.state.carries[id] = Some(Carry {
                next_index: self.grid.start + f.len(),
                accumulated: acc,
                last_integrand: last,
            });
        }
        Ok(out)
    }
}
