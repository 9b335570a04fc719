//! Real-valued functions on metric spaces.

use std::sync::Arc;

use twofloat::TwoFloat;

use crate::error::{domain, Error, Result};
use crate::nets::build_hierarchy;
use crate::space::{MetricSpace, Point};
use crate::tvdw::{terms_for_tol, TWFunction};

/// A function `X -> R` evaluated in double-double precision.
pub trait ScalarFn: Send + Sync {
    fn space(&self) -> &Arc<MetricSpace>;
    fn value(&self, x: &Point) -> Result<TwoFloat>;
    fn describe(&self) -> String;
}

#[derive(Clone, Debug, PartialEq)]
pub enum BuiltinKind {
    Identity,
    Const(f64),
    Abs,
    Square,
    /// `d(·, center)`.
    DistTo(Point),
}

#[derive(Clone, Debug)]
pub struct Builtin {
    kind: BuiltinKind,
    space: Arc<MetricSpace>,
}

impl Builtin {
    pub fn new(space: Arc<MetricSpace>, kind: BuiltinKind) -> Result<Self> {
        match &kind {
            BuiltinKind::Identity | BuiltinKind::Abs | BuiltinKind::Square if !space.is_line() => {
                return Err(domain("coordinate builtins need a one-dimensional space"))
            }
            BuiltinKind::DistTo(c) => space.validate(c)?,
            _ => {}
        }
        Ok(Builtin { kind, space })
    }

    pub fn kind(&self) -> &BuiltinKind {
        &self.kind
    }
}

impl ScalarFn for Builtin {
    fn space(&self) -> &Arc<MetricSpace> {
        &self.space
    }

    fn value(&self, x: &Point) -> Result<TwoFloat> {
        let coord = || {
            x.as_line()
                .ok_or_else(|| domain(format!("{x} is not a line point")))
        };
        Ok(match &self.kind {
            BuiltinKind::Identity => coord()?,
            BuiltinKind::Const(c) => TwoFloat::from(*c),
            BuiltinKind::Abs => coord()?.abs(),
            BuiltinKind::Square => {
                let t = coord()?;
                t * t
            }
            BuiltinKind::DistTo(c) => self.space.distance_dd(x, c)?,
        })
    }

    fn describe(&self) -> String {
        match &self.kind {
            BuiltinKind::Identity => "builtin:identity".into(),
            BuiltinKind::Const(c) => format!("builtin:const:{c}"),
            BuiltinKind::Abs => "builtin:abs".into(),
            BuiltinKind::Square => "builtin:square".into(),
            BuiltinKind::DistTo(c) => format!("builtin:dist:{c}"),
        }
    }
}

/// A TW function evaluated to a fixed absolute tolerance.
#[derive(Clone, Debug)]
pub struct TwEval {
    f: TWFunction,
    tol: f64,
}

impl TwEval {
    pub fn new(f: TWFunction, tol: f64) -> Result<Self> {
        terms_for_tol(f.a(), f.b(), tol, f.index_start())?;
        Ok(TwEval { f, tol })
    }

    pub fn function(&self) -> &TWFunction {
        &self.f
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }
}

impl ScalarFn for TwEval {
    fn space(&self) -> &Arc<MetricSpace> {
        self.f.space()
    }

    fn value(&self, x: &Point) -> Result<TwoFloat> {
        self.f.eval_dd(x, self.tol).map(|(v, _)| v)
    }

    fn describe(&self) -> String {
        format!("tw:{},{},{}", self.f.a(), self.f.b(), self.f.index_start())
    }
}

/// A TW function on `space`: the implicit lattice hierarchy when the space
/// allows it, otherwise a nested greedy hierarchy deep enough for `tol`.
pub fn tw_on_space(
    space: Arc<MetricSpace>,
    a: f64,
    b: f64,
    index_start: u32,
    tol: f64,
) -> Result<TWFunction> {
    match TWFunction::lattice(space.clone(), a, b, index_start) {
        Err(Error::Precondition(_)) => {
            let n = terms_for_tol(a, b, tol, index_start)?;
            let h = build_hierarchy(space, a, n.saturating_sub(1), true)?;
            TWFunction::new(a, b, Arc::new(h), index_start)
        }
        other => other,
    }
}

/// Parses `tw:a,b[,index_start]` or `builtin:identity|const[:c]|abs|square`.
pub fn parse_function(spec: &str, space: Arc<MetricSpace>, tol: f64) -> Result<Arc<dyn ScalarFn>> {
    let bad = || Error::Spec(format!("unrecognized function spec {spec:?}"));
    if let Some(rest) = spec.strip_prefix("tw:") {
        let nums = rest
            .split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<Result<Vec<_>>>()?;
        let (a, b, start) = match nums[..] {
            [a, b] => (a, b, 0),
            [a, b, s] if s == 0.0 || s == 1.0 => (a, b, s as u32),
            _ => return Err(bad()),
        };
        let f = tw_on_space(space, a, b, start, tol)?;
        return Ok(Arc::new(TwEval::new(f, tol)?));
    }
    let rest = spec.strip_prefix("builtin:").ok_or_else(bad)?;
    let kind = match rest {
        "identity" => BuiltinKind::Identity,
        "abs" => BuiltinKind::Abs,
        "square" => BuiltinKind::Square,
        "const" => BuiltinKind::Const(1.0),
        other => match other.strip_prefix("const:") {
            Some(c) => BuiltinKind::Const(c.parse().map_err(|_| bad())?),
            None => return Err(bad()),
        },
    };
    Ok(Arc::new(Builtin::new(space, kind)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins() {
        let s = Arc::new(MetricSpace::interval(-1.0, 1.0, 1e-4).unwrap());
        let x = Point::line(-0.5);
        let v = |spec: &str| {
            f64::from(
                parse_function(spec, s.clone(), 1e-9)
                    .unwrap()
                    .value(&x)
                    .unwrap(),
            )
        };
        assert_eq!(v("builtin:identity"), -0.5);
        assert_eq!(v("builtin:abs"), 0.5);
        assert_eq!(v("builtin:square"), 0.25);
        assert_eq!(v("builtin:const:3"), 3.0);
        let d = Builtin::new(s.clone(), BuiltinKind::DistTo(Point::line(0.25))).unwrap();
        assert_eq!(f64::from(d.value(&x).unwrap()), 0.75);
        assert!(parse_function("builtin:cos", s, 1e-9).is_err());
    }

    #[test]
    fn tw_specs() {
        let s = Arc::new(MetricSpace::unit_interval(1e-4).unwrap());
        let f = parse_function("tw:2,1", s.clone(), 1e-9).unwrap();
        let third = Point::Line(TwoFloat::from(1.0) / 3.0);
        assert!((f64::from(f.value(&third).unwrap()) - 2.0 / 3.0).abs() < 1e-9);
        assert_eq!(f.describe(), "tw:2,1,0");
        let c = Arc::new(MetricSpace::cantor(6).unwrap());
        let g = parse_function("tw:3,1", c, 1e-3).unwrap();
        assert!(f64::from(g.value(&Point::line(0.0)).unwrap()) == 0.0);
        assert!(parse_function("tw:1,2", s, 1e-9).is_err());
    }
}
